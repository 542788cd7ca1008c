//! Per-sample numerical certificates for the steps of the multi-particle
//! Wegner argument: the eigenvalue-derivative sum rule, the smooth-switch
//! domination of window counts, finite-rank interlacing under single-site
//! clamping and the telescoping bound for interlaced sequences.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{assemble, perturbation_info, site_multiplicity, InteractionSpec, PotentialField};
use crate::lattice::RectangularDomain;
use crate::quadrature::adaptive_simpson;
use crate::randomness::{clamp_site, Clamp, DensitySpec};
use crate::spectral::{counting_function, eigen_symmetric, eigenvalues_symmetric, spectral_distance, Spectrum};

/// Slack allowed on inequalities that hold exactly in exact arithmetic.
pub const INEQUALITY_SLACK: f64 = 1e-9;
/// Tolerance on the sum rule `Σ_{ξ∈Λ_1} ∂E_n/∂v(ξ) = K`.
pub const SUM_RULE_TOL: f64 = 1e-9;
/// Tolerance on Feynman–Hellmann vs central differences.
pub const FH_FD_TOL: f64 = 1e-6;
/// Tolerance on `φ(b) − φ(a) = ∫ φ'` evaluated by quadrature.
pub const FTC_TOL: f64 = 1e-6;
/// Absolute target of the per-eigenvalue quadrature in [`chain_check`].
pub const CHAIN_QUAD_TOL: f64 = 1e-8;

fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

fn bump_mass_from_left(s: f64) -> f64 {
    if s <= -1.0 {
        return 0.0;
    }
    adaptive_simpson(bump, -1.0, s.min(1.0), 1e-14, 4).expect("bump is smooth")
}

/// `C^∞` nondecreasing switch from 0 (for `t ≤ −κ`) to 1 (for `t ≥ κ`),
/// the normalized primitive of the standard mollifier bump rescaled to
/// `(−κ, κ)`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothSwitch {
    kappa: f64,
    half_mass: f64,
}

impl SmoothSwitch {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("switch half-width must be positive, got {kappa}")));
        }
        Ok(Self { kappa, half_mass: bump_mass_from_left(0.0) })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `Z = ∫_{−1}^{1} exp(−1/(1−u²)) du`.
    pub fn normalization(&self) -> f64 {
        2.0 * self.half_mass
    }

    pub fn value(&self, t: f64) -> f64 {
        let s = t / self.kappa;
        if s <= -1.0 {
            0.0
        } else if s >= 1.0 {
            1.0
        } else if s <= 0.0 {
            bump_mass_from_left(s) / self.normalization()
        } else {
            1.0 - bump_mass_from_left(-s) / self.normalization()
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        bump(t / self.kappa) / (self.kappa * self.normalization())
    }
}

pub fn smooth_switch(kappa: f64) -> Result<SmoothSwitch> {
    SmoothSwitch::new(kappa)
}

/// `∂E_n/∂v(ξ) = Σ_x |ψ_n(x)|² m_ξ(x)` with `m_ξ(x) = #{i : x_i = ξ}`.
pub fn fh_derivative(spectrum: &Spectrum, domain: &RectangularDomain, n: usize, xi: &[i64]) -> f64 {
    let m = site_multiplicity(domain, xi);
    fh_with_multiplicity(spectrum, n, &m)
}

fn fh_with_multiplicity(spectrum: &Spectrum, n: usize, m: &[f64]) -> f64 {
    spectrum
        .eigenvectors()
        .column(n)
        .iter()
        .zip(m)
        .map(|(p, w)| p * p * w)
        .sum()
}

/// Finite-difference settings for [`fd_derivative`].
#[derive(Debug, Clone, Copy)]
pub struct FdOptions {
    pub step: f64,
    /// Eigenvalues closer than this to a neighbour are not differentiated.
    pub gap_threshold: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { step: 1e-4, gap_threshold: 1e-3 }
    }
}

impl FdOptions {
    fn min_gap(&self) -> f64 {
        self.gap_threshold.max(10.0 * self.step)
    }
}

/// Distance from `E_n` to its nearest neighbours in an ascending list.
pub fn isolation_gap(eigenvalues: &[f64], n: usize) -> f64 {
    let below = if n > 0 { eigenvalues[n] - eigenvalues[n - 1] } else { f64::INFINITY };
    let above = eigenvalues.get(n + 1).map_or(f64::INFINITY, |e| e - eigenvalues[n]);
    below.min(above)
}

/// Central differences `(E_n(v + h e_ξ) − E_n(v − h e_ξ)) / 2h` for every
/// `n`; `None` where `E_n` is not isolated by at least the gap threshold.
pub fn fd_derivatives(
    domain: &RectangularDomain,
    v: &PotentialField,
    interaction: &InteractionSpec,
    xi: &[i64],
    opts: FdOptions,
) -> Result<Vec<Option<f64>>> {
    if opts.step.is_nan() || opts.step <= 0.0 {
        return Err(Error::InvalidArgument(format!("step must be positive, got {}", opts.step)));
    }
    let base = v.get(xi).ok_or_else(|| Error::MissingSite(xi.to_vec()))?;
    let h0 = assemble(domain, v, interaction)?;
    let e0 = eigenvalues_symmetric(&h0);
    let shifted = |delta: f64| -> Result<Vec<f64>> {
        let mut w = v.clone();
        w.set(xi, base + delta)?;
        Ok(eigenvalues_symmetric(&assemble(domain, &w, interaction)?))
    };
    let plus = shifted(opts.step)?;
    let minus = shifted(-opts.step)?;
    Ok((0..e0.len())
        .map(|n| {
            (isolation_gap(&e0, n) > opts.min_gap()).then(|| (plus[n] - minus[n]) / (2.0 * opts.step))
        })
        .collect())
}

/// Central-difference derivative of `E_n` in `v(ξ)`; refuses with
/// [`Error::Inapplicable`] when `E_n` is (nearly) degenerate.
pub fn fd_derivative(
    domain: &RectangularDomain,
    v: &PotentialField,
    interaction: &InteractionSpec,
    xi: &[i64],
    n: usize,
    opts: FdOptions,
) -> Result<f64> {
    let all = fd_derivatives(domain, v, interaction, xi, opts)?;
    match all.get(n) {
        Some(Some(d)) => Ok(*d),
        Some(None) => Err(Error::Inapplicable(format!(
            "E_{n} is closer than {} to a neighbouring eigenvalue",
            opts.min_gap()
        ))),
        None => Err(Error::InvalidArgument(format!("eigenvalue index {n} out of range"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma31Report {
    pub k: usize,
    /// `|Σ_{ξ∈Λ_1} ∂E_n/∂v(ξ) − K|` per eigenvalue index.
    pub deviations: Vec<f64>,
}

impl Lemma31Report {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_deviation() <= SUM_RULE_TOL
    }
}

/// Evaluates `Σ_{ξ∈Λ_1} ∂E_n/∂v(ξ)` through Feynman–Hellmann for every `n`
/// and compares with `K`. `Λ_1` is the rectangle of the first coordinate.
pub fn lemma31_check(domain: &RectangularDomain, v: &PotentialField, interaction: &InteractionSpec) -> Result<Lemma31Report> {
    let info = domain.regularity();
    if !info.is_regular {
        return Err(Error::NotRegular);
    }
    let spectrum = eigen_symmetric(&assemble(domain, v, interaction)?)?;
    let multiplicities: Vec<Vec<f64>> = domain
        .factor(0)
        .sites()
        .iter()
        .map(|xi| site_multiplicity(domain, xi))
        .collect();
    let k = info.k as f64;
    let deviations = (0..spectrum.dim())
        .map(|n| {
            let sum: f64 = multiplicities.iter().map(|m| fh_with_multiplicity(&spectrum, n, m)).sum();
            (sum - k).abs()
        })
        .collect();
    Ok(Lemma31Report { k: info.k, deviations })
}

#[derive(Debug, Clone, Serialize)]
pub struct InterlacingReport {
    /// `M = K|Λ|/|Λ_1|`.
    pub bound: usize,
    /// Exact rank of the clamping perturbation.
    pub rank: usize,
    /// Violations of `E_n(min) ≤ E_n(max)`.
    pub lower_violations: usize,
    /// Violations of `E_n(max) ≤ E_{n+M}(min)`.
    pub upper_violations: usize,
    /// Violations of the sharper `E_n(max) ≤ E_{n+rank}(min)`.
    pub rank_violations: usize,
    /// Indices `n` for which `n + M` runs past the spectrum (`E_{n+M} = +∞`).
    pub top_edge_terms: usize,
    pub min_lower_slack: f64,
    pub min_upper_slack: f64,
}

impl InterlacingReport {
    pub fn passed(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0 && self.rank_violations == 0
    }
}

/// Checks `a_n ≤ b_n ≤ a_{n+shift}` with `a_{n+shift} = +∞` past the end.
/// Returns `(lower violations, upper violations, top-edge terms, min lower
/// slack, min upper slack)`.
fn interlace(a: &[f64], b: &[f64], shift: usize, slack: f64) -> (usize, usize, usize, f64, f64) {
    let mut lower = 0;
    let mut upper = 0;
    let mut top = 0;
    let mut min_lo = f64::INFINITY;
    let mut min_hi = f64::INFINITY;
    for n in 0..a.len() {
        let lo = b[n] - a[n];
        min_lo = min_lo.min(lo);
        if lo < -slack {
            lower += 1;
        }
        match a.get(n + shift) {
            Some(&cap) => {
                let hi = cap - b[n];
                min_hi = min_hi.min(hi);
                if hi < -slack {
                    upper += 1;
                }
            }
            None => top += 1,
        }
    }
    (lower, upper, top, min_lo, min_hi)
}

/// Clamps `v(ξ)` to the support minimum and maximum and checks the
/// rank-`M` interlacing of the two spectra.
pub fn interlacing_check(
    domain: &RectangularDomain,
    v: &PotentialField,
    interaction: &InteractionSpec,
    density: &DensitySpec,
    xi: &[i64],
) -> Result<InterlacingReport> {
    let pert = perturbation_info(domain, xi)?;
    let lo = eigenvalues_symmetric(&assemble(domain, &clamp_site(v, xi, Clamp::Min, density)?, interaction)?);
    let hi = eigenvalues_symmetric(&assemble(domain, &clamp_site(v, xi, Clamp::Max, density)?, interaction)?);
    Ok(interlacing_report(&lo, &hi, pert.bound, pert.rank))
}

/// Interlacing bookkeeping for precomputed ascending spectra.
pub fn interlacing_report(lo: &[f64], hi: &[f64], bound: usize, rank: usize) -> InterlacingReport {
    let (lower_violations, upper_violations, top_edge_terms, min_lower_slack, min_upper_slack) =
        interlace(lo, hi, bound, INEQUALITY_SLACK);
    let (_, rank_violations, _, _, _) = interlace(lo, hi, rank, INEQUALITY_SLACK);
    InterlacingReport {
        bound,
        rank,
        lower_violations,
        upper_violations,
        rank_violations,
        top_edge_terms,
        min_lower_slack,
        min_upper_slack,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Lemma32Outcome {
    pub sum: f64,
    pub bound: usize,
    pub holds: bool,
}

/// `Σ_n (φ(b_n) − φ(a_n))` for nondecreasing `a ≤ b` with
/// `b_n ≤ a_{n+M}` (`a_{n+M} = +∞` past the end), compared with `M`.
/// A violated precondition is reported as [`Error::Inapplicable`].
pub fn lemma32_oracle(a: &[f64], b: &[f64], m: usize, phi: impl Fn(f64) -> f64) -> Result<Lemma32Outcome> {
    if a.len() != b.len() {
        return Err(Error::Inapplicable(format!("sequence lengths differ ({} vs {})", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Inapplicable("sequences contain NaN".into()));
    }
    if let Some(n) = a.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::Inapplicable(format!("a decreases at index {n}")));
    }
    if let Some(n) = b.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::Inapplicable(format!("b decreases at index {n}")));
    }
    for n in 0..a.len() {
        if a[n] > b[n] {
            return Err(Error::Inapplicable(format!("a_{n} > b_{n}")));
        }
        if let Some(&cap) = a.get(n + m) {
            if b[n] > cap {
                return Err(Error::Inapplicable(format!("b_{n} > a_{}", n + m)));
            }
        }
    }
    let sum: f64 = a.iter().zip(b).map(|(&x, &y)| phi(y) - phi(x)).sum();
    Ok(Lemma32Outcome { sum, bound: m, holds: sum <= m as f64 + INEQUALITY_SLACK })
}

/// One eigenvalue's contribution to the two smooth traces in [`chain_check`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainTerm {
    pub n: usize,
    /// `φ(E_n − E + 2κ) − φ(E_n − E − 2κ)`.
    pub switch_difference: f64,
    /// `∫_{−2κ}^{2κ} φ'(E_n − E + t) dt` by quadrature.
    pub integral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    /// `1{dist(σ(H), E) < κ}`.
    pub indicator: usize,
    /// `N(E + κ) − N(E − κ)`.
    pub counting_difference: usize,
    /// `tr χ_{(E−κ, E+κ]}(H)`, counted directly.
    pub window_trace: usize,
    /// `tr(φ(H − E + 2κ) − φ(H − E − 2κ))`.
    pub smooth_trace: f64,
    /// `∫_{−2κ}^{2κ} tr φ'(H − E + t) dt`.
    pub integral_trace: f64,
    /// Eigenvalues with a nonzero contribution.
    pub terms: Vec<ChainTerm>,
}

impl ChainReport {
    pub fn max_term_mismatch(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.switch_difference - t.integral).abs())
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.indicator <= self.counting_difference
            && self.counting_difference == self.window_trace
            && self.window_trace as f64 <= self.smooth_trace + INEQUALITY_SLACK
            && (self.smooth_trace - self.integral_trace).abs() <= FTC_TOL
            && self.max_term_mismatch() <= FTC_TOL
    }
}

/// Evaluates, for one spectrum, the chain
/// `1{dist < κ} ≤ N(E+κ) − N(E−κ) = tr χ ≤ tr(φ(·+2κ) − φ(·−2κ)) = ∫ tr φ'`.
pub fn chain_check(eigenvalues: &[f64], e: f64, kappa: f64, phi: &SmoothSwitch) -> Result<ChainReport> {
    if phi.kappa() != kappa {
        return Err(Error::InvalidArgument(format!(
            "switch half-width {} does not match κ = {kappa}",
            phi.kappa()
        )));
    }
    let indicator = usize::from(spectral_distance(eigenvalues, e) < kappa);
    let counting_difference = counting_function(eigenvalues, e + kappa) - counting_function(eigenvalues, e - kappa);
    let window_trace = eigenvalues.iter().filter(|&&x| e - kappa < x && x <= e + kappa).count();

    let contributing: Vec<usize> = (0..eigenvalues.len())
        .filter(|&n| (eigenvalues[n] - e).abs() < 3.0 * kappa)
        .collect();
    let tol = CHAIN_QUAD_TOL / contributing.len().max(1) as f64;
    let mut terms = Vec::with_capacity(contributing.len());
    for n in contributing {
        let shift = eigenvalues[n] - e;
        let switch_difference = phi.value(shift + 2.0 * kappa) - phi.value(shift - 2.0 * kappa);
        // φ'(shift + t) lives on t ∈ (−κ − shift, κ − shift)
        let lo = (-2.0 * kappa).max(-kappa - shift);
        let hi = (2.0 * kappa).min(kappa - shift);
        let integral = if lo < hi {
            adaptive_simpson(|t| phi.derivative(shift + t), lo, hi, tol, 8)?
        } else {
            0.0
        };
        terms.push(ChainTerm { n, switch_difference, integral });
    }
    Ok(ChainReport {
        indicator,
        counting_difference,
        window_trace,
        smooth_trace: terms.iter().map(|t| t.switch_difference).sum(),
        integral_trace: terms.iter().map(|t| t.integral).sum(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::InteractionSpec;
    use crate::lattice::Rectangle;
    use crate::randomness::sample_potential;

    fn iv(a: i64, b: i64) -> Rectangle {
        Rectangle::interval(a, b).unwrap()
    }

    // independent oracle: composite trapezoid
    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
        h * (0.5 * (f(a) + f(b)) + inner)
    }

    #[test]
    fn switch_shape() {
        for kappa in [1e-3, 0.25, 1.0, 7.0] {
            let phi = smooth_switch(kappa).unwrap();
            assert_eq!(phi.value(0.0), 0.5);
            assert_eq!(phi.value(-kappa), 0.0);
            assert_eq!(phi.value(kappa), 1.0);
            assert_eq!(phi.value(-3.0 * kappa), 0.0);
            assert_eq!(phi.derivative(kappa), 0.0);
            let mut prev = 0.0;
            for i in 0..=200 {
                let t = -1.2 * kappa + 2.4 * kappa * i as f64 / 200.0;
                let v = phi.value(t);
                assert!((0.0..=1.0).contains(&v));
                assert!(v >= prev - 1e-15);
                assert!(phi.derivative(t) >= 0.0);
                assert!((v + phi.value(-t) - 1.0).abs() < 1e-14);
                prev = v;
            }
            // trapezoid is spectrally accurate for a compactly supported smooth bump
            let mass = trapezoid(|t| phi.derivative(t), -kappa, kappa, 4000);
            assert!((mass - 1.0).abs() < 1e-8, "κ={kappa}: {mass}");
        }
        assert!(smooth_switch(0.0).is_err());
        assert!(smooth_switch(-1.0).is_err());
    }

    #[test]
    fn switch_normalization_matches_independent_quadrature() {
        let z = trapezoid(bump, -1.0, 1.0, 20_000);
        let phi = smooth_switch(1.0).unwrap();
        assert!((phi.normalization() - z).abs() < 1e-12);
        // derivative of value matches value of derivative
        for t in [-0.7, -0.2, 0.1, 0.55, 0.9] {
            let h = 1e-5;
            let fd = (phi.value(t + h) - phi.value(t - h)) / (2.0 * h);
            assert!((fd - phi.derivative(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn fh_single_particle_is_density() {
        let dom = RectangularDomain::power(iv(0, 4), 1).unwrap();
        let v = sample_potential(&dom, &DensitySpec::Uniform { a: 0.0, b: 1.0 }, 3);
        let s = eigen_symmetric(&assemble(&dom, &v, &InteractionSpec::None).unwrap()).unwrap();
        for n in 0..5 {
            let psi = s.eigenvector(n);
            assert!((fh_derivative(&s, &dom, n, &[2]) - psi[2] * psi[2]).abs() < 1e-15);
        }
    }

    #[test]
    fn fh_sums_to_particle_number_over_all_sites() {
        let dom = RectangularDomain::new(vec![iv(0, 2), iv(0, 2), iv(6, 7)]).unwrap();
        let v = sample_potential(&dom, &DensitySpec::Uniform { a: 0.0, b: 1.0 }, 8);
        let s = eigen_symmetric(&assemble(&dom, &v, &InteractionSpec::contact(0.5, 1)).unwrap()).unwrap();
        let sites = dom.union_sites();
        for n in 0..s.dim() {
            let total: f64 = sites.iter().map(|xi| fh_derivative(&s, &dom, n, xi)).sum();
            assert!((total - 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn fd_on_single_site() {
        let dom = RectangularDomain::power(iv(2, 2), 3).unwrap();
        let v = PotentialField::constant(&dom, 0.3).unwrap();
        let d = fd_derivative(&dom, &v, &InteractionSpec::None, &[2], 0, FdOptions::default()).unwrap();
        assert!((d - 3.0).abs() < 1e-9);
    }

    #[test]
    fn fd_refuses_degenerate_levels() {
        // two free particles on the same interval: E = λ_a + λ_b is doubly degenerate for a ≠ b
        let dom = RectangularDomain::power(iv(0, 2), 2).unwrap();
        let v = PotentialField::constant(&dom, 0.0).unwrap();
        let all = fd_derivatives(&dom, &v, &InteractionSpec::None, &[0], FdOptions::default()).unwrap();
        assert!(all.iter().any(Option::is_none));
        let n = all.iter().position(Option::is_none).unwrap();
        assert!(matches!(
            fd_derivative(&dom, &v, &InteractionSpec::None, &[0], n, FdOptions::default()),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn constant_shift_moves_every_level_by_n_c() {
        let dom = RectangularDomain::power(iv(0, 3), 2).unwrap();
        let dens = DensitySpec::Uniform { a: 0.0, b: 1.0 };
        let v = sample_potential(&dom, &dens, 21);
        let c = 0.37;
        let w = PotentialField::from_fn(&dom, |s| v.get(s).unwrap() + c).unwrap();
        let u = InteractionSpec::contact(1.0, 1);
        let e0 = eigenvalues_symmetric(&assemble(&dom, &v, &u).unwrap());
        let e1 = eigenvalues_symmetric(&assemble(&dom, &w, &u).unwrap());
        for (a, b) in e0.iter().zip(&e1) {
            assert!((b - a - 2.0 * c).abs() < 1e-12);
        }
    }

    #[test]
    fn sum_rule_examples() {
        let dens = DensitySpec::Uniform { a: 0.0, b: 1.0 };
        let all_equal = RectangularDomain::power(iv(0, 3), 3).unwrap();
        let r = lemma31_check(&all_equal, &sample_potential(&all_equal, &dens, 1), &InteractionSpec::contact(1.0, 1)).unwrap();
        assert_eq!(r.k, 3);
        assert!(r.passed(), "{}", r.max_deviation());

        let disjoint = RectangularDomain::new(vec![iv(0, 3), iv(10, 12)]).unwrap();
        let r = lemma31_check(&disjoint, &sample_potential(&disjoint, &dens, 2), &InteractionSpec::None).unwrap();
        assert_eq!(r.k, 1);
        assert!(r.passed());

        // degenerate spectrum: free particles, zero potential
        let zero = PotentialField::constant(&all_equal, 0.0).unwrap();
        assert!(lemma31_check(&all_equal, &zero, &InteractionSpec::None).unwrap().passed());

        let overlap = RectangularDomain::new(vec![iv(0, 3), iv(2, 5)]).unwrap();
        let v = PotentialField::constant(&overlap, 0.0).unwrap();
        assert!(matches!(lemma31_check(&overlap, &v, &InteractionSpec::None), Err(Error::NotRegular)));
    }

    #[test]
    fn rank_one_interlacing_single_particle() {
        let dom = RectangularDomain::power(iv(0, 5), 1).unwrap();
        let dens = DensitySpec::Uniform { a: 0.0, b: 1.0 };
        for seed in 0..10 {
            let v = sample_potential(&dom, &dens, seed);
            let r = interlacing_check(&dom, &v, &InteractionSpec::None, &dens, &[seed as i64 % 6]).unwrap();
            assert_eq!((r.bound, r.rank), (1, 1));
            assert_eq!(r.top_edge_terms, 1);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn interlacing_top_edge_convention() {
        // a violation hidden past the end of the spectrum must not count
        let lo = [0.0, 1.0, 2.0];
        let hi = [0.5, 1.5, 99.0];
        let r = interlacing_report(&lo, &hi, 1, 1);
        assert_eq!(r.top_edge_terms, 1);
        assert!(r.passed());
        let bad = interlacing_report(&lo, &[0.5, 2.5, 3.0], 1, 1);
        assert_eq!(bad.upper_violations, 1);
        let r = interlacing_report(&lo, &hi, 5, 5);
        assert_eq!(r.top_edge_terms, 3);
        let down = interlacing_report(&lo, &[-0.5, 1.5, 2.5], 1, 1);
        assert_eq!(down.lower_violations, 1);
    }

    #[test]
    fn interlaced_sum_examples() {
        let clamp01 = |t: f64| t.clamp(0.0, 1.0);
        let a = [0.0, 1.0, 2.0];
        let out = lemma32_oracle(&a, &a, 1, clamp01).unwrap();
        assert_eq!(out.sum, 0.0);
        assert!(out.holds);

        let out = lemma32_oracle(&a, &[0.5, 1.5, 2.5], 1, clamp01).unwrap();
        assert!((out.sum - 0.5).abs() < 1e-15);
        assert!(out.holds);

        // b_n = a_{n+M}, step at 2.5 → telescopes to exactly M
        let a = [0.0, 1.0, 2.0, 3.0, 4.0];
        let m = 2;
        let b = [2.0, 3.0, 4.0, 10.0, 11.0];
        let step = |t: f64| if t >= 2.5 { 1.0 } else { 0.0 };
        let out = lemma32_oracle(&a, &b, m, step).unwrap();
        assert_eq!(out.sum, 2.0);
        assert!(out.holds);
    }

    #[test]
    fn interlaced_sum_precondition_failures() {
        let id = |t: f64| t;
        assert!(matches!(lemma32_oracle(&[0.0, 1.0], &[0.0], 1, id), Err(Error::Inapplicable(_))));
        assert!(matches!(lemma32_oracle(&[1.0, 0.0], &[1.0, 1.0], 1, id), Err(Error::Inapplicable(_))));
        assert!(matches!(lemma32_oracle(&[0.0, 1.0], &[2.0, 3.0], 1, id), Err(Error::Inapplicable(_))));
        assert!(matches!(lemma32_oracle(&[0.0, 1.0], &[-1.0, 1.0], 1, id), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn chain_far_from_spectrum_is_all_zero() {
        let phi = smooth_switch(0.1).unwrap();
        let r = chain_check(&[-3.0, 0.0, 5.0], 1.0, 0.1, &phi).unwrap();
        assert_eq!((r.indicator, r.counting_difference, r.window_trace), (0, 0, 0));
        assert_eq!(r.smooth_trace, 0.0);
        assert_eq!(r.integral_trace, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn chain_with_eigenvalue_at_energy() {
        let kappa = 0.05;
        let phi = smooth_switch(kappa).unwrap();
        let r = chain_check(&[-1.0, 0.3, 2.0], 0.3, kappa, &phi).unwrap();
        assert_eq!((r.indicator, r.window_trace), (1, 1));
        assert_eq!(r.smooth_trace, 1.0);
        assert!((r.integral_trace - 1.0).abs() < 1e-6);
        assert!(r.passed());

        // eigenvalue partially inside the smooth region but outside the window
        let r = chain_check(&[0.3 + 1.5 * kappa], 0.3, kappa, &phi).unwrap();
        assert_eq!(r.window_trace, 0);
        assert!(r.smooth_trace > 0.0 && r.smooth_trace < 1.0);
        assert!((r.smooth_trace - r.integral_trace).abs() < 1e-6);
        assert!(r.passed());

        assert!(chain_check(&[0.0], 0.0, 0.2, &phi).is_err());
    }
}
