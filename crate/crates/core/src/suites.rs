//! Seeded randomized runs of the checks in [`crate::verify`].
//!
//! Each trial draws its own generator from `(seed, trial)`, trials fan out
//! over rayon and the per-trial outcomes are folded in trial order, so a
//! summary depends only on its inputs.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{assemble, InteractionSpec, PotentialField};
use crate::lattice::{Rectangle, RectangularDomain};
use crate::randomness::{mix_words, sample_potential_indexed, DensitySpec};
use crate::spectral::{eigen_symmetric, eigenvalues_symmetric};
use crate::verify::{
    chain_check, fd_derivatives, fh_derivative, interlacing_check, lemma32_oracle, lemma31_check, smooth_switch,
    FdOptions, FH_FD_TOL,
};

/// Pass/fail tally of one randomized suite.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub checked: usize,
    pub passed: usize,
    pub failed: usize,
    /// Cases where the check's precondition did not hold (skipped, not failed).
    pub inapplicable: usize,
    /// Largest deviation seen (suite-specific meaning).
    pub worst: f64,
    pub notes: BTreeMap<String, f64>,
}

impl SuiteSummary {
    fn new(name: &str) -> Self {
        Self { suite: name.to_string(), ..Default::default() }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0 && self.checked > 0
    }

    fn record(&mut self, pass: bool) {
        self.checked += 1;
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }

    fn note_min(&mut self, key: &str, value: f64) {
        let slot = self.notes.entry(key.to_string()).or_insert(value);
        *slot = slot.min(value);
    }

    fn note_add(&mut self, key: &str, value: f64) {
        *self.notes.entry(key.to_string()).or_insert(0.0) += value;
    }
}

/// Two particles on `[1, 6] ⊂ Z`, `|Λ| = 36`.
pub fn default_domain() -> RectangularDomain {
    RectangularDomain::power(Rectangle::interval(1, 6).expect("valid interval"), 2).expect("valid domain")
}

pub const DEFAULT_DENSITY: DensitySpec = DensitySpec::Uniform { a: 0.0, b: 1.0 };

/// Generator for trial `trial` of the stream `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_words([seed, trial, 0x5eed]))
}

/// Interaction family used by the randomized suites: `0` none, `1`
/// contact `g·1{r=0}`, `2` on-site plus nearest-neighbour pair potential.
pub fn trial_interaction(rng: &mut impl Rng, d: usize, variant: usize) -> InteractionSpec {
    match variant % 3 {
        0 => InteractionSpec::None,
        1 => InteractionSpec::contact(rng.random_range(0.25..2.0), d),
        _ => {
            let mut u = BTreeMap::new();
            u.insert(vec![0; d], rng.random_range(0.25..2.0));
            let g1 = rng.random_range(-1.0..1.0);
            for nu in 0..d {
                for s in [-1, 1] {
                    let mut r = vec![0; d];
                    r[nu] = s;
                    u.insert(r, g1);
                }
            }
            InteractionSpec::Pair { u, range: 1 }
        }
    }
}

fn random_rectangle(rng: &mut impl Rng, d: usize, offset: i64, max_side: i64) -> Rectangle {
    let lower: Vec<i64> = (0..d).map(|_| offset + rng.random_range(-1..=1)).collect();
    let upper = lower.iter().map(|l| l + rng.random_range(1..max_side)).collect();
    Rectangle::new(lower, upper).expect("sides are positive")
}

/// Random regular domain whose first class has `k` coordinates, plus zero
/// to two further classes placed far away, with the coordinates shuffled.
/// Sizes keep `|Λ|` in the low hundreds.
pub fn random_regular_domain(rng: &mut impl Rng, k: usize, d: usize) -> RectangularDomain {
    let max_side = match (d, k) {
        (1, 1) | (1, 2) => 5,
        (1, _) => 4,
        (_, 1) => 3,
        _ => 2,
    };
    let first = random_rectangle(rng, d, 0, max_side);
    let extra_classes = match k {
        1 => rng.random_range(1..=2),
        2 => rng.random_range(0..=1),
        _ => usize::from(d == 1 && rng.random_bool(0.3)),
    };
    let mut factors = vec![first.clone(); k];
    for c in 0..extra_classes {
        let rect = random_rectangle(rng, d, 20 * (c as i64 + 1), if d == 1 { 3 } else { 2 });
        let copies = if k == 1 && extra_classes == 1 { rng.random_range(1..=2) } else { 1 };
        factors.extend(std::iter::repeat_n(rect, copies));
    }
    // slot 0 keeps `first`, so the class of coordinate 1 still has k members
    factors[1..].shuffle(rng);
    RectangularDomain::new(factors).expect("same dimension everywhere")
}

/// One randomized configuration of the sum-rule suite, already in normal form.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub domain: RectangularDomain,
    pub potential: PotentialField,
    pub interaction: InteractionSpec,
    pub k: usize,
    pub d: usize,
    pub interacting: bool,
}

/// Trial `t` cycles `K ∈ {1,2,3}`, `d ∈ {1,2}` and interaction on/off.
pub fn random_trial_config(seed: u64, t: u64, density: &DensitySpec) -> TrialConfig {
    let mut rng = trial_rng(seed, t);
    let k = 1 + (t % 3) as usize;
    let d = 1 + ((t / 3) % 2) as usize;
    let interacting = (t / 6) % 2 == 1;
    let raw = random_regular_domain(&mut rng, k, d);
    let variant = if interacting { 1 + (t / 12) as usize % 2 } else { 0 };
    let interaction = trial_interaction(&mut rng, d, variant);
    let (domain, perm) = raw.normal_form().expect("generated domains are regular");
    let interaction = interaction.permuted(&perm, d).expect("valid permutation");
    let potential = sample_potential_indexed(&domain, density, seed, t);
    TrialConfig { domain, potential, interaction, k, d, interacting }
}

/// Where a suite takes its domains from.
#[derive(Debug, Clone)]
pub enum DomainSource {
    Fixed(RectangularDomain),
    /// Fresh random regular domain per trial (see [`random_trial_config`]).
    RandomRegular,
}

fn fixed_trial(domain: &RectangularDomain, density: &DensitySpec, seed: u64, t: u64) -> Result<TrialConfig> {
    let (nf, _) = domain.normal_form()?;
    let mut rng = trial_rng(seed, t);
    let interaction = trial_interaction(&mut rng, nf.spatial_dim(), t as usize);
    Ok(TrialConfig {
        potential: sample_potential_indexed(&nf, density, seed, t),
        interacting: !matches!(interaction, InteractionSpec::None),
        k: nf.regularity().k,
        d: nf.spatial_dim(),
        interaction,
        domain: nf,
    })
}

fn trial(source: &DomainSource, density: &DensitySpec, seed: u64, t: u64) -> Result<TrialConfig> {
    match source {
        DomainSource::Fixed(d) => fixed_trial(d, density, seed, t),
        DomainSource::RandomRegular => Ok(random_trial_config(seed, t, density)),
    }
}

/// Sum rule `Σ_{ξ∈Λ_1} ∂E_n/∂v(ξ) = K` over `trials` configurations.
pub fn lemma31_suite(source: &DomainSource, density: &DensitySpec, trials: usize, seed: u64) -> Result<SuiteSummary> {
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let cfg = trial(source, density, seed, t)?;
            let report = lemma31_check(&cfg.domain, &cfg.potential, &cfg.interaction)?;
            Ok((report.max_deviation(), report.passed(), report.deviations.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = SuiteSummary::new("lemma31");
    for (dev, pass, levels) in outcomes {
        s.record(pass);
        s.worst = s.worst.max(dev);
        s.note_add("eigenvalues_checked", levels as f64);
    }
    Ok(s)
}

/// Feynman–Hellmann against central differences for every eigenvalue and
/// every site of `∪Λ_i`; near-degenerate levels count as inapplicable.
/// Interactions alternate between none and contact.
pub fn fh_fd_suite(domain: &RectangularDomain, density: &DensitySpec, seeds: usize, seed: u64, opts: FdOptions) -> Result<SuiteSummary> {
    let sites = domain.union_sites();
    let outcomes = (0..seeds as u64)
        .into_par_iter()
        .map(|t| {
            let interaction = if t % 2 == 0 { InteractionSpec::None } else { InteractionSpec::contact(1.0, domain.spatial_dim()) };
            let v = sample_potential_indexed(domain, density, seed, t);
            let spectrum = eigen_symmetric(&assemble(domain, &v, &interaction)?)?;
            let mut diffs = Vec::new();
            let mut skipped = 0usize;
            for xi in &sites {
                for (n, fd) in fd_derivatives(domain, &v, &interaction, xi, opts)?.into_iter().enumerate() {
                    match fd {
                        Some(fd) => diffs.push((fh_derivative(&spectrum, domain, n, xi) - fd).abs()),
                        None => skipped += 1,
                    }
                }
            }
            Ok((diffs, skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = SuiteSummary::new("fh-fd");
    for (diffs, skipped) in outcomes {
        s.inapplicable += skipped;
        for d in diffs {
            s.record(d <= FH_FD_TOL);
            s.worst = s.worst.max(d);
        }
    }
    Ok(s)
}

/// Clamping interlacing with `ξ` drawn uniformly from `Λ_1` and the
/// interaction family cycling with the trial index.
pub fn interlacing_suite(source: &DomainSource, density: &DensitySpec, trials: usize, seed: u64) -> Result<SuiteSummary> {
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let cfg = trial(source, density, seed, t)?;
            let sites = cfg.domain.factor(0).sites();
            let mut rng = trial_rng(seed ^ 0x1a7e_51ac, t);
            let xi = &sites[rng.random_range(0..sites.len())];
            interlacing_check(&cfg.domain, &cfg.potential, &cfg.interaction, density, xi)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = SuiteSummary::new("interlacing");
    for r in outcomes {
        s.record(r.passed());
        s.worst = s.worst.max(-r.min_lower_slack.min(r.min_upper_slack));
        s.note_add("top_edge_terms", r.top_edge_terms as f64);
        s.note_min("min_lower_slack", r.min_lower_slack);
        s.note_min("min_upper_slack", r.min_upper_slack);
    }
    Ok(s)
}

/// A nondecreasing `[0, 1]`-valued test function for the interlaced-sum suite.
fn test_phi(kind: usize, center: f64, width: f64) -> Box<dyn Fn(f64) -> f64 + Send + Sync> {
    match kind % 4 {
        0 => {
            let phi = smooth_switch(width).expect("positive width");
            Box::new(move |t| phi.value(t - center))
        }
        1 => Box::new(move |t| ((t - center) / width + 0.5).clamp(0.0, 1.0)),
        2 => Box::new(move |t| if t >= center { 1.0 } else { 0.0 }),
        _ => Box::new(move |t| 0.5 * (1.0 + ((t - center) / width).tanh())),
    }
}

/// Random interlaced pair `(a, b)` with shift `m`.
pub fn random_interlaced(rng: &mut impl Rng, len: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
    a.sort_by(f64::total_cmp);
    let top = a.last().copied().unwrap_or(0.0) + 2.0;
    let mut b = Vec::with_capacity(len);
    for n in 0..len {
        let cap = a.get(n + m).copied().unwrap_or(top);
        let draw = a[n] + rng.random::<f64>() * (cap - a[n]);
        let prev = b.last().copied().unwrap_or(f64::NEG_INFINITY);
        b.push(draw.max(prev));
    }
    (a, b)
}

/// Interlaced pair for which `Σ(φ(b_n) − φ(a_n)) = m` when `φ` switches
/// inside `(a_{m−1}, a_m)`. Returns `(a, b, switch center, max half-width)`.
pub fn tight_interlaced(rng: &mut impl Rng, len: usize, m: usize) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let mut a = Vec::with_capacity(len);
    let mut x = rng.random_range(-2.0..0.0);
    for _ in 0..len {
        a.push(x);
        x += rng.random_range(0.5..1.5);
    }
    let b: Vec<f64> = (0..len).map(|n| a.get(n + m).copied().unwrap_or(a[n] + 100.0)).collect();
    let center = 0.5 * (a[m - 1] + a[m]);
    let half = 0.5 * (a[m] - a[m - 1]);
    (a, b, center, half)
}

/// Interlaced-sum bound on `instances` random instances, every other one tight.
pub fn lemma32_suite(instances: usize, seed: u64) -> Result<SuiteSummary> {
    let outcomes = (0..instances as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let m = rng.random_range(1..=5usize);
            if t % 2 == 0 {
                let len = rng.random_range(1..=40usize);
                let (a, b) = random_interlaced(&mut rng, len, m);
                let phi = test_phi(t as usize / 2, rng.random_range(-3.0..3.0), rng.random_range(0.05..2.0));
                let out = lemma32_oracle(&a, &b, m, phi)?;
                Ok((out.holds, out.sum / m as f64, false))
            } else {
                let len = m + rng.random_range(1..=30usize);
                let (a, b, center, half) = tight_interlaced(&mut rng, len, m);
                // narrow enough that even the tanh switch saturates at the a_n
                let phi = test_phi(t as usize / 2, center, half / 20.0);
                let out = lemma32_oracle(&a, &b, m, phi)?;
                Ok((out.holds, out.sum / m as f64, true))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = SuiteSummary::new("lemma32");
    for (holds, ratio, tight) in outcomes {
        s.record(holds);
        s.worst = s.worst.max(ratio);
        if tight {
            s.note_min("min_tight_ratio", ratio);
            s.note_add("tight_instances", 1.0);
        }
    }
    Ok(s)
}

/// Window-count chain on the spectra of `seeds` samples, for each `κ` and
/// each energy in `energies` plus one energy placed exactly on an eigenvalue.
pub fn chain_suite(
    domain: &RectangularDomain,
    density: &DensitySpec,
    seeds: usize,
    seed: u64,
    kappas: &[f64],
    energies: &[f64],
) -> Result<SuiteSummary> {
    let switches = kappas.iter().map(|&k| smooth_switch(k)).collect::<Result<Vec<_>>>()?;
    let outcomes = (0..seeds as u64)
        .into_par_iter()
        .map(|t| {
            let interaction = if t % 2 == 0 { InteractionSpec::None } else { InteractionSpec::contact(1.0, domain.spatial_dim()) };
            let v = sample_potential_indexed(domain, density, seed, t);
            let eigs = eigenvalues_symmetric(&assemble(domain, &v, &interaction)?);
            let mut es = energies.to_vec();
            es.push(eigs[eigs.len() / 2]);
            let mut out = Vec::new();
            for &e in &es {
                for (&kappa, phi) in kappas.iter().zip(&switches) {
                    let r = chain_check(&eigs, e, kappa, phi)?;
                    out.push((r.passed(), (r.smooth_trace - r.integral_trace).abs().max(r.max_term_mismatch()), r.indicator));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = SuiteSummary::new("chain");
    for (pass, mismatch, hit) in outcomes.into_iter().flatten() {
        s.record(pass);
        s.worst = s.worst.max(mismatch);
        s.note_add("windows_hit", hit as f64);
    }
    Ok(s)
}

/// Names accepted by [`run_suite`].
pub const SUITE_NAMES: [&str; 5] = ["lemma31", "fh-fd", "interlacing", "lemma32", "chain"];

/// Runs one named suite with `seeds` trials. With `domain = None` the
/// sum-rule and interlacing suites draw random regular domains and the
/// others use [`default_domain`].
pub fn run_suite(name: &str, domain: Option<&RectangularDomain>, density: &DensitySpec, seeds: usize, seed: u64) -> Result<SuiteSummary> {
    let fixed = domain.cloned().unwrap_or_else(default_domain);
    let source = match domain {
        Some(d) => DomainSource::Fixed(d.clone()),
        None => DomainSource::RandomRegular,
    };
    if !fixed.is_regular() {
        return Err(Error::NotRegular);
    }
    match name {
        "lemma31" => lemma31_suite(&source, density, seeds, seed),
        "fh-fd" => fh_fd_suite(&fixed, density, seeds, seed, FdOptions::default()),
        "interlacing" => interlacing_suite(&source, density, seeds, seed),
        "lemma32" => lemma32_suite(seeds.max(1) * 10, seed),
        "chain" => chain_suite(&fixed, density, seeds, seed, &[0.01, 0.05, 0.2], &[-1.0, 0.0, 1.0, 2.0]),
        other => Err(Error::InvalidArgument(format!("unknown suite {other:?}"))),
    }
}
