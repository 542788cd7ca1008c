//! Single-site distributions with bounded, compactly supported densities
//! and counter-based sampling of potential fields.
//!
//! The value at site `ξ` of sample `s` is a pure function of
//! `(seed, s, ξ)`: a ChaCha8 generator is keyed by those three numbers and
//! its first `f64` is pushed through the inverse CDF. Any subset of sites
//! can therefore be drawn, redrawn or conditioned on without touching the
//! others, and parallel workers need no shared generator state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hamiltonian::PotentialField;
use crate::lattice::RectangularDomain;

/// Density family and parameters. All supports are compact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// Flat on `[a, b]`; `‖ρ‖∞ = 1/(b − a)`.
    Uniform { a: f64, b: f64 },
    /// Symmetric tent on `[a, b]` peaking at the midpoint; `‖ρ‖∞ = 2/(b − a)`.
    Triangular { a: f64, b: f64 },
    /// Normal `(mean, sigma)` conditioned on `[a, b]`; `‖ρ‖∞` is the
    /// density at the mean clamped into `[a, b]`.
    TruncatedNormal { mean: f64, sigma: f64, a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clamp {
    Min,
    Max,
}

impl DensitySpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.support();
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidDensity("support endpoints must be finite".into()));
        }
        if a >= b {
            return Err(Error::InvalidDensity(format!("empty support [{a}, {b}]")));
        }
        if let DensitySpec::TruncatedNormal { mean, sigma, .. } = *self {
            if !(mean.is_finite() && sigma.is_finite() && sigma > 0.0) {
                return Err(Error::InvalidDensity(format!("bad normal parameters mean={mean} sigma={sigma}")));
            }
            if self.truncated_mass() <= 0.0 {
                return Err(Error::InvalidDensity("truncation window carries no normal mass".into()));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            DensitySpec::Uniform { a, b }
            | DensitySpec::Triangular { a, b }
            | DensitySpec::TruncatedNormal { a, b, .. } => (a, b),
        }
    }

    /// `inf supp ρ`.
    pub fn support_min(&self) -> f64 {
        self.support().0
    }

    /// `sup supp ρ`.
    pub fn support_max(&self) -> f64 {
        self.support().1
    }

    /// `‖ρ‖∞` from the closed form of the family.
    pub fn sup_norm(&self) -> f64 {
        match *self {
            DensitySpec::Uniform { a, b } => 1.0 / (b - a),
            DensitySpec::Triangular { a, b } => 2.0 / (b - a),
            DensitySpec::TruncatedNormal { mean, a, b, .. } => self.density_at(mean.clamp(a, b)),
        }
    }

    pub fn density_at(&self, t: f64) -> f64 {
        let (a, b) = self.support();
        if !(a..=b).contains(&t) {
            return 0.0;
        }
        match *self {
            DensitySpec::Uniform { a, b } => 1.0 / (b - a),
            DensitySpec::Triangular { a, b } => {
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                (1.0 - (t - mid).abs() / half) / half
            }
            DensitySpec::TruncatedNormal { mean, sigma, .. } => {
                std_normal().pdf((t - mean) / sigma) / (sigma * self.truncated_mass())
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let (a, b) = self.support();
        if t <= a {
            return 0.0;
        }
        if t >= b {
            return 1.0;
        }
        match *self {
            DensitySpec::Uniform { a, b } => (t - a) / (b - a),
            DensitySpec::Triangular { a, b } => {
                let w = b - a;
                let mid = 0.5 * (a + b);
                if t <= mid {
                    2.0 * (t - a).powi(2) / (w * w)
                } else {
                    1.0 - 2.0 * (b - t).powi(2) / (w * w)
                }
            }
            DensitySpec::TruncatedNormal { mean, sigma, a, .. } => {
                let n = std_normal();
                (n.cdf((t - mean) / sigma) - n.cdf((a - mean) / sigma)) / self.truncated_mass()
            }
        }
    }

    /// Inverse CDF on `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let x = match *self {
            DensitySpec::Uniform { a, b } => a + u * (b - a),
            DensitySpec::Triangular { a, b } => {
                let w = b - a;
                if u <= 0.5 {
                    a + w * (0.5 * u).sqrt()
                } else {
                    b - w * (0.5 * (1.0 - u)).sqrt()
                }
            }
            DensitySpec::TruncatedNormal { mean, sigma, a, b } => {
                let n = std_normal();
                let lo = (a - mean) / sigma;
                let hi = (b - mean) / sigma;
                if lo > 0.0 {
                    // upper tail: work with survival functions to keep precision
                    let (slo, shi) = (n.sf(lo), n.sf(hi));
                    mean - sigma * n.inverse_cdf(slo - u * (slo - shi))
                } else {
                    let (clo, chi) = (n.cdf(lo), n.cdf(hi));
                    mean + sigma * n.inverse_cdf(clo + u * (chi - clo))
                }
            }
        };
        x.clamp(self.support_min(), self.support_max())
    }

    fn truncated_mass(&self) -> f64 {
        match *self {
            DensitySpec::TruncatedNormal { mean, sigma, a, b } => {
                let n = std_normal();
                let lo = (a - mean) / sigma;
                let hi = (b - mean) / sigma;
                if lo > 0.0 {
                    n.sf(lo) - n.sf(hi)
                } else {
                    n.cdf(hi) - n.cdf(lo)
                }
            }
            _ => 1.0,
        }
    }

    /// The support endpoint selected by `which`.
    pub fn endpoint(&self, which: Clamp) -> f64 {
        match which {
            Clamp::Min => self.support_min(),
            Clamp::Max => self.support_max(),
        }
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// `ρ(t)`; zero outside the support.
pub fn density_at(density: &DensitySpec, t: f64) -> f64 {
    density.density_at(t)
}

const SPLITMIX_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit mix of a word sequence (independent of platform and of
/// the process). Used for site keys and derived seeds.
pub fn mix_words(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    let mut len = 0u64;
    for w in words {
        h = splitmix64(h ^ splitmix64(w.wrapping_add(len)));
        len += 1;
    }
    splitmix64(h ^ len)
}

/// Canonical key of a lattice site.
pub fn site_key(site: &[i64]) -> u64 {
    mix_words(site.iter().map(|&c| c as u64))
}

/// Uniform variate in `[0, 1)` for `(seed, sample, site)`.
pub fn site_uniform(seed: u64, sample: u64, site: &[i64]) -> f64 {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&sample.to_le_bytes());
    key[16..24].copy_from_slice(&site_key(site).to_le_bytes());
    key[24..32].copy_from_slice(&(site.len() as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key).random::<f64>()
}

/// i.i.d. potential on `∪_i Λ_i` for sample `sample` of the stream `seed`.
pub fn sample_potential_indexed(
    domain: &RectangularDomain,
    density: &DensitySpec,
    seed: u64,
    sample: u64,
) -> PotentialField {
    PotentialField::from_fn(domain, |site| density.quantile(site_uniform(seed, sample, site)))
        .expect("quantiles of a compact density are finite")
}

/// i.i.d. potential on `∪_i Λ_i`; sample index 0 of the stream `seed`.
pub fn sample_potential(domain: &RectangularDomain, density: &DensitySpec, seed: u64) -> PotentialField {
    sample_potential_indexed(domain, density, seed, 0)
}

/// Copy of `v` with `v(ξ)` pinned to the lower or upper support endpoint.
pub fn clamp_site(v: &PotentialField, xi: &[i64], which: Clamp, density: &DensitySpec) -> Result<PotentialField> {
    let mut out = v.clone();
    out.set(xi, density.endpoint(which))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Rectangle;

    fn families() -> Vec<DensitySpec> {
        vec![
            DensitySpec::Uniform { a: 0.0, b: 1.0 },
            DensitySpec::Uniform { a: -2.0, b: 3.0 },
            DensitySpec::Triangular { a: 0.0, b: 2.0 },
            DensitySpec::Triangular { a: -1.0, b: 0.5 },
            DensitySpec::TruncatedNormal { mean: 0.0, sigma: 1.0, a: -1.0, b: 2.0 },
            DensitySpec::TruncatedNormal { mean: -3.0, sigma: 0.5, a: -1.0, b: 1.0 },
            DensitySpec::TruncatedNormal { mean: 4.0, sigma: 1.0, a: 0.0, b: 1.0 },
        ]
    }

    // composite Simpson on a fine grid, split at the tent peak
    fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn densities_normalize() {
        for dens in families() {
            let (a, b) = dens.support();
            let m = 0.5 * (a + b);
            let total = integrate(|t| dens.density_at(t), a, m, 20_000) + integrate(|t| dens.density_at(t), m, b, 20_000);
            assert!((total - 1.0).abs() < 1e-10, "{dens:?}: {total}");
        }
    }

    #[test]
    fn sup_norm_dominates_density() {
        for dens in families() {
            let (a, b) = dens.support();
            let mut peak = 0.0f64;
            for i in 0..=10_000 {
                let t = a + (b - a) * i as f64 / 10_000.0;
                let rho = dens.density_at(t);
                assert!(rho <= dens.sup_norm() * (1.0 + 1e-12), "{dens:?} at {t}");
                peak = peak.max(rho);
            }
            assert!((peak - dens.sup_norm()).abs() < 1e-3 * dens.sup_norm());
        }
    }

    #[test]
    fn density_examples() {
        let u = DensitySpec::Uniform { a: 0.0, b: 1.0 };
        assert_eq!(density_at(&u, 0.5), 1.0);
        assert_eq!(density_at(&u, 2.0), 0.0);
        let t = DensitySpec::Triangular { a: 0.0, b: 2.0 };
        assert_eq!(density_at(&t, 1.0), 1.0);
        assert_eq!(t.sup_norm(), 1.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for dens in families() {
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let x = dens.quantile(u);
                assert!((dens.cdf(x) - u).abs() < 1e-9, "{dens:?} u={u}");
            }
        }
    }

    #[test]
    fn invalid_densities() {
        assert!(DensitySpec::Uniform { a: 1.0, b: 1.0 }.validate().is_err());
        assert!(DensitySpec::Uniform { a: 0.0, b: f64::INFINITY }.validate().is_err());
        assert!(DensitySpec::TruncatedNormal { mean: 0.0, sigma: 0.0, a: 0.0, b: 1.0 }.validate().is_err());
    }

    #[test]
    fn uniform_mean_within_clt_band() {
        let dens = DensitySpec::Uniform { a: 0.0, b: 1.0 };
        let n = 100_000u64;
        let mean = (0..n).map(|s| dens.quantile(site_uniform(17, s, &[3]))).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }

    #[test]
    fn ks_statistic_below_one_percent_critical_value() {
        let n = 10_000usize;
        let crit = 1.628 / (n as f64).sqrt();
        for dens in families() {
            let mut xs: Vec<f64> = (0..n as u64).map(|s| dens.quantile(site_uniform(99, s, &[0, 1]))).collect();
            xs.sort_by(f64::total_cmp);
            let d = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = dens.cdf(x);
                    (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
                })
                .fold(0.0f64, f64::max);
            assert!(d < crit, "{dens:?}: D = {d}");
        }
    }

    #[test]
    fn distinct_sites_are_uncorrelated() {
        let n = 10_000u64;
        let sites = [vec![0i64], vec![1], vec![-1], vec![0, 0], vec![1000]];
        let draws: Vec<Vec<f64>> = sites.iter().map(|s| (0..n).map(|k| site_uniform(5, k, s)).collect()).collect();
        for i in 0..draws.len() {
            for j in i + 1..draws.len() {
                let (a, b) = (&draws[i], &draws[j]);
                let ma = a.iter().sum::<f64>() / n as f64;
                let mb = b.iter().sum::<f64>() / n as f64;
                let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
                let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
                let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
                let r = cov / (va * vb).sqrt();
                assert!(r.abs() < 0.05, "sites {i},{j}: r = {r}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_shared() {
        let dom = RectangularDomain::new(vec![
            Rectangle::interval(0, 3).unwrap(),
            Rectangle::interval(0, 3).unwrap(),
            Rectangle::interval(7, 8).unwrap(),
        ])
        .unwrap();
        let dens = DensitySpec::Uniform { a: 0.0, b: 1.0 };
        let v1 = sample_potential(&dom, &dens, 42);
        let v2 = sample_potential(&dom, &dens, 42);
        assert_eq!(v1, v2);
        assert_eq!(v1.len(), 6);
        assert!(v1.iter().all(|(_, x)| (0.0..=1.0).contains(&x)));
        assert_ne!(v1, sample_potential(&dom, &dens, 43));
        assert_ne!(v1, sample_potential_indexed(&dom, &dens, 42, 1));
    }

    #[test]
    fn clamping_is_local_and_idempotent() {
        let dom = RectangularDomain::power(Rectangle::interval(0, 4).unwrap(), 2).unwrap();
        let dens = DensitySpec::Uniform { a: 0.0, b: 1.0 };
        let v = sample_potential(&dom, &dens, 1);
        let hi = clamp_site(&v, &[2], Clamp::Max, &dens).unwrap();
        assert_eq!(hi.get(&[2]), Some(1.0));
        assert_eq!(clamp_site(&hi, &[2], Clamp::Max, &dens).unwrap(), hi);
        for (s, x) in v.iter() {
            if s != &vec![2] {
                assert_eq!(hi.get(s).unwrap().to_bits(), x.to_bits());
            }
        }
        let lo = clamp_site(&v, &[2], Clamp::Min, &dens).unwrap();
        assert_eq!(lo.get(&[2]), Some(0.0));
        assert!(clamp_site(&v, &[9], Clamp::Min, &dens).is_err());
    }
}
