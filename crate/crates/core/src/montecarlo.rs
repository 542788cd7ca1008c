//! Seeded Monte Carlo estimates of `P(dist(σ(H^Λ), E) < κ)`, of the mean
//! window count `E[N(E+κ) − N(E−κ)]` and of the IDS density, compared with
//! the explicit bound `4 ‖ρ‖∞ |Λ| κ`.
//!
//! Every per-sample quantity is an integer and aggregation is a plain sum,
//! so results are bit-identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{interaction_diagonal, kinetic_matrix, potential_diagonal, AssembledHamiltonian, InteractionSpec};
use crate::lattice::RectangularDomain;
use crate::randomness::{mix_words, sample_potential_indexed, DensitySpec};
use crate::spectral::{eigenvalues_symmetric, spectral_distance, windowed_trace};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Constant in `P(dist(σ(H^Λ), E) < κ) ≤ C ‖ρ‖∞ |Λ| κ`.
pub const WEGNER_CONSTANT: f64 = 4.0;
pub const MIN_SWEEP_SAMPLES: usize = 100;

/// `4 ‖ρ‖∞ |Λ| κ`.
pub fn wegner_bound(sup_norm: f64, volume: usize, kappa: f64) -> f64 {
    WEGNER_CONSTANT * sup_norm * volume as f64 * kappa
}

/// Wilson score interval for `hits` successes out of `n`, clamped so that
/// `0 ≤ low ≤ p̂ ≤ high ≤ 1`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let low = if hits == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let high = if hits == n { 1.0 } else { (center + half).clamp(p, 1.0) };
    (low, high)
}

/// Draws spectra of `H^Λ` for sample indices of one seeded stream.
#[derive(Debug, Clone)]
pub struct SpectrumSampler {
    domain: RectangularDomain,
    density: DensitySpec,
    kinetic: AssembledHamiltonian,
    interaction: Vec<f64>,
    seed: u64,
}

impl SpectrumSampler {
    pub fn new(domain: &RectangularDomain, density: &DensitySpec, interaction: &InteractionSpec, seed: u64) -> Result<Self> {
        density.validate()?;
        interaction.validate()?;
        Ok(Self {
            domain: domain.clone(),
            density: *density,
            kinetic: kinetic_matrix(domain),
            interaction: interaction_diagonal(domain, interaction),
            seed,
        })
    }

    pub fn hamiltonian(&self, sample: u64) -> AssembledHamiltonian {
        let v = sample_potential_indexed(&self.domain, &self.density, self.seed, sample);
        let pot = potential_diagonal(&self.domain, &v).expect("sampled field covers the domain");
        let diag = pot.iter().zip(&self.interaction).map(|(a, b)| a + b).collect();
        self.kinetic.with_diagonal(diag).expect("dimensions agree")
    }

    /// Ascending eigenvalues of sample `sample`.
    pub fn eigenvalues(&self, sample: u64) -> Vec<f64> {
        eigenvalues_symmetric(&self.hamiltonian(sample))
    }
}

/// Integer sufficient statistics of one `(Λ, E, κ)` cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub samples: u64,
    /// Samples with `dist(σ, E) < κ`.
    pub hits: u64,
    /// `Σ_s ΔN_s`.
    pub count_sum: u64,
    /// `Σ_s ΔN_s²`.
    pub count_sq_sum: u64,
}

impl CellCounts {
    fn single(eigs: &[f64], e: f64, kappa: f64) -> Self {
        let c = windowed_trace(eigs, e, kappa) as u64;
        Self { samples: 1, hits: u64::from(spectral_distance(eigs, e) < kappa), count_sum: c, count_sq_sum: c * c }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            samples: self.samples + o.samples,
            hits: self.hits + o.hits,
            count_sum: self.count_sum + o.count_sum,
            count_sq_sum: self.count_sq_sum + o.count_sq_sum,
        }
    }

    pub fn probability(&self) -> ProbabilityEstimate {
        let (ci_low, ci_high) = wilson_interval(self.hits, self.samples, Z95);
        ProbabilityEstimate {
            hits: self.hits,
            samples: self.samples,
            p_hat: self.hits as f64 / self.samples as f64,
            ci_low,
            ci_high,
        }
    }

    pub fn count(&self) -> CountEstimate {
        let n = self.samples as f64;
        let mean = self.count_sum as f64 / n;
        let var = if self.samples > 1 {
            ((self.count_sq_sum as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        CountEstimate { samples: self.samples, mean, std_error: (var / n).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityEstimate {
    pub hits: u64,
    pub samples: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountEstimate {
    pub samples: u64,
    pub mean: f64,
    pub std_error: f64,
}

fn check_cell(samples: usize, kappa: f64) -> Result<()> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("κ must be finite and nonnegative, got {kappa}")));
    }
    Ok(())
}

/// Runs samples `0..samples` of stream `seed` and accumulates the cell
/// statistics for every `(E, κ)` pair in `windows`.
pub fn cell_counts(
    domain: &RectangularDomain,
    density: &DensitySpec,
    interaction: &InteractionSpec,
    windows: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Result<Vec<CellCounts>> {
    for &(_, kappa) in windows {
        check_cell(samples, kappa)?;
    }
    let sampler = SpectrumSampler::new(domain, density, interaction, seed)?;
    let zero = vec![CellCounts::default(); windows.len()];
    Ok((0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let eigs = sampler.eigenvalues(s);
            windows.iter().map(|&(e, k)| CellCounts::single(&eigs, e, k)).collect::<Vec<_>>()
        })
        .reduce(
            || zero.clone(),
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
        ))
}

/// Fraction of samples with `dist(σ(H^Λ), E) < κ`, with a Wilson 95% interval.
pub fn estimate_probability(
    domain: &RectangularDomain,
    density: &DensitySpec,
    interaction: &InteractionSpec,
    e: f64,
    kappa: f64,
    samples: usize,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    Ok(cell_counts(domain, density, interaction, &[(e, kappa)], samples, seed)?[0].probability())
}

/// Sample mean and standard error of `N(E+κ) − N(E−κ)`.
pub fn estimate_expected_count(
    domain: &RectangularDomain,
    density: &DensitySpec,
    interaction: &InteractionSpec,
    e: f64,
    kappa: f64,
    samples: usize,
    seed: u64,
) -> Result<CountEstimate> {
    Ok(cell_counts(domain, density, interaction, &[(e, kappa)], samples, seed)?[0].count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdsPoint {
    pub e: f64,
    pub count_mean: f64,
    pub count_se: f64,
    /// `count_mean / (2κ|Λ|)`.
    pub density: f64,
    pub density_se: f64,
    /// `2 ‖ρ‖∞`.
    pub bound: f64,
}

impl IdsPoint {
    /// `density ≤ bound + sigmas · SE`.
    pub fn within_bound(&self, sigmas: f64) -> bool {
        self.density <= self.bound + sigmas * self.density_se
    }
}

/// Finite-difference IDS density `E[ΔN]/(2κ|Λ|)` on an energy grid. All
/// grid points share the same samples.
pub fn ids_density_estimate(
    domain: &RectangularDomain,
    density: &DensitySpec,
    interaction: &InteractionSpec,
    energies: &[f64],
    kappa: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<IdsPoint>> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::InvalidArgument(format!("κ must be positive, got {kappa}")));
    }
    let windows: Vec<(f64, f64)> = energies.iter().map(|&e| (e, kappa)).collect();
    let counts = cell_counts(domain, density, interaction, &windows, samples, seed)?;
    let scale = 2.0 * kappa * domain.cardinality() as f64;
    Ok(energies
        .iter()
        .zip(counts)
        .map(|(&e, c)| {
            let est = c.count();
            IdsPoint {
                e,
                count_mean: est.mean,
                count_se: est.std_error,
                density: est.mean / scale,
                density_se: est.std_error / scale,
                bound: 2.0 * density.sup_norm(),
            }
        })
        .collect())
}

/// Grid of Monte Carlo cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub domains: Vec<RectangularDomain>,
    pub density: DensitySpec,
    pub interaction: InteractionSpec,
    pub energies: Vec<f64>,
    pub kappas: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.domains.is_empty() || self.energies.is_empty() || self.kappas.is_empty() {
            return Err(Error::InvalidArgument("domain, energy and κ grids must be nonempty".into()));
        }
        if self.samples < MIN_SWEEP_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "samples = {} is below the minimum {MIN_SWEEP_SAMPLES}",
                self.samples
            )));
        }
        if let Some(k) = self.kappas.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidArgument(format!("κ values must be positive, got {k}")));
        }
        if let Some(e) = self.energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument(format!("energies must be finite, got {e}")));
        }
        self.density.validate()?;
        self.interaction.validate()?;
        if self.domains.iter().any(|d| !d.is_regular()) {
            return Err(Error::NotRegular);
        }
        Ok(())
    }
}

/// Seed of the cell `(Λ, E, κ)`, derived from the cell's values so that
/// reordering any grid leaves it unchanged.
pub fn cell_seed(base: u64, domain: &RectangularDomain, e: f64, kappa: f64) -> u64 {
    let mut words = vec![base, domain.spatial_dim() as u64, domain.particles() as u64];
    for r in domain.factors() {
        words.extend(r.lower().iter().chain(r.upper()).map(|&c| c as u64));
    }
    words.push(e.to_bits());
    words.push(kappa.to_bits());
    mix_words(words)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WegnerRow {
    pub domain_id: usize,
    pub volume: usize,
    pub e: f64,
    pub kappa: f64,
    pub samples: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `4 ‖ρ‖∞ |Λ| κ`.
    pub bound: f64,
    pub count_mean: f64,
    pub count_se: f64,
    /// `ci_low ≤ bound`.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WegnerReport {
    pub sup_norm: f64,
    pub rows: Vec<WegnerRow>,
}

pub const CSV_HEADER: &str = "domain_id,E,kappa,samples,p_hat,ci_low,ci_high,bound,count_mean,pass";

impl WegnerReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        use crate::format_sig17 as f;
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.domain_id,
                f(r.e),
                f(r.kappa),
                r.samples,
                f(r.p_hat),
                f(r.ci_low),
                f(r.ci_high),
                f(r.bound),
                f(r.count_mean),
                r.pass
            ));
        }
        out
    }
}

/// Evaluates every `(Λ, E, κ)` cell of the grid, rows ordered by domain,
/// then energy, then κ.
pub fn sweep(config: &SweepConfig) -> Result<WegnerReport> {
    config.validate()?;
    let sup_norm = config.density.sup_norm();
    let mut cells = Vec::new();
    for (domain_id, domain) in config.domains.iter().enumerate() {
        for &e in &config.energies {
            for &kappa in &config.kappas {
                cells.push((domain_id, domain, e, kappa));
            }
        }
    }
    let rows = cells
        .into_par_iter()
        .map(|(domain_id, domain, e, kappa)| -> Result<WegnerRow> {
            let seed = cell_seed(config.seed, domain, e, kappa);
            let c = cell_counts(domain, &config.density, &config.interaction, &[(e, kappa)], config.samples, seed)?[0];
            let p = c.probability();
            let n = c.count();
            let bound = wegner_bound(sup_norm, domain.cardinality(), kappa);
            Ok(WegnerRow {
                domain_id,
                volume: domain.cardinality(),
                e,
                kappa,
                samples: c.samples,
                hits: c.hits,
                p_hat: p.p_hat,
                ci_low: p.ci_low,
                ci_high: p.ci_high,
                bound,
                count_mean: n.mean,
                count_se: n.std_error,
                pass: p.ci_low <= bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WegnerReport { sup_norm, rows })
}

/// Least-squares fit `p̂ ≈ slope · κ` through the origin for one `(Λ, E)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub domain_id: usize,
    pub e: f64,
    pub kappas: Vec<f64>,
    pub slope: f64,
    pub slope_se: f64,
    pub residuals: Vec<f64>,
    /// `4 ‖ρ‖∞ |Λ|`, the slope implied by the bound.
    pub bound_slope: f64,
}

/// Per-`(Λ, E)` slope of `p̂` against `κ` over cells with `κ ≤ max_kappa`.
/// Every group needs at least three points.
pub fn scaling_fit(report: &WegnerReport, max_kappa: f64) -> Result<Vec<ScalingFit>> {
    let mut groups: Vec<((usize, u64), Vec<&WegnerRow>)> = Vec::new();
    for row in report.rows.iter().filter(|r| r.kappa <= max_kappa) {
        let key = (row.domain_id, row.e.to_bits());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|((domain_id, _), rows)| {
            if rows.len() < 3 {
                return Err(Error::InvalidArgument(format!(
                    "domain {domain_id}, E = {}: {} κ points, need ≥ 3",
                    rows[0].e,
                    rows.len()
                )));
            }
            let sxx: f64 = rows.iter().map(|r| r.kappa * r.kappa).sum();
            let sxy: f64 = rows.iter().map(|r| r.kappa * r.p_hat).sum();
            let slope = sxy / sxx;
            let residuals: Vec<f64> = rows.iter().map(|r| r.p_hat - slope * r.kappa).collect();
            let rss: f64 = residuals.iter().map(|x| x * x).sum();
            let slope_se = (rss / (rows.len() - 1) as f64 / sxx).sqrt();
            Ok(ScalingFit {
                domain_id,
                e: rows[0].e,
                kappas: rows.iter().map(|r| r.kappa).collect(),
                slope,
                slope_se,
                residuals,
                bound_slope: WEGNER_CONSTANT * report.sup_norm * rows[0].volume as f64,
            })
        })
        .collect()
}
