//! Run configuration file (TOML).
//!
//! ```toml
//! seed = 7
//! samples = 2000
//! energies = [-1.0, 0.0, 1.0]
//! kappas = [0.001, 0.005]
//!
//! [[domain]]
//! d = 1
//! n = 2
//! factors = [[[1], [6]], [[1], [6]]]   # one [lower, upper] pair per particle
//!
//! [density]
//! family = "uniform"
//! a = 0.0
//! b = 1.0
//!
//! [interaction]
//! kind = "contact"                     # none | contact | pair | table
//! g = 1.0
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use mpwegner_core::hamiltonian::InteractionSpec;
use mpwegner_core::lattice::{Rectangle, RectangularDomain};
use mpwegner_core::randomness::DensitySpec;
use mpwegner_core::suites::DEFAULT_DENSITY;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub energies: Vec<f64>,
    #[serde(default)]
    pub kappas: Vec<f64>,
    #[serde(default, rename = "domain")]
    pub domains: Vec<DomainConfig>,
    #[serde(default)]
    pub density: Option<DensitySpec>,
    #[serde(default)]
    pub interaction: Option<InteractionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub d: usize,
    #[serde(alias = "N")]
    pub n: usize,
    pub factors: Vec<[Vec<i64>; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionConfig {
    None,
    /// `u(r) = g·1{r = 0}`.
    Contact { g: f64 },
    /// Pair potential listed by difference vector.
    Pair { range: i64, terms: Vec<PairTerm> },
    /// Explicit values at flat `N·d` sites.
    Table { entries: Vec<TableEntry> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairTerm {
    pub offset: Vec<i64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub site: Vec<i64>,
    pub value: f64,
}

impl DomainConfig {
    pub fn from_domain(domain: &RectangularDomain) -> Self {
        Self {
            d: domain.spatial_dim(),
            n: domain.particles(),
            factors: domain.factors().iter().map(|r| [r.lower().to_vec(), r.upper().to_vec()]).collect(),
        }
    }

    pub fn build(&self, index: usize) -> Result<RectangularDomain, CliError> {
        let bad = |msg: String| CliError::Config(format!("domain[{index}]: {msg}"));
        if self.factors.len() != self.n {
            return Err(bad(format!("n = {} but {} factors given", self.n, self.factors.len())));
        }
        let mut rects = Vec::with_capacity(self.n);
        for (i, [lower, upper]) in self.factors.iter().enumerate() {
            if lower.len() != self.d || upper.len() != self.d {
                return Err(bad(format!("factors[{i}] does not have d = {} components", self.d)));
            }
            rects.push(Rectangle::new(lower.clone(), upper.clone()).map_err(|e| bad(format!("factors[{i}]: {e}")))?);
        }
        RectangularDomain::new(rects).map_err(|e| bad(e.to_string()))
    }
}

impl InteractionConfig {
    pub fn build(&self, d: usize) -> Result<InteractionSpec, CliError> {
        let bad = |msg: String| CliError::Config(format!("interaction: {msg}"));
        let spec = match self {
            InteractionConfig::None => InteractionSpec::None,
            InteractionConfig::Contact { g } => InteractionSpec::contact(*g, d),
            InteractionConfig::Pair { range, terms } => {
                let mut u = BTreeMap::new();
                for t in terms {
                    if t.offset.len() != d {
                        return Err(bad(format!("offset {:?} does not have d = {d} components", t.offset)));
                    }
                    if u.insert(t.offset.clone(), t.value).is_some() {
                        return Err(bad(format!("offset {:?} listed twice", t.offset)));
                    }
                }
                InteractionSpec::Pair { u, range: *range }
            }
            InteractionConfig::Table { entries } => {
                let mut table = HashMap::new();
                for t in entries {
                    if table.insert(t.site.clone(), t.value).is_some() {
                        return Err(bad(format!("site {:?} listed twice", t.site)));
                    }
                }
                InteractionSpec::GeneralBounded { table }
            }
        };
        spec.validate().map_err(|e| bad(e.to_string()))?;
        Ok(spec)
    }
}

/// A parsed and validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub file: FileConfig,
    pub seed: u64,
    pub samples: usize,
    pub domains: Vec<RectangularDomain>,
    pub density: DensitySpec,
    pub interaction: InteractionSpec,
}

impl Resolved {
    /// TOML echo of the resolved configuration for the run banner.
    pub fn echo(&self) -> String {
        toml::to_string(&self.file).unwrap_or_else(|e| format!("<unprintable config: {e}>"))
    }
}

pub fn parse(text: &str) -> Result<FileConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn resolve(mut file: FileConfig) -> Result<Resolved, CliError> {
    let seed = *file.seed.get_or_insert(DEFAULT_SEED);
    let samples = *file.samples.get_or_insert(DEFAULT_SAMPLES);
    let density = *file.density.get_or_insert(DEFAULT_DENSITY);
    density.validate().map_err(|e| CliError::Config(format!("density: {e}")))?;
    let domains = file.domains.iter().enumerate().map(|(i, d)| d.build(i)).collect::<Result<Vec<_>, _>>()?;
    if let Some(k) = file.kappas.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(CliError::Config(format!("kappas: {k} is not a positive number")));
    }
    if let Some(e) = file.energies.iter().find(|e| !e.is_finite()) {
        return Err(CliError::Config(format!("energies: {e} is not finite")));
    }
    let interaction_cfg = file.interaction.get_or_insert(InteractionConfig::None).clone();
    let interaction = match domains.first() {
        Some(first) => {
            if domains.iter().any(|d| d.spatial_dim() != first.spatial_dim()) {
                return Err(CliError::Config("domain: all domains must share the spatial dimension d".into()));
            }
            interaction_cfg.build(first.spatial_dim())?
        }
        None => InteractionSpec::None,
    };
    Ok(Resolved { file, seed, samples, domains, density, interaction })
}

/// Fails with the regularity exit status unless every domain is regular.
pub fn require_regular(domains: &[RectangularDomain]) -> Result<(), CliError> {
    match domains.iter().position(|d| !d.is_regular()) {
        Some(i) => Err(CliError::NotRegular(format!(
            "domain[{i}] is not regular: some pair of factors overlaps without being equal"
        ))),
        None => Ok(()),
    }
}

pub fn require<T>(items: &[T], key: &str) -> Result<(), CliError> {
    if items.is_empty() {
        return Err(CliError::Config(format!("missing key `{key}`: at least one entry is required")));
    }
    Ok(())
}
