//! Finite-volume multi-particle operator `H^Λ = Σ_i h_0^(i) + V + U`.
//!
//! The hopping part is the restriction of the nearest-neighbour adjacency
//! (entries `+1`, no diagonal term) to `Λ`; hops leaving `Λ` are dropped.
//! The diagonal carries `V(x) = Σ_i v(x_i)` plus the interaction `U(x)`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format_sig17;
use crate::lattice::{check_permutation, RectangularDomain, Site};

/// Realized single-site potential `v(ξ)`, one value per distinct site and
/// shared by all particles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PotentialField {
    values: BTreeMap<Site, f64>,
}

impl PotentialField {
    pub fn new(values: BTreeMap<Site, f64>) -> Result<Self> {
        if let Some((site, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite value {v} at {site:?}")));
        }
        Ok(Self { values })
    }

    /// Field on `∪_i Λ_i` given by `f(ξ)`.
    pub fn from_fn(domain: &RectangularDomain, mut f: impl FnMut(&[i64]) -> f64) -> Result<Self> {
        Self::new(domain.union_sites().into_iter().map(|s| {
            let v = f(&s);
            (s, v)
        }).collect())
    }

    pub fn constant(domain: &RectangularDomain, value: f64) -> Result<Self> {
        Self::from_fn(domain, |_| value)
    }

    pub fn get(&self, site: &[i64]) -> Option<f64> {
        self.values.get(site).copied()
    }

    /// Replaces `v(site)`; the site must already carry a value.
    pub fn set(&mut self, site: &[i64], value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidPotential(format!("non-finite value {value} at {site:?}")));
        }
        match self.values.get_mut(site) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::MissingSite(site.to_vec())),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, f64)> {
        self.values.iter().map(|(s, v)| (s, *v))
    }
}

/// Deterministic bounded interaction `U` on `Z^{Nd}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum InteractionSpec {
    #[default]
    None,
    /// `U(x) = Σ_{i≠j} u(x_i − x_j)` over ordered pairs; `u` vanishes
    /// outside the listed difference vectors, all of which satisfy
    /// `‖r‖_∞ ≤ range`.
    Pair { u: BTreeMap<Vec<i64>, f64>, range: i64 },
    /// Arbitrary table indexed by the flat `N·d` site; zero elsewhere.
    GeneralBounded { table: HashMap<Vec<i64>, f64> },
}

impl InteractionSpec {
    /// Contact interaction `u(r) = g·1{r = 0}` in `Z^d`.
    pub fn contact(g: f64, d: usize) -> Self {
        InteractionSpec::Pair { u: BTreeMap::from([(vec![0; d], g)]), range: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InteractionSpec::None => Ok(()),
            InteractionSpec::Pair { u, range } => {
                if *range < 0 {
                    return Err(Error::InvalidInteraction(format!("negative range {range}")));
                }
                for (r, val) in u {
                    if !val.is_finite() {
                        return Err(Error::InvalidInteraction(format!("u{r:?} = {val} is not finite")));
                    }
                    if r.iter().any(|c| c.abs() > *range) {
                        return Err(Error::InvalidInteraction(format!(
                            "u has a term at {r:?} beyond range {range}"
                        )));
                    }
                }
                Ok(())
            }
            InteractionSpec::GeneralBounded { table } => match table.iter().find(|(_, v)| !v.is_finite()) {
                Some((x, v)) => Err(Error::InvalidInteraction(format!("U{x:?} = {v} is not finite"))),
                None => Ok(()),
            },
        }
    }

    /// Value `U(x)` at the flat multi-particle site `x`.
    pub fn value_at(&self, x: &[i64], d: usize) -> f64 {
        match self {
            InteractionSpec::None => 0.0,
            InteractionSpec::Pair { u, .. } => {
                let n = x.len() / d;
                let mut total = 0.0;
                let mut diff = vec![0i64; d];
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        for nu in 0..d {
                            diff[nu] = x[i * d + nu] - x[j * d + nu];
                        }
                        total += u.get(&diff).copied().unwrap_or(0.0);
                    }
                }
                total
            }
            InteractionSpec::GeneralBounded { table } => table.get(x).copied().unwrap_or(0.0),
        }
    }

    /// `sup |U|`, or an upper bound for the pair form.
    pub fn sup_norm(&self, particles: usize) -> f64 {
        match self {
            InteractionSpec::None => 0.0,
            InteractionSpec::Pair { u, .. } => {
                let pairs = (particles * particles.saturating_sub(1)) as f64;
                pairs * u.values().fold(0.0f64, |m, v| m.max(v.abs()))
            }
            InteractionSpec::GeneralBounded { table } => table.values().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }

    /// Interaction seen after reordering particle coordinates by `perm`
    /// (see [`RectangularDomain::permuted`]). Pair interactions are symmetric
    /// and come back unchanged.
    pub fn permuted(&self, perm: &[usize], d: usize) -> Result<Self> {
        match self {
            InteractionSpec::GeneralBounded { table } => {
                let mut out = HashMap::with_capacity(table.len());
                for (x, v) in table {
                    let n = x.len() / d;
                    check_permutation(perm, n)?;
                    let key: Vec<i64> = perm.iter().flat_map(|&p| x[p * d..(p + 1) * d].iter().copied()).collect();
                    out.insert(key, *v);
                }
                Ok(InteractionSpec::GeneralBounded { table: out })
            }
            other => Ok(other.clone()),
        }
    }
}

/// Symmetric matrix of `H^Λ`: shared hopping part plus a diagonal.
#[derive(Debug, Clone)]
pub struct AssembledHamiltonian {
    domain: RectangularDomain,
    hopping: Arc<CsrMatrix<f64>>,
    diagonal: Vec<f64>,
}

impl AssembledHamiltonian {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn domain(&self) -> &RectangularDomain {
        &self.domain
    }

    pub fn hopping(&self) -> &CsrMatrix<f64> {
        &self.hopping
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Same hopping part, new diagonal.
    pub fn with_diagonal(&self, diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "diagonal has length {}, expected {}",
                diagonal.len(),
                self.dim()
            )));
        }
        Ok(Self { domain: self.domain.clone(), hopping: Arc::clone(&self.hopping), diagonal })
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let hop = self
            .hopping
            .get_entry(row, col)
            .map(|e| e.into_value())
            .unwrap_or(0.0);
        if row == col {
            hop + self.diagonal[row]
        } else {
            hop
        }
    }

    /// Number of stored off-diagonal entries in `row`.
    pub fn row_hops(&self, row: usize) -> usize {
        self.hopping.row(row).nnz()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::from(&*self.hopping);
        for (i, d) in self.diagonal.iter().enumerate() {
            m[(i, i)] += d;
        }
        m
    }

    /// Full sparse matrix including the diagonal.
    pub fn to_csr(&self) -> CsrMatrix<f64> {
        let mut coo = CooMatrix::new(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            coo.push(r, c, v);
        }
        CsrMatrix::from(&coo)
    }

    /// Row-major `(row, col, value)` triplets; every diagonal entry is listed.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.hopping.nnz() + self.dim());
        for (r, row) in self.hopping.row_iter().enumerate() {
            let mut diag_done = false;
            for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                if !diag_done && c > r {
                    out.push((r, r, self.diagonal[r]));
                    diag_done = true;
                }
                if c == r {
                    out.push((r, r, v + self.diagonal[r]));
                    diag_done = true;
                } else {
                    out.push((r, c, v));
                }
            }
            if !diag_done {
                out.push((r, r, self.diagonal[r]));
            }
        }
        out
    }

    /// Debug dump: one `row col value` line per triplet, 0-based indices,
    /// values at 17 significant digits.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (r, c, v) in self.triplets() {
            writeln!(out, "{r} {c} {}", format_sig17(v))?;
        }
        Ok(())
    }
}

/// Hopping matrix of `Σ_i h_0^(i)` restricted to `Λ`, zero diagonal.
pub fn kinetic_matrix(domain: &RectangularDomain) -> AssembledHamiltonian {
    let dim = domain.cardinality();
    let strides = domain.particle_strides();
    // inner strides of each rectangle, per spatial component
    let rect_strides: Vec<Vec<usize>> = domain
        .factors()
        .iter()
        .map(|r| {
            let ext = r.extents();
            let mut s = vec![1usize; ext.len()];
            for nu in (0..ext.len().saturating_sub(1)).rev() {
                s[nu] = s[nu + 1] * ext[nu + 1];
            }
            s
        })
        .collect();
    let extents: Vec<Vec<usize>> = domain.factors().iter().map(|r| r.extents()).collect();

    let mut coo = CooMatrix::new(dim, dim);
    for idx in 0..dim {
        let locals = domain.local_indices(idx);
        for (i, &local) in locals.iter().enumerate() {
            for (nu, &ext) in extents[i].iter().enumerate() {
                let coord = (local / rect_strides[i][nu]) % ext;
                let step = strides[i] * rect_strides[i][nu];
                if coord > 0 {
                    coo.push(idx, idx - step, 1.0);
                }
                if coord + 1 < ext {
                    coo.push(idx, idx + step, 1.0);
                }
            }
        }
    }
    AssembledHamiltonian {
        domain: domain.clone(),
        hopping: Arc::new(CsrMatrix::from(&coo)),
        diagonal: vec![0.0; dim],
    }
}

/// `V(x) = Σ_i v(x_i)` for every `x ∈ Λ`, in linear-index order.
pub fn potential_diagonal(domain: &RectangularDomain, v: &PotentialField) -> Result<Vec<f64>> {
    let per_factor: Vec<Vec<f64>> = domain
        .factors()
        .iter()
        .map(|rect| {
            rect.sites()
                .into_iter()
                .map(|s| v.get(&s).ok_or(Error::MissingSite(s)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..domain.cardinality())
        .map(|idx| {
            domain
                .local_indices(idx)
                .iter()
                .zip(&per_factor)
                .map(|(&k, vals)| vals[k])
                .sum()
        })
        .collect())
}

/// `U(x)` for every `x ∈ Λ`, in linear-index order.
pub fn interaction_diagonal(domain: &RectangularDomain, interaction: &InteractionSpec) -> Vec<f64> {
    let dim = domain.cardinality();
    if matches!(interaction, InteractionSpec::None) {
        return vec![0.0; dim];
    }
    let d = domain.spatial_dim();
    (0..dim)
        .map(|idx| {
            let x = domain.index_site(idx).expect("index in range");
            interaction.value_at(&x, d)
        })
        .collect()
}

/// `H^Λ` for the potential `v` and interaction `U`.
pub fn assemble(
    domain: &RectangularDomain,
    v: &PotentialField,
    interaction: &InteractionSpec,
) -> Result<AssembledHamiltonian> {
    interaction.validate()?;
    let kinetic = kinetic_matrix(domain);
    let pot = potential_diagonal(domain, v)?;
    let int = interaction_diagonal(domain, interaction);
    kinetic.with_diagonal(pot.iter().zip(&int).map(|(a, b)| a + b).collect())
}

/// `m_ξ(x) = #{i : x_i = ξ}`, the derivative `∂V(x)/∂v(ξ)`, for every `x`.
pub fn site_multiplicity(domain: &RectangularDomain, xi: &[i64]) -> Vec<f64> {
    let hits: Vec<Option<usize>> = domain.factors().iter().map(|r| r.local_index(xi)).collect();
    (0..domain.cardinality())
        .map(|idx| {
            domain
                .local_indices(idx)
                .iter()
                .zip(&hits)
                .filter(|(k, h)| Some(**k) == **h)
                .count() as f64
        })
        .collect()
}

/// Support and rank of the diagonal perturbation `∂H/∂v(ξ)` for `ξ ∈ Λ_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationInfo {
    pub site: Site,
    /// Linear indices `x` with `x_i = ξ` for some `i`, ascending.
    pub support: Vec<usize>,
    pub rank: usize,
    /// `K |Λ| / |Λ_1|`.
    pub bound: usize,
}

pub fn perturbation_info(domain: &RectangularDomain, xi: &[i64]) -> Result<PerturbationInfo> {
    let info = domain.regularity();
    if !info.is_regular {
        return Err(Error::NotRegular);
    }
    if !domain.factor(0).contains(xi) {
        return Err(Error::SiteOutsideDomain(format!("{xi:?} is not in the first factor")));
    }
    let support: Vec<usize> = site_multiplicity(domain, xi)
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0.0)
        .map(|(i, _)| i)
        .collect();
    let bound = info.k * domain.cardinality() / domain.factor(0).site_count();
    let rank = support.len();
    assert!(rank <= bound, "perturbation rank {rank} exceeds K|Λ|/|Λ_1| = {bound}");
    Ok(PerturbationInfo { site: xi.to_vec(), support, rank, bound })
}
