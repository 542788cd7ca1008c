//! Rectangles in `Z^d`, rectangular product domains in `Z^{Nd}` and the
//! mixed-radix bijection between multi-particle sites and matrix indices.
//!
//! A multi-particle site `x = (x_1, ..., x_N)` is stored flat as `N * d`
//! integers, particle-major. Linear indices enumerate the domain
//! lexicographically over `(x_1, ..., x_N)`, so particle 1 is the slowest
//! digit and the last spatial component of particle `N` the fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice site in `Z^d`.
pub type Site = Vec<i64>;

/// Axis-aligned box `{ξ ∈ Z^d : lower[ν] ≤ ξ_ν ≤ upper[ν]}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rectangle {
    lower: Vec<i64>,
    upper: Vec<i64>,
}

impl Rectangle {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDomain("rectangle must have dimension ≥ 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "rectangle bounds have different lengths ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(nu) = (0..lower.len()).find(|&nu| lower[nu] > upper[nu]) {
            return Err(Error::InvalidDomain(format!(
                "rectangle component {nu}: lower {} exceeds upper {}",
                lower[nu], upper[nu]
            )));
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional interval `[lower, upper]`.
    pub fn interval(lower: i64, upper: i64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    /// Side lengths `upper[ν] - lower[ν] + 1`.
    pub fn extents(&self) -> Vec<usize> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l + 1) as usize)
            .collect()
    }

    pub fn site_count(&self) -> usize {
        self.extents().iter().product()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.dim()
            && site
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| l <= x && x <= u)
    }

    pub fn intersects(&self, other: &Rectangle) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|nu| self.lower[nu] <= other.upper[nu] && other.lower[nu] <= self.upper[nu])
    }

    /// Position of `site` in the lexicographic enumeration of the rectangle.
    pub fn local_index(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut idx = 0usize;
        for (nu, ext) in self.extents().into_iter().enumerate() {
            idx = idx * ext + (site[nu] - self.lower[nu]) as usize;
        }
        Some(idx)
    }

    /// Inverse of [`Rectangle::local_index`].
    pub fn local_site(&self, mut idx: usize) -> Site {
        let ext = self.extents();
        let mut site = vec![0i64; self.dim()];
        for nu in (0..self.dim()).rev() {
            site[nu] = self.lower[nu] + (idx % ext[nu]) as i64;
            idx /= ext[nu];
        }
        site
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> Vec<Site> {
        (0..self.site_count()).map(|k| self.local_site(k)).collect()
    }
}

/// Lexicographic enumeration of the sites of `rect`.
pub fn rectangle_sites(rect: &Rectangle) -> Vec<Site> {
    rect.sites()
}

/// `Λ = Λ_1 × ... × Λ_N ⊂ Z^{Nd}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RectangularDomain {
    d: usize,
    factors: Vec<Rectangle>,
}

/// Result of [`classify_regularity`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularityInfo {
    pub is_regular: bool,
    /// Groups of particle coordinates (0-based) with identical rectangles,
    /// ordered by first occurrence; each group is ascending.
    pub classes: Vec<Vec<usize>>,
    /// Size of the class containing the first coordinate.
    pub k: usize,
}

impl RectangularDomain {
    pub fn new(factors: Vec<Rectangle>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidDomain("domain needs at least one particle".into()))?;
        let d = first.dim();
        if let Some(i) = factors.iter().position(|r| r.dim() != d) {
            return Err(Error::InvalidDomain(format!(
                "factor {i} lives in Z^{} but factor 0 lives in Z^{d}",
                factors[i].dim()
            )));
        }
        let total = factors
            .iter()
            .try_fold(1usize, |acc, r| acc.checked_mul(r.site_count()));
        if total.is_none() {
            return Err(Error::InvalidDomain("domain cardinality overflows".into()));
        }
        Ok(Self { d, factors })
    }

    /// `N` copies of the same rectangle.
    pub fn power(rect: Rectangle, particles: usize) -> Result<Self> {
        Self::new(vec![rect; particles])
    }

    pub fn spatial_dim(&self) -> usize {
        self.d
    }

    pub fn particles(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Rectangle] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &Rectangle {
        &self.factors[i]
    }

    /// `|Λ| = Π_i |Λ_i|`.
    pub fn cardinality(&self) -> usize {
        self.factors.iter().map(Rectangle::site_count).product()
    }

    pub fn regularity(&self) -> RegularityInfo {
        classify_regularity(self)
    }

    pub fn is_regular(&self) -> bool {
        self.regularity().is_regular
    }

    /// Distinct single-particle sites `∪_i Λ_i`, in order of first
    /// appearance (factor by factor, lexicographic within a factor).
    pub fn union_sites(&self) -> Vec<Site> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for rect in &self.factors {
            for s in rect.sites() {
                if seen.insert(s.clone()) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Linear index of the flat multi-particle site `x` (length `N * d`).
    pub fn site_index(&self, x: &[i64]) -> Result<usize> {
        if x.len() != self.particles() * self.d {
            return Err(Error::SiteOutsideDomain(format!(
                "site has {} coordinates, expected {}",
                x.len(),
                self.particles() * self.d
            )));
        }
        let mut idx = 0usize;
        for (i, rect) in self.factors.iter().enumerate() {
            let block = &x[i * self.d..(i + 1) * self.d];
            let local = rect.local_index(block).ok_or_else(|| {
                Error::SiteOutsideDomain(format!("particle {i} at {block:?} is outside its rectangle"))
            })?;
            idx = idx * rect.site_count() + local;
        }
        Ok(idx)
    }

    /// Flat multi-particle site at linear index `idx`.
    pub fn index_site(&self, idx: usize) -> Result<Vec<i64>> {
        if idx >= self.cardinality() {
            return Err(Error::SiteOutsideDomain(format!(
                "index {idx} out of range for |Λ| = {}",
                self.cardinality()
            )));
        }
        let locals = self.local_indices(idx);
        let mut x = Vec::with_capacity(self.particles() * self.d);
        for (rect, &k) in self.factors.iter().zip(&locals) {
            x.extend(rect.local_site(k));
        }
        Ok(x)
    }

    /// Per-particle positions within their own rectangles for linear index `idx`.
    pub fn local_indices(&self, mut idx: usize) -> Vec<usize> {
        let mut locals = vec![0usize; self.particles()];
        for (i, rect) in self.factors.iter().enumerate().rev() {
            let n = rect.site_count();
            locals[i] = idx % n;
            idx /= n;
        }
        locals
    }

    /// Index strides: moving particle `i` by one local position shifts the
    /// linear index by `strides[i]`.
    pub fn particle_strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.particles()];
        for i in (0..self.particles().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1].site_count();
        }
        strides
    }

    /// Reorders particle coordinates by `perm`: factor `j` of the result is
    /// factor `perm[j]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.particles())?;
        Self::new(perm.iter().map(|&p| self.factors[p].clone()).collect())
    }

    /// Brings a regular domain into the form where factors `0..K` coincide
    /// and are disjoint from every later factor. Returns the reordered
    /// domain and the permutation used (see [`RectangularDomain::permuted`]).
    pub fn normal_form(&self) -> Result<(Self, Vec<usize>)> {
        let info = self.regularity();
        if !info.is_regular {
            return Err(Error::NotRegular);
        }
        let perm: Vec<usize> = info.classes.iter().flatten().copied().collect();
        Ok((self.permuted(&perm)?, perm))
    }

    /// True when factors `0..K` coincide and are disjoint from the rest.
    pub fn is_normal_form(&self) -> bool {
        let info = self.regularity();
        info.is_regular && info.classes[0] == (0..info.k).collect::<Vec<_>>()
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidDomain(format!("permutation has length {}, expected {n}", perm.len())));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidDomain(format!("{perm:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// Groups coordinates with identical rectangles and decides regularity:
/// every pair of factors is either equal or disjoint.
pub fn classify_regularity(domain: &RectangularDomain) -> RegularityInfo {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, rect) in domain.factors.iter().enumerate() {
        match classes.iter_mut().find(|c| &domain.factors[c[0]] == rect) {
            Some(class) => class.push(i),
            None => classes.push(vec![i]),
        }
    }
    let is_regular = classes.iter().enumerate().all(|(a, ca)| {
        classes[a + 1..]
            .iter()
            .all(|cb| !domain.factors[ca[0]].intersects(&domain.factors[cb[0]]))
    });
    let k = classes[0].len();
    RegularityInfo { is_regular, classes, k }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: i64, b: i64) -> Rectangle {
        Rectangle::interval(a, b).unwrap()
    }

    #[test]
    fn sites_of_small_rectangles() {
        assert_eq!(rectangle_sites(&iv(0, 1)), vec![vec![0], vec![1]]);
        let single = Rectangle::new(vec![0, 0], vec![0, 0]).unwrap();
        assert_eq!(rectangle_sites(&single), vec![vec![0, 0]]);
        let r = Rectangle::new(vec![0, 5], vec![1, 6]).unwrap();
        assert_eq!(
            rectangle_sites(&r),
            vec![vec![0, 5], vec![0, 6], vec![1, 5], vec![1, 6]]
        );
    }

    #[test]
    fn invalid_rectangles_rejected() {
        assert!(Rectangle::new(vec![1], vec![0]).is_err());
        assert!(Rectangle::new(vec![0, 0], vec![1]).is_err());
        assert!(Rectangle::new(vec![], vec![]).is_err());
        assert!(RectangularDomain::new(vec![iv(0, 1), Rectangle::new(vec![0, 0], vec![1, 1]).unwrap()]).is_err());
    }

    #[test]
    fn regularity_examples() {
        let same = RectangularDomain::new(vec![iv(0, 5), iv(0, 5)]).unwrap();
        let info = classify_regularity(&same);
        assert!(info.is_regular);
        assert_eq!(info.k, 2);

        let disjoint = RectangularDomain::new(vec![iv(0, 5), iv(10, 15)]).unwrap();
        let info = classify_regularity(&disjoint);
        assert!(info.is_regular);
        assert_eq!(info.k, 1);

        let overlap = RectangularDomain::new(vec![iv(0, 5), iv(3, 8)]).unwrap();
        assert!(!classify_regularity(&overlap).is_regular);
    }

    #[test]
    fn index_examples() {
        let dom = RectangularDomain::power(iv(0, 1), 2).unwrap();
        assert_eq!(dom.site_index(&[0, 0]).unwrap(), 0);
        assert_eq!(dom.site_index(&[1, 1]).unwrap(), 3);
        assert_eq!(dom.site_index(&[0, 1]).unwrap(), 1);
        assert!(dom.site_index(&[2, 0]).is_err());
        assert!(dom.site_index(&[0]).is_err());
        assert!(dom.index_site(4).is_err());
    }

    #[test]
    fn round_trip_on_mixed_domain() {
        let dom = RectangularDomain::new(vec![
            Rectangle::new(vec![0, -1], vec![2, 1]).unwrap(),
            Rectangle::new(vec![5, 5], vec![6, 8]).unwrap(),
            Rectangle::new(vec![0, -1], vec![2, 1]).unwrap(),
        ])
        .unwrap();
        assert_eq!(dom.cardinality(), 9 * 8 * 9);
        for idx in 0..dom.cardinality() {
            let x = dom.index_site(idx).unwrap();
            assert_eq!(dom.site_index(&x).unwrap(), idx);
        }
    }

    #[test]
    fn normal_form_moves_first_class_to_front() {
        let a = iv(0, 2);
        let b = iv(4, 6);
        let dom = RectangularDomain::new(vec![b.clone(), a.clone(), b.clone(), a.clone()]).unwrap();
        assert!(!dom.is_normal_form());
        let (nf, perm) = dom.normal_form().unwrap();
        assert_eq!(perm, vec![0, 2, 1, 3]);
        assert_eq!(nf.factors(), &[b.clone(), b, a.clone(), a][..]);
        assert!(nf.is_normal_form());
        assert_eq!(nf.regularity().k, 2);

        let bad = RectangularDomain::new(vec![iv(0, 5), iv(3, 8)]).unwrap();
        assert!(matches!(bad.normal_form(), Err(Error::NotRegular)));
    }

    #[test]
    fn union_sites_deduplicates_shared_rectangles() {
        let dom = RectangularDomain::new(vec![iv(0, 2), iv(0, 2), iv(5, 6)]).unwrap();
        assert_eq!(dom.union_sites().len(), 5);
    }
}
