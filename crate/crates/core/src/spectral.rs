//! Dense symmetric eigendecomposition and the eigenvalue statistics used
//! throughout: counting function, distance to the spectrum and half-open
//! window counts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hamiltonian::AssembledHamiltonian;

/// Ascending eigenvalues (with multiplicity) and matching orthonormal
/// eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, n: usize) -> DVector<f64> {
        self.eigenvectors.column(n).into_owned()
    }

    pub fn counting_function(&self, e: f64) -> usize {
        counting_function(&self.eigenvalues, e)
    }

    pub fn spectral_distance(&self, e: f64) -> f64 {
        spectral_distance(&self.eigenvalues, e)
    }

    pub fn windowed_trace(&self, e: f64, kappa: f64) -> usize {
        windowed_trace(&self.eigenvalues, e, kappa)
    }

    /// `max_n ‖H ψ_n − E_n ψ_n‖`.
    pub fn max_residual(&self, h: &DMatrix<f64>) -> f64 {
        (0..self.dim())
            .map(|n| {
                let psi = self.eigenvectors.column(n);
                (h * psi - psi * self.eigenvalues[n]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max_{m,n} |⟨ψ_m, ψ_n⟩ − δ_mn|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        (gram - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    /// `Σ_n E_n ψ_n ψ_nᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * d * self.eigenvectors.transpose()
    }
}

/// Full decomposition of `H^Λ` through its dense form.
pub fn eigen_symmetric(h: &AssembledHamiltonian) -> Result<Spectrum> {
    eigen_symmetric_dense(h.to_dense())
}

pub fn eigen_symmetric_dense(m: DMatrix<f64>) -> Result<Spectrum> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, not square", n, m.ncols())));
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 1000 * n.max(1)).ok_or(Error::NoConvergence(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Ascending eigenvalues only; skips eigenvector accumulation.
pub fn eigenvalues_symmetric(h: &AssembledHamiltonian) -> Vec<f64> {
    let mut e: Vec<f64> = h.to_dense().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// `N(H, E) = #{n : E_n ≤ E}` for ascending `eigenvalues`.
pub fn counting_function(eigenvalues: &[f64], e: f64) -> usize {
    eigenvalues.partition_point(|&x| x <= e)
}

/// `min_n |E_n − E|`; `+∞` for an empty spectrum.
pub fn spectral_distance(eigenvalues: &[f64], e: f64) -> f64 {
    eigenvalues.iter().map(|x| (x - e).abs()).fold(f64::INFINITY, f64::min)
}

/// `#{n : E − κ < E_n ≤ E + κ}` for ascending `eigenvalues`.
pub fn windowed_trace(eigenvalues: &[f64], e: f64, kappa: f64) -> usize {
    counting_function(eigenvalues, e + kappa) - counting_function(eigenvalues, e - kappa)
}
