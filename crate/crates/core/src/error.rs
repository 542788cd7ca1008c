use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("site outside domain: {0}")]
    SiteOutsideDomain(String),
    #[error("rectangular domain is not regular (some factors overlap without being equal)")]
    NotRegular,
    #[error("potential has no value at site {0:?}")]
    MissingSite(Vec<i64>),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid interaction: {0}")]
    InvalidInteraction(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("eigensolver did not converge for a {0}x{0} matrix")]
    NoConvergence(usize),
    #[error("quadrature did not reach tolerance {tolerance:e} on [{a}, {b}]")]
    Quadrature { a: f64, b: f64, tolerance: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("check inapplicable: {0}")]
    Inapplicable(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
