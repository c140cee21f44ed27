use thiserror::Error;

use crate::Vec3;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("node index ({i}, {j}, {k}) out of range for {n} nodes per axis")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        k: usize,
        n: usize,
    },

    #[error("Green's function evaluated at charge position {position:?}")]
    SingularEvaluation { position: Vec3 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("charge at {position:?} lies outside the computational domain")]
    OutOfDomain { position: Vec3 },

    #[error("charge at {position:?} coincides with grid node ({i}, {j}, {k})")]
    ChargeOnNode {
        position: Vec3,
        i: usize,
        j: usize,
        k: usize,
    },

    #[error("solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
