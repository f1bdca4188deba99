//! Sparse multivariate regression with temporally correlated noise.
//!
//! The response `Y = XB + E` has i.i.d. rows whose columns follow a
//! stationary autoregressive process. Columns are whitened with an estimate
//! of the noise precision, the model is vectorized through a Kronecker
//! product, and `vec(B)` is fitted with a coordinate-descent LASSO whose
//! sign recovery can be studied by Monte Carlo.

pub mod cli;
pub mod covariance;
pub mod error;
pub mod lasso;
pub mod linalg;
pub mod simulate;
pub mod theory;
pub mod whitening;

pub use error::{Error, Result};
