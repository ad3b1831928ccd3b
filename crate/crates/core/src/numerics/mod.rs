//! Linear algebra, special functions and random variates shared by the
//! models.

mod linalg;
mod rng;
mod sample;
mod special;
mod stirling;

pub use linalg::{chol_solve, dot, Cholesky, SymMatrix};
pub use rng::RngStream;
pub use sample::{
    sample_beta, sample_categorical_logits, sample_categorical_logits_with, sample_gamma, sample_gaussian_vector,
    sample_gig_half, sample_inverse_gaussian, sample_standard_normal, LAMBDA_MAX, LAMBDA_MIN,
};
pub(crate) use special::digamma_pos;
pub use special::{digamma, log_sum_exp};
pub use stirling::{log_stirling_table, StirlingTable};
