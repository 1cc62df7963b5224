//! Numerics for a generalized Fox H kernel whose tail gamma factors carry
//! real positive exponents, plus the probability layer built on it:
//! contour evaluation, closed-form Mellin transforms, product/quotient
//! distribution constructions, and Monte Carlo verification.

mod contour;
mod dist;
mod error;
mod gamma;
mod mellin;
mod quad;
mod rng;
mod spec;
mod table;
mod verify;

pub use contour::{ihat_eval, ihat_eval_report, Contour, EvalReport};
pub use dist::{
    classical, make_base_dist, phi, product_dist, quotient_dist, reduce_to_h, BaseParams,
    Classical, ClassicalDist, IhatDensity,
};
pub use error::{IhatError, Result};
pub use gamma::{log_gamma, powered_gamma_log};
pub use mellin::{
    mellin_ihat, mellin_ihat_product, mellin_ihat_product_quadrature, mellin_ihat_quadrature,
    merge_mellin_product, pdf_from_mellin, ScaledIhat,
};
pub use rng::SplitMix64;
pub use spec::{GammaFactor, IhatSpec};
pub use table::CdfTable;
pub use verify::{
    convolution_oracle_product, ks_compare, ks_compare_table, pointwise_oracle_report,
    quotient_oracle, sample, sample_table, tabulate_cdf, MergeOp, ReportKind, SampleBatch,
    VerificationReport, DEFAULT_GRID, KS_ALPHA,
};
