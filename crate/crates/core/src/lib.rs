//! Sobolev spaces on weighted `p`-ary metric trees, their harmonic symmetry
//! bases, and the trace onto the boundary realized on multiscale
//! decompositions of the unit box.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`.

pub mod approx;
pub mod error;
pub mod export;
pub mod harmonic;
pub mod metric_tree;
pub mod multiscale;
pub mod scalar;
pub mod trace;
pub mod tree_function;

pub use approx::{
    approx_norm, besov_norm, besov_norm_to, detail_qn, equivalence_report, gagliardo_seminorm,
    modulus_of_smoothness, norm_bundle, project_pn, DomainFn, GridFn, MonteCarlo, NormOptions,
    SampledFn,
};
pub use error::{Error, Result};
pub use harmonic::{
    analyze, basis_function, basis_gram, f_infty, gate, harmonic_combination, sigma,
    symmetry_indices, synth, weight_q, RadialProfile, SymmetryIndex,
};
pub use metric_tree::{
    geometric_tree, perturbed_tree, EdgeId, EdgePerturbation, TreeDescription, TreeParams,
    TreeTopology,
};
pub use multiscale::{hypercube_decomposition, interval_decomposition, Decomposition};
pub use scalar::{Real, C};
pub use trace::{gamma, identify, lift, tau, tau_perturbed, tau_vertex, TraceCoefficients};
pub use tree_function::TreeFunction;

pub type Complex64 = C<f64>;
pub type Params = TreeParams<f64>;
pub type Tree = TreeTopology<f64>;
pub type TreeFn = TreeFunction<f64>;
pub type Coefficients = TraceCoefficients<f64>;
pub type Dec = Decomposition<f64>;
pub type PcFn<'a> = approx::PiecewiseConstantFn<'a, f64>;
pub type Profile = RadialProfile<f64>;
