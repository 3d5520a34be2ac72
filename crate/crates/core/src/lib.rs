//! Upper bounds on high-order central vanishing from centered moments of
//! the 1-level statistic, with the supporting numerics: quadrature, test
//! functions, classical-group densities, matching sums, a generator search
//! and a Haar-matrix Monte Carlo check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod kernels;
pub mod moments;
pub mod optimize;
pub mod quadrature;
pub mod rmt;
pub mod testfunc;

pub use bounds::{
    best_bound, bound_level1, bound_level2, bound_moment, reproduce_table, BoundCandidate, BoundError,
    BoundMethod, BoundResult, ExpectationSource, TableCell, TableColumn, TableId,
};
pub use kernels::{expectation_1level, expectation_2level, SymmetryGroup};
pub use moments::{centered_moment, MomentError, MomentFamily, MomentRequest, MomentResult, Regime};
pub use optimize::{
    objective, search, GeneratorBasis, OptimizationProblem, OptimizeError, SearchResult, SearchSettings,
};
pub use quadrature::{QuadratureError, QuadratureSettings};
pub use rmt::{empirical_moments, EmpiricalMoments, Ensemble, EnsembleSpec, RmtError};
pub use testfunc::{
    make_from_generator, make_naive, parse_test_function, sigma2, GeneratorKind, GeneratorSpec, TestFunction,
    TestFunctionError, TestFunctionSpec,
};
