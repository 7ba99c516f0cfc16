//! Exact workbench for invariant forms on Lie-algebra models of compact complex manifolds.

pub mod cohomology;
pub mod cones;
pub mod corpus;
pub mod deform;
pub mod forms;
pub mod linalg;
pub mod metric;
pub mod model;
pub mod operator;
pub mod parser;
pub mod properties;
pub mod report;
pub mod scalar;

pub use forms::{Bidegree, Form, FormBasisIndex, FormSpace, Monomial};
pub use linalg::{Matrix, Subspace};
pub use model::{validate_model, Differential, LieComplexModel, ModelError};
pub use operator::Operator;
pub use scalar::{GaussianRational, Gq, Q};

/// Exact forms, matrices and operators.
pub type ExactForm = Form<Gq>;
pub type ExactMatrix = Matrix<Gq>;
pub type ExactOperator = Operator<Gq>;
pub type ExactSubspace = Subspace<Gq>;
/// Floating point counterparts, used for spectra and the cone solver.
pub type FloatMatrix = Matrix<scalar::C64>;
pub type FloatOperator = Operator<scalar::C64>;
