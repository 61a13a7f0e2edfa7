//! Calculus of geometric structures on `R^n`.
//!
//! A geometric structure is a non-degenerate bilinear form `b(x, y) = x^T M y`.
//! It determines the operator `B` with `<x, y> = b(x, B y)`, left and right
//! adjoints, b-orthogonal complements, the symmetry group
//! `G_b = {A : A B A^T = B}` with its Lie algebra, left and right gradients
//! `B^T grad f` and `B grad f`, and the b-Laplacian `sum_ij B_ij d_i d_j f`.
//! Euclidean, Minkowski, pseudo-Euclidean and symplectic geometry are all
//! special cases.

pub mod adjoints;
pub mod diffops;
pub mod error;
pub mod fields;
pub mod forms;
pub mod harness;
pub mod io;
pub mod numerics;
pub mod report;
pub mod sampling;
pub mod subspaces;
pub mod symmetry;

pub use adjoints::{adjoint, check_adjoint_identities, LinearOperator, Side};
pub use diffops::GroupSample;
pub use error::{Error, Result};
pub use fields::{PointField, ScalarField, VectorField};
pub use forms::{BilinearForm, GeometricPair, StructureClass, StructureKind};
pub use harness::{run_suite, StructureFamily, SuiteConfig, SuiteReport};
pub use numerics::{Matrix, Vector};
pub use report::{CheckReport, IdentityReport};
pub use subspaces::{perp, Subspace};
