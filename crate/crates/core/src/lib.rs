//! Exact computations for graded Lie algebras over free abelian groups:
//! brackets, windowed ½-derivation systems and transposed Poisson checks.

pub mod algebra;
pub mod exactlin;
pub mod halfderiv;
pub mod lattice;
pub mod scalar;
pub mod tpstruct;

pub use algebra::{AlgebraElement, AlgebraSpec, BasisLabel, Family};
pub use lattice::{AdditiveMap, BiadditiveForm, GroupElement, Pairing, Window};
pub use scalar::Scalar;
