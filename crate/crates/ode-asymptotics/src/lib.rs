//! Numerical toolkit for the asymptotic analysis of linear fourth-order and
//! nonlinear third-order ordinary differential equations.
//!
//! The pipeline, bottom to top:
//!
//! * [`expr`] — a small expression language in one variable `t` with exact
//!   symbolic differentiation, used for every coefficient function.
//! * [`kernels`] — characteristic cubic roots, the four-case Green kernel of
//!   the constant-coefficient third-order operator, and the scalar constants
//!   (A, Â, ς) controlling its exponential envelope.
//! * [`rhs`] — the polynomial right-hand side ℙ(t, z, z′, z″) with its
//!   multi-index coefficient table, the smallness functionals 𝒢/ℒ, and the
//!   hypothesis report.
//! * [`solver`] — the integral operator T, Picard iteration to the decaying
//!   solution, and asymptotic-envelope domination.
//! * [`lp`] — windowed L^p norms and the Θ/Ψ decomposition of the solution.
//! * [`poincare`] — Riccati-type reduction of fourth-order equations with
//!   decaying perturbations, Levinson constants, fundamental systems, and
//!   asymptotic-ratio reporting.
//! * [`unbounded`] — the Liouville-style normalization of equations with
//!   unbounded coefficients and its L¹ hypothesis battery.
//! * [`oracle`] — a direct adaptive Runge–Kutta integrator used as the
//!   reference for everything else.
//!
//! Closed-form layers (`expr` evaluation, root finding, kernel branches) are
//! generic over [`num_traits::Float`]; the quadrature and iteration machinery
//! is `f64`-only because its accuracy contracts sit below `f32` resolution.

pub mod expr;
pub mod kernels;
pub mod lp;
pub mod oracle;
pub mod poincare;
pub mod quad;
pub mod rhs;
pub mod solver;
pub mod unbounded;

pub use expr::ExprNode;
pub use kernels::{CharRoots, KernelConstants, SignCase};
pub use rhs::{CoefficientTable, MultiIndex};
pub use solver::GridFunction;

/// Concrete `f64` root triple, the type every downstream module consumes.
pub type CharRoots64 = kernels::CharRoots<f64>;
/// Concrete `f32` root triple for callers that only need the closed forms.
pub type CharRoots32 = kernels::CharRoots<f32>;
/// Concrete `f64` kernel constants.
pub type KernelConstants64 = kernels::KernelConstants<f64>;
/// Concrete `f32` kernel constants.
pub type KernelConstants32 = kernels::KernelConstants<f32>;
