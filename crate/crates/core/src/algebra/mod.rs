//! Exact arithmetic: rationals, the graded coefficient ring, sparse
//! polynomials in u, truncated series and fraction-free linear solving.

mod rat;
mod scalar;
pub mod poly;
pub mod series;
pub mod linsolve;
pub mod modular;

pub use linsolve::{LinearSystem, Solution, SolveError};
pub use modular::{ModularError, RatSolution, RatSystem};
pub use poly::{GradedPoly, Weight, U_WEIGHTS};
pub use rat::Rat;
pub use scalar::{Coeff, Mono, MU_WEIGHTS};
pub use series::{Param, TruncSeries};
