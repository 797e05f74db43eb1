//! Exact symbolic calculus for variational symmetries and multi-time
//! Lagrangian forms on jet spaces.
//!
//! The engine works with a fixed class of differential functions: polynomials
//! in jet variables and in sin/cos of the undifferentiated dependent
//! variables, with arbitrary-precision rational coefficients. The class is
//! closed under all the operators provided here and admits a canonical form
//! with a decidable zero test, so every verification in this crate is exact;
//! there are no tolerances anywhere.
//!
//! Layers, bottom to top:
//!
//! * [`context`], [`expr`] -- variable contexts, canonical expressions,
//!   arithmetic, formal partials;
//! * [`calculus`] -- total derivatives, prolonged evolutionary fields,
//!   divergences, full and restricted variational derivatives;
//! * [`reduction`] -- differential equations as oriented rewrite systems,
//!   normal forms "on solutions";
//! * [`symmetry`] -- variational-symmetry certificates, divergence tests,
//!   witness search, Noether fluxes;
//! * [`pluri`] -- Lagrangian k-forms, exterior derivative, closedness
//!   residuals, multi-time Euler-Lagrange systems of second-order 2-forms;
//! * [`parse`], [`problem`], [`report`], [`cli`] -- the expression grammar,
//!   the problem-file format and the command-line driver.
//!
//! Expressions are immutable after construction and all operations are pure,
//! so values can be shared freely across threads.
//!
//! ```
//! use plurilag::*;
//!
//! let ctx = Context::shared(&["x", "y"], &["u"])?;
//! let lagrangian = parse_expr("1/2*u_x*u_y - cos(u)", &ctx)?;
//!
//! // the Euler-Lagrange expression of the Lagrangian
//! let el = euler_operator(&lagrangian, 0)?;
//! assert_eq!(el, parse_expr("sin(u) - u_xy", &ctx)?);
//!
//! // its zero set, as a rewrite rule, annihilates the expression
//! let rule = Rule::new(
//!     JetVar::new(0, MultiIndex::new(vec![1, 1])),
//!     parse_expr("sin(u)", &ctx)?,
//! )?;
//! let system = EquationSystem::new(&ctx, vec![rule])?;
//! assert!(system.is_consequence(&el)?);
//! # Ok::<(), plurilag::Error>(())
//! ```

pub mod calculus;
pub mod cli;
pub mod context;
pub mod error;
pub mod expr;
pub mod linsolve;
pub mod parse;
pub mod pluri;
pub mod problem;
pub mod reduction;
pub mod report;
pub mod symmetry;

pub use calculus::{
    divergence, euler_operator, prolong_apply, restricted_delta_u, restricted_delta_u_k,
    restricted_delta_u_km, total_derivative, total_derivative_multi, EvolutionaryField,
};
pub use context::{Context, JetVar, MultiIndex};
pub use error::{Error, Result};
pub use expr::{normalize, Atom, Expr, ExprTree, Monomial, OrderProfile};
pub use parse::{parse_expr, parse_expr_with_defs};
pub use pluri::{
    classify_el_system, multi_time_el, ClosureReport, ElClassification, ElEquation,
    ElEquationKind, ElEquationStatus, LagrangianForm, MultiTimeElSystem,
};
pub use reduction::{ConfluenceReport, EquationSystem, Rule};
pub use symmetry::{
    check_variational_symmetry, conservation_law, find_divergence_witnesses,
    is_total_divergence, SymmetryCertificate, WitnessAnsatz,
};
