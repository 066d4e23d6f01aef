//! Closed-form trial wavefunctions for 1-D time-independent Schrödinger
//! problems, evolved with grammatical evolution over a BNF grammar.
//!
//! The pipeline, bottom to top:
//!
//! - [`grammar`] — BNF grammars with indexed production rules, including
//!   the built-in expression grammar.
//! - [`mapper`] — integer chromosomes decoded into expression strings via
//!   the `codon mod R` rule, with wrapping and rejection.
//! - [`expr`] — the expression AST: evaluation with domain-error
//!   detection, exact symbolic differentiation (including the radial basis
//!   terminals), simplification, parsing, and printing.
//! - [`quantum`] — problem definitions (domain, potential, energy), the
//!   Hamiltonian residual fitness with normalization and boundary
//!   penalties, Simpson quadrature, the Rayleigh-quotient energy estimate,
//!   and an independent finite-difference eigensolver for validation.
//! - [`evolution`] — the genetic engine: tournament selection with
//!   elitism, homologous crossover aligned on mapping traces, inversion
//!   mutation, and an adaptive crossover probability.
//! - [`cli`] — the `gewave` command-line front end
//!   (`solve | map | eval | oracle | grammar-check`).
//!
//! Start with the `examples/` directory: each example is a small runnable
//! program exercising one capability.
//!
//! ```
//! use gewave::grammar::{BuiltinVariant, Grammar};
//! use gewave::mapper::{map_genotype, Chromosome, MappingOutcome};
//!
//! let grammar = Grammar::builtin(BuiltinVariant::Paper);
//! let chromosome = Chromosome::new(vec![10, 4, 8, 15, 3, 7, 19, 21, 9]);
//! let outcome = map_genotype(&grammar, &chromosome, 2);
//! match outcome {
//!     MappingOutcome::Mapped { text, .. } => assert_eq!(text, "sqrt(3/x)"),
//!     MappingOutcome::Rejected { .. } => unreachable!(),
//! }
//! ```

pub mod cli;
pub mod evolution;
pub mod expr;
pub mod grammar;
pub mod mapper;
pub mod quantum;
