//! A thread calculus with cyclic interleaving, thread-service composition,
//! restriction and molecular dynamics.
//!
//! Terms are built with [`Term`] or read with [`parse_term`], rewritten to
//! basic terms by [`Engine`], compared at finite depth through the
//! projective model in [`projective`], and produced from programs by
//! [`pgldf::extract`].

pub mod basic;
pub mod engine;
pub mod env;
pub mod error;
pub mod md;
pub mod names;
pub mod parse;
pub mod pgldf;
pub mod projective;
pub mod run;
pub mod service;
pub mod spec;
pub mod term;

pub use basic::{basic_eq, Basic};
pub use engine::{normalize, proj_normalize, Config, Engine, Head, Mode, Normal, RewriteTrace};
pub use env::{env_reply, Environment};
pub use error::{EngineError, EnvError, Error, ParseError, SpecError};
pub use md::{md_apply, state_iso, MdState};
pub use names::{guarded_in, guarded_term, Fresh};
pub use parse::{parse_action, parse_method, parse_term};
pub use pgldf::{Instruction, Program};
pub use projective::{Dyadic, ProjSeq, Refutation};
pub use run::{Outcome, RunConfig, RunResult};
pub use service::{Registry, Reply, Service, ServiceHandle};
pub use term::{Action, Focus, MdMethod, Method, ServiceRef, Spot, Term, Var};
