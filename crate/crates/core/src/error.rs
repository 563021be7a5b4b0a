use thiserror::Error;

use crate::term::{Focus, Spot, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SyntaxError at line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("RestrictionStuck: no spot for restriction of {spot} on focus {focus} is undefined in the service")]
    RestrictionStuck { focus: Focus, spot: Spot },
    #[error("ServiceUnresolvable: no service named '{0}'")]
    ServiceUnresolvable(String),
    #[error("FuelExhausted: rewrite budget of {0} steps used up")]
    FuelExhausted(u64),
    #[error("DepthExceeded: normal form deeper than {0}; the term may denote an infinite thread")]
    DepthExceeded(usize),
    #[error("OpenTerm: free recursion variable {0}")]
    OpenTerm(Var),
    #[error("SideConditionViolated: spot {0} is free in the continuation of a fork")]
    SideConditionViolated(Spot),
    #[error("NotStabilized: no stabilization within {0} iterations")]
    NotStabilized(u32),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),
    #[error("InvalidSpec: cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("ScriptExhausted: no scripted reply left for {0}")]
    ScriptExhausted(String),
    #[error("ScriptMismatch: expected {expected}, got {got}")]
    ScriptMismatch { expected: String, got: String },
    #[error("TableMiss: no reply for {0}")]
    TableMiss(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}
