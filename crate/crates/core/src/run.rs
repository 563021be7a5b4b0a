//! Small-step execution of a thread vector against one molecular dynamics
//! service, with all other actions answered by an environment.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::engine::{Config, Engine, Head};
use crate::env::{env_reply, Environment};
use crate::error::Error;
use crate::md::{md_apply, MdState};
use crate::names::{free_spots_all, subst_spot};
use crate::pgldf::{extract, Program};
use crate::service::{Registry, Reply};
use crate::term::{md_focus, Action, Spot, Term};

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Number of atoms available; `None` for unlimited.
    pub capacity: Option<u32>,
    pub max_steps: u64,
    pub engine: Config,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { capacity: None, max_steps: 10_000, engine: Config::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub step: u64,
    /// Thread that performed the step; forked threads are numbered in order of creation.
    pub thread: usize,
    pub action: String,
    pub reply: Reply,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.step, self.action, self.reply)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Terminated,
    Deadlocked,
    StepBudget,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Terminated => "terminated",
            Outcome::Deadlocked => "deadlocked",
            Outcome::StepBudget => "step budget exhausted",
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub trace: Vec<TraceEntry>,
    pub state: MdState,
    pub outcome: Outcome,
}

/// Runs the thread extracted from `p`.
pub fn run(p: &Program, env: Environment, cfg: &RunConfig) -> Result<RunResult, Error> {
    run_term(&extract(p), env, cfg)
}

/// Runs a closed term; a top-level `csi[...]` supplies the initial thread vector.
pub fn run_term(t: &Term, mut env: Environment, cfg: &RunConfig) -> Result<RunResult, Error> {
    let mut engine = Engine::new(Registry::new(), cfg.engine.clone());
    let initial = match t {
        Term::Csi(ts) => ts.clone(),
        other => vec![other.clone()],
    };
    let mut threads: Vec<(usize, Term)> = initial.into_iter().enumerate().collect();
    let mut next_id = threads.len();
    let mut state = MdState::empty(cfg.capacity);
    let mut trace = Vec::new();
    let mut dead = false;
    let md = md_focus();

    loop {
        if threads.is_empty() {
            let outcome = if dead { Outcome::Deadlocked } else { Outcome::Terminated };
            return Ok(RunResult { trace, state, outcome });
        }
        if trace.len() as u64 >= cfg.max_steps {
            return Ok(RunResult { trace, state, outcome: Outcome::StepBudget });
        }
        let (id, head) = threads.remove(0);
        let h = engine.first_level_normalize(&head)?;
        let step = trace.len() as u64 + 1;
        let (x, f, m, y) = match h {
            Head::Stop => continue,
            Head::Dead => {
                dead = true;
                continue;
            }
            Head::Tau(x) => {
                trace.push(TraceEntry { step, thread: id, action: "tau".into(), reply: Reply::T });
                threads.push((id, (*x).clone()));
                continue;
            }
            Head::Fork(x, z, _) => {
                trace.push(TraceEntry { step, thread: id, action: format!("nt(thread {next_id})"), reply: Reply::T });
                threads.push((next_id, (*z).clone()));
                next_id += 1;
                threads.push((id, (*x).clone()));
                continue;
            }
            Head::Pcc(x, f, m, y) => (x, f, m, y),
            Head::Restricted(f, spots, x, m, y) => {
                let mut avoid: BTreeSet<Spot> = free_spots_all(&threads.iter().map(|(_, t)| t.clone()).collect::<Vec<_>>(), &f);
                if let MdState::Live(l) = &state {
                    avoid.extend(l.sigma.keys().cloned());
                }
                let (mut x, mut m, mut y) = ((*x).clone(), m, (*y).clone());
                for s in &spots {
                    let mut forbidden = avoid.clone();
                    forbidden.extend(crate::names::free_spots(&x, &f));
                    forbidden.extend(crate::names::free_spots(&y, &f));
                    forbidden.extend(m.names());
                    forbidden.extend(spots.iter().cloned());
                    let s2 = engine.fresh().spot_avoiding(&forbidden);
                    x = subst_spot(&x, &f, s, &s2, engine.fresh());
                    y = subst_spot(&y, &f, s, &s2, engine.fresh());
                    m = m.rename(s, &s2);
                    avoid.insert(s2);
                }
                (Arc::new(x), f, m, Arc::new(y))
            }
        };
        let action = Action::Call(f.clone(), m.clone());
        let reply = if f == md {
            let (next, r) = md_apply(&state, &m);
            state = next;
            r
        } else {
            let (r, next) = env_reply(&env, &action)?;
            env = next;
            r
        };
        trace.push(TraceEntry { step, thread: id, action: action.to_string(), reply });
        match reply {
            Reply::T => threads.push((id, (*x).clone())),
            Reply::F => threads.push((id, (*y).clone())),
            Reply::Refused => return Ok(RunResult { trace, state, outcome: Outcome::Deadlocked }),
        }
    }
}
