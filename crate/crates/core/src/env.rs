//! Execution environments answering actions no service absorbs.

use std::collections::{BTreeMap, VecDeque};

use crate::error::EnvError;
use crate::service::Reply;
use crate::term::Action;

#[derive(Clone, Debug, PartialEq)]
pub enum Environment {
    AllTrue,
    /// Replies in order; a `None` pattern matches any action.
    Scripted(VecDeque<(Option<Action>, Reply)>),
    TableDriven(BTreeMap<Action, Reply>),
}

/// Reply to an opaque action together with the successor environment.
pub fn env_reply(env: &Environment, a: &Action) -> Result<(Reply, Environment), EnvError> {
    match env {
        Environment::AllTrue => Ok((Reply::T, Environment::AllTrue)),
        Environment::Scripted(script) => {
            let mut rest = script.clone();
            match rest.pop_front() {
                None => Err(EnvError::ScriptExhausted(a.to_string())),
                Some((Some(p), _)) if p != *a => {
                    Err(EnvError::ScriptMismatch { expected: p.to_string(), got: a.to_string() })
                }
                Some((_, r)) => Ok((r, Environment::Scripted(rest))),
            }
        }
        Environment::TableDriven(t) => match t.get(a) {
            Some(r) => Ok((*r, env.clone())),
            None => Err(EnvError::TableMiss(a.to_string())),
        },
    }
}

fn parse_reply(s: &str) -> Option<Reply> {
    match s {
        "T" => Some(Reply::T),
        "F" => Some(Reply::F),
        "Refused" => Some(Reply::Refused),
        _ => None,
    }
}

fn entries(text: &str) -> Result<Vec<(Option<Action>, Reply)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (act, reply) = line.rsplit_once(char::is_whitespace).ok_or(format!("line {}: expected '<action> <reply>'", i + 1))?;
        let reply = parse_reply(reply).ok_or(format!("line {}: reply must be T, F or Refused", i + 1))?;
        let act = act.trim();
        let act = if act == "*" {
            None
        } else {
            Some(crate::parse::parse_action(act).map_err(|e| format!("line {}: {}", i + 1, e.message))?)
        };
        out.push((act, reply));
    }
    Ok(out)
}

impl Environment {
    /// Lines `<action> <reply>`; `*` matches any action.
    pub fn parse_script(text: &str) -> Result<Environment, String> {
        Ok(Environment::Scripted(entries(text)?.into_iter().collect()))
    }

    /// Lines `<action> <reply>`.
    pub fn parse_table(text: &str) -> Result<Environment, String> {
        let mut t = BTreeMap::new();
        for (a, r) in entries(text)? {
            t.insert(a.ok_or("wildcards are not allowed in tables")?, r);
        }
        Ok(Environment::TableDriven(t))
    }
}
