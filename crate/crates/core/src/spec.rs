//! Services described by states, an effect function and a yield function.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use crate::error::SpecError;
use crate::parse::parse_method;
use crate::service::{Reply, Service, ServiceHandle};
use crate::term::Method;

type Eff<S> = Arc<dyn Fn(&Method, &S) -> S + Send + Sync>;
type Yld<S> = Arc<dyn Fn(&Method, &S) -> Reply + Send + Sync>;

/// A state-based service description. Every refusing transition must
/// lead to `sink`, where every method is refused.
pub struct StateServiceSpec<S> {
    pub label: String,
    pub initial: S,
    pub sink: S,
    pub eff: Eff<S>,
    pub yld: Yld<S>,
    /// Methods used to explore the reachable states during validation.
    pub alphabet: Vec<Method>,
}

impl<S: Clone> Clone for StateServiceSpec<S> {
    fn clone(&self) -> Self {
        StateServiceSpec {
            label: self.label.clone(),
            initial: self.initial.clone(),
            sink: self.sink.clone(),
            eff: self.eff.clone(),
            yld: self.yld.clone(),
            alphabet: self.alphabet.clone(),
        }
    }
}

/// Default number of reachable states inspected by validation.
pub const SPEC_CHECK_BOUND: usize = 4096;

impl<S> StateServiceSpec<S>
where
    S: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static,
{
    /// Checks the sink condition on the reachable fragment.
    pub fn validate(&self, bound: usize) -> Result<(), SpecError> {
        for m in &self.alphabet {
            if (self.yld)(m, &self.sink) != Reply::Refused || (self.eff)(m, &self.sink) != self.sink {
                return Err(SpecError::InvalidSpec(format!(
                    "sink {:?} does not refuse {m:?} absorbingly",
                    self.sink
                )));
            }
        }
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(self.initial.clone());
        queue.push_back(self.initial.clone());
        while let Some(s) = queue.pop_front() {
            for m in &self.alphabet {
                let next = (self.eff)(m, &s);
                if (self.yld)(m, &s) == Reply::Refused && next != self.sink {
                    return Err(SpecError::InvalidSpec(format!(
                        "refusal of {m:?} in {s:?} does not lead to the sink"
                    )));
                }
                if seen.len() < bound && seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        Ok(())
    }
}

/// H_s for the initial state of a validated spec.
pub fn service_of_spec<S>(spec: StateServiceSpec<S>) -> Result<ServiceHandle, SpecError>
where
    S: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static,
{
    spec.validate(SPEC_CHECK_BOUND)?;
    let state = spec.initial.clone();
    Ok(ServiceHandle::new(SpecService { spec: Arc::new(spec), state }))
}

struct SpecService<S> {
    spec: Arc<StateServiceSpec<S>>,
    state: S,
}

impl<S: fmt::Debug> fmt::Debug for SpecService<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{:?}", self.spec.label, self.state)
    }
}

impl<S> Service for SpecService<S>
where
    S: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static,
{
    fn query(&self, m: &Method) -> Reply {
        (self.spec.yld)(m, &self.state)
    }

    fn derive(&self, m: &Method) -> Arc<dyn Service> {
        Arc::new(SpecService { spec: self.spec.clone(), state: (self.spec.eff)(m, &self.state) })
    }

    fn state_key(&self) -> Option<String> {
        Some(format!("{:?}", self.state))
    }

    fn label(&self) -> String {
        format!("{}@{:?}", self.spec.label, self.state)
    }
}

/// Replies T to `m` once `trigger` has been processed, F before;
/// `trigger` is always answered T and anything else is refused.
pub fn seen_before_service(m: Method, trigger: Method, label: &str) -> ServiceHandle {
    #[derive(Clone, PartialEq, Eq, Hash, Debug)]
    enum St {
        Waiting,
        Seen,
        Sink,
    }
    let (m1, t1) = (m.clone(), trigger.clone());
    let (m2, t2) = (m.clone(), trigger.clone());
    service_of_spec(StateServiceSpec {
        label: label.to_string(),
        initial: St::Waiting,
        sink: St::Sink,
        eff: Arc::new(move |x, s| match s {
            St::Sink => St::Sink,
            _ if *x == t1 => St::Seen,
            _ if *x == m1 => s.clone(),
            _ => St::Sink,
        }),
        yld: Arc::new(move |x, s| match s {
            St::Sink => Reply::Refused,
            _ if *x == t2 => Reply::T,
            St::Seen if *x == m2 => Reply::T,
            St::Waiting if *x == m2 => Reply::F,
            _ => Reply::Refused,
        }),
        alphabet: vec![m, trigger],
    })
    .expect("well-formed spec")
}

/// Replies T to `m` once more than `threshold` earlier `m`s were processed,
/// F before; anything else is refused.
pub fn threshold_service(m: Method, threshold: u32, label: &str) -> ServiceHandle {
    let (m1, m2) = (m.clone(), m.clone());
    let cap = threshold + 1;
    service_of_spec(StateServiceSpec {
        label: label.to_string(),
        initial: Some(0u32),
        sink: None,
        eff: Arc::new(move |x, s| match s {
            Some(n) if *x == m1 => Some((*n + 1).min(cap)),
            _ => None,
        }),
        yld: Arc::new(move |x, s| match s {
            Some(n) if *x == m2 => {
                if *n > threshold {
                    Reply::T
                } else {
                    Reply::F
                }
            }
            _ => Reply::Refused,
        }),
        alphabet: vec![m],
    })
    .expect("well-formed spec")
}

/// A finite transition table read from text:
///
/// ```text
/// initial q0
/// q0 m -> F q0
/// q0 m' -> T q1
/// q1 m -> T q1
/// ```
///
/// Missing entries refuse and move to an implicit sink.
#[derive(Clone, Debug)]
pub struct TableSpec {
    pub label: String,
    pub initial: String,
    pub table: BTreeMap<(String, Method), (Reply, Option<String>)>,
}

impl TableSpec {
    pub fn parse(text: &str, label: &str) -> Result<TableSpec, SpecError> {
        let mut initial = None;
        let mut table = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |why: &str| SpecError::InvalidSpec(format!("line {}: {why}", i + 1));
            if let Some(rest) = line.strip_prefix("initial") {
                initial = Some(rest.trim().to_string());
                continue;
            }
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| bad("expected '->'"))?;
            let lhs = lhs.trim();
            let (state, method) = lhs.split_once(char::is_whitespace).ok_or_else(|| bad("expected state and method"))?;
            let method = parse_method(method.trim()).map_err(|e| bad(&e.message))?;
            let mut rhs = rhs.split_whitespace();
            let reply = match rhs.next() {
                Some("T") => Reply::T,
                Some("F") => Reply::F,
                Some("Refused") => Reply::Refused,
                _ => return Err(bad("expected T, F or Refused")),
            };
            let next = rhs.next().map(str::to_string);
            if reply != Reply::Refused && next.is_none() {
                return Err(bad("missing successor state"));
            }
            if reply == Reply::Refused && next.is_some() {
                return Err(bad("a refusal leads to the sink and takes no successor"));
            }
            table.insert((state.to_string(), method), (reply, next));
        }
        let initial = initial.ok_or_else(|| SpecError::InvalidSpec("missing 'initial' line".into()))?;
        Ok(TableSpec { label: label.to_string(), initial, table })
    }

    pub fn load(path: &str) -> Result<TableSpec, SpecError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpecError::Io { path: path.to_string(), reason: e.to_string() })?;
        TableSpec::parse(&text, path)
    }

    pub fn into_handle(self) -> Result<ServiceHandle, SpecError> {
        let alphabet: Vec<Method> = {
            let mut ms: Vec<Method> = self.table.keys().map(|(_, m)| m.clone()).collect();
            ms.sort();
            ms.dedup();
            ms
        };
        let table = Arc::new(self.table);
        let (t1, t2) = (table.clone(), table);
        service_of_spec(StateServiceSpec {
            label: format!("spec:{}", self.label),
            initial: Some(self.initial),
            sink: None,
            eff: Arc::new(move |m, s: &Option<String>| {
                s.as_ref()
                    .and_then(|s| t1.get(&(s.clone(), m.clone())))
                    .and_then(|(_, next)| next.clone())
            }),
            yld: Arc::new(move |m, s: &Option<String>| {
                s.as_ref()
                    .and_then(|s| t2.get(&(s.clone(), m.clone())))
                    .map_or(Reply::Refused, |(r, _)| *r)
            }),
            alphabet,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::service::{regular_check, Regularity};
    use crate::term::MdMethod;

    fn m(s: &str) -> Method {
        Method::opaque(s)
    }

    #[test]
    fn seen_before_replies() {
        let h = seen_before_service(m("m"), m("m'"), "H");
        assert_eq!(h.query(&m("m")), Reply::F);
        assert_eq!(h.query(&m("m'")), Reply::T);
        let h2 = h.derive(&m("m'"));
        assert_eq!(h2.query(&m("m")), Reply::T);
        assert_eq!(h.query(&m("m''")), Reply::Refused);
        assert_eq!(regular_check(&h, &[m("m"), m("m'"), m("m''")], 16), Regularity::Regular(3));
    }

    #[test]
    fn threshold_counts() {
        let h = threshold_service(m("m"), 3, "H");
        let mut cur = h.clone();
        let mut replies = Vec::new();
        for _ in 0..6 {
            replies.push(cur.query(&m("m")));
            cur = cur.derive(&m("m"));
        }
        use Reply::*;
        assert_eq!(replies, vec![F, F, F, F, T, T]);
        assert_eq!(regular_check(&h, &[m("m"), m("m'")], 16), Regularity::Regular(6));
        assert_eq!(regular_check(&h, &[m("m"), m("m'")], 3), Regularity::BoundExceeded);
    }

    #[test]
    fn invalid_sink_is_rejected() {
        let spec = StateServiceSpec {
            label: "bad".into(),
            initial: 0u8,
            sink: 1u8,
            eff: Arc::new(|_, s| *s),
            yld: Arc::new(|_, s| if *s == 0 { Reply::Refused } else { Reply::T }),
            alphabet: vec![m("a")],
        };
        assert!(matches!(service_of_spec(spec), Err(SpecError::InvalidSpec(_))));
    }

    #[test]
    fn table_format() {
        let text = "initial q0\nq0 m -> F q0\nq0 m' -> T q1\nq1 m -> T q1\nq1 undeftst s -> T q1\n";
        let h = TableSpec::parse(text, "t").unwrap().into_handle().unwrap();
        assert_eq!(h.query(&m("m")), Reply::F);
        assert_eq!(h.derive(&m("m'")).query(&m("m")), Reply::T);
        assert_eq!(h.query(&m("zzz")), Reply::Refused);
        let u = Method::Md(MdMethod::Undeftst("s".into()));
        assert_eq!(h.derive(&m("m'")).query(&u), Reply::T);
        assert!(TableSpec::parse("q0 m -> T", "t").is_err());
    }

    #[test]
    fn md_service_through_spec_framework() {
        use crate::md::{md_apply, MdState};
        let alphabet = vec![
            Method::Md(MdMethod::Creatom("s".into())),
            Method::Md(MdMethod::Addfield("s".into(), "v".into())),
            Method::Md(MdMethod::Setfield("s".into(), "v".into(), "s".into())),
            Method::Md(MdMethod::Clrspot("s".into())),
            Method::Md(MdMethod::Undeftst("s".into())),
        ];
        let spec = StateServiceSpec {
            label: "md".into(),
            initial: MdStateKey(MdState::empty(Some(1))),
            sink: MdStateKey(MdState::Undef),
            eff: Arc::new(|m, s: &MdStateKey| MdStateKey(md_apply(&s.0, m).0)),
            yld: Arc::new(|m, s: &MdStateKey| md_apply(&s.0, m).1),
            alphabet: alphabet.clone(),
        };
        let h = service_of_spec(spec).unwrap();
        assert_eq!(h.query(&alphabet[4]), Reply::T);
        assert!(matches!(regular_check(&h, &alphabet, 64), Regularity::Regular(_)));
    }

    #[derive(Clone, PartialEq, Eq, Debug)]
    struct MdStateKey(crate::md::MdState);

    impl Hash for MdStateKey {
        fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
            self.0.to_json().to_string().hash(h)
        }
    }
}
