//! Services as reply functions, and a registry of named services.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::EngineError;
use crate::md::MdService;
use crate::spec::TableSpec;
use crate::term::Method;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Reply {
    T,
    F,
    Refused,
}

impl fmt::Display for Reply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reply::T => "T",
            Reply::F => "F",
            Reply::Refused => "Refused",
        })
    }
}

/// The behaviour behind a service handle.
pub trait Service: Send + Sync + fmt::Debug {
    /// Reply to `m` as the next method processed.
    fn query(&self, m: &Method) -> Reply;
    /// The service after processing `m`.
    fn derive(&self, m: &Method) -> Arc<dyn Service>;
    /// Canonical description of the current state, when one exists.
    fn state_key(&self) -> Option<String> {
        None
    }
    /// Short name used when printing terms.
    fn label(&self) -> String;
    /// Number of spots currently defined, for services that have spots.
    fn defined_spots(&self) -> Option<usize> {
        None
    }
}

/// A service that refuses everything once it has refused once.
#[derive(Clone)]
pub struct ServiceHandle {
    inner: Option<Arc<dyn Service>>,
}

impl ServiceHandle {
    pub fn new(service: impl Service + 'static) -> Self {
        ServiceHandle { inner: Some(Arc::new(service)) }
    }

    pub fn from_arc(service: Arc<dyn Service>) -> Self {
        ServiceHandle { inner: Some(service) }
    }

    pub fn poisoned() -> Self {
        ServiceHandle { inner: None }
    }

    pub fn is_poisoned(&self) -> bool {
        self.inner.is_none()
    }

    pub fn query(&self, m: &Method) -> Reply {
        match &self.inner {
            Some(s) => s.query(m),
            None => Reply::Refused,
        }
    }

    pub fn derive(&self, m: &Method) -> ServiceHandle {
        match &self.inner {
            Some(s) if s.query(m) != Reply::Refused => ServiceHandle { inner: Some(s.derive(m)) },
            _ => ServiceHandle::poisoned(),
        }
    }

    pub fn state_key(&self) -> Option<String> {
        match &self.inner {
            Some(s) => s.state_key().map(|k| format!("{}:{k}", s.label())),
            None => Some("refused".to_string()),
        }
    }

    pub fn label(&self) -> String {
        match &self.inner {
            Some(s) => s.label(),
            None => "refused".to_string(),
        }
    }

    pub fn defined_spots(&self) -> Option<usize> {
        self.inner.as_ref().and_then(|s| s.defined_spots())
    }
}

impl PartialEq for ServiceHandle {
    fn eq(&self, other: &Self) -> bool {
        match (&self.inner, &other.inner) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                Arc::ptr_eq(a, b) || matches!((self.state_key(), other.state_key()), (Some(x), Some(y)) if x == y)
            }
            _ => false,
        }
    }
}

impl Eq for ServiceHandle {}

impl fmt::Debug for ServiceHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.state_key() {
            Some(k) => write!(f, "Service({k})"),
            None => write!(f, "Service({})", self.label()),
        }
    }
}

/// Result of exploring the derived services of a handle.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Regularity {
    Regular(usize),
    BoundExceeded,
}

/// Breadth-first closure of `derive` over `alphabet`, up to `bound` states.
/// States are identified by `state_key`; services without keys count as
/// distinct each time they are reached.
pub fn regular_check(h: &ServiceHandle, alphabet: &[Method], bound: usize) -> Regularity {
    let mut seen: Vec<String> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let key = |h: &ServiceHandle, n: usize| h.state_key().unwrap_or_else(|| format!("#{n}"));
    seen.push(key(h, 0));
    queue.push_back(h.clone());
    while let Some(cur) = queue.pop_front() {
        for m in alphabet {
            let next = cur.derive(m);
            let k = key(&next, seen.len());
            if !seen.contains(&k) {
                if seen.len() == bound {
                    return Regularity::BoundExceeded;
                }
                seen.push(k);
                queue.push_back(next);
            }
        }
    }
    Regularity::Regular(seen.len())
}

/// Named services for `use(p, f, NAME)`. Built in: `md`, `md(k)`,
/// `md(unlimited)` and `spec:<file>`.
#[derive(Clone, Default)]
pub struct Registry {
    named: BTreeMap<String, ServiceHandle>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, h: ServiceHandle) {
        self.named.insert(name.to_string(), h);
    }

    pub fn with(mut self, name: &str, h: ServiceHandle) -> Self {
        self.register(name, h);
        self
    }

    pub fn resolve(&self, name: &str) -> Result<ServiceHandle, EngineError> {
        if let Some(h) = self.named.get(name) {
            return Ok(h.clone());
        }
        if name == "md" || name == "md(unlimited)" {
            return Ok(ServiceHandle::new(MdService::empty(None)));
        }
        if let Some(k) = name.strip_prefix("md(").and_then(|r| r.strip_suffix(')')) {
            if let Ok(k) = k.parse::<u32>() {
                return Ok(ServiceHandle::new(MdService::empty(Some(k))));
            }
        }
        if let Some(path) = name.strip_prefix("spec:") {
            let spec = TableSpec::load(path)?;
            return Ok(spec.into_handle()?);
        }
        Err(EngineError::ServiceUnresolvable(name.to_string()))
    }
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.named.keys()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::md::MdService;
    use crate::term::MdMethod;

    #[test]
    fn refusal_is_absorbing() {
        let h = ServiceHandle::new(MdService::empty(None));
        let ping = Method::opaque("ping");
        assert_eq!(h.query(&ping), Reply::Refused);
        let after = h.derive(&ping);
        assert!(after.is_poisoned());
        assert_eq!(after.query(&Method::Md(MdMethod::Undeftst("s".into()))), Reply::Refused);
        assert!(after.derive(&Method::opaque("x")).is_poisoned());
    }

    #[test]
    fn registry_builtins() {
        let r = Registry::new();
        assert!(r.resolve("md").is_ok());
        assert!(r.resolve("md(2)").is_ok());
        assert!(matches!(r.resolve("nope"), Err(EngineError::ServiceUnresolvable(_))));
    }
}
