//! Abstract syntax of threads: constants, postconditional composition,
//! cyclic interleaving, deadlock at termination, thread-service
//! composition, restriction, recursion, projection and forking.

use std::fmt;
use std::sync::Arc;

use crate::service::ServiceHandle;

macro_rules! ident {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(text: &str) -> Self {
                $name(Arc::from(text))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<&str> for $name {
            fn from(text: &str) -> Self {
                $name::new(text)
            }
        }
    };
}

ident!(
    /// A spot: a named handle on at most one atom.
    Spot
);
ident!(
    /// A focus: the name under which a service is addressed.
    Focus
);
ident!(
    /// A field name of an atom.
    Field
);
ident!(
    /// A recursion variable.
    Var
);

/// Prefix reserved for generated spots.
pub const SPOT_PREFIX: &str = "s$";
/// Prefix reserved for generated recursion variables.
pub const VAR_PREFIX: &str = "x$";

/// The focus of the molecular dynamics service.
pub fn md_focus() -> Focus {
    Focus::new("md")
}

/// One of the ten molecular dynamics methods.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum MdMethod {
    Creatom(Spot),
    Setspot(Spot, Spot),
    Clrspot(Spot),
    Equaltst(Spot, Spot),
    Undeftst(Spot),
    Addfield(Spot, Field),
    Rmvfield(Spot, Field),
    Hasfield(Spot, Field),
    Setfield(Spot, Field, Spot),
    Getfield(Spot, Spot, Field),
}

impl MdMethod {
    pub fn name(&self) -> &'static str {
        match self {
            MdMethod::Creatom(..) => "creatom",
            MdMethod::Setspot(..) => "setspot",
            MdMethod::Clrspot(..) => "clrspot",
            MdMethod::Equaltst(..) => "equaltst",
            MdMethod::Undeftst(..) => "undeftst",
            MdMethod::Addfield(..) => "addfield",
            MdMethod::Rmvfield(..) => "rmvfield",
            MdMethod::Hasfield(..) => "hasfield",
            MdMethod::Setfield(..) => "setfield",
            MdMethod::Getfield(..) => "getfield",
        }
    }

    /// Spots in left-to-right argument order, with repetitions.
    pub fn spots(&self) -> Vec<&Spot> {
        match self {
            MdMethod::Creatom(s) | MdMethod::Clrspot(s) | MdMethod::Undeftst(s) => vec![s],
            MdMethod::Setspot(s, t) | MdMethod::Equaltst(s, t) => vec![s, t],
            MdMethod::Addfield(s, _) | MdMethod::Rmvfield(s, _) | MdMethod::Hasfield(s, _) => {
                vec![s]
            }
            MdMethod::Setfield(s, _, t) => vec![s, t],
            MdMethod::Getfield(s, t, _) => vec![s, t],
        }
    }

    pub fn map_spots(&self, mut g: impl FnMut(&Spot) -> Spot) -> MdMethod {
        match self {
            MdMethod::Creatom(s) => MdMethod::Creatom(g(s)),
            MdMethod::Setspot(s, t) => MdMethod::Setspot(g(s), g(t)),
            MdMethod::Clrspot(s) => MdMethod::Clrspot(g(s)),
            MdMethod::Equaltst(s, t) => MdMethod::Equaltst(g(s), g(t)),
            MdMethod::Undeftst(s) => MdMethod::Undeftst(g(s)),
            MdMethod::Addfield(s, v) => MdMethod::Addfield(g(s), v.clone()),
            MdMethod::Rmvfield(s, v) => MdMethod::Rmvfield(g(s), v.clone()),
            MdMethod::Hasfield(s, v) => MdMethod::Hasfield(g(s), v.clone()),
            MdMethod::Setfield(s, v, t) => {
                let s = g(s);
                MdMethod::Setfield(s, v.clone(), g(t))
            }
            MdMethod::Getfield(s, t, v) => {
                let s = g(s);
                MdMethod::Getfield(s, g(t), v.clone())
            }
        }
    }
}

impl fmt::Display for MdMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self {
            MdMethod::Creatom(s) | MdMethod::Clrspot(s) | MdMethod::Undeftst(s) => {
                write!(f, " {s}")
            }
            MdMethod::Setspot(s, t) | MdMethod::Equaltst(s, t) => write!(f, " {s} {t}"),
            MdMethod::Addfield(s, v) | MdMethod::Rmvfield(s, v) | MdMethod::Hasfield(s, v) => {
                write!(f, " {s} {v}")
            }
            MdMethod::Setfield(s, v, t) => write!(f, " {s} {v} {t}"),
            MdMethod::Getfield(s, t, v) => write!(f, " {s} {t} {v}"),
        }
    }
}

/// A method: molecular dynamics or opaque text without spots.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Method {
    Md(MdMethod),
    Opaque(Arc<str>),
}

impl Method {
    pub fn opaque(text: &str) -> Method {
        Method::Opaque(Arc::from(text))
    }

    /// N(m): spots occurring in the method, in order of first occurrence.
    pub fn names(&self) -> Vec<Spot> {
        let mut out: Vec<Spot> = Vec::new();
        if let Method::Md(m) = self {
            for s in m.spots() {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
        }
        out
    }

    pub fn mentions(&self, s: &Spot) -> bool {
        match self {
            Method::Md(m) => m.spots().into_iter().any(|t| t == s),
            Method::Opaque(_) => false,
        }
    }

    pub fn map_spots(&self, g: impl FnMut(&Spot) -> Spot) -> Method {
        match self {
            Method::Md(m) => Method::Md(m.map_spots(g)),
            Method::Opaque(_) => self.clone(),
        }
    }

    /// m[s'/s]
    pub fn rename(&self, from: &Spot, to: &Spot) -> Method {
        self.map_spots(|s| if s == from { to.clone() } else { s.clone() })
    }
}

/// A basic action: `tau` or a call `f.m`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Action {
    Tau,
    Call(Focus, Method),
}

impl Action {
    pub fn call(focus: &str, method: Method) -> Action {
        Action::Call(Focus::new(focus), method)
    }

    pub fn opaque(focus: &str, method: &str) -> Action {
        Action::Call(Focus::new(focus), Method::opaque(method))
    }

    pub fn md(method: MdMethod) -> Action {
        Action::Call(md_focus(), Method::Md(method))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Tau => f.write_str("tau"),
            Action::Call(g, Method::Opaque(m)) => write!(f, "{g}.{m}"),
            Action::Call(g, Method::Md(m)) => write!(f, "{g}({m})"),
        }
    }
}

/// Reference to a service inside `use(p, f, H)`.
#[derive(Clone, Debug)]
pub enum ServiceRef {
    /// Resolved through a registry when the term is rewritten.
    Named(Arc<str>),
    /// A concrete service, typically a derived one.
    Bound(ServiceHandle),
}

impl ServiceRef {
    pub fn named(name: &str) -> ServiceRef {
        ServiceRef::Named(Arc::from(name))
    }
}

impl PartialEq for ServiceRef {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ServiceRef::Named(a), ServiceRef::Named(b)) => a == b,
            (ServiceRef::Bound(a), ServiceRef::Bound(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for ServiceRef {}

impl fmt::Display for ServiceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceRef::Named(n) => f.write_str(n),
            ServiceRef::Bound(h) => write!(f, "{}", h.label()),
        }
    }
}

/// A thread term.
#[derive(Clone, Debug)]
pub enum Term {
    Stop,
    Dead,
    /// `left <a> right`
    Pcc(Arc<Term>, Action, Arc<Term>),
    /// `csi[t1, ..., tk]`
    Csi(Vec<Term>),
    /// `s2d(t)`
    S2d(Arc<Term>),
    /// `use(t, f, H)`
    Use(Arc<Term>, Focus, ServiceRef),
    /// `nu(f, s, t)`
    Nu(Focus, Spot, Arc<Term>),
    /// `fix x . t`
    Fix(Var, Arc<Term>),
    /// `pi(n, t)`
    Proj(u32, Arc<Term>),
    /// `left <nt(forked)> right`
    ForkPcc(Arc<Term>, Arc<Term>, Arc<Term>),
    Var(Var),
    /// `ntil(s, s', p) . q`: fork `p` sharing a new atom, handed over through `s'`.
    NtIl(Spot, Spot, Arc<Term>, Arc<Term>),
    /// `ntjava(s, p) . q`: fork `p`, gated until `q` adds field `acti` to `s`.
    NtJava(Spot, Arc<Term>, Arc<Term>),
}

/// Structural equality; a continuation shared by both branches on both
/// sides is compared once.
impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        fn pair(a: &Arc<Term>, b: &Arc<Term>, c: &Arc<Term>, d: &Arc<Term>) -> bool {
            a == c && ((Arc::ptr_eq(a, b) && Arc::ptr_eq(c, d)) || b == d)
        }
        use Term::*;
        match (self, other) {
            (Stop, Stop) | (Dead, Dead) => true,
            (Pcc(a, x, b), Pcc(c, y, d)) => x == y && pair(a, b, c, d),
            (ForkPcc(a, z, b), ForkPcc(c, w, d)) => z == w && pair(a, b, c, d),
            (Csi(xs), Csi(ys)) => xs == ys,
            (S2d(a), S2d(b)) => a == b,
            (Use(a, f, h), Use(b, g, k)) => f == g && h == k && a == b,
            (Nu(f, s, a), Nu(g, t, b)) => f == g && s == t && a == b,
            (Fix(x, a), Fix(y, b)) => x == y && a == b,
            (Proj(n, a), Proj(k, b)) => n == k && a == b,
            (Var(x), Var(y)) => x == y,
            (NtIl(s, s2, p, q), NtIl(t, t2, r, u)) => s == t && s2 == t2 && p == r && q == u,
            (NtJava(s, p, q), NtJava(t, r, u)) => s == t && p == r && q == u,
            _ => false,
        }
    }
}

impl Eq for Term {}

/// Spot bound by the Java-style fork expansion.
pub const THIS_SPOT: &str = "this";
/// Field whose presence starts a Java-style forked thread.
pub const ACTI_FIELD: &str = "acti";
/// Recursion variable of the Java-style start gate.
pub const GATE_VAR: &str = "x$gate";

impl Term {
    pub fn pcc(left: Term, a: Action, right: Term) -> Term {
        Term::Pcc(Arc::new(left), a, Arc::new(right))
    }

    /// `a . p`
    pub fn prefix(a: Action, p: Term) -> Term {
        let p = Arc::new(p);
        Term::Pcc(p.clone(), a, p)
    }

    pub fn tau(p: Term) -> Term {
        Term::prefix(Action::Tau, p)
    }

    pub fn csi(threads: Vec<Term>) -> Term {
        Term::Csi(threads)
    }

    pub fn s2d(p: Term) -> Term {
        Term::S2d(Arc::new(p))
    }

    pub fn use_named(p: Term, focus: &str, service: &str) -> Term {
        Term::Use(Arc::new(p), Focus::new(focus), ServiceRef::named(service))
    }

    pub fn use_with(p: Term, focus: Focus, service: ServiceHandle) -> Term {
        Term::Use(Arc::new(p), focus, ServiceRef::Bound(service))
    }

    pub fn nu(focus: &str, spot: &str, p: Term) -> Term {
        Term::Nu(Focus::new(focus), Spot::new(spot), Arc::new(p))
    }

    pub fn fix(x: &str, body: Term) -> Term {
        Term::Fix(Var::new(x), Arc::new(body))
    }

    pub fn var(x: &str) -> Term {
        Term::Var(Var::new(x))
    }

    pub fn proj(n: u32, p: Term) -> Term {
        Term::Proj(n, Arc::new(p))
    }

    pub fn fork(left: Term, forked: Term, right: Term) -> Term {
        Term::ForkPcc(Arc::new(left), Arc::new(forked), Arc::new(right))
    }

    /// `nt(r) . p`
    pub fn fork_prefix(forked: Term, p: Term) -> Term {
        let p = Arc::new(p);
        Term::ForkPcc(p.clone(), Arc::new(forked), p)
    }

    /// True for terms that carry no fork operator or fork sugar.
    pub fn is_fork_free(&self) -> bool {
        match self {
            Term::Stop | Term::Dead | Term::Var(_) => true,
            Term::Pcc(l, _, r) => l.is_fork_free() && (Arc::ptr_eq(l, r) || r.is_fork_free()),
            Term::Csi(ts) => ts.iter().all(Term::is_fork_free),
            Term::S2d(t) | Term::Use(t, _, _) | Term::Nu(_, _, t) | Term::Fix(_, t) => {
                t.is_fork_free()
            }
            Term::Proj(_, t) => t.is_fork_free(),
            Term::ForkPcc(..) | Term::NtIl(..) | Term::NtJava(..) => false,
        }
    }

    /// Number of constructor nodes, counting a shared continuation once.
    pub fn size(&self) -> usize {
        1 + match self {
            Term::Stop | Term::Dead | Term::Var(_) => 0,
            Term::Pcc(l, _, r) if Arc::ptr_eq(l, r) => l.size(),
            Term::Pcc(l, _, r) => l.size() + r.size(),
            Term::Csi(ts) => ts.iter().map(Term::size).sum(),
            Term::S2d(t) | Term::Use(t, _, _) | Term::Nu(_, _, t) | Term::Fix(_, t) => t.size(),
            Term::Proj(_, t) => t.size(),
            Term::ForkPcc(l, z, r) => l.size() + z.size() + r.size(),
            Term::NtIl(_, _, p, q) | Term::NtJava(_, p, q) => p.size() + q.size(),
        }
    }
}

/// `NT_il(s, s' | p) . q` spelled out with restriction and the fork operator.
pub fn expand_nt_il(s: &Spot, s2: &Spot, p: &Term, q: &Term) -> Term {
    let md = md_focus();
    let body = Term::prefix(
        Action::Call(md.clone(), Method::Md(MdMethod::Creatom(s.clone()))),
        Term::prefix(
            Action::Call(md.clone(), Method::Md(MdMethod::Setspot(s2.clone(), s.clone()))),
            Term::fork_prefix(p.clone(), q.clone()),
        ),
    );
    Term::Nu(md, s.clone(), Arc::new(body))
}

/// `NT_java(s | p) . q` spelled out through `NT_il`. With `poll_this`
/// the gate tests the private spot instead of `s`.
pub fn expand_nt_java(s: &Spot, p: &Term, q: &Term, poll_this: bool) -> Term {
    let this = Spot::new(THIS_SPOT);
    let polled = if poll_this { this.clone() } else { s.clone() };
    let gate = Term::fix(
        GATE_VAR,
        Term::pcc(
            p.clone(),
            Action::md(MdMethod::Hasfield(polled, Field::new(ACTI_FIELD))),
            Term::var(GATE_VAR),
        ),
    );
    expand_nt_il(&this, s, &gate, q)
}

fn same(a: &Arc<Term>, b: &Arc<Term>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl Term {
    fn is_infix(&self) -> bool {
        match self {
            Term::Pcc(l, _, r) | Term::ForkPcc(l, _, r) => !same(l, r),
            _ => false,
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infix() || matches!(self, Term::Fix(..)) {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Stop => f.write_str("S"),
            Term::Dead => f.write_str("D"),
            Term::Pcc(l, a, r) => {
                if same(l, r) {
                    write!(f, "{a} . ")?;
                    l.fmt_operand(f)
                } else {
                    l.fmt_operand(f)?;
                    write!(f, " <{a}> ")?;
                    r.fmt_operand(f)
                }
            }
            Term::ForkPcc(l, z, r) => {
                if same(l, r) {
                    write!(f, "nt({z}) . ")?;
                    l.fmt_operand(f)
                } else {
                    l.fmt_operand(f)?;
                    write!(f, " <nt({z})> ")?;
                    r.fmt_operand(f)
                }
            }
            Term::Csi(ts) => {
                f.write_str("csi[")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str("]")
            }
            Term::S2d(t) => write!(f, "s2d({t})"),
            Term::Use(t, g, h) => write!(f, "use({t}, {g}, {h})"),
            Term::Nu(g, s, t) => write!(f, "nu({g}, {s}, {t})"),
            Term::Fix(x, t) => write!(f, "fix {x} . {t}"),
            Term::Proj(n, t) => write!(f, "pi({n}, {t})"),
            Term::Var(x) => write!(f, "{x}"),
            Term::NtIl(s, s2, p, q) => {
                write!(f, "ntil({s}, {s2}, {p}) . ")?;
                q.fmt_operand(f)
            }
            Term::NtJava(s, p, q) => {
                write!(f, "ntjava({s}, {p}) . ")?;
                q.fmt_operand(f)
            }
        }
    }
}
