//! Directed rewriting by the axioms: first-level exposure, full
//! normalization to basic terms, and projection.
//!
//! Operands are brought into head form before the operator on top of
//! them is eliminated, following the structure of the elimination proofs.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::basic::Basic;
use crate::error::EngineError;
use crate::names::{expose_guard, free_spots, free_spots_all, subst_spot, subst_var, Fresh};
use crate::service::{Registry, Reply, ServiceHandle};
use crate::term::{Action, Focus, MdMethod, Method, ServiceRef, Spot, Term};

pub const DEFAULT_FUEL: u64 = 1_000_000;
pub const DEFAULT_UNFOLD_BOUND: usize = 8;
pub const DEFAULT_RESTRICTION_BOUND: usize = 64;
pub const DEFAULT_MAX_DEPTH: usize = 10_000;

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_GROWTH: usize = 4 * 1024 * 1024;

#[derive(Clone, Debug)]
pub struct Config {
    /// Maximum number of rewrite steps per call.
    pub fuel: u64,
    /// Unfoldings of inner recursion tried before a recursion is deemed unguarded.
    pub unfold_bound: usize,
    /// Renaming attempts for raising a restriction out of a service
    /// whose number of defined spots is unknown.
    pub restriction_bound: usize,
    /// Nesting limit for normal forms; infinite threads hit it.
    pub max_depth: usize,
    /// Record a rewrite trace.
    pub trace: bool,
    /// Java-style fork gates test the private spot rather than the handed-over one.
    pub poll_via_this: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            fuel: DEFAULT_FUEL,
            unfold_bound: DEFAULT_UNFOLD_BOUND,
            restriction_bound: DEFAULT_RESTRICTION_BOUND,
            max_depth: DEFAULT_MAX_DEPTH,
            trace: false,
            poll_via_this: false,
        }
    }
}

/// One rewrite step on the whole term.
#[derive(Clone, Debug)]
pub struct Step {
    pub label: &'static str,
    pub before: Term,
    pub after: Term,
}

#[derive(Clone, Debug, Default)]
pub struct RewriteTrace {
    pub steps: Vec<Step>,
}

impl RewriteTrace {
    pub fn labels(&self) -> Vec<&'static str> {
        self.steps.iter().map(|s| s.label).collect()
    }

    /// Consecutive steps connect.
    pub fn chains(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].after == w[1].before)
    }
}

impl fmt::Display for RewriteTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{}: {} ==> {}", s.label, s.before, s.after)?;
        }
        Ok(())
    }
}

/// A term whose outermost operator is an action, a fork, a restricted
/// action or a constant; the operands are arbitrary closed terms.
#[derive(Clone, Debug, PartialEq)]
pub enum Head {
    Stop,
    Dead,
    Tau(Arc<Term>),
    Pcc(Arc<Term>, Focus, Method, Arc<Term>),
    Restricted(Focus, Vec<Spot>, Arc<Term>, Method, Arc<Term>),
    Fork(Arc<Term>, Arc<Term>, Arc<Term>),
}

impl Head {
    pub fn to_term(&self) -> Term {
        match self {
            Head::Stop => Term::Stop,
            Head::Dead => Term::Dead,
            Head::Tau(x) => Term::Pcc(x.clone(), Action::Tau, x.clone()),
            Head::Pcc(x, f, m, y) => Term::Pcc(x.clone(), Action::Call(f.clone(), m.clone()), y.clone()),
            Head::Restricted(f, spots, x, m, y) => restricted_term(f, spots, x, m, y),
            Head::Fork(x, z, y) => Term::ForkPcc(x.clone(), z.clone(), y.clone()),
        }
    }
}

fn restricted_term(f: &Focus, spots: &[Spot], x: &Arc<Term>, m: &Method, y: &Arc<Term>) -> Term {
    let mut t = Term::Pcc(x.clone(), Action::Call(f.clone(), m.clone()), y.clone());
    for s in spots.iter().rev() {
        t = Term::Nu(f.clone(), s.clone(), Arc::new(t));
    }
    t
}

fn same_arc(a: &Arc<Term>, b: &Arc<Term>) -> bool {
    Arc::ptr_eq(a, b)
}

/// Applies `g` to both operands, keeping shared operands shared.
fn map2(x: &Arc<Term>, y: &Arc<Term>, mut g: impl FnMut(&Arc<Term>) -> Term) -> (Arc<Term>, Arc<Term>) {
    let x2 = Arc::new(g(x));
    let y2 = if same_arc(x, y) { x2.clone() } else { Arc::new(g(y)) };
    (x2, y2)
}

type Frame = Arc<dyn Fn(Term) -> Term + Send + Sync>;

/// What `normalize_traced` computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Normalize,
    FirstLevel,
    Project(u32),
}

/// Traced result of `normalize_traced`.
#[derive(Clone, Debug)]
pub enum Normal {
    Basic(Basic),
    Head(Head),
}

/// A rewriting session: fresh names, fuel and trace are local to it.
pub struct Engine {
    cfg: Config,
    registry: Registry,
    resolved: HashMap<String, ServiceHandle>,
    fresh: Fresh,
    steps: u64,
    depth: usize,
    trace: Vec<Step>,
    ctx: Vec<Frame>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(Registry::new(), Config::default())
    }
}

impl Engine {
    pub fn new(registry: Registry, cfg: Config) -> Self {
        Engine {
            cfg,
            registry,
            resolved: HashMap::new(),
            fresh: Fresh::new(),
            steps: 0,
            depth: 0,
            trace: Vec::new(),
            ctx: Vec::new(),
        }
    }

    pub fn with_registry(registry: Registry) -> Self {
        Engine::new(registry, Config::default())
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn fresh(&mut self) -> &mut Fresh {
        &mut self.fresh
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn take_trace(&mut self) -> RewriteTrace {
        RewriteTrace { steps: std::mem::take(&mut self.trace) }
    }

    /// Rewrites a closed term to a basic term.
    pub fn normalize(&mut self, t: &Term) -> Result<Basic, EngineError> {
        let t = self.prepare(t)?;
        let b = self.norm(&t)?;
        debug_assert!(b.well_formed());
        Ok(b)
    }

    /// Exposes the head of a closed term.
    pub fn first_level_normalize(&mut self, t: &Term) -> Result<Head, EngineError> {
        let t = self.prepare(t)?;
        self.fln(&t)
    }

    /// Basic term equal to `pi(n, t)`.
    pub fn proj_normalize(&mut self, n: u32, t: &Term) -> Result<Basic, EngineError> {
        let t = self.prepare(t)?;
        self.norm(&Term::Proj(n, Arc::new(t)))
    }

    pub fn normalize_traced(&mut self, t: &Term, mode: Mode) -> Result<(Normal, RewriteTrace), EngineError> {
        let saved = std::mem::replace(&mut self.cfg.trace, true);
        self.trace.clear();
        let res = match mode {
            Mode::Normalize => self.normalize(t).map(Normal::Basic),
            Mode::FirstLevel => self.first_level_normalize(t).map(Normal::Head),
            Mode::Project(n) => self.proj_normalize(n, t).map(Normal::Basic),
        };
        self.cfg.trace = saved;
        let trace = self.take_trace();
        res.map(|r| (r, trace))
    }

    fn prepare(&mut self, t: &Term) -> Result<Term, EngineError> {
        self.steps = 0;
        self.depth = 0;
        if let Some(x) = crate::names::free_vars(t).into_iter().next() {
            return Err(EngineError::OpenTerm(x));
        }
        crate::pgldf::desugar_forks_with(t, self.cfg.poll_via_this)
    }

    fn record(&mut self, label: &'static str, before: &Term, after: &Term) -> Result<(), EngineError> {
        self.steps += 1;
        if self.steps > self.cfg.fuel {
            return Err(EngineError::FuelExhausted(self.cfg.fuel));
        }
        if self.cfg.trace {
            let mut b = before.clone();
            let mut a = after.clone();
            for fr in self.ctx.iter().rev() {
                b = fr(b);
                a = fr(a);
            }
            self.trace.push(Step { label, before: b, after: a });
        }
        Ok(())
    }

    fn within<R>(&mut self, frame: impl Fn(Term) -> Term + Send + Sync + 'static, f: impl FnOnce(&mut Self) -> R) -> R {
        if self.cfg.trace {
            self.ctx.push(Arc::new(frame));
            let r = f(self);
            self.ctx.pop();
            r
        } else {
            f(self)
        }
    }

    fn resolve(&mut self, r: &ServiceRef) -> Result<ServiceHandle, EngineError> {
        match r {
            ServiceRef::Bound(h) => Ok(h.clone()),
            ServiceRef::Named(n) => {
                if let Some(h) = self.resolved.get(n.as_ref()) {
                    return Ok(h.clone());
                }
                let h = self.registry.resolve(n)?;
                self.resolved.insert(n.to_string(), h.clone());
                Ok(h)
            }
        }
    }

    fn norm(&mut self, t: &Term) -> Result<Basic, EngineError> {
        if self.depth >= self.cfg.max_depth {
            return Err(EngineError::DepthExceeded(self.cfg.max_depth));
        }
        self.depth += 1;
        let r = stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || self.norm_inner(t));
        self.depth -= 1;
        r
    }

    fn norm_inner(&mut self, t: &Term) -> Result<Basic, EngineError> {
        let h = self.fln(t)?;
        Ok(match h {
            Head::Stop => Basic::Stop,
            Head::Dead => Basic::Dead,
            Head::Tau(x) => {
                let b = self.within(Term::tau, |e| e.norm(&x))?;
                Basic::Tau(Arc::new(b))
            }
            Head::Pcc(x, f, m, y) => {
                let a = Action::Call(f.clone(), m.clone());
                let (bx, by) = self.norm_pair(&x, &y, move |l, r| Term::Pcc(l, a.clone(), r))?;
                Basic::Pcc(bx, f, m, by)
            }
            Head::Restricted(f, spots, x, m, y) => {
                let (fc, sc, mc) = (f.clone(), spots.clone(), m.clone());
                let (bx, by) = self.norm_pair(&x, &y, move |l, r| restricted_term(&fc, &sc, &l, &mc, &r))?;
                Basic::Restricted(f, spots, bx, m, by)
            }
            Head::Fork(x, z, y) => {
                let shared = same_arc(&x, &y);
                let (z2, y2) = (z.clone(), y.clone());
                let bx = Arc::new(self.within(
                    move |h| {
                        let h = Arc::new(h);
                        let r = if shared { h.clone() } else { y2.clone() };
                        Term::ForkPcc(h, z2.clone(), r)
                    },
                    |e| e.norm(&x),
                )?);
                let bx_t = Arc::new(bx.to_term());
                let y3 = y.clone();
                let bz = Arc::new(self.within(
                    {
                        let bx_t = bx_t.clone();
                        move |h| Term::ForkPcc(bx_t.clone(), Arc::new(h), if shared { bx_t.clone() } else { y3.clone() })
                    },
                    |e| e.norm(&z),
                )?);
                let by = if shared {
                    bx.clone()
                } else {
                    let bz_t = Arc::new(bz.to_term());
                    Arc::new(self.within(
                        move |h| Term::ForkPcc(bx_t.clone(), bz_t.clone(), Arc::new(h)),
                        |e| e.norm(&y),
                    )?)
                };
                Basic::Fork(bx, bz, by)
            }
        })
    }

    /// Normalizes both operands of a binary head, left first.
    fn norm_pair(
        &mut self,
        x: &Arc<Term>,
        y: &Arc<Term>,
        rebuild: impl Fn(Arc<Term>, Arc<Term>) -> Term + Clone + Send + Sync + 'static,
    ) -> Result<(Arc<Basic>, Arc<Basic>), EngineError> {
        if same_arc(x, y) {
            let rb = rebuild.clone();
            let b = Arc::new(self.within(
                move |h| {
                    let h = Arc::new(h);
                    rb(h.clone(), h)
                },
                |e| e.norm(x),
            )?);
            return Ok((b.clone(), b));
        }
        let y_keep = y.clone();
        let rb = rebuild.clone();
        let bx = Arc::new(self.within(move |h| rb(Arc::new(h), y_keep.clone()), |e| e.norm(x))?);
        let bx_t = Arc::new(bx.to_term());
        let by = Arc::new(self.within(move |h| rebuild(bx_t.clone(), Arc::new(h)), |e| e.norm(y))?);
        Ok((bx, by))
    }

    /// First-level exposure.
    fn fln(&mut self, t: &Term) -> Result<Head, EngineError> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || self.fln_inner(t))
    }

    fn fln_inner(&mut self, t: &Term) -> Result<Head, EngineError> {
        let mut cur = t.clone();
        loop {
            match &cur {
                Term::Stop => return Ok(Head::Stop),
                Term::Dead => return Ok(Head::Dead),
                Term::Pcc(x, Action::Tau, y) => {
                    if same_arc(x, y) || x == y {
                        return Ok(Head::Tau(x.clone()));
                    }
                    let after = Term::Pcc(x.clone(), Action::Tau, x.clone());
                    self.record("T1", &cur, &after)?;
                    return Ok(Head::Tau(x.clone()));
                }
                Term::Pcc(x, Action::Call(f, m), y) => {
                    return Ok(Head::Pcc(x.clone(), f.clone(), m.clone(), y.clone()));
                }
                Term::ForkPcc(x, z, y) => return Ok(Head::Fork(x.clone(), z.clone(), y.clone())),
                Term::Var(x) => return Err(EngineError::OpenTerm(x.clone())),
                Term::Csi(ts) => match self.fln_csi(&cur, ts)? {
                    Next::Done(h) => return Ok(h),
                    Next::Continue(t) => cur = t,
                },
                Term::S2d(b) => return self.fln_s2d(b),
                Term::Use(b, f, r) => match self.fln_use(&cur, b, f, r)? {
                    Next::Done(h) => return Ok(h),
                    Next::Continue(t) => cur = t,
                },
                Term::Nu(f, s, b) => return self.fln_nu(f, s, b),
                Term::Fix(x, b) => {
                    let body = expose_guard(x, b, self.cfg.unfold_bound, &mut self.fresh);
                    match body {
                        Some(body) => {
                            let after = subst_var(&body, x, &cur, &mut self.fresh);
                            self.record("REC1", &cur, &after)?;
                            cur = after;
                        }
                        None => {
                            self.record("REC3", &cur, &Term::Dead)?;
                            return Ok(Head::Dead);
                        }
                    }
                }
                Term::Proj(n, b) => return self.fln_proj(&cur, *n, b),
                Term::NtIl(..) | Term::NtJava(..) => {
                    cur = crate::pgldf::desugar_forks_with(&cur, self.cfg.poll_via_this)?;
                }
            }
        }
    }

    fn fln_csi(&mut self, cur: &Term, ts: &[Term]) -> Result<Next, EngineError> {
        if ts.is_empty() {
            self.record("CSI1", cur, &Term::Stop)?;
            return Ok(Next::Continue(Term::Stop));
        }
        let rest: Vec<Term> = ts[1..].to_vec();
        let rest_f = rest.clone();
        let h = self.within(
            move |h| {
                let mut v = vec![h];
                v.extend(rest_f.iter().cloned());
                Term::Csi(v)
            },
            |e| e.fln(&ts[0]),
        )?;
        let with_head = |t: Term| {
            let mut v = vec![t];
            v.extend(rest.iter().cloned());
            Term::Csi(v)
        };
        let now = with_head(h.to_term());
        let appended = |extra: &[&Term]| {
            let mut v = rest.clone();
            v.extend(extra.iter().map(|t| (*t).clone()));
            Term::Csi(v)
        };
        match h {
            Head::Stop => {
                let after = Term::Csi(rest.clone());
                self.record("CSI2", &now, &after)?;
                Ok(Next::Continue(after))
            }
            Head::Dead => {
                let after = Term::s2d(Term::Csi(rest.clone()));
                self.record("CSI3", &now, &after)?;
                Ok(Next::Continue(after))
            }
            Head::Tau(x) => {
                let next = Arc::new(appended(&[&x]));
                let after = Term::Pcc(next.clone(), Action::Tau, next.clone());
                self.record("CSI4", &now, &after)?;
                Ok(Next::Done(Head::Tau(next)))
            }
            Head::Pcc(x, f, m, y) => {
                let (x2, y2) = map2(&x, &y, |t| appended(&[t]));
                let h = Head::Pcc(x2, f, m, y2);
                self.record("CSI5", &now, &h.to_term())?;
                Ok(Next::Done(h))
            }
            Head::Restricted(f, spots, x, m, y) => {
                let taken = free_spots_all(&rest, &f);
                let (spots, x, m, y) = if spots.iter().any(|s| taken.contains(s)) {
                    let renamed = self.rename_block(&f, &spots, &x, &m, &y, &taken, |s| taken.contains(s));
                    let after = with_head(restricted_term(&f, &renamed.0, &renamed.1, &renamed.2, &renamed.3));
                    self.record("R1", &now, &after)?;
                    renamed
                } else {
                    (spots, x, m, y)
                };
                let before = with_head(restricted_term(&f, &spots, &x, &m, &y));
                let inner = Term::Csi({
                    let mut v = vec![Term::Pcc(x.clone(), Action::Call(f.clone(), m.clone()), y.clone())];
                    v.extend(rest.iter().cloned());
                    v
                });
                let mut extruded = inner;
                for s in spots.iter().rev() {
                    extruded = Term::Nu(f.clone(), s.clone(), Arc::new(extruded));
                }
                self.record("R7", &before, &extruded)?;
                let (x2, y2) = map2(&x, &y, |t| appended(&[t]));
                let h = Head::Restricted(f, spots, x2, m, y2);
                self.record("CSI5", &extruded, &h.to_term())?;
                Ok(Next::Done(h))
            }
            Head::Fork(x, z, _y) => {
                let next = Arc::new(appended(&[&z, &x]));
                let after = Term::Pcc(next.clone(), Action::Tau, next.clone());
                self.record("CSI6", &now, &after)?;
                Ok(Next::Done(Head::Tau(next)))
            }
        }
    }

    /// Renames the spots of a restricted block selected by `clash` to fresh ones.
    #[allow(clippy::too_many_arguments, clippy::type_complexity)]
    fn rename_block(
        &mut self,
        f: &Focus,
        spots: &[Spot],
        x: &Arc<Term>,
        m: &Method,
        y: &Arc<Term>,
        avoid: &BTreeSet<Spot>,
        clash: impl Fn(&Spot) -> bool,
    ) -> (Vec<Spot>, Arc<Term>, Method, Arc<Term>) {
        let mut spots = spots.to_vec();
        let (mut x, mut m, mut y) = (x.clone(), m.clone(), y.clone());
        for i in 0..spots.len() {
            if !clash(&spots[i]) {
                continue;
            }
            let mut forbidden = avoid.clone();
            forbidden.extend(free_spots(&x, f));
            forbidden.extend(free_spots(&y, f));
            forbidden.extend(m.names());
            forbidden.extend(spots.iter().cloned());
            let s2 = self.fresh.spot_avoiding(&forbidden);
            let old = spots[i].clone();
            let fresh = &mut self.fresh;
            let (x2, y2) = map2(&x, &y, |t| subst_spot(t, f, &old, &s2, fresh));
            x = x2;
            y = y2;
            m = m.rename(&old, &s2);
            spots[i] = s2;
        }
        (spots, x, m, y)
    }

    fn fln_s2d(&mut self, b: &Arc<Term>) -> Result<Head, EngineError> {
        let h = self.within(Term::s2d, |e| e.fln(b))?;
        let now = Term::s2d(h.to_term());
        let s2d = |t: &Arc<Term>| Term::s2d((**t).clone());
        match h {
            Head::Stop => {
                self.record("S2D1", &now, &Term::Dead)?;
                Ok(Head::Dead)
            }
            Head::Dead => {
                self.record("S2D2", &now, &Term::Dead)?;
                Ok(Head::Dead)
            }
            Head::Tau(x) => {
                let h = Head::Tau(Arc::new(s2d(&x)));
                self.record("S2D3", &now, &h.to_term())?;
                Ok(h)
            }
            Head::Pcc(x, f, m, y) => {
                let (x2, y2) = map2(&x, &y, s2d);
                let h = Head::Pcc(x2, f, m, y2);
                self.record("S2D4", &now, &h.to_term())?;
                Ok(h)
            }
            Head::Restricted(f, spots, x, m, y) => {
                let inner = Term::s2d(Term::Pcc(x.clone(), Action::Call(f.clone(), m.clone()), y.clone()));
                let mut moved = inner;
                for s in spots.iter().rev() {
                    moved = Term::Nu(f.clone(), s.clone(), Arc::new(moved));
                }
                self.record("R8", &now, &moved)?;
                let (x2, y2) = map2(&x, &y, s2d);
                let h = Head::Restricted(f, spots, x2, m, y2);
                self.record("S2D4", &moved, &h.to_term())?;
                Ok(h)
            }
            Head::Fork(x, z, y) => {
                let (x2, y2) = map2(&x, &y, s2d);
                let h = Head::Fork(x2, Arc::new(s2d(&z)), y2);
                self.record("S2D5", &now, &h.to_term())?;
                Ok(h)
            }
        }
    }

    fn fln_use(&mut self, cur: &Term, b: &Arc<Term>, f: &Focus, r: &ServiceRef) -> Result<Next, EngineError> {
        let handle = self.resolve(r)?;
        let (fc, rc) = (f.clone(), r.clone());
        let h = self.within(move |h| Term::Use(Arc::new(h), fc.clone(), rc.clone()), |e| e.fln(b))?;
        let wrap = |t: &Arc<Term>, r: &ServiceRef| Term::Use(t.clone(), f.clone(), r.clone());
        let now = wrap(&Arc::new(h.to_term()), r);
        let _ = cur;
        match h {
            Head::Stop => {
                self.record("TSC1", &now, &Term::Stop)?;
                Ok(Next::Done(Head::Stop))
            }
            Head::Dead => {
                self.record("TSC2", &now, &Term::Dead)?;
                Ok(Next::Done(Head::Dead))
            }
            Head::Tau(x) => {
                let h = Head::Tau(Arc::new(wrap(&x, r)));
                self.record("TSC3", &now, &h.to_term())?;
                Ok(Next::Done(h))
            }
            Head::Pcc(x, g, m, y) if g != *f => {
                let (x2, y2) = map2(&x, &y, |t| wrap(t, r));
                let h = Head::Pcc(x2, g, m, y2);
                self.record("TSC4", &now, &h.to_term())?;
                Ok(Next::Done(h))
            }
            Head::Pcc(x, _, m, y) => {
                let reply = handle.query(&m);
                let derived = ServiceRef::Bound(handle.derive(&m));
                match reply {
                    Reply::T => {
                        let h = Head::Tau(Arc::new(wrap(&x, &derived)));
                        self.record("TSC5", &now, &h.to_term())?;
                        Ok(Next::Done(h))
                    }
                    Reply::F => {
                        let h = Head::Tau(Arc::new(wrap(&y, &derived)));
                        self.record("TSC6", &now, &h.to_term())?;
                        Ok(Next::Done(h))
                    }
                    Reply::Refused => {
                        self.record("TSC7", &now, &Term::Dead)?;
                        Ok(Next::Done(Head::Dead))
                    }
                }
            }
            Head::Restricted(g, spots, x, m, y) if g != *f => {
                let mut moved = Term::Use(
                    Arc::new(Term::Pcc(x.clone(), Action::Call(g.clone(), m.clone()), y.clone())),
                    f.clone(),
                    r.clone(),
                );
                for s in spots.iter().rev() {
                    moved = Term::Nu(g.clone(), s.clone(), Arc::new(moved));
                }
                self.record("R9", &now, &moved)?;
                let (x2, y2) = map2(&x, &y, |t| wrap(t, r));
                let h = Head::Restricted(g, spots, x2, m, y2);
                self.record("TSC4", &moved, &h.to_term())?;
                Ok(Next::Done(h))
            }
            Head::Restricted(g, spots, x, m, y) => {
                let undefined = |h: &ServiceHandle, s: &Spot| h.query(&Method::Md(MdMethod::Undeftst(s.clone()))) != Reply::F;
                let mut block = (spots, x, m, y);
                let mut now = now;
                if !block.0.iter().all(|s| undefined(&handle, s)) {
                    let attempts = handle.defined_spots().map_or(self.cfg.restriction_bound, |n| n + 1);
                    for _ in 0..attempts {
                        let stuck: Vec<Spot> = block.0.iter().filter(|s| !undefined(&handle, s)).cloned().collect();
                        if stuck.is_empty() {
                            break;
                        }
                        let renamed = self.rename_block(&g, &block.0, &block.1, &block.2, &block.3, &BTreeSet::new(), |s| stuck.contains(s));
                        let after = wrap(&Arc::new(restricted_term(&g, &renamed.0, &renamed.1, &renamed.2, &renamed.3)), r);
                        self.record("R1", &now, &after)?;
                        now = after;
                        block = renamed;
                    }
                    if let Some(s) = block.0.iter().find(|s| !undefined(&handle, s)) {
                        return Err(EngineError::RestrictionStuck { focus: g, spot: s.clone() });
                    }
                }
                let (_, x, m, y) = block;
                let after = wrap(&Arc::new(Term::Pcc(x, Action::Call(g, m), y)), r);
                self.record("R10", &now, &after)?;
                Ok(Next::Continue(after))
            }
            Head::Fork(x, z, y) => {
                let (x2, y2) = map2(&x, &y, |t| wrap(t, r));
                let h = Head::Fork(x2, Arc::new(wrap(&z, r)), y2);
                self.record("TSC8", &now, &h.to_term())?;
                Ok(Next::Done(h))
            }
        }
    }

    fn fln_nu(&mut self, f: &Focus, s: &Spot, b: &Arc<Term>) -> Result<Head, EngineError> {
        let (fc, sc) = (f.clone(), s.clone());
        let h = self.within(move |h| Term::Nu(fc.clone(), sc.clone(), Arc::new(h)), |e| e.fln(b))?;
        let nu = |t: &Arc<Term>, s: &Spot| Term::Nu(f.clone(), s.clone(), t.clone());
        let now = Term::Nu(f.clone(), s.clone(), Arc::new(h.to_term()));
        match h {
            Head::Stop => {
                self.record("R2", &now, &Term::Stop)?;
                Ok(Head::Stop)
            }
            Head::Dead => {
                self.record("R3", &now, &Term::Dead)?;
                Ok(Head::Dead)
            }
            Head::Tau(x) => {
                let h = Head::Tau(Arc::new(nu(&x, s)));
                self.record("R4", &now, &h.to_term())?;
                Ok(h)
            }
            Head::Pcc(x, g, m, y) => {
                if g != *f || !m.mentions(s) {
                    let (x2, y2) = map2(&x, &y, |t| nu(t, s));
                    let h = Head::Pcc(x2, g.clone(), m, y2);
                    self.record(if g != *f { "R5" } else { "R6" }, &now, &h.to_term())?;
                    Ok(h)
                } else {
                    Ok(Head::Restricted(g, vec![s.clone()], x, m, y))
                }
            }
            Head::Restricted(g, spots, x, m, y) => {
                if g == *f && !spots.contains(s) && m.mentions(s) {
                    let mut all = vec![s.clone()];
                    all.extend(spots);
                    return Ok(Head::Restricted(g, all, x, m, y));
                }
                let (s, now) = if g == *f && spots.contains(s) {
                    let mut avoid: BTreeSet<Spot> = spots.iter().cloned().collect();
                    avoid.extend(free_spots(&x, f));
                    avoid.extend(free_spots(&y, f));
                    avoid.extend(m.names());
                    let s2 = self.fresh.spot_avoiding(&avoid);
                    let block = Arc::new(restricted_term(&g, &spots, &x, &m, &y));
                    let after = nu(&block, &s2);
                    self.record("R1", &now, &after)?;
                    (s2, after)
                } else {
                    (s.clone(), now)
                };
                let mut swapped = nu(&Arc::new(Term::Pcc(x.clone(), Action::Call(g.clone(), m.clone()), y.clone())), &s);
                for t in spots.iter().rev() {
                    swapped = Term::Nu(g.clone(), t.clone(), Arc::new(swapped));
                }
                self.record("R11", &now, &swapped)?;
                let (x2, y2) = map2(&x, &y, |t| nu(t, &s));
                let label = if g != *f { "R5" } else { "R6" };
                let h = Head::Restricted(g, spots, x2, m, y2);
                self.record(label, &swapped, &h.to_term())?;
                Ok(h)
            }
            Head::Fork(x, z, y) => {
                let (x2, y2) = map2(&x, &y, |t| nu(t, s));
                let h = Head::Fork(x2, Arc::new(nu(&z, s)), y2);
                self.record("R12", &now, &h.to_term())?;
                Ok(h)
            }
        }
    }

    fn fln_proj(&mut self, cur: &Term, n: u32, b: &Arc<Term>) -> Result<Head, EngineError> {
        if n == 0 {
            self.record("P0", cur, &Term::Dead)?;
            return Ok(Head::Dead);
        }
        let h = self.within(move |h| Term::Proj(n, Arc::new(h)), |e| e.fln(b))?;
        let now = Term::Proj(n, Arc::new(h.to_term()));
        let pi = |t: &Arc<Term>| Term::Proj(n - 1, t.clone());
        match h {
            Head::Stop => {
                self.record("P1", &now, &Term::Stop)?;
                Ok(Head::Stop)
            }
            Head::Dead => {
                self.record("P2", &now, &Term::Dead)?;
                Ok(Head::Dead)
            }
            Head::Tau(x) => {
                let h = Head::Tau(Arc::new(pi(&x)));
                self.record("P3", &now, &h.to_term())?;
                Ok(h)
            }
            Head::Pcc(x, f, m, y) => {
                let (x2, y2) = map2(&x, &y, pi);
                let h = Head::Pcc(x2, f, m, y2);
                self.record("P3", &now, &h.to_term())?;
                Ok(h)
            }
            Head::Restricted(f, spots, x, m, y) => {
                let inner = Term::Proj(n, Arc::new(Term::Pcc(x.clone(), Action::Call(f.clone(), m.clone()), y.clone())));
                let mut moved = inner;
                for s in spots.iter().rev() {
                    moved = Term::Nu(f.clone(), s.clone(), Arc::new(moved));
                }
                self.record("P4", &now, &moved)?;
                let (x2, y2) = map2(&x, &y, pi);
                let h = Head::Restricted(f, spots, x2, m, y2);
                self.record("P3", &moved, &h.to_term())?;
                Ok(h)
            }
            Head::Fork(x, z, y) => {
                let (x2, y2) = map2(&x, &y, pi);
                let h = Head::Fork(x2, Arc::new(pi(&z)), y2);
                self.record("P5", &now, &h.to_term())?;
                Ok(h)
            }
        }
    }
}

enum Next {
    Done(Head),
    Continue(Term),
}

/// One-shot normalization with the given services.
pub fn normalize(t: &Term, registry: &Registry) -> Result<Basic, EngineError> {
    Engine::with_registry(registry.clone()).normalize(t)
}

pub fn proj_normalize(n: u32, t: &Term, registry: &Registry) -> Result<Basic, EngineError> {
    Engine::with_registry(registry.clone()).proj_normalize(n, t)
}

pub fn first_level_normalize(t: &Term, registry: &Registry) -> Result<Head, EngineError> {
    Engine::with_registry(registry.clone()).first_level_normalize(t)
}

pub fn normalize_traced(t: &Term, mode: Mode, registry: &Registry) -> Result<(Normal, RewriteTrace), EngineError> {
    Engine::with_registry(registry.clone()).normalize_traced(t, mode)
}
