//! Free and bound spots per focus, spot and variable substitution,
//! fresh-name generation and guardedness.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::term::{
    expand_nt_il, expand_nt_java, md_focus, Action, Focus, Spot, Term, Var, SPOT_PREFIX, VAR_PREFIX,
};

/// Deterministic generator of spots and variables outside user syntax.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    spots: u64,
    vars: u64,
}

impl Fresh {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn spot(&mut self) -> Spot {
        let s = Spot::new(&format!("{SPOT_PREFIX}g{}", self.spots));
        self.spots += 1;
        s
    }

    /// A generated spot not in `avoid`.
    pub fn spot_avoiding(&mut self, avoid: &BTreeSet<Spot>) -> Spot {
        loop {
            let s = self.spot();
            if !avoid.contains(&s) {
                return s;
            }
        }
    }

    pub fn var(&mut self) -> Var {
        let x = Var::new(&format!("{VAR_PREFIX}g{}", self.vars));
        self.vars += 1;
        x
    }

    pub fn var_avoiding(&mut self, avoid: &BTreeSet<Var>) -> Var {
        loop {
            let x = self.var();
            if !avoid.contains(&x) {
                return x;
            }
        }
    }
}

/// FN^f(t) and BN^f(t).
pub fn name_analysis(t: &Term, f: &Focus) -> (BTreeSet<Spot>, BTreeSet<Spot>) {
    let mut free = BTreeSet::new();
    let mut bound = BTreeSet::new();
    collect(t, f, &mut Vec::new(), &mut free, &mut bound);
    (free, bound)
}

pub fn free_spots(t: &Term, f: &Focus) -> BTreeSet<Spot> {
    name_analysis(t, f).0
}

/// FN^f over a thread vector.
pub fn free_spots_all(ts: &[Term], f: &Focus) -> BTreeSet<Spot> {
    let mut out = BTreeSet::new();
    for t in ts {
        out.extend(free_spots(t, f));
    }
    out
}

pub fn is_free_in(s: &Spot, t: &Term, f: &Focus) -> bool {
    free_spots(t, f).contains(s)
}

fn collect(
    t: &Term,
    f: &Focus,
    scope: &mut Vec<Spot>,
    free: &mut BTreeSet<Spot>,
    bound: &mut BTreeSet<Spot>,
) {
    match t {
        Term::Stop | Term::Dead | Term::Var(_) => {}
        Term::Pcc(l, a, r) => {
            if let Action::Call(g, m) = a {
                if g == f {
                    for s in m.names() {
                        if !scope.contains(&s) {
                            free.insert(s);
                        }
                    }
                }
            }
            collect(l, f, scope, free, bound);
            if !Arc::ptr_eq(l, r) {
                collect(r, f, scope, free, bound);
            }
        }
        Term::Csi(ts) => {
            for t in ts {
                collect(t, f, scope, free, bound);
            }
        }
        Term::S2d(t) | Term::Use(t, _, _) | Term::Fix(_, t) | Term::Proj(_, t) => {
            collect(t, f, scope, free, bound)
        }
        Term::Nu(g, s, t) => {
            if g == f {
                bound.insert(s.clone());
                scope.push(s.clone());
                collect(t, f, scope, free, bound);
                scope.pop();
            } else {
                collect(t, f, scope, free, bound);
            }
        }
        Term::ForkPcc(l, z, r) => {
            collect(l, f, scope, free, bound);
            collect(z, f, scope, free, bound);
            if !Arc::ptr_eq(l, r) {
                collect(r, f, scope, free, bound);
            }
        }
        Term::NtIl(s, s2, p, q) => collect(&expand_nt_il(s, s2, p, q), f, scope, free, bound),
        Term::NtJava(s, p, q) => collect(&expand_nt_java(s, p, q, false), f, scope, free, bound),
    }
}

/// t[s'/s]^f, capture-avoiding.
pub fn subst_spot(t: &Term, f: &Focus, s: &Spot, s2: &Spot, fresh: &mut Fresh) -> Term {
    match t {
        Term::Stop | Term::Dead | Term::Var(_) => t.clone(),
        Term::Pcc(l, a, r) => {
            let a = match a {
                Action::Call(g, m) if g == f => Action::Call(g.clone(), m.rename(s, s2)),
                _ => a.clone(),
            };
            let l2 = Arc::new(subst_spot(l, f, s, s2, fresh));
            let r2 = if Arc::ptr_eq(l, r) { l2.clone() } else { Arc::new(subst_spot(r, f, s, s2, fresh)) };
            Term::Pcc(l2, a, r2)
        }
        Term::Csi(ts) => Term::Csi(ts.iter().map(|t| subst_spot(t, f, s, s2, fresh)).collect()),
        Term::S2d(b) => Term::S2d(Arc::new(subst_spot(b, f, s, s2, fresh))),
        Term::Use(b, g, h) => Term::Use(Arc::new(subst_spot(b, f, s, s2, fresh)), g.clone(), h.clone()),
        Term::Nu(g, s3, b) => {
            if g != f || (s != s3 && s2 != s3) {
                Term::Nu(g.clone(), s3.clone(), Arc::new(subst_spot(b, f, s, s2, fresh)))
            } else if s == s3 {
                t.clone()
            } else {
                let (fv, bv) = name_analysis(b, f);
                let mut avoid: BTreeSet<Spot> = fv.union(&bv).cloned().collect();
                avoid.insert(s.clone());
                avoid.insert(s2.clone());
                let s4 = fresh.spot_avoiding(&avoid);
                let renamed = subst_spot(b, f, s3, &s4, fresh);
                Term::Nu(g.clone(), s4, Arc::new(subst_spot(&renamed, f, s, s2, fresh)))
            }
        }
        Term::Fix(x, b) => Term::Fix(x.clone(), Arc::new(subst_spot(b, f, s, s2, fresh))),
        Term::Proj(n, b) => Term::Proj(*n, Arc::new(subst_spot(b, f, s, s2, fresh))),
        Term::ForkPcc(l, z, r) => {
            let l2 = Arc::new(subst_spot(l, f, s, s2, fresh));
            let z2 = Arc::new(subst_spot(z, f, s, s2, fresh));
            let r2 = if Arc::ptr_eq(l, r) { l2.clone() } else { Arc::new(subst_spot(r, f, s, s2, fresh)) };
            Term::ForkPcc(l2, z2, r2)
        }
        Term::NtIl(a, b, p, q) => {
            if *f != md_focus() || !touches_binder(s, s2, a) {
                let b2 = if *f == md_focus() && b == s { s2.clone() } else { b.clone() };
                Term::NtIl(
                    a.clone(),
                    b2,
                    Arc::new(subst_spot(p, f, s, s2, fresh)),
                    Arc::new(subst_spot(q, f, s, s2, fresh)),
                )
            } else {
                subst_spot(&expand_nt_il(a, b, p, q), f, s, s2, fresh)
            }
        }
        Term::NtJava(a, p, q) => {
            let this = Spot::new(crate::term::THIS_SPOT);
            if *f != md_focus() || !touches_binder(s, s2, &this) {
                let a2 = if *f == md_focus() && a == s { s2.clone() } else { a.clone() };
                Term::NtJava(
                    a2,
                    Arc::new(subst_spot(p, f, s, s2, fresh)),
                    Arc::new(subst_spot(q, f, s, s2, fresh)),
                )
            } else {
                subst_spot(&expand_nt_java(a, p, q, false), f, s, s2, fresh)
            }
        }
    }
}

fn touches_binder(s: &Spot, s2: &Spot, binder: &Spot) -> bool {
    s == binder || s2 == binder
}

/// Free recursion variables.
pub fn free_vars(t: &Term) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    fv(t, &mut Vec::new(), &mut out);
    out
}

fn fv(t: &Term, scope: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    match t {
        Term::Stop | Term::Dead => {}
        Term::Var(x) => {
            if !scope.contains(x) {
                out.insert(x.clone());
            }
        }
        Term::Pcc(l, _, r) => {
            fv(l, scope, out);
            if !Arc::ptr_eq(l, r) {
                fv(r, scope, out);
            }
        }
        Term::Csi(ts) => ts.iter().for_each(|t| fv(t, scope, out)),
        Term::S2d(b) | Term::Use(b, _, _) | Term::Nu(_, _, b) | Term::Proj(_, b) => fv(b, scope, out),
        Term::Fix(x, b) => {
            scope.push(x.clone());
            fv(b, scope, out);
            scope.pop();
        }
        Term::ForkPcc(l, z, r) => {
            fv(l, scope, out);
            fv(z, scope, out);
            if !Arc::ptr_eq(l, r) {
                fv(r, scope, out);
            }
        }
        Term::NtIl(_, _, p, q) | Term::NtJava(_, p, q) => {
            fv(p, scope, out);
            fv(q, scope, out);
        }
    }
}

pub fn is_closed(t: &Term) -> bool {
    free_vars(t).is_empty()
}

/// t[u/x], renaming recursion binders that would capture free variables of u.
pub fn subst_var(t: &Term, x: &Var, u: &Term, fresh: &mut Fresh) -> Term {
    let fu = free_vars(u);
    sv(t, x, u, &fu, fresh)
}

fn sv(t: &Term, x: &Var, u: &Term, fu: &BTreeSet<Var>, fresh: &mut Fresh) -> Term {
    match t {
        Term::Stop | Term::Dead => t.clone(),
        Term::Var(y) => {
            if y == x {
                u.clone()
            } else {
                t.clone()
            }
        }
        Term::Pcc(l, a, r) => {
            let l2 = Arc::new(sv(l, x, u, fu, fresh));
            let r2 = if Arc::ptr_eq(l, r) { l2.clone() } else { Arc::new(sv(r, x, u, fu, fresh)) };
            Term::Pcc(l2, a.clone(), r2)
        }
        Term::Csi(ts) => Term::Csi(ts.iter().map(|t| sv(t, x, u, fu, fresh)).collect()),
        Term::S2d(b) => Term::S2d(Arc::new(sv(b, x, u, fu, fresh))),
        Term::Use(b, g, h) => Term::Use(Arc::new(sv(b, x, u, fu, fresh)), g.clone(), h.clone()),
        Term::Nu(g, s, b) => Term::Nu(g.clone(), s.clone(), Arc::new(sv(b, x, u, fu, fresh))),
        Term::Proj(n, b) => Term::Proj(*n, Arc::new(sv(b, x, u, fu, fresh))),
        Term::Fix(y, b) => {
            if y == x || !free_vars(b).contains(x) {
                t.clone()
            } else if fu.contains(y) {
                let mut avoid = fu.clone();
                avoid.extend(free_vars(b));
                let y2 = fresh.var_avoiding(&avoid);
                let b2 = subst_var(b, y, &Term::Var(y2.clone()), fresh);
                Term::Fix(y2, Arc::new(sv(&b2, x, u, fu, fresh)))
            } else {
                Term::Fix(y.clone(), Arc::new(sv(b, x, u, fu, fresh)))
            }
        }
        Term::ForkPcc(l, z, r) => {
            let l2 = Arc::new(sv(l, x, u, fu, fresh));
            let z2 = Arc::new(sv(z, x, u, fu, fresh));
            let r2 = if Arc::ptr_eq(l, r) { l2.clone() } else { Arc::new(sv(r, x, u, fu, fresh)) };
            Term::ForkPcc(l2, z2, r2)
        }
        Term::NtIl(s, s2, p, q) => Term::NtIl(
            s.clone(),
            s2.clone(),
            Arc::new(sv(p, x, u, fu, fresh)),
            Arc::new(sv(q, x, u, fu, fresh)),
        ),
        Term::NtJava(s, p, q) => Term::NtJava(
            s.clone(),
            Arc::new(sv(p, x, u, fu, fresh)),
            Arc::new(sv(q, x, u, fu, fresh)),
        ),
    }
}

/// Every free occurrence of `x` lies under a postconditional or fork.
pub fn guarded_in(x: &Var, t: &Term) -> bool {
    !unguarded_occurrence(x, t)
}

fn unguarded_occurrence(x: &Var, t: &Term) -> bool {
    match t {
        Term::Var(y) => y == x,
        Term::Stop | Term::Dead => false,
        Term::Pcc(..) | Term::ForkPcc(..) | Term::NtIl(..) | Term::NtJava(..) => false,
        Term::Csi(ts) => ts.iter().any(|t| unguarded_occurrence(x, t)),
        Term::S2d(b) | Term::Use(b, _, _) | Term::Nu(_, _, b) | Term::Proj(_, b) => {
            unguarded_occurrence(x, b)
        }
        Term::Fix(y, b) => y != x && unguarded_occurrence(x, b),
    }
}

/// Membership in the guarded terms: closed subterms count as parameters.
pub fn guarded_term(t: &Term) -> bool {
    if is_closed(t) {
        return true;
    }
    match t {
        Term::Var(_) => false,
        Term::Stop | Term::Dead => true,
        Term::Pcc(..) | Term::ForkPcc(..) | Term::NtIl(..) | Term::NtJava(..) => true,
        Term::Csi(ts) => ts.iter().all(guarded_term),
        Term::S2d(b) | Term::Use(b, _, _) | Term::Nu(_, _, b) | Term::Proj(_, b) => guarded_term(b),
        Term::Fix(x, b) => guarded_term(b) && guarded_in(x, b),
    }
}

/// A term equal to `t` in which `x` is guarded, found by unfolding
/// recursion binders outside any guard at most `bound` times.
pub fn expose_guard(x: &Var, t: &Term, bound: usize, fresh: &mut Fresh) -> Option<Term> {
    let mut cur = t.clone();
    for _ in 0..=bound {
        if guarded_in(x, &cur) {
            return Some(cur);
        }
        let (next, changed) = unfold_unguarded(&cur, fresh);
        if !changed {
            return None;
        }
        cur = next;
    }
    guarded_in(x, &cur).then_some(cur)
}

fn unfold_unguarded(t: &Term, fresh: &mut Fresh) -> (Term, bool) {
    match t {
        Term::Fix(y, b) => {
            if **b == Term::Var(y.clone()) {
                (Term::Dead, true)
            } else {
                (subst_var(b, y, t, fresh), true)
            }
        }
        Term::Csi(ts) => {
            let mut changed = false;
            let ts = ts
                .iter()
                .map(|t| {
                    let (t, c) = unfold_unguarded(t, fresh);
                    changed |= c;
                    t
                })
                .collect();
            (Term::Csi(ts), changed)
        }
        Term::S2d(b) => {
            let (b, c) = unfold_unguarded(b, fresh);
            (Term::S2d(Arc::new(b)), c)
        }
        Term::Use(b, g, h) => {
            let (b, c) = unfold_unguarded(b, fresh);
            (Term::Use(Arc::new(b), g.clone(), h.clone()), c)
        }
        Term::Nu(g, s, b) => {
            let (b, c) = unfold_unguarded(b, fresh);
            (Term::Nu(g.clone(), s.clone(), Arc::new(b)), c)
        }
        Term::Proj(n, b) => {
            let (b, c) = unfold_unguarded(b, fresh);
            (Term::Proj(*n, Arc::new(b)), c)
        }
        _ => (t.clone(), false),
    }
}
