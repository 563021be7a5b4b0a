//! Basic terms: the normal forms produced by the engine, and their
//! comparison modulo renaming and reordering of restricted spots.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::term::{Action, Focus, Method, Spot, Term, SPOT_PREFIX};

#[derive(Clone, Debug)]
pub enum Basic {
    Stop,
    Dead,
    Tau(Arc<Basic>),
    Pcc(Arc<Basic>, Focus, Method, Arc<Basic>),
    /// `nu(f, s1, ... nu(f, sn, p <f.m> q))` with distinct `si` in N(m).
    Restricted(Focus, Vec<Spot>, Arc<Basic>, Method, Arc<Basic>),
    Fork(Arc<Basic>, Arc<Basic>, Arc<Basic>),
}

/// Structural equality; a continuation shared by both branches on both
/// sides is compared once.
impl PartialEq for Basic {
    fn eq(&self, other: &Self) -> bool {
        fn pair(a: &Arc<Basic>, b: &Arc<Basic>, c: &Arc<Basic>, d: &Arc<Basic>) -> bool {
            a == c && ((Arc::ptr_eq(a, b) && Arc::ptr_eq(c, d)) || b == d)
        }
        match (self, other) {
            (Basic::Stop, Basic::Stop) | (Basic::Dead, Basic::Dead) => true,
            (Basic::Tau(a), Basic::Tau(b)) => a == b,
            (Basic::Pcc(a, f, m, b), Basic::Pcc(c, g, n, d)) => f == g && m == n && pair(a, b, c, d),
            (Basic::Restricted(f, ss, a, m, b), Basic::Restricted(g, tt, c, n, d)) => {
                f == g && ss == tt && m == n && pair(a, b, c, d)
            }
            (Basic::Fork(a, z, b), Basic::Fork(c, w, d)) => z == w && pair(a, b, c, d),
            _ => false,
        }
    }
}

impl Eq for Basic {}

impl Basic {
    pub fn tau(p: Basic) -> Basic {
        Basic::Tau(Arc::new(p))
    }

    pub fn pcc(p: Basic, f: &Focus, m: Method, q: Basic) -> Basic {
        Basic::Pcc(Arc::new(p), f.clone(), m, Arc::new(q))
    }

    pub fn prefix(f: &Focus, m: Method, p: Basic) -> Basic {
        let p = Arc::new(p);
        Basic::Pcc(p.clone(), f.clone(), m, p)
    }

    pub fn fork(p: Basic, z: Basic, q: Basic) -> Basic {
        Basic::Fork(Arc::new(p), Arc::new(z), Arc::new(q))
    }

    pub fn depth(&self) -> usize {
        match self {
            Basic::Stop | Basic::Dead => 0,
            Basic::Tau(p) => 1 + p.depth(),
            Basic::Pcc(p, _, _, q) | Basic::Restricted(_, _, p, _, q) => 1 + both(p, q, Basic::depth, usize::max),
            Basic::Fork(p, z, q) => 1 + both(p, q, Basic::depth, usize::max).max(z.depth()),
        }
    }

    /// Number of nodes of the unshared tree, saturating.
    pub fn size(&self) -> usize {
        let add = usize::saturating_add;
        match self {
            Basic::Stop | Basic::Dead => 1,
            Basic::Tau(p) => 1 + p.size(),
            Basic::Pcc(p, _, _, q) | Basic::Restricted(_, _, p, _, q) => 1 + both(p, q, Basic::size, add),
            Basic::Fork(p, z, q) => 1 + both(p, q, Basic::size, add) + z.size(),
        }
    }

    pub fn is_fork_free(&self) -> bool {
        match self {
            Basic::Stop | Basic::Dead => true,
            Basic::Tau(p) => p.is_fork_free(),
            Basic::Pcc(p, _, _, q) | Basic::Restricted(_, _, p, _, q) => {
                both(p, q, Basic::is_fork_free, |a, b| a && b)
            }
            Basic::Fork(..) => false,
        }
    }

    /// Grammar check for restricted blocks.
    pub fn well_formed(&self) -> bool {
        match self {
            Basic::Stop | Basic::Dead => true,
            Basic::Tau(p) => p.well_formed(),
            Basic::Pcc(p, _, _, q) => both(p, q, Basic::well_formed, |a, b| a && b),
            Basic::Restricted(_, spots, p, m, q) => {
                let distinct: BTreeSet<&Spot> = spots.iter().collect();
                !spots.is_empty()
                    && distinct.len() == spots.len()
                    && spots.iter().all(|s| m.mentions(s))
                    && both(p, q, Basic::well_formed, |a, b| a && b)
            }
            Basic::Fork(p, z, q) => z.well_formed() && both(p, q, Basic::well_formed, |a, b| a && b),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Basic::Stop => Term::Stop,
            Basic::Dead => Term::Dead,
            Basic::Tau(p) => Term::tau(p.to_term()),
            Basic::Pcc(p, f, m, q) => {
                let a = Action::Call(f.clone(), m.clone());
                if Arc::ptr_eq(p, q) || p == q {
                    Term::prefix(a, p.to_term())
                } else {
                    Term::pcc(p.to_term(), a, q.to_term())
                }
            }
            Basic::Restricted(f, spots, p, m, q) => {
                let a = Action::Call(f.clone(), m.clone());
                let mut t = if Arc::ptr_eq(p, q) || p == q {
                    Term::prefix(a, p.to_term())
                } else {
                    Term::pcc(p.to_term(), a, q.to_term())
                };
                for s in spots.iter().rev() {
                    t = Term::Nu(f.clone(), s.clone(), Arc::new(t));
                }
                t
            }
            Basic::Fork(p, z, q) => {
                if Arc::ptr_eq(p, q) || p == q {
                    Term::fork_prefix(z.to_term(), p.to_term())
                } else {
                    Term::fork(p.to_term(), z.to_term(), q.to_term())
                }
            }
        }
    }

    /// Free spots for every focus.
    pub fn free_spots(&self) -> BTreeMap<Focus, BTreeSet<Spot>> {
        let mut out = BTreeMap::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, scope: &mut Vec<(Focus, Spot)>, out: &mut BTreeMap<Focus, BTreeSet<Spot>>) {
        match self {
            Basic::Stop | Basic::Dead => {}
            Basic::Tau(p) => p.collect_free(scope, out),
            Basic::Pcc(p, f, m, q) => {
                for s in m.names() {
                    if !scope.iter().any(|(g, t)| g == f && *t == s) {
                        out.entry(f.clone()).or_default().insert(s);
                    }
                }
                p.collect_free(scope, out);
                if !Arc::ptr_eq(p, q) {
                    q.collect_free(scope, out);
                }
            }
            Basic::Restricted(f, spots, p, m, q) => {
                let mark = scope.len();
                scope.extend(spots.iter().map(|s| (f.clone(), s.clone())));
                for s in m.names() {
                    if !scope.iter().any(|(g, t)| g == f && *t == s) {
                        out.entry(f.clone()).or_default().insert(s);
                    }
                }
                p.collect_free(scope, out);
                if !Arc::ptr_eq(p, q) {
                    q.collect_free(scope, out);
                }
                scope.truncate(mark);
            }
            Basic::Fork(p, z, q) => {
                p.collect_free(scope, out);
                z.collect_free(scope, out);
                if !Arc::ptr_eq(p, q) {
                    q.collect_free(scope, out);
                }
            }
        }
    }

    /// Canonical representative modulo renaming and reordering of restricted spots.
    pub fn canon(&self) -> Basic {
        self.canon_avoiding(&self.free_spots())
    }

    /// Canonical form whose generated names avoid the given free spots.
    pub fn canon_avoiding(&self, free: &BTreeMap<Focus, BTreeSet<Spot>>) -> Basic {
        let mut cx = Canon { free, env: Vec::new(), level: BTreeMap::new() };
        cx.run(self)
    }
}

/// Combines `g` over both operands, visiting a shared operand once.
fn both<T: Copy>(p: &Arc<Basic>, q: &Arc<Basic>, g: impl Fn(&Basic) -> T, join: impl Fn(T, T) -> T) -> T {
    let a = g(p);
    if Arc::ptr_eq(p, q) {
        join(a, a)
    } else {
        join(a, g(q))
    }
}

struct Canon<'a> {
    free: &'a BTreeMap<Focus, BTreeSet<Spot>>,
    env: Vec<(Focus, Spot, Spot)>,
    level: BTreeMap<Focus, usize>,
}

impl Canon<'_> {
    fn rename(&self, f: &Focus, m: &Method) -> Method {
        m.map_spots(|s| {
            self.env
                .iter()
                .rev()
                .find(|(g, old, _)| g == f && old == s)
                .map_or_else(|| s.clone(), |(_, _, new)| new.clone())
        })
    }

    fn run(&mut self, b: &Basic) -> Basic {
        match b {
            Basic::Stop | Basic::Dead => b.clone(),
            Basic::Tau(p) => Basic::Tau(Arc::new(self.run(p))),
            Basic::Pcc(p, f, m, q) => {
                let m2 = self.rename(f, m);
                let p2 = Arc::new(self.run(p));
                let q2 = if Arc::ptr_eq(p, q) { p2.clone() } else { Arc::new(self.run(q)) };
                Basic::Pcc(p2, f.clone(), m2, q2)
            }
            Basic::Restricted(f, spots, p, m, q) => {
                let order: Vec<Spot> = m.names().into_iter().filter(|s| spots.contains(s)).collect();
                let saved_level = self.level.get(f).copied().unwrap_or(0);
                let mut k = saved_level;
                let mark = self.env.len();
                let mut new_spots = Vec::with_capacity(order.len());
                let empty = BTreeSet::new();
                let avoid = self.free.get(f).unwrap_or(&empty);
                for s in &order {
                    let name = loop {
                        let cand = Spot::new(&format!("{SPOT_PREFIX}{k}"));
                        k += 1;
                        if !avoid.contains(&cand) {
                            break cand;
                        }
                    };
                    self.env.push((f.clone(), s.clone(), name.clone()));
                    new_spots.push(name);
                }
                self.level.insert(f.clone(), k);
                let m2 = self.rename(f, m);
                let p2 = Arc::new(self.run(p));
                let q2 = if Arc::ptr_eq(p, q) { p2.clone() } else { Arc::new(self.run(q)) };
                self.env.truncate(mark);
                self.level.insert(f.clone(), saved_level);
                Basic::Restricted(f.clone(), new_spots, p2, m2, q2)
            }
            Basic::Fork(p, z, q) => {
                let p2 = Arc::new(self.run(p));
                let z2 = Arc::new(self.run(z));
                let q2 = if Arc::ptr_eq(p, q) { p2.clone() } else { Arc::new(self.run(q)) };
                Basic::Fork(p2, z2, q2)
            }
        }
    }
}

/// Syntactic equality modulo alpha-conversion and reordering of restrictions.
pub fn basic_eq(p: &Basic, q: &Basic) -> bool {
    if p == q {
        return true;
    }
    let free = merged_free(p, q);
    p.canon_avoiding(&free) == q.canon_avoiding(&free)
}

pub(crate) fn merged_free(p: &Basic, q: &Basic) -> BTreeMap<Focus, BTreeSet<Spot>> {
    let mut free = p.free_spots();
    for (f, s) in q.free_spots() {
        free.entry(f).or_default().extend(s);
    }
    free
}

impl fmt::Display for Basic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}
