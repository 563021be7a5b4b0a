//! Molecular dynamics services: spots naming atoms, atoms carrying fields.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::service::{Reply, Service};
use crate::term::{Field, MdMethod, Method, Spot};

/// Atoms are numbered in allocation order, starting at 1.
pub type AtomId = u32;

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Live {
    /// Defined spots only; absent spots are undefined.
    pub sigma: BTreeMap<Spot, AtomId>,
    pub alpha: BTreeMap<AtomId, BTreeMap<Field, Option<AtomId>>>,
    /// `None` means unbounded.
    pub capacity: Option<u32>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MdState {
    Live(Live),
    Undef,
}

impl MdState {
    pub fn empty(capacity: Option<u32>) -> MdState {
        MdState::Live(Live { capacity, ..Live::default() })
    }

    pub fn is_undef(&self) -> bool {
        matches!(self, MdState::Undef)
    }

    pub fn spot(&self, s: &Spot) -> Option<AtomId> {
        match self {
            MdState::Live(l) => l.sigma.get(s).copied(),
            MdState::Undef => None,
        }
    }

    /// Ranges of spots and fields lie within the allocated atoms, which are 1..=n.
    pub fn invariants_hold(&self) -> bool {
        match self {
            MdState::Undef => true,
            MdState::Live(l) => {
                let dom: BTreeSet<AtomId> = l.alpha.keys().copied().collect();
                let initial_segment = dom.iter().copied().eq(1..=dom.len() as AtomId);
                let spots_ok = l.sigma.values().all(|a| dom.contains(a));
                let fields_ok = l.alpha.values().flat_map(|fs| fs.values()).all(|v| match v {
                    Some(a) => dom.contains(a),
                    None => true,
                });
                let cap_ok = l.capacity.is_none_or(|c| dom.len() as u64 <= c as u64);
                initial_segment && spots_ok && fields_ok && cap_ok
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            MdState::Undef => json!({ "spots": {}, "atoms": {}, "undef": true, "capacity": null }),
            MdState::Live(l) => {
                let atom = |a: &AtomId| Value::String(format!("a{a}"));
                let spots: Map<String, Value> =
                    l.sigma.iter().map(|(s, a)| (s.to_string(), atom(a))).collect();
                let atoms: Map<String, Value> = l
                    .alpha
                    .iter()
                    .map(|(a, fs)| {
                        let fields: Map<String, Value> = fs
                            .iter()
                            .map(|(v, t)| (v.to_string(), t.as_ref().map_or(Value::Null, atom)))
                            .collect();
                        (format!("a{a}"), Value::Object(fields))
                    })
                    .collect();
                json!({
                    "spots": spots,
                    "atoms": atoms,
                    "undef": false,
                    "capacity": l.capacity,
                })
            }
        }
    }

    pub fn dump(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("state serializes")
    }

    pub fn from_json(v: &Value) -> Option<MdState> {
        if v.get("undef")?.as_bool()? {
            return Some(MdState::Undef);
        }
        let atom = |v: &Value| -> Option<AtomId> { v.as_str()?.strip_prefix('a')?.parse().ok() };
        let mut live = Live { capacity: v.get("capacity")?.as_u64().map(|c| c as u32), ..Live::default() };
        for (s, a) in v.get("spots")?.as_object()? {
            if !a.is_null() {
                live.sigma.insert(Spot::new(s), atom(a)?);
            }
        }
        for (a, fs) in v.get("atoms")?.as_object()? {
            let id = atom(&Value::String(a.clone()))?;
            let mut fields = BTreeMap::new();
            for (name, t) in fs.as_object()? {
                let t = if t.is_null() { None } else { Some(atom(t)?) };
                fields.insert(Field::new(name), t);
            }
            live.alpha.insert(id, fields);
        }
        let st = MdState::Live(live);
        st.invariants_hold().then_some(st)
    }
}

/// The next atom after the highest allocated one, if capacity allows.
pub fn newatom(existing: &BTreeSet<AtomId>, capacity: Option<u32>) -> Option<AtomId> {
    let m = existing.iter().next_back().copied().unwrap_or(0);
    match capacity {
        Some(c) if m >= c => None,
        _ => Some(m + 1),
    }
}

/// Effect and yield of one method.
pub fn md_apply(state: &MdState, m: &Method) -> (MdState, Reply) {
    let live = match state {
        MdState::Undef => return (MdState::Undef, Reply::Refused),
        MdState::Live(l) => l,
    };
    let m = match m {
        Method::Opaque(_) => return (MdState::Undef, Reply::Refused),
        Method::Md(m) => m,
    };
    let mut next = live.clone();
    let reply = step(&mut next, m);
    (MdState::Live(next), reply)
}

fn bool_reply(b: bool) -> Reply {
    if b {
        Reply::T
    } else {
        Reply::F
    }
}

fn step(l: &mut Live, m: &MdMethod) -> Reply {
    match m {
        MdMethod::Creatom(s) => {
            let dom: BTreeSet<AtomId> = l.alpha.keys().copied().collect();
            match newatom(&dom, l.capacity) {
                Some(a) => {
                    l.sigma.insert(s.clone(), a);
                    l.alpha.insert(a, BTreeMap::new());
                    Reply::T
                }
                None => Reply::F,
            }
        }
        MdMethod::Setspot(s, t) => {
            match l.sigma.get(t).copied() {
                Some(a) => l.sigma.insert(s.clone(), a),
                None => l.sigma.remove(s),
            };
            Reply::T
        }
        MdMethod::Clrspot(s) => {
            l.sigma.remove(s);
            Reply::T
        }
        MdMethod::Equaltst(s, t) => bool_reply(l.sigma.get(s) == l.sigma.get(t)),
        MdMethod::Undeftst(s) => bool_reply(!l.sigma.contains_key(s)),
        MdMethod::Addfield(s, v) => match l.sigma.get(s) {
            Some(a) => {
                let fields = l.alpha.get_mut(a).expect("spot names an atom");
                if fields.contains_key(v) {
                    Reply::F
                } else {
                    fields.insert(v.clone(), None);
                    Reply::T
                }
            }
            None => Reply::F,
        },
        MdMethod::Rmvfield(s, v) => match l.sigma.get(s) {
            Some(a) => bool_reply(l.alpha.get_mut(a).expect("spot names an atom").remove(v).is_some()),
            None => Reply::F,
        },
        MdMethod::Hasfield(s, v) => {
            bool_reply(l.sigma.get(s).is_some_and(|a| l.alpha[a].contains_key(v)))
        }
        MdMethod::Setfield(s, v, t) => {
            let target = l.sigma.get(t).copied();
            match l.sigma.get(s) {
                Some(a) => match l.alpha.get_mut(a).expect("spot names an atom").get_mut(v) {
                    Some(slot) => {
                        *slot = target;
                        Reply::T
                    }
                    None => Reply::F,
                },
                None => Reply::F,
            }
        }
        MdMethod::Getfield(s, t, v) => match l.sigma.get(t).and_then(|a| l.alpha[a].get(v)) {
            Some(val) => {
                match val {
                    Some(a) => l.sigma.insert(s.clone(), *a),
                    None => l.sigma.remove(s),
                };
                Reply::T
            }
            None => Reply::F,
        },
    }
}

/// Structural isomorphism up to renaming of atoms. Capacity is ignored.
pub fn state_iso(a: &MdState, b: &MdState) -> bool {
    match (a, b) {
        (MdState::Undef, MdState::Undef) => true,
        (MdState::Live(x), MdState::Live(y)) => {
            if x.alpha.len() != y.alpha.len() {
                return false;
            }
            let (fx, reached_x) = anchored_form(x);
            let (fy, reached_y) = anchored_form(y);
            fx == fy && unreached_forms(x, &reached_x) == unreached_forms(y, &reached_y)
        }
        _ => false,
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Target {
    Undefined,
    Local(usize),
    Anchored(usize),
}

type Form = Vec<(usize, Vec<(Field, Target)>)>;

/// Spot anchors and reachable atom shapes, keyed by discovery order.
type Anchored = ((Vec<(Spot, usize)>, Form), BTreeMap<AtomId, usize>);

/// Breadth-first labelling from `roots`, following fields in name order.
/// Atoms labelled in `anchored` are referenced but not entered.
fn label_from(
    l: &Live,
    roots: &[AtomId],
    labels: &mut BTreeMap<AtomId, usize>,
    anchored: &BTreeMap<AtomId, usize>,
) -> Form {
    let mut order: Vec<AtomId> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let visit = |a: AtomId, labels: &mut BTreeMap<AtomId, usize>, order: &mut Vec<AtomId>, queue: &mut std::collections::VecDeque<AtomId>| {
        if !labels.contains_key(&a) && !anchored.contains_key(&a) {
            labels.insert(a, labels.len());
            order.push(a);
            queue.push_back(a);
        }
    };
    for r in roots {
        visit(*r, labels, &mut order, &mut queue);
    }
    while let Some(a) = queue.pop_front() {
        for t in l.alpha[&a].values().flatten() {
            visit(*t, labels, &mut order, &mut queue);
        }
    }
    order
        .iter()
        .map(|a| {
            let fields = l.alpha[a]
                .iter()
                .map(|(v, t)| {
                    let t = match t {
                        None => Target::Undefined,
                        Some(t) => match anchored.get(t) {
                            Some(n) => Target::Anchored(*n),
                            None => Target::Local(labels[t]),
                        },
                    };
                    (v.clone(), t)
                })
                .collect();
            (labels[a], fields)
        })
        .collect()
}

fn anchored_form(l: &Live) -> Anchored {
    let mut labels = BTreeMap::new();
    let none = BTreeMap::new();
    let mut form = Vec::new();
    let mut spots = Vec::new();
    for (s, a) in &l.sigma {
        form.extend(label_from(l, &[*a], &mut labels, &none));
        spots.push((s.clone(), labels[a]));
    }
    ((spots, form), labels)
}

/// Sorted rooted forms of the atoms no spot reaches.
fn unreached_forms(l: &Live, anchored: &BTreeMap<AtomId, usize>) -> Vec<Form> {
    let mut forms: Vec<Form> = l
        .alpha
        .keys()
        .filter(|a| !anchored.contains_key(a))
        .map(|a| label_from(l, &[*a], &mut BTreeMap::new(), anchored))
        .collect();
    forms.sort();
    forms
}

/// A molecular dynamics service in a given state.
#[derive(Clone, Debug)]
pub struct MdService {
    pub state: MdState,
}

impl MdService {
    pub fn empty(capacity: Option<u32>) -> Self {
        MdService { state: MdState::empty(capacity) }
    }

    pub fn with_state(state: MdState) -> Self {
        MdService { state }
    }
}

impl Service for MdService {
    fn query(&self, m: &Method) -> Reply {
        md_apply(&self.state, m).1
    }

    fn derive(&self, m: &Method) -> Arc<dyn Service> {
        Arc::new(MdService { state: md_apply(&self.state, m).0 })
    }

    fn state_key(&self) -> Option<String> {
        Some(self.state.to_json().to_string())
    }

    fn label(&self) -> String {
        "md".to_string()
    }

    fn defined_spots(&self) -> Option<usize> {
        match &self.state {
            MdState::Live(l) => Some(l.sigma.len()),
            MdState::Undef => Some(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(m: MdMethod) -> Method {
        Method::Md(m)
    }

    #[test]
    fn creatom_on_empty_state() {
        let (st, r) = md_apply(&MdState::empty(Some(1)), &md(MdMethod::Creatom("s".into())));
        assert_eq!(r, Reply::T);
        assert_eq!(st.spot(&"s".into()), Some(1));
        match &st {
            MdState::Live(l) => assert!(l.alpha[&1].is_empty()),
            _ => unreachable!(),
        }
        let (st2, r2) = md_apply(&st, &md(MdMethod::Creatom("t".into())));
        assert_eq!(r2, Reply::F);
        assert_eq!(st2, st);
    }

    #[test]
    fn equaltst_reflexive_and_addfield_on_undefined() {
        let st = MdState::empty(None);
        assert_eq!(md_apply(&st, &md(MdMethod::Equaltst("s".into(), "s".into()))), (st.clone(), Reply::T));
        assert_eq!(md_apply(&st, &md(MdMethod::Addfield("s".into(), "v".into()))), (st.clone(), Reply::F));
    }

    #[test]
    fn opaque_drives_to_undef() {
        assert_eq!(md_apply(&MdState::empty(None), &Method::opaque("ping")), (MdState::Undef, Reply::Refused));
        assert_eq!(md_apply(&MdState::Undef, &md(MdMethod::Clrspot("s".into()))), (MdState::Undef, Reply::Refused));
    }

    #[test]
    fn newatom_allocation() {
        assert_eq!(newatom(&BTreeSet::new(), Some(3)), Some(1));
        assert_eq!(newatom(&[1, 2, 3].into_iter().collect(), Some(3)), None);
        assert_eq!(newatom(&[1].into_iter().collect(), None), Some(2));
    }

    #[test]
    fn field_transfer_directions() {
        let mut st = MdState::empty(None);
        for m in [
            MdMethod::Creatom("s".into()),
            MdMethod::Creatom("t".into()),
            MdMethod::Addfield("s".into(), "v".into()),
            MdMethod::Setfield("s".into(), "v".into(), "t".into()),
            MdMethod::Getfield("u".into(), "s".into(), "v".into()),
        ] {
            let (n, r) = md_apply(&st, &md(m));
            assert_eq!(r, Reply::T);
            st = n;
        }
        assert_eq!(st.spot(&"u".into()), Some(2));
        let (st, r) = md_apply(&st, &md(MdMethod::Setspot("w".into(), "u".into())));
        assert_eq!(r, Reply::T);
        assert_eq!(st.spot(&"w".into()), Some(2));
    }

    #[test]
    fn json_round_trip() {
        let mut st = MdState::empty(Some(4));
        for m in [
            MdMethod::Creatom("s".into()),
            MdMethod::Addfield("s".into(), "v".into()),
        ] {
            st = md_apply(&st, &md(m)).0;
        }
        assert_eq!(MdState::from_json(&st.to_json()), Some(st));
    }

    fn chain(order: [AtomId; 3], cyclic: bool) -> MdState {
        let mut l = Live::default();
        for a in order {
            l.alpha.insert(a, BTreeMap::new());
        }
        l.sigma.insert("r".into(), order[0]);
        let up = Field::new("up");
        l.alpha.get_mut(&order[0]).unwrap().insert(up.clone(), Some(order[1]));
        l.alpha.get_mut(&order[1]).unwrap().insert(up.clone(), Some(order[2]));
        l.alpha.get_mut(&order[2]).unwrap().insert(up, cyclic.then_some(order[0]));
        MdState::Live(l)
    }

    #[test]
    fn isomorphism() {
        assert!(state_iso(&chain([1, 2, 3], false), &chain([3, 2, 1], false)));
        assert!(!state_iso(&chain([1, 2, 3], false), &chain([1, 2, 3], true)));
        assert!(state_iso(&MdState::Undef, &MdState::Undef));
    }

    #[test]
    fn unreached_atoms_count() {
        let mut a = Live::default();
        a.alpha.insert(1, BTreeMap::new());
        a.alpha.insert(2, BTreeMap::from([(Field::new("v"), Some(1))]));
        let mut b = Live::default();
        b.alpha.insert(1, BTreeMap::from([(Field::new("v"), Some(2))]));
        b.alpha.insert(2, BTreeMap::new());
        assert!(state_iso(&MdState::Live(a.clone()), &MdState::Live(b)));
        let mut c = Live::default();
        c.alpha.insert(1, BTreeMap::new());
        c.alpha.insert(2, BTreeMap::new());
        assert!(!state_iso(&MdState::Live(a), &MdState::Live(c)));
    }
}
