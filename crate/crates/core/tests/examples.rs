//! Worked examples for each module, checked through the public API.

use std::collections::BTreeSet;

use tcalc::engine::{first_level_normalize, normalize_traced};
use tcalc::env::env_reply;
use tcalc::md::{md_apply, newatom, state_iso, MdService, MdState};
use tcalc::names::{name_analysis, subst_spot, subst_var, Fresh};
use tcalc::pgldf::{
    beh_eq_up_to, desugar_forks, eliminate_jump_chains, extract, extract_collapsed, parse_program,
};
use tcalc::projective::{
    aip_refute, approx_leq, distance, embed, eq_up_to, fix_approx, stabilization_index,
};
use tcalc::run::{run, RunConfig};
use tcalc::service::{regular_check, Regularity};
use tcalc::spec::{seen_before_service, threshold_service};
use tcalc::term::{Field, MdMethod};
use tcalc::{
    basic_eq, guarded_in, guarded_term, normalize, parse_method, parse_term, Basic, Dyadic, Engine, EngineError,
    EnvError, Environment, Focus, Instruction, Method, Mode, Outcome, Refutation, Registry, Reply, ServiceHandle,
    Spot, Term, Var,
};

fn t(src: &str) -> Term {
    parse_term(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

fn b(src: &str) -> Basic {
    normalize(&t(src), &Registry::new()).unwrap()
}

fn spots(names: &[&str]) -> BTreeSet<Spot> {
    names.iter().map(|s| Spot::new(s)).collect()
}

fn f() -> Focus {
    Focus::new("f")
}

mod names {
    use super::*;

    #[test]
    fn free_and_bound_spots() {
        assert_eq!(name_analysis(&Term::Stop, &f()), (spots(&[]), spots(&[])));
        assert_eq!(name_analysis(&t("S <f(setspot s s')> S"), &f()), (spots(&["s", "s'"]), spots(&[])));
        assert_eq!(name_analysis(&t("nu(f, s, f(clrspot s) . S)"), &f()), (spots(&[]), spots(&["s"])));
        assert_eq!(name_analysis(&t("nu(g, s, f(clrspot s) . S)"), &f()), (spots(&["s"]), spots(&[])));
    }

    #[test]
    fn spot_substitution() {
        let mut fresh = Fresh::new();
        let (s, s2) = (Spot::new("s"), Spot::new("s'"));
        let got = subst_spot(&t("f(clrspot s) . S"), &f(), &s, &s2, &mut fresh);
        assert_eq!(got, t("f(clrspot s') . S"));
        let bound = t("nu(f, s, f(clrspot s) . S)");
        assert_eq!(subst_spot(&bound, &f(), &s, &s2, &mut fresh), bound);

        let capture = t("nu(f, s', f(setspot s s') . S)");
        let got = subst_spot(&capture, &f(), &s, &s2, &mut fresh);
        let Term::Nu(_, binder, _) = &got else { panic!("{got}") };
        assert_ne!(binder, &s2);
        assert_eq!(name_analysis(&got, &f()).0, spots(&["s'"]));
    }

    #[test]
    fn variable_substitution() {
        let mut fresh = Fresh::new();
        let x = Var::new("x");
        assert_eq!(subst_var(&Term::var("x"), &x, &Term::Stop, &mut fresh), Term::Stop);
        let closed = t("fix x . f.a . x");
        assert_eq!(subst_var(&closed, &x, &Term::Stop, &mut fresh), closed);
        assert_eq!(subst_var(&t("f.a . x"), &x, &closed, &mut fresh), t("f.a . fix x . f.a . x"));
    }

    #[test]
    fn guardedness() {
        let x = Var::new("x");
        assert!(guarded_in(&x, &t("x <f.a> x")));
        assert!(!guarded_in(&x, &t("x")));
        assert!(!guarded_in(&x, &t("csi[x]")));
        assert!(guarded_in(&x, &t("S <nt(x)> S")));
        assert!(guarded_term(&t("x <f.a> y")));
        assert!(!guarded_term(&t("x")));
        assert!(guarded_term(&t("csi[x <f.a> x]")));
    }
}

mod basic_terms {
    use super::*;

    #[test]
    fn equality_modulo_renaming_and_reordering() {
        assert!(basic_eq(&b("nu(f, s, S <f(clrspot s)> D)"), &b("nu(f, s', S <f(clrspot s')> D)")));
        let x = "S <f(setspot s s')> D";
        let p = b(&format!("nu(f, s, nu(f, s', {x}))"));
        let q = b(&format!("nu(f, s', nu(f, s, {x}))"));
        assert!(basic_eq(&p, &q));
        assert!(!basic_eq(&Basic::Stop, &Basic::Dead));
    }

    #[test]
    fn depth() {
        assert_eq!(Basic::Stop.depth(), 0);
        assert_eq!(b("tau . tau . S").depth(), 2);
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let p = b("nu(md, r, md(creatom r) . nu(md, q, md(setspot q r) . S))");
        assert_eq!(p.canon().canon(), p.canon());
    }
}

mod engine {
    use super::*;

    #[test]
    fn deadlock_at_termination() {
        assert_eq!(b("s2d(S)"), Basic::Dead);
    }

    #[test]
    fn first_level() {
        let r = Registry::new();
        let h = first_level_normalize(&t("fix x . f.a . x"), &r).unwrap();
        let fix = t("fix x . f.a . x");
        assert_eq!(h.to_term(), Term::prefix(tcalc::parse_action("f.a").unwrap(), fix));
        assert_eq!(first_level_normalize(&t("fix x . x"), &r).unwrap().to_term(), Term::Dead);
        assert_eq!(first_level_normalize(&t("csi[]"), &r).unwrap().to_term(), Term::Stop);
    }

    #[test]
    fn projection() {
        let mut e = Engine::default();
        for src in ["S", "D", "fix x . f.a . x", "csi[f.a . S, g.b . S]"] {
            assert_eq!(e.proj_normalize(0, &t(src)).unwrap(), Basic::Dead);
        }
        assert!(basic_eq(&e.proj_normalize(2, &t("fix x . f.a . x")).unwrap(), &b("f.a . f.a . D")));
        let got = e.proj_normalize(1, &t("nu(f, s, S <f(clrspot s)> D)")).unwrap();
        assert!(basic_eq(&got, &b("nu(f, s, D <f(clrspot s)> D)")));
    }

    #[test]
    fn traces() {
        let r = Registry::new();
        let (_, tr) = normalize_traced(&t("(tau . S) <tau> D"), Mode::Normalize, &r).unwrap();
        assert_eq!(tr.labels()[0], "T1");
        assert!(tr.chains());

        let (_, tr) = normalize_traced(&t("csi[D]"), Mode::Normalize, &r).unwrap();
        let labels = tr.labels();
        let csi3 = labels.iter().position(|l| *l == "CSI3").unwrap();
        let csi1 = labels.iter().position(|l| *l == "CSI1").unwrap();
        let s2d = labels.iter().position(|l| l.starts_with("S2D")).unwrap();
        assert!(csi3 < csi1 && csi1 < s2d, "{labels:?}");
        for line in tr.to_string().lines() {
            assert!(line.contains(": ") && line.contains(" ==> "), "{line}");
        }

        let (_, tr) = normalize_traced(&Term::Stop, Mode::Normalize, &r).unwrap();
        assert!(tr.labels().is_empty());
    }

    #[test]
    fn named_services() {
        let h = threshold_service(parse_method("m").unwrap(), 3, "H");
        let r = Registry::new().with("H", h);
        let got = normalize(&t("use(fix x . (f'.m' . S) <f.m> x, f, H)"), &r).unwrap();
        assert_eq!(got.to_string(), "tau . tau . tau . tau . tau . f'.m' . S");
        let missing = normalize(&t("use(f.m . S, f, Nope)"), &Registry::new());
        assert!(matches!(missing, Err(EngineError::ServiceUnresolvable(_))));
    }

    #[test]
    fn restriction_raised_out_of_the_md_service() {
        let r = Registry::new();
        let got = normalize(&t("use(nu(md, s, md(creatom s) . (S <md(undeftst s)> D)), md, md)"), &r).unwrap();
        assert!(basic_eq(&got, &b("tau . tau . D")), "{got}");
    }
}

mod services {
    use super::*;

    fn md(m: &str) -> Method {
        parse_method(m).unwrap()
    }

    #[test]
    fn md_methods() {
        let (st, r) = md_apply(&MdState::empty(Some(3)), &md("creatom s"));
        assert_eq!(r, Reply::T);
        assert_eq!(st.spot(&Spot::new("s")), Some(1));
        let (same, r) = md_apply(&st, &md("equaltst s s"));
        assert_eq!((same, r), (st.clone(), Reply::T));
        let empty = MdState::empty(None);
        assert_eq!(md_apply(&empty, &md("addfield s v")), (empty.clone(), Reply::F));
        assert_eq!(md_apply(&st, &Method::opaque("ping")), (MdState::Undef, Reply::Refused));
    }

    #[test]
    fn atom_allocation() {
        assert_eq!(newatom(&BTreeSet::new(), Some(3)), Some(1));
        assert_eq!(newatom(&[1, 2, 3].into(), Some(3)), None);
        assert_eq!(newatom(&[1].into(), None), Some(2));
    }

    #[test]
    fn services_from_specs() {
        let h = ServiceHandle::new(MdService::empty(None));
        assert_eq!(h.query(&md("undeftst s")), Reply::T);
        let h = seen_before_service(md("m"), md("m'"), "H");
        assert_eq!(h.query(&md("m")), Reply::F);
        let poisoned = h.derive(&md("m''"));
        for m in ["m", "m'", "m''"] {
            assert_eq!(poisoned.query(&md(m)), Reply::Refused);
            assert_eq!(poisoned.derive(&md(m)).query(&md("m'")), Reply::Refused);
        }
    }

    #[test]
    fn regularity() {
        let ms = [md("m"), md("m'"), md("m''")];
        let h = seen_before_service(md("m"), md("m'"), "H");
        assert_eq!(regular_check(&h, &ms, 100), Regularity::Regular(3));
        let h = threshold_service(md("m"), 3, "H");
        assert_eq!(regular_check(&h, &ms, 100), Regularity::Regular(6));
        let all: Vec<Method> = [
            "creatom s", "setspot s s", "clrspot s", "equaltst s s", "undeftst s", "addfield s v", "rmvfield s v",
            "hasfield s v", "setfield s v s", "getfield s s v",
        ]
        .map(md)
        .to_vec();
        let h = ServiceHandle::new(MdService::empty(Some(1)));
        assert!(matches!(regular_check(&h, &all, 1000), Regularity::Regular(_)));
    }

    fn chain(order: [u32; 4]) -> MdState {
        let a = |i: usize| format!("a{}", order[i]);
        MdState::from_json(&serde_json::json!({
            "undef": false, "capacity": null,
            "spots": { "r": a(0), "s": a(2), "t": a(3) },
            "atoms": {
                a(0): { "up": a(1) },
                a(1): { "up": a(2), "dn": a(0) },
                a(2): { "up": a(3), "dn": a(1) },
                a(3): { "dn": a(2) },
            },
        }))
        .unwrap()
    }

    #[test]
    fn isomorphism() {
        let x = chain([1, 2, 3, 4]);
        assert!(state_iso(&x, &x));
        assert!(state_iso(&x, &chain([4, 3, 2, 1])));
        let cycle = MdState::from_json(&serde_json::json!({
            "undef": false, "capacity": null,
            "spots": { "r": "a1", "s": "a3", "t": "a4" },
            "atoms": {
                "a1": { "up": "a2", "dn": "a4" },
                "a2": { "up": "a3", "dn": "a1" },
                "a3": { "up": "a4", "dn": "a2" },
                "a4": { "up": "a1", "dn": "a3" },
            },
        }))
        .unwrap();
        assert!(!state_iso(&x, &cycle));
    }

    #[test]
    fn environments() {
        let a = tcalc::parse_action("f.m").unwrap();
        assert_eq!(env_reply(&Environment::AllTrue, &a).unwrap().0, Reply::T);
        let env = Environment::parse_script("f.m F").unwrap();
        let (r, next) = env_reply(&env, &a).unwrap();
        assert_eq!(r, Reply::F);
        assert!(matches!(env_reply(&next, &a), Err(EnvError::ScriptExhausted(_))));
        let env = Environment::parse_table("g.m F").unwrap();
        assert!(matches!(env_reply(&env, &a), Err(EnvError::TableMiss(_))));
    }
}

mod projective {
    use super::*;

    fn entries(src: &[&str]) -> Vec<Basic> {
        src.iter().map(|s| b(s)).collect()
    }

    #[test]
    fn embedding() {
        let mut e = Engine::default();
        assert_eq!(embed(&mut e, &Term::Stop, 2).unwrap().entries(), entries(&["D", "S", "S"]).as_slice());
        let got = embed(&mut e, &t("fix x . f.a . x"), 3).unwrap();
        assert_eq!(got.entries(), entries(&["D", "f.a . D", "f.a . f.a . D", "f.a . f.a . f.a . D"]).as_slice());
        assert!(embed(&mut e, &Term::Dead, 5).unwrap().entries().iter().all(|p| *p == Basic::Dead));
        assert_eq!(got.to_string().lines().nth(1), Some("1: f.a . D"));
    }

    #[test]
    fn distances() {
        let mut e = Engine::default();
        let mut d = |p: &str, q: &str| {
            let (p, q) = (embed(&mut e, &t(p), 8).unwrap(), embed(&mut e, &t(q), 8).unwrap());
            distance(&p, &q)
        };
        assert_eq!(d("S", "D"), Dyadic::Pow(1));
        assert_eq!(d("f.a . S", "f.a . S"), Dyadic::BelowResolution);
        assert_eq!(d("f.a . S", "f.a . D"), Dyadic::Pow(2));
        assert!(Dyadic::BelowResolution < Dyadic::Pow(40));
        assert_eq!(Dyadic::Pow(1).to_string(), "2^-1");
    }

    #[test]
    fn fixed_point_approximation() {
        let mut e = Engine::default();
        let x = Var::new("x");
        let got = fix_approx(&mut e, &x, &t("tau . x"), 3).unwrap();
        assert_eq!(got.entries(), entries(&["D", "tau . D", "tau . tau . D", "tau . tau . tau . D"]).as_slice());
        let got = fix_approx(&mut e, &x, &t("x"), 6).unwrap();
        assert!(got.entries().iter().all(|p| *p == Basic::Dead));
    }

    #[test]
    fn stabilization() {
        let mut e = Engine::default();
        let x = Var::new("x");
        assert_eq!(stabilization_index(&mut e, &x, &t("f.a . x"), 3).unwrap(), 3);
        assert_eq!(stabilization_index(&mut e, &x, &t("S"), 0).unwrap(), 0);
        for n in 1..5 {
            assert_eq!(stabilization_index(&mut e, &x, &t("S"), n).unwrap(), 1);
        }
        assert_eq!(stabilization_index(&mut e, &x, &t("S <f.a> S"), 0).unwrap(), 0);
    }

    #[test]
    fn equality_and_refutation() {
        assert!(eq_up_to(0, &t("S"), &t("f.a . D")).unwrap());
        for n in 0..10 {
            assert!(eq_up_to(n, &t("fix x . f.a . x"), &t("f.a . fix x . f.a . x")).unwrap());
        }
        assert!(!eq_up_to(1, &Term::Stop, &Term::Dead).unwrap());
        assert_eq!(aip_refute(&Term::Stop, &Term::Dead, 8).unwrap(), Refutation::NotEqualAt(1));
        assert_eq!(
            aip_refute(&t("fix x . f.a . x"), &t("fix y . f.a . y"), 32).unwrap(),
            Refutation::UndistinguishedUpTo(32)
        );
        let a5 = t("f.a . f.a . f.a . f.a . f.a . D");
        assert_eq!(aip_refute(&t("fix x . f.a . x"), &a5, 32).unwrap(), Refutation::NotEqualAt(6));
    }

    #[test]
    fn approximation_order() {
        for p in ["S", "D", "tau . S", "S <f.a> D", "nu(md, s, S <md(clrspot s)> D)"] {
            assert!(approx_leq(&Basic::Dead, &b(p)));
            assert!(approx_leq(&b(p), &b(p)));
        }
        assert!(approx_leq(&b("tau . D"), &b("tau . S")));
        assert!(!approx_leq(&b("tau . S"), &b("tau . D")));
        assert!(!approx_leq(&b("S"), &b("D")));
    }
}

mod programs {
    use super::*;

    fn prog(src: &str) -> tcalc::Program {
        parse_program(src).unwrap()
    }

    #[test]
    fn parsing() {
        let fm = tcalc::parse_action("f.m").unwrap();
        let gm = tcalc::parse_action("g.m").unwrap();
        assert_eq!(prog("f.m").instructions, [Instruction::Basic(fm.clone())]);
        assert_eq!(prog("+f.m\njmp 1").instructions, [Instruction::PosTest(fm.clone()), Instruction::Jump(1)]);
        assert_eq!(
            prog("fork s 3\nf.m\ng.m").instructions,
            [Instruction::Fork(Spot::new("s"), 3), Instruction::Basic(fm), Instruction::Basic(gm)]
        );
        let err = parse_program("f.m\nbogus instruction").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn extraction() {
        assert_eq!(extract(&prog("jmp 5")), Term::csi(vec![Term::Stop]));
        assert_eq!(extract_collapsed(&prog("jmp 1")), Term::Dead);
        assert_eq!(extract_collapsed(&prog("f.m")), t("f.m . S"));
        let got = extract(&prog("+f.m\njmp 1\ng.m"));
        let Term::Csi(ts) = &got else { panic!("{got}") };
        let Term::Fix(x, _) = &ts[0] else { panic!("{got}") };
        let body = Term::pcc(Term::Var(x.clone()), tcalc::parse_action("f.m").unwrap(), t("g.m . S"));
        let want = Term::csi(vec![Term::Fix(x.clone(), body.into())]);
        assert_eq!(got, want);
    }

    #[test]
    fn fork_expansion() {
        let il = desugar_forks(&t("ntil(s, s', S) . S")).unwrap();
        assert_eq!(il, t("nu(md, s, md(creatom s) . md(setspot s' s) . nt(S) . S)"));
        let java = desugar_forks(&t("ntjava(s, g.a . S) . md(addfield s acti) . S")).unwrap();
        let gate = Term::fix("x$gate", Term::pcc(t("g.a . S"), tcalc::parse_action("md(hasfield s acti)").unwrap(), Term::var("x$gate")));
        let start = t("md(addfield s acti) . S");
        let want = t("nu(md, this, md(creatom this) . md(setspot s this) . HOLE)");
        let want = tcalc::names::subst_var(&want, &Var::new("HOLE"), &Term::fork_prefix(gate, start), &mut Fresh::new());
        assert_eq!(java, want);
        let bad = desugar_forks(&t("ntjava(s, S) . md(clrspot this) . S"));
        assert!(matches!(bad, Err(EngineError::SideConditionViolated(_))));
    }

    #[test]
    fn chain_elimination() {
        let got = eliminate_jump_chains(&prog("jmp 2\njmp 3\nf.m"));
        assert_eq!(got, prog("jmp 3\njmp 3\nf.m"));
        let got = eliminate_jump_chains(&prog("jmp 2\njmp 1"));
        assert_eq!(got, prog("jmp 1\njmp 2"));
        assert_eq!(eliminate_jump_chains(&prog("f.m")), prog("f.m"));
    }

    #[test]
    fn execution() {
        let r = run(&prog("jmp 1"), Environment::AllTrue, &RunConfig::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Deadlocked);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn behavioural_equivalence() {
        let mut e = Engine::default();
        let (p, q) = (prog("f.m"), prog("g.m"));
        assert!(beh_eq_up_to(0, &p, &q, &mut e).unwrap());
        assert!(!beh_eq_up_to(2, &p, &q, &mut e).unwrap());
        let p = prog("jmp 2\njmp 3\n+f.m\njmp 1");
        for n in 0..10 {
            assert!(beh_eq_up_to(n, &p, &eliminate_jump_chains(&p), &mut e).unwrap());
        }
    }

    #[test]
    fn md_field_names() {
        let m = MdMethod::Hasfield(Spot::new("s"), Field::new("acti"));
        assert_eq!(tcalc::Action::md(m).to_string(), "md(hasfield s acti)");
    }
}
