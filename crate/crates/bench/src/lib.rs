//! Inputs shared by the benchmarks.

use tcalc::pgldf::parse_program;
use tcalc::{parse_term, Program, Term};

/// Two threads of two decisions each.
pub fn interleaving() -> Term {
    parse_term("csi[ (f.a1' . S) <f.a1> (f.a1'' . S), (f.a2' . S) <f.a2> (f.a2'' . S) ]").expect("valid term")
}

/// `k` threads of `len` actions each, interleaved.
pub fn wide_interleaving(k: usize, len: usize) -> Term {
    let threads: Vec<Term> = (0..k)
        .map(|i| {
            let mut t = Term::Stop;
            for j in 0..len {
                t = Term::pcc(t.clone(), tcalc::Action::opaque(&format!("f{i}"), &format!("m{j}")), Term::Dead);
            }
            t
        })
        .collect();
    Term::csi(threads)
}

/// A loop alternating two actions.
pub fn ping_pong() -> Term {
    parse_term("fix x . f.a . (x <g.b> csi[f.c . x, g.d . S])").expect("valid term")
}

/// The method sequence that builds a chain of `atoms` atoms.
pub fn chain_program(atoms: usize) -> Program {
    let mut src = String::from("md(creatom r)\nmd(setspot t r)\n");
    for _ in 1..atoms {
        src.push_str(
            "md(setspot s t)\nmd(creatom t)\nmd(addfield s up)\nmd(addfield t dn)\n\
             md(setfield s up t)\nmd(setfield t dn s)\n",
        );
    }
    parse_program(&src).expect("valid program")
}

/// A program with a fork, a test loop and a jump chain.
pub fn forking_program() -> Program {
    parse_program("fork s 7\n+f.a\njmp 4\njmp 5\nmd(addfield s acti)\njmp 10\ng.b\n-g.c\njmp 7\n")
        .expect("valid program")
}
