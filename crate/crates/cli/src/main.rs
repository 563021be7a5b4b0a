//! `tcmd`: normalize, project, compare and run thread terms and programs.

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tcalc::engine::DEFAULT_FUEL;
use tcalc::pgldf::{beh_eq_up_to, eliminate_jump_chains, extract, parse_program};
use tcalc::projective::{aip_refute_with, distance, embed, eq_up_to_with, fix_approx, DEFAULT_DEPTH};
use tcalc::run::{run, RunConfig};
use tcalc::{parse_term, Config, Engine, Environment, Mode, Program, Refutation, Registry, Term, Var};

#[derive(Parser, Debug)]
#[command(name = "tcmd", version, about = "Thread calculus workbench")]
struct Cli {
    /// Projection depth, or truncation depth of the projective model.
    #[arg(short = 'n', long = "depth", global = true, default_value_t = DEFAULT_DEPTH)]
    depth: u32,
    /// Rewrite steps allowed per normalization.
    #[arg(long, global = true, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    /// Print the rewrite trace (normalize, project) before the result.
    #[arg(long, global = true)]
    trace: bool,
    /// Fork gates test the private spot instead of the handed-over one.
    #[arg(long, global = true)]
    poll_via_this: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalize a closed term to a basic term.
    Normalize { file: String },
    /// Normalize pi_n of a closed term.
    Project { file: String },
    /// Compare two terms at one projection depth.
    Eq { left: String, right: String },
    /// Find the least depth up to -n at which two terms differ.
    Refute { left: String, right: String },
    /// Approximate the least fixed point of a body in VAR.
    Fix { var: String, file: String },
    /// Distance of two terms in the truncated projective model.
    Distance { left: String, right: String },
    /// Extract the thread of a program.
    Extract { program: String },
    /// Execute a program against the molecular dynamics service.
    Run {
        program: String,
        /// Number of atoms, or `unlimited`.
        #[arg(long, default_value = "unlimited")]
        capacity: String,
        /// `alltrue`, `script:FILE` or `table:FILE`.
        #[arg(long, default_value = "alltrue")]
        env: String,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
    },
    /// Redirect jumps to the ends of their chains.
    ChainElim { program: String },
    /// Compare the threads of two programs at one projection depth.
    BehEq { left: String, right: String },
}

/// Result of a command: text to print and the exit code.
struct Done {
    out: String,
    code: u8,
}

impl Done {
    fn ok(out: String) -> Done {
        Done { out, code: 0 }
    }

    fn verdict(same: bool, out: String) -> Done {
        Done { out, code: if same { 0 } else { 1 } }
    }
}

fn read(path: &str) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("IoError: cannot read {path}: {e}"))
}

fn term(path: &str) -> Result<Term, String> {
    parse_term(&read(path)?).map_err(|e| format!("{path}: {e}"))
}

fn program(path: &str) -> Result<Program, String> {
    parse_program(&read(path)?).map_err(|e| format!("{path}: {e}"))
}

fn capacity(text: &str) -> Result<Option<u32>, String> {
    match text {
        "unlimited" => Ok(None),
        k => k.parse().map(Some).map_err(|_| format!("UsageError: capacity must be a number or 'unlimited', got '{k}'")),
    }
}

fn environment(spec: &str) -> Result<Environment, String> {
    let parsed = match spec.split_once(':') {
        None if spec == "alltrue" => return Ok(Environment::AllTrue),
        Some(("script", path)) => Environment::parse_script(&read(path)?),
        Some(("table", path)) => Environment::parse_table(&read(path)?),
        _ => return Err(format!("UsageError: --env must be alltrue, script:FILE or table:FILE, got '{spec}'")),
    };
    parsed.map_err(|e| format!("SyntaxError in {spec}: {e}"))
}

fn execute(cli: &Cli) -> Result<Done, String> {
    let cfg = Config { fuel: cli.fuel, poll_via_this: cli.poll_via_this, ..Config::default() };
    let mut engine = Engine::new(Registry::new(), cfg.clone());
    let e = |err: tcalc::EngineError| err.to_string();
    let n = cli.depth;
    match &cli.command {
        Command::Normalize { file } | Command::Project { file } => {
            let t = term(file)?;
            let mode = match cli.command {
                Command::Project { .. } => Mode::Project(n),
                _ => Mode::Normalize,
            };
            let mut out = String::new();
            let b = if cli.trace {
                let (res, trace) = engine.normalize_traced(&t, mode).map_err(e)?;
                write!(out, "{trace}").unwrap();
                match res {
                    tcalc::Normal::Basic(b) => b,
                    tcalc::Normal::Head(_) => unreachable!("full normalization"),
                }
            } else if let Mode::Project(n) = mode {
                engine.proj_normalize(n, &t).map_err(e)?
            } else {
                engine.normalize(&t).map_err(e)?
            };
            writeln!(out, "{}", b.canon()).unwrap();
            Ok(Done::ok(out))
        }
        Command::Eq { left, right } => {
            let same = eq_up_to_with(&mut engine, n, &term(left)?, &term(right)?).map_err(e)?;
            let out = if same { format!("equal up to depth {n}\n") } else { format!("differ at depth {n}\n") };
            Ok(Done::verdict(same, out))
        }
        Command::Refute { left, right } => match aip_refute_with(&mut engine, &term(left)?, &term(right)?, n).map_err(e)? {
            Refutation::NotEqualAt(k) => Ok(Done::verdict(false, format!("differ at depth {k}\n"))),
            Refutation::UndistinguishedUpTo(k) => Ok(Done::verdict(true, format!("undistinguished up to depth {k}\n"))),
        },
        Command::Fix { var, file } => {
            let seq = fix_approx(&mut engine, &Var::new(var), &term(file)?, n).map_err(e)?;
            Ok(Done::ok(seq.to_string()))
        }
        Command::Distance { left, right } => {
            let p = embed(&mut engine, &term(left)?, n).map_err(e)?;
            let q = embed(&mut engine, &term(right)?, n).map_err(e)?;
            Ok(Done::ok(format!("{}\n", distance(&p, &q))))
        }
        Command::Extract { program: path } => Ok(Done::ok(format!("{}\n", extract(&program(path)?)))),
        Command::ChainElim { program: path } => Ok(Done::ok(eliminate_jump_chains(&program(path)?).to_string())),
        Command::BehEq { left, right } => {
            let same = beh_eq_up_to(n, &program(left)?, &program(right)?, &mut engine).map_err(e)?;
            let out = if same { format!("equal up to depth {n}\n") } else { format!("differ at depth {n}\n") };
            Ok(Done::verdict(same, out))
        }
        Command::Run { program: path, capacity: cap, env, max_steps } => {
            let rc = RunConfig { capacity: capacity(cap)?, max_steps: *max_steps, engine: cfg };
            let res = run(&program(path)?, environment(env)?, &rc).map_err(|err| err.to_string())?;
            let mut out = String::new();
            for step in &res.trace {
                writeln!(out, "{step}").unwrap();
            }
            writeln!(out, "outcome: {}", res.outcome).unwrap();
            writeln!(out, "{}", res.state.dump()).unwrap();
            Ok(Done::ok(out))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(done) => {
            print!("{}", done.out);
            ExitCode::from(done.code)
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
