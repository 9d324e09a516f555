//! `kcfa`: evaluate, analyze and query labeled λ-programs, generate
//! gadget and reduction terms, and measure growth curves.
//!
//! Exit codes: 0 success, 1 false query under `--assert`, 2 usage or input
//! errors, 3 fuel or budget exhaustion.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kcfa::bench::{self, BenchError, BenchOptions, Family};
use kcfa::exact::{eval_exact, EvalError, Fuel};
use kcfa::gadgets::{compile_circuit, load_program, CircuitSpec};
use kcfa::json::{abstract_cache_json, exact_cache_json, report_json, CacheJson};
use kcfa::kcfa::{analyze, AnalysisError, FlowQuery};
use kcfa::reduction::{build_tm_term, gen_tuple_family, IterMode, TMSpec, TmTermOptions};
use kcfa::syntax::{unparse, Program};

#[derive(Parser)]
#[command(name = "kcfa", version, about = "kCFA workbench for a labeled λ-calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the instrumented evaluator and print the exact cache.
    Eval {
        file: PathBuf,
        #[arg(long, default_value_t = Fuel::default().0)]
        fuel: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Compute the least kCFA cache.
    Analyze {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Decide whether an abstraction flows to a label or variable.
    Query {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, conflicts_with = "var", required_unless_present = "var")]
        label: Option<String>,
        #[arg(long)]
        var: Option<String>,
        /// Dot-joined labels; empty for ε.
        #[arg(long, default_value = "")]
        contour: String,
        /// Label of the abstraction to look for.
        #[arg(long)]
        lam: String,
        #[arg(long)]
        budget: Option<u64>,
        /// Exit with status 1 when the answer is false.
        #[arg(long)]
        assert: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Print a generated program.
    Gen {
        #[command(subcommand)]
        what: Gen,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Analysis sizes over a family, as CSV.
    Bench {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 1)]
        min_n: usize,
        #[arg(long)]
        max_n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Gen {
    /// Compile a circuit JSON file into `Widget(C)`; the widget is labeled `W`.
    Circuit { file: PathBuf },
    /// The closure-explosion family of width N.
    Tuples {
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// The machine term for a TM JSON spec; the widget is labeled `W`.
    Tm {
        file: PathBuf,
        /// Input bits, e.g. `0110`.
        #[arg(long, default_value = "")]
        input: String,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Iterate with the Y combinator instead of the composer.
        #[arg(long)]
        fix: bool,
    },
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

enum Failure {
    Usage(String),
    Exhausted(String),
}

impl From<kcfa::Error> for Failure {
    fn from(e: kcfa::Error) -> Self {
        match e {
            kcfa::Error::Eval(EvalError::FuelExhausted(_)) | kcfa::Error::Analysis(AnalysisError::BudgetExhausted(_)) => {
                Failure::Exhausted(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::Exhausted(e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::FuelExhausted(_) => Failure::Exhausted(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Exhausted(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Program, Failure> {
    let (prog, warnings) = load_program(&read(path)?)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(prog)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            // a closed pipe (`| head`) is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn cache_text(c: &CacheJson) -> String {
    let mut s = String::new();
    for e in &c.entries {
        let ctx = if e.contour.is_empty() { "ε" } else { &e.contour };
        let _ = writeln!(s, "{} {} @ {}", e.kind, e.key, ctx);
        for v in &e.values {
            let env: Vec<String> = v.env.iter().map(|(x, d)| format!("{x}:{}", if d.is_empty() { "ε" } else { d })).collect();
            let _ = writeln!(s, "    λ^{} [{}]", v.label, env.join(", "));
        }
    }
    s
}

fn run(cmd: Command) -> Result<ExitCode, Failure> {
    match cmd {
        Command::Eval { file, fuel, out } => {
            let prog = load(&file)?;
            let cache = eval_exact(&prog, Fuel(fuel))?;
            let c = exact_cache_json(&prog, &cache);
            let text = match out.format {
                Format::Json => json(&c),
                Format::Text => cache_text(&c),
            };
            emit(out.out.as_deref(), &text)?;
        }
        Command::Analyze { file, k, budget, out } => {
            let prog = load(&file)?;
            let (cache, stats) = analyze(&prog, k, budget)?;
            let text = match out.format {
                Format::Json => json(&report_json(&prog, &cache, stats)),
                Format::Text => {
                    let mut s = format!(
                        "k={k} iterations={} keys={} closures={} max_set={}\n",
                        stats.iterations, stats.cache_keys, stats.total_closures, stats.max_set
                    );
                    s.push_str(&cache_text(&abstract_cache_json(&prog, &cache)));
                    s
                }
            };
            emit(out.out.as_deref(), &text)?;
        }
        Command::Query { file, k, label, var, contour, lam, budget, assert, out } => {
            let prog = load(&file)?;
            let q = FlowQuery::parse(&prog, label.as_deref(), var.as_deref(), &contour, &lam)?;
            q.validate(&prog, k)?;
            let (cache, _) = analyze(&prog, k, budget)?;
            let hits = q.matches(&cache);
            let answer = !hits.is_empty();
            let mut r = kcfa::json::Renderer::new(&prog);
            let text = match out.format {
                Format::Json => {
                    let values: Vec<_> = hits.iter().map(|c| r.closure(c)).collect();
                    json(&serde_json::json!({ "answer": answer, "matches": values }))
                }
                Format::Text => {
                    let mut s = format!("{answer}\n");
                    for c in &hits {
                        let v = r.closure(c);
                        let _ = writeln!(s, "    λ^{}", v.label);
                    }
                    s
                }
            };
            emit(out.out.as_deref(), &text)?;
            if assert && !answer {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Gen { what, out } => {
            let expr = match what {
                Gen::Circuit { file } => {
                    let spec = CircuitSpec::from_json(&read(&file)?).map_err(usage)?;
                    compile_circuit(&spec).map_err(usage)?.0
                }
                Gen::Tuples { n, k } => gen_tuple_family(n, k).map_err(usage)?.expr,
                Gen::Tm { file, input, k, fix } => {
                    let tm = TMSpec::from_json(&read(&file)?).map_err(usage)?;
                    let bits = parse_bits(&input)?;
                    let mode = fix.then_some(IterMode::Fix);
                    build_tm_term(&tm, &bits, TmTermOptions { k, mode }).map_err(usage)?.expr
                }
            };
            let prog = kcfa::gadgets::into_program(expr)?;
            emit(out.as_deref(), &format!("{}\n", unparse(prog.expr())))?;
        }
        Command::Bench { family, min_n, max_n, k, budget, jobs, out } => {
            let family: Family = family.parse().map_err(usage)?;
            let opts = BenchOptions { family, range: min_n..=max_n, k, budget, jobs };
            let rows = bench::run(&opts).map_err(|e| match e {
                BenchError::Analysis { .. } => Failure::Exhausted(e.to_string()),
                other => usage(other),
            })?;
            emit(out.as_deref(), &bench::to_csv(&rows))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_bits(s: &str) -> Result<Vec<u8>, Failure> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(usage(format!("input must be a string of 0s and 1s, got {s:?}"))),
        })
        .collect()
}
