//! Growth curves over generated families.
//!
//! Each row records the size of the least abstract cache for one parameter
//! value. Counts are exact and deterministic; `wall_ms` is informational.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::gadgets::{chain_circuit, compile_circuit, into_program};
use crate::kcfa::{analyze, cache_stats, AnalysisError};
use crate::reduction::{build_tm_term, gen_tuple_family, TMSpec, TmTermOptions, MAX_TUPLE_N};

/// Largest chain length accepted by the circuit-chain family.
pub const MAX_CHAIN_GATES: usize = 4096;
/// Largest tape length accepted by the tm family.
pub const MAX_TM_CELLS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `gen_tuple_family(N)`; closures are counted at the padded label.
    Tuples,
    /// A linear chain of `N` binary gates compiled with its widget.
    CircuitChain,
    /// An immediately accepting machine over `N` tape cells.
    Tm,
}

impl FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tuples" => Ok(Family::Tuples),
            "circuit-chain" => Ok(Family::CircuitChain),
            "tm" => Ok(Family::Tm),
            _ => Err(BenchError::Family(s.to_string())),
        }
    }
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Tuples => "tuples",
            Family::CircuitChain => "circuit-chain",
            Family::Tm => "tm",
        }
    }

    fn cap(self) -> usize {
        match self {
            Family::Tuples => MAX_TUPLE_N,
            Family::CircuitChain => MAX_CHAIN_GATES,
            Family::Tm => MAX_TM_CELLS,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown family {0:?} (expected tuples, circuit-chain or tm)")]
    Family(String),
    #[error("parameter {param} outside 1..={cap} for family {family}")]
    Cap { family: &'static str, param: usize, cap: usize },
    #[error("parameter {param}: {source}")]
    Analysis { param: usize, source: AnalysisError },
    #[error("parameter {param}: {message}")]
    Build { param: usize, message: String },
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub family: Family,
    pub range: RangeInclusive<usize>,
    pub k: usize,
    pub budget: Option<u64>,
    /// Worker threads; rows come back in parameter order regardless.
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub param: usize,
    pub cache_keys: usize,
    /// For the tuples family this is the size of the set at the padded
    /// label; otherwise the sum over the whole cache.
    pub total_closures: usize,
    pub wall_ms: u128,
}

pub fn run(opts: &BenchOptions) -> Result<Vec<BenchRow>, BenchError> {
    let cap = opts.family.cap();
    for param in [*opts.range.start(), *opts.range.end()] {
        if param == 0 || param > cap {
            return Err(BenchError::Cap { family: opts.family.name(), param, cap });
        }
    }
    let params: Vec<usize> = opts.range.clone().collect();
    let jobs = opts.jobs.clamp(1, params.len().max(1));
    if jobs == 1 {
        return params.iter().map(|&p| row(opts, p)).collect();
    }
    let mut slots: Vec<Option<Result<BenchRow, BenchError>>> = (0..params.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        for (chunk_params, chunk_slots) in params.chunks(params.len().div_ceil(jobs)).zip(slots.chunks_mut(params.len().div_ceil(jobs))) {
            s.spawn(move || {
                for (&p, slot) in chunk_params.iter().zip(chunk_slots.iter_mut()) {
                    *slot = Some(row(opts, p));
                }
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every slot filled")).collect()
}

fn row(opts: &BenchOptions, param: usize) -> Result<BenchRow, BenchError> {
    let build = |message: String| BenchError::Build { param, message };
    let start = Instant::now();
    let (prog, probe) = match opts.family {
        Family::Tuples => {
            let fam = gen_tuple_family(param, opts.k).map_err(|e| build(e.to_string()))?;
            let prog = into_program(fam.expr.clone()).map_err(|e| build(e.to_string()))?;
            let loc = fam.location(&prog);
            (prog, Some(loc))
        }
        Family::CircuitChain => {
            let (e, _) = compile_circuit(&chain_circuit(param)).map_err(|e| build(e.to_string()))?;
            (into_program(e).map_err(|e| build(e.to_string()))?, None)
        }
        Family::Tm => {
            let tm = accepting_machine(param);
            let term = build_tm_term(&tm, &[], TmTermOptions { k: opts.k.max(1), mode: None })
                .map_err(|e| build(e.to_string()))?;
            (into_program(term.expr).map_err(|e| build(e.to_string()))?, None)
        }
    };
    let (cache, _) = analyze(&prog, opts.k, opts.budget).map_err(|source| BenchError::Analysis { param, source })?;
    let stats = cache_stats(&cache);
    let total_closures = match probe {
        Some((key, ctx)) => cache.lookup(key, &ctx).map_or(0, |s| s.len()),
        None => stats.total_closures,
    };
    Ok(BenchRow { param, cache_keys: stats.cache_keys, total_closures, wall_ms: start.elapsed().as_millis() })
}

/// Two states, start in `qa`, one time bit, `cells` tape cells.
pub fn accepting_machine(cells: usize) -> TMSpec {
    TMSpec::from_json(&format!(
        r#"{{"states":["acc","rej"],"q0":"acc","qa":"acc","qr":"rej","blank":"0","delta":[],"tape_cells":{cells},"time_bits":1}}"#
    ))
    .expect("well-formed machine")
}

pub const CSV_HEADER: &str = "param,cache_keys,total_closures,wall_ms";

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.param, r.cache_keys, r.total_closures, r.wall_ms);
    }
    out
}

/// Least-squares slope, intercept and Pearson correlation of `ys` on `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy / (sxx.sqrt() * syy.sqrt()))
}
