//! Test-side oracles and generators. Nothing here calls into the
//! evaluator or the analyzer under test; comparisons go through plain
//! string-keyed maps.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use kcfa::exact::ExactCache;
use kcfa::gadgets::{into_program, CircuitSpec, Connective, Gadgets, GateKind, WidgetHandle};
use kcfa::kcfa::AbstractCache;
use kcfa::syntax::{Expr, ExprKind};
use kcfa::Program;
use rand::Rng;

pub type Ctx = Vec<String>;
/// `(is_var, label-or-name, contour)`
pub type Key = (bool, String, Ctx);
/// `(label of the λ, contour environment)`
pub type Clo = (String, BTreeMap<String, Ctx>);
pub type Exact = BTreeMap<Key, Clo>;
pub type Abstract = BTreeMap<Key, BTreeSet<Clo>>;

/// Run `f` on a thread with a large stack; generated terms nest deeply.
pub fn big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new().stack_size(512 << 20).spawn(f).unwrap().join().unwrap()
}

fn label_of(e: &Expr) -> String {
    e.label.as_ref().expect("labeled program").as_str().to_owned()
}

fn free(e: &Expr, out: &mut BTreeSet<String>, bound: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        ExprKind::Lam(x, b) => {
            bound.push(x.clone());
            free(b, out, bound);
            bound.pop();
        }
        ExprKind::App(f, a) => {
            free(f, out, bound);
            free(a, out, bound);
        }
    }
}

/// Call-by-value environment machine that records every flow the way the
/// instrumented evaluator is specified to: operator then operand at `δ`,
/// binding and body at `δ·ℓ`.
pub struct Oracle<'e> {
    lams: HashMap<String, &'e Expr>,
    fv: HashMap<String, BTreeSet<String>>,
    pub cache: Exact,
    fuel: u64,
}

#[derive(Debug)]
pub struct OutOfFuel;

impl<'e> Oracle<'e> {
    pub fn run(root: &'e Expr, fuel: u64) -> Result<Exact, OutOfFuel> {
        let mut o = Oracle { lams: HashMap::new(), fv: HashMap::new(), cache: BTreeMap::new(), fuel };
        o.index(root);
        o.eval(root, &BTreeMap::new(), &Vec::new())?;
        Ok(o.cache)
    }

    fn index(&mut self, e: &'e Expr) {
        match &e.kind {
            ExprKind::Var(_) => {}
            ExprKind::Lam(_, b) => {
                let mut s = BTreeSet::new();
                free(e, &mut s, &mut Vec::new());
                self.fv.insert(label_of(e), s);
                self.lams.insert(label_of(e), e);
                self.index(b);
            }
            ExprKind::App(f, a) => {
                self.index(f);
                self.index(a);
            }
        }
    }

    fn put(&mut self, key: Key, v: Clo) {
        if let Some(old) = self.cache.insert(key.clone(), v.clone()) {
            assert_eq!(old, v, "oracle rebound {key:?}");
        }
    }

    fn eval(&mut self, e: &'e Expr, env: &BTreeMap<String, Ctx>, ctx: &Ctx) -> Result<(), OutOfFuel> {
        stacker::maybe_grow(64 * 1024, 4 << 20, || self.step(e, env, ctx))
    }

    fn step(&mut self, e: &'e Expr, env: &BTreeMap<String, Ctx>, ctx: &Ctx) -> Result<(), OutOfFuel> {
        if self.fuel == 0 {
            return Err(OutOfFuel);
        }
        self.fuel -= 1;
        let here = (false, label_of(e), ctx.clone());
        match &e.kind {
            ExprKind::Var(x) => {
                let v = self.cache[&(true, x.clone(), env[x].clone())].clone();
                self.put(here, v);
            }
            ExprKind::Lam(..) => {
                let l = label_of(e);
                let restricted = self.fv[&l].iter().map(|x| (x.clone(), env[x].clone())).collect();
                self.put(here, (l, restricted));
            }
            ExprKind::App(f, a) => {
                self.eval(f, env, ctx)?;
                self.eval(a, env, ctx)?;
                let (lam, cenv) = self.cache[&(false, label_of(f), ctx.clone())].clone();
                let arg = self.cache[&(false, label_of(a), ctx.clone())].clone();
                let ExprKind::Lam(x, body) = &self.lams[&lam].kind else { unreachable!() };
                let mut inner = ctx.clone();
                inner.push(label_of(e));
                self.put((true, x.clone(), inner.clone()), arg);
                let mut benv = cenv;
                benv.insert(x.clone(), inner.clone());
                self.eval(body, &benv, &inner)?;
                let r = self.cache[&(false, label_of(body), inner)].clone();
                self.put(here, r);
            }
        }
        Ok(())
    }
}

fn trunc(c: &Ctx, k: usize) -> Ctx {
    c[c.len().saturating_sub(k)..].to_vec()
}

/// The image of an oracle cache under rightmost-`k` truncation.
pub fn truncate(exact: &Exact, k: usize) -> Abstract {
    let mut out: Abstract = BTreeMap::new();
    for ((is_var, name, ctx), (lam, env)) in exact {
        let env = env.iter().map(|(x, c)| (x.clone(), trunc(c, k))).collect();
        out.entry((*is_var, name.clone(), trunc(ctx, k))).or_default().insert((lam.clone(), env));
    }
    out
}

fn ctx_of(prog: &Program, c: &kcfa::Contour) -> Ctx {
    c.as_slice().iter().map(|&n| prog.label(n).as_str().to_owned()).collect()
}

fn key_of(prog: &Program, k: &kcfa::CacheKey, c: &kcfa::Contour) -> Key {
    (k.kind() == "var", k.name(prog).to_owned(), ctx_of(prog, c))
}

fn clo_of(prog: &Program, c: &kcfa::Closure) -> Clo {
    let env = c.env.iter().map(|(v, d)| (prog.var_name(*v).to_owned(), ctx_of(prog, d))).collect();
    (prog.label(c.lam).as_str().to_owned(), env)
}

pub fn from_exact(prog: &Program, cache: &ExactCache) -> Exact {
    cache.iter().map(|(k, c, v)| (key_of(prog, k, c), clo_of(prog, v))).collect()
}

pub fn from_abstract(prog: &Program, cache: &AbstractCache) -> Abstract {
    cache
        .entries()
        .map(|(k, c, vs)| (key_of(prog, k, c), vs.iter().map(|v| clo_of(prog, v)).collect()))
        .collect()
}

pub fn max_depth(exact: &Exact) -> usize {
    exact
        .iter()
        .flat_map(|((_, _, c), (_, env))| std::iter::once(c.len()).chain(env.values().map(Vec::len)))
        .max()
        .unwrap_or(0)
}

/// Straight-line evaluation of a circuit's first output.
pub fn circuit_value(c: &CircuitSpec) -> bool {
    let mut wires: HashMap<String, bool> = c.inputs.iter().map(|i| (i.name.clone(), i.value)).collect();
    for g in &c.gates {
        let a: Vec<bool> = g.args.iter().map(|w| wires[w]).collect();
        match g.kind {
            GateKind::Not => {
                wires.insert(g.id.clone(), !a[0]);
            }
            GateKind::And => {
                wires.insert(g.id.clone(), a[0] && a[1]);
            }
            GateKind::Or => {
                wires.insert(g.id.clone(), a[0] || a[1]);
            }
            GateKind::Implies => {
                wires.insert(g.id.clone(), !a[0] || a[1]);
            }
            GateKind::Copy(n) => {
                for i in 0..n {
                    wires.insert(format!("{}.{i}", g.id), a[0]);
                }
            }
        }
    }
    wires[&c.outputs[0]]
}

/// A closed term in which every bound variable occurs exactly once.
pub fn random_linear(rng: &mut impl Rng, budget: usize) -> Expr {
    loop {
        let e = linear(rng, budget.max(2), Vec::new(), &mut 0);
        if e.size() <= budget.max(2) {
            return e;
        }
    }
}

fn linear(rng: &mut impl Rng, budget: usize, vars: Vec<String>, n: &mut usize) -> Expr {
    let mut fresh = || {
        *n += 1;
        format!("v{n}")
    };
    match vars.len() {
        // closed positions are usually redexes, so that something runs
        0 if budget >= 5 && rng.gen_bool(0.6) => {
            let left = (budget - 1) / 2;
            let f = linear(rng, left, Vec::new(), n);
            let a = linear(rng, budget - 1 - left, Vec::new(), n);
            Expr::app(f, a)
        }
        0 => {
            let x = fresh();
            let body = linear(rng, budget.saturating_sub(1), vec![x.clone()], n);
            Expr::lam(x, body)
        }
        1 if budget <= 2 || rng.gen_bool(0.3) => Expr::var(vars[0].clone()),
        _ if budget > 3 && rng.gen_bool(0.3) => {
            let x = fresh();
            let mut vs = vars;
            vs.push(x.clone());
            Expr::lam(x, linear(rng, budget - 1, vs, n))
        }
        _ => {
            let (mut l, mut r) = (Vec::new(), Vec::new());
            for v in vars {
                if rng.gen_bool(0.5) {
                    l.push(v)
                } else {
                    r.push(v)
                }
            }
            let left = budget.saturating_sub(1) / 2;
            let f = linear(rng, left.max(1), l, n);
            let a = linear(rng, (budget.saturating_sub(1) - left).max(1), r, n);
            Expr::app(f, a)
        }
    }
}

/// A closed term with unrestricted variable use.
pub fn random_closed(rng: &mut impl Rng, budget: usize) -> Expr {
    loop {
        let e = closed(rng, budget.max(2), &mut Vec::new(), &mut 0);
        if e.size() <= budget.max(2) {
            return e;
        }
    }
}

fn closed(rng: &mut impl Rng, budget: usize, scope: &mut Vec<String>, n: &mut usize) -> Expr {
    if scope.is_empty() && budget >= 5 && rng.gen_bool(0.6) {
        let left = (budget - 1) / 2;
        let f = closed(rng, left, scope, n);
        let a = closed(rng, budget - 1 - left, scope, n);
        return Expr::app(f, a);
    }
    if scope.is_empty() || (budget > 2 && rng.gen_bool(0.35)) {
        *n += 1;
        let x = format!("v{n}");
        scope.push(x.clone());
        let b = closed(rng, budget.saturating_sub(1), scope, n);
        scope.pop();
        return Expr::lam(x, b);
    }
    if budget <= 2 || rng.gen_bool(0.3) {
        return Expr::var(scope[rng.gen_range(0..scope.len())].clone());
    }
    let left = (budget - 1) / 2;
    let f = closed(rng, left, scope, n);
    let a = closed(rng, budget - 1 - left, scope, n);
    Expr::app(f, a)
}

/// The hand-built machines used for the machine-term checks, with inputs.
pub fn machine_corpus() -> Vec<(&'static str, String, Vec<Vec<u8>>)> {
    vec![
        (
            "immediate accept",
            r#"{"states":["acc","rej"],"q0":"acc","qa":"acc","qr":"rej","blank":"0","delta":[],"tape_cells":1,"time_bits":1}"#.into(),
            vec![vec![]],
        ),
        (
            "immediate reject",
            r#"{"states":["acc","rej"],"q0":"rej","qa":"acc","qr":"rej","blank":"0","delta":[],"tape_cells":1,"time_bits":1}"#.into(),
            vec![vec![]],
        ),
        (
            "write then branch",
            r#"{"states":["w","b","acc","rej"],"q0":"w","qa":"acc","qr":"rej","blank":"0",
               "delta":[{"from":["w","0"],"to":["b","1","L"]},{"from":["w","1"],"to":["b","0","L"]},
                        {"from":["b","0"],"to":["rej","0","R"]},{"from":["b","1"],"to":["acc","1","R"]}],
               "tape_cells":2,"time_bits":2}"#
                .into(),
            vec![vec![0], vec![1]],
        ),
        (
            "two-cell shuttle",
            r#"{"states":["r","l","c","acc","rej"],"q0":"r","qa":"acc","qr":"rej","blank":"0",
               "delta":[{"from":["r","0"],"to":["l","1","R"]},{"from":["r","1"],"to":["l","1","R"]},
                        {"from":["l","0"],"to":["c","0","L"]},{"from":["l","1"],"to":["rej","1","L"]},
                        {"from":["c","0"],"to":["rej","0","R"]},{"from":["c","1"],"to":["acc","1","R"]}],
               "tape_cells":2,"time_bits":3}"#
                .into(),
            vec![vec![], vec![0, 1]],
        ),
        (
            "parity of two bits",
            r#"{"states":["s","e","o","acc","rej"],"q0":"s","qa":"acc","qr":"rej","blank":"0",
               "delta":[{"from":["s","0"],"to":["e","0","R"]},{"from":["s","1"],"to":["o","1","R"]},
                        {"from":["e","0"],"to":["acc","0","R"]},{"from":["e","1"],"to":["rej","1","R"]},
                        {"from":["o","0"],"to":["rej","0","R"]},{"from":["o","1"],"to":["acc","1","R"]}],
               "tape_cells":2,"time_bits":2}"#
                .into(),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
        ),
    ]
}

/// `(λf. (f True) (f False)) (λx. Widget (Implies x x))`.
pub fn toy() -> (Program, WidgetHandle) {
    let mut g = Gadgets::new();
    let (f, x) = ("toy_f", "toy_x");
    let imp = g.connective(Connective::Implies);
    let r = Expr::apps(imp, [Expr::var(x), Expr::var(x)]);
    let (w, h) = g.apply_widget(r, "W");
    let t = g.boolean(true);
    let ff = g.boolean(false);
    let body = Expr::app(Expr::app(Expr::var(f), t), Expr::app(Expr::var(f), ff));
    let e = Expr::app(Expr::lam(f, body), Expr::lam(x, w));
    (into_program(e).unwrap(), h)
}
