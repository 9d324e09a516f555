//! Term families for the exponential lower bound: the closure-explosion
//! tuple family and the encoding of a Turing machine run.

pub mod machine;

use std::collections::HashMap;

use thiserror::Error;

pub use machine::{
    apply_rules, bits_to_circuit, build_extract_circuit, build_transition_circuit, null_tuple, run_tm, Action,
    IdLayout, IdTuple, MachineId, Move, Outcome, TMSpec, TmRun,
};

use crate::exact::{CacheKey, Contour};
use crate::gadgets::{CircuitError, Gadgets, WidgetHandle};
use crate::syntax::{Expr, Label, Node, NodeId, Program};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("bad machine: {0}")]
    Machine(String),
    #[error("too wide: {0}")]
    Width(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Largest tuple family the generator accepts.
pub const MAX_TUPLE_N: usize = 16;

fn label(s: &str) -> Label {
    Label::new(s).expect("valid label")
}

/// `((λx1. ((λx2. ... inner(xk) ...) x1)^{p2}) arg)^{p1}`: whatever `inner`
/// builds is always evaluated in the contour `p1 ... pk`.
pub fn pad(g: &mut Gadgets, arg: Expr, depth: usize, prefix: &str, inner: impl FnOnce(&mut Gadgets, Expr) -> Expr) -> Expr {
    assert!(depth >= 1);
    let xs: Vec<String> = (0..depth).map(|_| g.names.fresh("x")).collect();
    let mut body = inner(g, Expr::var(&xs[depth - 1]));
    for i in (1..depth).rev() {
        body = Expr::app(Expr::lam(&xs[i], body), Expr::var(&xs[i - 1])).labeled(label(&format!("{prefix}{}", i + 1)));
    }
    Expr::app(Expr::lam(&xs[0], body), arg).labeled(label(&format!("{prefix}1")))
}

/// Labels `prefix1 .. prefix{depth}` used by [`pad`].
pub fn pad_labels(depth: usize, prefix: &str) -> Vec<Label> {
    (1..=depth).map(|i| label(&format!("{prefix}{i}"))).collect()
}

/// `(λf1. (λd. f1 One) (f1 Zero)) (λz1. ... (λzN. body))`
/// with `Zero ≡ True` and `One ≡ False`.
pub fn binder_chain(g: &mut Gadgets, zs: &[String], body: Expr) -> Expr {
    zs.iter().rev().fold(body, |acc, z| {
        let f = g.names.fresh("f");
        let zero = g.boolean(true);
        let one = g.boolean(false);
        // (λd. f One) (f Zero): both branches run, the first result is
        // dropped instead of being applied to the second
        let d = g.names.fresh("d");
        let second = Expr::lam(d, Expr::app(Expr::var(&f), one));
        let both = Expr::app(second, Expr::app(Expr::var(&f), zero));
        Expr::app(Expr::lam(f, both), Expr::lam(z, acc))
    })
}

/// The closure-explosion family and where to look.
#[derive(Clone, Debug)]
pub struct TupleFamily {
    pub expr: Expr,
    /// Label of the identity's body, the padded location.
    pub padded: Label,
    /// The padding labels, the one contour the padded location runs in.
    pub contour: Vec<Label>,
}

impl TupleFamily {
    pub fn location(&self, prog: &Program) -> (CacheKey, Contour) {
        let id = |l: &Label| prog.node_of(l).expect("family label present");
        (CacheKey::Label(id(&self.padded)), Contour::new(self.contour.iter().map(id).collect::<Vec<_>>()))
    }
}

/// `N` two-way binders `z1 .. zN` ending in `((λx.x^{ℓx}) (λw. w z1 ... zN))^{ℓ}`.
/// For `k > 1` the identity is replaced by `k` nested identities so the
/// padded location still has a single contour.
pub fn gen_tuple_family(n: usize, k: usize) -> Result<TupleFamily, ReductionError> {
    if !(1..=MAX_TUPLE_N).contains(&n) {
        return Err(ReductionError::Range(format!("tuple width must be in 1..={MAX_TUPLE_N}")));
    }
    let depth = k.max(1);
    let mut g = Gadgets::new();
    let zs: Vec<String> = (0..n).map(|_| g.names.fresh("z")).collect();
    let tuple = g.tuple(zs.iter().map(Expr::var).collect());
    let padded = label("padx");
    let body = pad(&mut g, tuple, depth, "pad", |_, x| x.labeled(label("padx")));
    Ok(TupleFamily { expr: binder_chain(&mut g, &zs, body), padded, contour: pad_labels(depth, "pad") })
}

/// `λp. p (λa1 ... am. p (λb1 ... bm. δ(a, b)))`: the transition circuit
/// applied to every pair of tuples reaching `p`.
pub fn build_phi(g: &mut Gadgets, tm: &TMSpec, l: &IdLayout) -> Result<Expr, ReductionError> {
    let circ = build_transition_circuit(tm, l);
    let m = l.width();
    let p = g.names.fresh("p");
    let a: Vec<String> = (0..m).map(|_| g.names.fresh("a")).collect();
    let b: Vec<String> = (0..m).map(|_| g.names.fresh("b")).collect();
    let mut bind = HashMap::new();
    for i in 0..m {
        bind.insert(format!("a{i}"), Expr::var(&a[i]));
        bind.insert(format!("b{i}"), Expr::var(&b[i]));
    }
    let body = g.circuit_term(&circ, bind, |g, outs| g.tuple(outs))?;
    let inner = g.let_tuple(&b, Expr::var(&p), body);
    let outer = g.let_tuple(&a, Expr::var(&p), inner);
    Ok(Expr::lam(p, outer))
}

/// `λt. t (λq1 ... qm. [state block = accepting code])`.
pub fn build_extract(g: &mut Gadgets, tm: &TMSpec, l: &IdLayout) -> Result<Expr, ReductionError> {
    let circ = build_extract_circuit(tm, l);
    let t = g.names.fresh("t");
    let q: Vec<String> = (0..l.width()).map(|_| g.names.fresh("q")).collect();
    let bind = (0..l.width()).map(|i| (format!("q{i}"), Expr::var(&q[i]))).collect();
    let body = g.circuit_term(&circ, bind, |_, mut outs| outs.remove(0))?;
    let e = g.let_tuple(&q, Expr::var(&t), body);
    Ok(Expr::lam(t, e))
}

/// `λs. λz. s (s z)`
pub fn two(g: &mut Gadgets) -> Expr {
    let s = g.names.fresh("s");
    let z = g.names.fresh("z");
    Expr::lam(&s, Expr::lam(&z, Expr::app(Expr::var(&s), Expr::app(Expr::var(&s), Expr::var(&z)))))
}

/// `λf. two (two (... (two f)))` with `n` copies: applies `f` `2^n` times.
pub fn build_iterator(g: &mut Gadgets, n: usize) -> Expr {
    assert!(n >= 1, "iterator needs at least one doubling");
    let f = g.names.fresh("f");
    let mut e = Expr::var(&f);
    for _ in 0..n {
        let d = two(g);
        e = Expr::app(d, e);
    }
    Expr::lam(f, e)
}

/// Call-by-value fixed point `λF. (λx. F (λv. x x v)) (λx. F (λv. x x v))`.
pub fn build_fix(g: &mut Gadgets) -> Expr {
    let ff = g.names.fresh("F");
    let half = |g: &mut Gadgets| {
        let x = g.names.fresh("x");
        let v = g.names.fresh("v");
        let xxv = Expr::app(Expr::app(Expr::var(&x), Expr::var(&x)), Expr::var(&v));
        Expr::lam(&x, Expr::app(Expr::var(&ff), Expr::lam(v, xxv)))
    };
    let a = half(g);
    let b = half(g);
    Expr::lam(&ff, Expr::app(a, b))
}

/// How the transition function is iterated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterMode {
    /// `2^n`-fold composition.
    Composer(usize),
    /// A fixed point in continuation-passing style: every iterate is handed
    /// to the continuation that extracts and tests it.
    Fix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TmTermOptions {
    /// Padding depth; the analysis depth the term is built for.
    pub k: usize,
    pub mode: Option<IterMode>,
}

impl Default for TmTermOptions {
    fn default() -> Self {
        TmTermOptions { k: 1, mode: None }
    }
}

/// A generated machine term and the pieces needed to query it.
#[derive(Clone, Debug)]
pub struct TmTerm {
    pub expr: Expr,
    pub widget: WidgetHandle,
    /// The machine actually encoded (with the input-writing prelude).
    pub machine: TMSpec,
    pub layout: IdLayout,
}

/// The initial tuple for the cell named by `zs`: time 0, state `q0`, head
/// 0, blank symbol.
fn initial_tuple(g: &mut Gadgets, tm: &TMSpec, l: &IdLayout, zs: &[String]) -> Expr {
    let mut bits = l.encode(&null_tuple(tm));
    bits.truncate(l.t_bits + l.s_bits + l.h_bits);
    let mut items: Vec<Expr> = bits.into_iter().map(|b| g.boolean(!b)).collect();
    items.extend(zs.iter().map(Expr::var));
    items.push(g.boolean(true));
    g.tuple(items)
}

/// `C[iterate Φ initial]`: the binder chain over the cell address bits,
/// the iterated transition function, `Extract`, and the widget inside
/// padding. `True` reaches the widget iff the machine accepts within its
/// time bound, per the analysis at the padding depth.
pub fn build_tm_term(tm: &TMSpec, input: &[u8], opts: TmTermOptions) -> Result<TmTerm, ReductionError> {
    let machine = tm.with_input_prelude(input)?;
    let l = IdLayout::for_machine(&machine)?;
    let depth = opts.k.max(1);
    let mode = opts.mode.unwrap_or(IterMode::Composer(machine.time_bits + 1));
    let mut g = Gadgets::new();
    let zs: Vec<String> = (0..l.c_bits).map(|_| g.names.fresh("z")).collect();
    let init = initial_tuple(&mut g, &machine, &l, &zs);
    let phi = build_phi(&mut g, &machine, &l)?;
    let extract = build_extract(&mut g, &machine, &l)?;
    let mut handle = None;
    let finish = |g: &mut Gadgets, ids: Expr| {
        pad(g, Expr::app(extract, ids), depth, "pad", |g, x| {
            let (w, h) = g.apply_widget(x, "W");
            handle = Some(h);
            w
        })
    };
    let body = match mode {
        IterMode::Composer(n) => {
            let it = build_iterator(&mut g, n.max(1));
            let ids = Expr::app(Expr::app(it, phi), init);
            finish(&mut g, ids)
        }
        IterMode::Fix => {
            // step = λrec. λt. λk. (λd. rec (Φ t) k) (k t)
            let (rec, t, k, d, r) = (
                g.names.fresh("rec"),
                g.names.fresh("t"),
                g.names.fresh("k"),
                g.names.fresh("d"),
                g.names.fresh("r"),
            );
            let again = Expr::app(Expr::app(Expr::var(&rec), Expr::app(phi, Expr::var(&t))), Expr::var(&k));
            let body = Expr::app(Expr::lam(d, again), Expr::app(Expr::var(&k), Expr::var(&t)));
            let step = Expr::lam(&rec, Expr::lam(&t, Expr::lam(&k, body)));
            let fix = build_fix(&mut g);
            let cont = {
                let inner = finish(&mut g, Expr::var(&r));
                Expr::lam(&r, inner)
            };
            Expr::app(Expr::app(Expr::app(fix, step), init), cont)
        }
    };
    let expr = binder_chain(&mut g, &zs, body);
    Ok(TmTerm { expr, widget: handle.expect("widget placed"), machine, layout: l })
}

/// Component expressions of a tuple abstraction `λw. w e1 ... em`.
pub fn tuple_items(prog: &Program, lam: NodeId) -> Option<Vec<NodeId>> {
    let Node::Lam { param, body, .. } = prog.node(lam) else { return None };
    let mut items = Vec::new();
    let mut n = *body;
    loop {
        match prog.node(n) {
            Node::App { fun, arg } => {
                items.push(*arg);
                n = *fun;
            }
            Node::Var { var } if var == param => break,
            _ => return None,
        }
    }
    items.reverse();
    Some(items)
}

/// `tuple (λo1 ... om. let r1 = Widget o1 in ... ⟨r1, ..., rm⟩)`: one
/// widget per component, labeled `{prefix}0`, `{prefix}1`, ...
pub fn probe_tuple(g: &mut Gadgets, tuple: Expr, m: usize, prefix: &str) -> (Expr, Vec<WidgetHandle>) {
    let os: Vec<String> = (0..m).map(|_| g.names.fresh("o")).collect();
    let rs: Vec<String> = (0..m).map(|_| g.names.fresh("r")).collect();
    let mut body = g.tuple(rs.iter().map(Expr::var).collect());
    let mut handles = Vec::with_capacity(m);
    for i in (0..m).rev() {
        let (w, h) = g.apply_widget(Expr::var(&os[i]), &format!("{prefix}{i}"));
        body = g.let_in(&rs[i], w, body);
        handles.push(h);
    }
    handles.reverse();
    // The first widget would otherwise run in the tuple's own call contour,
    // which `let_contour` cannot see.
    let o0 = g.names.fresh("o");
    body = g.let_in(&os[0], Expr::var(&o0), body);
    let mut os = os;
    os[0] = o0;
    let e = g.let_tuple(&os, tuple, body);
    (e, handles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{eval_exact, Fuel};
    use crate::gadgets::into_program;
    use crate::kcfa::{abstract_of_exact, analyze};
    use crate::syntax::is_linear;

    #[test]
    fn tuple_family_explodes_only_abstractly() {
        for n in 1..=4 {
            let fam = gen_tuple_family(n, 1).unwrap();
            let p = into_program(fam.expr.clone()).unwrap();
            let (key, ctx) = fam.location(&p);
            let (abs, _) = analyze(&p, 1, None).unwrap();
            assert_eq!(abs.lookup(key, &ctx).map_or(0, |s| s.len()), 1 << n);
            let exact = eval_exact(&p, Fuel::default()).unwrap();
            let hits: Vec<_> = exact.iter().filter(|(k, _, _)| **k == key).collect();
            assert_eq!(hits.len(), 1 << n);
            let image = abstract_of_exact(&exact, 1);
            assert_eq!(image.lookup(key, &ctx).map_or(0, |s| s.len()), 1 << n);
        }
    }

    #[test]
    fn tuple_family_range() {
        assert!(gen_tuple_family(0, 1).is_err());
        assert!(gen_tuple_family(MAX_TUPLE_N + 1, 1).is_err());
    }

    #[test]
    fn iterator_doubles() {
        for n in 1..=3 {
            for start in [false, true] {
                let mut g = Gadgets::new();
                let it = build_iterator(&mut g, n);
                let not = g.not();
                let b = g.boolean(start);
                let p = into_program(Expr::app(Expr::app(it, not), b)).unwrap();
                let c = eval_exact(&p, Fuel::default()).unwrap();
                let v = crate::gadgets::exact_boolean(&p, &c, CacheKey::Label(p.root()), &Contour::empty());
                // an even number of negations
                assert_eq!(v, Some(start), "n={n}");
            }
        }
    }

    #[test]
    fn phi_is_linear_but_for_p() {
        let tm = machine::tests_support::flip();
        let l = IdLayout::for_machine(&tm).unwrap();
        let mut g = Gadgets::new();
        let phi = build_phi(&mut g, &tm, &l).unwrap();
        assert!(!is_linear(&phi).unwrap());
        let occ = crate::syntax::occurrence_counts(&phi);
        let nonlinear: Vec<_> = occ.iter().filter(|(_, c)| **c != 1).collect();
        assert_eq!(nonlinear.len(), 1);
        assert_eq!(*nonlinear[0].1, 2);
    }

    #[test]
    fn phi_matches_rules_on_a_self_pair() {
        let tm = machine::tests_support::flip();
        let l = IdLayout::for_machine(&tm).unwrap();
        let ids = [
            IdTuple { t: 0, s: 0, h: 0, c: 0, b: 0 },
            IdTuple { t: 1, s: 1, h: 1, c: 1, b: 1 },
            IdTuple { t: 2, s: 1, h: 0, c: 1, b: 0 },
        ];
        for id in ids {
            let mut g = Gadgets::new();
            let phi = build_phi(&mut g, &tm, &l).unwrap();
            let items = bits_to_circuit(&l.encode(&id)).into_iter().map(|v| g.boolean(v)).collect();
            let t = g.tuple(items);
            let (e, hs) = probe_tuple(&mut g, Expr::app(phi, t), l.width(), "bit");
            let p = into_program(e).unwrap();
            let c = eval_exact(&p, Fuel(10_000_000)).unwrap();
            let vals: Vec<bool> = hs
                .iter()
                .map(|h| {
                    let v = h.exact_values(&p, &c);
                    assert_eq!(v.len(), 1);
                    v.into_iter().next().unwrap()
                })
                .collect();
            assert_eq!(l.decode(&bits_to_circuit(&vals)), apply_rules(&tm, &l, &id, &id), "{id:?}");
        }
    }
}
