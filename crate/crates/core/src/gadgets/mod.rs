//! Linear λ-encodings of Boolean logic, the flow widget, and circuit
//! compilation.
//!
//! A Boolean is a pair of "tokens": `True = ⟨TT, FF⟩`, `False = ⟨FF, TT⟩`,
//! where `TT` passes a pair through unchanged and `FF` swaps it. Every
//! connective consumes its arguments exactly once, so compiled circuits are
//! linear and evaluate in time proportional to their size.

pub mod circuit;

use std::collections::{BTreeSet, HashMap};

pub use circuit::{
    chain_circuit, enumerate_circuits, eval_circuit, eval_outputs, random_circuit, CircuitBuilder,
    CircuitError, CircuitEval, CircuitInput, CircuitSpec, Gate, GateKind, Wire,
};

use crate::exact::{CacheKey, Closure, Contour, ExactCache};
use crate::kcfa::AbstractCache;
use crate::syntax::{assign_labels, free_vars, Expr, ExprKind, Label, Node, NodeId, Program};

/// Fresh variable names. Every name handed out is distinct.
#[derive(Debug, Default)]
pub struct NameGen {
    next: usize,
}

impl NameGen {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self, base: &str) -> String {
        self.next += 1;
        format!("{base}_{}", self.next)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Connective {
    TT,
    FF,
    True,
    False,
    Not,
    /// Fan-out into an n-tuple.
    Copy(usize),
    Implies,
    And,
    Or,
    Compose,
}

impl Connective {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "TT" => Connective::TT,
            "FF" => Connective::FF,
            "True" => Connective::True,
            "False" => Connective::False,
            "Not" => Connective::Not,
            "Copy" => Connective::Copy(2),
            "Implies" => Connective::Implies,
            "And" => Connective::And,
            "Or" => Connective::Or,
            "Compose" => Connective::Compose,
            _ => {
                let n: usize = name.strip_prefix("Copy")?.parse().ok()?;
                if n == 0 {
                    return None;
                }
                Connective::Copy(n)
            }
        })
    }
}

/// Builds gadget terms with globally fresh binders.
#[derive(Debug, Default)]
pub struct Gadgets {
    pub names: NameGen,
}

impl Gadgets {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self, base: &str) -> String {
        self.names.fresh(base)
    }

    /// `λz. z e1 ... en`
    pub fn tuple(&mut self, items: Vec<Expr>) -> Expr {
        let z = self.fresh("z");
        Expr::lam(z.clone(), Expr::apps(Expr::var(z), items))
    }

    /// `⟨u, v⟩ = λz. z u v`
    pub fn pair(&mut self, u: Expr, v: Expr) -> Expr {
        self.tuple(vec![u, v])
    }

    /// `let ⟨x1, ..., xn⟩ = p in body`, i.e. `p (λx1. ... λxn. body)`.
    pub fn let_tuple(&mut self, names: &[String], p: Expr, body: Expr) -> Expr {
        let f = names.iter().rev().fold(body, |acc, n| Expr::lam(n.clone(), acc));
        Expr::app(p, f)
    }

    pub fn let_pair(&mut self, x: &str, y: &str, p: Expr, body: Expr) -> Expr {
        self.let_tuple(&[x.to_owned(), y.to_owned()], p, body)
    }

    /// `let x = e in body`, i.e. `(λx. body) e`.
    pub fn let_in(&mut self, x: &str, e: Expr, body: Expr) -> Expr {
        Expr::app(Expr::lam(x, body), e)
    }

    fn token(&mut self, swap: bool) -> Expr {
        let p = self.fresh("p");
        let x = self.fresh("x");
        let y = self.fresh("y");
        let body = if swap {
            self.pair(Expr::var(&y), Expr::var(&x))
        } else {
            self.pair(Expr::var(&x), Expr::var(&y))
        };
        let inner = self.let_pair(&x, &y, Expr::var(&p), body);
        Expr::lam(p, inner)
    }

    pub fn tt(&mut self) -> Expr {
        self.token(false)
    }

    pub fn ff(&mut self) -> Expr {
        self.token(true)
    }

    pub fn boolean(&mut self, v: bool) -> Expr {
        let (a, b) = if v { (self.tt(), self.ff()) } else { (self.ff(), self.tt()) };
        self.pair(a, b)
    }

    pub fn not(&mut self) -> Expr {
        let b = self.fresh("b");
        let u = self.fresh("u");
        let v = self.fresh("v");
        let body = self.pair(Expr::var(&v), Expr::var(&u));
        let inner = self.let_pair(&u, &v, Expr::var(&b), body);
        Expr::lam(b, inner)
    }

    /// Binary fan-out: `λb. let ⟨u,v⟩ = b in ⟨u⟨TT,FF⟩, v⟨FF,TT⟩⟩`.
    fn copy2(&mut self) -> Expr {
        let b = self.fresh("b");
        let u = self.fresh("u");
        let v = self.fresh("v");
        let t = self.boolean(true);
        let f = self.boolean(false);
        let body = self.pair(Expr::app(Expr::var(&u), t), Expr::app(Expr::var(&v), f));
        let inner = self.let_pair(&u, &v, Expr::var(&b), body);
        Expr::lam(b, inner)
    }

    /// n-way fan-out returning an n-tuple, chained from binary copies.
    pub fn copy(&mut self, n: usize) -> Expr {
        assert!(n >= 1, "copy needs at least one output");
        match n {
            1 => {
                let b = self.fresh("b");
                let t = self.tuple(vec![Expr::var(&b)]);
                Expr::lam(b, t)
            }
            2 => self.copy2(),
            _ => {
                let b = self.fresh("b");
                let first = self.fresh("b");
                let rest = self.fresh("r");
                let names: Vec<String> = (1..n).map(|_| self.fresh("b")).collect();
                let mut items = vec![Expr::var(&first)];
                items.extend(names.iter().map(Expr::var));
                let t = self.tuple(items);
                let copy_rest = self.copy(n - 1);
                let inner = self.let_tuple(&names, Expr::app(copy_rest, Expr::var(&rest)), t);
                let copy2 = self.copy2();
                let outer = self.let_pair(&first, &rest, Expr::app(copy2, Expr::var(&b)), inner);
                Expr::lam(b, outer)
            }
        }
    }

    /// `λf. λg. λx. f (g x)`
    pub fn compose(&mut self) -> Expr {
        let f = self.fresh("f");
        let g = self.fresh("g");
        let x = self.fresh("x");
        let body = Expr::app(Expr::var(&f), Expr::app(Expr::var(&g), Expr::var(&x)));
        Expr::lam(f, Expr::lam(g, Expr::lam(x, body)))
    }

    /// Left-associated composition of the given functions.
    pub fn compose_all(&mut self, fs: Vec<Expr>) -> Expr {
        let mut it = fs.into_iter();
        let first = it.next().expect("nonempty");
        it.fold(first, |acc, f| {
            let c = self.compose();
            Expr::apps(c, [acc, f])
        })
    }

    /// Binary connective. The first components of the two argument
    /// Booleans select the value; the leftover tokens are composed with a
    /// fresh `FF` and become the complement, which keeps the term linear.
    fn binary(&mut self, kind: GateKind) -> Expr {
        let b1 = self.fresh("b");
        let b2 = self.fresh("b");
        let u1 = self.fresh("u");
        let v1 = self.fresh("v");
        let u2 = self.fresh("u");
        let v2 = self.fresh("v");
        let p1 = self.fresh("p");
        let p2 = self.fresh("p");
        let q1 = self.fresh("q");
        let q2 = self.fresh("q");
        let (left, right) = match kind {
            GateKind::Implies => {
                let t = self.tt();
                let f = self.ff();
                (self.pair(Expr::var(&u2), t), self.pair(f, Expr::var(&v2)))
            }
            GateKind::And => {
                let f = self.ff();
                let t = self.tt();
                (self.pair(Expr::var(&u2), f), self.pair(t, Expr::var(&v2)))
            }
            GateKind::Or => {
                let t = self.tt();
                let f = self.ff();
                (self.pair(t, Expr::var(&u2)), self.pair(Expr::var(&v2), f))
            }
            _ => unreachable!("not a binary connective"),
        };
        let ff = self.ff();
        let garbage = self.compose_all(vec![Expr::var(&q1), Expr::var(&p2), Expr::var(&q2), ff]);
        let result = self.pair(Expr::var(&p1), garbage);
        let e = self.let_pair(&q1, &q2, Expr::app(Expr::var(&v1), right), result);
        let e = self.let_pair(&p1, &p2, Expr::app(Expr::var(&u1), left), e);
        let e = self.let_pair(&u2, &v2, Expr::var(&b2), e);
        let e = self.let_pair(&u1, &v1, Expr::var(&b1), e);
        Expr::lam(b1, Expr::lam(b2, e))
    }

    pub fn connective(&mut self, c: Connective) -> Expr {
        match c {
            Connective::TT => self.tt(),
            Connective::FF => self.ff(),
            Connective::True => self.boolean(true),
            Connective::False => self.boolean(false),
            Connective::Not => self.not(),
            Connective::Copy(n) => self.copy(n),
            Connective::Implies => self.binary(GateKind::Implies),
            Connective::And => self.binary(GateKind::And),
            Connective::Or => self.binary(GateKind::Or),
            Connective::Compose => self.compose(),
        }
    }

    /// `λb. let ⟨u, v⟩ = b in π1 (u ⟨TW, FW⟩)` where `TW` and `FW` are
    /// fresh copies of `TT` and `FF` labeled `tw` and `fw`.
    pub fn widget(&mut self, tw: Label, fw: Label) -> Expr {
        let b = self.fresh("b");
        let u = self.fresh("u");
        let v = self.fresh("v");
        let a = self.fresh("a");
        let c = self.fresh("c");
        let p = self.fresh("p");
        let proj = Expr::lam(&p, Expr::app(Expr::var(&p), Expr::lam(&a, Expr::lam(c, Expr::var(&a)))));
        let t = self.tt().labeled(tw);
        let f = self.ff().labeled(fw);
        let arg = self.pair(t, f);
        let body = Expr::app(proj, Expr::app(Expr::var(&u), arg));
        let inner = self.let_pair(&u, &v, Expr::var(&b), body);
        Expr::lam(b, inner)
    }

    /// `(Widget arg)^at` and a handle for reading its decision.
    pub fn apply_widget(&mut self, arg: Expr, at: &str) -> (Expr, WidgetHandle) {
        let h = WidgetHandle {
            app: Label::new(at).expect("valid label"),
            tw: Label::new(format!("True_{at}")).expect("valid label"),
            fw: Label::new(format!("False_{at}")).expect("valid label"),
        };
        let w = self.widget(h.tw.clone(), h.fw.clone());
        (Expr::app(w, arg).labeled(h.app.clone()), h)
    }

    /// Linear term for `c`: inputs are bound by `let` to either their
    /// constant Booleans or the terms in `bind`, gates are `let`s in
    /// order, and `finish` receives the output variables.
    pub fn circuit_term(
        &mut self,
        c: &CircuitSpec,
        mut bind: HashMap<String, Expr>,
        finish: impl FnOnce(&mut Self, Vec<Expr>) -> Expr,
    ) -> Result<Expr, CircuitError> {
        c.validate()?;
        let mut var: HashMap<String, String> = HashMap::new();
        for i in &c.inputs {
            let n = self.fresh("w");
            var.insert(i.name.clone(), n);
        }
        for g in &c.gates {
            for o in g.outputs() {
                let n = self.fresh("w");
                var.insert(o, n);
            }
        }
        let outs = c.outputs.iter().map(|o| Expr::var(&var[o])).collect();
        let mut e = finish(self, outs);
        for g in c.gates.iter().rev() {
            let args: Vec<Expr> = g.args.iter().map(|a| Expr::var(&var[a])).collect();
            e = match g.kind {
                GateKind::Copy(m) => {
                    let names: Vec<String> = g.outputs().iter().map(|o| var[o].clone()).collect();
                    let copy = self.copy(m);
                    self.let_tuple(&names, Expr::apps(copy, args), e)
                }
                kind => {
                    let f = match kind {
                        GateKind::Not => self.not(),
                        other => self.binary(other),
                    };
                    let name = var[&g.id].clone();
                    self.let_in(&name, Expr::apps(f, args), e)
                }
            };
        }
        for i in c.inputs.iter().rev() {
            let value = match bind.remove(&i.name) {
                Some(t) => t,
                None => self.boolean(i.value),
            };
            let name = var[&i.name].clone();
            e = self.let_in(&name, value, e);
        }
        Ok(e)
    }
}

/// Locates the flow decision of a compiled widget: whether `tw` or `fw`
/// reaches the widget application `app`. The widget must sit under a chain
/// of `let`s, which fixes the contour it is evaluated in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WidgetHandle {
    pub app: Label,
    pub tw: Label,
    pub fw: Label,
}

impl WidgetHandle {
    /// The contour in which the widget application is evaluated.
    pub fn contour(&self, prog: &Program) -> Contour {
        let target = prog.node_of(&self.app).expect("widget label present");
        let_contour(prog, target)
    }

    fn resolve(&self, prog: &Program) -> (NodeId, NodeId, NodeId, Contour) {
        let id = |l: &Label| prog.node_of(l).expect("widget label present");
        (id(&self.app), id(&self.tw), id(&self.fw), self.contour(prog))
    }

    /// `(tw flows, fw flows)` in an abstract cache.
    pub fn abstract_flows(&self, prog: &Program, cache: &AbstractCache) -> (bool, bool) {
        let (app, tw, fw, ctx) = self.resolve(prog);
        let ctx = crate::kcfa::truncate(&ctx, cache.k());
        match cache.lookup(CacheKey::Label(app), &ctx) {
            None => (false, false),
            Some(set) => (set.iter().any(|c| c.lam == tw), set.iter().any(|c| c.lam == fw)),
        }
    }

    /// The value decided by an exact run, if the widget was reached.
    pub fn exact_value(&self, prog: &Program, cache: &ExactCache) -> Option<bool> {
        let (app, tw, fw, ctx) = self.resolve(prog);
        let c = cache.lookup(CacheKey::Label(app), &ctx)?;
        if c.lam == tw {
            Some(true)
        } else if c.lam == fw {
            Some(false)
        } else {
            None
        }
    }

    /// Values decided in any contour of an exact cache.
    pub fn exact_values(&self, prog: &Program, cache: &ExactCache) -> BTreeSet<bool> {
        let (app, tw, fw, _) = self.resolve(prog);
        cache
            .iter()
            .filter(|(k, _, _)| **k == CacheKey::Label(app))
            .filter_map(|(_, _, c)| (c.lam == tw).then_some(true).or((c.lam == fw).then_some(false)))
            .collect()
    }

    /// The unique value decided by an abstract cache, if exactly one of
    /// `tw`, `fw` flows.
    pub fn abstract_value(&self, prog: &Program, cache: &AbstractCache) -> Option<bool> {
        match self.abstract_flows(prog, cache) {
            (true, false) => Some(true),
            (false, true) => Some(false),
            _ => None,
        }
    }
}

/// Labels of the `(λx. body) e` applications whose bodies enclose
/// `target`, outermost first: the contour `target` runs in when it is only
/// reached through such `let`s.
pub fn let_contour(prog: &Program, target: NodeId) -> Contour {
    let mut ctx = Vec::new();
    let mut n = prog.root();
    while n != target {
        match prog.node(n) {
            Node::Var { .. } => break,
            Node::Lam { body, .. } => n = *body,
            Node::App { fun, arg } => {
                if target >= *arg {
                    n = *arg;
                } else if let Node::Lam { body, .. } = prog.node(*fun) {
                    if target >= *body {
                        ctx.push(n);
                        n = *body;
                    } else {
                        n = *fun;
                    }
                } else {
                    n = *fun;
                }
            }
        }
    }
    Contour::new(ctx)
}

/// Label a generated term and index it.
pub fn into_program(e: Expr) -> Result<Program, crate::Error> {
    let e = assign_labels(&e)?;
    Ok(Program::new(e)?)
}

/// Parse program text in which free gadget names (`True`, `Implies`, ...)
/// stand for their definitions. Returns binder-renaming warnings.
pub fn load_program(text: &str) -> Result<(Program, Vec<String>), crate::Error> {
    let e = expand_builtins(&crate::syntax::parse(text)?);
    let (e, warnings) = crate::syntax::distinct_binders(&e);
    Ok((into_program(e)?, warnings))
}

/// Compile a single-output circuit into `let o = C in Widget o`.
///
/// The widget sits outside the circuit: inside it, the body of a `COPY`
/// unpacking runs in the tuple's call contour, which `let_contour` cannot
/// see.
pub fn compile_circuit(c: &CircuitSpec) -> Result<(Expr, WidgetHandle), CircuitError> {
    if c.outputs.len() != 1 {
        return Err(CircuitError::OutputCount(c.outputs.len()));
    }
    let mut g = Gadgets::new();
    let circuit = g.circuit_term(c, HashMap::new(), |_, mut outs| outs.remove(0))?;
    let o = g.fresh("o");
    let (w, h) = g.apply_widget(Expr::var(&o), "W");
    Ok((g.let_in(&o, circuit, w), h))
}

/// Replace free occurrences of gadget names (`True`, `Not`, `Copy3`, ...)
/// with their definitions. Unknown free names are left alone.
pub fn expand_builtins(e: &Expr) -> Expr {
    let free = free_vars(e);
    if !free.iter().any(|n| Connective::from_name(n).is_some()) {
        return e.clone();
    }
    let mut x = Expander {
        g: Gadgets::new(),
        taken: e.labels().into_iter().map(|l| l.as_str().to_owned()).collect(),
        seen: HashMap::new(),
    };
    x.expand(e, &mut Vec::new())
}

struct Expander {
    g: Gadgets,
    taken: BTreeSet<String>,
    seen: HashMap<String, usize>,
}

impl Expander {
    /// `True`, `True_2`, ... for unlabeled occurrences, skipping labels the
    /// program already uses.
    fn name_for(&mut self, name: &str) -> Option<Label> {
        loop {
            let n = self.seen.entry(name.to_owned()).or_insert(0);
            *n += 1;
            let candidate = if *n == 1 { name.to_owned() } else { format!("{name}_{n}") };
            if self.taken.insert(candidate.clone()) {
                return Label::new(candidate).ok();
            }
        }
    }

    fn expand(&mut self, e: &Expr, bound: &mut Vec<String>) -> Expr {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
            let mut out = match &e.kind {
                ExprKind::Var(x) => match Connective::from_name(x) {
                    Some(c) if !bound.contains(x) => {
                        let mut d = self.g.connective(c);
                        d.label = e.label.clone().or_else(|| self.name_for(x));
                        return d;
                    }
                    _ => Expr::var(x.clone()),
                },
                ExprKind::Lam(x, b) => {
                    bound.push(x.clone());
                    let b = self.expand(b, bound);
                    bound.pop();
                    Expr::lam(x.clone(), b)
                }
                ExprKind::App(f, a) => Expr::app(self.expand(f, bound), self.expand(a, bound)),
            };
            out.label = e.label.clone();
            out
        })
    }
}

/// Token closures that can reach a position, classified as `TT`
/// (`true`) or `FF` (`false`).
pub fn token_values(prog: &Program, closures: &[Closure]) -> BTreeSet<bool> {
    closures.iter().filter_map(|c| token_shape(prog, c.lam)).collect()
}

/// `Some(true)` for `λp. p (λx.λy.λz. z x y)`, `Some(false)` for the
/// swapped variant, `None` otherwise.
pub fn token_shape(prog: &Program, lam: NodeId) -> Option<bool> {
    let Node::Lam { param: p, body, .. } = prog.node(lam) else { return None };
    let Node::App { fun, arg } = prog.node(*body) else { return None };
    if !matches!(prog.node(*fun), Node::Var { var } if var == p) {
        return None;
    }
    let Node::Lam { param: x, body, .. } = prog.node(*arg) else { return None };
    let Node::Lam { param: y, body, .. } = prog.node(*body) else { return None };
    let Node::Lam { param: z, body, .. } = prog.node(*body) else { return None };
    let Node::App { fun, arg: second } = prog.node(*body) else { return None };
    let Node::App { fun: head, arg: first } = prog.node(*fun) else { return None };
    if !matches!(prog.node(*head), Node::Var { var } if var == z) {
        return None;
    }
    let var = |n: NodeId| match prog.node(n) {
        Node::Var { var } => Some(*var),
        _ => None,
    };
    match (var(*first)?, var(*second)?) {
        (a, b) if a == *x && b == *y => Some(true),
        (a, b) if a == *y && b == *x => Some(false),
        _ => None,
    }
}

/// Boolean values represented by pair closures `λz. z A B`: the shape of
/// whatever `A` denotes decides. `lookup` resolves a variable in a contour.
pub fn boolean_values(
    prog: &Program,
    pairs: &[Closure],
    mut lookup: impl FnMut(CacheKey, &Contour) -> Vec<Closure>,
) -> BTreeSet<bool> {
    let mut out = BTreeSet::new();
    for c in pairs {
        let Some(first) = pair_first(prog, c.lam) else { continue };
        let firsts = match prog.node(first) {
            Node::Var { var } => match c.lookup(*var) {
                Some(ctx) => lookup(CacheKey::Var(*var), ctx),
                None => Vec::new(),
            },
            Node::Lam { .. } => vec![Closure { lam: first, env: Vec::new() }],
            Node::App { .. } => Vec::new(),
        };
        out.extend(token_values(prog, &firsts));
    }
    out
}

fn pair_first(prog: &Program, lam: NodeId) -> Option<NodeId> {
    let Node::Lam { param: z, body, .. } = prog.node(lam) else { return None };
    let Node::App { fun, .. } = prog.node(*body) else { return None };
    let Node::App { fun: head, arg } = prog.node(*fun) else { return None };
    matches!(prog.node(*head), Node::Var { var } if var == z).then_some(*arg)
}

/// Boolean values at `(key, contour)` of an abstract cache.
pub fn abstract_booleans(prog: &Program, cache: &AbstractCache, key: CacheKey, ctx: &Contour) -> BTreeSet<bool> {
    let pairs: Vec<Closure> = cache.lookup(key, ctx).map(|s| s.iter().cloned().collect()).unwrap_or_default();
    boolean_values(prog, &pairs, |k, c| cache.lookup(k, c).map(|s| s.iter().cloned().collect()).unwrap_or_default())
}

/// Boolean value at `(key, contour)` of an exact cache.
pub fn exact_boolean(prog: &Program, cache: &ExactCache, key: CacheKey, ctx: &Contour) -> Option<bool> {
    let pair = cache.lookup(key, ctx)?.clone();
    let vals = boolean_values(prog, &[pair], |k, c| cache.lookup(k, c).cloned().into_iter().collect());
    vals.into_iter().next()
}
