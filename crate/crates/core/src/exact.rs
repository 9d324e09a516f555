//! The instrumented evaluator.
//!
//! `E[x^l] ce d` copies the binding of `x` into `(l, d)`; `E[(\x.e)^l] ce d`
//! stores the abstraction closed over `ce` restricted to its free variables;
//! an application evaluates operator then operand, binds the parameter at
//! `d·l`, evaluates the body there and copies the body's result to `(l, d)`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::syntax::{Label, Node, NodeId, Program, VarId};

/// A cache key: a label (subterm result) or a variable (binding).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CacheKey {
    Label(NodeId),
    Var(VarId),
}

impl CacheKey {
    pub fn kind(&self) -> &'static str {
        match self {
            CacheKey::Label(_) => "label",
            CacheKey::Var(_) => "var",
        }
    }

    pub fn name<'p>(&self, prog: &'p Program) -> &'p str {
        match *self {
            CacheKey::Label(n) => prog.label(n).as_str(),
            CacheKey::Var(v) => prog.var_name(v),
        }
    }

    pub fn parse(prog: &Program, kind: &str, key: &str) -> Option<CacheKey> {
        match kind {
            "label" => prog.node_of_str(key).map(CacheKey::Label),
            "var" => prog.var_of(key).map(CacheKey::Var),
            _ => None,
        }
    }
}

/// A sequence of application labels, oldest first. The empty contour is ε.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Contour(Arc<[NodeId]>);

impl Contour {
    pub fn empty() -> Self {
        Contour(Arc::from(Vec::new()))
    }

    pub fn new(labels: impl Into<Vec<NodeId>>) -> Self {
        Contour(Arc::from(labels.into()))
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self · label`
    pub fn push(&self, label: NodeId) -> Contour {
        let mut v = self.0.to_vec();
        v.push(label);
        Contour::new(v)
    }

    /// The rightmost (most recent) `k` labels.
    pub fn truncate(&self, k: usize) -> Contour {
        if self.len() <= k {
            self.clone()
        } else {
            Contour::new(&self.0[self.len() - k..])
        }
    }

    /// Dot-joined label text; ε renders as the empty string.
    pub fn display(&self, prog: &Program) -> String {
        self.0.iter().map(|&n| prog.label(n).as_str()).collect::<Vec<_>>().join(".")
    }

    pub fn parse(prog: &Program, text: &str) -> Result<Contour, String> {
        let text = text.trim();
        if text.is_empty() || text == "ε" {
            return Ok(Contour::empty());
        }
        text.split('.')
            .map(|l| {
                prog.node_of_str(l.trim()).ok_or_else(|| format!("unknown label {l:?} in contour"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Contour::new)
    }
}

impl From<&[NodeId]> for Contour {
    fn from(s: &[NodeId]) -> Self {
        Contour::new(s)
    }
}

impl fmt::Debug for Contour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("ε");
        }
        let parts: Vec<String> = self.0.iter().map(|n| format!("#{n}")).collect();
        f.write_str(&parts.join("."))
    }
}

/// A λ node closed by a contour environment over exactly its free variables
/// (sorted by variable id).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Closure {
    pub lam: NodeId,
    pub env: Vec<(VarId, Contour)>,
}

impl Closure {
    pub fn closed(lam: NodeId) -> Self {
        Closure { lam, env: Vec::new() }
    }

    pub fn lookup(&self, v: VarId) -> Option<&Contour> {
        self.env.binary_search_by_key(&v, |(x, _)| *x).ok().map(|i| &self.env[i].1)
    }

    pub fn truncate(&self, k: usize) -> Closure {
        Closure {
            lam: self.lam,
            env: self.env.iter().map(|(v, c)| (*v, c.truncate(k))).collect(),
        }
    }

    pub fn max_contour_len(&self) -> usize {
        self.env.iter().map(|(_, c)| c.len()).max().unwrap_or(0)
    }
}

/// Evaluator step budget: one unit per clause invocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fuel(pub u64);

impl Default for Fuel {
    fn default() -> Self {
        Fuel(1_000_000)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("fuel exhausted after {0} evaluation steps")]
    FuelExhausted(u64),
    #[error("stuck application at label {0}: operator holds no closure")]
    StuckApplication(Label),
    #[error("internal error: {0}")]
    Internal(String),
}

/// The exact flow cache: one closure per `(key, contour)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactCache {
    entries: HashMap<(CacheKey, Contour), Closure>,
}

impl ExactCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, key: CacheKey, contour: &Contour) -> Option<&Closure> {
        self.entries.get(&(key, contour.clone()))
    }

    pub fn insert(&mut self, key: CacheKey, contour: Contour, value: Closure) -> Option<Closure> {
        self.entries.insert((key, contour), value)
    }

    pub fn remove(&mut self, key: CacheKey, contour: &Contour) -> Option<Closure> {
        self.entries.remove(&(key, contour.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in key order.
    pub fn entries(&self) -> Vec<(&CacheKey, &Contour, &Closure)> {
        let mut v: Vec<_> = self.entries.iter().map(|((k, c), v)| (k, c, v)).collect();
        v.sort();
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CacheKey, &Contour, &Closure)> {
        self.entries.iter().map(|((k, c), v)| (k, c, v))
    }

    /// Longest contour appearing in a key or a stored environment.
    pub fn max_depth(&self) -> usize {
        self.iter().map(|(_, c, v)| c.len().max(v.max_contour_len())).max().unwrap_or(0)
    }
}

/// `exact_lookup` in free-function form.
pub fn exact_lookup<'c>(cache: &'c ExactCache, key: CacheKey, contour: &Contour) -> Option<&'c Closure> {
    cache.lookup(key, contour)
}

type CtxId = u32;
type EnvId = u32;
const EPSILON: CtxId = 0;

/// Contours as a trie so that `d·l` is O(1).
#[derive(Default)]
struct ContourTrie {
    parent: Vec<(CtxId, NodeId)>,
    children: HashMap<(CtxId, NodeId), CtxId>,
}

impl ContourTrie {
    fn new() -> Self {
        ContourTrie { parent: vec![(EPSILON, 0)], children: HashMap::new() }
    }

    fn push(&mut self, ctx: CtxId, label: NodeId) -> CtxId {
        let next = self.parent.len() as CtxId;
        *self.children.entry((ctx, label)).or_insert_with(|| {
            self.parent.push((ctx, label));
            next
        })
    }

    fn materialize(&self, mut ctx: CtxId) -> Vec<NodeId> {
        let mut v = Vec::new();
        while ctx != EPSILON {
            let (p, l) = self.parent[ctx as usize];
            v.push(l);
            ctx = p;
        }
        v.reverse();
        v
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Value {
    lam: NodeId,
    env: EnvId,
}

/// Scope of an evaluation: the enclosing closure's environment plus the
/// parameter binding.
#[derive(Clone, Copy)]
struct Scope {
    lam: Option<NodeId>,
    env: EnvId,
    param_ctx: CtxId,
}

struct Evaluator<'p> {
    prog: &'p Program,
    trie: ContourTrie,
    envs: Vec<Box<[CtxId]>>,
    env_ids: HashMap<Box<[CtxId]>, EnvId>,
    cache: HashMap<(CacheKey, CtxId), Value>,
    steps: u64,
    fuel: u64,
}

impl<'p> Evaluator<'p> {
    fn intern_env(&mut self, env: Vec<CtxId>) -> EnvId {
        if let Some(&id) = self.env_ids.get(env.as_slice()) {
            return id;
        }
        let id = self.envs.len() as EnvId;
        let b: Box<[CtxId]> = env.into_boxed_slice();
        self.envs.push(b.clone());
        self.env_ids.insert(b, id);
        id
    }

    fn lookup_var(&self, scope: Scope, v: VarId) -> CtxId {
        let lam = scope.lam.expect("variable in scope of a binder");
        match self.prog.node(lam) {
            Node::Lam { param, free, .. } => {
                if *param == v {
                    scope.param_ctx
                } else {
                    let i = free.binary_search(&v).expect("free variable captured");
                    self.envs[scope.env as usize][i]
                }
            }
            _ => unreachable!(),
        }
    }

    fn write(&mut self, key: CacheKey, ctx: CtxId, v: Value) -> Result<(), EvalError> {
        match self.cache.insert((key, ctx), v) {
            Some(old) if old != v => Err(EvalError::Internal(format!(
                "cache entry ({}, {:?}) rebound",
                key.name(self.prog),
                self.trie.materialize(ctx)
            ))),
            _ => Ok(()),
        }
    }

    fn eval(&mut self, node: NodeId, scope: Scope, ctx: CtxId) -> Result<(), EvalError> {
        stacker::maybe_grow(128 * 1024, 4 * 1024 * 1024, || self.eval_inner(node, scope, ctx))
    }

    fn eval_inner(&mut self, node: NodeId, scope: Scope, ctx: CtxId) -> Result<(), EvalError> {
        if self.steps >= self.fuel {
            return Err(EvalError::FuelExhausted(self.steps));
        }
        self.steps += 1;
        let prog = self.prog;
        match prog.node(node) {
            Node::Var { var } => {
                let bound = self.lookup_var(scope, *var);
                let v = *self.cache.get(&(CacheKey::Var(*var), bound)).ok_or_else(|| {
                    EvalError::Internal(format!("unbound lookup of {}", prog.var_name(*var)))
                })?;
                self.write(CacheKey::Label(node), ctx, v)
            }
            Node::Lam { free, .. } => {
                let env: Vec<CtxId> = free.iter().map(|&v| self.lookup_var(scope, v)).collect();
                let env = self.intern_env(env);
                self.write(CacheKey::Label(node), ctx, Value { lam: node, env })
            }
            Node::App { fun, arg } => {
                let (fun, arg) = (*fun, *arg);
                self.eval(fun, scope, ctx)?;
                self.eval(arg, scope, ctx)?;
                let f = *self
                    .cache
                    .get(&(CacheKey::Label(fun), ctx))
                    .ok_or_else(|| EvalError::StuckApplication(prog.label(node).clone()))?;
                let (param, body) = match prog.node(f.lam) {
                    Node::Lam { param, body, .. } => (*param, *body),
                    _ => return Err(EvalError::StuckApplication(prog.label(node).clone())),
                };
                let inner = self.trie.push(ctx, node);
                let a = self.cache[&(CacheKey::Label(arg), ctx)];
                self.write(CacheKey::Var(param), inner, a)?;
                let body_scope = Scope { lam: Some(f.lam), env: f.env, param_ctx: inner };
                self.eval(body, body_scope, inner)?;
                let r = *self.cache.get(&(CacheKey::Label(body), inner)).ok_or_else(|| {
                    EvalError::Internal("body produced no value".into())
                })?;
                self.write(CacheKey::Label(node), ctx, r)
            }
        }
    }

    fn finish(self) -> ExactCache {
        let mut contours: Vec<Option<Contour>> = vec![None; self.trie.parent.len()];
        let mut contour = |ctx: CtxId| -> Contour {
            contours[ctx as usize]
                .get_or_insert_with(|| Contour::new(self.trie.materialize(ctx)))
                .clone()
        };
        let mut entries = HashMap::with_capacity(self.cache.len());
        for (&(key, ctx), v) in &self.cache {
            let free = self.prog.free_of(v.lam);
            let env = free
                .iter()
                .zip(self.envs[v.env as usize].iter())
                .map(|(&x, &c)| (x, contour(c)))
                .collect();
            entries.insert((key, contour(ctx)), Closure { lam: v.lam, env });
        }
        ExactCache { entries }
    }
}

/// Evaluate a closed program from the empty environment and contour ε.
pub fn eval_exact(prog: &Program, fuel: Fuel) -> Result<ExactCache, EvalError> {
    let mut ev = Evaluator {
        prog,
        trie: ContourTrie::new(),
        envs: Vec::new(),
        env_ids: HashMap::new(),
        cache: HashMap::new(),
        steps: 0,
        fuel: fuel.0,
    };
    let top = ev.intern_env(Vec::new());
    ev.eval(prog.root(), Scope { lam: None, env: top, param_ctx: EPSILON }, EPSILON)?;
    Ok(ev.finish())
}

/// Evaluate and also report the number of clause invocations used.
pub fn eval_exact_counted(prog: &Program, fuel: Fuel) -> Result<(ExactCache, u64), EvalError> {
    let mut ev = Evaluator {
        prog,
        trie: ContourTrie::new(),
        envs: Vec::new(),
        env_ids: HashMap::new(),
        cache: HashMap::new(),
        steps: 0,
        fuel: fuel.0,
    };
    let top = ev.intern_env(Vec::new());
    ev.eval(prog.root(), Scope { lam: None, env: top, param_ctx: EPSILON }, EPSILON)?;
    let steps = ev.steps;
    Ok((ev.finish(), steps))
}

/// The first acceptability clause found violated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub clause: &'static str,
    pub label: Label,
    pub contour: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} clause fails at ({}, \"{}\"): {}", self.clause, self.label, self.contour, self.detail)
    }
}

/// A contour environment for the judgment `C |=_ce^d e`.
pub(crate) type ScopeEnv = Vec<(VarId, Contour)>;

pub(crate) fn scope_lookup(env: &ScopeEnv, v: VarId) -> Option<&Contour> {
    env.iter().find(|(x, _)| *x == v).map(|(_, c)| c)
}

pub(crate) fn restrict(prog: &Program, env: &ScopeEnv, lam: NodeId) -> Option<Vec<(VarId, Contour)>> {
    prog.free_of(lam)
        .iter()
        .map(|&v| scope_lookup(env, v).map(|c| (v, c.clone())))
        .collect()
}

pub(crate) fn extend(prog: &Program, clo: &Closure, param_ctx: Contour) -> ScopeEnv {
    let mut env = clo.env.clone();
    if let Node::Lam { param, .. } = prog.node(clo.lam) {
        env.push((*param, param_ctx));
    }
    env
}

struct ExactChecker<'a> {
    prog: &'a Program,
    cache: &'a ExactCache,
    seen: HashSet<(NodeId, ScopeEnv, Contour)>,
}

impl<'a> ExactChecker<'a> {
    fn fail(&self, clause: &'static str, node: NodeId, ctx: &Contour, detail: impl Into<String>) -> Violation {
        Violation {
            clause,
            label: self.prog.label(node).clone(),
            contour: ctx.display(self.prog),
            detail: detail.into(),
        }
    }

    fn get(&self, key: CacheKey, ctx: &Contour) -> Option<&'a Closure> {
        self.cache.lookup(key, ctx)
    }

    fn same(&self, a: CacheKey, ac: &Contour, b: CacheKey, bc: &Contour) -> bool {
        matches!((self.get(a, ac), self.get(b, bc)), (Some(x), Some(y)) if x == y)
    }

    fn check(&mut self, node: NodeId, env: &ScopeEnv, ctx: &Contour) -> Result<(), Violation> {
        stacker::maybe_grow(128 * 1024, 4 * 1024 * 1024, || self.check_inner(node, env, ctx))
    }

    fn check_inner(&mut self, node: NodeId, env: &ScopeEnv, ctx: &Contour) -> Result<(), Violation> {
        // judgments already in progress (or settled) hold coinductively
        if !self.seen.insert((node, env.clone(), ctx.clone())) {
            return Ok(());
        }
        let prog = self.prog;
        let here = CacheKey::Label(node);
        match prog.node(node) {
            Node::Var { var } => {
                let bound = scope_lookup(env, *var)
                    .ok_or_else(|| self.fail("variable", node, ctx, "variable not in environment"))?;
                if !self.same(CacheKey::Var(*var), bound, here, ctx) {
                    return Err(self.fail("variable", node, ctx, format!(
                        "C({}, {}) differs from C(label, contour)",
                        prog.var_name(*var),
                        bound.display(prog)
                    )));
                }
            }
            Node::Lam { .. } => {
                let want = restrict(prog, env, node).map(|env| Closure { lam: node, env });
                if want.is_none() || self.get(here, ctx) != want.as_ref() {
                    return Err(self.fail("abstraction", node, ctx, "closure missing or different"));
                }
            }
            Node::App { fun, arg } => {
                let (fun, arg) = (*fun, *arg);
                self.check(fun, env, ctx)?;
                self.check(arg, env, ctx)?;
                let clo = self
                    .get(CacheKey::Label(fun), ctx)
                    .ok_or_else(|| self.fail("application", node, ctx, "operator has no value"))?;
                let (param, body) = match prog.node(clo.lam) {
                    Node::Lam { param, body, .. } => (*param, *body),
                    _ => return Err(self.fail("application", node, ctx, "operator is not a λ")),
                };
                let inner = ctx.push(node);
                if !self.same(CacheKey::Label(arg), ctx, CacheKey::Var(param), &inner) {
                    return Err(self.fail("application", node, ctx, "argument not bound to parameter"));
                }
                let body_env = extend(prog, clo, inner.clone());
                self.check(body, &body_env, &inner)?;
                if !self.same(CacheKey::Label(body), &inner, here, ctx) {
                    return Err(self.fail("application", node, ctx, "body result not copied"));
                }
            }
        }
        Ok(())
    }
}

/// Decide `C |=_{}^ε program` for an exact cache.
pub fn check_exact_acceptable(cache: &ExactCache, prog: &Program) -> Result<(), Violation> {
    let mut c = ExactChecker { prog, cache, seen: HashSet::new() };
    c.check(prog.root(), &Vec::new(), &Contour::empty())
}
