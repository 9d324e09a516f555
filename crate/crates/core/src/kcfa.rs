//! The kCFA abstract interpreter.
//!
//! Uniform kCFA: the cache maps `(label or variable, contour)` to a set of
//! closures, every contour truncated to its rightmost `k` labels. Two solvers
//! compute the same least cache:
//!
//! * [`Strategy::Worklist`] propagates closures along subset edges and
//!   re-fires call sites when their operator set grows.
//! * [`Strategy::Passes`] re-runs a full structural pass over the program
//!   until the cache stops growing, skipping `(term, env, contour)` triples
//!   already visited in the current pass.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::exact::{extend, restrict, scope_lookup, CacheKey, Closure, Contour, ExactCache, ScopeEnv, Violation};
use crate::syntax::{Node, NodeId, Program, VarId};

/// `⌈d⌉_k`: the rightmost `k` labels of `d`.
pub fn truncate(delta: &Contour, k: usize) -> Contour {
    delta.truncate(k)
}

/// An abstract cache: sets of closures per `(key, contour)`. Empty sets are
/// never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractCache {
    k: usize,
    entries: BTreeMap<(CacheKey, Contour), BTreeSet<Closure>>,
}

impl AbstractCache {
    pub fn new(k: usize) -> Self {
        AbstractCache { k, entries: BTreeMap::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lookup(&self, key: CacheKey, contour: &Contour) -> Option<&BTreeSet<Closure>> {
        self.entries.get(&(key, contour.clone()))
    }

    /// Insert one closure; returns whether the cache grew.
    pub fn insert(&mut self, key: CacheKey, contour: Contour, value: Closure) -> bool {
        self.entries.entry((key, contour)).or_default().insert(value)
    }

    /// Remove one closure, dropping the key when its set becomes empty.
    pub fn remove(&mut self, key: CacheKey, contour: &Contour, value: &Closure) -> bool {
        let k = (key, contour.clone());
        let Some(set) = self.entries.get_mut(&k) else { return false };
        let hit = set.remove(value);
        if set.is_empty() {
            self.entries.remove(&k);
        }
        hit
    }

    pub fn remove_key(&mut self, key: CacheKey, contour: &Contour) -> Option<BTreeSet<Closure>> {
        self.entries.remove(&(key, contour.clone()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&CacheKey, &Contour, &BTreeSet<Closure>)> {
        self.entries.iter().map(|((k, c), v)| (k, c, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &(CacheKey, Contour)> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All contours stored under `key`.
    pub fn contours_of(&self, key: CacheKey) -> Vec<&Contour> {
        self.entries.keys().filter(|(k, _)| *k == key).map(|(_, c)| c).collect()
    }

    /// Union of the sets stored under `key` across all contours.
    pub fn union_over_contours(&self, key: CacheKey) -> BTreeSet<&Closure> {
        self.entries
            .iter()
            .filter(|((k, _), _)| *k == key)
            .flat_map(|(_, s)| s.iter())
            .collect()
    }
}

/// `abstract_lookup`: the stored set, or the empty set.
pub fn abstract_lookup(cache: &AbstractCache, key: CacheKey, contour: &Contour) -> BTreeSet<Closure> {
    cache.lookup(key, contour).cloned().unwrap_or_default()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AnalysisStats {
    /// Solver iterations: worklist steps, or full passes for the pass solver.
    pub iterations: u64,
    pub cache_keys: usize,
    pub total_closures: usize,
    pub max_set: usize,
}

/// Size statistics of a cache (`iterations` is left at zero).
pub fn cache_stats(cache: &AbstractCache) -> AnalysisStats {
    let mut s = AnalysisStats::default();
    for (_, _, set) in cache.entries() {
        s.cache_keys += 1;
        s.total_closures += set.len();
        s.max_set = s.max_set.max(set.len());
    }
    s
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("analysis budget of {0} iterations exhausted before reaching a fixpoint")]
    BudgetExhausted(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    #[default]
    Worklist,
    Passes,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AnalysisOptions {
    pub strategy: Strategy,
    pub budget: Option<u64>,
}

/// Least kCFA cache of a closed program.
pub fn analyze(
    prog: &Program,
    k: usize,
    budget: Option<u64>,
) -> Result<(AbstractCache, AnalysisStats), AnalysisError> {
    analyze_with(prog, k, AnalysisOptions { strategy: Strategy::Worklist, budget })
}

pub fn analyze_with(
    prog: &Program,
    k: usize,
    opts: AnalysisOptions,
) -> Result<(AbstractCache, AnalysisStats), AnalysisError> {
    let mut st = Interner::new(prog, k);
    let iterations = match opts.strategy {
        Strategy::Worklist => Worklist::new(&mut st, opts.budget).run()?,
        Strategy::Passes => Passes::new(&mut st, opts.budget).run()?,
    };
    let cache = st.finish();
    let mut stats = cache_stats(&cache);
    stats.iterations = iterations;
    Ok((cache, stats))
}

type CId = u32;
type EnvId = u32;
type ClosId = u32;
type KId = u32;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Scope {
    lam: Option<NodeId>,
    env: EnvId,
    param_ctx: CId,
}

/// Interned contours, environments, closures and keys shared by both solvers.
struct Interner<'p> {
    prog: &'p Program,
    k: usize,
    ctxs: Vec<Box<[NodeId]>>,
    ctx_ids: HashMap<Box<[NodeId]>, CId>,
    envs: Vec<Box<[CId]>>,
    env_ids: HashMap<Box<[CId]>, EnvId>,
    clos: Vec<(NodeId, EnvId)>,
    clo_ids: HashMap<(NodeId, EnvId), ClosId>,
    keys: Vec<(CacheKey, CId)>,
    key_ids: HashMap<(CacheKey, CId), KId>,
    sets: Vec<HashSet<ClosId>>,
    vals: Vec<Vec<ClosId>>,
}

impl<'p> Interner<'p> {
    fn new(prog: &'p Program, k: usize) -> Self {
        let mut s = Interner {
            prog,
            k,
            ctxs: Vec::new(),
            ctx_ids: HashMap::new(),
            envs: Vec::new(),
            env_ids: HashMap::new(),
            clos: Vec::new(),
            clo_ids: HashMap::new(),
            keys: Vec::new(),
            key_ids: HashMap::new(),
            sets: Vec::new(),
            vals: Vec::new(),
        };
        s.ctx(Vec::new());
        s.env(Vec::new());
        s
    }

    fn ctx(&mut self, labels: Vec<NodeId>) -> CId {
        if let Some(&id) = self.ctx_ids.get(labels.as_slice()) {
            return id;
        }
        let id = self.ctxs.len() as CId;
        let b = labels.into_boxed_slice();
        self.ctxs.push(b.clone());
        self.ctx_ids.insert(b, id);
        id
    }

    /// `⌈d·l⌉_k`
    fn push_trunc(&mut self, ctx: CId, label: NodeId) -> CId {
        let cur = &self.ctxs[ctx as usize];
        let mut v: Vec<NodeId> = cur.iter().copied().chain(std::iter::once(label)).collect();
        if v.len() > self.k {
            v.drain(..v.len() - self.k);
        }
        self.ctx(v)
    }

    fn env(&mut self, env: Vec<CId>) -> EnvId {
        if let Some(&id) = self.env_ids.get(env.as_slice()) {
            return id;
        }
        let id = self.envs.len() as EnvId;
        let b = env.into_boxed_slice();
        self.envs.push(b.clone());
        self.env_ids.insert(b, id);
        id
    }

    fn closure(&mut self, lam: NodeId, env: EnvId) -> ClosId {
        let next = self.clos.len() as ClosId;
        *self.clo_ids.entry((lam, env)).or_insert_with(|| {
            self.clos.push((lam, env));
            next
        })
    }

    fn key(&mut self, key: CacheKey, ctx: CId) -> KId {
        let next = self.keys.len() as KId;
        let id = *self.key_ids.entry((key, ctx)).or_insert(next);
        if id == next {
            self.keys.push((key, ctx));
            self.sets.push(HashSet::new());
            self.vals.push(Vec::new());
        }
        id
    }

    fn lookup_var(&self, scope: Scope, v: VarId) -> CId {
        let lam = scope.lam.expect("variable under a binder");
        match self.prog.node(lam) {
            Node::Lam { param, free, .. } => {
                if *param == v {
                    scope.param_ctx
                } else {
                    let i = free.binary_search(&v).expect("captured free variable");
                    self.envs[scope.env as usize][i]
                }
            }
            _ => unreachable!(),
        }
    }

    fn make_closure(&mut self, lam: NodeId, scope: Scope) -> ClosId {
        let env: Vec<CId> =
            self.prog.free_of(lam).iter().map(|&v| self.lookup_var(scope, v)).collect();
        let env = self.env(env);
        self.closure(lam, env)
    }

    fn add_value(&mut self, k: KId, c: ClosId) -> bool {
        if self.sets[k as usize].insert(c) {
            self.vals[k as usize].push(c);
            true
        } else {
            false
        }
    }

    fn finish(self) -> AbstractCache {
        let contours: Vec<Contour> = self.ctxs.iter().map(|c| Contour::new(c.to_vec())).collect();
        let closures: Vec<Closure> = self
            .clos
            .iter()
            .map(|&(lam, env)| Closure {
                lam,
                env: self
                    .prog
                    .free_of(lam)
                    .iter()
                    .zip(self.envs[env as usize].iter())
                    .map(|(&v, &c)| (v, contours[c as usize].clone()))
                    .collect(),
            })
            .collect();
        let mut cache = AbstractCache::new(self.k);
        for (i, &(key, ctx)) in self.keys.iter().enumerate() {
            if self.vals[i].is_empty() {
                continue;
            }
            let set: BTreeSet<Closure> =
                self.vals[i].iter().map(|&c| closures[c as usize].clone()).collect();
            cache.entries.insert((key, contours[ctx as usize].clone()), set);
        }
        cache
    }
}

struct Site {
    app: NodeId,
    arg: NodeId,
    ctx: CId,
    inner: CId,
}

struct Worklist<'a, 'p> {
    st: &'a mut Interner<'p>,
    budget: Option<u64>,
    steps: u64,
    succ: Vec<Vec<KId>>,
    watch: Vec<Vec<usize>>,
    edges: HashSet<(KId, KId)>,
    sites: Vec<Site>,
    site_ids: HashMap<(NodeId, CId), usize>,
    triples: HashSet<(NodeId, Scope, CId)>,
    todo: Vec<(NodeId, Scope, CId)>,
    work: VecDeque<(KId, ClosId)>,
}

impl<'a, 'p> Worklist<'a, 'p> {
    fn new(st: &'a mut Interner<'p>, budget: Option<u64>) -> Self {
        Worklist {
            st,
            budget,
            steps: 0,
            succ: Vec::new(),
            watch: Vec::new(),
            edges: HashSet::new(),
            sites: Vec::new(),
            site_ids: HashMap::new(),
            triples: HashSet::new(),
            todo: Vec::new(),
            work: VecDeque::new(),
        }
    }

    fn key(&mut self, key: CacheKey, ctx: CId) -> KId {
        let id = self.st.key(key, ctx);
        if self.succ.len() <= id as usize {
            self.succ.resize_with(id as usize + 1, Vec::new);
            self.watch.resize_with(id as usize + 1, Vec::new);
        }
        id
    }

    fn add_value(&mut self, k: KId, c: ClosId) {
        if self.st.add_value(k, c) {
            self.work.push_back((k, c));
        }
    }

    fn add_edge(&mut self, from: KId, to: KId) {
        if from == to || !self.edges.insert((from, to)) {
            return;
        }
        self.succ[from as usize].push(to);
        let n = self.st.vals[from as usize].len();
        for i in 0..n {
            let c = self.st.vals[from as usize][i];
            self.add_value(to, c);
        }
    }

    fn call(&mut self, site: usize, c: ClosId) {
        let (lam, env) = self.st.clos[c as usize];
        let (param, body) = match self.st.prog.node(lam) {
            Node::Lam { param, body, .. } => (*param, *body),
            _ => unreachable!("only abstractions are stored"),
        };
        let Site { app, arg, ctx, inner } = self.sites[site];
        let from = self.key(CacheKey::Label(arg), ctx);
        let to = self.key(CacheKey::Var(param), inner);
        self.add_edge(from, to);
        self.visit(body, Scope { lam: Some(lam), env, param_ctx: inner }, inner);
        let from = self.key(CacheKey::Label(body), inner);
        let to = self.key(CacheKey::Label(app), ctx);
        self.add_edge(from, to);
    }

    fn visit(&mut self, node: NodeId, scope: Scope, ctx: CId) {
        if self.triples.insert((node, scope, ctx)) {
            self.todo.push((node, scope, ctx));
        }
    }

    fn expand(&mut self, node: NodeId, scope: Scope, ctx: CId) {
        match self.st.prog.node(node) {
            Node::Var { var } => {
                let bound = self.st.lookup_var(scope, *var);
                let from = self.key(CacheKey::Var(*var), bound);
                let to = self.key(CacheKey::Label(node), ctx);
                self.add_edge(from, to);
            }
            Node::Lam { .. } => {
                let c = self.st.make_closure(node, scope);
                let k = self.key(CacheKey::Label(node), ctx);
                self.add_value(k, c);
            }
            Node::App { fun, arg } => {
                let (fun, arg) = (*fun, *arg);
                self.visit(arg, scope, ctx);
                self.visit(fun, scope, ctx);
                if self.site_ids.contains_key(&(node, ctx)) {
                    return;
                }
                let inner = self.st.push_trunc(ctx, node);
                let site = self.sites.len();
                self.sites.push(Site { app: node, arg, ctx, inner });
                self.site_ids.insert((node, ctx), site);
                let op = self.key(CacheKey::Label(fun), ctx);
                self.watch[op as usize].push(site);
                let n = self.st.vals[op as usize].len();
                for i in 0..n {
                    let c = self.st.vals[op as usize][i];
                    self.call(site, c);
                }
            }
        }
    }

    fn tick(&mut self) -> Result<(), AnalysisError> {
        self.steps += 1;
        match self.budget {
            Some(b) if self.steps > b => Err(AnalysisError::BudgetExhausted(b)),
            _ => Ok(()),
        }
    }

    fn run(mut self) -> Result<u64, AnalysisError> {
        let top = Scope { lam: None, env: 0, param_ctx: 0 };
        self.visit(self.st.prog.root(), top, 0);
        loop {
            if let Some((node, scope, ctx)) = self.todo.pop() {
                self.tick()?;
                self.expand(node, scope, ctx);
            } else if let Some((k, c)) = self.work.pop_front() {
                self.tick()?;
                let n = self.succ[k as usize].len();
                for i in 0..n {
                    let to = self.succ[k as usize][i];
                    self.add_value(to, c);
                }
                let m = self.watch[k as usize].len();
                for i in 0..m {
                    let site = self.watch[k as usize][i];
                    self.call(site, c);
                }
            } else {
                break;
            }
        }
        Ok(self.steps)
    }
}

/// Chaotic iteration of full passes, closest to the clause-by-clause
/// definition of the abstract interpreter.
struct Passes<'a, 'p> {
    st: &'a mut Interner<'p>,
    budget: Option<u64>,
    visited: HashSet<(NodeId, Scope, CId)>,
    changed: bool,
}

impl<'a, 'p> Passes<'a, 'p> {
    fn new(st: &'a mut Interner<'p>, budget: Option<u64>) -> Self {
        Passes { st, budget, visited: HashSet::new(), changed: false }
    }

    fn union_into(&mut self, from: KId, to: KId) {
        if from == to {
            return;
        }
        let n = self.st.vals[from as usize].len();
        for i in 0..n {
            let c = self.st.vals[from as usize][i];
            self.changed |= self.st.add_value(to, c);
        }
    }

    fn pass(&mut self, node: NodeId, scope: Scope, ctx: CId) {
        stacker::maybe_grow(128 * 1024, 4 * 1024 * 1024, || self.pass_inner(node, scope, ctx))
    }

    fn pass_inner(&mut self, node: NodeId, scope: Scope, ctx: CId) {
        if !self.visited.insert((node, scope, ctx)) {
            return;
        }
        let prog = self.st.prog;
        match prog.node(node) {
            Node::Var { var } => {
                let bound = self.st.lookup_var(scope, *var);
                let from = self.st.key(CacheKey::Var(*var), bound);
                let to = self.st.key(CacheKey::Label(node), ctx);
                self.union_into(from, to);
            }
            Node::Lam { .. } => {
                let c = self.st.make_closure(node, scope);
                let k = self.st.key(CacheKey::Label(node), ctx);
                self.changed |= self.st.add_value(k, c);
            }
            Node::App { fun, arg } => {
                let (fun, arg) = (*fun, *arg);
                self.pass(fun, scope, ctx);
                self.pass(arg, scope, ctx);
                let op = self.st.key(CacheKey::Label(fun), ctx);
                let mut ops = self.st.vals[op as usize].clone();
                ops.sort_unstable();
                let inner = self.st.push_trunc(ctx, node);
                for c in ops {
                    let (lam, env) = self.st.clos[c as usize];
                    let (param, body) = match prog.node(lam) {
                        Node::Lam { param, body, .. } => (*param, *body),
                        _ => unreachable!(),
                    };
                    let from = self.st.key(CacheKey::Label(arg), ctx);
                    let to = self.st.key(CacheKey::Var(param), inner);
                    self.union_into(from, to);
                    self.pass(body, Scope { lam: Some(lam), env, param_ctx: inner }, inner);
                    let from = self.st.key(CacheKey::Label(body), inner);
                    let to = self.st.key(CacheKey::Label(node), ctx);
                    self.union_into(from, to);
                }
            }
        }
    }

    fn run(mut self) -> Result<u64, AnalysisError> {
        let top = Scope { lam: None, env: 0, param_ctx: 0 };
        let mut passes = 0;
        loop {
            passes += 1;
            if let Some(b) = self.budget {
                if passes > b {
                    return Err(AnalysisError::BudgetExhausted(b));
                }
            }
            self.changed = false;
            self.visited.clear();
            self.pass(self.st.prog.root(), top, 0);
            if !self.changed {
                return Ok(passes);
            }
        }
    }
}

/// Which closures a query accepts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosurePattern {
    pub lam: NodeId,
    /// When present, the closure environment must match exactly.
    pub env: Option<Vec<(VarId, Contour)>>,
}

impl ClosurePattern {
    pub fn matches(&self, c: &Closure) -> bool {
        c.lam == self.lam && self.env.as_ref().is_none_or(|e| *e == c.env)
    }
}

/// An instance of the control flow problem: does a closure matching
/// `value` flow to `(key, contour)`?
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowQuery {
    pub key: CacheKey,
    pub contour: Contour,
    pub value: ClosurePattern,
}

impl FlowQuery {
    pub fn new(key: CacheKey, contour: Contour, lam: NodeId) -> Self {
        FlowQuery { key, contour, value: ClosurePattern { lam, env: None } }
    }

    /// Build a query from textual labels.
    pub fn parse(
        prog: &Program,
        label: Option<&str>,
        var: Option<&str>,
        contour: &str,
        lam: &str,
    ) -> Result<Self, crate::Error> {
        let key = match (label, var) {
            (Some(l), None) => CacheKey::Label(
                prog.node_of_str(l).ok_or_else(|| crate::Error::Query(format!("unknown label {l}")))?,
            ),
            (None, Some(v)) => CacheKey::Var(
                prog.var_of(v).ok_or_else(|| crate::Error::Query(format!("unknown variable {v}")))?,
            ),
            _ => return Err(crate::Error::Query("give exactly one of a label or a variable".into())),
        };
        let contour = Contour::parse(prog, contour).map_err(crate::Error::Query)?;
        let lam = prog
            .node_of_str(lam)
            .filter(|&n| matches!(prog.node(n), Node::Lam { .. }))
            .ok_or_else(|| crate::Error::Query(format!("{lam} is not the label of an abstraction")))?;
        Ok(FlowQuery::new(key, contour, lam))
    }

    pub fn validate(&self, prog: &Program, k: usize) -> Result<(), crate::Error> {
        if self.contour.len() > k {
            return Err(crate::Error::Query(format!(
                "contour {} is longer than k = {k}",
                self.contour.display(prog)
            )));
        }
        if !matches!(prog.node(self.value.lam), Node::Lam { .. }) {
            return Err(crate::Error::Query("pattern label is not an abstraction".into()));
        }
        Ok(())
    }

    /// Matching closures in an existing cache.
    pub fn matches<'c>(&self, cache: &'c AbstractCache) -> Vec<&'c Closure> {
        cache
            .lookup(self.key, &self.contour)
            .map(|s| s.iter().filter(|c| self.value.matches(c)).collect())
            .unwrap_or_default()
    }
}

/// Decide the control flow problem for `prog` under kCFA.
pub fn decide_cfp(prog: &Program, k: usize, query: &FlowQuery) -> Result<bool, crate::Error> {
    query.validate(prog, k)?;
    let (cache, _) = analyze(prog, k, None)?;
    Ok(!query.matches(&cache).is_empty())
}

/// Image of an exact cache under contour truncation.
pub fn abstract_of_exact(cache: &ExactCache, k: usize) -> AbstractCache {
    let mut out = AbstractCache::new(k);
    for (key, ctx, v) in cache.iter() {
        out.insert(*key, ctx.truncate(k), v.truncate(k));
    }
    out
}

struct AbstractChecker<'a> {
    prog: &'a Program,
    cache: &'a AbstractCache,
    k: usize,
    seen: HashSet<(NodeId, ScopeEnv, Contour)>,
}

static EMPTY: BTreeSet<Closure> = BTreeSet::new();

impl<'a> AbstractChecker<'a> {
    fn get(&self, key: CacheKey, ctx: &Contour) -> &'a BTreeSet<Closure> {
        self.cache.lookup(key, ctx).unwrap_or(&EMPTY)
    }

    fn subset(&self, a: CacheKey, ac: &Contour, b: CacheKey, bc: &Contour) -> bool {
        let to = self.get(b, bc);
        self.get(a, ac).iter().all(|c| to.contains(c))
    }

    fn fail(&self, clause: &'static str, node: NodeId, ctx: &Contour, detail: impl Into<String>) -> Violation {
        Violation {
            clause,
            label: self.prog.label(node).clone(),
            contour: ctx.display(self.prog),
            detail: detail.into(),
        }
    }

    fn check(&mut self, node: NodeId, env: &ScopeEnv, ctx: &Contour) -> Result<(), Violation> {
        stacker::maybe_grow(128 * 1024, 4 * 1024 * 1024, || self.check_inner(node, env, ctx))
    }

    fn check_inner(&mut self, node: NodeId, env: &ScopeEnv, ctx: &Contour) -> Result<(), Violation> {
        if !self.seen.insert((node, env.clone(), ctx.clone())) {
            return Ok(());
        }
        let prog = self.prog;
        let here = CacheKey::Label(node);
        match prog.node(node) {
            Node::Var { var } => {
                let bound = scope_lookup(env, *var)
                    .ok_or_else(|| self.fail("variable", node, ctx, "variable not in environment"))?;
                if !self.subset(CacheKey::Var(*var), bound, here, ctx) {
                    return Err(self.fail("variable", node, ctx, format!(
                        "C({}, {}) not contained",
                        prog.var_name(*var),
                        bound.display(prog)
                    )));
                }
            }
            Node::Lam { .. } => {
                let ok = restrict(prog, env, node)
                    .map(|env| self.get(here, ctx).contains(&Closure { lam: node, env }))
                    .unwrap_or(false);
                if !ok {
                    return Err(self.fail("abstraction", node, ctx, "closure missing"));
                }
            }
            Node::App { fun, arg } => {
                let (fun, arg) = (*fun, *arg);
                self.check(fun, env, ctx)?;
                self.check(arg, env, ctx)?;
                let inner = ctx.push(node).truncate(self.k);
                for clo in self.get(CacheKey::Label(fun), ctx) {
                    let (param, body) = match prog.node(clo.lam) {
                        Node::Lam { param, body, .. } => (*param, *body),
                        _ => return Err(self.fail("application", node, ctx, "operator is not a λ")),
                    };
                    if !self.subset(CacheKey::Label(arg), ctx, CacheKey::Var(param), &inner) {
                        return Err(self.fail("application", node, ctx, "argument not bound"));
                    }
                    let body_env = extend(prog, clo, inner.clone());
                    self.check(body, &body_env, &inner)?;
                    if !self.subset(CacheKey::Label(body), &inner, here, ctx) {
                        return Err(self.fail("application", node, ctx, "body result not propagated"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Decide `C |=_{}^ε program` for an abstract cache.
pub fn check_acceptable(cache: &AbstractCache, prog: &Program, k: usize) -> Result<(), Violation> {
    for (key, ctx, set) in cache.entries() {
        let too_long = ctx.len() > k || set.iter().any(|c| c.max_contour_len() > k);
        if too_long {
            return Err(Violation {
                clause: "conformance",
                label: crate::syntax::Label::new(key.name(prog)).unwrap_or_else(|_| crate::syntax::Label::num(0)),
                contour: ctx.display(prog),
                detail: format!("contour longer than k = {k}"),
            });
        }
    }
    let mut c = AbstractChecker { prog, cache, k, seen: HashSet::new() };
    c.check(prog.root(), &Vec::new(), &Contour::empty())
}
