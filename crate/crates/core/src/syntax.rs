//! Concrete syntax, labeled terms and structural predicates.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr ::= atom | '(' expr expr ')' tag? | '(' '\' name '.' expr ')' tag?
//! atom ::= name tag?
//! tag  ::= '^' label
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An opaque node label. Auto-assigned labels are decimal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn new(s: impl Into<String>) -> Result<Self, SyntaxError> {
        let s = s.into();
        if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            Ok(Label(s))
        } else {
            Err(SyntaxError::new(0, 0, format!("invalid label {s:?}")))
        }
    }

    pub fn num(n: usize) -> Self {
        Label(n.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug)]
pub enum ExprKind {
    Var(String),
    Lam(String, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
}

/// A term together with its (possibly not yet assigned) label.
#[derive(Debug)]
pub struct Expr {
    pub label: Option<Label>,
    pub kind: ExprKind,
}

// Generated terms nest thousands of levels deep, so the structural impls
// below grow the stack on demand instead of being derived.

impl Clone for ExprKind {
    fn clone(&self) -> Self {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || match self {
            ExprKind::Var(x) => ExprKind::Var(x.clone()),
            ExprKind::Lam(x, b) => ExprKind::Lam(x.clone(), b.clone()),
            ExprKind::App(f, a) => ExprKind::App(f.clone(), a.clone()),
        })
    }
}

impl Clone for Expr {
    fn clone(&self) -> Self {
        Expr { label: self.label.clone(), kind: self.kind.clone() }
    }
}

impl PartialEq for ExprKind {
    fn eq(&self, other: &Self) -> bool {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || match (self, other) {
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Lam(x, a), ExprKind::Lam(y, b)) => x == y && a == b,
            (ExprKind::App(f, a), ExprKind::App(g, b)) => f == g && a == b,
            _ => false,
        })
    }
}

impl Eq for ExprKind {}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.kind == other.kind
    }
}

impl Eq for Expr {}

impl Drop for Expr {
    fn drop(&mut self) {
        let mut stack = Vec::new();
        let take = |k: &mut ExprKind, stack: &mut Vec<Box<Expr>>| {
            match std::mem::replace(k, ExprKind::Var(String::new())) {
                ExprKind::Var(_) => {}
                ExprKind::Lam(_, b) => stack.push(b),
                ExprKind::App(f, a) => {
                    stack.push(f);
                    stack.push(a);
                }
            }
        };
        take(&mut self.kind, &mut stack);
        while let Some(mut e) = stack.pop() {
            take(&mut e.kind, &mut stack);
        }
    }
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr { label: None, kind: ExprKind::Var(name.into()) }
    }

    pub fn lam(param: impl Into<String>, body: Expr) -> Self {
        Expr { label: None, kind: ExprKind::Lam(param.into(), Box::new(body)) }
    }

    pub fn app(fun: Expr, arg: Expr) -> Self {
        Expr { label: None, kind: ExprKind::App(Box::new(fun), Box::new(arg)) }
    }

    /// Left-nested application `f a1 a2 ... an`.
    pub fn apps(fun: Expr, args: impl IntoIterator<Item = Expr>) -> Self {
        args.into_iter().fold(fun, Expr::app)
    }

    pub fn labeled(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn is_lam(&self) -> bool {
        matches!(self.kind, ExprKind::Lam(..))
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Preorder traversal without recursion.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            f(e);
            match &e.kind {
                ExprKind::Var(_) => {}
                ExprKind::Lam(_, b) => stack.push(b),
                ExprKind::App(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
    }

    pub fn labels(&self) -> Vec<&Label> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Some(l) = &e.label {
                out.push(l);
            }
        });
        out
    }

    pub fn is_fully_labeled(&self) -> bool {
        let mut ok = true;
        self.walk(&mut |e| ok &= e.label.is_some());
        ok
    }

    /// Find the subterm carrying `label`.
    pub fn find(&self, label: &Label) -> Option<&Expr> {
        let mut hit = None;
        self.walk(&mut |e| {
            if hit.is_none() && e.label.as_ref() == Some(label) {
                hit = Some(e);
            }
        });
        hit
    }

    /// Structural equality that ignores labels.
    pub fn same_shape(&self, other: &Expr) -> bool {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || match (&self.kind, &other.kind) {
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Lam(x, a), ExprKind::Lam(y, b)) => x == y && a.same_shape(b),
            (ExprKind::App(f, a), ExprKind::App(g, b)) => f.same_shape(g) && a.same_shape(b),
            _ => false,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&unparse(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl SyntaxError {
    fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        SyntaxError { line, col, msg: msg.into() }
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    line_starts: Vec<usize>,
    seen_labels: HashSet<String>,
    _src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        let chars: Vec<char> = src.chars().collect();
        let mut line_starts = vec![0];
        for (i, c) in chars.iter().enumerate() {
            if *c == '\n' {
                line_starts.push(i + 1);
            }
        }
        Parser { chars, pos: 0, line_starts, seen_labels: HashSet::new(), _src: src }
    }

    fn err(&self, at: usize, msg: impl Into<String>) -> SyntaxError {
        let line = self.line_starts.partition_point(|&s| s <= at);
        let col = at - self.line_starts[line - 1] + 1;
        SyntaxError::new(line, col, msg)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(d) if d == c => {
                self.pos += 1;
                Ok(())
            }
            Some(d) => Err(self.err(self.pos, format!("expected '{c}', found '{d}'"))),
            None => Err(self.err(self.pos, format!("expected '{c}', found end of input"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<String, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(start, format!("expected {what}")));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn name(&mut self) -> Result<String, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        let w = self.word("a variable name")?;
        if w.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.err(start, format!("variable name {w:?} starts with a digit")));
        }
        Ok(w)
    }

    fn tag(&mut self) -> Result<Option<Label>, SyntaxError> {
        // a tag must follow its node immediately or after whitespace
        if self.peek() != Some('^') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        let l = self.word("a label")?;
        if !self.seen_labels.insert(l.clone()) {
            return Err(self.err(start, format!("duplicate label {l:?}")));
        }
        Ok(Some(Label(l)))
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.expr_inner())
    }

    fn expr_inner(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek() {
            None => Err(self.err(self.pos, "unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let kind = match self.peek() {
                    Some('\\') | Some('λ') => {
                        self.pos += 1;
                        let x = self.name()?;
                        self.expect('.')?;
                        let body = self.expr()?;
                        ExprKind::Lam(x, Box::new(body))
                    }
                    _ => {
                        let f = self.expr()?;
                        let a = self.expr()?;
                        ExprKind::App(Box::new(f), Box::new(a))
                    }
                };
                self.expect(')')?;
                let label = self.tag()?;
                Ok(Expr { label, kind })
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let x = self.name()?;
                let label = self.tag()?;
                Ok(Expr { label, kind: ExprKind::Var(x) })
            }
            Some(c) => Err(self.err(self.pos, format!("unexpected character '{c}'"))),
        }
    }
}

/// Parse a single term. Unannotated nodes carry no label until
/// [`assign_labels`] runs.
pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser::new(text);
    let e = p.expr()?;
    if let Some(c) = p.peek() {
        return Err(p.err(p.pos, format!("trailing input starting at '{c}'")));
    }
    Ok(e)
}

/// Fully parenthesized rendering; `parse(unparse(e)) == e`.
pub fn unparse(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_expr(e: &Expr, out: &mut String) {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
        match &e.kind {
            ExprKind::Var(x) => out.push_str(x),
            ExprKind::Lam(x, b) => {
                out.push_str("(\\");
                out.push_str(x);
                out.push_str(". ");
                write_expr(b, out);
                out.push(')');
            }
            ExprKind::App(f, a) => {
                out.push('(');
                write_expr(f, out);
                out.push(' ');
                write_expr(a, out);
                out.push(')');
            }
        }
        if let Some(l) = &e.label {
            out.push('^');
            out.push_str(l.as_str());
        }
    })
}

/// Replace every missing label with a fresh decimal one. Numbering is
/// postorder (children before parents, left to right), skipping labels
/// already present in the term.
pub fn assign_labels(e: &Expr) -> Result<Expr, SyntaxError> {
    let mut used = HashSet::new();
    for l in e.labels() {
        if !used.insert(l.as_str().to_owned()) {
            return Err(SyntaxError::new(0, 0, format!("duplicate label {:?}", l.as_str())));
        }
    }
    let mut next = 0usize;
    let mut fresh = || loop {
        let s = next.to_string();
        next += 1;
        if !used.contains(&s) {
            return Label(s);
        }
    };
    Ok(relabel(e, &mut fresh))
}

fn relabel(e: &Expr, fresh: &mut impl FnMut() -> Label) -> Expr {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
        let kind = match &e.kind {
            ExprKind::Var(x) => ExprKind::Var(x.clone()),
            ExprKind::Lam(x, b) => ExprKind::Lam(x.clone(), Box::new(relabel(b, fresh))),
            ExprKind::App(f, a) => {
                let f = relabel(f, fresh);
                let a = relabel(a, fresh);
                ExprKind::App(Box::new(f), Box::new(a))
            }
        };
        let label = e.label.clone().unwrap_or_else(&mut *fresh);
        Expr { label: Some(label), kind }
    })
}

pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    scan_binders(e).1
}

/// One pass over `e`: the number of uses of each binder (in preorder of
/// binders) and the free variables.
fn scan_binders(e: &Expr) -> (Vec<(String, usize)>, BTreeSet<String>) {
    struct Scan<'a> {
        // innermost binder index per name
        scope: HashMap<&'a str, Vec<usize>>,
        uses: Vec<(String, usize)>,
        free: BTreeSet<String>,
    }
    impl<'a> Scan<'a> {
        fn go(&mut self, e: &'a Expr) {
            stacker::maybe_grow(64 * 1024, 1024 * 1024, || match &e.kind {
                ExprKind::Var(x) => match self.scope.get(x.as_str()).and_then(|v| v.last()) {
                    Some(&i) => self.uses[i].1 += 1,
                    None => {
                        self.free.insert(x.clone());
                    }
                },
                ExprKind::Lam(x, b) => {
                    self.uses.push((x.clone(), 0));
                    self.scope.entry(x).or_default().push(self.uses.len() - 1);
                    self.go(b);
                    self.scope.get_mut(x.as_str()).expect("pushed").pop();
                }
                ExprKind::App(f, a) => {
                    self.go(f);
                    self.go(a);
                }
            })
        }
    }
    let mut s = Scan { scope: HashMap::new(), uses: Vec::new(), free: BTreeSet::new() };
    s.go(e);
    (s.uses, s.free)
}

/// Usage discipline of the binders of a closed term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linearity {
    /// Every binder used exactly once.
    pub linear: bool,
    /// Every binder used at most once.
    pub affine: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("term is not closed; free variables: {0:?}")]
pub struct OpenTerm(pub BTreeSet<String>);

pub fn linearity(e: &Expr) -> Result<Linearity, OpenTerm> {
    let (uses, fv) = scan_binders(e);
    if !fv.is_empty() {
        return Err(OpenTerm(fv));
    }
    Ok(Linearity {
        linear: uses.iter().all(|(_, c)| *c == 1),
        affine: uses.iter().all(|(_, c)| *c <= 1),
    })
}

pub fn is_linear(e: &Expr) -> Result<bool, OpenTerm> {
    linearity(e).map(|l| l.linear)
}

pub fn is_affine(e: &Expr) -> Result<bool, OpenTerm> {
    linearity(e).map(|l| l.affine)
}

/// Rename binders so every bound name in the term is distinct. Returns the
/// renamed term and one warning per renamed binder. Renamed binders get the
/// first free suffix among `_1`, `_2`, ...
pub fn distinct_binders(e: &Expr) -> (Expr, Vec<String>) {
    let mut all_names = HashSet::new();
    e.walk(&mut |n| match &n.kind {
        ExprKind::Var(x) | ExprKind::Lam(x, _) => {
            all_names.insert(x.clone());
        }
        ExprKind::App(..) => {}
    });
    let mut r = Renamer { env: HashMap::new(), seen: HashSet::new(), names: all_names, next: HashMap::new(), warnings: Vec::new() };
    let out = r.rename(e);
    let warnings = r.warnings;
    (out, warnings)
}

struct Renamer {
    env: HashMap<String, Vec<String>>,
    seen: HashSet<String>,
    names: HashSet<String>,
    // next suffix to try per base name
    next: HashMap<String, usize>,
    warnings: Vec<String>,
}

impl Renamer {
    fn fresh(&mut self, x: &str) -> String {
        let i = self.next.entry(x.to_owned()).or_insert(1);
        loop {
            let cand = format!("{x}_{i}");
            *i += 1;
            if !self.names.contains(&cand) {
                self.names.insert(cand.clone());
                return cand;
            }
        }
    }

    fn rename(&mut self, e: &Expr) -> Expr {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
            let kind = match &e.kind {
                ExprKind::Var(x) => {
                    let to = self.env.get(x).and_then(|v| v.last()).cloned();
                    ExprKind::Var(to.unwrap_or_else(|| x.clone()))
                }
                ExprKind::Lam(x, b) => {
                    let new = if self.seen.insert(x.clone()) {
                        x.clone()
                    } else {
                        let fresh = self.fresh(x);
                        self.seen.insert(fresh.clone());
                        self.warnings.push(format!("renamed duplicate binder {x} to {fresh}"));
                        fresh
                    };
                    self.env.entry(x.clone()).or_default().push(new.clone());
                    let b = self.rename(b);
                    self.env.get_mut(x).expect("pushed").pop();
                    ExprKind::Lam(new, Box::new(b))
                }
                ExprKind::App(f, a) => {
                    let f = self.rename(f);
                    let a = self.rename(a);
                    ExprKind::App(Box::new(f), Box::new(a))
                }
            };
            Expr { label: e.label.clone(), kind }
        })
    }
}

fn merge_sorted(a: Vec<VarId>, b: Vec<VarId>) -> Vec<VarId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Index of a node in a [`Program`] (preorder).
pub type NodeId = u32;
/// Index of a bound variable in a [`Program`].
pub type VarId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Var { var: VarId },
    Lam { param: VarId, body: NodeId, free: Box<[VarId]> },
    App { fun: NodeId, arg: NodeId },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("node without a label: {0}")]
    Unlabeled(String),
    #[error("duplicate label {0}")]
    DuplicateLabel(Label),
    #[error("duplicate binder {0}")]
    DuplicateBinder(String),
    #[error(transparent)]
    Open(#[from] OpenTerm),
}

/// A closed, fully labeled program with distinct binders, flattened into
/// arrays for the evaluators.
#[derive(Clone, Debug)]
pub struct Program {
    expr: Expr,
    nodes: Vec<Node>,
    labels: Vec<Label>,
    vars: Vec<String>,
    binder: Vec<NodeId>,
    by_label: HashMap<Label, NodeId>,
    by_var: HashMap<String, VarId>,
}

impl Program {
    pub fn new(expr: Expr) -> Result<Self, ProgramError> {
        let fv = free_vars(&expr);
        if !fv.is_empty() {
            return Err(OpenTerm(fv).into());
        }
        let mut p = Program {
            expr: Expr::var("_"),
            nodes: Vec::new(),
            labels: Vec::new(),
            vars: Vec::new(),
            binder: Vec::new(),
            by_label: HashMap::new(),
            by_var: HashMap::new(),
        };
        p.flatten(&expr)?;
        p.expr = expr;
        Ok(p)
    }

    /// Parse, repair binder names, label, and index in one go.
    pub fn from_text(text: &str) -> Result<(Self, Vec<String>), crate::Error> {
        let e = parse(text)?;
        let (e, warnings) = distinct_binders(&e);
        let e = assign_labels(&e)?;
        Ok((Program::new(e)?, warnings))
    }

    fn flatten(&mut self, root: &Expr) -> Result<(), ProgramError> {
        // iterative preorder with a fix-up pass for child ids
        let mut stack: Vec<(&Expr, Option<(NodeId, u8)>)> = vec![(root, None)];
        while let Some((e, parent)) = stack.pop() {
            let id = self.nodes.len() as NodeId;
            let label = e.label.clone().ok_or_else(|| ProgramError::Unlabeled(unparse(e)))?;
            if self.by_label.insert(label.clone(), id).is_some() {
                return Err(ProgramError::DuplicateLabel(label));
            }
            self.labels.push(label);
            if let Some((pid, slot)) = parent {
                match &mut self.nodes[pid as usize] {
                    Node::Lam { body, .. } => *body = id,
                    Node::App { fun, arg } => {
                        if slot == 0 {
                            *fun = id
                        } else {
                            *arg = id
                        }
                    }
                    Node::Var { .. } => unreachable!(),
                }
            }
            match &e.kind {
                ExprKind::Var(x) => {
                    // binders are distinct and the term is closed, so the name decides
                    let var = self.by_var[x];
                    self.nodes.push(Node::Var { var });
                }
                ExprKind::Lam(x, b) => {
                    if self.by_var.contains_key(x) {
                        return Err(ProgramError::DuplicateBinder(x.clone()));
                    }
                    let v = self.vars.len() as VarId;
                    self.vars.push(x.clone());
                    self.binder.push(id);
                    self.by_var.insert(x.clone(), v);
                    self.nodes.push(Node::Lam { param: v, body: 0, free: Box::new([]) });
                    stack.push((b, Some((id, 0))));
                }
                ExprKind::App(f, a) => {
                    self.nodes.push(Node::App { fun: 0, arg: 0 });
                    stack.push((a, Some((id, 1))));
                    stack.push((f, Some((id, 0))));
                }
            }
        }
        // free variables bottom-up: children always follow their parent
        let mut free: Vec<Vec<VarId>> = vec![Vec::new(); self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            let fv = match &self.nodes[id] {
                Node::Var { var } => vec![*var],
                Node::Lam { param, body, .. } => {
                    let mut fv = std::mem::take(&mut free[*body as usize]);
                    fv.retain(|v| v != param);
                    fv
                }
                Node::App { fun, arg } => {
                    let f = std::mem::take(&mut free[*fun as usize]);
                    let a = std::mem::take(&mut free[*arg as usize]);
                    merge_sorted(f, a)
                }
            };
            if let Node::Lam { free: slot, .. } = &mut self.nodes[id] {
                *slot = fv.clone().into_boxed_slice();
            }
            free[id] = fv;
        }
        Ok(())
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (i as NodeId, n))
    }

    pub fn label(&self, id: NodeId) -> &Label {
        &self.labels[id as usize]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v as usize]
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn node_of(&self, label: &Label) -> Option<NodeId> {
        self.by_label.get(label).copied()
    }

    pub fn node_of_str(&self, label: &str) -> Option<NodeId> {
        self.by_label.get(&Label(label.to_owned())).copied()
    }

    pub fn var_of(&self, name: &str) -> Option<VarId> {
        self.by_var.get(name).copied()
    }

    /// The λ node binding `v`.
    pub fn binder_of(&self, v: VarId) -> NodeId {
        self.binder[v as usize]
    }

    pub fn free_of(&self, lam: NodeId) -> &[VarId] {
        match &self.nodes[lam as usize] {
            Node::Lam { free, .. } => free,
            _ => &[],
        }
    }

    /// Rebuild the labeled subterm rooted at `id`.
    pub fn subterm(&self, id: NodeId) -> &Expr {
        self.expr.find(self.label(id)).expect("label indexes a subterm")
    }

    /// All application nodes; these are the labels contours are built from.
    pub fn app_nodes(&self) -> Vec<NodeId> {
        self.nodes().filter(|(_, n)| matches!(n, Node::App { .. })).map(|(i, _)| i).collect()
    }

    pub fn lam_nodes(&self) -> Vec<NodeId> {
        self.nodes().filter(|(_, n)| matches!(n, Node::Lam { .. })).map(|(i, _)| i).collect()
    }
}

/// Occurrence count of each bound variable, keyed by name.
pub fn occurrence_counts(e: &Expr) -> BTreeMap<String, usize> {
    scan_binders(e).0.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn parses_identity_without_labels() {
        let e = p(r"(\x. x)");
        assert_eq!(e, Expr::lam("x", Expr::var("x")));
    }

    #[test]
    fn parses_explicit_application_labels() {
        let e = p(r"((\f. (f (f True)^1)^2) (\y. False))^3");
        let labels: Vec<_> = e.labels().iter().map(|l| l.as_str().to_owned()).collect();
        assert_eq!(labels, vec!["3", "2", "1"]);
    }

    #[test]
    fn rejects_unbalanced() {
        let err = parse(r"(\x. x x").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.col > 1);
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse("(\\x.\n  x ?)").unwrap_err();
        assert_eq!((err.line, err.col), (2, 5));
    }

    #[test]
    fn rejects_duplicate_explicit_label() {
        assert!(parse(r"((\x. x^1) y^1)").is_err());
    }

    #[test]
    fn postorder_auto_labels() {
        let e = assign_labels(&Expr::lam("x", Expr::var("x"))).unwrap();
        assert_eq!(unparse(&e), r"(\x. x^0)^1");
    }

    #[test]
    fn labeled_example_round_trips() {
        let src = r"((\x. x^0)^1 e^2)^3";
        let e = p(src);
        assert_eq!(assign_labels(&e).unwrap(), e);
        assert_eq!(unparse(&e), src);
    }

    #[test]
    fn fresh_labels_skip_explicit() {
        let e = p(r"((\x. x) (\y. y))^7");
        let e = assign_labels(&e).unwrap();
        let mut ls: Vec<_> = e.labels().iter().map(|l| l.as_str().to_owned()).collect();
        ls.sort();
        assert_eq!(ls, vec!["0", "1", "2", "3", "7"]);
        let e = assign_labels(&p(r"((\x. x)^0 y)")).unwrap();
        assert_eq!(unparse(&e), r"((\x. x^1)^0 y^2)^3");
    }

    #[test]
    fn free_variables() {
        assert_eq!(free_vars(&Expr::var("x")), BTreeSet::from(["x".to_string()]));
        assert!(free_vars(&p(r"(\x. x)")).is_empty());
        let t = p(r"(\w. ((w z1) z2))");
        assert_eq!(free_vars(&t), BTreeSet::from(["z1".to_string(), "z2".to_string()]));
    }

    #[test]
    fn linearity_predicates() {
        assert!(is_linear(&p(r"(\x. x)")).unwrap());
        let nonlin = p(r"((\f. (f ((\a. a) (f (\b. b))))) (\x. x))");
        assert!(!is_linear(&nonlin).unwrap());
        let aff = p(r"(\a. (\b. a))");
        let l = linearity(&aff).unwrap();
        assert!(!l.linear && l.affine);
        assert!(is_linear(&Expr::var("x")).is_err());
    }

    #[test]
    fn unparse_nested_applications() {
        let e = p(r"(((a b) c) (d e))");
        assert_eq!(unparse(&e), "(((a b) c) (d e))");
    }

    #[test]
    fn duplicate_binders_are_renamed() {
        let e = p(r"((\x. x) (\x. (\x_1. x)))");
        let (r, w) = distinct_binders(&e);
        assert_eq!(w.len(), 1);
        assert_eq!(unparse(&r), r"((\x. x) (\x_2. (\x_1. x_2)))");
    }

    #[test]
    fn program_index() {
        let (prog, _) = Program::from_text(r"((\x. x^0)^1 (\z. z^4)^2)^3").unwrap();
        assert_eq!(prog.len(), 5);
        let x = prog.var_of("x").unwrap();
        assert_eq!(prog.label(prog.binder_of(x)).as_str(), "1");
        assert_eq!(prog.node_of_str("3"), Some(0));
        assert!(matches!(Program::new(p(r"(\x. y)")), Err(ProgramError::Open(_))));
    }

    #[test]
    fn deep_terms_do_not_overflow() {
        let mut e = Expr::var("x");
        for _ in 0..20_000 {
            e = Expr::app(Expr::lam("y", Expr::var("y")), e);
        }
        let e = Expr::lam("x", e);
        let (e, _) = distinct_binders(&e);
        let e = assign_labels(&e).unwrap();
        let s = unparse(&e);
        assert_eq!(parse(&s).unwrap(), e);
        assert!(Program::new(e).is_ok());
    }
}
