//! Boolean circuits with explicit fan-out.
//!
//! A [`CircuitSpec`] is linear by construction: every wire other than the
//! outputs is consumed exactly once, and duplication goes through `COPY`
//! gates whose outputs are named `<id>.0`, `<id>.1`, ...

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Not,
    And,
    Or,
    Implies,
    Copy(usize),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Not | GateKind::Copy(_) => 1,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Not => "NOT",
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Implies => "IMPLIES",
            GateKind::Copy(_) => "COPY",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub id: String,
    pub kind: GateKind,
    pub args: Vec<String>,
}

impl Gate {
    /// Names of the wires this gate defines.
    pub fn outputs(&self) -> Vec<String> {
        match self.kind {
            GateKind::Copy(m) => (0..m).map(|i| format!("{}.{i}", self.id)).collect(),
            _ => vec![self.id.clone()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitInput {
    pub name: String,
    pub value: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitSpec {
    pub inputs: Vec<CircuitInput>,
    pub gates: Vec<Gate>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("wire {0} is used before it is defined")]
    NotTopological(String),
    #[error("wire {0} is consumed more than once; fan out with COPY")]
    ReusedWire(String),
    #[error("wire {0} is never consumed and is not an output")]
    UnusedWire(String),
    #[error("wire {0} is defined twice")]
    Duplicate(String),
    #[error("gate {0} has the wrong number of arguments")]
    Arity(String),
    #[error("circuit must have exactly one output for this operation, found {0}")]
    OutputCount(usize),
    #[error("bad circuit file: {0}")]
    Format(String),
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    id: String,
    kind: String,
    args: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fanout: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    inputs: Vec<CircuitInput>,
    gates: Vec<GateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outputs: Option<Vec<String>>,
}

impl CircuitSpec {
    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let raw: CircuitJson =
            serde_json::from_str(text).map_err(|e| CircuitError::Format(e.to_string()))?;
        let gates = raw
            .gates
            .into_iter()
            .map(|g| {
                let kind = match g.kind.to_ascii_uppercase().as_str() {
                    "NOT" => GateKind::Not,
                    "AND" => GateKind::And,
                    "OR" => GateKind::Or,
                    "IMPLIES" => GateKind::Implies,
                    "COPY" => GateKind::Copy(g.fanout.unwrap_or(2)),
                    other => return Err(CircuitError::Format(format!("unknown gate kind {other}"))),
                };
                Ok(Gate { id: g.id, kind, args: g.args })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let outputs = match (raw.output, raw.outputs) {
            (Some(o), None) => vec![o],
            (None, Some(os)) => os,
            _ => return Err(CircuitError::Format("give exactly one of output or outputs".into())),
        };
        let c = CircuitSpec { inputs: raw.inputs, gates, outputs };
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        let gates = self
            .gates
            .iter()
            .map(|g| GateJson {
                id: g.id.clone(),
                kind: g.kind.name().into(),
                args: g.args.clone(),
                fanout: match g.kind {
                    GateKind::Copy(m) => Some(m),
                    _ => None,
                },
            })
            .collect();
        let (output, outputs) = if self.outputs.len() == 1 {
            (Some(self.outputs[0].clone()), None)
        } else {
            (None, Some(self.outputs.clone()))
        };
        let raw = CircuitJson { inputs: self.inputs.clone(), gates, output, outputs };
        serde_json::to_string(&raw).expect("serializable")
    }

    /// Check topological order and single use of every wire.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut defined = HashSet::new();
        let mut used = HashSet::new();
        for i in &self.inputs {
            if !defined.insert(i.name.clone()) {
                return Err(CircuitError::Duplicate(i.name.clone()));
            }
        }
        for g in &self.gates {
            if g.args.len() != g.kind.arity() || matches!(g.kind, GateKind::Copy(0)) {
                return Err(CircuitError::Arity(g.id.clone()));
            }
            for a in &g.args {
                if !defined.contains(a) {
                    return Err(CircuitError::NotTopological(a.clone()));
                }
                if !used.insert(a.clone()) {
                    return Err(CircuitError::ReusedWire(a.clone()));
                }
            }
            for o in g.outputs() {
                if !defined.insert(o.clone()) {
                    return Err(CircuitError::Duplicate(o));
                }
            }
        }
        for o in &self.outputs {
            if !defined.contains(o) {
                return Err(CircuitError::NotTopological(o.clone()));
            }
            if !used.insert(o.clone()) {
                return Err(CircuitError::ReusedWire(o.clone()));
            }
        }
        if let Some(w) = defined.iter().find(|w| !used.contains(*w)) {
            return Err(CircuitError::UnusedWire(w.clone()));
        }
        Ok(())
    }

    pub fn input(&self, name: &str) -> Option<&CircuitInput> {
        self.inputs.iter().find(|i| i.name == name)
    }

    /// Same circuit with the named inputs reassigned.
    pub fn with_inputs(&self, values: &HashMap<String, bool>) -> CircuitSpec {
        let mut c = self.clone();
        for i in &mut c.inputs {
            if let Some(v) = values.get(&i.name) {
                i.value = *v;
            }
        }
        c
    }
}

/// A validated circuit flattened to wire indices for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CircuitEval {
    n_inputs: usize,
    // (kind, argument slots, first output slot)
    gates: Vec<(GateKind, Vec<usize>, usize)>,
    slots: usize,
    outputs: Vec<usize>,
}

impl CircuitEval {
    pub fn new(c: &CircuitSpec) -> Result<Self, CircuitError> {
        c.validate()?;
        let mut slot: HashMap<String, usize> =
            c.inputs.iter().enumerate().map(|(i, x)| (x.name.clone(), i)).collect();
        let mut next = c.inputs.len();
        let mut gates = Vec::with_capacity(c.gates.len());
        for g in &c.gates {
            let args = g.args.iter().map(|a| slot[a]).collect();
            gates.push((g.kind, args, next));
            for o in g.outputs() {
                slot.insert(o, next);
                next += 1;
            }
        }
        let outputs = c.outputs.iter().map(|o| slot[o]).collect();
        Ok(CircuitEval { n_inputs: c.inputs.len(), gates, slots: next, outputs })
    }

    /// Outputs for input values given in declaration order.
    pub fn run(&self, inputs: &[bool]) -> Vec<bool> {
        assert_eq!(inputs.len(), self.n_inputs);
        let mut v = vec![false; self.slots];
        v[..inputs.len()].copy_from_slice(inputs);
        for (kind, args, out) in &self.gates {
            let a = |i: usize| v[args[i]];
            match kind {
                GateKind::Not => v[*out] = !a(0),
                GateKind::And => v[*out] = a(0) && a(1),
                GateKind::Or => v[*out] = a(0) || a(1),
                GateKind::Implies => v[*out] = !a(0) || a(1),
                GateKind::Copy(m) => {
                    let x = a(0);
                    v[*out..*out + m].fill(x);
                }
            }
        }
        self.outputs.iter().map(|&o| v[o]).collect()
    }
}

/// Evaluate every output in declaration order.
pub fn eval_outputs(c: &CircuitSpec) -> Result<Vec<bool>, CircuitError> {
    let e = CircuitEval::new(c)?;
    let inputs: Vec<bool> = c.inputs.iter().map(|i| i.value).collect();
    Ok(e.run(&inputs))
}

/// Standard Boolean evaluation of a single-output circuit.
pub fn eval_circuit(c: &CircuitSpec) -> Result<bool, CircuitError> {
    if c.outputs.len() != 1 {
        return Err(CircuitError::OutputCount(c.outputs.len()));
    }
    Ok(eval_outputs(c)?[0])
}

/// A wire handle inside a [`CircuitBuilder`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Wire(usize);

#[derive(Clone, Debug)]
enum Def {
    Input(String),
    Const(bool),
    Gate(GateKind, Vec<Wire>),
}

/// Builds circuits with unrestricted wire reuse, then linearizes them: wires
/// used more than once get a `COPY`, unused wires are folded into the first
/// output as `out ∧ (w ∨ ¬w)`, and every use of a constant becomes its own
/// constant input.
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    defs: Vec<Def>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, d: Def) -> Wire {
        self.defs.push(d);
        Wire(self.defs.len() - 1)
    }

    pub fn input(&mut self, name: impl Into<String>) -> Wire {
        self.push(Def::Input(name.into()))
    }

    pub fn constant(&mut self, v: bool) -> Wire {
        self.push(Def::Const(v))
    }

    pub fn not(&mut self, a: Wire) -> Wire {
        if let Def::Gate(GateKind::Not, args) = &self.defs[a.0] {
            return args[0];
        }
        self.push(Def::Gate(GateKind::Not, vec![a]))
    }

    pub fn and(&mut self, a: Wire, b: Wire) -> Wire {
        self.push(Def::Gate(GateKind::And, vec![a, b]))
    }

    pub fn or(&mut self, a: Wire, b: Wire) -> Wire {
        self.push(Def::Gate(GateKind::Or, vec![a, b]))
    }

    pub fn implies(&mut self, a: Wire, b: Wire) -> Wire {
        self.push(Def::Gate(GateKind::Implies, vec![a, b]))
    }

    pub fn xnor(&mut self, a: Wire, b: Wire) -> Wire {
        let ab = self.implies(a, b);
        let ba = self.implies(b, a);
        self.and(ab, ba)
    }

    pub fn xor(&mut self, a: Wire, b: Wire) -> Wire {
        let e = self.xnor(a, b);
        self.not(e)
    }

    /// `s ? a : b`
    pub fn mux(&mut self, s: Wire, a: Wire, b: Wire) -> Wire {
        let x = self.and(s, a);
        let ns = self.not(s);
        let y = self.and(ns, b);
        self.or(x, y)
    }

    pub fn all(&mut self, ws: &[Wire]) -> Wire {
        match ws.split_first() {
            None => self.constant(true),
            Some((&first, rest)) => rest.iter().fold(first, |acc, &w| self.and(acc, w)),
        }
    }

    pub fn any(&mut self, ws: &[Wire]) -> Wire {
        match ws.split_first() {
            None => self.constant(false),
            Some((&first, rest)) => rest.iter().fold(first, |acc, &w| self.or(acc, w)),
        }
    }

    /// Bitwise equality of two equally long words.
    pub fn eq_words(&mut self, a: &[Wire], b: &[Wire]) -> Wire {
        let bits: Vec<Wire> = a.iter().zip(b).map(|(&x, &y)| self.xnor(x, y)).collect();
        self.all(&bits)
    }

    /// Equality of a word with a constant (bits most significant first).
    pub fn eq_const(&mut self, a: &[Wire], value: u64) -> Wire {
        let n = a.len();
        let bits: Vec<Wire> = a
            .iter()
            .enumerate()
            .map(|(i, &w)| if (value >> (n - 1 - i)) & 1 == 1 { w } else { self.not(w) })
            .collect();
        self.all(&bits)
    }

    /// Constant word, most significant bit first.
    pub fn const_word(&mut self, value: u64, width: usize) -> Vec<Wire> {
        (0..width).map(|i| self.constant((value >> (width - 1 - i)) & 1 == 1)).collect()
    }

    /// `a + 1` modulo `2^width`, most significant bit first.
    pub fn increment(&mut self, a: &[Wire]) -> Vec<Wire> {
        let mut out = vec![Wire(0); a.len()];
        let mut carry = self.constant(true);
        for i in (0..a.len()).rev() {
            out[i] = self.xor(a[i], carry);
            carry = self.and(a[i], carry);
        }
        out
    }

    /// `a - 1` modulo `2^width`, most significant bit first.
    pub fn decrement(&mut self, a: &[Wire]) -> Vec<Wire> {
        let mut out = vec![Wire(0); a.len()];
        let mut borrow = self.constant(true);
        for i in (0..a.len()).rev() {
            out[i] = self.xor(a[i], borrow);
            let na = self.not(a[i]);
            borrow = self.and(na, borrow);
        }
        out
    }

    pub fn mux_words(&mut self, s: Wire, a: &[Wire], b: &[Wire]) -> Vec<Wire> {
        a.iter().zip(b).map(|(&x, &y)| self.mux(s, x, y)).collect()
    }

    /// Produce a linear [`CircuitSpec`] computing `outputs`.
    pub fn build(&self, outputs: &[Wire]) -> CircuitSpec {
        assert!(!outputs.is_empty(), "a circuit needs an output");
        let mut uses = vec![0usize; self.defs.len()];
        for d in &self.defs {
            if let Def::Gate(_, args) = d {
                for a in args {
                    uses[a.0] += 1;
                }
            }
        }
        for o in outputs {
            uses[o.0] += 1;
        }
        // unused gates vanish; only unused inputs need absorbing
        let mut live = vec![true; self.defs.len()];
        for i in (0..self.defs.len()).rev() {
            if let Def::Gate(_, args) = &self.defs[i] {
                if uses[i] == 0 {
                    live[i] = false;
                    for a in args {
                        uses[a.0] -= 1;
                    }
                }
            }
        }

        let mut inputs = Vec::new();
        let mut gates = Vec::new();
        // names available for each wire, consumed front to back
        let mut avail: Vec<Vec<String>> = vec![Vec::new(); self.defs.len()];
        let mut const_count = 0usize;
        let mut gate_count = 0usize;
        let mut next_gate = |prefix: &str| {
            gate_count += 1;
            format!("{prefix}{gate_count}")
        };
        let mut dead = Vec::new();

        for (i, d) in self.defs.iter().enumerate() {
            if !live[i] {
                continue;
            }
            let name = match d {
                Def::Const(v) => {
                    // each use gets its own constant input
                    for _ in 0..uses[i] {
                        let n = format!("k{const_count}");
                        const_count += 1;
                        inputs.push(CircuitInput { name: n.clone(), value: *v });
                        avail[i].push(n);
                    }
                    continue;
                }
                Def::Input(n) => {
                    inputs.push(CircuitInput { name: n.clone(), value: false });
                    n.clone()
                }
                Def::Gate(kind, args) => {
                    let args = args.iter().map(|a| take(&mut avail, a.0)).collect();
                    let id = next_gate("g");
                    gates.push(Gate { id: id.clone(), kind: *kind, args });
                    id
                }
            };
            match uses[i] {
                0 => dead.push(name),
                1 => avail[i].push(name),
                m => {
                    let id = next_gate("c");
                    let g = Gate { id, kind: GateKind::Copy(m), args: vec![name] };
                    avail[i].extend(g.outputs());
                    gates.push(g);
                }
            }
        }

        let mut outs: Vec<String> = outputs.iter().map(|o| take(&mut avail, o.0)).collect();
        for w in dead {
            let c = next_gate("c");
            gates.push(Gate { id: c.clone(), kind: GateKind::Copy(2), args: vec![w] });
            let n = next_gate("g");
            gates.push(Gate { id: n.clone(), kind: GateKind::Not, args: vec![format!("{c}.1")] });
            let t = next_gate("g");
            gates.push(Gate { id: t.clone(), kind: GateKind::Or, args: vec![format!("{c}.0"), n] });
            let a = next_gate("g");
            gates.push(Gate { id: a.clone(), kind: GateKind::And, args: vec![outs[0].clone(), t] });
            outs[0] = a;
        }
        let spec = CircuitSpec { inputs, gates, outputs: outs };
        debug_assert_eq!(spec.validate(), Ok(()));
        spec
    }
}

fn take(avail: &mut [Vec<String>], i: usize) -> String {
    avail[i].remove(0)
}

/// Random linear single-output circuit with at most `max_gates` gates.
pub fn random_circuit<R: Rng>(rng: &mut R, max_gates: usize) -> CircuitSpec {
    let mut inputs: Vec<CircuitInput> = Vec::new();
    let mut gates: Vec<Gate> = Vec::new();
    let mut open: Vec<String> = Vec::new();
    let fresh_input = |inputs: &mut Vec<CircuitInput>, rng: &mut R| {
        let name = format!("x{}", inputs.len());
        inputs.push(CircuitInput { name: name.clone(), value: rng.gen() });
        name
    };
    let target = rng.gen_range(0..=max_gates);
    while gates.len() < target {
        let remaining = target - gates.len();
        // leave room to merge the open wires into one
        if open.len() > remaining && open.len() > 1 {
            break;
        }
        let id = format!("g{}", gates.len());
        let pick = |open: &mut Vec<String>, rng: &mut R| open.swap_remove(rng.gen_range(0..open.len()));
        match rng.gen_range(0..6) {
            0 => {
                if open.is_empty() {
                    open.push(fresh_input(&mut inputs, rng));
                }
                let a = pick(&mut open, rng);
                gates.push(Gate { id: id.clone(), kind: GateKind::Not, args: vec![a] });
                open.push(id);
            }
            1 if open.len() + 3 <= remaining => {
                if open.is_empty() {
                    open.push(fresh_input(&mut inputs, rng));
                }
                let a = pick(&mut open, rng);
                let m = rng.gen_range(2..=3);
                let g = Gate { id, kind: GateKind::Copy(m), args: vec![a] };
                open.extend(g.outputs());
                gates.push(g);
            }
            _ => {
                while open.len() < 2 {
                    open.push(fresh_input(&mut inputs, rng));
                }
                let a = pick(&mut open, rng);
                let b = pick(&mut open, rng);
                let kind = [GateKind::And, GateKind::Or, GateKind::Implies][rng.gen_range(0..3)];
                gates.push(Gate { id: id.clone(), kind, args: vec![a, b] });
                open.push(id);
            }
        }
    }
    if open.is_empty() {
        open.push(fresh_input(&mut inputs, rng));
    }
    while open.len() > 1 {
        let id = format!("g{}", gates.len());
        let a = open.remove(0);
        let b = open.remove(0);
        let kind = [GateKind::And, GateKind::Or, GateKind::Implies][rng.gen_range(0..3)];
        gates.push(Gate { id: id.clone(), kind, args: vec![a, b] });
        open.push(id);
    }
    let c = CircuitSpec { inputs, gates, outputs: open };
    debug_assert_eq!(c.validate(), Ok(()));
    c
}

/// Every linear single-output circuit with at most `max_gates` gates and at
/// most `max_inputs` inputs (all inputs false; callers vary assignments).
/// Copy gates have fan-out 2.
pub fn enumerate_circuits(max_gates: usize, max_inputs: usize) -> Vec<CircuitSpec> {
    let mut out = Vec::new();
    for n_in in 1..=max_inputs {
        let inputs: Vec<CircuitInput> =
            (0..n_in).map(|i| CircuitInput { name: format!("x{i}"), value: false }).collect();
        let open: Vec<String> = inputs.iter().map(|i| i.name.clone()).collect();
        extend_circuits(&inputs, &mut Vec::new(), open, max_gates, &mut out);
    }
    out
}

fn extend_circuits(
    inputs: &[CircuitInput],
    gates: &mut Vec<Gate>,
    open: Vec<String>,
    budget: usize,
    out: &mut Vec<CircuitSpec>,
) {
    if open.len() == 1 {
        out.push(CircuitSpec { inputs: inputs.to_vec(), gates: gates.clone(), outputs: open.clone() });
    }
    // each remaining gate can reduce the open count by at most one
    if budget == 0 || open.len() > budget + 1 {
        return;
    }
    let id = format!("g{}", gates.len());
    for i in 0..open.len() {
        let mut rest = open.clone();
        let a = rest.remove(i);
        for kind in [GateKind::Not, GateKind::Copy(2)] {
            let g = Gate { id: id.clone(), kind, args: vec![a.clone()] };
            let mut next = rest.clone();
            next.extend(g.outputs());
            gates.push(g);
            extend_circuits(inputs, gates, next, budget - 1, out);
            gates.pop();
        }
        for j in 0..rest.len() {
            let mut rest2 = rest.clone();
            let b = rest2.remove(j);
            for kind in [GateKind::And, GateKind::Or, GateKind::Implies] {
                // AND/OR are symmetric: keep one argument order
                if kind != GateKind::Implies && j < i {
                    continue;
                }
                let g = Gate { id: id.clone(), kind, args: vec![a.clone(), b.clone()] };
                let mut next = rest2.clone();
                next.push(id.clone());
                gates.push(g);
                extend_circuits(inputs, gates, next, budget - 1, out);
                gates.pop();
            }
        }
    }
}

/// A linear chain of `n` binary gates over `n + 1` inputs.
pub fn chain_circuit(n: usize) -> CircuitSpec {
    let inputs: Vec<CircuitInput> =
        (0..=n).map(|i| CircuitInput { name: format!("x{i}"), value: i % 3 != 1 }).collect();
    let mut gates = Vec::new();
    let mut acc = "x0".to_string();
    for i in 1..=n {
        let id = format!("g{i}");
        let kind = [GateKind::And, GateKind::Or, GateKind::Implies][i % 3];
        gates.push(Gate { id: id.clone(), kind, args: vec![acc, format!("x{i}")] });
        acc = id;
    }
    CircuitSpec { inputs, gates, outputs: vec![acc] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input(name: &str, value: bool) -> CircuitInput {
        CircuitInput { name: name.into(), value }
    }

    #[test]
    fn truth_tables() {
        let c = CircuitSpec {
            inputs: vec![input("a", true), input("b", false)],
            gates: vec![Gate { id: "g".into(), kind: GateKind::Implies, args: vec!["a".into(), "b".into()] }],
            outputs: vec!["g".into()],
        };
        assert!(!eval_circuit(&c).unwrap());
    }

    #[test]
    fn copy_feeds_and_and_or() {
        let text = r#"{"inputs":[{"name":"a","value":true}],
            "gates":[{"id":"c","kind":"COPY","fanout":2,"args":["a"]},
                     {"id":"n","kind":"NOT","args":["c.1"]},
                     {"id":"g","kind":"OR","args":["c.0","n"]}],
            "output":"g"}"#;
        let c = CircuitSpec::from_json(text).unwrap();
        assert!(eval_circuit(&c).unwrap());
        let again = CircuitSpec::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_reuse_and_disorder() {
        let reuse = r#"{"inputs":[{"name":"a","value":true}],
            "gates":[{"id":"g","kind":"AND","args":["a","a"]}],"output":"g"}"#;
        assert!(matches!(CircuitSpec::from_json(reuse), Err(CircuitError::ReusedWire(_))));
        let order = r#"{"inputs":[{"name":"a","value":true}],
            "gates":[{"id":"g","kind":"NOT","args":["h"]},{"id":"h","kind":"NOT","args":["a"]}],"output":"g"}"#;
        assert!(matches!(CircuitSpec::from_json(order), Err(CircuitError::NotTopological(_))));
        let unused = r#"{"inputs":[{"name":"a","value":true},{"name":"b","value":true}],
            "gates":[{"id":"g","kind":"NOT","args":["a"]}],"output":"g"}"#;
        assert!(matches!(CircuitSpec::from_json(unused), Err(CircuitError::UnusedWire(_))));
    }

    #[test]
    fn builder_linearizes() {
        let mut b = CircuitBuilder::new();
        let x = b.input("x");
        let y = b.input("y");
        let _unused = b.input("z");
        let e = b.xnor(x, y);
        let n = b.not(x);
        let c = b.build(&[e, n]);
        c.validate().unwrap();
        for (xv, yv) in [(false, false), (false, true), (true, false), (true, true)] {
            let vals = HashMap::from([("x".to_string(), xv), ("y".to_string(), yv)]);
            let out = eval_outputs(&c.with_inputs(&vals)).unwrap();
            assert_eq!(out, vec![xv == yv, !xv]);
        }
    }

    #[test]
    fn arithmetic_helpers() {
        let mut b = CircuitBuilder::new();
        let w: Vec<Wire> = (0..3).map(|i| b.input(format!("w{i}"))).collect();
        let inc = b.increment(&w);
        let dec = b.decrement(&w);
        let is5 = b.eq_const(&w, 5);
        let mut outs = inc.clone();
        outs.extend(&dec);
        outs.push(is5);
        let c = b.build(&outs);
        for v in 0..8u64 {
            let vals = (0..3).map(|i| (format!("w{i}"), (v >> (2 - i)) & 1 == 1)).collect();
            let out = eval_outputs(&c.with_inputs(&vals)).unwrap();
            let word = |bits: &[bool]| bits.iter().fold(0u64, |acc, &b| acc * 2 + u64::from(b));
            assert_eq!(word(&out[0..3]), (v + 1) % 8);
            assert_eq!(word(&out[3..6]), (v + 7) % 8);
            assert_eq!(out[6], v == 5);
        }
    }

    #[test]
    fn random_circuits_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let c = random_circuit(&mut rng, 12);
            c.validate().unwrap();
            assert!(c.gates.len() <= 12, "{} gates", c.gates.len());
        }
    }

    #[test]
    fn enumeration_is_valid() {
        let all = enumerate_circuits(2, 3);
        assert!(all.len() > 50);
        for c in &all {
            c.validate().unwrap();
        }
    }
}
