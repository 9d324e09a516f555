//! Turing machines over the tape alphabet {0, 1}, their ID tuples, the
//! three-rule transition function and a direct simulator.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ReductionError;
use crate::gadgets::{CircuitBuilder, CircuitSpec, Wire};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    L,
    R,
}

/// `(next state, written symbol, head move)`, states by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Action {
    pub state: usize,
    pub write: u8,
    pub dir: Move,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TMSpec {
    pub states: Vec<String>,
    pub q0: usize,
    pub qa: usize,
    pub qr: usize,
    /// `delta[state][symbol]`, total on every state.
    pub delta: Vec<[Action; 2]>,
    pub tape_cells: usize,
    pub time_bits: usize,
}

#[derive(Serialize, Deserialize)]
struct TransitionJson {
    from: (String, String),
    to: (String, String, Move),
}

#[derive(Serialize, Deserialize)]
struct TMJson {
    states: Vec<String>,
    q0: String,
    qa: String,
    qr: String,
    #[serde(default = "zero")]
    blank: String,
    delta: Vec<TransitionJson>,
    tape_cells: usize,
    time_bits: usize,
}

fn zero() -> String {
    "0".into()
}

/// Largest supported tuple width.
pub const MAX_WIDTH: usize = 32;
pub const MAX_TIME_BITS: usize = 12;
pub const MAX_TAPE_CELLS: usize = 1 << 10;

fn symbol(s: &str) -> Result<u8, ReductionError> {
    match s {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(ReductionError::Machine(format!("tape symbol {other:?} is not 0 or 1"))),
    }
}

impl TMSpec {
    pub fn from_json(text: &str) -> Result<Self, ReductionError> {
        let raw: TMJson = serde_json::from_str(text).map_err(|e| ReductionError::Machine(e.to_string()))?;
        if raw.blank != "0" {
            return Err(ReductionError::Machine("the blank symbol must be \"0\"".into()));
        }
        let index: BTreeMap<&str, usize> = raw.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if index.len() != raw.states.len() {
            return Err(ReductionError::Machine("duplicate state name".into()));
        }
        let state = |s: &str| {
            index.get(s).copied().ok_or_else(|| ReductionError::Machine(format!("unknown state {s:?}")))
        };
        let (q0, qa, qr) = (state(&raw.q0)?, state(&raw.qa)?, state(&raw.qr)?);
        let mut table: Vec<[Option<Action>; 2]> = vec![[None, None]; raw.states.len()];
        for t in &raw.delta {
            let (q, a) = (state(&t.from.0)?, symbol(&t.from.1)?);
            let act = Action { state: state(&t.to.0)?, write: symbol(&t.to.1)?, dir: t.to.2 };
            if table[q][a as usize].replace(act).is_some() {
                return Err(ReductionError::Machine(format!("two transitions for ({}, {a})", t.from.0)));
            }
        }
        let mut delta = Vec::with_capacity(table.len());
        for (q, row) in table.iter().enumerate() {
            let mut out = [Action { state: q, write: 0, dir: Move::R }; 2];
            for a in 0..2u8 {
                out[a as usize] = match row[a as usize] {
                    Some(act) => act,
                    None if q == qa || q == qr => Action { state: q, write: a, dir: Move::R },
                    None => {
                        return Err(ReductionError::Machine(format!(
                            "no transition for ({}, {a})",
                            raw.states[q]
                        )))
                    }
                };
            }
            delta.push(out);
        }
        let tm = TMSpec { states: raw.states, q0, qa, qr, delta, tape_cells: raw.tape_cells, time_bits: raw.time_bits };
        tm.validate()?;
        Ok(tm)
    }

    pub fn to_json(&self) -> String {
        let name = |q: usize| self.states[q].clone();
        let delta = self
            .delta
            .iter()
            .enumerate()
            .flat_map(|(q, row)| {
                row.iter().enumerate().map(move |(a, act)| TransitionJson {
                    from: (name(q), a.to_string()),
                    to: (name(act.state), act.write.to_string(), act.dir),
                })
            })
            .collect();
        let raw = TMJson {
            states: self.states.clone(),
            q0: name(self.q0),
            qa: name(self.qa),
            qr: name(self.qr),
            blank: zero(),
            delta,
            tape_cells: self.tape_cells,
            time_bits: self.time_bits,
        };
        serde_json::to_string(&raw).expect("serializable")
    }

    pub fn validate(&self) -> Result<(), ReductionError> {
        let n = self.states.len();
        if n == 0 || self.q0 >= n || self.qa >= n || self.qr >= n {
            return Err(ReductionError::Machine("bad state indices".into()));
        }
        if self.qa == self.qr {
            return Err(ReductionError::Machine("accepting and rejecting states coincide".into()));
        }
        if self.delta.len() != n || self.delta.iter().flatten().any(|a| a.state >= n || a.write > 1) {
            return Err(ReductionError::Machine("transition table does not match the states".into()));
        }
        for q in [self.qa, self.qr] {
            for a in 0..2u8 {
                if self.delta[q][a as usize] != (Action { state: q, write: a, dir: Move::R }) {
                    return Err(ReductionError::Machine(format!(
                        "halting state {} must loop, rewrite its symbol and move R",
                        self.states[q]
                    )));
                }
            }
        }
        if self.tape_cells == 0 || self.tape_cells > MAX_TAPE_CELLS {
            return Err(ReductionError::Width(format!("tape_cells must be in 1..={MAX_TAPE_CELLS}")));
        }
        if self.time_bits == 0 || self.time_bits > MAX_TIME_BITS {
            return Err(ReductionError::Width(format!("time_bits must be in 1..={MAX_TIME_BITS}")));
        }
        Ok(())
    }

    /// Last representable time stamp.
    pub fn max_time(&self) -> u64 {
        (1 << self.time_bits) - 1
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// A machine that first writes `input` from cell 0 rightwards, walks
    /// back to cell 0 and then behaves like `self`. Its own tape starts
    /// all zero. The time stamp width grows to cover the extra steps.
    pub fn with_input_prelude(&self, input: &[u8]) -> Result<TMSpec, ReductionError> {
        if input.is_empty() {
            return Ok(self.clone());
        }
        if input.len() > self.tape_cells {
            return Err(ReductionError::Width("input longer than the tape".into()));
        }
        let mut tm = self.clone();
        let base = tm.states.len();
        let n = input.len();
        // write states w0..w{n-1}, then back states k1..k{n}
        for i in 0..n {
            tm.states.push(format!("write_{i}"));
        }
        for i in 0..n {
            tm.states.push(format!("back_{i}"));
        }
        for (i, &bit) in input.iter().enumerate() {
            let next = base + i + 1; // the next writer or the first back state
            let next = if i + 1 < n { next } else { base + n };
            tm.delta.push([Action { state: next, write: bit, dir: Move::R }; 2]);
        }
        for i in 0..n {
            let next = if i + 1 < n { base + n + i + 1 } else { self.q0 };
            tm.delta.push([
                Action { state: next, write: 0, dir: Move::L },
                Action { state: next, write: 1, dir: Move::L },
            ]);
        }
        tm.q0 = base;
        let extra = 2 * n as u64;
        let needed = self.max_time() + extra;
        tm.time_bits = (64 - needed.leading_zeros() as usize).max(1);
        tm.validate()?;
        Ok(tm)
    }
}

fn bits_for(count: usize) -> usize {
    // bits needed to number `count` things, at least one
    (usize::BITS - (count.max(2) - 1).leading_zeros()) as usize
}

/// Bit widths of the `⟨T, S, H, C, b⟩` blocks. Blocks are big-endian and
/// laid out in that order; `b` is one bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdLayout {
    pub t_bits: usize,
    pub s_bits: usize,
    pub h_bits: usize,
    pub c_bits: usize,
}

impl IdLayout {
    pub fn for_machine(tm: &TMSpec) -> Result<Self, ReductionError> {
        tm.validate()?;
        let cells = bits_for(tm.tape_cells);
        let l = IdLayout { t_bits: tm.time_bits, s_bits: bits_for(tm.states.len()), h_bits: cells, c_bits: cells };
        if l.width() > MAX_WIDTH {
            return Err(ReductionError::Width(format!("tuple width {} exceeds {MAX_WIDTH}", l.width())));
        }
        Ok(l)
    }

    pub fn width(&self) -> usize {
        self.t_bits + self.s_bits + self.h_bits + self.c_bits + 1
    }

    pub fn s_range(&self) -> std::ops::Range<usize> {
        self.t_bits..self.t_bits + self.s_bits
    }

    pub fn encode(&self, id: &IdTuple) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.width());
        push_bits(&mut out, id.t, self.t_bits);
        push_bits(&mut out, id.s, self.s_bits);
        push_bits(&mut out, id.h, self.h_bits);
        push_bits(&mut out, id.c, self.c_bits);
        push_bits(&mut out, id.b, 1);
        out
    }

    pub fn decode(&self, bits: &[bool]) -> IdTuple {
        assert_eq!(bits.len(), self.width());
        let mut it = bits.iter().copied();
        let mut take = |n: usize| (0..n).fold(0u64, |acc, _| acc * 2 + u64::from(it.next().expect("width")));
        IdTuple {
            t: take(self.t_bits),
            s: take(self.s_bits),
            h: take(self.h_bits),
            c: take(self.c_bits),
            b: take(1),
        }
    }
}

fn push_bits(out: &mut Vec<bool>, v: u64, n: usize) {
    out.extend((0..n).rev().map(|i| (v >> i) & 1 == 1));
}

/// One tuple `⟨T, S, H, C, b⟩`: at time `t` the machine is in state `s`
/// with its head at `h`, and cell `c` holds `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdTuple {
    pub t: u64,
    pub s: u64,
    pub h: u64,
    pub c: u64,
    pub b: u64,
}

/// The action for a state code and symbol. Codes that name no state
/// behave like halting states.
fn action(tm: &TMSpec, s: u64, b: u64) -> Action {
    match tm.delta.get(s as usize) {
        Some(row) => row[b as usize],
        None => Action { state: s as usize, write: b as u8, dir: Move::R },
    }
}

fn step_head(tm: &TMSpec, l: &IdLayout, h: u64, dir: Move) -> u64 {
    match dir {
        Move::R if h == tm.tape_cells as u64 - 1 => h,
        Move::R => (h + 1) % (1 << l.h_bits),
        Move::L if h == 0 => 0,
        Move::L => h - 1,
    }
}

/// The initial ID tuple for cell 0, also used as the null value.
pub fn null_tuple(tm: &TMSpec) -> IdTuple {
    IdTuple { t: 0, s: tm.q0 as u64, h: 0, c: 0, b: 0 }
}

/// The binary transition function on tuples:
///
/// * `⟨T,S,H,H,b⟩ ⟨T,_,_,_,_⟩ ↦ ⟨T+1, δQ(S,b), move(H), H, δΣ(S,b)⟩` when `T`
///   is not the last time stamp;
/// * `⟨T+1,S,H,_,_⟩ ⟨T,_,H',C',b'⟩ ↦ ⟨T+1, S, H, C', b'⟩` when `H' ≠ C'`;
/// * anything else ↦ the null tuple.
pub fn apply_rules(tm: &TMSpec, l: &IdLayout, a: &IdTuple, b: &IdTuple) -> IdTuple {
    if a.t == b.t && a.h == a.c && a.t < tm.max_time() {
        let act = action(tm, a.s, a.b);
        IdTuple { t: a.t + 1, s: act.state as u64, h: step_head(tm, l, a.h, act.dir), c: a.h, b: act.write as u64 }
    } else if a.t == b.t + 1 && b.h != b.c {
        IdTuple { t: a.t, s: a.s, h: a.h, c: b.c, b: b.b }
    } else {
        null_tuple(tm)
    }
}

/// Circuit values are `true` for bit 0 and `false` for bit 1.
pub fn bits_to_circuit(bits: &[bool]) -> Vec<bool> {
    bits.iter().map(|b| !b).collect()
}

fn tuple_inputs(b: &mut CircuitBuilder, prefix: &str, l: &IdLayout) -> Vec<Wire> {
    (0..l.width())
        .map(|i| {
            let x = b.input(format!("{prefix}{i}"));
            b.not(x)
        })
        .collect()
}

/// Circuit over inputs `a0..`, `b0..` (two tuples) computing
/// [`apply_rules`] into `m` outputs. Wires carry circuit values, so bits are
/// negated on the way in and out.
pub fn build_transition_circuit(tm: &TMSpec, l: &IdLayout) -> CircuitSpec {
    let mut c = CircuitBuilder::new();
    let a = tuple_inputs(&mut c, "a", l);
    let b = tuple_inputs(&mut c, "b", l);
    let split = |w: &[Wire]| {
        let (t, rest) = w.split_at(l.t_bits);
        let (s, rest) = rest.split_at(l.s_bits);
        let (h, rest) = rest.split_at(l.h_bits);
        let (cc, bb) = rest.split_at(l.c_bits);
        (t.to_vec(), s.to_vec(), h.to_vec(), cc.to_vec(), bb[0])
    };
    let (at, as_, ah, ac, ab) = split(&a);
    let (bt, _bs, bh, bc, bb) = split(&b);

    let t_eq = c.eq_words(&at, &bt);
    let h_is_c = c.eq_words(&ah, &ac);
    let a_last = c.all(&at);
    let a_not_last = c.not(a_last);
    let r1 = c.all(&[t_eq, h_is_c, a_not_last]);

    let bt_next = c.increment(&bt);
    let t_succ = c.eq_words(&at, &bt_next);
    let b_last = c.all(&bt);
    let b_not_last = c.not(b_last);
    let bh_is_c = c.eq_words(&bh, &bc);
    let bh_not_c = c.not(bh_is_c);
    let r2 = c.all(&[t_succ, b_not_last, bh_not_c]);

    // rule 1: table lookup on (S, b)
    let nb = c.not(ab);
    let mut next_s: Vec<Vec<Wire>> = vec![Vec::new(); l.s_bits];
    let mut write_one = Vec::new();
    let mut right = Vec::new();
    for code in 0..(1u64 << l.s_bits) {
        let is_code = c.eq_const(&as_, code);
        for sym in 0..2u64 {
            let sel = c.and(is_code, if sym == 1 { ab } else { nb });
            let act = action(tm, code, sym);
            for (i, ws) in next_s.iter_mut().enumerate() {
                if (act.state >> (l.s_bits - 1 - i)) & 1 == 1 {
                    ws.push(sel);
                }
            }
            if act.write == 1 {
                write_one.push(sel);
            }
            if act.dir == Move::R {
                right.push(sel);
            }
        }
    }
    let r1_t = c.increment(&at);
    let r1_s: Vec<Wire> = next_s.iter().map(|ws| c.any(ws)).collect();
    let go_right = c.any(&right);
    let at_end = c.eq_const(&ah, tm.tape_cells as u64 - 1);
    let inc = c.increment(&ah);
    let moved_r = c.mux_words(at_end, &ah, &inc);
    let at_start = c.eq_const(&ah, 0);
    let dec = c.decrement(&ah);
    let moved_l = c.mux_words(at_start, &ah, &dec);
    let r1_h = c.mux_words(go_right, &moved_r, &moved_l);
    let r1_b = c.any(&write_one);
    let mut rule1 = r1_t;
    rule1.extend(r1_s);
    rule1.extend(r1_h);
    rule1.extend(ah.iter().copied());
    rule1.push(r1_b);

    let mut rule2 = at.clone();
    rule2.extend(as_.iter().copied());
    rule2.extend(ah.iter().copied());
    rule2.extend(bc.iter().copied());
    rule2.push(bb);

    let null: Vec<Wire> = l.encode(&null_tuple(tm)).into_iter().map(|v| c.constant(v)).collect();
    let otherwise = c.mux_words(r2, &rule2, &null);
    let out = c.mux_words(r1, &rule1, &otherwise);
    let out: Vec<Wire> = out.into_iter().map(|w| c.not(w)).collect();
    c.build(&out)
}

/// Circuit over one tuple `q0..` whose output is `true` iff the state
/// block holds the accepting state's code.
pub fn build_extract_circuit(tm: &TMSpec, l: &IdLayout) -> CircuitSpec {
    let mut c = CircuitBuilder::new();
    let q = tuple_inputs(&mut c, "q", l);
    let s = &q[l.s_range()];
    let acc = c.eq_const(s, tm.qa as u64);
    c.build(&[acc])
}

/// A full configuration of the simulator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineId {
    pub time: u64,
    pub state: usize,
    pub head: usize,
    pub tape: Vec<u8>,
}

impl MachineId {
    /// The tuples `⟨T,S,H,C,b⟩` describing this ID, one per cell address.
    pub fn tuples(&self, l: &IdLayout) -> BTreeSet<IdTuple> {
        (0..1u64 << l.c_bits)
            .map(|c| IdTuple {
                t: self.time,
                s: self.state as u64,
                h: self.head as u64,
                c,
                b: self.tape.get(c as usize).copied().unwrap_or(0) as u64,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Accept,
    Reject,
    /// The machine did not halt within the step cap.
    CapExceeded,
}

#[derive(Clone, Debug)]
pub struct TmRun {
    pub outcome: Outcome,
    pub steps: u64,
    /// IDs from time 0 up to the halting (or last simulated) step.
    pub trace: Vec<MachineId>,
}

impl TmRun {
    pub fn accepts(&self) -> bool {
        self.outcome == Outcome::Accept
    }
}

/// Direct simulation from state `q0`, head at cell 0 and `input` written
/// from cell 0. The head stays put when moving off either end.
pub fn run_tm(tm: &TMSpec, input: &[u8], step_cap: u64) -> Result<TmRun, ReductionError> {
    tm.validate()?;
    if step_cap == 0 {
        return Err(ReductionError::Range("step cap must be at least 1".into()));
    }
    if input.len() > tm.tape_cells || input.iter().any(|&b| b > 1) {
        return Err(ReductionError::Machine("input does not fit the tape".into()));
    }
    let mut tape = vec![0u8; tm.tape_cells];
    tape[..input.len()].copy_from_slice(input);
    let mut id = MachineId { time: 0, state: tm.q0, head: 0, tape };
    let mut trace = vec![id.clone()];
    loop {
        if id.state == tm.qa || id.state == tm.qr {
            let outcome = if id.state == tm.qa { Outcome::Accept } else { Outcome::Reject };
            return Ok(TmRun { outcome, steps: id.time, trace });
        }
        if id.time == step_cap {
            return Ok(TmRun { outcome: Outcome::CapExceeded, steps: id.time, trace });
        }
        let act = tm.delta[id.state][id.tape[id.head] as usize];
        id.tape[id.head] = act.write;
        id.state = act.state;
        id.head = match act.dir {
            Move::R => (id.head + 1).min(tm.tape_cells - 1),
            Move::L => id.head.saturating_sub(1),
        };
        id.time += 1;
        trace.push(id.clone());
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    /// Flip cell 0, step back, accept iff the written bit is 1.
    pub(crate) fn flip() -> TMSpec {
        TMSpec::from_json(
            r#"{"states":["s","t","acc","rej"],"q0":"s","qa":"acc","qr":"rej","blank":"0",
            "delta":[{"from":["s","0"],"to":["t","1","L"]},{"from":["s","1"],"to":["t","0","L"]},
                     {"from":["t","0"],"to":["rej","0","R"]},{"from":["t","1"],"to":["acc","1","R"]}],
            "tape_cells":2,"time_bits":2}"#,
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::flip as flip_then_accept_if_one;
    use super::*;
    use crate::gadgets::CircuitEval;
    use std::collections::HashMap;

    #[test]
    fn parses_and_fills_halting_loops() {
        let tm = flip_then_accept_if_one();
        assert_eq!(tm.delta[tm.qa][1], Action { state: tm.qa, write: 1, dir: Move::R });
        assert_eq!(TMSpec::from_json(&tm.to_json()).unwrap(), tm);
    }

    #[test]
    fn rejects_partial_tables() {
        let bad = r#"{"states":["s","a","r"],"q0":"s","qa":"a","qr":"r",
            "delta":[{"from":["s","0"],"to":["a","0","R"]}],"tape_cells":2,"time_bits":2}"#;
        assert!(TMSpec::from_json(bad).is_err());
    }

    #[test]
    fn simulator_follows_the_table() {
        let tm = flip_then_accept_if_one();
        assert!(run_tm(&tm, &[], 3).unwrap().accepts());
        let r = run_tm(&tm, &[1], 3).unwrap();
        assert_eq!(r.outcome, Outcome::Reject);
        assert_eq!(r.trace.len(), 3);
    }

    #[test]
    fn prelude_writes_the_input() {
        let tm = flip_then_accept_if_one();
        let pre = tm.with_input_prelude(&[1, 1]).unwrap();
        let r = run_tm(&pre, &[], 100).unwrap();
        assert_eq!(r.outcome, Outcome::Reject);
        let r = run_tm(&pre, &[], 100).unwrap();
        let back_at_start = r.trace.iter().find(|id| id.state == tm.q0).unwrap();
        assert_eq!(back_at_start.tape, vec![1, 1]);
        assert_eq!(back_at_start.head, 0);
    }

    #[test]
    fn layout_round_trips() {
        let tm = flip_then_accept_if_one();
        let l = IdLayout::for_machine(&tm).unwrap();
        assert_eq!((l.t_bits, l.s_bits, l.h_bits, l.c_bits, l.width()), (2, 2, 1, 1, 7));
        let id = IdTuple { t: 3, s: 2, h: 1, c: 0, b: 1 };
        assert_eq!(l.decode(&l.encode(&id)), id);
    }

    #[test]
    fn circuit_matches_rules_exhaustively() {
        let tm = flip_then_accept_if_one();
        let l = IdLayout::for_machine(&tm).unwrap();
        let circ = build_transition_circuit(&tm, &l);
        let eval = CircuitEval::new(&circ).unwrap();
        let names: Vec<&str> = circ.inputs.iter().map(|i| i.name.as_str()).collect();
        let m = l.width();
        for x in 0..1u64 << (2 * m) {
            let bits: Vec<bool> = (0..2 * m).map(|i| (x >> i) & 1 == 1).collect();
            let (abits, bbits) = bits.split_at(m);
            let mut vals = HashMap::new();
            for (i, v) in bits_to_circuit(abits).into_iter().enumerate() {
                vals.insert(format!("a{i}"), v);
            }
            for (i, v) in bits_to_circuit(bbits).into_iter().enumerate() {
                vals.insert(format!("b{i}"), v);
            }
            let inputs: Vec<bool> = names.iter().map(|n| vals.get(*n).copied().unwrap_or_else(|| circ.input(n).unwrap().value)).collect();
            let out = eval.run(&inputs);
            let got = l.decode(&bits_to_circuit(&out));
            let want = apply_rules(&tm, &l, &l.decode(abits), &l.decode(bbits));
            assert_eq!(got, want, "{:?} {:?}", l.decode(abits), l.decode(bbits));
        }
    }

    #[test]
    fn catch_all_is_the_initial_tuple() {
        let tm = flip_then_accept_if_one();
        let l = IdLayout::for_machine(&tm).unwrap();
        let a = IdTuple { t: 0, s: 0, h: 0, c: 1, b: 0 };
        let b = IdTuple { t: 3, ..a };
        assert_eq!(apply_rules(&tm, &l, &a, &b), null_tuple(&tm));
    }
}
