//! Compiled circuits and the flow widget against straight-line evaluation.

mod common;

use std::collections::{BTreeSet, HashMap};

use common::{circuit_value, toy};
use kcfa::exact::{eval_exact, Fuel};
use kcfa::gadgets::{compile_circuit, enumerate_circuits, into_program, random_circuit, CircuitSpec, WidgetHandle};
use kcfa::kcfa::analyze;
use kcfa::syntax::is_affine;
use kcfa::{CacheKey, Program};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn assignments(c: &CircuitSpec) -> Vec<CircuitSpec> {
    let n = c.inputs.len();
    (0..1u32 << n)
        .map(|bits| {
            let vals: HashMap<String, bool> =
                c.inputs.iter().enumerate().map(|(i, x)| (x.name.clone(), bits >> i & 1 == 1)).collect();
            c.with_inputs(&vals)
        })
        .collect()
}

fn check(c: &CircuitSpec) {
    let want = circuit_value(c);
    let (e, h) = compile_circuit(c).unwrap();
    // the widget drops the second projection, so only affinity holds overall
    assert!(is_affine(&e).unwrap());
    let p = into_program(e).unwrap();
    let exact = eval_exact(&p, Fuel::default()).unwrap();
    assert_eq!(h.exact_value(&p, &exact), Some(want), "{}", c.to_json());
    let (abs, _) = analyze(&p, 0, None).unwrap();
    assert_eq!(h.abstract_flows(&p, &abs), (want, !want), "{}", c.to_json());
}

#[test]
fn every_small_circuit_on_every_input() {
    let all = enumerate_circuits(2, 2);
    assert!(all.len() > 20);
    for c in &all {
        for c in assignments(c) {
            check(&c);
        }
    }
}

#[test]
fn random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        check(&random_circuit(&mut rng, 8));
    }
}

#[test]
fn circuit_json_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let c = random_circuit(&mut rng, 6);
        assert_eq!(CircuitSpec::from_json(&c.to_json()).unwrap(), c);
    }
}

fn decided(p: &Program, cache: &kcfa::AbstractCache, h: &WidgetHandle) -> BTreeSet<bool> {
    let w = p.node_of(&h.app).unwrap();
    let tw = p.node_of(&h.tw).unwrap();
    cache.union_over_contours(CacheKey::Label(w)).iter().map(|c| c.lam == tw).collect()
}

#[test]
fn toy_program_separates_exact_from_approximate() {
    let (p, h) = toy();
    let exact = eval_exact(&p, Fuel::default()).unwrap();
    assert_eq!(h.exact_values(&p, &exact), BTreeSet::from([true]));
    for k in [0, 1] {
        let (abs, _) = analyze(&p, k, None).unwrap();
        assert_eq!(decided(&p, &abs, &h), BTreeSet::from([false, true]), "k = {k}");
    }
}
