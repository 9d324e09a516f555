//! Invariants of the abstract interpreter, checked against the oracle.

mod common;

use common::{from_abstract, max_depth, random_closed, random_linear, truncate, Oracle};
use kcfa::gadgets::into_program;
use kcfa::kcfa::{analyze, analyze_with, check_acceptable, AnalysisOptions, Strategy};
use kcfa::syntax::{parse, unparse};
use kcfa::Program;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn linear(seed: u64, size: usize) -> Program {
    into_program(random_linear(&mut ChaCha8Rng::seed_from_u64(seed), size)).unwrap()
}

fn closed(seed: u64, size: usize) -> Program {
    into_program(random_closed(&mut ChaCha8Rng::seed_from_u64(seed), size)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn unparse_roundtrips(seed in any::<u64>(), size in 2usize..=40) {
        let p = closed(seed, size);
        prop_assert_eq!(&parse(&unparse(p.expr())).unwrap(), p.expr());
    }

    #[test]
    fn linear_terms_are_exact(seed in any::<u64>(), size in 2usize..=40, k in 0usize..=2) {
        let p = linear(seed, size);
        let exact = Oracle::run(p.expr(), 100_000).unwrap();
        let (cache, stats) = analyze(&p, k, None).unwrap();
        prop_assert_eq!(from_abstract(&p, &cache), truncate(&exact, k));
        prop_assert!(stats.max_set <= 1);
    }

    #[test]
    fn sound_on_terminating_terms(seed in any::<u64>(), size in 2usize..=30, k in 0usize..=2) {
        let p = closed(seed, size);
        let Ok(exact) = Oracle::run(p.expr(), 2_000) else { return Ok(()) };
        let Ok((cache, _)) = analyze(&p, k, Some(200_000)) else { return Ok(()) };
        let got = from_abstract(&p, &cache);
        for (key, vals) in truncate(&exact, k) {
            let have = got.get(&key);
            prop_assert!(have.is_some_and(|h| vals.is_subset(h)), "missing {:?}", key);
        }
        if max_depth(&exact) <= k {
            prop_assert_eq!(got, truncate(&exact, k));
        }
    }

    #[test]
    fn solvers_agree(seed in any::<u64>(), size in 2usize..=25, k in 0usize..=2) {
        let p = closed(seed, size);
        let budget = Some(100_000);
        let w = analyze_with(&p, k, AnalysisOptions { strategy: Strategy::Worklist, budget });
        let s = analyze_with(&p, k, AnalysisOptions { strategy: Strategy::Passes, budget });
        if let (Ok((w, _)), Ok((s, _))) = (w, s) {
            prop_assert_eq!(from_abstract(&p, &w), from_abstract(&p, &s));
        }
    }

    #[test]
    fn outputs_are_acceptable_and_least(seed in any::<u64>(), size in 2usize..=14, k in 0usize..=2) {
        let p = closed(seed, size);
        let Ok((cache, _)) = analyze(&p, k, Some(50_000)) else { return Ok(()) };
        prop_assert!(check_acceptable(&cache, &p, k).is_ok());
        let entries: Vec<_> = cache.entries().map(|(key, c, s)| (*key, c.clone(), s.clone())).collect();
        if entries.len() > 30 {
            return Ok(());
        }
        for (key, ctx, set) in &entries {
            let mut smaller = cache.clone();
            smaller.remove_key(*key, ctx);
            prop_assert!(check_acceptable(&smaller, &p, k).is_err());
            for c in set {
                let mut smaller = cache.clone();
                smaller.remove(*key, ctx, c);
                prop_assert!(check_acceptable(&smaller, &p, k).is_err());
            }
        }
    }
}

#[test]
fn deeper_k_is_never_coarser_on_the_golden_program() {
    let (p, _) = kcfa::gadgets::load_program(r"((\f. (f (f True)^1)^2) (\y. False))^3").unwrap();
    let sizes: Vec<usize> = (0..=3).map(|k| kcfa::kcfa::cache_stats(&analyze(&p, k, None).unwrap().0).max_set).collect();
    assert!(sizes.windows(2).all(|w| w[0] >= w[1]), "{sizes:?}");
}
