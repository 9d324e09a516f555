//! JSON dumps of exact and abstract caches.
//!
//! ```text
//! {"entries":[{"kind":"label"|"var","key":"3","contour":"3.2.1",
//!              "values":[{"lam":"(\\y. ...)","label":"7","env":{"z1":"3"}}]}]}
//! ```
//!
//! Entries are sorted by `(kind, key, contour)` as strings, values by their
//! rendering, so identical caches always serialize to identical bytes.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::exact::{CacheKey, Closure, Contour, ExactCache};
use crate::kcfa::{AbstractCache, AnalysisStats};
use crate::syntax::{unparse, NodeId, Program};

#[derive(Serialize, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClosureJson {
    pub lam: String,
    pub label: String,
    pub env: BTreeMap<String, String>,
}

#[derive(Serialize)]
pub struct EntryJson {
    pub kind: &'static str,
    pub key: String,
    pub contour: String,
    pub values: Vec<ClosureJson>,
}

#[derive(Serialize)]
pub struct CacheJson {
    pub entries: Vec<EntryJson>,
}

#[derive(Serialize)]
pub struct ReportJson {
    pub k: usize,
    pub iterations: u64,
    pub cache: CacheJson,
    pub stats: AnalysisStats,
}

/// Renders closures, memoizing the text of each abstraction.
pub struct Renderer<'p> {
    prog: &'p Program,
    lam_text: HashMap<NodeId, String>,
}

impl<'p> Renderer<'p> {
    pub fn new(prog: &'p Program) -> Self {
        Renderer { prog, lam_text: HashMap::new() }
    }

    pub fn closure(&mut self, c: &Closure) -> ClosureJson {
        let prog = self.prog;
        let lam = self.lam_text.entry(c.lam).or_insert_with(|| unparse(prog.subterm(c.lam))).clone();
        let env = c
            .env
            .iter()
            .map(|(v, ctx)| (prog.var_name(*v).to_owned(), ctx.display(prog)))
            .collect();
        ClosureJson { lam, label: prog.label(c.lam).as_str().to_owned(), env }
    }

    fn entry<'a>(
        &mut self,
        key: &CacheKey,
        ctx: &Contour,
        values: impl IntoIterator<Item = &'a Closure>,
    ) -> EntryJson {
        let mut values: Vec<ClosureJson> = values.into_iter().map(|c| self.closure(c)).collect();
        values.sort();
        EntryJson {
            kind: key.kind(),
            key: key.name(self.prog).to_owned(),
            contour: ctx.display(self.prog),
            values,
        }
    }
}

fn sorted(mut entries: Vec<EntryJson>) -> CacheJson {
    entries.sort_by(|a, b| (a.kind, &a.key, &a.contour).cmp(&(b.kind, &b.key, &b.contour)));
    CacheJson { entries }
}

pub fn exact_cache_json(prog: &Program, cache: &ExactCache) -> CacheJson {
    let mut r = Renderer::new(prog);
    sorted(cache.iter().map(|(k, c, v)| r.entry(k, c, std::iter::once(v))).collect())
}

pub fn abstract_cache_json(prog: &Program, cache: &AbstractCache) -> CacheJson {
    let mut r = Renderer::new(prog);
    sorted(cache.entries().map(|(k, c, v)| r.entry(k, c, v)).collect())
}

pub fn report_json(prog: &Program, cache: &AbstractCache, stats: AnalysisStats) -> ReportJson {
    ReportJson {
        k: cache.k(),
        iterations: stats.iterations,
        cache: abstract_cache_json(prog, cache),
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{eval_exact, Fuel};
    use crate::kcfa::analyze;

    #[test]
    fn exact_dump_is_sorted_and_singleton() {
        let (p, _) = Program::from_text(r"((\x. x^0)^1 (\z. z^4)^2)^3").unwrap();
        let c = eval_exact(&p, Fuel::default()).unwrap();
        let j = exact_cache_json(&p, &c);
        assert!(j.entries.iter().all(|e| e.values.len() == 1));
        let keys: Vec<_> = j.entries.iter().map(|e| (e.kind, e.key.clone(), e.contour.clone())).collect();
        let mut s = keys.clone();
        s.sort();
        assert_eq!(keys, s);
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.contains(r#"{"kind":"label","key":"0","contour":"3","values":[{"lam":"(\\z. z^4)^2","label":"2","env":{}}]}"#));
    }

    #[test]
    fn report_is_byte_stable() {
        let (p, _) = Program::from_text(r"((\f. ((f (\a. a)) (f (\b. b)))) (\x. x))").unwrap();
        let one = {
            let (c, s) = analyze(&p, 1, None).unwrap();
            serde_json::to_string(&report_json(&p, &c, s)).unwrap()
        };
        let two = {
            let (c, s) = analyze(&p, 1, None).unwrap();
            serde_json::to_string(&report_json(&p, &c, s)).unwrap()
        };
        assert_eq!(one, two);
        assert!(one.starts_with(r#"{"k":1,"iterations":"#));
    }
}
