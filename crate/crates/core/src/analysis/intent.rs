//! Parameter intents by fixpoint over the call graph.
//!
//! Each parameter has an ordered list of accesses: reads, writes and
//! forwards (the parameter passed on as an argument). A forward stands for
//! everything the callee parameter may do. The intent is read off the
//! possible first accesses: only writes give `out`, only reads give `in`
//! (or `inout` when a later write is possible), both give `inout`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::model::census::is_intrinsic;
use crate::model::{Intent, IntentCatalog, ProjectModel, SymEvent, UnitSummary};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Access {
    Read,
    Write,
    Forward { callee: String, pos: usize },
}

/// Per-routine, per-parameter access lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataflowProgram {
    pub routines: BTreeMap<String, Vec<Vec<Access>>>,
}

impl DataflowProgram {
    pub fn pair_count(&self) -> usize {
        self.routines.values().map(Vec::len).sum()
    }
}

/// Access list of every parameter of one unit.
pub fn param_accesses(s: &UnitSummary) -> Vec<Vec<Access>> {
    s.params
        .iter()
        .map(|p| {
            s.events
                .iter()
                .filter_map(|e| match e {
                    SymEvent::Var { name, write } if name == p => Some(if *write { Access::Write } else { Access::Read }),
                    SymEvent::Forward { name, callee, pos } if name == p => Some(Access::Forward {
                        callee: callee.clone(),
                        pos: *pos,
                    }),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

pub fn dataflow_from_model(model: &ProjectModel) -> DataflowProgram {
    DataflowProgram {
        routines: model
            .units
            .values()
            .filter(|u| u.is_subprogram())
            .map(|u| (u.name.clone(), param_accesses(u)))
            .collect(),
    }
}

/// Possible first accesses of a parameter over all executions, whether
/// an execution may touch it not at all, and whether one may write it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Effect {
    first_read: bool,
    first_write: bool,
    empty: bool,
    writes: bool,
}

impl Effect {
    const READ: Effect = Effect { first_read: true, first_write: false, empty: false, writes: false };
    const WRITE: Effect = Effect { first_read: false, first_write: true, empty: false, writes: true };
    const EMPTY: Effect = Effect { first_read: false, first_write: false, empty: true, writes: false };

    fn of_intent(intent: Intent) -> Effect {
        match intent {
            Intent::In => Effect::READ,
            Intent::Out => Effect::WRITE,
            Intent::InOut => Effect { writes: true, ..Effect::READ },
        }
    }

    /// Effect of running `self` then `next`.
    fn then(self, next: Effect) -> Effect {
        Effect {
            first_read: self.first_read || (self.empty && next.first_read),
            first_write: self.first_write || (self.empty && next.first_write),
            empty: self.empty && next.empty,
            writes: self.writes || next.writes,
        }
    }

    fn union(self, other: Effect) -> Effect {
        Effect {
            first_read: self.first_read || other.first_read,
            first_write: self.first_write || other.first_write,
            empty: self.empty || other.empty,
            writes: self.writes || other.writes,
        }
    }

    fn intent(self) -> Option<Intent> {
        match (self.first_read, self.first_write) {
            (false, false) => None,
            (false, true) => Some(Intent::Out),
            (true, false) if !self.writes => Some(Intent::In),
            _ => Some(Intent::InOut),
        }
    }
}

/// Effect of a callee outside the program being solved.
fn outside_effect(callee: &str, pos: usize, catalog: &IntentCatalog) -> Intent {
    if let Some(intents) = catalog.get(callee) {
        return intents.get(pos).copied().unwrap_or(Intent::InOut);
    }
    if is_intrinsic(callee) {
        Intent::In
    } else {
        Intent::InOut
    }
}

type Pair = (String, usize);

/// Strongly connected component of every parameter in the forwarding graph.
fn components(program: &DataflowProgram) -> BTreeMap<Pair, usize> {
    let pairs: Vec<Pair> = program
        .routines
        .iter()
        .flat_map(|(r, ps)| (0..ps.len()).map(move |i| (r.clone(), i)))
        .collect();
    let index: BTreeMap<&Pair, usize> = pairs.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let succ: Vec<Vec<usize>> = pairs
        .iter()
        .map(|(r, i)| {
            program.routines[r][*i]
                .iter()
                .filter_map(|a| match a {
                    Access::Forward { callee, pos } => index.get(&(callee.clone(), *pos)).copied(),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let n = pairs.len();
    let mut pred = vec![Vec::new(); n];
    for (v, ws) in succ.iter().enumerate() {
        for &w in ws {
            pred[w].push(v);
        }
    }
    // Kosaraju: finishing order on the graph, then components on the reverse
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some((v, k)) = stack.pop() {
            if let Some(&w) = succ[v].get(k) {
                stack.push((v, k + 1));
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in &pred[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    pairs.into_iter().zip(comp).collect()
}

/// Intents before unknowns are defaulted; `None` marks a parameter that
/// no execution reads or writes.
///
/// A forward that can lead back to the forwarding parameter is a recursive
/// call, which some execution must skip (its base case): it may contribute
/// nothing. Every other access always happens, in order.
pub fn solve_raw(program: &DataflowProgram, catalog: &IntentCatalog) -> BTreeMap<(String, usize), Option<Intent>> {
    let comp = components(program);
    let mut current: BTreeMap<Pair, Effect> = comp.keys().map(|k| (k.clone(), Effect::default())).collect();
    loop {
        let mut changed = false;
        for (r, params) in &program.routines {
            for (i, accesses) in params.iter().enumerate() {
                let key = (r.clone(), i);
                let mut eff = Effect::EMPTY;
                for a in accesses {
                    let step = match a {
                        Access::Read => Effect::READ,
                        Access::Write => Effect::WRITE,
                        Access::Forward { callee, pos } => match program.routines.get(callee) {
                            Some(cp) if *pos < cp.len() => {
                                let target = (callee.clone(), *pos);
                                let e = current[&target];
                                if comp[&target] == comp[&key] {
                                    e.union(Effect::EMPTY)
                                } else {
                                    e
                                }
                            }
                            Some(_) => Effect::of_intent(Intent::InOut),
                            None => Effect::of_intent(outside_effect(callee, *pos, catalog)),
                        },
                    };
                    eff = eff.then(step);
                }
                // the values only grow, so joining keeps the iteration monotone
                let joined = current[&key].union(eff);
                if joined != current[&key] {
                    current.insert(key, joined);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    current.into_iter().map(|(k, e)| (k, e.intent())).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntentTable {
    pub entries: BTreeMap<(String, usize), Intent>,
    /// Pairs whose intent was defaulted because nothing resolved it.
    pub defaulted: Vec<(String, usize)>,
}

impl IntentTable {
    pub fn get(&self, routine: &str, pos: usize) -> Option<Intent> {
        self.entries.get(&(routine.to_string(), pos)).copied()
    }

    pub fn report(&self, model: &ProjectModel) -> String {
        let mut out = String::new();
        for ((r, i), intent) in &self.entries {
            let pname = model
                .units
                .get(r)
                .and_then(|u| u.params.get(*i))
                .map(String::as_str)
                .unwrap_or("?");
            let note = if self.defaulted.contains(&(r.clone(), *i)) { " (default)" } else { "" };
            let _ = writeln!(out, "intent {r}({pname}) = {intent}{note}");
        }
        out
    }
}

pub fn solve(program: &DataflowProgram, catalog: &IntentCatalog) -> IntentTable {
    let mut table = IntentTable::default();
    for (k, v) in solve_raw(program, catalog) {
        match v {
            Some(i) => {
                table.entries.insert(k, i);
            }
            None => {
                table.defaulted.push(k.clone());
                table.entries.insert(k, Intent::InOut);
            }
        }
    }
    table
}

pub fn infer_intents(model: &ProjectModel) -> IntentTable {
    solve(&dataflow_from_model(model), &model.intent_catalog)
}
