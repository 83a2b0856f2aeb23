use std::collections::BTreeMap;

use proptest::prelude::*;

use seg_migrate::analysis::{solve_raw, Access, DataflowProgram};
use seg_migrate::emit::{expand_template, logical_statements, render_unit, KeywordCase, RenderConfig};
use seg_migrate::frontend::{load_project, SourceSet};
use seg_migrate::model::{Intent, IntentCatalog};
use seg_migrate::pipeline::migrate_sources;
use seg_migrate::transform::{TargetKind, TargetNode, Template, TemplateRole};

// ---------------------------------------------------------------- intents

fn access(routines: usize) -> impl Strategy<Value = (u8, usize, usize)> {
    (0u8..4, 0..routines + 1, 0usize..3)
}

/// Routines `r0..`, each with one to three parameters. Forwards may target
/// a missing routine (`ext`) or an out-of-range position.
fn program() -> impl Strategy<Value = DataflowProgram> {
    (1usize..6).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(prop::collection::vec(access(n), 0..5), 1..4), n).prop_map(
            move |routines| {
                let mut p = DataflowProgram::default();
                for (i, params) in routines.into_iter().enumerate() {
                    let params = params
                        .into_iter()
                        .map(|accs| {
                            accs.into_iter()
                                .map(|(k, callee, pos)| match k {
                                    0 => Access::Read,
                                    1 => Access::Write,
                                    _ if callee == n => Access::Forward { callee: "ext".into(), pos },
                                    _ => Access::Forward { callee: format!("r{callee}"), pos },
                                })
                                .collect()
                        })
                        .collect();
                    p.routines.insert(format!("r{i}"), params);
                }
                p
            },
        )
    })
}

fn rename(p: &DataflowProgram, names: &BTreeMap<String, String>) -> DataflowProgram {
    let mut out = DataflowProgram::default();
    for (r, params) in &p.routines {
        let params = params
            .iter()
            .map(|accs| {
                accs.iter()
                    .map(|a| match a {
                        Access::Forward { callee, pos } => Access::Forward {
                            callee: names.get(callee).cloned().unwrap_or_else(|| callee.clone()),
                            pos: *pos,
                        },
                        other => other.clone(),
                    })
                    .collect()
            })
            .collect();
        out.routines.insert(names[r].clone(), params);
    }
    out
}

/// `a` is at or below `b` in: nothing < in, out < inout.
fn at_most(a: Option<Intent>, b: Option<Intent>) -> bool {
    match (a, b) {
        (None, _) => true,
        (_, Some(Intent::InOut)) => true,
        (Some(x), Some(y)) => x == y,
        (Some(_), None) => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn intents_do_not_depend_on_routine_names(p in program(), seed in any::<u64>()) {
        let mut old: Vec<String> = p.routines.keys().cloned().collect();
        // a bijection that reverses or rotates the sort order
        let k = (seed as usize) % old.len();
        old.rotate_left(k);
        let names: BTreeMap<String, String> = old
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), format!("q{}", 9 - i)))
            .collect();
        let before = solve_raw(&p, &IntentCatalog::default());
        let after = solve_raw(&rename(&p, &names), &IntentCatalog::default());
        for ((r, pos), v) in &before {
            prop_assert_eq!(after[&(names[r].clone(), *pos)], *v, "{}({})", r, pos);
        }
        prop_assert_eq!(before.len(), after.len());
    }

    #[test]
    fn adding_a_read_never_lowers_an_intent(p in program(), pick in any::<(usize, usize, usize)>()) {
        let before = solve_raw(&p, &IntentCatalog::default());
        let mut q = p.clone();
        let routine = q.routines.keys().nth(pick.0 % p.routines.len()).cloned().unwrap();
        let params = q.routines.get_mut(&routine).unwrap();
        let n = params.len();
        let accs = &mut params[pick.1 % n];
        let at = pick.2 % (accs.len() + 1);
        accs.insert(at, Access::Read);
        let after = solve_raw(&q, &IntentCatalog::default());
        for (k, v) in &before {
            prop_assert!(at_most(*v, after[k]), "{:?}: {:?} then {:?}", k, v, after[k]);
        }
    }

    #[test]
    fn solving_is_repeatable(p in program()) {
        prop_assert_eq!(solve_raw(&p, &IntentCatalog::default()), solve_raw(&p, &IntentCatalog::default()));
    }
}

// ---------------------------------------------------------------- rendering

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z][a-z0-9_]{0,11}",
        "[0-9]{1,6}",
        "'[a-z ]{0,20}'",
    ]
}

/// A statement of words joined by blanks, commas and operators.
fn statement() -> impl Strategy<Value = String> {
    prop::collection::vec((word(), prop::sample::select(vec![" ", ", ", " + ", "%", " = "])), 1..40).prop_map(|parts| {
        let mut s = String::new();
        for (i, (w, sep)) in parts.iter().enumerate() {
            if i > 0 {
                s.push_str(sep);
            }
            s.push_str(w);
        }
        s
    })
}

fn config() -> impl Strategy<Value = RenderConfig> {
    (1usize..=8, 72usize..=132).prop_map(|(indent_width, max_line_length)| RenderConfig {
        indent_width,
        max_line_length,
        keyword_case: KeywordCase::Lower,
    })
}

fn nested(stmts: Vec<String>, depth: usize) -> TargetNode {
    let mut node = TargetNode::block(
        TargetKind::Procedure,
        "subroutine s",
        stmts.into_iter().map(TargetNode::stmt).collect(),
        "end subroutine s",
    );
    for _ in 0..depth {
        node = TargetNode::block(TargetKind::Statement, "block", vec![node], "end block");
    }
    TargetNode::module("m", vec![TargetNode::contains(), node])
}

fn unblank(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rendered_lines_fit_and_rejoin(stmts in prop::collection::vec(statement(), 1..6), depth in 0usize..4, cfg in config()) {
        let text = render_unit(&nested(stmts.clone(), depth), &cfg).unwrap();
        for l in text.lines() {
            prop_assert!(l.len() <= cfg.max_line_length, "{} > {}: {}", l.len(), cfg.max_line_length, l);
        }
        let got: Vec<String> = logical_statements(&text)
            .iter()
            .map(|s| unblank(s))
            .filter(|s| !matches!(s.as_str(), "modulem" | "endmodulem" | "contains" | "subroutines" | "endsubroutines" | "block" | "endblock"))
            .collect();
        let want: Vec<String> = stmts.iter().map(|s| unblank(s)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn upper_case_changes_only_letter_case(stmts in prop::collection::vec(statement(), 1..6), cfg in config()) {
        let tree = nested(stmts, 1);
        let lower = render_unit(&tree, &cfg).unwrap();
        let upper = render_unit(&tree, &RenderConfig { keyword_case: KeywordCase::Upper, ..cfg }).unwrap();
        prop_assert_eq!(lower.to_ascii_lowercase(), upper.to_ascii_lowercase());
        let quoted = |s: &str| s.split('\'').skip(1).step_by(2).map(str::to_string).collect::<Vec<_>>();
        prop_assert_eq!(quoted(&lower), quoted(&upper));
    }

    #[test]
    fn templates_shift_with_depth(
        lines in prop::collection::vec((0usize..4, "[a-z][a-z0-9 =()]{0,30}"), 1..8),
        depth in 0usize..6,
        indent_width in 1usize..=8,
    ) {
        let text: String = lines.iter().map(|(lead, body)| format!("{}{}\n", " ".repeat(lead * 2), body.trim())).collect();
        let t = Template::new(TemplateRole::Statement, "t", text);
        let cfg = RenderConfig { indent_width, ..RenderConfig::default() };
        let flat = expand_template(&t, 0, &cfg).unwrap();
        let deep = expand_template(&t, depth, &cfg).unwrap();
        prop_assert_eq!(flat.len(), deep.len());
        let pad = " ".repeat(depth * indent_width);
        for (f, d) in flat.iter().zip(&deep) {
            if f.is_empty() {
                prop_assert!(d.is_empty());
            } else {
                prop_assert_eq!(d, &format!("{pad}{f}"));
            }
        }
    }
}

// ---------------------------------------------------------------- migration

/// A project with one segment and a few routines over it.
#[derive(Debug, Clone)]
struct Project {
    files: Vec<(String, String)>,
}

fn routine_body(j: usize, routines: usize, ints: usize, arrays: usize) -> impl Strategy<Value = Vec<String>> {
    let stmt = (0u8..7, 0..ints.max(1), 0..arrays.max(1), 0..routines).prop_map(move |(k, f, a, r)| match k {
        0 => format!("P.F{f} = X"),
        1 => format!("X = P.F{f} + 1"),
        2 if arrays > 0 => format!("P.A{a}(1) = X"),
        3 => "SEGACT P".to_string(),
        4 => "SEGDES P".to_string(),
        5 if r != j => format!("CALL S{r}(P, X)"),
        _ => "IF (X .GT. 0) X = X - 1".to_string(),
    });
    prop::collection::vec(stmt, 0..8)
}

fn project() -> impl Strategy<Value = Project> {
    (1usize..4, 0usize..3, 1usize..5).prop_flat_map(|(ints, arrays, routines)| {
        let bodies: Vec<_> = (0..routines).map(|j| routine_body(j, routines, ints, arrays)).collect();
        bodies.prop_map(move |bodies| {
            let mut seg = String::from("      SEGMENT, SEG\n");
            for i in 0..ints {
                seg.push_str(&format!("       INTEGER F{i}\n"));
            }
            for a in 0..arrays {
                seg.push_str(&format!("       INTEGER A{a}(N{a})\n"));
            }
            seg.push_str("      END SEGMENT\n");
            let mut files = vec![("seg.inc".to_string(), seg)];
            for (j, body) in bodies.iter().enumerate() {
                let mut s = format!("      SUBROUTINE S{j}(P, X)\n      -INC SEG\n      POINTEUR P.SEG\n      INTEGER X\n");
                for b in body {
                    s.push_str(&format!("      {b}\n"));
                }
                s.push_str("      END\n");
                files.push((format!("s{j}.f"), s));
            }
            let mut main = String::from("      PROGRAM MAIN\n      -INC SEG\n      POINTEUR P.SEG\n      INTEGER X\n");
            for a in 0..arrays {
                main.push_str(&format!("      N{a} = 3\n"));
            }
            main.push_str("      SEGINI, P\n      X = 1\n      CALL S0(P, X)\n      END\n");
            files.push(("main.f".to_string(), main));
            Project { files }
        })
    })
}

impl Project {
    fn sources(&self) -> SourceSet {
        SourceSet::from_memory(self.files.iter().map(|(p, t)| (p.as_str(), t.as_str())))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn migration_is_deterministic(p in project()) {
        let cfg = RenderConfig::default();
        let a = migrate_sources(&p.sources(), &[], IntentCatalog::default(), &cfg);
        let a = a.map_err(|f| f.diagnostics().join("\n"));
        prop_assert!(a.is_ok(), "{:?}\n{:#?}", a.as_ref().err(), p);
        let b = migrate_sources(&p.sources(), &[], IntentCatalog::default(), &cfg).map_err(|f| f.diagnostics().join("\n"));
        prop_assert_eq!(a.unwrap().rendered, b.unwrap().rendered);
    }

    #[test]
    fn migration_leaves_the_parsed_sources_alone(p in project()) {
        let fresh = load_project(&p.sources(), &[]).map_err(|e| format!("{:?}", e.errors)).unwrap();
        let m = migrate_sources(&p.sources(), &[], IntentCatalog::default(), &RenderConfig::default())
            .map_err(|f| f.diagnostics().join("\n"))
            .unwrap();
        prop_assert_eq!(&m.analysis.project.parsed, &fresh.parsed);
        prop_assert_eq!(&m.analysis.project.texts, &fresh.texts);
    }

    #[test]
    fn every_output_statement_fits_the_line_limit(p in project(), cfg in config()) {
        let m = migrate_sources(&p.sources(), &[], IntentCatalog::default(), &cfg)
            .map_err(|f| f.diagnostics().join("\n"))
            .unwrap();
        for (path, text) in &m.rendered {
            for l in text.lines() {
                prop_assert!(l.len() <= cfg.max_line_length, "{}: {}", path, l);
            }
        }
    }
}
