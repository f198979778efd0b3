use std::fmt::Write;

use pm_lab::{Analysis, Pair};
use serde_json::{json, Value};

fn one_based(actions: &[usize]) -> Vec<usize> {
    actions.iter().map(|k| k + 1).collect()
}

fn set(actions: &[usize]) -> String {
    let items: Vec<String> = actions.iter().map(|k| (k + 1).to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn action_class(a: &Analysis, k: usize) -> &'static str {
    let cs = &a.cells;
    if cs.pareto.contains(&k) {
        "pareto"
    } else if cs.degenerate.contains(&k) {
        "degenerate"
    } else {
        "dominated"
    }
}

fn pair_json(p: Pair) -> Value {
    json!([p.lo() + 1, p.hi() + 1])
}

/// Actions and pairs are numbered from 1. `game` echoes the input so the
/// report can be fed back through `--game`.
pub fn analysis_json(a: &Analysis) -> Value {
    let cs = &a.cells;
    let neighbors: Vec<Value> = cs
        .neighbors
        .iter()
        .zip(&cs.plus_sets)
        .map(|(&p, plus)| {
            json!({
                "pair": pair_json(p),
                "plus_set": one_based(plus),
                "locally_observable": cs.is_locally_observable(p),
            })
        })
        .collect();
    json!({
        "game": a.game.description(),
        "class": a.class(),
        "actions": (0..cs.actions).map(|k| json!({"action": k + 1, "class": action_class(a, k)})).collect::<Vec<_>>(),
        "pareto": one_based(&cs.pareto),
        "dominated": one_based(&cs.dominated),
        "degenerate": one_based(&cs.degenerate),
        "neighbors": neighbors,
        "locally_observable_pairs": cs.locally_observable_pairs.iter().map(|&p| pair_json(p)).collect::<Vec<_>>(),
        "globally_observable": cs.globally_observable,
        "trivial_action": cs.trivial_action.map(|k| k + 1),
        "observer_plan": match &a.plan {
            Ok(plan) => plan.to_json(),
            Err(_) => Value::Null,
        },
        "observer_error": match &a.plan {
            Ok(_) => Value::Null,
            Err(e) => Value::String(e.to_string()),
        },
    })
}

pub fn analysis_text(a: &Analysis) -> String {
    let cs = &a.cells;
    let mut s = String::new();
    let _ = writeln!(s, "game: {} ({} actions, {} outcomes)", a.game.name(), cs.actions, cs.outcomes);
    let _ = writeln!(s, "class: {}", a.class());
    if let Some(k) = cs.trivial_action {
        let _ = writeln!(s, "trivially optimal action: {}", k + 1);
    }
    let _ = writeln!(s, "actions:");
    for k in 0..cs.actions {
        let _ = writeln!(s, "  {}: {}", k + 1, action_class(a, k));
    }
    let _ = writeln!(s, "pareto actions: {} {}", cs.pareto.len(), set(&cs.pareto));
    let _ = writeln!(s, "neighbor pairs: {}", cs.neighbors.len());
    for (&p, plus) in cs.neighbors.iter().zip(&cs.plus_sets) {
        let obs = if cs.is_locally_observable(p) { "locally observable" } else { "not locally observable" };
        let _ = writeln!(s, "  {p}  N+ = {}  {obs}", set(plus));
    }
    let _ = writeln!(s, "locally observable pairs: {}", cs.locally_observable_pairs.len());
    let _ = writeln!(s, "globally observable: {}", if cs.globally_observable { "yes" } else { "no" });
    match &a.plan {
        Ok(plan) => {
            let _ = writeln!(s, "observer plan:");
            for e in &plan.pairs {
                let _ = writeln!(s, "  {}  V = {}", e.pair, set(&e.observers));
            }
            let widths: Vec<String> = plan.widths.iter().map(|w| format!("{w:.6}")).collect();
            let _ = writeln!(s, "  W = [{}]", widths.join(", "));
        }
        Err(e) => {
            let _ = writeln!(s, "observer plan: none ({e})");
        }
    }
    s
}
