//! Browser bindings: scenario summaries, CE checks and bound optimisation.
//!
//! Every function returns a JSON string; errors come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use std::sync::Arc;

use wasm_bindgen::prelude::*;

use ctxlab::ce::{ce_optimize, consistent_optimize, nc_optimize, CeChecker};
use ctxlab::format::{resolve_functional, resolve_probability, resolve_scenario};
use ctxlab::scenario::{exclusivity_graph, ExclusivityMode};
use ctxlab::{Limits, Rational};

fn exact(v: &Rational) -> String {
    format!("{{\"exact\":\"{v}\",\"decimal\":{}}}", v.to_f64())
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn wrap(r: ctxlab::Result<String>) -> String {
    r.unwrap_or_else(|e| format!("{{\"error\":{}}}", quote(&e.to_string())))
}

fn mode(name: &str) -> ctxlab::Result<ExclusivityMode> {
    name.parse()
}

/// Element, measurement and exclusivity-graph counts of a preset.
#[wasm_bindgen]
pub fn scenario_info(scenario: &str) -> String {
    wrap((|| {
        let s = resolve_scenario(scenario)?;
        let g = |m| {
            let g = exclusivity_graph(&s, m);
            format!("{{\"vertices\":{},\"edges\":{}}}", g.vertex_count(), g.edge_count())
        };
        Ok(format!(
            "{{\"name\":{},\"elements\":{},\"measurements\":{},\"strict\":{},\"coarse\":{}}}",
            quote(s.name()),
            s.element_count(),
            s.measurements().len(),
            g(ExclusivityMode::Strict),
            g(ExclusivityMode::Coarse)
        ))
    })())
}

/// `copies`-fold CE check of a box preset such as `isotropic(0.7)`.
#[wasm_bindgen]
pub fn check_ce(scenario: &str, prob: &str, copies: usize, exclusivity: &str) -> String {
    wrap((|| {
        let s = Arc::new(resolve_scenario(scenario)?);
        let p = resolve_probability(prob, s.clone())?;
        p.ensure_valid()?;
        let r = CeChecker::new(s, copies.max(1), mode(exclusivity)?, &Limits::default())?.check(&p)?;
        let clique: Vec<String> = r.worst_labels.iter().map(|l| quote(l)).collect();
        Ok(format!(
            "{{\"holds\":{},\"worst_sum\":{},\"worst_clique\":[{}]}}",
            r.holds,
            exact(&r.worst_sum),
            clique.join(",")
        ))
    })())
}

/// Maxima of a functional over the non-contextual, CE and consistent sets.
#[wasm_bindgen]
pub fn bound_ladder(scenario: &str, objective: &str, exclusivity: &str) -> String {
    wrap((|| {
        let s = Arc::new(resolve_scenario(scenario)?);
        let f = resolve_functional(objective, &s)?;
        let limits = Limits::default();
        let nc = nc_optimize(s.clone(), &f, &limits)?.value;
        let ce = ce_optimize(s.clone(), &f, mode(exclusivity)?, &limits)?.value;
        let cons = consistent_optimize(s, &f)?.value;
        Ok(format!(
            "{{\"objective\":{},\"nc\":{},\"ce1\":{},\"consistent\":{}}}",
            quote(&f.name),
            exact(&nc),
            exact(&ce),
            exact(&cons)
        ))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pentagon_info() {
        let v = scenario_info("pentagon");
        assert!(v.contains("\"elements\":11"), "{v}");
    }

    #[test]
    fn pr_box_single_copy() {
        let v = check_ce("chsh", "pr", 1, "coarse");
        assert!(v.contains("\"holds\":true"), "{v}");
    }

    #[test]
    fn errors_are_json() {
        assert!(scenario_info("nonsense").starts_with("{\"error\":"));
    }

    #[test]
    fn ladder_on_pentagon() {
        let v = bound_ladder("pentagon", "kcbs", "coarse");
        assert!(v.contains("\"nc\":{\"exact\":\"2\""), "{v}");
        assert!(v.contains("\"consistent\":{\"exact\":\"5/2\""), "{v}");
    }
}
