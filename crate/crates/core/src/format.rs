//! Line-oriented text formats for scenarios, probability tables and
//! functionals, plus resolution of command-line arguments that name either a
//! preset or a file.
//!
//! Box indices are 1-based in files. `#` starts a comment.
//!
//! ```text
//! scenario triangle
//! boxes 3
//! support all
//! context 1 2
//! context 2 3
//! context 1 3
//! ```
//!
//! A scenario file may instead hold a single `preset <name> [params]` or
//! `product <fileA> <fileB>` line (paths relative to the file).
//!
//! Probability files start with `prob <scenario-name>` and give every fine
//! outcome once, as `context <i> <j> … outcome <bits> value <number>` with
//! the bits in the order the boxes are listed. Scenarios without box
//! structure (products) use `measurement <m> cell <c> value <number>`.
//! Functional files hold `term … coeff <number>` lines with the same outcome
//! syntax, an optional `constant <number>` and an optional `functional <name>`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::num::Rational;
use crate::probability::{
    parse_box_preset, preset_box, preset_functional, FunctionalPreset, LinearFunctional, ProbabilityFunction,
};
use crate::scenario::{build_marginal_scenario, preset_scenario, product_scenario, Outcome, Preset, Scenario, Support};

/// Nesting depth of `product` lines before a file is assumed to include itself.
const MAX_DEPTH: usize = 16;

fn at(line: usize, message: impl Into<String>) -> Error {
    Error::ParseAt { line, message: message.into() }
}

/// Significant lines: number (1-based) and the text before any comment.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn box_index(tok: &str, line: usize) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(b) if b >= 1 => Ok(b - 1),
        _ => Err(at(line, format!("box index {tok:?} is not a positive integer"))),
    }
}

fn number(tok: Option<&str>, line: usize) -> Result<(Rational, bool)> {
    let tok = tok.ok_or_else(|| at(line, "missing number"))?;
    Rational::parse_exact(tok).map_err(|e| at(line, e.to_string()))
}

/// Parses scenario text. `base` resolves the paths of `product` lines.
pub fn parse_scenario(text: &str, base: Option<&Path>) -> Result<Scenario> {
    parse_scenario_at(text, base, 0)
}

fn parse_scenario_at(text: &str, base: Option<&Path>, depth: usize) -> Result<Scenario> {
    let mut name: Option<String> = None;
    let mut boxes: Option<usize> = None;
    let mut support: Option<Support> = None;
    let mut contexts: Vec<Vec<usize>> = Vec::new();
    let mut whole: Option<(usize, Scenario)> = None;
    for (ln, l) in lines(text) {
        if let Some((first, _)) = &whole {
            return Err(at(ln, format!("nothing may follow the preset or product line {first}")));
        }
        let mut toks = l.split_whitespace();
        let key = toks.next().unwrap_or_default();
        let rest: Vec<&str> = toks.collect();
        match key {
            "scenario" => {
                if rest.is_empty() {
                    return Err(at(ln, "scenario needs a name"));
                }
                name = Some(rest.join(" "));
            }
            "boxes" => {
                let n = rest.first().and_then(|t| t.parse::<usize>().ok()).filter(|&n| n >= 1);
                boxes = Some(n.ok_or_else(|| at(ln, "boxes needs a positive integer"))?);
            }
            "support" => {
                support = Some(match rest.first().copied() {
                    Some("all") => Support::All,
                    Some("cyclic-no-adjacent-ones") => Support::CyclicNoAdjacentOnes,
                    Some("list") if rest.len() > 1 => Support::List(rest[1..].iter().map(|s| s.to_string()).collect()),
                    _ => return Err(at(ln, "support must be all, cyclic-no-adjacent-ones or list <bits>…")),
                });
            }
            "context" => {
                if rest.is_empty() {
                    return Err(at(ln, "context needs at least one box"));
                }
                let ctx = rest.iter().map(|t| box_index(t, ln)).collect::<Result<Vec<_>>>()?;
                contexts.push(ctx);
            }
            "preset" => {
                if name.is_some() || boxes.is_some() || !contexts.is_empty() {
                    return Err(at(ln, "preset cannot be combined with other scenario lines"));
                }
                let p: Preset = rest.join(" ").parse().map_err(|e: Error| at(ln, e.to_string()))?;
                whole = Some((ln, preset_scenario(&p).map_err(|e| at(ln, e.to_string()))?));
            }
            "product" => {
                if rest.len() != 2 {
                    return Err(at(ln, "product needs two file names"));
                }
                if depth >= MAX_DEPTH {
                    return Err(at(ln, "product files nest too deeply"));
                }
                let load = |f: &str| -> Result<Scenario> {
                    let path = base.map_or_else(|| PathBuf::from(f), |b| b.join(f));
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| at(ln, format!("cannot read {}: {e}", path.display())))?;
                    parse_scenario_at(&text, path.parent(), depth + 1)
                        .map_err(|e| at(ln, format!("in {}: {e}", path.display())))
                };
                let (a, b) = (load(rest[0])?, load(rest[1])?);
                whole = Some((ln, product_scenario(&a, &b).map_err(|e| at(ln, e.to_string()))?));
            }
            other => return Err(at(ln, format!("unknown directive {other:?}"))),
        }
    }
    if let Some((_, s)) = whole {
        return Ok(s);
    }
    let n = boxes.ok_or_else(|| Error::Parse("scenario has no boxes line".into()))?;
    if contexts.is_empty() {
        return Err(Error::Parse("scenario has no context lines".into()));
    }
    if let Some(b) = contexts.iter().flatten().find(|&&b| b >= n) {
        return Err(Error::Parse(format!("context refers to box {} of {n}", b + 1)));
    }
    build_marginal_scenario(name.unwrap_or_else(|| "unnamed".into()), n, &contexts, support.unwrap_or(Support::All))
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text, path.parent())
}

/// Outcome named by `context <i> …  outcome <bits>` or `measurement <m> cell <c>`;
/// returns the outcome id and the unused tail of the tokens.
fn outcome_ref<'a>(s: &Scenario, toks: &'a [&'a str], ln: usize) -> Result<(usize, &'a [&'a str])> {
    match toks.first().copied() {
        Some("context") => {
            let end = toks.iter().position(|t| *t == "outcome").ok_or_else(|| at(ln, "missing outcome"))?;
            let listed = toks[1..end].iter().map(|t| box_index(t, ln)).collect::<Result<Vec<_>>>()?;
            let bits = toks.get(end + 1).ok_or_else(|| at(ln, "outcome needs a bit string"))?;
            if bits.len() != listed.len() || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(at(ln, format!("outcome {bits:?} does not match {} listed boxes", listed.len())));
            }
            let m = s
                .context_index(&listed)
                .ok_or_else(|| at(ln, format!("{} has no such context", s.name())))?;
            // reorder the bits to ascending box order
            let mut pairs: Vec<(usize, char)> = listed.iter().copied().zip(bits.chars()).collect();
            pairs.sort();
            let sorted: String = pairs.iter().map(|(_, c)| *c).collect();
            let c = s
                .cell_by_assignment(m, &sorted)
                .ok_or_else(|| at(ln, format!("outcome {bits} is outside the support")))?;
            Ok((s.cell_id(m, c), &toks[end + 2..]))
        }
        Some("measurement") => {
            let idx = |k: usize, what: &str| -> Result<usize> {
                toks.get(k)
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|&v| v >= 1)
                    .map(|v| v - 1)
                    .ok_or_else(|| at(ln, format!("{what} needs a positive index")))
            };
            let m = idx(1, "measurement")?;
            if toks.get(2) != Some(&"cell") {
                return Err(at(ln, "expected measurement <m> cell <c>"));
            }
            let c = idx(3, "cell")?;
            if m >= s.measurements().len() || c >= s.measurements()[m].cells().len() {
                return Err(at(ln, format!("no cell {} of measurement {}", c + 1, m + 1)));
            }
            Ok((s.cell_id(m, c), &toks[4..]))
        }
        _ => Err(at(ln, "expected context … outcome … or measurement … cell …")),
    }
}

/// Parses a probability file against `s`. Every fine outcome must be listed
/// exactly once.
pub fn parse_probability(text: &str, s: Arc<Scenario>) -> Result<ProbabilityFunction> {
    let mut it = lines(text);
    let (ln, header) = it.next().ok_or_else(|| Error::Parse("empty probability file".into()))?;
    let name = header
        .strip_prefix("prob")
        .filter(|r| r.is_empty() || r.starts_with(char::is_whitespace))
        .map(str::trim)
        .ok_or_else(|| at(ln, "probability file must start with prob <scenario-name>"))?;
    if name != s.name() {
        return Err(at(ln, format!("table is for scenario {name:?}, not {:?}", s.name())));
    }
    let mut values: Vec<Option<Rational>> = vec![None; s.outcomes().len()];
    let mut decimal = false;
    for (ln, l) in it {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let (id, tail) = outcome_ref(&s, &toks, ln)?;
        if tail.first() != Some(&"value") || tail.len() != 2 {
            return Err(at(ln, "expected value <number> after the outcome"));
        }
        let (v, d) = number(tail.get(1).copied(), ln)?;
        decimal |= d;
        if values[id].replace(v).is_some() {
            return Err(at(ln, format!("outcome {} given twice", s.outcome_label(id))));
        }
    }
    if let Some(id) = values.iter().position(Option::is_none) {
        return Err(Error::Parse(format!("no value for outcome {}", s.outcome_label(id))));
    }
    let values = values.into_iter().map(|v| v.expect("checked")).collect();
    Ok(ProbabilityFunction::new(s.clone(), values)?.with_decimal(decimal).with_name(format!("table on {}", s.name())))
}

pub fn parse_functional(text: &str, s: &Scenario) -> Result<LinearFunctional> {
    let mut name = "functional".to_string();
    let mut constant = Rational::zero();
    let mut merged: HashMap<usize, Rational> = HashMap::new();
    let mut order = Vec::new();
    for (ln, l) in lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks[0] {
            "functional" => name = toks[1..].join(" "),
            "constant" => constant = number(toks.get(1).copied(), ln)?.0,
            "term" => {
                let (id, tail) = outcome_ref(s, &toks[1..], ln)?;
                if tail.first() != Some(&"coeff") || tail.len() != 2 {
                    return Err(at(ln, "expected coeff <number> after the outcome"));
                }
                let c = number(tail.get(1).copied(), ln)?.0;
                let e = merged.entry(id).or_insert_with(|| {
                    order.push(id);
                    Rational::zero()
                });
                *e = &*e + &c;
            }
            other => return Err(at(ln, format!("unknown directive {other:?}"))),
        }
    }
    let terms: Vec<(Outcome, Rational)> = order.iter().map(|id| (s.outcome(*id).clone(), merged[id].clone())).collect();
    Ok(LinearFunctional { name, terms, constant })
}

/// A scenario argument: an existing file, else a preset such as `chsh` or `cycle(7)`.
pub fn resolve_scenario(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.is_file() {
        return load_scenario(path);
    }
    let p: Preset = arg.parse()?;
    preset_scenario(&p)
}

/// A table argument: an existing file, else a box preset such as `pr` or `isotropic(1/2)`.
pub fn resolve_probability(arg: &str, s: Arc<Scenario>) -> Result<ProbabilityFunction> {
    let path = Path::new(arg);
    if path.is_file() {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        return parse_probability(&text, s);
    }
    let (b, decimal) = parse_box_preset(arg)?;
    Ok(preset_box(&b, s)?.with_decimal(decimal))
}

/// An objective argument: an existing file, else `chsh`, `kcbs` or `gyni`.
pub fn resolve_functional(arg: &str, s: &Scenario) -> Result<LinearFunctional> {
    let path = Path::new(arg);
    if path.is_file() {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        return parse_functional(&text, s);
    }
    let f: FunctionalPreset = arg.parse()?;
    preset_functional(f, s)
}

/// Renders a table in the file format; parsing the result gives it back.
pub fn write_probability(p: &ProbabilityFunction) -> String {
    let s = p.scenario();
    let mut out = format!("prob {}\n", s.name());
    let mut seen = vec![false; s.outcomes().len()];
    for m in 0..s.measurements().len() {
        for c in 0..s.measurements()[m].cells().len() {
            let id = s.cell_id(m, c);
            if std::mem::replace(&mut seen[id], true) {
                continue;
            }
            let at = match (s.layout(), s.cell_assignment(m, c)) {
                (Some(layout), Some(bits)) => {
                    let ctx: Vec<String> = layout.contexts[m].iter().map(|b| (b + 1).to_string()).collect();
                    format!("context {} outcome {bits}", ctx.join(" "))
                }
                _ => format!("measurement {} cell {}", m + 1, c + 1),
            };
            out.push_str(&format!("{at} value {}\n", p.value(id)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "# Specker triangle\nscenario triangle\nboxes 3\nsupport all\ncontext 1 2\ncontext 2 3\ncontext 1 3\n";

    #[test]
    fn scenario_file() {
        let s = parse_scenario(TRIANGLE, None).unwrap();
        assert_eq!(s.element_count(), 8);
        assert_eq!(s.measurements().len(), 3);
        assert_eq!(s.name(), "triangle");
    }

    #[test]
    fn malformed_context_reports_line() {
        let text = "scenario x\nboxes 2\ncontext 1 zero\n";
        match parse_scenario(text, None) {
            Err(Error::ParseAt { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_scenario("boxes 2\ncontext 0\n", None), Err(Error::ParseAt { line: 2, .. })));
    }

    #[test]
    fn preset_line() {
        let s = parse_scenario("preset cycle 5\n", None).unwrap();
        assert_eq!(s.element_count(), 11);
        assert!(parse_scenario("preset chsh\ncontext 1\n", None).is_err());
    }

    #[test]
    fn probability_round_trip() {
        let s = Arc::new(preset_scenario(&Preset::Chsh).unwrap());
        let (b, _) = parse_box_preset("isotropic(1/3)").unwrap();
        let p = preset_box(&b, s.clone()).unwrap();
        let text = write_probability(&p);
        let q = parse_probability(&text, s.clone()).unwrap();
        assert_eq!(p.values(), q.values());
        // dropping a line is an error
        let short: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(parse_probability(&short, s.clone()).is_err());
        // wrong header
        assert!(parse_probability(&text.replacen("chsh", "pentagon", 1), s).is_err());
    }

    #[test]
    fn bits_follow_listed_order() {
        let s = parse_scenario(TRIANGLE, None).unwrap();
        let a = outcome_ref(&s, &["context", "1", "2", "outcome", "01"], 1).unwrap().0;
        let b = outcome_ref(&s, &["context", "2", "1", "outcome", "10"], 1).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn functional_file() {
        let s = preset_scenario(&Preset::Pentagon).unwrap();
        let mut text = String::from("functional half kcbs\nconstant 1/2\n");
        for i in 1..=5 {
            let j = i % 5 + 1;
            text.push_str(&format!("term context {i} {j} outcome 10 coeff 1/2\n"));
        }
        let f = parse_functional(&text, &s).unwrap();
        assert_eq!(f.terms.len(), 5);
        let kcbs = preset_functional(FunctionalPreset::Kcbs, &s).unwrap();
        let s = Arc::new(s);
        let p = preset_box(&crate::probability::BoxPreset::UniformCycle(Rational::new(2, 5)), s).unwrap();
        let half = &kcbs.evaluate(&p).unwrap() * &Rational::new(1, 2);
        assert_eq!(f.evaluate(&p).unwrap(), &half + &Rational::new(1, 2));
    }
}
