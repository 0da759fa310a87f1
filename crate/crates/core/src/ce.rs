//! Consistent Exclusivity, the non-contextual set, the consistent set, and
//! optimisation and threshold searches over them.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::clique::{
    fractional_clique_number, independent_sets, max_weight_clique, max_weight_clique_conormal, maximal_cliques_capped,
    CliqueSet, CONORMAL_FACTOR_LIMIT,
};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::lp::{self, FarkasCertificate, LinearProgram, LpStatus, Simplex};
use crate::num::{Rational, Scalar, FLOAT_TOL};
use crate::probability::{
    common_components, preset_box, preset_functional, product_probability_on, BoxPreset, FunctionalPreset,
    JointDistribution, LinearFunctional, ProbabilityFunction,
};
use crate::scenario::{exclusivity_graph, product_scenario, ExclusivityGraph, ExclusivityMode, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CliqueMethod {
    /// Every maximal clique listed.
    Enumeration,
    /// Weighted branch and bound on the full graph.
    BranchAndBound,
    /// Weighted search over a co-normal product of factor graphs.
    Conormal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CeReport<T: Scalar = Rational> {
    pub holds: bool,
    /// Outcome ids of the `copies`-fold scenario.
    pub worst_clique: Vec<usize>,
    pub worst_labels: Vec<String>,
    pub worst_sum: T,
    pub copies: usize,
    pub mode: ExclusivityMode,
    pub method: CliqueMethod,
    /// Number of maximal cliques when they were listed.
    pub clique_count: Option<usize>,
}

enum Plan {
    Cliques(CliqueSet),
    Conormal {
        left: ExclusivityGraph,
        right: ExclusivityGraph,
        pairs: Vec<usize>,
        /// Maximal independent sets of both factors, for the product of
        /// fractional clique numbers that caps the search.
        independent: Option<(CliqueSet, CliqueSet)>,
    },
    Search,
}

/// CE test for one scenario, copy count and exclusivity mode; builds the
/// product scenario and its clique structure once for repeated checks.
/// Independent sets listed per factor before the product bound is skipped.
const INDEPENDENT_SET_CAP: usize = 100_000;

pub struct CeChecker {
    base: Arc<Scenario>,
    copies: usize,
    mode: ExclusivityMode,
    /// `levels[i]` is the `(i+1)`-fold product.
    levels: Vec<Arc<Scenario>>,
    graph: Option<ExclusivityGraph>,
    plan: Plan,
    limits: Limits,
}

fn outcome_count_power(s: &Scenario, k: usize) -> usize {
    let v = s.outcomes().len();
    (1..k).fold(v, |acc, _| acc.saturating_mul(v))
}

/// Product outcome id of `A×B` for factor outcome ids, indexed `a·|V2| + b`.
fn pair_table(prod: &Scenario, s1: &Scenario, s2: &Scenario) -> Result<Vec<usize>> {
    let (v2, n2, k2) = (s2.outcomes().len(), s2.element_count(), s2.measurements().len());
    let mut table = vec![usize::MAX; s1.outcomes().len() * v2];
    for m in 0..prod.measurements().len() {
        let (m1, m2) = (m / k2, m % k2);
        for (c, cell) in prod.measurements()[m].cells().iter().enumerate() {
            let x = cell.members().next().unwrap_or(0);
            let a = s1.cell_id(m1, s1.cell_of(m1, x / n2));
            let b = s2.cell_id(m2, s2.cell_of(m2, x % n2));
            table[a * v2 + b] = prod.cell_id(m, c);
        }
    }
    if table.contains(&usize::MAX) {
        return Err(Error::Incompatible(format!("{} is not a product of its factors", prod.name())));
    }
    Ok(table)
}

impl CeChecker {
    pub fn new(base: Arc<Scenario>, copies: usize, mode: ExclusivityMode, limits: &Limits) -> Result<Self> {
        if copies == 0 {
            return Err(Error::OutOfRange("copies must be at least 1".into()));
        }
        let mut levels = vec![base.clone()];
        for k in 1..copies {
            let next = product_scenario(&levels[k - 1], &base)?.with_name(format!("{}^{}", base.name(), k + 1));
            levels.push(Arc::new(next));
        }
        let top = levels[copies - 1].clone();
        let vertices = outcome_count_power(&base, copies);
        let (graph, plan) = if vertices <= limits.clique_vertices {
            let g = exclusivity_graph(&top, mode);
            let cliques = maximal_cliques_capped(&g, limits.cliques)?;
            (Some(g), Plan::Cliques(cliques))
        } else if copies >= 2 && mode == ExclusivityMode::Coarse && base.outcomes().len() <= CONORMAL_FACTOR_LIMIT {
            let left = exclusivity_graph(&levels[copies - 2], mode);
            let right = exclusivity_graph(&base, mode);
            let pairs = pair_table(&top, &levels[copies - 2], &base)?;
            let independent = match (independent_sets(&left, INDEPENDENT_SET_CAP)?, independent_sets(&right, INDEPENDENT_SET_CAP)?) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            };
            (None, Plan::Conormal { left, right, pairs, independent })
        } else {
            (Some(exclusivity_graph(&top, mode)), Plan::Search)
        };
        Ok(CeChecker { base, copies, mode, levels, graph, plan, limits: limits.clone() })
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        self.levels.last().unwrap_or(&self.base)
    }

    /// Label of a top-level outcome, written factor by factor as
    /// `A × B` for products.
    pub fn label(&self, v: usize) -> String {
        let mut parts = Vec::with_capacity(self.copies);
        let mut id = v;
        let n2 = self.base.element_count();
        let k2 = self.base.measurements().len();
        for level in (1..self.copies).rev() {
            let (s, left) = (&self.levels[level], &self.levels[level - 1]);
            let m = s.measurements_containing(id)[0];
            let x = s.outcome(id).members().next().unwrap_or(0);
            let (m1, m2) = (m / k2, m % k2);
            parts.push(self.base.outcome_label(self.base.cell_id(m2, self.base.cell_of(m2, x % n2))));
            id = left.cell_id(m1, left.cell_of(m1, x / n2));
        }
        parts.push(self.base.outcome_label(id));
        parts.reverse();
        parts.join(" × ")
    }

    pub fn mode(&self) -> ExclusivityMode {
        self.mode
    }

    pub fn method(&self) -> CliqueMethod {
        match self.plan {
            Plan::Cliques(_) => CliqueMethod::Enumeration,
            Plan::Conormal { .. } => CliqueMethod::Conormal,
            Plan::Search => CliqueMethod::BranchAndBound,
        }
    }

    pub fn cliques(&self) -> Option<&CliqueSet> {
        match &self.plan {
            Plan::Cliques(c) => Some(c),
            _ => None,
        }
    }

    fn powers<T: Scalar>(&self, p: &ProbabilityFunction<T>) -> Result<Vec<ProbabilityFunction<T>>> {
        if **p.scenario() != *self.base {
            return Err(Error::Incompatible(format!(
                "table is on {}, checker on {}",
                p.scenario().name(),
                self.base.name()
            )));
        }
        let mut out = vec![p.clone()];
        for k in 1..self.copies {
            let next = product_probability_on(self.levels[k].clone(), &out[k - 1], p)?;
            out.push(next);
        }
        Ok(out)
    }

    fn exceeds_one<T: Scalar>(sum: &T, tolerant: bool) -> bool {
        if tolerant {
            sum.to_f64() > 1.0 + FLOAT_TOL
        } else {
            sum.sub(&T::one()).is_positive()
        }
    }

    /// Heaviest clique of the `copies`-fold table, or the first one found
    /// above `floor`.
    fn heaviest<T: Scalar>(&self, powers: &[ProbabilityFunction<T>], floor: Option<&T>) -> Result<Option<(Vec<usize>, T)>> {
        let top = powers.last().unwrap_or(&powers[0]);
        match &self.plan {
            Plan::Cliques(cs) => {
                let mut best: Option<(usize, T)> = None;
                for (i, c) in cs.iter().enumerate() {
                    let sum = c.iter().fold(T::zero(), |a, &v| a.add(top.value(v)));
                    if let Some(f) = floor {
                        if sum.compare(f) == std::cmp::Ordering::Greater {
                            return Ok(Some((c.clone(), sum)));
                        }
                    }
                    if best.as_ref().is_none_or(|(_, b)| sum.compare(b) == std::cmp::Ordering::Greater) {
                        best = Some((i, sum));
                    }
                }
                if floor.is_some() {
                    return Ok(None);
                }
                Ok(best.map(|(i, s)| (cs.cliques[i].clone(), s)))
            }
            Plan::Conormal { left, right, pairs, independent } => {
                let p_left = &powers[self.copies - 2];
                let ceiling = match independent {
                    Some((a, b)) => Some(
                        fractional_clique_number(a, p_left.values())?.mul(&fractional_clique_number(b, powers[0].values())?),
                    ),
                    None => None,
                };
                let found = max_weight_clique_conormal(
                    left,
                    p_left.values(),
                    right,
                    powers[0].values(),
                    floor,
                    ceiling.as_ref(),
                    self.limits.clique_nodes,
                )?;
                let v2 = right.vertex_count();
                Ok(found.map(|(ps, sum)| {
                    let mut ids: Vec<usize> = ps.iter().map(|&(a, b)| pairs[a * v2 + b]).collect();
                    ids.sort_unstable();
                    (ids, sum)
                }))
            }
            Plan::Search => {
                let g = self.graph.as_ref().expect("graph kept for search");
                max_weight_clique(g, top.values(), floor, self.limits.clique_nodes)
            }
        }
    }

    pub fn check<T: Scalar>(&self, p: &ProbabilityFunction<T>) -> Result<CeReport<T>> {
        let powers = self.powers(p)?;
        let tolerant = p.is_decimal() || !T::EXACT;
        let (clique, sum) = self.heaviest(&powers, None)?.unwrap_or((Vec::new(), T::zero()));
        if let Some(g) = &self.graph {
            if !g.is_clique(&clique) {
                return Err(Error::Verification("reported set is not a clique".into()));
            }
        }
        let resum = clique.iter().fold(T::zero(), |a, &v| a.add(powers[self.copies - 1].value(v)));
        if !resum.sub(&sum).is_zero() {
            return Err(Error::Verification("clique sum does not re-add".into()));
        }
        Ok(CeReport {
            holds: !Self::exceeds_one(&sum, tolerant),
            worst_labels: clique.iter().map(|&v| self.label(v)).collect(),
            worst_clique: clique,
            worst_sum: sum,
            copies: self.copies,
            mode: self.mode,
            method: self.method(),
            clique_count: self.cliques().map(CliqueSet::len),
        })
    }

    /// Whether CE holds, stopping at the first clique above one.
    pub fn holds<T: Scalar>(&self, p: &ProbabilityFunction<T>) -> Result<bool> {
        let powers = self.powers(p)?;
        let tolerant = p.is_decimal() || !T::EXACT;
        let floor = if tolerant {
            T::from_rational(&Rational::from_f64(1.0 + FLOAT_TOL).unwrap_or_else(Rational::one))
        } else {
            T::one()
        };
        Ok(self.heaviest(&powers, Some(&floor))?.is_none())
    }
}

pub fn ce_check<T: Scalar>(p: &ProbabilityFunction<T>, copies: usize, mode: ExclusivityMode) -> Result<CeReport<T>> {
    ce_check_with(p, copies, mode, &Limits::default())
}

pub fn ce_check_with<T: Scalar>(
    p: &ProbabilityFunction<T>,
    copies: usize,
    mode: ExclusivityMode,
    limits: &Limits,
) -> Result<CeReport<T>> {
    CeChecker::new(p.scenario().clone(), copies, mode, limits)?.check(p)
}

/// Joint-distribution program: `w >= 0`, `Σ w = 1`, and `Σ_{γ∈A} w_γ = P(A)`
/// for each fine-grained outcome `A` (rows `1..`, in outcome order).
pub fn nc_program(p: &ProbabilityFunction) -> LinearProgram {
    let s = p.scenario();
    let n = s.element_count();
    let mut lp = LinearProgram::nonnegative(n);
    lp.add_equality((0..n).map(|x| (x, Rational::one())).collect(), Rational::one());
    for (id, o) in s.outcomes().iter().enumerate() {
        lp.add_equality(o.members().map(|x| (x, Rational::one())).collect(), p.value(id).clone());
    }
    lp
}

#[derive(Clone, Debug)]
pub struct NcResult {
    pub feasible: bool,
    pub joint: Option<JointDistribution>,
    pub certificate: Option<FarkasCertificate>,
    pub program: LinearProgram,
}

fn check_nc_size(s: &Scenario, limits: &Limits) -> Result<()> {
    if s.element_count() > limits.nc_elements {
        return Err(Error::Resource(format!(
            "{} elements exceed the joint-distribution cap {}",
            s.element_count(),
            limits.nc_elements
        )));
    }
    Ok(())
}

pub fn nc_check(p: &ProbabilityFunction, limits: &Limits) -> Result<NcResult> {
    check_nc_size(p.scenario(), limits)?;
    let program = nc_program(p);
    let res = lp::feasibility(&program)?;
    match res.status {
        LpStatus::Optimal => {
            let w = res.primal.ok_or_else(|| Error::Verification("missing witness".into()))?;
            let joint = JointDistribution::new(w)?;
            let back = joint.marginal(p.scenario().clone())?;
            if back.values() != p.values() {
                return Err(Error::Verification("joint distribution does not reproduce the table".into()));
            }
            Ok(NcResult { feasible: true, joint: Some(joint), certificate: None, program })
        }
        _ => {
            let cert = res.certificate.ok_or_else(|| Error::Verification("missing certificate".into()))?;
            if !cert.verify(&program) {
                return Err(Error::Verification("certificate does not verify".into()));
            }
            Ok(NcResult { feasible: false, joint: None, certificate: Some(cert), program })
        }
    }
}

#[derive(Clone, Debug)]
pub struct Optimum {
    pub value: Rational,
    pub table: ProbabilityFunction,
    pub joint: Option<JointDistribution>,
    /// Clique rows added by row generation.
    pub cuts: usize,
}

pub fn nc_optimize(s: Arc<Scenario>, f: &LinearFunctional, limits: &Limits) -> Result<Optimum> {
    check_nc_size(&s, limits)?;
    let terms = f.resolve(&s)?;
    let n = s.element_count();
    let mut obj = vec![Rational::zero(); n];
    for (id, c) in &terms {
        for x in s.outcome(*id).members() {
            obj[x] = &obj[x] + c;
        }
    }
    let mut lp = LinearProgram::nonnegative(n);
    lp.objective = obj;
    lp.add_equality((0..n).map(|x| (x, Rational::one())).collect(), Rational::one());
    let res = lp::solve(&lp)?;
    let w = optimal_point(&res.status, res.primal)?;
    let joint = JointDistribution::new(w)?;
    let table = joint.marginal(s)?;
    let value = f.evaluate(&table)?;
    Ok(Optimum { value, table, joint: Some(joint), cuts: 0 })
}

fn optimal_point(status: &LpStatus, primal: Option<Vec<Rational>>) -> Result<Vec<Rational>> {
    match (status, primal) {
        (LpStatus::Optimal, Some(x)) => Ok(x),
        (st, _) => Err(Error::Verification(format!("bounded program reported {st:?}"))),
    }
}

/// Rows `Σ_{comp ⊆ M} P − Σ_{comp ⊆ M'} P = 0` over all measurement pairs,
/// one component per pair left implicit, duplicates removed.
pub fn consistency_rows(s: &Scenario) -> Vec<Vec<(usize, Rational)>> {
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for m1 in 0..s.measurements().len() {
        for m2 in m1 + 1..s.measurements().len() {
            let comps = common_components(s, m1, m2);
            for (c1, c2) in comps.iter().take(comps.len().saturating_sub(1)) {
                let mut coeff = vec![0i64; s.outcomes().len()];
                for &c in c1 {
                    coeff[s.cell_id(m1, c)] += 1;
                }
                for &c in c2 {
                    coeff[s.cell_id(m2, c)] -= 1;
                }
                let mut row: Vec<(usize, i64)> = coeff.into_iter().enumerate().filter(|(_, v)| *v != 0).collect();
                if row.is_empty() {
                    continue;
                }
                if row[0].1 < 0 {
                    row.iter_mut().for_each(|(_, v)| *v = -*v);
                }
                if seen.insert(row.clone()) {
                    rows.push(row.into_iter().map(|(i, v)| (i, Rational::from_integer(v))).collect());
                }
            }
        }
    }
    rows
}

/// The consistent set as a program over one value per outcome.
pub fn consistent_program(s: &Scenario, f: &LinearFunctional) -> Result<LinearProgram> {
    let v = s.outcomes().len();
    let mut lp = LinearProgram::nonnegative(v);
    for (id, c) in f.resolve(s)? {
        lp.objective[id] = c;
    }
    for m in 0..s.measurements().len() {
        lp.add_equality(s.cell_ids(m).iter().map(|&id| (id, Rational::one())).collect(), Rational::one());
    }
    for row in consistency_rows(s) {
        lp.add_equality(row, Rational::zero());
    }
    Ok(lp)
}

fn table_optimum(s: Arc<Scenario>, f: &LinearFunctional, x: Vec<Rational>, cuts: usize) -> Result<Optimum> {
    let table = ProbabilityFunction::new(s, x)?.with_name(format!("optimum of {}", f.name));
    table.ensure_valid()?;
    let value = f.evaluate(&table)?;
    Ok(Optimum { value, table, joint: None, cuts })
}

pub fn consistent_optimize(s: Arc<Scenario>, f: &LinearFunctional) -> Result<Optimum> {
    let lp = consistent_program(&s, f)?;
    let res = lp::solve(&lp)?;
    let x = optimal_point(&res.status, res.primal)?;
    table_optimum(s, f, x, 0)
}

/// Maximum over consistent tables obeying single-copy CE, with clique rows
/// added by row generation.
pub fn ce_optimize(s: Arc<Scenario>, f: &LinearFunctional, mode: ExclusivityMode, limits: &Limits) -> Result<Optimum> {
    let checker = CeChecker::new(s.clone(), 1, mode, limits)?;
    let lp = consistent_program(&s, f)?;
    let mut simplex = Simplex::new(lp)?;
    let mut cuts = 0;
    for _ in 0..limits.rowgen_rounds {
        let res = simplex.solve()?;
        let x = optimal_point(&res.status, res.primal)?;
        let violated: Vec<Vec<usize>> = match &checker.plan {
            Plan::Cliques(cs) => {
                let mut v: Vec<(Rational, &Vec<usize>)> = cs
                    .iter()
                    .map(|c| (c.iter().map(|&i| x[i].clone()).sum::<Rational>(), c))
                    .filter(|(sum, _)| sum > &Rational::one())
                    .collect();
                v.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
                v.into_iter().take(20).map(|(_, c)| c.clone()).collect()
            }
            _ => {
                let g = checker.graph.as_ref().expect("single-copy checker keeps its graph");
                max_weight_clique(g, &x, Some(&Rational::one()), limits.clique_nodes)?
                    .map(|(c, _)| vec![c])
                    .unwrap_or_default()
            }
        };
        if violated.is_empty() {
            return table_optimum(s, f, x, cuts);
        }
        for c in violated {
            simplex.add_inequality(c.into_iter().map(|i| (i, Rational::one())).collect(), Rational::one())?;
            cuts += 1;
        }
    }
    Err(Error::Resource(format!("clique row generation did not converge in {} rounds", limits.rowgen_rounds)))
}

/// Parametric box families with a monotone CE predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Isotropic,
    UniformCycle,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isotropic" => Ok(Family::Isotropic),
            "uniform-cycle" | "uniform_cycle" => Ok(Family::UniformCycle),
            _ => Err(Error::Parse(format!("unknown family {s:?}"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Isotropic => "isotropic",
            Family::UniformCycle => "uniform-cycle",
        })
    }
}

impl Family {
    /// Parameter range on which the family is defined.
    pub fn range(self) -> (f64, f64) {
        match self {
            Family::Isotropic => (0.0, 1.0),
            Family::UniformCycle => (0.0, 0.5),
        }
    }

    pub fn functional(self) -> FunctionalPreset {
        match self {
            Family::Isotropic => FunctionalPreset::Chsh,
            Family::UniformCycle => FunctionalPreset::Kcbs,
        }
    }

    pub fn member<T: Scalar>(self, s: Arc<Scenario>, x: T) -> Result<ProbabilityFunction<T>> {
        let b = match self {
            Family::Isotropic => BoxPreset::Isotropic(x),
            Family::UniformCycle => BoxPreset::UniformCycle(x),
        };
        preset_box(&b, s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub family: Family,
    pub copies: usize,
    pub mode: ExclusivityMode,
    pub tol: f64,
    /// Midpoint of the final bracket.
    pub parameter: f64,
    /// Largest parameter seen to pass.
    pub lower: f64,
    /// Smallest parameter seen to fail (the range end when none failed).
    pub upper: f64,
    /// True when the predicate holds on the whole range.
    pub saturated: bool,
    pub functional: String,
    pub value: f64,
    pub evaluations: usize,
}

/// Bisection for the largest family parameter at which CE holds.
pub fn threshold_search(
    s: Arc<Scenario>,
    family: Family,
    copies: usize,
    mode: ExclusivityMode,
    tol: f64,
    limits: &Limits,
) -> Result<ThresholdReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::OutOfRange(format!("tolerance {tol} must be positive")));
    }
    let checker = CeChecker::new(s.clone(), copies, mode, limits)?;
    let functional = preset_functional(family.functional(), &s)?;
    let holds = |x: f64| -> Result<bool> { checker.holds(&family.member(s.clone(), x)?) };
    let (mut lo, mut hi) = family.range();
    let mut evaluations = 2;
    let lo_ok = holds(lo)?;
    let hi_ok = holds(hi)?;
    if !lo_ok {
        return Err(Error::NonMonotone(format!("CE fails already at {family} parameter {lo}")));
    }
    let saturated = hi_ok;
    if !saturated {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            evaluations += 1;
            if holds(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let parameter = if saturated { hi } else { 0.5 * (lo + hi) };
    let value = functional.evaluate(&family.member(s.clone(), parameter)?)?;
    Ok(ThresholdReport {
        family,
        copies,
        mode,
        tol,
        parameter,
        lower: if saturated { hi } else { lo },
        upper: hi,
        saturated,
        functional: functional.name,
        value,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::parse_box_preset;
    use crate::scenario::{preset_scenario, Preset};

    fn scen(name: &str) -> Arc<Scenario> {
        Arc::new(preset_scenario(&name.parse::<Preset>().unwrap()).unwrap())
    }

    fn boxed(b: &str, s: &Arc<Scenario>) -> ProbabilityFunction {
        let (p, d) = parse_box_preset(b).unwrap();
        preset_box(&p, s.clone()).unwrap().with_decimal(d)
    }

    fn functional(name: &str, s: &Scenario) -> LinearFunctional {
        preset_functional(name.parse().unwrap(), s).unwrap()
    }

    #[test]
    fn pentagon_triangles_sum_to_one() {
        let p = scen("pentagon");
        let r = ce_check(&boxed("uniform_cycle(1/2)", &p), 1, ExclusivityMode::Coarse).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_sum, Rational::one());
        assert_eq!(r.clique_count, Some(5));
    }

    #[test]
    fn pr_box_single_copy_passes() {
        let c = scen("chsh");
        let pr = boxed("pr", &c);
        assert!(ce_check(&pr, 1, ExclusivityMode::Coarse).unwrap().holds);
        let two = ce_check(&pr, 2, ExclusivityMode::Coarse).unwrap();
        assert!(!two.holds);
        assert_eq!(two.method, CliqueMethod::Conormal);
        assert_eq!(two.worst_sum, Rational::new(5, 4));
    }

    #[test]
    fn nc_results() {
        let c = scen("chsh");
        let l = Limits::default();
        let det = nc_check(&boxed("deterministic(0110)", &c), &l).unwrap();
        assert!(det.feasible);
        let pr = nc_check(&boxed("pr", &c), &l).unwrap();
        assert!(!pr.feasible);
        assert!(pr.certificate.unwrap().verify(&pr.program));
        let p = scen("pentagon");
        assert!(!nc_check(&boxed("uniform_cycle(1/2)", &p), &l).unwrap().feasible);
        let tight = Limits { nc_elements: 4, ..Limits::default() };
        assert!(matches!(nc_check(&boxed("pr", &c), &tight), Err(Error::Resource(_))));
    }

    #[test]
    fn optima_ladder() {
        let l = Limits::default();
        let c = scen("chsh");
        let f = functional("chsh", &c);
        assert_eq!(nc_optimize(c.clone(), &f, &l).unwrap().value, Rational::from_integer(2));
        assert_eq!(consistent_optimize(c.clone(), &f).unwrap().value, Rational::from_integer(4));
        assert_eq!(ce_optimize(c.clone(), &f, ExclusivityMode::Coarse, &l).unwrap().value, Rational::from_integer(4));
        let p = scen("pentagon");
        let k = functional("kcbs", &p);
        assert_eq!(nc_optimize(p.clone(), &k, &l).unwrap().value, Rational::from_integer(2));
        assert_eq!(consistent_optimize(p.clone(), &k).unwrap().value, Rational::new(5, 2));
        assert_eq!(ce_optimize(p, &k, ExclusivityMode::Coarse, &l).unwrap().value, Rational::new(5, 2));
    }

    #[test]
    fn single_measurement_optimum_is_max_coefficient() {
        use crate::scenario::Outcome;
        let s = Arc::new(
            Scenario::new("one", 3, vec![vec![Outcome::new([0]), Outcome::new([1]), Outcome::new([2])]], None).unwrap(),
        );
        let f = LinearFunctional {
            name: "f".into(),
            terms: vec![
                (Outcome::new([0]), Rational::new(1, 3)),
                (Outcome::new([1]), Rational::new(7, 2)),
                (Outcome::new([2]), Rational::from_integer(-1)),
            ],
            constant: Rational::one(),
        };
        assert_eq!(consistent_optimize(s, &f).unwrap().value, Rational::new(9, 2));
    }

    #[test]
    fn nonmonotone_and_saturated() {
        let c = scen("chsh");
        let r = threshold_search(c, Family::Isotropic, 1, ExclusivityMode::Coarse, 1e-3, &Limits::default()).unwrap();
        assert!(r.saturated);
        assert_eq!(r.parameter, 1.0);
        assert!((r.value - 4.0).abs() < 1e-12);
        assert!(threshold_search(scen("pentagon"), Family::Isotropic, 1, ExclusivityMode::Coarse, 1e-3, &Limits::default()).is_err());
    }
}
