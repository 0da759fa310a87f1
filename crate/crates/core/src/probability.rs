//! Probability functions on partition scenarios, named box families and
//! linear functionals.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{Rational, Scalar, FLOAT_TOL};
use crate::scenario::{parse_invocation, product_scenario, Outcome, Scenario};

/// A value per deduplicated fine-grained outcome of a scenario.
#[derive(Clone, Debug)]
pub struct ProbabilityFunction<T: Scalar = Rational> {
    scenario: Arc<Scenario>,
    values: Vec<T>,
    decimal: bool,
    name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyViolation {
    pub measurements: (usize, usize),
    /// Union of the component, a coarse outcome of both measurements.
    pub outcome: Outcome,
    pub label: String,
    pub values: (String, String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Negative { outcome: usize, label: String, value: String },
    Normalization { measurement: usize, sum: String },
    Inconsistent(ConsistencyViolation),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { label, value, .. } => write!(f, "negative value {value} on {label}"),
            Violation::Normalization { measurement, sum } => {
                write!(f, "measurement {} sums to {sum}", measurement + 1)
            }
            Violation::Inconsistent(c) => write!(
                f,
                "measurements {} and {} disagree on {}: {} vs {}",
                c.measurements.0 + 1,
                c.measurements.1 + 1,
                c.label,
                c.values.0,
                c.values.1
            ),
        }
    }
}

impl<T: Scalar> ProbabilityFunction<T> {
    pub fn new(scenario: Arc<Scenario>, values: Vec<T>) -> Result<Self> {
        if values.len() != scenario.outcomes().len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} outcomes",
                values.len(),
                scenario.outcomes().len()
            )));
        }
        let name = format!("table on {}", scenario.name());
        Ok(ProbabilityFunction { scenario, values, decimal: false, name })
    }

    pub fn from_fn(scenario: Arc<Scenario>, f: impl FnMut(usize) -> T) -> Self {
        let values = (0..scenario.outcomes().len()).map(f).collect();
        let name = format!("table on {}", scenario.name());
        ProbabilityFunction { scenario, values, decimal: false, name }
    }

    /// Marks values as decimal input, switching comparisons to tolerance 1e-9.
    pub fn with_decimal(mut self, decimal: bool) -> Self {
        self.decimal = decimal;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_decimal(&self) -> bool {
        self.decimal
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, id: usize) -> &T {
        &self.values[id]
    }

    pub fn cell_value(&self, m: usize, c: usize) -> &T {
        &self.values[self.scenario.cell_id(m, c)]
    }

    pub fn value_of(&self, o: &Outcome) -> Result<&T> {
        self.scenario
            .outcome_index(o)
            .map(|i| &self.values[i])
            .ok_or_else(|| Error::Incompatible(format!("{o} is not a fine-grained outcome of {}", self.scenario.name())))
    }

    /// Value of a coarse outcome of measurement `m` (a union of its cells).
    pub fn coarse_value(&self, m: usize, o: &Outcome) -> Result<T> {
        self.scenario.check_outcome(o)?;
        let hull = self.scenario.hull(m, o);
        let covered: usize = hull.iter().map(|c| self.scenario.measurements()[m].cells()[c].len()).sum();
        if covered != o.len() {
            return Err(Error::Incompatible(format!("{o} is not a union of cells of measurement {}", m + 1)));
        }
        Ok(hull.iter().fold(T::zero(), |acc, c| acc.add(self.cell_value(m, c))))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ProbabilityFunction<U> {
        ProbabilityFunction {
            scenario: self.scenario.clone(),
            values: self.values.iter().map(f).collect(),
            decimal: self.decimal,
            name: self.name.clone(),
        }
    }

    pub fn to_f64(&self) -> ProbabilityFunction<f64> {
        self.map(|v| v.to_f64())
    }

    fn tolerant(&self) -> bool {
        self.decimal || !T::EXACT
    }

    fn close(&self, a: &T, b: &T) -> bool {
        if self.tolerant() {
            (a.to_f64() - b.to_f64()).abs() <= FLOAT_TOL
        } else {
            a.sub(b).is_zero()
        }
    }

    fn negative(&self, a: &T) -> bool {
        if self.tolerant() {
            a.to_f64() < -FLOAT_TOL
        } else {
            a.is_negative()
        }
    }

    /// All nonnegativity, normalization and consistency breaches.
    pub fn validate(&self) -> Vec<Violation> {
        let s = &self.scenario;
        let mut out = Vec::new();
        for (id, v) in self.values.iter().enumerate() {
            if self.negative(v) {
                out.push(Violation::Negative { outcome: id, label: s.outcome_label(id), value: v.to_string() });
            }
        }
        for m in 0..s.measurements().len() {
            let sum = s.cell_ids(m).iter().fold(T::zero(), |acc, &id| acc.add(&self.values[id]));
            if !self.close(&sum, &T::one()) {
                out.push(Violation::Normalization { measurement: m, sum: sum.to_string() });
            }
        }
        out.extend(self.consistency_check().into_iter().map(Violation::Inconsistent));
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Errors with the first violation unless the table is valid.
    pub fn ensure_valid(&self) -> Result<()> {
        match self.validate().first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidProbability(v.to_string())),
        }
    }

    /// Compares, for every pair of measurements, the values of the minimal
    /// coarse outcomes common to both algebras.
    pub fn consistency_check(&self) -> Vec<ConsistencyViolation> {
        let s = &self.scenario;
        let mut out = Vec::new();
        for m1 in 0..s.measurements().len() {
            for m2 in m1 + 1..s.measurements().len() {
                for comp in common_components(s, m1, m2) {
                    let v1 = comp.0.iter().fold(T::zero(), |acc, &c| acc.add(self.cell_value(m1, c)));
                    let v2 = comp.1.iter().fold(T::zero(), |acc, &c| acc.add(self.cell_value(m2, c)));
                    if !self.close(&v1, &v2) {
                        let outcome = Outcome::new(
                            comp.0.iter().flat_map(|&c| s.measurements()[m1].cells()[c].members()),
                        );
                        out.push(ConsistencyViolation {
                            measurements: (m1, m2),
                            label: s.describe(&outcome),
                            outcome,
                            values: (v1.to_string(), v2.to_string()),
                        });
                    }
                }
            }
        }
        out
    }
}

/// Connected components of the bipartite cell-intersection graph of two
/// measurements, as (cells of `m1`, cells of `m2`) in order of first cell.
pub fn common_components(s: &Scenario, m1: usize, m2: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let k1 = s.measurements()[m1].cells().len();
    let k2 = s.measurements()[m2].cells().len();
    let mut parent: Vec<usize> = (0..k1 + k2).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for x in 0..s.element_count() {
        let a = find(&mut parent, s.cell_of(m1, x));
        let b = find(&mut parent, k1 + s.cell_of(m2, x));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut comps: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for c in 0..k1 + k2 {
        let r = find(&mut parent, c);
        let idx = match comps.iter().position(|(root, _, _)| *root == r) {
            Some(i) => i,
            None => {
                comps.push((r, Vec::new(), Vec::new()));
                comps.len() - 1
            }
        };
        if c < k1 {
            comps[idx].1.push(c);
        } else {
            comps[idx].2.push(c - k1);
        }
    }
    comps.into_iter().map(|(_, a, b)| (a, b)).collect()
}

/// Valuewise mixture `αP + (1−α)Q`.
pub fn mixture<T: Scalar>(alpha: &T, p: &ProbabilityFunction<T>, q: &ProbabilityFunction<T>) -> Result<ProbabilityFunction<T>> {
    same_scenario(p.scenario(), q.scenario())?;
    let beta = T::one().sub(alpha);
    Ok(ProbabilityFunction::from_fn(p.scenario.clone(), |i| alpha.mul(&p.values[i]).add(&beta.mul(&q.values[i])))
        .with_decimal(p.decimal || q.decimal))
}

fn same_scenario(a: &Arc<Scenario>, b: &Arc<Scenario>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::Incompatible(format!("scenario mismatch: {} vs {}", a.name(), b.name())))
    }
}

/// Weights on the sample space.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution<T: Scalar = Rational> {
    pub weights: Vec<T>,
}

impl<T: Scalar> JointDistribution<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::InvalidProbability("negative weight".into()));
        }
        let total = weights.iter().fold(T::zero(), |a, w| a.add(w));
        if !total.sub(&T::one()).is_zero() {
            return Err(Error::InvalidProbability(format!("weights sum to {total}")));
        }
        Ok(JointDistribution { weights })
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        JointDistribution { weights: (0..n).map(|i| if i == x { T::one() } else { T::zero() }).collect() }
    }

    pub fn probability(&self, o: &Outcome) -> T {
        o.members().fold(T::zero(), |a, x| a.add(&self.weights[x]))
    }

    /// The probability function this distribution induces on `s`.
    pub fn marginal(&self, s: Arc<Scenario>) -> Result<ProbabilityFunction<T>> {
        if self.weights.len() != s.element_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} elements",
                self.weights.len(),
                s.element_count()
            )));
        }
        let values = s.outcomes().iter().map(|o| self.probability(o)).collect();
        ProbabilityFunction::new(s, values)
    }
}

/// `P1 ⊗ P2` on a freshly built product scenario.
pub fn product_probability<T: Scalar>(p1: &ProbabilityFunction<T>, p2: &ProbabilityFunction<T>) -> Result<ProbabilityFunction<T>> {
    let prod = Arc::new(product_scenario(&p1.scenario, &p2.scenario)?);
    product_probability_on(prod, p1, p2)
}

/// `P1 ⊗ P2` on a product scenario built earlier from the two factors.
pub fn product_probability_on<T: Scalar>(
    prod: Arc<Scenario>,
    p1: &ProbabilityFunction<T>,
    p2: &ProbabilityFunction<T>,
) -> Result<ProbabilityFunction<T>> {
    let (s1, s2) = (&p1.scenario, &p2.scenario);
    let n2 = s2.element_count();
    let k2 = s2.measurements().len();
    if prod.element_count() != s1.element_count() * n2 || prod.measurements().len() != s1.measurements().len() * k2 {
        return Err(Error::Incompatible(format!(
            "{} is not the product of {} and {}",
            prod.name(),
            s1.name(),
            s2.name()
        )));
    }
    let mut values: Vec<Option<T>> = vec![None; prod.outcomes().len()];
    for m in 0..prod.measurements().len() {
        let (m1, m2) = (m / k2, m % k2);
        for (c, cell) in prod.measurements()[m].cells().iter().enumerate() {
            let id = prod.cell_id(m, c);
            if values[id].is_some() {
                continue;
            }
            let x = cell.members().next().unwrap_or(0);
            let c1 = s1.cell_of(m1, x / n2);
            let c2 = s2.cell_of(m2, x % n2);
            if cell.len() != s1.measurements()[m1].cells()[c1].len() * s2.measurements()[m2].cells()[c2].len() {
                return Err(Error::Incompatible(format!("{} does not match the factor cells", prod.name())));
            }
            values[id] = Some(p1.cell_value(m1, c1).mul(p2.cell_value(m2, c2)));
        }
    }
    let values = values.into_iter().map(|v| v.unwrap_or_else(T::zero)).collect();
    Ok(ProbabilityFunction::new(prod, values)?
        .with_decimal(p1.decimal || p2.decimal)
        .with_name(format!("{} x {}", p1.name, p2.name)))
}

/// Named box families.
#[derive(Clone, Debug, PartialEq)]
pub enum BoxPreset<T: Scalar = Rational> {
    Pr,
    Isotropic(T),
    Uniform,
    /// Point mass on an element, given by label or index.
    Deterministic(String),
    UniformCycle(T),
}

impl<T: Scalar> fmt::Display for BoxPreset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoxPreset::Pr => write!(f, "pr"),
            BoxPreset::Isotropic(v) => write!(f, "isotropic({v})"),
            BoxPreset::Uniform => write!(f, "uniform"),
            BoxPreset::Deterministic(g) => write!(f, "deterministic({g})"),
            BoxPreset::UniformCycle(p) => write!(f, "uniform_cycle({p})"),
        }
    }
}

/// Parses `pr`, `isotropic(v)`, `uniform`, `deterministic(g)` or
/// `uniform_cycle(p)`; the flag reports a decimal parameter.
pub fn parse_box_preset(s: &str) -> Result<(BoxPreset, bool)> {
    let (name, args) = parse_invocation(s)?;
    let param = |i: usize| -> Result<(Rational, bool)> {
        let a = args.get(i).ok_or_else(|| Error::Parse(format!("{name} needs a parameter")))?;
        Rational::parse_exact(a)
    };
    Ok(match name.as_str() {
        "pr" => (BoxPreset::Pr, false),
        "uniform" => (BoxPreset::Uniform, false),
        "isotropic" => {
            let (v, d) = param(0)?;
            (BoxPreset::Isotropic(v), d)
        }
        "uniform_cycle" | "uniform-cycle" => {
            let (p, d) = param(0)?;
            (BoxPreset::UniformCycle(p), d)
        }
        "deterministic" => (
            BoxPreset::Deterministic(
                args.first()
                    .ok_or_else(|| Error::Parse("deterministic needs an element".into()))?
                    .trim_start_matches("γ=")
                    .trim_start_matches("g=")
                    .to_string(),
            ),
            false,
        ),
        _ => return Err(Error::Parse(format!("unknown box preset {s:?}"))),
    })
}

fn in_range<T: Scalar>(v: &T, lo: &T, hi: &T) -> bool {
    !v.sub(lo).is_negative() && !hi.sub(v).is_negative()
}

pub fn preset_box<T: Scalar>(b: &BoxPreset<T>, s: Arc<Scenario>) -> Result<ProbabilityFunction<T>> {
    let half = T::from_rational(&Rational::new(1, 2));
    let quarter = T::from_rational(&Rational::new(1, 4));
    let name = b.to_string();
    let table = match b {
        BoxPreset::Pr | BoxPreset::Isotropic(_) => {
            let layout = s.layout().filter(|l| l.is_chsh()).ok_or_else(|| {
                Error::Incompatible(format!("{name} requires the chsh scenario, got {}", s.name()))
            })?;
            let v = match b {
                BoxPreset::Isotropic(v) => {
                    if !in_range(v, &T::zero(), &T::one()) {
                        return Err(Error::OutOfRange(format!("isotropic parameter {v} outside [0,1]")));
                    }
                    v.clone()
                }
                _ => T::one(),
            };
            let contexts = layout.contexts.clone();
            let mut values = vec![T::zero(); s.outcomes().len()];
            for (m, ctx) in contexts.iter().enumerate() {
                let (x, y) = (ctx[0], ctx[1] - 2);
                for c in 0..s.measurements()[m].cells().len() {
                    let bits = s.cell_assignment(m, c).unwrap_or_default().into_bytes();
                    let parity = usize::from(bits[0] != bits[1]);
                    let pr = if parity == x & y { half.clone() } else { T::zero() };
                    // v·PR + (1−v)/4
                    values[s.cell_id(m, c)] = v.mul(&pr).add(&T::one().sub(&v).mul(&quarter));
                }
            }
            ProbabilityFunction::new(s, values)?
        }
        BoxPreset::Uniform => {
            let n = T::from_int(s.element_count() as i64);
            let sc = s.clone();
            ProbabilityFunction::from_fn(s, |id| T::from_int(sc.outcome(id).len() as i64).div(&n))
        }
        BoxPreset::Deterministic(g) => {
            let x = s
                .element_labels()
                .and_then(|l| l.iter().position(|lab| lab == g))
                .or_else(|| g.parse::<usize>().ok().filter(|&x| x < s.element_count()))
                .ok_or_else(|| Error::OutOfRange(format!("no element {g:?} in {}", s.name())))?;
            JointDistribution::point_mass(s.element_count(), x).marginal(s)?
        }
        BoxPreset::UniformCycle(p) => {
            s.layout().and_then(|l| l.as_cycle()).ok_or_else(|| {
                Error::Incompatible(format!("{name} requires a cycle scenario, got {}", s.name()))
            })?;
            if !in_range(p, &T::zero(), &half) {
                return Err(Error::OutOfRange(format!("uniform_cycle parameter {p} outside [0,1/2]")));
            }
            let empty = T::one().sub(&p.add(p));
            let mut values = vec![T::zero(); s.outcomes().len()];
            for m in 0..s.measurements().len() {
                for c in 0..s.measurements()[m].cells().len() {
                    let bits = s.cell_assignment(m, c).unwrap_or_default();
                    values[s.cell_id(m, c)] = if bits.contains('1') { p.clone() } else { empty.clone() };
                }
            }
            ProbabilityFunction::new(s, values)?
        }
    };
    Ok(table.with_name(name))
}

/// Affine functional `constant + Σ coeff·P(outcome)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFunctional {
    pub name: String,
    pub terms: Vec<(Outcome, Rational)>,
    pub constant: Rational,
}

impl LinearFunctional {
    pub fn constant(name: impl Into<String>, c: Rational) -> Self {
        LinearFunctional { name: name.into(), terms: Vec::new(), constant: c }
    }

    /// Coefficients by outcome id, duplicates merged, in id order.
    pub fn resolve(&self, s: &Scenario) -> Result<Vec<(usize, Rational)>> {
        let mut coeffs: Vec<Rational> = vec![Rational::zero(); s.outcomes().len()];
        for (o, c) in &self.terms {
            let id = s.outcome_index(o).ok_or_else(|| {
                Error::Incompatible(format!("{} refers to {o}, not an outcome of {}", self.name, s.name()))
            })?;
            coeffs[id] = &coeffs[id] + c;
        }
        Ok(coeffs.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect())
    }

    pub fn evaluate<T: Scalar>(&self, p: &ProbabilityFunction<T>) -> Result<T> {
        let terms = self.resolve(p.scenario())?;
        Ok(terms.iter().fold(T::from_rational(&self.constant), |acc, (id, c)| {
            acc.add(&T::from_rational(c).mul(p.value(*id)))
        }))
    }
}

pub fn evaluate<T: Scalar>(f: &LinearFunctional, p: &ProbabilityFunction<T>) -> Result<T> {
    f.evaluate(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionalPreset {
    Chsh,
    Kcbs,
    GyniPayoff,
}

impl FromStr for FunctionalPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "chsh" => Ok(FunctionalPreset::Chsh),
            "kcbs" => Ok(FunctionalPreset::Kcbs),
            "gyni" | "gyni_payoff" | "gyni-payoff" => Ok(FunctionalPreset::GyniPayoff),
            _ => Err(Error::Parse(format!("unknown functional {s:?}"))),
        }
    }
}

impl fmt::Display for FunctionalPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionalPreset::Chsh => "chsh",
            FunctionalPreset::Kcbs => "kcbs",
            FunctionalPreset::GyniPayoff => "gyni_payoff",
        })
    }
}

/// The `i`-th "box full" outcome `{γ : γ_i = 1}` of a cycle scenario.
pub fn cycle_full_outcome(s: &Scenario, i: usize) -> Result<usize> {
    let n = s
        .layout()
        .and_then(|l| l.as_cycle())
        .ok_or_else(|| Error::Incompatible(format!("{} is not a cycle scenario", s.name())))?;
    let labels = s.element_labels().unwrap_or_default();
    let o = Outcome::new((0..s.element_count()).filter(|&x| labels[x].as_bytes()[i % n] == b'1'));
    s.outcome_index(&o)
        .ok_or_else(|| Error::Incompatible(format!("box {} full is not an outcome", i + 1)))
}

/// Winning event of the three-party neighbour game for promised input `x`.
pub fn gyni_winning_outcome(s: &Scenario, x: [usize; 3]) -> Result<usize> {
    if s.layout().and_then(|l| l.as_bell()) != Some((3, 2)) {
        return Err(Error::Incompatible(format!("{} is not the gyni3 scenario", s.name())));
    }
    let m = s
        .context_index(&[x[0], 2 + x[1], 4 + x[2]])
        .ok_or_else(|| Error::Incompatible("missing context".into()))?;
    // party i wins by outputting the input of party i+1
    let bits: String = (0..3).map(|i| if x[(i + 1) % 3] == 1 { '1' } else { '0' }).collect();
    let c = s
        .cell_by_assignment(m, &bits)
        .ok_or_else(|| Error::Incompatible("missing cell".into()))?;
    Ok(s.cell_id(m, c))
}

pub const GYNI_PROMISE: [[usize; 3]; 4] = [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]];

pub fn preset_functional(name: FunctionalPreset, s: &Scenario) -> Result<LinearFunctional> {
    let mut terms = Vec::new();
    match name {
        FunctionalPreset::Chsh => {
            let layout = s
                .layout()
                .filter(|l| l.is_chsh())
                .ok_or_else(|| Error::Incompatible(format!("chsh functional needs the chsh scenario, got {}", s.name())))?;
            for (m, ctx) in layout.contexts.iter().enumerate() {
                let (x, y) = (ctx[0], ctx[1] - 2);
                for (c, cell) in s.measurements()[m].cells().iter().enumerate() {
                    let bits = s.cell_assignment(m, c).unwrap_or_default().into_bytes();
                    let sign = if (x & y == 1) == (bits[0] != bits[1]) { 1 } else { -1 };
                    terms.push((cell.clone(), Rational::from_integer(sign)));
                }
            }
        }
        FunctionalPreset::Kcbs => {
            let n = s
                .layout()
                .and_then(|l| l.as_cycle())
                .ok_or_else(|| Error::Incompatible(format!("kcbs functional needs a cycle scenario, got {}", s.name())))?;
            for i in 0..n {
                terms.push((s.outcome(cycle_full_outcome(s, i)?).clone(), Rational::one()));
            }
        }
        FunctionalPreset::GyniPayoff => {
            for x in GYNI_PROMISE {
                terms.push((s.outcome(gyni_winning_outcome(s, x)?).clone(), Rational::new(1, 4)));
            }
        }
    }
    Ok(LinearFunctional { name: name.to_string(), terms, constant: Rational::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{preset_scenario, Preset};

    fn scen(name: &str) -> Arc<Scenario> {
        Arc::new(preset_scenario(&name.parse::<Preset>().unwrap()).unwrap())
    }

    fn boxed(b: &str, s: &Arc<Scenario>) -> ProbabilityFunction {
        let (p, d) = parse_box_preset(b).unwrap();
        preset_box(&p, s.clone()).unwrap().with_decimal(d)
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn functional_values_on_presets() {
        let c = scen("chsh");
        let chsh = preset_functional(FunctionalPreset::Chsh, &c).unwrap();
        assert_eq!(chsh.evaluate(&boxed("pr", &c)).unwrap(), r(4, 1));
        assert_eq!(chsh.evaluate(&boxed("uniform", &c)).unwrap(), r(0, 1));
        assert_eq!(chsh.evaluate(&boxed("deterministic(0000)", &c)).unwrap(), r(2, 1));
        assert_eq!(chsh.evaluate(&boxed("isotropic(3/5)", &c)).unwrap(), r(12, 5));
        assert_eq!(boxed("isotropic(1)", &c).values(), boxed("pr", &c).values());
        assert_eq!(boxed("isotropic(0)", &c).values(), boxed("uniform", &c).values());

        let p = scen("pentagon");
        let kcbs = preset_functional(FunctionalPreset::Kcbs, &p).unwrap();
        assert_eq!(kcbs.evaluate(&boxed("uniform_cycle(1/2)", &p)).unwrap(), r(5, 2));
        assert_eq!(kcbs.evaluate(&boxed("uniform_cycle(1/3)", &p)).unwrap(), r(5, 3));

        let g = scen("gyni3");
        let gyni = preset_functional(FunctionalPreset::GyniPayoff, &g).unwrap();
        assert_eq!(gyni.evaluate(&boxed("deterministic(000000)", &g)).unwrap(), r(1, 4));
        assert!(preset_functional(FunctionalPreset::Kcbs, &c).is_err());
    }

    #[test]
    fn presets_validate() {
        for (s, b) in [
            ("chsh", "pr"),
            ("chsh", "uniform"),
            ("chsh", "isotropic(0.7)"),
            ("pentagon", "uniform_cycle(1/2)"),
            ("pentagon", "uniform"),
            ("specker", "deterministic(101)"),
            ("gyni3", "uniform"),
        ] {
            let sc = scen(s);
            let p = boxed(b, &sc);
            assert!(p.validate().is_empty(), "{s} {b}: {:?}", p.validate());
        }
        let p = scen("pentagon");
        assert!(matches!(
            preset_box(&BoxPreset::UniformCycle(r(3, 5)), p.clone()),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(preset_box(&BoxPreset::<Rational>::Pr, p), Err(Error::Incompatible(_))));
    }

    #[test]
    fn signaling_table_is_flagged() {
        let c = scen("chsh");
        // Alice's box 1 marginal depends on Bob's input
        let mut values = boxed("uniform", &c).values().to_vec();
        let m = c.context_index(&[0, 3]).unwrap();
        for (bits, v) in [("00", r(1, 2)), ("01", r(1, 2)), ("10", r(0, 1)), ("11", r(0, 1))] {
            values[c.cell_id(m, c.cell_by_assignment(m, bits).unwrap())] = v;
        }
        let p = ProbabilityFunction::new(c.clone(), values).unwrap();
        let bad = p.consistency_check();
        assert!(!bad.is_empty());
        assert!(bad.iter().any(|v| v.label == "box1=0"));
        assert!(p.validate().iter().all(|v| matches!(v, Violation::Inconsistent(_))));
    }

    #[test]
    fn single_component_is_vacuous() {
        let s = scen("specker");
        // contexts {1,2} and {2,3} share box 2; {1,2},{3,1} share box 1
        let comps = common_components(&s, 0, 1);
        assert_eq!(comps.len(), 2);
    }

    #[test]
    fn decimal_tolerance() {
        let s = scen("chsh");
        let third = Rational::parse_exact("0.2499999999999").unwrap().0;
        let mut v = boxed("uniform", &s).values().to_vec();
        v[0] = third;
        let p = ProbabilityFunction::new(s.clone(), v.clone()).unwrap();
        assert!(!p.is_valid());
        assert!(ProbabilityFunction::new(s, v).unwrap().with_decimal(true).is_valid());
    }

    #[test]
    fn products_multiply() {
        let p = scen("pentagon");
        let u = boxed("uniform_cycle(2/5)", &p);
        let uu = product_probability(&u, &u).unwrap();
        assert!(uu.is_valid());
        let s2 = uu.scenario();
        for i in 0..5 {
            let a = p.outcome(cycle_full_outcome(&p, i).unwrap());
            let b = p.outcome(cycle_full_outcome(&p, 2 * i % 5).unwrap());
            let o = Outcome::new(a.members().flat_map(|x| b.members().map(move |y| x * 11 + y)));
            assert_eq!(*uu.value(s2.outcome_index(&o).unwrap()), r(4, 25));
        }
        let c = scen("chsh");
        let pr = boxed("pr", &c);
        assert!(product_probability(&pr, &pr).unwrap().is_valid());
    }

    #[test]
    fn joint_marginals() {
        let s = scen("pentagon");
        let j = JointDistribution::<Rational>::point_mass(11, 3);
        assert!(j.marginal(s.clone()).unwrap().is_valid());
        assert!(JointDistribution::new(vec![r(1, 2), r(1, 3)]).is_err());
    }
}
