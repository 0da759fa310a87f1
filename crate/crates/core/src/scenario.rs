//! Partition scenarios.
//!
//! A scenario is a finite sample space `0..element_count` together with a list
//! of measurements, each a partition of the sample space. Cells of the
//! partitions are the fine-grained outcomes; unions of cells of one
//! measurement are its coarse-grained outcomes. Outcomes are identified across
//! measurements by subset identity.
//!
//! Box ("marginal") scenarios are built from `n` binary boxes and a list of
//! jointly openable contexts: elements are the allowed `n`-bit assignments and
//! context `j` induces the partition by the restriction `γ|_j`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bitset::Bitset;
use crate::error::{Error, Result};

/// Largest number of boxes for which full or cyclic supports are enumerated.
pub const MAX_BOXES: usize = 20;
/// Default cap on the number of cells of a measurement for [`coarse_outcomes`].
pub const DEFAULT_COARSE_LIMIT: usize = 20;

/// Canonical subset of the sample space: sorted, duplicate free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Outcome {
    members: Vec<u32>,
}

impl Outcome {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<u32> = members.into_iter().map(|m| m as u32).collect();
        members.sort_unstable();
        members.dedup();
        Outcome { members }
    }

    pub fn empty() -> Self {
        Outcome { members: Vec::new() }
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|&m| m as usize)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&(x as u32)).is_ok()
    }

    pub fn max_element(&self) -> Option<usize> {
        self.members.last().map(|&m| m as usize)
    }

    pub fn is_disjoint(&self, o: &Outcome) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < o.members.len() {
            match self.members[i].cmp(&o.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn union(&self, o: &Outcome) -> Outcome {
        Outcome::new(self.members().chain(o.members()))
    }

    pub fn to_bitset(&self, len: usize) -> Bitset {
        Bitset::from_indices(len, self.members())
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, m) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// A measurement: cells in canonical (lexicographic) order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measurement {
    cells: Vec<Outcome>,
}

impl Measurement {
    pub fn cells(&self) -> &[Outcome] {
        &self.cells
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusivityMode {
    /// Disjoint cells of a common measurement.
    Strict,
    /// Disjoint hulls in the Boolean algebra of a common measurement.
    Coarse,
}

impl FromStr for ExclusivityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(ExclusivityMode::Strict),
            "coarse" => Ok(ExclusivityMode::Coarse),
            _ => Err(Error::Parse(format!("unknown exclusivity mode {s:?}"))),
        }
    }
}

impl fmt::Display for ExclusivityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExclusivityMode::Strict => "strict",
            ExclusivityMode::Coarse => "coarse",
        })
    }
}

/// Allowed box assignments of a marginal scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Support {
    All,
    /// Strings with no two cyclically adjacent ones.
    CyclicNoAdjacentOnes,
    List(Vec<String>),
}

/// Box structure kept alongside marginal scenarios (0-based, contexts sorted).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxLayout {
    pub n_boxes: usize,
    pub contexts: Vec<Vec<usize>>,
    pub support: Support,
}

impl BoxLayout {
    fn context_set(&self) -> Vec<Vec<usize>> {
        let mut c = self.contexts.clone();
        c.sort();
        c
    }

    /// `(parties, inputs)` when this is the binary-output Bell layout.
    pub fn as_bell(&self) -> Option<(usize, usize)> {
        if self.support != Support::All {
            return None;
        }
        for parties in 2..=self.n_boxes {
            if self.n_boxes % parties != 0 {
                continue;
            }
            let inputs = self.n_boxes / parties;
            let mut want = bell_contexts(parties, inputs);
            want.sort();
            if want == self.context_set() {
                return Some((parties, inputs));
            }
        }
        None
    }

    pub fn is_chsh(&self) -> bool {
        self.as_bell() == Some((2, 2))
    }

    /// Cycle length when this is the restricted-support cycle layout.
    pub fn as_cycle(&self) -> Option<usize> {
        if self.support != Support::CyclicNoAdjacentOnes || self.n_boxes < 3 {
            return None;
        }
        let mut want = cycle_contexts(self.n_boxes);
        want.sort();
        (want == self.context_set()).then_some(self.n_boxes)
    }
}

/// Context `x` of a Bell layout opens box `party * inputs + x[party]` per party.
pub fn bell_contexts(parties: usize, inputs: usize) -> Vec<Vec<usize>> {
    let total = inputs.pow(parties as u32);
    (0..total)
        .map(|mut code| {
            let mut xs = vec![0; parties];
            for p in (0..parties).rev() {
                xs[p] = code % inputs;
                code /= inputs;
            }
            xs.iter().enumerate().map(|(p, x)| p * inputs + x).collect()
        })
        .collect()
}

fn cycle_contexts(n: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| {
            let mut c = vec![i, (i + 1) % n];
            c.sort();
            c
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Scenario {
    name: String,
    element_count: usize,
    element_labels: Option<Vec<String>>,
    measurements: Vec<Measurement>,
    layout: Option<BoxLayout>,
    outcomes: Vec<Outcome>,
    cell_ids: Vec<Vec<usize>>,
    lookup: HashMap<Outcome, usize>,
    containing: Vec<Vec<usize>>,
    cell_of: Vec<Vec<u32>>,
}

impl PartialEq for Scenario {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
            && self.element_count == o.element_count
            && self.element_labels == o.element_labels
            && self.measurements == o.measurements
    }
}

impl Scenario {
    /// Validates and canonicalises a scenario from raw partitions.
    pub fn new(
        name: impl Into<String>,
        element_count: usize,
        measurements: Vec<Vec<Outcome>>,
        element_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidScenario(m));
        if element_count == 0 {
            return invalid("empty sample space".into());
        }
        if measurements.is_empty() {
            return invalid("at least one measurement is required".into());
        }
        if let Some(labels) = &element_labels {
            if labels.len() != element_count {
                return invalid(format!("{} labels for {element_count} elements", labels.len()));
            }
            let mut sorted = labels.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != labels.len() {
                return invalid("element labels are not distinct".into());
            }
        }
        let mut ms = Vec::with_capacity(measurements.len());
        let mut cell_of = Vec::with_capacity(measurements.len());
        for (mi, mut cells) in measurements.into_iter().enumerate() {
            let mut owner = vec![u32::MAX; element_count];
            cells.sort();
            for (ci, cell) in cells.iter().enumerate() {
                if cell.is_empty() {
                    return invalid(format!("measurement {mi} has an empty cell"));
                }
                for x in cell.members() {
                    if x >= element_count {
                        return invalid(format!("measurement {mi} mentions element {x}"));
                    }
                    if owner[x] != u32::MAX {
                        return invalid(format!("measurement {mi}: cells overlap at element {x}"));
                    }
                    owner[x] = ci as u32;
                }
            }
            if let Some(x) = owner.iter().position(|&o| o == u32::MAX) {
                return invalid(format!("measurement {mi} does not cover element {x}"));
            }
            ms.push(Measurement { cells });
            cell_of.push(owner);
        }
        let mut outcomes = Vec::new();
        let mut lookup = HashMap::new();
        let mut cell_ids = Vec::with_capacity(ms.len());
        let mut containing: Vec<Vec<usize>> = Vec::new();
        for (mi, m) in ms.iter().enumerate() {
            let mut ids = Vec::with_capacity(m.cells.len());
            for c in &m.cells {
                let id = *lookup.entry(c.clone()).or_insert_with(|| {
                    outcomes.push(c.clone());
                    containing.push(Vec::new());
                    outcomes.len() - 1
                });
                if containing[id].last() != Some(&mi) {
                    containing[id].push(mi);
                }
                ids.push(id);
            }
            cell_ids.push(ids);
        }
        Ok(Scenario {
            name: name.into(),
            element_count,
            element_labels,
            measurements: ms,
            layout: None,
            outcomes,
            cell_ids,
            lookup,
            containing,
            cell_of,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    pub fn element_labels(&self) -> Option<&[String]> {
        self.element_labels.as_deref()
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn layout(&self) -> Option<&BoxLayout> {
        self.layout.as_ref()
    }

    /// Deduplicated fine-grained outcomes, in order of first appearance.
    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn outcome(&self, id: usize) -> &Outcome {
        &self.outcomes[id]
    }

    pub fn outcome_index(&self, o: &Outcome) -> Option<usize> {
        self.lookup.get(o).copied()
    }

    /// Outcome id of cell `c` of measurement `m`.
    pub fn cell_id(&self, m: usize, c: usize) -> usize {
        self.cell_ids[m][c]
    }

    pub fn cell_ids(&self, m: usize) -> &[usize] {
        &self.cell_ids[m]
    }

    /// Measurements having outcome `id` as a cell.
    pub fn measurements_containing(&self, id: usize) -> &[usize] {
        &self.containing[id]
    }

    /// Index of the cell of measurement `m` containing element `x`.
    pub fn cell_of(&self, m: usize, x: usize) -> usize {
        self.cell_of[m][x] as usize
    }

    pub fn check_outcome(&self, a: &Outcome) -> Result<()> {
        match a.max_element() {
            Some(x) if x >= self.element_count => Err(Error::OutOfRange(format!(
                "element {x} in a sample space of {}",
                self.element_count
            ))),
            _ => Ok(()),
        }
    }

    /// Cells of `m` meeting `a`, i.e. the smallest coarse outcome of `m` containing `a`.
    pub fn hull(&self, m: usize, a: &Outcome) -> Bitset {
        let mut h = Bitset::new(self.measurements[m].cells.len());
        for x in a.members() {
            h.insert(self.cell_of[m][x] as usize);
        }
        h
    }

    pub fn exclusive(&self, a: &Outcome, b: &Outcome, mode: ExclusivityMode) -> Result<bool> {
        self.check_outcome(a)?;
        self.check_outcome(b)?;
        Ok(match mode {
            ExclusivityMode::Strict => {
                if !a.is_disjoint(b) {
                    return Ok(false);
                }
                match (self.outcome_index(a), self.outcome_index(b)) {
                    (Some(ia), Some(ib)) => {
                        let mb = &self.containing[ib];
                        self.containing[ia].iter().any(|m| mb.contains(m))
                    }
                    _ => false,
                }
            }
            ExclusivityMode::Coarse => {
                (0..self.measurements.len()).any(|m| !self.hull(m, a).intersects(&self.hull(m, b)))
            }
        })
    }

    /// Bit assignment `s` (as a string over the context's boxes, in sorted box
    /// order) of cell `c` of measurement `m`, for marginal scenarios.
    pub fn cell_assignment(&self, m: usize, c: usize) -> Option<String> {
        let layout = self.layout.as_ref()?;
        let labels = self.element_labels.as_ref()?;
        let first = self.measurements[m].cells[c].members().next()?;
        let label = labels[first].as_bytes();
        Some(layout.contexts[m].iter().map(|&b| label[b] as char).collect())
    }

    /// Cell of measurement `m` whose assignment over the context's boxes (in
    /// sorted order) is `bits`; `None` when that assignment has no support.
    pub fn cell_by_assignment(&self, m: usize, bits: &str) -> Option<usize> {
        (0..self.measurements[m].cells.len()).find(|&c| self.cell_assignment(m, c).as_deref() == Some(bits))
    }

    /// Measurement index whose context equals `boxes` (0-based, any order).
    pub fn context_index(&self, boxes: &[usize]) -> Option<usize> {
        let layout = self.layout.as_ref()?;
        let mut b = boxes.to_vec();
        b.sort();
        layout.contexts.iter().position(|c| *c == b)
    }

    /// Short description of an arbitrary outcome: `box1=0,box3=1` when it is
    /// the set of support strings fixing those boxes, else the member list.
    pub fn describe(&self, o: &Outcome) -> String {
        if let (Some(layout), Some(labels)) = (self.layout.as_ref(), self.element_labels.as_ref()) {
            if o.is_empty() {
                return "{}".into();
            }
            if o.len() == self.element_count {
                return "all".into();
            }
            let first = labels[o.members().next().unwrap_or(0)].as_bytes();
            let fixed: Vec<usize> = (0..layout.n_boxes)
                .filter(|&b| o.members().all(|x| labels[x].as_bytes()[b] == first[b]))
                .collect();
            let cylinder = Outcome::new(
                (0..self.element_count).filter(|&x| fixed.iter().all(|&b| labels[x].as_bytes()[b] == first[b])),
            );
            if cylinder == *o {
                let parts: Vec<String> = fixed.iter().map(|&b| format!("box{}={}", b + 1, first[b] as char)).collect();
                return parts.join(",");
            }
        }
        o.to_string()
    }

    /// Human readable name of outcome `id`, e.g. `ctx{1,3}=01`.
    pub fn outcome_label(&self, id: usize) -> String {
        let m = self.containing[id][0];
        let c = self.cell_ids[m].iter().position(|&o| o == id).unwrap_or(0);
        match (self.layout.as_ref(), self.cell_assignment(m, c)) {
            (Some(layout), Some(bits)) => {
                let ctx: Vec<String> = layout.contexts[m].iter().map(|b| (b + 1).to_string()).collect();
                format!("[{}]={}", ctx.join(","), bits)
            }
            _ => format!("M{}#{}", m + 1, c + 1),
        }
    }
}

fn bits_of(x: usize, n: usize) -> String {
    (0..n).map(|b| if x >> (n - 1 - b) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Builds a box scenario. Box indices are 0-based; contexts are sets of boxes.
pub fn build_marginal_scenario(
    name: impl Into<String>,
    n_boxes: usize,
    contexts: &[Vec<usize>],
    support: Support,
) -> Result<Scenario> {
    let invalid = |m: String| Err(Error::InvalidScenario(m));
    if n_boxes == 0 {
        return invalid("at least one box is required".into());
    }
    let mut canon: Vec<Vec<usize>> = Vec::with_capacity(contexts.len());
    for c in contexts {
        if c.is_empty() {
            return invalid("empty context".into());
        }
        let mut s = c.clone();
        s.sort();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return invalid(format!("context {c:?} repeats a box"));
        }
        if let Some(b) = s.iter().find(|&&b| b >= n_boxes) {
            return Err(Error::OutOfRange(format!("box {} of {n_boxes}", b + 1)));
        }
        if canon.contains(&s) {
            return invalid(format!("duplicate context {:?}", s.iter().map(|b| b + 1).collect::<Vec<_>>()));
        }
        canon.push(s);
    }
    let labels: Vec<String> = match &support {
        Support::All | Support::CyclicNoAdjacentOnes => {
            if n_boxes > MAX_BOXES {
                return Err(Error::Resource(format!("{n_boxes} boxes exceed the enumeration cap {MAX_BOXES}")));
            }
            let all = (0..1usize << n_boxes).map(|x| bits_of(x, n_boxes));
            if support == Support::All {
                all.collect()
            } else {
                all.filter(|s| {
                    let b = s.as_bytes();
                    (0..n_boxes).all(|i| !(b[i] == b'1' && b[(i + 1) % n_boxes] == b'1') || n_boxes == 1)
                })
                .collect()
            }
        }
        Support::List(list) => {
            let mut l = list.clone();
            for s in &l {
                if s.len() != n_boxes || !s.bytes().all(|c| c == b'0' || c == b'1') {
                    return invalid(format!("support string {s:?} is not a {n_boxes}-bit string"));
                }
            }
            l.sort();
            if l.windows(2).any(|w| w[0] == w[1]) {
                return invalid("duplicate support string".into());
            }
            l
        }
    };
    if labels.is_empty() {
        return invalid("empty support".into());
    }
    let mut measurements = Vec::with_capacity(canon.len());
    for ctx in &canon {
        let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (x, lab) in labels.iter().enumerate() {
            let b = lab.as_bytes();
            let key: String = ctx.iter().map(|&i| b[i] as char).collect();
            let gi = *index.entry(key.clone()).or_insert_with(|| {
                groups.push((key, Vec::new()));
                groups.len() - 1
            });
            groups[gi].1.push(x);
        }
        measurements.push(groups.into_iter().map(|(_, g)| Outcome::new(g)).collect());
    }
    let mut s = Scenario::new(name, labels.len(), measurements, Some(labels))?;
    s.layout = Some(BoxLayout { n_boxes, contexts: canon, support });
    Ok(s)
}

/// Named scenario families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preset {
    Chsh,
    Specker,
    Pentagon,
    Cycle(usize),
    Bell { parties: usize, inputs: usize, outputs: usize },
    Gyni3,
}

fn parse_call(s: &str) -> Result<(String, Vec<String>)> {
    let s = s.trim();
    if let Some(open) = s.find('(') {
        let close = s
            .rfind(')')
            .filter(|&c| c > open)
            .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in {s:?}")))?;
        let args = s[open + 1..close]
            .split(',')
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        Ok((s[..open].trim().to_lowercase(), args))
    } else {
        let mut it = s.split_whitespace();
        let name = it.next().unwrap_or("").to_lowercase();
        Ok((name, it.map(str::to_string).collect()))
    }
}

/// Splits `name(a, b)` or `name a b` into name and arguments.
pub fn parse_invocation(s: &str) -> Result<(String, Vec<String>)> {
    parse_call(s)
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        let num = |i: usize| -> Result<usize> {
            args.get(i)
                .ok_or_else(|| Error::Parse(format!("preset {name} needs argument {}", i + 1)))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad argument to preset {name}: {:?}", args[i])))
        };
        let preset = match name.as_str() {
            "chsh" => Preset::Chsh,
            "specker" => Preset::Specker,
            "pentagon" => Preset::Pentagon,
            "gyni3" | "gyni" => Preset::Gyni3,
            "cycle" => Preset::Cycle(num(0)?),
            "bell" => Preset::Bell { parties: num(0)?, inputs: num(1)?, outputs: num(2)? },
            _ => return Err(Error::Parse(format!("unknown preset {s:?}"))),
        };
        Ok(preset)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Chsh => write!(f, "chsh"),
            Preset::Specker => write!(f, "specker"),
            Preset::Pentagon => write!(f, "pentagon"),
            Preset::Gyni3 => write!(f, "gyni3"),
            Preset::Cycle(n) => write!(f, "cycle({n})"),
            Preset::Bell { parties, inputs, outputs } => write!(f, "bell({parties},{inputs},{outputs})"),
        }
    }
}

pub fn preset_scenario(p: &Preset) -> Result<Scenario> {
    match p {
        Preset::Chsh => bell_scenario("chsh", 2, 2, 2),
        Preset::Gyni3 => bell_scenario("gyni3", 3, 2, 2),
        Preset::Bell { parties, inputs, outputs } => {
            bell_scenario(&p.to_string(), *parties, *inputs, *outputs)
        }
        Preset::Specker => build_marginal_scenario("specker", 3, &[vec![0, 1], vec![1, 2], vec![0, 2]], Support::All),
        Preset::Pentagon => cycle_scenario("pentagon", 5),
        Preset::Cycle(n) => cycle_scenario(&p.to_string(), *n),
    }
}

fn cycle_scenario(name: &str, n: usize) -> Result<Scenario> {
    if n < 3 {
        return Err(Error::InvalidScenario(format!("cycle length {n} is below 3")));
    }
    build_marginal_scenario(name, n, &cycle_contexts(n), Support::CyclicNoAdjacentOnes)
}

fn bell_scenario(name: &str, parties: usize, inputs: usize, outputs: usize) -> Result<Scenario> {
    if outputs != 2 {
        return Err(Error::InvalidScenario(format!(
            "boxes are binary; {outputs} outputs per input are not representable"
        )));
    }
    if parties == 0 || inputs == 0 {
        return Err(Error::InvalidScenario("bell scenario needs parties and inputs".into()));
    }
    build_marginal_scenario(name, parties * inputs, &bell_contexts(parties, inputs), Support::All)
}

/// Independent composition: elements `i1·|Ξ2| + i2`, measurements `M1⊗M2`
/// in row-major order with cells `A×B`.
pub fn product_scenario(s1: &Scenario, s2: &Scenario) -> Result<Scenario> {
    let n2 = s2.element_count;
    let n = s1
        .element_count
        .checked_mul(n2)
        .filter(|&n| n <= u32::MAX as usize)
        .ok_or_else(|| Error::Resource("product sample space too large".into()))?;
    let mut measurements = Vec::with_capacity(s1.measurements.len() * s2.measurements.len());
    for m1 in &s1.measurements {
        for m2 in &s2.measurements {
            let mut cells = Vec::with_capacity(m1.cells.len() * m2.cells.len());
            for a in &m1.cells {
                for b in &m2.cells {
                    cells.push(Outcome::new(a.members().flat_map(|i| b.members().map(move |j| i * n2 + j))));
                }
            }
            measurements.push(cells);
        }
    }
    let labels = match (&s1.element_labels, &s2.element_labels) {
        (Some(l1), Some(l2)) => Some(
            l1.iter()
                .flat_map(|a| l2.iter().map(move |b| format!("{a}|{b}")))
                .collect(),
        ),
        _ => None,
    };
    Scenario::new(format!("{} x {}", s1.name, s2.name), n, measurements, labels)
}

/// `k`-fold product of a scenario with itself.
pub fn power_scenario(s: &Scenario, k: usize) -> Result<Scenario> {
    if k == 0 {
        return Err(Error::InvalidScenario("copies must be at least 1".into()));
    }
    let mut acc = s.clone();
    for _ in 1..k {
        acc = product_scenario(&acc, s)?;
    }
    if k > 1 {
        acc = acc.with_name(format!("{}^{k}", s.name));
    }
    Ok(acc)
}

/// All `2^|cells|` unions of cells of `m`, ordered by the binary index of the
/// chosen cell set (bit `i` selects cell `i`).
pub fn coarse_outcomes(m: &Measurement, limit: usize) -> Result<Vec<Outcome>> {
    let k = m.cells.len();
    if k > limit {
        return Err(Error::Resource(format!("measurement with {k} cells exceeds the coarse-outcome limit {limit}")));
    }
    Ok((0..1usize << k)
        .map(|mask| {
            Outcome::new(
                (0..k)
                    .filter(|i| mask >> i & 1 == 1)
                    .flat_map(|i| m.cells[i].members()),
            )
        })
        .collect())
}

/// Exclusivity relation on the deduplicated fine-grained outcomes.
#[derive(Clone, Debug)]
pub struct ExclusivityGraph {
    pub mode: ExclusivityMode,
    /// Vertex `v` is outcome `v` of the scenario.
    pub vertices: Vec<Outcome>,
    adjacency: Vec<Bitset>,
}

impl ExclusivityGraph {
    pub fn from_adjacency(mode: ExclusivityMode, vertices: Vec<Outcome>, adjacency: Vec<Bitset>) -> Self {
        ExclusivityGraph { mode, vertices, adjacency }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].contains(v)
    }

    pub fn neighbours(&self, v: usize) -> &Bitset {
        &self.adjacency[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.vertices.len() {
            for v in self.adjacency[u].iter() {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Bitset::count).sum::<usize>() / 2
    }

    pub fn is_clique(&self, vs: &[usize]) -> bool {
        vs.iter()
            .enumerate()
            .all(|(i, &u)| vs[i + 1..].iter().all(|&v| self.adjacent(u, v)))
    }

    /// Subgraph induced on `vs` (vertex `i` of the result is `vs[i]`).
    pub fn induced(&self, vs: &[usize]) -> ExclusivityGraph {
        let adjacency = vs
            .iter()
            .map(|&u| Bitset::from_indices(vs.len(), (0..vs.len()).filter(|&j| self.adjacent(u, vs[j]))))
            .collect();
        ExclusivityGraph {
            mode: self.mode,
            vertices: vs.iter().map(|&v| self.vertices[v].clone()).collect(),
            adjacency,
        }
    }
}

pub fn exclusivity_graph(s: &Scenario, mode: ExclusivityMode) -> ExclusivityGraph {
    let v = s.outcomes.len();
    let mut adjacency = vec![Bitset::new(v); v];
    match mode {
        ExclusivityMode::Strict => {
            for (m, ids) in s.cell_ids.iter().enumerate() {
                let _ = m;
                for (i, &a) in ids.iter().enumerate() {
                    for &b in &ids[i + 1..] {
                        if a != b {
                            adjacency[a].insert(b);
                            adjacency[b].insert(a);
                        }
                    }
                }
            }
        }
        ExclusivityMode::Coarse => {
            let hulls: Vec<Vec<Bitset>> = s
                .outcomes
                .iter()
                .map(|o| (0..s.measurements.len()).map(|m| s.hull(m, o)).collect())
                .collect();
            for a in 0..v {
                for b in a + 1..v {
                    if (0..s.measurements.len()).any(|m| !hulls[a][m].intersects(&hulls[b][m])) {
                        adjacency[a].insert(b);
                        adjacency[b].insert(a);
                    }
                }
            }
        }
    }
    ExclusivityGraph { mode, vertices: s.outcomes.clone(), adjacency }
}
