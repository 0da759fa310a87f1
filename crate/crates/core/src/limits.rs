//! Size caps, overridable through `CTXLAB_LIMITS`.

use crate::error::{Error, Result};

pub const LIMITS_ENV: &str = "CTXLAB_LIMITS";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest sample space for the joint-distribution LP.
    pub nc_elements: usize,
    /// Largest sample space for exhaustive nonnegativity in the measure LP.
    pub qm_enumerate: usize,
    /// Largest sample space for exact branch-and-bound separation.
    pub qm_exact: usize,
    /// Maximal cliques enumerated before giving up.
    pub cliques: usize,
    /// Exclusivity graphs above this many vertices are searched by branch
    /// and bound instead of listing maximal cliques.
    pub clique_vertices: usize,
    /// Node budget of a weighted clique search.
    pub clique_nodes: u64,
    /// Cells of a measurement for coarse-outcome listing.
    pub coarse_cells: usize,
    /// Row-generation rounds.
    pub rowgen_rounds: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            nc_elements: 4096,
            qm_enumerate: 20,
            qm_exact: 40,
            cliques: 10_000_000,
            clique_vertices: 128,
            clique_nodes: 2_000_000_000,
            coarse_cells: 20,
            rowgen_rounds: 5000,
        }
    }
}

impl Limits {
    /// Defaults overridden by `key=value` pairs separated by commas.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut l = Limits::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("limit {part:?} is not key=value")))?;
            let n: u64 = v
                .trim()
                .replace('_', "")
                .parse()
                .map_err(|_| Error::Parse(format!("limit {k} has non-numeric value {v:?}")))?;
            let u = n as usize;
            match k.trim() {
                "nc_elements" | "elements" => l.nc_elements = u,
                "qm_enumerate" => l.qm_enumerate = u,
                "qm_exact" => l.qm_exact = u,
                "cliques" => l.cliques = u,
                "clique_vertices" => l.clique_vertices = u,
                "clique_nodes" => l.clique_nodes = n,
                "coarse_cells" => l.coarse_cells = u,
                "rowgen_rounds" => l.rowgen_rounds = u,
                other => return Err(Error::Parse(format!("unknown limit {other:?}"))),
            }
        }
        Ok(l)
    }

    /// Defaults, or the overrides in `CTXLAB_LIMITS` when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(LIMITS_ENV) {
            Ok(s) => Limits::parse(&s),
            Err(_) => Ok(Limits::default()),
        }
    }
}
