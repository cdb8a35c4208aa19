//! Reduction from the bicriteria assignment to a small weighted instance.
//!
//! Every center `s` ever in the image of `σ` gets its own single-source
//! distance oracle. The instance `H` is the complete graph on those
//! centers with `w_H(x,y) = ⌈min(δ_x(y), δ_y(x))⌉` rounded up to a power of
//! `1+ε`, and vertex weights `wt(s) = |σ⁻¹(s)|`. A spanner `H̃` of `H` is
//! maintained, restarted whenever new centers appear, and the static
//! solver runs on `H̃`.

use log::debug;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::{DynGraph, VertexId};
use crate::incremental::SigmaBatch;
use crate::scale::PowerScale;
use crate::spanner::{Spanner, SpannerConfig};
use crate::sssp::DistanceOracle;
use crate::weighted::{solve_static_with, Solution, SolverConfig, WeightedInstance};

const NOT_CENTER: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionConfig {
    pub k: usize,
    pub z: f64,
    /// Rounding and oracle accuracy, in `(0, ½)`.
    pub eps: f64,
    pub lambda: usize,
    pub deterministic_spanner: bool,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            k: 1,
            z: 1.0,
            eps: 0.25,
            lambda: 2,
            deterministic_spanner: false,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return invalid("k must be ≥ 1");
        }
        if !(self.z >= 1.0 && self.z.is_finite()) {
            return invalid(format!("z must be ≥ 1, got {}", self.z));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return invalid(format!("reduction ε must lie in (0,½), got {}", self.eps));
        }
        self.spanner_config().validate()
    }

    pub fn spanner_config(&self) -> SpannerConfig {
        SpannerConfig {
            lambda: self.lambda,
            eps: self.eps,
            deterministic: self.deterministic_spanner,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReductionCounters {
    /// Spanner (re)initializations; the first build counts.
    pub restarts: usize,
    /// Pairs whose rounded weight dropped in the last edge insertion.
    pub delta_s: usize,
    pub delta_s_total: usize,
    /// Solver runs; a solve on an unchanged instance reuses the last one.
    pub solves: usize,
}

#[derive(Debug, Clone)]
pub struct ReductionState {
    cfg: ReductionConfig,
    scale: PowerScale,
    /// Centers in order of arrival; position is the local id.
    centers: Vec<VertexId>,
    local: Vec<usize>,
    oracles: Vec<DistanceOracle>,
    /// Rounded weights as exponents; `None` for unreachable pairs.
    w_exp: Vec<Vec<Option<u32>>>,
    wt: Vec<u64>,
    spanner: Option<Spanner>,
    solution: Solution,
    /// `H̃` or the weights changed since the last solve.
    stale: bool,
    counters: ReductionCounters,
}

impl ReductionState {
    /// Empty center set over `g`'s vertices.
    pub fn new(g: &DynGraph, cfg: ReductionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            scale: PowerScale::new(cfg.eps)?,
            centers: Vec::new(),
            local: vec![NOT_CENTER; g.n()],
            oracles: Vec::new(),
            w_exp: Vec::new(),
            wt: Vec::new(),
            spanner: None,
            solution: Solution { centers: Vec::new(), cost: f64::INFINITY },
            stale: true,
            counters: ReductionCounters::default(),
        })
    }

    pub fn config(&self) -> &ReductionConfig {
        &self.cfg
    }

    pub fn scale(&self) -> &PowerScale {
        &self.scale
    }

    /// `σ_max(V)` in arrival order.
    pub fn centers(&self) -> &[VertexId] {
        &self.centers
    }

    pub fn is_center(&self, v: VertexId) -> bool {
        self.local[v] != NOT_CENTER
    }

    /// `wt(s)` of a center (0 for non-centers).
    pub fn weight_of(&self, s: VertexId) -> u64 {
        match self.local[s] {
            NOT_CENTER => 0,
            i => self.wt[i],
        }
    }

    pub fn total_weight(&self) -> u64 {
        self.wt.iter().sum()
    }

    pub fn oracle(&self, s: VertexId) -> Option<&DistanceOracle> {
        (self.local[s] != NOT_CENTER).then(|| &self.oracles[self.local[s]])
    }

    /// `w_H` between two centers (infinite when unreachable, 0 on the diagonal).
    pub fn h_weight(&self, x: VertexId, y: VertexId) -> Result<f64> {
        let (i, j) = (self.local_of(x)?, self.local_of(y)?);
        if i == j {
            return Ok(0.0);
        }
        Ok(self.w_exp[i][j].map_or(f64::INFINITY, |e| self.scale.value(e as i64)))
    }

    /// Rounded exponents of `H` by local id.
    pub fn h_exponents(&self) -> &[Vec<Option<u32>>] {
        &self.w_exp
    }

    fn local_of(&self, v: VertexId) -> Result<usize> {
        match self.local.get(v) {
            Some(&i) if i != NOT_CENTER => Ok(i),
            _ => invalid(format!("vertex {v} is not a center")),
        }
    }

    pub fn spanner(&self) -> Option<&Spanner> {
        self.spanner.as_ref()
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn counters(&self) -> &ReductionCounters {
        &self.counters
    }

    /// Instance on `H̃` with local node ids.
    pub fn sparse_instance(&self) -> WeightedInstance {
        let edges = self.spanner.as_ref().map(|s| s.edges()).unwrap_or_default();
        WeightedInstance { weights: self.wt.clone(), edges, k: self.cfg.k, z: self.cfg.z }
    }

    /// Instance on the full `H` with local node ids.
    pub fn full_instance(&self) -> WeightedInstance {
        WeightedInstance { weights: self.wt.clone(), edges: self.h_edges(), k: self.cfg.k, z: self.cfg.z }
    }

    fn h_edges(&self) -> Vec<(usize, usize, f64)> {
        let p = self.centers.len();
        let mut out = Vec::new();
        for i in 0..p {
            for j in i + 1..p {
                if let Some(e) = self.w_exp[i][j] {
                    out.push((i, j, self.scale.value(e as i64)));
                }
            }
        }
        out
    }

    fn rounded(&self, i: usize, j: usize) -> Option<u32> {
        let d = self.oracles[i]
            .estimate(self.centers[j])
            .min(self.oracles[j].estimate(self.centers[i]));
        self.scale.ceil_exp(d)
    }

    /// Apply a batch of preimage changes. New centers get oracles and
    /// rounded edges; the spanner restarts iff some center is new. Returns
    /// whether it restarted.
    pub fn apply_assignment_batch(&mut self, g: &DynGraph, batch: &SigmaBatch) -> Result<bool> {
        for &s in &batch.new_centers {
            g.check_vertex(s)?;
            if self.local[s] != NOT_CENTER {
                return Err(Error::Invariant(format!("center {s} announced twice")));
            }
            let i = self.centers.len();
            self.local[s] = i;
            self.centers.push(s);
            self.oracles.push(DistanceOracle::init(g, &[s], self.cfg.eps)?);
            self.wt.push(0);
            for row in &mut self.w_exp {
                row.push(None);
            }
            self.w_exp.push(vec![None; i + 1]);
            for j in 0..i {
                let e = self.rounded(i, j);
                self.w_exp[i][j] = e;
                self.w_exp[j][i] = e;
            }
        }
        for &(s, c) in &batch.counts {
            match self.local.get(s) {
                Some(&i) if i != NOT_CENTER => {
                    self.stale |= self.wt[i] != c as u64;
                    self.wt[i] = c as u64;
                }
                _ if c == 0 => {}
                _ => return Err(Error::Invariant(format!("vertex {s} gained weight before becoming a center"))),
            }
        }
        if batch.new_centers.is_empty() {
            return Ok(false);
        }
        self.stale = true;
        let p = self.centers.len();
        let edges = self.h_edges();
        match &mut self.spanner {
            Some(sp) => sp.restart(p, &edges)?,
            None => self.spanner = Some(Spanner::new(p, &edges, self.cfg.spanner_config())?),
        }
        self.counters.restarts += 1;
        debug!("spanner restart {} over {p} centers", self.counters.restarts);
        Ok(true)
    }

    /// Propagate an edge already inserted into `g`. Returns `|Δ_S|`.
    pub fn handle_edge_insertion(&mut self, g: &DynGraph, u: VertexId, v: VertexId, w: f64) -> Result<usize> {
        let mut touched: Vec<(usize, usize)> = Vec::new();
        for i in 0..self.oracles.len() {
            for y in self.oracles[i].insert(g, u, v, w) {
                let j = self.local[y];
                if j != NOT_CENTER && j != i {
                    touched.push((i.min(j), i.max(j)));
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let mut lowered = Vec::new();
        for (i, j) in touched {
            let e = self.rounded(i, j);
            let lower = match (e, self.w_exp[i][j]) {
                (Some(a), Some(b)) => a < b,
                (Some(_), None) => true,
                _ => false,
            };
            if !lower {
                continue;
            }
            self.w_exp[i][j] = e;
            self.w_exp[j][i] = e;
            lowered.push((i, j, self.scale.value(e.expect("finite") as i64)));
        }
        if let Some(sp) = &mut self.spanner {
            sp.decrease_many(&lowered)?;
        }
        let delta = lowered.len();
        self.stale |= delta > 0;
        self.counters.delta_s = delta;
        self.counters.delta_s_total += delta;
        Ok(delta)
    }

    /// Recompute `C` with the static solver on `H̃`.
    pub fn solve(&mut self) -> &Solution {
        if !self.stale {
            return &self.solution;
        }
        self.stale = false;
        self.counters.solves += 1;
        let inst = self.sparse_instance();
        let sol = if inst.weights.is_empty() {
            Solution { centers: Vec::new(), cost: f64::INFINITY }
        } else {
            solve_static_with(&inst, &self.cfg.solver)
        };
        self.solution = Solution {
            centers: sol.centers.iter().map(|&i| self.centers[i]).collect(),
            cost: sol.cost,
        };
        &self.solution
    }
}
