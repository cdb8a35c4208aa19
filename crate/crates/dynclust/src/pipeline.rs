//! The bicriteria layer and the reduction driven by one insert-only graph.

use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{clustering_cost, DynGraph, VertexId};
use crate::incremental::{BicriteriaState, UpdateReport};
use crate::mpbi::MpbiParams;
use crate::reduction::{ReductionConfig, ReductionState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub mpbi: MpbiParams,
    pub reduction: ReductionConfig,
    /// Re-solve every `solve_every` insertions. Anything but 1 skips
    /// solves and is meant for benchmarking only.
    pub solve_every: usize,
    /// Evaluate `cost_G(C)` with exact Dijkstra after each step.
    pub evaluate_cost: bool,
}

impl PipelineConfig {
    /// Consistent configuration for `k` centers and exponent `z`.
    pub fn new(k: usize, z: f64, seed: u64) -> Self {
        Self {
            mpbi: MpbiParams { k, z, seed, ..Default::default() },
            reduction: ReductionConfig { k, z, seed: seed ^ 0x5bd1_e995, ..Default::default() },
            solve_every: 1,
            evaluate_cost: false,
        }
    }
}

/// One metrics line. `null` fields were not computed or are infinite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub s_size: usize,
    pub sigma_inc: usize,
    pub delta_s: usize,
    pub spanner_edges: usize,
    pub c_size: usize,
    pub cost_h: Option<f64>,
    pub cost_g: Option<f64>,
    pub opt: Option<f64>,
    pub ratio: Option<f64>,
    pub first_decrease_level: usize,
    pub resampled: bool,
    pub radii: Vec<Option<f64>>,
    pub t: usize,
    pub opt_infinite: bool,
    pub elapsed_us: u64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    g: DynGraph,
    bic: BicriteriaState,
    red: ReductionState,
    step: usize,
}

impl Pipeline {
    /// Initialize both layers on `g` (step 0).
    pub fn new(g: DynGraph, cfg: PipelineConfig) -> Result<(Self, StepRecord)> {
        let start = Instant::now();
        let bic = BicriteriaState::init(&g, cfg.mpbi)?;
        let mut red = ReductionState::new(&g, cfg.reduction)?;
        red.apply_assignment_batch(&g, bic.sigma_change_feed())?;
        red.solve();
        let p = Self { cfg, g, bic, red, step: 0 };
        let report = UpdateReport {
            insertion: 0,
            first_decrease_level: p.bic.t(),
            resampled: false,
            radii: p.radii(),
            decreased: Vec::new(),
            s_size: p.bic.solution_set().len(),
            t: p.bic.t(),
            opt_infinite: p.bic.opt_infinite(),
        };
        let rec = p.record(&report, start);
        Ok((p, rec))
    }

    fn radii(&self) -> Vec<Option<f64>> {
        (0..self.bic.levels().len()).map(|i| finite(self.bic.radius_value(i))).collect()
    }

    /// Insert `(u, v, w)` and bring every layer up to date.
    pub fn insert(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<StepRecord> {
        let start = Instant::now();
        self.g.insert_edge(u, v, w)?;
        self.step += 1;
        let report = self.bic.handle_insertion(&self.g, u, v, w)?;
        self.red.apply_assignment_batch(&self.g, self.bic.sigma_change_feed())?;
        self.red.handle_edge_insertion(&self.g, u, v, w)?;
        if self.step % self.cfg.solve_every.max(1) == 0 {
            self.red.solve();
        }
        Ok(self.record(&report, start))
    }

    fn record(&self, report: &UpdateReport, start: Instant) -> StepRecord {
        let sol = self.red.solution();
        let cost_g = (self.cfg.evaluate_cost && !self.bic.opt_infinite())
            .then(|| self.cost_in_graph())
            .and_then(finite);
        StepRecord {
            step: self.step,
            s_size: report.s_size,
            sigma_inc: self.bic.counters().sigma_inc,
            delta_s: self.red.counters().delta_s,
            spanner_edges: self.red.spanner().map_or(0, |s| s.num_edges()),
            c_size: sol.centers.len(),
            cost_h: finite(sol.cost),
            cost_g,
            opt: None,
            ratio: None,
            first_decrease_level: report.first_decrease_level,
            resampled: report.resampled,
            radii: report.radii.clone(),
            t: report.t,
            opt_infinite: report.opt_infinite,
            elapsed_us: start.elapsed().as_micros() as u64,
        }
    }

    /// Exact `cost_G(C)`; infinite while no finite solution exists.
    pub fn cost_in_graph(&self) -> f64 {
        clustering_cost(&self.g, &self.red.solution().centers, self.cfg.mpbi.z, None)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &DynGraph {
        &self.g
    }

    pub fn bicriteria(&self) -> &BicriteriaState {
        &self.bic
    }

    pub fn reduction(&self) -> &ReductionState {
        &self.red
    }

    pub fn centers(&self) -> &[VertexId] {
        &self.red.solution().centers
    }

    pub fn step(&self) -> usize {
        self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::tree_then_random;

    #[test]
    fn k_at_least_n_costs_nothing() {
        let s = tree_then_random(6, 10, 5, 1).unwrap();
        let mut cfg = PipelineConfig::new(6, 1.0, 1);
        cfg.evaluate_cost = true;
        let (mut p, rec) = Pipeline::new(DynGraph::new(6).unwrap(), cfg).unwrap();
        assert!(rec.opt_infinite || rec.cost_g == Some(0.0));
        for &(u, v, w) in &s.edges {
            let rec = p.insert(u, v, w).unwrap();
            if !rec.opt_infinite {
                assert_eq!(rec.cost_g, Some(0.0));
            }
        }
        assert!(!p.bicriteria().opt_infinite());
    }

    #[test]
    fn restarts_track_sigma_inc() {
        let s = tree_then_random(80, 200, 20, 3).unwrap();
        let cfg = PipelineConfig::new(2, 1.0, 3);
        let (mut p, _) = Pipeline::new(DynGraph::new(80).unwrap(), cfg).unwrap();
        for &(u, v, w) in &s.edges {
            let rec = p.insert(u, v, w).unwrap();
            assert!(rec.c_size <= 2);
            assert_eq!(p.reduction().counters().restarts, rec.sigma_inc);
        }
        assert_eq!(p.reduction().total_weight(), 80);
    }
}
