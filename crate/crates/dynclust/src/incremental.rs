//! Leveled bicriteria state maintained under edge insertions.
//!
//! Every level `i < t` owns an approximate distance oracle over its
//! candidates `S_i`, a radius `ν_i`, an approximate ball `B_i` of exactly
//! `⌈β|U_i|⌉` vertices and a leaking set `Z_i`. After an insertion the first
//! level whose valid radius dropped is rebuilt, and every later level is
//! resampled and either shrinks its radius or tops its ball up with vertices
//! that leaked out of earlier balls.
//!
//! If the first build meets an infinite covering radius the state reports
//! an infinite optimum and retries the build on each later insertion.

use fixedbitset::FixedBitSet;
use log::{debug, trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assign::Assignment;
use crate::error::{Error, Result};
use crate::graph::{DynGraph, VertexId};
use crate::mpbi::{kth_smallest, MpbiParams};
use crate::scale::{ceil_fraction, PowerScale, Radius};
use crate::sssp::DistanceOracle;

#[derive(Debug, Clone)]
pub struct LevelState {
    pub u: FixedBitSet,
    pub s: FixedBitSet,
    pub nu: Radius,
    /// `None` on the last level.
    pub oracle: Option<DistanceOracle>,
    pub b: FixedBitSet,
    pub z: FixedBitSet,
    /// Cached `ν̃_i`, refreshed whenever the oracle reports a change.
    nu_tilde: Radius,
    stale: bool,
}

impl LevelState {
    pub fn u_size(&self) -> usize {
        self.u.count_ones(..)
    }
}

/// Event counters over the lifetime of the state.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Counters {
    pub insertions: usize,
    pub resampling_phases: usize,
    /// Radius decreases per level.
    pub radius_decreases: Vec<usize>,
    /// Updates in which some vertex joined the image of `σ` for the first time.
    pub sigma_inc: usize,
    /// Build attempts (1 when the first build succeeded).
    pub builds: usize,
}

/// Preimage changes of one update, as seen by the reduction layer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SigmaBatch {
    /// `(center, |σ⁻¹(center)|)` for every center whose count changed.
    pub counts: Vec<(VertexId, usize)>,
    /// Centers that entered the image of `σ` for the first time.
    pub new_centers: Vec<VertexId>,
}

impl SigmaBatch {
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Per-insertion record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateReport {
    pub insertion: usize,
    /// Smallest level whose radius decreased; equals `t` when none did.
    pub first_decrease_level: usize,
    pub resampled: bool,
    /// `ν_0..ν_t`; `null` is an infinite radius.
    pub radii: Vec<Option<f64>>,
    pub decreased: Vec<usize>,
    pub s_size: usize,
    pub t: usize,
    pub opt_infinite: bool,
}

/// Read-only view of the maintained bicriteria solution.
#[derive(Debug, Clone, Copy)]
pub struct BicriteriaSolution<'a> {
    /// `∪ S_i`; empty while the optimum is reported infinite.
    pub s: &'a FixedBitSet,
    pub sigma: &'a Assignment,
    pub opt_infinite: bool,
}

#[derive(Debug, Clone)]
pub struct BicriteriaState {
    params: MpbiParams,
    n: usize,
    scale: PowerScale,
    threshold: f64,
    levels: Vec<LevelState>,
    t: usize,
    s_all: FixedBitSet,
    sigma: Assignment,
    z_tmp: FixedBitSet,
    rng: ChaCha8Rng,
    opt_infinite: bool,
    has_edge: Vec<bool>,
    ever_center: Vec<bool>,
    published: Vec<usize>,
    touched: Vec<VertexId>,
    touched_mark: Vec<bool>,
    counters: Counters,
    last_batch: SigmaBatch,
}

impl BicriteriaState {
    /// Build the levels on the current graph.
    pub fn init(g: &DynGraph, params: MpbiParams) -> Result<Self> {
        params.validate()?;
        let n = g.n();
        let mut st = Self {
            params,
            n,
            scale: PowerScale::new(params.eps)?,
            threshold: params.sample_threshold(n),
            levels: Vec::new(),
            t: 0,
            s_all: FixedBitSet::with_capacity(n),
            sigma: Assignment::identity(n),
            z_tmp: FixedBitSet::with_capacity(n),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            opt_infinite: true,
            has_edge: (0..n).map(|v| g.degree(v) > 0).collect(),
            ever_center: vec![false; n],
            published: vec![0; n],
            touched: Vec::new(),
            touched_mark: vec![false; n],
            counters: Counters::default(),
            last_batch: SigmaBatch::default(),
        };
        st.try_build(g)?;
        Ok(st)
    }

    pub fn params(&self) -> &MpbiParams {
        &self.params
    }

    pub fn scale(&self) -> &PowerScale {
        &self.scale
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Levels `0..=t` (empty while the optimum is reported infinite).
    pub fn levels(&self) -> &[LevelState] {
        &self.levels
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn opt_infinite(&self) -> bool {
        self.opt_infinite
    }

    /// Temporary leaking set; empty between updates.
    pub fn pending_leaks(&self) -> &FixedBitSet {
        &self.z_tmp
    }

    pub fn radius_value(&self, i: usize) -> f64 {
        self.scale.radius_value(self.levels[i].nu)
    }

    pub fn radii(&self) -> Vec<Radius> {
        self.levels.iter().map(|l| l.nu).collect()
    }

    pub fn current_solution(&self) -> BicriteriaSolution<'_> {
        BicriteriaSolution { s: &self.s_all, sigma: &self.sigma, opt_infinite: self.opt_infinite }
    }

    /// Candidate set `S = ∪ S_i`, ascending.
    pub fn solution_set(&self) -> Vec<VertexId> {
        self.s_all.ones().collect()
    }

    pub fn sigma(&self) -> &Assignment {
        &self.sigma
    }

    /// Preimage changes of the last update.
    pub fn sigma_change_feed(&self) -> &SigmaBatch {
        &self.last_batch
    }

    /// Batch describing the whole current assignment (used to seed a fresh
    /// consumer).
    pub fn full_batch(&self) -> SigmaBatch {
        if self.opt_infinite {
            return SigmaBatch::default();
        }
        let counts: Vec<_> =
            self.sigma.image().into_iter().map(|s| (s, self.sigma.count(s))).collect();
        let new_centers = counts.iter().map(|&(s, _)| s).collect();
        SigmaBatch { counts, new_centers }
    }

    /// `ν̂_i = max(ν̃_i, ν_{i−1})` from the oracle's current estimates.
    pub fn valid_radius(&self, i: usize) -> Radius {
        let prev = if i == 0 { Radius::Zero } else { self.levels[i - 1].nu };
        let lvl = &self.levels[i];
        match &lvl.oracle {
            Some(o) => self.covering_radius(o, &lvl.u).max(prev),
            None => prev,
        }
    }

    fn covering_radius(&self, o: &DistanceOracle, u: &FixedBitSet) -> Radius {
        let est = o.estimates();
        let mut vals: Vec<f64> = u.ones().map(|v| est[v]).collect();
        if vals.is_empty() {
            return Radius::Zero;
        }
        let c = ceil_fraction(self.params.beta, vals.len()).max(1);
        self.scale.radius_of(kth_smallest(&mut vals, c))
    }

    fn nu_hat(&mut self, i: usize) -> Radius {
        if self.levels[i].stale {
            let lvl = &self.levels[i];
            let r = match &lvl.oracle {
                Some(o) => self.covering_radius(o, &lvl.u),
                None => Radius::Zero,
            };
            self.levels[i].nu_tilde = r;
            self.levels[i].stale = false;
        }
        let prev = if i == 0 { Radius::Zero } else { self.levels[i - 1].nu };
        if self.params.clamp {
            self.levels[i].nu_tilde.max(prev)
        } else {
            self.levels[i].nu_tilde
        }
    }

    fn sample(&mut self, u: &FixedBitSet) -> FixedBitSet {
        let prob = self.params.sample_probability(self.n, u.count_ones(..));
        let mut s = FixedBitSet::with_capacity(self.n);
        for v in u.ones() {
            if self.has_edge[v] && self.rng.random_bool(prob) {
                s.insert(v);
            }
        }
        s
    }

    fn assign(&mut self, v: VertexId, c: VertexId) {
        let old = self.sigma.set(v, c);
        if old != c {
            for x in [old, c] {
                if !self.touched_mark[x] {
                    self.touched_mark[x] = true;
                    self.touched.push(x);
                }
            }
        }
    }

    /// Approximate ball `Retain(Ball[S_i, r, δ] ∩ U_i, target)`.
    fn retained_ball(&self, i: usize, r: Radius, target: usize) -> Result<FixedBitSet> {
        let lvl = &self.levels[i];
        let est = lvl.oracle.as_ref().expect("level below t has an oracle").estimates();
        let rv = self.scale.radius_value(r);
        let mut b = FixedBitSet::with_capacity(self.n);
        for v in lvl.u.ones() {
            if b.count_ones(..) == target {
                break;
            }
            if est[v] <= rv {
                b.insert(v);
            }
        }
        if b.count_ones(..) < target {
            return Err(Error::Invariant(format!(
                "level {i}: ball of radius {rv} holds {} execution vertices, {target} needed",
                b.count_ones(..)
            )));
        }
        Ok(b)
    }

    /// Fresh build of every level. Returns `false` (leaving the state in
    /// infinite-optimum mode) when some covering radius is infinite.
    fn try_build(&mut self, g: &DynGraph) -> Result<bool> {
        self.counters.builds += 1;
        let n = self.n;
        let mut levels: Vec<LevelState> = Vec::new();
        let mut u = FixedBitSet::with_capacity(n);
        u.insert_range(..);
        let mut prev = Radius::Zero;
        let saved_sigma = std::mem::replace(&mut self.sigma, Assignment::identity(n));
        let saved_levels = std::mem::take(&mut self.levels);

        while u.count_ones(..) as f64 > self.threshold {
            let s = self.sample(&u);
            if s.is_clear() {
                debug!("build: empty sample at level {}", levels.len());
                return self.abort_build(saved_sigma, saved_levels);
            }
            let sources: Vec<_> = s.ones().collect();
            let oracle = DistanceOracle::init(g, &sources, self.params.eps)?;
            let nu_tilde = self.covering_radius(&oracle, &u);
            if nu_tilde == Radius::Infinite {
                debug!("build: infinite covering radius at level {}", levels.len());
                return self.abort_build(saved_sigma, saved_levels);
            }
            let nu = if self.params.clamp { nu_tilde.max(prev) } else { nu_tilde };
            let i = levels.len();
            levels.push(LevelState {
                u: u.clone(),
                s,
                nu,
                oracle: Some(oracle),
                b: FixedBitSet::with_capacity(n),
                z: FixedBitSet::with_capacity(n),
                nu_tilde,
                stale: false,
            });
            self.levels = levels;
            let target = ceil_fraction(self.params.beta, u.count_ones(..));
            let b = self.retained_ball(i, nu, target)?;
            levels = std::mem::take(&mut self.levels);
            let o = levels[i].oracle.as_ref().expect("oracle");
            for v in b.ones() {
                let c = o.nearest(v).expect("ball member is reachable");
                self.sigma.set(v, c);
            }
            u.difference_with(&b);
            levels[i].b = b;
            prev = nu;
        }

        let mut s_all = FixedBitSet::with_capacity(n);
        for l in &levels {
            s_all.union_with(&l.s);
        }
        s_all.union_with(&u);
        for v in u.ones() {
            self.sigma.set(v, v);
        }
        levels.push(LevelState {
            u: u.clone(),
            s: u.clone(),
            nu: prev,
            oracle: None,
            b: u,
            z: FixedBitSet::with_capacity(n),
            nu_tilde: Radius::Zero,
            stale: false,
        });
        self.t = levels.len() - 1;
        self.counters.radius_decreases = vec![0; self.t + 1];
        self.levels = levels;
        self.s_all = s_all;
        self.opt_infinite = false;
        self.last_batch = self.full_batch();
        self.publish_all();
        Ok(true)
    }

    fn abort_build(&mut self, sigma: Assignment, levels: Vec<LevelState>) -> Result<bool> {
        self.sigma = sigma;
        self.levels = levels;
        self.last_batch = SigmaBatch::default();
        Ok(false)
    }

    fn publish_all(&mut self) {
        let mut new_any = false;
        for &(s, c) in &self.last_batch.counts {
            self.published[s] = c;
            if c > 0 && !self.ever_center[s] {
                self.ever_center[s] = true;
                new_any = true;
            }
        }
        if new_any {
            self.counters.sigma_inc += 1;
        }
    }

    /// Collect the preimage changes of this update into `last_batch`.
    fn publish_touched(&mut self) {
        let mut counts = Vec::new();
        let mut new_centers = Vec::new();
        let mut touched = std::mem::take(&mut self.touched);
        touched.sort_unstable();
        for s in touched {
            self.touched_mark[s] = false;
            let c = self.sigma.count(s);
            if c != self.published[s] {
                counts.push((s, c));
                self.published[s] = c;
                if c > 0 && !self.ever_center[s] {
                    self.ever_center[s] = true;
                    new_centers.push(s);
                }
            }
        }
        if !new_centers.is_empty() {
            self.counters.sigma_inc += 1;
        }
        self.last_batch = SigmaBatch { counts, new_centers };
    }

    /// Process an edge that has already been inserted into `g`.
    pub fn handle_insertion(
        &mut self,
        g: &DynGraph,
        u: VertexId,
        v: VertexId,
        w: f64,
    ) -> Result<UpdateReport> {
        self.counters.insertions += 1;
        let fresh: Vec<VertexId> =
            [u, v].into_iter().filter(|&x| !self.has_edge[x] && g.degree(x) > 0).collect();
        for &x in &fresh {
            self.has_edge[x] = true;
        }

        if self.opt_infinite {
            self.try_build(g)?;
            return Ok(self.report(self.t, false, Vec::new()));
        }

        for lvl in self.levels.iter_mut().take(self.t) {
            let o = lvl.oracle.as_mut().expect("oracle below t");
            if !o.insert(g, u, v, w).is_empty() {
                lvl.stale = true;
            }
        }

        // A vertex gets its chance to be sampled when its first edge arrives.
        for &x in &fresh {
            for i in 0..self.t {
                if !self.levels[i].u.contains(x) || self.levels[i].s.contains(x) {
                    continue;
                }
                let prob = self.params.sample_probability(self.n, self.levels[i].u_size());
                if self.rng.random_bool(prob) {
                    trace!("lazy sample of {x} at level {i}");
                    let lvl = &mut self.levels[i];
                    lvl.s.insert(x);
                    let o = lvl.oracle.as_mut().expect("oracle below t");
                    if !o.extend_sources(g, &[x]).is_empty() {
                        lvl.stale = true;
                    }
                    self.s_all.insert(x);
                }
            }
        }

        // First level whose valid radius dropped.
        let t = self.t;
        let mut first = t;
        let mut hat = Radius::Infinite;
        for i in 0..t {
            let h = self.nu_hat(i);
            if h < self.levels[i].nu {
                first = i;
                hat = h;
                break;
            }
        }
        if first == t {
            self.publish_touched();
            return Ok(self.report(t, false, Vec::new()));
        }

        let mut decreased = vec![first];
        self.z_tmp.clear();
        self.decrease_radius(first, hat)?;
        let mut next = self.levels[first].u.clone();
        next.difference_with(&self.levels[first].b);
        self.counters.resampling_phases += 1;

        let mut i = first + 1;
        while next.count_ones(..) as f64 > self.threshold {
            if i >= t {
                return Err(Error::Invariant(format!(
                    "execution set at level {i} has {} vertices, beyond the last level {t}",
                    next.count_ones(..)
                )));
            }
            self.levels[i].u = next;
            let fresh_s = self.sample(&self.levels[i].u.clone());
            self.s_all.union_with(&fresh_s);
            let lvl = &mut self.levels[i];
            lvl.s.union_with(&fresh_s);
            let sources: Vec<_> = lvl.s.ones().collect();
            lvl.oracle = Some(DistanceOracle::init(g, &sources, self.params.eps)?);
            lvl.stale = true;

            let h = self.nu_hat(i);
            if h < self.levels[i].nu {
                self.decrease_radius(i, h)?;
                decreased.push(i);
            } else {
                self.top_up(i)?;
            }
            let lvl = &self.levels[i];
            next = lvl.u.clone();
            next.difference_with(&lvl.b);
            next.difference_with(&lvl.z);
            self.z_tmp.intersect_with(&next);
            i += 1;
        }
        if i != t {
            return Err(Error::Invariant(format!("last level moved from {t} to {i}")));
        }

        // Last level: every remaining vertex is its own center.
        let prev = self.levels[t - 1].nu;
        for x in next.ones() {
            self.assign(x, x);
        }
        self.s_all.union_with(&next);
        let last = &mut self.levels[t];
        last.s.union_with(&next);
        last.b = next.clone();
        last.u = next;
        last.z.clear();
        last.nu = prev;
        self.z_tmp.clear();

        self.publish_touched();
        Ok(self.report(first, true, decreased))
    }

    fn decrease_radius(&mut self, i: usize, r: Radius) -> Result<()> {
        let target = ceil_fraction(self.params.beta, self.levels[i].u_size());
        let b = self.retained_ball(i, r, target)?;
        let o = self.levels[i].oracle.as_ref().expect("oracle below t");
        let centers: Vec<(VertexId, VertexId)> =
            b.ones().map(|x| (x, o.nearest(x).expect("ball member is reachable"))).collect();
        for (x, c) in centers {
            self.assign(x, c);
        }
        let lvl = &mut self.levels[i];
        lvl.nu = r;
        let mut left = std::mem::replace(&mut lvl.b, b);
        left.difference_with(&lvl.b);
        self.z_tmp.union_with(&lvl.z);
        self.z_tmp.union_with(&left);
        lvl.z.clear();
        self.counters.radius_decreases[i] += 1;
        Ok(())
    }

    /// Keep `ν_i` and refill the level from the temporary leaking set.
    fn top_up(&mut self, i: usize) -> Result<()> {
        let lvl = &mut self.levels[i];
        lvl.b.intersect_with(&lvl.u);
        lvl.z.intersect_with(&lvl.u);
        let target = ceil_fraction(self.params.beta, lvl.u.count_ones(..));
        let have = lvl.b.count_ones(..) + lvl.z.count_ones(..);
        let need = target.checked_sub(have).ok_or_else(|| {
            Error::Invariant(format!("level {i}: ball and leaks hold {have} > {target} vertices"))
        })?;
        let mut pick = FixedBitSet::with_capacity(self.n);
        for x in self.z_tmp.ones() {
            if pick.count_ones(..) == need {
                break;
            }
            if lvl.u.contains(x) {
                pick.insert(x);
            }
        }
        if pick.count_ones(..) < need {
            return Err(Error::Invariant(format!(
                "level {i}: {need} leaked vertices needed, {} available",
                pick.count_ones(..)
            )));
        }
        lvl.z.union_with(&pick);
        self.z_tmp.difference_with(&pick);
        Ok(())
    }

    fn report(&self, first: usize, resampled: bool, decreased: Vec<usize>) -> UpdateReport {
        UpdateReport {
            insertion: self.counters.insertions,
            first_decrease_level: first,
            resampled,
            radii: self
                .levels
                .iter()
                .map(|l| {
                    let x = self.scale.radius_value(l.nu);
                    x.is_finite().then_some(x)
                })
                .collect(),
            decreased,
            s_size: self.s_all.count_ones(..),
            t: self.t,
            opt_infinite: self.opt_infinite,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::check_bicriteria;

    fn params(k: usize, alpha: f64, seed: u64) -> MpbiParams {
        MpbiParams { k, alpha, seed, ..Default::default() }
    }

    #[test]
    fn tiny_graph_is_all_centers() {
        let mut g = DynGraph::new(5).unwrap();
        g.insert_edge(0, 1, 1.0).unwrap();
        let st = BicriteriaState::init(&g, params(1, 4.0, 1)).unwrap();
        assert_eq!(st.t(), 0);
        assert!(!st.opt_infinite());
        assert_eq!(st.solution_set(), vec![0, 1, 2, 3, 4]);
        assert_eq!(*st.sigma(), Assignment::identity(5));
        assert_eq!(st.sigma_change_feed().new_centers.len(), 5);
        assert_eq!(st.counters().sigma_inc, 1);
    }

    #[test]
    fn empty_graph_reports_infinite_opt() {
        let g = DynGraph::new(64).unwrap();
        let st = BicriteriaState::init(&g, params(1, 1.0, 1)).unwrap();
        assert!(st.opt_infinite());
        assert!(st.current_solution().s.is_clear());
        assert!(st.sigma_change_feed().is_empty());
    }

    #[test]
    fn becomes_active_once_connected() {
        let n = 64;
        let mut g = DynGraph::new(n).unwrap();
        let mut st = BicriteriaState::init(&g, params(1, 1.0, 3)).unwrap();
        for v in 1..n {
            g.insert_edge(v - 1, v, 1.0).unwrap();
            st.handle_insertion(&g, v - 1, v, 1.0).unwrap();
        }
        assert!(!st.opt_infinite());
        assert!(st.counters().builds > 1);
        assert!(st.counters().sigma_inc >= 1);
        check_bicriteria(&st, &g, None).unwrap();
    }

    #[test]
    fn cardinality_identity_after_init() {
        let mut g = DynGraph::new(120).unwrap();
        for v in 1..120 {
            g.insert_edge(v - 1, v, (v % 7 + 1) as f64).unwrap();
        }
        let st = BicriteriaState::init(&g, params(1, 2.0, 9)).unwrap();
        assert!(st.t() >= 2);
        let sizes: Vec<_> = st.levels().iter().map(|l| l.u_size()).collect();
        for i in 0..st.t() {
            assert_eq!(sizes[i + 1], sizes[i] - ceil_fraction(0.25, sizes[i]));
        }
    }

    #[test]
    fn non_improving_insertion_changes_nothing() {
        let mut g = DynGraph::new(100).unwrap();
        for v in 1..100 {
            g.insert_edge(v - 1, v, 1.0).unwrap();
        }
        let mut st = BicriteriaState::init(&g, params(1, 2.0, 5)).unwrap();
        let before = st.radii();
        g.insert_edge(0, 1, 50.0).unwrap();
        let rep = st.handle_insertion(&g, 0, 1, 50.0).unwrap();
        assert_eq!(rep.first_decrease_level, st.t());
        assert!(!rep.resampled);
        assert_eq!(st.radii(), before);
        assert!(st.sigma_change_feed().is_empty());
    }
}
