//! Spanner of a complete weighted instance under weight decreases.
//!
//! Edges are binned by weight class `⌊log_{1+ε} w⌋`. Each class keeps an
//! unweighted `(2λ−1)`-spanner of its members, so any pair is connected in
//! the union by a path at most `(2λ−1)(1+ε)` times longer than in `H`.
//! A class is built with Baswana–Sen clustering (or a hop-bounded greedy
//! in deterministic mode). Later members are added only when the class
//! spanner has no path of at most `2λ−1` hops between their endpoints, and
//! a class is rebuilt when one of its spanner edges leaves for a lighter
//! class.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::scale::PowerScale;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpannerConfig {
    /// Stretch parameter; each class is a `(2λ−1)`-spanner.
    pub lambda: usize,
    /// Class width: classes are powers of `1+ε`.
    pub eps: f64,
    /// Greedy per-class construction instead of randomized clustering.
    pub deterministic: bool,
    pub seed: u64,
}

impl Default for SpannerConfig {
    fn default() -> Self {
        Self { lambda: 2, eps: 0.25, deterministic: false, seed: 0 }
    }
}

impl SpannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda == 0 {
            return invalid("spanner λ must be ≥ 1");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("spanner ε must lie in (0,1), got {}", self.eps));
        }
        Ok(())
    }

    /// `(2λ−1)(1+ε)`.
    pub fn stretch_bound(&self) -> f64 {
        (2 * self.lambda - 1) as f64 * (1.0 + self.eps)
    }

    fn hops(&self) -> usize {
        2 * self.lambda - 1
    }
}

type Pair = (usize, usize);

fn pair(x: usize, y: usize) -> Pair {
    if x < y {
        (x, y)
    } else {
        (y, x)
    }
}

#[derive(Debug, Clone)]
struct ClassState {
    members: BTreeSet<Pair>,
    kept: BTreeSet<Pair>,
    /// Adjacency of `kept`, maintained alongside it.
    adj: Vec<Vec<usize>>,
}

impl ClassState {
    fn new(p: usize) -> Self {
        Self { members: BTreeSet::new(), kept: BTreeSet::new(), adj: vec![Vec::new(); p] }
    }

    fn set_kept(&mut self, kept: BTreeSet<Pair>) {
        self.adj.iter_mut().for_each(Vec::clear);
        for &(x, y) in &kept {
            self.adj[x].push(y);
            self.adj[y].push(x);
        }
        self.kept = kept;
    }

    fn keep(&mut self, (x, y): Pair) {
        if self.kept.insert((x, y)) {
            self.adj[x].push(y);
            self.adj[y].push(x);
        }
    }

    fn unkeep(&mut self, (x, y): Pair) -> bool {
        if !self.kept.remove(&(x, y)) {
            return false;
        }
        self.adj[x].retain(|&b| b != y);
        self.adj[y].retain(|&b| b != x);
        true
    }

    /// Is there a path of at most `hops` kept edges from `x` to `y`?
    fn within_hops(&self, x: usize, y: usize, hops: usize) -> bool {
        let mut depth = vec![usize::MAX; self.adj.len()];
        let mut queue = VecDeque::from([x]);
        depth[x] = 0;
        while let Some(a) = queue.pop_front() {
            if a == y {
                return true;
            }
            if depth[a] == hops {
                continue;
            }
            for &b in &self.adj[a] {
                if depth[b] == usize::MAX {
                    depth[b] = depth[a] + 1;
                    queue.push_back(b);
                }
            }
        }
        false
    }
}

/// Summary of one [`Spanner::decrease`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecreaseEffect {
    /// Same class: only the stored weight moved.
    InPlace,
    /// The pair moved to a lighter class (or entered `H`).
    Moved { rebuilt_old_class: bool },
}

#[derive(Debug, Clone)]
pub struct Spanner {
    cfg: SpannerConfig,
    scale: PowerScale,
    rng: ChaCha8Rng,
    p: usize,
    /// Dense `H` weights; `INFINITY` marks an absent pair.
    weight: Vec<f64>,
    classes: BTreeMap<i64, ClassState>,
    restarts: usize,
    rebuilds: usize,
    /// `(pair, class)` entries since the last restart.
    entered: HashSet<(Pair, i64)>,
    repeated_entries: usize,
}

impl Spanner {
    /// Build over `p` nodes with the given `H` edges. Every weight must be
    /// finite and positive; pairs left out are absent from `H`.
    pub fn new(p: usize, edges: &[(usize, usize, f64)], cfg: SpannerConfig) -> Result<Self> {
        cfg.validate()?;
        let mut sp = Self {
            cfg,
            scale: PowerScale::new(cfg.eps)?,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            p: 0,
            weight: Vec::new(),
            classes: BTreeMap::new(),
            restarts: 0,
            rebuilds: 0,
            entered: HashSet::new(),
            repeated_entries: 0,
        };
        sp.build(p, edges)?;
        Ok(sp)
    }

    /// Fresh spanner over a possibly larger node set.
    pub fn restart(&mut self, p: usize, edges: &[(usize, usize, f64)]) -> Result<()> {
        self.restarts += 1;
        self.build(p, edges)
    }

    fn build(&mut self, p: usize, edges: &[(usize, usize, f64)]) -> Result<()> {
        self.p = p;
        self.weight = vec![f64::INFINITY; p * p];
        self.classes.clear();
        self.entered.clear();
        for &(x, y, w) in edges {
            self.check_pair(x, y)?;
            if !(w > 0.0 && w.is_finite()) {
                return invalid(format!("spanner edge ({x},{y}) has weight {w}"));
            }
            self.set_weight(x, y, w);
            let c = self.class_of(w);
            self.enter(pair(x, y), c);
        }
        let ids: Vec<i64> = self.classes.keys().copied().collect();
        for c in ids {
            self.build_class(c);
        }
        Ok(())
    }

    fn check_pair(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.p || y >= self.p || x == y {
            return invalid(format!("bad spanner pair ({x},{y}) for {} nodes", self.p));
        }
        Ok(())
    }

    fn set_weight(&mut self, x: usize, y: usize, w: f64) {
        self.weight[x * self.p + y] = w;
        self.weight[y * self.p + x] = w;
    }

    fn class_of(&self, w: f64) -> i64 {
        self.scale.floor_exp(w)
    }

    fn enter(&mut self, e: Pair, c: i64) {
        if !self.entered.insert((e, c)) {
            self.repeated_entries += 1;
        }
        let p = self.p;
        self.classes.entry(c).or_insert_with(|| ClassState::new(p)).members.insert(e);
    }

    fn build_class(&mut self, c: i64) {
        let p = self.p;
        let lambda = self.cfg.lambda;
        let deterministic = self.cfg.deterministic;
        let class = self.classes.get_mut(&c).expect("class exists");
        let kept = if lambda == 1 || p <= 2 {
            class.members.clone()
        } else if deterministic {
            greedy_spanner(p, &class.members, 2 * lambda - 1)
        } else {
            baswana_sen(p, &class.members, lambda, &mut self.rng)
        };
        class.set_kept(kept);
    }

    /// Lower the `H` weight of `(x, y)` to `w` (an absent pair enters `H`).
    pub fn decrease(&mut self, x: usize, y: usize, w: f64) -> Result<DecreaseEffect> {
        let mut dirty = BTreeSet::new();
        let effect = self.apply_decrease(x, y, w, &mut dirty)?;
        self.rebuild(dirty);
        Ok(effect)
    }

    /// Apply several decreases, rebuilding each affected class once at the
    /// end. On error the decreases before the bad one stay applied.
    pub fn decrease_many(&mut self, updates: &[(usize, usize, f64)]) -> Result<()> {
        let mut dirty = BTreeSet::new();
        let res = updates.iter().try_for_each(|&(x, y, w)| self.apply_decrease(x, y, w, &mut dirty).map(|_| ()));
        self.rebuild(dirty);
        res
    }

    fn rebuild(&mut self, dirty: BTreeSet<i64>) {
        for c in dirty {
            if self.classes.contains_key(&c) {
                self.rebuilds += 1;
                self.build_class(c);
            }
        }
    }

    /// A class losing a kept edge goes into `dirty` instead of being
    /// rebuilt on the spot.
    fn apply_decrease(&mut self, x: usize, y: usize, w: f64, dirty: &mut BTreeSet<i64>) -> Result<DecreaseEffect> {
        self.check_pair(x, y)?;
        let old = self.weight(x, y);
        if !(w > 0.0 && w.is_finite()) || w >= old {
            return invalid(format!("weight of ({x},{y}) must strictly decrease from {old}, got {w}"));
        }
        let e = pair(x, y);
        self.set_weight(x, y, w);
        let new_class = self.class_of(w);
        let mut rebuilt = false;
        if old.is_finite() {
            let old_class = self.class_of(old);
            if old_class == new_class {
                return Ok(DecreaseEffect::InPlace);
            }
            let class = self.classes.get_mut(&old_class).expect("member class exists");
            class.members.remove(&e);
            if class.unkeep(e) && !class.members.is_empty() {
                dirty.insert(old_class);
                rebuilt = true;
            }
            if class.members.is_empty() {
                self.classes.remove(&old_class);
                dirty.remove(&old_class);
            }
        }
        self.enter(e, new_class);
        let hops = self.cfg.hops();
        let p = self.p;
        let class = self.classes.get_mut(&new_class).expect("class just entered");
        if self.cfg.lambda == 1 || p <= 2 || !class.within_hops(x, y, hops) {
            class.keep(e);
        }
        Ok(DecreaseEffect::Moved { rebuilt_old_class: rebuilt })
    }

    pub fn config(&self) -> &SpannerConfig {
        &self.cfg
    }

    pub fn node_count(&self) -> usize {
        self.p
    }

    /// Current `H` weight of `(x, y)`; infinite when absent.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        self.weight[x * self.p + y]
    }

    /// Edges of `H̃` as `(x, y, w)` with `x < y`, ascending.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<_> = self
            .classes
            .values()
            .flat_map(|c| c.kept.iter().map(|&(x, y)| (x, y, self.weight(x, y))))
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    pub fn num_edges(&self) -> usize {
        self.classes.values().map(|c| c.kept.len()).sum()
    }

    /// Number of pairs present in `H`.
    pub fn h_edges(&self) -> usize {
        self.classes.values().map(|c| c.members.len()).sum()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    /// Class rebuilds forced by decreases.
    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    /// Times a pair re-entered a class it had already been in since the
    /// last restart. Decrease-only weights keep this at zero.
    pub fn repeated_entries(&self) -> usize {
        self.repeated_entries
    }

    /// `c` in `|H̃| = c·|P|^{1+1/λ}·log₂(nW)·log₂|P|`, logs floored at 1.
    pub fn size_constant(&self, n_w: f64) -> f64 {
        let p = self.p.max(2) as f64;
        let denom = p.powf(1.0 + 1.0 / self.cfg.lambda as f64)
            * n_w.log2().max(1.0)
            * p.log2().max(1.0);
        self.num_edges() as f64 / denom
    }
}

/// Add each member (in pair order) unless `hops` kept edges already join it.
fn greedy_spanner(p: usize, members: &BTreeSet<Pair>, hops: usize) -> BTreeSet<Pair> {
    let mut class = ClassState::new(p);
    for &e in members {
        if !class.within_hops(e.0, e.1, hops) {
            class.keep(e);
        }
    }
    class.kept
}

/// Baswana–Sen clustering for an unweighted `(2λ−1)`-spanner.
fn baswana_sen(p: usize, members: &BTreeSet<Pair>, lambda: usize, rng: &mut ChaCha8Rng) -> BTreeSet<Pair> {
    let edges: Vec<Pair> = members.iter().copied().collect();
    let mut alive = vec![true; edges.len()];
    let mut degree = vec![0; p];
    for &(x, y) in &edges {
        degree[x] += 1;
        degree[y] += 1;
    }
    // `(neighbor, edge id)`, ascending by neighbor since `members` is sorted.
    let mut adj: Vec<Vec<(usize, usize)>> = degree.iter().map(|&d| Vec::with_capacity(d)).collect();
    for (id, &(x, y)) in edges.iter().enumerate() {
        adj[x].push((y, id));
        adj[y].push((x, id));
    }
    // Cluster center per vertex; `None` once a vertex has dropped out.
    let mut cluster: Vec<Option<usize>> = (0..p).map(|v| (!adj[v].is_empty()).then_some(v)).collect();
    let prob = (p as f64).powf(-1.0 / lambda as f64);
    let mut kept = Vec::new();
    let mut seen = vec![usize::MAX; p];

    for _ in 1..lambda {
        let mut is_center = vec![false; p];
        for &c in cluster.iter().flatten() {
            is_center[c] = true;
        }
        let sampled: Vec<bool> = is_center.iter().map(|&c| c && rng.random_bool(prob)).collect();
        let mut next: Vec<Option<usize>> = cluster.iter().map(|c| c.filter(|&c| sampled[c])).collect();
        seen.fill(usize::MAX);
        for v in 0..p {
            let Some(c) = cluster[v] else { continue };
            if sampled[c] {
                continue;
            }
            let join = adj[v]
                .iter()
                .find(|&&(y, id)| alive[id] && cluster[y].is_some_and(|cy| sampled[cy]))
                .map(|&(y, _)| y);
            match join {
                Some(y) => {
                    let target = cluster[y].expect("sampled neighbor is clustered");
                    kept.push(pair(v, y));
                    next[v] = Some(target);
                    for &(b, id) in &adj[v] {
                        if cluster[b] == Some(target) {
                            alive[id] = false;
                        }
                    }
                }
                None => {
                    // One edge per neighboring cluster, then v leaves the game.
                    for &(b, id) in &adj[v] {
                        if !alive[id] {
                            continue;
                        }
                        let cb = cluster[b].expect("live edge ends are clustered");
                        if seen[cb] != v {
                            seen[cb] = v;
                            kept.push(pair(v, b));
                        }
                        alive[id] = false;
                    }
                }
            }
        }
        cluster = next;
        for (id, &(x, y)) in edges.iter().enumerate() {
            if alive[id] && cluster[x].is_some() && cluster[x] == cluster[y] {
                alive[id] = false;
            }
        }
    }

    // Last phase: one edge from every vertex to each neighboring cluster.
    seen.fill(usize::MAX);
    for v in 0..p {
        for &(b, id) in &adj[v] {
            if !alive[id] {
                continue;
            }
            let cb = cluster[b].expect("live edge ends are clustered");
            if seen[cb] != v {
                seen[cb] = v;
                kept.push(pair(v, b));
            }
        }
    }
    kept.sort_unstable();
    kept.dedup();
    kept.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(p: usize, seed: u64) -> Vec<(usize, usize, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> =
            (0..p).map(|_| (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))).collect();
        let mut out = Vec::new();
        for x in 0..p {
            for y in x + 1..p {
                let (a, b) = (pts[x], pts[y]);
                out.push((x, y, 1.0 + ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()));
            }
        }
        out
    }

    fn apsp(p: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
        let mut d = vec![vec![f64::INFINITY; p]; p];
        for (x, row) in d.iter_mut().enumerate() {
            row[x] = 0.0;
        }
        for &(x, y, w) in edges {
            d[x][y] = d[x][y].min(w);
            d[y][x] = d[y][x].min(w);
        }
        for m in 0..p {
            for a in 0..p {
                for b in 0..p {
                    let via = d[a][m] + d[m][b];
                    if via < d[a][b] {
                        d[a][b] = via;
                    }
                }
            }
        }
        d
    }

    fn full_edges(sp: &Spanner) -> Vec<(usize, usize, f64)> {
        let p = sp.node_count();
        let mut out = Vec::new();
        for x in 0..p {
            for y in x + 1..p {
                if sp.weight(x, y).is_finite() {
                    out.push((x, y, sp.weight(x, y)));
                }
            }
        }
        out
    }

    fn assert_stretch(sp: &Spanner) {
        let p = sp.node_count();
        let dh = apsp(p, &full_edges(sp));
        let dt = apsp(p, &sp.edges());
        let bound = sp.config().stretch_bound();
        for x in 0..p {
            for y in 0..p {
                assert!(dt[x][y] >= dh[x][y] - 1e-9);
                if dh[x][y].is_finite() {
                    assert!(dt[x][y] <= bound * dh[x][y] + 1e-9, "pair ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn tiny_and_stretch_one_keep_everything() {
        let e = vec![(0, 1, 3.0)];
        let sp = Spanner::new(2, &e, SpannerConfig::default()).unwrap();
        assert_eq!(sp.edges(), e);
        let e = complete(12, 1);
        let cfg = SpannerConfig { lambda: 1, ..Default::default() };
        let sp = Spanner::new(12, &e, cfg).unwrap();
        assert_eq!(sp.num_edges(), e.len());
    }

    #[test]
    fn random_metric_stretch() {
        for seed in 0..4 {
            for deterministic in [false, true] {
                let cfg = SpannerConfig { seed, deterministic, ..Default::default() };
                let sp = Spanner::new(32, &complete(32, seed), cfg).unwrap();
                assert_stretch(&sp);
                assert!(sp.num_edges() < 32 * 31 / 2);
            }
        }
    }

    #[test]
    fn larger_lambda_stretch() {
        let cfg = SpannerConfig { lambda: 3, seed: 7, ..Default::default() };
        let sp = Spanner::new(40, &complete(40, 3), cfg).unwrap();
        assert_stretch(&sp);
    }

    #[test]
    fn decreases_keep_stretch() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = SpannerConfig { seed: 2, ..Default::default() };
        let mut sp = Spanner::new(16, &complete(16, 5), cfg).unwrap();
        for _ in 0..60 {
            let x = rng.random_range(0..16);
            let y = (x + rng.random_range(1..16)) % 16;
            let w = sp.weight(x, y) * rng.random_range(0.3..0.99);
            sp.decrease(x, y, w.max(0.5)).ok();
            assert_stretch(&sp);
        }
        assert_eq!(sp.repeated_entries(), 0);
    }

    #[test]
    fn decrease_effects() {
        let cfg = SpannerConfig { eps: 0.5, deterministic: true, ..Default::default() };
        let mut sp = Spanner::new(3, &[(0, 1, 2.2), (1, 2, 1.0)], cfg).unwrap();
        // 2.2 and 2.0 share class 1 under base 1.5.
        assert_eq!(sp.decrease(0, 1, 2.0).unwrap(), DecreaseEffect::InPlace);
        assert_eq!(sp.weight(1, 0), 2.0);
        assert!(sp.edges().contains(&(0, 1, 2.0)));
        assert!(matches!(sp.decrease(0, 1, 1.2).unwrap(), DecreaseEffect::Moved { .. }));
        assert!(matches!(sp.decrease(0, 2, 1.1).unwrap(), DecreaseEffect::Moved { .. }));
        assert!(sp.decrease(0, 2, 1.1).is_err());
        assert!(sp.decrease(0, 2, 5.0).is_err());
        assert!(sp.decrease(0, 0, 1.0).is_err());
        assert_stretch(&sp);
    }

    #[test]
    fn restart_grows_node_set() {
        let mut sp = Spanner::new(10, &complete(10, 1), SpannerConfig::default()).unwrap();
        sp.restart(11, &complete(11, 1)).unwrap();
        assert_eq!((sp.node_count(), sp.restarts()), (11, 1));
        assert_stretch(&sp);
        sp.restart(11, &complete(11, 1)).unwrap();
        assert_eq!(sp.restarts(), 2);
        assert_stretch(&sp);
    }

    #[test]
    fn absent_pairs_stay_absent() {
        let sp = Spanner::new(4, &[(0, 1, 1.0), (2, 3, 1.0)], SpannerConfig::default()).unwrap();
        assert!(sp.weight(0, 2).is_infinite());
        assert_eq!(sp.num_edges(), 2);
        assert_stretch(&sp);
    }
}
