//! Runtime invariant checks shared by the tests and the CLI verify mode.
//!
//! Every check returns `Error::Invariant` describing the first violation.

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{apsp, dijkstra_bounded, multi_source_dijkstra, DynGraph, VertexId};
use crate::incremental::BicriteriaState;
use crate::reduction::ReductionState;
use crate::scale::{ceil_fraction, Radius};
use crate::spanner::Spanner;
use crate::sssp::DistanceOracle;

/// Relative slack for float comparisons against exact distances.
const TOL: f64 = 1e-9;

fn fail<T>(msg: String) -> Result<T> {
    Err(Error::Invariant(msg))
}

/// What the bicriteria checks compare against on the next update.
#[derive(Debug, Clone, PartialEq)]
pub struct BicriteriaSnapshot {
    pub radii: Vec<Radius>,
    pub u_sizes: Vec<usize>,
    pub s: FixedBitSet,
    pub opt_infinite: bool,
}

impl BicriteriaSnapshot {
    pub fn of(st: &BicriteriaState) -> Self {
        Self {
            radii: st.radii(),
            u_sizes: st.levels().iter().map(|l| l.u_size()).collect(),
            s: st.current_solution().s.clone(),
            opt_infinite: st.opt_infinite(),
        }
    }
}

/// Radii, cardinality, level-bound and set-law checks. With `prev`, also
/// checks that radii did not grow, execution-set sizes did not move and
/// `S` only grew.
pub fn check_bicriteria(st: &BicriteriaState, g: &DynGraph, prev: Option<&BicriteriaSnapshot>) -> Result<()> {
    if st.opt_infinite() {
        if !st.current_solution().s.is_clear() {
            return fail("S must be empty while the optimum is infinite".into());
        }
        return Ok(());
    }
    check_radii(st, prev)?;
    check_cardinality(st, prev)?;
    check_level_bound(st, g)?;
    check_sets(st, prev)?;
    Ok(())
}

pub fn check_radii(st: &BicriteriaState, prev: Option<&BicriteriaSnapshot>) -> Result<()> {
    let radii = st.radii();
    let t = st.t();
    for (i, r) in radii.iter().enumerate() {
        let ok = match r {
            Radius::Pow(_) => true,
            Radius::Zero => i == t && t == 0,
            Radius::Infinite => false,
        };
        if !ok {
            return fail(format!("ν_{i} = {r:?} is not a power of (1+ε)"));
        }
    }
    for i in 1..radii.len() {
        if radii[i] < radii[i - 1] {
            return fail(format!("ν_{} = {:?} > ν_{i} = {:?}", i - 1, radii[i - 1], radii[i]));
        }
    }
    if t > 0 && radii[t] != radii[t - 1] {
        return fail(format!("ν_t = {:?} differs from ν_(t−1) = {:?}", radii[t], radii[t - 1]));
    }
    if let Some(p) = prev.filter(|p| !p.opt_infinite) {
        if p.radii.len() != radii.len() {
            return fail(format!("t moved from {} to {t}", p.radii.len() - 1));
        }
        for i in 0..radii.len() {
            if radii[i] > p.radii[i] {
                return fail(format!("ν_{i} grew from {:?} to {:?}", p.radii[i], radii[i]));
            }
        }
    }
    Ok(())
}

pub fn check_cardinality(st: &BicriteriaState, prev: Option<&BicriteriaSnapshot>) -> Result<()> {
    let sizes: Vec<usize> = st.levels().iter().map(|l| l.u_size()).collect();
    let beta = st.params().beta;
    if sizes.first() != Some(&st.n()) {
        return fail(format!("|U_0| = {:?}, expected n = {}", sizes.first(), st.n()));
    }
    for i in 1..sizes.len() {
        let want = sizes[i - 1] - ceil_fraction(beta, sizes[i - 1]);
        if sizes[i] != want {
            return fail(format!("|U_{i}| = {}, expected {want}", sizes[i]));
        }
    }
    if let Some(p) = prev.filter(|p| !p.opt_infinite) {
        if p.u_sizes != sizes {
            return fail(format!("execution sizes moved from {:?} to {sizes:?}", p.u_sizes));
        }
    }
    Ok(())
}

pub fn check_level_bound(st: &BicriteriaState, g: &DynGraph) -> Result<()> {
    let bound = st.params().level_bound(g.n());
    if st.t() as f64 > bound {
        return fail(format!("t = {} exceeds the level bound {bound}", st.t()));
    }
    Ok(())
}

pub fn check_sets(st: &BicriteriaState, prev: Option<&BicriteriaSnapshot>) -> Result<()> {
    let levels = st.levels();
    let t = st.t();
    let beta = st.params().beta;
    let mut s_union = FixedBitSet::with_capacity(st.n());
    for (i, l) in levels.iter().enumerate() {
        s_union.union_with(&l.s);
        if !l.b.is_subset(&l.u) {
            return fail(format!("B_{i} ⊄ U_{i}"));
        }
        if !l.z.is_subset(&l.u) {
            return fail(format!("Z_{i} ⊄ U_{i}"));
        }
        if !l.b.is_disjoint(&l.z) {
            return fail(format!("B_{i} ∩ Z_{i} ≠ ∅"));
        }
        if i < t {
            let mut gone = l.u.clone();
            gone.difference_with(&levels[i + 1].u);
            let mut covered = l.b.clone();
            covered.union_with(&l.z);
            if gone != covered {
                return fail(format!("U_{i} \\ U_{} differs from B_{i} ∪ Z_{i}", i + 1));
            }
            let want = ceil_fraction(beta, l.u_size());
            if covered.count_ones(..) != want {
                return fail(format!("|B_{i} ∪ Z_{i}| = {}, expected {want}", covered.count_ones(..)));
            }
        } else if l.b != l.u || !l.u.is_subset(&l.s) {
            return fail("last level must have B_t = U_t ⊆ S_t".into());
        } else if !l.z.is_clear() {
            return fail("Z_t must be empty".into());
        }
    }
    if !st.pending_leaks().is_clear() {
        return fail("temporary leaking set is not empty between updates".into());
    }
    let s_all = st.current_solution().s;
    if *s_all != s_union {
        return fail("S differs from the union of the S_i".into());
    }
    let sigma = st.sigma();
    for v in 0..st.n() {
        if !s_all.contains(sigma.get(v)) {
            return fail(format!("σ({v}) = {} is outside S", sigma.get(v)));
        }
    }
    for v in levels[t].u.ones() {
        if sigma.get(v) != v {
            return fail(format!("σ({v}) = {} on the last level", sigma.get(v)));
        }
    }
    if let Some(p) = prev.filter(|p| !p.opt_infinite) {
        if !p.s.is_subset(s_all) {
            return fail("S lost a vertex".into());
        }
    }
    Ok(())
}

/// `dist_G(v, σ(v)) ≤ ν_i` for every `v ∈ U_i \ U_{i+1}`, `i < t`, with exact
/// Dijkstra from each distinct center.
pub fn check_assignment_cost(st: &BicriteriaState, g: &DynGraph) -> Result<()> {
    if st.opt_infinite() {
        return Ok(());
    }
    let levels = st.levels();
    let t = st.t();
    let mut bound = vec![f64::INFINITY; st.n()];
    for i in 0..t {
        let r = st.radius_value(i);
        let mut gone = levels[i].u.clone();
        gone.difference_with(&levels[i + 1].u);
        for v in gone.ones() {
            bound[v] = r;
        }
    }
    let mut by_center: Vec<Vec<VertexId>> = vec![Vec::new(); st.n()];
    for v in 0..st.n() {
        if bound[v].is_finite() {
            by_center[st.sigma().get(v)].push(v);
        }
    }
    let reach = (0..t).map(|i| st.radius_value(i)).fold(0.0, f64::max);
    for (c, members) in by_center.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let d = dijkstra_bounded(g, &[c], reach).dist;
        for &v in members {
            if d[v] > bound[v] * (1.0 + TOL) {
                return fail(format!("dist({v}, σ({v}) = {c}) = {} exceeds its radius {}", d[v], bound[v]));
            }
        }
    }
    Ok(())
}

/// `dist ≤ δ ≤ (1+ε)·dist` for every vertex, against exact Dijkstra. With
/// `nearest`, also checks `dist(v, nearest(v)) ≤ δ(v)` (one Dijkstra per
/// distinct nearest source).
pub fn check_oracle(o: &DistanceOracle, g: &DynGraph, nearest: bool) -> Result<()> {
    let exact = multi_source_dijkstra(g, o.sources()).dist;
    let slack = 1.0 + o.eps();
    let mut by_root: Vec<Vec<VertexId>> = vec![Vec::new(); if nearest { g.n() } else { 0 }];
    for (v, &d) in exact.iter().enumerate() {
        let e = o.estimate(v);
        if d.is_infinite() {
            if e.is_finite() {
                return fail(format!("vertex {v} is unreachable but δ = {e}"));
            }
            continue;
        }
        if e < d * (1.0 - TOL) || e > slack * d * (1.0 + TOL) {
            return fail(format!("δ({v}) = {e} outside [{d}, {}]", slack * d));
        }
        if nearest {
            match o.nearest(v) {
                Some(s) => by_root[s].push(v),
                None => return fail(format!("reachable vertex {v} has no nearest source")),
            }
        }
    }
    for (s, members) in by_root.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let reach = members.iter().map(|&v| o.estimate(v)).fold(0.0, f64::max);
        let ds = dijkstra_bounded(g, &[s], reach).dist;
        for &v in members {
            if ds[v] > o.estimate(v) * (1.0 + TOL) {
                return fail(format!("nearest({v}) = {s} is at {} > δ = {}", ds[v], o.estimate(v)));
            }
        }
    }
    Ok(())
}

/// Sandwich check on every level oracle.
pub fn check_level_oracles(st: &BicriteriaState, g: &DynGraph, nearest: bool) -> Result<()> {
    for (i, l) in st.levels().iter().enumerate() {
        if let Some(o) = &l.oracle {
            check_oracle(o, g, nearest).map_err(|e| Error::Invariant(format!("level {i}: {e}")))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpannerReport {
    pub max_stretch: f64,
    pub size_constant: f64,
    pub edges: usize,
}

fn floyd(p: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
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
            let dam = d[a][m];
            if dam.is_infinite() {
                continue;
            }
            for b in 0..p {
                let via = dam + d[m][b];
                if via < d[a][b] {
                    d[a][b] = via;
                }
            }
        }
    }
    d
}

/// Subgraph property and all-pairs stretch of `H̃` against `H`.
/// `n_w` feeds the size constant.
pub fn check_spanner(sp: &Spanner, n_w: f64) -> Result<SpannerReport> {
    let p = sp.node_count();
    let tilde = sp.edges();
    for &(x, y, w) in &tilde {
        if w != sp.weight(x, y) {
            return fail(format!("H̃ edge ({x},{y}) has weight {w}, H has {}", sp.weight(x, y)));
        }
    }
    let mut full = Vec::new();
    for x in 0..p {
        for y in x + 1..p {
            if sp.weight(x, y).is_finite() {
                full.push((x, y, sp.weight(x, y)));
            }
        }
    }
    let dh = floyd(p, &full);
    let dt = floyd(p, &tilde);
    let bound = sp.config().stretch_bound();
    let mut max_stretch: f64 = 1.0;
    for x in 0..p {
        for y in x + 1..p {
            if dh[x][y].is_infinite() {
                if dt[x][y].is_finite() {
                    return fail(format!("H̃ joins ({x},{y}) that H does not"));
                }
                continue;
            }
            let s = dt[x][y] / dh[x][y];
            if s > bound * (1.0 + TOL) {
                return fail(format!("stretch {s} on ({x},{y}) exceeds {bound}"));
            }
            max_stretch = max_stretch.max(s);
        }
    }
    Ok(SpannerReport { max_stretch, size_constant: sp.size_constant(n_w), edges: tilde.len() })
}

/// Weights of the reduced instance, for monotonicity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionSnapshot {
    pub exponents: Vec<Vec<Option<u32>>>,
}

impl ReductionSnapshot {
    pub fn of(r: &ReductionState) -> Self {
        Self { exponents: r.h_exponents().to_vec() }
    }
}

/// Conservation, `wt = |σ⁻¹|`, symmetry, monotone rounded weights and, when
/// `exact` is set, the distance sandwich between centers.
pub fn check_reduction(
    r: &ReductionState,
    st: &BicriteriaState,
    g: &DynGraph,
    prev: Option<&ReductionSnapshot>,
    exact: bool,
) -> Result<()> {
    let sol = r.solution();
    if sol.centers.len() > r.config().k {
        return fail(format!("|C| = {} exceeds k = {}", sol.centers.len(), r.config().k));
    }
    if st.opt_infinite() {
        return Ok(());
    }
    if r.total_weight() != st.n() as u64 {
        return fail(format!("Σ wt = {} but n = {}", r.total_weight(), st.n()));
    }
    for s in st.sigma().image() {
        if !r.is_center(s) {
            return fail(format!("image vertex {s} is not a reduction center"));
        }
    }
    for &s in r.centers() {
        if r.weight_of(s) != st.sigma().count(s) as u64 {
            return fail(format!("wt({s}) = {} but |σ⁻¹({s})| = {}", r.weight_of(s), st.sigma().count(s)));
        }
    }
    let w = r.h_exponents();
    let p = r.centers().len();
    for i in 0..p {
        for j in 0..p {
            if i != j && w[i][j] != w[j][i] {
                return fail(format!("w_H not symmetric on local pair ({i},{j})"));
            }
        }
    }
    if let Some(prev) = prev {
        for (i, row) in prev.exponents.iter().enumerate() {
            for (j, &old) in row.iter().enumerate() {
                let grew = match (old, w[i][j]) {
                    (Some(a), Some(b)) => b > a,
                    (Some(_), None) => true,
                    _ => false,
                };
                if grew {
                    return fail(format!("w_H grew on local pair ({i},{j})"));
                }
            }
        }
    }
    if exact {
        let eps = r.config().eps;
        let rho = r.spanner().map_or(1.0, |s| s.config().stretch_bound());
        let dg = apsp(g);
        let inst = r.sparse_instance();
        let dt = floyd(p, &inst.edges);
        let c = r.centers();
        for i in 0..p {
            for j in i + 1..p {
                let (a, b) = (dg[c[i]][c[j]], dt[i][j]);
                if b < a * (1.0 - TOL) {
                    return fail(format!("dist_H̃({},{}) = {b} < dist_G = {a}", c[i], c[j]));
                }
                if a.is_finite() && b > (1.0 + eps).powi(2) * rho * a * (1.0 + TOL) {
                    return fail(format!("dist_H̃({},{}) = {b} too far above dist_G = {a}", c[i], c[j]));
                }
            }
        }
    }
    Ok(())
}
