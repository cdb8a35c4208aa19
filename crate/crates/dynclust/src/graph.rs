//! Insert-only weighted undirected multigraph and exact shortest paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::error::{invalid, Result};

/// Dense vertex index in `0..n`.
pub type VertexId = usize;

/// Sentinel for "no root" in root arrays.
pub const NO_VERTEX: VertexId = usize::MAX;

/// Exponent used for the default weight cap `max(n, 10)^4`.
pub const DEFAULT_CAP_EXPONENT: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: f64,
}

/// Handle returned by [`DynGraph::insert_edge`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateToken {
    /// 1-based insertion counter after this edge.
    pub index: usize,
    pub edge: Edge,
}

#[derive(Debug, Clone)]
pub struct DynGraph {
    adj: Vec<Vec<(VertexId, f64)>>,
    edges: Vec<Edge>,
    max_weight: f64,
    weight_cap: f64,
}

impl DynGraph {
    /// Graph on `n` isolated vertices with the default weight cap.
    pub fn new(n: usize) -> Result<Self> {
        let cap = (n.max(10) as f64).powi(DEFAULT_CAP_EXPONENT);
        Self::with_weight_cap(n, cap)
    }

    pub fn with_weight_cap(n: usize, weight_cap: f64) -> Result<Self> {
        if n == 0 {
            return invalid("graph needs at least one vertex");
        }
        if !(weight_cap >= 1.0) {
            return invalid(format!("weight cap must be at least 1, got {weight_cap}"));
        }
        Ok(Self { adj: vec![Vec::new(); n], edges: Vec::new(), max_weight: 1.0, weight_cap })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Number of inserted edges (parallel edges counted separately).
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Running maximum edge weight `W` (1 on an empty graph).
    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }

    pub fn weight_cap(&self) -> f64 {
        self.weight_cap
    }

    /// Upper bound on any finite distance, `n·W`.
    pub fn distance_bound(&self) -> f64 {
        self.n() as f64 * self.max_weight
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v >= self.n() {
            return invalid(format!("vertex {v} out of range for n = {}", self.n()));
        }
        Ok(())
    }

    /// Validate an edge without inserting it.
    pub fn check_edge(&self, u: VertexId, v: VertexId, w: f64) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return invalid(format!("self-loop on vertex {u}"));
        }
        if !(w >= 1.0) || !w.is_finite() {
            return invalid(format!("edge weight must be a finite real ≥ 1, got {w}"));
        }
        if w > self.weight_cap {
            return invalid(format!("edge weight {w} exceeds the cap {}", self.weight_cap));
        }
        Ok(())
    }

    pub fn insert_edge(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<UpdateToken> {
        self.check_edge(u, v, w)?;
        self.adj[u].push((v, w));
        self.adj[v].push((u, w));
        let edge = Edge { u, v, w };
        self.edges.push(edge);
        if w > self.max_weight {
            self.max_weight = w;
        }
        Ok(UpdateToken { index: self.edges.len(), edge })
    }
}

/// Exact multi-source shortest paths.
///
/// `dist[v]` is the distance to the nearest source and `root[v]` the source
/// attaining it, ties broken towards the lowest source id.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pub root: Vec<VertexId>,
}

/// Dijkstra from a zero-weight super-source attached to `sources`.
pub fn multi_source_dijkstra(g: &DynGraph, sources: &[VertexId]) -> ShortestPaths {
    dijkstra_bounded(g, sources, f64::INFINITY)
}

/// Same as [`multi_source_dijkstra`] but stops settling past `bound`.
/// Vertices farther than `bound` may keep a tentative or infinite label.
pub fn dijkstra_bounded(g: &DynGraph, sources: &[VertexId], bound: f64) -> ShortestPaths {
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut root = vec![NO_VERTEX; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if dist[s] > 0.0 || s < root[s] {
            dist[s] = 0.0;
            root[s] = s;
            heap.push(Reverse((OrderedFloat(0.0), s, s)));
        }
    }
    while let Some(Reverse((OrderedFloat(d), r, x))) = heap.pop() {
        if d > dist[x] || (d == dist[x] && r != root[x]) {
            continue;
        }
        if d > bound {
            break;
        }
        for &(y, w) in g.neighbors(x) {
            let nd = d + w;
            if nd < dist[y] || (nd == dist[y] && r < root[y]) {
                dist[y] = nd;
                root[y] = r;
                heap.push(Reverse((OrderedFloat(nd), r, y)));
            }
        }
    }
    ShortestPaths { dist, root }
}

/// Exact `dist(v, sources)`; `f64::INFINITY` when unreachable.
pub fn exact_distance(g: &DynGraph, sources: &[VertexId], v: VertexId) -> Result<f64> {
    if sources.is_empty() {
        return invalid("exact_distance needs a nonempty source set");
    }
    for &s in sources {
        g.check_vertex(s)?;
    }
    g.check_vertex(v)?;
    Ok(multi_source_dijkstra(g, sources).dist[v])
}

/// All-pairs distances by one Dijkstra per vertex.
pub fn apsp(g: &DynGraph) -> Vec<Vec<f64>> {
    (0..g.n()).map(|s| multi_source_dijkstra(g, &[s]).dist).collect()
}

/// `Σ_v wt(v)·dist(v, centers)^z` in `g` (unit weights when `wt` is
/// `None`). Infinite when some weighted vertex cannot reach a center, or
/// when `centers` is empty.
pub fn clustering_cost(g: &DynGraph, centers: &[VertexId], z: f64, wt: Option<&[u64]>) -> f64 {
    if centers.is_empty() {
        return f64::INFINITY;
    }
    let dist = multi_source_dijkstra(g, centers).dist;
    let mut total = 0.0;
    for (v, d) in dist.into_iter().enumerate() {
        let w = wt.map_or(1, |w| w[v]);
        if w == 0 {
            continue;
        }
        if d.is_infinite() {
            return f64::INFINITY;
        }
        total += w as f64 * d.powf(z);
    }
    total
}

/// Connected-component label per vertex, labels ordered by smallest member.
pub fn components(g: &DynGraph) -> Vec<usize> {
    let n = g.n();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        stack.push(s);
        while let Some(x) = stack.pop() {
            for &(y, _) in g.neighbors(x) {
                if label[y] == usize::MAX {
                    label[y] = next;
                    stack.push(y);
                }
            }
        }
        next += 1;
    }
    label
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_graph_examples() {
        let g = DynGraph::new(1).unwrap();
        assert_eq!((g.n(), g.m()), (1, 0));
        let g = DynGraph::new(5).unwrap();
        for u in 0..5 {
            for v in 0..5 {
                let d = exact_distance(&g, &[u], v).unwrap();
                assert_eq!(d, if u == v { 0.0 } else { f64::INFINITY });
            }
        }
        assert!(DynGraph::new(0).is_err());
    }

    #[test]
    fn insert_examples() {
        let mut g = DynGraph::new(2).unwrap();
        g.insert_edge(0, 1, 3.0).unwrap();
        assert_eq!(exact_distance(&g, &[0], 1).unwrap(), 3.0);

        let mut g = DynGraph::new(3).unwrap();
        g.insert_edge(0, 1, 2.0).unwrap();
        g.insert_edge(1, 2, 2.0).unwrap();
        assert_eq!(exact_distance(&g, &[0], 2).unwrap(), 4.0);
        g.insert_edge(0, 2, 1.0).unwrap();
        assert_eq!(exact_distance(&g, &[0], 2).unwrap(), 1.0);

        assert!(g.insert_edge(0, 0, 1.0).is_err());
        assert!(g.insert_edge(0, 3, 1.0).is_err());
        assert!(g.insert_edge(0, 1, 0.5).is_err());
        assert!(g.insert_edge(0, 1, f64::NAN).is_err());
        assert!(g.insert_edge(0, 1, 1e12).is_err());
        assert_eq!(g.m(), 3);
    }

    #[test]
    fn distance_examples() {
        let mut g = DynGraph::new(4).unwrap();
        g.insert_edge(0, 1, 1.0).unwrap();
        g.insert_edge(1, 2, 2.0).unwrap();
        assert_eq!(exact_distance(&g, &[0], 2).unwrap(), 3.0);
        assert_eq!(exact_distance(&g, &[0, 2], 2).unwrap(), 0.0);
        assert_eq!(exact_distance(&g, &[0], 3).unwrap(), f64::INFINITY);
        assert!(exact_distance(&g, &[], 1).is_err());
    }

    #[test]
    fn parallel_edges_use_minimum_and_track_max() {
        let mut g = DynGraph::new(2).unwrap();
        g.insert_edge(0, 1, 9.0).unwrap();
        g.insert_edge(1, 0, 4.0).unwrap();
        assert_eq!(exact_distance(&g, &[1], 0).unwrap(), 4.0);
        assert_eq!(g.max_weight(), 9.0);
        assert_eq!(g.degree(0), 2);
    }

    #[test]
    fn root_tie_breaks_to_lowest_source() {
        let mut g = DynGraph::new(3).unwrap();
        g.insert_edge(0, 1, 1.0).unwrap();
        g.insert_edge(2, 1, 1.0).unwrap();
        let sp = multi_source_dijkstra(&g, &[2, 0]);
        assert_eq!(sp.root[1], 0);
        assert_eq!(sp.dist[1], 1.0);
    }

    #[test]
    fn clustering_cost_examples() {
        let mut g = DynGraph::new(3).unwrap();
        g.insert_edge(0, 1, 1.0).unwrap();
        g.insert_edge(1, 2, 2.0).unwrap();
        assert_eq!(clustering_cost(&g, &[1], 1.0, None), 3.0);
        assert_eq!(clustering_cost(&g, &[1], 2.0, None), 5.0);
        assert_eq!(clustering_cost(&g, &[0], 1.0, Some(&[5, 0, 2])), 6.0);
        assert_eq!(clustering_cost(&g, &[], 1.0, None), f64::INFINITY);
        let h = DynGraph::new(2).unwrap();
        assert_eq!(clustering_cost(&h, &[0], 1.0, None), f64::INFINITY);
        assert_eq!(clustering_cost(&h, &[0], 1.0, Some(&[1, 0])), 0.0);
    }

    #[test]
    fn components_in_id_order() {
        let mut g = DynGraph::new(5).unwrap();
        g.insert_edge(3, 4, 1.0).unwrap();
        g.insert_edge(0, 2, 1.0).unwrap();
        assert_eq!(components(&g), vec![0, 1, 0, 2, 2]);
    }
}
