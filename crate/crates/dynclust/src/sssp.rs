//! Incremental `(1+ε)`-approximate distances from a set of sources.
//!
//! The oracle keeps exact labels internally (distance and attaining source,
//! updated by decrease-only Dijkstra propagation) and exposes a lazily
//! refreshed estimate: the published `δ(v)` is reset to the exact label only
//! once it exceeds `(1+ε)` times that label. Each published value is
//! therefore within the sandwich, never increases, and changes at most
//! `O(log_{1+ε} nW)` times per vertex.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use log::debug;
use ordered_float::OrderedFloat;

use crate::error::{invalid, Result};
use crate::graph::{multi_source_dijkstra, DynGraph, VertexId, NO_VERTEX};

type HeapEntry = Reverse<(OrderedFloat<f64>, VertexId, VertexId)>;

#[derive(Debug, Clone)]
pub struct DistanceOracle {
    eps: f64,
    is_source: Vec<bool>,
    sources: Vec<VertexId>,
    dist: Vec<f64>,
    root: Vec<VertexId>,
    est: Vec<f64>,
    heap: BinaryHeap<HeapEntry>,
    touched: Vec<VertexId>,
    mark: Vec<bool>,
}

impl DistanceOracle {
    /// Estimates from a zero-weight super-source attached to `sources`.
    pub fn init(g: &DynGraph, sources: &[VertexId], eps: f64) -> Result<Self> {
        if sources.is_empty() {
            return invalid("distance oracle needs a nonempty source set");
        }
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("oracle ε must lie in (0,1), got {eps}"));
        }
        let n = g.n();
        let mut is_source = vec![false; n];
        let mut list = Vec::with_capacity(sources.len());
        for &s in sources {
            g.check_vertex(s)?;
            if !is_source[s] {
                is_source[s] = true;
                list.push(s);
            }
        }
        let sp = multi_source_dijkstra(g, &list);
        Ok(Self {
            eps,
            is_source,
            sources: list,
            est: sp.dist.clone(),
            dist: sp.dist,
            root: sp.root,
            heap: BinaryHeap::new(),
            touched: Vec::new(),
            mark: vec![false; n],
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn sources(&self) -> &[VertexId] {
        &self.sources
    }

    pub fn is_source(&self, v: VertexId) -> bool {
        self.is_source[v]
    }

    /// Published estimate `δ_S(v)`.
    pub fn estimate(&self, v: VertexId) -> f64 {
        self.est[v]
    }

    pub fn estimates(&self) -> &[f64] {
        &self.est
    }

    /// A source `s` with `dist(v, s) ≤ δ_S(v)`, or `None` when `v` is unreachable.
    pub fn nearest(&self, v: VertexId) -> Option<VertexId> {
        (self.root[v] != NO_VERTEX).then_some(self.root[v])
    }

    /// Relax after `(u, v, w)` has been inserted into `g`. Returns the
    /// vertices whose published estimate strictly decreased, ascending.
    pub fn insert(&mut self, g: &DynGraph, u: VertexId, v: VertexId, w: f64) -> Vec<VertexId> {
        self.offer(v, self.dist[u] + w, self.root[u]);
        self.offer(u, self.dist[v] + w, self.root[v]);
        self.propagate(g)
    }

    /// Attach more sources. Already-present sources are ignored.
    pub fn extend_sources(&mut self, g: &DynGraph, new_sources: &[VertexId]) -> Vec<VertexId> {
        for &s in new_sources {
            if self.is_source[s] {
                debug!("source {s} already present; ignoring");
                continue;
            }
            self.is_source[s] = true;
            self.sources.push(s);
            self.offer(s, 0.0, s);
        }
        self.propagate(g)
    }

    fn offer(&mut self, x: VertexId, d: f64, r: VertexId) {
        if r == NO_VERTEX || !d.is_finite() {
            return;
        }
        if d < self.dist[x] || (d == self.dist[x] && r < self.root[x]) {
            self.dist[x] = d;
            self.root[x] = r;
            self.heap.push(Reverse((OrderedFloat(d), r, x)));
            if !self.mark[x] {
                self.mark[x] = true;
                self.touched.push(x);
            }
        }
    }

    fn propagate(&mut self, g: &DynGraph) -> Vec<VertexId> {
        while let Some(Reverse((OrderedFloat(d), r, x))) = self.heap.pop() {
            if d != self.dist[x] || r != self.root[x] {
                continue;
            }
            for &(y, w) in g.neighbors(x) {
                self.offer(y, d + w, r);
            }
        }
        let mut changed = Vec::new();
        let slack = 1.0 + self.eps;
        for x in std::mem::take(&mut self.touched) {
            self.mark[x] = false;
            if self.est[x] > slack * self.dist[x] {
                self.est[x] = self.dist[x];
                changed.push(x);
            }
        }
        changed.sort_unstable();
        changed
    }
}
