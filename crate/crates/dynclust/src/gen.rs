//! Seeded edge-stream generators with integer weights.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::graph::{DynGraph, VertexId};
use crate::stream::EdgeStream;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn weight(rng: &mut ChaCha8Rng, wmax: u32) -> f64 {
    rng.random_range(1..=wmax.max(1)) as f64
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (VertexId, VertexId) {
    let u = rng.random_range(0..n);
    let mut v = rng.random_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    (u, v)
}

/// Random spanning tree: vertex `v` links to a uniform earlier vertex of a
/// shuffled order.
pub fn spanning_tree(n: usize, wmax: u32, seed: u64) -> EdgeStream {
    let mut r = rng(seed);
    let mut order: Vec<VertexId> = (0..n).collect();
    order.shuffle(&mut r);
    let mut s = EdgeStream::new(n);
    for i in 1..n {
        let j = r.random_range(0..i);
        let w = weight(&mut r, wmax);
        s.edges.push((order[j], order[i], w));
    }
    s
}

/// A spanning tree followed by `insertions` uniform random edges.
pub fn tree_then_random(n: usize, insertions: usize, wmax: u32, seed: u64) -> Result<EdgeStream> {
    if n < 2 {
        return invalid("need at least two vertices");
    }
    let mut s = spanning_tree(n, wmax, seed);
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..insertions {
        let (u, v) = random_pair(&mut r, n);
        let w = weight(&mut r, wmax);
        s.edges.push((u, v, w));
    }
    Ok(s)
}

/// `G(n, p)` edges in random order with uniform weights in `1..=wmax`.
pub fn gnp(n: usize, p: f64, wmax: u32, seed: u64) -> Result<EdgeStream> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("p must lie in [0,1], got {p}"));
    }
    let mut r = rng(seed);
    let mut s = EdgeStream::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if r.random_bool(p) {
                let w = weight(&mut r, wmax);
                s.edges.push((u, v, w));
            }
        }
    }
    s.edges.shuffle(&mut r);
    Ok(s)
}

/// Two halves joined late. Each half first gets a heavy spanning tree and
/// random internal edges, then light cross edges arrive one by one and
/// keep shrinking the radii.
pub fn two_cluster(n: usize, insertions: usize, wmax: u32, seed: u64) -> Result<EdgeStream> {
    if n < 4 {
        return invalid("two clusters need at least four vertices");
    }
    let mut r = rng(seed);
    let half = n / 2;
    let heavy = wmax.max(2);
    let mut s = EdgeStream::new(n);
    for (lo, hi) in [(0, half), (half, n)] {
        for v in lo + 1..hi {
            let u = r.random_range(lo..v);
            let w = weight(&mut r, heavy);
            s.edges.push((u, v, w));
        }
    }
    s.edges.push((0, half, heavy as f64 * n as f64));
    let internal = insertions / 2;
    for _ in 0..internal {
        let (lo, hi) = if r.random_bool(0.5) { (0, half) } else { (half, n) };
        let u = r.random_range(lo..hi);
        let mut v = r.random_range(lo..hi - 1);
        if v >= u {
            v += 1;
        }
        let w = weight(&mut r, heavy);
        s.edges.push((u, v, w));
    }
    for _ in internal..insertions {
        let u = r.random_range(0..half);
        let v = r.random_range(half..n);
        s.edges.push((u, v, 1.0));
    }
    Ok(s)
}

/// Preferential attachment: each vertex after the first links to `m`
/// earlier vertices picked proportionally to degree plus one.
pub fn pref_attach(n: usize, m: usize, wmax: u32, seed: u64) -> Result<EdgeStream> {
    if m == 0 {
        return invalid("attachment count must be ≥ 1");
    }
    let mut r = rng(seed);
    let mut s = EdgeStream::new(n);
    // Each vertex appears once per incident edge plus once for itself.
    let mut urn: Vec<VertexId> = vec![0];
    for v in 1..n {
        let mut picked: Vec<VertexId> = Vec::with_capacity(m);
        for _ in 0..m.min(v) * 4 {
            if picked.len() == m.min(v) {
                break;
            }
            let u = urn[r.random_range(0..urn.len())];
            if !picked.contains(&u) {
                picked.push(u);
            }
        }
        for &u in &picked {
            let w = weight(&mut r, wmax);
            s.edges.push((u, v, w));
            urn.push(u);
            urn.push(v);
        }
        urn.push(v);
    }
    Ok(s)
}

/// Connected graph: a random spanning tree plus `extra` random edges.
pub fn connected_graph(n: usize, extra: usize, wmax: u32, seed: u64) -> Result<DynGraph> {
    let s = tree_then_random(n, extra, wmax, seed)?;
    build(&s)
}

/// Insert a whole stream into a fresh graph.
pub fn build(s: &EdgeStream) -> Result<DynGraph> {
    let mut g = DynGraph::new(s.n)?;
    for &(u, v, w) in &s.edges {
        g.insert_edge(u, v, w)?;
    }
    Ok(g)
}
