//! Static solver for vertex-weighted (k,z)-clustering instances.
//!
//! The solver grows valued balls greedily for a guessed optimum `Γ`,
//! binary-searches `Γ` until at most `k` balls survive, then polishes the
//! picked centers with single-swap local search. Distances are shortest
//! paths inside the instance graph only.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Node-weighted graph plus clustering parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedInstance {
    /// `wt(x)` per node; the node count is `weights.len()`.
    pub weights: Vec<u64>,
    pub edges: Vec<(usize, usize, f64)>,
    pub k: usize,
    pub z: f64,
}

/// At most `k` centers and their cost on the instance they were solved for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub centers: Vec<usize>,
    /// `Σ wt(x)·dist(x, centers)^z`; infinite when some weighted node cannot
    /// reach a center.
    pub cost: f64,
}

impl Solution {
    pub fn is_feasible(&self) -> bool {
        self.cost.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Separation factor of the greedy ball selection.
    pub lambda: f64,
    pub local_search: bool,
    /// Cap on improving swaps.
    pub max_swaps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { lambda: 5.0, local_search: true, max_swaps: 10_000 }
    }
}

impl WeightedInstance {
    pub fn new(weights: Vec<u64>, edges: Vec<(usize, usize, f64)>, k: usize, z: f64) -> Result<Self> {
        let inst = Self { weights, edges, k, z };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return invalid("k must be ≥ 1");
        }
        if !(self.z >= 1.0 && self.z.is_finite()) {
            return invalid(format!("z must be ≥ 1, got {}", self.z));
        }
        let n = self.num_nodes();
        for &(x, y, w) in &self.edges {
            if x >= n || y >= n {
                return invalid(format!("edge ({x},{y}) out of range for {n} nodes"));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return invalid(format!("edge ({x},{y}) has invalid weight {w}"));
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn max_edge_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).fold(1.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(s)
            .map_err(|e| Error::InvalidArgument(format!("instance json: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_nodes()];
        for &(x, y, w) in &self.edges {
            adj[x].push((y, w));
            adj[y].push((x, w));
        }
        adj
    }

    pub fn distances_from(&self, x: usize) -> Vec<f64> {
        dijkstra(&Csr::new(self), x)
    }

    pub fn apsp(&self) -> Vec<Vec<f64>> {
        let csr = Csr::new(self);
        (0..self.num_nodes()).map(|x| dijkstra(&csr, x)).collect()
    }

    /// Component label per node, labels ordered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let n = self.num_nodes();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &(y, _) in &adj[x] {
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

    /// Number of components that carry positive weight.
    pub fn weighted_components(&self) -> usize {
        let label = self.components();
        let mut seen = vec![false; self.num_nodes()];
        let mut count = 0;
        for x in 0..self.num_nodes() {
            if self.weights[x] > 0 && !seen[label[x]] {
                seen[label[x]] = true;
                count += 1;
            }
        }
        count
    }

    pub fn cost(&self, centers: &[usize]) -> f64 {
        cost_from_matrix(&self.apsp(), &self.weights, centers, self.z)
    }
}

/// Flat adjacency for repeated Dijkstra runs.
struct Csr {
    start: Vec<usize>,
    arcs: Vec<(u32, f64)>,
}

impl Csr {
    fn new(inst: &WeightedInstance) -> Self {
        let n = inst.num_nodes();
        let mut start = vec![0; n + 1];
        for &(x, y, _) in &inst.edges {
            start[x + 1] += 1;
            start[y + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut arcs = vec![(0, 0.0); start[n]];
        for &(x, y, w) in &inst.edges {
            arcs[fill[x]] = (y as u32, w);
            fill[x] += 1;
            arcs[fill[y]] = (x as u32, w);
            fill[y] += 1;
        }
        Self { start, arcs }
    }
}

fn dijkstra(g: &Csr, s: usize) -> Vec<f64> {
    // Non-negative floats order like their bit patterns.
    let mut dist = vec![f64::INFINITY; g.start.len() - 1];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((0u64, s as u32)));
    while let Some(Reverse((bits, x))) = heap.pop() {
        let (d, x) = (f64::from_bits(bits), x as usize);
        if d > dist[x] {
            continue;
        }
        for &(y, w) in &g.arcs[g.start[x]..g.start[x + 1]] {
            let nd = d + w;
            if nd < dist[y as usize] {
                dist[y as usize] = nd;
                heap.push(Reverse((nd.to_bits(), y)));
            }
        }
    }
    dist
}

/// `Σ wt(x)·dist(x, centers)^z` from a distance matrix.
pub fn cost_from_matrix(d: &[Vec<f64>], wt: &[u64], centers: &[usize], z: f64) -> f64 {
    let mut total = 0.0;
    for x in 0..d.len() {
        if wt[x] == 0 {
            continue;
        }
        let best = centers.iter().map(|&c| d[c][x]).fold(f64::INFINITY, f64::min);
        if best.is_infinite() {
            return f64::INFINITY;
        }
        total += wt[x] as f64 * best.powf(z);
    }
    total
}

/// `wt(Ball[x, r])·r^z`.
pub fn value_wt(inst: &WeightedInstance, x: usize, r: f64) -> f64 {
    value_wt_from(&inst.distances_from(x), &inst.weights, r, inst.z)
}

/// [`value_wt`] from a precomputed distance row.
pub fn value_wt_from(row: &[f64], wt: &[u64], r: f64, z: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    ball_weight(row, wt, r) as f64 * r.powf(z)
}

pub fn ball_weight(row: &[f64], wt: &[u64], r: f64) -> u64 {
    row.iter().zip(wt).filter(|(d, _)| **d <= r).map(|(_, w)| *w).sum()
}

/// Bridge weight `N·(N·W)+1` used to chain components together.
pub fn bridge_weight(inst: &WeightedInstance) -> f64 {
    let n = inst.num_nodes() as f64;
    n * (n * inst.max_edge_weight()) + 1.0
}

/// Chain the components in id order with bridge edges. Fails when more
/// components carry weight than there are centers.
pub fn connect_components(inst: &WeightedInstance) -> Result<WeightedInstance> {
    let weighted = inst.weighted_components();
    if weighted > inst.k {
        return Err(Error::Infeasible(format!(
            "{weighted} weighted components but only k = {}",
            inst.k
        )));
    }
    Ok(pad_components(inst).unwrap_or_else(|| inst.clone()))
}

fn pad_components(inst: &WeightedInstance) -> Option<WeightedInstance> {
    let label = inst.components();
    let mut reps: Vec<usize> = Vec::new();
    for x in 0..inst.num_nodes() {
        if label[x] == reps.len() {
            reps.push(x);
        }
    }
    if reps.len() < 2 {
        return None;
    }
    let mut out = inst.clone();
    let bridge = bridge_weight(inst);
    for pair in reps.windows(2) {
        out.edges.push((pair[0], pair[1], bridge));
    }
    Some(out)
}

pub fn solve_static(inst: &WeightedInstance) -> Solution {
    solve_static_with(inst, &SolverConfig::default())
}

pub fn solve_static_with(inst: &WeightedInstance, cfg: &SolverConfig) -> Solution {
    let n = inst.num_nodes();
    if n == 0 {
        return Solution { centers: Vec::new(), cost: 0.0 };
    }
    if inst.k >= n {
        return Solution { centers: (0..n).collect(), cost: 0.0 };
    }
    let d = inst.apsp();
    let padded = pad_components(inst).map(|p| p.apsp());
    let wt = &inst.weights;

    let mut centers = greedy(padded.as_ref().unwrap_or(&d), wt, inst.k, inst.z, cfg.lambda);
    cover_components(inst, &d, &mut centers);
    fill_to_k(&d, wt, inst.k, inst.z, &mut centers);
    if cfg.local_search {
        local_search(&d, wt, inst.z, &mut centers, cfg.max_swaps);
    }
    centers.sort_unstable();
    let cost = cost_from_matrix(&d, wt, &centers, inst.z);
    Solution { centers, cost }
}

/// Greedy valued-ball selection for the smallest guess `Γ` yielding at
/// most `k` centers.
fn greedy(d: &[Vec<f64>], wt: &[u64], k: usize, z: f64, lambda: f64) -> Vec<usize> {
    let n = d.len();
    // Per node: distinct radii ascending with the ball weight at each.
    let balls: Vec<Vec<(f64, u64)>> = (0..n)
        .map(|x| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| d[x][a].total_cmp(&d[x][b]));
            let mut out: Vec<(f64, u64)> = Vec::new();
            let mut acc = 0;
            for y in order {
                acc += wt[y];
                match out.last_mut() {
                    Some(last) if last.0 == d[x][y] => last.1 = acc,
                    _ => out.push((d[x][y], acc)),
                }
            }
            out
        })
        .collect();
    // `wt(ball)·r^z` per ball; nondecreasing along each row.
    let values: Vec<Vec<f64>> =
        balls.iter().map(|b| b.iter().map(|&(r, w)| w as f64 * r.powf(z)).collect()).collect();
    let mut guesses: Vec<f64> =
        values.iter().flatten().map(|v| k as f64 * v).filter(|g| *g > 0.0).collect();
    guesses.sort_by(f64::total_cmp);
    guesses.dedup();
    if guesses.is_empty() {
        return vec![0];
    }

    let pick = |gamma: f64| -> Vec<usize> {
        let need = gamma / k as f64;
        let mut radius: Vec<(f64, usize)> = (0..n)
            .map(|x| {
                let b = &balls[x];
                let i = values[x].partition_point(|&v| v < need).min(b.len() - 1);
                (b[i].0, x)
            })
            .collect();
        radius.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut chosen: Vec<usize> = Vec::new();
        for (r, x) in radius {
            if chosen.iter().all(|&c| d[x][c] > lambda * r) {
                chosen.push(x);
            }
        }
        chosen
    };

    let (mut lo, mut hi) = (0, guesses.len() - 1);
    let mut best = pick(guesses[hi]);
    if best.len() > k {
        best.truncate(k);
        return best;
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        let c = pick(guesses[mid]);
        if c.len() <= k {
            best = c;
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    best
}

/// Make sure every weighted component holds a center.
fn cover_components(inst: &WeightedInstance, d: &[Vec<f64>], centers: &mut Vec<usize>) {
    let label = inst.components();
    let n = inst.num_nodes();
    let ncomp = label.iter().copied().max().map_or(0, |m| m + 1);
    let mut weight = vec![0u64; ncomp];
    for x in 0..n {
        weight[label[x]] += inst.weights[x];
    }
    for comp in 0..ncomp {
        if weight[comp] == 0 || centers.iter().any(|&c| label[c] == comp) {
            continue;
        }
        // Component 1-median as its representative.
        let members: Vec<usize> = (0..n).filter(|&x| label[x] == comp).collect();
        let best = members
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let sa: f64 = members.iter().map(|&y| inst.weights[y] as f64 * d[a][y].powf(inst.z)).sum();
                let sb: f64 = members.iter().map(|&y| inst.weights[y] as f64 * d[b][y].powf(inst.z)).sum();
                sa.total_cmp(&sb).then(a.cmp(&b))
            })
            .expect("component is nonempty");
        if centers.len() < inst.k {
            centers.push(best);
            continue;
        }
        // Drop a center from a component that holds several.
        let mut counts = vec![0usize; ncomp];
        for &c in centers.iter() {
            counts[label[c]] += 1;
        }
        if let Some(pos) = centers.iter().position(|&c| counts[label[c]] > 1 || weight[label[c]] == 0) {
            centers[pos] = best;
        }
    }
}

/// Add centers greedily while fewer than `k` and cost is positive.
fn fill_to_k(d: &[Vec<f64>], wt: &[u64], k: usize, z: f64, centers: &mut Vec<usize>) {
    let n = d.len();
    while centers.len() < k.min(n) {
        let cur = cost_from_matrix(d, wt, centers, z);
        if cur == 0.0 {
            break;
        }
        let mut best: Option<(f64, usize)> = None;
        for y in 0..n {
            if centers.contains(&y) {
                continue;
            }
            centers.push(y);
            let c = cost_from_matrix(d, wt, centers, z);
            centers.pop();
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, y));
            }
        }
        match best {
            Some((_, y)) => centers.push(y),
            None => break,
        }
    }
}

fn improves(new: f64, cur: f64) -> bool {
    if cur.is_infinite() {
        return new.is_finite();
    }
    new < cur * (1.0 - 1e-12) - 1e-12
}

/// Best-improvement single swaps until no swap helps.
fn local_search(d: &[Vec<f64>], wt: &[u64], z: f64, centers: &mut [usize], max_swaps: usize) {
    let n = d.len();
    let k = centers.len();
    if k == 0 || k >= n {
        return;
    }
    let pw = |x: f64| if x.is_infinite() { f64::INFINITY } else { x.powf(z) };
    let dz: Vec<Vec<f64>> = d.iter().map(|row| row.iter().map(|&x| pw(x)).collect()).collect();
    for _ in 0..max_swaps {
        // Nearest and second-nearest center per node.
        let mut first = vec![(f64::INFINITY, usize::MAX); n];
        let mut second = vec![f64::INFINITY; n];
        for (slot, &c) in centers.iter().enumerate() {
            for x in 0..n {
                let dx = d[c][x];
                if dx < first[x].0 || (dx == first[x].0 && first[x].1 == usize::MAX) {
                    second[x] = first[x].0;
                    first[x] = (dx, slot);
                } else if dx < second[x] {
                    second[x] = dx;
                }
            }
        }
        let cur: f64 = (0..n).filter(|&x| wt[x] > 0).map(|x| wt[x] as f64 * pw(first[x].0)).sum();
        let mut best: Option<(f64, usize, usize)> = None;
        for slot in 0..k {
            for y in 0..n {
                if centers.contains(&y) {
                    continue;
                }
                let mut total = 0.0;
                for x in 0..n {
                    if wt[x] == 0 {
                        continue;
                    }
                    let keep = if first[x].1 == slot { second[x] } else { first[x].0 };
                    total += wt[x] as f64 * pw(keep).min(dz[y][x]);
                    if total.is_infinite() {
                        break;
                    }
                }
                if improves(total, best.map_or(cur, |b| b.0)) {
                    best = Some((total, slot, y));
                }
            }
        }
        match best {
            Some((_, slot, y)) => centers[slot] = y,
            None => return,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> WeightedInstance {
        WeightedInstance::new(vec![1, 1, 1], vec![(0, 1, 1.0), (1, 2, 1.0)], 1, 1.0).unwrap()
    }

    fn cycle4(k: usize) -> WeightedInstance {
        let edges = vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)];
        WeightedInstance::new(vec![1; 4], edges, k, 1.0).unwrap()
    }

    #[test]
    fn value_examples() {
        let inst = path3();
        assert_eq!(value_wt(&inst, 1, 0.0), 0.0);
        assert_eq!(value_wt(&inst, 1, 1.0), 3.0);
        let mut doubled = inst.clone();
        doubled.weights = vec![2, 2, 2];
        assert_eq!(value_wt(&doubled, 1, 1.0), 6.0);
    }

    #[test]
    fn solve_examples() {
        let s = solve_static(&path3());
        assert_eq!((s.centers.clone(), s.cost), (vec![1], 2.0));
        assert_eq!(solve_static(&cycle4(2)).cost, 2.0);
        let all = solve_static(&cycle4(4));
        assert_eq!((all.centers.len(), all.cost), (4, 0.0));
    }

    #[test]
    fn connect_examples() {
        let inst = path3();
        assert_eq!(connect_components(&inst).unwrap(), inst);

        let two = WeightedInstance::new(vec![1; 4], vec![(0, 1, 2.0), (2, 3, 1.0)], 2, 1.0).unwrap();
        let padded = connect_components(&two).unwrap();
        assert_eq!(padded.edges.len(), 3);
        assert_eq!(padded.edges[2], (0, 2, 4.0 * (4.0 * 2.0) + 1.0));

        let three = WeightedInstance::new(vec![1; 3], vec![], 2, 1.0).unwrap();
        assert!(matches!(connect_components(&three), Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_weight_components_do_not_count() {
        let inst = WeightedInstance::new(vec![1, 1, 0], vec![(0, 1, 1.0)], 1, 1.0).unwrap();
        assert_eq!(inst.weighted_components(), 1);
        let s = solve_static(&inst);
        assert_eq!(s.cost, 1.0);
    }

    #[test]
    fn infeasible_reports_infinite_cost() {
        let inst = WeightedInstance::new(vec![1; 3], vec![], 2, 1.0).unwrap();
        let s = solve_static(&inst);
        assert!(!s.is_feasible());
        assert!(s.centers.len() <= 2);
    }

    #[test]
    fn disconnected_within_budget_is_covered() {
        let edges = vec![(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0)];
        let inst = WeightedInstance::new(vec![1; 6], edges, 2, 1.0).unwrap();
        let s = solve_static(&inst);
        assert_eq!((s.centers.clone(), s.cost), (vec![1, 4], 4.0));
    }

    #[test]
    fn json_round_trip() {
        let inst = cycle4(2);
        assert_eq!(WeightedInstance::from_json(&inst.to_json()).unwrap(), inst);
        assert!(WeightedInstance::from_json("{\"weights\":[1],\"edges\":[],\"k\":0,\"z\":1}").is_err());
    }
}
