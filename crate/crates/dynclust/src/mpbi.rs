//! Static leveled sampler with non-decreasing radii.
//!
//! Level `i` samples candidates `S_i` from the execution set `U_i`, grows the
//! smallest `(1+ε)`-power ball around `S_i` that covers a `β` fraction of
//! `U_i`, clamps that radius to at least the previous level's, and recurses
//! on what the ball did not cover. Also hosts the diagnostic radii `ν*` and
//! `μ*` used by the trial suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assign::Assignment;
use crate::error::{invalid, Error, Result};
use crate::graph::{apsp, multi_source_dijkstra, DynGraph, VertexId};
use crate::oracle::{binomial, for_each_subset};
use crate::scale::{ceil_fraction, PowerScale, Radius};

/// Default subset budget for [`mu_star_bruteforce`].
pub const MU_STAR_BUDGET: u64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpbiParams {
    pub alpha: f64,
    pub beta: f64,
    /// Only used by the `μ*` diagnostic.
    pub gamma: f64,
    pub eps: f64,
    pub z: f64,
    pub k: usize,
    pub seed: u64,
    /// `false` runs the original radii without `max(ν̃_i, ν_{i−1})`.
    pub clamp: bool,
}

impl Default for MpbiParams {
    fn default() -> Self {
        Self { alpha: 4.0, beta: 0.25, gamma: 0.5, eps: 0.1, z: 1.0, k: 1, seed: 0, clamp: true }
    }
}

impl MpbiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return invalid(format!("α must be ≥ 1, got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return invalid(format!("β must lie in (0,1), got {}", self.beta));
        }
        if !(self.gamma > self.beta && self.gamma < 1.0) {
            return invalid(format!("γ must lie in (β,1), got {}", self.gamma));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("ε must lie in (0,1), got {}", self.eps));
        }
        if !(self.z >= 1.0 && self.z.is_finite()) {
            return invalid(format!("z must be ≥ 1, got {}", self.z));
        }
        if self.k == 0 {
            return invalid("k must be ≥ 1");
        }
        Ok(())
    }

    /// `αk·log n`: levels are built while `|U_i|` exceeds this.
    pub fn sample_threshold(&self, n: usize) -> f64 {
        self.alpha * self.k as f64 * log_n(n)
    }

    /// Per-vertex sampling probability on an execution set of size `m`.
    pub fn sample_probability(&self, n: usize, m: usize) -> f64 {
        (self.sample_threshold(n) / m as f64).min(1.0)
    }

    /// `log n / log(1/(1−β)) + 1`.
    pub fn level_bound(&self, n: usize) -> f64 {
        log_n(n) / (1.0 / (1.0 - self.beta)).log2() + 1.0
    }
}

/// `log₂ max(n, 2)`.
pub fn log_n(n: usize) -> f64 {
    (n.max(2) as f64).log2()
}

/// Number of sampling levels the execution sets force: the count of `i` with
/// `|U_i| > αk·log n` when `|U_{i+1}| = |U_i| − ⌈β|U_i|⌉`.
pub fn level_sizes(n: usize, p: &MpbiParams) -> Vec<usize> {
    let thr = p.sample_threshold(n);
    let mut sizes = vec![n];
    let mut m = n;
    while m as f64 > thr {
        m -= ceil_fraction(p.beta, m);
        sizes.push(m);
    }
    sizes
}

/// `c`-th smallest value (1-based) of `vals`.
pub(crate) fn kth_smallest(vals: &mut [f64], c: usize) -> f64 {
    debug_assert!(c >= 1 && c <= vals.len());
    let (_, x, _) = vals.select_nth_unstable_by(c - 1, |a, b| a.total_cmp(b));
    *x
}

/// Smallest power of `(1+ε)` whose closed ball (under `dist`) covers at
/// least `β|U|` members of `U`. `Infinite` when no finite radius does.
pub fn smallest_covering_radius(
    dist: &[f64],
    u: &[VertexId],
    beta: f64,
    scale: &PowerScale,
) -> Result<Radius> {
    if u.is_empty() {
        return invalid("covering radius needs a nonempty execution set");
    }
    let mut vals: Vec<f64> = u.iter().map(|&v| dist[v]).collect();
    let c = ceil_fraction(beta, u.len()).max(1);
    Ok(scale.radius_of(kth_smallest(&mut vals, c)))
}

/// Exact `ν*`: least `r` whose ball under `dist` covers `β|U|` of `U`.
pub fn nu_star(dist: &[f64], u: &[VertexId], beta: f64) -> Result<f64> {
    if u.is_empty() {
        return invalid("ν* needs a nonempty execution set");
    }
    let mut vals: Vec<f64> = u.iter().map(|&v| dist[v]).collect();
    Ok(kth_smallest(&mut vals, ceil_fraction(beta, u.len()).max(1)))
}

/// `μ*` from an all-pairs matrix. For a fixed `X` the least feasible
/// radius is the `⌈γ|U|⌉`-th smallest distance from `U` to `X`, and adding
/// centers never hurts, so only subsets of size `min(k, n)` are scanned.
pub fn mu_star_from_matrix(
    d: &[Vec<f64>],
    u: &[VertexId],
    k: usize,
    gamma: f64,
    budget: u64,
) -> Result<f64> {
    if u.is_empty() {
        return invalid("μ* needs a nonempty execution set");
    }
    let n = d.len();
    let r = k.min(n);
    let count = binomial(n as u64, r as u64);
    if count > budget {
        return Err(Error::Capability(format!(
            "μ* enumeration of C({n},{r}) = {count} subsets exceeds the budget {budget}"
        )));
    }
    let c = ceil_fraction(gamma, u.len()).max(1);
    let mut best = f64::INFINITY;
    let mut vals = vec![0.0; u.len()];
    for_each_subset(n, r, |x| {
        for (slot, &v) in vals.iter_mut().zip(u) {
            *slot = x.iter().map(|&s| d[s][v]).fold(f64::INFINITY, f64::min);
        }
        best = best.min(kth_smallest(&mut vals, c));
    });
    Ok(best)
}

/// `μ*` by exhaustive enumeration of center sets of size at most `k`.
pub fn mu_star_bruteforce(g: &DynGraph, u: &[VertexId], k: usize, gamma: f64) -> Result<f64> {
    let n = g.n() as u64;
    let count = binomial(n, (k as u64).min(n));
    if count > MU_STAR_BUDGET {
        return Err(Error::Capability(format!("μ* needs {count} subsets")));
    }
    mu_star_from_matrix(&apsp(g), u, k, gamma, MU_STAR_BUDGET)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticLevel {
    pub u: Vec<VertexId>,
    pub s: Vec<VertexId>,
    pub nu_tilde: Radius,
    pub nu: Radius,
    pub b: Vec<VertexId>,
}

/// One line of the per-level trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelTrace {
    pub level: usize,
    pub u_size: usize,
    pub s_size: usize,
    /// `null` encodes an infinite radius.
    pub nu_tilde: Option<f64>,
    pub nu: Option<f64>,
    pub b_size: usize,
}

#[derive(Debug, Clone)]
pub struct StaticRun {
    /// Levels `0..=t`; the last entry is the trivial level `t`.
    pub levels: Vec<StaticLevel>,
    pub t: usize,
    /// Union of all `S_i`, ascending.
    pub s: Vec<VertexId>,
    pub sigma: Assignment,
    /// Set when some `ν̃_i` was infinite. Levels stop at that level.
    pub opt_infinite: bool,
    pub scale: PowerScale,
}

impl StaticRun {
    pub fn radius(&self, i: usize) -> f64 {
        self.scale.radius_value(self.levels[i].nu)
    }

    pub fn trace(&self) -> Vec<LevelTrace> {
        let finite = |x: f64| x.is_finite().then_some(x);
        self.levels
            .iter()
            .enumerate()
            .map(|(i, l)| LevelTrace {
                level: i,
                u_size: l.u.len(),
                s_size: l.s.len(),
                nu_tilde: finite(self.scale.radius_value(l.nu_tilde)),
                nu: finite(self.scale.radius_value(l.nu)),
                b_size: l.b.len(),
            })
            .collect()
    }

    /// `Σ_{i<t} |B_i|·ν_i^z`, the cost ceiling for `S`.
    pub fn cost_ceiling(&self, z: f64) -> f64 {
        (0..self.t).map(|i| self.levels[i].b.len() as f64 * self.radius(i).powf(z)).sum()
    }
}

/// Run the static sampler on `g` with exact distances.
pub fn run_static(g: &DynGraph, p: &MpbiParams) -> Result<StaticRun> {
    p.validate()?;
    let n = g.n();
    let scale = PowerScale::new(p.eps)?;
    let thr = p.sample_threshold(n);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut sigma = Assignment::identity(n);
    let mut levels = Vec::new();
    let mut u: Vec<VertexId> = (0..n).collect();
    let mut prev = Radius::Zero;
    let mut in_s = vec![false; n];

    while u.len() as f64 > thr {
        let prob = p.sample_probability(n, u.len());
        let s: Vec<VertexId> = u.iter().copied().filter(|_| rng.random_bool(prob)).collect();
        let sp = (!s.is_empty()).then(|| multi_source_dijkstra(g, &s));
        let nu_tilde = match &sp {
            Some(sp) => smallest_covering_radius(&sp.dist, &u, p.beta, &scale)?,
            None => Radius::Infinite,
        };
        for &x in &s {
            in_s[x] = true;
        }
        if nu_tilde == Radius::Infinite {
            levels.push(StaticLevel { u, s, nu_tilde, nu: Radius::Infinite, b: Vec::new() });
            let t = levels.len() - 1;
            return Ok(StaticRun {
                levels,
                t,
                s: collect(&in_s),
                sigma,
                opt_infinite: true,
                scale,
            });
        }
        let sp = sp.expect("nonempty sample");
        let nu = if p.clamp { nu_tilde.max(prev) } else { nu_tilde };
        let r = scale.radius_value(nu);
        let (b, rest): (Vec<_>, Vec<_>) = u.iter().copied().partition(|&v| sp.dist[v] <= r);
        for &v in &b {
            sigma.set(v, sp.root[v]);
        }
        levels.push(StaticLevel { u, s, nu_tilde, nu, b });
        u = rest;
        prev = nu;
    }

    for &v in &u {
        in_s[v] = true;
        sigma.set(v, v);
    }
    levels.push(StaticLevel { u: u.clone(), s: u.clone(), nu_tilde: Radius::Zero, nu: prev, b: u });
    let t = levels.len() - 1;
    Ok(StaticRun { levels, t, s: collect(&in_s), sigma, opt_infinite: false, scale })
}

fn collect(mask: &[bool]) -> Vec<VertexId> {
    (0..mask.len()).filter(|&v| mask[v]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path4() -> DynGraph {
        let mut g = DynGraph::new(4).unwrap();
        for i in 0..3 {
            g.insert_edge(i, i + 1, 1.0).unwrap();
        }
        g
    }

    fn cycle4() -> DynGraph {
        let mut g = path4();
        g.insert_edge(3, 0, 1.0).unwrap();
        g
    }

    #[test]
    fn params_validate() {
        assert!(MpbiParams::default().validate().is_ok());
        for bad in [
            MpbiParams { alpha: 0.5, ..Default::default() },
            MpbiParams { beta: 1.0, ..Default::default() },
            MpbiParams { eps: 0.0, ..Default::default() },
            MpbiParams { z: 0.5, ..Default::default() },
            MpbiParams { k: 0, ..Default::default() },
            MpbiParams { gamma: 0.2, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn log_n_floor_at_two() {
        assert_eq!(log_n(1), 1.0);
        assert_eq!(log_n(1024), 10.0);
    }

    #[test]
    fn covering_radius_examples() {
        let g = path4();
        let scale = PowerScale::new(0.5).unwrap();
        let all: Vec<_> = (0..4).collect();
        let d = multi_source_dijkstra(&g, &[0]).dist;
        assert_eq!(smallest_covering_radius(&d, &all, 0.5, &scale).unwrap(), Radius::Pow(0));
        let d = multi_source_dijkstra(&g, &[0, 1]).dist;
        let r = smallest_covering_radius(&d, &all, 0.5, &scale).unwrap();
        assert_eq!(scale.radius_value(r), 1.0);

        let mut h = DynGraph::new(6).unwrap();
        h.insert_edge(0, 1, 1.0).unwrap();
        let d = multi_source_dijkstra(&h, &[0]).dist;
        let all6: Vec<_> = (0..6).collect();
        assert_eq!(smallest_covering_radius(&d, &all6, 0.5, &scale).unwrap(), Radius::Infinite);
    }

    #[test]
    fn nu_star_examples() {
        let g = path4();
        let all: Vec<_> = (0..4).collect();
        assert_eq!(nu_star(&multi_source_dijkstra(&g, &[0]).dist, &all, 0.5).unwrap(), 1.0);
        assert_eq!(nu_star(&multi_source_dijkstra(&g, &[0, 3]).dist, &all, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn mu_star_examples() {
        let g = cycle4();
        let all: Vec<_> = (0..4).collect();
        assert_eq!(mu_star_bruteforce(&g, &all, 1, 0.5).unwrap(), 1.0);
        assert_eq!(mu_star_bruteforce(&g, &all, 4, 0.9).unwrap(), 0.0);
        let big = DynGraph::new(200).unwrap();
        let u: Vec<_> = (0..200).collect();
        assert!(matches!(mu_star_bruteforce(&big, &u, 4, 0.5), Err(Error::Capability(_))));
    }

    #[test]
    fn tiny_graph_has_no_levels() {
        let g = path4();
        let run = run_static(&g, &MpbiParams::default()).unwrap();
        assert_eq!(run.t, 0);
        assert_eq!(run.s, vec![0, 1, 2, 3]);
        assert_eq!(run.sigma, Assignment::identity(4));
        assert_eq!(run.levels[0].nu, Radius::Zero);
    }

    #[test]
    fn level_bound_for_1024() {
        let p = MpbiParams::default();
        assert_eq!(p.level_bound(1024).floor() as usize, 25);
    }

    #[test]
    fn empty_graph_reports_infinite_opt() {
        let g = DynGraph::new(100).unwrap();
        let run = run_static(&g, &MpbiParams::default()).unwrap();
        assert!(run.opt_infinite);
    }

    #[test]
    fn level_sizes_shrink_by_ceiling() {
        let p = MpbiParams::default();
        let sizes = level_sizes(200, &p);
        assert_eq!(&sizes[..3], &[200, 150, 112]);
        assert!(*sizes.last().unwrap() as f64 <= p.sample_threshold(200));
    }
}
