//! Total vertex-to-center map with preimage counts.

use crate::graph::VertexId;

/// `σ : V → V` together with `|σ⁻¹(s)|` for every `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    sigma: Vec<VertexId>,
    counts: Vec<usize>,
}

impl Assignment {
    /// Identity map on `n` vertices.
    pub fn identity(n: usize) -> Self {
        Self { sigma: (0..n).collect(), counts: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn get(&self, v: VertexId) -> VertexId {
        self.sigma[v]
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.sigma
    }

    /// `|σ⁻¹(s)|`.
    pub fn count(&self, s: VertexId) -> usize {
        self.counts[s]
    }

    /// Reassign `v` to `s`; returns the previous center.
    pub fn set(&mut self, v: VertexId, s: VertexId) -> VertexId {
        let old = self.sigma[v];
        if old != s {
            self.counts[old] -= 1;
            self.counts[s] += 1;
            self.sigma[v] = s;
        }
        old
    }

    /// Centers with a nonempty preimage, ascending.
    pub fn image(&self) -> Vec<VertexId> {
        (0..self.counts.len()).filter(|&s| self.counts[s] > 0).collect()
    }
}
