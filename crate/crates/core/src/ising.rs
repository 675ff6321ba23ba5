//! Ising Hamiltonian, the max-cut reduction J_ij = -a_ij, cut evaluation,
//! and an exhaustive max-cut oracle for small instances.

use crate::dynamics::PhaseConfig;
use crate::graph::Graph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IsingError {
    #[error("dimension mismatch: model has {expected} spins, configuration has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("brute force supports at most {max} vertices, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("spin values must be +1 or -1, got {0}")]
    BadSpin(i8),
}

/// Sparse symmetric coupling matrix, one entry per unordered pair `i < j`.
/// No diagonal terms and no external field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    n: usize,
    couplings: Vec<(usize, usize, f64)>,
}

impl IsingModel {
    pub fn new(n: usize, couplings: Vec<(usize, usize, f64)>) -> Self {
        debug_assert!(couplings.iter().all(|&(i, j, _)| i < j && j < n));
        Self { n, couplings }
    }

    pub fn spin_count(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }
}

/// Spin configuration sigma in {-1, +1}^n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self, IsingError> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(IsingError::BadSpin(bad));
        }
        Ok(Self { spins })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn flipped(&self) -> Self {
        Self {
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }

    /// Sign pattern from a bitmask with spin 0 fixed to +1; bit b gives the
    /// sign of spin b + 1. Used by the exhaustive oracle.
    fn from_mask(n: usize, mask: u64) -> Self {
        let mut spins = vec![1i8; n];
        for (b, s) in spins.iter_mut().skip(1).enumerate() {
            if mask >> b & 1 == 1 {
                *s = -1;
            }
        }
        Self { spins }
    }
}

/// Ising energy H = -sum over pairs of J_ij sigma_i sigma_j.
pub fn hamiltonian(m: &IsingModel, s: &SpinConfig) -> Result<f64, IsingError> {
    if m.n != s.len() {
        return Err(IsingError::DimensionMismatch {
            expected: m.n,
            got: s.len(),
        });
    }
    let mut h = 0.0;
    for &(i, j, jij) in &m.couplings {
        h -= jij * f64::from(s.spins[i] * s.spins[j]);
    }
    Ok(h)
}

/// Max-cut reduction: J_ij = -w_ij on each edge, so minimizing the
/// Hamiltonian maximizes the cut.
pub fn maxcut_to_ising(g: &Graph) -> IsingModel {
    IsingModel::new(
        g.vertex_count(),
        g.edges().iter().map(|&(i, j, w)| (i, j, -w)).collect(),
    )
}

/// Total weight of edges whose endpoints carry opposite spins.
pub fn cut_value(g: &Graph, s: &SpinConfig) -> Result<f64, IsingError> {
    if g.vertex_count() != s.len() {
        return Err(IsingError::DimensionMismatch {
            expected: g.vertex_count(),
            got: s.len(),
        });
    }
    let mut cut = 0.0;
    for &(i, j, w) in g.edges() {
        if s.spins[i] != s.spins[j] {
            cut += w;
        }
    }
    Ok(cut)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCutSolution {
    pub value: f64,
    pub spins: SpinConfig,
    /// True iff exactly one unordered partition pair attains the maximum.
    pub unique_pair: bool,
}

const BRUTE_FORCE_MAX_N: usize = 30;

/// Exact max-cut by enumeration of all 2^(n-1) sign patterns (spin 0 fixed
/// to +1 by flip symmetry). Refuses instances above 30 vertices.
///
/// Each unordered partition pair appears exactly once in the enumeration,
/// so `unique_pair` is simply "exactly one maximizer seen".
pub fn brute_force_maxcut(g: &Graph) -> Result<MaxCutSolution, IsingError> {
    let n = g.vertex_count();
    if n > BRUTE_FORCE_MAX_N {
        return Err(IsingError::TooLarge {
            max: BRUTE_FORCE_MAX_N,
            got: n,
        });
    }
    let total: u64 = 1u64 << (n.max(1) - 1);
    let edges = g.edges();

    // (best value, smallest maximizing mask, number of maximizers)
    let eval = |mask: u64| -> f64 {
        let mut cut = 0.0;
        for &(i, j, w) in edges {
            let si = if i == 0 { 0 } else { mask >> (i - 1) & 1 };
            let sj = if j == 0 { 0 } else { mask >> (j - 1) & 1 };
            if si != sj {
                cut += w;
            }
        }
        cut
    };
    let combine = |a: (f64, u64, u64), b: (f64, u64, u64)| {
        if a.0 > b.0 {
            a
        } else if b.0 > a.0 {
            b
        } else {
            (a.0, a.1.min(b.1), a.2 + b.2)
        }
    };
    let identity = (f64::NEG_INFINITY, u64::MAX, 0u64);

    let (value, mask, count) = if total >= 1 << 16 {
        (0..total)
            .into_par_iter()
            .fold(|| identity, |acc, m| combine(acc, (eval(m), m, 1)))
            .reduce(|| identity, combine)
    } else {
        (0..total).fold(identity, |acc, m| combine(acc, (eval(m), m, 1)))
    };

    Ok(MaxCutSolution {
        value,
        spins: SpinConfig::from_mask(n, mask),
        unique_pair: count == 1,
    })
}

/// Binarizes phases by hemisphere: +1 where cos(theta) >= 0, else -1.
/// The tie at cos(theta) = 0 goes to +1.
pub fn spins_from_phases(theta: &PhaseConfig) -> SpinConfig {
    SpinConfig {
        spins: theta
            .as_slice()
            .iter()
            .map(|&t| if t.cos() >= 0.0 { 1 } else { -1 })
            .collect(),
    }
}
