//! Random-hyperplane rounding of phase configurations, the analytic
//! expected cut, and lower-bound certificates built from the
//! approximation-ratio / coupling-energy chain.

use crate::coupling::{cosine, ratio_over_interval, Coupling, CouplingError};
use crate::dynamics::{energy_general, energy_penalized, PhaseConfig};
use crate::graph::Graph;
use crate::ising::{cut_value, maxcut_to_ising, SpinConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Error)]
pub enum RoundingError {
    #[error("graph has no edges; certificate and angle interval are undefined")]
    EmptyEdgeSet,
    #[error(transparent)]
    Coupling(#[from] CouplingError),
}

/// Shortest angular distance on the circle, in [0, pi]. Exactly symmetric
/// and invariant to 2pi shifts of either argument.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TWO_PI);
    d.min(TWO_PI - d)
}

/// Expected cut of random-hyperplane rounding:
/// sum over edges of w_ij * circular_distance(theta_i, theta_j) / pi.
pub fn expected_cut(theta: &PhaseConfig, g: &Graph) -> f64 {
    let t = theta.as_slice();
    assert_eq!(t.len(), g.vertex_count(), "dimension mismatch");
    g.edges()
        .iter()
        .map(|&(i, j, w)| w * circular_distance(t[i], t[j]) / PI)
        .sum()
}

/// One rounding draw: the random line's normal angle and the induced cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingResult {
    pub spins: SpinConfig,
    pub cut: f64,
    pub line_angle: f64,
}

/// Rounds by a random line through the origin with normal angle phi drawn
/// uniformly from [0, pi): sigma_i = +1 where cos(theta_i - phi) > 0, -1
/// where negative, and +1 on the measure-zero boundary.
pub fn random_line_round(theta: &PhaseConfig, g: &Graph, seed: u64) -> RoundingResult {
    assert_eq!(theta.len(), g.vertex_count(), "dimension mismatch");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = rng.gen::<f64>() * PI;
    let spins = SpinConfig::new(
        theta
            .as_slice()
            .iter()
            .map(|&t| if (t - phi).cos() >= 0.0 { 1 } else { -1 })
            .collect(),
    )
    .expect("signs are +1 or -1");
    let cut = cut_value(g, &spins).expect("dimensions already checked");
    RoundingResult {
        spins,
        cut,
        line_angle: phi,
    }
}

/// Minimum and maximum circular distance realized across the edges.
pub fn edge_angle_interval(theta: &PhaseConfig, g: &Graph) -> Result<(f64, f64), RoundingError> {
    let t = theta.as_slice();
    assert_eq!(t.len(), g.vertex_count(), "dimension mismatch");
    if g.edge_count() == 0 {
        return Err(RoundingError::EmptyEdgeSet);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(i, j, _) in g.edges() {
        let d = circular_distance(t[i], t[j]);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok((lo, hi))
}

/// Certified lower bound on the expected rounded cut of a configuration:
/// `expected_cut >= ratio_used * (total_weight - energy) / 2`, where the
/// ratio is minimized only over the realized edge angle interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub expected_cut: f64,
    pub ratio_used: f64,
    pub interval: (f64, f64),
    pub lower_bound: f64,
    pub energy: f64,
}

impl Certificate {
    /// JSON record including the chain that produced it.
    pub fn to_json(&self, coupling: &str, mu: Option<f64>) -> serde_json::Value {
        serde_json::json!({
            "expected_cut": self.expected_cut,
            "ratio_used": self.ratio_used,
            "interval": [self.interval.0, self.interval.1],
            "lower_bound": self.lower_bound,
            "energy": self.energy,
            "coupling": coupling,
            "mu": mu,
        })
    }
}

/// Generalized-coupling certificate: per-edge,
/// x/pi >= ratio * (1 - f(x))/2 on the realized interval, so summing gives
/// expected_cut >= ratio * (W - L(theta; A, f)) / 2.
pub fn certify_lower_bound(
    theta: &PhaseConfig,
    g: &Graph,
    f: &Coupling,
) -> Result<Certificate, RoundingError> {
    let (lo, hi) = edge_angle_interval(theta, g)?;
    let ratio = ratio_over_interval(f, lo, hi)?;
    let energy = energy_general(theta, g, f);
    Ok(assemble(theta, g, ratio, (lo, hi), energy))
}

/// Penalized-cosine certificate: the nonnegative penalty term only lowers
/// the bound, so expected_cut >= ratio * (W - L(theta; mu)) / 2 holds for
/// arbitrary theta.
pub fn certify_lower_bound_penalized(
    theta: &PhaseConfig,
    g: &Graph,
    mu: f64,
) -> Result<Certificate, RoundingError> {
    let (lo, hi) = edge_angle_interval(theta, g)?;
    let ratio = ratio_over_interval(&cosine(), lo, hi)?;
    let energy = energy_penalized(theta, &maxcut_to_ising(g), mu);
    Ok(assemble(theta, g, ratio, (lo, hi), energy))
}

fn assemble(
    theta: &PhaseConfig,
    g: &Graph,
    ratio: f64,
    interval: (f64, f64),
    energy: f64,
) -> Certificate {
    let slack = (g.total_weight() - energy) / 2.0;
    let lower_bound = if ratio.is_finite() { ratio * slack } else { 0.0 };
    Certificate {
        expected_cut: expected_cut(theta, g),
        ratio_used: ratio,
        interval,
        lower_bound,
        energy,
    }
}
