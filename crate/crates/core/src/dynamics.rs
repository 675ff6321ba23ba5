//! Phase-space energies, gradients, the oscillator-Ising-machine vector
//! field, and adaptive Runge-Kutta-Fehlberg 4(5) gradient-flow integration
//! with gradient-norm convergence and binarization detection.

use crate::coupling::Coupling;
use crate::graph::Graph;
use crate::ising::{IsingModel, SpinConfig};
use crate::rounding::circular_distance;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Oscillator phases in radians, kept reduced to [0, 2pi).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    theta: Vec<f64>,
}

impl PhaseConfig {
    /// Wraps each angle into [0, 2pi). Panics on non-finite entries.
    pub fn new(theta: Vec<f64>) -> Self {
        assert!(
            theta.iter().all(|t| t.is_finite()),
            "phases must be finite"
        );
        Self {
            theta: theta.into_iter().map(|t| t.rem_euclid(TWO_PI)).collect(),
        }
    }

    /// Independent uniform draws from [0, 2pi).
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self {
            theta: (0..n).map(|_| rng.gen::<f64>() * TWO_PI).collect(),
        }
    }

    /// Binarized configuration: 0 for spin +1, pi for spin -1.
    pub fn from_spins(spins: &SpinConfig) -> Self {
        Self {
            theta: spins
                .spins()
                .iter()
                .map(|&s| if s > 0 { 0.0 } else { PI })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }
}

/// Penalty and coupling strengths of the oscillator machine. Constructed
/// from mu and K so that the locking strength satisfies K_s / K = mu / 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub mu: f64,
    pub k_coupling: f64,
    pub k_lock: f64,
}

impl PenaltyParams {
    pub fn from_mu(mu: f64, k_coupling: f64) -> Self {
        assert!(mu >= 0.0 && k_coupling > 0.0);
        Self {
            mu,
            k_coupling,
            k_lock: k_coupling * mu / 2.0,
        }
    }
}

/// Per-vertex coupling sums: out[i] = sum over j != i of J_ij sin(theta_i -
/// theta_j). Shared by the penalized gradient and the machine field so the
/// two agree to the last bit.
fn coupling_field(theta: &[f64], m: &IsingModel, out: &mut [f64]) {
    out.fill(0.0);
    for &(i, j, jij) in m.couplings() {
        let s = (theta[i] - theta[j]).sin();
        out[i] += jij * s;
        out[j] -= jij * s;
    }
}

/// Penalized phase energy: -sum J_ij cos(theta_i - theta_j)
/// + (mu/2) sum sin^2(theta_i).
pub fn energy_penalized(theta: &PhaseConfig, m: &IsingModel, mu: f64) -> f64 {
    let t = theta.as_slice();
    assert_eq!(t.len(), m.spin_count(), "dimension mismatch");
    let mut e = 0.0;
    for &(i, j, jij) in m.couplings() {
        e -= jij * (t[i] - t[j]).cos();
    }
    let penalty: f64 = t.iter().map(|&x| x.sin().powi(2)).sum();
    e + 0.5 * mu * penalty
}

/// Gradient of the penalized energy: component i is
/// sum over j != i of J_ij sin(theta_i - theta_j) + (mu/2) sin(2 theta_i).
pub fn grad_penalized(theta: &PhaseConfig, m: &IsingModel, mu: f64) -> Vec<f64> {
    let t = theta.as_slice();
    assert_eq!(t.len(), m.spin_count(), "dimension mismatch");
    let mut g = vec![0.0; t.len()];
    coupling_field(t, m, &mut g);
    for (gi, &ti) in g.iter_mut().zip(t) {
        *gi += 0.5 * mu * (2.0 * ti).sin();
    }
    g
}

/// The oscillator-machine field: d theta_i / dt =
/// -K sum over j != i of J_ij sin(theta_i - theta_j) - K_s sin(2 theta_i).
/// With K_s / K = mu / 2 this is exactly -K times the penalized gradient.
pub fn oim_rhs(theta: &PhaseConfig, m: &IsingModel, p: &PenaltyParams) -> Vec<f64> {
    let t = theta.as_slice();
    assert_eq!(t.len(), m.spin_count(), "dimension mismatch");
    let mut f = vec![0.0; t.len()];
    coupling_field(t, m, &mut f);
    for (fi, &ti) in f.iter_mut().zip(t) {
        *fi = -p.k_coupling * *fi - p.k_lock * (2.0 * ti).sin();
    }
    f
}

/// Generalized coupling energy: sum over edges of w_ij f(theta_i - theta_j).
pub fn energy_general(theta: &PhaseConfig, g: &Graph, f: &Coupling) -> f64 {
    let t = theta.as_slice();
    assert_eq!(t.len(), g.vertex_count(), "dimension mismatch");
    g.edges()
        .iter()
        .map(|&(i, j, w)| w * f.eval(t[i] - t[j]))
        .sum()
}

/// Gradient of the generalized energy, using oddness of f' for the two
/// endpoints of each edge.
pub fn grad_general(theta: &PhaseConfig, g: &Graph, f: &Coupling) -> Vec<f64> {
    let t = theta.as_slice();
    assert_eq!(t.len(), g.vertex_count(), "dimension mismatch");
    let mut grad = vec![0.0; t.len()];
    for &(i, j, w) in g.edges() {
        let d = f.deriv(t[i] - t[j]);
        grad[i] += w * d;
        grad[j] -= w * d;
    }
    grad
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    #[serde(rename = "gradient-converged")]
    GradientConverged,
    #[serde(rename = "time-limit")]
    TimeLimit,
    #[serde(rename = "step-failure")]
    StepFailure,
}

/// Recorded gradient-flow run. Energies are evaluated with the objective
/// that generated the flow; when the flow runs on a smoothed coupling the
/// exact-coupling energy is recorded alongside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseConfig>,
    pub energies: Vec<f64>,
    pub energies_smooth: Vec<f64>,
    pub terminated_by: Termination,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &PhaseConfig {
        self.states.last().expect("trajectory records its endpoints")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory records its endpoints")
    }

    /// CSV export: "t,theta_0,...,theta_{n-1},energy_exact,energy_smooth".
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, PhaseConfig::len);
        let mut out = String::from("t");
        for i in 0..n {
            out.push_str(&format!(",theta_{i}"));
        }
        out.push_str(",energy_exact,energy_smooth");
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format!("\n{t}"));
            for x in self.states[k].as_slice() {
                out.push_str(&format!(",{x}"));
            }
            out.push_str(&format!(",{},{}", self.energies[k], self.energies_smooth[k]));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOpts {
    pub rtol: f64,
    pub atol: f64,
    pub t_max: f64,
    /// Terminate once the infinity norm of the field drops below this.
    pub grad_tol: f64,
    /// Record every k-th accepted step; 0 keeps only the endpoints.
    pub record_every: usize,
}

impl Default for IntegrateOpts {
    fn default() -> Self {
        Self {
            rtol: 1e-3,
            atol: 1e-6,
            t_max: 1e4,
            grad_tol: 1e-6,
            record_every: 1,
        }
    }
}

// Fehlberg 4(5) tableau.
const A2: [f64; 1] = [1.0 / 4.0];
const A3: [f64; 2] = [3.0 / 32.0, 9.0 / 32.0];
const A4: [f64; 3] = [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0];
const A5: [f64; 4] = [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0];
const A6: [f64; 5] = [
    -8.0 / 27.0,
    2.0,
    -3544.0 / 2565.0,
    1859.0 / 4104.0,
    -11.0 / 40.0,
];
/// Fifth-order solution weights (used to advance).
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];
/// Error weights: fifth-order minus fourth-order solution.
const ERR: [f64; 6] = [
    16.0 / 135.0 - 25.0 / 216.0,
    0.0,
    6656.0 / 12825.0 - 1408.0 / 2565.0,
    28561.0 / 56430.0 - 2197.0 / 4104.0,
    -9.0 / 50.0 + 1.0 / 5.0,
    2.0 / 55.0,
];

const SAFETY: f64 = 0.9;
const STEP_GROW_MAX: f64 = 5.0;
const STEP_SHRINK_MIN: f64 = 0.2;
const STEP_MIN: f64 = 1e-12;
const INITIAL_STEP: f64 = 1e-2;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Integrates d theta / dt = field(theta) with the embedded Fehlberg 4(5)
/// pair. A step is accepted when the componentwise error estimate stays
/// within atol + rtol * |state|; the step size follows the usual
/// safety-factor rule with exponent 1/5 and growth clamped to [0.2, 5].
/// States are wrapped into [0, 2pi) after every accepted step.
///
/// Terminates when the field's infinity norm falls below `grad_tol`, when
/// `t_max` is reached, or with `StepFailure` when the step underflows.
pub fn integrate_rkf45<F, E>(
    mut field: F,
    mut energy: E,
    theta0: &PhaseConfig,
    opts: &IntegrateOpts,
) -> Trajectory
where
    F: FnMut(&[f64], &mut [f64]),
    E: FnMut(&[f64]) -> (f64, f64),
{
    let n = theta0.len();
    let mut y = theta0.as_slice().to_vec();
    let mut t = 0.0;
    let mut h = INITIAL_STEP.min(opts.t_max);

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut energies = Vec::new();
    let mut energies_smooth = Vec::new();
    let mut record = |t: f64, y: &[f64], e: (f64, f64)| {
        times.push(t);
        states.push(PhaseConfig { theta: y.to_vec() });
        energies.push(e.0);
        energies_smooth.push(e.1);
    };
    record(t, &y, energy(&y));
    let mut last_recorded = t;

    let mut k = vec![vec![0.0; n]; 6];
    let mut stage = vec![0.0; n];
    let mut y_next = vec![0.0; n];
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let terminated_by = loop {
        field(&y, &mut k[0]);
        if k[0].iter().any(|v| !v.is_finite()) {
            break Termination::StepFailure;
        }
        if inf_norm(&k[0]) <= opts.grad_tol {
            break Termination::GradientConverged;
        }
        if t >= opts.t_max - STEP_MIN {
            break Termination::TimeLimit;
        }
        h = h.min(opts.t_max - t);

        // Stages 2..6.
        let tableau: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, row) in tableau.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, &a) in row.iter().enumerate() {
                    acc += a * k[j][i];
                }
                stage[i] = y[i] + h * acc;
            }
            field(&stage, &mut k[s + 1]);
        }

        let mut err_ratio = 0.0f64;
        for i in 0..n {
            let mut sol = 0.0;
            let mut err = 0.0;
            for s in 0..6 {
                sol += B5[s] * k[s][i];
                err += ERR[s] * k[s][i];
            }
            y_next[i] = y[i] + h * sol;
            let scale = opts.atol + opts.rtol * y[i].abs();
            let e = (h * err).abs() / scale;
            // A non-finite stage (field blew up inside the step) must force
            // a rejection rather than poison the max.
            err_ratio = if e.is_finite() {
                err_ratio.max(e)
            } else {
                f64::INFINITY
            };
        }

        if err_ratio <= 1.0 {
            t += h;
            for (yi, &yn) in y.iter_mut().zip(&y_next) {
                *yi = yn.rem_euclid(TWO_PI);
            }
            accepted += 1;
            if opts.record_every > 0 && accepted % opts.record_every == 0 {
                record(t, &y, energy(&y));
                last_recorded = t;
            }
        } else {
            rejected += 1;
        }

        let factor = if err_ratio > 0.0 {
            (SAFETY * err_ratio.powf(-0.2)).clamp(STEP_SHRINK_MIN, STEP_GROW_MAX)
        } else {
            STEP_GROW_MAX
        };
        h *= factor;
        if h < STEP_MIN {
            break Termination::StepFailure;
        }
    };

    if last_recorded < t {
        record(t, &y, energy(&y));
    }
    Trajectory {
        times,
        states,
        energies,
        energies_smooth,
        terminated_by,
        steps_accepted: accepted,
        steps_rejected: rejected,
    }
}

/// Per-oscillator circular distance to the nearest of {0, pi}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinarizationReport {
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub all_binarized: bool,
    pub eps: f64,
}

pub fn detect_binarization(theta: &PhaseConfig, eps: f64) -> BinarizationReport {
    assert!(eps > 0.0, "binarization tolerance must be positive");
    let deviations: Vec<f64> = theta
        .as_slice()
        .iter()
        .map(|&t| circular_distance(t, 0.0).min(circular_distance(t, PI)))
        .collect();
    let max_deviation = deviations.iter().fold(0.0f64, |m, &d| m.max(d));
    BinarizationReport {
        max_deviation,
        all_binarized: max_deviation <= eps,
        deviations,
        eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{cosine, fourier_truncate, quadratic_g2};
    use crate::graph::{gen_erdos_renyi, gen_hypercube, Graph};
    use crate::ising::{brute_force_maxcut, maxcut_to_ising};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k3_model() -> IsingModel {
        maxcut_to_ising(&Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap())
    }

    #[test]
    fn phase_config_wraps() {
        let p = PhaseConfig::new(vec![-1e-9, 7.0, TWO_PI]);
        assert!(p.as_slice().iter().all(|&t| (0.0..TWO_PI).contains(&t)));
        assert!((p.as_slice()[1] - (7.0 - TWO_PI)).abs() < 1e-15);
    }

    #[test]
    fn penalty_params_lock_ratio() {
        let p = PenaltyParams::from_mu(1.6, 2.0);
        assert_eq!(p.k_lock, 2.0 * 1.6 / 2.0);
    }

    #[test]
    fn energy_penalized_examples() {
        let m = k3_model();
        let zero = PhaseConfig::new(vec![0.0; 3]);
        // cos 0 = 1 and sin 0 = 0, so the energy is -sum J = 3.
        assert_eq!(energy_penalized(&zero, &m, 2.5), 3.0);
        let split = PhaseConfig::new(vec![0.0, PI, 0.0]);
        assert!((energy_penalized(&split, &m, 1.0) + 1.0).abs() < 1e-12);
        // Adding 2pi to one phase changes nothing.
        let shifted = PhaseConfig::new(vec![TWO_PI, PI, 0.0]);
        assert_eq!(
            energy_penalized(&split, &m, 1.0),
            energy_penalized(&shifted, &m, 1.0)
        );
    }

    #[test]
    fn grad_penalized_vanishes_at_binarized_states() {
        let m = k3_model();
        for theta in [
            PhaseConfig::new(vec![0.0; 3]),
            PhaseConfig::new(vec![PI; 3]),
            PhaseConfig::new(vec![0.0, PI, PI]),
        ] {
            let g = grad_penalized(&theta, &m, 1.0);
            assert!(inf_norm(&g) < 1e-15, "{g:?}");
        }
    }

    #[test]
    fn grad_penalized_matches_finite_differences() {
        let g = gen_erdos_renyi(7, 0.6, 11).unwrap();
        let m = maxcut_to_ising(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let theta = PhaseConfig::random(7, &mut rng);
            let grad = grad_penalized(&theta, &m, 1.3);
            let h = 1e-6;
            let mut fd = vec![0.0; 7];
            for i in 0..7 {
                let mut up = theta.as_slice().to_vec();
                let mut dn = up.clone();
                up[i] += h;
                dn[i] -= h;
                fd[i] = (energy_penalized(&PhaseConfig::new(up), &m, 1.3)
                    - energy_penalized(&PhaseConfig::new(dn), &m, 1.3))
                    / (2.0 * h);
            }
            let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
            assert!(inf_norm(&diff) <= 1e-6 * inf_norm(&grad).max(1.0));
        }
    }

    #[test]
    fn grad_penalized_isolated_vertex() {
        let g = Graph::unweighted(1, &[]).unwrap();
        let m = maxcut_to_ising(&g);
        let at_half_pi = grad_penalized(&PhaseConfig::new(vec![PI / 2.0]), &m, 2.0);
        assert!(at_half_pi[0].abs() < 1e-15);
        let at_quarter_pi = grad_penalized(&PhaseConfig::new(vec![PI / 4.0]), &m, 2.0);
        assert!((at_quarter_pi[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oim_rhs_is_negated_gradient() {
        let g = gen_erdos_renyi(10, 0.5, 3).unwrap();
        let m = maxcut_to_ising(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for mu in [0.5, 1.0, 2.0] {
            let p = PenaltyParams::from_mu(mu, 1.0);
            for _ in 0..10 {
                let theta = PhaseConfig::random(10, &mut rng);
                let rhs = oim_rhs(&theta, &m, &p);
                let grad = grad_penalized(&theta, &m, mu);
                let worst = rhs
                    .iter()
                    .zip(&grad)
                    .fold(0.0f64, |w, (r, g)| w.max((r + g).abs()));
                assert!(worst < 1e-12, "mu={mu}: {worst}");
            }
        }
    }

    #[test]
    fn oim_rhs_without_locking_is_pure_coupling_flow() {
        let m = k3_model();
        let theta = PhaseConfig::new(vec![0.3, 1.4, 5.0]);
        let p = PenaltyParams::from_mu(0.0, 1.0);
        let rhs = oim_rhs(&theta, &m, &p);
        let mut cf = vec![0.0; 3];
        coupling_field(theta.as_slice(), &m, &mut cf);
        for (r, c) in rhs.iter().zip(&cf) {
            assert_eq!(*r, -c);
        }
    }

    #[test]
    fn oim_rhs_scales_linearly_with_k() {
        let m = k3_model();
        let theta = PhaseConfig::new(vec![0.3, 1.4, 5.0]);
        let base = oim_rhs(&theta, &m, &PenaltyParams::from_mu(0.8, 1.0));
        let scaled = oim_rhs(&theta, &m, &PenaltyParams::from_mu(0.8, 3.0));
        for (b, s) in base.iter().zip(&scaled) {
            assert!((3.0 * b - s).abs() < 1e-14);
        }
    }

    #[test]
    fn energy_general_examples() {
        let q3 = gen_hypercube(3).unwrap();
        let zero = PhaseConfig::new(vec![0.0; 8]);
        assert_eq!(energy_general(&zero, &q3, &cosine()), q3.total_weight());

        let sol = brute_force_maxcut(&q3).unwrap();
        let theta = PhaseConfig::from_spins(&sol.spins);
        assert_eq!(energy_general(&theta, &q3, &quadratic_g2()), -12.0);

        // With f = cos this is the mu = 0 penalized energy for J = -A.
        let g = gen_erdos_renyi(9, 0.4, 6).unwrap();
        let m = maxcut_to_ising(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta = PhaseConfig::random(9, &mut rng);
        assert!(
            (energy_general(&theta, &g, &cosine()) - energy_penalized(&theta, &m, 0.0)).abs()
                < 1e-12
        );
    }

    #[test]
    fn grad_general_matches_finite_differences() {
        let g = gen_erdos_renyi(8, 0.5, 21).unwrap();
        let f = fourier_truncate(&quadratic_g2(), 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let theta = PhaseConfig::random(8, &mut rng);
            let grad = grad_general(&theta, &g, &f);
            let h = 1e-6;
            let mut fd = vec![0.0; 8];
            for i in 0..8 {
                let mut up = theta.as_slice().to_vec();
                let mut dn = up.clone();
                up[i] += h;
                dn[i] -= h;
                fd[i] = (energy_general(&PhaseConfig::new(up), &g, &f)
                    - energy_general(&PhaseConfig::new(dn), &g, &f))
                    / (2.0 * h);
            }
            let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
            assert!(inf_norm(&diff) <= 1e-6 * inf_norm(&grad).max(1.0));
        }
    }

    #[test]
    fn grad_general_with_cosine_matches_machine_coupling_part() {
        let g = gen_erdos_renyi(8, 0.5, 33).unwrap();
        let m = maxcut_to_ising(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = PhaseConfig::random(8, &mut rng);
        let grad = grad_general(&theta, &g, &cosine());
        let rhs = oim_rhs(&theta, &m, &PenaltyParams::from_mu(0.0, 1.0));
        for (gr, r) in grad.iter().zip(&rhs) {
            assert!((gr + r).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_general_vanishes_at_binarized_states_for_smooth_even_couplings() {
        let q3 = gen_hypercube(3).unwrap();
        let f = fourier_truncate(&quadratic_g2(), 10).unwrap();
        let sol = brute_force_maxcut(&q3).unwrap();
        let theta = PhaseConfig::from_spins(&sol.spins);
        assert!(inf_norm(&grad_general(&theta, &q3, &f)) < 1e-12);
    }

    #[test]
    fn rkf45_integrates_exponential_decay() {
        let opts = IntegrateOpts {
            t_max: 5.0,
            grad_tol: 1e-12,
            ..IntegrateOpts::default()
        };
        let traj = integrate_rkf45(
            |y, dy| dy[0] = -y[0],
            |y| (y[0], y[0]),
            &PhaseConfig::new(vec![1.0]),
            &opts,
        );
        assert_eq!(traj.terminated_by, Termination::TimeLimit);
        assert!((traj.final_time() - 5.0).abs() < 1e-9);
        let y_end = traj.final_state().as_slice()[0];
        assert!(
            (y_end - (-5.0f64).exp()).abs() < 1e-4,
            "y(5) = {y_end} vs {}",
            (-5.0f64).exp()
        );
    }

    #[test]
    fn rkf45_gradient_flow_energy_descends() {
        let g = gen_erdos_renyi(12, 0.4, 17).unwrap();
        let m = maxcut_to_ising(&g);
        let mu = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta0 = PhaseConfig::random(12, &mut rng);
        let opts = IntegrateOpts::default();
        let traj = integrate_rkf45(
            |y, dy| {
                let grad = grad_penalized(&PhaseConfig::new(y.to_vec()), &m, mu);
                for (d, g) in dy.iter_mut().zip(grad) {
                    *d = -g;
                }
            },
            |y| {
                let e = energy_penalized(&PhaseConfig::new(y.to_vec()), &m, mu);
                (e, e)
            },
            &theta0,
            &opts,
        );
        assert_eq!(traj.terminated_by, Termination::GradientConverged);
        for pair in traj.energies.windows(2) {
            assert!(
                pair[1] <= pair[0] + 10.0 * opts.atol,
                "energy rose: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn rkf45_equilibrium_converges_immediately() {
        let q3 = gen_hypercube(3).unwrap();
        let f = fourier_truncate(&quadratic_g2(), 10).unwrap();
        let sol = brute_force_maxcut(&q3).unwrap();
        let theta0 = PhaseConfig::from_spins(&sol.spins);
        let traj = integrate_rkf45(
            |y, dy| {
                let grad = grad_general(&PhaseConfig::new(y.to_vec()), &q3, &f);
                for (d, g) in dy.iter_mut().zip(grad) {
                    *d = -g;
                }
            },
            |y| {
                let e = energy_general(&PhaseConfig::new(y.to_vec()), &q3, &f);
                (e, e)
            },
            &theta0,
            &IntegrateOpts::default(),
        );
        assert_eq!(traj.terminated_by, Termination::GradientConverged);
        assert_eq!(traj.times.len(), 1);
        assert_eq!(traj.final_state(), &theta0);
    }

    #[test]
    fn rkf45_reports_step_failure_near_blowup() {
        // dy/dt = 1 / (1 - y) reaches its singularity at finite time; the
        // NaN wall at y >= 1 models the domain boundary, so every step near
        // it is rejected and the controller must underflow.
        let traj = integrate_rkf45(
            |y, dy| {
                dy[0] = if y[0] < 1.0 {
                    1.0 / (1.0 - y[0])
                } else {
                    f64::NAN
                };
            },
            |y| (y[0], y[0]),
            &PhaseConfig::new(vec![0.0]),
            &IntegrateOpts {
                t_max: 10.0,
                grad_tol: 0.0,
                ..IntegrateOpts::default()
            },
        );
        assert_eq!(traj.terminated_by, Termination::StepFailure);
        assert!(traj.final_time() < 0.51);
    }

    #[test]
    fn rkf45_is_deterministic() {
        let g = gen_erdos_renyi(10, 0.5, 2).unwrap();
        let m = maxcut_to_ising(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let theta0 = PhaseConfig::random(10, &mut rng);
        let run = || {
            integrate_rkf45(
                |y, dy| {
                    let grad = grad_penalized(&PhaseConfig::new(y.to_vec()), &m, 1.0);
                    for (d, g) in dy.iter_mut().zip(grad) {
                        *d = -g;
                    }
                },
                |y| {
                    let e = energy_penalized(&PhaseConfig::new(y.to_vec()), &m, 1.0);
                    (e, e)
                },
                &theta0,
                &IntegrateOpts::default(),
            )
        };
        let a = run();
        let b = run();
        assert_eq!(a.times, b.times);
        assert_eq!(a.states, b.states);
        assert_eq!(a.energies, b.energies);
    }

    #[test]
    fn common_rotation_leaves_unpenalized_field_equivariant() {
        let g = gen_erdos_renyi(9, 0.5, 14).unwrap();
        let m = maxcut_to_ising(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta = PhaseConfig::random(9, &mut rng);
        let shifted =
            PhaseConfig::new(theta.as_slice().iter().map(|t| t + 0.7).collect());
        let a = grad_penalized(&theta, &m, 0.0);
        let b = grad_penalized(&shifted, &m, 0.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        // The coupling energy is rotation invariant even with a penalty.
        assert!(
            (energy_penalized(&theta, &m, 0.0) - energy_penalized(&shifted, &m, 0.0)).abs()
                < 1e-12
        );
    }

    #[test]
    fn detect_binarization_examples() {
        let theta = PhaseConfig::new(vec![0.0, PI, TWO_PI - 1e-9]);
        let report = detect_binarization(&theta, 1e-6);
        assert!(report.all_binarized);
        assert!(report.max_deviation <= 1.1e-9);

        let theta = PhaseConfig::new(vec![0.0, PI / 2.0]);
        let report = detect_binarization(&theta, 0.5);
        assert!(!report.all_binarized);
        assert!((report.max_deviation - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn record_every_controls_sampling() {
        let run = |record_every| {
            integrate_rkf45(
                |y, dy| dy[0] = -y[0],
                |y| (y[0], y[0]),
                &PhaseConfig::new(vec![1.0]),
                &IntegrateOpts {
                    t_max: 2.0,
                    grad_tol: 1e-12,
                    record_every,
                    ..IntegrateOpts::default()
                },
            )
        };
        let endpoints_only = run(0);
        assert_eq!(endpoints_only.times.len(), 2);
        assert_eq!(endpoints_only.times[0], 0.0);
        let dense = run(1);
        assert_eq!(dense.times.len(), dense.steps_accepted + 1);
        let sparse = run(3);
        assert!(sparse.times.len() < dense.times.len());
        // Same flow regardless of sampling.
        assert_eq!(
            dense.final_state().as_slice(),
            sparse.final_state().as_slice()
        );
    }

    #[test]
    fn trajectory_csv_layout() {
        let traj = integrate_rkf45(
            |y, dy| dy[0] = -y[0],
            |y| (y[0], 2.0 * y[0]),
            &PhaseConfig::new(vec![1.0]),
            &IntegrateOpts {
                t_max: 0.5,
                grad_tol: 1e-12,
                ..IntegrateOpts::default()
            },
        );
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,theta_0,energy_exact,energy_smooth");
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,1,"));
        assert_eq!(csv.lines().count(), traj.times.len() + 1);
    }
}
