//! Multi-restart gradient-flow solve pipeline: seeded random starts,
//! integration, binarization, sign and random-line rounding, certification,
//! and a deterministic best-of reduction.

use crate::coupling::{cosine, fourier_truncate, quadratic_g2, Coupling, CouplingError};
use crate::dynamics::{
    detect_binarization, energy_general, energy_penalized, grad_general, integrate_rkf45,
    oim_rhs, BinarizationReport, IntegrateOpts, PenaltyParams, PhaseConfig, Termination,
    Trajectory,
};
use crate::graph::Graph;
use crate::ising::{cut_value, maxcut_to_ising, spins_from_phases, SpinConfig};
use crate::rounding::{certify_lower_bound, certify_lower_bound_penalized, Certificate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error("every restart ended in step failure")]
    AllRestartsFailed,
}

/// A coupling name resolved for the pipeline: the (smooth) function driving
/// the flow, the exact function used for recorded energies and
/// certificates, and whether the run uses the penalized-cosine machine.
#[derive(Debug, Clone)]
pub struct CouplingChoice {
    pub flow: Coupling,
    pub exact: Coupling,
    pub penalized: bool,
}

impl CouplingChoice {
    /// "cos" runs the penalized oscillator machine; "g2" and
    /// "g2-fourier:K" run the generalized-coupling gradient flow, with
    /// energies and certificates always evaluated against the exact g2.
    pub fn resolve(name: &str) -> Result<Self, CouplingError> {
        match name {
            "cos" => Ok(Self {
                flow: cosine(),
                exact: cosine(),
                penalized: true,
            }),
            "g2" => Ok(Self {
                flow: quadratic_g2(),
                exact: quadratic_g2(),
                penalized: false,
            }),
            _ => {
                if let Some(k) = name.strip_prefix("g2-fourier:") {
                    let k: usize = k
                        .parse()
                        .map_err(|_| CouplingError::UnknownName(name.to_string()))?;
                    Ok(Self {
                        flow: fourier_truncate(&quadratic_g2(), k)?,
                        exact: quadratic_g2(),
                        penalized: false,
                    })
                } else {
                    Err(CouplingError::UnknownName(name.to_string()))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    pub coupling: String,
    /// Penalty strength; drives the sin(2 theta) locking term of the
    /// cosine machine. Generalized couplings run the plain gradient flow.
    pub mu: f64,
    pub k_coupling: f64,
    pub rtol: f64,
    pub atol: f64,
    pub grad_tol: f64,
    pub t_max: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Random rounding lines drawn per restart.
    pub lines: usize,
    pub binarize_eps: f64,
    /// Record every k-th accepted step into the trajectory; 0 keeps
    /// endpoints only.
    pub record_every: usize,
    /// Keep full trajectories in the report (for CSV export and descent
    /// checks); endpoints are always kept.
    pub keep_trajectories: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            coupling: "cos".into(),
            mu: 1.0,
            k_coupling: 1.0,
            rtol: 1e-3,
            atol: 1e-6,
            grad_tol: 1e-6,
            t_max: 1e4,
            restarts: 10,
            seed: 0,
            lines: 100,
            binarize_eps: 0.15,
            record_every: 0,
            keep_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartReport {
    pub index: usize,
    pub seed: u64,
    pub terminated_by: Termination,
    pub t_final: f64,
    pub steps_accepted: usize,
    pub energy_exact: f64,
    pub energy_smooth: f64,
    pub final_theta: Vec<f64>,
    pub binarization: BinarizationReport,
    pub sign_cut: f64,
    pub best_line_cut: f64,
    pub best_line_angle: f64,
    pub best_cut: f64,
    /// Absent only when the graph has no edges.
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestSummary {
    pub restart_index: usize,
    pub cut: f64,
    pub energy_exact: f64,
    pub spins: SpinConfig,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: usize,
    pub m: usize,
    pub total_weight: f64,
    pub coupling: String,
    pub mu: f64,
    pub restarts: Vec<RestartReport>,
    pub best: BestSummary,
}

/// Canonical gauge for rotation-invariant flows: rotates all phases by half
/// the circular mean of 2 theta, which is the common rotation that best
/// aligns a two-cluster configuration with the axes {0, pi}. Energies,
/// cuts, expected cuts, and certificates only see phase differences, so
/// this changes nothing they measure.
fn align_to_binary_axes(theta: &PhaseConfig) -> PhaseConfig {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &t in theta.as_slice() {
        let (sin2, cos2) = (2.0 * t).sin_cos();
        s += sin2;
        c += cos2;
    }
    if s == 0.0 && c == 0.0 {
        return theta.clone();
    }
    let rot = 0.5 * s.atan2(c);
    PhaseConfig::new(theta.as_slice().iter().map(|t| t - rot).collect())
}

fn run_restart(
    g: &Graph,
    choice: &CouplingChoice,
    opts: &SolveOptions,
    index: usize,
) -> RestartReport {
    let n = g.vertex_count();
    let seed = opts.seed.wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta0 = PhaseConfig::random(n, &mut rng);
    let integrate_opts = IntegrateOpts {
        rtol: opts.rtol,
        atol: opts.atol,
        t_max: opts.t_max,
        grad_tol: opts.grad_tol,
        record_every: opts.record_every,
    };

    let trajectory = if choice.penalized {
        let model = maxcut_to_ising(g);
        let params = PenaltyParams::from_mu(opts.mu, opts.k_coupling);
        integrate_rkf45(
            |y, dy| {
                let rhs = oim_rhs(&PhaseConfig::new(y.to_vec()), &model, &params);
                dy.copy_from_slice(&rhs);
            },
            |y| {
                let e = energy_penalized(&PhaseConfig::new(y.to_vec()), &model, opts.mu);
                (e, e)
            },
            &theta0,
            &integrate_opts,
        )
    } else {
        let k = opts.k_coupling;
        integrate_rkf45(
            |y, dy| {
                let grad = grad_general(&PhaseConfig::new(y.to_vec()), g, &choice.flow);
                for (d, gr) in dy.iter_mut().zip(grad) {
                    *d = -k * gr;
                }
            },
            |y| {
                let theta = PhaseConfig::new(y.to_vec());
                (
                    energy_general(&theta, g, &choice.exact),
                    energy_general(&theta, g, &choice.flow),
                )
            },
            &theta0,
            &integrate_opts,
        )
    };

    // Without a locking term the flow never picks a global phase; report
    // the endpoint in the canonical gauge.
    let rotation_invariant = !choice.penalized || opts.mu == 0.0;
    let theta = if rotation_invariant {
        align_to_binary_axes(trajectory.final_state())
    } else {
        trajectory.final_state().clone()
    };
    let binarization = detect_binarization(&theta, opts.binarize_eps);
    let sign_spins = spins_from_phases(&theta);
    let sign_cut = cut_value(g, &sign_spins).expect("solver keeps dimensions consistent");

    let mut best_line_cut = f64::NEG_INFINITY;
    let mut best_line_angle = f64::NAN;
    for trial in 0..opts.lines {
        let line_seed = seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(trial as u64);
        let r = crate::rounding::random_line_round(&theta, g, line_seed);
        if r.cut > best_line_cut {
            best_line_cut = r.cut;
            best_line_angle = r.line_angle;
        }
    }
    if opts.lines == 0 {
        best_line_cut = sign_cut;
        best_line_angle = f64::NAN;
    }

    let certificate = if g.edge_count() == 0 {
        None
    } else if choice.penalized {
        Some(
            certify_lower_bound_penalized(&theta, g, opts.mu)
                .expect("penalized certificate exists for nonempty graphs"),
        )
    } else {
        Some(
            certify_lower_bound(&theta, g, &choice.exact)
                .expect("coupling certificate exists for nonempty graphs"),
        )
    };

    RestartReport {
        index,
        seed,
        terminated_by: trajectory.terminated_by,
        t_final: trajectory.final_time(),
        steps_accepted: trajectory.steps_accepted,
        energy_exact: *trajectory.energies.last().expect("endpoints recorded"),
        energy_smooth: *trajectory
            .energies_smooth
            .last()
            .expect("endpoints recorded"),
        final_theta: theta.as_slice().to_vec(),
        binarization,
        sign_cut,
        best_line_cut,
        best_line_angle,
        best_cut: sign_cut.max(best_line_cut),
        certificate,
        trajectory: if opts.keep_trajectories {
            Some(trajectory)
        } else {
            None
        },
    }
}

/// Runs the full pipeline. Restarts are independent and execute in
/// parallel; the best-of reduction is ordered by higher cut, then lower
/// exact energy, then lower restart index, so the outcome does not depend
/// on scheduling.
pub fn solve(g: &Graph, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let choice = CouplingChoice::resolve(&opts.coupling)?;
    let restarts: Vec<RestartReport> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|i| run_restart(g, &choice, opts, i))
        .collect();

    if restarts
        .iter()
        .all(|r| r.terminated_by == Termination::StepFailure)
    {
        return Err(SolveError::AllRestartsFailed);
    }

    let best = restarts
        .iter()
        .max_by(|a, b| {
            a.best_cut
                .partial_cmp(&b.best_cut)
                .unwrap()
                .then(b.energy_exact.partial_cmp(&a.energy_exact).unwrap())
                .then(b.index.cmp(&a.index))
        })
        .expect("at least one restart ran");

    // The reported spins realize best_cut: the sign rounding when it wins
    // the tie, otherwise the best line's partition.
    let theta = PhaseConfig::new(best.final_theta.clone());
    let spins = if best.sign_cut >= best.best_line_cut {
        spins_from_phases(&theta)
    } else {
        let mut best_spins = spins_from_phases(&theta);
        let mut best_cut = f64::NEG_INFINITY;
        for trial in 0..opts.lines {
            let line_seed = best
                .seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(trial as u64);
            let r = crate::rounding::random_line_round(&theta, g, line_seed);
            if r.cut > best_cut {
                best_cut = r.cut;
                best_spins = r.spins;
            }
        }
        best_spins
    };

    let best = BestSummary {
        restart_index: best.index,
        cut: best.best_cut,
        energy_exact: best.energy_exact,
        spins,
        certificate: best.certificate.clone(),
    };

    Ok(SolveReport {
        n: g.vertex_count(),
        m: g.edge_count(),
        total_weight: g.total_weight(),
        coupling: opts.coupling.clone(),
        mu: opts.mu,
        restarts,
        best,
    })
}
