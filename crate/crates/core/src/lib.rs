//! Max-cut heuristics from coupled-oscillator phase dynamics.
//!
//! A max-cut instance is relaxed to oscillator phases on the circle; the
//! penalized cosine objective makes the gradient flow an oscillator-based
//! Ising machine, while generalized coupling functions with approximation
//! ratio 1 reach binarized configurations without any penalty term. Final
//! configurations are binarized by hemisphere or rounded by random lines,
//! and every configuration gets a certified lower bound on its expected
//! rounded cut.

pub mod coupling;
pub mod dynamics;
pub mod graph;
pub mod ising;
pub mod rounding;
pub mod solver;

pub use coupling::{
    approximation_ratio, cosine, fourier_truncate, quadratic_g2, ratio_over_interval,
    validate_class_g, ClassGReport, Coupling, CouplingError,
};
pub use dynamics::{
    detect_binarization, energy_general, energy_penalized, grad_general, grad_penalized,
    integrate_rkf45, oim_rhs, BinarizationReport, IntegrateOpts, PenaltyParams, PhaseConfig,
    Termination, Trajectory,
};
pub use graph::{
    gen_erdos_renyi, gen_hypercube, gen_random_cubic, parse_edge_list, write_edge_list, Graph,
    GraphError,
};
pub use ising::{
    brute_force_maxcut, cut_value, hamiltonian, maxcut_to_ising, spins_from_phases, IsingError,
    IsingModel, MaxCutSolution, SpinConfig,
};
pub use rounding::{
    certify_lower_bound, certify_lower_bound_penalized, circular_distance, edge_angle_interval,
    expected_cut, random_line_round, Certificate, RoundingError, RoundingResult,
};
pub use solver::{solve, CouplingChoice, SolveError, SolveOptions, SolveReport};
