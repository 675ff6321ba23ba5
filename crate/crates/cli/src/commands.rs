use crate::config::{config_hash, RunConfig};
use crate::{BenchArgs, CliError, GenerateKind, SolveArgs};
use anyhow::{anyhow, Context};
use phasecut_core::{
    brute_force_maxcut, gen_erdos_renyi, gen_hypercube, gen_random_cubic, parse_edge_list,
    ratio_over_interval, solve as run_solve, Coupling, Graph, SolveError, SolveOptions,
    SolveReport,
};
use std::f64::consts::PI;
use std::fs;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

fn load_graph(path: &str) -> Result<Graph, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read graph file '{path}'"))
        .map_err(usage)?;
    parse_edge_list(&text)
        .with_context(|| format!("cannot parse graph file '{path}'"))
        .map_err(usage)
}

fn emit(out: Option<&str>, payload: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, payload)
            .with_context(|| format!("cannot write '{path}'"))
            .map_err(runtime),
        None => {
            println!("{payload}");
            Ok(())
        }
    }
}

fn timestamp() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn generate(kind: GenerateKind) -> Result<(), CliError> {
    let (graph, default_name) = match kind {
        GenerateKind::Er { n, p, seed, out } => (
            gen_erdos_renyi(n, p, seed).map_err(usage)?,
            out.unwrap_or(format!("er_n{n}_p{p}_seed{seed}.txt")),
        ),
        GenerateKind::Hypercube { d, out } => (
            gen_hypercube(d).map_err(usage)?,
            out.unwrap_or(format!("hypercube_d{d}.txt")),
        ),
        GenerateKind::Cubic { n, seed, out } => (
            gen_random_cubic(n, seed).map_err(usage)?,
            out.unwrap_or(format!("cubic_n{n}_seed{seed}.txt")),
        ),
    };
    let text = phasecut_core::write_edge_list(&graph);
    fs::write(&default_name, text)
        .with_context(|| format!("cannot write '{default_name}'"))
        .map_err(runtime)?;
    println!(
        "n={} m={} -> {}",
        graph.vertex_count(),
        graph.edge_count(),
        default_name
    );
    Ok(())
}

fn solve_options(args: &SolveArgs) -> SolveOptions {
    let wants_trajectory = args.trajectory.is_some();
    SolveOptions {
        coupling: args.coupling.clone(),
        mu: args.mu,
        k_coupling: args.k,
        rtol: args.rtol,
        atol: args.atol,
        grad_tol: args.grad_tol,
        t_max: args.t_max,
        restarts: args.restarts,
        seed: args.seed,
        lines: args.lines,
        binarize_eps: args.eps,
        record_every: if wants_trajectory && args.record_every == 0 {
            1
        } else {
            args.record_every
        },
        keep_trajectories: wants_trajectory,
    }
}

fn map_solve_error(e: SolveError) -> CliError {
    match e {
        SolveError::Coupling(_) => usage(e),
        SolveError::AllRestartsFailed => runtime(e),
    }
}

pub fn solve(args: SolveArgs) -> Result<(), CliError> {
    if args.mu < 0.0 || args.k <= 0.0 || args.rtol <= 0.0 || args.atol <= 0.0 || args.eps <= 0.0 {
        return Err(usage(anyhow!(
            "mu must be >= 0 and k, rtol, atol, eps must be > 0"
        )));
    }
    let graph = load_graph(&args.graph)?;
    let opts = solve_options(&args);
    let mut report = run_solve(&graph, &opts).map_err(map_solve_error)?;

    if let Some(traj_path) = &args.trajectory {
        let best = &report.restarts[report.best.restart_index];
        let csv = best
            .trajectory
            .as_ref()
            .expect("trajectories kept when requested")
            .to_csv();
        fs::write(traj_path, csv)
            .with_context(|| format!("cannot write '{traj_path}'"))
            .map_err(runtime)?;
    }
    // Trajectories are exported separately; keep the JSON light.
    for restart in &mut report.restarts {
        restart.trajectory = None;
    }

    let config = RunConfig {
        graph: args.graph.clone(),
        coupling: args.coupling.clone(),
        mu: args.mu,
        k: args.k,
        rtol: args.rtol,
        atol: args.atol,
        grad_tol: args.grad_tol,
        t_max: args.t_max,
        restarts: args.restarts,
        seed: args.seed,
        lines: args.lines,
        binarize_eps: args.eps,
        record_every: opts.record_every,
        out: args.out.clone(),
        trajectory: args.trajectory.clone(),
    };
    let payload = serde_json::json!({
        "config": config,
        "config_hash": config_hash(&config),
        "timestamp": timestamp(),
        "result": report,
    });
    let text = serde_json::to_string_pretty(&payload).expect("report serializes");
    eprintln!(
        "best cut {} from restart {} (lower bound {:.6})",
        payload["result"]["best"]["cut"],
        payload["result"]["best"]["restart_index"],
        payload["result"]["best"]["certificate"]["lower_bound"]
            .as_f64()
            .unwrap_or(f64::NAN),
    );
    emit(args.out.as_deref(), &text)
}

pub fn oracle(graph_path: &str, out: Option<&str>) -> Result<(), CliError> {
    let graph = load_graph(graph_path)?;
    let solution = brute_force_maxcut(&graph).map_err(usage)?;
    let payload = serde_json::json!({
        "graph": graph_path,
        "n": graph.vertex_count(),
        "m": graph.edge_count(),
        "value": solution.value,
        "spins": solution.spins.spins(),
        "unique_pair": solution.unique_pair,
    });
    emit(out, &serde_json::to_string_pretty(&payload).expect("serializes"))
}

pub fn ratio(coupling: &str, lo: Option<f64>, hi: Option<f64>) -> Result<(), CliError> {
    let f = Coupling::from_name(coupling).map_err(usage)?;
    let lo = lo.unwrap_or(0.0);
    let hi = hi.unwrap_or(PI);
    let value = ratio_over_interval(&f, lo, hi).map_err(usage)?;
    let payload = serde_json::json!({
        "coupling": coupling,
        "lo": lo,
        "hi": hi,
        "ratio": value,
    });
    println!("{}", serde_json::to_string_pretty(&payload).expect("serializes"));
    Ok(())
}

fn bench_cell(
    path: &str,
    graph: &Graph,
    coupling: &str,
    mu: f64,
    args: &BenchArgs,
) -> Result<String, CliError> {
    let opts = SolveOptions {
        coupling: coupling.to_string(),
        mu,
        restarts: args.restarts,
        seed: args.seed,
        lines: args.lines,
        binarize_eps: args.eps,
        ..SolveOptions::default()
    };
    let started = Instant::now();
    let report: SolveReport = run_solve(graph, &opts).map_err(map_solve_error)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let restarts = report.restarts.len() as f64;
    let mean_cut: f64 = report.restarts.iter().map(|r| r.best_cut).sum::<f64>() / restarts;
    let binarized = report
        .restarts
        .iter()
        .filter(|r| r.binarization.all_binarized)
        .count() as f64
        / restarts;

    let config = RunConfig {
        graph: path.to_string(),
        coupling: coupling.to_string(),
        mu,
        k: opts.k_coupling,
        rtol: opts.rtol,
        atol: opts.atol,
        grad_tol: opts.grad_tol,
        t_max: opts.t_max,
        restarts: opts.restarts,
        seed: opts.seed,
        lines: opts.lines,
        binarize_eps: opts.binarize_eps,
        record_every: opts.record_every,
        out: None,
        trajectory: None,
    };
    Ok(format!(
        "{path},{coupling},{mu},{},{mean_cut},{binarized},{wall_ms:.1},{}",
        report.best.cut,
        config_hash(&config)
    ))
}

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    let mut rows = vec![String::from(
        "instance,coupling,mu,best_cut,mean_cut,binarization_rate,wall_time_ms,config_hash",
    )];
    for path in &args.graphs {
        let graph = load_graph(path)?;
        for coupling in &args.couplings {
            for &mu in &args.mus {
                rows.push(bench_cell(path, &graph, coupling, mu, &args)?);
            }
        }
    }
    emit(args.out.as_deref(), &rows.join("\n"))
}
