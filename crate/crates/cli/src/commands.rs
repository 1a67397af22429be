use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use cfa_core::bench::{generate, metrics, pc_baseline, GroundTruth, InstanceClass, InstanceSpec};
use cfa_core::branch_bound::{certify_with, BbConfig, StdClock};
use cfa_core::cg::{solve_cg, Algorithm, CgConfig, CgOutcome};
use cfa_core::linalg::{lambda_min, sym_eigenvalues};
use cfa_core::phi_admm::solve_mtfa;
use cfa_core::{ProblemSpec, SymMatrix};
use log::{info, warn};

use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, read_matrix, sink, write_json, write_matrix};
use crate::report::{
    algorithm_name, certify_report, explained_variance, status_name, Metrics, ProgressRecord, SolveReport,
    TraceRecord, TruthFile,
};
use crate::{AlgorithmArg, BenchArgs, CertifyArgs, DatagenArgs, InstanceArgs, ModelArgs, SolveArgs, SweepArgs};

const MTFA_TOL: f64 = 1e-9;

struct Loaded {
    sigma: SymMatrix,
    truth: Option<GroundTruth>,
}

fn load(model: &ModelArgs) -> CliResult<Loaded> {
    let sigma = read_matrix(&model.input)?;
    let truth = match &model.truth {
        Some(path) => {
            let f = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            let tf: TruthFile = serde_json::from_reader(std::io::BufReader::new(f))?;
            Some(tf.into_truth(sigma.clone())?)
        }
        None => None,
    };
    Ok(Loaded { sigma, truth })
}

fn problem(model: &ModelArgs, sigma: SymMatrix, r: usize) -> CliResult<ProblemSpec> {
    Ok(ProblemSpec::new(sigma, r, model.q)?.with_tolerances(model.tol, model.admm_tol_factor)?)
}

fn cg_config(model: &ModelArgs) -> CgConfig {
    let mut cfg = CgConfig {
        max_iter: model.max_iter,
        restarts: model.restarts.max(1),
        seed: model.seed,
        accept_inexact: !model.strict,
        ..CgConfig::default()
    };
    if let Some(n) = model.admm_max_iter {
        cfg.admm.max_iter = n;
    }
    cfg
}

fn algorithm(model: &ModelArgs) -> Algorithm {
    match model.algorithm {
        AlgorithmArg::Auto => Algorithm::default_for(model.q),
        AlgorithmArg::Alg1 => Algorithm::Smooth,
        AlgorithmArg::Alg2 => Algorithm::Concave,
    }
}

fn run_cg(
    model: &ModelArgs,
    spec: &ProblemSpec,
    observer: &mut dyn FnMut(&cfa_core::cg::CgIterate),
) -> CliResult<CgOutcome> {
    let out = solve_cg(spec, algorithm(model), &cg_config(model), None, observer)?;
    let inexact = out.trace.iter().filter(|t| !t.admm_converged).count();
    if inexact > 0 {
        warn!("{inexact} conditional-gradient steps used an inexact inner solve");
    }
    Ok(out)
}

fn solve_report(
    sigma: &SymMatrix,
    spec: &ProblemSpec,
    out: &CgOutcome,
    truth: Option<&GroundTruth>,
    wall_ms: f64,
) -> CliResult<SolveReport> {
    let sol = &out.solution;
    let ev = sym_eigenvalues(&sol.theta)?;
    Ok(SolveReport {
        p: sigma.dim(),
        r: spec.r,
        q: spec.q,
        algorithm: algorithm_name(out.algorithm),
        status: status_name(out.status),
        objective: sol.objective,
        phi: sol.phi.0.clone(),
        explained_variance: explained_variance(sigma, &sol.phi, &ev, spec.r),
        lambda_min: lambda_min(&sigma.sub_diag(&sol.phi)),
        theta_eigenvalues: ev,
        iterations: out.iterations(),
        inexact_steps: out.trace.iter().filter(|t| !t.admm_converged).count(),
        wall_ms,
        metrics: truth.map(|g| metrics(g, &sol.phi, &sol.theta, spec.r).into()),
    })
}

pub fn solve(args: &SolveArgs) -> CliResult<()> {
    let Loaded { sigma, truth } = load(&args.model)?;
    let spec = problem(&args.model, sigma.clone(), args.rank)?;
    let mut trace = match &args.trace {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    let mut trace_err = None;
    let t = Instant::now();
    let out = run_cg(&args.model, &spec, &mut |it| {
        if let Some(w) = trace.as_mut() {
            if let Err(e) = write_json(w, &TraceRecord::from(it)) {
                trace_err.get_or_insert(e);
            }
        }
    })?;
    let wall_ms = 1e3 * t.elapsed().as_secs_f64();
    if let Some(e) = trace_err {
        return Err(e);
    }
    if let Some(mut w) = trace {
        w.flush()?;
    }
    info!("objective {} after {} iterations", out.solution.objective, out.iterations());
    let rep = solve_report(&sigma, &spec, &out, truth.as_ref(), wall_ms)?;
    let mut w = sink(args.output.as_deref())?;
    write_json(&mut w, &rep)?;
    w.flush()?;
    Ok(())
}

pub fn certify(args: &CertifyArgs) -> CliResult<()> {
    if args.model.q != 1.0 {
        return Err(CliError::input("certify requires --q 1"));
    }
    let Loaded { sigma, .. } = load(&args.model)?;
    let spec = problem(&args.model, sigma.clone(), args.rank)?;
    let cfg = BbConfig {
        tol: args.bb_tol,
        epsilon: args.epsilon,
        beta: args.beta,
        node_cap: args.node_cap,
        time_cap: args.time_cap.unwrap_or(f64::INFINITY),
        rng_seed: args.model.seed,
        root_tighten: !args.no_tighten,
        jobs: args.jobs.max(1),
        ..BbConfig::default()
    };
    let mut progress = match &args.progress {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    let mut progress_err = None;
    let rep = certify_with(&spec, &cfg, &StdClock::start(), &mut |e| {
        if let Some(w) = progress.as_mut() {
            let res = write_json(w, &ProgressRecord::from(e)).and_then(|_| Ok(w.flush()?));
            if let Err(e) = res {
                progress_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = progress_err {
        return Err(e);
    }
    info!(
        "{:?} after {} nodes: z_f {} z_lb {}",
        rep.termination, rep.nodes_processed, rep.z_f, rep.z_lb
    );
    let mut w = sink(args.output.as_deref())?;
    write_json(&mut w, &certify_report(&sigma, args.rank, &rep)?)?;
    w.flush()?;
    Ok(())
}

fn instance_spec(a: &InstanceArgs, seed: u64) -> CliResult<InstanceSpec> {
    let class: InstanceClass = a.class.parse()?;
    let spec = InstanceSpec {
        class,
        p: a.p,
        big_r: if class == InstanceClass::A2 { a.p } else { a.big_r },
        r_inner: a.r_inner,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn datagen(args: &DatagenArgs) -> CliResult<()> {
    let g = generate(&instance_spec(&args.instance, args.instance.seed)?)?;
    let csv = with_ext(&args.output, "csv");
    let json = with_ext(&args.output, "json");
    write_matrix(&csv, &g.sigma)?;
    let mut w = BufWriter::new(File::create(&json)?);
    write_json(&mut w, &TruthFile::from_truth(&g))?;
    w.flush()?;
    info!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

const BENCH_HEADER: [&str; 12] = [
    "instance",
    "seed",
    "method",
    "r",
    "objective",
    "error_phi",
    "explained_variance",
    "error_theta",
    "lambda_min",
    "theta_rank",
    "iterations",
    "wall_ms",
];

fn bench_rows(spec: &InstanceSpec, r: usize, q: f64) -> CliResult<Vec<Vec<String>>> {
    let g = generate(spec)?;
    let label = spec.label();
    let mut rows = Vec::new();
    let mut push = |method: &str, phi: &[f64], theta: &SymMatrix, objective: f64, iterations: usize, ms: f64| {
        let m = metrics(&g, phi, theta, r);
        let rank = cfa_core::linalg::numerical_rank(theta, cfa_core::linalg::MTFA_RANK_TOL);
        rows.push(vec![
            label.clone(),
            spec.seed.to_string(),
            method.to_string(),
            r.to_string(),
            fmt_f64(objective),
            fmt_f64(m.error_phi),
            fmt_f64(m.explained_variance),
            fmt_f64(m.error_theta),
            fmt_f64(m.lambda_min),
            rank.to_string(),
            iterations.to_string(),
            fmt_f64(ms),
        ]);
    };

    let pspec = ProblemSpec::new(g.sigma.clone(), r, q)?;
    let t = Instant::now();
    let out = solve_cg(&pspec, Algorithm::default_for(q), &CgConfig::default(), None, &mut |_| {})?;
    let ms = 1e3 * t.elapsed().as_secs_f64();
    let name = format!("cfa{}", fmt_q(q));
    push(&name, &out.solution.phi, &out.solution.theta, out.solution.objective, out.iterations(), ms);

    let t = Instant::now();
    let (phi, theta) = pc_baseline(&g.sigma, r);
    let ms = 1e3 * t.elapsed().as_secs_f64();
    let obj = cfa_core::model::trailing_objective(&g.sigma, &phi, r, q);
    push("pc", &phi, &theta, obj, 0, ms);

    let t = Instant::now();
    let (phi, theta) = solve_mtfa(&g.sigma, MTFA_TOL)?;
    let ms = 1e3 * t.elapsed().as_secs_f64();
    let obj = cfa_core::model::trailing_objective(&g.sigma, &phi, r, q);
    push("mtfa", &phi, &theta, obj, 0, ms);
    Ok(rows)
}

fn fmt_q(q: f64) -> String {
    if q.fract() == 0.0 {
        format!("{q:.0}")
    } else {
        q.to_string()
    }
}

pub fn bench(args: &BenchArgs) -> CliResult<()> {
    let specs = (0..args.seeds as u64)
        .map(|k| instance_spec(&args.instance, args.instance.seed + k))
        .collect::<CliResult<Vec<_>>>()?;
    let r = match args.rank {
        Some(r) => r,
        None => specs
            .first()
            .map(|s| s.big_r.saturating_sub(1))
            .ok_or_else(|| CliError::input("--seeds must be at least 1"))?,
    };
    let results: Mutex<Vec<Option<CliResult<Vec<Vec<String>>>>>> =
        Mutex::new((0..specs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..args.jobs.clamp(1, specs.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(spec) = specs.get(k) else { break };
                let res = bench_rows(spec, r, args.q);
                info!("{} seed {} done", spec.label(), spec.seed);
                results.lock().unwrap()[k] = Some(res);
            });
        }
    });
    let mut w = csv::Writer::from_writer(sink(args.output.as_deref())?);
    w.write_record(BENCH_HEADER)?;
    for res in results.into_inner().unwrap() {
        for row in res.expect("every instance ran")? {
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses `1,2,5`, `1:10` or a mix such as `1:3,7`.
pub fn parse_ranks(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::input(format!("invalid rank list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once(':') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let ranks = parse_ranks(&args.sweep_ranks)?;
    let Loaded { sigma, truth } = load(&args.model)?;
    let mut header = vec!["r", "objective", "explained_variance", "lambda_min", "iterations", "wall_ms"];
    if truth.is_some() {
        header.extend(["error_phi", "error_theta"]);
    }
    let mut w = csv::Writer::from_writer(sink(args.output.as_deref())?);
    w.write_record(&header)?;
    for r in ranks {
        let spec = problem(&args.model, sigma.clone(), r)?;
        let t = Instant::now();
        let out = run_cg(&args.model, &spec, &mut |_| {})?;
        let rep = solve_report(&sigma, &spec, &out, truth.as_ref(), 1e3 * t.elapsed().as_secs_f64())?;
        let mut row = vec![
            r.to_string(),
            fmt_f64(rep.objective),
            fmt_f64(rep.explained_variance),
            fmt_f64(rep.lambda_min),
            rep.iterations.to_string(),
            fmt_f64(rep.wall_ms),
        ];
        if let Some(Metrics { error_phi, error_theta, .. }) = rep.metrics {
            row.extend([fmt_f64(error_phi), fmt_f64(error_theta)]);
        }
        w.write_record(&row)?;
        w.flush()?;
    }
    Ok(())
}
