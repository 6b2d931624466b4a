use std::fs;
use std::path::Path;

use heavytail_core::garch_tail::{solve_tail_index_with, SolverOptions};
use heavytail_core::processes::GarchSpec;
use heavytail_core::tail::default_hill_k;
use heavytail_core::{
    b_empirical, build_matrix, frechet_cdf, hill_estimate, run_experiment, solve_tail_index, BEmpiricalConfig,
    ExperimentConfig, Growth, LimitLaw, MomentFunction, ProcessKind, ProcessSpec, Seeder, TailLaw, VolSpec,
};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{
    BEstimateArgs, ExperimentArgs, GarchAlphaArgs, HillArgs, ProcessArgs, ProcessChoice, SimulateArgs, VolChoice,
};
use crate::output::{ensure_dir, load_config_echo, num, write_text, CsvOut, RunManifest};
use crate::CliError;

fn usage(e: heavytail_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn require_alpha(args: &ProcessArgs, process: &str) -> Result<f64, CliError> {
    args.alpha
        .ok_or_else(|| CliError::Usage(format!("--alpha is required for the {process} process")))
}

/// Builds the process described by the flags; `--alpha` is left to the
/// caller for GARCH, where it overrides the derived tail index.
fn process_from_args(args: &ProcessArgs) -> Result<ProcessSpec, CliError> {
    let choice = args
        .process
        .ok_or_else(|| CliError::Usage("--process is required".into()))?;
    let spec = match choice {
        ProcessChoice::Iid => {
            ProcessSpec::iid(TailLaw::new(require_alpha(args, "iid")?, args.q, args.scale).map_err(usage)?)
        }
        ProcessChoice::Sv => {
            let z = TailLaw::new(require_alpha(args, "sv")?, args.q, args.scale).map_err(usage)?;
            let vol = match args.vol {
                VolChoice::ExpGaussian => VolSpec::ExpGaussianLinear { psi: args.psi.clone(), xi_std: args.xi_std },
                VolChoice::MDependent => VolSpec::MDependent { m: args.m, mu: args.mu, tau: args.tau },
            };
            ProcessSpec::sv(z, vol)
        }
        ProcessChoice::Garch => {
            let a = args.a.clone().or(args.a1.map(|v| vec![v])).unwrap_or_default();
            let b = args.b.clone().or(args.b1.map(|v| vec![v])).unwrap_or_default();
            if a.is_empty() {
                return Err(CliError::Usage("garch needs --a1 or --a".into()));
            }
            ProcessSpec::garch(GarchSpec::new(args.a0, a, b).map_err(usage)?)
        }
    };
    let spec = match args.burn_in {
        Some(b) => spec.with_burn_in(b),
        None => spec,
    };
    spec.validate().map_err(usage)?;
    Ok(spec)
}

fn garch11_margin(spec: &ProcessSpec) -> Option<Result<f64, heavytail_core::Error>> {
    match &spec.kind {
        ProcessKind::Garch(g) => match g.order_one() {
            Some((a1, b1)) if a1 > 0.0 => Some(MomentFunction::new(a1, b1).and_then(|f| f.log_moment())),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SimulateConfig {
    process: ProcessSpec,
    n: usize,
    p: usize,
    seed: u64,
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = match &args.output.manifest {
        Some(path) => load_config_echo::<SimulateConfig>(path, "simulate")?,
        None => SimulateConfig {
            process: process_from_args(&args.process)?,
            n: args.n.ok_or_else(|| CliError::Usage("--n is required".into()))?,
            p: args.p,
            seed: args.seed,
        },
    };
    cfg.process.validate().map_err(usage)?;
    if cfg.n == 0 || cfg.p == 0 {
        return Err(CliError::Usage("n and p must be at least 1".into()));
    }
    if let Some(margin) = garch11_margin(&cfg.process) {
        let margin = margin?;
        eprintln!("E log(a1 Z^2 + b1) = {margin:.6} (quadrature)");
        if margin >= 0.0 {
            return Err(CliError::Runtime("GARCH(1,1) parameters are not strictly stationary".into()));
        }
    }

    let out = args.output.out.as_path();
    ensure_dir(out)?;
    let mut manifest = RunManifest::new("simulate", cfg.seed, &cfg)?;
    let matrix = manifest.time("simulate", || {
        build_matrix(&cfg.process, cfg.p, cfg.n, Seeder::new(cfg.seed).tagged("paths"))
    })?;
    manifest.time("write", || -> Result<(), CliError> {
        let mut csv = CsvOut::create(out, "paths.csv", &["row", "t", "value"])?;
        for (i, row) in matrix.rows().enumerate() {
            for (t, v) in row.iter().enumerate() {
                csv.row(&[i.to_string(), t.to_string(), num(*v)])?;
            }
        }
        csv.finish()
    })?;
    manifest.outputs.push("paths.csv".into());
    manifest.write(out)
}

fn parse_toml_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

fn growth_from_args(args: &ExperimentArgs) -> Option<Growth> {
    args.beta
        .map(Growth::Beta)
        .or(args.kappa.map(Growth::Kappa))
        .or(args.p.map(Growth::Explicit))
}

fn experiment_config(args: &ExperimentArgs, command: &str) -> Result<ExperimentConfig, CliError> {
    if let Some(path) = &args.output.manifest {
        let cfg: ExperimentConfig = load_config_echo(path, command)?;
        cfg.process.validate().map_err(usage)?;
        return Ok(cfg);
    }
    let base = args.config.as_deref().map(parse_toml_config).transpose()?;
    let process = match args.process.process {
        Some(_) => Some(process_from_args(&args.process)?),
        None => None,
    };
    let garch_flags = matches!(args.process.process, Some(ProcessChoice::Garch));
    let mut cfg = match base {
        Some(mut cfg) => {
            if let Some(p) = process {
                cfg.process = p;
            }
            cfg
        }
        None => {
            let process = process.ok_or_else(|| CliError::Usage("--process or --config is required".into()))?;
            let n = args.n.ok_or_else(|| CliError::Usage("--n is required".into()))?;
            let growth = growth_from_args(args)
                .ok_or_else(|| CliError::Usage("one of --beta, --kappa, --p is required".into()))?;
            let reps = args.reps.ok_or_else(|| CliError::Usage("--reps is required".into()))?;
            ExperimentConfig::new(process, n, growth, reps, args.seed.unwrap_or(0))
        }
    };
    // For iid/SV flags, --alpha already went into the noise law.
    if garch_flags || args.process.process.is_none() {
        if let Some(a) = args.process.alpha {
            cfg.alpha = Some(a);
        }
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(g) = growth_from_args(args) {
        cfg.growth = g;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(x) = &args.x_grid {
        cfg.x_grid = x.clone();
    }
    if let Some(t) = args.ks_tol {
        cfg.tolerances.ks_largest = t;
    }
    if let Some(t) = args.spacing_tol {
        cfg.tolerances.ks_spacing = t;
    }
    if let Some(t) = args.ratio_band {
        cfg.tolerances.ratio_band = t;
    }
    if let Some(b) = args.b_reps {
        cfg.b_reps = b;
    }
    if let Some(c) = args.calibration_draws {
        cfg.calibration_draws = c;
    }
    cfg.process.validate().map_err(usage)?;
    Ok(cfg)
}

pub fn eigen(args: ExperimentArgs) -> Result<(), CliError> {
    let cfg = experiment_config(&args, "eigen")?;
    let out = args.output.out.as_path();
    ensure_dir(out)?;
    let mut manifest = RunManifest::new("eigen", cfg.seed, &cfg)?;
    let run = manifest.time("simulate", || heavytail_core::verify::simulate_spectra(&cfg))?;
    manifest.time("write", || -> Result<(), CliError> {
        let mut csv = CsvOut::create(
            out,
            "eigen.csv",
            &["rep", "rank", "lambda", "lambda_normalized", "max_entry_sq", "max_rowsum"],
        )?;
        for (r, rep) in run.reps.iter().enumerate() {
            for (j, &lambda) in rep.eigenvalues.iter().take(cfg.k).enumerate() {
                csv.row(&[
                    r.to_string(),
                    (j + 1).to_string(),
                    num(lambda),
                    num(lambda / run.normalizer),
                    num(rep.max_entry_sq),
                    num(rep.max_row_sum),
                ])?;
            }
        }
        csv.finish()
    })?;
    manifest.outputs.push("eigen.csv".into());
    manifest.details.insert("alpha".into(), json!(run.alpha));
    manifest.details.insert("p".into(), json!(run.p));
    manifest.details.insert("normalizer".into(), json!(run.normalizer));
    manifest.write(out)
}

pub fn verify(args: ExperimentArgs) -> Result<(), CliError> {
    let cfg = experiment_config(&args, "verify")?;
    let out = args.output.out.as_path();
    ensure_dir(out)?;
    let mut manifest = RunManifest::new("verify", cfg.seed, &cfg)?;
    let report = manifest.time("experiment", || run_experiment(&cfg))?;
    let law = LimitLaw::new(report.alpha, report.b_used)?;
    manifest.time("write", || -> Result<(), CliError> {
        write_text(out, "report.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
        let mut csv = CsvOut::create(out, "ecdf.csv", &["x", "empirical", "theoretical"])?;
        for &(x, f) in &report.ecdf_points {
            let theory = if x > 0.0 { frechet_cdf(&law, x)? } else { 0.0 };
            csv.row(&[num(x), num(f), num(theory)])?;
        }
        csv.finish()
    })?;
    manifest.outputs.extend(["report.json".into(), "ecdf.csv".into()]);
    manifest.write(out)?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.checks {
        let status = match (c.enabled, c.passed) {
            (false, _) => "skip",
            (true, true) => "pass",
            (true, false) => "FAIL",
        };
        eprintln!("{status} {} = {:.5} (accept [{}, {}])", c.name, c.value, c.accept[0], c.accept[1]);
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.enabled && !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::Failed(failed.join(", ")))
    }
}

pub fn garch_alpha(args: GarchAlphaArgs) -> Result<(), CliError> {
    let f = MomentFunction::with_nodes(args.a1, args.b1, args.nodes).map_err(usage)?;
    let opts = SolverOptions { tol: args.tol, alpha_max: args.alpha_max, ..SolverOptions::default() };
    let sol = solve_tail_index_with(&f, &opts)?;
    let out = json!({
        "alpha_star": sol.alpha,
        "h_at_alpha_star": sol.h_at_alpha,
        "stationarity_margin": sol.stationarity_margin,
        "quadrature_nodes": sol.quadrature_nodes,
        "evaluations": sol.evaluations,
    });
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}

pub fn b_estimate(args: BEstimateArgs) -> Result<(), CliError> {
    let spec = process_from_args(&args.process)?;
    let alpha = match (&spec.kind, args.process.alpha) {
        (ProcessKind::Garch(_), Some(a)) => a,
        (ProcessKind::Garch(g), None) => match g.order_one() {
            Some((a1, b1)) if a1 > 0.0 => solve_tail_index(&MomentFunction::new(a1, b1).map_err(usage)?, 1e-8)?.alpha,
            _ => return Err(CliError::Usage("--alpha is required for GARCH beyond order (1,1)".into())),
        },
        _ => spec.declared_alpha().expect("iid and sv declare alpha"),
    };
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(CliError::Usage(format!("tail index {alpha} is outside (0,2)")));
    }
    let cfg = BEmpiricalConfig {
        n: args.n,
        p: args.p,
        reps: args.reps,
        x_grid: args.x_grid.clone(),
        min_exceedances: args.min_exceedances,
        calibration_draws: args.calibration_draws,
    };
    info!("estimating b with {} rows", cfg.reps);
    let est = b_empirical(&spec, alpha, &cfg, Seeder::new(args.seed))?;
    let out = json!({ "alpha": alpha, "estimate": est });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

/// Reads a column of numbers: plain one-per-line, or CSV with a header.
fn read_values(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let has_header = first.split(',').next().is_some_and(|f| f.trim().parse::<f64>().is_err());
    if !has_header {
        return text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Runtime(format!("line {}: {e}", i + 1)))
            })
            .collect();
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let idx = reader
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CliError::Usage(format!("no column named {column:?}")))?;
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            rec.get(idx)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Runtime(format!("row {}: {e}", rec.position().map_or(0, |p| p.line()))))
        })
        .collect()
}

pub fn hill(args: HillArgs) -> Result<(), CliError> {
    let values = read_values(&args.input, &args.column)?;
    let k = args.k.unwrap_or_else(|| default_hill_k(values.len()));
    let alpha_hat = hill_estimate(&values, k)?;
    let out = json!({ "alpha_hat": alpha_hat, "k": k, "n": values.len() });
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}
