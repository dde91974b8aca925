//! `magnus-delay`: run, converge, validate-history and epidemic subcommands
//! over JSON configs. Exit codes: 0 success, 1 acceptance or strict failure
//! (or a run that aborted), 2 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use magnus_delay::config::{ColumnsConfig, ModelConfig, ModelHandle, Plan, ReferenceConfig, RunConfig};
use magnus_delay::harness::{
    convergence_study, invariant_report, scalar_oracle, telescoping, ConvergenceStudy,
    ReferenceMode,
};
use magnus_delay::output::{
    auto_columns, write_drift_csv, write_fields_csv, write_file, write_json,
    write_order_table_csv, write_trajectory_csv, Columns,
};
use magnus_delay::{HarnessError, Result};
use magnus_delay_core::magnus::validate_history_compatibility;
use magnus_delay_core::{run, Error};
use serde_json::json;

#[derive(Parser)]
#[command(name = "magnus-delay", version, about = "Magnus-type integrator for delay evolution equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate at one resolution N and write the trajectory and a run report.
    Run(Common),
    /// Measure errors and observed orders over N_list.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Exit 1 unless the trailing orders lie in the configured window.
        #[arg(long)]
        check: bool,
    },
    /// Print the boundary-condition residuals of the initial history.
    ValidateHistory {
        #[command(flatten)]
        common: Common,
        /// Exit 1 when a residual exceeds the threshold.
        #[arg(long)]
        strict: bool,
    },
    /// Like `run` for the epidemic model, also writing S/I/R field snapshots.
    Epidemic(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Validate and print the resolved plan without writing anything.
    #[arg(long)]
    dry_run: bool,
    /// Worker threads for parallel sweeps.
    #[arg(long, value_name = "K")]
    threads: Option<usize>,
}

enum Outcome {
    Success,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => setup(c).and_then(|cfg| cmd_run(c, &cfg, false)),
        Command::Epidemic(c) => setup(c).and_then(|cfg| cmd_run(c, &cfg, true)),
        Command::Converge { common, check } => setup(common).and_then(|cfg| cmd_converge(common, &cfg, *check)),
        Command::ValidateHistory { common, strict } => {
            setup(common).and_then(|cfg| cmd_validate_history(common, &cfg, *strict))
        }
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Config(_)
        | HarnessError::Study(_)
        | HarnessError::Unsupported(_)
        | HarnessError::Core(Error::Config(_) | Error::DimensionMismatch { .. }) => 2,
        _ => 1,
    }
}

fn setup(c: &Common) -> Result<RunConfig> {
    if let Some(k) = c.threads {
        if k == 0 {
            return Err(HarnessError::Study("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| HarnessError::Study(e.to_string()))?;
    }
    RunConfig::from_path(&c.config)
}

fn out_dir(c: &Common, cfg: &RunConfig) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn required(v: Option<usize>, name: &str) -> Result<usize> {
    v.ok_or_else(|| magnus_delay::config::ConfigError::at(name, "is required for this command").into())
}

fn model_name(cfg: &RunConfig) -> &'static str {
    match cfg.model {
        ModelConfig::Scalar(_) => "scalar",
        ModelConfig::Epidemic(_) => "epidemic",
    }
}

fn columns(cfg: &RunConfig, dim: usize) -> Columns {
    match cfg.output.columns {
        ColumnsConfig::Auto => auto_columns(dim),
        ColumnsConfig::Components => Columns::Components,
        ColumnsConfig::Blocks => Columns::Blocks,
    }
}

fn print_plan(value: &serde_json::Value) -> Result<()> {
    write_json(std::io::stdout().lock(), value)
}

fn cmd_run(c: &Common, cfg: &RunConfig, fields: bool) -> Result<Outcome> {
    let n = required(cfg.n, "N")?;
    let plan = cfg.plan()?;
    let grid = match (&plan.model, fields) {
        (ModelHandle::Epidemic(m), true) => Some(*m.grid()),
        (_, true) => {
            return Err(magnus_delay::config::ConfigError::at("model", "the epidemic command needs an epidemic model").into())
        }
        _ => None,
    };
    let disc = plan.spec.discretize(n)?;
    let dir = out_dir(c, cfg);
    let mut files = vec!["trajectory.csv", "drift.csv", "report.json"];
    if fields {
        files.extend(["fields_initial.csv", "fields_final.csv"]);
    }
    if c.dry_run {
        return print_plan(&json!({
            "command": if fields { "epidemic" } else { "run" },
            "model": model_name(cfg),
            "dim": plan.spec.generator.dim(),
            "delay": { "family": plan.spec.family.name(), "delta": plan.spec.window.delta(),
                       "epsilon": plan.spec.window.epsilon(), "weights": disc.weights() },
            "N": n,
            "tau": disc.tau(),
            "T": plan.spec.horizon,
            "steps": plan.spec.step_count(n),
            "out": dir.join("").display().to_string(),
            "files": files,
        }))
        .map(|_| Outcome::Success);
    }
    prepare_dir(&dir)?;
    let start = Instant::now();
    let out = match run(&plan.spec, n, plan.options) {
        Ok(out) => out,
        Err(e @ Error::GuardViolation { .. }) => {
            eprintln!("run aborted: {e}");
            return Ok(Outcome::Failed);
        }
        Err(e) => return Err(e.into()),
    };
    let wall = start.elapsed();
    eprintln!("wall time: {:.3} s", wall.as_secs_f64());
    let report = invariant_report(&out, cfg.output.timing.then_some(wall));
    let cols = columns(cfg, plan.spec.generator.dim());
    write_file(&dir.join("trajectory.csv"), |w| write_trajectory_csv(w, &out.trajectory, cols))?;
    write_file(&dir.join("drift.csv"), |w| write_drift_csv(w, &out.metrics))?;
    write_file(&dir.join("report.json"), |w| write_json(w, &report))?;
    if let Some(grid) = grid {
        let first = out.trajectory.states.first().expect("initial state");
        let last = out.trajectory.last().expect("initial state");
        write_file(&dir.join("fields_initial.csv"), |w| write_fields_csv(w, &grid, first))?;
        write_file(&dir.join("fields_final.csv"), |w| write_fields_csv(w, &grid, last))?;
    }
    if report.guard_violations > 0 {
        eprintln!(
            "warning: {} guard violations (min component {:.3e}, max mass drift {:.3e})",
            report.guard_violations, report.min_component, report.max_mass_drift
        );
    }
    Ok(Outcome::Success)
}

fn build_study(cfg: &RunConfig, plan: &Plan) -> Result<ConvergenceStudy> {
    let n_list = cfg
        .n_list
        .clone()
        .ok_or_else(|| HarnessError::from(magnus_delay::config::ConfigError::at("N_list", "is required for this command")))?;
    let mode = match cfg.study.reference {
        ReferenceConfig::Grid => ReferenceMode::Grid,
        ReferenceConfig::Oracle => ReferenceMode::Oracle,
    };
    let n_ref = match mode {
        ReferenceMode::Grid => required(cfg.n_ref, "N_ref")?,
        ReferenceMode::Oracle => cfg.n_ref.unwrap_or(0),
    };
    let mut study = ConvergenceStudy::new(plan.spec.clone(), n_list, n_ref).with_options(plan.options);
    study.cross_tol = cfg.study.cross_tol.0;
    let wants_oracle = mode == ReferenceMode::Oracle || cfg.study.cross_validate;
    match (&plan.model, wants_oracle) {
        (ModelHandle::Scalar { rate }, true) => {
            let oracle = Arc::new(scalar_oracle(&plan.spec, *rate)?);
            study = study.with_oracle(oracle, mode);
        }
        (ModelHandle::Epidemic(_), true) if mode == ReferenceMode::Oracle => {
            return Err(magnus_delay::config::ConfigError::at(
                "study.reference",
                "the oracle reference exists for the scalar model only",
            )
            .into())
        }
        _ => {}
    }
    study.validate()?;
    Ok(study)
}

fn cmd_converge(c: &Common, cfg: &RunConfig, check: bool) -> Result<Outcome> {
    let plan = cfg.plan()?;
    let study = build_study(cfg, &plan)?;
    for &n in &study.n_list {
        plan.spec.discretize(n)?;
    }
    let dir = out_dir(c, cfg);
    if c.dry_run {
        return print_plan(&json!({
            "command": "converge",
            "model": model_name(cfg),
            "dim": plan.spec.generator.dim(),
            "delay": { "family": plan.spec.family.name(), "delta": plan.spec.window.delta(),
                       "epsilon": plan.spec.window.epsilon() },
            "N_list": study.n_list,
            "N_ref": cfg.n_ref,
            "reference": match study.mode { ReferenceMode::Grid => "grid", ReferenceMode::Oracle => "oracle" },
            "cross_validate": study.oracle.is_some() && study.mode == ReferenceMode::Grid,
            "T": plan.spec.horizon,
            "out": dir.join("").display().to_string(),
            "files": ["order_table.csv", "convergence.json"],
        }))
        .map(|_| Outcome::Success);
    }
    prepare_dir(&dir)?;
    let residuals = validate_history_compatibility(&plan.spec, cfg.compatibility.resolution, cfg.compatibility.threshold.0).ok();
    let start = Instant::now();
    let table = convergence_study(&study)?;
    let tele = if cfg.study.telescoping && study.mode == ReferenceMode::Grid {
        Some(telescoping(&study)?)
    } else {
        None
    };
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    let [lo, hi] = cfg.study.window;
    let within = table.last_orders_within(lo.0, hi.0, cfg.study.consecutive);
    let incompatible = residuals.as_ref().map(|r| !r.compatible());
    if incompatible == Some(true) {
        eprintln!("warning: the initial history violates the boundary conditions; second order is not guaranteed");
    }
    write_file(&dir.join("order_table.csv"), |w| write_order_table_csv(w, &table))?;
    let summary = json!({
        "table": table,
        "window": [lo.0, hi.0],
        "consecutive": cfg.study.consecutive,
        "orders_within_window": within,
        "history_residuals": residuals.map(|r| json!({"r1": r.r1, "r2": r.r2, "threshold": r.threshold})),
        "incompatible_history": incompatible,
        "telescoping": tele,
    });
    write_file(&dir.join("convergence.json"), |w| write_json(w, &summary))?;
    for r in &table.rows {
        let order = match r.order {
            Some(o) => o.value().map_or("floor".to_string(), |p| format!("{p:.3}")),
            None => "-".into(),
        };
        match r.error {
            Some(e) => println!("N = {:>6}  error = {e:.3e}  order = {order}", r.n),
            None => println!("N = {:>6}  failed: {}", r.n, r.failure.as_deref().unwrap_or("")),
        }
    }
    println!("orders within [{}, {}]: {}", lo.0, hi.0, if within { "yes" } else { "no" });
    Ok(if check && !within { Outcome::Failed } else { Outcome::Success })
}

fn cmd_validate_history(c: &Common, cfg: &RunConfig, strict: bool) -> Result<Outcome> {
    let plan = cfg.plan()?;
    if !plan.spec.history.is_analytic() {
        return Err(magnus_delay::config::ConfigError::at(
            "model",
            "a tabulated history has no derivatives; the boundary residuals need an analytic history \
             providing phi, phi' and phi''",
        )
        .into());
    }
    let res = cfg.compatibility.resolution;
    plan.spec.discretize(res)?;
    if c.dry_run {
        return print_plan(&json!({
            "command": "validate-history",
            "model": model_name(cfg),
            "resolution": res,
            "threshold": cfg.compatibility.threshold.0,
        }))
        .map(|_| Outcome::Success);
    }
    let r = validate_history_compatibility(&plan.spec, res, cfg.compatibility.threshold.0)?;
    let verdict = |ok: bool| if ok { "pass" } else { "fail" };
    println!("r1 = {:.6e}  ({})", r.r1, verdict(r.first_passes()));
    println!("r2 = {:.6e}  ({})", r.r2, verdict(r.second_passes()));
    println!("threshold = {:e}, resolution = {}", r.threshold, r.resolution);
    Ok(if strict && !r.compatible() { Outcome::Failed } else { Outcome::Success })
}
