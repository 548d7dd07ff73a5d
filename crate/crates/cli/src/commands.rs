use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ppd_core::simulate::{run_experiment, ExperimentReport, Scenario, ScenarioId};
use ppd_core::{
    bootstrap_band, build_ppd, estimate, fit, generate, initial_from_mean, multiple_align,
    ppd_barchart, ppd_surface, FunctionSample, FunctionSet, PpdResult,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{self, Domain};

#[derive(Debug, Parser)]
#[command(
    name = "ppd",
    version,
    about = "Shape estimation of functional data under phase noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align the curves at one elasticity weight.
    Align(AlignArgs),
    /// Build the peak-persistence diagram and select the peak count.
    Ppd(DataArgs),
    /// Estimate the shape-constrained curve.
    Estimate(EstimateArgs),
    /// Pointwise bootstrap confidence band for the estimate.
    Bootstrap(BootstrapArgs),
    /// Write a simulated dataset and its true signal.
    Simulate(SimulateArgs),
    /// Compare estimators over replicated simulations.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for the outputs; overrides `output_dir` of the config.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with a `t` column followed by one column per curve.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Elasticity weight; overrides `align.lambda`.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `selection.json` from a previous `ppd` run; without it the diagram is
    /// built first.
    #[arg(long)]
    pub selection: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub estimate: EstimateArgs,
    /// Number of replicates; overrides `bootstrap.B`.
    #[arg(long = "bootstrap-B")]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// 1-4, mixture-a or mixture-b.
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Contents of `selection.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub m: usize,
    pub lambda_star: f64,
    pub persistent_labels: Vec<usize>,
    pub flags: SelectionFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFlags {
    /// No weight of the grid has exactly `m` significant peaks.
    pub lambda_star_inexact: bool,
    /// Weights whose alignment stopped at the iteration limit.
    pub unconverged_lambdas: Vec<f64>,
}

impl From<&PpdResult> for Selection {
    fn from(p: &PpdResult) -> Self {
        Self {
            m: p.m,
            lambda_star: p.lambda_star,
            persistent_labels: p.persistent_labels.clone(),
            flags: SelectionFlags {
                lambda_star_inexact: p.lambda_star_inexact,
                unconverged_lambdas: p.unconverged_lambdas.clone(),
            },
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Align(a) => cmd_align(&a),
        Command::Ppd(a) => cmd_ppd(&a),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Bootstrap(a) => cmd_bootstrap(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
}

fn context(common: &CommonArgs) -> Result<Context> {
    let cfg = RunConfig::load_or_default(common.config.as_deref())?;
    let out = common
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --output-dir".into()))?;
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    Ok(Context { cfg, out })
}

struct Input {
    data: FunctionSet,
    domain: Domain,
    names: Vec<String>,
}

fn load_input(path: &Path, cfg: &RunConfig) -> Result<Input> {
    let table = io::read_table(path)?;
    let data = table.resample(cfg.grid()?)?;
    Ok(Input {
        data,
        domain: table.domain(),
        names: table.names,
    })
}

fn write_single(path: &Path, domain: Domain, name: &str, f: &FunctionSample) -> Result<()> {
    io::write_curves(path, domain, &[name.to_string()], &[f.values()])
}

pub fn cmd_align(args: &AlignArgs) -> Result<()> {
    let ctx = context(&args.data.common)?;
    let input = load_input(&args.data.input, &ctx.cfg)?;
    let mut acfg = ctx.cfg.align.to_config()?;
    if let Some(lambda) = args.lambda {
        acfg.lambda = lambda;
        acfg.validate()?;
    }
    let res = multiple_align(&input.data, &acfg)?;
    let aligned: Vec<&[f64]> = res.aligned.iter().map(|f| f.values()).collect();
    io::write_curves(
        &ctx.out.join("aligned.csv"),
        input.domain,
        &input.names,
        &aligned,
    )?;
    let warps: Vec<&[f64]> = res.warpings.iter().map(|w| w.values()).collect();
    io::write_curves(
        &ctx.out.join("warps.csv"),
        input.domain,
        &input.names,
        &warps,
    )?;
    write_single(&ctx.out.join("mean.csv"), input.domain, "mean", &res.mean)?;
    if !res.converged {
        eprintln!(
            "warning: alignment stopped after {} iterations (final change {:e})",
            res.iterations, res.final_eps
        );
    }
    Ok(())
}

fn write_ppd_outputs(out: &Path, ppd: &PpdResult) -> Result<()> {
    let mut text = String::from("label,start,end,persistence,persistent\n");
    for row in ppd_barchart(ppd) {
        for (start, end) in &row.intervals {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                row.label,
                io::fmt_f64(*start),
                io::fmt_f64(*end),
                io::fmt_f64(row.persistence),
                row.persistent
            ));
        }
    }
    io::write_text(&out.join("ppd_barchart.csv"), &text)?;
    io::write_json(&out.join("ppd_surface.json"), &ppd_surface(ppd))?;
    io::write_json(&out.join("selection.json"), &Selection::from(ppd))
}

pub fn cmd_ppd(args: &DataArgs) -> Result<()> {
    let ctx = context(&args.common)?;
    let input = load_input(&args.input, &ctx.cfg)?;
    let ecfg = ctx.cfg.estimate_config()?;
    let ppd = build_ppd(&input.data, &ecfg.align, &ecfg.ppd)?;
    write_ppd_outputs(&ctx.out, &ppd)
}

/// Selected weight, initial estimate and the fit started from it.
struct FitInputs {
    lambda_star: f64,
    g_init: FunctionSample,
    ghat: FunctionSample,
}

fn fit_inputs(args: &EstimateArgs, ctx: &Context, input: &Input) -> Result<FitInputs> {
    let ecfg = ctx.cfg.estimate_config()?;
    match &args.selection {
        Some(path) => {
            let sel: Selection = io::read_json(path)?;
            let mut acfg = ecfg.align.clone();
            acfg.lambda = sel.lambda_star;
            acfg.validate()?;
            let res = multiple_align(&input.data, &acfg)?;
            let g_init = initial_from_mean(&res.mean, sel.m)?;
            let ghat = fit(&res.aligned, &g_init, &ecfg.fit)?.estimate;
            Ok(FitInputs {
                lambda_star: sel.lambda_star,
                g_init,
                ghat,
            })
        }
        None => {
            let est = estimate(&input.data, &ecfg)?;
            write_ppd_outputs(&ctx.out, &est.ppd)?;
            Ok(FitInputs {
                lambda_star: est.ppd.lambda_star,
                ghat: est.fit.estimate,
                g_init: est.g_init,
            })
        }
    }
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let ctx = context(&args.data.common)?;
    let input = load_input(&args.data.input, &ctx.cfg)?;
    let fitted = fit_inputs(args, &ctx, &input)?;
    write_single(
        &ctx.out.join("ghat.csv"),
        input.domain,
        "ghat",
        &fitted.ghat,
    )?;
    write_single(
        &ctx.out.join("ginit.csv"),
        input.domain,
        "ginit",
        &fitted.g_init,
    )
}

pub fn cmd_bootstrap(args: &BootstrapArgs) -> Result<()> {
    let ctx = context(&args.estimate.data.common)?;
    let input = load_input(&args.estimate.data.input, &ctx.cfg)?;
    let mut bcfg = ctx.cfg.bootstrap_config();
    if let Some(b) = args.replicates {
        bcfg.replicates = b;
    }
    if let Some(alpha) = args.alpha {
        bcfg.alpha = alpha;
    }
    if let Some(seed) = args.seed {
        bcfg.seed = seed;
    }
    bcfg.validate()?;
    if let Some(w) = bcfg.rank_warning() {
        eprintln!("warning: {w}");
    }
    let fitted = fit_inputs(&args.estimate, &ctx, &input)?;
    let acfg = ctx.cfg.align.to_config()?;
    let band = bootstrap_band(
        &input.data,
        &fitted.g_init,
        fitted.lambda_star,
        &acfg,
        &ctx.cfg.fit,
        &bcfg,
    )?;
    if band.dropped > 0 {
        eprintln!(
            "warning: {} of {} replicates failed and were dropped",
            band.dropped, band.replicates
        );
    }
    let t = input.domain.abscissae(band.grid);
    io::write_columns(
        &ctx.out.join("band.csv"),
        &["t".into(), "lower".into(), "upper".into()],
        &[&t, &band.lower, &band.upper],
    )?;
    write_single(
        &ctx.out.join("ghat.csv"),
        input.domain,
        "ghat",
        &fitted.ghat,
    )
}

fn parse_scenario(s: &str) -> Result<ScenarioId> {
    s.parse::<ScenarioId>()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn scenario(name: &str, seed: Option<u64>, cfg: &RunConfig) -> Result<Scenario> {
    let id = parse_scenario(name)?;
    let base = Scenario::new(id, cfg.grid()?, seed.unwrap_or(cfg.seed));
    let range = base.g_true.max() - base.g_true.min();
    let noise = cfg.noise.to_model(range);
    noise.validate()?;
    Ok(base.with_noise(noise).with_n(cfg.simulate.n))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let ctx = context(&args.common)?;
    let scn = scenario(&args.scenario, args.seed, &ctx.cfg)?;
    let (data, g_true) = generate(&scn)?;
    let names: Vec<String> = (1..=data.len()).map(|i| format!("f{i}")).collect();
    let curves: Vec<&[f64]> = data.iter().map(|f| f.values()).collect();
    io::write_curves(&ctx.out.join("data.csv"), Domain::UNIT, &names, &curves)?;
    write_single(&ctx.out.join("gtrue.csv"), Domain::UNIT, "g", &g_true)
}

/// `report.csv`: one row per replication with the error of every estimator
/// and the selected peak count. Deterministic given the seed; timings go to
/// `timings.csv`.
pub fn report_csv(report: &ExperimentReport) -> String {
    let mut header = vec![
        "rep".to_string(),
        "seed".into(),
        "rmse_cross_sectional".into(),
        "rmse_srvf_zero".into(),
    ];
    header.extend(
        report
            .kappa_grid
            .iter()
            .map(|k| format!("rmse_l2_kappa_{k}")),
    );
    header.extend([
        "rmse_estimate".into(),
        "m".into(),
        "lambda_star".into(),
        "status".into(),
    ]);
    let mut text = header.join(",");
    text.push('\n');
    for r in &report.replications {
        let mut row = vec![
            r.index.to_string(),
            r.seed.to_string(),
            io::fmt_f64(r.rmse_cross_sectional),
        ];
        let l2 = r.rmse_l2.iter().map(|v| io::fmt_f64(*v));
        match &r.pipeline {
            Ok(p) => {
                row.push(io::fmt_f64(p.rmse_srvf_zero));
                row.extend(l2);
                row.extend([
                    io::fmt_f64(p.rmse),
                    p.m.to_string(),
                    io::fmt_f64(p.lambda_star),
                    "ok".into(),
                ]);
            }
            Err(_) => {
                row.push("NaN".into());
                row.extend(l2);
                row.extend(["NaN".into(), String::new(), "NaN".into(), "failed".into()]);
            }
        }
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

fn timings_csv(report: &ExperimentReport) -> String {
    let mut text = String::from("rep,generate,cross_sectional,l2,ppd,fit\n");
    for r in &report.replications {
        let t = &r.timings;
        text.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.index, t.generate, t.cross_sectional, t.l2, t.ppd, t.fit
        ));
    }
    text
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let ctx = context(&args.common)?;
    let scn = scenario(&args.scenario, args.seed, &ctx.cfg)?;
    let ecfg = ctx.cfg.experiment_config(args.reps)?;
    let report = run_experiment(&scn, &ecfg)?;
    for r in &report.replications {
        if let Err(e) = &r.pipeline {
            eprintln!("warning: replication {} failed: {e}", r.index);
        }
    }
    io::write_text(&ctx.out.join("report.csv"), &report_csv(&report))?;
    io::write_text(&ctx.out.join("timings.csv"), &timings_csv(&report))
}
