//! `bslkit` command-line interface: experiment drivers plus ad-hoc sampling
//! and diagnostics.
//!
//! Exit codes: 0 on success, 1 on configuration/usage errors, 2 on runtime
//! errors.

mod svg;

use bslkit::harness::config::{
    load_config_table, resolve_section, AcceptanceRateConfig, BvmConfig, DiagnoseSigma2Config,
    MConvergenceConfig, Ma2CoverageConfig, ModelChoice, Preset, RunSettings, SampleConfig,
    ToadConfig, ToyFigure1Config,
};
use bslkit::harness::io::read_matrix_csv;
use bslkit::harness::{
    run_acceptance_experiment, run_bvm_diagnostic, run_diagnose_sigma2, run_m_convergence,
    run_ma2_coverage, run_sample, run_toad_study, run_toy_figure1,
};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    /// Settings matching the published studies.
    Paper,
    /// Reduced settings that run in minutes.
    Desk,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::Paper => Preset::Paper,
            PresetArg::Desk => Preset::Desk,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Toy,
    Ma2,
    Toad,
}

impl From<ModelArg> for ModelChoice {
    fn from(m: ModelArg) -> ModelChoice {
        match m {
            ModelArg::Toy => ModelChoice::Toy,
            ModelArg::Ma2 => ModelChoice::Ma2,
            ModelArg::Toad => ModelChoice::Toad,
        }
    }
}

/// Synthetic-likelihood experiment runner.
#[derive(Debug, Parser)]
#[command(name = "bslkit", version, about, max_term_width = 100)]
struct Cli {
    /// TOML config file; sections override the chosen preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// RNG seed (default: value from config, else 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: $BSLKIT_OUT, else ./out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Scale preset providing the config defaults.
    #[arg(long, global = true, value_enum)]
    preset: Option<PresetArg>,

    /// Cap the worker pool (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Toy-model posteriors: exact, misspecified BSL, and both adjustments.
    ToyFigure1 {
        /// Also render the density overlay as an SVG line plot.
        #[arg(long)]
        svg: bool,
    },
    /// MA(2) credible-interval coverage study.
    Ma2Coverage,
    /// Toad movement study: standard, shrinkage, and adjusted chains.
    Toad,
    /// Large-sample posterior-normality diagnostic (toy model).
    BvmCheck,
    /// Rejection-sampler acceptance-rate stability across sample sizes.
    AcceptanceRate,
    /// Estimated-vs-idealized posterior discrepancy across the m ladder.
    MConvergence,
    /// One ad-hoc pseudo-marginal chain on synthetic data.
    Sample {
        /// Simulator model.
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// True parameters, comma-separated.
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        /// Simulations per likelihood estimate.
        #[arg(long)]
        m: Option<usize>,
        /// Chain length.
        #[arg(long)]
        q: Option<usize>,
    },
    /// Variance of the log-likelihood estimate at a fixed parameter.
    DiagnoseSigma2 {
        /// Simulator model.
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Parameter value, comma-separated.
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        /// Simulations per likelihood estimate.
        #[arg(long)]
        m: Option<usize>,
        /// Observed sample size / series length.
        #[arg(long)]
        n: Option<usize>,
    },
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    run(cli)
}

fn run(cli: Cli) -> ExitCode {
    // diagnose-sigma2/sample can be fully flag-driven; experiments need a
    // preset or a config file
    let flag_driven = matches!(
        cli.command,
        Command::DiagnoseSigma2 { .. } | Command::Sample { .. }
    );
    if cli.config.is_none() && cli.preset.is_none() && !flag_driven {
        let mut cmd = Cli::command();
        let _ = cmd.print_help();
        eprintln!();
        return fail(
            EXIT_VALIDATION,
            "provide --preset {paper|desk} and/or --config <PATH>",
        );
    }

    let table = match &cli.config {
        Some(path) => match load_config_table(path) {
            Ok(t) => Some(t),
            Err(e) => return fail(EXIT_VALIDATION, e),
        },
        None => None,
    };
    let preset: Preset = cli.preset.map(Into::into).unwrap_or(PresetArg::Desk.into());

    let config_seed = table
        .as_ref()
        .and_then(|t| t.get("seed"))
        .and_then(|v| v.as_integer())
        .map(|v| v as u64);
    let config_out = table
        .as_ref()
        .and_then(|t| t.get("out_dir"))
        .and_then(|v| v.as_str())
        .map(PathBuf::from);
    let settings = RunSettings {
        seed: cli.seed.or(config_seed).unwrap_or(0),
        out_dir: cli
            .out
            .clone()
            .or(config_out)
            .or_else(|| std::env::var_os("BSLKIT_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out")),
    };

    if let Some(n) = cli.threads {
        if let Err(e) = bslkit::configure_threads(n) {
            return fail(EXIT_VALIDATION, e);
        }
    }

    macro_rules! resolve {
        ($ty:ty, $section:expr) => {{
            let cfg: $ty = match resolve_section(<$ty>::preset(preset), table.as_ref(), $section) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_VALIDATION, e),
            };
            if let Err(e) = cfg.validate() {
                return fail(EXIT_VALIDATION, e);
            }
            cfg
        }};
    }

    match &cli.command {
        Command::ToyFigure1 { svg } => {
            let cfg = resolve!(ToyFigure1Config, "toy_figure1");
            match run_toy_figure1(&cfg, &settings) {
                Ok(s) => {
                    let dir = settings.out_dir.join("toy_figure1");
                    if *svg {
                        if let Err(e) = render_figure1_svg(&dir) {
                            return fail(EXIT_RUNTIME, e);
                        }
                    }
                    println!(
                        "toy-figure1: exact mean/sd {:.3}/{:.3}, bsl {:.3}/{:.3}, adjusted \
                         {:.3}/{:.3}, bootstrap {:.3}/{:.3} -> {}",
                        s.exact_mean,
                        s.exact_sd,
                        s.bsl_mean,
                        s.bsl_sd,
                        s.adjusted_mean,
                        s.adjusted_sd,
                        s.bootstrap_mean,
                        s.bootstrap_sd,
                        dir.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::Ma2Coverage => {
            let cfg = resolve!(Ma2CoverageConfig, "ma2_coverage");
            match run_ma2_coverage(&cfg, &settings) {
                Ok(t) => {
                    let cover: Vec<String> = t
                        .rows
                        .iter()
                        .map(|r| {
                            format!(
                                "theta{}@{:.0}%: {:.0}%",
                                r.param + 1,
                                r.level * 100.0,
                                r.coverage * 100.0
                            )
                        })
                        .collect();
                    println!(
                        "ma2-coverage: {} datasets ({} excluded), {} -> {}",
                        t.r_used,
                        t.excluded,
                        cover.join(", "),
                        settings.out_dir.join("ma2_coverage").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::Toad => {
            let cfg = resolve!(ToadConfig, "toad");
            match run_toad_study(&cfg, &settings) {
                Ok(s) => {
                    println!(
                        "toad: acceptance standard {:.1}% / shrinkage {:.1}%, sds standard \
                         {:?} shrinkage {:?} adjusted {:?} -> {}",
                        100.0 * s.acceptance_standard,
                        100.0 * s.acceptance_shrinkage,
                        s.standard.sd,
                        s.shrinkage.sd,
                        s.adjusted.sd,
                        settings.out_dir.join("toad").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::BvmCheck => {
            let cfg = resolve!(BvmConfig, "bvm_check");
            match run_bvm_diagnostic(&cfg, &settings) {
                Ok(r) => {
                    let last = r.rows.last().expect("non-empty ladder");
                    println!(
                        "bvm-check: n={} skew {:.3}, excess kurtosis {:.3}, mean z {:.2}{} -> {}",
                        last.n,
                        last.skewness,
                        last.excess_kurtosis,
                        last.mean_z,
                        r.sd_ratio
                            .map(|s| format!(", sd({})/sd({}) = {:.3}", s.n_large, s.n_small, s.ratio))
                            .unwrap_or_default(),
                        settings.out_dir.join("bvm_check").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::AcceptanceRate => {
            let cfg = resolve!(AcceptanceRateConfig, "acceptance_rate");
            match run_acceptance_experiment(&cfg, &settings) {
                Ok(r) => {
                    println!(
                        "acceptance-rate: max/min ratio {:.2} (fixed-m {:.2}), control slope \
                         {:.2} -> {}",
                        r.main_ratio,
                        r.fixed_m_ratio,
                        r.control_slope,
                        settings.out_dir.join("acceptance_rate").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::MConvergence => {
            let cfg = resolve!(MConvergenceConfig, "m_convergence");
            match run_m_convergence(&cfg, &settings) {
                Ok(r) => {
                    println!(
                        "m-convergence: mean slope {:.2}, sd slope {:.2} -> {}",
                        r.mean_slope,
                        r.sd_slope,
                        settings.out_dir.join("m_convergence").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::Sample { model, theta, m, q } => {
            let mut cfg = resolve!(SampleConfig, "sample");
            if let Some(model) = model {
                cfg.model = (*model).into();
                // flag switches the model: take the preset shape for it
                if theta.is_none() {
                    cfg.theta_true = match cfg.model {
                        ModelChoice::Toy => vec![5.0],
                        ModelChoice::Ma2 => vec![0.6, 0.2],
                        ModelChoice::Toad => vec![1.7, 35.0, 0.6],
                    };
                }
                cfg.rw_scale = match cfg.model {
                    ModelChoice::Toy => vec![0.5],
                    ModelChoice::Ma2 => vec![0.05, 0.05],
                    ModelChoice::Toad => vec![0.02, 1.0, 0.02],
                };
            }
            if let Some(theta) = theta {
                cfg.theta_true = theta.clone();
            }
            if let Some(m) = m {
                cfg.m = *m;
            }
            if let Some(q) = q {
                cfg.q = *q;
            }
            if let Err(e) = cfg.validate() {
                return fail(EXIT_VALIDATION, e);
            }
            match run_sample(&cfg, &settings) {
                Ok(s) => {
                    println!(
                        "sample: acceptance {:.1}%, mean {:?}, sd {:?} -> {}",
                        100.0 * s.acceptance_rate,
                        s.mean,
                        s.sd,
                        settings.out_dir.join("sample").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::DiagnoseSigma2 { model, theta, m, n } => {
            let mut cfg = resolve!(DiagnoseSigma2Config, "diagnose_sigma2");
            if let Some(model) = model {
                cfg.model = (*model).into();
                if theta.is_none() {
                    cfg.theta = match cfg.model {
                        ModelChoice::Toy => vec![5.0],
                        ModelChoice::Ma2 => vec![0.6, 0.2],
                        ModelChoice::Toad => vec![1.7, 35.0, 0.6],
                    };
                }
                if n.is_none() && matches!(cfg.model, ModelChoice::Toy) {
                    cfg.n = 20;
                }
            }
            if let Some(theta) = theta {
                cfg.theta = theta.clone();
            }
            if let Some(m) = m {
                cfg.m = *m;
            }
            if let Some(n) = n {
                cfg.n = *n;
            }
            if let Err(e) = cfg.validate() {
                return fail(EXIT_VALIDATION, e);
            }
            match run_diagnose_sigma2(&cfg, &settings) {
                Ok(r) => {
                    println!(
                        "diagnose-sigma2: sigma^2 = {:.3} at m = {} ({} the 1-3 band) -> {}",
                        r.sigma2,
                        r.m,
                        if r.in_band { "within" } else { "ABOVE" },
                        settings.out_dir.join("diagnose_sigma2").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
    }
}

/// Render `density_grid.csv` from a toy-figure1 run as an SVG overlay.
fn render_figure1_svg(dir: &std::path::Path) -> Result<(), String> {
    let grid = read_matrix_csv(&dir.join("density_grid.csv")).map_err(|e| e.to_string())?;
    let col = |j: usize| -> Vec<f64> { grid.column(j).iter().cloned().collect() };
    let (x, exact, bsl, adj, boot) = (col(0), col(1), col(2), col(3), col(4));
    svg::write_line_svg(
        &dir.join("figure1.svg"),
        "Toy posteriors: exact vs BSL vs adjusted",
        &x,
        &[
            ("exact", &exact),
            ("bsl", &bsl),
            ("adjusted", &adj),
            ("adjusted_bootstrap", &boot),
        ],
    )
    .map_err(|e| e.to_string())
}
