//! `rankone <experiment> --config FILE [--key value ...]`

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use rankone::config::Config;
use rankone::experiments::{run_all, run_experiment, Experiment, Run};
use rankone::report::{emit_report, ReportFormat};

fn experiment_names() -> Vec<&'static str> {
    let mut v: Vec<_> = Experiment::ALL.iter().map(|e| e.id()).collect();
    v.push("all");
    v
}

#[derive(Debug, Parser)]
#[command(
    name = "rankone",
    version,
    about = "Numerical experiments on rank-one hyperbolic spaces"
)]
struct Cli {
    /// Experiment to run, or `all`.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(experiment_names()))]
    experiment: String,
    /// Flat `key = value` configuration file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// h2 or h3.
    #[arg(long)]
    space: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Half-width of the N̄ box, or `inf`.
    #[arg(long)]
    trunc_radius: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    tail_tol: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    /// Comma-separated radii.
    #[arg(long)]
    r_list: Option<String>,
    #[arg(long)]
    eta_decades: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    /// adaptive or tensor.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    v_max: Option<String>,
    #[arg(long)]
    record_runtime: Option<String>,
}

impl Cli {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => Config::default(),
        };
        let overrides = [
            ("space", &self.space),
            ("lambda", &self.lambda),
            ("seed", &self.seed),
            ("trunc_radius", &self.trunc_radius),
            ("nodes", &self.nodes),
            ("tail_tol", &self.tail_tol),
            ("t_max", &self.t_max),
            ("r_list", &self.r_list),
            ("eta_decades", &self.eta_decades),
            ("out_dir", &self.out_dir),
            ("scheme", &self.scheme),
            ("v_max", &self.v_max),
            ("record_runtime", &self.record_runtime),
        ];
        for (k, v) in overrides {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summarize(run: &Run) -> bool {
    let r = run.report();
    let ok = run.passed();
    let mut line = format!(
        "{:<15} {}",
        r.experiment_id,
        if ok { "PASS" } else { "FAIL" }
    );
    let failed = r.failures();
    if !failed.is_empty() {
        line.push_str(&format!("  failed: {}", failed.join(", ")));
    }
    if let Some(e) = &run.error {
        line.push_str(&format!("  aborted: {e}"));
    }
    println!("{line}");
    ok
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let cfg = cli.config()?;
    let runs = if cli.experiment == "all" {
        run_all(&cfg)?
    } else {
        vec![run_experiment(cli.experiment.parse()?, &cfg)?]
    };
    let mut all_ok = true;
    for run in &runs {
        for format in [ReportFormat::Json, ReportFormat::CsvBundle] {
            emit_report(&run.output, format, &cfg.out_dir)
                .with_context(|| format!("writing reports to {}", cfg.out_dir.display()))?;
        }
        all_ok &= summarize(run);
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
