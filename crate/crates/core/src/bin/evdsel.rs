use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use evd_select::pipeline::{
    build_report, emit_report, ingest_csv, read_json, run_calibration, run_inference,
    run_selection, write_json, CalibrationStage, Dataset, RunConfig, SelectionStage, Stamped,
    REPORT_FILE,
};
use evd_select::{Error, Stage};

const CALIBRATION_FILE: &str = "calibration.json";
const SELECTION_FILE: &str = "selection.json";
const FAILURE_FILE: &str = "failure.json";

/// Bayesian selection of the extreme-value domain of attraction of block maxima.
#[derive(Parser)]
#[command(name = "evdsel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the Gumbel, Fréchet and Weibull priors on the expert quantiles.
    Calibrate(Common),
    /// Pick compatible virtual sizes, reusing calibration.json when it matches.
    Select(Common),
    /// Run every stage and write the report.
    Run(Common),
    /// Run inference and write the report from an existing selection.json.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV of `label,value` block maxima; overrides the configuration.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Serialize)]
struct Failure {
    status: &'static str,
    stage: Option<Stage>,
    error: String,
}

struct Ctx {
    cfg: RunConfig,
    data_path: Option<PathBuf>,
    out: PathBuf,
    verbose: bool,
    start: Instant,
}

impl Ctx {
    fn new(c: Common) -> Result<Self, Error> {
        let (mut cfg, base) = match &c.config {
            Some(p) => (RunConfig::load(p)?, p.parent().map(Path::to_path_buf)),
            None => (RunConfig::default(), None),
        };
        if let Some(s) = c.seed {
            cfg.seed = s;
        }
        let data_path = c.data.or_else(|| {
            cfg.data
                .as_ref()
                .map(|d| base.unwrap_or_default().join(d))
        });
        std::fs::create_dir_all(&c.out)?;
        Ok(Self {
            cfg,
            data_path,
            out: c.out,
            verbose: c.verbose,
            start: Instant::now(),
        })
    }

    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("[{:7.1}s] {msg}", self.start.elapsed().as_secs_f64());
        }
    }

    fn data(&self) -> Result<Dataset, Error> {
        let p = self
            .data_path
            .as_ref()
            .ok_or_else(|| Error::Data("no data file given (--data or config `data`)".into()))?;
        let d = ingest_csv(p)?;
        self.log(&format!("read {} values from {}", d.len(), p.display()));
        Ok(d)
    }

    fn calibration(&self) -> Result<CalibrationStage, Error> {
        let path = self.out.join(CALIBRATION_FILE);
        if let Ok(s) = read_json::<Stamped<CalibrationStage>>(&path) {
            if s.matches(&self.cfg) {
                self.log(&format!("reusing {}", path.display()));
                return Ok(s.output);
            }
            self.log(&format!("{} was produced by another configuration", path.display()));
        }
        self.log("calibrating priors");
        let cal = run_calibration(&self.cfg)?;
        write_json(&Stamped::new(&self.cfg, &cal), &path)?;
        self.log(&format!("wrote {}", path.display()));
        Ok(cal)
    }

    fn selection(&self, cal: &CalibrationStage) -> Result<SelectionStage, Error> {
        self.log("selecting virtual sizes");
        let sel = run_selection(&self.cfg, cal)?;
        self.log(&format!(
            "m* = {} (Fréchet), {} (Weibull)",
            sel.frechet.m_star, sel.weibull.m_star
        ));
        let path = self.out.join(SELECTION_FILE);
        write_json(&Stamped::new(&self.cfg, &sel), &path)?;
        Ok(sel)
    }

    /// Stages 4 and 5; returns whether the chains converged.
    fn report(&self, data: &Dataset, sel: &SelectionStage) -> Result<bool, Error> {
        self.log("running the mixture sampler");
        let draws = run_inference(&self.cfg, data, sel)?;
        let report = build_report(&self.cfg, data, &draws)?;
        emit_report(&report, &draws, &self.out).map_err(|e| e.in_stage(Stage::Report))?;
        self.log(&format!(
            "P(Fréchet, Weibull, Gumbel) = {:.3?}, max R-hat {:.4}",
            report.model_probs, report.diagnostics.max_rhat
        ));
        self.log(&format!("wrote {}", self.out.join(REPORT_FILE).display()));
        for f in &report.flags {
            eprintln!("warning: {f}");
        }
        Ok(report.diagnostics.converged)
    }
}

fn execute(cmd: Command) -> Result<(PathBuf, bool), (Option<PathBuf>, Error)> {
    let (common, which) = match cmd {
        Command::Calibrate(c) => (c, 0),
        Command::Select(c) => (c, 1),
        Command::Run(c) => (c, 2),
        Command::Report(c) => (c, 3),
    };
    let out = common.out.clone();
    let ctx = Ctx::new(common).map_err(|e| (None, e))?;
    let fail = |e: Error| (Some(out.clone()), e);
    let converged = match which {
        0 => {
            ctx.calibration().map_err(fail)?;
            true
        }
        1 => {
            let cal = ctx.calibration().map_err(fail)?;
            ctx.selection(&cal).map_err(fail)?;
            true
        }
        2 => {
            let data = ctx.data().map_err(fail)?;
            let cal = ctx.calibration().map_err(fail)?;
            let sel = ctx.selection(&cal).map_err(fail)?;
            ctx.report(&data, &sel).map_err(fail)?
        }
        _ => {
            let data = ctx.data().map_err(fail)?;
            let path = ctx.out.join(SELECTION_FILE);
            let sel: Stamped<SelectionStage> = read_json(&path).map_err(|e| {
                fail(Error::Config(format!("cannot read {}: {e}", path.display())))
            })?;
            if !sel.matches(&ctx.cfg) {
                eprintln!("warning: {} was produced by another configuration", path.display());
            }
            ctx.report(&data, &sel.output).map_err(fail)?
        }
    };
    Ok((out, converged))
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::Json(_) => 2,
        Error::Data(_) | Error::DataLine { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok((_, true)) => ExitCode::SUCCESS,
        Ok((out, false)) => {
            eprintln!(
                "warning: chains did not converge; see {}",
                out.join(REPORT_FILE).display()
            );
            ExitCode::from(4)
        }
        Err((out, e)) => {
            eprintln!("error: {e}");
            if let Some(out) = out {
                let stage = match &e {
                    Error::Stage { stage, .. } => Some(*stage),
                    _ => None,
                };
                let failure = Failure {
                    status: "failed",
                    stage,
                    error: e.to_string(),
                };
                let _ = write_json(&failure, out.join(FAILURE_FILE));
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
