use beamfocus::sca::ScaOptions;
use beamfocus_harness::check;
use beamfocus_harness::config::{load_config, Arch, ExperimentConfig, Format, Scale};
use beamfocus_harness::heatmap::{beamfocusing_heatmap, HeatmapGrid};
use beamfocus_harness::sweep::{design_scenario, realize, run_point, run_sweep, RunError, SweepOutcome};
use beamfocus_harness::table::{status, ResultTable};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Energy-efficient hybrid beamfocusing simulator for near-field ISAC.
#[derive(Parser)]
#[command(name = "beamfocus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and emit the result table.
    Sweep(Common),
    /// Design one point and emit its beamfocusing gain over a grid.
    Heatmap {
        #[command(flatten)]
        common: Common,
        /// Half-width of the square window in metres (default: 1.5 × target range).
        #[arg(long)]
        extent: Option<f64>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Switch off the SINR and EE constraints.
        #[arg(long)]
        no_constraints: bool,
    },
    /// Run estimator trials at the base point of the configuration.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Trials per architecture (default: the configured count, or 200).
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run the acceptance checks.
    Check {
        /// Criteria to run; all when empty.
        ids: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; missing keys take the scale defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    /// Architectures to realize (default: the configured list).
    #[arg(long, value_enum)]
    arch: Option<ArchArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Digital,
    Fully,
    Partially,
    All,
}

impl ArchArg {
    fn archs(self) -> Vec<Arch> {
        match self {
            ArchArg::Digital => vec![Arch::Digital],
            ArchArg::Fully => vec![Arch::Fully],
            ArchArg::Partially => vec![Arch::Partially],
            ArchArg::All => Arch::ALL.to_vec(),
        }
    }
}

enum Failure {
    Infeasible(String),
    Internal(String),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Infeasible(_) => Failure::Infeasible(e.to_string()),
            e => Failure::Internal(e.to_string()),
        }
    }
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p, self.scale).map_err(internal)?,
            None => ExperimentConfig::defaults(self.scale),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(p) = &self.out {
            cfg.output.path = Some(p.display().to_string());
        }
        if let Some(a) = self.arch {
            cfg.architectures = a.archs();
        }
        cfg.validate().map_err(internal)?;
        eprintln!("{}", cfg.header().map_err(internal)?);
        Ok(cfg)
    }
}

fn emit(cfg: &ExperimentConfig, text: &str) -> Result<(), Failure> {
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Internal(format!("{p}: {e}"))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(internal),
    }
}

fn emit_table(cfg: &ExperimentConfig, table: &ResultTable) -> Result<(), Failure> {
    let text = match cfg.output.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
    .map_err(internal)?;
    emit(cfg, &text)
}

fn finish(cfg: &ExperimentConfig, outcome: SweepOutcome) -> Result<(), Failure> {
    emit_table(cfg, &outcome.table)?;
    for e in &outcome.errors {
        eprintln!("error: {e}");
    }
    if outcome.table.rows.iter().any(|r| r.metric == "status" && r.value == status::ERROR) {
        return Err(Failure::Internal(format!("{} point(s) failed", outcome.errors.len())));
    }
    if outcome.any_infeasible {
        return Err(Failure::Infeasible("some sweep points are infeasible".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep(common) => {
            let cfg = common.load()?;
            finish(&cfg, run_sweep(&cfg))
        }
        Command::Heatmap { common, extent, points, no_constraints } => {
            let cfg = common.load()?;
            let mut scen = cfg.scenario().map_err(internal)?;
            if no_constraints {
                scen = scen.unconstrained();
            }
            let design = design_scenario(&cfg, scen, &ScaOptions::default())?;
            let (w, _) = realize(&design, cfg.architectures[0])?;
            let grid = HeatmapGrid::square(extent.unwrap_or(1.5 * cfg.target.distance), points);
            let map = beamfocusing_heatmap(&w, &design.scenario.geometry, &grid).map_err(internal)?;
            let (x, y) = map.argmax();
            eprintln!("peak gain at x={x:.4} m, y={y:.4} m");
            emit(&cfg, &map.to_csv())
        }
        Command::Estimate { common, trials } => {
            let mut cfg = common.load()?;
            cfg.trials = trials.unwrap_or(if cfg.trials > 0 { cfg.trials } else { 200 });
            let (rows, errors) = run_point(&cfg, None, 0.0, &ScaOptions::default());
            let mut table = ResultTable::new();
            table.extend(rows);
            table.sort();
            let any_infeasible = table.rows.iter().any(|r| r.metric == "status" && r.value == status::INFEASIBLE);
            finish(&cfg, SweepOutcome { table, errors, any_infeasible })
        }
        Command::Check { ids } => {
            let ids: Vec<usize> = if ids.is_empty() { check::CRITERIA.iter().map(|c| c.0).collect() } else { ids };
            let mut failed = 0;
            for id in &ids {
                let o = check::run(*id).ok_or_else(|| Failure::Internal(format!("unknown criterion {id}")))?;
                failed += !o.pass as usize;
                println!("{o}");
            }
            println!("{}/{} criteria passed", ids.len() - failed, ids.len());
            if failed > 0 {
                return Err(Failure::Internal(format!("{failed} criteria failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible(m)) => {
            eprintln!("infeasible: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
