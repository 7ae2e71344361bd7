//! Command-line entry point for memory experiments, sweeps, RL training,
//! ECD fitting, and debug dumps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use surface_ms::error::Error;
use surface_ms::exec::mix_seed;
use surface_ms::harness::{
    compare, detect_crossovers, fit_ecd, rows_to_csv, run_memory, schedule_for, sweep,
    ExperimentConfig, Row, SchedulerKind, SweepKind,
};
use surface_ms::lattice::build_lattice;
use surface_ms::rl::{build_env, train, RewardParams};
use surface_ms::sim::build_memory_circuit;

#[derive(Parser)]
#[command(name = "surface-ms", about = "Surface-code readout scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Experiment config JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's shot budget.
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Output file (CSV or JSON depending on the subcommand); stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Logical error rate per (distance, scheduler).
    RunMemory,
    /// Sweep the data-qubit MER scale alpha.
    SweepAlpha {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1.0,1.5,2.0")]
        grid: Vec<f64>,
    },
    /// Sweep the MER spread scale.
    SweepStd {
        #[arg(long, value_delimiter = ',', default_value = "0.0,0.5,1.0,1.5,2.0")]
        grid: Vec<f64>,
    },
    /// Sweep the idle-degrade coefficient beta; reports crossovers.
    SweepBeta {
        #[arg(long, value_delimiter = ',', default_value = "1,4,8,16")]
        grid: Vec<f64>,
    },
    /// Sweep the RL queue bound m; reports best cost per point.
    SweepDepth {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        grid: Vec<f64>,
    },
    /// Train the RL scheduler once and dump the curve CSV.
    TrainRl {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
    },
    /// Fit effective code distances from a run-memory CSV.
    FitEcd {
        /// CSV produced by run-memory (needs >= 3 distances).
        #[arg(long)]
        rows: PathBuf,
        /// Scheduler label used as the power-law baseline.
        #[arg(long, default_value = "original")]
        baseline: String,
    },
    /// Two-scheduler comparison with bootstrap ratio CI.
    Compare {
        #[arg(long, default_value_t = 5)]
        d: usize,
    },
    /// Dump lattice JSON for one distance.
    DumpLattice {
        #[arg(long, default_value_t = 3)]
        d: usize,
    },
    /// Dump the memory circuit text for one (distance, scheduler).
    DumpCircuit {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value = "ms_local")]
        scheduler: String,
    },
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this subcommand".into()))?;
    let mut cfg = ExperimentConfig::from_json_file(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(s) = cli.shots {
        cfg.shots = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_scheduler(label: &str) -> Result<SchedulerKind, Error> {
    match label {
        "original" => Ok(SchedulerKind::Original),
        "ms_local" => Ok(SchedulerKind::MsLocal),
        other => {
            if let Some(m) = other.strip_prefix("ms_rl_m").and_then(|s| s.parse().ok()) {
                Ok(SchedulerKind::MsRl { m })
            } else {
                Err(Error::Config(format!("unknown scheduler {other:?}")))
            }
        }
    }
}

fn sweep_cmd(cli: &Cli, kind: SweepKind, grid: &[f64]) -> Result<(), Error> {
    let cfg = load_config(cli)?;
    let rows = sweep(kind, grid, &cfg)?;
    let mut text = rows_to_csv(&rows);
    if kind == SweepKind::Beta {
        let notes = detect_crossovers(&rows);
        text.push_str(&format!(
            "# crossovers: {}\n",
            serde_json::to_string(&notes)?
        ));
    }
    emit(&cli.out, &text)
}

fn real_main(cli: &Cli) -> Result<(), Error> {
    match &cli.cmd {
        Cmd::RunMemory => {
            let cfg = load_config(cli)?;
            let rows = run_memory(&cfg)?;
            emit(&cli.out, &rows_to_csv(&rows))
        }
        Cmd::SweepAlpha { grid } => sweep_cmd(cli, SweepKind::Alpha, grid),
        Cmd::SweepStd { grid } => sweep_cmd(cli, SweepKind::Std, grid),
        Cmd::SweepBeta { grid } => sweep_cmd(cli, SweepKind::Beta, grid),
        Cmd::SweepDepth { grid } => sweep_cmd(cli, SweepKind::DepthM, grid),
        Cmd::TrainRl { d, m } => {
            let cfg = load_config(cli)?;
            let lat = build_lattice(*d)?;
            let p = cfg.profile_for(&lat, &cfg.transform)?;
            let env = build_env(&lat, &p, *m)?;
            let r = RewardParams::defaults(&env, &p);
            let mut tc = cfg.train.clone().unwrap_or_default();
            tc.seed = mix_seed(tc.seed, 7, cfg.seed);
            let out = train(&lat, &env, &r, &tc)?;
            let mut text = String::from("epoch,best_cost,mean_reward\n");
            for pt in &out.curve {
                text.push_str(&format!("{},{},{}\n", pt.epoch, pt.best_cost, pt.mean_reward));
            }
            text.push_str(&format!(
                "# best_cost={} tau={} m={m}\n",
                out.best_cost, out.best_schedule.tau
            ));
            emit(&cli.out, &text)
        }
        Cmd::FitEcd { rows, baseline } => {
            let text = std::fs::read_to_string(rows)?;
            let mut parsed: Vec<Row> = Vec::new();
            for line in text.lines().skip(1) {
                if line.starts_with('#') || line.trim().is_empty() {
                    continue;
                }
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 7 {
                    return Err(Error::Config(format!("bad CSV row: {line}")));
                }
                parsed.push(Row {
                    sweep_key: f[0].into(),
                    d: f[1].parse().map_err(|_| Error::Config("bad d".into()))?,
                    scheduler: f[2].into(),
                    value: f[3].parse().unwrap_or(1.0),
                    rate: f[4].parse().map_err(|_| Error::Config("bad rate".into()))?,
                    ci_lo: f[5].parse().unwrap_or(0.0),
                    ci_hi: f[6].parse().unwrap_or(1.0),
                });
            }
            let base: Vec<(usize, f64)> = parsed
                .iter()
                .filter(|r| &r.scheduler == baseline)
                .map(|r| (r.d, r.rate))
                .collect();
            let mut report = serde_json::Map::new();
            for sched in parsed
                .iter()
                .map(|r| r.scheduler.clone())
                .collect::<std::collections::BTreeSet<_>>()
            {
                let comp: Vec<(usize, f64)> = parsed
                    .iter()
                    .filter(|r| r.scheduler == sched)
                    .map(|r| (r.d, r.rate))
                    .collect();
                let fit = fit_ecd(&base, &comp)?;
                report.insert(sched, serde_json::to_value(&fit)?);
            }
            emit(
                &cli.out,
                &format!("{}\n", serde_json::to_string_pretty(&report)?),
            )
        }
        Cmd::Compare { d } => {
            let cfg = load_config(cli)?;
            let rep = compare(&cfg, *d)?;
            emit(
                &cli.out,
                &format!("{}\n", serde_json::to_string_pretty(&rep)?),
            )
        }
        Cmd::DumpLattice { d } => {
            let lat = build_lattice(*d)?;
            emit(
                &cli.out,
                &format!("{}\n", serde_json::to_string_pretty(&lat.to_json())?),
            )
        }
        Cmd::DumpCircuit { d, scheduler } => {
            let cfg = load_config(cli)?;
            let lat = build_lattice(*d)?;
            let p = cfg.profile_for(&lat, &cfg.transform)?;
            let kind = parse_scheduler(scheduler)?;
            let (sched, _) = schedule_for(&lat, &p, &kind, cfg.seed, cfg.train.as_ref())?;
            let mc = build_memory_circuit(&lat, &sched, &p, cfg.rounds, cfg.transform.beta)?;
            emit(&cli.out, &mc.circuit.emit())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NoFeasibleSchedule(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
