use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jit_core::cost::{calibrate_attention_share, schedule_cost, CostModel, REPORTED_SPEEDUPS};
use jit_core::io::config::{read_config, RunConfig};
use jit_core::io::jitg::write_grid;
use jit_core::io::pgm::write_pgm_map;
use jit_core::io::report::{cost_csv_row, schedule_csv, write_report, COST_CSV_HEADER};
use jit_core::sampler::run;
use jit_core::schedule::preset;
use jit_core::toy::{reference_solve, relative_l2_error};
use jit_core::{selftest, JitError, Result};

/// Sparse-anchor flow-matching sampler.
#[derive(Parser)]
#[command(name = "jit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler and write the endpoint grid and report.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_grid: Option<PathBuf>,
        #[arg(long)]
        out_report: Option<PathBuf>,
        /// Directory for PGM importance maps, one per transition.
        #[arg(long)]
        dump_importance: Option<PathBuf>,
    },
    /// Print timesteps and stage table as CSV.
    Schedule {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Token count used for the budget column when no config is given.
        #[arg(long, default_value_t = 1024)]
        tokens: usize,
        #[arg(long)]
        invert_time: bool,
    },
    /// Print schedule cost and speedup as CSV.
    BenchCost {
        #[arg(long, required_unless_present = "calibrate")]
        config: Option<PathBuf>,
        /// Fit the attention share to the reported preset speedups.
        #[arg(long)]
        calibrate: bool,
    },
    /// Compare the sampler endpoint with a dense fine-step Euler solve.
    OracleCompare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2000)]
        fine_steps: usize,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn load(path: &Path) -> Result<RunConfig> {
    let (config, warnings) = read_config(path)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(config)
}

fn sample(
    config: &Path,
    out_grid: Option<&Path>,
    out_report: Option<&Path>,
    dump_importance: Option<&Path>,
) -> Result<()> {
    let cfg = load(config)?;
    let schedule = cfg.build_schedule()?;
    let field = cfg.build_field()?;
    let report = run(
        &schedule,
        &field,
        cfg.shape()?,
        cfg.seed,
        &cfg.run_options(),
    )?;
    if let Some(p) = out_grid {
        write_grid(p, &report.endpoint)?;
    }
    if let Some(p) = out_report {
        write_report(p, &report)?;
    }
    if let Some(dir) = dump_importance {
        std::fs::create_dir_all(dir)?;
        for rec in &report.transitions {
            let name = format!("importance_step{:03}.pgm", rec.step_index);
            write_pgm_map(&dir.join(name), &rec.importance_snapshot)?;
        }
    }
    println!(
        "{}: nfe {} speedup {:.4} endpoint mean {:.6} std {:.6}",
        report.schedule,
        report.nfe,
        report.speedup_vs_baseline,
        report.endpoint_stats.mean,
        report.endpoint_stats.std
    );
    Ok(())
}

fn print_schedule(
    preset_name: Option<&str>,
    config: Option<&Path>,
    tokens: usize,
    invert: bool,
) -> Result<()> {
    let (schedule, n) = match (preset_name, config) {
        (Some(name), _) => (preset(name, invert)?, tokens),
        (None, Some(p)) => {
            let cfg = load(p)?;
            (cfg.build_schedule()?, cfg.shape()?.tokens())
        }
        (None, None) => return Err(JitError::Config("give --preset or --config".into())),
    };
    println!(
        "# {} stages {} nfe {}",
        schedule.name,
        schedule.n_stages(),
        schedule.nfe()
    );
    print!("{}", schedule_csv(&schedule, n)?);
    Ok(())
}

fn bench_cost(config: Option<&Path>, calibrate: bool) -> Result<()> {
    let mut n_tokens = 4096;
    let mut baseline_steps = 50;
    if let Some(p) = config {
        let cfg = load(p)?;
        n_tokens = cfg.shape()?.tokens();
        baseline_steps = cfg.baseline_steps;
        let schedule = cfg.build_schedule()?;
        let cost = schedule_cost(&schedule, n_tokens, &cfg.cost, baseline_steps)?;
        println!("{COST_CSV_HEADER}");
        println!("{}", cost_csv_row(&schedule.name, &cfg.cost, &cost));
    }
    if calibrate {
        let targets = REPORTED_SPEEDUPS
            .iter()
            .map(|(name, s)| Ok((preset(name, false)?, *s)))
            .collect::<Result<Vec<_>>>()?;
        let cal = calibrate_attention_share(&targets, n_tokens, baseline_steps)?;
        let model = CostModel::normalized(cal.attention_share, n_tokens);
        println!("# attention_share {}", cal.attention_share);
        println!("{COST_CSV_HEADER},target,relative_error");
        for (i, (sched, _)) in targets.iter().enumerate() {
            let cost = schedule_cost(sched, n_tokens, &model, baseline_steps)?;
            println!(
                "{},{},{}",
                cost_csv_row(&sched.name, &model, &cost),
                cal.targets[i],
                cal.relative_errors[i]
            );
        }
    }
    Ok(())
}

fn oracle_compare(config: &Path, fine_steps: usize) -> Result<()> {
    let cfg = load(config)?;
    let shape = cfg.shape()?;
    let schedule = cfg.build_schedule()?;
    let field = cfg.build_field()?;
    let report = run(&schedule, &field, shape, cfg.seed, &cfg.run_options())?;
    let reference = reference_solve(&field, shape, cfg.seed, fine_steps)?;
    let err = relative_l2_error(&report.endpoint, &reference)?;
    println!("metric,value");
    println!("relative_l2,{err}");
    println!("nfe,{}", report.nfe);
    println!("fine_steps,{fine_steps}");
    println!("stage,steps,m_k,t_start,t_end,cost");
    let mut step = 0;
    for pos in 0..schedule.n_stages() {
        let steps = schedule.stages[pos].steps;
        let recs = &report.steps[step..step + steps];
        let cost: f64 = recs.iter().map(|r| r.cost).sum();
        println!(
            "{},{},{},{},{},{}",
            schedule.stage_label(pos),
            steps,
            recs[0].active,
            schedule.timesteps[step],
            schedule.timesteps[step + steps],
            cost
        );
        step += steps;
    }
    Ok(())
}

fn run_selftest() -> Result<()> {
    let outcomes = selftest::run_all();
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    for o in &outcomes {
        if o.passed {
            println!("PASS {}", o.name);
        } else {
            println!("FAIL {}: {}", o.name, o.detail);
        }
    }
    if failed > 0 {
        return Err(JitError::Numerical(format!(
            "{failed} self-test check(s) failed"
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample {
            config,
            out_grid,
            out_report,
            dump_importance,
        } => sample(
            config,
            out_grid.as_deref(),
            out_report.as_deref(),
            dump_importance.as_deref(),
        ),
        Command::Schedule {
            preset,
            config,
            tokens,
            invert_time,
        } => print_schedule(preset.as_deref(), config.as_deref(), *tokens, *invert_time),
        Command::BenchCost { config, calibrate } => bench_cost(config.as_deref(), *calibrate),
        Command::OracleCompare { config, fine_steps } => oracle_compare(config, *fine_steps),
        Command::Selftest => run_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
