#![allow(clippy::neg_cmp_op_on_partial_ord)]
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flexcell::dispatch::{run_dispatch, sweep_temperature};
use flexcell::io::writers::{
    write_dispatch_csv, write_iteration_log_csv, write_json, write_trace_csv, write_vectors_csv, RunSummary,
};
use flexcell::io::run_oracle;
use flexcell::optimizer::{BasinHoppingConfig, FlexibilityRequest};
use flexcell::simulator::{ReferenceState, Scenario, Twin};
use flexcell::{Error, Execution, Result};

#[derive(Parser)]
#[command(name = "flexcell", version, about = "Digital twin and flexibility dispatch for a low-voltage energy cell")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Warm up and record the baseline trace under local control.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Serve a flexibility request step by step.
    Dispatch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        request: RequestArgs,
        #[command(flatten)]
        opt: OptimizerArgs,
    },
    /// Optimize the first step at several temperatures and write one
    /// iteration log per temperature.
    SweepTemperature {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        request: RequestArgs,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.5, 2.0, 10.0])]
        temperatures: Vec<f64>,
    },
    /// Exhaustive grid search on a scenario with at most three plants.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        request: RequestArgs,
        /// Grid resolution (kW, kVAr).
        #[arg(long, default_value_t = 0.05)]
        resolution: f64,
    },
    /// Load and check a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dispatch steps; defaults to the scenario's value.
    #[arg(long)]
    steps: Option<usize>,
    /// Warm-up duration in seconds; defaults to the scenario's value.
    #[arg(long)]
    warmup_s: Option<f64>,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RequestArgs {
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    dp_kw: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    dq_kvar: f64,
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Basin Hopping temperature.
    #[arg(long)]
    t_bh: Option<f64>,
    #[arg(long)]
    n_iter: Option<usize>,
}

struct Prepared {
    twin: Twin,
    reference: ReferenceState,
    steps: usize,
    execution: Execution,
}

fn load(path: &Path) -> Result<Scenario> {
    let scenario = Scenario::load(path)?;
    println!("{}: {}", path.display(), scenario.census());
    Ok(scenario)
}

fn prepare(common: &Common) -> Result<Prepared> {
    let mut scenario = load(&common.scenario)?;
    if let Some(w) = common.warmup_s {
        let mut file = scenario.to_file();
        file.simulation.warmup_s = w;
        scenario = Scenario::from_file(file)?;
    }
    let steps = common.steps.unwrap_or(scenario.file.simulation.steps);
    scenario.check_coverage(steps)?;
    let warmup = scenario.file.simulation.warmup_s;
    let twin = Twin::new(scenario);
    let reference = twin.run_warmup(warmup)?;
    let execution = if common.sequential { Execution::Sequential } else { Execution::Parallel };
    Ok(Prepared { twin, reference, steps, execution })
}

fn optimizer_config(base: &BasinHoppingConfig, opt: &OptimizerArgs, execution: Execution) -> BasinHoppingConfig {
    BasinHoppingConfig {
        seed: opt.seed.unwrap_or(base.seed),
        temperature: opt.t_bh.unwrap_or(base.temperature),
        n_iter: opt.n_iter.unwrap_or(base.n_iter),
        execution,
        ..*base
    }
}

fn request_for(p: &Prepared, r: &RequestArgs) -> FlexibilityRequest {
    FlexibilityRequest::new(r.dp_kw, r.dq_kvar, p.steps as f64 * p.twin.scenario.dispatch_step())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { scenario } => {
            load(&scenario)?;
        }
        Command::Simulate { common } => {
            let p = prepare(&common)?;
            let trace = p.twin.simulate_baseline(&p.reference, p.steps)?;
            let path = common.out.join("trace.csv");
            write_trace_csv(&p.twin.scenario, &trace, &path)?;
            println!("wrote {}", path.display());
        }
        Command::Dispatch { common, request, opt } => {
            let p = prepare(&common)?;
            let sc = &p.twin.scenario;
            let config = optimizer_config(&sc.file.optimizer, &opt, p.execution);
            let req = request_for(&p, &request);
            let run = run_dispatch(&p.twin, &p.reference, &req, &config, &sc.file.costs)?;
            write_dispatch_csv(&run, &common.out.join("dispatch.csv"))?;
            write_vectors_csv(&run, &common.out.join("vectors.csv"))?;
            let summary = RunSummary::of_run(&run);
            write_json(&summary, &common.out.join("summary.json"))?;
            println!(
                "{} steps, final OF {:.6}, mean tracking error {:.4}, total cost {:.6} EUR, {} tracking failures",
                summary.steps,
                summary.final_of,
                summary.mean_tracking_error,
                summary.total_cost_eur,
                summary.tracking_failures
            );
        }
        Command::SweepTemperature { common, request, opt, temperatures } => {
            let p = prepare(&common)?;
            let sc = &p.twin.scenario;
            let config = optimizer_config(&sc.file.optimizer, &opt, p.execution);
            let req = request_for(&p, &request);
            let results = sweep_temperature(&p.twin, &p.reference, &req, &config, &sc.file.costs, &temperatures)?;
            for (t, r) in &results {
                let path = common.out.join(format!("iterations_t{t}.csv"));
                write_iteration_log_csv(&r.log, &path)?;
                let mean_local = r.log.iter().map(|x| x.local_of).sum::<f64>() / r.log.len() as f64;
                println!("T = {t}: best OF {:.6}, mean local OF {mean_local:.6}, wrote {}", r.score.value, path.display());
            }
        }
        Command::Oracle { common, request, resolution } => {
            let p = prepare(&common)?;
            let req = request_for(&p, &request);
            let result = run_oracle(&p.twin, &p.reference, &req, &p.twin.scenario.file.costs, resolution, p.execution)?;
            write_json(&result, &common.out.join("oracle.json"))?;
            println!("grid optimum {:?}, OF {:.6} over {} points", result.x, result.score.value, result.evaluations);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_configuration() {
        1
    } else {
        2
    }
}
