use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use ychannel::bitsim::{verify_plan, DEFAULT_SEED, DEFAULT_TRIALS};
use ychannel::bounds::{all_roles, evaluate_bounds, genie_diagnostic};
use ychannel::channel::{ChannelConfig, RateTuple};
use ychannel::plan::TransmissionPlan;
use ychannel::region::{compare, enumerate, RegionSweep, SweepOptions, DEFAULT_CAP};
use ychannel::scheduler::{schedule, SchedulerOptions};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ychannel",
    version,
    about = "Deterministic Y-channel rate checks, schedules and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the outer bounds and the sufficient condition for a tuple.
    Check {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: Output,
    },
    /// Build a plan with the gain-ordering scheduler.
    Schedule {
        #[command(flatten)]
        target: Target,
        /// Allow a residual common bit on two downlink levels.
        #[arg(long)]
        repair: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Verify a plan file bit-exactly.
    Simulate {
        plan_file: PathBuf,
        /// Rates to verify against; defaults to the rates stored in the plan.
        #[arg(long)]
        rates: Option<RateTuple>,
        #[command(flatten)]
        sim: SimFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Classify every integral tuple of a small channel.
    Enumerate {
        #[arg(long)]
        n: ChannelConfig,
        #[command(flatten)]
        sweep: SweepFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Compare the scheduled region with the outer region and the sufficient condition.
    Compare {
        /// Sweep CSV from `enumerate`; swept afresh when omitted.
        sweep_csv: Option<PathBuf>,
        #[arg(long)]
        n: ChannelConfig,
        #[command(flatten)]
        sweep: SweepFlags,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Target {
    /// Channel gains "n1,n2,n3", descending.
    #[arg(long)]
    n: ChannelConfig,
    /// Nine rates: R12,R13,R1c,R21,R23,R2c,R31,R32,R3c.
    #[arg(long)]
    rates: RateTuple,
}

#[derive(Args)]
struct SimFlags {
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct SweepFlags {
    #[command(flatten)]
    sim: SimFlags,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Maximum number of tuples to sweep.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
}

impl SweepFlags {
    fn options(&self) -> SweepOptions {
        SweepOptions {
            cap: self.cap,
            jobs: self.jobs,
            trials: self.sim.trials,
            seed: self.sim.seed,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

type Failure = (u8, String);

fn usage(msg: impl std::fmt::Display) -> Failure {
    (EXIT_USAGE, msg.to_string())
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_text(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    let mut w = open_out(out)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| usage(format!("write failed: {e}")))
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    emit_text(out, &text)
}

fn json_only(output: &Output) -> Result<(), Failure> {
    match output.format {
        Some(Format::Csv) => Err(usage("this command only produces json")),
        _ => Ok(()),
    }
}

fn load_plan(path: &Path) -> Result<TransmissionPlan, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    // accept both a bare plan and the full `schedule` output
    if let Some(plan) = value.get_mut("plan") {
        value = plan.take();
    }
    serde_json::from_value(value).map_err(|e| usage(format!("{}: not a plan: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { target, output } => {
            json_only(&output)?;
            let report = evaluate_bounds(&target.rates, &target.n);
            let genie: Vec<_> = all_roles()
                .into_iter()
                .map(|roles| {
                    genie_diagnostic(&target.rates, &target.n, roles).expect("valid roles")
                })
                .collect();
            emit_json(
                &output.out,
                &json!({
                    "channel": target.n,
                    "rates": target.rates,
                    "report": report,
                    "genie": genie,
                }),
            )
        }
        Command::Schedule {
            target,
            repair,
            output,
        } => {
            json_only(&output)?;
            match schedule(&target.rates, &target.n, SchedulerOptions { repair }) {
                Ok(s) => emit_json(
                    &output.out,
                    &json!({
                        "channel": target.n,
                        "rates": target.rates,
                        "repair": repair,
                        "feasible": true,
                        "plan": s.plan,
                        "trace": s.trace,
                        "stage_gains": s.plan.stage_gains(),
                    }),
                ),
                Err(report) => {
                    emit_json(
                        &output.out,
                        &json!({
                            "channel": target.n,
                            "rates": target.rates,
                            "repair": repair,
                            "feasible": false,
                            "infeasibility": report,
                        }),
                    )?;
                    Err((EXIT_INFEASIBLE, String::new()))
                }
            }
        }
        Command::Simulate {
            plan_file,
            rates,
            sim,
            output,
        } => {
            json_only(&output)?;
            let plan = load_plan(&plan_file)?;
            let rates = rates.unwrap_or(plan.rates);
            let verdict = verify_plan(&plan, &rates, sim.trials, sim.seed);
            emit_json(
                &output.out,
                &json!({
                    "channel": plan.channel,
                    "rates": rates,
                    "seed": sim.seed,
                    "verdict": verdict,
                }),
            )?;
            if verdict.ok {
                Ok(())
            } else {
                Err((EXIT_INFEASIBLE, String::new()))
            }
        }
        Command::Enumerate { n, sweep, output } => {
            let result = enumerate(&n, &sweep.options()).map_err(usage)?;
            match output.format {
                Some(Format::Json) => emit_json(
                    &output.out,
                    &json!({
                        "channel": n,
                        "swept": result.records.len(),
                        "summary": result
                            .summary()
                            .into_iter()
                            .map(|(flags, count)| json!({ "flags": flags, "count": count }))
                            .collect::<Vec<_>>(),
                    }),
                ),
                _ => {
                    let w = open_out(&output.out)?;
                    result.write_csv(w).map_err(usage)?;
                    if output.out.is_some() {
                        print!("{}", result.summary_text());
                    }
                    Ok(())
                }
            }
        }
        Command::Compare {
            sweep_csv,
            n,
            sweep,
            output,
        } => {
            let result = match &sweep_csv {
                Some(p) => {
                    let f = File::open(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                    RegionSweep::read_csv(n, f).map_err(usage)?
                }
                None => enumerate(&n, &sweep.options()).map_err(usage)?,
            };
            let report = compare(&result);
            match output.format {
                Some(Format::Json) => emit_json(&output.out, &report),
                Some(Format::Csv) => Err(usage("compare produces text or json")),
                None => emit_text(&output.out, &report.to_string()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}
