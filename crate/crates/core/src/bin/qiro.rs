use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use qiro::driver::{bind_args, default_entry, default_stages, disable, interpret, run_pipeline, Pipeline, Stage};
use qiro::pass::PassContext;
use qiro::quantum::GateOpt;
use qiro::resource::{ArgValue, CostModel};

const PASS_HELP: &str = "Passes (given as flags, run in command-line order):
  --convert-mem-to-val  --lower-ctrl  --lower-adj  --strip-circ  --canonicalize  --cse
  --circuit-inline  --affine-unroll[=FACTOR]  --quantum-gate-opt  --count-resources
  --default-pipeline    the standard sequence ending in --count-resources

When --count-resources has run (or --interpret is given), the entry is
interpreted and its counts reported.
Otherwise the final module is printed.";

#[derive(Parser)]
#[command(name = "qiro", version, about = "Quantum-classical IR compiler and resource estimator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a pass pipeline over a .qiro file.
    #[command(after_help = PASS_HELP)]
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    input: PathBuf,
    /// Program input bound to the entry argument of the same name.
    #[arg(long = "arg", value_name = "NAME=VALUE", value_parser = parse_arg)]
    args: Vec<(String, ArgValue)>,
    /// Entry symbol (default: the one marked `entry`, else mlir_main or main).
    #[arg(long)]
    entry: Option<String>,
    /// JSON cost model for --count-resources.
    #[arg(long, value_name = "PATH")]
    cost_model: Option<PathBuf>,
    /// Turn off one part of --quantum-gate-opt (hermitian, adjoint, rotation,
    /// controlled-rotation, loop-boundary).
    #[arg(long, value_name = "PART")]
    disable: Vec<String>,
    /// Interpret the entry for resource counts, adding --count-resources at
    /// the end when the pipeline lacks it.
    #[arg(long)]
    interpret: bool,
    /// Report as JSON.
    #[arg(long)]
    json: bool,
    /// Print wall time per stage to stderr.
    #[arg(long)]
    time: bool,
    /// Time the compile stages, then stop without interpreting.
    #[arg(long)]
    time_compile_only: bool,
    /// Stop after the pipeline, printing only diagnostics.
    #[arg(long)]
    verify_only: bool,
    /// Write the final module to PATH (`-` for stdout).
    #[arg(long, value_name = "PATH")]
    emit: Option<PathBuf>,
}

fn parse_arg(s: &str) -> Result<(String, ArgValue), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v = match v.parse::<i64>() {
        Ok(i) => ArgValue::Int(i),
        Err(_) => ArgValue::Float(v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"))?),
    };
    Ok((k.to_string(), v))
}

/// Splits pass flags (order matters) from ordinary options.
fn split_passes(argv: Vec<String>) -> (Vec<String>, Vec<Stage>) {
    let mut rest = Vec::new();
    let mut stages = Vec::new();
    for a in argv {
        let flag = a.strip_prefix("--").unwrap_or("");
        if flag == "default-pipeline" {
            stages.extend(default_stages());
        } else if let Ok(st) = Stage::parse(flag) {
            stages.push(st);
        } else {
            rest.push(a);
        }
    }
    (rest, stages)
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn report_time(label: &str, d: Duration) {
    eprintln!("time {label}: {:.3} ms", d.as_secs_f64() * 1e3);
}

fn main() -> ExitCode {
    let (argv, mut stages) = split_passes(std::env::args().collect());
    let Cmd::Run(a) = Cli::parse_from(argv).cmd;
    let timing = a.time || a.time_compile_only;

    let mut gate_opt = GateOpt::default();
    for d in &a.disable {
        if disable(&mut gate_opt, d).is_err() {
            return usage(format!("unknown --disable part `{d}`"));
        }
    }
    let cost = match &a.cost_model {
        None => CostModel::op_count(),
        Some(p) => match std::fs::read_to_string(p) {
            Err(e) => return fail(format!("{}: {e}", p.display())),
            Ok(s) => match CostModel::from_json(&s) {
                Ok(c) => c,
                Err(e) => return fail(format!("{}: {e}", p.display())),
            },
        },
    };
    if a.interpret && !stages.contains(&Stage::CountResources) {
        stages.push(Stage::CountResources);
    }
    let pipeline = Pipeline { stages, gate_opt, cost };

    let src = match std::fs::read_to_string(&a.input) {
        Ok(s) => s,
        Err(e) => return fail(format!("{}: {e}", a.input.display())),
    };
    let start = Instant::now();
    let t = Instant::now();
    let m = match qiro::text::parse(&src) {
        Ok(m) => m,
        Err(ds) => {
            for d in ds {
                eprintln!("{}:{d}", a.input.display());
            }
            return ExitCode::from(1);
        }
    };
    if timing {
        report_time("parse", t.elapsed());
    }
    let entry = a.entry.clone().unwrap_or_else(|| default_entry(&m));
    let mut cx = PassContext::default();
    let m = match run_pipeline(m, &pipeline, &mut cx, |st, d| {
        if timing {
            report_time(&st.name(), d);
        }
    }) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    if timing {
        report_time("compile", start.elapsed());
    }
    for n in &cx.notes {
        eprintln!("note: {n}");
    }
    if a.verify_only || a.time_compile_only {
        return ExitCode::SUCCESS;
    }
    if let Some(p) = &a.emit {
        let text = qiro::text::print_module(&m);
        if p.as_os_str() == "-" {
            print!("{text}");
        } else if let Err(e) = std::fs::write(p, text) {
            return fail(format!("{}: {e}", p.display()));
        }
    }
    if !pipeline.stages.contains(&Stage::CountResources) {
        if a.emit.is_none() {
            print!("{}", qiro::text::print_module(&m));
        }
        return ExitCode::SUCCESS;
    }
    let bound = match bind_args(&m, &entry, &a.args) {
        Ok(b) => b,
        Err(e) => return usage(e),
    };
    let program = a.input.display().to_string();
    let report = match interpret(&m, &program, &entry, bound) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("trap: {e}");
            return ExitCode::from(3);
        }
    };
    if a.time {
        report_time("interpret", report.elapsed);
    }
    for p in &report.printed {
        eprintln!("printed: {p}");
    }
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    ExitCode::SUCCESS
}
