use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exchg_mech_core::audit::{
    audit_campaign, estimate_ratio, random_instance, trial_rng, verify_lemma_monotonicity, GeneratorConfig,
};
use exchg_mech_core::figures::Figure;
use exchg_mech_core::replay::replay;
use exchg_mech_core::report::{fmt_num, to_json, OutputFormat, Render};
use exchg_mech_core::{run_mechanism_with, Instance, LoadError, MechanismKind, MechanismRun, Stage};
use serde_json::json;

const WORKERS_ENV: &str = "EXCHG_MECH_WORKERS";

#[derive(Parser)]
#[command(
    name = "exchg-mech",
    version,
    about = "Facility location games with exchangeable allocations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute the numbers of a built-in worked instance.
    Replay {
        #[arg(long)]
        figure: Figure,
        #[arg(long, default_value = "table")]
        format: OutputFormat,
    },
    /// Run a mechanism, followed by TTC among the agents, on an instance file.
    Run {
        #[arg(long)]
        mechanism: MechanismKind,
        #[arg(long)]
        instance: PathBuf,
        /// Pin the facility instead of letting the mechanism choose it.
        #[arg(long)]
        facility: Option<f64>,
        #[arg(long, default_value = "table")]
        format: OutputFormat,
    },
    /// Seeded truthfulness, ratio or monotonicity campaign.
    Audit(AuditArgs),
    /// Draw a random instance from the campaign generator.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    mechanism: MechanismKind,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    n_min: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long)]
    d: f64,
    #[arg(long)]
    seed: u64,
    /// Estimate the approximation ratio instead of auditing truthfulness.
    #[arg(long, conflicts_with = "monotonicity")]
    ratio: bool,
    /// Check welfare monotonicity of the exchange procedures.
    #[arg(long)]
    monotonicity: bool,
    /// Append a built-in instance to the audited trials.
    #[arg(long, conflicts_with_all = ["ratio", "monotonicity"])]
    inject: Vec<Figure>,
    #[arg(long, default_value = "table")]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes, each with its own exit status.
enum Failure {
    Mismatch(String),
    Usage(String),
    Io(String),
    Malformed(String),
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Mismatch(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Malformed(_) => 4,
            Failure::Invalid(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Mismatch(m) | Failure::Usage(m) | Failure::Io(m) | Failure::Malformed(m) | Failure::Invalid(m) => {
                m
            }
        }
    }
}

fn workers() -> Result<usize, Failure> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::Usage(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    Instance::load_json(&text).map_err(|e| match e {
        LoadError::Malformed(_) => Failure::Malformed(format!("{}: {e}", path.display())),
        LoadError::Invalid(_) => Failure::Invalid(format!("{}: {e}", path.display())),
    })
}

fn cmd_replay(figure: Figure, format: OutputFormat) -> Result<(), Failure> {
    let report = replay(figure).map_err(|e| Failure::Invalid(e.to_string()))?;
    let text = match format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => {
            let mut s = String::from("check,expected,actual,pass\n");
            for c in &report.checks {
                let _ = writeln!(s, "\"{}\",{},{},{}", c.name, c.expected, c.actual, c.pass);
            }
            s
        }
        OutputFormat::Table => report.to_table(),
    };
    emit(&text, None)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!(
            "{} replay deviates from the reference numbers",
            figure.token()
        )))
    }
}

fn run_json(kind: MechanismKind, inst: &Instance, run: &MechanismRun) -> serde_json::Value {
    let support: Vec<_> = run
        .realizations
        .iter()
        .map(|r| {
            let utilities = |stage| (0..inst.n()).map(|i| r.utility(inst, i, stage)).collect::<Vec<_>>();
            json!({
                "probability": r.probability,
                "facility": r.facility,
                "allocated": r.allocated,
                "assignment": r.exchange.final_assignment,
                "locations": r.exchange.final_assignment.locations(inst),
                "trades": r.exchange.steps.iter().map(|s| &s.cycle).collect::<Vec<_>>(),
                "utilities_allocated": utilities(Stage::Allocated),
                "utilities": utilities(Stage::Exchanged),
                "welfare_allocated": r.welfare(Stage::Allocated),
                "welfare": r.welfare(Stage::Exchanged),
            })
        })
        .collect();
    json!({
        "mechanism": kind,
        "support": support,
        "expected_welfare_allocated": run.expected_welfare(Stage::Allocated),
        "expected_welfare": run.expected_welfare(Stage::Exchanged),
    })
}

fn run_table(kind: MechanismKind, inst: &Instance, run: &MechanismRun) -> String {
    let mut out = format!("mechanism: {kind}\n");
    for r in &run.realizations {
        if kind.is_randomized() {
            let _ = writeln!(out, "\nwith probability {}:", fmt_num(r.probability));
        }
        let _ = writeln!(out, "facility: {}", fmt_num(r.facility));
        let trades: Vec<String> = r
            .exchange
            .steps
            .iter()
            .map(|s| {
                s.cycle
                    .iter()
                    .map(|a| (a + 1).to_string())
                    .collect::<Vec<_>>()
                    .join("->")
            })
            .collect();
        let _ = writeln!(
            out,
            "trades: {}",
            if trades.is_empty() {
                "none".into()
            } else {
                trades.join(", ")
            }
        );
        for i in 0..inst.n() {
            let _ = writeln!(
                out,
                "  agent {} ({}): location {} -> {}, utility {}",
                i + 1,
                inst.types()[i].token(),
                fmt_num(r.allocated.location(inst, i)),
                fmt_num(r.exchange.final_assignment.location(inst, i)),
                fmt_num(r.utility(inst, i, Stage::Exchanged))
            );
        }
        let _ = writeln!(out, "welfare: {}", fmt_num(r.welfare(Stage::Exchanged)));
    }
    if kind.is_randomized() {
        let _ = writeln!(
            out,
            "\nexpected welfare: {} before exchange, {} after",
            fmt_num(run.expected_welfare(Stage::Allocated)),
            fmt_num(run.expected_welfare(Stage::Exchanged))
        );
    }
    out
}

fn cmd_run(kind: MechanismKind, path: &Path, facility: Option<f64>, format: OutputFormat) -> Result<(), Failure> {
    let inst = load_instance(path)?;
    let run = run_mechanism_with(kind, &inst, &inst.truth(), facility).map_err(|e| Failure::Invalid(e.to_string()))?;
    let text = match format {
        OutputFormat::Json => to_json(&run_json(kind, &inst, &run)),
        OutputFormat::Table => run_table(kind, &inst, &run),
        OutputFormat::Csv => {
            let mut s = String::from("probability,facility,agent,type,location,utility\n");
            for r in &run.realizations {
                for i in 0..inst.n() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{}",
                        r.probability,
                        r.facility,
                        i,
                        inst.types()[i].token(),
                        r.exchange.final_assignment.location(&inst, i),
                        r.utility(&inst, i, Stage::Exchanged)
                    );
                }
            }
            s
        }
    };
    emit(&text, None)
}

fn cmd_audit(args: AuditArgs) -> Result<(), Failure> {
    let cfg = GeneratorConfig::new(args.n_min, args.n_max, args.d).map_err(|e| Failure::Usage(e.to_string()))?;
    if args.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let workers = workers()?;
    let usage = |e: exchg_mech_core::AuditError| Failure::Usage(e.to_string());
    let text = if args.ratio {
        estimate_ratio(args.mechanism, &cfg, args.trials, args.seed, workers)
            .map_err(usage)?
            .render(args.format)
    } else if args.monotonicity {
        verify_lemma_monotonicity(&cfg, args.trials, args.seed, workers)
            .map_err(usage)?
            .render(args.format)
    } else {
        let injected: Vec<Instance> = args.inject.iter().map(|f| f.instance()).collect();
        audit_campaign(args.mechanism, &cfg, args.trials, args.seed, &injected, workers)
            .map_err(usage)?
            .render(args.format)
    };
    emit(&text, args.out.as_deref())
}

fn cmd_generate(n: usize, d: f64, seed: u64, out: &Path) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    GeneratorConfig::new(n, n, d).map_err(|e| Failure::Usage(e.to_string()))?;
    let inst = random_instance(&mut trial_rng(seed, 0), n, d);
    emit(&format!("{}\n", inst.to_json()), Some(out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Replay { figure, format } => cmd_replay(figure, format),
        Command::Run {
            mechanism,
            instance,
            facility,
            format,
        } => cmd_run(mechanism, &instance, facility, format),
        Command::Audit(args) => cmd_audit(args),
        Command::Generate { n, d, seed, out } => cmd_generate(n, d, seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
