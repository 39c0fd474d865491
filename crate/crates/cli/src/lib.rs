//! Command dispatch for `bdiv-irr`.
//!
//! [`run`] never touches stdout or the process exit status itself, so the
//! binary and the tests share one code path.

use std::fmt::Write as _;
use std::path::PathBuf;

use bdiv_core::connection::IrrAnalysis;
use bdiv_core::report::{self, ConnectionReport};
use bdiv_core::scenario::{Options, Scenario, ScenarioError};
use bdiv_core::suite::{self, CheckOutcome};
use bdiv_core::Execution;
use clap::{Parser, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MATH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Validate,
    Irr,
    Delta,
    Turning,
    Cc,
    Chi,
    Bounds,
    Check,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Dot,
}

#[derive(Debug, Parser)]
#[command(
    name = "bdiv-irr",
    version,
    about = "Irregularity b-divisors, characteristic cycles and Euler characteristics of exponential-type connections"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Restrict to one connection; default is every connection in the file.
    #[arg(long)]
    pub connection: Option<String>,
    /// Test divisor for the slope certificate in `bounds` and `report`.
    #[arg(long)]
    pub divisor: Option<String>,
    #[arg(long)]
    pub probe_depth: Option<usize>,
    #[arg(long)]
    pub max_blowups: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        }
    }

    fn input_error(msg: impl std::fmt::Display) -> Self {
        Outcome {
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
            code: EXIT_INPUT,
        }
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome::ok(text)
            } else {
                Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code,
                }
            };
        }
    };
    execute(&cli)
}

pub fn load(cli: &Cli) -> Result<Scenario, ScenarioError> {
    let s = Scenario::from_path(&cli.scenario)?;
    let options = Options {
        probe_depth: cli.probe_depth.unwrap_or(s.options.probe_depth),
        max_blowups: cli.max_blowups.unwrap_or(s.options.max_blowups),
    };
    if options.probe_depth == 0 {
        return Err(ScenarioError::Validation {
            rule: "ProbeDepth".into(),
            message: "probe_depth must be at least 1".into(),
        });
    }
    Ok(s.with_options(options))
}

pub fn execute(cli: &Cli) -> Outcome {
    let s = match load(cli) {
        Ok(s) => s,
        Err(e) => return Outcome::input_error(e),
    };
    if cli.format == Format::Dot
        && !matches!(
            cli.command,
            Command::Irr | Command::Delta | Command::Turning | Command::Report
        )
    {
        return Outcome::input_error("--format dot is available for irr, delta, turning and report");
    }
    match cli.command {
        Command::Validate => validate(&s, cli.format),
        Command::Check => check(&s, cli),
        _ => connection_command(&s, cli),
    }
}

fn validate(s: &Scenario, format: Format) -> Outcome {
    let counts = [
        ("curves", s.pair.curves.len()),
        ("points", s.pair.points.len()),
        ("connections", s.connections.len()),
        ("divisors", s.divisors.len()),
    ];
    let out = match format {
        Format::Json => {
            let mut v = serde_json::Map::new();
            v.insert("valid".into(), true.into());
            for (k, n) in counts {
                v.insert(k.into(), n.into());
            }
            json_line(&v)
        }
        _ => {
            let parts: Vec<String> = counts.iter().map(|(k, n)| format!("{n} {k}")).collect();
            format!("valid: {}\n", parts.join(", "))
        }
    };
    Outcome::ok(out)
}

fn check(s: &Scenario, cli: &Cli) -> Outcome {
    let name = cli.scenario.file_stem().and_then(|n| n.to_str()).unwrap_or("scenario");
    let outcomes: Vec<CheckOutcome> = suite::check_scenario(name, s, Execution::default());
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let out = match cli.format {
        Format::Json => json_line(&outcomes),
        _ => {
            let mut out = String::new();
            for o in &outcomes {
                let line = format!(
                    "{} {:<28} {:<24} {}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.subject,
                    o.detail
                );
                let _ = writeln!(out, "{}", line.trim_end());
            }
            let _ = writeln!(out, "{} checks, {} failed", outcomes.len(), failed);
            out
        }
    };
    Outcome {
        stdout: out,
        stderr: String::new(),
        code: if failed == 0 { EXIT_OK } else { EXIT_MATH },
    }
}

fn connection_command(s: &Scenario, cli: &Cli) -> Outcome {
    let names: Vec<String> = match &cli.connection {
        Some(n) => match s.connection(Some(n)) {
            Ok((n, _)) => vec![n.to_string()],
            Err(e) => return Outcome::input_error(e),
        },
        None => s.connections.keys().cloned().collect(),
    };
    let divisor = match &cli.divisor {
        Some(d) => match s.divisor(Some(d)) {
            Ok((_, d)) => Some(d.clone()),
            Err(e) => return Outcome::input_error(e),
        },
        None => None,
    };

    if cli.format == Format::Dot {
        let mut out = String::new();
        for n in &names {
            match IrrAnalysis::new(&s.connections[n], &s.pair, s.options.max_blowups) {
                Ok(a) => out.push_str(&report::emit_dot(&a, n)),
                Err(e) => return Outcome::input_error(ScenarioError::from(e)),
            }
        }
        return Outcome::ok(out);
    }

    let mut reports: Vec<ConnectionReport> = Vec::new();
    for n in &names {
        match report::connection_report(s, n, &s.connections[n], divisor.as_ref()) {
            Ok(r) => reports.push(r),
            Err(e) => return Outcome::input_error(ScenarioError::from(e)),
        }
    }
    let failed = reports.iter().any(|r| r.consistency != "ok");
    let stdout = match cli.format {
        Format::Json => json_for(cli.command, &reports),
        _ => reports.iter().map(|r| text_for(cli.command, r)).collect(),
    };
    Outcome {
        stdout,
        stderr: if failed {
            "error: consistency FAILED\n".into()
        } else {
            String::new()
        },
        code: if failed { EXIT_MATH } else { EXIT_OK },
    }
}

fn text_for(cmd: Command, r: &ConnectionReport) -> String {
    match cmd {
        Command::Irr => report::irr_text(r),
        Command::Delta => report::delta_text(r),
        Command::Turning => report::turning_text(r),
        Command::Cc => report::cc_text(r),
        Command::Chi => report::chi_text(r),
        Command::Bounds => report::bounds_text(r),
        _ => report::full_text(r),
    }
}

fn json_for(cmd: Command, reports: &[ConnectionReport]) -> String {
    if cmd == Command::Report {
        return json_line(&reports);
    }
    let rows: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            let body = match cmd {
                Command::Irr => serde_json::json!({"irr_on_x": r.irr_on_x, "nodes": r.nodes}),
                Command::Delta => serde_json::json!({"nodes": r.nodes, "delta": r.delta}),
                Command::Turning => serde_json::json!({"turning": r.turning}),
                Command::Cc => serde_json::json!({"cc": r.cc}),
                Command::Chi => serde_json::json!({"chi": r.chi}),
                _ => serde_json::json!({"bounds": r.bounds, "lefschetz": r.lefschetz}),
            };
            serde_json::json!({"connection": r.connection, "consistency": r.consistency, "result": body})
        })
        .collect();
    json_line(&rows)
}

fn json_line<T: serde::Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}
