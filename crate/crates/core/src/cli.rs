//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 decodability or
//! oracle failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{is_optimal, memory_share, rate_point};
use crate::delivery::{deliver_with, verify_decodability, DeliveryOptions, DemandVector};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::placement::CacheLayout;
use crate::scalar::{format_decimal, format_rational, parse_rational};
use crate::sweep::{run_sweep, with_thread_cap, write_rows, OutputFormat, SweepSpec};
use crate::verify::{count_vs_formula, verify_grid, AgreementReport};
use crate::Rational;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cwmap", version, about = "Coded caching on cyclic wrap-around multi-access networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Achievable rate, cut-set bound and optimality at one memory point
    Rate(RateArgs),
    /// Run placement and delivery, print the transmission log
    Simulate(SimulateArgs),
    /// Rate and bound over a memory grid
    Sweep(SweepArgs),
    /// Cross-check closed forms, delivery and brute-force counts
    Verify(VerifyArgs),
    /// Print cache contents as JSON
    LayoutDump(LayoutArgs),
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Number of users and access caches
    #[arg(short = 'K')]
    pub k: usize,
    /// Access caches per user
    #[arg(short = 'L')]
    pub l: usize,
    /// Library size in files
    #[arg(short = 'N')]
    pub n: usize,
    /// Access-cache size in files (integer, fraction or decimal)
    #[arg(long, value_parser = parse_rational)]
    pub ma: Rational,
    /// Private-cache size in files (integer, fraction or decimal)
    #[arg(long, value_parser = parse_rational)]
    pub mp: Rational,
}

impl SystemArgs {
    fn params(&self) -> Result<SystemParams> {
        SystemParams::new(self.k, self.l, self.ma.clone(), self.mp.clone(), self.n)
    }
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Distinct demands d_u = u (default)
    #[arg(long, conflicts_with_all = ["demand", "seed"])]
    pub worst_case: bool,
    /// Explicit demand vector, comma separated
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    pub demand: Option<Vec<usize>>,
    /// Uniform random demands from this seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allow gamma_p >= gamma_a L (no correctness guarantee)
    #[arg(long)]
    pub experimental: bool,
    /// Write the log here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(short = 'K')]
    pub k: usize,
    #[arg(short = 'L')]
    pub l: usize,
    #[arg(short = 'N')]
    pub n: usize,
    /// Access-cache sizes, comma separated
    #[arg(long, value_delimiter = ',', value_parser = parse_rational, required = true)]
    pub ma: Vec<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub mp_from: Rational,
    #[arg(long, value_parser = parse_rational)]
    pub mp_to: Rational,
    #[arg(long, value_parser = parse_rational, default_value = "1")]
    pub mp_step: Rational,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Check every grid point with K up to this value
    #[arg(long, conflicts_with_all = ["k", "ga"])]
    pub kmax: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub kmin: usize,
    #[arg(long, default_value_t = 3)]
    pub lmax: usize,
    #[arg(short = 'K', requires_all = ["l", "ga", "gp"])]
    pub k: Option<usize>,
    #[arg(short = 'L')]
    pub l: Option<usize>,
    #[arg(long)]
    pub ga: Option<usize>,
    #[arg(long)]
    pub gp: Option<usize>,
    /// Library size (defaults to K)
    #[arg(short = 'N')]
    pub n: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Rate(args) => cmd_rate(&args, out),
        Command::Simulate(args) => cmd_simulate(&args, out),
        Command::Sweep(args) => cmd_sweep(&args, out),
        Command::Verify(args) => cmd_verify(&args, out),
        Command::LayoutDump(args) => cmd_layout(&args, out),
    }
}

fn with_output(path: &Option<PathBuf>, out: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<i32>) -> Result<i32> {
    match path {
        Some(p) => {
            let mut file = BufWriter::new(File::create(p)?);
            let code = body(&mut file)?;
            file.flush()?;
            Ok(code)
        }
        None => body(out),
    }
}

fn both(value: &Rational) -> String {
    format!("{} ({})", format_rational(value), format_decimal(value, 6))
}

pub fn cmd_rate(args: &RateArgs, out: &mut dyn Write) -> Result<i32> {
    let params = args.system.params()?;
    let point = rate_point::<Rational>(&params)?;
    let plan = if point.shared {
        Some(memory_share::<Rational>(&params)?)
    } else {
        None
    };
    let condition = is_optimal(&params);
    if args.json {
        let corners: Vec<_> = plan
            .iter()
            .flat_map(|p| &p.corners)
            .map(|c| {
                json!({
                    "gamma_a": c.gamma_a,
                    "gamma_p": c.gamma_p,
                    "weight": format_rational(&c.weight),
                    "rate": format_rational(&c.rate),
                })
            })
            .collect();
        let doc = json!({
            "params": params.to_string(),
            "gamma_a": format_rational(&params.gamma_a()),
            "gamma_p": format_rational(&params.gamma_p()),
            "rate": format_rational(&point.rate),
            "rate_decimal": format_decimal(&point.rate, 6),
            "bound": format_rational(&point.lower_bound),
            "bound_decimal": format_decimal(&point.lower_bound, 6),
            "optimal": point.optimal,
            "large_memory_condition": condition,
            "corners": corners,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        return Ok(EXIT_OK);
    }
    writeln!(out, "params  {params}")?;
    writeln!(
        out,
        "gamma   a={} p={}",
        format_rational(&params.gamma_a()),
        format_rational(&params.gamma_p())
    )?;
    if let Some(plan) = &plan {
        for c in &plan.corners {
            writeln!(
                out,
                "corner  gamma_a={} gamma_p={} weight={} rate={}",
                c.gamma_a,
                c.gamma_p,
                format_rational(&c.weight),
                format_rational(&c.rate)
            )?;
        }
    }
    writeln!(out, "rate    {}", both(&point.rate))?;
    writeln!(out, "bound   {}", both(&point.lower_bound))?;
    writeln!(out, "optimal {}", point.optimal)?;
    writeln!(out, "large-memory condition {condition}")?;
    Ok(EXIT_OK)
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let params = args.system.params()?;
    let layout = CacheLayout::build(&params)?;
    let (k, n) = (params.k(), params.n());
    let demand = match (&args.demand, args.seed) {
        (Some(d), _) => DemandVector::new(d.clone(), k, n)?,
        (None, Some(seed)) => DemandVector::random(k, n, seed),
        (None, None) => DemandVector::worst_case(k),
    };
    let options = DeliveryOptions {
        allow_uncharacterized: args.experimental,
    };
    let result = deliver_with(&layout, &demand, options)?;
    let report = verify_decodability(&layout, &demand, &result);
    with_output(&args.out, out, |w| {
        write!(w, "{}", result.log())?;
        let files: Vec<String> = demand.files().iter().map(|f| f.to_string()).collect();
        writeln!(w, "# demand={}", files.join(","))?;
        writeln!(w, "{}", result.footer())?;
        writeln!(w, "{}", report.summary())?;
        for user in report.users.iter().filter(|u| !u.missing.is_empty()) {
            writeln!(w, "# user {} missing {}", user.user, user.missing.join(" "))?;
        }
        Ok(if report.is_success() { EXIT_OK } else { EXIT_FAILURE })
    })
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = SweepSpec {
        k: args.k,
        l: args.l,
        n: args.n,
        access: args.ma.clone(),
        private_from: args.mp_from.clone(),
        private_to: args.mp_to.clone(),
        private_step: args.mp_step.clone(),
    };
    let rows = run_sweep(&spec)?;
    let format = match args.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    with_output(&args.out, out, |w| {
        write_rows(&rows, format, w)?;
        Ok(EXIT_OK)
    })
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let reports: Vec<AgreementReport> = match (args.kmax, args.k) {
        (Some(kmax), _) => with_thread_cap(|| verify_grid(args.kmin, kmax, args.lmax))?,
        (None, Some(k)) => {
            let (l, ga, gp) = (args.l.unwrap_or(1), args.ga.unwrap_or(0), args.gp.unwrap_or(0));
            let params = SystemParams::from_gammas(k, l, ga, gp, args.n.unwrap_or(k))?;
            vec![with_thread_cap(|| count_vs_formula(&params))?]
        }
        (None, None) => {
            return Err(Error::InvalidParams(
                "give either --kmax or -K, -L, --ga and --gp".into(),
            ))
        }
    };
    let failures = reports.iter().filter(|r| !r.pass).count();
    if args.json {
        let doc = json!({
            "instances": reports.len(),
            "failures": failures,
            "pass": failures == 0,
            "reports": reports,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    } else {
        for r in &reports {
            writeln!(out, "{}", r.summary())?;
        }
        let verdict = if failures == 0 { "all PASS" } else { "FAIL" };
        writeln!(
            out,
            "{} instances, {failures} failures: {verdict}",
            reports.len()
        )?;
    }
    Ok(if failures == 0 { EXIT_OK } else { EXIT_FAILURE })
}

pub fn cmd_layout(args: &LayoutArgs, out: &mut dyn Write) -> Result<i32> {
    let layout = CacheLayout::build(&args.system.params()?)?;
    let text = layout.to_json()?;
    with_output(&args.out, out, |w| {
        writeln!(w, "{text}")?;
        Ok(EXIT_OK)
    })
}

/// Entry point for the binary.
pub fn main_with_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
