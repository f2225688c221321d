//! Command-line front end: `place`, `rate`, `table`, `sweep`, `simulate`,
//! and `verify`.

use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use serde_json::json;

use crate::delivery::{choose_file_size, partition_and_cache, simulate_demand, PayloadSource};
use crate::demand_oracle::{enumerate_expected_rate, monte_carlo_expected_rate, DemandVector, DEFAULT_ENUMERATION_CAP};
use crate::output::{Cell, Format, Style, Table};
use crate::placement::{
    check_feasible, is_equal_partitioning_point, minimum_expected_rate, optimal_placement, rate_report,
    PlacementVector, ProblemInstance,
};
use crate::rational::{integer, parse_rational, to_fraction, Rational};
use crate::verify::{run_suite, Grid, SuiteConfig, VerifyReport};

#[derive(Debug, Parser)]
#[command(name = "mccs", version, about = "Optimal cache placement for the modified coded caching scheme")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, value_enum, default_value = "plain")]
    pub format: Format,

    /// Decimal places for rounded output (half-up).
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=60))]
    pub places: u32,

    /// Print exact fractions instead of rounded decimals.
    #[arg(long, global = true)]
    pub exact: bool,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Largest number of demand vectors to enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,

    /// Report timings on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal placement for one instance.
    Place(InstanceArgs),
    /// Expected and peak rates of a placement.
    Rate(RateArgs),
    /// Optimal placement for every integer cache size 0..=N.
    Table(TableArgs),
    /// Expected rate against the number of users.
    Sweep(SweepArgs),
    /// Run coded delivery for one demand and check decoding.
    Simulate(SimulateArgs),
    /// Cross-check the closed form against every oracle.
    Verify(VerifyArgs),
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Number of users.
    #[arg(long = "K")]
    pub users: usize,
    /// Number of files.
    #[arg(long = "N")]
    pub files: usize,
    /// Cache size in files, e.g. 2, 3/2 or 0.25.
    #[arg(long = "M", value_parser = rational_arg)]
    pub cache: Rational,
}

impl InstanceArgs {
    fn instance(&self) -> anyhow::Result<ProblemInstance> {
        Ok(ProblemInstance::new(self.files, self.users, self.cache.clone())?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Placement `a_0,...,a_K`; defaults to the optimal one.
    #[arg(long)]
    pub placement: Option<String>,
    /// Also average over every demand vector.
    #[arg(long)]
    pub enumerate: bool,
    /// Also estimate by Monte Carlo with this many trials.
    #[arg(long)]
    pub trials: Option<u64>,
    /// One row per number of distinct requests instead of a summary.
    #[arg(long)]
    pub per_distinct: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[arg(long = "K")]
    pub users: usize,
    #[arg(long = "N")]
    pub files: usize,
    /// Cache-size step.
    #[arg(long, default_value = "1", value_parser = rational_arg)]
    pub step: Rational,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// User range `a:b` (or a single value).
    #[arg(long = "K")]
    pub users: String,
    #[arg(long = "N")]
    pub files: usize,
    #[arg(long = "M", value_parser = rational_arg)]
    pub cache: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Payload {
    Random,
    Zeros,
    Ones,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Requested file per user, e.g. `1,1,2`.
    #[arg(long)]
    pub demand: String,
    /// Multiply the minimal file size by this factor.
    #[arg(long, default_value_t = 1)]
    pub multiplier: usize,
    #[arg(long, value_enum, default_value = "random")]
    pub payload: Payload,
    /// Print the structured transcript record instead of tables.
    #[arg(long)]
    pub record: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Grid such as `K=7 N=10 M=0..10` or `K=1..8 N=1..8 M=:1/4`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Perturb each placement by 1/1000 before the feasibility check.
    #[arg(long)]
    pub inject_fault: bool,
    /// Largest N and K for enumeration checks.
    #[arg(long, default_value_t = 5)]
    pub enum_max: usize,
    /// Largest K for the delivery simulation.
    #[arg(long = "sim-K", default_value_t = 4)]
    pub sim_users: usize,
    /// Largest N for the delivery simulation.
    #[arg(long = "sim-N", default_value_t = 3)]
    pub sim_files: usize,
}

/// Named output sections. A single section prints bare; several are
/// separated by blank lines (CSV, plain) or keyed by name (JSON).
struct Output(Vec<(&'static str, Table)>);

impl Output {
    fn single(name: &'static str, table: Table) -> Self {
        Output(vec![(name, table)])
    }

    fn write(&self, out: &mut dyn Write, format: Format, style: Style) -> std::io::Result<()> {
        if format == Format::Json && self.0.len() > 1 {
            let map: serde_json::Map<String, serde_json::Value> =
                self.0.iter().map(|(n, t)| (n.to_string(), t.to_json())).collect();
            serde_json::to_writer_pretty(&mut *out, &map)?;
            return writeln!(out);
        }
        for (i, (name, table)) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(out)?;
            }
            if format == Format::Plain && self.0.len() > 1 {
                writeln!(out, "# {name}")?;
            }
            table.write(out, format, style)?;
        }
        Ok(())
    }
}

fn placement_columns(users: usize) -> impl Iterator<Item = String> {
    (0..=users).map(|l| format!("a_{l}"))
}

fn support_text(a: &PlacementVector) -> String {
    a.support().iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn cmd_place(args: &InstanceArgs) -> anyhow::Result<Output> {
    let inst = args.instance()?;
    let a = optimal_placement(&inst);
    let report = rate_report(&inst, &a)?;
    let feasible = check_feasible(&inst, &a)?.is_feasible();
    let mut columns = vec!["N", "K", "M", "mu", "mu_K", "l_star", "support"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    columns.extend(placement_columns(inst.users()));
    columns.extend(
        ["cache_used", "cache_tight", "feasible", "expected_rate", "peak_rate_mccs", "peak_rate_ccs"].map(String::from),
    );
    let mut table = Table::new(columns);
    let mut row: Vec<Cell> = vec![
        inst.files().into(),
        inst.users().into(),
        to_fraction(inst.cache_size()).into(),
        inst.mu().into(),
        inst.mu_k().into(),
        inst.boundary_index().map_or_else(|| Cell::from("none"), Cell::from),
        support_text(&a).into(),
    ];
    row.extend(a.entries().iter().map(Cell::from));
    row.extend([
        a.cache_usage().into(),
        (&a.cache_usage() == inst.mu()).into(),
        feasible.into(),
        report.expected_rate.into(),
        report.peak_rate_mccs.into(),
        report.peak_rate_ccs.into(),
    ]);
    table.push(row);
    Ok(Output::single("placement", table))
}

fn parse_placement(text: &str, users: usize) -> anyhow::Result<PlacementVector> {
    let entries = text
        .split(',')
        .map(|s| parse_rational(s).map_err(anyhow::Error::from))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if entries.len() != users + 1 {
        bail!("placement needs K + 1 = {} entries, got {}", users + 1, entries.len());
    }
    Ok(PlacementVector::new(entries))
}

fn cmd_rate(args: &RateArgs, cap: u64, seed: u64) -> anyhow::Result<Output> {
    let inst = args.instance.instance()?;
    let a = match &args.placement {
        Some(text) => parse_placement(text, inst.users())?,
        None => optimal_placement(&inst),
    };
    let report = rate_report(&inst, &a)?;
    if args.per_distinct {
        let dist = inst.distinct_distribution();
        let mut table = Table::new(["distinct", "probability", "rate"]);
        for (n, r) in &report.per_distinct_rates {
            table.push(vec![(*n).into(), dist.probability(*n).into(), r.into()]);
        }
        return Ok(Output::single("per_distinct", table));
    }
    let mut columns = vec!["N", "K", "M", "expected_rate", "peak_rate_mccs", "peak_rate_ccs", "minimum_expected_rate"];
    let mut row: Vec<Cell> = vec![
        inst.files().into(),
        inst.users().into(),
        to_fraction(inst.cache_size()).into(),
        report.expected_rate.clone().into(),
        report.peak_rate_mccs.into(),
        report.peak_rate_ccs.into(),
        minimum_expected_rate(&inst).into(),
    ];
    if args.enumerate {
        columns.push("enumerated_rate");
        row.push(enumerate_expected_rate(&inst, &a, cap)?.into());
    }
    if let Some(trials) = args.trials {
        let est = monte_carlo_expected_rate(&inst, &a, trials, seed)?;
        columns.extend(["mc_mean", "mc_std_error", "mc_trials", "mc_seed"]);
        row.extend([est.mean.into(), est.std_error.into(), est.trials.into(), est.seed.into()]);
    }
    let mut table = Table::new(columns);
    table.push(row);
    Ok(Output::single("rates", table))
}

fn cmd_table(args: &TableArgs) -> anyhow::Result<Output> {
    if args.files == 0 || args.users == 0 {
        bail!("need N >= 1 and K >= 1");
    }
    if args.step <= Rational::zero() {
        bail!("step must be positive");
    }
    let mut columns = vec!["M".to_string()];
    columns.extend(placement_columns(args.users));
    let mut table = Table::new(columns);
    let mut m = Rational::zero();
    while m <= integer(args.files) {
        let inst = ProblemInstance::new(args.files, args.users, m.clone())?;
        let mut row = vec![Cell::from(to_fraction(&m))];
        row.extend(optimal_placement(&inst).entries().iter().map(Cell::from));
        table.push(row);
        m += &args.step;
    }
    Ok(Output::single("table", table))
}

/// Parses `"7"`, `"1:40"`, or `"1..40"`.
pub fn parse_user_range(text: &str) -> anyhow::Result<std::ops::RangeInclusive<usize>> {
    let (a, b) = text
        .split_once(':')
        .or_else(|| text.split_once(".."))
        .unwrap_or((text, text));
    let a: usize = a.trim().parse().with_context(|| format!("bad range start in {text:?}"))?;
    let b: usize = b.trim().parse().with_context(|| format!("bad range end in {text:?}"))?;
    if a == 0 || a > b {
        bail!("user range {text:?} must satisfy 1 <= start <= end");
    }
    Ok(a..=b)
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<Output> {
    let range = parse_user_range(&args.users)?;
    let mut table = Table::new([
        "K",
        "mu_K",
        "l_star",
        "support_size",
        "equal_partitioning",
        "expected_rate_mccs",
        "rate_ccs",
        "peak_rate_mccs",
    ]);
    for k in range {
        let inst = ProblemInstance::new(args.files, k, args.cache.clone())?;
        let a = optimal_placement(&inst);
        let report = rate_report(&inst, &a)?;
        table.push(vec![
            k.into(),
            inst.mu_k().into(),
            inst.boundary_index().map_or_else(|| Cell::from("none"), Cell::from),
            a.support().len().into(),
            is_equal_partitioning_point(&inst).into(),
            report.expected_rate.into(),
            report.peak_rate_ccs.into(),
            report.peak_rate_mccs.into(),
        ]);
    }
    Ok(Output::single("sweep", table))
}

struct SimulationOutcome {
    output: Output,
    record: String,
    decoded: bool,
}

fn cmd_simulate(args: &SimulateArgs, seed: u64) -> anyhow::Result<SimulationOutcome> {
    let inst = args.instance.instance()?;
    let demand = DemandVector::parse(inst.files(), &args.demand)?;
    if demand.users() != inst.users() {
        bail!("demand has {} entries but K = {}", demand.users(), inst.users());
    }
    if args.multiplier == 0 {
        bail!("multiplier must be at least 1");
    }
    let a = optimal_placement(&inst);
    let file_size = choose_file_size(&a)? * args.multiplier;
    let source = match args.payload {
        Payload::Random => PayloadSource::Random(seed),
        Payload::Zeros => PayloadSource::Zeros,
        Payload::Ones => PayloadSource::Ones,
    };
    let (store, caches) = partition_and_cache(&inst, &a, file_size, source)?;
    let sim = simulate_demand(&inst, &a, &demand, &store, &caches)?;
    let decoded = sim.all_decoded(&store);
    let t = &sim.transcript;

    let mut summary = Table::new([
        "demand",
        "distinct",
        "leader_set",
        "messages",
        "file_size",
        "total_bits",
        "load",
        "expected_load",
        "all_decoded",
    ]);
    summary.push(vec![
        demand.to_string().into(),
        demand.distinct().into(),
        t.leader_set.to_string().into(),
        t.messages.len().into(),
        file_size.into(),
        t.total_bits.into(),
        Cell::Text(to_fraction(&sim.load)),
        Cell::Text(to_fraction(&sim.expected_load)),
        decoded.into(),
    ]);

    let mut messages = Table::new(["subset", "level", "bits"]);
    for m in &t.messages {
        messages.push(vec![m.subset.to_string().into(), (m.subset.size() - 1).into(), m.payload.len().into()]);
    }

    let mut users = Table::new(["user", "file", "cache_bits", "decoded"]);
    for (user, result) in sim.decoded.iter().enumerate() {
        let verdict = match result {
            Ok(bits) if bits == store.original(demand.file_of(user)) => "ok".to_string(),
            Ok(_) => "wrong bits".to_string(),
            Err(e) => e.to_string(),
        };
        users.push(vec![
            (user + 1).into(),
            demand.file_of(user).into(),
            sim.occupancy_bits[user].into(),
            verdict.into(),
        ]);
    }

    Ok(SimulationOutcome {
        output: Output(vec![("summary", summary), ("messages", messages), ("users", users)]),
        record: t.to_record(),
        decoded,
    })
}

fn verify_config(args: &VerifyArgs, cap: u64, seed: u64) -> anyhow::Result<SuiteConfig> {
    Ok(SuiteConfig {
        grid: match &args.grid {
            Some(g) => Grid::parse(g)?,
            None => Grid::default(),
        },
        enumeration_max: args.enum_max,
        simulation_users: args.sim_users,
        simulation_files: args.sim_files,
        cap,
        seed,
        inject_fault: args.inject_fault,
    })
}

fn write_verify(report: &VerifyReport, out: &mut dyn Write, format: Format) -> std::io::Result<()> {
    match format {
        Format::Json => {
            let value = json!({ "passed": report.passed(), "checks": report.checks });
            serde_json::to_writer_pretty(&mut *out, &value)?;
            writeln!(out)
        }
        Format::Csv => {
            let mut table = Table::new(["check", "cases", "failures", "passed", "first_witness"]);
            for c in &report.checks {
                table.push(vec![
                    c.name.into(),
                    c.cases.into(),
                    c.failures.len().into(),
                    c.passed().into(),
                    c.failures.first().map_or(String::new(), |f| f.witness.clone()).into(),
                ]);
            }
            table.write_csv(out, Style { places: 3, exact: true })
        }
        Format::Plain => {
            for c in &report.checks {
                writeln!(out, "{c}")?;
                for f in c.failures.iter().take(20) {
                    writeln!(out, "  {}: {}", f.witness, f.detail)?;
                }
                if c.failures.len() > 20 {
                    writeln!(out, "  ... {} more", c.failures.len() - 20)?;
                }
            }
            writeln!(out, "{}", if report.passed() { "all checks passed" } else { "verification FAILED" })
        }
    }
}

/// Runs one command, writing to `out`. Returns whether every check (for
/// `simulate` and `verify`) passed.
pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<bool> {
    let style = Style {
        places: cli.places as usize,
        exact: cli.exact,
    };
    let started = Instant::now();
    let ok = match &cli.command {
        Command::Place(args) => {
            cmd_place(args)?.write(out, cli.format, style)?;
            true
        }
        Command::Rate(args) => {
            cmd_rate(args, cli.cap, cli.seed)?.write(out, cli.format, style)?;
            true
        }
        Command::Table(args) => {
            cmd_table(args)?.write(out, cli.format, style)?;
            true
        }
        Command::Sweep(args) => {
            cmd_sweep(args)?.write(out, cli.format, style)?;
            true
        }
        Command::Simulate(args) => {
            let outcome = cmd_simulate(args, cli.seed)?;
            if args.record {
                out.write_all(outcome.record.as_bytes())?;
            } else {
                outcome.output.write(out, cli.format, style)?;
            }
            outcome.decoded
        }
        Command::Verify(args) => {
            let report = run_suite(&verify_config(args, cli.cap, cli.seed)?);
            write_verify(&report, out, cli.format)?;
            report.passed()
        }
    };
    if cli.verbose > 0 {
        eprintln!("finished in {:.3}s", started.elapsed().as_secs_f64());
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (bool, String) {
        let cli = Cli::try_parse_from(std::iter::once("mccs").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let ok = run(&cli, &mut buf).unwrap();
        (ok, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn user_ranges() {
        assert_eq!(parse_user_range("1:40").unwrap(), 1..=40);
        assert_eq!(parse_user_range("3..5").unwrap(), 3..=5);
        assert_eq!(parse_user_range("7").unwrap(), 7..=7);
        assert!(parse_user_range("0:3").is_err());
        assert!(parse_user_range("5:3").is_err());
    }

    #[test]
    fn place_rejects_out_of_range_cache() {
        let cli = Cli::try_parse_from(["mccs", "place", "--K", "3", "--N", "2", "--M", "3"]).unwrap();
        assert!(run(&cli, &mut Vec::new()).is_err());
        assert!(Cli::try_parse_from(["mccs", "place", "--K", "3", "--N", "2", "--M", "x"]).is_err());
        assert!(Cli::try_parse_from(["mccs", "table", "--K", "3", "--N", "2", "--places", "0"]).is_err());
    }

    #[test]
    fn place_json_has_fractions() {
        let (_, text) = run_args(&["place", "--K", "7", "--N", "10", "--M", "2", "--format", "json"]);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v[0]["a_1"], json!({"num": 3, "den": 35}));
        assert_eq!(v[0]["cache_tight"], json!(true));
    }

    #[test]
    fn rate_with_oracles() {
        let (_, text) = run_args(&[
            "rate", "--K", "3", "--N", "2", "--M", "1", "--enumerate", "--trials", "100", "--exact", "--format", "csv",
        ]);
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("N,K,M,expected_rate,peak_rate_mccs,peak_rate_ccs,minimum_expected_rate,enumerated_rate"));
        assert!(lines.next().unwrap().starts_with("2,3,1,5/8,2/3,2/3,5/8,5/8,"));
    }

    #[test]
    fn rate_with_explicit_placement() {
        let (_, text) = run_args(&["rate", "--K", "2", "--N", "2", "--M", "0", "--placement", "1,0,0", "--exact", "--format", "csv"]);
        assert!(text.lines().nth(1).unwrap().starts_with("2,2,0,3/2,"));
        let cli = Cli::try_parse_from(["mccs", "rate", "--K", "2", "--N", "2", "--M", "0", "--placement", "0,1/2,0"]).unwrap();
        assert!(run(&cli, &mut Vec::new()).is_err());
    }

    #[test]
    fn simulate_sections() {
        let (ok, text) = run_args(&["simulate", "--K", "3", "--N", "2", "--M", "1", "--demand", "1,1,2"]);
        assert!(ok);
        assert!(text.contains("# summary"));
        assert!(text.contains("2/3"));
        let (ok, text) = run_args(&["simulate", "--K", "2", "--N", "2", "--M", "2", "--demand", "1,2", "--format", "json"]);
        assert!(ok);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["summary"][0]["messages"], json!(0));
        assert!(run(
            &Cli::try_parse_from(["mccs", "simulate", "--K", "3", "--N", "2", "--M", "1", "--demand", "1,2"]).unwrap(),
            &mut Vec::new()
        )
        .is_err());
    }

    #[test]
    fn verify_fault_injection_fails() {
        let (ok, text) = run_args(&["verify", "--grid", "K=2 N=2 M=0..2", "--inject-fault", "--sim-K", "2", "--sim-N", "2"]);
        assert!(!ok);
        assert!(text.contains("FAIL feasibility_injected_fault"));
        let (ok, _) = run_args(&["verify", "--grid", "K=2 N=2 M=0..2", "--sim-K", "2", "--sim-N", "2"]);
        assert!(ok);
    }
}
