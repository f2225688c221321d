//! Acceptance gate. Runs every criterion in sequence, prints one PASS/FAIL
//! line each, and exits non-zero if any failed.
//!
//! `cargo test -p mccs --test acceptance`

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mccs::delivery::PayloadSource;
use mccs::placement::RedundancyCase;
use mccs::verify::{self, CacheGrid, CheckResult, Grid};
use mccs::{
    case_rate_breakdown, expected_rate, optimal_placement, peak_rate_ccs, per_demand_rate, ProblemInstance, Rational,
};
use num_traits::Zero;

const CAP: u64 = 10_000_000;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn from_check(check: CheckResult) -> Self {
        let mut detail = format!("{} cases", check.cases);
        if let Some(first) = check.failures.first() {
            detail += &format!(", {} failures, first: {} {}", check.failures.len(), first.witness, first.detail);
        }
        Outcome { passed: check.passed(), detail }
    }

    fn from_failures(cases: usize, failures: Vec<String>) -> Self {
        let mut detail = format!("{cases} cases");
        if let Some(first) = failures.first() {
            detail += &format!(", {} failures, first: {first}", failures.len());
        }
        Outcome { passed: failures.is_empty(), detail }
    }
}

fn inst(n: usize, k: usize, m: Rational) -> ProblemInstance {
    ProblemInstance::new(n, k, m).unwrap()
}

fn grid(users: usize, files: usize, cache: CacheGrid) -> Vec<ProblemInstance> {
    Grid { users: 1..=users, files: 1..=files, cache }.instances()
}

fn halves() -> CacheGrid {
    CacheGrid::UpToFiles { step: mccs::rational::ratio(1, 2) }
}

// Published optimal placement table for K = 7, N = 10, as printed: rows
// M = 0..10, columns a_0..a_7.
const TABLE_I: [[&str; 8]; 11] = [
    ["1.0", "0", "0", "0", "0", "0", "0", "0"],
    ["0.3", "0.1", "0", "0", "0", "0", "0", "0"],
    ["0", "0.086", "0.019", "0", "0", "0", "0", "0"],
    ["0", "0", "0.043", "0.003", "0", "0", "0", "0"],
    ["0", "0", "0.01", "0.023", "0", "0", "0", "0"],
    ["0", "0", "0", "0.014", "0.014", "0", "0", "0"],
    ["0", "0", "0", "0", "0.01", "0.023", "0", "0"],
    ["0", "0", "0", "0", "0.003", "0.043", "0", "0"],
    ["0", "0", "0", "0", "0", "0.019", "0.086", "0"],
    ["0", "0", "0", "0", "0", "0", "0.1", "0.3"],
    ["0", "0", "0", "0", "0", "0", "0", "1.0"],
];

fn thousandths(text: &str) -> i64 {
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    let frac = format!("{frac:0<3}");
    assert!(frac.len() == 3, "{text} has more than 3 decimals");
    whole.parse::<i64>().unwrap() * 1000 + frac.parse::<i64>().unwrap()
}

fn table_i() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_mccs"))
        .args(["--format", "csv", "table", "--K", "7", "--N", "10"])
        .output()
        .expect("run mccs");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    let mut failures = Vec::new();
    if rows.len() != TABLE_I.len() {
        failures.push(format!("{} rows, expected {}", rows.len(), TABLE_I.len()));
    }
    for (m, (row, want)) in rows.iter().zip(TABLE_I.iter()).enumerate() {
        if row[0] != m.to_string() {
            failures.push(format!("row {m} is labelled M={}", row[0]));
        }
        for (l, (got, want)) in row[1..].iter().zip(want.iter()).enumerate() {
            if thousandths(got) != thousandths(want) {
                failures.push(format!("M={m} a_{l}: got {got}, table {want}"));
            }
        }
    }
    Outcome::from_failures(TABLE_I.len() * 8, failures)
}

fn theorem_vs_lp() -> Outcome {
    Outcome::from_check(verify::check_theorem_vs_lp(&grid(10, 10, CacheGrid::quarters())))
}

fn stirling_vs_enumeration() -> Outcome {
    let pairs: Vec<(usize, usize)> = (1..=5).flat_map(|n| (1..=5).map(move |k| (n, k))).collect();
    Outcome::from_check(verify::check_distinct_distribution(&pairs, CAP))
}

fn expected_rate_vs_enumeration() -> Outcome {
    Outcome::from_check(verify::check_expected_rate_vs_enumeration(&grid(5, 5, CacheGrid::quarters()), CAP))
}

fn delivery() -> Outcome {
    let instances = grid(6, 4, halves());
    Outcome::from_check(verify::check_delivery(&instances, &[PayloadSource::Random(0x5eed)], CAP))
}

fn lemmas() -> Outcome {
    Outcome::from_check(verify::check_lemmas(&grid(10, 10, CacheGrid::quarters())))
}

fn case_breakdown() -> Outcome {
    let inst = inst(10, 7, Rational::from_integer(2.into()));
    let a = optimal_placement(&inst);
    let mut seen = BTreeSet::new();
    let mut failures = Vec::new();
    for n in 1..=7 {
        let case = case_rate_breakdown(&inst, n).unwrap();
        let direct = per_demand_rate(&inst, &a, n).unwrap();
        seen.insert(case.case.to_string());
        if case.rate != direct {
            failures.push(format!("ñ={n}: {} gives {}, R = {direct}", case.case, case.rate));
        }
    }
    for case in [RedundancyCase::BothLevels, RedundancyCase::LowerLevelOnly, RedundancyCase::None] {
        if !seen.contains(&case.to_string()) {
            failures.push(format!("case {case} not covered"));
        }
    }
    Outcome::from_failures(7, failures)
}

fn rate_vs_users() -> Outcome {
    let mut failures = Vec::new();
    let mut previous: Option<Rational> = None;
    for k in 1..=40 {
        let inst = inst(10, k, Rational::from_integer(2.into()));
        let a = optimal_placement(&inst);
        let rate = expected_rate(&inst, &a).unwrap();
        let ccs = peak_rate_ccs(k, &a);
        if rate > ccs {
            failures.push(format!("K={k}: expected {rate} > CCS {ccs}"));
        }
        let nonzero = a.entries().iter().filter(|x| !x.is_zero()).count();
        let want = if k % 5 == 0 { 1 } else { 2 };
        if nonzero != want {
            failures.push(format!("K={k}: {nonzero} nonzero entries, expected {want}"));
        }
        if let Some(p) = &previous {
            if rate < *p {
                failures.push(format!("K={k}: rate {rate} below K-1 rate {p}"));
            }
        }
        previous = Some(rate);
    }
    Outcome::from_failures(40, failures)
}

fn monotonicity() -> Outcome {
    Outcome::from_check(verify::check_monotonicity(&Grid {
        users: 1..=10,
        files: 1..=10,
        cache: CacheGrid::quarters(),
    }))
}

fn mutation() -> Outcome {
    let instances: Vec<ProblemInstance> = grid(5, 4, halves())
        .into_iter()
        .filter(|i| i.users() >= 2 && !i.mu().is_zero() && *i.mu() < Rational::from_integer(1.into()))
        .collect();
    let check = verify::check_mutation(&instances, 17);
    let mut outcome = Outcome::from_check(check);
    if instances.len() < 10 {
        outcome.passed = false;
        outcome.detail += &format!(", only {} instances", instances.len());
    }
    outcome
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (1, "table_i_reproduction", 1, table_i),
        (2, "closed_form_vs_lp", 120, theorem_vs_lp),
        (3, "distinct_distribution_vs_enumeration", 10, stirling_vs_enumeration),
        (4, "expected_rate_vs_enumeration", 60, expected_rate_vs_enumeration),
        (5, "delivery_correctness", 300, delivery),
        (6, "lemma_suite", 120, lemmas),
        (7, "case_breakdown", 10, case_breakdown),
        (8, "rate_vs_users_properties", 10, rate_vs_users),
        (9, "monotonic_in_cache_size", 120, monotonicity),
        (10, "mutation_sensitivity", 120, mutation),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if elapsed > Duration::from_secs(limit) {
            outcome.passed = false;
            outcome.detail += &format!(", exceeded {limit}s limit");
        }
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {id:>2} {name}: {} ({:.2}s)", outcome.detail, elapsed.as_secs_f64());
        failed += usize::from(!outcome.passed);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
