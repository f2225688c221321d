//! Cross-oracle verification suite behind `mccs verify`.

use std::fmt;
use std::ops::RangeInclusive;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{binom_q, DistinctRequestDistribution};
use crate::delivery::{choose_file_size, partition_and_cache, simulate_demand, PayloadSource};
use crate::demand_oracle::{enumerate_distinct_distribution, enumerate_expected_rate, DemandVector};
use crate::error::{Error, Result};
use crate::lp::verify_theorem;
use crate::placement::{
    case_rate_breakdown, check_feasible, expected_rate, is_equal_partitioning_point, minimum_expected_rate,
    optimal_placement, per_demand_rate, PlacementVector, ProblemInstance,
};
use crate::rational::{integer, parse_rational, ratio, Rational};

/// Cache sizes to test for a given file count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheGrid {
    /// `0, step, 2 step, ..., N`.
    UpToFiles { step: Rational },
    /// `start, start + step, ..., <= end`, clipped to `[0, N]`.
    Range { start: Rational, end: Rational, step: Rational },
}

impl CacheGrid {
    pub fn quarters() -> Self {
        CacheGrid::UpToFiles { step: ratio(1, 4) }
    }

    pub fn values(&self, files: usize) -> Vec<Rational> {
        let (start, end, step) = match self {
            CacheGrid::UpToFiles { step } => (Rational::zero(), integer(files), step.clone()),
            CacheGrid::Range { start, end, step } => (start.clone(), end.clone().min(integer(files)), step.clone()),
        };
        let mut out = Vec::new();
        let mut m = start;
        while m <= end {
            if m >= Rational::zero() {
                out.push(m.clone());
            }
            m += &step;
        }
        out
    }
}

/// A set of `(N, K, M)` instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub users: RangeInclusive<usize>,
    pub files: RangeInclusive<usize>,
    pub cache: CacheGrid,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            users: 1..=8,
            files: 1..=8,
            cache: CacheGrid::quarters(),
        }
    }
}

fn parse_usize_range(value: &str) -> Option<RangeInclusive<usize>> {
    let (a, b) = value
        .split_once("..")
        .or_else(|| value.split_once(':'))
        .unwrap_or((value, value));
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (1 <= a && a <= b).then_some(a..=b)
}

impl Grid {
    /// Parses `"K=7 N=10 M=0..10"`. `K` and `N` take a value or an
    /// inclusive range `a..b`; `M` takes a value, `a..b` (unit steps),
    /// `a..b:step`, or `step` alone after a colon (`M=:1/4` means
    /// `0, 1/4, ..., N`).
    pub fn parse(spec: &str) -> Result<Self> {
        let mut grid = Grid::default();
        let bad = |reason: String| Error::Parse {
            input: spec.to_string(),
            reason,
        };
        for part in spec.split_whitespace() {
            let (key, value) = part.split_once('=').ok_or_else(|| bad(format!("{part:?} is not key=value")))?;
            match key {
                "K" => grid.users = parse_usize_range(value).ok_or_else(|| bad(format!("bad K range {value:?}")))?,
                "N" => grid.files = parse_usize_range(value).ok_or_else(|| bad(format!("bad N range {value:?}")))?,
                "M" => {
                    let (range, step) = match value.split_once(':') {
                        Some((r, s)) => (r, parse_rational(s)?),
                        None => (value, Rational::one()),
                    };
                    if step <= Rational::zero() {
                        return Err(bad("M step must be positive".into()));
                    }
                    grid.cache = if range.is_empty() {
                        CacheGrid::UpToFiles { step }
                    } else {
                        let (a, b) = range.split_once("..").unwrap_or((range, range));
                        CacheGrid::Range {
                            start: parse_rational(a)?,
                            end: parse_rational(b)?,
                            step,
                        }
                    };
                }
                other => return Err(bad(format!("unknown grid key {other:?}"))),
            }
        }
        Ok(grid)
    }

    pub fn instances(&self) -> Vec<ProblemInstance> {
        let mut out = Vec::new();
        for k in self.users.clone() {
            for n in self.files.clone() {
                for m in self.cache.values(n) {
                    out.push(ProblemInstance::new(n, k, m).expect("grid values lie in [0, N]"));
                }
            }
        }
        out
    }
}

/// A failed check together with the instance (and demand) that broke it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub witness: String,
    pub detail: String,
}

impl Failure {
    fn new(inst: &ProblemInstance, demand: Option<&DemandVector>, detail: impl Into<String>) -> Self {
        let witness = match demand {
            Some(d) => format!(
                "(N={}, K={}, M={}, d={d})",
                inst.files(),
                inst.users(),
                inst.cache_size()
            ),
            None => inst.to_string(),
        };
        Self {
            witness,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<Failure>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} ({} cases", self.name, self.cases)?;
        if !self.passed() {
            write!(f, ", {} failures", self.failures.len())?;
        }
        f.write_str(")")
    }
}

fn collect(name: &'static str, cases: Vec<Vec<Failure>>) -> CheckResult {
    CheckResult {
        name,
        cases: cases.len(),
        failures: cases.into_iter().flatten().collect(),
    }
}

/// Closed-form minimum equals the simplex optimum exactly.
pub fn check_theorem_vs_lp(instances: &[ProblemInstance]) -> CheckResult {
    let cases = instances
        .par_iter()
        .map(|inst| {
            let check = verify_theorem(inst);
            if check.values_equal {
                vec![]
            } else {
                vec![Failure::new(
                    inst,
                    None,
                    format!("closed form {} != LP {} ({:?})", check.closed_form_value, check.lp.value, check.lp.status),
                )]
            }
        })
        .collect();
    collect("theorem_vs_lp", cases)
}

/// Structural properties of the closed-form optimum for `μ ∈ (0, 1)`:
/// full cache use, at most two adjacent nonzeros, and the single-subgroup
/// form `a_l = 1 / C(K, l)` whenever `μ = l / K`.
pub fn check_lemmas(instances: &[ProblemInstance]) -> CheckResult {
    let cases = instances
        .par_iter()
        .filter(|i| !i.mu().is_zero() && !i.mu().is_one())
        .map(|inst| {
            let mut failures = Vec::new();
            let a = optimal_placement(inst);
            if &a.cache_usage() != inst.mu() {
                failures.push(Failure::new(inst, None, format!("cache usage {} != mu {}", a.cache_usage(), inst.mu())));
            }
            let support = a.support();
            let adjacent = match support[..] {
                [_] => true,
                [i, j] => j == i + 1,
                _ => false,
            };
            if !adjacent {
                failures.push(Failure::new(inst, None, format!("support {support:?} is not one or two adjacent indices")));
            }
            if is_equal_partitioning_point(inst) {
                let l = inst.mu_k().to_integer();
                let l: usize = l.try_into().expect("small");
                let mut expected = vec![Rational::zero(); inst.users() + 1];
                expected[l] = Rational::one() / binom_q(inst.users() as i64, l as i64);
                if a != PlacementVector::new(expected) {
                    failures.push(Failure::new(inst, None, format!("mu K = {l} but placement is not 1/C(K,{l}) at l = {l}")));
                }
            }
            failures
        })
        .collect();
    collect("lemmas", cases)
}

/// The optimal placement satisfies every caching constraint. With
/// `inject_fault`, each placement is first perturbed by `1/1000` in its
/// first nonzero entry, which must be caught.
pub fn check_feasibility(instances: &[ProblemInstance], inject_fault: bool) -> CheckResult {
    let cases = instances
        .par_iter()
        .map(|inst| {
            let mut a = optimal_placement(inst).entries().to_vec();
            if inject_fault {
                let l = a.iter().position(|x| !x.is_zero()).expect("placement has support");
                a[l] += ratio(1, 1000);
            }
            let report = check_feasible(inst, &PlacementVector::new(a)).expect("length K + 1");
            report
                .violations
                .iter()
                .map(|v| Failure::new(inst, None, v.to_string()))
                .collect()
        })
        .collect();
    collect(if inject_fault { "feasibility_injected_fault" } else { "feasibility" }, cases)
}

/// Stirling-number law of `Ñ(d)` equals the exhaustive histogram.
pub fn check_distinct_distribution(pairs: &[(usize, usize)], cap: u64) -> CheckResult {
    let cases = pairs
        .par_iter()
        .map(|&(n, k)| {
            let closed = DistinctRequestDistribution::new(n, k).expect("N, K >= 1");
            match enumerate_distinct_distribution(n, k, cap) {
                Ok(empirical) if empirical == closed => vec![],
                Ok(empirical) => vec![Failure {
                    witness: format!("(N={n}, K={k})"),
                    detail: format!("Stirling {:?} != enumeration {:?}", closed.probabilities, empirical.probabilities),
                }],
                Err(e) => vec![Failure {
                    witness: format!("(N={n}, K={k})"),
                    detail: e.to_string(),
                }],
            }
        })
        .collect();
    collect("distinct_distribution_vs_enumeration", cases)
}

/// Stirling-weighted expected rate equals the average over every demand.
pub fn check_expected_rate_vs_enumeration(instances: &[ProblemInstance], cap: u64) -> CheckResult {
    let cases = instances
        .par_iter()
        .map(|inst| {
            let a = optimal_placement(inst);
            let closed = expected_rate(inst, &a).expect("feasible");
            match enumerate_expected_rate(inst, &a, cap) {
                Ok(e) if e == closed => vec![],
                Ok(e) => vec![Failure::new(inst, None, format!("Stirling form {closed} != enumeration {e}"))],
                Err(e) => vec![Failure::new(inst, None, e.to_string())],
            }
        })
        .collect();
    collect("expected_rate_vs_enumeration", cases)
}

/// The three redundancy-case formulas agree with the binomial rate.
pub fn check_case_breakdown(instances: &[ProblemInstance]) -> CheckResult {
    let cases = instances
        .par_iter()
        .filter(|i| !i.mu().is_zero())
        .map(|inst| {
            let a = optimal_placement(inst);
            (1..=inst.max_distinct())
                .filter_map(|n| {
                    let case = case_rate_breakdown(inst, n).expect("mu > 0");
                    let direct = per_demand_rate(inst, &a, n).expect("in range");
                    (case.rate != direct).then(|| {
                        Failure::new(inst, None, format!("ñ={n}: {} case gives {} but R = {direct}", case.case, case.rate))
                    })
                })
                .collect()
        })
        .collect();
    collect("case_breakdown_vs_rate", cases)
}

/// For each `(N, K)`, the minimum expected rate does not increase with `M`,
/// equals `E[Ñ]` at `M = 0` and zero at `M = N`.
pub fn check_monotonicity(grid: &Grid) -> CheckResult {
    let pairs: Vec<(usize, usize)> = grid
        .users
        .clone()
        .flat_map(|k| grid.files.clone().map(move |n| (n, k)))
        .collect();
    let cases = pairs
        .par_iter()
        .map(|&(n, k)| {
            let mut failures = Vec::new();
            let mut previous: Option<(Rational, Rational)> = None;
            for m in grid.cache.values(n) {
                let inst = ProblemInstance::new(n, k, m.clone()).expect("grid");
                let rate = minimum_expected_rate(&inst);
                if m.is_zero() && rate != inst.distinct_distribution().mean() {
                    failures.push(Failure::new(&inst, None, format!("R(0) = {rate} != E[Ñ]")));
                }
                if m == integer(n) && !rate.is_zero() {
                    failures.push(Failure::new(&inst, None, format!("R(N) = {rate} != 0")));
                }
                if let Some((pm, pr)) = &previous {
                    if rate > *pr {
                        failures.push(Failure::new(&inst, None, format!("rate rose from {pr} at M={pm} to {rate}")));
                    }
                }
                previous = Some((m, rate));
            }
            failures
        })
        .collect();
    collect("monotonic_in_cache_size", cases)
}

/// Simulates every demand of `inst` under its optimal placement and checks
/// load, bit-exact decoding, and cache occupancy.
pub fn check_delivery_instance(inst: &ProblemInstance, sources: &[PayloadSource], cap: u64) -> Vec<Failure> {
    let a = optimal_placement(inst);
    let f = match choose_file_size(&a) {
        Ok(f) => f,
        Err(e) => return vec![Failure::new(inst, None, e.to_string())],
    };
    let total = (inst.files() as u64).checked_pow(inst.users() as u32);
    if total.is_none_or(|t| t > cap) {
        return vec![Failure::new(inst, None, format!("demand space exceeds the cap of {cap}"))];
    }
    let interior = !inst.mu().is_zero() && !inst.mu().is_one();
    let budget = inst.cache_size() * integer(f);
    let mut failures = Vec::new();
    for &source in sources {
        let (store, caches) = match partition_and_cache(inst, &a, f, source) {
            Ok(v) => v,
            Err(e) => return vec![Failure::new(inst, None, e.to_string())],
        };
        for cache in &caches {
            let used = integer(cache.occupancy_bits());
            if used > budget || (interior && used != budget) {
                failures.push(Failure::new(
                    inst,
                    None,
                    format!("user {} caches {used} bits, budget {budget}", cache.user + 1),
                ));
            }
        }
        let demand_failures: Vec<Failure> = DemandVector::all(inst.files(), inst.users())
            .collect::<Vec<_>>()
            .par_iter()
            .flat_map_iter(|d| {
                let mut out = Vec::new();
                match simulate_demand(inst, &a, d, &store, &caches) {
                    Err(e) => out.push(Failure::new(inst, Some(d), e.to_string())),
                    Ok(sim) => {
                        if sim.load != sim.expected_load {
                            out.push(Failure::new(inst, Some(d), format!("delivered {} != R = {}", sim.load, sim.expected_load)));
                        }
                        for (user, r) in sim.decoded.iter().enumerate() {
                            match r {
                                Ok(bits) if bits == store.original(d.file_of(user)) => {}
                                Ok(_) => out.push(Failure::new(inst, Some(d), format!("user {} decoded wrong bits ({source})", user + 1))),
                                Err(e) => out.push(Failure::new(inst, Some(d), format!("{e} ({source})"))),
                            }
                        }
                    }
                }
                out
            })
            .collect();
        failures.extend(demand_failures);
    }
    failures
}

pub fn check_delivery(instances: &[ProblemInstance], sources: &[PayloadSource], cap: u64) -> CheckResult {
    let cases = instances
        .iter()
        .map(|inst| check_delivery_instance(inst, sources, cap))
        .collect();
    collect("delivery_decodability", cases)
}

/// A demand with `min(N, K)` distinct files: `1, 2, ..., then file 1 again`.
pub fn worst_case_demand(inst: &ProblemInstance) -> DemandVector {
    let entries = (0..inst.users()).map(|u| u % inst.files() + 1).collect();
    DemandVector::new(inst.files(), entries).expect("entries are in range")
}

/// Dropping any single message from a worst-case transcript must leave
/// some user unable to decode.
pub fn check_mutation_instance(inst: &ProblemInstance, seed: u64) -> Vec<Failure> {
    let a = optimal_placement(inst);
    let result = choose_file_size(&a).and_then(|f| partition_and_cache(inst, &a, f, PayloadSource::Random(seed)));
    let (store, caches) = match result {
        Ok(v) => v,
        Err(e) => return vec![Failure::new(inst, None, e.to_string())],
    };
    let d = worst_case_demand(inst);
    let transcript = match crate::delivery::build_messages(inst, &a, &d, &store) {
        Ok(t) => t,
        Err(e) => return vec![Failure::new(inst, Some(&d), e.to_string())],
    };
    (0..transcript.messages.len())
        .filter_map(|i| {
            let cut = transcript.without_message(i);
            let noticed = caches.iter().any(|c| {
                crate::delivery::decode_check(&cut, c)
                    .map_or(true, |bits| &bits != store.original(d.file_of(c.user)))
            });
            (!noticed).then(|| {
                Failure::new(inst, Some(&d), format!("dropping message to {} went unnoticed", transcript.messages[i].subset))
            })
        })
        .collect()
}

pub fn check_mutation(instances: &[ProblemInstance], seed: u64) -> CheckResult {
    let cases = instances
        .par_iter()
        .filter(|i| !i.mu().is_one())
        .map(|inst| check_mutation_instance(inst, seed))
        .collect();
    collect("mutation_sensitivity", cases)
}

/// Options for [`run_suite`].
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub grid: Grid,
    /// Enumeration checks only run where both `N` and `K` are at most this.
    pub enumeration_max: usize,
    /// Delivery simulation only runs where `K` and `N` are at most these,
    /// on the half-integer cache grid.
    pub simulation_users: usize,
    pub simulation_files: usize,
    pub cap: u64,
    pub seed: u64,
    pub inject_fault: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            grid: Grid::default(),
            enumeration_max: 5,
            simulation_users: 4,
            simulation_files: 3,
            cap: crate::demand_oracle::DEFAULT_ENUMERATION_CAP,
            seed: 0,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

pub fn run_suite(config: &SuiteConfig) -> VerifyReport {
    let instances = config.grid.instances();
    let small: Vec<ProblemInstance> = instances
        .iter()
        .filter(|i| i.files() <= config.enumeration_max && i.users() <= config.enumeration_max)
        .cloned()
        .collect();
    let mut pairs: Vec<(usize, usize)> = small.iter().map(|i| (i.files(), i.users())).collect();
    pairs.dedup();
    let simulated: Vec<ProblemInstance> = instances
        .iter()
        .filter(|i| {
            i.users() <= config.simulation_users
                && i.files() <= config.simulation_files
                && (i.cache_size() * integer(2)).is_integer()
        })
        .cloned()
        .collect();
    let sources = [PayloadSource::Random(config.seed), PayloadSource::Zeros, PayloadSource::Ones];

    let mut checks = vec![
        check_feasibility(&instances, config.inject_fault),
        check_theorem_vs_lp(&instances),
        check_lemmas(&instances),
        check_case_breakdown(&instances),
        check_monotonicity(&config.grid),
        check_distinct_distribution(&pairs, config.cap),
        check_expected_rate_vs_enumeration(&small, config.cap),
        check_delivery(&simulated, &sources, config.cap),
    ];
    let mutated: Vec<ProblemInstance> = simulated.iter().filter(|i| !i.mu().is_zero()).cloned().collect();
    checks.push(check_mutation(&mutated, config.seed));
    VerifyReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = Grid::parse("K=7 N=10 M=0..10").unwrap();
        assert_eq!(g.users, 7..=7);
        assert_eq!(g.files, 10..=10);
        assert_eq!(g.instances().len(), 11);

        let g = Grid::parse("K=1..3 N=2 M=:1/2").unwrap();
        assert_eq!(g.instances().len(), 3 * 5);

        let g = Grid::parse("K=2 N=3 M=1/2..2:1/2").unwrap();
        let ms: Vec<Rational> = g.instances().iter().map(|i| i.cache_size().clone()).collect();
        assert_eq!(ms, vec![ratio(1, 2), integer(1), ratio(3, 2), integer(2)]);

        assert!(Grid::parse("K=0 N=1").is_err());
        assert!(Grid::parse("X=1").is_err());
        assert!(Grid::parse("M=0..1:0").is_err());
    }

    #[test]
    fn cache_grid_clips_to_file_count() {
        let g = CacheGrid::Range {
            start: integer(0),
            end: integer(10),
            step: integer(1),
        };
        assert_eq!(g.values(3).len(), 4);
        assert_eq!(CacheGrid::quarters().values(2).len(), 9);
    }

    #[test]
    fn small_suite_passes() {
        let config = SuiteConfig {
            grid: Grid::parse("K=1..4 N=1..3 M=:1/4").unwrap(),
            simulation_users: 3,
            simulation_files: 2,
            ..SuiteConfig::default()
        };
        let report = run_suite(&config);
        for c in &report.checks {
            assert!(c.passed(), "{c}: {:?}", c.failures.first());
            assert!(c.cases > 0, "{c}");
        }
    }

    #[test]
    fn injected_fault_is_reported() {
        let instances = Grid::parse("K=7 N=10 M=0..10").unwrap().instances();
        let result = check_feasibility(&instances, true);
        assert!(!result.passed());
        assert_eq!(result.failures.iter().map(|f| &f.witness).collect::<std::collections::BTreeSet<_>>().len(), 11);
        assert!(check_feasibility(&instances, false).passed());
    }

    #[test]
    fn worst_case_demand_has_max_distinct() {
        for (n, k) in [(2, 5), (5, 2), (3, 3)] {
            let inst = ProblemInstance::new(n, k, integer(1)).unwrap();
            assert_eq!(worst_case_demand(&inst).distinct(), n.min(k));
        }
    }
}
