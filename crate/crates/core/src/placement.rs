//! Problem instances, placement vectors, the closed-form optimal placement,
//! and exact rate evaluation.
//!
//! A placement vector `a = [a_0, ..., a_K]` gives, for each subset size `l`,
//! the fraction of a file stored in each subfile `W_{n,S}` with `|S| = l`.
//! Every rate here is computed from the binomial form
//! `R(ñ) = Σ_{l<K} [C(K, l+1) - C(K-ñ, l+1)] a_l`. The product form sometimes
//! quoted for the single-subgroup case has a denominator running to
//! `K - ñ - 1` that does not agree with the binomial form, so it is not used.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::combinatorics::{binom_q, DistinctRequestDistribution};
use crate::error::{Error, Result};
use crate::rational::{integer, Rational};

/// `N` files of unit size, `K` users each with a cache of `M` files.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProblemInstance {
    files: usize,
    users: usize,
    cache: Rational,
    mu: Rational,
}

impl ProblemInstance {
    pub fn new(files: usize, users: usize, cache: Rational) -> Result<Self> {
        if files == 0 || users == 0 {
            return Err(Error::InvalidInstance(format!(
                "need N >= 1 and K >= 1, got N = {files}, K = {users}"
            )));
        }
        if cache.is_negative() || cache > integer(files) {
            return Err(Error::InvalidInstance(format!(
                "cache size M = {cache} must lie in [0, {files}]"
            )));
        }
        let mu = &cache / integer(files);
        Ok(Self {
            files,
            users,
            cache,
            mu,
        })
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn cache_size(&self) -> &Rational {
        &self.cache
    }

    /// Normalized cache size `M / N`.
    pub fn mu(&self) -> &Rational {
        &self.mu
    }

    pub fn mu_k(&self) -> Rational {
        &self.mu * integer(self.users)
    }

    /// Largest possible number of distinct requests, `min(N, K)`.
    pub fn max_distinct(&self) -> usize {
        self.files.min(self.users)
    }

    /// The unique integer `l*` with `μK - 1 <= l* < μK`, or `None` when `μ = 0`.
    pub fn boundary_index(&self) -> Option<usize> {
        let mu_k = self.mu_k();
        if mu_k.is_zero() {
            return None;
        }
        let l: num_bigint::BigInt = mu_k.ceil().to_integer() - 1;
        l.to_usize()
    }

    pub fn distinct_distribution(&self) -> DistinctRequestDistribution {
        DistinctRequestDistribution::new(self.files, self.users)
            .expect("instance has N, K >= 1")
    }

    fn check_distinct(&self, distinct: usize) -> Result<()> {
        let max = self.max_distinct();
        if distinct < 1 || distinct > max {
            return Err(Error::OutOfRange {
                what: "distinct request count",
                value: distinct as i64,
                min: 1,
                max: max as i64,
            });
        }
        Ok(())
    }
}

impl fmt::Display for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(N={}, K={}, M={})", self.files, self.users, self.cache)
    }
}

/// Subfile-size fractions `a_0..=a_K`; zeros are kept so the length is
/// always `K + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlacementVector(Vec<Rational>);

impl PlacementVector {
    pub fn new(entries: Vec<Rational>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, level: usize) -> Rational {
        self.0.get(level).cloned().unwrap_or_else(Rational::zero)
    }

    /// Users in the system this vector was built for.
    pub fn users(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Indices of the nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(l, _)| l)
            .collect()
    }

    /// `Σ_l C(K, l) a_l`, the fraction of each file covered by subfiles.
    pub fn partition_total(&self) -> Rational {
        let k = self.users() as i64;
        self.0
            .iter()
            .enumerate()
            .map(|(l, a)| binom_q(k, l as i64) * a)
            .sum()
    }

    /// `Σ_{l>=1} C(K-1, l-1) a_l`, the per-file fraction a user caches.
    pub fn cache_usage(&self) -> Rational {
        let k = self.users() as i64;
        self.0
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, a)| binom_q(k - 1, l as i64 - 1) * a)
            .sum()
    }

    /// The vector with `a_l` replaced by `a_{K-l}`.
    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().cloned().collect())
    }
}

impl FromIterator<Rational> for PlacementVector {
    fn from_iter<I: IntoIterator<Item = Rational>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// One violated caching constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Violation {
    /// `Σ C(K,l) a_l != 1`.
    Partition {
        #[serde(serialize_with = "ser_rational")]
        total: Rational,
    },
    /// `Σ C(K-1,l-1) a_l > μ`.
    CacheSize {
        #[serde(serialize_with = "ser_rational")]
        used: Rational,
        #[serde(serialize_with = "ser_rational")]
        budget: Rational,
    },
    /// `a_l` outside `[0, 1]`.
    Bounds {
        level: usize,
        #[serde(serialize_with = "ser_rational")]
        value: Rational,
    },
}

fn ser_rational<S: serde::Serializer>(v: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::rational::to_fraction(v))
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Partition { total } => {
                write!(f, "partition constraint: subfile sizes sum to {total}, not 1")
            }
            Violation::CacheSize { used, budget } => {
                write!(f, "cache constraint: per-file cache usage {used} exceeds mu = {budget}")
            }
            Violation::Bounds { level, value } => {
                write!(f, "bound constraint: a_{level} = {value} is outside [0, 1]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the partition, cache-size, and `[0, 1]` bound constraints exactly.
pub fn check_feasible(inst: &ProblemInstance, a: &PlacementVector) -> Result<FeasibilityReport> {
    if a.len() != inst.users() + 1 {
        return Err(Error::LengthMismatch {
            expected: inst.users() + 1,
            got: a.len(),
        });
    }
    let mut violations = Vec::new();
    let total = a.partition_total();
    if !total.is_one() {
        violations.push(Violation::Partition { total });
    }
    let used = a.cache_usage();
    if &used > inst.mu() {
        violations.push(Violation::CacheSize {
            used,
            budget: inst.mu().clone(),
        });
    }
    for (level, value) in a.entries().iter().enumerate() {
        if value.is_negative() || *value > Rational::one() {
            violations.push(Violation::Bounds {
                level,
                value: value.clone(),
            });
        }
    }
    Ok(FeasibilityReport { violations })
}

fn require_feasible(inst: &ProblemInstance, a: &PlacementVector) -> Result<()> {
    let report = check_feasible(inst, a)?;
    if report.is_feasible() {
        Ok(())
    } else {
        Err(Error::Infeasible(report.violations))
    }
}

/// The optimal placement minimizing the expected delivery rate.
///
/// Nonzero entries sit at `l*` and `l* + 1` where `μK - 1 <= l* < μK`:
/// `a_{l*} = (l* + 1 - μK) / C(K, l*)` and `a_{l*+1} = (μK - l*) / C(K, l*+1)`.
/// When `μK` is an integer the first of these is zero.
pub fn optimal_placement(inst: &ProblemInstance) -> PlacementVector {
    let k = inst.users();
    let mut a = vec![Rational::zero(); k + 1];
    if inst.mu().is_zero() {
        a[0] = Rational::one();
        return PlacementVector(a);
    }
    if inst.mu().is_one() {
        a[k] = Rational::one();
        return PlacementVector(a);
    }
    let l = inst.boundary_index().expect("mu > 0");
    let mu_k = inst.mu_k();
    a[l] = (integer(l + 1) - &mu_k) / binom_q(k as i64, l as i64);
    a[l + 1] = (&mu_k - integer(l)) / binom_q(k as i64, l as i64 + 1);
    PlacementVector(a)
}

fn rate_unchecked(users: usize, a: &PlacementVector, distinct: usize) -> Rational {
    let k = users as i64;
    let n = distinct as i64;
    a.entries()
        .iter()
        .enumerate()
        .take(users)
        .filter(|(_, al)| !al.is_zero())
        .map(|(l, al)| {
            let l = l as i64;
            (binom_q(k, l + 1) - binom_q(k - n, l + 1)) * al
        })
        .sum()
}

/// Load (in files) delivered for any demand with `distinct` different files.
pub fn per_demand_rate(inst: &ProblemInstance, a: &PlacementVector, distinct: usize) -> Result<Rational> {
    inst.check_distinct(distinct)?;
    if a.len() != inst.users() + 1 {
        return Err(Error::LengthMismatch {
            expected: inst.users() + 1,
            got: a.len(),
        });
    }
    Ok(rate_unchecked(inst.users(), a, distinct))
}

/// `R(ñ)` for every `ñ` in `1..=min(N, K)`.
pub fn per_distinct_rates(inst: &ProblemInstance, a: &PlacementVector) -> Result<BTreeMap<usize, Rational>> {
    (1..=inst.max_distinct())
        .map(|n| per_demand_rate(inst, a, n).map(|r| (n, r)))
        .collect()
}

/// Expected load under uniformly random demands, `Σ_ñ P(ñ) R(ñ)`.
pub fn expected_rate(inst: &ProblemInstance, a: &PlacementVector) -> Result<Rational> {
    require_feasible(inst, a)?;
    let dist = inst.distinct_distribution();
    Ok(dist
        .probabilities
        .iter()
        .map(|(&n, p)| p * rate_unchecked(inst.users(), a, n))
        .sum())
}

/// Minimum expected rate straight from the closed-form expression in
/// `l*`, `μ`, `K` and `N`, without building the placement vector.
pub fn minimum_expected_rate(inst: &ProblemInstance) -> Rational {
    let dist = inst.distinct_distribution();
    if inst.mu().is_zero() {
        return dist.mean();
    }
    if inst.mu().is_one() {
        return Rational::zero();
    }
    let k = inst.users() as i64;
    let l = inst.boundary_index().expect("mu > 0") as i64;
    let mu_k = inst.mu_k();
    let low = (integer(l + 1) - &mu_k) / binom_q(k, l);
    let high = (&mu_k - integer(l)) / binom_q(k, l + 1);
    dist.probabilities
        .iter()
        .map(|(&n, p)| {
            let n = n as i64;
            let first = (binom_q(k, l + 1) - binom_q(k - n, l + 1)) * &low;
            let second = (binom_q(k, l + 2) - binom_q(k - n, l + 2)) * &high;
            p * (first + second)
        })
        .sum()
}

/// Rate of the unmodified scheme, which multicasts to every subset of size
/// `l + 1` regardless of the demand.
pub fn peak_rate_ccs(users: usize, a: &PlacementVector) -> Rational {
    let k = users as i64;
    a.entries()
        .iter()
        .enumerate()
        .take(users)
        .map(|(l, al)| binom_q(k, l as i64 + 1) * al)
        .sum()
}

/// Worst-case load, attained when `min(N, K)` distinct files are requested.
pub fn peak_rate_mccs(inst: &ProblemInstance, a: &PlacementVector) -> Result<Rational> {
    require_feasible(inst, a)?;
    per_demand_rate(inst, a, inst.max_distinct())
}

/// Which subset sizes carry redundant messages for a given `ñ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RedundancyCase {
    /// `K - ñ >= l* + 2`: redundant subsets at both sizes `l*+1` and `l*+2`.
    BothLevels,
    /// `K - ñ = l* + 1`: redundant subsets only at size `l*+1`.
    LowerLevelOnly,
    /// `K - ñ < l* + 1`: nothing is redundant.
    None,
}

impl fmt::Display for RedundancyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RedundancyCase::BothLevels => "both-levels",
            RedundancyCase::LowerLevelOnly => "lower-level-only",
            RedundancyCase::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseRate {
    pub case: RedundancyCase,
    pub rate: Rational,
}

/// Evaluates the per-demand rate under the optimal placement by the
/// case-specific closed form matching the redundancy pattern of `ñ`.
pub fn case_rate_breakdown(inst: &ProblemInstance, distinct: usize) -> Result<CaseRate> {
    inst.check_distinct(distinct)?;
    let Some(l) = inst.boundary_index() else {
        return Err(Error::InvalidInstance(
            "the two-subgroup breakdown needs a nonzero cache".into(),
        ));
    };
    let k = inst.users() as i64;
    let n = distinct as i64;
    let l = l as i64;
    let mu_k = inst.mu_k();
    let low = (integer(l + 1) - &mu_k) / binom_q(k, l);
    let high = (&mu_k - integer(l)) / binom_q(k, l + 1);
    let remaining = k - n;
    let (case, rate) = if remaining >= l + 2 {
        (
            RedundancyCase::BothLevels,
            (binom_q(k, l + 1) - binom_q(remaining, l + 1)) * &low
                + (binom_q(k, l + 2) - binom_q(remaining, l + 2)) * &high,
        )
    } else if remaining == l + 1 {
        (
            RedundancyCase::LowerLevelOnly,
            (binom_q(k, l + 1) - binom_q(remaining, l + 1)) * &low + binom_q(k, l + 2) * &high,
        )
    } else {
        (
            RedundancyCase::None,
            binom_q(k, l + 1) * &low + binom_q(k, l + 2) * &high,
        )
    };
    Ok(CaseRate { case, rate })
}

/// Expected, peak, and per-`ñ` rates of one placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateReport {
    pub expected_rate: Rational,
    pub peak_rate_mccs: Rational,
    pub peak_rate_ccs: Rational,
    pub per_distinct_rates: BTreeMap<usize, Rational>,
}

pub fn rate_report(inst: &ProblemInstance, a: &PlacementVector) -> Result<RateReport> {
    require_feasible(inst, a)?;
    let per_distinct_rates = per_distinct_rates(inst, a)?;
    let dist = inst.distinct_distribution();
    let expected_rate = per_distinct_rates
        .iter()
        .map(|(&n, r)| dist.probability(n) * r)
        .sum();
    let peak_rate_mccs = per_distinct_rates[&inst.max_distinct()].clone();
    Ok(RateReport {
        expected_rate,
        peak_rate_mccs,
        peak_rate_ccs: peak_rate_ccs(inst.users(), a),
        per_distinct_rates,
    })
}

/// True when `μK` is an integer, i.e. the optimum uses a single subgroup.
pub fn is_equal_partitioning_point(inst: &ProblemInstance) -> bool {
    inst.mu_k().is_integer()
}
