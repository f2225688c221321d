//! Ground truth for rate formulas: exact averages over every demand vector,
//! and seeded Monte Carlo estimates where enumeration is too large.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combinatorics::{distinct_count, DistinctRequestDistribution};
use crate::error::{Error, Result};
use crate::placement::{per_distinct_rates, PlacementVector, ProblemInstance};
use crate::rational::{to_f64, Rational};

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Requested file (1-based) for each user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DemandVector {
    files: usize,
    entries: Vec<usize>,
}

impl DemandVector {
    pub fn new(files: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyDemand);
        }
        if let Some((position, &value)) = entries.iter().enumerate().find(|(_, &v)| v == 0 || v > files) {
            return Err(Error::InvalidDemand {
                position: position + 1,
                value,
                files,
            });
        }
        Ok(Self { files, entries })
    }

    /// Parses `"1,1,2"`.
    pub fn parse(files: usize, text: &str) -> Result<Self> {
        let entries = text
            .split(',')
            .map(|s| {
                s.trim().parse::<usize>().map_err(|_| Error::Parse {
                    input: text.to_string(),
                    reason: format!("{s:?} is not a file index"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(files, entries)
    }

    /// The demand at position `index` in mixed-radix order: user 1 is the
    /// most significant digit.
    pub fn from_index(files: usize, users: usize, mut index: u64) -> Self {
        let mut entries = vec![1; users];
        for slot in entries.iter_mut().rev() {
            *slot = (index % files as u64) as usize + 1;
            index /= files as u64;
        }
        Self { files, entries }
    }

    /// Every demand vector, in mixed-radix order.
    pub fn all(files: usize, users: usize) -> impl Iterator<Item = DemandVector> {
        let total = (files as u64).pow(users as u32);
        (0..total).map(move |i| Self::from_index(files, users, i))
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    /// File requested by 0-based `user`.
    pub fn file_of(&self, user: usize) -> usize {
        self.entries[user]
    }

    pub fn distinct(&self) -> usize {
        distinct_count(&self.entries).expect("demand vectors are nonempty")
    }
}

impl fmt::Display for DemandVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

fn demand_space(files: usize, users: usize, cap: u64) -> Result<u64> {
    let size = num_traits::pow(BigUint::from(files), users);
    match size.to_u64() {
        Some(n) if n <= cap => Ok(n),
        _ => Err(Error::EnumerationCap {
            size: size.to_string(),
            cap,
        }),
    }
}

const CHUNK: u64 = 1 << 14;

/// Histogram of `Ñ(d)` over all demands, built in independent chunks and
/// merged by addition.
fn distinct_histogram(files: usize, users: usize, cap: u64) -> Result<(u64, Vec<u64>)> {
    let total = demand_space(files, users, cap)?;
    let buckets = files.min(users) + 1;
    let chunks = total.div_ceil(CHUNK);
    let histogram = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = vec![0u64; buckets];
            let mut seen = vec![false; files];
            for i in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let d = DemandVector::from_index(files, users, i);
                seen.iter_mut().for_each(|s| *s = false);
                let mut distinct = 0;
                for &f in d.entries() {
                    if !seen[f - 1] {
                        seen[f - 1] = true;
                        distinct += 1;
                    }
                }
                local[distinct] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; buckets],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok((total, histogram))
}

/// Exact empirical law of `Ñ(d)` over all `N^K` demands.
pub fn enumerate_distinct_distribution(files: usize, users: usize, cap: u64) -> Result<DistinctRequestDistribution> {
    if files == 0 || users == 0 {
        return Err(Error::InvalidInstance(format!(
            "need N >= 1 and K >= 1, got N = {files}, K = {users}"
        )));
    }
    let (total, histogram) = distinct_histogram(files, users, cap)?;
    let probabilities = histogram
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &count)| (n, Rational::new(BigInt::from(count), BigInt::from(total))))
        .collect();
    Ok(DistinctRequestDistribution {
        files,
        users,
        probabilities,
    })
}

/// `(1 / N^K) Σ_d R(Ñ(d))`, summed exactly over every demand vector.
pub fn enumerate_expected_rate(inst: &ProblemInstance, a: &PlacementVector, cap: u64) -> Result<Rational> {
    let rates = per_distinct_rates(inst, a)?;
    let (total, histogram) = distinct_histogram(inst.files(), inst.users(), cap)?;
    let sum: Rational = histogram
        .iter()
        .enumerate()
        .filter(|(_, &count)| count > 0)
        .map(|(n, &count)| &rates[&n] * Rational::from_integer(BigInt::from(count)))
        .sum();
    Ok(sum / Rational::from_integer(BigInt::from(total)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Mean of `R(Ñ(d))` over `trials` uniform demands drawn from a ChaCha8
/// stream seeded with `seed`.
pub fn monte_carlo_expected_rate(inst: &ProblemInstance, a: &PlacementVector, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(Error::InvalidInstance("Monte Carlo needs at least one trial".into()));
    }
    let rates: BTreeMap<usize, f64> = per_distinct_rates(inst, a)?
        .into_iter()
        .map(|(n, r)| (n, to_f64(&r)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (files, users) = (inst.files(), inst.users());
    let mut seen = vec![false; files];
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        seen.iter_mut().for_each(|s| *s = false);
        let mut distinct = 0;
        for _ in 0..users {
            let f = rng.random_range(0..files);
            if !seen[f] {
                seen[f] = true;
                distinct += 1;
            }
        }
        let r = rates[&distinct];
        sum += r;
        sum_sq += r * r;
    }
    let n = trials as f64;
    let mean = sum / n;
    let variance = if trials > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        mean,
        std_error: (variance / n).sqrt(),
        trials,
        seed,
    })
}

/// The first demand a Monte Carlo run with this seed draws.
pub fn sample_demand(files: usize, users: usize, seed: u64) -> DemandVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..users).map(|_| rng.random_range(0..files) + 1).collect();
    DemandVector { files, entries }
}
