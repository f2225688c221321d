//! Binomial coefficients, Stirling numbers of the second kind, and the
//! distribution of the number of distinct files requested by `K` users
//! drawing uniformly from `N` files.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// `C(n, k)`, extended by zero outside `0 <= k <= n`.
pub fn binom(n: i64, k: i64) -> BigUint {
    if n < 0 || k < 0 || k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// [`binom`] as an exact rational.
pub fn binom_q(n: i64, k: i64) -> Rational {
    Rational::from_integer(BigInt::from(binom(n, k)))
}

/// Number of partitions of an `n`-set into `k` nonempty blocks.
pub fn stirling2(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    // row[j] holds S(i, j) for the current i.
    let mut row = vec![BigUint::zero(); k + 1];
    row[0] = BigUint::one();
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            let carried = std::mem::take(&mut row[j]) * j;
            row[j] = carried + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    row.swap_remove(k)
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Probability that `users` i.i.d. uniform requests over `files` files hit
/// exactly `distinct` different files: `S(K, n) C(N, n) n! / N^K`.
pub fn prob_distinct(files: usize, users: usize, distinct: usize) -> Result<Rational> {
    if files == 0 || users == 0 {
        return Err(Error::InvalidInstance(format!(
            "need N >= 1 and K >= 1, got N = {files}, K = {users}"
        )));
    }
    let max = files.min(users);
    if distinct < 1 || distinct > max {
        return Err(Error::OutOfRange {
            what: "distinct request count",
            value: distinct as i64,
            min: 1,
            max: max as i64,
        });
    }
    let numer = stirling2(users, distinct) * binom(files as i64, distinct as i64) * factorial(distinct);
    let denom = num_traits::pow(BigUint::from(files), users);
    Ok(Rational::new(BigInt::from(numer), BigInt::from(denom)))
}

/// Number of distinct file indices in a demand.
pub fn distinct_count(demand: &[usize]) -> Result<usize> {
    if demand.is_empty() {
        return Err(Error::EmptyDemand);
    }
    let mut seen: Vec<usize> = demand.to_vec();
    seen.sort_unstable();
    seen.dedup();
    Ok(seen.len())
}

/// Exact law of the number of distinct requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinctRequestDistribution {
    pub files: usize,
    pub users: usize,
    pub probabilities: BTreeMap<usize, Rational>,
}

impl DistinctRequestDistribution {
    pub fn new(files: usize, users: usize) -> Result<Self> {
        let probabilities = (1..=files.min(users))
            .map(|n| prob_distinct(files, users, n).map(|p| (n, p)))
            .collect::<Result<_>>()?;
        Ok(Self {
            files,
            users,
            probabilities,
        })
    }

    pub fn probability(&self, distinct: usize) -> Rational {
        self.probabilities
            .get(&distinct)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// `E[Ñ(d)]`.
    pub fn mean(&self) -> Rational {
        self.probabilities
            .iter()
            .map(|(&n, p)| p * Rational::from_integer(BigInt::from(n)))
            .sum()
    }

    pub fn total(&self) -> Rational {
        self.probabilities.values().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    /// Counts set partitions of `{0..n}` into `k` blocks by assigning each
    /// element a block label in restricted-growth form.
    fn brute_force_partitions(n: usize, k: usize) -> u64 {
        fn go(i: usize, n: usize, k: usize, used: usize) -> u64 {
            if i == n {
                return u64::from(used == k);
            }
            let mut total = 0;
            for label in 0..=used.min(k.saturating_sub(1)) {
                let next = if label == used { used + 1 } else { used };
                if next <= k {
                    total += go(i + 1, n, k, next);
                }
            }
            total
        }
        if n == 0 {
            return u64::from(k == 0);
        }
        go(0, n, k, 0)
    }

    #[test]
    fn binom_examples() {
        assert_eq!(binom(5, 2), BigUint::from(10u32));
        assert_eq!(binom(-1, 2), BigUint::zero());
        assert_eq!(binom(3, 5), BigUint::zero());
        assert_eq!(binom(3, -1), BigUint::zero());
        assert_eq!(binom(0, 0), BigUint::one());
        assert_eq!(binom(60, 30), "118264581564861424".parse::<BigUint>().unwrap());
    }

    #[test]
    fn pascal_identity() {
        for n in 1..=30 {
            for k in 1..=n {
                assert_eq!(binom(n, k), binom(n - 1, k - 1) + binom(n - 1, k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn stirling_examples() {
        assert_eq!(stirling2(3, 3), BigUint::one());
        assert_eq!(stirling2(4, 1), BigUint::one());
        assert_eq!(stirling2(0, 0), BigUint::one());
        assert_eq!(stirling2(3, 0), BigUint::zero());
        assert_eq!(stirling2(2, 3), BigUint::zero());
        assert_eq!(brute_force_partitions(4, 2), 7);
        assert_eq!(stirling2(4, 2), BigUint::from(7u32));
    }

    #[test]
    fn stirling_matches_brute_force() {
        for n in 0..=8 {
            for k in 0..=n {
                assert_eq!(stirling2(n, k), BigUint::from(brute_force_partitions(n, k)), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn stirling_diagonal_and_first_column() {
        for n in 1..=20 {
            assert_eq!(stirling2(n, n), BigUint::one());
            assert_eq!(stirling2(n, 1), BigUint::one());
        }
    }

    #[test]
    fn prob_distinct_examples() {
        assert_eq!(prob_distinct(2, 2, 1).unwrap(), ratio(1, 2));
        assert_eq!(prob_distinct(2, 2, 2).unwrap(), ratio(1, 2));
        assert_eq!(prob_distinct(1, 3, 1).unwrap(), ratio(1, 1));
        assert_eq!(prob_distinct(3, 2, 2).unwrap(), ratio(2, 3));
        assert_eq!(prob_distinct(2, 3, 1).unwrap(), ratio(1, 4));
        assert_eq!(prob_distinct(2, 3, 2).unwrap(), ratio(3, 4));
    }

    #[test]
    fn prob_distinct_domain() {
        assert!(matches!(prob_distinct(2, 2, 0), Err(Error::OutOfRange { .. })));
        assert!(matches!(prob_distinct(2, 5, 3), Err(Error::OutOfRange { .. })));
        assert!(matches!(prob_distinct(0, 2, 1), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn distribution_sums_to_one() {
        for n in 1..=6 {
            for k in 1..=6 {
                let dist = DistinctRequestDistribution::new(n, k).unwrap();
                assert_eq!(dist.total(), ratio(1, 1), "N={n} K={k}");
                for p in dist.probabilities.values() {
                    assert!(*p >= ratio(0, 1) && *p <= ratio(1, 1));
                }
            }
        }
    }

    #[test]
    fn distinct_count_examples() {
        assert_eq!(distinct_count(&[1, 1, 2]).unwrap(), 2);
        assert_eq!(distinct_count(&[3, 3, 3]).unwrap(), 1);
        assert_eq!(distinct_count(&[1, 2, 3]).unwrap(), 3);
        assert_eq!(distinct_count(&[]), Err(Error::EmptyDemand));
    }

    proptest! {
        #[test]
        fn binom_symmetry(n in 0i64..60, k in 0i64..60) {
            prop_assume!(k <= n);
            prop_assert_eq!(binom(n, k), binom(n, n - k));
        }
    }
}
