//! Closed-form moments of the Manhattan walk, evaluated exactly.
//!
//! With `r = (2 - d) / d`:
//!
//! * `E[X_n] = c(d, n) (1, ..., 1)` where `c(d, n) = (1 - r^n) / (2 (d - 1))`
//! * `E|X_n|^2 = ((2(d-1)n - 1) d^n + (2-d)^n) / (d^(n-1) 2 (d-1)^2)`
//! * `v_{n+2} - (2/d) v_{n+1} - ((d-2)/d) v_n = 2` with `v_0 = 0`, `v_1 = 1`
//!
//! Powers at `n = 0` are 1, including `0^0` when `d = 2`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{pow, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Dimension;
use crate::rational::ExactRational;

fn big(d: Dimension) -> BigInt {
    BigInt::from(d.get())
}

/// `(2 - d) / d`, the per-step decay of the drift.
pub fn drift_ratio(d: Dimension) -> ExactRational {
    let d = d.get() as i64;
    ExactRational::new(2 - d, d).expect("d >= 2")
}

/// Per-coordinate mean `c(d, n)` with `E[X_n] = c(d, n) (1, ..., 1)`.
pub fn mean_coefficient(d: Dimension, n: u64) -> ExactRational {
    let num = ExactRational::one() - drift_ratio(d).pow(n);
    num / ExactRational::from_integer(2 * (d.get() as i64 - 1))
}

/// The closed-form expression for `E|X_n|^2` before reduction:
/// `numerator / (d^(n-1) * divisor)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsdLiteral {
    /// `(2(d-1)n - 1) d^n + (2-d)^n`
    pub numerator: BigInt,
    /// `2 (d-1)^2`
    pub divisor: BigInt,
    /// Exponent of `d` in the denominator, `n - 1` (so `-1` at `n = 0`).
    pub d_exponent: i64,
}

impl MsdLiteral {
    pub fn value(&self, d: Dimension) -> ExactRational {
        let base = ExactRational::from_integer(self.numerator.clone())
            / ExactRational::from_integer(self.divisor.clone());
        let scale = ExactRational::from_integer(pow(big(d), self.d_exponent.unsigned_abs() as usize));
        if self.d_exponent >= 0 {
            base / scale
        } else {
            base * scale
        }
    }
}

pub fn msd_literal(d: Dimension, n: u64) -> MsdLiteral {
    let dd = big(d);
    let n_big = BigInt::from(n);
    let lead = BigInt::from(2) * (&dd - 1) * n_big - 1;
    let numerator = lead * pow(dd.clone(), n as usize) + pow(BigInt::from(2) - &dd, n as usize);
    let divisor = BigInt::from(2) * pow(&dd - 1, 2);
    MsdLiteral { numerator, divisor, d_exponent: n as i64 - 1 }
}

/// Mean square displacement `v_n = E|X_n|^2`.
pub fn msd(d: Dimension, n: u64) -> ExactRational {
    msd_literal(d, n).value(d)
}

/// A run of moment values `v_0, v_1, ..., v_N` for one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub d: Dimension,
    pub values: Vec<ExactRational>,
}

impl MomentSeries {
    pub fn new(d: Dimension, values: Vec<ExactRational>) -> Self {
        MomentSeries { d, values }
    }

    /// `v_0..=v_{n_max}` from the closed form.
    pub fn from_closed_form(d: Dimension, n_max: u64) -> Self {
        MomentSeries { d, values: (0..=n_max).map(|n| msd(d, n)).collect() }
    }

    /// `v_0..=v_{n_max}` by iterating the second-order recurrence from
    /// `v_0 = 0`, `v_1 = 1`.
    pub fn from_recurrence(d: Dimension, n_max: u64) -> Self {
        let a = ExactRational::new(2, d.get() as i64).expect("d >= 2");
        let b = ExactRational::new(d.get() as i64 - 2, d.get() as i64).expect("d >= 2");
        let two = ExactRational::from(2);
        let mut values = vec![ExactRational::zero(), ExactRational::one()];
        while (values.len() as u64) <= n_max {
            let k = values.len();
            let next = &two + &(&a * &values[k - 1]) + &b * &values[k - 2];
            values.push(next);
        }
        values.truncate(n_max as usize + 1);
        MomentSeries { d, values }
    }

    pub fn get(&self, n: u64) -> Result<&ExactRational> {
        usize::try_from(n)
            .ok()
            .and_then(|i| self.values.get(i))
            .ok_or(Error::MissingIndex(n))
    }
}

/// `v_{n+2} - (2/d) v_{n+1} - ((d-2)/d) v_n`.
pub fn recurrence_residual(d: Dimension, v: &MomentSeries, n: u64) -> Result<ExactRational> {
    let v0 = v.get(n)?;
    let v1 = v.get(n + 1)?;
    let v2 = v.get(n + 2)?;
    let dd = d.get() as i64;
    let a = ExactRational::new(2, dd).expect("d >= 2");
    let b = ExactRational::new(dd - 2, dd).expect("d >= 2");
    Ok(v2 - &(&a * v1) - &b * v0)
}

/// Probability that a `Bin(n, (d-1)/d)` variable is even:
/// `1/2 + (1/2) ((2-d)/d)^n`.
pub fn parity_prob_even(d: Dimension, n: u64) -> ExactRational {
    let half = ExactRational::new(1, 2).unwrap();
    &half + &(&half * &drift_ratio(d).pow(n))
}

/// Per-coordinate mean increment `E[X_{n+1} - X_n] = (1/d) ((2-d)/d)^n`.
pub fn increment_mean(d: Dimension, n: u64) -> ExactRational {
    drift_ratio(d).pow(n) / ExactRational::from_integer(d.get() as i64)
}

/// `lim v_n / n = d / (d - 1)`.
pub fn diffusive_limit(d: Dimension) -> ExactRational {
    let d = d.get() as i64;
    ExactRational::new(d, d - 1).expect("d >= 2")
}

/// `v_n - n d / (d - 1)`.
pub fn diffusive_deviation(d: Dimension, n: u64) -> ExactRational {
    msd(d, n) - diffusive_limit(d) * ExactRational::from_integer(n)
}

/// Divides the literal numerator `(2(d-1)n - 1) d^n + (2-d)^n` by
/// `2 (d-1)^2`, returning the quotient and whether the remainder is zero.
pub fn numerator_divisibility(d: Dimension, n: u64) -> (BigInt, bool) {
    let lit = msd_literal(d, n);
    let (q, r) = lit.numerator.div_rem(&lit.divisor);
    (q, r.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn q(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n, d).unwrap()
    }

    #[test]
    fn mean_coefficient_examples() {
        assert_eq!(mean_coefficient(dim(2), 0), q(0, 1));
        assert_eq!(mean_coefficient(dim(2), 7), q(1, 2));
        assert_eq!(mean_coefficient(dim(3), 2), q(2, 9));
        assert_eq!(mean_coefficient(dim(5), 0), q(0, 1));
    }

    #[test]
    fn msd_examples() {
        assert_eq!(msd(dim(2), 5), q(9, 1));
        for d in 2..=12 {
            assert_eq!(msd(dim(d), 1), q(1, 1), "d={d}");
            assert_eq!(msd(dim(d), 0), q(0, 1), "d={d}");
        }
        assert_eq!(msd(dim(3), 2), q(8, 3));
        assert_eq!(msd(dim(4), 2), q(5, 2));
    }

    #[test]
    fn msd_literal_at_zero() {
        let lit = msd_literal(dim(4), 0);
        assert_eq!(lit.numerator, BigInt::from(0));
        assert_eq!(lit.d_exponent, -1);
    }

    #[test]
    fn recurrence_examples() {
        let two = q(2, 1);
        let d2 = MomentSeries::new(dim(2), (0..10).map(|n| q(if n == 0 { 0 } else { 2 * n - 1 }, 1)).collect());
        for n in 0..8 {
            assert_eq!(recurrence_residual(dim(2), &d2, n).unwrap(), two);
        }
        let d3 = MomentSeries::from_closed_form(dim(3), 2);
        assert_eq!(recurrence_residual(dim(3), &d3, 0).unwrap(), two);
        let d5 = MomentSeries::from_closed_form(dim(5), 12);
        assert_eq!(recurrence_residual(dim(5), &d5, 10).unwrap(), two);
        assert_eq!(recurrence_residual(dim(5), &d5, 11), Err(Error::MissingIndex(13)));
    }

    #[test]
    fn recurrence_series_matches_closed_form() {
        for d in 2..=10 {
            assert_eq!(
                MomentSeries::from_recurrence(dim(d), 60),
                MomentSeries::from_closed_form(dim(d), 60)
            );
        }
        assert_eq!(MomentSeries::from_recurrence(dim(3), 0).values, vec![q(0, 1)]);
    }

    #[test]
    fn parity_examples() {
        for d in 2..=6 {
            assert_eq!(parity_prob_even(dim(d), 0), q(1, 1));
        }
        assert_eq!(parity_prob_even(dim(3), 2), q(5, 9));
        assert_eq!(parity_prob_even(dim(4), 1), q(1, 4));
    }

    #[test]
    fn increment_examples() {
        assert_eq!(increment_mean(dim(3), 0), q(1, 3));
        assert_eq!(increment_mean(dim(3), 1), q(-1, 9));
        assert_eq!(increment_mean(dim(3), 1), mean_coefficient(dim(3), 2) - mean_coefficient(dim(3), 1));
        for n in 1..20 {
            assert_eq!(increment_mean(dim(2), n), q(0, 1));
        }
    }

    #[test]
    fn diffusive_limit_examples() {
        assert_eq!(diffusive_limit(dim(2)), q(2, 1));
        assert_eq!(diffusive_limit(dim(3)), q(3, 2));
        assert_eq!(diffusive_limit(dim(11)), q(11, 10));
    }

    #[test]
    fn divisibility_examples() {
        assert_eq!(numerator_divisibility(dim(3), 2), (BigInt::from(8), true));
        assert_eq!(numerator_divisibility(dim(2), 1), (BigInt::from(1), true));
        assert_eq!(numerator_divisibility(dim(5), 0), (BigInt::from(0), true));
    }

    #[test]
    fn binomial_parity_oracle() {
        // P(Bin(n, p) even) summed term by term.
        for d in 2..=6i64 {
            let p = q(d - 1, d);
            let one_minus = q(1, d);
            for n in 0..=12u64 {
                let mut even = ExactRational::zero();
                let mut binom = BigInt::from(1);
                for k in 0..=n {
                    if k > 0 {
                        binom = binom * BigInt::from(n - k + 1) / BigInt::from(k);
                    }
                    if k % 2 == 0 {
                        even = even
                            + ExactRational::from_integer(binom.clone()) * p.pow(k) * one_minus.pow(n - k);
                    }
                }
                assert_eq!(parity_prob_even(dim(d as usize), n), even, "d={d} n={n}");
            }
        }
    }
}
