//! Exact laws of the walk: sparse dynamic programming over sites, brute-force
//! path enumeration, exact moments, return probabilities and the d = 2
//! floor-halving coupling with the simple random walk.
//!
//! Path counts are kept as integers; probabilities are counts divided by
//! `d^n`, applied only when a moment is requested.

use std::collections::HashMap;
use std::io::{self, Write};

use num_bigint::{BigInt, BigUint};
use num_traits::{pow, One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Dimension, OrientationRule, Site};
use crate::rational::ExactRational;

/// Default ceiling on live sites held by the DP.
pub const DEFAULT_MAX_SITES: usize = 5_000_000;
/// Default ceiling on `d^n` for [`enumerate_paths`].
pub const DEFAULT_MAX_PATHS: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_sites: usize,
    pub max_paths: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_sites: DEFAULT_MAX_SITES, max_paths: DEFAULT_MAX_PATHS }
    }
}

/// Path counts of the walk after `n` steps from the origin.
///
/// `counts[x]` is the number of the `d^n` equally likely paths ending at `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathDistribution {
    d: Dimension,
    n: u64,
    rule: String,
    counts: HashMap<Site, BigUint>,
}

#[derive(Serialize)]
struct Header<'a> {
    d: usize,
    n: u64,
    rule: &'a str,
    total: String,
}

#[derive(Serialize)]
struct Line<'a> {
    site: &'a Site,
    count: String,
}

impl PathDistribution {
    /// Point mass at the origin.
    pub fn initial(rule: &OrientationRule) -> Self {
        let d = rule.dim();
        let mut counts = HashMap::new();
        counts.insert(Site::origin(d), BigUint::one());
        PathDistribution { d, n: 0, rule: rule.label(), counts }
    }

    pub fn dim(&self) -> Dimension {
        self.d
    }

    pub fn steps(&self) -> u64 {
        self.n
    }

    pub fn rule_label(&self) -> &str {
        &self.rule
    }

    pub fn counts(&self) -> &HashMap<Site, BigUint> {
        &self.counts
    }

    pub fn count(&self, x: &[i64]) -> BigUint {
        self.counts.get(x).cloned().unwrap_or_default()
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    /// `d^n`, the number of equally likely paths.
    pub fn path_total(&self) -> BigUint {
        pow(BigUint::from(self.d.get()), self.n as usize)
    }

    pub fn count_total(&self) -> BigUint {
        self.counts.values().sum()
    }

    /// Entries in lexicographic site order.
    pub fn sorted(&self) -> Vec<(&Site, &BigUint)> {
        let mut v: Vec<_> = self.counts.iter().collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Checks mass conservation, parity of the support and `|x|_1 <= n`.
    pub fn check_invariants(&self) -> bool {
        if self.count_total() != self.path_total() {
            return false;
        }
        self.counts.iter().all(|(x, c)| {
            let parity = x.coords().iter().fold(0i64, |p, &v| p ^ (v & 1)) as u64;
            !c.is_zero() && x.dim() == self.d.get() && parity == self.n % 2 && x.l1_norm() <= self.n as u128
        })
    }

    /// JSON lines: a header `{"d","n","rule","total"}` then one
    /// `{"site":[..],"count":".."}` per site, sorted by site.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header = Header { d: self.d.get(), n: self.n, rule: &self.rule, total: self.count_total().to_string() };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (site, count) in self.sorted() {
            serde_json::to_writer(&mut w, &Line { site, count: count.to_string() })?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Number of points of `Z^d` with `|x|_1 <= n` and `|x|_1 ≡ n (mod 2)`,
/// saturating. This bounds the support of the walk after `n` steps.
pub fn support_bound(d: Dimension, n: u64) -> u128 {
    let d = d.get() as u128;
    let n = n as u128;
    // binomial(a, b) with saturation
    let binom = |a: u128, b: u128| -> u128 {
        if b > a {
            return 0;
        }
        let b = b.min(a - b);
        let mut acc: u128 = 1;
        for i in 0..b {
            acc = match acc.checked_mul(a - i) {
                Some(v) => v / (i + 1),
                None => return u128::MAX,
            };
        }
        acc
    };
    let mut total: u128 = 0;
    let mut k = n % 2;
    while k <= n {
        let shell = if k == 0 {
            1
        } else {
            (1..=d.min(k)).fold(0u128, |acc, i| {
                let term = 1u128
                    .checked_shl(i as u32)
                    .and_then(|p| p.checked_mul(binom(d, i)))
                    .and_then(|t| t.checked_mul(binom(k - 1, i - 1)))
                    .unwrap_or(u128::MAX);
                acc.saturating_add(term)
            })
        };
        total = total.saturating_add(shell);
        if total == u128::MAX {
            break;
        }
        k += 2;
    }
    total
}

/// One transition: every path at `x` extends along each of the `d` outgoing
/// edges.
pub fn evolve(dist: &PathDistribution, rule: &OrientationRule) -> Result<PathDistribution> {
    let d = rule.dim();
    if d != dist.d {
        return Err(Error::DimensionMismatch { expected: dist.d.get(), found: d.get() });
    }
    let mut next: HashMap<Site, BigUint> = HashMap::with_capacity(dist.counts.len() * 2);
    let mut env = vec![0i8; d.get()];
    for (x, c) in &dist.counts {
        rule.env_into(x.coords(), &mut env)?;
        for (axis, &s) in env.iter().enumerate() {
            let mut y = x.coords().to_vec();
            y[axis] = y[axis]
                .checked_add(i64::from(s))
                .ok_or_else(|| Error::CoordinateOverflow { site: x.coords().to_vec() })?;
            match next.get_mut(y.as_slice()) {
                Some(acc) => *acc += c,
                None => {
                    next.insert(Site::new(y), c.clone());
                }
            }
        }
    }
    Ok(PathDistribution { d, n: dist.n + 1, rule: rule.label(), counts: next })
}

fn check_budget(d: Dimension, n: u64, limits: &Limits) -> Result<()> {
    let estimate = support_bound(d, n);
    if estimate > limits.max_sites as u128 {
        return Err(Error::BudgetExceeded { d: d.get(), n, estimate, budget: limits.max_sites });
    }
    Ok(())
}

/// Law of `X_n` by iterating [`evolve`] from the origin.
pub fn exact_distribution(d: Dimension, n: u64, rule: &OrientationRule, limits: &Limits) -> Result<PathDistribution> {
    exact_series(d, n, rule, limits, |_| Ok(()))
}

/// Like [`exact_distribution`], calling `visit` on the law at every time
/// `0..=n` along the way.
pub fn exact_series<F>(
    d: Dimension,
    n: u64,
    rule: &OrientationRule,
    limits: &Limits,
    mut visit: F,
) -> Result<PathDistribution>
where
    F: FnMut(&PathDistribution) -> Result<()>,
{
    if rule.dim() != d {
        return Err(Error::DimensionMismatch { expected: d.get(), found: rule.dim().get() });
    }
    check_budget(d, n, limits)?;
    let mut dist = PathDistribution::initial(rule);
    visit(&dist)?;
    for _ in 0..n {
        dist = evolve(&dist, rule)?;
        visit(&dist)?;
    }
    Ok(dist)
}

/// Law of `X_n` by walking all `d^n` paths depth-first.
pub fn enumerate_paths(d: Dimension, n: u64, rule: &OrientationRule, limits: &Limits) -> Result<PathDistribution> {
    if rule.dim() != d {
        return Err(Error::DimensionMismatch { expected: d.get(), found: rule.dim().get() });
    }
    let paths = (d.get() as u128).checked_pow(u32::try_from(n).unwrap_or(u32::MAX));
    match paths {
        Some(p) if p <= limits.max_paths => {}
        _ => {
            return Err(Error::EnumerationCap {
                d: d.get(),
                n,
                paths: paths.unwrap_or(u128::MAX),
                cap: limits.max_paths,
            })
        }
    }

    fn walk(rule: &OrientationRule, x: &mut [i64], left: u64, counts: &mut HashMap<Site, u64>) -> Result<()> {
        if left == 0 {
            match counts.get_mut(&*x) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(Site::new(x.to_vec()), 1);
                }
            }
            return Ok(());
        }
        for axis in 0..x.len() {
            let s = i64::from(rule.sign_unchecked(x, axis)?);
            let old = x[axis];
            x[axis] = old.checked_add(s).ok_or_else(|| Error::CoordinateOverflow { site: x.to_vec() })?;
            walk(rule, x, left - 1, counts)?;
            x[axis] = old;
        }
        Ok(())
    }

    let mut counts = HashMap::new();
    let mut x = vec![0i64; d.get()];
    walk(rule, &mut x, n, &mut counts)?;
    Ok(PathDistribution {
        d,
        n,
        rule: rule.label(),
        counts: counts.into_iter().map(|(k, v)| (k, BigUint::from(v))).collect(),
    })
}

/// `E[X_n]` coordinate by coordinate.
pub fn exact_mean(dist: &PathDistribution) -> Vec<ExactRational> {
    let mut sums = vec![BigInt::zero(); dist.d.get()];
    for (x, c) in &dist.counts {
        let c = BigInt::from(c.clone());
        for (s, &v) in sums.iter_mut().zip(x.coords()) {
            if v != 0 {
                *s += &c * v;
            }
        }
    }
    let total = BigInt::from(dist.path_total());
    sums.into_iter()
        .map(|s| ExactRational::new(s, total.clone()).expect("d^n > 0"))
        .collect()
}

/// `E|X_n|^2`.
pub fn exact_msd(dist: &PathDistribution) -> ExactRational {
    let sum: BigInt = dist
        .counts
        .iter()
        .map(|(x, c)| BigInt::from(c.clone()) * x.norm_sq())
        .sum();
    ExactRational::new(sum, BigInt::from(dist.path_total())).expect("d^n > 0")
}

/// `P(X_n = 0)` read off an existing law.
pub fn origin_probability(dist: &PathDistribution) -> ExactRational {
    let origin = vec![0i64; dist.d.get()];
    ExactRational::new(BigInt::from(dist.count(&origin)), BigInt::from(dist.path_total())).expect("d^n > 0")
}

/// `P(X_n = 0)` on the Manhattan lattice; `n` must be even.
pub fn return_probability(d: Dimension, n_even: u64, limits: &Limits) -> Result<ExactRational> {
    if !n_even.is_multiple_of(2) {
        return Err(Error::OddReturnTime(n_even));
    }
    let dist = exact_distribution(d, n_even, &OrientationRule::manhattan(d), limits)?;
    Ok(origin_probability(&dist))
}

/// Pushes a 2-d law through `x -> (floor(x1/2), floor(x2/2))`, flooring
/// toward negative infinity.
pub fn floor_halve(dist: &PathDistribution) -> HashMap<Site, BigUint> {
    let mut out: HashMap<Site, BigUint> = HashMap::new();
    for (x, c) in &dist.counts {
        let y: Vec<i64> = x.coords().iter().map(|v| v.div_euclid(2)).collect();
        *out.entry(Site::new(y)).or_default() += c;
    }
    out
}

/// Path counts of the `n`-step simple symmetric random walk on `Z^2`
/// (`4^n` paths in total).
pub fn srw_counts(n: u64) -> HashMap<Site, BigUint> {
    let mut cur: HashMap<Site, BigUint> = HashMap::new();
    cur.insert(Site::new(vec![0, 0]), BigUint::one());
    for _ in 0..n {
        let mut next: HashMap<Site, BigUint> = HashMap::with_capacity(cur.len() * 2);
        for (x, c) in &cur {
            let (a, b) = (x.coords()[0], x.coords()[1]);
            for y in [[a + 1, b], [a - 1, b], [a, b + 1], [a, b - 1]] {
                *next.entry(Site::new(y.to_vec())).or_default() += c;
            }
        }
        cur = next;
    }
    cur
}

/// Whether `floor(X_{2n} / 2)` has exactly the law of the `n`-step simple
/// symmetric random walk. Both sides count `4^n = 2^(2n)` paths, so the
/// counts are compared directly.
pub fn srw_coupling_check(d: Dimension, n: u64, limits: &Limits) -> Result<bool> {
    if d.get() != 2 {
        return Err(Error::CouplingDimension(d.get()));
    }
    let dist = exact_distribution(d, 2 * n, &OrientationRule::manhattan(d), limits)?;
    Ok(floor_halve(&dist) == srw_counts(n))
}
