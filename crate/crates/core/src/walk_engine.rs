//! Seeded Monte Carlo for the walk.
//!
//! Chain `i` of a run with master seed `s` draws from
//! `Xoshiro256PlusPlus::seed_from_u64(chain_seed(s, i))` (the generator's
//! `seed_from_u64` expands the 64-bit seed with SplitMix64). At each step the
//! axis is drawn uniformly from `0..d` with Lemire's widening multiply and
//! rejection, so the draw is unbiased.
//!
//! Chains are grouped into fixed blocks of consecutive indices. Blocks run in
//! parallel and their integer accumulators are summed, so the result does not
//! depend on the worker count.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{mix64, Dimension, LocalEnv, OrientationRule, Site, Step};
use crate::rational::ExactRational;

/// `check_invariants` defaults to on up to this many chains.
pub const DEFAULT_CHECK_LIMIT: u64 = 10_000;

const BLOCK_CHAINS: u64 = 4096;
const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed of chain `chain_index`: the `(chain_index + 1)`-th SplitMix64 output
/// of a generator started at `master_seed`,
/// i.e. `mix64(master_seed + GAMMA * (chain_index + 1))` in wrapping `u64`
/// arithmetic. For a fixed master seed this is injective in the index.
pub fn chain_seed(master_seed: u64, chain_index: u64) -> u64 {
    mix64(master_seed.wrapping_add(GAMMA.wrapping_mul(chain_index.wrapping_add(1))))
}

/// Generator for one chain.
pub fn chain_rng(master_seed: u64, chain_index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(chain_seed(master_seed, chain_index))
}

/// Uniform integer in `0..range` (Lemire, unbiased).
#[inline]
pub fn uniform_below<R: Rng + ?Sized>(rng: &mut R, range: u64) -> u64 {
    debug_assert!(range > 0);
    let mut m = u128::from(rng.next_u64()) * u128::from(range);
    let mut low = m as u64;
    if low < range {
        let threshold = range.wrapping_neg() % range;
        while low < threshold {
            m = u128::from(rng.next_u64()) * u128::from(range);
            low = m as u64;
        }
    }
    (m >> 64) as u64
}

/// Position of one walker together with its cached local environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkerState {
    pub position: Site,
    pub env: LocalEnv,
    pub steps_taken: u64,
}

impl WalkerState {
    pub fn at_origin(rule: &OrientationRule) -> Result<Self> {
        let position = Site::origin(rule.dim());
        let env = rule.local_env(&position)?;
        Ok(WalkerState { position, env, steps_taken: 0 })
    }

    pub fn new(rule: &OrientationRule, position: Site) -> Result<Self> {
        let env = rule.local_env(&position)?;
        Ok(WalkerState { position, env, steps_taken: 0 })
    }

    /// Moves along `axis` in the direction the cached environment allows.
    pub fn step(&self, rule: &OrientationRule, axis: usize) -> Result<WalkerState> {
        let d = rule.dim().get();
        if axis >= d {
            return Err(Error::AxisOutOfRange { axis, d });
        }
        let position = self.position.offset(Step::new(axis, self.env.sign(axis)))?;
        let env = rule.local_env(&position)?;
        Ok(WalkerState { position, env, steps_taken: self.steps_taken + 1 })
    }
}

/// `|x + e|^2 - |x|^2 == 2 x·e + 1` for the unit step `e` taken from `x`.
pub fn norm_step_identity_holds(before: &[i64], after: &[i64]) -> bool {
    let Some(step) = Step::between(before, after) else {
        return false;
    };
    let sq = |v: &[i64]| v.iter().map(|&c| i128::from(c) * i128::from(c)).sum::<i128>();
    let dot = i128::from(before[step.axis]) * i128::from(step.sign);
    sq(after) - sq(before) == 2 * dot + 1
}

/// `L_{n+1} == -L_n + 2 (X_{n+1} - X_n)` entrywise.
pub fn flip_rule_holds(env_before: &[i8], env_after: &[i8], before: &[i64], after: &[i64]) -> bool {
    env_before
        .iter()
        .zip(env_after)
        .zip(before.iter().zip(after))
        .all(|((&lb, &la), (&xb, &xa))| i128::from(la) == -i128::from(lb) + 2 * (i128::from(xa) - i128::from(xb)))
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub rule: OrientationRule,
    pub n_steps: u64,
    pub n_chains: u64,
    pub seed: u64,
    pub record_stride: u64,
    pub check_invariants: bool,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
}

impl SimConfig {
    pub fn new(rule: OrientationRule, n_steps: u64, n_chains: u64, seed: u64) -> Self {
        SimConfig {
            rule,
            n_steps,
            n_chains,
            seed,
            record_stride: 1,
            check_invariants: n_chains <= DEFAULT_CHECK_LIMIT,
            workers: None,
        }
    }

    pub fn dim(&self) -> Dimension {
        self.rule.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
        }
        if self.n_chains == 0 {
            return Err(Error::InvalidConfig("n_chains must be at least 1".into()));
        }
        if self.record_stride == 0 || !self.n_steps.is_multiple_of(self.record_stride) {
            return Err(Error::InvalidConfig(format!(
                "record_stride {} must be positive and divide n_steps {}",
                self.record_stride, self.n_steps
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Times at which moments are recorded: `0, stride, 2 stride, ..., n_steps`.
    pub fn record_times(&self) -> Vec<u64> {
        (0..=self.n_steps / self.record_stride.max(1)).map(|k| k * self.record_stride).collect()
    }
}

/// Accumulated sums over all chains at one recorded time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentRecord {
    pub n: u64,
    /// `sum_chains X_n[i]`
    pub sum_x: Vec<BigInt>,
    /// `sum_chains X_n[i]^2`
    pub sum_x_sq: Vec<BigInt>,
    /// `sum_chains |X_n|^2`
    pub sum_sq: BigInt,
    /// `sum_chains |X_n|^4`
    pub sum_sq_sq: BigInt,
}

fn standard_error(sum: &BigInt, sum_sq: &BigInt, chains: u64) -> f64 {
    if chains < 2 {
        return f64::NAN;
    }
    let n = BigInt::from(chains);
    // (N sum_sq - sum^2) / (N^2 (N - 1)) = sample variance / N
    let num = &n * sum_sq - sum * sum;
    let den = &n * &n * (&n - 1);
    let var_of_mean = ExactRational::new(num, den).expect("N >= 2");
    var_of_mean.to_f64().max(0.0).sqrt()
}

fn standardize(estimate: &ExactRational, target: &ExactRational, stderr: f64) -> f64 {
    let diff = (estimate - target).to_f64();
    if diff == 0.0 {
        0.0
    } else if stderr == 0.0 || stderr.is_nan() {
        f64::INFINITY.copysign(diff)
    } else {
        diff / stderr
    }
}

impl MomentRecord {
    fn zero(n: u64, d: usize) -> Self {
        MomentRecord {
            n,
            sum_x: vec![BigInt::zero(); d],
            sum_x_sq: vec![BigInt::zero(); d],
            sum_sq: BigInt::zero(),
            sum_sq_sq: BigInt::zero(),
        }
    }

    fn merge(&mut self, other: &MomentRecord) {
        for (a, b) in self.sum_x.iter_mut().zip(&other.sum_x) {
            *a += b;
        }
        for (a, b) in self.sum_x_sq.iter_mut().zip(&other.sum_x_sq) {
            *a += b;
        }
        self.sum_sq += &other.sum_sq;
        self.sum_sq_sq += &other.sum_sq_sq;
    }
}

/// Monte Carlo sums at every recorded time plus derived estimates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMoments {
    pub d: Dimension,
    pub n_chains: u64,
    pub seed: u64,
    pub records: Vec<MomentRecord>,
    /// Steps on which both pathwise identities were verified.
    pub steps_checked: u64,
}

impl SampleMoments {
    pub fn record(&self, n: u64) -> Option<&MomentRecord> {
        self.records.iter().find(|r| r.n == n)
    }

    fn chains_q(&self) -> ExactRational {
        ExactRational::from_integer(self.n_chains as i64)
    }

    pub fn mean_estimate_exact(&self, rec: &MomentRecord) -> Vec<ExactRational> {
        rec.sum_x.iter().map(|s| ExactRational::from_integer(s.clone()) / self.chains_q()).collect()
    }

    pub fn mean_estimate(&self, rec: &MomentRecord) -> Vec<f64> {
        self.mean_estimate_exact(rec).iter().map(ExactRational::to_f64).collect()
    }

    pub fn mean_stderr(&self, rec: &MomentRecord) -> Vec<f64> {
        rec.sum_x.iter().zip(&rec.sum_x_sq).map(|(s, q)| standard_error(s, q, self.n_chains)).collect()
    }

    pub fn msd_estimate_exact(&self, rec: &MomentRecord) -> ExactRational {
        ExactRational::from_integer(rec.sum_sq.clone()) / self.chains_q()
    }

    pub fn msd_estimate(&self, rec: &MomentRecord) -> f64 {
        self.msd_estimate_exact(rec).to_f64()
    }

    pub fn msd_stderr(&self, rec: &MomentRecord) -> f64 {
        standard_error(&rec.sum_sq, &rec.sum_sq_sq, self.n_chains)
    }

    /// `(estimate - target) / stderr` for the MSD; 0 when they agree exactly.
    pub fn msd_z(&self, rec: &MomentRecord, target: &ExactRational) -> f64 {
        standardize(&self.msd_estimate_exact(rec), target, self.msd_stderr(rec))
    }

    /// Per-coordinate `(estimate - target) / stderr` for the mean.
    pub fn mean_z(&self, rec: &MomentRecord, target: &ExactRational) -> Vec<f64> {
        self.mean_estimate_exact(rec)
            .iter()
            .zip(self.mean_stderr(rec))
            .map(|(est, se)| standardize(est, target, se))
            .collect()
    }

    /// Largest pairwise coordinate gap in the mean estimate, divided by the
    /// combined standard error of the pair.
    pub fn mean_symmetry_z(&self, rec: &MomentRecord) -> f64 {
        let est = self.mean_estimate_exact(rec);
        let se = self.mean_stderr(rec);
        let mut worst: f64 = 0.0;
        for i in 0..est.len() {
            for j in i + 1..est.len() {
                let combined = (se[i] * se[i] + se[j] * se[j]).sqrt();
                worst = worst.max(standardize(&est[i], &est[j], combined).abs());
            }
        }
        worst
    }
}

/// Per-block accumulator in fixed-width integers. Blocks are sized so the
/// quartic sums cannot overflow.
struct BlockAcc {
    sum_x: Vec<i128>,
    sum_x_sq: Vec<u128>,
    sum_sq: Vec<u128>,
    sum_sq_sq: Vec<u128>,
}

fn block_size(n_steps: u64) -> u64 {
    // |X_n|^2 <= n^2, so one chain adds at most n^4 to the quartic sum.
    let quartic = u128::from(n_steps).saturating_pow(4).max(1);
    (u128::MAX / quartic).clamp(1, u128::from(BLOCK_CHAINS)) as u64
}

fn run_block(config: &SimConfig, first: u64, last: u64, n_records: usize) -> Result<(Vec<MomentRecord>, u64)> {
    let d = config.dim().get();
    let rule = &config.rule;
    let stride = config.record_stride;
    let mut acc = BlockAcc {
        sum_x: vec![0; n_records * d],
        sum_x_sq: vec![0; n_records * d],
        sum_sq: vec![0; n_records],
        sum_sq_sq: vec![0; n_records],
    };
    let mut x = vec![0i64; d];
    let mut env = vec![0i8; d];
    let mut prev_x = vec![0i64; d];
    let mut prev_env = vec![0i8; d];
    let mut checked = 0u64;
    // the flip rule is a property of the Manhattan orientation only
    let check_flip = rule.is_manhattan();

    for chain in first..last {
        let mut rng = chain_rng(config.seed, chain);
        x.iter_mut().for_each(|c| *c = 0);
        rule.env_into(&x, &mut env)?;
        let record = |acc: &mut BlockAcc, slot: usize, x: &[i64]| {
            let mut sq: u128 = 0;
            for (i, &c) in x.iter().enumerate() {
                let c2 = (i128::from(c) * i128::from(c)) as u128;
                acc.sum_x[slot * d + i] += i128::from(c);
                acc.sum_x_sq[slot * d + i] += c2;
                sq += c2;
            }
            acc.sum_sq[slot] += sq;
            acc.sum_sq_sq[slot] += sq * sq;
        };
        record(&mut acc, 0, &x);
        for t in 1..=config.n_steps {
            let axis = uniform_below(&mut rng, d as u64) as usize;
            if config.check_invariants {
                prev_x.copy_from_slice(&x);
                prev_env.copy_from_slice(&env);
            }
            x[axis] = x[axis]
                .checked_add(i64::from(env[axis]))
                .ok_or_else(|| Error::CoordinateOverflow { site: x.clone() })?;
            rule.env_into(&x, &mut env)?;
            if config.check_invariants {
                let violation = if !norm_step_identity_holds(&prev_x, &x) {
                    Some("|x+e|^2 - |x|^2 = 2 x.e + 1")
                } else if check_flip && !flip_rule_holds(&prev_env, &env, &prev_x, &x) {
                    Some("L_{n+1} = -L_n + 2 (X_{n+1} - X_n)")
                } else {
                    None
                };
                if let Some(identity) = violation {
                    return Err(Error::InvariantViolation {
                        identity,
                        chain,
                        step: t,
                        state: format!("X_n={prev_x:?} L_n={prev_env:?} X_n+1={x:?} L_n+1={env:?}"),
                    });
                }
                checked += 1;
            }
            if t % stride == 0 {
                record(&mut acc, (t / stride) as usize, &x);
            }
        }
    }

    let times = config.record_times();
    let records = times
        .iter()
        .enumerate()
        .map(|(slot, &n)| MomentRecord {
            n,
            sum_x: acc.sum_x[slot * d..(slot + 1) * d].iter().map(|&v| BigInt::from(v)).collect(),
            sum_x_sq: acc.sum_x_sq[slot * d..(slot + 1) * d].iter().map(|&v| BigInt::from(v)).collect(),
            sum_sq: BigInt::from(acc.sum_sq[slot]),
            sum_sq_sq: BigInt::from(acc.sum_sq_sq[slot]),
        })
        .collect();
    Ok((records, checked))
}

type BlockResult = Result<(Vec<MomentRecord>, u64)>;

fn merge_blocks(a: BlockResult, b: BlockResult) -> BlockResult {
    match (a, b) {
        (Ok((mut ra, ca)), Ok((rb, cb))) => {
            for (x, y) in ra.iter_mut().zip(&rb) {
                x.merge(y);
            }
            Ok((ra, ca + cb))
        }
        // report the violation on the lowest chain regardless of scheduling
        (Err(ea), Err(eb)) => Err(lowest_chain_error(ea, eb)),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

fn lowest_chain_error(a: Error, b: Error) -> Error {
    let key = |e: &Error| match e {
        Error::InvariantViolation { chain, step, .. } => (*chain, *step),
        _ => (u64::MAX, u64::MAX),
    };
    if key(&b) < key(&a) {
        b
    } else {
        a
    }
}

/// Runs `n_chains` independent walks of `n_steps` from the origin.
pub fn simulate(config: &SimConfig) -> Result<SampleMoments> {
    config.validate()?;
    let d = config.dim();
    let times = config.record_times();
    let n_records = times.len();
    let block = block_size(config.n_steps);
    let n_blocks = config.n_chains.div_ceil(block);

    let run = || {
        (0..n_blocks)
            .into_par_iter()
            .map(|b| {
                let first = b * block;
                let last = (first + block).min(config.n_chains);
                run_block(config, first, last, n_records)
            })
            .reduce(
                || Ok((times.iter().map(|&n| MomentRecord::zero(n, d.get())).collect(), 0)),
                merge_blocks,
            )
    };
    let (records, steps_checked) = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(SampleMoments { d, n_chains: config.n_chains, seed: config.seed, records, steps_checked })
}

/// The full path of one chain, `X_0..=X_{n_steps}`. Uses the same random
/// stream as [`simulate`] for that chain index.
pub fn trajectory(config: &SimConfig, chain_index: u64) -> Result<Vec<Site>> {
    let d = config.dim().get() as u64;
    let mut rng = chain_rng(config.seed, chain_index);
    let mut state = WalkerState::at_origin(&config.rule)?;
    let mut path = Vec::with_capacity(config.n_steps.to_usize().unwrap_or(0) + 1);
    path.push(state.position.clone());
    for _ in 0..config.n_steps {
        let axis = uniform_below(&mut rng, d) as usize;
        state = state.step(&config.rule, axis)?;
        path.push(state.position.clone());
    }
    Ok(path)
}
