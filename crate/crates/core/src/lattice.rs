//! Oriented lattices on `Z^d`.
//!
//! An oriented lattice gives every axis-parallel bi-infinite line a single
//! direction. The walk at `x` may move one unit along axis `i` only in the
//! direction of the line through `x` parallel to `e_i`, so each site has
//! exactly `d` outgoing and `d` incoming edges.
//!
//! Three rules are provided:
//!
//! * [`RuleKind::Manhattan`]: axis `i` points in the `+` direction at `x`
//!   iff `sum_{j != i} x[j]` is even, so parallel neighbouring lines alternate.
//! * [`RuleKind::IidCoin`]: each line gets a pseudo-random sign derived from
//!   `(seed, axis, perpendicular coordinates)` by [`line_hash`].
//! * [`RuleKind::Custom`]: an explicit finite [`CustomTable`].

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Census radius used when the caller does not pick one. The Manhattan rule
/// is 2-periodic in every coordinate, so radius 1 already saturates.
pub const DEFAULT_CENSUS_RADIUS: u32 = 2;

/// Lattice dimension, always at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        Ok(Dimension(d))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        Dimension::new(d)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A point of `Z^d`. Coordinates are 64-bit; stepping past the range is
/// reported as [`Error::CoordinateOverflow`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(Vec<i64>);

impl Site {
    pub fn new(coords: Vec<i64>) -> Self {
        Site(coords)
    }

    pub fn origin(d: Dimension) -> Self {
        Site(vec![0; d.get()])
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<i64> {
        self.0
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> i128 {
        self.0.iter().map(|&c| i128::from(c) * i128::from(c)).sum()
    }

    pub fn l1_norm(&self) -> u128 {
        self.0.iter().map(|&c| u128::from(c.unsigned_abs())).sum()
    }

    /// `self + step`, failing on coordinate overflow.
    pub fn offset(&self, step: Step) -> Result<Site> {
        let mut coords = self.0.clone();
        let c = coords
            .get_mut(step.axis)
            .ok_or(Error::AxisOutOfRange { axis: step.axis, d: self.dim() })?;
        *c = c
            .checked_add(i64::from(step.sign))
            .ok_or_else(|| Error::CoordinateOverflow { site: self.0.clone() })?;
        Ok(Site(coords))
    }
}

impl Borrow<[i64]> for Site {
    fn borrow(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for Site {
    fn from(coords: Vec<i64>) -> Self {
        Site(coords)
    }
}

/// A unit move `sign * e_axis`. `axis` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Step {
    pub axis: usize,
    pub sign: i8,
}

impl Step {
    pub fn new(axis: usize, sign: i8) -> Self {
        debug_assert!(sign == 1 || sign == -1);
        Step { axis, sign }
    }

    pub fn to_vector(self, d: Dimension) -> Vec<i64> {
        let mut v = vec![0; d.get()];
        v[self.axis] = i64::from(self.sign);
        v
    }

    /// The unit step taking `from` to `to`, if they are lattice neighbours.
    pub fn between(from: &[i64], to: &[i64]) -> Option<Step> {
        if from.len() != to.len() {
            return None;
        }
        let mut found = None;
        for (axis, (&a, &b)) in from.iter().zip(to).enumerate() {
            if a == b {
                continue;
            }
            let sign = match b.checked_sub(a) {
                Some(1) => 1,
                Some(-1) => -1,
                _ => return None,
            };
            if found.is_some() {
                return None;
            }
            found = Some(Step::new(axis, sign));
        }
        found
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign > 0 { '+' } else { '-' };
        write!(f, "{s}e{}", self.axis + 1)
    }
}

/// Per-axis outgoing direction at a site, each entry `+1` or `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocalEnv(Vec<i8>);

impl LocalEnv {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidTable(format!("environment entry {bad} is not ±1")));
        }
        Ok(LocalEnv(signs))
    }

    #[inline]
    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    #[inline]
    pub fn sign(&self, axis: usize) -> i8 {
        self.0[axis]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Product of all entries.
    pub fn product(&self) -> i8 {
        self.0.iter().product()
    }
}

impl fmt::Display for LocalEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if *s > 0 { "+1" } else { "-1" })?;
        }
        f.write_str(")")
    }
}

/// SplitMix64 output finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Hash identifying the line through `x` parallel to `axis`.
///
/// Only the perpendicular coordinates enter, in increasing axis order:
///
/// ```text
/// h = mix64(seed ^ GAMMA * (axis + 1))
/// for j != axis: h = mix64((h + GAMMA) ^ (x[j] as u64))
/// ```
///
/// where `mix64` is the SplitMix64 finalizer and `GAMMA = 0x9e3779b97f4a7c15`.
/// All arithmetic is wrapping `u64`, so the value is the same on every
/// platform. The line sign is `+1` iff the top bit of `h` is clear.
pub fn line_hash(seed: u64, axis: usize, x: &[i64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN_GAMMA.wrapping_mul(axis as u64 + 1));
    for (j, &c) in x.iter().enumerate() {
        if j != axis {
            h = mix64(h.wrapping_add(GOLDEN_GAMMA) ^ c as u64);
        }
    }
    h
}

/// How a [`CustomTable`] maps the perpendicular coordinates of a line to a
/// table cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableDomain {
    /// Coordinate `j` is reduced modulo `periods[j]`; every site is covered.
    Periodic { periods: Vec<u64> },
    /// Coordinate `j` must lie in `lo[j]..=hi[j]`; other sites are errors.
    Boxed { lo: Vec<i64>, hi: Vec<i64> },
}

/// An explicit finite orientation table.
///
/// For each axis `i` the table stores one sign per cell of the
/// perpendicular coordinates `(x[j])_{j != i}`, so every line is constant by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomTable {
    d: Dimension,
    domain: TableDomain,
    signs: Vec<Vec<i8>>,
}

impl CustomTable {
    /// Builds a table by evaluating `sign(axis, cell)` on every cell, where
    /// `cell` lists the full coordinate vector with the axis entry set to 0
    /// (residues for periodic tables, absolute values for boxed ones).
    pub fn from_fn<F>(d: Dimension, domain: TableDomain, mut sign: F) -> Result<Self>
    where
        F: FnMut(usize, &[i64]) -> i8,
    {
        let extents = Self::extents(d, &domain)?;
        let offsets: Vec<i64> = match &domain {
            TableDomain::Periodic { .. } => vec![0; d.get()],
            TableDomain::Boxed { lo, .. } => lo.clone(),
        };
        let mut signs = Vec::with_capacity(d.get());
        for axis in 0..d.get() {
            let cells: u64 = (0..d.get())
                .filter(|&j| j != axis)
                .map(|j| extents[j])
                .try_fold(1u64, |acc, e| acc.checked_mul(e))
                .filter(|&c| c <= 1 << 24)
                .ok_or_else(|| Error::InvalidTable("table too large".into()))?;
            let mut row = Vec::with_capacity(cells as usize);
            let mut cell = vec![0i64; d.get()];
            for mut idx in 0..cells {
                for j in (0..d.get()).rev() {
                    if j == axis {
                        cell[j] = 0;
                        continue;
                    }
                    cell[j] = offsets[j] + (idx % extents[j]) as i64;
                    idx /= extents[j];
                }
                let s = sign(axis, &cell);
                if s != 1 && s != -1 {
                    return Err(Error::InvalidTable(format!(
                        "sign {s} for axis {axis} at {cell:?} is not ±1"
                    )));
                }
                row.push(s);
            }
            signs.push(row);
        }
        Ok(CustomTable { d, domain, signs })
    }

    fn extents(d: Dimension, domain: &TableDomain) -> Result<Vec<u64>> {
        match domain {
            TableDomain::Periodic { periods } => {
                if periods.len() != d.get() {
                    return Err(Error::DimensionMismatch { expected: d.get(), found: periods.len() });
                }
                if periods.iter().any(|&p| p == 0 || p > i64::MAX as u64) {
                    return Err(Error::InvalidTable("periods must be positive".into()));
                }
                Ok(periods.clone())
            }
            TableDomain::Boxed { lo, hi } => {
                if lo.len() != d.get() || hi.len() != d.get() {
                    return Err(Error::DimensionMismatch {
                        expected: d.get(),
                        found: lo.len().min(hi.len()),
                    });
                }
                lo.iter()
                    .zip(hi)
                    .map(|(&l, &h)| {
                        h.checked_sub(l)
                            .filter(|&w| w >= 0)
                            .map(|w| w as u64 + 1)
                            .ok_or_else(|| Error::InvalidTable("box has lo > hi".into()))
                    })
                    .collect()
            }
        }
    }

    pub fn dim(&self) -> Dimension {
        self.d
    }

    pub fn domain(&self) -> &TableDomain {
        &self.domain
    }

    fn lookup(&self, x: &[i64], axis: usize) -> Result<i8> {
        let d = self.d.get();
        let mut idx: u64 = 0;
        for j in 0..d {
            if j == axis {
                continue;
            }
            let (cell, extent) = match &self.domain {
                TableDomain::Periodic { periods } => {
                    let p = periods[j];
                    (x[j].rem_euclid(p as i64) as u64, p)
                }
                TableDomain::Boxed { lo, hi } => {
                    if x[j] < lo[j] || x[j] > hi[j] {
                        return Err(Error::OutsideTable { site: x.to_vec() });
                    }
                    ((x[j] - lo[j]) as u64, (hi[j] - lo[j]) as u64 + 1)
                }
            };
            idx = idx * extent + cell;
        }
        Ok(self.signs[axis][idx as usize])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    Manhattan,
    IidCoin { seed: u64 },
    Custom(CustomTable),
}

/// An orientation rule on `Z^d`: assigns a direction to every axis-parallel
/// line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientationRule {
    d: Dimension,
    kind: RuleKind,
}

impl OrientationRule {
    pub fn manhattan(d: Dimension) -> Self {
        OrientationRule { d, kind: RuleKind::Manhattan }
    }

    pub fn iid_coin(d: Dimension, seed: u64) -> Self {
        OrientationRule { d, kind: RuleKind::IidCoin { seed } }
    }

    pub fn custom(table: CustomTable) -> Self {
        OrientationRule { d: table.dim(), kind: RuleKind::Custom(table) }
    }

    #[inline]
    pub fn dim(&self) -> Dimension {
        self.d
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    pub fn is_manhattan(&self) -> bool {
        matches!(self.kind, RuleKind::Manhattan)
    }

    /// Short label used in report headers, e.g. `manhattan` or `iid:7`.
    pub fn label(&self) -> String {
        match &self.kind {
            RuleKind::Manhattan => "manhattan".to_string(),
            RuleKind::IidCoin { seed } => format!("iid:{seed}"),
            RuleKind::Custom(_) => "custom".to_string(),
        }
    }

    fn check_dim(&self, x: &[i64]) -> Result<()> {
        if x.len() != self.d.get() {
            return Err(Error::DimensionMismatch { expected: self.d.get(), found: x.len() });
        }
        Ok(())
    }

    /// Orientation of the line through `x` parallel to `axis`, without the
    /// dimension check. Callers guarantee `x.len() == d` and `axis < d`.
    #[inline]
    pub(crate) fn sign_unchecked(&self, x: &[i64], axis: usize) -> Result<i8> {
        match &self.kind {
            RuleKind::Manhattan => {
                let parity = x
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != axis)
                    .fold(0i64, |p, (_, &c)| p ^ (c & 1));
                Ok(if parity == 0 { 1 } else { -1 })
            }
            RuleKind::IidCoin { seed } => {
                Ok(if line_hash(*seed, axis, x) >> 63 == 0 { 1 } else { -1 })
            }
            RuleKind::Custom(table) => table.lookup(x, axis),
        }
    }

    /// Fills `out` with the local environment at `x`. Same preconditions as
    /// [`sign_unchecked`](Self::sign_unchecked).
    #[inline]
    pub(crate) fn env_into(&self, x: &[i64], out: &mut [i8]) -> Result<()> {
        match &self.kind {
            RuleKind::Manhattan => {
                let total = x.iter().fold(0i64, |p, &c| p ^ (c & 1));
                for (o, &c) in out.iter_mut().zip(x) {
                    *o = if total ^ (c & 1) == 0 { 1 } else { -1 };
                }
                Ok(())
            }
            _ => {
                for (axis, o) in out.iter_mut().enumerate() {
                    *o = self.sign_unchecked(x, axis)?;
                }
                Ok(())
            }
        }
    }

    /// Orientation of the line through `x` parallel to `axis`.
    pub fn sign(&self, x: &Site, axis: usize) -> Result<i8> {
        self.check_dim(x.coords())?;
        if axis >= self.d.get() {
            return Err(Error::AxisOutOfRange { axis, d: self.d.get() });
        }
        self.sign_unchecked(x.coords(), axis)
    }

    /// The local environment `ℓ(x)`: entry `i` is `+1` iff `(x, x + e_i)` is
    /// an edge.
    pub fn local_env(&self, x: &Site) -> Result<LocalEnv> {
        self.check_dim(x.coords())?;
        let mut signs = vec![0i8; self.d.get()];
        self.env_into(x.coords(), &mut signs)?;
        Ok(LocalEnv(signs))
    }

    /// The `d` outgoing steps at `x`, one per axis, in axis order.
    pub fn out_steps(&self, x: &Site) -> Result<Vec<Step>> {
        let env = self.local_env(x)?;
        Ok(env.signs().iter().enumerate().map(|(axis, &s)| Step::new(axis, s)).collect())
    }

    /// Whether `(x, y)` is a directed edge.
    pub fn is_directed_edge(&self, x: &Site, y: &Site) -> Result<bool> {
        self.check_dim(x.coords())?;
        self.check_dim(y.coords())?;
        match Step::between(x.coords(), y.coords()) {
            Some(step) => Ok(self.sign_unchecked(x.coords(), step.axis)? == step.sign),
            None => Ok(false),
        }
    }

    /// Distinct local environments over the box `[-radius, radius]^d`.
    pub fn env_census(&self, radius: u32) -> Result<BTreeSet<LocalEnv>> {
        if radius == 0 {
            return Err(Error::InvalidConfig("census radius must be at least 1".into()));
        }
        let d = self.d.get();
        let r = i64::from(radius);
        let mut x = vec![-r; d];
        let mut env = vec![0i8; d];
        let mut seen = BTreeSet::new();
        loop {
            self.env_into(&x, &mut env)?;
            if !seen.contains(env.as_slice()) {
                seen.insert(LocalEnv(env.clone()));
            }
            // odometer over the box
            let mut j = 0;
            loop {
                if j == d {
                    return Ok(seen);
                }
                if x[j] < r {
                    x[j] += 1;
                    break;
                }
                x[j] = -r;
                j += 1;
            }
        }
    }

    /// Whether the axis-`axis` sign is constant on `x + k e_axis` for
    /// `k` in `-span..=span`.
    pub fn check_line_consistency(&self, x: &Site, axis: usize, span: u64) -> Result<bool> {
        let reference = self.sign(x, axis)?;
        let mut y = x.coords().to_vec();
        let base = x.coords()[axis];
        let span = i64::try_from(span).map_err(|_| Error::CoordinateOverflow { site: y.clone() })?;
        for k in -span..=span {
            y[axis] = base
                .checked_add(k)
                .ok_or_else(|| Error::CoordinateOverflow { site: x.coords().to_vec() })?;
            if self.sign_unchecked(&y, axis)? != reference {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl Borrow<[i8]> for LocalEnv {
    fn borrow(&self) -> &[i8] {
        &self.0
    }
}

/// Number of distinct Manhattan environments in dimension `d`: all `2^d`
/// when `d` is even, half of them when `d` is odd.
pub fn manhattan_census_count(d: Dimension) -> u128 {
    let d = d.get() as u32;
    if d.is_multiple_of(2) {
        1u128 << d
    } else {
        1u128 << (d - 1)
    }
}
