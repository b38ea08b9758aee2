use serde::{Deserialize, Serialize};

use crate::data::INTERVALS_PER_DAY;
use crate::error::{Error, Result};

/// Residual block length; always a divisor of 96.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct BlockLength(usize);

impl BlockLength {
    pub fn new(length: usize) -> Result<Self> {
        if length == 0 || !INTERVALS_PER_DAY.is_multiple_of(length) {
            return Err(Error::BlockLength(length));
        }
        Ok(Self(length))
    }

    /// Smallest divisor of 96 at or above the `n^(1/3)` rule of thumb (6).
    pub fn auto() -> Self {
        let guess = (INTERVALS_PER_DAY as f64).cbrt();
        let length = (1..=INTERVALS_PER_DAY)
            .find(|l| INTERVALS_PER_DAY.is_multiple_of(*l) && *l as f64 >= guess)
            .unwrap_or(INTERVALS_PER_DAY);
        Self(length)
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Blocks per day.
    pub fn count(self) -> usize {
        INTERVALS_PER_DAY / self.0
    }
}

impl Default for BlockLength {
    fn default() -> Self {
        Self(6)
    }
}

impl TryFrom<usize> for BlockLength {
    type Error = Error;

    fn try_from(value: usize) -> Result<Self> {
        Self::new(value)
    }
}

impl From<BlockLength> for usize {
    fn from(value: BlockLength) -> Self {
        value.0
    }
}

/// Non-overlapping contiguous blocks of length `l`; block `k` covers `k l .. (k + 1) l`.
pub fn split_blocks(values: &[f64], length: usize) -> Result<Vec<&[f64]>> {
    if length == 0 || !values.len().is_multiple_of(length) || values.len() != INTERVALS_PER_DAY {
        return Err(Error::BlockLength(length));
    }
    Ok(values.chunks_exact(length).collect())
}

/// 1-based order-statistic ranks `(⌈N α/2⌉, ⌈N (1 - α/2)⌉)`, clamped to `[1, N]`.
pub fn quantile_ranks(n: usize, alpha: f64) -> (usize, usize) {
    let rank = |q: f64| {
        let x = n as f64 * q;
        // Absorb representation error so that e.g. 1000 * 0.05 is rank 50.
        let r = (x - 1e-9 * x.max(1.0)).ceil();
        (r.max(1.0) as usize).min(n)
    };
    (rank(alpha / 2.0), rank(1.0 - alpha / 2.0))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// Lower and upper bounds of the `100 (1 - α)%` interval from bootstrap samples.
pub fn quantiles_from_samples(samples: &[f64], alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if samples.len() < 2 {
        return Err(Error::Empty(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("bootstrap samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(bounds_from_sorted(&sorted, alpha))
}

pub(crate) fn bounds_from_sorted(sorted: &[f64], alpha: f64) -> (f64, f64) {
    let (lo, hi) = quantile_ranks(sorted.len(), alpha);
    (sorted[lo - 1], sorted[hi - 1])
}
