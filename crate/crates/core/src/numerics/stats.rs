use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("lag {lag} out of range for series of length {len}")]
    LagOutOfRange { lag: usize, len: usize },
}

pub fn mean<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    x.iter().copied().sum::<T>() / T::of_usize(x.len())
}

/// Population standard deviation.
pub fn std_dev<T: Real>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let m = mean(x);
    let ss: T = x.iter().map(|&v| (v - m) * (v - m)).sum();
    (ss / T::of_usize(x.len())).sqrt()
}

/// Pearson product-moment correlation of two equally long series.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort {
            need: 2,
            got: x.len(),
        });
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(StatsError::ZeroVariance);
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

/// Normalized autocorrelation at `lag`: the correlation between the series and
/// its copy shifted by `lag`, each overlap segment mean-centered.
///
/// Lag 0 is 1.0 by convention. Non-zero lags must satisfy `lag <= len / 2`.
pub fn autocorrelation<T: Real>(x: &[T], lag: usize) -> Result<T, StatsError> {
    if x.len() < 2 {
        return Err(StatsError::TooShort {
            need: 2,
            got: x.len(),
        });
    }
    if std_dev(x) == T::zero() {
        return Err(StatsError::ZeroVariance);
    }
    if lag == 0 {
        return Ok(T::one());
    }
    if lag > x.len() / 2 {
        return Err(StatsError::LagOutOfRange { lag, len: x.len() });
    }
    let n = x.len();
    pearson(&x[..n - lag], &x[lag..])
}
