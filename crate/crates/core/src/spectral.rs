//! Closed-form spectral limits and the rank-one secular equation.
//!
//! The Stieltjes transform convention is `S(z) = ∫ dμ(t) / (z − t)`, the
//! sign under which `S⁻¹(1/λ) = λ + 1/λ` holds for `λ > 1`. Real arguments
//! outside the bulk only; the complex plane is out of scope.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::Spectrum;

/// Limits of the largest eigenvalue and of the signal overlap for the
/// rank-one spiked symmetric model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerPrediction {
    pub lambda: f64,
    pub eigenvalue_limit: f64,
    pub overlap_limit: f64,
}

/// Limit of the largest sample-covariance eigenvalue under a single spike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariancePrediction {
    pub lambda1: f64,
    pub c: f64,
    pub eigenvalue_limit: f64,
}

/// Empirical spectral distribution: equal weight `1/n` at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct Esd {
    points: Vec<f64>,
}

impl Esd {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }
}

/// Discrete measure with per-atom weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSpectralMeasure {
    atoms: Vec<(f64, f64)>,
}

impl WeightedSpectralMeasure {
    /// Atoms are `(location, weight)`; weights must be non-negative and sum
    /// to one within `1e-10`.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("measure has no atoms".into()));
        }
        if atoms.iter().any(|&(_, w)| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParameter("atom weights must be non-negative".into()));
        }
        let total: f64 = kahan_sum(atoms.iter().map(|&(_, w)| w));
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "atom weights sum to {total}, expected 1 within 1e-10"
            )));
        }
        Ok(WeightedSpectralMeasure { atoms })
    }

    /// Uniform weights `1/n` on the eigenvalues of a spectrum.
    pub fn uniform(spectrum: &Spectrum) -> Result<Self> {
        let w = 1.0 / spectrum.len() as f64;
        Self::new(spectrum.values().iter().map(|&v| (v, w)).collect())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }
}

/// Largest-eigenvalue and overlap limits for spike strength `lambda`.
///
/// Above the transition (`lambda > 1`) the outlier sits at `lambda +
/// 1/lambda` and the overlap tends to `sqrt(1 - 1/lambda^2)`; at or below it
/// the top eigenvalue sticks to the bulk edge 2 and the overlap vanishes.
pub fn bbp_wigner_prediction(lambda: f64) -> Result<WignerPrediction> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let (eigenvalue_limit, overlap_limit) = if lambda > 1.0 {
        (lambda + 1.0 / lambda, (1.0 - 1.0 / (lambda * lambda)).sqrt())
    } else {
        (2.0, 0.0)
    };
    Ok(WignerPrediction { lambda, eigenvalue_limit, overlap_limit })
}

/// Largest-eigenvalue limit for a spiked sample covariance with aspect
/// ratio `c = p/n`.
pub fn bbp_covariance_prediction(lambda1: f64, c: f64) -> Result<CovariancePrediction> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!("aspect ratio c must lie in (0, 1), got {c}")));
    }
    if !(lambda1 >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda1 must be at least 1, got {lambda1}"
        )));
    }
    let threshold = 1.0 + c.sqrt();
    let eigenvalue_limit = if lambda1 <= threshold {
        threshold * threshold
    } else {
        lambda1 * (1.0 + c / (lambda1 - 1.0))
    };
    Ok(CovariancePrediction { lambda1, c, eigenvalue_limit })
}

/// Semicircle density `(1/2π) sqrt(4 − x²)` on `[-2, 2]`, zero outside.
pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() > 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// Semicircle CDF on the real line, clamped to 0 and 1 outside `[-2, 2]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

/// Stieltjes transform of the semicircle law at a real point beyond the
/// bulk, `S(z) = (z − sign(z)·sqrt(z² − 4)) / 2`, evaluated in the
/// cancellation-free form `2 / (z + sign(z)·sqrt(z² − 4))`.
pub fn semicircle_stieltjes(z: f64) -> Result<f64> {
    if !(z.abs() > 2.0) {
        return Err(Error::InvalidParameter(format!(
            "|z| must exceed 2 (bulk support), got {z}"
        )));
    }
    let root = (z * z - 4.0).sqrt();
    Ok(2.0 / (z + root.copysign(z)))
}

/// Inverse of [`semicircle_stieltjes`] on `(0, 1)`: `s ↦ 1/s + s`.
pub fn inverse_semicircle_stieltjes(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "no real inverse beyond the bulk edge for s = {s}, need 0 < s < 1"
        )));
    }
    Ok(1.0 / s + s)
}

/// Unique root `z* > max(locations)` of the rank-one secular equation
/// `lambda · Σ w_k / (z − t_k) = 1`.
///
/// The left-hand side is strictly decreasing on `(max t_k, ∞)`, blows up at
/// the left end when the top atom carries weight, and tends to 0 at
/// infinity, so a bracketed bisection is safe; a Newton polish brings the
/// residual below `1e-12`.
pub fn secular_largest_root(measure: &WeightedSpectralMeasure, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let atoms = measure.atoms();
    let top = atoms.iter().map(|&(t, _)| t).fold(f64::NEG_INFINITY, f64::max);
    let bottom = atoms.iter().map(|&(t, _)| t).fold(f64::INFINITY, f64::min);
    let spread = (top - bottom).max(top.abs()).max(1.0);
    let top_weight: f64 = atoms
        .iter()
        .filter(|&&(t, _)| (t - top).abs() <= spread * 1e-14)
        .map(|&(_, w)| w)
        .sum();
    if top_weight <= 0.0 {
        return Err(Error::SecularTopWeightZero);
    }

    let f = |z: f64| -> f64 {
        lambda * kahan_sum(atoms.iter().map(|&(t, w)| w / (z - t))) - 1.0
    };
    let fprime = |z: f64| -> f64 {
        -lambda * kahan_sum(atoms.iter().map(|&(t, w)| w / ((z - t) * (z - t))))
    };

    // Left bracket hugs the pole; expand right until f < 0.
    let mut lo = top + 1e-9 * spread;
    while f(lo) <= 0.0 {
        let step = lo - top;
        lo = top + step / 16.0;
        if lo <= top {
            return Err(Error::NumericalFailure {
                iteration: 0,
                message: "secular bracket collapsed onto the pole".into(),
            });
        }
    }
    let mut hi = top + lambda.max(1.0);
    while f(hi) >= 0.0 {
        hi = top + (hi - top) * 2.0;
        if !hi.is_finite() {
            return Err(Error::NumericalFailure {
                iteration: 0,
                message: "secular upper bracket diverged".into(),
            });
        }
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..50 {
        let fz = f(z);
        if fz.abs() <= 1e-12 {
            return Ok(z);
        }
        let d = fprime(z);
        if d == 0.0 {
            break;
        }
        let next = (z - fz / d).clamp(lo, hi);
        if next == z {
            break;
        }
        z = next;
    }
    let fz = f(z).abs();
    if fz <= 1e-12 {
        Ok(z)
    } else {
        Err(Error::NumericalFailure {
            iteration: 0,
            message: format!("secular root residual {fz:.3e} above 1e-12"),
        })
    }
}

/// Empirical spectral distribution of a spectrum rescaled by
/// `normalization` (1 for matrices already on the semicircle scale).
pub fn esd_of(spectrum: &Spectrum, normalization: f64) -> Result<Esd> {
    if !(normalization > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalization must be positive, got {normalization}"
        )));
    }
    Ok(Esd { points: spectrum.values().iter().map(|&v| v / normalization).collect() })
}

/// Kolmogorov–Smirnov distance between an ESD and the semicircle CDF:
/// the sup over atoms of the two one-sided gaps of the empirical CDF.
pub fn ks_distance_to_semicircle(esd: &Esd) -> f64 {
    let n = esd.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in esd.points().iter().enumerate() {
        let f = semicircle_cdf(x);
        let hi = (i as f64 + 1.0) / n;
        let lo = i as f64 / n;
        sup = sup.max((hi - f).abs()).max((lo - f).abs());
    }
    sup
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}
