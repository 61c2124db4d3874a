//! Symmetric eigensolvers.
//!
//! [`leading_eigenpair`] runs Lanczos with full reorthogonalization (falling
//! back to power iteration on a shifted matrix when Lanczos stalls), which is
//! what the sweep and recovery pipelines need. [`full_spectrum`] reduces the
//! dense matrix to tridiagonal form with Householder reflections and then
//! applies the implicit-shift QL iteration, returning eigenvalues only.
//!
//! Eigenvector sign is whatever the iteration produces; no canonicalization
//! is applied. [`sign_align`] flips a vector towards a reference when the
//! sign-corrected variant is wanted.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matgen::{l2_norm, Seed, SymmetricMatrix};

/// Largest dimension [`full_spectrum`] accepts by default.
pub const DEFAULT_SPECTRUM_CAP: usize = 4000;

/// Fixed stream for the solver start vector when the caller does not supply
/// a seed.
const DEFAULT_START_SEED: u64 = 0x5EED_1A7C;

/// Maximum QL sweeps per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 50;

/// Leading eigenvalue with its unit eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// All eigenvalues of a symmetric matrix, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("spectrum is non-empty")
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }
}

/// Eigenpair of the algebraically largest eigenvalue.
///
/// The residual satisfies `||M v - theta v|| <= tol * ||M||_F` on success;
/// failure to converge within `max_iter` Lanczos steps (and the same budget
/// of fallback power iterations) is reported as [`Error::NotConverged`].
pub fn leading_eigenpair(m: &SymmetricMatrix, tol: f64, max_iter: usize) -> Result<EigenPair> {
    leading_eigenpair_seeded(m, tol, max_iter, Seed::new(DEFAULT_START_SEED))
}

/// Same as [`leading_eigenpair`] with a caller-controlled start vector
/// stream, so parallel trials stay reproducible.
pub fn leading_eigenpair_seeded(
    m: &SymmetricMatrix,
    tol: f64,
    max_iter: usize,
    seed: Seed,
) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    let n = m.n();
    if n == 0 {
        return Err(Error::InvalidParameter("matrix is empty".into()));
    }
    if n == 1 {
        return Ok(EigenPair { value: m.get(0, 0), vector: vec![1.0] });
    }
    let fnorm = m.frobenius_norm();
    if fnorm == 0.0 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        return Ok(EigenPair { value: 0.0, vector: v });
    }
    match lanczos_top(m, tol, max_iter, seed, fnorm) {
        Ok(pair) => Ok(pair),
        Err(Error::NotConverged { .. }) => shifted_power_top(m, tol, max_iter, seed, fnorm),
        Err(e) => Err(e),
    }
}

fn random_unit_vector(n: usize, seed: Seed) -> Vec<f64> {
    let mut rng = seed.rng();
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = l2_norm(&v);
        if norm > 1e-100 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn lanczos_top(
    m: &SymmetricMatrix,
    tol: f64,
    max_iter: usize,
    seed: Seed,
    fnorm: f64,
) -> Result<EigenPair> {
    let n = m.n();
    let steps = max_iter.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alphas: Vec<f64> = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);

    basis.push(random_unit_vector(n, seed));
    let mut w = vec![0.0; n];
    let mut last_residual = f64::INFINITY;

    for k in 0..steps {
        m.matvec_into(&basis[k], &mut w);
        let alpha: f64 = dot(&w, &basis[k]);
        alphas.push(alpha);
        for (wi, vi) in w.iter_mut().zip(&basis[k]) {
            *wi -= alpha * vi;
        }
        if k > 0 {
            let beta_prev = betas[k - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[k - 1]) {
                *wi -= beta_prev * vi;
            }
        }
        // Full reorthogonalization, two passes.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let beta = l2_norm(&w);

        // Top Ritz pair of the current tridiagonal section.
        let (theta, s) = tridiag_top_pair(&alphas, &betas)?;
        let residual_est = beta * s.last().map(|v| v.abs()).unwrap_or(0.0);
        last_residual = residual_est;
        let exhausted = beta <= f64::EPSILON * fnorm;
        if residual_est <= tol * fnorm || exhausted {
            let mut y = vec![0.0; n];
            for (coef, v) in s.iter().zip(&basis) {
                for (yi, vi) in y.iter_mut().zip(v) {
                    *yi += coef * vi;
                }
            }
            let ny = l2_norm(&y);
            if ny > 0.0 {
                for yi in &mut y {
                    *yi /= ny;
                }
            }
            let r = residual_norm(m, &y, theta);
            if r <= tol * fnorm || exhausted {
                return Ok(EigenPair { value: theta, vector: y });
            }
        }
        if beta <= f64::EPSILON * fnorm {
            break; // invariant subspace, handled above
        }
        if k + 1 < steps {
            basis.push(w.iter().map(|x| x / beta).collect());
            betas.push(beta);
        }
    }
    Err(Error::NotConverged { iterations: steps, residual: last_residual })
}

/// Power iteration on `M + sigma I` with `sigma = ||M||_1`, which makes the
/// algebraically largest eigenvalue of `M` the dominant one.
fn shifted_power_top(
    m: &SymmetricMatrix,
    tol: f64,
    max_iter: usize,
    seed: Seed,
    fnorm: f64,
) -> Result<EigenPair> {
    let n = m.n();
    let sigma = m.one_norm();
    let mut x = random_unit_vector(n, seed.derive(1));
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        m.matvec_into(&x, &mut y);
        let theta = dot(&x, &y);
        residual = {
            let mut r2 = 0.0;
            for (yi, xi) in y.iter().zip(&x) {
                let d = yi - theta * xi;
                r2 += d * d;
            }
            r2.sqrt()
        };
        if residual <= tol * fnorm {
            return Ok(EigenPair { value: theta, vector: x });
        }
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += sigma * xi;
        }
        let ny = l2_norm(&y);
        if ny == 0.0 {
            // x is an exact eigenvector of the shift: M x = -sigma x.
            return Ok(EigenPair { value: -sigma, vector: x });
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual })
}

/// All eigenvalues, sorted ascending, via Householder tridiagonalization and
/// implicit-shift QL. Dimension is capped at [`DEFAULT_SPECTRUM_CAP`].
pub fn full_spectrum(m: &SymmetricMatrix) -> Result<Spectrum> {
    full_spectrum_capped(m, DEFAULT_SPECTRUM_CAP)
}

pub fn full_spectrum_capped(m: &SymmetricMatrix, cap: usize) -> Result<Spectrum> {
    let n = m.n();
    if n == 0 {
        return Err(Error::InvalidParameter("matrix is empty".into()));
    }
    if n > cap {
        return Err(Error::SpectrumCapExceeded { n, cap });
    }
    let mut a = m.data().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut a, n, &mut d, &mut e);
    // shift the sub-diagonal convention: e[i] couples d[i] and d[i+1]
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    tridiag_ql_values(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    Ok(Spectrum { values: d })
}

/// Absolute overlap `|<v, x>|` between two unit vectors.
pub fn overlap(v: &[f64], x: &[f64]) -> Result<f64> {
    if v.len() != x.len() {
        return Err(Error::DimensionMismatch(v.len(), x.len()));
    }
    for (name, u) in [("first", v), ("second", x)] {
        let norm = l2_norm(u);
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "{name} vector has norm {norm}, expected 1 within 1e-6"
            )));
        }
    }
    Ok(dot(v, x).abs())
}

/// `v * sign(<v, x>)`: orient `v` towards `x`. A zero inner product leaves
/// `v` unchanged.
pub fn sign_align(v: &[f64], x: &[f64]) -> Vec<f64> {
    if dot(v, x) < 0.0 {
        v.iter().map(|e| -e).collect()
    } else {
        v.to_vec()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual_norm(m: &SymmetricMatrix, v: &[f64], theta: f64) -> f64 {
    let mv = m.matvec(v);
    mv.iter()
        .zip(v)
        .map(|(a, b)| {
            let d = a - theta * b;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Householder reduction of a dense symmetric matrix (row-major `a`, size
/// `n`) to tridiagonal form, eigenvalues-only variant: the orthogonal factor
/// is not accumulated. On return `d` holds the diagonal and `e[1..]` the
/// sub-diagonal (`e[0]` is zero). Follows the classic EISPACK/tred2 scheme.
fn householder_tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut fsum = 0.0;
                for j in 0..=l {
                    let mut g2 = 0.0;
                    for k in 0..=j {
                        g2 += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g2 += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g2 / h;
                    fsum += e[j] * a[i * n + j];
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let fj = a[i * n + j];
                    let gj = e[j] - hh * fj;
                    e[j] = gj;
                    for k in 0..=j {
                        a[j * n + k] -= fj * e[k] + gj * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[i * n + i];
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
///
/// `d` holds the diagonal, `e[i]` the coupling between `d[i]` and `d[i+1]`
/// (`e[n-1]` is workspace). Eigenvalues replace `d`, unsorted.
fn tridiag_ql_values(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::QlFailure(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Largest eigenvalue of the tridiagonal section (`alphas`, `betas`) together
/// with its unit eigenvector, via QL for the value and inverse iteration for
/// the vector.
fn tridiag_top_pair(alphas: &[f64], betas: &[f64]) -> Result<(f64, Vec<f64>)> {
    let k = alphas.len();
    debug_assert_eq!(betas.len() + 1, k);
    if k == 1 {
        return Ok((alphas[0], vec![1.0]));
    }
    let mut d = alphas.to_vec();
    let mut e = vec![0.0; k];
    e[..k - 1].copy_from_slice(betas);
    tridiag_ql_values(&mut d, &mut e)?;
    let theta = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let v = tridiag_inverse_iteration(alphas, betas, theta);
    Ok((theta, v))
}

/// One-or-two sweeps of inverse iteration at shift `theta` on the
/// tridiagonal (`alphas`, `betas`); assumes `theta` is (near) an eigenvalue.
fn tridiag_inverse_iteration(alphas: &[f64], betas: &[f64], theta: f64) -> Vec<f64> {
    let k = alphas.len();
    let scale = alphas.iter().map(|a| a.abs()).chain(betas.iter().map(|b| b.abs())).fold(1e-300, f64::max);
    // small detuning keeps the shifted system solvable
    let shift = theta + scale * 1e-14;
    let mut v = vec![1.0 / (k as f64).sqrt(); k];
    for _ in 0..3 {
        let mut sol = solve_tridiag_shifted(alphas, betas, shift, &v, scale);
        let norm = l2_norm(&sol);
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        for x in &mut sol {
            *x /= norm;
        }
        v = sol;
    }
    v
}

/// Solve `(T - shift I) x = b` by LU with partial pivoting specialised to
/// tridiagonal structure; tiny pivots are regularised.
fn solve_tridiag_shifted(alphas: &[f64], betas: &[f64], shift: f64, b: &[f64], scale: f64) -> Vec<f64> {
    let k = alphas.len();
    let tiny = scale * 1e-300f64.max(f64::MIN_POSITIVE);
    // Rows: lower[i] x_{i-1} + diag[i] x_i + upper[i] x_{i+1}
    let mut diag: Vec<f64> = alphas.iter().map(|a| a - shift).collect();
    let mut upper = vec![0.0; k];
    let mut upper2 = vec![0.0; k]; // fill-in from pivoting
    upper[..k - 1].copy_from_slice(betas);
    let mut rhs = b.to_vec();
    let mut lower: Vec<f64> = betas.to_vec();

    for i in 0..k - 1 {
        if lower[i].abs() > diag[i].abs() {
            // swap row i and i+1
            std::mem::swap(&mut diag[i], &mut lower[i]);
            let u_next = diag[i + 1];
            diag[i + 1] = upper[i];
            upper[i] = u_next;
            upper2[i] = if i + 1 < k - 1 {
                let t = upper[i + 1];
                upper[i + 1] = 0.0;
                t
            } else {
                0.0
            };
            rhs.swap(i, i + 1);
        }
        let pivot = if diag[i].abs() < tiny { tiny.copysign(diag[i]) } else { diag[i] };
        diag[i] = pivot;
        let mult = lower[i] / pivot;
        diag[i + 1] -= mult * upper[i];
        if i + 1 < k - 1 {
            upper[i + 1] -= mult * upper2[i];
        }
        rhs[i + 1] -= mult * rhs[i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = rhs[i];
        if i + 1 < k {
            acc -= upper[i] * x[i + 1];
        }
        if i + 2 < k {
            acc -= upper2[i] * x[i + 2];
        }
        let pivot = if diag[i].abs() < tiny { tiny.copysign(diag[i]) } else { diag[i] };
        x[i] = acc / pivot;
    }
    x
}
