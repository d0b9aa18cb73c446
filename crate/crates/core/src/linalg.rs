//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Parlett-Reinsch diagonal balancing with powers of two (exact in floating point).
pub fn balance(m: &mut CMatrix) {
    let n = m.nrows();
    const RADIX: f64 = 2.0;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(m[(j, i)]);
                    r += abs1(m[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a general complex matrix (balanced, then complex Schur).
pub fn eigenvalues(mut m: CMatrix) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InternalRoot("matrix has non-finite entries".into()));
    }
    balance(&mut m);
    let n = m.nrows();
    let max_iter = 100 * n.max(10);
    let attempt = |a: CMatrix| {
        Schur::try_new(a, f64::EPSILON, max_iter).and_then(|s| s.eigenvalues()).map(|v| v.iter().copied().collect())
    };
    if let Some(v) = attempt(m.clone()) {
        return Ok(v);
    }
    // Shifted QR can cycle on highly symmetric matrices; a random unitary
    // similarity breaks the symmetry without changing the spectrum.
    for seed in 0..3 {
        let q = random_unitary(n, seed);
        if let Some(v) = attempt(&q * &m * q.adjoint()) {
            return Ok(v);
        }
    }
    Err(Error::InternalRoot(format!("Schur iteration did not converge ({n}x{n})")))
}

fn random_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let g = CMatrix::from_fn(n, n, |_, _| Complex64::new(draw(), draw()));
    g.qr().q()
}

/// Roots of `sum_k coeffs[k] x^k` via the balanced companion matrix.
/// Trailing (highest-order) zero coefficients must already be stripped.
pub fn companion_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = coeffs.len().saturating_sub(1);
    let lead = *coeffs.last().ok_or_else(|| Error::InternalRoot("empty polynomial".into()))?;
    if lead == Complex64::new(0.0, 0.0) {
        return Err(Error::InternalRoot("zero leading coefficient".into()));
    }
    if degree == 0 {
        return Ok(Vec::new());
    }
    let mut c = CMatrix::zeros(degree, degree);
    for i in 1..degree {
        c[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        c[(i, degree - 1)] = -coeffs[i] / lead;
    }
    eigenvalues(c)
}

/// Determinant split into `log|det|` and a unit phase, so that size-400
/// systems never overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub phase: Complex64,
}

impl LogDet {
    pub fn value(&self) -> Complex64 {
        self.phase * self.log_abs.exp()
    }
}

/// LU with partial pivoting, magnitudes accumulated in log space.
pub fn log_det(m: CMatrix) -> LogDet {
    let lu = m.lu();
    let mut phase = lu.p().determinant::<Complex64>();
    let mut log_abs = 0.0;
    let u = lu.u();
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        let a = d.norm();
        if a == 0.0 {
            return LogDet { log_abs: f64::NEG_INFINITY, phase: Complex64::new(0.0, 0.0) };
        }
        log_abs += a.ln();
        phase *= d / a;
    }
    LogDet { log_abs, phase }
}

/// Singular values, largest first.
pub fn singular_values(m: CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Right null vectors: columns of `V` whose singular value is below
/// `rank_tol * sigma_max`. Returns (all singular values descending, null vectors).
pub fn null_space(m: CMatrix, rank_tol: f64) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = m.ncols();
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let mut null: Vec<Vec<Complex64>> = order
        .iter()
        .filter(|&&i| svd.singular_values[i] < rank_tol * smax)
        .map(|&i| (0..n).map(|j| v_t[(i, j)].conj()).collect())
        .collect();
    // Square inputs only produce min(m, n) = n vectors; wide inputs would need more.
    null.truncate(n);
    (sv, null)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn companion_finds_known_roots() {
        // (x - 1)(x + 2i)(x - 3) = x^3 + (-4 + 2i) x^2 + (3 - 8i) x + 6i
        let coeffs = [c(0.0, 6.0), c(3.0, -8.0), c(-4.0, 2.0), c(1.0, 0.0)];
        let mut r = companion_roots(&coeffs).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        let expected = [c(0.0, -2.0), c(1.0, 0.0), c(3.0, 0.0)];
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn log_det_matches_direct() {
        let m = CMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 % 5.0 - 1.0, (i + j) as f64 * 0.25));
        let direct = m.clone().determinant();
        let ld = log_det(m);
        assert!((ld.value() - direct).norm() < 1e-10 * direct.norm().max(1.0));
    }

    #[test]
    fn log_det_of_singular_is_neg_inf() {
        let m = CMatrix::from_element(3, 3, c(1.0, 1.0));
        assert!(log_det(m).log_abs < -20.0);
    }

    #[test]
    fn balancing_preserves_spectrum() {
        let mut m = CMatrix::from_fn(3, 3, |i, j| c(10f64.powi(i as i32 * 3 - j as i32 * 2), 0.5));
        let before = {
            let mut e = eigenvalues(m.clone()).unwrap();
            e.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
            e
        };
        balance(&mut m);
        let mut after = m.schur().eigenvalues().unwrap().iter().copied().collect::<Vec<_>>();
        after.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).norm() < 1e-8 * b.norm().max(1.0));
        }
    }

    #[test]
    fn null_space_of_rank_one() {
        let v = [c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)];
        let m = CMatrix::from_fn(3, 3, |i, j| v[i] * v[j]);
        let (sv, null) = null_space(m.clone(), 1e-10);
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert_eq!(null.len(), 2);
        for x in null {
            let y = &m * nalgebra::DVector::from_vec(x);
            assert!(y.norm() < 1e-12);
        }
    }
}
