//! Collective decay rates of a single N-qubit chain.
//!
//! A unit cell (one qubit plus one propagation phase) maps field amplitudes
//! by the 2x2 transfer matrix `S(chi, theta)` with `chi = gamma / (2 Delta)`.
//! The poles of the chain are the zeros of `(S^N)_11`; in the dimensionless
//! variable `z = Gamma / gamma = i / chi` they are the `N` collective rates.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, CMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

type Mat2 = [[Complex64; 2]; 2];

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Unit-cell transfer matrix, `(t_{j-1}, r_{j-1}) = S (t_j, r_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub s: Mat2,
}

impl TransferMatrix {
    pub fn new(chi: Complex64, theta: f64) -> Result<Self> {
        if !(chi.re.is_finite() && chi.im.is_finite()) {
            return Err(Error::NonFinite("chi"));
        }
        if !theta.is_finite() {
            return Err(Error::NonFinite("theta"));
        }
        let e = Complex64::from_polar(1.0, theta);
        let em = e.conj();
        Ok(Self {
            s: [
                [(ONE + I * chi) * em, I * chi * e],
                [-I * chi * em, (ONE - I * chi) * e],
            ],
        })
    }

    pub fn det(&self) -> Complex64 {
        self.s[0][0] * self.s[1][1] - self.s[0][1] * self.s[1][0]
    }

    pub fn pow(&self, n: usize) -> Mat2 {
        let mut acc = [[ONE, ZERO], [ZERO, ONE]];
        for _ in 0..n {
            acc = mul2(&acc, &self.s);
        }
        acc
    }
}

/// Coefficients `c_0..c_N` of `(S^N)_11` as a polynomial in `chi`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    pub coeffs: Vec<Complex64>,
}

impl CharPoly {
    pub fn eval(&self, chi: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * chi + c)
    }

    /// Degree after dropping leading coefficients below `1e-12` of the largest.
    /// Equals `N` except at `theta = m pi`, where it collapses to 1.
    pub fn effective_degree(&self) -> usize {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        self.coeffs
            .iter()
            .rposition(|c| c.norm() > 1e-12 * scale)
            .unwrap_or(0)
    }
}

type Poly = Vec<Complex64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![ZERO; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

/// `(S^N)_11` by repeated multiplication of polynomial-entry 2x2 matrices.
pub fn char_poly(n: usize, theta: f64) -> Result<CharPoly> {
    if n == 0 {
        return Err(Error::InvalidSpec("chain length must be >= 1".into()));
    }
    if !theta.is_finite() {
        return Err(Error::NonFinite("theta"));
    }
    let e = Complex64::from_polar(1.0, theta);
    let em = e.conj();
    let s: [[Poly; 2]; 2] = [
        [vec![em, I * em], vec![ZERO, I * e]],
        [vec![ZERO, -I * em], vec![e, -I * e]],
    ];
    let mut acc = s.clone();
    for _ in 1..n {
        let next: [[Poly; 2]; 2] = std::array::from_fn(|a| {
            std::array::from_fn(|b| poly_add(&poly_mul(&acc[a][0], &s[0][b]), &poly_mul(&acc[a][1], &s[1][b])))
        });
        acc = next;
    }
    let [[s11, _], _] = acc;
    Ok(CharPoly { coeffs: s11 })
}

/// Per-rate tag assigned by [`crate::analysis::label_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateLabel {
    Unclassified,
    Subradiant,
    Superradiant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpectrum {
    pub n: usize,
    pub theta: f64,
    /// Dimensionless rates `Gamma_i / gamma`, sorted by (Re, Im).
    pub z: Vec<Complex64>,
    pub labels: Vec<RateLabel>,
}

impl ChainSpectrum {
    fn new(n: usize, theta: f64, mut z: Vec<Complex64>) -> Self {
        sort_rates(&mut z);
        let labels = vec![RateLabel::Unclassified; z.len()];
        Self { n, theta, z, labels }
    }
}

pub(crate) fn sort_rates(z: &mut [Complex64]) {
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// `(T^N)_11` and its derivative, with `T(z) = z S(i/z)` linear in `z`.
/// Each factor is rescaled by `1 + |z|`; only the ratio is used.
fn scaled_poly_z(z: Complex64, n: usize, theta: f64) -> (Complex64, Complex64) {
    let e = Complex64::from_polar(1.0, theta);
    let em = e.conj();
    let t: Mat2 = [[(z - ONE) * em, -e], [em, (z + ONE) * e]];
    let dt: Mat2 = [[em, ZERO], [ZERO, e]];
    let sc = 1.0 + z.norm();
    let mut r: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
    let mut dr: Mat2 = [[ZERO; 2]; 2];
    for _ in 0..n {
        let a = mul2(&dr, &t);
        let b = mul2(&r, &dt);
        dr = std::array::from_fn(|i| std::array::from_fn(|j| (a[i][j] + b[i][j]) / sc));
        r = mul2(&r, &t).map(|row| row.map(|v| v / sc));
    }
    (r[0][0], dr[0][0])
}

/// `sum_k a_k U_k(x)` and its derivative by forward recurrence.
fn cheb_u_series(a: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let (mut u0, mut u1) = (ONE, 2.0 * x);
    let (mut d0, mut d1) = (ZERO, Complex64::new(2.0, 0.0));
    let mut f = a[0] * u0;
    let mut df = ZERO;
    for (k, &ak) in a.iter().enumerate().skip(1) {
        if k > 1 {
            let u2 = 2.0 * x * u1 - u0;
            let d2 = 2.0 * u1 + 2.0 * x * d1 - d0;
            (u0, u1, d0, d1) = (u1, u2, d1, d2);
        }
        f += ak * u1;
        df += ak * d1;
    }
    (f, df)
}

fn polish_x(a: &[Complex64], xs: &mut [Complex64]) {
    for i in 0..xs.len() {
        let gap = (0..xs.len())
            .filter(|&j| j != i)
            .map(|j| (xs[j] - xs[i]).norm())
            .fold(f64::INFINITY, f64::min);
        let mut x = xs[i];
        let (mut f, mut df) = cheb_u_series(a, x);
        for _ in 0..8 {
            let step = f / df;
            if !(step.re.is_finite() && step.im.is_finite()) || step.norm() > 0.5 * gap {
                break;
            }
            let (fc, dfc) = cheb_u_series(a, x - step);
            if fc.norm() >= f.norm() {
                break;
            }
            x -= step;
            (f, df) = (fc, dfc);
            if step.norm() <= 1e-16 * (1.0 + x.norm()) {
                break;
            }
        }
        xs[i] = x;
    }
}

fn polish(z: &mut [Complex64], n: usize, theta: f64, only: &[usize]) {
    for &i in only {
        let gap = (0..z.len())
            .filter(|&j| j != i)
            .map(|j| (z[j] - z[i]).norm())
            .fold(f64::INFINITY, f64::min);
        let mut zi = z[i];
        let (mut p, mut dp) = scaled_poly_z(zi, n, theta);
        for _ in 0..8 {
            if dp == ZERO {
                break;
            }
            let step = p / dp;
            if !(step.re.is_finite() && step.im.is_finite()) || step.norm() > 0.5 * gap {
                break;
            }
            let cand = zi - step;
            let (pc, dpc) = scaled_poly_z(cand, n, theta);
            if pc.norm() >= p.norm() {
                break;
            }
            zi = cand;
            p = pc;
            dp = dpc;
            if step.norm() <= 1e-16 * (1.0 + zi.norm()) {
                break;
            }
        }
        z[i] = zi;
    }
}

/// Dimensionless collective rates of an N-qubit chain.
///
/// By Cayley-Hamilton (`det S = 1`), `(S^N)_11 = S_11 U_{N-1}(x) - U_{N-2}(x)`
/// with `x = tr(S)/2 = cos(theta) + chi sin(theta)`. Multiplied by
/// `sin(theta)` this is a three-term Chebyshev-U series in `x`, rooted with a
/// colleague matrix; the roots map back through `z = i sin(theta) / (x - cos(theta))`
/// and are polished by Newton steps on the series in `x`. Rates with `|z| >= 1`,
/// whose map from `x` is ill-conditioned, are polished on `(T^N)_11`.
pub fn chain_rates(n: usize, theta: f64) -> Result<ChainSpectrum> {
    if n == 0 {
        return Err(Error::InvalidSpec("chain length must be >= 1".into()));
    }
    if !theta.is_finite() {
        return Err(Error::NonFinite("theta"));
    }
    let th = theta.rem_euclid(2.0 * PI);
    let (s, c) = th.sin_cos();
    let em = Complex64::from_polar(1.0, -th);

    // a_N U_N + a_{N-1} U_{N-1} + a_{N-2} U_{N-2}
    let mut a = vec![ZERO; n + 1];
    a[n] += I * em / 2.0;
    a[n - 1] += -I;
    if n >= 2 {
        a[n - 2] += I * em / 2.0 - s;
    }
    let mut colleague = CMatrix::zeros(n, n);
    for k in 0..n.saturating_sub(1) {
        colleague[(k, k + 1)] = Complex64::new(0.5, 0.0);
        colleague[(k + 1, k)] = Complex64::new(0.5, 0.0);
    }
    for k in 0..n {
        colleague[(n - 1, k)] -= a[k] / (2.0 * a[n]);
    }
    let mut xs = eigenvalues(colleague)?;
    polish_x(&a, &mut xs);

    let mut z = Vec::with_capacity(n);
    let mut near_band_center = Vec::new();
    for (k, &x) in xs.iter().enumerate() {
        let dx = x - c;
        if dx.norm() < 1e-6 {
            near_band_center.push(k);
            z.push(ZERO);
        } else {
            z.push(I * s / dx);
        }
    }
    match near_band_center.as_slice() {
        [] => {}
        // The lone root with x ~ cos(theta) is the superradiant one; its
        // z-image is ill-conditioned, so seed it from the trace sum instead.
        [k] => {
            let others: Complex64 = z.iter().enumerate().filter(|&(j, _)| j != *k).map(|(_, v)| v).sum();
            z[*k] = Complex64::new(n as f64, 0.0) - others;
        }
        ks => {
            for &k in ks {
                z[k] = I * s / (xs[k] - c);
            }
        }
    }
    // The map x -> z amplifies errors by ~|z|^2 / sin(theta); large rates are
    // refined in z instead.
    let in_z: Vec<usize> = (0..n).filter(|&k| near_band_center.contains(&k) || z[k].norm() >= 1.0).collect();
    polish(&mut z, n, th, &in_z);

    let bound = 2.0 * n as f64 + 1.0;
    if let Some(bad) = z.iter().find(|v| !(v.re.is_finite() && v.im.is_finite()) || v.norm() > bound) {
        return Err(Error::InternalRoot(format!("chi root at ~0 (z = {bad})")));
    }
    Ok(ChainSpectrum::new(n, theta, z))
}

/// Closed forms for two and three qubits.
pub fn chain_rates_analytic(n: usize, theta: f64) -> Result<ChainSpectrum> {
    let e = Complex64::from_polar(1.0, theta);
    let z = match n {
        2 => vec![ONE - e, ONE + e],
        3 => {
            let e2 = e * e;
            let root = e * (8.0 + e2).sqrt();
            vec![(2.0 + e2 + root) / 2.0, (2.0 + e2 - root) / 2.0, ONE - e2]
        }
        other => return Err(Error::UnsupportedChainLength(other)),
    };
    Ok(ChainSpectrum::new(n, theta, z))
}

/// Residual of the two-equation (lambda) pole characterization at a
/// candidate rate `z` (units of gamma, `gamma = 1`).
///
/// `cos(lambda) = cos(theta) + chi sin(theta)` is the half-trace of the
/// transfer matrix above; `lambda` is taken on the principal arccos branch
/// (`0 <= Re lambda <= pi`). Returns infinity for `z = 0`.
pub fn lambda_residual(n: usize, theta: f64, z: Complex64) -> f64 {
    if z == ZERO {
        return f64::INFINITY;
    }
    let delta = z / (2.0 * I);
    let chi = 1.0 / (2.0 * delta);
    let (s, c) = theta.sin_cos();
    let lambda = (c + chi * s).acos();
    let nf = n as f64;
    let lhs = (delta + I / 2.0) * (lambda * nf).sin();
    let rhs = (lambda * (nf - 1.0)).sin() * delta * Complex64::from_polar(1.0, theta);
    (lhs - rhs).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn transfer_matrix_identity_and_pole() {
        let t = TransferMatrix::new(ZERO, 0.0).unwrap();
        assert_eq!(t.s, [[ONE, ZERO], [ZERO, ONE]]);
        let t = TransferMatrix::new(I, 1.234).unwrap();
        assert!(t.s[0][0].norm() < 1e-15);
        assert!(TransferMatrix::new(c(f64::NAN, 0.0), 0.0).is_err());
        assert!(TransferMatrix::new(ONE, f64::INFINITY).is_err());
    }

    #[test]
    fn char_poly_small_cases() {
        let th = 0.37;
        let em = Complex64::from_polar(1.0, -th);
        let p1 = char_poly(1, th).unwrap();
        assert_eq!(p1.coeffs.len(), 2);
        assert!((p1.coeffs[0] - em).norm() < 1e-15);
        assert!((p1.coeffs[1] - I * em).norm() < 1e-15);

        // (1 + i chi)^2 e^{-2i theta} + chi^2
        let em2 = em * em;
        let expected = [em2, 2.0 * I * em2, -em2 + 1.0];
        let p2 = char_poly(2, th).unwrap();
        for (a, b) in p2.coeffs.iter().zip(expected) {
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(p2.effective_degree(), 2);
    }

    #[test]
    fn char_poly_collapses_at_pi() {
        let p = char_poly(4, PI).unwrap();
        assert_eq!(p.effective_degree(), 1);
    }

    #[test]
    fn char_poly_agrees_with_matrix_power() {
        for &(n, th, chi) in &[(3usize, 0.7, c(0.3, -0.2)), (6, 2.1, c(-1.1, 0.4)), (9, 0.05, c(0.02, 0.5))] {
            let p = char_poly(n, th).unwrap();
            let direct = TransferMatrix::new(chi, th).unwrap().pow(n)[0][0];
            assert!((p.eval(chi) - direct).norm() < 1e-10 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn n2_roots_of_char_poly_give_closed_form() {
        let th = 0.81;
        let p = char_poly(2, th).unwrap();
        let chis = crate::linalg::companion_roots(&p.coeffs).unwrap();
        let mut z: Vec<Complex64> = chis.iter().map(|&x| I / x).collect();
        sort_rates(&mut z);
        let e = Complex64::from_polar(1.0, th);
        let mut expected = vec![ONE - e, ONE + e];
        sort_rates(&mut expected);
        for (a, b) in z.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_qubit() {
        for th in [0.0, 0.3, PI, 4.0] {
            let s = chain_rates(1, th).unwrap();
            assert_eq!(s.z.len(), 1);
            assert!((s.z[0] - ONE).norm() < 1e-13, "theta {th}: {}", s.z[0]);
        }
    }

    #[test]
    fn documented_values() {
        let s = chain_rates(2, PI / 2.0).unwrap();
        assert!((s.z[0] - c(1.0, -1.0)).norm() < 1e-12);
        assert!((s.z[1] - c(1.0, 1.0)).norm() < 1e-12);

        let s = chain_rates(3, PI).unwrap();
        assert!(s.z[0].norm() < 1e-8 && s.z[1].norm() < 1e-8);
        assert!((s.z[2] - 3.0).norm() < 1e-10);

        let s = chain_rates(3, PI / 2.0).unwrap();
        let r7 = 7f64.sqrt();
        let mut expected = vec![c(0.5, r7 / 2.0), c(0.5, -r7 / 2.0), c(2.0, 0.0)];
        sort_rates(&mut expected);
        for (a, b) in s.z.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn analytic_values() {
        let s = chain_rates_analytic(2, 0.0).unwrap();
        assert!((s.z[0]).norm() < 1e-15 && (s.z[1] - 2.0).norm() < 1e-15);
        let s = chain_rates_analytic(2, PI).unwrap();
        assert!((s.z[0]).norm() < 1e-15 && (s.z[1] - 2.0).norm() < 1e-15);
        let s = chain_rates_analytic(3, PI).unwrap();
        assert!(s.z[0].norm() < 1e-15 && s.z[1].norm() < 1e-15 && (s.z[2] - 3.0).norm() < 1e-14);
        assert_eq!(chain_rates_analytic(4, 0.1), Err(Error::UnsupportedChainLength(4)));
    }

    #[test]
    fn lambda_residual_examples() {
        assert!(lambda_residual(1, 0.9, ONE) < 1e-10);
        assert!(lambda_residual(2, PI / 2.0, c(10.0, 10.0)) > 1e-3);
        for z in chain_rates(2, PI / 2.0).unwrap().z {
            assert!(lambda_residual(2, PI / 2.0, z) < 1e-8);
        }
        assert_eq!(lambda_residual(3, 1.0, ZERO), f64::INFINITY);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(chain_rates(0, 0.1).is_err());
        assert!(chain_rates(3, f64::NAN).is_err());
        assert!(char_poly(0, 0.1).is_err());
    }
}
