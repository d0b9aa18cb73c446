//! Equations of motion of the full network as a square linear system.
//!
//! For every qubit `q` and direction `n` the field amplitudes `t`, `r` in the
//! cell to the left of `q` satisfy
//!
//! ```text
//! t_{q+1} e^{-i theta} - t_q + i sqrt(gamma/2) e_q = 0
//! r_{q+1} e^{+i theta} - r_q - i sqrt(gamma/2) e_q = 0
//! sum_n sqrt(gamma_n/2) (t_q + r_q) - Delta e_q    = 0
//! ```
//!
//! With no incoming field (`t_1 = 0` and `r_{N_n+1} = 0` on every line) the
//! system has `(2d+1)N` unknowns and equations. Its singular points in the
//! complex detuning plane are the poles; rates follow from `Gamma = 2i Delta`.
//!
//! Layout: rows `0..N` are the excitation equations and columns `0..N` the
//! excitation amplitudes. Each line then owns a contiguous block of `2 N_n`
//! rows/columns: first the forward equations/amplitudes, then the backward ones.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::drop::{Method, Spectrum};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_lines, NetworkSpec};
use crate::linalg::{self, companion_roots, log_det, CMatrix, LogDet};
use crate::optimize::{nelder_mead, SimplexOptions};

const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn delta_to_gamma(delta: Complex64) -> Complex64 {
    2.0 * I * delta
}

pub fn gamma_to_delta(gamma: Complex64) -> Complex64 {
    gamma / (2.0 * I)
}

/// What a column of the system stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Excitation { qubit: usize },
    /// Right-moving amplitude in the cell to the right of `qubit` (`t_{q+1}`).
    Forward { direction: usize, qubit: usize },
    /// Left-moving amplitude in the cell to the left of `qubit` (`r_q`).
    Backward { direction: usize, qubit: usize },
}

#[derive(Debug, Clone)]
pub struct EomMatrix {
    pub a: CMatrix,
    /// Column index -> unknown.
    pub index_map: Vec<Unknown>,
    pub delta: Complex64,
    /// Resolved rate of qubit `q` along direction `n`, stored at `q * d + n`.
    pub rates: Vec<f64>,
    pub num_qubits: usize,
}

impl EomMatrix {
    pub fn column_of(&self, unknown: Unknown) -> Option<usize> {
        self.index_map.iter().position(|&u| u == unknown)
    }
}

pub fn assemble(spec: &NetworkSpec, delta: Complex64) -> EomMatrix {
    let n_q = spec.num_qubits();
    let d = spec.d();
    let size = (2 * d + 1) * n_q;
    let mut a = CMatrix::zeros(size, size);
    let mut index_map: Vec<Unknown> = (0..n_q).map(|qubit| Unknown::Excitation { qubit }).collect();
    let rates: Vec<f64> = (0..n_q * d).map(|k| spec.rate(k / d, k % d)).collect();
    let coupling = |q: usize, n: usize| (rates[q * d + n] / 2.0).sqrt();

    let fwd = Complex64::from_polar(1.0, -spec.theta);
    let bwd = Complex64::from_polar(1.0, spec.theta);
    let one = Complex64::new(1.0, 0.0);

    for q in 0..n_q {
        a[(q, q)] = -delta;
    }

    let mut base = n_q;
    for n in 0..d {
        for line in enumerate_lines(spec, n) {
            let qs = line.qubits(&spec.dims);
            let len = qs.len();
            // forward block: rows/cols base..base+len; backward: base+len..base+2len
            for &q in &qs {
                index_map.push(Unknown::Forward { direction: n, qubit: q });
            }
            for &q in &qs {
                index_map.push(Unknown::Backward { direction: n, qubit: q });
            }
            for (i, &q) in qs.iter().enumerate() {
                let g = coupling(q, n);
                let t_row = base + i;
                let r_row = base + len + i;
                // forward: column base+i holds t_{i+1}; t_i is column base+i-1 (absent for i = 0)
                a[(t_row, base + i)] += fwd;
                if i > 0 {
                    a[(t_row, base + i - 1)] -= one;
                }
                a[(t_row, q)] += I * g;
                // backward: column base+len+i holds r_i; r_{i+1} absent for the last qubit
                if i + 1 < len {
                    a[(r_row, base + len + i + 1)] += bwd;
                }
                a[(r_row, base + len + i)] -= one;
                a[(r_row, q)] -= I * g;
                // excitation equation couples to t_q + r_q
                if i > 0 {
                    a[(q, base + i - 1)] += g;
                }
                a[(q, base + len + i)] += g;
            }
            base += 2 * len;
        }
    }
    debug_assert_eq!(base, size);
    EomMatrix { a, index_map, delta, rates, num_qubits: n_q }
}

pub fn log_det_at(spec: &NetworkSpec, delta: Complex64) -> LogDet {
    log_det(assemble(spec, delta).a)
}

pub fn det_at(spec: &NetworkSpec, delta: Complex64) -> Complex64 {
    log_det_at(spec, delta).value()
}

/// `(sigma_min, sigma_max)` of the full system at `delta`.
pub fn singular_extremes(spec: &NetworkSpec, delta: Complex64) -> (f64, f64) {
    let sv = linalg::singular_values(assemble(spec, delta).a);
    (*sv.last().unwrap_or(&0.0), *sv.first().unwrap_or(&0.0))
}

pub fn sigma_min(spec: &NetworkSpec, delta: Complex64) -> f64 {
    singular_extremes(spec, delta).0
}

/// The system with the Delta-independent field block eliminated.
///
/// Writing `A(Delta) = [[-Delta I, D], [C, B]]`, `det A = det B det(H - Delta I)`
/// with `H = -D B^{-1} C`, so the poles are the eigenvalues of the `N x N`
/// matrix `H` and `A(Delta)` is singular exactly when `H - Delta I` is.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub h: CMatrix,
    /// Spectral norm of `h`.
    pub norm: f64,
}

impl ReducedSystem {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        let n_q = spec.num_qubits();
        let a = assemble(spec, Complex64::new(0.0, 0.0)).a;
        let size = a.nrows();
        let b = a.view((n_q, n_q), (size - n_q, size - n_q)).into_owned();
        let c = a.view((n_q, 0), (size - n_q, n_q)).into_owned();
        let d = a.view((0, n_q), (n_q, size - n_q)).into_owned();
        let x = b
            .lu()
            .solve(&c)
            .ok_or_else(|| Error::ConditioningFailure("field block is singular".into()))?;
        let h = -(d * x);
        let norm = linalg::singular_values(h.clone()).first().copied().unwrap_or(0.0);
        Ok(Self { h, norm })
    }

    pub fn size(&self) -> usize {
        self.h.nrows()
    }

    pub fn shifted(&self, delta: Complex64) -> CMatrix {
        let mut k = self.h.clone();
        for i in 0..k.nrows() {
            k[(i, i)] -= delta;
        }
        k
    }

    /// `(sigma_min, sigma_max)` of `H - Delta I`.
    pub fn singular_extremes(&self, delta: Complex64) -> (f64, f64) {
        let sv = linalg::singular_values(self.shifted(delta));
        (*sv.last().unwrap_or(&0.0), *sv.first().unwrap_or(&0.0))
    }

    /// `sigma_min(H - Delta I) / (|H| + |Delta|)`.
    pub fn residual(&self, delta: Complex64) -> f64 {
        let denom = self.norm + delta.norm();
        if denom > 0.0 { self.singular_extremes(delta).0 / denom } else { 0.0 }
    }

    pub fn nullity(&self, delta: Complex64, rank_tol: f64) -> usize {
        let sv = linalg::singular_values(self.shifted(delta));
        let smax = sv.first().copied().unwrap_or(0.0);
        sv.iter().filter(|&&s| s < rank_tol * smax).count()
    }

    pub fn eigen_deltas(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(self.h.clone())
    }
}

#[derive(Debug, Clone)]
pub struct PoleSearchResult {
    pub poles: Spectrum,
    /// Seeds in the Gamma plane.
    pub seeds_used: Vec<Complex64>,
    /// [`ReducedSystem::residual`] at each reported pole.
    pub residuals: Vec<f64>,
    pub method: Method,
}

fn sort_with<T: Clone>(rates: &mut Vec<Complex64>, extra: &mut Vec<T>) {
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by(|&a, &b| rates[a].re.total_cmp(&rates[b].re).then(rates[a].im.total_cmp(&rates[b].im)));
    *rates = order.iter().map(|&i| rates[i]).collect();
    *extra = order.iter().map(|&i| extra[i].clone()).collect();
}

/// All poles from the eigenvalues of the reduced system.
pub fn all_poles_eigen(spec: &NetworkSpec) -> Result<PoleSearchResult> {
    let reduced = ReducedSystem::new(spec)?;
    let deltas = reduced.eigen_deltas()?;
    let mut residuals: Vec<f64> = deltas
        .iter()
.map(|&dl| reduced.residual(dl))
        .collect();
    let mut rates: Vec<Complex64> = deltas.iter().map(|&d| delta_to_gamma(d)).collect();
    sort_with(&mut rates, &mut residuals);
    Ok(PoleSearchResult {
        poles: Spectrum::new(rates, Method::EomEigen),
        seeds_used: Vec::new(),
        residuals,
        method: Method::EomEigen,
    })
}

/// Simplex search on the smallest singular value.
///
/// Keeps the reduced system so repeated searches on the same network do not
/// reassemble it.
pub struct PoleSearcher<'a> {
    spec: &'a NetworkSpec,
    reduced: ReducedSystem,
    scale: f64,
}

impl<'a> PoleSearcher<'a> {
    pub fn new(spec: &'a NetworkSpec) -> Result<Self> {
        Ok(Self { spec, reduced: ReducedSystem::new(spec)?, scale: spec.rate_scale() })
    }

    pub fn reduced(&self) -> &ReducedSystem {
        &self.reduced
    }

    /// Minimizes `sigma_min(H - Delta I)` from `seed`; converged when
    /// [`ReducedSystem::residual`] is at most `tol` and the simplex has collapsed below
    /// `1e-12`. The result is re-checked on the full system.
    pub fn find(&self, seed: Complex64, tol: f64) -> Result<Complex64> {
        if !(seed.re.is_finite() && seed.im.is_finite()) {
            return Err(Error::NonFinite("seed"));
        }
        if self.reduced.residual(seed) <= tol {
            return Ok(seed);
        }
        let opts = SimplexOptions {
            initial_step: 1e-3 * self.scale,
            x_tol: 1e-12,
            f_target: f64::NEG_INFINITY,
            max_evals: 10_000,
        };
        let out = nelder_mead(
            |x| self.reduced.singular_extremes(Complex64::new(x[0], x[1])).0,
            [seed.re, seed.im],
            opts,
        );
        let found = Complex64::new(out.x[0], out.x[1]);
        if !out.converged {
            return Err(Error::MaxIterations { evaluations: out.evals, best: out.f });
        }
        let ratio = self.reduced.residual(found);
        if ratio > tol {
            return Err(Error::Stalled { ratio });
        }
        Ok(found)
    }

    /// Relative `sigma_min` of the full `(2d+1)N` system at `delta`.
    pub fn full_residual(&self, delta: Complex64) -> f64 {
        let (lo, hi) = singular_extremes(self.spec, delta);
        if hi > 0.0 { lo / hi } else { 0.0 }
    }
}

/// Single pole search from `seed` (Delta plane).
pub fn find_pole(spec: &NetworkSpec, seed: Complex64, tol: f64) -> Result<Complex64> {
    PoleSearcher::new(spec)?.find(seed, tol)
}

/// Seeds over `[0, 1.2 S] x [-S, S]` in the Gamma plane, `S = sum_n N_n gamma_n`.
pub fn grid_seeds(spec: &NetworkSpec, per_side: usize) -> Vec<Complex64> {
    let s = spec.rate_scale();
    let mut seeds = Vec::with_capacity(per_side * per_side);
    for i in 0..per_side {
        for j in 0..per_side {
            let re = 1.2 * s * (i as f64 + 0.5) / per_side as f64;
            let im = -s + 2.0 * s * (j as f64 + 0.5) / per_side as f64;
            seeds.push(Complex64::new(re, im));
        }
    }
    seeds
}

/// Condition-number-method pole set from `seeds` (Gamma plane).
///
/// Converged poles closer than `1e-7 * S` are merged, and a merged pole
/// counts as many times as the nullity of the reduced system there. If that
/// still falls short of `N`, the search is repeated from a 20x20 grid.
pub fn all_poles_cnm(spec: &NetworkSpec, seeds: &[Complex64], tol: f64, rank_tol: f64) -> Result<PoleSearchResult> {
    let searcher = PoleSearcher::new(spec)?;
    let n_q = spec.num_qubits();
    let merge = 1e-7 * spec.rate_scale();

    let run = |seeds: &[Complex64]| -> Vec<Complex64> {
        seeds
            .par_iter()
            .map(|&g| searcher.find(gamma_to_delta(g), tol).ok().map(delta_to_gamma))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let absorb = |found: &mut Vec<Complex64>, new: Vec<Complex64>| {
        for g in new {
            if found.iter().all(|f| (f - g).norm() > merge) {
                found.push(g);
            }
        }
    };

    let with_multiplicity = |found: &[Complex64]| -> Vec<Complex64> {
        if found.len() == n_q {
            return found.to_vec();
        }
        let mut rates = Vec::with_capacity(n_q);
        for &g in found {
            let m = searcher.reduced().nullity(gamma_to_delta(g), rank_tol).max(1);
            rates.extend(std::iter::repeat_n(g, m));
        }
        rates
    };

    let mut seeds_used = seeds.to_vec();
    let mut found = Vec::new();
    absorb(&mut found, run(seeds));
    let mut rates = with_multiplicity(&found);
    if rates.len() < n_q {
        let grid = grid_seeds(spec, 20);
        absorb(&mut found, run(&grid));
        seeds_used.extend(grid);
        rates = with_multiplicity(&found);
    }
    if rates.len() != n_q {
        return Err(Error::IncompletePoleSet { found: rates.len(), expected: n_q });
    }
    let mut residuals: Vec<f64> = rates.iter().map(|&g| searcher.reduced().residual(gamma_to_delta(g))).collect();
    sort_with(&mut rates, &mut residuals);
    Ok(PoleSearchResult {
        poles: Spectrum::new(rates, Method::EomCnm),
        seeds_used,
        residuals,
        method: Method::EomCnm,
    })
}

/// `d/dDelta ln det A(Delta) = -tr (H - Delta I)^{-1}`, since `det B` does
/// not depend on Delta.
fn log_det_derivative(reduced: &ReducedSystem, delta: Complex64) -> Option<Complex64> {
    let n = reduced.size();
    let x = reduced.shifted(delta).lu().solve(&CMatrix::identity(n, n))?;
    Some(-x.trace())
}

/// Poles by interpolating `det A` on a circle and rooting the resulting
/// degree-N polynomial, followed by simultaneous (Aberth) refinement on the
/// exact determinant.
///
/// Samples sit at `2N + 2` roots of unity of radius `R = 1.5 S`, normalized
/// by `det A(iR)`; the least-squares fit on such nodes is a truncated DFT.
pub fn all_poles_det_interp(spec: &NetworkSpec) -> Result<PoleSearchResult> {
    let n_q = spec.num_qubits();
    let radius = 1.5 * spec.rate_scale();
    let m = 2 * n_q + 2;
    let reference = log_det_at(spec, Complex64::new(0.0, radius));
    let nodes: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64))
        .collect();
    let samples: Vec<Complex64> = nodes
        .par_iter()
        .map(|&w| {
            let ld = log_det_at(spec, radius * w);
            ld.phase / reference.phase * (ld.log_abs - reference.log_abs).exp()
        })
        .collect();

    let coeffs: Vec<Complex64> = (0..=n_q)
        .map(|k| {
            nodes.iter().zip(&samples).map(|(w, s)| s * w.powu(k as u32).conj()).sum::<Complex64>() / m as f64
        })
        .collect();
    let fit_err: f64 = nodes
        .iter()
        .zip(&samples)
        .map(|(w, s)| {
            let p = coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * w + c);
            (p - s).norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    let norm: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt();
    let fit_residual = fit_err / norm;
    if !(fit_residual <= 1e-6) {
        return Err(Error::ConditioningFailure(format!("determinant fit residual {fit_residual:e}")));
    }

    let mut deltas: Vec<Complex64> = companion_roots(&coeffs)?.into_iter().map(|u| u * radius).collect();
    let reduced = ReducedSystem::new(spec)?;
    aberth_refine(&reduced, spec.rate_scale(), &mut deltas);
    let mut residuals: Vec<f64> = deltas.iter().map(|&dl| reduced.residual(dl)).collect();
    collapse_clusters(&reduced, 1e-3 * spec.rate_scale(), &mut deltas, &mut residuals);
    if let Some(bad) = residuals.iter().find(|&&r| r > 1e-9) {
        return Err(Error::ConditioningFailure(format!("refined pole residual {bad:e}")));
    }
    let mut rates: Vec<Complex64> = deltas.iter().map(|&d| delta_to_gamma(d)).collect();
    sort_with(&mut rates, &mut residuals);
    Ok(PoleSearchResult {
        poles: Spectrum::new(rates, Method::EomDet),
        seeds_used: Vec::new(),
        residuals,
        method: Method::EomDet,
    })
}

/// Approximations to an m-fold root scatter on a small circle around it;
/// their mean is far more accurate than any one of them. Applied only where
/// it lowers the residual of every member.
fn collapse_clusters(reduced: &ReducedSystem, radius: f64, roots: &mut [Complex64], residuals: &mut [f64]) {
    let n = roots.len();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] || residuals[i] <= 1e-12 {
            continue;
        }
        let mut members = vec![i];
        let mut k = 0;
        while k < members.len() {
            let c = roots[members[k]];
            for j in 0..n {
                if !done[j] && !members.contains(&j) && (roots[j] - c).norm() < radius {
                    members.push(j);
                }
            }
            k += 1;
        }
        for &m in &members {
            done[m] = true;
        }
        if members.len() < 2 {
            continue;
        }
        let mean = members.iter().map(|&m| roots[m]).sum::<Complex64>() / members.len() as f64;
        let r = reduced.residual(mean);
        if members.iter().all(|&m| r < residuals[m]) {
            for &m in &members {
                roots[m] = mean;
                residuals[m] = r;
            }
        }
    }
}

/// Multiple roots converge only linearly; whatever is left after the sweep
/// budget is judged by the caller's residual check.
fn aberth_refine(reduced: &ReducedSystem, scale: f64, roots: &mut [Complex64]) {
    let n = roots.len();
    let mut active = vec![true; n];
    for _sweep in 0..100 {
        let derivs: Vec<Option<Complex64>> = roots
            .par_iter()
            .zip(active.par_iter())
            .map(|(&z, &on)| if on { log_det_derivative(reduced, z) } else { None })
            .collect();
        let current = roots.to_vec();
        let mut any = false;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            let Some(ld) = derivs[i] else {
                // exactly singular: already a root
                active[i] = false;
                continue;
            };
            let newton = 1.0 / ld;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| 1.0 / (current[i] - current[j]))
                .sum();
            let w = newton / (1.0 - newton * repulsion);
            if !(w.re.is_finite() && w.im.is_finite()) {
                active[i] = false;
                continue;
            }
            roots[i] -= w;
            if w.norm() <= 1e-14 * scale {
                active[i] = false;
            } else {
                any = true;
            }
        }
        if !any {
            break;
        }
    }
}

#[derive(Debug, Clone)]
pub struct NullSpace {
    pub nullity: usize,
    pub singular_values: Vec<f64>,
    /// Excitation components of each null vector.
    pub excitations: Vec<Vec<Complex64>>,
}

pub fn nullity_at(spec: &NetworkSpec, delta: Complex64, rank_tol: f64) -> NullSpace {
    let n_q = spec.num_qubits();
    let (sv, vectors) = linalg::null_space(assemble(spec, delta).a, rank_tol);
    NullSpace {
        nullity: vectors.len(),
        singular_values: sv,
        excitations: vectors.into_iter().map(|v| v[..n_q].to_vec()).collect(),
    }
}
