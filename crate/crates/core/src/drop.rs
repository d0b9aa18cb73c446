//! Dimensional reduction of poles: the spectrum of a d-dimensional network as
//! all Cartesian sums `sum_n gamma_n z_{s_n}^{(n)}` of per-direction chain rates.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assignment::hungarian;
use crate::chain1d::{chain_rates, sort_rates, ChainSpectrum};
use crate::error::{Error, Result};
use crate::lattice::NetworkSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Drop,
    Chain,
    EomCnm,
    EomEigen,
    EomDet,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Drop => "drop",
            Method::Chain => "chain",
            Method::EomCnm => "eom-cnm",
            Method::EomEigen => "eom-eigen",
            Method::EomDet => "eom-det",
        })
    }
}

/// Multiset of complex collective rates (units of the reference rate).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub rates: Vec<Complex64>,
    pub method: Method,
    /// For DRoP spectra: the zero-based chain index `s_n` chosen along each
    /// direction, one tuple per rate.
    pub tuples: Option<Vec<Vec<usize>>>,
}

impl Spectrum {
    pub fn new(rates: Vec<Complex64>, method: Method) -> Self {
        Self { rates, method, tuples: None }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn sum(&self) -> Complex64 {
        self.rates.iter().sum()
    }

    /// Rates sorted by (Re, Im), paired with their tuples when present.
    pub fn sorted(&self) -> Spectrum {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (self.rates[a], self.rates[b]);
            x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
        });
        Spectrum {
            rates: order.iter().map(|&i| self.rates[i]).collect(),
            method: self.method,
            tuples: self.tuples.as_ref().map(|t| order.iter().map(|&i| t[i].clone()).collect()),
        }
    }

    pub fn from_chain(chain: &ChainSpectrum, gamma: f64) -> Self {
        let mut rates: Vec<Complex64> = chain.z.iter().map(|z| z * gamma).collect();
        sort_rates(&mut rates);
        Self {
            rates,
            method: Method::Chain,
            tuples: Some((0..chain.z.len()).map(|i| vec![i]).collect()),
        }
    }
}

/// Per-direction chain spectra used by [`drop_spectrum`].
pub fn direction_chains(spec: &NetworkSpec) -> Result<Vec<ChainSpectrum>> {
    let mut cache: BTreeMap<usize, ChainSpectrum> = BTreeMap::new();
    spec.dims
        .iter()
        .map(|&n| {
            if let Some(c) = cache.get(&n) {
                return Ok(c.clone());
            }
            let c = chain_rates(n, spec.theta)?;
            cache.insert(n, c.clone());
            Ok(c)
        })
        .collect()
}

/// All `prod N_n` sums `sum_n gamma_n z_{s_n}^{(n)}`, tuples in row-major order.
///
/// With a noise field present the per-direction rates are the sampled means,
/// which makes the result an approximation.
pub fn drop_spectrum(spec: &NetworkSpec) -> Result<Spectrum> {
    let chains = direction_chains(spec)?;
    let gammas = spec.effective_gammas();
    let total = spec.num_qubits();
    let d = spec.d();
    let mut rates = Vec::with_capacity(total);
    let mut tuples = Vec::with_capacity(total);
    for lin in 0..total {
        let tuple = spec.delinearize(lin).coords;
        let rate = (0..d).map(|n| chains[n].z[tuple[n]] * gammas[n]).sum();
        rates.push(rate);
        tuples.push(tuple);
    }
    Ok(Spectrum { rates, method: Method::Drop, tuples: Some(tuples) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    /// `(index in a, index in b)` for every element of `a`.
    pub pairing: Vec<(usize, usize)>,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Optimal assignment between two spectra minimizing the summed distance.
pub fn match_spectra(a: &Spectrum, b: &Spectrum, tol: f64) -> Result<MatchReport> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    let cost: Vec<Vec<f64>> = a
        .rates
        .iter()
        .map(|x| b.rates.iter().map(|y| (x - y).norm()).collect())
        .collect();
    let assign = hungarian(&cost);
    let errors: Vec<f64> = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    let max_abs_error = errors.iter().copied().fold(0.0, f64::max);
    let mean_abs_error = if errors.is_empty() { 0.0 } else { errors.iter().sum::<f64>() / errors.len() as f64 };
    Ok(MatchReport {
        pairing: assign.into_iter().enumerate().collect(),
        max_abs_error,
        mean_abs_error,
        tol,
        passed: max_abs_error <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_by_two_closed_form() {
        let (g1, g2, th) = (1.0, 0.4, 0.37 * PI);
        let spec = NetworkSpec::new(vec![2, 2], vec![g1, g2], th).unwrap();
        let s = drop_spectrum(&spec).unwrap();
        let e = Complex64::from_polar(1.0, th);
        let expected = Spectrum::new(
            vec![
                g1 * (1.0 - e) + g2 * (1.0 - e),
                g1 * (1.0 - e) + g2 * (1.0 + e),
                g1 * (1.0 + e) + g2 * (1.0 - e),
                g1 * (1.0 + e) + g2 * (1.0 + e),
            ],
            Method::Drop,
        );
        assert!(match_spectra(&s, &expected, 1e-12).unwrap().passed);
    }

    #[test]
    fn tuples_are_distinct_and_complete() {
        let spec = NetworkSpec::new(vec![2, 3, 4], vec![1.0; 3], 0.3).unwrap();
        let s = drop_spectrum(&spec).unwrap();
        let mut t = s.tuples.clone().unwrap();
        assert_eq!(t.len(), 24);
        t.sort();
        t.dedup();
        assert_eq!(t.len(), 24);
    }

    #[test]
    fn bic_multiset_at_pi() {
        // Per-direction {0^(N_n - 1), N_n}; sums over [2,3,4].
        let spec = NetworkSpec::new(vec![2, 3, 4], vec![1.0; 3], PI).unwrap();
        let s = drop_spectrum(&spec).unwrap();
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for r in &s.rates {
            assert!(r.im.abs() < 1e-8);
            let k = r.re.round();
            assert!((r.re - k).abs() < 1e-8);
            *counts.entry(k as i64).or_default() += 1;
        }
        let expected: BTreeMap<i64, usize> =
            [(0, 6), (2, 6), (3, 3), (4, 2), (5, 3), (6, 2), (7, 1), (9, 1)].into_iter().collect();
        assert_eq!(counts, expected);
    }

    #[test]
    fn d1_is_scaled_chain() {
        let spec = NetworkSpec::new(vec![5], vec![2.5], 0.61).unwrap();
        let s = drop_spectrum(&spec).unwrap();
        let chain = Spectrum::from_chain(&chain_rates(5, 0.61).unwrap(), 2.5);
        assert!(match_spectra(&s, &chain, 1e-13).unwrap().passed);
    }

    #[test]
    fn matching_identities() {
        let a = Spectrum::new(vec![c(1.0, 0.0), c(1.0 + 1e-9, 0.0), c(0.0, 2.0)], Method::Drop);
        let r = match_spectra(&a, &a, 0.0).unwrap();
        assert_eq!(r.max_abs_error, 0.0);
        assert!(r.passed);
        let mut swapped = a.clone();
        swapped.rates.swap(0, 1);
        let r = match_spectra(&a, &swapped, 0.0).unwrap();
        assert_eq!(r.max_abs_error, 0.0);
        assert_eq!(r.pairing, vec![(0, 1), (1, 0), (2, 2)]);
        let short = Spectrum::new(vec![c(0.0, 0.0)], Method::Drop);
        assert_eq!(match_spectra(&a, &short, 1.0).unwrap_err(), Error::SizeMismatch { left: 3, right: 1 });
    }

    #[test]
    fn greedy_would_mispair() {
        // Nearest-neighbour from a[0] steals b[1]; the optimum pairs crosswise.
        let a = Spectrum::new(vec![c(0.0, 0.0), c(1.0, 0.0)], Method::Drop);
        let b = Spectrum::new(vec![c(-0.9, 0.0), c(0.5, 0.0)], Method::Drop);
        let r = match_spectra(&a, &b, 1.0).unwrap();
        assert_eq!(r.pairing, vec![(0, 0), (1, 1)]);
        assert!((r.max_abs_error - 0.9).abs() < 1e-15);
        assert!(r.mean_abs_error <= r.max_abs_error);
    }
}
