//! Superradiance classification, subradiant scaling fits, bound-state (BIC)
//! sign sums and the noise-robustness study.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain1d::{ChainSpectrum, RateLabel};
use crate::drop::{direction_chains, drop_spectrum, Method, Spectrum};
use crate::eom::{delta_to_gamma, gamma_to_delta, nullity_at, PoleSearcher};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_lines, sample_noise, NetworkSpec};

/// Largest distance of θ/π from an integer for which clusters are separated.
pub const CLUSTER_WINDOW: f64 = 0.05;

fn theta_offset(theta: f64) -> (f64, f64) {
    let t = theta / PI;
    (t, (t - t.round()).abs())
}

fn superradiant_index(chain: &ChainSpectrum) -> usize {
    (0..chain.z.len()).max_by(|&a, &b| chain.z[a].re.total_cmp(&chain.z[b].re)).unwrap_or(0)
}

/// Marks the rate with the largest real part superradiant and the rest
/// subradiant. Left unclassified away from θ = mπ.
pub fn label_chain(chain: &mut ChainSpectrum) {
    if theta_offset(chain.theta).1 > CLUSTER_WINDOW || chain.z.is_empty() {
        chain.labels = vec![RateLabel::Unclassified; chain.z.len()];
        return;
    }
    let top = superradiant_index(chain);
    chain.labels = (0..chain.z.len())
        .map(|i| if i == top { RateLabel::Superradiant } else { RateLabel::Subradiant })
        .collect();
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperradianceReport {
    /// Superradiance dimension of every rate, in the order of the input spectrum.
    pub k: Vec<usize>,
    pub cluster_counts: BTreeMap<usize, usize>,
    /// Mean rate of each cluster, keyed by the sorted set of superradiant directions.
    pub cluster_centers: BTreeMap<Vec<usize>, (f64, f64)>,
    /// Index of the superradiant chain rate per direction.
    pub superradiant_indices: Vec<usize>,
}

pub fn classify_superradiance(spec: &NetworkSpec, drop: &Spectrum) -> Result<SuperradianceReport> {
    let (t, off) = theta_offset(spec.theta);
    if off > CLUSTER_WINDOW {
        return Err(Error::ThetaOutOfRange { theta_over_pi: t });
    }
    let tuples = drop
        .tuples
        .as_ref()
        .ok_or_else(|| Error::MissingTuples(drop.method.to_string()))?;
    let chains = direction_chains(spec)?;
    let top: Vec<usize> = chains.iter().map(superradiant_index).collect();

    let mut k = Vec::with_capacity(tuples.len());
    let mut cluster_counts = BTreeMap::new();
    let mut sums: BTreeMap<Vec<usize>, (Complex64, usize)> = BTreeMap::new();
    for (tuple, rate) in tuples.iter().zip(&drop.rates) {
        if tuple.len() != top.len() {
            return Err(Error::SizeMismatch { left: tuple.len(), right: top.len() });
        }
        let set: Vec<usize> = (0..top.len()).filter(|&n| tuple[n] == top[n]).collect();
        k.push(set.len());
        *cluster_counts.entry(set.len()).or_insert(0) += 1;
        let e = sums.entry(set).or_insert((Complex64::new(0.0, 0.0), 0));
        e.0 += rate;
        e.1 += 1;
    }
    let cluster_centers = sums
        .into_iter()
        .map(|(s, (sum, n))| {
            let c = sum / n as f64;
            (s, (c.re, c.im))
        })
        .collect();
    Ok(SuperradianceReport { k, cluster_counts, cluster_centers, superradiant_indices: top })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Total qubit counts `M^d`.
    pub sizes: Vec<usize>,
    pub min_rates: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

/// Rates with `|Gamma|` below this are treated as exact zeros.
pub const ZERO_RATE: f64 = 1e-12;

/// Log-log fit of the most subradiant nonzero rate against `N = M^d` over the
/// hypercubic lattices with side `M` in `sides` (unit rates, DRoP spectra).
pub fn subradiance_scaling(d: usize, theta: f64, sides: &[usize]) -> Result<ScalingFit> {
    let points: Vec<Option<(usize, f64)>> = sides
        .par_iter()
        .map(|&m| -> Result<Option<(usize, f64)>> {
            let spec = NetworkSpec::hypercubic(d, m, theta)?;
            let s = drop_spectrum(&spec)?;
            let min = s.rates.iter().filter(|g| g.norm() > ZERO_RATE).map(|g| g.re).fold(f64::INFINITY, f64::min);
            Ok((min.is_finite() && min > 0.0).then_some((spec.num_qubits(), min)))
        })
        .collect::<Result<_>>()?;
    let (sizes, min_rates): (Vec<usize>, Vec<f64>) = points.into_iter().flatten().unzip();
    if sizes.len() < 5 {
        return Err(Error::TooFewPoints(sizes.len()));
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = min_rates.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !slope.is_finite() {
        return Err(Error::NonFinite("scaling slope"));
    }
    Ok(ScalingFit { sizes, min_rates, slope, intercept: my - slope * mx })
}

/// Sign patterns applied to the excitation amplitudes along a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignRule {
    /// All ones for an even number of qubits, `+,-,+,...` for odd.
    EvenOdd,
    Plain,
    Alternating,
    /// `(-1)^(m j)` along the line, `j` counted from the first qubit.
    PhaseMatched,
}

pub const SIGN_RULES: [SignRule; 4] = [SignRule::EvenOdd, SignRule::Plain, SignRule::Alternating, SignRule::PhaseMatched];

impl SignRule {
    fn sign(self, m: i64, len: usize, j: usize) -> f64 {
        let alt = if j % 2 == 0 { 1.0 } else { -1.0 };
        match self {
            SignRule::EvenOdd if len % 2 == 0 => 1.0,
            SignRule::EvenOdd | SignRule::Alternating => alt,
            SignRule::Plain => 1.0,
            SignRule::PhaseMatched if m.rem_euclid(2) == 0 => 1.0,
            SignRule::PhaseMatched => alt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BicReport {
    pub m: i64,
    pub nullity: usize,
    pub expected_nullity: usize,
    /// Per rule: the largest `|sum_j p_j e_j|` over lines for each null
    /// vector, relative to the norm of that vector's excitation part.
    pub violations: BTreeMap<String, Vec<f64>>,
    pub singular_values_tail: Vec<f64>,
}

impl BicReport {
    pub fn max_violation(&self, rule: SignRule) -> f64 {
        self.violations[&rule_name(rule)].iter().copied().fold(0.0, f64::max)
    }
}

pub fn rule_name(rule: SignRule) -> String {
    serde_json::to_value(rule).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// Null space of the system at `Delta = 0`, `theta = m pi` (the spec's own θ
/// is ignored), and the line sums of its excitation amplitudes under every
/// [`SignRule`].
pub fn bic_condition_check(spec: &NetworkSpec, m: i64, rank_tol: f64) -> Result<BicReport> {
    let mut at = spec.clone();
    at.theta = m as f64 * PI;
    let null = nullity_at(&at, Complex64::new(0.0, 0.0), rank_tol);
    let lines: Vec<Vec<usize>> = (0..at.d())
        .flat_map(|n| enumerate_lines(&at, n).into_iter().map(|l| l.qubits(&at.dims)).collect::<Vec<_>>())
        .collect();

    let mut violations = BTreeMap::new();
    for rule in SIGN_RULES {
        let per_vector = null
            .excitations
            .iter()
            .map(|e| {
                let norm = e.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                let worst = lines
                    .iter()
                    .map(|qs| {
                        qs.iter()
                            .enumerate()
                            .map(|(j, &q)| e[q] * rule.sign(m, qs.len(), j))
                            .sum::<Complex64>()
                            .norm()
                    })
                    .fold(0.0, f64::max);
                if norm > 0.0 { worst / norm } else { f64::INFINITY }
            })
            .collect();
        violations.insert(rule_name(rule), per_vector);
    }
    let tail = null.singular_values.iter().rev().take(null.nullity + 1).rev().copied().collect();
    Ok(BicReport {
        m,
        nullity: null.nullity,
        expected_nullity: at.dims.iter().map(|&n| n - 1).product(),
        violations,
        singular_values_tail: tail,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStudyResult {
    pub epsilon_max: f64,
    pub seed: u64,
    pub drop_estimates: Spectrum,
    /// Refined pole per estimate, `None` where the search failed.
    pub refined: Vec<Option<Complex64>>,
    pub refined_poles: Spectrum,
    pub max_displacement: f64,
    pub median_displacement: f64,
    /// Distinct poles among the refined ones.
    pub recovered_count: usize,
}

/// Samples a noise field, estimates the poles from DRoP with averaged rates
/// and refines every estimate on the noisy system.
pub fn noise_study(spec: &NetworkSpec, epsilon_max: f64, seed: u64, tol: f64) -> Result<NoiseStudyResult> {
    let field = sample_noise(spec, epsilon_max, seed)?;
    let noisy = spec.clone().with_noise(field)?;
    let estimates = drop_spectrum(&noisy)?;
    let searcher = PoleSearcher::new(&noisy)?;
    let refined: Vec<Option<Complex64>> = estimates
        .rates
        .par_iter()
        .map(|&g| searcher.find(gamma_to_delta(g), tol).ok().map(delta_to_gamma))
        .collect();

    let mut disp: Vec<f64> = refined
        .iter()
        .zip(&estimates.rates)
        .filter_map(|(r, e)| r.map(|r| (r - e).norm()))
        .collect();
    disp.sort_by(f64::total_cmp);
    let max_displacement = disp.last().copied().unwrap_or(f64::NAN);
    let median_displacement = if disp.is_empty() {
        f64::NAN
    } else if disp.len() % 2 == 1 {
        disp[disp.len() / 2]
    } else {
        0.5 * (disp[disp.len() / 2 - 1] + disp[disp.len() / 2])
    };

    let merge = 1e-7 * noisy.rate_scale();
    let mut distinct: Vec<Complex64> = Vec::new();
    for g in refined.iter().flatten() {
        if distinct.iter().all(|d| (d - g).norm() > merge) {
            distinct.push(*g);
        }
    }
    let recovered_count = distinct.len();
    let refined_poles = Spectrum::new(refined.iter().flatten().copied().collect(), Method::EomCnm).sorted();
    Ok(NoiseStudyResult {
        epsilon_max,
        seed,
        drop_estimates: estimates,
        refined,
        refined_poles,
        max_displacement,
        median_displacement,
        recovered_count,
    })
}
