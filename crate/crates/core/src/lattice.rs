//! Network geometry and index bookkeeping.
//!
//! Qubits sit on the points of a `N_1 x ... x N_d` hyper-rectangular lattice.
//! Coordinates are zero-based and linearized row-major with direction 0 the
//! slowest-varying axis; every matrix row and column in [`crate::eom`] is laid
//! out in this order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice coordinate of one qubit, `0 <= coords[n] < dims[n]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitIndex {
    pub coords: Vec<usize>,
}

/// One waveguide: the set of qubits that share all coordinates except `direction`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LineId {
    pub direction: usize,
    /// The fixed coordinates of the other `d - 1` directions, in direction order.
    pub transverse: Vec<usize>,
}

impl LineId {
    /// Linear indices of the qubits on this line, ordered along the line.
    pub fn qubits(&self, dims: &[usize]) -> Vec<usize> {
        let mut coords = Vec::with_capacity(dims.len());
        let mut it = self.transverse.iter();
        for n in 0..dims.len() {
            if n == self.direction {
                coords.push(0);
            } else {
                coords.push(*it.next().expect("transverse length is d - 1"));
            }
        }
        (0..dims[self.direction])
            .map(|i| {
                coords[self.direction] = i;
                linearize(dims, &coords)
            })
            .collect()
    }
}

/// Per-qubit, per-direction decay rates drawn as `gamma_n * (1 + N(0, eps^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseField {
    /// Rate of qubit `q` along direction `n` lives at `q * d + n`.
    pub values: Vec<f64>,
    pub epsilon_max: f64,
    pub rng_seed: u64,
}

impl NoiseField {
    pub fn rate(&self, d: usize, qubit: usize, direction: usize) -> f64 {
        self.values[qubit * d + direction]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub dims: Vec<usize>,
    pub gammas: Vec<f64>,
    /// Propagation phase between neighbouring qubits, radians.
    pub theta: f64,
    pub noise: Option<NoiseField>,
}

impl NetworkSpec {
    pub fn new(dims: Vec<usize>, gammas: Vec<f64>, theta: f64) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpec("at least one direction is required".into()));
        }
        if dims.len() != gammas.len() {
            return Err(Error::InvalidSpec(format!(
                "{} dims but {} gammas",
                dims.len(),
                gammas.len()
            )));
        }
        if let Some(n) = dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidSpec(format!("dims[{n}] must be >= 1")));
        }
        if let Some(n) = gammas.iter().position(|&g| !(g.is_finite() && g > 0.0)) {
            return Err(Error::InvalidSpec(format!("gammas[{n}] must be finite and > 0")));
        }
        if !theta.is_finite() {
            return Err(Error::NonFinite("theta"));
        }
        dims.iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidSpec("qubit count overflows".into()))?;
        Ok(Self { dims, gammas, theta, noise: None })
    }

    /// Equal rates and `N` qubits per direction.
    pub fn hypercubic(d: usize, side: usize, theta: f64) -> Result<Self> {
        Self::new(vec![side; d], vec![1.0; d], theta)
    }

    pub fn with_noise(mut self, noise: NoiseField) -> Result<Self> {
        let expected = self.num_qubits() * self.d();
        if noise.values.len() != expected {
            return Err(Error::InvalidSpec(format!(
                "noise field has {} rates, expected {expected}",
                noise.values.len()
            )));
        }
        if noise.values.iter().any(|&g| !(g.is_finite() && g > 0.0)) {
            return Err(Error::InvalidSpec("noise rates must be finite and > 0".into()));
        }
        self.noise = Some(noise);
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.dims.iter().product()
    }

    /// `sum_n N_n * gamma_n`: the modulus bound of the superradiant rate, used
    /// as the natural scale for tolerances and search windows.
    pub fn rate_scale(&self) -> f64 {
        self.dims.iter().zip(&self.gammas).map(|(&n, &g)| n as f64 * g).sum()
    }

    /// Rate of `qubit` along `direction`, noise-aware.
    pub fn rate(&self, qubit: usize, direction: usize) -> f64 {
        match &self.noise {
            Some(field) => field.rate(self.d(), qubit, direction),
            None => self.gammas[direction],
        }
    }

    /// Per-direction rates DRoP should use: the nominal rates, or the mean of
    /// the sampled rates along each direction when a noise field is present.
    pub fn effective_gammas(&self) -> Vec<f64> {
        match &self.noise {
            None => self.gammas.clone(),
            Some(field) => {
                let d = self.d();
                let n_q = self.num_qubits() as f64;
                (0..d)
                    .map(|n| field.values.iter().skip(n).step_by(d).sum::<f64>() / n_q)
                    .collect()
            }
        }
    }

    pub fn linearize(&self, coords: &[usize]) -> usize {
        linearize(&self.dims, coords)
    }

    pub fn delinearize(&self, index: usize) -> QubitIndex {
        let mut coords = vec![0; self.d()];
        let mut rest = index;
        for n in (0..self.d()).rev() {
            coords[n] = rest % self.dims[n];
            rest /= self.dims[n];
        }
        QubitIndex { coords }
    }
}

fn linearize(dims: &[usize], coords: &[usize]) -> usize {
    coords
        .iter()
        .zip(dims)
        .fold(0, |acc, (&c, &n)| {
            debug_assert!(c < n);
            acc * n + c
        })
}

pub fn enumerate_qubits(spec: &NetworkSpec) -> Vec<QubitIndex> {
    (0..spec.num_qubits()).map(|i| spec.delinearize(i)).collect()
}

/// All waveguides along `direction`, ordered row-major over the transverse coordinates.
pub fn enumerate_lines(spec: &NetworkSpec, direction: usize) -> Vec<LineId> {
    assert!(direction < spec.d(), "direction {direction} out of range");
    let others: Vec<usize> = (0..spec.d()).filter(|&n| n != direction).map(|n| spec.dims[n]).collect();
    let count: usize = others.iter().product();
    (0..count)
        .map(|mut k| {
            let mut transverse = vec![0; others.len()];
            for j in (0..others.len()).rev() {
                transverse[j] = k % others[j];
                k /= others[j];
            }
            LineId { direction, transverse }
        })
        .collect()
}

/// Per-line qubit mean of a noise field along `direction`.
pub fn line_means(spec: &NetworkSpec, field: &NoiseField, direction: usize) -> Vec<f64> {
    enumerate_lines(spec, direction)
        .iter()
        .map(|line| {
            let qs = line.qubits(&spec.dims);
            qs.iter().map(|&q| field.rate(spec.d(), q, direction)).sum::<f64>() / qs.len() as f64
        })
        .collect()
}

/// Draws one Gaussian perturbation per (qubit, direction).
///
/// Each draw uses its own ChaCha stream keyed by `q * d + n`, so the field does
/// not depend on evaluation order. Draws giving a non-positive rate are
/// rejected and redrawn from the same stream.
pub fn sample_noise(spec: &NetworkSpec, epsilon_max: f64, seed: u64) -> Result<NoiseField> {
    if !(epsilon_max.is_finite() && epsilon_max >= 0.0) {
        return Err(Error::InvalidSpec("epsilon_max must be finite and >= 0".into()));
    }
    let d = spec.d();
    let values = (0..spec.num_qubits() * d)
        .map(|key| {
            let gamma = spec.gammas[key % d];
            if epsilon_max == 0.0 {
                return gamma;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(key as u64);
            loop {
                let x: f64 = rng.sample(StandardNormal);
                let rate = gamma * (1.0 + epsilon_max * x);
                if rate > 0.0 {
                    break rate;
                }
            }
        })
        .collect();
    Ok(NoiseField { values, epsilon_max, rng_seed: seed })
}
