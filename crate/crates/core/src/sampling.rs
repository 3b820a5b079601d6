//! Born-rule shot sampling with a frozen, documented random stream.
//!
//! Reproducibility contract: the generator is SplitMix64 (identifier
//! "splitmix64-v1", recorded in every output that depends on it), and the four
//! settings draw from independent streams derived by `sub_seed`. Fixed
//! (seed, shots, state) always reproduce the same counts, and changing one
//! setting's angles never perturbs another setting's stream.

use serde::{Deserialize, Serialize};

use crate::channel::CrosstalkModel;
use crate::chsh::{setting_states, SettingPair, SettingStates};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{DensityMatrix, SettingsQuad};

/// Generator identifier recorded in outputs for reproducibility.
pub const RNG_ID: &str = "splitmix64-v1";

/// SplitMix64: 64-bit counter generator with a strong mixing finalizer.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in [0, 1) with 53 random bits, converted to `T`.
    pub fn next_unit<T: Scalar>(&mut self) -> T {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        T::real(u)
    }

    /// Uniform angle in [0, 2 pi).
    pub fn next_angle<T: Scalar>(&mut self) -> T {
        self.next_unit::<T>() * T::TAU()
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian<T: Scalar>(&mut self) -> T {
        let u1: T = self.next_unit::<T>().max(T::real(1e-300));
        let u2: T = self.next_unit();
        (-T::real(2.0) * u1.ln()).sqrt() * (T::TAU() * u2).cos()
    }
}

/// Derives the independent per-setting stream seed. Fixed function, part of
/// the reproducibility contract: sub_seed(s, i) = mix64(s ^ mix64(i + 1)).
pub fn sub_seed(seed: u64, setting_index: usize) -> u64 {
    mix64(seed ^ mix64(setting_index as u64 + 1))
}

/// Shot counts for one setting over the four +-1 outcome pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingCounts {
    /// (+, +) outcomes.
    pub n_pp: u64,
    /// (+, -) outcomes.
    pub n_pm: u64,
    /// (-, +) outcomes.
    pub n_mp: u64,
    /// (-, -) outcomes.
    pub n_mm: u64,
}

impl SettingCounts {
    pub fn new(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64) -> Self {
        SettingCounts {
            n_pp,
            n_pm,
            n_mp,
            n_mm,
        }
    }

    pub fn total(&self) -> u64 {
        self.n_pp + self.n_pm + self.n_mp + self.n_mm
    }

    /// Counts in Born-outcome order (00, 01, 10, 11) = (pp, pm, mp, mm).
    pub fn as_array(&self) -> [u64; 4] {
        [self.n_pp, self.n_pm, self.n_mp, self.n_mm]
    }
}

/// Counts for all four setting pairs, in `SettingPair::ALL` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRecord {
    counts: [SettingCounts; 4],
}

impl CountsRecord {
    pub fn new(counts: [SettingCounts; 4]) -> Self {
        CountsRecord { counts }
    }

    pub fn get(&self, pair: SettingPair) -> &SettingCounts {
        &self.counts[pair.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (SettingPair, &SettingCounts)> {
        SettingPair::ALL
            .iter()
            .map(move |&p| (p, &self.counts[p.index()]))
    }
}

/// Born probabilities over (00, 01, 10, 11): the diagonal of rho in the
/// computational (Z kron Z product) eigenbasis.
///
/// Eigensolver-level negatives in [-STRUCTURAL_TOL, 0) are clamped to zero
/// (then renormalized); anything more negative is an error rather than a
/// masked channel bug.
pub fn born_probabilities<T: Scalar>(rho: &DensityMatrix<T>) -> Result<[T; 4]> {
    let op = rho.as_operator();
    let mut p = [T::zero(); 4];
    for i in 0..4 {
        let v = op.get(i, i).re;
        if v < -T::STRUCTURAL_TOL {
            return Err(Error::NegativeProbability {
                value: v.to_f64_lossy(),
            });
        }
        p[i] = v.max(T::zero());
    }
    let total: T = p.iter().copied().sum();
    if total <= T::zero() {
        return Err(Error::NegativeProbability {
            value: total.to_f64_lossy(),
        });
    }
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}

/// Draws `n` outcomes from the Born distribution of `rho`, deterministically
/// for a fixed `seed`. Counts always sum to `n`.
pub fn sample_shots<T: Scalar>(rho: &DensityMatrix<T>, n: u64, seed: u64) -> Result<SettingCounts> {
    if n == 0 {
        return Err(Error::ZeroShots);
    }
    let p = born_probabilities(rho)?;
    let c1 = p[0];
    let c2 = c1 + p[1];
    let c3 = c2 + p[2];

    let mut rng = SplitMix64::new(seed);
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let u: T = rng.next_unit();
        let idx = if u < c1 {
            0
        } else if u < c2 {
            1
        } else if u < c3 {
            2
        } else {
            3
        };
        counts[idx] += 1;
    }
    Ok(SettingCounts::new(
        counts[0], counts[1], counts[2], counts[3],
    ))
}

/// Everything a simulated run produces: sampled counts plus the exact
/// (ideal, actual) state pairs needed for eta computation.
#[derive(Debug, Clone)]
pub struct ExperimentRun<T> {
    pub counts: CountsRecord,
    pub states: [SettingStates<T>; 4],
    pub seed: u64,
    pub shots_per_setting: u64,
}

/// Prepares, corrupts and samples each of the four settings with its own
/// derived sub-seed.
pub fn run_experiment<T: Scalar>(
    rho: &DensityMatrix<T>,
    settings: &SettingsQuad<T>,
    model: &CrosstalkModel<T>,
    shots_per_setting: u64,
    seed: u64,
) -> Result<ExperimentRun<T>> {
    if shots_per_setting == 0 {
        return Err(Error::ZeroShots);
    }
    model.validate()?;
    let states = setting_states(rho, settings, Some(model))?;
    let mut counts = [SettingCounts::new(0, 0, 0, 0); 4];
    for s in &states {
        let i = s.pair.index();
        counts[i] = sample_shots(&s.actual, shots_per_setting, sub_seed(seed, i))?;
    }
    Ok(ExperimentRun {
        counts: CountsRecord::new(counts),
        states,
        seed,
        shots_per_setting,
    })
}
