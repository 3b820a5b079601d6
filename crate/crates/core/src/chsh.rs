//! Bell-signal computation, trace-norm error terms and the corrected
//! classical bound.

use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, CrosstalkModel};
use crate::error::{Error, Result};
use crate::linalg::{kron, trace_norm, Operator};
use crate::scalar::Scalar;
use crate::state::{expectation, prepare_ideal_state, rotation_gate, DensityMatrix, SettingsQuad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AliceSetting {
    A,
    APrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobSetting {
    B,
    BPrime,
}

impl AliceSetting {
    pub fn label(self) -> &'static str {
        match self {
            AliceSetting::A => "a",
            AliceSetting::APrime => "a_prime",
        }
    }
}

impl BobSetting {
    pub fn label(self) -> &'static str {
        match self {
            BobSetting::B => "b",
            BobSetting::BPrime => "b_prime",
        }
    }
}

/// One of the four joint measurement settings (x, y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SettingPair {
    pub alice: AliceSetting,
    pub bob: BobSetting,
}

impl SettingPair {
    /// Canonical enumeration order: (a,b), (a,b'), (a',b), (a',b').
    pub const ALL: [SettingPair; 4] = [
        SettingPair {
            alice: AliceSetting::A,
            bob: BobSetting::B,
        },
        SettingPair {
            alice: AliceSetting::A,
            bob: BobSetting::BPrime,
        },
        SettingPair {
            alice: AliceSetting::APrime,
            bob: BobSetting::B,
        },
        SettingPair {
            alice: AliceSetting::APrime,
            bob: BobSetting::BPrime,
        },
    ];

    pub fn index(self) -> usize {
        let x = match self.alice {
            AliceSetting::A => 0,
            AliceSetting::APrime => 1,
        };
        let y = match self.bob {
            BobSetting::B => 0,
            BobSetting::BPrime => 1,
        };
        2 * x + y
    }

    pub fn labels(self) -> (&'static str, &'static str) {
        (self.alice.label(), self.bob.label())
    }

    pub fn from_labels(x: &str, y: &str) -> Option<SettingPair> {
        let alice = match x {
            "a" => AliceSetting::A,
            "a_prime" => AliceSetting::APrime,
            _ => return None,
        };
        let bob = match y {
            "b" => BobSetting::B,
            "b_prime" => BobSetting::BPrime,
            _ => return None,
        };
        Some(SettingPair { alice, bob })
    }
}

/// Correlator and the two marginals for one setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingMoments<T> {
    /// <Z_A Z_B>
    pub correlator: T,
    /// <Z_A>
    pub marginal_a: T,
    /// <Z_B>
    pub marginal_b: T,
}

/// Correlators E_xy and marginals for all four setting pairs, with optional
/// per-entry standard errors and shot counts when estimated from data.
///
/// Construction validates the value range and the consistency constraints
/// 1 + E >= |mA + mB| and 1 - E >= |mA - mB| required of any genuine joint
/// +-1 distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTable<T> {
    moments: [SettingMoments<T>; 4],
    stderrs: Option<[SettingMoments<T>; 4]>,
    shots: Option<[u64; 4]>,
}

impl<T: Scalar> CorrelatorTable<T> {
    /// Exact-values table (no standard errors), validated at the default
    /// consistency tolerance.
    pub fn new(moments: [SettingMoments<T>; 4]) -> Result<Self> {
        Self::with_stderrs_and_tolerance(moments, None, None, T::IDENTITY_TOL)
    }

    pub fn with_stderrs(
        moments: [SettingMoments<T>; 4],
        stderrs: [SettingMoments<T>; 4],
        shots: [u64; 4],
    ) -> Result<Self> {
        Self::with_stderrs_and_tolerance(moments, Some(stderrs), Some(shots), T::IDENTITY_TOL)
    }

    /// Full constructor with an explicit consistency tolerance (CLI override).
    pub fn with_stderrs_and_tolerance(
        moments: [SettingMoments<T>; 4],
        stderrs: Option<[SettingMoments<T>; 4]>,
        shots: Option<[u64; 4]>,
        tolerance: T,
    ) -> Result<Self> {
        for pair in SettingPair::ALL {
            let m = &moments[pair.index()];
            let (x, y) = pair.labels();
            for (name, v) in [
                ("E", m.correlator),
                ("mA", m.marginal_a),
                ("mB", m.marginal_b),
            ] {
                if !v.is_finite() || v.abs() > T::one() + tolerance {
                    return Err(Error::ValueOutOfRange {
                        name: format!("{name}({x},{y})"),
                        value: v.to_f64_lossy(),
                    });
                }
            }
            let sum = (m.marginal_a + m.marginal_b).abs();
            let diff = (m.marginal_a - m.marginal_b).abs();
            if T::one() + m.correlator < sum - tolerance {
                return Err(Error::InconsistentTable {
                    x,
                    y,
                    detail: format!(
                        "1 + E = {} < |mA + mB| = {}",
                        (T::one() + m.correlator).to_f64_lossy(),
                        sum.to_f64_lossy()
                    ),
                });
            }
            if T::one() - m.correlator < diff - tolerance {
                return Err(Error::InconsistentTable {
                    x,
                    y,
                    detail: format!(
                        "1 - E = {} < |mA - mB| = {}",
                        (T::one() - m.correlator).to_f64_lossy(),
                        diff.to_f64_lossy()
                    ),
                });
            }
            if let Some(se) = &stderrs {
                let s = &se[pair.index()];
                for (name, v) in [
                    ("stderr E", s.correlator),
                    ("stderr mA", s.marginal_a),
                    ("stderr mB", s.marginal_b),
                ] {
                    if !v.is_finite() || v < T::zero() {
                        return Err(Error::ValueOutOfRange {
                            name: format!("{name}({x},{y})"),
                            value: v.to_f64_lossy(),
                        });
                    }
                }
            }
        }
        Ok(CorrelatorTable {
            moments,
            stderrs,
            shots,
        })
    }

    pub fn moments(&self, pair: SettingPair) -> &SettingMoments<T> {
        &self.moments[pair.index()]
    }

    pub fn stderrs(&self, pair: SettingPair) -> Option<&SettingMoments<T>> {
        self.stderrs.as_ref().map(|s| &s[pair.index()])
    }

    pub fn shots(&self, pair: SettingPair) -> Option<u64> {
        self.shots.as_ref().map(|n| n[pair.index()])
    }

    pub fn total_shots(&self) -> Option<u64> {
        self.shots.as_ref().map(|n| n.iter().sum())
    }

    pub fn has_stderrs(&self) -> bool {
        self.stderrs.is_some()
    }
}

/// Builder used by file ingestion, where settings can be missing or repeated.
#[derive(Debug, Default)]
pub struct CorrelatorTableBuilder<T> {
    slots: [Option<SettingMoments<T>>; 4],
    stderr_slots: [Option<SettingMoments<T>>; 4],
    shot_slots: [Option<u64>; 4],
}

impl<T: Scalar> CorrelatorTableBuilder<T> {
    pub fn new() -> Self {
        CorrelatorTableBuilder {
            slots: [None; 4],
            stderr_slots: [None; 4],
            shot_slots: [None; 4],
        }
    }

    pub fn insert(
        &mut self,
        pair: SettingPair,
        moments: SettingMoments<T>,
        stderrs: Option<SettingMoments<T>>,
        shots: Option<u64>,
    ) -> Result<()> {
        let i = pair.index();
        if self.slots[i].is_some() {
            let (x, y) = pair.labels();
            return Err(Error::DuplicateSetting {
                x: x.into(),
                y: y.into(),
            });
        }
        self.slots[i] = Some(moments);
        self.stderr_slots[i] = stderrs;
        self.shot_slots[i] = shots;
        Ok(())
    }

    pub fn build(self) -> Result<CorrelatorTable<T>> {
        self.build_with_tolerance(T::IDENTITY_TOL)
    }

    pub fn build_with_tolerance(self, tolerance: T) -> Result<CorrelatorTable<T>> {
        let mut moments = Vec::with_capacity(4);
        for pair in SettingPair::ALL {
            match self.slots[pair.index()] {
                Some(m) => moments.push(m),
                None => {
                    let (x, y) = pair.labels();
                    return Err(Error::MissingSetting {
                        x: x.into(),
                        y: y.into(),
                    });
                }
            }
        }
        let moments: [SettingMoments<T>; 4] = [moments[0], moments[1], moments[2], moments[3]];
        let stderrs = if self.stderr_slots.iter().all(|s| s.is_some()) {
            Some(core::array::from_fn(|i| self.stderr_slots[i].unwrap()))
        } else {
            None
        };
        let shots = if self.shot_slots.iter().all(|s| s.is_some()) {
            Some(core::array::from_fn(|i| self.shot_slots[i].unwrap()))
        } else {
            None
        };
        CorrelatorTable::with_stderrs_and_tolerance(moments, stderrs, shots, tolerance)
    }
}

/// S = E_ab + E_a'b - E_ab' + E_a'b' (the minus sign sits on the (a, b')
/// term; see `tests::sign_pattern_is_pinned`).
pub fn bell_signal<T: Scalar>(table: &CorrelatorTable<T>) -> T {
    let e = |pair: SettingPair| table.moments(pair).correlator;
    e(SettingPair::ALL[0]) + e(SettingPair::ALL[2]) - e(SettingPair::ALL[1])
        + e(SettingPair::ALL[3])
}

pub fn observable_z_a<T: Scalar>() -> Operator<T> {
    kron(&Operator::pauli_z(), &Operator::identity(2)).expect("2x2 factors")
}

pub fn observable_z_b<T: Scalar>() -> Operator<T> {
    kron(&Operator::identity(2), &Operator::pauli_z()).expect("2x2 factors")
}

pub fn observable_z_z<T: Scalar>() -> Operator<T> {
    kron(&Operator::pauli_z(), &Operator::pauli_z()).expect("2x2 factors")
}

/// Ideal and measured post-gate states for one setting pair.
#[derive(Debug, Clone)]
pub struct SettingStates<T> {
    pub pair: SettingPair,
    /// State after the ideal gates, before any noise.
    pub ideal: DensityMatrix<T>,
    /// State actually measured (after the channel).
    pub actual: DensityMatrix<T>,
}

/// Builds (ideal, actual) state pairs for all four settings: gates from the
/// quad, then the channel (identity when `channel` is `None`).
pub fn setting_states<T: Scalar>(
    rho: &DensityMatrix<T>,
    settings: &SettingsQuad<T>,
    channel: Option<&CrosstalkModel<T>>,
) -> Result<[SettingStates<T>; 4]> {
    let gate_a = rotation_gate(settings.a);
    let gate_a_prime = rotation_gate(settings.a_prime);
    let gate_b = rotation_gate(settings.b);
    let gate_b_prime = rotation_gate(settings.b_prime);

    let mut out = Vec::with_capacity(4);
    for pair in SettingPair::ALL {
        let ux = match pair.alice {
            AliceSetting::A => &gate_a,
            AliceSetting::APrime => &gate_a_prime,
        };
        let uy = match pair.bob {
            BobSetting::B => &gate_b,
            BobSetting::BPrime => &gate_b_prime,
        };
        let ideal = prepare_ideal_state(rho, ux, uy)?;
        let actual = match channel {
            Some(model) => apply_channel(&ideal, model, pair)?,
            None => ideal.clone(),
        };
        out.push(SettingStates {
            pair,
            ideal,
            actual,
        });
    }
    Ok([out.remove(0), out.remove(0), out.remove(0), out.remove(0)])
}

/// Exact correlators and marginals of the measured states for all four
/// settings (Z kron Z, Z kron I, I kron Z expectations of the post-channel
/// state).
pub fn correlators_from_state<T: Scalar>(
    rho: &DensityMatrix<T>,
    settings: &SettingsQuad<T>,
    channel: Option<&CrosstalkModel<T>>,
) -> Result<CorrelatorTable<T>> {
    let states = setting_states(rho, settings, channel)?;
    correlators_from_setting_states(&states)
}

/// Same as `correlators_from_state`, reusing already-built state pairs.
pub fn correlators_from_setting_states<T: Scalar>(
    states: &[SettingStates<T>; 4],
) -> Result<CorrelatorTable<T>> {
    let zz = observable_z_z();
    let za = observable_z_a();
    let zb = observable_z_b();
    let mut moments = [SettingMoments {
        correlator: T::zero(),
        marginal_a: T::zero(),
        marginal_b: T::zero(),
    }; 4];
    for s in states {
        moments[s.pair.index()] = SettingMoments {
            correlator: expectation(&s.actual, &zz)?,
            marginal_a: expectation(&s.actual, &za)?,
            marginal_b: expectation(&s.actual, &zb)?,
        };
    }
    CorrelatorTable::new(moments)
}

/// Trace-norm distance between the measured and ideal states for one setting.
/// Symmetric, zero only for identical states, at most 2.
pub fn eta<T: Scalar>(rho1: &DensityMatrix<T>, rho0: &DensityMatrix<T>) -> T {
    trace_norm(&(rho1.as_operator() - rho0.as_operator()))
}

/// The four per-setting trace-norm error terms and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaTable<T> {
    pub eta_ab: T,
    pub eta_ab_prime: T,
    pub eta_a_prime_b: T,
    pub eta_a_prime_b_prime: T,
    pub total: T,
}

impl<T: Scalar> EtaTable<T> {
    /// Entries in `SettingPair::ALL` order; each must lie in [0, 2].
    pub fn new(etas: [T; 4]) -> Result<Self> {
        for (i, &e) in etas.iter().enumerate() {
            if !e.is_finite() || e < T::zero() || e > T::real(2.0) + T::IDENTITY_TOL {
                let (x, y) = SettingPair::ALL[i].labels();
                return Err(Error::ValueOutOfRange {
                    name: format!("eta({x},{y})"),
                    value: e.to_f64_lossy(),
                });
            }
        }
        Ok(EtaTable {
            eta_ab: etas[0],
            eta_ab_prime: etas[1],
            eta_a_prime_b: etas[2],
            eta_a_prime_b_prime: etas[3],
            total: etas.iter().copied().sum(),
        })
    }

    /// Computes every eta from prepared (ideal, actual) state pairs.
    pub fn from_states(states: &[SettingStates<T>; 4]) -> Self {
        let mut etas = [T::zero(); 4];
        for s in states {
            etas[s.pair.index()] = eta(&s.actual, &s.ideal);
        }
        EtaTable::new(etas).expect("trace distances are within [0, 2]")
    }

    pub fn get(&self, pair: SettingPair) -> T {
        match pair.index() {
            0 => self.eta_ab,
            1 => self.eta_ab_prime,
            2 => self.eta_a_prime_b,
            _ => self.eta_a_prime_b_prime,
        }
    }
}

/// Worst-case bound on |S_measured - S_ideal|: the sum of the four eta terms.
pub fn max_error_bound<T: Scalar>(etas: &EtaTable<T>) -> T {
    etas.total
}

/// Classical bound corrected for worst-case state errors: 2 + sum eta.
pub fn corrected_classical_bound<T: Scalar>(etas: &EtaTable<T>) -> T {
    T::real(2.0) + etas.total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NoViolation,
    WithinErrorBudget,
    Violation,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::NoViolation => "NO_VIOLATION",
            Verdict::WithinErrorBudget => "WITHIN_ERROR_BUDGET",
            Verdict::Violation => "VIOLATION",
        };
        f.write_str(s)
    }
}

/// Signal, uncertainty, bound and classification of one analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellOutcome<T> {
    pub s: T,
    pub sigma_s: Option<T>,
    pub bound: T,
    pub verdict: Verdict,
}

impl<T: Scalar> BellOutcome<T> {
    pub fn new(s: T, sigma_s: Option<T>, bound: T) -> Self {
        BellOutcome {
            s,
            sigma_s,
            bound,
            verdict: verdict(s, bound, sigma_s),
        }
    }
}

/// Classifies a signal against a (possibly corrected) classical bound with a
/// 3-sigma significance buffer.
pub fn verdict<T: Scalar>(s: T, bound: T, sigma_s: Option<T>) -> Verdict {
    verdict_with_threshold(s, bound, sigma_s, T::real(3.0))
}

/// `sigma_multiplier` replaces the conventional 3 when a different buffer is
/// wanted. Requires `bound >= 2`.
pub fn verdict_with_threshold<T: Scalar>(
    s: T,
    bound: T,
    sigma_s: Option<T>,
    sigma_multiplier: T,
) -> Verdict {
    assert!(
        bound >= T::real(2.0),
        "classical bounds start at 2 (got {bound})"
    );
    let sigma = sigma_s.unwrap_or_else(T::zero);
    let buffer = sigma_multiplier * sigma;
    if s <= T::real(2.0) {
        Verdict::NoViolation
    } else if s - bound > buffer {
        Verdict::Violation
    } else {
        Verdict::WithinErrorBudget
    }
}
