//! Crosstalk parameters extracted from measured marginals, their relation to
//! the trace-norm error terms, and the rough total-error estimate.

use serde::{Deserialize, Serialize};

use crate::chsh::{CorrelatorTable, EtaTable, SettingPair};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The four marginal-shift parameters and their sum.
///
/// delta_x measures how much side A's marginal moves when side B switches
/// settings (and vice versa for delta_y); any nonzero value is a crosstalk
/// signature, since ideal product gates cannot move the remote marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable<T> {
    pub delta_a: T,
    pub delta_a_prime: T,
    pub delta_b: T,
    pub delta_b_prime: T,
    pub total: T,
}

impl<T: Scalar> DeltaTable<T> {
    pub fn new(delta_a: T, delta_a_prime: T, delta_b: T, delta_b_prime: T) -> Result<Self> {
        for (name, v) in [
            ("delta_a", delta_a),
            ("delta_a_prime", delta_a_prime),
            ("delta_b", delta_b),
            ("delta_b_prime", delta_b_prime),
        ] {
            if !v.is_finite() || v < T::zero() || v > T::real(2.0) + T::IDENTITY_TOL {
                return Err(Error::ValueOutOfRange {
                    name: name.into(),
                    value: v.to_f64_lossy(),
                });
            }
        }
        Ok(DeltaTable {
            delta_a,
            delta_a_prime,
            delta_b,
            delta_b_prime,
            total: delta_a + delta_a_prime + delta_b + delta_b_prime,
        })
    }

    /// Values in the order (delta_a, delta_a', delta_b, delta_b').
    pub fn values(&self) -> [T; 4] {
        [
            self.delta_a,
            self.delta_a_prime,
            self.delta_b,
            self.delta_b_prime,
        ]
    }
}

/// delta_x = |mA_xb - mA_xb'| for x in {a, a'}, delta_y = |mB_ay - mB_a'y|
/// for y in {b, b'}; absolute differences of the measured marginals.
pub fn crosstalk_parameters<T: Scalar>(table: &CorrelatorTable<T>) -> DeltaTable<T> {
    let [ab, ab_p, ap_b, ap_bp] = SettingPair::ALL;
    let delta_a = (table.moments(ab).marginal_a - table.moments(ab_p).marginal_a).abs();
    let delta_a_prime = (table.moments(ap_b).marginal_a - table.moments(ap_bp).marginal_a).abs();
    let delta_b = (table.moments(ab).marginal_b - table.moments(ap_b).marginal_b).abs();
    let delta_b_prime = (table.moments(ab_p).marginal_b - table.moments(ap_bp).marginal_b).abs();
    DeltaTable::new(delta_a, delta_a_prime, delta_b, delta_b_prime)
        .expect("absolute differences of values in [-1, 1] lie in [0, 2]")
}

/// Signed slack of each delta against its trace-norm budget:
/// delta_x - (eta_xb + eta_xb') and delta_y - (eta_ay + eta_a'y).
///
/// When both tables come from the same experiment every slack is
/// non-positive up to roundoff; a positive slack flags inconsistent inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEtaSlack<T> {
    pub slack_a: T,
    pub slack_a_prime: T,
    pub slack_b: T,
    pub slack_b_prime: T,
}

impl<T: Scalar> DeltaEtaSlack<T> {
    pub fn values(&self) -> [T; 4] {
        [
            self.slack_a,
            self.slack_a_prime,
            self.slack_b,
            self.slack_b_prime,
        ]
    }

    pub fn max_slack(&self) -> T {
        self.values().into_iter().fold(T::neg_infinity(), T::max)
    }

    pub fn all_within(&self, tol: T) -> bool {
        self.values().into_iter().all(|s| s <= tol)
    }

    /// Names of parameters whose slack exceeds `tol`.
    pub fn violations(&self, tol: T) -> Vec<&'static str> {
        let names = ["delta_a", "delta_a_prime", "delta_b", "delta_b_prime"];
        self.values()
            .into_iter()
            .zip(names)
            .filter(|(s, _)| *s > tol)
            .map(|(_, n)| n)
            .collect()
    }
}

pub fn delta_eta_bounds_check<T: Scalar>(
    deltas: &DeltaTable<T>,
    etas: &EtaTable<T>,
) -> DeltaEtaSlack<T> {
    DeltaEtaSlack {
        slack_a: deltas.delta_a - (etas.eta_ab + etas.eta_ab_prime),
        slack_a_prime: deltas.delta_a_prime - (etas.eta_a_prime_b + etas.eta_a_prime_b_prime),
        slack_b: deltas.delta_b - (etas.eta_ab + etas.eta_a_prime_b),
        slack_b_prime: deltas.delta_b_prime - (etas.eta_ab_prime + etas.eta_a_prime_b_prime),
    }
}

/// The heuristic total-error estimate: the sum of the four crosstalk
/// parameters, taken as a stand-in for the (unobservable) eta total.
///
/// This is an estimate, not a bound; individual error terms may cancel in the
/// marginals, so it can undershoot badly (see the bias study).
pub fn rough_total_estimate<T: Scalar>(deltas: &DeltaTable<T>) -> T {
    deltas.total
}

/// |(delta_a + delta_a') - (delta_b + delta_b')| / delta_total, in [0, 1];
/// zero for an empty table (totals at roundoff level, below
/// `Scalar::NULL_TOL`, count as empty rather than producing a noise ratio).
/// Values near 1 mean the crosstalk signature sits entirely on one side, the
/// fingerprint of setting-asymmetric noise (or of an optimizer that pushed
/// one side's parameters down).
pub fn asymmetry_index<T: Scalar>(deltas: &DeltaTable<T>) -> T {
    if deltas.total <= T::NULL_TOL {
        return T::zero();
    }
    ((deltas.delta_a + deltas.delta_a_prime) - (deltas.delta_b + deltas.delta_b_prime)).abs()
        / deltas.total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::{correlators_from_state, SettingMoments};
    use crate::state::{DensityMatrix, MeasurementAngles, SettingsQuad};

    /// Table realizing the reference delta values (0.0127, 0.0176, 0.0000,
    /// 0.0002) through explicitly constructed marginals.
    fn reference_table() -> CorrelatorTable<f64> {
        let e = 0.5183;
        let rows = [
            SettingMoments {
                correlator: e,
                marginal_a: 0.2127,
                marginal_b: 0.2000,
            },
            SettingMoments {
                correlator: -e,
                marginal_a: 0.2000,
                marginal_b: 0.2002,
            },
            SettingMoments {
                correlator: e,
                marginal_a: 0.2176,
                marginal_b: 0.2000,
            },
            SettingMoments {
                correlator: e,
                marginal_a: 0.2000,
                marginal_b: 0.2000,
            },
        ];
        CorrelatorTable::new(rows).unwrap()
    }

    #[test]
    fn reference_marginals_give_reference_deltas() {
        let d = crosstalk_parameters(&reference_table());
        assert!((d.delta_a - 0.0127).abs() < 1e-12);
        assert!((d.delta_a_prime - 0.0176).abs() < 1e-12);
        assert!(d.delta_b.abs() < 1e-12);
        assert!((d.delta_b_prime - 0.0002).abs() < 1e-12);
        assert!((d.total - 0.0305).abs() < 1e-12);
        assert!((rough_total_estimate(&d) - 0.0305).abs() < 1e-12);
    }

    #[test]
    fn single_marginal_shift_gives_single_delta() {
        let base = SettingMoments::<f64> {
            correlator: 0.3,
            marginal_a: 0.5,
            marginal_b: 0.1,
        };
        let shifted = SettingMoments {
            correlator: 0.3,
            marginal_a: 0.5127,
            marginal_b: 0.1,
        };
        // mA differs between (a,b) and (a,b') only.
        let table = CorrelatorTable::new([shifted, base, base, base]).unwrap();
        let d = crosstalk_parameters(&table);
        assert!((d.delta_a - 0.0127).abs() < 1e-12);
        assert!(d.delta_a_prime.abs() < 1e-15);
    }

    #[test]
    fn channel_free_tables_have_zero_deltas() {
        let rho = DensityMatrix::<f64>::singlet();
        let quad = SettingsQuad::new(
            MeasurementAngles::new(0.4, 0.9),
            MeasurementAngles::new(2.0, 0.1),
            MeasurementAngles::new(3.7, 4.4),
            MeasurementAngles::new(5.9, 2.6),
        );
        let table = correlators_from_state(&rho, &quad, None).unwrap();
        let d = crosstalk_parameters(&table);
        assert!(d.total <= 1e-12);
    }

    #[test]
    fn rough_estimate_equals_sum_exactly() {
        let d = DeltaTable::new(0.01f64, 0.01, 0.01, 0.01).unwrap();
        assert_eq!(rough_total_estimate(&d), 0.04);
        let zero = DeltaTable::new(0.0f64, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(rough_total_estimate(&zero), 0.0);
        // Bitwise the same sum as the table's own total.
        let d = crosstalk_parameters(&reference_table());
        assert_eq!(rough_total_estimate(&d), d.values().into_iter().sum());
    }

    #[test]
    fn slack_report_flags_inconsistent_tables() {
        let etas = EtaTable::new([0.01f64, 0.01, 0.01, 0.01]).unwrap();
        let zero = DeltaTable::new(0.0f64, 0.0, 0.0, 0.0).unwrap();
        let slack = delta_eta_bounds_check(&zero, &etas);
        assert!(slack.all_within(0.0));

        // Hand-built inconsistency: delta_a larger than its eta budget.
        let bad = DeltaTable::new(0.5f64, 0.0, 0.0, 0.0).unwrap();
        let slack = delta_eta_bounds_check(&bad, &etas);
        assert!(!slack.all_within(1e-9));
        assert_eq!(slack.violations(1e-9), vec!["delta_a"]);
        assert!((slack.max_slack() - 0.48).abs() < 1e-12);
    }

    #[test]
    fn delta_invariant_under_remote_relabeling() {
        // Flipping side B's +- labels negates E and mB; every delta is
        // unchanged.
        let table = reference_table();
        let flipped_rows: Vec<SettingMoments<f64>> = SettingPair::ALL
            .iter()
            .map(|&p| {
                let m = table.moments(p);
                SettingMoments {
                    correlator: -m.correlator,
                    marginal_a: m.marginal_a,
                    marginal_b: -m.marginal_b,
                }
            })
            .collect();
        let flipped = CorrelatorTable::new([
            flipped_rows[0],
            flipped_rows[1],
            flipped_rows[2],
            flipped_rows[3],
        ])
        .unwrap();
        let d0 = crosstalk_parameters(&table);
        let d1 = crosstalk_parameters(&flipped);
        assert_eq!(d0.values(), d1.values());
    }

    #[test]
    fn asymmetry_index_cases() {
        // Reference values: |0.0303 - 0.0002| / 0.0305.
        let d = crosstalk_parameters(&reference_table());
        let idx = asymmetry_index(&d);
        assert!((idx - 0.987).abs() < 1e-3, "index = {idx}");

        let sym = DeltaTable::new(0.01f64, 0.01, 0.01, 0.01).unwrap();
        assert_eq!(asymmetry_index(&sym), 0.0);

        let one_sided = DeltaTable::new(0.02f64, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(asymmetry_index(&one_sided), 1.0);

        let empty = DeltaTable::new(0.0f64, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(asymmetry_index(&empty), 0.0);
    }

    #[test]
    fn delta_table_validates_range() {
        assert!(DeltaTable::new(-0.1f64, 0.0, 0.0, 0.0).is_err());
        assert!(DeltaTable::new(0.0f64, 2.5, 0.0, 0.0).is_err());
        assert!(DeltaTable::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }
}
