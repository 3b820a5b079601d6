//! Estimators turning shot counts into correlators, marginals and
//! significance figures.

use serde::{Deserialize, Serialize};

use crate::chsh::{CorrelatorTable, CorrelatorTableBuilder, SettingMoments, SettingPair};
use crate::crosstalk::{crosstalk_parameters, DeltaTable};
use crate::error::{Error, Result};
use crate::sampling::{CountsRecord, SettingCounts};
use crate::scalar::Scalar;

/// Point estimate with its standard error and sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedQuantity<T> {
    pub value: T,
    pub stderr: T,
    pub n: u64,
}

/// E = (n_pp + n_mm - n_pm - n_mp) / N with stderr sqrt((1 - E^2) / N)
/// (the population variance of a +-1 product is exactly 1 - E^2).
pub fn correlator_from_counts<T: Scalar>(counts: &SettingCounts) -> Result<EstimatedQuantity<T>> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::ZeroShots);
    }
    let nt = T::real(n as f64);
    let num = counts.n_pp as f64 + counts.n_mm as f64 - counts.n_pm as f64 - counts.n_mp as f64;
    let e = T::real(num) / nt;
    let var = (T::one() - e * e).max(T::zero());
    Ok(EstimatedQuantity {
        value: e,
        stderr: (var / nt).sqrt(),
        n,
    })
}

/// Marginal estimates (mA, mB) with the same stderr form as the correlator.
pub fn marginals_from_counts<T: Scalar>(
    counts: &SettingCounts,
) -> Result<(EstimatedQuantity<T>, EstimatedQuantity<T>)> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::ZeroShots);
    }
    let nt = T::real(n as f64);
    let ma_num = counts.n_pp as f64 + counts.n_pm as f64 - counts.n_mp as f64 - counts.n_mm as f64;
    let mb_num = counts.n_pp as f64 + counts.n_mp as f64 - counts.n_pm as f64 - counts.n_mm as f64;
    let make = |num: f64| {
        let m = T::real(num) / nt;
        let var = (T::one() - m * m).max(T::zero());
        EstimatedQuantity {
            value: m,
            stderr: (var / nt).sqrt(),
            n,
        }
    };
    Ok((make(ma_num), make(mb_num)))
}

/// Combined Bell-signal standard error assuming the four settings were
/// measured in independent runs: sqrt(sum of squared correlator stderrs).
pub fn bell_stderr<T: Scalar>(stderrs: [T; 4]) -> T {
    stderrs
        .into_iter()
        .map(|s| s * s)
        .fold(T::zero(), |a, b| a + b)
        .sqrt()
}

/// (S - bound) / stderr; errors when the stderr is zero.
pub fn sigmas_above_classical<T: Scalar>(s: &EstimatedQuantity<T>, bound: T) -> Result<T> {
    if s.stderr <= T::zero() {
        return Err(Error::ZeroStderr);
    }
    Ok((s.value - bound) / s.stderr)
}

/// Full estimated correlator table (values, standard errors, shot counts)
/// from a counts record.
pub fn correlator_table_from_counts<T: Scalar>(
    record: &CountsRecord,
) -> Result<CorrelatorTable<T>> {
    correlator_table_from_counts_with_tolerance(record, T::IDENTITY_TOL)
}

pub fn correlator_table_from_counts_with_tolerance<T: Scalar>(
    record: &CountsRecord,
    tolerance: T,
) -> Result<CorrelatorTable<T>> {
    let mut builder = CorrelatorTableBuilder::new();
    for (pair, counts) in record.iter() {
        let e = correlator_from_counts::<T>(counts)?;
        let (ma, mb) = marginals_from_counts::<T>(counts)?;
        builder.insert(
            pair,
            SettingMoments {
                correlator: e.value,
                marginal_a: ma.value,
                marginal_b: mb.value,
            },
            Some(SettingMoments {
                correlator: e.stderr,
                marginal_a: ma.stderr,
                marginal_b: mb.stderr,
            }),
            Some(counts.total()),
        )?;
    }
    builder.build_with_tolerance(tolerance)
}

/// Crosstalk parameters with propagated uncertainties.
///
/// stderr(delta) combines the two marginal stderrs in quadrature, ignoring
/// the absolute-value kink; whenever delta falls below its own stderr the
/// estimate is flagged noise-dominated instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport<T> {
    pub delta: DeltaTable<T>,
    /// Order (delta_a, delta_a', delta_b, delta_b').
    pub stderr: [T; 4],
    pub noise_dominated: [bool; 4],
}

impl<T: Scalar> DeltaReport<T> {
    /// True when no parameter clears the conventional 3-sigma bar (or its
    /// stderr is zero and the value itself is zero): the data shows no
    /// resolvable crosstalk signature.
    pub fn no_signature(&self) -> bool {
        self.delta
            .values()
            .into_iter()
            .zip(self.stderr)
            .all(|(d, se)| {
                if se > T::zero() {
                    d < T::real(3.0) * se
                } else {
                    d == T::zero()
                }
            })
    }
}

/// Extracts crosstalk parameters and propagates marginal standard errors.
/// Tables without stderrs (exact data) get zero stderr and no flags.
pub fn delta_report<T: Scalar>(table: &CorrelatorTable<T>) -> DeltaReport<T> {
    let delta = crosstalk_parameters(table);
    let [ab, ab_p, ap_b, ap_bp] = SettingPair::ALL;
    let stderr = if table.has_stderrs() {
        let se = |p: SettingPair| *table.stderrs(p).expect("checked has_stderrs");
        let quad = |x: T, y: T| (x * x + y * y).sqrt();
        [
            quad(se(ab).marginal_a, se(ab_p).marginal_a),
            quad(se(ap_b).marginal_a, se(ap_bp).marginal_a),
            quad(se(ab).marginal_b, se(ap_b).marginal_b),
            quad(se(ab_p).marginal_b, se(ap_bp).marginal_b),
        ]
    } else {
        [T::zero(); 4]
    };
    let values = delta.values();
    let noise_dominated = core::array::from_fn(|i| stderr[i] > T::zero() && values[i] < stderr[i]);
    DeltaReport {
        delta,
        stderr,
        noise_dominated,
    }
}
