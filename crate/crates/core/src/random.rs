//! Seeded random states, settings and channels for Monte-Carlo checks.

use num_complex::Complex;

use crate::channel::CrosstalkModel;
use crate::linalg::Operator;
use crate::sampling::SplitMix64;
use crate::scalar::Scalar;
use crate::state::{DensityMatrix, MeasurementAngles, SettingsQuad};

pub fn random_angles<T: Scalar>(rng: &mut SplitMix64) -> MeasurementAngles<T> {
    MeasurementAngles::new(rng.next_angle(), rng.next_angle())
}

pub fn random_settings<T: Scalar>(rng: &mut SplitMix64) -> SettingsQuad<T> {
    SettingsQuad::new(
        random_angles(rng),
        random_angles(rng),
        random_angles(rng),
        random_angles(rng),
    )
}

fn random_state_vector<T: Scalar>(rng: &mut SplitMix64) -> [Complex<T>; 4] {
    core::array::from_fn(|_| Complex::new(rng.next_gaussian(), rng.next_gaussian()))
}

/// Haar-like random pure two-qubit state (normalized complex Gaussian vector).
pub fn random_pure_density<T: Scalar>(rng: &mut SplitMix64) -> DensityMatrix<T> {
    DensityMatrix::from_pure(&random_state_vector(rng)).expect("Gaussian vector is normalizable")
}

/// Full-rank random mixed state G G' / Tr(G G').
pub fn random_density<T: Scalar>(rng: &mut SplitMix64) -> DensityMatrix<T> {
    let mut g = Operator::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            g.set(i, j, Complex::new(rng.next_gaussian(), rng.next_gaussian()));
        }
    }
    let w = &g * &g.dagger();
    let tr = w.trace().re;
    DensityMatrix::new(w.scale(T::one() / tr)).expect("Wishart form is a valid state")
}

/// Random maximally entangled pure state: local unitaries applied to the
/// singlet. Two composed rotations per side cover all of SU(2) up to phase.
pub fn random_max_entangled<T: Scalar>(rng: &mut SplitMix64) -> DensityMatrix<T> {
    let local = |rng: &mut SplitMix64| {
        let u1 = crate::state::rotation_gate(random_angles::<T>(rng));
        let u2 = crate::state::rotation_gate(random_angles::<T>(rng));
        &u1 * &u2
    };
    let ua = local(rng);
    let ub = local(rng);
    crate::state::prepare_ideal_state(&DensityMatrix::singlet(), &ua, &ub)
        .expect("local unitaries preserve validity")
}

/// Random noise model drawn from the three non-trivial kinds, with moderate
/// parameters.
pub fn random_model<T: Scalar>(rng: &mut SplitMix64) -> CrosstalkModel<T> {
    match rng.next_u64() % 3 {
        0 => CrosstalkModel::local_depolarizing_per_setting(
            [
                rng.next_unit::<T>() * T::real(0.4),
                rng.next_unit::<T>() * T::real(0.4),
            ],
            [
                rng.next_unit::<T>() * T::real(0.4),
                rng.next_unit::<T>() * T::real(0.4),
            ],
        ),
        1 => CrosstalkModel::zz_coupling_per_setting(core::array::from_fn(|_| {
            (rng.next_unit::<T>() - T::real(0.5)) * T::real(1.2)
        })),
        _ => CrosstalkModel::measurement_crosstalk(
            rng.next_unit::<T>() * T::real(0.25),
            rng.next_unit::<T>() * T::real(0.25),
        ),
    }
}
