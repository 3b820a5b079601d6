//! Noise channels mapping the ideal post-gate state to the actually measured
//! one, per setting pair.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::chsh::{AliceSetting, BobSetting, SettingPair};
use crate::error::{Error, Result};
use crate::linalg::{kron, partial_trace_a, partial_trace_b, Operator};
use crate::scalar::Scalar;
use crate::state::DensityMatrix;

/// Cumulative error model producing the measured state from the ideal one.
///
/// `LocalDepolarizing` acts as a product channel whose factors may depend on
/// the local setting only, so it can never move a marginal across the other
/// side's setting choice. `ZzCoupling` conjugates by a diagonal phase after
/// the gates, which leaves every Z-product expectation untouched entirely.
/// Both are therefore invisible to the marginal-difference diagnostics while
/// still displacing the state; `MeasurementCrosstalk` is the model that
/// actually couples one side's readout to the other side's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrosstalkModel<T> {
    /// Identity: the measured state equals the ideal one.
    None,
    /// Each side mixed toward I/2 with its own probability, indexed by that
    /// side's own setting ([a, a'] and [b, b']).
    LocalDepolarizing { p_alice: [T; 2], p_bob: [T; 2] },
    /// Conjugation by exp(-i chi/2 Z kron Z), one angle per setting pair in
    /// `SettingPair::ALL` order.
    ZzCoupling { chi: [T; 4] },
    /// Classical readout flips applied to the joint Born distribution:
    /// side A's recorded outcome flips with probability `p_flip_a` when side
    /// B's projected outcome is "+", and B's flips with `p_flip_b` when A's
    /// projected outcome is "+" (both conditions refer to the pre-flip
    /// projection).
    MeasurementCrosstalk { p_flip_a: T, p_flip_b: T },
}

impl<T: Scalar> CrosstalkModel<T> {
    pub fn none() -> Self {
        CrosstalkModel::None
    }

    /// Same depolarizing probability for every setting on each side.
    pub fn local_depolarizing(p_alice: T, p_bob: T) -> Self {
        CrosstalkModel::LocalDepolarizing {
            p_alice: [p_alice; 2],
            p_bob: [p_bob; 2],
        }
    }

    /// Depolarizing probabilities depending on each side's own setting.
    pub fn local_depolarizing_per_setting(p_alice: [T; 2], p_bob: [T; 2]) -> Self {
        CrosstalkModel::LocalDepolarizing { p_alice, p_bob }
    }

    /// One coupling angle for all setting pairs.
    pub fn zz_coupling(chi: T) -> Self {
        CrosstalkModel::ZzCoupling { chi: [chi; 4] }
    }

    /// Per-setting-pair coupling angles (for bias studies).
    pub fn zz_coupling_per_setting(chi: [T; 4]) -> Self {
        CrosstalkModel::ZzCoupling { chi }
    }

    pub fn measurement_crosstalk(p_flip_a: T, p_flip_b: T) -> Self {
        CrosstalkModel::MeasurementCrosstalk { p_flip_a, p_flip_b }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, CrosstalkModel::None)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CrosstalkModel::None => "none",
            CrosstalkModel::LocalDepolarizing { .. } => "local_depolarizing",
            CrosstalkModel::ZzCoupling { .. } => "zz_coupling",
            CrosstalkModel::MeasurementCrosstalk { .. } => "measurement_crosstalk",
        }
    }

    /// Parameter sanity: probabilities in [0, 1], angles finite.
    pub fn validate(&self) -> Result<()> {
        let check_prob = |name: &str, p: T| -> Result<()> {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {p} is not a probability in [0, 1]"
                )));
            }
            Ok(())
        };
        match self {
            CrosstalkModel::None => Ok(()),
            CrosstalkModel::LocalDepolarizing { p_alice, p_bob } => {
                for (i, &p) in p_alice.iter().enumerate() {
                    check_prob(&format!("p_alice[{i}]"), p)?;
                }
                for (i, &p) in p_bob.iter().enumerate() {
                    check_prob(&format!("p_bob[{i}]"), p)?;
                }
                Ok(())
            }
            CrosstalkModel::ZzCoupling { chi } => {
                if chi.iter().all(|c| c.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(
                        "zz coupling angle must be finite".into(),
                    ))
                }
            }
            CrosstalkModel::MeasurementCrosstalk { p_flip_a, p_flip_b } => {
                check_prob("p_flip_a", *p_flip_a)?;
                check_prob("p_flip_b", *p_flip_b)
            }
        }
    }
}

/// Applies the channel for one setting pair; the output is revalidated and an
/// invalid result surfaces as `Error::InvalidDensity` with the full report.
pub fn apply_channel<T: Scalar>(
    rho0: &DensityMatrix<T>,
    model: &CrosstalkModel<T>,
    pair: SettingPair,
) -> Result<DensityMatrix<T>> {
    match model {
        CrosstalkModel::None => Ok(rho0.clone()),
        CrosstalkModel::LocalDepolarizing { p_alice, p_bob } => {
            let pa = p_alice[alice_index(pair.alice)];
            let pb = p_bob[bob_index(pair.bob)];
            let after_a = depolarize_side_a(rho0.as_operator(), pa)?;
            let after_b = depolarize_side_b(&after_a, pb)?;
            DensityMatrix::new(after_b)
        }
        CrosstalkModel::ZzCoupling { chi } => {
            let angle = chi[pair.index()];
            DensityMatrix::new(zz_conjugate(rho0.as_operator(), angle))
        }
        CrosstalkModel::MeasurementCrosstalk { p_flip_a, p_flip_b } => {
            DensityMatrix::new(readout_flip(rho0.as_operator(), *p_flip_a, *p_flip_b))
        }
    }
}

fn alice_index(x: AliceSetting) -> usize {
    match x {
        AliceSetting::A => 0,
        AliceSetting::APrime => 1,
    }
}

fn bob_index(y: BobSetting) -> usize {
    match y {
        BobSetting::B => 0,
        BobSetting::BPrime => 1,
    }
}

/// (1-p) rho + p (I/2 kron Tr_A rho).
fn depolarize_side_a<T: Scalar>(rho: &Operator<T>, p: T) -> Result<Operator<T>> {
    let keep = rho.scale(T::one() - p);
    let reduced = partial_trace_a(rho)?;
    let mixed = kron(&Operator::identity(2).scale(T::real(0.5)), &reduced)?.scale(p);
    Ok(&keep + &mixed)
}

/// (1-p) rho + p (Tr_B rho kron I/2).
fn depolarize_side_b<T: Scalar>(rho: &Operator<T>, p: T) -> Result<Operator<T>> {
    let keep = rho.scale(T::one() - p);
    let reduced = partial_trace_b(rho)?;
    let mixed = kron(&reduced, &Operator::identity(2).scale(T::real(0.5)))?.scale(p);
    Ok(&keep + &mixed)
}

/// V rho V' with V = exp(-i chi/2 Z kron Z) = diag(e^{-i chi/2}, e^{+i chi/2},
/// e^{+i chi/2}, e^{-i chi/2}).
fn zz_conjugate<T: Scalar>(rho: &Operator<T>, chi: T) -> Operator<T> {
    let half = chi * T::real(0.5);
    let minus = Complex::new(half.cos(), -half.sin());
    let plus = Complex::new(half.cos(), half.sin());
    let d = [minus, plus, plus, minus];
    let mut out = Operator::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            out.set(i, j, d[i] * rho.get(i, j) * d[j].conj());
        }
    }
    out
}

/// Measure-and-reprepare realization of conditional readout flips.
///
/// The Born distribution over (00, 01, 10, 11) is pushed through the classical
/// flip map described on `MeasurementCrosstalk` and reprepared as a diagonal
/// state (the measurement has already happened, coherences do not survive it).
fn readout_flip<T: Scalar>(rho: &Operator<T>, p_flip_a: T, p_flip_b: T) -> Operator<T> {
    // Outcome index 2a + b with bit 0 meaning "+" on that side.
    let p: [T; 4] = core::array::from_fn(|i| rho.get(i, i).re.max(T::zero()));
    let mut q = [T::zero(); 4];
    for a in 0..2usize {
        for b in 0..2usize {
            let mass = p[2 * a + b];
            let fa = if b == 0 { p_flip_a } else { T::zero() };
            let fb = if a == 0 { p_flip_b } else { T::zero() };
            for a2 in 0..2usize {
                let wa = if a2 == a { T::one() - fa } else { fa };
                for b2 in 0..2usize {
                    let wb = if b2 == b { T::one() - fb } else { fb };
                    q[2 * a2 + b2] += mass * wa * wb;
                }
            }
        }
    }
    Operator::diagonal(&q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::eta;
    use crate::linalg::hermitian_eigenvalues;
    use crate::state::{expectation, prepare_ideal_state, rotation_gate};

    type C = Complex<f64>;

    struct TestRng(u64);
    impl TestRng {
        fn next(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
        fn pure_density(&mut self) -> DensityMatrix<f64> {
            let v: Vec<C> = (0..4)
                .map(|_| Complex::new(self.next() - 0.5, self.next() - 0.5))
                .collect();
            DensityMatrix::from_pure(&[v[0], v[1], v[2], v[3]]).unwrap()
        }
    }

    fn ab() -> SettingPair {
        SettingPair::ALL[0]
    }

    #[test]
    fn none_channel_is_identity() {
        let rho = DensityMatrix::<f64>::singlet();
        let out = apply_channel(&rho, &CrosstalkModel::none(), ab()).unwrap();
        assert_eq!(out.as_operator(), rho.as_operator());
        assert!(eta(&out, &rho) < 1e-15);
    }

    #[test]
    fn zz_with_zero_angle_is_identity() {
        let rho = DensityMatrix::<f64>::singlet();
        let out = apply_channel(&rho, &CrosstalkModel::zz_coupling(0.0), ab()).unwrap();
        assert!((out.as_operator() - rho.as_operator()).max_abs_entry() < 1e-15);
    }

    #[test]
    fn full_depolarizing_reaches_maximally_mixed() {
        let mut rng = TestRng(3);
        let model = CrosstalkModel::local_depolarizing(1.0, 1.0);
        for _ in 0..10 {
            let rho = rng.pure_density();
            let out = apply_channel(&rho, &model, ab()).unwrap();
            // Kraus-sum oracle: depolarizing to I/2 on each side is the Pauli
            // twirl {sqrt(1-3p/4) I, sqrt(p/4) X, sqrt(p/4) Y, sqrt(p/4) Z}
            // with p = 1; evaluate it directly and compare.
            let kraus: Vec<Operator<f64>> = vec![
                Operator::identity(2).scale(0.5),
                Operator::pauli_x().scale(0.5),
                Operator::pauli_y().scale(0.5),
                Operator::pauli_z().scale(0.5),
            ];
            let mut oracle = Operator::zeros(4);
            for ka in &kraus {
                for kb in &kraus {
                    let k = kron(ka, kb).unwrap();
                    let term = &(&k * rho.as_operator()) * &k.dagger();
                    oracle = &oracle + &term;
                }
            }
            assert!((out.as_operator() - &oracle).max_abs_entry() < 1e-12);
            let mm = DensityMatrix::maximally_mixed();
            assert!((out.as_operator() - mm.as_operator()).max_abs_entry() < 1e-12);
        }
    }

    #[test]
    fn partial_depolarizing_matches_kraus_oracle() {
        let mut rng = TestRng(17);
        for _ in 0..10 {
            let rho = rng.pure_density();
            let (pa, pb) = (0.3 * rng.next(), 0.7 * rng.next());
            let model = CrosstalkModel::local_depolarizing(pa, pb);
            let out = apply_channel(&rho, &model, ab()).unwrap();

            let side = |p: f64| -> Vec<Operator<f64>> {
                vec![
                    Operator::identity(2).scale((1.0 - 0.75 * p).sqrt()),
                    Operator::pauli_x().scale((0.25 * p).sqrt()),
                    Operator::pauli_y().scale((0.25 * p).sqrt()),
                    Operator::pauli_z().scale((0.25 * p).sqrt()),
                ]
            };
            let mut oracle = Operator::zeros(4);
            for ka in &side(pa) {
                for kb in &side(pb) {
                    let k = kron(ka, kb).unwrap();
                    oracle = &oracle + &(&(&k * rho.as_operator()) * &k.dagger());
                }
            }
            assert!((out.as_operator() - &oracle).max_abs_entry() < 1e-12);
        }
    }

    #[test]
    fn channels_preserve_trace_and_positivity() {
        let mut rng = TestRng(29);
        for i in 0..60 {
            let rho = rng.pure_density();
            let model: CrosstalkModel<f64> = match i % 3 {
                0 => CrosstalkModel::local_depolarizing_per_setting(
                    [rng.next(), rng.next()],
                    [rng.next(), rng.next()],
                ),
                1 => CrosstalkModel::zz_coupling_per_setting([
                    rng.next() - 0.5,
                    rng.next() - 0.5,
                    rng.next() - 0.5,
                    rng.next() - 0.5,
                ]),
                _ => CrosstalkModel::measurement_crosstalk(rng.next(), rng.next()),
            };
            for pair in SettingPair::ALL {
                let out = apply_channel(&rho, &model, pair).unwrap();
                let tr = out.as_operator().trace();
                assert!((tr.re - 1.0).abs() < 1e-10 && tr.im.abs() < 1e-10);
                let min = hermitian_eigenvalues(out.as_operator()).unwrap()[0];
                assert!(min >= -1e-10);
            }
        }
    }

    #[test]
    fn readout_flip_matches_classical_transition_oracle() {
        let mut rng = TestRng(31);
        for _ in 0..20 {
            let rho = rng.pure_density();
            let (pa, pb) = (rng.next(), rng.next());
            let model = CrosstalkModel::measurement_crosstalk(pa, pb);
            let out = apply_channel(&rho, &model, ab()).unwrap();

            // Oracle: explicit 4x4 stochastic transition matrix applied to the
            // Born vector; independent flips conditioned on projected outcomes.
            let born: Vec<f64> = (0..4).map(|i| rho.as_operator().get(i, i).re).collect();
            let mut t = [[0.0f64; 4]; 4];
            for a in 0..2 {
                for b in 0..2 {
                    let src = 2 * a + b;
                    let fa = if b == 0 { pa } else { 0.0 };
                    let fb = if a == 0 { pb } else { 0.0 };
                    for a2 in 0..2 {
                        for b2 in 0..2 {
                            let wa = if a2 == a { 1.0 - fa } else { fa };
                            let wb = if b2 == b { 1.0 - fb } else { fb };
                            t[2 * a2 + b2][src] = wa * wb;
                        }
                    }
                }
            }
            for i in 0..4 {
                let want: f64 = (0..4).map(|j| t[i][j] * born[j]).sum();
                assert!((out.as_operator().get(i, i).re - want).abs() < 1e-12);
                for j in 0..4 {
                    if i != j {
                        assert_eq!(out.as_operator().get(i, j).norm(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn zz_coupling_leaves_z_expectations_unchanged() {
        // Diagonal conjugation commutes with every Z-product observable.
        let rho = DensityMatrix::<f64>::singlet();
        let quad = crate::state::SettingsQuad::canonical_chsh();
        let ux = rotation_gate(quad.a_prime);
        let uy = rotation_gate(quad.b);
        let rho0 = prepare_ideal_state(&rho, &ux, &uy).unwrap();
        let rho1 = apply_channel(&rho0, &CrosstalkModel::zz_coupling(0.37), ab()).unwrap();

        let z = Operator::pauli_z();
        let eye = Operator::identity(2);
        for obs in [
            kron(&z, &z).unwrap(),
            kron(&z, &eye).unwrap(),
            kron(&eye, &z).unwrap(),
        ] {
            let before = expectation(&rho0, &obs).unwrap();
            let after = expectation(&rho1, &obs).unwrap();
            assert!((before - after).abs() < 1e-14);
        }
        assert!(eta(&rho1, &rho0) > 0.01);
    }

    #[test]
    fn validate_rejects_bad_probabilities() {
        let m = CrosstalkModel::measurement_crosstalk(1.5f64, 0.0);
        assert!(m.validate().is_err());
        let m = CrosstalkModel::local_depolarizing(-0.1f64, 0.0);
        assert!(m.validate().is_err());
    }

    #[test]
    fn angles_oracle_for_measurement_crosstalk_marginal_shift() {
        // With B -> A flips only, the flipped A marginal obeys
        // mA' = (1 - p) mA - p E (derivable from the transition matrix).
        let mut rng = TestRng(47);
        let z = Operator::pauli_z();
        let eye = Operator::identity(2);
        let za = kron(&z, &eye).unwrap();
        let zz = kron(&z, &z).unwrap();
        for _ in 0..10 {
            let rho = rng.pure_density();
            let p = 0.2 * rng.next();
            let out =
                apply_channel(&rho, &CrosstalkModel::measurement_crosstalk(p, 0.0), ab()).unwrap();
            let ma = expectation(&rho, &za).unwrap();
            let e = expectation(&rho, &zz).unwrap();
            let ma_flipped = expectation(&out, &za).unwrap();
            assert!((ma_flipped - ((1.0 - p) * ma - p * e)).abs() < 1e-12);
        }
    }
}
