//! Two-qubit states, measurement settings and single-qubit rotation gates.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, kron, Operator};
use crate::scalar::Scalar;

/// Wraps an angle into [0, 2*pi).
fn wrap_angle<T: Scalar>(x: T) -> T {
    let tau = T::TAU();
    let mut w = x - tau * (x / tau).floor();
    if w >= tau {
        w -= tau;
    }
    if w < T::zero() {
        w += tau;
    }
    w
}

/// Polar/azimuthal pair selecting one measurement direction on the Bloch
/// sphere. Angles are normalized into [0, 2*pi) on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementAngles<T> {
    theta: T,
    phi: T,
}

impl<T: Scalar> MeasurementAngles<T> {
    pub fn new(theta: T, phi: T) -> Self {
        MeasurementAngles {
            theta: wrap_angle(theta),
            phi: wrap_angle(phi),
        }
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    /// Measured Bloch direction (sin t cos p, sin t sin p, cos t).
    pub fn bloch_direction(&self) -> [T; 3] {
        [
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        ]
    }
}

/// The four measurement settings a, a', b, b' of a CHSH run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingsQuad<T> {
    pub a: MeasurementAngles<T>,
    pub a_prime: MeasurementAngles<T>,
    pub b: MeasurementAngles<T>,
    pub b_prime: MeasurementAngles<T>,
}

impl<T: Scalar> SettingsQuad<T> {
    pub fn new(
        a: MeasurementAngles<T>,
        a_prime: MeasurementAngles<T>,
        b: MeasurementAngles<T>,
        b_prime: MeasurementAngles<T>,
    ) -> Self {
        SettingsQuad {
            a,
            a_prime,
            b,
            b_prime,
        }
    }

    /// Planar quad theta = (0, pi/2, 5pi/4, 7pi/4), phi = 0: maximal singlet
    /// violation, S = +2*sqrt(2), under the sign convention with the minus on
    /// the (a, b') term.
    pub fn canonical_chsh() -> Self {
        let z = T::zero();
        SettingsQuad {
            a: MeasurementAngles::new(z, z),
            a_prime: MeasurementAngles::new(T::FRAC_PI_2(), z),
            b: MeasurementAngles::new(T::real(5.0) * T::FRAC_PI_4(), z),
            b_prime: MeasurementAngles::new(T::real(7.0) * T::FRAC_PI_4(), z),
        }
    }

    /// Flat view (theta, phi per setting in order a, a', b, b'), for the
    /// optimizer.
    pub fn to_array(&self) -> [T; 8] {
        [
            self.a.theta(),
            self.a.phi(),
            self.a_prime.theta(),
            self.a_prime.phi(),
            self.b.theta(),
            self.b.phi(),
            self.b_prime.theta(),
            self.b_prime.phi(),
        ]
    }

    pub fn from_array(x: &[T; 8]) -> Self {
        SettingsQuad {
            a: MeasurementAngles::new(x[0], x[1]),
            a_prime: MeasurementAngles::new(x[2], x[3]),
            b: MeasurementAngles::new(x[4], x[5]),
            b_prime: MeasurementAngles::new(x[6], x[7]),
        }
    }
}

/// Single-qubit rotation selecting the measurement direction.
///
/// U(theta, phi) = [[cos(t/2), e^{-i phi} sin(t/2)],
///                  [-e^{i phi} sin(t/2), cos(t/2)]]
///
/// satisfies U'ZU = cos(t) Z + sin(t) (cos(p) X + sin(p) Y), i.e. measuring Z
/// after the gate measures the Bloch direction of `angles`.
pub fn rotation_gate<T: Scalar>(angles: MeasurementAngles<T>) -> Operator<T> {
    let half = angles.theta() * T::real(0.5);
    let (ch, sh) = (half.cos(), half.sin());
    let phase = Complex::new(angles.phi().cos(), angles.phi().sin());
    let z = T::zero();
    Operator::dim2([
        [Complex::new(ch, z), phase.conj() * Complex::new(sh, z)],
        [-phase * Complex::new(sh, z), Complex::new(ch, z)],
    ])
}

/// max |U'U - I| over entries.
pub fn unitarity_deviation<T: Scalar>(u: &Operator<T>) -> T {
    let gram = &u.dagger() * u;
    let eye = Operator::identity(u.dim());
    (&gram - &eye).max_abs_entry()
}

/// One named way a candidate matrix fails to be a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    Hermiticity { deviation: f64 },
    Trace { deviation: f64 },
    Positivity { min_eigenvalue: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Hermiticity { deviation } => {
                write!(f, "hermiticity violated (max asymmetry {deviation:.3e})")
            }
            Violation::Trace { deviation } => {
                write!(f, "trace differs from 1 by {deviation:.3e}")
            }
            Violation::Positivity { min_eigenvalue } => {
                write!(f, "negative eigenvalue {min_eigenvalue:.3e}")
            }
        }
    }
}

pub(crate) fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks the three density-matrix invariants on a 4x4 candidate and reports
/// every failure with its measured magnitude. Empty means valid.
pub fn validate_density<T: Scalar>(candidate: &Operator<T>) -> Vec<Violation> {
    assert_eq!(candidate.dim(), 4, "density candidates are 4x4");
    let mut violations = Vec::new();

    let herm = candidate.hermiticity_deviation();
    if herm > T::STRUCTURAL_TOL {
        violations.push(Violation::Hermiticity {
            deviation: herm.to_f64_lossy(),
        });
    }

    let tr = candidate.trace();
    let tr_dev = (tr - Complex::new(T::one(), T::zero())).norm();
    if tr_dev > T::STRUCTURAL_TOL {
        violations.push(Violation::Trace {
            deviation: tr_dev.to_f64_lossy(),
        });
    }

    // Positivity is judged on the hermitized candidate so a tilt failure does
    // not hide an eigenvalue failure.
    let sym = candidate
        .entries()
        .iter()
        .all(|c| c.re.is_finite() && c.im.is_finite());
    if sym {
        let half = Complex::new(T::real(0.5), T::zero());
        let dag = candidate.dagger();
        let mut h = Operator::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                h.set(i, j, (candidate.get(i, j) + dag.get(i, j)) * half);
            }
        }
        if let Ok(vals) = hermitian_eigenvalues(&h) {
            let min = vals[0];
            if min < -T::STRUCTURAL_TOL {
                violations.push(Violation::Positivity {
                    min_eigenvalue: min.to_f64_lossy(),
                });
            }
        }
    } else {
        violations.push(Violation::Hermiticity {
            deviation: f64::INFINITY,
        });
    }

    violations
}

/// Validated two-qubit density matrix: 4x4, Hermitian, unit trace, positive
/// semidefinite (all at `Scalar::STRUCTURAL_TOL`).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    op: Operator<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    pub fn new(op: Operator<T>) -> Result<Self> {
        if op.dim() != 4 {
            return Err(Error::DimensionMismatch {
                context: "density matrix",
                expected: 4,
                got: op.dim(),
            });
        }
        let violations = validate_density(&op);
        if violations.is_empty() {
            Ok(DensityMatrix { op })
        } else {
            Err(Error::InvalidDensity { violations })
        }
    }

    pub fn as_operator(&self) -> &Operator<T> {
        &self.op
    }

    pub fn into_operator(self) -> Operator<T> {
        self.op
    }

    /// |psi><psi| from an unnormalized 4-component state vector.
    pub fn from_pure(state: &[Complex<T>; 4]) -> Result<Self> {
        let norm_sqr: T = state.iter().map(|c| c.norm_sqr()).sum();
        if norm_sqr <= T::zero() || !norm_sqr.is_finite() {
            return Err(Error::NonFiniteEntries);
        }
        let mut op = Operator::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                op.set(
                    i,
                    j,
                    state[i] * state[j].conj() / Complex::new(norm_sqr, T::zero()),
                );
            }
        }
        DensityMatrix::new(op)
    }

    /// Singlet (|01> - |10>)/sqrt(2).
    pub fn singlet() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        DensityMatrix::from_pure(&[z, one, -one, z]).expect("singlet is valid")
    }

    /// Maximally mixed state I/4.
    pub fn maximally_mixed() -> Self {
        let q = T::real(0.25);
        DensityMatrix {
            op: Operator::diagonal(&[q, q, q, q]),
        }
    }

    /// |i><i| for computational basis index i in 0..4.
    pub fn basis_state(index: usize) -> Self {
        assert!(index < 4);
        let z = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        let mut v = [z; 4];
        v[index] = one;
        DensityMatrix::from_pure(&v).expect("basis state is valid")
    }

    pub fn min_eigenvalue(&self) -> T {
        hermitian_eigenvalues(&self.op).expect("density is Hermitian")[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        *hermitian_eigenvalues(&self.op)
            .expect("density is Hermitian")
            .last()
            .unwrap()
    }
}

/// Tr(rho O) for a Hermitian observable; the imaginary part must vanish up to
/// `Scalar::IDENTITY_TOL` (asserted, since both inputs are Hermitian).
pub fn expectation<T: Scalar>(rho: &DensityMatrix<T>, observable: &Operator<T>) -> Result<T> {
    if observable.dim() != 4 {
        return Err(Error::DimensionMismatch {
            context: "expectation observable",
            expected: 4,
            got: observable.dim(),
        });
    }
    let dev = observable.hermiticity_deviation();
    if dev > T::STRUCTURAL_TOL {
        return Err(Error::NotHermitian {
            max_asymmetry: dev.to_f64_lossy(),
        });
    }
    let mut tr = Complex::new(T::zero(), T::zero());
    let r = rho.as_operator();
    for i in 0..4 {
        for j in 0..4 {
            tr += r.get(i, j) * observable.get(j, i);
        }
    }
    assert!(
        tr.im.abs() <= T::IDENTITY_TOL,
        "expectation of a Hermitian observable must be real (got imaginary part {:?})",
        tr.im
    );
    Ok(tr.re)
}

/// Conjugates rho by the product gate: (ux kron uy) rho (ux kron uy)'.
///
/// Both gates must be 2x2 and unitary within `Scalar::UNITARY_TOL`. The
/// result is revalidated as a density matrix.
pub fn prepare_ideal_state<T: Scalar>(
    rho: &DensityMatrix<T>,
    ux: &Operator<T>,
    uy: &Operator<T>,
) -> Result<DensityMatrix<T>> {
    for u in [ux, uy] {
        if u.dim() != 2 {
            return Err(Error::DimensionMismatch {
                context: "rotation gate",
                expected: 2,
                got: u.dim(),
            });
        }
        let dev = unitarity_deviation(u);
        if dev > T::UNITARY_TOL {
            return Err(Error::NotUnitary {
                max_deviation: dev.to_f64_lossy(),
            });
        }
    }
    let g = kron(ux, uy)?;
    let rotated = &(&g * rho.as_operator()) * &g.dagger();
    DensityMatrix::new(rotated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_norm;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    struct TestRng(u64);
    impl TestRng {
        fn next(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
        fn angle(&mut self) -> f64 {
            self.next() * std::f64::consts::TAU
        }
        fn pure_density(&mut self) -> DensityMatrix<f64> {
            let v: Vec<C> = (0..4)
                .map(|_| c(self.next() - 0.5, self.next() - 0.5))
                .collect();
            DensityMatrix::from_pure(&[v[0], v[1], v[2], v[3]]).unwrap()
        }
    }

    #[test]
    fn angles_normalize_into_range() {
        let a = MeasurementAngles::new(-0.5f64, 7.0);
        assert!((a.theta() - (std::f64::consts::TAU - 0.5)).abs() < 1e-12);
        assert!((a.phi() - (7.0 - std::f64::consts::TAU)).abs() < 1e-12);
        let b = MeasurementAngles::new(std::f64::consts::TAU, 0.0);
        assert_eq!(b.theta(), 0.0);
    }

    #[test]
    fn rotation_gate_theta_zero_is_identity() {
        for phi in [0.0, 1.0, 4.5] {
            let u = rotation_gate(MeasurementAngles::new(0.0f64, phi));
            assert!((&u - &Operator::identity(2)).max_abs_entry() < 1e-15);
        }
    }

    #[test]
    fn rotation_gate_is_unitary() {
        let mut rng = TestRng(11);
        for _ in 0..1000 {
            let u = rotation_gate(MeasurementAngles::new(rng.angle(), rng.angle()));
            assert!(unitarity_deviation(&u) <= 1e-12);
        }
    }

    #[test]
    fn rotated_observable_matches_bloch_direction() {
        let mut rng = TestRng(23);
        for _ in 0..200 {
            let angles = MeasurementAngles::new(rng.angle(), rng.angle());
            let u = rotation_gate(angles);
            let got = &(&u.dagger() * &Operator::pauli_z()) * &u;
            let [nx, ny, nz] = angles.bloch_direction();
            let want = {
                let x = Operator::pauli_x().scale(nx);
                let y = Operator::pauli_y().scale(ny);
                let z = Operator::pauli_z().scale(nz);
                &(&x + &y) + &z
            };
            assert!((&got - &want).max_abs_entry() < 1e-12);
        }
    }

    #[test]
    fn theta_pi_flips_z_expectation() {
        // Oracle: explicit 2x2 multiplication of U'ZU against |0>.
        let u = rotation_gate(MeasurementAngles::new(std::f64::consts::PI, 0.0f64));
        let rotated = &(&u.dagger() * &Operator::pauli_z()) * &u;
        let expectation_on_zero = rotated.get(0, 0).re;
        assert!((expectation_on_zero + 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_density_accepts_maximally_mixed() {
        let mm = DensityMatrix::<f64>::maximally_mixed();
        assert!(validate_density(mm.as_operator()).is_empty());
    }

    #[test]
    fn validate_density_reports_trace_and_positivity() {
        let bad = Operator::diagonal(&[0.5f64, 0.7, 0.0, -0.1]);
        let violations = validate_density(&bad);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::Trace { .. })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::Positivity { .. })));
        assert_eq!(violations.len(), 2);

        // A negative eigenvalue alone, with the trace exactly 1.
        let neg_only = Operator::diagonal(&[0.5f64, 0.6, 0.0, -0.1]);
        let violations = validate_density(&neg_only);
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::Positivity { .. }));
    }

    #[test]
    fn validate_density_reports_hermiticity() {
        let mut m = Operator::diagonal(&[0.25, 0.25, 0.25, 0.25]);
        m.set(0, 1, c(0.1, 0.0));
        m.set(1, 0, c(0.2, 0.0));
        let violations = validate_density(&m);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::Hermiticity { .. })));
    }

    #[test]
    fn prepare_ideal_with_identity_gates_is_identity() {
        let rho = DensityMatrix::<f64>::singlet();
        let eye = Operator::identity(2);
        let out = prepare_ideal_state(&rho, &eye, &eye).unwrap();
        assert!((out.as_operator() - rho.as_operator()).max_abs_entry() < 1e-15);
    }

    #[test]
    fn prepare_ideal_preserves_purity() {
        let mut rng = TestRng(37);
        for _ in 0..20 {
            let rho = rng.pure_density();
            let ux = rotation_gate(MeasurementAngles::new(rng.angle(), rng.angle()));
            let uy = rotation_gate(MeasurementAngles::new(rng.angle(), rng.angle()));
            let out = prepare_ideal_state(&rho, &ux, &uy).unwrap();
            assert!((out.max_eigenvalue() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn prepare_ideal_rejects_non_unitary() {
        let rho = DensityMatrix::<f64>::singlet();
        let eye = Operator::identity(2);
        let bad = Operator::identity(2).scale(1.5);
        assert!(matches!(
            prepare_ideal_state(&rho, &bad, &eye),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn gate_picture_equals_observable_picture() {
        // Conjugating the state equals conjugating the observables, checked on
        // 100 random (state, angles) draws.
        let mut rng = TestRng(41);
        let z = Operator::pauli_z();
        for _ in 0..100 {
            let rho = rng.pure_density();
            let ax = MeasurementAngles::new(rng.angle(), rng.angle());
            let ay = MeasurementAngles::new(rng.angle(), rng.angle());
            let ux = rotation_gate(ax);
            let uy = rotation_gate(ay);

            let rotated = prepare_ideal_state(&rho, &ux, &uy).unwrap();
            let zz = kron(&z, &z).unwrap();
            let gate_picture = expectation(&rotated, &zz).unwrap();

            let zx = &(&ux.dagger() * &z) * &ux;
            let zy = &(&uy.dagger() * &z) * &uy;
            let observable_picture = expectation(&rho, &kron(&zx, &zy).unwrap()).unwrap();

            assert!((gate_picture - observable_picture).abs() < 1e-10);
        }
    }

    #[test]
    fn expectation_cases() {
        let z = Operator::pauli_z();
        let zz = kron(&z, &z).unwrap();
        let mm = DensityMatrix::<f64>::maximally_mixed();
        assert!(expectation(&mm, &zz).unwrap().abs() < 1e-15);

        let ket00 = DensityMatrix::<f64>::basis_state(0);
        assert!((expectation(&ket00, &zz).unwrap() - 1.0).abs() < 1e-15);

        // Direct 4x4 trace oracle for the singlet.
        let singlet = DensityMatrix::<f64>::singlet();
        let mut oracle = c(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                oracle += singlet.as_operator().get(i, j) * zz.get(j, i);
            }
        }
        let got = expectation(&singlet, &zz).unwrap();
        assert!((got - oracle.re).abs() < 1e-15);
        assert!((got + 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let mut obs = Operator::<f64>::identity(4);
        obs.set(0, 1, c(0.4, 0.2));
        let mm = DensityMatrix::maximally_mixed();
        assert!(matches!(
            expectation(&mm, &obs),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn any_valid_density_has_unit_trace_norm() {
        let mut rng = TestRng(59);
        for _ in 0..10 {
            let rho = rng.pure_density();
            assert!((trace_norm(rho.as_operator()) - 1.0).abs() < 1e-10);
        }
        let mm = DensityMatrix::<f64>::maximally_mixed();
        assert!((trace_norm(mm.as_operator()) - 1.0).abs() < 1e-12);
    }
}
