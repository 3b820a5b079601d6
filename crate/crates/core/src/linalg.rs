//! Dense complex linear algebra for 2x2 and 4x4 operators.
//!
//! Everything the analysis needs fits in two fixed sizes, so the module keeps
//! a plain row-major `Vec<Complex<T>>` representation and implements the few
//! required kernels directly: tensor products, a cyclic Jacobi eigensolver for
//! Hermitian matrices, and the trace/operator norms built on it.

use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hard cap on Jacobi sweeps; convergence is quadratic and typically needs
/// fewer than ten sweeps at these sizes.
const MAX_JACOBI_SWEEPS: usize = 100;

/// Square complex matrix of dimension 2 or 4, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<T> {
    dim: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Scalar> Operator<T> {
    /// Zero matrix. Panics unless `dim` is 2 or 4.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "operator dimension must be 2 or 4");
        Operator {
            dim,
            entries: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    /// Identity matrix. Panics unless `dim` is 2 or 4.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex::new(T::one(), T::zero()));
        }
        m
    }

    /// Builds an operator from row-major entries, validating dimension,
    /// length and finiteness.
    pub fn from_entries(dim: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::DimensionMismatch {
                context: "operator construction",
                expected: 4,
                got: dim,
            });
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "operator entry count",
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if !entries.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFiniteEntries);
        }
        Ok(Operator { dim, entries })
    }

    /// 2x2 constructor from rows.
    pub fn dim2(rows: [[Complex<T>; 2]; 2]) -> Self {
        Operator {
            dim: 2,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    /// 4x4 constructor from rows.
    pub fn dim4(rows: [[Complex<T>; 4]; 4]) -> Self {
        Operator {
            dim: 4,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    /// Diagonal matrix from real values (dimension 2 or 4).
    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, Complex::new(v, T::zero()));
        }
        m
    }

    pub fn pauli_x() -> Self {
        let o = T::zero();
        let l = T::one();
        Operator::dim2([
            [Complex::new(o, o), Complex::new(l, o)],
            [Complex::new(l, o), Complex::new(o, o)],
        ])
    }

    pub fn pauli_y() -> Self {
        let o = T::zero();
        let l = T::one();
        Operator::dim2([
            [Complex::new(o, o), Complex::new(o, -l)],
            [Complex::new(o, l), Complex::new(o, o)],
        ])
    }

    pub fn pauli_z() -> Self {
        Operator::diagonal(&[T::one(), -T::one()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(j, i, self.get(i, j).conj());
            }
        }
        m
    }

    pub fn scale(&self, factor: T) -> Self {
        self.scale_complex(Complex::new(factor, T::zero()))
    }

    pub fn scale_complex(&self, factor: Complex<T>) -> Self {
        Operator {
            dim: self.dim,
            entries: self.entries.iter().map(|&c| c * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim)
            .map(|i| self.get(i, i))
            .fold(Complex::new(T::zero(), T::zero()), |acc, c| acc + c)
    }

    pub fn all_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs_entry(&self) -> T {
        self.entries
            .iter()
            .map(|c| c.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// max_ij |M_ij - conj(M_ji)|.
    pub fn hermiticity_deviation(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn frobenius_norm(&self) -> T {
        self.entries
            .iter()
            .map(|c| c.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    fn off_diagonal_frobenius(&self) -> T {
        let mut mass = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    mass += self.get(i, j).norm_sqr();
                }
            }
        }
        mass.sqrt()
    }

    /// (M + M†)/2, used to strip roundoff-level asymmetry before eigensolving.
    fn hermitized(&self) -> Self {
        let half = Complex::new(T::real(0.5), T::zero());
        let d = self.dagger();
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(i, j, (self.get(i, j) + d.get(i, j)) * half);
            }
        }
        m
    }
}

impl<T: Scalar> Index<(usize, usize)> for Operator<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.entries[i * self.dim + j]
    }
}

impl<T: Scalar> Add for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl<T: Scalar> Sub for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl<T: Scalar> Mul for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    acc += self.get(i, k) * rhs.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// Tensor product of two 2x2 operators: (A kron B)[2i+k][2j+l] = A[i][j] B[k][l].
pub fn kron<T: Scalar>(a: &Operator<T>, b: &Operator<T>) -> Result<Operator<T>> {
    if a.dim() != 2 {
        return Err(Error::DimensionMismatch {
            context: "kron left factor",
            expected: 2,
            got: a.dim(),
        });
    }
    if b.dim() != 2 {
        return Err(Error::DimensionMismatch {
            context: "kron right factor",
            expected: 2,
            got: b.dim(),
        });
    }
    let mut out = Operator::zeros(4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.set(2 * i + k, 2 * j + l, a.get(i, j) * b.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Trace over the first factor: (Tr_A rho)[k][l] = sum_i rho[2i+k][2i+l].
pub fn partial_trace_a<T: Scalar>(rho: &Operator<T>) -> Result<Operator<T>> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            context: "partial trace",
            expected: 4,
            got: rho.dim(),
        });
    }
    let mut out = Operator::zeros(2);
    for k in 0..2 {
        for l in 0..2 {
            out.set(k, l, rho.get(k, l) + rho.get(2 + k, 2 + l));
        }
    }
    Ok(out)
}

/// Trace over the second factor: (Tr_B rho)[i][j] = sum_k rho[2i+k][2j+k].
pub fn partial_trace_b<T: Scalar>(rho: &Operator<T>) -> Result<Operator<T>> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            context: "partial trace",
            expected: 4,
            got: rho.dim(),
        });
    }
    let mut out = Operator::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            out.set(i, j, rho.get(2 * i, 2 * j) + rho.get(2 * i + 1, 2 * j + 1));
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    /// Ascending real eigenvalues.
    pub values: Vec<T>,
    /// Matching eigenvectors as columns.
    pub vectors: Operator<T>,
}

/// Cyclic complex Jacobi eigensolver for Hermitian 2x2/4x4 matrices.
///
/// Errors when the input fails the hermiticity check. Sweeps run until the
/// off-diagonal Frobenius mass drops below `Scalar::JACOBI_TOL`, with a hard
/// cap of 100 sweeps.
pub fn hermitian_eigen<T: Scalar>(h: &Operator<T>) -> Result<HermitianEigen<T>> {
    let dev = h.hermiticity_deviation();
    if dev > T::STRUCTURAL_TOL {
        return Err(Error::NotHermitian {
            max_asymmetry: dev.to_f64_lossy(),
        });
    }
    Ok(jacobi(&h.hermitized()))
}

/// Ascending eigenvalues of a Hermitian operator.
pub fn hermitian_eigenvalues<T: Scalar>(h: &Operator<T>) -> Result<Vec<T>> {
    hermitian_eigen(h).map(|e| e.values)
}

/// Jacobi on an exactly Hermitian matrix (callers hermitize first).
fn jacobi<T: Scalar>(h: &Operator<T>) -> HermitianEigen<T> {
    let n = h.dim();
    let mut a = h.clone();
    let mut v = Operator::identity(n);

    for _ in 0..MAX_JACOBI_SWEEPS {
        if a.off_diagonal_frobenius() < T::JACOBI_TOL {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut pairs: Vec<(T, Vec<Complex<T>>)> = (0..n)
        .map(|k| {
            let val = a.get(k, k).re;
            let col = (0..n).map(|r| v.get(r, k)).collect();
            (val, col)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite eigenvalues"));

    let values = pairs.iter().map(|p| p.0).collect();
    let mut vectors = Operator::zeros(n);
    for (k, (_, col)) in pairs.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, k, col[r]);
        }
    }
    HermitianEigen { values, vectors }
}

/// One complex Jacobi rotation annihilating the (p, q) pivot of `a`,
/// accumulated into `v`.
///
/// With h_pq = r e^{i phi}, the plane unitary is W = diag(e^{i phi}, 1)
/// followed by the real rotation [[c, s], [-s, c]] that diagonalizes the
/// phase-stripped 2x2 block; c, s come from the usual stable tangent formula.
fn rotate<T: Scalar>(a: &mut Operator<T>, v: &mut Operator<T>, p: usize, q: usize) {
    let apq = a.get(p, q);
    let r = apq.norm();
    if r == T::zero() {
        return;
    }
    let phase = apq / Complex::new(r, T::zero());

    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let tau = (aqq - app) / (T::real(2.0) * r);
    let t = if tau == T::zero() {
        T::one()
    } else {
        let sign = if tau > T::zero() { T::one() } else { -T::one() };
        sign / (tau.abs() + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;

    // Column p of the rotation is (phase*c, -s); column q is (phase*s, c).
    let upp = phase * Complex::new(c, T::zero());
    let upq = phase * Complex::new(s, T::zero());
    let uqp = Complex::new(-s, T::zero());
    let uqq = Complex::new(c, T::zero());

    let n = a.dim();
    // a <- a U
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * upp + akq * uqp);
        a.set(k, q, akp * upq + akq * uqq);
    }
    // a <- U' a
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, apk * upp.conj() + aqk * uqp.conj());
        a.set(q, k, apk * upq.conj() + aqk * uqq.conj());
    }
    // Pivot pair is zero by construction; set it exactly.
    a.set(p, q, Complex::new(T::zero(), T::zero()));
    a.set(q, p, Complex::new(T::zero(), T::zero()));
    // v <- v U
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * upp + vkq * uqp);
        v.set(k, q, vkp * upq + vkq * uqq);
    }
}

/// Trace norm: sum of singular values.
///
/// Hermitian inputs (within the structural tolerance) take the eigenvalue
/// route sum |lambda_i|; everything else goes through the Gram matrix M'M.
pub fn trace_norm<T: Scalar>(m: &Operator<T>) -> T {
    singular_values(m).into_iter().sum()
}

/// Operator norm: largest singular value. For Hermitian inputs this is the
/// largest |eigenvalue|.
pub fn operator_norm<T: Scalar>(m: &Operator<T>) -> T {
    singular_values(m)
        .into_iter()
        .fold(T::zero(), |a, b| a.max(b))
}

fn singular_values<T: Scalar>(m: &Operator<T>) -> Vec<T> {
    if m.is_hermitian(T::STRUCTURAL_TOL) {
        jacobi(&m.hermitized())
            .values
            .into_iter()
            .map(|l| l.abs())
            .collect()
    } else {
        let gram = &m.dagger() * m;
        jacobi(&gram.hermitized())
            .values
            .into_iter()
            .map(|l| l.max(T::zero()).sqrt())
            .collect()
    }
}
