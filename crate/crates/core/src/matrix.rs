//! Dense real symmetric and complex Hermitian random matrices at β = 1, 2.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Spectrum;
use crate::rng::{stream, StreamRng};

/// Entry type of a matrix model: `f64` for β = 1, `Complex64` for β = 2.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const ZERO: Self;
    const BETA: u8;
    fn from_re(x: f64) -> Self;
    fn re(self) -> f64;
    fn conj(self) -> Self;
    fn abs(self) -> f64;
    fn scale(self, x: f64) -> Self;
    /// Standard Gaussian with `E|z|² = 1`.
    fn gaussian(rng: &mut StreamRng) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const BETA: u8 = 1;
    fn from_re(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
    }
    fn conj(self) -> Self {
        self
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn gaussian(rng: &mut StreamRng) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const BETA: u8 = 2;
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn gaussian(rng: &mut StreamRng) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Symmetric,
    Hermitian,
    General,
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
    symmetry: Symmetry,
}

pub type RealMatrix = DenseMatrix<f64>;
pub type ComplexMatrix = DenseMatrix<Complex64>;

/// Tolerance for the self-adjointness tag, relative to the largest entry.
pub const SELF_ADJOINT_TOL: f64 = 1e-12;
/// Jacobi stops once the off-diagonal Frobenius norm is below this times
/// the Frobenius norm of the input.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

impl<T: Scalar> DenseMatrix<T> {
    fn self_adjoint_tag() -> Symmetry {
        if T::BETA == 1 {
            Symmetry::Symmetric
        } else {
            Symmetry::Hermitian
        }
    }

    pub fn zeros(n: usize, symmetry: Symmetry) -> Self {
        Self {
            n,
            data: vec![T::ZERO; n * n],
            symmetry,
        }
    }

    /// Rows must all have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<T>], symmetry: Symmetry) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::SizeMismatch {
                left: r.len(),
                right: n,
            });
        }
        let m = Self {
            n,
            data: rows.iter().flatten().copied().collect(),
            symmetry,
        };
        if symmetry != Symmetry::General {
            let asym = m.asymmetry();
            if asym > SELF_ADJOINT_TOL * m.max_abs().max(f64::MIN_POSITIVE) {
                return Err(Error::NotSelfAdjoint(asym));
            }
        }
        Ok(m)
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), Self::self_adjoint_tag());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = T::from_re(x);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|M_ij − conj(M_ji)|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::ZERO, |s, i| s + self[(i, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n, Symmetry::General);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n, self.symmetry);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// `U diag(d) U*`, symmetrized and tagged self-adjoint.
    pub fn conjugate_diagonal(u: &Self, d: &[f64]) -> Self {
        let n = u.n;
        let mut out = Self::zeros(n, Self::self_adjoint_tag());
        for i in 0..n {
            for j in 0..=i {
                let mut s = T::ZERO;
                for (k, &dk) in d.iter().enumerate() {
                    s = s + (u[(i, k)] * u[(j, k)].conj()).scale(dk);
                }
                out[(i, j)] = s;
                out[(j, i)] = s.conj();
            }
            out[(i, i)] = T::from_re(out[(i, i)].re());
        }
        out
    }

    /// Leading `k × k` principal submatrix.
    pub fn principal_corner(&self, k: usize) -> Self {
        let mut out = Self::zeros(k, self.symmetry);
        for i in 0..k {
            for j in 0..k {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }

    fn frobenius(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.abs().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn off_diagonal(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)].abs().powi(2);
                }
            }
        }
        s.sqrt()
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Scalar> Add for &DenseMatrix<T> {
    type Output = DenseMatrix<T>;
    fn add(self, rhs: Self) -> DenseMatrix<T> {
        let symmetry = if self.symmetry == rhs.symmetry {
            self.symmetry
        } else {
            Symmetry::General
        };
        DenseMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
            symmetry,
        }
    }
}

/// Haar-distributed orthogonal (`f64`) or unitary (`Complex64`) matrix: a
/// Gaussian matrix orthonormalized column by column with reorthogonalized
/// Gram–Schmidt. Gram–Schmidt yields the QR factor whose R has a positive
/// diagonal, which is the normalization that makes Q exactly Haar.
pub fn haar_matrix<T: Scalar>(n: usize, rng: &mut StreamRng) -> DenseMatrix<T> {
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<T> = (0..n).map(|_| T::gaussian(rng)).collect();
        for _ in 0..2 {
            for q in &cols {
                // <q, v> = Σ conj(q_i) v_i
                let dot = q
                    .iter()
                    .zip(&v)
                    .fold(T::ZERO, |s, (&qi, &vi)| s + qi.conj() * vi);
                for (vi, &qi) in v.iter_mut().zip(q) {
                    *vi = *vi - qi * dot;
                }
            }
        }
        let norm = v.iter().map(|x| x.abs().powi(2)).sum::<f64>().sqrt();
        if norm < 1e-10 {
            continue;
        }
        v.iter_mut().for_each(|x| *x = x.scale(1.0 / norm));
        cols.push(v);
    }
    let mut u = DenseMatrix::zeros(n, Symmetry::General);
    for (j, c) in cols.iter().enumerate() {
        for (i, &x) in c.iter().enumerate() {
            u[(i, j)] = x;
        }
    }
    u
}

/// `U diag(a) U*` with `U` Haar.
pub fn haar_conjugate<T: Scalar>(a: &Spectrum, rng: &mut StreamRng) -> DenseMatrix<T> {
    let u = haar_matrix::<T>(a.len(), rng);
    DenseMatrix::conjugate_diagonal(&u, a.values())
}

/// Eigen-decomposition of a self-adjoint matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (unsorted) and the matrix of eigenvectors (columns).
pub fn jacobi_eigen<T: Scalar>(m: &DenseMatrix<T>) -> Result<(Vec<f64>, DenseMatrix<T>)> {
    if m.symmetry == Symmetry::General {
        return Err(Error::NotSelfAdjoint(m.asymmetry()));
    }
    let scale = m.max_abs();
    let asym = m.asymmetry();
    if asym > SELF_ADJOINT_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSelfAdjoint(asym));
    }
    let n = m.n;
    let mut a = m.clone();
    let mut v = DenseMatrix::<T>::diagonal(&vec![1.0; n]);
    let target = JACOBI_TOL * m.frobenius();
    for _ in 0..JACOBI_MAX_SWEEPS {
        if a.off_diagonal() <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    let vals = (0..n).map(|i| a[(i, i)].re()).collect();
    Ok((vals, v))
}

/// Annihilates `a[p][q]`: a phase on column/row `q` makes it real, then a
/// real plane rotation zeroes it.
fn rotate<T: Scalar>(a: &mut DenseMatrix<T>, v: &mut DenseMatrix<T>, p: usize, q: usize) {
    let n = a.n;
    let apq = a[(p, q)];
    let mut r = apq.abs();
    if r == 0.0 {
        return;
    }
    if T::BETA == 1 {
        r = apq.re();
    } else {
        let w = apq.conj().scale(1.0 / r);
        for k in 0..n {
            a[(k, q)] = a[(k, q)] * w;
            v[(k, q)] = v[(k, q)] * w;
        }
        let wc = w.conj();
        for k in 0..n {
            a[(q, k)] = wc * a[(q, k)];
        }
    }
    let app = a[(p, p)].re();
    let aqq = a[(q, q)].re();
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp.scale(c) - akq.scale(s);
        a[(k, q)] = akp.scale(s) + akq.scale(c);
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp.scale(c) - vkq.scale(s);
        v[(k, q)] = vkp.scale(s) + vkq.scale(c);
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = apk.scale(c) - aqk.scale(s);
        a[(q, k)] = apk.scale(s) + aqk.scale(c);
    }
    a[(p, q)] = T::ZERO;
    a[(q, p)] = T::ZERO;
}

/// Sorted eigenvalues of a self-adjoint matrix.
pub fn spectrum_of<T: Scalar>(m: &DenseMatrix<T>) -> Result<Spectrum> {
    let (vals, _) = jacobi_eigen(m)?;
    Spectrum::new(vals)
}

/// Positive semidefinite square root `V diag(√λ) V*`.
pub fn sqrt_psd<T: Scalar>(m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (vals, v) = jacobi_eigen(m)?;
    if let Some(&bad) = vals.iter().find(|&&x| x < -JACOBI_TOL * m.max_abs()) {
        return Err(Error::NonPositive {
            what: "eigenvalue for square root",
            value: bad,
        });
    }
    let roots: Vec<f64> = vals.iter().map(|&x| x.max(0.0).sqrt()).collect();
    Ok(DenseMatrix::conjugate_diagonal(&v, &roots))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixBeta {
    Real,
    Complex,
}

impl MatrixBeta {
    pub fn from_beta(beta: f64) -> Result<Self> {
        match beta {
            b if b == 1.0 => Ok(Self::Real),
            b if b == 2.0 => Ok(Self::Complex),
            _ => Err(Error::Config(format!(
                "matrix models exist only for beta 1 or 2 (got {beta})"
            ))),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Real => 1.0,
            Self::Complex => 2.0,
        }
    }
}

/// The second operand of a matrix operation.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixOp {
    /// `A + B` with B of the given spectrum.
    Add(Spectrum),
    /// `B^{1/2} A B^{1/2}`; both spectra positive.
    Mul(Spectrum),
    /// Leading `k × k` corner of `A`.
    Corner(usize),
}

impl MatrixOp {
    fn validate(&self, a: &Spectrum) -> Result<()> {
        match self {
            Self::Add(b) | Self::Mul(b) if b.len() != a.len() => Err(Error::SizeMismatch {
                left: a.len(),
                right: b.len(),
            }),
            Self::Mul(b) => {
                for s in [a, b] {
                    if let Some(v) = s.first_non_positive() {
                        return Err(Error::NonPositive {
                            what: "spectrum entry",
                            value: v,
                        });
                    }
                }
                Ok(())
            }
            Self::Corner(k) if *k < 1 || *k > a.len() => Err(Error::OutOfRange {
                what: "corner size k",
                value: *k,
                min: 1,
                max: a.len(),
            }),
            _ => Ok(()),
        }
    }
}

fn one_draw<T: Scalar>(a: &Spectrum, op: &MatrixOp, rng: &mut StreamRng) -> Result<Spectrum> {
    let am = haar_conjugate::<T>(a, rng);
    match op {
        MatrixOp::Add(b) => {
            let bm = haar_conjugate::<T>(b, rng);
            spectrum_of(&(&am + &bm))
        }
        MatrixOp::Mul(b) => {
            let u = haar_matrix::<T>(b.len(), rng);
            let root: Vec<f64> = b.values().iter().map(|x| x.sqrt()).collect();
            let half = DenseMatrix::conjugate_diagonal(&u, &root);
            let mut prod = half.matmul(&am).matmul(&half);
            prod.symmetry = DenseMatrix::<T>::self_adjoint_tag();
            spectrum_of(&symmetrized(&prod))
        }
        MatrixOp::Corner(k) => spectrum_of(&am.principal_corner(*k)),
    }
}

/// `(M + M*)/2`, removing rounding asymmetry from products.
fn symmetrized<T: Scalar>(m: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = m.n;
    let mut out = DenseMatrix::zeros(n, DenseMatrix::<T>::self_adjoint_tag());
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (m[(i, j)] + m[(j, i)].conj()).scale(0.5);
        }
    }
    out
}

/// One draw of the operation's spectrum for draw `index` under `seed`.
pub fn operation_draw(
    a: &Spectrum,
    op: &MatrixOp,
    beta: MatrixBeta,
    seed: u64,
    index: usize,
) -> Result<Spectrum> {
    op.validate(a)?;
    let mut rng = stream(seed, &[0x6d61_7472_6978, index as u64]);
    match beta {
        MatrixBeta::Real => one_draw::<f64>(a, op, &mut rng),
        MatrixBeta::Complex => one_draw::<Complex64>(a, op, &mut rng),
    }
}

/// `draws` independent spectra of the operation, in draw order.
pub fn sample_operation(
    a: &Spectrum,
    op: &MatrixOp,
    beta: MatrixBeta,
    draws: usize,
    seed: u64,
) -> Result<Vec<Spectrum>> {
    op.validate(a)?;
    (0..draws)
        .into_par_iter()
        .map(|i| operation_draw(a, op, beta, seed, i))
        .collect()
}

/// `B^{1/2} A B^{1/2}` and `A^{1/2} B A^{1/2}` for the same rotated pair;
/// both have the spectrum of `AB`. Returns the two spectra.
pub fn multiplicative_two_ways<T: Scalar>(
    a: &Spectrum,
    b: &Spectrum,
    rng: &mut StreamRng,
) -> Result<(Spectrum, Spectrum)> {
    MatrixOp::Mul(b.clone()).validate(a)?;
    let am = haar_conjugate::<T>(a, rng);
    let bm = haar_conjugate::<T>(b, rng);
    let ah = sqrt_psd(&am)?;
    let bh = sqrt_psd(&bm)?;
    let one = symmetrized(&bh.matmul(&am).matmul(&bh));
    let two = symmetrized(&ah.matmul(&bm).matmul(&ah));
    Ok((spectrum_of(&one)?, spectrum_of(&two)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finfree::{additive_expected_elementary, multiplicative_expected_elementary};
    use crate::numeric::max_relative_deviation;
    use crate::poly::RealRootedPoly;
    use crate::stats::{ks_test, RunningStats};
    use proptest::prelude::*;

    fn spectrum(v: &[f64]) -> Spectrum {
        Spectrum::from_slice(v).unwrap()
    }

    fn close(a: &Spectrum, b: &[f64], tol: f64) -> bool {
        a.values().iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn jacobi_small_examples() {
        let d = RealMatrix::from_rows(
            &[
                vec![3.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 2.0],
            ],
            Symmetry::Symmetric,
        )
        .unwrap();
        assert_eq!(spectrum_of(&d).unwrap().values(), &[1.0, 2.0, 3.0]);
        let s =
            RealMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], Symmetry::Symmetric).unwrap();
        assert!(close(&spectrum_of(&s).unwrap(), &[-1.0, 1.0], 1e-15));
        let h = ComplexMatrix::from_rows(
            &[
                vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)],
                vec![Complex64::new(0.0, -1.0), Complex64::new(2.0, 0.0)],
            ],
            Symmetry::Hermitian,
        )
        .unwrap();
        assert!(close(&spectrum_of(&h).unwrap(), &[1.0, 3.0], 1e-14));
    }

    #[test]
    fn rejects_non_self_adjoint() {
        assert!(matches!(
            RealMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]], Symmetry::Symmetric),
            Err(Error::NotSelfAdjoint(_))
        ));
        let g =
            RealMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]], Symmetry::General).unwrap();
        assert!(matches!(spectrum_of(&g), Err(Error::NotSelfAdjoint(_))));
    }

    #[test]
    fn conjugation_preserves_spectrum() {
        let a = spectrum(&[-2.0, 0.5, 1.0, 4.0, 4.5]);
        let mut rng = stream(1, &[1]);
        for _ in 0..20 {
            let r = spectrum_of(&haar_conjugate::<f64>(&a, &mut rng)).unwrap();
            assert!(close(&r, a.values(), 1e-10));
            let c = spectrum_of(&haar_conjugate::<Complex64>(&a, &mut rng)).unwrap();
            assert!(close(&c, a.values(), 1e-10));
        }
        let c = haar_conjugate::<Complex64>(&Spectrum::constant(4, 2.5), &mut rng);
        let id = ComplexMatrix::diagonal(&[2.5; 4]);
        for i in 0..4 {
            for j in 0..4 {
                assert!((c[(i, j)] - id[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_columns_are_orthonormal() {
        let mut rng = stream(2, &[2]);
        let u = haar_matrix::<Complex64>(6, &mut rng);
        let p = u.adjoint().matmul(&u);
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - Complex64::new(e, 0.0)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn corner_entry_follows_arcsine_law() {
        let a = spectrum(&[0.0, 1.0]);
        let mut xs: Vec<f64> =
            sample_operation(&a, &MatrixOp::Corner(1), MatrixBeta::Real, 100_000, 17)
                .unwrap()
                .iter()
                .map(|s| s.values()[0])
                .collect();
        let cdf = |x: f64| 2.0 / std::f64::consts::PI * x.clamp(0.0, 1.0).sqrt().asin();
        let (_, p) = ks_test(&mut xs, cdf);
        assert!(p > 1e-3, "p = {p}");
    }

    /// Faddeev–LeVerrier coefficients of det(zI − M), highest first.
    fn faddeev_leverrier(m: &RealMatrix) -> Vec<f64> {
        let n = m.size();
        let mut coeffs = vec![1.0];
        let mut mk = RealMatrix::zeros(n, Symmetry::General);
        for k in 1..=n {
            // M_k = M (M_{k-1} + c_{k-1} I)
            let mut t = mk.clone();
            let c_prev = *coeffs.last().unwrap();
            for i in 0..n {
                t[(i, i)] += c_prev;
            }
            mk = m.matmul(&t);
            coeffs.push(-mk.trace() / k as f64);
        }
        coeffs
    }

    proptest! {
        #[test]
        fn characteristic_polynomial_matches_determinant(
            entries in proptest::collection::vec(-3.0f64..3.0, 21),
            n in 1usize..=6,
        ) {
            let mut rows = vec![vec![0.0; n]; n];
            let mut it = entries.iter();
            for i in 0..n {
                for j in 0..=i {
                    let x = *it.next().unwrap();
                    rows[i][j] = x;
                    rows[j][i] = x;
                }
            }
            let m = RealMatrix::from_rows(&rows, Symmetry::Symmetric).unwrap();
            let p = RealRootedPoly::from_roots(&spectrum_of(&m).unwrap());
            let oracle = faddeev_leverrier(&m);
            let scale = oracle.iter().fold(1.0f64, |s, c| s.max(c.abs()));
            prop_assert!(max_relative_deviation(p.coeffs(), &oracle, scale) < 1e-8);
        }
    }

    #[test]
    fn trivial_operations() {
        let a = spectrum(&[0.5, 1.0, 3.0]);
        for beta in [MatrixBeta::Real, MatrixBeta::Complex] {
            for s in sample_operation(&a, &MatrixOp::Corner(3), beta, 10, 4).unwrap() {
                assert!(close(&s, a.values(), 1e-12));
            }
            for s in sample_operation(&a, &MatrixOp::Mul(Spectrum::constant(3, 1.0)), beta, 10, 4)
                .unwrap()
            {
                assert!(close(&s, a.values(), 1e-12));
            }
            let b = spectrum(&[-1.0, 2.0, 2.5]);
            for s in sample_operation(&a, &MatrixOp::Add(b.clone()), beta, 50, 5).unwrap() {
                assert!((s.sum() - (a.sum() + b.sum())).abs() < 1e-10);
            }
        }
        assert!(sample_operation(&a, &MatrixOp::Corner(4), MatrixBeta::Real, 1, 0).is_err());
        assert!(sample_operation(
            &a,
            &MatrixOp::Mul(spectrum(&[1.0, -2.0, 3.0])),
            MatrixBeta::Real,
            1,
            0
        )
        .is_err());
    }

    #[test]
    fn multiplicative_realizations_agree() {
        let a = spectrum(&[0.5, 1.0, 3.0, 4.0]);
        let b = spectrum(&[0.2, 2.0, 2.5, 7.0]);
        let mut rng = stream(9, &[9]);
        for _ in 0..20 {
            let (x, y) = multiplicative_two_ways::<Complex64>(&a, &b, &mut rng).unwrap();
            assert!(close(&x, y.values(), 1e-8 * x.max_abs()));
            let (x, y) = multiplicative_two_ways::<f64>(&a, &b, &mut rng).unwrap();
            assert!(close(&x, y.values(), 1e-8 * x.max_abs()));
        }
    }

    #[test]
    fn expected_coefficients_match_closed_forms() {
        let a = spectrum(&[1.0, 2.0, 4.0]);
        let b = spectrum(&[0.5, 3.0, 3.5]);
        let add = additive_expected_elementary(&a, &b).unwrap();
        let mul = multiplicative_expected_elementary(&a, &b).unwrap();
        for beta in [MatrixBeta::Real, MatrixBeta::Complex] {
            for (op, expected) in [
                (MatrixOp::Add(b.clone()), &add),
                (MatrixOp::Mul(b.clone()), &mul),
            ] {
                let draws = sample_operation(&a, &op, beta, 10_000, 21).unwrap();
                for l in 1..=3 {
                    let s: RunningStats = draws.iter().map(|d| d.elementary(l).unwrap()).collect();
                    let z = s
                        .summary()
                        .z_score(expected[l], 1e-9 * expected[l].abs().max(1.0));
                    assert!(z.abs() < 4.0, "{op:?} {beta:?} l={l}: z={z}");
                }
            }
        }
    }
}
