//! Spectral calculus on Hermitian matrices.
//!
//! Every matrix function goes through a full eigendecomposition: the spectra
//! are needed anyway for the eigenbasis kernels that realize the BKM and SLD
//! formulas, and the dimensions involved are small.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // used only when std is absent from the build graph
use num_traits::Float;

use crate::error::{shape, Error, Result};
use crate::linalg::{CMatrix, Matrix};

/// Relative gap below which two eigenvalues are treated as equal by kernels.
pub const CONFLUENT_REL_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 64;

/// A square complex matrix with `a[i][j] == conj(a[j][i])` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
}

impl HermitianMatrix {
    /// Symmetrizes `(a + a†)/2`. Fails for non-square or non-finite input.
    pub fn new(a: CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(shape(format!("Hermitian matrix must be square, got {}x{}", a.rows(), a.cols())));
        }
        if a.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrize(a))
    }

    pub(crate) fn symmetrize(a: CMatrix) -> Self {
        let n = a.rows();
        let mut inner = a;
        for i in 0..n {
            let d = inner[(i, i)].re;
            inner[(i, i)] = Complex64::new(d, 0.0);
            for j in i + 1..n {
                let avg = (inner[(i, j)] + inner[(j, i)].conj()) * 0.5;
                inner[(i, j)] = avg;
                inner[(j, i)] = avg.conj();
            }
        }
        Self { inner }
    }

    pub fn from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        Self::new(CMatrix::from_parts(re, im)?)
    }

    pub fn from_real(m: &Matrix) -> Result<Self> {
        Self::new(CMatrix::from_real(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self { inner: CMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: CMatrix::identity(n) }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self { inner: CMatrix::diagonal(values) }
    }

    pub fn pauli_x() -> Self {
        Self::from_parts(&[alloc::vec![0.0, 1.0], alloc::vec![1.0, 0.0]], None).unwrap()
    }

    pub fn pauli_y() -> Self {
        let re = [alloc::vec![0.0, 0.0], alloc::vec![0.0, 0.0]];
        let im = [alloc::vec![0.0, -1.0], alloc::vec![1.0, 0.0]];
        Self::from_parts(&re, Some(&im)).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_cmatrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_cmatrix(self) -> CMatrix {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { inner: self.inner.add(&other.inner) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { inner: self.inner.sub(&other.inner) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { inner: self.inner.scale(s) }
    }

    /// `self + s·I`.
    pub fn shift(&self, s: f64) -> Self {
        let mut inner = self.inner.clone();
        for i in 0..self.dim() {
            inner[(i, i)] += s;
        }
        Self { inner }
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace().re
    }

    /// `Tr[self · other]`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> f64 {
        self.inner.trace_product(&other.inner).re
    }

    /// `U · self · U†` for a (not necessarily square) matrix `U`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        let m = u.matmul(&self.inner)?.matmul(&u.adjoint())?;
        Ok(Self::symmetrize(m))
    }

    /// Jordan product `(self·other + other·self)/2`.
    pub fn jordan(&self, other: &Self) -> Self {
        let ab = self.inner.mul(&other.inner);
        let ba = other.inner.mul(&self.inner);
        Self::symmetrize(ab.add(&ba).scale(0.5))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.inner[(i, j)].norm() <= tol))
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.inner[(i, i)].re).collect()
    }
}

/// `A = U Λ U†` with ascending eigenvalues and unitary `U` (eigenvectors in
/// columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from known parts; `eigenvectors` must be
    /// unitary with columns matching `eigenvalues`.
    pub(crate) fn from_raw(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Self {
        Self { eigenvalues, eigenvectors }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(values) U†`.
    pub fn synthesize(&self, values: &[f64]) -> HermitianMatrix {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = Complex64::new(0.0, 0.0);
                for (k, v) in values.iter().enumerate() {
                    s += u[(i, k)] * u[(j, k)].conj() * *v;
                }
                out[(i, j)] = s;
                out[(j, i)] = s.conj();
            }
        }
        HermitianMatrix::symmetrize(out)
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.synthesize(&self.eigenvalues)
    }

    /// `U† x U`: components of `x` in the eigenbasis.
    pub fn to_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint().mul(x).mul(&self.eigenvectors)
    }

    /// `U x̃ U†`.
    pub fn from_eigenbasis(&self, xt: &CMatrix) -> CMatrix {
        self.eigenvectors.mul(xt).mul(&self.eigenvectors.adjoint())
    }

    /// Applies `f` to the spectrum; fails on the first eigenvalue where `f`
    /// is not finite.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
        let mut values = Vec::with_capacity(self.dim());
        for &l in &self.eigenvalues {
            let v = f(l);
            if !v.is_finite() {
                return Err(Error::Domain { eigenvalue: l });
            }
            values.push(v);
        }
        Ok(self.synthesize(&values))
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eigh(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let n = a.dim();
    let mut m = a.as_cmatrix().clone();
    let mut v = CMatrix::identity(n);
    let total = a.frobenius_norm();
    let threshold = (f64::EPSILON * total).powi(2) * 1e-2;

    let off_norm2 = |m: &CMatrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += m[(i, j)].norm_sqr();
            }
        }
        s
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm2(&m);
        if off <= threshold || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNonConvergence { sweeps, off_norm: off.sqrt() });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let b = m[(p, q)];
    let r = b.norm();
    if r == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    if r < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[(p, q)] = Complex64::new(0.0, 0.0);
        m[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase_conj = (b / r).conj();
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.is_infinite() {
        0.0
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // U = diag(1, conj(phase)) · [[c, s], [-s, c]]
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = phase_conj * (-s);
    let u_qq = phase_conj * c;

    let n = m.rows();
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * u_pp + akq * u_qp;
        m[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        m[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// `U f(Λ) U†`.
pub fn matrix_function(a: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    eigh(a)?.apply(f)
}

/// A symmetric function of two eigenvalues, with its value on the diagonal
/// `p == q` given separately so that difference quotients never see `0/0`.
pub trait Kernel {
    fn eval(&self, p: f64, q: f64) -> f64;

    fn confluent(&self, p: f64) -> f64 {
        self.eval(p, p)
    }

    /// Evaluates with the confluent branch when `p` and `q` are within
    /// [`CONFLUENT_REL_TOL`] of each other.
    fn value(&self, p: f64, q: f64) -> f64 {
        if (p - q).abs() <= CONFLUENT_REL_TOL * p.abs().max(q.abs()) {
            self.confluent(p)
        } else {
            self.eval(p, q)
        }
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn eval(&self, p: f64, q: f64) -> f64 {
        (**self).eval(p, q)
    }
    fn confluent(&self, p: f64) -> f64 {
        (**self).confluent(p)
    }
}

/// `(p − q)/(log p − log q) = ∫₀¹ p^α q^{1−α} dα`, the BKM kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogarithmicMean;

impl Kernel for LogarithmicMean {
    fn eval(&self, p: f64, q: f64) -> f64 {
        (p - q) / ((p - q) / q).ln_1p()
    }
    fn confluent(&self, p: f64) -> f64 {
        p
    }
}

/// `(log p − log q)/(p − q)`, the reciprocal of [`LogarithmicMean`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LogDifferenceQuotient;

impl Kernel for LogDifferenceQuotient {
    fn eval(&self, p: f64, q: f64) -> f64 {
        ((p - q) / q).ln_1p() / (p - q)
    }
    fn confluent(&self, p: f64) -> f64 {
        1.0 / p
    }
}

/// `(p + q)/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArithmeticMean;

impl Kernel for ArithmeticMean {
    fn eval(&self, p: f64, q: f64) -> f64 {
        0.5 * (p + q)
    }
}

/// `2/(p + q)`; solves the symmetric (Lyapunov) logarithmic-derivative equation.
#[derive(Debug, Clone, Copy, Default)]
pub struct InverseArithmeticMean;

impl Kernel for InverseArithmeticMean {
    fn eval(&self, p: f64, q: f64) -> f64 {
        2.0 / (p + q)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantKernel(pub f64);

impl Kernel for ConstantKernel {
    fn eval(&self, _: f64, _: f64) -> f64 {
        self.0
    }
}

/// Kernel from a pair of closures: off-diagonal value and confluent limit.
pub struct FnKernel<F, G> {
    pub eval: F,
    pub limit: G,
}

impl<F: Fn(f64, f64) -> f64, G: Fn(f64) -> f64> Kernel for FnKernel<F, G> {
    fn eval(&self, p: f64, q: f64) -> f64 {
        (self.eval)(p, q)
    }
    fn confluent(&self, p: f64) -> f64 {
        (self.limit)(p)
    }
}

fn kernel_table(rho: &SpectralDecomposition, k: &impl Kernel) -> Result<Vec<f64>> {
    let p = rho.eigenvalues();
    let n = p.len();
    let mut table = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = k.value(p[i], p[j]);
            if !v.is_finite() {
                return Err(Error::KernelNonFinite { p: p[i], q: p[j] });
            }
            table.push(v);
        }
    }
    Ok(table)
}

/// Multiplies the eigenbasis components of `x` entrywise by `k(p_i, p_j)`
/// and rotates back.
pub fn kernel_apply(rho: &SpectralDecomposition, x: &HermitianMatrix, k: &impl Kernel) -> Result<HermitianMatrix> {
    let n = rho.dim();
    if x.dim() != n {
        return Err(shape(format!("operand of dimension {} for spectrum of size {n}", x.dim())));
    }
    let table = kernel_table(rho, k)?;
    let mut xt = rho.to_eigenbasis(x.as_cmatrix());
    for i in 0..n {
        for j in 0..n {
            xt[(i, j)] *= table[i * n + j];
        }
    }
    Ok(HermitianMatrix::symmetrize(rho.from_eigenbasis(&xt)))
}

/// `Re Σ k(p_i, p_j) x̃_ij conj(ỹ_ij) = Tr[K(x) y]`.
pub fn kernel_pairing(
    rho: &SpectralDecomposition,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    k: &impl Kernel,
) -> Result<f64> {
    let n = rho.dim();
    if x.dim() != n || y.dim() != n {
        return Err(shape("operands do not match the spectrum dimension"));
    }
    let table = kernel_table(rho, k)?;
    let xt = rho.to_eigenbasis(x.as_cmatrix());
    let yt = rho.to_eigenbasis(y.as_cmatrix());
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += table[i * n + j] * (xt[(i, j)] * yt[(i, j)].conj()).re;
        }
    }
    Ok(s)
}
