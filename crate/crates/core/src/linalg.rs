//! Dense complex linear algebra on the four-party space A ⊗ B ⊗ A' ⊗ B'.
//!
//! Operators are `nalgebra` dynamic matrices over `Complex<T>` for any
//! [`Real`] scalar. Multi-partite operators use row-major subsystem order: the
//! first subsystem in a dimension list is the most significant digit of the
//! linear index. The canonical order for joint states is `A, B, A', B'`; the
//! local grouping `(A A') ⊗ (B B')` is reached with [`to_local_grouping`].

use nalgebra as na;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type ComplexMatrix<T = f64> = na::DMatrix<Complex<T>>;
pub type StateVector<T = f64> = na::DVector<Complex<T>>;

/// Subsystem dimensions: `d` for each key system A and B, `a` for each
/// shield system A' and B'.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemShape {
    pub d: usize,
    pub a: usize,
}

/// One of the four parties of the joint space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subsystem {
    A,
    B,
    APrime,
    BPrime,
}

impl Subsystem {
    /// Position in the canonical `A, B, A', B'` order.
    pub fn index(self) -> usize {
        match self {
            Subsystem::A => 0,
            Subsystem::B => 1,
            Subsystem::APrime => 2,
            Subsystem::BPrime => 3,
        }
    }
}

impl SystemShape {
    pub fn new(d: usize, a: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Shape(format!("key dimension d must be >= 2, got {d}")));
        }
        if a < 1 {
            return Err(Error::Shape("shield dimension a must be >= 1".into()));
        }
        Ok(SystemShape { d, a })
    }

    /// Dimension of the joint shield A'B'.
    pub fn d_prime(&self) -> usize {
        self.a * self.a
    }

    /// Number of trace-orthonormal Hermitian basis elements on AA' (= d² d').
    pub fn t(&self) -> usize {
        self.d * self.d * self.d_prime()
    }

    /// Dimension of one party's share, AA' or BB'.
    pub fn local_dim(&self) -> usize {
        self.d * self.a
    }

    pub fn key_dim(&self) -> usize {
        self.d * self.d
    }

    pub fn total_dim(&self) -> usize {
        self.key_dim() * self.d_prime()
    }

    /// Dimensions in canonical order.
    pub fn dims(&self) -> [usize; 4] {
        [self.d, self.d, self.a, self.a]
    }

    /// Dimensions in local grouping order `A, A', B, B'`.
    pub fn local_dims(&self) -> [usize; 4] {
        [self.d, self.a, self.d, self.a]
    }
}

#[inline]
pub(crate) fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// |z| without requiring `num_traits::Float` on the component type.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

pub fn identity<T: Real>(n: usize) -> ComplexMatrix<T> {
    ComplexMatrix::<T>::identity(n, n)
}

pub fn pauli_x<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Projector onto a computational basis state of dimension `dim`.
pub fn basis_projector<T: Real>(dim: usize, k: usize) -> ComplexMatrix<T> {
    let mut p = ComplexMatrix::<T>::zeros(dim, dim);
    p[(k, k)] = Complex::new(T::one(), T::zero());
    p
}

pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<T: Real>(factors: &[&ComplexMatrix<T>]) -> ComplexMatrix<T> {
    factors
        .iter()
        .fold(identity::<T>(1), |acc, f| acc.kronecker(*f))
}

pub fn trace<T: Real>(m: &ComplexMatrix<T>) -> Complex<T> {
    m.trace()
}

/// Tr(A†B).
pub fn hs_inner<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<Complex<T>> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(a.iter()
        .zip(b.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y))
}

/// √Tr(A†A).
pub fn hs_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr()).sqrt()
}

fn require_square<T: Real>(m: &ComplexMatrix<T>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

fn require_dim<T: Real>(m: &ComplexMatrix<T>, dim: usize) -> Result<()> {
    let n = require_square(m)?;
    if n != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: n });
    }
    Ok(())
}

/// Largest entry magnitude of `M − M†`.
pub fn hermiticity_deviation<T: Real>(m: &ComplexMatrix<T>) -> T {
    let n = m.nrows();
    let mut dev = T::zero();
    for i in 0..n {
        for j in i..n.min(m.ncols()) {
            dev = dev.max(cabs(m[(i, j)] - m[(j, i)].conj()));
        }
    }
    dev
}

/// Largest entry magnitude of `U†U − I`.
pub fn unitarity_deviation<T: Real>(u: &ComplexMatrix<T>) -> T {
    let n = u.ncols();
    let g = u.adjoint() * u - identity::<T>(n);
    g.iter().fold(T::zero(), |acc, x| acc.max(cabs(*x)))
}

pub fn require_hermitian<T: Real>(m: &ComplexMatrix<T>) -> Result<()> {
    require_square(m)?;
    let dev = hermiticity_deviation(m);
    if dev > T::lit(T::VALIDATION_TOL) {
        return Err(Error::NotHermitian(dev.as_f64()));
    }
    Ok(())
}

pub fn require_unitary<T: Real>(u: &ComplexMatrix<T>) -> Result<()> {
    require_square(u)?;
    let dev = unitarity_deviation(u);
    if dev > T::lit(T::VALIDATION_TOL) {
        return Err(Error::NotUnitary(dev.as_f64()));
    }
    Ok(())
}

/// Checks Hermiticity, unit trace and positivity, each within `tol`.
pub fn validate_density<T: Real>(rho: &ComplexMatrix<T>, tol: f64) -> Result<()> {
    require_square(rho)?;
    let herm = hermiticity_deviation(rho);
    if herm > T::lit(tol) {
        return Err(Error::InvalidDensity(format!("not Hermitian (deviation {:e})", herm.as_f64())));
    }
    let tr = rho.trace();
    if (tr.re - T::one()).abs() > T::lit(tol) || tr.im.abs() > T::lit(tol) {
        return Err(Error::InvalidDensity(format!("trace is {}", tr.re.as_f64())));
    }
    let min = min_eigenvalue(rho)?;
    if min < -T::lit(tol) {
        return Err(Error::InvalidDensity(format!("negative eigenvalue {:e}", min.as_f64())));
    }
    Ok(())
}

/// Digits of a linear index in a mixed radix, most significant first.
fn digits(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

fn compose(digs: impl Iterator<Item = (usize, usize)>) -> usize {
    digs.fold(0, |acc, (x, dim)| acc * dim + x)
}

fn check_dims<T: Real>(m: &ComplexMatrix<T>, dims: &[usize]) -> Result<usize> {
    let n: usize = dims.iter().product();
    require_dim(m, n)?;
    Ok(n)
}

/// Partial trace keeping the subsystems whose positions are listed in `keep`
/// (in any order; the output keeps the original relative order).
pub fn partial_trace_dims<T: Real>(
    rho: &ComplexMatrix<T>,
    dims: &[usize],
    keep: &[usize],
) -> Result<ComplexMatrix<T>> {
    let n = check_dims(rho, dims)?;
    if keep.is_empty() || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Shape(format!("invalid subsystem selection {keep:?}")));
    }
    let kept: Vec<bool> = (0..dims.len()).map(|k| keep.contains(&k)).collect();
    let out_dim: usize = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(d, _)| d).product();

    let mut dig = vec![0; dims.len()];
    let mut kept_idx = Vec::with_capacity(n);
    let mut traced_idx = Vec::with_capacity(n);
    for i in 0..n {
        digits(i, dims, &mut dig);
        kept_idx.push(compose(
            dig.iter().zip(dims).zip(&kept).filter(|(_, &k)| k).map(|((&x, &d), _)| (x, d)),
        ));
        traced_idx.push(compose(
            dig.iter().zip(dims).zip(&kept).filter(|(_, &k)| !k).map(|((&x, &d), _)| (x, d)),
        ));
    }

    let mut out = ComplexMatrix::<T>::zeros(out_dim, out_dim);
    for i in 0..n {
        for j in 0..n {
            if traced_idx[i] == traced_idx[j] {
                out[(kept_idx[i], kept_idx[j])] += rho[(i, j)];
            }
        }
    }
    Ok(out)
}

pub fn partial_trace<T: Real>(
    rho: &ComplexMatrix<T>,
    shape: &SystemShape,
    keep: &[Subsystem],
) -> Result<ComplexMatrix<T>> {
    let keep: Vec<usize> = keep.iter().map(|s| s.index()).collect();
    partial_trace_dims(rho, &shape.dims(), &keep)
}

/// Reorders tensor factors: output factor `k` is input factor `perm[k]`.
pub fn permute_subsystems<T: Real>(
    m: &ComplexMatrix<T>,
    dims: &[usize],
    perm: &[usize],
) -> Result<ComplexMatrix<T>> {
    let n = check_dims(m, dims)?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() {
        return Err(Error::Shape(format!("permutation {perm:?} has wrong length")));
    }
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(Error::Shape(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut dig = vec![0; dims.len()];
    let map: Vec<usize> = (0..n)
        .map(|i| {
            digits(i, dims, &mut dig);
            compose(perm.iter().zip(&out_dims).map(|(&p, &d)| (dig[p], d)))
        })
        .collect();
    let mut out = ComplexMatrix::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

/// `A, B, A', B'` → `(A A') ⊗ (B B')`.
pub fn to_local_grouping<T: Real>(m: &ComplexMatrix<T>, shape: &SystemShape) -> Result<ComplexMatrix<T>> {
    permute_subsystems(m, &shape.dims(), &[0, 2, 1, 3])
}

/// `(A A') ⊗ (B B')` → `A, B, A', B'`.
pub fn from_local_grouping<T: Real>(m: &ComplexMatrix<T>, shape: &SystemShape) -> Result<ComplexMatrix<T>> {
    permute_subsystems(m, &shape.local_dims(), &[0, 2, 1, 3])
}

/// Transpose on the subsystem at position `which`.
pub fn partial_transpose_dims<T: Real>(
    rho: &ComplexMatrix<T>,
    dims: &[usize],
    which: usize,
) -> Result<ComplexMatrix<T>> {
    let n = check_dims(rho, dims)?;
    if which >= dims.len() {
        return Err(Error::Shape(format!("no subsystem at position {which}")));
    }
    let mut di = vec![0; dims.len()];
    let mut dj = vec![0; dims.len()];
    let mut out = ComplexMatrix::<T>::zeros(n, n);
    for i in 0..n {
        digits(i, dims, &mut di);
        for j in 0..n {
            digits(j, dims, &mut dj);
            std::mem::swap(&mut di[which], &mut dj[which]);
            let ii = compose(di.iter().copied().zip(dims.iter().copied()));
            let jj = compose(dj.iter().copied().zip(dims.iter().copied()));
            std::mem::swap(&mut di[which], &mut dj[which]);
            out[(ii, jj)] = rho[(i, j)];
        }
    }
    Ok(out)
}

pub fn partial_transpose<T: Real>(
    rho: &ComplexMatrix<T>,
    shape: &SystemShape,
    subsystem: Subsystem,
) -> Result<ComplexMatrix<T>> {
    partial_transpose_dims(rho, &shape.dims(), subsystem.index())
}

/// Sorted (descending) eigenvalues and matching eigenvector columns of a
/// Hermitian matrix; the input is symmetrized before diagonalization.
pub fn eigh<T: Real>(m: &ComplexMatrix<T>) -> Result<(Vec<T>, ComplexMatrix<T>)> {
    let n = require_square(m)?;
    let herm = (m + m.adjoint()) * Complex::new(T::lit(0.5), T::zero());
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::<T>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

pub fn min_eigenvalue<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    let (values, _) = eigh(m)?;
    values
        .last()
        .copied()
        .ok_or_else(|| Error::Shape("empty matrix".into()))
}

/// Trace distance ½‖A − B‖₁ between Hermitian operators.
pub fn trace_distance<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    let (values, _) = eigh(&(a - b))?;
    Ok(values.iter().fold(T::zero(), |acc, v| acc + v.abs()) * T::lit(0.5))
}

/// An eigenvalue together with the projector onto its (possibly degenerate)
/// eigenspace.
#[derive(Clone, Debug)]
pub struct EigenGroup<T: Real = f64> {
    pub value: T,
    pub projector: ComplexMatrix<T>,
    pub rank: usize,
}

/// A Hermitian matrix with its spectral decomposition, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct HermitianOperator<T: Real = f64> {
    matrix: ComplexMatrix<T>,
    groups: Vec<EigenGroup<T>>,
}

impl<T: Real> HermitianOperator<T> {
    /// Diagonalizes with the default degeneracy tolerance.
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        eig_hermitian(&matrix, T::DEGENERACY_TOL)
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn groups(&self) -> &[EigenGroup<T>] {
        &self.groups
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn values(&self) -> Vec<T> {
        self.groups.iter().map(|g| g.value).collect()
    }

    /// Σ λ P over the eigen groups.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let n = self.dim();
        self.groups.iter().fold(ComplexMatrix::<T>::zeros(n, n), |acc, g| {
            acc + &g.projector * Complex::new(g.value, T::zero())
        })
    }
}

/// Spectral decomposition of a Hermitian matrix. Eigenvalues closer than
/// `degeneracy_tol` times the spectral radius share one projector.
pub fn eig_hermitian<T: Real>(m: &ComplexMatrix<T>, degeneracy_tol: f64) -> Result<HermitianOperator<T>> {
    require_hermitian(m)?;
    let (values, vectors) = eigh(m)?;
    let n = values.len();
    let radius = values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let tol = T::lit(degeneracy_tol) * radius;

    let mut groups: Vec<EigenGroup<T>> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[start] - values[end] <= tol {
            end += 1;
        }
        let mut projector = ComplexMatrix::<T>::zeros(n, n);
        let mut sum = T::zero();
        for (k, &value) in values.iter().enumerate().take(end).skip(start) {
            let v = vectors.column(k);
            projector += v * v.adjoint();
            sum += value;
        }
        let rank = end - start;
        groups.push(EigenGroup {
            value: sum / T::from_usize(rank).unwrap(),
            projector,
            rank,
        });
        start = end;
    }
    Ok(HermitianOperator { matrix: m.clone(), groups })
}

/// A trace-orthonormal basis of Hermitian operators on a `dim`-dimensional
/// space.
#[derive(Clone, Debug)]
pub struct OperatorBasis<T: Real = f64> {
    pub dim: usize,
    pub elements: Vec<ComplexMatrix<T>>,
}

impl<T: Real> OperatorBasis<T> {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Gram matrix Tr(O_i O_j).
    pub fn gram(&self) -> ComplexMatrix<T> {
        let k = self.len();
        ComplexMatrix::from_fn(k, k, |i, j| {
            hs_inner(&self.elements[i], &self.elements[j]).expect("basis elements share a shape")
        })
    }

    /// Real expansion coefficients Tr(O_j M) of a Hermitian `m`.
    pub fn coefficients(&self, m: &ComplexMatrix<T>) -> Result<Vec<T>> {
        require_dim(m, self.dim)?;
        self.elements
            .iter()
            .map(|o| hs_inner(o, m).map(|z| z.re))
            .collect()
    }

    pub fn combine(&self, coeffs: &[T]) -> ComplexMatrix<T> {
        self.elements
            .iter()
            .zip(coeffs)
            .fold(ComplexMatrix::<T>::zeros(self.dim, self.dim), |acc, (o, &s)| {
                acc + o * Complex::new(s, T::zero())
            })
    }
}

/// Generalized Gell-Mann basis normalized to Tr(O_i O_j) = δ_ij.
///
/// Order: I/√D; symmetric off-diagonals (|j⟩⟨k| + |k⟩⟨j|)/√2 for j < k;
/// antisymmetric off-diagonals (−i|j⟩⟨k| + i|k⟩⟨j|)/√2 for j < k; traceless
/// diagonals. For D = 2 this is the Pauli basis I, X, Y, Z over √2.
pub fn hermitian_basis<T: Real>(dim: usize) -> OperatorBasis<T> {
    let mut elements = Vec::with_capacity(dim * dim);
    let zero = ComplexMatrix::<T>::zeros(dim, dim);
    let r = T::lit(1.0 / 2f64.sqrt());

    elements.push(identity::<T>(dim) * Complex::new(T::lit(1.0 / (dim as f64).sqrt()), T::zero()));
    for j in 0..dim {
        for k in j + 1..dim {
            let mut m = zero.clone();
            m[(j, k)] = Complex::new(r, T::zero());
            m[(k, j)] = Complex::new(r, T::zero());
            elements.push(m);
        }
    }
    for j in 0..dim {
        for k in j + 1..dim {
            let mut m = zero.clone();
            m[(j, k)] = Complex::new(T::zero(), -r);
            m[(k, j)] = Complex::new(T::zero(), r);
            elements.push(m);
        }
    }
    for l in 1..dim {
        let norm = T::lit(1.0 / ((l * (l + 1)) as f64).sqrt());
        let mut m = zero.clone();
        for k in 0..l {
            m[(k, k)] = Complex::new(norm, T::zero());
        }
        m[(l, l)] = Complex::new(-T::from_usize(l).unwrap() * norm, T::zero());
        elements.push(m);
    }
    OperatorBasis { dim, elements }
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the phase
/// of R's diagonal folded back into Q.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix<T> {
    let scale = 1.0 / 2f64.sqrt();
    let ginibre = ComplexMatrix::<T>::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..dim {
        let diag = r[(k, k)];
        let norm = cabs(diag);
        let phase = if norm > T::zero() {
            diag / Complex::new(norm, T::zero())
        } else {
            Complex::new(T::one(), T::zero())
        };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Uniformly random pure state of dimension `dim`.
pub fn random_pure_state<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector<T> {
    let v = StateVector::<T>::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let n = v.norm();
    v / Complex::new(n, T::zero())
}

/// Random full-rank density operator (Hilbert–Schmidt measure).
pub fn random_density<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix<T> {
    let g = ComplexMatrix::<T>::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

/// Random Hermitian matrix with standard normal entries.
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix<T> {
    let g = ComplexMatrix::<T>::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    (&g + g.adjoint()) * Complex::new(T::lit(0.5), T::zero())
}

pub fn projector<T: Real>(v: &StateVector<T>) -> ComplexMatrix<T> {
    v * v.adjoint()
}

pub fn max_abs_diff<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max(cabs(x - y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type M = ComplexMatrix<f64>;

    fn close(a: &M, b: &M, tol: f64) -> bool {
        a.shape() == b.shape() && max_abs_diff(a, b) <= tol
    }

    #[test]
    fn kron_of_paulis() {
        assert!(close(&kron(&identity(2), &identity(2)), &identity(4), 0.0));
        let xx = kron(&pauli_x::<f64>(), &pauli_x());
        for i in 0..4 {
            for j in 0..4 {
                let want = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(xx[(i, j)], Complex::new(want, 0.0));
            }
        }
        let zz = kron(&pauli_z::<f64>(), &pauli_z());
        let diag: Vec<f64> = (0..4).map(|i| zz[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn kron_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: M = random_hermitian(2, &mut rng);
        let b: M = random_hermitian(3, &mut rng);
        let c: M = random_hermitian(2, &mut rng);
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        assert!(close(&left, &right, 1e-14));
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let mut phi = StateVector::<f64>::zeros(4);
        phi[0] = Complex::new(0.5f64.sqrt(), 0.0);
        phi[3] = Complex::new(0.5f64.sqrt(), 0.0);
        let rho = projector(&phi);
        let reduced = partial_trace_dims(&rho, &[2, 2], &[0]).unwrap();
        assert!(close(&reduced, &(identity::<f64>(2) * Complex::new(0.5, 0.0)), 1e-15));
    }

    /// Index-contraction oracle written directly from the definition.
    fn brute_trace_out_second(rho: &M, da: usize, db: usize) -> M {
        let mut out = M::zeros(da, da);
        for i in 0..da {
            for j in 0..da {
                for k in 0..db {
                    out[(i, j)] += rho[(i * db + k, j * db + k)];
                }
            }
        }
        out
    }

    #[test]
    fn partial_trace_matches_contraction_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ra: M = random_density(3, &mut rng);
        let rb: M = random_density(2, &mut rng);
        let joint = kron(&ra, &rb);
        let ours = partial_trace_dims(&joint, &[3, 2], &[0]).unwrap();
        assert!(close(&ours, &brute_trace_out_second(&joint, 3, 2), 1e-14));
        assert!(close(&ours, &ra, 1e-12));
    }

    #[test]
    fn partial_trace_keep_all_is_identity_map() {
        let shape = SystemShape::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho: M = random_density(16, &mut rng);
        let all = [Subsystem::A, Subsystem::B, Subsystem::APrime, Subsystem::BPrime];
        assert!(close(&partial_trace(&rho, &shape, &all).unwrap(), &rho, 0.0));
        let kept = partial_trace(&rho, &shape, &[Subsystem::B]).unwrap();
        assert!((kept.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_input() {
        let shape = SystemShape::new(2, 1).unwrap();
        let rho = identity::<f64>(8);
        assert!(partial_trace(&rho, &shape, &[Subsystem::A]).is_err());
        assert!(partial_trace_dims(&identity::<f64>(4), &[2, 2], &[]).is_err());
    }

    #[test]
    fn local_grouping_round_trip() {
        let shape = SystemShape::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ops: Vec<M> = vec![
            random_hermitian(2, &mut rng),
            random_hermitian(2, &mut rng),
            random_hermitian(3, &mut rng),
            random_hermitian(3, &mut rng),
        ];
        let canonical = kron_all(&[&ops[0], &ops[1], &ops[2], &ops[3]]);
        let local = to_local_grouping(&canonical, &shape).unwrap();
        let expected = kron_all(&[&ops[0], &ops[2], &ops[1], &ops[3]]);
        assert!(close(&local, &expected, 1e-13));
        assert!(close(&from_local_grouping(&local, &shape).unwrap(), &canonical, 0.0));
    }

    #[test]
    fn eig_of_pauli_z_and_identity() {
        let op = eig_hermitian(&pauli_z::<f64>(), 1e-9).unwrap();
        assert_eq!(op.values(), vec![1.0, -1.0]);
        assert!(close(&op.groups()[0].projector, &basis_projector(2, 0), 1e-14));
        assert!(close(&op.groups()[1].projector, &basis_projector(2, 1), 1e-14));

        let id = eig_hermitian(&identity::<f64>(4), 1e-9).unwrap();
        assert_eq!(id.groups().len(), 1);
        assert_eq!(id.groups()[0].rank, 4);
        assert!(close(&id.groups()[0].projector, &identity(4), 1e-12));
    }

    #[test]
    fn eig_of_xx_has_two_rank_two_projectors() {
        let xx = kron(&pauli_x::<f64>(), &pauli_x());
        let op = eig_hermitian(&xx, 1e-9).unwrap();
        assert_eq!(op.groups().len(), 2);
        assert!((op.groups()[0].value - 1.0).abs() < 1e-12);
        assert!((op.groups()[1].value + 1.0).abs() < 1e-12);
        assert_eq!(op.groups()[0].rank, 2);
        // oracle: P± = (I ± XX)/2
        let p_plus = (identity::<f64>(4) + &xx) * Complex::new(0.5, 0.0);
        assert!(close(&op.groups()[0].projector, &p_plus, 1e-12));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = identity::<f64>(2);
        m[(0, 1)] = Complex::new(1.0, 0.0);
        assert!(matches!(eig_hermitian(&m, 1e-9), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_reconstruction_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..100 {
            let dim = 1 + k % 16;
            let m: M = random_hermitian(dim, &mut rng);
            let op = eig_hermitian(&m, 1e-9).unwrap();
            assert!(max_abs_diff(&op.reconstruct(), &m) <= 1e-9);
            let sum = op.groups().iter().fold(M::zeros(dim, dim), |acc, g| acc + &g.projector);
            assert!(close(&sum, &identity(dim), 1e-9));
        }
    }

    #[test]
    fn basis_is_trace_orthonormal_and_spanning() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for dim in 1..=6 {
            let basis = hermitian_basis::<f64>(dim);
            assert_eq!(basis.len(), dim * dim);
            assert!(close(&basis.gram(), &identity(dim * dim), 1e-10));
            for o in &basis.elements {
                assert!(hermiticity_deviation(o) == 0.0);
            }
            let m: M = random_hermitian(dim, &mut rng);
            let coeffs = basis.coefficients(&m).unwrap();
            assert!(max_abs_diff(&basis.combine(&coeffs), &m) <= 1e-9);
        }
        let b1 = hermitian_basis::<f64>(1);
        assert_eq!(b1.elements[0][(0, 0)], Complex::new(1.0, 0.0));
    }

    #[test]
    fn qubit_basis_is_scaled_paulis() {
        let basis = hermitian_basis::<f64>(2);
        let s = Complex::new(0.5f64.sqrt(), 0.0);
        let want = [identity::<f64>(2) * s, pauli_x::<f64>() * s, pauli_y::<f64>() * s, pauli_z::<f64>() * s];
        for (got, want) in basis.elements.iter().zip(&want) {
            assert!(close(got, want, 1e-15));
        }
    }

    #[test]
    fn hs_norms_and_inner_products() {
        assert!((hs_norm(&identity::<f64>(5)) - 5f64.sqrt()).abs() < 1e-15);
        for a in 1..=3 {
            let op = kron_all(&[&pauli_x::<f64>(), &pauli_x(), &identity(a * a)]);
            assert!((hs_norm(&op) - 2.0 * a as f64).abs() < 1e-12);
        }
        assert_eq!(hs_inner(&pauli_x::<f64>(), &pauli_z()).unwrap(), Complex::new(0.0, 0.0));
        assert!(hs_inner(&identity::<f64>(2), &identity(3)).is_err());
    }

    #[test]
    fn hs_norm_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2, 4, 7] {
            let m: M = random_hermitian(dim, &mut rng);
            let u: M = haar_unitary(dim, &mut rng);
            let conj = &u * &m * u.adjoint();
            assert!((hs_norm(&conj) - hs_norm(&m)).abs() <= 1e-9);
        }
    }

    #[test]
    fn partial_transpose_diagnostics() {
        let mut phi = StateVector::<f64>::zeros(4);
        phi[0] = Complex::new(0.5f64.sqrt(), 0.0);
        phi[3] = Complex::new(0.5f64.sqrt(), 0.0);
        let rho = projector(&phi);
        let pt = partial_transpose_dims(&rho, &[2, 2], 1).unwrap();
        assert!((min_eigenvalue(&pt).unwrap() + 0.5).abs() < 1e-12);
        assert!(close(&partial_transpose_dims(&pt, &[2, 2], 1).unwrap(), &rho, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let prod = kron(&random_density::<f64, _>(2, &mut rng), &random_density(2, &mut rng));
        assert!(min_eigenvalue(&partial_transpose_dims(&prod, &[2, 2], 1).unwrap()).unwrap() >= -1e-12);

        let mixed = identity::<f64>(4) * Complex::new(0.25, 0.0);
        assert!((min_eigenvalue(&mixed).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn haar_unitary_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u1: M = haar_unitary(1, &mut rng);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-14);
        for dim in 1..=9 {
            let u: M = haar_unitary(dim, &mut rng);
            assert!(unitarity_deviation(&u) <= 1e-10);
        }
        let a: M = haar_unitary(4, &mut ChaCha8Rng::seed_from_u64(42));
        let b: M = haar_unitary(4, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn single_precision_instantiation() {
        let basis = hermitian_basis::<f32>(3);
        assert!(max_abs_diff(&basis.gram(), &identity::<f32>(9)) < 1e-6);
        let xx = kron(&pauli_x::<f32>(), &pauli_x());
        let op = HermitianOperator::new(xx).unwrap();
        assert_eq!(op.groups().len(), 2);
    }
}
