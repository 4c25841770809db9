//! The twisted phase-error operator and its expansion into locally
//! measurable product observables.
//!
//! An operator Σ on the joint space is regrouped to `(A A') ⊗ (B B')` and
//! projected onto `{O_ja ⊗ O_jb}`, where `{O_j}` is the trace-orthonormal
//! Hermitian basis of [`hermitian_basis`]. Because both factors are Hermitian
//! and trace-orthonormal, the coefficients are real and satisfy Parseval.

use nalgebra as na;
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    from_local_grouping, hermitian_basis, hs_norm, identity, kron, kron_all, pauli_x, pauli_z,
    require_hermitian, to_local_grouping, ComplexMatrix, HermitianOperator, OperatorBasis,
    SystemShape,
};
use crate::private_states::Twisting;
use crate::scalar::Real;

/// σ_x ⊗ σ_x ⊗ I_{A'B'} for a qubit key.
pub fn phase_parity_operator<T: Real>(shape: &SystemShape) -> Result<ComplexMatrix<T>> {
    require_qubit_key(shape)?;
    Ok(kron_all(&[&pauli_x::<T>(), &pauli_x(), &identity(shape.d_prime())]))
}

/// σ_z ⊗ σ_z ⊗ I_{A'B'} for a qubit key.
pub fn bit_parity_operator<T: Real>(shape: &SystemShape) -> Result<ComplexMatrix<T>> {
    require_qubit_key(shape)?;
    Ok(kron_all(&[&pauli_z::<T>(), &pauli_z(), &identity(shape.d_prime())]))
}

fn require_qubit_key(shape: &SystemShape) -> Result<()> {
    if shape.d != 2 {
        return Err(Error::Shape(format!(
            "Pauli parity operators need a qubit key (d = 2), got d = {}",
            shape.d
        )));
    }
    Ok(())
}

/// Σ_x = U (σ_x ⊗ σ_x ⊗ I) U†.
pub fn twisted_phase_operator<T: Real>(twisting: &Twisting<T>) -> Result<HermitianOperator<T>> {
    let shape = twisting.shape();
    let u = twisting.assemble();
    let sigma = &u * phase_parity_operator::<T>(&shape)? * u.adjoint();
    // conjugation can leave rounding-level anti-Hermitian residue
    let sigma = (&sigma + sigma.adjoint()) * Complex::new(T::lit(0.5), T::zero());
    HermitianOperator::new(sigma)
}

/// Tr(Σρ).
pub fn expectation<T: Real>(sigma: &ComplexMatrix<T>, rho: &ComplexMatrix<T>) -> Result<T> {
    if sigma.shape() != rho.shape() {
        return Err(Error::DimensionMismatch { expected: sigma.nrows(), got: rho.nrows() });
    }
    // Tr(Σρ) = Σ_ij Σ_ij ρ_ji
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..sigma.nrows() {
        for j in 0..sigma.ncols() {
            acc += sigma[(i, j)] * rho[(j, i)];
        }
    }
    Ok(acc.re)
}

/// One product term `s · O_ja ⊗ O_jb`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Term<T: Real = f64> {
    pub ja: usize,
    pub jb: usize,
    #[serde(rename = "s")]
    pub coefficient: T,
}

/// Which product terms an estimation round measures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermSelection {
    /// Only terms with |s| above the pruning threshold.
    #[default]
    Nonzero,
    /// All t² terms, zero coefficients included.
    All,
}

#[derive(Clone, Debug)]
pub struct ProductDecomposition<T: Real = f64> {
    pub shape: SystemShape,
    pub basis_a: OperatorBasis<T>,
    pub basis_b: OperatorBasis<T>,
    /// `coefficients[(ja, jb)]`, t × t.
    pub coefficients: na::DMatrix<T>,
    pub nonzero_terms: Vec<Term<T>>,
    pub prune_tol: f64,
}

/// Coefficients `s_{ja jb} = Tr[(O_ja ⊗ O_jb) Σ']`, Σ' being Σ regrouped to
/// `(A A') ⊗ (B B')`.
pub fn decompose_product<T: Real>(sigma: &ComplexMatrix<T>, shape: &SystemShape) -> Result<ProductDecomposition<T>> {
    decompose_product_with_tol(sigma, shape, T::PRUNE_TOL)
}

pub fn decompose_product_with_tol<T: Real>(
    sigma: &ComplexMatrix<T>,
    shape: &SystemShape,
    prune_tol: f64,
) -> Result<ProductDecomposition<T>> {
    let n = shape.total_dim();
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sigma.nrows() });
    }
    require_hermitian(sigma)?;
    let dl = shape.local_dim();
    let local = to_local_grouping(sigma, shape)?;

    // Realignment R[(i,k),(j,l)] = Σ'[(k,l),(i,j)], so that
    // s_ab = vec(O_a)ᵀ R vec(O_b) with row-major vec.
    let dd = dl * dl;
    let realigned = ComplexMatrix::<T>::from_fn(dd, dd, |row, col| {
        let (i, k) = (row / dl, row % dl);
        let (j, l) = (col / dl, col % dl);
        local[(k * dl + l, i * dl + j)]
    });
    let basis_a = hermitian_basis::<T>(dl);
    let basis_b = hermitian_basis::<T>(dl);
    let vec_rows = |basis: &OperatorBasis<T>| {
        ComplexMatrix::<T>::from_fn(basis.len(), dd, |r, c| basis.elements[r][(c / dl, c % dl)])
    };
    let va = vec_rows(&basis_a);
    let vb = vec_rows(&basis_b);
    let s = va * realigned * vb.transpose();

    let t = shape.t();
    let scale = hs_norm(sigma).max(T::one());
    let mut coefficients = na::DMatrix::<T>::zeros(t, t);
    let mut nonzero_terms = Vec::new();
    for ja in 0..t {
        for jb in 0..t {
            let z = s[(ja, jb)];
            if z.im.abs() > T::lit(T::VALIDATION_TOL) * scale {
                return Err(Error::Numerical(format!(
                    "product coefficient ({ja}, {jb}) has imaginary part {:e}",
                    z.im.as_f64()
                )));
            }
            coefficients[(ja, jb)] = z.re;
            if z.re.abs() > T::lit(prune_tol) {
                nonzero_terms.push(Term { ja, jb, coefficient: z.re });
            }
        }
    }
    Ok(ProductDecomposition { shape: *shape, basis_a, basis_b, coefficients, nonzero_terms, prune_tol })
}

impl<T: Real> ProductDecomposition<T> {
    pub fn t(&self) -> usize {
        self.shape.t()
    }

    /// Terms measured under the given selection, in `(ja, jb)` order.
    pub fn terms(&self, selection: TermSelection) -> Vec<Term<T>> {
        match selection {
            TermSelection::Nonzero => self.nonzero_terms.clone(),
            TermSelection::All => {
                let t = self.t();
                (0..t * t)
                    .map(|k| {
                        let (ja, jb) = (k / t, k % t);
                        Term { ja, jb, coefficient: self.coefficients[(ja, jb)] }
                    })
                    .collect()
            }
        }
    }

    /// Σ s O_ja ⊗ O_jb in the `(A A') ⊗ (B B')` grouping.
    pub fn reconstruct_local(&self) -> ComplexMatrix<T> {
        let n = self.shape.total_dim();
        let t = self.t();
        let mut out = ComplexMatrix::<T>::zeros(n, n);
        for ja in 0..t {
            for jb in 0..t {
                let s = self.coefficients[(ja, jb)];
                if s != T::zero() {
                    out += kron(&self.basis_a.elements[ja], &self.basis_b.elements[jb]) * Complex::new(s, T::zero());
                }
            }
        }
        out
    }

    /// The reconstructed operator in canonical `A, B, A', B'` order.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        from_local_grouping(&self.reconstruct_local(), &self.shape).expect("shape is consistent")
    }

    /// Σ s².
    pub fn parseval_sum(&self) -> T {
        self.coefficients.iter().fold(T::zero(), |acc, &s| acc + s * s)
    }

    /// Σ s Tr[(O_ja ⊗ O_jb) ρ'] for ρ in canonical order.
    pub fn expectation(&self, rho: &ComplexMatrix<T>) -> Result<T> {
        let local = to_local_grouping(rho, &self.shape)?;
        let mut total = T::zero();
        for term in &self.nonzero_terms {
            let op = kron(&self.basis_a.elements[term.ja], &self.basis_b.elements[term.jb]);
            total += term.coefficient * expectation(&op, &local)?;
        }
        Ok(total)
    }

    pub fn summary(&self) -> DecompositionSummary {
        let t = self.t();
        DecompositionSummary {
            shape: self.shape,
            t,
            basis: "generalized Gell-Mann, trace-orthonormal".into(),
            coefficients: (0..t)
                .map(|ja| (0..t).map(|jb| self.coefficients[(ja, jb)].as_f64()).collect())
                .collect(),
            nonzero_terms: self
                .nonzero_terms
                .iter()
                .map(|term| Term { ja: term.ja, jb: term.jb, coefficient: term.coefficient.as_f64() })
                .collect(),
            parseval_sum: self.parseval_sum().as_f64(),
            prune_tol: self.prune_tol,
        }
    }
}

/// JSON form of a decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionSummary {
    pub shape: SystemShape,
    pub t: usize,
    pub basis: String,
    pub coefficients: Vec<Vec<f64>>,
    pub nonzero_terms: Vec<Term<f64>>,
    pub parseval_sum: f64,
    pub prune_tol: f64,
}
