//! Maximally entangled states, twistings and private states.
//!
//! A twisting is a unitary that is block diagonal in the computational basis of
//! the key systems: `U = Σ_ij |ij⟩⟨ij| ⊗ U_ij`, each `U_ij` acting on the
//! shield A'B'. A private state is `U (Φ_d ⊗ ρ_{A'B'}) U†`.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, eigh, haar_unitary, identity, kron, require_unitary, trace_distance, validate_density,
    ComplexMatrix, StateVector, SystemShape,
};
use crate::scalar::Real;
use crate::wire;

/// |Φ_d⟩ = d^{-1/2} Σ_i |i⟩|i⟩ on A ⊗ B.
pub fn max_entangled<T: Real>(d: usize) -> Result<StateVector<T>> {
    if d < 2 {
        return Err(Error::Shape(format!("maximally entangled state needs d >= 2, got {d}")));
    }
    let amp = Complex::new(T::lit(1.0 / (d as f64).sqrt()), T::zero());
    let mut v = StateVector::<T>::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    Ok(v)
}

pub fn max_entangled_density<T: Real>(d: usize) -> Result<ComplexMatrix<T>> {
    Ok(linalg::projector(&max_entangled::<T>(d)?))
}

/// The blocks `U_ij` of a twisting, stored row-major in `(i, j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TwistingRepr<T>", into = "TwistingRepr<T>")]
pub struct Twisting<T: Real = f64> {
    shape: SystemShape,
    blocks: Vec<ComplexMatrix<T>>,
}

#[derive(Serialize, Deserialize)]
struct TwistingRepr<T: Real> {
    shape: SystemShape,
    #[serde(with = "wire::matrix_list")]
    blocks: Vec<ComplexMatrix<T>>,
}

impl<T: Real> TryFrom<TwistingRepr<T>> for Twisting<T> {
    type Error = Error;

    fn try_from(repr: TwistingRepr<T>) -> Result<Self> {
        Twisting::from_blocks(SystemShape::new(repr.shape.d, repr.shape.a)?, repr.blocks)
    }
}

impl<T: Real> From<Twisting<T>> for TwistingRepr<T> {
    fn from(t: Twisting<T>) -> Self {
        TwistingRepr { shape: t.shape, blocks: t.blocks }
    }
}

impl<T: Real> Twisting<T> {
    /// Every block the identity.
    pub fn identity(shape: SystemShape) -> Self {
        let blocks = vec![identity::<T>(shape.d_prime()); shape.key_dim()];
        Twisting { shape, blocks }
    }

    /// Independent Haar-random block for every `(i, j)`.
    pub fn random<R: Rng + ?Sized>(shape: SystemShape, rng: &mut R) -> Self {
        let blocks = (0..shape.key_dim())
            .map(|_| haar_unitary::<T, R>(shape.d_prime(), rng))
            .collect();
        Twisting { shape, blocks }
    }

    pub fn from_blocks(shape: SystemShape, blocks: Vec<ComplexMatrix<T>>) -> Result<Self> {
        if blocks.len() != shape.key_dim() {
            return Err(Error::Config(format!(
                "twisting needs {} blocks, got {}",
                shape.key_dim(),
                blocks.len()
            )));
        }
        for b in &blocks {
            if b.nrows() != shape.d_prime() || b.ncols() != shape.d_prime() {
                return Err(Error::DimensionMismatch { expected: shape.d_prime(), got: b.nrows() });
            }
            require_unitary(b)?;
        }
        Ok(Twisting { shape, blocks })
    }

    /// Twisting with a trivial shield (a = 1): each block is the phase e^{iθ_ij}.
    pub fn from_phases(d: usize, phases: &[f64]) -> Result<Self> {
        let shape = SystemShape::new(d, 1)?;
        let blocks = phases
            .iter()
            .map(|&th| ComplexMatrix::from_element(1, 1, Complex::new(T::lit(th.cos()), T::lit(th.sin()))))
            .collect();
        Self::from_blocks(shape, blocks)
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn blocks(&self) -> &[ComplexMatrix<T>] {
        &self.blocks
    }

    pub fn block(&self, i: usize, j: usize) -> &ComplexMatrix<T> {
        &self.blocks[i * self.shape.d + j]
    }

    /// The full unitary on A ⊗ B ⊗ A' ⊗ B'. In canonical order the key index
    /// `(i, j)` is the most significant, so the result is block diagonal.
    pub fn assemble(&self) -> ComplexMatrix<T> {
        let da = self.shape.d_prime();
        let n = self.shape.total_dim();
        let mut u = ComplexMatrix::<T>::zeros(n, n);
        for (k, b) in self.blocks.iter().enumerate() {
            u.view_mut((k * da, k * da), (da, da)).copy_from(b);
        }
        u
    }
}

/// Validates the blocks and returns `Σ_ij |ij⟩⟨ij| ⊗ U_ij`.
pub fn assemble_twisting<T: Real>(t: &Twisting<T>) -> Result<ComplexMatrix<T>> {
    let checked = Twisting::from_blocks(t.shape, t.blocks.clone())?;
    Ok(checked.assemble())
}

/// A private state together with the ingredients that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct PrivateState<T: Real = f64> {
    pub shape: SystemShape,
    #[serde(with = "wire::matrix")]
    pub gamma: ComplexMatrix<T>,
    pub twisting: Twisting<T>,
    #[serde(with = "wire::matrix")]
    pub ancilla: ComplexMatrix<T>,
}

/// Builds `U (Φ_d ⊗ ρ_{A'B'}) U†` from a shield state and a twisting.
pub fn make_private_state<T: Real>(ancilla: ComplexMatrix<T>, twisting: Twisting<T>) -> Result<PrivateState<T>> {
    let shape = twisting.shape();
    if ancilla.nrows() != shape.d_prime() || ancilla.ncols() != shape.d_prime() {
        return Err(Error::DimensionMismatch { expected: shape.d_prime(), got: ancilla.nrows() });
    }
    validate_density(&ancilla, T::VALIDATION_TOL)?;
    let phi = max_entangled_density::<T>(shape.d)?;
    let u = twisting.assemble();
    let gamma = &u * kron(&phi, &ancilla) * u.adjoint();
    Ok(PrivateState { shape, gamma, twisting, ancilla })
}

impl<T: Real> PrivateState<T> {
    pub fn key_correlation(&self) -> KeyDistribution<T> {
        key_correlation(&self.gamma, &self.shape).expect("private state has a consistent shape")
    }

    pub fn verify_privacy(&self) -> Result<PrivacyReport<T>> {
        verify_privacy(&self.gamma, &self.shape)
    }
}

/// Shield state I/a² on A'B'.
pub fn maximally_mixed<T: Real>(dim: usize) -> ComplexMatrix<T> {
    identity::<T>(dim) * Complex::new(T::lit(1.0 / dim as f64), T::zero())
}

/// λρ + (1 − λ) I/D.
pub fn white_noise_mixture<T: Real>(rho: &ComplexMatrix<T>, lambda: f64) -> ComplexMatrix<T> {
    let n = rho.nrows();
    rho * Complex::new(T::lit(lambda), T::zero()) + maximally_mixed::<T>(n) * Complex::new(T::lit(1.0 - lambda), T::zero())
}

/// `Σ_i (1/d) |ii⟩⟨ii| ⊗ |i⟩⟨i|_{A'} ⊗ |0⟩⟨0|_{B'}`: perfectly correlated key
/// whose value is copied into the shield. Needs `a >= d`.
pub fn key_recording_state<T: Real>(shape: &SystemShape) -> Result<ComplexMatrix<T>> {
    if shape.a < shape.d {
        return Err(Error::Shape(format!("key recording needs a >= d ({} < {})", shape.a, shape.d)));
    }
    let n = shape.total_dim();
    let mut rho = ComplexMatrix::<T>::zeros(n, n);
    let w = Complex::new(T::lit(1.0 / shape.d as f64), T::zero());
    for i in 0..shape.d {
        let idx = ((i * shape.d + i) * shape.a + i) * shape.a;
        rho[(idx, idx)] = w;
    }
    Ok(rho)
}

/// Joint distribution of computational-basis outcomes on AB, `p[i * d + j]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyDistribution<T: Real = f64> {
    pub d: usize,
    pub probs: Vec<T>,
}

impl<T: Real> KeyDistribution<T> {
    pub fn p(&self, i: usize, j: usize) -> T {
        self.probs[i * self.d + j]
    }

    /// Probability that Alice's and Bob's outcomes differ.
    pub fn error_probability(&self) -> T {
        let mut e = T::zero();
        for i in 0..self.d {
            for j in 0..self.d {
                if i != j {
                    e += self.p(i, j);
                }
            }
        }
        e
    }
}

/// `p(i, j) = ⟨ij| Tr_{A'B'} ρ |ij⟩`.
pub fn key_correlation<T: Real>(rho: &ComplexMatrix<T>, shape: &SystemShape) -> Result<KeyDistribution<T>> {
    if rho.nrows() != shape.total_dim() || rho.ncols() != shape.total_dim() {
        return Err(Error::DimensionMismatch { expected: shape.total_dim(), got: rho.nrows() });
    }
    let da = shape.d_prime();
    let probs = (0..shape.key_dim())
        .map(|k| (0..da).fold(T::zero(), |acc, s| acc + rho[(k * da + s, k * da + s)].re))
        .collect();
    Ok(KeyDistribution { d: shape.d, probs })
}

/// A purification of a density operator on (ABA'B') ⊗ E, E of dimension rank.
#[derive(Clone, Debug)]
pub struct PurifiedState<T: Real = f64> {
    pub system_dim: usize,
    pub env_dim: usize,
    /// Amplitudes indexed by `system * env_dim + env`.
    pub vector: StateVector<T>,
}

impl<T: Real> PurifiedState<T> {
    /// Tr_E |Ψ⟩⟨Ψ|.
    pub fn reduce(&self) -> ComplexMatrix<T> {
        let (n, e) = (self.system_dim, self.env_dim);
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..e).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + self.vector[i * e + k] * self.vector[j * e + k].conj()
            })
        })
    }

    /// Unnormalized environment state after projecting the system onto basis
    /// vectors in `indices`.
    pub fn environment_given(&self, indices: impl Iterator<Item = usize>) -> ComplexMatrix<T> {
        let e = self.env_dim;
        let mut out = ComplexMatrix::<T>::zeros(e, e);
        for s in indices {
            let w = self.vector.rows(s * e, e);
            out += w * w.adjoint();
        }
        out
    }
}

/// Schmidt-form purification `Σ_k √λ_k |ψ_k⟩|k⟩_E` keeping eigenvalues above
/// the pruning tolerance.
pub fn purify<T: Real>(rho: &ComplexMatrix<T>) -> Result<PurifiedState<T>> {
    let (values, vectors) = eigh(rho)?;
    let cutoff = T::lit(T::PRUNE_TOL);
    let kept: Vec<usize> = (0..values.len()).filter(|&k| values[k] > cutoff).collect();
    if kept.is_empty() {
        return Err(Error::InvalidDensity("operator has no positive eigenvalue".into()));
    }
    let n = rho.nrows();
    let e = kept.len();
    let mut vector = StateVector::<T>::zeros(n * e);
    for (col, &k) in kept.iter().enumerate() {
        let amp = Complex::new(values[k].sqrt(), T::zero());
        for s in 0..n {
            vector[s * e + col] = vectors[(s, k)] * amp;
        }
    }
    Ok(PurifiedState { system_dim: n, env_dim: e, vector })
}

#[derive(Clone, Debug, Serialize)]
pub struct PrivacyReport<T: Real = f64> {
    /// Largest trace distance between Eve's states conditioned on two
    /// different correlated key outcomes.
    pub max_distance: T,
    /// Key values whose correlated outcome `(k, k)` has positive probability.
    pub included_keys: Vec<usize>,
    /// Key values dropped because `(k, k)` never occurs.
    pub excluded_keys: Vec<usize>,
    pub key_probabilities: Vec<T>,
    pub environment_dim: usize,
}

/// Purifies ρ to Eve, measures AB in the computational basis, and compares
/// Eve's normalized conditional states for the correlated outcomes `(k, k)`.
pub fn verify_privacy<T: Real>(rho: &ComplexMatrix<T>, shape: &SystemShape) -> Result<PrivacyReport<T>> {
    if rho.nrows() != shape.total_dim() {
        return Err(Error::DimensionMismatch { expected: shape.total_dim(), got: rho.nrows() });
    }
    let purified = purify(rho)?;
    let da = shape.d_prime();
    let floor = T::lit(T::PRUNE_TOL);

    let mut conditionals = Vec::new();
    let mut included_keys = Vec::new();
    let mut excluded_keys = Vec::new();
    let mut key_probabilities = Vec::new();
    for k in 0..shape.d {
        let key_index = k * shape.d + k;
        let eve = purified.environment_given((0..da).map(|s| key_index * da + s));
        let p = eve.trace().re;
        key_probabilities.push(p);
        if p > floor {
            conditionals.push(eve / Complex::new(p, T::zero()));
            included_keys.push(k);
        } else {
            excluded_keys.push(k);
        }
    }

    let mut max_distance = T::zero();
    for i in 0..conditionals.len() {
        for j in i + 1..conditionals.len() {
            max_distance = max_distance.max(trace_distance(&conditionals[i], &conditionals[j])?);
        }
    }
    Ok(PrivacyReport {
        max_distance,
        included_keys,
        excluded_keys,
        key_probabilities,
        environment_dim: purified.env_dim,
    })
}
