//! Monte Carlo simulation of projective measurements and of the two ways of
//! estimating ⟨Σ⟩ on many copies: indirectly, through local product
//! observables measured group by group, and directly, by measuring Σ itself.
//!
//! Copies are never stored as an N-fold tensor state. A [`StateSource`] is a
//! mixture of i.i.d. sources: one component is drawn per trial, and every
//! copy of that trial is then an independent draw from the same single-copy
//! density. Such joint states are exactly permutation invariant.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{kron, to_local_grouping, validate_density, ComplexMatrix, HermitianOperator, SystemShape};
use crate::observables::{expectation, ProductDecomposition, Term, TermSelection};

type Matrix = ComplexMatrix<f64>;

const PROBABILITY_TOL: f64 = 1e-9;

/// Derives the seed of an independent stream (trial, sweep point, …) from a
/// master seed with a SplitMix64 finalizer.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Validates a raw outcome distribution: tiny negative rounding is clipped,
/// the total must be 1 within 1e-9.
fn checked_distribution(raw: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = raw.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_TOL || raw.iter().any(|&p| p < -PROBABILITY_TOL || !p.is_finite()) {
        return Err(Error::Numerical(format!(
            "outcome probabilities do not form a distribution (sum {total})"
        )));
    }
    Ok(raw.into_iter().map(|p| p.max(0.0) / total).collect())
}

/// A single measurement outcome: the eigen-group index and its eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub index: usize,
    pub value: f64,
}

/// Outcome distribution of a projective measurement on a fixed state,
/// computed once and then sampled.
#[derive(Clone, Debug)]
pub struct ProjectiveSampler {
    values: Vec<f64>,
    probs: Vec<f64>,
    dist: WeightedIndex<f64>,
}

impl ProjectiveSampler {
    /// p_l = Tr(P_l ρ).
    pub fn new(rho: &Matrix, obs: &HermitianOperator<f64>) -> Result<Self> {
        let raw = obs
            .groups()
            .iter()
            .map(|g| expectation(&g.projector, rho))
            .collect::<Result<Vec<_>>>()?;
        let probs = checked_distribution(raw)?;
        let dist = WeightedIndex::new(&probs).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(ProjectiveSampler { values: obs.values(), probs, dist })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        let index = self.dist.sample(rng);
        Outcome { index, value: self.values[index] }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }
}

/// One-shot projective measurement of `obs` on `rho`.
pub fn measure<R: Rng + ?Sized>(rho: &Matrix, obs: &HermitianOperator<f64>, rng: &mut R) -> Result<Outcome> {
    Ok(ProjectiveSampler::new(rho, obs)?.sample(rng))
}

/// Joint outcome distribution of Alice measuring `O_a` on AA' and Bob
/// measuring `O_b` on BB' of the same copy.
#[derive(Clone, Debug)]
pub struct LocalPairSampler {
    values_a: Vec<f64>,
    values_b: Vec<f64>,
    joint: Vec<f64>,
    dist: WeightedIndex<f64>,
}

impl LocalPairSampler {
    /// `rho_local` must already be in `(A A') ⊗ (B B')` order.
    /// p(l_a, l_b) = Tr[(P_{l_a} ⊗ Q_{l_b}) ρ'].
    pub fn new(rho_local: &Matrix, op_a: &HermitianOperator<f64>, op_b: &HermitianOperator<f64>) -> Result<Self> {
        if op_a.dim() * op_b.dim() != rho_local.nrows() {
            return Err(Error::DimensionMismatch { expected: rho_local.nrows(), got: op_a.dim() * op_b.dim() });
        }
        let mut raw = Vec::with_capacity(op_a.groups().len() * op_b.groups().len());
        for ga in op_a.groups() {
            for gb in op_b.groups() {
                raw.push(expectation(&kron(&ga.projector, &gb.projector), rho_local)?);
            }
        }
        let joint = checked_distribution(raw)?;
        let dist = WeightedIndex::new(&joint).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(LocalPairSampler { values_a: op_a.values(), values_b: op_b.values(), joint, dist })
    }

    /// `(outcome_a, outcome_b)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Outcome, Outcome) {
        let k = self.dist.sample(rng);
        let nb = self.values_b.len();
        let (la, lb) = (k / nb, k % nb);
        (
            Outcome { index: la, value: self.values_a[la] },
            Outcome { index: lb, value: self.values_b[lb] },
        )
    }

    /// `joint[la * nb + lb]`.
    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn marginal_a(&self) -> Vec<f64> {
        let nb = self.values_b.len();
        self.joint.chunks(nb).map(|row| row.iter().sum()).collect()
    }

    /// E[value_a · value_b] = Tr[(O_a ⊗ O_b) ρ'].
    pub fn product_mean(&self) -> f64 {
        let nb = self.values_b.len();
        self.joint
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.values_a[k / nb] * self.values_b[k % nb])
            .sum()
    }
}

/// Samples local outcomes of `op_a` (on AA') and `op_b` (on BB') for a state
/// in canonical `A, B, A', B'` order.
pub fn measure_local_pair<R: Rng + ?Sized>(
    rho: &Matrix,
    shape: &SystemShape,
    op_a: &HermitianOperator<f64>,
    op_b: &HermitianOperator<f64>,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let local = to_local_grouping(rho, shape)?;
    let (a, b) = LocalPairSampler::new(&local, op_a, op_b)?.sample(rng);
    Ok((a.value, b.value))
}

/// Single-copy densities of a permutation-invariant many-copy source.
#[derive(Clone, Debug)]
pub enum SourceKind {
    Iid(Matrix),
    MixtureOfIid(Vec<(f64, Matrix)>),
}

#[derive(Clone, Debug)]
pub struct StateSource {
    shape: SystemShape,
    weights: Vec<f64>,
    states: Vec<Matrix>,
}

impl StateSource {
    pub fn new(shape: SystemShape, kind: SourceKind) -> Result<Self> {
        let (weights, states): (Vec<f64>, Vec<Matrix>) = match kind {
            SourceKind::Iid(rho) => (vec![1.0], vec![rho]),
            SourceKind::MixtureOfIid(components) => components.into_iter().unzip(),
        };
        if states.is_empty() {
            return Err(Error::Config("state source has no components".into()));
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("mixture weights {weights:?} are not a distribution")));
        }
        for rho in &states {
            if rho.nrows() != shape.total_dim() {
                return Err(Error::DimensionMismatch { expected: shape.total_dim(), got: rho.nrows() });
            }
            validate_density(rho, 1e-10)?;
        }
        Ok(StateSource { shape, weights, states })
    }

    pub fn iid(shape: SystemShape, rho: Matrix) -> Result<Self> {
        Self::new(shape, SourceKind::Iid(rho))
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn states(&self) -> &[Matrix] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Picks the mixture component used for every copy of one run.
    pub fn draw_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.states.len() == 1 {
            return 0;
        }
        WeightedIndex::new(&self.weights)
            .expect("weights validated at construction")
            .sample(rng)
    }
}

/// Empirical mean of one product term's group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TermAverage {
    pub ja: usize,
    pub jb: usize,
    pub coefficient: f64,
    pub mean: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndirectEstimate {
    /// Σ s · (group mean of products of local outcomes).
    pub value: f64,
    pub group_sizes: Vec<usize>,
    pub per_term: Vec<TermAverage>,
    /// Group (term position) of each copy, in copy order.
    pub assignment: Vec<usize>,
}

/// Local eigensystems for every measured product term.
#[derive(Clone, Debug)]
pub struct IndirectEstimator {
    shape: SystemShape,
    terms: Vec<Term<f64>>,
    ops_a: Vec<HermitianOperator<f64>>,
    ops_b: Vec<HermitianOperator<f64>>,
}

impl IndirectEstimator {
    pub fn new(dec: &ProductDecomposition<f64>, selection: TermSelection) -> Result<Self> {
        let terms = dec.terms(selection);
        if terms.is_empty() {
            return Err(Error::Config("decomposition has no terms to measure".into()));
        }
        let ops_a = terms
            .iter()
            .map(|t| HermitianOperator::new(dec.basis_a.elements[t.ja].clone()))
            .collect::<Result<Vec<_>>>()?;
        let ops_b = terms
            .iter()
            .map(|t| HermitianOperator::new(dec.basis_b.elements[t.jb].clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(IndirectEstimator { shape: dec.shape, terms, ops_a, ops_b })
    }

    pub fn terms(&self) -> &[Term<f64>] {
        &self.terms
    }

    /// Precomputes per-term samplers for each single-copy state.
    pub fn bank(&self, states: &[Matrix]) -> Result<IndirectBank> {
        let samplers = states
            .iter()
            .map(|rho| {
                let local = to_local_grouping(rho, &self.shape)?;
                self.ops_a
                    .iter()
                    .zip(&self.ops_b)
                    .map(|(a, b)| LocalPairSampler::new(&local, a, b))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IndirectBank { terms: self.terms.clone(), samplers })
    }
}

#[derive(Clone, Debug)]
pub struct IndirectBank {
    terms: Vec<Term<f64>>,
    /// `samplers[state][term]`.
    samplers: Vec<Vec<LocalPairSampler>>,
}

/// Splits `m` copies into `k` groups: ⌊m/k⌋ each, the remainder handed out
/// one by one to the first groups.
pub fn group_sizes(m: usize, k: usize) -> Vec<usize> {
    (0..k).map(|g| m / k + usize::from(g < m % k)).collect()
}

impl IndirectBank {
    pub fn active_terms(&self) -> usize {
        self.terms.len()
    }

    /// Estimates ⟨Σ⟩ from copies whose single-copy states are
    /// `states[of_copy[i]]`. Copies are assigned to term groups through a
    /// random permutation.
    pub fn estimate<R: Rng + ?Sized>(&self, of_copy: &[usize], rng: &mut R) -> Result<IndirectEstimate> {
        let m = of_copy.len();
        let k = self.terms.len();
        if m < k {
            return Err(Error::Config(format!("{m} test copies cannot cover {k} product terms")));
        }
        if let Some(&bad) = of_copy.iter().find(|&&s| s >= self.samplers.len()) {
            return Err(Error::Config(format!("copy refers to unknown state {bad}")));
        }
        let sizes = group_sizes(m, k);
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(rng);

        let mut assignment = vec![0; m];
        let mut per_term = Vec::with_capacity(k);
        let mut value = 0.0;
        let mut cursor = 0;
        for (g, (&size, term)) in sizes.iter().zip(&self.terms).enumerate() {
            let mut sum = 0.0;
            for &copy in &order[cursor..cursor + size] {
                assignment[copy] = g;
                let (a, b) = self.samplers[of_copy[copy]][g].sample(rng);
                sum += a.value * b.value;
            }
            cursor += size;
            let mean = sum / size as f64;
            value += term.coefficient * mean;
            per_term.push(TermAverage { ja: term.ja, jb: term.jb, coefficient: term.coefficient, mean, count: size });
        }
        Ok(IndirectEstimate { value, group_sizes: sizes, per_term, assignment })
    }
}

/// Per-state samplers for measuring Σ directly.
#[derive(Clone, Debug)]
pub struct DirectBank {
    samplers: Vec<ProjectiveSampler>,
}

impl DirectBank {
    pub fn new(sigma: &HermitianOperator<f64>, states: &[Matrix]) -> Result<Self> {
        let samplers = states
            .iter()
            .map(|rho| ProjectiveSampler::new(rho, sigma))
            .collect::<Result<Vec<_>>>()?;
        Ok(DirectBank { samplers })
    }

    /// Mean eigenvalue outcome over the copies.
    pub fn estimate<R: Rng + ?Sized>(&self, of_copy: &[usize], rng: &mut R) -> Result<f64> {
        if of_copy.is_empty() {
            return Err(Error::Config("direct estimate needs at least one copy".into()));
        }
        let sum: f64 = of_copy.iter().map(|&s| self.samplers[s].sample(rng).value).sum();
        Ok(sum / of_copy.len() as f64)
    }
}

/// LOCC estimate of ⟨Σ⟩ on `m` copies from `source`.
pub fn indirect_estimate<R: Rng + ?Sized>(
    source: &StateSource,
    dec: &ProductDecomposition<f64>,
    m: usize,
    selection: TermSelection,
    rng: &mut R,
) -> Result<IndirectEstimate> {
    let component = source.draw_component(rng);
    let bank = IndirectEstimator::new(dec, selection)?.bank(&source.states()[component..=component])?;
    bank.estimate(&vec![0; m], rng)
}

/// Direct estimate of ⟨Σ⟩ on `count` copies from `source`.
pub fn direct_estimate<R: Rng + ?Sized>(
    source: &StateSource,
    sigma: &HermitianOperator<f64>,
    count: usize,
    rng: &mut R,
) -> Result<f64> {
    let component = source.draw_component(rng);
    let bank = DirectBank::new(sigma, &source.states()[component..=component])?;
    bank.estimate(&vec![0; count], rng)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationResult {
    pub trial: usize,
    pub seed: u64,
    pub component: usize,
    /// LOCC estimate on the first m copies.
    pub sigma_indirect: f64,
    /// Direct estimate on the remaining m + n copies.
    pub sigma_direct: f64,
    pub deviation: f64,
    pub group_sizes: Vec<usize>,
    pub per_term_averages: Vec<TermAverage>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub selection: TermSelection,
}

/// Indirect estimate on m copies versus direct measurement of the
/// reconstructed Σ on the other m + n copies, repeated over independent
/// trials. Trial `i` uses the stream `child_seed(seed, i)`.
pub fn theorem3_experiment(
    source: &StateSource,
    dec: &ProductDecomposition<f64>,
    spec: ExperimentSpec,
) -> Result<Vec<EstimationResult>> {
    if spec.m == 0 {
        return Err(Error::Config("m must be positive".into()));
    }
    let sigma = HermitianOperator::new(dec.reconstruct())?;
    let indirect = IndirectEstimator::new(dec, spec.selection)?.bank(source.states())?;
    let direct = DirectBank::new(&sigma, source.states())?;
    if spec.m < indirect.active_terms() {
        return Err(Error::Config(format!(
            "m = {} is smaller than the {} measured product terms",
            spec.m,
            indirect.active_terms()
        )));
    }

    (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = child_seed(spec.seed, trial as u64);
            let mut rng = rng_from_seed(seed);
            let component = source.draw_component(&mut rng);
            let ind = indirect.estimate(&vec![component; spec.m], &mut rng)?;
            let dir = direct.estimate(&vec![component; spec.m + spec.n], &mut rng)?;
            Ok(EstimationResult {
                trial,
                seed,
                component,
                sigma_indirect: ind.value,
                sigma_direct: dir,
                deviation: (ind.value - dir).abs(),
                group_sizes: ind.group_sizes,
                per_term_averages: ind.per_term,
            })
        })
        .collect()
}

/// Fraction of trials whose deviation exceeds `threshold`.
pub fn exceedance_frequency(results: &[EstimationResult], threshold: f64) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.deviation > threshold).count() as f64 / results.len() as f64
}
