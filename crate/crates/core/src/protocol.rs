//! End-to-end runs of the twisted Lo–Chau protocol with LOCC phase-error
//! estimation, under i.i.d. attacks on Bob's share.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    default_r, key_rate, lo_chau_term, theorem3_bounds, twisted_lc_bound, BoundsReport, Theorem3Params,
    TwistedLcParams,
};
use crate::error::{Error, Result};
use crate::estimation::{child_seed, rng_from_seed, IndirectBank, IndirectEstimator, LocalPairSampler};
use crate::linalg::{
    basis_projector, from_local_grouping, hs_norm, identity, kron, kron_all, max_abs_diff, partial_trace_dims,
    to_local_grouping, validate_density, ComplexMatrix, HermitianOperator, SystemShape,
};
use crate::observables::{decompose_product, twisted_phase_operator, ProductDecomposition, TermSelection};
use crate::private_states::{make_private_state, maximally_mixed, PrivateState, Twisting};
use crate::wire;

type Matrix = ComplexMatrix<f64>;

const KRAUS_TOL: f64 = 1e-9;
/// Estimated error rates below this are rounding noise and read as 0.
const RATE_SNAP: f64 = 1e-9;

/// Eve's per-copy channel on Bob's share B B'.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackSpec {
    #[default]
    None,
    /// ρ ↦ (1−p)ρ + p·Tr_{BB'}(ρ) ⊗ I/(da).
    Depolarizing { p: f64 },
    /// ρ ↦ (1−p)ρ + p·Σ_k P_k ρ P_k with P_k computational projectors on B.
    Dephasing { p: f64 },
    /// Kraus operators acting on B B'.
    Custom {
        #[serde(with = "wire::matrix_list")]
        kraus: Vec<Matrix>,
    },
}

impl AttackSpec {
    pub fn validate(&self, shape: &SystemShape) -> Result<()> {
        match self {
            AttackSpec::None => Ok(()),
            AttackSpec::Depolarizing { p } | AttackSpec::Dephasing { p } => {
                if (0.0..=1.0).contains(p) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("attack strength p = {p} outside [0, 1]")))
                }
            }
            AttackSpec::Custom { kraus } => {
                let dim = shape.local_dim();
                if kraus.is_empty() {
                    return Err(Error::Config("custom attack needs at least one Kraus operator".into()));
                }
                if let Some(k) = kraus.iter().find(|k| k.nrows() != dim || k.ncols() != dim) {
                    return Err(Error::DimensionMismatch { expected: dim, got: k.nrows().max(k.ncols()) });
                }
                let sum = kraus.iter().fold(Matrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
                let dev = max_abs_diff(&sum, &identity(dim));
                if dev > KRAUS_TOL {
                    return Err(Error::Config(format!("Kraus operators are not complete (deviation {dev:.3e})")));
                }
                Ok(())
            }
        }
    }
}

/// Applies `attack` to Bob's share of a state in `A, B, A', B'` order.
pub fn apply_channel(rho: &Matrix, shape: &SystemShape, attack: &AttackSpec) -> Result<Matrix> {
    attack.validate(shape)?;
    validate_density(rho, 1e-10)?;
    let half = shape.local_dim();
    let out = match attack {
        AttackSpec::None => rho.clone(),
        AttackSpec::Depolarizing { p } => {
            let local = to_local_grouping(rho, shape)?;
            let alice = partial_trace_dims(&local, &[half, half], &[0])?;
            let noise = from_local_grouping(&kron(&alice, &maximally_mixed(half)), shape)?;
            rho * nalgebra::Complex::from(1.0 - p) + noise * nalgebra::Complex::from(*p)
        }
        AttackSpec::Dephasing { p } => {
            let (ia, ip) = (identity(shape.d), identity(shape.a));
            let mut dephased = Matrix::zeros(rho.nrows(), rho.ncols());
            for k in 0..shape.d {
                let proj = kron_all(&[&ia, &basis_projector(shape.d, k), &ip, &ip]);
                dephased += &proj * rho * &proj;
            }
            rho * nalgebra::Complex::from(1.0 - p) + dephased * nalgebra::Complex::from(*p)
        }
        AttackSpec::Custom { kraus } => {
            let local = to_local_grouping(rho, shape)?;
            let id = identity(half);
            let mut acc = Matrix::zeros(local.nrows(), local.ncols());
            for k in kraus {
                let full = kron(&id, k);
                acc += &full * &local * full.adjoint();
            }
            from_local_grouping(&acc, shape)?
        }
    };
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TwistingSpec {
    Identity,
    /// Independent Haar-random blocks; the seed defaults to one derived from
    /// the run seed.
    Random {
        #[serde(default)]
        seed: Option<u64>,
    },
    Explicit {
        #[serde(with = "wire::matrix_list")]
        blocks: Vec<Matrix>,
    },
}

impl TwistingSpec {
    pub fn build(&self, shape: SystemShape, run_seed: u64) -> Result<Twisting<f64>> {
        match self {
            TwistingSpec::Identity => Ok(Twisting::identity(shape)),
            TwistingSpec::Random { seed } => {
                let seed = seed.unwrap_or_else(|| child_seed(run_seed, u64::MAX));
                Ok(Twisting::random(shape, &mut rng_from_seed(seed)))
            }
            TwistingSpec::Explicit { blocks } => Twisting::from_blocks(shape, blocks.clone()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AncillaSpec {
    #[default]
    MaximallyMixed,
    Explicit {
        #[serde(with = "wire::matrix")]
        matrix: Matrix,
    },
}

impl AncillaSpec {
    pub fn build(&self, shape: &SystemShape) -> Matrix {
        match self {
            AncillaSpec::MaximallyMixed => maximally_mixed(shape.d_prime()),
            AncillaSpec::Explicit { matrix } => matrix.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub x: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub shape: SystemShape,
    pub twisting: TwistingSpec,
    #[serde(default)]
    pub ancilla: AncillaSpec,
    pub n_total: usize,
    pub m_x: usize,
    pub m_z: usize,
    pub delta: f64,
    /// Defaults to ⌈d⁴d'² ln n⌉.
    #[serde(default)]
    pub r: Option<u64>,
    #[serde(default)]
    pub attack: AttackSpec,
    pub thresholds: Thresholds,
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub terms: TermSelection,
}

fn one() -> usize {
    1
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        SystemShape::new(self.shape.d, self.shape.a)?;
        if self.m_x == 0 || self.m_z == 0 {
            return Err(Error::Config("m_x and m_z must both be positive".into()));
        }
        if self.m_x + self.m_z >= self.n_total {
            return Err(Error::Config(format!(
                "m_x + m_z = {} leaves no key copies out of n_total = {}",
                self.m_x + self.m_z,
                self.n_total
            )));
        }
        for (name, th) in [("x", self.thresholds.x), ("z", self.thresholds.z)] {
            if !(0.0..=0.5).contains(&th) {
                return Err(Error::Config(format!("threshold {name} = {th} outside [0, 1/2]")));
            }
        }
        if self.delta.is_nan() || self.delta < 0.0 {
            return Err(Error::Config(format!("delta = {} must be non-negative", self.delta)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    pub fn key_copies(&self) -> usize {
        self.n_total - self.m_x - self.m_z
    }
}

/// Indices and group statistics of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transcript {
    pub bit_test: Vec<usize>,
    pub phase_test: Vec<usize>,
    /// `(copy index, term group)` for every phase-test copy.
    pub groups: Vec<(usize, usize)>,
    /// `(j_a, j_b, mean of products)` per term group.
    pub group_means: Vec<(usize, usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub trial: usize,
    pub seed: u64,
    pub eps_x_hat: f64,
    pub sigma_x_hat: f64,
    pub eps_z_hat: f64,
    pub key_length: usize,
    pub aborted: bool,
    pub bounds: BoundsReport,
    pub transcript: Transcript,
}

/// Everything shared by the trials of one configuration.
#[derive(Clone, Debug)]
pub struct Protocol {
    config: ProtocolConfig,
    state: PrivateState<f64>,
    attacked: Matrix,
    decomposition: ProductDecomposition<f64>,
    bit_test: LocalPairSampler,
    phase_test: IndirectBank,
    bounds: BoundsReport,
}

impl Protocol {
    pub fn new(config: ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let shape = SystemShape::new(config.shape.d, config.shape.a)?;
        let twisting = config.twisting.build(shape, config.seed)?;
        let state = make_private_state(config.ancilla.build(&shape), twisting)?;
        let attacked = apply_channel(&state.gamma, &shape, &config.attack)?;

        let sigma = twisted_phase_operator(&state.twisting)?;
        let decomposition = decompose_product(sigma.matrix(), &shape)?;
        let phase_test = IndirectEstimator::new(&decomposition, config.terms)?.bank(std::slice::from_ref(&attacked))?;
        if config.m_z < phase_test.active_terms() {
            return Err(Error::Config(format!(
                "m_z = {} is smaller than the {} measured product terms",
                config.m_z,
                phase_test.active_terms()
            )));
        }

        // key value on A (resp. B), ignoring the ancilla
        let labels = Matrix::from_diagonal(&nalgebra::DVector::from_fn(shape.d, |i, _| nalgebra::Complex::from(i as f64)));
        let key_op = HermitianOperator::new(kron(&labels, &identity(shape.a)))?;
        let bit_test = LocalPairSampler::new(&to_local_grouping(&attacked, &shape)?, &key_op, &key_op)?;

        let bounds = run_bounds(&config, &shape, phase_test.active_terms(), hs_norm(sigma.matrix()));
        Ok(Protocol { config, state, attacked, decomposition, bit_test, phase_test, bounds })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn private_state(&self) -> &PrivateState<f64> {
        &self.state
    }

    pub fn attacked_state(&self) -> &Matrix {
        &self.attacked
    }

    pub fn decomposition(&self) -> &ProductDecomposition<f64> {
        &self.decomposition
    }

    pub fn bounds(&self) -> &BoundsReport {
        &self.bounds
    }

    /// One protocol execution driven entirely by `seed`.
    pub fn run_once(&self, trial: usize, seed: u64) -> Result<RunResult> {
        let cfg = &self.config;
        let mut rng = rng_from_seed(seed);

        let mut order: Vec<usize> = (0..cfg.n_total).collect();
        order.shuffle(&mut rng);
        let mut bit_test = order[..cfg.m_x].to_vec();
        let mut phase_test = order[cfg.m_x..cfg.m_x + cfg.m_z].to_vec();
        bit_test.sort_unstable();
        phase_test.sort_unstable();

        let mismatches = (0..cfg.m_x)
            .filter(|_| {
                let (a, b) = self.bit_test.sample(&mut rng);
                a.index != b.index
            })
            .count();
        let eps_x_hat = snap(mismatches as f64 / cfg.m_x as f64);

        let est = self.phase_test.estimate(&vec![0; cfg.m_z], &mut rng)?;
        let sigma_x_hat = est.value;
        let eps_z_hat = snap(((1.0 - sigma_x_hat) / 2.0).clamp(0.0, 1.0));

        let over = eps_x_hat > cfg.thresholds.x || eps_z_hat > cfg.thresholds.z;
        let key_length = if over {
            0
        } else {
            (cfg.key_copies() as f64 * key_rate(eps_x_hat, eps_z_hat)).floor() as usize
        };

        Ok(RunResult {
            trial,
            seed,
            eps_x_hat,
            sigma_x_hat,
            eps_z_hat,
            key_length,
            aborted: key_length == 0,
            bounds: self.bounds,
            transcript: Transcript {
                groups: phase_test.iter().copied().zip(est.assignment).collect(),
                group_means: est.per_term.iter().map(|t| (t.ja, t.jb, t.mean)).collect(),
                bit_test,
                phase_test,
            },
        })
    }

    /// All configured trials; trial `i` uses `child_seed(seed, i)`.
    pub fn run_trials(&self) -> Result<Vec<RunResult>> {
        (0..self.config.trials)
            .into_par_iter()
            .map(|i| self.run_once(i, child_seed(self.config.seed, i as u64)))
            .collect()
    }
}

fn snap(rate: f64) -> f64 {
    if rate.abs() < RATE_SNAP {
        0.0
    } else {
        rate
    }
}

fn run_bounds(cfg: &ProtocolConfig, shape: &SystemShape, terms: usize, sigma_norm: f64) -> BoundsReport {
    let (n, d, dp) = (cfg.n_total as u64, shape.d as u64, shape.d_prime() as u64);
    let r = cfg.r.unwrap_or_else(|| default_r(n, d, dp));
    // 2m + n copies: m indirect, m + n' direct
    let direct_extra = cfg.n_total.checked_sub(cfg.m_x + 2 * cfg.m_z).filter(|&x| x > 0);
    let theorem3 = direct_extra.and_then(|extra| {
        theorem3_bounds(&Theorem3Params {
            n: extra as u64,
            m: cfg.m_z as u64,
            r,
            t: terms as u64,
            d: shape.total_dim() as u64,
            hs_norm: sigma_norm,
            delta: cfg.delta,
            definetti_power: 2,
        })
        .ok()
    });
    let twisted_lc = twisted_lc_bound(&TwistedLcParams {
        n,
        m_z: cfg.m_z as u64,
        r: Some(r),
        d,
        d_prime: dp,
        t: shape.t() as u64,
        delta: cfg.delta,
    })
    .ok();
    BoundsReport {
        lo_chau: Some(lo_chau_term(cfg.m_z as u64, cfg.delta)),
        lo_chau_condition: Some(crate::bounds::lo_chau_condition(cfg.m_z as u64, n, cfg.delta)),
        theorem3,
        twisted_lc,
    }
}

/// Runs every trial of `config`.
pub fn run_protocol(config: &ProtocolConfig) -> Result<Vec<RunResult>> {
    Protocol::new(config.clone())?.run_trials()
}

#[derive(Serialize)]
struct CsvRow {
    trial: usize,
    eps_x_hat: f64,
    sigma_x_hat: f64,
    eps_z_hat: f64,
    key_length: usize,
    aborted: bool,
}

pub fn write_results_csv<W: Write>(results: &[RunResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(CsvRow {
            trial: r.trial,
            eps_x_hat: r.eps_x_hat,
            sigma_x_hat: r.sigma_x_hat,
            eps_z_hat: r.eps_z_hat,
            key_length: r.key_length,
            aborted: r.aborted,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Configuration field varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    AttackP,
    MX,
    MZ,
    NTotal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub trials: usize,
    pub abort_rate: f64,
    pub mean_key_length: f64,
    pub mean_eps_x_hat: f64,
    pub mean_sigma_x_hat: f64,
    pub mean_eps_z_hat: f64,
}

fn with_param(base: &ProtocolConfig, param: SweepParam, value: f64) -> Result<ProtocolConfig> {
    let mut cfg = base.clone();
    let count = || {
        if value >= 0.0 && value.fract() == 0.0 {
            Ok(value as usize)
        } else {
            Err(Error::Config(format!("sweep value {value} is not a count")))
        }
    };
    match param {
        SweepParam::AttackP => {
            cfg.attack = match cfg.attack {
                AttackSpec::Dephasing { .. } => AttackSpec::Dephasing { p: value },
                _ => AttackSpec::Depolarizing { p: value },
            }
        }
        SweepParam::MX => cfg.m_x = count()?,
        SweepParam::MZ => cfg.m_z = count()?,
        SweepParam::NTotal => cfg.n_total = count()?,
    }
    Ok(cfg)
}

/// Runs `base` at each value of `param`; point `k` uses master seed
/// `child_seed(base.seed, k)`.
pub fn sweep(base: &ProtocolConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .enumerate()
        .map(|(k, &value)| {
            let mut cfg = with_param(base, param, value)?;
            cfg.seed = child_seed(base.seed, k as u64);
            let results = run_protocol(&cfg)?;
            let n = results.len() as f64;
            let avg = |f: &dyn Fn(&RunResult) -> f64| results.iter().map(f).sum::<f64>() / n;
            Ok(SweepPoint {
                value,
                trials: results.len(),
                abort_rate: avg(&|r| f64::from(u8::from(r.aborted))),
                mean_key_length: avg(&|r| r.key_length as f64),
                mean_eps_x_hat: avg(&|r| r.eps_x_hat),
                mean_sigma_x_hat: avg(&|r| r.sigma_x_hat),
                mean_eps_z_hat: avg(&|r| r.eps_z_hat),
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_z, trace};
    use crate::observables::expectation;
    use crate::private_states::max_entangled_density;
    use crate::stats::{mean, std_err};

    fn qubit() -> SystemShape {
        SystemShape::new(2, 1).unwrap()
    }

    fn config(attack: AttackSpec) -> ProtocolConfig {
        ProtocolConfig {
            shape: qubit(),
            twisting: TwistingSpec::Identity,
            ancilla: AncillaSpec::MaximallyMixed,
            n_total: 3000,
            m_x: 500,
            m_z: 500,
            delta: 0.1,
            r: None,
            attack,
            thresholds: Thresholds { x: 0.11, z: 0.11 },
            seed: 1,
            trials: 1,
            terms: TermSelection::Nonzero,
        }
    }

    #[test]
    fn channels_preserve_trace() {
        let shape = SystemShape::new(2, 2).unwrap();
        let gamma = make_private_state(maximally_mixed(4), Twisting::random(shape, &mut rng_from_seed(3)))
            .unwrap()
            .gamma;
        for attack in [
            AttackSpec::None,
            AttackSpec::Depolarizing { p: 0.3 },
            AttackSpec::Dephasing { p: 0.7 },
        ] {
            let out = apply_channel(&gamma, &shape, &attack).unwrap();
            assert!((trace(&out).re - 1.0).abs() < 1e-10);
            validate_density(&out, 1e-10).unwrap();
        }
        assert_eq!(apply_channel(&gamma, &shape, &AttackSpec::None).unwrap(), gamma);
    }

    #[test]
    fn full_depolarization_replaces_bob() {
        let phi = max_entangled_density::<f64>(2).unwrap();
        let out = apply_channel(&phi, &qubit(), &AttackSpec::Depolarizing { p: 1.0 }).unwrap();
        assert!(max_abs_diff(&out, &maximally_mixed(4)) < 1e-15);
    }

    #[test]
    fn depolarized_bell_parity() {
        let phi = max_entangled_density::<f64>(2).unwrap();
        let xx = kron(&pauli_x(), &pauli_x());
        let zz = kron(&pauli_z(), &pauli_z());
        for p in [0.0, 0.2, 0.5, 0.9] {
            let out = apply_channel(&phi, &qubit(), &AttackSpec::Depolarizing { p }).unwrap();
            assert!((expectation(&xx, &out).unwrap() - (1.0 - p)).abs() < 1e-12);
            assert!((expectation(&zz, &out).unwrap() - (1.0 - p)).abs() < 1e-12);
            let deph = apply_channel(&phi, &qubit(), &AttackSpec::Dephasing { p }).unwrap();
            assert!((expectation(&xx, &deph).unwrap() - (1.0 - p)).abs() < 1e-12);
            assert!((expectation(&zz, &deph).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn custom_kraus_checks_completeness() {
        let phi = max_entangled_density::<f64>(2).unwrap();
        let flip = AttackSpec::Custom { kraus: vec![pauli_x()] };
        let out = apply_channel(&phi, &qubit(), &flip).unwrap();
        let zz = kron(&pauli_z(), &pauli_z());
        assert!((expectation(&zz, &out).unwrap() + 1.0).abs() < 1e-12);
        let broken = AttackSpec::Custom { kraus: vec![pauli_x() * nalgebra::Complex::from(0.9)] };
        assert!(matches!(apply_channel(&phi, &qubit(), &broken), Err(Error::Config(_))));
        assert!(apply_channel(&phi, &qubit(), &AttackSpec::Depolarizing { p: 1.5 }).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(AttackSpec::None);
        cfg.n_total = 1000;
        assert!(matches!(Protocol::new(cfg.clone()), Err(Error::Config(_))));
        cfg.n_total = 1001;
        assert!(Protocol::new(cfg.clone()).is_ok());
        cfg.thresholds.x = 0.6;
        assert!(Protocol::new(cfg).is_err());
    }

    #[test]
    fn clean_run_keeps_everything() {
        let proto = Protocol::new(config(AttackSpec::None)).unwrap();
        for seed in 0..10 {
            let r = proto.run_once(0, seed).unwrap();
            assert_eq!(r.eps_x_hat, 0.0);
            assert_eq!(r.eps_z_hat, 0.0);
            assert!(!r.aborted);
            assert_eq!(r.key_length, 2000);
            assert_eq!(r.transcript.bit_test.len(), 500);
            assert_eq!(r.transcript.groups.len(), 500);
        }
    }

    #[test]
    fn bit_error_under_depolarizing() {
        let mut cfg = config(AttackSpec::Depolarizing { p: 0.2 });
        cfg.trials = 200;
        let results = run_protocol(&cfg).unwrap();
        let eps: Vec<f64> = results.iter().map(|r| r.eps_x_hat).collect();
        assert!((mean(&eps) - 0.1).abs() < 5.0 * std_err(&eps));
        let sig: Vec<f64> = results.iter().map(|r| r.sigma_x_hat).collect();
        assert!((mean(&sig) - 0.8).abs() < 5.0 * std_err(&sig));
    }

    #[test]
    fn anti_correlated_source_has_full_bit_error() {
        let cfg = config(AttackSpec::Custom { kraus: vec![pauli_x()] });
        let r = Protocol::new(cfg).unwrap().run_once(0, 5).unwrap();
        assert_eq!(r.eps_x_hat, 1.0);
        assert!(r.aborted);
        assert_eq!(r.key_length, 0);
    }

    #[test]
    fn maximally_mixed_phase_estimate() {
        let mut cfg = config(AttackSpec::Depolarizing { p: 1.0 });
        cfg.trials = 200;
        let sig: Vec<f64> = run_protocol(&cfg).unwrap().iter().map(|r| r.sigma_x_hat).collect();
        assert!(mean(&sig).abs() < 5.0 * std_err(&sig));
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = config(AttackSpec::Depolarizing { p: 0.05 });
        cfg.trials = 6;
        cfg.shape = SystemShape::new(2, 2).unwrap();
        cfg.twisting = TwistingSpec::Random { seed: Some(11) };
        assert_eq!(run_protocol(&cfg).unwrap(), run_protocol(&cfg).unwrap());
    }

    #[test]
    fn config_json_schema() {
        let json = r#"{
            "shape": {"d": 2, "a": 2},
            "twisting": {"kind": "random", "seed": 4},
            "ancilla": {"kind": "maximally_mixed"},
            "n_total": 4000, "m_x": 500, "m_z": 1000,
            "delta": 0.1, "r": 10,
            "attack": {"kind": "depolarizing", "p": 0.1},
            "thresholds": {"x": 0.11, "z": 0.11},
            "seed": 7, "trials": 3
        }"#;
        let cfg: ProtocolConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.attack, AttackSpec::Depolarizing { p: 0.1 });
        assert_eq!(cfg.terms, TermSelection::Nonzero);
        let back: ProtocolConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(run_protocol(&cfg).unwrap().len(), 3);
    }

    #[test]
    fn results_csv_header() {
        let results = run_protocol(&config(AttackSpec::None)).unwrap();
        let mut buf = Vec::new();
        write_results_csv(&results, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trial,eps_x_hat,sigma_x_hat,eps_z_hat,key_length,aborted\n"));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn sweep_over_attack_strength() {
        let mut cfg = config(AttackSpec::None);
        cfg.trials = 20;
        let pts = sweep(&cfg, SweepParam::AttackP, &[0.0, 0.6]).unwrap();
        assert_eq!(pts[0].abort_rate, 0.0);
        assert_eq!(pts[1].abort_rate, 1.0);
        assert!(sweep(&cfg, SweepParam::MZ, &[10.5]).is_err());
    }
}
