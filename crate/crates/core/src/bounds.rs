//! Finite-sample security bounds, evaluated in the log domain.
//!
//! Every term is carried as a base-2 exponent. Its linear value saturates at
//! 1, and a term whose exponent is non-negative is flagged vacuous. When a
//! binary-entropy argument falls outside `[0, 1/2]` inside a composite bound
//! the term is reported vacuous with an infinite exponent (serialized as
//! `null`).

use std::f64::consts::{LN_2, LOG2_E};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// h(x) = −x log₂x − (1−x) log₂(1−x).
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    let xlx = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(xlx(x) + xlx(1.0 - x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundTerm {
    pub log2: f64,
    pub value: f64,
    pub vacuous: bool,
}

impl BoundTerm {
    pub fn from_log2(log2: f64) -> Self {
        BoundTerm { log2, value: log2.exp2().min(1.0), vacuous: log2 >= 0.0 || log2.is_nan() }
    }

    pub fn from_ln(ln: f64) -> Self {
        Self::from_log2(ln * LOG2_E)
    }

    /// Outside the formula's domain.
    pub fn undefined() -> Self {
        BoundTerm { log2: f64::INFINITY, value: 1.0, vacuous: true }
    }

    pub fn ln(&self) -> f64 {
        self.log2 * LN_2
    }
}

/// The de Finetti, Chernoff and sampling contributions and their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThreeTermBound {
    pub definetti: BoundTerm,
    pub chernoff: BoundTerm,
    pub sampling: BoundTerm,
    pub total: BoundTerm,
}

impl ThreeTermBound {
    fn new(definetti: BoundTerm, chernoff: BoundTerm, sampling: BoundTerm) -> Self {
        let logs = [definetti.log2, chernoff.log2, sampling.log2];
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log2 = if top.is_finite() {
            top + logs.iter().map(|l| (l - top).exp2()).sum::<f64>().log2()
        } else {
            top
        };
        let mut total = BoundTerm::from_log2(log2);
        total.value = (definetti.value + chernoff.value + sampling.value).min(1.0);
        ThreeTermBound { definetti, chernoff, sampling, total }
    }
}

/// 2e^{−2 m_z δ²}: Lo–Chau bound on the phase-error estimate.
pub fn lo_chau_bound(m_z: u64, delta: f64) -> f64 {
    2.0 * (-2.0 * m_z as f64 * delta * delta).exp()
}

pub fn lo_chau_term(m_z: u64, delta: f64) -> BoundTerm {
    BoundTerm::from_ln(LN_2 - 2.0 * m_z as f64 * delta * delta)
}

/// Side condition m_z < 2δ²/(1+2δ²)·n under which the Lo–Chau bound applies.
pub fn lo_chau_condition(m_z: u64, n: u64, delta: f64) -> bool {
    let d2 = delta * delta;
    (m_z as f64) < 2.0 * d2 / (1.0 + 2.0 * d2) * n as f64
}

/// e(δ, n, r, |Z|) = 2^{−(δ²/4 − h(r/n))n + |Z| log₂(n/2+1)}.
pub fn chernoff_e(delta: f64, n: u64, r: u64, alphabet_size: u64) -> Result<BoundTerm> {
    if n == 0 {
        return Err(Error::Domain("chernoff bound needs n ≥ 1".into()));
    }
    if 2 * r > n {
        return Err(Error::Domain(format!("chernoff bound needs r ≤ n/2, got r = {r}, n = {n}")));
    }
    let nf = n as f64;
    let h = binary_entropy(r as f64 / nf)?;
    Ok(BoundTerm::from_log2(
        -(delta * delta / 4.0 - h) * nf + alphabet_size as f64 * (nf / 2.0 + 1.0).log2(),
    ))
}

/// |Z|·e^{−kε²/(8|Z|)}.
pub fn sampling_bound(k: u64, epsilon: f64, alphabet_size: u64) -> f64 {
    sampling_term(k, epsilon, alphabet_size).log2.exp2()
}

pub fn sampling_term(k: u64, epsilon: f64, alphabet_size: u64) -> BoundTerm {
    let z = alphabet_size as f64;
    BoundTerm::from_ln(z.ln() - k as f64 * epsilon * epsilon / (8.0 * z))
}

/// √t·‖L‖_HS·max_i ‖P_i − Q_i‖: gap between averages of two distributions.
pub fn averages_gap(t: u64, hs_norm: f64, max_dist: f64) -> f64 {
    (t as f64).sqrt() * hs_norm * max_dist
}

/// 2e^{−k(r+1)/(2(n+k)) + ½·dim^power·ln k}, returned with its ln-domain
/// exponent (ln 2 included).
pub fn definetti_bound(n: u64, k: u64, r: u64, dim: u64, power: u32) -> Result<BoundTerm> {
    if k == 0 {
        return Err(Error::Domain("de Finetti bound needs k ≥ 1".into()));
    }
    if !(1..=2).contains(&power) {
        return Err(Error::Domain(format!("de Finetti exponent power must be 1 or 2, got {power}")));
    }
    let (n, k, r) = (n as f64, k as f64, r as f64);
    let dim_pow = (dim as f64).powi(power as i32);
    Ok(BoundTerm::from_ln(LN_2 - k * (r + 1.0) / (2.0 * (n + k)) + 0.5 * dim_pow * k.ln()))
}

/// Chernoff exponent with an entropy argument that may exceed 1/2.
fn chernoff_like(prefactor: f64, rate: f64, arg: f64, count: f64, extra: f64) -> BoundTerm {
    if !(0.0..=0.5).contains(&arg) {
        return BoundTerm::undefined();
    }
    let h = binary_entropy(arg).expect("argument checked");
    BoundTerm::from_log2(prefactor.log2() - (rate - h) * count + extra)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Params {
    /// Copies measured directly besides the m test copies.
    pub n: u64,
    /// Copies measured indirectly.
    pub m: u64,
    pub r: u64,
    /// Number of local product terms.
    pub t: u64,
    /// Single-copy Hilbert-space dimension.
    pub d: u64,
    pub hs_norm: f64,
    pub delta: f64,
    #[serde(default = "default_power")]
    pub definetti_power: u32,
}

fn default_power() -> u32 {
    2
}

/// e₁ + e₂ + e₃ bounding Pr(|indirect − direct| > 3δ) for 2m+n copies.
pub fn theorem3_bounds(p: &Theorem3Params) -> Result<ThreeTermBound> {
    if p.t == 0 || p.m < p.t {
        return Err(Error::Domain(format!("need m ≥ t ≥ 1, got m = {}, t = {}", p.m, p.t)));
    }
    if p.n == 0 || p.d == 0 || p.hs_norm.is_nan() || p.hs_norm <= 0.0 {
        return Err(Error::Domain("need n ≥ 1, d ≥ 1 and a positive HS norm".into()));
    }
    let (n, m, r, t, d) = (p.n as f64, p.m as f64, p.r as f64, p.t as f64, p.d as f64);
    let s2 = p.hs_norm * p.hs_norm;
    let d2 = p.delta * p.delta;

    let e1 = BoundTerm::from_ln(
        LN_2 - n * (r + 1.0) / (2.0 * (2.0 * m + n)) + 0.5 * d.powi(p.definetti_power as i32) * n.ln(),
    );
    let m_prime = (p.m / p.t) as f64;
    let e2 = chernoff_like(t + 1.0, d2 / (4.0 * t * s2), r / m_prime, m_prime, d * (m_prime / 2.0 + 1.0).log2());
    let e3 = BoundTerm::from_ln(d.ln() - m * d2 / (8.0 * d * s2));
    Ok(ThreeTermBound::new(e1, e2, e3))
}

/// Default de Finetti copy count r = ⌈d⁴d'² ln n⌉.
pub fn default_r(n: u64, d: u64, d_prime: u64) -> u64 {
    ((d as f64).powi(4) * (d_prime as f64).powi(2) * (n as f64).ln()).ceil() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistedLcParams {
    pub n: u64,
    pub m_z: u64,
    /// Defaults to ⌈d⁴d'² ln n⌉.
    #[serde(default)]
    pub r: Option<u64>,
    /// Key dimension.
    pub d: u64,
    /// Ancilla dimension.
    pub d_prime: u64,
    pub t: u64,
    pub delta: f64,
}

/// Three-term bound on the twisted phase-error estimate of the LOCC
/// Lo–Chau protocol.
pub fn twisted_lc_bound(p: &TwistedLcParams) -> Result<ThreeTermBound> {
    if p.m_z >= p.n {
        return Err(Error::Domain(format!("need m_z < n, got m_z = {}, n = {}", p.m_z, p.n)));
    }
    if p.t == 0 || p.m_z < p.t * p.t {
        return Err(Error::Domain(format!("need m_z/t² ≥ 1, got m_z = {}, t = {}", p.m_z, p.t)));
    }
    let r = p.r.unwrap_or_else(|| default_r(p.n, p.d, p.d_prime)) as f64;
    let (n, mz, d, dp, t) = (p.n as f64, p.m_z as f64, p.d as f64, p.d_prime as f64, p.t as f64);
    let (t2, d2) = (t * t, p.delta * p.delta);

    let e1 = BoundTerm::from_ln(
        LN_2 - (n - mz) * (r + 1.0) / (2.0 * n) + 0.5 * d.powi(4) * dp * dp * (n - mz).ln(),
    );
    let e2 = chernoff_like(
        t2 + 1.0,
        d2 / (36.0 * t2 * d * d * dp),
        r * t2 / mz,
        mz / t2,
        dp * d * d * (mz / (2.0 * t2) + 1.0).log2(),
    );
    let e3 = BoundTerm::from_ln((dp * d * d).ln() - mz * d2 / (72.0 * dp * dp * d.powi(4) * t2));
    Ok(ThreeTermBound::new(e1, e2, e3))
}

/// max(0, 1 − h(ε_x) − h(ε_z)), rates clamped to [0, 1/2].
pub fn key_rate(eps_x: f64, eps_z: f64) -> f64 {
    let h = |e: f64| binary_entropy(e.clamp(0.0, 0.5)).expect("clamped");
    (1.0 - h(eps_x) - h(eps_z)).max(0.0)
}

/// Input of the `bounds` report: each section is evaluated when its
/// parameters are present.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundParams {
    pub lo_chau: Option<LoChauParams>,
    pub theorem3: Option<Theorem3Params>,
    pub twisted_lc: Option<TwistedLcParams>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoChauParams {
    pub m_z: u64,
    pub delta: f64,
    #[serde(default)]
    pub n: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BoundsReport {
    pub lo_chau: Option<BoundTerm>,
    /// None when no n was supplied.
    pub lo_chau_condition: Option<bool>,
    pub theorem3: Option<ThreeTermBound>,
    pub twisted_lc: Option<ThreeTermBound>,
}

pub fn bounds_report(p: &BoundParams) -> Result<BoundsReport> {
    Ok(BoundsReport {
        lo_chau: p.lo_chau.map(|l| lo_chau_term(l.m_z, l.delta)),
        lo_chau_condition: p.lo_chau.and_then(|l| l.n.map(|n| lo_chau_condition(l.m_z, n, l.delta))),
        theorem3: p.theorem3.as_ref().map(theorem3_bounds).transpose()?,
        twisted_lc: p.twisted_lc.as_ref().map(twisted_lc_bound).transpose()?,
    })
}
