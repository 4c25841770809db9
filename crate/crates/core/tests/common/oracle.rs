//! Bound exponents re-derived in 256-bit arithmetic.

use astro_float::{BigFloat, Consts, RoundingMode};

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    cc: Consts,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle { cc: Consts::new().expect("constants cache") }
    }
}

fn f(x: f64) -> BigFloat {
    BigFloat::from_f64(x, P)
}

fn u(x: u64) -> BigFloat {
    BigFloat::from_u64(x, P)
}

pub fn to_f64(x: &BigFloat) -> f64 {
    x.to_string().parse().expect("decimal rendering")
}

impl Oracle {
    fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(P, RM, &mut self.cc)
    }

    fn log2(&mut self, x: &BigFloat) -> BigFloat {
        x.log2(P, RM, &mut self.cc)
    }

    fn ln2(&mut self) -> BigFloat {
        self.ln(&u(2))
    }

    /// Binary entropy in bits.
    fn h(&mut self, x: &BigFloat) -> BigFloat {
        let one = u(1);
        let rest = one.sub(x, P, RM);
        let mut acc = u(0);
        for p in [x.clone(), rest] {
            if !p.is_zero() {
                let term = p.mul(&self.log2(&p), P, RM);
                acc = acc.sub(&term, P, RM);
            }
        }
        acc
    }

    fn ln_to_log2(&mut self, x: BigFloat) -> f64 {
        let ln2 = self.ln2();
        to_f64(&x.div(&ln2, P, RM))
    }

    pub fn entropy(&mut self, x: f64) -> f64 {
        to_f64(&self.h(&f(x)))
    }

    /// log₂ of 2e^{−2 m δ²}.
    pub fn lo_chau(&mut self, m_z: u64, delta: f64) -> f64 {
        let d = f(delta);
        let e = u(2).mul(&u(m_z), P, RM).mul(&d, P, RM).mul(&d, P, RM);
        let ln = self.ln2().sub(&e, P, RM);
        self.ln_to_log2(ln)
    }

    /// −(δ²/4 − h(r/n))n + |Z| log₂(n/2 + 1).
    pub fn chernoff(&mut self, delta: f64, n: u64, r: u64, z: u64) -> f64 {
        let d = f(delta);
        let nn = u(n);
        let rate = d.mul(&d, P, RM).div(&u(4), P, RM);
        let h = self.h(&u(r).div(&nn, P, RM));
        let main = rate.sub(&h, P, RM).mul(&nn, P, RM);
        let arg = nn.div(&u(2), P, RM).add(&u(1), P, RM);
        let extra = u(z).mul(&self.log2(&arg), P, RM);
        to_f64(&extra.sub(&main, P, RM))
    }

    /// log₂ of |Z| e^{−kε²/(8|Z|)}.
    pub fn sampling(&mut self, k: u64, eps: f64, z: u64) -> f64 {
        let e = f(eps);
        let decay = u(k).mul(&e, P, RM).mul(&e, P, RM).div(&u(8 * z), P, RM);
        let ln = self.ln(&u(z)).sub(&decay, P, RM);
        self.ln_to_log2(ln)
    }

    /// log₂ of 2e^{−k(r+1)/(2(n+k)) + ½ dim^power ln k}.
    pub fn definetti(&mut self, n: u64, k: u64, r: u64, dim: u64, power: usize) -> f64 {
        let decay = u(k).mul(&u(r + 1), P, RM).div(&u(2 * (n + k)), P, RM);
        let growth = u(dim).powi(power, P, RM).mul(&self.ln(&u(k)), P, RM).div(&u(2), P, RM);
        let ln = self.ln2().sub(&decay, P, RM).add(&growth, P, RM);
        self.ln_to_log2(ln)
    }

    /// (e₁, e₂, e₃) of the indirect/direct comparison, each as log₂.
    #[allow(clippy::too_many_arguments)]
    pub fn theorem3(&mut self, n: u64, m: u64, r: u64, t: u64, d: u64, hs: f64, delta: f64, power: usize) -> [f64; 3] {
        let dl = f(delta);
        let d2 = dl.mul(&dl, P, RM);
        let s2 = f(hs).mul(&f(hs), P, RM);

        let decay = u(n).mul(&u(r + 1), P, RM).div(&u(2 * (2 * m + n)), P, RM);
        let growth = u(d).powi(power, P, RM).mul(&self.ln(&u(n)), P, RM).div(&u(2), P, RM);
        let e1 = self.ln2().sub(&decay, P, RM).add(&growth, P, RM);
        let e1 = self.ln_to_log2(e1);

        let mp = u(m / t);
        let rate = d2.div(&u(4 * t).mul(&s2, P, RM), P, RM);
        let h = self.h(&u(r).div(&mp, P, RM));
        let main = rate.sub(&h, P, RM).mul(&mp, P, RM);
        let extra = u(d).mul(&self.log2(&mp.div(&u(2), P, RM).add(&u(1), P, RM)), P, RM);
        let e2 = self.log2(&u(t + 1)).sub(&main, P, RM).add(&extra, P, RM);

        let decay3 = u(m).mul(&d2, P, RM).div(&u(8 * d).mul(&s2, P, RM), P, RM);
        let e3 = self.ln(&u(d)).sub(&decay3, P, RM);
        [e1, to_f64(&e2), self.ln_to_log2(e3)]
    }

    /// The three terms of the twisted Lo–Chau bound, each as log₂.
    #[allow(clippy::too_many_arguments)]
    pub fn twisted_lc(&mut self, n: u64, m_z: u64, r: u64, d: u64, dp: u64, t: u64, delta: f64) -> [f64; 3] {
        let dl = f(delta);
        let d2 = dl.mul(&dl, P, RM);
        let t2 = u(t * t);
        let dd = u(d);
        let ddp = u(dp);

        let rest = u(n - m_z);
        let decay = rest.mul(&u(r + 1), P, RM).div(&u(2 * n), P, RM);
        let growth = dd.powi(4, P, RM).mul(&ddp.powi(2, P, RM), P, RM).mul(&self.ln(&rest), P, RM).div(&u(2), P, RM);
        let e1 = self.ln2().sub(&decay, P, RM).add(&growth, P, RM);
        let e1 = self.ln_to_log2(e1);

        let count = u(m_z).div(&t2, P, RM);
        let rate = d2.div(&u(36).mul(&t2, P, RM).mul(&dd.powi(2, P, RM), P, RM).mul(&ddp, P, RM), P, RM);
        let h = self.h(&u(r).mul(&t2, P, RM).div(&u(m_z), P, RM));
        let main = rate.sub(&h, P, RM).mul(&count, P, RM);
        let log_arg = count.div(&u(2), P, RM).add(&u(1), P, RM);
        let extra = ddp.mul(&dd.powi(2, P, RM), P, RM).mul(&self.log2(&log_arg), P, RM);
        let e2 = self.log2(&t2.add(&u(1), P, RM)).sub(&main, P, RM).add(&extra, P, RM);

        let denom = u(72).mul(&ddp.powi(2, P, RM), P, RM).mul(&dd.powi(4, P, RM), P, RM).mul(&t2, P, RM);
        let decay3 = u(m_z).mul(&d2, P, RM).div(&denom, P, RM);
        let e3 = self.ln(&ddp.mul(&dd.powi(2, P, RM), P, RM)).sub(&decay3, P, RM);
        [e1, to_f64(&e2), self.ln_to_log2(e3)]
    }
}
