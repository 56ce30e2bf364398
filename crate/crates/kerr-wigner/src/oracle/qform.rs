//! The q-indexed closed form of the lossless Wigner function.
//!
//! W(tau, gamma) = (2/pi) e^{-2|gamma|^2 - lambda} Sum_d C_d S_d, with
//!
//! * u      = 2 conj(alpha) gamma, lambda = |alpha|^2,
//! * a_q    = u^q / q! * e^{-i (tau/2) q (q-1)},
//! * S_d    = Sum_q a_q conj(a_{q+d}),
//! * C_d    = e^{-lambda e^{i tau d}}.
//!
//! The terms oscillate with quadratically growing phase and cancel down by
//! factors up to e^{2 lambda}, so the sum always runs in extended precision.
//! The result is real; whatever imaginary part survives the summation is a
//! direct measure of accumulated arithmetic error and is checked against a
//! hard gate instead of being silently discarded. No conjugate-pair shortcut
//! is taken across +/-d, so the gate stays an honest error detector.

use astro_float::BigFloat;
use num_complex::Complex64;
use twofloat::TwoFloat;

use super::prec::{self, log_add, Cbig, Cdd, DampingTable, PhaseTable};
use super::SeriesPolicy;
use crate::error::{KerrError, Result};

/// Largest imaginary residue (in W units) accepted as numerical noise.
pub const RESIDUE_LIMIT: f64 = 1e-10;

/// Minimum significant digits required of the policy for this form.
pub const PRECISION_FLOOR: u32 = 25;

/// Reusable evaluator: the phase and damping tables depend only on
/// (alpha, tau, policy) and are built once, so rasters pay the
/// arbitrary-precision trigonometry a single time.
pub struct QFormSeries {
    alpha: Complex64,
    lambda: f64,
    policy: SeriesPolicy,
    phases: PhaseTable,
    damping: DampingTable,
    bits: usize,
    use_big: bool,
}

impl QFormSeries {
    pub fn new(alpha: Complex64, tau: f64, policy: &SeriesPolicy) -> Result<Self> {
        if policy.precision_digits < PRECISION_FLOOR {
            return Err(KerrError::PrecisionTooLow {
                required: PRECISION_FLOOR,
                given: policy.precision_digits,
            });
        }
        let lambda = alpha.norm_sqr();
        // cancellation amplifies absolute error by e^{4|alpha||gamma| - 2|gamma|^2},
        // worst over gamma at |gamma| = |alpha|; budget digits for it
        let adaptive = (std::f64::consts::LOG10_E * 2.0 * lambda).ceil() as u32 + 9;
        let digits = policy.precision_digits.max(adaptive);
        let use_big = digits > prec::DD_DIGITS;
        let bits = prec::digits_to_bits(digits);
        let mt = policy.max_terms_q_form;
        let phases = prec::build_phase_table(tau, mt, bits, use_big);
        let damping = prec::build_damping_table(lambda, tau, mt.saturating_sub(1), bits, use_big);
        Ok(QFormSeries {
            alpha,
            lambda,
            policy: *policy,
            phases,
            damping,
            bits,
            use_big,
        })
    }

    /// Number of q terms needed at this |u|, by the tail rule: truncation is
    /// accepted once the remaining-mass bound |a_q| e^{|u|} e^{lambda} drops
    /// below tail_tolerance times the running sum magnitude (floored at 1 in
    /// sum units, i.e. at one prefactor in W units). All bookkeeping is in
    /// log space; magnitudes reach e^{|u|} and would overflow f64 otherwise.
    fn plan_terms(&self, abs_u: f64) -> Result<usize> {
        let mt = self.policy.max_terms_q_form;
        let ln_tol = self.policy.tail_tolerance.ln();
        let ln_u = abs_u.ln();
        let mut ln_mag = 0.0; // ln |u^q / q!|
        let mut ln_s0 = f64::NEG_INFINITY; // ln Sum |a_q|^2
        let mut excess = f64::INFINITY;
        for q in 0..mt {
            if q > 0 {
                ln_mag += ln_u - (q as f64).ln();
            }
            ln_s0 = log_add(ln_s0, 2.0 * ln_mag);
            // |C_0| S_0 = e^{-lambda} S_0 lower-bounds the sum's scale
            let ln_partial = ln_s0 - self.lambda;
            let gate = ln_tol + ln_partial.max(0.0);
            let tail_bound = ln_mag + abs_u + self.lambda;
            excess = tail_bound - gate;
            if q as f64 > abs_u && excess < 0.0 {
                return Ok(q + 1);
            }
        }
        Err(KerrError::InsufficientTerms {
            max_terms: mt,
            ratio: excess.min(700.0).exp(),
        })
    }

    fn sum_dd(&self, u: Complex64, n: usize) -> Cdd {
        let u_dd = Cdd::from_f64(u.re, u.im);
        let mut a = Vec::with_capacity(n);
        let mut m = Cdd::from_f64(1.0, 0.0);
        for q in 0..n {
            if q > 0 {
                m = m.mul(u_dd).div_f64(q as f64);
            }
            a.push(m.mul(self.phases.phasor_dd(q).conj()));
        }
        let span = n as isize - 1;
        let mut sum = Cdd::zero();
        for d in -span..=span {
            let q_lo = (-d).max(0) as usize;
            let q_hi = n - d.max(0) as usize;
            let mut s = Cdd::zero();
            for (q, aq) in a.iter().enumerate().take(q_hi).skip(q_lo) {
                s = s.add(aq.mul(a[(q as isize + d) as usize].conj()));
            }
            sum = sum.add(self.damping.factor_dd(d).mul(s));
        }
        sum
    }

    fn sum_big(&self, u: Complex64, n: usize) -> Cdd {
        let p = self.bits;
        let u_b = Cbig::from_f64(u.re, u.im, p);
        let mut a = Vec::with_capacity(n);
        let mut m = Cbig::from_f64(1.0, 0.0, p);
        for q in 0..n {
            if q > 0 {
                let qq = BigFloat::from_f64(q as f64, p);
                m = m.mul(&u_b, p).div_real(&qq, p);
            }
            a.push(m.mul(&self.phases.phasor_big(q).conj(), p));
        }
        let span = n as isize - 1;
        let mut sum = Cbig::zero(p);
        for d in -span..=span {
            let q_lo = (-d).max(0) as usize;
            let q_hi = n - d.max(0) as usize;
            let mut s = Cbig::zero(p);
            for (q, aq) in a.iter().enumerate().take(q_hi).skip(q_lo) {
                s = s.add(&aq.mul(&a[(q as isize + d) as usize].conj(), p), p);
            }
            sum = sum.add(&self.damping.factor_big(d).mul(&s, p), p);
        }
        Cdd::new(prec::big_to_dd(&sum.re, p), prec::big_to_dd(&sum.im, p))
    }

    pub fn value(&self, gamma: Complex64) -> Result<f64> {
        let u = 2.0 * self.alpha.conj() * gamma;
        let n = self.plan_terms(u.norm())?;
        let sum = if self.use_big {
            self.sum_big(u, n)
        } else {
            self.sum_dd(u, n)
        };
        // prefactor (2/pi) e^{-2|gamma|^2 - lambda}, in double-double
        let gr = TwoFloat::from_f64(gamma.re);
        let gi = TwoFloat::from_f64(gamma.im);
        let ar = TwoFloat::from_f64(self.alpha.re);
        let ai = TwoFloat::from_f64(self.alpha.im);
        let expo = -(gr * gr + gi * gi) * 2.0 - (ar * ar + ai * ai);
        let pref = prec::exp_dd_f64(expo) * (2.0 / std::f64::consts::PI);
        let w = sum.scale(TwoFloat::from_f64(pref));
        let re: f64 = w.re.into();
        let im: f64 = w.im.into();
        let residue = im.abs();
        if residue >= RESIDUE_LIMIT {
            return Err(KerrError::ImaginaryResidue { residue });
        }
        Ok(re)
    }
}
