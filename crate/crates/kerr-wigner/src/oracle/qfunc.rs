//! Husimi Q function of the Kerr-evolved coherent state:
//!
//! Q(tau, gamma) = (1/pi) e^{-lambda - |gamma|^2} |s|^2,
//! s = Sum_n (u^n / n!) e^{+i (tau/2) n (n-1)},   u = alpha conj(gamma).
//!
//! A single modulus-squared of one sum: no sign cancellation across terms'
//! magnitudes, so double precision is adequate at all amplitudes of
//! interest.

use num_complex::Complex64;

use super::prec::{self, PhaseTable};
use super::SeriesPolicy;
use crate::error::{KerrError, Result};

pub struct QFunction {
    alpha: Complex64,
    lambda: f64,
    policy: SeriesPolicy,
    phases: PhaseTable,
}

impl QFunction {
    pub fn new(alpha: Complex64, tau: f64, policy: &SeriesPolicy) -> Self {
        let phases = prec::build_phase_table(tau, policy.max_terms_q_form, 192, false);
        QFunction {
            alpha,
            lambda: alpha.norm_sqr(),
            policy: *policy,
            phases,
        }
    }

    pub fn value(&self, gamma: Complex64) -> Result<f64> {
        let u = self.alpha * gamma.conj();
        let abs_u = u.norm();
        let tol = self.policy.tail_tolerance;
        let mt = self.policy.max_terms_q_form;
        let mut s = Complex64::new(0.0, 0.0);
        let mut m = Complex64::new(1.0, 0.0);
        let mut n = 0usize;
        loop {
            if n > 0 {
                m = m * u / n as f64;
            }
            let (c, si) = self.phases.phasor_f64(n);
            s += m * Complex64::new(c, si);
            let mag = m.norm();
            if n as f64 > abs_u && mag < tol * s.norm().max(1.0) {
                break;
            }
            n += 1;
            if n == mt {
                let ratio = mag / (tol * s.norm().max(1.0));
                return Err(KerrError::InsufficientTerms {
                    max_terms: mt,
                    ratio: if ratio.is_finite() { ratio } else { f64::MAX },
                });
            }
        }
        let pref = std::f64::consts::FRAC_1_PI * (-self.lambda - gamma.norm_sqr()).exp();
        Ok(pref * s.norm_sqr())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_peak_is_one_over_pi() {
        // at tau = 0 the sum is e^{alpha conj(gamma)}; at gamma = alpha the
        // modulus cancels the prefactor exactly
        let q = QFunction::new(Complex64::new(2.0, 0.0), 0.0, &SeriesPolicy::default());
        let v = q.value(Complex64::new(2.0, 0.0)).unwrap();
        assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-14);
    }

    // frozen reference, computed independently at 40 significant digits
    const REF_A2_TPI2_G2I: f64 = 0.0001931549236305930389316268947747492812;

    #[test]
    fn frozen_reference_quarter_period() {
        let q = QFunction::new(
            Complex64::new(2.0, 0.0),
            std::f64::consts::FRAC_PI_2,
            &SeriesPolicy::default(),
        );
        let v = q.value(Complex64::new(0.0, 2.0)).unwrap();
        assert!((v - REF_A2_TPI2_G2I).abs() < 1e-15, "got {v:.17e}");
    }

    #[test]
    fn values_are_nonnegative() {
        let q = QFunction::new(Complex64::new(2.0, 0.0), 0.77, &SeriesPolicy::default());
        for i in 0..40 {
            let th = i as f64 * 0.157;
            let g = Complex64::new(2.2 * th.cos(), 2.2 * th.sin());
            assert!(q.value(g).unwrap() >= 0.0);
        }
    }

    #[test]
    fn starved_budget_errors() {
        let p = SeriesPolicy { max_terms_q_form: 5, ..Default::default() };
        let q = QFunction::new(Complex64::new(2.0, 0.0), 0.3, &p);
        assert!(matches!(
            q.value(Complex64::new(2.0, 0.0)),
            Err(KerrError::InsufficientTerms { max_terms: 5, .. })
        ));
    }
}
