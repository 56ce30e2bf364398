//! Extended-precision building blocks for the oscillatory series.
//!
//! Two tiers above f64:
//!
//! * double-double complex numbers ([`Cdd`], ~32 significant digits) carry
//!   the per-point hot loops;
//! * arbitrary-precision [`astro_float::BigFloat`] evaluates the phase and
//!   damping tables once per (alpha, tau) — their arguments grow like
//!   tau*q^2 and must be range-reduced far beyond double accuracy — and
//!   backs the whole sum when a policy asks for more digits than
//!   double-double provides.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use twofloat::TwoFloat;

pub const RM: RoundingMode = RoundingMode::ToEven;

/// Digits a double-double mantissa reliably carries.
pub const DD_DIGITS: u32 = 31;

/// Complex number with double-double components.
#[derive(Debug, Clone, Copy)]
pub struct Cdd {
    pub re: TwoFloat,
    pub im: TwoFloat,
}

impl Cdd {
    pub const fn zero() -> Self {
        Cdd { re: TwoFloat::from_f64(0.0), im: TwoFloat::from_f64(0.0) }
    }

    pub fn new(re: TwoFloat, im: TwoFloat) -> Self {
        Cdd { re, im }
    }

    pub fn from_f64(re: f64, im: f64) -> Self {
        Cdd { re: TwoFloat::from_f64(re), im: TwoFloat::from_f64(im) }
    }

    pub fn add(self, o: Cdd) -> Self {
        Cdd { re: self.re + o.re, im: self.im + o.im }
    }

    pub fn mul(self, o: Cdd) -> Self {
        Cdd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    pub fn conj(self) -> Self {
        Cdd { re: self.re, im: -self.im }
    }

    pub fn scale(self, s: TwoFloat) -> Self {
        Cdd { re: self.re * s, im: self.im * s }
    }

    pub fn div_f64(self, y: f64) -> Self {
        Cdd { re: dd_div_f64(self.re, y), im: dd_div_f64(self.im, y) }
    }

    pub fn norm_sqr(self) -> TwoFloat {
        self.re * self.re + self.im * self.im
    }

    /// Coarse magnitude for convergence bookkeeping.
    pub fn abs_f64(self) -> f64 {
        let re: f64 = self.re.into();
        let im: f64 = self.im.into();
        re.hypot(im)
    }
}

/// Complex number in arbitrary precision, all operations at `p` bits.
#[derive(Debug, Clone)]
pub struct Cbig {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl Cbig {
    pub fn zero(p: usize) -> Self {
        Cbig { re: BigFloat::from_f64(0.0, p), im: BigFloat::from_f64(0.0, p) }
    }

    pub fn from_f64(re: f64, im: f64, p: usize) -> Self {
        Cbig { re: BigFloat::from_f64(re, p), im: BigFloat::from_f64(im, p) }
    }

    pub fn add(&self, o: &Cbig, p: usize) -> Self {
        Cbig { re: self.re.add(&o.re, p, RM), im: self.im.add(&o.im, p, RM) }
    }

    pub fn mul(&self, o: &Cbig, p: usize) -> Self {
        let rr = self.re.mul(&o.re, p, RM);
        let ii = self.im.mul(&o.im, p, RM);
        let ri = self.re.mul(&o.im, p, RM);
        let ir = self.im.mul(&o.re, p, RM);
        Cbig { re: rr.sub(&ii, p, RM), im: ri.add(&ir, p, RM) }
    }

    pub fn conj(&self) -> Self {
        Cbig { re: self.re.clone(), im: self.im.neg() }
    }

    pub fn div_real(&self, s: &BigFloat, p: usize) -> Self {
        Cbig { re: self.re.div(s, p, RM), im: self.im.div(s, p, RM) }
    }

    pub fn abs_f64(&self) -> f64 {
        big_to_f64(&self.re).hypot(big_to_f64(&self.im))
    }
}

/// ln(a + b) given ln(a), ln(b).
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b| or a == 0
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, f64::mul_add(a, b, -p))
}

/// e^x for a double-double exponent, rounded to f64.
///
/// Exponents like -2|gamma|^2 - lambda reach the hundreds, so they must be
/// formed in double-double or the argument rounding alone costs ~1e-14
/// relative. The exponential itself only has to be f64-grade: libm handles
/// the high word and the low word becomes a first-order factor. twofloat's
/// own exp is not usable here, it wanders off by ~5e-12 for some arguments.
pub fn exp_dd_f64(x: TwoFloat) -> f64 {
    x.hi().exp() * (1.0 + x.lo())
}

/// Double-double divided by a double, accurate to ~3 ulp of the pair.
///
/// twofloat's own `Div`/`recip` only reach f64 accuracy (~5e-17 relative),
/// which wrecks long recurrences like u^q/q!; this is the standard
/// fma-corrected quotient and keeps the full ~1e-32.
pub fn dd_div_f64(x: TwoFloat, y: f64) -> TwoFloat {
    let th = x.hi() / y;
    let (ph, pl) = two_prod(th, y);
    let dh = x.hi() - ph;
    let d = (dh - pl) + x.lo();
    let tl = d / y;
    let (s, e) = fast_two_sum(th, tl);
    TwoFloat::try_from((s, e)).unwrap_or_else(|_| TwoFloat::from_f64(s))
}

pub fn digits_to_bits(digits: u32) -> usize {
    // log2(10) = 3.3219...; a couple of guard words on top
    (digits as f64 * 3.322).ceil() as usize + 16
}

/// Nearest-f64 extraction from a finite BigFloat (truncation suffices here:
/// callers follow up with a residual pass when they need more).
pub fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _n, sign, exp, _inexact)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    // normalized value = fraction(words, msb first) * 2^exp
    let mut acc = 0.0f64;
    let mut scale = (exp as f64 - 64.0).exp2();
    for w in words.iter().rev().take(3) {
        acc += *w as f64 * scale;
        scale *= 2.0f64.powi(-64);
    }
    if sign == Sign::Neg {
        acc = -acc;
    }
    acc
}

/// Two-pass extraction of a double-double from a BigFloat.
pub fn big_to_dd(x: &BigFloat, p: usize) -> TwoFloat {
    let hi = big_to_f64(x);
    if !hi.is_finite() {
        return TwoFloat::from_f64(hi);
    }
    let rem = x.sub(&BigFloat::from_f64(hi, p), p, RM);
    let lo = big_to_f64(&rem);
    // quick-two-sum renormalization keeps the pair non-overlapping
    let s = hi + lo;
    let e = lo - (s - hi);
    TwoFloat::try_from((s, e)).unwrap_or_else(|_| TwoFloat::from_f64(s))
}

/// sin and cos of (tau/2)*n*(n-1) for n in 0..len, plus the table itself as
/// unit phasors. Arguments reach tau*len^2/2 so they are reduced in full
/// precision before evaluation.
pub struct PhaseTable {
    /// e^{+i (tau/2) n (n-1)}
    pub dd: Vec<Cdd>,
    pub f64s: Vec<(f64, f64)>,
    big: Option<Vec<Cbig>>,
}

impl PhaseTable {
    pub fn phasor_f64(&self, n: usize) -> (f64, f64) {
        self.f64s[n]
    }

    pub fn phasor_dd(&self, n: usize) -> Cdd {
        self.dd[n]
    }

    pub fn phasor_big(&self, n: usize) -> &Cbig {
        &self.big.as_ref().expect("table built without big tier")[n]
    }
}

/// Build the phase table at working precision `p_bits` (the big tier is kept
/// only when `keep_big` is set; tests and the high-digit policy path use it).
pub fn build_phase_table(tau: f64, len: usize, p_bits: usize, keep_big: bool) -> PhaseTable {
    let p = p_bits.max(192) + 64; // headroom for the quadratic argument growth
    let mut cc = Consts::new().expect("constants cache");
    let half_tau = BigFloat::from_f64(tau, p).div(&BigFloat::from_f64(2.0, p), p, RM);
    let mut dd = Vec::with_capacity(len);
    let mut f64s = Vec::with_capacity(len);
    let mut big = Vec::with_capacity(if keep_big { len } else { 0 });
    for n in 0..len {
        // n(n-1) is exact in f64 far beyond any term count we use
        let nn = BigFloat::from_f64((n as f64) * (n as f64 - 1.0), p);
        let arg = half_tau.mul(&nn, p, RM);
        let c = arg.cos(p_bits.max(192), RM, &mut cc);
        let s = arg.sin(p_bits.max(192), RM, &mut cc);
        dd.push(Cdd::new(big_to_dd(&c, p), big_to_dd(&s, p)));
        f64s.push((big_to_f64(&c), big_to_f64(&s)));
        if keep_big {
            big.push(Cbig { re: c, im: s });
        }
    }
    PhaseTable { dd, f64s, big: keep_big.then_some(big) }
}

/// Damping factors e^{-lambda e^{i tau d}} for d in -span..=span, indexed by
/// d + span. lambda = |alpha|^2.
pub struct DampingTable {
    pub dd: Vec<Cdd>,
    big: Option<Vec<Cbig>>,
    pub span: usize,
}

impl DampingTable {
    pub fn factor_dd(&self, d: isize) -> Cdd {
        self.dd[(d + self.span as isize) as usize]
    }

    pub fn factor_big(&self, d: isize) -> &Cbig {
        &self.big.as_ref().expect("table built without big tier")[(d + self.span as isize) as usize]
    }
}

pub fn build_damping_table(
    lambda: f64,
    tau: f64,
    span: usize,
    p_bits: usize,
    keep_big: bool,
) -> DampingTable {
    let p = p_bits.max(192) + 64;
    let pw = p_bits.max(192);
    let mut cc = Consts::new().expect("constants cache");
    let lam = BigFloat::from_f64(lambda, p);
    let tau_b = BigFloat::from_f64(tau, p);
    let mut dd = Vec::with_capacity(2 * span + 1);
    let mut big = Vec::with_capacity(if keep_big { 2 * span + 1 } else { 0 });
    for step in 0..=(2 * span as i64) {
        let d = step - span as i64;
        let theta = tau_b.mul(&BigFloat::from_f64(d as f64, p), p, RM);
        // -lambda e^{i theta} = -lambda cos - i lambda sin
        let re = lam.mul(&theta.cos(pw, RM, &mut cc), pw, RM).neg();
        let im = lam.mul(&theta.sin(pw, RM, &mut cc), pw, RM).neg();
        let mag = re.exp(pw, RM, &mut cc);
        let c = Cbig { re: mag.mul(&im.cos(pw, RM, &mut cc), pw, RM), im: mag.mul(&im.sin(pw, RM, &mut cc), pw, RM) };
        dd.push(Cdd::new(big_to_dd(&c.re, pw), big_to_dd(&c.im, pw)));
        if keep_big {
            big.push(c);
        }
    }
    DampingTable { dd, big: keep_big.then_some(big), span }
}
