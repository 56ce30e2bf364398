//! 4th-order centered finite-difference weights on offsets -2..=2.
//!
//! Mixed derivatives (d_r d_phi, d_r^2 d_phi) are tensor products of these
//! 1-D vectors; the discretization module builds them that way.

/// Weights of the first derivative: (f_{k-2} - 8 f_{k-1} + 8 f_{k+1} - f_{k+2}) / (12 h).
pub fn stencil_first_derivative(h: f64) -> [f64; 5] {
    assert!(h > 0.0);
    let s = 1.0 / (12.0 * h);
    [s, -8.0 * s, 0.0, 8.0 * s, -s]
}

/// Weights of the second derivative:
/// (-f_{k-2} + 16 f_{k-1} - 30 f_k + 16 f_{k+1} - f_{k+2}) / (12 h^2).
pub fn stencil_second_derivative(h: f64) -> [f64; 5] {
    assert!(h > 0.0);
    let s = 1.0 / (12.0 * h * h);
    [-s, 16.0 * s, -30.0 * s, 16.0 * s, -s]
}

/// Weights of the third derivative:
/// (-f_{k-2} + 2 f_{k-1} - 2 f_{k+1} + f_{k+2}) / (2 h^3).
pub fn stencil_third_derivative(h: f64) -> [f64; 5] {
    assert!(h > 0.0);
    let s = 1.0 / (2.0 * h * h * h);
    [-s, 2.0 * s, 0.0, -2.0 * s, s]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(w: &[f64; 5], f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-2..=2).map(|o| w[(o + 2) as usize] * f(x + o as f64 * h)).sum()
    }

    #[test]
    fn first_derivative_exact_on_low_polynomials() {
        let h = 0.1;
        let w = stencil_first_derivative(h);
        assert!((apply(&w, |x| x, 1.3, h) - 1.0).abs() < 1e-13);
        // degree 4 is still differentiated exactly
        assert!((apply(&w, |x| x.powi(4), 1.0, h) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn first_derivative_of_sine() {
        let h = 0.01;
        let w = stencil_first_derivative(h);
        assert!((apply(&w, f64::sin, 0.0, h) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn second_derivative_exact_on_square() {
        let h = 0.2;
        let w = stencil_second_derivative(h);
        assert!((apply(&w, |x| x * x, 0.7, h) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn third_derivative_exact_on_cube() {
        let h = 0.2;
        let w = stencil_third_derivative(h);
        assert!((apply(&w, |x| x.powi(3), 0.4, h) - 6.0).abs() < 1e-11);
    }

    #[test]
    fn mixed_tensor_product_differentiates_r_phi() {
        // d_r d_phi applied to f(r, phi) = r * phi equals 1
        let (hr, hp) = (0.05, 0.03);
        let wr = stencil_first_derivative(hr);
        let wp = stencil_first_derivative(hp);
        let (r0, p0) = (2.0, 1.0);
        let mut acc = 0.0;
        for a in -2..=2i32 {
            for b in -2..=2i32 {
                let r = r0 + a as f64 * hr;
                let p = p0 + b as f64 * hp;
                acc += wr[(a + 2) as usize] * wp[(b + 2) as usize] * (r * p);
            }
        }
        assert!((acc - 1.0).abs() < 1e-12);
    }
}
