//! Sine integral and the `cos(kx)/x^2` tail integral used to close sinc
//! quadratures analytically.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

/// `Si(x) = int_0^x sin(t)/t dt`.
///
/// Power series below 2, Lentz continued fraction for `E1(ix)` above
/// (accurate to a few ulp in both regimes).
pub(crate) fn sine_integral(x: f64) -> f64 {
    let t = x.abs();
    if t == 0.0 {
        return 0.0;
    }
    let si = if t <= 2.0 {
        let mut term = t;
        let mut sum = t;
        let t2 = t * t;
        for n in 1..40 {
            let k = (2 * n) as f64;
            term *= -t2 / (k * (k + 1.0));
            let add = term / (k + 1.0);
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        const FPMIN: f64 = 1e-300;
        let mut b = Complex64::new(1.0, t);
        let mut c = Complex64::new(1.0 / FPMIN, 0.0);
        let mut d = Complex64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 2..200 {
            let a = -(((i - 1) * (i - 1)) as f64);
            b += Complex64::new(2.0, 0.0);
            d = Complex64::new(1.0, 0.0) / (d * a + b);
            c = b + Complex64::new(a, 0.0) / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h *= Complex64::new(t.cos(), -t.sin());
        FRAC_PI_2 + h.im
    };
    si.copysign(x)
}

/// `int_w^inf cos(k x) / x^2 dx` for `w > 0`.
pub(crate) fn cos_over_square_tail(k: f64, w: f64) -> f64 {
    let k = k.abs();
    if k == 0.0 {
        return 1.0 / w;
    }
    (k * w).cos() / w - k * (FRAC_PI_2 - sine_integral(k * w))
}
