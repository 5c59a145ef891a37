//! Closed-form solutions of `-y'' = z y` continued analytically to `z <= 0`.
//!
//! `sine_kernel(z, x)` is `sin(sqrt(z) x) / sqrt(z)` and `cosine_kernel(z, x)` is
//! `cos(sqrt(z) x)`; for negative `z` they become `sinh`/`cosh`.

/// `S(z, x)`: the solution with `y(0) = 0`, `y'(0) = 1`.
pub fn sine_kernel(z: f64, x: f64) -> f64 {
    if z > 0.0 {
        let u = z.sqrt();
        (u * x).sin() / u
    } else if z < 0.0 {
        let u = (-z).sqrt();
        (u * x).sinh() / u
    } else {
        x
    }
}

/// `C(z, x)`: the solution with `y(0) = 1`, `y'(0) = 0`.
pub fn cosine_kernel(z: f64, x: f64) -> f64 {
    if z > 0.0 {
        (z.sqrt() * x).cos()
    } else if z < 0.0 {
        ((-z).sqrt() * x).cosh()
    } else {
        1.0
    }
}

/// `dS/dz`.
pub fn sine_kernel_dz(z: f64, x: f64) -> f64 {
    let w = z * x * x;
    if w.abs() < 1e-3 {
        // S = x (1 - w/6 + w^2/120 - w^3/5040 + ...)
        x * x * x * (-1.0 / 6.0 + w / 60.0 - w * w / 1680.0 + w * w * w / 90720.0)
    } else {
        (x * cosine_kernel(z, x) - sine_kernel(z, x)) / (2.0 * z)
    }
}

/// `dC/dz`.
pub fn cosine_kernel_dz(z: f64, x: f64) -> f64 {
    -0.5 * x * sine_kernel(z, x)
}

/// `sin(d) / d` with the removable singularity filled in.
pub fn sinc(d: f64) -> f64 {
    if d.abs() < 1e-4 {
        1.0 - d * d / 6.0
    } else {
        d.sin() / d
    }
}

/// `cot(d) - 1/d`, accurate near zero.
pub fn cot_minus_inv(d: f64) -> f64 {
    if d.abs() < 1e-3 {
        -d / 3.0 - d * d * d / 45.0
    } else {
        1.0 / d.tan() - 1.0 / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kernels_at_known_points() {
        assert!((sine_kernel(1.0, PI / 2.0) - 1.0).abs() < 1e-15);
        assert!(cosine_kernel(1.0, PI / 2.0).abs() < 1e-15);
        assert_eq!(sine_kernel(0.0, 0.7), 0.7);
        assert!((sine_kernel(-4.0, 1.0) - 2f64.sinh() / 2.0).abs() < 1e-15);
        assert!((cosine_kernel(-4.0, 1.0) - 2f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn sine_derivative_matches_difference_quotient() {
        for &z in &[-7.0, -1e-5, 0.0, 1e-6, 0.3, 5.0, 90.0] {
            let h = 1e-5 * (1.0 + f64::abs(z));
            let fd = (sine_kernel(z + h, 1.3) - sine_kernel(z - h, 1.3)) / (2.0 * h);
            let an = sine_kernel_dz(z, 1.3);
            assert!(
                (fd - an).abs() < 1e-7 * (1.0 + an.abs()),
                "z={z}: {fd} vs {an}"
            );
        }
    }

    #[test]
    fn cot_series_is_continuous() {
        let a = cot_minus_inv(1e-3 * (1.0 - 1e-12));
        let b = cot_minus_inv(1e-3 * (1.0 + 1e-12));
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }
}
