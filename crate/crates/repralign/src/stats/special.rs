//! Special functions needed for the t-distribution tail: log-gamma
//! (Lanczos approximation, g = 7) and the regularized incomplete beta
//! function via the Lentz continued fraction.

/// Two-sided p-value for a correlation coefficient r over n pairs, via
/// t = r sqrt((n-2)/(1-r^2)) against Student's t with n-2 degrees of
/// freedom. |r| = 1 yields exactly 0.
pub fn student_t_two_sided_p(r: f64, n: usize) -> f64 {
    debug_assert!(n >= 3);
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let nu = (n - 2) as f64;
    let t2 = r * r * nu / (1.0 - r * r);
    // P(|T| >= t) = I_{nu/(nu+t^2)}(nu/2, 1/2)
    regularized_incomplete_beta(nu / (nu + t2), nu / 2.0, 0.5)
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and
/// x in [0, 1].
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x = {x} outside [0, 1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b)
        - ln_gamma(a)
        - ln_gamma(b))
        .exp();
    // the continued fraction converges fastest for x < (a+1)/(a+b+2)
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

/// Continued fraction for the incomplete beta, modified Lentz method.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Natural log of the gamma function for positive arguments.
pub(crate) fn ln_gamma(z: f64) -> f64 {
    // Lanczos, g = 7, 9 coefficients
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(z > 0.0);
    if z < 0.5 {
        // reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return (std::f64::consts::PI / (std::f64::consts::PI * z).sin()).ln()
            - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (z + (i + 1) as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_integers_and_half() {
        // Gamma(n) = (n-1)!
        let mut fact = 1.0f64;
        for n in 1..=15u32 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-10, "n = {n}");
            fact *= n as f64;
        }
        // Gamma(1/2) = sqrt(pi)
        let expect = std::f64::consts::PI.sqrt().ln();
        assert!((ln_gamma(0.5) - expect).abs() < 1e-12);
    }

    #[test]
    fn beta_symmetry_and_endpoints() {
        assert_eq!(regularized_incomplete_beta(0.0, 2.0, 3.0), 0.0);
        assert_eq!(regularized_incomplete_beta(1.0, 2.0, 3.0), 1.0);
        for &(x, a, b) in &[(0.3, 2.0, 5.0), (0.7, 0.5, 0.5), (0.25, 10.0, 1.5)] {
            let lhs = regularized_incomplete_beta(x, a, b);
            let rhs = 1.0 - regularized_incomplete_beta(1.0 - x, b, a);
            assert!((lhs - rhs).abs() < 1e-13, "({x},{a},{b})");
        }
    }

    #[test]
    fn beta_closed_forms() {
        // I_x(1, 1) = x
        for x in [0.1, 0.42, 0.9] {
            assert!((regularized_incomplete_beta(x, 1.0, 1.0) - x).abs() < 1e-14);
        }
        // I_x(1, b) = 1 - (1-x)^b
        let v = regularized_incomplete_beta(0.3, 1.0, 4.0);
        assert!((v - (1.0 - 0.7f64.powi(4))).abs() < 1e-14);
        // I_x(0.5, 0.5) = (2/pi) asin(sqrt(x))  (arcsine law)
        let v = regularized_incomplete_beta(0.2, 0.5, 0.5);
        let expect = 2.0 / std::f64::consts::PI * 0.2f64.sqrt().asin();
        assert!((v - expect).abs() < 1e-13);
    }

    #[test]
    fn t_tail_matches_cauchy_for_one_dof() {
        // nu = 1 (n = 3) is Cauchy: P(|T| >= t) = 1 - (2/pi) atan(t)
        for r in [0.1, 0.5, 0.9] {
            let t = r * (1.0f64 / (1.0 - r * r)).sqrt();
            let p = student_t_two_sided_p(r, 3);
            let expect = 1.0 - 2.0 / std::f64::consts::PI * t.atan();
            assert!((p - expect).abs() < 1e-13, "r = {r}: {p} vs {expect}");
        }
    }

    #[test]
    fn t_tail_limits() {
        assert_eq!(student_t_two_sided_p(1.0, 10), 0.0);
        assert_eq!(student_t_two_sided_p(-1.0, 10), 0.0);
        assert!((student_t_two_sided_p(0.0, 10) - 1.0).abs() < 1e-14);
    }
}
