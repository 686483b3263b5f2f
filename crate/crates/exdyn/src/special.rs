//! Gamma function via the Lanczos approximation (g = 7, 9 coefficients),
//! with the reflection formula below 1/2. Relative error stays under 1e-13
//! across (0, 5], comfortably inside the 1e-12 budget the fitting code
//! relies on; the unit tests pin this against 40-digit reference values.

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma(x) for x > 0 (NaN otherwise).
pub fn gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x < 0.5 {
        // Gamma(x) Gamma(1-x) = pi / sin(pi x)
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 40-digit arithmetic.
    const REFERENCE: [(f64, f64); 20] = [
        (0.1, 9.5135076986687318),
        (0.17, 5.4511741801042105),
        (0.25, 3.6256099082219083),
        (0.5, 1.7724538509055160),
        (0.75, 1.2254167024651776),
        (0.9999, 1.0000577314579577),
        (1.0, 1.0),
        (1.2345, 0.90973525835801464),
        (1.5, 0.88622692545275801),
        (1.75, 0.91906252684888323),
        (2.0, 1.0),
        (2.3, 1.1667119051981603),
        (2.5, 1.3293403881791370),
        (3.0, 2.0),
        (3.25, 2.5492569667185293),
        (3.5, 3.3233509704478426),
        (3.9, 5.2993297338097047),
        (4.0, 6.0),
        (4.5, 11.631728396567449),
        (5.0, 24.0),
    ];

    #[test]
    fn matches_reference_values_to_1e12_relative() {
        for (x, want) in REFERENCE {
            let got = gamma(x);
            let rel = ((got - want) / want).abs();
            assert!(rel <= 1e-12, "gamma({x}) = {got}, want {want}, rel err {rel:e}");
        }
    }

    #[test]
    fn recurrence_holds_on_a_dense_grid() {
        // Gamma(x+1) = x Gamma(x), checked with no reference data.
        let mut x = 0.05;
        while x < 4.0 {
            let lhs = gamma(x + 1.0);
            let rhs = x * gamma(x);
            let rel = ((lhs - rhs) / lhs).abs();
            assert!(rel <= 1e-12, "recurrence fails at x = {x}: rel err {rel:e}");
            x += 0.013;
        }
    }

    #[test]
    fn half_integer_closed_form() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!(((gamma(1.5) - sqrt_pi / 2.0) / gamma(1.5)).abs() < 1e-14);
        assert!(((gamma(2.5) - 0.75 * sqrt_pi) / gamma(2.5)).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_arguments() {
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-1.5).is_nan());
        assert!(gamma(f64::NAN).is_nan());
    }
}
