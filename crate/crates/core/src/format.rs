//! Text formatting of reals for tabular output.

/// Formats `x` like C's `printf("%.6g", x)`.
pub fn g6(x: f64) -> String {
    general(x, 6)
}

/// Formats `x` like C's `%.{precision}g`.
pub fn general(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let p = precision.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    // Rounding to p significant digits decides the exponent.
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// Round-trip representation with 17 significant digits.
pub fn full(x: f64) -> String {
    format!("{:.16e}", x)
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_printf() {
        let cases = [
            (1.6831, "1.6831"),
            (0.232508, "0.232508"),
            (6.6315576, "6.63156"),
            (100.0, "100"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (0.0, "0"),
            (1e100, "1e+100"),
            (999999.5, "1e+06"),
            (0.051277, "0.051277"),
            (1.5e-300, "1.5e-300"),
        ];
        for (x, want) in cases {
            assert_eq!(g6(x), want, "{x}");
        }
        assert_eq!(g6(f64::NAN), "nan");
        assert_eq!(g6(f64::NEG_INFINITY), "-inf");
        assert_eq!(general(1.23456, 3), "1.23");
    }

    #[test]
    fn full_precision_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 6.631557612345678, -1e-310, 2.0f64.sqrt()] {
            assert_eq!(full(x).parse::<f64>().unwrap(), x);
        }
    }

    proptest! {
        #[test]
        fn g6_is_stable_under_reparse(x in -1e12f64..1e12) {
            let s = g6(x);
            let y: f64 = s.parse().unwrap();
            prop_assert_eq!(g6(y), s.clone());
            if x != 0.0 {
                prop_assert!(((y - x) / x).abs() <= 5e-6, "{} -> {}", x, s);
            }
        }
    }
}
