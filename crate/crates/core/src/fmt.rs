//! Deterministic float formatting for CSV output: 9 significant digits,
//! fixed notation where readable, trimmed trailing zeros.

/// Format with 9 significant digits (printf `%.9g`-style).
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    }
}

#[cfg(test)]
mod tests {
    use super::sig9;

    #[test]
    fn formats_representative_values() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(-2.5), "-2.5");
        assert_eq!(sig9(0.025541736411811101), "0.0255417364");
        assert_eq!(sig9(123.456789123), "123.456789");
        assert_eq!(sig9(1e9), "1e9");
        assert_eq!(sig9(9.999000099990001e-5), "9.9990001e-5");
        assert_eq!(sig9(2.302585092994046), "2.30258509");
    }

    #[test]
    fn round_trips_within_nine_digits() {
        let mut rng = crate::rng::root(5);
        use rand::Rng;
        for _ in 0..200 {
            let x: f64 = (rng.gen::<f64>() - 0.5) * 10f64.powi(rng.gen_range(-8..9));
            let parsed: f64 = sig9(x).parse().unwrap();
            let rel = ((parsed - x) / x).abs();
            assert!(rel < 5e-9, "{x} -> {} (rel {rel})", sig9(x));
        }
    }
}
