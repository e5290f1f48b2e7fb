//! Exact text encoding of `f64` in C99 `%a` style, e.g. `-0x1.8p+1`.

/// Formats `v` so that [`parse`] returns the identical bit pattern.
pub fn format(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    let sign = if v.is_sign_negative() { "-" } else { "" };
    if v.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = v.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if biased == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let digits = format!("{mantissa:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exp:+}")
    }
}

pub fn parse(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => hexf_parse::parse_hexf64(s, false).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_encodings() {
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(-3.0), "-0x1.8p+1");
        assert_eq!(format(0.1), "0x1.999999999999ap-4");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(format(-0.0), "-0x0p+0");
        assert_eq!(format(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
        assert_eq!(format(f64::MAX), "0x1.fffffffffffffp+1023");
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse("1.5"), None);
        assert_eq!(parse("0x1.8"), None);
        assert_eq!(parse(""), None);
    }

    #[test]
    fn extremes_roundtrip() {
        for v in [f64::MIN_POSITIVE, 5e-324, -5e-324, f64::MAX, f64::MIN, 1e-310, -0.0, f64::INFINITY] {
            assert_eq!(parse(&format(v)).unwrap().to_bits(), v.to_bits(), "{v}");
        }
        assert!(parse(&format(f64::NAN)).unwrap().is_nan());
    }

    proptest! {
        #[test]
        fn any_finite_bits_roundtrip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            prop_assert_eq!(parse(&format(v)).unwrap().to_bits(), bits);
        }
    }
}
