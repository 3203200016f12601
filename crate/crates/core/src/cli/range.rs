//! Parameter ranges on the command line: `0.1:0.99:0.01`, `2:20`, `0.75`.

use crate::{Error, Result};

fn bad(s: &str, why: &str) -> Error {
    Error::Config(format!("invalid range '{s}': {why}"))
}

/// `a`, or the inclusive arithmetic sequence `a:b:step`.
pub fn parse_reals(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad(s, "not a number"));
    match parts.as_slice() {
        [a] => Ok(vec![num(a)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(a.is_finite() && b.is_finite() && step > 0.0) || b < a {
                return Err(bad(s, "need a <= b and a positive step"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(bad(s, "too many points"));
            }
            Ok((0..count).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(bad(s, "expected a or a:b:step")),
    }
}

/// `n`, or the inclusive integer range `a:b`.
pub fn parse_ints(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<usize>().map_err(|_| bad(s, "not a nonnegative integer"));
    match parts.as_slice() {
        [a] => Ok(vec![num(a)?]),
        [a, b] => {
            let (a, b) = (num(a)?, num(b)?);
            if b < a {
                return Err(bad(s, "need a <= b"));
            }
            Ok((a..=b).collect())
        }
        _ => Err(bad(s, "expected n or a:b")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_ranges() {
        let v = parse_reals("0.1:0.99:0.01").unwrap();
        assert_eq!(v.len(), 90);
        assert!((v[89] - 0.99).abs() < 1e-12);
        assert_eq!(parse_reals("0.75").unwrap(), vec![0.75]);
        assert_eq!(parse_reals("0.05:0.95:0.05").unwrap().len(), 19);
        for s in ["", "a", "1:0:0.1", "0:1:0", "0:1", "0:1:2:3"] {
            assert!(parse_reals(s).is_err(), "{s}");
        }
    }

    #[test]
    fn int_ranges() {
        assert_eq!(parse_ints("1:20").unwrap().len(), 20);
        assert_eq!(parse_ints("4").unwrap(), vec![4]);
        assert!(parse_ints("5:2").is_err() && parse_ints("-1").is_err() && parse_ints("1:2:3").is_err());
    }
}
