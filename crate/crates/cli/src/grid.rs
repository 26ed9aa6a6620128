//! List-valued flags.
//!
//! Each comma-separated item is a number or a generator:
//! `log:<lo>:<hi>:<count>` (log-spaced), `lin:<lo>:<hi>:<count>` for reals,
//! and `<lo>:<hi>` (inclusive) for integers.

use crate::error::{usage, CliError};

fn real(flag: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("--{flag}: `{s}` is not a number")))
}

fn count(flag: &str, s: &str) -> Result<usize, CliError> {
    match s.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(usage(format!("--{flag}: point count `{s}` must be a positive integer"))),
    }
}

pub fn reals(flag: &str, items: &[String]) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in items {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(real(flag, one)?),
            ["log", lo, hi, n] => {
                let (lo, hi, n) = (real(flag, lo)?, real(flag, hi)?, count(flag, n)?);
                if !(lo > 0.0 && hi > 0.0) {
                    return Err(usage(format!("--{flag}: log-spaced grid needs positive end points")));
                }
                let (a, b) = (lo.log10(), hi.log10());
                out.extend((0..n).map(|i| if n == 1 { lo } else { 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64) }));
            }
            ["lin", lo, hi, n] => {
                let (lo, hi, n) = (real(flag, lo)?, real(flag, hi)?, count(flag, n)?);
                out.extend((0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }));
            }
            _ => {
                return Err(usage(format!(
                    "--{flag}: `{item}` is neither a number nor log:<lo>:<hi>:<count> / lin:<lo>:<hi>:<count>"
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(usage(format!("--{flag}: empty list")));
    }
    Ok(out)
}

pub fn integers(flag: &str, items: &[String]) -> Result<Vec<usize>, CliError> {
    let int = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("--{flag}: `{s}` is not a non-negative integer")))
    };
    let mut out = Vec::new();
    for item in items {
        match item.split_once(':') {
            None => out.push(int(item)?),
            Some((lo, hi)) => {
                let (lo, hi) = (int(lo)?, int(hi)?);
                if lo > hi {
                    return Err(usage(format!("--{flag}: empty range {item}")));
                }
                out.extend(lo..=hi);
            }
        }
    }
    if out.is_empty() {
        return Err(usage(format!("--{flag}: empty list")));
    }
    Ok(out)
}

/// Shortest text that parses back to the same `f64`.
pub fn show(x: f64) -> String {
    format!("{x}")
}

pub fn show_reals(xs: &[f64]) -> String {
    xs.iter().map(|x| show(*x)).collect::<Vec<_>>().join(",")
}

pub fn show_integers(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn generators() {
        assert_eq!(reals("snr", &s(&["log:1e2:1e6:3"])).unwrap(), vec![1e2, 1e4, 1e6]);
        assert_eq!(reals("c", &s(&["lin:-1:1:5", "7"])).unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0, 7.0]);
        assert_eq!(integers("L", &s(&["1:3", "8"])).unwrap(), vec![1, 2, 3, 8]);
        assert!(reals("snr", &s(&["log:0:1:3"])).is_err());
        assert!(integers("n", &s(&["x"])).is_err());
    }

    #[test]
    fn shown_values_parse_back() {
        for x in [0.1, 1e-300, 100.0, 1.0 / 3.0] {
            assert_eq!(show(x).parse::<f64>().unwrap(), x);
        }
    }
}
