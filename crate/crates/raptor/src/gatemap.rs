//! Gate-map CSV: header `level,gate,frame,alpha1`, one row per gate and
//! frame, values at nine significant digits.

use std::fmt::Write;

use raptor_core::model::GateMapRow;

/// `%.9g`-style formatting.
pub fn sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    let sci = format!("{v:.8e}");
    // Rounding may bump the exponent (9.999999999 -> 1.00000000e1).
    let exp = sci.rsplit('e').next().and_then(|e| e.parse::<i32>().ok()).unwrap_or(exp);
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let (mantissa, e) = sci.split_once('e').expect("scientific format");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", e.trim_start_matches('-').parse::<i32>().unwrap_or(0))
    }
}

pub fn render_gate_map(rows: &[GateMapRow]) -> String {
    let mut out = String::from("level,gate,frame,alpha1\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.level, r.gate, r.frame, sig9(r.alpha1)).expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.5, "0.5"),
            (0.123456789123, "0.123456789"),
            (1.0 / 3.0, "0.333333333"),
            (0.999999999999, "1"),
            (1e-7, "1e-07"),
            (2.5e-10, "2.5e-10"),
            (123456789.0, "123456789"),
            (1234567891.0, "1.23456789e+09"),
            (0.0, "0"),
            (-0.25, "-0.25"),
            (0.0001, "0.0001"),
            (0.00001, "1e-05"),
        ];
        for (v, want) in cases {
            assert_eq!(sig9(v), want, "{v}");
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = [
            GateMapRow { level: 0, gate: 1, frame: 2, alpha1: 0.25 },
            GateMapRow { level: 1, gate: 0, frame: 0, alpha1: 0.75 },
        ];
        assert_eq!(render_gate_map(&rows), "level,gate,frame,alpha1\n0,1,2,0.25\n1,0,0,0.75\n");
    }
}
