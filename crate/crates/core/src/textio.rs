//! Text matrix format shared by Hermitian and unitary minors.
//!
//! Header line `n <dim>` (prefixed by a tag word for non-Hermitian kinds),
//! then one row per line of space-separated `re:im` pairs. Floats carry 17
//! significant digits so a write/parse cycle is exact.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::io::{self, Write};

/// Parse failures carry the 1-based offending line.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("text matrix line {line}: {detail}")]
pub struct TextMatrixError {
    pub line: usize,
    pub detail: String,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_matrix<W: Write>(
    w: &mut W,
    tag: Option<&str>,
    entries: &DMatrix<Complex64>,
) -> io::Result<()> {
    let n = entries.nrows();
    match tag {
        Some(t) => writeln!(w, "{t} n {n}")?,
        None => writeln!(w, "n {n}")?,
    }
    for j in 0..n {
        let mut row = String::with_capacity(n * 48);
        for k in 0..n {
            if k > 0 {
                row.push(' ');
            }
            let v = entries[(j, k)];
            row.push_str(&fmt_f64(v.re));
            row.push(':');
            row.push_str(&fmt_f64(v.im));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

pub fn parse_matrix(
    text: &str,
    expected_tag: Option<&str>,
) -> Result<DMatrix<Complex64>, TextMatrixError> {
    let bad = |line: usize, detail: &str| TextMatrixError {
        line,
        detail: detail.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty input"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let dim_str = match (expected_tag, fields.as_slice()) {
        (None, ["n", d]) => d,
        (Some(t), [tag, "n", d]) if *tag == t => d,
        _ => return Err(bad(1, "malformed header")),
    };
    let n: usize = dim_str
        .parse()
        .map_err(|_| bad(1, "malformed dimension"))?;
    let mut entries = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let line_no = j + 2;
        let row = lines
            .next()
            .ok_or_else(|| bad(line_no, "missing row"))?;
        let mut k = 0;
        for pair in row.split_whitespace() {
            if k >= n {
                return Err(bad(line_no, "too many entries"));
            }
            let (re, im) = pair
                .split_once(':')
                .ok_or_else(|| bad(line_no, "entry is not re:im"))?;
            let re: f64 = re.parse().map_err(|_| bad(line_no, "bad real part"))?;
            let im: f64 = im.parse().map_err(|_| bad(line_no, "bad imaginary part"))?;
            entries[(j, k)] = Complex64::new(re, im);
            k += 1;
        }
        if k != n {
            return Err(bad(line_no, "too few entries"));
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(bad(n + 2, "trailing content"));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, -2.25),
                Complex64::new(0.5, 2.25),
                Complex64::new(-3.0, 0.0),
            ],
        )
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let mut buf = Vec::new();
        write_matrix(&mut buf, None, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n 2\n"));
        let back = parse_matrix(&text, None).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn tagged_round_trip() {
        let m = sample();
        let mut buf = Vec::new();
        write_matrix(&mut buf, Some("unitary"), &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("unitary n 2\n"));
        assert_eq!(parse_matrix(&text, Some("unitary")).unwrap(), m);
        assert!(parse_matrix(&text, None).is_err());
    }

    #[test]
    fn malformed_inputs_report_line() {
        assert_eq!(parse_matrix("", None).unwrap_err().line, 1);
        assert_eq!(parse_matrix("n 2\n1:0 2:0\n", None).unwrap_err().line, 3);
        assert_eq!(
            parse_matrix("n 1\n1:0 2:0\n", None).unwrap_err().line,
            2
        );
        assert_eq!(parse_matrix("n 1\nxyz\n", None).unwrap_err().line, 2);
    }
}
