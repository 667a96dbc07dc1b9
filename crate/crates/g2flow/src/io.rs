//! Text serialization of form fields.
//!
//! ```text
//! g2flow-field 1
//! n <n1> .. <n7>
//! len <l1> .. <l7>
//! stencil <central2|central4|spectral>
//! degree <p>
//! <node 0: C(7,p) coefficients>
//! <node 1: ...>
//! ```
//!
//! Nodes follow the grid's row-major order (axis 7 fastest); coefficients
//! follow the lexicographic basis of the degree. Reals are written in the
//! shortest form that parses back to the same bits, so a write/read cycle is
//! exact and identical fields give identical bytes.

use crate::error::{Error, Result};
use crate::exterior::{dim, N};
use crate::field::FormField;
use crate::grid::{Stencil, TorusGrid};
use std::io::{BufRead, Write};
use std::sync::Arc;

const MAGIC: &str = "g2flow-field 1";

fn stencil_name(s: Stencil) -> &'static str {
    match s {
        Stencil::Central2 => "central2",
        Stencil::Central4 => "central4",
        Stencil::Spectral => "spectral",
    }
}

fn join<T: std::fmt::LowerExp>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

pub fn write_field(field: &FormField, mut w: impl Write) -> Result<()> {
    let g = field.grid();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "n {}", g.n().map(|k| k.to_string()).join(" "))?;
    writeln!(w, "len {}", join(&g.len()))?;
    writeln!(w, "stencil {}", stencil_name(g.stencil()))?;
    writeln!(w, "degree {}", field.degree())?;
    let width = dim(field.degree()).max(1);
    for node in field.values().chunks(width) {
        writeln!(w, "{}", join(node))?;
    }
    Ok(())
}

fn format_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("line {line}: {msg}"))
}

fn header(lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>, tag: &str) -> Result<(usize, String)> {
    let (i, l) = lines.next().ok_or_else(|| Error::Format(format!("missing '{tag}' header")))?;
    let l = l?;
    let rest = l
        .strip_prefix(tag)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| format_err(i + 1, format!("expected '{tag}'")))?;
    Ok((i + 1, rest.to_string()))
}

fn numbers<T: std::str::FromStr>(line: usize, text: &str, count: usize) -> Result<Vec<T>> {
    let v: Vec<T> = text
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| format_err(line, format!("cannot parse '{t}'"))))
        .collect::<Result<_>>()?;
    if v.len() != count {
        return Err(format_err(line, format!("expected {count} values, found {}", v.len())));
    }
    Ok(v)
}

pub fn read_field(r: impl BufRead) -> Result<FormField> {
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(l))) if l == MAGIC => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(format_err(1, format!("expected '{MAGIC}'"))),
    }
    let (ln, t) = header(&mut lines, "n")?;
    let n: [usize; N] = numbers(ln, &t, N)?.try_into().expect("length checked");
    let (ln, t) = header(&mut lines, "len")?;
    let len: [f64; N] = numbers(ln, &t, N)?.try_into().expect("length checked");
    let (ln, t) = header(&mut lines, "stencil")?;
    let stencil = match t.as_str() {
        "central2" => Stencil::Central2,
        "central4" => Stencil::Central4,
        "spectral" => Stencil::Spectral,
        other => return Err(format_err(ln, format!("unknown stencil '{other}'"))),
    };
    let (ln, t) = header(&mut lines, "degree")?;
    let degree: usize = numbers(ln, &t, 1)?[0];
    if degree > N {
        return Err(format_err(ln, format!("degree {degree} exceeds {N}")));
    }
    let grid = Arc::new(TorusGrid::with_stencil(n, len, stencil).map_err(|e| format_err(ln, e))?);
    let width = dim(degree);
    let mut values = Vec::with_capacity(grid.node_count() * width);
    for _ in 0..grid.node_count() {
        let (i, l) = lines.next().ok_or_else(|| Error::Format("truncated coefficient block".into()))?;
        values.extend(numbers::<f64>(i + 1, &l?, width)?);
    }
    if let Some((i, _)) = lines.find(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty())) {
        return Err(format_err(i + 1, "trailing data"));
    }
    FormField::from_values(&grid, degree, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn sample() -> FormField {
        let g = Arc::new(TorusGrid::new([3, 2, 1, 1, 1, 1, 1], [1.5, std::f64::consts::TAU, 1.0, 1.0, 1.0, 1.0, 1.0], 4).unwrap());
        let mut rng = SeededRng::new(5);
        let values = rng.normal_vec(35 * g.node_count());
        FormField::from_values(&g, 3, values).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(**back.grid(), **f.grid());
        let mut again = Vec::new();
        write_field(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn rejects_malformed_input() {
        let mut buf = Vec::new();
        write_field(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bad = |t: String| matches!(read_field(t.as_bytes()), Err(Error::Format(_)));
        assert!(bad(text.replace("g2flow-field 1", "other")));
        assert!(bad(text.replace("central4", "central6")));
        assert!(bad(text.lines().take(8).collect::<Vec<_>>().join("\n")));
        assert!(bad(format!("{text}1 2 3\n")));
        let mut rows: Vec<&str> = text.lines().collect();
        rows[6] = "1 2";
        assert!(bad(rows.join("\n")));
    }
}
