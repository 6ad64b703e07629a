use std::io::{BufRead, Write};

use super::SparsityPattern;
use crate::error::{Error, Result};

/// Reads `n m` followed by `m` lines `i j` (1-based). Blank lines and lines
/// starting with `#` are skipped.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<SparsityPattern> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace().map(str::parse::<usize>);
        let (a, b) = match (it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b))) => (a, b),
            _ => {
                return Err(Error::Parse { line: lineno + 1, msg: format!("expected two integers, got '{t}'") })
            }
        };
        if header.is_none() {
            header = Some((a, b));
        } else {
            edges.push((a, b));
        }
    }
    let (n, m) = header.ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
    if edges.len() != m {
        return Err(Error::Parse { line: 0, msg: format!("header promises {m} edges, found {}", edges.len()) });
    }
    if let Some(&(a, _)) = edges.iter().find(|&&(a, b)| a == b) {
        return Err(Error::Parse { line: 0, msg: format!("self loop at vertex {a}") });
    }
    SparsityPattern::new(n, edges)
}

/// Writes the off-diagonal pairs in canonical order.
pub fn write_edge_list<W: Write>(mut w: W, g: &SparsityPattern) -> Result<()> {
    let off = g.off_diagonal();
    writeln!(w, "{} {}", off.order(), off.len())?;
    for (i, j) in off.pairs() {
        writeln!(w, "{i} {j}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = SparsityPattern::new(4, [(1, 2), (4, 3), (4, 1)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &g).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "4 3\n2 1\n4 1\n4 3\n");
        assert_eq!(read_edge_list(&buf[..]).unwrap(), g);
    }

    #[test]
    fn count_mismatch() {
        assert!(read_edge_list("3 2\n1 2\n".as_bytes()).is_err());
    }
}
