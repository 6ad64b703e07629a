use super::{random_partial_ktree, SparsityPattern};
use crate::error::{Error, Result};

pub fn path_graph(n: usize) -> SparsityPattern {
    SparsityPattern::from_columns0(n, (0..n).map(|j| if j + 1 < n { vec![j + 1] } else { vec![] }).collect())
}

pub fn cycle_graph(n: usize) -> SparsityPattern {
    let mut p = path_graph(n);
    if n >= 3 {
        p = p.union(&SparsityPattern::new(n, [(n, 1)]).expect("in range")).expect("same order");
    }
    p
}

/// Star with vertex 1 as the centre.
pub fn star_graph(n: usize) -> SparsityPattern {
    let mut cols = vec![Vec::new(); n];
    if n > 0 {
        cols[0] = (1..n).collect();
    }
    SparsityPattern::from_columns0(n, cols)
}

pub fn complete_graph(n: usize) -> SparsityPattern {
    SparsityPattern::complete(n).off_diagonal()
}

/// `rows × cols` grid, vertices numbered row-major.
pub fn grid_graph(rows: usize, cols: usize) -> SparsityPattern {
    let n = rows * cols;
    let mut c = vec![Vec::new(); n];
    for r in 0..rows {
        for s in 0..cols {
            let v = r * cols + s;
            if s + 1 < cols {
                c[v].push(v + 1);
            }
            if r + 1 < rows {
                c[v].push(v + cols);
            }
        }
    }
    SparsityPattern::from_columns0(n, c)
}

/// The graph joining vertices at distance one or two in `g`.
pub fn square_graph(g: &SparsityPattern) -> SparsityPattern {
    let n = g.order();
    let adj = g.adjacency0();
    let mut cols = vec![Vec::new(); n];
    for v in 0..n {
        for &u in &adj[v] {
            cols[v.min(u)].push(v.max(u));
            for &w in &adj[u] {
                if w != v {
                    cols[v.min(w)].push(v.max(w));
                }
            }
        }
    }
    SparsityPattern::from_columns0(n, cols).off_diagonal()
}

/// Parses a graph description: `path:N`, `cycle:N`, `star:N`, `complete:N`,
/// `empty:N`, `grid:RxC`, or `ktree:K:N[:RATIO]` (seeded by `seed`).
pub fn parse_graph_spec(spec: &str, seed: u64) -> Result<SparsityPattern> {
    let bad = || Error::InvalidArgument(format!("unrecognized graph spec '{spec}'"));
    let mut parts = spec.split(':');
    let kind = parts.next().ok_or_else(bad)?;
    let args: Vec<&str> = parts.collect();
    let num = |i: usize| -> Result<usize> { args.get(i).and_then(|s| s.parse().ok()).ok_or_else(bad) };
    match kind {
        "path" => Ok(path_graph(num(0)?)),
        "cycle" => Ok(cycle_graph(num(0)?)),
        "star" => Ok(star_graph(num(0)?)),
        "complete" => Ok(complete_graph(num(0)?)),
        "empty" => Ok(SparsityPattern::empty(num(0)?)),
        "grid" => {
            let (r, c) = args.first().and_then(|s| s.split_once('x')).ok_or_else(bad)?;
            Ok(grid_graph(r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?))
        }
        "ktree" => {
            let ratio = match args.get(2) {
                Some(s) => Some(s.parse::<f64>().map_err(|_| bad())?),
                None => None,
            };
            Ok(random_partial_ktree(num(0)?, num(1)?, ratio, seed)?.pattern)
        }
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_edge_is_edge() {
        let g = path_graph(2);
        assert_eq!(square_graph(&g), g);
    }

    #[test]
    fn square_of_star_is_complete() {
        assert_eq!(square_graph(&star_graph(6)), complete_graph(6));
    }

    #[test]
    fn square_of_path() {
        let sq = square_graph(&path_graph(4));
        let want = SparsityPattern::new(4, [(2, 1), (3, 2), (4, 3), (3, 1), (4, 2)]).unwrap();
        assert_eq!(sq, want);
    }

    #[test]
    fn specs_parse() {
        assert_eq!(parse_graph_spec("cycle:10", 0).unwrap().num_off_diagonal(), 10);
        assert_eq!(parse_graph_spec("grid:2x3", 0).unwrap().num_off_diagonal(), 7);
        assert!(parse_graph_spec("blob:3", 0).is_err());
    }
}
