//! SDPA sparse (`.dat-s`) and JSON problem files.
//!
//! SDPA describes `max ⟨F_0, Y⟩ s.t. ⟨F_i, Y⟩ = c_i, Y ⪰ 0`; a problem is
//! read as `C = −F_0`, `A_i = F_i`, `b = c` with equality senses unless a
//! `<name>.sense.json` sidecar says otherwise. Blocks are placed along the
//! diagonal of a single matrix.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{SdpProblem, Sense};
use crate::error::{Error, Result};
use crate::matrix::SparseSym;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads an SDPA sparse problem. All senses are equalities.
pub fn read_sdpa<R: BufRead>(reader: R) -> Result<SdpProblem> {
    // Tokens with their line numbers, comments stripped.
    let mut toks: Vec<(usize, String)> = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim_start();
        if t.starts_with('"') || t.starts_with('*') {
            continue;
        }
        for w in t.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')')) {
            if !w.is_empty() {
                toks.push((k + 1, w.to_string()));
            }
        }
    }
    let mut it = toks.into_iter().peekable();
    let mut next = |what: &str| -> Result<(usize, String)> {
        it.next().ok_or_else(|| parse_err(0, format!("unexpected end of file, expected {what}")))
    };
    let int = |(l, s): (usize, String)| -> Result<i64> {
        s.parse::<i64>().map_err(|_| parse_err(l, format!("expected an integer, got '{s}'")))
    };
    let real = |(l, s): (usize, String)| -> Result<f64> {
        s.parse::<f64>().map_err(|_| parse_err(l, format!("expected a number, got '{s}'")))
    };
    let m = int(next("m")?)?;
    let nblocks = int(next("block count")?)?;
    if m < 0 || nblocks <= 0 {
        return Err(parse_err(0, "constraint and block counts must be positive"));
    }
    let (m, nblocks) = (m as usize, nblocks as usize);
    let mut offsets = Vec::with_capacity(nblocks);
    let mut sizes = Vec::with_capacity(nblocks);
    let mut n = 0;
    for _ in 0..nblocks {
        let tok = next("block size")?;
        let line = tok.0;
        let s = int(tok)?;
        if s == 0 {
            return Err(parse_err(line, "block size 0"));
        }
        offsets.push(n);
        sizes.push(s);
        n += s.unsigned_abs() as usize;
    }
    let b = (0..m).map(|_| real(next("objective coefficient")?)).collect::<Result<Vec<f64>>>()?;
    let mut trip: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); m + 1];
    while let Some(first) = it.next() {
        let line = first.0;
        let mut rest = || it.next().ok_or_else(|| parse_err(line, "truncated entry"));
        let mat = int(first)?;
        let blk = int(rest()?)?;
        let i = int(rest()?)?;
        let j = int(rest()?)?;
        let v = real(rest()?)?;
        if mat < 0 || mat as usize > m {
            return Err(parse_err(line, format!("matrix number {mat} out of range")));
        }
        if blk <= 0 || blk as usize > nblocks {
            return Err(parse_err(line, format!("block number {blk} out of range")));
        }
        let k = blk as usize - 1;
        let size = sizes[k].unsigned_abs() as i64;
        if i <= 0 || j <= 0 || i > size || j > size {
            return Err(parse_err(line, format!("entry ({i}, {j}) outside block {blk}")));
        }
        if sizes[k] < 0 && i != j {
            return Err(parse_err(line, format!("off-diagonal entry in diagonal block {blk}")));
        }
        let o = offsets[k];
        trip[mat as usize].push((o + i as usize, o + j as usize, v));
    }
    let mut mats = trip.into_iter().map(|t| SparseSym::new(n, t)).collect::<Result<Vec<_>>>()?;
    let f0 = mats.remove(0);
    let sense = vec![Sense::Eq; m];
    SdpProblem::new(f0.scaled(-1.0), mats, b, sense)
}

/// Writes the problem as a single-block SDPA file. Senses are not
/// representable; see [`write_sense_sidecar`].
pub fn write_sdpa<W: Write>(mut w: W, p: &SdpProblem) -> Result<()> {
    writeln!(w, "\"chordal-sdp problem: n={} m={}", p.n, p.m())?;
    writeln!(w, "{}", p.m())?;
    writeln!(w, "1")?;
    writeln!(w, "{}", p.n)?;
    let b: Vec<String> = p.b.iter().map(|v| format!("{v:?}")).collect();
    writeln!(w, "{}", b.join(" "))?;
    for (i, j, v) in p.c.triplets() {
        writeln!(w, "0 1 {j} {i} {:?}", -v)?;
    }
    for (k, a) in p.a.iter().enumerate() {
        for (i, j, v) in a.triplets() {
            writeln!(w, "{} 1 {j} {i} {v:?}", k + 1)?;
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SenseFile {
    sense: Vec<Sense>,
}

/// `foo.dat-s` → `foo.sense.json`.
pub fn sense_sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_name().and_then(|s| s.to_str()).unwrap_or("problem");
    let stem = stem.strip_suffix(".dat-s").unwrap_or(stem);
    path.with_file_name(format!("{stem}.sense.json"))
}

pub fn write_sense_sidecar(path: &Path, p: &SdpProblem) -> Result<()> {
    let f = std::fs::File::create(sense_sidecar_path(path))?;
    serde_json::to_writer(f, &SenseFile { sense: p.sense.clone() })?;
    Ok(())
}

/// Reads an SDPA file, applying its sense sidecar when present.
pub fn read_sdpa_file(path: &Path) -> Result<SdpProblem> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut p = read_sdpa(f)?;
    let side = sense_sidecar_path(path);
    if side.exists() {
        let s: SenseFile = serde_json::from_reader(std::fs::File::open(side)?)?;
        if s.sense.len() != p.m() {
            return Err(Error::DimensionMismatch(format!("sidecar has {} senses for {} constraints", s.sense.len(), p.m())));
        }
        p.sense = s.sense;
    }
    Ok(p)
}

/// Writes an SDPA file and, if any sense is `≤`, its sidecar.
pub fn write_sdpa_file(path: &Path, p: &SdpProblem) -> Result<()> {
    write_sdpa(std::io::BufWriter::new(std::fs::File::create(path)?), p)?;
    if p.sense.iter().any(|s| *s != Sense::Eq) {
        write_sense_sidecar(path, p)?;
    }
    Ok(())
}

type Triplet = (usize, usize, f64);

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct JsonProblem {
    n: usize,
    m: usize,
    #[serde(rename = "C")]
    c: Vec<Triplet>,
    #[serde(rename = "A")]
    a: Vec<Vec<Triplet>>,
    b: Vec<f64>,
    #[serde(default)]
    sense: Option<Vec<Sense>>,
}

/// Reads `{n, m, C, A, b, sense}` with 1-based `[i, j, v]` triplets. A missing
/// `sense` means all `≤`.
pub fn read_json_problem<R: std::io::Read>(r: R) -> Result<SdpProblem> {
    let j: JsonProblem = serde_json::from_reader(r)?;
    if j.a.len() != j.m || j.b.len() != j.m {
        return Err(Error::DimensionMismatch(format!("m = {} but {} matrices and {} right-hand sides", j.m, j.a.len(), j.b.len())));
    }
    let c = SparseSym::new(j.n, j.c)?;
    let a = j.a.into_iter().map(|t| SparseSym::new(j.n, t)).collect::<Result<Vec<_>>>()?;
    let sense = j.sense.unwrap_or_else(|| vec![Sense::Le; j.m]);
    SdpProblem::new(c, a, j.b, sense)
}

pub fn write_json_problem<W: Write>(w: W, p: &SdpProblem) -> Result<()> {
    let j = JsonProblem {
        n: p.n,
        m: p.m(),
        c: p.c.triplets().collect(),
        a: p.a.iter().map(|a| a.triplets().collect()).collect(),
        b: p.b.clone(),
        sense: Some(p.sense.clone()),
    };
    serde_json::to_writer(w, &j)?;
    Ok(())
}

/// Reads a problem by extension: `.json` or SDPA otherwise.
pub fn read_problem_file(path: &Path) -> Result<SdpProblem> {
    if path.extension().is_some_and(|e| e == "json") {
        read_json_problem(std::io::BufReader::new(std::fs::File::open(path)?))
    } else {
        read_sdpa_file(path)
    }
}

pub fn write_problem_file(path: &Path, p: &SdpProblem) -> Result<()> {
    if path.extension().is_some_and(|e| e == "json") {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_json_problem(&mut w, p)?;
        w.flush()?;
        Ok(())
    } else {
        write_sdpa_file(path, p)
    }
}
