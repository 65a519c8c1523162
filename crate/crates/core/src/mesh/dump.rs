//! Leaf dump: one comma-separated record per leaf with level, integer index,
//! centre and the nine conserved averages. Numbers are written with round-trip
//! precision so a dump reloads bit-for-bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{AdaptiveMesh, Boundary, CellIndex, Domain};
use crate::error::{Error, Result};
use crate::state::{ConservedState, NVARS};

pub const DUMP_COLUMNS: &str = "level,i,j,k,x,y,z,rho,E,mx,my,mz,Bx,By,Bz,psi";

pub fn write_mesh_dump(mesh: &AdaptiveMesh, path: &Path, header: &[String]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let d = mesh.domain();
    let boundary = match mesh.boundary() {
        Boundary::ZeroGradient => "zero-gradient",
        Boundary::Periodic => "periodic",
    };
    let mut text = String::new();
    for h in header {
        text.push_str(&format!("# {h}\n"));
    }
    text.push_str(&format!(
        "# domain {} {} {} {} {} {}\n# max_level {}\n# boundary {boundary}\n{DUMP_COLUMNS}\n",
        d.lo[0],
        d.lo[1],
        d.lo[2],
        d.hi[0],
        d.hi[1],
        d.hi[2],
        mesh.max_level()
    ));
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    for c in mesh.leaves() {
        let g = mesh.geometry(c);
        let s = mesh.get(c).unwrap().state;
        let mut line = format!(
            "{},{},{},{},{},{},{}",
            c.level, c.i[0], c.i[1], c.i[2], g.center[0], g.center[1], g.center[2]
        );
        for v in s.0 {
            line.push(',');
            line.push_str(&v.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_mesh_dump(path: &Path) -> Result<AdaptiveMesh> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut domain = None;
    let mut max_level = None;
    let mut boundary = Boundary::ZeroGradient;
    let mut leaves = Vec::new();
    let mut saw_columns = false;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = n + 1;
        let parse_err = |m: String| Error::Parse { line: lineno, message: m };
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            match it.next() {
                Some("domain") => {
                    let v: Vec<f64> = it
                        .map(|x| x.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| parse_err(format!("bad domain: {e}")))?;
                    if v.len() != 6 {
                        return Err(parse_err("domain needs six numbers".into()));
                    }
                    domain = Some(Domain::new([v[0], v[1], v[2]], [v[3], v[4], v[5]])?);
                }
                Some("max_level") => {
                    let v = it.next().ok_or_else(|| parse_err("missing max_level".into()))?;
                    max_level = Some(v.parse::<u8>().map_err(|e| parse_err(format!("bad max_level: {e}")))?);
                }
                Some("boundary") => {
                    boundary = match it.next() {
                        Some("periodic") => Boundary::Periodic,
                        Some("zero-gradient") => Boundary::ZeroGradient,
                        other => return Err(parse_err(format!("unknown boundary {other:?}"))),
                    }
                }
                _ => {}
            }
            continue;
        }
        if !saw_columns {
            if t != DUMP_COLUMNS {
                return Err(parse_err(format!("expected column header `{DUMP_COLUMNS}`")));
            }
            saw_columns = true;
            continue;
        }
        let f: Vec<&str> = t.split(',').collect();
        if f.len() != 7 + NVARS {
            return Err(parse_err(format!("expected {} fields, found {}", 7 + NVARS, f.len())));
        }
        let level: u8 = f[0].parse().map_err(|e| parse_err(format!("bad level: {e}")))?;
        let mut idx = [0u32; 3];
        for a in 0..3 {
            idx[a] = f[1 + a].parse().map_err(|e| parse_err(format!("bad index: {e}")))?;
        }
        let mut s = ConservedState::ZERO;
        for v in 0..NVARS {
            s[v] = f[7 + v]
                .parse()
                .map_err(|e| parse_err(format!("bad value in column {}: {e}", 8 + v)))?;
        }
        leaves.push((CellIndex::new(level, idx), s));
    }
    let domain = domain.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing `# domain` header".into(),
    })?;
    let max_level = max_level.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing `# max_level` header".into(),
    })?;
    AdaptiveMesh::from_leaves(domain, max_level, boundary, leaves)
}
