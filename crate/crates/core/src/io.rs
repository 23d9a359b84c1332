//! File formats.
//!
//! * Dense matrices in JSON: an array of rows, each entry a `[re, im]` pair.
//! * Spectra in CSV: header `index,re,im,magnitude`, one eigenvalue per row.
//! * Sparse operators in text: a header line `# rows cols nnz`, then one
//!   `row col re im` line per stored entry (0-based indices).
//! * Family bundles in JSON:
//!
//! ```json
//! {
//!   "hilbert_dim": 2,
//!   "nodes": [0.0, 0.5],
//!   "time": {"kind": "circle", "T_per": 1.0, "spin_structure": "periodic"},
//!   "dirac": [[[[1,0],[0,0]],[[0,0],[-1,0]]], ...],
//!   "lapse": [{"diagonal": [[1,0],[1,0]]}, ...],
//!   "algebra": [{"label": "a", "matrix": {"diagonal": [[1,0],[2,0]]}}]
//! }
//! ```
//!
//! `lapse` and `algebra` matrices may be dense or `{"diagonal": [...]}`. The
//! `time` object is optional; without it the nodes must be equispaced and are
//! read as an interval. Interval time is written as `{"kind": "interval"}`.

use crate::assembler::TimeGrid;
use crate::error::{Error, Result};
use crate::family::{AlgebraElement, Block, Provenance, TripleFamily};
use crate::lattice::{SpinStructure, TimeDomain};
use crate::linalg::{DenseMat, SparseMat};
use crate::C64;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;

fn c_to_json(z: &C64) -> Value {
    json!([z.re, z.im])
}

fn c_from_json(v: &Value, field: &str) -> Result<C64> {
    match v {
        Value::Number(n) => Ok(C64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(Error::input(field, "entries must be numbers")),
        },
        _ => Err(Error::input(field, "expected [re, im]")),
    }
}

pub fn dense_to_json(a: &DenseMat) -> Value {
    Value::Array(
        (0..a.nrows())
            .map(|i| Value::Array((0..a.ncols()).map(|j| c_to_json(&a[(i, j)])).collect()))
            .collect(),
    )
}

pub fn dense_from_json(v: &Value, field: &str) -> Result<DenseMat> {
    let rows = v.as_array().ok_or_else(|| Error::input(field, "expected an array of rows"))?;
    let n = rows.len();
    let m = rows.first().and_then(|r| r.as_array()).map_or(0, |r| r.len());
    let mut out = DenseMat::zeros(n, m);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .filter(|r| r.len() == m)
            .ok_or_else(|| Error::input(format!("{field}[{i}]"), format!("expected a row of length {m}")))?;
        for (j, e) in row.iter().enumerate() {
            out[(i, j)] = c_from_json(e, &format!("{field}[{i}][{j}]"))?;
        }
    }
    Ok(out)
}

fn block_to_json(b: &Block) -> Value {
    match b {
        Block::Diagonal(d) => json!({ "diagonal": d.iter().map(c_to_json).collect::<Vec<_>>() }),
        Block::Dense(a) => dense_to_json(a),
    }
}

fn block_from_json(v: &Value, field: &str) -> Result<Block> {
    if let Some(d) = v.get("diagonal") {
        let d = d.as_array().ok_or_else(|| Error::input(format!("{field}.diagonal"), "expected an array"))?;
        let vals = d
            .iter()
            .enumerate()
            .map(|(i, e)| c_from_json(e, &format!("{field}.diagonal[{i}]")))
            .collect::<Result<_>>()?;
        Ok(Block::Diagonal(vals))
    } else {
        Ok(Block::from_dense(dense_from_json(v, field)?))
    }
}

pub fn spectrum_csv(values: &[C64]) -> String {
    let mut s = String::from("index,re,im,magnitude\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{},{}", v.re, v.im, v.norm());
    }
    s
}

pub fn spectrum_json(values: &[C64]) -> Value {
    Value::Array(
        values
            .iter()
            .enumerate()
            .map(|(i, v)| json!({"index": i, "re": v.re, "im": v.im, "magnitude": v.norm()}))
            .collect(),
    )
}

pub fn sparse_to_text(m: &SparseMat) -> String {
    let trips: Vec<_> = m.triplets().collect();
    let mut s = format!("# {} {} {}\n", m.nrows(), m.ncols(), trips.len());
    for (r, c, v) in trips {
        let _ = writeln!(s, "{r} {c} {} {}", v.re, v.im);
    }
    s
}

pub fn sparse_from_text(text: &str) -> Result<SparseMat> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::input("header", "empty input"))?;
    let dims: Vec<usize> = header
        .trim_start_matches('#')
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::input("header", format!("bad header `{header}`"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(Error::input("header", "expected `# rows cols nnz`"));
    }
    let mut trips = Vec::with_capacity(dims[2]);
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::input(format!("line {}", k + 2), format!("bad entry `{line}`"));
        if f.len() != 4 {
            return Err(bad());
        }
        let (r, c): (usize, usize) = (f[0].parse().map_err(|_| bad())?, f[1].parse().map_err(|_| bad())?);
        let (re, im): (f64, f64) = (f[2].parse().map_err(|_| bad())?, f[3].parse().map_err(|_| bad())?);
        if r >= dims[0] || c >= dims[1] {
            return Err(bad());
        }
        trips.push((r, c, C64::new(re, im)));
    }
    if trips.len() != dims[2] {
        return Err(Error::input("header", format!("declared {} entries, found {}", dims[2], trips.len())));
    }
    Ok(SparseMat::from_triplets(dims[0], dims[1], trips))
}

pub fn time_to_json(tg: &TimeGrid) -> Value {
    match tg.domain() {
        TimeDomain::Circle { period } => json!({"kind": "circle", "T_per": period, "spin_structure": tg.spin()}),
        TimeDomain::Interval { .. } => json!({"kind": "interval"}),
    }
}

pub fn family_to_json(fam: &TripleFamily, time: Option<&TimeGrid>) -> Value {
    let mut v = json!({
        "hilbert_dim": fam.hilbert_dim,
        "nodes": fam.time_nodes,
        "dirac": fam.dirac.iter().map(dense_to_json).collect::<Vec<_>>(),
        "lapse": fam.lapse.iter().map(block_to_json).collect::<Vec<_>>(),
        "algebra": fam.algebra.iter().map(|a| json!({"label": a.label, "matrix": block_to_json(&a.matrix)})).collect::<Vec<_>>(),
    });
    if let Some(tg) = time {
        v["time"] = time_to_json(tg);
    }
    v
}

/// A family together with the time grid it was sampled on.
#[derive(Debug, Clone)]
pub struct FamilyBundle {
    pub family: TripleFamily,
    pub time: TimeGrid,
}

fn array<'a>(v: &'a Value, field: &str) -> Result<&'a Vec<Value>> {
    v.get(field)
        .ok_or_else(|| Error::input(field, "missing"))?
        .as_array()
        .ok_or_else(|| Error::input(field, "expected an array"))
}

pub fn family_from_json(v: &Value) -> Result<FamilyBundle> {
    let obj = v.as_object().ok_or_else(|| Error::input("", "expected an object"))?;
    for key in obj.keys() {
        if !["hilbert_dim", "nodes", "time", "dirac", "lapse", "algebra"].contains(&key.as_str()) {
            return Err(Error::input(key.as_str(), "unknown field"));
        }
    }
    let nodes = array(v, "nodes")?
        .iter()
        .enumerate()
        .map(|(i, x)| x.as_f64().ok_or_else(|| Error::input(format!("nodes[{i}]"), "expected a number")))
        .collect::<Result<Vec<f64>>>()?;
    let dirac = array(v, "dirac")?
        .iter()
        .enumerate()
        .map(|(i, m)| dense_from_json(m, &format!("dirac[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let lapse = array(v, "lapse")?
        .iter()
        .enumerate()
        .map(|(i, m)| block_from_json(m, &format!("lapse[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let algebra = match v.get("algebra") {
        None => Vec::new(),
        Some(_) => array(v, "algebra")?
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let field = format!("algebra[{i}]");
                let label = a.get("label").and_then(|l| l.as_str()).unwrap_or("").to_string();
                let m = a.get("matrix").ok_or_else(|| Error::input(format!("{field}.matrix"), "missing"))?;
                Ok(AlgebraElement {
                    label,
                    matrix: block_from_json(m, &format!("{field}.matrix"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let family = TripleFamily::new(nodes.clone(), dirac, lapse, algebra, Provenance::User)?;
    if let Some(h) = v.get("hilbert_dim") {
        if h.as_u64() != Some(family.hilbert_dim as u64) {
            return Err(Error::input("hilbert_dim", format!("matrices are {0} x {0}", family.hilbert_dim)));
        }
    }
    let nt = nodes.len();
    let time = match v.get("time") {
        Some(t) if t.get("kind").and_then(|k| k.as_str()) == Some("circle") => {
            let period = t
                .get("T_per")
                .and_then(|p| p.as_f64())
                .ok_or_else(|| Error::input("time.T_per", "expected a number"))?;
            let spin: SpinStructure = serde_json::from_value(t.get("spin_structure").cloned().unwrap_or(json!("periodic")))
                .map_err(|e| Error::input("time.spin_structure", e.to_string()))?;
            TimeGrid::new(TimeDomain::Circle { period }, nt, spin)?
        }
        Some(t) if t.get("kind").and_then(|k| k.as_str()) != Some("interval") => {
            return Err(Error::input("time.kind", "expected `circle` or `interval`"));
        }
        _ => TimeGrid::new(
            TimeDomain::Interval {
                start: nodes[0],
                end: nodes[nt - 1],
            },
            nt,
            SpinStructure::Periodic,
        )
        .map_err(|e| e.within("time"))?,
    };
    let scale = nodes.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if time.nodes().iter().zip(&nodes).any(|(a, b)| (a - b).abs() > 1e-12 * scale) {
        return Err(Error::NodeMismatch("nodes do not match the declared time grid".into()));
    }
    Ok(FamilyBundle { family, time })
}

pub fn read_family(path: &Path) -> Result<FamilyBundle> {
    let text = std::fs::read_to_string(path)?;
    family_from_json(&serde_json::from_str(&text)?)
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_round_trip() {
        let m = SparseMat::from_triplets(3, 2, vec![(0, 1, C64::new(1.5, -0.25)), (2, 0, C64::new(0.0, 1e-300))]);
        let back = sparse_from_text(&sparse_to_text(&m)).unwrap();
        assert_eq!(m, back);
        assert!(sparse_from_text("# 2 2 1\n5 0 1 0\n").is_err());
        assert!(sparse_from_text("# 2 2 2\n0 0 1 0\n").is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let s = spectrum_csv(&[C64::new(3.0, 4.0)]);
        assert_eq!(s, "index,re,im,magnitude\n0,3,4,5\n");
    }

    #[test]
    fn family_round_trip() {
        let d = crate::linalg::dense_from_rows(&[vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)], vec![C64::new(0.0, -1.0), C64::new(2.0, 0.0)]]);
        let tg = TimeGrid::new(TimeDomain::Circle { period: 1.0 }, 2, SpinStructure::Antiperiodic).unwrap();
        let fam = TripleFamily::new(
            tg.nodes().to_vec(),
            vec![d.clone(), d],
            vec![Block::from_real_diagonal(&[1.0, 2.0]); 2],
            vec![AlgebraElement { label: "a".into(), matrix: Block::from_real_diagonal(&[0.5, 0.5]) }],
            Provenance::User,
        )
        .unwrap();
        let v = family_to_json(&fam, Some(&tg));
        let back = family_from_json(&v).unwrap();
        assert_eq!(back.family.dirac, fam.dirac);
        assert_eq!(back.family.lapse, fam.lapse);
        assert_eq!(back.time, tg);
    }

    #[test]
    fn bundle_errors_name_fields() {
        let v = json!({"nodes": [0.0], "dirac": [[[[1, 0]]]], "lapse": [[[[1, "x"]]]]});
        let err = family_from_json(&v).unwrap_err();
        assert!(err.to_string().contains("lapse[0][0][0]"), "{err}");
        let v = json!({"nodes": [0.0], "dirac": [[[1]]], "lapse": [[[1]]], "colour": 1});
        assert!(family_from_json(&v).unwrap_err().to_string().contains("colour"));
    }
}
