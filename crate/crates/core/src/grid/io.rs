//! Flat JSON (`{d, L, n, values, mask}`) and CSV exchange formats.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GeneralizedPotential, GridSpec, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<bool>>,
}

impl GridFile {
    fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.d, self.half_width, self.n)
    }
}

impl From<&ScalarField> for GridFile {
    fn from(f: &ScalarField) -> Self {
        let g = f.grid();
        Self {
            d: g.dim(),
            half_width: g.half_width(),
            n: g.n(),
            values: f.values().to_vec(),
            mask: None,
        }
    }
}

impl From<&GeneralizedPotential> for GridFile {
    fn from(p: &GeneralizedPotential) -> Self {
        let g = p.grid();
        Self {
            d: g.dim(),
            half_width: g.half_width(),
            n: g.n(),
            values: p.vfin().to_vec(),
            mask: Some(p.mask().to_vec()),
        }
    }
}

impl TryFrom<GridFile> for ScalarField {
    type Error = Error;

    fn try_from(f: GridFile) -> Result<Self> {
        ScalarField::from_values(f.grid()?, f.values)
    }
}

impl TryFrom<GridFile> for GeneralizedPotential {
    type Error = Error;

    fn try_from(f: GridFile) -> Result<Self> {
        let grid = f.grid()?;
        let mask = f.mask.unwrap_or_else(|| vec![false; grid.len()]);
        GeneralizedPotential::new(grid, f.values, mask)
    }
}

pub fn field_to_json(f: &ScalarField) -> Result<String> {
    Ok(serde_json::to_string(&GridFile::from(f))?)
}

pub fn field_from_json(s: &str) -> Result<ScalarField> {
    serde_json::from_str::<GridFile>(s)?.try_into()
}

pub fn potential_to_json(p: &GeneralizedPotential) -> Result<String> {
    Ok(serde_json::to_string(&GridFile::from(p))?)
}

pub fn potential_from_json(s: &str) -> Result<GeneralizedPotential> {
    serde_json::from_str::<GridFile>(s)?.try_into()
}

pub fn read_potential(path: &Path) -> Result<GeneralizedPotential> {
    let mut s = String::new();
    std::fs::File::open(path)?.read_to_string(&mut s)?;
    potential_from_json(&s)
}

fn csv_header(grid: &GridSpec) -> Vec<&'static str> {
    match grid.dim() {
        1 => vec!["node", "x", "value"],
        _ => vec!["node", "x", "y", "value"],
    }
}

fn write_rows<W: Write>(
    out: W,
    grid: &GridSpec,
    value: impl Fn(usize) -> String,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(grid))?;
    for node in 0..grid.len() {
        let [x, y] = grid.coords(node);
        let mut rec = vec![node.to_string(), x.to_string()];
        if grid.dim() == 2 {
            rec.push(y.to_string());
        }
        rec.push(value(node));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `node, x, [y], value` rows.
pub fn write_field_csv<W: Write>(out: W, f: &ScalarField) -> Result<()> {
    write_rows(out, f.grid(), |node| f.get(node).to_string())
}

/// As [`write_field_csv`], with `inf` on masked nodes.
pub fn write_potential_csv<W: Write>(out: W, p: &GeneralizedPotential) -> Result<()> {
    write_rows(out, p.grid(), |node| {
        if p.is_masked(node) {
            "inf".to_string()
        } else {
            p.vfin()[node].to_string()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn potential_json_roundtrip(vals in proptest::collection::vec(0.0f64..1e6, 25), bits in proptest::collection::vec(any::<bool>(), 25)) {
            let g = build_grid(2, 1.7, 5).unwrap();
            let p = GeneralizedPotential::new(g, vals, bits).unwrap();
            let back = potential_from_json(&potential_to_json(&p).unwrap()).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn field_json_roundtrip(vals in proptest::collection::vec(-1e9f64..1e9, 9)) {
            let g = build_grid(1, 0.3, 9).unwrap();
            let f = ScalarField::from_values(g, vals).unwrap();
            let back = field_from_json(&field_to_json(&f).unwrap()).unwrap();
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert!((a - b).abs() <= 1e-15 * b.abs());
            }
        }
    }

    #[test]
    fn csv_layout() {
        let g = build_grid(2, 1.0, 3).unwrap();
        let p = GeneralizedPotential::constant(g, 2.0)
            .unwrap()
            .join_mask(&[true, true, true, true, false, true, true, true, true])
            .unwrap();
        let mut buf = Vec::new();
        write_potential_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "node,x,y,value");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[5], "4,0,0,inf");
        assert_eq!(lines[1], "0,-0.5,-0.5,2");
    }

    #[test]
    fn rejects_malformed_json() {
        assert!(field_from_json(r#"{"d":3,"L":1.0,"n":3,"values":[]}"#).is_err());
        assert!(field_from_json(r#"{"d":1,"L":1.0,"n":3,"values":[1,2]}"#).is_err());
        assert!(potential_from_json(r#"{"d":1,"L":1.0,"n":3,"values":[1,2,3],"extra":1}"#).is_err());
    }
}
