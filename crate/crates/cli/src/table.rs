//! Numeric CSV tables with an `x1..xp[,y]` header.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use anyhow::{Context, Result};
use hrk_core::{Error, Points};

/// A parsed table: inputs and, when present, the response column.
#[derive(Debug, Clone)]
pub struct Table {
    pub x: Points,
    pub y: Option<Vec<f64>>,
}

/// Reads `x1,…,xp[,y]`. Lines starting with `#` are skipped. With
/// `response = true` the last column must be `y`.
pub fn read_table<R: Read>(input: R, response: bool) -> hrk_core::Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let width = headers.len();
    let p = if response { width.saturating_sub(1) } else { width };
    if p == 0 || (width == 1 && headers.get(0) == Some("")) {
        return Err(Error::Parse {
            row: 0,
            column: String::new(),
            message: "missing header".into(),
        });
    }
    for (j, h) in headers.iter().enumerate() {
        let want = if j < p { format!("x{}", j + 1) } else { "y".to_string() };
        if h != want {
            return Err(Error::Parse {
                row: 0,
                column: h.to_string(),
                message: format!("expected header '{want}'"),
            });
        }
    }
    let mut x = Points::empty(p);
    let mut y = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() != width {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {width} cells, found {}", rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(width);
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[j].to_string(),
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[j].to_string(),
                    message: format!("'{cell}' is not finite"),
                });
            }
            vals.push(v);
        }
        x.push(&vals[..p])?;
        if response {
            y.push(vals[p]);
        }
    }
    Ok(Table {
        x,
        y: response.then_some(y),
    })
}

pub fn read_table_file(path: &Path, response: bool) -> Result<Table> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_table(f, response).with_context(|| format!("reading {}", path.display()))
}
