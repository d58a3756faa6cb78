//! Labeled real vectors and their CSV form `id,tag,v0,v1,...`.

use std::io::{Read, Write};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VectorRecord {
    pub id: String,
    pub tag: Option<String>,
    pub values: Vec<f64>,
}

pub fn write_vectors<W: Write>(out: W, records: &[VectorRecord]) -> Result<()> {
    let dim = records.first().map_or(0, |r| r.values.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_owned(), "tag".to_owned()];
    header.extend((0..dim).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for r in records {
        if r.values.len() != dim {
            return Err(Error::LayoutMismatch(format!(
                "vector {} has dimension {}, expected {dim}",
                r.id,
                r.values.len()
            )));
        }
        let mut row = vec![r.id.clone(), r.tag.clone().unwrap_or_default()];
        row.extend(r.values.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vectors<R: Read>(input: R) -> Result<Vec<VectorRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 2 || &header[0] != "id" || &header[1] != "tag" {
        return Err(Error::format(1, "vector CSV header must start with id,tag"));
    }
    let mut out = Vec::new();
    for (n, row) in r.records().enumerate() {
        let row = row?;
        let line = n + 2;
        let values = row
            .iter()
            .skip(2)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::format(line, format!("bad value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(VectorRecord {
            id: row[0].to_owned(),
            tag: (!row[1].is_empty()).then(|| row[1].to_owned()),
            values,
        });
    }
    Ok(out)
}
