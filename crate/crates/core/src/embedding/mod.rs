//! 2-D embeddings for diagnostics: PCA and exact t-SNE.

mod distances;
mod pca;
mod tsne;

use std::io::{Read, Write};

use crate::{Error, Result};

pub use distances::{pairwise_distances, DistanceMatrix, Metric, Points};
pub use pca::{pca_project, PcaProjection};
pub use tsne::{kl_divergence, joint_probabilities, perplexity_calibration, tsne_embed, ConditionalProbabilities, TsneConfig, TsneResult};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPoint {
    pub id: String,
    pub tag: Option<String>,
    pub x: f64,
    pub y: f64,
}

/// One 2-D point per input structure, in input order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Embedding {
    pub points: Vec<EmbeddedPoint>,
}

impl Embedding {
    /// Pair `(id, tag)` labels with coordinates.
    pub fn from_coords(labels: &[(String, Option<String>)], coords: &[[f64; 2]]) -> Result<Self> {
        if labels.len() != coords.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} embedded points",
                labels.len(),
                coords.len()
            )));
        }
        let points = labels
            .iter()
            .zip(coords)
            .map(|((id, tag), c)| EmbeddedPoint {
                id: id.clone(),
                tag: tag.clone(),
                x: c[0],
                y: c[1],
            })
            .collect();
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// CSV with header `id,tag,x,y`; coordinates in shortest round-trip form.
pub fn write_embedding_csv<W: Write>(out: W, e: &Embedding) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "tag", "x", "y"])?;
    for p in &e.points {
        w.write_record([
            p.id.as_str(),
            p.tag.as_deref().unwrap_or(""),
            &p.x.to_string(),
            &p.y.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embedding_csv<R: Read>(input: R) -> Result<Embedding> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "tag", "x", "y"] {
        return Err(Error::format(1, "embedding CSV header must be id,tag,x,y"));
    }
    let mut points = Vec::new();
    for (n, row) in r.records().enumerate() {
        let row = row?;
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(n + 2, format!("bad coordinate {s:?}")))
        };
        points.push(EmbeddedPoint {
            id: row[0].to_owned(),
            tag: (!row[1].is_empty()).then(|| row[1].to_owned()),
            x: num(&row[2])?,
            y: num(&row[3])?,
        });
    }
    Ok(Embedding { points })
}
