//! Atomic structures, datasets, supercells and periodic neighbor search.

mod extxyz;
mod neighbors;

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

pub use extxyz::{parse_extxyz, write_extxyz};
pub use neighbors::{neighbor_list, Neighbor, NeighborList};

/// A finite or periodic arrangement of atoms.
///
/// Positions are Cartesian (Å) and are kept exactly as ingested; wrapping into
/// the cell happens only inside neighbor search.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    id: String,
    tag: Option<String>,
    cell: Matrix3<f64>,
    periodic: [bool; 3],
    species: Vec<String>,
    positions: Vec<Vector3<f64>>,
}

impl Structure {
    /// `cell` holds the lattice vectors as rows.
    pub fn new(
        id: impl Into<String>,
        cell: Matrix3<f64>,
        periodic: [bool; 3],
        species: Vec<String>,
        positions: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        let id = id.into();
        let bad = |message: String| Error::InvalidStructure { id: id.clone(), message };
        if species.len() != positions.len() {
            return Err(bad(format!(
                "{} species but {} positions",
                species.len(),
                positions.len()
            )));
        }
        if periodic.iter().any(|&p| p) && cell.determinant().abs() < 1e-12 {
            return Err(bad("periodic structure with a degenerate cell".into()));
        }
        if let Some(p) = positions.iter().find(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(bad(format!("non-finite position {p:?}")));
        }
        if !cell.iter().all(|x| x.is_finite()) {
            return Err(bad("non-finite cell".into()));
        }
        Ok(Self {
            id,
            tag: None,
            cell,
            periodic,
            species,
            positions,
        })
    }

    /// A structure with no cell and no periodicity.
    pub fn molecule(id: impl Into<String>, species: Vec<String>, positions: Vec<Vector3<f64>>) -> Result<Self> {
        Self::new(id, Matrix3::zeros(), [false; 3], species, positions)
    }

    pub fn with_tag(mut self, tag: Option<String>) -> Self {
        self.tag = tag;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn cell(&self) -> &Matrix3<f64> {
        &self.cell
    }

    pub fn lattice_vector(&self, axis: usize) -> Vector3<f64> {
        self.cell.row(axis).transpose()
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.periodic
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic.iter().any(|&p| p)
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.cell.determinant().abs()
    }

    pub fn count_element(&self, element: &str) -> usize {
        self.species.iter().filter(|s| *s == element).count()
    }
}

/// Replicate a periodic structure `reps = [na, nb, nc]` times along its lattice vectors.
///
/// Atoms are emitted cell by cell in lexicographic `(ia, ib, ic)` order, and within
/// each cell in the original atom order. The identity replication returns the input
/// unchanged; any other replication gets the id `<id>@<na>x<nb>x<nc>`.
pub fn build_supercell(s: &Structure, reps: [usize; 3]) -> Result<Structure> {
    if reps.contains(&0) {
        return Err(Error::invalid(format!("supercell repetitions must be positive, got {reps:?}")));
    }
    for axis in 0..3 {
        if reps[axis] > 1 && !s.periodic[axis] {
            return Err(Error::invalid(format!(
                "cannot replicate {} along non-periodic axis {axis}",
                s.id
            )));
        }
    }
    if reps == [1, 1, 1] {
        return Ok(s.clone());
    }

    let [a, b, c] = [0, 1, 2].map(|axis| s.lattice_vector(axis));
    let total = s.len() * reps.iter().product::<usize>();
    let mut species = Vec::with_capacity(total);
    let mut positions = Vec::with_capacity(total);
    for ia in 0..reps[0] {
        for ib in 0..reps[1] {
            for ic in 0..reps[2] {
                let t = a * ia as f64 + b * ib as f64 + c * ic as f64;
                for (sp, p) in s.species.iter().zip(&s.positions) {
                    species.push(sp.clone());
                    positions.push(p + t);
                }
            }
        }
    }

    let mut cell = s.cell;
    for axis in 0..3 {
        let scaled = cell.row(axis) * reps[axis] as f64;
        cell.set_row(axis, &scaled);
    }
    let id = format!("{}@{}x{}x{}", s.id, reps[0], reps[1], reps[2]);
    Ok(Structure::new(id, cell, s.periodic, species, positions)?.with_tag(s.tag.clone()))
}

/// An ordered collection of structures with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    structures: Vec<Structure>,
    elements: Vec<String>,
}

impl Dataset {
    /// Elements are collected in order of first appearance.
    pub fn new(structures: Vec<Structure>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &structures {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::InvalidStructure {
                    id: s.id.clone(),
                    message: "duplicate structure id in dataset".into(),
                });
            }
        }
        let mut elements: Vec<String> = Vec::new();
        for s in &structures {
            for sp in &s.species {
                if !elements.contains(sp) {
                    elements.push(sp.clone());
                }
            }
        }
        Ok(Self { structures, elements })
    }

    pub fn structures(&self) -> &[Structure] {
        &self.structures
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Structure> {
        self.structures.iter().find(|s| s.id == id)
    }

    pub fn into_structures(self) -> Vec<Structure> {
        self.structures
    }

    /// Concatenate datasets in order. Ids must stay unique.
    pub fn concat(parts: impl IntoIterator<Item = Dataset>) -> Result<Self> {
        Self::new(parts.into_iter().flat_map(|d| d.structures).collect())
    }

    /// Keep only the structures whose id is listed, preserving dataset order.
    pub fn retain_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self> {
        let keep: HashSet<&str> = ids.iter().map(|s| s.as_ref()).collect();
        Self::new(
            self.structures
                .iter()
                .filter(|s| keep.contains(s.id.as_str()))
                .cloned()
                .collect(),
        )
    }
}

/// Paths listed in a manifest: one per line, blank lines and `#` comments skipped.
pub fn parse_manifest(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Load every extended-XYZ file named by a manifest, resolving relative paths
/// against the manifest's directory. Structure ids use the path as written in
/// the manifest.
pub fn load_manifest(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut parts = Vec::new();
    for entry in parse_manifest(&text) {
        let file = base.join(&entry);
        let content = std::fs::read_to_string(&file).map_err(|e| {
            std::io::Error::new(e.kind(), format!("{}: {e}", file.display()))
        })?;
        parts.push(parse_extxyz(&content, &entry)?);
    }
    Dataset::concat(parts)
}
