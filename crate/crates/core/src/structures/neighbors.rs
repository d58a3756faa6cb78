use nalgebra::Vector3;

use super::Structure;
use crate::{Error, Result};

/// One neighbor of a center atom `i`: atom `index` displaced by `shift` lattice
/// vectors, so that `displacement = r[index] + shift · cell − r[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub shift: [i32; 3],
    pub distance: f64,
    pub displacement: Vector3<f64>,
}

/// Per-atom neighbors strictly inside a cutoff sphere.
///
/// Each atom's entries are sorted by `(distance, index, shift)`. Descriptor sums
/// iterate in this order, which makes them reproducible run to run.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    cutoff: f64,
    entries: Vec<Vec<Neighbor>>,
}

impl NeighborList {
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn of(&self, center: usize) -> &[Neighbor] {
        &self.entries[center]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Neighbor]> {
        self.entries.iter().map(Vec::as_slice)
    }
}

/// All neighbors `j` of every atom with `0 < R_ij < cutoff`, periodic images included.
///
/// Positions are wrapped into the cell first. Along a periodic axis with
/// interplanar spacing `h`, any displacement shorter than the cutoff spans fewer
/// than `cutoff / h + 1` cells, which bounds the image search for any cutoff and
/// any cell shape. Non-periodic axes are never imaged. Coincident atoms
/// (`R_ij = 0`) are skipped.
pub fn neighbor_list(s: &Structure, cutoff: f64) -> Result<NeighborList> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::invalid(format!("cutoff must be positive and finite, got {cutoff}")));
    }

    let n = s.len();
    let lattice = [0, 1, 2].map(|a| s.lattice_vector(a));
    let periodic = s.periodic();

    let mut wrapped: Vec<Vector3<f64>> = s.positions().to_vec();
    let mut offsets = vec![[0i32; 3]; n];
    let mut reach = [0i32; 3];

    if s.is_periodic() {
        // rows of the cell are lattice vectors: r = cellᵀ f
        let to_frac = s
            .cell()
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::invalid(format!("{}: singular cell", s.id())))?;
        let volume = s.volume();
        for axis in 0..3 {
            if !periodic[axis] {
                continue;
            }
            let cross = lattice[(axis + 1) % 3].cross(&lattice[(axis + 2) % 3]);
            let spacing = volume / cross.norm();
            reach[axis] = (cutoff / spacing + 1.0 + 1e-9).floor() as i32;
        }
        for (p, off) in wrapped.iter_mut().zip(offsets.iter_mut()) {
            let frac = to_frac * *p;
            for axis in 0..3 {
                if periodic[axis] {
                    let w = frac[axis].floor();
                    off[axis] = w as i32;
                    *p -= lattice[axis] * w;
                }
            }
        }
    }

    let mut images = Vec::new();
    for ta in -reach[0]..=reach[0] {
        for tb in -reach[1]..=reach[1] {
            for tc in -reach[2]..=reach[2] {
                let t = lattice[0] * ta as f64 + lattice[1] * tb as f64 + lattice[2] * tc as f64;
                images.push(([ta, tb, tc], t));
            }
        }
    }

    let cutoff2 = cutoff * cutoff;
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let mut list = Vec::new();
        for j in 0..n {
            let base = wrapped[j] - wrapped[i];
            for (t, tv) in &images {
                let d = base + tv;
                let r2 = d.norm_squared();
                if r2 >= cutoff2 || r2 == 0.0 {
                    continue;
                }
                let shift = [0, 1, 2].map(|a| t[a] - offsets[j][a] + offsets[i][a]);
                list.push(Neighbor {
                    index: j,
                    shift,
                    distance: r2.sqrt(),
                    displacement: d,
                });
            }
        }
        list.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.index.cmp(&b.index))
                .then(a.shift.cmp(&b.shift))
        });
        entries.push(list);
    }

    Ok(NeighborList { cutoff, entries })
}
