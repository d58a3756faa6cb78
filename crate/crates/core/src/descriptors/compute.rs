use super::{radial_term, AngularParams, CutoffParams, Descriptor, SymmetryFunctionSet, TripletGeometry};
use crate::structures::{neighbor_list, Structure};
use crate::{Error, Result};

/// Descriptor rows of all atoms of one element, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorBlock {
    element: String,
    atoms: Vec<usize>,
    ncols: usize,
    values: Vec<f64>,
}

impl DescriptorBlock {
    pub fn new(element: impl Into<String>, atoms: Vec<usize>, ncols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != atoms.len() * ncols {
            return Err(Error::invalid(format!(
                "descriptor block with {} rows and {ncols} columns needs {} values, got {}",
                atoms.len(),
                atoms.len() * ncols,
                values.len()
            )));
        }
        Ok(Self {
            element: element.into(),
            atoms,
            ncols,
            values,
        })
    }

    pub fn element(&self) -> &str {
        &self.element
    }

    /// Structure atom index of each row.
    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn nrows(&self) -> usize {
        self.atoms.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.ncols..(r + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on 0
        (0..self.nrows()).map(move |r| self.row(r))
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(c).step_by(self.ncols.max(1)).copied().take(self.nrows())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-element descriptor blocks of one structure, in descriptor-set element order.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorMatrix {
    structure_id: String,
    tag: Option<String>,
    blocks: Vec<DescriptorBlock>,
}

impl DescriptorMatrix {
    pub fn new(structure_id: impl Into<String>, tag: Option<String>, blocks: Vec<DescriptorBlock>) -> Self {
        Self {
            structure_id: structure_id.into(),
            tag,
            blocks,
        }
    }

    pub fn structure_id(&self) -> &str {
        &self.structure_id
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn blocks(&self) -> &[DescriptorBlock] {
        &self.blocks
    }

    pub fn block(&self, element: &str) -> Option<&DescriptorBlock> {
        self.blocks.iter().find(|b| b.element == element)
    }

    /// `(element, column count)` per block.
    pub fn layout(&self) -> Vec<(&str, usize)> {
        self.blocks.iter().map(|b| (b.element(), b.ncols())).collect()
    }

    /// Per-element column means concatenated in block order; absent elements
    /// contribute zeros. Length is fixed by the layout, not the atom count.
    pub fn mean_vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.blocks.iter().map(|b| b.ncols).sum());
        for b in &self.blocks {
            for c in 0..b.ncols {
                let n = b.nrows();
                out.push(if n == 0 { 0.0 } else { b.column(c).sum::<f64>() / n as f64 });
            }
        }
        out
    }

    /// All rows concatenated: element order, then atom order within each block.
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect()
    }
}

/// Evaluate every descriptor of the set for every atom of `s`.
///
/// Angular sums run over unordered neighbor pairs `{a, b}`, `a < b` in canonical
/// neighbor order, so each pair of neighbor images counts once.
pub fn compute_structure_descriptors(s: &Structure, sfset: &SymmetryFunctionSet) -> Result<DescriptorMatrix> {
    let mut element_of = Vec::with_capacity(s.len());
    for sp in s.species() {
        let idx = sfset.element_index(sp).ok_or_else(|| Error::MissingElement {
            element: sp.clone(),
            context: format!("the descriptor set (structure {})", s.id()),
        })?;
        element_of.push(idx);
    }
    let nl = neighbor_list(s, sfset.max_cutoff())?;

    let mut blocks = Vec::with_capacity(sfset.blocks().len());
    for (e_idx, (element, descriptors)) in sfset.blocks().iter().enumerate() {
        let plan = ColumnPlan::new(descriptors, sfset);
        let atoms: Vec<usize> = (0..s.len()).filter(|&i| element_of[i] == e_idx).collect();
        let mut values = Vec::with_capacity(atoms.len() * descriptors.len());
        for &i in &atoms {
            let row_start = values.len();
            values.resize(row_start + descriptors.len(), 0.0);
            let row = &mut values[row_start..];
            let list = nl.of(i);

            for (col, nb_el, p, cut) in &plan.radial {
                row[*col] = list
                    .iter()
                    .filter(|n| element_of[n.index] == *nb_el)
                    .map(|n| radial_term(n.distance, p, cut))
                    .sum();
            }

            if !plan.angular.is_empty() {
                for a in 0..list.len() {
                    for b in a + 1..list.len() {
                        let key = pair_key(element_of[list[a].index], element_of[list[b].index]);
                        let mut geometry = None;
                        for (col, pk, p, cut) in &plan.angular {
                            if *pk != key {
                                continue;
                            }
                            let g = geometry.get_or_insert_with(|| {
                                TripletGeometry::from_neighbors(&list[a], &list[b])
                            });
                            row[*col] += p.term(g, cut);
                        }
                    }
                }
                for (col, _, p, _) in &plan.angular {
                    row[*col] *= p.prefactor();
                }
            }
        }
        blocks.push(DescriptorBlock::new(element.clone(), atoms, descriptors.len(), values)?);
    }

    Ok(DescriptorMatrix::new(s.id(), s.tag().map(str::to_owned), blocks))
}

fn pair_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Descriptors of one center element resolved to element indices.
/// Neighbor elements the set does not know map to `usize::MAX` and never match.
struct ColumnPlan<'a> {
    radial: Vec<(usize, usize, &'a super::RadialParams, &'a CutoffParams)>,
    angular: Vec<(usize, (usize, usize), &'a AngularParams, &'a CutoffParams)>,
}

impl<'a> ColumnPlan<'a> {
    fn new(descriptors: &'a [Descriptor], sfset: &SymmetryFunctionSet) -> Self {
        let index = |e: &str| sfset.element_index(e).unwrap_or(usize::MAX);
        let mut radial = Vec::new();
        let mut angular = Vec::new();
        for (col, d) in descriptors.iter().enumerate() {
            match d {
                Descriptor::Radial { params, cutoff } => radial.push((col, index(&params.neighbor), params, cutoff)),
                Descriptor::Angular { params, cutoff } => {
                    let (a, b) = params.pair();
                    let (ia, ib) = (index(a), index(b));
                    let key = if ia == usize::MAX || ib == usize::MAX {
                        (usize::MAX, usize::MAX)
                    } else {
                        pair_key(ia, ib)
                    };
                    angular.push((col, key, params, cutoff));
                }
            }
        }
        Self { radial, angular }
    }
}
