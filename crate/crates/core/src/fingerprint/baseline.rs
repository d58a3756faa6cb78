use crate::descriptors::{DescriptorMatrix, SymmetryFunctionSet};
use crate::structures::Dataset;
use crate::Result;

use super::compute_dataset_descriptors;

/// Zero-padded concatenation of all per-atom descriptor rows of one structure.
///
/// This is the conventional fixed-length global descriptor. It depends on atom
/// count, so a primitive cell and its supercells do not coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedGlobalDescriptor {
    pub structure_id: String,
    pub tag: Option<String>,
    pub values: Vec<f64>,
}

/// Rows concatenated in element order then atom order, each vector padded with
/// zeros to the longest one.
pub fn pad_descriptors(matrices: &[DescriptorMatrix]) -> Vec<PaddedGlobalDescriptor> {
    let flat: Vec<Vec<f64>> = matrices.iter().map(DescriptorMatrix::flatten).collect();
    let width = flat.iter().map(Vec::len).max().unwrap_or(0);
    matrices
        .iter()
        .zip(flat)
        .map(|(m, mut values)| {
            values.resize(width, 0.0);
            PaddedGlobalDescriptor {
                structure_id: m.structure_id().to_owned(),
                tag: m.tag().map(str::to_owned),
                values,
            }
        })
        .collect()
}

pub fn baseline_padded_descriptor(ds: &Dataset, sfset: &SymmetryFunctionSet) -> Result<Vec<PaddedGlobalDescriptor>> {
    Ok(pad_descriptors(&compute_dataset_descriptors(ds, sfset)?))
}
