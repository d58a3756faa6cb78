//! Difference-vector fingerprints.
//!
//! Every descriptor column is binned into `k` uniform intervals whose edges are
//! shared by all structures of a run. A structure's per-column bin occupancy is
//! XOR-ed against the reference structure's, and the per-column bit rows are
//! concatenated into one `k × m_total` bit string. The length depends only on
//! the descriptor layout and `k`, never on atom count, so a primitive cell and
//! its supercells produce the same bits.

mod baseline;
mod format;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::descriptors::{compute_structure_descriptors, DescriptorMatrix, SymmetryFunctionSet};
use crate::structures::{Dataset, Structure};
use crate::{Error, Result};

pub use baseline::{baseline_padded_descriptor, pad_descriptors, PaddedGlobalDescriptor};
pub use format::{parse_fingerprints, parse_spec_file, write_fingerprints, write_spec_file, FingerprintFile, SpecFile};

pub const DEFAULT_BINS: usize = 50;

/// How a current bin is compared with the reference bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Comparison {
    /// Bit = occupied(current) XOR occupied(reference).
    #[default]
    Occupancy,
    /// Bit = 1 iff the two bins hold different atom counts.
    CountEquality,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::Occupancy => "occupancy",
            Comparison::CountEquality => "count-equality",
        })
    }
}

impl FromStr for Comparison {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "occupancy" => Ok(Comparison::Occupancy),
            "count-equality" => Ok(Comparison::CountEquality),
            other => Err(Error::invalid(format!(
                "unknown comparison {other:?} (expected occupancy or count-equality)"
            ))),
        }
    }
}

/// Bin range of one descriptor column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnEdges {
    pub element: String,
    pub index: usize,
    pub label: String,
    pub lo: f64,
    pub hi: f64,
}

/// Bin count, comparison rule and per-column edges shared by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSpec {
    bins: usize,
    comparison: Comparison,
    columns: Vec<ColumnEdges>,
    checksum: String,
}

impl HistogramSpec {
    pub fn new(bins: usize, comparison: Comparison, columns: Vec<ColumnEdges>) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("bin count must be positive"));
        }
        if columns.is_empty() {
            return Err(Error::invalid("histogram spec has no columns"));
        }
        for c in &columns {
            if !(c.lo.is_finite() && c.hi.is_finite() && c.lo < c.hi) {
                return Err(Error::invalid(format!(
                    "column {} {} has invalid edges ({}, {})",
                    c.element, c.index, c.lo, c.hi
                )));
            }
        }
        let checksum = spec_checksum(bins, comparison, &columns);
        Ok(Self {
            bins,
            comparison,
            columns,
            checksum,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn comparison(&self) -> Comparison {
        self.comparison
    }

    pub fn columns(&self) -> &[ColumnEdges] {
        &self.columns
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    /// Total bit length `k × m_total`.
    pub fn bit_len(&self) -> usize {
        self.bins * self.columns.len()
    }

    /// `floor(k (v − lo)/(hi − lo))` clamped to `[0, k − 1]`.
    pub fn bin_of(&self, column: usize, value: f64) -> usize {
        let c = &self.columns[column];
        let pos = (self.bins as f64 * (value - c.lo) / (c.hi - c.lo)).floor();
        if pos <= 0.0 {
            0
        } else if pos >= (self.bins - 1) as f64 {
            self.bins - 1
        } else {
            pos as usize
        }
    }

    /// Check that a descriptor set produces exactly this spec's columns.
    pub fn check_descriptor_set(&self, sfset: &SymmetryFunctionSet) -> Result<()> {
        let mut expected = self.columns.iter();
        for (element, index, label) in sfset.columns() {
            match expected.next() {
                Some(c) if c.element == element && c.index == index && c.label == label => {}
                Some(c) => {
                    return Err(Error::LayoutMismatch(format!(
                        "descriptor {element}[{index}] `{label}` does not match spec column {}[{}] `{}`",
                        c.element, c.index, c.label
                    )))
                }
                None => {
                    return Err(Error::LayoutMismatch(format!(
                        "descriptor set has more columns than the histogram spec's {}",
                        self.columns.len()
                    )))
                }
            }
        }
        if expected.next().is_some() {
            return Err(Error::LayoutMismatch(format!(
                "descriptor set has fewer columns than the histogram spec's {}",
                self.columns.len()
            )));
        }
        Ok(())
    }

    fn check_matrix(&self, d: &DescriptorMatrix) -> Result<()> {
        let mut col = 0;
        for block in d.blocks() {
            for i in 0..block.ncols() {
                match self.columns.get(col) {
                    Some(c) if c.element == block.element() && c.index == i => {}
                    _ => {
                        return Err(Error::LayoutMismatch(format!(
                            "descriptors of {} do not match the histogram spec layout at column {col}",
                            d.structure_id()
                        )))
                    }
                }
                col += 1;
            }
        }
        if col != self.columns.len() {
            return Err(Error::LayoutMismatch(format!(
                "descriptors of {} have {col} columns, spec has {}",
                d.structure_id(),
                self.columns.len()
            )));
        }
        Ok(())
    }
}

fn spec_checksum(bins: usize, comparison: Comparison, columns: &[ColumnEdges]) -> String {
    let mut h = Sha256::new();
    h.update(format!("bins {bins}\ncomparison {comparison}\n"));
    for c in columns {
        h.update(format!(
            "{}\t{}\t{:016x}\t{:016x}\t{}\n",
            c.element,
            c.index,
            c.lo.to_bits(),
            c.hi.to_bits(),
            c.label
        ));
    }
    hex::encode(h.finalize())
}

/// Global per-column ranges over every matrix passed in, reference included.
///
/// Each range is widened by `max(1e-9, 1e-6 (hi − lo))` on both sides so the
/// extremes fall strictly inside; a constant column `v` gets `(v − 1e-6, v + 1e-6)`.
pub fn determine_bin_edges<'a>(
    sfset: &SymmetryFunctionSet,
    matrices: impl IntoIterator<Item = &'a DescriptorMatrix>,
    bins: usize,
    comparison: Comparison,
) -> Result<HistogramSpec> {
    if bins == 0 {
        return Err(Error::invalid("bin count must be positive"));
    }
    let labels: Vec<(String, usize, String)> = sfset
        .columns()
        .map(|(e, i, l)| (e.to_owned(), i, l))
        .collect();
    let mut lo = vec![f64::INFINITY; labels.len()];
    let mut hi = vec![f64::NEG_INFINITY; labels.len()];
    let mut seen = 0;

    for d in matrices {
        seen += 1;
        let mut col = 0;
        for ((element, count), (e, _)) in d.layout().into_iter().zip(sfset.blocks()) {
            if element != e || count != sfset.descriptors(e).map_or(0, |x| x.len()) {
                return Err(Error::LayoutMismatch(format!(
                    "descriptors of {} do not follow the descriptor set layout",
                    d.structure_id()
                )));
            }
            let block = d.block(element).expect("layout lists the block");
            for c in 0..count {
                for v in block.column(c) {
                    lo[col + c] = lo[col + c].min(v);
                    hi[col + c] = hi[col + c].max(v);
                }
            }
            col += count;
        }
        if col != labels.len() || d.blocks().len() != sfset.blocks().len() {
            return Err(Error::LayoutMismatch(format!(
                "descriptors of {} have {col} columns, descriptor set has {}",
                d.structure_id(),
                labels.len()
            )));
        }
    }
    if seen == 0 {
        return Err(Error::invalid("no descriptor matrices to derive bin edges from"));
    }

    let mut columns = Vec::with_capacity(labels.len());
    for ((element, index, label), (lo, hi)) in labels.into_iter().zip(lo.into_iter().zip(hi)) {
        if lo > hi {
            return Err(Error::invalid(format!(
                "no values for descriptor column {element}[{index}]: no atom of {element} in any structure"
            )));
        }
        let (lo, hi) = if hi == lo {
            (lo - 1e-6, hi + 1e-6)
        } else {
            let pad = (1e-6 * (hi - lo)).max(1e-9);
            (lo - pad, hi + pad)
        };
        columns.push(ColumnEdges {
            element,
            index,
            label,
            lo,
            hi,
        });
    }
    HistogramSpec::new(bins, comparison, columns)
}

/// Per-column bin counts and occupancy of one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureHistogram {
    structure_id: String,
    tag: Option<String>,
    checksum: String,
    bins: usize,
    counts: Vec<u32>,
    occupancy: BitString,
}

impl StructureHistogram {
    pub(crate) fn from_counts(
        structure_id: String,
        tag: Option<String>,
        spec: &HistogramSpec,
        counts: Vec<u32>,
    ) -> Result<Self> {
        if counts.len() != spec.bit_len() {
            return Err(Error::LayoutMismatch(format!(
                "{} histogram counts for a spec of {} bins",
                counts.len(),
                spec.bit_len()
            )));
        }
        let occupancy = BitString::from_bools(counts.iter().map(|&c| c > 0));
        Ok(Self {
            structure_id,
            tag,
            checksum: spec.checksum.clone(),
            bins: spec.bins,
            counts,
            occupancy,
        })
    }

    pub fn structure_id(&self) -> &str {
        &self.structure_id
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn columns(&self) -> usize {
        self.counts.len() / self.bins
    }

    pub fn counts(&self, column: usize) -> &[u32] {
        &self.counts[column * self.bins..(column + 1) * self.bins]
    }

    pub fn occupied(&self, column: usize, bin: usize) -> bool {
        assert!(bin < self.bins);
        self.occupancy.get(column * self.bins + bin)
    }

    pub fn occupancy(&self) -> &BitString {
        &self.occupancy
    }
}

/// Bin every descriptor value of one structure. Elements absent from the
/// structure leave their columns empty.
pub fn build_histograms(d: &DescriptorMatrix, spec: &HistogramSpec) -> Result<StructureHistogram> {
    spec.check_matrix(d)?;
    let k = spec.bins();
    let mut counts = vec![0u32; spec.bit_len()];
    let mut col = 0;
    for block in d.blocks() {
        for c in 0..block.ncols() {
            for v in block.column(c) {
                counts[(col + c) * k + spec.bin_of(col + c, v)] += 1;
            }
        }
        col += block.ncols();
    }
    StructureHistogram::from_counts(d.structure_id().to_owned(), d.tag().map(str::to_owned), spec, counts)
}

/// The fingerprint: `k × m_total` bits, column-major over (element, descriptor),
/// bin-minor, so bit `column · k + bin` compares that bin of that column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DifferenceVector {
    structure_id: String,
    tag: Option<String>,
    reference_id: String,
    checksum: String,
    bins: usize,
    bits: BitString,
}

impl DifferenceVector {
    pub fn new(
        structure_id: impl Into<String>,
        tag: Option<String>,
        reference_id: impl Into<String>,
        checksum: impl Into<String>,
        bins: usize,
        bits: BitString,
    ) -> Result<Self> {
        if bins == 0 || !bits.len().is_multiple_of(bins) {
            return Err(Error::invalid(format!(
                "{} bits do not form whole columns of {bins} bins",
                bits.len()
            )));
        }
        Ok(Self {
            structure_id: structure_id.into(),
            tag,
            reference_id: reference_id.into(),
            checksum: checksum.into(),
            bins,
            bits,
        })
    }

    pub fn structure_id(&self) -> &str {
        &self.structure_id
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn reference_id(&self) -> &str {
        &self.reference_id
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `(k, m_total)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.bins, self.bits.len() / self.bins)
    }

    /// The `k`-bit row of one descriptor column.
    pub fn column(&self, column: usize) -> BitString {
        BitString::from_bools((0..self.bins).map(|b| self.bits.get(column * self.bins + b)))
    }
}

/// Compare a structure's histogram with the reference's, bin by bin.
pub fn difference_vector(
    cur: &StructureHistogram,
    reference: &StructureHistogram,
    spec: &HistogramSpec,
) -> Result<DifferenceVector> {
    for h in [cur, reference] {
        if h.checksum != spec.checksum {
            return Err(Error::ChecksumMismatch {
                expected: spec.checksum.clone(),
                found: h.checksum.clone(),
            });
        }
    }
    let bits = match spec.comparison() {
        Comparison::Occupancy => cur.occupancy.xor(&reference.occupancy),
        Comparison::CountEquality => {
            BitString::from_bools(cur.counts.iter().zip(&reference.counts).map(|(a, b)| a != b))
        }
    };
    DifferenceVector::new(
        cur.structure_id.clone(),
        cur.tag.clone(),
        reference.structure_id.clone(),
        spec.checksum.clone(),
        spec.bins(),
        bits,
    )
}

/// Number of differing bits between two fingerprints of the same spec.
pub fn hamming_distance(a: &DifferenceVector, b: &DifferenceVector) -> Result<usize> {
    if a.checksum != b.checksum {
        return Err(Error::ChecksumMismatch {
            expected: a.checksum.clone(),
            found: b.checksum.clone(),
        });
    }
    if a.bits.len() != b.bits.len() {
        return Err(Error::LayoutMismatch(format!(
            "fingerprints of {} and {} bits",
            a.bits.len(),
            b.bits.len()
        )));
    }
    Ok(a.bits.hamming(&b.bits))
}

/// Fingerprints of a dataset plus everything needed to fingerprint more
/// structures against the same bins and reference.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintSet {
    pub spec: HistogramSpec,
    pub reference: StructureHistogram,
    pub fingerprints: Vec<DifferenceVector>,
}

impl FingerprintSet {
    pub fn to_file(&self) -> FingerprintFile {
        FingerprintFile {
            spec: self.spec.clone(),
            reference_id: self.reference.structure_id.clone(),
            records: self.fingerprints.clone(),
        }
    }

    pub fn spec_file(&self) -> SpecFile {
        SpecFile {
            spec: self.spec.clone(),
            reference: self.reference.clone(),
        }
    }
}

/// Descriptor matrices for every structure, in dataset order.
pub fn compute_dataset_descriptors(ds: &Dataset, sfset: &SymmetryFunctionSet) -> Result<Vec<DescriptorMatrix>> {
    ds.structures()
        .par_iter()
        .map(|s| compute_structure_descriptors(s, sfset))
        .collect()
}

/// First structure that contains every element of `elements`.
pub fn select_reference<'a, S: AsRef<str>>(ds: &'a Dataset, elements: &[S]) -> Option<&'a Structure> {
    ds.structures()
        .iter()
        .find(|s| elements.iter().all(|e| s.species().iter().any(|sp| sp == e.as_ref())))
}

/// Fingerprint a whole dataset against `reference`, deriving bin edges over the
/// dataset and the reference together.
pub fn batch_fingerprints(
    ds: &Dataset,
    reference: &Structure,
    sfset: &SymmetryFunctionSet,
    bins: usize,
    comparison: Comparison,
) -> Result<FingerprintSet> {
    for e in ds.elements() {
        if !reference.species().contains(e) {
            return Err(Error::MissingElement {
                element: e.clone(),
                context: format!("reference structure {}", reference.id()),
            });
        }
    }
    let matrices = compute_dataset_descriptors(ds, sfset)?;
    let ref_matrix = compute_structure_descriptors(reference, sfset)?;
    let spec = determine_bin_edges(sfset, matrices.iter().chain([&ref_matrix]), bins, comparison)?;
    let ref_hist = build_histograms(&ref_matrix, &spec)?;
    let fingerprints = fingerprint_matrices(&matrices, &ref_hist, &spec)?;
    Ok(FingerprintSet {
        spec,
        reference: ref_hist,
        fingerprints,
    })
}

/// Fingerprint new structures against a previously fixed spec and reference.
/// Values outside the stored edges fall into the first or last bin.
pub fn fingerprint_with_spec(
    ds: &Dataset,
    spec_file: &SpecFile,
    sfset: &SymmetryFunctionSet,
) -> Result<Vec<DifferenceVector>> {
    spec_file.spec.check_descriptor_set(sfset)?;
    let matrices = compute_dataset_descriptors(ds, sfset)?;
    fingerprint_matrices(&matrices, &spec_file.reference, &spec_file.spec)
}

fn fingerprint_matrices(
    matrices: &[DescriptorMatrix],
    reference: &StructureHistogram,
    spec: &HistogramSpec,
) -> Result<Vec<DifferenceVector>> {
    matrices
        .par_iter()
        .map(|m| difference_vector(&build_histograms(m, spec)?, reference, spec))
        .collect()
}
