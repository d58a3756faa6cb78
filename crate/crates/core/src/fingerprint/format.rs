//! Text formats for fingerprint and spec files.
//!
//! Both share a header:
//!
//! ```text
//! dvlae-fingerprints 1            (or: dvlae-spec 1)
//! bins <k>
//! comparison <occupancy|count-equality>
//! reference <reference id>
//! columns <m>
//! column\t<element>\t<index>\t<lo>\t<hi>\t<label>     (m lines)
//! checksum <sha256 hex>
//! ```
//!
//! A fingerprint file continues with `records <n>` and `n` lines of
//! `<id>\t<tag>\t<hex bits>` (empty tag field for untagged structures). A spec
//! file continues with `m` lines `refcounts\t<column>\t<count> <count> ...`
//! holding the reference histogram. Edges are written in shortest round-trip
//! form, so parsing and rewriting reproduces a file byte for byte.

use std::fmt::Write as _;

use super::{ColumnEdges, Comparison, DifferenceVector, HistogramSpec, StructureHistogram};
use crate::bits::BitString;
use crate::{Error, Result};

const FINGERPRINT_MAGIC: &str = "dvlae-fingerprints";
const SPEC_MAGIC: &str = "dvlae-spec";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintFile {
    pub spec: HistogramSpec,
    pub reference_id: String,
    pub records: Vec<DifferenceVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub spec: HistogramSpec,
    pub reference: StructureHistogram,
}

fn check_field(what: &str, value: &str) -> Result<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(Error::invalid(format!("{what} {value:?} contains a tab or newline")));
    }
    Ok(())
}

fn write_header(out: &mut String, magic: &str, spec: &HistogramSpec, reference_id: &str) -> Result<()> {
    check_field("reference id", reference_id)?;
    let _ = writeln!(out, "{magic} {FORMAT_VERSION}");
    let _ = writeln!(out, "bins {}", spec.bins());
    let _ = writeln!(out, "comparison {}", spec.comparison());
    let _ = writeln!(out, "reference {reference_id}");
    let _ = writeln!(out, "columns {}", spec.columns().len());
    for c in spec.columns() {
        check_field("element", &c.element)?;
        check_field("label", &c.label)?;
        let _ = writeln!(out, "column\t{}\t{}\t{:?}\t{:?}\t{}", c.element, c.index, c.lo, c.hi, c.label);
    }
    let _ = writeln!(out, "checksum {}", spec.checksum());
    Ok(())
}

pub fn write_fingerprints(file: &FingerprintFile) -> Result<String> {
    let mut out = String::new();
    write_header(&mut out, FINGERPRINT_MAGIC, &file.spec, &file.reference_id)?;
    let _ = writeln!(out, "records {}", file.records.len());
    for r in &file.records {
        if r.checksum() != file.spec.checksum() {
            return Err(Error::ChecksumMismatch {
                expected: file.spec.checksum().to_owned(),
                found: r.checksum().to_owned(),
            });
        }
        check_field("structure id", r.structure_id())?;
        let tag = r.tag().unwrap_or("");
        check_field("tag", tag)?;
        let _ = writeln!(out, "{}\t{}\t{}", r.structure_id(), tag, r.bits().to_hex());
    }
    Ok(out)
}

pub fn write_spec_file(file: &SpecFile) -> Result<String> {
    let mut out = String::new();
    write_header(&mut out, SPEC_MAGIC, &file.spec, file.reference.structure_id())?;
    for c in 0..file.spec.columns().len() {
        let counts: Vec<String> = file.reference.counts(c).iter().map(u32::to_string).collect();
        let _ = writeln!(out, "refcounts\t{c}\t{}", counts.join(" "));
    }
    Ok(out)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l)
            }
            None => Err(Error::format(self.last + 1, "unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.last, msg)
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key} ...`, found {line:?}")))
    }

    fn keyed_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key)?;
        v.parse().map_err(|_| self.err(format!("bad value for {key}: {v:?}")))
    }

    fn finish(&mut self) -> Result<()> {
        match self.inner.next() {
            Some((i, l)) if !l.is_empty() => Err(Error::format(i + 1, "trailing content after last record")),
            Some(_) => self.finish(),
            None => Ok(()),
        }
    }
}

fn parse_header(lines: &mut Lines<'_>, magic: &str) -> Result<(HistogramSpec, String)> {
    let version: u32 = lines.keyed_parse(magic)?;
    if version != FORMAT_VERSION {
        return Err(lines.err(format!("unsupported format version {version}")));
    }
    let bins: usize = lines.keyed_parse("bins")?;
    let comparison: Comparison = lines
        .keyed("comparison")?
        .parse()
        .map_err(|e: Error| lines.err(e.to_string()))?;
    let reference_id = lines.keyed("reference")?.to_owned();
    let ncols: usize = lines.keyed_parse("columns")?;
    let mut columns = Vec::with_capacity(ncols);
    for _ in 0..ncols {
        let line = lines.next()?;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 || f[0] != "column" {
            return Err(lines.err(format!("malformed column line {line:?}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| lines.err(format!("bad edge {s:?}")));
        columns.push(ColumnEdges {
            element: f[1].to_owned(),
            index: f[2].parse().map_err(|_| lines.err(format!("bad column index {:?}", f[2])))?,
            lo: num(f[3])?,
            hi: num(f[4])?,
            label: f[5].to_owned(),
        });
    }
    let checksum = lines.keyed("checksum")?;
    let spec = HistogramSpec::new(bins, comparison, columns).map_err(|e| lines.err(e.to_string()))?;
    if spec.checksum() != checksum {
        return Err(Error::ChecksumMismatch {
            expected: checksum.to_owned(),
            found: spec.checksum().to_owned(),
        });
    }
    Ok((spec, reference_id))
}

pub fn parse_fingerprints(text: &str) -> Result<FingerprintFile> {
    let mut lines = Lines::new(text);
    let (spec, reference_id) = parse_header(&mut lines, FINGERPRINT_MAGIC)?;
    let n: usize = lines.keyed_parse("records")?;
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next()?;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(lines.err(format!("record needs 3 tab-separated fields, found {}", f.len())));
        }
        let bits = BitString::from_hex(f[2], spec.bit_len()).map_err(|e| lines.err(e.to_string()))?;
        let tag = (!f[1].is_empty()).then(|| f[1].to_owned());
        records.push(DifferenceVector::new(
            f[0],
            tag,
            reference_id.clone(),
            spec.checksum(),
            spec.bins(),
            bits,
        )?);
    }
    lines.finish()?;
    Ok(FingerprintFile {
        spec,
        reference_id,
        records,
    })
}

pub fn parse_spec_file(text: &str) -> Result<SpecFile> {
    let mut lines = Lines::new(text);
    let (spec, reference_id) = parse_header(&mut lines, SPEC_MAGIC)?;
    let mut counts = Vec::with_capacity(spec.bit_len());
    for c in 0..spec.columns().len() {
        let line = lines.next()?;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 || f[0] != "refcounts" || f[1] != c.to_string() {
            return Err(lines.err(format!("expected reference counts for column {c}")));
        }
        let row: Vec<u32> = f[2]
            .split(' ')
            .map(|v| v.parse().map_err(|_| lines.err(format!("bad count {v:?}"))))
            .collect::<Result<_>>()?;
        if row.len() != spec.bins() {
            return Err(lines.err(format!("{} counts, expected {}", row.len(), spec.bins())));
        }
        counts.extend(row);
    }
    lines.finish()?;
    let reference = StructureHistogram::from_counts(reference_id, None, &spec, counts)?;
    Ok(SpecFile { spec, reference })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> HistogramSpec {
        HistogramSpec::new(
            5,
            Comparison::Occupancy,
            vec![
                ColumnEdges { element: "Fe".into(), index: 0, label: "G2 n=H eta=0.5 rs=0 rci=5.4 rc=6".into(), lo: -1e-9, hi: 0.1 + 0.2 },
                ColumnEdges { element: "H".into(), index: 0, label: "G4 pair=Fe-H".into(), lo: 1.0 / 3.0, hi: 7e22 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn fingerprint_file_round_trip() {
        let spec = spec();
        let records = vec![
            DifferenceVector::new("a.xyz#0", Some("bcc".into()), "a.xyz#0", spec.checksum(), 5, BitString::zeros(10)).unwrap(),
            DifferenceVector::new("a.xyz#1", None, "a.xyz#0", spec.checksum(), 5, BitString::from_bools((0..10).map(|i| i % 3 == 0))).unwrap(),
        ];
        let file = FingerprintFile { spec, reference_id: "a.xyz#0".into(), records };
        let text = write_fingerprints(&file).unwrap();
        let back = parse_fingerprints(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(write_fingerprints(&back).unwrap(), text);
    }

    #[test]
    fn spec_file_round_trip() {
        let spec = spec();
        let reference = StructureHistogram::from_counts("r".into(), None, &spec, (0..10).collect()).unwrap();
        let file = SpecFile { spec, reference };
        let text = write_spec_file(&file).unwrap();
        let back = parse_spec_file(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(write_spec_file(&back).unwrap(), text);
    }

    #[test]
    fn tampered_edges_fail_checksum() {
        let file = FingerprintFile { spec: spec(), reference_id: "r".into(), records: vec![] };
        let text = write_fingerprints(&file).unwrap().replace("\t7e22\t", "\t8e22\t");
        assert!(matches!(parse_fingerprints(&text), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn truncated_file_rejected() {
        let file = FingerprintFile { spec: spec(), reference_id: "r".into(), records: vec![] };
        let text = write_fingerprints(&file).unwrap().replace("records 0", "records 2");
        assert!(matches!(parse_fingerprints(&text), Err(Error::Format { .. })));
    }

    #[test]
    fn tabs_in_ids_rejected() {
        let spec = spec();
        let r = DifferenceVector::new("a\tb", None, "r", spec.checksum(), 5, BitString::zeros(10)).unwrap();
        let file = FingerprintFile { spec, reference_id: "r".into(), records: vec![r] };
        assert!(write_fingerprints(&file).is_err());
    }
}
