//! Extended-XYZ reading and writing.
//!
//! Each frame is an atom-count line, a comment line of `key=value` pairs, then
//! one line per atom. Only `Lattice`, `Properties`, `pbc`, and `tag` (or
//! `config_type`) are interpreted; every other key is ignored.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};

use super::{Dataset, Structure};
use crate::{Error, Result};

/// Parse a concatenation of extended-XYZ frames. Structure ids are `<source>#<frame>`.
pub fn parse_extxyz(text: &str, source: &str) -> Result<Dataset> {
    let lines: Vec<&str> = text.lines().collect();
    let mut structures = Vec::new();
    let mut cursor = 0;
    let mut frame = 0;

    loop {
        while cursor < lines.len() && lines[cursor].trim().is_empty() {
            cursor += 1;
        }
        if cursor >= lines.len() {
            break;
        }
        let err = |line: usize, message: String| Error::Parse {
            frame,
            line: line + 1,
            message,
        };

        let count_line = lines[cursor].trim();
        let natoms: usize = count_line
            .parse()
            .map_err(|_| err(cursor, format!("malformed atom count {count_line:?}")))?;
        let comment_at = cursor + 1;
        let Some(comment) = lines.get(comment_at) else {
            return Err(err(cursor, "frame ends before its comment line".into()));
        };
        let header = FrameHeader::parse(comment).map_err(|m| err(comment_at, m))?;

        let first_atom = comment_at + 1;
        let available = lines.len().saturating_sub(first_atom).min(natoms);
        if available < natoms {
            return Err(err(
                lines.len().saturating_sub(1),
                format!("frame declares {natoms} atoms but provides {available} atom lines"),
            ));
        }

        let mut species = Vec::with_capacity(natoms);
        let mut positions = Vec::with_capacity(natoms);
        for ln in first_atom..first_atom + natoms {
            let fields: Vec<&str> = lines[ln].split_whitespace().collect();
            if fields.len() < header.width {
                return Err(err(
                    ln,
                    format!(
                        "atom line has {} columns, Properties requires {}",
                        fields.len(),
                        header.width
                    ),
                ));
            }
            species.push(fields[header.species_col].to_owned());
            let mut p = Vector3::zeros();
            for d in 0..3 {
                let raw = fields[header.pos_col + d];
                p[d] = raw
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(ln, format!("unparsable coordinate {raw:?}")))?;
            }
            positions.push(p);
        }

        let id = format!("{source}#{frame}");
        let structure = Structure::new(id, header.cell, header.periodic, species, positions)
            .map_err(|e| err(comment_at, e.to_string()))?
            .with_tag(header.tag);
        structures.push(structure);

        cursor = first_atom + natoms;
        frame += 1;
    }

    Dataset::new(structures)
}

/// Serialize structures as extended XYZ. Floats use the shortest exact
/// representation, so [`parse_extxyz`] reproduces cell and positions bit for bit.
pub fn write_extxyz<'a>(structures: impl IntoIterator<Item = &'a Structure>) -> String {
    let mut out = String::new();
    for s in structures {
        let _ = writeln!(out, "{}", s.len());
        if s.is_periodic() || s.cell().iter().any(|&x| x != 0.0) {
            let c = s.cell();
            let flat: Vec<String> = (0..3)
                .flat_map(|r| (0..3).map(move |k| c[(r, k)].to_string()))
                .collect();
            let _ = write!(out, "Lattice=\"{}\" ", flat.join(" "));
        }
        out.push_str("Properties=species:S:1:pos:R:3");
        let pbc: Vec<&str> = s.periodic().iter().map(|&p| if p { "T" } else { "F" }).collect();
        let _ = write!(out, " pbc=\"{}\"", pbc.join(" "));
        if let Some(tag) = s.tag() {
            let _ = write!(out, " tag=\"{tag}\"");
        }
        out.push('\n');
        for (sp, p) in s.species().iter().zip(s.positions()) {
            let _ = writeln!(out, "{sp} {} {} {}", p[0], p[1], p[2]);
        }
    }
    out
}

struct FrameHeader {
    cell: Matrix3<f64>,
    periodic: [bool; 3],
    tag: Option<String>,
    species_col: usize,
    pos_col: usize,
    width: usize,
}

impl FrameHeader {
    fn parse(line: &str) -> Result<Self, String> {
        let pairs = key_values(line)?;
        let lookup = |key: &str| {
            pairs
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(key))
                .map(|(_, v)| v.as_str())
        };

        let mut cell = Matrix3::zeros();
        let mut periodic = [false; 3];
        if let Some(lattice) = lookup("Lattice") {
            let values: Vec<f64> = lattice
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| format!("bad Lattice value {v:?}")))
                .collect::<Result<_, _>>()?;
            if values.len() != 9 {
                return Err(format!("Lattice needs 9 numbers, found {}", values.len()));
            }
            cell = Matrix3::from_row_slice(&values);
            periodic = [true; 3];
        }
        if let Some(pbc) = lookup("pbc") {
            let flags: Vec<bool> = pbc.split_whitespace().map(parse_bool).collect::<Result<_, _>>()?;
            if flags.len() != 3 {
                return Err(format!("pbc needs 3 flags, found {}", flags.len()));
            }
            periodic = [flags[0], flags[1], flags[2]];
        }

        let (species_col, pos_col, width) = match lookup("Properties") {
            Some(props) => property_columns(props)?,
            None => (0, 1, 4),
        };
        let tag = lookup("tag").or_else(|| lookup("config_type")).map(str::to_owned);

        Ok(Self {
            cell,
            periodic,
            tag,
            species_col,
            pos_col,
            width,
        })
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "T" | "t" | "True" | "true" | "1" => Ok(true),
        "F" | "f" | "False" | "false" | "0" => Ok(false),
        other => Err(format!("bad pbc flag {other:?}")),
    }
}

/// Returns (species column, first position column, total column count).
fn property_columns(props: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = props.split(':').collect();
    if !parts.len().is_multiple_of(3) {
        return Err(format!("malformed Properties {props:?}"));
    }
    let mut col = 0;
    let (mut species, mut pos) = (None, None);
    for chunk in parts.chunks(3) {
        let n: usize = chunk[2]
            .parse()
            .map_err(|_| format!("bad column count in Properties {props:?}"))?;
        match chunk[0] {
            "species" if n == 1 => species = Some(col),
            "pos" if n == 3 => pos = Some(col),
            _ => {}
        }
        col += n;
    }
    match (species, pos) {
        (Some(s), Some(p)) => Ok((s, p, col)),
        _ => Err("Properties must declare species:S:1 and pos:R:3".into()),
    }
}

/// Split a comment line into `key=value` pairs. Values may be double-quoted;
/// bare keys are flags with value `T`.
fn key_values(line: &str) -> Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    let mut chars = line.trim().chars().peekable();
    loop {
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        if chars.peek().is_none() {
            break;
        }
        let mut key = String::new();
        while let Some(c) = chars.next_if(|c| *c != '=' && !c.is_whitespace()) {
            key.push(c);
        }
        if chars.next_if_eq(&'=').is_none() {
            pairs.push((key, "T".to_owned()));
            continue;
        }
        let mut value = String::new();
        if chars.next_if_eq(&'"').is_some() {
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(c) => value.push(c),
                    None => return Err(format!("unterminated quote in value of {key}")),
                }
            }
        } else {
            while let Some(c) = chars.next_if(|c| !c.is_whitespace()) {
                value.push(c);
            }
        }
        pairs.push((key, value));
    }
    Ok(pairs)
}
