use super::{AngularKind, AngularParams, CutoffParams, Lambda, RadialParams};
use crate::{Error, Result};

/// One symmetry function with its own cutoff.
#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    Radial { params: RadialParams, cutoff: CutoffParams },
    Angular { params: AngularParams, cutoff: CutoffParams },
}

impl Descriptor {
    pub fn cutoff(&self) -> &CutoffParams {
        match self {
            Descriptor::Radial { cutoff, .. } | Descriptor::Angular { cutoff, .. } => cutoff,
        }
    }

    /// Canonical one-line description. Labels enter the fingerprint spec
    /// checksum, so two runs agree on them iff their descriptors agree.
    pub fn label(&self) -> String {
        match self {
            Descriptor::Radial { params, cutoff } => format!(
                "G2 n={} eta={} rs={} rci={} rc={}",
                params.neighbor,
                params.eta,
                params.r_s,
                cutoff.inner(),
                cutoff.outer()
            ),
            Descriptor::Angular { params, cutoff } => {
                let (a, b) = params.pair();
                format!(
                    "{} pair={a}-{b} eta={} zeta={} lambda={} rci={} rc={}",
                    params.kind,
                    params.eta,
                    params.zeta,
                    if params.lambda == Lambda::Plus { "+1" } else { "-1" },
                    cutoff.inner(),
                    cutoff.outer()
                )
            }
        }
    }
}

/// Ordered descriptor definitions per center element.
///
/// Element order, then descriptor order within each element, fixes the column
/// order of every downstream matrix and bit string.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryFunctionSet {
    blocks: Vec<(String, Vec<Descriptor>)>,
}

pub const DEFAULT_CUTOFF: f64 = 6.0;
pub const DEFAULT_INNER_FRACTION: f64 = 0.9;
const DEFAULT_RADIAL_ETAS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];
const DEFAULT_ANGULAR_ETAS: [f64; 2] = [0.0, 0.5];
const DEFAULT_ZETAS: [f64; 2] = [1.0, 4.0];

impl SymmetryFunctionSet {
    pub fn new(blocks: Vec<(String, Vec<Descriptor>)>) -> Result<Self> {
        for (i, (e, _)) in blocks.iter().enumerate() {
            if blocks[..i].iter().any(|(other, _)| other == e) {
                return Err(Error::invalid(format!("element {e} listed twice in descriptor set")));
            }
        }
        if blocks.is_empty() {
            return Err(Error::invalid("descriptor set has no elements"));
        }
        Ok(Self { blocks })
    }

    /// The built-in grid with `r_c` = 6 Å and `r_ci` = 0.9 `r_c`.
    pub fn default_grid<S: AsRef<str>>(elements: &[S]) -> Result<Self> {
        Self::default_grid_with_cutoff(elements, DEFAULT_CUTOFF, DEFAULT_CUTOFF * DEFAULT_INNER_FRACTION)
    }

    /// Per center element: radial η ∈ {0, 0.5, 1, 2, 4} Å⁻² with R_s = 0 for
    /// every neighbor element, then G4 and G5 with η ∈ {0, 0.5}, ζ ∈ {1, 4},
    /// λ = ±1 for every unordered neighbor pair.
    pub fn default_grid_with_cutoff<S: AsRef<str>>(elements: &[S], outer: f64, inner: f64) -> Result<Self> {
        let cutoff = CutoffParams::new(inner, outer)?;
        let elements: Vec<&str> = elements.iter().map(|e| e.as_ref()).collect();
        let mut blocks = Vec::new();
        for center in &elements {
            let mut list = Vec::new();
            for nb in &elements {
                for eta in DEFAULT_RADIAL_ETAS {
                    list.push(Descriptor::Radial {
                        params: RadialParams::new(eta, 0.0, *nb)?,
                        cutoff,
                    });
                }
            }
            for kind in [AngularKind::G4, AngularKind::G5] {
                for (a, ea) in elements.iter().enumerate() {
                    for eb in &elements[a..] {
                        for eta in DEFAULT_ANGULAR_ETAS {
                            for zeta in DEFAULT_ZETAS {
                                for lambda in [Lambda::Plus, Lambda::Minus] {
                                    list.push(Descriptor::Angular {
                                        params: AngularParams::new(kind, eta, zeta, lambda, (*ea, *eb))?,
                                        cutoff,
                                    });
                                }
                            }
                        }
                    }
                }
            }
            blocks.push((center.to_string(), list));
        }
        Self::new(blocks)
    }

    pub fn elements(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().map(|(e, _)| e.as_str())
    }

    pub fn element_index(&self, element: &str) -> Option<usize> {
        self.blocks.iter().position(|(e, _)| e == element)
    }

    pub fn blocks(&self) -> &[(String, Vec<Descriptor>)] {
        &self.blocks
    }

    pub fn descriptors(&self, element: &str) -> Option<&[Descriptor]> {
        self.blocks
            .iter()
            .find(|(e, _)| e == element)
            .map(|(_, d)| d.as_slice())
    }

    /// Total column count over all elements.
    pub fn width(&self) -> usize {
        self.blocks.iter().map(|(_, d)| d.len()).sum()
    }

    /// Largest outer cutoff; the neighbor list radius.
    pub fn max_cutoff(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|(_, d)| d.iter().map(|x| x.cutoff().outer()))
            .fold(0.0, f64::max)
    }

    /// `(element, column index, label)` in canonical column order.
    pub fn columns(&self) -> impl Iterator<Item = (&str, usize, String)> {
        self.blocks
            .iter()
            .flat_map(|(e, d)| d.iter().enumerate().map(move |(i, x)| (e.as_str(), i, x.label())))
    }
}
