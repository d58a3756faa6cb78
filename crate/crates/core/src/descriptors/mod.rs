//! Atom-centered symmetry functions.
//!
//! Radial G2 and angular G4/G5 functions are evaluated over a canonical
//! [`NeighborList`](crate::structures::NeighborList) and collected per center
//! element into a [`DescriptorMatrix`].

mod compute;
mod sfset;

use std::fmt;

use nalgebra::Vector3;

use crate::structures::Neighbor;
use crate::{Error, Result};

pub use compute::{compute_structure_descriptors, DescriptorBlock, DescriptorMatrix};
pub use sfset::{Descriptor, SymmetryFunctionSet, DEFAULT_CUTOFF, DEFAULT_INNER_FRACTION};

/// Inner and outer radius of the cutoff taper, in Å.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffParams {
    inner: f64,
    outer: f64,
}

impl CutoffParams {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner.is_finite() && outer.is_finite() && 0.0 <= inner && inner < outer) {
            return Err(Error::invalid(format!(
                "cutoff radii need 0 <= r_ci < r_c, got r_ci = {inner}, r_c = {outer}"
            )));
        }
        Ok(Self { inner, outer })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }
}

/// Cutoff function: 1 below `r_ci`, 0 from `r_c` on, and in between the
/// complement of the quintic smoothstep in `x = (r − r_ci)/(r_c − r_ci)`:
/// `f(x) = ((15 − 6x)x − 10)x³ + 1`. Value and first derivative are continuous
/// at both radii.
pub fn cutoff_value(r: f64, p: &CutoffParams) -> f64 {
    if r < p.inner {
        1.0
    } else if r < p.outer {
        let x = (r - p.inner) / (p.outer - p.inner);
        ((15.0 - 6.0 * x) * x - 10.0) * x * x * x + 1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialParams {
    /// Gaussian width η, Å⁻².
    pub eta: f64,
    /// Gaussian center R_s, Å.
    pub r_s: f64,
    /// Element of the neighbors summed over.
    pub neighbor: String,
}

impl RadialParams {
    pub fn new(eta: f64, r_s: f64, neighbor: impl Into<String>) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0 && r_s.is_finite() && r_s >= 0.0) {
            return Err(Error::invalid(format!(
                "radial parameters need finite eta >= 0 and r_s >= 0, got eta = {eta}, r_s = {r_s}"
            )));
        }
        Ok(Self {
            eta,
            r_s,
            neighbor: neighbor.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AngularKind {
    G4,
    G5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lambda {
    Plus,
    Minus,
}

impl Lambda {
    pub fn from_value(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(Lambda::Plus)
        } else if v == -1.0 {
            Ok(Lambda::Minus)
        } else {
            Err(Error::invalid(format!("lambda must be +1 or -1, got {v}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Lambda::Plus => 1.0,
            Lambda::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularParams {
    pub eta: f64,
    pub zeta: f64,
    pub lambda: Lambda,
    pub kind: AngularKind,
    /// Unordered neighbor element pair, stored sorted.
    pair: [String; 2],
}

impl AngularParams {
    pub fn new(
        kind: AngularKind,
        eta: f64,
        zeta: f64,
        lambda: Lambda,
        pair: (impl Into<String>, impl Into<String>),
    ) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0 && zeta.is_finite() && zeta >= 0.0) {
            return Err(Error::invalid(format!(
                "angular parameters need finite eta >= 0 and zeta >= 0, got eta = {eta}, zeta = {zeta}"
            )));
        }
        let mut pair = [pair.0.into(), pair.1.into()];
        pair.sort();
        Ok(Self {
            eta,
            zeta,
            lambda,
            kind,
            pair,
        })
    }

    pub fn pair(&self) -> (&str, &str) {
        (&self.pair[0], &self.pair[1])
    }

    pub fn matches(&self, a: &str, b: &str) -> bool {
        (a == self.pair[0] && b == self.pair[1]) || (a == self.pair[1] && b == self.pair[0])
    }

    fn prefactor(&self) -> f64 {
        (1.0 - self.zeta).exp2()
    }

    /// One summand without the `2^(1−ζ)` prefactor.
    fn term(&self, g: &TripletGeometry, cut: &CutoffParams) -> f64 {
        // 1 + λcosθ >= 0 always; powf(0, 0) = 1
        let angular = (1.0 + self.lambda.value() * g.cos_theta).powf(self.zeta);
        match self.kind {
            AngularKind::G4 => {
                angular
                    * (-self.eta * (g.r_ij * g.r_ij + g.r_ik * g.r_ik + g.r_jk * g.r_jk)).exp()
                    * cutoff_value(g.r_ij, cut)
                    * cutoff_value(g.r_ik, cut)
                    * cutoff_value(g.r_jk, cut)
            }
            AngularKind::G5 => {
                angular
                    * (-self.eta * (g.r_ij * g.r_ij + g.r_ik * g.r_ik)).exp()
                    * cutoff_value(g.r_ij, cut)
                    * cutoff_value(g.r_ik, cut)
            }
        }
    }
}

/// Distances of a triplet j–i–k and the cosine of the angle at center `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletGeometry {
    pub r_ij: f64,
    pub r_ik: f64,
    pub r_jk: f64,
    pub cos_theta: f64,
}

impl TripletGeometry {
    pub fn from_displacements(d_ij: &Vector3<f64>, d_ik: &Vector3<f64>) -> Self {
        let r_ij = d_ij.norm();
        let r_ik = d_ik.norm();
        let r_jk = (d_ik - d_ij).norm();
        let cos_theta = (d_ij.dot(d_ik) / (r_ij * r_ik)).clamp(-1.0, 1.0);
        Self {
            r_ij,
            r_ik,
            r_jk,
            cos_theta,
        }
    }

    pub fn from_neighbors(j: &Neighbor, k: &Neighbor) -> Self {
        Self::from_displacements(&j.displacement, &k.displacement)
    }
}

/// G2 = Σ_j exp(−η(R_ij − R_s)²) f_c(R_ij).
///
/// `neighbors` must already be restricted to `p.neighbor`; terms are summed in
/// iteration order.
pub fn radial_g2<'a>(
    neighbors: impl IntoIterator<Item = &'a Neighbor>,
    p: &RadialParams,
    cut: &CutoffParams,
) -> f64 {
    neighbors
        .into_iter()
        .map(|n| radial_term(n.distance, p, cut))
        .sum()
}

#[inline]
fn radial_term(r: f64, p: &RadialParams, cut: &CutoffParams) -> f64 {
    let dr = r - p.r_s;
    (-p.eta * dr * dr).exp() * cutoff_value(r, cut)
}

/// G4 over unordered neighbor pairs `{j, k}`, each pair passed once.
pub fn angular_g4<'a>(
    pairs: impl IntoIterator<Item = (&'a Neighbor, &'a Neighbor)>,
    p: &AngularParams,
    cut: &CutoffParams,
) -> f64 {
    debug_assert_eq!(p.kind, AngularKind::G4);
    angular_sum(pairs, p, cut)
}

/// G5: G4 without the R_jk Gaussian and without f_c(R_jk).
pub fn angular_g5<'a>(
    pairs: impl IntoIterator<Item = (&'a Neighbor, &'a Neighbor)>,
    p: &AngularParams,
    cut: &CutoffParams,
) -> f64 {
    debug_assert_eq!(p.kind, AngularKind::G5);
    angular_sum(pairs, p, cut)
}

fn angular_sum<'a>(
    pairs: impl IntoIterator<Item = (&'a Neighbor, &'a Neighbor)>,
    p: &AngularParams,
    cut: &CutoffParams,
) -> f64 {
    let sum: f64 = pairs
        .into_iter()
        .map(|(j, k)| p.term(&TripletGeometry::from_neighbors(j, k), cut))
        .sum();
    p.prefactor() * sum
}

impl fmt::Display for AngularKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AngularKind::G4 => "G4",
            AngularKind::G5 => "G5",
        })
    }
}
