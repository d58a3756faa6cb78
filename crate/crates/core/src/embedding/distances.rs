use crate::bits::BitString;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Hamming,
}

/// Input points: real vectors or bit strings.
#[derive(Debug, Clone, Copy)]
pub enum Points<'a> {
    Real(&'a [Vec<f64>]),
    Bits(&'a [BitString]),
}

impl Points<'_> {
    pub fn len(&self) -> usize {
        match self {
            Points::Real(v) => v.len(),
            Points::Bits(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense symmetric `n × n` distance matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::invalid(format!("distance row {i} has {} entries, expected {n}", r.len())));
            }
            if r[i] != 0.0 {
                return Err(Error::invalid(format!("distance matrix diagonal entry {i} is {}", r[i])));
            }
            for (j, &d) in r.iter().enumerate() {
                if !(d.is_finite() && d >= 0.0) || d != rows[j][i] {
                    return Err(Error::invalid(format!("entry ({i}, {j}) breaks symmetry or is not a distance")));
                }
            }
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// All pairwise distances. Euclidean applies to real vectors, Hamming to bit
/// strings; any other pairing is an error.
pub fn pairwise_distances(points: Points<'_>, metric: Metric) -> Result<DistanceMatrix> {
    let n = points.len();
    let mut data = vec![0.0; n * n];
    match (points, metric) {
        (Points::Real(v), Metric::Euclidean) => {
            let dim = v.first().map_or(0, Vec::len);
            if let Some(bad) = v.iter().position(|x| x.len() != dim) {
                return Err(Error::LayoutMismatch(format!("vector {bad} has dimension {}, expected {dim}", v[bad].len())));
            }
            for i in 0..n {
                for j in i + 1..n {
                    let d = crate::screening::euclidean(&v[i], &v[j]);
                    data[i * n + j] = d;
                    data[j * n + i] = d;
                }
            }
        }
        (Points::Bits(b), Metric::Hamming) => {
            let len = b.first().map_or(0, BitString::len);
            if let Some(bad) = b.iter().position(|x| x.len() != len) {
                return Err(Error::LayoutMismatch(format!("bit string {bad} has {} bits, expected {len}", b[bad].len())));
            }
            for i in 0..n {
                for j in i + 1..n {
                    let d = b[i].hamming(&b[j]) as f64;
                    data[i * n + j] = d;
                    data[j * n + i] = d;
                }
            }
        }
        (Points::Real(_), Metric::Hamming) => {
            return Err(Error::invalid("hamming metric needs bit-string inputs"));
        }
        (Points::Bits(_), Metric::Euclidean) => {
            return Err(Error::invalid("euclidean metric needs real-vector inputs"));
        }
    }
    Ok(DistanceMatrix { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_triangle() {
        let v = vec![vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 4.0]];
        let d = pairwise_distances(Points::Real(&v), Metric::Euclidean).unwrap();
        assert_eq!((d.get(0, 1), d.get(0, 2), d.get(1, 2)), (3.0, 4.0, 5.0));
        assert_eq!(d.get(2, 1), 5.0);
    }

    #[test]
    fn identical_points() {
        let v = vec![vec![1.5, 2.0]; 2];
        let d = pairwise_distances(Points::Real(&v), Metric::Euclidean).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
    }

    #[test]
    fn metric_type_mismatch() {
        let v = vec![vec![1.0]];
        assert!(pairwise_distances(Points::Real(&v), Metric::Hamming).is_err());
        let b = vec![BitString::zeros(3)];
        assert!(pairwise_distances(Points::Bits(&b), Metric::Euclidean).is_err());
    }

    #[test]
    fn from_rows_checks_symmetry() {
        assert!(DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    }
}
