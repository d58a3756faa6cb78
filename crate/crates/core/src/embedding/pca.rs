use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// One row of `dims` coordinates per input point.
    pub coords: Vec<Vec<f64>>,
    /// Unit principal axes in input space, descending variance.
    pub axes: Vec<Vec<f64>>,
    /// Sample variance along each axis.
    pub variances: Vec<f64>,
}

/// Project mean-centered data onto its top `dims` principal axes.
///
/// Axes come from the covariance eigendecomposition when the input dimension
/// does not exceed the point count, and from the Gram matrix otherwise; both
/// give the same subspace. Each axis is oriented so that its largest-magnitude
/// loading is positive.
pub fn pca_project(vectors: &[Vec<f64>], dims: usize) -> Result<PcaProjection> {
    let n = vectors.len();
    if dims == 0 {
        return Err(Error::invalid("PCA needs at least one output dimension"));
    }
    if n < dims {
        return Err(Error::invalid(format!("PCA to {dims} dimensions needs at least {dims} points, got {n}")));
    }
    let d = vectors[0].len();
    if let Some(bad) = vectors.iter().position(|v| v.len() != d) {
        return Err(Error::LayoutMismatch(format!("vector {bad} has dimension {}, expected {d}", vectors[bad].len())));
    }

    let mut x = DMatrix::from_fn(n, d, |i, j| vectors[i][j]);
    for j in 0..d {
        let mean = x.column(j).sum() / n as f64;
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let denom = (n.max(2) - 1) as f64;

    let mut axes: Vec<DVector<f64>> = Vec::with_capacity(dims);
    let mut variances = Vec::with_capacity(dims);
    if d <= n {
        let cov = x.transpose() * &x / denom;
        let eig = SymmetricEigen::new(cov);
        for k in descending(&eig.eigenvalues).into_iter().take(dims) {
            axes.push(eig.eigenvectors.column(k).into_owned());
            variances.push(eig.eigenvalues[k].max(0.0));
        }
    } else {
        let gram = &x * x.transpose();
        let eig = SymmetricEigen::new(gram);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in descending(&eig.eigenvalues).into_iter().take(dims) {
            let lambda = eig.eigenvalues[k];
            let v = x.transpose() * eig.eigenvectors.column(k);
            let norm = v.norm();
            if lambda <= 1e-12 * scale || norm == 0.0 {
                axes.push(DVector::zeros(d));
                variances.push(0.0);
            } else {
                axes.push(v / norm);
                variances.push(lambda / denom);
            }
        }
    }
    // a 0-dimensional input still yields `dims` (zero) axes
    while axes.len() < dims {
        axes.push(DVector::zeros(d));
        variances.push(0.0);
    }

    for axis in &mut axes {
        let mut pivot = 0;
        for j in 0..axis.len() {
            if axis[j].abs() > axis[pivot].abs() {
                pivot = j;
            }
        }
        if !axis.is_empty() && axis[pivot] < 0.0 {
            axis.neg_mut();
        }
    }

    let coords = (0..n)
        .map(|i| axes.iter().map(|a| x.row(i).transpose().dot(a)).collect())
        .collect();
    Ok(PcaProjection {
        coords,
        axes: axes.into_iter().map(|a| a.iter().copied().collect()).collect(),
        variances,
    })
}

fn descending(values: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}
