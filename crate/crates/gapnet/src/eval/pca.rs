//! Two-component PCA of final hidden states, via a cyclic Jacobi
//! eigensolver on the sample covariance. The hidden dimension is small
//! (tens), so Jacobi is plenty and avoids a LAPACK dependency.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Projection of N states onto the top two principal axes.
#[derive(Debug, Clone)]
pub struct StateProjection {
    /// N x 2 projected coordinates.
    pub coordinates: Array2<f64>,
    /// Top two eigenvalues of the sample covariance, nonincreasing.
    pub explained_variance: [f64; 2],
    pub labels: Vec<u8>,
    /// H x 2 orthonormal components (sign-fixed: the first nonzero loading
    /// of each component is positive).
    pub components: Array2<f64>,
    pub center: Array1<f64>,
}

impl StateProjection {
    /// Projects an arbitrary state with the fitted center and components.
    pub fn project(&self, state: &Array1<f64>) -> (f64, f64) {
        let centered = state - &self.center;
        let p = centered.dot(&self.components);
        (p[0], p[1])
    }
}

pub fn pca_last_states(states: &Array2<f64>, labels: &[u8]) -> Result<StateProjection> {
    let (n, h) = states.dim();
    if h < 2 {
        return Err(Error::Validation(format!(
            "PCA needs at least 2 state dimensions, got {h}"
        )));
    }
    if n < 3 {
        return Err(Error::Validation(format!("PCA needs at least 3 states, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::Validation(format!("{n} states but {} labels", labels.len())));
    }
    if states.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite entries in the state matrix".into()));
    }

    let center = states.mean_axis(ndarray::Axis(0)).expect("n >= 3");
    let centered = states - &center.view().insert_axis(ndarray::Axis(0));
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);

    let (eigvals, eigvecs) = jacobi_eigen(&cov);
    let mut order: Vec<usize> = (0..h).collect();
    order.sort_by(|&a, &b| eigvals[b].total_cmp(&eigvals[a]));

    let mut components = Array2::zeros((h, 2));
    for (c, &idx) in order.iter().take(2).enumerate() {
        let mut col: Vec<f64> = (0..h).map(|r| eigvecs[[r, idx]]).collect();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
        }
        for r in 0..h {
            components[[r, c]] = col[r];
        }
    }
    let coordinates = centered.dot(&components);
    Ok(StateProjection {
        coordinates,
        explained_variance: [eigvals[order[0]], eigvals[order[1]]],
        labels: labels.to_vec(),
        components,
        center,
    })
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors as columns), unsorted.
pub(crate) fn jacobi_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut a = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]] * a[[p, q]])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diag().to_owned(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn jacobi_reconstructs_the_matrix() {
        let mut rng = crate::rng::stream_rng(8, 0);
        for _ in 0..10 {
            let n = 5;
            let mut m = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..=i {
                    let x = rng.random_range(-2.0..2.0);
                    m[[i, j]] = x;
                    m[[j, i]] = x;
                }
            }
            let (vals, vecs) = jacobi_eigen(&m);
            // A v_k = lambda_k v_k
            for k in 0..n {
                let vk = vecs.column(k).to_owned();
                let av = m.dot(&vk);
                for i in 0..n {
                    assert!((av[i] - vals[k] * vk[i]).abs() < 1e-10);
                }
            }
            // orthonormal columns
            let g = vecs.t().dot(&vecs);
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((g[[i, j]] - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn collinear_states_have_no_second_component() {
        // points on a line in 4-dim space
        let dir = [1.0, -2.0, 0.5, 3.0];
        let n = 12;
        let states = Array2::from_shape_fn((n, 4), |(i, j)| (i as f64 - 5.0) * dir[j]);
        let labels = vec![0u8; n];
        let proj = pca_last_states(&states, &labels).unwrap();
        assert!(proj.explained_variance[1].abs() < 1e-10);
        assert!(proj.explained_variance[0] > 1.0);
    }

    #[test]
    fn isotropic_gaussian_has_balanced_variances() {
        let mut rng = crate::rng::stream_rng(17, 0);
        let n = 1000;
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let states = Array2::from_shape_fn((n, 2), |_| rng.sample(normal));
        let labels = vec![0u8; n];
        let proj = pca_last_states(&states, &labels).unwrap();
        let ratio = proj.explained_variance[0] / proj.explained_variance[1];
        assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn mean_point_projects_to_origin() {
        let states = Array2::from_shape_vec((3, 2), vec![1.0, 0.0, 3.0, 4.0, 5.0, 2.0]).unwrap();
        let proj = pca_last_states(&states, &[0, 1, 0]).unwrap();
        let mean = states.mean_axis(ndarray::Axis(0)).unwrap();
        let (x, y) = proj.project(&mean);
        assert!(x.abs() < 1e-12 && y.abs() < 1e-12);
    }

    #[test]
    fn too_few_rows_or_columns_rejected() {
        let states = Array2::zeros((2, 3));
        assert!(pca_last_states(&states, &[0, 1]).is_err());
        let thin = Array2::zeros((5, 1));
        assert!(pca_last_states(&thin, &[0, 1, 0, 1, 0]).is_err());
    }

    proptest! {
        /// Permuting rows (with labels) permutes coordinates identically
        /// under the fixed sign convention.
        #[test]
        fn row_permutation_equivariance(seed in 0u64..50) {
            let mut rng = crate::rng::stream_rng(seed, 33);
            let n = 8;
            let states = Array2::from_shape_fn((n, 3), |_| rng.random_range(-2.0..2.0));
            let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
            let base = pca_last_states(&states, &labels).unwrap();

            let perm: Vec<usize> = (0..n).rev().collect();
            let permuted = Array2::from_shape_fn((n, 3), |(i, j)| states[[perm[i], j]]);
            let plabels: Vec<u8> = perm.iter().map(|&i| labels[i]).collect();
            let other = pca_last_states(&permuted, &plabels).unwrap();

            for (i, &pi) in perm.iter().enumerate() {
                for c in 0..2 {
                    prop_assert!((base.coordinates[[pi, c]] - other.coordinates[[i, c]]).abs() < 1e-9);
                }
            }
        }
    }
}
