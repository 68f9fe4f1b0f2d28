//! Small dense kernels shared by the verifiers and solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Size above which symmetric norms switch to power iteration.
pub const EIGEN_MAX_DIM: usize = 512;
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 10_000;

/// Largest singular value of `m`, by power iteration on `m^T m`.
///
/// The start vector is fixed, so the result is deterministic.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_749_895).fract());
    v.normalize_mut();
    let mut sigma2 = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = m.tr_mul(&(m * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        v = w / norm;
        if (next - sigma2).abs() <= POWER_TOL * next {
            sigma2 = next;
            break;
        }
        sigma2 = next;
    }
    sigma2.sqrt()
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn symmetric_norm(a: &DMatrix<f64>) -> f64 {
    let k = a.nrows();
    if k == 0 {
        return 0.0;
    }
    if k <= EIGEN_MAX_DIM {
        SymmetricEigen::new(a.clone())
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, &e| acc.max(e.abs()))
    } else {
        // for symmetric A, ||A|| = sqrt(lambda_max(A^T A))
        operator_norm(a)
    }
}

/// Least-squares coefficients of `a x ~ b`.
///
/// Uses a QR factorization; when `a` is numerically rank deficient the
/// normal equations are solved with a `1e-12` ridge instead and the second
/// return value is `true`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let k = a.ncols();
    if k == 0 {
        return (DVector::zeros(0), false);
    }
    if a.nrows() >= k {
        let qr = a.clone().qr();
        let r = qr.r();
        let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diag_min = r.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if diag_max > 0.0 && diag_min > 1e-10 * diag_max {
            let qtb = qr.q().tr_mul(b);
            if let Some(x) = r.solve_upper_triangular(&qtb) {
                return (x, false);
            }
        }
    }
    (ridge(a, b, 1e-12), true)
}

fn ridge(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let k = a.ncols();
    let mut g = a.tr_mul(a);
    for i in 0..k {
        g[(i, i)] += lambda;
    }
    let rhs = a.tr_mul(b);
    match g.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        // Gram of a zero block: fall back to an eigen pseudo-inverse
        None => {
            let eig = SymmetricEigen::new(g);
            let coords = eig.eigenvectors.tr_mul(&rhs);
            let scaled = DVector::from_fn(k, |i, _| {
                let l = eig.eigenvalues[i];
                if l > lambda {
                    coords[i] / l
                } else {
                    0.0
                }
            });
            eig.eigenvectors * scaled
        }
    }
}

/// Indices of the `k` largest-magnitude entries, sorted ascending. Ties go
/// to the lower index.
pub fn top_k_indices(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k.min(v.len()));
    idx.sort_unstable();
    idx
}

/// Keeps the `k` largest-magnitude entries and zeroes the rest.
pub fn hard_threshold(v: &DVector<f64>, k: usize) -> DVector<f64> {
    let keep = top_k_indices(v.as_slice(), k);
    let mut out = DVector::zeros(v.len());
    for i in keep {
        out[i] = v[i];
    }
    out
}

pub fn soft_threshold(v: &DVector<f64>, t: f64) -> DVector<f64> {
    v.map(|x| {
        if x > t {
            x - t
        } else if x < -t {
            x + t
        } else {
            0.0
        }
    })
}

/// Index of the largest `|v_i|` outside `exclude`; lowest index wins ties.
pub fn argmax_abs(v: &DVector<f64>, exclude: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in v.iter().enumerate() {
        if exclude.contains(&i) {
            continue;
        }
        let a = x.abs();
        match best {
            Some((_, b)) if a <= b => {}
            _ => best = Some((i, a)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_norm_matches_svd() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 1.0, -1.0, 3.0]);
        let svd = m.clone().svd(false, false);
        let s = svd.singular_values.max();
        assert!((operator_norm(&m) - s).abs() < 1e-6);
    }

    #[test]
    fn symmetric_norm_2x2() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((symmetric_norm(&a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn power_fallback_agrees_with_eigen() {
        let n = EIGEN_MAX_DIM + 8;
        let a = DMatrix::from_fn(n, n, |i, j| {
            let (i, j) = (i.min(j), i.max(j));
            ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.5
        });
        let exact = SymmetricEigen::new(a.clone())
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));
        let est = symmetric_norm(&a);
        assert!((est - exact).abs() <= 1e-6 * exact, "{est} vs {exact}");
    }

    #[test]
    fn least_squares_exact_and_ridge() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, -1.0, 0.0]);
        let (x, flag) = least_squares(&a, &b);
        assert!(!flag);
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] + 1.0).abs() < 1e-14);

        let dup = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let (x, flag) = least_squares(&dup, &DVector::from_vec(vec![2.0, 0.0]));
        assert!(flag);
        assert!((x[0] + x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn thresholds() {
        let v = DVector::from_vec(vec![0.0, 3.0, 0.0, -1.0]);
        assert_eq!(hard_threshold(&v, 2), v);
        assert_eq!(top_k_indices(&[1.0, -1.0, 1.0], 2), vec![0, 1]);
        let s = soft_threshold(&DVector::from_vec(vec![2.0, -0.5, -3.0]), 1.0);
        assert_eq!(s.as_slice(), &[1.0, 0.0, -2.0]);
        assert_eq!(argmax_abs(&DVector::from_vec(vec![1.0, -2.0, 2.0]), &[]), Some(1));
        assert_eq!(argmax_abs(&DVector::from_vec(vec![1.0, -2.0, 2.0]), &[1]), Some(2));
    }
}
