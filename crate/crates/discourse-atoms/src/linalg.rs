//! Small dense-vector helpers shared by the hot loops.
//!
//! Everything here works on `&[f64]` slices so callers can keep flat
//! row-major storage and avoid allocating per word.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// a += c * b
pub fn axpy(a: &mut [f64], c: f64, b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for i in 0..a.len() {
        a[i] += c * b[i];
    }
}

pub fn scale(a: &mut [f64], c: f64) {
    for x in a.iter_mut() {
        *x *= c;
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

pub fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        scale(a, 1.0 / n);
    }
}

/// Solves the symmetric positive (semi-)definite system `A x = b` in place by
/// Cholesky decomposition. `a` is row-major `n x n` and is destroyed.
///
/// Returns `None` when a pivot falls below `tol` (design not positive
/// definite); callers then retry with a ridge.
pub fn cholesky_solve(a: &mut [f64], b: &[f64], n: usize, tol: f64) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    // in-place lower-triangular factorization
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= tol {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    // forward then backward substitution
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - a[i * n + k] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] = y[i] - a[k * n + i] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    Some(y)
}

/// Accumulates the normal-equations system `(X^T W X, X^T W y)` from
/// observation rows.
pub fn build_normal_system(
    design: &[&[f64]],
    weights: &[f64],
    targets: &[f64],
    dim: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut gram = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for ((row, &w), &t) in design.iter().zip(weights).zip(targets) {
        for i in 0..dim {
            let wi = w * row[i];
            rhs[i] += wi * t;
            for j in 0..=i {
                gram[i * dim + j] += wi * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            gram[i * dim + j] = gram[j * dim + i];
        }
    }
    (gram, rhs)
}

/// Solves an accumulated normal-equations system. Tries the exact solve
/// first; on a singular design falls back to the ridge `ridge_rel * tr/dim`
/// and reports that the regularizer was activated.
pub fn solve_system(gram: &[f64], rhs: &[f64], dim: usize, ridge_rel: f64) -> (Vec<f64>, bool) {
    let trace: f64 = (0..dim).map(|i| gram[i * dim + i]).sum();
    if ridge_rel < 1e-9 {
        let mut work = gram.to_vec();
        if let Some(x) = cholesky_solve(&mut work, rhs, dim, 1e-13 * trace.max(1e-300)) {
            return (x, false);
        }
    }
    let eps = ridge_rel.max(1e-10) * trace.max(1e-300) / dim as f64;
    let mut work = gram.to_vec();
    for i in 0..dim {
        work[i * dim + i] += eps;
    }
    let x = cholesky_solve(&mut work, rhs, dim, 0.0)
        .expect("ridge-regularized normal equations must be positive definite");
    (x, true)
}

/// Weighted least squares over observation rows. See [`solve_system`] for
/// the ridge semantics.
pub fn solve_wls(
    design: &[&[f64]],
    weights: &[f64],
    targets: &[f64],
    dim: usize,
    ridge_rel: f64,
) -> (Vec<f64>, bool) {
    let (gram, rhs) = build_normal_system(design, weights, targets, dim);
    solve_system(&gram, &rhs, dim, ridge_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_matches_known_solution() {
        // A = [[4,2],[2,3]], b = [2,5] -> x = [-0.5, 2]
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&mut a, &[2.0, 5.0], 2, 0.0).unwrap();
        assert_relative_eq!(x[0], -0.5, epsilon = 1e-12);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_system_reports_ridge() {
        // rank-1 design in 2d
        let rows: Vec<&[f64]> = vec![&[1.0, 0.0]];
        let (x, ridged) = solve_wls(&rows, &[1.0], &[0.7], 2, 0.0);
        assert!(ridged);
        assert_relative_eq!(x[0], 0.7, epsilon = 1e-6);
        assert!(x[1].abs() < 1e-9);
    }

    #[test]
    fn well_posed_system_solves_exactly() {
        let rows: Vec<&[f64]> = vec![&[1.0, 0.0], &[0.0, 2.0], &[1.0, 1.0]];
        let (x, ridged) = solve_wls(&rows, &[1.0, 1.0, 1.0], &[1.0, 2.0, 2.0], 2, 0.0);
        assert!(!ridged);
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
