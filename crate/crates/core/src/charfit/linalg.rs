//! Dense least squares for the handful of columns the fits need.

/// Solve min ‖A·c − y‖² by Householder QR. `columns` holds A column-wise.
/// Returns `None` when A is rank deficient.
pub(crate) fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = y.len();
    let n = columns.len();
    if n == 0 || m < n {
        return None;
    }
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut b = y.to_vec();
    let col_scale: Vec<f64> = a
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut diag = vec![0.0; n];
    for k in 0..n {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-13 * col_scale[k].max(f64::MIN_POSITIVE) {
            return None;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        // v = x − alpha·e1, stored in a[k][k..]
        a[k][k] -= alpha;
        let vnorm2: f64 = a[k][k..].iter().map(|v| v * v).sum();
        for j in k + 1..n {
            let dot: f64 = (k..m).map(|i| a[k][i] * a[j][i]).sum();
            let f = 2.0 * dot / vnorm2;
            let (head, tail) = a.split_at_mut(j);
            for (aj, vi) in tail[0][k..m].iter_mut().zip(&head[k][k..m]) {
                *aj -= f * vi;
            }
        }
        let dot: f64 = (k..m).map(|i| a[k][i] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for (bi, ai) in b[k..m].iter_mut().zip(&a[k][k..m]) {
            *bi -= f * ai;
        }
        diag[k] = alpha;
    }
    let mut coef = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[j][k] * coef[j];
        }
        coef[k] = s / diag[k];
    }
    let sse = b[n..].iter().map(|v| v * v).sum();
    Some((coef, sse))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let (c, sse) = least_squares(&[vec![1.0; 10], x], &y).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-12);
        assert!(sse < 1e-24);
    }

    #[test]
    fn residual_matches_direct_computation() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.1, 0.9, 2.2, 2.8, 4.1];
        let (c, sse) = least_squares(&[vec![1.0; 5], x.to_vec()], &y).unwrap();
        let direct: f64 = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (yi - c[0] - c[1] * xi).powi(2))
            .sum();
        assert!((sse - direct).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient() {
        let x = vec![1.0, 2.0, 3.0];
        assert!(least_squares(&[x.clone(), x.iter().map(|v| 2.0 * v).collect()], &[1.0, 2.0, 3.0]).is_none());
    }
}
