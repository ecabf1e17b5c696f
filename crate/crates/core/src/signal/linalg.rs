/// Least-squares coefficients for `y ≈ X·c`, where row `i` of `X` is
/// `row(i)`. Solves the normal equations with partial pivoting; `None` if
/// the design is rank deficient.
pub fn least_squares<const K: usize>(n: usize, row: impl Fn(usize) -> [f64; K], y: &[f64]) -> Option<[f64; K]> {
    let mut g = [[0.0; K]; K];
    let mut r = [0.0; K];
    for (i, &v) in y.iter().enumerate().take(n) {
        let c = row(i);
        for a in 0..K {
            r[a] += c[a] * v;
            for b in 0..K {
                g[a][b] += c[a] * c[b];
            }
        }
    }
    solve(g, r)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve<const K: usize>(mut a: [[f64; K]; K], mut b: [f64; K]) -> Option<[f64; K]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..K {
        let piv = (col..K).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..K {
            let f = a[i][col] / a[col][col];
            for j in col..K {
                a[i][j] -= f * a[col][j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = [0.0; K];
    for i in (0..K).rev() {
        let s: f64 = (i + 1..K).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}
