//! Small dense helpers: Gram–Schmidt, projections and a pivoted solve.

use num_complex::Complex64;

pub type CVec = Vec<Complex64>;

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Result of orthonormalizing a list of columns.
#[derive(Debug, Clone)]
pub struct Orthonormal {
    /// Orthonormal vectors, one per kept column.
    pub q: Vec<CVec>,
    /// Indices of the kept input columns, in the order they were accepted.
    pub kept: Vec<usize>,
    /// `r[j][i]` is the coefficient of `q[i]` in kept column `j`; kept column
    /// `j` equals `sum_{i<=j} r[j][i] q[i]` up to the dropped residual.
    pub r: Vec<CVec>,
}

fn reduce(v: &mut CVec, q: &[CVec], coeffs: &mut CVec) {
    // two passes of modified Gram–Schmidt
    for _ in 0..2 {
        for (i, qi) in q.iter().enumerate() {
            let c = dot(qi, v);
            for (vk, qk) in v.iter_mut().zip(qi) {
                *vk -= c * qk;
            }
            coeffs[i] += c;
        }
    }
}

/// Modified Gram–Schmidt in the given column order. A column is dropped when
/// its residual norm is at most `rel_cutoff` times the largest column norm.
pub fn orthonormalize(columns: &[CVec], rel_cutoff: f64) -> Orthonormal {
    let scale = columns.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let mut out = Orthonormal {
        q: Vec::new(),
        kept: Vec::new(),
        r: Vec::new(),
    };
    if scale == 0.0 {
        return out;
    }
    for (j, col) in columns.iter().enumerate() {
        let mut v = col.clone();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); out.q.len()];
        reduce(&mut v, &out.q, &mut coeffs);
        let nv = norm(&v);
        if nv > rel_cutoff * scale {
            v.iter_mut().for_each(|x| *x /= nv);
            coeffs.push(Complex64::new(nv, 0.0));
            out.q.push(v);
            out.kept.push(j);
            out.r.push(coeffs);
        }
    }
    out
}

/// Gram–Schmidt with column pivoting: at each step the column with the
/// largest remaining residual is accepted. Ties go to the lower index.
pub fn orthonormalize_pivoted(columns: &[CVec], rel_cutoff: f64) -> Orthonormal {
    let scale = columns.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let mut out = Orthonormal {
        q: Vec::new(),
        kept: Vec::new(),
        r: Vec::new(),
    };
    if scale == 0.0 {
        return out;
    }
    let mut residuals: Vec<CVec> = columns.to_vec();
    let mut used = vec![false; columns.len()];
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (j, r) in residuals.iter().enumerate() {
            if used[j] {
                continue;
            }
            let n = norm(r);
            if best.is_none_or(|(_, b)| n > b) {
                best = Some((j, n));
            }
        }
        let Some((j, n)) = best else { break };
        if n <= rel_cutoff * scale {
            break;
        }
        used[j] = true;
        // recompute against the accepted vectors to keep it tight
        let mut v = columns[j].clone();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); out.q.len()];
        reduce(&mut v, &out.q, &mut coeffs);
        let nv = norm(&v);
        if nv <= rel_cutoff * scale {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        coeffs.push(Complex64::new(nv, 0.0));
        for (k, r) in residuals.iter_mut().enumerate() {
            if !used[k] {
                let c = dot(&v, r);
                for (rk, vk) in r.iter_mut().zip(&v) {
                    *rk -= c * vk;
                }
            }
        }
        out.q.push(v);
        out.kept.push(j);
        out.r.push(coeffs);
    }
    out
}

/// Norm of the component of `v` orthogonal to the span of orthonormal `q`.
pub fn projection_residual(v: &[Complex64], q: &[CVec]) -> f64 {
    let mut w = v.to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); q.len()];
    reduce(&mut w, q, &mut scratch);
    norm(&w)
}

/// Solves `R^T`-style triangular systems produced by [`Orthonormal`]: given
/// coordinates `d` in the `q` basis, returns coefficients `c` over the kept
/// columns with `sum_j c_j col_j = sum_i d_i q_i`.
pub fn coefficients_from_q(o: &Orthonormal, d: &[Complex64]) -> CVec {
    // col_j = sum_{i<=j} r[j][i] q_i, so sum_j c_j col_j has q_i-coordinate
    // sum_{j>=i} c_j r[j][i]; back-substitute from the last index.
    let k = o.q.len();
    let mut c = vec![Complex64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let mut acc = d[i];
        for j in (i + 1)..k {
            acc -= c[j] * o.r[j][i];
        }
        c[i] = acc / o.r[i][i];
    }
    c
}

/// Solves a square real system with partial pivoting. Returns `None` when a
/// pivot falls below `1e-14` times the largest entry.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if n == 0 {
        return Some(Vec::new());
    }
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn gram_schmidt_drops_dependent_columns() {
        let cols = vec![
            vec![c(1.0), c(1.0), c(0.0)],
            vec![c(2.0), c(2.0), c(0.0)],
            vec![c(0.0), c(1.0), c(1.0)],
        ];
        let o = orthonormalize(&cols, 1e-10);
        assert_eq!(o.kept, vec![0, 2]);
        for (i, qi) in o.q.iter().enumerate() {
            for (j, qj) in o.q.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(qi, qj) - c(want)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn coefficients_reconstruct_span_element() {
        let cols = vec![vec![c(1.0), c(2.0), c(3.0)], vec![c(0.0), c(1.0), c(-1.0)]];
        let o = orthonormalize_pivoted(&cols, 1e-10);
        let d = vec![Complex64::new(0.3, 0.1), Complex64::new(-1.2, 0.0)];
        let target: CVec = (0..3)
            .map(|k| d[0] * o.q[0][k] + d[1] * o.q[1][k])
            .collect();
        let coef = coefficients_from_q(&o, &d);
        let rebuilt: CVec = (0..3)
            .map(|k| {
                o.kept
                    .iter()
                    .zip(&coef)
                    .map(|(&j, cj)| cj * cols[j][k])
                    .sum()
            })
            .collect();
        for k in 0..3 {
            assert!((rebuilt[k] - target[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn dense_solve_matches_hand_solution() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_dense(a, vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve_dense(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }
}
