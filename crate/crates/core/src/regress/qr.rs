//! Householder QR least squares with in-order rank detection.
//!
//! Columns are scaled to unit norm and processed left to right. A column
//! whose residual norm (after projecting out the accepted columns) falls
//! below `tol * largest accepted pivot` is dropped, so among a collinear
//! set the later columns go first.

use nalgebra::DMatrix;

pub(crate) struct QrSolve {
    /// Indices of retained columns, ascending.
    pub kept: Vec<usize>,
    /// Indices of dropped columns, ascending.
    pub dropped: Vec<usize>,
    /// Coefficients of the retained columns in original units.
    pub beta: Vec<f64>,
    /// `(X_k' X_k)^{-1}` for the retained columns.
    pub xtx_inv: DMatrix<f64>,
}

pub(crate) fn solve(x: &DMatrix<f64>, y: &[f64], tol: f64) -> QrSolve {
    let (n, k) = x.shape();
    debug_assert_eq!(y.len(), n);

    let mut scale = vec![0.0; k];
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let col = x.column(j);
        let d = col.norm();
        scale[j] = d;
        cols.push(if d > 0.0 {
            col.iter().map(|v| v / d).collect()
        } else {
            vec![0.0; n]
        });
    }
    let mut qty = y.to_vec();

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut max_pivot = 0.0f64;
    let mut r = 0usize;
    let mut v = vec![0.0; n];

    for j in 0..k {
        if scale[j] == 0.0 || r >= n {
            dropped.push(j);
            continue;
        }
        let norm = cols[j][r..].iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 || norm < tol * max_pivot {
            dropped.push(j);
            continue;
        }
        let x0 = cols[j][r];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        v[r..].copy_from_slice(&cols[j][r..]);
        v[r] -= alpha;
        let vnorm2: f64 = v[r..].iter().map(|a| a * a).sum();
        if vnorm2 > 0.0 {
            let reflect = |target: &mut [f64]| {
                let dot: f64 = v[r..].iter().zip(&target[r..]).map(|(a, b)| a * b).sum();
                let f = 2.0 * dot / vnorm2;
                for (t, vi) in target[r..].iter_mut().zip(&v[r..]) {
                    *t -= f * vi;
                }
            };
            for col in cols.iter_mut().skip(j + 1) {
                reflect(col);
            }
            reflect(&mut qty);
        }
        cols[j][r] = alpha;
        for a in &mut cols[j][r + 1..] {
            *a = 0.0;
        }
        max_pivot = max_pivot.max(norm);
        kept.push(j);
        r += 1;
    }

    let rank = kept.len();
    // Upper-triangular R over the retained columns.
    let rmat = DMatrix::from_fn(
        rank,
        rank,
        |i, c| if i <= c { cols[kept[c]][i] } else { 0.0 },
    );
    let mut z: Vec<f64> = qty[..rank].to_vec();
    for i in (0..rank).rev() {
        let mut s = z[i];
        for c in i + 1..rank {
            s -= rmat[(i, c)] * z[c];
        }
        z[i] = s / rmat[(i, i)];
    }
    let beta: Vec<f64> = z.iter().zip(&kept).map(|(b, &j)| b / scale[j]).collect();

    let mut rinv = DMatrix::<f64>::zeros(rank, rank);
    for c in 0..rank {
        rinv[(c, c)] = 1.0 / rmat[(c, c)];
        for i in (0..c).rev() {
            let mut s = 0.0;
            for m in i + 1..=c {
                s += rmat[(i, m)] * rinv[(m, c)];
            }
            rinv[(i, c)] = -s / rmat[(i, i)];
        }
    }
    let mut xtx_inv = &rinv * rinv.transpose();
    for a in 0..rank {
        for b in 0..rank {
            xtx_inv[(a, b)] /= scale[kept[a]] * scale[kept[b]];
        }
    }

    QrSolve {
        kept,
        dropped,
        beta,
        xtx_inv,
    }
}
