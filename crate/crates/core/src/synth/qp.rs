//! Least squares over the probability simplex:
//! `min_w ||A w - b||^2  s.t.  w >= 0, sum(w) = 1`.
//!
//! A primal active-set pass is tried first. When it does
//! not meet the KKT tolerance, accelerated projected gradient (FISTA with
//! function-value restart) takes over, re-running the active-set pass every
//! few iterations and keeping its result when the objective does not rise.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const KKT_TOL: f64 = 1e-9;
pub const MAX_ITER: usize = 10_000;
const POLISH_EVERY: usize = 20;
const SUPPORT_TOL: f64 = 1e-12;

/// Output of [`solve_simplex_ls`].
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub w: DVector<f64>,
    /// `||A w - b||^2`.
    pub objective: f64,
    /// Natural residual `||w - P(w - grad)||_inf` at `w`.
    pub kkt: f64,
    pub iterations: usize,
}

/// Euclidean projection onto the probability simplex (sort based).
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    DVector::from_iterator(n, v.iter().map(|x| (x - tau).max(0.0)))
}

/// Objective `||A w - b||^2` evaluated on `A` directly.
struct Objective<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
}

impl Objective<'_> {
    fn objective(&self, w: &DVector<f64>) -> f64 {
        (self.a * w - self.b).norm_squared()
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        self.a.transpose() * (self.a * w - self.b) * 2.0
    }

    fn kkt(&self, w: &DVector<f64>) -> f64 {
        let g = self.gradient(w);
        (w - project_simplex(&(w - g))).amax()
    }

    /// Minimiser of the objective on the affine set `{sum = 1, w_j = 0
    /// off support}`. The last support column is eliminated through the
    /// sum constraint and the reduced least-squares problem is solved on
    /// `A` itself (minimum-norm SVD solution), which avoids squaring its
    /// condition number.
    fn eqp(&self, support: &[usize]) -> Option<DVector<f64>> {
        let mut out = DVector::<f64>::zeros(self.a.ncols());
        let (&last, rest) = support.split_last()?;
        if rest.is_empty() {
            out[last] = 1.0;
            return Some(out);
        }
        let k = self.a.nrows();
        let m = DMatrix::from_fn(k, rest.len(), |r, c| {
            self.a[(r, rest[c])] - self.a[(r, last)]
        });
        let rhs = DVector::from_fn(k, |r, _| self.b[r] - self.a[(r, last)]);
        let svd = m.svd(true, true);
        let smax = svd.singular_values.max();
        let u = svd.solve(&rhs, 1e-12 * smax.max(f64::MIN_POSITIVE)).ok()?;
        let mut total = 0.0;
        for (i, &j) in rest.iter().enumerate() {
            if !u[i].is_finite() {
                return None;
            }
            out[j] = u[i];
            total += u[i];
        }
        out[last] = 1.0 - total;
        Some(out)
    }

    /// Active-set refinement started from the feasible point `w`: exact
    /// solves on the working support, backtracking to the boundary when a
    /// solve leaves the simplex, and adding the coordinate with the most
    /// negative reduced gradient until none remains. Every accepted move
    /// is a convex combination of feasible points, so the objective never
    /// increases.
    fn active_set(&self, w: &DVector<f64>) -> Option<DVector<f64>> {
        let j = w.len();
        let mut w = w.clone();
        let mut free: Vec<bool> = w.iter().map(|&x| x > SUPPORT_TOL).collect();
        if !free.iter().any(|&f| f) {
            free[w.imax()] = true;
        }
        let scale = 2.0 * self.a.norm() * (self.a.norm() + self.b.norm());
        let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
        // Coordinates whose entry failed to lower the objective; cleared on
        // progress so that rounding cannot make the loop cycle.
        let mut stalled = vec![false; j];
        let mut last: Option<(usize, f64)> = None;
        for _ in 0..(4 * j + 20) {
            for _ in 0..=j {
                let support: Vec<usize> = (0..j).filter(|&i| free[i]).collect();
                let z = self.eqp(&support)?;
                if support.iter().all(|&i| z[i] >= 0.0) {
                    w = z;
                    break;
                }
                let mut alpha = 1.0f64;
                let mut hit = None;
                for &i in &support {
                    if z[i] < 0.0 {
                        let a = w[i] / (w[i] - z[i]);
                        if a < alpha {
                            alpha = a;
                            hit = Some(i);
                        }
                    }
                }
                w = &w + (&z - &w) * alpha;
                if let Some(i) = hit {
                    free[i] = false;
                }
                for i in 0..j {
                    if free[i] && w[i] <= 0.0 {
                        free[i] = false;
                    }
                    if !free[i] {
                        w[i] = 0.0;
                    }
                }
                if !free.iter().any(|&f| f) {
                    return None;
                }
            }
            let total = w.sum();
            if !(total > 0.0) {
                return None;
            }
            w /= total;
            let f = self.objective(&w);
            if let Some((i, f_before)) = last {
                if f < f_before {
                    stalled.iter_mut().for_each(|s| *s = false);
                } else {
                    stalled[i] = true;
                }
            }
            let g = self.gradient(&w);
            let lambda: f64 = (0..j).filter(|&i| free[i]).map(|i| w[i] * g[i]).sum();
            let entering = (0..j)
                .filter(|&i| !free[i] && !stalled[i])
                .map(|i| (i, g[i] - lambda))
                .filter(|&(_, r)| r < -tol)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match entering {
                Some((i, _)) => {
                    free[i] = true;
                    last = Some((i, f));
                }
                None => return Some(w),
            }
        }
        None
    }

    /// Active-set point from `w`, kept only if it does not raise `f`.
    fn polish(&self, w: &DVector<f64>, f: f64) -> Option<(DVector<f64>, f64)> {
        let p = self.active_set(w)?;
        let fp = self.objective(&p);
        (fp <= f).then_some((p, fp))
    }
}

/// Orders donor columns canonically so the result does not depend on the
/// order in which donors were supplied.
fn canonical_order(a: &DMatrix<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..a.ncols()).collect();
    idx.sort_by(|&i, &j| {
        a.column(i)
            .iter()
            .zip(a.column(j).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    idx
}

/// Solves the simplex-constrained least-squares problem, optionally warm
/// started from `w0` (projected onto the simplex first).
pub fn solve_simplex_ls(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    w0: Option<&DVector<f64>>,
) -> Result<QpSolution> {
    let (k, j) = a.shape();
    if b.len() != k {
        return Err(Error::Dimension(format!(
            "A is {k}x{j}, b has {} rows",
            b.len()
        )));
    }
    if j == 0 {
        return Err(Error::NotEnoughDonors("no columns".into()));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("simplex least-squares input".into()));
    }
    if let Some(w0) = w0 {
        if w0.len() != j || w0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension(
                "warm start has wrong length or non-finite".into(),
            ));
        }
    }

    let order = canonical_order(a);
    let ap = DMatrix::from_fn(k, j, |r, c| a[(r, order[c])]);
    let start = w0.map(|w| DVector::from_fn(j, |c, _| w[order[c]]));
    let sol = solve_canonical(&ap, b, start);
    let mut w = DVector::<f64>::zeros(j);
    for (c, &orig) in order.iter().enumerate() {
        w[orig] = sol.w[c];
    }
    let objective = (a * &w - b).norm_squared();
    Ok(QpSolution {
        w,
        objective,
        ..sol
    })
}

fn solve_canonical(a: &DMatrix<f64>, b: &DVector<f64>, w0: Option<DVector<f64>>) -> QpSolution {
    let j = a.ncols();
    let obj = Objective { a, b };
    let lipschitz = 2.0 * (a.transpose() * a).norm();
    let mut w = match w0 {
        Some(w) => project_simplex(&w),
        None => DVector::from_element(j, 1.0 / j as f64),
    };
    if lipschitz == 0.0 || j == 1 {
        return QpSolution {
            objective: obj.objective(&w),
            kkt: obj.kkt(&w),
            w,
            iterations: 0,
        };
    }

    let mut f = obj.objective(&w);
    if let Some((p, fp)) = obj.polish(&w, f) {
        let kkt = obj.kkt(&p);
        if kkt <= KKT_TOL {
            return QpSolution {
                w: p,
                objective: fp,
                kkt,
                iterations: 0,
            };
        }
        w = p;
        f = fp;
    }

    let step = 1.0 / lipschitz;
    let mut y = w.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut kkt = obj.kkt(&w);

    while iterations < MAX_ITER && kkt > KKT_TOL {
        iterations += 1;
        let w_next = project_simplex(&(&y - obj.gradient(&y) * step));
        let f_next = obj.objective(&w_next);
        if f_next > f {
            if t > 1.0 {
                // Momentum overshoot: restart from the last accepted point.
                y = w.clone();
                t = 1.0;
                continue;
            }
            // A plain projected step no longer decreases f: rounding floor.
            kkt = obj.kkt(&w);
            break;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &w_next + (&w_next - &w) * ((t - 1.0) / t_next);
        w = w_next;
        f = f_next;
        t = t_next;

        if iterations % POLISH_EVERY == 0 || iterations == MAX_ITER {
            if let Some((p, fp)) = obj.polish(&w, f) {
                w = p;
                f = fp;
                y = w.clone();
                t = 1.0;
            }
            kkt = obj.kkt(&w);
        }
    }
    if kkt > KKT_TOL {
        if let Some((p, _)) = obj.polish(&w, f) {
            w = p;
        }
        kkt = obj.kkt(&w);
    }
    QpSolution {
        objective: obj.objective(&w),
        kkt,
        w,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn projection_examples() {
        let p = project_simplex(&DVector::from_vec(vec![0.2, 0.3, 0.5]));
        assert_relative_eq!(p, DVector::from_vec(vec![0.2, 0.3, 0.5]), epsilon = 1e-15);
        let p = project_simplex(&DVector::from_vec(vec![2.0, 0.0, 0.0]));
        assert_relative_eq!(p, DVector::from_vec(vec![1.0, 0.0, 0.0]), epsilon = 1e-15);
        let p = project_simplex(&DVector::from_vec(vec![1.0, 1.0]));
        assert_relative_eq!(p, DVector::from_vec(vec![0.5, 0.5]), epsilon = 1e-15);
        let p = project_simplex(&DVector::from_vec(vec![-5.0, -5.0, -4.0]));
        assert_relative_eq!(p, DVector::from_vec(vec![0.0, 0.0, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn exact_column_match() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 4.0, 0.0, 2.0, 0.5, 1.0, 3.0, 1.0, -2.0]);
        let b = a.column(1).into_owned();
        let s = solve_simplex_ls(&a, &b, None).unwrap();
        assert_relative_eq!(s.w, DVector::from_vec(vec![0.0, 1.0, 0.0]), epsilon = 1e-12);
        assert!(s.objective < 1e-20);
    }

    #[test]
    fn convex_combination() {
        let a = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 3.0, 0.0, 2.0, -1.0, 5.0, 0.5, 0.5, 0.1, 4.0, 2.0, 1.0],
        );
        let b = a.column(0) * 0.3 + a.column(1) * 0.7;
        let s = solve_simplex_ls(&a, &b, None).unwrap();
        assert_relative_eq!(s.w[0], 0.3, epsilon = 1e-9);
        assert_relative_eq!(s.w[1], 0.7, epsilon = 1e-9);
        assert!(s.objective <= 1e-12);
        assert!(s.kkt <= KKT_TOL);
    }

    #[test]
    fn rejects_non_finite() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        let b = DVector::from_vec(vec![1.0]);
        assert!(matches!(
            solve_simplex_ls(&a, &b, None),
            Err(Error::NonFinite(_))
        ));
    }
}
