//! Search over diagonal predictor weights `V` on the simplex, scoring each
//! candidate by the pre-event outcome MSPE of the weights it induces.

use nalgebra::DVector;
use rayon::prelude::*;

use super::{SynthProblem, WeightSolution};
use crate::error::Result;

pub const N_STARTS: usize = 20;
const AXIS_HEAVY: f64 = 0.7;
const PAIR_HEAVY: f64 = 0.4;
const STEP0: f64 = 1.0;
const MIN_STEP: f64 = 1e-3;
const MAX_EVALS: usize = 300;

/// Best `(V, W)` found by [`optimize_v`].
#[derive(Debug, Clone, PartialEq)]
pub struct VSearch {
    pub v: Vec<f64>,
    pub weights: WeightSolution,
    pub mspe: f64,
    /// MSPE at equal predictor weights.
    pub mspe_equal: f64,
    /// True when the equal-weight `V` was kept.
    pub fallback: bool,
    /// Index of the winning start (`None` on fallback).
    pub start: Option<usize>,
    pub evaluations: usize,
}

fn softmax(theta: &[f64]) -> Vec<f64> {
    let m = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = theta.iter().map(|t| (t - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic starting points: equal weights, one axis-heavy corner per
/// predictor, heavy pairs, then a Halton fill up to `N_STARTS`.
pub fn starting_points(k: usize) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![1.0 / k as f64; k]];
    if k == 1 {
        starts.resize(N_STARTS, vec![1.0]);
        return starts;
    }
    for a in 0..k {
        let mut v = vec![(1.0 - AXIS_HEAVY) / (k - 1) as f64; k];
        v[a] = AXIS_HEAVY;
        starts.push(v);
    }
    if k > 2 {
        'pairs: for a in 0..k {
            for b in a + 1..k {
                if starts.len() >= N_STARTS {
                    break 'pairs;
                }
                let mut v = vec![(1.0 - 2.0 * PAIR_HEAVY) / (k - 2) as f64; k];
                v[a] = PAIR_HEAVY;
                v[b] = PAIR_HEAVY;
                starts.push(v);
            }
        }
    }
    let mut i = 1;
    while starts.len() < N_STARTS {
        let raw: Vec<f64> = (0..k)
            .map(|d| 0.05 + radical_inverse(i, PRIMES[d % PRIMES.len()]))
            .collect();
        let s: f64 = raw.iter().sum();
        starts.push(raw.into_iter().map(|x| x / s).collect());
        i += 1;
    }
    starts.truncate(N_STARTS);
    starts
}

struct Eval {
    v: Vec<f64>,
    weights: WeightSolution,
    mspe: f64,
}

fn evaluate(problem: &SynthProblem, v: Vec<f64>, warm: Option<&DVector<f64>>) -> Result<Eval> {
    let weights = problem.solve_weights_from(&v, warm)?;
    let mspe = problem.pre_mspe(&weights.w);
    Ok(Eval { v, weights, mspe })
}

/// Compass search in softmax coordinates from one start.
fn local_search(problem: &SynthProblem, v0: &[f64]) -> Result<(Eval, usize)> {
    let k = v0.len();
    let mut theta: Vec<f64> = v0.iter().map(|v| v.ln()).collect();
    let mut best = evaluate(problem, softmax(&theta), None)?;
    let mut evals = 1;
    let mut step = STEP0;
    while step >= MIN_STEP && evals < MAX_EVALS && k > 1 {
        let mut improved = false;
        'dirs: for d in 0..k {
            for sign in [1.0, -1.0] {
                if evals >= MAX_EVALS {
                    break 'dirs;
                }
                let mut cand = theta.clone();
                cand[d] += sign * step;
                let e = evaluate(problem, softmax(&cand), Some(&best.weights.w))?;
                evals += 1;
                if e.mspe < best.mspe {
                    best = e;
                    theta = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best, evals))
}

/// Multi-start search for `V`. Starts run in parallel and are reduced in
/// start order (best MSPE, ties to the lower index), so the result is
/// deterministic. Equal weights are kept unless the search beats them by
/// more than `1e-10 * max(1, mspe_equal)`.
pub fn optimize_v(problem: &SynthProblem) -> Result<VSearch> {
    let k = problem.k();
    let starts = starting_points(k);
    let runs: Vec<Result<(Eval, usize)>> = starts
        .par_iter()
        .map(|s| local_search(problem, s))
        .collect();

    let equal = evaluate(problem, vec![1.0 / k as f64; k], None)?;
    let mut evaluations = 1;
    let mut best: Option<(usize, Eval)> = None;
    for (i, run) in runs.into_iter().enumerate() {
        let (e, n) = run?;
        evaluations += n;
        if best.as_ref().map_or(true, |(_, b)| e.mspe < b.mspe) {
            best = Some((i, e));
        }
    }
    let (idx, best) = best.expect("at least one start");
    let margin = 1e-10 * equal.mspe.max(1.0);
    if best.mspe < equal.mspe - margin {
        Ok(VSearch {
            v: best.v,
            weights: best.weights,
            mspe: best.mspe,
            mspe_equal: equal.mspe,
            fallback: false,
            start: Some(idx),
            evaluations,
        })
    } else {
        Ok(VSearch {
            v: equal.v,
            weights: equal.weights,
            mspe: equal.mspe,
            mspe_equal: equal.mspe,
            fallback: true,
            start: None,
            evaluations,
        })
    }
}
