//! Muscle-synergy extraction by non-negative matrix factorization.
//!
//! Training minimizes ‖V − WH‖²_F with Lee–Seung multiplicative updates and
//! returns a unit-column base matrix W; activation features for new RMS
//! vectors come from non-negative least squares against the fixed base.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of synergies in the base matrix.
pub const N_SYNERGIES: usize = 5;
/// Relative-decrease stopping threshold for the multiplicative updates.
pub const NMF_TOL: f64 = 1e-6;
/// Iteration cap for the multiplicative updates.
pub const NMF_MAX_ITER: usize = 500;
/// Denominator floor guarding the update rules against division by zero.
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub final_objective: f64,
    pub iterations: usize,
    /// ‖V − WH‖²_F before the first update and after each iteration;
    /// non-increasing by construction of the multiplicative updates.
    pub objective_trace: Vec<f64>,
}

/// Fitted synergy base: non-negative, unit-Euclidean-norm columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfModel {
    pub base: Array2<f64>,
    pub n_synergies: usize,
    pub fit_stats: FitStats,
}

fn frob_sq(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Factorizes the non-negative matrix `v` (channels x windows) into
/// `n_synergies` components. The objective is non-increasing across
/// iterations; with a fixed seed the result is bit-deterministic.
pub fn nmf_fit(
    v: &Array2<f64>,
    n_synergies: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<NmfModel> {
    if let Some(bad) = v.iter().find(|x| **x < 0.0 || !x.is_finite()) {
        return Err(Error::Domain(format!("NMF input must be non-negative and finite, got {bad}")));
    }
    let (n_ch, n_t) = v.dim();
    if n_t < n_synergies {
        return Err(Error::InsufficientData(format!(
            "NMF needs at least {n_synergies} windows, got {n_t}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array2::from_shape_fn((n_ch, n_synergies), |_| rng.random_range(0.1..1.1));
    let mut h = Array2::from_shape_fn((n_synergies, n_t), |_| rng.random_range(0.1..1.1));

    let mut objective = frob_sq(&(v - &w.dot(&h)));
    let mut trace = Vec::with_capacity(max_iter + 1);
    trace.push(objective);
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        // H ← H ∘ (WᵀV) / (WᵀWH)
        let wt_v = w.t().dot(v);
        let wt_w_h = w.t().dot(&w).dot(&h);
        ndarray::Zip::from(&mut h).and(&wt_v).and(&wt_w_h).for_each(|h_ij, &num, &den| {
            *h_ij *= num / den.max(EPS);
        });
        // W ← W ∘ (VHᵀ) / (WHHᵀ)
        let v_ht = v.dot(&h.t());
        let w_h_ht = w.dot(&h.dot(&h.t()));
        ndarray::Zip::from(&mut w).and(&v_ht).and(&w_h_ht).for_each(|w_ij, &num, &den| {
            *w_ij *= num / den.max(EPS);
        });

        let next = frob_sq(&(v - &w.dot(&h)));
        debug_assert!(
            next <= objective + 1e-10 * objective.max(1.0),
            "objective increased: {objective} -> {next}"
        );
        let rel_decrease = (objective - next) / objective.max(EPS);
        objective = next;
        trace.push(objective);
        if rel_decrease < tol {
            break;
        }
    }

    // Unit-norm columns; the compensating row scale would fold into H, which
    // is not retained past fitting.
    for mut col in w.axis_iter_mut(Axis(1)) {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < EPS {
            return Err(Error::Numerical(
                "NMF produced an all-zero synergy column".into(),
            ));
        }
        col.mapv_inplace(|v| v / norm);
    }

    Ok(NmfModel {
        base: w,
        n_synergies,
        fit_stats: FitStats {
            final_objective: objective,
            iterations,
            objective_trace: trace,
        },
    })
}

/// Lawson–Hanson active-set non-negative least squares:
/// h = argmin_{h ≥ 0} ‖rms − W h‖².
pub fn nmf_transform(model: &NmfModel, rms: &Array1<f64>) -> Result<Array1<f64>> {
    if rms.len() != model.base.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "RMS vector has {} entries, base expects {}",
            rms.len(),
            model.base.nrows()
        )));
    }
    if let Some(bad) = rms.iter().find(|x| **x < 0.0 || !x.is_finite()) {
        return Err(Error::Domain(format!("RMS entries must be non-negative, got {bad}")));
    }
    nnls(&model.base, rms)
}

/// Solves min_{x ≥ 0} ‖b − Ax‖² by the Lawson–Hanson active-set method.
pub(crate) fn nnls(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.ncols();
    let mut passive = vec![false; n];
    let mut x = Array1::<f64>::zeros(n);
    let tol = 1e-10 * (1.0 + b.iter().map(|v| v * v).sum::<f64>().sqrt());

    for _outer in 0..(30 * n.max(1)) {
        // Gradient of ½‖b − Ax‖² is −Aᵀ(b − Ax); w = Aᵀ(b − Ax).
        let resid = b - &a.dot(&x);
        let w = a.t().dot(&resid);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).expect("finite gradient"));
        let Some(j_star) = candidate else { break };
        if w[j_star] <= tol {
            break;
        }
        passive[j_star] = true;

        // Inner loop: solve the unconstrained LS on the passive set and pull
        // any negative coordinates back to the boundary.
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z = ls_on_subset(a, b, &idx)?;
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            // Smallest step α keeping x + α(z − x) feasible.
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    let step = x[j] / (x[j] - z[k]);
                    if step < alpha {
                        alpha = step;
                    }
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Ok(x)
}

/// Unconstrained least squares restricted to the columns in `idx`, via normal
/// equations with Cholesky (the passive sets here are tiny and well scaled).
fn ls_on_subset(a: &Array2<f64>, b: &Array1<f64>, idx: &[usize]) -> Result<Array1<f64>> {
    let k = idx.len();
    let mut ata = Array2::<f64>::zeros((k, k));
    let mut atb = Array1::<f64>::zeros(k);
    for (p, &jp) in idx.iter().enumerate() {
        let col_p = a.column(jp);
        atb[p] = col_p.dot(b);
        for (q, &jq) in idx.iter().enumerate().take(p + 1) {
            let v = col_p.dot(&a.column(jq));
            ata[[p, q]] = v;
            ata[[q, p]] = v;
        }
    }
    // Ridge jitter keeps degenerate passive sets solvable; the active-set
    // loop only needs the sign pattern to make progress.
    for d in 0..k {
        ata[[d, d]] += 1e-12;
    }
    let l = crate::linalg::cholesky(&ata)?;
    let y = crate::linalg::solve_lower(&l, &atb);
    Ok(crate::linalg::solve_lower_transpose(&l, &y))
}
