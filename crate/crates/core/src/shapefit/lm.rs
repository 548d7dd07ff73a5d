//! Damped Gauss–Newton (Levenberg–Marquardt) on a residual vector with a
//! forward-difference Jacobian.

use nalgebra::{DMatrix, DVector};

pub(crate) struct LmSettings {
    pub max_evals: usize,
    pub step_tol: f64,
}

pub(crate) struct LmOutcome {
    pub params: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `‖r(p)‖²` from `start`. `residuals` returns `None` where the
/// parameters are inadmissible; such trial steps are rejected like uphill
/// ones. `start` must be admissible.
pub(crate) fn minimize(
    start: Vec<f64>,
    mut residuals: impl FnMut(&[f64]) -> Option<Vec<f64>>,
    settings: &LmSettings,
) -> Option<LmOutcome> {
    let sq = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut p = start;
    let mut r = residuals(&p)?;
    let mut value = sq(&r);
    let mut evals = 1;
    let n = p.len();
    let mut mu = 1e-3;
    let mut converged = false;

    'outer: while evals + n < settings.max_evals {
        // Jacobian by forward differences.
        let mut jac = DMatrix::<f64>::zeros(r.len(), n);
        for k in 0..n {
            let step = 1e-7 * (1.0 + p[k].abs());
            let mut q = p.clone();
            q[k] += step;
            evals += 1;
            let rk = match residuals(&q) {
                Some(v) => v,
                None => {
                    q[k] = p[k] - step;
                    evals += 1;
                    match residuals(&q) {
                        Some(v) => {
                            for (i, (a, b)) in r.iter().zip(&v).enumerate() {
                                jac[(i, k)] = (a - b) / step;
                            }
                            continue;
                        }
                        None => continue,
                    }
                }
            };
            for (i, (a, b)) in rk.iter().zip(&r).enumerate() {
                jac[(i, k)] = (a - b) / step;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * rv;
        if grad.amax() == 0.0 {
            converged = true;
            break;
        }
        loop {
            if evals >= settings.max_evals {
                break 'outer;
            }
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += mu * (jtj[(k, k)] + 1e-12);
            }
            let delta = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => match a.lu().solve(&(-&grad)) {
                    Some(d) => d,
                    None => {
                        mu *= 10.0;
                        continue;
                    }
                },
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(x, d)| x + d).collect();
            evals += 1;
            let accepted = residuals(&trial)
                .filter(|rt| rt.iter().all(|v| v.is_finite()))
                .map(|rt| (sq(&rt), rt))
                .filter(|(v, _)| *v < value);
            let step_norm = delta.norm();
            let scale = 1.0 + p.iter().map(|x| x * x).sum::<f64>().sqrt();
            match accepted {
                Some((v, rt)) => {
                    let gain = value - v;
                    p = trial;
                    r = rt;
                    value = v;
                    mu = (mu / 3.0).max(1e-12);
                    if step_norm <= settings.step_tol * scale || gain <= 1e-15 * value.max(1e-300) {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
                None => {
                    mu *= 4.0;
                    if mu > 1e12 || step_norm <= settings.step_tol * scale {
                        converged = true;
                        break 'outer;
                    }
                }
            }
        }
    }
    Some(LmOutcome {
        params: p,
        value,
        evals,
        converged,
    })
}
