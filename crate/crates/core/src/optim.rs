//! Bounded derivative-free minimization (Nelder-Mead with clamped vertices).

use crate::error::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop when the simplex function-value spread drops below this.
    pub f_tol: f64,
    /// Stop when the simplex collapses below this relative size.
    pub x_tol: f64,
    /// Initial step per axis as a fraction of the bound range.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            f_tol: 1e-10,
            x_tol: 1e-4,
            initial_step: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

/// Minimize `f` over the box [lower, upper] starting from `x0`.
///
/// The starting simplex is deterministic: `x0` plus one orthogonal step per
/// axis. Standard reflection/expansion/contraction/shrink coefficients
/// (1, 2, 0.5, 0.5); every trial vertex is clamped into the box.
pub fn minimize_bounded<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 || lower.len() != n || upper.len() != n {
        return Err(CoreError::Domain("dimension mismatch in minimize".into()));
    }
    for i in 0..n {
        if !(lower[i] <= upper[i]) {
            return Err(CoreError::Domain(format!(
                "bounds must be ordered on axis {i}: [{}, {}]",
                lower[i], upper[i]
            )));
        }
    }
    // degenerate box: nothing to search
    if (0..n).all(|i| lower[i] == upper[i]) {
        let x = lower.to_vec();
        let value = f(&x);
        return Ok(Minimum {
            x,
            value,
            iterations: 0,
        });
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start, lower, upper);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        let range = upper[i] - lower[i];
        let step = if range > 0.0 {
            opts.initial_step * range
        } else {
            0.0
        };
        v[i] = if v[i] + step <= upper[i] {
            v[i] + step
        } else {
            v[i] - step
        };
        clamp(&mut v, lower, upper);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        // order best..worst
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = values[worst] - values[best];
        let size: f64 = (0..n)
            .map(|i| {
                let lo = simplex.iter().map(|v| v[i]).fold(f64::MAX, f64::min);
                let hi = simplex.iter().map(|v| v[i]).fold(f64::MIN, f64::max);
                let range = (upper[i] - lower[i]).max(f64::MIN_POSITIVE);
                (hi - lo) / range
            })
            .fold(0.0, f64::max);
        if spread <= opts.f_tol || size <= opts.x_tol {
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for (idx, v) in simplex.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }

        let make = |coef: f64| -> Vec<f64> {
            let mut v = vec![0.0; n];
            for i in 0..n {
                v[i] = centroid[i] + coef * (centroid[i] - simplex[worst][i]);
            }
            clamp(&mut v, lower, upper);
            v
        };

        let reflected = make(1.0);
        let f_reflected = f(&reflected);
        if f_reflected < values[best] {
            let expanded = make(2.0);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let contracted = make(-0.5);
            let f_contracted = f(&contracted);
            if f_contracted < values[worst] {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // shrink toward the best vertex
                let best_vertex = simplex[best].clone();
                for idx in 0..=n {
                    if idx == best {
                        continue;
                    }
                    for i in 0..n {
                        simplex[idx][i] = 0.5 * (simplex[idx][i] + best_vertex[i]);
                    }
                    values[idx] = f(&simplex[idx]);
                }
            }
        }
    }

    let best = (0..=n)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("simplex non-empty");
    Ok(Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
    })
}
