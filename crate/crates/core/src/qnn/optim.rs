//! Optimizers for circuit angles.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::TrainingConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub loss: f64,
    pub thetas: Vec<f64>,
}

/// Every evaluated point, in order. Entry 0 is the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub entries: Vec<TraceEntry>,
    pub best_loss: f64,
    pub best_thetas: Vec<f64>,
}

impl TrainingTrace {
    fn start(thetas: &[f64], loss: f64) -> Self {
        Self {
            entries: vec![TraceEntry {
                iteration: 0,
                loss,
                thetas: thetas.to_vec(),
            }],
            best_loss: loss,
            best_thetas: thetas.to_vec(),
        }
    }

    fn push(&mut self, thetas: &[f64], loss: f64) {
        self.entries.push(TraceEntry {
            iteration: self.entries.len(),
            loss,
            thetas: thetas.to_vec(),
        });
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_thetas = thetas.to_vec();
        }
    }

    pub fn initial_loss(&self) -> f64 {
        self.entries[0].loss
    }

    pub fn evaluations(&self) -> usize {
        self.entries.len()
    }

    pub fn csv_header(&self) -> Vec<String> {
        let d = self.best_thetas.len();
        ["iteration".to_string(), "loss".to_string()]
            .into_iter()
            .chain((0..d).map(|k| format!("theta_{k}")))
            .collect()
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.entries
            .iter()
            .map(|e| {
                [e.iteration.to_string(), e.loss.to_string()]
                    .into_iter()
                    .chain(e.thetas.iter().map(f64::to_string))
                    .collect()
            })
            .collect()
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("objective"))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

struct Budget<'a, F> {
    objective: F,
    trace: &'a mut TrainingTrace,
    left: usize,
}

impl<F: FnMut(&[f64]) -> f64> Budget<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.left == 0 {
            return Ok(None);
        }
        self.left -= 1;
        let f = finite((self.objective)(x))?;
        self.trace.push(x, f);
        Ok(Some(f))
    }
}

/// Derivative-free minimization with linear models on a simplex of `d + 1`
/// points and a shrinking trust radius.
///
/// Each iteration is one objective evaluation. The radius starts at
/// `config.rho_begin` and halves whenever a model step fails to improve the
/// best point; the search stops once it falls below `config.rho_end` or
/// `config.max_iterations` evaluations beyond the initial one have been spent.
pub fn optimize_derivative_free<F>(
    mut objective: F,
    initial: &[f64],
    config: &TrainingConfig,
) -> Result<TrainingTrace>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    if initial.is_empty() {
        return Err(Error::Empty("parameter vector"));
    }
    let d = initial.len();
    let f0 = finite(objective(initial))?;
    let mut trace = TrainingTrace::start(initial, f0);
    let mut b = Budget {
        objective,
        trace: &mut trace,
        left: config.max_iterations,
    };
    let mut rho = config.rho_begin;
    let mut pts: Vec<Vec<f64>> = vec![initial.to_vec()];
    let mut vals = vec![f0];

    // initial simplex along the coordinate axes
    for k in 0..d {
        let mut x = initial.to_vec();
        x[k] += rho;
        match b.eval(&x)? {
            Some(f) => {
                pts.push(x);
                vals.push(f);
            }
            None => return Ok(trace),
        }
    }

    while rho >= config.rho_end {
        let best = argmin(&vals);
        let xb = pts[best].clone();
        let fb = vals[best];

        // pull far-away vertices back inside the trust region
        if let Some(far) = (0..pts.len())
            .filter(|&j| j != best)
            .max_by(|&i, &j| dist(&pts[i], &xb).total_cmp(&dist(&pts[j], &xb)))
            .filter(|&j| dist(&pts[j], &xb) > 2.0 * rho)
        {
            let x = toward(&xb, &pts[far], rho);
            match b.eval(&x)? {
                Some(f) => {
                    pts[far] = x;
                    vals[far] = f;
                    continue;
                }
                None => break,
            }
        }

        let Some(g) = linear_model(&pts, &vals, best) else {
            // degenerate simplex: rebuild it around the best point
            let mut rebuilt = vec![xb.clone()];
            let mut rvals = vec![fb];
            for k in 0..d {
                let mut x = xb.clone();
                x[k] += rho;
                match b.eval(&x)? {
                    Some(f) => {
                        rebuilt.push(x);
                        rvals.push(f);
                    }
                    None => return Ok(trace),
                }
            }
            pts = rebuilt;
            vals = rvals;
            continue;
        };
        let gnorm = g.norm();
        if gnorm <= f64::EPSILON * (1.0 + fb.abs()) {
            rho /= 2.0;
            continue;
        }
        let x: Vec<f64> = xb
            .iter()
            .zip(g.iter())
            .map(|(xi, gi)| xi - rho * gi / gnorm)
            .collect();
        let Some(f) = b.eval(&x)? else { break };
        let worst = argmax(&vals);
        if f < fb {
            pts[worst] = x;
            vals[worst] = f;
        } else {
            if f < vals[worst] {
                pts[worst] = x;
                vals[worst] = f;
            }
            rho /= 2.0;
        }
    }
    Ok(trace)
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len())
        .min_by(|&i, &j| v[i].total_cmp(&v[j]))
        .unwrap_or(0)
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len())
        .max_by(|&i, &j| v[i].total_cmp(&v[j]))
        .unwrap_or(0)
}

fn toward(from: &[f64], to: &[f64], rho: f64) -> Vec<f64> {
    let n = dist(from, to);
    from.iter()
        .zip(to)
        .map(|(a, b)| a + rho * (b - a) / n)
        .collect()
}

/// Gradient of the linear interpolant through the simplex, anchored at `best`.
fn linear_model(pts: &[Vec<f64>], vals: &[f64], best: usize) -> Option<DVector<f64>> {
    let d = pts[0].len();
    let rows: Vec<usize> = (0..pts.len()).filter(|&j| j != best).collect();
    let a = DMatrix::from_fn(d, d, |r, c| pts[rows[r]][c] - pts[best][c]);
    let rhs = DVector::from_fn(d, |r, _| vals[rows[r]] - vals[best]);
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin / smax < 1e-8 {
        return None;
    }
    a.lu().solve(&rhs)
}

/// `(r(t + pi/2) - r(t - pi/2)) / 2` for each coordinate, for every residual.
///
/// Exact for residuals that are expectation values of circuits in which each
/// angle enters through a single `exp(-i t P / 2)` rotation.
pub fn parameter_shift_jacobian<F>(residuals: &mut F, thetas: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let shift = std::f64::consts::FRAC_PI_2;
    let mut jac = Vec::with_capacity(thetas.len());
    for k in 0..thetas.len() {
        let mut plus = thetas.to_vec();
        let mut minus = thetas.to_vec();
        plus[k] += shift;
        minus[k] -= shift;
        let rp = residuals(&plus);
        let rm = residuals(&minus);
        let col: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / 2.0).collect();
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        jac.push(col);
    }
    Ok(jac)
}

/// Gradient of `mean(r^2)` from the residual Jacobian.
pub fn mse_gradient<F>(residuals: &mut F, thetas: &[f64]) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let r = residuals(thetas);
    if r.is_empty() {
        return Err(Error::Empty("residual vector"));
    }
    let n = r.len() as f64;
    let loss = finite(r.iter().map(|v| v * v).sum::<f64>() / n)?;
    let jac = parameter_shift_jacobian(residuals, thetas)?;
    let grad = jac
        .iter()
        .map(|col| 2.0 * col.iter().zip(&r).map(|(d, v)| d * v).sum::<f64>() / n)
        .collect();
    Ok((loss, grad))
}

/// Plain gradient descent `theta <- theta - eta * grad` on `mean(r^2)`.
///
/// Entry `k` of the trace holds the loss after `k` updates.
pub fn optimize_gradient<F>(
    mut residuals: F,
    initial: &[f64],
    config: &TrainingConfig,
) -> Result<TrainingTrace>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    config.validate()?;
    if initial.is_empty() {
        return Err(Error::Empty("parameter vector"));
    }
    let mut theta = initial.to_vec();
    let (loss, mut grad) = mse_gradient(&mut residuals, &theta)?;
    let mut trace = TrainingTrace::start(&theta, loss);
    for step in 1..=config.max_iterations {
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= config.learning_rate * g;
        }
        if step == config.max_iterations {
            let r = residuals(&theta);
            let loss = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
            trace.push(&theta, finite(loss)?);
        } else {
            let (loss, g) = mse_gradient(&mut residuals, &theta)?;
            trace.push(&theta, loss);
            grad = g;
        }
    }
    Ok(trace)
}
