//! Zero-mean Gaussian process regression with a squared exponential kernel
//! and per-dimension length scales. Responses are centered before fitting;
//! the constant shifts the predictive mean but not its gradient.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector};

const NUGGET_FLOOR_RATIO: f64 = 1e-8;
/// The nugget is a free hyperparameter (responses carry simulation noise);
/// the marginal likelihood decides how much to smooth. A ratio above 1
/// would mean the responses are pure noise.
const NUGGET_CEIL_RATIO: f64 = 1.0;
/// Rescue ceiling when the kernel matrix is not PD at the fitted nugget.
const NUGGET_ESCALATION_CEIL_RATIO: f64 = 1e-4;

/// SE-ARD kernel hyperparameters.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub signal_var: f64,
    pub length_scales: DVector<f64>,
    pub nugget: f64,
}

impl Kernel {
    fn eval(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let mut dist = 0.0;
        for k in 0..a.len() {
            let scaled = (a[k] - b[k]) / self.length_scales[k];
            dist += scaled * scaled;
        }
        self.signal_var * (-0.5 * dist).exp()
    }

    fn gram(&self, inputs: &[DVector<f64>]) -> DMatrix<f64> {
        let b = inputs.len();
        let mut k = DMatrix::zeros(b, b);
        for i in 0..b {
            for j in 0..=i {
                let v = self.eval(&inputs[i], &inputs[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] += self.nugget;
        }
        k
    }
}

/// A fitted GP: kernel hyperparameters plus the cached weight vector.
#[derive(Debug, Clone)]
pub struct GpFit {
    pub kernel: Kernel,
    inputs: Vec<DVector<f64>>,
    alpha: DVector<f64>,
    y_mean: f64,
    pub log_marginal: f64,
}

impl GpFit {
    /// Fit with fixed hyperparameters.
    pub fn with_kernel(inputs: Vec<DVector<f64>>, responses: &[f64], kernel: Kernel) -> Result<Self> {
        let b = inputs.len();
        if responses.len() != b {
            return Err(Error::DimensionMismatch {
                expected: b,
                got: responses.len(),
            });
        }
        let y_mean = responses.iter().sum::<f64>() / b as f64;
        let y = DVector::from_iterator(b, responses.iter().map(|v| v - y_mean));
        let gram = kernel.gram(&inputs);
        let chol = Cholesky::new(gram)
            .ok_or_else(|| Error::GpFit("kernel matrix not positive definite".into()))?;
        let alpha = chol.solve(&y);
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let log_marginal = -0.5 * y.dot(&alpha)
            - 0.5 * log_det
            - 0.5 * b as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(GpFit {
            kernel,
            inputs,
            alpha,
            y_mean,
            log_marginal,
        })
    }

    /// Fit hyperparameters by maximizing the log marginal likelihood with a
    /// Nelder-Mead search over log-transformed parameters. Length scales are
    /// initialized to the per-coordinate design standard deviation, the
    /// signal variance to the response variance, and the nugget ratio is
    /// bounded to [1e-8, 1e-4] of the signal variance.
    pub fn fit(inputs: Vec<DVector<f64>>, responses: &[f64]) -> Result<Self> {
        let b = inputs.len();
        if b < 3 {
            return Err(Error::GpFit(format!("need at least 3 training points, got {b}")));
        }
        let d = inputs[0].len();
        let y_mean = responses.iter().sum::<f64>() / b as f64;
        let y_var = responses
            .iter()
            .map(|v| (v - y_mean).powi(2))
            .sum::<f64>()
            / (b - 1) as f64;
        let y_var = y_var.max(1e-12);

        let mut init = Vec::with_capacity(d + 2);
        init.push(y_var.ln());
        for k in 0..d {
            let mean_k = inputs.iter().map(|x| x[k]).sum::<f64>() / b as f64;
            let sd_k = (inputs
                .iter()
                .map(|x| (x[k] - mean_k).powi(2))
                .sum::<f64>()
                / (b - 1) as f64)
                .sqrt()
                .max(1e-12);
            init.push(sd_k.ln());
        }
        // initialize the nugget ratio from a nearest-neighbour estimate of
        // the response noise; half the mean squared difference between a
        // response and its nearest design neighbour estimates the noise
        // variance (plus a small signal term)
        let mut nn_sq = 0.0;
        for i in 0..b {
            let mut best = f64::INFINITY;
            let mut diff = 0.0;
            for j in 0..b {
                if j == i {
                    continue;
                }
                let dist = (&inputs[i] - &inputs[j]).norm_squared();
                if dist < best {
                    best = dist;
                    diff = responses[i] - responses[j];
                }
            }
            nn_sq += diff * diff;
        }
        let noise_ratio = (0.5 * nn_sq / b as f64 / y_var)
            .clamp(NUGGET_FLOOR_RATIO, NUGGET_CEIL_RATIO);
        init.push(noise_ratio.ln());

        let objective = |z: &[f64]| -> f64 {
            match kernel_from_params(z, d) {
                Some(kernel) => match Self::with_kernel(inputs.clone(), responses, kernel) {
                    Ok(fit) => -fit.log_marginal,
                    Err(_) => f64::INFINITY,
                },
                None => f64::INFINITY,
            }
        };
        let best = nelder_mead(&objective, &init, 0.3, 45 * (d + 2));
        let kernel = kernel_from_params(&best, d)
            .ok_or_else(|| Error::GpFit("hyperparameter search diverged".into()))?;
        match Self::with_kernel(inputs.clone(), responses, kernel) {
            Ok(fit) => Ok(fit),
            Err(_) => {
                // escalate the nugget before giving up
                let mut z = best;
                let last = z.len() - 1;
                while z[last] < NUGGET_ESCALATION_CEIL_RATIO.ln() {
                    z[last] += 10f64.ln();
                    if let Some(kernel) = kernel_from_params(&z, d) {
                        if let Ok(fit) = Self::with_kernel(inputs.clone(), responses, kernel) {
                            return Ok(fit);
                        }
                    }
                }
                Err(Error::GpFit(
                    "kernel matrix not positive definite after nugget escalation".into(),
                ))
            }
        }
    }

    /// Predictive mean at a point.
    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        let mut acc = self.y_mean;
        for (input, a) in self.inputs.iter().zip(self.alpha.iter()) {
            acc += a * self.kernel.eval(x, input);
        }
        acc
    }

    /// Central finite-difference gradient of the predictive mean.
    pub fn gradient(&self, x: &DVector<f64>, steps: &DVector<f64>) -> DVector<f64> {
        let d = x.len();
        let mut grad = DVector::zeros(d);
        for k in 0..d {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[k] += steps[k];
            lo[k] -= steps[k];
            grad[k] = (self.predict(&hi) - self.predict(&lo)) / (2.0 * steps[k]);
        }
        grad
    }
}

fn kernel_from_params(z: &[f64], d: usize) -> Option<Kernel> {
    let signal_var = z[0].exp();
    if !signal_var.is_finite() || signal_var <= 0.0 {
        return None;
    }
    let length_scales = DVector::from_iterator(d, z[1..=d].iter().map(|l| l.exp()));
    if length_scales.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return None;
    }
    let ratio = z[d + 1].exp().clamp(NUGGET_FLOOR_RATIO, NUGGET_CEIL_RATIO);
    Some(Kernel {
        signal_var,
        length_scales,
        nugget: ratio * signal_var,
    })
}

/// Plain Nelder-Mead over an unconstrained parameterization.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    init: &[f64],
    spread: f64,
    max_evals: usize,
) -> Vec<f64> {
    let n = init.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(init.to_vec());
    for k in 0..n {
        let mut v = init.to_vec();
        v[k] += spread;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = values.len();

    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for k in 0..n {
                centroid[k] += simplex[i][k] / n as f64;
            }
        }

        let reflect: Vec<f64> = (0..n)
            .map(|k| centroid[k] + (centroid[k] - simplex[worst][k]))
            .collect();
        let fr = f(&reflect);
        evals += 1;

        if fr < values[best] {
            let expand: Vec<f64> = (0..n)
                .map(|k| centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]))
                .collect();
            let fe = f(&expand);
            evals += 1;
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|k| centroid[k] + 0.5 * (simplex[worst][k] - centroid[k]))
                .collect();
            let fc = f(&contract);
            evals += 1;
            if fc < values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                // shrink towards the best vertex
                let best_point = simplex[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    for k in 0..n {
                        simplex[i][k] = best_point[k] + 0.5 * (simplex[i][k] - best_point[k]);
                    }
                    values[i] = f(&simplex[i]);
                    evals += 1;
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    simplex[best].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhs::latin_hypercube;
    use crate::rng::RngStream;

    fn design_1d(b: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = RngStream::root(seed).rng();
        let lo = DVector::from_vec(vec![-1.0]);
        let hi = DVector::from_vec(vec![1.0]);
        let m = latin_hypercube(&lo, &hi, b, &mut rng).unwrap();
        (0..b).map(|i| m.row(i).transpose()).collect()
    }

    #[test]
    fn interpolates_with_tiny_nugget() {
        let inputs = design_1d(30, 41);
        let responses: Vec<f64> = inputs.iter().map(|x| (2.0 * x[0]).sin()).collect();
        let kernel = Kernel {
            signal_var: 1.0,
            length_scales: DVector::from_vec(vec![0.5]),
            nugget: 1e-10,
        };
        let fit = GpFit::with_kernel(inputs.clone(), &responses, kernel).unwrap();
        for (x, &y) in inputs.iter().zip(responses.iter()) {
            let pred = fit.predict(x);
            // 1e-5 leaves room for the conditioning of the dense 1d Gram
            // matrix at nugget 1e-10
            assert!(
                (pred - y).abs() <= 1e-5 * y.abs().max(1.0),
                "pred {pred}, y {y}"
            );
        }
    }

    #[test]
    fn linear_response_gradient() {
        // l(theta) = a^T theta + c is recovered by the smoothed mean
        let mut rng = RngStream::root(42).rng();
        let lo = DVector::from_vec(vec![-1.0, -1.0]);
        let hi = DVector::from_vec(vec![1.0, 1.0]);
        let m = latin_hypercube(&lo, &hi, 60, &mut rng).unwrap();
        let inputs: Vec<DVector<f64>> = (0..60).map(|i| m.row(i).transpose()).collect();
        let a = [3.0, -1.5];
        let responses: Vec<f64> = inputs
            .iter()
            .map(|x| a[0] * x[0] + a[1] * x[1] + 0.7)
            .collect();
        let fit = GpFit::fit(inputs, &responses).unwrap();
        let at = DVector::from_vec(vec![0.1, -0.2]);
        let steps = DVector::from_vec(vec![1e-4, 1e-4]);
        let grad = fit.gradient(&at, &steps);
        assert!((grad[0] - a[0]).abs() < 0.01 * a[0].abs(), "grad0 {}", grad[0]);
        assert!(
            (grad[1] - a[1]).abs() < 0.01 * a[1].abs(),
            "grad1 {}",
            grad[1]
        );
    }

    #[test]
    fn constant_response_zero_gradient() {
        let inputs = design_1d(25, 43);
        let responses = vec![5.0; 25];
        let fit = GpFit::fit(inputs, &responses).unwrap();
        let grad = fit.gradient(
            &DVector::from_vec(vec![0.0]),
            &DVector::from_vec(vec![1e-4]),
        );
        assert!(grad[0].abs() < 1e-6 * 5.0, "grad {}", grad[0]);
    }
}
