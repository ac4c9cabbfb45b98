//! Quasi-Newton minimization (BFGS with a strong-Wolfe line search) for
//! the initial-parameter fit. The objective supplies the cost and the
//! exact gradient in one call.

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Stop when the max-abs gradient component falls below this.
    pub grad_tol: f64,
    /// Stop as soon as the cost falls below this.
    pub cost_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            grad_tol: 1e-12,
            cost_tol: 0.0,
        }
    }
}

/// Result of a single BFGS run.
#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Minimize `f`, which returns `(cost, gradient)` for a point.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    let mut x = x0.to_vec();
    let (mut cost, mut grad) = eval(&x, &mut evaluations);
    // Inverse Hessian approximation, stored dense.
    let mut h_inv = vec![0.0; n * n];
    for i in 0..n {
        h_inv[i * n + i] = 1.0;
    }

    let mut iterations = 0usize;
    while iterations < opts.max_iters {
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm <= opts.grad_tol || cost <= opts.cost_tol {
            break;
        }
        iterations += 1;

        // d = -H·g
        let mut dir = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += h_inv[i * n + j] * grad[j];
            }
            dir[i] = -acc;
        }
        let mut slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if slope >= 0.0 {
            // Reset to steepest descent if the approximation degenerated.
            for i in 0..n {
                for j in 0..n {
                    h_inv[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
            for (d, g) in dir.iter_mut().zip(&grad) {
                *d = -g;
            }
            slope = -grad.iter().map(|g| g * g).sum::<f64>();
            if slope == 0.0 {
                break;
            }
        }

        let ls = match line_search(
            |alpha, evals| {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
                let (c, g) = eval(&trial, evals);
                let dslope: f64 = g.iter().zip(&dir).map(|(gi, di)| gi * di).sum();
                (trial, c, g, dslope)
            },
            cost,
            slope,
            &mut evaluations,
        ) {
            Some(ls) => ls,
            None => break, // no acceptable step; give up at the current point
        };

        let (x_new, cost_new, grad_new, alpha) = ls;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        if sy > 1e-12 * yy.sqrt() * s.iter().map(|v| v * v).sum::<f64>().sqrt() && sy > 0.0 {
            if iterations == 1 {
                let scale = sy / yy.max(f64::MIN_POSITIVE);
                for i in 0..n {
                    for j in 0..n {
                        h_inv[i * n + j] = if i == j { scale } else { 0.0 };
                    }
                }
            }
            bfgs_update(&mut h_inv, &s, &y, sy, n);
        }
        x = x_new;
        cost = cost_new;
        grad = grad_new;
        let _ = alpha;
    }

    BfgsOutcome {
        gradient_norm: grad.iter().fold(0.0f64, |m, g| m.max(g.abs())),
        x,
        cost,
        iterations,
        evaluations,
    }
}

/// H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    // hy = H·y, yhy = yᵀHy
    let mut hy = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += h[i * n + j] * y[j];
        }
        hy[i] = acc;
    }
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                + rho * rho * yhy * s[i] * s[j]
                + rho * s[i] * s[j];
        }
    }
}

type Probe<'a> = dyn FnMut(f64, &mut usize) -> (Vec<f64>, f64, Vec<f64>, f64) + 'a;

/// Strong-Wolfe line search (bracket then zoom). Returns the accepted
/// point, cost, gradient and step length.
fn line_search(
    mut probe: impl FnMut(f64, &mut usize) -> (Vec<f64>, f64, Vec<f64>, f64),
    f0: f64,
    slope0: f64,
    evaluations: &mut usize,
) -> Option<(Vec<f64>, f64, Vec<f64>, f64)> {
    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut alpha = 1.0;
    let mut lo_hi: Option<(f64, f64, f64)> = None; // (lo, f_lo, hi)

    for iter in 0..20 {
        let (x, fx, gx, dslope) = probe(alpha, evaluations);
        if fx > f0 + C1 * alpha * slope0 || (iter > 0 && fx >= f_prev) {
            lo_hi = Some((alpha_prev, f_prev, alpha));
            break;
        }
        if dslope.abs() <= -C2 * slope0 {
            return Some((x, fx, gx, alpha));
        }
        if dslope >= 0.0 {
            lo_hi = Some((alpha, fx, alpha_prev));
            break;
        }
        alpha_prev = alpha;
        f_prev = fx;
        alpha *= 2.0;
    }

    let (mut lo, mut f_lo, mut hi) = lo_hi?;
    zoom(&mut probe, f0, slope0, &mut lo, &mut f_lo, &mut hi, evaluations)
}

fn zoom(
    probe: &mut Probe<'_>,
    f0: f64,
    slope0: f64,
    lo: &mut f64,
    f_lo: &mut f64,
    hi: &mut f64,
    evaluations: &mut usize,
) -> Option<(Vec<f64>, f64, Vec<f64>, f64)> {
    for _ in 0..40 {
        let alpha = 0.5 * (*lo + *hi);
        let (x, fx, gx, dslope) = probe(alpha, evaluations);
        if fx > f0 + C1 * alpha * slope0 || fx >= *f_lo {
            *hi = alpha;
        } else {
            if dslope.abs() <= -C2 * slope0 {
                return Some((x, fx, gx, alpha));
            }
            if dslope * (*hi - *lo) >= 0.0 {
                *hi = *lo;
            }
            *lo = alpha;
            *f_lo = fx;
        }
        if (*hi - *lo).abs() < 1e-14 {
            // Interval collapsed; accept the sufficient-decrease point.
            if fx <= f0 + C1 * alpha * slope0 {
                return Some((x, fx, gx, alpha));
            }
            return None;
        }
    }
    None
}
