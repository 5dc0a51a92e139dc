//! Box-constrained Nelder-Mead simplex search.
//!
//! Trial points are projected onto the box, so every evaluated point is
//! feasible. The search stops once the spread of objective values over the
//! simplex drops below `ftol · (1 + |f_best|)` or the simplex collapses.

/// Simplex search settings.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iter: usize,
    pub ftol: f64,
    /// Edge length of the initial simplex along each axis.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            ftol: 1e-8,
            initial_step: 0.1,
        }
    }
}

/// Per-coordinate bounds; use infinities for unbounded coordinates.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    pub fn unit_cube(dim: usize) -> Self {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim])
    }

    fn project(&self, x: &mut [f64]) {
        for ((xi, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn minimize<F>(&self, mut objective: F, x0: &[f64], bounds: &Bounds) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let mut eval = |x: &[f64]| {
            let f = objective(x);
            if f.is_nan() {
                f64::INFINITY
            } else {
                f
            }
        };

        let mut start = x0.to_vec();
        bounds.project(&mut start);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f0 = eval(&start);
        simplex.push((start.clone(), f0));
        for i in 0..n {
            let mut v = start.clone();
            let step = self.initial_step * start[i].abs().max(1.0);
            v[i] = if v[i] + step <= bounds.upper[i] {
                v[i] + step
            } else {
                v[i] - step
            };
            bounds.project(&mut v);
            let f = eval(&v);
            simplex.push((v, f));
        }

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, worst) = (simplex[0].1, simplex[n].1);
            if worst - best <= self.ftol * (1.0 + best.abs()) || self.collapsed(&simplex) {
                converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (v, _) in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect();
                bounds.project(&mut p);
                p
            };

            let xr = along(-1.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            // shrink toward the best vertex
            let best_x = simplex[0].0.clone();
            for (v, f) in simplex.iter_mut().skip(1) {
                for (xi, bi) in v.iter_mut().zip(&best_x) {
                    *xi = bi + 0.5 * (*xi - bi);
                }
                bounds.project(v);
                *f = eval(v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, f) = simplex.swap_remove(0);
        Minimum {
            x,
            f,
            iterations,
            converged,
        }
    }

    fn collapsed(&self, simplex: &[(Vec<f64>, f64)]) -> bool {
        let best = &simplex[0].0;
        simplex[1..].iter().all(|(v, _)| {
            v.iter()
                .zip(best)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let nm = NelderMead {
            max_iter: 5000,
            ftol: 1e-14,
            initial_step: 0.5,
        };
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nm.minimize(rosen, &[-1.2, 1.0], &Bounds::unbounded(2));
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn respects_bounds() {
        let nm = NelderMead::default();
        // unconstrained minimum at (2, -1); the box pins it to (1, 0)
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2);
        let m = nm.minimize(f, &[0.5, 0.5], &Bounds::unit_cube(2));
        assert!(m.converged);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-4 && m.x[1].abs() < 1e-4,
            "{:?}",
            m.x
        );
        assert!(m.x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn reports_exhausted_budget() {
        let nm = NelderMead {
            max_iter: 3,
            ftol: 0.0,
            initial_step: 0.1,
        };
        let m = nm.minimize(
            |x| x[0] * x[0] + x[1] * x[1],
            &[5.0, 5.0],
            &Bounds::unbounded(2),
        );
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }

    #[test]
    fn nan_objective_is_avoided() {
        let nm = NelderMead::default();
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 0.5).powi(2)
            }
        };
        let m = nm.minimize(f, &[0.2], &Bounds::unbounded(1));
        assert!((m.x[0] - 0.5).abs() < 1e-3);
    }
}
