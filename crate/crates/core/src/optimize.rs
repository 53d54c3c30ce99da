//! Derivative-free minimization on the unit box and low-discrepancy start
//! points.

use std::cmp::Ordering;

/// Settings for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop when the spread of objective values across the simplex falls
    /// below this.
    pub tolerance: f64,
    pub max_evaluations: usize,
    /// Edge length of the initial simplex in box coordinates.
    pub initial_step: f64,
    /// Number of restarts from the incumbent after convergence; guards
    /// against premature collapse of the simplex.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_evaluations: 4000,
            initial_step: 0.1,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out before the tolerance was met.
    pub converged: bool,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

fn by_value(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)) -> Ordering {
    a.1.total_cmp(&b.1)
}

/// Minimize `f` over [0, 1]^d from `start`. Trial points are clamped onto the
/// box, so the objective is never evaluated outside it. NaN objective values
/// are treated as +∞.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], opts: NelderMeadOptions) -> Minimum {
    let d = start.len();
    let mut evaluations = 0usize;
    let eval = |x: &[f64], n: &mut usize| {
        *n += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best_x = start.to_vec();
    clamp_unit(&mut best_x);
    if d == 0 {
        let value = eval(&best_x, &mut evaluations);
        return Minimum {
            x: best_x,
            value,
            evaluations,
            converged: true,
        };
    }
    let mut best_f = eval(&best_x, &mut evaluations);
    let mut converged = false;

    for round in 0..=opts.restarts {
        let (x, fx, ok) = descend(&eval, &best_x, best_f, opts, &mut evaluations);
        let improved = best_f - fx;
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = ok;
        if !ok || (round > 0 && improved <= opts.tolerance) {
            break;
        }
    }
    Minimum {
        x: best_x,
        value: best_f,
        evaluations,
        converged,
    }
}

fn descend<E: Fn(&[f64], &mut usize) -> f64>(
    eval: &E,
    start: &[f64],
    f_start: f64,
    opts: NelderMeadOptions,
    evaluations: &mut usize,
) -> (Vec<f64>, f64, bool) {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let d = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), f_start));
    for i in 0..d {
        let mut v = start.to_vec();
        v[i] += if v[i] + opts.initial_step <= 1.0 {
            opts.initial_step
        } else {
            -opts.initial_step
        };
        let fv = eval(&v, evaluations);
        simplex.push((v, fv));
    }

    loop {
        simplex.sort_by(by_value);
        let f_best = simplex[0].1;
        let f_worst = simplex[d].1;
        let spread = if f_worst.is_finite() {
            f_worst - f_best
        } else {
            f64::INFINITY
        };
        let size = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if spread <= opts.tolerance || size <= 1e-14 {
            let (x, fx) = simplex.swap_remove(0);
            return (x, fx, true);
        }
        if *evaluations >= opts.max_evaluations {
            let (x, fx) = simplex.swap_remove(0);
            return (x, fx, false);
        }

        let mut centroid = vec![0.0; d];
        for (v, _) in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[d].0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp_unit(&mut p);
            p
        };

        let xr = along(REFLECT);
        let fr = eval(&xr, evaluations);
        if fr < f_best {
            let xe = along(EXPAND);
            let fe = eval(&xe, evaluations);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        // Outside contraction when the reflection beat the worst point,
        // inside contraction otherwise.
        let (xc, fc) = if fr < f_worst {
            let xc = along(CONTRACT * REFLECT);
            let fc = eval(&xc, evaluations);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&xc, evaluations);
            (xc, fc)
        };
        if fc < fr.min(f_worst) {
            simplex[d] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (v, fv) in simplex[1..].iter_mut() {
            for (x, a) in v.iter_mut().zip(&anchor) {
                *x = a + SHRINK * (*x - a);
            }
            *fv = eval(v, evaluations);
        }
    }
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    out
}

/// The `index`-th point (1-based indices skip the origin) of the Halton
/// sequence in `dim` dimensions. Prefixes of the sequence are nested, so
/// asking for more points never removes earlier ones.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    PRIMES[..dim]
        .iter()
        .map(|&p| radical_inverse(index, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        // Box [0,1]² mapped onto [-2,3]²; minimum (1,1) sits at x = (0.6, 0.6).
        let (u, v) = (5.0 * x[0] - 2.0, 5.0 * x[1] - 2.0);
        (1.0 - u).powi(2) + 100.0 * (v - u * u).powi(2)
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let m = nelder_mead(
            rosenbrock,
            &[0.1, 0.9],
            NelderMeadOptions {
                tolerance: 1e-14,
                max_evaluations: 20_000,
                ..Default::default()
            },
        );
        assert!(m.converged);
        assert!(m.value < 1e-9, "{m:?}");
        assert!((m.x[0] - 0.6).abs() < 1e-3 && (m.x[1] - 0.6).abs() < 1e-3);
    }

    #[test]
    fn respects_box() {
        // Unconstrained minimum is outside the box at x = -1.
        let m = nelder_mead(
            |x: &[f64]| (x[0] + 1.0).powi(2) + (x[1] - 0.3).powi(2),
            &[0.5, 0.5],
            NelderMeadOptions::default(),
        );
        assert!(m.x[0] >= 0.0 && m.x[0] < 1e-6);
        assert!((m.x[1] - 0.3).abs() < 1e-3);
    }

    #[test]
    fn budget_is_reported() {
        let m = nelder_mead(
            rosenbrock,
            &[0.1, 0.9],
            NelderMeadOptions {
                tolerance: 0.0,
                max_evaluations: 30,
                ..Default::default()
            },
        );
        assert!(!m.converged);
        assert!(m.evaluations <= 30 + 4);
    }

    #[test]
    fn nan_is_treated_as_infinite() {
        let m = nelder_mead(
            |x: &[f64]| {
                if x[0] > 0.6 {
                    f64::NAN
                } else {
                    (x[0] - 0.2).powi(2)
                }
            },
            &[0.5],
            NelderMeadOptions::default(),
        );
        assert!((m.x[0] - 0.2).abs() < 1e-3);
    }

    #[test]
    fn halton_values() {
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 2), vec![0.25, 2.0 / 3.0]);
        assert_eq!(halton(3, 1), vec![0.75]);
        let pts: Vec<Vec<f64>> = (1..200).map(|i| halton(i, 4)).collect();
        assert!(pts.iter().flatten().all(|&v| v > 0.0 && v < 1.0));
    }
}
