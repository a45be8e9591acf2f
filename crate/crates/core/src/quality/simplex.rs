//! Nelder-Mead simplex search in two dimensions.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop once `f_worst - f_best <= ftol * max(|f_best|, 1e-12)` ...
    pub ftol: f64,
    /// ... and every vertex lies within `xtol` of the best one.
    pub xtol: f64,
    pub max_evals: usize,
    /// Edge length of the initial right-angled simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            ftol: 1e-4,
            xtol: 1e-4,
            max_evals: 400,
            initial_step: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexResult {
    pub x: [f64; 2],
    pub f: f64,
    /// Objective at the starting point.
    pub f_start: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0`. The returned point is never worse than `x0`.
pub fn nelder_mead<E, F>(mut f: F, x0: [f64; 2], opts: &SimplexOptions) -> Result<SimplexResult, E>
where
    F: FnMut([f64; 2]) -> Result<f64, E>,
{
    let mut evals = 0;
    let mut eval = |x: [f64; 2], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let f_start = eval(x0, &mut evals)?;
    let mut simplex = [
        (x0, f_start),
        ([x0[0] + opts.initial_step, x0[1]], 0.0),
        ([x0[0], x0[1] + opts.initial_step], 0.0),
    ];
    for v in simplex.iter_mut().skip(1) {
        v.1 = eval(v.0, &mut evals)?;
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0], simplex[2]);
        let spread = worst.1 - best.1;
        let size = simplex[1..]
            .iter()
            .map(|v| (v.0[0] - best.0[0]).hypot(v.0[1] - best.0[1]))
            .fold(0.0, f64::max);
        if spread <= opts.ftol * best.1.abs().max(1e-12) && size <= opts.xtol {
            converged = true;
            break;
        }
        if evals >= opts.max_evals {
            break;
        }

        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (worst.0[0] - centroid[0]),
                centroid[1] + t * (worst.0[1] - centroid[1]),
            ]
        };

        let xr = along(-1.0);
        let fr = eval(xr, &mut evals)?;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(xe, &mut evals)?;
            simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[1].1 {
            simplex[2] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(-0.5);
            (xc, eval(xc, &mut evals)?)
        } else {
            let xc = along(0.5);
            (xc, eval(xc, &mut evals)?)
        };
        if fc < worst.1.min(fr) {
            simplex[2] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0;
        for v in simplex.iter_mut().skip(1) {
            v.0 = [
                anchor[0] + 0.5 * (v.0[0] - anchor[0]),
                anchor[1] + 0.5 * (v.0[1] - anchor[1]),
            ];
            v.1 = eval(v.0, &mut evals)?;
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(SimplexResult {
        x: simplex[0].0,
        f: simplex[0].1,
        f_start,
        evaluations: evals,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn finds_the_rosenbrock_minimum() {
        let opts = SimplexOptions {
            ftol: 1e-12,
            xtol: 1e-8,
            max_evals: 5000,
            initial_step: 0.5,
        };
        let r = nelder_mead(
            |x| Ok::<_, Infallible>((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)),
            [-1.2, 1.0],
            &opts,
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn never_returns_worse_than_the_start() {
        let r = nelder_mead(
            |x| Ok::<_, Infallible>((x[0] * 3.0).sin() + (x[1] * 2.0).cos()),
            [0.3, 0.2],
            &SimplexOptions::default(),
        )
        .unwrap();
        assert!(r.f <= r.f_start);
    }

    #[test]
    fn propagates_objective_errors() {
        let r = nelder_mead(
            |x| if x[0] > 0.5 { Err("boom") } else { Ok(-x[0]) },
            [0.0, 0.0],
            &SimplexOptions::default(),
        );
        assert_eq!(r.unwrap_err(), "boom");
    }
}
