//! Derivative-free simplex minimization in two variables.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Edge length of the initial simplex around the start point.
    pub initial_step: f64,
    /// Stop once every vertex lies within this distance of the best one.
    pub x_tol: f64,
    /// Stop as soon as the best value drops to or below this.
    pub f_target: f64,
    pub max_evals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOutcome {
    pub x: [f64; 2],
    pub f: f64,
    pub evals: usize,
    /// `true` if stopped by `x_tol` or `f_target`, `false` on `max_evals`.
    pub converged: bool,
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2).
pub fn nelder_mead<F: FnMut([f64; 2]) -> f64>(mut f: F, x0: [f64; 2], opts: SimplexOptions) -> SimplexOutcome {
    let mut evals = 0usize;
    let mut eval = |x: [f64; 2], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };

    let h = opts.initial_step;
    let mut pts = [x0, [x0[0] + h, x0[1]], [x0[0], x0[1] + h]];
    let mut vals = [0.0; 3];
    for i in 0..3 {
        vals[i] = eval(pts[i], &mut evals);
    }

    loop {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);

        let spread = pts[1..]
            .iter()
            .map(|p| (p[0] - pts[0][0]).hypot(p[1] - pts[0][1]))
            .fold(0.0, f64::max);
        if vals[0] <= opts.f_target || spread < opts.x_tol {
            return SimplexOutcome { x: pts[0], f: vals[0], evals, converged: true };
        }
        if evals >= opts.max_evals {
            return SimplexOutcome { x: pts[0], f: vals[0], evals, converged: false };
        }

        let centroid = lerp(pts[0], pts[1], 0.5);
        let reflected = lerp(pts[2], centroid, 2.0);
        let fr = eval(reflected, &mut evals);
        if fr < vals[0] {
            let expanded = lerp(pts[2], centroid, 3.0);
            let fe = eval(expanded, &mut evals);
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
            continue;
        }
        if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[2] {
            let p = lerp(centroid, reflected, 0.5);
            (p, eval(p, &mut evals))
        } else {
            let p = lerp(centroid, pts[2], 0.5);
            (p, eval(p, &mut evals))
        };
        if fc < vals[2].min(fr) {
            pts[2] = contracted;
            vals[2] = fc;
            continue;
        }
        for i in 1..3 {
            pts[i] = lerp(pts[0], pts[i], 0.5);
            vals[i] = eval(pts[i], &mut evals);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SimplexOptions {
        SimplexOptions { initial_step: 0.1, x_tol: 1e-12, f_target: f64::NEG_INFINITY, max_evals: 10_000 }
    }

    #[test]
    fn quadratic_bowl() {
        let out = nelder_mead(|x| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2), [0.0, 0.0], opts());
        assert!(out.converged);
        assert!((out.x[0] - 1.5).abs() < 1e-6 && (out.x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn cone_minimum_is_sharp() {
        // |x - x0| has a non-smooth minimum, like sigma_min at a simple pole.
        let out = nelder_mead(|x| (x[0] - 0.3).hypot(x[1] + 0.7), [2.0, 1.0], opts());
        assert!(out.converged);
        assert!((out.x[0] - 0.3).abs() < 1e-11 && (out.x[1] + 0.7).abs() < 1e-11);
    }

    #[test]
    fn rosenbrock() {
        let out = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            [-1.2, 1.0],
            SimplexOptions { initial_step: 0.5, ..opts() },
        );
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn respects_budget_and_target() {
        let out = nelder_mead(|x| x[0].abs() + x[1].abs(), [5.0, 5.0], SimplexOptions { max_evals: 10, ..opts() });
        assert!(!out.converged);
        assert!(out.evals >= 10);
        let out = nelder_mead(|x| x[0].abs(), [5.0, 0.0], SimplexOptions { f_target: 1.0, ..opts() });
        assert!(out.converged && out.f <= 1.0);
    }
}
