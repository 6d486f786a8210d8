//! Reference integrator: adaptive Dormand–Prince RK5(4) with PI step-size
//! control and 4th-order Hermite dense output. Everything else in the crate
//! is ultimately checked against trajectories produced here.

use thiserror::Error;

use crate::rhs::CoefficientTable;

/// Integrator tolerances and limits.
#[derive(Debug, Clone, Copy)]
pub struct OdeConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Solution-norm threshold treated as finite-time blow-up.
    pub blowup: f64,
    pub max_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            blowup: 1e6,
            max_steps: 2_000_000,
        }
    }
}

/// Integration failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("solution norm exceeded {limit:.1e} at t = {t} (finite-time blow-up)")]
    BlowUp { t: f64, limit: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("right-hand side returned a non-finite value at t = {t}")]
    NonFiniteRhs { t: f64 },
}

/// One accepted step retained for dense output: the interval, endpoint
/// states and endpoint derivatives feed a cubic (4th-order) Hermite model.
#[derive(Debug, Clone)]
struct DenseSegment {
    t0: f64,
    t1: f64,
    y0: Vec<f64>,
    y1: Vec<f64>,
    f0: Vec<f64>,
    f1: Vec<f64>,
}

/// Continuous trajectory of one integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    segments: Vec<DenseSegment>,
    pub t_start: f64,
    pub t_end: f64,
    pub dim: usize,
    /// Number of accepted steps.
    pub steps: usize,
}

impl Trajectory {
    /// Dense evaluation by cubic Hermite interpolation on the accepted step
    /// containing `t` (clamped to the integration range).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(self.t_start.min(self.t_end), self.t_start.max(self.t_end));
        // Binary search over segments ordered by t0.
        let mut lo = 0usize;
        let mut hi = self.segments.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if t > self.segments[mid].t1 {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let seg = &self.segments[lo];
        let h = seg.t1 - seg.t0;
        let x = ((t - seg.t0) / h).clamp(0.0, 1.0);
        let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
        let h10 = x * (1.0 - x) * (1.0 - x);
        let h01 = x * x * (3.0 - 2.0 * x);
        let h11 = x * x * (x - 1.0);
        (0..self.dim)
            .map(|i| {
                h00 * seg.y0[i]
                    + h10 * h * seg.f0[i]
                    + h01 * seg.y1[i]
                    + h11 * h * seg.f1[i]
            })
            .collect()
    }

    /// State at the final time.
    pub fn final_state(&self) -> Vec<f64> {
        self.segments.last().unwrap().y1.clone()
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
// 5th-order weights equal the last A row (FSAL); 4th-order embedded weights:
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate y′ = f(t, y) from `t0` to `t1` (t1 > t0).
pub fn integrate_ode<F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    cfg: &OdeConfig,
) -> Result<Trajectory, OdeError>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    assert!(t1 > t0, "forward integration only");
    let dim = y0.len();
    let norm = |y: &[f64], ynew: &[f64], err: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(ynew[i].abs());
            s += (err[i] / sc).powi(2);
        }
        (s / dim as f64).sqrt()
    };

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k0 = f(t, &y);
    if k0.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteRhs { t });
    }
    // Initial step: crude scale-based guess, refined by the controller.
    let ynorm = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-6);
    let fnorm = k0.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-6);
    let mut h = (0.01 * ynorm / fnorm).min(t1 - t0).max(1e-8);

    let mut segments = Vec::new();
    let mut steps = 0usize;
    let mut prev_err: f64 = 1.0; // PI controller memory
    let order = 5.0;

    while t < t1 {
        if steps >= cfg.max_steps {
            return Err(OdeError::TooManySteps { t });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t });
        }
        let h_step = h.min(t1 - t);
        let mut k = vec![k0.clone()];
        for stage in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..dim {
                        ys[i] += h_step * a * kj[i];
                    }
                }
            }
            let ts = t + C[stage] * h_step;
            let ks = f(ts, &ys);
            if ks.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFiniteRhs { t: ts });
            }
            k.push(ks);
        }
        // 5th-order solution is stage-6 input state (FSAL): reuse A[5] row.
        let mut y5 = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[5][j];
            if a != 0.0 {
                for i in 0..dim {
                    y5[i] += h_step * a * kj[i];
                }
            }
        }
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate().take(7) {
            let b = B4[j];
            if b != 0.0 {
                for i in 0..dim {
                    y4[i] += h_step * b * kj[i];
                }
            }
        }
        let err_vec: Vec<f64> = (0..dim).map(|i| y5[i] - y4[i]).collect();
        let err = norm(&y, &y5, &err_vec).max(1e-30);

        if err <= 1.0 {
            // Accept; k[6] = f(t+h, y5) is the FSAL derivative.
            segments.push(DenseSegment {
                t0: t,
                t1: t + h_step,
                y0: y.clone(),
                y1: y5.clone(),
                f0: k0.clone(),
                f1: k[6].clone(),
            });
            t += h_step;
            y = y5;
            k0 = k[6].clone();
            steps += 1;
            if y.iter().any(|v| v.abs() > cfg.blowup) {
                return Err(OdeError::BlowUp {
                    t,
                    limit: cfg.blowup,
                });
            }
            // PI controller (accepted branch).
            let fac = 0.9 * err.powf(-0.7 / order) * prev_err.powf(0.4 / order);
            h = h_step * fac.clamp(0.2, 5.0);
            prev_err = err;
        } else {
            h = h_step * (0.9 * err.powf(-1.0 / order)).clamp(0.1, 0.9);
        }
    }

    Ok(Trajectory {
        segments,
        t_start: t0,
        t_end: t1,
        dim,
        steps,
    })
}

/// Solve y⁗ + a₃y‴ + a₂y″ + a₁y′ + a₀y = r(t) as a first-order system in
/// (y, y′, y″, y‴).
pub fn integrate_linear4<R>(
    a: [f64; 4],
    r: R,
    t0: f64,
    t1: f64,
    y0: [f64; 4],
    cfg: &OdeConfig,
) -> Result<Trajectory, OdeError>
where
    R: Fn(f64) -> f64,
{
    integrate_ode(
        |t, y| {
            vec![
                y[1],
                y[2],
                y[3],
                r(t) - a[3] * y[3] - a[2] * y[2] - a[1] * y[1] - a[0] * y[0],
            ]
        },
        t0,
        t1,
        &y0,
        cfg,
    )
}

/// Solve z‴ + b₂z″ + b₁z′ + b₀z = ℙ(t, z, z′, z″) as a first-order system
/// in (z, z′, z″).
pub fn integrate_nonlinear3(
    b: [f64; 3],
    table: &CoefficientTable,
    t0: f64,
    t1: f64,
    z0: [f64; 3],
    cfg: &OdeConfig,
) -> Result<Trajectory, OdeError> {
    integrate_ode(
        |t, z| {
            let p = table
                .eval_rhs(t, z[0], z[1], z[2])
                .unwrap_or(f64::NAN);
            vec![z[1], z[2], p - b[2] * z[2] - b[1] * z[1] - b[0] * z[0]]
        },
        t0,
        t1,
        &z0,
        cfg,
    )
}

/// Sup over sample points of |z‴ + b₂z″ + b₁z′ + b₀z − ℙ| where z‴ is read
/// from the trajectory's own derivative chain (the last state component's
/// slope), i.e. the residual of a candidate (z, z′, z″) path against the
/// third-order equation.
pub fn residual_check<Z>(
    b: [f64; 3],
    table: &CoefficientTable,
    z: Z,
    ts: &[f64],
) -> f64
where
    Z: Fn(f64) -> [f64; 4], // (z, z′, z″, z‴)
{
    let mut worst = 0.0_f64;
    for &t in ts {
        let [z0, z1, z2, z3] = z(t);
        let p = table.eval_rhs(t, z0, z1, z2).unwrap_or(f64::NAN);
        let r = (z3 + b[2] * z2 + b[1] * z1 + b[0] * z0 - p).abs();
        worst = worst.max(r);
    }
    worst
}
