//! Adaptive composite Gauss–Legendre quadrature on finite intervals.
//!
//! Panels are bisected until the difference between a whole-panel estimate
//! and the sum of its two half-panel estimates meets the tolerance budget
//! allotted to that panel. Semi-infinite integrals are handled by the
//! callers, which pick a truncation point from the integrand's certified
//! exponential decay and add the analytic tail bound to the error budget.

/// 15-point Gauss–Legendre nodes on [−1, 1] (positive half; mirrored).
const GL_NODES: [f64; 8] = [
    0.0,
    0.2011940939974345,
    0.3941513470775634,
    0.5709721726085388,
    0.7244177313601700,
    0.8482065834104272,
    0.9372733924007059,
    0.9879925180204854,
];

/// Matching weights for [`GL_NODES`].
const GL_WEIGHTS: [f64; 8] = [
    0.2025782419255613,
    0.1984314853271116,
    0.1861610000155622,
    0.1662692058169939,
    0.1395706779261543,
    0.1071592204671719,
    0.0703660474881081,
    0.0307532419961173,
];

/// Quadrature tolerances; `rel_tol` applies against the running integral
/// magnitude, `abs_tol` is the floor.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_depth: 40,
        }
    }
}

/// Single 15-point Gauss–Legendre panel over [a, b].
fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = GL_WEIGHTS[0] * f(mid);
    for i in 1..8 {
        let dx = half * GL_NODES[i];
        sum += GL_WEIGHTS[i] * (f(mid + dx) + f(mid - dx));
    }
    sum * half
}

/// Adaptive integral of `f` over the finite interval [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = panel(&f, a, b);
    adaptive(&f, a, b, whole, cfg.abs_tol.max(cfg.rel_tol * whole.abs()), cfg.max_depth)
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let refined = left + right;
    if (refined - whole).abs() <= tol || depth == 0 {
        return refined;
    }
    adaptive(f, a, mid, left, 0.5 * tol, depth - 1)
        + adaptive(f, mid, b, right, 0.5 * tol, depth - 1)
}
