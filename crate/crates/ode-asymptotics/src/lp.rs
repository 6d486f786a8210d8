//! Windowed L^p norms and the Θ₁..Θ_m, Ψ decomposition of the fixed-point
//! solution: the kernel integral is split by coefficient level into
//! I₀..I₄, each level is split along Ω_α = λ_p·Ω_p + λ_c into an L^p part
//! and a constant part, the pieces are regrouped into H₁..H₄, and the
//! p-range table decides how many H's become Θ components.

use thiserror::Error;

use crate::expr::EvalError;
use crate::kernels::CharRoots;
use crate::rhs::{CoefficientTable, SplitPart};
use crate::solver::{GridFunction, KernelOperator};

/// Selects one derivative channel of a [`GridFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Z,
    Zp,
    Zpp,
}

/// Decomposition failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("p must exceed 1, got {0}")]
    BadP(f64),
    #[error("coefficient of level {level} lacks the λ_p/λ_c split required by the decomposition")]
    MissingSplit { level: u8 },
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// The component count m of the decomposition: ⌈p⌉ − 1 for p ∈ ]1, 4],
/// and 4 beyond (intervals left-open, right-closed, so p = 2 gives m = 1).
pub fn m_of_p(p: f64) -> Result<usize, LpError> {
    if !(p > 1.0) {
        return Err(LpError::BadP(p));
    }
    if p > 4.0 {
        Ok(4)
    } else {
        Ok(p.ceil() as usize - 1)
    }
}

/// (∫_{t₀}^{T} |f|^p ds)^{1/p} over one channel, by the grid's own
/// interval quadrature on the interpolated channel.
pub fn window_lp_norm(f: &GridFunction, channel: Channel, p: f64, t_end: f64) -> f64 {
    assert!(p >= 1.0, "window_lp_norm requires p >= 1");
    let t_end = t_end.min(f.t_end());
    let h = f.step();
    let pick = |t: f64| {
        let (z, zp, zpp) = f.eval(t);
        match channel {
            Channel::Z => z,
            Channel::Zp => zp,
            Channel::Zpp => zpp,
        }
    };
    // 3-point Gauss per grid interval on |f|^p.
    const X: [f64; 3] = [0.1127016653792583, 0.5, 0.8872983346207417];
    const W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let mut total = 0.0;
    let mut a = f.t_start();
    while a < t_end - 1e-15 * t_end.abs().max(1.0) {
        let b = (a + h).min(t_end);
        for m in 0..3 {
            total += W[m] * (b - a) * pick(a + (b - a) * X[m]).abs().powf(p);
        }
        a = b;
    }
    total.powf(1.0 / p)
}

/// The Θ/Ψ split of a solution, with bookkeeping of which pieces entered
/// which component.
#[derive(Debug, Clone)]
pub struct LpDecomposition {
    pub p: f64,
    pub m: usize,
    pub theta: Vec<GridFunction>,
    pub psi: GridFunction,
    /// One line per component, naming its I_{k,p}/I_{k,c} constituents.
    pub grouping: Vec<String>,
}

impl LpDecomposition {
    /// Σ Θ_k + Ψ, which must reconstruct the decomposed solution.
    pub fn reconstruction(&self) -> GridFunction {
        let mut acc = self.psi.clone();
        for th in &self.theta {
            acc = acc.plus(th);
        }
        acc
    }
}

/// Split the fixed-point solution z = T(z) = Σ_k I_k into Θ₁..Θ_m and Ψ.
///
/// I_k integrates the kernel against the level-k part of ℙ evaluated on z;
/// each I_k (k ≥ 1) splits along the coefficient splits into I_{k,p} +
/// I_{k,c}; the regrouping is H₁ = I₀ + I_{1,c}, H₂ = I_{1,p} + I_{2,c},
/// H₃ = I_{2,p} + I_{3,c}, H₄ = I_{3,p} + I_{4,c}, leaving I_{4,p}; then
/// Θ_k = H_k for k ≤ m and Ψ collects the rest.
pub fn decompose_solution(
    z: &GridFunction,
    table: &CoefficientTable,
    roots: &CharRoots<f64>,
    p: f64,
) -> Result<LpDecomposition, LpError> {
    let m = m_of_p(p)?;
    for k in 1..=4u8 {
        let has_entries = table.iter().any(|(ix, _)| ix.level() == k);
        let has_splits = table
            .iter()
            .filter(|(ix, _)| ix.level() == k)
            .all(|(_, e)| e.split.is_some());
        if has_entries && !has_splits {
            return Err(LpError::MissingSplit { level: k });
        }
    }

    let op = KernelOperator::with_grid(roots, z.t_start(), z.step(), z.len());
    let level_part = |k: u8, part: SplitPart| -> Result<GridFunction, LpError> {
        let mut err = None;
        let out = op.apply(|s| {
            let (a, b, c) = z.eval(s);
            match table.eval_level_part(k, part, s, a, b, c) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            }
        });
        match err {
            Some(e) => Err(LpError::Eval(e)),
            None => Ok(out),
        }
    };

    let i0 = level_part(0, SplitPart::Whole)?;
    let mut ip = Vec::new(); // I_{k,p}, k = 1..4
    let mut ic = Vec::new(); // I_{k,c}
    for k in 1..=4u8 {
        ip.push(level_part(k, SplitPart::Lp)?);
        ic.push(level_part(k, SplitPart::Constant)?);
    }

    // H₁..H₄ and the leftover I_{4,p}.
    let h: Vec<GridFunction> = (0..4)
        .map(|k| {
            if k == 0 {
                i0.plus(&ic[0])
            } else {
                ip[k - 1].plus(&ic[k])
            }
        })
        .collect();
    let names = [
        "H1 = I0 + I1c".to_string(),
        "H2 = I1p + I2c".to_string(),
        "H3 = I2p + I3c".to_string(),
        "H4 = I3p + I4c".to_string(),
    ];

    let mut theta = Vec::new();
    let mut grouping = Vec::new();
    for k in 0..m {
        theta.push(h[k].clone());
        grouping.push(format!("Theta{} = {}", k + 1, names[k]));
    }
    let mut psi = ip[3].clone();
    let mut psi_terms = vec!["I4p".to_string()];
    for k in m..4 {
        psi = psi.plus(&h[k]);
        psi_terms.push(format!("H{}", k + 1));
    }
    grouping.push(format!("Psi = {}", psi_terms.join(" + ")));

    Ok(LpDecomposition {
        p,
        m,
        theta,
        psi,
        grouping,
    })
}
