//! The polynomial right-hand side ℙ(t, z, z′, z″): multi-index coefficient
//! tables, the smallness functionals 𝒢 and ℒ built on the Green kernel, and
//! the hypothesis report that decides whether the contraction machinery is
//! expected to apply.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{EvalError, ExprNode};
use crate::kernels::{green_eval, CharRoots, SignCase};
use crate::quad::{integrate, QuadConfig};

/// Multi-index α = (α₁, α₂, α₃) with |α| ≤ 4, the exponents of
/// z^{α₁} z′^{α₂} z″^{α₃}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MultiIndex {
    a1: u8,
    a2: u8,
    a3: u8,
}

/// Multi-index construction failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("multi-index ({0}, {1}, {2}) has order above 4")]
pub struct IndexError(pub u8, pub u8, pub u8);

impl MultiIndex {
    pub fn new(a1: u8, a2: u8, a3: u8) -> Result<Self, IndexError> {
        if a1 as u16 + a2 as u16 + a3 as u16 > 4 {
            return Err(IndexError(a1, a2, a3));
        }
        Ok(MultiIndex { a1, a2, a3 })
    }

    /// All admissible indices in lexicographic order.
    pub fn all() -> Vec<MultiIndex> {
        let mut v = Vec::new();
        for a1 in 0..=4u8 {
            for a2 in 0..=4u8 {
                for a3 in 0..=4u8 {
                    if let Ok(ix) = MultiIndex::new(a1, a2, a3) {
                        v.push(ix);
                    }
                }
            }
        }
        v
    }

    pub fn parts(&self) -> (u8, u8, u8) {
        (self.a1, self.a2, self.a3)
    }

    /// |α| = α₁ + α₂ + α₃.
    pub fn level(&self) -> u8 {
        self.a1 + self.a2 + self.a3
    }

    /// x₁^{α₁} x₂^{α₂} x₃^{α₃}.
    pub fn monomial(&self, x1: f64, x2: f64, x3: f64) -> f64 {
        x1.powi(self.a1 as i32) * x2.powi(self.a2 as i32) * x3.powi(self.a3 as i32)
    }
}

/// Decomposition Ω_α(t) = λ_p·Ω_p(t) + λ_c of a coefficient into an L^p
/// part and a constant part, used by the solution decomposition.
#[derive(Debug, Clone)]
pub struct P3Split {
    pub lambda_p: f64,
    pub omega_p: ExprNode,
    pub lambda_c: f64,
}

/// One coefficient function with its optional split.
#[derive(Debug, Clone)]
pub struct CoeffEntry {
    pub omega: ExprNode,
    pub split: Option<P3Split>,
}

/// Mapping α ↦ Ω_α(t); absent indices mean Ω_α ≡ 0.
#[derive(Debug, Clone, Default)]
pub struct CoefficientTable {
    entries: BTreeMap<MultiIndex, CoeffEntry>,
}

/// Signed and absolute sums of one level of coefficients at a fixed t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSums {
    /// Σ_{|α|=k} Ω_α(t) (needed by the 𝒢 functional at level 0).
    pub signed: f64,
    /// Σ_{|α|=k} |Ω_α(t)|.
    pub abs: f64,
}

impl CoefficientTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Set Ω_α (replacing any previous entry).
    pub fn insert(&mut self, index: MultiIndex, omega: ExprNode) {
        self.entries.insert(
            index,
            CoeffEntry {
                omega,
                split: None,
            },
        );
    }

    /// Set Ω_α together with its split λ_p·Ω_p + λ_c; Ω_α itself is built
    /// from the split so the two always agree.
    pub fn insert_split(
        &mut self,
        index: MultiIndex,
        lambda_p: f64,
        omega_p: ExprNode,
        lambda_c: f64,
    ) {
        use crate::expr::{BinOp, ExprNode as E};
        let omega = E::Binary(
            BinOp::Add,
            Box::new(E::Binary(
                BinOp::Mul,
                Box::new(E::Const(lambda_p)),
                Box::new(omega_p.clone()),
            )),
            Box::new(E::Const(lambda_c)),
        );
        self.entries.insert(
            index,
            CoeffEntry {
                omega,
                split: Some(P3Split {
                    lambda_p,
                    omega_p,
                    lambda_c,
                }),
            },
        );
    }

    pub fn get(&self, index: &MultiIndex) -> Option<&CoeffEntry> {
        self.entries.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &CoeffEntry)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Ω_α(t), zero when the index is absent.
    pub fn eval_coeff(&self, index: &MultiIndex, t: f64) -> Result<f64, EvalError> {
        match self.entries.get(index) {
            Some(e) => e.omega.eval(t),
            None => Ok(0.0),
        }
    }

    /// ℙ(t, x₁, x₂, x₃) = Σ_{|α|≤4} Ω_α(t) x₁^{α₁} x₂^{α₂} x₃^{α₃}.
    pub fn eval_rhs(&self, t: f64, x1: f64, x2: f64, x3: f64) -> Result<f64, EvalError> {
        let mut sum = 0.0;
        for (ix, e) in &self.entries {
            sum += e.omega.eval(t)? * ix.monomial(x1, x2, x3);
        }
        Ok(sum)
    }

    /// Signed and absolute coefficient sums over the level |α| = k.
    pub fn level_sums(&self, k: u8, t: f64) -> Result<LevelSums, EvalError> {
        let mut signed = 0.0;
        let mut abs = 0.0;
        for (ix, e) in &self.entries {
            if ix.level() == k {
                let v = e.omega.eval(t)?;
                signed += v;
                abs += v.abs();
            }
        }
        Ok(LevelSums { signed, abs })
    }

    /// Σ_{|α|=1..4} |Ω_α(t)|, the quantity the ρ condition bounds.
    pub fn rho_sum(&self, t: f64) -> Result<f64, EvalError> {
        let mut total = 0.0;
        for k in 1..=4u8 {
            total += self.level_sums(k, t)?.abs;
        }
        Ok(total)
    }

    /// Restricted right-hand side using only level-k coefficients, split
    /// part selected by `part` (used by the L^p decomposition).
    pub fn eval_level_part(
        &self,
        k: u8,
        part: SplitPart,
        t: f64,
        x1: f64,
        x2: f64,
        x3: f64,
    ) -> Result<f64, EvalError> {
        let mut sum = 0.0;
        for (ix, e) in &self.entries {
            if ix.level() != k {
                continue;
            }
            let coeff = match (&e.split, part) {
                (_, SplitPart::Whole) => e.omega.eval(t)?,
                (Some(s), SplitPart::Lp) => s.lambda_p * s.omega_p.eval(t)?,
                (Some(s), SplitPart::Constant) => s.lambda_c,
                (None, _) => return Err(EvalError::NonFinite), // guarded by callers
            };
            sum += coeff * ix.monomial(x1, x2, x3);
        }
        Ok(sum)
    }

    /// True when every coefficient of level ≥ 1 carries a split.
    pub fn fully_split(&self) -> bool {
        self.entries
            .iter()
            .all(|(ix, e)| ix.level() == 0 || e.split.is_some())
    }
}

/// Which component of the split Ω_α = λ_p·Ω_p + λ_c to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPart {
    Whole,
    Lp,
    Constant,
}

/// Decay metadata for an integrand factor E, needed to certify truncation
/// of the semi-infinite integrals.
#[derive(Debug, Clone, Copy)]
pub enum EBound {
    /// |E(s)| ≤ scale · e^{−rate (s − t₀)} with rate ≥ 0.
    Decaying { scale: f64, rate: f64 },
    /// |E(s)| ≤ scale.
    Bounded { scale: f64 },
    /// Nothing known: tail cannot be certified.
    Unknown,
}

/// Failure modes of the kernel functionals.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error("tail bound not certifiable: E carries no decay or boundedness metadata")]
    TailNotCertifiable,
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Integration window and tolerances for the 𝒢/ℒ functionals.
#[derive(Debug, Clone, Copy)]
pub struct GLConfig {
    pub t0: f64,
    /// Certified-tail target, as a fraction of the running integral scale.
    pub tail_tol: f64,
    /// Hard cap on the truncation point measured from t₀.
    pub max_span: f64,
    pub quad: QuadConfig,
}

impl GLConfig {
    pub fn new(t0: f64) -> Self {
        GLConfig {
            t0,
            tail_tol: 1e-10,
            max_span: 5e3,
            quad: QuadConfig::default(),
        }
    }
}

/// 𝒢(E)(t) = |∫g·E| + |∫g_t·E| + |∫g_tt·E| and
/// ℒ(E)(t) = ∫(|g| + |g_t| + |g_tt|)·|E|, both over [t₀, ∞) truncated with a
/// certified exponential tail bound. Guarantees 0 ≤ 𝒢 ≤ ℒ.
pub fn functionals_gl<F: Fn(f64) -> f64>(
    roots: &CharRoots<f64>,
    e: F,
    ebound: EBound,
    t: f64,
    cfg: &GLConfig,
) -> Result<(f64, f64), FunctionalError> {
    let (scale, e_rate) = match ebound {
        EBound::Decaying { scale, rate } => (scale, rate),
        EBound::Bounded { scale } => (scale, 0.0),
        EBound::Unknown => return Err(FunctionalError::TailNotCertifiable),
    };

    // Kernel decay rate on the upper side s > t: the bound exponent a_case
    // gives |g| ≤ A e^{a_case (s − t)} with a_case ≤ 0 for cases with an
    // anti-causal branch; for case +++ the kernel vanishes there.
    let t_end = match roots.case() {
        SignCase::AllPositive => t.max(cfg.t0),
        _ => {
            let k_rate = -roots.bound_exponent(); // > 0
            let total = k_rate + e_rate;
            // A·scale·e^{−total·(T−t)}/total < tail_tol  ⇒ span from t.
            let a = kernel_a_constant(roots);
            let needed =
                ((a * scale / (cfg.tail_tol * total)).max(1.0)).ln() / total;
            (t + needed).min(cfg.t0 + cfg.max_span).max(t.max(cfg.t0))
        }
    };

    let mut g_total = 0.0;
    let mut l_total = 0.0;
    // Split at the kernel kink s = t.
    let segments = [(cfg.t0, t.clamp(cfg.t0, t_end)), (t.clamp(cfg.t0, t_end), t_end)];
    for deriv in 0..=2u8 {
        let mut signed = 0.0;
        for (a, b) in segments {
            if b > a {
                signed += integrate(
                    |s| green_eval(roots, t, s, deriv) * e(s),
                    a,
                    b,
                    &cfg.quad,
                );
            }
        }
        g_total += signed.abs();
    }
    for (a, b) in segments {
        if b > a {
            l_total += integrate(
                |s| {
                    let mut k = 0.0;
                    for deriv in 0..=2u8 {
                        k += green_eval(roots, t, s, deriv).abs();
                    }
                    k * e(s).abs()
                },
                a,
                b,
                &cfg.quad,
            );
        }
    }
    Ok((g_total, l_total.max(g_total)))
}

/// The envelope constant A of the kernel bound (unnormalized).
fn kernel_a_constant(roots: &CharRoots<f64>) -> f64 {
    let [g1, g2, g3] = roots.gammas();
    let w = |g: f64| 1.0 + g.abs() + g * g;
    ((g3 - g2).abs() * w(g1) + (g3 - g1).abs() * w(g2) + (g2 - g1).abs() * w(g3))
        / roots.denom().abs()
}

/// Outcome of a single qualitative check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Indeterminate,
}

/// Measured trend of a sampled positive quantity.
#[derive(Debug, Clone)]
pub struct Trend {
    /// Log-log slope over the last decade of the (shifted) time axis.
    pub slope: f64,
    pub initial: f64,
    pub final_value: f64,
}

impl Trend {
    /// Fit over samples (t, y): slope of ln y against ln(t − t₀ + 1),
    /// restricted to the last decade.
    pub fn measure(t0: f64, ts: &[f64], ys: &[f64]) -> Trend {
        assert_eq!(ts.len(), ys.len());
        assert!(ts.len() >= 2);
        let xs: Vec<f64> = ts.iter().map(|&t| (t - t0 + 1.0).ln()).collect();
        let x_end = *xs.last().unwrap();
        let x_cut = x_end - std::f64::consts::LN_10;
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys)
            .filter(|(&x, &y)| x >= x_cut && y > 0.0)
            .map(|(&x, &y)| (x, y.ln()))
            .collect();
        let slope = if pts.len() >= 2 {
            let n = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            let denom = n * sxx - sx * sx;
            if denom.abs() > 1e-300 {
                (n * sxy - sx * sy) / denom
            } else {
                0.0
            }
        } else {
            0.0
        };
        Trend {
            slope,
            initial: ys[0],
            final_value: *ys.last().unwrap(),
        }
    }

    /// Decision rule for "tends to 0": last-decade log-log slope < −0.1 and
    /// final value below 1e−3 of the initial value. A decreasing trend that
    /// misses the hard thresholds is indeterminate rather than failing.
    pub fn to_zero_status(&self) -> CheckStatus {
        let decaying_hard = self.slope < -0.1 && self.final_value < 1e-3 * self.initial;
        if decaying_hard || self.final_value == 0.0 {
            CheckStatus::Pass
        } else if self.slope < -0.05 || self.final_value < 0.5 * self.initial {
            CheckStatus::Indeterminate
        } else {
            CheckStatus::Fail
        }
    }

    /// Decision rule for boundedness: no sustained growth over the last
    /// decade.
    pub fn bounded_status(&self) -> CheckStatus {
        if self.slope < 0.05 {
            CheckStatus::Pass
        } else if self.slope < 0.2 {
            CheckStatus::Indeterminate
        } else {
            CheckStatus::Fail
        }
    }
}

/// One line of the hypothesis report.
#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub name: String,
    pub status: CheckStatus,
    pub trend: Option<Trend>,
    pub detail: String,
}

/// Numeric assessment of the smallness hypotheses for a coefficient table
/// over a finite sampling window.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    /// True when no check failed outright (indeterminate results are
    /// reported but do not block the solver).
    pub fn acceptable(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Sample the 𝒢/ℒ functionals of the table's level sums on a geometric grid
/// and report the trend of each smallness hypothesis together with the ρ
/// condition against ρ_max = 1/(ς·Â).
pub fn hypothesis_report(
    table: &CoefficientTable,
    roots: &CharRoots<f64>,
    beta: f64,
    t0: f64,
    t_report: f64,
) -> Result<HypothesisReport, FunctionalError> {
    let mut checks = Vec::new();
    let cfg = GLConfig::new(t0);
    // Geometric sampling of t on [t0, t_report].
    let n = 25usize;
    let ts: Vec<f64> = (0..n)
        .map(|i| {
            t0 + ((t_report - t0 + 1.0).ln() * i as f64 / (n - 1) as f64).exp() - 1.0
        })
        .collect();

    // Decay metadata: level sums of expression tables are not analyzed
    // symbolically; they are sampled and wrapped as bounded with the
    // window's observed maximum (conservative for the trend report).
    let bound_of = |f: &dyn Fn(f64) -> Result<f64, EvalError>| -> Result<EBound, EvalError> {
        let mut m: f64 = 0.0;
        for i in 0..=200 {
            let t = t0 + (t_report + 60.0 - t0) * i as f64 / 200.0;
            m = m.max(f(t)?.abs());
        }
        Ok(EBound::Bounded { scale: m })
    };

    if table.is_empty() {
        checks.push(HypothesisCheck {
            name: "level-0 smallness (G -> 0)".into(),
            status: CheckStatus::Pass,
            trend: None,
            detail: "empty table".into(),
        });
        checks.push(HypothesisCheck {
            name: "level-1 smallness (L -> 0)".into(),
            status: CheckStatus::Pass,
            trend: None,
            detail: "empty table".into(),
        });
        checks.push(HypothesisCheck {
            name: "levels 1..4 boundedness".into(),
            status: CheckStatus::Pass,
            trend: None,
            detail: "empty table".into(),
        });
        checks.push(HypothesisCheck {
            name: "rho condition".into(),
            status: CheckStatus::Pass,
            trend: None,
            detail: "empty table".into(),
        });
        return Ok(HypothesisReport { checks });
    }

    // (1) level-0: G(signed level-0 sum)(t) -> 0.
    {
        let f = |t: f64| table.level_sums(0, t).map(|s| s.signed);
        let eb = bound_of(&f)?;
        let ys = ts
            .iter()
            .map(|&t| functionals_gl(roots, |s| f(s).unwrap_or(f64::NAN), eb, t, &cfg).map(|p| p.0))
            .collect::<Result<Vec<_>, _>>()?;
        let trend = Trend::measure(t0, &ts, &ys);
        checks.push(HypothesisCheck {
            name: "level-0 smallness (G -> 0)".into(),
            status: trend.to_zero_status(),
            detail: format!(
                "slope {:.3}, first {:.3e}, last {:.3e}",
                trend.slope, trend.initial, trend.final_value
            ),
            trend: Some(trend),
        });
    }

    // (2) level-1: L(Σ|Ω|, level 1)(t) -> 0 (conservative absolute-sum form).
    {
        let f = |t: f64| table.level_sums(1, t).map(|s| s.abs);
        let eb = bound_of(&f)?;
        let ys = ts
            .iter()
            .map(|&t| functionals_gl(roots, |s| f(s).unwrap_or(f64::NAN), eb, t, &cfg).map(|p| p.1))
            .collect::<Result<Vec<_>, _>>()?;
        let trend = Trend::measure(t0, &ts, &ys);
        checks.push(HypothesisCheck {
            name: "level-1 smallness (L -> 0)".into(),
            status: trend.to_zero_status(),
            detail: format!(
                "slope {:.3}, first {:.3e}, last {:.3e}",
                trend.slope, trend.initial, trend.final_value
            ),
            trend: Some(trend),
        });
    }

    // (3) Σ_{k=1..4} L(level-k abs sums)(t) bounded.
    {
        let f = |t: f64| -> Result<f64, EvalError> {
            let mut v = 0.0;
            for k in 1..=4u8 {
                v += table.level_sums(k, t)?.abs;
            }
            Ok(v)
        };
        let eb = bound_of(&f)?;
        let ys = ts
            .iter()
            .map(|&t| functionals_gl(roots, |s| f(s).unwrap_or(f64::NAN), eb, t, &cfg).map(|p| p.1))
            .collect::<Result<Vec<_>, _>>()?;
        let trend = Trend::measure(t0, &ts, &ys);
        checks.push(HypothesisCheck {
            name: "levels 1..4 boundedness".into(),
            status: trend.bounded_status(),
            detail: format!(
                "slope {:.3}, max {:.3e}",
                trend.slope,
                ys.iter().cloned().fold(0.0, f64::max)
            ),
            trend: Some(trend),
        });
    }

    // (4) ρ condition: sup_t Σ_{1..4}|Ω_α(t)| vs 1/(ς·Â).
    {
        let constants = crate::kernels::asymptotic_constants(roots, beta)
            .expect("beta validated by caller");
        let mut sup = 0.0_f64;
        for i in 0..=400 {
            let t = t0 + (t_report - t0) * i as f64 / 400.0;
            sup = sup.max(table.rho_sum(t)?);
        }
        let rho_max = constants.rho_max();
        let status = if sup < rho_max {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        checks.push(HypothesisCheck {
            name: "rho condition".into(),
            status,
            trend: None,
            detail: format!("sup sum {:.6e} vs rho_max {:.6e}", sup, rho_max),
        });
    }

    Ok(HypothesisReport { checks })
}
