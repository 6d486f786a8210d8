//! Characteristic cubic roots, the four-case Green kernel of the
//! constant-coefficient third-order operator, and the scalar constants
//! (A, Â, ς) that control its exponential envelope.
//!
//! The kernel is piecewise exponential in `t − s` with four branch layouts
//! selected by the sign pattern of the ordered roots `γ₁ > γ₂ > γ₃`:
//!
//! * `---` — supported on `t ≤ s`, all three exponentials;
//! * `+--` — one exponential for `t ≥ s`, two for `t ≤ s`;
//! * `++-` — two exponentials for `t ≥ s`, one for `t ≤ s`;
//! * `+++` — supported on `t ≥ s`, all three exponentials.
//!
//! Sign conventions. The branch tables here follow the source presentation,
//! whose exponentials are `e^{−γⱼ(t−s)}`: as a function of `t` the kernel's
//! off-diagonal modes are `e^{−γⱼt}`, so `t ↦ g(t, s)` solves the *mirrored*
//! homogeneous cubic (characteristic roots `{−γⱼ}`), equivalently the literal
//! cubic in the `s` variable. One transcription repair is applied: the
//! `+--` lower branch as printed is discontinuous at `t = s` (its overall
//! sign is flipped); with the sign corrected, `g` and `∂g/∂t` are continuous
//! and `∂²g/∂t²` jumps by exactly ±1 across the diagonal in every case
//! (+1 for `---`, −1 for the other three). The solver module composes this
//! kernel with a root mirroring so that its fixed points solve the equation
//! with the conventional `+b` signs; see [`crate::solver`].

use num_traits::Float;
use thiserror::Error;

/// Sign pattern of the ordered root triple, written `γ₁ > γ₂ > γ₃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignCase {
    /// `(−,−,−)`: all roots negative.
    AllNegative,
    /// `(+,−,−)`: one positive root.
    OnePositive,
    /// `(+,+,−)`: two positive roots.
    TwoPositive,
    /// `(+,+,+)`: all roots positive.
    AllPositive,
}

impl SignCase {
    /// Conventional 1-based case index (`---` is 1, `+++` is 4).
    pub fn index(self) -> usize {
        match self {
            SignCase::AllNegative => 1,
            SignCase::OnePositive => 2,
            SignCase::TwoPositive => 3,
            SignCase::AllPositive => 4,
        }
    }

    /// Compact text form (`"---"`, `"+--"`, `"++-"`, `"+++"`).
    pub fn pattern(self) -> &'static str {
        match self {
            SignCase::AllNegative => "---",
            SignCase::OnePositive => "+--",
            SignCase::TwoPositive => "++-",
            SignCase::AllPositive => "+++",
        }
    }
}

/// Root-finding / classification failure for the characteristic cubic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("complex root pair detected (discriminant {discriminant:e})")]
    ComplexPair { discriminant: f64 },
    #[error("repeated root within separation tolerance: {root}")]
    RepeatedRoot { root: f64 },
    #[error("zero root within tolerance (sign case undefined): {root:e}")]
    ZeroRoot { root: f64 },
    #[error("beta {beta} outside the open interval ]{lo}, {hi}[ for case {case}")]
    BetaOutOfRange {
        beta: f64,
        lo: f64,
        hi: f64,
        case: &'static str,
    },
}

/// Ordered real simple roots `γ₁ > γ₂ > γ₃` of the characteristic cubic,
/// with their sign-pattern case tag and the denominator
/// `D = (γ₂−γ₁)(γ₃−γ₂)(γ₃−γ₁)` of the kernel prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRoots<T: Float> {
    gamma: [T; 3],
    case: SignCase,
    denom: T,
}

/// Relative root-separation tolerance: gaps (and distances to zero) below
/// `tol × max(1, |γ|)` are treated as coincident.
pub const SEPARATION_TOL: f64 = 1e-9;

impl<T: Float> CharRoots<T> {
    /// Classify an already-computed root triple (any order). Rejects
    /// repeated roots and zero roots.
    pub fn new(r1: T, r2: T, r3: T) -> Result<Self, RootError> {
        let mut g = [r1, r2, r3];
        // Sort descending.
        g.sort_by(|a, b| b.partial_cmp(a).expect("roots are comparable"));
        let tol = T::from(SEPARATION_TOL).unwrap();
        let one = T::one();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let scale = one.max(g[i].abs()).max(g[j].abs());
                if (g[i] - g[j]).abs() <= tol * scale {
                    return Err(RootError::RepeatedRoot {
                        root: g[i].to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        for gi in g {
            if gi.abs() <= tol * one.max(gi.abs()) {
                return Err(RootError::ZeroRoot {
                    root: gi.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let zero = T::zero();
        let case = match (g[0] > zero, g[1] > zero, g[2] > zero) {
            (false, false, false) => SignCase::AllNegative,
            (true, false, false) => SignCase::OnePositive,
            (true, true, false) => SignCase::TwoPositive,
            (true, true, true) => SignCase::AllPositive,
            _ => unreachable!("roots are sorted descending"),
        };
        let denom = (g[1] - g[0]) * (g[2] - g[1]) * (g[2] - g[0]);
        Ok(CharRoots {
            gamma: g,
            case,
            denom,
        })
    }

    /// `(γ₁, γ₂, γ₃)`, sorted descending.
    pub fn gammas(&self) -> [T; 3] {
        self.gamma
    }

    /// Largest root `γ₁`.
    pub fn gamma1(&self) -> T {
        self.gamma[0]
    }

    /// Middle root `γ₂`.
    pub fn gamma2(&self) -> T {
        self.gamma[1]
    }

    /// Smallest root `γ₃`.
    pub fn gamma3(&self) -> T {
        self.gamma[2]
    }

    /// Sign-pattern case tag.
    pub fn case(&self) -> SignCase {
        self.case
    }

    /// Kernel prefactor denominator `D = (γ₂−γ₁)(γ₃−γ₂)(γ₃−γ₁)`.
    pub fn denom(&self) -> T {
        self.denom
    }

    /// Coefficients `(b₀, b₁, b₂)` of the monic cubic
    /// `γ³ + b₂γ² + b₁γ + b₀` having these roots.
    pub fn cubic_coefficients(&self) -> (T, T, T) {
        let [g1, g2, g3] = self.gamma;
        let s1 = g1 + g2 + g3;
        let s2 = g1 * g2 + g1 * g3 + g2 * g3;
        let s3 = g1 * g2 * g3;
        (-s3, s2, -s1)
    }

    /// Root triple with every sign flipped, reordered descending
    /// (`(−γ₃, −γ₂, −γ₁)`). The case tag mirrors (`---` ↔ `+++`,
    /// `+--` ↔ `++-`). Used by the solver to orient the kernel.
    pub fn mirrored(&self) -> CharRoots<T> {
        CharRoots::new(-self.gamma[2], -self.gamma[1], -self.gamma[0])
            .expect("mirroring preserves simplicity and non-zero roots")
    }

    /// Decay-rate exponent `a_case` of the envelope bound
    /// `|g| + |g_t| + |g_tt| ≤ A·e^{−a_case(t−s)}`: `γ₁`, `γ₂`, `γ₃`, `γ₃`
    /// for cases `---`, `+--`, `++-`, `+++` respectively.
    pub fn bound_exponent(&self) -> T {
        match self.case {
            SignCase::AllNegative => self.gamma[0],
            SignCase::OnePositive => self.gamma[1],
            SignCase::TwoPositive | SignCase::AllPositive => self.gamma[2],
        }
    }

    /// Open interval `]lo, hi[` from which the envelope rate β must be
    /// chosen for this case.
    pub fn beta_interval(&self) -> (T, T) {
        match self.case {
            SignCase::AllNegative => (self.gamma[0], T::zero()),
            SignCase::OnePositive => (self.gamma[1], T::zero()),
            SignCase::TwoPositive => (self.gamma[2], T::zero()),
            SignCase::AllPositive => (T::zero(), self.gamma[2]),
        }
    }

    /// Midpoint of [`Self::beta_interval`], the default β.
    pub fn beta_default(&self) -> T {
        let (lo, hi) = self.beta_interval();
        (lo + hi) / T::from(2.0).unwrap()
    }
}

/// Real roots of `γ³ + b₂γ² + b₁γ + b₀`, sorted descending, with the
/// hypothesis checks (real, simple, non-zero) applied.
///
/// Solved by the trigonometric form of Cardano's method on the depressed
/// cubic, followed by one Newton polish per root.
pub fn cubic_roots<T: Float>(b0: T, b1: T, b2: T) -> Result<CharRoots<T>, RootError> {
    let three = T::from(3.0).unwrap();
    let two = T::from(2.0).unwrap();
    // Depress: γ = x − b₂/3 ⇒ x³ + p x + q.
    let shift = b2 / three;
    let p = b1 - b2 * b2 / three;
    let q = b0 - b1 * b2 / three + two * b2 * b2 * b2 / T::from(27.0).unwrap();

    // Discriminant of the depressed cubic: Δ = −4p³ − 27q², judged against
    // the scale of its two terms so the near-zero test is scale-invariant.
    let four = T::from(4.0).unwrap();
    let tseven = T::from(27.0).unwrap();
    let disc = -four * p * p * p - tseven * q * q;
    let scale = four * p.abs().powi(3) + tseven * q * q;
    let near_zero = disc.abs() <= T::from(f64::EPSILON.sqrt()).unwrap() * scale.max(T::epsilon());
    if near_zero {
        // A repeated real root sits exactly on Δ = 0.
        return Err(RootError::RepeatedRoot {
            root: (-shift).to_f64().unwrap_or(f64::NAN),
        });
    }
    if disc < T::zero() {
        return Err(RootError::ComplexPair {
            discriminant: disc.to_f64().unwrap_or(f64::NAN),
        });
    }

    // Three distinct real roots: trigonometric form.
    let m = two * (-p / three).sqrt();
    let cos_arg = three * q / (p * m);
    let cos_arg = cos_arg.max(-T::one()).min(T::one());
    let theta = cos_arg.acos() / three;
    let two_pi_over_3 = T::from(2.0 * std::f64::consts::PI / 3.0).unwrap();
    let mut roots = [T::zero(); 3];
    for (k, r) in roots.iter_mut().enumerate() {
        let x = m * (theta - two_pi_over_3 * T::from(k as f64).unwrap()).cos();
        *r = newton_polish(x - shift, b0, b1, b2);
    }
    CharRoots::new(roots[0], roots[1], roots[2])
}

/// One Newton step on the original cubic (skipped at a critical point).
fn newton_polish<T: Float>(x: T, b0: T, b1: T, b2: T) -> T {
    let three = T::from(3.0).unwrap();
    let two = T::from(2.0).unwrap();
    let f = ((x + b2) * x + b1) * x + b0;
    let df = (three * x + two * b2) * x + b1;
    if df.abs() > T::epsilon() {
        x - f / df
    } else {
        x
    }
}

/// Scalar constants of the kernel envelope: the bound constant `A`, its
/// normalized form `Â = A/|D|`, the chosen rate `β`, and the case constant
/// `ς(β)`. The admissible perturbation size is `ρ < 1/(ς·Â)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstants<T: Float> {
    pub a: T,
    pub a_hat: T,
    pub beta: T,
    pub sigma: T,
}

impl<T: Float> KernelConstants<T> {
    /// Upper bound `1/(ς·Â)` for the perturbation size ρ.
    pub fn rho_max(&self) -> T {
        T::one() / (self.sigma * self.a_hat)
    }
}

/// Compute `A`, `Â = A/|D|`, and the case constant `ς(β)`.
///
/// `A = |γ₃−γ₂|(1+|γ₁|+|γ₁|²) + |γ₃−γ₁|(1+|γ₂|+|γ₂|²) + |γ₂−γ₁|(1+|γ₃|+|γ₃|²)`.
///
/// ς follows the four-case table, evaluated literally as printed in the
/// source (the nested negations in the `+--`/`++-`/`+++` rows are kept):
/// `1/(−γ₁+β)`; `1/(−(−γ₁+β)) + 1/(−γ₂+β)`; `1/(−(−γ₂+β)) + 1/(−γ₃+β)`;
/// `1/(−(−γ₃+β))`. Every entry is positive for β inside its interval.
pub fn asymptotic_constants<T: Float>(
    roots: &CharRoots<T>,
    beta: T,
) -> Result<KernelConstants<T>, RootError> {
    let (lo, hi) = roots.beta_interval();
    if !(beta > lo && beta < hi) {
        return Err(RootError::BetaOutOfRange {
            beta: beta.to_f64().unwrap_or(f64::NAN),
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
            case: roots.case().pattern(),
        });
    }
    let [g1, g2, g3] = roots.gammas();
    let one = T::one();
    let weight = |g: T| one + g.abs() + g.abs() * g.abs();
    let a = (g3 - g2).abs() * weight(g1)
        + (g3 - g1).abs() * weight(g2)
        + (g2 - g1).abs() * weight(g3);
    let a_hat = a / roots.denom().abs();
    let sigma = match roots.case() {
        SignCase::AllNegative => one / (-g1 + beta),
        SignCase::OnePositive => one / -(-g1 + beta) + one / (-g2 + beta),
        SignCase::TwoPositive => one / -(-g2 + beta) + one / (-g3 + beta),
        SignCase::AllPositive => one / -(-g3 + beta),
    };
    Ok(KernelConstants {
        a,
        a_hat,
        beta,
        sigma,
    })
}

/// Evaluate the Green kernel (or its first/second `t`-derivative) at
/// `(t, s)`, including the `1/D` prefactor.
///
/// At exactly `t = s` the two one-sided values coincide for `deriv ≤ 1` and
/// their average is returned; for `deriv = 2` the lower-branch (`t ≤ s`)
/// value is returned. The diagonal is a measure-zero set, so this choice is
/// quadrature-safe.
pub fn green_eval<T: Float>(roots: &CharRoots<T>, t: T, s: T, deriv: u8) -> T {
    assert!(deriv <= 2, "kernel derivatives available up to order 2");
    if t == s && deriv <= 1 {
        let upper = branch_eval(roots, t, s, deriv, true);
        let lower = branch_eval(roots, t, s, deriv, false);
        return (upper + lower) / T::from(2.0).unwrap();
    }
    branch_eval(roots, t, s, deriv, t > s)
}

/// Raw branch value: `upper` selects the `t ≥ s` branch. Includes `1/D`.
fn branch_eval<T: Float>(roots: &CharRoots<T>, t: T, s: T, deriv: u8, upper: bool) -> T {
    let [g1, g2, g3] = roots.gammas();
    // One exponential term `c·e^{−γ(t−s)}`, differentiated `deriv` times in t.
    let term = |c: T, g: T| {
        let mut factor = c;
        for _ in 0..deriv {
            factor = factor * -g;
        }
        factor * (-g * (t - s)).exp()
    };
    let all = |sign: T| {
        sign * (term(g2 - g3, g1) + term(g3 - g1, g2) + term(g1 - g2, g3))
    };
    let value = match roots.case() {
        SignCase::AllNegative => {
            if upper {
                T::zero()
            } else {
                all(T::one())
            }
        }
        SignCase::OnePositive => {
            if upper {
                term(g2 - g3, g1)
            } else {
                // Printed with the opposite overall sign, which breaks
                // continuity at t = s; corrected here.
                term(g2 - g1, g3) + term(g1 - g3, g2)
            }
        }
        SignCase::TwoPositive => {
            if upper {
                term(g2 - g3, g1) + term(g3 - g1, g2)
            } else {
                term(g2 - g1, g3)
            }
        }
        SignCase::AllPositive => {
            if upper {
                all(T::one())
            } else {
                T::zero()
            }
        }
    };
    value / roots.denom()
}

/// Mode coefficients of one kernel branch: the branch value is
/// `Σⱼ cⱼ·e^{−γⱼ(t−s)}` with the returned `cⱼ` already carrying the `1/D`
/// prefactor. `upper` selects the `t ≥ s` branch. Lets integral operators
/// apply the kernel with per-mode exponential recurrences instead of
/// pointwise evaluation.
pub fn branch_modes<T: Float>(roots: &CharRoots<T>, upper: bool) -> [T; 3] {
    let [g1, g2, g3] = roots.gammas();
    let d = roots.denom();
    let full = [(g2 - g3) / d, (g3 - g1) / d, (g1 - g2) / d];
    let zero = [T::zero(); 3];
    match (roots.case(), upper) {
        (SignCase::AllNegative, true) => zero,
        (SignCase::AllNegative, false) => full,
        (SignCase::OnePositive, true) => [full[0], T::zero(), T::zero()],
        (SignCase::OnePositive, false) => [T::zero(), (g1 - g3) / d, (g2 - g1) / d],
        (SignCase::TwoPositive, true) => [full[0], full[1], T::zero()],
        (SignCase::TwoPositive, false) => [T::zero(), T::zero(), (g2 - g1) / d],
        (SignCase::AllPositive, true) => full,
        (SignCase::AllPositive, false) => zero,
    }
}

/// Sum `|g| + |g_t| + |g_tt|` of unnormalized branch magnitudes times `|D|`
/// (i.e. without the `1/D` prefactor), for the envelope-bound check
/// `… ≤ A·e^{−a_case(t−s)}`.
pub fn green_branch_magnitude<T: Float>(roots: &CharRoots<T>, t: T, s: T) -> T {
    let d = roots.denom().abs();
    let mut sum = T::zero();
    for deriv in 0..=2u8 {
        sum = sum + green_eval(roots, t, s, deriv).abs() * d;
    }
    sum
}
