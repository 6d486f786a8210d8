//! Problem configuration: a flat TOML document with one section per module
//! override, expressions as quoted strings. The same file type drives all
//! three analysis modes; each mode validates the fields it needs.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use ode_asymptotics::expr::{parse_expr, ExprNode};
use ode_asymptotics::kernels::cubic_roots;
use ode_asymptotics::rhs::MultiIndex;
use ode_asymptotics::{CharRoots64, CoefficientTable};

/// Which pipeline the config describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Third-order nonlinear integral-equation solve from an explicit
    /// coefficient table.
    Nonlinear3,
    /// Fourth-order linear equation with decaying perturbations, analyzed
    /// through the per-root reduction.
    Poincare4,
    /// Fourth-order equation with unbounded coefficients, analyzed through
    /// the normalizing substitution.
    Unbounded4,
}

/// Numeric constants of the unperturbed operator.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    /// (b₀, b₁, b₂) of z‴ + b₂z″ + b₁z′ + b₀z (nonlinear3).
    pub b: Option<[f64; 3]>,
    /// (a₀, a₁, a₂, a₃) of y⁗ + a₃y‴ + a₂y″ + a₁y′ + a₀y (poincare4).
    pub a: Option<[f64; 4]>,
}

/// Coefficient functions, written in the expression language over `t`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expressions {
    pub r0: Option<String>,
    pub r1: Option<String>,
    pub r2: Option<String>,
    pub r3: Option<String>,
    /// Growing coefficient q(t) (unbounded4).
    pub q: Option<String>,
    /// Zeroth-order coefficient r(t) (unbounded4).
    pub r: Option<String>,
}

/// One entry of the nonlinear right-hand side table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    /// Multi-index (α₁, α₂, α₃) of the monomial z^α₁ z′^α₂ z″^α₃.
    pub index: [u8; 3],
    pub expr: String,
    /// Optional split Ω = λ_p·ω_p + λ_c; both parts must be given together.
    pub lambda_p: Option<f64>,
    pub lambda_c: Option<f64>,
}

/// Solver and quadrature overrides; command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub tol: Option<f64>,
    pub t_max: Option<f64>,
    pub nodes_per_efold: Option<f64>,
}

/// Optional L^p bookkeeping request.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpSection {
    pub p: f64,
}

/// The full problem description read from disk.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub mode: Mode,
    pub t0: f64,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub expressions: Expressions,
    #[serde(default, rename = "coefficient")]
    pub coefficients: Vec<CoefficientSpec>,
    #[serde(default)]
    pub solver: SolverOverrides,
    pub lp: Option<LpSection>,
}

impl ProblemConfig {
    /// Read and validate a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ProblemConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::Nonlinear3 => {
                if self.constants.b.is_none() {
                    bail!("mode nonlinear3 requires constants.b = [b0, b1, b2]");
                }
                for c in &self.coefficients {
                    parse_expr(&c.expr)
                        .with_context(|| format!("coefficient expression {:?}", c.expr))?;
                    if c.lambda_p.is_some() != c.lambda_c.is_some() {
                        bail!(
                            "coefficient {:?}: lambda_p and lambda_c must be given together",
                            c.index
                        );
                    }
                }
            }
            Mode::Poincare4 => {
                if self.constants.a.is_none() {
                    bail!("mode poincare4 requires constants.a = [a0, a1, a2, a3]");
                }
                for (name, e) in [
                    ("r0", &self.expressions.r0),
                    ("r1", &self.expressions.r1),
                    ("r2", &self.expressions.r2),
                    ("r3", &self.expressions.r3),
                ] {
                    if let Some(src) = e {
                        parse_expr(src).with_context(|| format!("expression {name}"))?;
                    }
                }
            }
            Mode::Unbounded4 => {
                let q = self
                    .expressions
                    .q
                    .as_ref()
                    .context("mode unbounded4 requires expressions.q")?;
                parse_expr(q).context("expression q")?;
                let r = self
                    .expressions
                    .r
                    .as_ref()
                    .context("mode unbounded4 requires expressions.r")?;
                parse_expr(r).context("expression r")?;
            }
        }
        if let Some(lp) = &self.lp {
            if !(lp.p > 1.0) {
                bail!("lp.p must exceed 1, got {}", lp.p);
            }
        }
        Ok(())
    }

    /// Characteristic roots and coefficient table of a nonlinear3 config.
    pub fn nonlinear3_parts(&self) -> Result<(CharRoots64, CoefficientTable)> {
        let [b0, b1, b2] = self
            .constants
            .b
            .context("mode nonlinear3 requires constants.b")?;
        let roots = cubic_roots(b0, b1, b2)
            .with_context(|| format!("characteristic cubic for b = [{b0}, {b1}, {b2}]"))?;
        let mut table = CoefficientTable::new();
        for c in &self.coefficients {
            let ix = MultiIndex::new(c.index[0], c.index[1], c.index[2])
                .map_err(|e| anyhow::anyhow!("bad coefficient index: {e}"))?;
            let omega = parse_expr(&c.expr)?;
            match (c.lambda_p, c.lambda_c) {
                (Some(lp), Some(lc)) => table.insert_split(ix, lp, omega, lc),
                _ => table.insert(ix, omega),
            }
        }
        Ok((roots, table))
    }

    /// Constant part and perturbation expressions of a poincare4 config.
    pub fn poincare4_parts(&self) -> Result<([f64; 4], [ExprNode; 4])> {
        let a = self
            .constants
            .a
            .context("mode poincare4 requires constants.a")?;
        let parse_or_zero = |src: &Option<String>| -> Result<ExprNode> {
            Ok(match src {
                Some(s) => parse_expr(s)?,
                None => parse_expr("0").expect("literal zero parses"),
            })
        };
        let r = [
            parse_or_zero(&self.expressions.r0)?,
            parse_or_zero(&self.expressions.r1)?,
            parse_or_zero(&self.expressions.r2)?,
            parse_or_zero(&self.expressions.r3)?,
        ];
        Ok((a, r))
    }

    /// q and r expressions of an unbounded4 config.
    pub fn unbounded4_parts(&self) -> Result<(ExprNode, ExprNode)> {
        let q = parse_expr(self.expressions.q.as_ref().context("expressions.q")?)?;
        let r = parse_expr(self.expressions.r.as_ref().context("expressions.r")?)?;
        Ok((q, r))
    }
}
