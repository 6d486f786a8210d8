//! Reproduction of the three worked examples: run the pipeline on the
//! published inputs and emit a side-by-side table of claimed versus
//! computed constants, with match/mismatch flags. Mismatches are report
//! content, not failures.

use std::fmt::Write as _;

use anyhow::Result;

use ode_asymptotics::expr::parse_expr;
use ode_asymptotics::poincare::{
    asymptotic_report, check_f_membership, levinson_data, quartic_roots, LevinsonData,
    PoincareProblem,
};
use ode_asymptotics::rhs::CheckStatus;

use crate::outputs::{fnum, fshort, OutDir, Summary};
use crate::pipeline::{
    run_unbounded, solve_roots_concurrently, write_ratio_artifacts, write_solution_samples,
};

/// Tolerance for declaring a printed constant reproduced.
const MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
struct Comparison {
    name: String,
    claimed: f64,
    computed: f64,
}

impl Comparison {
    fn matched(&self) -> bool {
        (self.claimed - self.computed).abs() <= MATCH_TOL * self.claimed.abs().max(1.0)
    }
    fn row(&self) -> Vec<String> {
        vec![
            self.name.clone(),
            fnum(self.claimed),
            fnum(self.computed),
            fnum((self.claimed - self.computed).abs()),
            if self.matched() {
                "match".to_string()
            } else {
                "MISMATCH".to_string()
            },
        ]
    }
}

fn write_comparisons(
    out: &OutDir,
    rows: &[Comparison],
    notes: &str,
    summary: &mut Summary,
) -> Result<()> {
    out.csv(
        "comparison.csv",
        "name,claimed,computed,abs_diff,status",
        rows.iter().map(|c| c.row()),
    )?;
    out.text("notes.txt", notes)?;
    let flagged: Vec<&str> = rows
        .iter()
        .filter(|c| !c.matched())
        .map(|c| c.name.as_str())
        .collect();
    summary.push(
        "claims-compared",
        true,
        if flagged.is_empty() {
            format!("{} constants; all match within 1e-8", rows.len())
        } else {
            format!(
                "{} constants; flagged with computed alternative: {}",
                rows.len(),
                flagged.join("; ")
            )
        },
    );
    Ok(())
}

/// Dispatch by example number.
pub fn run_example(n: u8, eta: f64, out: &OutDir) -> Result<Summary> {
    match n {
        1 => example1(eta, out),
        2 => example2(eta, out),
        3 => example3(out),
        _ => anyhow::bail!("example number must be 1, 2, or 3"),
    }
}

/// Add the F_i(1) limit, sigma_i, and A_i comparisons shared by the two
/// fourth-order examples.
#[allow(clippy::too_many_arguments)]
fn push_constant_comparisons(
    rows: &mut Vec<Comparison>,
    data: &LevinsonData,
    f_limits: [f64; 4],
    sigma_claims: [(f64, f64); 4],
    a_claims: [f64; 4],
) {
    for (i, rd) in data.roots.iter().enumerate() {
        rows.push(Comparison {
            name: format!("F{}(1) limit", i + 1),
            claimed: f_limits[i],
            computed: rd.f_one,
        });
    }
    for (i, rd) in data.roots.iter().enumerate() {
        let (c0, c1) = sigma_claims[i];
        rows.push(Comparison {
            name: format!("sigma{} at eta={}", i + 1, data.eta),
            claimed: c0 + c1 * data.eta,
            computed: rd.sigma,
        });
    }
    for (i, rd) in data.roots.iter().enumerate() {
        rows.push(Comparison {
            name: format!("A{}", i + 1),
            claimed: a_claims[i],
            computed: rd.a_hat,
        });
    }
}

/// y⁗ + 2y‴ + 13y″ − 14y′ + [r₀(t) + 24]y = 0 on [1, ∞) with
/// r₀ = 3/(√t(sin t + 2)); claimed root set {3, 1, −2, −4}.
fn example1(eta: f64, out: &OutDir) -> Result<Summary> {
    let a = [24.0, -14.0, 13.0, 2.0];
    let claimed_roots = [3.0, 1.0, -2.0, -4.0];
    let mut summary = Summary::new();
    let mut notes = String::new();

    // Root-set consistency: the printed quartic versus the claimed roots.
    let quartic = |l: f64| l.powi(4) + a[3] * l.powi(3) + a[2] * l * l + a[1] * l + a[0];
    let flipped = |l: f64| l.powi(4) + a[3] * l.powi(3) - a[2] * l * l + a[1] * l + a[0];
    let root_result = quartic_roots(a[0], a[1], a[2], a[3]);
    let residuals: Vec<String> = claimed_roots
        .iter()
        .map(|&l| format!("p({l}) = {}", fshort(quartic(l))))
        .collect();
    let flipped_ok = claimed_roots.iter().all(|&l| flipped(l).abs() < 1e-9);
    writeln!(
        notes,
        "Root-set inconsistency: the stated quartic lambda^4 + 2 lambda^3 + 13 lambda^2 \
         - 14 lambda + 24 does not have the claimed roots (3, 1, -2, -4):"
    )?;
    writeln!(notes, "  residuals: {}", residuals.join(", "))?;
    match &root_result {
        Ok(rs) => writeln!(notes, "  actual real roots: {rs:?}")?,
        Err(e) => writeln!(notes, "  actual factorization: {e}")?,
    }
    if flipped_ok {
        writeln!(
            notes,
            "  the claimed roots satisfy the quartic with the second-degree term's sign \
             flipped (lambda^4 + 2 lambda^3 - 13 lambda^2 - 14 lambda + 24); the constants \
             below are computed for the claimed root set with the stated a3 = 2, a2 = 13."
        )?;
    }
    summary.push(
        "root-set-consistency",
        true,
        "FLAGGED: stated quartic and claimed root set disagree; see notes.txt".to_string(),
    );

    let data = levinson_data(claimed_roots, a[3], a[2], 1.0, eta);
    let mut rows = Vec::new();
    for (i, &claimed) in claimed_roots.iter().enumerate() {
        // roots rows keep the claimed set visible next to the quartic check
        let computed = match &root_result {
            Ok(rs) => rs[i],
            Err(_) => f64::NAN,
        };
        rows.push(Comparison {
            name: format!("lambda{}", i + 1),
            claimed,
            computed,
        });
    }
    push_constant_comparisons(
        &mut rows,
        &data,
        [0.5, 5.0 / 6.0, 5.0 / 6.0, 0.5],
        [(45.0, 167.0), (11.0, 69.0), (25.0, 76.0), (61.0, 174.0)],
        [34.0 / 3.0, 26.0 / 7.0, 26.0 / 7.0, 34.0 / 3.0],
    );
    // Spot values of the stated F_i(1) formulas at t = 3.
    let t = 3.0_f64;
    let e2 = (-2.0 * (t - 1.0)).exp();
    let e3 = (-3.0 * (t - 1.0)).exp();
    let stated = [
        0.5,
        0.5 * (1.0 - e2) + 1.0 / 3.0,
        (1.0 - e3) / 3.0 + 0.5,
        0.5 * (1.0 - e2),
    ];
    for (i, rd) in data.roots.iter().enumerate() {
        rows.push(Comparison {
            name: format!("F{}(1) at t=3", i + 1),
            claimed: stated[i],
            computed: rd.op.apply(&|_s: f64| 1.0, t),
        });
    }
    writeln!(
        notes,
        "sigma4: the stated value 61 + 174 eta differs from the per-root formula, which \
         gives 71 + 174 eta for lambda = -4."
    )?;
    writeln!(
        notes,
        "A_i: the stated values equal the normalized kernel constant A-hat of each root's \
         difference triple; the literal triple-sum values are {}.",
        data.roots
            .iter()
            .map(|r| fshort(r.a_literal))
            .collect::<Vec<_>>()
            .join(", ")
    )?;

    // Membership of the perturbation in the admissible class.
    let r0 = parse_expr("3/(t^0.5*(sin(t)+2))").expect("fixed expression parses");
    let checks = check_f_membership(&data, &r0).map_err(|e| anyhow::anyhow!("membership: {e}"))?;
    summary.push(
        "membership-r0",
        checks.iter().all(|c| c.status != CheckStatus::Fail),
        format!(
            "sup tail {} across roots",
            fshort(checks.iter().map(|c| c.sup_tail).fold(0.0, f64::max))
        ),
    );

    write_comparisons(out, &rows, &notes, &mut summary)?;
    Ok(summary)
}

/// y⁗ + 10y‴ + 35y″ + 50y′ + [r₀(t) + 24]y = 0 on [2, ∞) with
/// r₀ = 3/((cos t + 2) log t); root set {−1, −2, −3, −4}.
fn example2(eta: f64, out: &OutDir) -> Result<Summary> {
    let a = [24.0, 50.0, 35.0, 10.0];
    let claimed_roots = [-1.0, -2.0, -3.0, -4.0];
    let t0_printed = 2.0;
    let mut summary = Summary::new();
    let mut notes = String::new();

    let computed_roots =
        quartic_roots(a[0], a[1], a[2], a[3]).map_err(|e| anyhow::anyhow!("quartic: {e}"))?;
    let mut rows: Vec<Comparison> = claimed_roots
        .iter()
        .zip(computed_roots.iter())
        .enumerate()
        .map(|(i, (&c, &l))| Comparison {
            name: format!("lambda{}", i + 1),
            claimed: c,
            computed: l,
        })
        .collect();

    let data = levinson_data(computed_roots, a[3], a[2], t0_printed, eta);
    push_constant_comparisons(
        &mut rows,
        &data,
        [1.0, 2.0, 2.0, 1.0],
        [(11.0, 55.0), (25.0, 38.0), (45.0, 47.0), (71.0, 76.0)],
        [29.0 / 2.0, 13.0 / 3.0, 13.0 / 3.0, 29.0 / 2.0],
    );
    // Spot values of the stated F_i(1) formulas at t = 5; the second is
    // printed with a positive exponent.
    let t = 5.0;
    let e1 = (-(t - t0_printed)).exp();
    let stated = [1.0, 2.0 - (t - t0_printed).exp(), 2.0 - e1, 1.0 - e1];
    for (i, rd) in data.roots.iter().enumerate() {
        rows.push(Comparison {
            name: format!("F{}(1) at t=5", i + 1),
            claimed: stated[i],
            computed: rd.op.apply(&|_s: f64| 1.0, t),
        });
    }
    writeln!(
        notes,
        "F2(1): the stated formula 2 - e^(t-2) grows without bound; the computed operator \
         gives 2 - e^-(t-2) (the exponent's sign reversed), which matches the stated limit 2."
    )?;
    writeln!(
        notes,
        "sigma2: the stated value 25 + 38 eta differs from the per-root formula, which \
         gives 25 + 40 eta for lambda = -2."
    )?;
    writeln!(
        notes,
        "A1, A4: the stated value 29/2 differs from the normalized kernel constant, which \
         is 15 for the difference triples of lambda = -1 and lambda = -4; A2 = A3 = 13/3 match."
    )?;

    let r0 = parse_expr("3/((cos(t)+2)*log(t))").expect("fixed expression parses");
    let checks = check_f_membership(&data, &r0).map_err(|e| anyhow::anyhow!("membership: {e}"))?;
    summary.push(
        "membership-r0",
        checks.iter().all(|c| c.status != CheckStatus::Fail),
        format!(
            "sup tail {} across roots",
            fshort(checks.iter().map(|c| c.sup_tail).fold(0.0, f64::max))
        ),
    );

    // Fundamental system: the Picard iteration is not a contraction on
    // [2, T] for this perturbation size (r0(2) is too large), so the system
    // is solved from t0 = 10 and the constants above are reported at the
    // stated start t0 = 2.
    writeln!(
        notes,
        "fundamental system solved on [10, 30]: the perturbation at the stated start t0 = 2 \
         exceeds the contraction threshold of the iteration, so the window starts at t = 10 \
         where r0 is small enough; constants above are evaluated at t0 = 2 as stated."
    )?;
    let zero = parse_expr("0").expect("literal zero parses");
    let problem = PoincareProblem::new(a, [r0, zero.clone(), zero.clone(), zero], 10.0)
        .map_err(|e| anyhow::anyhow!("quartic: {e}"))?;
    let sols = solve_roots_concurrently(&problem, 30.0)?;
    let report = asymptotic_report(&problem, &sols, false, None)
        .map_err(|e| anyhow::anyhow!("asymptotic report: {e}"))?;
    // The o(1) corrections decay like 1/log t here, so a finite window only
    // shows the direction of travel; the observed sizes are report content.
    for rr in &report.roots {
        summary.push(
            &format!("ratios-lambda-{}", rr.lambda),
            true,
            format!(
                "final deviation {} at t=30 (the correction decays like 1/log t; see ratios.csv)",
                fshort(
                    rr.ratios
                        .iter()
                        .map(|c| *c.deviations.last().unwrap_or(&f64::NAN))
                        .fold(0.0, f64::max)
                )
            ),
        );
    }
    summary.push(
        "wronskian",
        true,
        format!(
            "ratio {} at t=30 (tends to 1 only as the 1/log t corrections vanish)",
            fshort(report.wronskian_final)
        ),
    );
    write_ratio_artifacts(out, &report)?;
    write_solution_samples(out, &sols)?;

    write_comparisons(out, &rows, &notes, &mut summary)?;
    Ok(summary)
}

/// The growing-coefficient equation with q = t^α, r = 1: closed-form
/// battery comparison for α ∈ {1, 2, 3} and the full L¹ run for α = 2.
fn example3(out: &OutDir) -> Result<Summary> {
    let t0 = 1.0;
    let mut notes = String::new();
    writeln!(
        notes,
        "Stated equation display: the y' coefficient is printed as 2 t^(alpha/2), but the \
         template equation requires 2 q^(3/2) = 2 t^(3 alpha/2); the battery below uses the \
         template form."
    )?;
    writeln!(
        notes,
        "Closed forms: the stated table's q'''q'/q^2 entry alpha(alpha-1)(alpha-2)/t^4 is \
         missing a factor alpha, and its (q'''/q)^2 entry alpha^2(alpha-1)(alpha-2)^2/t^6 is \
         missing a factor (alpha-1); both coincide with the computed values only at alpha = 2, \
         where the (alpha-2) factor vanishes."
    )?;

    // Printed closed forms (index-matched to the battery order) and the
    // forms the quantities actually obey for q = t^alpha, r = 1.
    let stated_form = |idx: usize, al: f64, t: f64| -> f64 {
        match idx {
            0..=3 => (al / t).powi(2 * (idx as i32 + 1)),
            4 | 5 => (al * (al - 1.0) / (t * t)).powi(2 * (idx as i32 - 3)),
            6 | 7 => {
                let k = idx as i32 - 6;
                al.powi(2 * k + 4) * (al - 1.0).powi(2) / t.powi(2 * (k + 3))
            }
            8 => t.powf(-4.0 * al),
            9 => al * (al - 1.0) * (al - 2.0) / t.powi(4),
            10 => al * al * (al - 1.0) * (al - 2.0).powi(2) / t.powi(6),
            11 => {
                al * al
                    * (al - 1.0).powi(2)
                    * (al - 2.0).powi(2)
                    * (al - 3.0).powi(2)
                    / t.powi(8)
            }
            _ => unreachable!("battery has 12 items"),
        }
    };

    let mut rows = Vec::new();
    for alpha in [1.0_f64, 2.0, 3.0] {
        let q = parse_expr(&format!("t^{alpha}")).expect("fixed expression parses");
        let r = parse_expr("1").expect("fixed expression parses");
        let problem =
            ode_asymptotics::unbounded::UnboundedProblem::new(q, r, t0);
        for &t in &[2.0, 5.0, 10.0] {
            let values = problem
                .battery_values(t)
                .map_err(|e| anyhow::anyhow!("battery: {e}"))?;
            for (idx, (name, v)) in values.into_iter().enumerate() {
                rows.push(Comparison {
                    name: format!("{name} alpha={alpha} t={t}"),
                    claimed: stated_form(idx, alpha, t),
                    computed: v,
                });
            }
        }
    }

    // Full pipeline for alpha = 2 (battery artifacts + L1 statuses).
    let q = parse_expr("t^2").expect("fixed expression parses");
    let r = parse_expr("1").expect("fixed expression parses");
    let mut summary = run_unbounded(q, r, t0, Some(t0 + 1e4), true, out)?;

    write_comparisons(out, &rows, &notes, &mut summary)?;
    Ok(summary)
}
