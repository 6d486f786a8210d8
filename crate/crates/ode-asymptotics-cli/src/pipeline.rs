//! The three analysis pipelines behind the subcommands. Each pipeline
//! computes its reports, optionally writes the full artifact set, and
//! returns a [`Summary`] whose lines decide the process exit status.

use anyhow::{Context, Result};

use ode_asymptotics::expr::ExprNode;
use ode_asymptotics::kernels::asymptotic_constants;
use ode_asymptotics::lp::decompose_solution;
use ode_asymptotics::poincare::{
    asymptotic_report, check_f_membership, levinson_data, local_fundamental, FundamentalSolution,
    PoincareProblem,
};
use ode_asymptotics::rhs::{hypothesis_report, CheckStatus, HypothesisReport};
use ode_asymptotics::solver::{domination_report, ode_residual, solve_fixed_point, SolverConfig};
use ode_asymptotics::unbounded::{L1Report, UnboundedProblem};
use crate::config::{Mode, ProblemConfig};
use crate::outputs::{fnum, fshort, OutDir, Summary};

/// Command-line overrides merged over the config's solver section.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub tol: Option<f64>,
    pub t_max: Option<f64>,
    /// When false, only the summary is written (the `report` subcommand).
    pub artifacts: bool,
}

impl RunOptions {
    fn beta(&self, cfg: &ProblemConfig) -> Option<f64> {
        self.beta.or(cfg.solver.beta)
    }
    fn eta(&self, cfg: &ProblemConfig) -> f64 {
        self.eta.or(cfg.solver.eta).unwrap_or(0.25)
    }
    fn tol(&self, cfg: &ProblemConfig) -> f64 {
        self.tol.or(cfg.solver.tol).unwrap_or(1e-9)
    }
    fn t_max(&self, cfg: &ProblemConfig) -> Option<f64> {
        self.t_max.or(cfg.solver.t_max)
    }
}

/// Dispatch a config to its mode's pipeline.
pub fn run_config(cfg: &ProblemConfig, opts: &RunOptions, out: &OutDir) -> Result<Summary> {
    match cfg.mode {
        Mode::Nonlinear3 => run_nonlinear3(cfg, opts, out),
        Mode::Poincare4 => run_poincare(cfg, opts, out),
        Mode::Unbounded4 => {
            let (q, r) = cfg.unbounded4_parts()?;
            run_unbounded(q, r, cfg.t0, opts.t_max(cfg), opts.artifacts, out)
        }
    }
}

fn status_name(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::Indeterminate => "indeterminate",
    }
}

fn write_hypothesis(out: &OutDir, hyp: &HypothesisReport) -> Result<()> {
    let mut text = String::new();
    let mut rows = Vec::new();
    for c in &hyp.checks {
        let (slope, initial, final_value) = match &c.trend {
            Some(t) => (fnum(t.slope), fnum(t.initial), fnum(t.final_value)),
            None => (String::new(), String::new(), String::new()),
        };
        text.push_str(&format!(
            "{:<13} {} - {}\n",
            status_name(c.status),
            c.name,
            c.detail
        ));
        rows.push(vec![
            c.name.replace(',', ";"),
            status_name(c.status).to_string(),
            slope,
            initial,
            final_value,
            c.detail.replace(',', ";"),
        ]);
    }
    out.text("hypothesis.txt", &text)?;
    out.csv(
        "hypothesis.csv",
        "check,status,slope,initial,final,detail",
        rows,
    )
}

// ---------------------------------------------------------------------------
// nonlinear3

/// Fixed-point solve of the third-order integral equation, with hypothesis,
/// envelope, residual, and optional L^p artifacts.
pub fn run_nonlinear3(cfg: &ProblemConfig, opts: &RunOptions, out: &OutDir) -> Result<Summary> {
    let (roots, table) = cfg.nonlinear3_parts()?;
    let tol = opts.tol(cfg);
    let scfg = SolverConfig {
        beta: opts.beta(cfg),
        eta: opts.eta(cfg),
        tol,
        t_max: opts.t_max(cfg),
        nodes_per_efold: cfg.solver.nodes_per_efold.unwrap_or(40.0),
        ..SolverConfig::new(cfg.t0)
    };
    let res = solve_fixed_point(&roots, &table, &scfg).context("fixed-point solve")?;
    let hyp = hypothesis_report(&table, &roots, res.beta, cfg.t0, res.t_max)
        .context("hypothesis report")?;
    let constants = asymptotic_constants(&roots, res.beta).context("kernel constants")?;

    // Measured perturbation size sup_t Σ|Ω_α|, judged against 1/(ς·Â).
    let mut rho_measured = 0.0_f64;
    for i in 0..=400 {
        let t = cfg.t0 + (res.t_max - cfg.t0) * i as f64 / 400.0;
        rho_measured = rho_measured.max(table.rho_sum(t).context("rho sample")?);
    }
    let rho_max = constants.rho_max();
    let rho_admissible = rho_measured < rho_max;

    let envelope = if rho_admissible {
        Some(
            domination_report(
                &res.solution,
                &table,
                &roots,
                &constants,
                rho_measured,
                cfg.t0,
                60,
            )
            .context("envelope domination")?,
        )
    } else {
        None
    };
    let residual = ode_residual(&res.solution, &roots, &table).context("ODE residual")?;

    let mut summary = Summary::new();
    summary.push(
        "hypotheses",
        hyp.acceptable(),
        format!("{} checks; see hypothesis.csv", hyp.checks.len()),
    );
    let contraction_ok = res.diagnostics.ratios.iter().all(|&r| r < 1.0);
    summary.push(
        "contraction",
        contraction_ok,
        format!(
            "{} iterations; max ratio {}",
            res.diagnostics.iterations,
            res.diagnostics
                .ratios
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        ),
    );
    summary.push(
        "self-residual",
        res.diagnostics.self_residual < 10.0 * tol,
        format!(
            "|T(z) - z| = {} vs 10 tol = {}",
            fshort(res.diagnostics.self_residual),
            fshort(10.0 * tol)
        ),
    );
    summary.push(
        "ode-residual",
        residual < 1e-4,
        format!("sup residual {} vs 1e-4", fshort(residual)),
    );
    summary.push(
        "uniqueness",
        res.diagnostics.uniqueness_gap < 100.0 * tol,
        format!(
            "restart gap {} vs 100 tol",
            fshort(res.diagnostics.uniqueness_gap)
        ),
    );
    match &envelope {
        Some(rep) => summary.push(
            "envelope",
            rep.dominated,
            format!(
                "Phi_limit {}; min margin {}",
                fshort(rep.phi_limit),
                fshort(rep.margin)
            ),
        ),
        None => summary.push(
            "envelope",
            false,
            format!(
                "rho {} not below rho_max {}; domination not established",
                fshort(rho_measured),
                fshort(rho_max)
            ),
        ),
    }

    let lp = match &cfg.lp {
        Some(sec) => {
            let dec = decompose_solution(&res.full, &table, &roots, sec.p)
                .map_err(|e| anyhow::anyhow!("L^p decomposition: {e}"))?;
            let gap = dec.reconstruction().distance(&res.full);
            summary.push(
                "lp-reconstruction",
                gap < 1e-8,
                format!("p = {}; m = {}; gap {}", sec.p, dec.m, fshort(gap)),
            );
            Some(dec)
        }
        None => None,
    };

    if opts.artifacts {
        out.csv(
            "solution.csv",
            "t,z,zp,zpp",
            (0..res.solution.len()).map(|i| {
                let (z, zp, zpp) = res.solution.values(i);
                vec![fnum(res.solution.node(i)), fnum(z), fnum(zp), fnum(zpp)]
            }),
        )?;
        out.csv(
            "iterations.csv",
            "iteration,diff,ratio",
            res.diagnostics.diffs.iter().enumerate().map(|(k, &d)| {
                let ratio = res
                    .diagnostics
                    .ratios
                    .get(k.wrapping_sub(1))
                    .map(|&r| fnum(r))
                    .unwrap_or_default();
                vec![(k + 1).to_string(), fnum(d), ratio]
            }),
        )?;
        let mut constants_rows = vec![
            vec!["beta".to_string(), fnum(res.beta)],
            vec!["t_max".to_string(), fnum(res.t_max)],
            vec!["A".to_string(), fnum(constants.a)],
            vec!["A_hat".to_string(), fnum(constants.a_hat)],
            vec!["sigma".to_string(), fnum(constants.sigma)],
            vec!["rho_max".to_string(), fnum(rho_max)],
            vec!["rho_measured".to_string(), fnum(rho_measured)],
            vec!["sup_norm".to_string(), fnum(res.diagnostics.sup_norm)],
            vec![
                "self_residual".to_string(),
                fnum(res.diagnostics.self_residual),
            ],
            vec!["ode_residual".to_string(), fnum(residual)],
        ];
        if let Some(rep) = &envelope {
            constants_rows.push(vec!["phi_limit".to_string(), fnum(rep.phi_limit)]);
            constants_rows.push(vec!["envelope_margin".to_string(), fnum(rep.margin)]);
        }
        out.csv("constants.csv", "name,value", constants_rows)?;
        if let Some(rep) = &envelope {
            out.csv(
                "envelope.csv",
                "n,phi",
                rep.phi
                    .iter()
                    .enumerate()
                    .map(|(n, &p)| vec![(n + 1).to_string(), fnum(p)]),
            )?;
        }
        write_hypothesis(out, &hyp)?;
        if let Some(dec) = &lp {
            out.text("lp_grouping.txt", &(dec.grouping.join("\n") + "\n"))?;
            let m = dec.theta.len();
            let header = {
                let mut h = String::from("t");
                for k in 1..=m {
                    h.push_str(&format!(",theta{k}"));
                }
                h.push_str(",psi");
                h
            };
            out.csv(
                "lp_components.csv",
                &header,
                (0..dec.psi.len()).map(|i| {
                    let mut row = vec![fnum(dec.psi.node(i))];
                    for th in &dec.theta {
                        row.push(fnum(th.values(i).0));
                    }
                    row.push(fnum(dec.psi.values(i).0));
                    row
                }),
            )?;
        }
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// poincare4

/// Per-root reduction analysis of the fourth-order equation: Levinson
/// constants, membership checks, concurrent per-root solves, and the
/// asymptotic-ratio report.
pub fn run_poincare(cfg: &ProblemConfig, opts: &RunOptions, out: &OutDir) -> Result<Summary> {
    let (a, r) = cfg.poincare4_parts()?;
    let problem =
        PoincareProblem::new(a, r.clone(), cfg.t0).context("characteristic quartic")?;
    let eta = opts.eta(cfg);
    let data = levinson_data(problem.lambdas, a[3], a[2], cfg.t0, eta);

    let named_perturbations: Vec<(String, &ExprNode)> = ["r0", "r1", "r2", "r3"]
        .iter()
        .zip(r.iter())
        .filter(|(_, e)| !matches!(e, ExprNode::Const(c) if *c == 0.0))
        .map(|(n, e)| (n.to_string(), e))
        .collect();
    let mut membership = Vec::new();
    for (name, e) in &named_perturbations {
        let checks =
            check_f_membership(&data, e).map_err(|e| anyhow::anyhow!("membership: {e}"))?;
        membership.push((name.clone(), checks));
    }

    let t_max = opts.t_max(cfg).unwrap_or(cfg.t0 + 20.0);
    let sols = solve_roots_concurrently(&problem, t_max)?;
    let p = cfg.lp.as_ref().map(|s| s.p);
    let report = asymptotic_report(&problem, &sols, false, p)
        .map_err(|e| anyhow::anyhow!("asymptotic report: {e}"))?;

    let mut summary = Summary::new();
    summary.push(
        "roots",
        true,
        format!(
            "lambda = [{}]",
            problem
                .lambdas
                .iter()
                .map(|l| format!("{l:.6}"))
                .collect::<Vec<_>>()
                .join("; ")
        ),
    );
    for (name, checks) in &membership {
        let ok = checks.iter().all(|c| c.status != CheckStatus::Fail);
        let worst = checks.iter().map(|c| c.sup_tail).fold(0.0, f64::max);
        summary.push(
            &format!("membership-{name}"),
            ok,
            format!("sup tail {} across roots", fshort(worst)),
        );
    }
    for rr in &report.roots {
        let ratios_ok = rr.ratios.iter().all(|c| c.status != CheckStatus::Fail);
        let final_dev = rr
            .ratios
            .iter()
            .map(|c| *c.deviations.last().unwrap_or(&f64::NAN))
            .fold(0.0, f64::max);
        summary.push(
            &format!("ratios-lambda-{}", rr.lambda),
            ratios_ok,
            format!("final deviation {}", fshort(final_dev)),
        );
        let envelope_detail = if rr.envelope.status == CheckStatus::Indeterminate {
            format!(
                "rho {} exceeds the admissible bound; domination not established",
                fshort(rr.envelope.rho_measured)
            )
        } else {
            format!(
                "Phi_limit {}; margin {}",
                fshort(rr.envelope.phi_limit),
                fshort(rr.envelope.margin)
            )
        };
        summary.push(
            &format!("envelope-lambda-{}", rr.lambda),
            rr.envelope.status != CheckStatus::Fail,
            envelope_detail,
        );
    }
    summary.push(
        "wronskian",
        (report.wronskian_final - 1.0).abs() < 5e-2,
        format!("final ratio {}", fshort(report.wronskian_final)),
    );

    if opts.artifacts {
        out.csv(
            "roots.csv",
            "i,lambda,pi,upsilon,sigma,A_literal,A_hat,F_one,rho,rho_alt",
            data.roots.iter().enumerate().map(|(i, rd)| {
                vec![
                    (i + 1).to_string(),
                    fnum(rd.lambda),
                    fnum(rd.pi),
                    fnum(rd.upsilon),
                    fnum(rd.sigma),
                    fnum(rd.a_literal),
                    fnum(rd.a_hat),
                    fnum(rd.f_one),
                    fnum(rd.rho),
                    fnum(rd.rho_alt),
                ]
            }),
        )?;
        let mut mem_rows = Vec::new();
        for (name, checks) in &membership {
            for c in checks {
                mem_rows.push(vec![
                    name.clone(),
                    fnum(c.lambda),
                    fnum(c.rho),
                    fnum(c.sup_tail),
                    status_name(c.status).to_string(),
                ]);
            }
        }
        out.csv("membership.csv", "expr,lambda,rho,sup_tail,status", mem_rows)?;
        write_ratio_artifacts(out, &report)?;
        write_solution_samples(out, &sols)?;
        if p.is_some() {
            let mut rows = Vec::new();
            for rr in &report.roots {
                for (g, s) in rr.lp_grouping.iter().zip(&rr.lp_component_sups) {
                    rows.push(vec![
                        fnum(rr.lambda),
                        g.replace(',', ";"),
                        fnum(*s),
                    ]);
                }
            }
            out.csv("lp_components.csv", "lambda,component,sup_norm", rows)?;
        }
    }
    Ok(summary)
}

/// Solve the four reduced equations in parallel; files are written by the
/// caller only after every worker has returned.
pub fn solve_roots_concurrently(
    problem: &PoincareProblem,
    t_max: f64,
) -> Result<Vec<FundamentalSolution>> {
    let span = t_max - problem.t0;
    let results: Vec<Result<FundamentalSolution>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..4)
            .map(|i| {
                scope.spawn(move || {
                    local_fundamental(problem, i, problem.t0, span)
                        .map_err(|e| anyhow::anyhow!("root {i}: {e}"))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    results.into_iter().collect()
}

/// ratios.csv and wronskian.csv from an asymptotic report.
pub fn write_ratio_artifacts(
    out: &OutDir,
    report: &ode_asymptotics::poincare::AsymptoticReport,
) -> Result<()> {
    let mut rows = Vec::new();
    for rr in &report.roots {
        for curve in &rr.ratios {
            for (&t, &d) in curve.ts.iter().zip(&curve.deviations) {
                rows.push(vec![
                    fnum(rr.lambda),
                    curve.order.to_string(),
                    fnum(t),
                    fnum(d),
                ]);
            }
        }
    }
    out.csv("ratios.csv", "lambda,k,t,deviation", rows)?;
    out.csv(
        "wronskian.csv",
        "t,ratio",
        report
            .wronskian_ts
            .iter()
            .zip(&report.wronskian_ratios)
            .map(|(&t, &r)| vec![fnum(t), fnum(r)]),
    )
}

/// solutions.csv: log-magnitudes of the four members on a shared grid.
pub fn write_solution_samples(out: &OutDir, sols: &[FundamentalSolution]) -> Result<()> {
    let t_lo = sols.iter().map(|s| s.t_start()).fold(f64::MIN, f64::max);
    let t_hi = sols.iter().map(|s| s.t_end()).fold(f64::MAX, f64::min);
    let n = 200;
    out.csv(
        "solutions.csv",
        "t,log_y1,log_y2,log_y3,log_y4",
        (0..n).map(|i| {
            let t = t_lo + (t_hi - t_lo) * i as f64 / (n - 1) as f64;
            let mut row = vec![fnum(t)];
            for s in sols {
                row.push(fnum(s.log_y(t)));
            }
            row
        }),
    )
}

// ---------------------------------------------------------------------------
// unbounded4

/// Normalizing substitution for growing coefficients: transformed
/// coefficient columns, the hypothesis battery, and the L¹ report.
pub fn run_unbounded(
    q: ExprNode,
    r: ExprNode,
    t0: f64,
    t_end: Option<f64>,
    artifacts: bool,
    out: &OutDir,
) -> Result<Summary> {
    let problem = UnboundedProblem::new(q, r, t0);
    let t_end = t_end.unwrap_or(t0 + 1e4);
    let report = problem
        .l1_hypothesis_check_to(t_end)
        .map_err(|e| anyhow::anyhow!("L1 battery: {e}"))?;

    let mut summary = Summary::new();
    summary.push(
        "q-increasing",
        report.q_increasing != CheckStatus::Fail,
        status_name(report.q_increasing).to_string(),
    );
    summary.push(
        "q-unbounded",
        report.q_unbounded != CheckStatus::Fail,
        status_name(report.q_unbounded).to_string(),
    );
    for item in &report.items {
        summary.push(
            &format!("L1[{}]", item.name),
            item.status != CheckStatus::Fail,
            format!(
                "integral {}; tail share {}",
                fshort(item.total),
                fshort(item.tail_fraction)
            ),
        );
    }

    if artifacts {
        write_unbounded_artifacts(&problem, &report, t_end, out)?;
    }
    Ok(summary)
}

fn sample_grid(t0: f64, t_end: f64, n: usize) -> Vec<f64> {
    // Logarithmic spacing of t − t0 + 1 so both the boundary layer near t0
    // and the far field are resolved.
    (0..n)
        .map(|i| t0 + ((t_end - t0 + 1.0).ln() * i as f64 / (n - 1) as f64).exp() - 1.0)
        .collect()
}

fn write_unbounded_artifacts(
    problem: &UnboundedProblem,
    report: &L1Report,
    t_end: f64,
    out: &OutDir,
) -> Result<()> {
    use ode_asymptotics::unbounded::{
        CORRECTION_WEIGHTS, SOLUTION_EXPONENTS, TRANSFORMED_CONSTANT_PART, TRANSFORMED_ROOTS,
    };

    let ts = sample_grid(problem.t0, t_end.min(problem.t0 + 1e4), 64);
    let mut rows = Vec::new();
    for &t in &ts {
        let q = problem.q_value(t).map_err(|e| anyhow::anyhow!("{e}"))?;
        let rc = problem
            .transform_coefficients(t)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        rows.push(vec![
            fnum(t),
            fnum(q),
            fnum(rc[0]),
            fnum(rc[1]),
            fnum(rc[2]),
            fnum(rc[3]),
        ]);
    }
    out.csv("transform.csv", "t,q,r0,r1,r2,r3", rows)?;

    let names: Vec<String> = problem
        .battery_values(ts[0])
        .map_err(|e| anyhow::anyhow!("{e}"))?
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    let header = format!("t,{}", names.join(","));
    let mut rows = Vec::new();
    for &t in &ts {
        let vals = problem
            .battery_values(t)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut row = vec![fnum(t)];
        row.extend(vals.into_iter().map(|(_, v)| fnum(v)));
        rows.push(row);
    }
    out.csv("battery.csv", &header, rows)?;

    out.csv(
        "l1_report.csv",
        "quantity,integral,tail_fraction,slope,status",
        report
            .items
            .iter()
            .map(|it| {
                vec![
                    it.name.clone(),
                    fnum(it.total),
                    fnum(it.tail_fraction),
                    fnum(it.trend.slope),
                    status_name(it.status).to_string(),
                ]
            })
            .chain([
                vec![
                    "q increasing".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    status_name(report.q_increasing).to_string(),
                ],
                vec![
                    "q unbounded".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    status_name(report.q_unbounded).to_string(),
                ],
            ]),
    )?;

    let mut const_rows = Vec::new();
    for i in 0..4 {
        const_rows.push(vec![
            format!("a{i}"),
            fnum(TRANSFORMED_CONSTANT_PART[i]),
        ]);
    }
    for (i, &c) in TRANSFORMED_ROOTS.iter().enumerate() {
        const_rows.push(vec![format!("root_c{}", i + 1), fnum(c)]);
    }
    for (i, &e) in SOLUTION_EXPONENTS.iter().enumerate() {
        const_rows.push(vec![format!("exponent_y{}", i + 1), fnum(e)]);
    }
    for (i, row) in CORRECTION_WEIGHTS.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            const_rows.push(vec![format!("weight_y{}_r{}", i + 1, j), fnum(w)]);
        }
    }
    out.csv("constants.csv", "name,value", const_rows)?;
    Ok(())
}
