//! Batch command front end: JSON configs in, JSON reports and CSV tables out.
//!
//! Subcommands: `verdict`, `verify`, `sweep`, `characteristic`, `operator`,
//! `witness`, `decay`. Exit codes: 0 success, 2 config or precondition
//! error, 3 consistency disagreement from `verify`.

mod config;
mod report;

pub use config::*;
pub use report::*;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num::{Signed, Zero};
use serde_json::json;

use crate::characteristic::{
    choose_r, eccentricity_decay_fit, rect_characteristic, sup_search, CharError, SearchLattice,
    SupSearch,
};
use crate::operator::{
    apply_direct, apply_separable, cone_cover_check, per_cone_ratio_profile, product_bump,
    weighted_ratio, write_grid_function, Grid,
};
use crate::param::{decay_range_interior, ConstraintId, Instance, Status};
use crate::quad::{QuadConfig, Rectangle};
use crate::rational::{parse_rational, rat, rat_one, rational_to_string, Rational};
use crate::witness::{build_family, run_blowup, BlowupVerdict, WitnessCase, WitnessError};

#[derive(Parser, Debug)]
#[command(name = "steinweiss", version, about = "Weighted norm inequality verifier for product-space fractional integrals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact constraint ledger and boundedness verdict.
    Verdict(CommonArgs),
    /// Cross-validate the verdict numerically; exit 3 on disagreement.
    Verify(VerifyArgs),
    /// Verdict table over a rational lattice of weight powers.
    Sweep(CommonArgs),
    /// Per-rectangle characteristic and supremum search.
    Characteristic(CommonArgs),
    /// Discretized operator identities and weighted norm ratio.
    Operator(CommonArgs),
    /// Blow-up witness hunt for every violated constraint.
    Witness(CommonArgs),
    /// Bump selection and eccentricity decay fit.
    Decay(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for report and CSV outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Monte Carlo / sampling seed (echoed in the report).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative quadrature tolerance override.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Rayon thread count (results are thread-count independent).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Test hook: corrupt the characteristic trace to force a disagreement.
    #[arg(long, hide = true)]
    pub corrupt_characteristic: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn precondition_err(e: impl std::fmt::Display) -> CliError {
    CliError::Precondition(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// Runs a parsed command line; returns the report and the process exit code.
pub fn run(cli: Cli) -> (Option<Report>, i32) {
    let common = match &cli.command {
        Command::Verdict(c)
        | Command::Sweep(c)
        | Command::Characteristic(c)
        | Command::Operator(c)
        | Command::Witness(c)
        | Command::Decay(c) => c.clone(),
        Command::Verify(v) => v.common.clone(),
    };
    if let Some(n) = common.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let outcome = dispatch(&cli, &common);
    match outcome {
        Ok((report, code)) => {
            if let Some(dir) = &common.out {
                if let Err(e) = write_report(&report, dir) {
                    eprintln!("error: {e}");
                    return (Some(report), 2);
                }
            }
            (Some(report), code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            (None, e.exit_code())
        }
    }
}

fn dispatch(cli: &Cli, common: &CommonArgs) -> Result<(Report, i32), CliError> {
    let run_cfg = load_config(&common.config)?;
    let inst = Instance::from_spec(&run_cfg.instance).map_err(config_err)?;
    let seed = common.seed.or(run_cfg.seed).unwrap_or(0);
    let quad_cfg = run_cfg.quad_config(seed, common.tol);
    let ctx = Ctx {
        run_cfg: &run_cfg,
        inst,
        seed,
        quad_cfg,
        out: common.out.as_deref(),
    };
    match &cli.command {
        Command::Verdict(_) => cmd_verdict(&ctx).map(|r| (r, 0)),
        Command::Sweep(_) => cmd_sweep(&ctx).map(|r| (r, 0)),
        Command::Characteristic(_) => cmd_characteristic(&ctx).map(|r| (r, 0)),
        Command::Operator(_) => cmd_operator(&ctx).map(|r| (r, 0)),
        Command::Witness(_) => cmd_witness(&ctx).map(|r| (r, 0)),
        Command::Decay(_) => cmd_decay(&ctx).map(|r| (r, 0)),
        Command::Verify(v) => cmd_verify(&ctx, v.corrupt_characteristic),
    }
}

struct Ctx<'a> {
    run_cfg: &'a RunConfig,
    inst: Instance,
    seed: u64,
    quad_cfg: QuadConfig,
    out: Option<&'a Path>,
}

impl Ctx<'_> {
    fn report(&self, command: &str, body: serde_json::Value) -> Report {
        Report::new(command, self.seed, self.run_cfg, body)
    }
}

// ---------------------------------------------------------------------------
// verdict
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct LedgerRow {
    constraint: String,
    value: String,
    bound: String,
    relation: &'static str,
    margin: String,
    status: &'static str,
}

fn ledger_row(
    constraint: ConstraintId,
    value: Rational,
    bound: Rational,
    relation: &'static str,
    strict: bool,
) -> LedgerRow {
    let margin = bound.clone() - &value;
    let status = match relation {
        "=" => {
            if value == bound {
                "exact"
            } else {
                "violated"
            }
        }
        _ => {
            if margin.is_positive() {
                "ok"
            } else if margin.is_zero() {
                if strict {
                    "binding"
                } else {
                    "ok (binding)"
                }
            } else {
                "violated"
            }
        }
    };
    LedgerRow {
        constraint: constraint.to_string(),
        value: rational_to_string(&value),
        bound: rational_to_string(&bound),
        relation,
        margin: rational_to_string(&margin),
        status,
    }
}

fn constraint_ledger(inst: &Instance) -> Vec<LedgerRow> {
    use crate::rational::rat_int;
    let mut rows = Vec::new();
    let n = rat_int(inst.space().total_dim() as i64);
    rows.push(ledger_row(
        ConstraintId::Formula,
        inst.check_formula().residual,
        rat(0, 1),
        "=",
        false,
    ));
    rows.push(ledger_row(
        ConstraintId::GammaIntegrability,
        inst.gamma().clone(),
        n.clone() * inst.q().recip(),
        "<",
        true,
    ));
    rows.push(ledger_row(
        ConstraintId::DeltaIntegrability,
        inst.delta().clone(),
        n * (rat_one() - inst.p().recip()),
        "<",
        true,
    ));
    rows.push(ledger_row(
        ConstraintId::NonnegativePowerSum,
        -(inst.gamma() + inst.delta()),
        rat(0, 1),
        "<=",
        false,
    ));
    for i in 0..inst.space().factors() {
        rows.push(ledger_row(
            ConstraintId::Subbalance(i),
            -inst.factor_excess(i),
            rat(0, 1),
            "<=",
            false,
        ));
    }
    let g = inst.gamma();
    let d = inst.delta();
    if !g.is_negative() && !d.is_positive() {
        for i in 0..inst.space().factors() {
            rows.push(ledger_row(
                ConstraintId::DeltaDominates(i),
                inst.alpha(i) - inst.dim_over_p(i),
                d.clone(),
                "<",
                true,
            ));
        }
    }
    if !g.is_positive() && !d.is_negative() {
        for i in 0..inst.space().factors() {
            rows.push(ledger_row(
                ConstraintId::GammaDominates(i),
                inst.alpha(i) - inst.dim_times_q_conj(i),
                g.clone(),
                "<",
                true,
            ));
        }
    }
    if g.is_positive() && d.is_positive() {
        let (u, v) = inst.subsets_uv();
        let u_sum = u.iter().fold(rat(0, 1), |acc, &i| {
            acc + inst.alpha(i) - inst.dim_over_p(i)
        });
        let v_sum = v.iter().fold(rat(0, 1), |acc, &i| {
            acc + inst.alpha(i) - inst.dim_times_q_conj(i)
        });
        rows.push(ledger_row(
            ConstraintId::SubsetSumDelta,
            u_sum,
            d.clone(),
            "<",
            true,
        ));
        rows.push(ledger_row(
            ConstraintId::SubsetSumGamma,
            v_sum,
            g.clone(),
            "<",
            true,
        ));
    }
    rows
}

fn endpoint_certificate(inst: &Instance) -> Option<serde_json::Value> {
    for eps in [rat(1, 100), rat(1, 400), rat(1, 1600), rat(1, 6400)] {
        match inst.perturb_endpoints(&eps) {
            Ok(p) => {
                let statement = if p.both_bounded {
                    "bounded-by-interpolation (both neighbors Bounded; \
                     unverified numerically at the endpoint)"
                } else {
                    "one-sided: a binding constraint splits under the shift"
                };
                return Some(json!({
                    "eps": rational_to_string(&eps),
                    "minus": {
                        "p": rational_to_string(p.minus.p()),
                        "q": rational_to_string(p.minus.q()),
                        "status": p.minus_verdict.status,
                    },
                    "plus": {
                        "p": rational_to_string(p.plus.p()),
                        "q": rational_to_string(p.plus.q()),
                        "status": p.plus_verdict.status,
                    },
                    "both_bounded": p.both_bounded,
                    "statement": statement,
                }));
            }
            Err(crate::param::ParamError::EpsTooLarge { .. }) => continue,
            Err(_) => return None,
        }
    }
    None
}

fn cmd_verdict(ctx: &Ctx) -> Result<Report, CliError> {
    let verdict = ctx.inst.verdict();
    let ledger = constraint_ledger(&ctx.inst);
    let (u, v) = ctx.inst.subsets_uv();
    let mut body = json!({
        "verdict": verdict,
        "ledger": serde_json::to_value(&ledger).map_err(io_err)?,
        "subsets": {"u": u, "v": v},
        "case": ctx.inst.case_tag(),
    });
    if verdict.status == Status::Endpoint {
        if let Some(cert) = endpoint_certificate(&ctx.inst) {
            body["endpoint_perturbation"] = cert;
        }
    }
    Ok(ctx.report("verdict", body))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn rational_range(range: &RangeSpec) -> Result<Vec<Rational>, CliError> {
    let min = parse_rational(&range.min).map_err(config_err)?;
    let max = parse_rational(&range.max).map_err(config_err)?;
    let step = parse_rational(&range.step).map_err(config_err)?;
    if !step.is_positive() || min > max {
        return Err(CliError::Config(format!(
            "empty lattice: [{}, {}] step {}",
            range.min, range.max, range.step
        )));
    }
    let mut out = Vec::new();
    let mut v = min;
    while v <= max {
        out.push(v.clone());
        v += &step;
    }
    Ok(out)
}

fn cmd_sweep(ctx: &Ctx) -> Result<Report, CliError> {
    let settings = ctx
        .run_cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep settings missing".into()))?;
    let gammas = rational_range(&settings.gamma)?;
    let deltas = rational_range(&settings.delta)?;

    let mut rows = Vec::new();
    let mut csv = String::from("gamma,delta,status,case,violations,binding");
    if settings.dual_column {
        csv.push_str(",dual_status");
    }
    csv.push('\n');
    for g in &gammas {
        for d in &deltas {
            let inst = Instance::new(
                ctx.inst.space().dims().to_vec(),
                ctx.inst.alphas().to_vec(),
                ctx.inst.p().clone(),
                ctx.inst.q().clone(),
                g.clone(),
                d.clone(),
            )
            .map_err(config_err)?;
            let verdict = inst.verdict();
            let violations: Vec<String> =
                verdict.violations.iter().map(|c| c.to_string()).collect();
            let binding: Vec<String> = verdict.binding.iter().map(|c| c.to_string()).collect();
            csv.push_str(&format!(
                "{},{},{:?},{:?},{},{}",
                rational_to_string(g),
                rational_to_string(d),
                verdict.status,
                verdict.case,
                violations.join(";"),
                binding.join(";"),
            ));
            let dual_status = if settings.dual_column {
                let ds = inst.dual().verdict().status;
                csv.push_str(&format!(",{ds:?}"));
                Some(ds)
            } else {
                None
            };
            csv.push('\n');
            rows.push(json!({
                "gamma": rational_to_string(g),
                "delta": rational_to_string(d),
                "status": verdict.status,
                "case": verdict.case,
                "violations": violations,
                "binding": binding,
                "dual_status": dual_status,
            }));
        }
    }
    if let Some(dir) = ctx.out {
        std::fs::create_dir_all(dir).map_err(io_err)?;
        std::fs::write(dir.join("sweep.csv"), &csv).map_err(io_err)?;
    }
    Ok(ctx.report(
        "sweep",
        json!({
            "rows": rows.len(),
            "gamma_count": gammas.len(),
            "delta_count": deltas.len(),
            "table": rows,
        }),
    ))
}

// ---------------------------------------------------------------------------
// characteristic
// ---------------------------------------------------------------------------

fn config_rect(ctx: &Ctx) -> Result<Rectangle, CliError> {
    match &ctx.run_cfg.rect {
        Some(spec) => spec.build(ctx.inst.space()).map_err(config_err),
        None => Rectangle::centered_cubes(
            ctx.inst.space(),
            &vec![1.0; ctx.inst.space().factors()],
        )
        .map_err(config_err),
    }
}

fn bump_parameter(ctx: &Ctx) -> Result<Rational, CliError> {
    match ctx.run_cfg.r.as_deref() {
        None => Ok(rat_one()),
        Some("auto") => choose_r(&ctx.inst).map_err(precondition_err),
        Some(raw) => {
            let r = parse_rational(raw).map_err(config_err)?;
            if r < rat_one() {
                return Err(CliError::Config(format!("r = {raw} must be >= 1")));
            }
            Ok(r)
        }
    }
}

fn sup_csv(n: usize) -> String {
    let mut csv = String::new();
    for i in 0..n {
        csv.push_str(&format!("side_{i},"));
    }
    csv.push_str("center_factor,center_offset,r,value,w_omega,w_sigma,geometry\n");
    csv
}

fn sup_csv_rows(csv: &mut String, search: &SupSearch, r: &Rational) {
    for s in &search.trace {
        for l in &s.log_sides {
            csv.push_str(&format!("{},", 2f64.powi(*l)));
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.center.factor.map(|f| f.to_string()).unwrap_or_default(),
            s.center.offset,
            rational_to_string(r),
            s.value,
            s.w_omega,
            s.w_sigma,
            s.geometry,
        ));
    }
}

fn cmd_characteristic(ctx: &Ctx) -> Result<Report, CliError> {
    let r = bump_parameter(ctx)?;
    let rect = config_rect(ctx)?;
    let rect_report =
        rect_characteristic(&ctx.inst, &rect, &r, &ctx.quad_cfg).map_err(precondition_err)?;
    let lattice = ctx.run_cfg.lattice.clone().unwrap_or_default();
    let search = sup_search(&ctx.inst, &r, &lattice, &ctx.quad_cfg).map_err(precondition_err)?;
    if let Some(dir) = ctx.out {
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let mut csv = sup_csv(ctx.inst.space().factors());
        sup_csv_rows(&mut csv, &search, &r);
        std::fs::write(dir.join("characteristic.csv"), csv).map_err(io_err)?;
    }
    let trace_len = search.trace.len();
    Ok(ctx.report(
        "characteristic",
        json!({
            "rect_report": rect_report,
            "sup": {
                "value": search.sup,
                "argmax": search.argmax,
                "quotiented": search.quotiented,
                "unbounded_suspected": search.unbounded_suspected,
                "growth_direction": search.growth_direction,
                "lattice_points": trace_len,
            },
        }),
    ))
}

// ---------------------------------------------------------------------------
// operator
// ---------------------------------------------------------------------------

fn cmd_operator(ctx: &Ctx) -> Result<Report, CliError> {
    let settings = ctx.run_cfg.grid.clone().unwrap_or_default();
    let grid = settings.build(ctx.inst.space()).map_err(config_err)?;

    // Identity checks on a small fixed grid keep the direct route cheap.
    let small = Grid::offset(ctx.inst.space(), 16, settings.extent.min(4.0))
        .map_err(precondition_err)?;
    let probe = product_bump(&small, settings.extent.min(4.0) * 0.5).map_err(precondition_err)?;
    let direct = apply_direct(&probe, &ctx.inst).map_err(precondition_err)?;
    let separable = apply_separable(&probe, &ctx.inst).map_err(precondition_err)?;
    let max_rel_dev = direct
        .values()
        .iter()
        .zip(separable.values())
        .map(|(a, b)| (a - b).abs() / a.abs().max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    let g2 = product_bump(&small, settings.extent.min(4.0) * 0.25).map_err(precondition_err)?;
    let ig = apply_separable(&g2, &ctx.inst).map_err(precondition_err)?;
    let cell = small.cell_volume();
    let pair_a: f64 = g2
        .values()
        .iter()
        .zip(direct.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * cell;
    let pair_b: f64 = probe
        .values()
        .iter()
        .zip(ig.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * cell;
    let self_adjoint_rel = (pair_a - pair_b).abs() / pair_a.abs().max(f64::MIN_POSITIVE);
    let cover = cone_cover_check(&small).map_err(precondition_err)?;

    // Ratio on the configured grid.
    let f = product_bump(&grid, settings.bump_width).map_err(precondition_err)?;
    let ratio = weighted_ratio(&f, &ctx.inst).map_err(precondition_err)?;

    // Per-cone ratio profile on a small grid (the cone-restricted sums are
    // quadratic in the point count).
    let cone_grid = Grid::offset(ctx.inst.space(), 48, settings.extent.min(4.0))
        .map_err(precondition_err)?;
    let cone_family = vec![
        product_bump(&cone_grid, 1.0).map_err(precondition_err)?,
        product_bump(&cone_grid, settings.extent.min(4.0) * 0.75).map_err(precondition_err)?,
    ];
    let profile = per_cone_ratio_profile(&cone_family, &ctx.inst, 0, 6).map_err(precondition_err)?;
    if let Some(dir) = ctx.out {
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let image = apply_separable(&f, &ctx.inst).map_err(precondition_err)?;
        write_grid_function(&image, &dir.join("image.bin"), &dir.join("image.json"))
            .map_err(io_err)?;
        let mut csv = String::from("k,ratio\n");
        for (k, v) in profile.rungs.iter().enumerate() {
            if let Some(v) = v {
                csv.push_str(&format!("{k},{v}\n"));
            }
        }
        std::fs::write(dir.join("ratio_profile.csv"), csv).map_err(io_err)?;
    }
    Ok(ctx.report(
        "operator",
        json!({
            "grid": {"points": settings.points, "extent": settings.extent, "aligned": settings.aligned},
            "separable_vs_direct_max_rel": max_rel_dev,
            "self_adjoint_rel": self_adjoint_rel,
            "cone_cover": cover,
            "ratio": ratio,
            "cone_profile": profile,
        }),
    ))
}

// ---------------------------------------------------------------------------
// witness
// ---------------------------------------------------------------------------

fn witness_rows(
    ctx: &Ctx,
    k_max: u32,
) -> Result<(Vec<serde_json::Value>, bool, String), CliError> {
    let verdict = ctx.inst.verdict();
    let mut rows = Vec::new();
    let mut any_blowup = false;
    let mut csv = String::from("violation,case,rung,value\n");
    for violation in &verdict.violations {
        let Some(case) = WitnessCase::for_violation(*violation) else {
            rows.push(json!({
                "violation": violation.to_string(),
                "note": "no rectangle family; the weight average itself diverges",
            }));
            continue;
        };
        match build_family(&ctx.inst, case.clone(), k_max) {
            Ok(family) => {
                let report = run_blowup(&ctx.inst, &family, &rat_one(), &ctx.quad_cfg);
                any_blowup |= report.verdict == BlowupVerdict::BlowUp;
                for (k, v) in report.values.iter().enumerate() {
                    if let Some(v) = v {
                        csv.push_str(&format!(
                            "{},{:?},{},{}\n",
                            violation, case, k, v
                        ));
                    }
                }
                rows.push(json!({
                    "violation": violation.to_string(),
                    "case": case,
                    "predicted_exponent": rational_to_string(&family.predicted_exponent),
                    "fitted_exponent": report.c_hat,
                    "stderr": report.stderr,
                    "growth_ratio": report.growth_ratio,
                    "verdict": report.verdict,
                }));
            }
            Err(WitnessError::NotAWitness { reason }) => {
                rows.push(json!({
                    "violation": violation.to_string(),
                    "case": case,
                    "note": format!("family not constructible: {reason}"),
                }));
            }
            Err(e) => return Err(precondition_err(e)),
        }
    }
    Ok((rows, any_blowup, csv))
}

fn cmd_witness(ctx: &Ctx) -> Result<Report, CliError> {
    let k_max = ctx
        .run_cfg
        .witness
        .as_ref()
        .map(|w| w.k_max)
        .unwrap_or(10);
    let verdict = ctx.inst.verdict();
    let (rows, any_blowup, csv) = witness_rows(ctx, k_max)?;
    if let Some(dir) = ctx.out {
        std::fs::create_dir_all(dir).map_err(io_err)?;
        std::fs::write(dir.join("witness_rungs.csv"), csv).map_err(io_err)?;
    }
    Ok(ctx.report(
        "witness",
        json!({
            "verdict": verdict,
            "families": rows,
            "any_blowup": any_blowup,
        }),
    ))
}

// ---------------------------------------------------------------------------
// decay
// ---------------------------------------------------------------------------

fn default_pivot(inst: &Instance) -> usize {
    (0..inst.space().factors())
        .max_by(|&a, &b| {
            inst.factor_excess(a)
                .partial_cmp(&inst.factor_excess(b))
                .unwrap()
        })
        .unwrap_or(0)
}

fn cmd_decay(ctx: &Ctx) -> Result<Report, CliError> {
    let settings = ctx.run_cfg.decay.clone().unwrap_or_default();
    let r = match ctx.run_cfg.r.as_deref() {
        None | Some("auto") => choose_r(&ctx.inst).map_err(precondition_err)?,
        Some(raw) => parse_rational(raw).map_err(config_err)?,
    };
    let pivot = settings.pivot.unwrap_or_else(|| default_pivot(&ctx.inst));
    let lattice = ctx.run_cfg.lattice.clone().unwrap_or_default();
    let fit = eccentricity_decay_fit(
        &ctx.inst,
        pivot,
        &r,
        settings.k_max,
        &lattice,
        &ctx.quad_cfg,
    )
    .map_err(precondition_err)?;
    if let Some(dir) = ctx.out {
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let mut csv = String::from("k,sum_t,value\n");
        for (k, rung) in fit.rungs.iter().enumerate() {
            csv.push_str(&format!("{},{},{}\n", k, rung.sum_t, rung.value));
        }
        std::fs::write(dir.join("decay_rungs.csv"), csv).map_err(io_err)?;
    }
    Ok(ctx.report("decay", serde_json::to_value(&fit).map_err(io_err)?))
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(serde::Serialize, Clone)]
pub struct ConsistencyFlag {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub agree: bool,
}

fn flag(name: &str, expected: impl Into<String>, observed: impl Into<String>, agree: bool) -> ConsistencyFlag {
    ConsistencyFlag {
        name: name.to_string(),
        expected: expected.into(),
        observed: observed.into(),
        agree,
    }
}

fn cmd_verify(ctx: &Ctx, corrupt: bool) -> Result<(Report, i32), CliError> {
    let settings = ctx.run_cfg.verify.clone().unwrap_or_default();
    // Desk-scale envelope: the lattice sweeps and grid passes below are
    // sized for small total dimension.
    if ctx.inst.space().total_dim() > 4 {
        return Err(CliError::Precondition(format!(
            "verify is desk-scale: total dimension {} exceeds 4",
            ctx.inst.space().total_dim()
        )));
    }
    if settings.ratio_points > 1024 {
        return Err(CliError::Precondition(
            "verify ratio grids are capped at 1024 points per factor".into(),
        ));
    }
    let verdict = ctx.inst.verdict();
    let mut flags: Vec<ConsistencyFlag> = Vec::new();
    let mut body = json!({"verdict": verdict});

    // Condition-1 proxy: supremum search over the lattice.
    let lattice = ctx.run_cfg.lattice.clone().unwrap_or(SearchLattice {
        log2_side_min: -10,
        log2_side_max: 10,
        center_offsets: vec![1.0, 4.0, 16.0],
    });
    let integrability_violated = verdict.violations.iter().any(|v| {
        matches!(
            v,
            ConstraintId::GammaIntegrability | ConstraintId::DeltaIntegrability
        )
    });
    if integrability_violated {
        match sup_search(&ctx.inst, &rat_one(), &lattice, &ctx.quad_cfg) {
            Err(CharError::Precondition(msg)) => {
                flags.push(flag(
                    "characteristic-divergent",
                    "weight average diverges",
                    msg,
                    true,
                ));
            }
            Ok(_) | Err(_) => {
                flags.push(flag(
                    "characteristic-divergent",
                    "weight average diverges",
                    "search unexpectedly succeeded",
                    false,
                ));
            }
        }
    } else {
        let mut search =
            sup_search(&ctx.inst, &rat_one(), &lattice, &ctx.quad_cfg).map_err(precondition_err)?;
        if corrupt {
            // Test hook: inject a blatant eccentricity drift into the trace
            // and redo the growth detection on the corrupted values.
            for s in search.trace.iter_mut() {
                let drift: i32 = s.log_sides.iter().map(|l| l.abs()).sum();
                s.value *= 2f64.powi(drift);
            }
            let sup = search
                .trace
                .iter()
                .map(|s| s.value)
                .fold(f64::NEG_INFINITY, f64::max);
            let corrupted = crate::characteristic::sup_search_growth_for_tests(
                &search.trace,
                sup,
                &lattice,
                search.quotiented,
            );
            search.unbounded_suspected = corrupted.0;
            search.growth_direction = corrupted.1;
            search.sup = sup;
        }
        match verdict.status {
            Status::Bounded => flags.push(flag(
                "sup-no-growth",
                "no growth at lattice edges",
                if search.unbounded_suspected {
                    format!(
                        "growth toward {}",
                        search.growth_direction.clone().unwrap_or_default()
                    )
                } else {
                    "no growth".to_string()
                },
                !search.unbounded_suspected,
            )),
            Status::Unbounded | Status::Endpoint => {
                // Growth may or may not be visible on the lattice; the
                // witness hunt below is the decisive check.
            }
        }
        body["sup"] = json!({
            "value": search.sup,
            "quotiented": search.quotiented,
            "unbounded_suspected": search.unbounded_suspected,
            "growth_direction": search.growth_direction,
        });
    }

    match verdict.status {
        Status::Bounded => {
            // Operator ratios over the dilated bump family.
            let grid = Grid::offset(
                ctx.inst.space(),
                settings.ratio_points,
                settings.ratio_extent,
            )
            .map_err(precondition_err)?;
            let mut ratios = Vec::new();
            for k in -3i32..=3 {
                let width = 2f64.powi(k);
                let f = product_bump(&grid, width).map_err(precondition_err)?;
                let r = weighted_ratio(&f, &ctx.inst).map_err(precondition_err)?;
                ratios.push(json!({"dilation": width, "ratio": r.ratio}));
            }
            let values: Vec<f64> = ratios
                .iter()
                .map(|r| r["ratio"].as_f64().unwrap())
                .collect();
            let max = values.iter().cloned().fold(f64::MIN, f64::max);
            let min = values.iter().cloned().fold(f64::MAX, f64::min);
            let variation = max / min - 1.0;
            flags.push(flag(
                "ratio-stable",
                format!("variation < {}", settings.max_ratio_variation),
                format!("variation {variation:.4}"),
                variation < settings.max_ratio_variation,
            ));
            body["operator_ratios"] = json!({
                "family": ratios,
                "variation": variation,
            });

            // Eccentricity decay when the decay bound applies.
            let strict = ctx.inst.strict_subbalance().iter().all(|f| f.strict);
            if strict && decay_range_interior(&ctx.inst) && ctx.inst.space().factors() >= 2 {
                let r = choose_r(&ctx.inst).map_err(precondition_err)?;
                let fit = eccentricity_decay_fit(
                    &ctx.inst,
                    default_pivot(&ctx.inst),
                    &r,
                    settings.decay_k_max,
                    &SearchLattice::default(),
                    &ctx.quad_cfg,
                )
                .map_err(precondition_err)?;
                flags.push(flag(
                    "decay-positive",
                    "eps_hat > 0 and eps_hat > 2 stderr",
                    format!("eps_hat {} stderr {}", fit.eps_hat, fit.stderr),
                    fit.eps_hat > 0.0 && fit.eps_hat > 2.0 * fit.stderr,
                ));
                body["decay"] = serde_json::to_value(&fit).map_err(io_err)?;
            }
        }
        Status::Unbounded => {
            if !integrability_violated {
                let (rows, any_blowup, _) = witness_rows(ctx, settings.witness_k_max)?;
                flags.push(flag(
                    "blowup-witness",
                    "at least one keyed family blows up",
                    if any_blowup {
                        "blow-up detected"
                    } else {
                        "no blow-up found"
                    },
                    any_blowup,
                ));
                body["witnesses"] = json!(rows);
            }
        }
        Status::Endpoint => {
            if let Some(cert) = endpoint_certificate(&ctx.inst) {
                body["endpoint_perturbation"] = cert;
            }
        }
    }

    let all_agree = flags.iter().all(|f| f.agree);
    let summary = ConsistencySummary {
        flags: flags.clone(),
        all_agree,
    };
    let mut report = ctx.report("verify", body);
    report.consistency = Some(summary);
    let code = if all_agree { 0 } else { 3 };
    Ok((report, code))
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_report(report: &Report, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let json = serde_json::to_string_pretty(report).map_err(io_err)?;
    std::fs::write(dir.join("report.json"), json).map_err(io_err)?;
    Ok(())
}
