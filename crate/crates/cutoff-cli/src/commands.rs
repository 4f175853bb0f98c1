//! The four subcommands. Each builds a [`Table`] (or a JSON report) and maps
//! library errors onto the exit-code classes.

use std::path::Path;

use cutoff::dmc::{
    optimize_e0_with, random_coding_exponent, sphere_packing_exponent, verify_lagrange_duality,
    ChannelFile, DmcError, OptimizeOptions, SpherePacking,
};
use cutoff::ricean::{
    asymptotic_constant_no_si, bracket_curve, capacity_constant, lower_bound_r0,
    upper_bound_r0_with, BoundPoint, ConstraintKind, DeltaM1Grid, ExponentCurve,
    OutputDensityParams, RiceanError, RiceanParams,
};
use cutoff::sideinfo::{asymptotic_constant_si, si_curve};
use serde_json::{json, Value};
use thiserror::Error;

use crate::output::{emit, write_json, Cell, Table};
use crate::{Constraint, DmcArgs, DualityArgs, RiceanArgs, SideInfoArgs};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: exit 2.
    #[error("{0}")]
    Invalid(String),
    /// A computation failed or a numerical check did not hold: exit 1.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl From<DmcError> for CliError {
    fn from(e: DmcError) -> Self {
        match e {
            DmcError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<RiceanError> for CliError {
    fn from(e: RiceanError) -> Self {
        match e {
            RiceanError::FactorNotPositive { .. }
            | RiceanError::NoFeasibleGridPoint
            | RiceanError::SpecFun(_)
            | RiceanError::Quadrature(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

fn write(table: &Table, out: Option<&Path>) -> Result<(), CliError> {
    emit(table, out).map_err(|e| CliError::Invalid(format!("cannot write output: {e}")))
}

fn write_report(doc: &Value, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => write_json(doc, p).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{}", serde_json::to_string_pretty(doc).expect("JSON values always serialize"));
            Ok(())
        }
    }
}

pub fn dmc(args: &DmcArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.channel)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", args.channel.display())))?;
    let file: ChannelFile =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("malformed channel file: {e}")))?;
    let (w, cost) = file.into_parts()?;
    if !(args.tol > 0.0) {
        return Err(CliError::Invalid(format!("--tol must be positive, got {}", args.tol)));
    }
    let opts = OptimizeOptions {
        gap_tol: args.tol,
        ..OptimizeOptions::default()
    };
    let mut table = Table::new(vec!["quantity", "rho", "rate", "value_nats"]);
    let r0 = optimize_e0_with(1.0, &w, cost.as_ref(), &opts)?;
    table.push(vec!["r0".into(), 1.0.into(), Cell::Empty, r0.value.into()]);
    for &rho in args.rho_grid.values() {
        let r = optimize_e0_with(rho, &w, cost.as_ref(), &opts)?;
        table.push(vec!["e0".into(), rho.into(), Cell::Empty, r.value.into()]);
    }
    let rates: Vec<f64> = match &args.rate_grid {
        Some(g) => g.values().to_vec(),
        None => {
            let top = (w.num_inputs().min(w.num_outputs()) as f64).ln();
            (1..=10).map(|k| top * k as f64 / 10.0).collect()
        }
    };
    for &rate in &rates {
        let er = random_coding_exponent(rate, &w, cost.as_ref())?;
        table.push(vec!["random_coding".into(), er.rho.into(), rate.into(), er.value.into()]);
    }
    // The sphere-packing bound is computed for the unconstrained channel only.
    if cost.is_none() {
        for &rate in rates.iter().filter(|&&r| r > 0.0) {
            let (rho, value) = match sphere_packing_exponent(rate, &w)? {
                SpherePacking::Finite(p) => (Cell::Num(p.rho), p.value),
                SpherePacking::Unbounded { .. } => (Cell::Empty, f64::INFINITY),
            };
            table.push(vec!["sphere_packing".into(), rho, rate.into(), value.into()]);
        }
    }
    table.meta.insert("command".into(), "dmc".into());
    table.meta.insert("inputs".into(), w.num_inputs().into());
    table.meta.insert("outputs".into(), w.num_outputs().into());
    table.meta.insert("cost_constrained".into(), cost.is_some().into());
    table.meta.insert("tilt_r".into(), json!(r0.tilt_r));
    write(&table, args.out.as_deref())
}

// Spot-check laws may sit below the optimum by rounding only.
const POINTWISE_TOL: f64 = 1e-10;

pub fn verify_duality(args: &DualityArgs) -> Result<(), CliError> {
    if !(args.tol > 0.0) {
        return Err(CliError::Invalid(format!("--tol must be positive, got {}", args.tol)));
    }
    let mut reports = Vec::new();
    let mut passed = true;
    for &rho in args.rho_grid.values() {
        let r = verify_lagrange_duality(
            args.inputs as usize,
            args.outputs as usize,
            rho,
            args.trials as usize,
            args.seed,
        )?;
        passed &= r.passes(args.tol, POINTWISE_TOL);
        reports.push(serde_json::to_value(&r).expect("reports serialize"));
    }
    let doc = json!({
        "command": "verify-duality",
        "tol": args.tol,
        "pointwise_tol": POINTWISE_TOL,
        "passed": passed,
        "reports": reports,
    });
    write_report(&doc, args.out.as_deref())?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "a primal/dual gap exceeds {} or a pointwise check fails",
            args.tol
        )))
    }
}

fn constants_table(
    key: &'static str,
    grid: &[f64],
    constants: impl Fn(f64) -> Result<(f64, f64), CliError>,
) -> Result<Table, CliError> {
    let mut table = Table::new(vec![key, "capacity_constant_nats", "cutoff_constant_nats", "gap_nats"]);
    for &x in grid {
        let (cap, cut) = constants(x)?;
        table.push(vec![x.into(), cap.into(), cut.into(), (cap - cut).into()]);
    }
    Ok(table)
}

fn fixed_pair_curve(
    d: f64,
    sigma2: f64,
    kind: ConstraintKind,
    snrs: &[f64],
    delta: f64,
    m1: f64,
) -> Result<ExponentCurve, RiceanError> {
    let constant = asymptotic_constant_no_si(d)?;
    let points = snrs
        .iter()
        .map(|&snr| {
            let p = RiceanParams::from_snr(d, sigma2, snr, kind)?;
            let odp = OutputDensityParams::schedule(p.power(), delta, m1)?;
            Ok(BoundPoint {
                snr,
                lower_bound: lower_bound_r0(&p)?.value,
                upper_bound: upper_bound_r0_with(&p, &odp)?,
                asymptote: snr.ln().ln() + constant,
                delta,
                m1,
            })
        })
        .collect::<Result<Vec<_>, RiceanError>>()?;
    Ok(ExponentCurve { d, sigma2, points })
}

fn check_sandwich(violations: usize) -> Result<(), CliError> {
    if violations == 0 {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{violations} rows have lower bound above upper bound")))
    }
}

pub fn ricean(args: &RiceanArgs) -> Result<(), CliError> {
    if args.figure.is_some() {
        let mut table = constants_table("d", args.d_grid.values(), |d| {
            Ok((capacity_constant(d, 1.0)?, asymptotic_constant_no_si(d)?))
        })?;
        table.meta.insert("command".into(), "ricean".into());
        table.meta.insert("figure".into(), 1.into());
        return write(&table, args.out.as_deref());
    }
    let kind = match args.constraint {
        Constraint::Average => ConstraintKind::Average,
        Constraint::Peak => ConstraintKind::Peak,
    };
    let snrs = args.snr_grid.values();
    let mut table = Table::new(vec!["snr", "lower_nats", "upper_nats", "asymptote_nats", "d", "sigma2"]);
    let mut choices = Vec::new();
    let mut violations = 0;
    for &d in args.d_grid.values() {
        let curve = match (args.delta, args.m1) {
            (Some(delta), Some(m1)) => fixed_pair_curve(d, args.sigma2, kind, snrs, delta, m1)?,
            _ => bracket_curve(d, args.sigma2, kind, snrs, &DeltaM1Grid::default())?,
        };
        for p in &curve.points {
            violations += usize::from(p.lower_bound > p.upper_bound);
            table.push(vec![
                p.snr.into(),
                p.lower_bound.into(),
                p.upper_bound.into(),
                p.asymptote.into(),
                d.into(),
                args.sigma2.into(),
            ]);
            choices.push(json!({ "d": d, "snr": p.snr, "delta": p.delta, "m1": p.m1 }));
        }
    }
    table.meta.insert("command".into(), "ricean".into());
    table.meta.insert("constraint".into(), format!("{:?}", args.constraint).to_lowercase().into());
    table.meta.insert("output_density".into(), Value::Array(choices));
    write(&table, args.out.as_deref())?;
    check_sandwich(violations)
}

pub fn sideinfo(args: &SideInfoArgs) -> Result<(), CliError> {
    if args.figure.is_some() {
        let mut table = constants_table("eps2", args.eps2_grid.values(), |e| {
            Ok((capacity_constant(0.0, e)?, asymptotic_constant_si(e)?))
        })?;
        table.meta.insert("command".into(), "sideinfo".into());
        table.meta.insert("figure".into(), 2.into());
        return write(&table, args.out.as_deref());
    }
    let grid = match (args.delta, args.m1) {
        (Some(delta), Some(m1)) => DeltaM1Grid::new(vec![delta], vec![m1])?,
        _ => DeltaM1Grid::default(),
    };
    let points = si_curve(args.eps2_grid.values(), args.snr_grid.values(), args.sigma2, &grid)?;
    let mut table = Table::new(vec![
        "eps2",
        "snr",
        "lower_nats",
        "upper_nats",
        "asymptote_nats",
        "capacity_constant_nats",
    ]);
    let mut violations = 0;
    for p in &points {
        violations += usize::from(p.lower_bound > p.upper_bound);
        table.push(vec![
            p.eps2.into(),
            p.snr.into(),
            p.lower_bound.into(),
            p.upper_bound.into(),
            p.asymptote.into(),
            p.capacity_constant.into(),
        ]);
    }
    table.meta.insert("command".into(), "sideinfo".into());
    table.meta.insert("sigma2".into(), json!(args.sigma2));
    write(&table, args.out.as_deref())?;
    check_sandwich(violations)
}
