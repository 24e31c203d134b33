//! Scenario execution: concurrent solves, ordered deterministic reports.

use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use exbound::bonus::{bonus_numeric_oracle, bonus_symbolic, DEFAULT_DT_LADDER};
use exbound::boundary::{
    asian_ratio_boundary, british_boundary, condor_boundary, extract_boundary, shout_boundary,
    vanilla_boundary, BoundarySet,
};
use exbound::error::Error;
use exbound::market::{DerivativeKind, DerivativeSpec, MarketParams, OptionSide};
use exbound::psor::{verify_against_analytic, BoundaryComparison, PsorConfig};

use crate::report::{
    boundary_cell, boundary_csv, fmt_percent, fmt_sig, markdown_table, profile_csv, strike_cells,
    verify_csv, ProfileRow,
};
use crate::scenario::{grid_points, OutputKind, Scenario};

/// Default relative tolerance for boundary verification.
pub const DEFAULT_REL_TOL: f64 = 5e-4;

/// Output sink and parallelism for a run.
pub struct RunConfig {
    pub out_dir: Option<PathBuf>,
    pub workers: usize,
}

/// Aggregated result of a run: the markdown summary, per-scenario
/// failures, and the overall verdict.
pub struct RunSummary {
    pub markdown: String,
    pub failures: Vec<String>,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Maps each item with up to `workers` threads, preserving order.
fn map_concurrently<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let workers = workers.max(1).min(items.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().expect("no panics while mapping")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("mapping finished")
        .into_iter()
        .map(|r| r.expect("every index visited"))
        .collect()
}

fn write_artifact(dir: &Option<PathBuf>, name: &str, content: &str) -> Result<(), String> {
    let Some(dir) = dir else { return Ok(()) };
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// The closed-form boundary for any catalogue spec, using the dedicated
/// formula where one exists and the generic extraction otherwise.
pub fn analytic_boundary(
    spec: &DerivativeSpec,
    params: &MarketParams,
) -> Result<BoundarySet, Error> {
    match &spec.kind {
        DerivativeKind::VanillaCall { strike } => {
            vanilla_boundary(params, OptionSide::Call, *strike)
        }
        DerivativeKind::VanillaPut { strike } => vanilla_boundary(params, OptionSide::Put, *strike),
        DerivativeKind::Strategy { .. } => match spec.condor_strikes() {
            Some(strikes) => condor_boundary(params, strikes),
            None => extract_boundary(&bonus_symbolic(spec, params)?),
        },
        DerivativeKind::AsianCall { averaging } => {
            asian_ratio_boundary(params, averaging, OptionSide::Call, spec.expiry)
        }
        DerivativeKind::AsianPut { averaging } => {
            asian_ratio_boundary(params, averaging, OptionSide::Put, spec.expiry)
        }
        DerivativeKind::LookbackCall => asian_ratio_boundary(
            params,
            &exbound::market::AveragingSpec::running_min(),
            OptionSide::Call,
            spec.expiry,
        ),
        DerivativeKind::LookbackPut => asian_ratio_boundary(
            params,
            &exbound::market::AveragingSpec::running_max(),
            OptionSide::Put,
            spec.expiry,
        ),
        DerivativeKind::ShoutCall { strike } => shout_boundary(params, *strike, OptionSide::Call),
        DerivativeKind::ShoutPut { strike } => shout_boundary(params, *strike, OptionSide::Put),
        DerivativeKind::BritishCall {
            strike,
            contract_drift,
        } => british_boundary(params, *contract_drift, *strike, OptionSide::Call),
        DerivativeKind::BritishPut {
            strike,
            contract_drift,
        } => british_boundary(params, *contract_drift, *strike, OptionSide::Put),
    }
}

/// `boundary <file>`: closed-form boundaries for every scenario.
pub fn run_boundary(scenarios: &[Scenario], cfg: &RunConfig) -> RunSummary {
    let selected: Vec<&Scenario> = scenarios
        .iter()
        .filter(|s| s.wants(OutputKind::Boundary))
        .collect();
    let results = map_concurrently(&selected, cfg.workers, |s| {
        analytic_boundary(&s.spec, &s.params)
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (scenario, result) in selected.iter().zip(results) {
        match result {
            Ok(boundary) => {
                if let Err(e) = write_artifact(
                    &cfg.out_dir,
                    &format!("{}.boundary.csv", scenario.id),
                    &boundary_csv(&scenario.id, &scenario.spec, &boundary),
                ) {
                    failures.push(format!("{}: {e}", scenario.id));
                }
                rows.push(vec![
                    scenario.id.clone(),
                    scenario.spec.kind.name().into(),
                    boundary_cell(&boundary),
                ]);
            }
            Err(e) => {
                rows.push(vec![
                    scenario.id.clone(),
                    scenario.spec.kind.name().into(),
                    format!("error: {e}"),
                ]);
                failures.push(format!("{}: {e}", scenario.id));
            }
        }
    }
    RunSummary {
        markdown: markdown_table(&["scenario", "kind", "boundary"], &rows),
        failures,
    }
}

fn profile_region(
    value: f64,
    state: f64,
    boundary: &BoundarySet,
) -> &'static str {
    let near_boundary = boundary
        .values()
        .iter()
        .any(|b| (state - b).abs() <= 1e-9 * b.abs().max(1.0));
    if near_boundary {
        "boundary"
    } else if value > 0.0 {
        "stopping"
    } else {
        "continuation"
    }
}

/// `bonus-profile <file> --grid lo:hi:n`: samples the bonus function.
pub fn run_bonus_profile(
    scenarios: &[Scenario],
    grid: (f64, f64, usize),
    cfg: &RunConfig,
) -> RunSummary {
    let selected: Vec<&Scenario> = scenarios
        .iter()
        .filter(|s| s.wants(OutputKind::BonusProfile))
        .collect();
    let points = grid_points(grid);
    let results = map_concurrently(&selected, cfg.workers, |s| -> Result<String, Error> {
        let f = bonus_symbolic(&s.spec, &s.params)?;
        let boundary = extract_boundary(&f)?;
        let rows: Vec<ProfileRow> = points
            .iter()
            .map(|&state| {
                let symbolic = f.eval(state);
                let oracle =
                    bonus_numeric_oracle(&s.spec, &s.params, state, &DEFAULT_DT_LADDER).ok();
                ProfileRow {
                    state,
                    symbolic,
                    oracle,
                    region: profile_region(symbolic, state, &boundary),
                    kink: f.breakpoints().contains(&state),
                }
            })
            .collect();
        Ok(profile_csv(&rows))
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (scenario, result) in selected.iter().zip(results) {
        match result {
            Ok(csv) => {
                if let Err(e) = write_artifact(
                    &cfg.out_dir,
                    &format!("{}.bonus.csv", scenario.id),
                    &csv,
                ) {
                    failures.push(format!("{}: {e}", scenario.id));
                }
                rows.push(vec![
                    scenario.id.clone(),
                    scenario.spec.kind.name().into(),
                    format!("{} rows", points.len()),
                ]);
            }
            Err(e) => {
                rows.push(vec![
                    scenario.id.clone(),
                    scenario.spec.kind.name().into(),
                    format!("error: {e}"),
                ]);
                failures.push(format!("{}: {e}", scenario.id));
            }
        }
    }
    RunSummary {
        markdown: markdown_table(&["scenario", "kind", "profile"], &rows),
        failures,
    }
}

struct VerifyRow {
    scenario: Scenario,
    outcome: Result<BoundaryComparison, Error>,
    rel_tol: f64,
}

fn verification_table(rows: &[VerifyRow]) -> (String, Vec<String>) {
    let mut table = Vec::new();
    let mut failures = Vec::new();
    for row in rows {
        let strikes = strike_cells(&row.scenario.spec);
        let params = &row.scenario.params;
        let mut cells = vec![
            format!("{}", params.rate),
            format!("{}", params.dividend_yield),
            format!("{}", params.sigma),
            strikes[0].clone(),
            strikes[1].clone(),
            strikes[2].clone(),
            strikes[3].clone(),
        ];
        match &row.outcome {
            Ok(report) if report.consistent_empty => {
                cells.extend([
                    "no exercise region".into(),
                    "no exercise region".into(),
                    "consistent".into(),
                ]);
            }
            Ok(report) => {
                let analytic: Vec<String> =
                    report.pairs.iter().map(|p| fmt_sig(p.analytic)).collect();
                let numeric: Vec<String> =
                    report.pairs.iter().map(|p| fmt_sig(p.numeric)).collect();
                let errors: Vec<String> = report
                    .pairs
                    .iter()
                    .map(|p| fmt_percent(p.relative_error))
                    .collect();
                cells.extend([
                    analytic.join(", "),
                    numeric.join(", "),
                    errors.join(", "),
                ]);
                if !report.cardinality_match() {
                    failures.push(format!(
                        "{}: boundary point counts differ (analytic extra: {:?}, numeric extra: {:?})",
                        row.scenario.id, report.unmatched_analytic, report.unmatched_numeric
                    ));
                }
                if report.max_abs_relative_error() > row.rel_tol {
                    failures.push(format!(
                        "{}: relative error {} exceeds tolerance {}",
                        row.scenario.id,
                        report.max_abs_relative_error(),
                        row.rel_tol
                    ));
                }
            }
            Err(e) => {
                cells.extend(["error".into(), e.to_string(), String::new()]);
                failures.push(format!("{}: {e}", row.scenario.id));
            }
        }
        table.push(cells);
    }
    (
        markdown_table(
            &[
                "r", "q", "sigma", "X1", "X2", "X3", "X4", "S*_theor", "S*_calc", "error",
            ],
            &table,
        ),
        failures,
    )
}

/// `psor-verify <file>`: solve the obstacle problem and compare with the
/// analytic boundary for every scenario.
pub fn run_psor_verify(scenarios: &[Scenario], cfg: &RunConfig) -> RunSummary {
    let selected: Vec<&Scenario> = scenarios
        .iter()
        .filter(|s| s.wants(OutputKind::PsorVerify))
        .collect();
    let results = map_concurrently(&selected, cfg.workers, |s| {
        let psor_cfg = s.psor.apply(PsorConfig::default());
        verify_against_analytic(&s.spec, &s.params, &psor_cfg)
    });

    let mut rows = Vec::new();
    let mut extra_failures = Vec::new();
    for (scenario, outcome) in selected.iter().zip(results) {
        if let Ok(report) = &outcome {
            if let Err(e) = write_artifact(
                &cfg.out_dir,
                &format!("{}.verify.csv", scenario.id),
                &verify_csv(&scenario.id, report),
            ) {
                extra_failures.push(format!("{}: {e}", scenario.id));
            }
        }
        rows.push(VerifyRow {
            scenario: (*scenario).clone(),
            outcome,
            rel_tol: scenario.psor.rel_tol.unwrap_or(DEFAULT_REL_TOL),
        });
    }
    let (markdown, mut failures) = verification_table(&rows);
    failures.extend(extra_failures);
    RunSummary { markdown, failures }
}

/// Built-in parameter sets of the three condor comparison rows.
pub const TABLE1_ROWS: [(f64, f64, f64, [f64; 4]); 3] = [
    (0.03, 0.02, 0.30, [1.0, 3.0, 4.0, 5.0]),
    (0.02, 0.03, 0.30, [1.0, 3.0, 4.0, 5.0]),
    (0.03, 0.02, 0.30, [1.0, 2.0, 3.0, 4.5]),
];

/// Verification profile for the built-in table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table1Profile {
    /// Full resolution: 250x40000 grid, tol 1e-14, gate 5e-4.
    Full,
    /// 4000 space steps, tol 1e-10, gate 5e-3.
    Ci,
}

impl Table1Profile {
    pub fn psor_config(self) -> PsorConfig {
        match self {
            Table1Profile::Full => PsorConfig::default(),
            Table1Profile::Ci => PsorConfig::ci_profile(),
        }
    }

    pub fn rel_tol(self) -> f64 {
        match self {
            Table1Profile::Full => 5e-4,
            Table1Profile::Ci => 5e-3,
        }
    }
}

/// The built-in comparison table scenarios.
pub fn table1_scenarios(profile: Table1Profile) -> Vec<Scenario> {
    let psor_cfg = profile.psor_config();
    TABLE1_ROWS
        .iter()
        .enumerate()
        .map(|(i, (r, q, sigma, strikes))| Scenario {
            id: format!("table1-row{}", i + 1),
            spec: DerivativeSpec::condor(*strikes, psor_cfg.expiry).expect("valid builtin strikes"),
            params: MarketParams::new(*r, *q, *sigma).expect("valid builtin params"),
            psor: crate::scenario::PsorOverrides {
                n_time: Some(psor_cfg.n_time),
                n_space: Some(psor_cfg.n_space),
                tol: Some(psor_cfg.tol),
                rel_tol: Some(profile.rel_tol()),
                ..Default::default()
            },
            outputs: Some(vec![OutputKind::Boundary, OutputKind::PsorVerify]),
        })
        .collect()
}

/// `table1`: run the built-in rows and compare against the closed forms.
pub fn run_table1(profile: Table1Profile, cfg: &RunConfig) -> RunSummary {
    let scenarios = table1_scenarios(profile);
    run_psor_verify(&scenarios, cfg)
}
