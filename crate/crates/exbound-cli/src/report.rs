//! Deterministic report formatting: CSV artifacts and the markdown
//! summary tables.
//!
//! All numbers render with 12 significant digits, period decimal
//! separator; identical inputs produce byte-identical output.

use exbound::boundary::BoundarySet;
use exbound::market::DerivativeSpec;
use exbound::psor::BoundaryComparison;

/// 12-significant-digit rendering with a stable shape: plain decimal in
/// the everyday range, scientific outside it.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000000000".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..=11).contains(&magnitude) {
        format!("{x:.11e}")
    } else {
        let decimals = (11 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

/// Signed percentage with four decimals, e.g. `+0.0216%`.
pub fn fmt_percent(rel: f64) -> String {
    format!("{:+.4}%", 100.0 * rel)
}

/// One markdown table from a header and rows.
pub fn markdown_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push('|');
    for h in header {
        out.push_str(&format!(" {h} |"));
    }
    out.push('\n');
    out.push('|');
    for _ in header {
        out.push_str(" --- |");
    }
    out.push('\n');
    for row in rows {
        out.push('|');
        for cell in row {
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out
}

/// The strike columns of the summary table: condors fill X1..X4, single
/// strike contracts fill X1, everything else stays blank.
pub fn strike_cells(spec: &DerivativeSpec) -> [String; 4] {
    use exbound::market::DerivativeKind::*;
    if let Some(strikes) = spec.condor_strikes() {
        return strikes.map(fmt_sig);
    }
    let single = match &spec.kind {
        VanillaCall { strike } | VanillaPut { strike } | ShoutCall { strike }
        | ShoutPut { strike } => Some(*strike),
        BritishCall { strike, .. } | BritishPut { strike, .. } => Some(*strike),
        _ => None,
    };
    match single {
        Some(s) => [fmt_sig(s), String::new(), String::new(), String::new()],
        None => Default::default(),
    }
}

/// Cell with boundary values joined by commas, or the no-exercise note.
pub fn boundary_cell(boundary: &BoundarySet) -> String {
    match boundary {
        BoundarySet::Empty => "no exercise region".into(),
        other => other
            .values()
            .iter()
            .map(|v| fmt_sig(*v))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

/// CSV lines for a boundary artifact.
pub fn boundary_csv(id: &str, spec: &DerivativeSpec, boundary: &BoundarySet) -> String {
    let mut out = String::from("scenario,kind,variable,index,value\n");
    let kind = spec.kind.name();
    match boundary {
        BoundarySet::Empty => {
            out.push_str(&format!("{id},{kind},empty,,\n"));
        }
        BoundarySet::SpotPoints(points) => {
            for (i, p) in points.iter().enumerate() {
                out.push_str(&format!("{id},{kind},spot,{i},{}\n", fmt_sig(*p)));
            }
        }
        BoundarySet::PathRatio(ratio) => {
            out.push_str(&format!("{id},{kind},ratio,0,{}\n", fmt_sig(*ratio)));
        }
    }
    out
}

/// CSV lines for a verification artifact.
pub fn verify_csv(id: &str, report: &BoundaryComparison) -> String {
    let mut out = String::from("scenario,analytic,numeric,relative_error\n");
    if report.consistent_empty {
        out.push_str(&format!("{id},,,\n"));
        return out;
    }
    for pair in &report.pairs {
        out.push_str(&format!(
            "{id},{},{},{}\n",
            fmt_sig(pair.analytic),
            fmt_sig(pair.numeric),
            fmt_sig(pair.relative_error)
        ));
    }
    for a in &report.unmatched_analytic {
        out.push_str(&format!("{id},{},,\n", fmt_sig(*a)));
    }
    for n in &report.unmatched_numeric {
        out.push_str(&format!("{id},,{},\n", fmt_sig(*n)));
    }
    out
}

/// One row of a bonus-profile CSV.
pub struct ProfileRow {
    pub state: f64,
    pub symbolic: f64,
    pub oracle: Option<f64>,
    pub region: &'static str,
    pub kink: bool,
}

pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("state,f_b_symbolic,f_b_oracle,region,kink\n");
    for row in rows {
        let oracle = row.oracle.map(fmt_sig).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{oracle},{},{}\n",
            fmt_sig(row.state),
            fmt_sig(row.symbolic),
            row.region,
            u8::from(row.kink)
        ));
    }
    out
}
