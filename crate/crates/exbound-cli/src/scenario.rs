//! Scenario files: flat `key = value` sections separated by blank lines.
//!
//! One section describes one scenario. Lines starting with `#` are
//! comments. The format is diff-friendly and writable: files emitted by
//! [`write_scenarios`] parse back to identical scenarios.
//!
//! Keys: `id`, `kind`, `r`, `q`, `sigma`, `strikes`, `T`, `p`, `lambda`,
//! `mu_c`, `outputs`, plus `psor.*` overrides (`n_time`, `n_space`,
//! `domain`, `omega`, `tol`, `T`, `theta`, `s_ref`, `rel_tol`).

use exbound::market::{AveragingSpec, DerivativeKind, DerivativeSpec, MarketParams};
use exbound::psor::{Coordinate, PsorConfig};
use thiserror::Error;

/// Parse failure with the 1-based line it was detected on.
#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError {
        line,
        message: message.into(),
    })
}

/// Artifacts a scenario can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Boundary,
    BonusProfile,
    PsorVerify,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Boundary => "boundary",
            OutputKind::BonusProfile => "bonus-profile",
            OutputKind::PsorVerify => "psor-verify",
        }
    }
}

/// Optional PSOR parameter overrides carried by a scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PsorOverrides {
    pub n_time: Option<usize>,
    pub n_space: Option<usize>,
    pub domain: Option<(f64, f64)>,
    pub omega: Option<f64>,
    pub tol: Option<f64>,
    pub expiry: Option<f64>,
    pub theta: Option<f64>,
    pub s_ref: Option<f64>,
    /// Relative tolerance for the analytic/numeric comparison.
    pub rel_tol: Option<f64>,
}

impl PsorOverrides {
    pub fn apply(&self, mut cfg: PsorConfig) -> PsorConfig {
        if let Some(v) = self.n_time {
            cfg.n_time = v;
        }
        if let Some(v) = self.n_space {
            cfg.n_space = v;
        }
        if let Some(v) = self.domain {
            cfg.domain = v;
        }
        if let Some(v) = self.omega {
            cfg.omega = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.expiry {
            cfg.expiry = v;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.s_ref {
            cfg.coordinate = Coordinate::LogSpot { reference: Some(v) };
        }
        cfg
    }
}

/// One unit of work: a derivative under market parameters, with the
/// artifacts it wants and any PSOR overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub spec: DerivativeSpec,
    pub params: MarketParams,
    pub psor: PsorOverrides,
    /// Requested artifacts; `None` accepts whatever the command runs.
    pub outputs: Option<Vec<OutputKind>>,
}

impl Scenario {
    /// Whether this scenario wants the given artifact.
    pub fn wants(&self, kind: OutputKind) -> bool {
        match &self.outputs {
            None => true,
            Some(list) => list.contains(&kind),
        }
    }
}

pub const SUPPORTED_KINDS: [&str; 11] = [
    "vanilla-call",
    "vanilla-put",
    "condor",
    "asian-call",
    "asian-put",
    "lookback-call",
    "lookback-put",
    "shout-call",
    "shout-put",
    "british-call",
    "british-put",
];

struct RawSection {
    start_line: usize,
    entries: Vec<(usize, String, String)>,
}

fn split_sections(text: &str) -> Result<Vec<RawSection>, ScenarioError> {
    let mut sections: Vec<RawSection> = Vec::new();
    let mut current: Option<RawSection> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            if let Some(section) = current.take() {
                sections.push(section);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(line_no, format!("expected `key = value`, got `{line}`"));
        };
        let key = key.trim().to_string();
        let value = {
            let v = value.trim();
            // Allow trailing comments after the value.
            match v.split_once('#') {
                Some((head, _)) => head.trim().to_string(),
                None => v.to_string(),
            }
        };
        if key.is_empty() {
            return err(line_no, "empty key");
        }
        let section = current.get_or_insert(RawSection {
            start_line: line_no,
            entries: Vec::new(),
        });
        if section.entries.iter().any(|(_, k, _)| *k == key) {
            return err(line_no, format!("duplicate key `{key}` in scenario"));
        }
        section.entries.push((line_no, key, value));
    }
    if let Some(section) = current.take() {
        sections.push(section);
    }
    Ok(sections)
}

struct SectionReader {
    entries: Vec<(usize, String, String)>,
    used: Vec<bool>,
}

impl SectionReader {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        for (i, (line, k, v)) in self.entries.iter().enumerate() {
            if k == key && !self.used[i] {
                self.used[i] = true;
                return Some((*line, v.clone()));
            }
        }
        None
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<(usize, f64)>, ScenarioError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) => Ok(Some((line, x))),
                Err(_) => err(line, format!("`{key}` must be a number, got `{v}`")),
            },
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<(usize, usize)>, ScenarioError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => match v.parse::<usize>() {
                Ok(x) => Ok(Some((line, x))),
                Err(_) => err(line, format!("`{key}` must be a nonnegative integer, got `{v}`")),
            },
        }
    }

    fn unused_key(&self) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .enumerate()
            .find(|(i, _)| !self.used[*i])
            .map(|(_, (line, k, _))| (*line, k.as_str()))
    }
}

fn parse_number_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ScenarioError> {
    let mut out = Vec::new();
    for part in value.split([',', ' ']).filter(|p| !p.trim().is_empty()) {
        match part.trim().parse::<f64>() {
            Ok(x) => out.push(x),
            Err(_) => return err(line, format!("`{key}` has a non-numeric entry `{part}`")),
        }
    }
    Ok(out)
}

fn parse_section(section: RawSection) -> Result<Scenario, ScenarioError> {
    let start = section.start_line;
    let used = vec![false; section.entries.len()];
    let mut reader = SectionReader {
        entries: section.entries,
        used,
    };

    let (_, id) = reader
        .take("id")
        .ok_or(ScenarioError {
            line: start,
            message: "missing `id`".into(),
        })?;
    let (kind_line, kind_name) = reader.take("kind").ok_or(ScenarioError {
        line: start,
        message: format!("scenario `{id}` is missing `kind`"),
    })?;

    let r = reader
        .take_f64("r")?
        .ok_or(ScenarioError {
            line: start,
            message: format!("scenario `{id}` is missing `r`"),
        })?
        .1;
    let q = reader
        .take_f64("q")?
        .ok_or(ScenarioError {
            line: start,
            message: format!("scenario `{id}` is missing `q`"),
        })?
        .1;
    let sigma = reader
        .take_f64("sigma")?
        .ok_or(ScenarioError {
            line: start,
            message: format!("scenario `{id}` is missing `sigma`"),
        })?
        .1;
    let params = MarketParams::new(r, q, sigma)
        .map_err(|e| ScenarioError {
            line: start,
            message: e.to_string(),
        })?;

    let expiry = reader.take_f64("T")?.map(|(_, v)| v).unwrap_or(1.0);
    let strikes = match reader.take("strikes") {
        Some((line, v)) => Some((line, parse_number_list(line, "strikes", &v)?)),
        None => None,
    };
    let power = reader.take_f64("p")?;
    let lambda = reader.take_f64("lambda")?;
    let contract_drift = reader.take_f64("mu_c")?;

    let one_strike = |strikes: &Option<(usize, Vec<f64>)>| -> Result<f64, ScenarioError> {
        match strikes {
            Some((line, list)) => {
                if list.len() == 1 {
                    Ok(list[0])
                } else {
                    err(*line, format!("`{kind_name}` needs exactly one strike"))
                }
            }
            None => err(kind_line, format!("`{kind_name}` needs `strikes`")),
        }
    };
    let averaging = |power: Option<(usize, f64)>,
                     lambda: Option<(usize, f64)>|
     -> Result<AveragingSpec, ScenarioError> {
        let (p_line, p) = power.unwrap_or((kind_line, 1.0));
        let l = lambda.map(|(_, v)| v).unwrap_or(0.0);
        AveragingSpec::new(p, l).map_err(|e| ScenarioError {
            line: p_line,
            message: e.to_string(),
        })
    };

    let kind = match kind_name.as_str() {
        "vanilla-call" => DerivativeKind::VanillaCall {
            strike: one_strike(&strikes)?,
        },
        "vanilla-put" => DerivativeKind::VanillaPut {
            strike: one_strike(&strikes)?,
        },
        "condor" => {
            let (line, list) = strikes.as_ref().ok_or(ScenarioError {
                line: kind_line,
                message: "`condor` needs `strikes` with four values".into(),
            })?;
            if list.len() != 4 {
                return err(*line, format!("`condor` needs four strikes, got {}", list.len()));
            }
            let spec =
                DerivativeSpec::condor([list[0], list[1], list[2], list[3]], expiry).map_err(
                    |e| ScenarioError {
                        line: *line,
                        message: e.to_string(),
                    },
                )?;
            return finish_scenario(reader, id, spec, params);
        }
        "asian-call" => DerivativeKind::AsianCall {
            averaging: averaging(power, lambda)?,
        },
        "asian-put" => DerivativeKind::AsianPut {
            averaging: averaging(power, lambda)?,
        },
        "lookback-call" => DerivativeKind::LookbackCall,
        "lookback-put" => DerivativeKind::LookbackPut,
        "shout-call" => DerivativeKind::ShoutCall {
            strike: one_strike(&strikes)?,
        },
        "shout-put" => DerivativeKind::ShoutPut {
            strike: one_strike(&strikes)?,
        },
        "british-call" => DerivativeKind::BritishCall {
            strike: one_strike(&strikes)?,
            contract_drift: contract_drift.map(|(_, v)| v).unwrap_or(0.0),
        },
        "british-put" => DerivativeKind::BritishPut {
            strike: one_strike(&strikes)?,
            contract_drift: contract_drift.map(|(_, v)| v).unwrap_or(0.0),
        },
        other => {
            return err(
                kind_line,
                format!(
                    "unknown derivative kind `{other}`; supported kinds: {}",
                    SUPPORTED_KINDS.join(", ")
                ),
            )
        }
    };
    let spec = DerivativeSpec::new(kind, expiry).map_err(|e| ScenarioError {
        line: start,
        message: e.to_string(),
    })?;
    finish_scenario(reader, id, spec, params)
}

fn finish_scenario(
    mut reader: SectionReader,
    id: String,
    spec: DerivativeSpec,
    params: MarketParams,
) -> Result<Scenario, ScenarioError> {
    let outputs = match reader.take("outputs") {
        None => None,
        Some((line, v)) => {
            let mut list = Vec::new();
            for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                list.push(match part {
                    "boundary" => OutputKind::Boundary,
                    "bonus-profile" => OutputKind::BonusProfile,
                    "psor-verify" => OutputKind::PsorVerify,
                    other => {
                        return err(
                            line,
                            format!(
                                "unknown output `{other}`; expected boundary, bonus-profile or psor-verify"
                            ),
                        )
                    }
                });
            }
            Some(list)
        }
    };

    let domain = match reader.take("psor.domain") {
        None => None,
        Some((line, v)) => {
            let list = parse_number_list(line, "psor.domain", &v)?;
            if list.len() != 2 {
                return err(line, "`psor.domain` needs two values: lo, hi");
            }
            Some((list[0], list[1]))
        }
    };
    let psor = PsorOverrides {
        n_time: reader.take_usize("psor.n_time")?.map(|(_, v)| v),
        n_space: reader.take_usize("psor.n_space")?.map(|(_, v)| v),
        domain,
        omega: reader.take_f64("psor.omega")?.map(|(_, v)| v),
        tol: reader.take_f64("psor.tol")?.map(|(_, v)| v),
        expiry: reader.take_f64("psor.T")?.map(|(_, v)| v),
        theta: reader.take_f64("psor.theta")?.map(|(_, v)| v),
        s_ref: reader.take_f64("psor.s_ref")?.map(|(_, v)| v),
        rel_tol: reader.take_f64("psor.rel_tol")?.map(|(_, v)| v),
    };

    if let Some((line, key)) = reader.unused_key() {
        return err(line, format!("unknown key `{key}`"));
    }
    Ok(Scenario {
        id,
        spec,
        params,
        psor,
        outputs,
    })
}

/// Parses a scenario file; errors carry line numbers.
pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>, ScenarioError> {
    let sections = split_sections(text)?;
    let mut scenarios = Vec::with_capacity(sections.len());
    for section in sections {
        let start = section.start_line;
        let scenario = parse_section(section)?;
        if scenarios.iter().any(|s: &Scenario| s.id == scenario.id) {
            return err(start, format!("duplicate scenario id `{}`", scenario.id));
        }
        scenarios.push(scenario);
    }
    Ok(scenarios)
}

fn push_number_list(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    out.push_str(" = ");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("{v}"));
    }
    out.push('\n');
}

/// Renders one scenario in canonical form.
pub fn write_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    out.push_str(&format!("id = {}\n", s.id));
    let kind_name = if s.spec.condor_strikes().is_some() {
        "condor"
    } else {
        s.spec.kind.name()
    };
    out.push_str(&format!("kind = {kind_name}\n"));
    out.push_str(&format!("r = {}\n", s.params.rate));
    out.push_str(&format!("q = {}\n", s.params.dividend_yield));
    out.push_str(&format!("sigma = {}\n", s.params.sigma));
    match &s.spec.kind {
        DerivativeKind::VanillaCall { strike }
        | DerivativeKind::VanillaPut { strike }
        | DerivativeKind::ShoutCall { strike }
        | DerivativeKind::ShoutPut { strike } => push_number_list(&mut out, "strikes", &[*strike]),
        DerivativeKind::BritishCall {
            strike,
            contract_drift,
        }
        | DerivativeKind::BritishPut {
            strike,
            contract_drift,
        } => {
            push_number_list(&mut out, "strikes", &[*strike]);
            out.push_str(&format!("mu_c = {contract_drift}\n"));
        }
        DerivativeKind::Strategy { .. } => {
            let strikes = s
                .spec
                .condor_strikes()
                .expect("scenario strategies are condors");
            push_number_list(&mut out, "strikes", &strikes);
        }
        DerivativeKind::AsianCall { averaging } | DerivativeKind::AsianPut { averaging } => {
            out.push_str(&format!("p = {}\n", averaging.power));
            out.push_str(&format!("lambda = {}\n", averaging.lambda));
        }
        DerivativeKind::LookbackCall | DerivativeKind::LookbackPut => {}
    }
    out.push_str(&format!("T = {}\n", s.spec.expiry));
    if let Some(outputs) = &s.outputs {
        out.push_str("outputs = ");
        for (i, o) in outputs.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(o.name());
        }
        out.push('\n');
    }
    let p = &s.psor;
    if let Some(v) = p.n_time {
        out.push_str(&format!("psor.n_time = {v}\n"));
    }
    if let Some(v) = p.n_space {
        out.push_str(&format!("psor.n_space = {v}\n"));
    }
    if let Some((lo, hi)) = p.domain {
        out.push_str(&format!("psor.domain = {lo}, {hi}\n"));
    }
    if let Some(v) = p.omega {
        out.push_str(&format!("psor.omega = {v}\n"));
    }
    if let Some(v) = p.tol {
        out.push_str(&format!("psor.tol = {v}\n"));
    }
    if let Some(v) = p.expiry {
        out.push_str(&format!("psor.T = {v}\n"));
    }
    if let Some(v) = p.theta {
        out.push_str(&format!("psor.theta = {v}\n"));
    }
    if let Some(v) = p.s_ref {
        out.push_str(&format!("psor.s_ref = {v}\n"));
    }
    if let Some(v) = p.rel_tol {
        out.push_str(&format!("psor.rel_tol = {v}\n"));
    }
    out
}

/// Renders a whole file: sections separated by blank lines.
pub fn write_scenarios(scenarios: &[Scenario]) -> String {
    scenarios
        .iter()
        .map(write_scenario)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses a `lo:hi:n` grid argument.
pub fn parse_grid(text: &str) -> Result<(f64, f64, usize), ScenarioError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return err(0, format!("grid must be `lo:hi:n`, got `{text}`"));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| ScenarioError {
            line: 0,
            message: format!("grid lower bound `{}` is not a number", parts[0]),
        })?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| ScenarioError {
            line: 0,
            message: format!("grid upper bound `{}` is not a number", parts[1]),
        })?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| ScenarioError {
            line: 0,
            message: format!("grid count `{}` is not an integer", parts[2]),
        })?;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return err(0, format!("grid needs finite lo <= hi, got {lo}..{hi}"));
    }
    if n == 0 {
        return err(0, "grid needs at least one point");
    }
    if n == 1 && lo != hi {
        return err(0, "a single-point grid needs lo == hi");
    }
    Ok((lo, hi, n))
}

/// The points of a parsed grid.
pub fn grid_points(grid: (f64, f64, usize)) -> Vec<f64> {
    let (lo, hi, n) = grid;
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * step).collect()
}
