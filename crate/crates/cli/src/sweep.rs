//! Parameter sweeps.
//!
//! A sweep spec names a base scenario (a path, resolved against the spec's
//! directory, or an inline object), one swept variable and optionally a
//! series variable for a family of curves. Each point is evaluated on its
//! own; a value that makes the scenario invalid is reported on stderr and
//! gets a row with empty result cells.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use mcaccess::mixed::full_report;
use mcaccess::model::ScenarioFile;
use mcaccess::nonpersistent::{normalizer_a, success_probability};
use mcaccess::{Error, ScaledReal, Scenario};
use serde::{Deserialize, Serialize};

use crate::render::align;
use crate::{read_text, write_text, CliError, Format};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub scenario: ScenarioSource,
    pub sweep: Axis,
    #[serde(default)]
    pub series: Option<Axis>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(ScenarioFile),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub variable: Variable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    S,
    Rho,
    M,
}

impl Variable {
    fn name(self) -> &'static str {
        match self {
            Variable::S => "s",
            Variable::Rho => "rho",
            Variable::M => "m",
        }
    }
}

#[derive(Debug, Serialize)]
struct Point {
    #[serde(skip_serializing_if = "Option::is_none")]
    series_variable: Option<Variable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    series_value: Option<f64>,
    swept_variable: Variable,
    value: f64,
    phi: Option<f64>,
    normalizer: Option<ScaledReal>,
    user_phi: Vec<Option<f64>>,
    error: Option<String>,
}

fn count(variable: Variable, value: f64) -> Result<usize, Error> {
    if value >= 1.0 && value.fract() == 0.0 && value < 1e9 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "{} must be a positive integer, got {value}",
            variable.name()
        )))
    }
}

fn apply(file: &mut ScenarioFile, variable: Variable, value: f64) -> Result<(), Error> {
    match variable {
        Variable::S => {
            if file.theta.is_some() {
                return Err(Error::InvalidParameter(
                    "cannot sweep s over a custom theta profile".into(),
                ));
            }
            file.scan = Some(count(variable, value)?);
        }
        Variable::M => {
            if file.theta.is_some() {
                return Err(Error::InvalidParameter(
                    "cannot sweep m over a custom theta profile".into(),
                ));
            }
            file.channels = count(variable, value)?;
        }
        Variable::Rho => {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "rho must be positive, got {value}"
                )));
            }
            let current = mcaccess::loading(&file.non_persistent_classes);
            if file.non_persistent_classes.is_empty() {
                return Err(Error::InvalidParameter(
                    "cannot sweep rho without non-persistent classes".into(),
                ));
            }
            // scale arrival rates, keeping the class mix
            for class in &mut file.non_persistent_classes {
                class.lambda *= value / current;
            }
        }
    }
    Ok(())
}

struct Evaluation {
    phi: Option<f64>,
    normalizer: ScaledReal,
    user_phi: Vec<f64>,
}

fn evaluate(scenario: &Scenario) -> Result<Evaluation, Error> {
    if scenario.users().is_empty() {
        let rho = scenario.loading();
        return Ok(Evaluation {
            phi: Some(success_probability(scenario.profile(), rho)),
            normalizer: normalizer_a(scenario.profile(), rho),
            user_phi: Vec::new(),
        });
    }
    let report = full_report(scenario)?;
    Ok(Evaluation {
        phi: report.phi_0,
        normalizer: report.normalizer,
        user_phi: report.users.iter().map(|u| u.success_ratio).collect(),
    })
}

fn point(
    base: &ScenarioFile,
    series: Option<(Variable, f64)>,
    swept: Variable,
    value: f64,
) -> Point {
    let result = (|| {
        let mut file = base.clone();
        if let Some((variable, v)) = series {
            apply(&mut file, variable, v)?;
        }
        apply(&mut file, swept, value)?;
        evaluate(&Scenario::try_from(file)?)
    })();
    let users = base.persistent_users.len();
    let (series_variable, series_value) = series.unzip();
    match result {
        Ok(e) => Point {
            series_variable,
            series_value,
            swept_variable: swept,
            value,
            phi: e.phi,
            normalizer: Some(e.normalizer),
            user_phi: e.user_phi.into_iter().map(Some).collect(),
            error: None,
        },
        Err(e) => Point {
            series_variable,
            series_value,
            swept_variable: swept,
            value,
            phi: None,
            normalizer: None,
            user_phi: vec![None; users],
            error: Some(e.to_string()),
        },
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv(points: &[Point], users: usize, with_series: bool) -> String {
    let mut header: Vec<String> = Vec::new();
    if with_series {
        header.extend(["series_variable".into(), "series_value".into()]);
    }
    header.extend(["swept_variable", "value", "phi", "normalizer"].map(String::from));
    header.extend((1..=users).map(|j| format!("phi_{j}")));
    let mut out = header.join(",");
    out.push('\n');
    for p in points {
        let mut row: Vec<String> = Vec::new();
        if with_series {
            row.push(
                p.series_variable
                    .map(|v| v.name().to_string())
                    .unwrap_or_default(),
            );
            row.push(cell(p.series_value));
        }
        row.push(p.swept_variable.name().into());
        row.push(p.value.to_string());
        row.push(cell(p.phi));
        row.push(p.normalizer.map(|n| n.to_string()).unwrap_or_default());
        row.extend(p.user_phi.iter().map(|x| cell(*x)));
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

fn table(points: &[Point], users: usize, with_series: bool) -> String {
    let mut headers: Vec<String> = Vec::new();
    if with_series {
        headers.push(
            points
                .first()
                .and_then(|p| p.series_variable)
                .map_or("series", |v| v.name())
                .into(),
        );
    }
    headers.push(
        points
            .first()
            .map_or("value", |p| p.swept_variable.name())
            .into(),
    );
    headers.extend(["phi".into(), "normalizer".into()]);
    headers.extend((1..=users).map(|j| format!("phi_{j}")));
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let mut row = Vec::new();
            if with_series {
                row.push(cell(p.series_value));
            }
            row.push(p.value.to_string());
            match &p.error {
                Some(_) => {
                    row.push("invalid".into());
                    row.push(String::new());
                }
                None => {
                    row.push(p.phi.map_or("n/a".into(), |x| format!("{x:.6}")));
                    row.push(p.normalizer.map_or(String::new(), |n| format!("{n:.4}")));
                }
            }
            row.extend(
                p.user_phi
                    .iter()
                    .map(|x| x.map_or(String::new(), |v| format!("{v:.6}"))),
            );
            row
        })
        .collect();
    let refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    align(&refs, &rows)
}

pub fn execute(
    spec_path: &Path,
    format: Format,
    csv_override: Option<&Path>,
) -> Result<(), CliError> {
    let text = read_text(spec_path)?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Core(Error::Schema(format!("{}: {e}", spec_path.display()))))?;
    if spec.sweep.values.is_empty() {
        return Err(CliError::Core(Error::Schema(
            "sweep.values must not be empty".into(),
        )));
    }
    if spec.series.as_ref().is_some_and(|s| s.values.is_empty()) {
        return Err(CliError::Core(Error::Schema(
            "series.values must not be empty".into(),
        )));
    }
    let dir = spec_path.parent().unwrap_or(Path::new(""));
    let base: ScenarioFile = match spec.scenario {
        ScenarioSource::Inline(file) => file,
        ScenarioSource::Path(path) => {
            let path = dir.join(path);
            let text = read_text(&path)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Core(Error::Schema(format!("{}: {e}", path.display()))))?
        }
    };
    // the base itself must be well formed
    Scenario::try_from(base.clone())?;

    let series: Vec<Option<(Variable, f64)>> = match &spec.series {
        Some(axis) => axis
            .values
            .iter()
            .map(|&v| Some((axis.variable, v)))
            .collect(),
        None => vec![None],
    };
    let mut points = Vec::new();
    for s in series {
        for &value in &spec.sweep.values {
            points.push(point(&base, s, spec.sweep.variable, value));
        }
    }
    let mut first_error = None;
    for p in &points {
        if let Some(e) = &p.error {
            let at = match (p.series_variable, p.series_value) {
                (Some(v), Some(x)) => format!("{}={x}, ", v.name()),
                _ => String::new(),
            };
            eprintln!("warning: {at}{}={}: {e}", p.swept_variable.name(), p.value);
            first_error.get_or_insert_with(|| e.clone());
        }
    }

    let users = base.persistent_users.len();
    let with_series = spec.series.is_some();
    let csv_text = csv(&points, users, with_series);
    match format {
        Format::Table => print!("{}", table(&points, users, with_series)),
        Format::Csv => print!("{csv_text}"),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&points).expect("json serializes")
        ),
    }
    let target = csv_override
        .map(Path::to_path_buf)
        .or_else(|| spec.output.map(|o| dir.join(o)));
    if let Some(path) = target {
        write_text(&path, &csv_text)?;
    }
    if points.iter().all(|p| p.error.is_some()) {
        return Err(CliError::Usage(format!(
            "no valid sweep points: {}",
            first_error.unwrap_or_default()
        )));
    }
    Ok(())
}
