//! Strict INI-style experiment files. See `docs/formats.md` for the grammar.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::propagator::{IntegratorConfig, Method, StepPolicy};
use crate::schedules::Schedule;

use super::fit::{FitResult, FitWindow};
use super::{Observable, TauGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureKind {
    Fig1,
    Fig3,
    Fig5,
}

impl FigureKind {
    /// Observable on the vertical axis.
    pub fn observable(self) -> Observable {
        match self {
            FigureKind::Fig1 => Observable::PExcited,
            FigureKind::Fig3 | FigureKind::Fig5 => Observable::EResidual,
        }
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureKind::Fig1 => "fig1",
            FigureKind::Fig3 => "fig3",
            FigureKind::Fig5 => "fig5",
        })
    }
}

impl FromStr for FigureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fig1" => Ok(FigureKind::Fig1),
            "fig3" => Ok(FigureKind::Fig3),
            "fig5" => Ok(FigureKind::Fig5),
            other => Err(Error::usage(format!("unknown figure '{other}' (fig1 | fig3 | fig5)"))),
        }
    }
}

/// A slope fit declared for one schedule of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct FitSpec {
    pub schedule: String,
    pub observable: Observable,
    pub window: FitWindow,
    pub floor: f64,
    /// Fit the per-bin maxima instead of every point.
    pub envelope_bins_per_decade: Option<f64>,
    pub expect_slope: Option<f64>,
    pub tolerance: Option<f64>,
}

impl FitSpec {
    /// `Some(pass)` when an expected slope is declared.
    pub fn verdict(&self, fit: &FitResult) -> Option<bool> {
        let expect = self.expect_slope?;
        Some((fit.slope - expect).abs() <= self.tolerance.unwrap_or(0.0))
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub model: ModelSpec,
    pub schedules: Vec<Schedule>,
    pub tau_grid: TauGrid,
    pub integrator: IntegratorConfig,
    pub output: Option<PathBuf>,
    pub fits: Vec<FitSpec>,
    pub figure: Option<FigureKind>,
}

impl SweepSpec {
    pub fn new(model: ModelSpec, schedules: Vec<Schedule>, tau_grid: TauGrid) -> Self {
        Self {
            model,
            schedules,
            tau_grid,
            integrator: IntegratorConfig::default(),
            output: None,
            fits: Vec::new(),
            figure: None,
        }
    }

    pub fn fit_for(&self, schedule: &str) -> Option<&FitSpec> {
        self.fits.iter().find(|f| f.schedule == schedule)
    }
}

pub fn parse_config(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path)
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<(String, Entry)>,
}

struct Reader<'a> {
    path: &'a Path,
}

impl Reader<'_> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Config {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn parse_value<T: FromStr>(&self, sec: &mut Section, key: &str, what: &str) -> Result<Option<T>> {
        let Some((_, entry)) = sec.entries.iter_mut().find(|(k, _)| k == key) else {
            return Ok(None);
        };
        entry.used = true;
        entry
            .value
            .parse()
            .map(Some)
            .map_err(|_| self.err(entry.line, format!("'{key}' must be {what}, got '{}'", entry.value)))
    }

    fn required<T: FromStr>(&self, sec: &mut Section, key: &str, what: &str) -> Result<T> {
        let line = sec.line;
        let name = sec.name.clone();
        self.parse_value(sec, key, what)?
            .ok_or_else(|| self.err(line, format!("section [{name}] is missing '{key}'")))
    }

    fn line_of(&self, sec: &Section, key: &str) -> usize {
        sec.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, e)| e.line)
            .unwrap_or(sec.line)
    }

    fn with_line<T>(&self, line: usize, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Config { .. } | Error::Io { .. } => e,
            other => self.err(line, strip_kind(&other)),
        })
    }
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::Usage(m) | Error::Numeric(m) | Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}

fn split_sections(text: &str, reader: &Reader<'_>) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| reader.err(line, format!("malformed section header '{content}'")))?;
            let name = name.split_whitespace().collect::<Vec<_>>().join(" ");
            if sections.iter().any(|s| s.name == name) {
                return Err(reader.err(line, format!("duplicate section [{name}]")));
            }
            sections.push(Section {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| reader.err(line, format!("expected 'key = value', got '{content}'")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(reader.err(line, format!("malformed key '{key}'")));
        }
        if value.is_empty() {
            return Err(reader.err(line, format!("'{key}' has an empty value")));
        }
        let sec = sections
            .last_mut()
            .ok_or_else(|| reader.err(line, format!("'{key}' appears before any [section]")))?;
        if sec.entries.iter().any(|(k, _)| k == key) {
            return Err(reader.err(line, format!("duplicate key '{key}' in [{}]", sec.name)));
        }
        sec.entries.push((
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
                used: false,
            },
        ));
    }
    Ok(sections)
}

/// `#` or `;` starts a comment at the beginning of a line or after
/// whitespace.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if (b == b'#' || b == b';') && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

/// Parses configuration text; `origin` is used for error messages and to
/// resolve relative instance files.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<SweepSpec> {
    let reader = Reader { path: origin };
    let mut sections = split_sections(text, &reader)?;
    let base = origin.parent().unwrap_or(Path::new(""));

    let sweep_idx = sections
        .iter()
        .position(|s| s.name == "sweep")
        .ok_or_else(|| reader.err(text.lines().count(), "missing [sweep] section"))?;

    let (model, schedules, tau_grid, output) = {
        let sec = &mut sections[sweep_idx];
        let model_line = reader.line_of(sec, "model");
        let model_text: String = reader.required(sec, "model", "a model spec")?;
        let model = reader.with_line(model_line, model_text.parse::<ModelSpec>())?.relative_to(base);

        let sched_line = reader.line_of(sec, "schedules");
        let list: String = reader.required(sec, "schedules", "a list of schedules")?;
        let mut schedules = Vec::new();
        for name in list.split([',', ' ', '\t']).filter(|s| !s.is_empty()) {
            let sched = reader.with_line(sched_line, name.parse::<Schedule>())?;
            if schedules.iter().any(|s: &Schedule| s.to_string() == sched.to_string()) {
                return Err(reader.err(sched_line, format!("schedule '{name}' listed twice")));
            }
            schedules.push(sched);
        }
        if schedules.is_empty() {
            return Err(reader.err(sched_line, "no schedules listed"));
        }

        let tau_min: f64 = reader.required(sec, "tau_min", "a number")?;
        let max_line = reader.line_of(sec, "tau_max");
        let tau_max: f64 = reader.required(sec, "tau_max", "a number")?;
        let ppd_line = reader.line_of(sec, "points_per_decade");
        let ppd: usize = reader.required(sec, "points_per_decade", "a positive integer")?;
        if !(tau_min < tau_max) {
            return Err(reader.err(max_line, format!("tau range is empty: tau_min {tau_min} >= tau_max {tau_max}")));
        }
        let line = if ppd < 3 { ppd_line } else { max_line };
        let grid = reader.with_line(line, TauGrid::new(tau_min, tau_max, ppd))?;
        let output: Option<String> = reader.parse_value(sec, "out", "a path")?;
        (model, schedules, grid, output.map(PathBuf::from))
    };

    let mut spec = SweepSpec::new(model, schedules, tau_grid);
    spec.output = output;

    for idx in 0..sections.len() {
        if idx == sweep_idx {
            continue;
        }
        let sec = &mut sections[idx];
        let header_line = sec.line;
        if sec.name == "integrator" {
            spec.integrator = parse_integrator(&reader, sec)?;
        } else if sec.name == "figure" {
            spec.figure = Some(reader.required(sec, "kind", "fig1, fig3 or fig5")?);
        } else if let Some(sched_name) = sec.name.strip_prefix("fit ") {
            let sched = reader.with_line(header_line, sched_name.parse::<Schedule>())?;
            let name = sched.to_string();
            if !spec.schedules.iter().any(|s| s.to_string() == name) {
                return Err(reader.err(header_line, format!("fit for '{name}' which is not a swept schedule")));
            }
            let fit = parse_fit(&reader, sec, name, &spec.tau_grid)?;
            spec.fits.push(fit);
        } else {
            return Err(reader.err(header_line, format!("unknown section [{}]", sec.name)));
        }
    }

    for sec in &sections {
        if let Some((key, entry)) = sec.entries.iter().find(|(_, e)| !e.used) {
            return Err(reader.err(entry.line, format!("unknown key '{key}' in [{}]", sec.name)));
        }
    }
    Ok(spec)
}

fn parse_integrator(reader: &Reader<'_>, sec: &mut Section) -> Result<IntegratorConfig> {
    let mut cfg = IntegratorConfig::default();
    if let Some(m) = reader.parse_value::<Method>(sec, "method", "rk4 or unitary_midpoint")? {
        cfg.method = m;
    }
    let steps: Option<usize> = reader.parse_value(sec, "steps", "an integer")?;
    let density: Option<f64> = reader.parse_value(sec, "step_density", "a number")?;
    cfg.steps = match (steps, density) {
        (Some(_), Some(_)) => {
            return Err(reader.err(
                reader.line_of(sec, "steps"),
                "give either 'steps' or 'step_density', not both",
            ))
        }
        (Some(n), None) => StepPolicy::Fixed(n),
        (None, Some(d)) => StepPolicy::Density(d),
        (None, None) => cfg.steps,
    };
    if let Some(r) = reader.parse_value(sec, "renormalize", "true or false")? {
        cfg.renormalize = r;
    }
    if let Some(c) = reader.parse_value::<f64>(sec, "norm_ceiling", "a number")? {
        if !(c > 0.0) {
            return Err(reader.err(reader.line_of(sec, "norm_ceiling"), "norm_ceiling must be positive"));
        }
        cfg.norm_ceiling = c;
    }
    let line = reader.line_of(sec, if steps.is_some() { "steps" } else { "step_density" });
    reader.with_line(line, cfg.validate())?;
    Ok(cfg)
}

fn parse_fit(reader: &Reader<'_>, sec: &mut Section, schedule: String, grid: &TauGrid) -> Result<FitSpec> {
    let header = sec.line;
    let observable: Observable = reader.required(sec, "observable", "p_excited or e_residual")?;
    let lo: f64 = reader.required(sec, "tau_lo", "a number")?;
    let hi_line = reader.line_of(sec, "tau_hi");
    let hi: f64 = reader.required(sec, "tau_hi", "a number")?;
    let window = reader.with_line(hi_line, FitWindow::new(lo, hi))?;
    let slack = 1e-9;
    if lo < grid.min * (1.0 - slack) || hi > grid.max * (1.0 + slack) {
        return Err(reader.err(
            hi_line,
            format!("fit window [{lo}, {hi}] leaves the swept range [{}, {}]", grid.min, grid.max),
        ));
    }
    let floor = reader
        .parse_value(sec, "floor", "a number")?
        .unwrap_or_else(|| observable.default_floor());
    let envelope: Option<f64> = reader.parse_value(sec, "envelope_bins_per_decade", "a number")?;
    if let Some(b) = envelope {
        if !(b > 0.0) {
            return Err(reader.err(
                reader.line_of(sec, "envelope_bins_per_decade"),
                "envelope_bins_per_decade must be positive",
            ));
        }
    }
    let expect_slope = reader.parse_value(sec, "expect_slope", "a number")?;
    let tolerance: Option<f64> = reader.parse_value(sec, "tolerance", "a number")?;
    if expect_slope.is_some() != tolerance.is_some() {
        return Err(reader.err(header, "'expect_slope' and 'tolerance' go together"));
    }
    Ok(FitSpec {
        schedule,
        observable,
        window,
        floor,
        envelope_bins_per_decade: envelope,
        expect_slope,
        tolerance,
    })
}
