use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::models::AnnealingModel;
use crate::propagator::{evolve, IntegratorConfig, Method, StepPolicy};
use crate::schedules::Schedule;

use super::config::SweepSpec;
use super::{build_id, Observable};

pub const COLUMNS: [&str; 7] = [
    "schedule",
    "tau",
    "p_excited",
    "e_residual",
    "norm_drift",
    "steps",
    "status",
];

const TITLE: &str = "# annealbench sweep table";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub schedule: String,
    pub tau: f64,
    pub p_excited: f64,
    pub e_residual: f64,
    pub norm_drift: f64,
    pub steps: usize,
    /// Integrator failure message; the numeric fields are NaN then.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn value(&self, observable: Observable) -> f64 {
        match observable {
            Observable::PExcited => self.p_excited,
            Observable::EResidual => self.e_residual,
        }
    }

    fn key(&self) -> (String, String) {
        row_key(&self.schedule, self.tau)
    }

    fn to_csv(&self) -> String {
        let status = match &self.error {
            None => "ok".to_string(),
            Some(msg) => format!("error: {}", msg.replace([',', '\n', '\r'], ";")),
        };
        format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
            self.schedule, self.tau, self.p_excited, self.e_residual, self.norm_drift, self.steps, status
        )
    }

    fn parse(line: &str) -> std::result::Result<Self, String> {
        let fields: Vec<&str> = line.splitn(COLUMNS.len(), ',').collect();
        if fields.len() != COLUMNS.len() {
            return Err(format!("expected {} fields, found {}", COLUMNS.len(), fields.len()));
        }
        let num = |i: usize| -> std::result::Result<f64, String> {
            fields[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("column '{}' is not a number: '{}'", COLUMNS[i], fields[i]))
        };
        let status = fields[6].trim();
        let error = match status {
            "ok" => None,
            s => Some(
                s.strip_prefix("error:")
                    .ok_or_else(|| format!("unknown status '{s}'"))?
                    .trim()
                    .to_string(),
            ),
        };
        Ok(SweepRow {
            schedule: fields[0].trim().to_string(),
            tau: num(1)?,
            p_excited: num(2)?,
            e_residual: num(3)?,
            norm_drift: num(4)?,
            steps: fields[5]
                .trim()
                .parse()
                .map_err(|_| format!("column 'steps' is not an integer: '{}'", fields[5]))?,
            error,
        })
    }
}

fn row_key(schedule: &str, tau: f64) -> (String, String) {
    (schedule.to_string(), format!("{tau:.17e}"))
}

/// A sweep table: `# key = value` metadata plus rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Strict parse. Columns must be a superset of what a figure or fit
    /// needs; the standard writer always emits [`COLUMNS`].
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Config {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut table = SweepTable::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            if let Some(comment) = raw.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once('=') {
                    table.metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if table.columns.is_empty() {
                table.columns = raw.split(',').map(|c| c.trim().to_string()).collect();
                continue;
            }
            if table.columns.iter().map(String::as_str).ne(COLUMNS) {
                return Err(err(
                    line,
                    format!("rows follow a non-standard header '{}'", table.columns.join(",")),
                ));
            }
            table.rows.push(SweepRow::parse(raw).map_err(|m| err(line, m))?);
        }
        if table.columns.is_empty() {
            return Err(err(text.lines().count(), "table has no column header line".into()));
        }
        Ok(table)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    /// Schedules in order of first appearance.
    pub fn schedules(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.schedule) {
                out.push(r.schedule.clone());
            }
        }
        out
    }

    /// `(tau, value)` of the successful rows of one schedule.
    pub fn series(&self, schedule: &str, observable: Observable) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.schedule == schedule && r.is_ok())
            .map(|r| (r.tau, r.value(observable)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(TITLE);
        out.push('\n');
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepOptions {
    /// Worker threads.
    pub jobs: usize,
    /// Stop after this many newly computed rows (the rest stays pending).
    pub max_new_rows: Option<usize>,
    /// Report each finished row on stderr.
    pub verbose: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            max_new_rows: None,
            verbose: false,
        }
    }
}

fn describe_integrator(cfg: &IntegratorConfig) -> String {
    let steps = match cfg.steps {
        StepPolicy::Fixed(n) => format!("steps={n}"),
        StepPolicy::Density(d) => format!("step_density={d}"),
    };
    let method = match cfg.method {
        Method::Rk4 => "rk4",
        Method::UnitaryMidpoint => "unitary_midpoint",
    };
    format!(
        "{method} {steps} renormalize={} norm_ceiling={:e}",
        cfg.renormalize, cfg.norm_ceiling
    )
}

fn sweep_metadata(spec: &SweepSpec) -> Vec<(String, String)> {
    let names: Vec<String> = spec.schedules.iter().map(|s| s.to_string()).collect();
    let g = &spec.tau_grid;
    vec![
        ("model".into(), spec.model.to_string()),
        ("schedules".into(), names.join(" ")),
        (
            "tau_grid".into(),
            format!("min={} max={} points_per_decade={}", g.min, g.max, g.points_per_decade),
        ),
        ("integrator".into(), describe_integrator(&spec.integrator)),
        ("build".into(), build_id()),
    ]
}

fn compute_row(model: &AnnealingModel, sched: &Schedule, name: &str, tau: f64, cfg: &IntegratorConfig) -> SweepRow {
    match evolve(model, sched, tau, cfg) {
        Ok(r) => SweepRow {
            schedule: name.to_string(),
            tau,
            p_excited: r.p_excited,
            e_residual: r.e_residual,
            norm_drift: r.norm_drift,
            steps: r.steps_used,
            error: None,
        },
        Err(e) => SweepRow {
            schedule: name.to_string(),
            tau,
            p_excited: f64::NAN,
            e_residual: f64::NAN,
            norm_drift: f64::NAN,
            steps: cfg.steps_for(tau),
            error: Some(e.to_string()),
        },
    }
}

/// Rows already present in `path` that belong to the same sweep. A
/// truncated last line (no trailing newline) is dropped.
fn existing_rows(path: &Path, metadata: &[(String, String)]) -> Result<Option<Vec<SweepRow>>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if complete.trim().is_empty() {
        return Ok(None);
    }
    let table = SweepTable::parse(complete, path)?;
    for key in ["model", "schedules", "tau_grid", "integrator"] {
        let want = metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        if table.meta(key) != want {
            return Err(Error::usage(format!(
                "{} holds a different sweep ({key} = {}); remove it or choose another output",
                path.display(),
                table.meta(key).unwrap_or("missing")
            )));
        }
    }
    Ok(Some(table.rows))
}

fn created_stamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

/// Runs every `(schedule, tau)` of the spec. With an output path, rows are
/// appended as they finish and rows already in the file are skipped;
/// failed rows are retried. The finished file is sorted by schedule order,
/// then `tau`.
pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions) -> Result<SweepTable> {
    let model = spec.model.build()?;
    let names: Vec<String> = spec.schedules.iter().map(|s| s.to_string()).collect();
    let taus = spec.tau_grid.points();
    let metadata = sweep_metadata(spec);

    let mut done: HashMap<(String, String), SweepRow> = HashMap::new();
    let mut writer = None;
    if let Some(path) = &spec.output {
        let previous = existing_rows(path, &metadata)?;
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = match previous {
            Some(rows) => {
                for r in rows.into_iter().filter(SweepRow::is_ok) {
                    done.insert(r.key(), r);
                }
                truncate_partial_line(path)?;
                OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?
            }
            None => {
                let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
                let header = SweepTable {
                    metadata: metadata.clone(),
                    columns: Vec::new(),
                    rows: Vec::new(),
                };
                f.write_all(header.to_csv().as_bytes()).map_err(|e| Error::io(path, e))?;
                f
            }
        };
        writer = Some((path.clone(), BufWriter::new(file)));
    }

    let pending: Vec<(usize, f64)> = (0..names.len())
        .flat_map(|i| taus.iter().map(move |&t| (i, t)))
        .filter(|(i, t)| !done.contains_key(&row_key(&names[*i], *t)))
        .collect();
    let limit = opts.max_new_rows.unwrap_or(usize::MAX).min(pending.len());
    let jobs = opts.jobs.clamp(1, limit.max(1));
    let next = AtomicUsize::new(0);
    let mut write_error = None;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        for _ in 0..jobs {
            let tx = tx.clone();
            let (next, pending, names, model) = (&next, &pending, &names, &model);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= limit {
                    break;
                }
                let (si, tau) = pending[i];
                let row = compute_row(model, &spec.schedules[si], &names[si], tau, &spec.integrator);
                if tx.send(row).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (count, row) in rx.into_iter().enumerate() {
            if opts.verbose {
                let status = row.error.as_deref().unwrap_or("ok");
                eprintln!(
                    "[{}/{limit}] {} tau={:.6e} p_excited={:.6e} e_residual={:.6e} {status}",
                    count + 1,
                    row.schedule,
                    row.tau,
                    row.p_excited,
                    row.e_residual
                );
            }
            if let Some((path, w)) = writer.as_mut() {
                let res = writeln!(w, "{}", row.to_csv()).and_then(|_| w.flush());
                if let Err(e) = res {
                    write_error.get_or_insert(Error::io(path.as_path(), e));
                }
            }
            done.insert(row.key(), row);
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }

    let mut rows = Vec::new();
    for name in &names {
        for &tau in &taus {
            if let Some(r) = done.remove(&row_key(name, tau)) {
                rows.push(r);
            }
        }
    }
    let mut metadata = metadata;
    metadata.push(("created".into(), created_stamp()));
    let table = SweepTable {
        metadata,
        columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows,
    };
    if let Some((path, w)) = writer {
        drop(w);
        write_atomic(&path, &table.to_csv())?;
    }
    Ok(table)
}

fn truncate_partial_line(path: &Path) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.last() == Some(&b'\n') {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let f = OpenOptions::new().write(true).open(path).map_err(|e| Error::io(path, e))?;
    f.set_len(keep as u64).map_err(|e| Error::io(path, e))
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, text).map_err(|e| Error::io(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}
