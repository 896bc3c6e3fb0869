use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One subject's longitudinal record. `values` is laid out variable-major:
/// `values[var * horizon + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub values: Vec<Option<f64>>,
    pub statics: BTreeMap<String, String>,
}

/// Continuous longitudinal panel, as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPanel {
    pub variables: Vec<String>,
    pub horizon: usize,
    pub subjects: Vec<SubjectRecord>,
    /// Event labels per subject and timestep when the input carried a label
    /// column. Absent rows and empty label fields read as no-event.
    pub labels: Option<Vec<Vec<bool>>>,
}

impl RawPanel {
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn value(&self, subject: usize, var: usize, t: usize) -> Option<f64> {
        self.subjects[subject].values[var * self.horizon + t]
    }

    /// Series of one variable for every subject.
    pub fn series(&self, var: usize) -> Vec<Vec<Option<f64>>> {
        self.subjects
            .iter()
            .map(|s| s.values[var * self.horizon..(var + 1) * self.horizon].to_vec())
            .collect()
    }

    /// Keeps the listed subjects, in the order given.
    pub fn subset(&self, subjects: &[usize]) -> RawPanel {
        RawPanel {
            variables: self.variables.clone(),
            horizon: self.horizon,
            subjects: subjects.iter().map(|&i| self.subjects[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| subjects.iter().map(|&i| l[i].clone()).collect()),
        }
    }

    /// Drops a variable column (used when a lab only feeds the labeler).
    pub fn without_variable(&self, name: &str) -> RawPanel {
        let Some(drop) = self.variable_index(name) else {
            return self.clone();
        };
        let h = self.horizon;
        let subjects = self
            .subjects
            .iter()
            .map(|s| {
                let mut values = Vec::with_capacity(s.values.len() - h);
                for (v, chunk) in s.values.chunks(h).enumerate() {
                    if v != drop {
                        values.extend_from_slice(chunk);
                    }
                }
                SubjectRecord {
                    subject_id: s.subject_id.clone(),
                    values,
                    statics: s.statics.clone(),
                }
            })
            .collect();
        let mut variables = self.variables.clone();
        variables.remove(drop);
        RawPanel {
            variables,
            horizon: h,
            subjects,
            labels: self.labels.clone(),
        }
    }
}

/// Column conventions for [`load_panel`].
#[derive(Debug, Clone)]
pub struct CsvFormat {
    pub subject_column: String,
    pub timestep_column: String,
    pub label_column: String,
    /// Columns whose header starts with this prefix are per-subject static
    /// attributes, not longitudinal variables.
    pub static_prefix: String,
}

impl Default for CsvFormat {
    fn default() -> Self {
        CsvFormat {
            subject_column: "subject_id".into(),
            timestep_column: "timestep".into(),
            label_column: "label".into(),
            static_prefix: "static:".into(),
        }
    }
}

pub fn load_panel(path: impl AsRef<Path>, format: &CsvFormat) -> Result<RawPanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_panel(file, path, format)
}

enum Column {
    Variable(usize),
    Label,
    Static(String),
}

/// Parses the panel CSV from any reader; `origin` is used in error messages.
pub fn read_panel<R: Read>(reader: R, origin: &Path, format: &CsvFormat) -> Result<RawPanel> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();

    let mut seen = HashSet::new();
    for h in headers.iter() {
        if !seen.insert(h) {
            return Err(Error::Schema(format!("duplicate column `{h}`")));
        }
    }
    if headers.get(0) != Some(format.subject_column.as_str())
        || headers.get(1) != Some(format.timestep_column.as_str())
    {
        return Err(Error::Schema(format!(
            "header must start with `{},{}`",
            format.subject_column, format.timestep_column
        )));
    }

    let mut variables = Vec::new();
    let mut columns = Vec::new();
    let mut has_label = false;
    for h in headers.iter().skip(2) {
        if h == format.label_column {
            has_label = true;
            columns.push(Column::Label);
        } else if let Some(name) = h.strip_prefix(format.static_prefix.as_str()) {
            columns.push(Column::Static(name.to_string()));
        } else {
            columns.push(Column::Variable(variables.len()));
            variables.push(h.to_string());
        }
    }

    struct Row {
        subject: usize,
        t: usize,
        values: Vec<Option<f64>>,
        label: bool,
    }
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut statics: Vec<BTreeMap<String, String>> = Vec::new();
    let mut rows = Vec::new();
    let mut max_t = 0usize;

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record.get(0).unwrap_or("");
        if id.is_empty() {
            return Err(parse_err(line, "empty subject_id".into()));
        }
        let t: usize = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| parse_err(line, format!("bad timestep `{}`", &record[1])))?;
        max_t = max_t.max(t);
        let subject = *index.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            statics.push(BTreeMap::new());
            order.len() - 1
        });
        let mut values = vec![None; variables.len()];
        let mut label = false;
        for (col, field) in columns.iter().zip(record.iter().skip(2)) {
            match col {
                Column::Variable(v) => {
                    if !field.is_empty() {
                        let x: f64 = field.parse().map_err(|_| {
                            parse_err(line, format!("non-numeric value `{field}` in `{}`", variables[*v]))
                        })?;
                        values[*v] = Some(x);
                    }
                }
                Column::Label => {
                    label = match field {
                        "" | "0" | "false" => false,
                        "1" | "true" => true,
                        other => return Err(parse_err(line, format!("bad label `{other}`"))),
                    }
                }
                Column::Static(name) => {
                    if !field.is_empty() {
                        statics[subject].insert(name.clone(), field.to_string());
                    }
                }
            }
        }
        rows.push(Row {
            subject,
            t,
            values,
            label,
        });
    }

    let horizon = max_t + 1;
    if horizon < 2 {
        return Err(Error::Schema(format!("need at least 2 timesteps, found {horizon}")));
    }
    let nv = variables.len();
    let mut subjects: Vec<SubjectRecord> = order
        .into_iter()
        .zip(statics)
        .map(|(subject_id, statics)| SubjectRecord {
            subject_id,
            values: vec![None; nv * horizon],
            statics,
        })
        .collect();
    let mut labels = vec![vec![false; horizon]; subjects.len()];
    // Later rows overwrite earlier ones: the last observation in a period wins.
    for row in rows {
        let rec = &mut subjects[row.subject];
        for (v, x) in row.values.into_iter().enumerate() {
            rec.values[v * horizon + row.t] = x;
        }
        labels[row.subject][row.t] = row.label;
    }

    Ok(RawPanel {
        variables,
        horizon,
        subjects,
        labels: has_label.then_some(labels),
    })
}
