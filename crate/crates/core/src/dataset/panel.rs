use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteVariable {
    pub name: String,
    /// One label per category; the cardinality is `labels.len()`.
    pub labels: Vec<String>,
}

impl DiscreteVariable {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Self {
        DiscreteVariable {
            name: name.into(),
            labels,
        }
    }

    /// Variable with categories labelled `0..cardinality`.
    pub fn with_cardinality(name: impl Into<String>, cardinality: usize) -> Self {
        DiscreteVariable::new(name, (0..cardinality).map(|c| c.to_string()).collect())
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }
}

/// Categorical longitudinal panel with one binary event label per subject
/// and timestep.
///
/// Cells are stored subject-major, then variable, then timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePanel {
    subject_ids: Vec<String>,
    variables: Vec<DiscreteVariable>,
    horizon: usize,
    cells: Vec<Option<u16>>,
    labels: Vec<bool>,
    statics: Vec<BTreeMap<String, String>>,
}

impl DiscretePanel {
    /// `cells[s][v][t]` and `labels[s][t]`.
    pub fn new(
        subject_ids: Vec<String>,
        variables: Vec<DiscreteVariable>,
        horizon: usize,
        cells: Vec<Vec<Vec<Option<usize>>>>,
        labels: Vec<Vec<bool>>,
    ) -> Result<Self> {
        let n = subject_ids.len();
        if cells.len() != n || labels.len() != n {
            return Err(Error::Schema("cells/labels do not match subject count".into()));
        }
        let mut flat = Vec::with_capacity(n * variables.len() * horizon);
        for (s, per_var) in cells.iter().enumerate() {
            if per_var.len() != variables.len() {
                return Err(Error::Schema(format!("subject {s}: wrong variable count")));
            }
            for (v, series) in per_var.iter().enumerate() {
                if series.len() != horizon {
                    return Err(Error::Schema(format!("subject {s}: wrong series length")));
                }
                for &c in series {
                    if let Some(c) = c {
                        if c >= variables[v].cardinality() {
                            return Err(Error::Schema(format!(
                                "category {c} out of range for `{}`",
                                variables[v].name
                            )));
                        }
                    }
                    flat.push(c.map(|c| c as u16));
                }
            }
        }
        let mut flat_labels = Vec::with_capacity(n * horizon);
        for l in &labels {
            if l.len() != horizon {
                return Err(Error::Schema("label series length mismatch".into()));
            }
            flat_labels.extend_from_slice(l);
        }
        Ok(DiscretePanel {
            subject_ids,
            variables,
            horizon,
            cells: flat,
            labels: flat_labels,
            statics: vec![BTreeMap::new(); n],
        })
    }

    pub(crate) fn from_flat(
        subject_ids: Vec<String>,
        variables: Vec<DiscreteVariable>,
        horizon: usize,
        cells: Vec<Option<u16>>,
        labels: Vec<bool>,
        statics: Vec<BTreeMap<String, String>>,
    ) -> Self {
        debug_assert_eq!(cells.len(), subject_ids.len() * variables.len() * horizon);
        debug_assert_eq!(labels.len(), subject_ids.len() * horizon);
        DiscretePanel {
            subject_ids,
            variables,
            horizon,
            cells,
            labels,
            statics,
        }
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_ids.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn variables(&self) -> &[DiscreteVariable] {
        &self.variables
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn statics(&self, subject: usize) -> &BTreeMap<String, String> {
        &self.statics[subject]
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn cardinality(&self, var: usize) -> usize {
        self.variables[var].cardinality()
    }

    #[inline]
    pub fn cell(&self, subject: usize, var: usize, t: usize) -> Option<usize> {
        let nv = self.variables.len();
        self.cells[(subject * nv + var) * self.horizon + t].map(usize::from)
    }

    #[inline]
    pub fn label(&self, subject: usize, t: usize) -> bool {
        self.labels[subject * self.horizon + t]
    }

    /// True when the subject has an event at any timestep.
    pub fn ever_event(&self, subject: usize) -> bool {
        (0..self.horizon).any(|t| self.label(subject, t))
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Replaces every label; `labels[s][t]`.
    pub fn with_labels(mut self, labels: &[Vec<bool>]) -> Result<Self> {
        if labels.len() != self.n_subjects() || labels.iter().any(|l| l.len() != self.horizon) {
            return Err(Error::Schema("label grid does not match panel".into()));
        }
        self.labels = labels.iter().flatten().copied().collect();
        Ok(self)
    }

    pub fn with_statics(mut self, statics: Vec<BTreeMap<String, String>>) -> Result<Self> {
        if statics.len() != self.n_subjects() {
            return Err(Error::Schema("statics do not match subject count".into()));
        }
        self.statics = statics;
        Ok(self)
    }

    /// Panel restricted to the listed subjects (repeats allowed, order kept).
    pub fn subset(&self, subjects: &[usize]) -> DiscretePanel {
        let nv = self.variables.len();
        let h = self.horizon;
        let mut cells = Vec::with_capacity(subjects.len() * nv * h);
        let mut labels = Vec::with_capacity(subjects.len() * h);
        for &s in subjects {
            cells.extend_from_slice(&self.cells[s * nv * h..(s + 1) * nv * h]);
            labels.extend_from_slice(&self.labels[s * h..(s + 1) * h]);
        }
        DiscretePanel {
            subject_ids: subjects.iter().map(|&s| self.subject_ids[s].clone()).collect(),
            variables: self.variables.clone(),
            horizon: h,
            cells,
            labels,
            statics: subjects.iter().map(|&s| self.statics[s].clone()).collect(),
        }
    }

    /// Panel restricted to the named variables, in the order given.
    pub fn select_variables(&self, names: &[String]) -> Result<DiscretePanel> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.variable_index(n)
                    .ok_or_else(|| Error::Schema(format!("unknown variable `{n}`")))
            })
            .collect::<Result<_>>()?;
        let nv = self.variables.len();
        let h = self.horizon;
        let mut cells = Vec::with_capacity(self.n_subjects() * idx.len() * h);
        for s in 0..self.n_subjects() {
            for &v in &idx {
                let start = (s * nv + v) * h;
                cells.extend_from_slice(&self.cells[start..start + h]);
            }
        }
        Ok(DiscretePanel {
            subject_ids: self.subject_ids.clone(),
            variables: idx.iter().map(|&v| self.variables[v].clone()).collect(),
            horizon: h,
            cells,
            labels: self.labels.clone(),
            statics: self.statics.clone(),
        })
    }
}
