//! Graph layout, DOT output and the on-disk artifact tree.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{pr_curve, roc_curve};
use crate::pipeline::{CellOutcome, ModelResult, RunResult};
use crate::structure::TwoSliceStructure;

/// Circle radius in DOT points.
pub const LAYOUT_RADIUS: f64 = 200.0;
/// Angle of the most important feature, degrees counterclockwise from +x.
pub const LAYOUT_START: f64 = 270.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Highlight,
    Outcome,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutNode {
    pub name: String,
    /// Degrees in `[0, 360)`.
    pub angle: f64,
    pub radius: f64,
    pub role: NodeRole,
}

impl LayoutNode {
    pub fn position(&self) -> (f64, f64) {
        let r = self.angle.to_radians();
        (self.radius * r.cos(), self.radius * r.sin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphLayout {
    /// Placement order: most important feature, outcome, then the remaining
    /// features by importance.
    pub nodes: Vec<LayoutNode>,
}

/// Places nodes on a circle counterclockwise by importance. `importance`
/// lists features most important first; the outcome sits one step
/// counterclockwise of the leader.
pub fn layout(structure: &TwoSliceStructure, importance: &[String]) -> Result<GraphLayout> {
    let target = &structure.nodes[structure.target].name;
    let features: Vec<&String> = structure
        .nodes
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != structure.target)
        .map(|(_, n)| &n.name)
        .collect();
    let mut ordered: Vec<&String> = importance.iter().filter(|n| features.contains(n)).collect();
    if let Some(missing) = features.iter().find(|f| !ordered.contains(f)) {
        return Err(Error::Layout(format!("`{missing}` has no importance rank")));
    }
    ordered.insert(ordered.len().min(1), target);
    let step = 360.0 / ordered.len() as f64;
    let nodes = ordered
        .iter()
        .enumerate()
        .map(|(i, name)| LayoutNode {
            name: (*name).clone(),
            angle: (LAYOUT_START + step * i as f64).rem_euclid(360.0),
            radius: LAYOUT_RADIUS,
            role: if *name == target {
                NodeRole::Outcome
            } else if i == 0 {
                NodeRole::Highlight
            } else {
                NodeRole::Plain
            },
        })
        .collect();
    Ok(GraphLayout { nodes })
}

fn coord(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT digraph with pinned positions, solid intra-slice edges and dashed red
/// edges from the previous slice.
pub fn emit_dot(structure: &TwoSliceStructure, importance: &[String], title: &str) -> Result<String> {
    let lay = layout(structure, importance)?;
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(title));
    out.push_str("  layout=neato;\n  node [shape=ellipse, style=filled, fillcolor=white];\n");
    for n in &lay.nodes {
        let (x, y) = n.position();
        let fill = match n.role {
            NodeRole::Highlight => ", fillcolor=yellow",
            NodeRole::Outcome => ", fillcolor=lightblue",
            NodeRole::Plain => "",
        };
        let _ = writeln!(out, "  {} [pos=\"{},{}!\"{}];", quote(&n.name), coord(x), coord(y), fill);
    }
    for (v, ps) in structure.intra.iter().enumerate() {
        for &p in ps {
            let _ = writeln!(out, "  {} -> {};", quote(&structure.nodes[p].name), quote(&structure.nodes[v].name));
        }
    }
    for (v, ps) in structure.inter.iter().enumerate() {
        for &p in ps {
            let _ = writeln!(
                out,
                "  {} -> {} [style=dashed, color=red];",
                quote(&structure.nodes[p].name),
                quote(&structure.nodes[v].name)
            );
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Stored next to the DOT file so the graph can be redrawn later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFile {
    pub title: String,
    pub importance: Vec<String>,
    pub intra_score: f64,
    pub structure: TwoSliceStructure,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Creates `out` if needed and checks that it accepts files.
pub fn preflight_output(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
    let probe = out.join(".raus-write-check");
    std::fs::write(&probe, b"").map_err(|e| Error::io(format!("writing into {}", out.display()), e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(format!("cleaning {}", probe.display()), e))
}

/// Leaf folder of one model, relative to the output root.
pub fn leaf_dir(cell: &CellOutcome) -> PathBuf {
    PathBuf::from(cell.window.to_string()).join(&cell.label)
}

fn model_files(m: &ModelResult, dir: &Path) -> Result<()> {
    let mut csv = String::from("rank,variable,method,statistic,p_value,selected\n");
    for s in &m.ranking.scores {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            s.rank,
            s.variable,
            s.method,
            s.statistic,
            opt(s.p_value),
            m.ranking.selected.contains(&s.variable)
        );
    }
    write(&dir.join("rankings.csv"), &csv)?;

    let sf = StructureFile {
        title: m.report.model.clone(),
        importance: m.importance.clone(),
        intra_score: m.intra_score,
        structure: m.structure.clone(),
    };
    write(&dir.join("structure.json"), &json(&sf)?)?;
    write(&dir.join("structure.dot"), &emit_dot(&m.structure, &m.importance, &m.report.model)?)?;

    #[derive(Serialize)]
    struct CptFile<'a> {
        cpts: &'a crate::params::CptSet,
        em_trace: &'a crate::params::EmTrace,
    }
    write(&dir.join("cpts.json"), &json(&CptFile { cpts: &m.cpts, em_trace: &m.trace })?)?;

    #[derive(Serialize)]
    struct MetricsFile<'a> {
        report: &'a crate::eval::EvalReport,
        settings: &'a crate::pipeline::CellSettings,
        deviations: &'a [String],
    }
    write(
        &dir.join("metrics.json"),
        &json(&MetricsFile { report: &m.report, settings: &m.settings, deviations: &m.deviations })?,
    )?;

    let mut roc = String::from("timestep,threshold,fpr,tpr\n");
    let mut pr = String::from("timestep,threshold,recall,precision\n");
    for (t, set) in &m.scored {
        if let Ok(points) = roc_curve(set) {
            for p in points {
                let _ = writeln!(roc, "{t},{},{},{}", p.threshold, p.fpr, p.tpr);
            }
        }
        if let Ok(points) = pr_curve(set) {
            for p in points {
                let _ = writeln!(pr, "{t},{},{},{}", p.threshold, p.recall, p.precision);
            }
        }
    }
    write(&dir.join("roc_points.csv"), &roc)?;
    write(&dir.join("pr_points.csv"), &pr)?;

    let mut ops = String::from("timestep,target_precision,threshold,reachable,tp,fp,tn,fn,precision,recall,tnr,npv,fnr\n");
    for (t, op) in &m.operating_points {
        let c = &op.matrix;
        let _ = writeln!(
            ops,
            "{t},{},{},{},{},{},{},{},{},{},{},{},{}",
            op.target_precision,
            op.threshold,
            op.reachable,
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            opt(c.precision()),
            opt(c.recall()),
            opt(c.tnr()),
            opt(c.npv()),
            opt(c.fnr())
        );
    }
    write(&dir.join("operating_points.csv"), &ops)
}

fn top_level_files(run: &RunResult, out: &Path) -> Result<()> {
    write(&out.join("summary.json"), &json(&run.summary)?)?;
    write(&out.join("bins.json"), &json(&run.bins)?)?;
    write(&out.join("event_flow.csv"), &run.event_flow.to_csv())?;

    let mut ca = String::from("model,class,window,region,count,percent\n");
    for (model, agreement) in &run.agreement {
        for s in &agreement.shares {
            let region = if s.region.is_empty() {
                "none".to_string()
            } else {
                s.region.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("+")
            };
            let _ = writeln!(ca, "{model},{:?},{},{region},{},{}", s.class, s.window, s.count, opt(s.percent));
        }
        for e in &agreement.etp {
            let _ = writeln!(ca, "{model},ETP,{},{},{},{}", e.from, e.to, e.count, opt(e.percent));
        }
    }
    write(&out.join("case_agreement.csv"), &ca)?;

    let mut ds = String::from("model,class,window,feature,n,effect_size,p_value,status\n");
    for r in &run.shifts {
        let _ = writeln!(
            ds,
            "{},{:?},{},{},{},{},{},{}",
            r.model,
            r.class,
            r.window.map(|w| w.to_string()).unwrap_or_else(|| "static".into()),
            r.feature,
            r.n,
            opt(r.effect_size),
            opt(r.p_value),
            r.status
        );
    }
    write(&out.join("distribution_shift.csv"), &ds)?;
    if let Some(cv) = &run.cross_validation {
        write(&out.join("cross_validation.json"), &json(cv)?)?;
    }
    Ok(())
}

/// Writes `<out>/<window>/<model>/…` for every successful cell plus the
/// top-level summaries. On failure everything written so far is removed.
pub fn emit_run_artifacts(run: &RunResult, out: &Path) -> Result<()> {
    preflight_output(out)?;
    let mut created: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for cell in &run.cells {
            let Ok(m) = &cell.result else { continue };
            let window_dir = out.join(cell.window.to_string());
            if !window_dir.exists() {
                created.push(window_dir.clone());
            }
            let dir = out.join(leaf_dir(cell));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
            created.push(dir.clone());
            model_files(m, &dir)?;
        }
        for name in ["summary.json", "bins.json", "event_flow.csv", "case_agreement.csv", "distribution_shift.csv", "cross_validation.json"] {
            created.push(out.join(name));
        }
        top_level_files(run, out)
    })();
    if result.is_err() {
        for p in created.iter().rev() {
            if p.is_dir() {
                let _ = std::fs::remove_dir_all(p);
            } else {
                let _ = std::fs::remove_file(p);
            }
        }
    }
    result
}

/// Redraws every `structure.dot` under `out` from its `structure.json`.
/// Returns the number of graphs written.
pub fn reemit_dot(out: &Path) -> Result<usize> {
    let mut count = 0;
    let mut stack = vec![out.to_path_buf()];
    let mut files = Vec::new();
    while let Some(dir) = stack.pop() {
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(format!("reading {}", dir.display()), e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io("listing artifacts", e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "structure.json") {
                files.push(path);
            }
        }
    }
    files.sort();
    for path in files {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let sf: StructureFile = serde_json::from_str(&text)?;
        let dot = emit_dot(&sf.structure, &sf.importance, &sf.title)?;
        write(&path.with_file_name("structure.dot"), &dot)?;
        count += 1;
    }
    Ok(count)
}
