//! File formats. Positions, labels, days, node ids and fold ids are
//! one-based on disk and zero-based in memory.
//!
//! * Sequences: CSV with header
//!   `structure_id,t,covariate_1..covariate_R[,label][,day_of_week]`.
//! * Graphs: JSON `{"nodes": [{"id", "x", "label"?}], "edges": [[i, j], ...]}`.
//! * Reports: CSV plus a JSON sidecar with the same stem.
//!
//! Floats in CSVs are written with 17 significant digits so they parse
//! back to the same bits.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cv::{Comparison, CvReport, FoldFailure, FoldOutcome, Method, SweepRecord};
use crate::data::{Structure, StructuredDataset};
use crate::error::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a non-negative integer: {s:?}")))
}

fn one_based(s: &str, what: &str) -> Result<usize> {
    match parse_usize(s)? {
        0 => Err(Error::Parse(format!("{what} is one-based, got 0"))),
        v => Ok(v - 1),
    }
}

fn join<T, F: Fn(&T) -> String>(items: &[T], f: F) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(";")
}

fn split<T, F: Fn(&str) -> Result<T>>(s: &str, f: F) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(f).collect()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::arg(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Parse the sequence format. Structures appear in order of first mention;
/// rows within a structure may come in any order but must cover `1..=T`.
pub fn read_sequences<R: Read>(reader: R) -> Result<StructuredDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("structure_id") || header.get(1) != Some("t") {
        return Err(Error::Parse("header must start with structure_id,t".into()));
    }
    let mut r = 0;
    while header.get(2 + r) == Some(&format!("covariate_{}", r + 1)) {
        r += 1;
    }
    let mut rest: Vec<&str> = header.iter().skip(2 + r).collect();
    let has_day = rest.last() == Some(&"day_of_week");
    if has_day {
        rest.pop();
    }
    let has_label = rest.last() == Some(&"label");
    if has_label {
        rest.pop();
    }
    if !rest.is_empty() {
        return Err(Error::Parse(format!("unexpected columns {rest:?}")));
    }
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(usize, Vec<f64>, Option<usize>, Option<usize>)>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec[0].to_string();
        let t = one_based(&rec[1], "t")?;
        let x = (0..r).map(|j| parse_f64(&rec[2 + j])).collect::<Result<Vec<_>>>()?;
        let label = if has_label { Some(one_based(&rec[2 + r], "label")?) } else { None };
        let day = if has_day { Some(one_based(&rec[rec.len() - 1], "day_of_week")?) } else { None };
        if !rows.contains_key(&id) {
            order.push(id.clone());
        }
        rows.entry(id).or_default().push((t, x, label, day));
    }
    let mut structures = Vec::with_capacity(order.len());
    for id in order {
        let mut v = rows.remove(&id).unwrap();
        v.sort_by_key(|row| row.0);
        if v.iter().enumerate().any(|(i, row)| row.0 != i) {
            return Err(Error::Parse(format!("structure {id:?} does not cover t = 1..{} exactly once", v.len())));
        }
        let labels = has_label.then(|| v.iter().map(|row| row.2.unwrap()).collect());
        let day = has_day.then(|| v.iter().map(|row| row.3.unwrap()).collect());
        let mut s = Structure::sequence(v.into_iter().map(|row| row.1).collect());
        s.labels = labels;
        s.day = day;
        structures.push(s);
    }
    StructuredDataset::new(structures)
}

pub fn write_sequences<W: Write>(data: &StructuredDataset, writer: W) -> Result<()> {
    let r = data.structures.first().map_or(0, Structure::dim);
    let has_label = data.structures.iter().all(|s| s.labels.is_some());
    let has_day = data.structures.iter().all(|s| s.day.is_some());
    let mut w = csv_writer(writer);
    let mut header = vec!["structure_id".to_string(), "t".to_string()];
    header.extend((1..=r).map(|j| format!("covariate_{j}")));
    if has_label {
        header.push("label".into());
    }
    if has_day {
        header.push("day_of_week".into());
    }
    w.write_record(&header)?;
    for (n, s) in data.structures.iter().enumerate() {
        if !s.is_chain() {
            return Err(Error::arg(format!("structure {} is not a sequence; use the graph format", n + 1)));
        }
        for t in 0..s.len() {
            let mut row = vec![(n + 1).to_string(), (t + 1).to_string()];
            row.extend(s.obs[t].iter().map(|&v| fmt_covariate(v)));
            if let (true, Some(l)) = (has_label, &s.labels) {
                row.push((l[t] + 1).to_string());
            }
            if let (true, Some(d)) = (has_day, &s.day) {
                row.push((d[t] + 1).to_string());
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Integers stay integers so count data reads naturally.
fn fmt_covariate(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        fmt_f64(v)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphNode {
    id: usize,
    x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    nodes: Vec<GraphNode>,
    edges: Vec<[usize; 2]>,
}

pub fn read_graph<R: Read>(reader: R) -> Result<StructuredDataset> {
    let mut doc: GraphDoc = serde_json::from_reader(reader)?;
    doc.nodes.sort_by_key(|n| n.id);
    if doc.nodes.iter().enumerate().any(|(i, n)| n.id != i + 1) {
        return Err(Error::Parse("node ids must be 1..=T, each once".into()));
    }
    let t = doc.nodes.len();
    let edges = doc
        .edges
        .iter()
        .map(|&[a, b]| {
            if a == 0 || b == 0 || a > t || b > t {
                Err(Error::Parse(format!("edge [{a}, {b}] refers to a missing node")))
            } else {
                Ok((a - 1, b - 1))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = if doc.nodes.iter().all(|n| n.label.is_some()) {
        Some(doc.nodes.iter().map(|n| n.label.unwrap().checked_sub(1).ok_or_else(|| Error::Parse("labels are one-based".into()))).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    StructuredDataset::single(Structure {
        obs: doc.nodes.into_iter().map(|n| n.x).collect(),
        labels,
        day: None,
        edges,
    })
}

pub fn write_graph<W: Write>(s: &Structure, writer: W) -> Result<()> {
    let doc = GraphDoc {
        nodes: s
            .obs
            .iter()
            .enumerate()
            .map(|(i, x)| GraphNode {
                id: i + 1,
                x: x.clone(),
                label: s.labels.as_ref().map(|l| l[i] + 1),
            })
            .collect(),
        edges: s.edges.iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
    };
    serde_json::to_writer_pretty(writer, &doc)?;
    Ok(())
}

/// Load a dataset, choosing the format by extension: `.json` is a graph,
/// anything else the sequence CSV.
pub fn load_dataset(path: &Path) -> Result<StructuredDataset> {
    let f = open(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        read_graph(f)
    } else {
        read_sequences(f)
    }
}

pub fn save_dataset(data: &StructuredDataset, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        if data.len() != 1 {
            return Err(Error::arg("the graph format holds a single structure"));
        }
        write_graph(&data.structures[0], &mut f)?;
    } else {
        write_sequences(data, &mut f)?;
    }
    f.flush()?;
    Ok(())
}

/// The sidecar path: same stem, `.json` extension.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportSidecar {
    method: Method,
    config_hash: String,
    plan_size: usize,
    mean_loss: f64,
    refits: usize,
    failures: Vec<SidecarFailure>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarFailure {
    fold_id: usize,
    indices: Vec<usize>,
    message: String,
}

const REPORT_HEADER: [&str; 7] = ["fold_id", "method", "indices", "loss", "converged", "point_losses", "params"];

/// One row per completed fold, plus a sidecar of aggregates. Timings are
/// left out so repeated runs give identical files.
pub fn write_report(report: &CvReport, path: &Path, config_hash: &str) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(REPORT_HEADER)?;
    for o in &report.outcomes {
        w.write_record([
            (o.fold + 1).to_string(),
            report.method.to_string(),
            join(&o.indices, |i| (i + 1).to_string()),
            fmt_f64(o.loss),
            o.converged.to_string(),
            join(&o.point_losses, |&v| fmt_f64(v)),
            join(&o.params, |&v| fmt_f64(v)),
        ])?;
    }
    w.flush()?;
    let side = ReportSidecar {
        method: report.method,
        config_hash: config_hash.to_string(),
        plan_size: report.plan.len(),
        mean_loss: report.mean_loss(),
        refits: report.refits,
        failures: report
            .failures
            .iter()
            .map(|f| SidecarFailure {
                fold_id: f.fold + 1,
                indices: report.plan[f.fold].iter().map(|i| i + 1).collect(),
                message: f.message.clone(),
            })
            .collect(),
    };
    write_json(&side, &sidecar(path))
}

/// Inverse of [`write_report`]; timings read back as zero.
pub fn read_report(path: &Path) -> Result<CvReport> {
    let side: ReportSidecar = serde_json::from_reader(open(&sidecar(path))?)?;
    let mut rdr = csv::Reader::from_reader(open(path)?);
    if rdr.headers()?.iter().ne(REPORT_HEADER) {
        return Err(Error::Parse(format!("{} is not a CV report", path.display())));
    }
    let mut outcomes = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let method: Method = rec[1].parse()?;
        if method != side.method {
            return Err(Error::Parse("report rows disagree with the sidecar method".into()));
        }
        outcomes.push(FoldOutcome {
            fold: one_based(&rec[0], "fold_id")?,
            indices: split(&rec[2], |s| one_based(s, "index"))?,
            loss: parse_f64(&rec[3])?,
            converged: rec[4].parse().map_err(|_| Error::Parse(format!("bad flag {:?}", &rec[4])))?,
            point_losses: split(&rec[5], parse_f64)?,
            params: split(&rec[6], parse_f64)?,
            param_time: 0.0,
            loss_time: 0.0,
        });
    }
    let mut plan = vec![None; side.plan_size];
    for o in &outcomes {
        *plan.get_mut(o.fold).ok_or_else(|| Error::Parse("fold id beyond plan size".into()))? = Some(o.indices.clone());
    }
    let failures: Vec<FoldFailure> = side
        .failures
        .iter()
        .map(|f| {
            let fold = f.fold_id.checked_sub(1).filter(|&i| i < side.plan_size).ok_or_else(|| Error::Parse("bad failed fold id".into()))?;
            plan[fold] = Some(f.indices.iter().map(|i| i - 1).collect());
            Ok(FoldFailure {
                fold,
                message: f.message.clone(),
            })
        })
        .collect::<Result<_>>()?;
    let plan = plan
        .into_iter()
        .map(|p| p.ok_or_else(|| Error::Parse("report does not account for every fold".into())))
        .collect::<Result<_>>()?;
    Ok(CvReport {
        method: side.method,
        plan,
        outcomes,
        failures,
        setup_time: 0.0,
        refits: side.refits,
        wall_time: 0.0,
    })
}

#[derive(Serialize)]
struct ComparisonSidecar<'a> {
    method: Method,
    config_hash: &'a str,
    points: usize,
    exact_mean_loss: f64,
    approx_mean_loss: f64,
    median_rel_err: f64,
    mean_rel_err: f64,
    sd_rel_err: f64,
    pearson: f64,
}

/// Columns `fold_id,t,exact_loss,approx_loss,rel_err`.
pub fn write_comparison(c: &Comparison, path: &Path, config_hash: &str) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(["fold_id", "t", "exact_loss", "approx_loss", "rel_err"])?;
    for p in &c.points {
        w.write_record([(p.fold + 1).to_string(), (p.index + 1).to_string(), fmt_f64(p.exact), fmt_f64(p.approx), fmt_f64(p.rel_err)])?;
    }
    w.flush()?;
    let side = ComparisonSidecar {
        method: c.method,
        config_hash,
        points: c.points.len(),
        exact_mean_loss: c.exact_mean_loss,
        approx_mean_loss: c.approx_mean_loss,
        median_rel_err: c.median_rel_err,
        mean_rel_err: c.mean_rel_err,
        sd_rel_err: c.sd_rel_err,
        pearson: c.pearson,
    };
    write_json(&side, &sidecar(path))
}

/// Columns `iterate,eps_theta,grad_norm,ij_loss,error,ridge,fold_errors`.
pub fn write_sweep(rec: &SweepRecord, path: &Path, config_hash: &str) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(["iterate", "eps_theta", "grad_norm", "ij_loss", "error", "ridge", "fold_errors"])?;
    for p in &rec.points {
        w.write_record([
            p.iterate.to_string(),
            fmt_f64(p.eps_theta),
            fmt_f64(p.grad_norm),
            fmt_f64(p.ij_loss),
            fmt_f64(p.error),
            fmt_f64(p.ridge),
            join(&p.fold_errors, |&v| fmt_f64(v)),
        ])?;
    }
    w.flush()?;
    let side = serde_json::json!({
        "config_hash": config_hash,
        "exact_loss": rec.exact_loss,
        "slope": rec.slope,
        "intercept": rec.intercept,
        "r_squared": rec.r_squared,
        "tail_len": rec.tail_len,
        "skipped": rec.skipped,
    });
    write_json(&side, &sidecar(path))
}

/// Columns `index,value`, one-based index.
pub fn write_params(theta: &[f64], path: &Path) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(["index", "value"])?;
    for (i, &v) in theta.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_params(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if one_based(&rec[0], "index")? != out.len() {
            return Err(Error::Parse("parameter indices must run 1, 2, ...".into()));
        }
        out.push(parse_f64(&rec[1])?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
