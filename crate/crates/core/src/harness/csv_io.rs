//! CSV input (long-format panels) and output (results, ROC points, summaries,
//! bootstrap tables).

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::dataset::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::harness::bootstrap::BootstrapCell;
use crate::harness::scenario::{ReplicateResult, SummaryRow};

pub const RESULTS_HEADER: [&str; 14] = [
    "replicate", "classifier", "trimming", "accuracy", "youden", "sensitivity", "specificity", "tp", "fp",
    "tn", "fn", "converged", "runtime_ms", "error",
];
pub const ROC_HEADER: [&str; 5] = ["replicate", "classifier", "trimming", "fpr", "tpr"];
pub const SUMMARY_HEADER: [&str; 15] = [
    "classifier", "trimming", "replicates", "failures", "converged", "accuracy_mean", "accuracy_sd",
    "youden_mean", "youden_sd", "sensitivity_mean", "sensitivity_sd", "specificity_mean", "specificity_sd",
    "accuracy", "youden",
];

/// Six significant digits, shortest round-trip form; non-finite values as `NA`.
pub fn fmt_sig6(x: f64) -> String {
    if !x.is_finite() {
        return "NA".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// `mean (sd)` at three decimals.
pub fn fmt_mean_sd(mean: f64, sd: f64) -> String {
    if mean.is_finite() && sd.is_finite() {
        format!("{mean:.3} ({sd:.3})")
    } else {
        "NA".into()
    }
}

fn data_err(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("line {line}: {msg}"))
}

/// Reads `subject,group,time,<var1>,...,<varp>`, one row per subject and
/// time point, times numbered `1..t`. Subjects keep first-appearance order.
pub fn load_long_csv(path: &Path) -> Result<LongitudinalDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_long_csv(file)
}

pub fn read_long_csv<R: std::io::Read>(reader: R) -> Result<LongitudinalDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 4 || &header[0] != "subject" || &header[1] != "group" || &header[2] != "time" {
        return Err(Error::Data(
            "header must be subject,group,time followed by at least one variable".into(),
        ));
    }
    let names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
    let p = names.len();

    struct Subject {
        group: u8,
        rows: HashMap<usize, Vec<f64>>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut subjects: HashMap<String, Subject> = HashMap::new();
    let mut t = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |pos| pos.line());
        if rec.len() != header.len() {
            return Err(data_err(line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let id = rec[0].to_string();
        let group: u8 = match &rec[1] {
            "0" => 0,
            "1" => 1,
            g => return Err(data_err(line, format!("group must be 0 or 1, found '{g}'"))),
        };
        let time: usize = rec[2]
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| data_err(line, format!("time must be a positive integer, found '{}'", &rec[2])))?;
        let mut values = Vec::with_capacity(p);
        for (c, cell) in rec.iter().enumerate().skip(3) {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                data_err(line, format!("column '{}' is not a finite number: '{cell}'", names[c - 3]))
            })?;
            values.push(v);
        }
        t = t.max(time);
        let entry = subjects.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Subject { group, rows: HashMap::new() }
        });
        if entry.group != group {
            return Err(data_err(line, format!("subject '{id}' changes group")));
        }
        if entry.rows.insert(time, values).is_some() {
            return Err(data_err(line, format!("subject '{id}' repeats time {time}")));
        }
    }
    if order.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }

    let mut missing = Vec::new();
    for id in &order {
        for k in 1..=t {
            if !subjects[id].rows.contains_key(&k) {
                missing.push(format!("({id}, {k})"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Data(format!("incomplete panel, missing (subject, time): {}", missing.join(", "))));
    }

    let n = order.len();
    let mut x = DMatrix::zeros(n, p * t);
    let mut labels = Vec::with_capacity(n);
    for (j, id) in order.iter().enumerate() {
        let s = &subjects[id];
        labels.push(s.group);
        for k in 0..t {
            for (l, &v) in s.rows[&(k + 1)].iter().enumerate() {
                x[(j, k * p + l)] = v;
            }
        }
    }
    LongitudinalDataset::with_names(x, labels, p, t, names)
}

/// Writes a dataset in the format read by [`load_long_csv`], subjects numbered from 1.
pub fn write_long_csv(ds: &LongitudinalDataset, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["subject".to_string(), "group".into(), "time".into()];
    header.extend(ds.variable_names.iter().cloned());
    w.write_record(&header)?;
    for j in 0..ds.n() {
        for k in 0..ds.t {
            let mut rec = vec![(j + 1).to_string(), ds.labels[j].to_string(), (k + 1).to_string()];
            rec.extend((0..ds.p).map(|l| format!("{}", ds.value(j, l, k))));
            w.write_record(&rec)?;
        }
    }
    finish(w)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

pub fn emit_results_csv(rows: &[ReplicateResult], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        let m = r.metrics.as_ref();
        let num = |f: fn(&crate::eval::MetricSet) -> f64| m.map_or("NA".to_string(), |m| fmt_sig6(f(m)));
        let count = |f: fn(&crate::eval::MetricSet) -> usize| m.map_or("NA".to_string(), |m| f(m).to_string());
        w.write_record([
            r.replicate.to_string(),
            r.classifier.name().to_string(),
            r.trimming.name().to_string(),
            num(|m| m.accuracy),
            num(|m| m.youden),
            num(|m| m.sensitivity),
            num(|m| m.specificity),
            count(|m| m.tp),
            count(|m| m.fp),
            count(|m| m.tn),
            count(|m| m.fn_),
            r.converged.to_string(),
            r.runtime_ms.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    finish(w)
}

/// One `(1 - specificity, sensitivity)` point per successful replicate.
pub fn emit_roc_points_csv(rows: &[ReplicateResult], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(ROC_HEADER)?;
    for r in rows {
        if let Some(m) = &r.metrics {
            w.write_record([
                r.replicate.to_string(),
                r.classifier.name().to_string(),
                r.trimming.name().to_string(),
                fmt_sig6(1.0 - m.specificity),
                fmt_sig6(m.sensitivity),
            ])?;
        }
    }
    finish(w)
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in rows {
        w.write_record([
            s.classifier.name().to_string(),
            s.trimming.name().to_string(),
            s.replicates.to_string(),
            s.failures.to_string(),
            s.converged.to_string(),
            fmt_sig6(s.accuracy.0),
            fmt_sig6(s.accuracy.1),
            fmt_sig6(s.youden.0),
            fmt_sig6(s.youden.1),
            fmt_sig6(s.sensitivity.0),
            fmt_sig6(s.sensitivity.1),
            fmt_sig6(s.specificity.0),
            fmt_sig6(s.specificity.1),
            fmt_mean_sd(s.accuracy.0, s.accuracy.1),
            fmt_mean_sd(s.youden.0, s.youden.1),
        ])?;
    }
    finish(w)
}

pub fn emit_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_summary_csv(rows, file)
}

/// Long format: one row per classifier × trimming × measure.
pub fn emit_bootstrap_csv(cells: &[BootstrapCell], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "classifier", "trimming", "measure", "estimate", "ci_lo", "ci_hi", "apparent", "oob", "b_used", "cell", "error",
    ])?;
    for c in cells {
        let na = || "NA".to_string();
        let (est, lo, hi, app, oob, b) = match &c.estimate {
            Some(e) => (
                fmt_sig6(e.theta_632plus),
                fmt_sig6(e.ci.0),
                fmt_sig6(e.ci.1),
                fmt_sig6(e.apparent),
                fmt_sig6(e.oob),
                e.b_used.to_string(),
            ),
            None => (na(), na(), na(), na(), na(), na()),
        };
        w.write_record([
            c.classifier.name().to_string(),
            c.trimming.name().to_string(),
            c.measure.name().to_string(),
            est,
            lo,
            hi,
            app,
            oob,
            b,
            c.display(),
            c.error.clone().unwrap_or_default(),
        ])?;
    }
    finish(w)
}

/// Wide layout: one row per classifier × trimming, one `mean (lo, hi)` column per measure.
pub fn write_bootstrap_table<W: Write>(cells: &[BootstrapCell], out: W) -> Result<()> {
    let mut measures = Vec::new();
    let mut keys = Vec::new();
    for c in cells {
        if !measures.contains(&c.measure) {
            measures.push(c.measure);
        }
        if !keys.contains(&(c.classifier, c.trimming)) {
            keys.push((c.classifier, c.trimming));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["classifier".to_string(), "trimming".into()];
    header.extend(measures.iter().map(|m| m.name().to_string()));
    w.write_record(&header)?;
    for (k, tr) in keys {
        let mut rec = vec![k.name().to_string(), tr.name().to_string()];
        for m in &measures {
            rec.push(
                cells
                    .iter()
                    .find(|c| c.classifier == k && c.trimming == tr && c.measure == *m)
                    .map_or_else(|| "NA".to_string(), BootstrapCell::display),
            );
        }
        w.write_record(&rec)?;
    }
    finish(w)
}
