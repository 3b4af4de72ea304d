//! Report files. Everything here runs after all computation is done, on one
//! thread, and is a pure function of the in-memory report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::persist::encode_model;
use super::run::{RunOutput, RunReport};
use super::svg;
use crate::data::EndpointMode;
use crate::error::{Error, Result};
use crate::models::Predictions;

pub const MODEL_FILE: &str = "model.clinpred";
pub const REPORT_FILE: &str = "run_report.json";
pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Config(format!("csv encoding: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Shortest text that parses back to the same value; `NA` when undefined.
fn value(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Report files by name, in emission order.
pub fn render_report(report: &RunReport) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let metric = report.metric.name();
    let test_model = report.training.as_ref().map_or("external", |t| t.selected.as_str()).to_string();

    if let Some(t) = &report.training {
        let mut rows = Vec::new();
        for c in &t.comparison {
            rows.push(vec!["resampled".into(), c.model.clone(), format!("{metric}_mean"), value(Some(c.mean))]);
            rows.push(vec!["resampled".into(), c.model.clone(), format!("{metric}_sd"), value(Some(c.sd))]);
        }
        for m in t.metrics.iter().filter(|m| !m.name.contains("_resampled")) {
            rows.push(vec!["apparent".into(), t.selected.clone(), m.name.clone(), value(m.value)]);
        }
        files.push(("metrics_train.csv".into(), csv_text(&["scope", "model", "metric", "value"], rows)?.into_bytes()));

        let rows = t
            .comparison
            .iter()
            .map(|c| {
                vec![
                    c.model.clone(),
                    c.hyper.clone(),
                    value(Some(c.mean)),
                    value(Some(c.sd)),
                    c.resamples.to_string(),
                    (c.model == t.selected).to_string(),
                ]
            })
            .collect();
        files.push((
            "comparison.csv".into(),
            csv_text(&["model", "selected_point", "mean", "sd", "resamples", "final"], rows)?.into_bytes(),
        ));
        let rows = t
            .tuning
            .iter()
            .map(|r| vec![r.model.clone(), r.point.clone(), value(Some(r.mean)), value(Some(r.sd))])
            .collect();
        files.push(("tuning.csv".into(), csv_text(&["model", "point", "mean", "sd"], rows)?.into_bytes()));
        let rows = t
            .importance
            .entries
            .iter()
            .map(|e| vec![e.name.clone(), value(Some(e.raw)), value(Some(e.scaled)), e.constant.to_string()])
            .collect();
        files.push(("importance.csv".into(), csv_text(&["feature", "raw", "scaled", "constant"], rows)?.into_bytes()));
        if let Some(rfe) = &t.rfe {
            let rows = rfe
                .profile
                .iter()
                .map(|p| vec![p.size.to_string(), value(Some(p.mean)), value(Some(p.sd)), p.n.to_string()])
                .collect();
            files.push(("rfe.csv".into(), csv_text(&["size", "mean", "sd", "resamples"], rows)?.into_bytes()));
        }
    }

    let mut rows: Vec<Vec<String>> = report
        .test
        .metrics
        .iter()
        .map(|m| vec![test_model.clone(), m.name.clone(), value(m.value)])
        .collect();
    if let Some(t) = &report.training {
        for g in &t.gaps {
            rows.push(vec![test_model.clone(), format!("{}_gap", g.metric), value(Some(g.gap))]);
            rows.push(vec![test_model.clone(), format!("{}_gap_flagged", g.metric), u8::from(g.flagged).to_string()]);
        }
    }
    files.push(("metrics_test.csv".into(), csv_text(&["model", "metric", "value"], rows)?.into_bytes()));

    match report.mode {
        EndpointMode::Classification => {
            let auc = report.test.metric("auc").unwrap_or(f64::NAN);
            files.push(("roc.svg".into(), svg::roc_svg(&report.test.roc, auc).into_bytes()));
            files.push((
                "calibration.svg".into(),
                svg::calibration_svg(&report.test.calibration_bins, &report.test.calibration_curve).into_bytes(),
            ));
        }
        EndpointMode::Regression => {
            files.push(("qq.svg".into(), svg::qq_svg(&report.test.qq).into_bytes()));
        }
    }
    if let Some(t) = &report.training {
        let labels: Vec<String> = t.comparison.iter().map(|c| c.model.clone()).collect();
        let means: Vec<f64> = t.comparison.iter().map(|c| c.mean).collect();
        let sds: Vec<f64> = t.comparison.iter().map(|c| c.sd).collect();
        let range = svg::bar_range(&means, Some(&sds));
        files.push((
            "comparison.svg".into(),
            svg::bar_svg("Model comparison (resampled, mean +/- sd)", metric, &labels, &means, Some(&sds), range)
                .into_bytes(),
        ));
        let ranked = t.importance.ranked();
        let labels: Vec<String> = ranked.iter().map(|e| e.name.clone()).collect();
        let scaled: Vec<f64> = ranked.iter().map(|e| e.scaled).collect();
        files.push((
            "importance.svg".into(),
            svg::bar_svg("Variable importance", "Scaled importance", &labels, &scaled, None, (0.0, 100.0)).into_bytes(),
        ));
        if let Some(rfe) = &t.rfe {
            let profile: Vec<(usize, f64)> = rfe.profile.iter().map(|p| (p.size, p.mean)).collect();
            files.push(("rfe.svg".into(), svg::rfe_svg(&profile, rfe.best_size, metric).into_bytes()));
        }
    }

    let mut notes = String::new();
    for n in report.notes.iter().chain(&report.test.notes) {
        notes.push_str(n);
        notes.push('\n');
    }
    files.push(("notes.txt".into(), notes.into_bytes()));
    Ok(files)
}

fn manifest_entry(name: &str, bytes: &[u8]) -> ManifestEntry {
    ManifestEntry { file: name.to_string(), bytes: bytes.len(), sha256: hex::encode(Sha256::digest(bytes)) }
}

/// Writes `files` plus a manifest into `dir`. On any failure the files written
/// so far (and `dir`, if this call created it) are removed.
fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<ManifestEntry>> {
    let created = !dir.exists();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        let mut manifest = Vec::new();
        for (name, bytes) in files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            manifest.push(manifest_entry(name, bytes));
        }
        manifest.sort_by(|a, b| a.file.cmp(&b.file));
        let rows = manifest.iter().map(|m| vec![m.file.clone(), m.bytes.to_string(), m.sha256.clone()]).collect();
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, csv_text(&["file", "bytes", "sha256"], rows)?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(manifest)
    })();
    if result.is_err() {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        if created {
            let _ = std::fs::remove_dir_all(dir);
        }
    }
    result
}

/// Report CSVs, plots, and a manifest.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<ManifestEntry>> {
    write_all(dir, &render_report(report)?)
}

fn report_json(report: &RunReport) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Config(format!("report encoding: {e}")))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Everything a run produces: report files, the machine-readable report, and
/// the model file.
pub fn write_run(output: &RunOutput, dir: &Path) -> Result<Vec<ManifestEntry>> {
    let mut files = render_report(&output.report)?;
    files.push((REPORT_FILE.into(), report_json(&output.report)?));
    files.push((MODEL_FILE.into(), encode_model(&output.model)?.into_bytes()));
    write_all(dir, &files)
}

/// Writes an evaluate-only report with its machine-readable form.
pub fn write_evaluation(report: &RunReport, dir: &Path) -> Result<Vec<ManifestEntry>> {
    let mut files = render_report(report)?;
    files.push((REPORT_FILE.into(), report_json(report)?));
    write_all(dir, &files)
}

pub fn load_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// One row per input row: prediction, label at the stored cutoff, and the
/// imputed and out-of-range features (`;`-separated).
pub fn predictions_csv(p: &Predictions) -> Result<String> {
    let classification = p.mode == EndpointMode::Classification;
    let header: Vec<&str> = if classification {
        vec!["row", "probability", "label", "imputed", "extrapolated"]
    } else {
        vec!["row", "prediction", "imputed", "extrapolated"]
    };
    let rows = (0..p.len())
        .map(|i| {
            let mut r = vec![p.row_ids[i].to_string(), p.values[i].to_string()];
            if let Some(labels) = &p.labels {
                r.push(labels[i].to_string());
            }
            r.push(p.imputed[i].join(";"));
            r.push(p.extrapolation[i].join(";"));
            r
        })
        .collect();
    csv_text(&header, rows)
}
