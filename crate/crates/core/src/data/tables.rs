use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use super::{check_ga, format_sig9, write_atomic, DeepEmbedding, RadiomicVector};
use crate::error::{Error, Result};

/// One row of `labels.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub id: String,
    pub hc_mm: f64,
    pub ga_days: f64,
}

/// Contents of a `features.csv` file.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub names: Arc<[String]>,
    pub rows: Vec<(String, RadiomicVector)>,
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

fn parse_f64(s: &str, path: &Path, id: &str, column: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::invalid(format!("{}: {id}/{column}: cannot parse {s:?}", path.display())))?;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("{}: {id}/{column}", path.display())));
    }
    Ok(v)
}

fn finish(path: &Path, w: csv::Writer<Vec<u8>>) -> Result<()> {
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

fn push(w: &mut csv::Writer<Vec<u8>>, path: &Path, record: &[String]) -> Result<()> {
    w.write_record(record).map_err(|e| Error::csv(path, e))
}

pub fn write_features_csv(path: &Path, names: &[String], rows: &[(String, RadiomicVector)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend(names.iter().cloned());
    push(&mut w, path, &header)?;
    for (id, v) in rows {
        if &*v.names != names {
            return Err(Error::invalid(format!("{id}: feature ordering differs from header")));
        }
        if let Some(i) = v.values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("{id}: {}", names[i])));
        }
        let mut rec = vec![id.clone()];
        rec.extend(v.values.iter().map(|&x| format_sig9(x)));
        push(&mut w, path, &rec)?;
    }
    finish(path, w)
}

pub fn read_features_csv(path: &Path) -> Result<FeatureTable> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.get(0) != Some("id") || header.len() < 2 {
        return Err(Error::invalid(format!(
            "{}: expected header id,<features>",
            path.display()
        )));
    }
    let names: Arc<[String]> = header.iter().skip(1).map(String::from).collect();
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let values = rec
            .iter()
            .skip(1)
            .zip(names.iter())
            .map(|(s, n)| parse_f64(s, path, &id, n))
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, RadiomicVector::new(values, names.clone())?));
    }
    Ok(FeatureTable { names, rows })
}

pub fn write_embeddings_csv(path: &Path, rows: &[DeepEmbedding]) -> Result<()> {
    let dim = rows.first().map_or(super::EMBED_DIM, |e| e.values.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend((0..dim).map(|i| format!("e{i}")));
    push(&mut w, path, &header)?;
    for e in rows {
        if e.values.len() != dim {
            return Err(Error::Shape(format!(
                "{}: embedding width {} != {dim}",
                e.id,
                e.values.len()
            )));
        }
        let mut rec = vec![e.id.clone()];
        rec.extend(e.values.iter().map(|&x| format_sig9(x)));
        push(&mut w, path, &rec)?;
    }
    finish(path, w)
}

/// Reads `embeddings.csv`, requiring exactly `dim` value columns.
pub fn read_embeddings_csv(path: &Path, dim: usize) -> Result<Vec<DeepEmbedding>> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let expected = std::iter::once("id".to_string()).chain((0..dim).map(|i| format!("e{i}")));
    if header.len() != dim + 1 || !header.iter().zip(expected).all(|(a, b)| a == b) {
        return Err(Error::Shape(format!(
            "{}: expected id,e0..e{} ({} columns), found {} columns",
            path.display(),
            dim - 1,
            dim + 1,
            header.len()
        )));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let values = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(i, s)| parse_f64(s, path, &id, &format!("e{i}")))
            .collect::<Result<Vec<_>>>()?;
        out.push(DeepEmbedding { id, values });
    }
    Ok(out)
}

pub fn write_labels_csv(path: &Path, rows: &[LabelRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    push(&mut w, path, &["id".into(), "hc_mm".into(), "ga_days".into()])?;
    for l in rows {
        push(
            &mut w,
            path,
            &[l.id.clone(), format_sig9(l.hc_mm), format_sig9(l.ga_days)],
        )?;
    }
    finish(path, w)
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<LabelRow>> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "hc_mm", "ga_days"] {
        return Err(Error::invalid(format!(
            "{}: expected header id,hc_mm,ga_days",
            path.display()
        )));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let hc_mm = parse_f64(&rec[1], path, &id, "hc_mm")?;
        let ga_days = parse_f64(&rec[2], path, &id, "ga_days")?;
        check_ga(&id, ga_days)?;
        out.push(LabelRow { id, hc_mm, ga_days });
    }
    Ok(out)
}

pub fn write_predictions_csv(path: &Path, rows: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    push(&mut w, path, &["id".into(), "ga_pred_days".into()])?;
    for (id, v) in rows {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("prediction for {id}")));
        }
        push(&mut w, path, &[id.clone(), format_sig9(*v)])?;
    }
    finish(path, w)
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "ga_pred_days"] {
        return Err(Error::invalid(format!(
            "{}: expected header id,ga_pred_days",
            path.display()
        )));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let v = parse_f64(&rec[1], path, &id, "ga_pred_days")?;
        out.push((id, v));
    }
    Ok(out)
}

/// Writes a report table whose cells are already formatted.
pub fn write_report_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    push(&mut w, path, &header.iter().map(|h| h.to_string()).collect::<Vec<_>>())?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Shape(format!(
                "{}: row of {} cells for {} columns",
                path.display(),
                row.len(),
                header.len()
            )));
        }
        push(&mut w, path, row)?;
    }
    finish(path, w)
}
