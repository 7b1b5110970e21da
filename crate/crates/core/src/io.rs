//! CSV readers and writers for datasets, predictions and per-round reports.
//!
//! Floats are written with 17 significant digits, which reads back to the same `f64`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::{Dataset, Example, ExampleId, PredictionVector};
use crate::error::{Error, Result};
use crate::measure::Direction;
use crate::reconcile::{Diagnostics, ModelIndex, RoundReport, Transcript};
use crate::scalar::Scalar;

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Format(format!("`{s}` is not a number: {e}")))
}

fn parse_label(s: &str, row: usize) -> Result<bool> {
    match s.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(Error::Format(format!("row {row}: label must be 0 or 1, got `{other}`"))),
    }
}

/// Reads `example_id,label[,feature...]` rows (with a header).
pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let mut examples = Vec::new();
    let mut labels = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.len() < 2 {
            return Err(Error::Format(format!("row {line}: expected example_id,label[,features]")));
        }
        let features = row.iter().skip(2).map(parse_float).collect::<Result<Vec<_>>>()?;
        examples.push(Example::new(row[0].to_string(), features));
        labels.push(parse_label(&row[1], line)?);
    }
    Dataset::new(examples, labels)
}

pub fn write_dataset<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let width = data.examples().iter().map(|x| x.features.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header = vec!["example_id".to_string(), "label".to_string()];
    header.extend((0..width).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (x, &y) in data.examples().iter().zip(data.labels()) {
        let mut row = vec![x.id.to_string(), if y { "1" } else { "0" }.to_string()];
        row.extend(x.features.iter().map(|&f| format_float(f)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `example_id,prediction` rows. Every prediction must lie in `[0, 1]` and ids must be
/// unique.
pub fn read_predictions<R: Read>(input: R) -> Result<Vec<(ExampleId, f64)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        if row.len() != 2 {
            return Err(Error::Format(format!("row {}: expected example_id,prediction", i + 2)));
        }
        let id = ExampleId::new(&row[0]);
        let v = parse_float(&row[1])?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Parameter(format!("prediction {v} for `{id}` is outside [0, 1]")));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateExample(id.to_string()));
        }
        out.push((id, v));
    }
    Ok(out)
}

/// Orders predictions by the dataset. Ids unknown to the dataset and dataset ids without a
/// prediction are errors naming the first offending id (in file order, then dataset order).
pub fn align_predictions<S: Scalar>(pairs: &[(ExampleId, f64)], data: &Dataset) -> Result<PredictionVector<S>> {
    let mut values = vec![None; data.len()];
    for (id, v) in pairs {
        let i = data.position(id).ok_or_else(|| Error::UnknownExample(id.to_string()))?;
        values[i] = Some(S::of(*v));
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::MissingPrediction(data.example(i).id.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionVector::new(values))
}

/// Writes the clamped predictions as `example_id,prediction` rows.
pub fn write_predictions<S: Scalar, W: Write>(preds: &PredictionVector<S>, data: &Dataset, out: W) -> Result<()> {
    preds.check_aligned(data)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["example_id", "prediction"])?;
    for (x, v) in data.examples().iter().zip(preds.values()) {
        w.write_record([x.id.as_str(), &format_float(v.clamp_unit().as_f64())])?;
    }
    w.flush()?;
    Ok(())
}

pub const ROUND_HEADER: [&str; 8] = ["t", "model", "direction", "k", "mass", "v_star", "v_model", "brier_drop"];

#[allow(clippy::too_many_arguments)]
fn round_record(
    t: usize,
    model: ModelIndex,
    direction: Direction,
    k: i64,
    mass: f64,
    v_star: f64,
    v_model: f64,
    brier_drop: f64,
) -> [String; 8] {
    [
        t.to_string(),
        model.number().to_string(),
        direction.as_str().to_string(),
        k.to_string(),
        format_float(mass),
        format_float(v_star),
        format_float(v_model),
        format_float(brier_drop),
    ]
}

pub fn write_rounds<S: Scalar, W: Write>(reports: &[RoundReport<S>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROUND_HEADER)?;
    for r in reports {
        w.write_record(round_record(
            r.t,
            r.model,
            r.direction,
            r.k,
            r.stats.mass.as_f64(),
            r.stats.v_star.as_f64(),
            r.stats.v_model.as_f64(),
            r.brier_drop().as_f64(),
        ))?;
    }
    w.flush()?;
    Ok(())
}

/// Same layout as [`write_rounds`], from a transcript and diagnostics re-derived by replay.
pub fn write_replayed_rounds<W: Write>(transcript: &Transcript, diagnostics: &[Diagnostics], out: W) -> Result<()> {
    if diagnostics.len() != transcript.len() {
        return Err(Error::Alignment { expected: transcript.len(), found: diagnostics.len() });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROUND_HEADER)?;
    for (r, d) in transcript.records().iter().zip(diagnostics) {
        w.write_record(round_record(r.t, r.model, r.direction, r.k, d.mass, d.v_star, d.v_model, d.brier_drop))?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a per-round report as read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRow {
    pub t: usize,
    pub model: u8,
    pub direction: Direction,
    pub k: i64,
    pub mass: f64,
    pub v_star: f64,
    pub v_model: f64,
    pub brier_drop: f64,
}

pub fn read_rounds<R: Read>(input: R) -> Result<Vec<RoundRow>> {
    let mut r = csv::Reader::from_reader(input);
    let bad = |row: usize, what: &str| Error::Format(format!("round row {row}: bad {what}"));
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        if row.len() != ROUND_HEADER.len() {
            return Err(bad(i + 2, "field count"));
        }
        out.push(RoundRow {
            t: row[0].parse().map_err(|_| bad(i + 2, "t"))?,
            model: row[1].parse().map_err(|_| bad(i + 2, "model"))?,
            direction: row[2].parse()?,
            k: row[3].parse().map_err(|_| bad(i + 2, "k"))?,
            mass: parse_float(&row[4])?,
            v_star: parse_float(&row[5])?,
            v_model: parse_float(&row[6])?,
            brier_drop: parse_float(&row[7])?,
        });
    }
    Ok(out)
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}

pub fn read_predictions_file(path: &Path) -> Result<Vec<(ExampleId, f64)>> {
    read_predictions(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 12.0 / 13.0, 0.0, 1.0, 5e-324, -0.923_076_923_076_923_1] {
            assert_eq!(parse_float(&format_float(v)).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn dataset_round_trip() {
        let text = "example_id,label,a,b\np,1,0.5,2\nq,0,1,3\n";
        let d = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.example(1).features, vec![1.0, 3.0]);
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back.examples(), d.examples());
        assert_eq!(back.labels(), d.labels());

        assert!(read_dataset("example_id,label\np,2\n".as_bytes()).is_err());
        assert!(matches!(read_dataset("example_id,label\np,1\np,0\n".as_bytes()), Err(Error::DuplicateExample(_))));
    }

    #[test]
    fn predictions_validation() {
        let d = read_dataset("example_id,label\na,1\nb,0\n".as_bytes()).unwrap();
        let p = read_predictions("example_id,prediction\nb,0.25\na,1\n".as_bytes()).unwrap();
        let v = align_predictions::<f64>(&p, &d).unwrap();
        assert_eq!(v.values(), &[1.0, 0.25]);

        assert!(matches!(read_predictions("example_id,prediction\na,1.5\n".as_bytes()), Err(Error::Parameter(_))));
        let extra = read_predictions("example_id,prediction\na,1\nb,0\nc,0\n".as_bytes()).unwrap();
        assert!(matches!(align_predictions::<f64>(&extra, &d), Err(Error::UnknownExample(id)) if id == "c"));
        let short = read_predictions("example_id,prediction\na,1\n".as_bytes()).unwrap();
        assert!(matches!(align_predictions::<f64>(&short, &d), Err(Error::MissingPrediction(id)) if id == "b"));
    }
}
