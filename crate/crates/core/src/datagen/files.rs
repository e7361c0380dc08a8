//! Dataset files. Each split directory holds:
//!
//! - `features.csv` — `timestamp,f0..f127,trueClass`; integers in 1..=255,
//!   `trueClass` is a class name, left empty in training data;
//! - `labels.csv` — `timestamp,ceLabel` with `ce_0`..`ce_9` or `null`;
//! - `meta.json` — window, noise fraction, seeds and class names.
//!
//! The same `features.csv` layout is accepted from external feature
//! extractors.

use super::{DataError, EventStream, LabeledPoint, SimpleEvent, Split, Splits};
use crate::rulelang::stdlib::{ce_constant, parse_ce_label, CLASS_NAMES};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SplitMeta {
    pub split: String,
    pub window: u32,
    pub noise_fraction: f64,
    pub seeds: [u64; 3],
    pub class_names: Vec<String>,
}

pub fn default_class_names() -> Vec<String> {
    CLASS_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Writes the three split directories under `root`. Training features are
/// emitted without ground-truth classes.
pub fn write_splits(root: &Path, splits: &Splits) -> Result<(), DataError> {
    let meta = |name: &str| SplitMeta {
        split: name.to_string(),
        window: splits.config.window,
        noise_fraction: splits.config.noise_fraction,
        seeds: splits.config.seeds,
        class_names: default_class_names(),
    };
    write_split(&root.join("train"), &splits.train, &meta("train"), false)?;
    write_split(
        &root.join("validation"),
        &splits.validation,
        &meta("validation"),
        true,
    )?;
    write_split(&root.join("test"), &splits.test, &meta("test"), true)?;
    Ok(())
}

pub fn write_split(
    dir: &Path,
    split: &Split,
    meta: &SplitMeta,
    include_true_class: bool,
) -> Result<(), DataError> {
    std::fs::create_dir_all(dir)?;
    let dim = split.stream.events.first().map_or(0, |e| e.feature.len());

    let mut features = csv::Writer::from_path(dir.join("features.csv"))?;
    let mut header = vec!["timestamp".to_string()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    header.push("trueClass".to_string());
    features.write_record(&header)?;
    for event in &split.stream.events {
        let mut record = vec![event.timestamp.to_string()];
        record.extend(event.feature.iter().map(|v| v.to_string()));
        let class = match event.true_class {
            Some(c) if include_true_class => meta.class_names[c as usize].clone(),
            _ => String::new(),
        };
        record.push(class);
        features.write_record(&record)?;
    }
    features.flush()?;

    let mut labels = csv::Writer::from_path(dir.join("labels.csv"))?;
    labels.write_record(["timestamp", "ceLabel"])?;
    for point in &split.points {
        let label = match point.label {
            Some(c) => ce_constant(c as usize),
            None => "null".to_string(),
        };
        labels.write_record([point.timestamp.to_string(), label])?;
    }
    labels.flush()?;

    let json = serde_json::to_string_pretty(meta).expect("meta serializes");
    std::fs::write(dir.join("meta.json"), json)?;
    Ok(())
}

/// Reads one split directory back.
pub fn read_split(dir: &Path) -> Result<(Split, SplitMeta), DataError> {
    let meta: SplitMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)
        .map_err(|e| DataError::Format {
            message: format!("meta.json: {e}"),
        })?;
    let stream = read_features_csv(&dir.join("features.csv"), &meta.class_names)?;
    let points = read_labels_csv(&dir.join("labels.csv"))?;
    for p in &points {
        if p.timestamp < 0 || p.timestamp as usize >= stream.len() {
            return Err(DataError::Format {
                message: format!("label timestamp {} outside the stream", p.timestamp),
            });
        }
    }
    Ok((Split { stream, points }, meta))
}

/// Parses a `features.csv`, from this tool or any external extractor.
pub fn read_features_csv(path: &Path, class_names: &[String]) -> Result<EventStream, DataError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "timestamp" {
        return Err(DataError::Format {
            message: "features.csv must start with a timestamp column".into(),
        });
    }
    let dim = headers.len() - 2;
    let mut events = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |message: String| DataError::Format {
            message: format!("features.csv row {row}: {message}"),
        };
        if record.len() != dim + 2 {
            return Err(bad(format!("expected {} columns", dim + 2)));
        }
        let timestamp: i64 = record[0]
            .parse()
            .map_err(|_| bad("timestamp is not an integer".into()))?;
        if timestamp != events.len() as i64 {
            return Err(bad(format!(
                "timestamps must be contiguous from 0 (got {timestamp})"
            )));
        }
        let mut feature = Vec::with_capacity(dim);
        for i in 0..dim {
            let v: i64 = record[1 + i]
                .parse()
                .map_err(|_| bad(format!("f{i} is not an integer")))?;
            if !(1..=255).contains(&v) {
                return Err(bad(format!("f{i}={v} outside 1..=255")));
            }
            feature.push(v as u8);
        }
        let class_field = &record[dim + 1];
        let true_class = if class_field.is_empty() {
            None
        } else {
            let idx = class_names
                .iter()
                .position(|n| n == class_field)
                .ok_or_else(|| bad(format!("unknown class name '{class_field}'")))?;
            Some(idx as u8)
        };
        events.push(SimpleEvent {
            timestamp,
            feature,
            true_class,
        });
    }
    Ok(EventStream { events })
}

fn read_labels_csv(path: &Path) -> Result<Vec<LabeledPoint>, DataError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |message: String| DataError::Format {
            message: format!("labels.csv row {row}: {message}"),
        };
        if record.len() != 2 {
            return Err(bad("expected two columns".into()));
        }
        let timestamp: i64 = record[0]
            .parse()
            .map_err(|_| bad("timestamp is not an integer".into()))?;
        let label = parse_ce_label(&record[1])
            .ok_or_else(|| bad(format!("unknown label '{}'", &record[1])))?;
        points.push(LabeledPoint { timestamp, label });
    }
    Ok(points)
}
