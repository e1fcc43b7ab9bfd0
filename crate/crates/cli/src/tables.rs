//! Reading feature tables and label files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use commdyn_core::{EngineError, Episode, FeatureVector, Label, LabeledExample, FEATURE_NAMES};

/// One scored-able row of a feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub episode_ref: String,
    pub start: f64,
    pub features: FeatureVector,
}

impl FeatureRow {
    pub fn to_episode(&self) -> Episode {
        let mut e = Episode::new(None, self.start, self.start);
        e.id = self.episode_ref.clone();
        e.features = Some(self.features);
        e
    }
}

fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers.iter().position(|h| names.contains(&h.trim()))
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Rows of a CSV with an `episode_id` (or `episode_ref`) column and one
/// column per feature; other columns are ignored, `#` lines are comments.
/// Rows with empty feature cells (episodes without events) are skipped.
pub fn parse_feature_table<R: Read>(input: R) -> Result<Vec<FeatureRow>, EngineError> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers()?.clone();
    let id_col = column(&headers, &["episode_id", "episode_ref"]).ok_or_else(|| {
        EngineError::InvalidParameter("feature table has no `episode_id` column".into())
    })?;
    let start_col = column(&headers, &["start"]);
    let feature_cols = FEATURE_NAMES
        .iter()
        .map(|name| {
            column(&headers, &[name]).ok_or_else(|| {
                EngineError::InvalidParameter(format!("feature table has no `{name}` column"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 2, |p| p.line() as usize);
        let cell = |c: usize| rec.get(c).unwrap_or("");
        if feature_cols.iter().all(|&c| cell(c).is_empty()) {
            continue;
        }
        let number = |c: usize| {
            f64::from_str(cell(c)).map_err(|_| EngineError::Parse {
                line,
                reason: format!(
                    "`{}` is not a number (column {})",
                    cell(c),
                    headers.get(c).unwrap_or("?")
                ),
            })
        };
        let values = feature_cols
            .iter()
            .map(|&c| number(c))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(FeatureRow {
            episode_ref: cell(id_col).to_string(),
            start: start_col.map(number).transpose()?.unwrap_or(0.0),
            features: FeatureVector::from_slice(&values)?,
        });
    }
    Ok(rows)
}

pub fn read_feature_tables(paths: &[impl AsRef<Path>]) -> Result<Vec<FeatureRow>, EngineError> {
    let mut rows = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let file = File::open(p).map_err(|e| {
            EngineError::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", p.display()),
            ))
        })?;
        rows.extend(parse_feature_table(file)?);
    }
    Ok(rows)
}

/// `episode_ref,label` rows; a later row for the same ref wins.
pub fn parse_labels<R: Read>(input: R) -> Result<BTreeMap<String, Label>, EngineError> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers()?.clone();
    let id_col = column(&headers, &["episode_ref", "episode_id"]).ok_or_else(|| {
        EngineError::InvalidParameter("label file has no `episode_ref` column".into())
    })?;
    let label_col = column(&headers, &["label"])
        .ok_or_else(|| EngineError::InvalidParameter("label file has no `label` column".into()))?;
    let mut labels = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 2, |p| p.line() as usize);
        let raw = rec.get(label_col).unwrap_or("");
        let label = Label::from_str(raw).map_err(|_| EngineError::Parse {
            line,
            reason: format!("unknown label `{raw}`"),
        })?;
        labels.insert(rec.get(id_col).unwrap_or("").to_string(), label);
    }
    Ok(labels)
}

pub fn read_labels(path: &Path) -> Result<BTreeMap<String, Label>, EngineError> {
    let file = File::open(path).map_err(|e| {
        EngineError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    parse_labels(file)
}

/// Joins labels to feature rows. Returns the examples and the refs that
/// have no row.
pub fn join_labels(
    rows: &[FeatureRow],
    labels: &BTreeMap<String, Label>,
) -> (Vec<LabeledExample>, Vec<String>) {
    let by_ref: BTreeMap<&str, &FeatureRow> =
        rows.iter().map(|r| (r.episode_ref.as_str(), r)).collect();
    let mut examples = Vec::new();
    let mut missing = Vec::new();
    for (r, &label) in labels {
        match by_ref.get(r.as_str()) {
            Some(row) => examples.push(LabeledExample {
                episode_ref: r.clone(),
                features: row.features,
                label,
            }),
            None => missing.push(r.clone()),
        }
    }
    (examples, missing)
}
