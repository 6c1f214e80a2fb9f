//! Loading audit data from delimited files, plus the preparation steps used
//! when group labels come from a numeric proportion and small ground truths
//! must be dropped.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which columns play which role. Columns not named here are carried
/// verbatim as auxiliary text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub truth: String,
    pub preds: Vec<String>,
    /// Text columns holding sensitive-group labels.
    pub labels: Vec<String>,
    /// Numeric columns that group labels are derived from.
    pub label_sources: Vec<String>,
    pub delimiter: u8,
}

impl Schema {
    pub fn new(truth: impl Into<String>) -> Self {
        Schema {
            truth: truth.into(),
            preds: Vec::new(),
            labels: Vec::new(),
            label_sources: Vec::new(),
            delimiter: b',',
        }
    }

    pub fn pred(mut self, name: impl Into<String>) -> Self {
        self.preds.push(name.into());
        self
    }

    pub fn label(mut self, name: impl Into<String>) -> Self {
        self.labels.push(name.into());
        self
    }

    pub fn label_source(mut self, name: impl Into<String>) -> Self {
        self.label_sources.push(name.into());
        self
    }

    fn validate(&self) -> Result<()> {
        if self.preds.is_empty() {
            return Err(Error::InvalidArgument("at least one prediction column is required".into()));
        }
        if self.labels.is_empty() && self.label_sources.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one group label column or label source column is required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Column {
    Real(Vec<f64>),
    Text(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedColumn<T> {
    pub name: String,
    pub values: Vec<T>,
}

/// Column-oriented audit data. Feature columns ride along in `aux`; the
/// statistics never read them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Header order of the source file.
    pub header: Vec<String>,
    pub truth: NamedColumn<f64>,
    pub preds: Vec<NamedColumn<f64>>,
    pub labels: Vec<NamedColumn<String>>,
    pub label_sources: Vec<NamedColumn<f64>>,
    pub aux: Vec<NamedColumn<String>>,
    /// Rows removed by [`filter_min_truth`] so far.
    pub filtered_rows: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.truth.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.values.is_empty()
    }

    pub fn pred(&self, name: &str) -> Option<&[f64]> {
        find(&self.preds, name)
    }

    pub fn label(&self, name: &str) -> Option<&[String]> {
        find(&self.labels, name)
    }

    pub fn label_source(&self, name: &str) -> Option<&[f64]> {
        find(&self.label_sources, name)
    }

    fn column(&self, name: &str) -> Option<Column> {
        if self.truth.name == name {
            return Some(Column::Real(self.truth.values.clone()));
        }
        find(&self.preds, name)
            .or_else(|| find(&self.label_sources, name))
            .map(|v| Column::Real(v.to_vec()))
            .or_else(|| {
                find(&self.labels, name)
                    .or_else(|| find(&self.aux, name))
                    .map(|v| Column::Text(v.to_vec()))
            })
    }

    /// Writes the dataset back out in its original column order. Numbers use
    /// the shortest representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
        w.write_record(&self.header)?;
        let columns: Vec<Column> = self
            .header
            .iter()
            .map(|h| self.column(h).ok_or_else(|| Error::MissingColumn(h.clone())))
            .collect::<Result<_>>()?;
        for row in 0..self.len() {
            let record: Vec<String> = columns
                .iter()
                .map(|c| match c {
                    Column::Real(v) => v[row].to_string(),
                    Column::Text(v) => v[row].clone(),
                })
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    fn retain_rows(&self, keep: &[bool]) -> Dataset {
        fn pick<T: Clone>(col: &NamedColumn<T>, keep: &[bool]) -> NamedColumn<T> {
            NamedColumn {
                name: col.name.clone(),
                values: col
                    .values
                    .iter()
                    .zip(keep)
                    .filter(|(_, &k)| k)
                    .map(|(v, _)| v.clone())
                    .collect(),
            }
        }
        let removed = keep.iter().filter(|&&k| !k).count();
        Dataset {
            header: self.header.clone(),
            truth: pick(&self.truth, keep),
            preds: self.preds.iter().map(|c| pick(c, keep)).collect(),
            labels: self.labels.iter().map(|c| pick(c, keep)).collect(),
            label_sources: self.label_sources.iter().map(|c| pick(c, keep)).collect(),
            aux: self.aux.iter().map(|c| pick(c, keep)).collect(),
            filtered_rows: self.filtered_rows + removed,
        }
    }
}

fn find<'a, T>(cols: &'a [NamedColumn<T>], name: &str) -> Option<&'a [T]> {
    cols.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::from(e).context(format!("opening {}", path.display())))?;
    read_csv(file, schema)
}

/// Parses headered delimited text. Row numbers in errors are 1-based data
/// rows (the header is not counted).
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let index_of = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let truth_idx = index_of(&schema.truth)?;
    let pred_idx = schema.preds.iter().map(|n| index_of(n)).collect::<Result<Vec<_>>>()?;
    let label_idx = schema.labels.iter().map(|n| index_of(n)).collect::<Result<Vec<_>>>()?;
    let source_idx = schema
        .label_sources
        .iter()
        .map(|n| index_of(n))
        .collect::<Result<Vec<_>>>()?;
    let claimed: HashSet<usize> = std::iter::once(truth_idx)
        .chain(pred_idx.iter().copied())
        .chain(label_idx.iter().copied())
        .chain(source_idx.iter().copied())
        .collect();
    let aux_idx: Vec<usize> = (0..header.len()).filter(|i| !claimed.contains(i)).collect();

    let mut truth = Vec::new();
    let mut preds: Vec<Vec<f64>> = vec![Vec::new(); pred_idx.len()];
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); label_idx.len()];
    let mut sources: Vec<Vec<f64>> = vec![Vec::new(); source_idx.len()];
    let mut aux: Vec<Vec<String>> = vec![Vec::new(); aux_idx.len()];

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = |idx: usize| record.get(idx).unwrap_or("");
        let real = |idx: usize| -> Result<f64> {
            let raw = cell(idx);
            if raw.is_empty() {
                return Err(Error::EmptyCell {
                    row,
                    column: header[idx].clone(),
                });
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::ParseCell {
                    row,
                    column: header[idx].clone(),
                    value: raw.to_string(),
                }),
            }
        };
        truth.push(real(truth_idx)?);
        for (col, &idx) in preds.iter_mut().zip(&pred_idx) {
            col.push(real(idx)?);
        }
        for (col, &idx) in sources.iter_mut().zip(&source_idx) {
            col.push(real(idx)?);
        }
        for (col, &idx) in labels.iter_mut().zip(&label_idx) {
            let raw = cell(idx);
            if raw.is_empty() {
                return Err(Error::EmptyCell {
                    row,
                    column: header[idx].clone(),
                });
            }
            col.push(raw.to_string());
        }
        for (col, &idx) in aux.iter_mut().zip(&aux_idx) {
            col.push(cell(idx).to_string());
        }
    }
    if truth.is_empty() {
        return Err(Error::Empty("data rows"));
    }

    let named = |idx: &[usize]| -> Vec<String> { idx.iter().map(|&i| header[i].clone()).collect() };
    fn zip_named<T>(names: Vec<String>, cols: Vec<Vec<T>>) -> Vec<NamedColumn<T>> {
        names
            .into_iter()
            .zip(cols)
            .map(|(name, values)| NamedColumn { name, values })
            .collect()
    }

    Ok(Dataset {
        truth: NamedColumn {
            name: header[truth_idx].clone(),
            values: truth,
        },
        preds: zip_named(named(&pred_idx), preds),
        labels: zip_named(named(&label_idx), labels),
        label_sources: zip_named(named(&source_idx), sources),
        aux: zip_named(named(&aux_idx), aux),
        header,
        filtered_rows: 0,
    })
}

/// Labels each value `above` when strictly greater than `threshold`, else
/// `at_or_below`.
pub fn derive_binary_labels(
    values: &[f64],
    threshold: f64,
    above: &str,
    at_or_below: &str,
) -> Vec<String> {
    values
        .iter()
        .map(|&v| if v > threshold { above } else { at_or_below }.to_string())
        .collect()
}

/// Keeps rows whose ground truth is at least `min_truth`.
pub fn filter_min_truth(dataset: &Dataset, min_truth: f64) -> Dataset {
    let keep: Vec<bool> = dataset.truth.values.iter().map(|&t| t >= min_truth).collect();
    dataset.retain_rows(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "county, prop ,truth,model_a,model_b\n\
                       c1,0.7,120,110.5,130\n\
                       c2,0.4,99,90,101\n\
                       c3, 0.598 ,250,260,240\n";

    fn schema() -> Schema {
        Schema::new("truth").pred("model_a").pred("model_b").label_source("prop")
    }

    #[test]
    fn loads_by_header() {
        let d = read_csv(CSV.as_bytes(), &schema()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.truth.values, vec![120.0, 99.0, 250.0]);
        assert_eq!(d.pred("model_a").unwrap(), &[110.5, 90.0, 260.0]);
        assert_eq!(d.label_source("prop").unwrap(), &[0.7, 0.4, 0.598]);
        assert_eq!(d.aux[0].name, "county");
    }

    #[test]
    fn missing_column_is_named() {
        let s = Schema::new("cases").pred("model_a").label_source("prop");
        match read_csv(CSV.as_bytes(), &s) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "cases"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_cells_report_row_and_column() {
        let csv = "g,truth,p\na,1,2\nb,2,N/A\n";
        let s = Schema::new("truth").pred("p").label("g");
        match read_csv(csv.as_bytes(), &s) {
            Err(Error::ParseCell { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "p", "N/A"));
            }
            other => panic!("{other:?}"),
        }
        let csv = "g,truth,p\na,1,2\n,2,3\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &s),
            Err(Error::EmptyCell { row: 2, .. })
        ));
        let csv = "g,truth,p\na,1,inf\n";
        assert!(matches!(read_csv(csv.as_bytes(), &s), Err(Error::ParseCell { .. })));
        let csv = "g,truth,p\n";
        assert!(matches!(read_csv(csv.as_bytes(), &s), Err(Error::Empty(_))));
    }

    #[test]
    fn schema_must_name_roles() {
        let s = Schema::new("truth").label("g");
        assert!(matches!(read_csv(CSV.as_bytes(), &s), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn threshold_labels() {
        assert_eq!(derive_binary_labels(&[0.70, 0.40], 0.598, "W", "N"), vec!["W", "N"]);
        assert_eq!(derive_binary_labels(&[0.598], 0.598, "W", "N"), vec!["N"]);
        assert!(derive_binary_labels(&[], 0.598, "W", "N").is_empty());
    }

    #[test]
    fn min_truth_filter() {
        let d = read_csv(CSV.as_bytes(), &schema()).unwrap();
        let f = filter_min_truth(&d, 100.0);
        assert_eq!(f.truth.values, vec![120.0, 250.0]);
        assert_eq!(f.pred("model_b").unwrap(), &[130.0, 240.0]);
        assert_eq!(f.filtered_rows, 1);
        assert_eq!(filter_min_truth(&f, 100.0), f);
        assert_eq!(filter_min_truth(&d, f64::NEG_INFINITY), d);
        let empty = filter_min_truth(&d, 1e9);
        assert!(empty.is_empty());
        assert_eq!(empty.filtered_rows, 3);
    }

    #[test]
    fn round_trips() {
        let d = read_csv(CSV.as_bytes(), &schema()).unwrap();
        let mut out = Vec::new();
        d.write_csv(&mut out, b',').unwrap();
        let back = read_csv(out.as_slice(), &schema()).unwrap();
        assert_eq!(back, d);
        assert!(String::from_utf8(out).unwrap().starts_with("county,prop,truth,model_a,model_b\n"));
    }
}
