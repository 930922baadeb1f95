//! Tabular input, missing-value handling and discrete encoding.
//!
//! A [`RawTable`] holds the feature columns as parsed from CSV (numeric or
//! categorical) plus the class labels. An [`Encoder`] is fitted on a table
//! (typically a training fold) and turns any table with the same schema into
//! a [`DiscreteDataset`], the column-major code matrix every estimator works
//! on.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretizer::CutList;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("class column not found: {0}")]
    ClassColumnNotFound(String),
    #[error("file has no data rows")]
    NoRows,
    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("missing class label at data row {0}")]
    MissingClass(usize),
    #[error("no rows remain after dropping rows with missing values")]
    NoRowsRemain,
    #[error("class column has {0} distinct label(s); at least 2 are required")]
    TooFewClasses(usize),
    #[error("no cut list supplied for numeric column {0}")]
    MissingCuts(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
}

/// How a column's cells are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }

    fn missing_count(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.iter().filter(|c| c.is_none()).count(),
            ColumnData::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
        }
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassColumn {
    Index(usize),
    Name(String),
}

impl ClassColumn {
    /// Numeric strings are read as indices, anything else as a header name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => ClassColumn::Index(i),
            Err(_) => ClassColumn::Name(s.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub missing_marker: String,
    pub schema_hints: HashMap<String, ColumnKind>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            missing_marker: "?".to_string(),
            schema_hints: HashMap::new(),
        }
    }
}

/// Parsed table: feature columns plus a categorical class column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub features: Vec<Column>,
    pub class_name: String,
    pub class_values: Vec<Option<String>>,
    pub missing_marker: String,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.class_values.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|c| c.name.clone()).collect()
    }

    pub fn has_missing(&self) -> bool {
        self.features.iter().any(|c| c.data.missing_count() > 0)
    }

    /// True when every feature column is categorical.
    pub fn is_categorical(&self) -> bool {
        self.features
            .iter()
            .all(|c| c.data.kind() == ColumnKind::Categorical)
    }

    /// Class labels in first-appearance order.
    pub fn class_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        for v in self.class_values.iter().flatten() {
            if !labels.contains(v) {
                labels.push(v.clone());
            }
        }
        labels
    }

    /// Sub-table containing `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> RawTable {
        RawTable {
            features: self
                .features
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                })
                .collect(),
            class_name: self.class_name.clone(),
            class_values: rows.iter().map(|&r| self.class_values[r].clone()).collect(),
            missing_marker: self.missing_marker.clone(),
        }
    }

    /// Row-major numeric view of the listed features. Categorical cells (and
    /// missing numeric cells) are `None`.
    pub fn numeric_rows(&self, features: &[usize]) -> Vec<Vec<Option<f64>>> {
        (0..self.n_rows())
            .map(|r| {
                features
                    .iter()
                    .map(|&f| match &self.features[f].data {
                        ColumnData::Numeric(v) => v[r],
                        ColumnData::Categorical(_) => None,
                    })
                    .collect()
            })
            .collect()
    }

    fn check_shape(&self) -> Result<(), DataError> {
        let n = self.n_rows();
        if n == 0 {
            return Err(DataError::NoRows);
        }
        for c in &self.features {
            if c.data.len() != n {
                return Err(DataError::Schema(format!(
                    "column {} has {} rows, class column has {}",
                    c.name,
                    c.data.len(),
                    n
                )));
            }
        }
        Ok(())
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    class: &ClassColumn,
    opts: &CsvOptions,
) -> Result<RawTable, DataError> {
    let file = File::open(path)?;
    read_csv(file, class, opts)
}

pub fn read_csv<R: Read>(
    reader: R,
    class: &ClassColumn,
    opts: &CsvOptions,
) -> Result<RawTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let class_idx = match class {
        ClassColumn::Index(i) if *i < headers.len() => *i,
        ClassColumn::Index(i) => return Err(DataError::ClassColumnNotFound(i.to_string())),
        ClassColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::ClassColumnNotFound(name.clone()))?,
    };

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record?;
        if record.len() != headers.len() {
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            return Err(DataError::Ragged {
                line,
                expected: headers.len(),
                found: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let cell = if field.is_empty() || field == opts.missing_marker {
                None
            } else {
                Some(field.to_string())
            };
            cells[col].push(cell);
        }
    }
    if cells[class_idx].is_empty() {
        return Err(DataError::NoRows);
    }

    let mut features = Vec::with_capacity(headers.len() - 1);
    let mut class_values = Vec::new();
    for (col, (name, column)) in headers.iter().zip(cells).enumerate() {
        if col == class_idx {
            if let Some(r) = column.iter().position(Option::is_none) {
                return Err(DataError::MissingClass(r));
            }
            class_values = column;
            continue;
        }
        let kind = opts
            .schema_hints
            .get(name)
            .copied()
            .unwrap_or_else(|| infer_kind(&column));
        let data = match kind {
            // Unparseable cells in a numeric column are recorded as missing.
            ColumnKind::Numeric => ColumnData::Numeric(
                column
                    .iter()
                    .map(|c| c.as_deref().and_then(|s| s.parse::<f64>().ok()))
                    .map(|v| v.filter(|x| x.is_finite()))
                    .collect(),
            ),
            ColumnKind::Categorical => ColumnData::Categorical(column),
        };
        features.push(Column {
            name: name.clone(),
            data,
        });
    }

    Ok(RawTable {
        features,
        class_name: headers[class_idx].clone(),
        class_values,
        missing_marker: opts.missing_marker.clone(),
    })
}

fn infer_kind(column: &[Option<String>]) -> ColumnKind {
    let mut seen = false;
    for s in column.iter().flatten() {
        seen = true;
        if s.parse::<f64>().map(|v| !v.is_finite()).unwrap_or(true) {
            return ColumnKind::Categorical;
        }
    }
    if seen {
        ColumnKind::Numeric
    } else {
        ColumnKind::Categorical
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Median for numeric columns, a distinct "missing" category for
    /// categorical ones.
    #[default]
    Impute,
    DropRows,
}

pub fn handle_missing(table: &RawTable, policy: MissingPolicy) -> Result<RawTable, DataError> {
    table.check_shape()?;
    match policy {
        MissingPolicy::Impute => {
            let mut out = table.clone();
            for col in &mut out.features {
                match &mut col.data {
                    ColumnData::Numeric(v) => {
                        let fill = median(v.iter().flatten().copied()).unwrap_or(0.0);
                        for cell in v.iter_mut() {
                            cell.get_or_insert(fill);
                        }
                    }
                    ColumnData::Categorical(v) => {
                        for cell in v.iter_mut() {
                            if cell.is_none() {
                                *cell = Some(table.missing_marker.clone());
                            }
                        }
                    }
                }
            }
            Ok(out)
        }
        MissingPolicy::DropRows => {
            let keep: Vec<usize> = (0..table.n_rows())
                .filter(|&r| {
                    table.features.iter().all(|c| match &c.data {
                        ColumnData::Numeric(v) => v[r].is_some(),
                        ColumnData::Categorical(v) => v[r].is_some(),
                    })
                })
                .collect();
            if keep.is_empty() {
                return Err(DataError::NoRowsRemain);
            }
            Ok(table.select_rows(&keep))
        }
    }
}

fn median(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

/// Column-major matrix of category codes plus class codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDataset {
    features: Vec<Vec<u32>>,
    arities: Vec<usize>,
    class_codes: Vec<u32>,
    n_classes: usize,
    feature_names: Vec<String>,
    class_labels: Vec<String>,
}

impl DiscreteDataset {
    /// Builds a dataset from raw code columns, validating every invariant.
    pub fn new(
        features: Vec<Vec<u32>>,
        arities: Vec<usize>,
        class_codes: Vec<u32>,
        n_classes: usize,
    ) -> Result<Self, DataError> {
        let names = (0..features.len()).map(|i| format!("f{i}")).collect();
        let labels = (0..n_classes).map(|c| c.to_string()).collect();
        Self::with_names(features, arities, class_codes, names, labels)
    }

    /// Convenience constructor inferring arities as `max code + 1`.
    pub fn from_codes(features: Vec<Vec<u32>>, class_codes: Vec<u32>) -> Result<Self, DataError> {
        let arity = |col: &[u32]| col.iter().max().map_or(1, |&m| m as usize + 1);
        let arities = features.iter().map(|c| arity(c)).collect();
        let n_classes = arity(&class_codes).max(2);
        Self::new(features, arities, class_codes, n_classes)
    }

    pub fn with_names(
        features: Vec<Vec<u32>>,
        arities: Vec<usize>,
        class_codes: Vec<u32>,
        feature_names: Vec<String>,
        class_labels: Vec<String>,
    ) -> Result<Self, DataError> {
        let n_classes = class_labels.len();
        if n_classes < 2 {
            return Err(DataError::TooFewClasses(n_classes));
        }
        if features.len() != arities.len() || features.len() != feature_names.len() {
            return Err(DataError::Schema(
                "feature, arity and name counts differ".into(),
            ));
        }
        let n = class_codes.len();
        if let Some(&c) = class_codes.iter().find(|&&c| c as usize >= n_classes) {
            return Err(DataError::Schema(format!(
                "class code {c} outside 0..{n_classes}"
            )));
        }
        for (i, (col, &arity)) in features.iter().zip(&arities).enumerate() {
            if col.len() != n {
                return Err(DataError::Schema(format!(
                    "feature {i} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if arity == 0 {
                return Err(DataError::Schema(format!("feature {i} has arity 0")));
            }
            if let Some(&c) = col.iter().find(|&&c| c as usize >= arity) {
                return Err(DataError::Schema(format!(
                    "feature {i} code {c} outside 0..{arity}"
                )));
            }
        }
        Ok(Self {
            features,
            arities,
            class_codes,
            n_classes,
            feature_names,
            class_labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.class_codes.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature(&self, i: usize) -> &[u32] {
        &self.features[i]
    }

    pub fn arity(&self, i: usize) -> usize {
        self.arities[i]
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn class_codes(&self) -> &[u32] {
        &self.class_codes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    /// Codes of one row across all features.
    pub fn row(&self, r: usize) -> Vec<u32> {
        self.features.iter().map(|c| c[r]).collect()
    }

    /// Rows `rows` in the given order; arities and labels are kept.
    pub fn select_rows(&self, rows: &[usize]) -> DiscreteDataset {
        DiscreteDataset {
            features: self
                .features
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            arities: self.arities.clone(),
            class_codes: rows.iter().map(|&r| self.class_codes[r]).collect(),
            n_classes: self.n_classes,
            feature_names: self.feature_names.clone(),
            class_labels: self.class_labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnEncoding {
    /// Bin index = number of cuts `<= v`.
    Bins { cuts: Vec<f64> },
    /// Dense codes by first appearance; values never seen while fitting map
    /// to `fallback` (the most frequent fitted category).
    Categories { values: Vec<String>, fallback: u32 },
}

impl ColumnEncoding {
    pub fn arity(&self) -> usize {
        match self {
            ColumnEncoding::Bins { cuts } => cuts.len() + 1,
            ColumnEncoding::Categories { values, .. } => values.len().max(1),
        }
    }

    fn encode_numeric(cuts: &[f64], v: f64) -> u32 {
        cuts.partition_point(|&c| c <= v) as u32
    }
}

/// Per-column encoding fitted on one table and applicable to others with the
/// same schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub feature_names: Vec<String>,
    pub columns: Vec<ColumnEncoding>,
    pub class_name: String,
    pub class_labels: Vec<String>,
}

impl Encoder {
    /// Fits on `table`. `cuts` must hold one entry per numeric column, keyed
    /// by feature index. Class labels come from `table` itself.
    pub fn fit(table: &RawTable, cuts: &[CutList]) -> Result<Self, DataError> {
        Self::fit_with_classes(table, cuts, table.class_labels())
    }

    /// Like [`Encoder::fit`] but with an externally fixed label set, so that
    /// encodings fitted on different folds share class codes.
    pub fn fit_with_classes(
        table: &RawTable,
        cuts: &[CutList],
        class_labels: Vec<String>,
    ) -> Result<Self, DataError> {
        let cut_map: HashMap<usize, &CutList> = cuts.iter().map(|c| (c.feature, c)).collect();
        let mut columns = Vec::with_capacity(table.n_features());
        for (i, col) in table.features.iter().enumerate() {
            let enc = match &col.data {
                ColumnData::Numeric(_) => {
                    let cl = cut_map
                        .get(&i)
                        .ok_or_else(|| DataError::MissingCuts(col.name.clone()))?;
                    ColumnEncoding::Bins {
                        cuts: cl.cuts.clone(),
                    }
                }
                ColumnData::Categorical(v) => {
                    let mut values: Vec<String> = Vec::new();
                    let mut index: HashMap<&str, usize> = HashMap::new();
                    let mut counts: Vec<usize> = Vec::new();
                    for s in v.iter().flatten() {
                        let k = *index.entry(s.as_str()).or_insert_with(|| {
                            values.push(s.clone());
                            counts.push(0);
                            values.len() - 1
                        });
                        counts[k] += 1;
                    }
                    let fallback = counts
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map_or(0, |(k, _)| k as u32);
                    ColumnEncoding::Categories { values, fallback }
                }
            };
            columns.push(enc);
        }
        if class_labels.len() < 2 {
            return Err(DataError::TooFewClasses(class_labels.len()));
        }
        Ok(Self {
            feature_names: table.feature_names(),
            columns,
            class_name: table.class_name.clone(),
            class_labels,
        })
    }

    /// Encodes feature columns of `table`; fails if its schema differs.
    pub fn transform_features(&self, table: &RawTable) -> Result<Vec<Vec<u32>>, DataError> {
        let names = table.feature_names();
        if names != self.feature_names {
            return Err(DataError::Schema(format!(
                "expected feature columns {:?}, found {:?}",
                self.feature_names, names
            )));
        }
        let mut out = Vec::with_capacity(self.columns.len());
        for (col, enc) in table.features.iter().zip(&self.columns) {
            let codes = match (&col.data, enc) {
                (ColumnData::Numeric(v), ColumnEncoding::Bins { cuts }) => v
                    .iter()
                    .map(|c| c.map_or(0, |x| ColumnEncoding::encode_numeric(cuts, x)))
                    .collect(),
                (ColumnData::Categorical(v), ColumnEncoding::Categories { values, fallback }) => {
                    let index: HashMap<&str, u32> = values
                        .iter()
                        .enumerate()
                        .map(|(k, s)| (s.as_str(), k as u32))
                        .collect();
                    v.iter()
                        .map(|c| {
                            c.as_deref()
                                .and_then(|s| index.get(s).copied())
                                .unwrap_or(*fallback)
                        })
                        .collect()
                }
                _ => {
                    return Err(DataError::Schema(format!(
                        "column {} changed kind since fitting",
                        col.name
                    )))
                }
            };
            out.push(codes);
        }
        Ok(out)
    }

    pub fn transform(&self, table: &RawTable) -> Result<DiscreteDataset, DataError> {
        let features = self.transform_features(table)?;
        let mut class_codes = Vec::with_capacity(table.n_rows());
        for (r, v) in table.class_values.iter().enumerate() {
            let v = v.as_ref().ok_or(DataError::MissingClass(r))?;
            let code = self
                .class_labels
                .iter()
                .position(|l| l == v)
                .ok_or_else(|| DataError::Schema(format!("unknown class label {v:?}")))?;
            class_codes.push(code as u32);
        }
        DiscreteDataset::with_names(
            features,
            self.columns.iter().map(ColumnEncoding::arity).collect(),
            class_codes,
            self.feature_names.clone(),
            self.class_labels.clone(),
        )
    }
}

/// Fits an encoder on `table` and encodes it.
pub fn encode(table: &RawTable, cuts: &[CutList]) -> Result<DiscreteDataset, DataError> {
    Encoder::fit(table, cuts)?.transform(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(csv: &str) -> RawTable {
        read_csv(
            csv.as_bytes(),
            &ClassColumn::Name("y".into()),
            &CsvOptions::default(),
        )
        .unwrap()
    }

    fn cut(feature: usize, cuts: &[f64]) -> CutList {
        CutList {
            feature,
            cuts: cuts.to_vec(),
        }
    }

    #[test]
    fn parses_mixed_columns() {
        let t = table("a,b,y\n1.5,red,p\n2,blue,q\n3,red,p\n");
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.n_features(), 2);
        assert_eq!(t.features[0].data.kind(), ColumnKind::Numeric);
        assert_eq!(t.features[1].data.kind(), ColumnKind::Categorical);
        assert_eq!(t.class_labels(), vec!["p", "q"]);
    }

    #[test]
    fn class_column_by_index() {
        let t = read_csv(
            "y,a\np,1\nq,2\n".as_bytes(),
            &ClassColumn::Index(0),
            &CsvOptions::default(),
        )
        .unwrap();
        assert_eq!(t.class_name, "y");
        assert_eq!(t.feature_names(), vec!["a"]);
    }

    #[test]
    fn missing_class_column_is_an_error() {
        let err = read_csv(
            "a,b\n1,2\n".as_bytes(),
            &ClassColumn::Name("y".into()),
            &CsvOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, DataError::ClassColumnNotFound(_)));
        assert!(err.to_string().contains("class column not found"));
    }

    #[test]
    fn header_only_file_has_no_rows() {
        let err = read_csv(
            "a,y\n".as_bytes(),
            &ClassColumn::Name("y".into()),
            &CsvOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, DataError::NoRows));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = read_csv(
            "a,b,y\n1,2,p\n1,p\n".as_bytes(),
            &ClassColumn::Name("y".into()),
            &CsvOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, DataError::Ragged { found: 2, .. }));
    }

    #[test]
    fn schema_hint_forces_kind_and_bad_cells_become_missing() {
        let mut opts = CsvOptions::default();
        opts.schema_hints.insert("a".into(), ColumnKind::Numeric);
        opts.schema_hints.insert("b".into(), ColumnKind::Categorical);
        let t = read_csv(
            "a,b,y\n1,7,p\nxx,8,q\n".as_bytes(),
            &ClassColumn::Name("y".into()),
            &opts,
        )
        .unwrap();
        assert_eq!(t.features[0].data, ColumnData::Numeric(vec![Some(1.0), None]));
        assert_eq!(t.features[1].data.kind(), ColumnKind::Categorical);
    }

    #[test]
    fn custom_delimiter_and_missing_marker() {
        let opts = CsvOptions {
            delimiter: b';',
            missing_marker: "NA".into(),
            ..Default::default()
        };
        let t = read_csv(
            "a;y\n1;p\nNA;q\n".as_bytes(),
            &ClassColumn::Name("y".into()),
            &opts,
        )
        .unwrap();
        assert_eq!(t.features[0].data, ColumnData::Numeric(vec![Some(1.0), None]));
    }

    #[test]
    fn median_imputation() {
        let t = table("a,y\n1,p\n?,q\n3,p\n");
        let t = handle_missing(&t, MissingPolicy::Impute).unwrap();
        assert_eq!(
            t.features[0].data,
            ColumnData::Numeric(vec![Some(1.0), Some(2.0), Some(3.0)])
        );
    }

    #[test]
    fn categorical_missing_gets_own_category() {
        let t = table("b,y\na,p\n?,q\na,p\n");
        let t = handle_missing(&t, MissingPolicy::Impute).unwrap();
        assert!(!t.has_missing());
        let d = encode(&t, &[]).unwrap();
        assert_eq!(d.feature(0), &[0, 1, 0]);
        assert_eq!(d.arity(0), 2);
    }

    #[test]
    fn drop_rows_with_nothing_left() {
        let t = table("a,b,y\n?,1,p\n?,2,q\n");
        let err = handle_missing(&t, MissingPolicy::DropRows).unwrap_err();
        assert!(matches!(err, DataError::NoRowsRemain));
        assert!(err.to_string().contains("no rows remain"));
    }

    #[test]
    fn drop_rows_keeps_complete_rows() {
        let t = table("a,b,y\n?,1,p\n4,2,q\n5,3,p\n");
        let t = handle_missing(&t, MissingPolicy::DropRows).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.class_values[0].as_deref(), Some("q"));
    }

    #[test]
    fn encode_numeric_threshold() {
        let t = table("a,y\n1.0,p\n5.0,q\n9.0,q\n");
        let d = encode(&t, &[cut(0, &[4.0])]).unwrap();
        assert_eq!(d.feature(0), &[0, 1, 1]);
        assert_eq!(d.arity(0), 2);
    }

    #[test]
    fn encode_value_on_cut_goes_up() {
        let t = table("a,y\n4.0,p\n3.9,q\n");
        let d = encode(&t, &[cut(0, &[4.0])]).unwrap();
        assert_eq!(d.feature(0), &[1, 0]);
    }

    #[test]
    fn encode_categorical_first_appearance() {
        let t = table("c,y\nred,p\nblue,q\nred,p\n");
        let d = encode(&t, &[]).unwrap();
        assert_eq!(d.feature(0), &[0, 1, 0]);
        assert_eq!(d.arity(0), 2);
    }

    #[test]
    fn encode_empty_cuts_single_bin() {
        let t = table("a,y\n1,p\n2,q\n3,p\n");
        let d = encode(&t, &[cut(0, &[])]).unwrap();
        assert_eq!(d.feature(0), &[0, 0, 0]);
        assert_eq!(d.arity(0), 1);
    }

    #[test]
    fn encode_requires_cuts_for_numeric() {
        let t = table("a,y\n1,p\n2,q\n");
        assert!(matches!(encode(&t, &[]), Err(DataError::MissingCuts(_))));
    }

    #[test]
    fn single_class_is_rejected() {
        let t = table("a,y\n1,p\n2,p\n");
        assert!(matches!(
            encode(&t, &[cut(0, &[])]),
            Err(DataError::TooFewClasses(1))
        ));
    }

    #[test]
    fn unseen_categories_fall_back_to_mode() {
        let train = table("c,y\nred,p\nblue,q\nblue,p\n");
        let test = table("c,y\ngreen,p\nred,q\n");
        let enc = Encoder::fit(&train, &[]).unwrap();
        let d = enc.transform(&test).unwrap();
        assert_eq!(d.feature(0), &[1, 0]);
    }

    #[test]
    fn transform_rejects_other_schema() {
        let train = table("c,y\nred,p\nblue,q\n");
        let other = table("d,y\nred,p\nblue,q\n");
        let enc = Encoder::fit(&train, &[]).unwrap();
        assert!(matches!(enc.transform(&other), Err(DataError::Schema(_))));
    }

    #[test]
    fn categorical_codes_depend_on_row_order() {
        let t = table("c,y\nred,p\nblue,q\n");
        let rev = t.select_rows(&[1, 0]);
        assert_eq!(encode(&t, &[]).unwrap().feature(0), &[0, 1]);
        assert_eq!(encode(&rev, &[]).unwrap().feature(0), &[0, 1]);
    }

    #[test]
    fn dataset_rejects_out_of_range_codes() {
        assert!(DiscreteDataset::new(vec![vec![0, 2]], vec![2], vec![0, 1], 2).is_err());
        assert!(DiscreteDataset::new(vec![vec![0, 1]], vec![2], vec![0, 2], 2).is_err());
        assert!(DiscreteDataset::new(vec![vec![0, 1]], vec![2], vec![0, 1], 1).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn numeric_table(values: &[f64], labels: &[u8]) -> RawTable {
            RawTable {
                features: vec![Column {
                    name: "a".into(),
                    data: ColumnData::Numeric(values.iter().map(|&v| Some(v)).collect()),
                }],
                class_name: "y".into(),
                class_values: labels.iter().map(|l| Some(format!("c{l}"))).collect(),
                missing_marker: "?".into(),
            }
        }

        proptest! {
            #[test]
            fn numeric_encoding_commutes_with_row_permutation(
                rows in proptest::collection::vec((-50.0f64..50.0, 0u8..2), 2..40),
                cuts in proptest::collection::btree_set(-50i32..50, 0..5),
                seed in any::<u64>(),
            ) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
                let mut labels: Vec<u8> = rows.iter().map(|r| r.1).collect();
                labels[0] = 0;
                labels[1] = 1;
                let cuts: Vec<f64> = cuts.into_iter().map(f64::from).collect();
                let t = numeric_table(&values, &labels);
                let cl = [CutList { feature: 0, cuts: cuts.clone() }];
                let mut perm: Vec<usize> = (0..values.len()).collect();
                perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));

                let enc = Encoder::fit(&t, &cl).unwrap();
                let direct = enc.transform(&t).unwrap().select_rows(&perm);
                let permuted = enc.transform(&t.select_rows(&perm)).unwrap();
                prop_assert_eq!(direct.feature(0), permuted.feature(0));

                let d = encode(&t, &cl).unwrap();
                prop_assert_eq!(d.clone(), encode(&t, &cl).unwrap());
                prop_assert!(d.feature(0).iter().all(|&c| (c as usize) < d.arity(0)));
            }
        }
    }
}
