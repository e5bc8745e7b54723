//! Records to numeric design matrices: nominal encoding, min-max scaling,
//! SDN feature subsetting and stratified partitioning.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::schema::{
    AttackTaxonomy, Category, FeatureKind, FeatureSchema, LabeledDataset, SDN_FEATURES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    OneHot,
    Ordinal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalVocabulary {
    pub feature: usize,
    /// Sorted, duplicate-free.
    pub categories: Vec<String>,
}

impl NominalVocabulary {
    fn code(&self, value: &str) -> Option<usize> {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(value))
            .ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingPlan {
    pub mode: EncodingMode,
    pub schema: FeatureSchema,
    pub vocabularies: Vec<NominalVocabulary>,
    pub column_names: Vec<String>,
    /// Source feature position of every output column.
    pub column_sources: Vec<usize>,
}

/// Dense model input with row-aligned labels and attack categories.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub values: Matrix,
    pub column_names: Vec<String>,
    pub labels: Vec<u8>,
    pub categories: Vec<Category>,
}

impl DesignMatrix {
    pub fn new(
        values: Matrix,
        column_names: Vec<String>,
        labels: Vec<u8>,
        categories: Vec<Category>,
    ) -> Result<Self> {
        if column_names.len() != values.cols() {
            return Err(Error::DimensionMismatch {
                expected: values.cols(),
                found: column_names.len(),
            });
        }
        if labels.len() != values.rows() || categories.len() != values.rows() {
            return Err(Error::LengthMismatch {
                left: values.rows(),
                right: labels.len().min(categories.len()),
            });
        }
        if !values.is_finite() {
            return Err(Error::InvalidConfig("design matrix contains NaN/Inf".into()));
        }
        Ok(DesignMatrix {
            values,
            column_names,
            labels,
            categories,
        })
    }

    /// Matrix with labels only; categories are derived from the label
    /// (normal or unknown attack).
    pub fn from_labeled(values: Matrix, labels: Vec<u8>) -> Result<Self> {
        let names = (0..values.cols()).map(|c| format!("x{c}")).collect();
        let categories = labels
            .iter()
            .map(|&l| {
                if l == 0 {
                    Category::Normal
                } else {
                    Category::UnknownAttack
                }
            })
            .collect();
        DesignMatrix::new(values, names, labels, categories)
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            values: self.values.select_rows(idx),
            column_names: self.column_names.clone(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            categories: idx.iter().map(|&i| self.categories[i]).collect(),
        }
    }
}

fn taxonomy() -> &'static AttackTaxonomy {
    static TAXONOMY: OnceLock<AttackTaxonomy> = OnceLock::new();
    TAXONOMY.get_or_init(AttackTaxonomy::standard)
}

pub fn fit_encoding(train: &LabeledDataset, mode: EncodingMode) -> Result<EncodingPlan> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let schema = &train.schema;
    let mut vocabularies = Vec::new();
    let mut column_names = Vec::new();
    let mut column_sources = Vec::new();
    for f in schema.features() {
        match f.kind {
            FeatureKind::Numeric => {
                column_names.push(f.name.clone());
                column_sources.push(f.position);
            }
            FeatureKind::Nominal => {
                let seen: BTreeSet<&str> = train
                    .records
                    .iter()
                    .map(|r| r.values[f.position].as_str())
                    .collect();
                let categories: Vec<String> = seen.into_iter().map(str::to_string).collect();
                match mode {
                    EncodingMode::OneHot => {
                        for c in &categories {
                            column_names.push(format!("{}={}", f.name, c));
                            column_sources.push(f.position);
                        }
                    }
                    EncodingMode::Ordinal => {
                        column_names.push(f.name.clone());
                        column_sources.push(f.position);
                    }
                }
                vocabularies.push(NominalVocabulary {
                    feature: f.position,
                    categories,
                });
            }
        }
    }
    Ok(EncodingPlan {
        mode,
        schema: schema.clone(),
        vocabularies,
        column_names,
        column_sources,
    })
}

impl EncodingPlan {
    pub fn width(&self) -> usize {
        self.column_names.len()
    }

    /// Encodes one record's raw feature strings into `out` (length `width()`).
    /// `row` only labels parse errors.
    pub fn encode_into<S: AsRef<str>>(&self, values: &[S], row: usize, out: &mut [f64]) -> Result<()> {
        if values.len() != self.schema.len() {
            return Err(Error::DimensionMismatch {
                expected: self.schema.len(),
                found: values.len(),
            });
        }
        let mut col = 0;
        let mut vocab = self.vocabularies.iter();
        for f in self.schema.features() {
            let raw = values[f.position].as_ref();
            match f.kind {
                FeatureKind::Numeric => {
                    out[col] = raw
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::NumericParseError {
                            row,
                            column: f.name.clone(),
                            text: raw.to_string(),
                        })?;
                    col += 1;
                }
                FeatureKind::Nominal => {
                    let v = vocab.next().expect("one vocabulary per nominal feature");
                    let code = v.code(raw);
                    match self.mode {
                        EncodingMode::OneHot => {
                            let block = &mut out[col..col + v.categories.len()];
                            block.iter_mut().for_each(|x| *x = 0.0);
                            if let Some(c) = code {
                                block[c] = 1.0;
                            }
                            col += v.categories.len();
                        }
                        EncodingMode::Ordinal => {
                            out[col] = code.map_or(-1.0, |c| c as f64);
                            col += 1;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn encode_row<S: AsRef<str>>(&self, values: &[S], row: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.width()];
        self.encode_into(values, row, &mut out)?;
        Ok(out)
    }

    /// Name of the source feature an output column was derived from.
    pub fn source_feature(&self, column: usize) -> &str {
        &self.schema.features()[self.column_sources[column]].name
    }
}

pub fn apply_encoding(ds: &LabeledDataset, plan: &EncodingPlan) -> Result<DesignMatrix> {
    if ds.schema != plan.schema {
        return Err(Error::SchemaMismatch(
            "dataset schema differs from the schema the encoding was fit on".into(),
        ));
    }
    let width = plan.width();
    let mut values = Matrix::zeros(ds.len(), width);
    if width > 0 {
        let first_error = values
            .as_mut_slice()
            .par_chunks_mut(width)
            .enumerate()
            .filter_map(|(i, out)| {
                plan.encode_into(&ds.records[i].values, i, out)
                    .err()
                    .map(|e| (i, e))
            })
            .min_by_key(|(i, _)| *i);
        if let Some((_, e)) = first_error {
            return Err(e);
        }
    }
    let labels = ds.labels();
    let tax = taxonomy();
    let categories = ds.records.iter().map(|r| tax.categorize(&r.label)).collect();
    Ok(DesignMatrix {
        values,
        column_names: plan.column_names.clone(),
        labels,
        categories,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaler(train: &DesignMatrix) -> ScalingParams {
    let d = train.cols();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for r in 0..train.rows() {
        for (c, &v) in train.values.row(r).iter().enumerate() {
            min[c] = min[c].min(v);
            max[c] = max[c].max(v);
        }
    }
    for c in 0..d {
        if !min[c].is_finite() {
            min[c] = 0.0;
            max[c] = 0.0;
        }
    }
    ScalingParams { min, max }
}

impl ScalingParams {
    pub fn scale_row(&self, row: &mut [f64]) {
        for (c, v) in row.iter_mut().enumerate() {
            let (lo, hi) = (self.min[c], self.max[c]);
            *v = if hi > lo {
                ((*v - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
}

/// Min-max scales into `[0, 1]`; constant training columns map to 0 and
/// out-of-range values are clipped.
pub fn apply_scaler(m: &DesignMatrix, params: &ScalingParams) -> Result<DesignMatrix> {
    if m.cols() != params.min.len() {
        return Err(Error::DimensionMismatch {
            expected: params.min.len(),
            found: m.cols(),
        });
    }
    let mut out = m.clone();
    for r in 0..out.rows() {
        params.scale_row(out.values.row_mut(r));
    }
    Ok(out)
}

/// Restricts records to the six SDN-observable features. Idempotent.
pub fn select_sdn_features(ds: &LabeledDataset) -> Result<LabeledDataset> {
    let (schema, kept) = ds.schema.restrict(&SDN_FEATURES)?;
    let records = ds
        .records
        .iter()
        .map(|r| crate::schema::RawRecord {
            values: kept.iter().map(|&i| r.values[i].clone()).collect(),
            label: r.label.clone(),
            difficulty: r.difficulty,
        })
        .collect();
    Ok(LabeledDataset {
        schema,
        records,
        source: ds.source.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    validation_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(validation_fraction: f64, seed: u64) -> Result<Self> {
        if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
            return Err(Error::InvalidSplit(format!(
                "validation fraction {validation_fraction} is not in (0, 1)"
            )));
        }
        Ok(SplitSpec {
            validation_fraction,
            seed,
        })
    }

    pub fn validation_fraction(&self) -> f64 {
        self.validation_fraction
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// Ascending record indices.
    pub train: Vec<usize>,
    /// Ascending record indices.
    pub validation: Vec<usize>,
}

fn strata(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        out[usize::from(l != 0)].push(i);
    }
    out
}

/// Holdout split preserving each label's share: a label with `n` records
/// contributes `round(n * fraction)` (at least 1, at most `n - 1`) to validation.
pub fn stratified_split(labels: &[u8], spec: &SplitSpec) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::with_capacity(labels.len());
    let mut validation = Vec::new();
    for (label, mut members) in strata(labels).into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::StratumTooSmall {
                label: label as u8,
                size: members.len(),
                needed: 2,
            });
        }
        let n = members.len();
        let n_val = ((n as f64 * spec.validation_fraction).round() as usize).clamp(1, n - 1);
        members.shuffle(&mut rng);
        validation.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(Split { train, validation })
}

pub fn split_dataset(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let split = stratified_split(&ds.labels(), spec)?;
    Ok((ds.subset(&split.train), ds.subset(&split.validation)))
}

/// `k` disjoint folds (ascending indices) whose per-label sizes differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidSplit(format!("k = {k}; need at least 2 folds")));
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    for (label, mut members) in strata(labels).into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(Error::StratumTooSmall {
                label: label as u8,
                size: members.len(),
                needed: k,
            });
        }
        members.shuffle(&mut rng);
        for (j, i) in members.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{builtin_schema, FeatureDescriptor, RawRecord};

    fn tiny_schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDescriptor {
                name: "duration".into(),
                kind: FeatureKind::Numeric,
                position: 0,
            },
            FeatureDescriptor {
                name: "protocol_type".into(),
                kind: FeatureKind::Nominal,
                position: 1,
            },
        ])
        .unwrap()
    }

    fn tiny(rows: &[(&str, &str, &str)]) -> LabeledDataset {
        LabeledDataset {
            schema: tiny_schema(),
            records: rows
                .iter()
                .map(|(d, p, l)| RawRecord {
                    values: vec![d.to_string(), p.to_string()],
                    label: l.to_string(),
                    difficulty: None,
                })
                .collect(),
            source: "test".into(),
        }
    }

    fn proto_ds() -> LabeledDataset {
        tiny(&[
            ("0", "tcp", "normal"),
            ("1", "udp", "neptune"),
            ("2", "icmp", "smurf"),
        ])
    }

    #[test]
    fn onehot_expands_sorted_vocabulary() {
        let plan = fit_encoding(&proto_ds(), EncodingMode::OneHot).unwrap();
        assert_eq!(
            plan.column_names,
            vec![
                "duration",
                "protocol_type=icmp",
                "protocol_type=tcp",
                "protocol_type=udp"
            ]
        );
        let m = apply_encoding(&proto_ds(), &plan).unwrap();
        assert_eq!(m.values.row(0), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(m.labels, vec![0, 1, 1]);
        assert_eq!(m.categories, vec![Category::Normal, Category::DoS, Category::DoS]);
    }

    #[test]
    fn ordinal_codes_are_lexicographic() {
        let plan = fit_encoding(&proto_ds(), EncodingMode::Ordinal).unwrap();
        assert_eq!(plan.width(), 2);
        let m = apply_encoding(&proto_ds(), &plan).unwrap();
        assert_eq!(m.values.column(1), vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn unseen_category_encodes_as_zero_block_or_minus_one() {
        let test = tiny(&[("5", "sctp", "normal")]);
        let oh = fit_encoding(&proto_ds(), EncodingMode::OneHot).unwrap();
        assert_eq!(apply_encoding(&test, &oh).unwrap().values.row(0), &[5.0, 0.0, 0.0, 0.0]);
        let ord = fit_encoding(&proto_ds(), EncodingMode::Ordinal).unwrap();
        assert_eq!(apply_encoding(&test, &ord).unwrap().values.row(0), &[5.0, -1.0]);
    }

    #[test]
    fn non_numeric_value_is_reported() {
        let plan = fit_encoding(&proto_ds(), EncodingMode::OneHot).unwrap();
        let bad = tiny(&[("0", "tcp", "normal"), ("abc", "tcp", "normal")]);
        match apply_encoding(&bad, &plan) {
            Err(Error::NumericParseError { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "duration");
            }
            other => panic!("unexpected {other:?}"),
        }
        let nan = tiny(&[("NaN", "tcp", "normal")]);
        assert!(apply_encoding(&nan, &plan).is_err());
    }

    #[test]
    fn empty_train_rejected() {
        assert!(matches!(
            fit_encoding(&tiny(&[]), EncodingMode::OneHot),
            Err(Error::EmptyInput)
        ));
    }

    fn column_matrix(col: &[f64]) -> DesignMatrix {
        let m = Matrix::from_vec(col.len(), 1, col.to_vec()).unwrap();
        DesignMatrix::from_labeled(m, vec![0; col.len()]).unwrap()
    }

    #[test]
    fn scaler_examples() {
        let train = column_matrix(&[0.0, 5.0, 10.0]);
        let p = fit_scaler(&train);
        assert_eq!(apply_scaler(&train, &p).unwrap().values.column(0), vec![0.0, 0.5, 1.0]);

        let constant = column_matrix(&[7.0, 7.0, 7.0]);
        let pc = fit_scaler(&constant);
        assert_eq!(apply_scaler(&constant, &pc).unwrap().values.column(0), vec![0.0; 3]);

        let test = column_matrix(&[20.0, -3.0]);
        assert_eq!(apply_scaler(&test, &p).unwrap().values.column(0), vec![1.0, 0.0]);
    }

    #[test]
    fn sdn_subset_is_idempotent() {
        let values: Vec<String> = (0..41)
            .map(|i| if i == 1 { "tcp".into() } else { i.to_string() })
            .collect();
        let ds = LabeledDataset {
            schema: builtin_schema(),
            records: vec![RawRecord {
                values,
                label: "normal".into(),
                difficulty: Some(3),
            }],
            source: "t".into(),
        };
        let once = select_sdn_features(&ds).unwrap();
        assert_eq!(once.schema.len(), 6);
        assert_eq!(once.schema.nominal_count(), 1);
        assert_eq!(once.records[0].values, vec!["0", "tcp", "4", "5", "22", "23"]);
        let twice = select_sdn_features(&once).unwrap();
        assert_eq!(twice.schema, once.schema);
        assert_eq!(twice.records, once.records);

        assert!(matches!(
            select_sdn_features(&proto_ds()),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn split_proportions() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i >= 60)).collect();
        let spec = SplitSpec::new(0.2, 7).unwrap();
        let s = stratified_split(&labels, &spec).unwrap();
        let val_normal = s.validation.iter().filter(|&&i| labels[i] == 0).count();
        assert_eq!(val_normal, 12);
        assert_eq!(s.validation.len() - val_normal, 8);
        assert_eq!(s, stratified_split(&labels, &spec).unwrap());
        let other = stratified_split(&labels, &SplitSpec::new(0.2, 8).unwrap()).unwrap();
        assert_ne!(s, other);
    }

    #[test]
    fn split_of_two_per_label() {
        let s = stratified_split(&[0, 0, 1, 1], &SplitSpec::new(0.5, 1).unwrap()).unwrap();
        assert_eq!(s.train.len(), 2);
        assert_eq!(s.validation.len(), 2);
        let val_labels: BTreeSet<usize> = s.validation.iter().map(|&i| i / 2).collect();
        assert_eq!(val_labels.len(), 2);
    }

    #[test]
    fn singleton_stratum_rejected() {
        assert!(matches!(
            stratified_split(&[0, 1], &SplitSpec::new(0.5, 1).unwrap()),
            Err(Error::StratumTooSmall { size: 1, .. })
        ));
        assert!(SplitSpec::new(1.0, 0).is_err());
        assert!(SplitSpec::new(0.0, 0).is_err());
    }

    #[test]
    fn kfold_examples() {
        let labels = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let folds = stratified_kfold(&labels, 5, 3).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 2);
            assert_eq!(f.iter().filter(|&&i| labels[i] == 1).count(), 1);
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());

        let labels: Vec<u8> = [vec![0; 9], vec![1; 3]].concat();
        let folds = stratified_kfold(&labels, 3, 3).unwrap();
        for f in &folds {
            assert_eq!(f.iter().filter(|&&i| labels[i] == 0).count(), 3);
            assert_eq!(f.iter().filter(|&&i| labels[i] == 1).count(), 1);
        }
        assert!(stratified_kfold(&labels, 4, 3).is_err());
    }
}
