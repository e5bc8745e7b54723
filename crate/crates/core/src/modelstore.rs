//! Versioned single-file artifacts bundling preprocessing with a fitted model.
//!
//! Layout: the ASCII magic `NIDB`, the format version as a little-endian
//! `u32`, then one JSON document. Every float is written with 17 significant
//! digits so a load reproduces the saved doubles exactly.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forests::{DecisionTree, ForestModel, GbdtModel};
use crate::matrix::Matrix;
use crate::neural::{forward, MlpParams};
use crate::pca::{transform_matrix, PcaModel};
use crate::preprocess::{apply_encoding, DesignMatrix, EncodingMode, EncodingPlan, ScalingParams};
use crate::schema::{FeatureMode, LabeledDataset};

pub const MAGIC: &[u8; 4] = b"NIDB";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    ExtraTree,
    ExtraTreesEnsemble,
    Gbdt,
    Dnn,
    PcaDnn,
}

impl ModelKind {
    /// Comparison-table order.
    pub const ALL: [ModelKind; 6] = [
        ModelKind::DecisionTree,
        ModelKind::ExtraTree,
        ModelKind::ExtraTreesEnsemble,
        ModelKind::Gbdt,
        ModelKind::Dnn,
        ModelKind::PcaDnn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::ExtraTree => "extra_tree",
            ModelKind::ExtraTreesEnsemble => "extra_trees_ensemble",
            ModelKind::Gbdt => "gbdt",
            ModelKind::Dnn => "dnn",
            ModelKind::PcaDnn => "pca_dnn",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "Decision Tree",
            ModelKind::ExtraTree => "Extra Tree",
            ModelKind::ExtraTreesEnsemble => "Ensemble Extra Tree",
            ModelKind::Gbdt => "Gradient Boosted Trees",
            ModelKind::Dnn => "Deep Neural Network",
            ModelKind::PcaDnn => "PCA + Deep Neural Network",
        }
    }

    pub fn is_tree(self) -> bool {
        !matches!(self, ModelKind::Dnn | ModelKind::PcaDnn)
    }

    pub fn encoding_mode(self) -> EncodingMode {
        if self.is_tree() {
            EncodingMode::Ordinal
        } else {
            EncodingMode::OneHot
        }
    }

    /// Rows of the comparison table for a feature mode; the PCA row only
    /// exists for the full feature set.
    pub fn standard_rows(mode: FeatureMode) -> Vec<ModelKind> {
        ModelKind::ALL
            .into_iter()
            .filter(|k| mode == FeatureMode::Full || *k != ModelKind::PcaDnn)
            .collect()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| {
                format!(
                    "unknown model kind {s:?} (expected one of: {})",
                    ModelKind::ALL.map(|k| k.as_str()).join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum ModelParams {
    Tree(DecisionTree),
    Forest(ForestModel),
    Gbdt(GbdtModel),
    Mlp(MlpParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMetadata {
    /// RFC 3339 creation time.
    pub created_at: String,
    pub seed: u64,
    /// Training configuration as it was given.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub feature_mode: FeatureMode,
    pub encoding: EncodingPlan,
    pub scaling: Option<ScalingParams>,
    pub pca: Option<PcaModel>,
    pub model: ModelParams,
    pub schema_fingerprint: String,
    pub metadata: ArtifactMetadata,
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArtifact(msg.into())
}

impl ModelArtifact {
    /// Checks that each component is present exactly as the kind requires,
    /// that widths chain together and that every number is finite.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(invalid(format!("format_version {}", self.format_version)));
        }
        let expected = self.feature_mode.schema();
        if self.encoding.schema != expected {
            return Err(invalid("encoding schema does not match the feature mode"));
        }
        if self.schema_fingerprint != expected.fingerprint() {
            return Err(invalid("schema fingerprint does not match the feature mode"));
        }
        if self.encoding.mode != self.model_kind.encoding_mode() {
            return Err(invalid("encoding mode does not suit the model kind"));
        }
        let mut width = self.encoding.width();
        match (&self.scaling, self.model_kind.is_tree()) {
            (Some(_), true) => return Err(invalid("tree models take unscaled input")),
            (None, false) => return Err(invalid("network models need scaling parameters")),
            (Some(s), false) => {
                if s.min.len() != width || s.max.len() != width || !finite(&s.min) || !finite(&s.max) {
                    return Err(invalid("scaling parameters malformed"));
                }
            }
            (None, true) => {}
        }
        match (&self.pca, self.model_kind) {
            (Some(p), ModelKind::PcaDnn) => {
                if p.input_dim() != width
                    || !finite(&p.mean)
                    || !p.components.is_finite()
                    || !finite(&p.eigenvalues)
                    || !finite(&p.explained_variance_ratio)
                    || !p.total_variance.is_finite()
                    || p.components.cols() != p.eigenvalues.len()
                {
                    return Err(invalid("pca model malformed"));
                }
                width = p.n_components();
            }
            (None, ModelKind::PcaDnn) => return Err(invalid("pca_dnn artifact lacks a pca model")),
            (Some(_), _) => return Err(invalid("only pca_dnn artifacts carry a pca model")),
            (None, _) => {}
        }
        let model_width = match (&self.model, self.model_kind) {
            (ModelParams::Tree(t), ModelKind::DecisionTree | ModelKind::ExtraTree) => {
                t.validate()?;
                t.n_features
            }
            (ModelParams::Forest(f), ModelKind::ExtraTreesEnsemble) => {
                f.validate()?;
                f.n_features()
            }
            (ModelParams::Gbdt(g), ModelKind::Gbdt) => {
                g.validate()?;
                g.n_features
            }
            (ModelParams::Mlp(m), ModelKind::Dnn | ModelKind::PcaDnn) => {
                m.validate().map_err(|e| invalid(e.to_string()))?;
                if !m.is_finite() {
                    return Err(invalid("network parameters are not finite"));
                }
                m.arch.input_dim
            }
            _ => return Err(invalid("model parameters do not match the model kind")),
        };
        if model_width != width {
            return Err(invalid(format!(
                "model expects {model_width} inputs but preprocessing yields {width}"
            )));
        }
        Ok(())
    }

    /// Width of raw records this artifact accepts.
    pub fn record_width(&self) -> usize {
        self.encoding.schema.len()
    }

    pub fn preprocessor(&self) -> Preprocessor<'_> {
        Preprocessor {
            encoding: &self.encoding,
            scaling: self.scaling.as_ref(),
            pca: self.pca.as_ref(),
        }
    }

    /// Encodes, scales and projects a labeled dataset into model input space.
    pub fn prepare(&self, ds: &LabeledDataset) -> Result<DesignMatrix> {
        if ds.schema.fingerprint() != self.schema_fingerprint {
            return Err(Error::SchemaMismatch(format!(
                "dataset has {} features but this {} artifact expects the {} feature set",
                ds.schema.len(),
                self.model_kind,
                self.feature_mode
            )));
        }
        self.preprocessor().prepare(ds)
    }

    /// Model input for one unlabeled record; `line` labels parse errors.
    pub fn prepare_values<S: AsRef<str>>(&self, values: &[S], line: usize) -> Result<Matrix> {
        self.preprocessor().prepare_values(values, line)
    }

    /// Attack probability per row of a prepared matrix: network output,
    /// mean leaf probability, or sigmoid of the boosted score.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        match &self.model {
            ModelParams::Tree(t) => t.predict_proba(x),
            ModelParams::Forest(f) => f.predict_proba(x),
            ModelParams::Gbdt(g) => g.predict_proba(x),
            ModelParams::Mlp(m) => forward(m, x),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }
}

/// The encode, scale, project chain shared by training and inference.
#[derive(Debug, Clone, Copy)]
pub struct Preprocessor<'a> {
    pub encoding: &'a EncodingPlan,
    pub scaling: Option<&'a ScalingParams>,
    pub pca: Option<&'a PcaModel>,
}

impl Preprocessor<'_> {
    pub fn prepare(&self, ds: &LabeledDataset) -> Result<DesignMatrix> {
        let mut m = apply_encoding(ds, self.encoding)?;
        if let Some(s) = self.scaling {
            for r in 0..m.rows() {
                s.scale_row(m.values.row_mut(r));
            }
        }
        match self.pca {
            Some(p) => crate::pca::transform(p, &m),
            None => Ok(m),
        }
    }

    pub fn prepare_values<S: AsRef<str>>(&self, values: &[S], line: usize) -> Result<Matrix> {
        let mut row = self.encoding.encode_row(values, line)?;
        if let Some(s) = self.scaling {
            s.scale_row(&mut row);
        }
        let m = Matrix::from_vec(1, row.len(), row)?;
        match self.pca {
            Some(p) => transform_matrix(p, &m),
            None => Ok(m),
        }
    }
}

/// Writes floats with 17 significant digits.
struct ExactFloats;

impl serde_json::ser::Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", f64::from(v))
    }
}

pub fn save<W: Write>(a: &ModelArtifact, sink: W) -> Result<()> {
    a.validate()?;
    let mut sink = BufWriter::new(sink);
    sink.write_all(MAGIC)?;
    sink.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let mut ser = serde_json::Serializer::with_formatter(&mut sink, ExactFloats);
    a.serialize(&mut ser).map_err(io::Error::from)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}

pub fn load<R: Read>(mut source: R) -> Result<ModelArtifact> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() < 8 {
        return Err(Error::CorruptArtifact("file is shorter than its header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let a: ModelArtifact =
        serde_json::from_slice(&bytes[8..]).map_err(|e| Error::CorruptArtifact(e.to_string()))?;
    a.validate().map_err(|e| match e {
        Error::InvalidArtifact(m) => Error::CorruptArtifact(m),
        other => Error::CorruptArtifact(other.to_string()),
    })?;
    Ok(a)
}

pub fn save_file(a: &ModelArtifact, path: &Path) -> Result<()> {
    save(a, File::create(path)?)
}

pub fn load_file(path: &Path) -> Result<ModelArtifact> {
    load(File::open(path)?)
}
