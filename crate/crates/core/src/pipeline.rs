//! End-to-end experiments: split, preprocess, fit, evaluate, package.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_split, per_category_recall, EvalReport};
use crate::forests::{
    fit_decision_tree, fit_extra_tree, fit_extra_trees_ensemble, fit_gbdt, GbdtParams, TreeParams,
};
use crate::modelstore::{
    ArtifactMetadata, ModelArtifact, ModelKind, ModelParams, Preprocessor, FORMAT_VERSION,
};
use crate::neural::{train, MlpArchitecture, TrainConfig, TrainHistory};
use crate::pca::fit_pca;
use crate::preprocess::{
    apply_encoding, apply_scaler, fit_encoding, fit_scaler, select_sdn_features, split_dataset,
    DesignMatrix, SplitSpec,
};
use crate::schema::{FeatureMode, LabeledDataset};

/// Hidden widths for the one-hot encoded 41-feature input.
pub const WIDE_HIDDEN: [usize; 5] = [512, 256, 128, 64, 32];
/// Hidden widths for the narrow inputs (6 SDN features, 15 PCA components).
pub const NARROW_HIDDEN: [usize; 5] = [64, 48, 32, 16, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub feature_mode: FeatureMode,
    pub model_kind: Option<ModelKind>,
    pub pca_components: usize,
    pub validation_fraction: f64,
    /// Drives the split and every model's randomness.
    pub seed: u64,
    /// Overrides the width rule of [`hidden_widths`].
    pub hidden_widths: Option<Vec<usize>>,
    pub neural: TrainConfig,
    pub tree: TreeParams,
    pub ensemble_trees: usize,
    pub gbdt: GbdtParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train_path: None,
            test_path: None,
            feature_mode: FeatureMode::Full,
            model_kind: None,
            pca_components: 15,
            validation_fraction: 0.2,
            seed: 42,
            hidden_widths: None,
            neural: TrainConfig::default(),
            tree: TreeParams::default(),
            ensemble_trees: 100,
            gbdt: GbdtParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        SplitSpec::new(self.validation_fraction, self.seed)?;
        if self.pca_components == 0 {
            return Err(Error::InvalidConfig("pca_components must be at least 1".into()));
        }
        if self.ensemble_trees == 0 {
            return Err(Error::InvalidConfig("ensemble_trees must be at least 1".into()));
        }
        self.neural.validate()?;
        self.tree.validate()?;
        self.gbdt.tree.validate()
    }

    pub fn hidden_widths(&self, kind: ModelKind) -> Vec<usize> {
        if let Some(w) = &self.hidden_widths {
            return w.clone();
        }
        match (kind, self.feature_mode) {
            (ModelKind::Dnn, FeatureMode::Full) => WIDE_HIDDEN.to_vec(),
            _ => NARROW_HIDDEN.to_vec(),
        }
    }
}

/// Restricts a full-schema dataset to the configured feature mode.
pub fn restrict_to_mode(ds: &LabeledDataset, mode: FeatureMode) -> Result<LabeledDataset> {
    match mode {
        FeatureMode::Full => Ok(ds.clone()),
        FeatureMode::Sdn if ds.schema == FeatureMode::Sdn.schema() => Ok(ds.clone()),
        FeatureMode::Sdn => select_sdn_features(ds),
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub report: EvalReport,
    /// Per-epoch statistics for network kinds.
    pub history: Option<TrainHistory>,
}

/// Stratified split of `train_set`, preprocessing fit on the training part,
/// model fit, and evaluation on train, validation and (if given) `test_set`.
/// Both datasets carry the full 41-feature schema.
pub fn train_model(
    kind: ModelKind,
    train_set: &LabeledDataset,
    test_set: Option<&LabeledDataset>,
    cfg: &ExperimentConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mode = cfg.feature_mode;
    let ds = restrict_to_mode(train_set, mode)?;
    let (tr, va) = split_dataset(&ds, &SplitSpec::new(cfg.validation_fraction, cfg.seed)?)?;

    let encoding = fit_encoding(&tr, kind.encoding_mode())?;
    let mut xtr = apply_encoding(&tr, &encoding)?;
    let scaling = (!kind.is_tree()).then(|| fit_scaler(&xtr));
    if let Some(s) = &scaling {
        xtr = apply_scaler(&xtr, s)?;
    }
    let pca = if kind == ModelKind::PcaDnn {
        let p = fit_pca(&xtr, cfg.pca_components)?;
        xtr = crate::pca::transform(&p, &xtr)?;
        Some(p)
    } else {
        None
    };
    let prep = Preprocessor {
        encoding: &encoding,
        scaling: scaling.as_ref(),
        pca: pca.as_ref(),
    };
    let xva = prep.prepare(&va)?;

    let tree_params = TreeParams {
        seed: cfg.seed,
        ..cfg.tree
    };
    let mut history = None;
    let model = match kind {
        ModelKind::DecisionTree => ModelParams::Tree(fit_decision_tree(&xtr, &tree_params)?),
        ModelKind::ExtraTree => ModelParams::Tree(fit_extra_tree(&xtr, &tree_params)?),
        ModelKind::ExtraTreesEnsemble => ModelParams::Forest(fit_extra_trees_ensemble(
            &xtr,
            &tree_params,
            cfg.ensemble_trees,
        )?),
        ModelKind::Gbdt => {
            let mut g = cfg.gbdt;
            g.tree.seed = cfg.seed;
            ModelParams::Gbdt(fit_gbdt(&xtr, &g)?.model)
        }
        ModelKind::Dnn | ModelKind::PcaDnn => {
            let arch = MlpArchitecture::new(xtr.cols(), cfg.hidden_widths(kind))?;
            let tc = TrainConfig {
                seed: cfg.seed,
                ..cfg.neural.clone()
            };
            let (params, h) = train(&xtr, &xva, &arch, &tc)?;
            history = Some(h);
            ModelParams::Mlp(params)
        }
    };

    let mut echo = cfg.clone();
    echo.model_kind = Some(kind);
    let artifact = ModelArtifact {
        format_version: FORMAT_VERSION,
        model_kind: kind,
        feature_mode: mode,
        schema_fingerprint: encoding.schema.fingerprint(),
        encoding,
        scaling,
        pca,
        model,
        metadata: ArtifactMetadata {
            created_at: chrono::Utc::now().to_rfc3339(),
            seed: cfg.seed,
            config: serde_json::to_value(&echo).expect("config serializes"),
        },
    };
    artifact.validate()?;

    let mut report = EvalReport::new(kind.display_name(), mode);
    report.train = Some(score(&artifact, &xtr)?.0);
    report.validation = Some(score(&artifact, &xva)?.0);
    if let Some(test) = test_set {
        let t = evaluate_artifact(&artifact, test)?;
        report.test = t.test;
        report.test_category_recall = t.test_category_recall;
    }
    Ok(TrainOutcome {
        artifact,
        report,
        history,
    })
}

fn score(a: &ModelArtifact, x: &DesignMatrix) -> Result<(crate::eval::SplitEval, Vec<u8>)> {
    let pred = a.predict(&x.values)?;
    Ok((evaluate_split(&pred, &x.labels)?, pred))
}

/// Test-set report for a saved pipeline. `ds` may carry the full schema or
/// already match the artifact's feature mode.
pub fn evaluate_artifact(a: &ModelArtifact, ds: &LabeledDataset) -> Result<EvalReport> {
    let ds = restrict_to_mode(ds, a.feature_mode)?;
    let x = a.prepare(&ds)?;
    let (split, pred) = score(a, &x)?;
    let mut report = EvalReport::new(a.model_kind.display_name(), a.feature_mode);
    report.test = Some(split);
    report.test_category_recall = per_category_recall(&pred, &x.categories)?;
    Ok(report)
}

/// Every standard row for the configured mode on one shared split. A row
/// that fails is reported as failed and the remaining rows still run.
pub fn compare(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    cfg: &ExperimentConfig,
) -> Vec<(ModelKind, Result<TrainOutcome>)> {
    ModelKind::standard_rows(cfg.feature_mode)
        .into_iter()
        .map(|kind| (kind, train_model(kind, train_set, Some(test_set), cfg)))
        .collect()
}

pub fn comparison_rows(
    results: &[(ModelKind, Result<TrainOutcome>)],
    mode: FeatureMode,
) -> Vec<EvalReport> {
    results
        .iter()
        .map(|(kind, r)| match r {
            Ok(o) => o.report.clone(),
            Err(e) => EvalReport::failed(kind.display_name(), mode, e.to_string()),
        })
        .collect()
}
