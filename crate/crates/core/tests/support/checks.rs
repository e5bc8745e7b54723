//! Measurements behind the PCA, gradient, evaluation and persistence
//! criteria. Each returns the measured quantity; callers apply thresholds.

use nids_core::eval::{accuracy, confusion};
use nids_core::modelstore::{load, save, ModelKind};
use nids_core::neural::gradients;
use nids_core::pca::{fit_pca_matrix, transform_matrix};
use nids_core::pipeline::{train_model, ExperimentConfig};
use nids_core::schema::{builtin_schema, parse_dataset, LabeledDataset};
use nids_core::Matrix;

use super::{correlated_rows, jacobi_eigen, max_gradient_error, naive_covariance, random_network};

#[derive(Debug, Default, Clone, Copy)]
pub struct PcaMeasurements {
    /// Max |CᵀC - I| entry over all fits.
    pub orthonormality: f64,
    /// Max |eigenvalue - oracle eigenvalue|.
    pub eigenvalue_error: f64,
    /// Min |<component, oracle vector>|; 1 means identical directions.
    pub min_alignment: f64,
    /// Reconstruction error never increased with k.
    pub reconstruction_monotone: bool,
    /// Max |x - inverse(transform(x))| with k = d.
    pub round_trip_error: f64,
}

fn reconstruction_error(x: &Matrix, k: usize) -> f64 {
    let model = fit_pca_matrix(x, k).unwrap();
    let back = model.inverse_transform(&transform_matrix(&model, x).unwrap()).unwrap();
    x.as_slice()
        .iter()
        .zip(back.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// PCA against the Jacobi oracle on `trials` random 20x8 matrices.
pub fn pca_measurements(trials: u64) -> PcaMeasurements {
    let (n, d) = (20, 8);
    let mut m = PcaMeasurements {
        min_alignment: 1.0,
        reconstruction_monotone: true,
        ..Default::default()
    };
    for seed in 0..trials {
        let rows = correlated_rows(seed, n, d);
        let x = Matrix::from_rows(&rows).unwrap();
        let model = fit_pca_matrix(&x, d).unwrap();
        let c = &model.components;
        for a in 0..d {
            for b in 0..d {
                let dot: f64 = (0..d).map(|r| c.get(r, a) * c.get(r, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                m.orthonormality = m.orthonormality.max((dot - target).abs());
            }
        }
        let (_, cov) = naive_covariance(&rows);
        let (values, vectors) = jacobi_eigen(&cov);
        for k in 0..d {
            m.eigenvalue_error = m.eigenvalue_error.max((model.eigenvalues[k] - values[k]).abs());
            let dot: f64 = (0..d).map(|r| c.get(r, k) * vectors[k][r]).sum();
            m.min_alignment = m.min_alignment.min(dot.abs());
        }
        let errors: Vec<f64> = (1..=d).map(|k| reconstruction_error(&x, k)).collect();
        if errors.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12) + 1e-12) {
            m.reconstruction_monotone = false;
        }
        let back = model.inverse_transform(&transform_matrix(&model, &x).unwrap()).unwrap();
        for (a, b) in x.as_slice().iter().zip(back.as_slice()) {
            m.round_trip_error = m.round_trip_error.max((a - b).abs());
        }
    }
    m
}

/// Worst relative gradient error over `count` random networks, step 1e-5.
pub fn gradient_sweep(count: u64) -> f64 {
    (0..count)
        .map(|seed| {
            let (params, x, y) = random_network(seed);
            let batch = Matrix::from_rows(&x).unwrap();
            let (_, grads) = gradients(&params, &batch, &y).unwrap();
            max_gradient_error(&params, &grads, &x, &y, 1e-5)
        })
        .fold(0.0, f64::max)
}

/// Number of `(pred, truth)` pairs up to `max_len` where accuracy of the
/// confusion counts differs from the direct agreement fraction, and the
/// number of pairs checked.
pub fn eval_exhaustive(max_len: u32) -> (u64, u64) {
    let mut mismatches = 0;
    let mut checked = 0;
    for len in 1..=max_len {
        let bits = |v: u32| (0..len).map(|i| ((v >> i) & 1) as u8).collect::<Vec<u8>>();
        for p in 0..1u32 << len {
            let pred = bits(p);
            for t in 0..1u32 << len {
                let truth = bits(t);
                let direct = (p ^ t).count_zeros() - (32 - len);
                let expected = f64::from(direct) / f64::from(len);
                let got = accuracy(&confusion(&pred, &truth).unwrap()).unwrap();
                if got != expected {
                    mismatches += 1;
                }
                checked += 1;
            }
        }
    }
    (mismatches, checked)
}

/// Small, fast settings for pipeline runs on synthetic data.
pub fn quick_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.neural.max_epochs = 8;
    cfg.neural.batch_size = 64;
    cfg.hidden_widths = Some(vec![16, 12, 8, 6, 4]);
    cfg.ensemble_trees = 10;
    cfg.gbdt.rounds = 20;
    cfg.pca_components = 6;
    cfg
}

pub fn synthetic_dataset(seed: u64, n: usize, test_like: bool) -> LabeledDataset {
    let text = super::synthetic_nsl_kdd(seed, n, test_like);
    parse_dataset(text.as_bytes(), &builtin_schema(), "synthetic").unwrap()
}

/// Trains `kind`, saves and reloads it, and reports whether probabilities
/// on a 100-row probe matrix are bit-identical. Also requires the reloaded
/// artifact to compare equal.
pub fn persistence_round_trip(kind: ModelKind) -> Result<bool, String> {
    let train = synthetic_dataset(11, 600, false);
    let probe_ds = synthetic_dataset(12, 100, true);
    let out = train_model(kind, &train, None, &quick_config()).map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    save(&out.artifact, &mut bytes).map_err(|e| e.to_string())?;
    let back = load(bytes.as_slice()).map_err(|e| e.to_string())?;
    let probe = out.artifact.prepare(&probe_ds).map_err(|e| e.to_string())?;
    if probe.rows() != 100 {
        return Err(format!("probe has {} rows", probe.rows()));
    }
    let a = out.artifact.predict_proba(&probe.values).map_err(|e| e.to_string())?;
    let b = back.predict_proba(&back.prepare(&probe_ds).map_err(|e| e.to_string())?.values)
        .map_err(|e| e.to_string())?;
    let identical = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    Ok(identical && back == out.artifact)
}
