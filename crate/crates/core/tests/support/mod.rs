//! Test oracles and data generators shared by the integration suites.
//!
//! Everything here is written independently of the library's numeric code:
//! a cyclic Jacobi eigensolver, naive covariance, central finite differences
//! over a hand-written forward pass, and a plain logistic-regression fit.

#![allow(dead_code)]

pub mod checks;

use nids_core::neural::{init_mlp, MlpArchitecture, MlpParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normal draw via Box-Muller.
pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `n x d` rows with correlated columns (`z * A` for a random mixing matrix).
pub fn correlated_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let mix: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| gauss(&mut r)).collect()).collect();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| gauss(&mut r)).collect();
            (0..d)
                .map(|j| (0..d).map(|k| z[k] * mix[k][j]).sum::<f64>() + 3.0)
                .collect()
        })
        .collect()
}

pub fn naive_covariance(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in 0..d {
            cov[a][b] = rows
                .iter()
                .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                .sum::<f64>()
                / (n - 1) as f64;
        }
    }
    (mean, cov)
}

/// Cyclic Jacobi rotations. Returns eigenvalues in descending order and the
/// matching unit eigenvectors.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Scalar reference forward pass and mean clamped cross-entropy.
pub fn reference_loss(params: &MlpParams, x: &[Vec<f64>], y: &[u8]) -> f64 {
    let last = params.layers.len() - 1;
    let mut total = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let mut act = row.clone();
        for (i, layer) in params.layers.iter().enumerate() {
            let w = &layer.weights;
            let mut out = layer.bias.clone();
            for (o, out_v) in out.iter_mut().enumerate() {
                for (k, a) in act.iter().enumerate() {
                    *out_v += a * w.get(k, o);
                }
            }
            if i < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            act = out;
        }
        let p = (1.0 / (1.0 + (-act[0]).exp())).clamp(1e-7, 1.0 - 1e-7);
        total -= if label == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    total / x.len() as f64
}

/// Random small network plus batch for gradient checking.
pub fn random_network(seed: u64) -> (MlpParams, Vec<Vec<f64>>, Vec<u8>) {
    let mut r = rng(seed);
    let input = r.random_range(2..6);
    let widths: Vec<usize> = (0..5).map(|_| r.random_range(2..6)).collect();
    let arch = MlpArchitecture::new(input, widths).unwrap();
    let mut params = init_mlp(&arch, seed.wrapping_mul(31) + 7);
    for layer in &mut params.layers {
        for b in &mut layer.bias {
            *b = 0.1 * gauss(&mut r);
        }
    }
    let n = r.random_range(1..9);
    let x = (0..n)
        .map(|_| (0..input).map(|_| gauss(&mut r)).collect())
        .collect();
    let y = (0..n).map(|_| r.random_range(0..2u8)).collect();
    (params, x, y)
}

pub fn gradient_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative disagreement between `analytic` and central finite
/// differences (step `h`) of [`reference_loss`] over every parameter.
pub fn max_gradient_error(
    params: &MlpParams,
    analytic: &[nids_core::neural::Layer],
    x: &[Vec<f64>],
    y: &[u8],
    h: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut p = params.clone();
    for l in 0..p.layers.len() {
        for j in 0..p.layers[l].weights.as_slice().len() {
            let orig = p.layers[l].weights.as_slice()[j];
            p.layers[l].weights.as_mut_slice()[j] = orig + h;
            let up = reference_loss(&p, x, y);
            p.layers[l].weights.as_mut_slice()[j] = orig - h;
            let down = reference_loss(&p, x, y);
            p.layers[l].weights.as_mut_slice()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(gradient_error(analytic[l].weights.as_slice()[j], numeric));
        }
        for j in 0..p.layers[l].bias.len() {
            let orig = p.layers[l].bias[j];
            p.layers[l].bias[j] = orig + h;
            let up = reference_loss(&p, x, y);
            p.layers[l].bias[j] = orig - h;
            let down = reference_loss(&p, x, y);
            p.layers[l].bias[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(gradient_error(analytic[l].bias[j], numeric));
        }
    }
    worst
}

/// Two Gaussian blobs centred at `-sep/2` and `+sep/2` on every axis.
pub fn blobs(seed: u64, n: usize, d: usize, sep: f64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut r = rng(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let centre = if label == 1 { sep / 2.0 } else { -sep / 2.0 };
        x.push((0..d).map(|_| centre + gauss(&mut r)).collect());
        y.push(label);
    }
    (x, y)
}

/// Training accuracy of a full-batch gradient-descent logistic regression.
pub fn logistic_regression_accuracy(x: &[Vec<f64>], y: &[u8]) -> f64 {
    let d = x[0].len();
    let mut w = vec![0.0; d + 1];
    for _ in 0..2000 {
        let mut g = vec![0.0; d + 1];
        for (row, &label) in x.iter().zip(y) {
            let z = w[d] + row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            let err = 1.0 / (1.0 + (-z).exp()) - f64::from(label);
            for j in 0..d {
                g[j] += err * row[j];
            }
            g[d] += err;
        }
        for j in 0..=d {
            w[j] -= 0.1 * g[j] / x.len() as f64;
        }
    }
    let hits = x
        .iter()
        .zip(y)
        .filter(|(row, &label)| {
            let z = w[d] + row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            u8::from(z >= 0.0) == label
        })
        .count();
    hits as f64 / x.len() as f64
}

const SERVICES: [&str; 8] = [
    "http", "smtp", "ftp_data", "private", "domain_u", "eco_i", "telnet", "ftp",
];

/// Deterministic records in NSL-KDD line format (41 features, label,
/// difficulty). `test_like` adds attack names that only appear in the test
/// distribution and shifts some attacks toward normal traffic.
pub fn synthetic_nsl_kdd(seed: u64, n: usize, test_like: bool) -> String {
    let mut r = rng(seed);
    let mut out = String::new();
    for _ in 0..n {
        let u: f64 = r.random();
        let mut f = vec![0.0f64; 41];
        let (proto, service, flag, label);
        let jitter = |r: &mut ChaCha8Rng, lo: f64, hi: f64| r.random_range(lo..hi).round();
        if u < 0.52 {
            proto = if r.random_bool(0.85) { "tcp" } else { "udp" };
            service = SERVICES[r.random_range(0..3)];
            flag = "SF";
            label = "normal";
            f[0] = if r.random_bool(0.9) { 0.0 } else { jitter(&mut r, 1.0, 60.0) };
            f[4] = jitter(&mut r, 100.0, 3000.0);
            f[5] = jitter(&mut r, 0.0, 20000.0);
            f[11] = 1.0;
            f[22] = jitter(&mut r, 1.0, 25.0);
            f[23] = jitter(&mut r, 1.0, 25.0);
            f[28] = 1.0;
            f[31] = jitter(&mut r, 1.0, 255.0);
            f[32] = 255.0;
        } else if u < 0.82 {
            let shifted = test_like && r.random_bool(0.4);
            proto = "tcp";
            service = if shifted { "http" } else { "private" };
            flag = if shifted { "SF" } else { "S0" };
            label = if shifted { "apache2" } else { "neptune" };
            f[4] = if shifted { jitter(&mut r, 100.0, 3000.0) } else { 0.0 };
            f[22] = jitter(&mut r, 80.0, 500.0);
            f[23] = jitter(&mut r, 1.0, 30.0);
            f[24] = 1.0;
            f[25] = 1.0;
            f[28] = r.random_range(0.0..0.2);
            f[32] = jitter(&mut r, 1.0, 30.0);
        } else if u < 0.93 {
            let shifted = test_like && r.random_bool(0.5);
            proto = if r.random_bool(0.5) { "tcp" } else { "icmp" };
            service = if proto == "icmp" { "eco_i" } else { "private" };
            flag = if proto == "icmp" { "SF" } else { "REJ" };
            label = if shifted { "mscan" } else { "portsweep" };
            f[4] = jitter(&mut r, 0.0, 20.0);
            f[22] = jitter(&mut r, 1.0, if shifted { 25.0 } else { 6.0 });
            f[23] = jitter(&mut r, 1.0, 6.0);
            f[26] = 1.0;
            f[30] = r.random_range(0.5..1.0);
            f[33] = r.random_range(0.5..1.0);
        } else if u < 0.985 {
            proto = "tcp";
            service = if r.random_bool(0.5) { "telnet" } else { "ftp" };
            flag = "SF";
            label = if test_like && r.random_bool(0.5) { "snmpguess" } else { "guess_passwd" };
            f[0] = jitter(&mut r, 0.0, 5.0);
            f[4] = jitter(&mut r, 100.0, 140.0);
            f[5] = jitter(&mut r, 100.0, 400.0);
            f[10] = 1.0;
            f[22] = 1.0;
            f[23] = 1.0;
        } else {
            proto = "tcp";
            service = "telnet";
            flag = "SF";
            label = "buffer_overflow";
            f[0] = jitter(&mut r, 50.0, 300.0);
            f[4] = jitter(&mut r, 1000.0, 5000.0);
            f[9] = jitter(&mut r, 1.0, 4.0);
            f[11] = 1.0;
            f[13] = 1.0;
            f[22] = 1.0;
            f[23] = 1.0;
        }
        // background noise on a rate column
        f[38] = (r.random::<f64>() * 100.0).round() / 100.0;
        let mut fields: Vec<String> = f.iter().map(|v| format_number(*v)).collect();
        fields[1] = proto.into();
        fields[2] = service.into();
        fields[3] = flag.into();
        let difficulty = r.random_range(1..22);
        out.push_str(&format!("{},{label},{difficulty}\n", fields.join(",")));
    }
    out
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}
