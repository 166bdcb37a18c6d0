//! Oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use gnncomm::env::{ChannelRealization, ScenarioConfig};
use gnncomm::nn::Matrix;
use gnncomm::rng::SimRng;
use num_complex::Complex64;
use rand::Rng;

/// Scalar-loop MRT oracle on plain (re, im) pairs.
pub fn se_oracle(beta: &[Vec<f64>], h: &[Vec<(f64, f64)>], p: &[Vec<f64>], noise_mw: f64) -> Vec<f64> {
    let m_count = beta.len();
    let k_count = beta[0].len();
    let g = |m: usize, k: usize| {
        let s = beta[m][k].sqrt();
        (h[m][k].0 * s, h[m][k].1 * s)
    };
    let mut out = Vec::new();
    for k in 0..k_count {
        let mut desired = 0.0;
        for m in 0..m_count {
            let (re, im) = g(m, k);
            desired += p[m][k].sqrt() * (re * re + im * im).sqrt();
        }
        let mut interference = 0.0;
        for kp in 0..k_count {
            if kp == k {
                continue;
            }
            let (mut sr, mut si) = (0.0, 0.0);
            for m in 0..m_count {
                let (ar, ai) = g(m, k);
                let (br, bi) = g(m, kp);
                let norm = (br * br + bi * bi).sqrt();
                // a · conj(b)
                let cr = ar * br + ai * bi;
                let ci = ai * br - ar * bi;
                let w = p[m][kp].sqrt() / norm;
                sr += w * cr;
                si += w * ci;
            }
            interference += sr * sr + si * si;
        }
        let sinr = desired * desired / (interference + noise_mw);
        out.push((1.0 + sinr).log2());
    }
    out
}

pub fn random_instance(rng: &mut SimRng, cfg: &ScenarioConfig) -> (ChannelRealization, Matrix, Vec<Vec<f64>>, Vec<Vec<(f64, f64)>>) {
    let m = rng.random_range(1..=3);
    let k = rng.random_range(1..=2);
    let beta: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..k).map(|_| 10f64.powf(rng.random_range(-14.0..-9.0))).collect())
        .collect();
    let h: Vec<Vec<(f64, f64)>> = (0..m)
        .map(|_| (0..k).map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect())
        .collect();
    let mut power = Matrix::zeros(m, k);
    for i in 0..m {
        let shares: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = shares.iter().sum::<f64>() + rng.random_range(0.0..1.0);
        for j in 0..k {
            power[(i, j)] = cfg.ap_max_power_mw * shares[j] / total;
        }
    }
    let ch = ChannelRealization {
        beta: Matrix::from_rows(&beta).unwrap(),
        h: h.iter().flatten().map(|&(re, im)| Complex64::new(re, im)).collect(),
    };
    (ch, power, beta, h)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut SimRng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_symmetric(v: usize, p: f64, rng: &mut SimRng) -> Matrix {
    let mut a = Matrix::zeros(v, v);
    for i in 0..v {
        for j in i + 1..v {
            if rng.random_bool(p) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    a
}
