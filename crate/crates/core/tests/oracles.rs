//! Independent re-implementations and frozen values that pin down the core numerics.

use pemnet_core::gestures::{build_corpus, gesture_csv, CorpusOptions};
use pemnet_core::model::{
    init_parameters, sequence_loss, LatentNoise, LatentPosterior, ModelConfig, ParamRole,
    Parameters, Sequence,
};
use pemnet_core::numerics::{derive_stream, stream_label};
use rand::RngCore;

/// Straight-line unroll and loss with explicit index loops.
fn reference_loss(
    p: &Parameters<f64>,
    q: &LatentPosterior<f64>,
    target: &Sequence<f64>,
    eps: &LatentNoise<f64>,
) -> [f64; 4] {
    let c = *p.config();
    let (nh, nl, lh, ll, dof) = (c.high.n_units, c.low.n_units, c.high.n_latent, c.low.n_latent, c.dof);
    let w = |role: ParamRole, r: usize, k: usize| {
        let (_, cols) = role.shape(&c);
        p.tensor(role)[r * cols + k]
    };
    let mut uh = vec![0.0; nh];
    let mut ul = vec![0.0; nl];
    let mut hh = vec![0.0; nh];
    let mut hl = vec![0.0; nl];
    let (mut pe_p, mut pe_x, mut kl_h, mut kl_l) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..target.len() {
        let zh: Vec<f64> = (0..lh)
            .map(|i| q.high.mu[t * lh + i] + q.high.log_sigma[t * lh + i].exp() * eps.high[t * lh + i])
            .collect();
        let zl: Vec<f64> = (0..ll)
            .map(|i| q.low.mu[t * ll + i] + q.low.log_sigma[t * ll + i].exp() * eps.low[t * ll + i])
            .collect();
        let mut nuh = vec![0.0; nh];
        for i in 0..nh {
            let mut s = w(ParamRole::HighBias, i, 0);
            for k in 0..nh {
                s += w(ParamRole::HighRecurrent, i, k) * hh[k];
            }
            for k in 0..nl {
                s += w(ParamRole::LowToHigh, i, k) * hl[k];
            }
            for k in 0..lh {
                s += w(ParamRole::LatentToHigh, i, k) * zh[k];
            }
            nuh[i] = (1.0 - 1.0 / c.high.tau) * uh[i] + s / c.high.tau;
        }
        let mut nul = vec![0.0; nl];
        for i in 0..nl {
            let mut s = w(ParamRole::LowBias, i, 0);
            for k in 0..nl {
                s += w(ParamRole::LowRecurrent, i, k) * hl[k];
            }
            for k in 0..nh {
                s += w(ParamRole::HighToLow, i, k) * hh[k];
            }
            for k in 0..ll {
                s += w(ParamRole::LatentToLow, i, k) * zl[k];
            }
            nul[i] = (1.0 - 1.0 / c.low.tau) * ul[i] + s / c.low.tau;
        }
        uh = nuh;
        ul = nul;
        hh = uh.iter().map(|v| v.tanh()).collect();
        hl = ul.iter().map(|v| v.tanh()).collect();
        for o in 0..2 * dof {
            let mut s = w(ParamRole::ReadoutBias, o, 0);
            for k in 0..nl {
                s += w(ParamRole::Readout, o, k) * hl[k];
            }
            let y = s.tanh();
            if o < dof {
                pe_p += 0.5 * (y - target.proprio[t * dof + o]).powi(2);
            } else {
                pe_x += 0.5 * (y - target.extero[t * dof + o - dof]).powi(2);
            }
        }
        for i in 0..lh {
            let (m, s) = (q.high.mu[t * lh + i], q.high.log_sigma[t * lh + i]);
            kl_h += 0.5 * (m * m + (2.0 * s).exp() - 1.0 - 2.0 * s);
        }
        for i in 0..ll {
            let (m, s) = (q.low.mu[t * ll + i], q.low.log_sigma[t * ll + i]);
            kl_l += 0.5 * (m * m + (2.0 * s).exp() - 1.0 - 2.0 * s);
        }
    }
    let n = target.len() as f64;
    [pe_p / (n * dof as f64), pe_x / (n * dof as f64), kl_h / (n * lh as f64), kl_l / (n * ll as f64)]
}

#[test]
fn sequence_loss_matches_straight_line_unroll() {
    for seed in 0..5u64 {
        let mut c = ModelConfig::default().with_weights(0.3, 0.7);
        c.low.n_units = 3;
        c.high.n_units = 2;
        c.low.n_latent = 2;
        c.high.n_latent = 1;
        c.dof = 2;
        let mut rng = derive_stream(seed, 1);
        let p = init_parameters(&c, &mut rng).unwrap();
        let mut q = LatentPosterior::prior(&c, 5);
        for s in q.slices_mut() {
            s.iter_mut().for_each(|v| *v = rng.uniform(-1.0, 1.0));
        }
        let target = Sequence::from_streams(2, rng.standard_normal(10), rng.standard_normal(10));
        let eps = LatentNoise::draw(&c, 5, &mut rng);
        let got = sequence_loss(&p, &q, &target, &eps).unwrap();
        let [pp, px, kh, kl] = reference_loss(&p, &q, &target, &eps);
        for (a, b) in [(got.pe_proprio, pp), (got.pe_extero, px), (got.kl_high, kh), (got.kl_low, kl)] {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let total = pp + px + 0.3 * kh + 0.7 * kl;
        assert!((got.total - total).abs() < 1e-12);
    }
}

#[test]
fn rng_golden_values() {
    let golden = include_str!("golden/rng_42_7.txt");
    let mut r = derive_stream(42, 7);
    for line in golden.lines() {
        let (kind, value) = line.split_once(' ').unwrap();
        match kind {
            "u64" => assert_eq!(r.next_u64(), u64::from_str_radix(value, 16).unwrap()),
            "normal" => assert_eq!(r.normal::<f64>(), value.parse::<f64>().unwrap()),
            "label" => assert_eq!(stream_label(&[1, 2, 3]), u64::from_str_radix(value, 16).unwrap()),
            other => panic!("unknown golden entry {other}"),
        }
    }
}

#[test]
fn corpus_file_golden() {
    let c = build_corpus(7, CorpusOptions { n_specs: 1, length: 12, ..Default::default() });
    assert_eq!(gesture_csv(&c.gestures[0]), include_str!("golden/gesture_1_leader.csv"));
}
