use distillery::distill::{
    kl_loss, kl_loss_grad, sharpen_distribution, ReplayBuffer, ReplayMetadata, ReplayRecord,
};
use distillery::envs::EnvSpec;
use distillery::eval::{geometric_mean_ratio, EvalReport};
use distillery::nn::{argmax, log_softmax, softmax, ActorCriticNet, Matrix, Topology};
use distillery::persistence::{decode_checkpoint, decode_replay, encode_checkpoint, encode_replay, Provenance};
use distillery::rng;
use proptest::prelude::*;

fn logits(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-30.0..30.0f64, 2..=max_len)
}

fn positive_scores() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(1e-3..1e5f64, n),
            prop::collection::vec(1e-3..1e5f64, n),
        )
    })
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(z in logits(18), tau in 0.01..10.0f64) {
        let p = softmax(&z, tau).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn softmax_ignores_shifts(z in logits(10), c in -100.0..100.0f64) {
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let (a, b) = (softmax(&z, 1.0).unwrap(), softmax(&shifted, 1.0).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn log_softmax_matches_log_of_softmax(z in logits(8)) {
        let p = softmax(&z, 1.0).unwrap();
        for (l, q) in log_softmax(&z).iter().zip(&p) {
            if *q > 1e-300 {
                prop_assert!((l - q.ln()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sharpening_keeps_argmax(z in logits(18), tau in 1e-3..5.0f64) {
        let p = sharpen_distribution(&z, tau).unwrap();
        prop_assert_eq!(argmax(&p), argmax(&z));
    }

    #[test]
    fn kl_is_non_negative_with_zero_sum_gradients(
        rows in (2usize..7).prop_flat_map(|a| prop::collection::vec(
            (prop::collection::vec(-4.0..4.0f64, a), prop::collection::vec(-4.0..4.0f64, a)), 1..6))
    ) {
        let b = rows.len();
        let a = rows[0].0.len();
        let mut teacher = Matrix::zeros(b, a);
        let mut z = Matrix::zeros(b, a);
        for (i, (t, s)) in rows.iter().enumerate() {
            teacher.row_mut(i).copy_from_slice(&softmax(t, 1.0).unwrap());
            z.row_mut(i).copy_from_slice(s);
        }
        prop_assert!(kl_loss(&teacher, &z, 1e-8).unwrap() >= -1e-9);
        let g = kl_loss_grad(&teacher, &z).unwrap();
        for i in 0..b {
            prop_assert!(g.row(i).iter().sum::<f64>().abs() < 1e-10);
        }
        // identical rows give zero loss
        let mut same = Matrix::zeros(b, a);
        for i in 0..b {
            same.row_mut(i).copy_from_slice(&softmax(z.row(i), 1.0).unwrap());
        }
        prop_assert!(kl_loss(&same, &z, 1e-8).unwrap().abs() < 1e-9);
    }

    #[test]
    fn geometric_ratio_reciprocity((a, b) in positive_scores()) {
        let product = geometric_mean_ratio(&a, &b).unwrap() * geometric_mean_ratio(&b, &a).unwrap();
        prop_assert!((product - 10_000.0).abs() / 10_000.0 < 1e-6);
    }

    #[test]
    fn geometric_ratio_scales((a, b) in positive_scores(), k in 1e-3..1e3f64) {
        let scaled: Vec<f64> = a.iter().map(|v| v * k).collect();
        let base = geometric_mean_ratio(&a, &b).unwrap();
        let got = geometric_mean_ratio(&scaled, &b).unwrap();
        prop_assert!((got - k * base).abs() / (k * base) < 1e-12);
    }

    #[test]
    fn report_mean_is_arithmetic_mean(scores in prop::collection::vec(-100.0..100.0f64, 1..50)) {
        let r = EvalReport::from_scores(scores.clone(), 0).unwrap();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        prop_assert!((r.mean - mean).abs() < 1e-12);
        prop_assert!(r.high >= r.mean - 1e-12);
        prop_assert!(r.std >= 0.0);
    }

    #[test]
    fn checkpoint_round_trip(
        obs in 1usize..6, actions in 2usize..6,
        hidden in prop::collection::vec(1usize..9, 0..3), seed in any::<u64>()
    ) {
        let net = ActorCriticNet::init(Topology::new(obs, actions, &hidden), &mut rng::stream(seed, "init", 0)).unwrap();
        let prov = Provenance {
            algorithm: "ppo".into(),
            env: EnvSpec::grid(3),
            seed,
            env_steps: seed % 1000,
            config_hash: format!("{seed:x}"),
        };
        let bytes = encode_checkpoint(&net, &prov).unwrap();
        let (back, prov_back) = decode_checkpoint(&bytes).unwrap();
        prop_assert_eq!(&prov_back, &prov);
        prop_assert_eq!(back.topology(), net.topology());
        for (x, y) in net.params().iter().zip(back.params()) {
            prop_assert_eq!(*x as f32, *y as f32);
        }
        prop_assert_eq!(encode_checkpoint(&back, &prov_back).unwrap(), bytes);
    }

    #[test]
    fn replay_round_trip(
        obs_dim in 1usize..5,
        records in prop::collection::vec((prop::collection::vec(-5.0..5.0f32, 4), prop::collection::vec(0.01..1.0f64, 3), 0u16..3), 1..20)
    ) {
        let mut buffer = ReplayBuffer::new(obs_dim, 3, 5, ReplayMetadata {
            teacher_id: "p".into(),
            env: EnvSpec::chain(4, 0.0),
            collected_at: 0,
            config_hash: "h".into(),
        });
        for (o, w, a) in records {
            let sum: f64 = w.iter().sum();
            buffer.push(ReplayRecord {
                observation: o[..obs_dim].to_vec(),
                teacher_probs: w.iter().map(|v| (v / sum) as f32).collect(),
                action: a,
            }).unwrap();
        }
        let bytes = encode_replay(&buffer).unwrap();
        let back = decode_replay(&bytes).unwrap();
        prop_assert_eq!(&back, &buffer);
        prop_assert_eq!(encode_replay(&back).unwrap(), bytes);
    }
}
