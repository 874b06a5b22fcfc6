use fedmpc::fl::{model_update, quantize, select_clients, Program};
use fedmpc::rational::{int, ratio};
use fedmpc::{
    run_fl, secure_agg_round, ClientDataset, Example, FieldSpec, FieldVector, FlConfig,
    MaskSource, Modulus, PairwiseMaskSet, RandomnessDomain, Rational, Variant,
};
use num::{BigInt, ToPrimitive};
use proptest::prelude::*;

fn field(q: u64, d: usize) -> FieldSpec {
    FieldSpec::new(Modulus::new(q).unwrap(), d).unwrap()
}

/// Round half away from zero on `n / d`, in plain integer arithmetic.
fn round_half_away(n: i64, d: i64) -> i64 {
    let (a, b) = (n.abs(), d.abs());
    let r = (2 * a + b) / (2 * b);
    if (n < 0) != (d < 0) {
        -r
    } else {
        r
    }
}

#[test]
fn quantization_pinned() {
    let g = [ratio(5, 2), ratio(-5, 2), ratio(3, 2), ratio(-7, 4), ratio(1, 3), int(0)];
    let got: Vec<i64> = quantize(&g, 1).iter().map(|v| v.to_i64().unwrap()).collect();
    assert_eq!(got, vec![3, -3, 2, -2, 0, 0]);
    let got: Vec<i64> = quantize(&g, 4).iter().map(|v| v.to_i64().unwrap()).collect();
    assert_eq!(got, vec![10, -10, 6, -7, 1, 0]);
}

fn pool_from(rows: &[Vec<(i64, i64)>]) -> Vec<ClientDataset> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let ex = r.iter().map(|&(x, y)| Example::new(vec![int(x)], int(y))).collect();
            ClientDataset::new(i as u64 + 1, ex).unwrap()
        })
        .collect()
}

proptest! {
    #[test]
    fn quantize_rounds_half_away(n in -500i64..500, d in 1i64..40, s in 1u32..8) {
        let q = quantize(&[ratio(n, d)], s);
        prop_assert_eq!(q[0].clone(), BigInt::from(round_half_away(n * s as i64, d)));
    }

    #[test]
    fn centered_encoding_round_trips(q in prop::sample::select(vec![3u64, 5, 17, 101, 65537]), v in -40000i64..40000) {
        let m = Modulus::new(q).unwrap();
        match FieldVector::encode_centered(m, &[BigInt::from(v)]) {
            Ok(fv) => {
                prop_assert!(v.unsigned_abs() <= m.half());
                prop_assert_eq!(fv.decode_centered(), vec![v]);
            }
            Err(e) => {
                prop_assert!(v.unsigned_abs() > m.half());
                prop_assert_eq!(e.name(), "OverflowError");
            }
        }
    }

    #[test]
    fn domain_points_are_lexicographic(radices in prop::collection::vec(1u64..5, 0..5)) {
        let dom = RandomnessDomain::new(radices.clone()).unwrap();
        let points: Vec<_> = dom.iter().collect();
        prop_assert_eq!(points.len() as u128, radices.iter().map(|&r| r as u128).product::<u128>());
        prop_assert!(points.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(points.iter().all(|p| dom.contains(p)));
    }

    /// Explicit pads never change the aggregate, whatever their values.
    #[test]
    fn masked_sum_equals_plain_sum(
        xs in prop::collection::vec(prop::collection::vec(0u64..11, 2), 1..5),
        pads in prop::collection::vec(0u64..11, 20),
    ) {
        let f = field(11, 2);
        let inputs: Vec<_> = xs.iter().map(|x| FieldVector::new(f.modulus, x.clone()).unwrap()).collect();
        let k = inputs.len();
        let need = k * (k - 1) / 2 * 2;
        let masks = PairwiseMaskSet::from_digits(f, k, &pads[..need]).unwrap();
        let (agg, deltas) = secure_agg_round(&inputs, &masks).unwrap();
        prop_assert_eq!(agg, FieldVector::sum(&inputs).unwrap());
        prop_assert_eq!(deltas.len(), k + 1);
        prop_assert_eq!(deltas[k].entries.len(), k);
    }

    #[test]
    fn selection_is_a_seeded_subset(
        sizes in prop::collection::vec(0usize..4, 1..8),
        count in 1usize..5,
        min in 1usize..3,
        seed in any::<u64>(),
    ) {
        let pool: Vec<_> = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let ex = (0..n).map(|_| Example::new(vec![int(1)], int(0))).collect();
                ClientDataset::new(10 + i as u64, ex).unwrap()
            })
            .collect();
        let eligible: Vec<u64> = pool.iter().filter(|d| d.len() >= min.max(1)).map(|d| d.owner()).collect();
        match select_clients(&pool, count, min, seed) {
            Ok(ids) => {
                prop_assert_eq!(ids.len(), count);
                let mut sorted = ids.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), count);
                prop_assert!(ids.iter().all(|id| eligible.contains(id)));
                let mut reversed = pool.clone();
                reversed.reverse();
                prop_assert_eq!(select_clients(&reversed, count, min, seed).unwrap(), ids);
            }
            Err(e) => {
                prop_assert!(eligible.len() < count);
                prop_assert_eq!(e.name(), "InsufficientClientsError");
            }
        }
    }

    #[test]
    fn model_update_is_exact(
        w in prop::collection::vec((-30i64..30, 1i64..6), 2),
        c in prop::collection::vec(0u64..97, 2),
        k in 1usize..5,
        s in 1u32..4,
        eta in (1i64..4, 1i64..20),
    ) {
        let model: Vec<Rational> = w.iter().map(|&(n, d)| ratio(n, d)).collect();
        let agg = FieldVector::new(Modulus::new(97).unwrap(), c.clone()).unwrap();
        let lr = ratio(eta.0, eta.1);
        let next = model_update(&model, &agg, k, &lr, s).unwrap();
        for j in 0..2 {
            let centered = if c[j] > 48 { c[j] as i64 - 97 } else { c[j] as i64 };
            // Cross-multiplied: (w - w') * eta.1 * s * k * w.1 == eta.0 * centered * w.1
            let diff = (&model[j] - &next[j]) * int(eta.1 * s as i64 * k as i64);
            prop_assert_eq!(diff, int(eta.0 * centered));
        }
    }

    /// Pads never influence the trained model.
    #[test]
    fn masking_is_output_transparent(
        rows in prop::collection::vec(prop::collection::vec((-2i64..=2, -2i64..=2), 1..3), 2..4),
        seed in any::<u64>(),
        rounds in 1u32..4,
    ) {
        let config = FlConfig {
            field: field(1009, 1),
            clients: 2,
            scale: 2,
            learning_rate: ratio(1, 32),
            program: Program::LinearSquaredGradient,
            eligibility_min: 1,
            selection_seed: seed,
            initial_model: vec![ratio(1, 3)],
        };
        let pool = pool_from(&rows);
        let plain = run_fl(&config, &pool, Variant::Plain, rounds, &MaskSource::Seeded(0));
        let masked = run_fl(&config, &pool, Variant::Masked, rounds, &MaskSource::Seeded(seed));
        match (plain, masked) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.round_models, b.round_models);
                prop_assert_eq!(a.selection, b.selection);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.error.name(), b.error.name()),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|r| r.final_model), b.map(|r| r.final_model)),
        }
    }
}
