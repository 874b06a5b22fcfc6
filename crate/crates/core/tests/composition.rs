use fedmpc::fl::{fl_functionality, Program};
use fedmpc::functionality::SumRule;
use fedmpc::rational::{int, ratio};
use fedmpc::{
    compose, run_fl, ClientDataset, CompositionPlan, Delivery, Example, FieldSpec, FieldVector,
    FlConfig, MAryFunctionality, MaskSource, Modulus, Threading, Value, Variant,
};
use proptest::prelude::*;

fn z5() -> FieldSpec {
    FieldSpec::new(Modulus::new(5).unwrap(), 1).unwrap()
}

fn fv(c: u64) -> Value {
    Value::Field(FieldVector::new(Modulus::new(5).unwrap(), vec![c]).unwrap())
}

#[test]
fn composition_is_associative() {
    let padded = SumRule {
        field: z5(),
        accumulate: true,
        padded: true,
    };
    let plain = SumRule {
        padded: false,
        ..padded
    };
    let f1 = MAryFunctionality::sum_to_server(3, padded).unwrap();
    let f2 = MAryFunctionality::sum_to_server(3, plain).unwrap();
    let f3 = MAryFunctionality::sum_to_server(3, padded).unwrap();
    let plan = |rounds| CompositionPlan::new(rounds, Threading::ServerCarry);
    let inner_first = compose(plan(vec![
        compose(plan(vec![f1.clone(), f2.clone()])).unwrap(),
        f3.clone(),
    ]))
    .unwrap();
    let inner_last = compose(plan(vec![
        f1.clone(),
        compose(plan(vec![f2.clone(), f3.clone()])).unwrap(),
    ]))
    .unwrap();
    let flat = compose(plan(vec![f1, f2, f3])).unwrap();
    assert_eq!(flat.randomness().size(), 25);
    for a in 0..5 {
        for b in 0..5 {
            for w in 0..5 {
                let inputs = [fv(a), fv(b), fv(w)];
                for r in flat.randomness().iter() {
                    let expected = flat.evaluate(&inputs, &r).unwrap();
                    assert_eq!(inner_first.evaluate(&inputs, &r).unwrap(), expected);
                    assert_eq!(inner_last.evaluate(&inputs, &r).unwrap(), expected);
                    // w + 3(a + b) + r1 + r2
                    let total = (w + 3 * (a + b) + r[0] + r[1]) % 5;
                    assert_eq!(expected[2], fv(total));
                }
            }
        }
    }
}

fn dataset(owner: u64, rows: &[(i64, i64)]) -> ClientDataset {
    ClientDataset::new(
        owner,
        rows.iter()
            .map(|&(x, y)| Example::new(vec![int(x)], int(y)))
            .collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn every_variant_computes_the_composed_functionality(
        rows in prop::collection::vec(prop::collection::vec((-2i64..=2, -3i64..=3), 1..3), 1..4),
        rounds in 1u32..4,
        mask_seed in any::<u64>(),
    ) {
        let clients = rows.len();
        let config = FlConfig {
            field: FieldSpec::new(Modulus::new(101).unwrap(), 1).unwrap(),
            clients,
            scale: 2,
            learning_rate: ratio(1, 16),
            program: Program::LinearSquaredGradient,
            eligibility_min: 1,
            selection_seed: 3,
            initial_model: vec![ratio(1, 2)],
        };
        let pool: Vec<_> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| dataset(i as u64 + 1, r))
            .collect();
        let f = fl_functionality(&config.round_params(), rounds as usize, Delivery::Final).unwrap();
        let ideal = f.evaluate(&config.ideal_inputs(&pool), &[]);
        for variant in Variant::ALL {
            let run = run_fl(&config, &pool, variant, rounds, &MaskSource::Seeded(mask_seed));
            match (&ideal, run) {
                (Ok(out), Ok(run)) => {
                    prop_assert_eq!(&out[clients], &Value::Model(run.final_model));
                }
                (Err(e), Err(r)) => prop_assert_eq!(e.name(), r.error.name()),
                (i, r) => prop_assert!(false, "ideal {:?} vs run {:?}", i, r.map(|r| r.final_model)),
            }
        }
    }
}
