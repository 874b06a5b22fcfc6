use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use fedmpc::rational::{int, ratio};
use fedmpc::{Error, Variant};
use fedmpc_cli::config::{ExperimentConfig, GridSource};
use fedmpc_cli::transcript::{read_model, read_transcript};
use fedmpc_cli::{cmd_ideal, cmd_report, cmd_run, CliError, Options};

const DATA: &str = "client 1\n1 ; 1\nclient 2\n2 ; -1\nclient 3\n0 ; 1\n";

fn setup(conf: &str, data: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("data.txt"), data).unwrap();
    let path = dir.path().join("exp.conf");
    fs::write(&path, conf).unwrap();
    (dir, path)
}

fn fedmpc(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fedmpc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn config_defaults_and_overrides() {
    let c = ExperimentConfig::parse("field_modulus = 13\n").unwrap();
    assert_eq!(c, ExperimentConfig::with_modulus(13));
    assert_eq!((c.dimension, c.clients, c.rounds), (1, 2, 1));
    assert_eq!(c.learning_rate, ratio(1, 8));
    assert_eq!(c.variant, Variant::Masked);
    assert_eq!(c.grid, GridSource::Field);

    let c = ExperimentConfig::parse(
        "# comment\nfield_modulus = 13\nlearning_rate = 1/4\ninitial_model = 1/2 -3\ndimension = 2\n",
    )
    .unwrap();
    assert_eq!(c.learning_rate, ratio(1, 4));
    assert_eq!(c.initial_model(), vec![ratio(1, 2), int(-3)]);
}

#[test]
fn config_errors() {
    let e = ExperimentConfig::parse("field_modulus = 15\n").unwrap_err();
    assert_eq!(e, Error::Config("modulus not prime".into()));
    let e = ExperimentConfig::parse("field_modulus = 5\nfield_modulus = 7\n").unwrap_err();
    assert!(matches!(e, Error::Parse { line: 2, .. }));
    let e = ExperimentConfig::parse("field_modulus = 5\ncolour = red\n").unwrap_err();
    assert!(matches!(e, Error::Parse { line: 2, .. }));
    assert!(matches!(ExperimentConfig::parse("clients = 2\n"), Err(Error::Config(_))));
}

#[test]
fn digest_ignores_data_path() {
    let a = ExperimentConfig::parse("field_modulus = 5\ndata = a.txt\n").unwrap();
    let b = ExperimentConfig::parse("field_modulus = 5\ndata = b.txt\n").unwrap();
    let c = ExperimentConfig::parse("field_modulus = 7\n").unwrap();
    assert_eq!(a.digest(), b.digest());
    assert_ne!(a.digest(), c.digest());
    assert_eq!(a.digest().len(), 8);
}

#[test]
fn run_writes_readable_transcript() {
    let (dir, conf) = setup("field_modulus = 101\nrounds = 2\ndata = data.txt\n", DATA);
    let out = dir.path().join("out");
    let opts = Options::new(&conf, &out);
    cmd_run(&opts).unwrap();
    let t = read_transcript(&fs::read_to_string(out.join("transcript.txt")).unwrap()).unwrap();
    assert_eq!(t.views.len(), 3);
    let report = cmd_report(&opts).unwrap();
    assert!(report.summary.starts_with("transcript 3 parties"));

    // A different config no longer matches the transcript.
    fs::write(&conf, "field_modulus = 103\nrounds = 2\ndata = data.txt\n").unwrap();
    assert!(matches!(cmd_report(&opts), Err(CliError::Core(Error::Config(_)))));
}

#[test]
fn zero_gradient_keeps_initial_model() {
    // w0 = 1/2 fits every example exactly, so each gradient vanishes.
    let data = "client 1\n2 ; 1\nclient 2\n-4 ; -2\n";
    let (dir, conf) = setup(
        "field_modulus = 31\nrounds = 3\ninitial_model = 1/2\ndata = data.txt\n",
        data,
    );
    let opts = Options::new(&conf, dir.path().join("out"));
    cmd_ideal(&opts).unwrap();
    cmd_run(&opts).unwrap();
    for file in ["ideal_model.txt", "model.txt"] {
        let text = fs::read_to_string(dir.path().join("out").join(file)).unwrap();
        assert_eq!(read_model(&text).unwrap(), vec![ratio(1, 2)]);
    }
}

#[test]
fn single_client_single_round() {
    // g = 2 (0 - 3) 1 = -6, c = -6 mod 17 = 11, centered -6; w1 = 0 + 6/8.
    let (dir, conf) = setup(
        "field_modulus = 17\nclients = 1\ndata = data.txt\n",
        "client 4\n1 ; 3\n",
    );
    let opts = Options::new(&conf, dir.path().join("out"));
    cmd_run(&opts).unwrap();
    let model = fs::read_to_string(dir.path().join("out/model.txt")).unwrap();
    assert_eq!(model, "3/4\n");
}

#[test]
fn binary_exit_codes() {
    let (dir, _) = setup("field_modulus = 101\nclients = 5\ndata = data.txt\n", DATA);
    let (code, _, err) = fedmpc(&["run", "--config", "exp.conf"], dir.path());
    assert_eq!(code, 10, "{err}");
    assert!(err.starts_with("error: InsufficientClients"));

    fs::write(dir.path().join("big.conf"), "field_modulus = 101\nclients = 3\nbudget = 1000\n").unwrap();
    let (code, _, err) = fedmpc(&["check-privacy", "--config", "big.conf"], dir.path());
    assert_eq!(code, 4, "{err}");

    fs::write(dir.path().join("bad.conf"), "field_modulus = 15\n").unwrap();
    let (code, _, err) = fedmpc(&["ideal", "--config", "bad.conf"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("modulus not prime"));

    let (code, _, _) = fedmpc(&["run", "--config", "missing.conf"], dir.path());
    assert_eq!(code, 3);
}

#[test]
fn binary_check_and_report() {
    let (dir, _) = setup(
        "field_modulus = 5\nclients = 2\nvariant = plain\ncorruption_sets = server\ndata = data.txt\n",
        "client 1\n1 ; 0\nclient 2\n1 ; 1\nclient 3\n0 ; 0\n",
    );
    let (code, stdout, _) =
        fedmpc(&["check-privacy", "--config", "exp.conf", "--mode", "det"], dir.path());
    assert_eq!(code, 1);
    assert!(stdout.contains("verdict FAIL"));
    let summary = fs::read_to_string(dir.path().join("out/privacy_summary.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(json["rows"], 25);
    assert_eq!(json["verdict"], "FAIL");
    assert_eq!(json["max_distance"], "1/1");

    let (code, _, _) = fedmpc(&["run", "--config", "exp.conf", "--seed", "3"], dir.path());
    assert_eq!(code, 0);
    let (code, stdout, _) = fedmpc(&["report", "--config", "exp.conf", "--seed", "3"], dir.path());
    assert_eq!(code, 0);
    assert!(stdout.contains("party 3 "));
}

mod round_trips {
    use fedmpc::fl::Program;
    use fedmpc::rational::{int, ratio};
    use fedmpc::{run_fl, ClientDataset, Example, FieldSpec, FlConfig, MaskSource, Modulus, Variant};
    use fedmpc_cli::dataset::{format_datasets, parse_datasets};
    use fedmpc_cli::transcript::{read_model, read_transcript, write_model, write_transcript};
    use proptest::prelude::*;

    fn arb_pool() -> impl Strategy<Value = Vec<ClientDataset>> {
        (1usize..3).prop_flat_map(|d| {
            prop::collection::vec(
                prop::collection::vec(
                    (prop::collection::vec((-9i64..9, 1i64..5), d), (-9i64..9, 1i64..5)),
                    0..4,
                ),
                1..5,
            )
            .prop_map(|clients| {
                clients
                    .into_iter()
                    .enumerate()
                    .map(|(i, ex)| {
                        let ex = ex
                            .into_iter()
                            .map(|(f, (n, dd))| {
                                Example::new(f.iter().map(|&(a, b)| ratio(a, b)).collect(), ratio(n, dd))
                            })
                            .collect();
                        ClientDataset::new(3 * i as u64 + 1, ex).unwrap()
                    })
                    .collect()
            })
        })
    }

    proptest! {
        #[test]
        fn datasets_round_trip(pool in arb_pool()) {
            prop_assert_eq!(parse_datasets(&format_datasets(&pool)).unwrap(), pool);
        }

        #[test]
        fn models_round_trip(w in prop::collection::vec((-99i64..99, 1i64..50), 1..6)) {
            let model: Vec<_> = w.iter().map(|&(n, d)| ratio(n, d)).collect();
            prop_assert_eq!(read_model(&write_model(&model)).unwrap(), model);
        }

        #[test]
        fn transcripts_round_trip(pool in arb_pool(), variant in 0usize..3, seed in any::<u64>()) {
            let d = pool[0].examples().first().map_or(1, |e| e.features.len());
            let config = FlConfig {
                field: FieldSpec::new(Modulus::new(10007).unwrap(), d).unwrap(),
                clients: 1,
                scale: 1,
                learning_rate: ratio(1, 64),
                program: Program::LinearSquaredGradient,
                eligibility_min: 1,
                selection_seed: seed,
                initial_model: vec![int(0); d],
            };
            if let Ok(run) = run_fl(&config, &pool, Variant::ALL[variant], 2, &MaskSource::Seeded(seed)) {
                let text = write_transcript("89abcdef", &run.views);
                let back = read_transcript(&text).unwrap();
                prop_assert_eq!(&back.views, &run.views);
                prop_assert_eq!(write_transcript(&back.digest, &back.views), text);
            }
        }
    }
}
