use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conjointnet"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_schema(dir: &Path, levels: &[usize]) -> PathBuf {
    let attrs: Vec<serde_json::Value> = levels
        .iter()
        .enumerate()
        .map(|(i, &k)| serde_json::json!({"name": format!("a{i}"), "levels": (0..k).map(|j| format!("l{j}")).collect::<Vec<_>>()}))
        .collect();
    let path = dir.join("schema.json");
    std::fs::write(&path, serde_json::json!({ "attributes": attrs }).to_string()).unwrap();
    path
}

fn write_config(dir: &Path, name: &str, body: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body.to_string()).unwrap();
    path
}

#[test]
fn linear_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let schema = write_schema(d, &[3, 3, 2]);
    let ds = d.join("lin.json");
    ok(&["synth", "linear", "--schema", p(&schema), "--n", "800", "--seed", "4", "--out", p(&ds)]);

    let conj = write_config(
        d,
        "conj.json",
        serde_json::json!({"dataset": ds, "output_dir": d.join("conj"), "model": {"type": "conjoint"}, "seed": 1}),
    );
    let metrics: serde_json::Value = serde_json::from_str(ok(&["train", "--config", p(&conj)]).trim()).unwrap();
    assert!(metrics["accuracy"].as_f64().unwrap() > 0.5);

    let res = write_config(
        d,
        "res.json",
        serde_json::json!({"dataset": ds, "output_dir": d.join("res"), "model": {"type": "residual"}, "max_epochs": 3}),
    );
    ok(&["train", "--config", p(&res)]);
    for f in ["config.json", "checkpoint.json", "report.json", "curves.csv"] {
        assert!(d.join("res").join(f).exists());
    }
    let curves = std::fs::read_to_string(d.join("res/curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 4);

    let eval = ok(&["eval", "--model", p(&d.join("conj/checkpoint.json")), "--dataset", p(&ds), "--split", "test"]);
    let ev: serde_json::Value = serde_json::from_str(eval.trim()).unwrap();
    assert_eq!(ev, metrics);

    let pw = d.join("pw.csv");
    ok(&["partworths", "--model", p(&d.join("conj/checkpoint.json")), "--out", p(&pw)]);
    let text = std::fs::read_to_string(&pw).unwrap();
    assert!(text.starts_with("attribute,level,partworth,importance,importance_share"));
    assert_eq!(text.lines().count(), 1 + 8);

    let cmp = d.join("cmp.csv");
    let table = ok(&[
        "compare",
        "--reports",
        p(&d.join("conj/report.json")),
        p(&d.join("res/report.json")),
        "--out",
        p(&cmp),
    ]);
    assert!(table.contains("Residual ConjointNet"));
    let csv = std::fs::read_to_string(&cmp).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "ModelType,Accuracy,AUC");
    assert!(lines[1].starts_with("Conjoint,") && lines[2].starts_with("Residual ConjointNet,"));
    assert!(cmp.with_extension("txt").exists());
}

#[test]
fn train_is_bit_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let schema = write_schema(d, &[2, 2, 3]);
    let ds = d.join("xor.json");
    ok(&["synth", "xor", "--schema", p(&schema), "--n", "600", "--seed", "2", "--out", p(&ds)]);
    let cfg = write_config(
        d,
        "c.json",
        serde_json::json!({"dataset": ds, "output_dir": d.join("a"), "model": {"type": "residual", "pairing": "single_vector"}, "max_epochs": 4, "seed": 7}),
    );
    ok(&["train", "--config", p(&cfg)]);
    ok(&["train", "--config", p(&cfg), "--output-dir", p(&d.join("b"))]);
    for f in ["checkpoint.json", "report.json", "curves.csv"] {
        let a = std::fs::read(d.join("a").join(f)).unwrap();
        let b = std::fs::read(d.join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    ok(&["train", "--config", p(&cfg), "--output-dir", p(&d.join("c")), "--seed", "8"]);
    assert_ne!(
        std::fs::read(d.join("a/checkpoint.json")).unwrap(),
        std::fs::read(d.join("c/checkpoint.json")).unwrap()
    );
}

#[test]
fn set_overrides_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let schema = write_schema(d, &[2, 2, 3]);
    let ds = d.join("xor.json");
    ok(&["synth", "xor", "--schema", p(&schema), "--n", "300", "--seed", "2", "--out", p(&ds)]);
    let cfg = write_config(
        d,
        "c.json",
        serde_json::json!({"dataset": ds, "output_dir": d.join("a"), "model": {"type": "residual", "pairing": "single_vector"}, "max_epochs": 2}),
    );
    ok(&["train", "--config", p(&cfg), "--set", "model.hidden_nodes=5", "--set", "max_epochs=3"]);
    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("a/config.json")).unwrap()).unwrap();
    assert_eq!(resolved["model"]["hidden_nodes"], 5);
    assert_eq!(resolved["max_epochs"], 3);
}

#[test]
fn pretrain_reconstruct_and_ssl() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let schema = write_schema(d, &[3, 3, 2, 4]);
    let ds = d.join("lin.json");
    ok(&["synth", "linear", "--schema", p(&schema), "--n", "300", "--seed", "1", "--out", p(&ds)]);
    let ae = write_config(
        d,
        "ae.json",
        serde_json::json!({"dataset": ds, "output_dir": d.join("ae"), "max_epochs": 3, "autoencoder": {"hidden_dims": [16]}}),
    );
    ok(&["pretrain-ae", "--config", p(&ae)]);
    let rec = d.join("rec.csv");
    ok(&["reconstruct", "--model", p(&d.join("ae/checkpoint.json")), "--sample", "0", "--out", p(&rec)]);
    let text = std::fs::read_to_string(&rec).unwrap();
    assert!(text.starts_with("dim_index,attribute,level,original,reconstructed"));
    assert_eq!(text.lines().count(), 1 + 12);

    let ssl = write_config(
        d,
        "ssl.json",
        serde_json::json!({"dataset": ds, "output_dir": d.join("ssl"), "max_epochs": 2, "model": {"type": "ssl", "encoder": d.join("ae/checkpoint.json")}}),
    );
    ok(&["train", "--config", p(&ssl)]);
    // SSL models have no linear partworths
    assert_eq!(code(&["partworths", "--model", p(&d.join("ssl/checkpoint.json")), "--out", p(&d.join("x.csv"))]), 2);
}

fn mm_row(resp: &str, user: &str, int: u8, pedped: u8, saved: u8, man: u8) -> String {
    let mut v = vec![resp.to_string(), user.to_string(), int.to_string(), pedped.to_string(), saved.to_string(), "1".into(), "0".into(), man.to_string()];
    v.extend(std::iter::repeat_n("0".to_string(), 19));
    v.join(",")
}

#[test]
fn preprocess_mm_and_car() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut cols = vec!["ResponseID", "UserID", "Intervention", "PedPed", "Saved", "CrossingSignal", "LeftHand"];
    cols.extend([
        "Man", "Woman", "Pregnant", "Stroller", "OldMan", "OldWoman", "Boy", "Girl", "Homeless", "LargeWoman",
        "LargeMan", "Criminal", "MaleExecutive", "FemaleExecutive", "FemaleAthlete", "MaleAthlete", "FemaleDoctor",
        "MaleDoctor", "Dog", "Cat",
    ]);
    let rows = [
        cols.join(","),
        mm_row("r1", "u1", 1, 1, 1, 2),
        mm_row("r1", "u1", 0, 1, 0, 1),
        mm_row("r2", "u2", 1, 1, 0, 1),
        mm_row("r2", "u2", 0, 1, 1, 3),
        mm_row("r3", "u3", 1, 0, 1, 1),
        mm_row("r3", "u3", 0, 0, 0, 1),
    ];
    let raw = d.join("mm.csv");
    std::fs::write(&raw, rows.join("\n") + "\n").unwrap();
    let out = d.join("mm.json");
    ok(&["preprocess", "mm", "--input", p(&raw), "--out", p(&out)]);
    let ds: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(ds["records"].as_array().unwrap().len(), 2);
    let stats: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("mm.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["rows_not_pedped"], 2);
    ok(&["preprocess", "mm", "--input", p(&raw), "--out", p(&d.join("mm1.json")), "--limit", "1"]);

    let car = d.join("exp1.csv");
    std::fs::write(
        &car,
        "user_id,education,age,gender,region,a_body_type,a_transmission,a_engine_capacity,a_fuel_consumed,b_body_type,b_transmission,b_engine_capacity,b_fuel_consumed,chosen\n\
         u1,1,2,1,3,sedan,manual,2.5,hybrid,suv,automatic,3.5,non-hybrid,1\n\
         u2,2,1,2,1,suv,automatic,4.5,hybrid,sedan,manual,2.5,non-hybrid,0\n",
    )
    .unwrap();
    ok(&["preprocess", "car", "--exp1", p(&car), "--out", p(&d.join("car"))]);
    assert!(d.join("car/car_exp1.json").exists());
    assert!(!d.join("car/car_exp2.json").exists());
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let schema = write_schema(d, &[2, 2, 3]);
    let ds = d.join("xor.json");
    ok(&["synth", "xor", "--schema", p(&schema), "--n", "300", "--seed", "2", "--out", p(&ds)]);

    // validation: epoch ceiling
    let bad = write_config(
        d,
        "bad.json",
        serde_json::json!({"dataset": ds, "output_dir": d.join("o"), "model": {"type": "conjoint"}, "max_epochs": 500}),
    );
    assert_eq!(code(&["train", "--config", p(&bad)]), 2);
    assert!(!d.join("o").exists());

    // validation: unknown split name
    let conj = write_config(
        d,
        "c.json",
        serde_json::json!({"dataset": ds, "output_dir": d.join("c"), "model": {"type": "conjoint"}}),
    );
    ok(&["train", "--config", p(&conj)]);
    assert_eq!(code(&["eval", "--model", p(&d.join("c/checkpoint.json")), "--dataset", p(&ds), "--split", "dev"]), 2);

    // data: missing dataset and a corrupt checkpoint
    assert_eq!(code(&["train", "--config", p(&conj), "--dataset", p(&d.join("missing.json"))]), 3);
    std::fs::write(d.join("junk.json"), "{\"format\": \"other\"}").unwrap();
    assert_eq!(code(&["eval", "--model", p(&d.join("junk.json")), "--dataset", p(&ds)]), 3);

    // numeric: a learning rate large enough to overflow the residual path
    let blow = write_config(
        d,
        "n.json",
        serde_json::json!({"dataset": ds, "output_dir": d.join("n"), "model": {"type": "residual", "pairing": "single_vector", "residual_lr_scale": 1.0, "residual_scale": 1.0},
                           "optimizer": "sgd", "learning_rate": 1e300, "max_epochs": 3}),
    );
    assert_eq!(code(&["train", "--config", p(&blow)]), 4);
    assert!(!d.join("n").exists());

    // argument errors from the parser
    assert_eq!(code(&["train"]), 2);
}
