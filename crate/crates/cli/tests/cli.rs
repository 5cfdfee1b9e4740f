use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tcfree"))
}

fn scene(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/scenes").join(name)
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    eprintln!("{}", String::from_utf8_lossy(&out.stdout));
    eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn help_lists_subcommands_and_defaults() {
    let out = run(bin().arg("--help"));
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["certify", "grow", "seed", "raster", "verify"] {
        assert!(text.contains(sub), "{sub}");
    }
    let out = run(bin().args(["grow", "--help"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[default: 0.02]") && text.contains("[default: 100]"));
}

#[test]
fn grow_verify_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("grow").arg(scene("pendulum_on_rail.toml")).args(["--max-iters", "2", "-o"]).arg(dir.path()));
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("largest Gram block"));
    let bundle = dir.path().join("region_0.json");
    for f in ["volume.csv", "volume.svg", "regions.svg", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(run(bin().arg("verify").arg(&bundle)).status.success());

    let text = std::fs::read_to_string(&bundle).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let d = &mut json["polytope"]["d"][0][0];
    *d = serde_json::json!(d.as_f64().unwrap() + 1.0);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, json.to_string()).unwrap();
    let out = run(bin().arg("verify").arg(&tampered));
    assert_eq!(out.status.code(), Some(1));

    let out = run(bin().arg("certify").arg(scene("pendulum_on_rail.toml")).arg(&bundle));
    assert!(out.status.success());
}

#[test]
fn failing_seed_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("grow").arg(scene("pendulum_on_rail.toml")).args(["5,0", "--max-iters", "1", "-o"]).arg(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("outside the joint limits"));
}

#[test]
fn raster_writes_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("raster").arg(scene("flipper.toml")).args(["--resolution", "40", "-o"]).arg(dir.path()));
    assert!(out.status.success());
    assert!(dir.path().join("raster.svg").exists());
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("raster.json")).unwrap()).unwrap();
    assert_eq!(r["collision"].as_array().unwrap().len(), 1600);
}

#[test]
fn bad_scene_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"x\"\n\n[[joints]]\nname = \"j\"\nkind = \"revolute\"\nparent = \"nowhere\"\nchild = \"a\"\nlimits = [-1.0, 1.0]\n").unwrap();
    let out = run(bin().arg("raster").arg(&path));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 3, joints[0].parent"));
}
