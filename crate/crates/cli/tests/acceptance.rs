//! Acceptance: rerunning every subcommand on fixture inputs yields
//! byte-identical artifacts and stdout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use artimap_core::{synthetic, Image};

fn run_ok(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_artimap"))
        .args(args)
        .output()
        .expect("spawn artimap");
    assert!(
        out.status.success(),
        "artimap {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// Map of relative path -> file bytes, recursively.
fn dir_contents(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn assert_identical_dirs(a: &Path, b: &Path, what: &str) {
    let ca = dir_contents(a);
    let cb = dir_contents(b);
    let names_a: Vec<&String> = ca.keys().collect();
    let names_b: Vec<&String> = cb.keys().collect();
    assert_eq!(names_a, names_b, "{what}: file sets differ");
    for (name, bytes) in &ca {
        assert_eq!(bytes, &cb[name], "{what}: {name} differs between reruns");
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixtures {
    _dir: tempfile::TempDir,
    root: PathBuf,
    hr: PathBuf,
    sr: PathBuf,
    sr2: PathBuf,
    frames: PathBuf,
}

fn fixtures() -> Fixtures {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let hr_img = synthetic::checker_ramp(32, 32);
    let sr_img = artimap_core::blurred_start(&hr_img).unwrap();
    let sr2_img = sr_img.resize_bicubic(0.5).unwrap().resize_bicubic(2.0).unwrap();
    let hr = root.join("hr.png");
    let sr = root.join("sr.png");
    let sr2 = root.join("sr2.png");
    hr_img.save_png(&hr).unwrap();
    sr_img.save_png(&sr).unwrap();
    sr2_img.save_png(&sr2).unwrap();

    let frames = root.join("frames");
    std::fs::create_dir(&frames).unwrap();
    for (i, img) in [&hr_img, &sr_img, &sr2_img].iter().enumerate() {
        img.save_png(frames.join(format!("f{i:02}.png"))).unwrap();
    }
    Fixtures { _dir: dir, root, hr, sr, sr2, frames }
}

#[test]
fn acceptance_08_every_subcommand_is_deterministic() {
    let f = fixtures();
    let mut checked = Vec::new();

    // map (with refinement)
    let (d1, d2) = (f.root.join("map1"), f.root.join("map2"));
    let map_args = |out: &Path| {
        vec![
            "map".into(),
            "--hr".into(), s(&f.hr).to_owned(),
            "--sr".into(), s(&f.sr).to_owned(),
            "--sr2".into(), s(&f.sr2).to_owned(),
            "--out-dir".into(), s(out).to_owned(),
        ]
    };
    let args1: Vec<String> = map_args(&d1);
    let args2: Vec<String> = map_args(&d2);
    let out1 = run_ok(&args1.iter().map(String::as_str).collect::<Vec<_>>());
    let out2 = run_ok(&args2.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out1, out2, "map: stdout differs");
    assert_identical_dirs(&d1, &d2, "map");
    checked.push("map");

    // loss / metrics / classify print JSON to stdout
    for args in [
        vec!["loss", "--hr", s(&f.hr), "--sr", s(&f.sr), "--sr2", s(&f.sr2)],
        vec!["metrics", "--a", s(&f.hr), "--b", s(&f.sr)],
        vec!["classify", "--hr", s(&f.hr), "--sr", s(&f.sr)],
    ] {
        let first = run_ok(&args);
        let second = run_ok(&args);
        assert_eq!(first, second, "{}: stdout differs", args[0]);
        checked.push(args[0]);
    }

    // degrade, both modes
    for mode in ["bicubic4", "avgpool2"] {
        let p1 = f.root.join(format!("deg1_{mode}.png"));
        let p2 = f.root.join(format!("deg2_{mode}.png"));
        run_ok(&["degrade", "--in", s(&f.hr), "--out", s(&p1), "--mode", mode]);
        run_ok(&["degrade", "--in", s(&f.hr), "--out", s(&p2), "--mode", mode]);
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap(),
            "degrade {mode} differs"
        );
    }
    checked.push("degrade");

    // stability
    let c1 = f.root.join("series1.csv");
    let c2 = f.root.join("series2.csv");
    run_ok(&["stability", "--frames", s(&f.frames), "--gap", "1", "--out", s(&c1)]);
    run_ok(&["stability", "--frames", s(&f.frames), "--gap", "1", "--out", s(&c2)]);
    assert_eq!(std::fs::read(&c1).unwrap(), std::fs::read(&c2).unwrap());
    checked.push("stability");

    // demo (seeded, runs its two configurations in parallel)
    let (e1, e2) = (f.root.join("demo1"), f.root.join("demo2"));
    for out in [&e1, &e2] {
        run_ok(&[
            "demo",
            "--hr", s(&f.hr),
            "--out-dir", s(out),
            "--iters", "30",
            "--log-every", "10",
            "--seed", "11",
        ]);
    }
    assert_identical_dirs(&e1, &e2, "demo");
    checked.push("demo");

    println!(
        "[PASS] 8 CLI determinism: byte-identical artifacts for {}",
        checked.join(", ")
    );
}

/// PNG fidelity check on the fixture pair: an image survives a save/load
/// round trip to within the 8-bit quantization bound.
#[test]
fn png_round_trip_holds_for_fixtures() {
    let f = fixtures();
    let img = synthetic::checker_ramp(32, 32);
    let back = Image::load_png(&f.hr).unwrap();
    let max_err = img
        .data()
        .iter()
        .zip(back.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max_err <= 1.0 / 510.0 + 1e-12);
}
