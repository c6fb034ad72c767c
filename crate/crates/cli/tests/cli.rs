use std::path::Path;
use std::process::{Command, Output};

use degrade_forge::image::write_png;
use degrade_forge::synth::natural_image;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degrade-forge"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus(n: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..n {
        write_png(
            dir.path().join(format!("p{i}.png")),
            &natural_image(80, 96, i as u64),
        )
        .unwrap();
    }
    dir
}

#[test]
fn gen_then_replay_reproduces_lr() {
    let input = corpus(2);
    let out = tempfile::tempdir().unwrap();
    let res = run(&[
        "gen",
        "--in",
        path(input.path()),
        "--out",
        path(out.path()),
        "--seed",
        "7",
        "--variants",
        "2",
        "--workers",
        "2",
        "--blur-threshold",
        "0",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let manifest = out.path().join("manifests/p1_1.json");
    let replayed = out.path().join("replayed.jpg");
    let res = run(&[
        "replay",
        "--manifest",
        path(&manifest),
        "--hr",
        path(&input.path().join("p1.png")),
        "--out",
        path(&replayed),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert_eq!(
        std::fs::read(replayed).unwrap(),
        std::fs::read(out.path().join("LR/p1_1.jpg")).unwrap()
    );
}

#[test]
fn empty_input_succeeds() {
    let (input, out) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(
        run(&["gen", "--in", path(input.path()), "--out", path(out.path())])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn bad_arguments_exit_two() {
    let (input, out) = (corpus(1), tempfile::tempdir().unwrap());
    let args = ["gen", "--in", path(input.path()), "--out", path(out.path())];
    assert_eq!(
        run(&[&args[..], &["--scale", "3"]].concat()).status.code(),
        Some(2)
    );
    let cfg = out.path().join("bad.toml");
    std::fs::write(&cfg, "scale = 5\n").unwrap();
    assert_eq!(
        run(&[&args[..], &["--config", path(&cfg)]].concat())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["testset", "--kind", "5", "--in", "x", "--out", "y"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn job_errors_exit_one() {
    let out = tempfile::tempdir().unwrap();
    let res = run(&[
        "gen",
        "--in",
        path(&out.path().join("missing")),
        "--out",
        path(out.path()),
    ]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn testset_psnr_and_preview() {
    let input = corpus(2);
    let out = tempfile::tempdir().unwrap();
    let res = run(&[
        "testset",
        "--kind",
        "1",
        "--in",
        path(input.path()),
        "--out",
        path(out.path()),
    ]);
    assert!(res.status.success());
    let res = run(&[
        "psnr",
        "--ref",
        path(&out.path().join("HR")),
        "--dist",
        path(&out.path().join("HR")),
    ]);
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.lines().any(|l| l == "p0_0\tinf"), "{text}");

    let sheet = out.path().join("sheet.png");
    let res = run(&[
        "preview",
        "--in",
        path(&input.path().join("p0.png")),
        "--seed",
        "3",
        "--out",
        path(&sheet),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let img = degrade_forge::image::read_image(&sheet).unwrap();
    assert_eq!(img.dims(), (80, 192));
}
