use std::collections::BTreeMap;
use std::path::Path;

use super::*;
use crate::image::{convolve_reflect, resize, write_png, Kernel2D, ResizeMethod};
use crate::pipeline::{FinalEncode, LrFormat, Manifest};
use crate::synth::natural_image;

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn input_dir(n: usize, size: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..n {
        write_png(
            dir.path().join(format!("img{i}.png")),
            &natural_image(size, size + 8, 50 + i as u64),
        )
        .unwrap();
    }
    dir
}

#[test]
fn empty_input_warns() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let summary = generate_pairs(&DatasetJob::new(
        input.path(),
        out.path(),
        DegradationConfig::default(),
        1,
    ))
    .unwrap();
    assert_eq!(summary.processed, 0);
    assert!(summary.has_warnings());
}

#[test]
fn pairs_are_complete_and_deterministic() {
    let input = input_dir(3, 96);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut job = DatasetJob::new(input.path(), a.path(), DegradationConfig::default(), 11);
    job.variants = 2;
    job.laplacian_threshold = 0.0;
    let summary = generate_pairs(&job).unwrap();
    assert_eq!((summary.processed, summary.pairs_written), (3, 6));
    job.output_dir = b.path().to_path_buf();
    job.workers = 4;
    generate_pairs(&job).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta, tb);
    for sub in ["HR", "LR", "manifests"] {
        assert_eq!(
            ta.keys()
                .filter(|k| k.starts_with(&format!("{sub}/")))
                .count(),
            6,
            "{sub}"
        );
    }

    let pool = CalibrationPool::builtin();
    for (name, bytes) in ta.iter().filter(|(k, _)| k.starts_with("manifests/")) {
        let m = Manifest::from_json(std::str::from_utf8(bytes).unwrap()).unwrap();
        let source = read_image(input.path().join(m.input.path.as_deref().unwrap())).unwrap();
        let replayed = m.replay(&source, &pool).unwrap();
        let stem = name
            .trim_start_matches("manifests/")
            .trim_end_matches(".json");
        assert_eq!(
            ta[&format!("LR/{stem}.{}", m.lr_format.extension())],
            replayed.encoded
        );
        assert_eq!(m.lr_format, LrFormat::Jpeg);
    }
}

#[test]
fn blurry_copy_is_rejected() {
    let input = tempfile::tempdir().unwrap();
    let sharp = natural_image(96, 96, 8).map(|v| (v * 255.0).round() / 255.0);
    let blurred =
        convolve_reflect(&sharp, &Kernel2D::normalized(3, 3, vec![1.0; 9]).unwrap()).unwrap();
    write_png(input.path().join("a_sharp.png"), &sharp).unwrap();
    write_png(input.path().join("b_blurred.png"), &blurred).unwrap();

    // Oracle: variance of the 4-neighbour response on the decoded luma, interior only.
    let lap_var = |path: &Path| {
        let img = read_image(path).unwrap();
        let (h, w) = img.dims();
        let y = |r: usize, c: usize| {
            let p = img.pixel(r, c);
            65.481 * p[0] / 255.0 + 128.553 * p[1] / 255.0 + 24.966 * p[2] / 255.0
        };
        let v: Vec<f64> = (1..h - 1)
            .flat_map(|r| (1..w - 1).map(move |c| (r, c)))
            .map(|(r, c)| y(r - 1, c) + y(r + 1, c) + y(r, c - 1) + y(r, c + 1) - 4.0 * y(r, c))
            .collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
    };
    let (hi, lo) = (
        lap_var(&input.path().join("a_sharp.png")),
        lap_var(&input.path().join("b_blurred.png")),
    );
    assert!(hi > 1.5 * lo);

    let out = tempfile::tempdir().unwrap();
    let mut job = DatasetJob::new(input.path(), out.path(), DegradationConfig::default(), 3);
    job.laplacian_threshold = (hi * lo).sqrt();
    let summary = generate_pairs(&job).unwrap();
    assert_eq!(summary.rejected_blurry, vec!["b_blurred.png".to_string()]);
    assert_eq!(summary.processed, 1);
}

#[test]
fn unreadable_file_is_skipped() {
    let input = input_dir(1, 64);
    std::fs::write(input.path().join("broken.png"), b"not an image").unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut job = DatasetJob::new(input.path(), out.path(), DegradationConfig::default(), 3);
    job.laplacian_threshold = 0.0;
    let summary = generate_pairs(&job).unwrap();
    assert_eq!(summary.skipped, vec!["broken.png".to_string()]);
    assert_eq!(summary.processed, 1);
}

#[test]
fn patches_are_written() {
    let input = input_dir(1, 320);
    let out = tempfile::tempdir().unwrap();
    let mut job = DatasetJob::new(input.path(), out.path(), DegradationConfig::default(), 5);
    job.laplacian_threshold = 0.0;
    job.patches = Some(PatchSettings { per_item: 2 });
    let summary = generate_pairs(&job).unwrap();
    assert_eq!(summary.patches_written, 2);
    let hr = read_image(out.path().join("patches/HR/img0_0_1.png")).unwrap();
    let lr = read_image(out.path().join("patches/LR/img0_0_1.png")).unwrap();
    assert_eq!((hr.dims(), lr.dims()), ((288, 288), (72, 72)));
}

#[test]
fn testset_types_have_their_definitions() {
    let hr = natural_image(96, 112, 4);
    let pool = CalibrationPool::builtin();
    let cfg = DegradationConfig::default();

    let one = TestsetKind::I.degrade(&hr, 1, &cfg, &pool).unwrap();
    let reference = resize(&hr, 24, 28, ResizeMethod::Bicubic, true).unwrap();
    let d = one
        .lr
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(d <= 1e-12);
    assert_eq!(one.manifest.lr_format, LrFormat::Png);

    let two = TestsetKind::II.degrade(&hr, 1, &cfg, &pool).unwrap();
    assert_eq!(two.lr.dims(), (24, 28));
    assert_eq!(two.manifest.lr_format, LrFormat::Png);

    for seed in 0..40 {
        let three = TestsetKind::III.degrade(&hr, seed, &cfg, &pool).unwrap();
        assert_eq!(three.lr.dims(), (24, 28));
        let FinalEncode::Jpeg(j) = three.manifest.plan.final_encode else {
            panic!("type III ends in JPEG")
        };
        assert!((41..=90).contains(&j.quality));
        assert_eq!(three.manifest.plan.post_scale, Some(ResizeMethod::Bicubic));
    }

    let four = TestsetKind::IV
        .degrade(&hr, 1, &DegradationConfig::with_scale(2), &pool)
        .unwrap();
    assert_eq!(four.lr.dims(), (24, 28));
}

#[test]
fn testset_writes_every_image() {
    let input = input_dir(2, 64);
    let out = tempfile::tempdir().unwrap();
    let summary = make_testset(
        TestsetKind::III,
        input.path(),
        out.path(),
        9,
        &DegradationConfig::default(),
        2,
    )
    .unwrap();
    assert_eq!(summary.pairs_written, 2);
    let lr = read_image(out.path().join("LR/img1_0.jpg")).unwrap();
    assert_eq!(lr.dims(), (16, 16));
}
