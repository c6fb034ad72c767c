use super::*;
use crate::degrade::{
    add_gaussian_noise, apply_blur, downsample, jpeg_round_trip, DownSpec, GaussianNoiseSpec,
    JpegSpec,
};
use crate::image::{resize, ResizeMethod};
use crate::kernels::BlurSpec;
use crate::rng::seeded;
use crate::synth::natural_image;

fn pool() -> CalibrationPool {
    CalibrationPool::builtin()
}

fn max_diff(a: &ImageF, b: &ImageF) -> f64 {
    assert_eq!((a.dims(), a.channels()), (b.dims(), b.channels()));
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn sampled_plans_are_valid_permutations() {
    let pool = pool();
    for scale in [2, 4] {
        let cfg = DegradationConfig::with_scale(scale);
        let mut rng = seeded(scale as u64);
        for _ in 0..500 {
            let plan = sample_plan(&cfg, &pool, 0, &mut rng).unwrap();
            plan.validate().unwrap();
            let mut order = plan.slot_order();
            order.sort();
            assert_eq!(order, Slot::ALL.to_vec());
            assert_eq!(plan.steps.len(), if plan.is_split() { 7 } else { 6 });
            assert!(
                plan.is_applied(Slot::BlurIso)
                    && plan.is_applied(Slot::BlurAniso)
                    && plan.is_applied(Slot::Gaussian)
            );
            assert!(matches!(plan.final_encode, FinalEncode::Jpeg(_)));
            if plan.pre_scale.is_some() {
                assert_eq!(plan.sequence_scale(), 2);
            }
            if plan.is_split() {
                let a = plan
                    .steps
                    .iter()
                    .position(|s| matches!(s.op, Op::DownStage1(_)))
                    .unwrap();
                let b = plan
                    .steps
                    .iter()
                    .position(|s| matches!(s.op, Op::DownStage2(_)))
                    .unwrap();
                assert!(a < b);
            }
        }
    }
}

#[test]
fn pre_scale_uses_scale_two_ranges() {
    let pool = pool();
    let cfg = DegradationConfig::with_scale(4);
    let mut rng = seeded(77);
    let (mut pre, mut direct) = (0, 0);
    for _ in 0..2000 {
        let plan = sample_plan(&cfg, &pool, 0, &mut rng).unwrap();
        let Op::Blur(BlurSpec::Iso { sigma, .. }) = plan.step(Slot::BlurIso).unwrap().op else {
            panic!()
        };
        if plan.pre_scale.is_some() {
            pre += 1;
            assert!(sigma <= 2.4);
            assert_eq!(plan.down_spec().unwrap().scale(), 2.0);
        } else {
            direct += 1;
            assert_eq!(plan.down_spec().unwrap().scale(), 4.0);
        }
    }
    assert!(pre > 400 && direct > 1300, "{pre} {direct}");
}

#[test]
fn gated_bicubic_plan_is_close_to_plain_bicubic() {
    for (i, hr) in crate::synth::test_corpus(64, 64).iter().enumerate() {
        let mut plan = classic_plan(ClassicKind::Bicubic, 2, None, None, 0).unwrap();
        plan.steps.insert(
            0,
            Step {
                slot: Slot::BlurIso,
                applied: true,
                op: Op::Blur(BlurSpec::Iso {
                    size: 7,
                    sigma: 0.1,
                }),
            },
        );
        plan.steps.push(Step {
            slot: Slot::Gaussian,
            applied: false,
            op: Op::GaussianNoise {
                spec: GaussianNoiseSpec::Gray { sigma: 0.1 },
                seed: 1,
            },
        });
        plan.final_encode = FinalEncode::Jpeg(JpegSpec::new(95));
        let out = execute_plan(hr, &plan, &pool()).unwrap();
        let reference = resize(hr, 32, 32, ResizeMethod::Bicubic, true)
            .unwrap()
            .clamped();
        // Q95 luma error alone is a few levels; compare against the reference codec.
        let mut bytes = Vec::new();
        image::codecs::jpeg::JpegEncoder::new_with_quality(&mut bytes, 95)
            .encode(&reference.to_u8(), 32, 32, image::ExtendedColorType::Rgb8)
            .unwrap();
        let theirs = crate::image::decode_image(&bytes).unwrap();
        let y = |im: &ImageF| crate::image::rgb_to_ycbcr_y(im).unwrap();
        let ours_y = max_diff(&y(&out.lr), &y(&reference));
        let theirs_y = max_diff(&y(&theirs), &y(&reference));
        assert!(
            ours_y <= theirs_y + 1.0 / 255.0,
            "image {i}: {} vs {}",
            ours_y * 255.0,
            theirs_y * 255.0
        );
        assert!(ours_y <= 5.0 / 255.0, "image {i}: {}", ours_y * 255.0);
    }
}

#[test]
fn execution_equals_manual_composition() {
    let hr = natural_image(64, 64, 5);
    let blur = BlurSpec::Iso {
        size: 9,
        sigma: 1.3,
    };
    let down = DownSpec::Bicubic { scale: 2.0 };
    let noise = GaussianNoiseSpec::ChannelIndependent { sigma: 7.0 / 255.0 };
    let plan = DegradationPlan {
        scale: 2,
        pre_scale: None,
        steps: vec![
            Step {
                slot: Slot::BlurIso,
                applied: true,
                op: Op::Blur(blur),
            },
            Step {
                slot: Slot::Down,
                applied: true,
                op: Op::Downsample(down),
            },
            Step {
                slot: Slot::Gaussian,
                applied: true,
                op: Op::GaussianNoise {
                    spec: noise,
                    seed: 99,
                },
            },
        ],
        post_scale: None,
        final_encode: FinalEncode::Jpeg(JpegSpec::new(70)),
        seed: 0,
    };
    let out = execute_plan(&hr, &plan, &pool()).unwrap();

    let x = apply_blur(&hr, &blur).unwrap();
    let x = downsample(&x, &down).unwrap();
    let x = add_gaussian_noise(
        &x,
        &noise,
        &mut crate::rng::substream(99, "op/gaussian-noise", &[]),
    )
    .unwrap();
    let (lr, bytes) = jpeg_round_trip(&x.clamped(), &JpegSpec::new(70)).unwrap();
    assert_eq!(out.lr, lr);
    assert_eq!(out.encoded, bytes);
}

#[test]
fn classic_plans_match_their_definitions() {
    let hr = natural_image(48, 48, 6);
    let bicubic = execute_plan(
        &hr,
        &classic_plan(ClassicKind::Bicubic, 4, None, None, 0).unwrap(),
        &pool(),
    )
    .unwrap();
    let reference = resize(&hr, 12, 12, ResizeMethod::Bicubic, true)
        .unwrap()
        .clamped();
    assert!(max_diff(&bicubic.lr, &reference) <= 1e-12);

    let delta = execute_plan(
        &hr,
        &classic_plan(
            ClassicKind::Traditional,
            2,
            Some(BlurSpec::Iso {
                size: 7,
                sigma: 0.1,
            }),
            Some(0.0),
            3,
        )
        .unwrap(),
        &pool(),
    )
    .unwrap();
    let strided = ImageF::from_fn(24, 24, 3, |r, c, k| hr.get(2 * r, 2 * c, k));
    assert!(max_diff(&delta.lr, &strided) <= 1e-12);

    let kernel = BlurSpec::Iso {
        size: 7,
        sigma: 1.2,
    };
    let sigma = 5.0 / 255.0;
    let plan = classic_plan(ClassicKind::Traditional, 2, Some(kernel), Some(sigma), 11).unwrap();
    let out = execute_plan(&hr, &plan, &pool()).unwrap();
    let x = apply_blur(&hr, &kernel).unwrap();
    let x = downsample(&x, &DownSpec::Stride { scale: 2.0 }).unwrap();
    let x = add_gaussian_noise(
        &x,
        &GaussianNoiseSpec::ChannelIndependent { sigma },
        &mut crate::rng::substream(11, "op/gaussian-noise", &[]),
    )
    .unwrap();
    assert_eq!(out.lr, x.clamped());
}

#[test]
fn degrade_is_deterministic_and_replayable() {
    let source = natural_image(70, 90, 8);
    let pool = pool();
    let mut cfg = DegradationConfig::with_scale(2);
    cfg.sensor_prob = 1.0;
    let a = degrade(&source, &cfg, 42, &pool).unwrap();
    let b = degrade(&source, &cfg, 42, &pool).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lr.dims(), (64 / 2, 88 / 2));
    assert_eq!(
        a.manifest.input.crop,
        Some(CropRect {
            top: 3,
            left: 1,
            height: 64,
            width: 88
        })
    );
    assert!(a.manifest.plan.is_applied(Slot::Sensor));

    let text = a.manifest.to_json();
    let parsed = Manifest::from_json(&text).unwrap();
    assert_eq!(parsed, a.manifest);
    assert_eq!(parsed.to_json(), text);
    let replayed = parsed.replay(&source, &pool).unwrap();
    assert_eq!(replayed.encoded, a.encoded);
    assert_eq!(replayed.manifest, a.manifest);
}

#[test]
fn different_seeds_give_different_manifests() {
    let source = natural_image(64, 64, 9);
    let pool = pool();
    let cfg = DegradationConfig::with_scale(2);
    let mut cfg_fast = cfg.clone();
    cfg_fast.enable_sensor = false;
    for seed in 0..100u64 {
        let a = degrade(&source, &cfg_fast, 2 * seed, &pool).unwrap();
        let b = degrade(&source, &cfg_fast, 2 * seed + 1, &pool).unwrap();
        assert_ne!(a.manifest.plan, b.manifest.plan);
    }
}

#[test]
fn minimal_config_reduces_to_bicubic() {
    let source = natural_image(64, 64, 10);
    let cfg = DegradationConfig {
        scale: 2,
        enable_iso_blur: false,
        enable_aniso_blur: false,
        downsamplers: vec![DownMethod::Bicubic],
        enable_gaussian: false,
        enable_inner_jpeg: false,
        enable_sensor: false,
        enable_final_jpeg: false,
        ..DegradationConfig::default()
    };
    let out = degrade(&source, &cfg, 1, &pool()).unwrap();
    let reference = resize(&source, 32, 32, ResizeMethod::Bicubic, true)
        .unwrap()
        .clamped();
    assert_eq!(out.lr, reference);
    assert_eq!(out.manifest.lr_format, LrFormat::Png);
}

#[test]
fn size_violations_fail_before_work() {
    let plan = classic_plan(ClassicKind::Bicubic, 4, None, None, 0).unwrap();
    assert!(execute_plan(&natural_image(30, 32, 1), &plan, &pool()).is_err());
    assert!(execute_plan(&ImageF::new(32, 32, 1), &plan, &pool()).is_err());
    let big_blur = classic_plan(
        ClassicKind::Traditional,
        2,
        Some(BlurSpec::Iso {
            size: 21,
            sigma: 2.0,
        }),
        None,
        0,
    )
    .unwrap();
    assert!(execute_plan(&natural_image(8, 8, 1), &big_blur, &pool()).is_err());
}

#[test]
fn replay_checks_schema_pool_and_input() {
    let source = natural_image(64, 64, 12);
    let pool = pool();
    let mut cfg = DegradationConfig::with_scale(2);
    cfg.sensor_prob = 1.0;
    let out = degrade(&source, &cfg, 5, &pool).unwrap();
    let text = out
        .manifest
        .to_json()
        .replace("\"schema_version\": 1", "\"schema_version\": 9");
    let err = Manifest::from_json(&text).unwrap_err().to_string();
    assert!(err.contains('9') && err.contains('1'), "{err}");
    assert!(Manifest::from_json(&out.manifest.to_json()[..100]).is_err());
    assert!(out
        .manifest
        .replay(&natural_image(64, 64, 13), &pool)
        .is_err());

    let mut other = pool.clone();
    other.entries[0].name.push('x');
    assert!(out.manifest.replay(&source, &other).is_err());
}

#[test]
fn tampered_manifest_changes_output_without_error() {
    let source = natural_image(64, 64, 14);
    let pool = pool();
    let mut cfg = DegradationConfig::with_scale(2);
    cfg.enable_sensor = false;
    let out = degrade(&source, &cfg, 6, &pool).unwrap();
    let mut m = out.manifest.clone();
    for step in &mut m.plan.steps {
        if let Op::GaussianNoise { spec, .. } = &mut step.op {
            *spec = GaussianNoiseSpec::Gray {
                sigma: 20.0 / 255.0,
            };
        }
    }
    let replayed = m.replay(&source, &pool).unwrap();
    assert_ne!(replayed.encoded, out.encoded);
}

#[test]
fn sampler_matches_sample_plan() {
    let cfg = DegradationConfig::default();
    let pool = CalibrationPool::builtin();
    let sampler = PlanSampler::new(&cfg, &pool).unwrap();
    let (mut a, mut b) = (seeded(9), seeded(9));
    for i in 0..50 {
        assert_eq!(
            sampler.sample(i, &mut a).unwrap(),
            sample_plan(&cfg, &pool, i, &mut b).unwrap()
        );
    }
}
