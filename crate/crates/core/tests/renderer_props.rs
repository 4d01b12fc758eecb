mod common;

use binaural_sim::geometry::Point3;
use binaural_sim::localization::Trajectory;
use binaural_sim::renderer::{block_convolve_add, normalize, render_binaural, RenderError};
use binaural_sim::{AudioBuffer, CameraPose, RenderConfig, RoomCategory, RoomSpec};
use common::{direct_convolution, relative_error, white_noise};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FS: u32 = 16000;

fn room() -> RoomSpec {
    RoomSpec::new(RoomCategory::Explicit, [5.0, 3.0, 6.0], 0.2).unwrap()
}

fn moving_scene() -> (Trajectory, Vec<CameraPose>) {
    let src = Trajectory::from_frames(vec![
        Point3::new(1.0, 1.5, 4.5),
        Point3::new(2.5, 1.2, 5.0),
        Point3::new(4.0, 1.6, 4.2),
    ])
    .unwrap();
    let poses = vec![
        CameraPose::identity().with_center(Point3::new(2.5, 1.5, 1.0)),
        CameraPose::identity().with_center(Point3::new(2.7, 1.5, 1.2)),
    ];
    (src, poses)
}

fn cfg(segment_len: usize) -> RenderConfig {
    RenderConfig {
        sample_rate: FS,
        segment_len: Some(segment_len),
        normalize: false,
        ..RenderConfig::default()
    }
}

fn noise(seed: u64, n: usize) -> AudioBuffer {
    AudioBuffer::mono(white_noise(&mut ChaCha8Rng::seed_from_u64(seed), n), FS).unwrap()
}

fn argmax(x: &[f64]) -> usize {
    x.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
        .0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn block_convolution_matches_direct(block in prop::collection::vec(-1.0..1.0f64, 1..300),
                                        rir in prop::collection::vec(-1.0..1.0f64, 1..700),
                                        offset in 0usize..50) {
        let mut acc = vec![0.5; offset + block.len() + rir.len() - 1];
        block_convolve_add(&block, &rir, offset, &mut acc).unwrap();
        let shifted: Vec<f64> = acc[offset..].iter().map(|x| x - 0.5).collect();
        prop_assert!(relative_error(&shifted, &direct_convolution(&block, &rir)) < 1e-9);
        prop_assert!(acc[..offset].iter().all(|&x| x == 0.5));
    }

    #[test]
    fn rendering_is_linear(seed in any::<u64>(), alpha in 0.01..50.0f64) {
        let (src, poses) = moving_scene();
        let mono = noise(seed, 3000);
        let a = render_binaural(&mono, &src, &poses, &room(), &cfg(512)).unwrap();
        let b = render_binaural(&mono.scaled(alpha), &src, &poses, &room(), &cfg(512)).unwrap();
        for c in 0..2 {
            let scaled: Vec<f64> = a.channel(c).iter().map(|x| x * alpha).collect();
            prop_assert!(relative_error(b.channel(c), &scaled) < 1e-12);
            prop_assert_eq!(argmax(a.channel(c)), argmax(b.channel(c)));
        }
    }

    #[test]
    fn static_scene_ignores_segmentation(seed in any::<u64>(), seg_a in 64usize..900, seg_b in 64usize..900) {
        let src = Trajectory::stationary(Point3::new(3.3, 1.1, 4.4), 3).unwrap();
        let poses = vec![CameraPose::identity().with_center(Point3::new(1.7, 1.4, 1.5)); 3];
        let mono = noise(seed, 2500);
        let a = render_binaural(&mono, &src, &poses, &room(), &cfg(seg_a)).unwrap();
        let b = render_binaural(&mono, &src, &poses, &room(), &cfg(seg_b)).unwrap();
        for c in 0..2 {
            for (x, y) in a.channel(c).iter().zip(b.channel(c)) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn output_matches_input_length_and_is_normalized() {
    let (src, poses) = moving_scene();
    let mono = noise(1, 4321);
    let mut c = cfg(300);
    c.normalize = true;
    let out = render_binaural(&mono, &src, &poses, &room(), &c).unwrap();
    assert_eq!(out.len(), 4321);
    assert_eq!(out.channel_count(), 2);
    assert_eq!(out.peak(), 1.0);
    assert_eq!(normalize(&out), out);
}

#[test]
fn crossfade_changes_only_moving_scenes() {
    let (src, poses) = moving_scene();
    let mono = noise(2, 3000);
    let plain = render_binaural(&mono, &src, &poses, &room(), &cfg(256)).unwrap();
    let mut c = cfg(256);
    c.crossfade = true;
    let faded = render_binaural(&mono, &src, &poses, &room(), &c).unwrap();
    assert_ne!(plain, faded);
    assert_eq!(faded.len(), plain.len());
}

#[test]
fn rejects_bad_inputs() {
    let (src, poses) = moving_scene();
    let stereo = AudioBuffer::stereo(vec![0.1; 100], vec![0.1; 100], FS).unwrap();
    assert!(matches!(
        render_binaural(&stereo, &src, &poses, &room(), &cfg(64)),
        Err(RenderError::NotMono(2))
    ));
    let wrong_rate = AudioBuffer::mono(vec![0.1; 100], 44100).unwrap();
    assert!(matches!(
        render_binaural(&wrong_rate, &src, &poses, &room(), &cfg(64)),
        Err(RenderError::SampleRateMismatch { .. })
    ));
    assert!(matches!(
        render_binaural(&noise(3, 100), &src, &poses, &room(), &cfg(32)),
        Err(RenderError::InvalidConfig(_))
    ));
    let mut acc = vec![0.0; 10];
    assert!(matches!(
        block_convolve_add(&[1.0; 5], &[1.0; 5], 2, &mut acc),
        Err(RenderError::AccumulatorTooShort { need: 11, have: 10 })
    ));
    let outside = Trajectory::stationary(Point3::new(9.0, 1.0, 1.0), 1).unwrap();
    assert!(matches!(
        render_binaural(&noise(3, 200), &outside, &poses, &room(), &cfg(64)),
        Err(RenderError::Acoustics(_))
    ));
}
