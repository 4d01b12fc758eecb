use std::f64::consts::TAU;
use std::path::Path;

use binaural_sim::geometry::Point3;
use binaural_sim::io::{
    decode_depth, encode_depth, load_config, parse_boxes, parse_poses, parse_trajectory, read_depth, read_poses,
    read_trajectory, read_wav, write_depth, write_poses, write_trajectory, write_wav, DepthMap, IoError, SceneConfig,
    WavEncoding,
};
use binaural_sim::localization::{BoxEntry, Trajectory};
use binaural_sim::{AudioBuffer, CameraPose, PoseConvention, RoomCategory};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn float_wav_roundtrip(left in prop::collection::vec(-1.0..1.0f32, 1..500), stereo in any::<bool>(), rate_idx in 0usize..3) {
        let rate = [16000, 44100, 48000][rate_idx];
        let l: Vec<f64> = left.iter().map(|&x| f64::from(x)).collect();
        let audio = if stereo {
            let r: Vec<f64> = l.iter().rev().copied().collect();
            AudioBuffer::stereo(l, r, rate).unwrap()
        } else {
            AudioBuffer::mono(l, rate).unwrap()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        write_wav(&path, &audio, WavEncoding::Float32).unwrap();
        prop_assert_eq!(read_wav(&path).unwrap(), audio);
    }

    #[test]
    fn depth_roundtrip(w in 1usize..40, h in 1usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f32> = (0..w * h).map(|_| f32::from_bits(rng.gen::<u32>() & 0x7f7f_ffff)).collect();
        let map = DepthMap::new(w, h, values).unwrap();
        let bytes = encode_depth(&map);
        let header = format!("DEPTH {} {}\n", w, h);
        prop_assert!(bytes.starts_with(header.as_bytes()));
        let back = decode_depth(&bytes).unwrap();
        prop_assert_eq!(back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        map.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn trajectory_roundtrip(pts in prop::collection::vec([-1e4..1e4f64, -1e4..1e4f64, -1e4..1e4f64], 1..60)) {
        let traj = Trajectory::from_frames(pts.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory(&path, &traj).unwrap();
        prop_assert_eq!(read_trajectory(&path).unwrap(), traj);
    }
}

#[test]
fn fifty_random_poses_roundtrip_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let poses: Vec<CameraPose> = (0..50)
        .map(|_| {
            let rot = Rotation3::from_euler_angles(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let t = Vector3::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
            CameraPose::new(*rot.matrix(), t, PoseConvention::WorldToCamera)
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("poses.txt");
    write_poses(&path, &poses).unwrap();
    let back = read_poses(&path).unwrap();
    assert_eq!(back.convention, PoseConvention::WorldToCamera);
    let worst = poses
        .iter()
        .zip(&back.poses)
        .flat_map(|(a, b)| {
            let r = (a.rotation - b.rotation).abs().max();
            let t = (a.translation - b.translation).abs().max();
            [r, t]
        })
        .fold(0.0f64, f64::max);
    assert_eq!(worst, 0.0);
}

#[test]
fn sine_survives_pcm16() {
    let amp = 0.8;
    let samples: Vec<f64> = (0..44100).map(|i| amp * (TAU * 440.0 * i as f64 / 44100.0).sin()).collect();
    let audio = AudioBuffer::mono(samples, 44100).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sine.wav");
    write_wav(&path, &audio, WavEncoding::Pcm16).unwrap();
    let back = read_wav(&path).unwrap();
    assert_eq!(back.len(), 44100);
    let lsb = 1.0 / 32768.0;
    assert!((back.peak() - amp).abs() <= lsb);
    for (a, b) in audio.channel(0).iter().zip(back.channel(0)) {
        assert!((a - b).abs() <= 0.5 * lsb + 1e-12);
    }
}

#[test]
fn pcm16_full_scale() {
    let audio = AudioBuffer::mono(vec![-1.0, 1.0, 0.0], 16000).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fs.wav");
    write_wav(&path, &audio, WavEncoding::Pcm16).unwrap();
    assert_eq!(read_wav(&path).unwrap().channel(0), &[-1.0, 32767.0 / 32768.0, 0.0]);
}

#[test]
fn depth_file_errors() {
    let mut bytes = b"DEPTH 2 1\n".to_vec();
    bytes.extend_from_slice(&1.5f32.to_le_bytes());
    bytes.extend_from_slice(&f32::NAN.to_le_bytes());
    let map = decode_depth(&bytes).unwrap();
    assert_eq!((map.width, map.height), (2, 1));
    assert_eq!(map.get(0, 0), 1.5);
    assert!(map.get(1, 0).is_nan());
    assert!(matches!(decode_depth(&bytes[..bytes.len() - 1]), Err(IoError::TruncatedPayload { .. })));
    assert!(matches!(decode_depth(b"DEPTHS 2 1\n"), Err(IoError::HeaderMismatch(_))));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("0.depth");
    write_depth(&path, &map).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
    assert_eq!(read_depth(&path).unwrap().get(0, 0), 1.5);
}

#[test]
fn text_parsers_reject_bad_lines() {
    let boxes = parse_boxes("0,0.25,0.25,0.75,0.75\n1,0.1,0.1,0.2,0.2\n\n3,0.1,0.1,0.2,0.2\n").unwrap();
    assert_eq!(boxes.len(), 4);
    assert_eq!(boxes[2], BoxEntry::Missing { frame_index: 2 });
    assert!(matches!(parse_boxes("0,0.8,0.2,0.3,0.9\n"), Err(IoError::MalformedLine { line: 1, .. })));
    assert!(matches!(parse_boxes("0,0.1,0.1\n"), Err(IoError::MalformedLine { line: 1, .. })));

    assert!(matches!(parse_trajectory("0,1,2,3\n0,1,2,3\n"), Err(IoError::NonMonotoneIndex { line: 2 })));
    assert!(matches!(parse_trajectory("0,1,2\n"), Err(IoError::MalformedLine { line: 1, .. })));
    assert_eq!(parse_trajectory("0,1,2,3\n1,4,5,6\n").unwrap().len(), 2);

    let identity = "1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1";
    let ok = parse_poses(&format!("camera_to_world\n{identity}\n")).unwrap();
    assert_eq!(ok.convention, PoseConvention::CameraToWorld);
    assert_eq!(ok.poses[0].center(), Point3::zeros());
    let bad_row = "1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 2";
    assert!(matches!(
        parse_poses(&format!("world_to_camera\n{identity}\n{bad_row}\n")),
        Err(IoError::BadBottomRow { line: 3 })
    ));
    let skewed = "1 0.1 0 0 0 1 0 0 0 0 1 0 0 0 0 1";
    assert!(matches!(
        parse_poses(&format!("world_to_camera\n{skewed}\n")),
        Err(IoError::InvalidRotation { line: 2, .. })
    ));
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn config_defaults_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.wav", "");
    write(dir.path(), "scene.toml", "[inputs]\naudio = \"a.wav\"\n");
    let cfg = load_config(&dir.path().join("scene.toml")).unwrap();
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.room.category, RoomCategory::Medium);
    assert_eq!(cfg.render.sample_rate, 44100);
    assert_eq!(cfg.render.effective_segment_len(), 1470);
    assert_eq!(cfg.localization.patch_r, 5);
    assert_eq!(cfg.inputs.audio, Some(dir.path().join("a.wav")));

    let parse = |s: &str| SceneConfig::from_toml_str(s, Path::new("."));
    assert!(matches!(parse("[render]\nsample_rat = 16000\n"), Err(IoError::UnknownKey(k)) if k == "render.sample_rat"));
    assert!(matches!(parse("[room]\nt60 = 0.9\nstrict_paper_ranges = true\n"), Err(IoError::RangeViolation(_))));
    assert!(parse("[room]\nt60 = 0.9\n").is_ok());
    assert!(matches!(parse("[render]\nsample_rate = 22050\n"), Err(IoError::RangeViolation(_))));

    write(dir.path(), "missing.toml", "[inputs]\naudio = \"nope.wav\"\n");
    assert!(matches!(load_config(&dir.path().join("missing.toml")), Err(IoError::MissingInput(_))));
}
