use stc_core::synth::*;

#[test]
fn zoom_ramp_widths_follow_scale_ratio() {
    let mut spec = SynthSpec::new(
        Dims { height: 240, width: 320 },
        Dims { height: 40, width: 40 },
        vec![(160.0, 120.0); 60],
        0.0,
        1,
    );
    spec.scale_track = linear_ramp(1.0, 1.3, 60);
    let seq = gen_zoom_sequence(&spec).unwrap();
    for t in 1..60 {
        let width_ratio = seq.groundtruth[t].w / seq.groundtruth[t - 1].w;
        let scale_ratio = spec.scale_track[t] / spec.scale_track[t - 1];
        assert!((width_ratio - scale_ratio).abs() <= 1e-9);
    }
    assert!((seq.groundtruth[59].w - 52.0).abs() < 1e-9);
}

#[test]
fn rendered_patch_centroid_matches_groundtruth() {
    let traj = vec![(100.0, 80.0), (100.5, 80.25), (137.3, 61.9), (20.75, 150.4)];
    let mut spec = SynthSpec::new(Dims { height: 200, width: 240 }, Dims { height: 30, width: 24 }, traj, 0.0, 9);
    spec.scale_track = vec![1.0, 1.0, 1.37, 0.8];
    let seq = gen_zoom_sequence(&spec).unwrap();
    let bg = background_frame(&spec).unwrap();
    for (frame, gt) in seq.frames.iter().zip(&seq.groundtruth) {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for r in 0..frame.height() {
            for c in 0..frame.width() {
                if frame.get(r, c) != bg.get(r, c) {
                    sx += c as f64 + 0.5;
                    sy += r as f64 + 0.5;
                    n += 1.0;
                }
            }
        }
        let (cx, cy) = gt.center();
        assert!((sx / n - cx).abs() <= 0.5 && (sy / n - cy).abs() <= 0.5, "centroid ({}, {}) vs ({cx}, {cy})", sx / n, sy / n);
    }
}

#[test]
fn presets_have_expected_lengths() {
    assert_eq!(SynthSpec::preset("translation-100").unwrap().len(), 100);
    assert_eq!(SynthSpec::preset("occlusion-60").unwrap().len(), 60);
    let zoom = SynthSpec::preset("zoom-60").unwrap();
    assert_eq!(zoom.scale_track.last(), Some(&1.3));
}
