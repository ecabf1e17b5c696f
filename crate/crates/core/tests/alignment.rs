use neorppg::preprocess::{
    align_clip, align_video, AlignConfig, AlignOutcome, AlignmentState, FrameTensor,
    MarkerDetector, ANCHOR_STEP, CLIP_FRAMES,
};
use neorppg::synth::{clip_keys, generate_clip, SynthConfig};

fn corpus() -> SynthConfig {
    SynthConfig {
        n_subjects: 12,
        clips_per_subject: 2,
        clip_seconds: 2.0,
        ..SynthConfig::clean(7)
    }
}

#[test]
fn recovers_orientation_and_box() {
    let cfg = corpus();
    let det = MarkerDetector::default();
    let mut seen = [false; 4];
    for (s, c) in clip_keys(&cfg) {
        let clip = generate_clip(&cfg, s, c).unwrap();
        let mut state = AlignmentState::default();
        let out = align_clip(&clip.frames, &det, &mut state, &clip.meta.clip_id, &AlignConfig { out_size: 32 })
            .unwrap();
        let AlignOutcome::Aligned(a) = out else {
            panic!("{} skipped", clip.meta.clip_id)
        };
        let o = clip.meta.orientation_deg;
        seen[(o / 90) as usize] = true;
        assert_eq!(a.rotation_deg, o);
        // Fresh state starts at 0°, so the number of failed bins is o / 90.
        assert_eq!(a.failed_rotations, (o / 90) as usize);
        let truth = clip.meta.true_bbox[0];
        assert!(a.bbox.iou(&truth) >= 0.8, "iou {}", a.bbox.iou(&truth));
        assert!(a.bbox.max_edge_diff(&truth) <= 4);
        assert_eq!(a.frames.n_frames(), 60);
        assert_eq!((a.frames.height(), a.frames.width()), (32, 32));

        // Re-aligning the output finds the face upright.
        let mut fresh = AlignmentState::default();
        match align_clip(&a.frames, &det, &mut fresh, "again", &AlignConfig { out_size: 32 }).unwrap() {
            AlignOutcome::Aligned(b) => assert_eq!(b.rotation_deg, 0),
            AlignOutcome::Skipped(r) => panic!("idempotency failed: {r:?}"),
        }
    }
    assert!(seen.iter().all(|&b| b), "all orientation bins exercised");
}

#[test]
fn black_clip_is_skipped() {
    let clip = FrameTensor::new(60, 16, 16, 30.0, vec![0.0; 60 * 16 * 16 * 3]).unwrap();
    let mut state = AlignmentState::default();
    let out = align_clip(&clip, &MarkerDetector::default(), &mut state, "black", &AlignConfig::default()).unwrap();
    match out {
        AlignOutcome::Skipped(r) => {
            assert_eq!(r.clip_id, "black");
            assert_eq!(r.reason, "no-detection");
        }
        _ => panic!("black clip aligned"),
    }
}

struct Counting<'a>(&'a MarkerDetector, std::sync::atomic::AtomicUsize);

impl neorppg::preprocess::FaceDetector for Counting<'_> {
    fn detect(&self, f: &neorppg::preprocess::Image) -> Option<neorppg::preprocess::BBox> {
        self.1.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        self.0.detect(f)
    }
}

#[test]
fn video_with_dropout_recovers_at_anchor() {
    let cfg = SynthConfig { n_subjects: 1, clips_per_subject: 1, clip_seconds: 6.0, rotation_bins: vec![90], ..SynthConfig::clean(3) };
    let clip = generate_clip(&cfg, 0, 0).unwrap();
    // Blank frames 0..30 so the face first appears at the second anchor.
    let mut data = clip.frames.data().to_vec();
    let n = clip.frames.frame_len();
    data[..30 * n].iter_mut().for_each(|v| *v = 0.0);
    let video = FrameTensor::new(180, clip.frames.height(), clip.frames.width(), 30.0, data).unwrap();

    let det = MarkerDetector::default();
    let counting = Counting(&det, Default::default());
    let out = align_video(&video, &counting, "v", &AlignConfig { out_size: 32 }).unwrap();
    assert_eq!(out.skips.len(), 1);
    assert_eq!(out.skips[0].frame_offset, 30);
    let starts: Vec<usize> = out.clips.iter().map(|(s, _)| *s).collect();
    assert_eq!(starts, vec![30, 90]);
    assert!(out.clips.iter().all(|(_, a)| a.rotation_deg == 90));
    // At most four rotations per anchor, one anchor per 30 frames.
    let anchors = video.n_frames().div_ceil(ANCHOR_STEP);
    assert!(counting.1.into_inner() <= 4 * anchors);
    assert_eq!(CLIP_FRAMES, 60);
}
