//! Track production from a video-patch: intensity preprocessing,
//! Laplacian-of-Gaussian blob detection, frame-to-frame linking with
//! memory, gap interpolation, and focal-track selection.
//!
//! Everything here is a pure function of its inputs; the only randomness
//! (preprocessing noise) is seed-parameterized, so per-patch work can run
//! in parallel.

mod detect;
mod interpolate;
mod link;
mod preprocess;

pub use detect::{detect_blobs, Blob, DetectionParams};
pub use interpolate::interpolate_track;
pub use link::{link_detections, link_detections_with_cost, solve_step, LinkParams, StepAssignment};
pub use preprocess::preprocess_intensity;

use thiserror::Error;

use crate::model::{Track, MID_FRAME, PATCH_CENTER};

#[derive(Debug, Error)]
pub enum TrackingError {
    #[error("track too short to process ({len} point(s), need at least 2)")]
    TooShort { len: usize },
}

/// Pick the focus track: among tracks with at least 3 coordinates, the
/// one closest to the patch midpoint in the middle frame.
///
/// Tracks without a middle-frame coordinate compete with their
/// temporally nearest coordinate instead, but only when no survivor
/// covers the middle frame. Ties go to the lowest track id.
pub fn select_focus_track(tracks: &[Track]) -> Option<&Track> {
    let survivors: Vec<&Track> = tracks.iter().filter(|t| t.len() >= 3).collect();
    if survivors.is_empty() {
        return None;
    }
    let center_distance = |x: f64, y: f64| (x - PATCH_CENTER.0).hypot(y - PATCH_CENTER.1);

    let at_mid: Vec<(&Track, f64)> = survivors
        .iter()
        .filter_map(|t| {
            t.point_at(MID_FRAME)
                .map(|p| (*t, center_distance(p.x, p.y)))
        })
        .collect();
    if !at_mid.is_empty() {
        return at_mid
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.track_id.cmp(&b.0.track_id)))
            .map(|(t, _)| t);
    }

    survivors
        .into_iter()
        .map(|t| {
            let nearest = t
                .points
                .iter()
                .min_by_key(|p| {
                    let gap = p.frame.abs_diff(MID_FRAME);
                    (gap, p.frame)
                })
                .expect("survivors have points");
            (t, center_distance(nearest.x, nearest.y))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.track_id.cmp(&b.0.track_id)))
        .map(|(t, _)| t)
}
