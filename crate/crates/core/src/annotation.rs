//! Semi-automated annotation rules: a track (or its absence) is assigned
//! to a Class 1 / Class 0 sub-category from its net turning angle and its
//! per-segment straightness around the annotation frame.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{Track, MID_FRAME};

/// Straightness above this counts as linear movement.
pub const STRAIGHTNESS_THRESHOLD: f64 = 0.5;
/// Net turning angles above this signal a sharp direction change.
pub const TURN_THRESHOLD_DEG: f64 = 90.0;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("degenerate geometry: zero-length direction vector")]
    DegenerateDirection,
    #[error("segment around frame {t_ann} has fewer than 2 points")]
    DegenerateSegment { t_ann: usize },
    #[error("track does not span frame {t_ann} with a step on each side")]
    DoesNotSpan { t_ann: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Behavior sub-category of one patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Sharp direction change: linear before and after, turning > 90 deg.
    Class1Turn,
    /// Linear mover: straight on both sides, turning at most 90 deg.
    Class0Straight,
    /// Minimal movement: low straightness on both sides.
    Class0Stationary,
    /// No track at all.
    Class0Background,
    /// Mixed or degenerate geometry; resolved manually in practice.
    Ambiguous,
}

impl Category {
    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Class1Turn => "class1_turn",
            Category::Class0Straight => "class0_straight",
            Category::Class0Stationary => "class0_stationary",
            Category::Class0Background => "class0_background",
            Category::Ambiguous => "ambiguous",
        }
    }

    /// The challenge label this category maps to.
    pub fn label(&self) -> Option<u8> {
        match self {
            Category::Class1Turn => Some(1),
            Category::Class0Straight | Category::Class0Stationary | Category::Class0Background => {
                Some(0)
            }
            Category::Ambiguous => None,
        }
    }
}

/// Annotation outcome with the metrics that drove it.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationResult {
    pub category: Category,
    pub net_turning_angle_deg: Option<f64>,
    pub straightness_before: Option<f64>,
    pub straightness_after: Option<f64>,
}

/// Deviation-from-straight at the annotation frame, in degrees.
///
/// The angle between the inbound direction `x(t_ann) - x(t_min)` and the
/// outbound direction `x(t_max) - x(t_ann)`: 0 for continued straight
/// motion, 180 for a full reversal.
pub fn net_turning_angle(track: &Track, t_ann: usize) -> Result<f64, AnnotationError> {
    let first = track.points.first().ok_or(AnnotationError::DoesNotSpan { t_ann })?;
    let last = track.points.last().ok_or(AnnotationError::DoesNotSpan { t_ann })?;
    let mid = track
        .point_at(t_ann)
        .ok_or(AnnotationError::DoesNotSpan { t_ann })?;
    if first.frame >= t_ann || last.frame <= t_ann {
        return Err(AnnotationError::DoesNotSpan { t_ann });
    }
    let inbound = (mid.x - first.x, mid.y - first.y);
    let outbound = (last.x - mid.x, last.y - mid.y);
    let ni = inbound.0.hypot(inbound.1);
    let no = outbound.0.hypot(outbound.1);
    if ni == 0.0 || no == 0.0 {
        return Err(AnnotationError::DegenerateDirection);
    }
    let cos = ((inbound.0 * outbound.0 + inbound.1 * outbound.1) / (ni * no)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

/// Which side of the annotation frame a segment covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    After,
}

/// Straightness (displacement over path length) of the track portion at
/// or before / at or after the annotation frame. Zero path length maps
/// to zero.
pub fn segment_straightness(
    track: &Track,
    t_ann: usize,
    side: Side,
) -> Result<f64, AnnotationError> {
    let segment: Vec<&crate::model::TrackPoint> = track
        .points
        .iter()
        .filter(|p| match side {
            Side::Before => p.frame <= t_ann,
            Side::After => p.frame >= t_ann,
        })
        .collect();
    if segment.len() < 2 {
        return Err(AnnotationError::DegenerateSegment { t_ann });
    }
    let first = segment.first().unwrap();
    let last = segment.last().unwrap();
    let displacement = (last.x - first.x).hypot(last.y - first.y);
    let path: f64 = segment
        .windows(2)
        .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
        .sum();
    if path > 0.0 {
        Ok(displacement / path)
    } else {
        Ok(0.0)
    }
}

/// Apply the annotation rules to a (possibly absent) track.
///
/// No track at all is background. Otherwise, with `alpha` the net turning
/// angle and `s_b`, `s_a` the per-side straightness: both sides straight
/// and `alpha > 90` is a Class 1 turn; both sides straight otherwise is a
/// Class 0 straight mover; both sides below the threshold is Class 0
/// stationary. Everything else, including degenerate geometry, is
/// ambiguous.
pub fn annotate(track: Option<&Track>, t_ann: usize) -> AnnotationResult {
    let Some(track) = track else {
        return AnnotationResult {
            category: Category::Class0Background,
            net_turning_angle_deg: None,
            straightness_before: None,
            straightness_after: None,
        };
    };

    let s_b = segment_straightness(track, t_ann, Side::Before).ok();
    let s_a = segment_straightness(track, t_ann, Side::After).ok();
    let alpha = net_turning_angle(track, t_ann).ok();

    let category = match (alpha, s_b, s_a) {
        (Some(alpha), Some(s_b), Some(s_a)) => {
            let straight_b = s_b > STRAIGHTNESS_THRESHOLD;
            let straight_a = s_a > STRAIGHTNESS_THRESHOLD;
            if straight_b && straight_a && alpha > TURN_THRESHOLD_DEG {
                Category::Class1Turn
            } else if straight_b && straight_a {
                Category::Class0Straight
            } else if !straight_b && !straight_a {
                Category::Class0Stationary
            } else {
                Category::Ambiguous
            }
        }
        // Stationary behavior is recognizable without a defined turning
        // direction; everything else degenerate stays ambiguous.
        (None, Some(s_b), Some(s_a))
            if s_b <= STRAIGHTNESS_THRESHOLD && s_a <= STRAIGHTNESS_THRESHOLD =>
        {
            Category::Class0Stationary
        }
        _ => Category::Ambiguous,
    };

    AnnotationResult {
        category,
        net_turning_angle_deg: alpha,
        straightness_before: s_b,
        straightness_after: s_a,
    }
}

/// One row of `annotations.csv`.
#[derive(Debug, Clone)]
pub struct AnnotationRow {
    pub patch_id: String,
    pub result: AnnotationResult,
}

/// Write `annotations.csv`:
/// `patch_id,category,net_turning_angle_deg,straightness_before,straightness_after`.
pub fn save_annotations(rows: &[AnnotationRow], path: &Path) -> Result<(), AnnotationError> {
    let io_err = |e: std::io::Error| AnnotationError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    writeln!(
        out,
        "patch_id,category,net_turning_angle_deg,straightness_before,straightness_after"
    )
    .map_err(io_err)?;
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.patch_id,
            row.result.category.as_str(),
            fmt(row.result.net_turning_angle_deg),
            fmt(row.result.straightness_before),
            fmt(row.result.straightness_after),
        )
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{TrackPoint, TrackSource};

    fn track_from(points: &[(usize, f64, f64)]) -> Track {
        Track::new(
            1,
            points
                .iter()
                .map(|&(frame, x, y)| TrackPoint { frame, x, y })
                .collect(),
            TrackSource::Manual,
        )
    }

    /// Two straight legs of 10 unit steps each, turning by `turn_deg` at
    /// frame 10.
    fn turn_track(turn_deg: f64) -> Track {
        let mut points = Vec::new();
        for i in 0..=10 {
            points.push((i, i as f64, 0.0));
        }
        let theta = turn_deg.to_radians();
        let (dx, dy) = (theta.cos(), theta.sin());
        for i in 1..=9usize {
            points.push((10 + i, 10.0 + dx * i as f64, dy * i as f64));
        }
        track_from(&points)
    }

    #[test]
    fn collinear_three_points_have_zero_angle() {
        let track = track_from(&[(0, 0.0, 0.0), (10, 10.0, 0.0), (19, 20.0, 0.0)]);
        assert!(net_turning_angle(&track, 10).unwrap().abs() < 1e-12);
    }

    #[test]
    fn orthogonal_turn_is_ninety_degrees() {
        let track = track_from(&[(0, 0.0, 0.0), (10, 10.0, 0.0), (19, 10.0, 10.0)]);
        assert!((net_turning_angle(&track, 10).unwrap() - 90.0).abs() < 1e-12);
    }

    #[test]
    fn sharp_reversal_angle_from_arccos() {
        // Directions (10,0) and (-10,1): arccos(-100 / (10 sqrt(101))).
        let track = track_from(&[(0, 0.0, 0.0), (10, 10.0, 0.0), (19, 0.0, 1.0)]);
        let expected = (-100.0f64 / (10.0 * 101.0f64.sqrt())).acos().to_degrees();
        let got = net_turning_angle(&track, 10).unwrap();
        assert!((got - expected).abs() < 1e-9);
        assert!((got - 174.289).abs() < 0.01);
    }

    #[test]
    fn stationary_vertex_is_degenerate() {
        let track = track_from(&[(0, 5.0, 5.0), (10, 5.0, 5.0), (19, 10.0, 5.0)]);
        assert!(matches!(
            net_turning_angle(&track, 10),
            Err(AnnotationError::DegenerateDirection)
        ));
    }

    #[test]
    fn straight_segment_straightness_is_one() {
        let track = turn_track(135.0);
        let s = segment_straightness(&track, 10, Side::Before).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_segment_straightness_is_zero() {
        let track = track_from(&[(0, 5.0, 5.0), (5, 5.0, 5.0), (10, 5.0, 5.0), (15, 9.0, 5.0)]);
        assert_eq!(
            segment_straightness(&track, 10, Side::Before).unwrap(),
            0.0
        );
    }

    #[test]
    fn zigzag_straightness_matches_hand_value() {
        // Alternating +x, +y unit steps over 10 frames.
        let mut points = vec![(0usize, 0.0, 0.0)];
        let (mut x, mut y) = (0.0, 0.0);
        for i in 1..=10usize {
            if i % 2 == 1 {
                x += 1.0;
            } else {
                y += 1.0;
            }
            points.push((i, x, y));
        }
        let track = track_from(&points);
        let s = segment_straightness(&track, 10, Side::Before).unwrap();
        assert!((s - (50.0f64.sqrt() / 10.0)).abs() < 1e-12);
    }

    #[test]
    fn short_segment_is_degenerate() {
        let track = track_from(&[(10, 5.0, 5.0), (11, 6.0, 5.0), (12, 7.0, 5.0)]);
        assert!(matches!(
            segment_straightness(&track, 10, Side::Before),
            Err(AnnotationError::DegenerateSegment { .. })
        ));
    }

    #[test]
    fn no_track_is_background() {
        let res = annotate(None, MID_FRAME);
        assert_eq!(res.category, Category::Class0Background);
        assert!(res.net_turning_angle_deg.is_none());
        assert!(res.straightness_before.is_none());
        assert!(res.straightness_after.is_none());
    }

    #[test]
    fn straight_line_is_class0_straight() {
        let track = turn_track(0.0);
        let res = annotate(Some(&track), MID_FRAME);
        assert_eq!(res.category, Category::Class0Straight);
        assert!(res.net_turning_angle_deg.unwrap().abs() < 1e-9);
    }

    #[test]
    fn sharp_turn_is_class1() {
        let track = turn_track(135.0);
        let res = annotate(Some(&track), MID_FRAME);
        assert_eq!(res.category, Category::Class1Turn);
        assert!((res.net_turning_angle_deg.unwrap() - 135.0).abs() < 1e-9);
        assert!((res.straightness_before.unwrap() - 1.0).abs() < 1e-12);
        assert!((res.straightness_after.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_turn_is_class0() {
        let res = annotate(Some(&turn_track(90.0)), MID_FRAME);
        assert_eq!(res.category, Category::Class0Straight);
    }

    #[test]
    fn mixed_straightness_is_ambiguous() {
        // Straight before, heavy zig-zag after.
        let mut points: Vec<(usize, f64, f64)> = (0..=10).map(|i| (i, i as f64, 0.0)).collect();
        let mut x = 10.0;
        for i in 1..=9usize {
            x += 0.2;
            let y = if i % 2 == 1 { 2.0 } else { 0.0 };
            points.push((10 + i, x, y));
        }
        let track = track_from(&points);
        let res = annotate(Some(&track), MID_FRAME);
        assert!(res.straightness_before.unwrap() > 0.5);
        assert!(res.straightness_after.unwrap() <= 0.5);
        assert_eq!(res.category, Category::Ambiguous);
    }

    #[test]
    fn jitter_on_both_sides_is_stationary() {
        let mut points = Vec::new();
        for i in 0..20usize {
            let dx = match i % 4 {
                0 => 0.0,
                1 => 0.4,
                2 => 0.1,
                _ => -0.4,
            };
            let dy = match i % 3 {
                0 => 0.3,
                1 => -0.3,
                _ => 0.05,
            };
            points.push((i, 25.0 + dx, 25.0 + dy));
        }
        let track = track_from(&points);
        let res = annotate(Some(&track), MID_FRAME);
        assert_eq!(res.category, Category::Class0Stationary);
    }

    #[test]
    fn category_labels() {
        assert_eq!(Category::Class1Turn.label(), Some(1));
        assert_eq!(Category::Class0Straight.label(), Some(0));
        assert_eq!(Category::Class0Stationary.label(), Some(0));
        assert_eq!(Category::Class0Background.label(), Some(0));
        assert_eq!(Category::Ambiguous.label(), None);
    }
}
