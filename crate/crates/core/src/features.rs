//! Motility feature extraction for a selected track: the basic track
//! descriptors, the bimodal-feature transforms, and the two hand-crafted
//! direction-change features built around the middle frame.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{Track, MID_FRAME, PATCH_CENTER};

/// Transform offset for the bimodal `outreachRatio` distribution.
pub const BIMODAL_B_OUTREACH: f64 = 0.55;
/// Transform offset for the bimodal `straightness` distribution.
pub const BIMODAL_B_STRAIGHTNESS: f64 = 0.45;

/// Class-0-like fallbacks used when the middle frame carries no cell.
const DEFAULT_D_CENTER: f64 = 50.0;
const DEFAULT_DELTA_THETA: f64 = 0.0;
const DEFAULT_S_NORM: f64 = 2.0;

/// Value for every feature of a patch with no usable track.
const MISSING_VALUE: f64 = -1.0;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("track too short for feature extraction ({len} point(s), need at least 3)")]
    TooShort { len: usize },
    #[error("csv error in {path}: {detail}")]
    Csv { path: PathBuf, detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which feature columns a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    /// Everything except the two hand-crafted direction-change features.
    Basic,
    All,
}

impl FeatureSet {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSet::Basic => "basic",
            FeatureSet::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureSet> {
        match s {
            "basic" => Some(FeatureSet::Basic),
            "all" => Some(FeatureSet::All),
            _ => None,
        }
    }

    /// Ordered feature names for this set (the model schema).
    pub fn schema(&self) -> Vec<&'static str> {
        FEATURE_COLUMNS
            .iter()
            .copied()
            .filter(|name| match self {
                FeatureSet::All => true,
                FeatureSet::Basic => *name != "delta_theta" && *name != "s_norm",
            })
            .collect()
    }
}

/// Column order of `features.csv` (after the leading `patch_id`).
pub const FEATURE_COLUMNS: [&str; 12] = [
    "speed",
    "mean_turning_angle",
    "outreach_ratio_t",
    "displacement_ratio",
    "straightness_t",
    "asphericity",
    "displacement",
    "n_coordinates",
    "d_center",
    "delta_theta",
    "s_norm",
    "track_missing",
];

/// The full motility feature vector of one patch.
///
/// Lengths are pixels, times are frames. `track_missing = 1` forces every
/// other field to -1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub speed: f64,
    pub mean_turning_angle: f64,
    pub outreach_ratio_t: f64,
    pub displacement_ratio: f64,
    pub straightness_t: f64,
    pub asphericity: f64,
    pub displacement: f64,
    pub n_coordinates: f64,
    pub d_center: f64,
    pub delta_theta: f64,
    pub s_norm: f64,
    pub track_missing: u8,
}

impl FeatureVector {
    pub fn missing() -> FeatureVector {
        FeatureVector {
            speed: MISSING_VALUE,
            mean_turning_angle: MISSING_VALUE,
            outreach_ratio_t: MISSING_VALUE,
            displacement_ratio: MISSING_VALUE,
            straightness_t: MISSING_VALUE,
            asphericity: MISSING_VALUE,
            displacement: MISSING_VALUE,
            n_coordinates: MISSING_VALUE,
            d_center: MISSING_VALUE,
            delta_theta: MISSING_VALUE,
            s_norm: MISSING_VALUE,
            track_missing: 1,
        }
    }

    fn by_name(&self, name: &str) -> f64 {
        match name {
            "speed" => self.speed,
            "mean_turning_angle" => self.mean_turning_angle,
            "outreach_ratio_t" => self.outreach_ratio_t,
            "displacement_ratio" => self.displacement_ratio,
            "straightness_t" => self.straightness_t,
            "asphericity" => self.asphericity,
            "displacement" => self.displacement,
            "n_coordinates" => self.n_coordinates,
            "d_center" => self.d_center,
            "delta_theta" => self.delta_theta,
            "s_norm" => self.s_norm,
            "track_missing" => f64::from(self.track_missing),
            _ => unreachable!("unknown feature {name}"),
        }
    }

    /// Values in schema order for the given set.
    pub fn values(&self, set: FeatureSet) -> Vec<f64> {
        set.schema().iter().map(|name| self.by_name(name)).collect()
    }
}

/// Untransformed track descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicFeatures {
    pub speed: f64,
    pub mean_turning_angle: f64,
    pub outreach_raw: f64,
    pub displacement_ratio: f64,
    pub straightness_raw: f64,
    pub asphericity: f64,
    pub displacement: f64,
    pub n_coordinates: usize,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Compute the basic motility descriptors of an interpolated track with
/// at least 3 points.
pub fn basic_features(track: &Track) -> Result<BasicFeatures, FeatureError> {
    let n = track.points.len();
    if n < 3 {
        return Err(FeatureError::TooShort { len: n });
    }
    let pos: Vec<(f64, f64)> = track.points.iter().map(|p| (p.x, p.y)).collect();
    let first = pos[0];
    let last = pos[n - 1];
    let duration = (track.last_frame() - track.first_frame()) as f64;

    let displacement = dist(first, last);
    let path_length: f64 = pos.windows(2).map(|w| dist(w[0], w[1])).sum();
    let speed = if duration > 0.0 {
        path_length / duration
    } else {
        0.0
    };
    let max_outreach = pos
        .iter()
        .map(|&p| dist(p, first))
        .fold(0.0f64, f64::max);
    let straightness_raw = if path_length > 0.0 {
        displacement / path_length
    } else {
        0.0
    };
    let outreach_raw = if path_length > 0.0 {
        max_outreach / path_length
    } else {
        0.0
    };
    let displacement_ratio = if max_outreach > 0.0 {
        displacement / max_outreach
    } else {
        0.0
    };

    // Mean angle between consecutive nonzero steps, in [0, pi].
    let mut angle_sum = 0.0;
    let mut angle_count = 0usize;
    for w in pos.windows(3) {
        let a = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        let b = (w[2].0 - w[1].0, w[2].1 - w[1].1);
        let na = a.0.hypot(a.1);
        let nb = b.0.hypot(b.1);
        if na > 0.0 && nb > 0.0 {
            let cos = ((a.0 * b.0 + a.1 * b.1) / (na * nb)).clamp(-1.0, 1.0);
            angle_sum += cos.acos();
            angle_count += 1;
        }
    }
    let mean_turning_angle = if angle_count > 0 {
        angle_sum / angle_count as f64
    } else {
        0.0
    };

    // Asphericity of the 2x2 gyration tensor.
    let cx = pos.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let cy = pos.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pos {
        sxx += (x - cx) * (x - cx);
        syy += (y - cy) * (y - cy);
        sxy += (x - cx) * (y - cy);
    }
    let (sxx, syy, sxy) = (sxx / n as f64, syy / n as f64, sxy / n as f64);
    let trace = sxx + syy;
    let asphericity = if trace > 0.0 {
        let disc = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).max(0.0).sqrt();
        (disc / trace).powi(2)
    } else {
        0.0
    };

    Ok(BasicFeatures {
        speed,
        mean_turning_angle,
        outreach_raw,
        displacement_ratio,
        straightness_raw,
        asphericity,
        displacement,
        n_coordinates: n,
    })
}

/// Fold a bimodal feature onto distance from its mode split point.
pub fn transform_bimodal(raw: f64, b: f64) -> f64 {
    (raw - b).abs()
}

/// The two direction-change features plus the center distance at the
/// middle frame: `(delta_theta, s_norm, d_center)`.
///
/// Falls back to class-0-like defaults `(0, 2, 50)` when the track has no
/// coordinate at `t_mid`, when either step set around `t_mid` is empty,
/// or when a mean step vector has zero norm (no usable direction).
pub fn handcrafted_features(track: &Track, t_mid: usize) -> (f64, f64, f64) {
    let defaults = (DEFAULT_DELTA_THETA, DEFAULT_S_NORM, DEFAULT_D_CENTER);
    let Some(mid) = track.point_at(t_mid) else {
        return defaults;
    };

    // Steps indexed by their start frame.
    let mut before: Vec<(f64, f64)> = Vec::new();
    let mut after: Vec<(f64, f64)> = Vec::new();
    for w in track.points.windows(2) {
        let step = (w[1].x - w[0].x, w[1].y - w[0].y);
        if w[0].frame < t_mid {
            before.push(step);
        } else {
            after.push(step);
        }
    }
    if before.is_empty() || after.is_empty() {
        return defaults;
    }

    let mean = |steps: &[(f64, f64)]| {
        let n = steps.len() as f64;
        (
            steps.iter().map(|s| s.0).sum::<f64>() / n,
            steps.iter().map(|s| s.1).sum::<f64>() / n,
        )
    };
    let vb = mean(&before);
    let va = mean(&after);
    let (nb, na) = (vb.0.hypot(vb.1), va.0.hypot(va.1));
    if nb == 0.0 || na == 0.0 {
        return defaults;
    }

    let mean_angle = |steps: &[(f64, f64)]| {
        steps.iter().map(|s| s.1.atan2(s.0)).sum::<f64>() / steps.len() as f64
    };
    let delta_theta = (mean_angle(&after) - mean_angle(&before)).abs();
    let s_norm = (vb.0 / nb + va.0 / na).hypot(vb.1 / nb + va.1 / na);
    let d_center = dist((mid.x, mid.y), PATCH_CENTER);
    (delta_theta, s_norm, d_center)
}

/// Build the full feature vector for a patch.
///
/// A missing track (or one too short to ever pass selection) yields the
/// all-missing vector. The feature set does not change what is computed,
/// only which columns downstream consumers read.
pub fn assemble(track: Option<&Track>) -> FeatureVector {
    let Some(track) = track.filter(|t| t.len() >= 3) else {
        return FeatureVector::missing();
    };
    let basic = basic_features(track).expect("length checked above");
    let (delta_theta, s_norm, d_center) = handcrafted_features(track, MID_FRAME);
    FeatureVector {
        speed: basic.speed,
        mean_turning_angle: basic.mean_turning_angle,
        outreach_ratio_t: transform_bimodal(basic.outreach_raw, BIMODAL_B_OUTREACH),
        displacement_ratio: basic.displacement_ratio,
        straightness_t: transform_bimodal(basic.straightness_raw, BIMODAL_B_STRAIGHTNESS),
        asphericity: basic.asphericity,
        displacement: basic.displacement,
        n_coordinates: basic.n_coordinates as f64,
        d_center,
        delta_theta,
        s_norm,
        track_missing: 0,
    }
}

/// One row of `features.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub patch_id: String,
    pub vector: FeatureVector,
    pub set: FeatureSet,
}

/// Write `features.csv`: `patch_id` plus the 12 feature columns, with
/// excluded columns left empty under the basic set. Values use 6 decimal
/// places.
pub fn save_features(rows: &[FeatureRow], path: &Path) -> Result<(), FeatureError> {
    let file = File::create(path).map_err(|e| FeatureError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let mut header = String::from("patch_id");
    for c in FEATURE_COLUMNS {
        header.push(',');
        header.push_str(c);
    }
    writeln!(out, "{header}").map_err(|e| FeatureError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    for row in rows {
        let mut line = row.patch_id.clone();
        let included = row.set.schema();
        for name in FEATURE_COLUMNS {
            line.push(',');
            if included.contains(&name) {
                if name == "track_missing" || name == "n_coordinates" {
                    line.push_str(&format!("{}", row.vector.by_name(name)));
                } else {
                    line.push_str(&format!("{:.6}", row.vector.by_name(name)));
                }
            }
        }
        writeln!(out, "{line}").map_err(|e| FeatureError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    out.flush().map_err(|e| FeatureError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Read a `features.csv` written by [`save_features`]. Rows with empty
/// hand-crafted columns load as the basic set.
pub fn load_features(path: &Path) -> Result<Vec<FeatureRow>, FeatureError> {
    let file = File::open(path).map_err(|e| FeatureError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let csv_err = |e: String| FeatureError::Csv {
        path: path.to_path_buf(),
        detail: e,
    };
    let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    let expected: Vec<&str> = std::iter::once("patch_id")
        .chain(FEATURE_COLUMNS)
        .collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(csv_err(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let get = |i: usize| record.get(i).unwrap_or("");
        let parse = |i: usize| -> Result<f64, FeatureError> {
            get(i)
                .parse::<f64>()
                .map_err(|e| csv_err(format!("column {}: {e}", expected[i])))
        };
        let delta_raw = get(10);
        let s_norm_raw = get(11);
        let set = if delta_raw.is_empty() && s_norm_raw.is_empty() {
            FeatureSet::Basic
        } else {
            FeatureSet::All
        };
        let vector = FeatureVector {
            speed: parse(1)?,
            mean_turning_angle: parse(2)?,
            outreach_ratio_t: parse(3)?,
            displacement_ratio: parse(4)?,
            straightness_t: parse(5)?,
            asphericity: parse(6)?,
            displacement: parse(7)?,
            n_coordinates: parse(8)?,
            d_center: parse(9)?,
            delta_theta: if set == FeatureSet::Basic {
                MISSING_VALUE
            } else {
                parse(10)?
            },
            s_norm: if set == FeatureSet::Basic {
                MISSING_VALUE
            } else {
                parse(11)?
            },
            track_missing: if parse(12)? != 0.0 { 1 } else { 0 },
        };
        rows.push(FeatureRow {
            patch_id: get(0).to_string(),
            vector,
            set,
        });
    }
    Ok(rows)
}
