//! Domain types and file I/O shared by the whole pipeline: video patches,
//! tracks, dataset manifests and prediction lists.
//!
//! All types are immutable after construction and safe to share across
//! threads; the loaders are reentrant.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array3, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tiff::decoder::{Decoder, DecodingResult};
use tiff::encoder::{colortype, TiffEncoder};
use tiff::ColorType;

/// Frames per video-patch.
pub const PATCH_FRAMES: usize = 20;
/// Side length of a video-patch in pixels.
pub const PATCH_SIZE: usize = 50;
/// Patch midpoint used for focus-track selection and `d_center`.
pub const PATCH_CENTER: (f64, f64) = (25.0, 25.0);
/// The annotation frame: behaviors are labeled at the temporal center.
pub const MID_FRAME: usize = 10;
/// Pixel size of the standardized patches, in micrometers.
pub const DEFAULT_PIXEL_SIZE_UM: f64 = 0.8;
/// Acquisition interval between frames, in seconds.
pub const DEFAULT_FRAME_INTERVAL_S: f64 = 60.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed image file {path}: {detail}")]
    Format { path: PathBuf, detail: String },
    #[error(
        "bad patch shape in {path}: got {frames} frame(s) of {height}x{width}, \
         expected {expected_frames} frames of {expected}x{expected}"
    )]
    Shape {
        path: PathBuf,
        frames: usize,
        height: usize,
        width: usize,
        expected_frames: usize,
        expected: usize,
    },
    #[error("csv error in {path}: {detail}")]
    Csv { path: PathBuf, detail: String },
    #[error("duplicate row for track {track_id} frame {frame} in {path}")]
    DuplicateTrackRow {
        path: PathBuf,
        track_id: u32,
        frame: usize,
    },
    #[error("frame {frame} out of range [0, {max}] in {path}")]
    FrameOutOfRange {
        path: PathBuf,
        frame: usize,
        max: usize,
    },
    #[error("duplicate patch id {id}")]
    DuplicateId { id: String },
    #[error("invalid {field} value {value:?} in {path}")]
    InvalidField {
        path: PathBuf,
        field: &'static str,
        value: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> ModelError {
    ModelError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, err: impl fmt::Display) -> ModelError {
    ModelError::Csv {
        path: path.to_path_buf(),
        detail: err.to_string(),
    }
}

/// Dataset partition a patch belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "validation" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A 20-frame, 50x50 single-channel intensity stack with metadata.
///
/// Intensities are stored as `f64` in `[0, 255]`; 8-bit sources load as
/// integer-valued floats.
#[derive(Debug, Clone)]
pub struct VideoPatch {
    pub id: String,
    /// Axis order `(frame, row, col)`.
    pub frames: Array3<f64>,
    pub pixel_size_um: f64,
    pub frame_interval_s: f64,
    pub label: Option<u8>,
    /// Source IVM video identifier.
    pub group_id: String,
    pub split: Option<Split>,
}

impl VideoPatch {
    pub fn frame(&self, index: usize) -> ArrayView2<'_, f64> {
        self.frames.index_axis(ndarray::Axis(0), index)
    }

    pub fn n_frames(&self) -> usize {
        self.frames.shape()[0]
    }
}

/// Provenance of a track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackSource {
    Manual,
    Automated,
    Interpolated,
}

/// One time-stamped centroid observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
}

/// An identified sequence of time-stamped 2D centroids, possibly with gaps.
///
/// Coordinates are pixels with `x` the column index and `y` the row index,
/// origin at the top-left. Frames are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u32,
    pub points: Vec<TrackPoint>,
    pub source: TrackSource,
}

impl Track {
    pub fn new(track_id: u32, points: Vec<TrackPoint>, source: TrackSource) -> Track {
        debug_assert!(points.windows(2).all(|w| w[0].frame < w[1].frame));
        Track {
            track_id,
            points,
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first_frame(&self) -> usize {
        self.points.first().map(|p| p.frame).unwrap_or(0)
    }

    pub fn last_frame(&self) -> usize {
        self.points.last().map(|p| p.frame).unwrap_or(0)
    }

    /// Point observed at `frame`, if any.
    pub fn point_at(&self, frame: usize) -> Option<&TrackPoint> {
        self.points
            .binary_search_by_key(&frame, |p| p.frame)
            .ok()
            .map(|i| &self.points[i])
    }

    /// True when every integer frame in `[first, last]` has a point.
    pub fn is_gapless(&self) -> bool {
        !self.points.is_empty() && self.points.len() == self.last_frame() - self.first_frame() + 1
    }
}

/// One manifest row.
#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub patch_id: String,
    pub path: PathBuf,
    pub label: Option<u8>,
    pub group_id: String,
    pub split: Option<Split>,
}

/// The dataset index: one entry per patch plus an optional tracks directory.
#[derive(Debug, Clone, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub track_dir: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn entries_in_split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries
            .iter()
            .filter(move |e| e.split == Some(split))
    }
}

/// Per-patch classifier output.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub patch_id: String,
    pub prob_class1: f64,
    pub pred_label: u8,
}

/// Read a multi-page TIFF stack as a video-patch.
///
/// Accepts 8-bit grayscale or 8-bit RGB pages; for RGB input the green
/// channel is extracted. The stack must be exactly 20 frames of 50x50.
/// Metadata fields are filled with defaults; the id is the file stem.
pub fn load_patch(path: &Path) -> Result<VideoPatch, ModelError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut decoder = Decoder::new(BufReader::new(file)).map_err(|e| ModelError::Format {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;

    let mut frames: Vec<Vec<f64>> = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    loop {
        let (w, h) = decoder.dimensions().map_err(|e| ModelError::Format {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let (w, h) = (w as usize, h as usize);
        match dims {
            None => dims = Some((h, w)),
            Some(d) if d != (h, w) => {
                return Err(ModelError::Format {
                    path: path.to_path_buf(),
                    detail: format!("page {} has mismatched size {}x{}", frames.len(), h, w),
                })
            }
            _ => {}
        }
        let color = decoder.colortype().map_err(|e| ModelError::Format {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let image = decoder.read_image().map_err(|e| ModelError::Format {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let data = match image {
            DecodingResult::U8(data) => data,
            _ => {
                return Err(ModelError::Format {
                    path: path.to_path_buf(),
                    detail: "only 8-bit samples are supported".into(),
                })
            }
        };
        let plane = match color {
            ColorType::Gray(8) => data.iter().map(|&v| v as f64).collect(),
            // Green channel carries the cell signal in this dataset.
            ColorType::RGB(8) => data.chunks_exact(3).map(|px| px[1] as f64).collect(),
            other => {
                return Err(ModelError::Format {
                    path: path.to_path_buf(),
                    detail: format!("unsupported color type {other:?}"),
                })
            }
        };
        frames.push(plane);
        if !decoder.more_images() {
            break;
        }
        decoder.next_image().map_err(|e| ModelError::Format {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    }

    let (height, width) = dims.unwrap_or((0, 0));
    if frames.len() != PATCH_FRAMES || height != PATCH_SIZE || width != PATCH_SIZE {
        return Err(ModelError::Shape {
            path: path.to_path_buf(),
            frames: frames.len(),
            height,
            width,
            expected_frames: PATCH_FRAMES,
            expected: PATCH_SIZE,
        });
    }

    let flat: Vec<f64> = frames.into_iter().flatten().collect();
    let frames = Array3::from_shape_vec((PATCH_FRAMES, PATCH_SIZE, PATCH_SIZE), flat)
        .expect("shape checked above");
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(VideoPatch {
        id,
        frames,
        pixel_size_um: DEFAULT_PIXEL_SIZE_UM,
        frame_interval_s: DEFAULT_FRAME_INTERVAL_S,
        label: None,
        group_id: String::new(),
        split: None,
    })
}

/// Write an intensity stack as an 8-bit grayscale multi-page TIFF.
///
/// Values are clamped to `[0, 255]` and rounded to the nearest integer.
pub fn save_patch(frames: &Array3<f64>, path: &Path) -> Result<(), ModelError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut encoder =
        TiffEncoder::new(BufWriter::new(file)).map_err(|e| ModelError::Format {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    let (_, h, w) = frames.dim();
    for frame in frames.outer_iter() {
        let data: Vec<u8> = frame.iter().map(|&v| v.clamp(0.0, 255.0).round() as u8).collect();
        encoder
            .write_image::<colortype::Gray8>(w as u32, h as u32, &data)
            .map_err(|e| ModelError::Format {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?;
    }
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct TrackRow {
    track_id: u32,
    frame: usize,
    x_px: f64,
    y_px: f64,
}

/// Load a `track_id,frame,x_px,y_px` CSV, grouping rows into tracks.
///
/// Rows are grouped by track id and sorted by frame; the source is
/// `manual`. Duplicate `(track_id, frame)` pairs and frames outside
/// `[0, 19]` are rejected.
pub fn load_tracks(path: &Path) -> Result<Vec<Track>, ModelError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let mut rows: Vec<TrackRow> = Vec::new();
    for record in reader.deserialize() {
        let row: TrackRow = record.map_err(|e| csv_err(path, e))?;
        if row.frame >= PATCH_FRAMES {
            return Err(ModelError::FrameOutOfRange {
                path: path.to_path_buf(),
                frame: row.frame,
                max: PATCH_FRAMES - 1,
            });
        }
        if !(row.x_px.is_finite() && row.y_px.is_finite()) {
            return Err(ModelError::InvalidField {
                path: path.to_path_buf(),
                field: "coordinate",
                value: format!("({}, {})", row.x_px, row.y_px),
            });
        }
        rows.push(row);
    }

    rows.sort_by(|a, b| (a.track_id, a.frame).cmp(&(b.track_id, b.frame)));
    let mut tracks: Vec<Track> = Vec::new();
    for row in rows {
        let point = TrackPoint {
            frame: row.frame,
            x: row.x_px,
            y: row.y_px,
        };
        match tracks.last_mut() {
            Some(t) if t.track_id == row.track_id => {
                if t.points.last().map(|p| p.frame) == Some(row.frame) {
                    return Err(ModelError::DuplicateTrackRow {
                        path: path.to_path_buf(),
                        track_id: row.track_id,
                        frame: row.frame,
                    });
                }
                t.points.push(point);
            }
            _ => tracks.push(Track::new(row.track_id, vec![point], TrackSource::Manual)),
        }
    }
    Ok(tracks)
}

/// Write tracks in the `track_id,frame,x_px,y_px` schema.
///
/// Coordinates use shortest round-trip float formatting, so a load after
/// save reproduces the input exactly.
pub fn save_tracks(tracks: &[Track], path: &Path) -> Result<(), ModelError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for track in tracks {
        for p in &track.points {
            writer
                .serialize(TrackRow {
                    track_id: track.track_id,
                    frame: p.frame,
                    x_px: p.x,
                    y_px: p.y,
                })
                .map_err(|e| csv_err(path, e))?;
        }
    }
    // Header-only file for an empty track list.
    if tracks.is_empty() {
        writer
            .write_record(["track_id", "frame", "x_px", "y_px"])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Load a `patch_id,path,label,group_id,split` manifest.
///
/// `label` and `split` may be empty (test-phase usage). Relative patch
/// paths are resolved against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest, ModelError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.deserialize() {
        let row: (String, String, String, String, String) =
            record.map_err(|e| csv_err(path, e))?;
        let (patch_id, patch_path, label, group_id, split) = row;
        if !seen.insert(patch_id.clone()) {
            return Err(ModelError::DuplicateId { id: patch_id });
        }
        let label = match label.as_str() {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            other => {
                return Err(ModelError::InvalidField {
                    path: path.to_path_buf(),
                    field: "label",
                    value: other.to_string(),
                })
            }
        };
        let split = match split.as_str() {
            "" => None,
            s => Some(Split::parse(s).ok_or_else(|| ModelError::InvalidField {
                path: path.to_path_buf(),
                field: "split",
                value: s.to_string(),
            })?),
        };
        let patch_path = PathBuf::from(&patch_path);
        let resolved = if patch_path.is_absolute() {
            patch_path
        } else {
            base.join(patch_path)
        };
        entries.push(ManifestEntry {
            patch_id,
            path: resolved,
            label,
            group_id,
            split,
        });
    }
    Ok(DatasetManifest {
        entries,
        track_dir: None,
    })
}

/// Write a manifest with paths as given (no resolution).
pub fn save_manifest(manifest: &DatasetManifest, path: &Path) -> Result<(), ModelError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer
        .write_record(["patch_id", "path", "label", "group_id", "split"])
        .map_err(|e| csv_err(path, e))?;
    for e in &manifest.entries {
        writer
            .write_record([
                e.patch_id.as_str(),
                &e.path.to_string_lossy(),
                &e.label.map(|l| l.to_string()).unwrap_or_default(),
                e.group_id.as_str(),
                e.split.map(|s| s.as_str()).unwrap_or(""),
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Write predictions as `patch_id,prob_class1,pred_label` with
/// probabilities rendered to 6 decimal places.
///
/// Duplicate patch ids are rejected before anything is written.
pub fn save_predictions(preds: &[Prediction], path: &Path) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for p in preds {
        if !seen.insert(p.patch_id.as_str()) {
            return Err(ModelError::DuplicateId {
                id: p.patch_id.clone(),
            });
        }
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "patch_id,prob_class1,pred_label").map_err(|e| io_err(path, e))?;
    for p in preds {
        writeln!(out, "{},{:.6},{}", p.patch_id, p.prob_class1, p.pred_label)
            .map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Load a predictions CSV written by [`save_predictions`].
pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, ModelError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let mut preds = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.deserialize() {
        let (patch_id, prob_class1, pred_label): (String, f64, u8) =
            record.map_err(|e| csv_err(path, e))?;
        if !seen.insert(patch_id.clone()) {
            return Err(ModelError::DuplicateId { id: patch_id });
        }
        if !(0.0..=1.0).contains(&prob_class1) {
            return Err(ModelError::InvalidField {
                path: path.to_path_buf(),
                field: "prob_class1",
                value: prob_class1.to_string(),
            });
        }
        preds.push(Prediction {
            patch_id,
            prob_class1,
            pred_label,
        });
    }
    Ok(preds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use tempfile::TempDir;

    fn write_gray_stack(path: &Path, n_frames: usize, value: u8) {
        let file = File::create(path).unwrap();
        let mut enc = TiffEncoder::new(BufWriter::new(file)).unwrap();
        let data = vec![value; PATCH_SIZE * PATCH_SIZE];
        for _ in 0..n_frames {
            enc.write_image::<colortype::Gray8>(PATCH_SIZE as u32, PATCH_SIZE as u32, &data)
                .unwrap();
        }
    }

    #[test]
    fn gray_stack_passes_through() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("p1.tif");
        write_gray_stack(&path, PATCH_FRAMES, 37);
        let patch = load_patch(&path).unwrap();
        assert_eq!(patch.id, "p1");
        assert_eq!(patch.n_frames(), PATCH_FRAMES);
        assert!(patch.frames.iter().all(|&v| v == 37.0));
    }

    #[test]
    fn rgb_stack_extracts_green_channel() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("rgb.tif");
        let file = File::create(&path).unwrap();
        let mut enc = TiffEncoder::new(BufWriter::new(file)).unwrap();
        let mut data = Vec::with_capacity(PATCH_SIZE * PATCH_SIZE * 3);
        for _ in 0..PATCH_SIZE * PATCH_SIZE {
            data.extend_from_slice(&[0, 123, 0]);
        }
        for _ in 0..PATCH_FRAMES {
            enc.write_image::<colortype::RGB8>(PATCH_SIZE as u32, PATCH_SIZE as u32, &data)
                .unwrap();
        }
        drop(enc);
        let patch = load_patch(&path).unwrap();
        assert!(patch.frames.iter().all(|&v| v == 123.0));
    }

    #[test]
    fn short_stack_reports_frame_count() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("short.tif");
        write_gray_stack(&path, 19, 0);
        match load_patch(&path) {
            Err(ModelError::Shape { frames: 19, .. }) => {}
            other => panic!("expected shape error with 19 frames, got {other:?}"),
        }
    }

    #[test]
    fn malformed_file_is_a_format_error() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("junk.tif");
        std::fs::write(&path, b"not a tiff").unwrap();
        assert!(matches!(load_patch(&path), Err(ModelError::Format { .. })));
    }

    #[test]
    fn patch_loading_is_deterministic() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("p.tif");
        write_gray_stack(&path, PATCH_FRAMES, 91);
        let a = load_patch(&path).unwrap();
        let b = load_patch(&path).unwrap();
        assert_eq!(a.frames, b.frames);
    }

    #[test]
    fn tracks_group_and_sort_rows() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(
            &path,
            "track_id,frame,x_px,y_px\n1,2,3.0,4.0\n1,0,1.0,2.0\n1,1,2.0,3.0\n",
        )
        .unwrap();
        let tracks = load_tracks(&path).unwrap();
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].points.len(), 3);
        assert_eq!(
            tracks[0].points.iter().map(|p| p.frame).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        assert_eq!(tracks[0].source, TrackSource::Manual);
    }

    #[test]
    fn tracks_split_by_id() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(
            &path,
            "track_id,frame,x_px,y_px\n1,0,1.0,2.0\n2,0,5.0,6.0\n",
        )
        .unwrap();
        let tracks = load_tracks(&path).unwrap();
        assert_eq!(tracks.len(), 2);
    }

    #[test]
    fn out_of_range_frame_is_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "track_id,frame,x_px,y_px\n1,25,1.0,2.0\n").unwrap();
        assert!(matches!(
            load_tracks(&path),
            Err(ModelError::FrameOutOfRange { frame: 25, .. })
        ));
    }

    #[test]
    fn duplicate_track_row_is_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(
            &path,
            "track_id,frame,x_px,y_px\n1,3,1.0,2.0\n1,3,1.5,2.5\n",
        )
        .unwrap();
        assert!(matches!(
            load_tracks(&path),
            Err(ModelError::DuplicateTrackRow {
                track_id: 1,
                frame: 3,
                ..
            })
        ));
    }

    #[test]
    fn track_save_load_round_trips_exactly() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("t.csv");
        let tracks = vec![
            Track::new(
                1,
                vec![
                    TrackPoint {
                        frame: 0,
                        x: 1.234567890123,
                        y: 2.5,
                    },
                    TrackPoint {
                        frame: 3,
                        x: 0.1 + 0.2,
                        y: -0.0,
                    },
                ],
                TrackSource::Manual,
            ),
            Track::new(
                7,
                vec![TrackPoint {
                    frame: 19,
                    x: 49.999999,
                    y: 0.0,
                }],
                TrackSource::Manual,
            ),
        ];
        save_tracks(&tracks, &path).unwrap();
        let loaded = load_tracks(&path).unwrap();
        assert_eq!(tracks, loaded);
    }

    #[test]
    fn predictions_round_trip_at_six_decimals() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("p.csv");
        let preds = vec![
            Prediction {
                patch_id: "p1".into(),
                prob_class1: 0.5,
                pred_label: 1,
            },
            Prediction {
                patch_id: "p2".into(),
                prob_class1: 0.123456,
                pred_label: 0,
            },
        ];
        save_predictions(&preds, &path).unwrap();
        let loaded = load_predictions(&path).unwrap();
        assert_eq!(preds, loaded);
        // A second write from the loaded list is byte-identical.
        let path2 = dir.path().join("p2.csv");
        save_predictions(&loaded, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn empty_prediction_list_writes_header_only() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("p.csv");
        save_predictions(&[], &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "patch_id,prob_class1,pred_label\n"
        );
        assert!(load_predictions(&path).unwrap().is_empty());
    }

    #[test]
    fn duplicate_prediction_id_fails_before_write() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("p.csv");
        let preds = vec![
            Prediction {
                patch_id: "p1".into(),
                prob_class1: 0.5,
                pred_label: 1,
            },
            Prediction {
                patch_id: "p1".into(),
                prob_class1: 0.6,
                pred_label: 1,
            },
        ];
        assert!(save_predictions(&preds, &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("manifest.csv");
        let manifest = DatasetManifest {
            entries: vec![
                ManifestEntry {
                    patch_id: "a".into(),
                    path: PathBuf::from("patches/a.tif"),
                    label: Some(1),
                    group_id: "v01".into(),
                    split: Some(Split::Train),
                },
                ManifestEntry {
                    patch_id: "b".into(),
                    path: PathBuf::from("patches/b.tif"),
                    label: None,
                    group_id: "v02".into(),
                    split: None,
                },
            ],
            track_dir: None,
        };
        save_manifest(&manifest, &path).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(loaded.entries.len(), 2);
        assert_eq!(loaded.entries[0].label, Some(1));
        assert_eq!(loaded.entries[0].split, Some(Split::Train));
        assert_eq!(loaded.entries[1].label, None);
        assert_eq!(loaded.entries[1].split, None);
        // relative paths resolve against the manifest directory
        assert_eq!(loaded.entries[0].path, dir.path().join("patches/a.tif"));
    }

    #[test]
    fn duplicate_manifest_id_is_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(
            &path,
            "patch_id,path,label,group_id,split\na,a.tif,0,g,train\na,b.tif,1,g,train\n",
        )
        .unwrap();
        assert!(matches!(
            load_manifest(&path),
            Err(ModelError::DuplicateId { .. })
        ));
    }

    #[test]
    fn save_patch_load_patch_round_trips() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("p.tif");
        let mut frames = Array3::zeros((PATCH_FRAMES, PATCH_SIZE, PATCH_SIZE));
        for (i, mut frame) in frames.outer_iter_mut().enumerate() {
            frame.fill(i as f64 * 10.0);
        }
        save_patch(&frames, &path).unwrap();
        let patch = load_patch(&path).unwrap();
        assert_eq!(patch.frames, frames);
    }
}
