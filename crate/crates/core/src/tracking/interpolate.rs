//! Gap interpolation: missing frames of a track are filled by a natural
//! cubic spline on x(t) and y(t) independently (linear when fewer than 4
//! support points exist). Observed points are preserved exactly.

use crate::model::{Track, TrackPoint, TrackSource};

use super::TrackingError;

/// Natural cubic spline second derivatives via the Thomas algorithm.
fn spline_second_derivatives(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    debug_assert!(n >= 3);
    let m = n - 2;
    let mut diag = vec![0.0; m];
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let h0 = t[i + 1] - t[i];
        let h1 = t[i + 2] - t[i + 1];
        lower[i] = h0;
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
    }
    // Forward sweep.
    for i in 1..m {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut interior = vec![0.0; m];
    interior[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        interior[i] = (rhs[i] - upper[i] * interior[i + 1]) / diag[i];
    }
    let mut second = vec![0.0; n];
    second[1..=m].copy_from_slice(&interior);
    second
}

fn spline_eval(t: &[f64], y: &[f64], second: &[f64], at: f64) -> f64 {
    let mut seg = t.len() - 2;
    for i in 0..t.len() - 1 {
        if at <= t[i + 1] {
            seg = i;
            break;
        }
    }
    let (t0, t1) = (t[seg], t[seg + 1]);
    let h = t1 - t0;
    let a = (t1 - at) / h;
    let b = (at - t0) / h;
    a * y[seg]
        + b * y[seg + 1]
        + ((a.powi(3) - a) * second[seg] + (b.powi(3) - b) * second[seg + 1]) * h * h / 6.0
}

fn linear_eval(t: &[f64], y: &[f64], at: f64) -> f64 {
    let mut seg = t.len() - 2;
    for i in 0..t.len() - 1 {
        if at <= t[i + 1] {
            seg = i;
            break;
        }
    }
    let frac = (at - t[seg]) / (t[seg + 1] - t[seg]);
    y[seg] + frac * (y[seg + 1] - y[seg])
}

/// Fill every missing integer frame between the track's first and last
/// point. Gapless tracks are returned unchanged; otherwise the output is
/// flagged as interpolated.
pub fn interpolate_track(track: &Track) -> Result<Track, TrackingError> {
    if track.points.len() < 2 {
        return Err(TrackingError::TooShort {
            len: track.points.len(),
        });
    }
    if track.is_gapless() {
        return Ok(track.clone());
    }

    let t: Vec<f64> = track.points.iter().map(|p| p.frame as f64).collect();
    let xs: Vec<f64> = track.points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = track.points.iter().map(|p| p.y).collect();
    let use_spline = track.points.len() >= 4;
    let (sx, sy) = if use_spline {
        (
            spline_second_derivatives(&t, &xs),
            spline_second_derivatives(&t, &ys),
        )
    } else {
        (Vec::new(), Vec::new())
    };

    let mut points = Vec::with_capacity(track.last_frame() - track.first_frame() + 1);
    let mut observed = track.points.iter().peekable();
    for frame in track.first_frame()..=track.last_frame() {
        if let Some(p) = observed.peek() {
            if p.frame == frame {
                points.push(**p);
                observed.next();
                continue;
            }
        }
        let at = frame as f64;
        let (x, y) = if use_spline {
            (spline_eval(&t, &xs, &sx, at), spline_eval(&t, &ys, &sy, at))
        } else {
            (linear_eval(&t, &xs, at), linear_eval(&t, &ys, at))
        };
        points.push(TrackPoint { frame, x, y });
    }
    Ok(Track::new(track.track_id, points, TrackSource::Interpolated))
}
