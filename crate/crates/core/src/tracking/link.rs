//! Frame-to-frame linking of detections into tracks.
//!
//! Frames are processed in order. At each frame the active track heads
//! and the new detections are joined by an exact minimum-cost assignment:
//! a link costs its squared displacement, every unlinked head and every
//! unlinked detection costs `search_range^2`, and links longer than the
//! search range are infeasible. Heads missing for more than
//! `memory_frames` frames leave the active set; unlinked detections
//! start new tracks.

use crate::model::{Track, TrackPoint, TrackSource};

/// Linker configuration.
#[derive(Debug, Clone)]
pub struct LinkParams {
    pub search_range_px: f64,
    pub memory_frames: usize,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            search_range_px: 20.0,
            memory_frames: 30,
        }
    }
}

/// One frame step's assignment: `assignment[i]` is the detection index
/// linked to eligible head `i`, and `cost` the penalized objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAssignment {
    pub assignment: Vec<Option<usize>>,
    pub cost: f64,
}

/// Exact minimum-cost assignment for one frame step.
///
/// Deterministic: among equal-cost optima, the assignment linking the
/// lowest head index to the lowest detection index wins (heads are
/// passed in ascending track-id order).
pub fn solve_step(
    heads: &[(f64, f64)],
    detections: &[(f64, f64)],
    search_range: f64,
) -> StepAssignment {
    let penalty = search_range * search_range;
    let n = heads.len();
    let m = detections.len();
    let mut cost = vec![vec![f64::INFINITY; m]; n];
    for (i, h) in heads.iter().enumerate() {
        for (j, d) in detections.iter().enumerate() {
            let d2 = (h.0 - d.0).powi(2) + (h.1 - d.1).powi(2);
            if d2.sqrt() <= search_range {
                cost[i][j] = d2;
            }
        }
    }

    // Connected components of the feasibility graph keep the search small.
    let mut head_comp = vec![usize::MAX; n];
    let mut det_comp = vec![usize::MAX; m];
    let mut n_comp = 0;
    for start in 0..n {
        if head_comp[start] != usize::MAX {
            continue;
        }
        let comp = n_comp;
        n_comp += 1;
        let mut stack = vec![start];
        head_comp[start] = comp;
        while let Some(i) = stack.pop() {
            for j in 0..m {
                if cost[i][j].is_finite() && det_comp[j] == usize::MAX {
                    det_comp[j] = comp;
                    for i2 in 0..n {
                        if cost[i2][j].is_finite() && head_comp[i2] == usize::MAX {
                            head_comp[i2] = comp;
                            stack.push(i2);
                        }
                    }
                }
            }
        }
    }

    let mut assignment = vec![None; n];
    let mut total = 0.0;
    for comp in 0..n_comp {
        let heads_in: Vec<usize> = (0..n).filter(|&i| head_comp[i] == comp).collect();
        let dets_in: Vec<usize> = (0..m).filter(|&j| det_comp[j] == comp).collect();
        let sub = solve_component(&heads_in, &dets_in, &cost, penalty);
        for (local, &i) in heads_in.iter().enumerate() {
            assignment[i] = sub.assignment[local].map(|lj| dets_in[lj]);
        }
        total += sub.cost;
    }
    // Detections not reachable from any head each start a new track.
    total += penalty * (0..m).filter(|&j| det_comp[j] == usize::MAX).count() as f64;

    StepAssignment {
        assignment,
        cost: total,
    }
}

/// Branch-and-bound over one connected component. Heads are expanded in
/// order and detections tried in ascending index before "unlinked", so
/// the first optimum found is the lexicographically preferred one.
fn solve_component(
    heads: &[usize],
    dets: &[usize],
    cost: &[Vec<f64>],
    penalty: f64,
) -> StepAssignment {
    let n = heads.len();
    let m = dets.len();
    // Admissible per-head bound: the cheapest feasible link or the
    // unlinked penalty, whichever is lower.
    let mut head_floor = vec![penalty; n];
    for (local, &i) in heads.iter().enumerate() {
        for &j in dets {
            head_floor[local] = head_floor[local].min(cost[i][j]);
        }
    }
    let mut tail_floor = vec![0.0; n + 1];
    for local in (0..n).rev() {
        tail_floor[local] = tail_floor[local + 1] + head_floor[local];
    }

    struct Search<'a> {
        heads: &'a [usize],
        dets: &'a [usize],
        cost: &'a [Vec<f64>],
        penalty: f64,
        tail_floor: Vec<f64>,
        used: Vec<bool>,
        current: Vec<Option<usize>>,
        best: Vec<Option<usize>>,
        best_cost: f64,
    }

    impl Search<'_> {
        fn run(&mut self, depth: usize, acc: f64) {
            let n = self.heads.len();
            if depth == n {
                let unmatched_dets = self.used.iter().filter(|&&u| !u).count();
                let total = acc + self.penalty * unmatched_dets as f64;
                if total < self.best_cost {
                    self.best_cost = total;
                    self.best = self.current.clone();
                }
                return;
            }
            // Remaining detections beyond what remaining heads can absorb
            // stay unmatched; their penalties are already certain.
            let free_dets = self.used.iter().filter(|&&u| !u).count();
            let surplus = free_dets.saturating_sub(n - depth) as f64;
            if acc + self.tail_floor[depth] + self.penalty * surplus >= self.best_cost {
                return;
            }
            let head = self.heads[depth];
            for (local, &det) in self.dets.iter().enumerate() {
                if self.used[local] || !self.cost[head][det].is_finite() {
                    continue;
                }
                self.used[local] = true;
                self.current[depth] = Some(local);
                self.run(depth + 1, acc + self.cost[head][det]);
                self.used[local] = false;
            }
            self.current[depth] = None;
            self.run(depth + 1, acc + self.penalty);
        }
    }

    let mut search = Search {
        heads,
        dets,
        cost,
        penalty,
        tail_floor,
        used: vec![false; m],
        current: vec![None; n],
        best: vec![None; n],
        best_cost: f64::INFINITY,
    };
    search.run(0, 0.0);
    StepAssignment {
        assignment: search.best,
        cost: search.best_cost,
    }
}

struct TrackBuilder {
    id: u32,
    points: Vec<TrackPoint>,
}

impl TrackBuilder {
    fn head(&self) -> (f64, f64) {
        let p = self.points.last().expect("builders are never empty");
        (p.x, p.y)
    }

    fn last_frame(&self) -> usize {
        self.points.last().expect("builders are never empty").frame
    }
}

/// Link per-frame detections into tracks, returning the tracks and the
/// total penalized linking cost (the quantity the step optimizer
/// minimizes, summed over frame steps).
pub fn link_detections_with_cost(
    per_frame: &[Vec<(f64, f64)>],
    params: &LinkParams,
) -> (Vec<Track>, f64) {
    let mut builders: Vec<TrackBuilder> = Vec::new();
    let mut next_id = 0u32;
    let mut total_cost = 0.0;

    for (frame, detections) in per_frame.iter().enumerate() {
        // A head last seen at frame f may still link while the gap
        // (frames with no observation) does not exceed the memory.
        let eligible: Vec<usize> = (0..builders.len())
            .filter(|&b| frame - builders[b].last_frame() - 1 <= params.memory_frames)
            .collect();
        let heads: Vec<(f64, f64)> = eligible.iter().map(|&b| builders[b].head()).collect();
        let step = solve_step(&heads, detections, params.search_range_px);
        total_cost += step.cost;

        let mut taken = vec![false; detections.len()];
        for (slot, &builder_idx) in eligible.iter().enumerate() {
            if let Some(j) = step.assignment[slot] {
                taken[j] = true;
                builders[builder_idx].points.push(TrackPoint {
                    frame,
                    x: detections[j].0,
                    y: detections[j].1,
                });
            }
        }
        for (j, &(x, y)) in detections.iter().enumerate() {
            if !taken[j] {
                builders.push(TrackBuilder {
                    id: next_id,
                    points: vec![TrackPoint { frame, x, y }],
                });
                next_id += 1;
            }
        }
    }

    let tracks = builders
        .into_iter()
        .map(|b| Track::new(b.id, b.points, TrackSource::Automated))
        .collect();
    (tracks, total_cost)
}

/// See [`link_detections_with_cost`]; discards the cost.
pub fn link_detections(per_frame: &[Vec<(f64, f64)>], params: &LinkParams) -> Vec<Track> {
    link_detections_with_cost(per_frame, params).0
}
