//! Level-set extraction on rectangular scalar grids.
//!
//! Marching squares over a sampled scalar field, with segment chaining into
//! polylines.  Crossings are keyed by the grid edge they sit on, so chains
//! connect exactly without coordinate quantization.  Saddle cells are
//! disambiguated by the cell-center average.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A scalar function sampled on a uniform rectangular grid.
///
/// Node layout matches the eikonal grids: row-major with `ix * ny + iy`.
#[derive(Clone, Debug)]
pub struct ScalarGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    /// Evaluate `f` on an `nx` by `ny` grid over the given ranges.
    pub fn sample(
        nx: usize,
        ny: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<ScalarGrid> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid("scalar grid needs at least 2 nodes per axis"));
        }
        let (x0, x1) = x_range;
        let (y0, y1) = y_range;
        if !(x1 > x0) || !(y1 > y0) {
            return Err(Error::invalid("scalar grid ranges must be increasing"));
        }
        let mut values = Vec::with_capacity(nx * ny);
        for ix in 0..nx {
            let x = x0 + (x1 - x0) * ix as f64 / (nx - 1) as f64;
            for iy in 0..ny {
                let y = y0 + (y1 - y0) * iy as f64 / (ny - 1) as f64;
                let v = f(x, y);
                if !v.is_finite() {
                    return Err(Error::invalid(format!("field value at ({x}, {y}) = {v}")));
                }
                values.push(v);
            }
        }
        Ok(ScalarGrid { nx, ny, x0, x1, y0, y1, values })
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.idx(ix, iy)]
    }

    pub fn x_of(&self, ix: usize) -> f64 {
        self.x0 + (self.x1 - self.x0) * ix as f64 / (self.nx - 1) as f64
    }

    pub fn y_of(&self, iy: usize) -> f64 {
        self.y0 + (self.y1 - self.y0) * iy as f64 / (self.ny - 1) as f64
    }
}

/// One chained level-set component.  `closed` when the two ends meet.
#[derive(Clone, Debug)]
pub struct Contour {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

impl Contour {
    pub fn arc_length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .sum()
    }
}

/// A grid edge carrying at most one level crossing.  `axis` 0 runs along x
/// (to `(ix+1, iy)`), axis 1 along y (to `(ix, iy+1)`).
type EdgeKey = (usize, usize, u8);

/// Extract the `f = level` set as chained polylines.
///
/// Corners with `value > level` count as inside; edges with a sign change
/// get a linearly interpolated crossing.  Components are returned in cell
/// scan order and each open component ends on the grid frame.
pub fn iso_contours(grid: &ScalarGrid, level: f64) -> Vec<Contour> {
    let mut crossings: HashMap<EdgeKey, (f64, f64)> = HashMap::new();
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();

    let cross = |crossings: &mut HashMap<EdgeKey, (f64, f64)>, key: EdgeKey| {
        crossings.entry(key).or_insert_with(|| {
            let (ix, iy, axis) = key;
            let (v0, v1) = if axis == 0 {
                (grid.value(ix, iy), grid.value(ix + 1, iy))
            } else {
                (grid.value(ix, iy), grid.value(ix, iy + 1))
            };
            let t = ((level - v0) / (v1 - v0)).clamp(0.0, 1.0);
            if axis == 0 {
                (grid.x_of(ix) + t * (grid.x_of(ix + 1) - grid.x_of(ix)), grid.y_of(iy))
            } else {
                (grid.x_of(ix), grid.y_of(iy) + t * (grid.y_of(iy + 1) - grid.y_of(iy)))
            }
        });
    };

    for ix in 0..grid.nx - 1 {
        for iy in 0..grid.ny - 1 {
            let v = [
                grid.value(ix, iy),
                grid.value(ix + 1, iy),
                grid.value(ix + 1, iy + 1),
                grid.value(ix, iy + 1),
            ];
            let mut case = 0usize;
            for (bit, &corner) in v.iter().enumerate() {
                if corner > level {
                    case |= 1 << bit;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            let bottom: EdgeKey = (ix, iy, 0);
            let top: EdgeKey = (ix, iy + 1, 0);
            let left: EdgeKey = (ix, iy, 1);
            let right: EdgeKey = (ix + 1, iy, 1);
            let pairs: &[(EdgeKey, EdgeKey)] = match case {
                1 | 14 => &[(left, bottom)],
                2 | 13 => &[(bottom, right)],
                3 | 12 => &[(left, right)],
                4 | 11 => &[(right, top)],
                6 | 9 => &[(bottom, top)],
                7 | 8 => &[(top, left)],
                // the two saddle cases: the center average decides which
                // diagonal pairing the level set takes through the cell
                5 => {
                    if v.iter().sum::<f64>() / 4.0 > level {
                        &[(left, top), (bottom, right)]
                    } else {
                        &[(left, bottom), (right, top)]
                    }
                }
                10 => {
                    if v.iter().sum::<f64>() / 4.0 > level {
                        &[(bottom, left), (top, right)]
                    } else {
                        &[(bottom, right), (top, left)]
                    }
                }
                _ => unreachable!("cases 0 and 15 are skipped"),
            };
            for &(a, b) in pairs {
                cross(&mut crossings, a);
                cross(&mut crossings, b);
                segments.push((a, b));
            }
        }
    }

    chain_segments(&segments, &crossings)
}

/// Link edge-to-edge segments into maximal polylines.
fn chain_segments(
    segments: &[(EdgeKey, EdgeKey)],
    crossings: &HashMap<EdgeKey, (f64, f64)>,
) -> Vec<Contour> {
    let mut adjacency: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(i);
        adjacency.entry(b).or_default().push(i);
    }

    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut chain = vec![a, b];

        // grow forwards from the tail, then backwards from the head
        for reverse in [false, true] {
            if reverse {
                chain.reverse();
            }
            loop {
                let tail = *chain.last().unwrap();
                if chain.len() > 2 && tail == chain[0] {
                    break; // closed up
                }
                let Some(next) = adjacency
                    .get(&tail)
                    .and_then(|ids| ids.iter().find(|&&i| !used[i]))
                    .copied()
                else {
                    break;
                };
                used[next] = true;
                let (a, b) = segments[next];
                chain.push(if a == tail { b } else { a });
            }
        }

        let closed = chain.len() > 2 && chain[0] == *chain.last().unwrap();
        if closed {
            chain.pop();
        }
        let points: Vec<(f64, f64)> = chain.iter().map(|k| crossings[k]).collect();
        out.push(Contour { points, closed });
    }
    out
}

/// Indices where `values` attains a local maximum over a centered window of
/// two neighbors per side.
///
/// A node qualifies when nothing in its window exceeds it by more than
/// `tol` and it exceeds at least one window member by more than `tol`; ties
/// within `tol` then spread the mark across the whole plateau, so flat-top
/// maxima are reported as index runs rather than dropped.  `closed` wraps
/// the window (and plateau spreading) around the ends.
pub fn window_maxima(values: &[f64], closed: bool, tol: f64) -> Vec<usize> {
    let n = values.len();
    if n < 3 {
        return Vec::new();
    }
    let window = |i: usize| -> Vec<usize> {
        let mut w = Vec::with_capacity(4);
        for step in [-2isize, -1, 1, 2] {
            let j = i as isize + step;
            if closed {
                w.push(j.rem_euclid(n as isize) as usize);
            } else if (0..n as isize).contains(&j) {
                w.push(j as usize);
            }
        }
        w
    };

    let mut marked = vec![false; n];
    for i in 0..n {
        let w = window(i);
        let dominated = w.iter().any(|&j| values[j] > values[i] + tol);
        let dominates = w.iter().any(|&j| values[i] > values[j] + tol);
        marked[i] = !dominated && dominates;
    }

    // spread across plateaus: neighbors at the same height (within tol) of a
    // marked node are part of the same maximum
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !marked[i] {
                continue;
            }
            for step in [-1isize, 1] {
                let j = i as isize + step;
                let j = if closed {
                    j.rem_euclid(n as isize) as usize
                } else if (0..n as isize).contains(&j) {
                    j as usize
                } else {
                    continue;
                };
                if !marked[j]
                    && (values[j] - values[i]).abs() <= tol
                    && !window(j).iter().any(|&k| values[k] > values[j] + tol)
                {
                    marked[j] = true;
                    changed = true;
                }
            }
        }
    }

    (0..n).filter(|&i| marked[i]).collect()
}
