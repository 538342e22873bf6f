//! Latin hypercube designs, farthest-point down-sampling and ALM candidate sets.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{sq_dist, Points};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Lhd,
    Downsampled,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub points: Points,
    pub provenance: Provenance,
}

impl Design {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }
}

/// Random Latin hypercube of `m` points in `[0,1]^p`: each column is a random
/// permutation of the strata `[i/m, (i+1)/m)` with a uniform offset inside
/// each stratum.
pub fn random_lhd(m: usize, p: usize, seed: u64) -> Result<Design> {
    if m == 0 || p == 0 {
        return Err(Error::InvalidArgument(format!("random_lhd needs m, p ≥ 1 (got {m}, {p})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0; m * p];
    let mut perm: Vec<usize> = (0..m).collect();
    for j in 0..p {
        perm.shuffle(&mut rng);
        for (i, &stratum) in perm.iter().enumerate() {
            let u: f64 = rng.random();
            // Keep the point strictly inside its stratum even if u rounds up.
            let v = ((stratum as f64 + u) / m as f64).min((stratum + 1) as f64 / m as f64 - f64::EPSILON);
            data[i * p + j] = v.max(stratum as f64 / m as f64);
        }
    }
    Ok(Design {
        points: Points::new(p, data)?,
        provenance: Provenance::Lhd,
    })
}

/// Greedy farthest-point (maximin) subset of size `m`.
///
/// The point nearest the centroid anchors the traversal. For `m = 1` it is
/// the selection; otherwise the first selected point is the one farthest from
/// the anchor, and each further point maximizes its distance to the points
/// already selected. Ties go to the lowest index. The selection keeps the
/// input order.
pub fn downsample(d: &Design, m: usize, _seed: u64) -> Result<Design> {
    let n = d.len();
    if m > n {
        return Err(Error::InvalidArgument(format!("cannot down-sample {n} points to {m}")));
    }
    if m == n {
        return Ok(Design {
            points: d.points.clone(),
            provenance: Provenance::Downsampled,
        });
    }
    if m == 0 {
        return Ok(Design {
            points: Points::empty(d.dim()),
            provenance: Provenance::Downsampled,
        });
    }
    let p = d.dim();
    let pts = &d.points;
    let mut centroid = vec![0.0; p];
    for row in pts.rows() {
        for (c, v) in centroid.iter_mut().zip(row) {
            *c += v;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= n as f64);
    let anchor = argmax((0..n).map(|i| -sq_dist(pts.row(i), &centroid)));

    let mut chosen = Vec::with_capacity(m);
    if m == 1 {
        chosen.push(anchor);
    } else {
        let first = argmax((0..n).map(|i| sq_dist(pts.row(i), pts.row(anchor))));
        chosen.push(first);
        // Unselected points kept compact: coordinates, original index and
        // squared distance to the nearest selected point.
        let mut coords: Vec<f64> = Vec::with_capacity((n - 1) * p);
        let mut index: Vec<usize> = Vec::with_capacity(n - 1);
        for i in (0..n).filter(|&i| i != first) {
            coords.extend_from_slice(pts.row(i));
            index.push(i);
        }
        let nearest = vec![f64::INFINITY; n - 1];
        let last = pts.row(first).to_vec();
        let mut state = Traversal {
            coords,
            index,
            nearest,
            last,
            p,
        };
        while chosen.len() < m {
            let k = match p {
                1 => state.sweep::<1>(),
                2 => state.sweep::<2>(),
                3 => state.sweep::<3>(),
                4 => state.sweep::<4>(),
                5 => state.sweep::<5>(),
                6 => state.sweep::<6>(),
                7 => state.sweep::<7>(),
                8 => state.sweep::<8>(),
                _ => state.sweep_dyn(),
            };
            chosen.push(state.take(k));
        }
    }
    chosen.sort_unstable();
    Ok(Design {
        points: pts.select(&chosen),
        provenance: Provenance::Downsampled,
    })
}

struct Traversal {
    coords: Vec<f64>,
    index: Vec<usize>,
    nearest: Vec<f64>,
    last: Vec<f64>,
    p: usize,
}

impl Traversal {
    /// Updates nearest distances against `last` and returns the position of
    /// the farthest remaining point (lowest original index on ties).
    fn sweep<const P: usize>(&mut self) -> usize {
        let last: [f64; P] = self.last[..P].try_into().expect("dimension");
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (k, (row, near)) in self.coords.chunks_exact(P).zip(self.nearest.iter_mut()).enumerate() {
            let mut dd = 0.0;
            for j in 0..P {
                let t = row[j] - last[j];
                dd += t * t;
            }
            let v = near.min(dd);
            *near = v;
            if v > best.1 || (v == best.1 && self.index[k] < self.index[best.0]) {
                best = (k, v);
            }
        }
        best.0
    }

    fn sweep_dyn(&mut self) -> usize {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (k, (row, near)) in self.coords.chunks_exact(self.p).zip(self.nearest.iter_mut()).enumerate() {
            let v = near.min(sq_dist(row, &self.last));
            *near = v;
            if v > best.1 || (v == best.1 && self.index[k] < self.index[best.0]) {
                best = (k, v);
            }
        }
        best.0
    }

    /// Removes position `k` from the pool, making it the new `last`, and
    /// returns its original index.
    fn take(&mut self, k: usize) -> usize {
        let p = self.p;
        let chosen = self.index[k];
        self.last.copy_from_slice(&self.coords[k * p..(k + 1) * p]);
        let tail = self.index.len() - 1;
        self.index.swap_remove(k);
        self.nearest.swap_remove(k);
        if k != tail {
            let (head, rest) = self.coords.split_at_mut(tail * p);
            head[k * p..(k + 1) * p].copy_from_slice(&rest[..p]);
        }
        self.coords.truncate(tail * p);
        chosen
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Number of ALM candidates for dimension `p`.
pub fn candidate_count(p: usize) -> usize {
    100 * (p + 1) * (p + 1)
}

/// Size of the LHD the candidates are down-sampled from.
pub fn candidate_pool_count(p: usize) -> usize {
    1000 * (p + 1) * (p + 1)
}

/// `100(p+1)²` space-filling candidates taken from a random LHD of
/// `1000(p+1)²` points.
pub fn candidate_set(p: usize, seed: u64) -> Result<Design> {
    let pool = random_lhd(candidate_pool_count(p), p, seed)?;
    downsample(&pool, candidate_count(p), seed)
}

/// Space-filling initial design: `m` points down-sampled from a random LHD of `pool` points.
pub fn maximin_initial(m: usize, p: usize, pool: usize, seed: u64) -> Result<Design> {
    downsample(&random_lhd(pool.max(m), p, seed)?, m, seed)
}

/// Writes a design as CSV with header `x1,…,xp`.
pub fn write_csv<W: Write>(d: &Design, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=d.dim()).map(|j| format!("x{j}")))?;
    for row in d.points.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a design written by [`write_csv`]. Lines starting with `#` are skipped.
pub fn read_csv<R: Read>(input: R) -> Result<Design> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let p = headers.len();
    for (j, h) in headers.iter().enumerate() {
        if h != format!("x{}", j + 1) {
            return Err(Error::Parse {
                row: 0,
                column: h.to_string(),
                message: format!("expected header x{}", j + 1),
            });
        }
    }
    let mut pts = Points::empty(p.max(1));
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row: Vec<f64> = rec
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    row: i + 1,
                    column: headers[j].to_string(),
                    message: format!("'{s}': {e}"),
                })
            })
            .collect::<Result<_>>()?;
        pts.push(&row)?;
    }
    Ok(Design {
        points: pts,
        provenance: Provenance::File,
    })
}
