//! Points, the distance interface, packing bounds and seeded point generation.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node identifier: the points of a set are numbered `0..n`.
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: NodeId,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(id: NodeId, coords: Vec<f64>) -> Self {
        Self { id, coords }
    }

    pub fn planar(id: NodeId, x: f64, y: f64) -> Self {
        Self::new(id, vec![x, y])
    }
}

/// A distance function over coordinate vectors of equal length.
pub trait Metric {
    fn dist(&self, a: &[f64], b: &[f64]) -> f64;
}

/// The Euclidean (l2) metric, the only one shipped.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Metric for Euclidean {
    #[inline]
    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

/// Euclidean distance between two points.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    if p.coords.len() != q.coords.len() {
        return Err(Error::DimensionMismatch { left: p.coords.len(), right: q.coords.len() });
    }
    Ok(Euclidean.dist(&p.coords, &q.coords))
}

/// Maximum number of points with pairwise distance at least `r` inside a
/// ball of radius `big_r` in a metric of doubling dimension `d`:
/// `floor((4R/r)^d)`.
pub fn packing_bound(big_r: f64, r: f64, d: u32) -> Result<u64> {
    if !(big_r > 0.0) || !(r > 0.0) || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "packing_bound needs R > 0, r > 0, d >= 1 (got R={big_r}, r={r}, d={d})"
        )));
    }
    let value = (4.0 * big_r / r).powi(d as i32);
    // Absorb representation error such as 4/0.01 = 399.99999999999994.
    Ok((value * (1.0 + 1e-12)).floor() as u64)
}

/// An ordered set of points with ids `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<Point>,
    dimension: usize,
    doubling_dim_hint: u32,
}

impl PointSet {
    /// Builds a set, checking that ids are `0..n` in order and that every
    /// point has the same dimension. The doubling dimension hint defaults to
    /// the embedding dimension.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let dimension = points.first().map_or(2, |p| p.coords.len());
        if dimension == 0 {
            return Err(Error::InvalidParameter("points need at least one coordinate".into()));
        }
        for (position, p) in points.iter().enumerate() {
            if p.id != position {
                return Err(Error::BadPointIds { position, found: p.id });
            }
            if p.coords.len() != dimension {
                return Err(Error::DimensionMismatch { left: dimension, right: p.coords.len() });
            }
        }
        Ok(Self { points, dimension, doubling_dim_hint: dimension as u32 })
    }

    /// Builds a planar set from coordinates, numbering points in order.
    pub fn from_xy(xy: &[(f64, f64)]) -> Self {
        let points = xy.iter().enumerate().map(|(i, &(x, y))| Point::planar(i, x, y)).collect();
        Self { points, dimension: 2, doubling_dim_hint: 2 }
    }

    pub fn with_doubling_dim_hint(mut self, d: u32) -> Self {
        self.doubling_dim_hint = d.max(1);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn doubling_dim_hint(&self) -> u32 {
        self.doubling_dim_hint
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, id: NodeId) -> &Point {
        &self.points[id]
    }

    pub fn coords(&self, id: NodeId) -> &[f64] {
        &self.points[id].coords
    }

    #[inline]
    pub fn dist(&self, a: NodeId, b: NodeId) -> f64 {
        Euclidean.dist(&self.points[a].coords, &self.points[b].coords)
    }

    /// Re-numbers the selected points as `0..ids.len()` in the given order.
    /// Returns the local set; `ids[local]` maps back to the global id.
    pub fn subset(&self, ids: &[NodeId]) -> PointSet {
        let points =
            ids.iter().enumerate().map(|(local, &g)| Point::new(local, self.points[g].coords.clone())).collect();
        PointSet { points, dimension: self.dimension, doubling_dim_hint: self.doubling_dim_hint }
    }

    /// Writes `id,x,y` CSV (with a trailing `z` column in 3D).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let axes = ["x", "y", "z"];
        let mut header = vec!["id".to_string()];
        header.extend(axes.iter().take(self.dimension).map(|s| s.to_string()));
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.id.to_string()];
            row.extend(p.coords.iter().map(|c| format_coord(*c)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the CSV written by [`PointSet::write_csv`]. Errors name the
    /// offending line (1-based, header is line 1).
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("id") || header.len() < 2 {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `id,x,y`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let dimension = header.len() - 1;
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
            if rec.len() != dimension + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", dimension + 1, rec.len()),
                });
            }
            let id: NodeId = rec[0]
                .trim()
                .parse()
                .map_err(|e| Error::Parse { line, message: format!("bad id `{}`: {e}", &rec[0]) })?;
            let coords = (1..=dimension)
                .map(|k| {
                    rec[k]
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse { line, message: format!("bad coordinate `{}`: {e}", &rec[k]) })
                })
                .collect::<Result<Vec<_>>>()?;
            if coords.iter().any(|c| !c.is_finite()) {
                return Err(Error::Parse { line, message: "non-finite coordinate".into() });
            }
            points.push(Point::new(id, coords));
        }
        PointSet::new(points).map_err(|e| match e {
            Error::BadPointIds { position, found } => {
                Error::Parse { line: position + 2, message: format!("id {found} out of order (expected {position})") }
            }
            other => other,
        })
    }
}

/// Shortest round-trippable decimal form of a coordinate.
pub(crate) fn format_coord(c: f64) -> String {
    format!("{c:?}")
}

/// `n` points drawn i.i.d. uniformly from `[0, side)^2`.
///
/// The stream is ChaCha8 seeded with `seed_from_u64(seed)`; each point draws
/// `x` then `y` as `side * U[0,1)` using rand's standard `f64` sampler, so a
/// run is bit-reproducible across platforms.
pub fn generate_uniform_square(n: usize, side: f64, seed: u64) -> Result<PointSet> {
    if n == 0 || !(side > 0.0) || !side.is_finite() {
        return Err(Error::InvalidParameter(format!("need n >= 1 and side > 0 (got n={n}, side={side})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xy: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let x = rng.gen::<f64>() * side;
            let y = rng.gen::<f64>() * side;
            (x, y)
        })
        .collect();
    Ok(PointSet::from_xy(&xy))
}
