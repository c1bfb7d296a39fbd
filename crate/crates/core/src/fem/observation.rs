use std::fmt::Write as _;
use std::path::Path;

use super::TriMesh;
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::{Error, Result};

/// Barycentric weights at or below this magnitude are dropped from `B`.
const WEIGHT_CUTOFF: f64 = 1e-14;

/// Pointwise observation locations strictly inside `[0, Lx] × [0, Ly]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    points: Vec<[f64; 2]>,
}

impl ObservationSet {
    pub fn new(points: Vec<[f64; 2]>, lx: f64, ly: f64) -> Result<Self> {
        for &[x, y] in &points {
            if !(x > 0.0 && x < lx && y > 0.0 && y < ly) {
                return Err(Error::Location { x, y });
            }
        }
        Ok(ObservationSet { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One `x y` pair per line, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(48 * self.points.len());
        for [x, y] in &self.points {
            writeln!(s, "{x:.16e} {y:.16e}").expect("writing to a String");
        }
        s
    }

    /// Parses the format of [`ObservationSet::to_text`]; blank lines and
    /// `#` comments are ignored.
    pub fn from_text(text: &str, lx: f64, ly: f64) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {s:?}: {e}", lineno + 1)))
            };
            match fields.as_slice() {
                [x, y] => points.push([parse(x)?, parse(y)?]),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected two coordinates, found {}",
                        lineno + 1,
                        fields.len()
                    )))
                }
            }
        }
        ObservationSet::new(points, lx, ly)
    }

    pub fn read(path: &Path, lx: f64, ly: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Self::from_text(&text, lx, ly).map_err(|e| e.context(path.display().to_string()))
    }
}

/// Observation operator `B` with `B_ij = φ_j(x_i)`.
pub fn assemble_observation(mesh: &TriMesh, points: &[[f64; 2]]) -> Result<SparseMatrix> {
    let mut t = TripletBuilder::with_capacity(points.len(), mesh.num_vertices(), 3 * points.len());
    for (i, &[x, y]) in points.iter().enumerate() {
        let loc = mesh.locate(x, y)?;
        for (v, w) in loc.vertices.iter().zip(loc.weights) {
            if w.abs() > WEIGHT_CUTOFF {
                t.push(i, *v, w);
            }
        }
    }
    t.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_centroid_and_midpoint_rows() {
        let m = TriMesh::new(1.45, 1.0, 5, 4).unwrap();
        let v = m.vertex_index(2, 3);
        let p = m.vertices()[v];
        let tri = m.triangle_points(7);
        let centroid = [
            (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0,
            (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0,
        ];
        let mid = [(tri[0][0] + tri[1][0]) / 2.0, (tri[0][1] + tri[1][1]) / 2.0];
        let b = assemble_observation(&m, &[p, centroid, mid]).unwrap();
        assert_eq!(b.row(0).collect::<Vec<_>>(), vec![(v, 1.0)]);
        let row1: Vec<_> = b.row(1).collect();
        assert_eq!(row1.len(), 3);
        for (_, w) in row1 {
            assert!((w - 1.0 / 3.0).abs() < 1e-14);
        }
        let row2: Vec<_> = b.row(2).collect();
        assert_eq!(row2.len(), 2);
        for (_, w) in row2 {
            assert!((w - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn rows_are_partitions_of_unity() {
        let m = TriMesh::new(1.45, 1.0, 9, 7).unwrap();
        let pts: Vec<[f64; 2]> = (0..50)
            .map(|k| {
                let t = k as f64 * 0.618_033_988_75;
                [1.45 * t.fract(), (t * 1.3).fract()]
            })
            .collect();
        let b = assemble_observation(&m, &pts).unwrap();
        for i in 0..b.nrows() {
            assert!(b.row(i).count() <= 3);
            let s: f64 = b.row(i).map(|(_, w)| w).sum();
            assert!((s - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn outside_point_is_rejected() {
        let m = TriMesh::new(1.0, 1.0, 2, 2).unwrap();
        assert!(matches!(
            assemble_observation(&m, &[[1.5, 0.5]]),
            Err(Error::Location { .. })
        ));
        assert!(ObservationSet::new(vec![[0.0, 0.5]], 1.0, 1.0).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let pts = vec![[0.1, 0.2], [1.0 / 3.0, std::f64::consts::FRAC_1_SQRT_2], [1.4499999, 1e-7]];
        let obs = ObservationSet::new(pts.clone(), 1.45, 1.0).unwrap();
        let text = obs.to_text();
        let back = ObservationSet::from_text(&format!("# header\n\n{text}"), 1.45, 1.0).unwrap();
        assert_eq!(back.points(), pts.as_slice());
        assert!(ObservationSet::from_text("0.1 0.2 0.3\n", 1.0, 1.0).is_err());
        assert!(ObservationSet::from_text("0.1 abc\n", 1.0, 1.0).is_err());
    }

    #[test]
    fn observation_of_interpolant_converges() {
        let f = |x: f64, y: f64| (2.0 * x).sin() * (y + 0.3).exp();
        let pts = [[0.31, 0.77], [1.1, 0.2], [0.9, 0.55]];
        let mut errors = Vec::new();
        for n in [4usize, 8, 16, 32, 64] {
            let m = TriMesh::new(1.45, 1.0, n, n).unwrap();
            let nodal: Vec<f64> = m.vertices().iter().map(|p| f(p[0], p[1])).collect();
            let b = assemble_observation(&m, &pts).unwrap();
            let err = b
                .spmv(&nodal)
                .unwrap()
                .iter()
                .zip(&pts)
                .map(|(v, p)| (v - f(p[0], p[1])).abs())
                .fold(0.0, f64::max);
            errors.push(err);
        }
        // Linear interpolation error is O(h²); the position of a fixed point
        // within its cell varies, so compare across the whole sweep.
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
        assert!(errors[4] < errors[0] / 64.0, "{errors:?}");
    }
}
