use super::SplitMix64;
use crate::fem::{NodalField, ObservationSet, TriMesh};
use crate::Result;

/// Relative distance from the boundary below which a sampled point is
/// redrawn.
pub const BOUNDARY_MARGIN: f64 = 1e-9;

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// `n_obs` points uniform in `(0, Lx) × (0, Ly)` from the SplitMix64 stream
/// of `seed`: each point draws `x` then `y` as `(next_u64 / 2⁶⁴)·extent`,
/// and the pair is redrawn when either coordinate lies within
/// [`BOUNDARY_MARGIN`]`·extent` of the boundary.
pub fn generate_observations(seed: u64, n_obs: usize, lx: f64, ly: f64) -> Result<ObservationSet> {
    let mut rng = SplitMix64::new(seed);
    let inside = |v: f64, extent: f64| v > BOUNDARY_MARGIN * extent && v < extent - BOUNDARY_MARGIN * extent;
    let mut points = Vec::with_capacity(n_obs);
    while points.len() < n_obs {
        let x = rng.next_u64() as f64 / TWO_POW_64 * lx;
        let y = rng.next_u64() as f64 / TWO_POW_64 * ly;
        if inside(x, lx) && inside(y, ly) {
            points.push([x, y]);
        }
    }
    ObservationSet::new(points, lx, ly)
}

/// Description of [`synth_source`] written next to its outputs.
pub const SYNTHETIC_SOURCE_FORMULA: &str = "q(x, y) = min(1, block(x, y) + bump(x, y))\n\
block(x, y) = 1 if 0.2 Lx <= x <= 0.45 Lx and 0.25 Ly <= y <= 0.75 Ly, else 0\n\
bump(x, y) = 0.8 exp(-((x - 0.72 Lx)^2 + (y - 0.5 Ly)^2) / (2 (0.1 Ly)^2))\n";

/// Synthetic true source on `mesh`: an indicator block with sharp edges
/// plus a smooth Gaussian bump, clipped to `[0, 1]`
/// (see [`SYNTHETIC_SOURCE_FORMULA`]).
pub fn synth_source(mesh: &TriMesh) -> NodalField<'_> {
    let (lx, ly) = (mesh.lx(), mesh.ly());
    NodalField::from_fn(mesh, |x, y| {
        let block = if (0.2 * lx..=0.45 * lx).contains(&x) && (0.25 * ly..=0.75 * ly).contains(&y) {
            1.0
        } else {
            0.0
        };
        let width = 0.1 * ly;
        let r2 = (x - 0.72 * lx).powi(2) + (y - 0.5 * ly).powi(2);
        let bump = 0.8 * (-r2 / (2.0 * width * width)).exp();
        f64::min(1.0, block + bump)
    })
}
