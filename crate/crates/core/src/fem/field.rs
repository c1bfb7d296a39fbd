use super::{GrayImage, TriMesh};
use crate::{Error, Result};

/// One real value per mesh vertex.
#[derive(Debug, Clone)]
pub struct NodalField<'m> {
    mesh: &'m TriMesh,
    values: Vec<f64>,
}

impl<'m> NodalField<'m> {
    pub fn new(mesh: &'m TriMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a mesh with {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        Ok(NodalField { mesh, values })
    }

    /// Samples `f` at every vertex.
    pub fn from_fn(mesh: &'m TriMesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|&[x, y]| f(x, y)).collect();
        NodalField { mesh, values }
    }

    pub fn mesh(&self) -> &'m TriMesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The vertex grid as an image, top row at `y = Ly`.
    pub fn to_image(&self) -> GrayImage {
        let (nx, ny) = (self.mesh.nx(), self.mesh.ny());
        let mut pixels = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in (0..=ny).rev() {
            for i in 0..=nx {
                pixels.push(self.values[self.mesh.vertex_index(i, j)]);
            }
        }
        GrayImage::new(nx + 1, ny + 1, pixels).expect("grid dimensions match")
    }
}
