use crate::{Error, Result};

/// Uniform triangulation of `[0, Lx] × [0, Ly]`.
///
/// Vertex `(i, j)` sits at `(i·Lx/nx, j·Ly/ny)` with index `i + j(nx+1)`.
/// Cell `(i, j)` is split along its lower-left to upper-right diagonal into
/// triangles `2(i + j·nx)` = (v00, v10, v11) and `2(i + j·nx) + 1` =
/// (v00, v11, v01), both counter-clockwise.
#[derive(Debug, Clone)]
pub struct TriMesh {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

/// A boundary edge `a → b`, oriented counter-clockwise within `triangle`,
/// whose remaining vertex is `opposite`.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub opposite: usize,
    pub triangle: usize,
}

/// Containing triangle and barycentric weights of a point.
#[derive(Debug, Clone, Copy)]
pub struct Location {
    pub triangle: usize,
    pub vertices: [usize; 3],
    pub weights: [f64; 3],
}

impl TriMesh {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidArgument(format!("domain extents must be positive, got {lx} x {ly}")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("cell counts must be at least 1, got {nx} x {ny}")));
        }
        let (hx, hy) = (lx / nx as f64, ly / ny as f64);
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            // Pin the far edges exactly to the domain extents.
            let y = if j == ny { ly } else { j as f64 * hy };
            for i in 0..=nx {
                let x = if i == nx { lx } else { i as f64 * hx };
                vertices.push([x, y]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        let v = |i: usize, j: usize| i + j * (nx + 1);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v11, v01) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Ok(TriMesh {
            lx,
            ly,
            nx,
            ny,
            vertices,
            triangles,
        })
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Mesh size: the longest triangle edge, i.e. the cell diagonal.
    pub fn h(&self) -> f64 {
        self.hx().hypot(self.hy())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        i + j * (self.nx + 1)
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Signed area of triangle `t` (positive for counter-clockwise order).
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_points(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Gradients of the three P1 basis functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.triangle_points(t);
        let two_area = 2.0 * self.triangle_area(t);
        let g = |pj: [f64; 2], pk: [f64; 2]| [(pj[1] - pk[1]) / two_area, (pk[0] - pj[0]) / two_area];
        [g(p1, p2), g(p2, p0), g(p0, p1)]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        let (i, j) = (v % (self.nx + 1), v / (self.nx + 1));
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// All boundary edges: bottom, right, top and left sides in turn.
    pub fn boundary_edges(&self) -> Vec<BoundaryEdge> {
        let (nx, ny) = (self.nx, self.ny);
        let mut edges = Vec::with_capacity(2 * (nx + ny));
        let cell = |i: usize, j: usize| 2 * (i + j * nx);
        for i in 0..nx {
            let t = cell(i, 0);
            let [v00, v10, v11] = self.triangles[t];
            edges.push(BoundaryEdge { a: v00, b: v10, opposite: v11, triangle: t });
        }
        for j in 0..ny {
            let t = cell(nx - 1, j);
            let [v00, v10, v11] = self.triangles[t];
            edges.push(BoundaryEdge { a: v10, b: v11, opposite: v00, triangle: t });
        }
        for i in 0..nx {
            let t = cell(i, ny - 1) + 1;
            let [v00, v11, v01] = self.triangles[t];
            edges.push(BoundaryEdge { a: v11, b: v01, opposite: v00, triangle: t });
        }
        for j in 0..ny {
            let t = cell(0, j) + 1;
            let [v00, v11, v01] = self.triangles[t];
            edges.push(BoundaryEdge { a: v01, b: v00, opposite: v11, triangle: t });
        }
        edges
    }

    /// Finds the triangle containing `(x, y)` in the closed domain.
    pub fn locate(&self, x: f64, y: f64) -> Result<Location> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 || x > self.lx || y > self.ly {
            return Err(Error::Location { x, y });
        }
        let (hx, hy) = (self.hx(), self.hy());
        let i = ((x / hx).floor() as usize).min(self.nx - 1);
        let j = ((y / hy).floor() as usize).min(self.ny - 1);
        let s = ((x - i as f64 * hx) / hx).clamp(0.0, 1.0);
        let t = ((y - j as f64 * hy) / hy).clamp(0.0, 1.0);
        let tri = 2 * (i + j * self.nx);
        let loc = if s >= t {
            Location {
                triangle: tri,
                vertices: self.triangles[tri],
                weights: [1.0 - s, s - t, t],
            }
        } else {
            Location {
                triangle: tri + 1,
                vertices: self.triangles[tri + 1],
                weights: [1.0 - t, s, t - s],
            }
        };
        Ok(loc)
    }
}
