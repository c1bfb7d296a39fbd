use super::TriMesh;
use crate::linalg::{symmetric_eigenvalues, SparseMatrix, TripletBuilder};
use crate::{Error, Result};

/// Default Nitsche constant: the boundary penalty is `penalty / h_edge`.
pub const DEFAULT_NITSCHE_PENALTY: f64 = 10.0;

/// Default shift `t` of the regularization operator `Δ_N + tI`.
pub const DEFAULT_REGULARIZATION_SHIFT: f64 = 0.1;

/// Largest stiffness dimension for which coercivity is verified by a dense
/// eigensolve.
pub const COERCIVITY_CHECK_LIMIT: usize = 3000;

/// Consistent P1 mass matrix `W_ij = ∫ φ_i φ_j`.
pub fn assemble_mass(mesh: &TriMesh) -> SparseMatrix {
    let mut t = TripletBuilder::with_capacity(mesh.num_vertices(), mesh.num_vertices(), 9 * mesh.num_triangles());
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let scale = mesh.triangle_area(k) / 12.0;
        for (a, &va) in tri.iter().enumerate() {
            for (b, &vb) in tri.iter().enumerate() {
                t.push(va, vb, if a == b { 2.0 * scale } else { scale });
            }
        }
    }
    t.build().expect("mesh indices are in range")
}

/// Row sums of the mass matrix, `(W_L)_ii = Σ_j W_ij`.
pub fn lump_mass(w: &SparseMatrix) -> Result<Vec<f64>> {
    let mut d = Vec::with_capacity(w.nrows());
    for i in 0..w.nrows() {
        let s: f64 = w.row(i).map(|(_, v)| v).sum();
        if s.is_nan() || s <= 0.0 {
            return Err(Error::NotPositiveDefinite { row: i, pivot: s });
        }
        d.push(s);
    }
    Ok(d)
}

/// Neumann stiffness `K_ij = ∫ ∇φ_i · ∇φ_j`.
pub fn assemble_neumann_stiffness(mesh: &TriMesh) -> SparseMatrix {
    let mut t = TripletBuilder::with_capacity(mesh.num_vertices(), mesh.num_vertices(), 9 * mesh.num_triangles());
    push_stiffness(mesh, &mut t);
    t.build().expect("mesh indices are in range")
}

fn push_stiffness(mesh: &TriMesh, t: &mut TripletBuilder) {
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(k);
        let g = mesh.basis_gradients(k);
        for a in 0..3 {
            for b in 0..3 {
                t.push(tri[a], tri[b], area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
            }
        }
    }
}

/// Forward operator `A` of `−Δu = f` with homogeneous Dirichlet conditions
/// imposed weakly by the symmetric Nitsche method:
///
/// `a(u, v) = ∫ ∇u·∇v − ∫_∂Ω (∂ₙu) v − ∫_∂Ω u (∂ₙv) + Σ_e (penalty/|e|) ∫_e u v`.
///
/// Symmetric by construction; coercivity is checked separately by
/// [`check_coercivity`].
pub fn assemble_stiffness_nitsche(mesh: &TriMesh, penalty: f64) -> Result<SparseMatrix> {
    if penalty.is_nan() || penalty <= 0.0 {
        return Err(Error::InvalidArgument(format!("Nitsche penalty must be positive, got {penalty}")));
    }
    let edges = mesh.boundary_edges();
    let n = mesh.num_vertices();
    let mut t = TripletBuilder::with_capacity(n, n, 9 * mesh.num_triangles() + 16 * edges.len());
    push_stiffness(mesh, &mut t);
    for e in &edges {
        let (pa, pb) = (mesh.vertices()[e.a], mesh.vertices()[e.b]);
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = dx.hypot(dy);
        let normal = [dy / len, -dx / len];
        let tri = mesh.triangles()[e.triangle];
        let grads = mesh.basis_gradients(e.triangle);
        // N_kl = ∫_e φ_k ∂ₙφ_l for k on the edge; added as −N − Nᵀ.
        for (l, &vl) in tri.iter().enumerate() {
            let dn = grads[l][0] * normal[0] + grads[l][1] * normal[1];
            let entry = dn * len / 2.0;
            for vk in [e.a, e.b] {
                t.push(vk, vl, -entry);
                t.push(vl, vk, -entry);
            }
        }
        let gamma = penalty / len;
        let m = gamma * len / 6.0;
        t.push(e.a, e.a, 2.0 * m);
        t.push(e.b, e.b, 2.0 * m);
        t.push(e.a, e.b, m);
        t.push(e.b, e.a, m);
    }
    t.build()
}

/// Verifies that the Nitsche stiffness is positive definite and returns its
/// smallest eigenvalue.
pub fn check_coercivity(a: &SparseMatrix) -> Result<f64> {
    if a.nrows() > COERCIVITY_CHECK_LIMIT {
        return Err(Error::TooLarge {
            dim: a.nrows(),
            limit: COERCIVITY_CHECK_LIMIT,
        });
    }
    let lambda_min = symmetric_eigenvalues(&a.to_dense())?.first().copied().unwrap_or(f64::INFINITY);
    if lambda_min <= 0.0 {
        return Err(Error::PenaltyTooSmall(lambda_min));
    }
    Ok(lambda_min)
}

/// Regularization operator `R*R = Δ_N + tI` (Neumann stiffness plus `t`
/// times the mass matrix).
pub fn assemble_regularization(mesh: &TriMesh, t: f64) -> Result<SparseMatrix> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("regularization shift must be positive, got {t}")));
    }
    assemble_neumann_stiffness(mesh).add_scaled(&assemble_mass(mesh), 1.0, t)
}

/// Symmetric 7-point rule exact for polynomials of degree 5, as
/// (barycentric coordinates, weight relative to the triangle area).
pub(crate) fn quadrature_rule() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a = (6.0 - s15) / 21.0;
    let b = (6.0 + s15) / 21.0;
    let wa = (155.0 - s15) / 1200.0;
    let wb = (155.0 + s15) / 1200.0;
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 9.0 / 40.0),
        ([a, a, 1.0 - 2.0 * a], wa),
        ([a, 1.0 - 2.0 * a, a], wa),
        ([1.0 - 2.0 * a, a, a], wa),
        ([b, b, 1.0 - 2.0 * b], wb),
        ([b, 1.0 - 2.0 * b, b], wb),
        ([1.0 - 2.0 * b, b, b], wb),
    ]
}

/// Load vector `f_i = ∫ f φ_i`, integrated with the degree-5 rule.
pub fn assemble_load(mesh: &TriMesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let rule = quadrature_rule();
    let mut out = vec![0.0; mesh.num_vertices()];
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(k);
        let p = mesh.triangle_points(k);
        for (bary, w) in &rule {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let fv = f(x, y) * w * area;
            for (a, &v) in tri.iter().enumerate() {
                out[v] += fv * bary[a];
            }
        }
    }
    out
}

/// `‖u_h − u‖_{L²(Ω)}` for nodal values `u_h`, integrated with the degree-5
/// rule.
pub fn l2_error(mesh: &TriMesh, values: &[f64], exact: impl Fn(f64, f64) -> f64) -> Result<f64> {
    if values.len() != mesh.num_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "{} nodal values on a mesh with {} vertices",
            values.len(),
            mesh.num_vertices()
        )));
    }
    let rule = quadrature_rule();
    let mut sum = 0.0;
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(k);
        let p = mesh.triangle_points(k);
        for (bary, w) in &rule {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let uh: f64 = tri.iter().zip(bary).map(|(&v, b)| values[v] * b).sum();
            let d = uh - exact(x, y);
            sum += d * d * w * area;
        }
    }
    Ok(sum.sqrt())
}

/// Solves the manufactured Poisson problem with exact solution
/// `sin(πx/Lx) sin(πy/Ly)` using the Nitsche stiffness and returns the L²
/// error.
pub fn manufactured_poisson_error(mesh: &TriMesh, penalty: f64) -> Result<f64> {
    use std::f64::consts::PI;
    let (lx, ly) = (mesh.lx(), mesh.ly());
    let exact = |x: f64, y: f64| (PI * x / lx).sin() * (PI * y / ly).sin();
    let k2 = PI * PI * (1.0 / (lx * lx) + 1.0 / (ly * ly));
    let a = assemble_stiffness_nitsche(mesh, penalty)?;
    let rhs = assemble_load(mesh, |x, y| k2 * exact(x, y));
    let u = crate::krylov::inner_solve_to_tol(&a, &rhs, 1e-12)?;
    l2_error(mesh, &u, exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_solve_spd;

    fn total(m: &SparseMatrix) -> f64 {
        m.values().iter().sum()
    }

    #[test]
    fn mass_partition_of_unity_and_symmetry() {
        let m = TriMesh::new(1.0, 1.0, 1, 1).unwrap();
        assert!((total(&assemble_mass(&m)) - 1.0).abs() < 1e-15);
        let m = TriMesh::new(1.45, 1.0, 9, 6).unwrap();
        let w = assemble_mass(&m);
        assert!((total(&w) - 1.45).abs() < 1e-12);
        assert!(w.max_asymmetry() <= 1e-15);
        assert!(symmetric_eigenvalues(&w.to_dense()).unwrap()[0] > 0.0);
    }

    #[test]
    fn single_triangle_element_matrix() {
        // One cell of a 1x1 mesh; vertex 2 (v01) belongs only to triangle 1
        // and vertex 1 (v10) only to triangle 0.
        let m = TriMesh::new(2.0, 3.0, 1, 1).unwrap();
        let w = assemble_mass(&m);
        let area = 3.0;
        assert!((w.get(1, 1) - 2.0 * area / 12.0).abs() < 1e-15);
        assert!((w.get(1, 0) - area / 12.0).abs() < 1e-15);
        assert!((w.get(1, 3) - area / 12.0).abs() < 1e-15);
        assert_eq!(w.get(1, 2), 0.0);
        assert!((w.get(0, 0) - 4.0 * area / 12.0).abs() < 1e-15);
    }

    #[test]
    fn lumped_mass_entries() {
        let m = TriMesh::new(1.45, 1.0, 6, 4).unwrap();
        let d = lump_mass(&assemble_mass(&m)).unwrap();
        let (hx, hy) = (m.hx(), m.hy());
        let tri_area = hx * hy / 2.0;
        assert!((d[m.vertex_index(3, 2)] - 6.0 * tri_area / 3.0).abs() < 1e-15);
        assert!((d[m.vertex_index(3, 2)] - hx * hy).abs() < 1e-15);
        // Corner (nx, 0) touches one triangle; (0, 0) touches two.
        assert!((d[m.vertex_index(6, 0)] - tri_area / 3.0).abs() < 1e-15);
        assert!((d[m.vertex_index(0, 0)] - 2.0 * tri_area / 3.0).abs() < 1e-15);
        assert!((d.iter().sum::<f64>() - 1.45).abs() < 1e-12);
        let unit = TriMesh::new(1.0, 1.0, 1, 1).unwrap();
        assert!((lump_mass(&assemble_mass(&unit)).unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lump_rejects_nonpositive_rows() {
        let w = SparseMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(lump_mass(&w), Err(Error::NotPositiveDefinite { row: 1, .. })));
    }

    #[test]
    fn nitsche_is_symmetric_and_coercive() {
        for &(nx, ny) in &[(1, 1), (4, 3), (12, 8), (29, 20)] {
            let m = TriMesh::new(1.45, 1.0, nx, ny).unwrap();
            let a = assemble_stiffness_nitsche(&m, DEFAULT_NITSCHE_PENALTY).unwrap();
            assert_eq!(a.max_asymmetry(), 0.0);
            assert!(check_coercivity(&a).unwrap() > 0.0);
        }
    }

    #[test]
    fn tiny_penalty_is_detected() {
        let m = TriMesh::new(1.0, 1.0, 6, 6).unwrap();
        let a = assemble_stiffness_nitsche(&m, 0.05).unwrap();
        assert!(matches!(check_coercivity(&a), Err(Error::PenaltyTooSmall(_))));
        assert!(assemble_stiffness_nitsche(&m, 0.0).is_err());
    }

    #[test]
    fn interior_rows_vanish_on_linear_fields() {
        // Boundary terms only reach vertices of boundary triangles, and a
        // linear field is discretely harmonic.
        let m = TriMesh::new(1.45, 1.0, 5, 4).unwrap();
        let a = assemble_stiffness_nitsche(&m, 10.0).unwrap();
        let u: Vec<f64> = m.vertices().iter().map(|p| p[0] + 2.0 * p[1]).collect();
        let au = a.spmv(&u).unwrap();
        for j in 2..m.ny() - 1 {
            for i in 2..m.nx() - 1 {
                assert!(au[m.vertex_index(i, j)].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn regularization_nullspace_and_element() {
        let m = TriMesh::new(1.45, 1.0, 7, 5).unwrap();
        let rr = assemble_regularization(&m, 0.1).unwrap();
        let ones = vec![1.0; m.num_vertices()];
        let lhs = rr.spmv(&ones).unwrap();
        let rhs = assemble_mass(&m).spmv(&ones).unwrap();
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - 0.1 * r).abs() <= 1e-13);
        }
        assert!(symmetric_eigenvalues(&rr.to_dense()).unwrap()[0] > 0.0);
        assert!(assemble_regularization(&m, 0.0).is_err());

        // Unit right triangle element: stiffness [[1,-1/2,-1/2],...] on
        // v00 with legs along the axes, checked on vertex v01 of a 1x1 mesh
        // (which lies only in triangle (v00, v11, v01)).
        let m = TriMesh::new(1.0, 1.0, 1, 1).unwrap();
        let rr = assemble_regularization(&m, 1.0).unwrap();
        let area = 0.5;
        // Triangle (v00, v11, v01) has its right angle at v01:
        // ∇φ_v01 = (-1, 1), |∇|² · area = 1.
        assert!((rr.get(2, 2) - (1.0 + 2.0 * area / 12.0)).abs() < 1e-15);
        // ∇φ_v00 = (0, -1), ∇φ_v01 · ∇φ_v00 = -1, times area = -1/2.
        assert!((rr.get(2, 0) - (-0.5 + area / 12.0)).abs() < 1e-15);
        // ∇φ_v11 = (1, 0), ∇φ_v01 · ∇φ_v11 = -1, times area = -1/2.
        assert!((rr.get(2, 3) - (-0.5 + area / 12.0)).abs() < 1e-15);
    }

    #[test]
    fn quadrature_is_exact_for_quintics() {
        let m = TriMesh::new(1.0, 1.0, 1, 1).unwrap();
        let ones = assemble_load(&m, |x, y| x.powi(3) * y.powi(2));
        // ∫∫ x³y² over the unit square = 1/12.
        assert!((ones.iter().sum::<f64>() - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn manufactured_solution_converges() {
        let mut errors = Vec::new();
        for n in [8usize, 16, 32] {
            let m = TriMesh::new(1.45, 1.0, n * 3 / 2, n).unwrap();
            errors.push((m.h(), manufactured_poisson_error(&m, DEFAULT_NITSCHE_PENALTY).unwrap()));
        }
        for w in errors.windows(2) {
            let rate = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
            assert!(rate >= 1.8, "rate {rate} from {errors:?}");
        }
    }

    #[test]
    fn large_penalty_drives_boundary_values_to_zero() {
        let m = TriMesh::new(1.0, 1.0, 6, 6).unwrap();
        let rhs = assemble_load(&m, |_, _| 1.0);
        let mut previous = f64::INFINITY;
        for penalty in [1e2, 1e4, 1e6] {
            let a = assemble_stiffness_nitsche(&m, penalty).unwrap();
            let u = dense_solve_spd(&a.to_dense(), &rhs).unwrap();
            let boundary_max = (0..m.num_vertices())
                .filter(|&v| m.is_boundary_vertex(v))
                .map(|v| u[v].abs())
                .fold(0.0, f64::max);
            assert!(boundary_max <= 10.0 / penalty, "penalty {penalty}: {boundary_max}");
            assert!(boundary_max < previous);
            previous = boundary_max;
        }
    }
}
