//! Matrix-free flux-form discretization of `-div(eps grad u)`.
//!
//! For an interior node `p` the stencil is
//!
//! ```text
//! (A u)(p) = (1/h^2) * sum over the six faces f of eps_f * (u(p) - u(nb_f))
//! ```
//!
//! with `eps_f` the permittivity evaluated at the face midpoint. Dirichlet
//! nodes are eliminated: their contribution is moved into the right-hand
//! side, leaving a symmetric positive definite system on the interior.

use rayon::prelude::*;

use crate::charges::ChargeSet;
use crate::dielectric::Dielectric;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::Vec3;

#[derive(Clone, Debug)]
pub struct VariableCoefficientOperator {
    grid: Grid,
    /// `faces[a][p]` holds eps at `node(p) + (h/2) e_a`; shared with the
    /// opposite face of the next node along axis `a`.
    faces: [Vec<f64>; 3],
}

impl VariableCoefficientOperator {
    /// Samples the dielectric at every face midpoint of the grid.
    pub fn build(grid: &Grid, d: &dyn Dielectric) -> Self {
        let n = grid.n();
        let half = 0.5 * grid.spacing();
        let faces = [0, 1, 2].map(|axis| {
            let mut v = vec![0.0; grid.len()];
            v.par_iter_mut().enumerate().for_each(|(idx, slot)| {
                let (i, j, k) = grid.coords(idx);
                if [i, j, k][axis] + 1 < n {
                    let mut p = grid.position(i, j, k);
                    p[axis] += half;
                    *slot = d.value(p);
                }
            });
            v
        });
        Self { grid: *grid, faces }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Coefficient on the face between node `index` and its `+axis` neighbour.
    pub fn face(&self, axis: usize, index: usize) -> f64 {
        self.faces[axis][index]
    }

    /// The six face coefficients of interior node `index`, ordered
    /// `[-x, +x, -y, +y, -z, +z]`.
    pub fn node_faces(&self, index: usize) -> [f64; 6] {
        let n = self.grid.n();
        let s = [1, n, n * n];
        [
            self.faces[0][index - s[0]],
            self.faces[0][index],
            self.faces[1][index - s[1]],
            self.faces[1][index],
            self.faces[2][index - s[2]],
            self.faces[2][index],
        ]
    }

    /// `A u`, with boundary rows passed through unchanged.
    pub fn apply(&self, u: &ScalarField) -> Result<ScalarField> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = u.clone();
        self.apply_interior(u.values(), out.values_mut());
        Ok(out)
    }

    /// Writes `(A u)(p)` for every interior node `p`; boundary entries of
    /// `out` are left as they are.
    pub fn apply_interior(&self, u: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        let plane = n * n;
        let inv_h2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        let [fx, fy, fz] = &self.faces;
        out.par_chunks_mut(plane)
            .enumerate()
            .filter(|(k, _)| *k > 0 && *k < n - 1)
            .for_each(|(k, out_plane)| {
                for j in 1..n - 1 {
                    let row = n * j;
                    for i in 1..n - 1 {
                        let p = i + row + plane * k;
                        let up = u[p];
                        let acc = fx[p] * (up - u[p + 1])
                            + fx[p - 1] * (up - u[p - 1])
                            + fy[p] * (up - u[p + n])
                            + fy[p - n] * (up - u[p - n])
                            + fz[p] * (up - u[p + plane])
                            + fz[p - plane] * (up - u[p - plane]);
                        out_plane[i + row] = acc * inv_h2;
                    }
                }
            });
    }

    /// Diagonal of the interior operator (sum of face coefficients over
    /// `h^2`). Boundary entries are set to 1.
    pub fn diagonal(&self) -> Vec<f64> {
        let g = self.grid;
        let inv_h2 = 1.0 / (g.spacing() * g.spacing());
        (0..g.len())
            .into_par_iter()
            .map(|idx| {
                if g.is_boundary_index(idx) {
                    1.0
                } else {
                    self.node_faces(idx).iter().sum::<f64>() * inv_h2
                }
            })
            .collect()
    }
}

/// Discrete Dirichlet problem `A x = rhs` on the interior nodes.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub operator: VariableCoefficientOperator,
    /// Right-hand side with boundary contributions folded in. Zero on
    /// boundary nodes.
    pub rhs: ScalarField,
    /// Dirichlet data on boundary nodes. Zero on interior nodes.
    pub boundary_values: ScalarField,
}

impl LinearSystem {
    /// Combines an interior source with Dirichlet data. For an interior node
    /// next to the boundary, `eps_face * g / h^2` is added to its source.
    pub fn new(
        operator: VariableCoefficientOperator,
        source: &ScalarField,
        boundary: &ScalarField,
    ) -> Result<Self> {
        let grid = *operator.grid();
        if *source.grid() != grid || *boundary.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let mut boundary_values = boundary.clone();
        for (idx, v) in boundary_values.values_mut().iter_mut().enumerate() {
            if !grid.is_boundary_index(idx) {
                *v = 0.0;
            }
        }
        // A applied to the boundary-only field gives -sum eps_f g_f / h^2 on
        // interior nodes next to the boundary and zero deeper inside.
        let mut folded = vec![0.0; grid.len()];
        operator.apply_interior(boundary_values.values(), &mut folded);
        let mut rhs = ScalarField::zeros(grid);
        for (idx, r) in rhs.values_mut().iter_mut().enumerate() {
            if !grid.is_boundary_index(idx) {
                *r = source.values()[idx] - folded[idx];
            }
        }
        if !rhs.is_finite() || !boundary_values.is_finite() {
            return Err(Error::InvalidArgument(
                "assembled system has non-finite entries".into(),
            ));
        }
        Ok(Self {
            operator,
            rhs,
            boundary_values,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.operator.grid()
    }
}

/// Field that holds `f(node)` on boundary nodes and zero elsewhere.
pub fn boundary_field<F>(grid: &Grid, f: F) -> Result<ScalarField>
where
    F: Fn(Vec3) -> Result<f64> + Sync,
{
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if grid.is_boundary_index(idx) {
                f(grid.position_of(idx))
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    ScalarField::from_values(*grid, values)
}

/// Reaction-field system: source `grad eps . grad G`, boundary data `g - G`.
pub fn assemble_regularized(
    grid: &Grid,
    d: &dyn Dielectric,
    charges: &ChargeSet,
) -> Result<LinearSystem> {
    charges.check_in_core(d)?;
    charges.reject_node_coincidence(grid)?;
    let (eps_i, eps_e) = (d.inner(), d.outer());
    let source = charges.regularized_source(d, grid)?;
    let boundary = boundary_field(grid, |p| {
        Ok(charges.boundary_potential(eps_e, p)? - charges.greens_potential(eps_i, p)?)
    })?;
    LinearSystem::new(
        VariableCoefficientOperator::build(grid, d),
        &source,
        &boundary,
    )
}

/// Full-potential system with trilinearly spread charges and boundary data `g`.
pub fn assemble_trilinear(
    grid: &Grid,
    d: &dyn Dielectric,
    charges: &ChargeSet,
) -> Result<LinearSystem> {
    charges.reject_node_coincidence(grid)?;
    let eps_e = d.outer();
    let source = charges.trilinear_source(grid)?;
    let boundary = boundary_field(grid, |p| charges.boundary_potential(eps_e, p))?;
    LinearSystem::new(
        VariableCoefficientOperator::build(grid, d),
        &source,
        &boundary,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charges::PointCharge;
    use crate::dielectric::{ConstantDielectric, TanhSphericalDielectric};

    #[test]
    fn constant_dielectric_faces() {
        let g = Grid::new([0.0; 3], 1.0, 5).unwrap();
        let op = VariableCoefficientOperator::build(&g, &ConstantDielectric(2.5));
        for idx in 0..g.len() {
            if !g.is_boundary_index(idx) {
                assert_eq!(op.node_faces(idx), [2.5; 6]);
            }
        }
    }

    #[test]
    fn core_nodes_see_inner_permittivity() {
        let g = Grid::benchmark(50).unwrap();
        let d = TanhSphericalDielectric::default();
        let op = VariableCoefficientOperator::build(&g, &d);
        let h = g.spacing();
        for idx in 0..g.len() {
            let p = g.position_of(idx);
            if crate::norm(p) < 2.0 - h {
                assert_eq!(op.node_faces(idx), [1.0; 6]);
            }
        }
    }

    #[test]
    fn face_at_band_midpoint() {
        // faces along x sit at x = 3.5 for the node at x = 3.0
        let g = Grid::new([3.0, 0.0, 0.0], 2.0, 3).unwrap();
        let op = VariableCoefficientOperator::build(&g, &TanhSphericalDielectric::default());
        assert!((op.face(0, g.index(0, 0, 0)) - 40.5).abs() < 1e-12);
    }

    #[test]
    fn shared_faces_are_consistent() {
        let g = Grid::benchmark(11).unwrap();
        let op = VariableCoefficientOperator::build(&g, &TanhSphericalDielectric::default());
        let idx = g.index(5, 5, 5);
        let east = op.node_faces(idx)[1];
        let west_of_next = op.node_faces(idx + 1)[0];
        assert_eq!(east, west_of_next);
    }

    #[test]
    fn quadratic_is_differentiated_exactly() {
        let g = Grid::new([-1.0; 3], 2.0, 9).unwrap();
        let op = VariableCoefficientOperator::build(&g, &ConstantDielectric(1.0));
        let u = ScalarField::from_fn(g, |p| p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        let au = op.apply(&u).unwrap();
        for idx in 0..g.len() {
            if g.is_boundary_index(idx) {
                assert_eq!(au.values()[idx], u.values()[idx]);
            } else {
                assert!((au.values()[idx] + 6.0).abs() < 1e-12);
            }
        }
        let lin = ScalarField::from_fn(g, |p| 3.0 * p[0] - p[1] + 0.5 * p[2] + 1.0);
        let al = op.apply(&lin).unwrap();
        for idx in 0..g.len() {
            if !g.is_boundary_index(idx) {
                assert!(al.values()[idx].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_in_permittivity() {
        let g = Grid::new([0.0; 3], 1.0, 7).unwrap();
        let u = ScalarField::from_fn(g, |p| (p[0] * 3.0).sin() * p[1].exp() + p[2]);
        let a1 = VariableCoefficientOperator::build(&g, &ConstantDielectric(1.0))
            .apply(&u)
            .unwrap();
        let a3 = VariableCoefficientOperator::build(&g, &ConstantDielectric(3.0))
            .apply(&u)
            .unwrap();
        for idx in 0..g.len() {
            if !g.is_boundary_index(idx) {
                let (x, y) = (a3.values()[idx], 3.0 * a1.values()[idx]);
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = Grid::new([0.0; 3], 1.0, 5).unwrap();
        let other = Grid::new([0.0; 3], 1.0, 6).unwrap();
        let op = VariableCoefficientOperator::build(&g, &ConstantDielectric(1.0));
        assert!(matches!(
            op.apply(&ScalarField::zeros(other)),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn degenerate_dielectric_gives_empty_system() {
        let g = Grid::benchmark(10).unwrap();
        let d = TanhSphericalDielectric {
            eps_e: 1.0,
            ..Default::default()
        };
        let sys = assemble_regularized(&g, &d, &ChargeSet::centered(1.0)).unwrap();
        assert!(sys.rhs.values().iter().all(|v| *v == 0.0));
        assert!(sys.boundary_values.max_abs() < 1e-16);
    }

    #[test]
    fn regularized_boundary_value() {
        let g = Grid::benchmark(50).unwrap();
        let d = TanhSphericalDielectric::default();
        let sys = assemble_regularized(&g, &d, &ChargeSet::centered(1.0)).unwrap();
        // face center of the x = 10 face is not a node for even n; check the
        // formula directly on a boundary node instead
        let idx = g.index(49, 20, 31);
        let p = g.position_of(idx);
        let r = crate::norm(p);
        let expected = 1.0 / (80.0 * r) - 1.0 / r;
        assert!((sys.boundary_values.values()[idx] - expected).abs() < 1e-15);
        let c = ChargeSet::centered(1.0);
        let at_face = c.boundary_potential(80.0, [10.0, 0.0, 0.0]).unwrap()
            - c.greens_potential(1.0, [10.0, 0.0, 0.0]).unwrap();
        assert!((at_face + 0.09875).abs() < 1e-15);
    }

    #[test]
    fn regularized_rhs_support() {
        let g = Grid::benchmark(30).unwrap();
        let d = TanhSphericalDielectric::default();
        let sys = assemble_regularized(&g, &d, &ChargeSet::centered(1.0)).unwrap();
        let n = g.n();
        for idx in 0..g.len() {
            let (i, j, k) = g.coords(idx);
            let next_to_boundary = [i, j, k].iter().any(|&c| c == 1 || c == n - 2);
            let r = crate::norm(g.position_of(idx));
            if sys.rhs.values()[idx] != 0.0 {
                assert!(next_to_boundary || (r > 2.0 && r < 5.0), "node {idx} r={r}");
            }
        }
    }

    #[test]
    fn trilinear_system_conserves_source() {
        let g = Grid::benchmark(20).unwrap();
        let d = TanhSphericalDielectric::default();
        let c = ChargeSet::centered(1.0);
        let src = c.trilinear_source(&g).unwrap();
        let h3 = g.spacing().powi(3);
        let total: f64 = src.values().iter().sum::<f64>() * h3;
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(assemble_trilinear(&g, &d, &c).is_ok());
    }

    #[test]
    fn trilinear_rejects_charge_on_node() {
        let g = Grid::benchmark(21).unwrap();
        let d = TanhSphericalDielectric::default();
        let c = ChargeSet::centered(1.0);
        assert!(matches!(
            assemble_trilinear(&g, &d, &c),
            Err(Error::ChargeOnNode { .. })
        ));
    }

    #[test]
    fn zero_charge_rhs_is_pure_folding() {
        let g = Grid::benchmark(12).unwrap();
        let d = TanhSphericalDielectric::default();
        let c = ChargeSet::new(vec![PointCharge::new([0.1, 0.2, 0.3], 0.0)]).unwrap();
        let sys = assemble_trilinear(&g, &d, &c).unwrap();
        assert!(sys.rhs.values().iter().all(|v| *v == 0.0));
        assert!(sys.boundary_values.values().iter().all(|v| *v == 0.0));
    }
}
