//! Point charges, their Coulomb potential, and the two ways of turning them
//! into a grid source: the smooth regularized source and trilinear spreading.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::dielectric::Dielectric;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::{dot, norm, sub, Vec3};

const SINGULAR_DISTANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCharge {
    pub position: Vec3,
    pub magnitude: f64,
}

impl PointCharge {
    pub fn new(position: Vec3, magnitude: f64) -> Self {
        Self {
            position,
            magnitude,
        }
    }
}

/// Non-empty collection of point charges.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeSet {
    charges: Vec<PointCharge>,
}

impl ChargeSet {
    pub fn new(charges: Vec<PointCharge>) -> Result<Self> {
        if charges.is_empty() {
            return Err(Error::Config("charge set must not be empty".into()));
        }
        for c in &charges {
            if c.position.iter().any(|x| !x.is_finite()) || !c.magnitude.is_finite() {
                return Err(Error::Config(format!("non-finite charge {c:?}")));
            }
        }
        Ok(Self { charges })
    }

    /// A single charge `q` at the origin.
    pub fn centered(q: f64) -> Self {
        Self {
            charges: vec![PointCharge::new([0.0; 3], q)],
        }
    }

    pub fn charges(&self) -> &[PointCharge] {
        &self.charges
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    pub fn total_charge(&self) -> f64 {
        self.charges.iter().map(|c| c.magnitude).sum()
    }

    /// True when the set is one charge sitting exactly at the origin.
    pub fn is_single_centered(&self) -> bool {
        self.charges.len() == 1 && self.charges[0].position == [0.0; 3]
    }

    /// Parses `x y z q` lines. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut charges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected 4 fields \"x y z q\", found {}", fields.len()),
                });
            }
            let mut v = [0.0; 4];
            for (slot, field) in v.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: format!("{field:?}: {e}"),
                })?;
            }
            charges.push(PointCharge::new([v[0], v[1], v[2]], v[3]));
        }
        Self::new(charges)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn coulomb_sum(&self, permittivity: f64, r: Vec3) -> Result<f64> {
        let mut sum = 0.0;
        for c in &self.charges {
            let d = norm(sub(r, c.position));
            if d < SINGULAR_DISTANCE {
                return Err(Error::SingularEvaluation { position: r });
            }
            sum += c.magnitude / d;
        }
        Ok(sum / permittivity)
    }

    /// Coulomb potential `G(r) = sum q_j / (eps_i |r - r_j|)`.
    pub fn greens_potential(&self, eps_i: f64, r: Vec3) -> Result<f64> {
        self.coulomb_sum(eps_i, r)
    }

    /// `grad G(r) = -sum q_j (r - r_j) / (eps_i |r - r_j|^3)`.
    pub fn greens_gradient(&self, eps_i: f64, r: Vec3) -> Result<Vec3> {
        let mut g = [0.0; 3];
        for c in &self.charges {
            let d = sub(r, c.position);
            let dist = norm(d);
            if dist < SINGULAR_DISTANCE {
                return Err(Error::SingularEvaluation { position: r });
            }
            let w = c.magnitude / (dist * dist * dist);
            for a in 0..3 {
                g[a] -= w * d[a];
            }
        }
        Ok([g[0] / eps_i, g[1] / eps_i, g[2] / eps_i])
    }

    /// Dirichlet data: the Coulomb potential screened by the exterior permittivity.
    pub fn boundary_potential(&self, eps_e: f64, r: Vec3) -> Result<f64> {
        self.coulomb_sum(eps_e, r)
    }

    /// Samples `G` at every node.
    pub fn greens_field(&self, eps_i: f64, grid: &Grid) -> Result<ScalarField> {
        self.reject_node_coincidence(grid)?;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| self.greens_potential(eps_i, grid.position_of(idx)))
            .collect::<Result<Vec<f64>>>()?;
        ScalarField::from_values(*grid, values)
    }

    /// Fails if any charge lies within `1e-10 h` of a grid node.
    pub fn reject_node_coincidence(&self, grid: &Grid) -> Result<()> {
        let h = grid.spacing();
        let lo = grid.lower();
        for c in &self.charges {
            let mut nearest = [0usize; 3];
            let mut offset = [0.0; 3];
            for a in 0..3 {
                let s = (c.position[a] - lo[a]) / h;
                let idx = s.round();
                if idx < 0.0 || idx > (grid.n() - 1) as f64 {
                    return Ok(());
                }
                nearest[a] = idx as usize;
                offset[a] = (s - idx) * h;
            }
            if norm(offset) <= 1e-10 * h {
                return Err(Error::ChargeOnNode {
                    position: c.position,
                    i: nearest[0],
                    j: nearest[1],
                    k: nearest[2],
                });
            }
        }
        Ok(())
    }

    /// Every charge must sit in the dielectric core, where the permittivity
    /// is constant; otherwise `eps_hat * lap(G)` does not vanish.
    pub fn check_in_core(&self, d: &dyn Dielectric) -> Result<()> {
        for c in &self.charges {
            if !d.in_core(c.position) {
                return Err(Error::Config(format!(
                    "charge at {:?} is not inside the dielectric core",
                    c.position
                )));
            }
        }
        Ok(())
    }

    /// Smooth source `grad(eps) . grad(G)` of the reaction-field equation.
    ///
    /// Only nodes inside the dielectric's gradient support are evaluated;
    /// all others are written as exact zeros.
    pub fn regularized_source(&self, d: &dyn Dielectric, grid: &Grid) -> Result<ScalarField> {
        self.check_in_core(d)?;
        let eps_i = d.inner();
        let support = d.gradient_support();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let p = grid.position_of(idx);
                if d.in_core(p) || support.is_some_and(|s| !s.contains(p)) {
                    return Ok(0.0);
                }
                let ge = d.gradient(p);
                if ge == [0.0; 3] {
                    return Ok(0.0);
                }
                Ok(dot(ge, self.greens_gradient(eps_i, p)?))
            })
            .collect::<Result<Vec<f64>>>()?;
        ScalarField::from_values(*grid, values)
    }

    /// Spreads each charge's strength `4 pi q` over the eight vertices of its
    /// cell with trilinear weights, as a density (divided by `h^3`).
    pub fn trilinear_source(&self, grid: &Grid) -> Result<ScalarField> {
        let mut field = ScalarField::zeros(*grid);
        let h = grid.spacing();
        let inv_vol = 1.0 / (h * h * h);
        for c in &self.charges {
            if !grid.contains(c.position) {
                return Err(Error::OutOfDomain {
                    position: c.position,
                });
            }
            for (idx, w) in trilinear_weights(grid, c.position) {
                field.values_mut()[idx] += 4.0 * PI * c.magnitude * w * inv_vol;
            }
        }
        Ok(field)
    }
}

/// The eight (node index, weight) pairs of the cell containing `p`.
/// `p` must lie inside the grid.
pub fn trilinear_weights(grid: &Grid, p: Vec3) -> [(usize, f64); 8] {
    let h = grid.spacing();
    let lo = grid.lower();
    let last_cell = grid.n() - 2;
    let mut base = [0usize; 3];
    let mut t = [0.0; 3];
    for a in 0..3 {
        let s = (p[a] - lo[a]) / h;
        let cell = (s.floor().max(0.0) as usize).min(last_cell);
        base[a] = cell;
        t[a] = s - cell as f64;
    }
    let mut out = [(0usize, 0.0); 8];
    for (corner, slot) in out.iter_mut().enumerate() {
        let (di, dj, dk) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
        let wx = if di == 1 { t[0] } else { 1.0 - t[0] };
        let wy = if dj == 1 { t[1] } else { 1.0 - t[1] };
        let wz = if dk == 1 { t[2] } else { 1.0 - t[2] };
        *slot = (
            grid.index(base[0] + di, base[1] + dj, base[2] + dk),
            wx * wy * wz,
        );
    }
    out
}
