//! One-dimensional reference solution for a single charge at the centre of a
//! spherically symmetric dielectric.
//!
//! With the charge at the origin and radial Dirichlet data, the reaction
//! field depends on `r` alone and satisfies
//!
//! ```text
//! -(1/r^2) (r^2 eps(r) u')' = eps'(r) G'(r),   G'(r) = -q / (eps_i r^2),
//! u'(0) = 0,   u(r_max) = q (1/eps_e - 1/eps_i) / r_max.
//! ```
//!
//! It is discretized in flux form (finite volumes around each radial node)
//! on a uniform grid and solved directly.

use std::io::Write;

use crate::dielectric::{Dielectric, TanhSphericalDielectric};
use crate::error::{Error, Result};
use crate::{norm, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialProblem {
    pub dielectric: TanhSphericalDielectric,
    pub q: f64,
    pub r_max: f64,
    /// Number of radial nodes, including `r = 0` and `r = r_max`.
    pub m: usize,
}

impl RadialProblem {
    pub fn new(dielectric: TanhSphericalDielectric, q: f64) -> Self {
        Self {
            dielectric,
            q,
            r_max: 10.0,
            m: 200_001,
        }
    }

    /// Covers the whole benchmark cube, whose corners sit at `10 sqrt(3)`.
    pub fn covering_cube(dielectric: TanhSphericalDielectric, q: f64, half_width: f64) -> Self {
        let mut p = Self::new(dielectric, q);
        p.r_max = half_width * 3f64.sqrt();
        p.m = 350_001;
        p
    }

    pub fn validate(&self) -> Result<()> {
        self.dielectric.validate()?;
        if !(self.r_max >= self.dielectric.r_e && self.r_max.is_finite()) {
            return Err(Error::Config(format!(
                "r_max = {} must be at least the outer shell radius {}",
                self.r_max, self.dielectric.r_e
            )));
        }
        if self.m < 1001 {
            return Err(Error::Config(format!(
                "radial grid needs at least 1001 nodes, got {}",
                self.m
            )));
        }
        if !self.q.is_finite() {
            return Err(Error::Config("charge must be finite".into()));
        }
        Ok(())
    }

    /// Reaction field of the single charge outside the shell, where the
    /// Dirichlet data is imposed.
    pub fn boundary_value(&self) -> f64 {
        let d = &self.dielectric;
        self.q * (1.0 / d.outer() - 1.0 / d.inner()) / self.r_max
    }

    /// Solves the radial problem.
    pub fn solve(&self) -> Result<RadialProfile> {
        self.validate()?;
        let m = self.m;
        let h = self.r_max / (m - 1) as f64;
        let d = &self.dielectric;
        // w[l] = r^2 eps at the midpoint between nodes l and l + 1
        let w: Vec<f64> = (0..m - 1)
            .map(|l| {
                let r = (l as f64 + 0.5) * h;
                r * r * d.epsilon_radial(r)
            })
            .collect();

        // Summing the flux-balance rows from the centre outwards telescopes:
        // w[l] (u[l] - u[l+1]) / h equals the source integrated over the ball
        // of radius (l + 1/2) h. Since r^2 G' is constant, that integral is
        // -(q / eps_i) times the accumulated eps' and needs no quadrature. A
        // backward sweep from the Dirichlet end then solves the system.
        let scale = -self.q / d.inner();
        let enclosed: Vec<f64> = (0..m - 1)
            .map(|l| scale * d.accumulated_derivative((l as f64 + 0.5) * h) * h)
            .collect();
        let mut values = vec![0.0; m];
        values[m - 1] = self.boundary_value();
        for l in (0..m - 1).rev() {
            values[l] = values[l + 1] + enclosed[l] / w[l];
        }
        Ok(RadialProfile {
            step: h,
            values,
            midpoint_weights: w,
        })
    }
}

/// Tabulated reaction field `u_rf(l h)`, `l = 0..m`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    step: f64,
    values: Vec<f64>,
    midpoint_weights: Vec<f64>,
}

impl RadialProfile {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn r_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn radius(&self, l: usize) -> f64 {
        l as f64 * self.step
    }

    /// Discrete flux `r^2 eps u'` through the midpoint between nodes `l`
    /// and `l + 1`.
    pub fn flux(&self, l: usize) -> f64 {
        self.midpoint_weights[l] * (self.values[l + 1] - self.values[l]) / self.step
    }

    /// Cubic Lagrange interpolation at radius `r`.
    pub fn value_at(&self, r: f64) -> Result<f64> {
        let last = self.values.len() - 1;
        if !(0.0..=self.r_max() * (1.0 + 1e-14)).contains(&r) {
            return Err(Error::InvalidArgument(format!(
                "radius {r} outside the tabulated range [0, {}]",
                self.r_max()
            )));
        }
        let s = (r / self.step).min(last as f64);
        if s.fract() == 0.0 {
            return Ok(self.values[s as usize]);
        }
        let base = (s.floor() as usize).saturating_sub(1).min(last - 3);
        let t = s - base as f64;
        let y = &self.values[base..base + 4];
        // nodes at t = 0, 1, 2, 3
        let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        Ok(l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3])
    }

    /// Profile value at the radius of a 3D point.
    pub fn sample(&self, p: Vec3) -> Result<f64> {
        self.value_at(norm(p))
    }

    /// Writes `r,u_rf` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,u_rf")?;
        for (l, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", self.radius(l), v)?;
        }
        out.flush()?;
        Ok(())
    }
}
