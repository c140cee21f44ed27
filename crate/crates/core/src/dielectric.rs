//! Smooth dielectric functions.
//!
//! [`TanhSphericalDielectric`] blends two bulk permittivities through a
//! tanh-shaped level set over a spherical shell `r_i < |r| < r_e`. Other
//! smooth models plug in through the [`Dielectric`] trait.

use crate::error::{Error, Result};
use crate::{norm, Vec3};

/// Spherical shell centred at `center`, used to describe where a
/// dielectric gradient may be nonzero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shell {
    pub center: Vec3,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl Shell {
    /// True if `r` lies in the open shell.
    pub fn contains(&self, r: Vec3) -> bool {
        let d = norm(crate::sub(r, self.center));
        d > self.inner_radius && d < self.outer_radius
    }
}

/// A strictly positive dielectric function with a gradient.
pub trait Dielectric: Sync {
    fn value(&self, r: Vec3) -> f64;

    /// Gradient of [`Dielectric::value`]. The default falls back to central
    /// differences with step [`Dielectric::fd_step`].
    fn gradient(&self, r: Vec3) -> Vec3 {
        central_difference_gradient(|p| self.value(p), r, self.fd_step())
    }

    fn fd_step(&self) -> f64 {
        1e-6
    }

    /// Permittivity of the core region that carries the charges.
    fn inner(&self) -> f64;

    /// Permittivity of the far field.
    fn outer(&self) -> f64;

    /// Whether `r` lies in the core, where the value is exactly
    /// [`Dielectric::inner`] and the gradient vanishes.
    fn in_core(&self, r: Vec3) -> bool;

    /// Region outside of which the gradient is exactly zero, when known.
    fn gradient_support(&self) -> Option<Shell> {
        None
    }
}

/// Central-difference gradient of `f` at `r` with step `delta`.
pub fn central_difference_gradient<F>(f: F, r: Vec3, delta: f64) -> Vec3
where
    F: Fn(Vec3) -> f64,
{
    let mut g = [0.0; 3];
    for (a, ga) in g.iter_mut().enumerate() {
        let mut plus = r;
        let mut minus = r;
        plus[a] += delta;
        minus[a] -= delta;
        *ga = (f(plus) - f(minus)) / (2.0 * delta);
    }
    g
}

/// Homogeneous medium.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantDielectric(pub f64);

impl Dielectric for ConstantDielectric {
    fn value(&self, _r: Vec3) -> f64 {
        self.0
    }

    fn gradient(&self, _r: Vec3) -> Vec3 {
        [0.0; 3]
    }

    fn inner(&self) -> f64 {
        self.0
    }

    fn outer(&self) -> f64 {
        self.0
    }

    fn in_core(&self, _r: Vec3) -> bool {
        true
    }
}

/// How the tanh transition is mapped onto the shell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BandProfile {
    /// `s = s_i + (s_e - s_i) (tanh(k(rho - 1/2)) + 1) / 2` on the band, clamped
    /// outside. Leaves a jump of `(1 - tanh(k/2)) / 2` at both shell radii.
    #[default]
    Published,
    /// Same curve rescaled by `tanh(k/2)` so the band meets both plateaus:
    /// `s = s_i + (s_e - s_i) (tanh(k(rho - 1/2)) + tanh(k/2)) / (2 tanh(k/2))`.
    Continuous,
}

/// Tanh level-set dielectric over a spherical shell centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TanhSphericalDielectric {
    pub r_i: f64,
    pub r_e: f64,
    pub k: f64,
    pub s_i: f64,
    pub s_e: f64,
    pub eps_i: f64,
    pub eps_e: f64,
    pub profile: BandProfile,
}

impl Default for TanhSphericalDielectric {
    /// Benchmark configuration: radii 2 and 5, k = 6, permittivities 1 and 80.
    fn default() -> Self {
        Self {
            r_i: 2.0,
            r_e: 5.0,
            k: 6.0,
            s_i: 1.0,
            s_e: 0.0,
            eps_i: 1.0,
            eps_e: 80.0,
            profile: BandProfile::Published,
        }
    }
}

impl TanhSphericalDielectric {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r_i > 0.0
            && self.r_e > self.r_i
            && self.k > 0.0
            && self.eps_i > 0.0
            && self.eps_e > 0.0
            && [self.s_i, self.s_e].iter().all(|v| v.is_finite())
            && self.r_e.is_finite()
            && self.k.is_finite()
            && self.eps_e.is_finite();
        if !ok {
            return Err(Error::Config(format!(
                "invalid dielectric parameters: need 0 < r_i < r_e, k > 0, eps > 0 (got {self:?})"
            )));
        }
        // Blending must stay positive for every level-set value in range.
        let lo = self.s_i.min(self.s_e);
        let hi = self.s_i.max(self.s_e);
        if self.blend(lo) <= 0.0 || self.blend(hi) <= 0.0 {
            return Err(Error::Config(
                "level-set plateaus produce a non-positive permittivity".into(),
            ));
        }
        Ok(())
    }

    pub fn with_profile(mut self, profile: BandProfile) -> Self {
        self.profile = profile;
        self
    }

    fn blend(&self, s: f64) -> f64 {
        s * self.eps_i + (1.0 - s) * self.eps_e
    }

    fn band_scale(&self) -> (f64, f64) {
        match self.profile {
            BandProfile::Published => (1.0, 1.0),
            BandProfile::Continuous => {
                let t = (0.5 * self.k).tanh();
                (t, t)
            }
        }
    }

    /// Level set as a function of radius.
    pub fn level_set_radial(&self, radius: f64) -> f64 {
        if radius <= self.r_i {
            return self.s_i;
        }
        if radius >= self.r_e {
            return self.s_e;
        }
        self.band_level(radius)
    }

    /// Band formula without clamping.
    fn band_level(&self, radius: f64) -> f64 {
        let rho = (radius - self.r_i) / (self.r_e - self.r_i);
        let (offset, scale) = self.band_scale();
        let t = (self.k * (rho - 0.5)).tanh();
        (self.s_e - self.s_i) * (t + offset) / (2.0 * scale) + self.s_i
    }

    /// Radial derivative of the level set; zero outside the open band.
    pub fn level_set_derivative(&self, radius: f64) -> f64 {
        if radius <= self.r_i || radius >= self.r_e {
            return 0.0;
        }
        let width = self.r_e - self.r_i;
        let rho = (radius - self.r_i) / width;
        let (_, scale) = self.band_scale();
        let sech = 1.0 / (self.k * (rho - 0.5)).cosh();
        (self.s_e - self.s_i) * self.k / (2.0 * scale * width) * sech * sech
    }

    /// Integral of [`Self::epsilon_derivative`] from 0 to `radius`. Jumps of
    /// the published profile at the shell radii are not included.
    pub fn accumulated_derivative(&self, radius: f64) -> f64 {
        if radius <= self.r_i {
            return 0.0;
        }
        self.blend(self.band_level(radius.min(self.r_e))) - self.blend(self.band_level(self.r_i))
    }

    pub fn level_set(&self, r: Vec3) -> f64 {
        self.level_set_radial(norm(r))
    }

    pub fn epsilon_radial(&self, radius: f64) -> f64 {
        self.blend(self.level_set_radial(radius))
    }

    /// `d eps / d r` as a function of radius.
    pub fn epsilon_derivative(&self, radius: f64) -> f64 {
        (self.eps_i - self.eps_e) * self.level_set_derivative(radius)
    }

    pub fn epsilon(&self, r: Vec3) -> f64 {
        self.epsilon_radial(norm(r))
    }

    pub fn epsilon_gradient(&self, r: Vec3) -> Vec3 {
        let radius = norm(r);
        if radius <= self.r_i || radius >= self.r_e {
            return [0.0; 3];
        }
        let scale = self.epsilon_derivative(radius) / radius;
        [scale * r[0], scale * r[1], scale * r[2]]
    }
}

impl Dielectric for TanhSphericalDielectric {
    fn value(&self, r: Vec3) -> f64 {
        self.epsilon(r)
    }

    fn gradient(&self, r: Vec3) -> Vec3 {
        self.epsilon_gradient(r)
    }

    fn fd_step(&self) -> f64 {
        1e-6 * (self.r_e - self.r_i)
    }

    fn inner(&self) -> f64 {
        self.blend(self.s_i)
    }

    fn outer(&self) -> f64 {
        self.blend(self.s_e)
    }

    fn in_core(&self, r: Vec3) -> bool {
        norm(r) < self.r_i
    }

    fn gradient_support(&self) -> Option<Shell> {
        Some(Shell {
            center: [0.0; 3],
            inner_radius: self.r_i,
            outer_radius: self.r_e,
        })
    }
}
