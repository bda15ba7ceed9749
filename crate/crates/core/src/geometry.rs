//! Angles, positions, planar array layouts and the RIS vector algebra.
//!
//! Directions use a boresight-referenced convention in the array's local
//! frame: `(azimuth, elevation) = (0, 0)` is the array normal (local `+y`),
//! azimuth turns towards local `+x` and elevation tilts towards local `+z`.
//! The array itself lies in the local `xz` plane. The polar elevation used in
//! some texts is `PI / 2 - elevation`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Plain 3-vector in metres (positions) or any other unit (directions,
/// wavenumbers).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// A point in space, metres.
pub type Position3 = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Unit vector in the same direction; fails on zero or non-finite input.
    pub fn normalized(self) -> Result<Vec3> {
        let n = self.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::invalid("vector", "cannot normalize a zero or non-finite vector"));
        }
        Ok(self * (1.0 / n))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Angle pair in radians, boresight-referenced (see module docs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        ensure_finite("direction.azimuth", azimuth)?;
        ensure_finite("direction.elevation", elevation)?;
        if !(-PI..=PI).contains(&azimuth) {
            return Err(Error::invalid("direction.azimuth", format!("{azimuth} outside [-pi, pi]")));
        }
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&elevation) {
            return Err(Error::invalid(
                "direction.elevation",
                format!("{elevation} outside [-pi/2, pi/2]"),
            ));
        }
        Ok(Self { azimuth, elevation })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians())
    }

    pub const fn boresight() -> Self {
        Self { azimuth: 0.0, elevation: 0.0 }
    }

    /// Unit vector in the local array frame.
    pub fn unit_vector(&self) -> Vec3 {
        let (sa, ca) = self.azimuth.sin_cos();
        let (se, ce) = self.elevation.sin_cos();
        Vec3::new(sa * ce, ca * ce, se)
    }

    /// Inverse of [`Direction::unit_vector`] for any non-zero vector.
    pub fn from_vector(v: Vec3) -> Result<Self> {
        let u = v.normalized()?;
        let elevation = u.z.clamp(-1.0, 1.0).asin();
        let azimuth = u.x.atan2(u.y);
        Self::new(azimuth, elevation)
    }

    /// Great-circle separation between two directions, radians in `[0, pi]`.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        // atan2 form stays accurate for nearly (anti)parallel vectors
        a.cross(b).norm().atan2(a.dot(b))
    }

    /// Elevation measured from the local `+z` axis.
    pub fn polar_elevation(&self) -> f64 {
        FRAC_PI_2 - self.elevation
    }
}

/// Rotation from an array's local frame to the global frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    /// Row-major 3x3 matrix; column `i` is local axis `i` in global coordinates.
    rotation: [[f64; 3]; 3],
}

const ORTHONORMAL_TOL: f64 = 1e-12;

impl Default for Orientation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Orientation {
    pub const fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Validates orthonormal columns and a `+1` determinant.
    pub fn from_matrix(rotation: [[f64; 3]; 3]) -> Result<Self> {
        let cols: Vec<Vec3> = (0..3)
            .map(|c| Vec3::new(rotation[0][c], rotation[1][c], rotation[2][c]))
            .collect();
        if cols.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("orientation", "non-finite entry"));
        }
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (cols[i].dot(cols[j]) - expected).abs() > ORTHONORMAL_TOL {
                    return Err(Error::invalid("orientation", "columns are not orthonormal"));
                }
            }
        }
        let det = cols[0].cross(cols[1]).dot(cols[2]);
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::invalid("orientation", format!("determinant {det} != +1")));
        }
        Ok(Self { rotation })
    }

    /// Orientation whose array normal (local `+y`) points along `normal`,
    /// with local `+z` as close to global `+z` as possible.
    pub fn facing(normal: Vec3) -> Result<Self> {
        let y = normal.normalized()?;
        let up = if y.cross(Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        let z = (up - y * up.dot(y)).normalized()?;
        let x = y.cross(z);
        Ok(Self {
            rotation: [[x.x, y.x, z.x], [x.y, y.y, z.y], [x.z, y.z, z.z]],
        })
    }

    /// Rotation by `angle` radians about the global `z` axis.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.rotation
    }

    /// Array normal in global coordinates.
    pub fn normal(&self) -> Vec3 {
        Vec3::new(self.rotation[0][1], self.rotation[1][1], self.rotation[2][1])
    }

    pub fn then(&self, outer: &Orientation) -> Orientation {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| outer.rotation[i][k] * self.rotation[k][j]).sum();
            }
        }
        Orientation { rotation: out }
    }

    /// Local -> global.
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let r = &self.rotation;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    /// Global -> local.
    pub fn apply_inverse(&self, v: Vec3) -> Vec3 {
        let r = &self.rotation;
        Vec3::new(
            r[0][0] * v.x + r[1][0] * v.y + r[2][0] * v.z,
            r[0][1] * v.x + r[1][1] * v.y + r[2][1] * v.z,
            r[0][2] * v.x + r[1][2] * v.y + r[2][2] * v.z,
        )
    }
}

/// Element positions of a planar array in its local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    positions: Vec<Vec3>,
    n_az: usize,
    n_el: usize,
}

impl ArrayLayout {
    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_az(&self) -> usize {
        self.n_az
    }

    pub fn n_el(&self) -> usize {
        self.n_el
    }

    pub fn centroid(&self) -> Vec3 {
        let sum = self.positions.iter().fold(Vec3::ZERO, |acc, &p| acc + p);
        sum * (1.0 / self.positions.len() as f64)
    }
}

/// Centered `n_az x n_el` grid in the local `xz` plane. Azimuth index runs
/// fastest; element `(i, j)` sits at `x = (i - (n_az-1)/2) s`,
/// `z = (j - (n_el-1)/2) s`.
pub fn make_upa(n_az: usize, n_el: usize, spacing: f64) -> Result<ArrayLayout> {
    if n_az == 0 || n_el == 0 {
        return Err(Error::invalid("array", format!("element counts must be >= 1, got {n_az}x{n_el}")));
    }
    ensure_positive("array.spacing", spacing)?;
    let cx = (n_az as f64 - 1.0) / 2.0;
    let cz = (n_el as f64 - 1.0) / 2.0;
    let positions = (0..n_el)
        .flat_map(|j| {
            (0..n_az).map(move |i| Vec3::new((i as f64 - cx) * spacing, 0.0, (j as f64 - cz) * spacing))
        })
        .collect();
    Ok(ArrayLayout { positions, n_az, n_el })
}

/// `g(dir) = (2 pi / lambda) u(dir)`, rad/m, local frame.
pub fn wavenumber_vector(dir: &Direction, wavelength: f64) -> Result<Vec3> {
    ensure_finite("direction.azimuth", dir.azimuth)?;
    ensure_finite("direction.elevation", dir.elevation)?;
    ensure_positive("wavelength", wavelength)?;
    Ok(dir.unit_vector() * (2.0 * PI / wavelength))
}

/// Array response `a_i = exp(j <x_i, g(dir)>)`.
pub fn steering_vector(layout: &ArrayLayout, dir: &Direction, wavelength: f64) -> Result<Vec<Complex64>> {
    let g = wavenumber_vector(dir, wavelength)?;
    Ok(layout
        .positions
        .iter()
        .map(|p| Complex64::from_polar(1.0, p.dot(g)))
        .collect())
}

/// RIS phase profile `w_i = exp(-2j <x_i, g(sweep_dir)>)`. The factor two
/// conjugates the round-trip phase of a monostatic reflection.
pub fn ris_phase_profile(layout: &ArrayLayout, sweep_dir: &Direction, wavelength: f64) -> Result<Vec<Complex64>> {
    let g = wavenumber_vector(sweep_dir, wavelength)?;
    Ok(layout
        .positions
        .iter()
        .map(|p| Complex64::from_polar(1.0, -2.0 * p.dot(g)))
        .collect())
}

/// Quadratic form `a(theta)^T diag(w(phi)) a(theta)`: the complex RIS
/// reflection gain seen from direction `theta` with the surface steered to
/// `phi`. Its modulus is at most the element count, with equality at
/// `phi == theta`.
pub fn ris_beam_gain(layout: &ArrayLayout, theta: &Direction, phi: &Direction, wavelength: f64) -> Result<Complex64> {
    let a = steering_vector(layout, theta, wavelength)?;
    let w = ris_phase_profile(layout, phi, wavelength)?;
    Ok(a.iter().zip(&w).map(|(ai, wi)| ai * wi * ai).sum())
}

/// Point at distance `d` along `dir` from the array center, in global
/// coordinates: `ris_pos + R (d u(dir))`.
pub fn direction_to_global(dir: &Direction, d: f64, ris_pos: Position3, orient: &Orientation) -> Result<Position3> {
    ensure_non_negative("distance", d)?;
    Ok(ris_pos + orient.apply(dir.unit_vector() * d))
}

/// Direction of `target` as seen from the array, in the array's local frame.
pub fn local_direction(target: Position3, ris_pos: Position3, orient: &Orientation) -> Result<Direction> {
    Direction::from_vector(orient.apply_inverse(target - ris_pos))
}
