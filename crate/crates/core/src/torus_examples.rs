//! The line `z ↦ ([z], [λ_s z])` in a product of Gaussian tori and its
//! intersections with the image of `ι([z]) = ([m₁z + b₁], [m₂z + b₂])`.

use crate::error::{Error, Result};
use crate::math::C64;
use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusLineModel {
    pub slope: f64,
    /// `m₁, m₂` must be Gaussian integers.
    pub m1: C64,
    pub m2: C64,
    pub b1: C64,
    pub b2: C64,
    /// Radius of a disc holding a fundamental domain of the source torus.
    pub domain_radius: f64,
}

impl Default for TorusLineModel {
    fn default() -> Self {
        TorusLineModel {
            slope: core::f64::consts::SQRT_2,
            m1: C64::new(1.0, 0.0),
            m2: C64::new(1.0, 0.0),
            b1: C64::new(0.0, 0.0),
            b2: C64::new(0.0, 0.0),
            domain_radius: 1.0,
        }
    }
}

fn is_gaussian_integer(z: C64) -> bool {
    z.re.fract() == 0.0 && z.im.fract() == 0.0 && z.re.abs() < 1e15 && z.im.abs() < 1e15
}

/// Whether `x` is within `tol` of some `p/q` with `q <= qmax`.
pub fn near_rational(x: f64, qmax: u64, tol: f64) -> bool {
    (1..=qmax).any(|q| {
        let p = (x * q as f64).round();
        (x - p / q as f64).abs() <= tol
    })
}

impl TorusLineModel {
    pub fn validate(&self) -> Result<()> {
        if !self.slope.is_finite() || near_rational(self.slope, 10_000, 1e-12) {
            return Err(Error::param("slope", format!("{} is rational to within 1e-12", self.slope)));
        }
        if !is_gaussian_integer(self.m1) || !is_gaussian_integer(self.m2) {
            return Err(Error::param("map_params", "m1 and m2 must be Gaussian integers"));
        }
        if self.m1 == C64::new(0.0, 0.0) && self.m2 == C64::new(0.0, 0.0) {
            return Err(Error::param("map_params", "(m1, m2) must not both vanish"));
        }
        if self.det().norm() == 0.0 {
            return Err(Error::param("map_params", "m2 - slope·m1 must not vanish"));
        }
        if !(self.domain_radius > 0.0) {
            return Err(Error::param("domain_radius", "must be positive"));
        }
        Ok(())
    }

    /// `D = m₂ - λ_s m₁`
    pub fn det(&self) -> C64 {
        self.m2 - self.m1 * self.slope
    }

    /// Source point `z` and parameter `y` solving
    /// `z = m₁y + b₁ + λ₁`, `λ_s z = m₂y + b₂ + λ₂`.
    pub fn solve(&self, l1: C64, l2: C64) -> (C64, C64) {
        let d = self.det();
        let z = (self.m2 * (l1 + self.b1) - self.m1 * (l2 + self.b2)) / d;
        let y = (self.slope * (l1 + self.b1) - (l2 + self.b2)) / d;
        (z, y)
    }

    /// Search radii for `λ₁` and `λ₂` given the target disc `D_r`.
    fn reach(&self, r: f64) -> (f64, f64) {
        let rr = self.domain_radius;
        let k1 = self.m1.norm() * rr + self.b1.norm();
        let k2 = self.m2.norm() * rr + self.b2.norm();
        (r + k1 + 1.0, self.slope * r + k2 + 1.0)
    }
}

fn gaussian_disc(radius: f64) -> Vec<C64> {
    let n = radius.floor() as i64;
    let mut v = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            let p = C64::new(a as f64, b as f64);
            if p.norm() <= radius {
                v.push(p);
            }
        }
    }
    v
}

/// Counting data for one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusCount {
    pub r: f64,
    pub count: u64,
    pub max_fiber: u64,
}

/// Exact count of lattice pairs whose solution lies in `D_r × D_R`. For each
/// `λ₁` only the `λ₂` with `|y| <= R` can qualify, and those lie in the disc
/// of radius `|D|·R` about `λ_s(λ₁ + b₁) - b₂`; that disc is scanned whole.
pub fn torus_intersection_count(r: f64, model: &TorusLineModel) -> Result<TorusCount> {
    model.validate()?;
    if !(r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    let (r1, r2) = model.reach(r);
    let l1s = gaussian_disc(r1);
    let fiber_radius = model.det().norm() * model.domain_radius * (1.0 + 1e-12) + 1e-12;
    let fibers: Vec<u64> = crate::par::map(l1s.len(), |i| {
        let l1 = l1s[i];
        let c = (l1 + model.b1) * model.slope - model.b2;
        let (x0, x1) = ((c.re - fiber_radius).floor() as i64, (c.re + fiber_radius).ceil() as i64);
        let (y0, y1) = ((c.im - fiber_radius).floor() as i64, (c.im + fiber_radius).ceil() as i64);
        let mut n = 0;
        for a in x0..=x1 {
            for b in y0..=y1 {
                let l2 = C64::new(a as f64, b as f64);
                if l2.norm() > r2 {
                    continue;
                }
                let (z, y) = model.solve(l1, l2);
                if z.norm() <= r && y.norm() <= model.domain_radius {
                    n += 1;
                }
            }
        }
        n
    });
    Ok(TorusCount { r, count: fibers.iter().sum(), max_fiber: fibers.iter().copied().max().unwrap_or(0) })
}

/// `K = a₁ + a₂λ² + λ(a₃ + a₄)`
pub fn harmonic_constant(a: [f64; 4], slope: f64) -> f64 {
    a[0] + a[1] * slope * slope + slope * (a[2] + a[3])
}

/// Number of distinct real roots of `λ ↦ harmonic_constant(a, λ)`.
pub fn harmonic_root_count(a: [f64; 4]) -> usize {
    let (qa, qb, qc) = (a[1], a[2] + a[3], a[0]);
    if qa == 0.0 {
        return if qb != 0.0 { 1 } else { 0 };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc > 0.0 {
        2
    } else if disc == 0.0 {
        1
    } else {
        0
    }
}

/// Gaussian gcd by the Euclidean algorithm.
pub fn gaussian_gcd(a: C64, b: C64) -> C64 {
    let (mut a, mut b) = (a, b);
    while b.norm_sqr() > 0.5 {
        let q = a / b;
        let q = C64::new(q.re.round(), q.im.round());
        let r = a - q * b;
        a = b;
        b = r;
    }
    a
}

/// Distance from `w` to the nearest point of the lattice `gZ[i]`.
fn lattice_distance(w: C64, g: C64) -> f64 {
    if g.norm() == 0.0 {
        return w.norm();
    }
    let q = w / g;
    let base = C64::new(q.re - q.re.round(), q.im - q.im.round());
    let mut best = f64::INFINITY;
    for i in -1..=1 {
        for j in -1..=1 {
            best = best.min(((base + C64::new(i as f64, j as f64)) * g).norm());
        }
    }
    best
}

/// Distance in `A` from `([z], [λ_s z])` to the image curve `ι(C/Z[i])`.
pub fn distance_to_curve(z: C64, model: &TorusLineModel) -> f64 {
    let g = gaussian_gcd(model.m1, model.m2);
    let w = model.m2 * (z - model.b1) - model.m1 * (z * model.slope - model.b2);
    lattice_distance(w, g) / (model.m1.norm_sqr() + model.m2.norm_sqr()).sqrt()
}

/// Lebesgue fraction of `D_r` within distance `ε` of the image curve.
pub fn torus_line_mass_near_curve(r: f64, model: &TorusLineModel, eps: f64, n: usize) -> Result<f64> {
    model.validate()?;
    if !(r > 0.0 && eps >= 0.0) {
        return Err(Error::param("eps", "need r > 0 and eps >= 0"));
    }
    let h = 2.0 * r / n as f64;
    let rows: Vec<(u64, u64)> = crate::par::map(n, |i| {
        let y = -r + (i as f64 + 0.5) * h;
        let mut inside = 0;
        let mut near = 0;
        for j in 0..n {
            let x = -r + (j as f64 + 0.5) * h;
            let z = C64::new(x, y);
            if z.norm() < r {
                inside += 1;
                if distance_to_curve(z, model) < eps {
                    near += 1;
                }
            }
        }
        (inside, near)
    });
    let inside: u64 = rows.iter().map(|r| r.0).sum();
    let near: u64 = rows.iter().map(|r| r.1).sum();
    Ok(near as f64 / inside as f64)
}
