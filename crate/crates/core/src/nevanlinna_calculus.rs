//! Areas, order functions and circle integrals of the pulled-back density.
//!
//! Disc integrals split exactly as
//! `∫ F·W = Σ_global F̂·W·cell + Σ_λ ∫_{D(λ,ρ_λ)} (F - F̃)·W`, where the
//! global midpoint-polar grid uses the deep-regime constant `F̃` inside each
//! core disc `D(λ, ρ_λ)` and `F` elsewhere, and each core is integrated in
//! log-polar coordinates `d = e^{t+iθ}` around its zero. The core radius
//! `ρ_λ = min(ρ, e^{W-h(λ)})` is where `v ≈ h + log|d|` reaches `W`, so the
//! splitting introduces no visible jump on the global grid.

use crate::error::{Error, Result};
use crate::math::{gauss_legendre, integrate_adaptive, softplus, Neumaier, C64, TWO_PI};
use crate::surface_geometry::SurfaceModel;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    MidpointPolar,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureGrid {
    /// Minimum number of rings; discs get `max(n_radial, ceil(radial_per_unit·r))`.
    pub n_radial: usize,
    pub n_angular: usize,
    pub radial_per_unit: f64,
    /// Upper bound for the core radius `ρ_λ`.
    pub refinement_radius: f64,
    pub scheme: Scheme,
    /// `W`: cores span `v - h ∈ [-W, W]` in log-radius.
    pub core_halfwidth: f64,
    pub core_panel: f64,
    pub core_order: usize,
    pub core_angular: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid {
            n_radial: 64,
            n_angular: 1024,
            radial_per_unit: 4.0,
            refinement_radius: 1.0,
            scheme: Scheme::MidpointPolar,
            core_halfwidth: 25.0,
            core_panel: 1.0,
            core_order: 8,
            core_angular: 32,
        }
    }
}

impl QuadratureGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_radial < 2 || self.n_angular < 4 {
            return Err(Error::param("quadrature", "n_radial >= 2 and n_angular >= 4 required"));
        }
        if !(self.radial_per_unit >= 0.0) || !(self.refinement_radius > 0.0) {
            return Err(Error::param("quadrature", "radial_per_unit >= 0 and refinement_radius > 0 required"));
        }
        if !(self.core_halfwidth > 0.0 && self.core_panel > 0.0) || self.core_order < 2 || self.core_angular < 4 {
            return Err(Error::param("quadrature", "core parameters out of range"));
        }
        Ok(())
    }

    pub fn rings_for(&self, r: f64) -> usize {
        self.n_radial.max((self.radial_per_unit * r).ceil() as usize)
    }

    /// Half resolution in every direction, for the Richardson estimate.
    pub fn coarse(&self) -> Self {
        QuadratureGrid {
            n_radial: (self.n_radial / 2).max(2),
            n_angular: (self.n_angular / 2).max(4),
            radial_per_unit: self.radial_per_unit / 2.0,
            core_panel: self.core_panel * 2.0,
            core_angular: (self.core_angular / 2).max(4),
            ..*self
        }
    }

    /// Twice the resolution.
    pub fn refined(&self) -> Self {
        QuadratureGrid {
            n_radial: self.n_radial * 2,
            n_angular: self.n_angular * 2,
            radial_per_unit: self.radial_per_unit * 2.0,
            core_panel: self.core_panel / 2.0,
            core_angular: self.core_angular * 2,
            ..*self
        }
    }
}

/// One weighted quadrature node handed to integrand callbacks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub z: C64,
    /// `v = log|ψ| + mα|z|²` at the node.
    pub v: f64,
    /// Density times quadrature weight; core nodes carry `(F - F̃)` and may
    /// be negative.
    pub mass: f64,
    pub core: Option<usize>,
    /// Radial extent `[a, b]` of the global cell, measured from the disc centre.
    pub ring: Option<(f64, f64)>,
}

struct Core {
    k: usize,
    h: f64,
    rho: f64,
    t_lo: f64,
    t_hi: f64,
}

/// Integrate `slots` weighted masses over `D(center, r)`; `f` adds node
/// contributions into its slice. The reduction order is fixed.
pub fn integrate_disc<F>(
    center: C64,
    r: f64,
    model: &SurfaceModel,
    grid: &QuadratureGrid,
    slots: usize,
    f: F,
) -> Vec<f64>
where
    F: Fn(&Node, &mut [f64]) + Sync + Send,
{
    let locus = &model.locus;
    let ma = model.malpha();
    let w = grid.core_halfwidth;
    let rho_max = grid.refinement_radius;
    let cand: Vec<usize> = (0..locus.len()).filter(|&k| (locus.points[k] - center).norm() < r + rho_max).collect();
    let cores: Vec<Core> = crate::par::map(cand.len(), |i| {
        let k = cand[i];
        let h = model.core_height(k);
        let lim = rho_max.min(0.45 * model.local(k).radius);
        let t_hi = lim.ln().min(w - h);
        let t_lo = (-h - w).min(t_hi - 2.0 * w);
        Core { k, h, rho: t_hi.exp(), t_lo, t_hi }
    });
    let mut rho_of = vec![0.0; locus.len()];
    for c in &cores {
        rho_of[c.k] = c.rho;
    }
    let deep = model.deep_density();

    let n_r = grid.rings_for(r);
    let n_t = grid.n_angular;
    let dr = r / n_r as f64;
    let dth = TWO_PI / n_t as f64;
    let field = model.field();
    let ring_sums: Vec<Vec<Neumaier>> = crate::par::map(n_r, |i| {
        let rr = (i as f64 + 0.5) * dr;
        let cell = rr * dr * dth;
        let mut acc = vec![Neumaier::new(); slots];
        let mut buf = vec![0.0; slots];
        for j in 0..n_t {
            let th = (j as f64 + 0.5) * dth;
            let mut z = center + C64::from_polar(rr, th);
            let mut e = model.eval(z);
            if e.hit.is_some() {
                z += C64::new(1e-9, 0.0);
                e = model.eval(z);
            }
            let in_core = field.neighbours(z, rho_max).find(|&k| (z - locus.points[k]).norm() < rho_of[k]);
            let dens = if in_core.is_some() {
                deep
            } else {
                1.0 / PI + model.eps1 * model.fiber_density(e.v, e.dv.norm_sqr())
            };
            let node = Node { z, v: e.v, mass: dens * cell, core: None, ring: Some((rr - 0.5 * dr, rr + 0.5 * dr)) };
            buf.iter_mut().for_each(|b| *b = 0.0);
            f(&node, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                a.add(*b);
            }
        }
        acc
    });

    let (gx, gw) = gauss_legendre(grid.core_order);
    let core_sums: Vec<Vec<Neumaier>> = crate::par::map(cores.len(), |ci| {
        let c = &cores[ci];
        let le = model.local(c.k);
        let mut acc = vec![Neumaier::new(); slots];
        let mut buf = vec![0.0; slots];
        let span = c.t_hi - c.t_lo;
        let panels = (span / grid.core_panel).ceil().max(1.0) as usize;
        let pw = span / panels as f64;
        // below |d| ~ 1e-17 the integrand no longer depends on θ
        let n_th = if c.t_hi < -40.0 { 4 } else { grid.core_angular };
        let dth = TWO_PI / n_th as f64;
        let pref = model.eps1 / (4.0 * PI);
        let _ = c.h;
        for p in 0..panels {
            let a = c.t_lo + p as f64 * pw;
            for (x, wt) in gx.iter().zip(&gw) {
                let t = a + 0.5 * pw * (x + 1.0);
                let wt = 0.5 * pw * wt;
                for j in 0..n_th {
                    let th = (j as f64 + 0.5) * dth;
                    let lv = le.eval_log_polar(t, th, ma);
                    if (lv.z - center).norm() >= r {
                        continue;
                    }
                    let two_v = 2.0 * lv.v;
                    let ln_s = -softplus(-two_v);
                    let ln_1ms = -softplus(two_v);
                    let g2 = lv.g.norm_sqr();
                    let curv = if g2 > 0.0 { 16.0 * (ln_s + ln_1ms + g2.ln()).exp() } else { 0.0 };
                    let flat = -8.0 * ma * (ln_1ms + 2.0 * t).exp();
                    let node =
                        Node { z: lv.z, v: lv.v, mass: pref * (curv + flat) * wt * dth, core: Some(c.k), ring: None };
                    buf.iter_mut().for_each(|b| *b = 0.0);
                    f(&node, &mut buf);
                    for (acc, b) in acc.iter_mut().zip(&buf) {
                        acc.add(*b);
                    }
                }
            }
        }
        acc
    });

    let mut total = vec![Neumaier::new(); slots];
    for part in ring_sums.iter().chain(core_sums.iter()) {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total.iter().map(|t| t.value()).collect()
}

/// Fine value, coarse value, and `|fine - coarse|/3`.
pub fn integrate_disc_richardson<F>(
    center: C64,
    r: f64,
    model: &SurfaceModel,
    grid: &QuadratureGrid,
    slots: usize,
    f: F,
) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&Node, &mut [f64]) + Sync + Send,
{
    let fine = integrate_disc(center, r, model, grid, slots, &f);
    let coarse = integrate_disc(center, r, model, &grid.coarse(), slots, &f);
    let err = fine.iter().zip(&coarse).map(|(a, b)| (a - b).abs() / 3.0).collect();
    (fine, err)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AreaReport {
    pub area: f64,
    pub estimated_error: f64,
    /// Error above 5% of the area.
    pub flagged: bool,
}

impl AreaReport {
    fn new(area: f64, err: f64) -> Self {
        AreaReport { area, estimated_error: err, flagged: !(err <= 0.05 * area.abs()) }
    }
}

/// A quadrature value with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub estimated_error: f64,
    pub flagged: bool,
}

pub fn disc_area(r: f64, model: &SurfaceModel, grid: &QuadratureGrid) -> Result<AreaReport> {
    disc_area_at(C64::new(0.0, 0.0), r, model, grid)
}

pub fn disc_area_at(center: C64, r: f64, model: &SurfaceModel, grid: &QuadratureGrid) -> Result<AreaReport> {
    if !(r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    let (v, e) = integrate_disc_richardson(center, r, model, grid, 1, |n, out| out[0] += n.mass);
    Ok(AreaReport::new(v[0], e[0]))
}

/// `w(z) = log(r / max(|z|, 1))`
pub fn order_weight(z: C64, r: f64) -> f64 {
    (r / z.norm().max(1.0)).ln()
}

/// `T(r) = ∫_1^r dt/t area(D_t)` as one weighted disc integral.
pub fn order_function(r: f64, model: &SurfaceModel, grid: &QuadratureGrid) -> Result<Measured> {
    if !(r >= 1.0) {
        return Err(Error::param("r", "order function needs r >= 1"));
    }
    if r == 1.0 {
        return Ok(Measured { value: 0.0, estimated_error: 0.0, flagged: false });
    }
    let (v, e) = integrate_disc_richardson(C64::new(0.0, 0.0), r, model, grid, 1, |n, out| {
        out[0] += n.mass * order_weight(n.z, r)
    });
    Ok(Measured { value: v[0], estimated_error: e[0], flagged: !(e[0] <= 0.05 * v[0].abs()) })
}

/// `T(r)` by midpoint integration of `disc_area` over `log t ∈ [0, log r]`.
pub fn order_function_t_grid(r: f64, n: usize, model: &SurfaceModel, grid: &QuadratureGrid) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::param("r", "order function needs r >= 1"));
    }
    let lr = r.ln();
    let h = lr / n as f64;
    let areas: Vec<Result<f64>> = (0..n)
        .map(|k| {
            let t = ((k as f64 + 0.5) * h).exp();
            let g = QuadratureGrid { n_radial: grid.rings_for(r), ..*grid };
            Ok(integrate_disc(C64::new(0.0, 0.0), t, model, &g, 1, |nd, o| o[0] += nd.mass)[0])
        })
        .collect();
    let mut acc = Neumaier::new();
    for a in areas {
        acc.add(a? * h);
    }
    Ok(acc.value())
}

/// Order function of the base part alone: `(r² - 1)/2`.
pub fn base_order(r: f64) -> f64 {
    (r * r - 1.0) / 2.0
}

/// Shift `r` by `1e-6·r` until no locus point lies within `1e-6·r` of the circle.
pub fn nudge_radius(center: C64, r: f64, model: &SurfaceModel) -> f64 {
    let mut r = r;
    for _ in 0..100 {
        let touch = model.locus.points.iter().any(|&p| ((p - center).norm() - r).abs() < 1e-6 * r);
        if !touch {
            break;
        }
        r += 1e-6 * r;
    }
    r
}

fn circle_integral<F: Fn(C64) -> f64>(center: C64, radius: f64, g: F) -> Measured {
    let q = integrate_adaptive(|th| g(center + C64::from_polar(radius, th)), 0.0, TWO_PI, 64, 1e-11, 1e-12, 20_000);
    Measured { value: q.value, estimated_error: q.error, flagged: !q.converged }
}

/// `-(1/4π)∫ log(1+e^{2v})(re^{iθ})dθ + (1/4π)∫ log(1+e^{2v})(e^{iθ})dθ`.
pub fn jensen_fiber_t(r: f64, model: &SurfaceModel) -> Result<Measured> {
    if !(r >= 1.0) {
        return Err(Error::param("r", "jensen_fiber_T needs r >= 1"));
    }
    if r == 1.0 {
        return Ok(Measured { value: 0.0, estimated_error: 0.0, flagged: false });
    }
    let o = C64::new(0.0, 0.0);
    let r = nudge_radius(o, r, model);
    let r1 = nudge_radius(o, 1.0, model);
    let u = |z: C64| softplus(2.0 * model.eval(z).v);
    let outer = circle_integral(o, r, u);
    let inner = circle_integral(o, r1, u);
    Ok(Measured {
        value: -(outer.value - inner.value) / (4.0 * PI),
        estimated_error: (outer.estimated_error + inner.estimated_error) / (4.0 * PI),
        flagged: outer.flagged || inner.flagged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CircleTarget {
    Psi,
    /// The primary factor of locus point `k`.
    PsiFactor(usize),
    Section,
}

/// `(1/2π)∫ log|g|(center + radius·e^{iθ}) dθ`.
pub fn circle_mean_log_modulus(
    center: C64,
    radius: f64,
    which: CircleTarget,
    model: &SurfaceModel,
) -> Result<Measured> {
    let m = match which {
        CircleTarget::Psi => {
            let r = nudge_radius(center, radius, model);
            circle_integral(center, r, |z| model.field().eval(z).log_abs)
        }
        CircleTarget::PsiFactor(k) => {
            let lam = *model.locus.points.get(k).ok_or_else(|| Error::Range(alloc::format!("no locus point {k}")))?;
            circle_integral(center, radius, |z| crate::canonical_product::primary_factor_log(z / lam))
        }
        CircleTarget::Section => circle_integral(center, radius, |z| model.section_log_norm(z)),
    };
    Ok(Measured { value: m.value / TWO_PI, estimated_error: m.estimated_error / TWO_PI, flagged: m.flagged })
}

/// `-mean(2ε) + mean(ε)` of the factor of `λ_k` on circles about `λ_k`.
pub fn two_circle_constant(k: usize, eps: f64, model: &SurfaceModel) -> Result<f64> {
    let lam = model.locus.points[k];
    let a = circle_mean_log_modulus(lam, 2.0 * eps, CircleTarget::PsiFactor(k), model)?;
    let b = circle_mean_log_modulus(lam, eps, CircleTarget::PsiFactor(k), model)?;
    Ok(-a.value + b.value)
}

pub fn small_disc_area(k: usize, eps: f64, model: &SurfaceModel, grid: &QuadratureGrid) -> Result<AreaReport> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::param("eps", alloc::format!("need 0 < eps < 1/2, got {eps}")));
    }
    let lam = *model.locus.points.get(k).ok_or_else(|| Error::Range(alloc::format!("no locus point {k}")))?;
    let g = QuadratureGrid { n_radial: grid.n_radial.max(128), n_angular: grid.n_angular.min(512), ..*grid };
    disc_area_at(lam, eps, model, &g)
}

/// Fiber-part Jensen integral over the ring `a < |z - λ| < b`:
/// `(1/4π)[∫u(λ + b e^{iθ}) - ∫u(λ + a e^{iθ})]`.
pub fn ring_fiber_jensen(k: usize, a: f64, b: f64, model: &SurfaceModel) -> Measured {
    let lam = model.locus.points[k];
    let le = model.local(k);
    let ma = model.malpha();
    let u = |z: C64| softplus(2.0 * le.eval(z - lam, ma).v);
    let ob = circle_integral(lam, b, u);
    let oa = circle_integral(lam, a, u);
    Measured {
        value: (ob.value - oa.value) / (4.0 * PI),
        estimated_error: (ob.estimated_error + oa.estimated_error) / (4.0 * PI),
        flagged: ob.flagged || oa.flagged,
    }
}

/// Window `lower ≤ area(D(λ, ε)) ≤ upper` obtained from averaging areas over
/// `dt/t` on `[ε/2, ε]` and `[ε, 2ε]`; the `o(1)` terms are the departures of
/// the fiber Jensen integrals from `log 2 + 3mαε²` and `log 2 + (3/4)mαε²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallDiscWindow {
    pub eps: f64,
    pub area: AreaReport,
    pub lower: f64,
    pub upper: f64,
    pub o_low: f64,
    pub o_up: f64,
}

impl SmallDiscWindow {
    pub fn holds(&self) -> bool {
        self.lower <= self.area.area && self.area.area <= self.upper
    }
}

pub fn small_disc_window(k: usize, eps: f64, model: &SurfaceModel, grid: &QuadratureGrid) -> Result<SmallDiscWindow> {
    let area = small_disc_area(k, eps, model, grid)?;
    let ma = model.malpha();
    let l2 = 2f64.ln();
    let e2 = eps * eps;
    let up = ring_fiber_jensen(k, eps, 2.0 * eps, model);
    let lo = ring_fiber_jensen(k, eps / 2.0, eps, model);
    let o_up = up.value - (l2 + 3.0 * ma * e2);
    let o_low = lo.value - (l2 + 0.75 * ma * e2);
    let upper = (1.5 * e2 + model.eps1 * (3.0 * ma * e2 + l2 + o_up)) / l2;
    let lower = (0.375 * e2 + model.eps1 * (0.75 * ma * e2 + l2 + o_low)) / l2;
    Ok(SmallDiscWindow { eps, area, lower, upper, o_low, o_up })
}

/// Least-squares fit `area(D(λ, ε)) ≈ A + Bε²`; returns `(A, B)`.
pub fn small_disc_limit(k: usize, eps: &[f64], model: &SurfaceModel, grid: &QuadratureGrid) -> Result<(f64, f64)> {
    let mut pts = Vec::with_capacity(eps.len());
    for &e in eps {
        pts.push((e * e, small_disc_area(k, e, model, grid)?.area));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(((sy - b * sx) / n, b))
}

/// Length of `f(∂D_r)` in the pulled-back metric.
pub fn boundary_length(r: f64, model: &SurfaceModel) -> Measured {
    let o = C64::new(0.0, 0.0);
    let r = nudge_radius(o, r, model);
    let m = circle_integral(o, r, |z| model.curve_speed(z));
    Measured { value: m.value * r, estimated_error: m.estimated_error * r, flagged: m.flagged }
}

pub fn length_area_ratio(r: f64, model: &SurfaceModel, grid: &QuadratureGrid) -> Result<Measured> {
    let a = disc_area(r, model, grid)?;
    let l = boundary_length(r, model);
    let v = l.value / a.area;
    Ok(Measured {
        value: v,
        estimated_error: v * (l.estimated_error / l.value + a.estimated_error / a.area),
        flagged: l.flagged || a.flagged,
    })
}

/// Areas of `D_r` for every radius of the increasing list, from one pass.
pub fn disc_areas(radii: &[f64], model: &SurfaceModel, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    if radii.is_empty() {
        return Ok(Vec::new());
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::param("radii", "must be positive and increasing"));
    }
    let rmax = *radii.last().unwrap();
    let n = radii.len();
    // global cells straddling a cutoff are split by area
    let shells = integrate_disc(C64::new(0.0, 0.0), rmax, model, grid, n, |node, out| match node.ring {
        Some((a, b)) => {
            let mut lo = a;
            let mut k = radii.partition_point(|&r| r <= a);
            while k < n && radii[k] < b {
                out[k] += node.mass * (radii[k] * radii[k] - lo * lo) / (b * b - a * a);
                lo = radii[k];
                k += 1;
            }
            if k < n {
                out[k] += node.mass * (b * b - lo * lo) / (b * b - a * a);
            }
        }
        None => {
            let k = radii.partition_point(|&r| r <= node.z.norm());
            if k < n {
                out[k] += node.mass;
            }
        }
    });
    let mut acc = Neumaier::new();
    Ok(shells
        .iter()
        .map(|s| {
            acc.add(*s);
            acc.value()
        })
        .collect())
}

/// Length-area ratios on a geometric ladder of radii in `[1, r_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AhlforsScan {
    pub radii: Vec<f64>,
    pub areas: Vec<f64>,
    pub lengths: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl AhlforsScan {
    /// `∫ dr/r` over the scanned radii whose ratio is at least `threshold`.
    pub fn log_measure(&self, threshold: f64) -> f64 {
        let n = self.radii.len();
        let mut bad = 0.0;
        for k in 0..n - 1 {
            if self.ratios[k] >= threshold {
                bad += (self.radii[k + 1] / self.radii[k]).ln();
            }
        }
        bad
    }
}

pub fn ahlfors_scan(r_max: f64, n: usize, model: &SurfaceModel, grid: &QuadratureGrid) -> Result<AhlforsScan> {
    if !(r_max > 1.0) || n < 2 {
        return Err(Error::param("r_max", "scan needs r_max > 1 and at least two radii"));
    }
    let radii: Vec<f64> = (0..n).map(|k| r_max.powf(k as f64 / (n - 1) as f64)).collect();
    let areas = disc_areas(&radii, model, grid)?;
    let lengths: Vec<f64> = crate::par::map(n, |k| boundary_length(radii[k], model).value);
    let ratios = lengths.iter().zip(&areas).map(|(l, a)| l / a).collect();
    Ok(AhlforsScan { radii, areas, lengths, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_locus::{build_zero_locus, uniform_cases, LatticeConfig, OffsetCase, RadiiSchedule, ZeroLocus};

    fn empty(eps1: f64) -> SurfaceModel {
        SurfaceModel::new(0.05, 4, eps1, 1.0, ZeroLocus::empty(LatticeConfig { c: 5 })).unwrap()
    }

    fn one_annulus() -> SurfaceModel {
        let cfg = LatticeConfig::new(5).unwrap();
        let s = RadiiSchedule::desk(&cfg, 1).unwrap();
        let locus = build_zero_locus(&s, &uniform_cases(&s, &OffsetCase::sparse()), &cfg, 0).unwrap();
        SurfaceModel::new(0.05, 4, 0.1, 1.0, locus).unwrap()
    }

    #[test]
    fn base_area_is_r_squared() {
        let m = empty(0.0);
        let g = QuadratureGrid { n_angular: 64, ..Default::default() };
        for r in [0.5, 3.0, 17.0] {
            let a = disc_area(r, &m, &g).unwrap();
            assert!((a.area - r * r).abs() <= 1e-6 * r * r, "{}", a.area);
            assert!(!a.flagged);
        }
    }

    #[test]
    fn base_order_closed_form() {
        let m = empty(0.0);
        let g = QuadratureGrid { n_angular: 64, radial_per_unit: 40.0, ..Default::default() };
        assert_eq!(order_function(1.0, &m, &g).unwrap().value, 0.0);
        let t = order_function(6.0, &m, &g).unwrap();
        assert!((t.value - base_order(6.0)).abs() < 1e-3 * base_order(6.0), "{}", t.value);
    }

    #[test]
    fn jensen_identity_without_zeros() {
        let m = empty(0.1);
        let g = QuadratureGrid { n_angular: 256, radial_per_unit: 16.0, ..Default::default() };
        for r in [2.0, 5.0, 9.0] {
            let t = order_function(r, &m, &g).unwrap().value;
            let j = jensen_fiber_t(r, &m).unwrap().value;
            let rhs = base_order(r) - 0.1 * j;
            assert!((t - rhs).abs() < 1e-4 * rhs, "r={r}: {t} vs {rhs}");
        }
    }

    #[test]
    fn jensen_identity_with_zeros() {
        let m = one_annulus();
        let g = QuadratureGrid::default();
        for r in [25.0, 33.0, 41.0] {
            let t = order_function(r, &m, &g).unwrap();
            let j = jensen_fiber_t(r, &m).unwrap().value;
            let fiber_q = t.value - base_order(r);
            let fiber_j = -0.1 * j;
            assert!((fiber_q - fiber_j).abs() < 2e-3 * fiber_j.abs(), "r={r}: {fiber_q} vs {fiber_j}");
        }
    }

    #[test]
    fn atoms_carry_eps1_each() {
        // between the zeros the area grows by ~eps1 per enclosed zero
        let m = one_annulus();
        let g = QuadratureGrid::default();
        let a = disc_area(45.0, &m, &g).unwrap().area;
        let base = 45.0f64.powi(2) * (1.0 + 2.0 * 0.1 * m.malpha());
        let n = m.locus.len() as f64;
        assert!((a - base - 0.1 * n).abs() < 0.05 * 0.1 * n + 5.0, "{a} {base} {n}");
    }

    #[test]
    fn monotone_in_radius() {
        let m = one_annulus();
        let g = QuadratureGrid::default();
        let a = disc_area(20.0, &m, &g).unwrap().area;
        let b = disc_area(40.0, &m, &g).unwrap().area;
        assert!(b >= a);
    }

    #[test]
    fn two_circle_constant_is_minus_log_two() {
        let m = one_annulus();
        for k in [0, 7, 33] {
            let c = two_circle_constant(k, 0.25, &m).unwrap();
            assert!((c + 2f64.ln()).abs() < 1e-8, "{c}");
        }
    }

    #[test]
    fn section_circle_mean() {
        let m = one_annulus();
        let lam = m.locus.points[5];
        let got = circle_mean_log_modulus(lam, 0.3, CircleTarget::Section, &m).unwrap().value;
        let expect = m.malpha() * (lam.norm_sqr() + 0.09);
        assert!((got - expect).abs() < 1e-9 * expect);
        let psi0 = circle_mean_log_modulus(C64::new(0.0, 0.0), 5.0, CircleTarget::Psi, &m).unwrap().value;
        assert!(psi0.abs() < 1e-9);
    }

    #[test]
    fn small_disc_window_and_limit() {
        let m = one_annulus();
        let g = QuadratureGrid::default();
        let w = small_disc_window(3, 0.25, &m, &g).unwrap();
        assert!(w.holds(), "{w:?}");
        let (a, _) = small_disc_limit(3, &[0.3, 0.1, 0.03], &m, &g).unwrap();
        assert!((a - 0.1).abs() < 0.01, "{a}");
        let a1 = small_disc_area(3, 0.1, &m, &g).unwrap().area;
        let a2 = small_disc_area(3, 0.2, &m, &g).unwrap().area;
        assert!(a1 <= a2);
        assert!(small_disc_area(3, 0.6, &m, &g).is_err());
    }

    #[test]
    fn length_area_without_zeros() {
        let m = empty(0.0);
        let g = QuadratureGrid { n_angular: 64, ..Default::default() };
        for r in [1.0, 4.0, 10.0] {
            let q = length_area_ratio(r, &m, &g).unwrap().value;
            let expect = 2.0 * PI.sqrt() / r;
            assert!((q - expect).abs() < 1e-8 * expect, "{q} vs {expect}");
        }
    }

    #[test]
    fn one_pass_areas_match_single_discs() {
        let m = one_annulus();
        let g = QuadratureGrid { n_angular: 256, ..Default::default() };
        let radii = [3.0, 21.0, 44.0];
        let many = disc_areas(&radii, &m, &g).unwrap();
        for (r, a) in radii.iter().zip(&many) {
            let single = disc_area(*r, &m, &QuadratureGrid { n_radial: g.rings_for(44.0), ..g }).unwrap().area;
            assert!((a - single).abs() < 2e-3 * single, "{r}: {a} vs {single}");
        }
    }

    #[test]
    fn ahlfors_scan_trend() {
        let m = empty(0.1);
        let g = QuadratureGrid { n_angular: 128, ..Default::default() };
        let s = ahlfors_scan(100.0, 50, &m, &g).unwrap();
        assert!(s.ratios.iter().all(|&q| q > 0.0));
        assert!(s.ratios.windows(2).all(|w| w[1] < w[0]));
        // ratio ≈ 2/(r√F) with F ≈ 1/π, so the bad set is roughly r < 7
        let f = s.log_measure(0.5);
        assert!(f > 1.5 && f < 2.5, "{f}");
        let s2 = ahlfors_scan(400.0, 60, &m, &g).unwrap();
        assert!((s2.log_measure(0.5) - f).abs() < 0.2);
    }
}
