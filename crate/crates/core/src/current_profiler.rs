//! Where the mass of `f(D_r)` sits: near `C_∞`, in fiber tubes over marked
//! torus points, or elsewhere. Also the local chart computations around a
//! zero: constant-graph probes, contour counts and the ball-area bound.
//!
//! Around `λ` the chart value of `f` is `Ψ_λ(z) = ψ(z)·exp(mα(2λ̄z - |λ|²))`,
//! whose modulus differs from the fiber norm by `e^{mα|z-λ|²}`. We work with
//! `L(ζ) = log Ψ_λ(λ + e^ζ)`, which is close to `ζ + h(λ)` for small `|d|`.

use crate::error::{Error, Result};
use crate::lattice_locus::{subsequence_index, torus_distance, IndexSet};
use crate::math::{gauss_legendre, softplus, wrap_angle, Neumaier, C64, TWO_PI};
use crate::nevanlinna_calculus::{integrate_disc_richardson, order_weight, QuadratureGrid};
use crate::surface_geometry::SurfaceModel;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub struct RegionPartition {
    /// `log M`; `U_∞ = {v > log M}`.
    pub log_infinity_threshold: f64,
    pub tube_radius: f64,
    pub marked_classes: Vec<C64>,
    pub horizontal_probe: Option<C64>,
}

impl RegionPartition {
    pub fn new(log_m: f64, tube_radius: f64, marked_classes: Vec<C64>) -> Result<Self> {
        let p = RegionPartition { log_infinity_threshold: log_m, tube_radius, marked_classes, horizontal_probe: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.log_infinity_threshold.is_finite() || self.log_infinity_threshold <= 0.0 {
            return Err(Error::param("infinity_threshold", "M must exceed 1"));
        }
        if !(self.tube_radius > 0.0) {
            return Err(Error::param("tube_radius", "must be positive"));
        }
        for (i, a) in self.marked_classes.iter().enumerate() {
            for b in &self.marked_classes[i + 1..] {
                let d = torus_distance(*a, *b);
                if !(self.tube_radius < 0.5 * d) {
                    return Err(Error::param(
                        "tube_radius",
                        format!("{} overlaps tubes of marked classes at torus distance {d}", self.tube_radius),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        let mut l = vec![String::from("U_inf")];
        l.extend((1..=self.marked_classes.len()).map(|k| format!("tube_{k}")));
        l.push(String::from("remainder"));
        l
    }

    /// Region slot: 0 for `U_∞`, `k` for tube `k`, last for the remainder.
    pub fn classify(&self, z: C64, v: f64) -> usize {
        if v > self.log_infinity_threshold {
            return 0;
        }
        for (k, y) in self.marked_classes.iter().enumerate() {
            if torus_distance(z, *y) < self.tube_radius {
                return k + 1;
            }
        }
        self.marked_classes.len() + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassProfile {
    pub labels: Vec<String>,
    pub fractions: Vec<f64>,
    pub total_area: f64,
    pub radius: f64,
    pub estimated_error: f64,
    pub flagged: bool,
}

impl MassProfile {
    pub fn fraction(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.fractions[i])
    }

    pub fn infinity(&self) -> f64 {
        self.fractions[0]
    }

    /// Tube around marked class `k` (1-based).
    pub fn tube(&self, k: usize) -> f64 {
        self.fractions[k]
    }

    pub fn tubes(&self) -> &[f64] {
        &self.fractions[1..self.fractions.len() - 1]
    }

    pub fn remainder(&self) -> f64 {
        *self.fractions.last().unwrap()
    }
}

fn weighted_profile<W>(
    r: f64,
    p: &RegionPartition,
    model: &SurfaceModel,
    grid: &QuadratureGrid,
    w: W,
) -> Result<MassProfile>
where
    W: Fn(C64) -> f64 + Sync + Send,
{
    if !(r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    p.validate()?;
    let n = p.marked_classes.len() + 2;
    let (vals, errs) = integrate_disc_richardson(C64::new(0.0, 0.0), r, model, grid, n, |node, out| {
        out[p.classify(node.z, node.v)] += node.mass * w(node.z)
    });
    let mut tot = Neumaier::new();
    let mut etot = 0.0;
    for (v, e) in vals.iter().zip(&errs) {
        tot.add(*v);
        etot += e;
    }
    let total = tot.value();
    Ok(MassProfile {
        labels: p.labels(),
        fractions: vals.iter().map(|v| v / total).collect(),
        total_area: total,
        radius: r,
        estimated_error: etot,
        flagged: !(etot <= 0.05 * total.abs()),
    })
}

pub fn mass_profile(r: f64, p: &RegionPartition, model: &SurfaceModel, grid: &QuadratureGrid) -> Result<MassProfile> {
    weighted_profile(r, p, model, grid, |_| 1.0)
}

/// Profile of the `log(r/max(|z|,1))`-weighted measure, normalised by `T(r)`.
pub fn nevanlinna_profile(
    r: f64,
    p: &RegionPartition,
    model: &SurfaceModel,
    grid: &QuadratureGrid,
) -> Result<MassProfile> {
    if !(r > 1.0) {
        return Err(Error::param("r", "log-averaged profile needs r > 1"));
    }
    weighted_profile(r, p, model, grid, |z| order_weight(z, r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn matches(&self, j: u64) -> bool {
        match self {
            Parity::Odd => j % 2 == 1,
            Parity::Even => j % 2 == 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SubsequenceSelector {
    /// `r_i/3` for every built annulus.
    Third,
    /// `r_i` at the annulus indices `Z_{σ(I)}`, positions `j` of the parity.
    Case { set: IndexSet, parity: Parity },
}

impl SubsequenceSelector {
    pub fn label(&self) -> String {
        match self {
            SubsequenceSelector::Third => String::from("THIRD"),
            SubsequenceSelector::Case { set, parity } => {
                format!("CASE({set},{})", if *parity == Parity::Odd { "odd" } else { "even" })
            }
        }
    }

    /// `(j, annulus index, radius)` along the built schedule.
    pub fn radii(&self, model: &SurfaceModel) -> Result<Vec<(u64, u64, f64)>> {
        let s = &model.locus.schedule;
        let out: Vec<(u64, u64, f64)> = match self {
            SubsequenceSelector::Third => {
                s.indices().enumerate().map(|(j, i)| (j as u64 + 1, i, s.radius_of(i).unwrap() / 3.0)).collect()
            }
            SubsequenceSelector::Case { set, parity } => {
                let last = s.last_index().unwrap_or(0);
                let mut v = Vec::new();
                let mut j = 1u64;
                loop {
                    let i = match subsequence_index(set, j) {
                        Ok(i) => i,
                        Err(Error::IndexOverflow(_)) => break,
                        Err(e) => return Err(e),
                    };
                    if i > last {
                        break;
                    }
                    if parity.matches(j) {
                        if let Some(r) = s.radius_of(i) {
                            v.push((j, i, r));
                        }
                    }
                    j += 1;
                }
                v
            }
        };
        if out.is_empty() {
            return Err(Error::Range(format!("selector {} has no radii in the built schedule", self.label())));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileEntry {
    pub j: u64,
    pub index: u64,
    pub profile: MassProfile,
}

pub fn profile_sequence(
    selector: &SubsequenceSelector,
    p: &RegionPartition,
    model: &SurfaceModel,
    grid: &QuadratureGrid,
) -> Result<Vec<ProfileEntry>> {
    selector
        .radii(model)?
        .into_iter()
        .map(|(j, index, r)| Ok(ProfileEntry { j, index, profile: mass_profile(r, p, model, grid)? }))
        .collect()
}

/// `L(ζ)` and `dL/dζ` for the chart around locus point `k`.
pub fn chart_log(
    model: &SurfaceModel,
    k: usize,
    t: f64,
    theta: f64,
) -> (C64, C64, crate::canonical_product::LocalValue) {
    let le = model.local(k);
    let ma = model.malpha();
    let lam = le.lambda;
    let lv = le.eval_log_polar(t, theta, ma);
    let d = lv.d;
    let l = lv.log_psi + (C64::new(lam.norm_sqr(), 0.0) + lam.conj() * d * 2.0) * ma;
    let inner = le.dlog_psi1(d) + lam.inv() + lv.z / (lam * lam) + lam.conj() * (2.0 * ma);
    (l, C64::new(1.0, 0.0) + d * inner, lv)
}

fn wrap_im(z: C64) -> C64 {
    C64::new(z.re, wrap_angle(z.im))
}

/// Solve `L(ζ) = target` (imaginary part mod 2π) by Newton from the
/// small-`|d|` asymptote.
fn solve_chart(model: &SurfaceModel, k: usize, target: C64) -> Option<C64> {
    let (l0, _, _) = chart_log(model, k, -60.0, 0.0);
    let offset = l0 - C64::new(-60.0, 0.0);
    let mut z = wrap_im(target - offset);
    for _ in 0..60 {
        let (l, dl, _) = chart_log(model, k, z.re, z.im);
        let step = wrap_im(l - target) / dl;
        z -= step;
        if !(z.re.is_finite()) || z.re > 5.0 {
            return None;
        }
        // L carries h(λ) in the thousands, so only relative accuracy is available
        if step.norm() <= 1e-13 * (1.0 + z.norm()) {
            return Some(C64::new(z.re, wrap_angle(z.im)));
        }
    }
    None
}

/// `e^{2t}·F(λ + e^ζ)` from a local value.
fn scaled_density(model: &SurfaceModel, t: f64, g: C64, v: f64) -> f64 {
    let ma = model.malpha();
    let ln_s = -softplus(-2.0 * v);
    let ln_1ms = -softplus(2.0 * v);
    let g2 = g.norm_sqr();
    let curv = if g2 > 0.0 { 16.0 * (ln_s + ln_1ms + g2.ln()).exp() } else { 0.0 };
    (2.0 * t).exp() / PI + model.eps1 / (4.0 * PI) * (8.0 * ma * (ln_s + 2.0 * t).exp() + curv)
}

/// Area of `{z ∈ D(λ_k, δ′) ∩ D_r : |Ψ_λ(z) - u₀| < ε}` in the pulled-back metric.
pub fn probe_contribution(
    k: usize,
    r: f64,
    u0: C64,
    eps: f64,
    delta: f64,
    model: &SurfaceModel,
    n: usize,
) -> Result<f64> {
    if !(eps > 0.0 && u0.norm() > 2.0 * eps) {
        return Err(Error::param("u0", format!("probe needs |u0| > 2ε, got |u0| = {}", u0.norm())));
    }
    let target = C64::new(u0.norm().ln(), u0.arg());
    let Some(zs) = solve_chart(model, k, target) else {
        return Ok(0.0);
    };
    let (_, dl, _) = chart_log(model, k, zs.re, zs.im);
    // |Ψ - u₀| < ε is |e^{L - log u₀} - 1| < ε/|u₀|, a near-disc of radius ~(ε/|u₀|)/|L'|
    let a = (2.0 * (eps / u0.norm()) / dl.norm()).min(PI);
    if zs.re - a > delta.ln() {
        return Ok(0.0);
    }
    let h = 2.0 * a / n as f64;
    let lam = model.locus.points[k];
    let rows: Vec<f64> = crate::par::map(n, |i| {
        let t = zs.re - a + (i as f64 + 0.5) * h;
        let mut acc = Neumaier::new();
        for j in 0..n {
            let th = zs.im - a + (j as f64 + 0.5) * h;
            let (l, _, lv) = chart_log(model, k, t, th);
            if lv.d.norm() >= delta || lv.z.norm() >= r || (lv.z - lam).norm() >= delta {
                continue;
            }
            let q = wrap_im(l - target);
            if u0.norm() * (q.exp() - 1.0).norm() < eps {
                acc.add(scaled_density(model, t, lv.g, lv.v) * h * h);
            }
        }
        acc.value()
    });
    Ok(rows
        .iter()
        .fold(Neumaier::new(), |mut a, x| {
            a.add(*x);
            a
        })
        .value())
}

/// Origin chart `Ψ_0 = ψ` on `D(0, δ′)`, with `log ψ = -Σ_{n≥3} S_n zⁿ/n`.
pub fn probe_origin(r: f64, u0: C64, eps: f64, delta: f64, model: &SurfaceModel, n: usize) -> f64 {
    let pts = &model.locus.points;
    let rad = r.min(delta);
    let nmax = 48;
    let sums: Vec<C64> = (0..=nmax)
        .map(|p| {
            if p < 3 {
                return C64::new(0.0, 0.0);
            }
            let mut acc = crate::math::NeumaierC::new();
            for &l in pts {
                acc.add(l.inv().powu(p as u32));
            }
            acc.value()
        })
        .collect();
    let dr = rad / n as f64;
    let dth = TWO_PI / (4 * n) as f64;
    let rows: Vec<f64> = crate::par::map(n, |i| {
        let rr = (i as f64 + 0.5) * dr;
        let mut acc = Neumaier::new();
        for j in 0..4 * n {
            let z = C64::from_polar(rr, (j as f64 + 0.5) * dth);
            let mut lp = C64::new(0.0, 0.0);
            let mut zp = z * z;
            for (p, s) in sums.iter().enumerate().skip(3) {
                zp *= z;
                lp -= s * zp / p as f64;
            }
            if (lp.exp() - u0).norm() < eps {
                acc.add(model.pullback_density(z).value * rr * dr * dth);
            }
        }
        acc.value()
    });
    crate::math::csum(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeMass {
    pub total: f64,
    pub origin: f64,
    pub per_point_max: f64,
    pub points: usize,
}

/// Area of the part of `f(D_r)` within `ε` of the constant graph `{w = u₀}`,
/// summed over the charts at the origin and at every zero in `D_r`.
pub fn horizontal_probe_mass(r: f64, u0: C64, eps: f64, delta: f64, model: &SurfaceModel) -> Result<ProbeMass> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::param("delta_prime", "must lie in (0, 1/2)"));
    }
    let ks: Vec<usize> = (0..model.locus.len()).filter(|&k| model.locus.points[k].norm() < r + delta).collect();
    let parts: Vec<Result<f64>> =
        crate::par::map(ks.len(), |i| probe_contribution(ks[i], r, u0, eps, delta, model, 48));
    let mut acc = Neumaier::new();
    let mut mx = 0.0f64;
    for p in parts {
        let p = p?;
        mx = mx.max(p);
        acc.add(p);
    }
    let origin = probe_origin(r, u0, eps, delta, model, 64);
    acc.add(origin);
    Ok(ProbeMass { total: acc.value(), origin, per_point_max: mx, points: ks.len() })
}

/// Winding number of `Ψ_λ - v` along `|z - λ| = δ′`.
pub fn argument_principle_count(k: usize, delta: f64, v: C64, model: &SurfaceModel) -> Result<i64> {
    if k >= model.locus.len() {
        return Err(Error::Range(format!("no locus point {k}")));
    }
    let t = delta.ln();
    let lv_of = |th: f64| chart_log(model, k, t, th).0;
    let log_v = if v.norm() > 0.0 { v.norm().ln() } else { f64::NEG_INFINITY };
    let phase = |l: C64| {
        if v.norm() == 0.0 {
            return l.im;
        }
        let q = v * (-l).exp();
        l.im + (C64::new(1.0, 0.0) - q).arg()
    };
    let mut log_min = f64::INFINITY;
    let n0 = 256;
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64, C64, C64)> = Vec::new();
    let mut evals = 0usize;
    let mut prev = lv_of(0.0);
    for i in 0..n0 {
        let a = TWO_PI * i as f64 / n0 as f64;
        let b = TWO_PI * (i + 1) as f64 / n0 as f64;
        let lb = lv_of(b);
        stack.push((a, b, prev, lb));
        prev = lb;
        while let Some((a, b, la, lb)) = stack.pop() {
            log_min = log_min.min(la.re).min(lb.re);
            let jump = wrap_angle(phase(lb) - phase(la));
            if jump.abs() < PI / 2.0 {
                total += jump;
                continue;
            }
            evals += 1;
            if evals > 1_000_000 || b - a < 1e-12 {
                return Err(Error::NonConverged(format!("phase tracking around locus point {k}")));
            }
            let m = 0.5 * (a + b);
            let lm = lv_of(m);
            stack.push((m, b, lm, lb));
            stack.push((a, m, la, lm));
        }
    }
    // the chart norm is e^{mα δ′²} below the fiber norm; both are compared in log form
    if !(log_min > log_v) {
        return Err(Error::InadmissibleContour { log_min, log_target: log_v });
    }
    Ok((total / TWO_PI).round() as i64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallCheck {
    pub area: f64,
    pub flat_area: f64,
    pub passed: bool,
}

/// Area of a graph `w = G(d)` over the chart disc inside `|d|² + |w|² < ρ²`,
/// given `(Re log G, |dlog G/dζ|²)` as a function of `ζ = log d`. The graph
/// must satisfy `|G(d)| → 0` as `d → 0` with `|G|` increasing along rays.
pub fn graph_ball_area<G>(rho: f64, n_theta: usize, t_floor: f64, g: G) -> f64
where
    G: Fn(f64, f64) -> (f64, f64) + Sync + Send,
{
    let (gx, gw) = gauss_legendre(16);
    let lr = rho.ln();
    let dth = TWO_PI / n_theta as f64;
    let rows: Vec<f64> = crate::par::map(n_theta, |j| {
        let th = (j as f64 + 0.5) * dth;
        let f = |t: f64| {
            let (re, _) = g(t, th);
            // log(e^{2t} + e^{2 re}) - 2 log ρ
            let (a, b) = (2.0 * t, 2.0 * re);
            let m = a.max(b);
            m + ((a - m).exp() + (b - m).exp()).ln() - 2.0 * lr
        };
        let (mut lo, mut hi) = (t_floor, lr);
        if f(lo) >= 0.0 {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        let tc = 0.5 * (lo + hi);
        let a0 = (tc - 40.0).max(t_floor);
        let panels = 40;
        let pw = (tc - a0) / panels as f64;
        let mut acc = Neumaier::new();
        for p in 0..panels {
            let a = a0 + p as f64 * pw;
            for (x, w) in gx.iter().zip(&gw) {
                let t = a + 0.5 * pw * (x + 1.0);
                let (re, dl2) = g(t, th);
                let val = (2.0 * t).exp() + (2.0 * re).exp() * dl2;
                acc.add(val * 0.5 * pw * w * dth);
            }
        }
        acc.value()
    });
    crate::math::csum(rows)
}

/// Wirtinger lower bound `area ≥ (1 - tol)πρ²` for `f(D(λ, δ′))` inside the
/// chart ball of radius `ρ` around `f(λ)`.
pub fn ball_area_lower_bound_check(
    k: usize,
    rho: f64,
    delta: f64,
    tol: f64,
    model: &SurfaceModel,
) -> Result<BallCheck> {
    if !(rho > 0.0 && rho <= delta) {
        return Err(Error::ChartInvalid { rho, limit: delta });
    }
    if k >= model.locus.len() {
        return Err(Error::Range(format!("no locus point {k}")));
    }
    let h = model.core_height(k);
    let area = graph_ball_area(rho, 64, -h - 80.0, |t, th| {
        let (l, dl, _) = chart_log(model, k, t, th);
        (l.re, dl.norm_sqr())
    });
    let flat_area = graph_ball_area(rho, 64, rho.ln() - 60.0, |_, _| (f64::NEG_INFINITY, 0.0));
    Ok(BallCheck { area, flat_area, passed: area >= (1.0 - tol) * PI * rho * rho })
}
