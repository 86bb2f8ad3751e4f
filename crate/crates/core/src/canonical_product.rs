//! The genus-2 canonical product
//! `ψ(z) = Π (1 - z/λ) exp(z/λ + z²/2λ²)` over a finite locus, in log space.
//!
//! Three evaluators live here: the direct compensated sum (the reference),
//! a box-local-expansion field for bulk evaluation, and per-point Taylor
//! expansions of `log ψ₁` around each `λ` for the zero cores.

use crate::error::{Error, Result};
use crate::lattice_locus::{enumerate_annulus_lattice, LatticeConfig, RadiiSchedule, ZeroLocus};
use crate::math::{wrap_angle, Neumaier, NeumaierC, C64};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use once_cell::race::OnceBox;

/// Bound on `|B_r|·c²/r²` used by the tail estimate. Rigorous for `r/c >= 8`.
pub const TAIL_KAPPA: f64 = 4.0;

/// `log(1 - w) + w + w²/2` on the principal branch; the series
/// `-Σ_{n>=3} wⁿ/n` is used for small `|w|` to avoid cancellation.
pub fn primary_factor_clog(w: C64) -> C64 {
    let a = w.norm();
    if a < 0.25 {
        let mut p = w * w * w;
        let mut acc = C64::new(0.0, 0.0);
        let mut n = 3.0;
        loop {
            let term = p / n;
            acc -= term;
            if term.norm() <= 1e-18 * acc.norm() || n > 80.0 {
                break;
            }
            p *= w;
            n += 1.0;
        }
        acc
    } else {
        let one_minus = C64::new(1.0 - w.re, -w.im);
        if one_minus.re == 0.0 && one_minus.im == 0.0 {
            return C64::new(f64::NEG_INFINITY, 0.0);
        }
        one_minus.ln() + w + w * w * 0.5
    }
}

/// `log|1 - w| + Re(w + w²/2)`; `-inf` at `w = 1`.
pub fn primary_factor_log(w: C64) -> f64 {
    primary_factor_clog(w).re
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductEvaluation {
    /// `-inf` exactly on the locus.
    pub log_abs: f64,
    /// Sum of principal arguments, reduced to (-π, π]; NaN at zeros.
    pub arg: f64,
    /// Bound on the omitted annuli; `inf` when the truncation is inadmissible.
    pub tail_bound: f64,
}

impl ProductEvaluation {
    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }
}

fn product_sum<F: Fn(usize, C64) -> bool>(z: C64, locus: &ZeroLocus, skip: F) -> ProductEvaluation {
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    let mut zero = false;
    for (k, &lam) in locus.points.iter().enumerate() {
        if skip(k, lam) {
            continue;
        }
        if lam == z {
            zero = true;
            continue;
        }
        let l = primary_factor_clog(z / lam);
        re.add(l.re);
        im.add(l.im);
    }
    let tail = locus_tail_bound(z, locus).unwrap_or(f64::INFINITY);
    if zero {
        return ProductEvaluation { log_abs: f64::NEG_INFINITY, arg: f64::NAN, tail_bound: tail };
    }
    ProductEvaluation { log_abs: re.value(), arg: wrap_angle(im.value()), tail_bound: tail }
}

/// Direct compensated evaluation of `log|ψ(z)|`.
pub fn log_abs_psi(z: C64, locus: &ZeroLocus) -> ProductEvaluation {
    product_sum(z, locus, |_, _| false)
}

/// `log|ψ₁(z)|`: the product without the (at most one) `λ` with `|z - λ| < 1`.
pub fn log_abs_psi1(z: C64, locus: &ZeroLocus) -> ProductEvaluation {
    product_sum(z, locus, |_, lam| (z - lam).norm() < 1.0)
}

/// `ψ'/ψ = Σ [1/(z-λ) + 1/λ + z/λ²] = Σ z²/(λ²(z-λ))`.
pub fn log_derivative_psi(z: C64, locus: &ZeroLocus) -> Result<C64> {
    let mut acc = NeumaierC::new();
    let z2 = z * z;
    for &lam in &locus.points {
        if lam == z {
            return Err(Error::Pole { re: z.re, im: z.im });
        }
        acc.add(z2 / (lam * lam * (z - lam)));
    }
    Ok(acc.value())
}

fn tail_term(z_abs: f64, r: f64, c: f64) -> Result<f64> {
    let q = 9.0 * z_abs / r;
    if !(q < 1.0) {
        return Err(Error::InadmissibleTruncation { radius: r, three_z: 3.0 * z_abs });
    }
    let k = r / c;
    Ok(TAIL_KAPPA * k * k * q * q * q / (3.0 * (1.0 - q)))
}

/// `Σ_ℓ κ(r_ℓ/c)² Σ_{n>=3} qⁿ/n` with `q = 9|z|/r_ℓ`, bounded by the
/// geometric tail `q³/(3(1-q))`. Indices past the built schedule use its
/// continuation law.
pub fn annulus_tail_bound(z: C64, omitted: &[u64], schedule: &RadiiSchedule, cfg: &LatticeConfig) -> Result<f64> {
    let cont = schedule.continuation_radii();
    let last = schedule.last_index();
    let mut acc = Neumaier::new();
    for &i in omitted {
        let r = match schedule.radius_of(i) {
            Some(r) => r,
            None => {
                let off = last
                    .and_then(|l| i.checked_sub(l + 1))
                    .ok_or_else(|| Error::Range(alloc::format!("annulus {i} has no radius")))?;
                *cont
                    .get(off as usize)
                    .ok_or_else(|| Error::Range(alloc::format!("annulus {i} beyond the continuation")))?
            }
        };
        acc.add(tail_term(z.norm(), r, cfg.scale())?);
    }
    Ok(acc.value())
}

/// Tail bound for the virtual continuation past the last built annulus.
/// The remainder past double range is dominated by the last term.
pub fn locus_tail_bound(z: C64, locus: &ZeroLocus) -> Result<f64> {
    let cont = locus.schedule.continuation_radii();
    let c = locus.cfg.scale();
    let mut acc = Neumaier::new();
    let mut last = 0.0;
    for &r in &cont {
        last = tail_term(z.norm(), r, c)?;
        acc.add(last);
    }
    acc.add(last);
    Ok(acc.value())
}

/// Worst-case growth constants over low-discrepancy samples in
/// `r_i/3 <= |z| <= 3r_i` for every built annulus, tail bound included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthWindow {
    /// `max (log|ψ| + tail)·c²/r_i²`
    pub kappa_up: f64,
    /// `max -(log|ψ₁| - tail)·c²/|z|²`
    pub kappa_low: f64,
    pub samples: usize,
}

pub fn growth_window(locus: &ZeroLocus, per_annulus: usize, seed: u64) -> Result<GrowthWindow> {
    let c2 = locus.cfg.scale().powi(2);
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::NEG_INFINITY;
    let mut n = 0;
    for b in &locus.batches {
        let r = b.radius;
        let zs = crate::sampling::annulus_samples(per_annulus, r / 3.0, 3.0 * r, seed.wrapping_add(b.index));
        let vals: Vec<Result<(f64, f64)>> = crate::par::map(zs.len(), |k| {
            let z = zs[k];
            let tail = locus_tail_bound(z, locus)?;
            let p = log_abs_psi(z, locus).log_abs;
            let p1 = log_abs_psi1(z, locus).log_abs;
            Ok(((p + tail) * c2 / (r * r), -(p1 - tail) * c2 / z.norm_sqr()))
        });
        for v in vals {
            let (u, l) = v?;
            up = up.max(u);
            low = low.max(l);
            n += 1;
        }
    }
    Ok(GrowthWindow { kappa_up: up, kappa_low: low, samples: n })
}

struct BoxExpansion {
    e0: f64,
    coeffs: Vec<C64>,
}

/// Value of the bulk evaluator at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValue {
    pub log_abs: f64,
    /// `ψ'/ψ`
    pub dlog: C64,
    /// Index of a locus point hit exactly.
    pub hit: Option<usize>,
}

/// Bulk evaluator of `log|ψ|` and `ψ'/ψ`: sources in the surrounding 5×5
/// boxes are summed directly, the rest through a Taylor expansion of
/// `Σ log(λ - z)` about the box centre (convergence ratio at most 0.283).
/// Expansions are built on first use.
pub struct PsiField {
    points: Vec<C64>,
    s1: C64,
    s2: C64,
    log_abs_sum: f64,
    box_size: f64,
    half: i64,
    cell_start: Vec<u32>,
    cell_items: Vec<u32>,
    expansions: Vec<OnceBox<BoxExpansion>>,
    order: usize,
}

impl core::fmt::Debug for PsiField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PsiField")
            .field("points", &self.points.len())
            .field("box_size", &self.box_size)
            .field("half", &self.half)
            .field("order", &self.order)
            .finish()
    }
}

impl PsiField {
    pub const DEFAULT_BOX: f64 = 4.0;
    pub const DEFAULT_ORDER: usize = 30;

    /// Field covering `|Re z|, |Im z| < extent` (direct summation outside).
    pub fn new(points: &[C64], extent: f64) -> Self {
        Self::with_params(points, extent, Self::DEFAULT_BOX, Self::DEFAULT_ORDER)
    }

    pub fn with_params(points: &[C64], extent: f64, box_size: f64, order: usize) -> Self {
        let rmax = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let extent = extent.max(rmax + 3.0 * box_size);
        let half = (extent / box_size).ceil() as i64 + 1;
        let side = (2 * half) as usize;
        let mut s1 = NeumaierC::new();
        let mut s2 = NeumaierC::new();
        let mut la = Neumaier::new();
        let mut counts = vec![0u32; side * side + 1];
        let key = |z: C64| -> usize {
            let i = (z.re / box_size).floor() as i64 + half;
            let j = (z.im / box_size).floor() as i64 + half;
            (i as usize) * side + j as usize
        };
        for &p in points {
            let inv = p.inv();
            s1.add(inv);
            s2.add(inv * inv);
            la.add(p.norm().ln());
            counts[key(p) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (k, &p) in points.iter().enumerate() {
            let c = key(p);
            items[fill[c] as usize] = k as u32;
            fill[c] += 1;
        }
        let mut expansions = Vec::with_capacity(side * side);
        expansions.resize_with(side * side, OnceBox::new);
        PsiField {
            points: points.to_vec(),
            s1: s1.value(),
            s2: s2.value(),
            log_abs_sum: la.value(),
            box_size,
            half,
            cell_start: counts,
            cell_items: items,
            expansions,
            order,
        }
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    fn cell_of(&self, z: C64) -> Option<(i64, i64)> {
        let i = (z.re / self.box_size).floor();
        let j = (z.im / self.box_size).floor();
        let h = self.half as f64;
        if i >= -h && i < h && j >= -h && j < h {
            Some((i as i64, j as i64))
        } else {
            None
        }
    }

    fn cell_items(&self, i: i64, j: i64) -> &[u32] {
        let side = 2 * self.half;
        if i < -self.half || i >= self.half || j < -self.half || j >= self.half {
            return &[];
        }
        let c = ((i + self.half) * side + (j + self.half)) as usize;
        &self.cell_items[self.cell_start[c] as usize..self.cell_start[c + 1] as usize]
    }

    /// Locus points within `radius` of `z` (radius at most one box).
    pub fn neighbours(&self, z: C64, radius: f64) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.cell_of(z).unwrap_or((i64::MIN / 4, i64::MIN / 4));
        let reach = (radius / self.box_size).ceil() as i64;
        let outside = self.cell_of(z).is_none();
        let direct = outside.then(|| (0..self.points.len()).filter(move |&k| (self.points[k] - z).norm() < radius));
        let boxed = (!outside).then(move || {
            (-reach..=reach).flat_map(move |di| {
                (-reach..=reach).flat_map(move |dj| {
                    self.cell_items(i + di, j + dj)
                        .iter()
                        .map(|&k| k as usize)
                        .filter(move |&k| (self.points[k] - z).norm() < radius)
                })
            })
        });
        direct.into_iter().flatten().chain(boxed.into_iter().flatten())
    }

    fn expansion(&self, i: i64, j: i64) -> &BoxExpansion {
        let side = 2 * self.half;
        let c = ((i + self.half) * side + (j + self.half)) as usize;
        self.expansions[c].get_or_init(|| alloc::boxed::Box::new(self.build_expansion(i, j)))
    }

    fn build_expansion(&self, i: i64, j: i64) -> BoxExpansion {
        let s = self.box_size;
        let center = C64::new((i as f64 + 0.5) * s, (j as f64 + 0.5) * s);
        let mut e0 = Neumaier::new();
        let mut coeffs = vec![C64::new(0.0, 0.0); self.order];
        let inv_k: Vec<f64> = (1..=self.order).map(|k| 1.0 / k as f64).collect();
        for &p in &self.points {
            let pi = (p.re / s).floor() as i64;
            let pj = (p.im / s).floor() as i64;
            if (pi - i).abs() <= 2 && (pj - j).abs() <= 2 {
                continue;
            }
            let d = p - center;
            e0.add(0.5 * d.norm_sqr().ln());
            let u = d.inv();
            let mut pw = u;
            for k in 0..self.order {
                coeffs[k] -= pw * inv_k[k];
                pw *= u;
            }
        }
        BoxExpansion { e0: e0.value(), coeffs }
    }

    pub fn eval(&self, z: C64) -> FieldValue {
        let Some((i, j)) = self.cell_of(z) else {
            return self.eval_direct(z);
        };
        let mut near_log = 0.0;
        let mut near_d = C64::new(0.0, 0.0);
        for di in -2..=2 {
            for dj in -2..=2 {
                for &k in self.cell_items(i + di, j + dj) {
                    let d = z - self.points[k as usize];
                    let q = d.norm_sqr();
                    if q == 0.0 {
                        return FieldValue {
                            log_abs: f64::NEG_INFINITY,
                            dlog: C64::new(f64::NAN, f64::NAN),
                            hit: Some(k as usize),
                        };
                    }
                    near_log += 0.5 * q.ln();
                    near_d += d.conj() / q;
                }
            }
        }
        let ex = self.expansion(i, j);
        let s = self.box_size;
        let t = z - C64::new((i as f64 + 0.5) * s, (j as f64 + 0.5) * s);
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for k in (0..self.order).rev() {
            dp = dp * t + ex.coeffs[k] * (k as f64 + 1.0);
            p = p * t + ex.coeffs[k];
        }
        p *= t;
        let poly = z * self.s1 + z * z * self.s2 * 0.5;
        let log_abs = (near_log + ex.e0 - self.log_abs_sum) + p.re + poly.re;
        let dlog = near_d + dp + self.s1 + z * self.s2;
        FieldValue { log_abs, dlog, hit: None }
    }

    fn eval_direct(&self, z: C64) -> FieldValue {
        let mut re = Neumaier::new();
        let mut d = NeumaierC::new();
        let z2 = z * z;
        for (k, &lam) in self.points.iter().enumerate() {
            if lam == z {
                return FieldValue { log_abs: f64::NEG_INFINITY, dlog: C64::new(f64::NAN, f64::NAN), hit: Some(k) };
            }
            re.add(primary_factor_log(z / lam));
            d.add(z2 / (lam * lam * (z - lam)));
        }
        FieldValue { log_abs: re.value(), dlog: d.value(), hit: None }
    }
}

/// Taylor expansion of `G = log ψ₁` about one locus point `λ`:
/// `G(λ + d) = Σ a_k d^k`, valid for `|d|` below the distance to the
/// nearest other zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalExpansion {
    pub index: usize,
    pub lambda: C64,
    pub coeffs: Vec<C64>,
    /// Distance to the nearest other locus point.
    pub radius: f64,
}

/// `log ψ` and the scaled gradient `|d|·∂v` at `λ + e^{t+iθ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalValue {
    pub d: C64,
    pub z: C64,
    /// Complex `log ψ(z)`; the imaginary part is a representative mod 2π.
    pub log_psi: C64,
    pub v: f64,
    /// `e^t ∂v`
    pub g: C64,
}

impl LocalExpansion {
    pub const DEFAULT_ORDER: usize = 30;

    pub fn new(index: usize, points: &[C64], order: usize) -> Self {
        let lam = points[index];
        let order = order.max(2);
        let mut a = vec![NeumaierC::new(); order + 1];
        let mut radius = f64::INFINITY;
        let inv_k: Vec<f64> = (0..=order).map(|k| if k == 0 { 0.0 } else { 1.0 / k as f64 }).collect();
        for (k, &p) in points.iter().enumerate() {
            if k == index {
                continue;
            }
            radius = radius.min((p - lam).norm());
            a[0].add(primary_factor_clog(lam / p));
            let ip = p.inv();
            let diff = p - lam;
            let u = diff.inv();
            a[1].add(lam * lam * ip * ip * (-u));
            a[2].add((ip * ip - u * u) * 0.5);
            let mut pw = u * u;
            for kk in 3..=order {
                pw *= u;
                a[kk].add(-pw * inv_k[kk]);
            }
        }
        LocalExpansion { index, lambda: lam, coeffs: a.iter().map(|x| x.value()).collect(), radius }
    }

    /// `G(λ + d)`
    pub fn log_psi1(&self, d: C64) -> C64 {
        let mut p = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            p = p * d + c;
        }
        p
    }

    /// `G'(λ + d)`
    pub fn dlog_psi1(&self, d: C64) -> C64 {
        let mut p = C64::new(0.0, 0.0);
        for k in (1..self.coeffs.len()).rev() {
            p = p * d + self.coeffs[k] * k as f64;
        }
        p
    }

    /// `log|ψ'(λ)| = Re a_0 - log|λ| + 3/2`.
    pub fn log_abs_derivative(&self) -> f64 {
        self.coeffs[0].re - self.lambda.norm().ln() + 1.5
    }

    /// `h = log|ψ'(λ)| + mα|λ|²`, so `v(λ + d) ≈ h + log|d|` for small `d`.
    pub fn core_height(&self, malpha: f64) -> f64 {
        self.log_abs_derivative() + malpha * self.lambda.norm_sqr()
    }

    /// Evaluation in log-polar coordinates `d = e^{t+iθ}`; `d` may underflow.
    pub fn eval_log_polar(&self, t: f64, theta: f64, malpha: f64) -> LocalValue {
        let lam = self.lambda;
        let et = t.exp();
        let (s, c) = theta.sin_cos();
        let d = C64::new(et * c, et * s);
        let g1 = self.log_psi1(d);
        let dg1 = self.dlog_psi1(d);
        let w = C64::new(1.0, 0.0) + d / lam;
        let log_shift = C64::new(t - lam.norm().ln(), theta + core::f64::consts::PI - lam.arg());
        let log_psi = g1 + log_shift + w + w * w * 0.5;
        let z = lam + d;
        let v = log_psi.re + malpha * z.norm_sqr();
        let rest = (dg1 + lam.inv() + z / (lam * lam)) * 0.5 + z.conj() * malpha;
        let g = C64::new(0.5 * c, -0.5 * s) + rest * et;
        LocalValue { d, z, log_psi, v, g }
    }

    pub fn eval(&self, d: C64, malpha: f64) -> LocalValue {
        let r = d.norm();
        if r == 0.0 {
            return self.eval_log_polar(f64::NEG_INFINITY, 0.0, malpha);
        }
        self.eval_log_polar(r.ln(), d.arg(), malpha)
    }
}

/// Brute-force form of the Stirling-type product bound on the unperturbed
/// lattice: the minimum over `μ₀ ∈ A_r ∩ cΓ` of
/// `Σ (log|μ - μ₀| - log|μ|)·c²/r²` over `μ ∈ cΓ`, `μ ≠ μ₀`, with
/// `|Re(μ-μ₀)|, |Im(μ-μ₀)| <= ηr`.
pub fn stirling_scan(r: f64, eta: f64, cfg: &LatticeConfig) -> Result<(f64, C64)> {
    let mus = enumerate_annulus_lattice(r, cfg)?;
    let c = cfg.scale();
    let reach = (eta * r / c).floor() as i64;
    let vals = crate::par::map(mus.len(), |k| {
        let mu0 = mus[k];
        let mut acc = Neumaier::new();
        for a in -reach..=reach {
            for b in -reach..=reach {
                if a == 0 && b == 0 {
                    continue;
                }
                let off = C64::new(a as f64 * c, b as f64 * c);
                let mu = mu0 + off;
                acc.add(off.norm().ln() - mu.norm().ln());
            }
        }
        acc.value() * c * c / (r * r)
    });
    let mut best = (f64::INFINITY, C64::new(0.0, 0.0));
    for (k, v) in vals.into_iter().enumerate() {
        if v < best.0 {
            best = (v, mus[k]);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_locus::{build_zero_locus, uniform_cases, OffsetCase};

    fn single_annulus() -> ZeroLocus {
        let cfg = LatticeConfig::new(5).unwrap();
        let s = RadiiSchedule::desk(&cfg, 1).unwrap();
        build_zero_locus(&s, &uniform_cases(&s, &OffsetCase::sparse()), &cfg, 0).unwrap()
    }

    #[test]
    fn primary_factor_examples() {
        assert_eq!(primary_factor_log(C64::new(0.0, 0.0)), 0.0);
        assert_eq!(primary_factor_log(C64::new(1.0, 0.0)), f64::NEG_INFINITY);
        let v = primary_factor_log(C64::new(-1.0, 0.0));
        assert!((v - (2f64.ln() - 0.5)).abs() < 1e-15);
        assert!((v - 0.193147).abs() < 1e-6);
    }

    #[test]
    fn series_branch_matches_closed_form() {
        for w in [C64::new(0.2, 0.1), C64::new(-0.24, 0.0), C64::new(0.0, 0.249)] {
            let closed = C64::new(1.0 - w.re, -w.im).ln() + w + w * w * 0.5;
            assert!((primary_factor_clog(w) - closed).norm() < 1e-14);
        }
    }

    #[test]
    fn psi_at_origin_and_zeros() {
        let locus = single_annulus();
        let e = log_abs_psi(C64::new(0.0, 0.0), &locus);
        assert_eq!(e.log_abs, 0.0);
        let lam = locus.points[17];
        assert!(log_abs_psi(lam, &locus).is_zero());
        assert!(log_abs_psi1(lam, &locus).log_abs.is_finite());
    }

    #[test]
    fn psi1_differs_by_the_omitted_factor() {
        let locus = single_annulus();
        let lam = locus.points[42];
        let z = lam + C64::new(0.5, 0.0);
        let full = log_abs_psi(z, &locus).log_abs;
        let punct = log_abs_psi1(z, &locus).log_abs;
        assert!((full - punct - primary_factor_log(z / lam)).abs() < 1e-12);
        let far = C64::new(3.3, -1.7);
        assert_eq!(log_abs_psi(far, &locus).log_abs, log_abs_psi1(far, &locus).log_abs);
    }

    #[test]
    fn log_derivative_examples() {
        let locus = single_annulus();
        assert_eq!(log_derivative_psi(C64::new(0.0, 0.0), &locus).unwrap(), C64::new(0.0, 0.0));
        let mut one = ZeroLocus::empty(LatticeConfig { c: 5 });
        one.points.push(C64::new(2.0, 0.0));
        let d = log_derivative_psi(C64::new(1.0, 0.0), &one).unwrap();
        assert!((d - C64::new(-0.25, 0.0)).norm() < 1e-15);
        assert!(matches!(log_derivative_psi(C64::new(2.0, 0.0), &one), Err(Error::Pole { .. })));
    }

    #[test]
    fn tail_bound_examples() {
        let cfg = LatticeConfig::new(5).unwrap();
        let s = RadiiSchedule::desk(&cfg, 1).unwrap();
        assert_eq!(annulus_tail_bound(C64::new(10.0, 0.0), &[], &s, &cfg).unwrap(), 0.0);
        let mut s2 = s.clone();
        s2.radii = alloc::vec![40.0, 1000.0];
        s2.growth = crate::lattice_locus::GrowthLaw::Multiplicative(4.0);
        let b = annulus_tail_bound(C64::new(10.0, 0.0), &[2], &s2, &cfg).unwrap();
        let q: f64 = 0.09;
        let expect = TAIL_KAPPA * 200.0 * 200.0 * q.powi(3) / (3.0 * (1.0 - q));
        assert!((b - expect).abs() < 1e-12 * expect);
        assert!(matches!(
            annulus_tail_bound(C64::new(200.0, 0.0), &[2], &s2, &cfg),
            Err(Error::InadmissibleTruncation { .. })
        ));
    }

    #[test]
    fn field_matches_direct_sum() {
        let locus = single_annulus();
        let field = PsiField::new(&locus.points, 130.0);
        for k in 0..60 {
            let z = C64::from_polar(1.0 + 1.9 * k as f64, 0.37 * k as f64);
            let fv = field.eval(z);
            let direct = log_abs_psi(z, &locus).log_abs;
            let d = log_derivative_psi(z, &locus).unwrap();
            assert!((fv.log_abs - direct).abs() < 1e-10, "{z}: {} vs {direct}", fv.log_abs);
            assert!((fv.dlog - d).norm() < 1e-10 * (1.0 + d.norm()));
        }
        // outside the extent it falls back to direct summation
        let z = C64::new(400.0, 10.0);
        assert!((field.eval(z).log_abs - log_abs_psi(z, &locus).log_abs).abs() < 1e-9);
    }

    #[test]
    fn local_expansion_matches_direct_sum() {
        let locus = single_annulus();
        let k = 11;
        let le = LocalExpansion::new(k, &locus.points, 30);
        let lam = locus.points[k];
        for (r, th) in [(0.3, 0.2), (0.9, 2.0), (0.05, -1.0), (1.2, 3.0)] {
            let d = C64::from_polar(r, th);
            let lv = le.eval(d, 0.2);
            let direct = log_abs_psi(lam + d, &locus).log_abs + 0.2 * (lam + d).norm_sqr();
            assert!((lv.v - direct).abs() < 1e-10, "r={r}: {} vs {direct}", lv.v);
            let dl = log_derivative_psi(lam + d, &locus).unwrap();
            let dv = dl * 0.5 + (lam + d).conj() * 0.2;
            assert!((lv.g - dv * r).norm() < 1e-9 * (1.0 + (dv * r).norm()));
        }
        let e = log_abs_psi1(lam, &locus).log_abs;
        assert!((le.coeffs[0].re - e).abs() < 1e-10);
    }

    #[test]
    fn stirling_constant_is_moderate() {
        let cfg = LatticeConfig::new(5).unwrap();
        let (m, _) = stirling_scan(200.0, 0.25, &cfg).unwrap();
        assert!(m < 0.0 && m > -5.0, "{m}");
    }

    #[test]
    fn growth_window_is_finite_and_ordered() {
        let locus = single_annulus();
        let w = growth_window(&locus, 200, 0).unwrap();
        assert_eq!(w.samples, 200);
        assert!(w.kappa_up.is_finite() && w.kappa_low.is_finite());
        // ψ grows no faster than the section can absorb
        assert!(w.kappa_up < 50.0 && w.kappa_low < 50.0, "{w:?}");
    }
}
