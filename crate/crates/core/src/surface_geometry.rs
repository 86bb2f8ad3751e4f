//! The metric model on `X = P(L_m ⊕ C)` and the pulled-back density of the
//! Kähler form along `f = [ψ·s_m : 1]`.
//!
//! Convention: `dd^c u` has Lebesgue density `Δu/(4π)`, so the base form
//! has density `1/π` and `∫_{D_r} dd^c|z|² = r²`.

use crate::canonical_product::{log_abs_psi, LocalExpansion, PsiField};
use crate::error::{Error, Result};
use crate::lattice_locus::ZeroLocus;
use crate::math::{softplus, C64};
use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use once_cell::race::OnceBox;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulledBackDensity {
    /// `base + eps1·fiber`
    pub value: f64,
    /// Density of `π₁*ω_C`.
    pub base: f64,
    /// Density of `dd^c log(1 + e^{2v})`, before the `eps1` factor.
    pub fiber: f64,
}

/// `v` and `∂v` at a point, from the bulk evaluator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointEval {
    pub v: f64,
    pub dv: C64,
    pub hit: Option<usize>,
}

#[derive(Clone)]
pub struct SurfaceModel {
    pub alpha: f64,
    pub m: u32,
    pub eps1: f64,
    pub kappa_growth: f64,
    pub locus: Arc<ZeroLocus>,
    field: Arc<PsiField>,
    locals: Arc<Vec<OnceBox<LocalExpansion>>>,
    pub local_order: usize,
}

impl core::fmt::Debug for SurfaceModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SurfaceModel")
            .field("alpha", &self.alpha)
            .field("m", &self.m)
            .field("eps1", &self.eps1)
            .field("kappa_growth", &self.kappa_growth)
            .field("locus_len", &self.locus.len())
            .finish()
    }
}

impl SurfaceModel {
    pub fn new(alpha: f64, m: u32, eps1: f64, kappa_growth: f64, locus: ZeroLocus) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
        }
        if m == 0 {
            return Err(Error::param("m", "must be a positive integer"));
        }
        if !(eps1 >= 0.0 && eps1.is_finite()) {
            return Err(Error::param("eps1", format!("must be nonnegative, got {eps1}")));
        }
        if !(kappa_growth >= 0.0 && kappa_growth.is_finite()) {
            return Err(Error::param("kappa_growth", format!("must be nonnegative, got {kappa_growth}")));
        }
        let c2 = locus.cfg.scale().powi(2);
        let margin = m as f64 * alpha - kappa_growth / c2;
        if !(margin > 0.0) {
            return Err(Error::param("kappa_growth", format!("m·alpha - kappa_growth/c² = {margin} must be positive")));
        }
        let extent = (3.0 * locus.max_modulus()).max(64.0) + 8.0;
        let field = PsiField::new(&locus.points, extent);
        let mut locals = Vec::with_capacity(locus.len());
        locals.resize_with(locus.len(), OnceBox::new);
        Ok(SurfaceModel {
            alpha,
            m,
            eps1,
            kappa_growth,
            locus: Arc::new(locus),
            field: Arc::new(field),
            locals: Arc::new(locals),
            local_order: LocalExpansion::DEFAULT_ORDER,
        })
    }

    pub fn malpha(&self) -> f64 {
        self.m as f64 * self.alpha
    }

    pub fn field(&self) -> &PsiField {
        &self.field
    }

    /// Taylor data of `log ψ₁` around locus point `k`, built on first use.
    pub fn local(&self, k: usize) -> &LocalExpansion {
        self.locals[k].get_or_init(|| Box::new(LocalExpansion::new(k, &self.locus.points, self.local_order)))
    }

    /// `h(λ) = log|ψ'(λ)| + mα|λ|²`.
    pub fn core_height(&self, k: usize) -> f64 {
        self.local(k).core_height(self.malpha())
    }

    /// `log‖s_m‖ = mα|z|²`.
    pub fn section_log_norm(&self, z: C64) -> f64 {
        self.malpha() * z.norm_sqr()
    }

    /// `v = log|ψ(z)| + mα|z|²` by direct summation; `-inf` on the locus.
    pub fn fiber_log_norm(&self, z: C64) -> f64 {
        log_abs_psi(z, &self.locus).log_abs + self.section_log_norm(z)
    }

    /// `v` and `∂v = ψ'/(2ψ) + mα z̄` from the bulk evaluator.
    pub fn eval(&self, z: C64) -> PointEval {
        let f = self.field.eval(z);
        let ma = self.malpha();
        PointEval { v: f.log_abs + ma * z.norm_sqr(), dv: f.dlog * 0.5 + z.conj() * ma, hit: f.hit }
    }

    /// Fiber density `(1/4π)[8mα s + 16 s(1-s)|∂v|²]`, `s = logistic(2v)`,
    /// with the second term formed in log space.
    pub fn fiber_density(&self, v: f64, dv_norm_sqr: f64) -> f64 {
        let two_v = 2.0 * v;
        let ln_s = -softplus(-two_v);
        let ln_1ms = -softplus(two_v);
        let s = ln_s.exp();
        let second = if dv_norm_sqr > 0.0 { (ln_s + ln_1ms + dv_norm_sqr.ln()).exp() } else { 0.0 };
        (8.0 * self.malpha() * s + 16.0 * second) / (4.0 * PI)
    }

    pub fn pullback_density(&self, z: C64) -> PulledBackDensity {
        let e = self.eval(z);
        let base = 1.0 / PI;
        let fiber = match e.hit {
            // s|∂v|² → e^{2h}/4 at a zero
            Some(k) => (2.0 * self.core_height(k)).exp() / PI,
            None => self.fiber_density(e.v, e.dv.norm_sqr()),
        };
        PulledBackDensity { value: base + self.eps1 * fiber, base, fiber }
    }

    /// Limit of the density deep inside `v ≫ 1`: `1/π + eps1·2mα/π`.
    pub fn deep_density(&self) -> f64 {
        (1.0 + 2.0 * self.eps1 * self.malpha()) / PI
    }

    pub fn curve_speed(&self, z: C64) -> f64 {
        self.pullback_density(z).value.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_locus::{build_zero_locus, uniform_cases, LatticeConfig, OffsetCase, RadiiSchedule};

    fn empty_model(eps1: f64) -> SurfaceModel {
        SurfaceModel::new(0.05, 4, eps1, 1.0, ZeroLocus::empty(LatticeConfig { c: 5 })).unwrap()
    }

    fn one_annulus(eps1: f64) -> SurfaceModel {
        let cfg = LatticeConfig::new(5).unwrap();
        let s = RadiiSchedule::desk(&cfg, 1).unwrap();
        let locus = build_zero_locus(&s, &uniform_cases(&s, &OffsetCase::sparse()), &cfg, 0).unwrap();
        SurfaceModel::new(0.05, 4, eps1, 1.0, locus).unwrap()
    }

    #[test]
    fn section_norm_examples() {
        let m = empty_model(0.1);
        assert_eq!(m.section_log_norm(C64::new(0.0, 0.0)), 0.0);
        let m2 = SurfaceModel::new(0.125, 4, 0.1, 1.0, ZeroLocus::empty(LatticeConfig { c: 5 })).unwrap();
        assert!((m2.section_log_norm(C64::new(0.6, 0.8)) - 0.5).abs() < 1e-15);
        let z = C64::new(1.3, -0.4);
        assert!((m.section_log_norm(z * 2.0) - 4.0 * m.section_log_norm(z)).abs() < 1e-12);
    }

    #[test]
    fn fiber_log_norm_examples() {
        let m = one_annulus(0.1);
        assert_eq!(m.fiber_log_norm(C64::new(0.0, 0.0)), 0.0);
        assert_eq!(m.fiber_log_norm(m.locus.points[3]), f64::NEG_INFINITY);
    }

    #[test]
    fn density_at_origin_without_zeros() {
        let m = empty_model(0.1);
        let d = m.pullback_density(C64::new(0.0, 0.0));
        assert!((d.fiber - m.malpha() / PI).abs() < 1e-15);
        assert!((d.value - (1.0 + 0.1 * m.malpha()) / PI).abs() < 1e-15);
        assert!((m.curve_speed(C64::new(0.0, 0.0)) - ((1.0 + 0.1 * m.malpha()) / PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn density_deep_limit() {
        let m = empty_model(0.1);
        let d = m.pullback_density(C64::new(30.0, 0.0));
        assert!((d.value - m.deep_density()).abs() < 1e-14);
    }

    fn fd_laplacian(m: &SurfaceModel, z: C64, h: f64) -> f64 {
        let u = |w: C64| softplus(2.0 * m.eval(w).v);
        let c = u(z);
        let s = u(z + h) + u(z - h) + u(z + C64::new(0.0, h)) + u(z - C64::new(0.0, h));
        (s - 4.0 * c) / (h * h)
    }

    #[test]
    fn fiber_density_matches_finite_difference_laplacian() {
        let m = one_annulus(0.1);
        let pts = crate::sampling::annulus_samples(100, 0.5, 60.0, 11);
        let mut tested = 0;
        for z in pts {
            let near = m.field().neighbours(z, 0.5).next().is_some();
            if near {
                continue;
            }
            let exact = m.pullback_density(z).fiber;
            let l1 = fd_laplacian(&m, z, 2e-3);
            let l2 = fd_laplacian(&m, z, 1e-3);
            let fd = (4.0 * l2 - l1) / 3.0 / (4.0 * PI);
            assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3), "{z}: {fd} vs {exact}");
            tested += 1;
        }
        assert!(tested > 80);
    }

    #[test]
    fn density_is_continuous_into_a_zero() {
        let mut locus = ZeroLocus::empty(LatticeConfig { c: 5 });
        locus.points.push(C64::new(2.0, 0.5));
        let m = SurfaceModel::new(0.05, 4, 0.1, 1.0, locus).unwrap();
        let lam = C64::new(2.0, 0.5);
        let at = m.pullback_density(lam).fiber;
        for delta in [1e-6, 1e-8] {
            let near = m.pullback_density(lam + C64::new(delta, delta)).fiber;
            assert!((near - at).abs() < 1e-4 * at, "{near} vs {at}");
        }
    }

    #[test]
    fn density_positive_on_grid() {
        let m = one_annulus(0.1);
        for i in -30..=30 {
            for j in -30..=30 {
                let d = m.pullback_density(C64::new(i as f64 * 1.7 + 0.01, j as f64 * 1.7 + 0.02));
                assert!(d.value > 0.0 && d.fiber >= 0.0 && d.base > 0.0);
            }
        }
    }

    #[test]
    fn growth_margin_enforced() {
        let r = SurfaceModel::new(0.05, 4, 0.1, 5.0, ZeroLocus::empty(LatticeConfig { c: 5 }));
        assert!(r.is_err());
    }
}
