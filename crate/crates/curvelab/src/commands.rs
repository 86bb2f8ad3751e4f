//! The artifact-producing subcommands. Each returns its tables in memory;
//! the caller decides whether to write them.

use crate::config::ExperimentConfig;
use crate::output::{float, Artifact, Table};
use anyhow::Result;
use curvelab_core::canonical_product::{log_abs_psi, log_abs_psi1};
use curvelab_core::current_profiler::profile_sequence;
use curvelab_core::nevanlinna_calculus::{base_order, boundary_length, disc_area, jensen_fiber_t, order_function};
use curvelab_core::torus_examples::torus_intersection_count;
use curvelab_core::C64;
use std::fmt::Write as _;

/// Tables plus a human-readable summary. `ok` is false when some row was
/// flagged or some verdict failed.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub report: String,
    pub ok: bool,
}

pub fn gen_locus(cfg: &ExperimentConfig) -> Result<Outcome> {
    let locus = cfg.locus()?;
    let mut t = Table::new(&["re", "im", "annulus_index", "offset_re", "offset_im", "case_tag"])?;
    for k in 0..locus.len() {
        let p = locus.points[k];
        let off = p - locus.lattice[k];
        t.row([
            float(p.re),
            float(p.im),
            locus.annulus_of[k].to_string(),
            float(off.re),
            float(off.im),
            locus.case_of[k].label().to_string(),
        ])?;
    }
    let report = format!("{} points in {} annuli", locus.len(), locus.batches.len());
    Ok(Outcome { artifacts: vec![t.finish("locus.csv")?], report, ok: true })
}

pub fn eval_psi(cfg: &ExperimentConfig) -> Result<Outcome> {
    let locus = cfg.locus()?;
    let (a, n) = (cfg.scan.eval_extent, cfg.scan.eval_n);
    let h = 2.0 * a / (n - 1) as f64;
    let pts: Vec<C64> = (0..n * n).map(|k| C64::new(-a + (k % n) as f64 * h, -a + (k / n) as f64 * h)).collect();
    let rows = curvelab_core::par::map(pts.len(), |k| {
        let z = pts[k];
        let e = log_abs_psi(z, &locus);
        (e.log_abs, e.tail_bound, log_abs_psi1(z, &locus).log_abs)
    });
    let mut t = Table::new(&["z_re", "z_im", "log_abs_psi", "tail_bound", "log_abs_psi1"])?;
    let mut inadmissible = 0;
    for (z, (p, tail, p1)) in pts.iter().zip(&rows) {
        if !tail.is_finite() {
            inadmissible += 1;
        }
        t.row([float(z.re), float(z.im), float(*p), float(*tail), float(*p1)])?;
    }
    let report = format!("{} grid points, {inadmissible} with an inadmissible tail bound", pts.len());
    Ok(Outcome { artifacts: vec![t.finish("psi_grid.csv")?], report, ok: true })
}

pub fn area_scan(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let mut t = Table::new(&["r", "area", "error", "T", "jensen_T", "length", "ratio", "flagged"])?;
    let mut flagged = 0;
    for &r in &cfg.scan.radii {
        let a = disc_area(r, &model, &grid)?;
        let (tv, jt, tflag) = if r >= 1.0 {
            let o = order_function(r, &model, &grid)?;
            let j = jensen_fiber_t(r, &model)?;
            (o.value, base_order(r) - model.eps1 * j.value, o.flagged || j.flagged)
        } else {
            (f64::NAN, f64::NAN, false)
        };
        let len = boundary_length(r, &model);
        let flag = a.flagged || tflag || len.flagged;
        flagged += flag as usize;
        t.row([
            float(r),
            float(a.area),
            float(a.estimated_error),
            float(tv),
            float(jt),
            float(len.value),
            float(len.value / a.area),
            flag.to_string(),
        ])?;
    }
    let report = format!("{} radii, {flagged} flagged", cfg.scan.radii.len());
    Ok(Outcome { artifacts: vec![t.finish("area_scan.csv")?], report, ok: flagged == 0 })
}

pub fn profile(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let part = cfg.partition()?;
    let mut t = Table::new(&["selector", "j", "r", "region_label", "fraction", "total_area"])?;
    let mut verdicts = String::new();
    let mut flagged = 0;
    for sel in cfg.selectors()? {
        let label = sel.label();
        let seq = match profile_sequence(&sel, &part, &model, &grid) {
            Ok(s) => s,
            Err(e) => {
                writeln!(verdicts, "{label}: skipped ({e})")?;
                continue;
            }
        };
        for e in &seq {
            let p = &e.profile;
            flagged += p.flagged as usize;
            for (l, f) in p.labels.iter().zip(&p.fractions) {
                t.row([label.clone(), e.j.to_string(), float(p.radius), l.clone(), float(*f), float(p.total_area)])?;
            }
        }
        let first = &seq[0].profile;
        let last = &seq[seq.len() - 1].profile;
        let trend = |a: f64, b: f64| {
            if b > a {
                "rising"
            } else if b < a {
                "falling"
            } else {
                "flat"
            }
        };
        writeln!(
            verdicts,
            "{label}: {} radii, last r = {}: U_inf {:.4} ({}), tubes {:.4} ({}), remainder {:.4} ({}){}",
            seq.len(),
            last.radius,
            last.infinity(),
            trend(first.infinity(), last.infinity()),
            last.tubes().iter().sum::<f64>(),
            trend(first.tubes().iter().sum(), last.tubes().iter().sum()),
            last.remainder(),
            trend(first.remainder(), last.remainder()),
            if seq.iter().any(|e| e.profile.flagged) { ", quadrature flagged" } else { "" },
        )?;
    }
    let artifacts = vec![
        t.finish("profile.csv")?,
        Artifact { name: "profile_verdicts.txt".into(), bytes: verdicts.clone().into_bytes() },
    ];
    Ok(Outcome { artifacts, report: verdicts, ok: flagged == 0 })
}

pub fn torus(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = cfg.torus_model()?;
    let counts = cfg.torus.radii.iter().map(|&r| torus_intersection_count(r, &model)).collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["r", "count", "count_over_r2"])?;
    for c in &counts {
        t.row([float(c.r), c.count.to_string(), float(c.count as f64 / (c.r * c.r))])?;
    }
    let fiber = counts.iter().map(|c| c.max_fiber).max().unwrap_or(0);
    let report = format!("{} radii, largest per-lattice-point fiber {fiber}", counts.len());
    Ok(Outcome { artifacts: vec![t.finish("torus_counts.csv")?], report, ok: true })
}
