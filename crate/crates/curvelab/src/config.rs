//! Experiment configuration: one TOML file with sections `lattice`,
//! `offsets`, `model`, `quadrature`, `profiler`, `torus`, `scan`, `output`.
//! Every section and key is optional and falls back to the defaults below.

use anyhow::{anyhow, bail, Context, Result};
use curvelab_core::current_profiler::{Parity, RegionPartition, SubsequenceSelector};
use curvelab_core::lattice_locus::{
    build_zero_locus, marked_points, sigma_cases, uniform_cases, Continuation, GrowthLaw, IndexSet, LatticeConfig,
    OffsetCase, RadiiSchedule, ZeroLocus,
};
use curvelab_core::nevanlinna_calculus::QuadratureGrid;
use curvelab_core::surface_geometry::SurfaceModel;
use curvelab_core::torus_examples::TorusLineModel;
use curvelab_core::{Error, C64};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSection,
    pub offsets: OffsetSection,
    pub model: ModelSection,
    pub quadrature: QuadratureSection,
    pub profiler: ProfilerSection,
    pub torus: TorusSection,
    pub scan: ScanSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub c: u32,
    pub base_multiplier: f64,
    /// `multiplicative` (`r_{i+1} = g·r_i`) or `power` (`r_{i+1} = r_i^g`).
    pub growth: String,
    pub growth_factor: f64,
    pub annuli: usize,
    pub first_index: u64,
    /// `quartic` (`r ↦ r⁴`), `same` or `none`.
    pub continuation: String,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection {
            c: 5,
            base_multiplier: 8.0,
            growth: "multiplicative".into(),
            growth_factor: 4.0,
            annuli: 2,
            first_index: 1,
            continuation: "quartic".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub index: u64,
    /// `I`, `II`, `II'`, `III` or `III'`.
    pub tag: String,
    #[serde(default)]
    pub set: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OffsetSection {
    /// `case-i` (sparse everywhere), `sigma` (from the annulus index) or
    /// `explicit` (the `cases` list).
    pub mode: String,
    pub marked: usize,
    pub seed: u64,
    pub cases: Vec<CaseSpec>,
}

impl Default for OffsetSection {
    fn default() -> Self {
        OffsetSection { mode: "case-i".into(), marked: 1, seed: 0, cases: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: f64,
    pub m: u32,
    pub eps1: f64,
    pub kappa_growth: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { alpha: 0.05, m: 4, eps1: 0.1, kappa_growth: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub n_radial: usize,
    pub n_angular: usize,
    pub radial_per_unit: f64,
    pub refinement_radius: f64,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let g = QuadratureGrid::default();
        QuadratureSection {
            n_radial: g.n_radial,
            n_angular: g.n_angular,
            radial_per_unit: g.radial_per_unit,
            refinement_radius: g.refinement_radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilerSection {
    /// `log M`
    pub log_infinity_threshold: f64,
    pub tube_radius: f64,
    pub delta_prime: f64,
    pub probe_u0: [f64; 2],
    pub probe_eps: f64,
    pub selectors: Vec<String>,
}

impl Default for ProfilerSection {
    fn default() -> Self {
        ProfilerSection {
            log_infinity_threshold: 20.0,
            tube_radius: 0.1,
            delta_prime: 0.4,
            probe_u0: [1.0, 0.0],
            probe_eps: 0.1,
            selectors: vec!["THIRD".into(), "CASE({},odd)".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusSection {
    pub slope: f64,
    pub m1: [f64; 2],
    pub m2: [f64; 2],
    pub b1: [f64; 2],
    pub b2: [f64; 2],
    pub domain_radius: f64,
    pub radii: Vec<f64>,
}

impl Default for TorusSection {
    fn default() -> Self {
        let t = TorusLineModel::default();
        let pair = |z: C64| [z.re, z.im];
        TorusSection {
            slope: t.slope,
            m1: pair(t.m1),
            m2: pair(t.m2),
            b1: pair(t.b1),
            b2: pair(t.b2),
            domain_radius: t.domain_radius,
            radii: vec![20.0, 40.0, 80.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub radii: Vec<f64>,
    pub eval_extent: f64,
    pub eval_n: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { radii: vec![5.0, 10.0, 20.0, 40.0], eval_extent: 50.0, eval_n: 101 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

fn c64(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

/// Prefix core parameter errors with the section they came from.
fn in_section(section: &str, e: Error) -> anyhow::Error {
    match e {
        Error::InvalidParameter { field, reason } => anyhow!("field `{section}.{field}`: {reason}"),
        other => anyhow!("section `{section}`: {other}"),
    }
}

fn positive(field: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        bail!("field `{field}`: must be a positive number, got {x}");
    }
    Ok(())
}

pub fn parse_selector(s: &str) -> Result<SubsequenceSelector> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("third") {
        return Ok(SubsequenceSelector::Third);
    }
    let inner = t
        .strip_prefix("CASE(")
        .and_then(|x| x.strip_suffix(')'))
        .ok_or_else(|| anyhow!("selector `{s}`: expected THIRD or CASE(<set>,odd|even)"))?;
    let (set, parity) = inner.rsplit_once(',').ok_or_else(|| anyhow!("selector `{s}`: missing parity"))?;
    let parity = match parity.trim() {
        "odd" => Parity::Odd,
        "even" => Parity::Even,
        p => bail!("selector `{s}`: parity `{p}` is not odd or even"),
    };
    Ok(SubsequenceSelector::Case { set: parse_index_set(set.trim())?, parity })
}

/// `{}`, `Z+` or `{1;3;4}`.
pub fn parse_index_set(s: &str) -> Result<IndexSet> {
    if s == "Z+" {
        return Ok(IndexSet::All);
    }
    let body = s
        .strip_prefix('{')
        .and_then(|x| x.strip_suffix('}'))
        .ok_or_else(|| anyhow!("index set `{s}`: expected {{}}, Z+ or {{a;b;...}}"))?;
    if body.trim().is_empty() {
        return Ok(IndexSet::Empty);
    }
    let elems = body
        .split(';')
        .map(|x| x.trim().parse::<u32>().with_context(|| format!("index set `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    IndexSet::finite(elems).map_err(|e| anyhow!("index set `{s}`: {e}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| anyhow!("config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Re-checks every module-level invariant reachable from the file.
    pub fn validate(&self) -> Result<()> {
        self.lattice_config()?;
        self.schedule()?;
        self.cases()?;
        let q = &self.quadrature;
        self.grid()?;
        positive("quadrature.refinement_radius", q.refinement_radius)?;
        let m = &self.model;
        positive("model.alpha", m.alpha)?;
        if m.m == 0 {
            bail!("field `model.m`: must be a positive integer");
        }
        if !(m.eps1 >= 0.0 && m.eps1.is_finite()) {
            bail!("field `model.eps1`: must be nonnegative, got {}", m.eps1);
        }
        let c2 = (self.lattice.c as f64).powi(2);
        if !(m.m as f64 * m.alpha - m.kappa_growth / c2 > 0.0) {
            bail!("field `model.kappa_growth`: m·alpha - kappa_growth/c² must be positive");
        }
        let p = &self.profiler;
        positive("profiler.delta_prime", p.delta_prime)?;
        if p.delta_prime >= 0.5 {
            bail!("field `profiler.delta_prime`: must be below 1/2");
        }
        positive("profiler.probe_eps", p.probe_eps)?;
        if c64(p.probe_u0).norm() <= 2.0 * p.probe_eps {
            bail!("field `profiler.probe_u0`: |u0| must exceed 2·probe_eps");
        }
        self.partition()?;
        self.selectors()?;
        self.torus_model()?;
        if self.torus.radii.iter().any(|&r| !(r >= 1.0)) {
            bail!("field `torus.radii`: radii must be at least 1");
        }
        if self.scan.radii.iter().any(|&r| !(r > 0.0)) {
            bail!("field `scan.radii`: radii must be positive");
        }
        positive("scan.eval_extent", self.scan.eval_extent)?;
        if self.scan.eval_n < 2 {
            bail!("field `scan.eval_n`: need at least 2 points per side");
        }
        Ok(())
    }

    pub fn lattice_config(&self) -> Result<LatticeConfig> {
        LatticeConfig::new(self.lattice.c).map_err(|e| in_section("lattice", e))
    }

    pub fn schedule(&self) -> Result<RadiiSchedule> {
        let l = &self.lattice;
        let cfg = self.lattice_config()?;
        let growth = match l.growth.as_str() {
            "multiplicative" => GrowthLaw::Multiplicative(l.growth_factor),
            "power" => GrowthLaw::Power(l.growth_factor),
            g => bail!("field `lattice.growth`: `{g}` is not multiplicative or power"),
        };
        let continuation = match l.continuation.as_str() {
            "quartic" => Continuation::Quartic,
            "same" => Continuation::SameAsBuilt,
            "none" => Continuation::None,
            c => bail!("field `lattice.continuation`: `{c}` is not quartic, same or none"),
        };
        if l.annuli == 0 {
            return Ok(RadiiSchedule { continuation, ..RadiiSchedule::empty() });
        }
        let mut s = RadiiSchedule::geometric(&cfg, l.annuli, l.base_multiplier, growth, l.first_index)
            .map_err(|e| anyhow!("section `lattice`: {e}"))?;
        s.continuation = continuation;
        Ok(s)
    }

    pub fn cases(&self) -> Result<BTreeMap<u64, OffsetCase>> {
        let s = self.schedule()?;
        let o = &self.offsets;
        let marked = marked_points(o.marked);
        match o.mode.as_str() {
            "case-i" => Ok(uniform_cases(&s, &OffsetCase::sparse())),
            "sigma" => sigma_cases(&s, &marked).map_err(|e| in_section("offsets", e)),
            "explicit" => {
                let mut out = BTreeMap::new();
                for (k, spec) in o.cases.iter().enumerate() {
                    let set = || IndexSet::finite(spec.set.clone());
                    let case = match spec.tag.as_str() {
                        "I" => Ok(OffsetCase::sparse()),
                        "II" => set().and_then(|st| OffsetCase::concentrated(st, marked.clone(), false)),
                        "II'" => set().and_then(|st| OffsetCase::concentrated(st, marked.clone(), true)),
                        "III" => OffsetCase::weighted(marked.clone(), false),
                        "III'" => OffsetCase::weighted(marked.clone(), true),
                        t => bail!("field `offsets.cases[{k}].tag`: unknown case `{t}`"),
                    }
                    .map_err(|e| anyhow!("field `offsets.cases[{k}]`: {e}"))?;
                    out.insert(spec.index, case);
                }
                if let Some(i) = s.indices().find(|i| !out.contains_key(i)) {
                    bail!("field `offsets.cases`: no case for annulus {i}");
                }
                Ok(out)
            }
            m => bail!("field `offsets.mode`: `{m}` is not case-i, sigma or explicit"),
        }
    }

    pub fn locus(&self) -> Result<ZeroLocus> {
        let cfg = self.lattice_config()?;
        let s = self.schedule()?;
        if s.radii.is_empty() {
            return Ok(ZeroLocus::empty(cfg));
        }
        build_zero_locus(&s, &self.cases()?, &cfg, self.offsets.seed).map_err(|e| in_section("offsets", e))
    }

    pub fn model_for(&self, locus: ZeroLocus) -> Result<SurfaceModel> {
        let m = &self.model;
        SurfaceModel::new(m.alpha, m.m, m.eps1, m.kappa_growth, locus).map_err(|e| in_section("model", e))
    }

    pub fn model(&self) -> Result<SurfaceModel> {
        self.model_for(self.locus()?)
    }

    pub fn grid(&self) -> Result<QuadratureGrid> {
        let q = &self.quadrature;
        let g = QuadratureGrid {
            n_radial: q.n_radial,
            n_angular: q.n_angular,
            radial_per_unit: q.radial_per_unit,
            refinement_radius: q.refinement_radius,
            ..QuadratureGrid::default()
        };
        g.validate().map_err(|e| in_section("quadrature", e))?;
        Ok(g)
    }

    pub fn partition(&self) -> Result<RegionPartition> {
        let p = &self.profiler;
        let mut part =
            RegionPartition::new(p.log_infinity_threshold, p.tube_radius, marked_points(self.offsets.marked))
                .map_err(|e| in_section("profiler", e))?;
        part.horizontal_probe = Some(c64(p.probe_u0));
        Ok(part)
    }

    pub fn selectors(&self) -> Result<Vec<SubsequenceSelector>> {
        self.profiler
            .selectors
            .iter()
            .enumerate()
            .map(|(k, s)| parse_selector(s).with_context(|| format!("field `profiler.selectors[{k}]`")))
            .collect()
    }

    pub fn torus_model(&self) -> Result<TorusLineModel> {
        let t = &self.torus;
        let m = TorusLineModel {
            slope: t.slope,
            m1: c64(t.m1),
            m2: c64(t.m2),
            b1: c64(t.b1),
            b2: c64(t.b2),
            domain_radius: t.domain_radius,
        };
        m.validate().map_err(|e| in_section("torus", e))?;
        Ok(m)
    }

    pub fn probe_u0(&self) -> C64 {
        c64(self.profiler.probe_u0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.schedule().unwrap().radii, vec![40.0, 160.0]);
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::from_toml("[model]\nalpha = -1.0\n").unwrap_err();
        assert!(format!("{e:#}").contains("model.alpha"), "{e:#}");
        let e = ExperimentConfig::from_toml("[lattice]\nc = 3\n").unwrap_err();
        assert!(format!("{e:#}").contains("lattice"), "{e:#}");
        let e = ExperimentConfig::from_toml("[model]\nbeta = 1.0\n").unwrap_err();
        assert!(format!("{e:#}").contains("beta"), "{e:#}");
        let e = ExperimentConfig::from_toml("[torus]\nslope = 1.5\n").unwrap_err();
        assert!(format!("{e:#}").contains("torus.slope"), "{e:#}");
    }

    #[test]
    fn toml_errors_carry_positions() {
        let e = ExperimentConfig::from_toml("[model]\nalpha = \n").unwrap_err();
        assert!(format!("{e:#}").contains("line 2"), "{e:#}");
    }

    #[test]
    fn selectors_parse() {
        assert_eq!(parse_selector("THIRD").unwrap(), SubsequenceSelector::Third);
        let s = parse_selector("CASE({1;3},even)").unwrap();
        assert_eq!(s, SubsequenceSelector::Case { set: IndexSet::finite(vec![1, 3]).unwrap(), parity: Parity::Even });
        assert_eq!(parse_selector(&s.label()).unwrap(), s);
        assert!(parse_selector("CASE({},sideways)").is_err());
    }

    #[test]
    fn explicit_cases() {
        let text = r#"
[lattice]
first_index = 3
[offsets]
mode = "explicit"
cases = [{ index = 3, tag = "I" }, { index = 4, tag = "II", set = [1] }]
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        let cases = c.cases().unwrap();
        assert_eq!(cases[&4].tag, curvelab_core::lattice_locus::CaseTag::II);
        let missing = "[offsets]\nmode = \"explicit\"\ncases = [{ index = 1, tag = \"I\" }]\n";
        assert!(format!("{:#}", ExperimentConfig::from_toml(missing).unwrap_err()).contains("annulus 2"));
    }
}
