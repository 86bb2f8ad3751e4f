//! Gaussian-lattice annuli, sparse offset grids, the subsequence encoding of
//! annulus indices and the perturbed zero locus built from them.

use crate::error::{Error, Result};
use crate::math::C64;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;

/// Scale of the lattice `c·Γ` with `Γ = Z ⊕ Z·i`. The second generator is
/// always `i` times the first; only the Gaussian lattice is supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeConfig {
    pub c: u32,
}

impl LatticeConfig {
    /// Validated constructor (`c >= 5`, so distinct locus points sit more
    /// than `c - sqrt 2 > 2` apart).
    pub fn new(c: u32) -> Result<Self> {
        let cfg = LatticeConfig { c };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 5 {
            return Err(Error::param("c", format!("must be >= 5, got {}", self.c)));
        }
        Ok(())
    }

    pub fn tau(&self) -> C64 {
        C64::new(0.0, 1.0)
    }

    pub fn scale(&self) -> f64 {
        self.c as f64
    }
}

/// Lattice points of `c·Γ` with `r/2 <= |μ| <= r`, lexicographic in (Re, Im).
pub fn enumerate_annulus_lattice(r: f64, cfg: &LatticeConfig) -> Result<Vec<C64>> {
    let c = cfg.scale();
    if !(r > 2.0 * c) {
        return Err(Error::EmptyAnnulus { r, two_c: 2.0 * c });
    }
    // closed annulus; the slack absorbs rounding in radii such as 2·sqrt 2
    let lo = r * r / 4.0 * (1.0 - 1e-12);
    let hi = r * r * (1.0 + 1e-12);
    let n = (r / c).floor() as i64;
    let mut out = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            let (x, y) = (a as f64 * c, b as f64 * c);
            let q = x * x + y * y;
            if q >= lo && q <= hi {
                out.push(C64::new(x, y));
            }
        }
    }
    Ok(out)
}

/// The first `n` points of the explicit grid
/// `(s+1+l1)/(2s+2) + l2/(s+1)·i`, `s = floor(sqrt n)`, row by row.
pub fn sparse_grid(n: usize) -> Vec<C64> {
    if n == 0 {
        return Vec::new();
    }
    let s = isqrt(n);
    let side = s + 1;
    assert!(side * side >= n, "sparse grid capacity");
    let mut out = Vec::with_capacity(n);
    'rows: for l2 in 0..side {
        for l1 in 0..side {
            if out.len() == n {
                break 'rows;
            }
            out.push(C64::new((side + l1) as f64 / (2 * side) as f64, l2 as f64 / side as f64));
        }
    }
    out
}

fn isqrt(n: usize) -> usize {
    let mut s = (n as f64).sqrt() as usize;
    while s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    s
}

/// Largest number of `points` inside any closed disc of radius `radius`
/// whose centre lies on the `step` grid covering `[x0, x1] × [y0, y1]`.
pub fn max_disc_occupancy(points: &[C64], radius: f64, step: f64, window: [f64; 4]) -> usize {
    let [x0, x1, y0, y1] = window;
    let nx = ((x1 - x0) / step).round() as i64;
    let ny = ((y1 - y0) / step).round() as i64;
    let mut best = 0;
    for i in 0..=nx {
        for j in 0..=ny {
            let a = C64::new(x0 + i as f64 * step, y0 + j as f64 * step);
            let k = points.iter().filter(|p| (**p - a).norm() <= radius).count();
            best = best.max(k);
        }
    }
    best
}

/// An admissible index set: `∅`, all of `Z+`, or a finite nonempty set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IndexSet {
    Empty,
    All,
    /// Sorted, distinct, positive, at most 63.
    Finite(Vec<u32>),
}

impl IndexSet {
    pub fn finite(mut elems: Vec<u32>) -> Result<Self> {
        if elems.is_empty() {
            return Err(Error::MalformedIndexSet("empty finite set; use IndexSet::Empty for the empty set".into()));
        }
        elems.sort_unstable();
        elems.dedup();
        if elems[0] == 0 || *elems.last().unwrap() > 63 {
            return Err(Error::MalformedIndexSet(format!("elements must lie in 1..=63, got {elems:?}")));
        }
        Ok(IndexSet::Finite(elems))
    }

    fn code(elems: &[u32]) -> u64 {
        elems.iter().fold(0u64, |acc, &e| acc | (1u64 << (e - 1)))
    }

    /// `σ(∅) = 1`, `σ(Z+) = 2`, finite sets by (max, binary code) from 3 on.
    /// Ordering by (max, code) is ordering by code, so `σ(S) = code(S) + 2`.
    pub fn sigma(&self) -> Result<u64> {
        match self {
            IndexSet::Empty => Ok(1),
            IndexSet::All => Ok(2),
            IndexSet::Finite(e) => {
                if e.is_empty() {
                    return Err(Error::MalformedIndexSet("empty finite set".into()));
                }
                Self::code(e).checked_add(2).ok_or_else(|| Error::IndexOverflow("sigma".into()))
            }
        }
    }

    pub fn from_sigma(n: u64) -> Result<Self> {
        match n {
            0 => Err(Error::MalformedIndexSet("sigma is 1-based".into())),
            1 => Ok(IndexSet::Empty),
            2 => Ok(IndexSet::All),
            _ => {
                let code = n - 2;
                let elems = (0..64u32).filter(|b| code >> b & 1 == 1).map(|b| b + 1).collect();
                Ok(IndexSet::Finite(elems))
            }
        }
    }

    pub fn elements(&self) -> &[u32] {
        match self {
            IndexSet::Finite(e) => e,
            _ => &[],
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSet::Empty => f.write_str("{}"),
            IndexSet::All => f.write_str("Z+"),
            IndexSet::Finite(e) => {
                f.write_str("{")?;
                for (k, x) in e.iter().enumerate() {
                    if k > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// The `j`-th smallest element of `Z_{σ(I)} = {2^{σ-1}(2k-1)}`.
pub fn subsequence_index(set: &IndexSet, j: u64) -> Result<u64> {
    if j == 0 {
        return Err(Error::Range("subsequence position j is 1-based".into()));
    }
    let n = set.sigma()?;
    if n > 64 {
        return Err(Error::IndexOverflow(format!("sigma = {n}")));
    }
    let odd = j.checked_mul(2).map(|x| x - 1).ok_or_else(|| Error::IndexOverflow(format!("j = {j}")))?;
    let shift = (n - 1) as u32;
    if odd.leading_zeros() < shift {
        return Err(Error::IndexOverflow(format!("2^{shift} * {odd}")));
    }
    Ok(odd << shift)
}

/// Inverse of [`subsequence_index`]: annulus index `i` → `(I, j)`.
pub fn decode_annulus_index(i: u64) -> Result<(IndexSet, u64)> {
    if i == 0 {
        return Err(Error::Range("annulus indices are 1-based".into()));
    }
    let n = i.trailing_zeros() as u64 + 1;
    let odd = i >> (n - 1);
    Ok((IndexSet::from_sigma(n)?, odd.div_ceil(2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseTag {
    I,
    II,
    IIPrime,
    III,
    IIIPrime,
}

impl CaseTag {
    pub fn label(&self) -> &'static str {
        match self {
            CaseTag::I => "I",
            CaseTag::II => "II",
            CaseTag::IIPrime => "II'",
            CaseTag::III => "III",
            CaseTag::IIIPrime => "III'",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Default marked points `y_i = 1/6 + (i-1)/(2K)·i`, `i = 1..=K`.
pub fn marked_points(k_max: usize) -> Vec<C64> {
    (0..k_max).map(|i| C64::new(1.0 / 6.0, i as f64 / (2 * k_max) as f64)).collect()
}

/// Offset rule for one annulus.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetCase {
    pub tag: CaseTag,
    pub index_set: IndexSet,
    /// `α_ℓ` for Cases III/III'; empty otherwise.
    pub weights: Vec<f64>,
    /// The whole marked family `y_1, y_2, ...`.
    pub marked_points: Vec<C64>,
}

impl OffsetCase {
    pub fn sparse() -> Self {
        OffsetCase { tag: CaseTag::I, index_set: IndexSet::Empty, weights: Vec::new(), marked_points: Vec::new() }
    }

    pub fn concentrated(set: IndexSet, marked: Vec<C64>, prime: bool) -> Result<Self> {
        let case = OffsetCase {
            tag: if prime { CaseTag::IIPrime } else { CaseTag::II },
            index_set: set,
            weights: Vec::new(),
            marked_points: marked,
        };
        case.validate()?;
        Ok(case)
    }

    /// `α_ℓ = 2^{-ℓ}` for `ℓ < K`, the last weight absorbing the rest.
    pub fn weighted(marked: Vec<C64>, prime: bool) -> Result<Self> {
        let k = marked.len();
        let weights = (1..=k).map(|l| if l < k { 0.5f64.powi(l as i32) } else { 0.5f64.powi(l as i32 - 1) }).collect();
        let case = OffsetCase {
            tag: if prime { CaseTag::IIIPrime } else { CaseTag::III },
            index_set: IndexSet::All,
            weights,
            marked_points: marked,
        };
        case.validate()?;
        Ok(case)
    }

    /// Case dictated by the subsequence encoding of annulus index `i`:
    /// `∅` → I, `Z+` → III / III', finite → II / II' (odd / even `j`).
    pub fn for_annulus_index(i: u64, marked: &[C64]) -> Result<Self> {
        let (set, j) = decode_annulus_index(i)?;
        let prime = j % 2 == 0;
        match set {
            IndexSet::Empty => Ok(Self::sparse()),
            IndexSet::All => Self::weighted(marked.to_vec(), prime),
            s @ IndexSet::Finite(_) => Self::concentrated(s, marked.to_vec(), prime),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, y) in self.marked_points.iter().enumerate() {
            if !(y.re >= 1.0 / 6.0 && y.re < 1.0 / 3.0 && y.im >= 0.0 && y.im < 1.0) {
                return Err(Error::param("marked_points", format!("y_{} = {y} outside the strip", k + 1)));
            }
            for z in &self.marked_points[..k] {
                if z == y {
                    return Err(Error::param("marked_points", format!("y_{} repeated", k + 1)));
                }
            }
        }
        match self.tag {
            CaseTag::I => {}
            CaseTag::II | CaseTag::IIPrime => {
                let e = self.index_set.elements();
                if e.is_empty() {
                    return Err(Error::MalformedIndexSet("Case II needs a finite nonempty index set".into()));
                }
                if let Some(&m) = e.iter().find(|&&x| x as usize > self.marked_points.len()) {
                    return Err(Error::param(
                        "index_set",
                        format!("index {m} exceeds the {} marked points", self.marked_points.len()),
                    ));
                }
            }
            CaseTag::III | CaseTag::IIIPrime => {
                if self.weights.len() != self.marked_points.len() || self.weights.is_empty() {
                    return Err(Error::param("weights", "one weight per marked point required"));
                }
                if self.weights.iter().any(|&w| !(w > 0.0)) {
                    return Err(Error::param("weights", "weights must be positive"));
                }
                let s: f64 = self.weights.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(Error::param("weights", format!("sum to {s}, not 1")));
                }
            }
        }
        Ok(())
    }
}

/// Offsets `x_μ` for an annulus of `n` lattice points, aligned with the
/// lexicographic lattice order. A nonzero `seed` permutes the sparse points
/// among their slots.
pub fn assign_offsets(n: usize, case: &OffsetCase, seed: u64) -> Result<Vec<C64>> {
    case.validate()?;
    if n == 0 {
        return Err(Error::Infeasible { requested: 1, available: 0 });
    }
    let y = |i: u32| case.marked_points[i as usize - 1];
    let mut out: Vec<C64> = Vec::with_capacity(n);
    let mut sparse_tail = 0usize;
    match case.tag {
        CaseTag::I => sparse_tail = n,
        CaseTag::II => {
            let e = case.index_set.elements();
            let k = e.len();
            let q = n / k;
            let rem = n - q * k;
            for (b, &i) in e.iter().enumerate() {
                let len = q + usize::from(b < rem);
                out.extend(core::iter::repeat(y(i)).take(len));
            }
        }
        CaseTag::IIPrime => {
            let e = case.index_set.elements();
            let q = n / (2 * e.len());
            for &i in e {
                out.extend(core::iter::repeat(y(i)).take(q));
            }
            sparse_tail = n - q * e.len();
        }
        CaseTag::III | CaseTag::IIIPrime => {
            let half = case.tag == CaseTag::IIIPrime;
            let counts: Vec<usize> = case
                .weights
                .iter()
                .map(|a| {
                    let x = a * n as f64;
                    (if half { x / 2.0 } else { x }).floor() as usize
                })
                .collect();
            let used: usize = counts.iter().sum();
            if used > n {
                return Err(Error::Infeasible { requested: used, available: n });
            }
            let leftover = n - used;
            for (l, &k) in counts.iter().enumerate() {
                let extra = if !half && l == 0 { leftover } else { 0 };
                out.extend(core::iter::repeat(case.marked_points[l]).take(k + extra));
            }
            if half {
                sparse_tail = leftover;
            }
        }
    }
    if sparse_tail > 0 {
        let mut grid = sparse_grid(sparse_tail);
        if seed != 0 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            grid.shuffle(&mut rng);
        }
        out.extend(grid);
    }
    if out.len() != n {
        return Err(Error::Infeasible { requested: out.len(), available: n });
    }
    Ok(out)
}

/// Radius growth between consecutive annuli.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GrowthLaw {
    /// `r_{i+1} = f·r_i`
    Multiplicative(f64),
    /// `r_{i+1} = r_i^e`
    Power(f64),
}

impl GrowthLaw {
    pub fn next(&self, r: f64) -> f64 {
        match *self {
            GrowthLaw::Multiplicative(f) => f * r,
            GrowthLaw::Power(e) => r.powf(e),
        }
    }
}

/// How the schedule continues past the built annuli when bounding the
/// omitted part of the product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Continuation {
    /// The finite locus is the whole zero set.
    None,
    /// `r_{ℓ+1} = r_ℓ^4` beyond the last built annulus.
    Quartic,
    /// Same growth law as the built annuli.
    SameAsBuilt,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiiSchedule {
    pub radii: Vec<f64>,
    pub growth: GrowthLaw,
    pub base_multiplier: f64,
    /// Annulus index of `radii[0]`; later radii carry consecutive indices.
    pub first_index: u64,
    pub continuation: Continuation,
}

impl RadiiSchedule {
    /// `r_1 = base_multiplier·c` and `r_{k+1} = growth(r_k)`.
    pub fn geometric(
        cfg: &LatticeConfig,
        count: usize,
        base_multiplier: f64,
        growth: GrowthLaw,
        first_index: u64,
    ) -> Result<Self> {
        let mut radii = Vec::with_capacity(count);
        let mut r = base_multiplier * cfg.scale();
        for _ in 0..count {
            radii.push(r);
            r = growth.next(r);
        }
        let s = RadiiSchedule { radii, growth, base_multiplier, first_index, continuation: Continuation::Quartic };
        s.validate(cfg)?;
        Ok(s)
    }

    /// Desk defaults: `r_1 = 8c`, factor 4.
    pub fn desk(cfg: &LatticeConfig, count: usize) -> Result<Self> {
        Self::geometric(cfg, count, 8.0, GrowthLaw::Multiplicative(4.0), 1)
    }

    /// `r_1 = 2020c`, `r_{i+1} = r_i^4`.
    pub fn quartic(cfg: &LatticeConfig, count: usize) -> Result<Self> {
        Self::geometric(cfg, count, 2020.0, GrowthLaw::Power(4.0), 1)
    }

    pub fn empty() -> Self {
        RadiiSchedule {
            radii: Vec::new(),
            growth: GrowthLaw::Multiplicative(4.0),
            base_multiplier: 8.0,
            first_index: 1,
            continuation: Continuation::Quartic,
        }
    }

    pub fn validate(&self, cfg: &LatticeConfig) -> Result<()> {
        if self.first_index == 0 {
            return Err(Error::Schedule("first_index is 1-based".into()));
        }
        if !(self.base_multiplier > 0.0) {
            return Err(Error::Schedule("base_multiplier must be positive".into()));
        }
        match self.growth {
            GrowthLaw::Multiplicative(f) if !(f >= 2.0) => {
                return Err(Error::Schedule(format!("multiplicative growth {f} < 2 lets annuli overlap")))
            }
            GrowthLaw::Power(e) if !(e >= 1.0) => return Err(Error::Schedule(format!("growth exponent {e} < 1"))),
            _ => {}
        }
        let tol = 1e-12;
        if let Some(&r1) = self.radii.first() {
            if r1 < self.base_multiplier * cfg.scale() * (1.0 - tol) {
                return Err(Error::Schedule(format!(
                    "r_1 = {r1} below base_multiplier·c = {}",
                    self.base_multiplier * cfg.scale()
                )));
            }
            if !(r1 > 2.0 * cfg.scale()) {
                return Err(Error::Schedule(format!("r_1 = {r1} must exceed 2c")));
            }
        }
        for w in self.radii.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Schedule(format!("radii not increasing at {} -> {}", w[0], w[1])));
            }
            let need = self.growth.next(w[0]);
            if w[1] < need * (1.0 - tol) {
                return Err(Error::Schedule(format!("r = {} violates growth law (needs >= {need})", w[1])));
            }
        }
        Ok(())
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.radii.len() as u64).map(move |k| self.first_index + k)
    }

    pub fn radius_of(&self, index: u64) -> Option<f64> {
        let k = index.checked_sub(self.first_index)? as usize;
        self.radii.get(k).copied()
    }

    pub fn last_index(&self) -> Option<u64> {
        (!self.radii.is_empty()).then(|| self.first_index + self.radii.len() as u64 - 1)
    }

    /// Radii of the virtual annuli following the built ones, until they
    /// leave double range. Empty when the continuation is `None`.
    pub fn continuation_radii(&self) -> Vec<f64> {
        let law = match self.continuation {
            Continuation::None => return Vec::new(),
            Continuation::Quartic => GrowthLaw::Power(4.0),
            Continuation::SameAsBuilt => self.growth,
        };
        let mut out = Vec::new();
        let Some(&last) = self.radii.last() else { return out };
        let mut r = law.next(last);
        while r.is_finite() && r < 1e300 && out.len() < 4096 {
            out.push(r);
            r = law.next(r);
        }
        out
    }
}

/// Points of one built annulus.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub index: u64,
    pub radius: f64,
    pub range: Range<usize>,
    pub case: OffsetCase,
}

/// The finite perturbed lattice `Λ = ∪ B_{r_i}`. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroLocus {
    pub points: Vec<C64>,
    pub lattice: Vec<C64>,
    pub annulus_of: Vec<u64>,
    pub class_of: Vec<C64>,
    pub case_of: Vec<CaseTag>,
    pub batches: Vec<Batch>,
    pub schedule: RadiiSchedule,
    pub cfg: LatticeConfig,
}

pub fn build_zero_locus(
    schedule: &RadiiSchedule,
    cases: &BTreeMap<u64, OffsetCase>,
    cfg: &LatticeConfig,
    seed: u64,
) -> Result<ZeroLocus> {
    schedule.validate(cfg)?;
    let mut locus = ZeroLocus {
        points: Vec::new(),
        lattice: Vec::new(),
        annulus_of: Vec::new(),
        class_of: Vec::new(),
        case_of: Vec::new(),
        batches: Vec::new(),
        schedule: schedule.clone(),
        cfg: *cfg,
    };
    let mut prev_outer = 0.0;
    for (k, &r) in schedule.radii.iter().enumerate() {
        let index = schedule.first_index + k as u64;
        let case = cases.get(&index).ok_or_else(|| Error::Schedule(format!("no offset case for annulus {index}")))?;
        assert!(r / 2.0 > prev_outer + 2.0, "annuli overlap");
        prev_outer = r + 2.0;
        let mus = enumerate_annulus_lattice(r, cfg)?;
        let xs = assign_offsets(mus.len(), case, seed.wrapping_add(index))?;
        let start = locus.points.len();
        for (mu, x) in mus.iter().zip(&xs) {
            locus.points.push(mu + x);
            locus.lattice.push(*mu);
            locus.annulus_of.push(index);
            locus.class_of.push(*x);
            locus.case_of.push(case.tag);
        }
        locus.batches.push(Batch { index, radius: r, range: start..locus.points.len(), case: case.clone() });
    }
    Ok(locus)
}

/// Cases from the subsequence encoding for every index of the schedule.
pub fn sigma_cases(schedule: &RadiiSchedule, marked: &[C64]) -> Result<BTreeMap<u64, OffsetCase>> {
    schedule.indices().map(|i| Ok((i, OffsetCase::for_annulus_index(i, marked)?))).collect()
}

/// The same case on every annulus of the schedule.
pub fn uniform_cases(schedule: &RadiiSchedule, case: &OffsetCase) -> BTreeMap<u64, OffsetCase> {
    schedule.indices().map(|i| (i, case.clone())).collect()
}

impl ZeroLocus {
    pub fn empty(cfg: LatticeConfig) -> Self {
        ZeroLocus {
            points: Vec::new(),
            lattice: Vec::new(),
            annulus_of: Vec::new(),
            class_of: Vec::new(),
            case_of: Vec::new(),
            batches: Vec::new(),
            schedule: RadiiSchedule::empty(),
            cfg,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn batch(&self, index: u64) -> Option<&Batch> {
        self.batches.iter().find(|b| b.index == index)
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Minimum pairwise distance (bucketed scan); `inf` below two points.
    pub fn min_pairwise_distance(&self) -> f64 {
        min_pairwise_distance(&self.points, self.cfg.scale())
    }
}

/// Exact whenever the answer is below `cell`; pairs farther apart than one
/// cell are not examined.
pub fn min_pairwise_distance(points: &[C64], cell: f64) -> f64 {
    let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    let key = |z: &C64| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
    for (k, z) in points.iter().enumerate() {
        buckets.entry(key(z)).or_default().push(k);
    }
    let mut best = f64::INFINITY;
    for (k, z) in points.iter().enumerate() {
        let (i, j) = key(z);
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(v) = buckets.get(&(i + di, j + dj)) {
                    for &l in v {
                        if l > k {
                            best = best.min((points[l] - z).norm());
                        }
                    }
                }
            }
        }
    }
    best
}

/// Distance between classes in `C/Γ` (unit Gaussian lattice), minimised
/// over the nine nearest translates.
pub fn torus_distance(a: C64, b: C64) -> f64 {
    let d = a - b;
    let base = C64::new(d.re - d.re.round(), d.im - d.im.round());
    let mut best = f64::INFINITY;
    for i in -1..=1 {
        for j in -1..=1 {
            best = best.min((base + C64::new(i as f64, j as f64)).norm());
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Disc {
        center: C64,
        radius: f64,
    },
    /// `inner <= |z| <= outer`
    Annulus {
        inner: f64,
        outer: f64,
    },
}

impl Region {
    pub fn contains(&self, z: C64) -> bool {
        match *self {
            Region::Disc { center, radius } => (z - center).norm() < radius,
            Region::Annulus { inner, outer } => {
                let r = z.norm();
                r >= inner && r <= outer
            }
        }
    }
}

/// Locus points in `region` whose class in `C/Γ` equals `[y]`.
pub fn count_in_class(locus: &ZeroLocus, y: C64, region: &Region) -> usize {
    locus.points.iter().filter(|&&p| region.contains(p) && torus_distance(p, y) < 1e-9).count()
}

/// `|Σ 1/λ|·c²` and `|Σ 1/λ²|·c²·r_i` for one batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchSums {
    pub index: u64,
    pub radius: f64,
    pub inv_sum_scaled: f64,
    pub inv_sq_sum_scaled: f64,
}

pub fn batch_sums(locus: &ZeroLocus) -> Vec<BatchSums> {
    let c2 = locus.cfg.scale().powi(2);
    locus
        .batches
        .iter()
        .map(|b| {
            let pts = &locus.points[b.range.clone()];
            let mut s1 = crate::math::NeumaierC::new();
            let mut s2 = crate::math::NeumaierC::new();
            for p in pts {
                let inv = p.inv();
                s1.add(inv);
                s2.add(inv * inv);
            }
            BatchSums {
                index: b.index,
                radius: b.radius,
                inv_sum_scaled: s1.value().norm() * c2,
                inv_sq_sum_scaled: s2.value().norm() * c2 * b.radius,
            }
        })
        .collect()
}

/// Fitted `κ` in `|B_r| ∈ [κ₁ (r/c)², κ₂ (r/c)²]`: returns `(min, max)` of
/// `|B_r|·c²/r²` over the batches.
pub fn batch_count_constants(locus: &ZeroLocus) -> (f64, f64) {
    let c = locus.cfg.scale();
    locus.batches.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), b| {
        let k = b.range.len() as f64 * c * c / (b.radius * b.radius);
        (lo.min(k), hi.max(k))
    })
}

pub fn describe_case(case: &OffsetCase) -> String {
    format!("{}:{}", case.tag, case.index_set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg5() -> LatticeConfig {
        LatticeConfig::new(5).unwrap()
    }

    #[test]
    fn small_enumeration_matches_hand_list() {
        let cfg = LatticeConfig { c: 1 };
        let pts = enumerate_annulus_lattice(2.0 * 2f64.sqrt(), &cfg).unwrap();
        let mut expect = Vec::new();
        for a in -2i32..=2 {
            for b in -2i32..=2 {
                let q = a * a + b * b;
                if (2..=8).contains(&q) {
                    expect.push(C64::new(a as f64, b as f64));
                }
            }
        }
        assert_eq!(pts, expect);
        assert_eq!(pts.len(), 20);
        // at r = 2.83 the inner radius 1.415 already exceeds sqrt 2
        let pts = enumerate_annulus_lattice(2.83, &cfg).unwrap();
        assert_eq!(pts.len(), 16);
    }

    #[test]
    fn enumeration_is_symmetric() {
        for (r, c) in [(40.0, 5), (77.7, 5), (160.0, 10)] {
            let cfg = LatticeConfig { c };
            let pts = enumerate_annulus_lattice(r, &cfg).unwrap();
            let set: alloc::collections::BTreeSet<(i64, i64)> =
                pts.iter().map(|p| (p.re as i64, p.im as i64)).collect();
            for p in &pts {
                assert!(set.contains(&(-p.re as i64, -p.im as i64)));
                assert!(set.contains(&(-p.im as i64, p.re as i64)));
            }
        }
    }

    #[test]
    fn enumeration_count_matches_brute_force() {
        let pts = enumerate_annulus_lattice(100.0, &cfg5()).unwrap();
        let mut n = 0;
        for a in (-100i64..=100).step_by(5) {
            for b in (-100i64..=100).step_by(5) {
                let q = a * a + b * b;
                if (2500..=10000).contains(&q) {
                    n += 1;
                }
            }
        }
        assert_eq!(pts.len(), n);
    }

    #[test]
    fn empty_annulus_rejected() {
        assert!(matches!(enumerate_annulus_lattice(10.0, &cfg5()), Err(Error::EmptyAnnulus { .. })));
    }

    #[test]
    fn lattice_config_rejects_small_c() {
        assert!(LatticeConfig::new(4).is_err());
        assert!(LatticeConfig::new(5).is_ok());
    }

    #[test]
    fn sparse_grid_small_cases() {
        assert_eq!(sparse_grid(1), vec![C64::new(0.5, 0.0)]);
        let g = sparse_grid(4);
        assert_eq!(g.len(), 4);
        let mut dmin = f64::INFINITY;
        for i in 0..4 {
            for j in 0..i {
                dmin = dmin.min((g[i] - g[j]).norm());
            }
        }
        // column spacing of the grid is 1/(2s+2) = 1/6 for s = 2
        assert!((dmin - 1.0 / 6.0).abs() < 1e-15, "{dmin}");
    }

    #[test]
    fn sparse_grid_lies_in_right_half_and_is_distinct() {
        for n in [1, 2, 3, 10, 17, 50, 100, 399, 400] {
            let g = sparse_grid(n);
            assert_eq!(g.len(), n);
            for p in &g {
                assert!(p.re >= 0.5 && p.re < 1.0 && p.im >= 0.0 && p.im < 1.0);
            }
            for i in 0..n {
                for j in 0..i {
                    assert_ne!(g[i], g[j]);
                }
            }
        }
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(subsequence_index(&IndexSet::Empty, 1).unwrap(), 1);
        assert_eq!(subsequence_index(&IndexSet::Empty, 5).unwrap(), 9);
        assert_eq!(subsequence_index(&IndexSet::All, 1).unwrap(), 2);
        assert_eq!(subsequence_index(&IndexSet::All, 2).unwrap(), 6);
        let one = IndexSet::finite(vec![1]).unwrap();
        assert_eq!(one.sigma().unwrap(), 3);
        assert_eq!(subsequence_index(&one, 1).unwrap(), 4);
        assert_eq!(subsequence_index(&one, 2).unwrap(), 12);
        assert_eq!(IndexSet::finite(vec![2]).unwrap().sigma().unwrap(), 4);
        assert_eq!(IndexSet::finite(vec![1, 2]).unwrap().sigma().unwrap(), 5);
        assert_eq!(IndexSet::finite(vec![3]).unwrap().sigma().unwrap(), 6);
    }

    #[test]
    fn sigma_partition_is_disjoint() {
        let mut seen = alloc::collections::BTreeSet::new();
        for n in 1..=5 {
            let set = IndexSet::from_sigma(n).unwrap();
            assert_eq!(set.sigma().unwrap(), n);
            for j in 1..=20 {
                assert!(seen.insert(subsequence_index(&set, j).unwrap()));
            }
        }
    }

    #[test]
    fn malformed_index_set_rejected() {
        assert!(matches!(IndexSet::finite(vec![]), Err(Error::MalformedIndexSet(_))));
        assert!(IndexSet::Finite(vec![]).sigma().is_err());
        assert!(subsequence_index(&IndexSet::Empty, 0).is_err());
    }

    #[test]
    fn decode_inverts_encoding() {
        for i in 1..=200u64 {
            let (set, j) = decode_annulus_index(i).unwrap();
            assert_eq!(subsequence_index(&set, j).unwrap(), i);
        }
    }

    #[test]
    fn case_from_index() {
        let y = marked_points(8);
        assert_eq!(OffsetCase::for_annulus_index(1, &y).unwrap().tag, CaseTag::I);
        assert_eq!(OffsetCase::for_annulus_index(2, &y).unwrap().tag, CaseTag::III);
        assert_eq!(OffsetCase::for_annulus_index(6, &y).unwrap().tag, CaseTag::IIIPrime);
        let c4 = OffsetCase::for_annulus_index(4, &y).unwrap();
        assert_eq!(c4.tag, CaseTag::II);
        assert_eq!(c4.index_set, IndexSet::Finite(vec![1]));
        assert_eq!(OffsetCase::for_annulus_index(12, &y).unwrap().tag, CaseTag::IIPrime);
    }

    #[test]
    fn marked_points_in_strip() {
        let y = marked_points(16);
        let case = OffsetCase::weighted(y.clone(), false).unwrap();
        assert!(case.validate().is_ok());
        assert_eq!(y[0], C64::new(1.0 / 6.0, 0.0));
    }

    #[test]
    fn offsets_case_ii_single() {
        let y = marked_points(4);
        let case = OffsetCase::concentrated(IndexSet::finite(vec![1]).unwrap(), y.clone(), false).unwrap();
        let x = assign_offsets(10, &case, 0).unwrap();
        assert!(x.iter().all(|&v| v == y[0]));
    }

    #[test]
    fn offsets_case_ii_prime_pair() {
        let y = marked_points(4);
        let case = OffsetCase::concentrated(IndexSet::finite(vec![1, 2]).unwrap(), y.clone(), true).unwrap();
        let x = assign_offsets(10, &case, 0).unwrap();
        assert_eq!(x.iter().filter(|&&v| v == y[0]).count(), 2);
        assert_eq!(x.iter().filter(|&&v| v == y[1]).count(), 2);
        let sparse: Vec<_> = x.iter().filter(|v| v.re >= 0.5).collect();
        assert_eq!(sparse.len(), 6);
    }

    #[test]
    fn offsets_case_iii_floor_counts() {
        let y = marked_points(16);
        let case = OffsetCase::weighted(y.clone(), false).unwrap();
        let x = assign_offsets(100, &case, 0).unwrap();
        let count = |k: usize| x.iter().filter(|&&v| v == y[k]).count();
        assert!(count(0) >= 50);
        assert_eq!(count(1), 25);
        assert_eq!(count(2), 12);
        assert_eq!(count(3), 6);
        assert_eq!(count(4), 3);
        assert_eq!(count(5), 1);
        assert_eq!(count(6), 0);
        assert_eq!(x.len(), 100);
    }

    #[test]
    fn offsets_deterministic_given_seed() {
        let a = assign_offsets(57, &OffsetCase::sparse(), 3).unwrap();
        let b = assign_offsets(57, &OffsetCase::sparse(), 3).unwrap();
        assert_eq!(a, b);
        let c = assign_offsets(57, &OffsetCase::sparse(), 0).unwrap();
        assert_eq!(c, sparse_grid(57));
    }

    #[test]
    fn single_annulus_locus() {
        let cfg = cfg5();
        let sched = RadiiSchedule::desk(&cfg, 1).unwrap();
        assert_eq!(sched.radii, vec![40.0]);
        let locus = build_zero_locus(&sched, &uniform_cases(&sched, &OffsetCase::sparse()), &cfg, 0).unwrap();
        assert_eq!(locus.len(), enumerate_annulus_lattice(40.0, &cfg).unwrap().len());
        assert!(locus.min_pairwise_distance() > 2.0);
        assert!(locus.min_pairwise_distance() >= 5.0 - 2f64.sqrt());
    }

    #[test]
    fn empty_schedule_gives_empty_locus() {
        let cfg = cfg5();
        let locus = build_zero_locus(&RadiiSchedule::empty(), &BTreeMap::new(), &cfg, 0).unwrap();
        assert!(locus.is_empty());
    }

    #[test]
    fn two_annuli_second_batch_far_out() {
        let cfg = cfg5();
        let sched = RadiiSchedule::desk(&cfg, 2).unwrap();
        let marked = marked_points(16);
        let locus = build_zero_locus(&sched, &sigma_cases(&sched, &marked).unwrap(), &cfg, 0).unwrap();
        let b = locus.batch(2).unwrap();
        for p in &locus.points[b.range.clone()] {
            assert!(p.norm() >= 80.0 - 2f64.sqrt());
        }
        assert!(locus.min_pairwise_distance() >= 5.0 - 2f64.sqrt());
        for k in 0..locus.len() {
            assert_eq!(locus.points[k], locus.lattice[k] + locus.class_of[k]);
            let x = locus.class_of[k];
            assert!(x.re >= 0.0 && x.re < 1.0 && x.im >= 0.0 && x.im < 1.0);
        }
    }

    #[test]
    fn class_counts() {
        let cfg = cfg5();
        let sched = RadiiSchedule::desk(&cfg, 1).unwrap();
        let y = marked_points(16);
        let ann = Region::Annulus { inner: 0.0, outer: 1e9 };
        let ii = OffsetCase::concentrated(IndexSet::finite(vec![1]).unwrap(), y.clone(), false).unwrap();
        let locus = build_zero_locus(&sched, &uniform_cases(&sched, &ii), &cfg, 0).unwrap();
        assert_eq!(count_in_class(&locus, y[0], &ann), locus.len());
        let locus = build_zero_locus(&sched, &uniform_cases(&sched, &OffsetCase::sparse()), &cfg, 0).unwrap();
        assert_eq!(count_in_class(&locus, y[0], &ann), 0);
    }

    #[test]
    fn schedule_validation() {
        let cfg = cfg5();
        let mut s = RadiiSchedule::desk(&cfg, 3).unwrap();
        assert_eq!(s.radii, vec![40.0, 160.0, 640.0]);
        s.radii[1] = 100.0;
        assert!(s.validate(&cfg).is_err());
        let p = RadiiSchedule::quartic(&cfg, 1).unwrap();
        assert_eq!(p.radii, vec![10100.0]);
        let mut s = RadiiSchedule::desk(&cfg, 2).unwrap();
        s.continuation = Continuation::Quartic;
        let cont = s.continuation_radii();
        assert_eq!(cont[0], 160f64.powi(4));
        assert!(cont.len() >= 3);
    }
}
