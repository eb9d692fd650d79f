//! The bigraded synthetic homotopy of ν tmf as a sum of cyclic F₂[τ]-modules.
//!
//! Every E₂ class that survives becomes a free summand F₂[τ]{x}; a class hit
//! by `d_r` becomes F₂[τ]/τ^{r−1}; sources of differentials contribute
//! nothing. A generator detected in Ext^{s,t} sits at stem `t − s`, weight `t`,
//! and τ lowers the weight by one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::f2linalg::{EchelonBasis, F2Vector};
use crate::resolution::{Bidegree, ExtClass, Resolution};
use crate::specseq::{KillRecord, SpectralSequence};

/// Position `(stem, weight)` in π_{*,*}(ν tmf).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SyntheticDegree {
    pub stem: i64,
    pub weight: i64,
}

impl SyntheticDegree {
    pub fn new(stem: i64, weight: i64) -> Self {
        SyntheticDegree { stem, weight }
    }

    /// The generator position of a class in Ext^{s,t}.
    pub fn of(d: Bidegree) -> Self {
        SyntheticDegree::new(d.stem(), i64::from(d.t))
    }
}

impl fmt::Display for SyntheticDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.stem, self.weight)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Torsion {
    Free,
    /// F₂[τ]/τ^k.
    Tau(u32),
}

impl Torsion {
    /// Whether τ^j times the generator is nonzero.
    pub fn survives(self, j: i64) -> bool {
        match self {
            Torsion::Free => j >= 0,
            Torsion::Tau(k) => (0..i64::from(k)).contains(&j),
        }
    }
}

impl fmt::Display for Torsion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Torsion::Free => write!(f, "free"),
            Torsion::Tau(k) => write!(f, "{k}"),
        }
    }
}

/// One cyclic summand, generated at the position of its detecting class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauSummand {
    pub name: String,
    pub ext: Bidegree,
    pub torsion: Torsion,
}

impl TauSummand {
    pub fn top(&self) -> SyntheticDegree {
        SyntheticDegree::of(self.ext)
    }
}

/// What lies above the computed rows of a stem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    /// No classes in the top row, hence none above.
    Empty,
    /// A free summand in the top row: an h₀-tower continues past the range.
    FreeTower,
    /// Classes in the top row, none of them free; their continuation is unknown.
    Unknown,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Edge::Empty => "empty",
            Edge::FreeTower => "tower",
            Edge::Unknown => "unknown",
        })
    }
}

/// Above filtration `stem/2 + 3` every class of Ext over A(2) is an
/// h₀-multiple (checked against the resolution in the tests).
pub fn nontower_bound(stem: i64) -> i64 {
    stem.div_euclid(2) + 3
}

/// The trusted region: bidegrees with `s <= s_valid` and `t <= t_valid`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartRegion {
    pub s_valid: u32,
    pub t_valid: u32,
    pub edges: BTreeMap<i64, Edge>,
}

impl ChartRegion {
    pub fn contains(&self, d: Bidegree) -> bool {
        d.s <= self.s_valid && d.t <= self.t_valid
    }

    /// Highest trusted filtration in `stem`.
    pub fn top_row(&self, stem: i64) -> Option<i64> {
        let by_t = i64::from(self.t_valid) - stem;
        (stem >= 0 && by_t >= 0).then(|| by_t.min(i64::from(self.s_valid)))
    }

    /// Whether every class of `stem` that is not on a tower is inside.
    pub fn stem_complete(&self, stem: i64) -> bool {
        self.top_row(stem).is_some_and(|top| top >= nontower_bound(stem))
    }
}

/// An F₂-combination of the basis elements `τ^{top − weight}·g_i` of
/// π_{stem,weight}; `terms` are summand indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticElement {
    pub degree: SyntheticDegree,
    pub terms: BTreeSet<usize>,
}

impl SyntheticElement {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticChart {
    summands: Vec<TauSummand>,
    /// Detecting classes, when the chart was built from a spectral sequence.
    classes: Vec<ExtClass>,
    region: ChartRegion,
}

/// Assemble the chart from the pages of a finished spectral sequence.
pub fn synthesize(ss: &SpectralSequence<'_>) -> Result<SyntheticChart> {
    let einf = ss.e_infinity()?;
    let res = ss.resolution();
    let s_valid = res.s_max().saturating_sub(crate::specseq::MARGIN_S);
    let t_valid = res.t_max().saturating_sub(crate::specseq::MARGIN_T);
    let mut region = ChartRegion { s_valid, t_valid, edges: BTreeMap::new() };

    let mut found: Vec<(TauSummand, ExtClass)> = Vec::new();
    for d in einf.bidegrees().filter(|&d| ss.is_valid(d)) {
        for c in ss.kill_records(d)? {
            let torsion = match c.record {
                KillRecord::Survives => Torsion::Free,
                KillRecord::Target(r) => Torsion::Tau(r - 1),
                KillRecord::Source(_) => continue,
            };
            found.push((TauSummand { name: ss.describe(&c.class), ext: d, torsion }, c.class));
        }
    }
    found.sort_by_key(|(s, _)| (s.ext.stem(), s.ext.s));

    for stem in 0..=i64::from(t_valid) {
        let top = region.top_row(stem).unwrap();
        let d = Bidegree::new(top as u32, (stem + top) as u32);
        let edge = if !res.contains(d) || res.ext_dim(d)? == 0 {
            Edge::Empty
        } else if einf.dim(d) > 0 {
            Edge::FreeTower
        } else {
            Edge::Unknown
        };
        region.edges.insert(stem, edge);
    }
    let (summands, classes) = found.into_iter().unzip();
    Ok(SyntheticChart { summands, classes, region })
}

impl SyntheticChart {
    /// A chart read back from its text form, without detecting classes.
    pub fn from_parts(summands: Vec<TauSummand>, region: ChartRegion) -> Self {
        SyntheticChart { summands, classes: Vec::new(), region }
    }

    pub fn summands(&self) -> &[TauSummand] {
        &self.summands
    }

    pub fn region(&self) -> &ChartRegion {
        &self.region
    }

    /// Detecting class of summand `i`, if known.
    pub fn class(&self, i: usize) -> Option<&ExtClass> {
        self.classes.get(i)
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.summands.iter().position(|s| s.name == name)
    }

    /// Summand indices whose generator sits exactly at `(stem, weight)`.
    pub fn generators_at(&self, stem: i64, weight: i64) -> Vec<usize> {
        let at = SyntheticDegree::new(stem, weight);
        (0..self.summands.len()).filter(|&i| self.summands[i].top() == at).collect()
    }

    /// The generator `τ⁰·g_i`.
    pub fn generator(&self, i: usize) -> Result<SyntheticElement> {
        let s = self
            .summands
            .get(i)
            .ok_or_else(|| Error::Contract(format!("no summand {i}")))?;
        Ok(SyntheticElement { degree: s.top(), terms: BTreeSet::from([i]) })
    }

    fn check_stem(&self, stem: i64, weight: i64) -> Result<()> {
        if !self.region.stem_complete(stem) {
            return Err(Error::Region(format!(
                "stem {stem} is not covered up to filtration {} (s <= {}, t <= {})",
                nontower_bound(stem),
                self.region.s_valid,
                self.region.t_valid
            )));
        }
        match self.region.edges.get(&stem) {
            Some(Edge::Empty) => Ok(()),
            Some(Edge::FreeTower) => Err(Error::Unbounded { stem, weight }),
            _ => Err(Error::Region(format!(
                "the fate of the tower in stem {stem} above filtration {} is not computed",
                self.region.top_row(stem).unwrap_or(0)
            ))),
        }
    }

    /// A basis of π_{stem,weight}.
    pub fn pi_basis(&self, stem: i64, weight: i64) -> Result<Vec<SyntheticElement>> {
        self.check_stem(stem, weight)?;
        let degree = SyntheticDegree::new(stem, weight);
        Ok(self
            .summands
            .iter()
            .enumerate()
            .filter(|(_, s)| s.ext.stem() == stem && s.torsion.survives(s.top().weight - weight))
            .map(|(i, _)| SyntheticElement { degree, terms: BTreeSet::from([i]) })
            .collect())
    }

    pub fn pi_dimension(&self, stem: i64, weight: i64) -> Result<usize> {
        self.pi_basis(stem, weight).map(|b| b.len())
    }

    /// `τ^k · x`; terms whose torsion bound is exceeded drop out.
    pub fn tau_multiply(&self, x: &SyntheticElement, k: u32) -> Result<SyntheticElement> {
        let mut terms = BTreeSet::new();
        for &i in &x.terms {
            let s = self
                .summands
                .get(i)
                .ok_or_else(|| Error::Region(format!("summand {i} is not in the chart")))?;
            let j = s.top().weight - x.degree.weight;
            if s.ext.stem() != x.degree.stem || !s.torsion.survives(j) {
                return Err(Error::Contract(format!(
                    "{} has no τ^{j} multiple at {}",
                    s.name, x.degree
                )));
            }
            if s.torsion.survives(j + i64::from(k)) {
                terms.insert(i);
            }
        }
        let degree = SyntheticDegree::new(x.degree.stem, x.degree.weight - i64::from(k));
        Ok(SyntheticElement { degree, terms })
    }

    /// The element of π detected by a permanent cycle: the sum of the
    /// generators whose classes add up to `class`. `None` when `class` is not
    /// a permanent cycle.
    pub fn detect(&self, class: &ExtClass) -> Result<Option<SyntheticElement>> {
        let d = class.degree;
        if !self.region.contains(d) {
            return Err(Error::Region(format!("{d} is outside s <= {}, t <= {}", self.region.s_valid, self.region.t_valid)));
        }
        if self.classes.is_empty() && !self.summands.is_empty() {
            return Err(Error::Contract("chart carries no detecting classes".into()));
        }
        let here: Vec<usize> = (0..self.summands.len()).filter(|&i| self.summands[i].ext == d).collect();
        let mut span = EchelonBasis::new(class.coords.len(), here.len());
        for (k, &i) in here.iter().enumerate() {
            span.insert(&self.classes[i].coords, &F2Vector::unit(here.len(), k));
        }
        Ok(span.preimage(&class.coords).map(|tag| SyntheticElement {
            degree: SyntheticDegree::of(d),
            terms: tag.iter_ones().map(|k| here[k]).collect(),
        }))
    }

    /// dim ker(τ: π_{stem,weight} → π_{stem,weight−1}).
    pub fn tau_kernel_dim(&self, stem: i64, weight: i64) -> usize {
        self.summands
            .iter()
            .filter(|m| m.ext.stem() == stem)
            .filter(|m| matches!(m.torsion, Torsion::Tau(k) if m.top().weight - i64::from(k) + 1 == weight))
            .count()
    }

    /// dim coker(τ: π_{stem,weight+1} → π_{stem,weight}).
    pub fn tau_cokernel_dim(&self, stem: i64, weight: i64) -> usize {
        self.generators_at(stem, weight).len()
    }

    /// Summands whose generator lies outside the trusted region (none for
    /// charts built by [`synthesize`]).
    pub fn outside_region(&self) -> Vec<&TauSummand> {
        self.summands.iter().filter(|s| !self.region.contains(s.ext)).collect()
    }
}

/// Both sides of the exactness count for π → π(Cτ) → π at one position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LesReport {
    pub stem: i64,
    pub weight: i64,
    /// dim Ext^{w−t, w}.
    pub ext: usize,
    /// dim coker(τ: π_{t,w+1} → π_{t,w}).
    pub coker: usize,
    /// dim ker(τ: π_{t−1,w+1} → π_{t−1,w}).
    pub ker: usize,
}

impl LesReport {
    pub fn passed(&self) -> bool {
        self.ext == self.coker + self.ker
    }
}

impl fmt::Display for LesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}): ext {} = coker {} + ker {} {}",
            self.stem,
            self.weight,
            self.ext,
            self.coker,
            self.ker,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

/// Compare Ext with the τ-cokernel and τ-kernel of the chart at `(stem, weight)`.
pub fn les_dimension_check(
    chart: &SyntheticChart,
    res: &Resolution,
    stem: i64,
    weight: i64,
) -> Result<LesReport> {
    let s = weight - stem;
    let region = chart.region();
    let inside = |s: i64, t: i64| {
        s < 0 || t < 0 || region.contains(Bidegree::new(s as u32, t as u32))
    };
    // Kernel classes at stem − 1 come from d_r with r <= 4 on Ext^{s, w}.
    if !inside(s, weight) || !inside(s + 4, weight + 3) {
        return Err(Error::Region(format!("({stem}, {weight}) is too close to the edge")));
    }
    let ext = if s < 0 { 0 } else { res.ext_dim(Bidegree::new(s as u32, weight as u32))? };
    let coker = chart.tau_cokernel_dim(stem, weight);
    let ker = chart.tau_kernel_dim(stem - 1, weight + 1);
    Ok(LesReport { stem, weight, ext, coker, ker })
}

/// Run [`les_dimension_check`] at every checkable position with stem <= `stem_max`.
pub fn les_sweep(chart: &SyntheticChart, res: &Resolution, stem_max: i64) -> Vec<LesReport> {
    let mut out = Vec::new();
    for stem in 0..=stem_max {
        for weight in stem.. {
            match les_dimension_check(chart, res, stem, weight) {
                Ok(r) => out.push(r),
                Err(_) => break,
            }
        }
    }
    out
}
