//! The Adams spectral sequence for tmf from E₂ to E₅ = E_∞.
//!
//! Pages are kept in E₂ coordinates: for each bidegree, the cycles `Z_r` and
//! boundaries `B_r ⊆ Z_r` are subspaces of Ext. The differential `d_r` is
//! assembled from seeds, the Leibniz rule and degree reasons, and any class
//! left undetermined is an error unless the seed file allows it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::convert::Infallible;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::f2linalg::{EchelonBasis, F2Vector};
use crate::resolution::{Bidegree, ExtClass, Naming, Resolution};

/// Longest differential; E₅ = E_∞.
pub const LAST_PAGE: u32 = 4;

/// Margin (in `s`, `t`) below the resolution's edge where pages are trusted.
pub const MARGIN_S: u32 = 2 * LAST_PAGE;
pub const MARGIN_T: u32 = 2 * (LAST_PAGE - 1);

/// One `d<r> <monomial> -> <monomial|0>` line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedLine {
    pub line: usize,
    pub page: u32,
    pub source: String,
    /// `None` for an explicit zero.
    pub target: Option<String>,
}

/// One `assume-zero: <monomial> d<r>` line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssumeZero {
    pub line: usize,
    pub page: u32,
    pub source: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedFile {
    pub name: String,
    pub seeds: Vec<SeedLine>,
    pub assume_zero: Vec<AssumeZero>,
}

fn parse_page(word: &str) -> Option<u32> {
    let r: u32 = word.strip_prefix('d')?.parse().ok()?;
    (2..=LAST_PAGE).contains(&r).then_some(r)
}

/// Parse the seed format. Names are resolved later against a naming table.
pub fn parse_seeds(text: &str, file: &str) -> Result<SeedFile> {
    let err = |line: usize, reason: String| Error::Parse {
        file: file.to_string(),
        line,
        reason,
    };
    let mut out = SeedFile {
        name: file.to_string(),
        ..Default::default()
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        if let Some(rest) = body.strip_prefix("assume-zero:") {
            let rest = rest.trim();
            let (mono, page) = rest
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| err(line, "expected `assume-zero: <monomial> d<r>`".into()))?;
            let page = parse_page(page.trim())
                .ok_or_else(|| err(line, format!("bad page `{page}`")))?;
            out.assume_zero.push(AssumeZero {
                line,
                page,
                source: mono.trim().to_string(),
            });
            continue;
        }
        let (lhs, rhs) = body
            .split_once("->")
            .ok_or_else(|| err(line, "expected `d<r> <monomial> -> <monomial|0>`".into()))?;
        let mut words = lhs.split_whitespace();
        let page = words
            .next()
            .and_then(parse_page)
            .ok_or_else(|| err(line, "line must start with d2, d3 or d4".into()))?;
        let source: Vec<&str> = words.collect();
        if source.len() != 1 {
            return Err(err(line, "source must be a single monomial".into()));
        }
        let rhs = rhs.trim();
        if rhs.is_empty() || rhs.contains(char::is_whitespace) {
            return Err(err(line, "target must be a single monomial or 0".into()));
        }
        out.seeds.push(SeedLine {
            line,
            page,
            source: source[0].to_string(),
            target: (rhs != "0").then(|| rhs.to_string()),
        });
    }
    Ok(out)
}

pub fn load_seeds(path: &Path) -> Result<SeedFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_seeds(&text, &path.display().to_string())
}

/// Where a differential value came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Seed { line: usize },
    /// `d(a·x) = d(a)·x + a·d(x)` for a multiplier `a`.
    Leibniz { multiplier: ExtClass, factor: ExtClass },
    DegreeReason,
    AssumeZero { line: usize },
    /// Forced by the Leibniz relations the class enters further up.
    Inferred,
}

/// A differential `d_r(source) = target`, both in E₂ coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferentialRecord {
    pub page: u32,
    pub source: ExtClass,
    pub target: ExtClass,
    pub origin: Origin,
}

/// Resolve seed names and check the degree of every nonzero seed.
pub fn check_seeds(
    file: &SeedFile,
    naming: &Naming,
    res: &Resolution,
) -> Result<Vec<DifferentialRecord>> {
    let err = |line: usize, reason: String| Error::Parse {
        file: file.name.clone(),
        line,
        reason,
    };
    let mut out = Vec::new();
    for seed in &file.seeds {
        let src = naming
            .parse_monomial(&seed.source)
            .map_err(|e| err(seed.line, e.to_string()))?;
        let d = naming.degree_of(&src);
        let want = Bidegree::new(d.s + seed.page, d.t + seed.page - 1);
        let tgt = match &seed.target {
            Some(t) => {
                let m = naming
                    .parse_monomial(t)
                    .map_err(|e| err(seed.line, e.to_string()))?;
                let got = naming.degree_of(&m);
                if got != want {
                    return Err(err(
                        seed.line,
                        format!(
                            "d{} of `{}` at {d} must land in {want}, but `{t}` is in {got}",
                            seed.page, seed.source
                        ),
                    ));
                }
                Some(m)
            }
            None => None,
        };
        if !res.contains(d) || !res.contains(want) {
            continue;
        }
        let source = naming.eval(res, &src)?;
        let target = match tgt {
            Some(m) => naming.eval(res, &m)?,
            None => ExtClass::zero(res, want)?,
        };
        if source.is_zero() && !target.is_zero() {
            return Err(err(seed.line, format!("`{}` is zero in E₂", seed.source)));
        }
        out.push(DifferentialRecord {
            page: seed.page,
            source,
            target,
            origin: Origin::Seed { line: seed.line },
        });
    }
    Ok(out)
}

/// How an E₂ basis class (of an adapted basis) fares in the spectral sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KillRecord {
    Survives,
    /// Supports a nonzero `d_r`.
    Source(u32),
    /// Hit by a `d_r`.
    Target(u32),
}

impl fmt::Display for KillRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KillRecord::Survives => write!(f, "survives"),
            KillRecord::Source(r) => write!(f, "source d{r}"),
            KillRecord::Target(r) => write!(f, "target d{r}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptedClass {
    pub class: ExtClass,
    pub record: KillRecord,
}

#[derive(Clone, Debug)]
struct Cell {
    z: EchelonBasis,
    b: EchelonBasis,
}

impl Cell {
    fn dim(&self) -> usize {
        self.z.rank() - self.b.rank()
    }
}

/// The page `E_r`: cycles and boundaries per bidegree, in E₂ coordinates.
#[derive(Clone, Debug)]
pub struct PageState {
    pub r: u32,
    cells: BTreeMap<Bidegree, Cell>,
}

impl PageState {
    /// `dim E_r` at `d`; zero for bidegrees without classes.
    pub fn dim(&self, d: Bidegree) -> usize {
        self.cells.get(&d).map_or(0, Cell::dim)
    }

    pub fn cycles(&self, d: Bidegree) -> Vec<F2Vector> {
        self.cells.get(&d).map_or(Vec::new(), |c| c.z.basis().to_vec())
    }

    pub fn boundaries(&self, d: Bidegree) -> Vec<F2Vector> {
        self.cells.get(&d).map_or(Vec::new(), |c| c.b.basis().to_vec())
    }

    pub fn is_cycle(&self, x: &ExtClass) -> bool {
        self.cells
            .get(&x.degree)
            .map_or(x.is_zero(), |c| c.z.contains(&x.coords))
    }

    pub fn is_boundary(&self, x: &ExtClass) -> bool {
        self.cells
            .get(&x.degree)
            .map_or(x.is_zero(), |c| c.b.contains(&x.coords))
    }

    /// Bidegrees with nonzero E₂ (the domain of the page).
    pub fn bidegrees(&self) -> impl Iterator<Item = Bidegree> + '_ {
        self.cells.keys().copied()
    }
}

/// One derived differential kept for the log.
#[derive(Clone, Debug)]
pub struct LogEntry {
    pub record: DifferentialRecord,
}

/// The spectral sequence run on a resolution with a naming table.
pub struct SpectralSequence<'a> {
    res: &'a Resolution,
    naming: &'a Naming,
    seeds: Vec<DifferentialRecord>,
    assume_zero: Vec<(u32, ExtClass, usize)>,
    pages: Vec<PageState>,
    /// Per page, the map `d_r` on each bidegree: rows span `Z_r`, tags give targets.
    maps: Vec<HashMap<Bidegree, EchelonBasis>>,
    /// Bidegrees whose `d_r` target is outside the resolution.
    truncated: Vec<BTreeSet<Bidegree>>,
    log: Vec<LogEntry>,
    /// Assume zero on undetermined classes instead of failing.
    lenient: bool,
    residue: Vec<(u32, Bidegree, String)>,
}

impl fmt::Debug for SpectralSequence<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralSequence")
            .field("pages", &self.pages.len())
            .finish()
    }
}

/// Result of one sweep of [`SpectralSequence::leibniz_closure`]. Targets are
/// affine in the unknown bits `b`: `y₀ + Σ bⱼ·Yⱼ`, stored as `[y₀ | Y₁ | …]`.
#[derive(Default)]
struct Pass {
    maps: HashMap<Bidegree, EchelonBasis>,
    truncated: BTreeSet<Bidegree>,
    log: Vec<(Bidegree, F2Vector, F2Vector, Origin)>,
    undetermined: Vec<(Bidegree, F2Vector, F2Vector)>,
    conflicts: Vec<Conflict>,
}

/// Two derivations of `d_r(x)`; `diff` is their difference modulo `B_r`.
struct Conflict {
    d: Bidegree,
    x: F2Vector,
    y: F2Vector,
    tag: F2Vector,
    diff: F2Vector,
    origin: Origin,
}

/// Apply `f` to each of the `count` blocks of an affine vector.
fn map_blocks<E>(
    v: &F2Vector,
    n_in: usize,
    n_out: usize,
    count: usize,
    mut f: impl FnMut(F2Vector) -> std::result::Result<F2Vector, E>,
) -> std::result::Result<F2Vector, E> {
    let mut out = F2Vector::zeros(n_out * count);
    if n_in == 0 || n_out == 0 {
        return Ok(out);
    }
    for j in 0..count {
        let b = v.slice(j * n_in, n_in);
        if b.is_zero() {
            continue;
        }
        for i in f(b)?.iter_ones() {
            out.set(j * n_out + i, true);
        }
    }
    Ok(out)
}

/// Evaluate an affine vector at the bits `values`.
fn concretize(v: &F2Vector, n: usize, values: &[bool]) -> F2Vector {
    let mut out = v.slice(0, n);
    for (j, _) in values.iter().enumerate().filter(|(_, b)| **b) {
        out.add_assign(&v.slice((j + 1) * n, n));
    }
    out
}

/// Cycles spanning `Z_r / B_r`.
fn complement(cell: &Cell) -> Vec<F2Vector> {
    let mut span = cell.b.clone();
    cell.z.basis().iter().filter(|z| span.insert_untagged(z)).cloned().collect()
}

fn target_of(d: Bidegree, r: u32) -> Bidegree {
    Bidegree::new(d.s + r, d.t + r - 1)
}

impl<'a> SpectralSequence<'a> {
    /// Set up E₂ and resolve the seed file.
    pub fn new(res: &'a Resolution, naming: &'a Naming, seeds: &SeedFile) -> Result<Self> {
        let records = check_seeds(seeds, naming, res)?;
        let mut assume_zero = Vec::new();
        for a in &seeds.assume_zero {
            let m = naming.parse_monomial(&a.source).map_err(|e| Error::Parse {
                file: seeds.name.clone(),
                line: a.line,
                reason: e.to_string(),
            })?;
            let d = naming.degree_of(&m);
            if res.contains(d) {
                assume_zero.push((a.page, naming.eval(res, &m)?, a.line));
            }
        }
        let mut cells = BTreeMap::new();
        for d in res.nonzero_bidegrees() {
            let n = res.ext_dim(d)?;
            let mut z = EchelonBasis::new(n, 0);
            for i in 0..n {
                z.insert_untagged(&F2Vector::unit(n, i));
            }
            cells.insert(d, Cell { z, b: EchelonBasis::new(n, 0) });
        }
        Ok(SpectralSequence {
            res,
            naming,
            seeds: records,
            assume_zero,
            pages: vec![PageState { r: 2, cells }],
            maps: Vec::new(),
            truncated: Vec::new(),
            log: Vec::new(),
            lenient: false,
            residue: Vec::new(),
        })
    }

    /// Run pages 2, 3, 4 and stop at E₅ = E_∞.
    pub fn run(res: &'a Resolution, naming: &'a Naming, seeds: &SeedFile) -> Result<Self> {
        let mut ss = Self::new(res, naming, seeds)?;
        while ss.current().r <= LAST_PAGE {
            ss.leibniz_closure()?;
            ss.turn_page()?;
        }
        Ok(ss)
    }

    pub fn resolution(&self) -> &'a Resolution {
        self.res
    }

    pub fn naming(&self) -> &'a Naming {
        self.naming
    }

    pub fn current(&self) -> &PageState {
        self.pages.last().unwrap()
    }

    pub fn page(&self, r: u32) -> Option<&PageState> {
        self.pages.get(r.checked_sub(2)? as usize)
    }

    /// In lenient mode the free part of an undetermined differential is set to
    /// zero and the class recorded in [`SpectralSequence::residue`] instead of
    /// raising an error. Outside the valid region this happens regardless.
    pub fn set_lenient(&mut self, lenient: bool) {
        self.lenient = lenient;
    }

    /// `(page, bidegree, class)` for every differential that was assumed.
    pub fn residue(&self) -> &[(u32, Bidegree, String)] {
        &self.residue
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Whether `d` is far enough from the resolution's edge for the pages to
    /// be free of truncation effects.
    pub fn is_valid(&self, d: Bidegree) -> bool {
        d.s + MARGIN_S <= self.res.s_max() && d.t + MARGIN_T <= self.res.t_max()
    }

    /// Determine `d_r` on every bidegree of the current page.
    ///
    /// A forward pass propagates seeds along products. Classes it cannot
    /// reach get unknown targets, and a second pass collects the linear
    /// constraints the Leibniz rule puts on them from products further up.
    pub fn leibniz_closure(&mut self) -> Result<()> {
        let r = self.current().r;
        if self.maps.len() as u32 > r - 2 {
            return Ok(());
        }
        let page = self.current().clone();
        let first = self.pass(&page, &[], 0)?;
        let (pass, values) = if first.undetermined.is_empty() {
            if let Some(c) = first.conflicts.first() {
                return Err(self.conflict_error(r, c));
            }
            (first, Vec::new())
        } else {
            let mut unknowns = Vec::new();
            let mut vars = 0;
            for (d, _, _) in &first.undetermined {
                let comp = page.cells.get(&target_of(*d, r)).map(complement).unwrap_or_default();
                unknowns.push((vars, comp.len()));
                vars += comp.len();
            }
            let second = self.pass(&page, &unknowns, vars)?;
            let values = self.solve(r, &second, &unknowns, vars)?;
            (second, values)
        };

        let mut maps = pass.maps;
        for (d, k) in maps.iter_mut() {
            let n = self.res.ext_dim(target_of(*d, r))?;
            k.map_tags(n, |t| concretize(t, n, &values));
        }
        let inferred = pass
            .undetermined
            .into_iter()
            .map(|(d, x, y)| (d, x, y, Origin::Inferred));
        for (d, x, y, origin) in pass.log.into_iter().chain(inferred) {
            let tgt = target_of(d, r);
            let n = self.res.ext_dim(tgt)?;
            let y = concretize(&y, n, &values);
            if !page.is_boundary(&ExtClass::new(tgt, y.clone())) {
                self.log.push(LogEntry {
                    record: DifferentialRecord {
                        page: r,
                        source: ExtClass::new(d, x),
                        target: ExtClass::new(tgt, y),
                        origin,
                    },
                });
            }
        }
        self.maps.push(maps);
        self.truncated.push(pass.truncated);
        Ok(())
    }

    /// Solve the constraints on the unknown bits. Bits left free are set to
    /// zero where that is allowed (lenient mode, or outside the valid region)
    /// and reported otherwise.
    fn solve(&mut self, r: u32, pass: &Pass, unknowns: &[(usize, usize)], vars: usize) -> Result<Vec<bool>> {
        let mut sys = EchelonBasis::new(vars, 1);
        for c in &pass.conflicts {
            let n = self.res.ext_dim(target_of(c.d, r))?;
            for i in 0..n {
                let coeffs = F2Vector::from_ones(vars, (0..vars).filter(|j| c.diff.get((j + 1) * n + i)));
                let constant = c.diff.get(i);
                let (rem, tag) = sys.reduce(&coeffs);
                if rem.is_zero() {
                    if tag.get(0) != constant {
                        return Err(self.conflict_error(r, c));
                    }
                } else {
                    sys.insert(&coeffs, &F2Vector::from_ones(1, constant.then_some(0)));
                }
            }
        }
        let mut missing = Vec::new();
        for ((d, x, _), &(first, m)) in pass.undetermined.iter().zip(unknowns) {
            let free: Vec<usize> = (first..first + m)
                .filter(|&j| !sys.contains(&F2Vector::unit(vars, j)))
                .collect();
            if free.is_empty() {
                continue;
            }
            let name = self.describe(&ExtClass::new(*d, x.clone()));
            if self.lenient || !self.is_valid(*d) {
                self.residue.push((r, *d, name));
                for j in free {
                    sys.insert(&F2Vector::unit(vars, j), &F2Vector::zeros(1));
                }
            } else {
                missing.push(name);
            }
        }
        if !missing.is_empty() {
            return Err(Error::Undetermined { page: r, classes: missing });
        }
        Ok((0..vars)
            .map(|j| sys.preimage(&F2Vector::unit(vars, j)).unwrap().get(0))
            .collect())
    }

    fn conflict_error(&self, r: u32, c: &Conflict) -> Error {
        let tgt = target_of(c.d, r);
        let n = self.res.ext_dim(tgt).unwrap_or(0);
        Error::Consistency(format!(
            "d{r} on {} disagrees: {} gives {}, earlier derivations give {}",
            self.describe(&ExtClass::new(c.d, c.x.clone())),
            origin_text(self, &c.origin),
            self.describe(&ExtClass::new(tgt, c.y.slice(0, n))),
            self.describe(&ExtClass::new(tgt, c.tag.slice(0, n))),
        ))
    }

    /// One sweep over the page in bidegree order. `unknowns[i]` gives the
    /// first variable and the number of variables of the i-th class that
    /// products do not reach; targets are affine in `vars` variables.
    fn pass(&self, page: &PageState, unknowns: &[(usize, usize)], vars: usize) -> Result<Pass> {
        let r = page.r;
        let count = 1 + vars;
        let mut out = Pass::default();
        // E_r-indecomposables with their (affine) differentials.
        let mut multipliers: Vec<(ExtClass, F2Vector)> = Vec::new();

        for (&d, cell) in &page.cells {
            let tgt = target_of(d, r);
            let n = cell.z.ambient_dim();
            if !self.res.contains(tgt) {
                out.truncated.insert(d);
                continue;
            }
            let n_tgt = self.res.ext_dim(tgt)?;
            let tgt_cell = page.cells.get(&tgt);
            let reduce_tgt = |v: &F2Vector| -> F2Vector {
                match tgt_cell {
                    Some(c) => map_blocks(v, n_tgt, n_tgt, count, |b| Ok::<_, Infallible>(c.b.reduce(&b).0))
                        .unwrap_or_else(|e| match e {}),
                    None => v.clone(),
                }
            };
            let mut k = EchelonBasis::new(n, n_tgt * count);
            let zero_t = F2Vector::zeros(n_tgt * count);
            for b in cell.b.basis() {
                k.insert(b, &zero_t);
            }
            let insert = |k: &mut EchelonBasis, x: &F2Vector, y: F2Vector, origin: Origin, out: &mut Pass| {
                let (rem, tag) = k.reduce(x);
                if rem.is_zero() {
                    let diff = reduce_tgt(&tag.sum(&y));
                    if !diff.is_zero() {
                        out.conflicts.push(Conflict { d, x: x.clone(), y, tag, diff, origin });
                    }
                    return;
                }
                k.insert(x, &y);
                if !reduce_tgt(&y).is_zero() {
                    out.log.push((d, x.clone(), y, origin));
                }
            };

            for (a, ya) in &multipliers {
                let Some(rest) = d.checked_sub(a.degree) else { continue };
                if rest.s == 0 {
                    continue;
                }
                let Some(kx) = out.maps.get(&rest) else { continue };
                let rows: Vec<(F2Vector, F2Vector)> = kx
                    .basis()
                    .iter()
                    .map(|x| (x.clone(), kx.preimage(x).unwrap()))
                    .collect();
                let rest_tgt = target_of(rest, r);
                let a_tgt = target_of(a.degree, r);
                let (n_rest, n_a) = (self.res.ext_dim(rest_tgt)?, self.res.ext_dim(a_tgt)?);
                for (x, yx) in rows {
                    let xc = ExtClass::new(rest, x);
                    // A zero product still constrains the targets.
                    let prod = self.res.multiply(a, &xc)?;
                    let mut y = map_blocks(&yx, n_rest, n_tgt, count, |b| {
                        Ok::<_, Error>(self.res.multiply(a, &ExtClass::new(rest_tgt, b))?.coords)
                    })?;
                    y.add_assign(&map_blocks(ya, n_a, n_tgt, count, |b| {
                        Ok::<_, Error>(self.res.multiply(&ExtClass::new(a_tgt, b), &xc)?.coords)
                    })?);
                    let origin = Origin::Leibniz { multiplier: a.clone(), factor: xc };
                    insert(&mut k, &prod.coords, y, origin, &mut out);
                }
            }
            let products = k.clone();

            for seed in self.seeds.iter().filter(|s| s.page == r && s.source.degree == d) {
                let line = match seed.origin {
                    Origin::Seed { line } => line,
                    _ => 0,
                };
                if !cell.z.contains(&seed.source.coords) {
                    return Err(Error::Consistency(format!(
                        "seed line {line}: {} does not survive to E{r}",
                        self.describe(&seed.source)
                    )));
                }
                if !seed.target.is_zero() {
                    let alive = tgt_cell.is_some_and(|c| c.z.contains(&seed.target.coords));
                    if !alive || tgt_cell.is_some_and(|c| c.b.contains(&seed.target.coords)) {
                        return Err(Error::Consistency(format!(
                            "seed line {line}: target {} is not a nonzero class of E{r}",
                            self.describe(&seed.target)
                        )));
                    }
                }
                let y = seed.target.coords.resized(n_tgt * count);
                insert(&mut k, &seed.source.coords, y, seed.origin.clone(), &mut out);
            }

            if k.rank() < cell.z.rank() && tgt_cell.map_or(0, Cell::dim) == 0 {
                for z in cell.z.basis() {
                    insert(&mut k, z, zero_t.clone(), Origin::DegreeReason, &mut out);
                }
            }
            for (_, x, line) in self.assume_zero.iter().filter(|(p, x, _)| *p == r && x.degree == d) {
                if cell.z.contains(&x.coords) {
                    insert(&mut k, &x.coords, zero_t.clone(), Origin::AssumeZero { line: *line }, &mut out);
                }
            }

            if k.rank() < cell.z.rank() {
                let comp = tgt_cell.map(complement).unwrap_or_default();
                for z in cell.z.basis() {
                    if k.contains(z) {
                        continue;
                    }
                    let mut y = zero_t.clone();
                    if let Some(&(first, m)) = unknowns.get(out.undetermined.len()) {
                        debug_assert_eq!(m, comp.len());
                        for (i, c) in comp.iter().enumerate() {
                            for bit in c.iter_ones() {
                                y.set((1 + first + i) * n_tgt + bit, true);
                            }
                        }
                    }
                    k.insert(z, &y);
                    out.undetermined.push((d, z.clone(), y));
                }
            }

            // Classes not reached by products become multipliers.
            let mut span = products;
            for z in cell.z.basis() {
                let (rem, _) = span.reduce(z);
                if !rem.is_zero() {
                    let y = k.preimage(&rem).unwrap();
                    span.insert(&rem, &y);
                    multipliers.push((ExtClass::new(d, rem), y));
                }
            }
            out.maps.insert(d, k);
        }
        if !unknowns.is_empty() && out.undetermined.len() != unknowns.len() {
            return Err(Error::Contract("closure passes disagree on undetermined classes".into()));
        }
        Ok(out)
    }

    /// `d_r(x)` in E₂ coordinates (a representative modulo `B_r`).
    pub fn differential(&self, r: u32, x: &ExtClass) -> Result<ExtClass> {
        let maps = self
            .maps
            .get(r.checked_sub(2).ok_or_else(|| Error::Contract(format!("no page {r}")))? as usize)
            .ok_or_else(|| Error::Contract(format!("d{r} has not been computed")))?;
        let tgt = target_of(x.degree, r);
        if x.is_zero() {
            return ExtClass::zero(self.res, tgt);
        }
        if self.truncated[r as usize - 2].contains(&x.degree) {
            return Err(Error::Region(format!("d{r} on {} leaves the computed range", x.degree)));
        }
        let k = maps
            .get(&x.degree)
            .ok_or_else(|| Error::Contract(format!("no classes in {}", x.degree)))?;
        let y = k.preimage(&x.coords).ok_or_else(|| {
            Error::Contract(format!("{} is not a cycle on E{r}", self.describe(x)))
        })?;
        Ok(ExtClass::new(tgt, y))
    }

    /// Form `E_{r+1}` from `E_r` and `d_r`, verifying `d_r ∘ d_r = 0`.
    pub fn turn_page(&mut self) -> Result<()> {
        self.leibniz_closure()?;
        let page = self.current().clone();
        let r = page.r;
        let maps = &self.maps[r as usize - 2];
        let mut next = page.clone();
        next.r = r + 1;
        for (&d, cell) in &page.cells {
            let tgt = target_of(d, r);
            let Some(k) = maps.get(&d) else { continue };
            let Some(tcell) = page.cells.get(&tgt) else { continue };
            // Kernel of Z_r → Z_r(tgt)/B_r(tgt).
            let zb = cell.z.basis();
            let mut image = EchelonBasis::new(tcell.z.ambient_dim(), zb.len());
            let mut kernel = Vec::new();
            for (i, z) in zb.iter().enumerate() {
                let y = k.preimage(z).unwrap();
                let y = tcell.b.reduce(&y).0;
                if let Some(k2) = maps.get(&tgt) {
                    if let Some(tt) = page.cells.get(&target_of(tgt, r)) {
                        let yy = k2.preimage(&y).ok_or_else(|| {
                            Error::Consistency(format!(
                                "d{r} of {} is not a cycle",
                                self.describe(&ExtClass::new(d, z.clone()))
                            ))
                        })?;
                        if !tt.b.contains(&yy) {
                            return Err(Error::Consistency(format!(
                                "d{r}∘d{r} is nonzero on {}",
                                self.describe(&ExtClass::new(d, z.clone()))
                            )));
                        }
                    }
                }
                let (rem, mut tag) = image.reduce(&y);
                if rem.is_zero() {
                    tag.flip(i);
                    let mut v = F2Vector::zeros(cell.z.ambient_dim());
                    for j in tag.iter_ones() {
                        v.add_assign(&zb[j]);
                    }
                    kernel.push(v);
                } else {
                    image.insert(&y, &F2Vector::unit(zb.len(), i));
                }
            }
            let mut z = EchelonBasis::new(cell.z.ambient_dim(), 0);
            for v in kernel {
                z.insert_untagged(&v);
            }
            next.cells.get_mut(&d).unwrap().z = z;
            let tb = &mut next.cells.get_mut(&tgt).unwrap().b;
            for y in image.basis() {
                tb.insert_untagged(y);
            }
        }
        self.pages.push(next);
        Ok(())
    }

    /// The E₅ = E_∞ page.
    pub fn e_infinity(&self) -> Result<&PageState> {
        self.page(LAST_PAGE + 1)
            .ok_or_else(|| Error::Contract("pages 2–4 have not been turned".into()))
    }

    /// An adapted basis of E₂ at `d` with the fate of each class.
    pub fn kill_records(&self, d: Bidegree) -> Result<Vec<AdaptedClass>> {
        self.e_infinity()?;
        if !self.is_valid(d) {
            return Err(Error::Region(format!(
                "{d} is within the margin of the computed range ({}, {})",
                self.res.s_max(),
                self.res.t_max()
            )));
        }
        let n = self.res.ext_dim(d)?;
        let mut span = EchelonBasis::new(n, 0);
        let mut out = Vec::new();
        let mut add = |vs: Vec<F2Vector>, record: KillRecord, out: &mut Vec<AdaptedClass>| {
            for v in vs {
                if span.insert_untagged(&v) {
                    out.push(AdaptedClass { class: ExtClass::new(d, v), record });
                }
            }
        };
        for r in 2..=LAST_PAGE {
            add(self.page(r + 1).unwrap().boundaries(d), KillRecord::Target(r), &mut out);
        }
        add(self.page(LAST_PAGE + 1).unwrap().cycles(d), KillRecord::Survives, &mut out);
        for r in (2..=LAST_PAGE).rev() {
            add(self.page(r).unwrap().cycles(d), KillRecord::Source(r), &mut out);
        }
        Ok(out)
    }

    /// Possible longer differentials `d_r`, `r > 4`, between nonzero E₅ groups,
    /// listed as `(r, source, target)` for valid sources.
    pub fn trust_annotations(&self) -> Result<Vec<(u32, Bidegree, Bidegree)>> {
        let e = self.e_infinity()?;
        let mut out = Vec::new();
        for d in e.bidegrees() {
            if e.dim(d) == 0 || !self.is_valid(d) {
                continue;
            }
            for r in (LAST_PAGE + 1)..=self.res.s_max() {
                let tgt = target_of(d, r);
                if !self.res.contains(tgt) {
                    break;
                }
                if e.dim(tgt) > 0 {
                    out.push((r, d, tgt));
                }
            }
        }
        Ok(out)
    }

    pub fn describe(&self, x: &ExtClass) -> String {
        self.naming
            .describe(self.res, x)
            .unwrap_or_else(|_| format!("{:?}@{}", x.coords, x.degree))
    }

    /// One line per logged differential: `d<r> <source> -> <target> [origin]`.
    pub fn log_lines(&self) -> Vec<String> {
        self.log
            .iter()
            .map(|e| {
                let rec = &e.record;
                format!(
                    "d{} {} -> {} [{}]",
                    rec.page,
                    self.describe(&rec.source),
                    self.describe(&rec.target),
                    origin_text(self, &rec.origin)
                )
            })
            .collect()
    }
}

fn origin_text(ss: &SpectralSequence<'_>, o: &Origin) -> String {
    match o {
        Origin::Seed { line } => format!("seed line {line}"),
        Origin::Leibniz { multiplier, factor } => {
            format!("leibniz {} * {}", ss.describe(multiplier), ss.describe(factor))
        }
        Origin::DegreeReason => "degree".into(),
        Origin::AssumeZero { line } => format!("assume-zero line {line}"),
        Origin::Inferred => "forced by products".into(),
    }
}

#[cfg(test)]
mod tests;
