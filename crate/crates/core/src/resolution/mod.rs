//! Minimal free resolution of F₂ over A(2), Ext groups and Yoneda products.
//!
//! Stage `s` is a free module on generators sorted by internal degree `t`.
//! Its basis in degree `t` is the set of pairs (generator `g`, Milnor monomial
//! of degree `t - deg g`), ordered by generator and then by the Milnor order.
//! `Ext^{s,t}` has one basis vector per generator of stage `s` in degree `t`.

mod checkpoint;
mod naming;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2linalg::{EchelonBasis, F2Matrix, F2Vector};
use crate::steenrod::{self, MilnorElement, TOP_DEGREE};

pub use naming::{
    indecomposables, name_generators, parse_expression, GeneratorSpec, Monomial, Naming,
    DEFAULT_GENERATORS,
};

/// An Adams bidegree `(s, t)`; the stem is `t - s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bidegree {
    pub s: u32,
    pub t: u32,
}

impl Bidegree {
    pub fn new(s: u32, t: u32) -> Self {
        Bidegree { s, t }
    }

    pub fn stem(&self) -> i64 {
        self.t as i64 - self.s as i64
    }

    pub fn checked_add(self, other: Bidegree) -> Bidegree {
        Bidegree::new(self.s + other.s, self.t + other.t)
    }

    /// `self - other`, if both coordinates stay non-negative.
    pub fn checked_sub(self, other: Bidegree) -> Option<Bidegree> {
        Some(Bidegree::new(
            self.s.checked_sub(other.s)?,
            self.t.checked_sub(other.t)?,
        ))
    }
}

impl fmt::Display for Bidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.s, self.t)
    }
}

/// An element of `Ext^{s,t}` in the generator basis.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExtClass {
    pub degree: Bidegree,
    pub coords: F2Vector,
}

impl ExtClass {
    pub fn new(degree: Bidegree, coords: F2Vector) -> Self {
        ExtClass { degree, coords }
    }

    pub fn zero(res: &Resolution, degree: Bidegree) -> Result<Self> {
        Ok(ExtClass::new(degree, F2Vector::zeros(res.ext_dim(degree)?)))
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_zero()
    }

    pub fn sum(&self, other: &ExtClass) -> Result<ExtClass> {
        if self.degree != other.degree || self.coords.len() != other.coords.len() {
            return Err(Error::Contract(format!(
                "cannot add classes in {} and {}",
                self.degree, other.degree
            )));
        }
        Ok(ExtClass::new(self.degree, self.coords.sum(&other.coords)))
    }
}

/// A generator of a free stage with its boundary in the previous stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub degree: u32,
    /// `(index of a generator in stage s - 1, coefficient)`, sorted by index.
    pub boundary: Vec<(usize, MilnorElement)>,
}

/// Coordinates of a free stage in one internal degree.
#[derive(Clone, Debug, Default)]
struct Layout {
    first: usize,
    /// `offsets[k]` is where generator `first + k` starts; the last entry is the dimension.
    offsets: Vec<usize>,
}

impl Layout {
    fn build(gens: &[Generator], t: u32) -> Layout {
        let lo = t.saturating_sub(TOP_DEGREE);
        let first = gens.partition_point(|g| g.degree < lo);
        let last = gens.partition_point(|g| g.degree <= t);
        let mut offsets = Vec::with_capacity(last - first + 1);
        let mut acc = 0;
        offsets.push(0);
        for g in &gens[first..last] {
            acc += steenrod::dim_in_degree(t - g.degree);
            offsets.push(acc);
        }
        Layout { first, offsets }
    }

    fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn offset(&self, gen: usize) -> Option<usize> {
        let k = gen.checked_sub(self.first)?;
        (k + 1 < self.offsets.len()).then(|| self.offsets[k])
    }

    /// Generator index and offset inside its block for a coordinate.
    fn locate(&self, coord: usize) -> (usize, usize) {
        let k = self.offsets.partition_point(|&o| o <= coord) - 1;
        (self.first + k, coord - self.offsets[k])
    }
}

#[derive(Clone, Debug, Default)]
struct Stage {
    gens: Vec<Generator>,
    layouts: Vec<Layout>,
    /// Image of `d_s` in each degree, tagged by source coordinates.
    solvers: Vec<EchelonBasis>,
    /// `ker d_s` in each degree.
    kernels: Vec<Vec<F2Vector>>,
}

impl Stage {
    fn t_done(&self) -> usize {
        self.layouts.len()
    }

    fn gens_in_degree(&self, t: u32) -> std::ops::Range<usize> {
        let a = self.gens.partition_point(|g| g.degree < t);
        let b = self.gens.partition_point(|g| g.degree <= t);
        a..b
    }

    /// Coordinates of the element `a · g` for `g` a generator, as a vector in degree `t`.
    fn add_term(&self, layout: &Layout, t: u32, gen: usize, a: MilnorElement, out: &mut F2Vector) {
        if a.is_zero() {
            return;
        }
        let deg = t - self.gens[gen].degree;
        let start = steenrod::degree_start(deg);
        let base = layout.offset(gen).expect("generator inside layout");
        let mut bits = a.0;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            out.flip(base + i - start);
        }
    }

    /// Left action of `a` on a vector of this stage in degree `t`.
    fn act(&self, t: u32, v: &F2Vector, a: MilnorElement) -> F2Vector {
        let da = a.degree().unwrap_or(0);
        let target = &self.layouts[(t + da) as usize];
        let mut out = F2Vector::zeros(target.dim());
        let layout = &self.layouts[t as usize];
        for c in v.iter_ones() {
            let (gen, rel) = layout.locate(c);
            let m = steenrod::degree_start(t - self.gens[gen].degree) + rel;
            let prod = a * MilnorElement(1 << m);
            self.add_term(target, t + da, gen, prod, &mut out);
        }
        out
    }

    fn boundary_vector(&self, layout: &Layout, t: u32, boundary: &[(usize, MilnorElement)]) -> F2Vector {
        let mut v = F2Vector::zeros(layout.dim());
        for &(j, c) in boundary {
            self.add_term(layout, t, j, c, &mut v);
        }
        v
    }

    fn vector_to_boundary(&self, layout: &Layout, t: u32, v: &F2Vector) -> Vec<(usize, MilnorElement)> {
        let mut out: Vec<(usize, MilnorElement)> = Vec::new();
        for c in v.iter_ones() {
            let (gen, rel) = layout.locate(c);
            let m = steenrod::degree_start(t - self.gens[gen].degree) + rel;
            match out.last_mut() {
                Some((g, e)) if *g == gen => *e += MilnorElement(1 << m),
                _ => out.push((gen, MilnorElement(1 << m))),
            }
        }
        out
    }
}

/// Lift of a cocycle `F_{s_b} → F₂[t_b]` to a chain map `F_{s_b + k} → F_k`.
struct ChainMap {
    source: Bidegree,
    /// `maps[k][g]`: image of generator `g` of stage `s_b + k`, in stage `k`
    /// at degree `deg g - t_b` (empty when `deg g < t_b`).
    maps: Vec<Vec<F2Vector>>,
}

type ProductKey = (ExtClass, Bidegree);

/// A minimal resolution of F₂ over A(2) through `(s_max, t_max)`.
pub struct Resolution {
    s_max: u32,
    t_max: u32,
    stages: Vec<Stage>,
    /// Scan kernel vectors in reverse when adjoining generators (test hook).
    reverse_order: bool,
    chain_maps: Mutex<HashMap<ExtClass, Arc<ChainMap>>>,
    products: Mutex<HashMap<ProductKey, Arc<F2Matrix>>>,
}

impl Default for Resolution {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Resolution")
            .field("s_max", &self.s_max)
            .field("t_max", &self.t_max)
            .finish()
    }
}

impl Resolution {
    /// An empty resolution; call [`Resolution::extend`] to compute.
    pub fn new() -> Self {
        Resolution {
            s_max: 0,
            t_max: 0,
            stages: Vec::new(),
            reverse_order: false,
            chain_maps: Mutex::new(HashMap::new()),
            products: Mutex::new(HashMap::new()),
        }
    }

    /// Resolve through `(s_max, t_max)`.
    pub fn compute(s_max: u32, t_max: u32) -> Result<Self> {
        let mut r = Resolution::new();
        r.extend(s_max, t_max)?;
        Ok(r)
    }

    /// Like [`Resolution::compute`] but adjoining generators from the kernel
    /// basis in reverse order; Ext dimensions must not change.
    pub fn compute_reversed(s_max: u32, t_max: u32) -> Result<Self> {
        let mut r = Resolution::new();
        r.reverse_order = true;
        r.extend(s_max, t_max)?;
        Ok(r)
    }

    pub fn s_max(&self) -> u32 {
        self.s_max
    }

    pub fn t_max(&self) -> u32 {
        self.t_max
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Extend to at least `(s_max, t_max)`, keeping everything already computed.
    pub fn extend(&mut self, s_max: u32, t_max: u32) -> Result<()> {
        let s_max = if self.is_empty() { s_max } else { s_max.max(self.s_max) };
        let t_max = if self.is_empty() { t_max } else { t_max.max(self.t_max) };
        for s in 0..=s_max {
            if self.stages.len() <= s as usize {
                self.stages.push(Stage::default());
            }
            for t in self.stages[s as usize].t_done() as u32..=t_max {
                self.compute_cell(s, t, None)?;
            }
        }
        self.s_max = s_max;
        self.t_max = t_max;
        self.chain_maps.lock().unwrap().clear();
        self.products.lock().unwrap().clear();
        Ok(())
    }

    /// Compute stage `s` in degree `t`. With `given`, the generators are taken
    /// from a checkpoint and only verified.
    fn compute_cell(&mut self, s: u32, t: u32, given: Option<Vec<Generator>>) -> Result<()> {
        let su = s as usize;
        if s == 0 {
            let stage = &mut self.stages[0];
            let fresh = if t == 0 {
                vec![Generator { degree: 0, boundary: Vec::new() }]
            } else {
                Vec::new()
            };
            if let Some(g) = given {
                if g != fresh {
                    return Err(Error::Consistency(format!(
                        "stage 0 must have a single generator in degree 0 (block (0, {t}))"
                    )));
                }
            }
            stage.gens.extend(fresh);
            let layout = Layout::build(&stage.gens, t);
            let dim = layout.dim();
            stage.kernels.push(if t == 0 {
                Vec::new()
            } else {
                (0..dim).map(|i| F2Vector::unit(dim, i)).collect()
            });
            stage.solvers.push(EchelonBasis::new(1, dim));
            stage.layouts.push(layout);
            return Ok(());
        }

        let (lower, upper) = self.stages.split_at_mut(su);
        let prev = &lower[su - 1];
        let stage = &mut upper[0];
        let target = &prev.layouts[t as usize];
        let kernel = &prev.kernels[t as usize];
        let old = Layout::build(&stage.gens, t);
        let old_dim = old.dim();

        let images: Vec<F2Vector> = {
            let stage = &*stage;
            let image = |c: usize| {
                let (gen, rel) = old.locate(c);
                let g = &stage.gens[gen];
                let m = MilnorElement(1 << (steenrod::degree_start(t - g.degree) + rel));
                let mut v = F2Vector::zeros(target.dim());
                for &(j, a) in &g.boundary {
                    prev.add_term(target, t, j, m * a, &mut v);
                }
                v
            };
            if old_dim > 256 {
                (0..old_dim).into_par_iter().map(image).collect()
            } else {
                (0..old_dim).map(image).collect()
            }
        };

        let mut echelon = EchelonBasis::new(target.dim(), old_dim);
        let mut cycles = Vec::new();
        for (c, img) in images.iter().enumerate() {
            let (r, mut tag) = echelon.reduce(img);
            if r.is_zero() {
                tag.flip(c);
                cycles.push(tag);
            } else {
                echelon.insert(img, &F2Vector::unit(old_dim, c));
            }
        }

        let block = |reason: String| Error::Consistency(format!("block ({s}, {t}): {reason}"));
        let mut new_gens = Vec::new();
        match given {
            None => {
                let order: Box<dyn Iterator<Item = &F2Vector>> = if self.reverse_order {
                    Box::new(kernel.iter().rev())
                } else {
                    Box::new(kernel.iter())
                };
                for k in order {
                    if !echelon.contains(k) {
                        let n = old_dim + new_gens.len();
                        echelon.extend_tags(n + 1);
                        echelon.insert(k, &F2Vector::unit(n + 1, n));
                        new_gens.push(Generator {
                            degree: t,
                            boundary: prev.vector_to_boundary(target, t, k),
                        });
                    }
                }
            }
            Some(gens) => {
                let mut ker = EchelonBasis::new(target.dim(), 0);
                for k in kernel {
                    ker.insert_untagged(k);
                }
                for g in gens {
                    if g.degree != t {
                        return Err(block(format!("generator has degree {}", g.degree)));
                    }
                    for &(j, a) in &g.boundary {
                        let ok = j < prev.gens.len()
                            && prev.gens[j].degree <= t
                            && (a.is_zero() || a.degree() == Some(t - prev.gens[j].degree));
                        if !ok {
                            return Err(block(format!("boundary term on generator {j} has the wrong degree")));
                        }
                    }
                    let v = prev.boundary_vector(target, t, &g.boundary);
                    if !ker.contains(&v) {
                        return Err(block("boundary is not a cycle".into()));
                    }
                    let n = old_dim + new_gens.len();
                    echelon.extend_tags(n + 1);
                    if !echelon.insert(&v, &F2Vector::unit(n + 1, n)) {
                        return Err(block("generator is redundant".into()));
                    }
                    new_gens.push(g);
                }
            }
        }
        if echelon.rank() != kernel.len() {
            return Err(block(format!(
                "image has rank {} but the kernel has dimension {}",
                echelon.rank(),
                kernel.len()
            )));
        }
        let dim = old_dim + new_gens.len();
        echelon.extend_tags(dim);
        stage.gens.extend(new_gens);
        stage.kernels.push(cycles.iter().map(|c| c.resized(dim)).collect());
        stage.solvers.push(echelon);
        stage.layouts.push(Layout::build(&stage.gens, t));
        Ok(())
    }

    fn check_range(&self, d: Bidegree) -> Result<()> {
        if self.is_empty() || d.s > self.s_max || d.t > self.t_max {
            return Err(Error::OutOfRange { s: d.s, t: d.t });
        }
        Ok(())
    }

    pub fn ext_dim(&self, d: Bidegree) -> Result<usize> {
        self.check_range(d)?;
        Ok(self.stages[d.s as usize].gens_in_degree(d.t).len())
    }

    /// Basis vectors of `Ext^{s,t}`.
    pub fn ext_basis(&self, d: Bidegree) -> Result<Vec<ExtClass>> {
        let n = self.ext_dim(d)?;
        Ok((0..n)
            .map(|i| ExtClass::new(d, F2Vector::unit(n, i)))
            .collect())
    }

    /// Generators of stage `s` (sorted by degree).
    pub fn generators(&self, s: u32) -> Result<&[Generator]> {
        self.stages
            .get(s as usize)
            .map(|st| st.gens.as_slice())
            .ok_or(Error::OutOfRange { s, t: 0 })
    }

    /// Whether `d` lies inside the computed range.
    pub fn contains(&self, d: Bidegree) -> bool {
        self.check_range(d).is_ok()
    }

    /// Bidegrees with nonzero Ext inside the computed range.
    pub fn nonzero_bidegrees(&self) -> Vec<Bidegree> {
        let mut out = Vec::new();
        for (s, st) in self.stages.iter().enumerate() {
            for g in &st.gens {
                let d = Bidegree::new(s as u32, g.degree);
                if out.last() != Some(&d) {
                    out.push(d);
                }
            }
        }
        out
    }

    /// `d_s ∘ d_{s+1} = 0` on every generator, checked by direct evaluation.
    pub fn verify_complex(&self) -> Result<()> {
        for s in 2..self.stages.len() {
            let (prev, stage) = (&self.stages[s - 1], &self.stages[s]);
            let pp = &self.stages[s - 2];
            for (i, g) in stage.gens.iter().enumerate() {
                let t = g.degree;
                let v = prev.boundary_vector(&prev.layouts[t as usize], t, &g.boundary);
                let mut w = F2Vector::zeros(pp.layouts[t as usize].dim());
                let layout = &prev.layouts[t as usize];
                for c in v.iter_ones() {
                    let (gen, rel) = layout.locate(c);
                    let h = &prev.gens[gen];
                    let m = MilnorElement(1 << (steenrod::degree_start(t - h.degree) + rel));
                    for &(j, a) in &h.boundary {
                        pp.add_term(&pp.layouts[t as usize], t, j, m * a, &mut w);
                    }
                }
                if !w.is_zero() {
                    return Err(Error::Consistency(format!(
                        "d∘d is nonzero on generator {i} of stage {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn chain_map(&self, class: &ExtClass) -> Result<Arc<ChainMap>> {
        if let Some(m) = self.chain_maps.lock().unwrap().get(class) {
            return Ok(m.clone());
        }
        let map = Arc::new(self.lift(class)?);
        self.chain_maps
            .lock()
            .unwrap()
            .insert(class.clone(), map.clone());
        Ok(map)
    }

    fn lift(&self, class: &ExtClass) -> Result<ChainMap> {
        let b = class.degree;
        self.check_range(b)?;
        let in_degree = self.stages[b.s as usize].gens_in_degree(b.t);
        if class.coords.len() != in_degree.len() {
            return Err(Error::Contract(format!(
                "class in {b} has {} coordinates, Ext has dimension {}",
                class.coords.len(),
                in_degree.len()
            )));
        }
        let mut maps: Vec<Vec<F2Vector>> = Vec::new();
        for k in 0..=(self.s_max - b.s) as usize {
            let src = &self.stages[b.s as usize + k];
            let dst = &self.stages[k];
            let level: Result<Vec<F2Vector>> = src
                .gens
                .par_iter()
                .enumerate()
                .map(|(gi, g)| {
                    if g.degree < b.t {
                        return Ok(F2Vector::zeros(0));
                    }
                    let d = g.degree - b.t;
                    if k == 0 {
                        let mut v = F2Vector::zeros(dst.layouts[d as usize].dim());
                        if d == 0 && class.coords.get(gi - in_degree.start) {
                            v.set(0, true);
                        }
                        return Ok(v);
                    }
                    let below = &self.stages[k - 1];
                    let mut y = F2Vector::zeros(below.layouts[d as usize].dim());
                    for &(j, a) in &g.boundary {
                        let prev_deg = self.stages[b.s as usize + k - 1].gens[j].degree;
                        if prev_deg < b.t {
                            continue;
                        }
                        let fj = &maps[k - 1][j];
                        if !fj.is_zero() {
                            y.add_assign(&below.act(prev_deg - b.t, fj, a));
                        }
                    }
                    dst.solvers[d as usize].preimage(&y).ok_or_else(|| {
                        Error::Consistency(format!("chain map for {b} does not lift at stage {k}"))
                    })
                })
                .collect();
            maps.push(level?);
        }
        Ok(ChainMap { source: b, maps })
    }

    /// Matrix of multiplication by `a` from `Ext^d` to `Ext^{d + deg a}`
    /// (rows index the target basis).
    pub fn product_matrix(&self, a: &ExtClass, d: Bidegree) -> Result<Arc<F2Matrix>> {
        let key = (a.clone(), d);
        if let Some(m) = self.products.lock().unwrap().get(&key) {
            return Ok(m.clone());
        }
        let target = d.checked_add(a.degree);
        self.check_range(target)?;
        self.check_range(d)?;
        let map = self.chain_map(a)?;
        debug_assert_eq!(map.source, a.degree);
        let src_gens = self.stages[d.s as usize].gens_in_degree(d.t);
        let tgt_gens = self.stages[target.s as usize].gens_in_degree(target.t);
        let layout = &self.stages[d.s as usize].layouts[d.t as usize];
        let mut m = F2Matrix::zeros(tgt_gens.len(), src_gens.len());
        for (row, g) in tgt_gens.enumerate() {
            let v = &map.maps[d.s as usize][g];
            for (col, i) in src_gens.clone().enumerate() {
                if v.get(layout.offset(i).unwrap()) {
                    m.set(row, col, true);
                }
            }
        }
        let m = Arc::new(m);
        self.products.lock().unwrap().insert(key, m.clone());
        Ok(m)
    }

    /// The Yoneda product `a · b`.
    pub fn multiply(&self, a: &ExtClass, b: &ExtClass) -> Result<ExtClass> {
        let d = a.degree.checked_add(b.degree);
        self.check_range(d)?;
        if a.is_zero() || b.is_zero() {
            return ExtClass::zero(self, d);
        }
        let m = self.product_matrix(a, b.degree)?;
        Ok(ExtClass::new(d, m.mul_vec(&b.coords)?))
    }
}
