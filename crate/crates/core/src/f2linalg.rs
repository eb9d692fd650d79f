//! Exact linear algebra over the two-element field.
//!
//! Everything is bit-packed into `u64` words; addition is word-level XOR.
//! Pivot selection always takes the lowest unused column so that every
//! reduction is deterministic.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// A bit-packed vector over F₂.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct F2Vector {
    len: usize,
    words: Vec<u64>,
}

impl F2Vector {
    pub fn zeros(len: usize) -> Self {
        F2Vector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = F2Vector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    /// The vector with a single one in position `i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = F2Vector::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_ones(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut v = F2Vector::zeros(len);
        for i in ones {
            v.flip(i);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &F2Vector) {
        assert_eq!(self.len, other.len, "F2Vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn sum(&self, other: &F2Vector) -> F2Vector {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn dot(&self, other: &F2Vector) -> bool {
        assert_eq!(self.len, other.len, "F2Vector length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn first_one(&self) -> Option<usize> {
        for (k, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(k * WORD + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * WORD + b)
                }
            })
        })
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Concatenation `[self | other]`.
    pub fn concat(&self, other: &F2Vector) -> F2Vector {
        let mut out = F2Vector::zeros(self.len + other.len);
        for i in self.iter_ones() {
            out.set(i, true);
        }
        for i in other.iter_ones() {
            out.set(self.len + i, true);
        }
        out
    }

    /// Copy padded with zeros (or truncated) to `len`.
    pub fn resized(&self, len: usize) -> F2Vector {
        let mut out = F2Vector::zeros(len);
        for i in self.iter_ones().take_while(|&i| i < len) {
            out.set(i, true);
        }
        out
    }

    /// The sub-vector of positions `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> F2Vector {
        assert!(start + len <= self.len);
        let mut out = F2Vector::zeros(len);
        for i in self.iter_ones() {
            if i >= start && i < start + len {
                out.set(i - start, true);
            }
        }
        out
    }
}

impl fmt::Debug for F2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, "]")
    }
}

/// A dense row-major bit-packed matrix over F₂.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        F2Matrix {
            rows,
            cols,
            stride,
            bits: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = F2Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from 0/1 rows. All rows must have length `cols`.
    pub fn from_rows(rows: &[Vec<u8>], cols: usize) -> Self {
        let mut m = F2Matrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged row {i}");
            for (j, &b) in r.iter().enumerate() {
                if b & 1 == 1 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    pub fn from_vectors(rows: &[F2Vector], cols: usize) -> Self {
        let mut m = F2Matrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row {i} has the wrong length");
            m.row_words_mut(i).copy_from_slice(&r.words);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        (self.bits[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        debug_assert!(i < self.rows && j < self.cols);
        let w = &mut self.bits[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.bits[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row(&self, i: usize) -> F2Vector {
        F2Vector {
            len: self.cols,
            words: self.row_words(i).to_vec(),
        }
    }

    pub fn row_vectors(&self) -> Vec<F2Vector> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    fn xor_rows(&mut self, target: usize, source: usize) {
        if target == source {
            return;
        }
        let s = self.stride;
        let (t0, s0) = (target * s, source * s);
        for k in 0..s {
            let v = self.bits[s0 + k];
            self.bits[t0 + k] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.stride {
            self.bits.swap(a * self.stride + k, b * self.stride + k);
        }
    }

    pub fn transpose(&self) -> F2Matrix {
        let mut t = F2Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row(i).iter_ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    /// `self · v` with `v` of length `cols`.
    pub fn mul_vec(&self, v: &F2Vector) -> Result<F2Vector> {
        if v.len() != self.cols {
            return Err(Error::Contract(format!(
                "matrix has {} columns but vector has length {}",
                self.cols,
                v.len()
            )));
        }
        let mut out = F2Vector::zeros(self.rows);
        for i in 0..self.rows {
            let bit = self
                .row_words(i)
                .iter()
                .zip(&v.words)
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1;
            if bit == 1 {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Row vector times matrix: `v · self` with `v` of length `rows`.
    pub fn vec_mul(&self, v: &F2Vector) -> Result<F2Vector> {
        if v.len() != self.rows {
            return Err(Error::Contract(format!(
                "matrix has {} rows but vector has length {}",
                self.rows,
                v.len()
            )));
        }
        let mut out = F2Vector::zeros(self.cols);
        for i in v.iter_ones() {
            for (a, b) in out.words.iter_mut().zip(self.row_words(i)) {
                *a ^= b;
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &F2Matrix) -> Result<F2Matrix> {
        if self.cols != other.rows {
            return Err(Error::Contract(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = F2Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let r = other.vec_mul(&self.row(i))?;
            out.row_words_mut(i).copy_from_slice(&r.words);
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Reduced row-echelon form in place; returns the pivot columns.
    fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..self.cols {
            if next == self.rows {
                break;
            }
            let (w, mask) = (col / WORD, 1u64 << (col % WORD));
            let Some(p) = (next..self.rows).find(|&r| self.bits[r * self.stride + w] & mask != 0)
            else {
                continue;
            };
            self.swap_rows(next, p);
            for r in 0..self.rows {
                if r != next && self.bits[r * self.stride + w] & mask != 0 {
                    self.xor_rows(r, next);
                }
            }
            pivots.push(col);
            next += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }
}

impl fmt::Debug for F2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "F2Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl F2Matrix {
    /// Reduced row-echelon form and its pivot columns (lowest column first).
    pub fn rref(&self) -> (F2Matrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    /// A basis of `{ v : self · v = 0 }`, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<F2Vector> {
        let (reduced, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::with_capacity(self.cols - pivots.len());
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = F2Vector::unit(self.cols, free);
            for (row, &p) in pivots.iter().enumerate() {
                if reduced.get(row, free) {
                    v.set(p, true);
                }
            }
            basis.push(v);
        }
        basis
    }

    /// Some `x` with `self · x = b`, or `None` when `b` is not in the column span.
    pub fn solve_preimage(&self, b: &F2Vector) -> Result<Option<F2Vector>> {
        if b.len() != self.rows {
            return Err(Error::Contract(format!(
                "right-hand side has length {} but matrix has {} rows",
                b.len(),
                self.rows
            )));
        }
        // Row-reduce [A | b] and read off the solution with free variables at zero.
        let mut aug = F2Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in self.row(i).iter_ones() {
                aug.set(i, j, true);
            }
            if b.get(i) {
                aug.set(i, self.cols, true);
            }
        }
        let pivots = aug.rref_in_place();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = F2Vector::zeros(self.cols);
        for (row, &p) in pivots.iter().enumerate() {
            if aug.get(row, self.cols) {
                x.set(p, true);
            }
        }
        Ok(Some(x))
    }
}

/// An incrementally built subspace kept in reduced echelon form.
///
/// Each stored row remembers which combination of inserted vectors produced
/// it (`tag`), so the basis doubles as a preimage solver: reducing a target
/// vector to zero yields the combination of tags that sums to it.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EchelonBasis {
    dim: usize,
    tag_len: usize,
    rows: Vec<F2Vector>,
    tags: Vec<F2Vector>,
    pivots: Vec<usize>,
}

impl EchelonBasis {
    pub fn new(dim: usize, tag_len: usize) -> Self {
        EchelonBasis {
            dim,
            tag_len,
            ..Default::default()
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn basis(&self) -> &[F2Vector] {
        &self.rows
    }

    /// Reduce `v` against the basis; returns the remainder and the combined tag
    /// of the rows that were subtracted.
    pub fn reduce(&self, v: &F2Vector) -> (F2Vector, F2Vector) {
        let mut v = v.clone();
        let mut tag = F2Vector::zeros(self.tag_len);
        for (k, &p) in self.pivots.iter().enumerate() {
            if v.get(p) {
                v.add_assign(&self.rows[k]);
                tag.add_assign(&self.tags[k]);
            }
        }
        (v, tag)
    }

    pub fn contains(&self, v: &F2Vector) -> bool {
        self.reduce(v).0.is_zero()
    }

    /// Insert `v` carrying `tag`. Returns `false` when `v` was already in the span.
    pub fn insert(&mut self, v: &F2Vector, tag: &F2Vector) -> bool {
        let (r, reduce_tag) = self.reduce(v);
        let Some(p) = r.first_one() else {
            return false;
        };
        let mut t = tag.clone();
        t.add_assign(&reduce_tag);
        // Keep the basis fully reduced: clear column p from the older rows.
        for k in 0..self.rows.len() {
            if self.rows[k].get(p) {
                let (row, tg) = (r.clone(), t.clone());
                self.rows[k].add_assign(&row);
                self.tags[k].add_assign(&tg);
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.rows.insert(at, r);
        self.tags.insert(at, t);
        self.pivots.insert(at, p);
        true
    }

    /// Insert without a tag.
    pub fn insert_untagged(&mut self, v: &F2Vector) -> bool {
        let t = F2Vector::zeros(self.tag_len);
        self.insert(v, &t)
    }

    /// Grow every tag to `len` bits; existing tags are zero-padded.
    pub fn extend_tags(&mut self, len: usize) {
        assert!(len >= self.tag_len);
        self.tag_len = len;
        for t in &mut self.tags {
            *t = t.resized(len);
        }
    }

    /// Replace every tag by `f(tag)`. Only meaningful for linear `f`, since
    /// stored tags are sums of inserted ones.
    pub fn map_tags(&mut self, len: usize, mut f: impl FnMut(&F2Vector) -> F2Vector) {
        self.tag_len = len;
        for t in &mut self.tags {
            *t = f(t);
        }
    }

    pub fn tag_len(&self) -> usize {
        self.tag_len
    }

    /// Tag combination producing `v`, if `v` is in the span.
    pub fn preimage(&self, v: &F2Vector) -> Option<F2Vector> {
        let (r, tag) = self.reduce(v);
        r.is_zero().then_some(tag)
    }
}
