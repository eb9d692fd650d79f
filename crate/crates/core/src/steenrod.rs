//! The subalgebra A(2) of the mod 2 Steenrod algebra, in the Milnor basis.
//!
//! A(2) has exactly 64 Milnor basis monomials `Sq(r1, r2, r3)` with
//! `r1 < 8`, `r2 < 4`, `r3 < 2`, so an element is stored as a `u64` bitmask
//! over a fixed global indexing. The full 64×64 multiplication table is built
//! once from Milnor's product formula.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2linalg::F2Matrix;

/// Profile bounds of A(2): `r_i < 2^(3 - i + 1)`.
pub const PROFILE: [u8; 3] = [8, 4, 2];
/// Top degree of A(2).
pub const TOP_DEGREE: u32 = 23;
pub const DIMENSION: usize = 64;

/// A Milnor basis monomial `Sq(r1, r2, r3)` inside the A(2) profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MilnorMonomial {
    pub r1: u8,
    pub r2: u8,
    pub r3: u8,
}

impl MilnorMonomial {
    pub const UNIT: MilnorMonomial = MilnorMonomial { r1: 0, r2: 0, r3: 0 };

    pub fn new(r1: u8, r2: u8, r3: u8) -> Result<Self> {
        if r1 >= PROFILE[0] || r2 >= PROFILE[1] || r3 >= PROFILE[2] {
            return Err(Error::Contract(format!(
                "Sq({r1},{r2},{r3}) is outside the A(2) profile"
            )));
        }
        Ok(MilnorMonomial { r1, r2, r3 })
    }

    pub fn degree(&self) -> u32 {
        self.r1 as u32 + 3 * self.r2 as u32 + 7 * self.r3 as u32
    }

    /// Position in the global basis order (by degree, then lexicographic).
    pub fn index(&self) -> usize {
        tables().index_of[self.lex_code()] as usize
    }

    fn lex_code(&self) -> usize {
        (self.r1 as usize) * 8 + (self.r2 as usize) * 2 + self.r3 as usize
    }

    pub fn from_index(i: usize) -> MilnorMonomial {
        tables().monomials[i]
    }
}

impl fmt::Display for MilnorMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.r1, self.r2, self.r3) {
            (0, 0, 0) => write!(f, "1"),
            (a, 0, 0) => write!(f, "Sq({a})"),
            (a, b, 0) => write!(f, "Sq({a},{b})"),
            (a, b, c) => write!(f, "Sq({a},{b},{c})"),
        }
    }
}

/// An element of A(2): an F₂-sum of Milnor monomials.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MilnorElement(pub u64);

impl MilnorElement {
    pub const ZERO: MilnorElement = MilnorElement(0);
    pub const ONE: MilnorElement = MilnorElement(1);

    pub fn from_monomial(m: MilnorMonomial) -> Self {
        MilnorElement(1 << m.index())
    }

    /// `Sq(r1, r2, r3)`; panics outside the profile.
    pub fn sq(r1: u8, r2: u8, r3: u8) -> Self {
        Self::from_monomial(MilnorMonomial::new(r1, r2, r3).expect("A(2) profile"))
    }

    /// The Steenrod square `Sq^n = Sq(n)` for `n < 8`.
    pub fn sq_n(n: u8) -> Self {
        Self::sq(n, 0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == 0
    }

    pub fn terms(&self) -> impl Iterator<Item = MilnorMonomial> + '_ {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(MilnorMonomial::from_index(i))
        })
    }

    /// Degree of a nonzero homogeneous element.
    pub fn degree(&self) -> Option<u32> {
        let mut degrees = self.terms().map(|m| m.degree());
        let d = degrees.next()?;
        degrees.all(|e| e == d).then_some(d)
    }

    /// Coefficient of the unit `Sq(0,0,0)`.
    pub fn unit_coefficient(&self) -> bool {
        self.0 & 1 == 1
    }

    pub fn contains(&self, m: MilnorMonomial) -> bool {
        self.0 >> m.index() & 1 == 1
    }
}

impl Add for MilnorElement {
    type Output = MilnorElement;
    fn add(self, rhs: MilnorElement) -> MilnorElement {
        MilnorElement(self.0 ^ rhs.0)
    }
}

impl AddAssign for MilnorElement {
    fn add_assign(&mut self, rhs: MilnorElement) {
        self.0 ^= rhs.0;
    }
}

impl Mul for MilnorElement {
    type Output = MilnorElement;
    fn mul(self, rhs: MilnorElement) -> MilnorElement {
        product(self, rhs)
    }
}

impl fmt::Debug for MilnorElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MilnorElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for m in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

struct Tables {
    monomials: Vec<MilnorMonomial>,
    index_of: [u8; 64],
    /// Global indices of the basis in each degree `0..=23`.
    by_degree: Vec<Vec<usize>>,
    /// `mul[i][j]` = `b_i · b_j`.
    mul: Vec<[u64; 64]>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

fn build_tables() -> Tables {
    let mut monomials = Vec::with_capacity(DIMENSION);
    for r1 in 0..PROFILE[0] {
        for r2 in 0..PROFILE[1] {
            for r3 in 0..PROFILE[2] {
                monomials.push(MilnorMonomial { r1, r2, r3 });
            }
        }
    }
    // Stable sort keeps lexicographic order within each degree.
    monomials.sort_by_key(|m| m.degree());
    let mut index_of = [0u8; 64];
    let mut by_degree = vec![Vec::new(); TOP_DEGREE as usize + 1];
    for (i, m) in monomials.iter().enumerate() {
        index_of[m.lex_code()] = i as u8;
        by_degree[m.degree() as usize].push(i);
    }
    let mut mul = vec![[0u64; 64]; DIMENSION];
    for (i, a) in monomials.iter().enumerate() {
        for (j, b) in monomials.iter().enumerate() {
            let mut acc = 0u64;
            for t in milnor_product_terms(a, b) {
                let m = MilnorMonomial {
                    r1: t[0] as u8,
                    r2: t[1] as u8,
                    r3: t[2] as u8,
                };
                acc ^= 1 << index_of[m.lex_code()];
            }
            mul[i][j] = acc;
        }
    }
    Tables {
        monomials,
        index_of,
        by_degree,
        mul,
    }
}

/// `n choose (parts)` is odd iff the binary expansions of the parts are disjoint.
fn multinomial_odd(parts: &[u32]) -> bool {
    let mut seen = 0u32;
    for &p in parts {
        if seen & p != 0 {
            return false;
        }
        seen |= p;
    }
    true
}

/// Terms of `Sq(R)·Sq(S)` with odd coefficient, via Milnor matrices.
///
/// Rows `i = 1..=3` satisfy `Σ_j 2^j x_ij = r_i`; columns `j = 1..=3`
/// satisfy `Σ_i x_ij = s_j`. Any term escaping the profile must cancel,
/// which is asserted.
fn milnor_product_terms(a: &MilnorMonomial, b: &MilnorMonomial) -> Vec<[u32; 3]> {
    let r = [a.r1 as u32, a.r2 as u32, a.r3 as u32];
    let s = [b.r1 as u32, b.r2 as u32, b.r3 as u32];
    let mut counts: std::collections::BTreeMap<[u32; 6], bool> = Default::default();
    // x[i][j] for i, j in 0..4; x[0][0] unused.
    let mut x = [[0u32; 4]; 4];
    fn rows(
        i: usize,
        r: &[u32; 3],
        s: &[u32; 3],
        x: &mut [[u32; 4]; 4],
        out: &mut std::collections::BTreeMap<[u32; 6], bool>,
    ) {
        if i == 4 {
            // Column constraints fix the top row.
            for j in 1..4 {
                let used: u32 = (1..4).map(|k| x[k][j]).sum();
                if used > s[j - 1] {
                    return;
                }
                x[0][j] = s[j - 1] - used;
            }
            let mut t = [0u32; 6];
            for n in 1..=6usize {
                let mut parts = Vec::new();
                for i in 0..=n.min(3) {
                    let j = n - i;
                    if j <= 3 {
                        parts.push(x[i][j]);
                    }
                }
                if !multinomial_odd(&parts) {
                    return;
                }
                t[n - 1] = parts.iter().sum();
            }
            let e = out.entry(t).or_insert(false);
            *e = !*e;
            return;
        }
        let ri = r[i - 1];
        for x3 in 0..=ri / 8 {
            for x2 in 0..=(ri - 8 * x3) / 4 {
                for x1 in 0..=(ri - 8 * x3 - 4 * x2) / 2 {
                    x[i][3] = x3;
                    x[i][2] = x2;
                    x[i][1] = x1;
                    x[i][0] = ri - 8 * x3 - 4 * x2 - 2 * x1;
                    rows(i + 1, r, s, x, out);
                }
            }
        }
    }
    rows(1, &r, &s, &mut x, &mut counts);
    counts
        .into_iter()
        .filter(|&(_, odd)| odd)
        .map(|(t, _)| {
            assert!(
                t[3] == 0
                    && t[4] == 0
                    && t[5] == 0
                    && t[0] < PROFILE[0] as u32
                    && t[1] < PROFILE[1] as u32
                    && t[2] < PROFILE[2] as u32,
                "A(2) not closed under Sq{r:?}·Sq{s:?}: {t:?}"
            );
            [t[0], t[1], t[2]]
        })
        .collect()
}

/// The profile-bounded Milnor monomials of degree `d`, lexicographic in `(r1, r2, r3)`.
pub fn basis_in_degree(d: u32) -> Vec<MilnorMonomial> {
    basis_indices(d)
        .iter()
        .map(|&i| MilnorMonomial::from_index(i))
        .collect()
}

pub(crate) fn basis_indices(d: u32) -> &'static [usize] {
    tables()
        .by_degree
        .get(d as usize)
        .map_or(&[], |v| v.as_slice())
}

pub fn dim_in_degree(d: u32) -> usize {
    basis_indices(d).len()
}

/// Global index of the first monomial of degree `d`; the basis in each degree
/// occupies a contiguous block of global indices.
pub(crate) fn degree_start(d: u32) -> usize {
    tables().by_degree[d as usize][0]
}

/// Product in A(2), bilinear over the table.
pub fn product(a: MilnorElement, b: MilnorElement) -> MilnorElement {
    let t = tables();
    let mut acc = 0u64;
    let mut x = a.0;
    while x != 0 {
        let i = x.trailing_zeros() as usize;
        x &= x - 1;
        let row = &t.mul[i];
        let mut y = b.0;
        while y != 0 {
            let j = y.trailing_zeros() as usize;
            y &= y - 1;
            acc ^= row[j];
        }
    }
    MilnorElement(acc)
}

/// Matrix of left multiplication by `x` from degree `d_source` to `d_target`
/// (rows indexed by the target basis, columns by the source basis).
pub fn act_matrix(d_source: u32, d_target: u32, x: MilnorElement) -> Result<F2Matrix> {
    if !x.is_zero() {
        match x.degree() {
            Some(d) if d_target >= d_source && d == d_target - d_source => {}
            Some(d) => {
                return Err(Error::Contract(format!(
                    "element of degree {d} cannot map degree {d_source} to degree {d_target}"
                )))
            }
            None => return Err(Error::Contract("inhomogeneous element".into())),
        }
    } else if d_target < d_source {
        return Err(Error::Contract(format!(
            "target degree {d_target} below source degree {d_source}"
        )));
    }
    let src = basis_indices(d_source);
    let tgt = basis_indices(d_target);
    let mut m = F2Matrix::zeros(tgt.len(), src.len());
    for (col, &j) in src.iter().enumerate() {
        let y = product(x, MilnorElement(1 << j));
        for (row, &i) in tgt.iter().enumerate() {
            if y.0 >> i & 1 == 1 {
                m.set(row, col, true);
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_zero_is_the_unit() {
        assert_eq!(basis_in_degree(0), vec![MilnorMonomial::UNIT]);
    }

    #[test]
    fn sixty_four_monomials() {
        let total: usize = (0..=30).map(dim_in_degree).sum();
        assert_eq!(total, 64);
        assert!(basis_in_degree(24).is_empty());
    }

    #[test]
    fn degree_three() {
        // Enumerate the profile directly for the oracle.
        let mut brute = vec![];
        for r1 in 0..8u8 {
            for r2 in 0..4u8 {
                for r3 in 0..2u8 {
                    if r1 as u32 + 3 * r2 as u32 + 7 * r3 as u32 == 3 {
                        brute.push(MilnorMonomial { r1, r2, r3 });
                    }
                }
            }
        }
        assert_eq!(
            brute,
            vec![
                MilnorMonomial::new(0, 1, 0).unwrap(),
                MilnorMonomial::new(3, 0, 0).unwrap()
            ]
        );
        assert_eq!(basis_in_degree(3), brute);
    }

    #[test]
    fn poincare_duality() {
        for d in 0..=TOP_DEGREE {
            assert_eq!(dim_in_degree(d), dim_in_degree(TOP_DEGREE - d), "degree {d}");
        }
    }

    #[test]
    fn small_products() {
        let sq1 = MilnorElement::sq_n(1);
        let sq2 = MilnorElement::sq_n(2);
        assert!((sq1 * sq1).is_zero());
        assert_eq!(sq1 * sq2 + sq2 * sq1, MilnorElement::sq(0, 1, 0));
        assert_eq!(sq1 * sq2, MilnorElement::sq_n(3));
        let x = MilnorElement::sq(5, 2, 1);
        assert_eq!(MilnorElement::ONE * x, x);
        assert_eq!(x * MilnorElement::ONE, x);
    }

    #[test]
    fn act_matrix_examples() {
        for d in 0..=10 {
            assert_eq!(
                act_matrix(d, d, MilnorElement::ONE).unwrap(),
                F2Matrix::identity(dim_in_degree(d))
            );
        }
        assert!(act_matrix(2, 5, MilnorElement::ZERO).unwrap().is_zero());
        let m = act_matrix(0, 1, MilnorElement::sq_n(1)).unwrap();
        assert_eq!(m, F2Matrix::identity(1));
        assert!(matches!(
            act_matrix(0, 2, MilnorElement::sq_n(1)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn top_class_is_a_product_of_generators() {
        // Sq(7,3,1) spans degree 23.
        assert_eq!(basis_in_degree(23), vec![MilnorMonomial::new(7, 3, 1).unwrap()]);
    }
}
