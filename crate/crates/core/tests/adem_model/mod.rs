//! An independent model of A(2): Steenrod squares acting on polynomials
//! F₂[x, y, z] through the Cartan formula, with Adem relations reducing words
//! to admissible form.
#![allow(dead_code)]

use std::collections::BTreeSet;

use synss::MilnorElement;

/// Sparse F₂ polynomial: a set of exponent vectors.
pub type Poly = BTreeSet<Vec<u32>>;

pub fn binom_odd(n: u32, k: u32) -> bool {
    k <= n && (n - k) & k == 0
}

pub fn toggle(p: &mut Poly, m: Vec<u32>) {
    if !p.remove(&m) {
        p.insert(m);
    }
}

/// `Sq^i` on a monomial by the Cartan formula.
pub fn sq_monomial(i: u32, m: &[u32], out: &mut Poly) {
    fn go(i: u32, m: &[u32], k: usize, acc: &mut Vec<u32>, out: &mut Poly) {
        if k == m.len() {
            if i == 0 {
                toggle(out, acc.clone());
            }
            return;
        }
        for j in 0..=i.min(m[k]) {
            if binom_odd(m[k], j) {
                acc.push(m[k] + j);
                go(i - j, m, k + 1, acc, out);
                acc.pop();
            }
        }
    }
    go(i, m, 0, &mut Vec::new(), out);
}

pub fn sq(i: u32, p: &Poly) -> Poly {
    let mut out = Poly::new();
    for m in p {
        sq_monomial(i, m, &mut out);
    }
    out
}

pub fn act_word(word: &[u32], p: &Poly) -> Poly {
    word.iter().rev().fold(p.clone(), |acc, &i| sq(i, &acc))
}

pub fn add_into(acc: &mut Poly, p: Poly) {
    for m in p {
        toggle(acc, m);
    }
}

/// Reduce a word of squares to a sum of admissible words with Adem relations:
/// `Sq^a Sq^b = Σ_j C(b-1-j, a-2j) Sq^{a+b-j} Sq^j` for `a < 2b`.
pub fn adem_reduce(word: Vec<u32>) -> BTreeSet<Vec<u32>> {
    let mut done = BTreeSet::new();
    let mut todo = vec![word];
    while let Some(w) = todo.pop() {
        let w: Vec<u32> = w.into_iter().filter(|&i| i > 0).collect();
        match (0..w.len().saturating_sub(1)).find(|&k| w[k] < 2 * w[k + 1]) {
            None => {
                if !done.remove(&w) {
                    done.insert(w);
                }
            }
            Some(k) => {
                let (a, b) = (w[k], w[k + 1]);
                for j in 0..=a / 2 {
                    if b >= 1 + j && binom_odd(b - 1 - j, a - 2 * j) {
                        let mut v = w[..k].to_vec();
                        v.push(a + b - j);
                        v.push(j);
                        v.extend_from_slice(&w[k + 2..]);
                        todo.push(v);
                    }
                }
            }
        }
    }
    done
}

/// Milnor `Sq(R)` on a one-variable power: a multinomial coefficient.
pub fn milnor_power(r: [u32; 3], m: u32) -> Option<u32> {
    let used = r[0] + r[1] + r[2];
    if used > m {
        return None;
    }
    let parts = [r[0], r[1], r[2], m - used];
    let mut seen = 0u32;
    for p in parts {
        if seen & p != 0 {
            return None;
        }
        seen |= p;
    }
    Some(m + r[0] + 3 * r[1] + 7 * r[2])
}

/// Milnor `Sq(R)` on a monomial via the Cartan formula for the Milnor basis.
pub fn milnor_monomial(r: [u32; 3], m: &[u32], out: &mut Poly) {
    fn go(r: [u32; 3], m: &[u32], k: usize, acc: &mut Vec<u32>, out: &mut Poly) {
        if k + 1 == m.len() {
            if let Some(e) = milnor_power(r, m[k]) {
                acc.push(e);
                toggle(out, acc.clone());
                acc.pop();
            }
            return;
        }
        for a in 0..=r[0] {
            for b in 0..=r[1] {
                for c in 0..=r[2] {
                    if let Some(e) = milnor_power([a, b, c], m[k]) {
                        acc.push(e);
                        go([r[0] - a, r[1] - b, r[2] - c], m, k + 1, acc, out);
                        acc.pop();
                    }
                }
            }
        }
    }
    go(r, m, 0, &mut Vec::new(), out);
}

pub fn act_element(x: MilnorElement, p: &Poly) -> Poly {
    let mut out = Poly::new();
    for m in x.terms() {
        let r = [m.r1 as u32, m.r2 as u32, m.r3 as u32];
        for mono in p {
            milnor_monomial(r, mono, &mut out);
        }
    }
    out
}

/// Test monomials x^a y^b z^c; `faithful_on_test_set` shows they separate A(2).
pub fn test_set() -> Vec<Poly> {
    let mut v = Vec::new();
    for a in [1u32, 3, 7, 15, 31] {
        for b in [0u32, 1, 3, 6, 7, 15] {
            for c in [0u32, 1, 3, 7] {
                v.push(Poly::from([vec![a, b, c]]));
            }
        }
    }
    v
}

