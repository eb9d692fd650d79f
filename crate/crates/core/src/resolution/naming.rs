//! Names for Ext classes: the thirteen algebra generators, products of them,
//! and positional names `x_{s,t,i}` for everything else.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use super::{Bidegree, ExtClass, Resolution};
use crate::error::{Error, Result};
use crate::f2linalg::{EchelonBasis, F2Vector};

/// One algebra generator of Ext with its bidegree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: Bidegree,
}

/// The algebra generators of Ext_{A(2)}(F₂, F₂) as `(name, s, t)`.
pub const DEFAULT_GENERATORS: [(&str, u32, u32); 13] = [
    ("h0", 1, 1),
    ("h1", 1, 2),
    ("h2", 1, 4),
    ("c0", 3, 11),
    ("w1", 4, 12),
    ("alpha", 3, 15),
    ("d0", 4, 18),
    ("beta", 3, 18),
    ("e0", 4, 21),
    ("g", 4, 24),
    ("gamma", 5, 30),
    ("delta", 7, 39),
    ("w2", 8, 56),
];

impl GeneratorSpec {
    pub fn defaults() -> Vec<GeneratorSpec> {
        DEFAULT_GENERATORS
            .iter()
            .map(|&(n, s, t)| GeneratorSpec {
                name: n.to_string(),
                degree: Bidegree::new(s, t),
            })
            .collect()
    }
}

/// A monomial in the named generators: one exponent per generator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn factor_count(&self) -> u32 {
        self.0.iter().sum()
    }

    fn max_factor(&self) -> Option<usize> {
        self.0.iter().rposition(|&e| e > 0)
    }
}

/// Indecomposable classes in `s ≤ s_max`, `t - s ≤ stem_max`: a basis of a
/// complement to the span of products of lower-degree classes, found
/// bidegree by bidegree in increasing `s`.
pub fn indecomposables(res: &Resolution, s_max: u32, stem_max: u32) -> Result<Vec<ExtClass>> {
    let mut found: Vec<ExtClass> = Vec::new();
    for s in 1..=s_max {
        for t in s..=(s + stem_max).min(res.t_max()) {
            let d = Bidegree::new(s, t);
            let n = res.ext_dim(d)?;
            if n == 0 {
                continue;
            }
            let mut span = EchelonBasis::new(n, 0);
            for y in &found {
                let Some(rest) = d.checked_sub(y.degree) else { continue };
                if rest.s == 0 {
                    continue;
                }
                let m = res.product_matrix(y, rest)?;
                for col in m.transpose().row_vectors() {
                    span.insert_untagged(&col);
                }
            }
            for i in 0..n {
                let v = F2Vector::unit(n, i);
                let (r, _) = span.reduce(&v);
                if !r.is_zero() {
                    span.insert_untagged(&r);
                    found.push(ExtClass::new(d, r));
                }
            }
        }
    }
    Ok(found)
}

/// Named generators plus a cache of nonzero monomials per bidegree.
pub struct Naming {
    names: Vec<String>,
    classes: Vec<ExtClass>,
    monomials: Mutex<HashMap<Bidegree, Arc<Vec<(Monomial, ExtClass)>>>>,
}

impl fmt::Debug for Naming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Naming").field("names", &self.names).finish()
    }
}

/// Identify the generators listed in `specs` with the computed indecomposables.
pub fn name_generators(res: &Resolution, specs: &[GeneratorSpec]) -> Result<Naming> {
    for sp in specs {
        if res.ext_dim(sp.degree)? == 0 {
            return Err(Error::Consistency(format!(
                "Ext at {} is zero, but `{}` should live there",
                sp.degree, sp.name
            )));
        }
    }
    let s_max = specs.iter().map(|g| g.degree.s).max().unwrap_or(0);
    let stem_max = specs.iter().map(|g| g.degree.stem()).max().unwrap_or(0) as u32;
    let found = indecomposables(res, s_max, stem_max)?;
    let mut classes = Vec::with_capacity(specs.len());
    for sp in specs {
        let here: Vec<&ExtClass> = found.iter().filter(|c| c.degree == sp.degree).collect();
        if here.len() != 1 {
            return Err(Error::Consistency(format!(
                "expected one indecomposable for `{}` at {}, found {}",
                sp.name,
                sp.degree,
                here.len()
            )));
        }
        classes.push(here[0].clone());
    }
    if let Some(extra) = found.iter().find(|c| !specs.iter().any(|g| g.degree == c.degree)) {
        return Err(Error::Consistency(format!(
            "unexpected indecomposable at {}",
            extra.degree
        )));
    }
    Ok(Naming::new(
        specs.iter().map(|g| g.name.clone()).collect(),
        classes,
    ))
}

impl Naming {
    pub fn new(names: Vec<String>, classes: Vec<ExtClass>) -> Self {
        Naming {
            names,
            classes,
            monomials: Mutex::new(HashMap::new()),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn generator(&self, name: &str) -> Option<&ExtClass> {
        self.index_of(name).map(|i| &self.classes[i])
    }

    pub fn generators(&self) -> impl Iterator<Item = (&str, &ExtClass)> {
        self.names.iter().map(String::as_str).zip(&self.classes)
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn degree_of(&self, m: &Monomial) -> Bidegree {
        let mut d = Bidegree::new(0, 0);
        for (e, c) in m.0.iter().zip(&self.classes) {
            d.s += e * c.degree.s;
            d.t += e * c.degree.t;
        }
        d
    }

    /// Parse `h0^2*alpha` (or `1`).
    pub fn parse_monomial(&self, text: &str) -> Result<Monomial> {
        let mut m = Monomial::one(self.names.len());
        let text = text.trim();
        if text == "1" {
            return Ok(m);
        }
        for factor in text.split('*') {
            let factor = factor.trim();
            let (name, power) = match factor.split_once('^') {
                Some((n, p)) => (
                    n.trim(),
                    p.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::UnknownName(factor.to_string()))?,
                ),
                None => (factor, 1),
            };
            let i = self
                .index_of(name)
                .ok_or_else(|| Error::UnknownName(name.to_string()))?;
            m.0[i] += power;
        }
        Ok(m)
    }

    pub fn format_monomial(&self, m: &Monomial) -> String {
        let parts: Vec<String> = m
            .0
            .iter()
            .zip(&self.names)
            .filter(|(e, _)| **e > 0)
            .map(|(e, n)| if *e == 1 { n.clone() } else { format!("{n}^{e}") })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    pub fn unit(&self, res: &Resolution) -> Result<ExtClass> {
        Ok(ExtClass::new(Bidegree::new(0, 0), F2Vector::unit(res.ext_dim(Bidegree::new(0, 0))?, 0)))
    }

    /// Value of a monomial in Ext.
    pub fn eval(&self, res: &Resolution, m: &Monomial) -> Result<ExtClass> {
        let mut acc = self.unit(res)?;
        for (i, &e) in m.0.iter().enumerate() {
            for _ in 0..e {
                acc = res.multiply(&self.classes[i], &acc)?;
            }
        }
        Ok(acc)
    }

    /// Value of a sum of monomials `a + b*c`.
    pub fn eval_expression(&self, res: &Resolution, text: &str) -> Result<ExtClass> {
        let terms = parse_expression(text);
        let mut acc: Option<ExtClass> = None;
        for term in terms {
            let v = self.eval(res, &self.parse_monomial(&term)?)?;
            acc = Some(match acc {
                None => v,
                Some(a) => a.sum(&v)?,
            });
        }
        acc.ok_or_else(|| Error::UnknownName(text.to_string()))
    }

    /// Bidegree of a sum-of-monomials expression (all terms must agree).
    pub fn expression_degree(&self, text: &str) -> Result<Bidegree> {
        let mut degree = None;
        for term in parse_expression(text) {
            let d = self.degree_of(&self.parse_monomial(&term)?);
            if degree.is_some_and(|e| e != d) {
                return Err(Error::Contract(format!("`{text}` is not homogeneous")));
            }
            degree = Some(d);
        }
        degree.ok_or_else(|| Error::UnknownName(text.to_string()))
    }

    /// All monomials with nonzero value in bidegree `d`, with their values.
    pub fn monomials_in(&self, res: &Resolution, d: Bidegree) -> Result<Arc<Vec<(Monomial, ExtClass)>>> {
        if let Some(v) = self.monomials.lock().unwrap().get(&d) {
            return Ok(v.clone());
        }
        let mut out = Vec::new();
        if d == Bidegree::new(0, 0) {
            out.push((Monomial::one(self.names.len()), self.unit(res)?));
        } else {
            for (i, g) in self.classes.iter().enumerate() {
                let Some(rest) = d.checked_sub(g.degree) else { continue };
                if rest.s == 0 && rest.t > 0 {
                    continue;
                }
                for (m, v) in self.monomials_in(res, rest)?.iter() {
                    if m.max_factor().is_some_and(|j| j > i) {
                        continue;
                    }
                    let w = res.multiply(g, v)?;
                    if !w.is_zero() {
                        let mut m = m.clone();
                        m.0[i] += 1;
                        out.push((m, w));
                    }
                }
            }
        }
        let out = Arc::new(out);
        self.monomials.lock().unwrap().insert(d, out.clone());
        Ok(out)
    }

    /// A readable name: a single product if one matches, else a sum of
    /// products, else a sum of positional basis names.
    pub fn describe(&self, res: &Resolution, class: &ExtClass) -> Result<String> {
        if class.is_zero() {
            return Ok("0".into());
        }
        let monos = self.monomials_in(res, class.degree)?;
        let mut named: Vec<(u32, String, &ExtClass)> = monos
            .iter()
            .map(|(m, v)| (m.factor_count(), self.format_monomial(m), v))
            .collect();
        named.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        if let Some((_, name, _)) = named.iter().find(|(_, _, v)| *v == class) {
            return Ok(name.clone());
        }
        let mut span = EchelonBasis::new(class.coords.len(), named.len());
        for (k, (_, _, v)) in named.iter().enumerate() {
            span.insert(&v.coords, &F2Vector::unit(named.len(), k));
        }
        if let Some(tag) = span.preimage(&class.coords) {
            return Ok(tag
                .iter_ones()
                .map(|k| named[k].1.clone())
                .collect::<Vec<_>>()
                .join("+"));
        }
        let d = class.degree;
        Ok(class
            .coords
            .iter_ones()
            .map(|i| format!("x_{{{},{},{}}}", d.s, d.t, i))
            .collect::<Vec<_>>()
            .join("+"))
    }
}

/// Split `a + b*c` into monomial strings; parentheses are not supported.
pub fn parse_expression(text: &str) -> Vec<String> {
    text.split('+')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}
