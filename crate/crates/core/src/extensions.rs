//! Hidden 2~-, η- and ν-extensions in π_{*,*}(ν tmf): claims read from a
//! fixture, their degree arithmetic, and a mechanical check of the claims
//! proved through the long exact sequence of the cofiber of τ.
//!
//! For `x ∈ π_{t,w}` with `τx = 0`, exactness of
//! Ext^{w−t−2,w−1} → π_{t,w} → π_{t,w−1} gives a lift `z_x` of `x` to Ext.
//! Multiplication by the Ext image of the multiplier commutes with the
//! boundary map, so `h·z_x = z_y` transports to `m·x = τ^k y` once both lifts
//! are pinned down. The pinning uses dimension guards: τ-kernels of dimension
//! one at both positions, and no τ-cokernel at the Ext position of `z_y`
//! (so the boundary map is injective there).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::resolution::{Bidegree, ExtClass, GeneratorSpec, Naming, Resolution};
use crate::synthetic::{SyntheticChart, SyntheticDegree, SyntheticElement, Torsion};

mod expr;

pub use expr::{Atom, Expr, Factor, Term};

/// Elements of π_{*,*}(ν S) whose products are tabulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Multiplier {
    TwoTilde,
    Eta,
    Nu,
}

impl Multiplier {
    pub const ALL: [Multiplier; 3] = [Multiplier::TwoTilde, Multiplier::Eta, Multiplier::Nu];

    /// `(stem, weight)` shift.
    pub fn degree(self) -> SyntheticDegree {
        match self {
            Multiplier::TwoTilde => SyntheticDegree::new(0, 1),
            Multiplier::Eta => SyntheticDegree::new(1, 2),
            Multiplier::Nu => SyntheticDegree::new(3, 4),
        }
    }

    /// Image in Ext under π(ν S) → π(ν S/τ).
    pub fn ext_name(self) -> &'static str {
        match self {
            Multiplier::TwoTilde => "h0",
            Multiplier::Eta => "h1",
            Multiplier::Nu => "h2",
        }
    }

    /// Spelling in the claims file.
    pub fn token(self) -> &'static str {
        match self {
            Multiplier::TwoTilde => "2",
            Multiplier::Eta => "eta",
            Multiplier::Nu => "nu",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Multiplier::ALL.into_iter().find(|m| m.token() == s)
    }
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ctau,
    Classical,
    Relation,
    Toda,
    /// The row records that there is no extension.
    None,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ctau" => Method::Ctau,
            "classical" => Method::Classical,
            "relation" => Method::Relation,
            "toda" => Method::Toda,
            "none" => Method::None,
            _ => return None,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ctau => "ctau",
            Method::Classical => "classical",
            Method::Relation => "relation",
            Method::Toda => "toda",
            Method::None => "none",
        })
    }
}

/// The element a claim says the product equals: `τ^tau · element`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClaimTarget {
    pub tau: u32,
    pub element: Expr,
    /// Detecting class, when it is not the product of the factors' classes.
    pub detected_by: Option<Expr>,
}

/// A cited fact backing a relation-method row.
#[derive(Clone, Debug, PartialEq)]
pub enum Citation {
    Relation(String),
    Extension(Multiplier, Expr),
}

impl fmt::Display for Citation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Citation::Relation(id) => write!(f, "rel:{id}"),
            Citation::Extension(m, e) => write!(f, "ext:{m}:{e}"),
        }
    }
}

/// One row of the extension tables.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenExtensionClaim {
    pub file: String,
    pub line: usize,
    pub multiplier: Multiplier,
    pub source: Expr,
    /// `(t, w)` as stated.
    pub position: SyntheticDegree,
    pub detected_by: Option<Expr>,
    /// `None` for rows that record the absence of an extension.
    pub target: Option<ClaimTarget>,
    pub method: Method,
    pub lifts: Option<(Expr, Expr)>,
    pub lift_mult: Option<Expr>,
    pub lift_source: Option<(Expr, SyntheticDegree)>,
    pub via: Vec<Citation>,
    pub chain: Vec<Expr>,
    pub times: Option<Expr>,
}

impl HiddenExtensionClaim {
    /// `eta nu1*kbar@(47,57)`.
    pub fn id(&self) -> String {
        format!("{} {}@({},{})", self.multiplier, self.source, self.position.stem, self.position.weight)
    }

    /// `claims.txt:12`.
    pub fn row(&self) -> String {
        format!("{}:{}", self.file, self.line)
    }

    /// Where the product lands.
    pub fn product_position(&self) -> SyntheticDegree {
        let m = self.multiplier.degree();
        SyntheticDegree::new(self.position.stem + m.stem, self.position.weight + m.weight)
    }
}

/// A homotopy name bound to the class detecting it.
#[derive(Clone, Debug, PartialEq)]
pub struct HomotopyName {
    pub name: String,
    pub stem: i64,
    pub filtration: i64,
    pub detected_by: Expr,
}

/// Homotopy names together with the Ext generator degrees they are built on.
#[derive(Clone, Debug)]
pub struct HomotopyNames {
    entries: BTreeMap<String, HomotopyName>,
    generators: BTreeMap<String, Bidegree>,
}

fn parse_err(file: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { file: file.to_string(), line, reason: reason.into() }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn add(a: SyntheticDegree, b: SyntheticDegree) -> SyntheticDegree {
    SyntheticDegree::new(a.stem + b.stem, a.weight + b.weight)
}

impl HomotopyNames {
    /// Parse `<name> <stem> <filtration> <detecting class>` lines; every
    /// detecting class must sit at the stated stem and filtration.
    pub fn parse(text: &str, file: &str, generators: &[GeneratorSpec]) -> Result<Self> {
        let generators: BTreeMap<String, Bidegree> =
            generators.iter().map(|g| (g.name.clone(), g.degree)).collect();
        let mut names = HomotopyNames { entries: BTreeMap::new(), generators };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(parse_err(file, line, "expected `<name> <stem> <filtration> <class>`"));
            }
            let num = |s: &str| s.parse::<i64>().map_err(|_| parse_err(file, line, format!("`{s}` is not an integer")));
            let (stem, filtration) = (num(fields[1])?, num(fields[2])?);
            let detected_by = Expr::parse(fields[3]).map_err(|e| parse_err(file, line, e))?;
            let d = names
                .ext_degree(&detected_by)
                .map_err(|e| parse_err(file, line, e.to_string()))?
                .ok_or_else(|| parse_err(file, line, "detecting class is zero"))?;
            if d.stem() != stem || i64::from(d.s) != filtration {
                return Err(parse_err(
                    file,
                    line,
                    format!("{} lies in stem {}, filtration {}, not {stem}, {filtration}", fields[3], d.stem(), d.s),
                ));
            }
            let name = fields[0].to_string();
            if name == "tau" || names.entries.contains_key(&name) {
                return Err(parse_err(file, line, format!("`{name}` is defined twice")));
            }
            names.entries.insert(name.clone(), HomotopyName { name, stem, filtration, detected_by });
        }
        Ok(names)
    }

    pub fn load(path: &Path, generators: &[GeneratorSpec]) -> Result<Self> {
        HomotopyNames::parse(&read(path)?, &file_name(path), generators)
    }

    pub fn get(&self, name: &str) -> Option<&HomotopyName> {
        self.entries.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &HomotopyName> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Bidegree of an Ext expression; `None` for `0`.
    pub fn ext_degree(&self, e: &Expr) -> Result<Option<Bidegree>> {
        let mut out: Option<Bidegree> = None;
        for term in &e.0 {
            let mut d = Bidegree::new(0, 0);
            for f in &term.0 {
                let one = match &f.atom {
                    Atom::Name(n) => *self.generators.get(n).ok_or_else(|| Error::UnknownName(n.clone()))?,
                    Atom::Group(g) => self
                        .ext_degree(g)?
                        .ok_or_else(|| Error::Contract(format!("`({g})` is zero")))?,
                    Atom::Class(c) => {
                        return Err(Error::Contract(format!("`{{{c}}}` is not an Ext expression")))
                    }
                };
                d = Bidegree::new(d.s + one.s * f.power, d.t + one.t * f.power);
            }
            match out {
                Some(o) if o != d => return Err(Error::Contract(format!("`{e}` is not homogeneous"))),
                _ => out = Some(d),
            }
        }
        Ok(out)
    }

    fn term_degree(&self, term: &Term) -> Result<(SyntheticDegree, u32)> {
        let mut d = SyntheticDegree::new(0, 0);
        let mut tau = 0;
        for f in &term.0 {
            let p = i64::from(f.power);
            let one = match &f.atom {
                Atom::Name(n) if n == "tau" => {
                    tau += f.power;
                    SyntheticDegree::new(0, -1)
                }
                Atom::Name(n) => {
                    let h = self.get(n).ok_or_else(|| Error::UnknownName(n.clone()))?;
                    SyntheticDegree::new(h.stem, h.stem + h.filtration)
                }
                Atom::Group(g) => {
                    self.degree(g)?.ok_or_else(|| Error::Contract(format!("`({g})` is zero")))?
                }
                Atom::Class(c) => SyntheticDegree::of(
                    self.ext_degree(c)?.ok_or_else(|| Error::Contract(format!("`{{{c}}}` is zero")))?,
                ),
            };
            d = SyntheticDegree::new(d.stem + one.stem * p, d.weight + one.weight * p);
        }
        Ok((d, tau))
    }

    /// Position of a homotopy expression; `None` for `0`.
    pub fn degree(&self, e: &Expr) -> Result<Option<SyntheticDegree>> {
        let mut out = None;
        for term in &e.0 {
            let (d, _) = self.term_degree(term)?;
            match out {
                Some(o) if o != d => {
                    return Err(Error::Contract(format!("`{e}` is not homogeneous: terms in {o} and {d}")))
                }
                _ => out = Some(d),
            }
        }
        Ok(out)
    }

    /// Weight of the τ-free part of the lowest-τ term: where the element is
    /// generated.
    pub fn top_weight(&self, e: &Expr) -> Result<i64> {
        let d = self.degree(e)?.ok_or_else(|| Error::Contract("0 has no weight".into()))?;
        let mut least = u32::MAX;
        for term in &e.0 {
            least = least.min(self.term_degree(term)?.1);
        }
        Ok(d.weight + i64::from(least))
    }
}

/// A named relation in π_{*,*}(ν tmf), taken as given.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub id: String,
    pub line: usize,
    pub lhs: Expr,
    pub rhs: Expr,
}

#[derive(Clone, Debug, Default)]
pub struct RelationSet {
    relations: BTreeMap<String, Relation>,
}

impl RelationSet {
    /// Parse `rel <id> <lhs> = <rhs>` lines. Both sides must sit in the same
    /// degree (a zero right-hand side matches anything).
    pub fn parse(text: &str, file: &str, names: &HomotopyNames) -> Result<Self> {
        let mut set = RelationSet::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let rest = body
                .strip_prefix("rel ")
                .ok_or_else(|| parse_err(file, line, "expected `rel <id> <lhs> = <rhs>`"))?;
            let (id, eq) = rest.trim().split_once(char::is_whitespace).ok_or_else(|| parse_err(file, line, "missing relation"))?;
            let (l, r) = eq.split_once('=').ok_or_else(|| parse_err(file, line, "missing `=`"))?;
            let parse = |s: &str| Expr::parse(&s.replace(' ', "")).map_err(|e| parse_err(file, line, e));
            let (lhs, rhs) = (parse(l)?, parse(r)?);
            let dl = names.degree(&lhs).map_err(|e| parse_err(file, line, e.to_string()))?;
            let dr = names.degree(&rhs).map_err(|e| parse_err(file, line, e.to_string()))?;
            if let (Some(a), Some(b)) = (dl, dr) {
                if a != b {
                    return Err(parse_err(file, line, format!("{id}: left side in {a}, right side in {b}")));
                }
            }
            if set.relations.contains_key(id) {
                return Err(parse_err(file, line, format!("relation `{id}` is defined twice")));
            }
            set.relations.insert(id.to_string(), Relation { id: id.to_string(), line, lhs, rhs });
        }
        Ok(set)
    }

    pub fn load(path: &Path, names: &HomotopyNames) -> Result<Self> {
        RelationSet::parse(&read(path)?, &file_name(path), names)
    }

    pub fn get(&self, id: &str) -> Option<&Relation> {
        self.relations.get(id)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

fn parse_position(s: &str) -> Option<SyntheticDegree> {
    let inner = s.strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some(SyntheticDegree::new(a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// `expr@(t,w)`.
fn parse_located(s: &str) -> std::result::Result<(Expr, SyntheticDegree), String> {
    let (e, p) = s.rsplit_once('@').ok_or_else(|| format!("`{s}` lacks `@(t,w)`"))?;
    let pos = parse_position(p).ok_or_else(|| format!("`{p}` is not a position `(t,w)`"))?;
    Ok((Expr::parse(e)?, pos))
}

fn parse_claim_line(body: &str, file: &str, line: usize) -> Result<HiddenExtensionClaim> {
    let err = |reason: String| parse_err(file, line, reason);
    let tokens: Vec<&str> = body.split_whitespace().collect();
    if tokens.len() < 5 || tokens[0] != "ext" {
        return Err(err("expected `ext <2|eta|nu> <source>@(t,w) => ...`".into()));
    }
    let multiplier =
        Multiplier::from_token(tokens[1]).ok_or_else(|| err(format!("unknown multiplier `{}`", tokens[1])))?;
    let (source, position) = parse_located(tokens[2]).map_err(&err)?;
    if tokens[3] != "=>" {
        return Err(err(format!("expected `=>`, found `{}`", tokens[3])));
    }
    let mut rest = &tokens[4..];
    let mut target = None;
    if rest[0] == "0" {
        rest = &rest[1..];
    } else {
        let k = rest[0]
            .strip_prefix("tau^")
            .and_then(|k| k.parse::<u32>().ok())
            .ok_or_else(|| err(format!("expected `tau^<k>` or `0`, found `{}`", rest[0])))?;
        let element = rest.get(1).ok_or_else(|| err("missing target".into()))?;
        target = Some(ClaimTarget { tau: k, element: Expr::parse(element).map_err(&err)?, detected_by: None });
        rest = &rest[2..];
    }
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for t in rest {
        let (k, v) = t.split_once('=').ok_or_else(|| err(format!("expected `key=value`, found `{t}`")))?;
        if fields.insert(k, v).is_some() {
            return Err(err(format!("`{k}` given twice")));
        }
    }
    let method = fields
        .remove("method")
        .ok_or_else(|| err("missing `method=`".into()))
        .and_then(|m| Method::parse(m).ok_or_else(|| err(format!("unknown method `{m}`"))))?;
    let expr = |v: &str| Expr::parse(v).map_err(&err);
    let detected_by = fields.remove("z").map(expr).transpose()?;
    if let Some(tz) = fields.remove("tz") {
        let t = target.as_mut().ok_or_else(|| err("`tz=` on a row without a target".into()))?;
        t.detected_by = Some(expr(tz)?);
    }
    let lifts = match fields.remove("lifts") {
        Some(v) => {
            let (a, b) = v.split_once(',').ok_or_else(|| err("`lifts=` needs two classes".into()))?;
            Some((expr(a)?, expr(b)?))
        }
        None => None,
    };
    let lift_mult = fields.remove("lift-mult").map(expr).transpose()?;
    let lift_source = fields.remove("lift-source").map(|v| parse_located(v).map_err(&err)).transpose()?;
    let mut via = Vec::new();
    for c in fields.remove("via").map(|v| v.split(',').collect::<Vec<_>>()).unwrap_or_default() {
        via.push(if let Some(id) = c.strip_prefix("rel:") {
            Citation::Relation(id.to_string())
        } else if let Some(e) = c.strip_prefix("ext:") {
            let (m, s) = e.split_once(':').ok_or_else(|| err(format!("bad citation `{c}`")))?;
            let m = Multiplier::from_token(m).ok_or_else(|| err(format!("unknown multiplier in `{c}`")))?;
            Citation::Extension(m, expr(s)?)
        } else {
            return Err(err(format!("citation `{c}` is neither `rel:` nor `ext:`")));
        });
    }
    let chain = match fields.remove("chain") {
        Some(v) => v.split('|').map(expr).collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let times = fields.remove("times").map(expr).transpose()?;
    if let Some(k) = fields.keys().next() {
        return Err(err(format!("unknown key `{k}`")));
    }
    if method == Method::Ctau && lifts.is_none() {
        return Err(err("method=ctau needs `lifts=`".into()));
    }
    if (method == Method::None) != target.is_none() && method != Method::Toda {
        return Err(err("a row has target 0 exactly when its method is none or toda".into()));
    }
    Ok(HiddenExtensionClaim {
        file: file.to_string(),
        line,
        multiplier,
        source,
        position,
        detected_by,
        target,
        method,
        lifts,
        lift_mult,
        lift_source,
        via,
        chain,
        times,
    })
}

/// Parse a claims file without checking degrees.
pub fn parse_claims(text: &str, file: &str) -> Result<Vec<HiddenExtensionClaim>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            out.push(parse_claim_line(body, file, i + 1)?);
        }
    }
    Ok(out)
}

/// Parse claims and reject the first row whose names do not resolve or
/// whose degrees do not add up.
pub fn ingest_claims_str(text: &str, file: &str, names: &HomotopyNames) -> Result<Vec<HiddenExtensionClaim>> {
    let claims = parse_claims(text, file)?;
    for c in &claims {
        let check = check_degrees(c, names).map_err(|e| parse_err(file, c.line, format!("{}: {e}", c.id())))?;
        if !check.passed {
            let failed: Vec<&str> = check.failures().collect();
            return Err(parse_err(file, c.line, format!("{}: {}", c.id(), failed.join("; "))));
        }
    }
    Ok(claims)
}

pub fn ingest_claims(path: &Path, names: &HomotopyNames) -> Result<Vec<HiddenExtensionClaim>> {
    ingest_claims_str(&read(path)?, &file_name(path), names)
}

/// Result of [`check_degrees`]: each arithmetic statement with its outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeCheck {
    pub passed: bool,
    pub checks: Vec<(bool, String)>,
}

impl DegreeCheck {
    fn push(&mut self, ok: bool, text: String) {
        self.passed &= ok;
        self.checks.push((ok, text));
    }

    pub fn failures(&self) -> impl Iterator<Item = &str> {
        self.checks.iter().filter(|(ok, _)| !ok).map(|(_, s)| s.as_str())
    }
}

/// Stem and weight bookkeeping of a claim. Errors only when a name does not
/// resolve.
pub fn check_degrees(claim: &HiddenExtensionClaim, names: &HomotopyNames) -> Result<DegreeCheck> {
    let mut out = DegreeCheck { passed: true, checks: Vec::new() };
    let (t, w) = (claim.position.stem, claim.position.weight);
    let src = names.degree(&claim.source)?.ok_or_else(|| Error::Contract("source is 0".into()))?;
    out.push(src == claim.position, format!("source {} lies in {src}, stated ({t}, {w})", claim.source));
    let s = w - t;
    out.push(s >= 0, format!("source filtration w - t = {s}"));
    if let Some(z) = &claim.detected_by {
        let d = names.ext_degree(z)?.ok_or_else(|| Error::Contract("z is 0".into()))?;
        let top = names.top_weight(&claim.source)?;
        out.push(
            d.stem() == t && i64::from(d.t) == top,
            format!("z = {z} in Ext^{{{},{}}} generates ({}, {}), source generated at ({t}, {top})", d.s, d.t, d.stem(), d.t),
        );
    }
    let Some(target) = &claim.target else {
        return Ok(out);
    };
    let p = claim.product_position();
    let (b, k) = (claim.multiplier.degree().weight, i64::from(target.tau));
    let td = names.degree(&target.element)?.ok_or_else(|| Error::Contract("target is 0".into()))?;
    let top = names.top_weight(&target.element)?;
    out.push(td.stem == p.stem, format!("target {} in stem {}, product in stem {}", target.element, td.stem, p.stem));
    out.push(
        td.weight - k == w + b,
        format!("target weight {} - {k} = {}, source weight {w} + {b} = {}", td.weight, td.weight - k, w + b),
    );
    if let Some(tz) = &target.detected_by {
        let d = names.ext_degree(tz)?.ok_or_else(|| Error::Contract("tz is 0".into()))?;
        out.push(
            d.stem() == td.stem && i64::from(d.t) == top,
            format!("tz = {tz} generates ({}, {}), target generated at ({}, {top})", d.stem(), d.t, td.stem),
        );
    }
    let ft = top - td.stem;
    let fs = names.top_weight(&claim.source)? - t;
    out.push(ft > fs + 1, format!("hidden: target filtration {ft} > source filtration {fs} + 1"));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Status {
    Verified,
    Refuted,
    Ambiguous,
    IngestedUnchecked,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Verified => "VERIFIED",
            Status::Refuted => "REFUTED",
            Status::Ambiguous => "AMBIGUOUS",
            Status::IngestedUnchecked => "INGESTED-UNCHECKED",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub id: String,
    pub row: String,
    pub multiplier: Multiplier,
    pub method: Method,
    pub status: Status,
    pub diagnostics: Vec<String>,
}

impl Verdict {
    fn new(claim: &HiddenExtensionClaim, status: Status, diagnostics: Vec<String>) -> Self {
        Verdict {
            id: claim.id(),
            row: claim.row(),
            multiplier: claim.multiplier,
            method: claim.method,
            status,
            diagnostics,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<18} {:<9} {} ({})", self.status.to_string(), self.method.to_string(), self.id, self.row)?;
        for d in &self.diagnostics {
            write!(f, "\n    {d}")?;
        }
        Ok(())
    }
}

/// Everything a verification reads: Ext, the chart, and the name tables.
#[derive(Clone, Copy)]
pub struct Evidence<'a> {
    pub res: &'a Resolution,
    pub naming: &'a Naming,
    pub chart: &'a SyntheticChart,
    pub names: &'a HomotopyNames,
}

impl<'a> Evidence<'a> {
    fn inside(&self, d: Bidegree) -> bool {
        self.chart.region().contains(d)
    }

    /// Value of an Ext expression. The caller keeps the degree inside the chart.
    pub fn eval_ext(&self, e: &Expr) -> Result<ExtClass> {
        let d = self.names.ext_degree(e)?.ok_or_else(|| Error::Contract("`0` has no bidegree".into()))?;
        let mut sum = ExtClass::zero(self.res, d)?;
        for term in &e.0 {
            let mut acc = self.naming.unit(self.res)?;
            for f in &term.0 {
                for _ in 0..f.power {
                    acc = match &f.atom {
                        Atom::Name(n) => {
                            let g = self.naming.generator(n).ok_or_else(|| Error::UnknownName(n.clone()))?;
                            self.res.multiply(g, &acc)?
                        }
                        Atom::Group(g) => self.res.multiply(&self.eval_ext(g)?, &acc)?,
                        Atom::Class(c) => return Err(Error::Contract(format!("`{{{c}}}` inside an Ext expression"))),
                    };
                }
            }
            sum = sum.sum(&acc)?;
        }
        Ok(sum)
    }

    /// Detecting class of a τ-free homotopy term.
    fn detecting(&self, term: &Term) -> std::result::Result<Expr, String> {
        let mut factors = Vec::new();
        for f in &term.0 {
            let atom = match &f.atom {
                Atom::Name(n) if n == "tau" => continue,
                Atom::Name(n) => Atom::Group(self.names.get(n).ok_or_else(|| format!("unknown name {n}"))?.detected_by.clone()),
                Atom::Group(g) => {
                    let mut parts = Vec::new();
                    for t in &g.0 {
                        parts.extend(self.detecting(t)?.0);
                    }
                    Atom::Group(Expr(parts))
                }
                Atom::Class(c) => Atom::Group(c.clone()),
            };
            factors.push(Factor { atom, power: f.power });
        }
        Ok(Expr(vec![Term(factors)]))
    }

    /// The element of π named by a homotopy expression, through the classes
    /// detecting its terms. `Err` carries a diagnostic.
    fn element(&self, e: &Expr, tz: Option<&Expr>) -> Result<std::result::Result<SyntheticElement, String>> {
        let deg = self.names.degree(e)?.ok_or_else(|| Error::Contract("`0` names no element".into()))?;
        let pieces: Vec<(Expr, i64)> = match tz {
            Some(z) => vec![(z.clone(), self.names.top_weight(e)? - deg.weight)],
            None => {
                let mut v = Vec::new();
                for term in &e.0 {
                    let (_, tau) = self.names.term_degree(term)?;
                    match self.detecting(term) {
                        Ok(z) => v.push((z, i64::from(tau))),
                        Err(m) => return Ok(Err(m)),
                    }
                }
                v
            }
        };
        let mut terms = BTreeSet::new();
        for (z, tau) in pieces {
            let class = self.eval_ext(&z)?;
            if class.is_zero() {
                return Ok(Err(format!("{} is zero in Ext^{{{},{}}}", z, class.degree.s, class.degree.t)));
            }
            let Some(x) = self.chart.detect(&class)? else {
                return Ok(Err(format!("{z} is not a permanent cycle")));
            };
            let x = self.chart.tau_multiply(&x, tau as u32)?;
            if x.degree != deg {
                return Ok(Err(format!("{z} times tau^{tau} lies in {}, not {deg}", x.degree)));
            }
            terms = terms.symmetric_difference(&x.terms).copied().collect();
        }
        Ok(Ok(SyntheticElement { degree: deg, terms }))
    }
}

/// Ext position `Ext^{w−t−2, w−1}` of the lifts of elements of π_{t,w}.
fn lift_degree(p: SyntheticDegree) -> Option<Bidegree> {
    let s = p.weight - p.stem - 2;
    (s >= 0 && p.weight >= 1).then(|| Bidegree::new(s as u32, (p.weight - 1) as u32))
}

/// Check a ctau claim with its named lifts.
pub fn verify_ctau(claim: &HiddenExtensionClaim, ev: &Evidence<'_>) -> Result<Verdict> {
    let (zx, zy) = claim
        .lifts
        .as_ref()
        .ok_or_else(|| Error::Contract(format!("{}: no lifts given", claim.id())))?;
    let square = match Square::new(claim, ev)? {
        Ok(sq) => sq,
        Err(v) => return Ok(v),
    };
    let (dx, dy) = (ev.names.ext_degree(zx)?, ev.names.ext_degree(zy)?);
    let mut diag = Vec::new();
    let mut refuted = false;
    for (name, e, d, want) in [("z_x", zx, dx, square.zx), ("z_y", zy, dy, square.zy)] {
        if d != Some(want) {
            let at = d.map_or("0".to_string(), |d| format!("Ext^{{{},{}}}", d.s, d.t));
            diag.push(format!("(2) {name} = {e} lies in {at}, expected Ext^{{{},{}}}", want.s, want.t));
            refuted = true;
        }
    }
    if refuted {
        return Ok(Verdict::new(claim, Status::Refuted, diag));
    }
    let (x, y) = (ev.eval_ext(zx)?, ev.eval_ext(zy)?);
    Ok(square.judge(claim, ev, &x, &y, (zx.to_string(), zy.to_string())))
}

/// Check a ctau claim with explicit lift classes in place of the named ones.
pub fn verify_ctau_with(claim: &HiddenExtensionClaim, ev: &Evidence<'_>, zx: &ExtClass, zy: &ExtClass) -> Result<Verdict> {
    let square = match Square::new(claim, ev)? {
        Ok(sq) => sq,
        Err(v) => return Ok(v),
    };
    if zx.degree != square.zx || zy.degree != square.zy {
        let diag = vec![format!(
            "(2) lifts lie in Ext^{{{},{}}} and Ext^{{{},{}}}, expected Ext^{{{},{}}} and Ext^{{{},{}}}",
            zx.degree.s, zx.degree.t, zy.degree.s, zy.degree.t, square.zx.s, square.zx.t, square.zy.s, square.zy.t
        )];
        return Ok(Verdict::new(claim, Status::Refuted, diag));
    }
    let names = (ev.naming_describe(zx)?, ev.naming_describe(zy)?);
    Ok(square.judge(claim, ev, zx, zy, names))
}

impl Evidence<'_> {
    fn naming_describe(&self, x: &ExtClass) -> Result<String> {
        self.naming.describe(self.res, x)
    }
}

/// The commuting square behind a ctau claim.
struct Square {
    /// Element lifted on the left, and its position.
    left: Expr,
    at_x: SyntheticDegree,
    at_y: SyntheticDegree,
    mult: ExtClass,
    mult_name: String,
    zx: Bidegree,
    zy: Bidegree,
}

impl Square {
    fn new(claim: &HiddenExtensionClaim, ev: &Evidence<'_>) -> Result<std::result::Result<Square, Verdict>> {
        if claim.method != Method::Ctau {
            return Err(Error::Contract(format!("{} is not a ctau row", claim.id())));
        }
        if claim.target.is_none() {
            return Err(Error::Contract(format!("{} has no target", claim.id())));
        }
        let (left, at_x) = claim.lift_source.clone().unwrap_or((claim.source.clone(), claim.position));
        let mult_expr = claim.lift_mult.clone().unwrap_or_else(|| Expr::name(claim.multiplier.ext_name()));
        let md = ev.names.ext_degree(&mult_expr)?.ok_or_else(|| Error::Contract("multiplier is 0".into()))?;
        let at_y = add(at_x, SyntheticDegree::of(md));
        if at_y != claim.product_position() {
            return Ok(Err(Verdict::new(
                claim,
                Status::Refuted,
                vec![format!("{mult_expr} moves {at_x} to {at_y}, but the product lies in {}", claim.product_position())],
            )));
        }
        let (Some(zx), Some(zy)) = (lift_degree(at_x), lift_degree(at_y)) else {
            return Ok(Err(Verdict::new(claim, Status::Refuted, vec!["(2) no Ext position for the lifts".into()])));
        };
        // τ-kernels at a position come from summands generated at most
        // `longest - 1` weights higher in the same stem.
        let longest = ev
            .chart
            .summands()
            .iter()
            .filter_map(|m| match m.torsion {
                Torsion::Tau(k) => Some(i64::from(k)),
                Torsion::Free => None,
            })
            .max()
            .unwrap_or(1);
        let at = |stem: i64, weight: i64| Bidegree::new((weight - stem).max(0) as u32, weight.max(0) as u32);
        let target = claim.target.as_ref().expect("checked above");
        let mut needed = vec![
            zx,
            zy,
            at(at_x.stem, at_x.weight + longest - 1),
            at(at_y.stem, at_y.weight + longest - 1),
            at(at_x.stem, ev.names.top_weight(&left)?),
        ];
        if target.detected_by.is_none() {
            needed.push(at(at_y.stem, ev.names.top_weight(&target.element)?));
        }
        let outside = needed
            .into_iter()
            .find(|&d| !ev.inside(d))
            .map(|d| format!("needs Ext^{{{},{}}}, outside the computed region", d.s, d.t));
        if let Some(why) = outside {
            return Ok(Err(Verdict::new(claim, Status::IngestedUnchecked, vec![why])));
        }
        let mult = ev.eval_ext(&mult_expr)?;
        Ok(Ok(Square { left, at_x, at_y, mult, mult_name: mult_expr.to_string(), zx, zy }))
    }

    fn judge(
        &self,
        claim: &HiddenExtensionClaim,
        ev: &Evidence<'_>,
        x: &ExtClass,
        y: &ExtClass,
        names: (String, String),
    ) -> Verdict {
        match self.conditions(claim, ev, x, y, names) {
            Ok(v) => v,
            Err(e) => Verdict::new(claim, Status::Ambiguous, vec![format!("could not evaluate: {e}")]),
        }
    }

    fn conditions(
        &self,
        claim: &HiddenExtensionClaim,
        ev: &Evidence<'_>,
        x: &ExtClass,
        y: &ExtClass,
        (nx, ny): (String, String),
    ) -> Result<Verdict> {
        let target = claim.target.as_ref().expect("checked in Square::new");
        let chart = ev.chart;
        let mut diag = Vec::new();
        let mut refuted = false;
        let mut ambiguous = false;

        // (2) nonzero lifts, and nonzero modulo the kernel of the boundary
        // map, which is the span of the permanent cycles (the image of
        // reduction mod τ).
        for (name, c) in [(&nx, x), (&ny, y)] {
            let text = if c.is_zero() {
                "zero"
            } else if chart.detect(c)?.is_some() {
                "a permanent cycle, so its boundary is zero"
            } else {
                "nonzero"
            };
            refuted |= text != "nonzero";
            diag.push(format!("(2) {name} in Ext^{{{},{}}} is {text}", c.degree.s, c.degree.t));
        }
        // (3) the Ext product, up to permanent cycles at the position of z_y.
        let prod = ev.res.multiply(&self.mult, x)?;
        let diff = prod.sum(y)?;
        let exact = diff.is_zero();
        let ok = exact || chart.detect(&diff)?.is_some();
        refuted |= !ok;
        let got = ev.naming_describe(&prod)?;
        let rel = match (exact, ok) {
            (true, _) => "equals",
            (false, true) => "differs by a permanent cycle from",
            (false, false) => "differs from",
        };
        diag.push(format!("(3) {} * {nx} = {got}, {rel} {ny}", self.mult_name));

        // (1) τ-torsion of both ends.
        match ev.element(&self.left, None)? {
            Err(m) => {
                ambiguous = true;
                diag.push(format!("(1) cannot place {}: {m}", self.left));
            }
            Ok(e) if e.is_zero() => {
                refuted = true;
                diag.push(format!("(1) {} is zero in the chart", self.left));
            }
            Ok(e) => {
                let ok = chart.tau_multiply(&e, 1)?.is_zero();
                ambiguous |= !ok;
                diag.push(format!("(1) tau * {} {} zero", self.left, if ok { "is" } else { "is not" }));
            }
        }
        match ev.element(&target.element, target.detected_by.as_ref())? {
            Err(m) => {
                ambiguous = true;
                diag.push(format!("(1) cannot place {}: {m}", target.element));
            }
            Ok(t) => {
                let tk = chart.tau_multiply(&t, target.tau)?;
                if tk.is_zero() {
                    refuted = true;
                    diag.push(format!("(1) tau^{} * {} is zero in the chart", target.tau, target.element));
                } else {
                    let ok = chart.tau_multiply(&tk, 1)?.is_zero();
                    ambiguous |= !ok;
                    diag.push(format!(
                        "(1) tau^{} * {} {} zero",
                        target.tau + 1,
                        target.element,
                        if ok { "is" } else { "is not" }
                    ));
                }
            }
        }

        // (4) guards.
        let kx = chart.tau_kernel_dim(self.at_x.stem, self.at_x.weight);
        let ky = chart.tau_kernel_dim(self.at_y.stem, self.at_y.weight);
        for (what, v) in [(self.at_x, kx), (self.at_y, ky)] {
            let ok = v == 1;
            ambiguous |= !ok;
            diag.push(format!("(4) dim ker tau at {what} = {v}{}", if ok { "" } else { " (guard fails)" }));
        }
        // A nonzero cokernel is the kernel of the boundary map; (2) and (3)
        // already work modulo it, so it is reported rather than required to vanish.
        let cy = chart.tau_cokernel_dim(self.zy.stem(), i64::from(self.zy.t));
        diag.push(format!(
            "(4) dim coker tau at ({}, {}) = {cy}{}",
            self.zy.stem(),
            self.zy.t,
            if cy == 0 { ", boundary injective" } else { ", boundary injective modulo permanent cycles" }
        ));

        let status = if refuted {
            Status::Refuted
        } else if ambiguous {
            Status::Ambiguous
        } else {
            Status::Verified
        };
        Ok(Verdict::new(claim, status, diag))
    }
}

/// Check the citations and the degree arithmetic of a relation-method row.
pub fn verify_relation(
    claim: &HiddenExtensionClaim,
    names: &HomotopyNames,
    relations: &RelationSet,
    claims: &[HiddenExtensionClaim],
) -> Result<Verdict> {
    if claim.method != Method::Relation {
        return Err(Error::Contract(format!("{} is not a relation row", claim.id())));
    }
    let mut diag = Vec::new();
    let mut missing = Vec::new();
    for c in &claim.via {
        let found = match c {
            Citation::Relation(id) => relations.get(id).is_some(),
            Citation::Extension(m, src) => claims.iter().any(|o| o.multiplier == *m && o.source == *src),
        };
        if found {
            diag.push(format!("cites {c}"));
        } else {
            missing.push(c.to_string());
        }
    }
    let shift = match &claim.times {
        Some(t) => names.degree(t)?.ok_or_else(|| Error::Contract("times=0".into()))?,
        None => SyntheticDegree::new(0, 0),
    };
    let want = add(claim.product_position(), shift);
    let mut broken = false;
    if claim.chain.is_empty() {
        missing.push("no chain of equalities".into());
    }
    for (i, step) in claim.chain.iter().enumerate() {
        match names.degree(step)? {
            Some(d) if d == want => diag.push(format!("step {} {step} in {d}", i + 1)),
            Some(d) => {
                broken = true;
                diag.push(format!("step {} {step} lies in {d}, expected {want}", i + 1));
            }
            None => {
                broken = true;
                diag.push(format!("step {} is 0", i + 1));
            }
        }
    }
    if let Some(t) = &claim.times {
        diag.push(format!("chain proves the claim times {t}; cancelling {t} is taken as given"));
    }
    let status = if broken {
        Status::Refuted
    } else if !missing.is_empty() {
        diag.push(format!("gap: {}", missing.join(", ")));
        Status::Ambiguous
    } else {
        diag.push("cited relations are taken as given".into());
        Status::Verified
    };
    Ok(Verdict::new(claim, status, diag))
}

/// One verdict per claim, in order.
pub fn verify_all(
    claims: &[HiddenExtensionClaim],
    ev: &Evidence<'_>,
    relations: &RelationSet,
) -> Result<Vec<Verdict>> {
    claims
        .par_iter()
        .map(|c| match c.method {
            Method::Ctau => verify_ctau(c, ev),
            Method::Relation => verify_relation(c, ev.names, relations, claims),
            Method::Classical | Method::Toda | Method::None => {
                let why = match c.method {
                    Method::Classical => "classical extension, degrees checked only",
                    Method::Toda => "Toda bracket argument, degrees checked only",
                    _ => "no extension, degrees checked only",
                };
                Ok(Verdict::new(c, Status::IngestedUnchecked, vec![why.into()]))
            }
        })
        .collect()
}

/// Counts and the full verdict list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub rows: usize,
    pub per_multiplier: BTreeMap<String, usize>,
    pub per_status: BTreeMap<String, usize>,
    /// Every claim has exactly one verdict, in order.
    pub conserved: bool,
    pub refuted: Vec<String>,
    pub scope: String,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn count(&self, s: Status) -> usize {
        self.per_status.get(&s.to_string()).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn report(claims: &[HiddenExtensionClaim], verdicts: &[Verdict]) -> Report {
    let mut per_multiplier = BTreeMap::new();
    for c in claims {
        *per_multiplier.entry(c.multiplier.to_string()).or_insert(0) += 1;
    }
    let mut per_status: BTreeMap<String, usize> =
        [Status::Verified, Status::Refuted, Status::Ambiguous, Status::IngestedUnchecked]
            .iter()
            .map(|s| (s.to_string(), 0))
            .collect();
    for v in verdicts {
        *per_status.get_mut(&v.status.to_string()).unwrap() += 1;
    }
    let ids: BTreeSet<String> = claims.iter().map(|c| format!("{} {}", c.row(), c.id())).collect();
    let conserved = claims.len() == verdicts.len()
        && ids.len() == claims.len()
        && claims.iter().zip(verdicts).all(|(c, v)| c.id() == v.id && c.row() == v.row);
    Report {
        rows: claims.len(),
        per_multiplier,
        per_status,
        conserved,
        refuted: verdicts.iter().filter(|v| v.status == Status::Refuted).map(|v| v.id.clone()).collect(),
        scope: "products with B are not listed".into(),
        verdicts: verdicts.to_vec(),
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} rows ({})", self.rows, self.conserved.then_some("each verdict once").unwrap_or("ROW MISMATCH"))?;
        let per: Vec<String> = self.per_multiplier.iter().map(|(m, n)| format!("{m}: {n}")).collect();
        writeln!(f, "  by multiplier: {}", per.join(", "))?;
        for (s, n) in &self.per_status {
            writeln!(f, "  {s:<18} {n}")?;
        }
        writeln!(f, "  scope: {}", self.scope)?;
        for r in &self.refuted {
            writeln!(f, "  release blocker: REFUTED {r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
