//! Text and SVG forms of the synthetic chart.
//!
//! The summand file lists one cyclic summand per line as
//! `stem s weight_top torsion name`, after a header recording the trusted
//! region and the state of each stem's top row. SVG charts put the stem on
//! the x-axis and the filtration `s = w − stem` of each generator on the
//! y-axis, coloured by τ-torsion, with hidden extensions drawn between the
//! generators of source and target.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::Path;

use crate::error::{Error, Result};
use crate::extensions::{HiddenExtensionClaim, HomotopyNames, Method, Multiplier, Status, Verdict};
use crate::resolution::Bidegree;
use crate::synthetic::{ChartRegion, Edge, SyntheticChart, TauSummand, Torsion};

const HEADER: &str = "# synss summands v1";

fn parse_err(file: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { file: file.to_string(), line, reason: reason.into() }
}

/// Text form of the summands whose stem lies in `stems`.
pub fn emit_summands(chart: &SyntheticChart, stems: RangeInclusive<i64>) -> String {
    let region = chart.region();
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "# stem s weight_top torsion name").unwrap();
    writeln!(out, "region {} {}", region.s_valid, region.t_valid).unwrap();
    for (stem, edge) in region.edges.range(stems.clone()) {
        writeln!(out, "edge {stem} {edge}").unwrap();
    }
    for s in chart.summands().iter().filter(|s| stems.contains(&s.ext.stem())) {
        writeln!(out, "{} {} {} {} {}", s.ext.stem(), s.ext.s, s.ext.t, s.torsion, s.name).unwrap();
    }
    out
}

pub fn write_summands(chart: &SyntheticChart, stems: RangeInclusive<i64>, path: &Path) -> Result<()> {
    std::fs::write(path, emit_summands(chart, stems)).map_err(|e| Error::io(path, e))
}

fn parse_torsion(s: &str) -> Option<Torsion> {
    match s {
        "free" => Some(Torsion::Free),
        "1" => Some(Torsion::Tau(1)),
        "2" => Some(Torsion::Tau(2)),
        "3" => Some(Torsion::Tau(3)),
        _ => None,
    }
}

/// Read a summand file. Charts read this way carry no detecting classes.
pub fn parse_summands(text: &str, file: &str) -> Result<SyntheticChart> {
    let mut region: Option<ChartRegion> = None;
    let mut summands = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let int = |s: &str| s.parse::<i64>().map_err(|_| parse_err(file, line, format!("`{s}` is not an integer")));
        match fields[0] {
            "region" => {
                if fields.len() != 3 || region.is_some() {
                    return Err(parse_err(file, line, "expected one `region <s_valid> <t_valid>`"));
                }
                let (s, t) = (int(fields[1])?, int(fields[2])?);
                if s < 0 || t < 0 {
                    return Err(parse_err(file, line, "negative region bound"));
                }
                region = Some(ChartRegion { s_valid: s as u32, t_valid: t as u32, edges: BTreeMap::new() });
            }
            "edge" => {
                let r = region.as_mut().ok_or_else(|| parse_err(file, line, "`edge` before `region`"))?;
                if fields.len() != 3 {
                    return Err(parse_err(file, line, "expected `edge <stem> <empty|tower|unknown>`"));
                }
                let edge = match fields[2] {
                    "empty" => Edge::Empty,
                    "tower" => Edge::FreeTower,
                    "unknown" => Edge::Unknown,
                    e => return Err(parse_err(file, line, format!("unknown edge `{e}`"))),
                };
                if r.edges.insert(int(fields[1])?, edge).is_some() {
                    return Err(parse_err(file, line, format!("stem {} has two edges", fields[1])));
                }
            }
            _ => {
                if region.is_none() {
                    return Err(parse_err(file, line, "summand before `region`"));
                }
                if fields.len() < 5 {
                    return Err(parse_err(file, line, "expected `stem s weight_top torsion name`"));
                }
                let (stem, s, w) = (int(fields[0])?, int(fields[1])?, int(fields[2])?);
                if s < 0 || stem < 0 || w != stem + s {
                    return Err(parse_err(file, line, format!("weight {w} is not stem {stem} + filtration {s}")));
                }
                let torsion = parse_torsion(fields[3])
                    .ok_or_else(|| parse_err(file, line, format!("torsion `{}` is not free, 1, 2 or 3", fields[3])))?;
                summands.push(TauSummand {
                    name: fields[4..].join(" "),
                    ext: Bidegree::new(s as u32, w as u32),
                    torsion,
                });
            }
        }
    }
    let region = region.ok_or_else(|| parse_err(file, 0, "no `region` line"))?;
    Ok(SyntheticChart::from_parts(summands, region))
}

pub fn load_summands(path: &Path) -> Result<SyntheticChart> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    parse_summands(&text, &file)
}

/// Colours and geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartStyle {
    pub free: String,
    /// Indexed by τ-torsion exponent minus one.
    pub torsion: [String; 3],
    pub extension: String,
    /// Dash pattern for ν-extensions.
    pub nu_dash: String,
    /// Pixels per stem and per filtration.
    pub unit: f64,
    pub dot_radius: f64,
    /// Label every dot rather than only extension sources.
    pub label_all: bool,
}

impl Default for ChartStyle {
    fn default() -> Self {
        ChartStyle {
            free: "black".into(),
            torsion: ["red".into(), "blue".into(), "green".into()],
            extension: "orange".into(),
            nu_dash: "5 3".into(),
            unit: 24.0,
            dot_radius: 3.0,
            label_all: false,
        }
    }
}

impl ChartStyle {
    pub fn color(&self, t: Torsion) -> Result<&str> {
        match t {
            Torsion::Free => Ok(&self.free),
            Torsion::Tau(k @ 1..=3) => Ok(&self.torsion[k as usize - 1]),
            Torsion::Tau(k) => Err(Error::Contract(format!("no colour for tau^{k}-torsion"))),
        }
    }
}

/// A hidden extension placed on the chart: from the generator of the source
/// to the generator of the target, `tau` recording which τ-multiple is hit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionMark {
    pub multiplier: Multiplier,
    /// `(stem, filtration)` of the generators.
    pub source: (i64, i64),
    pub target: (i64, i64),
    pub tau: u32,
    pub label: String,
}

/// Marks for the claims worth drawing: every row with a target that was
/// verified or is a classical extension.
pub fn extension_marks(
    claims: &[HiddenExtensionClaim],
    verdicts: &[Verdict],
    names: &HomotopyNames,
) -> Result<Vec<ExtensionMark>> {
    let mut out = Vec::new();
    for (c, v) in claims.iter().zip(verdicts) {
        let Some(t) = &c.target else { continue };
        if v.status != Status::Verified && c.method != Method::Classical {
            continue;
        }
        let src_top = names.top_weight(&c.source)?;
        let tstem = c.product_position().stem;
        let tgt_top = match &t.detected_by {
            Some(z) => names.ext_degree(z)?.map_or(0, |d| i64::from(d.t)),
            None => names.top_weight(&t.element)?,
        };
        out.push(ExtensionMark {
            multiplier: c.multiplier,
            source: (c.position.stem, src_top - c.position.stem),
            target: (tstem, tgt_top - tstem),
            tau: t.tau,
            label: c.source.to_string(),
        });
    }
    Ok(out)
}

/// Stem windows `[a, a + width]` covering `0..=stem_max`.
pub fn windows(stem_max: i64, width: i64) -> Vec<RangeInclusive<i64>> {
    let width = width.max(1);
    let mut out = Vec::new();
    let mut a = 0;
    loop {
        out.push(a..=a + width);
        a += width;
        if a >= stem_max {
            return out;
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// SVG chart of the stems in `stems`. Byte-identical for identical inputs.
pub fn emit_chart_svg(
    chart: &SyntheticChart,
    marks: &[ExtensionMark],
    stems: RangeInclusive<i64>,
    style: &ChartStyle,
) -> Result<String> {
    let (a, b) = (*stems.start(), *stems.end());
    if a < 0 || b < a || b > i64::from(chart.region().t_valid) {
        return Err(Error::Region(format!(
            "stems {a}..{b} are not inside the chart's range (t <= {})",
            chart.region().t_valid
        )));
    }
    let mut groups: BTreeMap<(i64, i64), Vec<&TauSummand>> = BTreeMap::new();
    for s in chart.summands().iter().filter(|s| stems.contains(&s.ext.stem())) {
        groups.entry((s.ext.stem(), i64::from(s.ext.s))).or_default().push(s);
    }
    for g in groups.values_mut() {
        g.sort_by(|x, y| (x.torsion, &x.name).cmp(&(y.torsion, &y.name)));
    }
    let marks: Vec<&ExtensionMark> =
        marks.iter().filter(|m| stems.contains(&m.source.0) && stems.contains(&m.target.0)).collect();
    let s_top = groups
        .keys()
        .map(|k| k.1)
        .chain(marks.iter().flat_map(|m| [m.source.1, m.target.1]))
        .max()
        .unwrap_or(0)
        .max(4)
        + 1;

    let u = style.unit;
    let (left, bottom, top, right) = (3.0 * u, 2.0 * u, u, u);
    let width = left + (b - a) as f64 * u + right;
    let height = top + s_top as f64 * u + bottom;
    let x_of = |stem: i64| left + (stem - a) as f64 * u;
    let y_of = |s: i64| top + (s_top - s) as f64 * u;
    let spread = |n: usize, i: usize| {
        let step = (u / 4.0).min(u * 0.8 / n.max(1) as f64);
        (i as f64 - (n as f64 - 1.0) / 2.0) * step
    };
    // Where each dot is drawn, for anchoring extension lines and labels.
    let mut at: BTreeMap<(i64, i64), (f64, f64)> = BTreeMap::new();
    let mut labelled = std::collections::BTreeSet::new();

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    // Axes, with ticks every 4 stems and every 2 filtrations.
    writeln!(svg, r##"<g class="axes" stroke="#888" stroke-width="0.5" font-family="sans-serif" font-size="10">"##).unwrap();
    let (x0, x1, y0, y1) = (x_of(a), x_of(b), y_of(0), y_of(s_top));
    writeln!(svg, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}"/>"#).unwrap();
    writeln!(svg, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}"/>"#).unwrap();
    for stem in (a..=b).filter(|t| t % 4 == 0) {
        let x = x_of(stem);
        writeln!(svg, r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{y1:.1}" stroke-opacity="0.3"/>"#).unwrap();
        writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" stroke="none">{stem}</text>"#, y0 + u * 0.8)
            .unwrap();
    }
    for s in (0..=s_top).filter(|s| s % 2 == 0) {
        let y = y_of(s);
        writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" stroke="none">{s}</text>"#, x0 - u * 0.4, y + 3.0)
            .unwrap();
    }
    writeln!(svg, "</g>").unwrap();

    writeln!(svg, r#"<g class="dots">"#).unwrap();
    for (&(stem, s), g) in &groups {
        for (i, m) in g.iter().enumerate() {
            let (x, y) = (x_of(stem) + spread(g.len(), i), y_of(s));
            at.entry((stem, s)).or_insert((x, y));
            writeln!(
                svg,
                r#"<circle class="dot" data-stem="{stem}" data-s="{s}" data-torsion="{}" cx="{x:.1}" cy="{y:.1}" r="{:.1}" fill="{}"><title>{}</title></circle>"#,
                m.torsion,
                style.dot_radius,
                style.color(m.torsion)?,
                esc(&m.name)
            )
            .unwrap();
            if style.label_all {
                writeln!(
                    svg,
                    r#"<text class="label" x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="7">{}</text>"#,
                    x + 4.0,
                    y - 4.0,
                    esc(&m.name)
                )
                .unwrap();
            }
        }
    }
    writeln!(svg, "</g>").unwrap();

    writeln!(
        svg,
        r#"<g class="extensions" fill="none" stroke="{}" stroke-width="1.2" font-family="sans-serif" font-size="8">"#,
        style.extension
    )
    .unwrap();
    for m in &marks {
        let anchor = |p: (i64, i64)| at.get(&p).copied().unwrap_or((x_of(p.0), y_of(p.1)));
        let (sx, sy) = anchor(m.source);
        let (tx, ty) = anchor(m.target);
        // Control point: a fixed fraction of the chord off its midpoint.
        let (mx, my) = ((sx + tx) / 2.0, (sy + ty) / 2.0);
        let (cx, cy) = (mx - 0.25 * (ty - sy), my + 0.25 * (tx - sx));
        let dash = match m.multiplier {
            Multiplier::Nu => format!(r#" stroke-dasharray="{}""#, style.nu_dash),
            _ => String::new(),
        };
        writeln!(
            svg,
            r#"<path class="extension" data-multiplier="{}" d="M {sx:.1} {sy:.1} Q {cx:.1} {cy:.1} {tx:.1} {ty:.1}"{dash}/>"#,
            m.multiplier
        )
        .unwrap();
        if m.tau > 0 {
            writeln!(
                svg,
                r#"<text class="tau" x="{:.1}" y="{:.1}" fill="{}" stroke="none">τ<tspan baseline-shift="super" font-size="6">{}</tspan></text>"#,
                tx + 4.0,
                ty + 10.0,
                style.extension,
                m.tau
            )
            .unwrap();
        }
        if !style.label_all && labelled.insert(m.source) {
            writeln!(
                svg,
                r#"<text class="label" x="{:.1}" y="{:.1}" fill="black" stroke="none" font-size="7">{}</text>"#,
                sx + 4.0,
                sy - 4.0,
                esc(&m.label)
            )
            .unwrap();
        }
    }
    writeln!(svg, "</g>").unwrap();
    writeln!(svg, "</svg>").unwrap();
    Ok(svg)
}
