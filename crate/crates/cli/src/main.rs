//! `synss`: resolve Ext, run the spectral sequence, build the synthetic chart,
//! check the hidden-extension tables and draw the charts.
//!
//! Exit status: 0 on success, 1 when verification refutes a claim, 2 on any
//! other error.

mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use synss::chartio::{self, ChartStyle};
use synss::extensions::{self, Evidence, HomotopyNames, RelationSet, Status};
use synss::resolution::{indecomposables, name_generators, GeneratorSpec};
use synss::specseq::{load_seeds, SpectralSequence};
use synss::synthetic::{les_sweep, synthesize, SyntheticChart};
use synss::{Bidegree, Naming, Resolution};

use config::{Flags, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "synss", version, about = "Ext over A(2), the Adams spectral sequence for tmf and its synthetic chart")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Compute (or extend) the minimal resolution and report the generators.
    Resolve,
    /// Run d2, d3, d4 from the seeds and write the synthetic chart.
    Synthesize,
    /// Check every hidden-extension claim and write the verdict report.
    Verify,
    /// Draw the chart as SVG, one file per stem window.
    Chart,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = RunConfig::resolve(&cli.flags)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    match cli.command {
        Command::Resolve => resolve(&cfg),
        Command::Synthesize => synthesize_cmd(&cfg),
        Command::Verify => verify(&cfg),
        Command::Chart => chart(&cfg),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// The resolution through the configured range. A checkpoint that covers it
/// is used as is (restricted in memory if larger); otherwise it is extended
/// and saved back.
fn load_resolution(cfg: &RunConfig) -> Result<Resolution> {
    let (s, t) = (cfg.s_max, cfg.t_max);
    let path = &cfg.checkpoint;
    let mut res = if path.exists() {
        Resolution::load_checkpoint(path)?
    } else {
        Resolution::new()
    };
    let (old_s, old_t) = (res.s_max(), res.t_max());
    if !res.is_empty() && old_s >= s && old_t >= t {
        if (old_s, old_t) == (s, t) {
            println!("checkpoint {}: up to date (s <= {s}, t <= {t})", path.display());
            return Ok(res);
        }
        println!(
            "checkpoint {}: using s <= {s}, t <= {t} of s <= {old_s}, t <= {old_t}",
            path.display()
        );
        return Ok(res.restricted(s, t)?);
    }
    let was_empty = res.is_empty();
    res.extend(s, t)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    res.save_checkpoint(path)?;
    if was_empty {
        println!("checkpoint {}: computed s <= {s}, t <= {t}", path.display());
    } else {
        println!(
            "checkpoint {}: extended from s <= {old_s}, t <= {old_t} to s <= {}, t <= {}",
            path.display(),
            res.s_max(),
            res.t_max()
        );
    }
    if (res.s_max(), res.t_max()) != (s, t) {
        return Ok(res.restricted(s, t)?);
    }
    Ok(res)
}

fn resolve(cfg: &RunConfig) -> Result<ExitCode> {
    let res = load_resolution(cfg)?;

    let mut dims = String::from("# s t stem dim\n");
    let mut total = 0;
    let nonzero = res.nonzero_bidegrees();
    for d in &nonzero {
        let n = res.ext_dim(*d)?;
        total += n;
        writeln!(dims, "{} {} {} {n}", d.s, d.t, d.stem())?;
    }
    let dims_path = cfg.out.join("ext_dims.txt");
    write(&dims_path, &dims)?;
    println!(
        "Ext: {} nonzero bidegrees, total dimension {total} (table in {})",
        nonzero.len(),
        dims_path.display()
    );

    // Indecomposables are searched in a region where every stem is complete.
    let s_scan = cfg.s_max.min(10);
    let stem_scan = (cfg.t_max - s_scan).min(48);
    let found = indecomposables(&res, s_scan, stem_scan)?;
    let mut by_degree: BTreeMap<Bidegree, usize> = BTreeMap::new();
    for c in &found {
        *by_degree.entry(c.degree).or_default() += 1;
    }
    let specs = GeneratorSpec::defaults();
    let mut named = 0;
    let mut mismatches = 0;
    println!("indecomposables in s <= {s_scan}, stem <= {stem_scan}:");
    println!("{:<8} {:>3} {:>4} {:>5}  status", "name", "s", "t", "stem");
    for sp in &specs {
        let d = sp.degree;
        let status = if d.s > s_scan || d.stem() > i64::from(stem_scan) {
            "outside range".to_string()
        } else if res.ext_dim(d)? == 0 {
            mismatches += 1;
            "MISMATCH: Ext is zero".to_string()
        } else {
            match by_degree.get(&d).copied().unwrap_or(0) {
                1 => {
                    named += 1;
                    "ok".to_string()
                }
                n => {
                    mismatches += 1;
                    format!("MISMATCH: {n} indecomposables")
                }
            }
        };
        println!("{:<8} {:>3} {:>4} {:>5}  {status}", sp.name, d.s, d.t, d.stem());
    }
    for d in by_degree.keys().filter(|d| !specs.iter().any(|sp| sp.degree == **d)) {
        mismatches += 1;
        println!("MISMATCH: unexpected indecomposable at {d}");
    }
    println!("{named} named generators, {mismatches} mismatches");
    if mismatches > 0 {
        bail!("{mismatches} generator mismatches");
    }
    Ok(ExitCode::SUCCESS)
}

fn pages<'a>(cfg: &RunConfig, res: &'a Resolution, naming: &'a Naming) -> Result<SpectralSequence<'a>> {
    let seeds = load_seeds(&cfg.seeds)?;
    SpectralSequence::run(res, naming, &seeds).context("running the spectral sequence")
}

fn naming(res: &Resolution) -> Result<Naming> {
    name_generators(res, &GeneratorSpec::defaults()).context("naming the generators (the range must reach s = 8, t = 56)")
}

fn synthesize_cmd(cfg: &RunConfig) -> Result<ExitCode> {
    let res = load_resolution(cfg)?;
    let naming = naming(&res)?;
    let ss = pages(cfg, &res, &naming)?;
    let chart = synthesize(&ss)?;
    let region = chart.region();

    let mut log = String::new();
    for line in ss.log_lines() {
        writeln!(log, "{line}")?;
    }
    let log_path = cfg.out.join("differentials.txt");
    write(&log_path, &log)?;

    let summands_path = cfg.out.join("summands.txt");
    chartio::write_summands(&chart, 0..=i64::from(region.t_valid), &summands_path)?;

    let sweep = les_sweep(&chart, &res, i64::from(region.t_valid));
    let mut text = String::from("# stem weight ext coker ker result\n");
    let mut failed = Vec::new();
    for r in &sweep {
        let ok = r.passed();
        writeln!(text, "{} {} {} {} {} {}", r.stem, r.weight, r.ext, r.coker, r.ker, if ok { "pass" } else { "FAIL" })?;
        if !ok {
            failed.push(format!("({}, {})", r.stem, r.weight));
        }
    }
    let sweep_path = cfg.out.join("les_sweep.txt");
    write(&sweep_path, &text)?;

    println!(
        "chart: {} summands in s <= {}, t <= {} ({})",
        chart.summands().len(),
        region.s_valid,
        region.t_valid,
        summands_path.display()
    );
    println!("differentials: {} logged ({})", ss.log().len(), log_path.display());
    println!(
        "LES sweep: {} positions, {} failed ({})",
        sweep.len(),
        failed.len(),
        sweep_path.display()
    );
    if !failed.is_empty() {
        bail!("LES dimension check fails at {}", failed.join(", "));
    }
    Ok(ExitCode::SUCCESS)
}

struct Checked {
    claims: Vec<extensions::HiddenExtensionClaim>,
    verdicts: Vec<extensions::Verdict>,
    names: HomotopyNames,
}

fn check_claims(cfg: &RunConfig, res: &Resolution, naming: &Naming, chart: &SyntheticChart) -> Result<Checked> {
    let names = HomotopyNames::load(&cfg.naming, &GeneratorSpec::defaults())?;
    let relations = RelationSet::load(&cfg.relations, &names)?;
    let claims = extensions::ingest_claims(&cfg.claims, &names)?;
    let ev = Evidence { res, naming, chart, names: &names };
    let verdicts = extensions::verify_all(&claims, &ev, &relations)?;
    Ok(Checked { claims, verdicts, names })
}

fn verify(cfg: &RunConfig) -> Result<ExitCode> {
    let res = load_resolution(cfg)?;
    let naming = naming(&res)?;
    let ss = pages(cfg, &res, &naming)?;
    let chart = synthesize(&ss)?;
    let checked = check_claims(cfg, &res, &naming, &chart)?;
    let report = extensions::report(&checked.claims, &checked.verdicts);
    let json_path = cfg.out.join("verdicts.json");
    write(&json_path, &(report.to_json() + "\n"))?;
    print!("{report}");
    println!("verdicts: {}", json_path.display());
    if !report.conserved {
        bail!("verdict count does not match the claim rows");
    }
    Ok(if report.count(Status::Refuted) > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn chart(cfg: &RunConfig) -> Result<ExitCode> {
    let res = load_resolution(cfg)?;
    let naming = naming(&res)?;
    let ss = pages(cfg, &res, &naming)?;
    let chart = synthesize(&ss)?;
    let checked = check_claims(cfg, &res, &naming, &chart)?;
    let marks = chartio::extension_marks(&checked.claims, &checked.verdicts, &checked.names)?;

    // Dots are cross-checked against the summand file when one exists.
    let summands_path = cfg.out.join("summands.txt");
    let reference = if summands_path.exists() {
        Some(chartio::load_summands(&summands_path)?)
    } else {
        None
    };
    let region = chart.region();
    let t_valid = i64::from(region.t_valid);
    let stem_max = (t_valid - i64::from(region.s_valid)).max(0);
    let style = ChartStyle::default();
    for w in chartio::windows(stem_max, cfg.window) {
        let w = *w.start()..=(*w.end()).min(t_valid);
        let svg = chartio::emit_chart_svg(&chart, &marks, w.clone(), &style)?;
        let path = cfg.out.join(format!("chart_{:03}_{:03}.svg", w.start(), w.end()));
        write(&path, &svg)?;
        let dots = svg.matches("<circle class=\"dot\"").count();
        let source = reference.as_ref().unwrap_or(&chart);
        let want = source.summands().iter().filter(|s| w.contains(&s.ext.stem())).count();
        if dots != want {
            bail!("{}: {dots} dots but {want} summands in stems {}..={}", path.display(), w.start(), w.end());
        }
        println!(
            "{}: stems {}..={}, {dots} dots{}",
            path.display(),
            w.start(),
            w.end(),
            if reference.is_some() { " (matches summands.txt)" } else { "" }
        );
    }
    Ok(ExitCode::SUCCESS)
}
