//! Versioned on-disk form of a resolution: generator degrees and boundaries
//! per `(s, t)` block. Derived matrices are rebuilt (and re-verified) on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Generator, Resolution, Stage};
use crate::error::{Error, Result};
use crate::steenrod::{MilnorElement, MilnorMonomial, PROFILE};

pub const FORMAT_VERSION: u32 = 1;
const ORDERING: &str = "milnor(degree,lex r1 r2 r3); generators by (degree, creation)";

#[derive(Serialize, Deserialize)]
struct File {
    format_version: u32,
    /// Exponent bounds of the profile: `r_i < 2^profile[i]`.
    profile: [u8; 3],
    s_max: u32,
    t_max: u32,
    basis_ordering: String,
    blocks: Vec<Block>,
}

#[derive(Serialize, Deserialize)]
struct Block {
    s: u32,
    t: u32,
    generators: Vec<GenRecord>,
}

#[derive(Serialize, Deserialize)]
struct GenRecord {
    id: usize,
    boundary: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct Term {
    target: usize,
    milnor: Vec<[u8; 3]>,
}

fn profile_exponents() -> [u8; 3] {
    PROFILE.map(|b| b.trailing_zeros() as u8)
}

impl Resolution {
    /// Serialize to JSON text (deterministic).
    pub fn to_checkpoint_string(&self) -> Result<String> {
        let mut blocks = Vec::new();
        for (s, st) in self.stages.iter().enumerate() {
            let mut id = 0;
            while id < st.gens.len() {
                let t = st.gens[id].degree;
                let range = st.gens_in_degree(t);
                let generators = range
                    .clone()
                    .map(|i| GenRecord {
                        id: i,
                        boundary: st.gens[i]
                            .boundary
                            .iter()
                            .map(|&(target, a)| Term {
                                target,
                                milnor: a.terms().map(|m| [m.r1, m.r2, m.r3]).collect(),
                            })
                            .collect(),
                    })
                    .collect();
                blocks.push(Block { s: s as u32, t, generators });
                id = range.end;
            }
        }
        let file = File {
            format_version: FORMAT_VERSION,
            profile: profile_exponents(),
            s_max: self.s_max,
            t_max: self.t_max,
            basis_ordering: ORDERING.into(),
            blocks,
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Consistency(e.to_string()))
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let text = self.to_checkpoint_string()?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Resolution> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_str(&text).map_err(|reason| Error::Checkpoint {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn from_checkpoint_str(text: &str) -> std::result::Result<Resolution, String> {
        if text.trim().is_empty() {
            return Err("file is empty".into());
        }
        let file: File = serde_json::from_str(text).map_err(|e| format!("malformed: {e}"))?;
        if file.format_version != FORMAT_VERSION {
            return Err(format!(
                "format version {} is not supported (expected {FORMAT_VERSION})",
                file.format_version
            ));
        }
        if file.profile != profile_exponents() {
            return Err(format!("profile {:?} is not A(2)", file.profile));
        }
        if file.basis_ordering != ORDERING {
            return Err(format!("unknown basis ordering `{}`", file.basis_ordering));
        }
        let mut by_cell: std::collections::BTreeMap<(u32, u32), Vec<(usize, Generator)>> = Default::default();
        for block in file.blocks {
            let (s, t) = (block.s, block.t);
            if s > file.s_max || t > file.t_max {
                return Err(format!("block ({s}, {t}) lies outside the declared range"));
            }
            let mut gens = Vec::new();
            for g in block.generators {
                let mut boundary = Vec::new();
                for term in g.boundary {
                    let mut a = MilnorElement::ZERO;
                    for [r1, r2, r3] in term.milnor {
                        let m = MilnorMonomial::new(r1, r2, r3)
                            .map_err(|e| format!("block ({s}, {t}): {e}"))?;
                        a += MilnorElement::from_monomial(m);
                    }
                    boundary.push((term.target, a));
                }
                gens.push((g.id, Generator { degree: t, boundary }));
            }
            if by_cell.insert((s, t), gens).is_some() {
                return Err(format!("block ({s}, {t}) appears twice"));
            }
        }
        let mut res = Resolution::new();
        for s in 0..=file.s_max {
            res.stages.push(Stage::default());
            for t in 0..=file.t_max {
                let given = by_cell.remove(&(s, t)).unwrap_or_default();
                let first = res.stages[s as usize].gens.len();
                if given.iter().enumerate().any(|(k, (id, _))| *id != first + k) {
                    return Err(format!("block ({s}, {t}): generator ids are not consecutive from {first}"));
                }
                let given = given.into_iter().map(|(_, g)| g).collect();
                res.compute_cell(s, t, Some(given)).map_err(|e| e.to_string())?;
            }
        }
        res.s_max = file.s_max;
        res.t_max = file.t_max;
        Ok(res)
    }
}

impl Resolution {
    /// The part of the resolution through `(s_max, t_max)`, replayed from the
    /// stored generators. Generators are chosen cell by cell, so the result
    /// equals a fresh [`Resolution::compute`] over the smaller range.
    pub fn restricted(&self, s_max: u32, t_max: u32) -> Result<Resolution> {
        if s_max > self.s_max || t_max > self.t_max {
            return Err(Error::OutOfRange { s: s_max, t: t_max });
        }
        let mut res = Resolution::new();
        for s in 0..=s_max {
            res.stages.push(Default::default());
            let stage = &self.stages[s as usize];
            for t in 0..=t_max {
                let given = stage.gens[stage.gens_in_degree(t)].to_vec();
                res.compute_cell(s, t, Some(given))?;
            }
        }
        res.s_max = s_max;
        res.t_max = t_max;
        Ok(res)
    }
}
