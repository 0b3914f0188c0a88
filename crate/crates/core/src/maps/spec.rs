//! Text grammar for maps in run configurations:
//!
//! ```text
//! rot:<alpha>                       alpha: decimal, p/q, sqrt2m1, golden, random:<seed>
//! iet:<d>:<perm>:<l1,l2,...>        exact lengths summing to 1
//! iet:<d>:<perm>:random:<seed>      lengths uniform on the simplex
//! times:<m>                         odd m ≥ 3
//! ```

use serde::Serialize;

use super::{random_iet, Iet, IntervalMap, MapError, MapKind, Permutation, RANDOM_IET_WORDS};
use crate::fixedpoint::{parse_rational, Grid};
use crate::rng::{streams, RngStream};

pub fn parse_map(text: &str, grid: Grid) -> Result<IntervalMap, MapError> {
    let text = text.trim();
    let bad = || MapError::Grammar(format!("cannot parse {text:?}"));
    let (head, rest) = text.split_once(':').ok_or_else(bad)?;
    match head {
        "rot" => {
            let alpha = match rest.strip_prefix("random:") {
                Some(seed) => {
                    let seed: u64 = seed.parse().map_err(|_| bad())?;
                    let mut c = RngStream::new(seed, streams::MAPS).cursor(0);
                    grid.point_wrapping(c.grid_residue(grid))
                }
                None => grid.parse_point(rest)?,
            };
            Ok(IntervalMap::rotation(alpha))
        }
        "iet" => {
            let mut parts = rest.splitn(3, ':');
            let d: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let perm = Permutation::parse(parts.next().ok_or_else(bad)?)?;
            if perm.len() != d {
                return Err(MapError::LengthMismatch { lengths: d, perm: perm.len() });
            }
            let lengths = parts.next().ok_or_else(bad)?;
            let iet = match lengths.strip_prefix("random:") {
                Some(seed) => {
                    let seed: u64 = seed.parse().map_err(|_| bad())?;
                    let s = RngStream::new(seed, streams::MAPS).with_words_per_index(RANDOM_IET_WORDS);
                    random_iet(grid, perm, &mut s.cursor(0))?
                }
                None => {
                    let ratios = lengths
                        .split(',')
                        .map(|s| parse_rational(s).ok_or_else(bad))
                        .collect::<Result<Vec<_>, _>>()?;
                    if ratios.len() != d {
                        return Err(MapError::LengthMismatch { lengths: ratios.len(), perm: d });
                    }
                    Iet::from_ratios(grid, &ratios, perm)?
                }
            };
            Ok(IntervalMap::iet(iet))
        }
        "times" => {
            let m: u128 = rest.trim().parse().map_err(|_| bad())?;
            IntervalMap::times_odd(grid, m)
        }
        _ => Err(bad()),
    }
}

/// Realized (quantized) parameters of a map, for output manifests.
/// Residues are decimal strings so they survive JSON readers limited to f64.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapDescription {
    pub family: &'static str,
    pub bits: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub irreducible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<String>,
    pub discontinuities: Vec<String>,
    pub approx: Vec<f64>,
}

impl IntervalMap {
    pub fn describe(&self) -> MapDescription {
        let g = self.grid();
        let discontinuities = self.discontinuities().iter().map(|p| p.k().to_string()).collect();
        let base = MapDescription {
            family: "",
            bits: g.bits(),
            alpha: None,
            lengths: None,
            permutation: None,
            irreducible: None,
            multiplier: None,
            discontinuities,
            approx: Vec::new(),
        };
        match self.kind() {
            MapKind::Rotation { alpha } => MapDescription {
                family: "rotation",
                alpha: Some(alpha.to_string()),
                approx: vec![g.to_f64(*alpha)],
                ..base
            },
            MapKind::Iet(t) => MapDescription {
                family: "iet",
                lengths: Some(t.lengths().iter().map(|p| p.to_string()).collect()),
                permutation: Some(t.permutation().one_based()),
                irreducible: Some(t.permutation().is_irreducible()),
                approx: t.lengths().iter().map(|&p| g.to_f64(p)).collect(),
                ..base
            },
            MapKind::TimesOdd { m } => MapDescription {
                family: "times_odd",
                multiplier: Some(m.to_string()),
                ..base
            },
        }
    }
}
