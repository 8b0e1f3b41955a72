//! Itineraries, cylinder sets, closest precritical points and cutting times.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::maps::IntervalMap;

/// One letter of an itinerary: the lap containing the point, or `C` when the
/// point sits on a turning point (within [`crate::maps::CRITICAL_PROXIMITY`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Lap(u8),
    Critical(u8),
}

impl Symbol {
    pub fn lap(self) -> Option<usize> {
        match self {
            Symbol::Lap(i) => Some(i as usize),
            Symbol::Critical(_) => None,
        }
    }
}

/// Symbolic coding of a finite orbit segment `x, f(x), …, f^{n-1}(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Itinerary {
    pub symbols: Vec<Symbol>,
    pub source: f64,
}

impl Itinerary {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Lap indices, or the position of the first `C`.
    pub fn laps(&self) -> Result<Vec<usize>> {
        self.symbols
            .iter()
            .enumerate()
            .map(|(i, s)| s.lap().ok_or(Error::CriticalSymbol(i)))
            .collect()
    }

    fn is_binary(&self) -> bool {
        self.symbols.iter().all(|s| match s {
            Symbol::Lap(i) => *i < 2,
            Symbol::Critical(i) => *i == 0,
        })
    }
}

/// `L`/`R`/`C` for two-lap codings, digits otherwise.
impl fmt::Display for Itinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let binary = self.is_binary();
        for s in &self.symbols {
            match (*s, binary) {
                (Symbol::Lap(0), true) => f.write_str("L")?,
                (Symbol::Lap(_), true) => f.write_str("R")?,
                (Symbol::Lap(i), false) => write!(f, "{i}")?,
                (Symbol::Critical(_), true) => f.write_str("C")?,
                (Symbol::Critical(i), false) => write!(f, "C{i}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Itinerary {
    type Err = Error;

    /// Parses `L`/`R`/`C` strings and plain digit strings.
    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|ch| match ch {
                'L' => Ok(Symbol::Lap(0)),
                'R' => Ok(Symbol::Lap(1)),
                'C' => Ok(Symbol::Critical(0)),
                d if d.is_ascii_digit() => Ok(Symbol::Lap(d as u8 - b'0')),
                other => Err(Error::InvalidArgument(format!("bad itinerary symbol `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Itinerary {
            symbols,
            source: f64::NAN,
        })
    }
}

fn symbol_of(map: &IntervalMap, x: f64) -> Symbol {
    match map.critical_index(x) {
        Some(c) => Symbol::Critical(c as u8),
        None => Symbol::Lap(map.branch_index(x) as u8),
    }
}

/// Itinerary of length `n` of `x`, computed along the forward `f64` orbit.
pub fn itinerary(map: &IntervalMap, x: f64, n: usize) -> Result<Itinerary> {
    let orbit = map.orbit(x, n.saturating_sub(1))?;
    Ok(Itinerary {
        symbols: orbit.iter().take(n).map(|&y| symbol_of(map, y)).collect(),
        source: x,
    })
}

/// Symbols of an already computed orbit segment.
pub fn symbols_of_orbit(map: &IntervalMap, orbit: &[f64]) -> Vec<Symbol> {
    orbit.iter().map(|&y| symbol_of(map, y)).collect()
}

/// The kneading sequence: itinerary of the critical value `f(c)`.
pub fn kneading_sequence(map: &IntervalMap, n: usize) -> Result<Itinerary> {
    let c = map.turning_point()?;
    itinerary(map, map.eval(c), n)
}

/// The closed set of points whose first `|w|` symbols are `w`, obtained by
/// pulling the domain back along `w`. `None` when the cylinder is empty.
pub fn cylinder(map: &IntervalMap, w: &[usize]) -> Result<Option<Interval>> {
    let mut j = map.domain();
    for &b in w.iter().rev() {
        match map.pullback(b, &j) {
            Ok(k) => j = k,
            Err(Error::EmptyPullback { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(j))
}

/// [`cylinder`] for an itinerary; `C` symbols are rejected.
pub fn cylinder_of(map: &IntervalMap, w: &Itinerary) -> Result<Option<Interval>> {
    cylinder(map, &w.laps()?)
}

/// Closest precritical points `z_k < c`, their mirrors `ẑ_k > c` and the
/// cutting times `S_k` of a unimodal map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneadingData {
    #[serde(rename = "S")]
    pub s: Vec<usize>,
    pub z: Vec<f64>,
    pub zhat: Vec<f64>,
    /// Turning point.
    pub c: f64,
    /// Laps of the critical orbit `c_1, c_2, …` as far as they were inspected
    /// (index 0 holds the lap of `c_1`).
    pub critical_laps: Vec<usize>,
    /// Fewer than the requested number of cutting times were found.
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<String>,
}

/// Default number of critical-orbit iterates inspected for the next cut.
pub const KNEADING_SEARCH_LIMIT: usize = 4096;

/// Gap below which consecutive `z_k` are considered converged.
pub const KNEADING_CONVERGENCE: f64 = 1e-14;

impl KneadingData {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Lap word of the central branch `(z_k, c)` up to time `S_k`:
    /// `[side, e_1, …, e_{S_k - 1}]`.
    pub fn branch_word(&self, k: usize, side: usize) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.s[k]);
        w.push(side);
        w.extend_from_slice(&self.critical_laps[..self.s[k] - 1]);
        w
    }

    /// Every violated invariant, as human-readable lines. Empty when all hold.
    pub fn check(&self, map: &IntervalMap) -> Vec<String> {
        let mut bad = Vec::new();
        let c = self.c;
        if self.s.first() != Some(&1) {
            bad.push("S_0 != 1".to_string());
        }
        for k in 0..self.len() {
            if k > 0 {
                if self.s[k] <= self.s[k - 1] {
                    bad.push(format!("S_{k} not increasing"));
                }
                if !(self.z[k - 1] < self.z[k]) {
                    bad.push(format!("z_{k} not increasing"));
                }
                if !(self.zhat[k] < self.zhat[k - 1]) {
                    bad.push(format!("zhat_{k} not decreasing"));
                }
            }
            if !(self.z[k] < c && c < self.zhat[k]) {
                bad.push(format!("z_{k}/zhat_{k} on the wrong side of c"));
            }
            match map.orbit(self.z[k], self.s[k]) {
                Ok(o) if (o[self.s[k]] - c).abs() <= 1e-9 => {}
                Ok(o) => bad.push(format!("f^S_{k}(z_{k}) = {} differs from c", o[self.s[k]])),
                Err(e) => bad.push(format!("orbit of z_{k}: {e}")),
            }
            if k + 1 < self.len() {
                let u = Interval::new(map.eval(self.z[k]), map.eval(self.z[k + 1]));
                let uh = Interval::new(map.eval(self.zhat[k + 1]), map.eval(self.zhat[k]));
                if !u.approx_eq(&uh, 1e-9) {
                    bad.push(format!("f(U_{k}) != f(Uhat_{k})"));
                }
            }
            // f^{S_k} has constant derivative sign on (z_{k-1}, c).
            let left = if k == 0 { map.domain().lo } else { self.z[k - 1] };
            let mut sign = 0.0f64;
            for x in Interval::new(left, c).interior_grid(64) {
                let Ok(o) = map.orbit(x, self.s[k]) else {
                    continue;
                };
                let sg: f64 = o[..self.s[k]].iter().map(|&y| map.deriv(y).signum()).product();
                if sign == 0.0 {
                    sign = sg;
                } else if sg != sign {
                    bad.push(format!("f^S_{k} not monotone on (z_{}, c)", k as isize - 1));
                    break;
                }
            }
        }
        bad
    }
}

/// Cutting times and closest precritical points for `k = 0..=max_k`.
///
/// `z_k` is found by pulling `c` back along the lap word of the central
/// branch, so its accuracy does not degrade with `k`.
pub fn kneading(map: &IntervalMap, max_k: usize) -> Result<KneadingData> {
    kneading_with_limit(map, max_k, KNEADING_SEARCH_LIMIT)
}

pub fn kneading_with_limit(map: &IntervalMap, max_k: usize, search: usize) -> Result<KneadingData> {
    let c = map.turning_point()?;
    let mut data = KneadingData {
        s: Vec::new(),
        z: Vec::new(),
        zhat: Vec::new(),
        c,
        critical_laps: Vec::new(),
        truncated: false,
        truncation: None,
    };
    let truncate = |data: &mut KneadingData, why: String| {
        data.truncated = true;
        data.truncation = Some(why);
    };

    // Critical orbit laps e_1, e_2, … (stored from index 0).
    let mut crit = c;
    let mut extend = |laps: &mut Vec<usize>, upto: usize| -> std::result::Result<(), String> {
        while laps.len() < upto {
            crit = map.step(crit, laps.len() + 1).map_err(|e| e.to_string())?;
            if map.critical_index(crit).is_some() {
                return Err(format!("critical orbit returns to c at iterate {}", laps.len() + 1));
            }
            laps.push(map.branch_index(crit));
        }
        Ok(())
    };

    let mut s_prev = 1usize;
    for k in 0..=max_k {
        let s_k = if k == 0 {
            1
        } else {
            let mut found = None;
            for n in s_prev + 1..=s_prev + search {
                if let Err(why) = extend(&mut data.critical_laps, n) {
                    truncate(&mut data, why);
                    break;
                }
                // e_n vs e_{n - S_{k-1}}, both with index >= 1.
                if data.critical_laps[n - 1] != data.critical_laps[n - s_prev - 1] {
                    found = Some(n);
                    break;
                }
            }
            match found {
                Some(n) => n,
                None => {
                    if !data.truncated {
                        truncate(
                            &mut data,
                            format!("no cutting time within {search} iterates after S = {s_prev}"),
                        );
                    }
                    break;
                }
            }
        };
        if let Err(why) = extend(&mut data.critical_laps, s_k - 1) {
            truncate(&mut data, why);
            break;
        }
        let word = |side: usize| {
            let mut w = vec![side];
            w.extend_from_slice(&data.critical_laps[..s_k - 1]);
            w
        };
        let (z, zhat) = match (map.pullback_point(&word(0), c), map.pullback_point(&word(1), c)) {
            (Ok(z), Ok(zh)) => (z, zh),
            (Err(e), _) | (_, Err(e)) => {
                truncate(&mut data, format!("pullback failed: {e}"));
                break;
            }
        };
        if let Some(&last) = data.z.last() {
            if (z - last).abs() < KNEADING_CONVERGENCE {
                truncate(&mut data, format!("z_k converged at k = {k}"));
                break;
            }
        }
        data.s.push(s_k);
        data.z.push(z);
        data.zhat.push(zhat);
        s_prev = s_k;
    }
    Ok(data)
}
