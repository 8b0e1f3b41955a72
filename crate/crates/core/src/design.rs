//! Points with prescribed block itineraries.
//!
//! The main schedule alternates long stays near the fixed point in the right
//! lap with a close pass by the turning point, a jump to the right endpoint
//! and a dwell near `0`. For logistic(4) the close pass costs more derivative
//! than the stay earned, so `Λ` dips below zero at every pass; for the sine map
//! the same itinerary keeps `Λ` positive. Orbits pass within `2^-2000` of the
//! turning point, so everything here runs on [`crate::hp`] shadow orbits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conjugacy::make_conjugacy_auto;
use crate::error::{Error, Result};
use crate::hp::{self, ShadowOrbit};
use crate::lyapunov::{profile_from_terms, LyapunovProfile};
use crate::maps::{IntervalMap, MapSpec};
use crate::Fidelity;

/// Depth of the itinerary conjugacy used to move the anchor to the conjugate map.
const ANCHOR_CONJUGACY_DEPTH: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "block", content = "len")]
pub enum Block {
    StayR(usize),
    StayL(usize),
    /// The pass by the turning point: `R` at the pass, `R` again at the
    /// following point next to the right endpoint.
    Approach,
}

impl Block {
    pub fn len(self) -> usize {
        match self {
            Block::StayR(n) | Block::StayL(n) => n,
            Block::Approach => 2,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

/// A finite block itinerary and the pass times `n_k` it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSchedule {
    pub blocks: Vec<Block>,
    /// Times of the turning-point passes.
    pub times: Vec<usize>,
    pub ratio: f64,
    pub dwell: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub n1: usize,
    pub depth: usize,
    /// `n_{k+1} = ratio · n_k`.
    pub ratio: f64,
    /// L-block length `⌊dwell · n_k⌋`.
    pub dwell: f64,
    pub min_ratio: f64,
}

impl ScheduleConfig {
    pub fn new(n1: usize, depth: usize) -> Self {
        ScheduleConfig {
            n1,
            depth,
            ratio: 10.0,
            dwell: 1.1,
            min_ratio: 10.0,
        }
    }
}

fn floor_mul(a: f64, n: usize) -> usize {
    (a * n as f64 + 1e-9).floor() as usize
}

impl BlockSchedule {
    /// `R^{n₁} · Approach · L^{…}` through time `⌊(1+dwell)·n_k⌋`, repeated for
    /// every stage, closed by one `R`.
    pub fn lowlyap(cfg: &ScheduleConfig) -> Result<Self> {
        if cfg.depth == 0 || cfg.n1 == 0 {
            return Err(Error::InvalidSchedule("n1 and depth must be positive".into()));
        }
        if !(cfg.ratio >= cfg.min_ratio) {
            return Err(Error::InvalidSchedule(format!(
                "growth ratio {} below the minimum {}",
                cfg.ratio, cfg.min_ratio
            )));
        }
        let mut times = vec![cfg.n1];
        for k in 1..cfg.depth {
            times.push(floor_mul(cfg.ratio, times[k - 1]));
        }
        let mut blocks = Vec::new();
        let mut t = 0usize;
        for &n in &times {
            let end = n + floor_mul(cfg.dwell, n);
            if n <= t || end < n + 2 {
                return Err(Error::InvalidSchedule(format!(
                    "stage at n = {n} does not fit after time {t}"
                )));
            }
            blocks.push(Block::StayR(n - t));
            blocks.push(Block::Approach);
            blocks.push(Block::StayL(end - n - 1));
            t = end + 1;
        }
        blocks.push(Block::StayR(1));
        Self::from_blocks(blocks, times, cfg.ratio, cfg.dwell)
    }

    pub fn from_blocks(blocks: Vec<Block>, times: Vec<usize>, ratio: f64, dwell: f64) -> Result<Self> {
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::InvalidSchedule("blocks must have positive length".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule("pass times must increase".into()));
        }
        Ok(BlockSchedule {
            blocks,
            times,
            ratio,
            dwell,
        })
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lap indices, `0 = L`, `1 = R`.
    pub fn branches(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        for b in &self.blocks {
            match *b {
                Block::StayR(n) => out.extend(std::iter::repeat_n(1, n)),
                Block::StayL(n) => out.extend(std::iter::repeat_n(0, n)),
                Block::Approach => out.extend([1, 1]),
            }
        }
        out
    }

    /// Checkpoints `1 + n_k` and `⌊(1+dwell)·n_k⌋`.
    pub fn checkpoints(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .times
            .iter()
            .flat_map(|&n| [1 + n, n + floor_mul(self.dwell, n)])
            .filter(|&k| k <= self.len())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// `R200,A,L219,R1` style: `R<n>`, `L<n>`, `A`; pass times are read off the
/// positions of the `A` blocks.
impl FromStr for BlockSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut times = Vec::new();
        let mut t = 0;
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let block = match tok.split_at(1) {
                ("A", "") => {
                    times.push(t);
                    Block::Approach
                }
                ("R", n) | ("L", n) => {
                    let n: usize = n
                        .parse()
                        .map_err(|_| Error::InvalidSchedule(format!("bad block `{tok}`")))?;
                    if tok.starts_with('R') {
                        Block::StayR(n)
                    } else {
                        Block::StayL(n)
                    }
                }
                _ => return Err(Error::InvalidSchedule(format!("bad block `{tok}`"))),
            };
            t += block.len();
            blocks.push(block);
        }
        if blocks.is_empty() {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        Self::from_blocks(blocks, times, f64::NAN, 1.1)
    }
}

impl fmt::Display for BlockSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match b {
                Block::StayR(n) => write!(f, "R{n}")?,
                Block::StayL(n) => write!(f, "L{n}")?,
                Block::Approach => f.write_str("A")?,
            }
        }
        Ok(())
    }
}

/// Anchor `y_T` the designed orbits end on.
pub const ANCHOR: f64 = 0.3;

/// A point whose orbit follows a schedule, with its shadow orbit and the
/// `log2` width of the schedule's cylinder as an accuracy certificate.
#[derive(Debug, Clone)]
pub struct DesignedPoint {
    pub map: MapSpec,
    pub x: f64,
    pub schedule: BlockSchedule,
    pub log2_width: f64,
    pub orbit: ShadowOrbit,
}

impl DesignedPoint {
    /// First position where the orbit's side of the turning point differs
    /// from the schedule, if any.
    pub fn itinerary_mismatch(&self, map: &IntervalMap) -> Option<usize> {
        let c = map.turning_point().ok()?;
        self.schedule
            .branches()
            .iter()
            .enumerate()
            .find(|&(i, &b)| usize::from(self.orbit.points[i] > c) != b)
            .map(|(i, _)| i)
    }

    /// `log2|y_i − c|`.
    pub fn log2_distance_to_critical(&self, map: &IntervalMap, i: usize) -> Result<f64> {
        Ok(self.orbit.log2_distance(i, map.turning_point()?))
    }
}

/// Largest precision [`design_point`] uses unless told otherwise.
pub const DEFAULT_MAX_BITS: u32 = 1 << 17;

/// Designs the point of `map` following `sched` and ending on `anchor`.
pub fn design_point(map: &IntervalMap, sched: &BlockSchedule) -> Result<DesignedPoint> {
    design_point_with(map, sched, ANCHOR, DEFAULT_MAX_BITS)
}

pub fn design_point_with(
    map: &IntervalMap,
    sched: &BlockSchedule,
    anchor: f64,
    max_bits: u32,
) -> Result<DesignedPoint> {
    map.turning_point()?;
    let branches = sched.branches();
    let precision = hp::required_precision(map, branches.len());
    if precision > max_bits {
        let steps = ((max_bits.saturating_sub(hp::MIN_PRECISION)) as f64 / map.deriv_sup().log2()) as usize;
        return Err(Error::PrecisionExhausted {
            needed: precision,
            limit: max_bits,
            achievable: steps,
        });
    }
    let orbit = hp::shadow(map, &branches, anchor, precision)?;
    let cyl = hp::cylinder(map, &branches, precision)?;
    Ok(DesignedPoint {
        map: map.spec(),
        x: orbit.points[0].to_f64(),
        schedule: sched.clone(),
        log2_width: cyl.suffix_log2_widths.first().copied().unwrap_or(0.0),
        orbit,
    })
}

/// `log2` widths of the cylinders of every prefix of the schedule; cost is
/// quadratic in the schedule length.
pub fn prefix_log2_widths(map: &IntervalMap, sched: &BlockSchedule) -> Result<Vec<f64>> {
    let branches = sched.branches();
    let precision = hp::required_precision(map, branches.len());
    (1..=branches.len())
        .map(|k| Ok(hp::cylinder(map, &branches[..k], precision)?.suffix_log2_widths[0]))
        .collect()
}

/// `Λ_n` of a designed point from its shadow orbit at the given checkpoints.
pub fn profile_designed(point: &DesignedPoint, checkpoints: &[usize]) -> Result<LyapunovProfile> {
    profile_from_terms(
        point.x,
        point.orbit.len(),
        checkpoints,
        Fidelity::High,
        point.orbit.terms.iter().copied(),
    )
}

/// `log2|Dfⁿ(y)|` from a shadow orbit.
pub fn log2_derivative(point: &DesignedPoint, n: usize) -> f64 {
    point.orbit.terms[..n].iter().sum::<f64>() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub n: usize,
    /// `log2|y_{n} − c|`.
    pub log2_distance: f64,
    /// `log2|y_{n} − c| / n`; the construction predicts about `−1.1`.
    pub distance_exponent: f64,
    pub log2_deriv_n: f64,
    pub log2_deriv_n_plus_1: f64,
    pub log2_deriv_end: f64,
    /// Predicted `log2|Df^{1+n_k}|` reading the exponent as `n_k − 1.1 n_k`.
    pub predicted_dip: f64,
    /// The same with the first factor `2^{n₁}` taken literally.
    pub predicted_dip_literal: f64,
    pub lambda_dip: f64,
    pub lambda_end: f64,
    pub lambda_dip_conjugate: f64,
    pub lambda_end_conjugate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub f: MapSpec,
    pub g: MapSpec,
    pub n1: usize,
    pub depth: usize,
    pub ratio: f64,
    pub dwell: f64,
    pub schedule: String,
    pub length: usize,
    pub precision: u32,
    pub x: f64,
    pub x_conjugate: f64,
    pub log2_width: f64,
    pub log2_width_conjugate: f64,
    pub stages: Vec<StageReport>,
    pub profile: LyapunovProfile,
    pub profile_conjugate: LyapunovProfile,
    /// Minimum of `Λ` over the checkpoints `1 + n_k`.
    pub lambda_minus_f: f64,
    pub lambda_minus_g: f64,
    pub sign_f: i8,
    pub sign_g: i8,
    /// `log(α / π^0.55)` with `α = |Dg|` at the conjugate fixed point.
    pub predicted_conjugate_rate: f64,
    pub alpha: f64,
    /// The orbit settles onto a cycle of period ≤ 64 over its last half.
    pub asymptotically_periodic: bool,
    /// Evidence is from finitely many stages.
    pub finite_depth: bool,
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Stays within `1e-6` of a `q`-cycle over the last half of the orbit.
fn settles_on_cycle(points: &[f64]) -> bool {
    let t = points.len();
    (1..=64.min(t / 2)).any(|q| (t / 2..t - q).all(|i| (points[i + q] - points[i]).abs() < 1e-6))
}

/// Builds the schedule, designs `y` for `f` and its conjugate point for `g`,
/// and profiles both.
pub fn counterexample_experiment(
    f: &IntervalMap,
    g: &IntervalMap,
    cfg: &ScheduleConfig,
    max_bits: u32,
) -> Result<CounterexampleReport> {
    if cfg.n1 < 100 {
        return Err(Error::InvalidSchedule("n1 must be at least 100".into()));
    }
    let sched = BlockSchedule::lowlyap(cfg)?;
    let needed = hp::required_precision(f, sched.len()).max(hp::required_precision(g, sched.len()));
    if needed > max_bits {
        let mut achievable = 0;
        for d in (1..cfg.depth).rev() {
            let s = BlockSchedule::lowlyap(&ScheduleConfig { depth: d, ..*cfg })?;
            let need = hp::required_precision(f, s.len()).max(hp::required_precision(g, s.len()));
            if need <= max_bits {
                achievable = d;
                break;
            }
        }
        return Err(Error::PrecisionExhausted {
            needed,
            limit: max_bits,
            achievable,
        });
    }
    let anchor_g = if f.spec() == g.spec() {
        ANCHOR
    } else {
        make_conjugacy_auto(f, g, ANCHOR_CONJUGACY_DEPTH)?.value(ANCHOR)?
    };
    let (py, pz) = rayon::join(
        || design_point_with(f, &sched, ANCHOR, max_bits),
        || design_point_with(g, &sched, anchor_g, max_bits),
    );
    let (y, z) = (py?, pz?);
    if let Some(i) = y.itinerary_mismatch(f).or_else(|| z.itinerary_mismatch(g)) {
        return Err(Error::EmptyCylinder { position: i });
    }
    let mut cps = sched.checkpoints();
    cps.extend(sched.times.iter().copied());
    let pf = profile_designed(&y, &cps)?;
    let pg = profile_designed(&z, &cps)?;
    let c = f.turning_point()?;
    let stages: Vec<StageReport> = sched
        .times
        .iter()
        .map(|&n| {
            let end = n + floor_mul(sched.dwell, n);
            let d = y.orbit.log2_distance(n, c);
            StageReport {
                n,
                log2_distance: d,
                distance_exponent: d / n as f64,
                log2_deriv_n: log2_derivative(&y, n),
                log2_deriv_n_plus_1: log2_derivative(&y, n + 1),
                log2_deriv_end: log2_derivative(&y, end),
                predicted_dip: n as f64 - sched.dwell * n as f64,
                predicted_dip_literal: cfg.n1 as f64 - sched.dwell * n as f64,
                lambda_dip: pf.at(n + 1).unwrap_or(f64::NAN),
                lambda_end: pf.at(end).unwrap_or(f64::NAN),
                lambda_dip_conjugate: pg.at(n + 1).unwrap_or(f64::NAN),
                lambda_end_conjugate: pg.at(end).unwrap_or(f64::NAN),
            }
        })
        .collect();
    let lambda_minus_f = stages.iter().map(|s| s.lambda_dip).fold(f64::INFINITY, f64::min);
    let lambda_minus_g = stages
        .iter()
        .map(|s| s.lambda_dip_conjugate)
        .fold(f64::INFINITY, f64::min);
    // |Dg| at the conjugate of the right fixed point: the point the long
    // R-blocks pin the conjugate orbit to.
    let p_g = z.orbit.points[sched.times[0] / 2].to_f64();
    let alpha = g.deriv(p_g).abs();
    let tail: Vec<f64> = y.orbit.points.iter().map(|p| p.to_f64()).collect();
    Ok(CounterexampleReport {
        f: f.spec(),
        g: g.spec(),
        n1: cfg.n1,
        depth: cfg.depth,
        ratio: cfg.ratio,
        dwell: cfg.dwell,
        schedule: sched.to_string(),
        length: sched.len(),
        precision: y.orbit.precision.max(z.orbit.precision),
        x: y.x,
        x_conjugate: z.x,
        log2_width: y.log2_width,
        log2_width_conjugate: z.log2_width,
        stages,
        profile: pf,
        profile_conjugate: pg,
        lambda_minus_f,
        lambda_minus_g,
        sign_f: sign(lambda_minus_f),
        sign_g: sign(lambda_minus_g),
        predicted_conjugate_rate: (alpha / std::f64::consts::PI.powf(0.55)).ln(),
        alpha,
        asymptotically_periodic: settles_on_cycle(&tail),
        finite_depth: true,
    })
}
