//! Finite-time and pointwise Lyapunov exponents, exponents of empirical
//! measures, and the scan that ties negative exponents to attracting cycles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hp;
use crate::maps::{make_family, FamilyId, IntervalMap, MapSpec, UnitPoint, CRITICAL_PROXIMITY};
use crate::symbolic::symbols_of_orbit;
use crate::Fidelity;

/// Iterations discarded before sampling a Lebesgue-typical orbit.
pub const BURN_IN: usize = 1_000;
/// Above this length the tail window is sampled at a 1% stride.
pub const DENSE_TAIL_LIMIT: usize = 100_000;
/// Largest working precision (bits) high-fidelity mode will use by default.
pub const MAX_PRECISION: u32 = 1 << 16;

/// `Λ_n` at selected `n`, with liminf/limsup estimates over `[N/2, N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovProfile {
    pub x: f64,
    pub n: usize,
    pub checkpoints: Vec<(usize, f64)>,
    pub tail: (usize, usize),
    pub lambda_minus_est: f64,
    pub lambda_plus_est: f64,
    /// Smallest single term `log|Df(fⁱ(x))|` seen.
    pub min_log_deriv: f64,
    pub fidelity: Fidelity,
}

impl LyapunovProfile {
    /// `Λ_n` at a checkpoint, if it was requested.
    pub fn at(&self, n: usize) -> Option<f64> {
        self.checkpoints.iter().find(|(k, _)| *k == n).map(|(_, v)| *v)
    }

    /// `Λ_N`.
    pub fn last(&self) -> f64 {
        self.at(self.n).unwrap_or(f64::NAN)
    }
}

/// The `n` at which the tail estimators sample `Λ_n`.
pub fn tail_samples(n: usize) -> Vec<usize> {
    let start = (n / 2).max(1);
    let stride = if n <= DENSE_TAIL_LIMIT { 1 } else { (n / 100).max(1) };
    let mut v: Vec<usize> = (start..=n).step_by(stride).collect();
    if v.last() != Some(&n) {
        v.push(n);
    }
    v
}

/// Builds a profile from the stream of terms `log|Df(fⁱ(x))|`, `i < n`.
pub fn profile_from_terms(
    x: f64,
    n: usize,
    checkpoints: &[usize],
    fidelity: Fidelity,
    terms: impl IntoIterator<Item = f64>,
) -> Result<LyapunovProfile> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if let Some(&bad) = checkpoints.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::InvalidArgument(format!("checkpoint {bad} outside [1, {n}]")));
    }
    let tail = tail_samples(n);
    let mut wanted: Vec<usize> = checkpoints.iter().copied().chain(tail.iter().copied()).collect();
    wanted.push(n);
    wanted.sort_unstable();
    wanted.dedup();

    let mut values = Vec::with_capacity(wanted.len());
    let mut sum = 0.0;
    let mut min_term = f64::INFINITY;
    let mut next = 0;
    let mut count = 0;
    for t in terms.into_iter().take(n) {
        sum += t;
        min_term = min_term.min(t);
        count += 1;
        if next < wanted.len() && wanted[next] == count {
            values.push((count, sum / count as f64));
            next += 1;
        }
    }
    if count < n {
        return Err(Error::InvalidArgument(format!("only {count} of {n} terms supplied")));
    }
    let lookup = |k: usize| values[values.binary_search_by_key(&k, |v| v.0).unwrap()].1;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &k in &tail {
        let v = lookup(k);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let mut cps: Vec<usize> = checkpoints.to_vec();
    if !cps.contains(&n) {
        cps.push(n);
    }
    cps.sort_unstable();
    cps.dedup();
    Ok(LyapunovProfile {
        x,
        n,
        checkpoints: cps.into_iter().map(|k| (k, lookup(k))).collect(),
        tail: (tail[0], n),
        lambda_minus_est: lo,
        lambda_plus_est: hi,
        min_log_deriv: min_term,
        fidelity,
    })
}

/// Profile along the forward `f64` orbit of `x`.
pub fn profile(map: &IntervalMap, x: f64, n: usize, checkpoints: &[usize]) -> Result<LyapunovProfile> {
    profile_with(map, x, n, checkpoints, Fidelity::Fast)
}

pub fn profile_with(
    map: &IntervalMap,
    x: f64,
    n: usize,
    checkpoints: &[usize],
    fidelity: Fidelity,
) -> Result<LyapunovProfile> {
    match fidelity {
        Fidelity::Fast => {
            let orbit_terms = OrbitTerms::new(map, x)?;
            let mut err = None;
            let terms = orbit_terms.map_while(|r| match r {
                Ok(t) => Some(t),
                Err(e) => {
                    err = Some(e);
                    None
                }
            });
            let out = profile_from_terms(x, n, checkpoints, fidelity, terms);
            match err {
                Some(e) => Err(e),
                None => out,
            }
        }
        Fidelity::High => {
            let terms = high_fidelity_terms(map, x, n, MAX_PRECISION)?;
            profile_from_terms(x, n, checkpoints, fidelity, terms)
        }
    }
}

/// Terms of the true orbit that shares the `f64` orbit's itinerary and its
/// `n`-th point, recovered by backward shadowing.
pub fn high_fidelity_terms(map: &IntervalMap, x: f64, n: usize, max_bits: u32) -> Result<Vec<f64>> {
    let orbit = map.orbit(x, n)?;
    let symbols = symbols_of_orbit(map, &orbit[..n]);
    let branches: Vec<usize> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| s.lap().ok_or(Error::CriticalHit { index: i }))
        .collect::<Result<_>>()?;
    let needed = hp::required_precision(map, n);
    if needed > max_bits {
        return Err(Error::PrecisionExhausted {
            needed,
            limit: max_bits,
            achievable: ((max_bits - hp::MIN_PRECISION.min(max_bits)) as f64 / map.deriv_sup().log2()) as usize,
        });
    }
    Ok(hp::shadow(map, &branches, orbit[n], needed)?.terms)
}

/// Iterator over `log|Df(fⁱ(x))|` along the forward orbit.
struct OrbitTerms<'a> {
    map: &'a IntervalMap,
    x: UnitPoint,
    i: usize,
    failed: bool,
}

impl<'a> OrbitTerms<'a> {
    fn new(map: &'a IntervalMap, x: f64) -> Result<Self> {
        map.orbit(x, 0)?;
        Ok(OrbitTerms {
            map,
            x: UnitPoint::new(x),
            i: 0,
            failed: false,
        })
    }
}

impl Iterator for OrbitTerms<'_> {
    type Item = Result<f64>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let out = match self.map.unit_log_abs_deriv(self.x) {
            Some(t) => {
                self.x = self.map.unit_step(self.x);
                Ok(t)
            }
            None => Err(Error::CriticalHit { index: self.i }),
        };
        self.i += 1;
        self.failed = out.is_err();
        Some(out)
    }
}

/// Weighted point cloud standing in for an invariant measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub source: String,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<f64>, weights: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::InvalidArgument(
                "points and weights must be non-empty and equal length".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(EmpiricalMeasure {
            points,
            weights,
            source: source.into(),
        })
    }

    pub fn uniform(points: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        let w = vec![1.0; points.len()];
        Self::new(points, w, source)
    }

    pub fn dirac(x: f64) -> Self {
        EmpiricalMeasure {
            points: vec![x],
            weights: vec![1.0],
            source: format!("dirac({x})"),
        }
    }

    /// `n` orbit points of `x` after discarding `burn_in` iterates.
    pub fn orbit(map: &IntervalMap, x: f64, burn_in: usize, n: usize) -> Result<Self> {
        map.orbit(x, 0)?;
        let mut y = UnitPoint::new(x);
        for _ in 0..burn_in {
            y = map.unit_step(y);
        }
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            pts.push(y.value());
            y = map.unit_step(y);
        }
        Self::uniform(pts, format!("orbit of {x} after {burn_in}"))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Weight above which a near-critical atom makes the estimate unreliable.
pub const ATOM_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureExponent {
    pub value: f64,
    pub unreliable: bool,
}

/// `Σ wᵢ log|Df(xᵢ)|`.
pub fn measure_exponent(map: &IntervalMap, mu: &EmpiricalMeasure) -> MeasureExponent {
    let mut value = 0.0;
    let mut unreliable = false;
    for (&x, &w) in mu.points.iter().zip(&mu.weights) {
        if w > ATOM_WEIGHT && map.critical_index(x).is_some() {
            unreliable = true;
        }
        value += w * map.deriv(x).abs().ln();
    }
    MeasureExponent { value, unreliable }
}

/// An attracting periodic orbit found near the end of an orbit segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub period: usize,
    pub points: Vec<f64>,
    /// `|Df^q|` along the cycle.
    pub multiplier: f64,
}

impl Cycle {
    /// `(1/q) log|Df^q|`.
    pub fn exponent(&self) -> f64 {
        self.multiplier.ln() / self.period as f64
    }
}

pub const MAX_CYCLE_PERIOD: usize = 64;
pub const CYCLE_TOLERANCE: f64 = 1e-6;

/// Smallest `q ≤ max_period` with `|f^q(x) − x| < tol` and `|Df^q| < 1`
/// along `x, …, f^{q-1}(x)`.
pub fn detect_cycle(map: &IntervalMap, x: f64, max_period: usize, tol: f64) -> Option<Cycle> {
    let orbit = map.orbit(x, max_period).ok()?;
    let mut mult = 1.0;
    for q in 1..=max_period {
        mult *= map.deriv(orbit[q - 1]).abs();
        if (orbit[q] - x).abs() < tol && mult < 1.0 {
            return Some(Cycle {
                period: q,
                points: orbit[..q].to_vec(),
                multiplier: mult,
            });
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub burn_in: usize,
    pub n: usize,
    /// `Λ_N` below this demands a detected cycle.
    pub threshold: f64,
    pub max_period: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            burn_in: BURN_IN,
            n: 10_000,
            threshold: -0.05,
            max_period: MAX_CYCLE_PERIOD,
            tol: CYCLE_TOLERANCE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub map: MapSpec,
    pub trial: usize,
    pub x0: f64,
    /// `Λ_N` after burn-in; `-inf` when the orbit lands exactly on `c`.
    pub lambda: f64,
    pub cycle: Option<Cycle>,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub family: FamilyId,
    pub config: ScanConfig,
    pub records: Vec<ScanRecord>,
    pub violations: usize,
}

/// For every parameter and trial: a random start, `Λ_N` after burn-in, and a
/// cycle check whenever `Λ_N` is below the threshold. Pairs run in parallel;
/// pair `k` draws from stream `k` of a generator seeded with `config.seed`.
pub fn attractor_scan(family: FamilyId, params: &[f64], trials: usize, config: &ScanConfig) -> Result<ScanReport> {
    let maps = params
        .iter()
        .map(|&p| make_family(family, if family == FamilyId::Sine { None } else { Some(p) }))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<ScanRecord> = (0..maps.len() * trials)
        .into_par_iter()
        .map(|k| {
            let map = &maps[k / trials];
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            let x0: f64 = rng.gen_range(0.0..1.0);
            scan_one(map, k % trials, x0, config)
        })
        .collect::<Result<_>>()?;
    let violations = records.iter().filter(|r| r.violation).count();
    Ok(ScanReport {
        family,
        config: *config,
        records,
        violations,
    })
}

fn scan_one(map: &IntervalMap, trial: usize, x0: f64, config: &ScanConfig) -> Result<ScanRecord> {
    let mut y = UnitPoint::new(x0);
    for _ in 0..config.burn_in {
        y = map.unit_step(y);
    }
    let mut sum = 0.0;
    for _ in 0..config.n {
        match map.unit_log_abs_deriv(y) {
            Some(t) => sum += t,
            None => {
                sum = f64::NEG_INFINITY;
                break;
            }
        }
        y = map.unit_step(y);
    }
    let y = y.value();
    let lambda = sum / config.n as f64;
    let cycle = (lambda < config.threshold)
        .then(|| detect_cycle(map, y, config.max_period, config.tol))
        .flatten();
    Ok(ScanRecord {
        map: map.spec(),
        trial,
        x0,
        lambda,
        violation: lambda < config.threshold && cycle.is_none(),
        cycle,
    })
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// True when some orbit point came within the critical proximity of a
/// turning point.
pub fn has_near_critical_passage(map: &IntervalMap, x: f64, n: usize) -> Result<bool> {
    let c: Vec<f64> = map.critical_points().iter().map(|c| c.location).collect();
    Ok(map
        .orbit(x, n)?
        .iter()
        .any(|y| c.iter().any(|c| (y - c).abs() < CRITICAL_PROXIMITY)))
}
