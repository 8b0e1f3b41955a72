//! Topological conjugacies between unimodal maps with the same kneading
//! sequence, and the transport of points and measures along them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hp;
use crate::interval::Interval;
use crate::lyapunov::{detect_cycle, measure_exponent, Cycle, EmpiricalMeasure, BURN_IN};
use crate::maps::{FamilyId, IntervalMap, MapSpec};
use crate::symbolic::{symbols_of_orbit, Symbol};

/// Cylinders narrower than this count as degenerate.
pub const MIN_CYLINDER_WIDTH: f64 = 1e-15;
/// Residual bound checked before an explicit formula is trusted.
pub const EXPLICIT_CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConjugacyMode {
    Explicit,
    Itinerary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Formula {
    /// `sin²(πx/2)`, tent(2) to logistic(4).
    TentToLogistic,
    /// `(2/π) asin(√x)`, logistic(4) to tent(2).
    LogisticToTent,
}

fn is(spec: MapSpec, family: FamilyId, param: f64) -> bool {
    spec.family == family && spec.param == Some(param)
}

/// `h` with `h ∘ f = g ∘ h`.
#[derive(Debug, Clone)]
pub struct ConjugacyMap {
    pub f: IntervalMap,
    pub g: IntervalMap,
    pub mode: ConjugacyMode,
    /// Itinerary depth `M`.
    pub depth: usize,
    formula: Option<Formula>,
}

/// `h(x)` with the depth actually used and the width of the target cylinder
/// it was taken from (zero for explicit formulas and precritical points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HValue {
    pub value: f64,
    pub depth: usize,
    pub width: f64,
}

/// Checks unimodality and kneading agreement to depth `depth`, then builds
/// `h`. Explicit mode exists for tent(2) and logistic(4) in either direction.
pub fn make_conjugacy(f: &IntervalMap, g: &IntervalMap, mode: ConjugacyMode, depth: usize) -> Result<ConjugacyMap> {
    let kf = hp::kneading_sequence(f, depth)?;
    let kg = hp::kneading_sequence(g, depth)?;
    if let Some(position) = kf.iter().zip(&kg).position(|(a, b)| a != b) {
        return Err(Error::KneadingMismatch { position });
    }
    let formula = match mode {
        ConjugacyMode::Itinerary => None,
        ConjugacyMode::Explicit => {
            let (a, b) = (f.spec(), g.spec());
            let formula = if is(a, FamilyId::Tent, 2.0) && is(b, FamilyId::Logistic, 4.0) {
                Formula::TentToLogistic
            } else if is(a, FamilyId::Logistic, 4.0) && is(b, FamilyId::Tent, 2.0) {
                Formula::LogisticToTent
            } else {
                return Err(Error::NoExplicitConjugacy {
                    from: a.to_string(),
                    to: b.to_string(),
                });
            };
            Some(formula)
        }
    };
    let h = ConjugacyMap {
        f: f.clone(),
        g: g.clone(),
        mode,
        depth,
        formula,
    };
    if h.formula.is_some() {
        let r = h.residual_on(Interval::unit().interior_grid(10_000))?;
        if r > EXPLICIT_CHECK_TOL {
            return Err(Error::InvalidArgument(format!(
                "explicit conjugacy residual {r:e} exceeds {EXPLICIT_CHECK_TOL:e}"
            )));
        }
    }
    Ok(h)
}

/// Explicit when a formula is known for the pair, itinerary otherwise.
pub fn make_conjugacy_auto(f: &IntervalMap, g: &IntervalMap, depth: usize) -> Result<ConjugacyMap> {
    match make_conjugacy(f, g, ConjugacyMode::Explicit, depth) {
        Err(Error::NoExplicitConjugacy { .. }) => make_conjugacy(f, g, ConjugacyMode::Itinerary, depth),
        other => other,
    }
}

impl ConjugacyMap {
    pub fn eval(&self, x: f64) -> Result<HValue> {
        let dom = self.f.domain();
        if !dom.contains(x) {
            return Err(Error::OutsideDomain {
                x,
                lo: dom.lo,
                hi: dom.hi,
            });
        }
        match self.formula {
            Some(Formula::TentToLogistic) => {
                let s = (std::f64::consts::FRAC_PI_2 * x).sin();
                Ok(HValue {
                    value: s * s,
                    depth: self.depth,
                    width: 0.0,
                })
            }
            Some(Formula::LogisticToTent) => Ok(HValue {
                value: std::f64::consts::FRAC_2_PI * x.sqrt().asin(),
                depth: self.depth,
                width: 0.0,
            }),
            None => {
                let w = hp::itinerary(&self.f, x, self.depth)?;
                locate(&self.g, &w)
            }
        }
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        self.eval(x).map(|h| h.value)
    }

    /// `max |h(f(x)) − g(h(x))|` over the given points.
    pub fn residual_on(&self, xs: impl IntoIterator<Item = f64>) -> Result<f64> {
        let mut worst = 0.0f64;
        for x in xs {
            let lhs = self.value(self.f.eval(x))?;
            let rhs = self.g.eval(self.value(x)?);
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    }
}

/// The point of `g` with itinerary `w`: the midpoint of its cylinder, or the
/// exact preimage of the turning point when `w` contains `C`. When the
/// cylinder degenerates before `w` is used up, the deepest non-degenerate
/// prefix is used.
pub fn locate(g: &IntervalMap, w: &[Symbol]) -> Result<HValue> {
    if let Some(i) = w.iter().position(|s| s.lap().is_none()) {
        let k = match w[i] {
            Symbol::Critical(k) => k as usize,
            Symbol::Lap(_) => unreachable!(),
        };
        let c = g.critical_points().get(k).ok_or(Error::CriticalSymbol(i))?.location;
        let laps = lap_word(&w[..i]);
        let x = pull(g, &laps, Interval::point(c))?;
        return Ok(HValue {
            value: x.lo,
            depth: w.len(),
            width: 0.0,
        });
    }
    let laps = lap_word(w);
    let full = pull(g, &laps, g.domain())?;
    if full.width() >= MIN_CYLINDER_WIDTH || laps.is_empty() {
        return Ok(HValue {
            value: full.midpoint(),
            depth: laps.len(),
            width: full.width(),
        });
    }
    // Largest k whose prefix cylinder is still wide enough.
    let (mut lo, mut hi) = (0usize, laps.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if pull(g, &laps[..mid], g.domain())?.width() >= MIN_CYLINDER_WIDTH {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let cyl = pull(g, &laps[..lo], g.domain())?;
    Ok(HValue {
        value: cyl.midpoint(),
        depth: lo,
        width: cyl.width(),
    })
}

fn lap_word(w: &[Symbol]) -> Vec<usize> {
    w.iter().map(|s| s.lap().expect("no critical symbol")).collect()
}

fn pull(g: &IntervalMap, laps: &[usize], start: Interval) -> Result<Interval> {
    let mut j = start;
    for (i, &b) in laps.iter().enumerate().rev() {
        j = g.pullback(b, &j).map_err(|e| match e {
            Error::EmptyPullback { .. } => Error::EmptyCylinder { position: i },
            other => other,
        })?;
    }
    Ok(j)
}

/// Pushforward: same weights, points mapped through `h`.
pub fn transport_measure(h: &ConjugacyMap, mu: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
    let points = mu.points.par_iter().map(|&x| h.value(x)).collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalMeasure {
        points,
        weights: mu.weights.clone(),
        source: format!("{} pushed from {} to {}", mu.source, h.f.spec(), h.g.spec()),
    })
}

/// Pushforward of the uniform measure on an orbit segment, reading each
/// point's itinerary off the segment's own symbol string. `orbit` must hold
/// `n + depth` points; the first `n` are transported.
pub fn transport_orbit(g: &IntervalMap, symbols: &[Symbol], n: usize, depth: usize) -> Result<Vec<f64>> {
    if symbols.len() < n + depth {
        return Err(Error::InvalidArgument("orbit too short for the requested depth".into()));
    }
    (0..n)
        .into_par_iter()
        .map(|i| locate(g, &symbols[i..i + depth]).map(|h| h.value))
        .collect()
}

/// Estimates near zero within this margin are flagged.
pub const LOW_CONFIDENCE_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub f: MapSpec,
    pub g: MapSpec,
    pub mode: ConjugacyMode,
    pub n_samples: usize,
    pub depth: usize,
    pub seed: u64,
    pub lambda_f: f64,
    pub lambda_g: f64,
    pub signs_agree: bool,
    pub difference: f64,
    pub low_confidence: bool,
    pub unreliable: bool,
}

/// `λ(μ_f)` from a typical orbit of `f` and `λ(h_*μ_f)` for the conjugate.
pub fn sign_invariance_experiment(
    f: &IntervalMap,
    g: &IntervalMap,
    n_samples: usize,
    depth: usize,
    seed: u64,
) -> Result<SignReport> {
    let h = make_conjugacy_auto(f, g, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: f64 = rng.gen_range(0.0..1.0);
    let mu_f = EmpiricalMeasure::orbit(f, x0, BURN_IN, n_samples + depth)?;
    let points_g = match h.mode {
        ConjugacyMode::Explicit => mu_f.points[..n_samples]
            .par_iter()
            .map(|&x| h.value(x))
            .collect::<Result<Vec<_>>>()?,
        ConjugacyMode::Itinerary => {
            let symbols = symbols_of_orbit(f, &mu_f.points);
            transport_orbit(g, &symbols, n_samples, depth)?
        }
    };
    let mu_f = EmpiricalMeasure::uniform(mu_f.points[..n_samples].to_vec(), mu_f.source)?;
    let mu_g = EmpiricalMeasure::uniform(points_g, "transported orbit")?;
    let ef = measure_exponent(f, &mu_f);
    let eg = measure_exponent(g, &mu_g);
    Ok(SignReport {
        f: f.spec(),
        g: g.spec(),
        mode: h.mode,
        n_samples,
        depth,
        seed,
        lambda_f: ef.value,
        lambda_g: eg.value,
        signs_agree: ef.value.signum() == eg.value.signum(),
        difference: (ef.value - eg.value).abs(),
        low_confidence: ef.value.abs() < LOW_CONFIDENCE_MARGIN || eg.value.abs() < LOW_CONFIDENCE_MARGIN,
        unreliable: ef.unreliable || eg.unreliable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleComparison {
    pub f: MapSpec,
    pub g: MapSpec,
    pub cycle_f: Cycle,
    pub cycle_g: Cycle,
    pub lambda_f: f64,
    pub lambda_g: f64,
    pub signs_agree: bool,
}

/// Exponents of the Dirac measures on the attracting cycles that capture the
/// critical orbits of two maps with matching kneading sequences.
pub fn atomic_cycle_experiment(f: &IntervalMap, g: &IntervalMap, depth: usize) -> Result<CycleComparison> {
    let kf = hp::kneading_sequence(f, depth)?;
    let kg = hp::kneading_sequence(g, depth)?;
    if let Some(position) = kf.iter().zip(&kg).position(|(a, b)| a != b) {
        return Err(Error::KneadingMismatch { position });
    }
    let settle = |m: &IntervalMap| -> Result<Cycle> {
        let c = m.turning_point()?;
        let mut y = m.eval(c);
        for i in 0..10 * BURN_IN {
            y = m.step(y, i + 2)?;
        }
        detect_cycle(
            m,
            y,
            crate::lyapunov::MAX_CYCLE_PERIOD,
            crate::lyapunov::CYCLE_TOLERANCE,
        )
        .ok_or_else(|| Error::InvalidArgument(format!("no attracting cycle found for {}", m.spec())))
    };
    let (cf, cg) = (settle(f)?, settle(g)?);
    let lf = measure_exponent(f, &EmpiricalMeasure::uniform(cf.points.clone(), "cycle")?).value;
    let lg = measure_exponent(g, &EmpiricalMeasure::uniform(cg.points.clone(), "cycle")?).value;
    Ok(CycleComparison {
        f: f.spec(),
        g: g.spec(),
        cycle_f: cf,
        cycle_g: cg,
        lambda_f: lf,
        lambda_g: lg,
        signs_agree: lf.signum() == lg.signum(),
    })
}
