//! Induced Markov maps over the closest-precritical partition.
//!
//! `F = f^{S_k}` on `U_k = (z_k, z_{k+1})` and on its mirror
//! `Û_k = (ẑ_{k+1}, ẑ_k)`. Along an `F`-orbit, `χ_n` is the branch index of
//! `Fⁿ(x)` and `t_n = Σ_{i<n} S_{χ_i}`, so that `Fⁿ = f^{t_n}`.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hp;
use crate::interval::Interval;
use crate::maps::{IntervalMap, MapSpec};
use crate::symbolic::{kneading, KneadingData};
use crate::Fidelity;

/// Grid size for distortion estimates.
pub const DISTORTION_GRID: usize = 64;
/// Tolerance of the image classification.
pub const IMAGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Which of the four property-(1) intervals an image is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageClass {
    /// `(z₀, c)`
    Z0C,
    /// `(z₁, c)`
    Z1C,
    /// `(c, ẑ₀)`
    CZhat0,
    /// `(c, ẑ₁)`
    CZhat1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedBranch {
    pub k: usize,
    pub side: Side,
    pub domain: Interval,
    pub time: usize,
    pub image: Interval,
    /// One image endpoint equals `c` within [`IMAGE_TOL`].
    pub touches_c: bool,
    /// Sign of `Df^{S_k}` is constant on the grid.
    pub monotone: bool,
    pub class: Option<ImageClass>,
    /// `max/min |Df^{S_k}|` over the grid.
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedMap {
    pub map: MapSpec,
    pub kneading: KneadingData,
    pub branches: Vec<InducedBranch>,
    /// Number of `k` with both `U_k` and `Û_k` built.
    pub k_built: usize,
    pub truncated: bool,
    /// `1 ≤ S_k − S_{k-1} ≤ 2` over the built range.
    pub property_one: bool,
    /// `k < S_k ≤ 2k` for `1 ≤ k` in range.
    pub cutting_time_bounds: bool,
    /// Every branch passed the monotonicity and `c`-endpoint checks, and
    /// the images are classified whenever property (1) holds.
    pub checks_passed: bool,
}

fn branch_word(kd: &KneadingData, k: usize, side: Side) -> Vec<usize> {
    kd.branch_word(k, if side == Side::Left { 0 } else { 1 })
}

fn df_sign_and_log(map: &IntervalMap, x: f64, s: usize) -> Option<(f64, f64)> {
    let mut y = x;
    let mut sign = 1.0;
    let mut log = 0.0;
    for i in 0..s {
        let d = map.deriv(y);
        if d == 0.0 {
            return None;
        }
        sign *= d.signum();
        log += d.abs().ln();
        y = map.step(y, i + 1).ok()?;
    }
    Some((sign, log))
}

/// `max/min |Df^s|` on an interior grid, and whether the sign was constant.
fn grid_distortion(map: &IntervalMap, dom: &Interval, s: usize, n: usize) -> (f64, bool) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sign = 0.0;
    let mut monotone = true;
    for x in dom.interior_grid(n) {
        match df_sign_and_log(map, x, s) {
            Some((sg, l)) => {
                if sign == 0.0 {
                    sign = sg;
                } else if sg != sign {
                    monotone = false;
                }
                lo = lo.min(l);
                hi = hi.max(l);
            }
            None => monotone = false,
        }
    }
    ((hi - lo).exp(), monotone)
}

fn classify(img: &Interval, kd: &KneadingData) -> Option<ImageClass> {
    let c = kd.c;
    let cands = [
        (ImageClass::Z0C, Interval::new(kd.z[0], c)),
        (ImageClass::Z1C, Interval::new(*kd.z.get(1)?, c)),
        (ImageClass::CZhat0, Interval::new(c, kd.zhat[0])),
        (ImageClass::CZhat1, Interval::new(c, *kd.zhat.get(1)?)),
    ];
    cands
        .iter()
        .find(|(_, iv)| iv.approx_eq(img, IMAGE_TOL))
        .map(|(cl, _)| *cl)
}

/// Branches `k = 0..=K` on both sides, with every invariant check recorded.
pub fn build_induced(map: &IntervalMap, k_max: usize) -> Result<InducedMap> {
    build_induced_with(map, k_max, DISTORTION_GRID)
}

pub fn build_induced_with(map: &IntervalMap, k_max: usize, grid: usize) -> Result<InducedMap> {
    let kd = kneading(map, k_max + 1)?;
    let c = kd.c;
    let k_built = kd.len().saturating_sub(1);
    let property_one = kd.s.windows(2).all(|w| (1..=2).contains(&(w[1] - w[0])));
    let cutting_time_bounds = kd.s.iter().enumerate().skip(1).all(|(k, &s)| k < s && s <= 2 * k);
    let mut branches = Vec::with_capacity(2 * k_built);
    for k in 0..k_built {
        let s = kd.s[k];
        // f^{S_k}(z_{k+1}) is c pulled back along e_{S_k} … e_{S_{k+1}-1}.
        let far = map.pullback_point(&kd.critical_laps[s - 1..kd.s[k + 1] - 1], c)?;
        let image = Interval::new(c, far);
        for side in [Side::Left, Side::Right] {
            let domain = match side {
                Side::Left => Interval::new(kd.z[k], kd.z[k + 1]),
                Side::Right => Interval::new(kd.zhat[k + 1], kd.zhat[k]),
            };
            let (distortion, monotone) = grid_distortion(map, &domain, s, grid);
            // Forward check of the endpoint that should land on c.
            let end = if side == Side::Left { kd.z[k] } else { kd.zhat[k] };
            let landed = map.orbit(end, s).map(|o| o[s]).unwrap_or(f64::NAN);
            branches.push(InducedBranch {
                k,
                side,
                domain,
                time: s,
                image,
                touches_c: (landed - c).abs() <= IMAGE_TOL,
                monotone,
                class: classify(&image, &kd),
                distortion,
            });
        }
    }
    let checks_passed = branches
        .iter()
        .all(|b| b.monotone && b.touches_c && (!property_one || b.class.is_some()));
    Ok(InducedMap {
        map: map.spec(),
        truncated: kd.truncated || k_built < k_max + 1,
        kneading: kd,
        branches,
        k_built,
        property_one,
        cutting_time_bounds,
        checks_passed,
    })
}

impl InducedMap {
    pub fn branch(&self, k: usize, side: Side) -> Option<&InducedBranch> {
        self.branches.get(2 * k + usize::from(side == Side::Right))
    }

    /// Branch containing `x` in its interior.
    pub fn locate(&self, x: f64) -> Option<(usize, Side)> {
        let kd = &self.kneading;
        let n = self.k_built;
        if n == 0 {
            return None;
        }
        if x > kd.z[0] && x < kd.z[n] {
            let k = kd.z[..=n].partition_point(|&z| z < x) - 1;
            (x > kd.z[k] && x < kd.z[k + 1]).then_some((k, Side::Left))
        } else if x < kd.zhat[0] && x > kd.zhat[n] {
            let k = kd.zhat[..=n].partition_point(|&z| z > x) - 1;
            (x < kd.zhat[k] && x > kd.zhat[k + 1]).then_some((k, Side::Right))
        } else {
            None
        }
    }

    /// The domain `F` is built on: `(z₀, z_{K+1}) ∪ (ẑ_{K+1}, ẑ₀)`.
    pub fn coverage(&self) -> (Interval, Interval) {
        let kd = &self.kneading;
        let n = self.k_built;
        (Interval::new(kd.z[0], kd.z[n]), Interval::new(kd.zhat[n], kd.zhat[0]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedItinerary {
    pub x: f64,
    pub chi: Vec<usize>,
    pub sides: Vec<Side>,
    /// `t_0 = 0, t_1, …, t_n`.
    pub t: Vec<usize>,
    /// `log|Df^{S_{χ_i}}(x_i)|`, each evaluated from `x_i` alone.
    pub contributions: Vec<f64>,
    /// `x_i = Fⁱ(x)`.
    pub points: Vec<f64>,
    pub stop: Option<String>,
    /// `Σ contributions / t_n`.
    pub assembled: f64,
    /// `(1/t_n) log|Df^{t_n}(x)|` along the whole orbit.
    pub direct: f64,
    pub fidelity: Fidelity,
}

impl InducedItinerary {
    pub fn steps(&self) -> usize {
        self.chi.len()
    }

    /// `(t_{i+1} − t_i) / t_i` for `i ≥ 1`.
    pub fn growth_ratios(&self) -> Vec<f64> {
        self.t
            .windows(2)
            .skip(1)
            .map(|w| (w[1] - w[0]) as f64 / w[0] as f64)
            .collect()
    }
}

/// `n` steps of `F` from `x`.
pub fn induced_profile(
    imap: &InducedMap,
    map: &IntervalMap,
    x: f64,
    n: usize,
    fidelity: Fidelity,
) -> Result<InducedItinerary> {
    match fidelity {
        Fidelity::High => {
            let s_max = imap.kneading.s.iter().copied().max().unwrap_or(1);
            let prec = hp::required_precision(map, n * s_max);
            induced_profile_hp(imap, map, Float::with_val(prec, x), n)
        }
        Fidelity::Fast => {
            let mut it = empty_itinerary(x, Fidelity::Fast);
            let mut y = x;
            let mut direct_sum = 0.0;
            for _ in 0..n {
                let Some((k, side)) = imap.locate(y) else {
                    it.stop = Some(format!("F-orbit left the built branches at {y}"));
                    break;
                };
                let s = imap.kneading.s[k];
                let Some((_, l)) = df_sign_and_log(map, y, s) else {
                    it.stop = Some("critical hit".into());
                    break;
                };
                push_step(&mut it, k, side, s, l);
                direct_sum += l;
                y = map.orbit(y, s)?[s];
                it.points.push(y);
            }
            finish(&mut it, direct_sum);
            Ok(it)
        }
    }
}

fn empty_itinerary(x: f64, fidelity: Fidelity) -> InducedItinerary {
    InducedItinerary {
        x,
        chi: Vec::new(),
        sides: Vec::new(),
        t: vec![0],
        contributions: Vec::new(),
        points: vec![x],
        stop: None,
        assembled: f64::NAN,
        direct: f64::NAN,
        fidelity,
    }
}

fn push_step(it: &mut InducedItinerary, k: usize, side: Side, s: usize, contribution: f64) {
    it.chi.push(k);
    it.sides.push(side);
    it.t.push(it.t.last().unwrap() + s);
    it.contributions.push(contribution);
}

fn finish(it: &mut InducedItinerary, direct_sum: f64) {
    let tn = *it.t.last().unwrap() as f64;
    if tn > 0.0 {
        it.assembled = it.contributions.iter().sum::<f64>() / tn;
        it.direct = direct_sum / tn;
    }
}

/// High-fidelity `F`-orbit: the `f`-orbit is iterated at a precision that
/// keeps it exact over the run, branch contributions are recomputed in `f64`
/// from each rounded `x_i`, and the direct sum uses the exact orbit.
pub fn induced_profile_hp(imap: &InducedMap, map: &IntervalMap, x: Float, n: usize) -> Result<InducedItinerary> {
    let kind = map.kind();
    let c = map.turning_point()?;
    let mut it = empty_itinerary(x.to_f64(), Fidelity::High);
    let mut y = x;
    let mut direct_sum = 0.0;
    for _ in 0..n {
        let yf = y.to_f64();
        let Some((k, side)) = imap.locate(yf) else {
            it.stop = Some(format!("F-orbit left the built branches at {yf}"));
            break;
        };
        let s = imap.kneading.s[k];
        let Some((_, l)) = df_sign_and_log(map, yf, s) else {
            it.stop = Some("critical hit".into());
            break;
        };
        push_step(&mut it, k, side, s, l);
        for _ in 0..s {
            direct_sum += kind.log_abs_deriv_hp(&y).ok_or(Error::CriticalHit {
                index: *it.t.last().unwrap(),
            })?;
            let b = usize::from(y > c);
            y = kind.forward_hp(b, &y);
        }
        it.points.push(y.to_f64());
    }
    finish(&mut it, direct_sum);
    Ok(it)
}

/// A point whose `χ`-sequence is `chi`, found by pulling the last branch
/// back through the earlier ones at high precision.
pub fn design_chi(imap: &InducedMap, map: &IntervalMap, chi: &[usize]) -> Result<Float> {
    if chi.is_empty() {
        return Err(Error::InvalidArgument("empty χ-sequence".into()));
    }
    if let Some(&k) = chi.iter().find(|&&k| k >= imap.k_built) {
        return Err(Error::InvalidArgument(format!("branch {k} not built")));
    }
    // Choose sides back to front so each branch fits in the previous image.
    let mut sides = vec![Side::Left; chi.len()];
    for i in (0..chi.len()).rev() {
        let fits = |side: Side| -> bool {
            let dom = imap.branch(chi[i], side).unwrap().domain;
            i == 0
                || imap
                    .branch(chi[i - 1], Side::Left)
                    .unwrap()
                    .image
                    .contains_interval(&dom)
        };
        sides[i] = if fits(Side::Left) {
            Side::Left
        } else if fits(Side::Right) {
            Side::Right
        } else {
            return Err(Error::EmptyCylinder { position: i });
        };
    }
    let words: Vec<usize> = chi
        .iter()
        .zip(&sides)
        .flat_map(|(&k, &side)| branch_word(&imap.kneading, k, side))
        .collect();
    let last = imap.branch(*chi.last().unwrap(), *sides.last().unwrap()).unwrap();
    let prec = hp::required_precision(map, words.len());
    let orb = hp::shadow(map, &words, last.domain.midpoint(), prec)?;
    Ok(orb.points[0].clone())
}

/// Per-branch distortion, image gaps and the property-(3) diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRow {
    pub k: usize,
    pub time: usize,
    pub distortion_left: f64,
    pub distortion_right: f64,
    /// Distortion of `f^{S_k}` on `(z_{k-1}, c)`; `None` for `k = 0`.
    pub distortion_extended: Option<f64>,
    /// `|f^{S_k}(c) − f^{S_k}(z_{k+1})|`.
    pub gap_outer: f64,
    /// `|f^{S_k}(z_{k+1}) − f^{S_k}(z_k)|`.
    pub gap_image: f64,
    /// `|f^{S_k}(z_k) − f^{S_k}(z_{k-1})|`; `None` for `k = 0`.
    pub gap_inner: Option<f64>,
    /// `(1/k) log |z_k − z_{k+1}|^{-1}`; `None` for `k = 0`.
    pub width_rate: Option<f64>,
}

pub fn distortion_report(imap: &InducedMap, map: &IntervalMap) -> Result<Vec<DistortionRow>> {
    let kd = &imap.kneading;
    let c = kd.c;
    // Critical orbit c_0 = c, c_1, … long enough for every S_k.
    let s_max = kd.s.iter().copied().max().unwrap_or(1);
    let crit = map.orbit(c, s_max)?;
    (0..imap.k_built)
        .map(|k| {
            let s = kd.s[k];
            let l = imap.branch(k, Side::Left).unwrap();
            let r = imap.branch(k, Side::Right).unwrap();
            let far = if l.image.lo == c { l.image.hi } else { l.image.lo };
            let extended = (k > 0).then(|| grid_distortion(map, &Interval::new(kd.z[k - 1], c), s, DISTORTION_GRID).0);
            Ok(DistortionRow {
                k,
                time: s,
                distortion_left: l.distortion,
                distortion_right: r.distortion,
                distortion_extended: extended,
                gap_outer: (crit[s] - far).abs(),
                gap_image: (far - c).abs(),
                gap_inner: (k > 0).then(|| (c - crit[s - kd.s[k - 1]]).abs()),
                width_rate: (k > 0).then(|| -(kd.z[k + 1] - kd.z[k]).abs().ln() / k as f64),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{make_family, FamilyId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tent2() -> IntervalMap {
        make_family(FamilyId::Tent, Some(2.0)).unwrap()
    }

    fn logistic4() -> IntervalMap {
        make_family(FamilyId::Logistic, Some(4.0)).unwrap()
    }

    #[test]
    fn tent_images_classified_exactly() {
        let t = tent2();
        let im = build_induced(&t, 10).unwrap();
        assert!(!im.truncated && im.property_one && im.cutting_time_bounds && im.checks_passed);
        assert_eq!(im.k_built, 11);
        for b in &im.branches {
            let expect = if b.k == 0 {
                Interval::new(0.5, 0.75)
            } else {
                Interval::new(0.25, 0.5)
            };
            assert_eq!(b.image, expect, "k = {}", b.k);
            assert_eq!(b.distortion, 1.0);
        }
        assert_eq!(im.branch(0, Side::Left).unwrap().class, Some(ImageClass::CZhat0));
        assert_eq!(im.branch(3, Side::Right).unwrap().class, Some(ImageClass::Z0C));
    }

    #[test]
    fn logistic_branches() {
        let f = logistic4();
        let im = build_induced(&f, 10).unwrap();
        assert!(im.checks_passed);
        assert_eq!(im.kneading.s[0], 1);
        assert!((im.kneading.z[0] - 0.146_446_609_4).abs() < 1e-9);
        for b in &im.branches {
            assert!(b.distortion.is_finite() && b.distortion >= 1.0);
        }
    }

    #[test]
    fn locate_finds_branches() {
        let im = build_induced(&tent2(), 10).unwrap();
        assert_eq!(im.locate(0.3), Some((0, Side::Left)));
        assert_eq!(im.locate(0.4), Some((1, Side::Left)));
        assert_eq!(im.locate(0.7), Some((0, Side::Right)));
        assert_eq!(im.locate(0.1), None);
        assert_eq!(im.locate(0.5), None);
    }

    #[test]
    fn tent_contributions_are_exact() {
        let t = tent2();
        let im = build_induced(&t, 30).unwrap();
        let it = induced_profile(&im, &t, 0.3, 5, Fidelity::High).unwrap();
        for (i, &k) in it.chi.iter().enumerate() {
            assert_eq!(it.contributions[i], im.kneading.s[k] as f64 * 2f64.ln());
        }
    }

    #[test]
    fn decomposition_identity() {
        let f = logistic4();
        let im = build_induced(&f, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (l, r) = im.coverage();
        for _ in 0..100 {
            let x = if rng.gen_bool(0.5) {
                rng.gen_range(l.lo..l.hi)
            } else {
                rng.gen_range(r.lo..r.hi)
            };
            let it = induced_profile(&im, &f, x, 20, Fidelity::High).unwrap();
            assert!(it.stop.is_none(), "{:?}", it.stop);
            assert!(it.t.windows(2).all(|w| w[1] > w[0]));
            assert!((it.assembled - it.direct).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn slow_growth_design() {
        let f = logistic4();
        let im = build_induced(&f, 40).unwrap();
        let chi: Vec<usize> = (1..=25).collect();
        let x = design_chi(&im, &f, &chi).unwrap();
        let it = induced_profile_hp(&im, &f, x, chi.len()).unwrap();
        assert_eq!(it.chi, chi);
        let g = it.growth_ratios();
        assert!(g.windows(2).all(|w| w[1] < w[0]), "{g:?}");
    }

    #[test]
    fn distortion_table() {
        let t = tent2();
        let im = build_induced(&t, 8).unwrap();
        let rows = distortion_report(&im, &t).unwrap();
        assert_eq!(rows.len(), 9);
        for r in &rows {
            assert_eq!(r.distortion_left, 1.0);
            assert_eq!(r.distortion_extended.unwrap_or(1.0), 1.0);
            assert!(r.gap_image > 0.2);
        }
        let f = logistic4();
        let im = build_induced(&f, 8).unwrap();
        let rows = distortion_report(&im, &f).unwrap();
        assert!(rows.iter().all(|r| r.distortion_left.is_finite()));
    }

    #[test]
    fn truncated_when_critical_orbit_is_captured() {
        let f = make_family(FamilyId::Logistic, Some(3.2)).unwrap();
        let im = build_induced(&f, 5).unwrap();
        assert!(im.truncated);
    }
}
