//! Arbitrary-precision orbit shadowing.
//!
//! Forward iteration of an expanding map loses a bit or more per step, and
//! orbits that pass within `2^-1000` of the turning point cannot be stored in
//! an `f64` at all. Here an orbit with a prescribed branch sequence is
//! recovered backwards: starting from an anchor point, each earlier point is
//! the inverse-branch image of the next. Inverse branches contract, so every
//! point carries the full working precision and `f(y_i) = y_{i+1}` holds to
//! rounding.

use rug::float::Constant;
use rug::Float;

use crate::error::{Error, Result};
use crate::maps::{IntervalMap, Kind, CRITICAL_PROXIMITY};
use crate::symbolic::Symbol;

/// Working precision never drops below this many bits.
pub const MIN_PRECISION: u32 = 128;

/// Bits needed to shadow `len` steps of `map` without losing the offsets of
/// near-fold points: one `log2 L` per step plus guard bits.
pub fn required_precision(map: &IntervalMap, len: usize) -> u32 {
    let bits = (len as f64 * map.deriv_sup().log2()).ceil() as u32;
    bits.saturating_add(MIN_PRECISION)
}

fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// `ln|u|` for an arbitrary-precision `u`, valid far below the `f64` range.
fn ln_abs(u: &Float) -> Option<f64> {
    if u.is_zero() {
        return None;
    }
    let (m, e) = u.to_f64_exp();
    Some(m.abs().ln() + e as f64 * std::f64::consts::LN_2)
}

impl Kind {
    pub(crate) fn inverse_hp(self, branch: usize, y: &Float) -> Option<Float> {
        let prec = y.prec();
        if y.is_sign_negative() && !y.is_zero() {
            return None;
        }
        match self {
            Kind::Logistic(a) => {
                // s = sqrt((a - 4y)/a)
                let mut t = Float::with_val(prec, a) - Float::with_val(prec, y * 4u32);
                if t.is_sign_negative() && !t.is_zero() {
                    return None;
                }
                t /= a;
                let s = t.sqrt();
                Some(if branch == 0 {
                    let num = Float::with_val(prec, y * 2u32) / a;
                    num / (s + 1u32)
                } else {
                    (s + 1u32) / 2u32
                })
            }
            Kind::Sine => {
                if *y > 1u32 {
                    return None;
                }
                let offset = if *y > 0.5f64 {
                    Float::with_val(prec, y.acos_ref()) / pi(prec)
                } else {
                    let asin = Float::with_val(prec, y.asin_ref()) / pi(prec);
                    Float::with_val(prec, 0.5f64) - asin
                };
                Some(if branch == 0 {
                    Float::with_val(prec, 0.5f64) - offset
                } else {
                    offset + 0.5f64
                })
            }
            Kind::Tent(s) => {
                if *y > s / 2.0 {
                    return None;
                }
                let q = Float::with_val(prec, y / s);
                Some(if branch == 0 {
                    q
                } else {
                    Float::with_val(prec, 1u32) - q
                })
            }
        }
    }

    pub(crate) fn forward_hp(self, branch: usize, x: &Float) -> Float {
        let prec = x.prec();
        match self {
            Kind::Logistic(a) => {
                let one_minus = Float::with_val(prec, 1u32) - x;
                Float::with_val(prec, x * &one_minus) * a
            }
            Kind::Sine => {
                let arg = if branch == 0 {
                    x.clone()
                } else {
                    Float::with_val(prec, 1u32) - x
                };
                (arg * pi(prec)).sin()
            }
            Kind::Tent(s) => {
                let arg = if branch == 0 {
                    x.clone()
                } else {
                    Float::with_val(prec, 1u32) - x
                };
                arg * s
            }
        }
    }

    /// `ln|Df(x)|` to `f64` accuracy, computed from the exact offset `1/2 - x`.
    pub(crate) fn log_abs_deriv_hp(self, x: &Float) -> Option<f64> {
        let prec = x.prec();
        let u = Float::with_val(prec, 0.5f64) - x;
        match self {
            Kind::Logistic(a) => ln_abs(&u).map(|l| (2.0 * a).ln() + l),
            Kind::Sine => {
                let lu = ln_abs(&u)?;
                let (_, e) = u.to_f64_exp();
                let pi = std::f64::consts::PI;
                if e < -20 {
                    // sin(πu) = πu (1 - (πu)²/6 + …)
                    let pu = (pi * u.to_f64()).abs();
                    Some(pi.ln() + pi.ln() + lu + (-pu * pu / 6.0).ln_1p())
                } else {
                    Some(pi.ln() + (pi * u.to_f64()).sin().abs().ln())
                }
            }
            Kind::Tent(s) => Some(s.ln()),
        }
    }
}

/// An orbit recovered by backward shadowing, with its log-derivative terms.
#[derive(Debug, Clone)]
pub struct ShadowOrbit {
    /// `y_0, …, y_T`; `y_T` is the anchor.
    pub points: Vec<Float>,
    /// `log|Df(y_i)|` for `i < T`.
    pub terms: Vec<f64>,
    pub precision: u32,
}

impl ShadowOrbit {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Signed offset `y_i - c` as `(mantissa, binary exponent)`.
    pub fn offset_from(&self, i: usize, c: f64) -> (f64, i32) {
        let d = Float::with_val(self.precision, &self.points[i] - c);
        d.to_f64_exp()
    }

    /// `log2|y_i - c|`.
    pub fn log2_distance(&self, i: usize, c: f64) -> f64 {
        let (m, e) = self.offset_from(i, c);
        m.abs().log2() + e as f64
    }
}

/// Recover the orbit with branch sequence `branches` ending at `anchor`.
pub fn shadow(map: &IntervalMap, branches: &[usize], anchor: f64, precision: u32) -> Result<ShadowOrbit> {
    let kind = map.kind();
    let len = branches.len();
    let mut points = vec![Float::new(precision); len + 1];
    points[len] = Float::with_val(precision, anchor);
    for i in (0..len).rev() {
        let b = branches[i];
        map.branch(b)?;
        points[i] = kind
            .inverse_hp(b, &points[i + 1])
            .ok_or(Error::EmptyCylinder { position: i })?;
    }
    let terms = points[..len]
        .iter()
        .enumerate()
        .map(|(i, y)| kind.log_abs_deriv_hp(y).ok_or(Error::CriticalHit { index: i }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShadowOrbit {
        points,
        terms,
        precision,
    })
}

/// Cylinder of a branch sequence at high precision, with `log2` widths of
/// every suffix cylinder (`widths[i]` belongs to `branches[i..]`).
#[derive(Debug, Clone)]
pub struct HpCylinder {
    pub lo: Float,
    pub hi: Float,
    pub suffix_log2_widths: Vec<f64>,
}

pub fn cylinder(map: &IntervalMap, branches: &[usize], precision: u32) -> Result<HpCylinder> {
    let kind = map.kind();
    let dom = map.domain();
    let mut lo = Float::with_val(precision, dom.lo);
    let mut hi = Float::with_val(precision, dom.hi);
    let mut widths = vec![0.0; branches.len()];
    for i in (0..branches.len()).rev() {
        let b = map.branch(branches[i])?;
        let img_lo = Float::with_val(precision, b.image.lo);
        let img_hi = Float::with_val(precision, b.image.hi);
        let klo = if lo > img_lo { lo } else { img_lo };
        let khi = if hi < img_hi { hi } else { img_hi };
        if klo > khi {
            return Err(Error::EmptyCylinder { position: i });
        }
        let u = kind
            .inverse_hp(b.index, &klo)
            .ok_or(Error::EmptyCylinder { position: i })?;
        let v = kind
            .inverse_hp(b.index, &khi)
            .ok_or(Error::EmptyCylinder { position: i })?;
        (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        let w = Float::with_val(precision, &hi - &lo);
        widths[i] = if w.is_zero() {
            f64::NEG_INFINITY
        } else {
            let (m, e) = w.to_f64_exp();
            m.log2() + e as f64
        };
    }
    Ok(HpCylinder {
        lo,
        hi,
        suffix_log2_widths: widths,
    })
}

/// Itinerary of length `len` computed by forward iteration at a precision
/// that keeps every symbol exact; `C` marks points within the critical
/// proximity of a turning point.
pub fn itinerary(map: &IntervalMap, x: f64, len: usize) -> Result<Vec<Symbol>> {
    let prec = required_precision(map, len);
    itinerary_from(map, Float::with_val(prec, x), len)
}

/// As [`itinerary`], starting from an arbitrary-precision point.
pub fn itinerary_from(map: &IntervalMap, x: Float, len: usize) -> Result<Vec<Symbol>> {
    let dom = map.domain();
    if x < dom.lo || x > dom.hi {
        return Err(Error::OutsideDomain {
            x: x.to_f64(),
            lo: dom.lo,
            hi: dom.hi,
        });
    }
    let prec = x.prec();
    let kind = map.kind();
    let crit: Vec<f64> = map.critical_points().iter().map(|c| c.location).collect();
    let mut y = x;
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let near = crit.iter().position(|&c| {
            let d = Float::with_val(prec, &y - c).abs();
            d < CRITICAL_PROXIMITY
        });
        let b = map
            .branches()
            .iter()
            .position(|b| y <= b.domain.hi)
            .unwrap_or(map.branches().len() - 1);
        out.push(match near {
            Some(k) => Symbol::Critical(k as u8),
            None => Symbol::Lap(b as u8),
        });
        if i + 1 < len {
            y = kind.forward_hp(b, &y);
            if y < dom.lo {
                y = Float::with_val(prec, dom.lo);
            } else if y > dom.hi {
                y = Float::with_val(prec, dom.hi);
            }
        }
    }
    Ok(out)
}

/// The kneading sequence (itinerary of `f(c)`) at high precision.
pub fn kneading_sequence(map: &IntervalMap, len: usize) -> Result<Vec<Symbol>> {
    let c = map.turning_point()?;
    let prec = required_precision(map, len + 1);
    let b = map.branch_index(c);
    let v = map.kind().forward_hp(b, &Float::with_val(prec, c));
    itinerary_from(map, v, len)
}
