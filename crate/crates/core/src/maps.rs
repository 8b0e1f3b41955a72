//! Piecewise-monotone interval maps.
//!
//! A map is stored as an ordered list of monotone branches tiling its domain,
//! together with the turning points between them. The built-in families
//! (logistic, sine, tent) all live on `[0, 1]` with the turning point `1/2`
//! and have closed-form forward, derivative and inverse evaluators.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Distance below which an orbit point is treated as an exact critical hit.
pub const CRITICAL_PROXIMITY: f64 = 1e-13;

/// Iterates this far outside the domain are clamped back; anything further is an error.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyId {
    Logistic,
    Sine,
    Tent,
}

impl FamilyId {
    pub fn name(self) -> &'static str {
        match self {
            FamilyId::Logistic => "logistic",
            FamilyId::Sine => "sine",
            FamilyId::Tent => "tent",
        }
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" => Ok(FamilyId::Logistic),
            "sine" => Ok(FamilyId::Sine),
            "tent" => Ok(FamilyId::Tent),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// Serializable map description, `{"family": "logistic", "param": 4.0}`.
///
/// The compact text form is `family[:param]`, e.g. `logistic:4`, `tent:1.9`, `sine`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub family: FamilyId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
}

impl MapSpec {
    pub fn new(family: FamilyId, param: Option<f64>) -> Self {
        MapSpec { family, param }
    }

    pub fn build(&self) -> Result<IntervalMap> {
        make_family(self.family, self.param)
    }
}

impl FromStr for MapSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((name, p)) => {
                let p = p.trim();
                let value = match p {
                    "sqrt2" | "sqrt(2)" => std::f64::consts::SQRT_2,
                    _ => p
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad map parameter `{p}`")))?,
                };
                (name, Some(value))
            }
            None => (s, None),
        };
        Ok(MapSpec {
            family: name.parse()?,
            param,
        })
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param {
            Some(p) => write!(f, "{}:{}", self.family.name(), p),
            None => f.write_str(self.family.name()),
        }
    }
}

/// Closed-form family with its parameter. Shared by every branch of a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kind {
    Logistic(f64),
    Sine,
    Tent(f64),
}

/// A point of `[0, 1]` held as its distance to the nearer endpoint. Points
/// just below 1 keep their relative precision, so an orbit folding over the
/// turning point does not round onto 1 and then stick at the fixed point 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    upper: bool,
    d: f64,
}

impl UnitPoint {
    pub fn new(x: f64) -> Self {
        if x > 0.5 {
            UnitPoint {
                upper: true,
                d: 1.0 - x,
            }
        } else {
            UnitPoint { upper: false, d: x }
        }
    }

    pub fn value(self) -> f64 {
        if self.upper {
            1.0 - self.d
        } else {
            self.d
        }
    }

    /// `x − 1/2`.
    pub fn offset(self) -> f64 {
        if self.upper {
            0.5 - self.d
        } else {
            self.d - 0.5
        }
    }

    /// `min(x, 1 − x)`.
    pub fn distance_to_boundary(self) -> f64 {
        self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Increasing,
    Decreasing,
}

/// One monotone lap `ξ_i` of the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub index: usize,
    pub domain: Interval,
    pub image: Interval,
    pub orientation: Orientation,
    pub(crate) kind: Kind,
}

impl Branch {
    /// The branch formula, used as the one-sided limit at the branch endpoints.
    pub fn forward(&self, x: f64) -> f64 {
        match (self.kind, self.index) {
            (Kind::Logistic(a), _) => a * x * (1.0 - x),
            (Kind::Sine, 0) => (PI * x).sin(),
            (Kind::Sine, _) => (PI * (1.0 - x)).sin(),
            (Kind::Tent(s), 0) => s * x,
            (Kind::Tent(s), _) => s * (1.0 - x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match (self.kind, self.index) {
            // 1/2 - x is exact for x in [1/4, 1], which keeps the relative
            // accuracy of Df near the turning point.
            (Kind::Logistic(a), _) => 2.0 * a * (0.5 - x),
            (Kind::Sine, _) => PI * (PI * (0.5 - x)).sin(),
            (Kind::Tent(s), 0) => s,
            (Kind::Tent(s), _) => -s,
        }
    }

    /// Inverse of the branch on its image; `None` outside the image.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        if !self.image.contains(y) {
            return None;
        }
        Some(match (self.kind, self.index) {
            (Kind::Logistic(a), i) => {
                let s = ((a - 4.0 * y) / a).max(0.0).sqrt();
                if i == 0 {
                    (2.0 * y / a) / (1.0 + s)
                } else {
                    0.5 * (1.0 + s)
                }
            }
            (Kind::Sine, i) => {
                // acos keeps full relative accuracy of the offset from 1/2 near the fold.
                let offset = if y > 0.5 { y.acos() / PI } else { 0.5 - y.asin() / PI };
                if i == 0 {
                    0.5 - offset
                } else {
                    0.5 + offset
                }
            }
            (Kind::Tent(s), 0) => y / s,
            (Kind::Tent(s), _) => 1.0 - y / s,
        })
    }
}

/// A turning point and its order `ℓ(c)`; `None` for non-smooth turning points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: f64,
    pub order: Option<f64>,
}

/// A piecewise-monotone self-map of a compact interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMap {
    spec: MapSpec,
    kind: Kind,
    domain: Interval,
    branches: Vec<Branch>,
    critical: Vec<CriticalPoint>,
    deriv_sup: f64,
    smooth: bool,
}

/// Build one of the built-in families on `[0, 1]`.
pub fn make_family(family: FamilyId, param: Option<f64>) -> Result<IntervalMap> {
    let (kind, top, order, deriv_sup, smooth) = match family {
        FamilyId::Logistic => {
            let a = param.ok_or(Error::ParamOutOfRange {
                family: "logistic",
                param: f64::NAN,
                expected: "a parameter a in (0, 4] is required",
            })?;
            if !(a > 0.0 && a <= 4.0) {
                return Err(Error::ParamOutOfRange {
                    family: "logistic",
                    param: a,
                    expected: "a in (0, 4]",
                });
            }
            (Kind::Logistic(a), a / 4.0, Some(2.0), a, true)
        }
        FamilyId::Sine => {
            if let Some(p) = param {
                return Err(Error::ParamOutOfRange {
                    family: "sine",
                    param: p,
                    expected: "no parameter",
                });
            }
            (Kind::Sine, 1.0, Some(2.0), PI, true)
        }
        FamilyId::Tent => {
            let s = param.ok_or(Error::ParamOutOfRange {
                family: "tent",
                param: f64::NAN,
                expected: "a slope s in (1, 2] is required",
            })?;
            if !(s > 1.0 && s <= 2.0) {
                return Err(Error::ParamOutOfRange {
                    family: "tent",
                    param: s,
                    expected: "slope s in (1, 2]",
                });
            }
            (Kind::Tent(s), s / 2.0, None, s, false)
        }
    };
    let image = Interval::new(0.0, top);
    let branches = vec![
        Branch {
            index: 0,
            domain: Interval::new(0.0, 0.5),
            image,
            orientation: Orientation::Increasing,
            kind,
        },
        Branch {
            index: 1,
            domain: Interval::new(0.5, 1.0),
            image,
            orientation: Orientation::Decreasing,
            kind,
        },
    ];
    Ok(IntervalMap {
        spec: MapSpec { family, param },
        kind,
        domain: Interval::unit(),
        branches,
        critical: vec![CriticalPoint { location: 0.5, order }],
        deriv_sup,
        smooth,
    })
}

impl IntervalMap {
    pub fn spec(&self) -> MapSpec {
        self.spec
    }

    pub(crate) fn kind(&self) -> Kind {
        self.kind
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch(&self, index: usize) -> Result<&Branch> {
        self.branches.get(index).ok_or(Error::NoSuchBranch {
            index,
            count: self.branches.len(),
        })
    }

    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical
    }

    /// `L = sup |Df|`.
    pub fn deriv_sup(&self) -> f64 {
        self.deriv_sup
    }

    /// False for the tent family, which is only piecewise linear.
    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn is_unimodal(&self) -> bool {
        self.branches.len() == 2 && self.critical.len() == 1
    }

    /// The turning point of a unimodal map.
    pub fn turning_point(&self) -> Result<f64> {
        if !self.is_unimodal() {
            return Err(Error::NotUnimodal);
        }
        Ok(self.critical[0].location)
    }

    /// Index of the branch whose domain contains `x`. Turning points belong to
    /// the branch on their left; both one-sided formulas agree there.
    pub fn branch_index(&self, x: f64) -> usize {
        self.branches
            .iter()
            .position(|b| x <= b.domain.hi)
            .unwrap_or(self.branches.len() - 1)
    }

    /// Index of the critical point within [`CRITICAL_PROXIMITY`] of `x`, if any.
    pub fn critical_index(&self, x: f64) -> Option<usize> {
        self.critical
            .iter()
            .position(|c| (x - c.location).abs() < CRITICAL_PROXIMITY)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.branches[self.branch_index(x)].forward(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.branches[self.branch_index(x)].derivative(x)
    }

    pub fn inverse(&self, branch: usize, y: f64) -> Result<Option<f64>> {
        Ok(self.branch(branch)?.inverse(y))
    }

    /// Clamp floating-point spill at the domain boundary.
    pub(crate) fn clamp(&self, value: f64, index: usize) -> Result<f64> {
        let Interval { lo, hi } = self.domain;
        if value >= lo && value <= hi {
            Ok(value)
        } else if value > hi && value - hi < CLAMP_TOLERANCE {
            Ok(hi)
        } else if value < lo && lo - value < CLAMP_TOLERANCE {
            Ok(lo)
        } else {
            Err(Error::Escaped { index, value })
        }
    }

    fn check_in_domain(&self, x: f64) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            })
        }
    }

    /// One step in the split representation; never leaves `[0, 1]`.
    pub fn unit_step(&self, p: UnitPoint) -> UnitPoint {
        let m = p.d;
        let u = p.offset();
        let y = match self.kind {
            Kind::Logistic(a) => a * m * (1.0 - m),
            Kind::Sine => (PI * m).sin(),
            Kind::Tent(t) => t * m,
        };
        if y <= 0.5 {
            return UnitPoint { upper: false, d: y };
        }
        // 1 − f(x) from the offset, without cancellation.
        let far = match self.kind {
            Kind::Logistic(a) => (1.0 - a / 4.0) + a * u * u,
            Kind::Sine => {
                let h = (0.5 * PI * u).sin();
                2.0 * h * h
            }
            Kind::Tent(t) => (1.0 - t / 2.0) + t * u.abs(),
        };
        UnitPoint {
            upper: true,
            d: far.max(0.0),
        }
    }

    /// `log|Df(x)|` from the offset `x − 1/2`; `None` at the turning point.
    pub fn unit_log_abs_deriv(&self, p: UnitPoint) -> Option<f64> {
        let u = p.offset();
        let d = match self.kind {
            Kind::Logistic(a) => 2.0 * a * u.abs(),
            Kind::Sine => PI * (PI * u).sin().abs(),
            Kind::Tent(t) => t,
        };
        (d != 0.0).then(|| d.ln())
    }

    /// One step of the orbit with boundary clamping; `index` labels the produced iterate.
    pub fn step(&self, x: f64, index: usize) -> Result<f64> {
        self.clamp(self.eval(x), index)
    }

    /// `[x, f(x), …, fⁿ(x)]`.
    pub fn orbit(&self, x: f64, n: usize) -> Result<Vec<f64>> {
        self.check_in_domain(x)?;
        let mut out = Vec::with_capacity(n + 1);
        out.push(x);
        let mut y = UnitPoint::new(x);
        for _ in 0..n {
            y = self.unit_step(y);
            out.push(y.value());
        }
        Ok(out)
    }

    /// `log|Df(x)|`, failing on an exact zero of the derivative.
    pub fn log_abs_deriv(&self, x: f64, index: usize) -> Result<f64> {
        let d = self.deriv(x).abs();
        if d == 0.0 {
            Err(Error::CriticalHit { index })
        } else {
            Ok(d.ln())
        }
    }

    /// `Σ_{i<n} log|Df(fⁱ(x))|`, accumulated term by term in log space.
    pub fn log_deriv_sum(&self, x: f64, n: usize) -> Result<f64> {
        self.check_in_domain(x)?;
        self.unit_log_deriv_sum(UnitPoint::new(x), n).map(|(s, _)| s)
    }

    /// Log-derivative sum over `n` steps from `p`, with the point reached.
    pub fn unit_log_deriv_sum(&self, p: UnitPoint, n: usize) -> Result<(f64, UnitPoint)> {
        let mut sum = 0.0;
        let mut y = p;
        for i in 0..n {
            sum += self.unit_log_abs_deriv(y).ok_or(Error::CriticalHit { index: i })?;
            y = self.unit_step(y);
        }
        Ok((sum, y))
    }

    /// Preimage of `j ∩ image(ξ_branch)` under the given branch.
    pub fn pullback(&self, branch: usize, j: &Interval) -> Result<Interval> {
        let b = self.branch(branch)?;
        let k = j.intersect(&b.image).ok_or(Error::EmptyPullback {
            branch,
            lo: j.lo,
            hi: j.hi,
        })?;
        // Endpoints of k lie in the image, so both inverses exist.
        let u = b.inverse(k.lo).expect("endpoint inside branch image");
        let v = b.inverse(k.hi).expect("endpoint inside branch image");
        Ok(Interval::new(u, v))
    }

    /// Pull a point back along a branch sequence: returns `x` with
    /// `f^{|w|}(x) = y` and `fⁱ(x) ∈ ξ_{w[i]}`.
    pub fn pullback_point(&self, branches: &[usize], y: f64) -> Result<f64> {
        let mut x = y;
        for &b in branches.iter().rev() {
            x = self.branch(b)?.inverse(x).ok_or(Error::EmptyPullback {
                branch: b,
                lo: x,
                hi: x,
            })?;
        }
        Ok(x)
    }
}
