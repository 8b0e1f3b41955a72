//! Exact tower of tent(√2) over Q(√2).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

/// `a + b√2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Q2 {
    pub a: BigRational,
    pub b: BigRational,
}

impl Q2 {
    pub fn rat(n: i64, d: i64) -> Q2 {
        Q2 {
            a: BigRational::new(BigInt::from(n), BigInt::from(d)),
            b: BigRational::zero(),
        }
    }

    pub fn sub(&self, o: &Q2) -> Q2 {
        Q2 {
            a: &self.a - &o.a,
            b: &self.b - &o.b,
        }
    }

    /// `√2 · self`.
    pub fn mul_sqrt2(&self) -> Q2 {
        Q2 {
            a: &self.b * BigRational::from_integer(BigInt::from(2)),
            b: self.a.clone(),
        }
    }

    pub fn signum(&self) -> i32 {
        let sa = sign(&self.a);
        let sb = sign(&self.b);
        if sa == 0 || sb == 0 || sa == sb {
            return if sa != 0 { sa } else { sb };
        }
        // Opposite signs: compare a² with 2b².
        let a2 = &self.a * &self.a;
        let b2 = &self.b * &self.b * BigRational::from_integer(BigInt::from(2));
        match a2.cmp(&b2) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }

    pub fn cmp(&self, o: &Q2) -> Ordering {
        self.sub(o).signum().cmp(&0)
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap() + self.b.to_f64().unwrap() * std::f64::consts::SQRT_2
    }
}

fn sign(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

fn min(a: &Q2, b: &Q2) -> Q2 {
    if a.cmp(b) == Ordering::Greater {
        b.clone()
    } else {
        a.clone()
    }
}

fn max(a: &Q2, b: &Q2) -> Q2 {
    if a.cmp(b) == Ordering::Less {
        b.clone()
    } else {
        a.clone()
    }
}

/// `tent(√2)`: `√2 x` on `[0, ½]`, `√2 (1 − x)` on `[½, 1]`.
fn tent(x: &Q2, right: bool) -> Q2 {
    if right {
        Q2::rat(1, 1).sub(x).mul_sqrt2()
    } else {
        x.mul_sqrt2()
    }
}

/// Node intervals and depths of the tower of tent(√2) up to `cap`, built by
/// breadth-first search with exact identification of equal intervals.
pub fn tent_sqrt2_tower(cap: usize) -> Vec<(Q2, Q2, usize)> {
    let half = Q2::rat(1, 2);
    let mut nodes = vec![(Q2::rat(0, 1), Q2::rat(1, 1), 0usize)];
    let mut next = 0;
    while next < nodes.len() {
        let (lo, hi, depth) = nodes[next].clone();
        next += 1;
        if depth >= cap {
            continue;
        }
        for right in [false, true] {
            let (plo, phi) = if right {
                (max(&lo, &half), hi.clone())
            } else {
                (lo.clone(), min(&hi, &half))
            };
            if plo.cmp(&phi) != Ordering::Less {
                continue;
            }
            let (u, v) = (tent(&plo, right), tent(&phi, right));
            let (ilo, ihi) = (min(&u, &v), max(&u, &v));
            if !nodes.iter().any(|(a, b, _)| *a == ilo && *b == ihi) {
                nodes.push((ilo, ihi, depth + 1));
            }
        }
    }
    nodes
}
