//! Minimal double-double arithmetic (error-free transforms).
//!
//! The transform calculus propagates Taylor coefficients through residual
//! recursions whose higher coefficients are numerically expanding: a chain
//! of residual operators at one common rate amplifies injected rounding by
//! a constant factor per level. Plain f64 loses a digit every few levels;
//! carrying the coefficients as unevaluated (hi, lo) sums keeps the
//! injection near 1e-32 and pushes the usable depth past anything the
//! queueing recursions ask for.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
pub(crate) const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

impl Dd {
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd {
        hi: p,
        lo: a.mul_add(b, -p),
    }
}

pub(crate) fn add(x: Dd, y: Dd) -> Dd {
    let s = two_sum(x.hi, y.hi);
    let t = two_sum(x.lo, y.lo);
    let r = quick_two_sum(s.hi, s.lo + t.hi);
    quick_two_sum(r.hi, r.lo + t.lo)
}

pub(crate) fn neg(x: Dd) -> Dd {
    Dd { hi: -x.hi, lo: -x.lo }
}

pub(crate) fn sub(x: Dd, y: Dd) -> Dd {
    add(x, neg(y))
}

pub(crate) fn mul(x: Dd, y: Dd) -> Dd {
    let p = two_prod(x.hi, y.hi);
    quick_two_sum(p.hi, p.lo + (x.hi * y.lo + x.lo * y.hi))
}

pub(crate) fn div(x: Dd, y: Dd) -> Dd {
    let q1 = x.hi / y.hi;
    let r1 = sub(x, mul(Dd::from_f64(q1), y));
    let q2 = r1.hi / y.hi;
    let r2 = sub(r1, mul(Dd::from_f64(q2), y));
    let q3 = r2.hi / y.hi;
    add(quick_two_sum(q1, q2), Dd::from_f64(q3))
}

/// ln 2 to double-double precision.
const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

/// `exp(x)` to ~1e-32 relative accuracy (argument reduction by `ln 2`,
/// Taylor tail in double-double, exact power-of-two scaling).
///
/// The transform jets must seed transcendental factors at this accuracy:
/// an f64-rounded seed represents a function off the manifold of valid
/// transforms by ~1e-16, and deep residual recursions amplify exactly that
/// inconsistency.
pub(crate) fn exp(x: Dd) -> Dd {
    if x.hi < -700.0 {
        return ZERO;
    }
    if x.hi > 700.0 {
        return Dd::from_f64(f64::INFINITY);
    }
    let k = (x.hi / LN2.hi).round();
    let r = sub(x, mul(Dd::from_f64(k), LN2));
    let mut term = ONE;
    let mut acc = ONE;
    for j in 1..60 {
        term = div(mul(term, r), Dd::from_f64(f64::from(j)));
        acc = add(acc, term);
        if term.hi.abs() < 1e-35 * acc.hi.abs() {
            break;
        }
    }
    let p = 2.0_f64.powi(k as i32);
    Dd {
        hi: acc.hi * p,
        lo: acc.lo * p,
    }
}
