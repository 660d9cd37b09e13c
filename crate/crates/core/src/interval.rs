//! Closed real intervals with outward-safe arithmetic for bounding.
//!
//! Endpoints may be infinite. Division by an interval with zero in its
//! interior yields the whole real line; a zero endpoint is treated as a
//! pole and excluded.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "{lo} > {hi}");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn entire() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn powi(&self, e: u32) -> Interval {
        match e {
            0 => Interval::point(1.0),
            1 => *self,
            _ => {
                let a = self.lo.powi(e as i32);
                let b = self.hi.powi(e as i32);
                if e % 2 == 1 || self.lo >= 0.0 {
                    Interval { lo: a, hi: b }
                } else if self.hi <= 0.0 {
                    Interval { lo: b, hi: a }
                } else {
                    Interval {
                        lo: 0.0,
                        hi: a.max(b),
                    }
                }
            }
        }
    }

    fn sanitize(self) -> Interval {
        if self.lo.is_nan() || self.hi.is_nan() {
            Interval::entire()
        } else {
            self
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
        .sanitize()
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
        .sanitize()
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

fn mul_end(a: f64, b: f64) -> f64 {
    // 0 * inf is taken as 0 for bounding purposes.
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [
            mul_end(self.lo, rhs.lo),
            mul_end(self.lo, rhs.hi),
            mul_end(self.hi, rhs.lo),
            mul_end(self.hi, rhs.hi),
        ];
        Interval {
            lo: c.iter().copied().fold(f64::INFINITY, f64::min),
            hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
        .sanitize()
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        let recip = if rhs.lo > 0.0 || rhs.hi < 0.0 {
            Interval {
                lo: 1.0 / rhs.hi,
                hi: 1.0 / rhs.lo,
            }
        } else if rhs.lo == 0.0 && rhs.hi > 0.0 {
            // The pole itself is excluded; only positive divisors remain.
            Interval {
                lo: 1.0 / rhs.hi,
                hi: f64::INFINITY,
            }
        } else if rhs.hi == 0.0 && rhs.lo < 0.0 {
            Interval {
                lo: f64::NEG_INFINITY,
                hi: 1.0 / rhs.lo,
            }
        } else {
            return Interval::entire();
        };
        self * recip
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = Interval::new(1.0, 2.0);
        let b = Interval::new(-1.0, 3.0);
        assert_eq!(a + b, Interval::new(0.0, 5.0));
        assert_eq!(a - b, Interval::new(-2.0, 3.0));
        assert_eq!(a * b, Interval::new(-2.0, 6.0));
        assert_eq!(b.powi(2), Interval::new(0.0, 9.0));
        assert_eq!(Interval::new(-3.0, -1.0).powi(2), Interval::new(1.0, 9.0));
        assert_eq!(b.powi(3), Interval::new(-1.0, 27.0));
        assert_eq!(a / b, Interval::entire());
        assert_eq!(a / Interval::new(2.0, 4.0), Interval::new(0.25, 1.0));
        assert_eq!(a / Interval::new(0.0, 2.0), Interval::new(0.5, f64::INFINITY));
        assert_eq!(a / Interval::new(-2.0, 0.0), Interval::new(f64::NEG_INFINITY, -0.5));
        assert_eq!(b / Interval::new(0.0, 2.0), Interval::entire());
        assert_eq!(a / Interval::point(0.0), Interval::entire());
    }

    #[test]
    fn infinities_do_not_produce_nan() {
        let e = Interval::entire();
        let z = Interval::point(0.0);
        assert_eq!(e * z, Interval::point(0.0));
        let s = e + e;
        assert_eq!(s, Interval::entire());
        let d = e - e;
        assert_eq!(d, Interval::entire());
    }
}
