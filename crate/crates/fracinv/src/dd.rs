//! Double-double arithmetic (~31 significant digits) for the
//! extended-precision Mittag-Leffler series and the high-accuracy gamma
//! path. Only the operations those two consumers need are implemented.

/// An unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[allow(clippy::approx_constant)] // hi/lo split of ln 2, not an approximation
const LN2: Dd = Dd {
    hi: 0.693_147_180_559_945_3,
    lo: 2.319_046_813_846_299_6e-17,
};

const HALF_LN_2PI: Dd = Dd {
    hi: 0.918_938_533_204_672_8,
    lo: -3.878_294_158_067_241_4e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from_f64(q1)));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul(Dd::from_f64(q2)));
        let q3 = r.hi / other.hi;
        let (s, e) = quick_two_sum(q1, q2);
        let (hi, lo) = quick_two_sum(s, e + q3);
        Dd { hi, lo }
    }

    pub fn scale(self, k: f64) -> Dd {
        self.mul(Dd::from_f64(k))
    }

    /// e^self for |self| up to ~700.
    pub fn exp(self) -> Dd {
        if self.hi < -709.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self.sub(LN2.scale(k));
        // Taylor on |r| <= ln2/2.
        let mut sum = Dd::ONE.add(r);
        let mut term = r;
        for n in 2..40 {
            term = term.mul(r).div(Dd::from_f64(n as f64));
            sum = sum.add(term);
            if term.hi.abs() < 1e-35 * sum.hi.abs() {
                break;
            }
        }
        // Scale by 2^k exactly.
        let p = libm_exp2(k);
        Dd {
            hi: sum.hi * p,
            lo: sum.lo * p,
        }
    }

    /// Natural log for positive self; one Newton step from the f64 seed.
    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        let y0 = Dd::from_f64(self.hi.ln());
        // y1 = y0 + self * e^{-y0} - 1
        y0.add(self.mul(y0.neg().exp())).sub(Dd::ONE)
    }
}

#[inline]
fn libm_exp2(k: f64) -> f64 {
    // k is an integer-valued f64 within the exponent range here.
    f64::powi(2.0, k as i32)
}

/// Stirling coefficients B_{2n} / ((2n)(2n-1)) as exact rationals.
const STIRLING: &[(f64, f64)] = &[
    (1.0, 12.0),
    (-1.0, 360.0),
    (1.0, 1260.0),
    (-1.0, 1680.0),
    (1.0, 1188.0),
    (-691.0, 360360.0),
    (1.0, 156.0),
    (-3617.0, 122400.0),
    (43867.0, 244188.0),
    (-174611.0, 125400.0),
    (854513.0, 63756.0),
    (-236364091.0, 1506960.0),
];

/// ln Γ(x) for x >= 32 via the Stirling series.
fn ln_gamma_stirling(x: Dd) -> Dd {
    let ln_x = x.ln();
    let mut acc = x
        .sub(Dd::from_f64(0.5))
        .mul(ln_x)
        .sub(x)
        .add(HALF_LN_2PI);
    let x2 = x.mul(x);
    let mut xp = x; // x^{2n-1}
    for (num, den) in STIRLING {
        acc = acc.add(Dd::from_f64(*num).div(Dd::from_f64(*den).mul(xp)));
        xp = xp.mul(x2);
    }
    acc
}

/// Γ(x) for x > 0 in double-double precision. Overflows to +inf in the
/// hi word for x beyond ~171.6, like the f64 gamma.
pub(crate) fn gamma_dd(x: Dd) -> Dd {
    debug_assert!(x.hi > 0.0);
    if x.hi >= 32.0 {
        return ln_gamma_stirling(x).exp();
    }
    // Push the argument above the Stirling threshold:
    // Γ(x) = Γ(x+m) / (x (x+1) ... (x+m-1)).
    let m = (32.0 - x.hi).ceil();
    let mut prod = Dd::ONE;
    let mut i = 0.0;
    while i < m {
        prod = prod.mul(x.add(Dd::from_f64(i)));
        i += 1.0;
    }
    ln_gamma_stirling(x.add(Dd::from_f64(m)))
        .sub(prod.ln())
        .exp()
}

/// 1/Γ(x) for x > 0 in double-double precision.
pub(crate) fn recip_gamma_dd(x: Dd) -> Dd {
    let g = gamma_dd(x);
    if !g.hi.is_finite() {
        return Dd::ZERO;
    }
    Dd::ONE.div(g)
}
