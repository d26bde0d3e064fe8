//! Exact rational arithmetic behind the kernel-matrix assembly.
//!
//! The cap kernel entries are alternating sums whose terms can exceed the
//! result by many orders of magnitude, while the commutation invariant
//! normalizes by the (sometimes exponentially small) block norm. Double
//! precision cannot deliver entrywise-relative accuracy through that
//! cancellation, so the k-sums are evaluated exactly: the product of the two
//! 3j symbols in each term factors into a rational part and per-row /
//! per-column square roots, and the Legendre differences are exact dyadic
//! rationals of the f64 cap parameter. Each entry is rounded to f64 once.

use std::collections::HashMap;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// x = mant / 2^shift exactly.
#[derive(Debug, Clone)]
pub(crate) struct Dyadic {
    pub mant: BigInt,
    pub shift: u32,
}

impl Dyadic {
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Dyadic {
                mant: BigInt::zero(),
                shift: 0,
            };
        }
        let bits = x.to_bits();
        let negative = x < 0.0;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant_u, exp) = if biased == 0 {
            (frac, -1074i64)
        } else {
            ((1u64 << 52) | frac, biased - 1075)
        };
        let mut mant = BigInt::from(mant_u);
        if negative {
            mant = -mant;
        }
        if exp >= 0 {
            Dyadic {
                mant: mant << (exp as usize),
                shift: 0,
            }
        } else {
            Dyadic {
                mant,
                shift: (-exp) as u32,
            }
        }
    }
}

fn ldexp(x: f64, mut e: i64) -> f64 {
    let mut r = x;
    while e > 1000 {
        r *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        r *= 2f64.powi(-1000);
        e += 1000;
    }
    r * 2f64.powi(e as i32)
}

/// Round num/den to f64, correct to ~1 ulp for any operand magnitudes whose
/// ratio is representable.
pub(crate) fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    assert!(!den.is_zero());
    let negative = num.is_negative() != den.is_negative();
    let num_abs = num.abs();
    let den_abs = den.abs();
    let nb = num_abs.bits() as i64;
    let db = den_abs.bits() as i64;
    let shift = 57 - (nb - db);
    let (sn, sd) = if shift >= 0 {
        (num_abs << (shift as usize), den_abs)
    } else {
        (num_abs, den_abs << ((-shift) as usize))
    };
    let q: BigInt = (sn + (&sd >> 1)) / sd;
    let qf = q.to_f64().expect("quotient fits f64");
    let out = ldexp(qf, -shift);
    if negative {
        -out
    } else {
        out
    }
}

#[allow(dead_code)]
pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    ratio_to_f64(r.numer(), r.denom())
}

/// Growing factorial cache.
#[derive(Debug)]
pub(crate) struct Factorials {
    cache: Vec<BigInt>,
}

impl Factorials {
    pub fn new() -> Self {
        Factorials {
            cache: vec![BigInt::one()],
        }
    }

    pub fn get(&mut self, n: i64) -> BigInt {
        assert!(n >= 0, "factorial of negative argument");
        let n = n as usize;
        while self.cache.len() <= n {
            let k = self.cache.len();
            let next = self.cache[k - 1].clone() * BigInt::from(k);
            self.cache.push(next);
        }
        self.cache[n].clone()
    }
}

/// Exact Legendre values at a dyadic argument: m[k] = P_k(b) * 2^(k (s+1))
/// is an integer because 2^k P_k has integer coefficients.
pub(crate) struct ExactLegendre {
    mant: BigInt,
    s: u32,
    m: Vec<BigInt>,
}

impl ExactLegendre {
    pub fn new(b: f64, degree_max: u32) -> Self {
        let d = Dyadic::from_f64(b);
        let s = d.shift;
        let mut m: Vec<BigInt> = Vec::with_capacity(degree_max as usize + 1);
        m.push(BigInt::one());
        if degree_max >= 1 {
            // M_1 = b * 2^(s+1) = 2 mant
            m.push(d.mant.clone() << 1);
        }
        let two_pow = BigInt::one() << (2 * (s as usize + 1));
        for k in 1..degree_max as usize {
            // M_{k+1} = [ 2 (2k+1) mant M_k - k M_{k-1} 2^{2(s+1)} ] / (k+1)
            let a = BigInt::from(2 * (2 * k as i64 + 1)) * &d.mant * &m[k];
            let c = BigInt::from(k as i64) * &m[k - 1] * &two_pow;
            let num = a - c;
            let (q, r) = num_integer::Integer::div_rem(&num, &BigInt::from(k as i64 + 1));
            debug_assert!(r.is_zero(), "Legendre integer recursion not exact");
            m.push(q);
        }
        ExactLegendre { mant: d.mant, s, m }
    }

    /// P_{k-1}(b) - P_{k+1}(b) as (numerator, power-of-two denominator
    /// exponent); P_{-1} = 1 covers the k = 0 edge.
    pub fn delta_p(&self, k: u32) -> (BigInt, u64) {
        let s = self.s as u64;
        if k == 0 {
            // 1 - b = (2^s - mant) / 2^s
            let num = (BigInt::one() << self.s as usize) - &self.mant;
            return (num, s);
        }
        let k = k as usize;
        let sigma = (k as u64 + 1) * (s + 1);
        let lifted = &self.m[k - 1] << (2 * (self.s as usize + 1));
        (lifted - &self.m[k + 1], sigma)
    }

    /// P_k(b) rounded to f64.
    #[allow(dead_code)]
    pub fn value(&self, k: u32) -> f64 {
        let den = BigInt::one() << (k as usize * (self.s as usize + 1));
        ratio_to_f64(&self.m[k as usize], &den)
    }
}

/// Memoized exact 3j ingredients and kernel k-sum assembly.
pub(crate) struct KernelArithmetic {
    fact: Factorials,
    tri_delta: HashMap<(u32, u32, u32), BigRational>,
    racah: HashMap<(u32, u32, u32, i32), BigRational>,
}

impl KernelArithmetic {
    pub fn new() -> Self {
        KernelArithmetic {
            fact: Factorials::new(),
            tri_delta: HashMap::new(),
            racah: HashMap::new(),
        }
    }

    /// (j1+j2-j3)! (j1-j2+j3)! (-j1+j2+j3)! / (j1+j2+j3+1)! for (n, k, np).
    fn tri_delta(&mut self, n: u32, k: u32, np: u32) -> BigRational {
        if let Some(v) = self.tri_delta.get(&(n, k, np)) {
            return v.clone();
        }
        let (a, b, c) = (n as i64, k as i64, np as i64);
        let num = self.fact.get(a + b - c) * self.fact.get(a - b + c) * self.fact.get(-a + b + c);
        let den = self.fact.get(a + b + c + 1);
        let v = BigRational::new(num, den);
        self.tri_delta.insert((n, k, np), v.clone());
        v
    }

    /// Alternating Racah sum of the 3j symbol (n k np; m 0 -m), exact.
    fn racah_sum(&mut self, n: u32, k: u32, np: u32, m: i32) -> BigRational {
        if let Some(v) = self.racah.get(&(n, k, np, m)) {
            return v.clone();
        }
        let (j1, j2, j3) = (n as i64, k as i64, np as i64);
        let m1 = m as i64;
        let t_min = 0.max(j2 - j3 - m1).max(j1 - j3);
        let t_max = (j1 + j2 - j3).min(j1 - m1).min(j2);
        let mut s = BigRational::zero();
        for t in t_min..=t_max {
            let den = self.fact.get(t)
                * self.fact.get(j1 + j2 - j3 - t)
                * self.fact.get(j1 - m1 - t)
                * self.fact.get(j2 - t)
                * self.fact.get(j3 - j2 + m1 + t)
                * self.fact.get(j3 - j1 + t);
            let term = BigRational::new(BigInt::one(), den);
            if t % 2 == 0 {
                s += term;
            } else {
                s -= term;
            }
        }
        self.racah.insert((n, k, np, m), s.clone());
        s
    }

    /// (2n+1) (n+j)! (n-j)! (n-N)! (n+N)! — square of the per-degree scale
    /// factor pulled out of the 3j product.
    fn row_factor(&mut self, n: u32, j: i32, spin: i32) -> BigInt {
        let ni = n as i64;
        BigInt::from(2 * ni + 1)
            * self.fact.get(ni + j as i64)
            * self.fact.get(ni - j as i64)
            * self.fact.get(ni - spin as i64)
            * self.fact.get(ni + spin as i64)
    }

    /// One kernel entry K^N_{nj,n'j} of the polar-cap concentration matrix,
    /// exact until the final rounding:
    /// K = (1/2) sqrt(F_n F_n') sum_k triDelta (k!)^2 S1_k S2_k [P_{k-1}(b) - P_{k+1}(b)].
    pub fn kernel_entry(
        &mut self,
        spin: i32,
        j: i32,
        n: u32,
        np: u32,
        legendre: &ExactLegendre,
    ) -> f64 {
        let k_lo = n.abs_diff(np);
        let k_hi = n + np;
        let mut contributions: Vec<(BigRational, BigInt, u64)> = Vec::new();
        let mut sigma_max = 0u64;
        for k in k_lo..=k_hi {
            let s1 = self.racah_sum(n, k, np, j);
            if s1.is_zero() {
                continue;
            }
            let s2 = self.racah_sum(n, k, np, -spin);
            if s2.is_zero() {
                continue;
            }
            let kf = self.fact.get(k as i64);
            let q = self.tri_delta(n, k, np) * BigRational::from_integer(&kf * &kf) * s1 * s2;
            let (dp_num, sigma) = legendre.delta_p(k);
            if dp_num.is_zero() {
                continue;
            }
            sigma_max = sigma_max.max(sigma);
            contributions.push((q, dp_num, sigma));
        }
        if contributions.is_empty() {
            return 0.0;
        }
        let mut acc = BigRational::zero();
        for (q, dp_num, sigma) in contributions {
            let lifted = dp_num << ((sigma_max - sigma) as usize);
            acc += q * BigRational::from_integer(lifted);
        }
        if acc.is_zero() {
            return 0.0;
        }
        // K^2 = F_n F_n' acc^2 / (4 acc_den^2 2^(2 sigma_max)); sign from acc
        let fn_row = self.row_factor(n, j, spin);
        let fn_col = self.row_factor(np, j, spin);
        let num = fn_row * fn_col * acc.numer() * acc.numer();
        let den: BigInt = (acc.denom() * acc.denom()) << (2 * sigma_max as usize + 2);
        let magnitude = ratio_to_f64(&num, &den).sqrt();
        if acc.numer().sign() == Sign::Minus {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// Wigner small-d element d^n_{mp,m} at t = cos(theta), computed exactly: the
/// half-angle powers reduce to rationals in (1±t)/2, up to one common
/// sqrt(1-t^2)/2 factor when mp-m is odd. Reference oracle for the recursion.
pub(crate) fn wigner_d_exact(n: u32, mp: i32, m: i32, t: f64) -> f64 {
    let ni = n as i64;
    let mpi = mp as i64;
    let mi = m as i64;
    assert!(mpi.abs() <= ni && mi.abs() <= ni);
    let mut fact = Factorials::new();
    let d = Dyadic::from_f64(t);
    let s = d.shift as usize;
    // (1+t)/2 = ca_num / 2^(s+1), (1-t)/2 = sb_num / 2^(s+1)
    let ca_num = (BigInt::one() << s) + &d.mant;
    let sb_num = (BigInt::one() << s) - &d.mant;
    let mu = mpi - mi;
    let k_min = 0.max(mi - mpi);
    let k_max = (ni + mi).min(ni - mpi);
    let half_den = BigInt::one() << (s + 1);
    let mut acc = BigRational::zero();
    for k in k_min..=k_max {
        let pow_c = 2 * ni - mpi + mi - 2 * k;
        let pow_s = mpi - mi + 2 * k;
        debug_assert!(pow_c >= 0 && pow_s >= 0);
        let (ia, ib) = if mu.rem_euclid(2) == 0 {
            (pow_c / 2, pow_s / 2)
        } else {
            ((pow_c - 1) / 2, (pow_s - 1) / 2)
        };
        let den =
            fact.get(ni + mi - k) * fact.get(k) * fact.get(mpi - mi + k) * fact.get(ni - mpi - k);
        let mut term = BigRational::new(
            num_traits::pow::pow(ca_num.clone(), ia as usize)
                * num_traits::pow::pow(sb_num.clone(), ib as usize),
            num_traits::pow::pow(half_den.clone(), (ia + ib) as usize) * den,
        );
        if (mpi - mi + k).rem_euclid(2) != 0 {
            term = -term;
        }
        acc += term;
    }
    if acc.is_zero() {
        return 0.0;
    }
    let f_big = fact.get(ni + mpi) * fact.get(ni - mpi) * fact.get(ni + mi) * fact.get(ni - mi);
    let mut num = &f_big * acc.numer() * acc.numer();
    let mut den = acc.denom() * acc.denom();
    if mu.rem_euclid(2) != 0 {
        num *= &ca_num * &sb_num;
        den <<= 2 * (s + 1);
    }
    let magnitude = ratio_to_f64(&num, &den).sqrt();
    if acc.numer().sign() == Sign::Minus {
        -magnitude
    } else {
        magnitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_round_trips() {
        for x in [0.0, 1.0, -0.5, 0.766044443118978, 1e-300, -3.7e5] {
            let d = Dyadic::from_f64(x);
            let den = BigInt::one() << (d.shift as usize);
            assert_eq!(ratio_to_f64(&d.mant, &den), x);
        }
    }

    #[test]
    fn ratio_to_f64_basics() {
        assert_eq!(ratio_to_f64(&BigInt::from(1), &BigInt::from(2)), 0.5);
        assert_eq!(ratio_to_f64(&BigInt::from(-3), &BigInt::from(4)), -0.75);
        assert_eq!(ratio_to_f64(&BigInt::zero(), &BigInt::from(7)), 0.0);
        let third = ratio_to_f64(&BigInt::from(1), &BigInt::from(3));
        assert!((third - 1.0 / 3.0).abs() < 1e-16);
        // huge operands with a moderate ratio
        let big = BigInt::one() << 4000usize;
        let r = ratio_to_f64(&(&big * BigInt::from(7)), &(&big * BigInt::from(8)));
        assert_eq!(r, 0.875);
    }

    #[test]
    fn exact_legendre_matches_recursion() {
        let b = 0.766044443118978f64;
        let ex = ExactLegendre::new(b, 41);
        let col = crate::special_functions::legendre_column(41, b).unwrap();
        for k in 0..=41u32 {
            let diff = (ex.value(k) - col.value(k)).abs();
            assert!(diff < 1e-13, "P_{k} mismatch {diff:e}");
        }
        for k in 1..=20u32 {
            let (num, sigma) = ex.delta_p(k);
            let den = BigInt::one() << (sigma as usize);
            let got = ratio_to_f64(&num, &den);
            let want = col.value(k - 1) - col.value(k + 1);
            assert!((got - want).abs() < 1e-13);
        }
        let (num0, sigma0) = ex.delta_p(0);
        let den0 = BigInt::one() << (sigma0 as usize);
        assert!((ratio_to_f64(&num0, &den0) - (1.0 - b)).abs() < 1e-16);
    }

    #[test]
    fn exact_wigner_d_small_cases() {
        let t = 0.3f64;
        // d^1_{0,0} = t, d^1_{1,1} = (1+t)/2, d^1_{1,0} = -sin(theta)/sqrt(2)
        assert!((wigner_d_exact(1, 0, 0, t) - t).abs() < 1e-15);
        assert!((wigner_d_exact(1, 1, 1, t) - (1.0 + t) / 2.0).abs() < 1e-15);
        let sin_theta = (1.0f64 - t * t).sqrt();
        assert!((wigner_d_exact(1, 1, 0, t) + sin_theta / 2.0f64.sqrt()).abs() < 1e-15);
        // d^2_{0,0} = P_2(t)
        assert!((wigner_d_exact(2, 0, 0, t) - (1.5 * t * t - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn exact_wigner_d_matches_f64_path_moderate_degree() {
        let table = crate::numerics::LogFactorialTable::new(100);
        let p = crate::spin_harmonics::SpinPoint::new(0.41, 0.0).unwrap();
        for n in [3u32, 6, 9] {
            for mp in -(n as i32)..=n as i32 {
                for m in [-2i32, 0, 1] {
                    if m.unsigned_abs() > n {
                        continue;
                    }
                    let exact = wigner_d_exact(n, mp, m, 0.41);
                    let direct = crate::spin_harmonics::spin_y_direct(-m, n, mp, p, &table)
                        .unwrap()
                        .re
                        / ((2.0 * n as f64 + 1.0) / (4.0 * std::f64::consts::PI)).sqrt()
                        * if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    assert!(
                        (exact - direct).abs() < 1e-11,
                        "d mismatch at n={n} mp={mp} m={m}: {exact} vs {direct}"
                    );
                }
            }
        }
    }
}
