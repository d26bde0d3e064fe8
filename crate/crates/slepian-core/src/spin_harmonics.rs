//! Spin-weighted spherical harmonics.
//!
//! A harmonic of spin weight `N`, degree `n`, and order `j` exists for
//! n >= n_j := max(|N|, |j|) and takes the form f(t) e^{i j phi} on the
//! sphere without its poles. Production evaluation seeds at the lowest
//! admissible degree with a finite half-angle sum and walks upward in degree
//! with the three-term recursion; a direct Wigner-d evaluation through
//! log-factorials is kept as a cross-check path. The first-order identities
//! (derivative recursion, raising/lowering operators, Christoffel–Darboux)
//! are exposed as callable oracles for the test suites.

use num_complex::Complex64;

use crate::numerics::LogFactorialTable;
use crate::{invalid, Result};

/// Point on the unit sphere away from the poles: t = cos(colatitude) with
/// |t| < 1 strictly, and longitude phi normalized into [0, 2pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinPoint {
    t: f64,
    phi: f64,
}

impl SpinPoint {
    pub fn new(t: f64, phi: f64) -> Result<Self> {
        if !t.is_finite() || t.abs() >= 1.0 {
            return Err(invalid(format!(
                "spin harmonics are defined away from the poles: need |t| < 1, got t={t}"
            )));
        }
        if !phi.is_finite() {
            return Err(invalid("longitude must be finite"));
        }
        let tau = 2.0 * std::f64::consts::PI;
        let mut phi = phi.rem_euclid(tau);
        if phi >= tau {
            phi = 0.0;
        }
        Ok(SpinPoint { t, phi })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// sin(colatitude) = sqrt(1 - t^2), positive away from the poles.
    pub fn sin_theta(&self) -> f64 {
        ((1.0 - self.t) * (1.0 + self.t)).sqrt()
    }
}

/// Lowest admissible degree for spin weight `spin` and order `j`.
pub fn degree_min(spin: i32, j: i32) -> u32 {
    spin.unsigned_abs().max(j.unsigned_abs())
}

/// Recursion coefficient alpha^N_{n,j} =
/// sqrt((n-N)(n+N))/n * sqrt((n-j)(n+j) / ((2n-1)(2n+1))).
///
/// Vanishes when n = |N| or n = |j|; positive for n > max(|N|, |j|).
pub fn alpha(spin: i32, n: u32, j: i32) -> Result<f64> {
    if n == 0 || n < degree_min(spin, j) {
        return Err(invalid(format!(
            "alpha requires n >= max(|N|, |j|, 1), got N={spin}, n={n}, j={j}"
        )));
    }
    let nf = n as f64;
    let sf = spin as f64;
    let jf = j as f64;
    let spin_part = ((nf - sf) * (nf + sf)).sqrt() / nf;
    let order_part = ((nf - jf) * (nf + jf) / ((2.0 * nf - 1.0) * (2.0 * nf + 1.0))).sqrt();
    Ok(spin_part * order_part)
}

/// Finite half-angle sum for the spin-weighted harmonic of degree `n`.
/// The longitude dependence collapses to e^{i j phi}; each remaining term is
/// a signed product of powers of sqrt((1 +- t)/2) over factorials.
fn spin_y_half_angle_sum(spin: i32, n: u32, j: i32, p: SpinPoint) -> Complex64 {
    let ni = n as i64;
    let si = spin as i64;
    let ji = j as i64;
    debug_assert!(ni >= si.abs() && ni >= ji.abs());
    let table = LogFactorialTable::new(2 * n as usize + 1);
    let lnf = |k: i64| table.ln_factorial(k as usize).expect("table sized for 2n");
    let a = ((1.0 + p.t) / 2.0).sqrt();
    let b = ((1.0 - p.t) / 2.0).sqrt();
    let ln_a = a.ln();
    let ln_b = b.ln();
    let ln_pre = 0.5 * (lnf(ni - ji) + lnf(ni + ji) + lnf(ni - si) + lnf(ni + si));
    let k_min = 0.max(ji - si);
    let k_max = (ni + ji).min(ni - si);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let ln_den = lnf(k) + lnf(ni + ji - k) + lnf(ni - si - k) + lnf(si - ji + k);
        let pow_a = (2 * k + si - ji) as f64;
        let pow_b = (2 * ni - 2 * k - si + ji) as f64;
        let term = (ln_pre - ln_den + pow_a * ln_a + pow_b * ln_b).exp();
        // sign (-1)^(n - k - N) from the hatted half-angle function
        if (ni - k - si).rem_euclid(2) == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let norm = ((2.0 * ni as f64 + 1.0) / (4.0 * std::f64::consts::PI)).sqrt();
    let sign = if ji.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * norm * sum * Complex64::new(0.0, ji as f64 * p.phi).exp()
}

/// Spin-weighted harmonic at the lowest admissible degree n_j = max(|N|, |j|),
/// evaluated by the finite half-angle sum (a single term at this degree).
pub fn seed_spin_y(spin: i32, j: i32, p: SpinPoint) -> Complex64 {
    spin_y_half_angle_sum(spin, degree_min(spin, j), j, p)
}

/// Column of spin-weighted harmonic values for degrees n_j ..= degree_max at
/// one point.
#[derive(Debug, Clone)]
pub struct SpinColumn {
    pub spin: i32,
    pub order: i32,
    pub degree_max: u32,
    pub point: SpinPoint,
    values: Vec<Complex64>,
}

impl SpinColumn {
    pub fn degree_min(&self) -> u32 {
        degree_min(self.spin, self.order)
    }

    /// Value at degree `n`; zero below the lowest admissible degree.
    pub fn value(&self, n: u32) -> Complex64 {
        let n0 = self.degree_min();
        if n < n0 {
            return Complex64::new(0.0, 0.0);
        }
        assert!(n <= self.degree_max, "degree {} beyond column max {}", n, self.degree_max);
        self.values[(n - n0) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Evaluate the harmonics for all degrees n_j ..= l at one point: seed from
/// the half-angle sum, then solve the three-term degree recursion upward for
/// the next value. Upward is the stable direction for this recursion.
pub fn spin_column(spin: i32, j: i32, l: u32, p: SpinPoint) -> Result<SpinColumn> {
    let n0 = degree_min(spin, j);
    if l < n0 {
        return Err(invalid(format!(
            "spin_column requires L >= max(|N|, |j|), got N={spin}, j={j}, L={l}"
        )));
    }
    let mut values = Vec::with_capacity((l - n0 + 1) as usize);
    values.push(seed_spin_y(spin, j, p));
    let nj = spin as f64 * j as f64;
    for n in n0..l {
        // (t + Nj/(n(n+1))) Y_n = alpha_n Y_{n-1} + alpha_{n+1} Y_{n+1}
        let nf = n as f64;
        let current = values[(n - n0) as usize];
        let mut lhs = if n == 0 {
            p.t * current
        } else {
            (p.t + nj / (nf * (nf + 1.0))) * current
        };
        if n > n0 {
            lhs -= alpha(spin, n, j)? * values[(n - n0 - 1) as usize];
        }
        values.push(lhs / alpha(spin, n + 1, j)?);
    }
    Ok(SpinColumn {
        spin,
        order: j,
        degree_max: l,
        point: p,
        values,
    })
}

/// d/dt of the spin-weighted harmonic of degree `n`, obtained by solving the
/// derivative recursion
/// (t^2 - 1) dY_n = (n t + Nj/n) Y_n - (2n+1) alpha_n Y_{n-1}.
/// The column must cover degree n (and n-1 when n exceeds the seed degree).
pub fn dt_spin_y(column: &SpinColumn, n: u32) -> Result<Complex64> {
    let n0 = column.degree_min();
    if n < n0 || n > column.degree_max {
        return Err(invalid(format!(
            "dt_spin_y needs degree {n} inside the column range {}..={}",
            n0, column.degree_max
        )));
    }
    if n == 0 {
        // constant 1/sqrt(4 pi)
        return Ok(Complex64::new(0.0, 0.0));
    }
    let p = column.point;
    let nf = n as f64;
    let nj = column.spin as f64 * column.order as f64;
    let prev = column.value(n - 1); // zero at the seed degree
    let rhs = (nf * p.t + nj / nf) * column.value(n)
        - (2.0 * nf + 1.0) * alpha(column.spin, n, column.order)? * prev;
    Ok(rhs / ((p.t - 1.0) * (p.t + 1.0)))
}

/// Raising operator applied to a single harmonic:
/// eth_N Y = sqrt(1-t^2) dY/dt + (N t + j)/sqrt(1-t^2) Y.
pub fn eth_apply(spin: i32, n: u32, j: i32, p: SpinPoint) -> Result<Complex64> {
    let column = spin_column(spin, j, n, p)?;
    let st = p.sin_theta();
    let dt = dt_spin_y(&column, n)?;
    let angular = (spin as f64 * p.t + j as f64) / st;
    Ok(st * dt + angular * column.value(n))
}

/// Lowering operator applied to a single harmonic:
/// eth_bar_N Y = sqrt(1-t^2) dY/dt - (N t + j)/sqrt(1-t^2) Y.
pub fn eth_bar_apply(spin: i32, n: u32, j: i32, p: SpinPoint) -> Result<Complex64> {
    let column = spin_column(spin, j, n, p)?;
    let st = p.sin_theta();
    let dt = dt_spin_y(&column, n)?;
    let angular = (spin as f64 * p.t + j as f64) / st;
    Ok(st * dt - angular * column.value(n))
}

/// Residual |LHS - RHS| of the Christoffel–Darboux identity
/// (t1 - t2) sum_{n=n_j}^{L-1} conj(Y_n(p1)) Y_n(p2)
///   = alpha_L ( conj(Y_L(p1)) Y_{L-1}(p2) - conj(Y_{L-1}(p1)) Y_L(p2) ).
pub fn christoffel_darboux_check(
    spin: i32,
    j: i32,
    l: u32,
    p1: SpinPoint,
    p2: SpinPoint,
) -> Result<f64> {
    let n0 = degree_min(spin, j);
    if l <= n0 {
        return Err(invalid(format!(
            "christoffel_darboux_check requires L > max(|N|, |j|), got L={l}"
        )));
    }
    let c1 = spin_column(spin, j, l, p1)?;
    let c2 = spin_column(spin, j, l, p2)?;
    let mut lhs = Complex64::new(0.0, 0.0);
    for n in n0..l {
        lhs += c1.value(n).conj() * c2.value(n);
    }
    lhs *= p1.t - p2.t;
    let rhs = alpha(spin, l, j)?
        * (c1.value(l).conj() * c2.value(l - 1) - c1.value(l - 1).conj() * c2.value(l));
    Ok((lhs - rhs).norm())
}

/// Direct evaluation through the phased Wigner-d representation:
/// Y = (-1)^N sqrt((2n+1)/4pi) e^{i j phi} d^n_{j,-N}(theta).
/// Reference path for cross-checking the recursion; not used in production.
pub fn spin_y_direct(
    spin: i32,
    n: u32,
    j: i32,
    p: SpinPoint,
    table: &LogFactorialTable,
) -> Result<Complex64> {
    let ni = n as i64;
    if ni < (spin as i64).abs() || ni < (j as i64).abs() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let d = wigner_d(n, j, -spin, p, table)?;
    let norm = ((2.0 * ni as f64 + 1.0) / (4.0 * std::f64::consts::PI)).sqrt();
    let sign = if spin.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(sign * norm * d * Complex64::new(0.0, j as f64 * p.phi).exp())
}

/// Wigner small-d matrix element d^n_{mp,m} at the point's colatitude,
/// by the log-factorial sum over half-angle powers.
fn wigner_d(n: u32, mp: i32, m: i32, p: SpinPoint, table: &LogFactorialTable) -> Result<f64> {
    let ni = n as i64;
    let mpi = mp as i64;
    let mi = m as i64;
    let cos_half = ((1.0 + p.t) / 2.0).sqrt();
    let sin_half = ((1.0 - p.t) / 2.0).sqrt();
    let ln_c = cos_half.ln();
    let ln_s = sin_half.ln();
    let lnf = |k: i64| -> Result<f64> { table.ln_factorial(k as usize) };
    let ln_pre = 0.5 * (lnf(ni + mpi)? + lnf(ni - mpi)? + lnf(ni + mi)? + lnf(ni - mi)?);
    let k_min = 0.max(mi - mpi);
    let k_max = (ni + mi).min(ni - mpi);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let ln_den = lnf(ni + mi - k)? + lnf(k)? + lnf(mpi - mi + k)? + lnf(ni - mpi - k)?;
        let pow_c = (2 * ni - mpi + mi - 2 * k) as f64;
        let pow_s = (mpi - mi + 2 * k) as f64;
        let term = (ln_pre - ln_den + pow_c * ln_c + pow_s * ln_s).exp();
        if (mpi - mi + k).rem_euclid(2) == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(sum)
}
