//! Concentration problem on a polar cap, one (spin, order) block at a time.
//!
//! For a cap with b = cos(theta), the kernel matrix restricted to one order j
//! is a closed-form sum over Wigner 3j products and Legendre differences, and
//! it commutes with a symmetric tridiagonal matrix whose spectrum is simple.
//! The Slepian coefficients are therefore eigenvectors of the tridiagonal
//! block; the concentrations lambda come back as Rayleigh quotients against
//! the kernel. Global bases concatenate all orders and sort by concentration.

use crate::exact::{ExactLegendre, KernelArithmetic};
use crate::numerics::{
    eigh_dense, eigh_tridiagonal, gauss_legendre, Matrix, TridiagonalMatrix,
};
use crate::spin_harmonics::{alpha, degree_min, spin_column, SpinPoint};
use crate::{invalid, Error, Result};

/// Spherical cap around the north pole: colatitudes up to theta,
/// equivalently t in [b, 1] with b = cos(theta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCap {
    theta: f64,
    b: f64,
}

impl PolarCap {
    /// Cap of opening angle `theta` in radians, 0 < theta < pi.
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta <= 0.0 || theta >= std::f64::consts::PI {
            return Err(invalid(format!(
                "cap opening angle must lie strictly between 0 and pi radians, got {theta}"
            )));
        }
        let b = theta.cos();
        if b.abs() >= 1.0 {
            return Err(invalid(format!(
                "cap opening angle {theta} rounds to an empty or full sphere"
            )));
        }
        Ok(PolarCap { theta, b })
    }

    pub fn from_degrees(theta_deg: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_degrees(&self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Cap area over the full sphere area: (1 - b) / 2.
    pub fn area_fraction(&self) -> f64 {
        (1.0 - self.b) / 2.0
    }

    /// Caps of 90 degrees or more fall outside the b in (0,1) range the
    /// derivation states, although every formula remains valid.
    pub fn exceeds_hemisphere(&self) -> bool {
        self.b <= 0.0
    }
}

/// Exact-arithmetic state shared across kernel blocks of one cap/bandlimit.
pub(crate) struct CapContext {
    arithmetic: KernelArithmetic,
    legendre: ExactLegendre,
}

impl CapContext {
    pub fn new(cap: &PolarCap, l: u32) -> Self {
        CapContext {
            arithmetic: KernelArithmetic::new(),
            legendre: ExactLegendre::new(cap.b(), 2 * l + 2),
        }
    }
}

fn validate_block_args(spin: i32, order: i32, l: u32) -> Result<()> {
    if spin.unsigned_abs() > l || order.unsigned_abs() > l {
        return Err(invalid(format!(
            "block (spin {spin}, order {order}) needs bandlimit >= max(|N|, |j|), got L={l}"
        )));
    }
    Ok(())
}

pub(crate) fn kernel_block_ctx(
    ctx: &mut CapContext,
    spin: i32,
    order: i32,
    l: u32,
) -> Result<Matrix> {
    validate_block_args(spin, order, l)?;
    let n0 = degree_min(spin, order);
    let dim = (l - n0 + 1) as usize;
    let mut k = Matrix::zeros(dim, dim);
    for a in 0..dim {
        let n = n0 + a as u32;
        for c in a..dim {
            let np = n0 + c as u32;
            let v = ctx
                .arithmetic
                .kernel_entry(spin, order, n, np, &ctx.legendre);
            k[(a, c)] = v;
            k[(c, a)] = v;
        }
    }
    Ok(k)
}

/// Kernel block K^N_j over degrees n = max(|N|,|j|) ..= L:
/// K(n,n') = ((-1)^(N+j)/2) sqrt((2n+1)(2n'+1))
///           sum_k 3j(n,k,n'; j,0,-j) 3j(n,k,n'; -N,0,N) [P_{k-1}(b)-P_{k+1}(b)],
/// with P_{-1} = 1. Entries are evaluated in exact rational arithmetic and
/// rounded once, so the block is symmetric and real by construction.
pub fn kernel_block(spin: i32, order: i32, l: u32, cap: &PolarCap) -> Result<Matrix> {
    let mut ctx = CapContext::new(cap, l);
    kernel_block_ctx(&mut ctx, spin, order, l)
}

/// Tridiagonal commuting block I^N_j over the same degree range:
/// diagonal(n) = -[ n(n+1) b + N j (1 - (L(L+2)+1)/(n(n+1))) ],
/// off-diagonal(n, n+1) = [ n(n+2) - L(L+2) ] alpha^N_{n+1,j};
/// the Nj term is zero whenever N j = 0, which also covers n = 0.
pub fn commuting_block(spin: i32, order: i32, l: u32, cap: &PolarCap) -> Result<TridiagonalMatrix> {
    validate_block_args(spin, order, l)?;
    let n0 = degree_min(spin, order);
    let dim = (l - n0 + 1) as usize;
    let ll2 = (l as f64) * (l as f64 + 2.0);
    let nj = spin as f64 * order as f64;
    let b = cap.b();
    let mut diagonal = Vec::with_capacity(dim);
    let mut off = Vec::with_capacity(dim.saturating_sub(1));
    for n in n0..=l {
        let nf = n as f64;
        let mut d = nf * (nf + 1.0) * b;
        if nj != 0.0 {
            d += nj * (1.0 - (ll2 + 1.0) / (nf * (nf + 1.0)));
        }
        diagonal.push(-d);
        if n < l {
            off.push((nf * (nf + 2.0) - ll2) * alpha(spin, n + 1, order)?);
        }
    }
    TridiagonalMatrix::new(diagonal, off)
}

/// One (spin, order) concentration subproblem: the kernel block, the
/// commuting tridiagonal block, and the degree range they act on.
#[derive(Debug, Clone)]
pub struct BlockProblem {
    pub spin: i32,
    pub order: i32,
    pub bandlimit: u32,
    pub cap: PolarCap,
    pub kernel: Matrix,
    pub commuting: TridiagonalMatrix,
}

impl BlockProblem {
    pub fn degree_min(&self) -> u32 {
        degree_min(self.spin, self.order)
    }

    pub fn dim(&self) -> usize {
        self.kernel.rows()
    }
}

pub(crate) fn block_problem_ctx(
    ctx: &mut CapContext,
    spin: i32,
    order: i32,
    l: u32,
    cap: &PolarCap,
) -> Result<BlockProblem> {
    Ok(BlockProblem {
        spin,
        order,
        bandlimit: l,
        cap: *cap,
        kernel: kernel_block_ctx(ctx, spin, order, l)?,
        commuting: commuting_block(spin, order, l, cap)?,
    })
}

/// Build both blocks of the (spin, order) subproblem.
pub fn block_problem(spin: i32, order: i32, l: u32, cap: &PolarCap) -> Result<BlockProblem> {
    let mut ctx = CapContext::new(cap, l);
    block_problem_ctx(&mut ctx, spin, order, l, cap)
}

/// All block problems of one spin weight, orders j = -L ..= L, sharing the
/// exact-arithmetic caches across blocks.
pub fn spin_block_problems(spin: i32, l: u32, cap: &PolarCap) -> Result<Vec<BlockProblem>> {
    if l < spin.unsigned_abs() {
        return Err(invalid(format!(
            "spin blocks require L >= |N|, got N={spin}, L={l}"
        )));
    }
    let mut ctx = CapContext::new(cap, l);
    (-(l as i32)..=(l as i32))
        .map(|order| block_problem_ctx(&mut ctx, spin, order, l, cap))
        .collect()
}

/// One Slepian function of a spin-weighted basis: concentration lambda,
/// commuting-operator eigenvalue chi, order j, and the unit-norm coefficient
/// vector over degrees degree_min ..= bandlimit.
#[derive(Debug, Clone)]
pub struct SpinSlepianEntry {
    pub lambda: f64,
    pub chi: f64,
    pub order: i32,
    pub degree_min: u32,
    pub coefficients: Vec<f64>,
}

const LAMBDA_CLAMP: f64 = 1e-12;

/// Solve one block through the commuting tridiagonal matrix: eigenvectors are
/// the Slepian coefficients, chi their tridiagonal eigenvalues, and lambda the
/// Rayleigh quotient against the kernel block, clamped onto [0, 1]. The sign
/// convention makes the largest-magnitude coefficient positive.
pub fn solve_block(p: &BlockProblem) -> Result<Vec<SpinSlepianEntry>> {
    let eig = eigh_tridiagonal(&p.commuting)?;
    let dim = p.dim();
    let n0 = p.degree_min();
    let mut entries = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut v = eig.vectors.column(i);
        let kv = p.kernel.mul_vec(&v);
        let mut lambda: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
        if !(-LAMBDA_CLAMP..=1.0 + LAMBDA_CLAMP).contains(&lambda) {
            return Err(Error::EigenvalueRange {
                spin: p.spin,
                order: p.order,
                lambda,
            });
        }
        lambda = lambda.clamp(0.0, 1.0);
        let mut top = 0usize;
        for (idx, c) in v.iter().enumerate() {
            if c.abs() > v[top].abs() {
                top = idx;
            }
        }
        if v[top] < 0.0 {
            for c in &mut v {
                *c = -*c;
            }
        }
        entries.push(SpinSlepianEntry {
            lambda,
            chi: eig.values[i],
            order: p.order,
            degree_min: n0,
            coefficients: v,
        });
    }
    Ok(entries)
}

/// All Slepian functions for one spin weight: every order's block solved and
/// merged, sorted by concentration.
#[derive(Debug, Clone)]
pub struct SpinSlepianBasis {
    pub spin: i32,
    pub bandlimit: u32,
    pub cap: PolarCap,
    pub entries: Vec<SpinSlepianEntry>,
    pub shannon: f64,
}

impl SpinSlepianBasis {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Shannon number S^N = ((L+1)^2 - N^2) (1 - b) / 2.
pub fn shannon_spin(spin: i32, l: u32, cap: &PolarCap) -> f64 {
    let dim = ((l as f64) + 1.0).powi(2) - (spin as f64).powi(2);
    dim * cap.area_fraction()
}

/// Sort order of a basis: lambda descending, then order ascending, then chi
/// ascending. Total and deterministic for the finite values produced here.
fn basis_ordering(a: &SpinSlepianEntry, b: &SpinSlepianEntry) -> std::cmp::Ordering {
    b.lambda
        .partial_cmp(&a.lambda)
        .expect("finite lambda")
        .then(a.order.cmp(&b.order))
        .then(a.chi.partial_cmp(&b.chi).expect("finite chi"))
}

pub(crate) fn assemble_spin_basis_ctx(
    ctx: &mut CapContext,
    spin: i32,
    l: u32,
    cap: &PolarCap,
) -> Result<SpinSlepianBasis> {
    if l < spin.unsigned_abs() {
        return Err(invalid(format!(
            "spin basis requires L >= |N|, got N={spin}, L={l}"
        )));
    }
    let mut entries = Vec::new();
    for order in -(l as i32)..=(l as i32) {
        let problem = block_problem_ctx(ctx, spin, order, l, cap)?;
        entries.extend(solve_block(&problem)?);
    }
    entries.sort_by(basis_ordering);
    let expected = ((l as usize + 1) * (l as usize + 1)) - (spin.unsigned_abs() as usize).pow(2);
    debug_assert_eq!(entries.len(), expected);
    Ok(SpinSlepianBasis {
        spin,
        bandlimit: l,
        cap: *cap,
        entries,
        shannon: shannon_spin(spin, l, cap),
    })
}

/// Build the complete spin-weighted Slepian basis for one spin weight and
/// bandlimit: (L+1)^2 - N^2 functions sorted by descending concentration.
pub fn assemble_spin_basis(spin: i32, l: u32, cap: &PolarCap) -> Result<SpinSlepianBasis> {
    let mut ctx = CapContext::new(cap, l);
    assemble_spin_basis_ctx(&mut ctx, spin, l, cap)
}

/// Diagnostics for one block: commutation of the two matrices, agreement of
/// the tridiagonal eigenvectors with the dense-kernel ones, and the gap
/// between the block trace and its quadrature value.
#[derive(Debug, Clone, Copy)]
pub struct BlockReport {
    pub commutation_residual: f64,
    pub eigvec_agreement: f64,
    pub trace_gap: f64,
}

/// Dense eigenvalues within this gap (relative to the kernel norm) cannot be
/// separated by the eigensolver to the accuracy the agreement check needs, so
/// they are compared as a cluster subspace.
const CLUSTER_GAP_REL: f64 = 1e-9;

pub fn verify_block(p: &BlockProblem) -> Result<BlockReport> {
    let dense_i = p.commuting.to_dense();
    let ki = p.kernel.mul(&dense_i);
    let ik = dense_i.mul(&p.kernel);
    let mut diff2 = 0.0;
    for r in 0..ki.rows() {
        for c in 0..ki.cols() {
            let d = ki[(r, c)] - ik[(r, c)];
            diff2 += d * d;
        }
    }
    let scale = p.kernel.frobenius_norm() * dense_i.frobenius_norm();
    let commutation_residual = if scale == 0.0 {
        0.0
    } else {
        diff2.sqrt() / scale
    };

    let eigvec_agreement = if p.dim() == 1 {
        1.0
    } else {
        let tri = eigh_tridiagonal(&p.commuting)?;
        let dense = eigh_dense(&p.kernel)?;
        // pair by ascending lambda: Rayleigh quotients for the tridiagonal path
        let dim = p.dim();
        let mut lam_tri: Vec<(f64, usize)> = (0..dim)
            .map(|i| {
                let v = tri.vectors.column(i);
                let kv = p.kernel.mul_vec(&v);
                (v.iter().zip(&kv).map(|(a, b)| a * b).sum::<f64>(), i)
            })
            .collect();
        lam_tri.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite lambda"));
        let gap = CLUSTER_GAP_REL * p.kernel.frobenius_norm().max(f64::MIN_POSITIVE);
        let mut worst = 1.0f64;
        let mut lo = 0usize;
        while lo < dim {
            let mut hi = lo;
            while hi + 1 < dim && dense.values[hi + 1] - dense.values[hi] < gap {
                hi += 1;
            }
            for a in lo..=hi {
                let vt = tri.vectors.column(lam_tri[a].1);
                let mut proj2 = 0.0;
                for c in lo..=hi {
                    let ip: f64 = vt
                        .iter()
                        .enumerate()
                        .map(|(r, x)| x * dense.vectors[(r, c)])
                        .sum();
                    proj2 += ip * ip;
                }
                worst = worst.min(proj2.sqrt());
            }
            lo = hi + 1;
        }
        worst
    };

    // independent trace: 2 pi int_b^1 sum_n |Y_n(t, 0)|^2 dt by quadrature
    let quad = gauss_legendre(2 * p.bandlimit as usize + 2)?;
    let b = p.cap.b();
    let quad_trace = quad.integrate_on(b, 1.0, |t| {
        // the cap interior keeps t strictly below 1 at the quadrature nodes
        let point = SpinPoint::new(t, 0.0).expect("quadrature node inside the sphere");
        let col = spin_column(p.spin, p.order, p.bandlimit, point).expect("valid block degrees");
        col.values().iter().map(|v| v.norm_sqr()).sum::<f64>()
    }) * 2.0
        * std::f64::consts::PI;
    let trace: f64 = (0..p.dim()).map(|i| p.kernel[(i, i)]).sum();
    Ok(BlockReport {
        commutation_residual,
        eigvec_agreement,
        trace_gap: (trace - quad_trace).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cap40() -> PolarCap {
        PolarCap::from_degrees(40.0).unwrap()
    }

    #[test]
    fn cap_construction() {
        let cap = cap40();
        assert_abs_diff_eq!(cap.b(), 40f64.to_radians().cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(cap.area_fraction(), (1.0 - cap.b()) / 2.0, epsilon = 1e-16);
        assert!(!cap.exceeds_hemisphere());
        assert!(PolarCap::from_degrees(110.0).unwrap().exceeds_hemisphere());
        assert!(PolarCap::from_degrees(0.0).is_err());
        assert!(PolarCap::from_degrees(180.0).is_err());
        assert!(PolarCap::new(-0.3).is_err());
    }

    #[test]
    fn kernel_l0_is_area_fraction() {
        let cap = PolarCap::from_degrees(60.0).unwrap();
        let k = kernel_block(0, 0, 0, &cap).unwrap();
        assert_eq!(k.rows(), 1);
        assert_abs_diff_eq!(k[(0, 0)], cap.area_fraction(), epsilon = 1e-16);
    }

    #[test]
    fn kernel_near_full_sphere_is_identity() {
        let cap = PolarCap::new(std::f64::consts::PI - 1e-6).unwrap();
        for (spin, order) in [(0, 0), (1, -2), (2, 1)] {
            let k = kernel_block(spin, order, 5, &cap).unwrap();
            for r in 0..k.rows() {
                for c in 0..k.cols() {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!(
                        (k[(r, c)] - want).abs() < 1e-9,
                        "entry ({r},{c}) = {} for N={spin} j={order}",
                        k[(r, c)]
                    );
                }
            }
        }
    }

    /// Independent oracle: the kernel entries are cap integrals of harmonic
    /// products, computable by quadrature since the integrands are
    /// polynomials in t of degree <= 2L.
    #[test]
    fn kernel_matches_quadrature_oracle() {
        let cap = cap40();
        let two_pi = 2.0 * std::f64::consts::PI;
        for (spin, order, l) in [(0, 0, 4u32), (1, 2, 5), (-2, 1, 6), (2, -3, 6)] {
            let k = kernel_block(spin, order, l, &cap).unwrap();
            let n0 = degree_min(spin, order);
            let quad = gauss_legendre(2 * l as usize + 4).unwrap();
            for a in 0..k.rows() {
                for c in 0..k.cols() {
                    let integral = quad.integrate_on(cap.b(), 1.0, |t| {
                        let p = SpinPoint::new(t, 0.0).unwrap();
                        let col = spin_column(spin, order, l, p).unwrap();
                        (col.value(n0 + a as u32).conj() * col.value(n0 + c as u32)).re
                    }) * two_pi;
                    assert!(
                        (k[(a, c)] - integral).abs() < 1e-13,
                        "kernel/quadrature gap {:e} at N={spin} j={order} ({a},{c})",
                        (k[(a, c)] - integral).abs()
                    );
                }
            }
        }
    }

    #[test]
    fn commuting_block_examples() {
        let cap = cap40();
        let l = 6u32;
        let m = commuting_block(0, 0, l, &cap).unwrap();
        assert_eq!(m.diagonal[0], 0.0);
        let want_off = -(l as f64) * (l as f64 + 2.0) / 3.0f64.sqrt();
        assert_abs_diff_eq!(m.off_diagonal[0], want_off, epsilon = 1e-12);

        // N = j = 1, L = 1: single degree n = 1, diagonal -[2b + (1 - 4/2)] = 1 - 2b
        let m1 = commuting_block(1, 1, 1, &cap).unwrap();
        assert_eq!(m1.dim(), 1);
        assert_abs_diff_eq!(m1.diagonal[0], 1.0 - 2.0 * cap.b(), epsilon = 1e-14);
    }

    #[test]
    fn commutation_residual_sample_blocks() {
        let cap = cap40();
        for (spin, order) in [(0i32, 0i32), (1, 4), (-2, -9), (2, 17), (0, 18)] {
            let p = block_problem(spin, order, 18, &cap).unwrap();
            let report = verify_block(&p).unwrap();
            assert!(
                report.commutation_residual < 1e-10,
                "commutation residual {:e} at N={spin} j={order}",
                report.commutation_residual
            );
        }
    }

    #[test]
    fn solve_single_entry_block() {
        let cap = PolarCap::from_degrees(60.0).unwrap();
        let p = block_problem(0, 0, 0, &cap).unwrap();
        let entries = solve_block(&p).unwrap();
        assert_eq!(entries.len(), 1);
        assert_abs_diff_eq!(entries[0].lambda, 0.25, epsilon = 1e-15);
        assert_eq!(entries[0].coefficients, vec![1.0]);
    }

    #[test]
    fn solve_block_kernel_residual() {
        let cap = cap40();
        let p = block_problem(1, 2, 10, &cap).unwrap();
        for e in solve_block(&p).unwrap() {
            let kv = p.kernel.mul_vec(&e.coefficients);
            let mut r2 = 0.0;
            for (x, c) in kv.iter().zip(&e.coefficients) {
                let d = x - e.lambda * c;
                r2 += d * d;
            }
            assert!(r2.sqrt() < 1e-8, "eigen residual {:e}", r2.sqrt());
            let norm2: f64 = e.coefficients.iter().map(|c| c * c).sum();
            assert_abs_diff_eq!(norm2, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn solve_block_near_full_sphere_lambda_one() {
        let cap = PolarCap::new(std::f64::consts::PI - 1e-6).unwrap();
        let p = block_problem(1, 1, 4, &cap).unwrap();
        for e in solve_block(&p).unwrap() {
            assert!((e.lambda - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn solve_block_rejects_out_of_range_lambda() {
        let cap = cap40();
        let mut p = block_problem(0, 0, 3, &cap).unwrap();
        for r in 0..p.kernel.rows() {
            for c in 0..p.kernel.cols() {
                p.kernel[(r, c)] *= 1.5;
            }
        }
        match solve_block(&p) {
            Err(Error::EigenvalueRange { spin, order, .. }) => {
                assert_eq!((spin, order), (0, 0));
            }
            other => panic!("expected eigenvalue-range error, got {other:?}"),
        }
    }

    #[test]
    fn assemble_counts_and_order() {
        let cap = cap40();
        let basis = assemble_spin_basis(2, 10, &cap).unwrap();
        assert_eq!(basis.len(), 121 - 4);
        for w in basis.entries.windows(2) {
            assert!(w[0].lambda >= w[1].lambda);
        }
        assert!(basis.entries[0].lambda <= 1.0);
        let sum: f64 = basis.entries.iter().map(|e| e.lambda).sum();
        assert!(
            (sum - basis.shannon).abs() < 1e-9 * basis.shannon,
            "trace {} vs shannon {}",
            sum,
            basis.shannon
        );
    }

    #[test]
    fn shannon_limits() {
        let tiny = PolarCap::new(1e-5).unwrap();
        assert!(shannon_spin(0, 18, &tiny) < 1e-8);
        let huge = PolarCap::new(std::f64::consts::PI - 1e-5).unwrap();
        assert!((shannon_spin(0, 18, &huge) - 361.0).abs() < 1e-6);
        let cap = cap40();
        assert_abs_diff_eq!(
            shannon_spin(0, 18, &cap),
            361.0 * cap.area_fraction(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn verify_block_diagnostics() {
        let cap = cap40();
        let p = block_problem(1, 3, 9, &cap).unwrap();
        let report = verify_block(&p).unwrap();
        assert!(report.commutation_residual < 1e-10);
        assert!(report.eigvec_agreement > 1.0 - 1e-8);
        assert!(report.trace_gap < 1e-10);

        let single = block_problem(2, 0, 2, &cap).unwrap();
        let report = verify_block(&single).unwrap();
        assert_eq!(report.eigvec_agreement, 1.0);
    }

    #[test]
    fn monotone_nesting_in_cap_size() {
        // growing the cap cannot decrease the top concentration
        let mut last = 0.0;
        for theta in [15.0, 25.0, 40.0, 55.0, 75.0, 95.0] {
            let cap = PolarCap::from_degrees(theta).unwrap();
            let basis = assemble_spin_basis(1, 5, &cap).unwrap();
            let top = basis.entries[0].lambda;
            assert!(
                top >= last - 1e-12,
                "lambda_1 decreased from {last} to {top} at theta={theta}"
            );
            last = top;
        }
    }
}
