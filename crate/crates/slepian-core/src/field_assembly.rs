//! Vector and tensor Slepian bases from spin-weighted ones, plus evaluation
//! on points and grids.
//!
//! Each vector or tensor type index maps to one spin weight; the block
//! problems of repeated spins are solved once and shared. A Slepian function
//! of type i is the spin-weighted scalar times a unit vector/tensor of the
//! local frame, so its pointwise norm equals |G(p)| for every type.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::cap_concentration::{
    assemble_spin_basis_ctx, CapContext, PolarCap, SpinSlepianBasis,
};
use crate::spin_harmonics::{degree_min, spin_column, SpinPoint};
use crate::{invalid, Result};

/// Local orthonormal frame and the unit tensors built from it.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    pub eps_r: [f64; 3],
    pub eps_phi: [f64; 3],
    pub eps_t: [f64; 3],
    pub tau_plus: [Complex64; 3],
    pub tau_minus: [Complex64; 3],
    pub i_tan: [[f64; 3]; 3],
    pub j_tan: [[f64; 3]; 3],
}

/// Frame at a point away from the poles: radial, eastward, northward unit
/// vectors, the complex tangent vectors tau_+- = -(eps_t +- i eps_phi)/sqrt(2),
/// and the tangential identity/rotation tensors.
pub fn local_frame(p: SpinPoint) -> LocalFrame {
    let t = p.t();
    let st = p.sin_theta();
    let (sin_phi, cos_phi) = p.phi().sin_cos();
    let eps_r = [st * cos_phi, st * sin_phi, t];
    let eps_phi = [-sin_phi, cos_phi, 0.0];
    let eps_t = [-t * cos_phi, -t * sin_phi, st];
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut tau_plus = [Complex64::new(0.0, 0.0); 3];
    let mut tau_minus = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        tau_plus[i] = -inv_sqrt2 * Complex64::new(eps_t[i], eps_phi[i]);
        tau_minus[i] = -inv_sqrt2 * Complex64::new(eps_t[i], -eps_phi[i]);
    }
    let mut i_tan = [[0.0; 3]; 3];
    let mut j_tan = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            i_tan[a][b] = eps_phi[a] * eps_phi[b] + eps_t[a] * eps_t[b];
            j_tan[a][b] = eps_t[a] * eps_phi[b] - eps_phi[a] * eps_t[b];
        }
    }
    LocalFrame {
        eps_r,
        eps_phi,
        eps_t,
        tau_plus,
        tau_minus,
        i_tan,
        j_tan,
    }
}

/// Tensor rank of a ranked Slepian basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
    Tensor,
}

impl Rank {
    /// Number of type indices: 1, 3, or 9.
    pub fn type_count(&self) -> u8 {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 3,
            Rank::Tensor => 9,
        }
    }

    /// Spin weight carried by a type index (1-based).
    pub fn spin_of_type(&self, type_index: u8) -> Result<i32> {
        let spin = match (self, type_index) {
            (Rank::Scalar, 1) => 0,
            (Rank::Vector, 1) => 0,
            (Rank::Vector, 2) => 1,
            (Rank::Vector, 3) => -1,
            (Rank::Tensor, 1) => 0,
            (Rank::Tensor, 2) => 1,
            (Rank::Tensor, 3) => -1,
            (Rank::Tensor, 4) => 1,
            (Rank::Tensor, 5) => -1,
            (Rank::Tensor, 6) => 0,
            (Rank::Tensor, 7) => 0,
            (Rank::Tensor, 8) => 2,
            (Rank::Tensor, 9) => -2,
            _ => {
                return Err(invalid(format!(
                    "type index {type_index} out of range for {self:?}"
                )))
            }
        };
        Ok(spin)
    }

    /// Smallest bandlimit for which every type has at least one function.
    pub fn min_bandlimit(&self) -> u32 {
        match self {
            Rank::Scalar => 0,
            Rank::Vector => 1,
            Rank::Tensor => 2,
        }
    }

    /// Basis size: (L+1)^2, 3(L+1)^2 - 2, or 9(L+1)^2 - 12.
    pub fn entry_count(&self, l: u32) -> usize {
        let sq = (l as usize + 1) * (l as usize + 1);
        match self {
            Rank::Scalar => sq,
            Rank::Vector => 3 * sq - 2,
            Rank::Tensor => 9 * sq - 12,
        }
    }

    fn distinct_spins(&self) -> &'static [i32] {
        match self {
            Rank::Scalar => &[0],
            Rank::Vector => &[0, 1, -1],
            Rank::Tensor => &[0, 1, -1, 2, -2],
        }
    }
}

impl std::fmt::Display for Rank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rank::Scalar => write!(f, "scalar"),
            Rank::Vector => write!(f, "vector"),
            Rank::Tensor => write!(f, "tensor"),
        }
    }
}

/// One function of a ranked basis: its concentration, its type index, and a
/// reference into the shared spin-weighted basis it scales.
#[derive(Debug, Clone, Copy)]
pub struct RankedEntry {
    pub lambda: f64,
    pub type_index: u8,
    pub spin: i32,
    pub source_index: usize,
}

/// Vector or tensor (or scalar) Slepian basis assembled from shared
/// spin-weighted bases.
#[derive(Debug, Clone)]
pub struct RankedSlepianBasis {
    pub rank: Rank,
    pub bandlimit: u32,
    pub cap: PolarCap,
    pub entries: Vec<RankedEntry>,
    pub shannon: f64,
    spin_bases: BTreeMap<i32, SpinSlepianBasis>,
}

impl RankedSlepianBasis {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The shared spin-weighted basis for one spin weight.
    pub fn spin_basis(&self, spin: i32) -> Option<&SpinSlepianBasis> {
        self.spin_bases.get(&spin)
    }
}

/// Shannon number of the ranked family over this cap.
pub fn shannon_ranked(rank: Rank, l: u32, cap: &PolarCap) -> f64 {
    rank.entry_count(l) as f64 * cap.area_fraction()
}

/// Assemble a ranked basis: solve each distinct spin weight once, replicate
/// the entries across the type indices carrying that spin, and sort globally
/// by (lambda descending, type index ascending, source position ascending).
pub fn assemble_ranked_basis(rank: Rank, l: u32, cap: &PolarCap) -> Result<RankedSlepianBasis> {
    if l < rank.min_bandlimit() {
        return Err(invalid(format!(
            "rank {rank} requires bandlimit >= {}, got {l}",
            rank.min_bandlimit()
        )));
    }
    let mut ctx = CapContext::new(cap, l);
    let mut spin_bases = BTreeMap::new();
    for &spin in rank.distinct_spins() {
        let basis = assemble_spin_basis_ctx(&mut ctx, spin, l, cap)?;
        spin_bases.insert(spin, basis);
    }
    let mut entries = Vec::with_capacity(rank.entry_count(l));
    for type_index in 1..=rank.type_count() {
        let spin = rank.spin_of_type(type_index)?;
        let source = &spin_bases[&spin];
        for (source_index, e) in source.entries.iter().enumerate() {
            entries.push(RankedEntry {
                lambda: e.lambda,
                type_index,
                spin,
                source_index,
            });
        }
    }
    entries.sort_by(|a, b| {
        b.lambda
            .partial_cmp(&a.lambda)
            .expect("finite lambda")
            .then(a.type_index.cmp(&b.type_index))
            .then(a.source_index.cmp(&b.source_index))
    });
    debug_assert_eq!(entries.len(), rank.entry_count(l));
    Ok(RankedSlepianBasis {
        rank,
        bandlimit: l,
        cap: *cap,
        entries,
        shannon: shannon_ranked(rank, l, cap),
        spin_bases,
    })
}

/// Value of a Slepian function at one point: complex scalar, vector, or
/// tensor components plus the pointwise Euclidean/Frobenius norm.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub point: SpinPoint,
    pub value: FieldValue,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub enum FieldValue {
    Scalar(Complex64),
    Vector([Complex64; 3]),
    Tensor([[Complex64; 3]; 3]),
}

impl FieldValue {
    /// Flat component list; tensors row-major.
    pub fn components(&self) -> Vec<Complex64> {
        match self {
            FieldValue::Scalar(g) => vec![*g],
            FieldValue::Vector(v) => v.to_vec(),
            FieldValue::Tensor(m) => m.iter().flatten().copied().collect(),
        }
    }
}

/// Spin-weighted Slepian scalar G(p) = sum_n c_n Y_{n,j}(p) from an entry's
/// coefficient vector.
pub fn eval_source(
    spin: i32,
    order: i32,
    degree_lo: u32,
    coefficients: &[f64],
    p: SpinPoint,
) -> Result<Complex64> {
    if degree_lo != degree_min(spin, order) {
        return Err(invalid(format!(
            "coefficients start at degree {degree_lo}, expected max(|{spin}|, |{order}|)"
        )));
    }
    if coefficients.is_empty() {
        return Err(invalid("empty coefficient vector"));
    }
    let l = degree_lo + coefficients.len() as u32 - 1;
    let col = spin_column(spin, order, l, p)?;
    let mut g = Complex64::new(0.0, 0.0);
    for (c, y) in coefficients.iter().zip(col.values()) {
        g += c * y;
    }
    Ok(g)
}

fn outer(u: &[Complex64; 3], v: &[Complex64; 3]) -> [[Complex64; 3]; 3] {
    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            m[a][b] = u[a] * v[b];
        }
    }
    m
}

fn complex3(v: &[f64; 3]) -> [Complex64; 3] {
    [
        Complex64::new(v[0], 0.0),
        Complex64::new(v[1], 0.0),
        Complex64::new(v[2], 0.0),
    ]
}

fn scale_vec(v: &[Complex64; 3], g: Complex64) -> [Complex64; 3] {
    [v[0] * g, v[1] * g, v[2] * g]
}

fn scale_tensor(m: &[[Complex64; 3]; 3], g: Complex64) -> [[Complex64; 3]; 3] {
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            out[a][b] = m[a][b] * g;
        }
    }
    out
}

/// Multiply the spin-weighted scalar by the unit vector/tensor of one type.
/// Every carrier has unit Euclidean/Frobenius norm, so the sample norm is
/// |g| for all types; types sharing a source therefore produce identical
/// norm fields bit for bit.
pub fn apply_type(rank: Rank, type_index: u8, g: Complex64, frame: &LocalFrame) -> Result<FieldValue> {
    let value = match (rank, type_index) {
        (Rank::Scalar, 1) => FieldValue::Scalar(g),
        (Rank::Vector, 1) => FieldValue::Vector(scale_vec(&complex3(&frame.eps_r), g)),
        (Rank::Vector, 2) => FieldValue::Vector(scale_vec(&frame.tau_plus, g)),
        (Rank::Vector, 3) => FieldValue::Vector(scale_vec(&frame.tau_minus, g)),
        (Rank::Tensor, idx) => {
            let xi = complex3(&frame.eps_r);
            let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
            let m = match idx {
                1 => outer(&xi, &xi),
                2 => outer(&xi, &frame.tau_plus),
                3 => outer(&xi, &frame.tau_minus),
                4 => outer(&frame.tau_plus, &xi),
                5 => outer(&frame.tau_minus, &xi),
                6 => {
                    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
                    for a in 0..3 {
                        for b in 0..3 {
                            m[a][b] = Complex64::new(inv_sqrt2 * frame.i_tan[a][b], 0.0);
                        }
                    }
                    m
                }
                7 => {
                    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
                    for a in 0..3 {
                        for b in 0..3 {
                            m[a][b] = Complex64::new(inv_sqrt2 * frame.j_tan[a][b], 0.0);
                        }
                    }
                    m
                }
                8 => outer(&frame.tau_plus, &frame.tau_plus),
                9 => outer(&frame.tau_minus, &frame.tau_minus),
                _ => return Err(invalid(format!("tensor type index {idx} out of range"))),
            };
            FieldValue::Tensor(scale_tensor(&m, g))
        }
        _ => {
            return Err(invalid(format!(
                "type index {type_index} out of range for {rank}"
            )))
        }
    };
    Ok(value)
}

/// Common evaluation surface for spin-weighted and ranked bases.
pub trait SlepianBasisOps {
    fn entry_count(&self) -> usize;
    fn lambda(&self, alpha: usize) -> Result<f64>;
    fn eval(&self, alpha: usize, p: SpinPoint) -> Result<FieldSample>;
}

fn check_alpha(alpha: usize, count: usize) -> Result<usize> {
    if alpha == 0 || alpha > count {
        return Err(invalid(format!(
            "function index alpha must lie in 1..={count}, got {alpha}"
        )));
    }
    Ok(alpha - 1)
}

impl SlepianBasisOps for SpinSlepianBasis {
    fn entry_count(&self) -> usize {
        self.entries.len()
    }

    fn lambda(&self, alpha: usize) -> Result<f64> {
        Ok(self.entries[check_alpha(alpha, self.entries.len())?].lambda)
    }

    fn eval(&self, alpha: usize, p: SpinPoint) -> Result<FieldSample> {
        let e = &self.entries[check_alpha(alpha, self.entries.len())?];
        let g = eval_source(self.spin, e.order, e.degree_min, &e.coefficients, p)?;
        Ok(FieldSample {
            point: p,
            value: FieldValue::Scalar(g),
            norm: g.norm(),
        })
    }
}

impl SlepianBasisOps for RankedSlepianBasis {
    fn entry_count(&self) -> usize {
        self.entries.len()
    }

    fn lambda(&self, alpha: usize) -> Result<f64> {
        Ok(self.entries[check_alpha(alpha, self.entries.len())?].lambda)
    }

    fn eval(&self, alpha: usize, p: SpinPoint) -> Result<FieldSample> {
        let e = &self.entries[check_alpha(alpha, self.entries.len())?];
        let source = self
            .spin_bases
            .get(&e.spin)
            .ok_or_else(|| invalid(format!("missing spin basis {}", e.spin)))?;
        let s = &source.entries[e.source_index];
        let g = eval_source(e.spin, s.order, s.degree_min, &s.coefficients, p)?;
        let frame = local_frame(p);
        let value = apply_type(self.rank, e.type_index, g, &frame)?;
        Ok(FieldSample {
            point: p,
            value,
            norm: g.norm(),
        })
    }
}

/// Evaluate one Slepian function of a spin-weighted basis (alpha is 1-based).
pub fn eval_spin_slepian(
    basis: &SpinSlepianBasis,
    alpha: usize,
    p: SpinPoint,
) -> Result<FieldSample> {
    basis.eval(alpha, p)
}

/// Evaluate one Slepian function of a ranked basis (alpha is 1-based).
pub fn eval_ranked_slepian(
    basis: &RankedSlepianBasis,
    alpha: usize,
    p: SpinPoint,
) -> Result<FieldSample> {
    basis.eval(alpha, p)
}

/// Equiangular grid with half-pixel offsets from the poles, row-major with
/// latitude rows outer (north to south) and longitude inner.
pub fn grid_points(n_lat: usize, n_lon: usize) -> Result<Vec<SpinPoint>> {
    if n_lat < 2 || n_lon < 2 {
        return Err(invalid("grids need at least 2 rows and 2 columns"));
    }
    let mut points = Vec::with_capacity(n_lat * n_lon);
    for i in 0..n_lat {
        let colat = std::f64::consts::PI * (i as f64 + 0.5) / n_lat as f64;
        let t = colat.cos();
        for k in 0..n_lon {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_lon as f64;
            points.push(SpinPoint::new(t, phi)?);
        }
    }
    Ok(points)
}

/// Evaluate one Slepian function on the standard grid, row-major.
pub fn eval_grid<B: SlepianBasisOps>(
    basis: &B,
    alpha: usize,
    n_lat: usize,
    n_lon: usize,
) -> Result<Vec<FieldSample>> {
    grid_points(n_lat, n_lon)?
        .into_iter()
        .map(|p| basis.eval(alpha, p))
        .collect()
}
