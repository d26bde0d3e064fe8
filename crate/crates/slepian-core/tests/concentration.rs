//! Orthogonality and reconstruction properties of the spin-weighted Slepian
//! bases: coefficient Gram identities, kernel-weighted Gram, the harmonic
//! round-trip, the weighted outer-product reconstruction of the kernel, and
//! quadrature-based spatial orthogonality over the cap.

use slepian_core::cap_concentration::{
    assemble_spin_basis, kernel_block, PolarCap, SpinSlepianBasis,
};
use slepian_core::numerics::{gauss_legendre, Matrix};
use slepian_core::spin_harmonics::{degree_min, spin_column, SpinPoint};

fn cap40() -> PolarCap {
    PolarCap::from_degrees(40.0).unwrap()
}

/// Map (n, j) to a flat index over the basis dimension, ordering by j then n.
fn index_map(spin: i32, l: u32) -> std::collections::HashMap<(u32, i32), usize> {
    let mut map = std::collections::HashMap::new();
    let mut pos = 0usize;
    for j in -(l as i32)..=(l as i32) {
        for n in degree_min(spin, j)..=l {
            map.insert((n, j), pos);
            pos += 1;
        }
    }
    map
}

/// Zero-padded coefficient matrix: one column per Slepian function.
fn padded_coefficients(basis: &SpinSlepianBasis) -> Matrix {
    let map = index_map(basis.spin, basis.bandlimit);
    let dim = map.len();
    assert_eq!(dim, basis.len());
    let mut g = Matrix::zeros(dim, dim);
    for (col, e) in basis.entries.iter().enumerate() {
        for (i, &c) in e.coefficients.iter().enumerate() {
            let n = e.degree_min + i as u32;
            g[(map[&(n, e.order)], col)] = c;
        }
    }
    g
}

/// Block-diagonal kernel over the same flat index.
fn padded_kernel(spin: i32, l: u32, cap: &PolarCap) -> Matrix {
    let map = index_map(spin, l);
    let dim = map.len();
    let mut k = Matrix::zeros(dim, dim);
    for j in -(l as i32)..=(l as i32) {
        let block = kernel_block(spin, j, l, cap).unwrap();
        let n0 = degree_min(spin, j);
        for a in 0..block.rows() {
            for c in 0..block.cols() {
                let ra = map[&(n0 + a as u32, j)];
                let rc = map[&(n0 + c as u32, j)];
                k[(ra, rc)] = block[(a, c)];
            }
        }
    }
    k
}

#[test]
fn coefficient_gram_is_identity() {
    for (spin, l) in [(0i32, 6u32), (1, 5), (-2, 6)] {
        let basis = assemble_spin_basis(spin, l, &cap40()).unwrap();
        let g = padded_coefficients(&basis);
        let gram = g.transpose().mul(&g);
        let mut worst = 0.0f64;
        for a in 0..gram.rows() {
            for b in 0..gram.cols() {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((gram[(a, b)] - want).abs());
            }
        }
        assert!(worst < 1e-10, "g_on defect {worst:e} at N={spin} L={l}");
    }
}

#[test]
fn kernel_weighted_gram_is_diagonal_lambda() {
    for (spin, l) in [(0i32, 5u32), (2, 6)] {
        let cap = cap40();
        let basis = assemble_spin_basis(spin, l, &cap).unwrap();
        let g = padded_coefficients(&basis);
        let k = padded_kernel(spin, l, &cap);
        let m = g.transpose().mul(&k).mul(&g);
        let mut worst = 0.0f64;
        for a in 0..m.rows() {
            for b in 0..m.cols() {
                let want = if a == b { basis.entries[a].lambda } else { 0.0 };
                worst = worst.max((m[(a, b)] - want).abs());
            }
        }
        assert!(worst < 1e-9, "g_og defect {worst:e} at N={spin} L={l}");
    }
}

#[test]
fn harmonic_round_trip_through_slepian_matrix() {
    // Each harmonic coefficient vector (a unit vector in the flat index)
    // reconstructs from the Slepian expansion: e = sum_alpha G_alpha <G_alpha, e>.
    let spin = 1i32;
    let l = 5u32;
    let basis = assemble_spin_basis(spin, l, &cap40()).unwrap();
    let g = padded_coefficients(&basis);
    let dim = basis.len();
    let mut worst = 0.0f64;
    for unit in 0..dim {
        for row in 0..dim {
            let mut rebuilt = 0.0;
            for alpha in 0..dim {
                rebuilt += g[(row, alpha)] * g[(unit, alpha)];
            }
            let want = if row == unit { 1.0 } else { 0.0 };
            worst = worst.max((rebuilt - want).abs());
        }
    }
    assert!(worst < 1e-10, "basis round-trip defect {worst:e}");
}

#[test]
fn lambda_weighted_outer_product_rebuilds_kernel() {
    for (spin, l) in [(0i32, 5u32), (-1, 6)] {
        let cap = cap40();
        let basis = assemble_spin_basis(spin, l, &cap).unwrap();
        let g = padded_coefficients(&basis);
        let k = padded_kernel(spin, l, &cap);
        let dim = basis.len();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let mut sum = 0.0;
                for alpha in 0..dim {
                    sum += basis.entries[alpha].lambda * g[(r, alpha)] * g[(c, alpha)];
                }
                worst = worst.max((sum - k[(r, c)]).abs());
            }
        }
        assert!(worst < 1e-9, "weighted reconstruction defect {worst:e} at N={spin}");
    }
}

#[test]
fn spatial_orthogonality_over_cap() {
    // <G_a, G_b>_cap = lambda_a delta_ab, by Gauss-Legendre in t on [b, 1]
    // and a uniform longitude grid.
    let spin = 1i32;
    let l = 5u32;
    let cap = cap40();
    let basis = assemble_spin_basis(spin, l, &cap).unwrap();
    let dim = basis.len();
    let quad = gauss_legendre(2 * l as usize + 2).unwrap();
    let n_phi = 4 * l as usize + 3;
    let mut gram = vec![vec![num_complex::Complex64::new(0.0, 0.0); dim]; dim];
    let half = 0.5 * (1.0 - cap.b());
    let mid = 0.5 * (1.0 + cap.b());
    for (&x, &w) in quad.nodes().iter().zip(quad.weights()) {
        let t = mid + half * x;
        for iphi in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * iphi as f64 / n_phi as f64;
            let p = SpinPoint::new(t, phi).unwrap();
            let cols: Vec<_> = (-(l as i32)..=l as i32)
                .map(|j| spin_column(spin, j, l, p).unwrap())
                .collect();
            let values: Vec<num_complex::Complex64> = basis
                .entries
                .iter()
                .map(|e| {
                    let col = &cols[(e.order + l as i32) as usize];
                    e.coefficients
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| c * col.value(e.degree_min + i as u32))
                        .sum()
                })
                .collect();
            let wp = w * half * 2.0 * std::f64::consts::PI / n_phi as f64;
            for a in 0..dim {
                for b in a..dim {
                    gram[a][b] += wp * values[a] * values[b].conj();
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for a in 0..dim {
        for b in a..dim {
            let want = if a == b { basis.entries[a].lambda } else { 0.0 };
            worst = worst.max((gram[a][b] - want).norm());
        }
    }
    assert!(worst < 1e-7, "spatial orthogonality defect {worst:e}");
}

#[test]
fn trace_matches_shannon_across_configs() {
    for spin in [-2i32, 0, 1] {
        for l in [5u32, 10] {
            for theta in [20.0f64, 40.0, 60.0] {
                let cap = PolarCap::from_degrees(theta).unwrap();
                let basis = assemble_spin_basis(spin, l, &cap).unwrap();
                let total: f64 = basis.entries.iter().map(|e| e.lambda).sum();
                assert!(
                    (total - basis.shannon).abs() <= 1e-9 * basis.shannon,
                    "trace gap at N={spin} L={l} theta={theta}: {} vs {}",
                    total,
                    basis.shannon
                );
            }
        }
    }
}
