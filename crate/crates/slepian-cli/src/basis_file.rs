//! On-disk basis format: a JSON document with a fixed field order and every
//! float printed with 17 significant digits, so writing is deterministic and
//! values round-trip exactly through their decimal strings.

use serde::Deserialize;
use slepian_core::cap_concentration::{PolarCap, SpinSlepianBasis};
use slepian_core::field_assembly::{Rank, RankedSlepianBasis};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
pub struct BasisFile {
    pub schema_version: u32,
    pub rank: String,
    pub bandlimit: u32,
    pub theta_deg: f64,
    pub b: f64,
    pub shannon: f64,
    pub entries: Vec<BasisEntry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BasisEntry {
    pub alpha: usize,
    pub lambda: f64,
    pub chi: f64,
    pub type_index: u8,
    pub spin: i32,
    pub j: i32,
    pub coeffs: Vec<CoeffRecord>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CoeffRecord {
    pub n: u32,
    pub value: f64,
}

/// 17 significant digits: enough to reproduce any f64 exactly on parse.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl BasisFile {
    pub fn from_spin_basis(basis: &SpinSlepianBasis, theta_deg: f64) -> Self {
        let entries = basis
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| BasisEntry {
                alpha: i + 1,
                lambda: e.lambda,
                chi: e.chi,
                type_index: 1,
                spin: basis.spin,
                j: e.order,
                coeffs: e
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(k, &value)| CoeffRecord {
                        n: e.degree_min + k as u32,
                        value,
                    })
                    .collect(),
            })
            .collect();
        BasisFile {
            schema_version: SCHEMA_VERSION,
            rank: "spin".to_string(),
            bandlimit: basis.bandlimit,
            theta_deg,
            b: basis.cap.b(),
            shannon: basis.shannon,
            entries,
        }
    }

    pub fn from_ranked_basis(basis: &RankedSlepianBasis, theta_deg: f64) -> Self {
        let entries = basis
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let src = &basis.spin_basis(e.spin).expect("spin basis present").entries
                    [e.source_index];
                BasisEntry {
                    alpha: i + 1,
                    lambda: e.lambda,
                    chi: src.chi,
                    type_index: e.type_index,
                    spin: e.spin,
                    j: src.order,
                    coeffs: src
                        .coefficients
                        .iter()
                        .enumerate()
                        .map(|(k, &value)| CoeffRecord {
                            n: src.degree_min + k as u32,
                            value,
                        })
                        .collect(),
                }
            })
            .collect();
        BasisFile {
            schema_version: SCHEMA_VERSION,
            rank: basis.rank.to_string(),
            bandlimit: basis.bandlimit,
            theta_deg,
            b: basis.cap.b(),
            shannon: basis.shannon,
            entries,
        }
    }

    /// Serialize with fixed field order, one entry per line, LF endings.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"schema_version\": {},\n", self.schema_version));
        out.push_str(&format!("  \"rank\": \"{}\",\n", self.rank));
        out.push_str(&format!("  \"bandlimit\": {},\n", self.bandlimit));
        out.push_str(&format!("  \"theta_deg\": {},\n", fmt_f64(self.theta_deg)));
        out.push_str(&format!("  \"b\": {},\n", fmt_f64(self.b)));
        out.push_str(&format!("  \"shannon\": {},\n", fmt_f64(self.shannon)));
        out.push_str("  \"entries\": [\n");
        for (i, e) in self.entries.iter().enumerate() {
            let coeffs: Vec<String> = e
                .coeffs
                .iter()
                .map(|c| format!("{{\"n\": {}, \"value\": {}}}", c.n, fmt_f64(c.value)))
                .collect();
            out.push_str(&format!(
                "    {{\"alpha\": {}, \"lambda\": {}, \"chi\": {}, \"type_index\": {}, \"spin\": {}, \"j\": {}, \"coeffs\": [{}]}}{}\n",
                e.alpha,
                fmt_f64(e.lambda),
                fmt_f64(e.chi),
                e.type_index,
                e.spin,
                e.j,
                coeffs.join(", "),
                if i + 1 < self.entries.len() { "," } else { "" }
            ));
        }
        out.push_str("  ]\n}\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("basis file does not parse: {e}"))
    }

    pub fn rank_enum(&self) -> Option<Rank> {
        match self.rank.as_str() {
            "scalar" => Some(Rank::Scalar),
            "vector" => Some(Rank::Vector),
            "tensor" => Some(Rank::Tensor),
            _ => None,
        }
    }

    /// Validate every schema invariant; the error names the violated one.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "invariant schema-version: expected {SCHEMA_VERSION}, found {}",
                self.schema_version
            ));
        }
        let rank = match self.rank.as_str() {
            "spin" => None,
            _ => Some(self.rank_enum().ok_or_else(|| {
                format!("invariant rank: unknown rank '{}'", self.rank)
            })?),
        };
        if !(self.theta_deg > 0.0 && self.theta_deg < 180.0) {
            return Err(format!(
                "invariant theta-range: theta_deg {} outside (0, 180)",
                self.theta_deg
            ));
        }
        let b_expected = self.theta_deg.to_radians().cos();
        if (self.b - b_expected).abs() > 1e-15 {
            return Err(format!(
                "invariant b-theta-consistency: b {} does not match cos(theta) {}",
                self.b, b_expected
            ));
        }
        let l = self.bandlimit;
        let expected_count = match rank {
            Some(r) => r.entry_count(l),
            None => {
                let spin = self.entries.first().map(|e| e.spin).unwrap_or(0);
                if spin.unsigned_abs() > l {
                    return Err(format!(
                        "invariant spin-bandlimit: |spin {spin}| exceeds bandlimit {l}"
                    ));
                }
                (l as usize + 1) * (l as usize + 1) - (spin.unsigned_abs() as usize).pow(2)
            }
        };
        if self.entries.len() != expected_count {
            return Err(format!(
                "invariant entry-count: {} entries, expected {} for rank {} at L={}",
                self.entries.len(),
                expected_count,
                self.rank,
                l
            ));
        }
        let area = (1.0 - self.b) / 2.0;
        let shannon_expected = expected_count as f64 * area;
        if (self.shannon - shannon_expected).abs() > 1e-12 * shannon_expected.max(1e-300) {
            return Err(format!(
                "invariant shannon-value: {} does not match formula value {}",
                self.shannon, shannon_expected
            ));
        }
        let mut previous_lambda = f64::INFINITY;
        for (i, e) in self.entries.iter().enumerate() {
            let label = format!("entry alpha={}", e.alpha);
            if e.alpha != i + 1 {
                return Err(format!(
                    "invariant alpha-contiguity: position {} holds alpha {}",
                    i + 1,
                    e.alpha
                ));
            }
            if !(0.0..=1.0).contains(&e.lambda) {
                return Err(format!(
                    "invariant lambda-range: {label} has lambda {}",
                    e.lambda
                ));
            }
            if e.lambda > previous_lambda {
                return Err(format!(
                    "invariant lambda-order: {label} breaks the descending order"
                ));
            }
            previous_lambda = e.lambda;
            match rank {
                Some(r) => {
                    let want = r
                        .spin_of_type(e.type_index)
                        .map_err(|_| format!("invariant type-range: {label} has type {}", e.type_index))?;
                    if e.spin != want {
                        return Err(format!(
                            "invariant type-spin-map: {label} has spin {} for type {}",
                            e.spin, e.type_index
                        ));
                    }
                }
                None => {
                    if e.type_index != 1 {
                        return Err(format!(
                            "invariant type-range: {label} has type {} in a spin basis",
                            e.type_index
                        ));
                    }
                    if e.spin != self.entries[0].spin {
                        return Err(format!(
                            "invariant spin-uniformity: {label} has spin {}",
                            e.spin
                        ));
                    }
                }
            }
            let n0 = e.spin.unsigned_abs().max(e.j.unsigned_abs());
            if e.j.unsigned_abs() > l {
                return Err(format!("invariant order-range: {label} has j {}", e.j));
            }
            let want_len = (l - n0 + 1) as usize;
            if e.coeffs.len() != want_len {
                return Err(format!(
                    "invariant coefficient-coverage: {label} has {} coefficients, expected {}",
                    e.coeffs.len(),
                    want_len
                ));
            }
            for (k, c) in e.coeffs.iter().enumerate() {
                if c.n != n0 + k as u32 {
                    return Err(format!(
                        "invariant coefficient-coverage: {label} lists degree {} at position {}",
                        c.n, k
                    ));
                }
            }
            let norm2: f64 = e.coeffs.iter().map(|c| c.value * c.value).sum();
            if (norm2 - 1.0).abs() > 1e-12 {
                return Err(format!(
                    "invariant coefficient-unit-norm: {label} has squared norm {norm2}"
                ));
            }
        }
        // orthogonality of coefficient vectors within each (type, spin, j) group
        let mut groups: std::collections::BTreeMap<(u8, i32, i32), Vec<usize>> =
            std::collections::BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            groups.entry((e.type_index, e.spin, e.j)).or_default().push(i);
        }
        for ((type_index, spin, j), members) in groups {
            for (a_pos, &a) in members.iter().enumerate() {
                for &b in members.iter().skip(a_pos + 1) {
                    let dot: f64 = self.entries[a]
                        .coeffs
                        .iter()
                        .zip(&self.entries[b].coeffs)
                        .map(|(x, y)| x.value * y.value)
                        .sum();
                    if dot.abs() > 1e-10 {
                        return Err(format!(
                            "invariant coefficient-orthogonality: block (type {type_index}, spin {spin}, j {j}) has inner product {dot:e}"
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_file() -> BasisFile {
        let cap = PolarCap::from_degrees(60.0).unwrap();
        let basis = slepian_core::cap_concentration::assemble_spin_basis(0, 2, &cap).unwrap();
        BasisFile::from_spin_basis(&basis, 60.0)
    }

    #[test]
    fn document_round_trips_bit_exactly() {
        let file = small_file();
        let doc = file.to_document();
        let parsed = BasisFile::parse(&doc).unwrap();
        parsed.validate().unwrap();
        assert_eq!(parsed.to_document(), doc);
        assert_eq!(parsed.b.to_bits(), file.b.to_bits());
        for (a, b) in file.entries.iter().zip(&parsed.entries) {
            assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
            for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
                assert_eq!(x.value.to_bits(), y.value.to_bits());
            }
        }
    }

    #[test]
    fn validation_names_violated_invariant() {
        let mut file = small_file();
        file.entries[0].coeffs[0].value *= 1.5;
        let err = file.validate().unwrap_err();
        assert!(err.contains("coefficient-unit-norm"), "{err}");

        let mut file = small_file();
        file.entries[2].alpha = 9;
        assert!(file.validate().unwrap_err().contains("alpha-contiguity"));

        let mut file = small_file();
        file.shannon += 0.5;
        assert!(file.validate().unwrap_err().contains("shannon-value"));

        let mut file = small_file();
        file.entries.pop();
        assert!(file.validate().unwrap_err().contains("entry-count"));
    }

    #[test]
    fn fmt_f64_has_17_significant_digits() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        let x = 0.1f64;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        let y = -1.2345678901234567e-200;
        assert_eq!(fmt_f64(y).parse::<f64>().unwrap().to_bits(), y.to_bits());
    }
}
