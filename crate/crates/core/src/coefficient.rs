//! Piecewise-constant scalar diffusion fields on the epsilon grid.
//!
//! The coefficient is a `2^k x 2^k` array of positive cell values, constant
//! per cell, with cell `(0, 0)` in the lower-left corner (row-major, row 0 at
//! the bottom). Any fine mesh with `k_h >= k_eps` resolves it exactly.

use crate::mesh::MeshHierarchy;
use crate::{real, Error, Real, Result};
use std::io::{BufRead, BufReader, Read};

/// A positive scalar field, constant on each epsilon-grid cell.
#[derive(Debug, Clone)]
pub struct CoefficientField<T> {
    /// Grid order `k_eps`.
    pub grid_order: usize,
    /// Row-major cell values, `values[j * n + i]` for cell `(i, j)`.
    values: Vec<T>,
    /// Cached minimum (ellipticity lower bound).
    pub alpha: T,
    /// Cached maximum (ellipticity upper bound).
    pub beta: T,
}

impl<T: Real> CoefficientField<T> {
    /// Wraps a row-major value array, validating positivity and dimensions.
    pub fn from_values(grid_order: usize, values: Vec<T>) -> Result<Self> {
        let n = 1usize << grid_order;
        if values.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "coefficient grid needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        let mut alpha = values[0];
        let mut beta = values[0];
        for &v in &values {
            if !(v > T::zero()) {
                return Err(Error::InvalidParameter(
                    "coefficient values must be positive".into(),
                ));
            }
            alpha = alpha.min(v);
            beta = beta.max(v);
        }
        Ok(CoefficientField {
            grid_order,
            values,
            alpha,
            beta,
        })
    }

    /// Checkerboard field: `black` on cells with even `i + j`, `white`
    /// otherwise.
    pub fn checkerboard(grid_order: usize, black: T, white: T) -> Result<Self> {
        let n = 1usize << grid_order;
        let values = (0..n * n)
            .map(|c| {
                let (i, j) = (c % n, c / n);
                if (i + j) % 2 == 0 {
                    black
                } else {
                    white
                }
            })
            .collect();
        Self::from_values(grid_order, values)
    }

    /// Random binary field: each cell independently `black` or `white` with
    /// probability 1/2.
    ///
    /// The generator is counter-based SplitMix64: cell `(i, j)` with linear
    /// index `c` draws the top bit of `splitmix64(seed + c + 1)`. Identical
    /// seeds give bit-identical fields on every platform.
    pub fn random_binary(grid_order: usize, black: T, white: T, seed: u64) -> Result<Self> {
        let n = 1usize << grid_order;
        let values = (0..n * n)
            .map(|c| {
                let word = splitmix64(seed.wrapping_add(c as u64 + 1));
                if word >> 63 == 0 {
                    black
                } else {
                    white
                }
            })
            .collect();
        Self::from_values(grid_order, values)
    }

    /// Constant field (useful for smooth sanity runs).
    pub fn constant(value: T) -> Result<Self> {
        Self::from_values(0, vec![value])
    }

    /// Reads the text format: first line `k_eps`, then `2^k` lines of `2^k`
    /// positive decimal numbers, row-major with row 0 at the bottom.
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty coefficient file".into()))??;
        let grid_order: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid order line: {header:?}")))?;
        let n = 1usize << grid_order;
        let mut values = Vec::with_capacity(n * n);
        for line in lines {
            let line = line?;
            for token in line.split_whitespace() {
                let v: f64 = token
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad value {token:?}")))?;
                values.push(real::<T>(v));
            }
        }
        Self::from_values(grid_order, values)
    }

    /// Loads from a file path.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// Value on cell `(i, j)`.
    pub fn cell_value(&self, i: usize, j: usize) -> T {
        let n = 1usize << self.grid_order;
        self.values[j * n + i]
    }

    /// Raw row-major values.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Contrast `beta / alpha`.
    pub fn contrast(&self) -> T {
        self.beta / self.alpha
    }

    /// The epsilon cell containing a point of the open unit square.
    pub fn cell_of_point(&self, x: f64, y: f64) -> (usize, usize) {
        let n = 1usize << self.grid_order;
        let clamp = |t: f64| ((t * n as f64).floor() as usize).min(n - 1);
        (clamp(x), clamp(y))
    }

    /// Value on a fine element, looked up at its barycenter.
    ///
    /// Fails unless the fine mesh resolves the coefficient (`k_h >= k_eps`).
    pub fn value_on_fine_element(&self, hier: &MeshHierarchy, e: usize) -> Result<T> {
        if hier.fine.grid_order < self.grid_order {
            return Err(Error::InvalidParameter(format!(
                "fine mesh order {} does not resolve the coefficient grid order {}",
                hier.fine.grid_order, self.grid_order
            )));
        }
        let b = hier.fine.element_barycenter(e);
        let (i, j) = self.cell_of_point(b[0], b[1]);
        Ok(self.cell_value(i, j))
    }

    /// FNV-1a hash of the grid order and value bit patterns, for cache keys
    /// and reproducibility records.
    pub fn content_hash(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(&(self.grid_order as u64).to_le_bytes());
        for &v in &self.values {
            eat(&v.to_f64().unwrap_or(f64::NAN).to_bits().to_le_bytes());
        }
        h
    }
}

/// SplitMix64 finalizer; the canonical constants from Steele et al.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic stream of scalars in `[-1, 1]`, used for reproducible
/// random test vectors. Counter-based like the coefficient generator.
pub struct UniformStream {
    seed: u64,
    counter: u64,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        UniformStream { seed, counter: 0 }
    }

    pub fn next_real<T: Real>(&mut self) -> T {
        self.counter += 1;
        let word = splitmix64(self.seed.wrapping_add(self.counter));
        // 53 uniform bits into [-1, 1].
        let unit = (word >> 11) as f64 / (1u64 << 53) as f64;
        real(2.0 * unit - 1.0)
    }

    /// Fills a vector with uniform entries.
    pub fn vector<T: Real>(&mut self, len: usize) -> Vec<T> {
        (0..len).map(|_| self.next_real()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_hierarchy;

    #[test]
    fn checkerboard_parity() {
        let f = CoefficientField::<f64>::checkerboard(2, 2.0, 3.0).unwrap();
        assert_eq!(f.cell_value(0, 0), 2.0);
        assert_eq!(f.cell_value(1, 0), 3.0);
        assert_eq!(f.cell_value(1, 1), 2.0);
        assert_eq!(f.alpha, 2.0);
        assert_eq!(f.beta, 3.0);
    }

    #[test]
    fn paper_fields_have_expected_contrast() {
        let cb = CoefficientField::<f64>::checkerboard(6, 1.0, 10.0).unwrap();
        assert_eq!(cb.contrast(), 10.0);
        let rnd = CoefficientField::<f64>::random_binary(6, 0.01, 1.0, 42).unwrap();
        assert_eq!(rnd.alpha, 0.01);
        assert_eq!(rnd.beta, 1.0);
        assert_eq!(rnd.contrast(), 100.0);
    }

    #[test]
    fn degenerate_equal_values() {
        let f = CoefficientField::<f64>::checkerboard(1, 1.0, 1.0).unwrap();
        assert_eq!(f.alpha, f.beta);
        let r = CoefficientField::<f64>::random_binary(3, 5.0, 5.0, 9).unwrap();
        assert!(r.values().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn random_field_is_deterministic() {
        let a = CoefficientField::<f64>::random_binary(3, 1.0, 2.0, 7).unwrap();
        let b = CoefficientField::<f64>::random_binary(3, 1.0, 2.0, 7).unwrap();
        assert_eq!(a.values(), b.values());
        let c = CoefficientField::<f64>::random_binary(3, 1.0, 2.0, 8).unwrap();
        assert_ne!(a.values(), c.values());
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn random_field_is_roughly_balanced() {
        let f = CoefficientField::<f64>::random_binary(6, 1.0, 2.0, 42).unwrap();
        let blacks = f.values().iter().filter(|&&v| v == 1.0).count();
        let total = f.values().len();
        assert!(
            (blacks as f64 / total as f64 - 0.5).abs() < 0.05,
            "blacks = {blacks} of {total}"
        );
    }

    #[test]
    fn rejects_non_positive() {
        assert!(CoefficientField::<f64>::checkerboard(1, 0.0, 1.0).is_err());
        assert!(CoefficientField::<f64>::random_binary(1, 1.0, -2.0, 0).is_err());
    }

    #[test]
    fn fine_lookup_requires_resolution() {
        let hier = build_hierarchy(0, 0, 1).unwrap();
        let f = CoefficientField::<f64>::checkerboard(2, 1.0, 10.0).unwrap();
        assert!(f.value_on_fine_element(&hier, 0).is_err());
    }

    #[test]
    fn constant_field_everywhere() {
        let hier = build_hierarchy(1, 1, 2).unwrap();
        let f = CoefficientField::<f64>::constant(3.5).unwrap();
        for e in 0..hier.fine.elements.len() {
            assert_eq!(f.value_on_fine_element(&hier, e).unwrap(), 3.5);
        }
    }

    #[test]
    fn quadrant_lookup() {
        // checkerboard(1, 1, 10) on a k_h = 2 mesh: the lower-left quadrant
        // is cell (0, 0) with value 1.
        let hier = build_hierarchy(1, 1, 2).unwrap();
        let f = CoefficientField::<f64>::checkerboard(1, 1.0, 10.0).unwrap();
        for e in 0..hier.fine.elements.len() {
            let b = hier.fine.element_barycenter(e);
            if b[0] < 0.5 && b[1] < 0.5 {
                assert_eq!(f.value_on_fine_element(&hier, e).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn lookup_matches_barycenter_parity_oracle() {
        let hier = build_hierarchy(1, 2, 4).unwrap();
        let f = CoefficientField::<f64>::checkerboard(2, 2.0, 3.0).unwrap();
        for e in 0..hier.fine.elements.len() {
            let b = hier.fine.element_barycenter(e);
            // Independent parity computation from the barycenter.
            let (ci, cj) = ((b[0] * 4.0) as usize, (b[1] * 4.0) as usize);
            let expect = if (ci + cj) % 2 == 0 { 2.0 } else { 3.0 };
            assert_eq!(f.value_on_fine_element(&hier, e).unwrap(), expect);
        }
    }

    #[test]
    fn eps_cell_preimage_count() {
        // Every eps cell contains exactly 2 * 4^(k_h - k_eps) fine elements.
        let hier = build_hierarchy(1, 2, 4).unwrap();
        let f = CoefficientField::<f64>::checkerboard(2, 1.0, 2.0).unwrap();
        let mut counts = vec![0usize; 16];
        for e in 0..hier.fine.elements.len() {
            let b = hier.fine.element_barycenter(e);
            let (i, j) = f.cell_of_point(b[0], b[1]);
            counts[j * 4 + i] += 1;
        }
        assert!(counts.iter().all(|&c| c == 2 * 16));
    }

    #[test]
    fn file_roundtrip() {
        let text = "1\n1.5 2.5\n3.5 4.5\n";
        let f = CoefficientField::<f64>::from_reader(text.as_bytes()).unwrap();
        assert_eq!(f.grid_order, 1);
        assert_eq!(f.cell_value(0, 0), 1.5);
        assert_eq!(f.cell_value(1, 1), 4.5);
        assert!(CoefficientField::<f64>::from_reader("1\n1.0\n".as_bytes()).is_err());
        assert!(CoefficientField::<f64>::from_reader("1\n1 2 -3 4\n".as_bytes()).is_err());
    }
}
