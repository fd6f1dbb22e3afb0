//! Minimal complex linear algebra and deterministic random sampling.
//!
//! Everything downstream works on small dense matrices (at most a few tens of
//! rows), so the implementations here favour portability and reproducibility
//! over raw speed: plain row-major storage, Gauss-Jordan inversion with
//! partial pivoting, and a fixed, documented random generator so that traces
//! are bit-identical across platforms.

use std::fmt;

use num_complex::Complex64;

/// Errors from the low-level linear algebra routines.
#[derive(Debug, Clone, PartialEq)]
pub enum NumericsError {
    /// The Gram matrix of the input is numerically singular.
    RankDeficient { pivot: f64, threshold: f64 },
    /// Pseudo-inverse requires a wide (rows <= cols) input.
    NotWide { rows: usize, cols: usize },
    /// A variance or other nonnegative argument was negative.
    NegativeVariance(f64),
}

impl fmt::Display for NumericsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericsError::RankDeficient { pivot, threshold } => write!(
                f,
                "rank-deficient matrix: pivot {pivot:e} below threshold {threshold:e}"
            ),
            NumericsError::NotWide { rows, cols } => {
                write!(f, "pseudo-inverse needs rows <= cols, got {rows}x{cols}")
            }
            NumericsError::NegativeVariance(v) => write!(f, "negative variance {v}"),
        }
    }
}

impl std::error::Error for NumericsError {}

/// Relative pivot threshold for declaring a matrix rank-deficient.
const RANK_EPS: f64 = 1e-12;

// ── complex matrix ──────────────────────────────────────────────────────

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Build from row-major entries. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        CMat { rows, cols, data }
    }

    /// Build from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "all rows must have equal length");
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn scale(&self, c: Complex64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Inverse of a square matrix by Gauss-Jordan elimination with partial
    /// pivoting. Rank deficiency is declared when a pivot magnitude falls
    /// below `RANK_EPS` times the largest pivot seen so far.
    pub fn inverse(&self) -> Result<CMat, NumericsError> {
        assert_eq!(self.rows, self.cols, "inverse needs a square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        let mut max_pivot = 0.0f64;

        for col in 0..n {
            // partial pivot: largest magnitude in this column at/below the diagonal
            let mut piv_row = col;
            let mut piv_mag = a[(col, col)].norm();
            for r in col + 1..n {
                let mag = a[(r, col)].norm();
                if mag > piv_mag {
                    piv_mag = mag;
                    piv_row = r;
                }
            }
            max_pivot = max_pivot.max(piv_mag);
            let threshold = RANK_EPS * max_pivot;
            if piv_mag == 0.0 || piv_mag < threshold {
                return Err(NumericsError::RankDeficient {
                    pivot: piv_mag,
                    threshold,
                });
            }
            if piv_row != col {
                a.swap_rows(col, piv_row);
                inv.swap_rows(col, piv_row);
            }
            let pivot = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= pivot;
                inv[(col, j)] /= pivot;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let ac = a[(col, j)];
                    let ic = inv[(col, j)];
                    a[(r, j)] -= factor * ac;
                    inv[(r, j)] -= factor * ic;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for col in 0..self.cols {
            self.data.swap(i * self.cols + col, j * self.cols + col);
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Moore-Penrose pseudo-inverse of a wide full-row-rank matrix:
/// `H+ = H^H (H H^H)^-1`, so that `H * H+ = I`.
pub fn pseudo_inverse(h: &CMat) -> Result<CMat, NumericsError> {
    if h.rows() > h.cols() {
        return Err(NumericsError::NotWide {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let hh = h.hermitian();
    let gram = h.mul(&hh);
    let gram_inv = gram.inverse()?;
    Ok(hh.mul(&gram_inv))
}

// ── vector helpers ──────────────────────────────────────────────────────

/// Unconjugated inner product `sum_i a_i b_i` (row-vector times column).
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len(), "dimension mismatch in inner product");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hermitian inner product `sum_i conj(a_i) b_i`.
pub fn inner_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len(), "dimension mismatch in inner product");
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Squared Euclidean norm.
pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

// ── deterministic random source ─────────────────────────────────────────

/// Seedable pseudo-random generator with a fixed algorithm.
///
/// State is xoshiro256++ (Blackman & Vigna), expanded from the 64-bit seed
/// with SplitMix64. The algorithm is pinned here rather than delegated to a
/// library so identical seeds give byte-identical streams on every platform
/// and toolchain.
#[derive(Debug, Clone)]
pub struct Rng {
    state: [u64; 4],
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut state = [0u64; 4];
        for s in &mut state {
            *s = splitmix64(&mut sm);
        }
        Rng { state }
    }

    /// Derive an independent substream from this seed and a stream tag.
    pub fn substream(seed: u64, tag: u64) -> Self {
        let mut sm = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut state = [0u64; 4];
        for s in &mut state {
            *s = splitmix64(&mut sm);
        }
        Rng { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n).
    pub fn uniform_index(&mut self, n: usize) -> usize {
        assert!(n > 0);
        // modulo bias is irrelevant here: n is a codebook or index range far
        // below 2^64
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller (cosine branch; two uniforms per draw).
    pub fn standard_normal(&mut self) -> f64 {
        let (u1, u2) = self.box_muller_uniforms();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Circularly symmetric complex Gaussian with total variance `variance`
    /// (variance/2 per real component). Zero variance gives exactly zero.
    pub fn complex_gaussian(&mut self, variance: f64) -> Result<Complex64, NumericsError> {
        if variance < 0.0 {
            return Err(NumericsError::NegativeVariance(variance));
        }
        if variance == 0.0 {
            return Ok(Complex64::ZERO);
        }
        let (u1, u2) = self.box_muller_uniforms();
        let r = (-2.0 * u1.ln()).sqrt() * (variance / 2.0).sqrt();
        let phase = std::f64::consts::TAU * u2;
        Ok(Complex64::new(r * phase.cos(), r * phase.sin()))
    }

    /// (u1, u2) with u1 in (0, 1] so the log never sees zero.
    fn box_muller_uniforms(&mut self) -> (f64, f64) {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
        let u2 = self.uniform();
        (u1, u2)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over a byte stream; used for stable state fingerprints.
pub fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pseudo_inverse_identity() {
        let h = CMat::identity(2);
        let p = pseudo_inverse(&h).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pseudo_inverse_diagonal() {
        let h = CMat::from_vec(2, 2, vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)]);
        let p = pseudo_inverse(&h).unwrap();
        assert!((p[(0, 0)] - c(0.5, 0.0)).norm() < 1e-12);
        assert!((p[(1, 1)] - c(0.25, 0.0)).norm() < 1e-12);
        assert!(p[(0, 1)].norm() < 1e-14 && p[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_residual_random_wide() {
        // H * H+ must reproduce the identity for random full-rank wide inputs.
        let mut rng = Rng::new(7);
        for _ in 0..20 {
            let mut data = Vec::with_capacity(3 * 8);
            for _ in 0..24 {
                data.push(rng.complex_gaussian(1.0).unwrap());
            }
            let h = CMat::from_vec(3, 8, data);
            let p = pseudo_inverse(&h).unwrap();
            let prod = h.mul(&p);
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (prod[(i, j)] - c(want, 0.0)).norm() < 1e-10,
                        "residual too large at ({i},{j})"
                    );
                }
            }
            assert!(
                h.mul(&p).add(&CMat::identity(3).scale(c(-1.0, 0.0))).frobenius_norm()
                    < 1e-9 * h.frobenius_norm()
            );
        }
    }

    #[test]
    fn pseudo_inverse_rank_deficient() {
        // duplicated row -> singular Gram matrix
        let h = CMat::from_vec(
            2,
            3,
            vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)],
        );
        match pseudo_inverse(&h) {
            Err(NumericsError::RankDeficient { .. }) => {}
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        // zero matrix is caught too
        let z = CMat::zeros(2, 4);
        assert!(matches!(pseudo_inverse(&z), Err(NumericsError::RankDeficient { .. })));
    }

    #[test]
    fn pseudo_inverse_rejects_tall() {
        let h = CMat::zeros(4, 2);
        assert!(matches!(pseudo_inverse(&h), Err(NumericsError::NotWide { .. })));
    }

    #[test]
    fn frobenius_values() {
        assert_eq!(CMat::zeros(3, 2).frobenius_norm(), 0.0);
        assert!((CMat::identity(3).frobenius_norm() - 3f64.sqrt()).abs() < 1e-15);
        let m = CMat::from_vec(1, 2, vec![c(3.0, 0.0), c(4.0, 0.0)]);
        assert!((m.frobenius_norm() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn frobenius_scaling_homogeneity() {
        let mut rng = Rng::new(11);
        for _ in 0..50 {
            let data: Vec<_> = (0..12).map(|_| rng.complex_gaussian(1.0).unwrap()).collect();
            let m = CMat::from_vec(3, 4, data);
            let scalar = rng.complex_gaussian(4.0).unwrap();
            let lhs = m.scale(scalar).frobenius_norm();
            let rhs = scalar.norm() * m.frobenius_norm();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }

    #[test]
    fn gaussian_zero_variance_and_negative() {
        let mut rng = Rng::new(1);
        assert_eq!(rng.complex_gaussian(0.0).unwrap(), Complex64::ZERO);
        assert!(matches!(
            rng.complex_gaussian(-1.0),
            Err(NumericsError::NegativeVariance(_))
        ));
    }

    #[test]
    fn gaussian_moments() {
        // law-of-large-numbers check on mean and total variance
        let mut rng = Rng::new(2024);
        let n = 1_000_000usize;
        let mut sum = Complex64::ZERO;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z = rng.complex_gaussian(1.0).unwrap();
            sum += z;
            sum_sq += z.norm_sqr();
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64;
        assert!(mean.norm() < 0.01, "sample mean {mean}");
        assert!((0.99..=1.01).contains(&var), "sample variance {var}");
    }

    #[test]
    fn rng_determinism() {
        let mut a = Rng::new(0xDEADBEEF);
        let mut b = Rng::new(0xDEADBEEF);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c1 = Rng::new(5);
        let mut c2 = Rng::new(6);
        assert_ne!(
            (0..8).map(|_| c1.next_u64()).collect::<Vec<_>>(),
            (0..8).map(|_| c2.next_u64()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn substreams_differ_from_each_other() {
        let mut s1 = Rng::substream(42, 1);
        let mut s2 = Rng::substream(42, 2);
        assert_ne!(s1.next_u64(), s2.next_u64());
    }

    #[test]
    fn inverse_roundtrip() {
        let mut rng = Rng::new(3);
        let data: Vec<_> = (0..16).map(|_| rng.complex_gaussian(1.0).unwrap()).collect();
        let m = CMat::from_vec(4, 4, data);
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - c(want, 0.0)).norm() < 1e-10);
            }
        }
    }
}
