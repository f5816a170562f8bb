//! Small dense kernels shared by both network kinds.
//!
//! The reductions use a fixed number of interleaved partial sums, so they
//! vectorize while producing the same bits on every run.

// Reductions keep four groups of four partial sums. The AVX path holds one
// group per 256-bit register; the portable path performs the identical
// sequence of roundings, so both give the same bits.
const GROUPS: usize = 4;
const WIDTH: usize = 4;
const LANES: usize = GROUPS * WIDTH;

/// Dot product of equal-length slices.
#[inline(always)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let full = a.len() - a.len() % LANES;
    let tail: f64 = a[full..].iter().zip(&b[full..]).map(|(x, y)| x * y).sum();
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx") {
        // SAFETY: feature detected; both slices hold `full` elements.
        return unsafe { avx::dot(&a[..full], &b[..full]) } + tail;
    }
    portable_dot(&a[..full], &b[..full]) + tail
}

/// Sum of a slice.
#[inline(always)]
pub(crate) fn sum(a: &[f64]) -> f64 {
    let full = a.len() - a.len() % LANES;
    let tail: f64 = a[full..].iter().sum();
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx") {
        // SAFETY: feature detected.
        return unsafe { avx::sum(&a[..full]) } + tail;
    }
    portable_sum(&a[..full]) + tail
}

#[inline(always)]
fn portable_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [[0.0f64; WIDTH]; GROUPS];
    for (x, y) in a.chunks_exact(LANES).zip(b.chunks_exact(LANES)) {
        for (g, acc) in acc.iter_mut().enumerate() {
            for l in 0..WIDTH {
                acc[l] += x[g * WIDTH + l] * y[g * WIDTH + l];
            }
        }
    }
    fold(acc)
}

#[inline(always)]
fn portable_sum(a: &[f64]) -> f64 {
    let mut acc = [[0.0f64; WIDTH]; GROUPS];
    for x in a.chunks_exact(LANES) {
        for (g, acc) in acc.iter_mut().enumerate() {
            for l in 0..WIDTH {
                acc[l] += x[g * WIDTH + l];
            }
        }
    }
    fold(acc)
}

#[inline(always)]
fn fold(acc: [[f64; WIDTH]; GROUPS]) -> f64 {
    let mut v = acc[0];
    for g in &acc[1..] {
        for l in 0..WIDTH {
            v[l] += g[l];
        }
    }
    (v[0] + v[1]) + (v[2] + v[3])
}

#[cfg(target_arch = "x86_64")]
mod avx {
    use super::{fold, GROUPS, LANES, WIDTH};
    use std::arch::x86_64::*;

    /// `a.len()` must be a multiple of `LANES` and equal to `b.len()`.
    #[target_feature(enable = "avx")]
    pub(super) unsafe fn dot(a: &[f64], b: &[f64]) -> f64 {
        let mut acc = [_mm256_setzero_pd(); GROUPS];
        for c in (0..a.len()).step_by(LANES) {
            for (g, acc) in acc.iter_mut().enumerate() {
                let x = _mm256_loadu_pd(a.as_ptr().add(c + g * WIDTH));
                let y = _mm256_loadu_pd(b.as_ptr().add(c + g * WIDTH));
                *acc = _mm256_add_pd(*acc, _mm256_mul_pd(x, y));
            }
        }
        fold(unpack(acc))
    }

    /// `a.len()` must be a multiple of `LANES`.
    #[target_feature(enable = "avx")]
    pub(super) unsafe fn sum(a: &[f64]) -> f64 {
        let mut acc = [_mm256_setzero_pd(); GROUPS];
        for c in (0..a.len()).step_by(LANES) {
            for (g, acc) in acc.iter_mut().enumerate() {
                *acc = _mm256_add_pd(*acc, _mm256_loadu_pd(a.as_ptr().add(c + g * WIDTH)));
            }
        }
        fold(unpack(acc))
    }

    #[target_feature(enable = "avx")]
    unsafe fn unpack(acc: [__m256d; GROUPS]) -> [[f64; WIDTH]; GROUPS] {
        let mut out = [[0.0; WIDTH]; GROUPS];
        for (o, v) in out.iter_mut().zip(acc) {
            _mm256_storeu_pd(o.as_mut_ptr(), v);
        }
        out
    }
}

#[inline(always)]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `z[s] = bias + sum_j coef[j] * rows[j*n + s]` for `s < n`, with the
/// partial sums for eight samples held in registers.
#[inline(always)]
pub(crate) fn affine_row(bias: f64, coef: &[f64], rows: &[f64], n: usize, z: &mut [f64]) {
    const BLOCK: usize = 8;
    debug_assert!(rows.len() >= coef.len() * n && z.len() >= n);
    let full = n - n % BLOCK;
    for s in (0..full).step_by(BLOCK) {
        let mut acc = [bias; BLOCK];
        for (j, &c) in coef.iter().enumerate() {
            let p = &rows[j * n + s..j * n + s + BLOCK];
            for l in 0..BLOCK {
                acc[l] += c * p[l];
            }
        }
        z[s..s + BLOCK].copy_from_slice(&acc);
    }
    for s in full..n {
        let mut acc = bias;
        for (j, &c) in coef.iter().enumerate() {
            acc += c * rows[j * n + s];
        }
        z[s] = acc;
    }
}

/// Read-only strided matrix view: element `(i, j)` lives at `data[i*rs + j*cs]`.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl<'a> View<'a> {
    /// Row-major `rows x cols` matrix with row stride `rs`.
    pub fn rows(data: &'a [f64], rows: usize, cols: usize, rs: usize) -> Self {
        View { data, rows, cols, rs, cs: 1 }
    }

    pub fn t(self) -> Self {
        View {
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
            ..self
        }
    }
}

fn span(rows: usize, cols: usize, rs: usize, cs: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * rs + (cols - 1) * cs + 1
    }
}

/// `C <- alpha A B + beta C` with `C` row-major, `c_rows x c_cols`, row stride `rsc`.
pub(crate) fn gemm(alpha: f64, a: View<'_>, b: View<'_>, beta: f64, c: &mut [f64], rsc: usize) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert!(a.data.len() >= span(a.rows, a.cols, a.rs, a.cs), "A view out of bounds");
    assert!(b.data.len() >= span(b.rows, b.cols, b.rs, b.cs), "B view out of bounds");
    assert!(c.len() >= span(a.rows, b.cols, rsc, 1), "C view out of bounds");
    // SAFETY: every element addressed by the three views lies inside its
    // slice (checked above), and `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::dgemm(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn reductions_agree_with_naive_sums() {
        for len in [0usize, 1, 7, 16, 33, 100] {
            let a: Vec<f64> = (0..len).map(|i| (i as f64 * 0.7).sin()).collect();
            let b: Vec<f64> = (0..len).map(|i| (i as f64 * 1.3).cos()).collect();
            assert!((dot(&a, &b) - naive_dot(&a, &b)).abs() < 1e-12);
            assert!((sum(&a) - a.iter().sum::<f64>()).abs() < 1e-12);
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[test]
    fn vector_and_portable_reductions_agree_bitwise() {
        if !std::is_x86_feature_detected!("avx") {
            return;
        }
        let a: Vec<f64> = (0..96).map(|i| (i as f64 * 0.77).sin() * 1e3).collect();
        let b: Vec<f64> = (0..96).map(|i| (i as f64 * 0.19).cos() / 7.0).collect();
        unsafe {
            assert_eq!(avx::dot(&a, &b).to_bits(), portable_dot(&a, &b).to_bits());
            assert_eq!(avx::sum(&a).to_bits(), portable_sum(&a).to_bits());
        }
    }

    #[test]
    fn affine_row_matches_loops() {
        let n = 13;
        let coef = [0.5, -2.0, 3.0];
        let rows: Vec<f64> = (0..3 * n).map(|i| i as f64 * 0.1).collect();
        let mut z = vec![0.0; n];
        affine_row(1.5, &coef, &rows, n, &mut z);
        for s in 0..n {
            let want = 1.5 + (0..3).map(|j| coef[j] * rows[j * n + s]).sum::<f64>();
            assert!((z[s] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn gemm_with_transposed_operand() {
        // A = [[1,2],[3,4]], B^T stored row-major = [[5,6],[7,8]] -> B = [[5,7],[6,8]]
        let a = [1.0, 2.0, 3.0, 4.0];
        let bt = [5.0, 6.0, 7.0, 8.0];
        let mut c = [1.0; 4];
        gemm(1.0, View::rows(&a, 2, 2, 2), View::rows(&bt, 2, 2, 2).t(), 1.0, &mut c, 2);
        assert_eq!(c, [1.0 + 17.0, 1.0 + 23.0, 1.0 + 39.0, 1.0 + 53.0]);
    }

    #[test]
    #[should_panic(expected = "out of bounds")]
    fn rejects_short_slices() {
        let a = [1.0; 3];
        let mut c = [0.0; 4];
        gemm(1.0, View::rows(&a, 2, 2, 2), View::rows(&a, 2, 2, 2), 0.0, &mut c, 2);
    }
}
