//! Strided matrix views over flat `f64` buffers and a GEMM entry point.

/// Read-only view of a row-major (or transposed) matrix.
#[derive(Clone, Copy)]
pub(crate) struct Mat<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    rs: isize,
    cs: isize,
}

impl<'a> Mat<'a> {
    /// Dense row-major `rows x cols` matrix.
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        assert!(data.len() >= rows * cols, "buffer too small for {rows}x{cols}");
        Self { data, rows, cols, rs: cols as isize, cs: 1 }
    }

    /// Columns `[start, start + cols)` of a row-major matrix with `stride` columns.
    pub fn columns(data: &'a [f64], rows: usize, stride: usize, start: usize, cols: usize) -> Self {
        assert!(start + cols <= stride);
        assert!(rows == 0 || data.len() >= (rows - 1) * stride + start + cols);
        Self { data: &data[start..], rows, cols, rs: stride as isize, cs: 1 }
    }

    pub fn t(self) -> Self {
        Self { data: self.data, rows: self.cols, cols: self.rows, rs: self.cs, cs: self.rs }
    }
}

/// Mutable dense row-major destination, optionally a column block of a wider matrix.
pub(crate) struct MatMut<'a> {
    data: &'a mut [f64],
    rows: usize,
    cols: usize,
    rs: isize,
}

impl<'a> MatMut<'a> {
    pub fn new(data: &'a mut [f64], rows: usize, cols: usize) -> Self {
        assert!(data.len() >= rows * cols);
        Self { data, rows, cols, rs: cols as isize }
    }

    pub fn columns(data: &'a mut [f64], rows: usize, stride: usize, start: usize, cols: usize) -> Self {
        assert!(start + cols <= stride);
        assert!(rows == 0 || data.len() >= (rows - 1) * stride + start + cols);
        Self { data: &mut data[start..], rows, cols, rs: stride as isize }
    }
}

/// `c = a * b + beta * c`.
pub(crate) fn gemm(a: Mat<'_>, b: Mat<'_>, beta: f64, c: MatMut<'_>) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert_eq!(a.rows, c.rows);
    assert_eq!(b.cols, c.cols);
    if c.rows == 0 || c.cols == 0 {
        return;
    }
    if a.cols == 0 {
        // empty inner product; only the beta term remains
        for r in 0..c.rows {
            let row = &mut c.data[r * c.rs as usize..];
            for v in &mut row[..c.cols] {
                *v *= beta;
            }
        }
        return;
    }
    // SAFETY: the constructors assert that every addressed element lies
    // inside its buffer, and `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::dgemm(
            a.rows,
            a.cols,
            b.cols,
            1.0,
            a.data.as_ptr(),
            a.rs,
            a.cs,
            b.data.as_ptr(),
            b.rs,
            b.cs,
            beta,
            c.data.as_mut_ptr(),
            c.rs,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn matches_naive_product_and_transposes() {
        let a: Vec<f64> = (0..6).map(|v| v as f64 - 2.5).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|v| (v as f64).sin()).collect(); // 3x4
        let mut c = vec![0.0; 8];
        gemm(Mat::new(&a, 2, 3), Mat::new(&b, 3, 4), 0.0, MatMut::new(&mut c, 2, 4));
        let expect = naive(&a, &b, 2, 3, 4);
        for (x, y) in c.iter().zip(&expect) {
            assert!((x - y).abs() < 1e-12);
        }
        // (b^T a^T) = c^T
        let mut ct = vec![0.0; 8];
        gemm(Mat::new(&b, 3, 4).t(), Mat::new(&a, 2, 3).t(), 0.0, MatMut::new(&mut ct, 4, 2));
        for i in 0..2 {
            for j in 0..4 {
                assert!((ct[j * 2 + i] - expect[i * 4 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn column_blocks() {
        // 2x5 matrix, take columns 1..4
        let w: Vec<f64> = (0..10).map(f64::from).collect();
        let x = [1.0, 0.0, 0.0];
        let mut out = vec![0.0; 2];
        gemm(Mat::columns(&w, 2, 5, 1, 3), Mat::new(&x, 3, 1), 0.0, MatMut::new(&mut out, 2, 1));
        assert_eq!(out, vec![1.0, 6.0]);

        let mut wide = vec![0.0; 10];
        let a = [1.0, 2.0];
        let b = [1.0, 1.0];
        gemm(Mat::new(&a, 2, 1), Mat::new(&b, 1, 2), 1.0, MatMut::columns(&mut wide, 2, 5, 3, 2));
        assert_eq!(wide, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 2.0, 2.0]);
    }
}
