//! Dense row-major matrices and the handful of products the interference
//! engine needs. Complex matrices are kept as separate real/imaginary planes
//! so every product goes through `dgemm`.

use num_complex::Complex64;

#[derive(Clone, Debug)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// self * other
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        // SAFETY: slices are sized rows*cols with the strides passed below.
        unsafe {
            matrixmultiply::dgemm(
                self.rows,
                self.cols,
                other.cols,
                1.0,
                self.data.as_ptr(),
                self.cols as isize,
                1,
                other.data.as_ptr(),
                other.cols as isize,
                1,
                0.0,
                out.data.as_mut_ptr(),
                out.cols as isize,
                1,
            );
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Mat, scale: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CMat {
    pub re: Mat,
    pub im: Mat,
}

impl CMat {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut re = Mat::zeros(rows, cols);
        let mut im = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = f(i, j);
                re.data[i * cols + j] = z.re;
                im.data[i * cols + j] = z.im;
            }
        }
        CMat { re, im }
    }

    pub fn rows(&self) -> usize {
        self.re.rows
    }

    pub fn cols(&self) -> usize {
        self.re.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re.get(i, j), self.im.get(i, j))
    }

    /// real * self * real
    pub fn sandwich(&self, left: &Mat, right: &Mat) -> CMat {
        CMat { re: left.matmul(&self.re).matmul(right), im: left.matmul(&self.im).matmul(right) }
    }

    /// self * other, complex.
    pub fn matmul(&self, other: &CMat) -> CMat {
        let mut re = self.re.matmul(&other.re);
        re.add_scaled(&self.im.matmul(&other.im), -1.0);
        let mut im = self.re.matmul(&other.im);
        im.add_scaled(&self.im.matmul(&other.re), 1.0);
        CMat { re, im }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_product_matches_naive() {
        let a = CMat::from_fn(3, 4, |i, j| Complex64::new(i as f64 + 0.5 * j as f64, (i * j) as f64 - 1.0));
        let b = CMat::from_fn(4, 2, |i, j| Complex64::new((i + 2 * j) as f64, 0.25 * i as f64));
        let c = a.matmul(&b);
        for i in 0..3 {
            for j in 0..2 {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..4 {
                    s += a.get(i, k) * b.get(k, j);
                }
                assert!((c.get(i, j) - s).norm() < 1e-12);
            }
        }
    }
}
