//! Dense kernels on row-major `n × n` complex blocks.
//!
//! Fields store one block per site in a flat buffer; these helpers work
//! directly on the block slices so the per-site loops never allocate.

use num_complex::Complex64 as C;

pub(crate) const ZERO: C = C::new(0.0, 0.0);
pub(crate) const ONE: C = C::new(1.0, 0.0);
pub(crate) const I: C = C::new(0.0, 1.0);

/// `out += coef * a * b`
#[inline]
pub(crate) fn mul_acc(out: &mut [C], a: &[C], b: &[C], n: usize, coef: C) {
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k] * coef;
            if aik == ZERO {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, &bkj) in dst.iter_mut().zip(row) {
                *d += aik * bkj;
            }
        }
    }
}

pub(crate) fn mul(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut out = vec![ZERO; n * n];
    mul_acc(&mut out, a, b, n, ONE);
    out
}

pub(crate) fn adjoint(a: &[C], n: usize) -> Vec<C> {
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

pub(crate) fn transpose(a: &[C], n: usize) -> Vec<C> {
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
    out
}

pub(crate) fn identity(n: usize) -> Vec<C> {
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        out[i * n + i] = ONE;
    }
    out
}

/// Largest entrywise modulus of `a - b`.
pub(crate) fn max_abs_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub(crate) fn frobenius_sq(a: &[C]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_matches_hand_product() {
        let a = [C::new(1.0, 0.0), C::new(2.0, 1.0), C::new(0.0, -1.0), C::new(3.0, 0.0)];
        let b = [C::new(0.5, 0.0), C::new(0.0, 1.0), C::new(1.0, 1.0), C::new(-1.0, 0.0)];
        let p = mul(&a, &b, 2);
        assert_eq!(p[0], a[0] * b[0] + a[1] * b[2]);
        assert_eq!(p[1], a[0] * b[1] + a[1] * b[3]);
        assert_eq!(p[2], a[2] * b[0] + a[3] * b[2]);
        assert_eq!(p[3], a[2] * b[1] + a[3] * b[3]);
    }
}
