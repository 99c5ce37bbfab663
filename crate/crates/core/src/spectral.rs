//! Spectral radius estimation for square matrices.
//!
//! Block power (subspace) iteration: a small orthonormal block is pushed
//! through the matrix repeatedly and the eigenvalues of the projected block
//! matrix (Ritz values) are tracked. Complex-conjugate dominant pairs, sign
//! flips and clustered moduli are all handled by the projected eigenproblem,
//! which is solved with a shifted Hessenberg QR iteration. Each iteration
//! costs `O(block * n^2)`.

use crate::error::{Error, Result};
use crate::matrix::{gemm, Operand, ParamMatrix};
use crate::rng::{standard_normal, stream_rng, Stream};

/// Default convergence tolerance, relative to the radius.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 1000;

const BLOCK: usize = 8;
/// Radii below this (after unit scaling) converge absolutely.
const ABS_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub radius: f64,
    pub iterations: usize,
    /// `false` when the iteration cap was hit first; `radius` is then the
    /// last estimate.
    pub converged: bool,
}

/// Estimate `max |eigenvalue|` of a square matrix.
///
/// Not converging within `max_iter` is reported through
/// [`SpectralEstimate::converged`] rather than as an error.
pub fn spectral_radius(w: &ParamMatrix, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    SpectralEstimator::new().estimate(w, tol, max_iter)
}

/// Stateful estimator that warm-starts from the previous dominant subspace,
/// which makes repeated estimates of a slowly changing matrix cheap.
#[derive(Clone, Debug, Default)]
pub struct SpectralEstimator {
    basis: Option<(usize, Vec<f64>)>,
}

impl SpectralEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn estimate(&mut self, w: &ParamMatrix, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
        if !w.is_square() {
            return Err(Error::Shape(format!("spectral radius of a {}x{} matrix", w.rows(), w.cols())));
        }
        if !w.is_finite() {
            return Err(Error::NonFinite("matrix has non-finite entries".into()));
        }
        let max_abs = w.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if w.rows() == 0 || max_abs == 0.0 {
            self.basis = None;
            return Ok(SpectralEstimate { radius: 0.0, iterations: 0, converged: true });
        }
        // Work on a copy scaled by a power of two so that entries are O(1):
        // the scaling is exact and keeps the Ritz problem far from overflow.
        let scale = 2f64.powi(max_abs.log2().floor() as i32);
        let unit = w.scaled(1.0 / scale);
        let mut est = self.estimate_unit(&unit, tol, max_iter);
        est.radius *= scale;
        Ok(est)
    }

    /// Subspace iteration on a matrix with `max |w_ij|` in `[1, 2)`. The
    /// stopping rule is relative to the radius, with an absolute floor far
    /// below anything a unit-scaled non-nilpotent matrix produces.
    fn estimate_unit(&mut self, w: &ParamMatrix, tol: f64, max_iter: usize) -> SpectralEstimate {
        let n = w.rows();
        let p = n.min(BLOCK);

        // Columns of the block are stored as rows of an p x n buffer.
        let mut x = match self.basis.take() {
            Some((k, b)) if k == p && b.len() == p * n => b,
            _ => start_block(n, p),
        };
        orthonormalize(&mut x, n, p);

        let mut y = vec![0.0; p * n];
        let mut proj = vec![0.0; p * p];
        let mut prev = f64::NAN;
        let mut prev_delta = f64::NAN;
        let mut estimate = f64::NAN;
        let mut growth = 0.0;
        for it in 1..=max_iter {
            // y_i = W x_i for every block vector
            gemm(
                Operand::new(x.as_slice(), p, n),
                Operand::transposed(w.as_slice(), n, n),
                0.0,
                &mut y,
            );
            if y.iter().all(|&v| v == 0.0) {
                self.basis = None;
                return SpectralEstimate { radius: 0.0, iterations: it, converged: true };
            }
            // proj[i][j] = x_i . W x_j
            gemm(
                Operand::new(x.as_slice(), p, n),
                Operand::transposed(y.as_slice(), p, n),
                0.0,
                &mut proj,
            );
            growth = (0..p).map(|i| y[i * n..(i + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
            let ritz = hessenberg_eigenvalues(&proj, p)
                .map(|eigs| eigs.iter().map(|&(re, im)| re.hypot(im)).fold(0.0, f64::max));
            std::mem::swap(&mut x, &mut y);
            orthonormalize(&mut x, n, p);
            // A failed Ritz solve leaves the previous estimate and history alone.
            let Some(current) = ritz else { continue };
            estimate = current;

            let delta = (estimate - prev).abs();
            let scale = estimate.max(ABS_FLOOR);
            if delta.is_finite() {
                // A-posteriori error bound from the observed contraction rate.
                let q = if prev_delta.is_finite() && prev_delta > 0.0 {
                    (delta / prev_delta).min(0.999)
                } else {
                    0.999
                };
                let bound = delta * q / (1.0 - q);
                if delta == 0.0 || (it > 3 && bound <= tol * scale && delta <= tol * scale) {
                    self.basis = Some((p, x));
                    return SpectralEstimate { radius: estimate, iterations: it, converged: true };
                }
            }
            prev_delta = delta;
            prev = estimate;
        }
        if estimate.is_nan() {
            // No Ritz solve ever succeeded: fall back to the growth of the block.
            estimate = growth;
        }
        self.basis = Some((p, x));
        SpectralEstimate { radius: estimate, iterations: max_iter, converged: false }
    }
}

fn start_block(n: usize, p: usize) -> Vec<f64> {
    let mut rng = stream_rng(0x5eed, Stream::Init);
    (0..p * n).map(|_| standard_normal(&mut rng)).collect()
}

/// Modified Gram-Schmidt with one re-orthogonalization pass over the rows of
/// the `p x n` buffer. Collapsed vectors are replaced by unit basis vectors.
fn orthonormalize(x: &mut [f64], n: usize, p: usize) {
    for i in 0..p {
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = x.split_at_mut(i * n);
                let qj = &head[j * n..(j + 1) * n];
                let xi = &mut tail[..n];
                let dot: f64 = qj.iter().zip(xi.iter()).map(|(a, b)| a * b).sum();
                xi.iter_mut().zip(qj).for_each(|(v, q)| *v -= dot * q);
            }
        }
        let xi = &mut x[i * n..(i + 1) * n];
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-300 && norm.is_finite() {
            xi.iter_mut().for_each(|v| *v /= norm);
        } else {
            xi.iter_mut().for_each(|v| *v = 0.0);
            xi[(i * 7919) % n] = 1.0;
            // Make it orthogonal to what is already in the block.
            for j in 0..i {
                let (head, tail) = x.split_at_mut(i * n);
                let qj = &head[j * n..(j + 1) * n];
                let xi = &mut tail[..n];
                let dot: f64 = qj.iter().zip(xi.iter()).map(|(a, b)| a * b).sum();
                xi.iter_mut().zip(qj).for_each(|(v, q)| *v -= dot * q);
            }
            let xi = &mut x[i * n..(i + 1) * n];
            let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                xi.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }
}

/// All eigenvalues `(re, im)` of a small dense row-major `n x n` matrix.
/// Reduction to Hessenberg form by stabilized elimination, then the
/// double-shift Francis QR iteration. `None` if the QR iteration stalls.
pub(crate) fn hessenberg_eigenvalues(m: &[f64], n: usize) -> Option<Vec<(f64, f64)>> {
    // 1-based (n+1)x(n+1) working copy keeps the classic index arithmetic readable.
    let w = n + 1;
    let mut a = vec![0.0; w * w];
    for i in 0..n {
        for j in 0..n {
            a[(i + 1) * w + j + 1] = m[i * n + j];
        }
    }
    macro_rules! at {
        ($i:expr, $j:expr) => {
            a[($i) * w + ($j)]
        };
    }

    // Hessenberg reduction with partial pivoting.
    for mm in 2..n {
        let mut x = 0.0f64;
        let mut piv = mm;
        for j in mm..=n {
            if at!(j, mm - 1).abs() > x.abs() {
                x = at!(j, mm - 1);
                piv = j;
            }
        }
        if piv != mm {
            for j in (mm - 1)..=n {
                a.swap(piv * w + j, mm * w + j);
            }
            for j in 1..=n {
                a.swap(j * w + piv, j * w + mm);
            }
        }
        if x != 0.0 {
            for i in (mm + 1)..=n {
                let mut y = at!(i, mm - 1);
                if y != 0.0 {
                    y /= x;
                    at!(i, mm - 1) = y;
                    for j in mm..=n {
                        at!(i, j) -= y * at!(mm, j);
                    }
                    for j in 1..=n {
                        at!(j, mm) += y * at!(j, i);
                    }
                }
            }
        }
    }
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            at!(i, j) = 0.0;
        }
    }

    let mut wr = vec![0.0; w];
    let mut wi = vec![0.0; w];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += at!(i, j).abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = at!(l - 1, l - 1).abs() + at!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at!(l, l - 1).abs() + s == s {
                    at!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = at!(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = at!(nn - 1, nn - 1);
            let mut ww = at!(nn, nn - 1) * at!(nn - 1, nn);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + ww;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - ww / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return None;
            }
            if its % 10 == 0 && its > 0 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    at!(i, i) -= x;
                }
                let s = at!(nn, nn - 1).abs() + at!(nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                ww = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = at!(m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - ww) / at!(m + 1, m) + at!(m, m + 1);
                q = at!(m + 1, m + 1) - z - rr - ss;
                r = at!(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = at!(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (at!(m - 1, m - 1).abs() + z.abs() + at!(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                at!(i, i - 2) = 0.0;
                if i != m + 2 {
                    at!(i, i - 3) = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = at!(k, k - 1);
                    q = at!(k + 1, k - 1);
                    r = 0.0;
                    if k != nn - 1 {
                        r = at!(k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            at!(k, k - 1) = -at!(k, k - 1);
                        }
                    } else {
                        at!(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = at!(k, j) + q * at!(k + 1, j);
                        if k != nn - 1 {
                            pp += r * at!(k + 2, j);
                            at!(k + 2, j) -= pp * z;
                        }
                        at!(k + 1, j) -= pp * y;
                        at!(k, j) -= pp * x;
                    }
                    let mmin = nn.min(k + 3);
                    for i in l..=mmin {
                        let mut pp = x * at!(i, k) + y * at!(i, k + 1);
                        if k != nn - 1 {
                            pp += z * at!(i, k + 2);
                            at!(i, k + 2) -= pp * r;
                        }
                        at!(i, k + 1) -= pp * q;
                        at!(i, k) -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    if wr.iter().chain(&wi).any(|v| !v.is_finite()) {
        return None;
    }
    Some((1..=n).map(|i| (wr[i], wi[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_moduli(eigs: &[(f64, f64)]) -> Vec<f64> {
        let mut m: Vec<f64> = eigs.iter().map(|(a, b)| a.hypot(*b)).collect();
        m.sort_by(|a, b| b.partial_cmp(a).unwrap());
        m
    }

    #[test]
    fn small_solver_on_diagonal_and_rotation() {
        let d = ParamMatrix::diag(&[1.0, -3.0, 2.0]);
        let e = hessenberg_eigenvalues(d.as_slice(), 3).unwrap();
        assert_eq!(sorted_moduli(&e), vec![3.0, 2.0, 1.0]);
        let rot = ParamMatrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        let e = hessenberg_eigenvalues(rot.as_slice(), 2).unwrap();
        for (re, im) in e {
            assert!(re.abs() < 1e-15);
            assert!((im.abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn small_solver_on_companion_matrix() {
        // x^4 - 10x^3 + 35x^2 - 50x + 24 = (x-1)(x-2)(x-3)(x-4)
        let c = ParamMatrix::from_rows(&[
            &[10.0, -35.0, 50.0, -24.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let e = hessenberg_eigenvalues(c.as_slice(), 4).unwrap();
        let m = sorted_moduli(&e);
        for (got, want) in m.iter().zip([4.0, 3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn diagonal_radius() {
        let est = spectral_radius(&ParamMatrix::diag(&[1.0, -3.0, 2.0]), 1e-12, 1000).unwrap();
        assert!(est.converged);
        assert!((est.radius - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_radius_is_one() {
        let rot = ParamMatrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        let est = spectral_radius(&rot, 1e-12, 1000).unwrap();
        assert!((est.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_block_inside_a_larger_matrix() {
        // Dominant complex pair 2*(cos, sin) embedded with smaller real modes.
        let n = 20;
        let (c, s) = (0.3f64.cos() * 2.0, 0.3f64.sin() * 2.0);
        let m = ParamMatrix::from_fn(n, n, |r, col| match (r, col) {
            (0, 0) | (1, 1) => c,
            (0, 1) => -s,
            (1, 0) => s,
            (r, col) if r == col => 1.9 * (1.0 - r as f64 / n as f64),
            _ => 0.0,
        });
        let est = spectral_radius(&m, 1e-10, 1000).unwrap();
        assert!(est.converged);
        assert!((est.radius - 2.0).abs() < 1e-8, "{}", est.radius);
    }

    #[test]
    fn zero_and_nilpotent_matrices() {
        let est = spectral_radius(&ParamMatrix::zeros(4, 4), 1e-10, 100).unwrap();
        assert_eq!(est.radius, 0.0);
        let nil = ParamMatrix::from_fn(3, 3, |r, c| if c == r + 1 { 1.0 } else { 0.0 });
        let est = spectral_radius(&nil, 1e-10, 100).unwrap();
        assert!(est.radius < 1e-6);
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(spectral_radius(&ParamMatrix::zeros(2, 3), 1e-8, 10).is_err());
    }

    #[test]
    fn cap_is_reported_not_fatal() {
        let m = ParamMatrix::from_fn(30, 30, |r, c| ((r * 31 + c * 17) % 13) as f64 - 6.0);
        let est = spectral_radius(&m, 0.0, 2).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 2);
    }
}
