//! Householder QR and one-sided Jacobi SVD on column-major buffers.

/// Thin SVD `A = U diag(sigma) Vᵀ` of an `m x n` matrix.
///
/// `u` is `m x n` column-major with unit columns (zero columns where
/// `sigma == 0`), `v` is `n x n` column-major and orthogonal.
#[derive(Debug, Clone)]
pub(crate) struct ThinSvd {
    pub m: usize,
    pub n: usize,
    pub u: Vec<f64>,
    pub sigma: Vec<f64>,
    pub v: Vec<f64>,
}

const MAX_SWEEPS: usize = 80;

/// Hestenes one-sided Jacobi. Consumes `a` (column-major `m x n`).
pub(crate) fn jacobi_svd(mut a: Vec<f64>, m: usize, n: usize) -> ThinSvd {
    debug_assert_eq!(a.len(), m * n);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (alpha, beta, gamma) = {
                    let ci = &a[i * m..(i + 1) * m];
                    let cj = &a[j * m..(j + 1) * m];
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for k in 0..m {
                        al += ci[k] * ci[k];
                        be += cj[k] * cj[k];
                        ga += ci[k] * cj[k];
                    }
                    (al, be, ga)
                };
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, m, i, j, c, s);
                rotate(&mut v, n, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma = vec![0.0; n];
    for (j, s) in sigma.iter_mut().enumerate() {
        let col = &a[j * m..(j + 1) * m];
        *s = col.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    for (j, &s) in sigma.iter().enumerate() {
        let col = &mut a[j * m..(j + 1) * m];
        if s > 0.0 && s > smax * eps * eps {
            col.iter_mut().for_each(|x| *x /= s);
        } else {
            col.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    ThinSvd { m, n, u: a, sigma, v }
}

fn rotate(buf: &mut [f64], len: usize, i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = buf.split_at_mut(j * len);
    let ci = &mut lo[i * len..(i + 1) * len];
    let cj = &mut hi[..len];
    for k in 0..len {
        let x = ci[k];
        let y = cj[k];
        ci[k] = c * x - s * y;
        cj[k] = s * x + c * y;
    }
}

/// In-place Householder QR of a column-major `m x n` matrix with `m >= n`,
/// applying the same reflections to `rhs`. Returns the `n x n` upper
/// triangular factor, column-major.
pub(crate) fn householder_qr(a: &mut [f64], m: usize, n: usize, rhs: &mut [f64]) -> Vec<f64> {
    debug_assert!(m >= n);
    for k in 0..n {
        let norm = a[k * m + k..(k + 1) * m].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k * m + k] > 0.0 { -norm } else { norm };
        // v = x - alpha e1, stored over the column
        a[k * m + k] -= alpha;
        let vnorm2: f64 = a[k * m + k..(k + 1) * m].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            a[k * m + k] += alpha;
            continue;
        }
        for j in (k + 1)..n {
            let dot: f64 = (k..m).map(|r| a[k * m + r] * a[j * m + r]).sum();
            let f = 2.0 * dot / vnorm2;
            for r in k..m {
                a[j * m + r] -= f * a[k * m + r];
            }
        }
        let dot: f64 = (k..m).map(|r| a[k * m + r] * rhs[r]).sum();
        let f = 2.0 * dot / vnorm2;
        for r in k..m {
            rhs[r] -= f * a[k * m + r];
        }
        a[k * m + k] = alpha;
        for r in (k + 1)..m {
            a[k * m + r] = 0.0;
        }
    }
    let mut rfac = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..=j {
            rfac[j * n + i] = a[j * m + i];
        }
    }
    rfac
}

impl ThinSvd {
    /// Numerical rank cutoff: `max(m, n) * eps * sigma_max`.
    pub fn cutoff(&self, dim: usize) -> f64 {
        let smax = self.sigma.iter().cloned().fold(0.0, f64::max);
        dim as f64 * f64::EPSILON * smax
    }

    /// `V diag(1/sigma) Uᵀ b`, dropping singular values at or below `cutoff`.
    pub fn pseudo_solve(&self, b: &[f64], cutoff: f64) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut coef = vec![0.0; n];
        for j in 0..n {
            let s = self.sigma[j];
            if s <= cutoff || s == 0.0 {
                continue;
            }
            let uj = &self.u[j * m..(j + 1) * m];
            coef[j] = uj.iter().zip(b).map(|(u, x)| u * x).sum::<f64>() / s;
        }
        let mut out = vec![0.0; n];
        for (j, &c) in coef.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let vj = &self.v[j * n..(j + 1) * n];
            for (o, &vv) in out.iter_mut().zip(vj) {
                *o += vv * c;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &ThinSvd) -> Vec<f64> {
        let (m, n) = (svd.m, svd.n);
        let mut out = vec![0.0; m * n];
        for c in 0..n {
            for r in 0..m {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += svd.u[k * m + r] * svd.sigma[k] * svd.v[k * n + c];
                }
                out[c * m + r] = acc;
            }
        }
        out
    }

    #[test]
    fn svd_reconstructs() {
        let a = vec![2.0, 0.5, -1.0, 3.0, 1.0, 4.0, 0.0, 1.5, 2.5, -2.0, 0.3, 1.1];
        let svd = jacobi_svd(a.clone(), 4, 3);
        for (x, y) in reconstruct(&svd).iter().zip(&a) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn svd_of_duplicated_column_has_a_zero_singular_value() {
        let a = vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0];
        let svd = jacobi_svd(a, 3, 2);
        let smin = svd.sigma.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(smin <= svd.cutoff(3));
    }

    #[test]
    fn qr_preserves_column_norms() {
        let mut a = vec![3.0, 4.0, 0.0, 1.0, 1.0, 1.0];
        let mut rhs = vec![1.0, 2.0, 3.0];
        let r = householder_qr(&mut a, 3, 2, &mut rhs);
        assert!((r[0].abs() - 5.0).abs() < 1e-12);
        let n1 = (r[2] * r[2] + r[3] * r[3]).sqrt();
        assert!((n1 - 3f64.sqrt()).abs() < 1e-12);
        let rhs_norm: f64 = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((rhs_norm - 14f64.sqrt()).abs() < 1e-12);
    }
}
