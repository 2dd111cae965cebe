//! Roots of `psi(s) = det((s + lambda)(sI + Q) + R)`.

use nalgebra::{Complex, DMatrix, Schur};

use crate::error::{Error, Result};

/// All `2n` roots, from the companion matrix `[[0, I], [-(lambda Q + R), -(Q + lambda I)]]`.
pub fn psi_roots(q: &DMatrix<f64>, r: &DMatrix<f64>, lambda: f64) -> Result<Vec<Complex<f64>>> {
    let n = q.nrows();
    if q.ncols() != n || r.nrows() != n || r.ncols() != n {
        return Err(Error::InvalidInput(
            "Q and R must be square and equal size".into(),
        ));
    }
    if q.iter().chain(r.iter()).any(|v| !v.is_finite()) || !lambda.is_finite() {
        return Err(Error::NonFinite("psi coefficient".into()));
    }
    let mut c = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        c[(i, n + i)] = 1.0;
    }
    let k0 = q * lambda + r;
    let k1 = q + DMatrix::identity(n, n) * lambda;
    c.view_mut((n, 0), (n, n)).copy_from(&(-k0));
    c.view_mut((n, n), (n, n)).copy_from(&(-k1));
    let mut roots = eigenvalues(c)?;
    if roots
        .iter()
        .any(|s| !(s.re.is_finite() && s.im.is_finite()))
    {
        return Err(Error::NonFinite("eigenvalue".into()));
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(roots)
}

/// Real Schur eigenvalues. At machine-epsilon deflation the iteration can
/// cycle on the repeated eigenvalues of isotropic collapsed equilibria, so the
/// deflation tolerance is relaxed step by step until it converges.
fn eigenvalues(c: DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    for eps in [f64::EPSILON, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10] {
        if let Some(s) = Schur::try_new(c.clone(), eps, 10_000) {
            return Ok(s.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::NoConvergence(
        "Schur decomposition of the psi companion matrix".into(),
    ))
}

/// `psi(s)` by direct determinant; used to check roots.
pub fn psi_det(q: &DMatrix<f64>, r: &DMatrix<f64>, lambda: f64, s: Complex<f64>) -> Complex<f64> {
    let n = q.nrows();
    let qc = q.map(|v| Complex::new(v, 0.0));
    let rc = r.map(|v| Complex::new(v, 0.0));
    let id = DMatrix::<Complex<f64>>::identity(n, n);
    let d = (id * s + qc) * (s + lambda) + rc;
    d.determinant()
}
