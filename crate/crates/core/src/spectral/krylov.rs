//! Conjugate gradients and MINRES for symmetric systems.

use super::matrix::{axpy, dot, norm, SymMatrix};

pub(crate) enum CgOutcome {
    Converged(Vec<f64>),
    /// pᵀAp ≤ 0 was met: the matrix is not positive definite.
    Indefinite,
    Stalled(Vec<f64>),
}

/// Jacobi-preconditioned CG for (A + shift·I) x = b, to ‖r‖ ≤ rtol·‖b‖.
pub(crate) fn pcg(a: &SymMatrix, shift: f64, b: &[f64], rtol: f64, max_iter: usize) -> CgOutcome {
    let n = a.n();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return CgOutcome::Converged(vec![0.0; n]);
    }
    let pre: Vec<f64> = a
        .diag()
        .iter()
        .map(|&d| if d + shift > 0.0 { 1.0 / (d + shift) } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&pre).map(|(r, p)| r * p).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        a.matvec(&p, &mut ap);
        axpy(shift, &p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return CgOutcome::Indefinite;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        if norm(&r) <= rtol * bnorm {
            return CgOutcome::Converged(x);
        }
        z.iter_mut().zip(r.iter().zip(&pre)).for_each(|(z, (r, p))| *z = r * p);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    CgOutcome::Stalled(x)
}

/// MINRES for (A + shift·I) x = b; works for indefinite nonsingular systems.
pub(crate) fn minres(a: &SymMatrix, shift: f64, b: &[f64], rtol: f64, max_iter: usize) -> Vec<f64> {
    let n = a.n();
    let mut x = vec![0.0; n];
    let beta1 = norm(b);
    if beta1 == 0.0 {
        return x;
    }
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    for itn in 0..max_iter {
        let s = 1.0 / beta;
        v.iter_mut().zip(&y).for_each(|(v, y)| *v = s * y);
        a.matvec(&v, &mut y);
        axpy(shift, &v, &mut y);
        if itn >= 1 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm(&r2);
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        // w_new = (v − oldeps·w1 − delta·w2)/gamma with (w1, w2) = (w2_old, w_old)
        let w1 = std::mem::replace(&mut w2, w.clone());
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
        }
        axpy(phi, &w, &mut x);
        if phibar <= rtol * beta1 || beta == 0.0 {
            break;
        }
    }
    x
}
