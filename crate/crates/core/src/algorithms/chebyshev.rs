use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ChebyshevOutcome {
    pub solution: DMatrix<f64>,
    pub initial_residual_norm: f64,
    /// Number of calls made to `apply`.
    pub applies: usize,
}

/// `q` steps of Chebyshev iteration for `K x = b` with the spectrum of the
/// symmetric operator `K` inside `[lo, hi]`, `0 < lo <= hi`.
///
/// The caller supplies the starting residual `r0 = b - K x0`, so only `q - 1`
/// applications of `K` are made. Follows the three-term recurrence in Saad,
/// *Iterative Methods for Sparse Linear Systems*, Alg. 12.1.
pub fn chebyshev_solve(
    mut apply: impl FnMut(&DMatrix<f64>) -> Result<DMatrix<f64>>,
    x0: &DMatrix<f64>,
    r0: DMatrix<f64>,
    lo: f64,
    hi: f64,
    q: usize,
) -> Result<ChebyshevOutcome> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Config(format!("Chebyshev interval [{lo}, {hi}] must be positive")));
    }
    if q == 0 {
        return Err(Error::Config("Chebyshev order must be at least 1".into()));
    }
    let initial_residual_norm = r0.norm();
    let theta = 0.5 * (hi + lo);
    let delta = 0.5 * (hi - lo);

    let mut x = x0.clone();
    let mut dir = &r0 / theta;
    if delta <= f64::EPSILON * theta {
        // K is a multiple of the identity on the interval.
        x += dir;
        return Ok(ChebyshevOutcome { solution: x, initial_residual_norm, applies: 0 });
    }

    let sigma = theta / delta;
    let mut rho = 1.0 / sigma;
    let mut r = r0;
    let mut applies = 0;
    for k in 0..q {
        x += &dir;
        if k + 1 == q {
            break;
        }
        r -= apply(&dir)?;
        applies += 1;
        let rho_next = 1.0 / (2.0 * sigma - rho);
        dir = &dir * (rho_next * rho) + &r * (2.0 * rho_next / delta);
        rho = rho_next;
    }
    Ok(ChebyshevOutcome { solution: x, initial_residual_norm, applies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_graph, GraphSpec};

    fn system() -> (DMatrix<f64>, DMatrix<f64>, f64, f64) {
        let g = build_graph(&GraphSpec::RandomRegular { n: 10, degree: 3, seed: 4 }).unwrap();
        let lap = g.laplacian();
        let (c, beta) = (1.5, 0.7);
        let k = &lap * c + DMatrix::identity(10, 10) * beta;
        let lmax = g.laplacian_spectrum().last().copied().unwrap();
        let b = DMatrix::from_fn(10, 2, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        (k, b, beta, c * lmax + beta)
    }

    #[test]
    fn converges_to_dense_solve() {
        let (k, b, lo, hi) = system();
        let x0 = DMatrix::zeros(10, 2);
        let exact = k.clone().lu().solve(&b).unwrap();
        let out = chebyshev_solve(|x| Ok(&k * x), &x0, b.clone(), lo, hi, 60).unwrap();
        assert_eq!(out.applies, 59);
        let rel = (&out.solution - &exact).norm() / exact.norm();
        assert!(rel < 1e-10, "relative error {rel}");
    }

    #[test]
    fn first_order_is_scaled_residual_step() {
        let (k, b, lo, hi) = system();
        let x0 = DMatrix::from_element(10, 2, 0.3);
        let r0 = &b - &k * &x0;
        let out = chebyshev_solve(|_| panic!("no applies at order 1"), &x0, r0.clone(), lo, hi, 1).unwrap();
        let expect = &x0 + r0 * (2.0 / (lo + hi));
        assert!((out.solution - expect).amax() < 1e-15);
    }

    #[test]
    fn error_bound_shrinks_with_order() {
        let (k, b, lo, hi) = system();
        let x0 = DMatrix::zeros(10, 2);
        let exact = k.clone().lu().solve(&b).unwrap();
        let kappa = hi / lo;
        let rate = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
        let err0 = exact.norm();
        for q in [1, 2, 4, 8, 16, 32] {
            let out = chebyshev_solve(|x| Ok(&k * x), &x0, b.clone(), lo, hi, q).unwrap();
            let err = (&out.solution - &exact).norm();
            // ||e_q|| <= 2 r^q / (1 + r^{2q}) ||e_0|| in the K-norm; allow the
            // sqrt(kappa) factor for the Euclidean norm.
            let bound = 2.0 * rate.powi(q as i32) / (1.0 + rate.powi(2 * q as i32)) * err0 * kappa.sqrt();
            assert!(err <= bound * (1.0 + 1e-9), "q={q}: {err} > {bound}");
        }
    }

    #[test]
    fn rejects_bad_interval() {
        let x0 = DMatrix::zeros(2, 1);
        assert!(chebyshev_solve(|x| Ok(x.clone()), &x0, x0.clone(), 0.0, 1.0, 3).is_err());
        assert!(chebyshev_solve(|x| Ok(x.clone()), &x0, x0.clone(), 1.0, 2.0, 0).is_err());
    }
}
