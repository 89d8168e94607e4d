use nalgebra::DMatrix;

use super::{generate_noiseless, Scm};
use crate::{Error, Result};

const RADIUS_LIMIT: f64 = 0.999;
const DECAY_STEPS: usize = 500;
const DECAY_LIMIT: f64 = 1e-3;

/// `(I - C)^{-1}` where `C` holds the contemporaneous coefficients.
fn contemporaneous_inverse(scm: &Scm) -> DMatrix<f64> {
    let n = scm.n_total();
    let mut c = DMatrix::<f64>::identity(n, n);
    for (j, mechs) in scm.cross().iter().enumerate() {
        for m in mechs.iter().filter(|m| m.lag == 0) {
            c[(j, m.source)] -= m.coeff;
        }
    }
    // I - C is unit triangular up to a permutation for an acyclic C
    c.try_inverse().expect("acyclic contemporaneous graph gives an invertible I - C")
}

/// Companion matrix of the reduced VAR form, `n * tau_max` square.
fn companion(scm: &Scm) -> DMatrix<f64> {
    let n = scm.n_total();
    let p = scm.tau_max();
    let b = contemporaneous_inverse(scm);
    let mut phi = DMatrix::<f64>::zeros(n * p, n * p);
    for s in 1..=p {
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (j, mechs) in scm.cross().iter().enumerate() {
            for m in mechs.iter().filter(|m| m.lag == s) {
                a[(j, m.source)] += m.coeff;
            }
            if s == 1 {
                a[(j, j)] += scm.auto()[j];
            }
        }
        let block = &b * a;
        phi.view_mut((0, (s - 1) * n), (n, n)).copy_from(&block);
    }
    for k in n..n * p {
        phi[(k, k - n)] = 1.0;
    }
    phi
}

pub fn spectral_radius(scm: &Scm) -> f64 {
    if scm.tau_max() == 0 {
        return 0.0;
    }
    companion(scm)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Spectral radius below 0.999 and a noise-free run from all ones decaying
/// below 1e-3 within 500 steps.
pub fn check_stationarity(scm: &Scm) -> bool {
    if spectral_radius(scm) >= RADIUS_LIMIT {
        return false;
    }
    let n = scm.n_total();
    let start = vec![1.0; scm.tau_max() * n];
    let Ok(series) = generate_noiseless(scm, None, &start, DECAY_STEPS) else {
        return false;
    };
    series
        .row(DECAY_STEPS - 1)
        .iter()
        .all(|v| v.abs() < DECAY_LIMIT)
}

/// Per-variable standard deviation of the stationary process.
pub fn stationary_std(scm: &Scm) -> Result<Vec<f64>> {
    let n = scm.n_total();
    let p = scm.tau_max();
    let b = contemporaneous_inverse(scm);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        scm.noise_std().iter().map(|s| s * s),
    ));
    let q = &b * d * b.transpose();
    if p == 0 {
        return Ok((0..n).map(|j| q[(j, j)].sqrt()).collect());
    }
    if spectral_radius(scm) >= 1.0 {
        return Err(Error::InvalidArgument("process is not stationary".into()));
    }
    // Sigma = sum_k Phi^k Q Phi^k', by doubling
    let mut phi = companion(scm);
    let mut sigma = DMatrix::<f64>::zeros(n * p, n * p);
    sigma.view_mut((0, 0), (n, n)).copy_from(&q);
    for _ in 0..64 {
        let next = &sigma + &phi * &sigma * phi.transpose();
        let change = (&next - &sigma).abs().max();
        sigma = next;
        phi = &phi * &phi;
        if change <= 1e-15 * sigma.abs().max() {
            break;
        }
    }
    Ok((0..n).map(|j| sigma[(j, j)].max(0.0).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{generate, Mechanism};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(a: f64) -> Scm {
        Scm::new(vec![a], vec![vec![]], vec![1.0], vec![0], 0).unwrap()
    }

    #[test]
    fn single_variable_cases() {
        assert!(check_stationarity(&single(0.5)));
        assert!(!check_stationarity(&single(1.5)));
        assert!(!check_stationarity(&single(-1.0)));
        assert!((spectral_radius(&single(-0.7)) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn two_variable_feedback_matches_closed_form() {
        // A = [[a, c], [c, a]] has eigenvalues a + c and a - c
        let check = |a: f64, c: f64| {
            let m = |s| vec![Mechanism { source: s, lag: 1, coeff: c }];
            let scm = Scm::new(vec![a, a], vec![m(1), m(0)], vec![1.0; 2], vec![0, 1], 0).unwrap();
            let expected = (a + c).abs().max((a - c).abs());
            assert!((spectral_radius(&scm) - expected).abs() < 1e-12);
            assert_eq!(check_stationarity(&scm), expected < 0.999);
        };
        check(0.6, 0.6);
        check(0.6, 0.3);
        check(0.4, -0.5);
    }

    #[test]
    fn contemporaneous_links_are_solved_out() {
        // X1_t = 0.9 X0_t + 0.5 X1_{t-1}; X0_t = 0.5 X1_{t-1}: reduced lag
        // matrix [[0, 0.5], [0, 0.45 + 0.5]]
        let scm = Scm::new(
            vec![0.0, 0.5],
            vec![
                vec![Mechanism { source: 1, lag: 1, coeff: 0.5 }],
                vec![Mechanism { source: 0, lag: 0, coeff: 0.9 }],
            ],
            vec![1.0; 2],
            vec![0, 1],
            0,
        )
        .unwrap();
        assert!((spectral_radius(&scm) - 0.95).abs() < 1e-12);
    }

    #[test]
    fn stationary_std_matches_ar1_formula_and_simulation() {
        let scm = Scm::new(vec![0.6], vec![vec![]], vec![2.0], vec![0], 0).unwrap();
        let sd = stationary_std(&scm).unwrap()[0];
        assert!((sd - 2.0 / (1.0f64 - 0.36).sqrt()).abs() < 1e-12);

        let scm = Scm::new(
            vec![0.5, 0.4],
            vec![vec![], vec![Mechanism { source: 0, lag: 0, coeff: 0.5 }]],
            vec![1.0, 0.5],
            vec![0, 1],
            1,
        )
        .unwrap();
        let sd = stationary_std(&scm).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = generate(&scm, None, &[0.0, 0.0], 200_000, &mut rng).unwrap();
        let col = s.column(1);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let emp = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64).sqrt();
        assert!((emp - sd[1]).abs() < 0.02 * sd[1], "{emp} vs {}", sd[1]);
    }
}
