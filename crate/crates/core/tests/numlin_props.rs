mod common;

use cubobs::numlin::{self, Mat, Vector};
use proptest::prelude::*;

fn matrix(max_r: usize, max_c: usize) -> impl Strategy<Value = Mat> {
    (1..=max_r, 1..=max_c).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0..10.0f64, r * c).prop_map(move |v| Mat::from_row_slice(r, c, &v))
    })
}

fn symmetric(max_n: usize) -> impl Strategy<Value = Mat> {
    matrix(max_n, max_n).prop_map(|m| {
        let n = m.nrows().min(m.ncols());
        let sq = m.view((0, 0), (n, n)).into_owned();
        (&sq + sq.transpose()) * 0.5
    })
}

proptest! {
    #[test]
    fn pinv_satisfies_penrose_conditions(m in matrix(6, 6)) {
        let p = numlin::pinv(&m).unwrap();
        let scale = m.abs().max().max(1.0);
        for r in numlin::penrose_residuals(&m, &p) {
            prop_assert!(r <= 1e-9 * scale * scale, "residual {r}");
        }
    }

    #[test]
    fn pinv_of_rank_deficient_product(seed in any::<u64>(), r in 1usize..=6, c in 1usize..=6) {
        let mut rng = common::rng(seed);
        let k = (seed as usize) % r.min(c);
        let m = common::random_mat(&mut rng, r, k) * common::random_mat(&mut rng, k, c);
        let p = numlin::pinv(&m).unwrap();
        let rs = numlin::penrose_residuals(&m, &p);
        prop_assert!(rs.iter().all(|r| *r <= 1e-9), "{:?}", rs);
        prop_assert_eq!(numlin::mat_rank(&m, numlin::DEFAULT_RANK_RTOL).unwrap(), k);
    }

    #[test]
    fn svd_reconstructs(m in matrix(6, 6)) {
        let (u, sigma, v) = numlin::svd(&m);
        let k = sigma.len();
        prop_assert_eq!(k, m.nrows().min(m.ncols()));
        prop_assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
        let back = &u * Mat::from_diagonal(&Vector::from_vec(sigma)) * v.transpose();
        prop_assert!((back - &m).abs().max() <= 1e-12 * m.abs().max().max(1.0) * 10.0);
        prop_assert!((v.transpose() * &v - Mat::identity(k, k)).abs().max() <= 1e-12);
    }

    #[test]
    fn eigenvalues_invariant_under_orthogonal_similarity(s in symmetric(6), seed in any::<u64>()) {
        let n = s.nrows();
        let q = common::random_orthogonal(&mut common::rng(seed), n);
        let (a, _) = numlin::sym_eigen(&s).unwrap();
        let (b, _) = numlin::sym_eigen(&(&q * &s * q.transpose())).unwrap();
        let scale = s.abs().max().max(1.0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn negative_margin_means_negative_quadratic_form(s in symmetric(6), gap in 1e-3..5.0f64, seed in any::<u64>()) {
        let n = s.nrows();
        let top = s.clone().symmetric_eigen().eigenvalues.max();
        let s = s - Mat::identity(n, n) * (top + gap);
        let margin = numlin::definiteness_margin(&s).unwrap();
        prop_assert!(margin < 0.0);
        let mut rng = common::rng(seed);
        for _ in 0..20 {
            let v = common::random_vec(&mut rng, s.nrows());
            if v.norm() < 1e-6 {
                continue;
            }
            let q = v.dot(&(&s * &v));
            prop_assert!(q < 0.0);
            prop_assert!(q <= margin * v.norm_squared() * (1.0 - 1e-9));
        }
    }

    #[test]
    fn lyapunov_solution_satisfies_equation(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = common::rng(seed);
        let mut g = common::random_mat(&mut rng, n, n);
        let shift = numlin::spectral_abscissa(&g).unwrap() + 0.5;
        g -= Mat::identity(n, n) * shift;
        let q = Mat::identity(n, n);
        let x = numlin::solve_lyapunov(&g, &q).unwrap();
        let res = g.transpose() * &x + &x * &g + &q;
        prop_assert!(res.abs().max() <= 1e-8 * x.abs().max().max(1.0));
        prop_assert!(x.clone().symmetric_eigen().eigenvalues.min() > 0.0);
    }

    #[test]
    fn spd_solve_matches_inverse(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = common::rng(seed);
        let p = common::random_spd(&mut rng, n);
        let b = common::random_mat(&mut rng, n, 2);
        let x = numlin::spd_solve(&p, &b).unwrap();
        prop_assert!((&p * &x - &b).abs().max() <= 1e-9);
    }

    #[test]
    fn clipped_matrix_respects_floor(s in symmetric(5), floor in 1e-6..1.0f64) {
        let c = numlin::clip_eigenvalues(&s, floor).unwrap();
        let (vals, _) = numlin::sym_eigen(&c).unwrap();
        prop_assert!(vals[0] >= floor * (1.0 - 1e-9) - 1e-12);
    }
}

#[test]
fn parse_matrix_layout() {
    let m = numlin::parse_matrix("[1 2; 3 4]").unwrap();
    assert_eq!(m, Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    let v = numlin::parse_matrix("[10; -3]").unwrap();
    assert_eq!(v, Mat::from_column_slice(2, 1, &[10.0, -3.0]));
    assert!(numlin::parse_matrix("[1 2; 3]").is_err());
}

#[test]
fn range_basis_spans_columns() {
    let m = Mat::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 0.0]);
    let b = numlin::range_basis(&m, numlin::DEFAULT_RANK_RTOL).unwrap();
    assert_eq!(b.ncols(), 1);
    let proj = &b * b.transpose() * &m;
    assert!((proj - &m).abs().max() < 1e-12);
}
