mod common;

use jit_core::schedule::{
    beta_timesteps, inv_reg_inc_beta, reg_inc_beta, uniform_timesteps, JIT_ALPHA, JIT_BETA,
};

#[test]
fn forward_beta_matches_quadrature() {
    for i in 1..100 {
        let x = i as f64 / 100.0;
        let got = reg_inc_beta(x, JIT_ALPHA, JIT_BETA).unwrap();
        let want = common::reg_inc_beta(x, JIT_ALPHA, JIT_BETA);
        assert!((got - want).abs() < 1e-8, "x={x}: {got} vs {want}");
    }
}

#[test]
fn inverse_beta_matches_bisection_oracle() {
    for i in 1..100 {
        let s = i as f64 / 100.0;
        let got = inv_reg_inc_beta(s, JIT_ALPHA, JIT_BETA).unwrap();
        let want = common::inv_reg_inc_beta(s, JIT_ALPHA, JIT_BETA);
        assert!((got - want).abs() < 1e-6, "s={s}: {got} vs {want}");
    }
}

#[test]
fn inverse_over_other_shapes() {
    for (a, b) in [(2.0, 3.0), (1.0, 0.5), (1.2, 1.7)] {
        for i in [1, 13, 50, 77, 99] {
            let s = i as f64 / 100.0;
            let x = inv_reg_inc_beta(s, a, b).unwrap();
            assert!((x - common::inv_reg_inc_beta(s, a, b)).abs() < 1e-6);
        }
    }
}

#[test]
fn uniform_case_is_identity() {
    for i in 0..=1000 {
        let s = i as f64 / 1000.0;
        assert!((inv_reg_inc_beta(s, 1.0, 1.0).unwrap() - s).abs() < 1e-9);
    }
    let u = uniform_timesteps(40).unwrap();
    let b = beta_timesteps(40, 1.0, 1.0, false).unwrap();
    for (x, y) in u.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn warped_grids_are_strictly_increasing() {
    for n in [1, 2, 7, 11, 18, 50, 300] {
        for invert in [false, true] {
            let t = beta_timesteps(n, JIT_ALPHA, JIT_BETA, invert).unwrap();
            assert_eq!(t.len(), n + 1);
            assert_eq!((t[0], t[n]), (0.0, 1.0));
            assert!(t.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
