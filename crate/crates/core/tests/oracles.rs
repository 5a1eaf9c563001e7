mod common;

use chebspline::ect::Derivatives;
use chebspline::{divided_difference, BSplineBasis, EctSystem, KnotTuple, ProjectionOperator, WeightSystem};
use common::*;

#[test]
fn cox_de_boor_oracle_is_a_partition_of_unity() {
    let p = random_mesh(7, 2, 4);
    let cb = CoxDeBoor::new(p.breakpoints(), 4);
    for s in 0..50 {
        let x = s as f64 / 49.0;
        let v = cb.values(x);
        let sum: f64 = (0..cb.dim()).map(|i| v[i] * (cb.knots[i + 4] - cb.knots[i]) / 4.0).sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }
}

#[test]
fn constant_weights_reproduce_cox_de_boor() {
    for k in 1..=4 {
        let p = random_mesh(9, 30 + k as u64, k);
        let basis = BSplineBasis::new(&p, &weights("constant", k)).unwrap();
        let cb = CoxDeBoor::new(p.breakpoints(), k);
        for m in 0..p.intervals() {
            let (lo, hi) = p.grid_interval(m);
            for s in 1..8 {
                let x = lo + (hi - lo) * s as f64 / 8.0;
                let ours: Vec<f64> = (0..basis.dim()).map(|i| basis.m(i, x).unwrap()).collect();
                let theirs = cb.values_on(m, x);
                assert!(rel_diff(&ours, &theirs) < 1e-10, "k={k} x={x}");
            }
        }
    }
}

#[test]
fn divided_differences_match_newton_table() {
    // u_k = x^{k-1}/(k-1)! is the leading monomial, so the ECT divided
    // difference is (k-1)! times the classical one.
    let f = |x: f64, j: usize| match j {
        0 => (2.0 * x).sin() + x.powi(5),
        1 => 2.0 * (2.0 * x).cos() + 5.0 * x.powi(4),
        2 => -4.0 * (2.0 * x).sin() + 20.0 * x.powi(3),
        3 => -8.0 * (2.0 * x).cos() + 60.0 * x * x,
        4 => 16.0 * (2.0 * x).sin() + 120.0 * x,
        _ => unreachable!(),
    };
    let g = Derivatives { max_order: 4, f };
    for (k, knots) in [
        (2, vec![0.1, 0.7]),
        (3, vec![0.2, 0.2, 0.9]),
        (4, vec![0.0, 0.3, 0.55, 1.0]),
        (4, vec![0.4, 0.4, 0.4, 0.8]),
        (5, vec![0.1, 0.1, 0.5, 0.5, 0.6]),
    ] {
        let sys = EctSystem::new(WeightSystem::constant(k, 0.0, 1.0).unwrap()).unwrap();
        let ours = divided_difference(&sys, &KnotTuple::new(knots.clone()).unwrap(), &g).unwrap();
        let fact: f64 = (1..k).map(|v| v as f64).product();
        let theirs = fact * newton_dd(&knots, &f);
        assert!((ours - theirs).abs() <= 1e-8 * theirs.abs().max(1.0), "{knots:?}: {ours} vs {theirs}");
    }
}

#[test]
fn exponential_monomials_match_nested_integrals() {
    let rates = [0.7, -0.3, 0.5, -0.9];
    let sys = EctSystem::new(WeightSystem::exponential(&rates, 0.0, 1.0).unwrap()).unwrap();
    for i in 0..4 {
        let exact = exponential_monomial(&rates, i, 0.0);
        for s in 0..=20 {
            let x = s as f64 / 20.0;
            let e = exact.eval(x);
            let v = sys.value(i, x).unwrap();
            // The closed form cancels O(1) terms near `a`, hence the absolute floor.
            assert!((v - e).abs() <= 1e-12 * e.abs() + 1e-13, "u_{i}({x}): {v} vs {e}");
        }
    }
}

#[test]
fn dense_projector_agrees_for_general_weights() {
    for (name, k) in [("exponential", 3), ("polynomial", 2), ("exponential", 4)] {
        let p = random_mesh(7, 17, k);
        let basis = BSplineBasis::new(&p, &weights(name, k)).unwrap();
        let proj = ProjectionOperator::new(basis.clone()).unwrap();
        let dense = DenseProjector::from_basis(&basis);
        let n = basis.dim();
        let g: Vec<f64> = (0..n * n).map(|q| proj.gram().get(q / n, q % n)).collect();
        let gd: Vec<f64> = (0..n * n).map(|q| dense.gram[(q / n, q % n)]).collect();
        assert!(rel_diff(&g, &gd) < 1e-10, "{name} k={k}: gram");
        let f = |x: f64| (4.0 * x).cos() * x.exp();
        assert!(rel_diff(&proj.project(&f).unwrap(), &dense.project(&f)) < 1e-9);
        for m in [0, 3, p.intervals() - 1] {
            let (lo, hi) = p.grid_interval(m);
            for t in [lo, 0.6 * lo + 0.4 * hi, hi] {
                let ours = proj.lebesgue_on(t, m).unwrap();
                let theirs = dense.lebesgue(m, t);
                assert!((ours - theirs).abs() < 1e-9 * theirs, "{name} k={k} t={t}: {ours} vs {theirs}");
            }
        }
    }
}

#[test]
fn lebesgue_function_is_the_sup_over_sign_patterns() {
    let p = random_mesh(6, 4, 3);
    let basis = BSplineBasis::new(&p, &weights("exponential", 3)).unwrap();
    let proj = ProjectionOperator::new(basis.clone()).unwrap();
    let dense = DenseProjector::from_basis(&basis);
    for m in [0, 2, 5] {
        let (lo, hi) = p.grid_interval(m);
        let t = 0.3 * lo + 0.7 * hi;
        let ours = proj.lebesgue_on(t, m).unwrap();
        let brute = dense.sign_pattern_lebesgue(m, t, 200);
        assert!(brute <= ours * (1.0 + 1e-9), "{brute} > {ours}");
        assert!(brute >= ours * (1.0 - 1e-4), "{brute} << {ours}");
    }
}

#[test]
fn constant_weight_derivative_is_the_classical_difference() {
    // Unit-integral splines: M_i' = k (M_i^{k-1} - M_{i+1}^{k-1}) / (t_{i+k} - t_i).
    for k in 2..=4 {
        let p = random_mesh(7, 60 + k as u64, k);
        let basis = BSplineBasis::new(&p, &weights("constant", k)).unwrap();
        let t = p.knots();
        let lower = CoxDeBoor::new(p.breakpoints(), k - 1);
        let low = |v: &[f64], j: usize| if j == 0 { 0.0 } else { v.get(j - 1).copied().unwrap_or(0.0) };
        for i in 0..basis.dim() {
            let width = t[i + k] - t[i];
            let h = basis.h(i).unwrap();
            assert!((h / (width / k as f64) - 1.0).abs() < 1e-8, "k={k} i={i}: h = {h}");
            for m in 0..p.intervals() {
                let (lo, hi) = p.grid_interval(m);
                let x = 0.35 * lo + 0.65 * hi;
                let v = lower.values_on(m, x);
                let want = k as f64 * (low(&v, i) - low(&v, i + 1)) / width;
                let got = basis.derivative_m(i, x).unwrap();
                assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "k={k} i={i} x={x}: {got} vs {want}");
            }
        }
    }
}
