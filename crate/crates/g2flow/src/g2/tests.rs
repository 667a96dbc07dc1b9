use super::standard::*;
use super::*;
use crate::exterior::{contract, hodge, inner, pullback, wedge, Form, MetricTensor};
use crate::linalg::{matmul7, transpose7};
use crate::rng::SeededRng;

fn random_structure(rng: &mut SeededRng) -> (G2Structure, [[f64; 7]; 7]) {
    let a = rng.gl_plus(0.25);
    let s = G2Structure::new(&pullback(&normal_form(), &a)).unwrap();
    (s, a)
}

fn close(a: &Form<f64>, b: &Form<f64>, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol * (1.0 + a.coeff_norm().max(b.coeff_norm()))
}

#[test]
fn normal_form_metric_is_identity() {
    let (m, vol) = metric_from_form(&normal_form()).unwrap();
    let id = MetricTensor::<f64>::identity();
    for i in 0..7 {
        for j in 0..7 {
            assert!((m.g()[i][j] - id.g()[i][j]).abs() < 1e-14);
        }
    }
    assert!((vol - 1.0).abs() < 1e-14);
}

#[test]
fn scaled_normal_form() {
    for lambda in [0.5, 2.0, 3.7] {
        let (m, vol) = metric_from_form(&normal_form().scale(lambda)).unwrap();
        let expect = f64::powf(lambda, 2.0 / 3.0);
        for i in 0..7 {
            assert!((m.g()[i][i] - expect).abs() < 1e-13 * expect);
        }
        assert!((vol - f64::powf(lambda, 7.0 / 3.0)).abs() < 1e-13 * vol);
    }
}

#[test]
fn pullback_metric_is_ata() {
    let mut rng = SeededRng::new(101);
    for _ in 0..100 {
        let (s, a) = random_structure(&mut rng);
        let ata = matmul7(&transpose7(&a), &a);
        for i in 0..7 {
            for j in 0..7 {
                assert!((s.metric().g()[i][j] - ata[i][j]).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn positivity() {
    assert!(is_positive(&normal_form()).0);
    let (ok, sig) = is_positive(&normal_form().scale(-1.0));
    assert!(!ok);
    assert_eq!(sig.negative, 7);
    let (ok, sig) = is_positive(&Form::basis(&[1, 2, 3]));
    assert!(!ok);
    assert!(sig.zero > 0);
    assert!(matches!(
        metric_from_form(&normal_form().scale(-1.0)),
        Err(crate::Error::NotPositive { .. })
    ));
}

#[test]
fn theta_is_star_omega_and_pairs_to_seven() {
    let s = G2Structure::standard();
    assert!(close(&s.theta(), &normal_dual(), 1e-15));
    let mut rng = SeededRng::new(5);
    let (s, _) = random_structure(&mut rng);
    let top = crate::exterior::top_coeff(&wedge(&s.omega(), &s.theta()).unwrap());
    assert!((top - 7.0 * s.vol()).abs() < 1e-12);
}

#[test]
fn projector_anchors() {
    let s = G2Structure::standard();
    let om = s.omega();
    let (t1, t7, t27) = s.project3(&om).unwrap();
    assert!(close(&t1, &om, 1e-14) && t7.coeff_norm() < 1e-14 && t27.coeff_norm() < 1e-14);
    let x = hodge(&wedge(&Form::basis(&[1]), &om).unwrap(), s.metric());
    let (t1, t7, t27) = s.project3(&x).unwrap();
    assert!(t1.coeff_norm() < 1e-14 && t27.coeff_norm() < 1e-14 && close(&t7, &x, 1e-14));
    assert!((inner(&t7, &t7, s.metric()).unwrap() - 4.0).abs() < 1e-13);

    let e1o = contract(&Form::basis(&[1]), &om, s.metric()).unwrap();
    let (a7, a14) = s.project2(&e1o).unwrap();
    assert!(close(&a7, &e1o, 1e-14) && a14.coeff_norm() < 1e-14);
}

#[test]
fn projector_families_on_random_forms() {
    let mut rng = SeededRng::new(17);
    for _ in 0..20 {
        let (s, _) = random_structure(&mut rng);
        let m = s.metric();
        let ranks = [&s.proj3_1, &s.proj3_7, &s.proj3_27].map(|p| p.trace());
        assert!((ranks[0] - 1.0).abs() < 1e-9 && (ranks[1] - 7.0).abs() < 1e-9 && (ranks[2] - 27.0).abs() < 1e-9);
        assert!((s.proj2_7.trace() - 7.0).abs() < 1e-9 && (s.proj2_14.trace() - 14.0).abs() < 1e-9);
        for p in [&s.proj3_1, &s.proj3_7, &s.proj3_27] {
            assert!((p * p - p).amax() < 1e-10);
        }
        assert!((&s.proj3_7 * &s.proj3_27).amax() < 1e-10);
        let t = rng.form(3);
        let (t1, t7, t27) = s.project3(&t).unwrap();
        assert!(inner(&t1, &t7, m).unwrap().abs() < 1e-10);
        assert!(inner(&t7, &t27, m).unwrap().abs() < 1e-10);
        // Λ³₂₇ is cut out by both wedge conditions
        assert!(wedge(&t27, &s.omega()).unwrap().coeff_norm() < 1e-10);
        assert!(wedge(&t27, &s.theta()).unwrap().coeff_norm() < 1e-10);

        // 2-forms: closed forms of the projections and the contraction identity
        let eta = rng.form(2);
        let (e7, e14) = s.project2(&eta).unwrap();
        let sw = s.star(&wedge(&eta, &s.omega()).unwrap());
        assert!(close(&e7, &(&eta + &sw).scale(1.0 / 3.0), 1e-10));
        assert!(close(&e14, &(&eta.scale(2.0) - &sw).scale(1.0 / 3.0), 1e-10));
        let back = contract(&contract(&eta, &s.omega(), m).unwrap(), &s.omega(), m).unwrap();
        assert!(close(&back, &e7.scale(3.0), 1e-10));
        assert!(contract(&e14, &s.omega(), m).unwrap().coeff_norm() < 1e-10);
    }
}

#[test]
fn p_operator() {
    let s = G2Structure::standard();
    let om = s.omega();
    assert!(close(&s.p_apply(&om).unwrap(), &om.scale(4.0 / 3.0), 1e-14));
    let mut rng = SeededRng::new(23);
    let (s, _) = random_structure(&mut rng);
    let (_, _, t27) = s.project3(&rng.form(3)).unwrap();
    assert!(close(&s.p_apply(&t27).unwrap(), &t27.scale(-1.0), 1e-10));
    let (t, u) = (rng.form(3), rng.form(3));
    let m = s.metric();
    let lhs = inner(&s.p_apply(&t).unwrap(), &u, m).unwrap();
    let rhs = inner(&t, &s.p_apply(&u).unwrap(), m).unwrap();
    assert!((lhs - rhs).abs() < 1e-10);
}

#[test]
fn theta_derivative_matches_finite_difference() {
    let s = G2Structure::standard();
    let td = s.theta_derivative(&s.omega()).unwrap();
    assert!(close(&td, &normal_dual().scale(4.0 / 3.0), 1e-14));
    let mut rng = SeededRng::new(29);
    for _ in 0..10 {
        let (s, _) = random_structure(&mut rng);
        let raw = rng.form(3);
        let dir = raw.scale(1.0 / raw.coeff_norm());
        let h = 1e-5;
        let plus = G2Structure::new(&(&s.omega() + &dir.scale(h))).unwrap().theta();
        let minus = G2Structure::new(&(&s.omega() - &dir.scale(h))).unwrap().theta();
        let fd = (&plus - &minus).scale(0.5 / h);
        let an = s.theta_derivative(&dir).unwrap();
        assert!(fd.max_abs_diff(&an) <= 1e-7, "{}", fd.max_abs_diff(&an));
    }
}

#[test]
fn hitchin_derivative_matches_volume() {
    let s = G2Structure::standard();
    assert!((s.hitchin_derivative(&s.omega()).unwrap() - 7.0 / 3.0).abs() < 1e-14);
    let mut rng = SeededRng::new(31);
    for _ in 0..10 {
        let (s, _) = random_structure(&mut rng);
        let (_, _, t27) = s.project3(&rng.form(3)).unwrap();
        assert!(s.hitchin_derivative(&t27).unwrap().abs() < 1e-10);
        let dir = rng.form(3);
        let h = 1e-5;
        let vp = metric_from_form(&(&s.omega() + &dir.scale(h))).unwrap().1;
        let vm = metric_from_form(&(&s.omega() - &dir.scale(h))).unwrap().1;
        assert!(((vp - vm) / (2.0 * h) - s.hitchin_derivative(&dir).unwrap()).abs() < 1e-7);
    }
}

#[test]
fn su3_frame_of_normal_form() {
    let s = G2Structure::standard();
    let f = su3_frame(&s, &Form::basis(&[7])).unwrap();
    assert!(close(&f.omega2, &kahler_form(), 1e-15));
    assert!(close(&f.psi_plus, &psi_plus(), 1e-15));
    assert!(close(&f.psi_minus, &psi_minus(), 1e-15));
    assert!(su3_frame(&s, &Form::basis(&[7]).scale(2.0)).is_err());
}

#[test]
fn su3_decomposition_anchors() {
    let s = G2Structure::standard();
    let xi = Form::basis(&[7]);
    let k = su3_decompose(&s, &xi, &s.omega()).unwrap();
    assert!((k.a - 1.0).abs() < 1e-14 && k.b.abs() < 1e-14 && k.c.abs() < 1e-14);
    assert!(k.x.coeff_norm() < 1e-14 && k.beta8.coeff_norm() < 1e-14 && k.gamma12.coeff_norm() < 1e-14);
    let k = su3_decompose(&s, &xi, &psi_minus()).unwrap();
    assert!((k.b - 1.0).abs() < 1e-14 && k.a.abs() < 1e-14 && k.c.abs() < 1e-14);
    let t = &wedge(&kahler_form(), &xi).unwrap().scale(-4.0) + &psi_plus().scale(3.0);
    let k = su3_decompose(&s, &xi, &t).unwrap();
    assert!((k.c - 1.0).abs() < 1e-14 && k.a.abs() < 1e-14 && k.b.abs() < 1e-14);
}

#[test]
fn su3_decomposition_reassembles_and_is_orthogonal() {
    let mut rng = SeededRng::new(37);
    for _ in 0..20 {
        let (s, _) = random_structure(&mut rng);
        let m = s.metric();
        let raw = rng.form(1);
        let xi = raw.scale(1.0 / inner(&raw, &raw, m).unwrap().sqrt());
        let t = rng.form(3);
        let k = su3_decompose(&s, &xi, &t).unwrap();
        let back = su3_reassemble(&s, &xi, &k).unwrap();
        assert!(close(&back, &t, 1e-10));
        let f = su3_frame(&s, &xi).unwrap();
        assert!(inner(&k.beta8, &f.omega2, m).unwrap().abs() < 1e-10);
        assert!(inner(&k.gamma12, &f.psi_plus, m).unwrap().abs() < 1e-10);
        assert!(inner(&k.gamma12, &f.psi_minus, m).unwrap().abs() < 1e-10);
        let xm = contract(&k.x, &f.psi_minus, m).unwrap();
        assert!(inner(&k.beta8, &xm, m).unwrap().abs() < 1e-10);
        assert!(inner(&xm, &f.omega2, m).unwrap().abs() < 1e-10);
    }
}

#[test]
fn theta_derivative_matches_dual_numbers() {
    use crate::dual::Dual;
    let mut rng = SeededRng::new(41);
    for _ in 0..10 {
        let (s, _) = random_structure(&mut rng);
        let dir = rng.form(3);
        let om: Vec<Dual> = s.omega().coeffs().iter().zip(dir.coeffs()).map(|(&v, &d)| Dual::new(v, d)).collect();
        let ps = PointStructure::new(&om).unwrap();
        let exact = Form::from_coeffs(4, ps.theta.iter().map(|x| x.dot).collect()).unwrap();
        assert!(close(&exact, &s.theta_derivative(&dir).unwrap(), 1e-12));
    }
}
