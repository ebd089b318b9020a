//! Independent oracles for the numerical kernels and frozen reference values.

#![allow(clippy::needless_range_loop)]

use esd::channels::{self, ChannelSpec};
use esd::dynamics::{self, DeathVerdict};
use esd::linalg::{self, CMatrix4};
use esd::state::{DensityMatrix, Tolerances, XState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Matrix-exponential oracle (scipy.linalg.expm of the column-stacked Liouvillian, bisection on
// the smallest PT eigenvalue to 1e-14), frozen here.
const T_STAR_PURE_07: f64 = 1.0632075124539146;
const T_STAR_PSIWBC_KAPPA1: f64 = 0.16823611831060611;

fn random_hermitian(rng: &mut ChaCha8Rng) -> CMatrix4 {
    let mut m = linalg::zeros();
    for j in 0..4 {
        m[j][j] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for k in (j + 1)..4 {
            let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[j][k] = v;
            m[k][j] = v.conj();
        }
    }
    m
}

/// Characteristic polynomial λ⁴ + c3 λ³ + c2 λ² + c1 λ + c0 by Faddeev-LeVerrier.
fn char_poly(a: &CMatrix4) -> [Complex64; 5] {
    let n = 4;
    let mut c = [Complex64::new(0.0, 0.0); 5];
    c[n] = Complex64::new(1.0, 0.0);
    let mut m = linalg::zeros();
    for k in 1..=n {
        let prev = linalg::matmul(a, &m);
        m = linalg::add(&prev, &linalg::scale(&linalg::identity(), c[n - k + 1]));
        c[n - k] = -linalg::trace(&linalg::matmul(a, &m)) / k as f64;
    }
    c
}

/// Roots of a monic quartic by Durand-Kerner iteration.
fn quartic_roots(c: &[Complex64; 5]) -> [f64; 4] {
    let eval = |z: Complex64| ((((z + c[3]) * z + c[2]) * z + c[1]) * z) + c[0];
    let radius = 1.0 + c[..4].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: [Complex64; 4] = std::array::from_fn(|k| seed.powu(k as u32) * radius);
    for _ in 0..2000 {
        let prev = z;
        for i in 0..4 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            z[i] -= eval(z[i]) / denom;
        }
        if z.iter().zip(prev).all(|(a, b)| (a - b).norm() < 1e-15) {
            break;
        }
    }
    let mut roots = z.map(|v| v.re);
    roots.sort_by(f64::total_cmp);
    roots
}

#[test]
fn jacobi_matches_characteristic_polynomial_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in 0..1000 {
        let m = random_hermitian(&mut rng);
        let jac = linalg::jacobi_eigenvalues(&m);
        let poly = quartic_roots(&char_poly(&m));
        for (a, b) in jac.iter().zip(poly) {
            assert!((a - b).abs() < 1e-8, "matrix {n}: {jac:?} vs {poly:?}");
        }
    }
}

#[test]
fn jacobi_handles_degenerate_spectra() {
    // Bell-state partial transposes: eigenvalues {−½, ½, ½, ½}.
    let pt =
        esd::entanglement::partial_transpose(&XState::bell(esd::state::BellKind::PsiMinus).embed());
    let ev = linalg::jacobi_eigenvalues(&pt);
    assert!((ev[0] + 0.5).abs() < 1e-15);
    assert!(ev[1..].iter().all(|v| (v - 0.5).abs() < 1e-15));
}

#[test]
fn frozen_zero_temperature_death_time() {
    let ch = ChannelSpec::decay(1.0, 1.0, 0.0).unwrap();
    let r = dynamics::death_time(
        &XState::pure_phi(0.7).unwrap(),
        &ch,
        50.0,
        &Tolerances::default(),
    )
    .unwrap();
    let t = r.verdict.t_star().unwrap();
    assert!((t - T_STAR_PURE_07).abs() < 1e-8, "{t}");
    // Closed-form condition |w(t)|² = b(t)c(t) for the pure family.
    assert!((T_STAR_PURE_07 + (1.0 - (3.0f64 / 7.0).sqrt()).ln()).abs() < 1e-12);
}

#[test]
fn frozen_collective_death_time() {
    let tol = Tolerances::default();
    let x0 = XState::new(
        0.3,
        0.2,
        0.2,
        0.3,
        Complex64::new(0.28, 0.0),
        Complex64::new(0.0, 0.0),
        &tol,
    )
    .unwrap();
    let ch = ChannelSpec::collective(1.0).unwrap();
    match dynamics::death_time(&x0, &ch, 50.0, &tol).unwrap().verdict {
        DeathVerdict::FiniteDeath { t_star } => {
            assert!((t_star - T_STAR_PSIWBC_KAPPA1).abs() < 1e-8)
        }
        other => panic!("{other:?}"),
    }
}

/// Plain RK4 on the matrix generator with its own loop, independent of the superoperator.
fn rk4_matrix(ch: &ChannelSpec, rho: &DensityMatrix, t: f64, steps: usize) -> CMatrix4 {
    let h = t / steps as f64;
    let f = |m: &CMatrix4| {
        channels::generator(
            ch,
            &DensityMatrix::new(
                linalg::hermitize(m),
                &Tolerances::new(1e-2, 1e-2, 1e-2, 1e-2).unwrap(),
            )
            .unwrap(),
        )
    };
    let mut m = *rho.entries();
    let axpy = |x: &CMatrix4, a: f64, y: &CMatrix4| {
        linalg::add(x, &linalg::scale(y, Complex64::new(a, 0.0)))
    };
    for _ in 0..steps {
        let k1 = f(&m);
        let k2 = f(&axpy(&m, h / 2.0, &k1));
        let k3 = f(&axpy(&m, h / 2.0, &k2));
        let k4 = f(&axpy(&m, h, &k3));
        let sum = linalg::add(
            &linalg::add(&k1, &k4),
            &linalg::scale(&linalg::add(&k2, &k3), Complex64::new(2.0, 0.0)),
        );
        m = axpy(&m, h / 6.0, &sum);
    }
    m
}

#[test]
fn superoperator_integration_matches_matrix_route() {
    let tol = Tolerances::default();
    for ch in [
        ChannelSpec::decay(1.0, 0.6, 0.3).unwrap(),
        ChannelSpec::dephasing(0.5, 1.0).unwrap(),
        ChannelSpec::collective(1.0).unwrap(),
    ] {
        for seed in 0..5 {
            let rho = DensityMatrix::random(seed);
            let a = channels::propagate_numeric(&rho, &ch, 0.7, 1e-3, &tol).unwrap();
            let b = rk4_matrix(&ch, &rho, 0.7, 700);
            assert!(linalg::max_abs_diff(a.entries(), &b) < 1e-12);
        }
    }
}

#[test]
fn thermal_stationary_populations() {
    // Detailed balance: excited-state population n̄/(2n̄+1) on each qubit.
    for nbar in [0.1, 0.5, 2.0] {
        let s: f64 = nbar / (2.0 * nbar + 1.0);
        let q = esd::state::QubitState::diagonal(s);
        let thermal = DensityMatrix::product(&q, &q);
        let g = channels::generator(&ChannelSpec::decay(1.0, 0.5, nbar).unwrap(), &thermal);
        assert!(linalg::max_abs(&g) < 1e-15);
    }
}
