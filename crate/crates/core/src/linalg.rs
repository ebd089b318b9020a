//! Fixed-size complex matrix helpers for two-qubit (4×4) and single-qubit (2×2) operators.
//!
//! Indices follow the product basis |1⟩=|↑↑⟩, |2⟩=|↑↓⟩, |3⟩=|↓↑⟩, |4⟩=|↓↓⟩, stored 0-based:
//! index = 2·i_A + i_B with ↑ = 0 and ↓ = 1.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;

pub type CMatrix4 = [[Complex64; 4]; 4];
pub type CMatrix2 = [[Complex64; 2]; 2];

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

const JACOBI_MAX_SWEEPS: usize = 50;
const JACOBI_OFF_TOL: f64 = 1e-14;

pub fn zeros() -> CMatrix4 {
    [[ZERO; 4]; 4]
}

pub fn identity() -> CMatrix4 {
    let mut m = zeros();
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = ONE;
    }
    m
}

pub fn diag(values: [f64; 4]) -> CMatrix4 {
    let mut m = zeros();
    for (k, v) in values.into_iter().enumerate() {
        m[k][k] = Complex64::new(v, 0.0);
    }
    m
}

pub fn matmul(a: &CMatrix4, b: &CMatrix4) -> CMatrix4 {
    let mut out = zeros();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..4 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn dagger(a: &CMatrix4) -> CMatrix4 {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

pub fn add(a: &CMatrix4, b: &CMatrix4) -> CMatrix4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn sub(a: &CMatrix4, b: &CMatrix4) -> CMatrix4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] -= b[i][j];
        }
    }
    out
}

pub fn scale(a: &CMatrix4, s: Complex64) -> CMatrix4 {
    let mut out = *a;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

pub fn trace(a: &CMatrix4) -> Complex64 {
    (0..4).map(|k| a[k][k]).sum()
}

/// Largest entry magnitude.
pub fn max_abs(a: &CMatrix4) -> f64 {
    a.iter()
        .flat_map(|row| row.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix4, b: &CMatrix4) -> f64 {
    max_abs(&sub(a, b))
}

/// max |a_jk − conj(a_kj)| over all entries (diagonal imaginary parts included).
pub fn hermitian_asymmetry(a: &CMatrix4) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..4 {
        for k in j..4 {
            worst = worst.max((a[j][k] - a[k][j].conj()).norm());
        }
    }
    worst
}

/// Average with the conjugate transpose; the result is Hermitian bit-for-bit.
pub fn hermitize(a: &CMatrix4) -> CMatrix4 {
    let mut out = zeros();
    for j in 0..4 {
        out[j][j] = Complex64::new(a[j][j].re, 0.0);
        for k in (j + 1)..4 {
            let v = (a[j][k] + a[k][j].conj()) * 0.5;
            out[j][k] = v;
            out[k][j] = v.conj();
        }
    }
    out
}

pub fn is_finite(a: &CMatrix4) -> bool {
    a.iter()
        .flat_map(|row| row.iter())
        .all(|v| v.re.is_finite() && v.im.is_finite())
}

pub fn kron(a: &CMatrix2, b: &CMatrix2) -> CMatrix4 {
    let mut out = zeros();
    for ia in 0..2 {
        for ja in 0..2 {
            for ib in 0..2 {
                for jb in 0..2 {
                    out[2 * ia + ib][2 * ja + jb] = a[ia][ja] * b[ib][jb];
                }
            }
        }
    }
    out
}

pub fn identity2() -> CMatrix2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn pauli_x() -> CMatrix2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_y() -> CMatrix2 {
    [[ZERO, -I], [I, ZERO]]
}

pub fn pauli_z() -> CMatrix2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

/// σ− : |↑⟩ → |↓⟩ (↑ is index 0).
pub fn sigma_minus() -> CMatrix2 {
    [[ZERO, ZERO], [ONE, ZERO]]
}

/// σ+ : |↓⟩ → |↑⟩.
pub fn sigma_plus() -> CMatrix2 {
    [[ZERO, ONE], [ZERO, ZERO]]
}

/// Eigenvalues of a Hermitian 4×4 matrix by cyclic complex Jacobi rotations, sorted ascending.
///
/// Only the upper triangle and the real part of the diagonal are trusted; callers are
/// expected to check Hermiticity first.
pub fn jacobi_eigenvalues(m: &CMatrix4) -> [f64; 4] {
    let mut a = hermitize(m);
    let scale = frobenius(&a);
    let threshold = JACOBI_OFF_TOL * scale.max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                rotate(&mut a, p, q);
            }
        }
    }

    let mut ev = [a[0][0].re, a[1][1].re, a[2][2].re, a[3][3].re];
    ev.sort_by(f64::total_cmp);
    ev
}

fn frobenius(a: &CMatrix4) -> f64 {
    a.iter()
        .flat_map(|row| row.iter())
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn off_diagonal_norm(a: &CMatrix4) -> f64 {
    let mut s = 0.0;
    for j in 0..4 {
        for k in 0..4 {
            if j != k {
                s += a[j][k].norm_sqr();
            }
        }
    }
    s.sqrt()
}

// One unitary rotation A ← U†AU zeroing a_pq, with U = D·P where D rephases q so that a_pq is
// real and P is the real Jacobi rotation.
fn rotate(a: &mut CMatrix4, p: usize, q: usize) {
    let apq = a[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let theta = (a[q][q].re - a[p][p].re) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;

    // A ← A·U (columns p, q)
    for row in a.iter_mut() {
        let (akp, akq) = (row[p], row[q]);
        row[p] = akp * u_pp + akq * u_qp;
        row[q] = akp * u_pq + akq * u_qq;
    }
    // A ← U†·A (rows p, q)
    for k in 0..4 {
        let (bpk, bqk) = (a[p][k], a[q][k]);
        a[p][k] = u_pp.conj() * bpk + u_qp.conj() * bqk;
        a[q][k] = u_pq.conj() * bpk + u_qq.conj() * bqk;
    }
    a[p][q] = ZERO;
    a[q][p] = ZERO;
    a[p][p].im = 0.0;
    a[q][q].im = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_input_is_returned_sorted() {
        let ev = jacobi_eigenvalues(&diag([0.4, 0.1, 0.3, 0.2]));
        assert_eq!(ev, [0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn complex_two_by_two_block() {
        // [[1, i],[−i, 1]] has eigenvalues 0 and 2.
        let mut m = zeros();
        m[0][0] = ONE;
        m[1][1] = ONE;
        m[0][1] = I;
        m[1][0] = -I;
        let ev = jacobi_eigenvalues(&m);
        let expect = [0.0, 0.0, 0.0, 2.0];
        for (e, x) in ev.iter().zip(expect) {
            assert!((e - x).abs() < 1e-14, "{ev:?}");
        }
    }

    #[test]
    fn dense_matrix_trace_is_preserved() {
        let mut m = zeros();
        let vals = [
            [c(0.3, 0.0), c(0.1, 0.2), c(-0.05, 0.1), c(0.2, -0.3)],
            [c(0.0, 0.0), c(0.2, 0.0), c(0.07, 0.01), c(-0.1, 0.1)],
            [c(0.0, 0.0), c(0.0, 0.0), c(-0.4, 0.0), c(0.3, 0.3)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.9, 0.0)],
        ];
        for j in 0..4 {
            for k in j..4 {
                m[j][k] = vals[j][k];
                m[k][j] = vals[j][k].conj();
            }
        }
        let ev = jacobi_eigenvalues(&m);
        let sum: f64 = ev.iter().sum();
        assert!((sum - trace(&m).re).abs() < 1e-12);
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn kron_of_paulis_matches_index_convention() {
        // σz ⊗ I is diag(1, 1, −1, −1) in the |↑↑⟩,|↑↓⟩,|↓↑⟩,|↓↓⟩ order.
        let m = kron(&pauli_z(), &identity2());
        assert_eq!(m, diag([1.0, 1.0, -1.0, -1.0]));
        let m = kron(&identity2(), &pauli_z());
        assert_eq!(m, diag([1.0, -1.0, 1.0, -1.0]));
    }

    #[test]
    fn hermitize_is_exact() {
        let mut m = identity();
        m[0][3] = c(0.1, 0.2);
        m[3][0] = c(0.1, -0.2 + 1e-13);
        let h = hermitize(&m);
        assert_eq!(hermitian_asymmetry(&h), 0.0);
    }
}
