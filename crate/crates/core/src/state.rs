//! Two-qubit states: validated density matrices, the X-state family and its named subfamilies,
//! reduced states, observables, random sampling and the textual state literals.
//!
//! Basis order is fixed everywhere: |1⟩=|↑↑⟩, |2⟩=|↑↓⟩, |3⟩=|↓↑⟩, |4⟩=|↓↓⟩ (0-based in code).
//! An X state has only diagonal and anti-diagonal entries:
//!
//! ```text
//!     ⎡ a  0  0  w ⎤
//!     ⎢ 0  b  z  0 ⎥
//!     ⎢ 0  z* c  0 ⎥
//!     ⎣ w* 0  0  d ⎦
//! ```

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{self, CMatrix2, CMatrix4, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not Hermitian: max |ρjk − conj(ρkj)| = {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },
    #[error("trace is {trace} (|trace − 1| = {:e})", (trace - 1.0).abs())]
    TraceNotOne { trace: f64 },
    #[error("not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("population {name} is negative: {value:e}")]
    NegativePopulation { name: char, value: f64 },
    #[error("not an X state: |ρ{}{}| = {magnitude:e} off the X pattern", .row + 1, .col + 1)]
    NotXForm {
        row: usize,
        col: usize,
        magnitude: f64,
    },
    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("not a probability distribution: {0}")]
    BadDistribution(String),
    #[error("tolerance {name} = {value:e} must lie in (0, 1e-2]")]
    InvalidTolerance { name: &'static str, value: f64 },
    #[error("cannot parse state literal: {0}")]
    Parse(String),
}

/// Numerical tolerances shared by validation, entanglement tests and death detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub trace: f64,
    pub psd: f64,
    /// Margin below which a partial-transpose eigenvalue counts as negative.
    pub ent: f64,
    /// Negativity threshold used by death detection.
    pub death: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            trace: 1e-9,
            psd: 1e-9,
            ent: 1e-10,
            death: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn new(trace: f64, psd: f64, ent: f64, death: f64) -> Result<Self, StateError> {
        for (name, value) in [
            ("trace", trace),
            ("psd", psd),
            ("ent", ent),
            ("death", death),
        ] {
            if !(value > 0.0 && value <= 1e-2) {
                return Err(StateError::InvalidTolerance { name, value });
            }
        }
        Ok(Self {
            trace,
            psd,
            ent,
            death,
        })
    }
}

/// A validated two-qubit density matrix: exactly Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix4,
}

impl DensityMatrix {
    /// Validates `entries` as a state. Asymmetries below `tol.psd` are symmetrized away.
    pub fn new(entries: CMatrix4, tol: &Tolerances) -> Result<Self, StateError> {
        if !linalg::is_finite(&entries) {
            return Err(StateError::NonFinite);
        }
        let asymmetry = linalg::hermitian_asymmetry(&entries);
        if asymmetry >= tol.psd {
            return Err(StateError::NotHermitian { asymmetry });
        }
        let m = linalg::hermitize(&entries);
        let trace = linalg::trace(&m).re;
        if (trace - 1.0).abs() > tol.trace {
            return Err(StateError::TraceNotOne { trace });
        }
        let min_eigenvalue = linalg::jacobi_eigenvalues(&m)[0];
        if min_eigenvalue < -tol.psd {
            return Err(StateError::NotPositive { min_eigenvalue });
        }
        Ok(Self { m })
    }

    /// Wraps a matrix already known to be a state (Hermitian bit-for-bit).
    pub(crate) fn from_raw(m: CMatrix4) -> Self {
        debug_assert_eq!(linalg::hermitian_asymmetry(&m), 0.0);
        Self { m }
    }

    /// diag(1/4, 1/4, 1/4, 1/4), the incoherent state.
    pub fn maximally_mixed() -> Self {
        Self::from_raw(linalg::diag([0.25; 4]))
    }

    /// The product-basis projector |k⟩⟨k| (0-based `k`).
    pub fn basis_state(k: usize) -> Self {
        let mut p = [0.0; 4];
        p[k] = 1.0;
        Self::from_raw(linalg::diag(p))
    }

    /// ρ_A ⊗ ρ_B.
    pub fn product(a: &QubitState, b: &QubitState) -> Self {
        Self::from_raw(linalg::hermitize(&linalg::kron(&a.m, &b.m)))
    }

    /// Hilbert-Schmidt distributed state: G·G†/tr(G·G†) for a seeded complex Ginibre matrix G.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = linalg::zeros();
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
        }
        let mut m = linalg::zeros();
        for j in 0..4 {
            for k in j..4 {
                let v: Complex64 = (0..4).map(|l| g[j][l] * g[k][l].conj()).sum();
                m[j][k] = v;
                m[k][j] = v.conj();
            }
            m[j][j].im = 0.0;
        }
        let norm = linalg::trace(&m).re;
        Self::from_raw(linalg::scale(&m, Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn entries(&self) -> &CMatrix4 {
        &self.m
    }

    /// Entry ρ_{jk} with 0-based indices.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.m[j][k]
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.m).re
    }

    pub fn populations(&self) -> [f64; 4] {
        [
            self.m[0][0].re,
            self.m[1][1].re,
            self.m[2][2].re,
            self.m[3][3].re,
        ]
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        linalg::jacobi_eigenvalues(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Reads the X-state parameters, provided every off-pattern entry is below `tol.psd`.
    pub fn project_x(&self, tol: &Tolerances) -> Result<XState, StateError> {
        let mut worst = (0, 0, 0.0);
        for &(j, k) in &OFF_PATTERN {
            let magnitude = self.m[j][k].norm();
            if magnitude > worst.2 {
                worst = (j, k, magnitude);
            }
        }
        if worst.2 >= tol.psd {
            return Err(StateError::NotXForm {
                row: worst.0,
                col: worst.1,
                magnitude: worst.2,
            });
        }
        let [a, b, c, d] = self.populations();
        Ok(XState {
            a,
            b,
            c,
            d,
            w: self.m[0][3],
            z: self.m[1][2],
        })
    }

    /// Partial trace over the other party.
    pub fn reduce(&self, party: Party) -> QubitState {
        let r = &self.m;
        let m = match party {
            Party::A => [
                [r[0][0] + r[1][1], r[0][2] + r[1][3]],
                [r[2][0] + r[3][1], r[2][2] + r[3][3]],
            ],
            Party::B => [
                [r[0][0] + r[2][2], r[0][1] + r[2][3]],
                [r[1][0] + r[3][2], r[1][1] + r[3][3]],
            ],
        };
        QubitState { m }
    }

    /// Local coherences (c_A, c_B) = (ρ13 + ρ24, ρ12 + ρ34) in the computational basis.
    pub fn local_coherences(&self) -> (Complex64, Complex64) {
        let r = &self.m;
        (r[0][2] + r[1][3], r[0][1] + r[2][3])
    }

    /// tr(ρ·O); the imaginary part is rounding noise and is dropped.
    pub fn expectation(&self, obs: &HermitianObservable) -> f64 {
        let mut acc = ZERO;
        for j in 0..4 {
            for k in 0..4 {
                acc += self.m[j][k] * obs.m[k][j];
            }
        }
        acc.re
    }

    /// (U_A ⊗ U_B) ρ (U_A ⊗ U_B)†.
    pub fn conjugate_local(&self, ua: &CMatrix2, ub: &CMatrix2) -> Self {
        let u = linalg::kron(ua, ub);
        let m = linalg::matmul(&linalg::matmul(&u, &self.m), &linalg::dagger(&u));
        Self::from_raw(linalg::hermitize(&m))
    }

    /// Parses an `x:` or `dense:` literal; X literals are embedded.
    pub fn parse(literal: &str, tol: &Tolerances) -> Result<Self, StateError> {
        Ok(StateLiteral::parse(literal, tol)?.into_density())
    }
}

// Entries that must vanish in an X state (upper triangle; the lower one follows by Hermiticity).
const OFF_PATTERN: [(usize, usize); 4] = [(0, 1), (0, 2), (1, 3), (2, 3)];

impl fmt::Display for DensityMatrix {
    /// `dense:` followed by 16 `re:im` pairs, row-major.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dense:")?;
        for (n, v) in self.m.iter().flat_map(|row| row.iter()).enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}:{}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// The seven-parameter X family (a, b, c, d, w, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XState {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    w: Complex64,
    z: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];
}

impl XState {
    pub fn new(
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        w: Complex64,
        z: Complex64,
        tol: &Tolerances,
    ) -> Result<Self, StateError> {
        let reals = [a, b, c, d, w.re, w.im, z.re, z.im];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err(StateError::NonFinite);
        }
        for (name, value) in [('a', a), ('b', b), ('c', c), ('d', d)] {
            if value < -tol.psd {
                return Err(StateError::NegativePopulation { name, value });
            }
        }
        let trace = a + b + c + d;
        if (trace - 1.0).abs() > tol.trace {
            return Err(StateError::TraceNotOne { trace });
        }
        let x = Self { a, b, c, d, w, z };
        if w.norm_sqr() > a * d + tol.psd || z.norm_sqr() > b * c + tol.psd {
            return Err(StateError::NotPositive {
                min_eigenvalue: x.min_eigenvalue(),
            });
        }
        Ok(x)
    }

    /// Constructor for parameters produced by an exact positivity-preserving map.
    pub(crate) fn from_parts(a: f64, b: f64, c: f64, d: f64, w: Complex64, z: Complex64) -> Self {
        Self { a, b, c, d, w, z }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn w(&self) -> Complex64 {
        self.w
    }
    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn populations(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Φ± = (a=d=½, w=±½), Ψ± = (b=c=½, z=±½).
    pub fn bell(kind: BellKind) -> Self {
        let h = 0.5;
        let (a, b, w, z) = match kind {
            BellKind::PhiPlus => (h, 0.0, h, 0.0),
            BellKind::PhiMinus => (h, 0.0, -h, 0.0),
            BellKind::PsiPlus => (0.0, h, 0.0, h),
            BellKind::PsiMinus => (0.0, h, 0.0, -h),
        };
        Self::from_parts(a, b, b, a, Complex64::new(w, 0.0), Complex64::new(z, 0.0))
    }

    /// Werner family a=d=(1−2b)/2, b=c, w=0, z=(1−4b)/2, defined for b ∈ [1/6, 1/2].
    pub fn werner(b: f64) -> Result<Self, StateError> {
        if !(1.0 / 6.0..=0.5).contains(&b) {
            return Err(StateError::OutOfRange {
                what: "werner b",
                value: b,
                range: "[1/6, 1/2]",
            });
        }
        let a = (1.0 - 2.0 * b) / 2.0;
        let z = (1.0 - 4.0 * b) / 2.0;
        Ok(Self::from_parts(a, b, b, a, ZERO, Complex64::new(z, 0.0)))
    }

    /// Mixture of Bell states with weights in the order (Φ+, Φ−, Ψ+, Ψ−).
    pub fn bell_mixture(p: [f64; 4]) -> Result<Self, StateError> {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(StateError::BadDistribution(format!(
                "weights must be finite and non-negative, got {p:?}"
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > Tolerances::default().trace {
            return Err(StateError::BadDistribution(format!(
                "weights sum to {total}"
            )));
        }
        let ad = (p[0] + p[1]) / 2.0;
        let bc = (p[2] + p[3]) / 2.0;
        Ok(Self::from_parts(
            ad,
            bc,
            bc,
            ad,
            Complex64::new((p[0] - p[1]) / 2.0, 0.0),
            Complex64::new((p[2] - p[3]) / 2.0, 0.0),
        ))
    }

    /// Pure state √a|↑↑⟩ + √(1−a)|↓↓⟩ for a ∈ [0, 1].
    pub fn pure_phi(a: f64) -> Result<Self, StateError> {
        if !(0.0..=1.0).contains(&a) {
            return Err(StateError::OutOfRange {
                what: "pure-state population a",
                value: a,
                range: "[0, 1]",
            });
        }
        let d = 1.0 - a;
        Ok(Self::from_parts(
            a,
            0.0,
            0.0,
            d,
            Complex64::new((a * d).sqrt(), 0.0),
            ZERO,
        ))
    }

    /// Seeded random X state: Dirichlet(1,1,1,1) populations, coherences uniform in the
    /// positivity disks |w| ≤ √(ad), |z| ≤ √(bc).
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(&mut rng)
    }

    pub(crate) fn random_with<R: Rng>(rng: &mut R) -> Self {
        let e: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
        let s: f64 = e.iter().sum();
        let [a, b, c, d] = e.map(|v| v / s);
        let w = disk_sample(rng, (a * d).sqrt());
        let z = disk_sample(rng, (b * c).sqrt());
        Self::from_parts(a, b, c, d, w, z)
    }

    pub fn embed(&self) -> DensityMatrix {
        let mut m = linalg::diag(self.populations());
        m[0][3] = self.w;
        m[3][0] = self.w.conj();
        m[1][2] = self.z;
        m[2][1] = self.z.conj();
        DensityMatrix::from_raw(m)
    }

    /// Smallest eigenvalue of ρ from its two 2×2 blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        block_min_eigenvalue(self.a, self.d, self.w.norm()).min(block_min_eigenvalue(
            self.b,
            self.c,
            self.z.norm(),
        ))
    }

    /// Smallest eigenvalue of the partial transpose: blocks [[a, z],[z*, d]] and [[b, w],[w*, c]].
    pub fn min_pt_eigenvalue(&self) -> f64 {
        block_min_eigenvalue(self.a, self.d, self.z.norm()).min(block_min_eigenvalue(
            self.b,
            self.c,
            self.w.norm(),
        ))
    }

    pub fn parse(literal: &str, tol: &Tolerances) -> Result<Self, StateError> {
        match StateLiteral::parse(literal, tol)? {
            StateLiteral::X(x) => Ok(x),
            StateLiteral::Dense(rho) => rho.project_x(tol),
        }
    }
}

fn disk_sample<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    Complex64::from_polar(r, phi)
}

/// Lower eigenvalue of the Hermitian block [[p, o],[o*, q]] given |o|.
pub(crate) fn block_min_eigenvalue(p: f64, q: f64, off: f64) -> f64 {
    0.5 * (p + q) - (0.5 * (p - q)).hypot(off)
}

impl fmt::Display for XState {
    /// `x:a,b,c,d,w_re,w_im,z_re,z_im`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x:{},{},{},{},{},{},{},{}",
            self.a, self.b, self.c, self.d, self.w.re, self.w.im, self.z.re, self.z.im
        )
    }
}

/// A parsed state literal, keeping track of whether it was given in X form.
#[derive(Debug, Clone, PartialEq)]
pub enum StateLiteral {
    X(XState),
    Dense(DensityMatrix),
}

impl StateLiteral {
    pub fn parse(literal: &str, tol: &Tolerances) -> Result<Self, StateError> {
        let literal = literal.trim();
        if let Some(body) = literal.strip_prefix("x:") {
            let v = parse_reals(body, 8)?;
            let x = XState::new(
                v[0],
                v[1],
                v[2],
                v[3],
                Complex64::new(v[4], v[5]),
                Complex64::new(v[6], v[7]),
                tol,
            )?;
            Ok(StateLiteral::X(x))
        } else if literal.starts_with("dense:") {
            let m = parse_dense_entries(literal)?;
            Ok(StateLiteral::Dense(DensityMatrix::new(m, tol)?))
        } else {
            Err(StateError::Parse(format!(
                "expected `x:` or `dense:` prefix in {literal:?}"
            )))
        }
    }

    pub fn into_density(self) -> DensityMatrix {
        match self {
            StateLiteral::X(x) => x.embed(),
            StateLiteral::Dense(rho) => rho,
        }
    }
}

fn parse_reals(body: &str, expected: usize) -> Result<Vec<f64>, StateError> {
    let v = body
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| StateError::Parse(format!("{s:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != expected {
        return Err(StateError::Parse(format!(
            "expected {expected} numbers, found {}",
            v.len()
        )));
    }
    Ok(v)
}

/// Parses the 16 `re:im` pairs of a `dense:` literal without any state validation
/// (also used for jump operators).
pub fn parse_dense_entries(literal: &str) -> Result<CMatrix4, StateError> {
    let body = literal
        .trim()
        .strip_prefix("dense:")
        .ok_or_else(|| StateError::Parse(format!("expected `dense:` prefix in {literal:?}")))?;
    let pairs: Vec<&str> = body.split(',').collect();
    if pairs.len() != 16 {
        return Err(StateError::Parse(format!(
            "expected 16 re:im entries, found {}",
            pairs.len()
        )));
    }
    let mut m = linalg::zeros();
    for (n, pair) in pairs.iter().enumerate() {
        let (re, im) = pair
            .split_once(':')
            .ok_or_else(|| StateError::Parse(format!("entry {pair:?} is not re:im")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| StateError::Parse(format!("{s:?}: {e}")))
        };
        m[n / 4][n % 4] = Complex64::new(parse(re)?, parse(im)?);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    A,
    B,
}

/// A single-qubit reduced state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    m: CMatrix2,
}

impl QubitState {
    pub fn new(entries: CMatrix2, tol: &Tolerances) -> Result<Self, StateError> {
        let asymmetry = (entries[0][1] - entries[1][0].conj())
            .norm()
            .max(entries[0][0].im.abs())
            .max(entries[1][1].im.abs());
        if asymmetry >= tol.psd {
            return Err(StateError::NotHermitian { asymmetry });
        }
        let off = (entries[0][1] + entries[1][0].conj()) * 0.5;
        let (p, q) = (entries[0][0].re, entries[1][1].re);
        let trace = p + q;
        if (trace - 1.0).abs() > tol.trace {
            return Err(StateError::TraceNotOne { trace });
        }
        let min_eigenvalue = block_min_eigenvalue(p, q, off.norm());
        if min_eigenvalue < -tol.psd {
            return Err(StateError::NotPositive { min_eigenvalue });
        }
        Ok(Self {
            m: [
                [Complex64::new(p, 0.0), off],
                [off.conj(), Complex64::new(q, 0.0)],
            ],
        })
    }

    /// diag(p_up, 1 − p_up).
    pub fn diagonal(p_up: f64) -> Self {
        Self {
            m: [
                [Complex64::new(p_up, 0.0), ZERO],
                [ZERO, Complex64::new(1.0 - p_up, 0.0)],
            ],
        }
    }

    pub fn entries(&self) -> &CMatrix2 {
        &self.m
    }

    pub fn coherence(&self) -> Complex64 {
        self.m[0][1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

/// A 4×4 observable, Hermitian bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianObservable {
    m: CMatrix4,
}

impl HermitianObservable {
    pub fn new(entries: CMatrix4) -> Result<Self, StateError> {
        let asymmetry = linalg::hermitian_asymmetry(&entries);
        if asymmetry != 0.0 {
            return Err(StateError::NotHermitian { asymmetry });
        }
        Ok(Self { m: entries })
    }

    /// S_k ⊗ S_l with S = σ/2 (ħ = 1).
    pub fn spin_product(a: SpinAxis, b: SpinAxis) -> Self {
        let s = |axis| scale2(&pauli(axis), 0.5);
        Self {
            m: linalg::kron(&s(a), &s(b)),
        }
    }

    /// S_zA ⊗ I + I ⊗ S_zB.
    pub fn total_sz() -> Self {
        let sz = scale2(&linalg::pauli_z(), 0.5);
        let id = linalg::identity2();
        Self {
            m: linalg::add(&linalg::kron(&sz, &id), &linalg::kron(&id, &sz)),
        }
    }

    /// |B⟩⟨B| for a Bell state.
    pub fn bell_projector(kind: BellKind) -> Self {
        Self {
            m: *XState::bell(kind).embed().entries(),
        }
    }

    pub fn entries(&self) -> &CMatrix4 {
        &self.m
    }
}

impl std::ops::Add for HermitianObservable {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            m: linalg::add(&self.m, &rhs.m),
        }
    }
}

impl std::ops::Sub for HermitianObservable {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            m: linalg::sub(&self.m, &rhs.m),
        }
    }
}

fn pauli(axis: SpinAxis) -> CMatrix2 {
    match axis {
        SpinAxis::X => linalg::pauli_x(),
        SpinAxis::Y => linalg::pauli_y(),
        SpinAxis::Z => linalg::pauli_z(),
    }
}

fn scale2(m: &CMatrix2, s: f64) -> CMatrix2 {
    m.map(|row| row.map(|v| v * s))
}

/// Seeded single-qubit unitary: complex Gaussian 2×2 matrix orthonormalized column by column.
pub fn random_unitary_2<R: Rng>(rng: &mut R) -> CMatrix2 {
    let mut g = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let mut c0 = [g(), g()];
    let mut c1 = [g(), g()];
    let n0 = (c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt();
    c0 = c0.map(|v| v / n0);
    let proj = c0[0].conj() * c1[0] + c0[1].conj() * c1[1];
    c1 = [c1[0] - proj * c0[0], c1[1] - proj * c0[1]];
    let n1 = (c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt();
    c1 = c1.map(|v| v / n1);
    [[c0[0], c1[0]], [c0[1], c1[1]]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn maximally_mixed_is_valid() {
        let rho = DensityMatrix::new(linalg::diag([0.25; 4]), &tol()).unwrap();
        assert_eq!(rho, DensityMatrix::maximally_mixed());
        assert_eq!(rho.trace(), 1.0);
        for ev in rho.eigenvalues() {
            assert!((ev - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn positivity_violation_is_rejected() {
        let mut m = linalg::diag([0.6, 0.0, 0.0, 0.4]);
        m[0][3] = c(0.55, 0.0);
        m[3][0] = c(0.55, 0.0);
        match DensityMatrix::new(m, &tol()) {
            Err(StateError::NotPositive { min_eigenvalue }) => assert!(min_eigenvalue < -0.05),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_violation_is_rejected() {
        let m = linalg::diag([0.5, 0.5, 0.0, 0.1]);
        match DensityMatrix::new(m, &tol()) {
            Err(StateError::TraceNotOne { trace }) => assert!((trace - 1.1).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_asymmetry_is_symmetrized_large_is_rejected() {
        let mut m = linalg::diag([0.25; 4]);
        m[0][1] = c(0.1, 0.0);
        m[1][0] = c(0.1 + 1e-12, 0.0);
        let rho = DensityMatrix::new(m, &tol()).unwrap();
        assert_eq!(rho.get(0, 1), rho.get(1, 0).conj());

        m[1][0] = c(0.2, 0.0);
        assert!(matches!(
            DensityMatrix::new(m, &tol()),
            Err(StateError::NotHermitian { .. })
        ));
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut m = linalg::diag([0.25; 4]);
        m[2][2] = c(f64::NAN, 0.0);
        assert_eq!(DensityMatrix::new(m, &tol()), Err(StateError::NonFinite));
    }

    #[test]
    fn make_x_examples() {
        let phi = XState::new(0.5, 0.0, 0.0, 0.5, c(0.5, 0.0), ZERO, &tol()).unwrap();
        assert_eq!(phi, XState::bell(BellKind::PhiPlus));
        XState::new(0.0, 0.5, 0.5, 0.0, ZERO, c(0.5, 0.0), &tol()).unwrap();
        assert!(matches!(
            XState::new(0.4, 0.1, 0.1, 0.4, ZERO, c(0.2, 0.0), &tol()),
            Err(StateError::NotPositive { .. })
        ));
        assert!(matches!(
            XState::new(1.1, -0.1, 0.0, 0.0, ZERO, ZERO, &tol()),
            Err(StateError::NegativePopulation { name: 'b', .. })
        ));
        assert!(matches!(
            XState::new(0.5, 0.5, 0.5, 0.0, ZERO, ZERO, &tol()),
            Err(StateError::TraceNotOne { .. })
        ));
    }

    #[test]
    fn embed_places_conjugates() {
        let x = XState::new(0.3, 0.2, 0.2, 0.3, c(0.0, 0.1), c(0.1, 0.0), &tol()).unwrap();
        let rho = x.embed();
        assert_eq!(rho.get(0, 3), c(0.0, 0.1));
        assert_eq!(rho.get(3, 0), c(0.0, -0.1));
        assert_eq!(rho.get(1, 2), c(0.1, 0.0));
        assert_eq!(rho.get(2, 1), c(0.1, 0.0));

        let phi = XState::bell(BellKind::PhiPlus).embed();
        for (j, k) in [(0, 0), (3, 3), (0, 3), (3, 0)] {
            assert_eq!(phi.get(j, k), c(0.5, 0.0));
        }
    }

    #[test]
    fn project_x_examples() {
        let mm = DensityMatrix::maximally_mixed().project_x(&tol()).unwrap();
        assert_eq!(mm.populations(), [0.25; 4]);
        assert_eq!((mm.w(), mm.z()), (ZERO, ZERO));

        let mut m = linalg::diag([0.25; 4]);
        m[0][1] = c(0.1, 0.0);
        m[1][0] = c(0.1, 0.0);
        let rho = DensityMatrix::new(m, &tol()).unwrap();
        match rho.project_x(&tol()) {
            Err(StateError::NotXForm {
                row,
                col,
                magnitude,
            }) => {
                assert_eq!((row, col), (0, 1));
                assert!((magnitude - 0.1).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reductions() {
        let phi = XState::bell(BellKind::PhiPlus).embed();
        for party in [Party::A, Party::B] {
            let r = phi.reduce(party);
            assert_eq!(r.entries()[0][0], c(0.5, 0.0));
            assert_eq!(r.entries()[1][1], c(0.5, 0.0));
            assert_eq!(r.coherence(), ZERO);
        }
        let up = DensityMatrix::basis_state(0);
        for party in [Party::A, Party::B] {
            assert_eq!(up.reduce(party).entries()[0][0], ONE);
            assert_eq!(up.reduce(party).entries()[1][1], ZERO);
        }
    }

    #[test]
    fn local_coherences_of_plus_up_product() {
        let plus = QubitState::new(
            [[c(0.5, 0.0), c(0.5, 0.0)], [c(0.5, 0.0), c(0.5, 0.0)]],
            &tol(),
        )
        .unwrap();
        let rho = DensityMatrix::product(&plus, &QubitState::diagonal(1.0));
        assert_eq!(rho.get(0, 0), c(0.5, 0.0));
        assert_eq!(rho.get(0, 2), c(0.5, 0.0));
        assert_eq!(rho.local_coherences(), (c(0.5, 0.0), ZERO));
        assert_eq!(
            DensityMatrix::maximally_mixed().local_coherences(),
            (ZERO, ZERO)
        );
    }

    #[test]
    fn bell_states() {
        assert_eq!(
            XState::bell(BellKind::PhiPlus).to_string(),
            "x:0.5,0,0,0.5,0.5,0,0,0"
        );
        let psi_m = XState::bell(BellKind::PsiMinus);
        assert_eq!(psi_m.populations(), [0.0, 0.5, 0.5, 0.0]);
        assert_eq!(psi_m.z(), c(-0.5, 0.0));
    }

    #[test]
    fn werner_domain_and_limits() {
        let w = XState::werner(0.25).unwrap();
        assert_eq!(w.embed(), DensityMatrix::maximally_mixed());
        let singlet = XState::werner(0.5).unwrap();
        assert_eq!(singlet, XState::bell(BellKind::PsiMinus));
        assert!(XState::werner(0.1).is_err());
        assert!(XState::werner(0.6).is_err());
        assert!(XState::werner(f64::NAN).is_err());
        // Both ends of the domain are valid states.
        for b in [1.0 / 6.0, 0.5] {
            let x = XState::werner(b).unwrap();
            assert!(x.min_eigenvalue() > -1e-15);
        }
    }

    #[test]
    fn bell_mixture_examples() {
        assert_eq!(
            XState::bell_mixture([1.0, 0.0, 0.0, 0.0]).unwrap(),
            XState::bell(BellKind::PhiPlus)
        );
        let half = XState::bell_mixture([0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(
            half.embed(),
            DensityMatrix::from_raw(linalg::diag([0.5, 0.0, 0.0, 0.5]))
        );
        assert_eq!(
            XState::bell_mixture([0.25; 4]).unwrap().embed(),
            DensityMatrix::maximally_mixed()
        );
        assert!(XState::bell_mixture([0.5, 0.6, 0.0, 0.0]).is_err());
        assert!(XState::bell_mixture([1.5, -0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn random_density_is_valid_and_deterministic() {
        for seed in 0..200 {
            let rho = DensityMatrix::random(seed);
            DensityMatrix::new(*rho.entries(), &tol()).unwrap();
            assert_eq!(rho, DensityMatrix::random(seed));
        }
        assert_ne!(DensityMatrix::random(1), DensityMatrix::random(2));
    }

    #[test]
    fn random_x_is_valid() {
        for seed in 0..500 {
            let x = XState::random(seed);
            XState::new(x.a, x.b, x.c, x.d, x.w, x.z, &tol()).unwrap();
        }
    }

    #[test]
    fn expectation_values() {
        let phi = XState::bell(BellKind::PhiPlus).embed();
        let proj = HermitianObservable::bell_projector(BellKind::PhiPlus);
        assert!((phi.expectation(&proj) - 1.0).abs() < 1e-15);
        let mm = DensityMatrix::maximally_mixed();
        assert_eq!(mm.expectation(&HermitianObservable::total_sz()), 0.0);
        let sxsy = HermitianObservable::spin_product(SpinAxis::X, SpinAxis::Y);
        assert_eq!(mm.expectation(&sxsy), 0.0);
    }

    #[test]
    fn observable_requires_exact_hermiticity() {
        let mut m = linalg::zeros();
        m[0][1] = c(1.0, 0.0);
        assert!(HermitianObservable::new(m).is_err());
        m[1][0] = c(1.0, 0.0);
        assert!(HermitianObservable::new(m).is_ok());
    }

    #[test]
    fn literal_parsing_errors() {
        assert!(matches!(
            StateLiteral::parse("y:1,2", &tol()),
            Err(StateError::Parse(_))
        ));
        assert!(matches!(
            StateLiteral::parse("x:1,0,0", &tol()),
            Err(StateError::Parse(_))
        ));
        assert!(matches!(
            StateLiteral::parse("x:1,0,0,0,0,0,zz,0", &tol()),
            Err(StateError::Parse(_))
        ));
        assert!(matches!(
            StateLiteral::parse("dense:1:0,0:0", &tol()),
            Err(StateError::Parse(_))
        ));
    }

    #[test]
    fn dense_literal_round_trip() {
        let rho = DensityMatrix::random(7);
        let back = DensityMatrix::parse(&rho.to_string(), &tol()).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn tolerance_bounds() {
        assert!(Tolerances::new(1e-9, 1e-9, 1e-10, 1e-10).is_ok());
        assert!(Tolerances::new(0.0, 1e-9, 1e-10, 1e-10).is_err());
        assert!(Tolerances::new(1e-9, 0.5, 1e-10, 1e-10).is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary_2(&mut rng);
        for j in 0..2 {
            for k in 0..2 {
                let v: Complex64 = (0..2).map(|l| u[l][j].conj() * u[l][k]).sum();
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((v - c(expect, 0.0)).norm() < 1e-14);
            }
        }
    }
}
