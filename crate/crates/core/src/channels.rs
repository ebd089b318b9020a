//! Reservoir catalog for two qubits.
//!
//! Every channel is a Lindblad generator without Hamiltonian part,
//!
//!   dρ/dt = Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ}),
//!
//! with the jump operators
//!
//! - `decay:γA,γB,n̄`   σ− on each qubit at rate γ(n̄+1) and σ+ at rate γn̄ (σ−|↑⟩ = |↓⟩);
//! - `dephase:κA,κB`    σz on each qubit at rate κ/2, so w and z decay as e^{−(κA+κB)t};
//! - `collective:κ`     (σz⊗I + I⊗σz)/2 at rate κ; |↑↓⟩, |↓↑⟩ span a decoherence-free
//!   subspace, z is untouched and w decays as e^{−2κt};
//! - `custom:<path>`    explicit jump operators read from a file.
//!
//! All catalog channels map X states to X states, and `propagate_x_closed` evaluates that
//! restriction exactly. `propagate_numeric` integrates any channel with fixed-step RK4.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{self, CMatrix4, ZERO};
use crate::state::{self, DensityMatrix, StateError, Tolerances, XState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("rate {name} = {value} must be finite and non-negative")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("channel has no positive rate")]
    NoPositiveRate,
    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),
    #[error("integration step too large: {0}")]
    StepTooLarge(String),
    #[error("{what} = {value} is invalid")]
    InvalidTime { what: &'static str, value: f64 },
    #[error("cannot parse channel literal: {0}")]
    Parse(String),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub matrix: CMatrix4,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    IndependentDecay {
        gamma_a: f64,
        gamma_b: f64,
        /// Mean thermal occupation; 0 is zero temperature.
        n_thermal: f64,
    },
    IndependentDephasing {
        kappa_a: f64,
        kappa_b: f64,
    },
    CollectiveDephasing {
        kappa: f64,
    },
    Custom {
        jumps: Vec<JumpOperator>,
    },
}

fn check_rate(name: &'static str, value: f64) -> Result<(), ChannelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ChannelError::InvalidRate { name, value })
    }
}

impl ChannelSpec {
    pub fn decay(gamma_a: f64, gamma_b: f64, n_thermal: f64) -> Result<Self, ChannelError> {
        let ch = ChannelSpec::IndependentDecay {
            gamma_a,
            gamma_b,
            n_thermal,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn dephasing(kappa_a: f64, kappa_b: f64) -> Result<Self, ChannelError> {
        let ch = ChannelSpec::IndependentDephasing { kappa_a, kappa_b };
        ch.validate()?;
        Ok(ch)
    }

    pub fn collective(kappa: f64) -> Result<Self, ChannelError> {
        let ch = ChannelSpec::CollectiveDephasing { kappa };
        ch.validate()?;
        Ok(ch)
    }

    pub fn custom(jumps: Vec<JumpOperator>) -> Result<Self, ChannelError> {
        let ch = ChannelSpec::Custom { jumps };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let rates: Vec<f64> = match self {
            ChannelSpec::IndependentDecay {
                gamma_a,
                gamma_b,
                n_thermal,
            } => {
                check_rate("gamma_a", *gamma_a)?;
                check_rate("gamma_b", *gamma_b)?;
                check_rate("n_thermal", *n_thermal)?;
                vec![*gamma_a, *gamma_b]
            }
            ChannelSpec::IndependentDephasing { kappa_a, kappa_b } => {
                check_rate("kappa_a", *kappa_a)?;
                check_rate("kappa_b", *kappa_b)?;
                vec![*kappa_a, *kappa_b]
            }
            ChannelSpec::CollectiveDephasing { kappa } => {
                check_rate("kappa", *kappa)?;
                vec![*kappa]
            }
            ChannelSpec::Custom { jumps } => {
                for j in jumps {
                    check_rate("jump rate", j.rate)?;
                    if !linalg::is_finite(&j.matrix) {
                        return Err(ChannelError::Parse("jump operator is not finite".into()));
                    }
                }
                jumps.iter().map(|j| j.rate).collect()
            }
        };
        if rates.iter().any(|&r| r > 0.0) {
            Ok(())
        } else {
            Err(ChannelError::NoPositiveRate)
        }
    }

    pub fn is_catalog(&self) -> bool {
        !matches!(self, ChannelSpec::Custom { .. })
    }

    /// Largest nominal rate; times are quoted in units of its inverse.
    pub fn rate(&self) -> f64 {
        match self {
            ChannelSpec::IndependentDecay {
                gamma_a, gamma_b, ..
            } => gamma_a.max(*gamma_b),
            ChannelSpec::IndependentDephasing { kappa_a, kappa_b } => kappa_a.max(*kappa_b),
            ChannelSpec::CollectiveDephasing { kappa } => *kappa,
            ChannelSpec::Custom { jumps } => jumps.iter().map(|j| j.rate).fold(0.0, f64::max),
        }
    }

    /// 1e−3 / rate.
    pub fn default_dt(&self) -> f64 {
        1e-3 / self.rate()
    }

    pub fn jump_operators(&self) -> Vec<JumpOperator> {
        let id = linalg::identity2();
        let on_a = |op: &linalg::CMatrix2| linalg::kron(op, &id);
        let on_b = |op: &linalg::CMatrix2| linalg::kron(&id, op);
        let mut jumps = match self {
            ChannelSpec::IndependentDecay {
                gamma_a,
                gamma_b,
                n_thermal,
            } => {
                let (down, up) = (linalg::sigma_minus(), linalg::sigma_plus());
                vec![
                    JumpOperator {
                        matrix: on_a(&down),
                        rate: gamma_a * (n_thermal + 1.0),
                    },
                    JumpOperator {
                        matrix: on_a(&up),
                        rate: gamma_a * n_thermal,
                    },
                    JumpOperator {
                        matrix: on_b(&down),
                        rate: gamma_b * (n_thermal + 1.0),
                    },
                    JumpOperator {
                        matrix: on_b(&up),
                        rate: gamma_b * n_thermal,
                    },
                ]
            }
            ChannelSpec::IndependentDephasing { kappa_a, kappa_b } => {
                let sz = linalg::pauli_z();
                vec![
                    JumpOperator {
                        matrix: on_a(&sz),
                        rate: kappa_a / 2.0,
                    },
                    JumpOperator {
                        matrix: on_b(&sz),
                        rate: kappa_b / 2.0,
                    },
                ]
            }
            ChannelSpec::CollectiveDephasing { kappa } => {
                let sz = linalg::pauli_z();
                let sum = linalg::add(&on_a(&sz), &on_b(&sz));
                vec![JumpOperator {
                    matrix: linalg::scale(&sum, Complex64::new(0.5, 0.0)),
                    rate: *kappa,
                }]
            }
            ChannelSpec::Custom { jumps } => jumps.clone(),
        };
        jumps.retain(|j| j.rate > 0.0);
        jumps
    }

    /// Parses `decay:γA,γB,n̄`, `dephase:κA,κB`, `collective:κ` or `custom:<path>`.
    pub fn parse(literal: &str) -> Result<Self, ChannelError> {
        let literal = literal.trim();
        let (kind, body) = literal
            .split_once(':')
            .ok_or_else(|| ChannelError::Parse(format!("missing `kind:` prefix in {literal:?}")))?;
        let numbers = |expected: usize| -> Result<Vec<f64>, ChannelError> {
            let v = body
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| ChannelError::Parse(format!("{s:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if v.len() != expected {
                return Err(ChannelError::Parse(format!(
                    "`{kind}` takes {expected} numbers, found {}",
                    v.len()
                )));
            }
            Ok(v)
        };
        match kind {
            "decay" => {
                let v = numbers(3)?;
                Self::decay(v[0], v[1], v[2])
            }
            "dephase" => {
                let v = numbers(2)?;
                Self::dephasing(v[0], v[1])
            }
            "collective" => {
                let v = numbers(1)?;
                Self::collective(v[0])
            }
            "custom" => Self::custom(read_jump_file(Path::new(body))?),
            other => Err(ChannelError::Parse(format!(
                "unknown channel kind {other:?}"
            ))),
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::IndependentDecay {
                gamma_a,
                gamma_b,
                n_thermal,
            } => write!(f, "decay:{gamma_a},{gamma_b},{n_thermal}"),
            ChannelSpec::IndependentDephasing { kappa_a, kappa_b } => {
                write!(f, "dephase:{kappa_a},{kappa_b}")
            }
            ChannelSpec::CollectiveDephasing { kappa } => write!(f, "collective:{kappa}"),
            ChannelSpec::Custom { jumps } => write!(f, "custom[{} jumps]", jumps.len()),
        }
    }
}

/// Jump file: one operator per line as `<rate> dense:<16 re:im entries>`; `#` starts a comment.
pub fn parse_jump_file(text: &str) -> Result<Vec<JumpOperator>, ChannelError> {
    let mut jumps = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (rate, matrix) = line.split_once(char::is_whitespace).ok_or_else(|| {
            ChannelError::Parse(format!("line {}: expected `<rate> dense:...`", n + 1))
        })?;
        let rate = rate
            .parse::<f64>()
            .map_err(|e| ChannelError::Parse(format!("line {}: rate {rate:?}: {e}", n + 1)))?;
        let matrix = state::parse_dense_entries(matrix.trim())
            .map_err(|e| ChannelError::Parse(format!("line {}: {e}", n + 1)))?;
        jumps.push(JumpOperator { matrix, rate });
    }
    if jumps.is_empty() {
        return Err(ChannelError::Parse("jump file lists no operators".into()));
    }
    Ok(jumps)
}

fn read_jump_file(path: &Path) -> Result<Vec<JumpOperator>, ChannelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ChannelError::Parse(format!("{}: {e}", path.display())))?;
    parse_jump_file(&text)
}

/// Formats jumps in the file layout read by `parse_jump_file`.
pub fn format_jump_file(jumps: &[JumpOperator]) -> String {
    let mut out = String::new();
    for j in jumps {
        let m = DensityMatrixLiteral(&j.matrix);
        out.push_str(&format!("{} {}\n", j.rate, m));
    }
    out
}

struct DensityMatrixLiteral<'a>(&'a CMatrix4);

impl fmt::Display for DensityMatrixLiteral<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dense:")?;
        for (n, v) in self.0.iter().flat_map(|row| row.iter()).enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}:{}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// dρ/dt for the channel, evaluated by direct matrix products.
pub fn generator(ch: &ChannelSpec, rho: &DensityMatrix) -> CMatrix4 {
    generator_matrix(&ch.jump_operators(), rho.entries())
}

pub(crate) fn generator_matrix(jumps: &[JumpOperator], rho: &CMatrix4) -> CMatrix4 {
    let mut out = linalg::zeros();
    for j in jumps {
        let l = &j.matrix;
        let l_dag = linalg::dagger(l);
        let ldl = linalg::matmul(&l_dag, l);
        let sandwich = linalg::matmul(&linalg::matmul(l, rho), &l_dag);
        let anti = linalg::add(&linalg::matmul(&ldl, rho), &linalg::matmul(rho, &ldl));
        let term = linalg::sub(&sandwich, &linalg::scale(&anti, Complex64::new(0.5, 0.0)));
        out = linalg::add(&out, &linalg::scale(&term, Complex64::new(j.rate, 0.0)));
    }
    out
}

type Vec16 = [Complex64; 16];

/// The generator as a sparse superoperator on row-major vec(ρ) (index 4j + k).
#[derive(Debug, Clone)]
pub struct Liouvillian {
    terms: Vec<(usize, usize, Complex64)>,
}

impl Liouvillian {
    pub fn new(ch: &ChannelSpec) -> Self {
        Self::from_jumps(&ch.jump_operators())
    }

    pub fn from_jumps(jumps: &[JumpOperator]) -> Self {
        let mut s = [[ZERO; 16]; 16];
        for jump in jumps {
            let g = Complex64::new(jump.rate, 0.0);
            let l = &jump.matrix;
            let ldl = linalg::matmul(&linalg::dagger(l), l);
            for j in 0..4 {
                for k in 0..4 {
                    let row = 4 * j + k;
                    // L ρ L†
                    for m in 0..4 {
                        for n in 0..4 {
                            s[row][4 * m + n] += g * l[j][m] * l[k][n].conj();
                        }
                    }
                    // −½ L†L ρ − ½ ρ L†L
                    for m in 0..4 {
                        s[row][4 * m + k] -= g * 0.5 * ldl[j][m];
                        s[row][4 * j + m] -= g * 0.5 * ldl[m][k];
                    }
                }
            }
        }
        let mut terms = Vec::new();
        for (r, row) in s.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if *v != ZERO {
                    terms.push((r, c, *v));
                }
            }
        }
        Self { terms }
    }

    pub fn apply(&self, v: &Vec16) -> Vec16 {
        let mut out = [ZERO; 16];
        for &(r, c, s) in &self.terms {
            out[r] += s * v[c];
        }
        out
    }

    fn rk4_step(&self, v: &Vec16, h: f64) -> Vec16 {
        let axpy =
            |x: &Vec16, a: f64, y: &Vec16| -> Vec16 { std::array::from_fn(|i| x[i] + y[i] * a) };
        let k1 = self.apply(v);
        let k2 = self.apply(&axpy(v, h / 2.0, &k1));
        let k3 = self.apply(&axpy(v, h / 2.0, &k2));
        let k4 = self.apply(&axpy(v, h, &k3));
        std::array::from_fn(|i| v[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0))
    }
}

pub(crate) fn to_vec16(m: &CMatrix4) -> Vec16 {
    std::array::from_fn(|i| m[i / 4][i % 4])
}

pub(crate) fn from_vec16(v: &Vec16) -> CMatrix4 {
    std::array::from_fn(|j| std::array::from_fn(|k| v[4 * j + k]))
}

/// Fixed-step RK4 integrator for one channel.
#[derive(Debug, Clone)]
pub struct NumericPropagator {
    liouvillian: Liouvillian,
    dt: f64,
}

impl NumericPropagator {
    pub fn new(ch: &ChannelSpec, dt: f64) -> Result<Self, ChannelError> {
        ch.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ChannelError::InvalidTime {
                what: "dt",
                value: dt,
            });
        }
        Ok(Self {
            liouvillian: Liouvillian::new(ch),
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Integrates the raw matrix over `t` with steps of `dt` and one final partial step.
    pub fn advance_raw(&self, m: &CMatrix4, t: f64) -> CMatrix4 {
        let mut v = to_vec16(m);
        for h in step_sizes(t, self.dt) {
            v = self.liouvillian.rk4_step(&v, h);
        }
        from_vec16(&v)
    }

    pub fn advance(
        &self,
        rho: &DensityMatrix,
        t: f64,
        tol: &Tolerances,
    ) -> Result<DensityMatrix, ChannelError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(ChannelError::InvalidTime {
                what: "t",
                value: t,
            });
        }
        if t == 0.0 {
            return Ok(rho.clone());
        }
        finalize(&self.advance_raw(rho.entries(), t), tol)
    }
}

/// Splits [0, t] into full steps of `dt` plus a remainder; a remainder within 1e−9·dt of a full
/// step is absorbed.
pub(crate) fn step_sizes(t: f64, dt: f64) -> impl Iterator<Item = f64> {
    let ratio = t / dt;
    let full = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round()
    } else {
        ratio.floor()
    };
    let remainder = t - full * dt;
    let tail = (remainder > 1e-9 * dt).then_some(remainder);
    std::iter::repeat_n(dt, full as usize).chain(tail)
}

/// Re-validates an integrated matrix: Hermitize, renormalize trace drift below ε_trace, check PSD.
pub(crate) fn finalize(raw: &CMatrix4, tol: &Tolerances) -> Result<DensityMatrix, ChannelError> {
    if !linalg::is_finite(raw) {
        return Err(ChannelError::StepTooLarge("integration diverged".into()));
    }
    let h = linalg::hermitize(raw);
    let trace = linalg::trace(&h).re;
    if (trace - 1.0).abs() >= tol.trace {
        return Err(ChannelError::StepTooLarge(format!(
            "trace drifted to {trace} (limit {:e})",
            tol.trace
        )));
    }
    let h = linalg::hermitize(&linalg::scale(&h, Complex64::new(1.0 / trace, 0.0)));
    DensityMatrix::new(h, tol).map_err(|e| ChannelError::StepTooLarge(e.to_string()))
}

/// RK4 integration from 0 to `t` with step `dt`.
pub fn propagate_numeric(
    rho0: &DensityMatrix,
    ch: &ChannelSpec,
    t: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<DensityMatrix, ChannelError> {
    NumericPropagator::new(ch, dt)?.advance(rho0, t, tol)
}

/// Exact evolution of an X state under a catalog channel.
pub fn propagate_x_closed(x: &XState, ch: &ChannelSpec, t: f64) -> Result<XState, ChannelError> {
    ch.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(ChannelError::InvalidTime {
            what: "t",
            value: t,
        });
    }
    match *ch {
        ChannelSpec::IndependentDecay {
            gamma_a,
            gamma_b,
            n_thermal,
        } => {
            let qa = ThermalQubit::new(gamma_a, n_thermal, t);
            let qb = ThermalQubit::new(gamma_b, n_thermal, t);
            let p = x.populations();
            let mut out = [0.0; 4];
            for (ia, ja, ib, jb) in quad_indices() {
                out[2 * ia + ib] += qa.transition[ia][ja] * qb.transition[ib][jb] * p[2 * ja + jb];
            }
            let f = qa.coherence * qb.coherence;
            Ok(XState::from_parts(
                out[0],
                out[1],
                out[2],
                out[3],
                x.w() * f,
                x.z() * f,
            ))
        }
        ChannelSpec::IndependentDephasing { kappa_a, kappa_b } => {
            let f = (-(kappa_a + kappa_b) * t).exp();
            Ok(with_coherences(x, x.w() * f, x.z() * f))
        }
        ChannelSpec::CollectiveDephasing { kappa } => {
            let f = (-2.0 * kappa * t).exp();
            Ok(with_coherences(x, x.w() * f, x.z()))
        }
        ChannelSpec::Custom { .. } => Err(ChannelError::UnsupportedChannel(
            "closed-form propagation covers catalog channels only".into(),
        )),
    }
}

fn with_coherences(x: &XState, w: Complex64, z: Complex64) -> XState {
    XState::from_parts(x.a(), x.b(), x.c(), x.d(), w, z)
}

fn quad_indices() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|n| (n >> 3 & 1, n >> 2 & 1, n >> 1 & 1, n & 1))
}

/// Single-qubit thermal amplitude damping over time t: population transition matrix
/// (column-stochastic, index 0 = ↑) and the coherence factor e^{−Γt/2}, Γ = γ(2n̄+1).
struct ThermalQubit {
    transition: [[f64; 2]; 2],
    coherence: f64,
}

impl ThermalQubit {
    fn new(gamma: f64, n_thermal: f64, t: f64) -> Self {
        let big_gamma = gamma * (2.0 * n_thermal + 1.0);
        let s = n_thermal / (2.0 * n_thermal + 1.0);
        let e = (-big_gamma * t).exp();
        let relax = -(-big_gamma * t).exp_m1();
        Self {
            transition: [
                [s + (1.0 - s) * e, s * relax],
                [(1.0 - s) * relax, 1.0 - s * relax],
            ],
            coherence: (-0.5 * big_gamma * t).exp(),
        }
    }
}

/// Constraints describing a convex family of X states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XFamily {
    pub w_zero: bool,
    pub z_zero: bool,
    /// When set, every member has exactly these populations (a, b, c, d).
    pub populations: Option<[f64; 4]>,
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum AsymptoticSet {
    SinglePoint(DensityMatrix),
    XFamily(XFamily),
    ExplicitSamples(Vec<DensityMatrix>),
}

/// The set every initial state is driven towards.
pub fn asymptotic_set(ch: &ChannelSpec) -> Result<AsymptoticSet, ChannelError> {
    ch.validate()?;
    match *ch {
        ChannelSpec::IndependentDecay {
            gamma_a,
            gamma_b,
            n_thermal,
        } => {
            if gamma_a == 0.0 || gamma_b == 0.0 {
                return Err(ChannelError::UnsupportedChannel(
                    "a qubit with zero decay rate keeps its initial state".into(),
                ));
            }
            let s = n_thermal / (2.0 * n_thermal + 1.0);
            let q = state::QubitState::diagonal(s);
            Ok(AsymptoticSet::SinglePoint(DensityMatrix::product(&q, &q)))
        }
        ChannelSpec::IndependentDephasing { kappa_a, kappa_b } => {
            if kappa_a == 0.0 || kappa_b == 0.0 {
                return Err(ChannelError::UnsupportedChannel(
                    "a qubit with zero dephasing rate keeps its local coherences".into(),
                ));
            }
            Ok(AsymptoticSet::XFamily(XFamily {
                w_zero: true,
                z_zero: true,
                populations: None,
            }))
        }
        ChannelSpec::CollectiveDephasing { .. } => Ok(AsymptoticSet::XFamily(XFamily {
            w_zero: true,
            z_zero: false,
            populations: None,
        })),
        ChannelSpec::Custom { .. } => Err(ChannelError::UnsupportedChannel(
            "asymptotic set of a custom channel must be supplied explicitly".into(),
        )),
    }
}

impl AsymptoticSet {
    /// Entrywise membership test at absolute tolerance `eps`.
    pub fn contains(&self, rho: &DensityMatrix, eps: f64) -> bool {
        match self {
            AsymptoticSet::SinglePoint(p) => {
                linalg::max_abs_diff(p.entries(), rho.entries()) <= eps
            }
            AsymptoticSet::ExplicitSamples(v) => v
                .iter()
                .any(|p| linalg::max_abs_diff(p.entries(), rho.entries()) <= eps),
            AsymptoticSet::XFamily(fam) => {
                let off_pattern = [(0, 1), (0, 2), (1, 3), (2, 3)]
                    .iter()
                    .map(|&(j, k)| rho.get(j, k).norm())
                    .fold(0.0, f64::max);
                if off_pattern > eps {
                    return false;
                }
                if fam.w_zero && rho.get(0, 3).norm() > eps {
                    return false;
                }
                if fam.z_zero && rho.get(1, 2).norm() > eps {
                    return false;
                }
                match fam.populations {
                    Some(p) => p
                        .iter()
                        .zip(rho.populations())
                        .all(|(a, b)| (a - b).abs() <= eps),
                    None => true,
                }
            }
        }
    }

    /// Extreme members: for X families, population vertices, edge midpoints, face centers and
    /// the centroid, each with every free coherence at zero and on its positivity shell.
    pub fn extreme_members(&self) -> Vec<DensityMatrix> {
        match self {
            AsymptoticSet::SinglePoint(p) => vec![p.clone()],
            AsymptoticSet::ExplicitSamples(v) => v.clone(),
            AsymptoticSet::XFamily(fam) => {
                let populations = match fam.populations {
                    Some(p) => vec![p],
                    None => simplex_landmarks(),
                };
                let mut out: Vec<DensityMatrix> = Vec::new();
                for p in populations {
                    let w_shell = (p[0] * p[3]).sqrt();
                    let z_shell = (p[1] * p[2]).sqrt();
                    let ws: &[f64] = if fam.w_zero { &[0.0] } else { &[0.0, 1.0] };
                    let zs: &[f64] = if fam.z_zero { &[0.0] } else { &[0.0, 1.0] };
                    for &wf in ws {
                        for &zf in zs {
                            let x = XState::from_parts(
                                p[0],
                                p[1],
                                p[2],
                                p[3],
                                Complex64::new(wf * w_shell, 0.0),
                                Complex64::new(zf * z_shell, 0.0),
                            );
                            let rho = x.embed();
                            if !out.contains(&rho) {
                                out.push(rho);
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// `n` seeded members drawn uniformly: Dirichlet(1,1,1,1) populations (unless fixed) and
    /// free coherences uniform in their positivity disks. Empty for point and sample sets.
    pub fn random_members(&self, n: usize, seed: u64) -> Vec<DensityMatrix> {
        let AsymptoticSet::XFamily(fam) = self else {
            return Vec::new();
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let p = match fam.populations {
                    Some(p) => p,
                    None => {
                        let e: [f64; 4] =
                            std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
                        let s: f64 = e.iter().sum();
                        e.map(|v| v / s)
                    }
                };
                let mut disk = |radius: f64, zero: bool| {
                    let r = radius * rng.random::<f64>().sqrt();
                    let phi = std::f64::consts::TAU * rng.random::<f64>();
                    if zero {
                        ZERO
                    } else {
                        Complex64::from_polar(r, phi)
                    }
                };
                let w = disk((p[0] * p[3]).sqrt(), fam.w_zero);
                let z = disk((p[1] * p[2]).sqrt(), fam.z_zero);
                XState::from_parts(p[0], p[1], p[2], p[3], w, z).embed()
            })
            .collect()
    }

    /// Extreme members followed by `n` random members.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<DensityMatrix> {
        let mut v = self.extreme_members();
        v.extend(self.random_members(n, seed));
        v
    }
}

fn simplex_landmarks() -> Vec<[f64; 4]> {
    let mut out = Vec::new();
    for mask in 1u32..16 {
        let k = mask.count_ones() as f64;
        out.push(std::array::from_fn(|i| {
            if mask >> i & 1 == 1 {
                1.0 / k
            } else {
                0.0
            }
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::BellKind;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn catalog() -> Vec<ChannelSpec> {
        vec![
            ChannelSpec::decay(1.0, 1.0, 0.0).unwrap(),
            ChannelSpec::decay(0.7, 1.3, 0.5).unwrap(),
            ChannelSpec::dephasing(1.0, 0.4).unwrap(),
            ChannelSpec::collective(1.0).unwrap(),
        ]
    }

    #[test]
    fn rate_validation() {
        assert!(matches!(
            ChannelSpec::decay(-1.0, 1.0, 0.0),
            Err(ChannelError::InvalidRate { .. })
        ));
        assert_eq!(
            ChannelSpec::dephasing(0.0, 0.0),
            Err(ChannelError::NoPositiveRate)
        );
        assert!(ChannelSpec::collective(f64::NAN).is_err());
        assert!(ChannelSpec::custom(vec![]).is_err());
    }

    #[test]
    fn literals_parse() {
        assert_eq!(
            ChannelSpec::parse("decay:1,0.5,0").unwrap(),
            ChannelSpec::decay(1.0, 0.5, 0.0).unwrap()
        );
        assert_eq!(
            ChannelSpec::parse("dephase:1,2").unwrap(),
            ChannelSpec::dephasing(1.0, 2.0).unwrap()
        );
        assert_eq!(
            ChannelSpec::parse("collective:1").unwrap(),
            ChannelSpec::collective(1.0).unwrap()
        );
        for ch in catalog() {
            assert_eq!(ChannelSpec::parse(&ch.to_string()).unwrap(), ch);
        }
        assert!(ChannelSpec::parse("decay:1,1").is_err());
        assert!(ChannelSpec::parse("thermal:1").is_err());
        assert!(ChannelSpec::parse("collective").is_err());
    }

    #[test]
    fn jump_file_round_trip() {
        let jumps = ChannelSpec::collective(0.5).unwrap().jump_operators();
        let text = format_jump_file(&jumps);
        assert_eq!(parse_jump_file(&text).unwrap(), jumps);
        assert!(parse_jump_file("# nothing\n").is_err());
        assert!(parse_jump_file("0.5 dense:1:0").is_err());
    }

    #[test]
    fn stationary_examples() {
        let ground = DensityMatrix::basis_state(3);
        let g = generator(&ChannelSpec::decay(1.0, 1.0, 0.0).unwrap(), &ground);
        assert_eq!(linalg::max_abs(&g), 0.0);

        let diag = DensityMatrix::new(linalg::diag([0.1, 0.2, 0.3, 0.4]), &tol()).unwrap();
        let g = generator(&ChannelSpec::dephasing(1.0, 2.0).unwrap(), &diag);
        assert_eq!(linalg::max_abs(&g), 0.0);

        let psi = XState::bell(BellKind::PsiPlus).embed();
        let g = generator(&ChannelSpec::collective(1.0).unwrap(), &psi);
        assert_eq!(linalg::max_abs(&g), 0.0);
    }

    #[test]
    fn generator_is_hermitian_and_traceless() {
        for ch in catalog() {
            for seed in 0..10 {
                let g = generator(&ch, &DensityMatrix::random(seed));
                assert!(linalg::trace(&g).norm() < 1e-14);
                assert!(linalg::hermitian_asymmetry(&g) < 1e-15);
            }
        }
    }

    #[test]
    fn liouvillian_matches_matrix_generator() {
        for ch in catalog() {
            let l = Liouvillian::new(&ch);
            for seed in 0..10 {
                let rho = DensityMatrix::random(seed);
                let direct = generator(&ch, &rho);
                let sup = from_vec16(&l.apply(&to_vec16(rho.entries())));
                assert!(linalg::max_abs_diff(&direct, &sup) < 1e-15);
            }
        }
    }

    #[test]
    fn numeric_zero_time_is_identity() {
        let rho = DensityMatrix::random(4);
        let ch = ChannelSpec::decay(1.0, 1.0, 0.0).unwrap();
        assert_eq!(
            propagate_numeric(&rho, &ch, 0.0, 1e-3, &tol()).unwrap(),
            rho
        );
    }

    #[test]
    fn numeric_excited_decay() {
        let ch = ChannelSpec::decay(1.0, 1.0, 0.0).unwrap();
        let rho =
            propagate_numeric(&DensityMatrix::basis_state(0), &ch, 1.0, 1e-3, &tol()).unwrap();
        assert!((rho.get(0, 0).re - (-2.0f64).exp()).abs() < 1e-8);
        assert!((rho.get(0, 0).re - 0.13534).abs() < 1e-5);
    }

    #[test]
    fn step_sizes_cover_interval() {
        let v: Vec<f64> = step_sizes(1.0, 0.3).collect();
        assert_eq!(v.len(), 4);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(step_sizes(1.0, 1e-3).count(), 1000);
        assert_eq!(step_sizes(0.5, 1.0).collect::<Vec<_>>(), vec![0.5]);
    }

    #[test]
    fn oversized_step_is_reported() {
        let ch = ChannelSpec::decay(1.0, 1.0, 0.0).unwrap();
        let err = propagate_numeric(
            &XState::bell(BellKind::PhiPlus).embed(),
            &ch,
            10.0,
            5.0,
            &tol(),
        );
        assert!(matches!(err, Err(ChannelError::StepTooLarge(_))), "{err:?}");
    }

    #[test]
    fn closed_form_examples() {
        let x = XState::bell(BellKind::PhiPlus);
        let ch = ChannelSpec::dephasing(1.0, 1.0).unwrap();
        let y = propagate_x_closed(&x, &ch, std::f64::consts::LN_2 / 2.0).unwrap();
        assert!((y.w().re - 0.25).abs() < 1e-15);
        assert_eq!(y.populations(), x.populations());

        let psi = XState::bell(BellKind::PsiPlus);
        let ch = ChannelSpec::collective(1.0).unwrap();
        assert_eq!(propagate_x_closed(&psi, &ch, 50.0).unwrap(), psi);

        let (a, d) = (0.7, 0.3);
        let pure = XState::pure_phi(a).unwrap();
        let ch = ChannelSpec::decay(1.0, 1.0, 0.0).unwrap();
        let t: f64 = 0.8;
        let p = (-t).exp();
        let y = propagate_x_closed(&pure, &ch, t).unwrap();
        assert!((y.a() - a * p * p).abs() < 1e-15);
        assert!((y.b() - a * p * (1.0 - p)).abs() < 1e-15);
        assert!((y.c() - a * p * (1.0 - p)).abs() < 1e-15);
        assert!((y.d() - (1.0 - a * p * p - 2.0 * a * p * (1.0 - p))).abs() < 1e-15);
        assert!((y.w().re - (a * d).sqrt() * p).abs() < 1e-15);
        assert!(propagate_x_closed(&pure, &ch, 0.0).unwrap() == pure);
    }

    #[test]
    fn closed_form_rejects_custom() {
        let ch =
            ChannelSpec::custom(ChannelSpec::collective(1.0).unwrap().jump_operators()).unwrap();
        assert!(matches!(
            propagate_x_closed(&XState::bell(BellKind::PhiPlus), &ch, 1.0),
            Err(ChannelError::UnsupportedChannel(_))
        ));
        assert!(asymptotic_set(&ch).is_err());
    }

    #[test]
    fn asymptotic_sets() {
        match asymptotic_set(&ChannelSpec::decay(1.0, 2.0, 0.0).unwrap()).unwrap() {
            AsymptoticSet::SinglePoint(p) => assert_eq!(p, DensityMatrix::basis_state(3)),
            other => panic!("{other:?}"),
        }
        match asymptotic_set(&ChannelSpec::decay(1.0, 1.0, 0.5).unwrap()).unwrap() {
            AsymptoticSet::SinglePoint(p) => {
                let q = [0.0625, 0.1875, 0.1875, 0.5625];
                for (x, y) in p.populations().iter().zip(q) {
                    assert!((x - y).abs() < 1e-15);
                }
            }
            other => panic!("{other:?}"),
        }
        assert!(asymptotic_set(&ChannelSpec::decay(1.0, 0.0, 0.0).unwrap()).is_err());
        assert!(asymptotic_set(&ChannelSpec::dephasing(1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn extreme_members_of_tetrahedron() {
        let set = asymptotic_set(&ChannelSpec::dephasing(1.0, 1.0).unwrap()).unwrap();
        let m = set.extreme_members();
        assert_eq!(m.len(), 15);
        assert!(m.iter().all(|rho| set.contains(rho, 1e-12)));
        let set = asymptotic_set(&ChannelSpec::collective(1.0).unwrap()).unwrap();
        assert!(set.extreme_members().len() > 15);
    }
}
