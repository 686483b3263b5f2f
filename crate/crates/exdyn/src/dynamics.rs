//! Dynamical systems: two planar maps, a torus automorphism, a solid-torus
//! map, and two 3D flows, behind one orbit interface.
//!
//! Systems and their standard parameters:
//!
//! * `thom` — area-preserving torus automorphism
//!   f(x, y) = (2x + y, x + y) mod 1.
//! * `solenoid` — uniformly contracting solid-torus map in internal
//!   coordinates (psi, r, z), psi in [0, 1):
//!   g(psi, r, z) = (2 psi mod 1, 1 + K cos(2 pi psi) + lambda (r - 1),
//!   K sin(2 pi psi) + lambda z). Defaults K = 0.5, lambda = 0.25; the image
//!   of the solid torus (r-1)^2 + z^2 <= R^2 stays inside for R = 0.9.
//! * `henon` — h(x, y) = (1 - a x^2 + y, b x), defaults (a, b) = (1.4, 0.3).
//! * `lozi` — piecewise-affine l(x, y) = (1 - a |x| + y, b x), defaults
//!   (a, b) = (1.7, 0.1).
//! * `lorenz63` — dx = sigma (y - x), dy = x (rho - z) - y, dz = x y - beta z,
//!   defaults (10, 28, 8/3), sampled every dt = 0.05.
//! * `lorenz84` — dx = -a x - y^2 - z^2 + a F, dy = -y + x y - b x z + G,
//!   dz = -z + b x y + x z, defaults (a, b, F, G) = (0.25, 4, 8, 1),
//!   sampled every dt = 0.1.
//!
//! Flows advance with a fixed-step classical Runge-Kutta (RK4) integrator,
//! `SUBSTEPS_DEFAULT` substeps per sample interval. Orbits yield the current
//! state first, then one state per step; for flows consecutive states are dt
//! apart.

use std::collections::BTreeMap;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::util::{open_unit, uniform_in};
use crate::{Error, Result};

/// RK4 substeps per sample interval unless overridden.
pub const SUBSTEPS_DEFAULT: u32 = 10;

/// Orbit transient discarded by default before sampling starts.
pub const TRANSIENT_DEFAULT: u64 = 100_000;

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

/// Point in R^2 or R^3. Copyable and allocation-free so orbit loops stay hot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    coords: [f64; 3],
    dim: u8,
}

impl State {
    pub fn new2(x: f64, y: f64) -> State {
        State { coords: [x, y, 0.0], dim: 2 }
    }

    pub fn new3(x: f64, y: f64, z: f64) -> State {
        State { coords: [x, y, z], dim: 3 }
    }

    pub fn from_slice(v: &[f64]) -> Result<State> {
        match v {
            [x, y] => Ok(State::new2(*x, *y)),
            [x, y, z] => Ok(State::new3(*x, *y, *z)),
            _ => Err(Error::DimensionMismatch { expected: 3, got: v.len() }),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    /// Third coordinate; zero for planar states.
    #[inline]
    pub fn z(&self) -> f64 {
        self.coords[2]
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    /// self + c * other, componentwise. Used by the RK4 stages.
    #[inline]
    fn axpy(&self, c: f64, other: &State) -> State {
        State {
            coords: [
                self.coords[0] + c * other.coords[0],
                self.coords[1] + c * other.coords[1],
                self.coords[2] + c * other.coords[2],
            ],
            dim: self.dim,
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.as_slice().iter().map(|v| format!("{v}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Half-open mod-1 reduction: exact integers map to 0 and the result always
/// lies in [0, 1), including for tiny negative inputs where x - floor(x)
/// rounds up to 1.
#[inline]
pub fn mod1(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

// ---------------------------------------------------------------------------
// System specifications
// ---------------------------------------------------------------------------

/// Discrete- vs continuous-time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Map,
    Flow,
}

/// System identifier, as written in configs and on the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemId {
    Thom,
    Solenoid,
    Henon,
    Lozi,
    Lorenz63,
    Lorenz84,
}

impl SystemId {
    pub const ALL: [SystemId; 6] = [
        SystemId::Thom,
        SystemId::Solenoid,
        SystemId::Henon,
        SystemId::Lozi,
        SystemId::Lorenz63,
        SystemId::Lorenz84,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SystemId::Thom => "thom",
            SystemId::Solenoid => "solenoid",
            SystemId::Henon => "henon",
            SystemId::Lozi => "lozi",
            SystemId::Lorenz63 => "lorenz63",
            SystemId::Lorenz84 => "lorenz84",
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SystemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<SystemId> {
        SystemId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown system `{s}`")))
    }
}

/// A system together with its parameters. Construct via the named
/// constructors (validated) or [`SystemSpec::from_params`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SystemSpec {
    Thom,
    Solenoid { lambda: f64, k: f64 },
    Henon { a: f64, b: f64 },
    Lozi { a: f64, b: f64 },
    Lorenz63 { sigma: f64, rho: f64, beta: f64 },
    Lorenz84 { a: f64, b: f64, f: f64, g: f64 },
}

impl SystemSpec {
    pub fn thom() -> SystemSpec {
        SystemSpec::Thom
    }

    /// lambda must lie in (0, 1/2) and K in (0, 1 - lambda), which is exactly
    /// the condition for some solid torus of radius R < 1 centred on r = 1 to
    /// map strictly into itself (K + lambda R < R) while winding round
    /// (lambda R < K).
    pub fn solenoid(lambda: f64, k: f64) -> Result<SystemSpec> {
        if !(lambda > 0.0 && lambda < 0.5) {
            return Err(Error::InvalidParams(format!(
                "solenoid contraction lambda = {lambda} must lie in (0, 1/2)"
            )));
        }
        if !(k > 0.0 && k < 1.0 - lambda) {
            return Err(Error::InvalidParams(format!(
                "solenoid offset K = {k} must lie in (0, 1 - lambda) for an invariant torus"
            )));
        }
        Ok(SystemSpec::Solenoid { lambda, k })
    }

    pub fn henon(a: f64, b: f64) -> Result<SystemSpec> {
        ensure_finite_params(&[a, b])?;
        Ok(SystemSpec::Henon { a, b })
    }

    pub fn lozi(a: f64, b: f64) -> Result<SystemSpec> {
        ensure_finite_params(&[a, b])?;
        Ok(SystemSpec::Lozi { a, b })
    }

    pub fn lorenz63(sigma: f64, rho: f64, beta: f64) -> Result<SystemSpec> {
        ensure_finite_params(&[sigma, rho, beta])?;
        Ok(SystemSpec::Lorenz63 { sigma, rho, beta })
    }

    pub fn lorenz84(a: f64, b: f64, f: f64, g: f64) -> Result<SystemSpec> {
        ensure_finite_params(&[a, b, f, g])?;
        Ok(SystemSpec::Lorenz84 { a, b, f, g })
    }

    /// The standard parameter set for each system.
    pub fn with_defaults(id: SystemId) -> SystemSpec {
        match id {
            SystemId::Thom => SystemSpec::Thom,
            SystemId::Solenoid => SystemSpec::Solenoid { lambda: 0.25, k: 0.5 },
            SystemId::Henon => SystemSpec::Henon { a: 1.4, b: 0.3 },
            SystemId::Lozi => SystemSpec::Lozi { a: 1.7, b: 0.1 },
            SystemId::Lorenz63 => SystemSpec::Lorenz63 { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 },
            SystemId::Lorenz84 => SystemSpec::Lorenz84 { a: 0.25, b: 4.0, f: 8.0, g: 1.0 },
        }
    }

    /// Build from an id plus a (possibly partial) named-parameter map.
    /// Unlisted parameters keep their defaults; unknown names are rejected.
    pub fn from_params(id: SystemId, params: &BTreeMap<String, f64>) -> Result<SystemSpec> {
        let mut spec = SystemSpec::with_defaults(id);
        for (name, &value) in params {
            spec = spec.with_param(name, value)?;
        }
        spec.validated()
    }

    fn with_param(self, name: &str, value: f64) -> Result<SystemSpec> {
        let unknown = || Error::UnknownParam { name: name.to_string() };
        Ok(match self {
            SystemSpec::Thom => return Err(unknown()),
            SystemSpec::Solenoid { lambda, k } => match name {
                "lambda" => SystemSpec::Solenoid { lambda: value, k },
                "k" | "K" => SystemSpec::Solenoid { lambda, k: value },
                _ => return Err(unknown()),
            },
            SystemSpec::Henon { a, b } => match name {
                "a" => SystemSpec::Henon { a: value, b },
                "b" => SystemSpec::Henon { a, b: value },
                _ => return Err(unknown()),
            },
            SystemSpec::Lozi { a, b } => match name {
                "a" => SystemSpec::Lozi { a: value, b },
                "b" => SystemSpec::Lozi { a, b: value },
                _ => return Err(unknown()),
            },
            SystemSpec::Lorenz63 { sigma, rho, beta } => match name {
                "sigma" => SystemSpec::Lorenz63 { sigma: value, rho, beta },
                "rho" => SystemSpec::Lorenz63 { sigma, rho: value, beta },
                "beta" => SystemSpec::Lorenz63 { sigma, rho, beta: value },
                _ => return Err(unknown()),
            },
            SystemSpec::Lorenz84 { a, b, f, g } => match name {
                "a" => SystemSpec::Lorenz84 { a: value, b, f, g },
                "b" => SystemSpec::Lorenz84 { a, b: value, f, g },
                "f" | "F" => SystemSpec::Lorenz84 { a, b, f: value, g },
                "g" | "G" => SystemSpec::Lorenz84 { a, b, f, g: value },
                _ => return Err(unknown()),
            },
        })
    }

    fn validated(self) -> Result<SystemSpec> {
        match self {
            SystemSpec::Solenoid { lambda, k } => SystemSpec::solenoid(lambda, k),
            SystemSpec::Henon { a, b } => SystemSpec::henon(a, b),
            SystemSpec::Lozi { a, b } => SystemSpec::lozi(a, b),
            SystemSpec::Lorenz63 { sigma, rho, beta } => SystemSpec::lorenz63(sigma, rho, beta),
            SystemSpec::Lorenz84 { a, b, f, g } => SystemSpec::lorenz84(a, b, f, g),
            SystemSpec::Thom => Ok(self),
        }
    }

    pub fn id(&self) -> SystemId {
        match self {
            SystemSpec::Thom => SystemId::Thom,
            SystemSpec::Solenoid { .. } => SystemId::Solenoid,
            SystemSpec::Henon { .. } => SystemId::Henon,
            SystemSpec::Lozi { .. } => SystemId::Lozi,
            SystemSpec::Lorenz63 { .. } => SystemId::Lorenz63,
            SystemSpec::Lorenz84 { .. } => SystemId::Lorenz84,
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            SystemSpec::Lorenz63 { .. } | SystemSpec::Lorenz84 { .. } => Kind::Flow,
            _ => Kind::Map,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            SystemSpec::Thom | SystemSpec::Henon { .. } | SystemSpec::Lozi { .. } => 2,
            _ => 3,
        }
    }

    /// Default sample interval for flows; None for maps.
    pub fn default_dt(&self) -> Option<f64> {
        match self {
            SystemSpec::Lorenz63 { .. } => Some(0.05),
            SystemSpec::Lorenz84 { .. } => Some(0.1),
            _ => None,
        }
    }

    /// Named parameters, for serialization and display.
    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match *self {
            SystemSpec::Thom => {}
            SystemSpec::Solenoid { lambda, k } => {
                m.insert("lambda".into(), lambda);
                m.insert("k".into(), k);
            }
            SystemSpec::Henon { a, b } | SystemSpec::Lozi { a, b } => {
                m.insert("a".into(), a);
                m.insert("b".into(), b);
            }
            SystemSpec::Lorenz63 { sigma, rho, beta } => {
                m.insert("sigma".into(), sigma);
                m.insert("rho".into(), rho);
                m.insert("beta".into(), beta);
            }
            SystemSpec::Lorenz84 { a, b, f, g } => {
                m.insert("a".into(), a);
                m.insert("b".into(), b);
                m.insert("f".into(), f);
                m.insert("g".into(), g);
            }
        }
        m
    }
}

fn ensure_finite_params(vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParams("parameters must be finite".into()))
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self.params();
        if params.is_empty() {
            return write!(f, "{}", self.id());
        }
        let body: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}({})", self.id(), body.join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    system_id: SystemId,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, f64>,
}

impl Serialize for SystemSpec {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        SystemRepr { system_id: self.id(), params: self.params() }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = SystemRepr::deserialize(de)?;
        SystemSpec::from_params(repr.system_id, &repr.params).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

#[inline]
fn step_unchecked(sys: &SystemSpec, s: State) -> State {
    match *sys {
        SystemSpec::Thom => {
            let (x, y) = (s.x(), s.y());
            State::new2(mod1(2.0 * x + y), mod1(x + y))
        }
        SystemSpec::Solenoid { lambda, k } => {
            let (psi, r, z) = (s.x(), s.y(), s.z());
            let (sin, cos) = (std::f64::consts::TAU * psi).sin_cos();
            // Literal textbook form. Doubling is exact in binary floating
            // point, so composing this step leaks one mantissa bit per
            // iteration and reaches exactly psi = 0 within ~1100 steps; use
            // orbit(), which steps the Cartesian embedding, for sampling.
            State::new3(mod1(2.0 * psi), 1.0 + k * cos + lambda * (r - 1.0), k * sin + lambda * z)
        }
        SystemSpec::Henon { a, b } => {
            let (x, y) = (s.x(), s.y());
            State::new2(1.0 - a * x * x + y, b * x)
        }
        SystemSpec::Lozi { a, b } => {
            let (x, y) = (s.x(), s.y());
            State::new2(1.0 - a * x.abs() + y, b * x)
        }
        _ => unreachable!("flows do not define a map step"),
    }
}

/// One application of a discrete map.
pub fn map_step(sys: &SystemSpec, s: State) -> Result<State> {
    if sys.kind() != Kind::Map {
        return Err(Error::MapExpected);
    }
    check_dim(sys, &s)?;
    if !s.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(step_unchecked(sys, s))
}

#[inline]
fn field_unchecked(sys: &SystemSpec, s: State) -> State {
    match *sys {
        SystemSpec::Lorenz63 { sigma, rho, beta } => {
            let (x, y, z) = (s.x(), s.y(), s.z());
            State::new3(sigma * (y - x), x * (rho - z) - y, x * y - beta * z)
        }
        SystemSpec::Lorenz84 { a, b, f, g } => {
            let (x, y, z) = (s.x(), s.y(), s.z());
            State::new3(
                -a * x - y * y - z * z + a * f,
                -y + x * y - b * x * z + g,
                -z + b * x * y + x * z,
            )
        }
        _ => unreachable!("maps do not define a vector field"),
    }
}

/// Right-hand side of a flow at a state.
pub fn vector_field(sys: &SystemSpec, s: State) -> Result<State> {
    if sys.kind() != Kind::Flow {
        return Err(Error::FlowExpected);
    }
    check_dim(sys, &s)?;
    if !s.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(field_unchecked(sys, s))
}

#[inline]
fn rk4_step(sys: &SystemSpec, s: State, h: f64) -> State {
    let k1 = field_unchecked(sys, s);
    let k2 = field_unchecked(sys, s.axpy(0.5 * h, &k1));
    let k3 = field_unchecked(sys, s.axpy(0.5 * h, &k2));
    let k4 = field_unchecked(sys, s.axpy(h, &k3));
    let mut out = s;
    out = out.axpy(h / 6.0, &k1);
    out = out.axpy(h / 3.0, &k2);
    out = out.axpy(h / 3.0, &k3);
    out = out.axpy(h / 6.0, &k4);
    out
}

/// Advance a flow by one sample interval dt using `substeps` RK4 steps of
/// size dt / substeps.
pub fn flow_sample(sys: &SystemSpec, s: State, dt: f64, substeps: u32) -> Result<State> {
    if sys.kind() != Kind::Flow {
        return Err(Error::FlowExpected);
    }
    check_dim(sys, &s)?;
    if !s.is_finite() {
        return Err(Error::NonFiniteState);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!("sample interval dt = {dt} must be positive")));
    }
    if substeps == 0 {
        return Err(Error::InvalidConfig("substeps must be at least 1".into()));
    }
    let h = dt / substeps as f64;
    let mut cur = s;
    for i in 0..substeps {
        cur = rk4_step(sys, cur, h);
        if !cur.is_finite() {
            return Err(Error::NonFiniteSubstep { substep: i + 1 });
        }
    }
    Ok(cur)
}

fn check_dim(sys: &SystemSpec, s: &State) -> Result<()> {
    if s.dim() == sys.state_dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: sys.state_dim(), got: s.dim() })
    }
}

// ---------------------------------------------------------------------------
// Jacobians
// ---------------------------------------------------------------------------

/// Small dense matrix (2x2 or 3x3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix {
    data: [[f64; 3]; 3],
    dim: usize,
}

impl Matrix {
    pub fn from_rows2(r0: [f64; 2], r1: [f64; 2]) -> Matrix {
        Matrix {
            data: [[r0[0], r0[1], 0.0], [r1[0], r1[1], 0.0], [0.0, 0.0, 0.0]],
            dim: 2,
        }
    }

    pub fn from_rows3(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> Matrix {
        Matrix { data: [r0, r1, r2], dim: 3 }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i][j]
    }

    pub fn det(&self) -> f64 {
        let m = &self.data;
        match self.dim {
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            3 => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
            _ => unreachable!(),
        }
    }

    /// Matrix product self * rhs.
    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Matrix { data: [[0.0; 3]; 3], dim: n };
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for (k, rhs_row) in rhs.data.iter().enumerate().take(n) {
                    acc += self.data[i][k] * rhs_row[j];
                }
                out.data[i][j] = acc;
            }
        }
        out
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix { data: [[0.0; 3]; 3], dim: n };
        for i in 0..n {
            m.data[i][i] = 1.0;
        }
        m
    }

    pub(crate) fn data_mut(&mut self) -> &mut [[f64; 3]; 3] {
        &mut self.data
    }

    pub(crate) fn data(&self) -> &[[f64; 3]; 3] {
        &self.data
    }
}

/// Derivative of the step map (for maps) or of the vector field (for flows)
/// at a state.
///
/// The Lozi map is not differentiable on the switching line x = 0; that is
/// signalled as [`Error::JacobianUndefined`] so callers can skip the step.
pub fn jacobian(sys: &SystemSpec, s: &State) -> Result<Matrix> {
    check_dim(sys, s)?;
    if !s.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(match *sys {
        SystemSpec::Thom => Matrix::from_rows2([2.0, 1.0], [1.0, 1.0]),
        SystemSpec::Solenoid { lambda, k } => {
            let psi = s.x();
            let (sin, cos) = (std::f64::consts::TAU * psi).sin_cos();
            let tau = std::f64::consts::TAU;
            Matrix::from_rows3(
                [2.0, 0.0, 0.0],
                [-tau * k * sin, lambda, 0.0],
                [tau * k * cos, 0.0, lambda],
            )
        }
        SystemSpec::Henon { a, b } => Matrix::from_rows2([-2.0 * a * s.x(), 1.0], [b, 0.0]),
        SystemSpec::Lozi { a, b } => {
            if s.x() == 0.0 {
                return Err(Error::JacobianUndefined);
            }
            Matrix::from_rows2([-a * s.x().signum(), 1.0], [b, 0.0])
        }
        SystemSpec::Lorenz63 { sigma, rho, beta } => {
            let (x, y, z) = (s.x(), s.y(), s.z());
            Matrix::from_rows3(
                [-sigma, sigma, 0.0],
                [rho - z, -1.0, -x],
                [y, x, -beta],
            )
        }
        SystemSpec::Lorenz84 { a, b, .. } => {
            let (x, y, z) = (s.x(), s.y(), s.z());
            Matrix::from_rows3(
                [-a, -2.0 * y, -2.0 * z],
                [y - b * z, x - 1.0, -b * x],
                [b * y + z, b * x, x - 1.0],
            )
        }
    })
}

// ---------------------------------------------------------------------------
// Orbits
// ---------------------------------------------------------------------------

/// How the initial condition is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Initial {
    /// Drawn from a system-appropriate box using the orbit seed: the unit
    /// square (thom), psi uniform with (r, z) = (1, 0) (solenoid), a small
    /// square at the origin (henon, lozi), or a small box near (1, 1, 1)
    /// (flows; scaled by F/8 for lorenz84).
    Seeded,
    Explicit(State),
}

/// Orbit generation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitConfig {
    pub initial: Initial,
    /// Steps discarded before the first yielded state.
    pub transient: u64,
    /// Number of states the orbit yields.
    pub n_samples: u64,
    /// Sample interval for flows; None picks the system default.
    pub dt: Option<f64>,
    pub substeps: u32,
    pub seed: u64,
}

impl Default for OrbitConfig {
    fn default() -> OrbitConfig {
        OrbitConfig {
            initial: Initial::Seeded,
            transient: TRANSIENT_DEFAULT,
            n_samples: 0,
            dt: None,
            substeps: SUBSTEPS_DEFAULT,
            seed: 0,
        }
    }
}

fn seeded_initial(sys: &SystemSpec, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *sys {
        SystemSpec::Thom => {
            let x = open_unit(&mut rng);
            let y = open_unit(&mut rng);
            State::new2(x, y)
        }
        SystemSpec::Solenoid { .. } => {
            let psi = mod1(open_unit(&mut rng));
            State::new3(psi, 1.0, 0.0)
        }
        SystemSpec::Henon { .. } | SystemSpec::Lozi { .. } => {
            let x = uniform_in(&mut rng, -0.1, 0.1);
            let y = uniform_in(&mut rng, -0.1, 0.1);
            State::new2(x, y)
        }
        SystemSpec::Lorenz63 { .. } => {
            let x = uniform_in(&mut rng, 0.9, 1.1);
            let y = uniform_in(&mut rng, 0.9, 1.1);
            let z = uniform_in(&mut rng, 0.9, 1.1);
            State::new3(x, y, z)
        }
        SystemSpec::Lorenz84 { f, .. } => {
            let s = 0.1 * (f / 8.0);
            let x = 1.0 + uniform_in(&mut rng, -s, s);
            let y = 1.0 + uniform_in(&mut rng, -s, s);
            let z = 1.0 + uniform_in(&mut rng, -s, s);
            State::new3(x, y, z)
        }
    }
}

/// One solenoid step carried in the Cartesian embedding. Algebraically the
/// same map as the (psi, r, z) form: with (u, v) = (x, y)/r the doubled
/// angle has cosine (u - v)(u + v) and sine 2uv. Rounding here perturbs the
/// angle generically instead of performing the doubling exactly, so long
/// orbits keep sampling the invariant measure (the scalar form reaches the
/// psi = 0 fiber within ~1100 steps and stays there).
fn solenoid_step_cartesian(lambda: f64, k: f64, s: State) -> State {
    let (x, y, z) = (s.x(), s.y(), s.z());
    let r = x.hypot(y);
    let (u, v) = (x / r, y / r);
    let r_next = 1.0 + k * u + lambda * (r - 1.0);
    State::new3(r_next * (u - v) * (u + v), r_next * 2.0 * u * v, k * v + lambda * z)
}

/// Project a Cartesian solenoid state back to (psi, r, z), psi in [0, 1).
fn solenoid_unembed(s: State) -> State {
    let mut psi = s.y().atan2(s.x()) / std::f64::consts::TAU;
    if psi < 0.0 {
        psi += 1.0;
    }
    if psi >= 1.0 {
        psi = 0.0;
    }
    State::new3(psi, s.x().hypot(s.y()), s.z())
}

/// Iterator over orbit states. The first item is the post-transient state
/// itself; each further item is one step (one dt for flows) later. Identical
/// (system, config) inputs reproduce the stream bitwise.
pub struct Orbit {
    system: SystemSpec,
    state: State,
    /// Cartesian shadow of the solenoid state; None until the radius is
    /// positive (the embedding cannot hold an angle at r = 0).
    embedded: Option<State>,
    produced: u64,
    n_samples: u64,
    /// Map applications (or flow samples) taken since the initial condition,
    /// transient included; used for divergence indices.
    steps_taken: u64,
    dt: f64,
    substeps: u32,
    failed: bool,
}

impl Orbit {
    fn advance(&mut self) -> Result<State> {
        let next = match self.system.kind() {
            Kind::Map => {
                let s = match (self.system, self.embedded) {
                    (SystemSpec::Solenoid { lambda, k }, Some(c)) => {
                        let c = solenoid_step_cartesian(lambda, k, c);
                        self.embedded = Some(c);
                        solenoid_unembed(c)
                    }
                    (SystemSpec::Solenoid { .. }, None) => {
                        let s = step_unchecked(&self.system, self.state);
                        if s.y() > 0.0 {
                            self.embedded = Some(to_cartesian(&self.system, s));
                        }
                        s
                    }
                    _ => step_unchecked(&self.system, self.state),
                };
                self.steps_taken += 1;
                if !s.is_finite() {
                    return Err(Error::Divergence { step: self.steps_taken });
                }
                s
            }
            Kind::Flow => {
                let s = flow_sample(&self.system, self.state, self.dt, self.substeps)
                    .map_err(|_| Error::Divergence { step: self.steps_taken + 1 })?;
                self.steps_taken += 1;
                s
            }
        };
        self.state = next;
        Ok(next)
    }

    /// Sample interval in use (1.0 for maps, for bookkeeping purposes).
    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl Iterator for Orbit {
    type Item = Result<State>;

    fn next(&mut self) -> Option<Result<State>> {
        if self.failed || self.produced >= self.n_samples {
            return None;
        }
        if self.produced == 0 {
            self.produced = 1;
            return Some(Ok(self.state));
        }
        self.produced += 1;
        match self.advance() {
            Ok(s) => Some(Ok(s)),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Build an orbit: resolve the initial condition, discard the transient,
/// return an iterator over exactly `cfg.n_samples` states (internal
/// coordinates for the solenoid).
pub fn orbit(sys: &SystemSpec, cfg: &OrbitConfig) -> Result<Orbit> {
    let state = match cfg.initial {
        Initial::Seeded => seeded_initial(sys, cfg.seed),
        Initial::Explicit(s) => {
            check_dim(sys, &s)?;
            if !s.is_finite() {
                return Err(Error::NonFiniteState);
            }
            s
        }
    };
    let dt = match sys.kind() {
        Kind::Map => 1.0,
        Kind::Flow => {
            let dt = cfg.dt.or_else(|| sys.default_dt()).expect("flows have a default dt");
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "sample interval dt = {dt} must be positive"
                )));
            }
            dt
        }
    };
    if cfg.substeps == 0 {
        return Err(Error::InvalidConfig("substeps must be at least 1".into()));
    }
    let embedded = match sys {
        SystemSpec::Solenoid { .. } if state.y() > 0.0 => Some(to_cartesian(sys, state)),
        _ => None,
    };
    let mut orb = Orbit {
        system: *sys,
        state,
        embedded,
        produced: 0,
        n_samples: cfg.n_samples,
        steps_taken: 0,
        dt,
        substeps: cfg.substeps,
        failed: false,
    };
    for _ in 0..cfg.transient {
        orb.advance()?;
    }
    Ok(orb)
}

/// Embed a state into Cartesian coordinates: the solenoid's (psi, r, z)
/// becomes (r cos(2 pi psi), r sin(2 pi psi), z); all other systems already
/// live in Cartesian coordinates.
pub fn to_cartesian(sys: &SystemSpec, s: State) -> State {
    match sys {
        SystemSpec::Solenoid { .. } => {
            let (sin, cos) = (std::f64::consts::TAU * s.x()).sin_cos();
            let r = s.y();
            State::new3(r * cos, r * sin, s.z())
        }
        _ => s,
    }
}

// ---------------------------------------------------------------------------
