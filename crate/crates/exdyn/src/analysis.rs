//! Lyapunov spectra, attractor dimensions, and tail-index predictions.
//!
//! The spectrum comes from the standard QR (Benettin) scheme: evolve an
//! orthonormal tangent frame alongside the orbit, re-orthonormalize with
//! modified Gram-Schmidt at every sample interval, and average the logs of
//! the resulting column norms. Maps multiply step Jacobians; flows integrate
//! the variational equation Y' = J(x) Y with the same fixed-step RK4 as the
//! trajectory, so state and frame stay consistent to the integrator's order.
//!
//! The tail predictions encode the known asymptotics for block maxima of
//! smooth observables over these attractors: the fitted shape parameter is
//! determined by how the observable's level sets intersect the invariant
//! set near its maximum, through a positive exponent reported as -1/xi.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dynamics::{
    jacobian, map_step, orbit, vector_field, Initial, Kind, Matrix, OrbitConfig, State,
    SystemSpec,
};
use crate::{Error, Result};

/// Orbit steps discarded before tangent dynamics start.
const LYAP_TRANSIENT: u64 = 10_000;
/// Tangent-frame steps discarded so the frame can align with the Oseledets
/// filtration before logs are accumulated.
const TANGENT_WARMUP: u64 = 100;

// ---------------------------------------------------------------------------
// QR on the tangent frame
// ---------------------------------------------------------------------------

/// Modified Gram-Schmidt factorization B = QR. Returns Q and the diagonal of
/// R (column norms after orthogonalization), which is all the spectrum needs.
fn qr_mgs(b: &Matrix) -> Result<(Matrix, [f64; 3])> {
    let n = b.dim();
    // v[j] holds column j.
    let mut v = [[0.0f64; 3]; 3];
    for (j, col) in v.iter_mut().enumerate().take(n) {
        for (i, e) in col.iter_mut().enumerate().take(n) {
            *e = b.get(i, j);
        }
    }
    let mut diag = [0.0f64; 3];
    for j in 0..n {
        // Subtract projections onto the already-final columns, one at a
        // time against the running remainder (this ordering is what makes
        // the scheme "modified" and keeps it stable).
        for k in 0..j {
            let (head, tail) = v.split_at_mut(j);
            let q = &head[k];
            let w = &mut tail[0];
            let dot: f64 = (0..n).map(|i| q[i] * w[i]).sum();
            for i in 0..n {
                w[i] -= dot * q[i];
            }
        }
        let norm = (0..n).map(|i| v[j][i] * v[j][i]).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > f64::MIN_POSITIVE) {
            return Err(Error::TangentDegenerate);
        }
        diag[j] = norm;
        for i in 0..n {
            v[j][i] /= norm;
        }
    }
    let mut q = Matrix::identity(n);
    for (j, col) in v.iter().enumerate().take(n) {
        for (i, e) in col.iter().enumerate().take(n) {
            q.data_mut()[i][j] = *e;
        }
    }
    Ok((q, diag))
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

/// Lyapunov exponents in decreasing order. For flows the exponents are per
/// unit time; for maps, per iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovSpectrum {
    pub exponents: Vec<f64>,
    /// Sample steps the averages ran over (excludes transient and warmup).
    pub n_steps: u64,
    /// Steps where the tangent update was skipped because the Jacobian is
    /// undefined there (the Lozi switching line). The state still advances.
    pub skipped: u64,
}

impl LyapunovSpectrum {
    /// Kaplan-Yorke dimension of this spectrum.
    pub fn dimension(&self) -> f64 {
        lyapunov_dimension(&self.exponents)
    }
}

fn state_axpy(a: &State, k: &State, h: f64) -> State {
    let n = a.dim();
    let (sa, sk) = (a.as_slice(), k.as_slice());
    if n == 2 {
        State::new2(sa[0] + h * sk[0], sa[1] + h * sk[1])
    } else {
        State::new3(sa[0] + h * sk[0], sa[1] + h * sk[1], sa[2] + h * sk[2])
    }
}

fn mat_axpy(a: &Matrix, k: &Matrix, h: f64) -> Matrix {
    let mut out = *a;
    let n = a.dim();
    for i in 0..n {
        for j in 0..n {
            out.data_mut()[i][j] += h * k.data()[i][j];
        }
    }
    out
}

/// One RK4 substep of the augmented system (x' = f(x), Y' = J(x) Y).
fn variational_rk4(sys: &SystemSpec, x: State, y: &Matrix, h: f64) -> Result<(State, Matrix)> {
    let k1x = vector_field(sys, x)?;
    let k1y = jacobian(sys, &x)?.mul(y);

    let x2 = state_axpy(&x, &k1x, 0.5 * h);
    let y2 = mat_axpy(y, &k1y, 0.5 * h);
    let k2x = vector_field(sys, x2)?;
    let k2y = jacobian(sys, &x2)?.mul(&y2);

    let x3 = state_axpy(&x, &k2x, 0.5 * h);
    let y3 = mat_axpy(y, &k2y, 0.5 * h);
    let k3x = vector_field(sys, x3)?;
    let k3y = jacobian(sys, &x3)?.mul(&y3);

    let x4 = state_axpy(&x, &k3x, h);
    let y4 = mat_axpy(y, &k3y, h);
    let k4x = vector_field(sys, x4)?;
    let k4y = jacobian(sys, &x4)?.mul(&y4);

    let sixth = h / 6.0;
    let mut xn = state_axpy(&x, &k1x, sixth);
    xn = state_axpy(&xn, &k2x, 2.0 * sixth);
    xn = state_axpy(&xn, &k3x, 2.0 * sixth);
    xn = state_axpy(&xn, &k4x, sixth);
    if !xn.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let mut yn = mat_axpy(y, &k1y, sixth);
    yn = mat_axpy(&yn, &k2y, 2.0 * sixth);
    yn = mat_axpy(&yn, &k3y, 2.0 * sixth);
    yn = mat_axpy(&yn, &k4y, sixth);
    Ok((xn, yn))
}

/// Full Lyapunov spectrum over `n_steps` sample steps, starting from a
/// seeded initial condition relaxed onto the attractor. Deterministic in the
/// seed. Flows use the system's default sample interval and substep count.
pub fn lyapunov_spectrum(sys: &SystemSpec, n_steps: u64, seed: u64) -> Result<LyapunovSpectrum> {
    if n_steps == 0 {
        return Err(Error::InvalidParams("spectrum needs n_steps >= 1".into()));
    }
    let cfg = OrbitConfig {
        initial: Initial::Seeded,
        transient: LYAP_TRANSIENT,
        n_samples: 1,
        seed,
        ..OrbitConfig::default()
    };
    let mut orb = orbit(sys, &cfg)?;
    let mut state = orb.next().expect("n_samples = 1 yields one state")?;
    let dt = orb.dt(); // 0.0 for maps
    let n = sys.state_dim();

    let mut q = Matrix::identity(n);
    let mut sums = [0.0f64; 3];
    let mut counted: u64 = 0;
    let mut skipped: u64 = 0;

    match sys.kind() {
        Kind::Map => {
            let total = TANGENT_WARMUP + n_steps;
            let mut done: u64 = 0;
            while done < total {
                match jacobian(sys, &state) {
                    Ok(a) => {
                        let (qq, r) = qr_mgs(&a.mul(&q))?;
                        q = qq;
                        if done >= TANGENT_WARMUP {
                            for j in 0..n {
                                sums[j] += r[j].ln();
                            }
                            counted += 1;
                        }
                        done += 1;
                    }
                    Err(Error::JacobianUndefined) => skipped += 1,
                    Err(e) => return Err(e),
                }
                state = map_step(sys, state)?;
            }
        }
        Kind::Flow => {
            let h = dt / f64::from(cfg.substeps);
            for step in 0..TANGENT_WARMUP + n_steps {
                for _ in 0..cfg.substeps {
                    let (xn, yn) = variational_rk4(sys, state, &q, h)?;
                    state = xn;
                    q = yn;
                }
                let (qq, r) = qr_mgs(&q)?;
                q = qq;
                if step >= TANGENT_WARMUP {
                    for j in 0..n {
                        sums[j] += r[j].ln();
                    }
                    counted += 1;
                }
            }
        }
    }

    if counted == 0 {
        return Err(Error::NoConvergence { what: "no usable tangent steps" });
    }
    let denom = match sys.kind() {
        Kind::Map => counted as f64,
        Kind::Flow => counted as f64 * dt,
    };
    let mut exponents: Vec<f64> = sums[..n].iter().map(|s| s / denom).collect();
    exponents.sort_by(|a, b| b.partial_cmp(a).expect("finite exponents"));
    Ok(LyapunovSpectrum { exponents, n_steps: counted, skipped })
}

/// Kaplan-Yorke (Lyapunov) dimension of a spectrum sorted in decreasing
/// order: with S_k the partial sums, take the largest k with S_k >= 0 and
/// interpolate, D = k + S_k / |chi_{k+1}|. All partial sums negative gives
/// 0; S_n >= 0 gives n.
pub fn lyapunov_dimension(exponents: &[f64]) -> f64 {
    debug_assert!(exponents.windows(2).all(|w| w[0] >= w[1]), "exponents must be sorted");
    let n = exponents.len();
    let mut best: Option<(usize, f64)> = None;
    let mut s = 0.0;
    for (i, &e) in exponents.iter().enumerate() {
        s += e;
        if s >= 0.0 {
            best = Some((i + 1, s));
        }
    }
    match best {
        None => 0.0,
        Some((k, _)) if k == n => n as f64,
        Some((k, sk)) => k as f64 + sk / exponents[k].abs(),
    }
}

/// Hausdorff dimension of the solenoid attractor, 1 + ln 2 / ln(1/lambda)
/// for contraction rates lambda in (0, 1/2).
pub fn solenoid_hausdorff_dim(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::InvalidParams(format!(
            "solenoid dimension needs lambda in (0, 1/2), got {lambda}"
        )));
    }
    Ok(1.0 + std::f64::consts::LN_2 / (1.0 / lambda).ln())
}

/// Jacobian eigenvalues of the three-variable Lorenz convection flow at the
/// origin, in decreasing order. The positive one sets the expansion rate
/// that enters the coordinate-section tail prediction.
pub fn lorenz63_origin_eigenvalues(sigma: f64, rho: f64, beta: f64) -> [f64; 3] {
    let disc = ((sigma + 1.0).powi(2) + 4.0 * sigma * (rho - 1.0)).sqrt();
    let plus = (-(sigma + 1.0) + disc) / 2.0;
    let minus = (-(sigma + 1.0) - disc) / 2.0;
    let mut eig = [plus, -beta, minus];
    eig.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    eig
}

/// Expansion-rate ratio used by the default Lorenz coordinate-section
/// prediction: beta = chi_3 over the positive origin eigenvalue, with the
/// conventional rounded rate 11.83.
pub fn lorenz63_default_beta() -> f64 {
    (8.0 / 3.0) / 11.83
}

// ---------------------------------------------------------------------------
// Tail predictions
// ---------------------------------------------------------------------------

/// A predicted tail index for fitted block maxima, stated as the positive
/// exponent -1/xi together with the implied shape xi < 0. `rule` names the
/// geometric regime; `inputs` records the numbers it was computed from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailPrediction {
    pub neg_inv_xi: f64,
    pub xi: f64,
    pub rule: &'static str,
    pub inputs: BTreeMap<String, f64>,
}

impl TailPrediction {
    fn new(neg_inv_xi: f64, rule: &'static str, inputs: BTreeMap<String, f64>) -> Result<Self> {
        if !(neg_inv_xi.is_finite() && neg_inv_xi > 0.0) {
            return Err(Error::InvalidParams(format!(
                "tail exponent -1/xi must be positive and finite, got {neg_inv_xi} ({rule})"
            )));
        }
        Ok(TailPrediction { neg_inv_xi, xi: -1.0 / neg_inv_xi, rule, inputs })
    }
}

fn inputs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Distance-power observable on the hyperbolic torus map. The regime depends
/// on where the reference point sits relative to the invariant unit square:
/// on it (boundary included) the whole square contributes and -1/xi = 2/alpha;
/// off it with one coordinate still interior, maxima come from a stripe edge
/// and -1/xi = 3/2; off it past a corner, -1/xi = 2. The two exterior regimes
/// are set by the quadratic peak of the distance function, not by alpha.
pub fn predict_thom_dist(x_m: f64, y_m: f64, alpha: f64) -> Result<TailPrediction> {
    if !(alpha > 0.0 && alpha.is_finite() && x_m.is_finite() && y_m.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "distance prediction needs finite centre and alpha > 0, got ({x_m}, {y_m}), {alpha}"
        )));
    }
    let ins = inputs(&[("x_M", x_m), ("y_M", y_m), ("alpha", alpha)]);
    let on_square = (0.0..=1.0).contains(&x_m) && (0.0..=1.0).contains(&y_m);
    if on_square {
        TailPrediction::new(2.0 / alpha, "thom_dist_interior", ins)
    } else if (x_m > 0.0 && x_m < 1.0) || (y_m > 0.0 && y_m < 1.0) {
        TailPrediction::new(1.5, "thom_dist_outside_strip", ins)
    } else {
        TailPrediction::new(2.0, "thom_dist_outside_corner", ins)
    }
}

/// Separable power observable 1 - |x - x_M|^a - |y - y_M|^b on the torus
/// map: -1/xi = 1/a + 1/b.
pub fn predict_thom_power_sum(a: f64, b: f64) -> Result<TailPrediction> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "power-sum prediction needs a, b > 0, got ({a}, {b})"
        )));
    }
    TailPrediction::new(1.0 / a + 1.0 / b, "thom_power_sum", inputs(&[("a", a), ("b", b)]))
}

/// Distance-power observable on the solenoid: -1/xi = dim_H / alpha with
/// dim_H the attractor's Hausdorff dimension.
pub fn predict_solenoid_dist(lambda: f64, alpha: f64) -> Result<TailPrediction> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
    }
    let dim = solenoid_hausdorff_dim(lambda)?;
    TailPrediction::new(
        dim / alpha,
        "solenoid_dist_power",
        inputs(&[("lambda", lambda), ("alpha", alpha), ("dimension", dim)]),
    )
}

/// Planar section observable on the solenoid: the maximum lives on a smooth
/// level plane, losing half a degree from the unstable direction, so
/// -1/xi = dim_H - 1/2.
pub fn predict_solenoid_planar(lambda: f64) -> Result<TailPrediction> {
    let dim = solenoid_hausdorff_dim(lambda)?;
    TailPrediction::new(
        dim - 0.5,
        "solenoid_planar_section",
        inputs(&[("lambda", lambda), ("dimension", dim)]),
    )
}

/// Generic smooth observable with a quadratic maximum in the unstable
/// directions and full stable thickness: -1/xi = d_u / 2 + d_s.
pub fn predict_general(d_u: f64, d_s: f64) -> Result<TailPrediction> {
    if !(d_u >= 0.0 && d_s >= 0.0 && d_u.is_finite() && d_s.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "general prediction needs d_u, d_s >= 0, got ({d_u}, {d_s})"
        )));
    }
    TailPrediction::new(
        d_u / 2.0 + d_s,
        "unstable_flat_general",
        inputs(&[("d_u", d_u), ("d_s", d_s)]),
    )
}

/// Distance-power observable maximized on the attractor itself:
/// -1/xi = dim / alpha for any dimension estimate of the invariant set.
pub fn predict_dist_power_on_attractor(dim: f64, alpha: f64) -> Result<TailPrediction> {
    if !(dim > 0.0 && dim.is_finite() && alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "attractor-distance prediction needs dim, alpha > 0, got ({dim}, {alpha})"
        )));
    }
    TailPrediction::new(
        dim / alpha,
        "dist_power_dimension",
        inputs(&[("dimension", dim), ("alpha", alpha)]),
    )
}

/// Coordinate-plane section of the Lorenz convection flow through the
/// origin's stable/unstable cone: -1/xi = 1/beta + 1/2 + d_s where beta is
/// the contraction-to-expansion rate ratio at the origin and d_s an optional
/// extra stable thickness (0 by default).
pub fn predict_lorenz63_planar(beta: f64, d_s_tilde: f64) -> Result<TailPrediction> {
    if !(beta > 0.0 && beta.is_finite() && d_s_tilde >= 0.0 && d_s_tilde.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "section prediction needs beta > 0 and d_s >= 0, got ({beta}, {d_s_tilde})"
        )));
    }
    TailPrediction::new(
        1.0 / beta + 0.5 + d_s_tilde,
        "lorenz63_coordinate_section",
        inputs(&[("beta", beta), ("d_s_tilde", d_s_tilde)]),
    )
}
