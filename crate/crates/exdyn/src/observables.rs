//! Scalar observables evaluated along orbits.
//!
//! Families (p denotes a Cartesian state, c a configured centre):
//!
//! * `dist_power` — 1 - |p - c|^alpha, or -|p - c|^alpha in the `negative`
//!   sign form; maximised exactly at c.
//! * `power_sum` — 1 - |x - c_x|^a - |y - c_y|^b on planar states, with
//!   independent exponents per coordinate.
//! * `linear` — a x + b y + c z + d.
//! * `plane_theta_xy` — cos(2 pi theta) (x - x0) + sin(2 pi theta) (y - y0).
//! * `plane_theta_xz` — cos(2 pi theta) (x - x0) + sin(2 pi theta) (z - z0).
//! * `plane_theta_2d` — x cos(2 pi theta) + y sin(2 pi theta) on planar
//!   states.
//! * `coord_x` — first coordinate.
//!
//! Angles are given in revolutions (theta = 0.25 is a quarter turn), matching
//! how they are swept in experiments.

use serde::{Deserialize, Serialize};

use crate::dynamics::{orbit, to_cartesian, OrbitConfig, State, SystemSpec};
use crate::{Error, Result};

const TAU: f64 = std::f64::consts::TAU;

/// Sign convention for `dist_power`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignForm {
    #[default]
    OneMinus,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    DistPower {
        center: Vec<f64>,
        alpha: f64,
        #[serde(default)]
        sign_form: SignForm,
    },
    PowerSum {
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    Linear {
        #[serde(default)]
        a: f64,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        c: f64,
        #[serde(default)]
        d: f64,
    },
    PlaneThetaXy {
        theta: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        y0: f64,
    },
    PlaneThetaXz {
        theta: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        z0: f64,
    },
    PlaneTheta2d {
        theta: f64,
    },
    CoordX,
}

impl Observable {
    pub fn dist_power(center: &[f64], alpha: f64, sign_form: SignForm) -> Result<Observable> {
        let obs = Observable::DistPower { center: center.to_vec(), alpha, sign_form };
        obs.validate()?;
        Ok(obs)
    }

    pub fn power_sum(center: [f64; 2], a: f64, b: f64) -> Result<Observable> {
        let obs = Observable::PowerSum { center, a, b };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidObservable(msg));
        match self {
            Observable::DistPower { center, alpha, .. } => {
                if !(center.len() == 2 || center.len() == 3) {
                    return bad(format!("centre must have 2 or 3 coordinates, got {}", center.len()));
                }
                if !center.iter().all(|v| v.is_finite()) {
                    return bad("centre coordinates must be finite".into());
                }
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return bad(format!("exponent alpha = {alpha} must be positive"));
                }
            }
            Observable::PowerSum { center, a, b } => {
                if !center.iter().all(|v| v.is_finite()) {
                    return bad("centre coordinates must be finite".into());
                }
                if !(a.is_finite() && *a > 0.0 && b.is_finite() && *b > 0.0) {
                    return bad(format!("exponents (a, b) = ({a}, {b}) must be positive"));
                }
            }
            Observable::Linear { a, b, c, d } => {
                if ![a, b, c, d].iter().all(|v| v.is_finite()) {
                    return bad("coefficients must be finite".into());
                }
                if *a == 0.0 && *b == 0.0 && *c == 0.0 {
                    return bad("constant observable: (a, b, c) must not all vanish".into());
                }
            }
            Observable::PlaneThetaXy { theta, x0, y0 } => {
                if ![theta, x0, y0].iter().all(|v| v.is_finite()) {
                    return bad("theta and offsets must be finite".into());
                }
            }
            Observable::PlaneThetaXz { theta, x0, z0 } => {
                if ![theta, x0, z0].iter().all(|v| v.is_finite()) {
                    return bad("theta and offsets must be finite".into());
                }
            }
            Observable::PlaneTheta2d { theta } => {
                if !theta.is_finite() {
                    return bad("theta must be finite".into());
                }
            }
            Observable::CoordX => {}
        }
        Ok(())
    }

    /// Can this observable read a point of the given dimension?
    pub fn accepts_dim(&self, dim: usize) -> bool {
        match self {
            Observable::DistPower { center, .. } => center.len() == dim,
            Observable::PowerSum { .. } | Observable::PlaneTheta2d { .. } => dim == 2,
            Observable::Linear { c, .. } => dim == 3 || (dim == 2 && *c == 0.0),
            Observable::PlaneThetaXy { .. } | Observable::PlaneThetaXz { .. } => dim == 3,
            Observable::CoordX => dim == 2 || dim == 3,
        }
    }

    /// Evaluate at a Cartesian point.
    pub fn eval(&self, p: State) -> Result<f64> {
        self.validate()?;
        if !self.accepts_dim(p.dim()) {
            return Err(Error::DimensionMismatch {
                expected: if self.accepts_dim(2) { 2 } else { 3 },
                got: p.dim(),
            });
        }
        Ok(self.eval_unchecked(p))
    }

    #[inline]
    fn eval_unchecked(&self, p: State) -> f64 {
        match self {
            Observable::DistPower { center, alpha, sign_form } => {
                let mut d2 = 0.0;
                for (x, c) in p.as_slice().iter().zip(center) {
                    let t = x - c;
                    d2 += t * t;
                }
                let v = pow_half(d2, *alpha);
                match sign_form {
                    SignForm::OneMinus => 1.0 - v,
                    SignForm::Negative => -v,
                }
            }
            Observable::PowerSum { center, a, b } => {
                1.0 - pow_abs(p.x() - center[0], *a) - pow_abs(p.y() - center[1], *b)
            }
            Observable::Linear { a, b, c, d } => a * p.x() + b * p.y() + c * p.z() + d,
            Observable::PlaneThetaXy { theta, x0, y0 } => {
                let (sin, cos) = (TAU * theta).sin_cos();
                cos * (p.x() - x0) + sin * (p.y() - y0)
            }
            Observable::PlaneThetaXz { theta, x0, z0 } => {
                let (sin, cos) = (TAU * theta).sin_cos();
                cos * (p.x() - x0) + sin * (p.z() - z0)
            }
            Observable::PlaneTheta2d { theta } => {
                let (sin, cos) = (TAU * theta).sin_cos();
                p.x() * cos + p.y() * sin
            }
            Observable::CoordX => p.x(),
        }
    }

    /// Validate once against a state dimension and return a closure with all
    /// trigonometry and exponent dispatch hoisted out of the per-sample path.
    /// Orbit loops run hundreds of millions of evaluations, so the per-call
    /// cost matters.
    pub fn compiled_for(&self, dim: usize) -> Result<CompiledObservable> {
        self.validate()?;
        if !self.accepts_dim(dim) {
            return Err(Error::DimensionMismatch {
                expected: if self.accepts_dim(2) { 2 } else { 3 },
                got: dim,
            });
        }
        let f: Box<dyn Fn(State) -> f64 + Send + Sync> = match self.clone() {
            Observable::DistPower { center, alpha, sign_form } => {
                let cx = center[0];
                let cy = center[1];
                let cz = center.get(2).copied().unwrap_or(0.0);
                let three = center.len() == 3;
                match sign_form {
                    SignForm::OneMinus => Box::new(move |p| {
                        let mut d2 = (p.x() - cx) * (p.x() - cx) + (p.y() - cy) * (p.y() - cy);
                        if three {
                            d2 += (p.z() - cz) * (p.z() - cz);
                        }
                        1.0 - pow_half(d2, alpha)
                    }),
                    SignForm::Negative => Box::new(move |p| {
                        let mut d2 = (p.x() - cx) * (p.x() - cx) + (p.y() - cy) * (p.y() - cy);
                        if three {
                            d2 += (p.z() - cz) * (p.z() - cz);
                        }
                        -pow_half(d2, alpha)
                    }),
                }
            }
            Observable::PowerSum { center, a, b } => Box::new(move |p| {
                1.0 - pow_abs(p.x() - center[0], a) - pow_abs(p.y() - center[1], b)
            }),
            Observable::Linear { a, b, c, d } => {
                Box::new(move |p| a * p.x() + b * p.y() + c * p.z() + d)
            }
            Observable::PlaneThetaXy { theta, x0, y0 } => {
                let (sin, cos) = (TAU * theta).sin_cos();
                Box::new(move |p| cos * (p.x() - x0) + sin * (p.y() - y0))
            }
            Observable::PlaneThetaXz { theta, x0, z0 } => {
                let (sin, cos) = (TAU * theta).sin_cos();
                Box::new(move |p| cos * (p.x() - x0) + sin * (p.z() - z0))
            }
            Observable::PlaneTheta2d { theta } => {
                let (sin, cos) = (TAU * theta).sin_cos();
                Box::new(move |p| p.x() * cos + p.y() * sin)
            }
            Observable::CoordX => Box::new(|p| p.x()),
        };
        Ok(CompiledObservable { f })
    }

    /// Short human-readable description, used in series metadata.
    pub fn describe(&self) -> String {
        match self {
            Observable::DistPower { center, alpha, sign_form } => {
                let form = match sign_form {
                    SignForm::OneMinus => "1-",
                    SignForm::Negative => "-",
                };
                format!("dist_power({form}|p-c|^{alpha}, c={center:?})")
            }
            Observable::PowerSum { center, a, b } => {
                format!("power_sum(a={a}, b={b}, c={center:?})")
            }
            Observable::Linear { a, b, c, d } => format!("linear({a}x+{b}y+{c}z+{d})"),
            Observable::PlaneThetaXy { theta, x0, y0 } => {
                format!("plane_theta_xy(theta={theta}, x0={x0}, y0={y0})")
            }
            Observable::PlaneThetaXz { theta, x0, z0 } => {
                format!("plane_theta_xz(theta={theta}, x0={x0}, z0={z0})")
            }
            Observable::PlaneTheta2d { theta } => format!("plane_theta_2d(theta={theta})"),
            Observable::CoordX => "coord_x".into(),
        }
    }
}

/// Pre-validated, constant-folded observable evaluator.
pub struct CompiledObservable {
    f: Box<dyn Fn(State) -> f64 + Send + Sync>,
}

impl CompiledObservable {
    #[inline]
    pub fn eval(&self, p: State) -> f64 {
        (self.f)(p)
    }
}

/// |t|^e with fast paths for the exponents that dominate real workloads.
#[inline]
fn pow_abs(t: f64, e: f64) -> f64 {
    let a = t.abs();
    if e == 1.0 {
        a
    } else if e == 2.0 {
        a * a
    } else {
        a.powf(e)
    }
}

/// (d2)^(e/2) = dist^e given the squared distance, avoiding the sqrt when the
/// exponent folds it away.
#[inline]
fn pow_half(d2: f64, e: f64) -> f64 {
    if e == 2.0 {
        d2
    } else if e == 1.0 {
        d2.sqrt()
    } else {
        d2.powf(0.5 * e)
    }
}

/// Observable samples along one orbit, with provenance.
#[derive(Clone, Debug)]
pub struct ScalarSeries {
    pub values: Vec<f64>,
    pub system: String,
    pub observable: String,
    pub seed: u64,
}

/// Run an orbit and evaluate the observable at every state (states are
/// embedded into Cartesian coordinates first). Every value is checked finite;
/// the first offender's index is reported otherwise.
pub fn series(sys: &SystemSpec, obs: &Observable, cfg: &OrbitConfig) -> Result<ScalarSeries> {
    let compiled = obs.compiled_for(sys.state_dim())?;
    let mut values = Vec::with_capacity(cfg.n_samples as usize);
    for (i, item) in orbit(sys, cfg)?.enumerate() {
        let state = item?;
        let v = compiled.eval(to_cartesian(sys, state));
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { index: i as u64 });
        }
        values.push(v);
    }
    Ok(ScalarSeries {
        values,
        system: sys.to_string(),
        observable: obs.describe(),
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Initial, SystemId};
    use proptest::prelude::*;

    #[test]
    fn dist_power_hand_values() {
        let obs = Observable::dist_power(&[3.0, 4.0], 1.0, SignForm::OneMinus).unwrap();
        let v = obs.eval(State::new2(0.0, 0.0)).unwrap();
        assert!((v - (1.0 - 5.0)).abs() < 1e-12);

        let neg = Observable::dist_power(&[3.0, 4.0], 2.0, SignForm::Negative).unwrap();
        let v = neg.eval(State::new2(0.0, 0.0)).unwrap();
        assert!((v - (-25.0)).abs() < 1e-12);

        // Maximised exactly at the centre.
        assert!((obs.eval(State::new2(3.0, 4.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn power_sum_hand_values() {
        let obs = Observable::power_sum([0.5, 0.5], 2.0, 1.0).unwrap();
        let v = obs.eval(State::new2(0.6, 0.5)).unwrap();
        assert!((v - 0.99).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn plane_theta_xy_hand_value() {
        let obs = Observable::PlaneThetaXy { theta: 0.5, x0: 3.0, y0: 3.0 };
        let v = obs.eval(State::new3(1.0, 2.0, 7.0)).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn coord_x_and_linear() {
        assert_eq!(Observable::CoordX.eval(State::new3(4.0, 5.0, 6.0)).unwrap(), 4.0);
        let lin = Observable::Linear { a: 1.0, b: 2.0, c: 3.0, d: 4.0 };
        let v = lin.eval(State::new3(1.0, 1.0, 1.0)).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_degenerate_families() {
        assert!(Observable::dist_power(&[0.5, 0.5], 0.0, SignForm::OneMinus).is_err());
        assert!(Observable::dist_power(&[0.5, 0.5], -1.0, SignForm::OneMinus).is_err());
        assert!(Observable::power_sum([0.0, 0.0], 2.0, 0.0).is_err());
        let constant = Observable::Linear { a: 0.0, b: 0.0, c: 0.0, d: 1.0 };
        assert!(constant.validate().is_err());
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let obs3 = Observable::dist_power(&[1.0, 2.0, 3.0], 1.0, SignForm::OneMinus).unwrap();
        assert!(obs3.eval(State::new2(0.0, 0.0)).is_err());
        let planar = Observable::PlaneTheta2d { theta: 0.1 };
        assert!(planar.eval(State::new3(0.0, 0.0, 0.0)).is_err());
        let xy = Observable::PlaneThetaXy { theta: 0.1, x0: 0.0, y0: 0.0 };
        assert!(xy.eval(State::new2(0.0, 0.0)).is_err());
        // A linear form with c = 0 reads planar points; with c != 0 it cannot.
        let lin2 = Observable::Linear { a: 1.0, b: 1.0, c: 0.0, d: 0.0 };
        assert!(lin2.eval(State::new2(1.0, 1.0)).is_ok());
        let lin3 = Observable::Linear { a: 1.0, b: 1.0, c: 1.0, d: 0.0 };
        assert!(lin3.eval(State::new2(1.0, 1.0)).is_err());
    }

    #[test]
    fn series_on_thom_orbit_is_finite_and_bounded() {
        let sys = SystemSpec::thom();
        let obs = Observable::dist_power(&[0.51, 0.51], 2.0, SignForm::OneMinus).unwrap();
        let cfg = OrbitConfig { transient: 0, n_samples: 4, seed: 7, ..OrbitConfig::default() };
        let s = series(&sys, &obs, &cfg).unwrap();
        assert_eq!(s.values.len(), 4);
        for v in &s.values {
            assert!(v.is_finite() && *v <= 1.0);
        }
    }

    #[test]
    fn solenoid_planar_series_respects_containment_bound() {
        let sys = SystemSpec::with_defaults(SystemId::Solenoid);
        let obs = Observable::PlaneThetaXy { theta: 0.0, x0: 0.0, y0: 0.0 };
        let cfg = OrbitConfig { transient: 1000, n_samples: 5000, seed: 3, ..OrbitConfig::default() };
        let s = series(&sys, &obs, &cfg).unwrap();
        for v in &s.values {
            assert!(v.abs() <= 1.9 + 1e-9, "|x| exceeded 1 + R: {v}");
        }
    }

    #[test]
    fn compiled_matches_eval() {
        let sys = SystemSpec::with_defaults(SystemId::Solenoid);
        let obs = Observable::dist_power(&[0.3, -0.9, 0.05], 0.3, SignForm::OneMinus).unwrap();
        let compiled = obs.compiled_for(3).unwrap();
        let cfg = OrbitConfig { transient: 100, n_samples: 500, seed: 11, ..OrbitConfig::default() };
        for item in orbit(&sys, &cfg).unwrap() {
            let p = to_cartesian(&sys, item.unwrap());
            assert_eq!(compiled.eval(p), obs.eval(p).unwrap());
        }
    }

    #[test]
    fn observable_serde_roundtrip() {
        let cases = vec![
            Observable::dist_power(&[0.51, 0.509], 2.0, SignForm::Negative).unwrap(),
            Observable::power_sum([0.510001, 0.5090001], 2.0, 3.5).unwrap(),
            Observable::Linear { a: 1.0, b: -2.0, c: 0.5, d: 0.0 },
            Observable::PlaneThetaXy { theta: 0.3, x0: 3.0, y0: 3.0 },
            Observable::PlaneTheta2d { theta: 0.5 },
            Observable::CoordX,
        ];
        for obs in cases {
            let json = serde_json::to_string(&obs).unwrap();
            let back: Observable = serde_json::from_str(&json).unwrap();
            assert_eq!(obs, back);
        }
        let parsed: Observable = serde_json::from_str(
            r#"{"family":"dist_power","center":[0.5,0.5],"alpha":1.0}"#,
        )
        .unwrap();
        assert_eq!(
            parsed,
            Observable::DistPower { center: vec![0.5, 0.5], alpha: 1.0, sign_form: SignForm::OneMinus }
        );
    }

    proptest! {
        #[test]
        fn plane_theta_half_turn_negates(theta in -2.0f64..2.0, x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let a = Observable::PlaneThetaXy { theta, x0: 0.0, y0: 0.0 };
            let b = Observable::PlaneThetaXy { theta: theta + 0.5, x0: 0.0, y0: 0.0 };
            let p = State::new3(x, y, 0.0);
            let va = a.eval(p).unwrap();
            let vb = b.eval(p).unwrap();
            prop_assert!((va + vb).abs() <= 1e-9 * (1.0 + va.abs()));
        }

        #[test]
        fn power_sum_with_equal_squares_matches_dist_power(
            cx in -1.0f64..2.0, cy in -1.0f64..2.0, x in -1.0f64..2.0, y in -1.0f64..2.0
        ) {
            let ps = Observable::power_sum([cx, cy], 2.0, 2.0).unwrap();
            let dp = Observable::dist_power(&[cx, cy], 2.0, SignForm::OneMinus).unwrap();
            let p = State::new2(x, y);
            let a = ps.eval(p).unwrap();
            let b = dp.eval(p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn linear_is_affine(
            a in -3.0f64..3.0, b in -3.0f64..3.0, d in -3.0f64..3.0,
            x1 in -2.0f64..2.0, y1 in -2.0f64..2.0, x2 in -2.0f64..2.0, y2 in -2.0f64..2.0,
            t in 0.0f64..1.0
        ) {
            prop_assume!(a != 0.0 || b != 0.0);
            let lin = Observable::Linear { a, b, c: 0.0, d };
            let p = State::new2(x1 + t * (x2 - x1), y1 + t * (y2 - y1));
            let v = lin.eval(p).unwrap();
            let v1 = lin.eval(State::new2(x1, y1)).unwrap();
            let v2 = lin.eval(State::new2(x2, y2)).unwrap();
            let interp = v1 + t * (v2 - v1);
            prop_assert!((v - interp).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn series_is_deterministic() {
        let sys = SystemSpec::with_defaults(SystemId::Henon);
        let obs = Observable::PlaneTheta2d { theta: 0.0 };
        let cfg = OrbitConfig {
            initial: Initial::Seeded,
            transient: 500,
            n_samples: 200,
            seed: 21,
            ..OrbitConfig::default()
        };
        let a = series(&sys, &obs, &cfg).unwrap();
        let b = series(&sys, &obs, &cfg).unwrap();
        assert_eq!(a.values, b.values);
    }
}
