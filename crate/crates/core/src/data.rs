//! Compactly supported initial data, the free solution by d'Alembert's
//! formula, and the Liouville change of unknown.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::adaptive_simpson;

/// Shape of the base bump `f`, supported in `|x| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    /// `(1 - x^2)^3`, twice continuously differentiable.
    PolyBump,
    /// `cos^4(pi x / 2)`, three times continuously differentiable.
    CosineBump,
}

/// How the initial speed is chosen relative to `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    /// `g = -f`, so `f + g` vanishes identically and `f >= 0`.
    Thm22,
    /// `g = -f + h` with `h` an odd bump, so only the total moment vanishes.
    ZeroMomentGeneral,
    /// `g = 0`; the total moment is `int f > 0`.
    Free,
}

impl fmt::Display for BumpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BumpKind::PolyBump => "poly_bump",
            BumpKind::CosineBump => "cosine_bump",
        })
    }
}

impl FromStr for BumpKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poly_bump" => Ok(BumpKind::PolyBump),
            "cosine_bump" => Ok(BumpKind::CosineBump),
            other => Err(Error::Config(format!("unknown bump kind `{other}`"))),
        }
    }
}

impl fmt::Display for DataMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataMode::Thm22 => "thm22",
            DataMode::ZeroMomentGeneral => "zero_moment_general",
            DataMode::Free => "free",
        })
    }
}

impl FromStr for DataMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thm22" => Ok(DataMode::Thm22),
            "zero_moment_general" => Ok(DataMode::ZeroMomentGeneral),
            "free" => Ok(DataMode::Free),
            other => Err(Error::Config(format!("unknown data mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFlags {
    /// `int (f + g) dx = 0`
    pub zero_moment: bool,
    /// `f >= 0`, `f` not identically zero, `f + g = 0`
    pub thm22: bool,
}

/// An initial pair `(f, g)` supported in `|x| <= 1 < k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataProfile {
    pub kind: BumpKind,
    pub mode: DataMode,
    pub k: f64,
    pub amplitude: f64,
}

/// Tolerance for the quadrature check of a vanishing total moment.
const MOMENT_TOL: f64 = 1e-12;

impl DataProfile {
    pub fn flags(&self) -> DataFlags {
        DataFlags {
            zero_moment: self.mode != DataMode::Free,
            thm22: self.mode == DataMode::Thm22,
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        self.amplitude * bump(self.kind, x)
    }

    pub fn g(&self, x: f64) -> f64 {
        match self.mode {
            DataMode::Thm22 => -self.f(x),
            DataMode::ZeroMomentGeneral => -self.f(x) + self.amplitude * odd_bump(x),
            DataMode::Free => 0.0,
        }
    }

    /// `f + g`, the initial speed of the free solution.
    pub fn speed(&self, x: f64) -> f64 {
        match self.mode {
            DataMode::Thm22 => 0.0,
            DataMode::ZeroMomentGeneral => self.amplitude * odd_bump(x),
            DataMode::Free => self.f(x),
        }
    }

    /// Antiderivative of `f + g` vanishing at `-infinity`.
    pub fn speed_primitive(&self, x: f64) -> f64 {
        match self.mode {
            DataMode::Thm22 => 0.0,
            DataMode::ZeroMomentGeneral => self.amplitude * odd_bump_primitive(x),
            DataMode::Free => self.amplitude * bump_primitive(self.kind, x),
        }
    }

    /// Antiderivative of `f` vanishing at `-infinity`.
    pub fn f_primitive(&self, x: f64) -> f64 {
        self.amplitude * bump_primitive(self.kind, x)
    }

    /// Antiderivative of `g` vanishing at `-infinity`.
    pub fn g_primitive(&self, x: f64) -> f64 {
        match self.mode {
            DataMode::Thm22 => -self.f_primitive(x),
            DataMode::ZeroMomentGeneral => {
                -self.f_primitive(x) + self.amplitude * odd_bump_primitive(x)
            }
            DataMode::Free => 0.0,
        }
    }

    /// `||f||_{L^1}`, exact for both bump kinds.
    pub fn f_l1(&self) -> f64 {
        self.amplitude.abs() * bump_mass(self.kind)
    }

    pub fn f_sup(&self) -> f64 {
        self.amplitude.abs()
    }

    /// `||f + g||_{L^1}` by quadrature (the odd bump changes sign at 0).
    pub fn speed_l1(&self) -> f64 {
        match self.mode {
            DataMode::Thm22 => 0.0,
            _ => {
                let s = |x: f64| self.speed(x).abs();
                adaptive_simpson(&s, -1.0, 0.0, 1e-14) + adaptive_simpson(&s, 0.0, 1.0, 1e-14)
            }
        }
    }

    /// `int |f|^p dx` by adaptive quadrature.
    pub fn f_power_moment(&self, p: f64) -> f64 {
        let s = |x: f64| self.f(x).abs().powf(p);
        adaptive_simpson(&s, -1.0, 1.0, 1e-14)
    }

    /// `int (f + g) dx` by adaptive quadrature.
    pub fn total_moment(&self) -> f64 {
        let s = |x: f64| self.speed(x);
        adaptive_simpson(&s, -1.0, 0.0, 1e-14) + adaptive_simpson(&s, 0.0, 1.0, 1e-14)
    }

    pub fn to_config_string(&self) -> String {
        format!(
            "kind = \"{}\"\nk = {:?}\nmode = \"{}\"\namplitude = {:?}\n",
            self.kind, self.k, self.mode, self.amplitude
        )
    }
}

/// Builds a profile and checks its support and moment invariants.
pub fn make_bump_pair(kind: BumpKind, k: f64, mode: DataMode) -> Result<DataProfile> {
    make_bump_pair_scaled(kind, k, mode, 1.0)
}

pub fn make_bump_pair_scaled(
    kind: BumpKind,
    k: f64,
    mode: DataMode,
    amplitude: f64,
) -> Result<DataProfile> {
    if !(k > 1.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "support radius k must be > 1, got {k}"
        )));
    }
    if !amplitude.is_finite() {
        return Err(Error::InvalidParameter("amplitude must be finite".into()));
    }
    if mode == DataMode::Thm22 && !(amplitude > 0.0) {
        return Err(Error::InvalidParameter(
            "sign-condition data need f >= 0 and f not identically zero".into(),
        ));
    }
    let profile = DataProfile {
        kind,
        mode,
        k,
        amplitude,
    };
    if profile.flags().zero_moment {
        let m = profile.total_moment();
        if m.abs() > MOMENT_TOL {
            return Err(Error::Numerical(format!(
                "total moment {m:e} does not vanish"
            )));
        }
    }
    Ok(profile)
}

fn bump(kind: BumpKind, x: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    match kind {
        BumpKind::PolyBump => {
            let s = 1.0 - x * x;
            s * s * s
        }
        BumpKind::CosineBump => {
            let c = (std::f64::consts::FRAC_PI_2 * x).cos();
            let c2 = c * c;
            c2 * c2
        }
    }
}

fn bump_mass(kind: BumpKind) -> f64 {
    match kind {
        BumpKind::PolyBump => 32.0 / 35.0,
        BumpKind::CosineBump => 0.75,
    }
}

/// Antiderivative of the bump, 0 for `x <= -1` and the total mass for `x >= 1`.
fn bump_primitive(kind: BumpKind, x: f64) -> f64 {
    let xc = x.clamp(-1.0, 1.0);
    match kind {
        BumpKind::PolyBump => {
            let prim = |y: f64| {
                let y2 = y * y;
                y * (1.0 - y2 + 0.6 * y2 * y2 - y2 * y2 * y2 / 7.0)
            };
            prim(xc) - prim(-1.0)
        }
        BumpKind::CosineBump => {
            use std::f64::consts::PI;
            let prim = |y: f64| {
                0.375 * y + (PI * y).sin() / (2.0 * PI) + (2.0 * PI * y).sin() / (16.0 * PI)
            };
            prim(xc) - prim(-1.0)
        }
    }
}

/// Odd `C^1` bump `x (1 - x^2)^2` on `|x| <= 1`.
fn odd_bump(x: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    let s = 1.0 - x * x;
    x * s * s
}

fn odd_bump_primitive(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - x * x;
    -s * s * s / 6.0
}

/// Free solution `u0(x, t)` with data `(f, f + g)`, evaluated in closed form.
pub fn dalembert_u0(profile: &DataProfile, x: f64, t: f64) -> f64 {
    let a = x + t;
    let b = x - t;
    0.5 * (profile.f(a) + profile.f(b))
        + 0.5 * (profile.speed_primitive(a) - profile.speed_primitive(b))
}

/// Free solution of the transformed problem with data `(f, mu f / 2 + g)`.
/// At `mu = 2` this is [`dalembert_u0`].
pub fn free_solution(profile: &DataProfile, x: f64, t: f64, mu: f64) -> f64 {
    if mu == 2.0 {
        return dalembert_u0(profile, x, t);
    }
    let a = x + t;
    let b = x - t;
    let prim = |y: f64| 0.5 * mu * profile.f_primitive(y) + profile.g_primitive(y);
    0.5 * (profile.f(a) + profile.f(b)) + 0.5 * (prim(a) - prim(b))
}

/// A profile together with its free solution.
#[derive(Debug, Clone, Copy)]
pub struct FreeSolution<'a> {
    pub profile: &'a DataProfile,
}

impl<'a> FreeSolution<'a> {
    pub fn new(profile: &'a DataProfile) -> Self {
        Self { profile }
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        dalembert_u0(self.profile, x, t)
    }
}

/// Outcome of scanning sample points for values outside `t-k <= |x| <= t+k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub points_checked: usize,
    pub points_outside: usize,
    pub ok: bool,
    /// Largest `|u0|` found outside the annulus, with its location.
    pub worst: Option<(f64, f64, f64)>,
}

const SUPPORT_TOL: f64 = 1e-12;

/// Verifies that `u0` vanishes outside the annulus `t-k <= |x| <= t+k`.
pub fn check_support_u0<I>(profile: &DataProfile, points: I) -> Result<SupportReport>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    if !profile.flags().zero_moment {
        return Err(Error::Precondition(
            "annulus support requires data with vanishing total moment".into(),
        ));
    }
    let k = profile.k;
    let mut report = SupportReport {
        points_checked: 0,
        points_outside: 0,
        ok: true,
        worst: None,
    };
    for (x, t) in points {
        report.points_checked += 1;
        let r = x.abs();
        if r >= t - k && r <= t + k {
            continue;
        }
        report.points_outside += 1;
        let v = dalembert_u0(profile, x, t);
        if v.abs() > SUPPORT_TOL {
            report.ok = false;
            let worse = report.worst.is_none_or(|(_, _, w)| v.abs() > w.abs());
            if worse {
                report.worst = Some((x, t, v));
            }
        }
    }
    Ok(report)
}

/// `u = (1+t)^{mu/2} v`.
pub fn liouville_forward(v: f64, t: f64, mu: f64) -> f64 {
    (1.0 + t).powf(0.5 * mu) * v
}

/// `v = (1+t)^{-mu/2} u`.
pub fn liouville_backward(u: f64, t: f64, mu: f64) -> f64 {
    u / (1.0 + t).powf(0.5 * mu)
}

/// Initial speed of the transformed unknown, `mu f / 2 + g` (per unit amplitude).
pub fn transformed_speed(profile: &DataProfile, x: f64, mu: f64) -> f64 {
    0.5 * mu * profile.f(x) + profile.g(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn thm22() -> DataProfile {
        make_bump_pair(BumpKind::PolyBump, 2.0, DataMode::Thm22).unwrap()
    }

    #[test]
    fn poly_bump_thm22_values() {
        let p = thm22();
        assert_eq!(p.f(0.0), 1.0);
        assert_eq!(p.g(0.0), -1.0);
        assert_eq!(p.total_moment(), 0.0);
        assert!(p.flags().thm22 && p.flags().zero_moment);
    }

    #[test]
    fn poly_bump_flat_at_edges() {
        let p = thm22();
        let h = 1e-4;
        for x0 in [-1.0, 1.0] {
            assert_eq!(p.f(x0), 0.0);
            let d1 = (p.f(x0 + h) - p.f(x0 - h)) / (2.0 * h);
            let d2 = (p.f(x0 + h) - 2.0 * p.f(x0) + p.f(x0 - h)) / (h * h);
            assert!(d1.abs() < 1e-7 && d2.abs() < 1e-3, "x0={x0}: {d1} {d2}");
        }
    }

    #[test]
    fn bump_masses_match_quadrature() {
        // (1-x^2)^3 integrates to 32/35 exactly; cos^4(pi x/2) to 3/4.
        for kind in [BumpKind::PolyBump, BumpKind::CosineBump] {
            let q = adaptive_simpson(&|x| bump(kind, x), -1.0, 1.0, 1e-14);
            assert!((q - bump_mass(kind)).abs() < 1e-12);
            assert!((bump_primitive(kind, 1.0) - bump_mass(kind)).abs() < 1e-14);
            assert!((bump_primitive(kind, 5.0) - bump_mass(kind)).abs() < 1e-14);
            assert_eq!(bump_primitive(kind, -3.0), 0.0);
        }
        assert!((bump_mass(BumpKind::PolyBump) - 0.9143).abs() < 1e-4);
    }

    #[test]
    fn zero_moment_general_has_vanishing_moment() {
        for kind in [BumpKind::PolyBump, BumpKind::CosineBump] {
            let p = make_bump_pair(kind, 2.0, DataMode::ZeroMomentGeneral).unwrap();
            assert!(p.total_moment().abs() <= 1e-12);
            assert!(p.speed(0.5) != 0.0);
        }
    }

    #[test]
    fn k_at_most_one_rejected() {
        assert!(make_bump_pair(BumpKind::PolyBump, 1.0, DataMode::Thm22).is_err());
        assert!(make_bump_pair(BumpKind::PolyBump, 0.5, DataMode::Free).is_err());
    }

    #[test]
    fn u0_thm22_examples() {
        let p = thm22();
        assert_eq!(dalembert_u0(&p, 0.0, 0.0), 1.0);
        assert_eq!(dalembert_u0(&p, 0.0, 3.0), 0.0);
        for (x, t) in [(0.3, 0.2), (2.5, 2.0), (-1.7, 1.1)] {
            let expect = 0.5 * (p.f(x + t) + p.f(x - t));
            assert_eq!(dalembert_u0(&p, x, t), expect);
        }
    }

    #[test]
    fn u0_initial_conditions() {
        for mode in [DataMode::Thm22, DataMode::ZeroMomentGeneral, DataMode::Free] {
            let p = make_bump_pair(BumpKind::PolyBump, 2.0, mode).unwrap();
            let dt = 1e-5;
            for x in [-0.8, -0.2, 0.0, 0.4, 0.9] {
                assert!((dalembert_u0(&p, x, 0.0) - p.f(x)).abs() < 1e-15);
                let ut = (dalembert_u0(&p, x, dt) - dalembert_u0(&p, x, 0.0)) / dt;
                assert!((ut - p.speed(x)).abs() < 1e-4, "{mode}: x={x} ut={ut}");
            }
        }
    }

    #[test]
    fn u0_satisfies_free_wave_equation() {
        let p = make_bump_pair(BumpKind::PolyBump, 2.0, DataMode::ZeroMomentGeneral).unwrap();
        // Away from the characteristics through x = +-1 the data are polynomial.
        let check = |h: f64| {
            let (x, t) = (0.35, 0.4);
            let utt = (dalembert_u0(&p, x, t + h) - 2.0 * dalembert_u0(&p, x, t)
                + dalembert_u0(&p, x, t - h))
                / (h * h);
            let uxx = (dalembert_u0(&p, x + h, t) - 2.0 * dalembert_u0(&p, x, t)
                + dalembert_u0(&p, x - h, t))
                / (h * h);
            (utt - uxx).abs()
        };
        let (e1, e2) = (check(1e-2), check(5e-3));
        assert!(e1 < 1e-3, "residual {e1}");
        assert!(e2 < 0.3 * e1 || e2 < 1e-9, "residuals {e1} {e2}");
    }

    #[test]
    fn free_solution_general_mu() {
        let p = make_bump_pair(BumpKind::PolyBump, 2.0, DataMode::ZeroMomentGeneral).unwrap();
        let dt = 1e-6;
        for x in [-0.6, 0.1, 0.5] {
            for mu in [0.0, 1.0, 2.0] {
                assert!((free_solution(&p, x, 0.0, mu) - p.f(x)).abs() < 1e-15);
                let ut =
                    (free_solution(&p, x, dt, mu) - free_solution(&p, x, -dt, mu)) / (2.0 * dt);
                assert!(
                    (ut - transformed_speed(&p, x, mu)).abs() < 1e-6,
                    "mu={mu} x={x}"
                );
            }
            assert_eq!(free_solution(&p, x, 0.7, 2.0), dalembert_u0(&p, x, 0.7));
        }
    }

    #[test]
    fn support_check_examples() {
        let p = thm22();
        assert_eq!(dalembert_u0(&p, 0.0, 5.0), 0.0);
        assert_eq!(dalembert_u0(&p, 5.0 + 2.0 + 0.1, 5.0), 0.0);
        let rep = check_support_u0(&p, [(0.0, 5.0), (7.1, 5.0), (3.0, 4.0)]).unwrap();
        assert!(rep.ok);
        assert_eq!(rep.points_outside, 2);

        let free = make_bump_pair(BumpKind::PolyBump, 2.0, DataMode::Free).unwrap();
        assert!(matches!(
            check_support_u0(&free, [(0.0, 5.0)]),
            Err(Error::Precondition(_))
        ));
        // Without a vanishing moment the cone interior is filled.
        assert!(dalembert_u0(&free, 0.0, 5.0) > 0.4);
    }

    #[test]
    fn liouville_examples() {
        assert_eq!(liouville_forward(1.0, 0.0, 2.0), 1.0);
        assert_eq!(liouville_forward(1.0, 3.0, 2.0), 4.0);
        let p = thm22();
        for x in [-0.5, 0.0, 0.7] {
            assert_eq!(transformed_speed(&p, x, 2.0), p.f(x) + p.g(x));
            assert_eq!(transformed_speed(&p, x, 2.0), 0.0);
        }
    }

    #[test]
    fn config_string_lists_profile_fields() {
        let s = thm22().to_config_string();
        assert!(s.contains("kind = \"poly_bump\""));
        assert!(s.contains("mode = \"thm22\""));
        assert!(s.contains("k = 2.0"));
    }

    proptest! {
        #[test]
        fn liouville_round_trip(v in -1e6f64..1e6, t in 0.0f64..1e3, mu in 0.0f64..5.0) {
            let back = liouville_backward(liouville_forward(v, t, mu), t, mu);
            prop_assert!((back - v).abs() <= 4.0 * f64::EPSILON * v.abs().max(1e-300));
        }

        #[test]
        fn annulus_support_for_zero_moment(
            kind in prop_oneof![Just(BumpKind::PolyBump), Just(BumpKind::CosineBump)],
            general in any::<bool>(),
            k in 1.01f64..5.0,
            t in 0.0f64..1.0,
            frac in -1.5f64..1.5,
        ) {
            let mode = if general { DataMode::ZeroMomentGeneral } else { DataMode::Thm22 };
            let p = make_bump_pair(kind, k, mode).unwrap();
            let t = t * 100.0 * k;
            let x = frac * (t + k + 1.0);
            let r = x.abs();
            if r < t - k || r > t + k {
                prop_assert!(dalembert_u0(&p, x, t).abs() <= 1e-12);
            }
        }
    }
}
