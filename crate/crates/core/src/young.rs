//! Young functions `G` with derivative `g`, the complementary function `G*`,
//! growth exponents and sampled checks of the standard Orlicz inequalities.

use serde::Serialize;

use crate::error::{Error, Result};

/// `count` log-spaced points covering `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[inline]
fn pw(t: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 16.0 {
        t.powi(e as i32)
    } else {
        t.powf(e)
    }
}

/// Built-in families, plus a sum-of-powers family for user input.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum YoungFamily {
    /// `|t|^p`
    Power { p: f64 },
    /// `(|t|^p + |t|^q) / 2`
    PowerSum { p: f64, q: f64 },
    /// `|t|^p log(1 + |t|) / log 2`
    PowerLog { p: f64 },
    /// `sum c_i |t|^{e_i}`, rescaled so that `G(1) = 1`.
    Custom {
        coeffs: Vec<f64>,
        exponents: Vec<f64>,
    },
}

/// A Young function together with its cached constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YoungFunction {
    family: YoungFamily,
    p_minus: f64,
    p_plus: f64,
    delta2: f64,
    analytic: bool,
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power family needs p > 1, got {p}"
            )));
        }
        Ok(Self::finish(YoungFamily::Power { p }, Some((p, p))))
    }

    pub fn power_sum(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite() && p > 1.0 && q > p) {
            return Err(Error::InvalidParameter(format!(
                "power-sum family needs 1 < p < q, got p={p}, q={q}"
            )));
        }
        Ok(Self::finish(YoungFamily::PowerSum { p, q }, Some((p, q))))
    }

    /// `t g / G = p + t / ((1+t) log(1+t))` sweeps `(p, p+1)`.
    pub fn power_log(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power-log family needs p > 1, got {p}"
            )));
        }
        Ok(Self::finish(
            YoungFamily::PowerLog { p },
            Some((p, p + 1.0)),
        ))
    }

    /// Sum of powers. Properties are not enforced here; run
    /// [`YoungFunction::verify_properties`] to see which hold.
    pub fn custom(coeffs: Vec<f64>, exponents: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() != exponents.len() {
            return Err(Error::InvalidParameter(
                "custom family needs equally many coefficients and exponents".into(),
            ));
        }
        if exponents.iter().any(|e| !(e.is_finite() && *e > 0.0))
            || coeffs.iter().any(|c| !c.is_finite())
        {
            return Err(Error::InvalidParameter(
                "custom exponents must be positive and finite".into(),
            ));
        }
        let total: f64 = coeffs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter(
                "custom coefficients must have a positive sum (G(1) = 1 normalization)".into(),
            ));
        }
        let coeffs = coeffs.iter().map(|c| c / total).collect();
        Ok(Self::finish(
            YoungFamily::Custom { coeffs, exponents },
            None,
        ))
    }

    fn finish(family: YoungFamily, exponents: Option<(f64, f64)>) -> Self {
        let mut g = Self {
            family,
            p_minus: 0.0,
            p_plus: 0.0,
            delta2: 0.0,
            analytic: exponents.is_some(),
        };
        let (lo, hi) =
            exponents.unwrap_or_else(|| g.extremized_exponents(&log_grid(1e-4, 1e4, 801)));
        g.p_minus = lo;
        g.p_plus = hi;
        g.delta2 = log_grid(1e-6, 1e6, 1201)
            .into_iter()
            .map(|t| g.value(2.0 * t) / g.value(t))
            .fold(f64::NEG_INFINITY, f64::max);
        g
    }

    pub fn family(&self) -> &YoungFamily {
        &self.family
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    /// Whether `p±` come from a closed form rather than the sample grid.
    pub fn exponents_are_analytic(&self) -> bool {
        self.analytic
    }

    /// Sampled supremum of `G(2t)/G(t)`; depends on the sample grid.
    pub fn delta2_constant(&self) -> f64 {
        self.delta2
    }

    /// Hölder conjugates `((p+)', (p-)')`.
    pub fn conjugate_exponents(&self) -> (f64, f64) {
        (
            self.p_plus / (self.p_plus - 1.0),
            self.p_minus / (self.p_minus - 1.0),
        )
    }

    /// `G(|t|)` without range checking.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        match &self.family {
            YoungFamily::Power { p } => pw(t, *p),
            YoungFamily::PowerSum { p, q } => 0.5 * (pw(t, *p) + pw(t, *q)),
            YoungFamily::PowerLog { p } => pw(t, *p) * t.ln_1p() / std::f64::consts::LN_2,
            YoungFamily::Custom { coeffs, exponents } => coeffs
                .iter()
                .zip(exponents)
                .map(|(c, e)| c * pw(t, *e))
                .sum(),
        }
    }

    /// `g(t) = G'(t)` extended as an odd function, with `g(0) = 0`.
    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        let a = t.abs();
        if a == 0.0 {
            return 0.0;
        }
        let d = match &self.family {
            YoungFamily::Power { p } => p * pw(a, p - 1.0),
            YoungFamily::PowerSum { p, q } => 0.5 * (p * pw(a, p - 1.0) + q * pw(a, q - 1.0)),
            YoungFamily::PowerLog { p } => {
                (p * pw(a, p - 1.0) * a.ln_1p() + pw(a, *p) / (1.0 + a)) / std::f64::consts::LN_2
            }
            YoungFamily::Custom { coeffs, exponents } => coeffs
                .iter()
                .zip(exponents)
                .map(|(c, e)| c * e * pw(a, e - 1.0))
                .sum(),
        };
        d.copysign(t)
    }

    /// Checked `G(|t|)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::OutOfRange(format!("G evaluated at {t}")));
        }
        let v = self.value(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::OutOfRange(format!("G({t}) overflows")))
        }
    }

    /// Checked `g(t)`.
    pub fn eval_derivative(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::OutOfRange(format!("g evaluated at {t}")));
        }
        let v = self.derivative(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::OutOfRange(format!("g({t}) overflows")))
        }
    }

    /// `t g(t)`, the integrand whose convexity gates the eigenvalue comparison.
    pub fn h(&self, t: f64) -> f64 {
        t * self.derivative(t)
    }

    /// Solves `f(t) = target` for `t >= 0` with `f` nondecreasing, by
    /// doubling then bisection down to adjacent floats.
    fn monotone_root(&self, target: f64, f: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
        if target == 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut doublings = 0;
        while f(hi) < target {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 1100 || !hi.is_finite() {
                return Err(Error::OutOfRange(format!(
                    "cannot bracket {what} = {target}"
                )));
            }
        }
        for _ in 0..2400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // pick the endpoint with the smaller residual
        if (f(lo) - target).abs() <= (f(hi) - target).abs() {
            Ok(lo)
        } else {
            Ok(hi)
        }
    }

    /// `G*(a)` together with the maximizer `t` (the root of `g(t) = a`).
    pub fn conjugate_with_argmax(&self, a: f64) -> Result<(f64, f64)> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("conjugate needs a >= 0, got {a}")));
        }
        let t = self.monotone_root(a, |t| self.derivative(t), "g(t)")?;
        Ok(((a * t - self.value(t)).max(0.0), t))
    }

    /// Complementary function `G*(a) = sup_t { a t - G(t) }`.
    pub fn conjugate(&self, a: f64) -> Result<f64> {
        self.conjugate_with_argmax(a).map(|(v, _)| v)
    }

    /// `G^{-1}(y)` on `[0, inf)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("inverse needs y >= 0, got {y}")));
        }
        self.monotone_root(y, |t| self.value(t), "G(t)")
    }

    /// `(inf, sup)` of `t g(t) / G(t)` over the sample points.
    pub fn extremized_exponents(&self, ts: &[f64]) -> (f64, f64) {
        ts.iter()
            .map(|&t| self.h(t) / self.value(t))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r), hi.max(r))
            })
    }

    /// Sampled convexity of `h(t) = t g(t)` (chord test, relative slack 1e-10).
    pub fn h_is_convex(&self, ts: &[f64]) -> bool {
        sampled_convex(ts, |t| self.h(t), 1e-10)
    }

    /// Checks every sampled inequality on the given `t` grid; pairs `(a, t)`
    /// are formed from every fourth grid point against the full grid.
    pub fn verify_properties(&self, ts: &[f64]) -> YoungReport {
        let (pm, pp) = (self.p_minus, self.p_plus);
        let (cp_plus, cp_minus) = self.conjugate_exponents();
        let rel = |lhs: f64, rhs: f64, tol: f64| lhs <= rhs + tol * lhs.abs().max(rhs.abs());

        let mut points = Vec::with_capacity(ts.len());
        for &t in ts {
            let gv = self.value(t);
            let dv = self.derivative(t);
            let ratio = t * dv / gv;
            let (g_lo, g_hi, d_lo, d_hi) = if t >= 1.0 {
                (
                    pw(t, pm),
                    pw(t, pp),
                    pm * pw(t, pm - 1.0),
                    pp * pw(t, pp - 1.0),
                )
            } else {
                (
                    pw(t, pp),
                    pw(t, pm),
                    pm * pw(t, pp - 1.0),
                    pp * pw(t, pm - 1.0),
                )
            };
            let growth_g = rel(g_lo, gv, 1e-10) && rel(gv, g_hi, 1e-10);
            let growth_g_prime = rel(d_lo, dv, 1e-10) && rel(dv, d_hi, 1e-10);
            let (conj_value, conj_residual, sandwich) = match self.conjugate_with_argmax(dv) {
                Ok((cv, root)) => {
                    let residual = (cv - (t * dv - gv)).abs();
                    let star_ratio = dv * root / cv;
                    let ok = rel(cp_plus, star_ratio, 1e-9) && rel(star_ratio, cp_minus, 1e-9);
                    (cv, residual, ok)
                }
                Err(_) => (f64::NAN, f64::INFINITY, false),
            };
            points.push(PointCheck {
                t,
                ratio,
                exponent_bracket: ratio > 1.0 && rel(pm, ratio, 1e-12) && rel(ratio, pp, 1e-12),
                delta2: rel(self.value(2.0 * t), self.delta2 * gv, 1e-12),
                growth_g,
                growth_g_prime,
                conjugate: conj_value,
                conjugate_residual: conj_residual,
                conjugate_identity: conj_residual <= 1e-8 * (1.0 + t * dv),
                conjugate_sandwich: sandwich,
            });
        }

        let mut young = PairTally::default();
        let mut scaling = PairTally::default();
        for &a in ts.iter().step_by(4) {
            let conj_a = self.conjugate(a).unwrap_or(f64::NAN);
            let ga = self.derivative(a);
            for &t in ts {
                let lhs = a * t;
                let rhs = self.value(t) + conj_a;
                young.record(rel(lhs, rhs, 1e-12));
                if t < 1.0 {
                    let gat = self.derivative(a * t);
                    let lo = pm / pp * ga * pw(t, pp - 1.0);
                    let hi = pp / pm * ga * pw(t, pm - 1.0);
                    scaling.record(rel(lo, gat, 1e-10) && rel(gat, hi, 1e-10));
                }
            }
        }

        let conj_sample: Vec<f64> = ts.iter().map(|&t| self.derivative(t)).collect();
        let conj_convex = {
            let vals: Vec<f64> = conj_sample
                .iter()
                .map(|&a| self.conjugate(a).unwrap_or(f64::NAN))
                .collect();
            convex_values(&conj_sample, &vals, 1e-10)
        };
        let normalized = (self.value(1.0) - 1.0).abs() <= 1e-12;
        let increasing = ts.windows(2).all(|w| self.value(w[1]) > self.value(w[0]));
        let convex = sampled_convex(ts, |t| self.value(t), 1e-12);
        let extremized = self.extremized_exponents(ts);

        YoungReport {
            family: self.family.clone(),
            p_minus: pm,
            p_plus: pp,
            delta2_constant: self.delta2,
            extremized_exponents: extremized,
            normalized,
            increasing,
            convex,
            conjugate_convex: conj_convex,
            points,
            young_inequality: young,
            scaling_bound: scaling,
        }
    }
}

fn convex_values(xs: &[f64], ys: &[f64], rel_tol: f64) -> bool {
    xs.windows(3).zip(ys.windows(3)).all(|(x, y)| {
        if x[2] <= x[0] {
            return true;
        }
        let lam = (x[2] - x[1]) / (x[2] - x[0]);
        let chord = lam * y[0] + (1.0 - lam) * y[2];
        let scale = y[0].abs().max(y[1].abs()).max(y[2].abs());
        y[1] <= chord + rel_tol * scale
    })
}

/// Chord test for convexity on consecutive sample triples.
pub fn sampled_convex(ts: &[f64], f: impl Fn(f64) -> f64, rel_tol: f64) -> bool {
    let ys: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    convex_values(ts, &ys, rel_tol)
}

/// Per-sample outcome of [`YoungFunction::verify_properties`].
#[derive(Debug, Clone, Serialize)]
pub struct PointCheck {
    pub t: f64,
    pub ratio: f64,
    pub exponent_bracket: bool,
    pub delta2: bool,
    pub growth_g: bool,
    pub growth_g_prime: bool,
    pub conjugate: f64,
    pub conjugate_residual: f64,
    pub conjugate_identity: bool,
    pub conjugate_sandwich: bool,
}

impl PointCheck {
    pub fn passed(&self) -> bool {
        self.exponent_bracket
            && self.delta2
            && self.growth_g
            && self.growth_g_prime
            && self.conjugate_identity
            && self.conjugate_sandwich
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PairTally {
    pub checked: usize,
    pub failed: usize,
}

impl PairTally {
    fn record(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct YoungReport {
    pub family: YoungFamily,
    pub p_minus: f64,
    pub p_plus: f64,
    pub delta2_constant: f64,
    pub extremized_exponents: (f64, f64),
    pub normalized: bool,
    pub increasing: bool,
    pub convex: bool,
    pub conjugate_convex: bool,
    pub points: Vec<PointCheck>,
    pub young_inequality: PairTally,
    pub scaling_bound: PairTally,
}

impl YoungReport {
    pub fn failed_points(&self) -> usize {
        self.points.iter().filter(|p| !p.passed()).count()
    }

    pub fn all_pass(&self) -> bool {
        self.normalized
            && self.increasing
            && self.convex
            && self.conjugate_convex
            && self.failed_points() == 0
            && self.young_inequality.failed == 0
            && self.scaling_bound.failed == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_sum() -> YoungFunction {
        YoungFunction::power_sum(2.0, 4.0).unwrap()
    }

    #[test]
    fn power_sum_values() {
        let g = power_sum();
        assert_eq!(g.eval(1.0).unwrap(), 1.0);
        assert_eq!(g.eval(2.0).unwrap(), 10.0);
        assert_eq!(g.eval(-2.0).unwrap(), 10.0);
        assert_eq!(g.eval(0.0).unwrap(), 0.0);
        assert_eq!(g.eval_derivative(1.0).unwrap(), 3.0);
        assert_eq!(g.eval_derivative(2.0).unwrap(), 18.0);
        assert_eq!(g.eval_derivative(-2.0).unwrap(), -18.0);
        assert_eq!(g.eval_derivative(0.0).unwrap(), 0.0);
    }

    #[test]
    fn overflow_is_an_error() {
        let g = power_sum();
        assert!(matches!(g.eval(1e200), Err(Error::OutOfRange(_))));
        assert!(matches!(
            g.eval_derivative(1e200),
            Err(Error::OutOfRange(_))
        ));
        assert!(g.eval(f64::INFINITY).is_err());
    }

    #[test]
    fn conjugate_examples() {
        let sq = YoungFunction::power(2.0).unwrap();
        assert!((sq.conjugate(2.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(sq.conjugate(0.0).unwrap(), 0.0);
        assert!((power_sum().conjugate(3.0).unwrap() - 2.0).abs() < 1e-14);
        // identity at t = 3 for t^2
        assert!((sq.conjugate(6.0).unwrap() - 9.0).abs() < 1e-12);
        assert!(sq.conjugate(-1.0).is_err());
        assert!(sq.conjugate(1e308 * 10.0).is_err());
    }

    #[test]
    fn inverse_examples() {
        let sq = YoungFunction::power(2.0).unwrap();
        assert!((sq.inverse(4.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((power_sum().inverse(10.0).unwrap() - 2.0).abs() < 1e-14);
        for g in [sq, power_sum(), YoungFunction::power_log(2.0).unwrap()] {
            assert!((g.inverse(1.0).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(YoungFunction::power(1.0).is_err());
        assert!(YoungFunction::power_sum(2.0, 2.0).is_err());
        assert!(YoungFunction::power_log(0.5).is_err());
        assert!(YoungFunction::custom(vec![1.0], vec![2.0, 3.0]).is_err());
        assert!(YoungFunction::custom(vec![-1.0], vec![2.0]).is_err());
    }

    #[test]
    fn power_exponents_are_exact() {
        let g = YoungFunction::power(3.0).unwrap();
        let (lo, hi) = g.extremized_exponents(&log_grid(1e-3, 1e3, 200));
        assert!((lo - 3.0).abs() < 1e-13 && (hi - 3.0).abs() < 1e-13);
        assert!((g.delta2_constant() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn power_sum_extremized_against_closed_ratio() {
        // oracle: the ratio 2(1 + 2t^2)/(1 + t^2) written out by hand
        let ts = log_grid(1e-3, 1e3, 200);
        let oracle = ts
            .iter()
            .map(|t| 2.0 * (1.0 + 2.0 * t * t) / (1.0 + t * t))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
                (a.min(r), b.max(r))
            });
        let got = power_sum().extremized_exponents(&ts);
        assert!((got.0 - oracle.0).abs() < 1e-12 && (got.1 - oracle.1).abs() < 1e-12);
        assert!((got.0 - 2.0).abs() < 1e-5 && (got.1 - 4.0).abs() < 1e-5);
    }

    #[test]
    fn builtins_pass_every_check() {
        let ts = log_grid(1e-3, 1e3, 200);
        for g in [
            YoungFunction::power(2.0).unwrap(),
            YoungFunction::power(1.5).unwrap(),
            power_sum(),
            YoungFunction::power_log(2.0).unwrap(),
        ] {
            let r = g.verify_properties(&ts);
            assert!(
                r.all_pass(),
                "{:?}: failed points {}",
                g.family(),
                r.failed_points()
            );
            assert!(g.h_is_convex(&ts));
        }
    }

    #[test]
    fn inverse_round_trip() {
        let g = YoungFunction::power_log(2.5).unwrap();
        for t in log_grid(1e-3, 1e3, 50) {
            let back = g.inverse(g.value(t)).unwrap();
            assert!((back - t).abs() <= 1e-10 * t);
        }
    }

    #[test]
    fn custom_family_violation_is_reported() {
        // 1.5 t^2 - 0.5 t^3 stops increasing at t = 2
        let g = YoungFunction::custom(vec![1.5, -0.5], vec![2.0, 3.0]).unwrap();
        assert!(!g.exponents_are_analytic());
        let r = g.verify_properties(&log_grid(1e-3, 1e3, 200));
        assert!(!r.all_pass());
        let ok = YoungFunction::custom(vec![1.0, 1.0], vec![2.0, 4.0]).unwrap();
        assert!((ok.value(2.0) - 10.0).abs() < 1e-12);
    }
}
