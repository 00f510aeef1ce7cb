//! Weight pairs `(M, N)` of the general nonlocal modular.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{integrate, Quadrature};
use crate::young::YoungFunction;

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelFamily {
    /// `M = r^s`, `N = r^n`
    Fractional { s: f64 },
    /// `M = r`, `N = r^{n-1}`
    Slobodetskii,
    /// `M = r^s (1 + |log r|)^beta`, `N = r^n`
    BesovLog { s: f64, beta: f64 },
    /// `M = r^s G^{-1}(r^n)`, `N = 1`
    Abs { s: f64, young: YoungFunction },
    /// Arbitrary user pair, mostly useful for negative controls.
    Custom {
        name: String,
        m: RadialFn,
        n: RadialFn,
    },
}

impl fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Fractional { s } => write!(f, "Fractional {{ s: {s} }}"),
            KernelFamily::Slobodetskii => write!(f, "Slobodetskii"),
            KernelFamily::BesovLog { s, beta } => write!(f, "BesovLog {{ s: {s}, beta: {beta} }}"),
            KernelFamily::Abs { s, .. } => write!(f, "Abs {{ s: {s} }}"),
            KernelFamily::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Thresholds on `n/s` for the `abs` family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsThresholds {
    /// `(p-)^2 / (p+ - p-)`, finiteness of the tail integral.
    pub integrability: f64,
    /// `p- / (p+ - p-)`, vanishing of the small-`r` quotient.
    pub decay: f64,
}

impl AbsThresholds {
    pub fn for_young(young: &YoungFunction) -> Self {
        let (pm, pp) = (young.p_minus(), young.p_plus());
        let gap = pp - pm;
        if gap <= 0.0 {
            return Self {
                integrability: f64::INFINITY,
                decay: f64::INFINITY,
            };
        }
        Self {
            integrability: pm * pm / gap,
            decay: pm / gap,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelPair {
    family: KernelFamily,
    dim: usize,
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "s must lie in (0,1), got {s}"
        )))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ))
    }
}

impl KernelPair {
    pub fn fractional(s: f64, dim: usize) -> Result<Self> {
        check_s(s)?;
        check_dim(dim)?;
        Ok(Self {
            family: KernelFamily::Fractional { s },
            dim,
        })
    }

    pub fn slobodetskii(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            family: KernelFamily::Slobodetskii,
            dim,
        })
    }

    pub fn besov_log(s: f64, beta: f64, dim: usize) -> Result<Self> {
        check_s(s)?;
        check_dim(dim)?;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be >= 0, got {beta}"
            )));
        }
        Ok(Self {
            family: KernelFamily::BesovLog { s, beta },
            dim,
        })
    }

    /// Enforces the stricter of the two `n/s` thresholds in [`AbsThresholds`].
    pub fn abs(s: f64, young: YoungFunction, dim: usize) -> Result<Self> {
        let th = AbsThresholds::for_young(&young);
        let ratio = dim as f64 / s;
        let bound = th.integrability.min(th.decay);
        if ratio >= bound {
            return Err(Error::InvalidParameter(format!(
                "abs family needs n/s < {bound} (integrability {}, decay {}), got n/s = {ratio}",
                th.integrability, th.decay
            )));
        }
        Self::abs_unchecked(s, young, dim)
    }

    /// Same as [`KernelPair::abs`] without the exponent condition.
    pub fn abs_unchecked(s: f64, young: YoungFunction, dim: usize) -> Result<Self> {
        check_s(s)?;
        check_dim(dim)?;
        Ok(Self {
            family: KernelFamily::Abs { s, young },
            dim,
        })
    }

    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        m: impl Fn(f64) -> f64 + Send + Sync + 'static,
        n: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            family: KernelFamily::Custom {
                name: name.into(),
                m: Arc::new(m),
                n: Arc::new(n),
            },
            dim,
        })
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> String {
        match &self.family {
            KernelFamily::Fractional { .. } => "fractional".into(),
            KernelFamily::Slobodetskii => "slobodetskii".into(),
            KernelFamily::BesovLog { .. } => "besov-log".into(),
            KernelFamily::Abs { .. } => "abs".into(),
            KernelFamily::Custom { name, .. } => name.clone(),
        }
    }

    /// `(M(r), N(r))` without the domain check.
    #[inline]
    pub fn weights(&self, r: f64) -> (f64, f64) {
        let n = self.dim as i32;
        match &self.family {
            KernelFamily::Fractional { s } => (r.powf(*s), r.powi(n)),
            KernelFamily::Slobodetskii => (r, r.powi(n - 1)),
            KernelFamily::BesovLog { s, beta } => {
                (r.powf(*s) * (1.0 + r.ln().abs()).powf(*beta), r.powi(n))
            }
            KernelFamily::Abs { s, young } => {
                let inv = young.inverse(r.powi(n)).unwrap_or(f64::NAN);
                (r.powf(*s) * inv, 1.0)
            }
            KernelFamily::Custom { m, n, .. } => (m(r), n(r)),
        }
    }

    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!(
                "kernel evaluated at r = {r}; needs r > 0"
            )));
        }
        Ok(self.weights(r))
    }

    /// Both integrability integrals, the tail one after `r -> 1/r`.
    pub fn check_p3(&self, p_minus: f64, quad_tol: f64) -> P3Report {
        let n = self.dim as f64;
        let low = |r: f64| {
            let (m, nn) = self.weights(r);
            r.powf(n - 1.0 + p_minus) / (nn * m.powf(p_minus))
        };
        let high = |u: f64| {
            let r = 1.0 / u;
            let (m, nn) = self.weights(r);
            r.powf(n - 1.0) / (nn * m.powf(p_minus)) / (u * u)
        };
        P3Report {
            low: integrate(low, 0.0, 1.0, quad_tol, 4000),
            high: integrate(high, 0.0, 1.0, quad_tol, 4000),
        }
    }

    /// `q(r) = N(2r) M(2r)^{p-} / r^n` along `r = 2^{-k}`, `k = 1..=40`.
    pub fn check_p4(&self, p_minus: f64) -> P4Report {
        let sequence: Vec<f64> = (1..=40)
            .map(|k| {
                let r = 0.5f64.powi(k);
                let (m, nn) = self.weights(2.0 * r);
                nn * m.powf(p_minus) / r.powi(self.dim as i32)
            })
            .collect();
        let decays = sequence.windows(2).all(|w| w[1] <= w[0]);
        P4Report {
            final_value: *sequence.last().expect("nonempty"),
            decays,
            sequence,
        }
    }

    /// Pointwise monotonicity, positivity and the lower bound `M >= min(1, r)`.
    pub fn verify_p1_p2(&self, rs: &[f64]) -> P1P2Report {
        let mut samples = Vec::with_capacity(rs.len());
        let mut prev: Option<(f64, f64)> = None;
        for &r in rs {
            let (m, nn) = self.weights(r);
            let monotone = prev.is_none_or(|(pm, pn)| m >= pm && nn >= pn);
            samples.push(P1P2Sample {
                r,
                m,
                n: nn,
                positive: m > 0.0 && nn > 0.0 && m.is_finite() && nn.is_finite(),
                monotone,
                lower_bound: m >= r.min(1.0) * (1.0 - 1e-12),
            });
            prev = Some((m, nn));
        }
        P1P2Report { samples }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P3Report {
    pub low: Quadrature,
    pub high: Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P4Report {
    pub final_value: f64,
    pub decays: bool,
    pub sequence: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P1P2Sample {
    pub r: f64,
    pub m: f64,
    pub n: f64,
    pub positive: bool,
    pub monotone: bool,
    pub lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P1P2Report {
    pub samples: Vec<P1P2Sample>,
}

impl P1P2Report {
    pub fn all_pass(&self) -> bool {
        self.samples
            .iter()
            .all(|s| s.positive && s.monotone && s.lower_bound)
    }

    pub fn monotonicity_failures(&self) -> usize {
        self.samples.iter().filter(|s| !s.monotone).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::young::log_grid;

    #[test]
    fn eval_examples() {
        let k = KernelPair::fractional(0.5, 1).unwrap();
        assert_eq!(k.eval(1.0).unwrap(), (1.0, 1.0));
        assert_eq!(k.eval(4.0).unwrap(), (2.0, 4.0));
        let k = KernelPair::slobodetskii(2).unwrap();
        assert_eq!(k.eval(3.0).unwrap(), (3.0, 3.0));
        assert!(matches!(k.eval(0.0), Err(Error::Domain(_))));
        assert!(k.eval(-1.0).is_err());
    }

    #[test]
    fn p3_closed_forms() {
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let r = k.check_p3(2.0, 1e-6);
        assert!((r.low.value().unwrap() - 1.0).abs() < 1e-4);
        assert!((r.high.value().unwrap() - 1.0).abs() < 1e-4);
        // general fractional closed forms 1/(p(1-s)) and 1/(sp)
        let k = KernelPair::fractional(0.3, 2).unwrap();
        let r = k.check_p3(2.5, 1e-8);
        assert!((r.low.value().unwrap() - 1.0 / (2.5 * 0.7)).abs() < 1e-6);
        assert!((r.high.value().unwrap() - 1.0 / (0.3 * 2.5)).abs() < 1e-6);
        for n in [1, 2, 3] {
            let k = KernelPair::slobodetskii(n).unwrap();
            let r2 = k.check_p3(2.0, 1e-6);
            assert!((r2.low.value().unwrap() - 1.0).abs() < 1e-4);
            assert!((r2.high.value().unwrap() - 1.0).abs() < 1e-4);
            let r3 = k.check_p3(3.0, 1e-6);
            assert!((r3.low.value().unwrap() - 1.0).abs() < 1e-4);
            assert!((r3.high.value().unwrap() - 0.5).abs() < 1e-4);
        }
    }

    #[test]
    fn p3_divergence_reported() {
        // M = r, N = 1 in n = 1 makes the small-r integrand r^{p-1-p} = 1/r
        let k = KernelPair::custom("bad", 1, |r| r, |_| 1.0).unwrap();
        let r = k.check_p3(2.0, 1e-6);
        assert!(matches!(r.high, Quadrature::Converged { .. }));
        let k = KernelPair::custom("bad-low", 1, |r| r, |r| r).unwrap();
        assert!(matches!(
            k.check_p3(2.0, 1e-6).low,
            Quadrature::Divergent { .. }
        ));
    }

    #[test]
    fn p4_examples() {
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let r = k.check_p4(2.0);
        assert!(r.decays && r.final_value <= 1e-11);
        let k = KernelPair::slobodetskii(1).unwrap();
        let r = k.check_p4(2.0);
        assert!(r.decays && r.final_value <= 1e-8);
        // oracle for the non-decaying abs case: evaluate q(2^-k) by hand
        let g = YoungFunction::power_log(2.0).unwrap();
        assert!(KernelPair::abs(0.1, g.clone(), 1).is_err());
        let k = KernelPair::abs_unchecked(0.1, g.clone(), 1).unwrap();
        let by_hand: Vec<f64> = (1..=40)
            .map(|i| {
                let r = 0.5f64.powi(i);
                let m = (2.0 * r).powf(0.1) * g.inverse(2.0 * r).unwrap();
                m.powi(2) / r
            })
            .collect();
        let rep = k.check_p4(2.0);
        assert!(!rep.decays);
        assert!(by_hand[39] > by_hand[20]);
        assert!((rep.final_value - by_hand[39]).abs() <= 1e-12 * by_hand[39]);
    }

    #[test]
    fn abs_thresholds() {
        let g = YoungFunction::power_log(2.0).unwrap();
        let th = AbsThresholds::for_young(&g);
        assert_eq!(th.decay, 2.0);
        assert_eq!(th.integrability, 4.0);
        assert!(KernelPair::abs(0.9, g.clone(), 1).is_ok());
        assert!(KernelPair::abs(0.5, g, 1).is_err());
        let pow = YoungFunction::power(2.0).unwrap();
        assert!(KernelPair::abs(0.5, pow, 2).is_ok());
    }

    #[test]
    fn p1_p2_checks() {
        let rs = log_grid(1e-4, 1e4, 400);
        assert!(KernelPair::fractional(0.5, 2)
            .unwrap()
            .verify_p1_p2(&rs)
            .all_pass());
        assert!(KernelPair::slobodetskii(1)
            .unwrap()
            .verify_p1_p2(&rs)
            .all_pass());
        let b = KernelPair::besov_log(0.5, 1.0, 1).unwrap();
        let (m, _) = b.eval((-1.0f64).exp()).unwrap();
        assert!((m - 2.0 * (-0.5f64).exp()).abs() < 1e-14 && m >= (-1.0f64).exp());
        assert!(b.verify_p1_p2(&rs).samples.iter().all(|s| s.lower_bound));
        assert!(KernelPair::besov_log(0.5, 0.25, 1)
            .unwrap()
            .verify_p1_p2(&rs)
            .all_pass());
        let dec = KernelPair::custom("decreasing", 1, |r| 1.0 / r, |r| r).unwrap();
        assert!(dec.verify_p1_p2(&rs).monotonicity_failures() > 0);
    }

    #[test]
    fn rejects_bad_s() {
        assert!(KernelPair::fractional(1.5, 1).is_err());
        assert!(KernelPair::besov_log(0.5, -1.0, 1).is_err());
    }
}
