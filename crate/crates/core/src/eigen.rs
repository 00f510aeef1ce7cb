//! Constrained minimization of `Φ_{M,N,G}` on `{Φ_G = μ}` over fields
//! supported in a domain, and the comparison with the centered domain of the
//! same measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{DomainMask, Field};
use crate::kernel::KernelPair;
use crate::modular::{local_pairing, phi_g, PairTable, Reach};
use crate::sum::{map_indices, Exec, Neumaier};
use crate::young::{log_grid, YoungFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerSettings {
    pub max_iter: usize,
    /// Stop once an accepted step lowers the objective by less than
    /// `tol` relative.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub reach: Option<Reach>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-13,
            restarts: 8,
            seed: 0,
            reach: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenProblem {
    pub domain: DomainMask,
    pub mu: f64,
    pub young: YoungFunction,
    pub kernel: KernelPair,
    pub settings: OptimizerSettings,
}

impl EigenProblem {
    pub fn new(
        domain: DomainMask,
        mu: f64,
        young: YoungFunction,
        kernel: KernelPair,
    ) -> Result<Self> {
        let p = Self {
            domain,
            mu,
            young,
            kernel,
            settings: OptimizerSettings::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_settings(mut self, settings: OptimizerSettings) -> Self {
        self.settings = settings;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.domain.count() == 0 {
            return Err(Error::InvalidParameter("domain has no cells".into()));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if self.settings.restarts == 0 {
            return Err(Error::InvalidParameter(
                "at least one start is needed".into(),
            ));
        }
        Ok(())
    }

    pub fn table(&self) -> Result<PairTable> {
        let grid = *self.domain.grid();
        let reach = self
            .settings
            .reach
            .unwrap_or_else(|| Reach::default_for(&grid));
        PairTable::on_domain(&self.domain, &self.kernel, reach)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    pub mu: f64,
    pub minimizer: Field,
    pub alpha_mu: f64,
    pub lambda_mu: f64,
    /// Objective after every accepted step of the best run.
    pub trace: Vec<f64>,
    pub best_restart: usize,
    pub converged: bool,
}

struct Run {
    u: Field,
    alpha: f64,
    trace: Vec<f64>,
    converged: bool,
}

/// `t > 0` with `Φ_G(t u) = μ`, to neighbouring floats.
fn normalize(u: &Field, mu: f64, young: &YoungFunction) -> Result<Field> {
    if u.is_zero() {
        return Err(Error::InvalidParameter(
            "cannot normalize the zero field".into(),
        ));
    }
    let f = |t: f64| phi_g(&u.scaled(t), young).unwrap_or(f64::INFINITY);
    let (mut lo, mut hi) = (1.0, 1.0);
    while f(hi) < mu {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::OutOfRange("normalization bracket overflowed".into()));
        }
    }
    while f(lo) > mu {
        hi = lo;
        lo *= 0.5;
        if lo == 0.0 {
            return Err(Error::OutOfRange(
                "normalization bracket underflowed".into(),
            ));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < mu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if (f(lo) - mu).abs() < (f(hi) - mu).abs() {
        lo
    } else {
        hi
    };
    Ok(u.scaled(t))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = Neumaier::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

fn descend(problem: &EigenProblem, table: &PairTable, init: &Field) -> Result<Run> {
    let young = &problem.young;
    let grid = *problem.domain.grid();
    let h = grid.cell_measure();
    let mut u = normalize(init, problem.mu, young)?;
    let mut obj = table.phi_mng(&u, young)?;
    let mut trace = vec![obj];
    let mut step: Option<f64> = None;
    let mut converged = false;
    for _ in 0..problem.settings.max_iter {
        let grad = table.gradient(&u, young)?;
        // normal of the constraint surface, restricted to the domain
        let normal: Vec<f64> = u
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if problem.domain.contains(i) {
                    young.derivative(v) * h
                } else {
                    0.0
                }
            })
            .collect();
        let nn = dot(&normal, &normal);
        let coef = if nn > 0.0 {
            dot(grad.values(), &normal) / nn
        } else {
            0.0
        };
        let dir: Vec<f64> = grad
            .values()
            .iter()
            .zip(&normal)
            .map(|(g, n)| g - coef * n)
            .collect();
        let dnorm = dot(&dir, &dir).sqrt();
        if dnorm == 0.0 {
            converged = true;
            break;
        }
        let unorm = dot(u.values(), u.values()).sqrt();
        let mut s = step.unwrap_or(0.1 * unorm / dnorm);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u
                .values()
                .iter()
                .zip(&dir)
                .map(|(a, d)| a - s * d)
                .collect();
            let trial = Field::from_values(grid, trial)?;
            if !trial.is_zero() {
                let cand = normalize(&trial, problem.mu, young)?;
                let val = table.phi_mng(&cand, young)?;
                if val < obj {
                    accepted = Some((cand, val));
                    break;
                }
            }
            s *= 0.5;
        }
        let Some((cand, val)) = accepted else {
            converged = true;
            break;
        };
        let gain = (obj - val) / obj;
        u = cand;
        obj = val;
        trace.push(obj);
        step = Some(2.0 * s);
        if gain < problem.settings.tol {
            converged = true;
            break;
        }
    }
    Ok(Run {
        u,
        alpha: obj,
        trace,
        converged,
    })
}

fn random_start(problem: &EigenProblem, restart: usize) -> Result<Field> {
    let seed = problem
        .settings
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(restart as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = *problem.domain.grid();
    let vals = (0..grid.len())
        .map(|i| {
            if problem.domain.contains(i) {
                rng.gen_range(0.05..1.0)
            } else {
                0.0
            }
        })
        .collect();
    Field::from_values(grid, vals)
}

/// `pairing(u, u) / Σ g(u) u h^n`.
pub fn lambda_from_minimizer(u: &Field, young: &YoungFunction, table: &PairTable) -> Result<f64> {
    let den = local_pairing(u, young)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("Σ g(u) u vanishes".into()));
    }
    Ok(table.pairing(u, u, young)? / den)
}

fn finish(problem: &EigenProblem, table: &PairTable, runs: Vec<Run>) -> Result<EigenResult> {
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.alpha < a.1.alpha { b } else { a })
        .expect("at least one run");
    let lambda_mu = lambda_from_minimizer(&best.u, &problem.young, table)?;
    Ok(EigenResult {
        mu: problem.mu,
        minimizer: best.u,
        alpha_mu: best.alpha,
        lambda_mu,
        trace: best.trace,
        best_restart,
        converged: best.converged,
    })
}

/// Runs one descent from `init`, which must be nonzero and vanish off the domain.
pub fn minimize_from(problem: &EigenProblem, init: &Field) -> Result<EigenResult> {
    problem.validate()?;
    if init.is_zero() {
        return Err(Error::InvalidParameter("initial field is zero".into()));
    }
    if !init.vanishes_outside(&problem.domain) {
        return Err(Error::Domain(
            "initial field is nonzero outside the domain".into(),
        ));
    }
    let table = problem.table()?;
    let run = descend(problem, &table, init)?;
    finish(problem, &table, vec![run])
}

/// Best of `restarts` descents from seeded random nonnegative starts.
pub fn minimize_alpha_mu(problem: &EigenProblem) -> Result<EigenResult> {
    problem.validate()?;
    let table = problem.table()?;
    let runs = map_indices(problem.settings.restarts, Exec::Parallel, |r| {
        descend(problem, &table, &random_start(problem, r)?)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    finish(problem, &table, runs)
}

/// Nine log-spaced levels in `[1e-2, 1e2]`.
pub fn default_mu_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 9)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuRow {
    pub mu: f64,
    pub alpha_mu: Option<f64>,
    pub lambda_mu: Option<f64>,
    pub alpha_over_mu: Option<f64>,
    pub best_restart: Option<usize>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuScan {
    /// Minimum of `α_μ` over the levels that succeeded.
    pub alpha_1: Option<f64>,
    /// Minimum of `λ_μ` over the levels that succeeded.
    pub lambda_1: Option<f64>,
    pub rows: Vec<MuRow>,
}

/// `problem.mu` is ignored; every `(μ, start)` pair runs independently and
/// the results are combined in `(μ, start)` order.
pub fn scan_mu(problem: &EigenProblem, mu_grid: &[f64]) -> Result<MuScan> {
    if mu_grid.is_empty() {
        return Err(Error::InvalidParameter("empty mu grid".into()));
    }
    let table = problem.table()?;
    let starts = problem.settings.restarts.max(1);
    let jobs = mu_grid.len() * starts;
    let outcomes = map_indices(jobs, Exec::Parallel, |job| {
        let (k, r) = (job / starts, job % starts);
        let p = EigenProblem {
            mu: mu_grid[k],
            ..problem.clone()
        };
        p.validate()?;
        descend(&p, &table, &random_start(&p, r)?)
    });
    let mut outcomes = outcomes.into_iter();
    let mut rows = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        let chunk: Vec<Result<Run>> = outcomes.by_ref().take(starts).collect();
        let p = EigenProblem {
            mu,
            ..problem.clone()
        };
        let result = chunk
            .into_iter()
            .collect::<Result<Vec<_>>>()
            .and_then(|runs| finish(&p, &table, runs));
        rows.push(match result {
            Ok(r) => MuRow {
                mu,
                alpha_mu: Some(r.alpha_mu),
                lambda_mu: Some(r.lambda_mu),
                alpha_over_mu: Some(r.alpha_mu / mu),
                best_restart: Some(r.best_restart),
                converged: r.converged,
                error: None,
            },
            Err(e) => MuRow {
                mu,
                alpha_mu: None,
                lambda_mu: None,
                alpha_over_mu: None,
                best_restart: None,
                converged: false,
                error: Some(e.to_string()),
            },
        });
    }
    let min = |f: fn(&MuRow) -> Option<f64>| rows.iter().filter_map(f).reduce(f64::min);
    Ok(MuScan {
        alpha_1: min(|r| r.alpha_mu),
        lambda_1: min(|r| r.lambda_mu),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaberKrahnReport {
    pub domain_cells: Vec<usize>,
    pub ball_cells: Vec<usize>,
    pub domain: MuScan,
    pub ball: MuScan,
    /// `α_1(B) <= α_1(Ω)`
    pub alpha_holds: bool,
    /// `(α_1(Ω) - α_1(B)) / α_1(Ω)`
    pub alpha_margin: f64,
    /// Whether `t g(t)` passed the sampled convexity check.
    pub h_convex: bool,
    /// `λ_1(B) <= λ_1(Ω)`, only evaluated when `h_convex`.
    pub lambda_holds: Option<bool>,
    pub lambda_margin: Option<f64>,
}

/// Compares `Ω` with the centered cell set of the same count.
pub fn faber_krahn_compare(problem: &EigenProblem, mu_grid: &[f64]) -> Result<FaberKrahnReport> {
    let grid = *problem.domain.grid();
    let ball = DomainMask::centered(grid, problem.domain.count())?;
    let on_ball = EigenProblem {
        domain: ball.clone(),
        ..problem.clone()
    };
    let domain = scan_mu(problem, mu_grid)?;
    let ball_scan = scan_mu(&on_ball, mu_grid)?;
    let h_convex = problem.young.h_is_convex(&log_grid(1e-3, 1e3, 200));
    let (a_d, a_b) = match (domain.alpha_1, ball_scan.alpha_1) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::OutOfRange("no level succeeded".into())),
    };
    let (lambda_holds, lambda_margin) = match (h_convex, domain.lambda_1, ball_scan.lambda_1) {
        (true, Some(l_d), Some(l_b)) => (Some(l_b <= l_d), Some((l_d - l_b) / l_d)),
        _ => (None, None),
    };
    Ok(FaberKrahnReport {
        domain_cells: problem.domain.cells(),
        ball_cells: ball.cells(),
        domain,
        ball: ball_scan,
        alpha_holds: a_b <= a_d,
        alpha_margin: (a_d - a_b) / a_d,
        h_convex,
        lambda_holds,
        lambda_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    fn settings(restarts: usize) -> OptimizerSettings {
        OptimizerSettings {
            restarts,
            ..OptimizerSettings::default()
        }
    }

    #[test]
    fn single_cell_closed_form() {
        let g = Grid::new(1, 1.0, 4).unwrap();
        let cell = g.index([1, 0]).unwrap();
        let mask = DomainMask::from_cells(g, &[cell]).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let y = YoungFunction::power_sum(2.0, 3.0).unwrap();
        let mu = 0.7;
        let p = EigenProblem::new(mask, mu, y.clone(), k.clone())
            .unwrap()
            .with_settings(settings(2));
        let r = minimize_alpha_mu(&p).unwrap();
        // G(t) h = μ, then sum over the other lattice cells within 4K = 16
        let t = y.inverse(mu).unwrap();
        let mut alpha = 0.0;
        let mut num = 0.0;
        for j in -16i64..=16 {
            if j == 0 {
                continue;
            }
            let d = j.abs() as f64;
            let (m, n) = k.eval(d).unwrap();
            alpha += 2.0 * y.value(t / m) / n;
            num += 2.0 * y.derivative(t / m) * (t / m) / n;
        }
        assert!(
            (r.alpha_mu - alpha).abs() <= 1e-9 * alpha,
            "{} vs {alpha}",
            r.alpha_mu
        );
        let lambda = num / (y.derivative(t) * t);
        assert!((r.lambda_mu - lambda).abs() <= 1e-9 * lambda);
        assert!((phi_g(&r.minimizer, &y).unwrap() - mu).abs() <= 1e-12 * mu);
    }

    #[test]
    fn power_young_is_homogeneous() {
        let g = Grid::new(1, 0.25, 6).unwrap();
        let mask = DomainMask::from_boxes(g, &[([-2, 0], [2, 0])]).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let y = YoungFunction::power(2.5).unwrap();
        let p = EigenProblem::new(mask, 1.0, y, k)
            .unwrap()
            .with_settings(settings(3));
        let scan = scan_mu(&p, &[0.1, 1.0, 10.0]).unwrap();
        let ratios: Vec<f64> = scan.rows.iter().map(|r| r.alpha_over_mu.unwrap()).collect();
        for r in &ratios {
            assert!((r - ratios[0]).abs() <= 1e-6 * ratios[0], "{ratios:?}");
        }
        for row in &scan.rows {
            let l = row.lambda_mu.unwrap();
            assert!((l - row.alpha_over_mu.unwrap()).abs() <= 1e-9 * l);
        }
    }

    #[test]
    fn scan_reports_grid_minimum() {
        let g = Grid::new(1, 0.5, 4).unwrap();
        let mask = DomainMask::from_boxes(g, &[([-1, 0], [1, 0])]).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let y = YoungFunction::power_sum(2.0, 4.0).unwrap();
        let p = EigenProblem::new(mask, 1.0, y, k)
            .unwrap()
            .with_settings(settings(2));
        let scan = scan_mu(&p, &[0.01, 1.0, 100.0]).unwrap();
        let a1 = scan.alpha_1.unwrap();
        assert!(scan.rows.iter().all(|r| a1 <= r.alpha_mu.unwrap()));
        let ratios: Vec<f64> = scan.rows.iter().map(|r| r.alpha_over_mu.unwrap()).collect();
        assert!((ratios[2] - ratios[0]).abs() > 1e-3 * ratios[0]);
        let single = scan_mu(&p, &[1.0]).unwrap();
        assert_eq!(single.alpha_1, single.rows[0].alpha_mu);
    }

    #[test]
    fn trace_decreases_and_restarts_do_not_hurt() {
        let g = Grid::new(1, 0.5, 5).unwrap();
        let mask = DomainMask::from_boxes(g, &[([-3, 0], [-1, 0]), ([1, 0], [2, 0])]).unwrap();
        let k = KernelPair::slobodetskii(1).unwrap();
        let y = YoungFunction::power_log(2.0).unwrap();
        let one = EigenProblem::new(mask.clone(), 0.5, y.clone(), k.clone())
            .unwrap()
            .with_settings(settings(1));
        let many = one.clone().with_settings(settings(4));
        let a = minimize_alpha_mu(&one).unwrap();
        let b = minimize_alpha_mu(&many).unwrap();
        assert!(a.trace.windows(2).all(|w| w[1] < w[0]));
        assert!(b.alpha_mu <= a.alpha_mu);
        assert!(b.minimizer.vanishes_outside(&mask));
        let zero = Field::zeros(g);
        assert!(minimize_from(&one, &zero).is_err());
    }

    #[test]
    fn centered_domain_is_its_own_ball() {
        let g = Grid::new(1, 0.5, 6).unwrap();
        let mask = DomainMask::centered(g, 4).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let y = YoungFunction::power(2.0).unwrap();
        let p = EigenProblem::new(mask, 1.0, y, k)
            .unwrap()
            .with_settings(settings(2));
        let r = faber_krahn_compare(&p, &[1.0]).unwrap();
        assert_eq!(r.domain_cells, r.ball_cells);
        assert!(r.alpha_margin.abs() <= 1e-9);
        assert!(r.h_convex && r.lambda_holds.is_some());
    }
}
