//! The reproducible verification suite: twelve numbered checks over seeded
//! random corpora, shared by the `verify` command and the acceptance tests.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eigen::{
    default_mu_grid, faber_krahn_compare, minimize_alpha_mu, scan_mu, EigenProblem,
    OptimizerSettings,
};
use crate::error::Result;
use crate::field::{DomainMask, Field, Grid, Mollifier};
use crate::kernel::KernelPair;
use crate::modular::{
    lg_norm, local_pairing, luxemburg, phi_g, translation_constant, translation_ratio, PairTable,
    Reach,
};
use crate::rearrange::{iterate_polarizations, polarize, schwarz};
use crate::sum::{map_indices, Exec};
use crate::young::{log_grid, YoungFunction};

/// Corpus sizes and the tolerances every check is held to.
pub mod limits {
    pub const CORPUS_1D: usize = 250;
    pub const CORPUS_2D: usize = 250;
    pub const ITERATED_FIELDS: usize = 100;
    pub const MOLLIFIER_PAIRS: usize = 100;
    pub const GRADIENT_PAIRS: usize = 100;
    pub const TRANSLATION_FIELDS: usize = 50;
    pub const LEVELS: usize = 32;

    pub const GROWTH_REL: f64 = 1e-10;
    pub const P3_ABS: f64 = 1e-4;
    pub const P4_MAX: f64 = 1e-8;
    pub const POLARIZATION_REL: f64 = 1e-12;
    pub const POLARIZATION_ABS: f64 = 1e-12;
    pub const SCHWARZ_REL: f64 = 1e-12;
    pub const NORM_REL: f64 = 1e-8;
    pub const ITERATED_TOL: f64 = 1e-6;
    pub const ITERATED_MAX_STEPS: usize = 10_000;
    pub const MOLLIFY_REL: f64 = 1e-12;
    pub const FD_REL: f64 = 1e-5;
    pub const FD_STEP: f64 = 1e-6;
    pub const DUALITY_REL: f64 = 1e-12;
    pub const BRACKET_REL: f64 = 1e-12;
    pub const SINGLE_CELL_REL: f64 = 1e-6;
    pub const HOMOGENEITY_REL: f64 = 1e-4;
    pub const FABER_KRAHN_MARGIN: f64 = 1e-3;
    pub const UNIT_BALL: f64 = 1e-8;
}

use limits::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Young functions exercised by every check.
    pub youngs: Vec<YoungFunction>,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            youngs: builtin_youngs(),
        }
    }

    /// Adds a function to the rotation unless an equal one is present.
    pub fn with_young(mut self, young: YoungFunction) -> Self {
        if !self.youngs.contains(&young) {
            self.youngs.push(young);
        }
        self
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self::new(0)
    }
}

/// One member of each built-in family.
pub fn builtin_youngs() -> Vec<YoungFunction> {
    vec![
        YoungFunction::power(2.5).expect("valid"),
        YoungFunction::power_sum(2.0, 3.0).expect("valid"),
        YoungFunction::power_log(2.0).expect("valid"),
    ]
}

/// The four admissible kernel families with the parameters used throughout.
pub fn suite_kernels(dim: usize) -> Vec<KernelPair> {
    let abs = if dim == 1 {
        KernelPair::abs(0.75, YoungFunction::power_sum(2.0, 3.0).expect("valid"), 1)
    } else {
        KernelPair::abs(0.5, YoungFunction::power(2.0).expect("valid"), dim)
    };
    vec![
        KernelPair::fractional(0.5, dim).expect("valid"),
        KernelPair::slobodetskii(dim).expect("valid"),
        KernelPair::besov_log(0.5, 0.25, dim).expect("valid"),
        abs.expect("valid"),
    ]
}

fn rng_for(seed: u64, stream: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(index as u128 * 4096);
    rng
}

/// Random nonnegative field of one of four shapes: dense noise, sparse
/// noise, a few bumps, or small integers (many ties).
pub fn random_nonnegative(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
    let kind = rng.gen_range(0..4);
    let len = grid.len();
    let values: Vec<f64> = match kind {
        0 => (0..len).map(|_| rng.gen::<f64>()).collect(),
        1 => (0..len)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    2.0 * rng.gen::<f64>()
                } else {
                    0.0
                }
            })
            .collect(),
        2 => {
            let extent = grid.half() as f64 * grid.spacing();
            let bumps: Vec<([f64; 2], f64, f64)> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let c = [
                        rng.gen_range(-extent..extent),
                        rng.gen_range(-extent..extent),
                    ];
                    (c, rng.gen_range(0.2..2.0), rng.gen_range(0.1..0.5) * extent)
                })
                .collect();
            (0..len)
                .map(|i| {
                    let x = grid.center(i);
                    bumps
                        .iter()
                        .map(|(c, a, w)| {
                            let mut r2 = (x[0] - c[0]).powi(2);
                            if grid.dim() == 2 {
                                r2 += (x[1] - c[1]).powi(2);
                            }
                            a * (-r2 / (w * w)).exp()
                        })
                        .sum()
                })
                .collect()
        }
        _ => (0..len).map(|_| rng.gen_range(0..4) as f64).collect(),
    };
    Field::from_values(grid, values).expect("finite by construction")
}

fn random_signed(grid: Grid, rng: &mut ChaCha8Rng, support: impl Fn(usize) -> bool) -> Field {
    let values = (0..grid.len())
        .map(|i| {
            if support(i) {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    Field::from_values(grid, values).expect("finite by construction")
}

struct Sample {
    field: Field,
    young: usize,
    table: (usize, usize, usize),
}

struct Corpus {
    samples: Vec<Sample>,
    tables: BTreeMap<(usize, usize, usize), PairTable>,
}

impl Corpus {
    fn table(&self, s: &Sample) -> &PairTable {
        &self.tables[&s.table]
    }
}

fn build_corpus(cfg: &SuiteConfig) -> Result<Corpus> {
    let kernels = [suite_kernels(1), suite_kernels(2)];
    let mut samples = Vec::with_capacity(CORPUS_1D + CORPUS_2D);
    let mut tables = BTreeMap::new();
    for i in 0..CORPUS_1D + CORPUS_2D {
        let mut rng = rng_for(cfg.seed, 1, i);
        let dim = if i < CORPUS_1D { 1 } else { 2 };
        let half = if dim == 1 {
            rng.gen_range(8..=32)
        } else {
            rng.gen_range(4..=6)
        };
        // spacings from a short list so tables are shared
        let spacing = [0.05, 0.1, 0.25][rng.gen_range(0..3)];
        let grid = Grid::new(dim, spacing, half)?;
        let kernel = i % 4;
        let young = (i / 4) % cfg.youngs.len();
        let key = (dim * 1000 + half, (spacing * 100.0) as usize, kernel);
        if let std::collections::btree_map::Entry::Vacant(slot) = tables.entry(key) {
            slot.insert(PairTable::new(
                grid,
                &kernels[dim - 1][kernel],
                Reach::tight(&grid),
            )?);
        }
        samples.push(Sample {
            field: random_nonnegative(grid, &mut rng),
            young,
            table: key,
        });
    }
    Ok(Corpus { samples, tables })
}

/// Collects failures and the worst observed value of some quantity.
#[derive(Default)]
struct Tally {
    checked: usize,
    failed: usize,
    notes: Vec<String>,
    info: Vec<String>,
    worst: f64,
}

impl Tally {
    fn check(&mut self, ok: bool, note: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.notes.len() < 3 {
                self.notes.push(note());
            }
        }
    }

    fn observe(&mut self, v: f64) {
        if v > self.worst || v.is_nan() {
            self.worst = v;
        }
    }

    fn error(&mut self, e: impl std::fmt::Display) {
        self.check(false, || e.to_string());
    }

    fn merge(&mut self, other: Tally) {
        self.checked += other.checked;
        self.failed += other.failed;
        for n in other.notes {
            if self.notes.len() < 3 {
                self.notes.push(n);
            }
        }
        self.observe(other.worst);
    }

    fn result(self, id: u8, name: &str, worst_label: &str) -> CriterionResult {
        let mut detail = format!("{} checks, {} failed", self.checked, self.failed);
        if !worst_label.is_empty() {
            detail.push_str(&format!(", {worst_label} {:.3e}", self.worst));
        }
        for i in &self.info {
            detail.push_str(", ");
            detail.push_str(i);
        }
        if !self.notes.is_empty() {
            detail.push_str("; ");
            detail.push_str(&self.notes.join("; "));
        }
        CriterionResult {
            id,
            name: name.into(),
            passed: self.failed == 0 && self.checked > 0,
            checked: self.checked,
            detail,
        }
    }
}

fn rel_excess(value: f64, bound: f64) -> f64 {
    (value - bound) / bound.abs().max(f64::MIN_POSITIVE)
}

fn young_framework(cfg: &SuiteConfig) -> CriterionResult {
    let ts = log_grid(1e-3, 1e3, 200);
    let mut t = Tally::default();
    for y in &cfg.youngs {
        let r = y.verify_properties(&ts);
        let failed = r.failed_points();
        t.check(r.all_pass(), || {
            format!("{:?}: {} point failures", y.family(), failed)
        });
    }
    t.result(1, "young framework", "")
}

fn kernel_closed_forms() -> CriterionResult {
    let mut t = Tally::default();
    let near = |t: &mut Tally, label: &str, got: Option<f64>, want: f64| {
        let err = got.map_or(f64::INFINITY, |g| (g - want).abs());
        t.observe(err);
        t.check(err <= P3_ABS, || format!("{label}: {got:?} vs {want}"));
    };
    let frac = KernelPair::fractional(0.5, 1)
        .expect("valid")
        .check_p3(2.0, 1e-10);
    near(&mut t, "fractional low", frac.low.value(), 1.0);
    near(&mut t, "fractional high", frac.high.value(), 1.0);
    let slob = KernelPair::slobodetskii(1).expect("valid");
    let p2 = slob.check_p3(2.0, 1e-10);
    near(&mut t, "slobodetskii p=2 low", p2.low.value(), 1.0);
    near(&mut t, "slobodetskii p=2 high", p2.high.value(), 1.0);
    near(
        &mut t,
        "slobodetskii p=3 high",
        slob.check_p3(3.0, 1e-10).high.value(),
        0.5,
    );
    for k in suite_kernels(1) {
        let q = k.check_p4(2.0).final_value;
        t.check(q <= P4_MAX, || {
            format!("{}: final quotient {q:e}", k.name())
        });
    }
    t.result(2, "kernel closed forms", "worst integral error")
}

/// Criteria 3 and the polarization half of 10 share one sweep.
fn polarization_sweep(cfg: &SuiteConfig, corpus: &Corpus) -> (CriterionResult, Tally) {
    let h_convex: Vec<bool> = cfg
        .youngs
        .iter()
        .map(|y| y.h_is_convex(&log_grid(1e-3, 1e3, 200)))
        .collect();
    let parts = map_indices(corpus.samples.len(), Exec::Parallel, |i| {
        let s = &corpus.samples[i];
        let young = &cfg.youngs[s.young];
        let table = corpus.table(s);
        let mut phi_t = Tally::default();
        let mut pair_t = Tally::default();
        let mut rng = rng_for(cfg.seed, 2, i);
        let u = &s.field;
        let (phi0, pair0) = match (table.phi_mng(u, young), table.pairing(u, u, young)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                phi_t.error(e);
                return (phi_t, pair_t);
            }
        };
        let mut sorted = u.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        let max = *sorted.last().expect("nonempty");
        let levels: Vec<f64> = (0..LEVELS)
            .map(|k| {
                if k % 2 == 0 {
                    sorted[rng.gen_range(0..sorted.len())]
                } else {
                    rng.gen_range(0.0..=max)
                }
            })
            .collect();
        for hs in u.grid().compatible_halfspaces() {
            let p = match polarize(u, &hs) {
                Ok(p) => p,
                Err(e) => {
                    phi_t.error(e);
                    continue;
                }
            };
            match table.phi_mng(&p, young) {
                Ok(phi1) => {
                    phi_t.observe(rel_excess(phi1, phi0));
                    phi_t.check(
                        phi1 <= phi0 * (1.0 + POLARIZATION_REL) + POLARIZATION_ABS,
                        || format!("field {i}, {hs:?}: {phi1} > {phi0}"),
                    );
                }
                Err(e) => phi_t.error(e),
            }
            let same = levels
                .iter()
                .all(|&l| p.superlevel_measure(l) == u.superlevel_measure(l));
            phi_t.check(same, || {
                format!("field {i}, {hs:?}: superlevel measures differ")
            });
            if h_convex[s.young] {
                match table.pairing(&p, &p, young) {
                    Ok(pair1) => {
                        pair_t.observe(rel_excess(pair1, pair0));
                        pair_t.check(
                            pair1 <= pair0 * (1.0 + POLARIZATION_REL) + POLARIZATION_ABS,
                            || format!("field {i}, {hs:?}: pairing {pair1} > {pair0}"),
                        );
                    }
                    Err(e) => pair_t.error(e),
                }
            }
        }
        (phi_t, pair_t)
    });
    let mut phi = Tally::default();
    let mut pair = Tally::default();
    for (a, b) in parts {
        phi.merge(a);
        pair.merge(b);
    }
    (
        phi.result(3, "one-step polarization", "worst relative increase"),
        pair,
    )
}

fn full_rearrangement(cfg: &SuiteConfig, corpus: &Corpus) -> CriterionResult {
    let ones: Vec<usize> = (0..corpus.samples.len())
        .filter(|&i| corpus.samples[i].field.grid().dim() == 1)
        .collect();
    let parts = map_indices(ones.len(), Exec::Parallel, |k| {
        let s = &corpus.samples[ones[k]];
        let young = &cfg.youngs[s.young];
        let table = corpus.table(s);
        let mut t = Tally::default();
        let run = |t: &mut Tally| -> Result<()> {
            let star = schwarz(&s.field)?;
            let a = table.phi_mng(&star, young)?;
            let b = table.phi_mng(&s.field, young)?;
            t.observe(rel_excess(a, b));
            t.check(a <= b * (1.0 + SCHWARZ_REL), || {
                format!("field {}: {a} > {b}", ones[k])
            });
            let na = luxemburg(&star, young, table)?;
            let nb = luxemburg(&s.field, young, table)?;
            t.check(na.seminorm <= nb.seminorm * (1.0 + NORM_REL), || {
                format!(
                    "field {}: seminorm {} > {}",
                    ones[k], na.seminorm, nb.seminorm
                )
            });
            t.check(na.full_norm <= nb.full_norm * (1.0 + NORM_REL), || {
                format!(
                    "field {}: full norm {} > {}",
                    ones[k], na.full_norm, nb.full_norm
                )
            });
            Ok(())
        };
        if let Err(e) = run(&mut t) {
            t.error(e);
        }
        t
    });
    let mut t = Tally::default();
    parts.into_iter().for_each(|p| t.merge(p));
    // 2D: reported only, the grid ball is not reachable by reflections
    let twos: Vec<usize> = (0..corpus.samples.len())
        .filter(|&i| corpus.samples[i].field.grid().dim() == 2)
        .collect();
    let excess = map_indices(twos.len(), Exec::Parallel, |k| {
        let s = &corpus.samples[twos[k]];
        let young = &cfg.youngs[s.young];
        let table = corpus.table(s);
        schwarz(&s.field)
            .and_then(|star| {
                Ok(rel_excess(
                    table.phi_mng(&star, young)?,
                    table.phi_mng(&s.field, young)?,
                ))
            })
            .unwrap_or(f64::NAN)
    });
    let above = excess.iter().filter(|&&e| !(e <= 0.0)).count();
    let worst = excess.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    t.info.push(format!(
        "2D (not asserted): {above}/{} above, worst relative excess {worst:.3e}",
        twos.len()
    ));
    t.result(4, "full rearrangement, 1D", "worst relative increase")
}

fn iterated_polarization(cfg: &SuiteConfig, corpus: &Corpus) -> CriterionResult {
    let ones: Vec<usize> = (0..corpus.samples.len())
        .filter(|&i| corpus.samples[i].field.grid().dim() == 1)
        .take(ITERATED_FIELDS)
        .collect();
    let parts = map_indices(ones.len(), Exec::Parallel, |k| {
        let s = &corpus.samples[ones[k]];
        let mut t = Tally::default();
        match iterate_polarizations(
            &s.field,
            cfg.seed.wrapping_add(k as u64),
            ITERATED_TOL,
            ITERATED_MAX_STEPS,
            &cfg.youngs[s.young],
            corpus.table(s),
        ) {
            Ok((_, trace)) => {
                t.observe(trace.iterations as f64);
                t.check(trace.converged, || {
                    format!(
                        "field {}: distance {} after {} steps",
                        ones[k],
                        trace
                            .steps
                            .last()
                            .map_or(trace.initial_distance, |s| s.distance),
                        trace.iterations
                    )
                });
                let up = trace.worst_increase();
                t.check(up <= POLARIZATION_REL, || {
                    format!("field {}: trace rose by {up:e}", ones[k])
                });
            }
            Err(e) => t.error(e),
        }
        t
    });
    let mut t = Tally::default();
    parts.into_iter().for_each(|p| t.merge(p));
    t.result(5, "iterated polarization, 1D", "most steps")
}

fn mollification(cfg: &SuiteConfig) -> CriterionResult {
    let parts = map_indices(MOLLIFIER_PAIRS, Exec::Parallel, |i| {
        let mut rng = rng_for(cfg.seed, 3, i);
        let mut t = Tally::default();
        let run = |t: &mut Tally, rng: &mut ChaCha8Rng| -> Result<()> {
            let dim = 1 + i % 2;
            let (half, radius): (usize, usize) = if dim == 1 {
                (rng.gen_range(8..=20), rng.gen_range(1..=3))
            } else {
                (rng.gen_range(4..=6), rng.gen_range(1..=2))
            };
            let grid = Grid::new(dim, [0.05, 0.1, 0.25][rng.gen_range(0..3)], half)?;
            let kernels = suite_kernels(dim);
            let kernel = &kernels[i / 2 % 4];
            let young = &cfg.youngs[i % cfg.youngs.len()];
            let table = PairTable::new(grid, kernel, Reach::tight(&grid))?;
            let k = half as i64 - radius as i64;
            let u = random_signed(grid, rng, |c| {
                let x = grid.coords(c);
                (0..dim).all(|a| x[a] >= -k && x[a] < k)
            });
            let raw: Vec<f64> = (0..(2 * radius + 1).pow(dim as u32))
                .map(|_| rng.gen::<f64>())
                .collect();
            let side = (2 * radius + 1) as i64;
            let r = radius as i64;
            let rho = Mollifier::from_profile(dim, radius, |z| {
                let idx = if dim == 1 {
                    z[0] + r
                } else {
                    (z[0] + r) * side + z[1] + r
                };
                raw[idx as usize]
            })?;
            let m = u.mollify(&rho)?;
            let (a, b) = (table.phi_mng(&m, young)?, table.phi_mng(&u, young)?);
            t.observe(rel_excess(a, b));
            t.check(a <= b * (1.0 + MOLLIFY_REL), || {
                format!("pair {i}: Φ_MNG {a} > {b}")
            });
            let (a, b) = (phi_g(&m, young)?, phi_g(&u, young)?);
            t.check(a <= b * (1.0 + MOLLIFY_REL), || {
                format!("pair {i}: Φ_G {a} > {b}")
            });
            Ok(())
        };
        if let Err(e) = run(&mut t, &mut rng) {
            t.error(e);
        }
        t
    });
    let mut t = Tally::default();
    parts.into_iter().for_each(|p| t.merge(p));
    t.result(6, "mollification", "worst relative increase")
}

fn gradient_duality(cfg: &SuiteConfig) -> CriterionResult {
    let parts = map_indices(GRADIENT_PAIRS, Exec::Parallel, |i| {
        let mut rng = rng_for(cfg.seed, 4, i);
        let mut t = Tally::default();
        let run = |t: &mut Tally, rng: &mut ChaCha8Rng| -> Result<()> {
            let dim = 1 + i % 2;
            let half = if dim == 1 { rng.gen_range(8..=16) } else { 4 };
            let grid = Grid::new(dim, [0.05, 0.1, 0.25][rng.gen_range(0..3)], half)?;
            let kernels = suite_kernels(dim);
            let table = PairTable::new(grid, &kernels[i / 2 % 4], Reach::tight(&grid))?;
            let young = &cfg.youngs[i % cfg.youngs.len()];
            let u = random_signed(grid, rng, |_| true);
            let v = random_signed(grid, rng, |_| true);
            let grad = table.gradient(&u, young)?;
            let scale = grad.values().iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let mut worst = 0.0f64;
            for c in 0..grid.len() {
                let step = FD_STEP * (1.0 + u.values()[c].abs());
                let mut up = u.values().to_vec();
                let mut dn = up.clone();
                up[c] += step;
                dn[c] -= step;
                let fp = table.phi_mng(&Field::from_values(grid, up)?, young)?;
                let fm = table.phi_mng(&Field::from_values(grid, dn)?, young)?;
                let fd = (fp - fm) / (2.0 * step);
                worst = worst.max((fd - grad.values()[c]).abs() / scale);
            }
            t.observe(worst);
            t.check(worst <= FD_REL, || {
                format!("pair {i}: finite-difference error {worst:e}")
            });
            let dual = crate::sum::sum(
                &grad
                    .values()
                    .iter()
                    .zip(v.values())
                    .map(|(a, b)| a * b)
                    .collect::<Vec<_>>(),
            );
            let pairing = table.pairing(&u, &v, young)?;
            let err = (dual - pairing).abs() / pairing.abs();
            t.check(err <= DUALITY_REL, || {
                format!("pair {i}: duality error {err:e}")
            });
            Ok(())
        };
        if let Err(e) = run(&mut t, &mut rng) {
            t.error(e);
        }
        t
    });
    let mut t = Tally::default();
    parts.into_iter().for_each(|p| t.merge(p));
    t.result(7, "gradient and duality", "worst finite-difference error")
}

fn eigen_settings(cfg: &SuiteConfig, restarts: usize) -> OptimizerSettings {
    OptimizerSettings {
        restarts,
        seed: cfg.seed,
        ..OptimizerSettings::default()
    }
}

fn brackets(cfg: &SuiteConfig, corpus: &Corpus) -> CriterionResult {
    let within =
        |v: f64, lo: f64, hi: f64| v >= lo * (1.0 - BRACKET_REL) && v <= hi * (1.0 + BRACKET_REL);
    let parts = map_indices(corpus.samples.len(), Exec::Parallel, |i| {
        let s = &corpus.samples[i];
        let young = &cfg.youngs[s.young];
        let (pm, pp) = (young.p_minus(), young.p_plus());
        let mut t = Tally::default();
        let run = |t: &mut Tally| -> Result<()> {
            let u = &s.field;
            let (phi, local) = (phi_g(u, young)?, local_pairing(u, young)?);
            t.check(within(local, pm * phi, pp * phi), || {
                format!("field {i}: Σ g(u)u = {local}, Φ_G = {phi}")
            });
            let table = corpus.table(s);
            let (phi, pair) = (table.phi_mng(u, young)?, table.pairing(u, u, young)?);
            t.check(within(pair, pm * phi, pp * phi), || {
                format!("field {i}: pairing {pair}, Φ_MNG {phi}")
            });
            Ok(())
        };
        if let Err(e) = run(&mut t) {
            t.error(e);
        }
        t
    });
    let mut t = Tally::default();
    parts.into_iter().for_each(|p| t.merge(p));
    // λ_μ against the minimizer's own objective
    let grid = Grid::new(1, 0.25, 6).expect("valid");
    let kernel = KernelPair::fractional(0.5, 1).expect("valid");
    let domain = DomainMask::from_boxes(grid, &[([-3, 0], [2, 0])]).expect("valid");
    for young in &cfg.youngs {
        let (pm, pp) = (young.p_minus(), young.p_plus());
        for mu in [0.1, 1.0, 10.0] {
            let run = EigenProblem::new(domain.clone(), mu, young.clone(), kernel.clone())
                .map(|p| p.with_settings(eigen_settings(cfg, 2)))
                .and_then(|p| minimize_alpha_mu(&p));
            match run {
                Ok(r) => {
                    let q = r.alpha_mu / mu;
                    t.check(within(r.lambda_mu, pm / pp * q, pp / pm * q), || {
                        format!(
                            "{:?} μ={mu}: λ {} outside bracket of {q}",
                            young.family(),
                            r.lambda_mu
                        )
                    });
                }
                Err(e) => t.error(e),
            }
        }
    }
    t.result(8, "exponent brackets", "")
}

fn eigen_sanity(cfg: &SuiteConfig) -> CriterionResult {
    let mut t = Tally::default();
    let grid = Grid::new(1, 0.5, 8).expect("valid");
    let kernel = KernelPair::fractional(0.5, 1).expect("valid");
    let reach = match Reach::default_for(&grid) {
        Reach::Lattice { cells } => cells as i64,
        Reach::GridOnly => unreachable!(),
    };
    let h = grid.spacing();
    for young in &cfg.youngs {
        for (cell, mu) in [([0i64, 0i64], 0.3), ([-5, 0], 2.0)] {
            let idx = grid.index(cell).expect("on grid");
            let domain = DomainMask::from_cells(grid, &[idx]).expect("valid");
            let run = || -> Result<f64> {
                let p = EigenProblem::new(domain, mu, young.clone(), kernel.clone())?
                    .with_settings(eigen_settings(cfg, 2));
                Ok(minimize_alpha_mu(&p)?.alpha_mu)
            };
            // G(t) h = μ, then every other lattice cell within reach
            let expected = young.inverse(mu / h).map(|amp| {
                (1..=reach)
                    .map(|j| {
                        let (m, n) = kernel.weights(j as f64 * h);
                        2.0 * 2.0 * young.value(amp / m) * h * h / n
                    })
                    .sum::<f64>()
            });
            match (run(), expected) {
                (Ok(a), Ok(b)) => {
                    let err = (a - b).abs() / b;
                    t.observe(err);
                    t.check(err <= SINGLE_CELL_REL, || {
                        format!("{:?}: {a} vs closed form {b}", young.family())
                    });
                }
                (Err(e), _) | (_, Err(e)) => t.error(e),
            }
        }
    }
    let power = YoungFunction::power(2.5).expect("valid");
    let domain =
        DomainMask::from_boxes(Grid::new(1, 0.25, 6).expect("valid"), &[([-3, 0], [2, 0])])
            .expect("valid");
    match EigenProblem::new(domain, 1.0, power, kernel.clone())
        .map(|p| p.with_settings(eigen_settings(cfg, 8)))
        .and_then(|p| scan_mu(&p, &default_mu_grid()))
    {
        Ok(scan) => {
            let ratios: Vec<f64> = scan.rows.iter().filter_map(|r| r.alpha_over_mu).collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            t.check(
                ratios.len() == scan.rows.len() && hi - lo <= HOMOGENEITY_REL * lo,
                || format!("α_μ/μ spread {:.3e} relative", (hi - lo) / lo),
            );
        }
        Err(e) => t.error(e),
    }
    t.result(9, "eigen sanity", "worst single-cell error")
}

/// Two separated 4-cell intervals against the centered 8-cell interval.
pub fn faber_krahn_setup(young: YoungFunction, cfg_seed: u64) -> Result<EigenProblem> {
    let grid = Grid::new(1, 0.25, 10)?;
    let domain = DomainMask::from_boxes(grid, &[([-8, 0], [-5, 0]), ([4, 0], [7, 0])])?;
    let kernel = KernelPair::fractional(0.5, 1)?;
    Ok(
        EigenProblem::new(domain, 1.0, young, kernel)?.with_settings(OptimizerSettings {
            restarts: 8,
            seed: cfg_seed,
            ..OptimizerSettings::default()
        }),
    )
}

fn faber_krahn(cfg: &SuiteConfig, pairing_sweep: Tally) -> CriterionResult {
    let mut t = Tally::default();
    let young = YoungFunction::power_sum(2.0, 3.0).expect("valid");
    match faber_krahn_setup(young, cfg.seed).and_then(|p| {
        let tol = p.settings.tol;
        faber_krahn_compare(&p, &default_mu_grid()).map(|r| (r, tol))
    }) {
        Ok((r, tol)) => {
            t.info.push(format!("α margin {:.3e}", r.alpha_margin));
            if let Some(m) = r.lambda_margin {
                t.info.push(format!("λ margin {m:.3e}"));
            }
            t.check(
                r.alpha_holds && r.alpha_margin >= FABER_KRAHN_MARGIN + tol,
                || format!("α margin {:.3e}", r.alpha_margin),
            );
            t.check(!r.h_convex || r.lambda_holds == Some(true), || {
                format!("λ margin {:?}", r.lambda_margin)
            });
        }
        Err(e) => t.error(e),
    }
    t.merge(pairing_sweep);
    t.result(10, "Faber-Krahn, 1D", "worst pairing increase")
}

fn translation_bound(cfg: &SuiteConfig) -> CriterionResult {
    let parts = map_indices(TRANSLATION_FIELDS, Exec::Parallel, |i| {
        let mut rng = rng_for(cfg.seed, 5, i);
        let mut t = Tally::default();
        let run = |t: &mut Tally, rng: &mut ChaCha8Rng| -> Result<()> {
            let dim = 1 + i % 2;
            let grid = Grid::new(dim, 0.05, if dim == 1 { 20 } else { 6 })?;
            let kernel = KernelPair::fractional(0.5, dim)?;
            let table = PairTable::new(grid, &kernel, Reach::tight(&grid))?;
            let young = &cfg.youngs[i % cfg.youngs.len()];
            let u = random_nonnegative(grid, rng);
            let shift = loop {
                let s = [
                    rng.gen_range(-9i64..=9),
                    if dim == 2 {
                        rng.gen_range(-9i64..=9)
                    } else {
                        0
                    },
                ];
                let len = grid.spacing() * ((s[0] * s[0] + s[1] * s[1]) as f64).sqrt();
                if len > 0.0 && len < 0.5 {
                    break s;
                }
            };
            let r = translation_ratio(&u, shift, young, &table, young.p_minus())?;
            let c = translation_constant(young, dim);
            t.observe(r.ratio / c);
            t.check(r.ratio <= c, || {
                format!("field {i}: ratio {} > {c}", r.ratio)
            });
            Ok(())
        };
        if let Err(e) = run(&mut t, &mut rng) {
            t.error(e);
        }
        t
    });
    let mut t = Tally::default();
    parts.into_iter().for_each(|p| t.merge(p));
    t.result(11, "translation bound", "worst ratio / constant")
}

fn luxemburg_contract(cfg: &SuiteConfig, corpus: &Corpus) -> CriterionResult {
    let parts = map_indices(corpus.samples.len(), Exec::Parallel, |i| {
        let s = &corpus.samples[i];
        let young = &cfg.youngs[s.young];
        let table = corpus.table(s);
        let mut t = Tally::default();
        let run = |t: &mut Tally| -> Result<()> {
            let u = &s.field;
            if u.is_zero() {
                return Ok(());
            }
            let n = luxemburg(u, young, table)?;
            let a = phi_g(&u.scaled(1.0 / n.lg_norm), young)?;
            let b = table.phi_mng(&u.scaled(1.0 / n.seminorm), young)?;
            let dev = (a - 1.0).abs().max((b - 1.0).abs());
            t.observe(dev);
            t.check(dev <= UNIT_BALL, || {
                format!("field {i}: Φ at the norm = {a}, {b}")
            });
            Ok(())
        };
        if let Err(e) = run(&mut t) {
            t.error(e);
        }
        t
    });
    let mut t = Tally::default();
    parts.into_iter().for_each(|p| t.merge(p));
    if let Some(s) = corpus.samples.first() {
        let zero = Field::zeros(*s.field.grid());
        for young in &cfg.youngs {
            let ok = luxemburg(&zero, young, corpus.table(s))
                .map(|n| n.lg_norm == 0.0 && n.seminorm == 0.0 && n.full_norm == 0.0)
                .unwrap_or(false)
                && lg_norm(&zero, young) == Ok(0.0);
            t.check(ok, || "zero field has a nonzero norm".into());
        }
    }
    t.result(12, "Luxemburg unit ball", "worst deviation")
}

fn failed(id: u8, name: &str, e: impl std::fmt::Display) -> CriterionResult {
    CriterionResult {
        id,
        name: name.into(),
        passed: false,
        checked: 0,
        detail: e.to_string(),
    }
}

/// Runs every check and reports them in order.
pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    run_selected(cfg, &(1..=12).collect::<Vec<_>>())
}

/// Runs the listed checks (ids 1 to 12).
pub fn run_selected(cfg: &SuiteConfig, ids: &[u8]) -> SuiteReport {
    let needs_corpus = ids.iter().any(|i| [3, 4, 5, 8, 10, 12].contains(i));
    let corpus = if needs_corpus {
        Some(build_corpus(cfg))
    } else {
        None
    };
    let mut sweep: Option<(CriterionResult, Tally)> = None;
    let mut criteria = Vec::new();
    for &id in ids {
        let corpus_ref = match &corpus {
            Some(Ok(c)) => Some(c),
            Some(Err(e)) if [3, 4, 5, 8, 10, 12].contains(&id) => {
                criteria.push(failed(id, "corpus", e));
                continue;
            }
            _ => None,
        };
        let r = match id {
            1 => young_framework(cfg),
            2 => kernel_closed_forms(),
            3 | 10 => {
                if sweep.is_none() {
                    sweep = Some(polarization_sweep(cfg, corpus_ref.expect("built")));
                }
                let (c3, pair) = sweep.as_mut().expect("set above");
                if id == 3 {
                    c3.clone()
                } else {
                    faber_krahn(cfg, std::mem::take(pair))
                }
            }
            4 => full_rearrangement(cfg, corpus_ref.expect("built")),
            5 => iterated_polarization(cfg, corpus_ref.expect("built")),
            6 => mollification(cfg),
            7 => gradient_duality(cfg),
            8 => brackets(cfg, corpus_ref.expect("built")),
            9 => eigen_sanity(cfg),
            11 => translation_bound(cfg),
            12 => luxemburg_contract(cfg, corpus_ref.expect("built")),
            other => failed(other, "unknown", format!("no check with id {other}")),
        };
        criteria.push(r);
    }
    SuiteReport {
        seed: cfg.seed,
        criteria,
    }
}
