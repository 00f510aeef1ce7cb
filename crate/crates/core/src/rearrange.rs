//! Symmetric decreasing rearrangement and two-point rearrangements.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, HalfSpace};
use crate::modular::{lg_norm, PairTable};
use crate::young::YoungFunction;

fn check_nonnegative(u: &Field) -> Result<()> {
    let g = u.grid();
    match u.values().iter().position(|&v| v < 0.0) {
        Some(i) => Err(Error::Sign {
            cell: g.coords(i)[..g.dim()].to_vec(),
            value: u.values()[i],
        }),
        None => Ok(()),
    }
}

/// Values sorted in decreasing order and placed on cells by increasing
/// distance to the origin (ties: lexicographically smaller center first).
pub fn schwarz(u: &Field) -> Result<Field> {
    check_nonnegative(u)?;
    let mut vals = u.values().to_vec();
    vals.sort_by(|a, b| b.total_cmp(a));
    let mut out = vec![0.0; vals.len()];
    for (v, cell) in vals.into_iter().zip(u.grid().rearrangement_order()) {
        out[cell] = v;
    }
    Field::from_values(*u.grid(), out)
}

/// `max(u(x), u(x̃))` on `H`, `min` on its mirror image.
pub fn polarize(u: &Field, hs: &HalfSpace) -> Result<Field> {
    let g = *u.grid();
    hs.check_compatible(&g)?;
    let src = u.values();
    let mut out = src.to_vec();
    for i in 0..g.len() {
        let c = g.coords(i);
        if !hs.contains(c) {
            continue;
        }
        match g.index(hs.reflect(c)) {
            Some(j) if j == i => {}
            Some(j) => {
                out[i] = src[i].max(src[j]);
                out[j] = src[i].min(src[j]);
            }
            None if src[i] < 0.0 => {
                return Err(Error::Sign {
                    cell: c[..g.dim()].to_vec(),
                    value: src[i],
                });
            }
            None => {}
        }
    }
    Field::from_values(g, out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub halfspace: HalfSpace,
    /// `Φ_{M,N,G}` after the step.
    pub phi: f64,
    /// `L^G` distance to the rearrangement after the step.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarizationTrace {
    pub initial_phi: f64,
    pub initial_distance: f64,
    pub steps: Vec<TraceStep>,
    pub iterations: usize,
    pub converged: bool,
}

impl PolarizationTrace {
    /// Largest relative increase of `Φ` between consecutive entries.
    pub fn worst_increase(&self) -> f64 {
        let mut prev = self.initial_phi;
        let mut worst = 0.0f64;
        for s in &self.steps {
            if s.phi > prev {
                worst = worst.max((s.phi - prev) / prev.max(f64::MIN_POSITIVE));
            }
            prev = s.phi;
        }
        worst
    }
}

/// Polarizes along seeded, shuffled sweeps over the 1D boundaries that keep
/// the origin on the `H` side, until the `L^G` distance to `schwarz(u)` drops
/// to `tol` or `max_iter` steps have been taken.
pub fn iterate_polarizations(
    u: &Field,
    seed: u64,
    tol: f64,
    max_iter: usize,
    young: &YoungFunction,
    table: &PairTable,
) -> Result<(Field, PolarizationTrace)> {
    if u.grid().dim() != 1 {
        return Err(Error::InvalidParameter(
            "iterated polarization is 1D only".into(),
        ));
    }
    let target = schwarz(u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boundaries = u.grid().origin_halfspaces_1d();
    let mut current = u.clone();
    let mut phi = table.phi_mng(&current, young)?;
    let mut distance = lg_norm(&current.sub(&target)?, young)?;
    let mut trace = PolarizationTrace {
        initial_phi: phi,
        initial_distance: distance,
        steps: Vec::new(),
        iterations: 0,
        converged: distance <= tol,
    };
    let mut sweep: Vec<HalfSpace> = Vec::new();
    while !trace.converged && trace.iterations < max_iter {
        if sweep.is_empty() {
            sweep = boundaries.clone();
            sweep.shuffle(&mut rng);
        }
        let hs = sweep.pop().expect("refilled above");
        let next = polarize(&current, &hs)?;
        if next != current {
            current = next;
            phi = table.phi_mng(&current, young)?;
            distance = lg_norm(&current.sub(&target)?, young)?;
        }
        trace.iterations += 1;
        trace.steps.push(TraceStep {
            halfspace: hs,
            phi,
            distance,
        });
        trace.converged = distance <= tol;
    }
    Ok((current, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Boundary, Grid, Side};
    use crate::kernel::KernelPair;
    use crate::modular::Reach;

    fn g1(k: usize) -> Grid {
        Grid::new(1, 1.0, k).unwrap()
    }

    #[test]
    fn schwarz_examples() {
        let u = Field::from_values(g1(2), vec![1.0, 0.0, 2.0, 0.0]).unwrap();
        assert_eq!(schwarz(&u).unwrap().values(), &[0.0, 2.0, 1.0, 0.0]);
        let s = Field::from_values(g1(2), vec![0.5, 3.0, 1.0, 0.2]).unwrap();
        assert_eq!(schwarz(&s).unwrap(), s);
        let c = Field::from_values(g1(2), vec![0.7; 4]).unwrap();
        assert_eq!(schwarz(&c).unwrap(), c);
        let neg = Field::from_values(g1(2), vec![0.0, -1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            schwarz(&neg).unwrap_err(),
            Error::Sign {
                cell: vec![-1],
                value: -1.0
            }
        );
    }

    #[test]
    fn polarize_examples() {
        let u = Field::from_values(g1(1), vec![3.0, 1.0]).unwrap();
        let upper = HalfSpace::axis(0, 0, Side::Upper);
        let lower = HalfSpace::axis(0, 0, Side::Lower);
        assert_eq!(polarize(&u, &upper).unwrap().values(), &[1.0, 3.0]);
        assert_eq!(polarize(&u, &lower).unwrap(), u);

        let g = Grid::new(2, 1.0, 2).unwrap();
        let mut v = vec![0.0; g.len()];
        v[g.index([-2, 1]).unwrap()] = 5.0;
        let u = Field::from_values(g, v).unwrap();
        let hs = HalfSpace::axis(0, 0, Side::Upper);
        let p = polarize(&u, &hs).unwrap();
        assert_eq!(p.get([1, 1]), 5.0);
        assert_eq!(p.get([-2, 1]), 0.0);
        let d = HalfSpace {
            boundary: Boundary::Diagonal,
            side: Side::Lower,
        };
        let p = polarize(&u, &d).unwrap();
        assert_eq!(p.get([-2, 1]), 5.0);

        assert!(polarize(&u, &HalfSpace::axis(0, 4, Side::Upper)).is_err());
    }

    #[test]
    fn polarize_is_idempotent_and_preserves_values() {
        let g = g1(4);
        let u = Field::from_values(g, vec![0.1, 4.0, 0.0, 2.0, 2.0, 0.3, 1.0, 0.0]).unwrap();
        for hs in g.compatible_halfspaces() {
            let p = polarize(&u, &hs).unwrap();
            assert_eq!(polarize(&p, &hs).unwrap(), p);
            let mut a = u.values().to_vec();
            let mut b = p.values().to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn iteration_reaches_the_rearrangement() {
        let g = g1(2);
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let t = PairTable::new(g, &k, Reach::default_for(&g)).unwrap();
        let y = YoungFunction::power(2.0).unwrap();
        let u = Field::from_values(g, vec![1.0, 0.0, 2.0, 0.0]).unwrap();
        let (end, trace) = iterate_polarizations(&u, 7, 1e-6, 10_000, &y, &t).unwrap();
        assert!(trace.converged);
        assert_eq!(end.values(), &[0.0, 2.0, 1.0, 0.0]);
        assert!(trace.worst_increase() <= 1e-12);

        let s = schwarz(&u).unwrap();
        let (_, trace) = iterate_polarizations(&s, 7, 1e-6, 10_000, &y, &t).unwrap();
        assert!(trace.converged && trace.iterations == 0);
    }
}
