//! The modulars `Φ_G` and `Φ_{M,N,G}`, their Luxemburg norms, the nonlocal
//! pairing and its gradient.
//!
//! The double integral is a midpoint sum over lattice cells. A field lives on
//! the grid and is zero on every other lattice cell; pairs are kept when their
//! centers are at most `reach` cells apart. With a reach at least the grid
//! diameter every grid pair is present, and the sum is invariant under every
//! lattice isometry, which is what makes polarization and mollification
//! inequalities hold exactly. `Reach::GridOnly` drops all pairs leaving the
//! grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Coords, DomainMask, Field, Grid};
use crate::kernel::KernelPair;
use crate::sum::{chunked_sum, map_indices, Exec, Neumaier};
use crate::young::YoungFunction;

/// Which pairs enter the double sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reach {
    /// Pairs of grid cells only.
    GridOnly,
    /// Pairs of lattice cells at most `cells` cell widths apart.
    Lattice { cells: usize },
}

impl Reach {
    /// `4K` cells.
    pub fn default_for(grid: &Grid) -> Self {
        Reach::Lattice {
            cells: 4 * grid.half(),
        }
    }

    /// Smallest lattice reach covering every pair of grid cells.
    pub fn tight(grid: &Grid) -> Self {
        let d2 = grid.diameter2_cells();
        let mut cells = (d2 as f64).sqrt() as usize;
        while ((cells * cells) as i64) < d2 {
            cells += 1;
        }
        Reach::Lattice { cells }
    }
}

/// Pairs at squared distance `d2 · h^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceClass {
    pub d2: i64,
    pub distance: f64,
    /// `M(d)`
    pub m: f64,
    /// `h^{2n} / N(d)`
    pub weight: f64,
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    a: u32,
    b: u32,
    class: u32,
}

/// Pair structure for a grid, a kernel and a set of active cells.
///
/// Fields handed to the table must vanish off the active set. Pairs of two
/// active cells are stored explicitly; pairs of an active cell with a zero
/// cell only depend on the distance, so they are stored as counts per class.
#[derive(Debug, Clone)]
pub struct PairTable {
    grid: Grid,
    kernel: KernelPair,
    reach: Reach,
    active: Vec<usize>,
    slot: Vec<Option<u32>>,
    classes: Vec<DistanceClass>,
    pairs: Vec<Pair>,
    neighbors: Vec<Vec<(u32, u32)>>,
    exterior: Vec<Vec<(u32, u32)>>,
    exec: Exec,
}

impl PairTable {
    /// Table over every grid cell.
    pub fn new(grid: Grid, kernel: &KernelPair, reach: Reach) -> Result<Self> {
        Self::build(grid, kernel, reach, (0..grid.len()).collect())
    }

    /// Table for fields supported in a domain.
    pub fn on_domain(mask: &DomainMask, kernel: &KernelPair, reach: Reach) -> Result<Self> {
        let cells = mask.cells();
        if cells.is_empty() {
            return Err(Error::InvalidParameter("domain has no cells".into()));
        }
        Self::build(*mask.grid(), kernel, reach, cells)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    fn build(grid: Grid, kernel: &KernelPair, reach: Reach, active: Vec<usize>) -> Result<Self> {
        if kernel.dim() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "kernel is {}D, grid is {}D",
                kernel.dim(),
                grid.dim()
            )));
        }
        let reach2 = match reach {
            Reach::GridOnly => None,
            Reach::Lattice { cells } => {
                let r2 = (cells * cells) as i64;
                if r2 < grid.diameter2_cells() {
                    return Err(Error::InvalidParameter(format!(
                        "reach of {cells} cells is below the grid diameter"
                    )));
                }
                Some(r2)
            }
        };

        // population of the "universe" of partner cells by squared distance,
        // seen from an active cell
        let universe_counts = |c: Coords| -> Vec<(i64, u32)> {
            let mut hist = std::collections::BTreeMap::<i64, u32>::new();
            match reach2 {
                None => {
                    for j in 0..grid.len() {
                        let o = grid.coords(j);
                        let d2 = (o[0] - c[0]).pow(2) + (o[1] - c[1]).pow(2);
                        if d2 > 0 {
                            *hist.entry(d2).or_default() += 1;
                        }
                    }
                }
                Some(r2) => {
                    let r = (r2 as f64).sqrt() as i64 + 1;
                    let span1 = if grid.dim() == 2 { r } else { 0 };
                    for a in -r..=r {
                        for b in -span1..=span1 {
                            let d2 = a * a + b * b;
                            if d2 > 0 && d2 <= r2 {
                                *hist.entry(d2).or_default() += 1;
                            }
                        }
                    }
                }
            }
            hist.into_iter().collect()
        };

        let mut slot = vec![None; grid.len()];
        for (k, &i) in active.iter().enumerate() {
            slot[i] = Some(k as u32);
        }

        let mut class_of = std::collections::BTreeMap::<i64, u32>::new();
        let mut classes = Vec::new();
        let mut class_index = |d2: i64, classes: &mut Vec<DistanceClass>| -> Result<u32> {
            if let Some(&c) = class_of.get(&d2) {
                return Ok(c);
            }
            let distance = grid.spacing() * (d2 as f64).sqrt();
            let (m, n) = kernel.eval(distance)?;
            let weight = grid.cell_measure().powi(2) / n;
            if !(m > 0.0 && m.is_finite() && weight > 0.0 && weight.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "kernel weights at distance {distance} are not positive and finite (M = {m}, N = {n})"
                )));
            }
            let c = classes.len() as u32;
            classes.push(DistanceClass {
                d2,
                distance,
                m,
                weight,
            });
            class_of.insert(d2, c);
            Ok(c)
        };

        let mut pairs = Vec::new();
        let mut neighbors = vec![Vec::new(); active.len()];
        for (ka, &a) in active.iter().enumerate() {
            for (kb, &b) in active.iter().enumerate().skip(ka + 1) {
                let d2 = grid.dist2_cells(a, b);
                if reach2.is_some_and(|r2| d2 > r2) {
                    continue;
                }
                let class = class_index(d2, &mut classes)?;
                pairs.push(Pair {
                    a: ka as u32,
                    b: kb as u32,
                    class,
                });
                neighbors[ka].push((kb as u32, class));
                neighbors[kb].push((ka as u32, class));
            }
        }

        let mut exterior = Vec::with_capacity(active.len());
        for &a in &active {
            let c = grid.coords(a);
            let mut counts = universe_counts(c);
            for &b in &active {
                let d2 = grid.dist2_cells(a, b);
                if d2 == 0 || reach2.is_some_and(|r2| d2 > r2) {
                    continue;
                }
                if let Ok(pos) = counts.binary_search_by_key(&d2, |e| e.0) {
                    counts[pos].1 -= 1;
                }
            }
            let mut row = Vec::new();
            for (d2, count) in counts {
                if count > 0 {
                    row.push((class_index(d2, &mut classes)?, count));
                }
            }
            exterior.push(row);
        }

        Ok(Self {
            grid,
            kernel: kernel.clone(),
            reach,
            active,
            slot,
            classes,
            pairs,
            neighbors,
            exterior,
            exec: Exec::default(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelPair {
        &self.kernel
    }

    pub fn reach(&self) -> Reach {
        self.reach
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn classes(&self) -> &[DistanceClass] {
        &self.classes
    }

    pub fn active_cells(&self) -> &[usize] {
        &self.active
    }

    /// Number of stored active-active pairs.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Values on the active cells; errors if `u` is nonzero elsewhere.
    fn active_values(&self, u: &Field) -> Result<Vec<f64>> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                u.grid(),
                self.grid
            )));
        }
        let vals = u.values();
        if self.active.len() != vals.len() {
            if let Some(i) = (0..vals.len()).find(|&i| self.slot[i].is_none() && vals[i] != 0.0) {
                return Err(Error::Domain(format!(
                    "field is nonzero at cell {:?} outside the active set",
                    &self.grid.coords(i)[..self.grid.dim()]
                )));
            }
        }
        Ok(self.active.iter().map(|&i| vals[i]).collect())
    }

    fn phi_on(&self, v: &[f64], scale: f64, young: &YoungFunction) -> f64 {
        let cl = &self.classes;
        let inner = chunked_sum(self.pairs.len(), self.exec, |k| {
            let p = self.pairs[k];
            let c = cl[p.class as usize];
            young.value((v[p.a as usize] - v[p.b as usize]) * scale / c.m) * c.weight
        });
        let outer = chunked_sum(v.len(), self.exec, |a| {
            if v[a] == 0.0 {
                return 0.0;
            }
            let mut acc = Neumaier::new();
            for &(class, count) in &self.exterior[a] {
                let c = cl[class as usize];
                acc.add(count as f64 * young.value(v[a] * scale / c.m) * c.weight);
            }
            acc.value()
        });
        2.0 * (inner + outer)
    }

    /// `Φ_{M,N,G}(u)`, counting ordered pairs.
    pub fn phi_mng(&self, u: &Field, young: &YoungFunction) -> Result<f64> {
        let v = self.active_values(u)?;
        finite(self.phi_on(&v, 1.0, young), "Φ_{M,N,G}")
    }

    /// `Σ_{ordered pairs} g(D u) D v dμ_N`.
    pub fn pairing(&self, u: &Field, v: &Field, young: &YoungFunction) -> Result<f64> {
        u.same_grid(v)?;
        let a = self.active_values(u)?;
        let b = self.active_values(v)?;
        let cl = &self.classes;
        let inner = chunked_sum(self.pairs.len(), self.exec, |k| {
            let p = self.pairs[k];
            let c = cl[p.class as usize];
            let du = (a[p.a as usize] - a[p.b as usize]) / c.m;
            if du == 0.0 {
                return 0.0;
            }
            young.derivative(du) * (b[p.a as usize] - b[p.b as usize]) / c.m * c.weight
        });
        let outer = chunked_sum(a.len(), self.exec, |i| {
            if a[i] == 0.0 {
                return 0.0;
            }
            let mut acc = Neumaier::new();
            for &(class, count) in &self.exterior[i] {
                let c = cl[class as usize];
                acc.add(count as f64 * young.derivative(a[i] / c.m) * b[i] / c.m * c.weight);
            }
            acc.value()
        });
        finite(2.0 * (inner + outer), "pairing")
    }

    /// `∂Φ_{M,N,G} / ∂u_i` for every grid cell (zero off the active set).
    pub fn gradient(&self, u: &Field, young: &YoungFunction) -> Result<Field> {
        let v = self.active_values(u)?;
        let cl = &self.classes;
        let per_cell = map_indices(v.len(), self.exec, |i| {
            let mut acc = Neumaier::new();
            for &(j, class) in &self.neighbors[i] {
                let c = cl[class as usize];
                let d = (v[i] - v[j as usize]) / c.m;
                if d != 0.0 {
                    acc.add(young.derivative(d) / c.m * c.weight);
                }
            }
            if v[i] != 0.0 {
                for &(class, count) in &self.exterior[i] {
                    let c = cl[class as usize];
                    acc.add(count as f64 * young.derivative(v[i] / c.m) / c.m * c.weight);
                }
            }
            2.0 * acc.value()
        });
        let mut out = vec![0.0; self.grid.len()];
        for (k, &i) in self.active.iter().enumerate() {
            out[i] = per_cell[k];
        }
        Field::from_values(self.grid, out)
            .map_err(|_| Error::OutOfRange("gradient overflowed".into()))
    }

    /// Luxemburg norm of the nonlocal modular, `[u]_{M,N,G}`.
    pub fn seminorm(&self, u: &Field, young: &YoungFunction) -> Result<f64> {
        let v = self.active_values(u)?;
        if self.phi_on(&v, 1.0, young) == 0.0 {
            return Ok(0.0);
        }
        let start = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        luxemburg_root(start, |lambda| self.phi_on(&v, 1.0 / lambda, young))
    }
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::OutOfRange(format!("{what} is not finite")))
    }
}

/// `Σ G(u_i) h^n`.
pub fn phi_g(u: &Field, young: &YoungFunction) -> Result<f64> {
    let v = u.values();
    let total = chunked_sum(v.len(), Exec::Sequential, |i| young.value(v[i]));
    finite(total * u.grid().cell_measure(), "Φ_G")
}

/// `Σ g(u_i) u_i h^n`.
pub fn local_pairing(u: &Field, young: &YoungFunction) -> Result<f64> {
    let v = u.values();
    let total = chunked_sum(v.len(), Exec::Sequential, |i| young.derivative(v[i]) * v[i]);
    finite(total * u.grid().cell_measure(), "Σ g(u) u")
}

/// Smallest `λ` with `modular(λ) <= 1` for a modular decreasing in `λ`.
fn luxemburg_root(start: f64, modular: impl Fn(f64) -> f64) -> Result<f64> {
    let first = modular(start);
    if !first.is_finite() {
        return Err(Error::OutOfRange(format!(
            "modular is not finite at λ = {start}"
        )));
    }
    let (mut lo, mut hi) = (start, start);
    if first > 1.0 {
        while modular(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::OutOfRange("norm bracket overflowed".into()));
            }
        }
    } else {
        loop {
            let m = modular(lo);
            if m > 1.0 {
                break;
            }
            hi = lo;
            lo *= 0.5;
            if lo == 0.0 {
                return Ok(hi);
            }
        }
    }
    // bisect all the way to neighbouring floats; this is much tighter than
    // the 1e-10 relative bracket the unit-ball check needs
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = modular(mid);
        if !m.is_finite() {
            return Err(Error::OutOfRange(format!(
                "modular is not finite at λ = {mid}"
            )));
        }
        if m > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub lg_norm: f64,
    pub seminorm: f64,
    pub full_norm: f64,
}

/// Luxemburg norm of `Φ_G`.
pub fn lg_norm(u: &Field, young: &YoungFunction) -> Result<f64> {
    if u.is_zero() {
        return Ok(0.0);
    }
    let start = u.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let v = u.values();
    let h = u.grid().cell_measure();
    luxemburg_root(start, |lambda| {
        chunked_sum(v.len(), Exec::Sequential, |i| young.value(v[i] / lambda)) * h
    })
}

pub fn luxemburg(u: &Field, young: &YoungFunction, table: &PairTable) -> Result<Norms> {
    let lg = lg_norm(u, young)?;
    let semi = table.seminorm(u, young)?;
    Ok(Norms {
        lg_norm: lg,
        seminorm: semi,
        full_norm: lg + semi,
    })
}

/// Volume of the unit ball.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        n => {
            // ω_n = 2π/n · ω_{n-2}
            2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranslationRatio {
    /// `Φ_G(τ_h u - u)`
    pub lhs: f64,
    /// `N(2|h|) M(2|h|)^{p-} / |h|^n · Φ_{M,N,G}(u)`
    pub bound_factor: f64,
    pub ratio: f64,
}

/// `2 C_Δ2 / ω_n`.
pub fn translation_constant(young: &YoungFunction, dim: usize) -> f64 {
    2.0 * young.delta2_constant() / unit_ball_volume(dim)
}

/// Compares `Φ_G(τ_h u - u)` with the translation bound for a shift of
/// whole cells; `|h|` must lie in `(0, 1/2)`.
pub fn translation_ratio(
    u: &Field,
    shift: Coords,
    young: &YoungFunction,
    table: &PairTable,
    p_minus: f64,
) -> Result<TranslationRatio> {
    let grid = *u.grid();
    let len = grid.spacing() * ((shift[0] * shift[0] + shift[1] * shift[1]) as f64).sqrt();
    if !(len > 0.0 && len < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "shift length {len} is outside (0, 1/2)"
        )));
    }
    if u.is_zero() {
        return Ok(TranslationRatio {
            lhs: 0.0,
            bound_factor: 0.0,
            ratio: 0.0,
        });
    }
    let diff = u.translate(shift).sub(u)?;
    let mut lhs = phi_g(&diff, young)?;
    // cells whose preimage under the shift leaves the grid
    let mut acc = Neumaier::new();
    for (i, &v) in u.values().iter().enumerate() {
        let c = grid.coords(i);
        if v != 0.0 && grid.index([c[0] - shift[0], c[1] - shift[1]]).is_none() {
            acc.add(young.value(v));
        }
    }
    lhs += acc.value() * grid.cell_measure();
    let phi = table.phi_mng(u, young)?;
    let (m, n) = table.kernel().eval(2.0 * len)?;
    let bound_factor = n * m.powf(p_minus) / len.powi(grid.dim() as i32) * phi;
    if bound_factor == 0.0 {
        return Err(Error::ZeroDenominator(
            "Φ_{M,N,G}(u) vanishes for a nonzero field".into(),
        ));
    }
    Ok(TranslationRatio {
        lhs,
        bound_factor,
        ratio: lhs / bound_factor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingBound {
    /// `Φ_{M,N,G}(u)`
    pub lhs: f64,
    /// `Φ_G(|∇u|) + Φ_G(u)`
    pub rhs: f64,
    pub ratio: f64,
}

/// `n ω_n max(I_low, 2 C_Δ2 I_high)` from the two integrability integrals.
pub fn embedding_constant(young: &YoungFunction, kernel: &KernelPair) -> Result<f64> {
    let p3 = kernel.check_p3(young.p_minus(), 1e-10);
    let (low, high) = match (p3.low.value(), p3.high.value()) {
        (Some(l), Some(h)) => (l, h),
        _ => return Err(Error::OutOfRange("integrability integrals diverge".into())),
    };
    let n = kernel.dim();
    Ok(n as f64 * unit_ball_volume(n) * low.max(2.0 * young.delta2_constant() * high))
}

/// `grad` holds one field of exact partial derivatives per axis.
pub fn embedding_bound(
    u: &Field,
    grad: &[Field],
    young: &YoungFunction,
    table: &PairTable,
) -> Result<EmbeddingBound> {
    let grid = *u.grid();
    if grad.len() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "{} gradient components for a {}D grid",
            grad.len(),
            grid.dim()
        )));
    }
    for g in grad {
        u.same_grid(g)?;
    }
    let norm: Vec<f64> = (0..grid.len())
        .map(|i| {
            grad.iter()
                .map(|g| g.values()[i].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let lhs = table.phi_mng(u, young)?;
    let rhs = phi_g(&Field::from_values(grid, norm)?, young)? + phi_g(u, young)?;
    let ratio = if rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(EmbeddingBound { lhs, rhs, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PoincareCheck {
    /// `Φ_G(u) <= Φ_{M,N,G}(C u)`
    pub modular: bool,
    /// `‖u‖_G <= C [u]_{M,N,G}`
    pub norm: bool,
}

impl PoincareCheck {
    pub fn passed(&self) -> bool {
        self.modular && self.norm
    }
}

pub fn poincare_check(
    u: &Field,
    young: &YoungFunction,
    table: &PairTable,
    c_trial: f64,
) -> Result<PoincareCheck> {
    let lhs = phi_g(u, young)?;
    let rhs = table.phi_mng(&u.scaled(c_trial), young)?;
    let norm = lg_norm(u, young)? <= c_trial * table.seminorm(u, young)?;
    Ok(PoincareCheck {
        modular: lhs <= rhs,
        norm,
    })
}

/// First `c_start · factor^k` passing both Poincaré checks for every field.
pub fn smallest_poincare_constant(
    fields: &[Field],
    young: &YoungFunction,
    table: &PairTable,
    c_start: f64,
    factor: f64,
    max_steps: usize,
) -> Result<Option<f64>> {
    if !(c_start > 0.0 && factor > 1.0) {
        return Err(Error::InvalidParameter(
            "search needs c_start > 0 and factor > 1".into(),
        ));
    }
    let mut c = c_start;
    for _ in 0..max_steps {
        let mut all = true;
        for u in fields {
            if !poincare_check(u, young, table, c)?.passed() {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(c));
        }
        c *= factor;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Mollifier;

    fn sq() -> YoungFunction {
        YoungFunction::power(2.0).unwrap()
    }

    fn two_cells() -> (Field, PairTable) {
        let g = Grid::new(1, 1.0, 1).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let t = PairTable::new(g, &k, Reach::GridOnly).unwrap();
        (Field::from_values(g, vec![0.0, 1.0]).unwrap(), t)
    }

    /// Brute force over ordered pairs of lattice cells `-L..L` (field zero
    /// off the grid), keeping pairs within `reach` cells.
    fn brute_phi(u: &Field, young: &YoungFunction, k: &KernelPair, reach: i64) -> f64 {
        let g = u.grid();
        let h = g.spacing();
        let l = g.half() as i64 + reach + 1;
        let mut total = 0.0;
        let cells: Vec<i64> = (-l..l).collect();
        for &x in &cells {
            for &y in &cells {
                let d2 = (x - y) * (x - y);
                if d2 == 0 || d2 > reach * reach {
                    continue;
                }
                let ux = u.get([x, 0]);
                let uy = u.get([y, 0]);
                if ux == 0.0 && uy == 0.0 {
                    continue;
                }
                let d = h * (d2 as f64).sqrt();
                let (m, n) = k.eval(d).unwrap();
                total += young.value((ux - uy) / m) * h * h / n;
            }
        }
        total
    }

    #[test]
    fn phi_g_examples() {
        let g = Grid::new(1, 1.0, 2).unwrap();
        let u = Field::from_values(g, vec![0.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(phi_g(&u, &sq()).unwrap(), 4.0);
        assert_eq!(phi_g(&Field::zeros(g), &sq()).unwrap(), 0.0);
        let g = Grid::new(1, 0.5, 1).unwrap();
        let u = Field::from_values(g, vec![1.0, 1.0]).unwrap();
        assert_eq!(phi_g(&u, &sq()).unwrap(), 1.0);
    }

    #[test]
    fn two_cell_examples() {
        let (u, t) = two_cells();
        assert_eq!(t.phi_mng(&u, &sq()).unwrap(), 2.0);
        assert_eq!(t.pairing(&u, &u, &sq()).unwrap(), 4.0);
        assert_eq!(t.gradient(&u, &sq()).unwrap().values(), &[-4.0, 4.0]);
        let semi = t.seminorm(&u, &sq()).unwrap();
        assert!((semi - 2f64.sqrt()).abs() < 1e-12);
        let c = Field::from_values(*u.grid(), vec![3.0, 3.0]).unwrap();
        assert_eq!(t.phi_mng(&c, &sq()).unwrap(), 0.0);
        assert_eq!(t.pairing(&u, &c, &sq()).unwrap(), 0.0);
        assert!(t.gradient(&c, &sq()).unwrap().is_zero());
    }

    #[test]
    fn lattice_sum_matches_brute_force() {
        let g = Grid::new(1, 0.25, 4).unwrap();
        let u = Field::from_values(g, vec![0.0, 0.3, -1.0, 2.0, 0.5, 0.0, 0.1, 0.7]).unwrap();
        for (young, k) in [
            (sq(), KernelPair::fractional(0.3, 1).unwrap()),
            (
                YoungFunction::power_log(2.0).unwrap(),
                KernelPair::slobodetskii(1).unwrap(),
            ),
            (
                YoungFunction::power_sum(2.0, 3.0).unwrap(),
                KernelPair::besov_log(0.5, 0.25, 1).unwrap(),
            ),
        ] {
            for reach in [7usize, 16, 23] {
                let t = PairTable::new(g, &k, Reach::Lattice { cells: reach }).unwrap();
                let a = t.phi_mng(&u, &young).unwrap();
                let b = brute_phi(&u, &young, &k, reach as i64);
                assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
            }
        }
        let k = KernelPair::fractional(0.5, 1).unwrap();
        assert!(PairTable::new(g, &k, Reach::Lattice { cells: 6 }).is_err());
    }

    #[test]
    fn two_dimensional_lattice_is_translation_invariant() {
        let g = Grid::new(2, 0.3, 4).unwrap();
        let k = KernelPair::fractional(0.5, 2).unwrap();
        let t = PairTable::new(g, &k, Reach::default_for(&g)).unwrap();
        let mut v = vec![0.0; g.len()];
        v[g.index([-1, 0]).unwrap()] = 1.0;
        v[g.index([0, 1]).unwrap()] = 0.4;
        v[g.index([-2, -1]).unwrap()] = 2.5;
        let u = Field::from_values(g, v).unwrap();
        let a = t.phi_mng(&u, &sq()).unwrap();
        for s in [[1, 0], [0, -2], [-1, 1], [2, 2]] {
            let b = t.phi_mng(&u.translate(s), &sq()).unwrap();
            assert!((a - b).abs() <= 1e-13 * a, "{s:?}: {a} vs {b}");
        }
    }

    #[test]
    fn policies_agree() {
        let g = Grid::new(2, 0.2, 5).unwrap();
        let k = KernelPair::fractional(0.4, 2).unwrap();
        let t = PairTable::new(g, &k, Reach::default_for(&g)).unwrap();
        let s = t.clone().with_exec(Exec::Sequential);
        let u = Field::sample(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp()).unwrap();
        let y = YoungFunction::power_log(1.5).unwrap();
        assert_eq!(
            t.phi_mng(&u, &y).unwrap().to_bits(),
            s.phi_mng(&u, &y).unwrap().to_bits()
        );
        assert_eq!(t.gradient(&u, &y).unwrap(), s.gradient(&u, &y).unwrap());
    }

    #[test]
    fn gradient_matches_differences_and_pairing() {
        let g = Grid::new(1, 0.2, 6).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let t = PairTable::new(g, &k, Reach::default_for(&g)).unwrap();
        let y = YoungFunction::power_sum(2.0, 3.5).unwrap();
        let u = Field::sample(g, |x| (3.0 * x[0]).sin() + 0.2).unwrap();
        let v = Field::sample(g, |x| x[0] * x[0] - 0.3).unwrap();
        let grad = t.gradient(&u, &y).unwrap();
        let dual: f64 = grad
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a * b)
            .sum();
        let pair = t.pairing(&u, &v, &y).unwrap();
        assert!((dual - pair).abs() <= 1e-12 * pair.abs());
        for i in 0..g.len() {
            let step = 1e-6 * (1.0 + u.values()[i].abs());
            let mut up = u.values().to_vec();
            let mut dn = u.values().to_vec();
            up[i] += step;
            dn[i] -= step;
            let fp = t.phi_mng(&Field::from_values(g, up).unwrap(), &y).unwrap();
            let fm = t.phi_mng(&Field::from_values(g, dn).unwrap(), &y).unwrap();
            let fd = (fp - fm) / (2.0 * step);
            assert!((fd - grad.values()[i]).abs() <= 1e-5 * grad.values()[i].abs().max(1e-3));
        }
    }

    #[test]
    fn power_pairing_is_p_times_modular() {
        let g = Grid::new(1, 0.3, 5).unwrap();
        let k = KernelPair::slobodetskii(1).unwrap();
        let t = PairTable::new(g, &k, Reach::default_for(&g)).unwrap();
        let y = YoungFunction::power(2.7).unwrap();
        let u = Field::sample(g, |x| (x[0] + 0.1).cos()).unwrap();
        let a = t.pairing(&u, &u, &y).unwrap();
        let b = 2.7 * t.phi_mng(&u, &y).unwrap();
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn norms() {
        let g = Grid::new(1, 1.0, 2).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let t = PairTable::new(g, &k, Reach::default_for(&g)).unwrap();
        let u = Field::from_values(g, vec![0.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(lg_norm(&u, &sq()).unwrap(), 2.0);
        let z = luxemburg(&Field::zeros(g), &sq(), &t).unwrap();
        assert_eq!(
            z,
            Norms {
                lg_norm: 0.0,
                seminorm: 0.0,
                full_norm: 0.0
            }
        );
        let y = YoungFunction::power_log(2.0).unwrap();
        let w = Field::from_values(g, vec![1e-3, -4.0, 0.5, 7.0]).unwrap();
        let n = luxemburg(&w, &y, &t).unwrap();
        let at = phi_g(&w.scaled(1.0 / n.lg_norm), &y).unwrap();
        assert!((at - 1.0).abs() <= 1e-8);
        let at = t.phi_mng(&w.scaled(1.0 / n.seminorm), &y).unwrap();
        assert!((at - 1.0).abs() <= 1e-8);
        let p = YoungFunction::power(3.0).unwrap();
        let a = luxemburg(&w, &p, &t).unwrap();
        let b = luxemburg(&w.scaled(3.5), &p, &t).unwrap();
        assert!((b.seminorm - 3.5 * a.seminorm).abs() <= 1e-9 * b.seminorm);
        assert!((b.lg_norm - 3.5 * a.lg_norm).abs() <= 1e-9 * b.lg_norm);
    }

    #[test]
    fn mollification_does_not_increase_modular() {
        let g = Grid::new(1, 0.25, 10).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let t = PairTable::new(g, &k, Reach::default_for(&g)).unwrap();
        let y = YoungFunction::power_sum(2.0, 4.0).unwrap();
        let u = Field::sample(g, |x| {
            if x[0].abs() < 1.2 {
                (5.0 * x[0]).sin() + 1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let m = u.mollify(&Mollifier::bump(1, 3).unwrap()).unwrap();
        assert!(t.phi_mng(&m, &y).unwrap() <= t.phi_mng(&u, &y).unwrap());
        assert!(phi_g(&m, &y).unwrap() <= phi_g(&u, &y).unwrap());
    }

    #[test]
    fn translation_ratio_examples() {
        let g = Grid::new(1, 0.05, 20).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let t = PairTable::new(g, &k, Reach::default_for(&g)).unwrap();
        let z = translation_ratio(&Field::zeros(g), [1, 0], &sq(), &t, 2.0).unwrap();
        assert_eq!((z.lhs, z.ratio), (0.0, 0.0));
        let u = Field::sample(g, |x| (-8.0 * x[0] * x[0]).exp()).unwrap();
        let r = translation_ratio(&u, [2, 0], &sq(), &t, 2.0).unwrap();
        assert!(r.ratio > 0.0 && r.ratio <= translation_constant(&sq(), 1));
        assert!(translation_ratio(&u, [10, 0], &sq(), &t, 2.0).is_err());
        // lhs shrinks with the shift
        let l1 = translation_ratio(&u, [4, 0], &sq(), &t, 2.0).unwrap().lhs;
        let l2 = translation_ratio(&u, [1, 0], &sq(), &t, 2.0).unwrap().lhs;
        assert!(l2 < l1);
    }

    #[test]
    fn embedding_examples() {
        let g = Grid::new(1, 0.05, 40).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let t = PairTable::new(g, &k, Reach::default_for(&g)).unwrap();
        let c = embedding_constant(&sq(), &k).unwrap();
        let z = embedding_bound(&Field::zeros(g), &[Field::zeros(g)], &sq(), &t).unwrap();
        assert_eq!((z.lhs, z.rhs, z.ratio), (0.0, 0.0, 0.0));
        let bump = Field::sample(g, |x| (-4.0 * x[0] * x[0]).exp()).unwrap();
        let d = Field::sample(g, |x| -8.0 * x[0] * (-4.0 * x[0] * x[0]).exp()).unwrap();
        let e = embedding_bound(&bump, &[d], &sq(), &t).unwrap();
        assert!(e.ratio > 0.0 && e.ratio <= c, "{} vs {c}", e.ratio);
        let hat = Field::sample(g, |x| (1.0 - x[0].abs()).max(0.0)).unwrap();
        let dh = Field::sample(g, |x| {
            if x[0].abs() < 1.0 {
                -x[0].signum()
            } else {
                0.0
            }
        })
        .unwrap();
        let e = embedding_bound(&hat, &[dh], &sq(), &t).unwrap();
        assert!(e.lhs.is_finite() && e.lhs <= c * e.rhs);
    }

    #[test]
    fn poincare_examples() {
        let g = Grid::new(1, 1.0, 4).unwrap();
        let k = KernelPair::fractional(0.5, 1).unwrap();
        let mask = DomainMask::from_cells(g, &[g.index([0, 0]).unwrap()]).unwrap();
        let t = PairTable::on_domain(&mask, &k, Reach::default_for(&g)).unwrap();
        assert!(poincare_check(&Field::zeros(g), &sq(), &t, 0.0)
            .unwrap()
            .passed());
        let mut v = vec![0.0; g.len()];
        v[g.index([0, 0]).unwrap()] = 1.0;
        let chi = Field::from_values(g, v).unwrap();
        assert!(!poincare_check(&chi, &sq(), &t, 0.0).unwrap().passed());
        // one-cell reduction: Φ_{M,N,G}(Cχ) = C^2 Σ_j 2 w_j / M_j^2 over the
        // other lattice cells within reach
        let reach = 16i64;
        let s: f64 = (-reach..=reach)
            .filter(|&j| j != 0)
            .map(|j| {
                let d = j.abs() as f64;
                2.0 / d.sqrt().powi(2) / d
            })
            .sum();
        let c_star = (1.0 / s).sqrt();
        let c = smallest_poincare_constant(&[chi], &sq(), &t, 1e-3, 1.01, 2000)
            .unwrap()
            .unwrap();
        assert!(
            c >= c_star * (1.0 - 1e-12) && c <= c_star * 1.01,
            "{c} vs {c_star}"
        );
    }
}
