//! Piecewise-constant fields on a uniform, origin-symmetric grid in one or
//! two dimensions, and the pointwise operators acting on them.
//!
//! Cell `i` along an axis has center `(i + 1/2) h` for `i = -K..K-1`, so no
//! cell sits at the origin and the center set is closed under `x -> -x`.
//! Values outside the grid are zero.

use serde::Serialize;

use crate::error::{Error, Result};

/// Signed cell coordinates; the second entry is 0 in 1D.
pub type Coords = [i64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    spacing: f64,
    half: usize,
}

impl Grid {
    pub fn new(dim: usize, spacing: f64, half: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        if half == 0 {
            return Err(Error::InvalidParameter(
                "grid half-extent K must be at least 1".into(),
            ));
        }
        Ok(Self { dim, spacing, half })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Half-extent `K` in cells.
    pub fn half(&self) -> usize {
        self.half
    }

    /// Cells per axis, `2K`.
    pub fn width(&self) -> usize {
        2 * self.half
    }

    pub fn len(&self) -> usize {
        self.width().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^n`
    pub fn cell_measure(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn coords(&self, idx: usize) -> Coords {
        let k = self.half as i64;
        let w = self.width();
        match self.dim {
            1 => [idx as i64 - k, 0],
            _ => [(idx / w) as i64 - k, (idx % w) as i64 - k],
        }
    }

    pub fn index(&self, c: Coords) -> Option<usize> {
        let k = self.half as i64;
        let inside = |v: i64| v >= -k && v < k;
        let w = self.width();
        match self.dim {
            1 => inside(c[0]).then(|| (c[0] + k) as usize),
            _ => (inside(c[0]) && inside(c[1]))
                .then(|| (c[0] + k) as usize * w + (c[1] + k) as usize),
        }
    }

    pub fn center(&self, idx: usize) -> [f64; 2] {
        let c = self.coords(idx);
        let h = self.spacing;
        let mut x = [(c[0] as f64 + 0.5) * h, (c[1] as f64 + 0.5) * h];
        if self.dim == 1 {
            x[1] = 0.0;
        }
        x
    }

    /// Squared distance between two cells in units of `h^2`.
    pub fn dist2_cells(&self, a: usize, b: usize) -> i64 {
        let (ca, cb) = (self.coords(a), self.coords(b));
        (ca[0] - cb[0]).pow(2) + (ca[1] - cb[1]).pow(2)
    }

    /// Squared norm of the doubled center `2i + 1`; orders cells by |center|.
    pub fn doubled_radius2(&self, idx: usize) -> i64 {
        let c = self.coords(idx);
        let r0 = (2 * c[0] + 1).pow(2);
        if self.dim == 1 {
            r0
        } else {
            r0 + (2 * c[1] + 1).pow(2)
        }
    }

    /// Cells ordered by distance to the origin, ties broken by the
    /// lexicographically smaller center.
    pub fn rearrangement_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| (self.doubled_radius2(i), self.coords(i)));
        order
    }

    /// Largest squared cell distance between two grid cells.
    pub fn diameter2_cells(&self) -> i64 {
        let w = self.width() as i64 - 1;
        w * w * self.dim as i64
    }

    /// Every half-space whose reflection maps the cells outside it into the grid.
    pub fn compatible_halfspaces(&self) -> Vec<HalfSpace> {
        let reach = 2 * self.width() as i64 - 1;
        let mut out = Vec::new();
        for axis in 0..self.dim {
            for m in -reach + 1..reach {
                if m == 0 {
                    out.push(HalfSpace::axis(axis, 0, Side::Lower));
                    out.push(HalfSpace::axis(axis, 0, Side::Upper));
                } else {
                    out.push(HalfSpace::containing_origin(axis, m));
                }
            }
        }
        if self.dim == 2 {
            for b in [Boundary::Diagonal, Boundary::AntiDiagonal] {
                out.push(HalfSpace {
                    boundary: b,
                    side: Side::Lower,
                });
                out.push(HalfSpace {
                    boundary: b,
                    side: Side::Upper,
                });
            }
        }
        out
    }

    /// Boundaries used by the iterated scheme in 1D: every `m h / 2` with
    /// `m != 0` taking the side that holds the origin, plus `{x <= 0}`.
    pub fn origin_halfspaces_1d(&self) -> Vec<HalfSpace> {
        let reach = 2 * self.width() as i64 - 1;
        (-reach + 1..reach)
            .map(|m| {
                if m == 0 {
                    HalfSpace::axis(0, 0, Side::Lower)
                } else {
                    HalfSpace::containing_origin(0, m)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `{ coordinate <= boundary }`
    Lower,
    /// `{ coordinate >= boundary }`
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    /// Hyperplane `x_axis = twice_offset * h / 2`.
    Axis { axis: usize, twice_offset: i64 },
    /// `x_0 = x_1` (2D only); the coordinate is `x_0 - x_1`.
    Diagonal,
    /// `x_0 = -x_1` (2D only); the coordinate is `x_0 + x_1`.
    AntiDiagonal,
}

/// A closed half-space whose reflection maps cell centers to cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HalfSpace {
    pub boundary: Boundary,
    pub side: Side,
}

impl HalfSpace {
    pub fn axis(axis: usize, twice_offset: i64, side: Side) -> Self {
        Self {
            boundary: Boundary::Axis { axis, twice_offset },
            side,
        }
    }

    /// Boundary at `m h / 2` with the side that holds the origin.
    pub fn containing_origin(axis: usize, m: i64) -> Self {
        let side = if m >= 0 { Side::Lower } else { Side::Upper };
        Self::axis(axis, m, side)
    }

    /// Signed doubled coordinate relative to the boundary.
    fn offset(&self, c: Coords) -> i64 {
        match self.boundary {
            Boundary::Axis { axis, twice_offset } => 2 * c[axis] + 1 - twice_offset,
            Boundary::Diagonal => 2 * (c[0] - c[1]),
            Boundary::AntiDiagonal => 2 * (c[0] + c[1]) + 2,
        }
    }

    pub fn contains(&self, c: Coords) -> bool {
        let o = self.offset(c);
        match self.side {
            Side::Lower => o <= 0,
            Side::Upper => o >= 0,
        }
    }

    /// Whether the origin lies strictly inside.
    pub fn origin_interior(&self) -> bool {
        let o = match self.boundary {
            Boundary::Axis { twice_offset, .. } => -twice_offset,
            _ => 0,
        };
        match self.side {
            Side::Lower => o < 0,
            Side::Upper => o > 0,
        }
    }

    pub fn reflect(&self, c: Coords) -> Coords {
        match self.boundary {
            Boundary::Axis { axis, twice_offset } => {
                let mut r = c;
                r[axis] = twice_offset - 1 - c[axis];
                r
            }
            Boundary::Diagonal => [c[1], c[0]],
            Boundary::AntiDiagonal => [-1 - c[1], -1 - c[0]],
        }
    }

    pub fn check_compatible(&self, grid: &Grid) -> Result<()> {
        match self.boundary {
            Boundary::Axis { axis, .. } if axis >= grid.dim() => {
                return Err(Error::IncompatibleHalfSpace(format!(
                    "axis {axis} on a {}D grid",
                    grid.dim()
                )))
            }
            Boundary::Diagonal | Boundary::AntiDiagonal if grid.dim() != 2 => {
                return Err(Error::IncompatibleHalfSpace(
                    "diagonal boundary needs a 2D grid".into(),
                ))
            }
            _ => {}
        }
        for idx in 0..grid.len() {
            let c = grid.coords(idx);
            if !self.contains(c) && grid.index(self.reflect(c)).is_none() {
                return Err(Error::IncompatibleHalfSpace(format!(
                    "{self:?}: cell {c:?} reflects outside the grid"
                )));
            }
        }
        Ok(())
    }
}

/// Cell set marking a domain Ω.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainMask {
    grid: Grid,
    inside: Vec<bool>,
}

impl DomainMask {
    pub fn from_cells(grid: Grid, cells: &[usize]) -> Result<Self> {
        let mut inside = vec![false; grid.len()];
        for &c in cells {
            *inside
                .get_mut(c)
                .ok_or_else(|| Error::InvalidParameter(format!("cell {c} outside the grid")))? =
                true;
        }
        Ok(Self { grid, inside })
    }

    /// Union of coordinate boxes `[lo, hi]` (inclusive); in 1D only the
    /// first coordinate is used.
    pub fn from_boxes(grid: Grid, boxes: &[(Coords, Coords)]) -> Result<Self> {
        let mut inside = vec![false; grid.len()];
        for (lo, hi) in boxes {
            for (idx, flag) in inside.iter_mut().enumerate() {
                let c = grid.coords(idx);
                if (0..grid.dim()).all(|a| c[a] >= lo[a] && c[a] <= hi[a]) {
                    *flag = true;
                }
            }
        }
        Ok(Self { grid, inside })
    }

    /// The `count` cells closest to the origin (rearrangement order): the
    /// discrete ball of the same measure.
    pub fn centered(grid: Grid, count: usize) -> Result<Self> {
        if count > grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{count} cells do not fit the grid"
            )));
        }
        let order = grid.rearrangement_order();
        Self::from_cells(grid, &order[..count])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn cells(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&i| self.inside[i]).collect()
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_measure()
    }
}

/// Nonnegative symmetric discrete kernel on the box `[-r, r]^n`, summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mollifier {
    dim: usize,
    radius: usize,
    weights: Vec<f64>,
}

impl Mollifier {
    fn side(&self) -> usize {
        2 * self.radius + 1
    }

    fn offsets(dim: usize, radius: usize) -> Vec<Coords> {
        let r = radius as i64;
        match dim {
            1 => (-r..=r).map(|a| [a, 0]).collect(),
            _ => (-r..=r)
                .flat_map(|a| (-r..=r).map(move |b| [a, b]))
                .collect(),
        }
    }

    /// Builds a kernel from a weight profile evaluated on offsets; the center
    /// weight is set to close the sum exactly.
    pub fn from_profile(
        dim: usize,
        radius: usize,
        profile: impl Fn(Coords) -> f64,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(
                "mollifier dimension must be 1 or 2".into(),
            ));
        }
        let offs = Self::offsets(dim, radius);
        // symmetrize: w(z) = w(-z) = average of the profile
        let raw: Vec<f64> = offs
            .iter()
            .map(|&z| 0.5 * (profile(z) + profile([-z[0], -z[1]])))
            .collect();
        if raw.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "mollifier weights must be finite and >= 0".into(),
            ));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter(
                "mollifier weights sum to zero".into(),
            ));
        }
        let center = offs.len() / 2;
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        weights[center] = 0.0;
        // pairwise sum keeps the off-center part symmetric before closing
        let rest: f64 = weights.iter().sum();
        weights[center] = 1.0 - rest;
        if weights[center] < 0.0 {
            weights[center] = 0.0;
        }
        Ok(Self {
            dim,
            radius,
            weights,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_profile(dim, 0, |_| 1.0)
    }

    pub fn uniform(dim: usize, radius: usize) -> Result<Self> {
        Self::from_profile(dim, radius, |_| 1.0)
    }

    /// Samples of the standard bump `exp(-1 / (1 - |z|^2))` scaled to the radius.
    pub fn bump(dim: usize, radius: usize) -> Result<Self> {
        let scale = (radius + 1) as f64;
        Self::from_profile(dim, radius, |z| {
            let r2 = ((z[0] * z[0] + z[1] * z[1]) as f64) / (scale * scale);
            if r2 < 1.0 {
                (-1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, z: Coords) -> f64 {
        let r = self.radius as i64;
        let s = self.side();
        match self.dim {
            1 => self.weights[(z[0] + r) as usize],
            _ => self.weights[(z[0] + r) as usize * s + (z[1] + r) as usize],
        }
    }
}

/// Cell values on a grid; zero outside it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                cell: grid.coords(i)[..grid.dim()].to_vec(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Cell value = `f(center)`.
    pub fn sample(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| f(&grid.center(i)[..grid.dim()]))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, c: Coords) -> f64 {
        self.grid.index(c).map_or(0.0, |i| self.values[i])
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn vanishes_outside(&self, mask: &DomainMask) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(i, &v)| v == 0.0 || mask.contains(i))
    }

    /// `(τ u)(x) = u(x + shift)`; cells entering from outside are zero.
    pub fn translate(&self, shift: Coords) -> Field {
        let values = (0..self.grid.len())
            .map(|i| {
                let c = self.grid.coords(i);
                self.get([c[0] + shift[0], c[1] + shift[1]])
            })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    /// Discrete convolution `u * ρ`. The support of `u` widened by the kernel
    /// radius must stay inside the grid.
    pub fn mollify(&self, rho: &Mollifier) -> Result<Field> {
        if rho.dim() != self.grid.dim() {
            return Err(Error::GridMismatch(
                "mollifier and grid dimensions differ".into(),
            ));
        }
        let r = rho.radius() as i64;
        let k = self.grid.half() as i64;
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let c = self.grid.coords(i);
            if (0..self.grid.dim()).any(|a| c[a] - r < -k || c[a] + r > k - 1) {
                return Err(Error::SupportOverflow(format!(
                    "cell {:?} is within {r} cells of the grid edge",
                    &c[..self.grid.dim()]
                )));
            }
        }
        let offsets = Mollifier::offsets(rho.dim(), rho.radius());
        let values = (0..self.grid.len())
            .map(|i| {
                let c = self.grid.coords(i);
                offsets
                    .iter()
                    .map(|&z| rho.weight(z) * self.get([c[0] - z[0], c[1] - z[1]]))
                    .sum()
            })
            .collect();
        Ok(Field {
            grid: self.grid,
            values,
        })
    }

    /// `η_k u` with `η_k(x) = 1` for `|x| <= k`, `0` for `|x| >= 2k`, linear between.
    pub fn truncate(&self, k: f64) -> Result<Field> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation radius must be positive, got {k}"
            )));
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let x = self.grid.center(i);
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                v * (2.0 - r / k).clamp(0.0, 1.0)
            })
            .collect();
        Ok(Field {
            grid: self.grid,
            values,
        })
    }

    /// `h^n · #{cells : u > λ}`.
    pub fn superlevel_measure(&self, lambda: f64) -> f64 {
        self.values.iter().filter(|&&v| v > lambda).count() as f64 * self.grid.cell_measure()
    }

    /// Text form: `n,h,K` header and values, then one row per cell.
    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut s = format!("n,h,K\n{},{:.16e},{}\n", g.dim(), g.spacing(), g.half());
        s.push_str(if g.dim() == 1 {
            "i,value\n"
        } else {
            "i,j,value\n"
        });
        for (idx, v) in self.values.iter().enumerate() {
            let c = g.coords(idx);
            if g.dim() == 1 {
                s.push_str(&format!("{},{:.16e}\n", c[0], v));
            } else {
                s.push_str(&format!("{},{},{:.16e}\n", c[0], c[1], v));
            }
        }
        s
    }

    /// Parses [`Field::to_csv`] output. Cells not listed are zero.
    pub fn from_csv(text: &str) -> Result<Field> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))?;
        if header.replace(' ', "") != "n,h,K" {
            return Err(Error::Parse(format!(
                "expected header `n,h,K`, got `{header}`"
            )));
        }
        let spec = lines
            .next()
            .ok_or_else(|| Error::Parse("missing grid line".into()))?;
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!(
                "grid line needs three entries, got `{spec}`"
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
        };
        let int = |s: &str| {
            s.parse::<i64>()
                .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
        };
        let grid = Grid::new(
            int(parts[0])? as usize,
            num(parts[1])?,
            int(parts[2])? as usize,
        )?;
        let mut values = vec![0.0; grid.len()];
        for line in lines {
            if line.starts_with(|c: char| c.is_ascii_alphabetic()) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != grid.dim() + 1 {
                return Err(Error::Parse(format!(
                    "row `{line}` has {} columns",
                    cols.len()
                )));
            }
            let mut c = [0i64; 2];
            for a in 0..grid.dim() {
                c[a] = int(cols[a])?;
            }
            let idx = grid.index(c).ok_or_else(|| {
                Error::Parse(format!("cell {:?} outside the grid", &c[..grid.dim()]))
            })?;
            values[idx] = num(cols[grid.dim()])?;
        }
        Field::from_values(grid, values)
    }
}
