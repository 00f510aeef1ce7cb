//! Turning configuration values into a validated [`RunPlan`].

use std::path::PathBuf;

use clap::ValueEnum;
use fracorlicz::field::{Boundary, Coords, Side};
use fracorlicz::{Grid, HalfSpace, KernelPair, Reach, YoungFunction};

use crate::config::ConfigMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Verify,
    Modular,
    Rearrange,
    Polarize,
    Eigen,
    FaberKrahn,
    Kernels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelName {
    Fractional,
    Slobodetskii,
    BesovLog,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub name: KernelName,
    pub s: f64,
    pub beta: f64,
}

impl KernelSpec {
    pub fn build(&self, young: &YoungFunction, dim: usize) -> fracorlicz::Result<KernelPair> {
        match self.name {
            KernelName::Fractional => KernelPair::fractional(self.s, dim),
            KernelName::Slobodetskii => KernelPair::slobodetskii(dim),
            KernelName::BesovLog => KernelPair::besov_log(self.s, self.beta, dim),
            KernelName::Abs => KernelPair::abs(self.s, young.clone(), dim),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachSpec {
    GridOnly,
    Default,
    Cells(usize),
}

impl ReachSpec {
    pub fn resolve(&self, grid: &Grid) -> Reach {
        match *self {
            ReachSpec::GridOnly => Reach::GridOnly,
            ReachSpec::Default => Reach::default_for(grid),
            ReachSpec::Cells(cells) => Reach::Lattice { cells },
        }
    }
}

/// Everything a command needs, checked up front.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub command: Command,
    pub young: YoungFunction,
    /// Whether the Young function was configured rather than defaulted.
    pub young_explicit: bool,
    pub kernel: KernelSpec,
    pub kernel_explicit: bool,
    pub grid: Grid,
    pub reach: ReachSpec,
    pub seed: u64,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub mu: Option<f64>,
    pub mu_grid: Option<Vec<f64>>,
    pub restarts: usize,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub halfspace: Option<HalfSpace>,
    pub domain: Vec<(Coords, Coords)>,
    pub trace_csv: Option<PathBuf>,
    pub criteria: Vec<u8>,
}

fn num<T: std::str::FromStr>(key: &str, raw: &str, errors: &mut Vec<String>) -> Option<T> {
    match raw.trim().parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(format!("`{key}`: cannot parse `{raw}`"));
            None
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, raw: &str, errors: &mut Vec<String>) -> Option<Vec<T>> {
    let before = errors.len();
    let v: Vec<T> = raw.split(',').filter_map(|x| num(key, x, errors)).collect();
    (errors.len() == before).then_some(v)
}

pub fn parse_grid(raw: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("`grid`: expected `n,h,K`, got `{raw}`"));
    }
    let n = parts[0]
        .parse::<usize>()
        .map_err(|_| format!("`grid`: bad dimension `{}`", parts[0]))?;
    let h = parts[1]
        .parse::<f64>()
        .map_err(|_| format!("`grid`: bad spacing `{}`", parts[1]))?;
    let k = parts[2]
        .parse::<usize>()
        .map_err(|_| format!("`grid`: bad half-extent `{}`", parts[2]))?;
    Grid::new(n, h, k).map_err(|e| format!("`grid`: {e}"))
}

/// `x0 >= -1.5`, `x1 <= 2`, `x0-x1 <= 0`, `x0+x1 >= 0`; offsets are in
/// units of the spacing and must be multiples of 1/2.
pub fn parse_halfspace(raw: &str) -> Result<HalfSpace, String> {
    let (lhs, side, rhs) = if let Some((l, r)) = raw.split_once(">=") {
        (l, Side::Upper, r)
    } else if let Some((l, r)) = raw.split_once("<=") {
        (l, Side::Lower, r)
    } else {
        return Err(format!(
            "`halfspace`: expected `<coordinate> <= value` or `>=`, got `{raw}`"
        ));
    };
    let value: f64 = rhs
        .trim()
        .parse()
        .map_err(|_| format!("`halfspace`: bad offset `{}`", rhs.trim()))?;
    let twice = 2.0 * value;
    if twice.fract() != 0.0 {
        return Err(format!(
            "`halfspace`: offset {value} is not a multiple of 1/2"
        ));
    }
    let boundary = match lhs.replace(' ', "").as_str() {
        "x0" => Boundary::Axis {
            axis: 0,
            twice_offset: twice as i64,
        },
        "x1" => Boundary::Axis {
            axis: 1,
            twice_offset: twice as i64,
        },
        "x0-x1" if value == 0.0 => Boundary::Diagonal,
        "x0+x1" if value == 0.0 => Boundary::AntiDiagonal,
        "x0-x1" | "x0+x1" => {
            return Err("`halfspace`: diagonal boundaries must pass through 0".into())
        }
        other => return Err(format!("`halfspace`: unknown coordinate `{other}`")),
    };
    Ok(HalfSpace { boundary, side })
}

/// `a..b` boxes joined by `;`, with `a..b,c..d` in 2D; bounds inclusive.
pub fn parse_domain(raw: &str, dim: usize) -> Result<Vec<(Coords, Coords)>, String> {
    let range = |r: &str| -> Result<(i64, i64), String> {
        let (a, b) = r
            .split_once("..")
            .ok_or_else(|| format!("`domain`: expected `a..b`, got `{r}`"))?;
        let a = a
            .trim()
            .parse::<i64>()
            .map_err(|_| format!("`domain`: bad bound `{a}`"))?;
        let b = b
            .trim()
            .parse::<i64>()
            .map_err(|_| format!("`domain`: bad bound `{b}`"))?;
        if a > b {
            return Err(format!("`domain`: empty range `{r}`"));
        }
        Ok((a, b))
    };
    raw.split(';')
        .map(|part| {
            let axes: Vec<&str> = part.split(',').map(str::trim).collect();
            if axes.len() != dim {
                return Err(format!("`domain`: `{part}` needs {dim} range(s)"));
            }
            let mut lo = [0i64; 2];
            let mut hi = [0i64; 2];
            for (a, r) in axes.iter().enumerate() {
                let (l, h) = range(r)?;
                lo[a] = l;
                hi[a] = h;
            }
            Ok((lo, hi))
        })
        .collect()
}

impl RunPlan {
    /// Validates every value, reporting all problems at once.
    pub fn build(command: Command, cfg: &ConfigMap) -> Result<RunPlan, Vec<String>> {
        let mut errors = Vec::new();
        let e = &mut errors;

        let p = cfg.get("p").and_then(|v| num::<f64>("p", v, e));
        let q = cfg.get("q").and_then(|v| num::<f64>("q", v, e));
        let young_name = cfg.get("young").unwrap_or("power-sum");
        let young = match young_name {
            "power" => YoungFunction::power(p.unwrap_or(2.0)),
            "power-sum" => YoungFunction::power_sum(p.unwrap_or(2.0), q.unwrap_or(3.0)),
            "power-log" => YoungFunction::power_log(p.unwrap_or(2.0)),
            "custom" => {
                let c = cfg.get("coeffs").and_then(|v| list::<f64>("coeffs", v, e));
                let x = cfg
                    .get("exponents")
                    .and_then(|v| list::<f64>("exponents", v, e));
                match (c, x) {
                    (Some(c), Some(x)) => YoungFunction::custom(c, x),
                    _ => Err(fracorlicz::Error::InvalidParameter(
                        "custom Young function needs `coeffs` and `exponents`".into(),
                    )),
                }
            }
            other => Err(fracorlicz::Error::InvalidParameter(format!(
                "unknown Young family `{other}` (power, power-sum, power-log, custom)"
            ))),
        };
        let young = young.map_err(|err| e.push(format!("`young`: {err}"))).ok();

        let grid = match cfg.get("grid") {
            Some(raw) => parse_grid(raw).map_err(|m| e.push(m)).ok(),
            None => Some(Grid::new(1, 0.25, 10).expect("valid default")),
        };

        let s = cfg
            .get("s")
            .and_then(|v| num::<f64>("s", v, e))
            .unwrap_or(0.5);
        let beta = cfg
            .get("beta")
            .and_then(|v| num::<f64>("beta", v, e))
            .unwrap_or(0.25);
        let name = match cfg.get("kernel").unwrap_or("fractional") {
            "fractional" => Some(KernelName::Fractional),
            "slobodetskii" => Some(KernelName::Slobodetskii),
            "besov-log" => Some(KernelName::BesovLog),
            "abs" => Some(KernelName::Abs),
            other => {
                e.push(format!(
                    "`kernel`: unknown family `{other}` (fractional, slobodetskii, besov-log, abs)"
                ));
                None
            }
        };
        let kernel = name.map(|name| KernelSpec { name, s, beta });
        if let (Some(k), Some(y), Some(g)) = (kernel, &young, grid) {
            if let Err(err) = k.build(y, g.dim()) {
                e.push(format!("`kernel`: {err}"));
            }
        }

        let reach = match cfg.get("reach") {
            None | Some("default") => ReachSpec::Default,
            Some("grid-only") => ReachSpec::GridOnly,
            Some(raw) => match num::<usize>("reach", raw, e) {
                Some(c) => {
                    if let Some(g) = grid {
                        if ((c * c) as i64) < g.diameter2_cells() {
                            e.push(format!("`reach`: {c} cells is below the grid diameter"));
                        }
                    }
                    ReachSpec::Cells(c)
                }
                None => ReachSpec::Default,
            },
        };

        let seed = cfg
            .get("seed")
            .and_then(|v| num::<u64>("seed", v, e))
            .unwrap_or(0);
        let tol = cfg.get("tol").and_then(|v| num::<f64>("tol", v, e));
        if tol.is_some_and(|t| !(t > 0.0)) {
            e.push("`tol` must be positive".into());
        }
        let max_iter = cfg
            .get("max_iter")
            .and_then(|v| num::<usize>("max_iter", v, e));
        if max_iter == Some(0) {
            e.push("`max_iter` must be at least 1".into());
        }
        let mu = cfg.get("mu").and_then(|v| num::<f64>("mu", v, e));
        if mu.is_some_and(|m| !(m > 0.0 && m.is_finite())) {
            e.push("`mu` must be positive".into());
        }
        let mu_grid = cfg
            .get("mu_grid")
            .and_then(|v| list::<f64>("mu_grid", v, e));
        if mu_grid
            .as_ref()
            .is_some_and(|g| g.iter().any(|m| !(*m > 0.0 && m.is_finite())))
        {
            e.push("`mu_grid` entries must be positive".into());
        }
        let restarts = cfg
            .get("restarts")
            .and_then(|v| num::<usize>("restarts", v, e))
            .unwrap_or(8);
        if restarts == 0 {
            e.push("`restarts` must be at least 1".into());
        }

        let input = cfg.get("input").map(PathBuf::from);
        let output = cfg.get("output").map(PathBuf::from);
        let trace_csv = cfg.get("trace_csv").map(PathBuf::from);
        let needs_input = matches!(
            command,
            Command::Modular | Command::Rearrange | Command::Polarize
        );
        match &input {
            None if needs_input => e.push(format!(
                "{command:?} needs an input field (`input` or --input)"
            )),
            Some(path) if needs_input && !path.is_file() => {
                e.push(format!("input file `{}` does not exist", path.display()))
            }
            _ => {}
        }
        if matches!(command, Command::Rearrange | Command::Polarize) && output.is_none() {
            e.push(format!(
                "{command:?} writes a field and needs `output` or --out"
            ));
        }

        let halfspace = match cfg.get("halfspace") {
            Some(raw) => parse_halfspace(raw).map_err(|m| e.push(m)).ok(),
            None => None,
        };
        if command == Command::Polarize && halfspace.is_none() && !cfg.contains("halfspace") {
            e.push("polarize needs a `halfspace`, e.g. `x0 >= 0`".into());
        }

        let mut domain = Vec::new();
        if let Some(g) = grid {
            let raw = cfg.get("domain").map(str::to_string).unwrap_or_else(|| {
                // The comparison against a ball is only informative for a
                // domain that is not already one.
                match (g.dim(), command) {
                    (1, Command::FaberKrahn) => "-4..-2;1..3".into(),
                    (1, _) => "-4..3".into(),
                    (_, Command::FaberKrahn) => "-2..-1,-2..1;1..1,-2..1".into(),
                    _ => "-2..1,-2..1".into(),
                }
            });
            match parse_domain(&raw, g.dim()) {
                Ok(d) => {
                    let k = g.half() as i64;
                    if d.iter()
                        .any(|(lo, hi)| (0..g.dim()).any(|a| lo[a] < -k || hi[a] >= k))
                    {
                        e.push(format!(
                            "`domain`: `{raw}` leaves the grid (cells run from {} to {})",
                            -k,
                            k - 1
                        ));
                    }
                    domain = d;
                }
                Err(m) => e.push(m),
            }
        }

        let criteria = match cfg.get("criteria") {
            Some(raw) => list::<u8>("criteria", raw, e).unwrap_or_default(),
            None => (1..=12).collect(),
        };
        if criteria.iter().any(|c| !(1..=12).contains(c)) {
            e.push("`criteria` entries must lie in 1..=12".into());
        }

        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(RunPlan {
            command,
            young: young.expect("checked"),
            young_explicit: cfg.contains("young"),
            kernel: kernel.expect("checked"),
            kernel_explicit: cfg.contains("kernel"),
            grid: grid.expect("checked"),
            reach,
            seed,
            tol,
            max_iter,
            mu,
            mu_grid,
            restarts,
            input,
            output,
            halfspace,
            domain,
            trace_csv,
            criteria,
        })
    }
}
