//! Grid-sampled fields on R^n (n = 1, 2) with prescribed exterior data.
//!
//! Fields are piecewise constant on cells (midpoint sampling), which makes
//! level-set volumes and the symmetric decreasing rearrangement exact
//! combinatorial operations; all quadrature error lives in the energy module.

use crate::error::{Error, Result};

/// A uniform grid of odd cell count per axis, so the origin is a cell center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub cells_per_axis: usize,
}

impl Grid {
    pub fn new(n: usize, h: f64, cells_per_axis: usize) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::Config(format!("dimension n = {n} not in {{1, 2}}")));
        }
        if !(h > 0.0) {
            return Err(Error::Config(format!("spacing h = {h} must be positive")));
        }
        if cells_per_axis < 3 || cells_per_axis % 2 == 0 {
            return Err(Error::Config(format!(
                "cell count {cells_per_axis} must be odd and >= 3"
            )));
        }
        Ok(Grid { n, h, cells_per_axis })
    }

    /// Grid whose box radius is as close as possible to the request.
    pub fn from_box(n: usize, h: f64, box_radius: f64) -> Result<Self> {
        if !(h > 0.0) || !(box_radius > 0.0) {
            return Err(Error::Config("h and box_radius must be positive".into()));
        }
        let half = (box_radius / h).round() as usize;
        Grid::new(n, h, 2 * half.max(1) + 1)
    }

    /// Half-width measured to the outermost cell center.
    pub fn box_radius(&self) -> f64 {
        self.h * (self.cells_per_axis - 1) as f64 / 2.0
    }

    /// Half-width measured to the outer cell edge; exterior data starts here.
    pub fn outer_edge(&self) -> f64 {
        self.box_radius() + 0.5 * self.h
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_axis.pow(self.n as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        (i as f64 - (self.cells_per_axis - 1) as f64 / 2.0) * self.h
    }

    /// Center of the flat-indexed cell (row-major in 2D); y = 0 in 1D.
    #[inline]
    pub fn center(&self, idx: usize) -> [f64; 2] {
        match self.n {
            1 => [self.axis_coord(idx), 0.0],
            _ => {
                let row = idx / self.cells_per_axis;
                let col = idx % self.cells_per_axis;
                [self.axis_coord(col), self.axis_coord(row)]
            }
        }
    }

    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        let c = self.center(idx);
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    }
}

/// Closed-form radial profiles used for initial data and reference fields.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Const(f64),
    /// +1 on B_eta, -1 outside.
    Indicator { eta: f64 },
    /// The rescaled logarithmic bump: +1 on B_{eps e^-2},
    /// |ln(|x|/eps)| - 1 on B_eps minus that ball, -1 outside B_eps.
    LogBump { eps: f64 },
    /// cos^2(pi x / 2) on B_1 (radially in 2D), zero outside.
    CosSquared,
    /// x / width clamped to [-1, 1] (1D two-phase ramp; radial in 2D).
    Ramp { width: f64 },
    /// -1 on B_{R+1}, +1 outside B_{R+2}, linear in |x| in between.
    BarrierPsi { big_r: f64 },
}

impl Profile {
    pub fn eval(&self, n: usize, x: [f64; 2]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        match *self {
            Profile::Const(v) => v,
            Profile::Indicator { eta } => {
                if r < eta {
                    1.0
                } else {
                    -1.0
                }
            }
            Profile::LogBump { eps } => {
                if r < eps * (-2.0f64).exp() {
                    1.0
                } else if r < eps {
                    (r / eps).ln().abs() - 1.0
                } else {
                    -1.0
                }
            }
            Profile::CosSquared => {
                if r < 1.0 {
                    let c = (std::f64::consts::FRAC_PI_2 * r).cos();
                    c * c
                } else {
                    0.0
                }
            }
            Profile::Ramp { width } => {
                let t = if n == 1 { x[0] } else { r };
                (t / width).clamp(-1.0, 1.0)
            }
            Profile::BarrierPsi { big_r } => crate::barriers::eval_psi(big_r, r),
        }
    }

    /// Value the profile settles to far away, and the radius past which it is
    /// exactly that constant. Ramp in 1D settles to +1 on the right and -1 on
    /// the left; callers that need a per-side trace use `Exterior::TwoSided`.
    pub fn far_value(&self) -> f64 {
        match *self {
            Profile::Const(v) => v,
            Profile::Indicator { .. } | Profile::LogBump { .. } => -1.0,
            Profile::CosSquared => 0.0,
            Profile::Ramp { .. } => 1.0,
            Profile::BarrierPsi { .. } => 1.0,
        }
    }

    pub fn settle_radius(&self) -> f64 {
        match *self {
            Profile::Const(_) => 0.0,
            Profile::Indicator { eta } => eta,
            Profile::LogBump { eps } => eps,
            Profile::CosSquared => 1.0,
            Profile::Ramp { width } => width,
            Profile::BarrierPsi { big_r } => big_r + 2.0,
        }
    }

    pub fn encode(&self) -> String {
        match *self {
            Profile::Const(v) => format!("const:{v}"),
            Profile::Indicator { eta } => format!("indicator:{eta}"),
            Profile::LogBump { eps } => format!("log_bump:{eps}"),
            Profile::CosSquared => "cos2".to_string(),
            Profile::Ramp { width } => format!("ramp:{width}"),
            Profile::BarrierPsi { big_r } => format!("psi:{big_r}"),
        }
    }

    pub fn decode(s: &str) -> Result<Self> {
        let mut it = s.split(':');
        let name = it.next().unwrap_or("");
        let arg = it.next();
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::Input(format!("profile '{s}' missing parameter")))?
                .parse()
                .map_err(|_| Error::Input(format!("profile '{s}' has a malformed parameter")))
        };
        match name {
            "const" => Ok(Profile::Const(num(arg)?)),
            "indicator" => Ok(Profile::Indicator { eta: num(arg)? }),
            "log_bump" => Ok(Profile::LogBump { eps: num(arg)? }),
            "cos2" => Ok(Profile::CosSquared),
            "ramp" => Ok(Profile::Ramp { width: num(arg)? }),
            "psi" => Ok(Profile::BarrierPsi { big_r: num(arg)? }),
            other => Err(Error::Input(format!("unknown profile '{other}'"))),
        }
    }
}

/// Exterior trace of a field on the complement of the computational box.
#[derive(Debug, Clone, PartialEq)]
pub enum Exterior {
    Constant(f64),
    /// 1D only: one constant per half-line.
    TwoSided { left: f64, right: f64 },
    /// Closed-form radial data, constant past its settle radius.
    Radial(Profile),
}

impl Exterior {
    pub fn eval(&self, n: usize, x: [f64; 2]) -> f64 {
        match self {
            Exterior::Constant(v) => *v,
            Exterior::TwoSided { left, right } => {
                if x[0] < 0.0 {
                    *left
                } else {
                    *right
                }
            }
            Exterior::Radial(p) => p.eval(n, x),
        }
    }

    pub fn encode(&self) -> String {
        match self {
            Exterior::Constant(v) => format!("const:{v}"),
            Exterior::TwoSided { left, right } => format!("two:{left}:{right}"),
            Exterior::Radial(p) => format!("radial:{}", p.encode()),
        }
    }

    pub fn decode(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("two:") {
            let mut it = rest.split(':');
            let l: f64 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Input(format!("bad exterior '{s}'")))?;
            let r: f64 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Input(format!("bad exterior '{s}'")))?;
            Ok(Exterior::TwoSided { left: l, right: r })
        } else if let Some(rest) = s.strip_prefix("radial:") {
            Ok(Exterior::Radial(Profile::decode(rest)?))
        } else if let Some(rest) = s.strip_prefix("const:") {
            let v: f64 = rest
                .parse()
                .map_err(|_| Error::Input(format!("bad exterior '{s}'")))?;
            Ok(Exterior::Constant(v))
        } else {
            Err(Error::Input(format!("unknown exterior '{s}'")))
        }
    }
}

/// A grid-sampled state parameter with values in [-1, 1] and exterior data.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub exterior: Exterior,
    /// Closed-form provenance, when the field came from a profile; used to
    /// resample on refined grids.
    pub profile: Option<Profile>,
    /// Number of samples that had to be clamped into [-1, 1] (expected 0).
    pub clamp_count: usize,
}

impl Field {
    pub fn from_values(grid: Grid, values: Vec<f64>, exterior: Exterior) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::Input(format!(
                "value count {} does not match grid with {} cells",
                values.len(),
                grid.num_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
            return Err(Error::Input("field values must be finite and in [-1, 1]".into()));
        }
        Ok(Field {
            grid,
            values,
            exterior,
            profile: None,
            clamp_count: 0,
        })
    }

    /// Value of the underlying function at an arbitrary point: grid value
    /// inside the box, exterior data outside.
    pub fn value_at(&self, x: [f64; 2]) -> f64 {
        let edge = self.grid.outer_edge();
        let inside = match self.grid.n {
            1 => x[0].abs() <= edge,
            _ => x[0].abs() <= edge && x[1].abs() <= edge,
        };
        if inside {
            let clampi = |t: f64| -> usize {
                let i = ((t / self.grid.h) + (self.grid.cells_per_axis - 1) as f64 / 2.0).round();
                (i.max(0.0) as usize).min(self.grid.cells_per_axis - 1)
            };
            let idx = match self.grid.n {
                1 => clampi(x[0]),
                _ => clampi(x[1]) * self.grid.cells_per_axis + clampi(x[0]),
            };
            self.values[idx]
        } else {
            self.exterior.eval(self.grid.n, x)
        }
    }

    /// Resamples on a grid with spacing h/2 and the same box radius.
    /// Profile-backed fields re-evaluate the closed form; others interpolate
    /// linearly between cell centers.
    pub fn refine_half(&self) -> Result<Field> {
        let fine = Grid::new(
            self.grid.n,
            self.grid.h / 2.0,
            2 * self.grid.cells_per_axis - 1,
        )?;
        if let Some(p) = &self.profile {
            let mut f = make_field(fine, p, self.exterior.clone())?;
            f.profile = Some(p.clone());
            return Ok(f);
        }
        let coarse = self.grid.cells_per_axis;
        let interp_axis = |vals: &dyn Fn(usize) -> f64, j: usize| -> f64 {
            if j % 2 == 0 {
                vals(j / 2)
            } else {
                0.5 * (vals(j / 2) + vals(j / 2 + 1))
            }
        };
        let values = match self.grid.n {
            1 => (0..fine.cells_per_axis)
                .map(|j| interp_axis(&|i| self.values[i], j))
                .collect(),
            _ => {
                let mut out = Vec::with_capacity(fine.num_cells());
                for row in 0..fine.cells_per_axis {
                    for col in 0..fine.cells_per_axis {
                        let at = |r: usize, c: usize| self.values[r * coarse + c];
                        let v = if row % 2 == 0 {
                            interp_axis(&|c| at(row / 2, c), col)
                        } else {
                            let lo = interp_axis(&|c| at(row / 2, c), col);
                            let hi = interp_axis(&|c| at(row / 2 + 1, c), col);
                            0.5 * (lo + hi)
                        };
                        out.push(v);
                    }
                }
                out
            }
        };
        Field::from_values(fine, values, self.exterior.clone())
    }

    /// Round-trippable flat text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} {} {}\n",
            self.grid.n,
            self.grid.h,
            self.grid.box_radius(),
            self.exterior.encode()
        ));
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i} {v}\n"));
        }
        out
    }

    pub fn from_table(s: &str) -> Result<Field> {
        let mut lines = s.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Input("empty field table".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::Input("field header must be 'n h box_radius exterior'".into()));
        }
        let n: usize = parts[0]
            .parse()
            .map_err(|_| Error::Input("bad dimension in field header".into()))?;
        let h: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Input("bad spacing in field header".into()))?;
        let box_radius: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Input("bad box radius in field header".into()))?;
        let exterior = Exterior::decode(parts[3])?;
        let cells = (2.0 * box_radius / h).round() as usize + 1;
        let grid = Grid::new(n, h, cells)?;
        let mut values = vec![0.0; grid.num_cells()];
        let mut seen = 0usize;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let idx: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Input(format!("bad index line '{line}'")))?;
            let val: f64 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Input(format!("bad value line '{line}'")))?;
            if idx >= values.len() {
                return Err(Error::Input(format!("index {idx} out of range")));
            }
            values[idx] = val;
            seen += 1;
        }
        if seen != values.len() {
            return Err(Error::Input(format!(
                "expected {} rows, found {seen}",
                values.len()
            )));
        }
        Field::from_values(grid, values, exterior)
    }
}

/// Samples a profile at cell centers; clamps stray values into [-1, 1] and
/// records how many samples needed it.
pub fn make_field(grid: Grid, profile: &Profile, exterior: Exterior) -> Result<Field> {
    let mut clamp_count = 0usize;
    let mut values = Vec::with_capacity(grid.num_cells());
    for idx in 0..grid.num_cells() {
        let v = profile.eval(grid.n, grid.center(idx));
        if !v.is_finite() {
            return Err(Error::Input(format!(
                "profile produced a non-finite value at cell {idx}"
            )));
        }
        if v.abs() > 1.0 {
            clamp_count += 1;
        }
        values.push(v.clamp(-1.0, 1.0));
    }
    Ok(Field {
        grid,
        values,
        exterior,
        profile: Some(profile.clone()),
        clamp_count,
    })
}

/// Lebesgue measure of B_radius intersect {u > threshold}, exact for the
/// piecewise-constant-on-cells interpretation.
pub fn level_set_volume(u: &Field, threshold: f64, radius: f64) -> Result<f64> {
    if radius > u.grid.outer_edge() + 1e-12 {
        return Err(Error::Domain(format!(
            "radius {radius} exceeds box radius {}",
            u.grid.outer_edge()
        )));
    }
    let vol = u.grid.cell_volume();
    let mut count = 0usize;
    for (idx, &v) in u.values.iter().enumerate() {
        if u.grid.radius(idx) <= radius && v > threshold {
            count += 1;
        }
    }
    Ok(count as f64 * vol)
}

/// Volumes of {u > threshold} over a list of radii.
#[derive(Debug, Clone)]
pub struct LevelSetReport {
    pub threshold: f64,
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
}

pub fn level_set_report(u: &Field, threshold: f64, radii: &[f64]) -> Result<LevelSetReport> {
    let volumes = radii
        .iter()
        .map(|&r| level_set_volume(u, threshold, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelSetReport {
        threshold,
        radii: radii.to_vec(),
        volumes,
    })
}

/// Cell-sum quadrature of |1+u|^m over the band {lo < u <= hi} in B_radius.
pub fn interface_integral(u: &Field, theta_lo: f64, theta_hi: f64, radius: f64, m: f64) -> Result<f64> {
    if !(-1.0 < theta_lo && theta_lo < theta_hi && theta_hi < 1.0) {
        return Err(Error::Domain(format!(
            "band ({theta_lo}, {theta_hi}] is not admissible"
        )));
    }
    if radius > u.grid.outer_edge() + 1e-12 {
        return Err(Error::Domain(format!(
            "radius {radius} exceeds box radius {}",
            u.grid.outer_edge()
        )));
    }
    let vol = u.grid.cell_volume();
    let mut acc = 0.0;
    for (idx, &v) in u.values.iter().enumerate() {
        if u.grid.radius(idx) <= radius && v > theta_lo && v <= theta_hi {
            acc += (1.0 + v).abs().powf(m) * vol;
        }
    }
    Ok(acc)
}

/// Symmetric decreasing rearrangement of u relative to its constant exterior
/// value: cell values are sorted and reassigned to cells sorted by |x| (ties
/// broken by cell index), which preserves the distribution function exactly.
pub fn symmetric_decreasing_rearrangement(u: &Field) -> Result<Field> {
    let base = match u.exterior {
        Exterior::Constant(c) => c,
        _ => {
            return Err(Error::Domain(
                "rearrangement needs a constant exterior value".into(),
            ))
        }
    };
    let min_inside = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_inside < base - 1e-12 {
        return Err(Error::Domain(
            "u dips below its exterior value, so u - essinf has unbounded support".into(),
        ));
    }
    // Support must stay clear of the boundary ring or mass would leak out.
    let last = u.grid.cells_per_axis - 1;
    for (idx, &v) in u.values.iter().enumerate() {
        let on_boundary = match u.grid.n {
            1 => idx == 0 || idx == last,
            _ => {
                let row = idx / u.grid.cells_per_axis;
                let col = idx % u.grid.cells_per_axis;
                row == 0 || col == 0 || row == last || col == last
            }
        };
        if on_boundary && (v - base).abs() > 1e-12 {
            return Err(Error::Domain(
                "support of u - exterior touches the box boundary".into(),
            ));
        }
    }

    let mut by_radius: Vec<usize> = (0..u.values.len()).collect();
    by_radius.sort_by(|&a, &b| {
        u.grid
            .radius(a)
            .partial_cmp(&u.grid.radius(b))
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut sorted_vals: Vec<f64> = u.values.clone();
    sorted_vals.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut out = vec![0.0; u.values.len()];
    for (rank, &cell) in by_radius.iter().enumerate() {
        out[cell] = sorted_vals[rank];
    }
    Field::from_values(u.grid, out, u.exterior.clone())
}
