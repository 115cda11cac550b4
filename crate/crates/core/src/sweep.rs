//! Parameter sweeps described by plain-text `key = value` files.
//!
//! ```text
//! kind = bmo-composition      # holder | covering | carleson | transport | perturbed
//! map = strain                # map family (or `field = cellular` for transport kinds)
//! grid.t = 0.5, 1, 1.5, 2     # swept parameters, cartesian product in key order
//! param.profile = linear      # fixed parameters
//! functions = log; slit:axis=0
//! n = 256
//! side = 2
//! periodic = false
//! stride = 8
//! radii = dyadic              # or a comma list
//! p = 1
//! a = 0
//! seed = 1
//! output = strain.csv
//! ```
//!
//! Covering sweeps also read `ball_radius` and `min_cells` (adaptive
//! resolution); Carleson sweeps read `densities` and `t_max`; transport
//! sweeps read `times`, `step` and `dt`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::carleson::{carleson_norm, default_depth, parse_density, pullback_builtin};
use crate::corpus::{parse_builtin, Builtin};
use crate::domain::{ball_family, dyadic_radii, Ball, BallFamily, Grid, Window};
use crate::error::{Error, Result, SpecError};
use crate::fit::{self, FitResult};
use crate::maps::{estimate_k, parse_field, parse_map, BiLipMap};
use crate::oscillation::{composition_ratio_field, OscillationParams};
use crate::transport::{growth_report, solve_perturbed, solve_transport_field, PerturbedProblem};
use crate::whitney::{covering_statistic, image_cover, validate_cover};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    BmoComposition,
    Holder,
    Covering,
    Carleson,
    Transport,
    Perturbed,
}

impl Kind {
    fn parse(s: &str) -> Result<Kind, SpecError> {
        Ok(match s {
            "bmo-composition" => Kind::BmoComposition,
            "holder" => Kind::Holder,
            "covering" => Kind::Covering,
            "carleson" => Kind::Carleson,
            "transport" => Kind::Transport,
            "perturbed" => Kind::Perturbed,
            other => return Err(SpecError::new("kind", format!("unknown experiment `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::BmoComposition => "bmo-composition",
            Kind::Holder => "holder",
            Kind::Covering => "covering",
            Kind::Carleson => "carleson",
            Kind::Transport => "transport",
            Kind::Perturbed => "perturbed",
        }
    }

    fn is_flow(&self) -> bool {
        matches!(self, Kind::Transport | Kind::Perturbed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Radii {
    Dyadic,
    List(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub kind: Kind,
    /// Map family, or vector field family for transport kinds.
    pub family: String,
    pub fixed: BTreeMap<String, String>,
    pub swept: BTreeMap<String, Vec<String>>,
    pub functions: Vec<String>,
    pub densities: Vec<String>,
    pub n: usize,
    pub side: f64,
    pub periodic: bool,
    pub stride: usize,
    pub radii: Radii,
    pub p: f64,
    pub a: f64,
    pub seed: u64,
    pub k_samples: usize,
    pub ball_radius: f64,
    pub min_cells: Option<f64>,
    pub t_max: Option<f64>,
    pub times: Vec<f64>,
    pub step: f64,
    pub dt: f64,
    pub output: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            kind: Kind::BmoComposition,
            family: "strain".into(),
            fixed: BTreeMap::new(),
            swept: BTreeMap::new(),
            functions: vec!["log".into()],
            densities: vec!["ridge".into()],
            n: 256,
            side: 2.0,
            periodic: false,
            stride: 8,
            radii: Radii::Dyadic,
            p: 1.0,
            a: 0.0,
            seed: 1,
            k_samples: 256,
            ball_radius: 0.25,
            min_cells: None,
            t_max: None,
            times: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            step: 0.05,
            dt: 0.05,
            output: None,
        }
    }
}

fn num<T: std::str::FromStr>(field: &str, v: &str) -> Result<T, SpecError> {
    v.trim()
        .parse()
        .map_err(|_| SpecError::new(field, format!("cannot parse `{}`", v.trim())))
}

fn list(v: &str, sep: char) -> Vec<String> {
    v.split(sep)
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn nums(field: &str, v: &str) -> Result<Vec<f64>, SpecError> {
    list(v, ',').iter().map(|s| num(field, s)).collect()
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<SweepSpec, SpecError> {
        let mut spec = SweepSpec::default();
        let mut kind_seen = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SpecError::new(format!("line {}", lineno + 1), "expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(p) = k.strip_prefix("grid.") {
                spec.swept.insert(p.to_string(), list(v, ','));
                continue;
            }
            if let Some(p) = k.strip_prefix("param.") {
                spec.fixed.insert(p.to_string(), v.to_string());
                continue;
            }
            match k {
                "kind" => {
                    spec.kind = Kind::parse(v)?;
                    kind_seen = true;
                }
                "map" | "field" => spec.family = v.to_string(),
                "functions" => spec.functions = list(v, ';'),
                "densities" => spec.densities = list(v, ';'),
                "n" => spec.n = num(k, v)?,
                "side" => spec.side = num(k, v)?,
                "periodic" => spec.periodic = num(k, v)?,
                "stride" => spec.stride = num(k, v)?,
                "radii" => {
                    spec.radii = if v == "dyadic" {
                        Radii::Dyadic
                    } else {
                        Radii::List(nums(k, v)?)
                    }
                }
                "p" => spec.p = num(k, v)?,
                "a" => spec.a = num(k, v)?,
                "seed" => spec.seed = num(k, v)?,
                "k_samples" => spec.k_samples = num(k, v)?,
                "ball_radius" => spec.ball_radius = num(k, v)?,
                "min_cells" => spec.min_cells = Some(num(k, v)?),
                "t_max" => spec.t_max = Some(num(k, v)?),
                "times" => spec.times = nums(k, v)?,
                "step" => spec.step = num(k, v)?,
                "dt" => spec.dt = num(k, v)?,
                "output" => spec.output = Some(PathBuf::from(v)),
                other => return Err(SpecError::new(other, "unknown key")),
            }
        }
        if !kind_seen {
            return Err(SpecError::new("kind", "missing"));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<SweepSpec> {
        Ok(SweepSpec::parse(&std::fs::read_to_string(path)?)?)
    }

    fn validate(&self) -> Result<(), SpecError> {
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(SpecError::new("n", "must be a power of two >= 8"));
        }
        if !(self.side > 0.0) {
            return Err(SpecError::new("side", "must be positive"));
        }
        if self.stride == 0 || self.stride > self.n {
            return Err(SpecError::new("stride", "must be in 1..=n"));
        }
        if !(self.p >= 1.0) {
            return Err(SpecError::new("p", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.a) {
            return Err(SpecError::new("a", "must be in [0, 1]"));
        }
        if self.kind.is_flow() && self.times.first() != Some(&0.0) {
            return Err(SpecError::new("times", "must start at 0"));
        }
        Ok(())
    }

    /// Canonical `key = value` text; parsing it gives back the same spec.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind = {}", self.kind.name());
        let _ = writeln!(s, "{} = {}", if self.kind.is_flow() { "field" } else { "map" }, self.family);
        for (k, v) in &self.swept {
            let _ = writeln!(s, "grid.{k} = {}", v.join(", "));
        }
        for (k, v) in &self.fixed {
            let _ = writeln!(s, "param.{k} = {v}");
        }
        let _ = writeln!(s, "functions = {}", self.functions.join("; "));
        let _ = writeln!(s, "densities = {}", self.densities.join("; "));
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "side = {}", self.side);
        let _ = writeln!(s, "periodic = {}", self.periodic);
        let _ = writeln!(s, "stride = {}", self.stride);
        match &self.radii {
            Radii::Dyadic => {
                let _ = writeln!(s, "radii = dyadic");
            }
            Radii::List(r) => {
                let v: Vec<String> = r.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "radii = {}", v.join(", "));
            }
        }
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "a = {}", self.a);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "k_samples = {}", self.k_samples);
        let _ = writeln!(s, "ball_radius = {}", self.ball_radius);
        if let Some(c) = self.min_cells {
            let _ = writeln!(s, "min_cells = {c}");
        }
        if let Some(t) = self.t_max {
            let _ = writeln!(s, "t_max = {t}");
        }
        let t: Vec<String> = self.times.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "times = {}", t.join(", "));
        let _ = writeln!(s, "step = {}", self.step);
        let _ = writeln!(s, "dt = {}", self.dt);
        if let Some(o) = &self.output {
            let _ = writeln!(s, "output = {}", o.display());
        }
        s
    }

    pub fn grid(&self) -> Result<Grid> {
        let dim = 2;
        let window = if self.periodic && self.kind.is_flow() {
            Window::new(dim, [0.0; 3], self.side, true)?
        } else {
            Window::centered(dim, self.side, self.periodic)?
        };
        Grid::new(window, self.n)
    }

    fn family_for(&self, grid: &Grid) -> Result<BallFamily> {
        let radii = match &self.radii {
            Radii::Dyadic => dyadic_radii(grid),
            Radii::List(r) => r.clone(),
        };
        ball_family(grid, self.stride, &radii)
    }

    /// Every swept combination, as `(params text, full map spec)`.
    pub fn instances(&self) -> Vec<(String, String)> {
        let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (k, vals) in &self.swept {
            let mut next = Vec::new();
            for c in &combos {
                for v in vals {
                    let mut c2 = c.clone();
                    c2.push((k.clone(), v.clone()));
                    next.push(c2);
                }
            }
            combos = next;
        }
        combos
            .into_iter()
            .map(|c| {
                let mut all: Vec<(String, String)> = self.fixed.clone().into_iter().collect();
                all.extend(c.iter().cloned());
                let full: Vec<String> = all.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let shown: Vec<String> = c.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let spec = if full.is_empty() {
                    self.family.clone()
                } else {
                    format!("{}:{}", self.family, full.join(","))
                };
                (shown.join(";"), spec)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub csv: String,
    pub summary: String,
    /// Per function (or density): fits of the sweep's `y` against `K` or `t`.
    pub fits: Vec<(String, Vec<FitResult>)>,
    /// No group had enough points to fit.
    pub no_fit: bool,
}

struct Row {
    key: (String, String, String, u64),
    text: String,
    x: f64,
    y: f64,
}

fn header(kind: Kind) -> &'static str {
    match kind {
        Kind::BmoComposition | Kind::Holder => {
            "map,params,K_analytic,K_estimated,seminorm_in,seminorm_out,ratio,function"
        }
        Kind::Covering => {
            "map,params,K_analytic,K_estimated,n,balls,statistic,statistic_over_logK,double_cover,ratio_min,ratio_max,mass_fraction"
        }
        Kind::Carleson => "map,params,K_analytic,K_estimated,norm_in,norm_out,excess,density",
        Kind::Transport | Kind::Perturbed => "field,params,lip,t,seminorm,l2,min,max,ratio,function",
    }
}

fn map_rows(spec: &SweepSpec, grid: &Grid, params_text: &str, map: &BiLipMap) -> Result<Vec<Row>> {
    let k = map
        .k_analytic()
        .ok_or_else(|| SpecError::new("map", format!("`{}` has no analytic K", map.name)))?;
    let k_est = estimate_k(map, spec.k_samples, spec.seed);
    let mut rows = Vec::new();
    match spec.kind {
        Kind::BmoComposition | Kind::Holder => {
            let params = OscillationParams::new(spec.p, spec.a, grid.dim())?;
            let family = spec.family_for(grid)?;
            for fname in &spec.functions {
                let f: Builtin = parse_builtin(fname, grid)?;
                let (base, out, ratio) = composition_ratio_field(&f, map, grid, &params, &family)?;
                rows.push(Row {
                    key: (spec.family.clone(), params_text.into(), fname.clone(), 0),
                    text: format!("{},{params_text},{k},{k_est},{base},{out},{ratio},{fname}", map.name),
                    x: k,
                    y: ratio,
                });
            }
        }
        Kind::Covering => {
            let g = match spec.min_cells {
                Some(c) => {
                    let lip = map.lip_inverse.unwrap_or(k);
                    let want = spec.ball_radius / lip / c;
                    let mut n = spec.n;
                    while spec.side / (n as f64) > want {
                        n *= 2;
                    }
                    grid.with_n(n)?
                }
                None => *grid,
            };
            let ball = Ball::new(g.window.center(), spec.ball_radius);
            let (mask, cover) = image_cover(map, &ball, &g)?;
            let rep = validate_cover(&cover, &mask);
            let stat = covering_statistic(&cover, spec.a, spec.p)?;
            rows.push(Row {
                key: (spec.family.clone(), params_text.into(), String::new(), 0),
                text: format!(
                    "{},{params_text},{k},{k_est},{},{},{stat},{},{},{},{},{}",
                    map.name,
                    g.n,
                    rep.balls,
                    stat / k.ln(),
                    rep.double_cover_fraction,
                    rep.ratio_min,
                    rep.ratio_max,
                    rep.mass_fraction
                ),
                x: k,
                y: stat,
            });
        }
        Kind::Carleson => {
            let t_max = spec.t_max.unwrap_or(spec.side / 8.0);
            let depth = default_depth(grid, t_max);
            let radii: Vec<f64> = dyadic_radii(grid).into_iter().filter(|&r| r <= t_max).collect();
            let family = ball_family(grid, spec.stride, &radii)?;
            for dname in &spec.densities {
                let d = parse_density(dname, grid, t_max, depth)?;
                let base = d.sample(grid, t_max, depth)?;
                let n0 = carleson_norm(&base, &family)?.value;
                let n1 = carleson_norm(&pullback_builtin(&d, map, grid, t_max, depth)?, &family)?.value;
                let sup = base.sup_norm();
                let excess = if sup > 0.0 { (n1 - n0) / (sup * sup) } else { 0.0 };
                rows.push(Row {
                    key: (spec.family.clone(), params_text.into(), dname.clone(), 0),
                    text: format!("{},{params_text},{k},{k_est},{n0},{n1},{excess},{dname}", map.name),
                    x: k,
                    y: excess,
                });
            }
        }
        Kind::Transport | Kind::Perturbed => unreachable!(),
    }
    Ok(rows)
}

fn flow_rows(spec: &SweepSpec, grid: &Grid, params_text: &str, field_spec: &str) -> Result<Vec<Row>> {
    let field = parse_field(field_spec)?;
    let params = OscillationParams::new(spec.p, spec.a, grid.dim())?;
    let family = spec.family_for(grid)?;
    let mut rows = Vec::new();
    for fname in &spec.functions {
        let f = parse_builtin(fname, grid)?;
        let snaps = if spec.kind == Kind::Transport {
            solve_transport_field(&field, &f, grid, &spec.times, spec.step)?
        } else {
            let w0 = f.sample(grid)?;
            solve_perturbed(&PerturbedProblem::new(field.clone(), w0, spec.dt)?, &spec.times)?
        };
        let rep = growth_report(&field.name, &spec.times, &snaps, &params, &family, field.lip)?;
        for (i, (r, ratio)) in rep.rows.iter().zip(rep.ratios()).enumerate() {
            rows.push(Row {
                key: (spec.family.clone(), params_text.into(), fname.clone(), i as u64),
                text: format!(
                    "{},{params_text},{},{},{},{},{},{},{ratio},{fname}",
                    field.name, field.lip, r.t, r.seminorm, r.l2, r.min, r.max
                ),
                x: r.t,
                y: ratio,
            });
        }
    }
    Ok(rows)
}

/// Runs every instance, sorts rows by (map, params, function) and fits each
/// function's `y` against `K` (or `t` for transport kinds).
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let grid = spec.grid()?;
    let instances = spec.instances();
    let empty_grid = spec.swept.values().any(|v| v.is_empty());
    let per = if empty_grid {
        Vec::new()
    } else {
        instances
            .par_iter()
            .map(|(shown, full)| {
                if spec.kind.is_flow() {
                    flow_rows(spec, &grid, shown, full)
                } else {
                    let map = parse_map(full)?;
                    map_rows(spec, &grid, shown, &map)
                }
            })
            .collect::<Result<Vec<_>>>()?
    };
    let mut rows: Vec<Row> = per.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.key.cmp(&b.key));
    let mut csv = String::from(header(spec.kind));
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.text);
        csv.push('\n');
    }
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        groups.entry(r.key.2.clone()).or_default().push((r.x, r.y));
    }
    let mut fits = Vec::new();
    let mut summary = format!("kind {}\nrows {}\n", spec.kind.name(), rows.len());
    for (name, mut pts) in groups {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let label = if name.is_empty() { "all".to_string() } else { name };
        match fit::fit_models(&xs, &ys, grid.dim()) {
            Ok(f) => {
                for r in &f {
                    let c: Vec<String> = r.coeffs.iter().map(|c| format!("{c:.6}")).collect();
                    let _ = writeln!(summary, "fit {label} {} coeffs [{}] residual {:.6}", r.model, c.join(", "), r.residual);
                }
                fits.push((label, f));
            }
            Err(Error::TooFewPoints { .. }) | Err(Error::InvalidGrid(_)) => {
                let _ = writeln!(summary, "fit {label} none");
            }
            Err(e) => return Err(e),
        }
    }
    let no_fit = fits.is_empty();
    if no_fit {
        summary.push_str("NoFit\n");
    }
    Ok(SweepOutput {
        csv,
        summary,
        fits,
        no_fit,
    })
}

/// Writes the CSV to `path` and the summary next to it.
pub fn write_output(out: &SweepOutput, path: &Path) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, &out.csv)?;
    let summary = path.with_extension("summary.txt");
    std::fs::write(&summary, &out.summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = "
kind = bmo-composition
map = strain
grid.t = 0.5, 1, 1.5, 2
functions = log; sawtooth
n = 64
stride = 8
seed = 3
";

    #[test]
    fn parse_roundtrip() {
        let s = SweepSpec::parse(SPEC).unwrap();
        assert_eq!(s.kind, Kind::BmoComposition);
        assert_eq!(s.swept["t"].len(), 4);
        assert_eq!(SweepSpec::parse(&s.to_text()).unwrap(), s);
        assert_eq!(s.instances()[1], ("t=1".to_string(), "strain:t=1".to_string()));
    }

    #[test]
    fn field_level_errors() {
        let e = SweepSpec::parse("kind = bmo-composition\nn = 100\n").unwrap_err();
        assert_eq!(e.field, "n");
        let e = SweepSpec::parse("kind = sideways\n").unwrap_err();
        assert_eq!(e.field, "kind");
        let e = SweepSpec::parse("kind = holder\ncolour = red\n").unwrap_err();
        assert_eq!(e.field, "colour");
        let e = SweepSpec::parse("n = 64\n").unwrap_err();
        assert_eq!(e.field, "kind");
        let s = SweepSpec::parse("kind = holder\nmap = strain\ngrid.t = 1\nfunctions = wave\n").unwrap();
        assert!(matches!(run_sweep(&s), Err(Error::Spec(e)) if e.field == "f"));
    }

    #[test]
    fn deterministic_rows_and_fits() {
        let s = SweepSpec::parse(SPEC).unwrap();
        let a = run_sweep(&s).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| run_sweep(&s).unwrap());
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.csv.lines().count(), 9);
        assert!(a.csv.lines().nth(1).unwrap().starts_with("strain:t=0.5,t=0.5,"));
        assert_eq!(a.fits.len(), 2);
        assert!(!a.no_fit);
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let s = SweepSpec::parse("kind = bmo-composition\nmap = strain\ngrid.t =\nn = 64\n").unwrap();
        let out = run_sweep(&s).unwrap();
        assert_eq!(out.csv, format!("{}\n", header(Kind::BmoComposition)));
        assert!(out.no_fit);
    }

    #[test]
    fn transport_sweep_rows() {
        let s = SweepSpec::parse(
            "kind = transport\nfield = strain\nfunctions = holder:a=0.5,axis=1\na = 0.5\nn = 64\ntimes = 0, 0.5, 1, 1.5\n",
        )
        .unwrap();
        let out = run_sweep(&s).unwrap();
        assert_eq!(out.csv.lines().count(), 5);
        let exp = &out.fits[0].1.iter().find(|f| f.model == fit::Model::Exponential).unwrap();
        assert!((exp.coeffs[1] - 0.5).abs() < 0.01);
    }
}
