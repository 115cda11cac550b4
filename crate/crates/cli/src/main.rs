mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oscillab::carleson::{
    carleson_norm, default_depth, parse_density, pullback, pullback_builtin, read_density_csv, sc_class_check,
    write_density_csv,
};
use oscillab::corpus::{parse_builtin, Builtin, ScalarField};
use oscillab::domain::{ball_family, dyadic_radii, io, Ball, BallFamily, Grid, GridFunction, Window};
use oscillab::experiments::{self, Config};
use oscillab::maps::{estimate_k, identity, parse_field, parse_map, BiLipMap};
use oscillab::oscillation::{compose, compose_field, seminorm, OscillationParams};
use oscillab::report::Report;
use oscillab::sweep::{run_sweep, write_output, SweepSpec};
use oscillab::transport::{
    growth_report, solve_perturbed, solve_transport, solve_transport_field, GrowthReport, PerturbedProblem,
    TransportProblem,
};
use oscillab::whitney::{covering_statistic, image_cover, validate_cover};
use oscillab::{Error, Result, SpecError};

#[derive(Parser)]
#[command(name = "oscillab", version, about = "Composition estimates for measure-preserving bi-Lipschitz maps")]
struct Cli {
    /// Seed for every randomized step (default 1; overrides a sweep file's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid resolution per axis (power of two).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory that relative output paths are written under.
    #[arg(long, global = true, env = "OSCILLAB_OUT")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Window side length.
    #[arg(long)]
    side: Option<f64>,
    /// Periodic window.
    #[arg(long)]
    periodic: bool,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// Ball centers every `stride` cells.
    #[arg(long, default_value_t = 8)]
    stride: usize,
    /// `dyadic` or a comma list of radii.
    #[arg(long, default_value = "dyadic")]
    radii: String,
}

#[derive(Subcommand)]
enum Command {
    /// Seminorm of a builtin or grid file, optionally composed with a map.
    Seminorm {
        /// Builtin spec (e.g. `log`, `holder:a=0.5`) or a grid-function file.
        #[arg(long = "f")]
        f: String,
        #[arg(long)]
        map: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Whitney cover of the image of a ball.
    Whitney {
        #[arg(long)]
        map: String,
        /// `cx,cy,r`.
        #[arg(long)]
        ball: String,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Carleson norm of a density and of its pull-back by a map.
    Carleson {
        /// Builtin density (`ridge`, `band`, `ball:r=..`, `spike`, `ones`, `zero`) or a density file.
        #[arg(long)]
        density: String,
        #[arg(long, default_value = "identity")]
        map: String,
        /// `stride=S[,radii=r1;r2;..]`; radii above the horizon are dropped.
        #[arg(long, default_value = "stride=16")]
        family: String,
        #[arg(long, default_value_t = 0.25)]
        t_max: f64,
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
        /// Also write the sampled density as CSV.
        #[arg(long)]
        write_density: Option<PathBuf>,
    },
    /// Transport by a divergence-free field; writes `t,seminorm,l2,min,max`.
    Transport {
        #[arg(long)]
        field: String,
        /// Builtin spec or grid-function file.
        #[arg(long)]
        u0: String,
        #[arg(long = "T", default_value_t = 2.0)]
        horizon: f64,
        /// Output interval.
        #[arg(long, default_value_t = 0.25)]
        dt: f64,
        /// RK4 step along characteristics.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transport plus the Riesz term on the periodic unit square.
    Perturbed {
        #[arg(long)]
        field: String,
        #[arg(long, alias = "u0")]
        w0: String,
        #[arg(long = "T", default_value_t = 2.0)]
        horizon: f64,
        /// Splitting step.
        #[arg(long, default_value_t = 0.025)]
        dt: f64,
        /// Output interval, a multiple of `dt`.
        #[arg(long, default_value_t = 0.25)]
        every: f64,
        /// Drop the Riesz term.
        #[arg(long)]
        no_riesz: bool,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a sweep spec file.
    Sweep {
        spec: PathBuf,
        /// Overrides the spec's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes ratio against log K (or t) as SVG.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Runs acceptance criteria and prints pass/fail; exits 1 unless all pass.
    Report {
        /// Comma list of criteria; default all.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        /// Machine-readable results.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Runs the covering recipe on a non-measure-preserving map instead.
        #[arg(long)]
        negative_control: bool,
    },
    /// Plots columns of a CSV as SVG, one series per value of `--group`.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "K_analytic")]
        x: String,
        #[arg(long, default_value = "ratio")]
        y: String,
        #[arg(long, default_value = "function")]
        group: String,
        /// Plot `log x`.
        #[arg(long)]
        log_x: bool,
    },
}

struct Ctx {
    seed: u64,
    seed_given: bool,
    grid_n: Option<usize>,
    out_dir: Option<PathBuf>,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        match &self.out_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn write(&self, p: &Path, text: &str) -> Result<PathBuf> {
        let p = self.path(p);
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(&p, text)?;
        Ok(p)
    }

    /// Writes to `out` when given, else prints.
    fn emit(&self, out: Option<&Path>, text: &str) -> Result<()> {
        match out {
            Some(p) => {
                let p = self.write(p, text)?;
                eprintln!("wrote {}", p.display());
            }
            None => print!("{text}"),
        }
        Ok(())
    }

    fn grid(&self, args: &GridArgs, default_n: usize, default_side: f64) -> Result<Grid> {
        let side = args.side.unwrap_or(default_side);
        let window = Window::centered(2, side, args.periodic)?;
        Grid::new(window, self.grid_n.unwrap_or(default_n))
    }
}

fn family(grid: &Grid, args: &FamilyArgs, max_radius: f64) -> Result<BallFamily> {
    let radii: Vec<f64> = if args.radii == "dyadic" {
        dyadic_radii(grid)
    } else {
        args.radii
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| SpecError::new("radii", format!("cannot parse `{s}`"))))
            .collect::<std::result::Result<_, _>>()?
    };
    let radii: Vec<f64> = radii.into_iter().filter(|&r| r <= max_radius).collect();
    ball_family(grid, args.stride, &radii)
}

enum Source {
    Builtin(Builtin),
    File(GridFunction),
}

fn source(spec: &str, grid: &Grid) -> Result<Source> {
    let p = Path::new(spec);
    if p.is_file() {
        Ok(Source::File(io::read_path(p)?))
    } else {
        Ok(Source::Builtin(parse_builtin(spec, grid)?))
    }
}

fn k_of(map: &BiLipMap, seed: u64) -> f64 {
    map.k_analytic().unwrap_or_else(|| estimate_k(map, 256, seed))
}

fn cmd_seminorm(ctx: &Ctx, f: &str, map: Option<&str>, p: f64, a: f64, ga: &GridArgs, fa: &FamilyArgs) -> Result<()> {
    let grid = ctx.grid(ga, 256, 2.0)?;
    let params = OscillationParams::new(p, a, 2)?;
    let map = match map {
        Some(m) => parse_map(m)?,
        None => identity(2),
    };
    let (name, g) = match source(f, &grid)? {
        Source::Builtin(b) => (b.name(), compose_field(&b, &map, &grid)?),
        Source::File(u) => (f.to_string(), compose(&u, &map)?),
    };
    let fam = family(g.grid(), fa, f64::INFINITY)?;
    let s = seminorm(&g, &params, &fam)?;
    let c = s.argmax_ball.center;
    println!("name,p,a,K_phi,seminorm,argmax_center,argmax_radius");
    println!("{name},{p},{a},{},{},{};{},{}", k_of(&map, ctx.seed), s.value, c[0], c[1], s.argmax_ball.radius);
    Ok(())
}

fn parse_ball(s: &str) -> Result<Ball> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| SpecError::new("ball", "expected cx,cy,r"))?;
    match v[..] {
        [x, y, r] if r > 0.0 => Ok(Ball::new([x, y, 0.0], r)),
        _ => Err(SpecError::new("ball", "expected cx,cy,r with r > 0").into()),
    }
}

fn cmd_whitney(ctx: &Ctx, map: &str, ball: &str, a: f64, p: f64, ga: &GridArgs, out: Option<&Path>) -> Result<()> {
    let grid = ctx.grid(ga, 256, 2.0)?;
    let map = parse_map(map)?;
    let ball = parse_ball(ball)?;
    let (mask, cover) = image_cover(&map, &ball, &grid)?;
    let rep = validate_cover(&cover, &mask);
    let stat = covering_statistic(&cover, a, p)?;
    let mut s = String::from("k,center_x,center_y,radius,dist_to_complement\n");
    for (k, (b, d)) in cover.balls.iter().zip(&cover.dists).enumerate() {
        s.push_str(&format!("{k},{},{},{},{d}\n", b.center[0], b.center[1], b.radius));
    }
    s.push_str(&format!(
        "# covering_statistic={stat},balls={},double_cover={},ratio_min={},ratio_max={},mass_fraction={},disjoint={}\n",
        rep.balls, rep.double_cover_fraction, rep.ratio_min, rep.ratio_max, rep.mass_fraction, rep.disjoint
    ));
    ctx.emit(out, &s)
}

fn parse_family_spec(spec: &str) -> Result<FamilyArgs> {
    let mut args = FamilyArgs {
        stride: 16,
        radii: "dyadic".into(),
    };
    for part in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| SpecError::new("family", "expected key=value"))?;
        match k.trim() {
            "stride" => {
                args.stride = v
                    .trim()
                    .parse()
                    .map_err(|_| SpecError::new("stride", format!("cannot parse `{v}`")))?
            }
            "radii" => args.radii = v.trim().replace(';', ","),
            other => return Err(SpecError::new(other, "unknown family key").into()),
        }
    }
    Ok(args)
}

#[allow(clippy::too_many_arguments)]
fn cmd_carleson(
    ctx: &Ctx,
    density: &str,
    map: &str,
    fam_spec: &str,
    t_max: f64,
    depth: Option<usize>,
    ga: &GridArgs,
    write: Option<&Path>,
) -> Result<()> {
    let map = parse_map(map)?;
    let fa = parse_family_spec(fam_spec)?;
    let (name, base, pulled) = if Path::new(density).is_file() {
        let mu = read_density_csv(BufReader::new(fs::File::open(density)?))?;
        let pulled = pullback(&mu, &map)?;
        (density.to_string(), mu, pulled)
    } else {
        let grid = ctx.grid(ga, 512, 2.0)?;
        let depth = depth.unwrap_or_else(|| default_depth(&grid, t_max));
        let d = parse_density(density, &grid, t_max, depth)?;
        let base = d.sample(&grid, t_max, depth)?;
        let pulled = pullback_builtin(&d, &map, &grid, t_max, depth)?;
        (d.name(), base, pulled)
    };
    let fam = family(base.grid(), &fa, base.t_max())?;
    let n0 = carleson_norm(&base, &fam)?;
    let n1 = carleson_norm(&pulled, &fam)?;
    let sup = base.sup_norm();
    let k = k_of(&map, ctx.seed);
    let excess = if sup > 0.0 { (n1.value - n0.value) / (sup * sup) } else { 0.0 };
    let ceiling = n1.value <= k.powi(2) * n0.value * (1.0 + 1e-9) + 1e-12;
    println!("density,map,K,norm_in,norm_out,excess,sup_norm,in_class,ceiling_ok");
    println!(
        "{name},{},{k},{},{},{excess},{sup},{},{ceiling}",
        map.name,
        n0.value,
        n1.value,
        sc_class_check(&base, &n0)
    );
    if let Some(p) = write {
        let mut buf = Vec::new();
        write_density_csv(&base, &mut buf)?;
        let p = ctx.write(p, &String::from_utf8_lossy(&buf))?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn times(horizon: f64, every: f64) -> Result<Vec<f64>> {
    if !(every > 0.0) || !(horizon >= 0.0) {
        return Err(SpecError::new("dt", "interval and horizon must be positive").into());
    }
    let steps = (horizon / every + 1e-9).floor() as usize;
    Ok((0..=steps).map(|i| i as f64 * every).collect())
}

fn growth_text(rep: &GrowthReport) -> String {
    let mut s = rep.to_csv();
    for f in &rep.fits {
        let c: Vec<String> = f.coeffs.iter().map(|c| format!("{c:.6}")).collect();
        s.push_str(&format!("# fit {} [{}] residual {:.6}\n", f.model, c.join(", "), f.residual));
    }
    s.push_str(&format!("# log_slope {:.6} envelope {:.6}\n", rep.log_slope, rep.envelope));
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_transport(
    ctx: &Ctx,
    field: &str,
    u0: &str,
    horizon: f64,
    dt: f64,
    step: f64,
    params: OscillationParams,
    ga: &GridArgs,
    fa: &FamilyArgs,
    out: Option<&Path>,
) -> Result<()> {
    let field = parse_field(field)?;
    let grid = ctx.grid(ga, 256, 2.0)?;
    let ts = times(horizon, dt)?;
    let snaps = match source(u0, &grid)? {
        Source::Builtin(b) => solve_transport_field(&field, &b, &grid, &ts, step)?,
        Source::File(u) => solve_transport(&TransportProblem::new(field.clone(), u, horizon, step)?, &ts)?,
    };
    let fam = family(snaps[0].grid(), fa, f64::INFINITY)?;
    let rep = growth_report(&field.name, &ts, &snaps, &params, &fam, field.lip)?;
    ctx.emit(out, &growth_text(&rep))
}

#[allow(clippy::too_many_arguments)]
fn cmd_perturbed(
    ctx: &Ctx,
    field: &str,
    w0: &str,
    horizon: f64,
    dt: f64,
    every: f64,
    no_riesz: bool,
    params: OscillationParams,
    fa: &FamilyArgs,
    out: Option<&Path>,
) -> Result<()> {
    let field = parse_field(field)?;
    let grid = Grid::new(Window::unit(2, true)?, ctx.grid_n.unwrap_or(128))?;
    let w = match source(w0, &grid)? {
        Source::Builtin(b) => b.sample(&grid)?,
        Source::File(u) => u,
    };
    let ratio = every / dt;
    if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
        return Err(SpecError::new("every", "must be a positive multiple of dt").into());
    }
    let ts = times(horizon, every)?;
    let mut prob = PerturbedProblem::new(field.clone(), w, dt)?;
    if no_riesz {
        prob = prob.without_riesz();
    }
    let snaps = solve_perturbed(&prob, &ts)?;
    let fam = family(snaps[0].grid(), fa, f64::INFINITY)?;
    let rep = growth_report(&field.name, &ts, &snaps, &params, &fam, field.lip)?;
    ctx.emit(out, &growth_text(&rep))
}

fn csv_columns(text: &str, x: &str, y: &str, group: &str) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::from(SpecError::new(name, "no such column")))
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let ig = header.iter().position(|h| *h == group);
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let num = |i: usize| f.get(i).and_then(|v| v.parse::<f64>().ok()).unwrap_or(f64::NAN);
        let key = ig.and_then(|i| f.get(i)).map_or(String::from(y), |s| s.to_string());
        out.entry(key).or_default().push((num(ix), num(iy)));
    }
    for v in out.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(out)
}

fn plot_csv(text: &str, x: &str, y: &str, group: &str, log_x: bool) -> Result<String> {
    let series: Vec<svg::Series> = csv_columns(text, x, y, group)?
        .into_iter()
        .map(|(label, pts)| svg::Series {
            label,
            points: pts.into_iter().map(|(a, b)| (if log_x { a.ln() } else { a }, b)).collect(),
        })
        .collect();
    let xl = if log_x { format!("log {x}") } else { x.to_string() };
    Ok(svg::line_plot(&format!("{y} vs {xl}"), &xl, y, &series))
}

fn cmd_sweep(ctx: &Ctx, spec_path: &Path, out: Option<&Path>, plot: Option<&Path>) -> Result<()> {
    let mut spec = SweepSpec::from_path(spec_path)?;
    if let Some(n) = ctx.grid_n {
        spec.n = n;
    }
    if ctx.seed_given {
        spec.seed = ctx.seed;
    }
    let res = run_sweep(&spec)?;
    match out.map(Path::to_path_buf).or(spec.output.clone()) {
        Some(p) => {
            let p = ctx.path(&p);
            let summary = write_output(&res, &p)?;
            eprintln!("wrote {} and {}", p.display(), summary.display());
        }
        None => print!("{}", res.csv),
    }
    print!("{}", res.summary);
    if let Some(pp) = plot {
        let flow = matches!(spec.kind, oscillab::sweep::Kind::Transport | oscillab::sweep::Kind::Perturbed);
        let (x, log_x) = if flow { ("t", false) } else { ("K_analytic", true) };
        let y = match spec.kind {
            oscillab::sweep::Kind::Covering => "statistic",
            oscillab::sweep::Kind::Carleson => "excess",
            _ => "ratio",
        };
        let group = if spec.kind == oscillab::sweep::Kind::Carleson { "density" } else { "function" };
        let p = ctx.write(pp, &plot_csv(&res.csv, x, y, group, log_x)?)?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_report(ctx: &Ctx, criteria: &[u8], csv: Option<&Path>, negative: bool) -> Result<i32> {
    let report = if negative {
        Report::new(vec![experiments::covering_negative_control()])
    } else {
        let ids: Vec<u8> = if criteria.is_empty() { (1..=10).collect() } else { criteria.to_vec() };
        experiments::run_report(&ids, &Config { seed: ctx.seed })
    };
    print!("{}", report.text());
    if let Some(p) = csv {
        let p = ctx.write(p, &report.to_csv())?;
        eprintln!("wrote {}", p.display());
    }
    Ok(report.exit_code())
}

fn run(cli: Cli) -> Result<i32> {
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(1),
        seed_given: cli.seed.is_some(),
        grid_n: cli.grid_n,
        out_dir: cli.out_dir,
    };
    match &cli.cmd {
        Command::Seminorm { f, map, p, a, grid, family } => cmd_seminorm(&ctx, f, map.as_deref(), *p, *a, grid, family)?,
        Command::Whitney { map, ball, a, p, grid, out } => cmd_whitney(&ctx, map, ball, *a, *p, grid, out.as_deref())?,
        Command::Carleson {
            density,
            map,
            family,
            t_max,
            depth,
            grid,
            write_density,
        } => cmd_carleson(&ctx, density, map, family, *t_max, *depth, grid, write_density.as_deref())?,
        Command::Transport {
            field,
            u0,
            horizon,
            dt,
            step,
            p,
            a,
            grid,
            family,
            out,
        } => cmd_transport(
            &ctx,
            field,
            u0,
            *horizon,
            *dt,
            *step,
            OscillationParams::new(*p, *a, 2)?,
            grid,
            family,
            out.as_deref(),
        )?,
        Command::Perturbed {
            field,
            w0,
            horizon,
            dt,
            every,
            no_riesz,
            p,
            a,
            family,
            out,
        } => cmd_perturbed(
            &ctx,
            field,
            w0,
            *horizon,
            *dt,
            *every,
            *no_riesz,
            OscillationParams::new(*p, *a, 2)?,
            family,
            out.as_deref(),
        )?,
        Command::Sweep { spec, out, plot } => cmd_sweep(&ctx, spec, out.as_deref(), plot.as_deref())?,
        Command::Report {
            criteria,
            csv,
            negative_control,
        } => return cmd_report(&ctx, criteria, csv.as_deref(), *negative_control),
        Command::Plot {
            csv,
            out,
            x,
            y,
            group,
            log_x,
        } => {
            let text = fs::read_to_string(csv)?;
            let p = ctx.write(out, &plot_csv(&text, x, y, group, *log_x)?)?;
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
