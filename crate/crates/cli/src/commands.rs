use std::f64::consts::PI;

use hyperbergman::fuchsian::{
    cyclic_hyperbolic, genus2_circumradius, genus2_group, genus2_inradius, reduce_to_domain,
};
use hyperbergman::hypgeo::{DiskPoint, Point};
use hyperbergman::loopgeo::{
    angle_gap, cusp_holonomy_pair, cylinder_holonomy_pair, loops_cusp, loops_cylinder,
    loops_from_ball, Bundle, TransportCtl,
};
use hyperbergman::modesum::{
    f_closed, f_numeric, k_offdiag_cylinder_modes, planted_zero_check, poisson_sides,
    rho_cusp_modes, rho_cylinder_modes, zero_free_strip_check, CuspSpec, CylinderSpec, KernelValue,
    Rect, SeriesCtl,
};
use hyperbergman::trace::{
    cylinder_grid, dimension_check, offdiag_trace_bound, rho_trace, scan_cylinder, scan_quotient,
    segments_cylinder, DimCheckSpec, ExtremaReport, ScanSpec, TraceResult,
};
use num_complex::Complex64 as Complex;

use crate::cache::orbit_ball_cached;
use crate::config::{Method, RunConfig, Surface};
use crate::error::CliError;
use crate::table::{Cell, Report, Table};

/// A command's report plus the flags that decide the exit status.
pub struct Outcome {
    pub report: Report,
    pub passed: bool,
    pub certified: bool,
}

impl Outcome {
    fn new(report: Report) -> Self {
        Outcome {
            report,
            passed: true,
            certified: true,
        }
    }
}

const CYLINDER_CUTOFF: f64 = 40.0;
const CUSP_CUTOFF: f64 = 20.0;

fn genus2_cutoff(k: u32) -> f64 {
    if k <= 2 {
        8.0
    } else {
        6.0
    }
}

fn cylinder_spec(cfg: &RunConfig) -> Result<CylinderSpec, CliError> {
    Ok(CylinderSpec::with_any_twist(cfg.eta()?, cfg.alpha)?)
}

fn need<T>(v: &[T], what: &str) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::Config(format!("no {what} given")));
    }
    Ok(())
}

/// Row tail shared by the rho variants.
fn rho_cells(
    method: Method,
    modes: Option<KernelValue>,
    trace: Option<TraceResult>,
) -> (Vec<Cell>, bool) {
    match (method, modes, trace) {
        (Method::Modes, Some(m), _) => (
            vec![
                "modes".into(),
                m.value.into(),
                m.trunc_error.into(),
                m.terms_used.into(),
                true.into(),
            ],
            true,
        ),
        (Method::Trace, _, Some(t)) => (
            vec![
                "trace".into(),
                t.rho.into(),
                t.tail_bound.into(),
                t.terms.into(),
                t.certified.into(),
            ],
            t.certified,
        ),
        (Method::Both, Some(m), Some(t)) => (
            vec![
                "both".into(),
                t.rho.into(),
                t.tail_bound.into(),
                t.terms.into(),
                t.certified.into(),
                m.value.into(),
                m.trunc_error.into(),
                (t.rho - m.value).abs().into(),
            ],
            t.certified,
        ),
        _ => unreachable!("rows are built for the requested method"),
    }
}

fn rho_columns(coords: &[&'static str], method: Method) -> Vec<&'static str> {
    let mut c = coords.to_vec();
    c.extend(["method", "rho", "tail_bound", "terms", "certified"]);
    if method == Method::Both {
        c.extend(["rho_modes", "modes_error", "discrepancy"]);
    }
    c
}

pub fn rho(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let k = cfg.level()?;
    let method = cfg.method;
    let ctl = cfg.series_ctl()?;
    let uses = |m: Method| method == m || method == Method::Both;
    let mut certified = true;
    let table = match cfg.surface()? {
        Surface::Cylinder => {
            let spec = cylinder_spec(cfg)?;
            need(&cfg.t, "--t values")?;
            let mut tab = Table::new(&rho_columns(&["t"], method));
            for &t in &cfg.t {
                let modes = if uses(Method::Modes) {
                    Some(rho_cylinder_modes(&spec, k, t, &ctl)?)
                } else {
                    None
                };
                let trace = if uses(Method::Trace) {
                    Some(rho_trace(
                        &loops_cylinder(&spec, t, cfg.cutoff.unwrap_or(CYLINDER_CUTOFF))?,
                        k,
                    )?)
                } else {
                    None
                };
                let (cells, c) = rho_cells(method, modes, trace);
                certified &= c;
                let mut row = vec![t.into()];
                row.extend(cells);
                tab.push(row);
            }
            tab
        }
        Surface::Cusp => {
            let spec = CuspSpec::with_any_twist(cfg.alpha)?;
            need(&cfg.tau, "--tau values")?;
            let mut tab = Table::new(&rho_columns(&["tau"], method));
            for &tau in &cfg.tau {
                let modes = if uses(Method::Modes) {
                    Some(rho_cusp_modes(&spec, k, tau, &ctl)?)
                } else {
                    None
                };
                let trace = if uses(Method::Trace) {
                    Some(rho_trace(
                        &loops_cusp(&spec, tau, cfg.cutoff.unwrap_or(CUSP_CUTOFF))?,
                        k,
                    )?)
                } else {
                    None
                };
                let (cells, c) = rho_cells(method, modes, trace);
                certified &= c;
                let mut row = vec![tau.into()];
                row.extend(cells);
                tab.push(row);
            }
            tab
        }
        Surface::Genus2 => {
            if method != Method::Trace {
                return Err(hyperbergman::Error::Domain(
                    "compact quotients have no mode sum; use --method trace".into(),
                )
                .into());
            }
            let zs = cfg.disk_points()?;
            need(&zs, "--point values")?;
            let g = genus2_group();
            let r = cfg.cutoff.unwrap_or(genus2_cutoff(k));
            // ρ is invariant under the group, so every point is first moved
            // into the octagon and one ball around 0 serves them all.
            let points = zs
                .iter()
                .map(|&z| Ok(reduce_to_domain(&g, &Point::Disk(DiskPoint::new(z)?))?.1))
                .collect::<Result<Vec<_>, hyperbergman::Error>>()?;
            let origin = Point::Disk(DiskPoint::origin());
            let reach = points
                .iter()
                .map(|p| origin.dist(p))
                .collect::<Result<Vec<_>, _>>()?;
            let reach = reach.into_iter().fold(0.0, f64::max);
            let ball = orbit_ball_cached(
                &g,
                &origin,
                r + 2.0 * reach,
                cfg.max_elements,
                cfg.cache_dir.as_deref(),
            )?;
            let mut tab = Table::new(&rho_columns(&["x", "y"], method));
            for (p, z) in points.iter().zip(&zs) {
                let tr = rho_trace(&loops_from_ball(&ball, p, r, Bundle::Canonical)?, k)?;
                let (cells, c) = rho_cells(method, None, Some(tr));
                certified &= c;
                let mut row = vec![z.re.into(), z.im.into()];
                row.extend(cells);
                tab.push(row);
            }
            tab
        }
    };
    let mut out = Outcome::new(Report::table(table));
    out.certified = certified;
    Ok(out)
}

struct Check<'a> {
    tab: &'a mut Table,
    all: bool,
}

impl Check<'_> {
    fn row(&mut self, identity: &str, params: String, residual: f64, tol: f64) {
        let pass = residual <= tol;
        self.all &= pass;
        self.tab.push(vec![
            identity.into(),
            params.into(),
            residual.into(),
            tol.into(),
            pass.into(),
        ]);
    }

    fn failed(&mut self, identity: &str, params: String, err: hyperbergman::Error) {
        self.all = false;
        self.tab.push(vec![
            identity.into(),
            format!("{params}; {err}").into(),
            Cell::Null,
            Cell::Null,
            false.into(),
        ]);
    }
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ctl = SeriesCtl::new(1e-13, 1e-13, 10_000)?;
    let tctl = TransportCtl::default();
    let _ = cfg;
    let mut tab = Table::new(&["identity", "parameters", "residual", "tolerance", "pass"]);
    let mut c = Check {
        tab: &mut tab,
        all: true,
    };

    for n in [2u32, 3, 5] {
        let p = format!("n={n}");
        match f_numeric(0.0, n, &ctl) {
            Ok(v) => c.row(
                "fourier-normalization",
                p,
                (v.value - (n as f64 - 0.5)).abs(),
                1e-8,
            ),
            Err(e) => c.failed("fourier-normalization", p, e),
        }
    }
    for n in [3u32, 4] {
        for b in [0.1, 0.5, 1.0, 2.0] {
            let p = format!("n={n} b={b}");
            match (f_numeric(b, n, &ctl), f_closed(Complex::new(b, 0.0), n)) {
                (Ok(v), Ok(w)) => c.row("fourier-closed-form", p, (v.value - w.re).abs(), 1e-7),
                (Err(e), _) | (_, Err(e)) => c.failed("fourier-closed-form", p, e),
            }
        }
    }
    for eta in [0.5, 1.0, 2.0] {
        for n in [2u32, 3] {
            let p = format!("eta={eta} n={n}");
            match poisson_sides(eta, n, &ctl) {
                Ok((l, r)) => c.row(
                    "poisson",
                    p,
                    (l.value - r.value).abs(),
                    l.trunc_error + r.trunc_error + 1e-12 * l.value,
                ),
                Err(e) => c.failed("poisson", p, e),
            }
        }
    }
    let boxes = [
        (2u32, Rect::new(-4.0, 4.0, -1.5, 1.5)?),
        (3, Rect::new(-6.0, 6.0, -2.5, 2.5)?),
    ];
    for (n, rect) in boxes {
        let p = format!(
            "n={n} box=[{},{}]x[{},{}]",
            rect.x0, rect.x1, rect.y0, rect.y1
        );
        match zero_free_strip_check(n, &rect) {
            Ok(w) => c.row("zero-free-strip", p, w.unsigned_abs() as f64, 0.0),
            Err(e) => c.failed("zero-free-strip", p, e),
        }
        let p = format!("n={n} planted zero at 0.37+0.21i");
        match planted_zero_check(n, &rect, Complex::new(0.37, 0.21)) {
            Ok(w) => c.row("zero-count-control", p, (w - 1).unsigned_abs() as f64, 0.0),
            Err(e) => c.failed("zero-count-control", p, e),
        }
    }
    for eta in [0.7, 1.3] {
        for u in [-1.0, -0.3, 0.3, 1.0] {
            for m in [1i64, 2, 3] {
                let p = format!("eta={eta} u={u} m={m}");
                match cylinder_holonomy_pair(eta, 0.0, u, m, &tctl) {
                    Ok((f, t)) => c.row("cylinder-holonomy", p, angle_gap(f, t), 1e-8),
                    Err(e) => c.failed("cylinder-holonomy", p, e),
                }
            }
        }
    }
    for tau in [-0.5, -1.0, -2.0] {
        for alpha in [0.0, 0.3] {
            for m in [1i64, -1, 2] {
                let p = format!("tau={tau} alpha={alpha} m={m}");
                match cusp_holonomy_pair(alpha, tau, m, &tctl) {
                    Ok((f, t)) => c.row("cusp-holonomy", p, angle_gap(f, t), 1e-8),
                    Err(e) => c.failed("cusp-holonomy", p, e),
                }
            }
        }
    }
    let all = c.all;
    let mut out = Outcome::new(Report::table(tab));
    out.passed = all;
    Ok(out)
}

pub fn offdiag(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.surface()? != Surface::Cylinder {
        return Err(CliError::Config(
            "offdiag supports --surface cylinder".into(),
        ));
    }
    let k = cfg.level()?;
    let spec = cylinder_spec(cfg)?;
    let ctl = cfg.series_ctl()?;
    let grid = cylinder_grid(spec.eta, cfg.grid.unwrap_or(5));
    let r = cfg.cutoff.unwrap_or(CYLINDER_CUTOFF);
    let mut tab = Table::new(&[
        "t1",
        "theta1",
        "t2",
        "theta2",
        "distance",
        "k_modes",
        "modes_error",
        "bound",
        "disk_term",
        "rest",
        "bound_holds",
        "refined_holds",
        "literal_refined_holds",
        "certified",
    ]);
    let mut certified = true;
    for (i, &x) in grid.iter().enumerate() {
        for &y in &grid[i + 1..] {
            let kv = k_offdiag_cylinder_modes(&spec, k, x, y, &ctl)?;
            let b = offdiag_trace_bound(&segments_cylinder(&spec, x, y, r)?, k)?;
            certified &= b.certified;
            tab.push(vec![
                x.0.into(),
                x.1.into(),
                y.0.into(),
                y.1.into(),
                b.distance.into(),
                kv.value.into(),
                kv.trunc_error.into(),
                b.bound.into(),
                b.disk_term.into(),
                b.rest.into(),
                (kv.value <= b.bound + kv.trunc_error).into(),
                b.refined_holds(kv.value, kv.trunc_error).into(),
                b.literal_refined_holds(kv.value, kv.trunc_error).into(),
                b.certified.into(),
            ]);
        }
    }
    let mut out = Outcome::new(Report::table(tab));
    out.certified = certified;
    Ok(out)
}

fn scan_report(rep: &ExtremaReport) -> Result<Report, CliError> {
    let mut tab = Table::new(&[
        "c0",
        "c1",
        "rho",
        "correction",
        "systole_distance",
        "argmax",
        "argmin",
    ]);
    for s in &rep.samples {
        tab.push(vec![
            s.coord[0].into(),
            s.coord[1].into(),
            s.rho.into(),
            s.correction.into(),
            s.systole_distance.into(),
            (s.coord == rep.argmax.coord).into(),
            (s.coord == rep.argmin.coord).into(),
        ]);
    }
    Ok(Report {
        table: tab,
        json: Some(serde_json::to_value(rep)?),
    })
}

/// Polar grid inside the inscribed disk of the octagon.
fn octagon_grid(n: usize) -> Result<Vec<Point>, hyperbergman::Error> {
    let rmax = 0.95 * genus2_inradius();
    let mut pts = vec![Point::Disk(DiskPoint::origin())];
    for i in 1..=n {
        let r = rmax * i as f64 / n as f64;
        for j in 0..(4 * i) {
            let phi = 2.0 * PI * j as f64 / (4 * i) as f64;
            pts.push(Point::Disk(DiskPoint::polar(r, phi)?));
        }
    }
    Ok(pts)
}

pub fn scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let k = cfg.level()?;
    let rep = match cfg.surface()? {
        Surface::Cylinder => {
            let spec = cylinder_spec(cfg)?;
            let d = ScanSpec::default();
            scan_cylinder(
                &spec,
                k,
                &ScanSpec {
                    u_max: cfg.u_max.unwrap_or(d.u_max),
                    step: cfg.step.unwrap_or(d.step),
                    l_prime: cfg.l_prime,
                    cutoff: cfg.cutoff,
                },
            )?
        }
        Surface::Genus2 => {
            let pts = if cfg.point.is_empty() {
                octagon_grid(cfg.grid.unwrap_or(6))?
            } else {
                cfg.disk_points()?
                    .into_iter()
                    .map(|z| Ok(Point::Disk(DiskPoint::new(z)?)))
                    .collect::<Result<_, hyperbergman::Error>>()?
            };
            scan_quotient(
                &genus2_group(),
                k,
                &pts,
                cfg.cutoff.unwrap_or(genus2_cutoff(k)),
                cfg.l_prime,
            )?
        }
        Surface::Cusp => return Err(CliError::Config("scan supports cylinder and genus2".into())),
    };
    let certified = rep.certified;
    let mut out = Outcome::new(scan_report(&rep)?);
    out.certified = certified;
    Ok(out)
}

pub fn dimcheck(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.surface.is_some_and(|s| s != Surface::Genus2) {
        return Err(CliError::Config(
            "dimcheck supports --surface genus2".into(),
        ));
    }
    let k = cfg.level()?;
    let mut spec = DimCheckSpec::for_level(k);
    if let Some(n) = cfg.nodes {
        spec.radial_nodes = n;
        spec.angular_nodes = n;
    }
    if let Some(r) = cfg.cutoff {
        spec.cutoff = r;
    }
    let d = dimension_check(&genus2_group(), k, &spec)?;
    let rel = (d.integral - d.target).abs() / d.target;
    let mut tab = Table::new(&[
        "k",
        "integral",
        "target",
        "relative_error",
        "leading_integral",
        "area",
        "tail_integral",
        "points",
        "certified",
    ]);
    tab.push(vec![
        k.into(),
        d.integral.into(),
        d.target.into(),
        rel.into(),
        d.leading_integral.into(),
        d.area.into(),
        d.tail_integral.into(),
        d.points.into(),
        d.certified.into(),
    ]);
    let mut out = Outcome::new(Report::table(tab));
    out.certified = d.certified;
    Ok(out)
}

pub fn orbit(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = match cfg.surface()? {
        Surface::Genus2 => genus2_group(),
        Surface::Cylinder => cyclic_hyperbolic(cfg.eta()?)?,
        Surface::Cusp => {
            return Err(CliError::Config(
                "orbit supports genus2 and cylinder".into(),
            ))
        }
    };
    let z = cfg
        .disk_points()?
        .first()
        .copied()
        .unwrap_or(Complex::new(0.0, 0.0));
    let p = Point::Disk(DiskPoint::new(z)?);
    let r = cfg.cutoff.unwrap_or(genus2_circumradius() * 2.0);
    let ball = orbit_ball_cached(&g, &p, r, cfg.max_elements, cfg.cache_dir.as_deref())?;
    let mut tab = Table::new(&[
        "word",
        "displacement",
        "a_re",
        "a_im",
        "b_re",
        "b_im",
        "c_re",
        "c_im",
        "d_re",
        "d_im",
    ]);
    for e in &ball.elements {
        let mut row: Vec<Cell> = vec![e.word.to_string().into(), e.displacement.into()];
        for m in e.map.entries() {
            row.push(m.re.into());
            row.push(m.im.into());
        }
        tab.push(row);
    }
    let mut out = Outcome::new(Report {
        table: tab,
        json: Some(serde_json::to_value(&ball)?),
    });
    out.certified = ball.complete;
    Ok(out)
}
