use crate::args::{Command, Common};
use crate::inputs::{
    configure, read_json, resolve_space, with_space, DifferentiateInput, GridSpec, RegionSpec,
    RncheckInput, VitaliInput,
};
use riemcover::covering::{
    audit_bounds, audit_claims, audit_selection, color, greedy_select, overlap_sets,
    verify_coloring, AuditRecord, BallFamily, GeodesicBall, Selection,
};
use riemcover::differentiation::{
    cell_grid, differentiate_grid, rn_identity_check, vitali_fill, write_estimates_csv,
    FamilyGenerator, FillResult, RadiusLadder,
};
use riemcover::fixtures;
use riemcover::measures::{
    ball_mass, polar_quadrature, DensityField, DensityMeasure, IntegrationConfig, Measure,
};
use riemcover::{Error, ModelSpace, Point, Result, Tolerances};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

/// Files to write and the overall verdict of a command.
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub passed: bool,
}

impl Outcome {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            passed: true,
        }
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn audit(&mut self, rec: &AuditRecord) {
        self.passed &= rec.passed;
    }
}

/// Write all files, refusing to overwrite unless `force`.
pub fn commit(out: &Path, outcome: &Outcome, force: bool) -> Result<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = outcome.files.iter().map(|(n, _)| out.join(n)).collect();
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(Error::InvalidInput(format!(
                "{} exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    std::fs::create_dir_all(out)?;
    for (path, (_, bytes)) in paths.iter().zip(&outcome.files) {
        std::fs::write(path, bytes)?;
    }
    Ok(paths)
}

fn header(command: &str, tol: &Tolerances) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), command.into());
    m.insert(
        "tolerances".into(),
        serde_json::to_value(tol).unwrap_or(Value::Null),
    );
    m
}

fn report(mut head: Map<String, Value>, body: Value) -> Value {
    if let Value::Object(b) = body {
        head.extend(b);
    }
    Value::Object(head)
}

fn input_path(c: &Common) -> Result<&Path> {
    c.input
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("--input is required for this command".into()))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn run(command: &Command, c: &Common) -> Result<Outcome> {
    let tol = c.tolerances();
    match command {
        Command::Cover => cover(c, &tol),
        Command::Audit => audit(c, &tol),
        Command::Color => coloring(c, &tol),
        Command::Differentiate => differentiate(c, &tol),
        Command::Vitali => vitali(c, &tol),
        Command::Rncheck => rncheck(c, &tol),
        Command::Demo => demo(c, &tol),
    }
}

/// A selection file (has "chosen") or a family file, which is selected greedily.
fn load_selection(c: &Common) -> Result<Selection> {
    let mut v = read_json(input_path(c)?)?;
    let space = c.space_from_flags()?;
    if v.get("chosen").is_some() {
        if let Some(fam) = v.get_mut("family") {
            *fam = with_space(fam.take(), space.as_ref())?;
        }
        return Ok(serde_json::from_value(v)?);
    }
    let family: BallFamily = serde_json::from_value(with_space(v, space.as_ref())?)?;
    Ok(greedy_select(&family))
}

fn cover(c: &Common, tol: &Tolerances) -> Result<Outcome> {
    let v = with_space(read_json(input_path(c)?)?, c.space_from_flags()?.as_ref())?;
    let family: BallFamily = serde_json::from_value(v)?;
    let sel = greedy_select(&family);
    let rec = audit_selection(&sel, tol);
    let mut out = Outcome::new();
    out.audit(&rec);
    out.json("selection.json", &sel)?;
    out.json("audit_selection.json", &rec)?;
    Ok(out)
}

fn full_audit(sel: &Selection, tol: &Tolerances, out: &mut Outcome) -> Result<()> {
    let rep = overlap_sets(sel);
    let parts = vec![
        audit_selection(sel, tol),
        audit_bounds(sel, &rep, tol),
        audit_claims(sel, &rep, tol),
    ];
    let rec = AuditRecord::combine("full", tol, parts);
    out.audit(&rec);
    out.json("audit.json", &rec)?;
    let mut csv = Vec::new();
    rep.write_csv(&mut csv)?;
    out.raw("overlap.csv", csv);
    Ok(())
}

fn audit(c: &Common, tol: &Tolerances) -> Result<Outcome> {
    let sel = load_selection(c)?;
    let mut out = Outcome::new();
    full_audit(&sel, tol, &mut out)?;
    Ok(out)
}

fn color_into(sel: &Selection, tol: &Tolerances, out: &mut Outcome) -> Result<()> {
    let rep = overlap_sets(sel);
    let col = color(sel, &rep);
    let rec = verify_coloring(sel, &rep, &col, tol);
    out.audit(&rec);
    out.json(
        "coloring.json",
        &json!({ "coloring": col, "verification": rec }),
    )
}

fn coloring(c: &Common, tol: &Tolerances) -> Result<Outcome> {
    let sel = load_selection(c)?;
    let mut out = Outcome::new();
    color_into(&sel, tol, &mut out)?;
    Ok(out)
}

fn grid_points(space: &ModelSpace, g: &GridSpec) -> Result<Vec<(Point, f64)>> {
    cell_grid(&g.lo, &g.hi, &g.counts)?
        .into_iter()
        .map(|(p, w)| Ok((space.point(p.into_coords())?, w)))
        .collect()
}

fn differentiate(c: &Common, tol: &Tolerances) -> Result<Outcome> {
    let path = input_path(c)?;
    let input: DifferentiateInput = serde_json::from_value(read_json(path)?)?;
    let space = resolve_space(input.space, c.space_from_flags()?)?;
    let base = base_dir(path);
    let mut nu1 = input.nu1.resolve(&base)?;
    let mut nu2 = input.nu2.resolve(&base)?;
    configure(&mut nu1, c.seed, c.workers, false)?;
    configure(&mut nu2, c.seed, c.workers, false)?;
    let ladder = c.ladder(&space, input.ladder)?;
    let mut points: Vec<Point> = input
        .points
        .unwrap_or_default()
        .into_iter()
        .map(|p| space.point(p))
        .collect::<Result<_>>()?;
    if let Some(g) = &input.grid {
        points.extend(grid_points(&space, g)?.into_iter().map(|(p, _)| p));
    }
    if points.is_empty() {
        return Err(Error::InvalidInput(
            "no evaluation points (give \"points\" or \"grid\")".into(),
        ));
    }
    let estimates = differentiate_grid(&nu1, &nu2, &space, &points, &ladder, tol)?;
    let mut out = Outcome::new();
    let mut csv = Vec::new();
    write_estimates_csv(&estimates, &mut csv)?;
    out.raw("estimates.csv", csv);
    let mut head = header("differentiate", tol);
    head.insert("ladder".into(), serde_json::to_value(ladder)?);
    out.json(
        "estimates.json",
        &report(head, json!({ "space": space, "estimates": estimates })),
    )?;
    Ok(out)
}

fn residuals_csv(fill: &FillResult) -> Vec<u8> {
    let mut s = String::from("round,residual,envelope\n");
    s.push_str(&format!(
        "0,{:?},{:?}\n",
        fill.initial_mass, fill.initial_mass
    ));
    for (p, (r, e)) in fill
        .residual_per_round
        .iter()
        .zip(&fill.envelope)
        .enumerate()
    {
        s.push_str(&format!("{},{r:?},{e:?}\n", p + 1));
    }
    s.into_bytes()
}

fn vitali(c: &Common, tol: &Tolerances) -> Result<Outcome> {
    let path = input_path(c)?;
    let input: VitaliInput = serde_json::from_value(read_json(path)?)?;
    let space = resolve_space(input.space, c.space_from_flags()?)?;
    let mu = match input.mu.resolve(&base_dir(path))? {
        Measure::Atomic(a) => a,
        Measure::Density(_) => {
            return Err(Error::InvalidInput("vitali needs an atomic measure".into()))
        }
    };
    let region = input.region.build(&space)?;
    let ladder = c.ladder(&space, input.ladder)?;
    let centers = match input.centers {
        Some(cs) => cs
            .into_iter()
            .map(|p| space.point(p))
            .collect::<Result<Vec<_>>>()?,
        None => mu.points().to_vec(),
    };
    let mut generator = FamilyGenerator::new(centers, ladder);
    if let Some(cl) = input.clearance {
        generator = generator.with_clearance(cl);
    }
    let fill = vitali_fill(&generator, &mu, &space, &region, input.max_rounds)?;
    let rec = fill.audit(&space, &region, tol);
    let mut out = Outcome::new();
    out.audit(&rec);
    let mut head = header("vitali", tol);
    head.insert("ladder".into(), serde_json::to_value(ladder)?);
    head.insert("clearance".into(), generator.clearance.into());
    out.json(
        "fill.json",
        &report(head, json!({ "fill": fill, "audit": rec })),
    )?;
    out.raw("residuals.csv", residuals_csv(&fill));
    Ok(out)
}

fn rncheck(c: &Common, tol: &Tolerances) -> Result<Outcome> {
    let path = input_path(c)?;
    let input: RncheckInput = serde_json::from_value(read_json(path)?)?;
    let space = resolve_space(input.space, c.space_from_flags()?)?;
    let base = base_dir(path);
    let mut nu1 = input.nu1.resolve(&base)?;
    let mut nu2 = input.nu2.resolve(&base)?;
    configure(&mut nu1, c.seed, c.workers, false)?;
    configure(&mut nu2, c.seed, c.workers, true)?;
    let region = input.region.build(&space)?;
    let ladder = c.ladder(&space, input.ladder)?;
    let grid = input
        .grid
        .as_ref()
        .map(|g| grid_points(&space, g))
        .transpose()?;
    let (rep, _) = rn_identity_check(&nu1, &nu2, &space, &region, grid.as_deref(), &ladder, tol)?;
    let mut out = Outcome::new();
    out.passed = rep.relative_error <= input.threshold && !rep.zero_target_failure;
    let mut head = header("rncheck", tol);
    head.insert("ladder".into(), serde_json::to_value(ladder)?);
    head.insert("threshold".into(), input.threshold.into());
    out.json(
        "rncheck.json",
        &report(head, json!({ "passed": out.passed, "report": rep })),
    )?;
    Ok(out)
}

/// Deepest ladder needed for the smallest rung to fall below half the atom
/// separation, starting from the space's default ladder.
fn ladder_below(space: &ModelSpace, separation: f64) -> RadiusLadder {
    let mut l = RadiusLadder::default_for(space);
    while l.floor() >= 0.5 * separation && l.depth < 60 {
        l.depth += 1;
    }
    l
}

fn demo(c: &Common, tol: &Tolerances) -> Result<Outcome> {
    let space = c
        .space_from_flags()?
        .ok_or_else(|| Error::InvalidInput("demo needs --space".into()))?;
    let seed = c
        .seed
        .ok_or_else(|| Error::InvalidInput("demo requires --seed".into()))?;
    let mut out = Outcome::new();

    let family = fixtures::random_family(&space, 200, &mut fixtures::rng(seed))?;
    out.json("family.json", &family)?;
    let sel = greedy_select(&family);
    out.json("selection.json", &sel)?;
    full_audit(&sel, tol, &mut out)?;
    color_into(&sel, tol, &mut out)?;

    // atomic pair with dyadic ratio 3/2
    let nu1 = fixtures::random_atoms(&space, 40, &mut fixtures::rng(seed ^ 0x5eed))?;
    let nu2 = nu1.scaled(1.5)?;
    let mut csv = Vec::new();
    nu1.to_csv_writer(&mut csv)?;
    out.raw("atoms.csv", csv);
    let ladder = c.ladder(&space, Some(ladder_below(&space, nu1.separation(&space))))?;
    let (m1, m2) = (Measure::Atomic(nu1.clone()), Measure::Atomic(nu2));
    let estimates = differentiate_grid(&m1, &m2, &space, nu1.points(), &ladder, tol)?;
    let mut csv = Vec::new();
    write_estimates_csv(&estimates, &mut csv)?;
    out.raw("estimates.csv", csv);

    let region = RegionSpec::Everything.build(&space)?;
    let (rn, _) = rn_identity_check(&m1, &m2, &space, &region, None, &ladder, tol)?;
    out.passed &= rn.relative_error == 0.0;
    let mut head = header("demo", tol);
    head.insert("ladder".into(), serde_json::to_value(ladder)?);
    out.json("rncheck.json", &report(head, json!({ "report": rn })))?;

    let generator = FamilyGenerator::on_support(&nu1, ladder);
    let fill = vitali_fill(&generator, &nu1, &space, &region, 200)?;
    let rec = fill.audit(&space, &region, tol);
    out.audit(&rec);
    out.json("fill.json", &json!({ "fill": fill, "audit": rec }))?;
    out.raw("residuals.csv", residuals_csv(&fill));

    // Monte Carlo mass of a Gaussian bump, against quadrature where affordable
    let origin = space.origin();
    let mut params = Map::new();
    params.insert("center".into(), serde_json::to_value(origin.coords())?);
    params.insert("sigma".into(), 0.5.into());
    let bump = DensityField::from_registry("gaussian", params)?;
    let ball = GeodesicBall::new(origin.clone(), RadiusLadder::default_for(&space).r0);
    let workers = c.workers.unwrap_or(1);
    let mc = ball_mass(
        &Measure::Density(DensityMeasure::new(
            bump.clone(),
            IntegrationConfig::monte_carlo(20_000, seed, workers),
        )),
        &space,
        &ball,
    )?;
    let reference = polar_quadrature(&space, &bump, &ball.center, ball.radius, 8).ok();
    out.json(
        "montecarlo.json",
        &json!({ "ball": ball, "density": bump, "streams": workers, "mass": mc, "quadrature": reference }),
    )?;

    out.json(
        "summary.json",
        &json!({ "space": space, "seed": seed, "passed": out.passed }),
    )?;
    Ok(out)
}
