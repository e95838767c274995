//! One function per subcommand. Each writes its tables and fills a report
//! that main merges into the JSON summary.

use crate::config::RunConfig;
use crate::output::{check, num, Output, Plot, Table};
use crate::RunError;
use conispec::cone_kernels::{
    density_batch, euclid_free_resolvent, exact_leading_coefficient, resolvent_batch, ConePoint,
};
use conispec::cross_section::{sphere_volume, ModeSpectrum};
use conispec::index_sets::evaluate;
use conispec::legendrian::{contact_residuals, leaf_sample, Geodesic};
use conispec::numerics::logspace;
use conispec::oracle::{compare_with_modes, BoxProblem};
use conispec::propagators::{
    bound_state_warning, fit_decay, predicted_constants, required_panels, Cutoff, DecayFit, DensityTable,
    PropagatorKind,
};
use conispec::radial::{bound_state_count, low_energy_fit, perturbed_density, perturbed_resolvent, zero_mode_at, RadialModel};
use conispec::specfun::Order;
use conispec::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use std::f64::consts::PI;
use std::path::Path;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub dir: &'a Path,
    pub spectrum: Option<ModeSpectrum>,
    pub fit: bool,
    pub tol: f64,
    pub kind: Option<String>,
}

#[derive(Default)]
pub struct Report {
    pub results: Map<String, Value>,
    pub predicted: Map<String, Value>,
    pub measured: Map<String, Value>,
    pub checks: Vec<Value>,
    pub warnings: Vec<String>,
}

impl Ctx<'_> {
    fn spectrum(&self) -> Result<&ModeSpectrum, RunError> {
        self.spectrum.as_ref().ok_or_else(|| RunError::config("this command needs a [geometry] section"))
    }

    fn model(&self) -> Result<RadialModel, RunError> {
        let mut m = self.cfg.model(self.dir, self.spectrum()?.clone())?;
        m.tol = self.tol;
        m.validate()?;
        Ok(m)
    }

    /// Free cone over the round sphere with V₀ = 0, i.e. Euclidean space.
    fn is_euclidean(&self) -> bool {
        self.cfg.geometry.as_ref().is_some_and(|g| g.kind == "sphere" && g.v0 == 0.0 && g.n >= 3)
            && self.cfg.perturbation.kind == "none"
    }
}

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn point(z: ConePoint) -> Value {
    json!([z.r, z.theta])
}

fn chord(a: ConePoint, b: ConePoint) -> f64 {
    (a.r * a.r + b.r * b.r - 2.0 * a.r * b.r * (a.theta - b.theta).cos()).max(0.0).sqrt()
}

pub fn eigens(ctx: &Ctx, out: &mut Output) -> Result<Report, RunError> {
    let spec = ctx.spectrum()?;
    let mut t = Table::new("eigens", vec!["index", "nu", "nu_squared", "multiplicity", "projector_diagonal"]);
    for (j, m) in spec.modes.iter().enumerate() {
        let nu = m.nu.get();
        t.push(vec![j.to_string(), num(nu), num(nu * nu), m.multiplicity.to_string(), num(m.projector.eval_pair(0.0, 0.0))]);
    }
    out.table(&t, Some(Plot { x: 1, ys: vec![2], logx: false, logy: false }))?;
    let mut rep = Report::default();
    rep.results.insert("n".into(), json!(spec.n));
    rep.results.insert("modes".into(), json!(spec.modes.len()));
    rep.results.insert("nu0".into(), json!(spec.nu0()));
    rep.results.insert("nu1".into(), json!(spec.nu1()));
    rep.results.insert("hyp2".into(), json!("satisfied"));
    let model = ctx.model()?;
    if !model.w_pert.is_zero() {
        rep.results.insert("bound_states".into(), json!(bound_state_count(&model)?));
    }
    Ok(rep)
}

pub fn resolvent(ctx: &Ctx, out: &mut Output) -> Result<Report, RunError> {
    let lambdas = ctx.cfg.lambdas()?;
    let (left, right) = ctx.cfg.points()?;
    if chord(left, right) == 0.0 {
        return Err(RunError::config("resolvent needs distinct left and right points"));
    }
    let sign = ctx.cfg.sign()?;
    let model = ctx.model()?;
    let samples: Vec<_> = if model.w_pert.is_zero() {
        let triples: Vec<_> = lambdas.iter().map(|&l| (l, left, right)).collect();
        resolvent_batch(&model.spectrum, &triples, sign, ctx.tol).into_iter().collect::<Result<_, _>>()?
    } else {
        lambdas
            .par_iter()
            .map(|&l| perturbed_resolvent(&model, l, left, right, sign, ctx.tol))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut t = Table::new("resolvent", vec!["lambda", "re", "im", "abs", "modes_used", "tail_bound"]);
    for s in &samples {
        t.push(vec![num(s.lambda), num(s.value.re), num(s.value.im), num(s.value.norm()), s.modes_used.to_string(), num(s.tail_bound)]);
    }
    out.table(&t, Some(Plot { x: 1, ys: vec![2, 3], logx: false, logy: false }))?;
    let mut rep = Report::default();
    rep.results.insert("left".into(), point(left));
    rep.results.insert("right".into(), point(right));
    rep.results.insert("max_modes_used".into(), json!(samples.iter().map(|s| s.modes_used).max()));
    if ctx.is_euclidean() {
        let d = chord(left, right);
        let mut worst: f64 = 0.0;
        for s in &samples {
            let mut e = euclid_free_resolvent(model.n, s.lambda, d)?;
            if sign == conispec::cone_kernels::Sign::Incoming {
                e = e.conj();
            }
            worst = worst.max((s.value - e).norm() / e.norm());
        }
        rep.measured.insert("euclidean_max_relative_deviation".into(), json!(worst));
        rep.checks.push(check("euclidean free resolvent", worst, 1e-6, worst < 1e-6));
    }
    Ok(rep)
}

pub fn specmeasure(ctx: &Ctx, out: &mut Output) -> Result<Report, RunError> {
    let lambdas = ctx.cfg.lambdas()?;
    let (left, right) = ctx.cfg.points()?;
    let model = ctx.model()?;
    let samples: Vec<_> = if model.w_pert.is_zero() {
        let triples: Vec<_> = lambdas.iter().map(|&l| (l, left, right)).collect();
        density_batch(&model.spectrum, &triples, ctx.tol).into_iter().collect::<Result<_, _>>()?
    } else {
        lambdas
            .par_iter()
            .map(|&l| perturbed_density(&model, l, left, right, ctx.tol))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut t = Table::new("specmeasure", vec!["lambda", "density", "modes_used", "tail_bound"]);
    for s in &samples {
        t.push(vec![num(s.lambda), num(s.density), s.modes_used.to_string(), num(s.tail_bound)]);
    }
    let positive = samples.iter().all(|s| s.density > 0.0);
    out.table(&t, Some(Plot { x: 1, ys: vec![2], logx: true, logy: positive }))?;
    let mut rep = Report::default();
    rep.results.insert("left".into(), point(left));
    rep.results.insert("right".into(), point(right));
    rep.results.insert("nu0".into(), json!(model.spectrum.nu0()));
    if ctx.is_euclidean() && left == right {
        let n = model.n as i32;
        let worst = samples
            .iter()
            .map(|s| {
                let e = s.lambda.powi(n - 1) * sphere_volume(model.n) / (2.0 * PI).powi(n);
                (s.density - e).abs() / e
            })
            .fold(0.0, f64::max);
        rep.measured.insert("euclidean_diagonal_max_relative_deviation".into(), json!(worst));
        rep.checks.push(check("euclidean diagonal density", worst, 1e-6, worst < 1e-6));
    }
    if ctx.fit {
        let f = low_energy_fit(&model, left, right, &lambdas, ctx.tol)?;
        rep.predicted.insert("slope".into(), json!(f.predicted_slope));
        rep.predicted.insert("coefficient".into(), json!(f.predicted_coefficient));
        rep.predicted.insert("remainder_slope".into(), json!(f.predicted_remainder));
        rep.measured.insert("slope".into(), json!(f.fit.slope));
        rep.measured.insert("slope_se".into(), json!(f.fit.slope_se));
        rep.measured.insert("coefficient".into(), json!(f.coefficient));
        rep.measured.insert("remainder_slope".into(), json!(f.remainder_slope));
        let ds = (f.fit.slope - f.predicted_slope).abs() / f.predicted_slope;
        let dc = (f.coefficient - f.predicted_coefficient).abs() / f.predicted_coefficient.abs();
        rep.checks.push(check("low-energy slope 2nu0+1", ds, 0.01, ds < 0.01));
        rep.checks.push(check("low-energy coefficient w(z)w(z')", dc, 0.02, dc < 0.02));
    }
    Ok(rep)
}

pub fn zeromode(ctx: &Ctx, out: &mut Output) -> Result<Report, RunError> {
    let (left, right) = ctx.cfg.points()?;
    let radii = ctx.cfg.task.radii.clone().unwrap_or_else(|| logspace(0.1, 10.0, 25));
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(RunError::config("radii must be positive"));
    }
    let model = ctx.model()?;
    let mut pts = radii.clone();
    pts.extend([left.r, right.r]);
    let zm = zero_mode_at(&model, &pts)?;
    let mut t = Table::new("zeromode", vec!["r", "w_radial"]);
    for &r in &radii {
        t.push(vec![num(r), num(zm.radial(r)?)]);
    }
    out.table(&t, Some(Plot { x: 1, ys: vec![2], logx: true, logy: false }))?;
    let mut rep = Report::default();
    rep.results.insert("nu0".into(), json!(zm.nu0.get()));
    rep.results.insert("a".into(), json!(zm.a_coeff));
    rep.results.insert("b".into(), json!(zm.b_coeff));
    rep.results.insert("bound_states_nu0_channel".into(), json!(zm.bound_states));
    rep.results.insert("w_left".into(), json!(zm.w_eval(&model.spectrum, left)?));
    rep.results.insert("w_right".into(), json!(zm.w_eval(&model.spectrum, right)?));
    let lead = zm.leading_coefficient(&model.spectrum, left, right)?;
    rep.measured.insert("leading_coefficient".into(), json!(lead));
    if model.w_pert.is_zero() {
        let exact = exact_leading_coefficient(&model.spectrum, left, right);
        let dev = (lead - exact).abs() / exact.abs();
        rep.predicted.insert("leading_coefficient".into(), json!(exact));
        rep.checks.push(check("exact-cone leading coefficient", dev, 1e-6, dev < 1e-6));
    }
    Ok(rep)
}

fn kind(ctx: &Ctx) -> Result<PropagatorKind, RunError> {
    let k = ctx
        .kind
        .clone()
        .or_else(|| ctx.cfg.task.kind.clone())
        .ok_or_else(|| RunError::config("propagator kind missing; pass --kind or set task.kind"))?;
    PropagatorKind::parse(&k).map_err(|e| RunError::config(e.to_string()))
}

fn decay_report(rep: &mut Report, f: &DecayFit, kind: PropagatorKind) {
    rep.measured.insert("exponent".into(), json!(f.exponent));
    rep.measured.insert("exponent_ci95".into(), json!(f.ci_exponent));
    rep.measured.insert("coefficient".into(), complex(f.coefficient));
    rep.measured.insert("rms_residual".into(), json!(f.rms_residual));
    if let Some(w) = &f.warning {
        rep.warnings.push(w.clone());
    }
    let (Some(pe), Some(pc)) = (f.predicted_exponent, f.predicted_coefficient) else { return };
    rep.predicted.insert("exponent".into(), json!(pe));
    rep.predicted.insert("coefficient".into(), complex(pc));
    let de = (f.exponent - pe).abs() / pe;
    rep.checks.push(check("decay exponent", de, 0.05, de < 0.05));
    if pc.norm() == 0.0 {
        rep.warnings.push("predicted leading coefficient vanishes; coefficient not checked".into());
    } else if kind == PropagatorKind::Schrodinger {
        let dm = (f.coefficient.norm() / pc.norm() - 1.0).abs();
        let dp = (f.coefficient / pc).arg().abs();
        rep.checks.push(check("decay coefficient modulus", dm, 0.1, dm < 0.1));
        rep.checks.push(check("decay coefficient phase", dp, 0.1, dp < 0.1));
    } else {
        let dc = (f.coefficient - pc).norm() / pc.norm();
        rep.checks.push(check("decay coefficient", dc, 0.05, dc < 0.05));
    }
}

pub fn propagate(ctx: &Ctx, out: &mut Output) -> Result<Report, RunError> {
    let kind = kind(ctx)?;
    let ts = ctx.cfg.times()?;
    let (left, right) = ctx.cfg.points()?;
    let lambda_c = ctx.cfg.task.lambda_c.unwrap_or(1.0);
    let cutoff = Cutoff::new(lambda_c).map_err(|e| RunError::config(e.to_string()))?;
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let panels = ctx.cfg.task.panels.unwrap_or_else(|| required_panels(kind, lambda_c, t_max));
    let model = ctx.model()?;
    let mut rep = Report::default();
    if let Some(w) = bound_state_warning(&model)? {
        rep.warnings.push(w);
    }
    let table = DensityTable::build(&model, cutoff, left, right, panels, ctx.tol)?;
    let values = table.series(kind, &ts)?;
    let mut t = Table::new("propagate", vec!["t", "re", "im", "abs"]);
    for (x, v) in ts.iter().zip(&values) {
        t.push(vec![num(*x), num(v.re), num(v.im), num(v.norm())]);
    }
    let positive = values.iter().all(|v| v.norm() > 0.0);
    out.table(&t, Some(Plot { x: 1, ys: vec![4], logx: true, logy: positive }))?;
    rep.results.insert("kind".into(), json!(kind.name()));
    rep.results.insert("lambda_c".into(), json!(lambda_c));
    rep.results.insert("panels".into(), json!(panels));
    rep.results.insert("left".into(), point(left));
    rep.results.insert("right".into(), point(right));
    if ctx.fit {
        let pred = predicted_constants(&model, kind, left, right)?;
        let f = fit_decay(&ts, &values, Some(pred))?;
        decay_report(&mut rep, &f, kind);
    }
    Ok(rep)
}

pub fn fit_decay_cmd(ctx: &Ctx, out: &mut Output) -> Result<Report, RunError> {
    let input = ctx.cfg.task.input.as_ref().ok_or_else(|| RunError::config("fit-decay needs task.input"))?;
    let path = ctx.dir.join(input);
    let bad = |e: &dyn std::fmt::Display| RunError::config(format!("{}: {e}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&path).map_err(|e| bad(&e))?;
    let header = rdr.headers().map_err(|e| bad(&e))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(ct), Some(cr)) = (col("t"), col("re")) else {
        return Err(bad(&"input needs columns `t` and `re` (and optionally `im`)"));
    };
    let ci = col("im");
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(&e))?;
        let field = |i: usize| rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| bad(&e));
        ts.push(field(ct)?);
        vs.push(Complex64::new(field(cr)?, ci.map(field).transpose()?.unwrap_or(0.0)));
    }
    let task = &ctx.cfg.task;
    let kind = kind(ctx).ok();
    let predicted = match (task.predicted_exponent, task.predicted_coefficient) {
        (Some(e), c) => Some((e, c.map_or(Complex64::new(0.0, 0.0), |(re, im)| Complex64::new(re, im)))),
        (None, Some(_)) => return Err(RunError::config("predicted_coefficient needs predicted_exponent")),
        (None, None) => match (kind, ctx.spectrum.is_some()) {
            (Some(k), true) => {
                let (l, r) = ctx.cfg.points()?;
                Some(predicted_constants(&ctx.model()?, k, l, r)?)
            }
            _ => None,
        },
    };
    let f = fit_decay(&ts, &vs, predicted)?;
    let p = f.predicted_exponent.unwrap_or(f.exponent);
    let mut t = Table::new("fit_decay", vec!["t", "abs", "fitted_abs"]);
    for (x, v) in ts.iter().zip(&vs) {
        t.push(vec![num(*x), num(v.norm()), num(f.coefficient.norm() * x.powf(-p))]);
    }
    out.table(&t, Some(Plot { x: 1, ys: vec![2, 3], logx: true, logy: true }))?;
    let mut rep = Report::default();
    rep.results.insert("samples".into(), json!(ts.len()));
    decay_report(&mut rep, &f, kind.unwrap_or(PropagatorKind::WaveSin));
    Ok(rep)
}

pub fn oracle_box(ctx: &Ctx, out: &mut Output) -> Result<Report, RunError> {
    let task = &ctx.cfg.task;
    let model = ctx.model()?;
    let nu = Order::new(task.nu.unwrap_or(model.spectrum.nu0())).map_err(|e| RunError::config(e.to_string()))?;
    let problem = BoxProblem::for_mode(&model, nu, task.r0.unwrap_or(0.0), task.r_max.unwrap_or(400.0), task.grid_points.unwrap_or(8000))?;
    let r = task.r.unwrap_or(1.0);
    let rp = task.r_prime.unwrap_or(r);
    let grid = ctx.cfg.lambdas()?;
    let c = compare_with_modes(&model, nu, &problem, task.sigma, &grid, r, rp)?;
    let mut t = Table::new("oracle_box", vec!["lambda", "sigma", "mode_density", "box_density", "deviation"]);
    for i in 0..c.lambdas.len() {
        t.push(vec![num(c.lambdas[i]), num(c.sigmas[i]), num(c.mode_density[i]), num(c.box_density[i]), num(c.deviation[i])]);
    }
    out.table(&t, Some(Plot { x: 1, ys: vec![3, 4], logx: false, logy: false }))?;
    let mut rep = Report::default();
    rep.results.insert("nu".into(), json!(nu.get()));
    rep.results.insert("r".into(), json!(r));
    rep.results.insert("r_prime".into(), json!(rp));
    rep.results.insert("box".into(), json!({ "r0": problem.r0, "r_max": problem.r_max, "grid_points": problem.n }));
    rep.measured.insert("max_deviation".into(), json!(c.max_deviation));
    rep.checks.push(check("box oracle agreement", c.max_deviation, 0.05, c.max_deviation < 0.05));
    Ok(rep)
}

pub fn indexset(ctx: &Ctx, out: &mut Output) -> Result<Report, RunError> {
    let exprs = ctx.cfg.task.expressions.as_ref().ok_or_else(|| RunError::config("indexset needs task.expressions"))?;
    let mut t = Table::new("indexset", vec!["index", "expression", "value"]);
    let mut vals = Vec::new();
    for (i, e) in exprs.iter().enumerate() {
        let v = evaluate(e)?.to_string();
        println!("{e} => {v}");
        t.push(vec![i.to_string(), e.clone(), v.clone()]);
        vals.push(json!({ "expression": e, "value": v }));
    }
    out.table(&t, None)?;
    let mut rep = Report::default();
    rep.results.insert("values".into(), Value::Array(vals));
    Ok(rep)
}

pub fn legendrian(ctx: &Ctx, out: &mut Output) -> Result<Report, RunError> {
    let task = &ctx.cfg.task;
    let y0 = task.y0.clone().unwrap_or_else(|| vec![1.0, 0.0, 0.0]);
    let eta0 = task.eta0.clone().unwrap_or_else(|| vec![0.0, 1.0, 0.0]);
    let g = match task.geodesic.as_deref().unwrap_or("great_circle") {
        "great_circle" => Geodesic::great_circle(&y0, &eta0),
        "torus" => Geodesic::torus_line(&y0, &eta0),
        other => return Err(RunError::config(format!("unknown geodesic '{other}'"))),
    }
    .map_err(|e| RunError::config(e.to_string()))?;
    let samples = task.samples.unwrap_or(20);
    let step = task.step.unwrap_or(1e-4);
    if samples == 0 || !(step > 0.0 && step < PI / (2.0 * (samples + 1) as f64)) {
        return Err(RunError::config("legendrian needs samples >= 1 and 0 < step < half the grid spacing"));
    }
    let grid: Vec<f64> = (1..=samples).map(|i| PI * i as f64 / (samples + 1) as f64).collect();
    let mut t = Table::new(
        "legendrian",
        vec!["s", "s_prime", "nu", "nu_prime", "sigma", "mu_norm", "mu_prime_norm", "residual_s", "residual_s_prime", "residual_vl", "residual_vr"],
    );
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut worst: f64 = 0.0;
    for &s in &grid {
        for &sp in &grid {
            let p = leaf_sample(&g, s, sp)?;
            let c = contact_residuals(&g, s, sp, step)?;
            worst = worst.max(c.max());
            t.push(vec![
                num(s),
                num(sp),
                num(p.nu),
                num(p.nu_prime),
                num(p.sigma),
                num(norm(&p.mu)),
                num(norm(&p.mu_prime)),
                num(c.d_s),
                num(c.d_s_prime),
                num(c.v_l),
                num(c.v_r),
            ]);
        }
    }
    out.table(&t, Some(Plot { x: 1, ys: vec![8, 9], logx: false, logy: false }))?;
    let mut rep = Report::default();
    rep.results.insert("samples".into(), json!(samples * samples));
    rep.results.insert("step".into(), json!(step));
    rep.measured.insert("max_contact_residual".into(), json!(worst));
    rep.checks.push(check("contact residual", worst, 1e-7, worst <= 1e-7));
    Ok(rep)
}
