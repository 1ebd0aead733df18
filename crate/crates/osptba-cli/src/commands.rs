//! One function per subcommand. Each takes fully merged arguments and
//! returns a report; nothing here prints.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use osptba::bethe::{solve_bae as newton, solve_two_string, BetheStateJson, NewtonOptions};
use osptba::combinat::{enumerate_tableaux, kac_dynkin};
use osptba::contour::Rect;
use osptba::qtm::{build_qtm, qtm_vs_dvf, yang_baxter_residual, PowerOptions, DEFAULT_DENSE_CAP};
use osptba::suite::{criteria, Bound, DEFAULT_SEED};
use osptba::tba::{free_energy, log_t11_rhs, tba_solve, y_system_residual, TbaOptions, DEFAULT_K_MAX};
use osptba::{BetheState, Driving, Dvf, Grid, ModelParams, Partition, SkewShape, TKind, TbaForm, YField, C};

use crate::{
    parse_list, require, CheckArgs, CliError, CliResult, GridArgs, IdentitySuite, ModelArgs, QtmArgs, Report,
    ScanArgs, SolveBaeArgs, SuiteArgs, SweepArgs, TableauxArgs, TbaArgs, TbaFormArg, TbaMode,
};

const DEFAULT_U: f64 = -0.05;
const CONTINUATION_STEP: f64 = 0.01;

fn config<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `2,1` or `3,2/1` for a skew shape.
pub fn parse_shape(text: &str) -> CliResult<SkewShape> {
    let (outer, inner) = match text.split_once('/') {
        Some((o, i)) => (o, Some(i)),
        None => (text, None),
    };
    let outer = Partition::new(parse_list(outer)?)?;
    let inner = match inner {
        Some(i) => Partition::new(parse_list(i)?)?,
        None => Partition::empty(),
    };
    Ok(SkewShape::new(outer, inner)?)
}

impl ModelArgs {
    fn params(&self, default_s: usize) -> CliResult<ModelParams> {
        Ok(ModelParams::new(
            self.s.unwrap_or(default_s),
            self.n.unwrap_or(2),
            self.u.unwrap_or(DEFAULT_U),
        )?)
    }
}

fn read_state(path: &PathBuf) -> CliResult<BetheState> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let j: BetheStateJson = serde_json::from_str(&text)?;
    Ok(BetheState::from_json(&j)?)
}

/// The given state, or the two-string state solved by continuation.
fn on_shell(state: Option<&PathBuf>, params: &ModelParams) -> CliResult<BetheState> {
    match state {
        Some(p) => read_state(p),
        None => Ok(solve_two_string(params, CONTINUATION_STEP, NewtonOptions::default())?),
    }
}

pub fn tableaux(args: &TableauxArgs) -> CliResult<Report> {
    let s = args.s.unwrap_or(2);
    if s == 0 {
        return Err(CliError::Usage("--s must be positive".into()));
    }
    let mut text = require(args.shape.clone(), "shape")?;
    if let Some(inner) = &args.inner {
        text = format!("{text}/{inner}");
    }
    let shape = parse_shape(&text)?;
    let tabs = enumerate_tableaux(&shape, s);
    let mut r = Report::new("tableaux", config(args));
    let bad = tabs.iter().filter(|t| !t.is_admissible(s)).count();
    r.check("combinat::enumerate_tableaux", "inadmissible tableaux", bad as f64, Bound::Equal, 0.0);
    r.set("shape", shape.to_string());
    r.set("count", tabs.len());
    if shape.inner().is_empty() {
        if let Ok(labels) = kac_dynkin(shape.outer(), s) {
            r.set("kac_dynkin", labels);
        }
    }
    if args.list.unwrap_or(false) {
        r.set("tableaux", tabs.iter().map(|t| t.rows()).collect::<Vec<_>>());
    }
    Ok(r)
}

pub fn solve_bae(args: &SolveBaeArgs) -> CliResult<Report> {
    let params = args.model.params(1)?;
    let opts = NewtonOptions {
        tol: args.tol.unwrap_or(NewtonOptions::default().tol),
        ..NewtonOptions::default()
    };
    let state = match &args.seed_file {
        Some(p) => newton(&read_state(p)?, opts)?,
        None => solve_two_string(&params, args.step.unwrap_or(CONTINUATION_STEP), opts)?,
    };
    let mut r = Report::new("solve-bae", config(args));
    let res = osptba::bethe::max_residual(&state)?;
    r.check("bethe::max_residual", "max BAE residual", res, Bound::Below, opts.tol);
    r.set("symmetric", state.is_symmetric(1e-8));
    let j = state.to_json();
    if let Some(p) = &args.state_out {
        std::fs::write(p, serde_json::to_string_pretty(&j)? + "\n").map_err(io_err(p))?;
    }
    r.set("state", j);
    Ok(r)
}

struct Sampler {
    tol: Option<f64>,
    report: Report,
}

impl Sampler {
    fn check(&mut self, identity: &str, value: f64, relation: Bound, bound: f64) {
        let bound = match (relation, self.tol) {
            (Bound::Below, Some(t)) => t,
            _ => bound,
        };
        self.report
            .check(&format!("check-identities/{identity}"), identity, value, relation, bound);
    }
}

fn max_rel<F>(points: &[C], mut f: F) -> CliResult<f64>
where
    F: FnMut(C) -> osptba::Result<osptba::dvf::Residual>,
{
    let mut worst: f64 = 0.0;
    for &v in points {
        worst = worst.max(f(v)?.relative());
    }
    Ok(worst)
}

pub fn check_identities(args: &CheckArgs) -> CliResult<Report> {
    let params = args.model.params(1)?;
    let s = params.s;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let trials = args.trials.unwrap_or(10);
    let suite = args.suite.unwrap_or(IdentitySuite::All);
    let wants = |x: IdentitySuite| suite == IdentitySuite::All || suite == x;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts: Vec<usize> = (0..s).map(|_| rng.gen_range(1..=2)).collect();
    let off = Dvf::new(BetheState::random(params, &counts, 1.0, &mut rng));
    let points: Vec<C> = (0..trials)
        .map(|_| C::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
        .collect();
    let on = Dvf::new(on_shell(args.state.as_ref(), &params)?);

    let mut sm = Sampler {
        tol: args.tol,
        report: Report::new("check-identities", config(args)),
    };
    sm.report.seed = Some(seed);
    let mut unasserted = serde_json::Map::new();

    if wants(IdentitySuite::JacobiTrudi) {
        let shapes = match &args.shape {
            Some(t) => vec![parse_shape(t)?],
            None => SkewShape::all_in_box(3, 3)
                .into_iter()
                .filter(|sh| (1..=5).contains(&sh.num_cells()))
                .collect(),
        };
        let mut worst: f64 = 0.0;
        for sh in &shapes {
            for &v in &points {
                let (t, scale) = off.t_skew_with_scale(sh, v)?;
                let jt = off.t_jacobi_trudi(sh, v)?;
                worst = worst.max((t - jt).norm() / scale.max(t.norm()));
            }
        }
        sm.check("jacobi-trudi", worst, Bound::Below, 1e-9);
    }
    if wants(IdentitySuite::Vanishing) {
        let w = 2 * s + 2;
        let mut fillings = 0;
        let mut worst: f64 = 0.0;
        for sh in [parse_shape(&w.to_string())?, parse_shape(&format!("{w},{w}"))?] {
            fillings += enumerate_tableaux(&sh, s).len();
            for &v in &points {
                let reference = off.t_rect(2 * s + 1, 1, v)?.norm().max(1e-300);
                worst = worst
                    .max(off.t_skew(&sh, v)?.norm() / reference)
                    .max(off.t_jacobi_trudi(&sh, v)?.norm() / reference);
            }
        }
        sm.check("vanishing fillings", fillings as f64, Bound::Equal, 0.0);
        sm.check("vanishing", worst, Bound::Below, 1e-12);
    }
    if wants(IdentitySuite::Duality) {
        let mut worst: f64 = 0.0;
        let mut worst_off: f64 = 0.0;
        for a in 1..=s {
            for m in 1..=2 {
                worst = worst.max(max_rel(&points, |v| on.residual_duality(a, m, v))?);
                worst_off = worst_off.max(max_rel(&points, |v| off.residual_duality(a, m, v))?);
            }
        }
        sm.check("duality", worst, Bound::Below, 1e-9);
        unasserted.insert("duality".into(), json!(worst_off));
    }
    if wants(IdentitySuite::Hirota) {
        let mut worst: f64 = 0.0;
        for a in 2..=(s + 1) {
            for m in 1..=2 {
                worst = worst.max(max_rel(&points, |v| off.residual_hirota(a, m, v))?);
            }
        }
        sm.check("hirota", worst, Bound::Below, 1e-9);
    }
    if wants(IdentitySuite::Tsystem) {
        let mut worst: f64 = 0.0;
        let mut worst_off: f64 = 0.0;
        for a in 1..=s {
            for m in 1..=2 {
                worst = worst.max(max_rel(&points, |v| on.residual_tsystem(a, m, v))?);
                worst_off = worst_off.max(max_rel(&points, |v| off.residual_tsystem(a, m, v))?);
            }
        }
        sm.check("tsystem", worst, Bound::Below, 1e-8);
        unasserted.insert("tsystem".into(), json!(worst_off));
    }
    if wants(IdentitySuite::Ysystem) {
        let mut worst: f64 = 0.0;
        for a in 1..=s {
            for m in 1..=2 {
                worst = worst.max(max_rel(&points, |v| on.residual_ysystem(a, m, v))?);
            }
        }
        sm.check("ysystem", worst, Bound::Below, 1e-8);
    }
    if wants(IdentitySuite::Poles) {
        let mut worst: f64 = 0.0;
        let mut worst_off: f64 = 0.0;
        let mut count = 0;
        let mut perturbed = on.state().clone();
        perturbed.roots[0][0] += 0.1;
        let perturbed = Dvf::new(perturbed);
        for a in 1..=s {
            for m in 1..=2 {
                let kind = TKind::Rect { a, m };
                for p in on.candidate_poles(&kind) {
                    count += 1;
                    worst = worst.max(on.pole_residue(&kind, p, 1e-3, 64)?.relative());
                }
                for p in perturbed.candidate_poles(&kind) {
                    worst_off = worst_off.max(perturbed.pole_residue(&kind, p, 1e-3, 64)?.relative());
                }
            }
        }
        sm.check("poles", worst, Bound::Below, 1e-8);
        sm.report.set("candidate_poles", count);
        unasserted.insert("poles_perturbed_roots".into(), json!(worst_off));
    }

    let mut r = sm.report;
    r.set("points", points.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
    r.set("random_root_counts", counts);
    r.set("off_shell", unasserted);
    Ok(r)
}

pub fn scan_strip(args: &ScanArgs) -> CliResult<Report> {
    let params = args.model.params(1)?;
    let (a, m) = (args.a.unwrap_or(1), args.m.unwrap_or(1));
    if a == 0 || m == 0 {
        return Err(CliError::Usage("--a and --m must be positive".into()));
    }
    let height = args.height.unwrap_or(0.45);
    let rect = Rect::strip(args.half_width.unwrap_or(10.0), height);
    let samples = args.samples.unwrap_or(64);
    let d = Dvf::new(on_shell(args.state.as_ref(), &params)?);
    let normalized = d.count_zeros_minus_poles(&TKind::Normalized { a, m }, rect, samples)?;
    let raw = d.count_zeros_minus_poles(&TKind::Rect { a, m }, rect, samples)?;
    let mut r = Report::new("scan-strip", config(args));
    r.check(
        "dvf::count_zeros_minus_poles",
        format!("zeros minus poles of normalized T({a},{m})"),
        normalized as f64,
        Bound::Equal,
        0.0,
    );
    r.set("raw_count", raw);
    r.set("physical_strip", height <= 0.5);
    Ok(r)
}

/// `re` or `re,im`.
fn parse_point(text: &str) -> CliResult<C> {
    let parts: Vec<f64> = parse_list(text)?;
    match parts[..] {
        [re] => Ok(C::new(re, 0.0)),
        [re, im] => Ok(C::new(re, im)),
        _ => Err(CliError::Usage(format!("bad spectral point '{text}'"))),
    }
}

pub fn verify_qtm(args: &QtmArgs) -> CliResult<Report> {
    let params = args.model.params(1)?;
    let points = match &args.v {
        Some(list) if !list.is_empty() => list.iter().map(|t| parse_point(t)).collect::<CliResult<Vec<_>>>()?,
        _ => vec![C::new(0.0, 0.0)],
    };
    let cap = args.dense_cap.unwrap_or(DEFAULT_DENSE_CAP);
    let mut r = Report::new("verify-qtm", config(args));
    r.seed = Some(PowerOptions::default().seed);
    let oracle = qtm_vs_dvf(params, &points, cap)?;
    let mut rows = Vec::new();
    for (i, p) in oracle.iter().enumerate() {
        r.check("qtm::qtm_vs_dvf", format!("point {i} rel dev"), p.rel_dev, Bound::Below, 1e-8);
        rows.push(json!({
            "v": [p.v.re, p.v.im],
            "dvf": [p.dvf.re, p.dvf.im],
            "qtm": [p.qtm.re, p.qtm.im],
            "is_largest": p.is_largest,
        }));
    }
    let yb = yang_baxter_residual(C::new(0.3, 0.1), C::new(-0.7, 0.4), params.s)?;
    r.check("qtm::yang_baxter_residual", "Yang-Baxter residual", yb, Bound::Below, 1e-10);
    r.set("points", rows);
    r.set("dim", (params.g()).pow(params.n as u32));
    if let Some(path) = &args.dump {
        let op = build_qtm(params, points[0])?;
        let file = File::create(path).map_err(io_err(path))?;
        op.write_le(BufWriter::new(file)).map_err(io_err(path))?;
        r.set("dump", path.display().to_string());
    }
    Ok(r)
}

impl GridArgs {
    fn grid(&self) -> CliResult<Grid> {
        let d = Grid::default();
        Ok(Grid::new(self.vmax.unwrap_or(d.v_max), self.step.unwrap_or(d.step))?)
    }

    fn options(&self) -> TbaOptions {
        let d = TbaOptions::default();
        TbaOptions {
            m_max: self.m_max.unwrap_or(d.m_max),
            relax: self.relax.unwrap_or(d.relax),
            tol: self.tba_tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
        }
    }
}

fn write_y_csv(path: &Path, field: &YField) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["v".to_string()];
    let mut columns = Vec::new();
    for a in 1..=field.s {
        for m in 1..=field.m_max {
            header.push(format!("Y{a}_{m}"));
            columns.push(field.y(a, m));
        }
    }
    w.write_record(&header)?;
    for (i, v) in field.grid.nodes().iter().enumerate() {
        let mut row = vec![format!("{v}")];
        row.extend(columns.iter().map(|c| format!("{}", c[i])));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn solve_tba(args: &TbaArgs, csv_path: Option<&PathBuf>) -> CliResult<Report> {
    let s = args.s.unwrap_or(1);
    let coupling = args.coupling.unwrap_or(-1.0);
    let beta = args.beta.unwrap_or(1.0);
    let mode = args.mode.unwrap_or(TbaMode::Trotter);
    let form = match args.form.unwrap_or(TbaFormArg::Standard) {
        TbaFormArg::Standard => TbaForm::Standard,
        TbaFormArg::Rewritten => TbaForm::Rewritten,
    };
    let grid = args.grid.grid()?;
    let opts = args.grid.options();
    let mut r = Report::new("solve-tba", config(args));
    let field = match mode {
        TbaMode::Trotter => {
            let field = tba_solve(&grid, s, Driving::TrotterLimit { coupling, beta }, form, opts)?;
            r.set("thermo", free_energy(&field)?);
            field
        }
        TbaMode::Finite => {
            let p = ModelParams::physical(s, require(args.n, "N")?, coupling, beta)?;
            let field = tba_solve(&grid, s, Driving::FiniteN { n: p.n, u: p.u }, form, opts)?;
            r.set("u", p.u);
            r.set("log_t11_at_0", log_t11_rhs(&field, p.n, p.u, 0.0, DEFAULT_K_MAX)?);
            field
        }
    };
    r.check("tba::tba_solve", "final change", field.final_change, Bound::Below, opts.tol);
    r.check("tba::y_system_residual", "fixed-point residual", y_system_residual(&field)?, Bound::Below, 10.0 * opts.tol);
    r.check("tba::YField::is_even", "even in v", f64::from(u8::from(field.is_even(1e-8))), Bound::Equal, 1.0);
    r.set("iterations", field.iterations);
    if let Some(p) = csv_path {
        write_y_csv(p, &field)?;
    }
    Ok(r)
}

pub fn sweep(args: &SweepArgs, csv_path: Option<&PathBuf>) -> CliResult<Report> {
    let s = args.s.unwrap_or(1);
    let coupling = args.coupling.unwrap_or(-1.0);
    let betas: Vec<f64> = parse_list(args.beta_list.as_deref().unwrap_or("0.5,1,2,5,10,20"))?;
    if betas.is_empty() {
        return Err(CliError::Usage("empty --beta-list".into()));
    }
    let grid = args.grid.grid()?;
    let opts = args.grid.options();
    let mut rows = Vec::new();
    for &beta in &betas {
        let field = tba_solve(&grid, s, Driving::TrotterLimit { coupling, beta }, TbaForm::Standard, opts)?;
        rows.push(free_energy(&field)?);
    }
    let mut r = Report::new("sweep", config(args));
    // F = -T log Z never decreases as T is lowered
    let mut sorted: Vec<(f64, f64)> = rows.iter().map(|t| (t.beta, t.free_energy)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let worst_drop = sorted.windows(2).map(|w| w[0].1 - w[1].1).fold(f64::NEG_INFINITY, f64::max);
    if sorted.len() > 1 {
        r.check("sweep", "largest decrease of F with beta", worst_drop, Bound::Below, 1e-8);
    }
    if let Some(p) = csv_path {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["beta", "F"])?;
        for t in &rows {
            w.write_record([format!("{}", t.beta), format!("{:.12}", t.free_energy)])?;
        }
        w.flush().map_err(io_err(p))?;
    }
    r.set("ground_energy", rows[0].ground_energy);
    r.set("rows", rows);
    Ok(r)
}

pub fn suite(args: &SuiteArgs) -> CliResult<Report> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let only: Vec<usize> = match &args.only {
        Some(t) => parse_list(t)?,
        None => Vec::new(),
    };
    let all = criteria();
    if let Some(bad) = only.iter().find(|i| !all.iter().any(|c| c.id == **i)) {
        return Err(CliError::Usage(format!("no criterion {bad}")));
    }
    let mut r = Report::new("suite", config(args));
    r.seed = Some(seed);
    let mut summaries = Vec::new();
    let mut lines = Vec::new();
    for c in all.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let rep = c.run(seed);
        let provenance = format!("criterion {:02} {}", rep.id, rep.name);
        for m in &rep.measures {
            r.push(&provenance, m.clone());
        }
        // errors and time overruns have no measure of their own
        r.pass &= rep.pass;
        lines.push(rep.line());
        summaries.push(json!({
            "id": rep.id,
            "name": rep.name,
            "pass": rep.pass,
            "error": rep.error,
            "notes": rep.notes,
        }));
    }
    r.set("criteria", summaries);
    r.set("passed", lines.iter().filter(|l| l.starts_with("PASS")).count());
    r.set("total", lines.len());
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_parse() {
        assert_eq!(parse_shape("2,1").unwrap().num_cells(), 3);
        let sk = parse_shape("3,2/1").unwrap();
        assert_eq!(sk.num_cells(), 4);
        assert!(parse_shape("1,2").is_err());
        assert!(parse_shape("2/3").is_err());
    }

    #[test]
    fn points_parse() {
        assert_eq!(parse_point("0.5").unwrap(), C::new(0.5, 0.0));
        assert_eq!(parse_point("0.5,-1").unwrap(), C::new(0.5, -1.0));
        assert!(parse_point("1,2,3").is_err());
    }

    #[test]
    fn tableaux_counts() {
        let r = tableaux(&TableauxArgs {
            s: Some(2),
            shape: Some("1,1".into()),
            ..Default::default()
        })
        .unwrap();
        assert!(r.pass);
        assert_eq!(r.data["count"], 15);
    }
}
