//! Grid runs behind the `finsler-lab` command line tool.
//!
//! A run evaluates every grid point independently (in parallel), then
//! assembles per-point records, invariant checks and grid-level verdicts
//! into a [`ReportDocument`] whose JSON form is byte-stable for a fixed
//! configuration.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::curvature::{
    flag_curvature, riemann_pack, scalar_classify, trace_residual, CurvaturePack,
};
use crate::expr::{parse, Expr, ParseError};
use crate::geometry::{
    canonical_point, cartan_pack, degeneracy_classify, dfdy, metric_pack, random_rotation,
    CartanPack, EvalPoint, MetricPack, Tolerances,
};
use crate::jet::{eval_jet, MAX_DEGREE};
use crate::spray::{
    horizontal_residual, metrizability_conditions, pq_from_phi, spray_from_pq, Partials2, SprayPack,
};
use crate::surface::{berwald_frame, main_scalar, riemannian_test, BerwaldFrame, MainScalarPack};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Report,
    Check,
    Classify,
    Metrize,
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subcommand::Report => "report",
            Subcommand::Check => "check",
            Subcommand::Classify => "classify",
            Subcommand::Metrize => "metrize",
        })
    }
}

/// `start:stop:count`, `count` evenly spaced values including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridRange {
    pub fn new(start: f64, stop: f64, count: usize) -> GridRange {
        GridRange { start, stop, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            k => (0..k)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (k - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for GridRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, k] = parts.as_slice() else {
            return Err(format!("expected START:STOP:COUNT, got `{s}`"));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad number `{t}` in `{s}`"))
        };
        let count = k
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("bad count `{k}` in `{s}`"))?;
        Ok(GridRange::new(num(a)?, num(b)?, count))
    }
}

impl fmt::Display for GridRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub phi: String,
    pub p_expr: Option<String>,
    pub q_expr: Option<String>,
    pub dim: usize,
    pub r_grid: GridRange,
    pub s_fraction_grid: GridRange,
    pub u_grid: GridRange,
    /// When set, every point is moved by a random rotation drawn from this seed.
    pub seed: Option<u64>,
    pub tol_abs: f64,
    pub tol_rel: f64,
}

impl RunConfig {
    pub fn new(subcommand: Subcommand, phi: &str, dim: usize) -> RunConfig {
        let tol = Tolerances::default();
        RunConfig {
            subcommand,
            phi: phi.to_string(),
            p_expr: None,
            q_expr: None,
            dim,
            r_grid: GridRange::new(0.5, 1.5, 3),
            s_fraction_grid: GridRange::new(-0.6, 0.6, 3),
            u_grid: GridRange::new(1.0, 1.0, 1),
            seed: None,
            tol_abs: tol.abs,
            tol_rel: tol.rel,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            abs: self.tol_abs,
            rel: self.tol_rel,
            ..Tolerances::default()
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if self.dim < 2 {
            return bad(format!("dimension must be at least 2, got {}", self.dim));
        }
        for (name, g) in [
            ("r", &self.r_grid),
            ("s-frac", &self.s_fraction_grid),
            ("u", &self.u_grid),
        ] {
            if g.count == 0 {
                return bad(format!("{name} grid is empty"));
            }
        }
        if self
            .s_fraction_grid
            .values()
            .iter()
            .any(|f| !(f.abs() < 1.0))
        {
            return bad("s-frac values must lie strictly inside (-1, 1)".into());
        }
        if !(self.tol_abs >= 0.0 && self.tol_rel >= 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        if self.subcommand == Subcommand::Metrize
            && (self.p_expr.is_none() || self.q_expr.is_none())
        {
            return bad("metrize needs both --p and --q".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot parse {which} `{text}`: {source}")]
    Parse {
        which: &'static str,
        text: String,
        source: ParseError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// One row of the `points` table. Absent values are omitted from the JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub r: f64,
    pub s: f64,
    pub s_frac: f64,
    pub u: f64,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(rename = "R1", skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(rename = "R2", skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(rename = "R3", skip_serializing_if = "Option::is_none")]
    pub r3: Option<f64>,
    #[serde(rename = "R4", skip_serializing_if = "Option::is_none")]
    pub r4: Option<f64>,
    #[serde(rename = "R5", skip_serializing_if = "Option::is_none")]
    pub r5: Option<f64>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(rename = "I", skip_serializing_if = "Option::is_none")]
    pub i: Option<f64>,
    #[serde(rename = "C1", skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(rename = "C2", skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(rename = "C3", skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_direct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_formula: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regular_1: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regular_2: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_flag: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    #[serde(flatten)]
    pub config: RunConfig,
    pub jet_degree: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub config: ConfigEcho,
    pub points: Vec<PointRecord>,
    pub checks: Vec<CheckSummary>,
    pub verdicts: Value,
    pub version: String,
}

impl ReportDocument {
    /// Canonical JSON: object keys sorted, floats in shortest round-trip form.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is serializable");
        let mut out = serde_json::to_string_pretty(&value).expect("value is serializable");
        out.push('\n');
        out
    }

    pub fn failing_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn evaluated_points(&self) -> usize {
        self.points.iter().filter(|p| p.status == "ok").count()
    }

    /// Process exit status for this document.
    pub fn exit_code(&self) -> i32 {
        if !self.points.is_empty() && self.evaluated_points() == 0 {
            3
        } else if !self.failing_checks().is_empty() {
            1
        } else {
            0
        }
    }

    pub fn render_text(&self) -> String {
        let c = &self.config.config;
        let mut out = String::new();
        let _ = writeln!(out, "finsler-lab {} :: {}", self.version, c.subcommand);
        let _ = writeln!(out, "phi(r, s) = {}   (n = {})", c.phi, c.dim);
        if let (Some(p), Some(q)) = (&c.p_expr, &c.q_expr) {
            let _ = writeln!(out, "P(r, s) = {p}\nQ(r, s) = {q}");
        }
        let _ = writeln!(
            out,
            "grid: r {}  s-frac {}  u {}  ({} points, {} evaluated)",
            c.r_grid,
            c.s_fraction_grid,
            c.u_grid,
            self.points.len(),
            self.evaluated_points()
        );
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
        let _ = writeln!(
            out,
            "\n{:>4} {:>9} {:>9} {:>9} {:>14} {:>14} {:>14} {:>14} {:>14}",
            "#", "r", "s", "u", "P", "Q", "R1", "K", "I"
        );
        for p in &self.points {
            if p.status != "ok" {
                let _ = writeln!(
                    out,
                    "{:>4} {:>9.4} {:>9.4} {:>9.4}   skipped: {}",
                    p.index,
                    p.r,
                    p.s,
                    p.u,
                    p.reason.as_deref().unwrap_or("")
                );
                continue;
            }
            let _ = writeln!(
                out,
                "{:>4} {:>9.4} {:>9.4} {:>9.4} {:>14} {:>14} {:>14} {:>14} {:>14}",
                p.index,
                p.r,
                p.s,
                p.u,
                show(p.p),
                show(p.q),
                show(p.r1),
                show(p.k),
                show(p.i)
            );
        }
        if !self.checks.is_empty() {
            let _ = writeln!(out, "\nchecks:");
            for ch in &self.checks {
                let _ = writeln!(
                    out,
                    "  [{}] {:<28} max residual {:.3e}",
                    if ch.pass { "pass" } else { "FAIL" },
                    ch.name,
                    ch.max_residual
                );
            }
        }
        if self.verdicts.as_object().is_some_and(|m| !m.is_empty()) {
            let _ = writeln!(out, "\nverdicts:");
            if let Some(map) = self.verdicts.as_object() {
                for (k, v) in map {
                    let _ = writeln!(out, "  {k}: {}", summarize_verdict(v));
                }
            }
        }
        out
    }
}

fn summarize_verdict(v: &Value) -> String {
    let Some(map) = v.as_object() else {
        return v.to_string();
    };
    if let Some(e) = map.get("error") {
        return format!("error: {e}");
    }
    for key in ["is_scalar", "is_riemannian", "class"] {
        if let Some(val) = map.get(key) {
            return format!("{key} = {val}");
        }
    }
    v.to_string()
}

/// Everything computed at one grid point.
struct PointEval {
    metric: MetricPack,
    #[allow(dead_code)]
    cartan: CartanPack,
    spray: SprayPack,
    curvature: CurvaturePack,
    horizontal: DVector<f64>,
    c1: f64,
    c2: f64,
    k: f64,
    surface: Option<(BerwaldFrame, MainScalarPack)>,
    /// Residuals of the supplied `(P, Q)`: `C1`, `C2`, `C3`.
    supplied: Option<(f64, f64, f64)>,
    residuals: Vec<(&'static str, f64, f64)>,
}

struct Context {
    phi: Expr,
    pq: Option<(Expr, Expr)>,
}

fn evaluate(ctx: &Context, p: &EvalPoint) -> crate::error::Result<PointEval> {
    let jet = eval_jet(&ctx.phi, p.r, p.s)?;
    let metric = metric_pack(&jet, p)?;
    let cartan = cartan_pack(&jet, p)?;
    let spray = pq_from_phi(&jet, p)?;
    let curvature = riemann_pack(&spray, &jet, p)?;
    let horizontal = horizontal_residual(&jet, &spray, p)?;
    let d = metric.derivs;
    let mr = metrizability_conditions(&d, &spray.p, &spray.q, p.r, p.s);
    let k = flag_curvature(&curvature, d.phi, p);
    let surface = if p.n == 2 {
        match (berwald_frame(&jet, p), main_scalar(&jet, p)) {
            (Ok(f), Ok(m)) => Some((f, m)),
            _ => None,
        }
    } else {
        None
    };
    let supplied = match &ctx.pq {
        Some((pe, qe)) => {
            let pj = eval_jet(pe, p.r, p.s)?;
            let qj = eval_jet(qe, p.r, p.s)?;
            let sp = spray_from_pq(&pj, &qj, p)?;
            let m = metrizability_conditions(
                &d,
                &Partials2::from_jet(&pj)?,
                &Partials2::from_jet(&qj)?,
                p.r,
                p.s,
            );
            let c3 = riemann_pack(&sp, &jet, p)?.c3;
            Some((m.c1, m.c2, c3))
        }
        None => None,
    };
    let mut ev = PointEval {
        metric,
        cartan,
        spray,
        curvature,
        horizontal,
        c1: mr.c1,
        c2: mr.c2,
        k,
        surface,
        supplied,
        residuals: Vec::new(),
    };
    ev.residuals = invariant_residuals(&ev, p, &jet_derivs_scale(d.phi));
    Ok(ev)
}

fn jet_derivs_scale(phi: f64) -> f64 {
    1f64.max(phi.abs())
}

fn ident(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

/// `(name, residual, scale)` triples for the invariant suite.
fn invariant_residuals(
    ev: &PointEval,
    p: &EvalPoint,
    phi_scale: &f64,
) -> Vec<(&'static str, f64, f64)> {
    let m = &ev.metric;
    let d = m.derivs;
    let n = p.n;
    let mut out = Vec::new();

    out.push(("metric_inverse", (&m.g * &m.ginv - ident(n)).amax(), 1.0));
    if let Some(lu_inv) = m.g.clone().try_inverse() {
        out.push(("inverse_vs_lu", (&m.ginv - &lu_inv).amax(), lu_inv.amax()));
    } else {
        out.push(("inverse_vs_lu", f64::INFINITY, 1.0));
    }
    out.push((
        "determinant_formula",
        (m.det_direct - m.det_formula).abs(),
        m.det_formula.abs(),
    ));
    let gy = &m.g * &p.y;
    let f2 = m.f * m.f;
    out.push(("euler_homogeneity", (p.y.dot(&gy) - f2).abs(), f2));
    out.push((
        "metric_supporting_element",
        (&gy - dfdy(&d, p) * m.f).amax(),
        m.f,
    ));
    let fy = dfdy(&d, p);
    out.push((
        "inverse_supporting_element",
        (&m.ginv * &fy - &p.y / m.f).amax(),
        p.y.amax() / m.f,
    ));
    let [rho0, _, rho2, rho3] = m.rho;
    let w = p.w();
    let id1 = d.phi_s * rho0 + d.phi * rho2 + d.x_contraction(p.r, p.s) * rho3;
    let id2 = rho0 + w * rho3 - 1.0 / (d.phi * d.second_factor(p.r, p.s));
    out.push((
        "rho_contractions",
        id1.abs().max(id2.abs()),
        rho0.abs().max(w * rho3.abs()),
    ));
    out.push((
        "cartan_y_contraction",
        ev.cartan.c.contract_last(&p.y).amax(),
        ev.cartan.c.max_abs(),
    ));
    out.push((
        "connection_homogeneity",
        (&ev.spray.n * &p.y - &ev.spray.g * 2.0).amax(),
        ev.spray.g.amax(),
    ));
    out.push(("horizontal_residual", ev.horizontal.amax(), p.u * phi_scale));
    out.push((
        "metrizability_c1_c2",
        ev.c1.abs().max(ev.c2.abs()),
        *phi_scale,
    ));
    let cv = &ev.curvature;
    out.push((
        "curvature_compatibility_c3",
        cv.c3.abs(),
        cv.scale * phi_scale,
    ));
    out.push((
        "curvature_identities",
        cv.id_r2.abs().max(cv.id_r4.abs()),
        cv.scale,
    ));
    out.push((
        "jacobi_annihilates_y",
        (&cv.rmat * &p.y).amax(),
        p.u.powi(3) * cv.scale,
    ));
    out.push((
        "riemann_trace",
        trace_residual(cv, p).abs(),
        p.u * p.u * cv.scale,
    ));
    if let Some((frame, ms)) = &ev.surface {
        let l_l = frame.ell_hi.dot(&frame.ell_lo) - 1.0;
        let l_m = frame.ell_hi.dot(&frame.m_lo);
        let m_m = frame.m_hi.dot(&frame.m_lo) - 1.0;
        let g_rec = (&frame.ell_lo * frame.ell_lo.transpose()
            + &frame.m_lo * frame.m_lo.transpose()
            - &m.g)
            .amax();
        let gi_rec = (&frame.ell_hi * frame.ell_hi.transpose()
            + &frame.m_hi * frame.m_hi.transpose()
            - &m.ginv)
            .amax();
        let worst = [l_l, l_m, m_m, g_rec, gi_rec]
            .iter()
            .fold(0f64, |a, v| a.max(v.abs()));
        out.push((
            "berwald_orthonormality",
            worst,
            1f64.max(m.g.amax()).max(m.ginv.amax()),
        ));
        out.push((
            "main_scalar_agreement",
            (ms.i - ms.i_direct).abs(),
            1f64.max(ms.i.abs()),
        ));
        let a2 = frame.a * frame.a;
        out.push((
            "frame_normalization",
            (a2 * w * (ms.a_coef - p.s * ms.b_coef) - 1.0).abs(),
            1.0,
        ));
    }
    out
}

fn build_grid(config: &RunConfig) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for r in config.r_grid.values() {
        for f in config.s_fraction_grid.values() {
            for u in config.u_grid.values() {
                out.push((r, f * r, f, u));
            }
        }
    }
    out
}

fn parse_named(which: &'static str, text: &str) -> Result<Expr, RunError> {
    parse(text).map_err(|source| RunError::Parse {
        which,
        text: text.to_string(),
        source,
    })
}

/// Execute a configured run.
pub fn run(config: &RunConfig) -> Result<ReportDocument, RunError> {
    config.validate()?;
    let phi = parse_named("phi", &config.phi)?;
    let pq = match (&config.p_expr, &config.q_expr) {
        (Some(p), Some(q)) => Some((parse_named("P", p)?, parse_named("Q", q)?)),
        _ => None,
    };
    let ctx = Context { phi, pq };
    let tol = config.tolerances();

    let mut rng = config.seed.map(ChaCha8Rng::seed_from_u64);
    let grid: Vec<_> = build_grid(config)
        .into_iter()
        .map(|(r, s, f, u)| {
            let point = canonical_point(config.dim, r, s, u).map(|p| match rng.as_mut() {
                Some(rng) => p.rotated(&random_rotation(config.dim, rng)),
                None => p,
            });
            (r, s, f, u, point)
        })
        .collect();

    let evals: Vec<_> = grid
        .par_iter()
        .map(|(_, _, _, _, point)| match point {
            Ok(p) => evaluate(&ctx, p).map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        })
        .collect();

    let mut points = Vec::with_capacity(grid.len());
    let mut good_points = Vec::new();
    for (index, ((r, s, f, u, point), ev)) in grid.iter().zip(&evals).enumerate() {
        let mut rec = PointRecord {
            index,
            r: *r,
            s: *s,
            s_frac: *f,
            u: *u,
            status: "ok",
            ..PointRecord::default()
        };
        match ev {
            Ok(ev) => {
                fill_record(&mut rec, ev, config.subcommand);
                if let Ok(p) = point {
                    good_points.push((p.clone(), ev));
                }
            }
            Err(reason) => {
                rec.status = "skipped";
                rec.reason = Some(reason.clone());
            }
        }
        points.push(rec);
    }

    let checks = match config.subcommand {
        Subcommand::Check => summarize_checks(&good_points, &tol),
        Subcommand::Metrize => metrize_checks(&good_points, &tol),
        _ => Vec::new(),
    };

    let verdicts = if config.subcommand == Subcommand::Classify {
        let pts: Vec<EvalPoint> = good_points.iter().map(|(p, _)| p.clone()).collect();
        classify_verdicts(&ctx.phi, &pts, config.dim, &tol)
    } else {
        Value::Object(Default::default())
    };

    Ok(ReportDocument {
        config: ConfigEcho {
            config: config.clone(),
            jet_degree: MAX_DEGREE,
            tolerances: tol,
        },
        points,
        checks,
        verdicts,
        version: VERSION.to_string(),
    })
}

fn fill_record(rec: &mut PointRecord, ev: &PointEval, sub: Subcommand) {
    let m = &ev.metric;
    let cv = &ev.curvature;
    rec.f = Some(m.f);
    rec.p = Some(ev.spray.p.value);
    rec.q = Some(ev.spray.q.value);
    rec.r1 = Some(cv.r1);
    rec.r2 = Some(cv.r2);
    rec.r3 = Some(cv.r3);
    rec.r4 = Some(cv.r4);
    rec.r5 = Some(cv.r5);
    rec.k = Some(ev.k);
    rec.i = ev.surface.as_ref().map(|(_, ms)| ms.i);
    match (sub, ev.supplied) {
        (Subcommand::Metrize, Some((c1, c2, c3))) => {
            rec.c1 = Some(c1);
            rec.c2 = Some(c2);
            rec.c3 = Some(c3);
        }
        _ => {
            rec.c1 = Some(ev.c1);
            rec.c2 = Some(ev.c2);
            rec.c3 = Some(cv.c3);
        }
    }
    rec.det_direct = Some(m.det_direct);
    rec.det_formula = Some(m.det_formula);
    rec.regular_1 = Some(m.regular.0);
    rec.regular_2 = Some(m.regular.1);
    rec.identity_flag = Some(cv.identity_flag);
}

fn summarize_checks(points: &[(EvalPoint, &PointEval)], tol: &Tolerances) -> Vec<CheckSummary> {
    let mut order: Vec<&'static str> = Vec::new();
    let mut acc: Vec<(f64, bool)> = Vec::new();
    for (_, ev) in points {
        for (name, residual, scale) in &ev.residuals {
            let idx = match order.iter().position(|n| n == name) {
                Some(i) => i,
                None => {
                    order.push(name);
                    acc.push((0.0, true));
                    order.len() - 1
                }
            };
            let ok = residual.is_finite() && tol.within(*residual, *scale);
            acc[idx].0 = acc[idx].0.max(*residual);
            acc[idx].1 &= ok;
        }
    }
    order
        .into_iter()
        .zip(acc)
        .map(|(name, (max_residual, pass))| CheckSummary {
            name: name.to_string(),
            max_residual,
            pass,
        })
        .collect()
}

fn metrize_checks(points: &[(EvalPoint, &PointEval)], tol: &Tolerances) -> Vec<CheckSummary> {
    let mut out: Vec<CheckSummary> = ["C1", "C2", "C3"]
        .iter()
        .map(|n| CheckSummary {
            name: format!("metrize_{n}"),
            max_residual: 0.0,
            pass: true,
        })
        .collect();
    for (_, ev) in points {
        let Some((c1, c2, c3)) = ev.supplied else {
            continue;
        };
        let phi_scale = 1f64.max(ev.metric.derivs.phi.abs());
        let scales = [phi_scale, phi_scale, phi_scale * ev.curvature.scale];
        for ((ch, v), scale) in out.iter_mut().zip([c1, c2, c3]).zip(scales) {
            ch.max_residual = ch.max_residual.max(v.abs());
            ch.pass &= v.is_finite() && tol.within(v, scale);
        }
    }
    out
}

fn verdict_value<T: Serialize>(res: crate::error::Result<T>) -> Value {
    match res {
        Ok(v) => serde_json::to_value(v).expect("verdict is serializable"),
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    }
}

fn classify_verdicts(phi: &Expr, pts: &[EvalPoint], dim: usize, tol: &Tolerances) -> Value {
    let mut map = serde_json::Map::new();
    map.insert(
        "scalar_curvature".into(),
        verdict_value(scalar_classify(phi, pts, tol)),
    );
    if dim == 2 {
        map.insert(
            "riemannian".into(),
            verdict_value(riemannian_test(phi, pts, tol)),
        );
    }
    map.insert(
        "degeneracy".into(),
        verdict_value(degeneracy_classify(phi, pts, tol)),
    );
    Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_range_parsing() {
        let g: GridRange = "-0.8:0.8:5".parse().unwrap();
        let want = [-0.8, -0.4, 0.0, 0.4, 0.8];
        for (a, b) in g.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(g.values()[4], 0.8);
        assert_eq!("1:2:1".parse::<GridRange>().unwrap().values(), vec![1.0]);
        assert!("1:2".parse::<GridRange>().is_err());
        assert!("a:2:3".parse::<GridRange>().is_err());
        assert!("1:2:-3".parse::<GridRange>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new(Subcommand::Report, "1", 2);
        assert!(c.validate().is_ok());
        c.s_fraction_grid = GridRange::new(-1.0, 0.5, 3);
        assert!(c.validate().is_err());
        let mut c = RunConfig::new(Subcommand::Metrize, "1", 2);
        assert!(c.validate().is_err());
        c.p_expr = Some("0".into());
        c.q_expr = Some("0".into());
        assert!(c.validate().is_ok());
        c.dim = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_failure_exit_code() {
        let c = RunConfig::new(Subcommand::Report, "r +", 2);
        let err = run(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(matches!(err, RunError::Parse { which: "phi", .. }));
    }

    #[test]
    fn skipped_points_carry_reason() {
        // 1 + s is negative for s < -1
        let mut c = RunConfig::new(Subcommand::Report, "1+s", 2);
        c.r_grid = GridRange::new(2.0, 2.0, 1);
        c.s_fraction_grid = GridRange::new(-0.9, 0.0, 2);
        let doc = run(&c).unwrap();
        assert_eq!(doc.points[0].status, "skipped");
        assert!(doc.points[0]
            .reason
            .as_deref()
            .unwrap()
            .contains("not positive"));
        assert_eq!(doc.points[1].status, "ok");
        assert_eq!(doc.exit_code(), 0);
    }

    #[test]
    fn all_points_failing_exits_3() {
        let mut c = RunConfig::new(Subcommand::Report, "s - 10", 2);
        c.r_grid = GridRange::new(1.0, 1.0, 1);
        let doc = run(&c).unwrap();
        assert_eq!(doc.evaluated_points(), 0);
        assert_eq!(doc.exit_code(), 3);
    }
}
