use serde::Serialize;
use std::io::Write;

use telegraph_core::analytic::*;
use telegraph_core::{ModelParams, SeriesControl};

use crate::args::{require, EvalArgs, Preset, Target};
use crate::{fmt_f64, CliError, CliResult, EvalGrid};

/// One tabulated curve.
#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub target: &'static str,
    pub lambda: f64,
    pub mu: f64,
    pub alpha: Option<f64>,
    pub x: Option<f64>,
    pub t: Option<f64>,
    pub tau: Option<f64>,
    pub y: Vec<f64>,
    pub value: Vec<f64>,
}

/// What to evaluate before the grid is applied.
#[derive(Debug, Clone, Copy)]
pub struct CurveSpec {
    pub target: Target,
    pub params: ModelParams,
    pub t: Option<f64>,
    pub tau: Option<f64>,
}

pub const CSV_HEADER: &str = "target,lambda,mu,alpha,x,t,tau,y,value";

/// Curves and default grid of a figure preset.
pub fn preset_curves(preset: Preset) -> (Vec<CurveSpec>, EvalGrid) {
    let mk = |target, l, m, a, x, t, tau| CurveSpec {
        target,
        params: ModelParams::new(l, m, a, x).expect("preset parameters are valid"),
        t,
        tau,
    };
    let grid = |a, b| EvalGrid::new(a, b, 201).expect("preset grids are valid");
    let alphas = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mus = [0.1, 0.5, 1.0, 1.5];
    match preset {
        Preset::Fig2Left | Preset::Fig2Right => {
            let mu = if preset == Preset::Fig2Left { 0.5 } else { 1.5 };
            let curves = alphas
                .iter()
                .map(|&a| mk(Target::PdfA0, 2.0, mu, a, 0.0, None, None))
                .collect();
            (curves, grid(0.0, 10.0))
        }
        Preset::Fig3Left | Preset::Fig3Right => {
            let x = if preset == Preset::Fig3Left { 1.0 } else { 2.0 };
            let curves = mus
                .iter()
                .map(|&m| mk(Target::PdfCx, 2.0, m, 0.5, x, None, None))
                .collect();
            (curves, grid(x, x + 10.0))
        }
        Preset::Fig6 => {
            let curves = mus
                .iter()
                .map(|&m| mk(Target::CondPdf, 2.0, m, 0.5, 0.0, Some(5.0), Some(6.0)))
                .collect();
            (curves, grid(0.0, 5.0))
        }
    }
}

fn default_grid(spec: &CurveSpec) -> CliResult<EvalGrid> {
    let x = spec.params.x;
    match spec.target {
        Target::Psi0 | Target::Psix => EvalGrid::new(0.0, 10.0, 201),
        Target::PdfC0 | Target::PdfA0 => EvalGrid::new(0.0, 20.0, 201),
        Target::PdfCx => EvalGrid::new(x, x + 20.0, 201),
        Target::CondCdf | Target::CondPdf => EvalGrid::new(0.0, require("t", spec.t)?, 201),
        Target::Atom => {
            let tau = require("tau", spec.tau)?;
            EvalGrid::new(0.005 * tau, 0.995 * tau, 199)
        }
    }
}

/// Value of `spec` at abscissa `y`.
pub fn eval_point(spec: &CurveSpec, y: f64, ctrl: &SeriesControl) -> CliResult<f64> {
    let p = &spec.params;
    let v = match spec.target {
        Target::Psi0 => psi0(y, p, ctrl)?,
        Target::Psix => psi_x_series(y, p, ctrl)?,
        Target::PdfC0 => pdf_c0(y, p, ctrl)?,
        Target::PdfCx => pdf_cx(y, p, ctrl)?,
        Target::PdfA0 => pdf_a0(y, p, ctrl)?,
        Target::CondCdf => {
            cond_cdf_within_cycle(y, require("t", spec.t)?, require("tau", spec.tau)?, p, ctrl)?
        }
        Target::CondPdf => {
            cond_pdf_within_cycle(y, require("t", spec.t)?, require("tau", spec.tau)?, p, ctrl)?
        }
        Target::Atom => cond_atom(y, require("tau", spec.tau)?, p, ctrl)?,
    };
    Ok(v)
}

pub fn tabulate(spec: &CurveSpec, grid: &EvalGrid, ctrl: &SeriesControl) -> CliResult<Curve> {
    let y = grid.values();
    let value = y
        .iter()
        .map(|&v| eval_point(spec, v, ctrl))
        .collect::<CliResult<Vec<_>>>()?;
    let p = spec.params;
    let (alpha, x) = match spec.target {
        Target::PdfA0 => (Some(p.alpha), None),
        Target::Psix | Target::PdfCx => (None, Some(p.x)),
        _ => (None, None),
    };
    let (t, tau) = match spec.target {
        Target::CondCdf | Target::CondPdf => (spec.t, spec.tau),
        Target::Atom => (None, spec.tau),
        _ => (None, None),
    };
    Ok(Curve {
        target: spec.target.name(),
        lambda: p.lambda,
        mu: p.mu,
        alpha,
        x,
        t,
        tau,
        y,
        value,
    })
}

pub fn write_csv(out: &mut dyn Write, curves: &[Curve]) -> std::io::Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    writeln!(out, "{CSV_HEADER}")?;
    for c in curves {
        for (y, v) in c.y.iter().zip(&c.value) {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.target,
                fmt_f64(c.lambda),
                fmt_f64(c.mu),
                opt(c.alpha),
                opt(c.x),
                opt(c.t),
                opt(c.tau),
                fmt_f64(*y),
                fmt_f64(*v)
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'static str,
    preset: Option<String>,
    out: Option<String>,
    rows: usize,
    curves: &'a [Curve],
}

pub fn run(a: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let ctrl = a.model.ctrl()?;
    let (specs, preset_grid) = match (a.preset, a.target) {
        (Some(preset), _) => {
            let (s, g) = preset_curves(preset);
            (s, Some(g))
        }
        (None, Some(target)) => {
            let spec = CurveSpec {
                target,
                params: a.model.params()?,
                t: a.t,
                tau: a.tau,
            };
            (vec![spec], None)
        }
        (None, None) => return Err(CliError::Usage("a target or --preset is required".into())),
    };
    let mut curves = Vec::with_capacity(specs.len());
    for spec in &specs {
        let grid = match (a.grid, preset_grid) {
            (Some(g), _) | (None, Some(g)) => g,
            (None, None) => default_grid(spec)?,
        };
        log::info!(
            "evaluating {} on {} points",
            spec.target.name(),
            grid.points
        );
        curves.push(tabulate(spec, &grid, &ctrl)?);
    }
    if let Some(path) = &a.out {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_csv(&mut f, &curves)?;
        f.flush()?;
    }
    if a.json {
        let env = Envelope {
            command: "eval",
            preset: a.preset.map(|p| format!("{p:?}")),
            out: a.out.as_ref().map(|p| p.display().to_string()),
            rows: curves.iter().map(|c| c.y.len()).sum(),
            curves: &curves,
        };
        serde_json::to_writer_pretty(&mut *out, &env)?;
        writeln!(out)?;
    } else if a.out.is_none() {
        write_csv(out, &curves)?;
    }
    Ok(())
}
