use serde::Serialize;
use std::io::Write;

use telegraph_core::analytic::*;

use crate::args::MomentsArgs;
use crate::{fmt_f64, CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub n: u32,
    pub c0: f64,
    pub a0: f64,
    pub cx: f64,
    pub ax: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub x: f64,
    pub moments: Vec<MomentRow>,
    pub mean_cx: f64,
    pub var_cx: f64,
    pub mean_ax: f64,
    pub var_ax: f64,
}

pub fn table(a: &MomentsArgs) -> CliResult<MomentTable> {
    if a.n_max == 0 {
        return Err(CliError::Usage("--n-max must be at least 1".into()));
    }
    let p = a.model.params()?;
    let c = a.model.ctrl()?;
    let moments = (1..=a.n_max)
        .map(|n| {
            Ok(MomentRow {
                n,
                c0: moment_c0(n, &p, &c)?,
                a0: moment_a0(n, &p, &c)?,
                cx: moment_cx(n, &p, &c)?,
                ax: moment_ax(n, &p, &c)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mv = closed_mean_var(&p)?;
    Ok(MomentTable {
        lambda: p.lambda,
        mu: p.mu,
        alpha: p.alpha,
        x: p.x,
        moments,
        mean_cx: mv.mean_cx,
        var_cx: mv.var_cx,
        mean_ax: mv.mean_ax,
        var_ax: mv.var_ax,
    })
}

pub fn run(a: &MomentsArgs, out: &mut dyn Write) -> CliResult<()> {
    let t = table(a)?;
    if a.json {
        serde_json::to_writer_pretty(&mut *out, &t)?;
        writeln!(out)?;
        return Ok(());
    }
    writeln!(out, "quantity,n,value")?;
    for r in &t.moments {
        for (name, v) in [
            ("E[C0^n]", r.c0),
            ("E[A0^n]", r.a0),
            ("E[Cx^n]", r.cx),
            ("E[Ax^n]", r.ax),
        ] {
            writeln!(out, "{name},{},{}", r.n, fmt_f64(v))?;
        }
    }
    for (name, v) in [
        ("E[Cx]", t.mean_cx),
        ("Var[Cx]", t.var_cx),
        ("E[Ax]", t.mean_ax),
        ("Var[Ax]", t.var_ax),
    ] {
        writeln!(out, "{name},,{}", fmt_f64(v))?;
    }
    Ok(())
}
