//! Self-check of the model implementation, reported one line per check.

use serde::Serialize;
use std::io::Write;
use std::time::Instant;

use telegraph_core::analytic::*;
use telegraph_core::numeric::{
    central_difference, ks_critical_1pct, ks_statistic, try_integrate_with, QuadConfig, Upper,
};
use telegraph_core::sim::{sample_many, sample_within_cycle, Columns, RngSpec, Summary};
use telegraph_core::{ModelParams, Result, SeriesControl};

use crate::args::{Level, Mutation, Preset, VerifyArgs};
use crate::eval::{preset_curves, tabulate};
use crate::{CliError, CliResult};

/// Upper 1% point of the chi-square law with 9 degrees of freedom.
const CHI2_9_99: f64 = 21.665994333461924;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub level: &'static str,
    pub mutation: Option<&'static str>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

/// Which cycle density the suite exercises.
#[derive(Debug, Clone, Copy)]
struct Model {
    printed_fc0: bool,
}

impl Model {
    fn fc0(&self, y: f64, p: &ModelParams, c: &SeriesControl) -> Result<f64> {
        if self.printed_fc0 {
            pdf_c0_as_printed(y, p, c)
        } else {
            pdf_c0(y, p, c)
        }
    }
}

fn ctrl() -> SeriesControl {
    SeriesControl::default().with_max_terms(20_000)
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn p(l: f64, m: f64, a: f64, x: f64) -> ModelParams {
    ModelParams::new(l, m, a, x).expect("fixed parameters are valid")
}

fn mass<F: FnMut(f64) -> Result<f64>>(f: F, a: f64, decay: f64) -> Result<f64> {
    Ok(try_integrate_with(
        f,
        a,
        Upper::Infinite { decay_rate: decay },
        &QuadConfig::new(1e-10),
    )?
    .value)
}

/// Collects the worst deviation and a description of where it occurred.
struct Worst {
    value: f64,
    at: String,
    tol: f64,
}

impl Worst {
    fn new(tol: f64) -> Self {
        Worst {
            value: 0.0,
            at: String::new(),
            tol,
        }
    }

    fn see(&mut self, dev: f64, at: impl FnOnce() -> String) {
        if dev > self.value || dev.is_nan() {
            self.value = dev;
            self.at = at();
        }
    }

    fn finish(self) -> (bool, String) {
        let ok = self.value <= self.tol;
        (
            ok,
            format!(
                "worst deviation {:.3e} (tol {:.0e}) at {}",
                self.value, self.tol, self.at
            ),
        )
    }
}

fn normalization(m: Model) -> Result<(bool, String)> {
    let c = ctrl();
    let mut w = Worst::new(1e-6);
    for (l, mu) in [(2.0, 0.5), (2.0, 1.5)] {
        let q = p(l, mu, 0.5, 0.0);
        let d = q.domain();
        let v = mass(|t| psi0(t, &q, &c), 0.0, d.bound_t)?;
        w.see((v - 1.0).abs(), || {
            format!("psi0, lambda {l}, mu {mu}: integral {v}")
        });
        let v = mass(|y| m.fc0(y, &q, &c), 0.0, d.bound_c)?;
        w.see((v - 1.0).abs(), || {
            format!("f_C0, lambda {l}, mu {mu}: integral {v}")
        });
        for x in [1.0, 2.0] {
            let qx = q.with_x(x);
            let v = mass(|y| pdf_cx(y, &qx, &c), x, d.bound_c)?;
            w.see((v - 1.0).abs(), || {
                format!("f_Cx, lambda {l}, mu {mu}, x {x}: integral {v}")
            });
        }
        for a in [0.1, 0.5, 0.9] {
            let qa = q.with_alpha(a);
            let v = mass(|y| pdf_a0(y, &qa, &c), 0.0, qa.domain().bound_a)?;
            w.see((v - 1.0).abs(), || {
                format!("f_A0, lambda {l}, mu {mu}, alpha {a}: integral {v}")
            });
        }
    }
    Ok(w.finish())
}

/// Direct evaluation at `y = 1e-6` for the reference parameters; on the wider
/// grid the offset error `f'(0) 1e-6` can exceed the tolerance, so the limit is
/// estimated there by `2 f(e) - f(2 e)`.
fn boundary_values() -> Result<(bool, String)> {
    let c = ctrl();
    let e = 1e-6;
    let mut w = Worst::new(1e-6);
    let q = p(2.0, 0.5, 0.5, 0.0);
    w.see(rel(pdf_a0(e, &q, &c)?, 0.5), || {
        "f_A0(1e-6) at the reference parameters".into()
    });
    let q = p(2.0, 0.5, 0.5, 1.0);
    w.see(rel(pdf_cx(1.0 + e, &q, &c)?, (-0.5f64).exp()), || {
        "f_Cx(x + 1e-6) at the reference parameters".into()
    });
    for mu in [0.5, 1.5] {
        for a in [0.1, 0.5, 0.9] {
            let q = p(2.0, mu, a, 0.0);
            let lim = 2.0 * pdf_a0(e, &q, &c)? - pdf_a0(2.0 * e, &q, &c)?;
            w.see(rel(lim, 0.5 * a * 2.0), || {
                format!("f_A0(0+), mu {mu}, alpha {a}")
            });
        }
        for x in [1.0, 2.0] {
            let q = p(2.0, mu, 0.5, x);
            let lim = 2.0 * pdf_cx(x + e, &q, &c)? - pdf_cx(x + 2.0 * e, &q, &c)?;
            w.see(rel(lim, 0.5 * 2.0 * (-mu * x).exp()), || {
                format!("f_Cx(x+), mu {mu}, x {x}")
            });
        }
    }
    Ok(w.finish())
}

fn mgf_identities() -> Result<(bool, String)> {
    let mut w = Worst::new(1e-12);
    for a in [0.1, 0.5, 0.9] {
        for x in [0.0, 1.0, 2.0] {
            let q = p(2.0, 0.5, a, x);
            let b = q.domain().bound_a;
            for s in [-1.0, 0.0, 0.5 * b, 0.9 * b] {
                let c0 = mgf_c0(s, &q)?;
                let a0 = mgf_a0(s, &q)?;
                let e = mgf_cx(s, &q)? / c0;
                w.see(rel(mgf_ax(s, &q)?, a0 * e), || {
                    format!("M_Ax = M_A0 E, alpha {a}, x {x}, s {s}")
                });
                w.see(rel(a0 * (1.0 + (a - 1.0) * c0), a * c0), || {
                    format!("M_A0 identity, alpha {a}, s {s}")
                });
                w.see(rel(c0, mgf_tx(2.0 * s, &q.with_x(0.0))?), || {
                    format!("M_C0(s) = M_T0(2s), s {s}")
                });
            }
        }
    }
    Ok(w.finish())
}

type Mgf = fn(f64, &ModelParams) -> Result<f64>;
type Mom = fn(u32, &ModelParams, &SeriesControl) -> Result<f64>;

fn moments(m: Model) -> Result<(bool, String)> {
    let c = ctrl();
    let q = p(2.0, 0.5, 0.5, 1.0);
    let z = q.with_x(0.0);
    let mv = closed_mean_var(&q)?;
    let mv0 = closed_mean_var(&z)?;
    let mut w = Worst::new(1e-4);
    let cases: [(&str, Mgf, Mom, &ModelParams, f64, f64); 4] = [
        ("C0", mgf_c0, moment_c0, &z, mv0.mean_cx, mv0.var_cx),
        ("A0", mgf_a0, moment_a0, &z, mv0.mean_ax, mv0.var_ax),
        ("Cx", mgf_cx, moment_cx, &q, mv.mean_cx, mv.var_cx),
        ("Ax", mgf_ax, moment_ax, &q, mv.mean_ax, mv.var_ax),
    ];
    for (name, mgf, mom, qq, mean, var) in cases {
        let m1 = mom(1, qq, &c)?;
        let m2 = mom(2, qq, &c)?;
        w.see(rel(m1, mean), || format!("series mean of {name}"));
        w.see(rel(m2 - m1 * m1, var), || {
            format!("series variance of {name}")
        });
        let d1 = central_difference(|s| mgf(s, qq), 0.0, 1, 1e-4)?;
        let d2 = central_difference(|s| mgf(s, qq), 0.0, 2, 1e-4)?;
        w.see(rel(d1, mean), || format!("MGF mean of {name}"));
        w.see(rel(d2 - d1 * d1, var), || format!("MGF variance of {name}"));
    }
    let r = z.domain().bound_c;
    let q1 = mass(|y| Ok(y * m.fc0(y, &z, &c)?), 0.0, 0.5 * r)?;
    let q2 = mass(|y| Ok(y * y * m.fc0(y, &z, &c)?), 0.0, 0.5 * r)?;
    w.see(rel(q1, mv0.mean_cx), || {
        format!("quadrature mean of C0: {q1}")
    });
    w.see(rel(q2 - q1 * q1, mv0.var_cx), || {
        "quadrature variance of C0".into()
    });
    Ok(w.finish())
}

fn psi_representations() -> Result<(bool, String)> {
    let c = ctrl();
    let mut w = Worst::new(1e-6);
    for (x, t) in [(1.0, 0.5), (1.0, 1.0), (2.0, 1.0)] {
        let q = p(2.0, 0.5, 0.5, x);
        w.see(
            rel(psi_x_series(t, &q, &c)?, psi_x_integral(t, &q, &c)?),
            || format!("series vs integral at x {x}, t {t}"),
        );
    }
    let mut lim = Worst::new(1e-4);
    let q = p(2.0, 0.5, 0.5, 1e-6);
    for t in [0.5, 1.0, 2.0] {
        lim.see(rel(psi_x_series(t, &q, &c)?, psi0(t, &q, &c)?), || {
            format!("x = 1e-6 vs psi0 at t {t}")
        });
    }
    let (a, da) = w.finish();
    let (b, db) = lim.finish();
    Ok((a && b, format!("{da}; {db}")))
}

/// `I_1(z) e^{-z}` by the trapezoidal rule on `(1/pi) int_0^pi e^{z (cos th - 1)} cos th`.
fn i1_scaled(z: f64) -> f64 {
    let n = 2000;
    let h = std::f64::consts::PI / n as f64;
    let mut s = 0.5 * (1.0 - (-2.0 * z).exp());
    for k in 1..n {
        let th = k as f64 * h;
        s += (z * (th.cos() - 1.0)).exp() * th.cos();
    }
    s * h / std::f64::consts::PI
}

/// Busy period density of M/M/1 with arrival rate `a` and service rate `b`.
fn busy_period(t: f64, a: f64, b: f64) -> f64 {
    let z = 2.0 * t * (a * b).sqrt();
    (b / a).sqrt() * (z - (a + b) * t).exp() * i1_scaled(z) / t
}

fn busy_period_identity() -> Result<(bool, String)> {
    let c = ctrl();
    let mut w = Worst::new(1e-10);
    for mu in [0.5, 1.5] {
        let q = p(2.0, mu, 0.5, 0.0);
        for k in 1..=50 {
            let t = 0.1 * k as f64;
            w.see(rel(psi0(t, &q, &c)?, busy_period(t, mu, 2.0)), || {
                format!("mu {mu}, t {t}")
            });
        }
    }
    Ok(w.finish())
}

fn monte_carlo() -> Result<(bool, String)> {
    let c = ctrl();
    let q = p(2.0, 0.5, 0.5, 1.0);
    let s: Summary = sample_many(&q, RngSpec::new(20240601, 0), 1_000_000, Summary::default)?;
    let central = |f: &dyn Fn(u32) -> Result<f64>| -> Result<(f64, f64, f64)> {
        let (m1, m2, m3, m4) = (f(1)?, f(2)?, f(3)?, f(4)?);
        Ok((
            m1,
            m2 - m1 * m1,
            m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4),
        ))
    };
    let a = q.alpha;
    let targets = [
        ("C_x", &s.c_x, central(&|n| moment_cx(n, &q, &c))?),
        ("A_x", &s.a_x, central(&|n| moment_ax(n, &q, &c))?),
        ("C_0", &s.cycle, central(&|n| moment_c0(n, &q, &c))?),
        (
            "M",
            &s.m,
            (
                1.0 / a,
                (1.0 - a) / (a * a),
                (1.0 - a) * (9.0 - 9.0 * a + a * a) / a.powi(4),
            ),
        ),
    ];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (_, m, (mean, var, mu4)) in targets {
        let zm = (m.mean - mean).abs() / m.std_error();
        let zv = (m.variance() - var).abs() / m.variance_std_error(mu4);
        worst = worst.max(zm).max(zv);
        ok &= zm < 3.0 && zv < 3.0;
    }
    let n = s.m.count as f64;
    let chi2: f64 = s
        .m_hist
        .iter()
        .enumerate()
        .map(|(k, &o)| {
            let pr = if k + 1 < s.m_hist.len() {
                a * (1.0 - a).powi(k as i32)
            } else {
                (1.0 - a).powi(k as i32)
            };
            (o as f64 - n * pr).powi(2) / (n * pr)
        })
        .sum();
    ok &= chi2 < CHI2_9_99;
    let z = q.with_x(0.0);
    let cols: Columns = sample_many(&z, RngSpec::new(20240601, 1), 100_000, Columns::default)?;
    let (h, top) = (0.01, 80.0);
    let mut grid = vec![0.0];
    let mut acc = 0.0;
    for i in 0..(top / h) as usize {
        let y = i as f64 * h;
        acc += try_integrate_with(
            |u| pdf_c0(u, &z, &c),
            y,
            Upper::Finite(y + h),
            &QuadConfig::new(1e-13),
        )?
        .value;
        grid.push(acc);
    }
    let cdf = |x: f64| {
        if x >= top {
            return 1.0;
        }
        let i = (x / h) as usize;
        grid[i] + (x / h - i as f64) * (grid[i + 1] - grid[i])
    };
    let d = ks_statistic(&cols.c_x, cdf);
    let crit = ks_critical_1pct(cols.c_x.len());
    ok &= d < crit;
    Ok((
        ok,
        format!("largest |z| {worst:.2}; chi-square {chi2:.2} (crit {CHI2_9_99:.2}); KS {d:.4} (crit {crit:.4})"),
    ))
}

fn conditional_law() -> Result<(bool, String)> {
    let c = ctrl();
    let mut ok = true;
    let mut defect: f64 = 0.0;
    for mu in [0.5, 1.5] {
        let q = p(2.0, mu, 0.5, 0.0);
        for (t, tau) in [(5.0, 6.0), (2.0, 4.0)] {
            defect = defect.max(
                (cond_atom(t, tau, &q, &c)? + cond_cdf_within_cycle(t, t, tau, &q, &c)? - 1.0)
                    .abs(),
            );
        }
    }
    ok &= defect < 1e-4;
    let (t, tau) = (5.0, 6.0);
    let mut sup: f64 = 0.0;
    for mu in [0.5, 1.5] {
        let q = p(2.0, mu, 0.5, 0.0);
        let s = sample_within_cycle(&q, RngSpec::new(20240601, 2), t, tau, 0.05 * tau, 100_000)?;
        for k in 0..=100 {
            let x = t * k as f64 / 100.0;
            sup = sup.max((s.continuous_cdf(x) - cond_cdf_within_cycle(x, t, tau, &q, &c)?).abs());
        }
    }
    ok &= sup < 0.01;
    let near: Vec<f64> = [0.1, 0.5, 1.0, 1.5]
        .iter()
        .map(|&mu| cond_pdf_within_cycle(0.05 * t, t, tau, &p(2.0, mu, 0.5, 0.0), &c))
        .collect::<Result<_>>()?;
    let ordered = near.windows(2).all(|w| w[0] < w[1]);
    ok &= ordered;
    Ok((
        ok,
        format!("normalization defect {defect:.2e}; sup CDF difference {sup:.4}; density rises with mu near 0: {ordered}"),
    ))
}

fn figure_features() -> CliResult<(bool, String)> {
    let c = ctrl();
    let mut notes = Vec::new();
    let mut ok = true;
    for preset in [
        Preset::Fig2Left,
        Preset::Fig2Right,
        Preset::Fig3Left,
        Preset::Fig3Right,
        Preset::Fig6,
    ] {
        let (specs, grid) = preset_curves(preset);
        let curves = specs
            .iter()
            .map(|s| tabulate(s, &grid, &c))
            .collect::<CliResult<Vec<_>>>()?;
        let near: Vec<f64> = curves.iter().map(|cv| cv.value[1]).collect();
        let (feature, good) = match preset {
            Preset::Fig2Left | Preset::Fig2Right => {
                let rising = near.windows(2).all(|w| w[0] < w[1]);
                let decreasing = curves
                    .iter()
                    .all(|cv| cv.value.windows(2).all(|w| w[1] < w[0]));
                (
                    "rises with alpha near 0 and decreases in y",
                    rising && decreasing,
                )
            }
            Preset::Fig3Left | Preset::Fig3Right => {
                ("falls with mu near x", near.windows(2).all(|w| w[0] > w[1]))
            }
            Preset::Fig6 => ("rises with mu near 0", near.windows(2).all(|w| w[0] < w[1])),
        };
        ok &= good;
        notes.push(format!("{preset:?} {feature}: {good}"));
    }
    Ok((ok, notes.join("; ")))
}

fn timed<F>(name: &'static str, f: F) -> Check
where
    F: FnOnce() -> CliResult<(bool, String)>,
{
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Check {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn report(level: Level, mutation: Option<Mutation>) -> Report {
    let m = Model {
        printed_fc0: mutation == Some(Mutation::PrintedFc0),
    };
    let mut checks = vec![
        timed("normalization", || Ok(normalization(m)?)),
        timed("boundary values", || Ok(boundary_values()?)),
        timed("MGF identities", || Ok(mgf_identities()?)),
        timed("moments", || Ok(moments(m)?)),
        timed("psi_x representations", || Ok(psi_representations()?)),
        timed("M/M/1 busy period", || Ok(busy_period_identity()?)),
    ];
    if level == Level::Full {
        checks.push(timed("Monte Carlo", || Ok(monte_carlo()?)));
        checks.push(timed("conditional law", || Ok(conditional_law()?)));
        checks.push(timed("figure features", figure_features));
    }
    Report {
        level: match level {
            Level::Fast => "fast",
            Level::Full => "full",
        },
        mutation: mutation.map(|_| "printed-fc0"),
        checks,
    }
}

pub fn run(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let r = report(a.level, a.mutate);
    if a.json {
        serde_json::to_writer_pretty(&mut *out, &r)?;
        writeln!(out)?;
    } else {
        for c in &r.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{tag} {} ({:.1} s): {}", c.name, c.seconds, c.detail)?;
        }
    }
    match r.failed() {
        0 => Ok(()),
        failed => Err(CliError::Verification {
            failed,
            total: r.checks.len(),
        }),
    }
}
