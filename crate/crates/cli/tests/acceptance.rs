//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use telegraph_core::analytic::*;
use telegraph_core::numeric::{
    central_difference, ks_critical_1pct, ks_statistic, try_integrate_with, QuadConfig, Upper,
};
use telegraph_core::sim::{sample_many, sample_within_cycle, Columns, Moments, RngSpec, Summary};
use telegraph_core::{ModelParams, Result, SeriesControl};

const BIN: &str = env!("CARGO_BIN_EXE_telegraph");

fn ctrl() -> SeriesControl {
    SeriesControl::default().with_max_terms(20_000)
}

fn p(l: f64, m: f64, a: f64, x: f64) -> ModelParams {
    ModelParams::new(l, m, a, x).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn tail_integral<F: FnMut(f64) -> Result<f64>>(f: F, a: f64, decay: f64) -> f64 {
    try_integrate_with(
        f,
        a,
        Upper::Infinite { decay_rate: decay },
        &QuadConfig::new(1e-10),
    )
    .unwrap()
    .value
}

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = (bool, String);

fn criterion_1() -> Outcome {
    let c = ctrl();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (l, m) in [(2.0, 0.5), (2.0, 1.5)] {
        let q = p(l, m, 0.5, 0.0);
        let d = q.domain();
        let mut masses = vec![
            tail_integral(|t| psi0(t, &q, &c), 0.0, d.bound_t),
            tail_integral(|y| pdf_c0(y, &q, &c), 0.0, d.bound_c),
        ];
        for x in [1.0, 2.0] {
            let qx = q.with_x(x);
            masses.push(tail_integral(|y| pdf_cx(y, &qx, &c), x, d.bound_c));
        }
        for a in [0.1, 0.5, 0.9] {
            let qa = q.with_alpha(a);
            masses.push(tail_integral(
                |y| pdf_a0(y, &qa, &c),
                0.0,
                qa.domain().bound_a,
            ));
        }
        count += masses.len();
        worst = masses.iter().fold(worst, |w, v| w.max((v - 1.0).abs()));
    }
    (
        worst < 1e-6,
        format!("{count} integrals, max |integral - 1| = {worst:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let c = ctrl();
    let (l, m, a, x) = (2.0, 0.5, 0.5, 1.0);
    let fa = pdf_a0(1e-6, &p(l, m, a, 0.0), &c).unwrap();
    let fc = pdf_cx(x + 1e-6, &p(l, m, a, x), &c).unwrap();
    let ea = rel(fa, a * l / 2.0);
    let ec = rel(fc, l * (-m * x).exp() / 2.0);
    (
        ea < 1e-6 && ec < 1e-6,
        format!("f_A0(1e-6) rel {ea:.2e}, f_Cx(x + 1e-6) rel {ec:.2e}"),
    )
}

type Mgf = fn(f64, &ModelParams) -> Result<f64>;
type Mom = fn(u32, &ModelParams, &SeriesControl) -> Result<f64>;

fn criterion_3() -> Outcome {
    let c = ctrl();
    let (l, m, a, x) = (2.0, 0.5, 0.5, 1.0);
    let q = p(l, m, a, x);
    let z = q.with_x(0.0);
    let d = l - m;
    // Means and variances; the A_x and C_x variances are the transform-consistent ones.
    let closed: [(f64, f64); 4] = [
        (2.0 / d, 4.0 * (l + m) / d.powi(3)),
        (
            2.0 / (a * d),
            4.0 * (l + m * (2.0 * a - 1.0)) / (a * a * d.powi(3)),
        ),
        (
            (2.0 + (l + m) * x) / d,
            4.0 * (l + m) / d.powi(3) + 8.0 * l * m * x / d.powi(3),
        ),
        (
            (2.0 + a * (l + m) * x) / (a * d),
            4.0 * (l + m * (2.0 * a - 1.0)) / (a * a * d.powi(3)) + 8.0 * l * m * x / d.powi(3),
        ),
    ];
    let ops: [(&str, Mgf, Mom, &ModelParams); 4] = [
        ("C0", mgf_c0, moment_c0, &z),
        ("A0", mgf_a0, moment_a0, &z),
        ("Cx", mgf_cx, moment_cx, &q),
        ("Ax", mgf_ax, moment_ax, &q),
    ];
    // Quadrature moments (mean, variance); A_x = C_x + (A_0 - C_0) in law with independent parts.
    let qm = |f: &dyn Fn(f64) -> Result<f64>, lo: f64, rate: f64| {
        let m1 = tail_integral(|y| Ok(y * f(y)?), lo, 0.5 * rate);
        let m2 = tail_integral(|y| Ok(y * y * f(y)?), lo, 0.5 * rate);
        (m1, m2 - m1 * m1)
    };
    let dc = q.domain().bound_c;
    let qc0 = qm(&|y| pdf_c0(y, &z, &c), 0.0, dc);
    let qa0 = qm(&|y| pdf_a0(y, &z, &c), 0.0, z.domain().bound_a);
    let qcx = qm(&|y| pdf_cx(y, &q, &c), x, dc);
    let qax = (qcx.0 + qa0.0 - qc0.0, qcx.1 + qa0.1 - qc0.1);
    let quad = [qc0, qa0, qcx, qax];
    let (mut ws, mut wf, mut wq) = (0.0f64, 0.0f64, 0.0f64);
    for (i, (_, mgf, mom, pp)) in ops.iter().enumerate() {
        let (mean, var) = closed[i];
        let s1 = mom(1, pp, &c).unwrap();
        let s2 = mom(2, pp, &c).unwrap();
        ws = ws.max(rel(s1, mean)).max(rel(s2 - s1 * s1, var));
        let f1 = central_difference(|s| mgf(s, pp), 0.0, 1, 1e-4).unwrap();
        let f2 = central_difference(|s| mgf(s, pp), 0.0, 2, 1e-4).unwrap();
        wf = wf.max(rel(f1, mean)).max(rel(f2 - f1 * f1, var));
        wq = wq.max(rel(quad[i].0, mean)).max(rel(quad[i].1, var));
    }
    (
        ws < 1e-10 && wf < 1e-4 && wq < 1e-5,
        format!("8 quantities: series rel {ws:.1e}, MGF difference rel {wf:.1e}, quadrature rel {wq:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let c = ctrl();
    let mut cross: f64 = 0.0;
    for (x, t) in [(1.0, 0.5), (1.0, 1.0), (2.0, 1.0)] {
        let q = p(2.0, 0.5, 0.5, x);
        cross = cross.max(rel(
            psi_x_series(t, &q, &c).unwrap(),
            psi_x_integral(t, &q, &c).unwrap(),
        ));
    }
    let q = p(2.0, 0.5, 0.5, 1e-6);
    let lim = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&t| rel(psi_x_series(t, &q, &c).unwrap(), psi0(t, &q, &c).unwrap()))
        .fold(0.0, f64::max);
    (
        cross < 1e-6 && lim < 1e-4,
        format!("series vs integral rel {cross:.1e}; x = 1e-6 vs psi0 rel {lim:.1e}"),
    )
}

/// `I_1(z) e^{-z}`, trapezoidal rule on the integral representation over `[0, pi]`.
fn i1_scaled(z: f64) -> f64 {
    let n = 4000;
    let h = std::f64::consts::PI / n as f64;
    let mut s = 0.5 * (1.0 - (-2.0 * z).exp());
    for k in 1..n {
        let th = k as f64 * h;
        s += (z * (th.cos() - 1.0)).exp() * th.cos();
    }
    s * h / std::f64::consts::PI
}

fn criterion_5() -> Outcome {
    let c = ctrl();
    let (l, m) = (2.0, 0.5);
    let q = p(l, m, 0.5, 0.0);
    let worst = (1..=50)
        .map(|k| {
            let t = 0.1 * k as f64;
            // Busy period of M/M/1 with arrival rate mu and service rate lambda.
            let z = 2.0 * t * (l * m).sqrt();
            let busy = (l / m).sqrt() * (z - (l + m) * t).exp() * i1_scaled(z) / t;
            rel(psi0(t, &q, &c).unwrap(), busy)
        })
        .fold(0.0, f64::max);
    (worst < 1e-10, format!("50 times, max rel {worst:.1e}"))
}

fn z_scores(m: &Moments, raw: [f64; 4]) -> (f64, f64) {
    let [m1, m2, m3, m4] = raw;
    let var = m2 - m1 * m1;
    let mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    (
        (m.mean - m1).abs() / m.std_error(),
        (m.variance() - var).abs() / m.variance_std_error(mu4),
    )
}

fn criterion_6() -> Outcome {
    let c = ctrl();
    let n = 1_000_000;
    let q = p(2.0, 0.5, 0.5, 1.0);
    let z = q.with_x(0.0);
    let raw = |f: Mom, pp: &ModelParams| [1, 2, 3, 4].map(|k| f(k, pp, &c).unwrap());
    let (s0, cols): (Summary, Columns) = sample_many(&z, RngSpec::new(1, 0), n, || {
        (Summary::default(), Columns::default())
    })
    .unwrap();
    let sx: Summary = sample_many(&q, RngSpec::new(1, 1), n, Summary::default).unwrap();
    let a = q.alpha;
    let geo = [
        1.0 / a,
        (2.0 - a) / (a * a),
        (6.0 - 6.0 * a + a * a) / a.powi(3),
        (2.0 - a) * (12.0 - 12.0 * a + a * a) / a.powi(4),
    ];
    let zs = [
        ("C0", z_scores(&s0.c_x, raw(moment_c0, &z))),
        ("Cx", z_scores(&sx.c_x, raw(moment_cx, &q))),
        ("M", z_scores(&sx.m, geo)),
        ("Ax", z_scores(&sx.a_x, raw(moment_ax, &q))),
    ];
    let worst = zs.iter().fold(0.0f64, |w, (_, (a, b))| w.max(*a).max(*b));
    // C_0 CDF by quadrature on a fine grid, linearly interpolated.
    let (h, top) = (0.005, 80.0);
    let mut grid = vec![0.0];
    let mut acc = 0.0;
    for i in 0..(top / h) as usize {
        let y = i as f64 * h;
        acc += try_integrate_with(
            |u| pdf_c0(u, &z, &c),
            y,
            Upper::Finite(y + h),
            &QuadConfig::new(1e-13),
        )
        .unwrap()
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
    (
        worst < 3.0 && d < crit,
        format!("N = {n}: max |z| over means and variances {worst:.2}; KS {d:.5} < {crit:.5}"),
    )
}

fn criterion_7() -> Outcome {
    let c = ctrl();
    let mut defect: f64 = 0.0;
    for mu in [0.5, 1.5] {
        let q = p(2.0, mu, 0.5, 0.0);
        for (t, tau) in [(5.0, 6.0), (2.0, 4.0)] {
            let s = cond_atom(t, tau, &q, &c).unwrap()
                + cond_cdf_within_cycle(t, t, tau, &q, &c).unwrap();
            defect = defect.max((s - 1.0).abs());
        }
    }
    let (t, tau) = (5.0, 6.0);
    let mut sup: f64 = 0.0;
    let mut accepted = u64::MAX;
    for mu in [0.5, 1.5] {
        let q = p(2.0, mu, 0.5, 0.0);
        let s = sample_within_cycle(&q, RngSpec::new(2, 0), t, tau, 0.05 * tau, 100_000).unwrap();
        accepted = accepted.min(s.accepted());
        for k in 0..=200 {
            let xv = t * k as f64 / 200.0;
            sup = sup.max(
                (s.continuous_cdf(xv) - cond_cdf_within_cycle(xv, t, tau, &q, &c).unwrap()).abs(),
            );
        }
    }
    let ordered = [0.1, 0.25, 0.5].iter().all(|&xv| {
        let v: Vec<f64> = [0.1, 0.5, 1.0, 1.5]
            .iter()
            .map(|&mu| cond_pdf_within_cycle(xv, t, tau, &p(2.0, mu, 0.5, 0.0), &c).unwrap())
            .collect();
        v.windows(2).all(|w| w[0] < w[1])
    });
    (
        defect < 1e-4 && sup < 0.01 && accepted >= 100_000 && ordered,
        format!("normalization defect {defect:.1e}; sup CDF difference {sup:.4} ({accepted} accepted); mu ordering {ordered}"),
    )
}

/// Runs a preset through the binary; returns curves keyed by their parameter columns.
fn preset_csv(name: &str) -> std::result::Result<BTreeMap<String, Vec<(f64, f64)>>, String> {
    let out = Command::new(BIN)
        .args(["eval", "--preset", name])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    if lines.next() != Some("target,lambda,mu,alpha,x,t,tau,y,value") {
        return Err("unexpected header".into());
    }
    let mut curves: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let y: f64 = f[7].parse().map_err(|_| format!("bad y in {line}"))?;
        let v: f64 = f[8].parse().map_err(|_| format!("bad value in {line}"))?;
        curves.entry(f[1..7].join(",")).or_default().push((y, v));
    }
    Ok(curves)
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    // Curves sorted by the varying parameter (column 2 for alpha, column 1 for mu).
    for (name, key_col, want_rising, check_decreasing) in [
        ("fig2-left", 2, true, true),
        ("fig2-right", 2, true, true),
        ("fig3-left", 1, false, false),
        ("fig3-right", 1, false, false),
        ("fig6", 1, true, false),
    ] {
        let curves = match preset_csv(name) {
            Ok(c) => c,
            Err(e) => {
                ok = false;
                notes.push(format!("{name}: {e}"));
                continue;
            }
        };
        let mut keyed: Vec<(f64, &Vec<(f64, f64)>)> = curves
            .iter()
            .map(|(k, v)| (k.split(',').nth(key_col).unwrap().parse().unwrap(), v))
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        let near: Vec<f64> = keyed.iter().map(|(_, v)| v[1].1).collect();
        let order = near.windows(2).all(|w| {
            if want_rising {
                w[0] < w[1]
            } else {
                w[0] > w[1]
            }
        });
        let decreasing = !check_decreasing
            || keyed
                .iter()
                .all(|(_, v)| v.windows(2).all(|w| w[1].1 < w[0].1));
        ok &= order && decreasing && keyed.len() >= 4;
        notes.push(format!("{name} {} curves ordered {order}", keyed.len()));
        if check_decreasing {
            notes.push(format!("{name} decreasing {decreasing}"));
        }
    }
    (ok, notes.join(", "))
}

fn criterion_9() -> Outcome {
    let c = ctrl();
    let mut worst_printed: f64 = 0.0;
    let mut worst_adopted: f64 = 0.0;
    for (l, m) in [(2.0, 0.5), (2.0, 1.5)] {
        let q = p(l, m, 0.5, 0.0);
        let r = q.domain().bound_c;
        let printed = tail_integral(|y| pdf_c0_as_printed(y, &q, &c), 0.0, r);
        let adopted = tail_integral(|y| pdf_c0(y, &q, &c), 0.0, r);
        let mean = tail_integral(|y| Ok(y * pdf_c0(y, &q, &c)?), 0.0, 0.5 * r);
        worst_printed = worst_printed.max(rel(printed, l));
        worst_adopted = worst_adopted
            .max((adopted - 1.0).abs())
            .max(rel(mean, 2.0 / (l - m)));
    }
    let out = Command::new(BIN)
        .args(["verify", "fast", "--mutate", "printed-fc0"])
        .output()
        .expect("binary runs");
    let report = String::from_utf8_lossy(&out.stdout);
    let flagged =
        out.status.code() == Some(3) && report.lines().any(|s| s.starts_with("FAIL normalization"));
    (
        worst_printed < 1e-8 && worst_adopted < 1e-8 && flagged,
        format!(
            "printed form integrates to lambda (rel {worst_printed:.1e}); adopted form mass and mean rel {worst_adopted:.1e}; mutated suite exits 3: {flagged}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 normalization", criterion_1),
        ("2 boundary values", criterion_2),
        ("3 closed-form moments", criterion_3),
        ("4 psi_x representations", criterion_4),
        ("5 M/M/1 busy period", criterion_5),
        ("6 Monte Carlo", criterion_6),
        ("7 conditional law", criterion_7),
        ("8 figure presets", criterion_8),
        ("9 printed f_C0", criterion_9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let (ok, detail) = match std::panic::catch_unwind(f) {
            Ok(r) => r,
            Err(_) => (false, "panicked".into()),
        };
        failed += usize::from(!ok);
        let tag = if ok { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {name} [{:.1} s]: {detail}",
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
