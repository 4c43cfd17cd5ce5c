mod common;

use common::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use telegraph_core::analytic::*;
use telegraph_core::numeric::{ks_critical_1pct, ks_statistic};
use telegraph_core::sim::*;
use telegraph_core::{ModelParams, SeriesControl};

fn base() -> ModelParams {
    params(2.0, 0.5, 0.5, 1.0)
}

/// Mean, variance and fourth central moment from raw moments 1..=4.
fn central(raw: [f64; 4]) -> (f64, f64, f64) {
    let [m1, m2, m3, m4] = raw;
    let var = m2 - m1 * m1;
    let mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    (m1, var, mu4)
}

fn raw<F: Fn(u32) -> f64>(f: F) -> [f64; 4] {
    [f(1), f(2), f(3), f(4)]
}

fn within(name: &str, m: &Moments, (mean, var, mu4): (f64, f64, f64)) {
    let se = m.std_error();
    assert!(
        (m.mean - mean).abs() < 3.0 * se,
        "{name} mean {} vs {mean} (se {se})",
        m.mean
    );
    let vse = m.variance_std_error(mu4);
    let v = m.variance();
    assert!(
        (v - var).abs() < 3.0 * vse,
        "{name} variance {v} vs {var} (se {vse})"
    );
}

#[test]
fn sample_moments_match_closed_forms() {
    let p = base();
    let c = SeriesControl::default();
    let s: Summary = sample_many(&p, RngSpec::new(2024, 0), 1_000_000, Summary::default).unwrap();
    within(
        "C_x",
        &s.c_x,
        central(raw(|n| moment_cx(n, &p, &c).unwrap())),
    );
    within(
        "A_x",
        &s.a_x,
        central(raw(|n| moment_ax(n, &p, &c).unwrap())),
    );
    within(
        "C_0",
        &s.cycle,
        central(raw(|n| moment_c0(n, &p, &c).unwrap())),
    );
    let a = p.alpha;
    within(
        "M",
        &s.m,
        (
            1.0 / a,
            (1.0 - a) / (a * a),
            (1.0 - a) * (9.0 - 9.0 * a + a * a) / a.powi(4),
        ),
    );
    let mv = closed_mean_var(&p).unwrap();
    assert!((s.a_x.mean - 13.0 / 3.0).abs() < 3.0 * s.a_x.std_error());
    assert!(
        (s.c_x.variance() - mv.var_cx).abs()
            < 3.0
                * s.c_x
                    .variance_std_error(central(raw(|n| moment_cx(n, &p, &c).unwrap())).2)
    );
}

#[test]
fn first_passage_from_the_origin_is_a_renewal_cycle() {
    let p = base().with_x(0.0);
    let c = SeriesControl::default();
    let s: Summary = sample_many(&p, RngSpec::new(5, 1), 200_000, Summary::default).unwrap();
    within(
        "C_0 from x = 0",
        &s.c_x,
        central(raw(|n| moment_c0(n, &p, &c).unwrap())),
    );
}

#[test]
fn visit_count_is_geometric() {
    let p = base();
    let s: Summary = sample_many(&p, RngSpec::new(99, 3), 1_000_000, Summary::default).unwrap();
    let n = 1_000_000.0;
    let a = p.alpha;
    let stat: f64 = s
        .m_hist
        .iter()
        .enumerate()
        .map(|(k, &obs)| {
            let prob = if k + 1 < s.m_hist.len() {
                geometric_pmf(k as u64 + 1, a).unwrap()
            } else {
                (1.0 - a).powi(k as i32)
            };
            let e = n * prob;
            (obs as f64 - e).powi(2) / e
        })
        .sum();
    let crit = ChiSquared::new((s.m_hist.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    assert!(stat < crit, "chi-square {stat} vs {crit}");
}

#[test]
fn renewal_cycles_follow_the_analytic_law() {
    let p = base().with_x(0.0);
    let c = SeriesControl::default().with_max_terms(5000);
    let cols: Columns = sample_many(&p, RngSpec::new(7, 0), 100_000, Columns::default).unwrap();
    // CDF tabulated by quadrature on a fine grid, linearly interpolated.
    let h = 0.01;
    let top = 80.0;
    let mut grid = vec![0.0];
    let mut acc = 0.0;
    let mut y = 0.0;
    while y < top {
        acc += finite_integral(|u| pdf_c0(u, &p, &c), y, y + h, 1e-13);
        grid.push(acc);
        y += h;
    }
    let cdf = |x: f64| {
        if x >= top {
            return 1.0;
        }
        let i = (x / h).floor() as usize;
        let f = x / h - i as f64;
        grid[i] + f * (grid[i + 1] - grid[i])
    };
    let d = ks_statistic(&cols.c_x, cdf);
    assert!(d < ks_critical_1pct(cols.c_x.len()), "KS {d}");
}

#[test]
fn consecutive_cycles_are_uncorrelated() {
    let p = base().with_alpha(0.1);
    let recs: Collect = sample_many(&p, RngSpec::new(31, 0), 100_000, Collect::default).unwrap();
    let pairs: Vec<(f64, f64)> = recs
        .0
        .iter()
        .flat_map(|r| {
            r.cycles()
                .windows(2)
                .map(|w| (w[0], w[1]))
                .collect::<Vec<_>>()
        })
        .collect();
    let n = pairs.len() as f64;
    let (ma, mb) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    let r = sab / (saa * sbb).sqrt();
    assert!(
        r.abs() < 3.0 / n.sqrt(),
        "lag-1 correlation {r} from {n} pairs"
    );
}

#[test]
fn conditional_atom_matches_simulation() {
    let p = base().with_x(0.0);
    let c = SeriesControl::default();
    let (t, tau, delta) = (0.5, 2.0, 0.05);
    let s = sample_within_cycle(&p, RngSpec::new(17, 0), t, tau, delta, 100_000).unwrap();
    let f = s.atom_frequency();
    let exact = cond_atom(t, tau, &p, &c).unwrap();
    let se = (exact * (1.0 - exact) / s.accepted() as f64).sqrt();
    assert!((f - exact).abs() < 3.0 * se, "{f} vs {exact} (se {se})");
    assert!(s.w_t0.iter().all(|&(w, t0)| w > t / 2.0 && w <= t0));
}

#[test]
fn conditional_cdf_matches_simulation() {
    let c = SeriesControl::default().with_max_terms(2000);
    let (t, tau) = (5.0, 6.0);
    for mu in [0.5, 1.5] {
        let p = params(2.0, mu, 0.5, 0.0);
        let s = sample_within_cycle(&p, RngSpec::new(23, 0), t, tau, 0.05 * tau, 100_000).unwrap();
        let sup = (0..=100)
            .map(|k| {
                let x = t * k as f64 / 100.0;
                (s.continuous_cdf(x) - cond_cdf_within_cycle(x, t, tau, &p, &c).unwrap()).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup < 0.01, "mu {mu}: sup difference {sup}");
        assert!(s.w_t0.iter().all(|&(w, t0)| w > t / 2.0 && w <= t0));
    }
}

#[test]
fn conditioning_window_out_of_reach_is_reported() {
    let p = base().with_x(0.0);
    let r = sample_within_cycle(&p, RngSpec::new(1, 0), 1.0, 400.0, 0.01, 10);
    assert!(matches!(
        r,
        Err(telegraph_core::Error::InfeasibleConditioning { .. })
    ));
}
