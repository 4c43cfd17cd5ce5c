use serde::Serialize;
use std::io::Write;

use telegraph_core::analytic::closed_mean_var;
use telegraph_core::sim::{sample_many, write_csv, Columns, Moments, RngSpec, Summary};

use crate::args::SimulateArgs;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std_error: f64,
    pub variance: f64,
    pub closed_mean: f64,
    pub closed_variance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimSummary {
    pub seed: u64,
    pub stream: u64,
    pub n: u64,
    pub c_x: Stat,
    pub a_x: Stat,
    pub m: Stat,
    pub m_histogram: Vec<u64>,
    pub out: Option<String>,
}

fn stat(m: &Moments, closed_mean: f64, closed_variance: f64) -> Stat {
    Stat {
        mean: m.mean,
        std_error: m.std_error(),
        variance: m.variance(),
        closed_mean,
        closed_variance,
    }
}

pub fn run(a: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let p = a.model.params()?;
    let spec = RngSpec::new(a.seed, a.stream);
    let (summary, cols): (Summary, Columns) =
        sample_many(&p, spec, a.n, || (Summary::default(), Columns::default()))?;
    let rows = cols
        .c_x
        .iter()
        .zip(&cols.m)
        .zip(&cols.a_x)
        .map(|((&c, &m), &ax)| (c, m, ax));
    match &a.out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            write_csv(&mut f, spec, rows)?;
            f.flush()?;
        }
        None if !a.json => write_csv(out, spec, rows)?,
        None => {}
    }
    let mv = closed_mean_var(&p)?;
    let al = p.alpha;
    let s = SimSummary {
        seed: a.seed,
        stream: a.stream,
        n: a.n,
        c_x: stat(&summary.c_x, mv.mean_cx, mv.var_cx),
        a_x: stat(&summary.a_x, mv.mean_ax, mv.var_ax),
        m: stat(&summary.m, 1.0 / al, (1.0 - al) / (al * al)),
        m_histogram: summary.m_hist.clone(),
        out: a.out.as_ref().map(|p| p.display().to_string()),
    };
    if a.json {
        serde_json::to_writer_pretty(&mut *out, &s)?;
        writeln!(out)?;
    } else {
        // The records own stdout when no file is given.
        let mut err = std::io::stderr();
        let sink: &mut dyn Write = if a.out.is_some() { out } else { &mut err };
        for (name, st) in [("c_x", &s.c_x), ("a_x", &s.a_x), ("m", &s.m)] {
            writeln!(
                sink,
                "{name}: mean {:.6} (se {:.2e}, closed {:.6}), variance {:.6} (closed {:.6})",
                st.mean, st.std_error, st.closed_mean, st.variance, st.closed_variance
            )?;
        }
    }
    Ok(())
}
