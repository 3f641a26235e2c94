//! CSV output. Floats are written in scientific notation with 17 significant
//! digits so every value round-trips and identical runs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use csv::{Terminator, WriterBuilder};

use crate::certificates::ScenarioCertificates;
use crate::controller::check_gains;
use crate::error::Result;
use crate::observer::ObserverLog;
use crate::pe::PEReport;
use crate::sim::TrajectoryLog;

pub const AGENT_COLUMNS: [&str; 11] = ["t", "agent", "px", "py", "pz", "vx", "vy", "vz", "ux", "uy", "uz"];
pub const EDGE_COLUMNS: [&str; 7] = ["t", "i", "j", "err_p_norm", "err_v_norm", "err_x_norm", "lyapunov"];
pub const OBSERVER_COLUMNS: [&str; 6] = ["t", "agent", "phat_x", "phat_y", "phat_z", "err_norm"];
pub const PE_COLUMNS: [&str; 6] = ["agent", "mu_star", "is_pe", "epsilon1", "lambda_max", "window_t"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(out)
}

pub fn write_agents_csv<W: Write>(log: &TrajectoryLog, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(AGENT_COLUMNS)?;
    for ((t, states), controls) in log.times.iter().zip(&log.states).zip(&log.controls) {
        for (a, (s, u)) in states.iter().zip(controls).enumerate() {
            let mut rec = vec![fmt_f64(*t), (a + 1).to_string()];
            rec.extend(s.p.iter().chain(s.v.iter()).chain(u.iter()).map(|v| fmt_f64(*v)));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_edges_csv<W: Write>(log: &TrajectoryLog, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(EDGE_COLUMNS)?;
    for (k, t) in log.times.iter().enumerate() {
        for e in &log.edges {
            w.write_record([
                fmt_f64(*t),
                e.i.to_string(),
                e.j.to_string(),
                fmt_f64(e.err_p[k]),
                fmt_f64(e.err_v[k]),
                fmt_f64(e.err_x[k]),
                fmt_f64(e.lyapunov[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_observer_csv<W: Write>(log: &ObserverLog, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(OBSERVER_COLUMNS)?;
    for ((t, est), err) in log.times.iter().zip(&log.estimates).zip(&log.errors) {
        for (a, (p, e)) in est.iter().zip(err).enumerate() {
            w.write_record([fmt_f64(*t), (a + 1).to_string(), fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z), fmt_f64(*e)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per follower, then a `formation` row with the overall margin.
pub fn write_pe_csv<W: Write>(report: &PEReport, out: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut w = writer(out);
    w.write_record(PE_COLUMNS)?;
    for a in &report.per_agent {
        w.write_record([
            a.agent.to_string(),
            fmt_f64(a.mu_star),
            a.is_pe.to_string(),
            opt(a.epsilon1),
            fmt_f64(a.lambda_max),
            fmt_f64(report.window_t),
        ])?;
    }
    w.write_record([
        "formation".to_string(),
        fmt_f64(report.mu_star),
        report.is_pe.to_string(),
        opt(report.epsilon1),
        String::new(),
        fmt_f64(report.window_t),
    ])?;
    w.flush()?;
    Ok(())
}

pub const CERTIFICATE_COLUMNS: [&str; 18] = [
    "agent", "m", "kp", "kd", "kp_bound", "lambda_m", "alpha_min_sq", "gamma", "l_q", "l_a", "c", "window_t", "mu", "rho",
    "sigma", "rate_b", "cascade_c", "envelope_coeff",
];

pub fn write_certificates_csv<W: Write>(certs: &ScenarioCertificates, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CERTIFICATE_COLUMNS)?;
    for ((f, inp), c) in certs.followers.iter().zip(&certs.inputs).zip(&certs.cascade.c_rates) {
        let bound = check_gains(f.m, inp.gains)?.kp_bound;
        let mut rec = vec![f.agent.to_string(), f.m.to_string()];
        rec.extend(
            [
                inp.gains.kp,
                inp.gains.kd,
                bound,
                f.gamma.lambda_m,
                f.gamma.alpha_min_sq,
                f.gamma.gamma,
                f.cascade.l_q,
                f.cascade.l_a,
                f.cascade.c,
                f.rate.window_t,
                f.rate.mu,
                f.rate.rho,
                f.rate.sigma,
                f.rate.rate,
                *c,
                f.rate.envelope_coeff,
            ]
            .map(fmt_f64),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Creates `path` and hands a buffered writer to `write`.
pub fn to_file<F>(path: impl AsRef<Path>, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| crate::Error::Io(format!("{}: {e}", path.display())))?;
    let mut buf = BufWriter::new(file);
    write(&mut buf)?;
    buf.flush()?;
    Ok(())
}
