use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::metrics::Metrics;
use super::run::RunLog;

pub const RUNLOG_HEADER: &str =
    "t,qw,qx,qy,qz,qdw,qdx,qdy,qdz,wx,wy,wz,qew,qex,qey,qez,sx,sy,sz,branch,Mx,My,Mz";

pub const METRICS_HEADER: &str = "name,controller,sliding,settling_time,steady_state_s_max,peak_effort,\
integral_effort,unwinding_ratio,manifold_switches,layer_hit_time,layer_exits,s_delta_max,s_delta_final,\
max_torque_jump,gain_deficit_steps,rejected_steps,min_estimate_eigenvalue,max_lyapunov_increase";

/// Writes the run log; `{}` on `f64` is the shortest round-trip decimal.
pub fn write_csv<W: Write>(log: &RunLog, mut w: W) -> std::io::Result<()> {
    let adaptive = log.is_adaptive();
    write!(w, "{RUNLOG_HEADER}")?;
    if adaptive {
        write!(w, ",a1,a2,a3,a4,a5,a6")?;
    }
    writeln!(w)?;
    for r in &log.rows {
        let mut fields: Vec<f64> = Vec::with_capacity(29);
        fields.push(r.t);
        fields.extend(r.q.to_array());
        fields.extend(r.q_d.to_array());
        fields.extend(r.omega.iter());
        fields.extend(r.q_e.to_array());
        fields.extend(r.s.iter());
        let head: Vec<String> = fields.iter().map(|x| x.to_string()).collect();
        write!(w, "{},{}", head.join(","), r.branch)?;
        for x in r.torque.iter() {
            write!(w, ",{x}")?;
        }
        if let Some(a) = &r.a_hat {
            for x in a.as_slice() {
                write!(w, ",{x}")?;
            }
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn emit_csv(log: &RunLog, path: &Path) -> std::io::Result<()> {
    write_csv(log, BufWriter::new(File::create(path)?))
}

fn metrics_row(m: &Metrics) -> String {
    [
        m.name.clone(),
        m.controller.clone(),
        m.sliding.clone(),
        m.settling_time.to_string(),
        m.steady_state_s_max.to_string(),
        m.peak_effort.to_string(),
        m.integral_effort.to_string(),
        m.unwinding_ratio.to_string(),
        m.manifold_switches.to_string(),
        m.layer_hit_time.to_string(),
        m.layer_exits.to_string(),
        m.s_delta_max.to_string(),
        m.s_delta_final.to_string(),
        m.max_torque_jump.to_string(),
        m.gain_deficit_steps.to_string(),
        m.rejected_steps.to_string(),
        m.min_estimate_eigenvalue.to_string(),
        m.max_lyapunov_increase.to_string(),
    ]
    .join(",")
}

pub fn write_metrics_csv<W: Write>(metrics: &[Metrics], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for m in metrics {
        writeln!(w, "{}", metrics_row(m))?;
    }
    w.flush()
}

pub fn emit_metrics_csv(metrics: &[Metrics], path: &Path) -> std::io::Result<()> {
    write_metrics_csv(metrics, BufWriter::new(File::create(path)?))
}
