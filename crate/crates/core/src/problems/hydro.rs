use crate::error::{check_len, Result};
use crate::nls::NlsState;
use crate::operators::OperatorSet;
use serde::Serialize;
use std::f64::consts::PI;

/// Densities below this are treated as vacuum where the phase is undefined.
pub const VACUUM_THRESHOLD: f64 = 1e-8;

/// Madelung variables `u = sqrt(rho) exp(i theta)` with velocity `vel = theta_x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HydroFields {
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub vel: Vec<f64>,
    /// `false` at vacuum nodes; their phase is copied from the nearest valid node.
    pub valid: Vec<bool>,
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Unwraps a sequence of angles so that adjacent differences lie in `(-pi, pi]`.
pub fn unwrap_phase(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    for (i, &a) in raw.iter().enumerate() {
        if i == 0 {
            out.push(a);
        } else {
            let prev = out[i - 1];
            out.push(prev + wrap(a - raw[i - 1]));
        }
    }
    out
}

pub fn to_hydro(state: &NlsState, ops: &OperatorSet) -> Result<HydroFields> {
    let n = ops.n();
    check_len("state", state.n(), n)?;
    let (v, w) = (state.v(), state.w());
    let rho: Vec<f64> = v.iter().zip(w).map(|(a, b)| a * a + b * b).collect();
    let valid: Vec<bool> = rho.iter().map(|r| *r >= VACUUM_THRESHOLD).collect();
    let mut raw: Vec<f64> = v.iter().zip(w).map(|(a, b)| b.atan2(*a)).collect();

    if valid.iter().any(|x| *x) {
        // vacuum nodes take the phase of the nearest valid node
        let idx: Vec<usize> = (0..n).filter(|&i| valid[i]).collect();
        for i in 0..n {
            if !valid[i] {
                let k = idx.partition_point(|&j| j < i);
                let cand = [k.checked_sub(1).map(|k| idx[k]), idx.get(k).copied()];
                let j = cand.into_iter().flatten().min_by_key(|&j| j.abs_diff(i)).expect("nonempty");
                raw[i] = raw[j];
            }
        }
    }
    let theta = unwrap_phase(&raw);

    let vel = if ops.is_periodic() && n > 1 {
        // remove the net winding so the differentiated phase is periodic
        let closing = theta[n - 1] + wrap(raw[0] - raw[n - 1]);
        let winding = closing - theta[0];
        let slope = winding / ops.grid.length();
        let x0 = ops.grid.nodes[0];
        let periodic: Vec<f64> = theta.iter().zip(&ops.grid.nodes).map(|(t, x)| t - slope * (x - x0)).collect();
        ops.d1.apply(&periodic).into_iter().map(|d| d + slope).collect()
    } else {
        ops.d1.apply(&theta)
    };
    Ok(HydroFields { rho, theta, vel, valid })
}
