use super::stencil::{circulant, Stencil};
use super::{Grid, LinearOp, OperatorKind, OperatorSet, Parts};
use crate::error::{invalid, Result};

/// Forward-biased periodic upwind stencils; the backward operator is `D- = -D+^T`.
fn plus_stencil(order: usize) -> Option<Stencil> {
    Some(match order {
        2 => Stencil::new(0, &[-1.5, 2.0, -0.5]),
        4 => Stencil::new(-1, &[-3.0 / 12.0, -10.0 / 12.0, 18.0 / 12.0, -6.0 / 12.0, 1.0 / 12.0]),
        6 => Stencil::new(
            -2,
            &[2.0 / 60.0, -24.0 / 60.0, -35.0 / 60.0, 80.0 / 60.0, -30.0 / 60.0, 8.0 / 60.0, -1.0 / 60.0],
        ),
        _ => return None,
    })
}

pub fn make_upwind_fd(order: usize, n: usize, x_left: f64, x_right: f64) -> Result<OperatorSet> {
    let Some(sp) = plus_stencil(order) else {
        return invalid(format!("upwind FD order must be one of 2, 4, 6, got {order}"));
    };
    if n <= 2 * order {
        return invalid(format!("upwind FD of order {order} needs n > {}, got {n}", 2 * order));
    }
    let grid = Grid::periodic(n, x_left, x_right)?;
    let dx = grid.dx;
    let d_plus = circulant(n, sp, 1.0 / dx);
    let d_minus = d_plus.transpose().scaled(-1.0);
    let d1 = d_plus.add(0.5, &d_minus, 0.5);
    let d2 = d_minus.matmul(&d_plus);
    let a2 = d2.scaled(-dx);
    let zeros = vec![0.0; n];
    Ok(OperatorSet::assemble(Parts {
        grid,
        mass_diag: vec![dx; n],
        d1: LinearOp::Sparse(d1),
        d2: LinearOp::Sparse(d2),
        a2: LinearOp::Sparse(a2),
        t_left: zeros.clone(),
        t_right: zeros.clone(),
        d_left: zeros.clone(),
        d_right: zeros,
        d_plus: Some(LinearOp::Sparse(d_plus)),
        d_minus: Some(LinearOp::Sparse(d_minus)),
        accuracy_order: order,
        kind: OperatorKind::UpwindFd,
    }))
}
