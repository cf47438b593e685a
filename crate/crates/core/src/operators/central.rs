use super::stencil::{central_d1, central_d2, circulant};
use super::{Grid, LinearOp, OperatorKind, OperatorSet, Parts};
use crate::error::{invalid, Result};

pub fn make_central_fd(order: usize, n: usize, x_left: f64, x_right: f64) -> Result<OperatorSet> {
    let (Some(s1), Some(s2)) = (central_d1(order), central_d2(order)) else {
        return invalid(format!("central FD order must be one of 2, 4, 6, 8, got {order}"));
    };
    if n <= 2 * order {
        return invalid(format!("central FD of order {order} needs n > {}, got {n}", 2 * order));
    }
    let grid = Grid::periodic(n, x_left, x_right)?;
    let dx = grid.dx;
    let d2 = circulant(n, s2, 1.0 / (dx * dx));
    let a2 = circulant(n, s2, -1.0 / dx);
    let zeros = vec![0.0; n];
    Ok(OperatorSet::assemble(Parts {
        grid,
        mass_diag: vec![dx; n],
        d1: LinearOp::Sparse(circulant(n, s1, 1.0 / dx)),
        d2: LinearOp::Sparse(d2),
        a2: LinearOp::Sparse(a2),
        t_left: zeros.clone(),
        t_right: zeros.clone(),
        d_left: zeros.clone(),
        d_right: zeros,
        d_plus: None,
        d_minus: None,
        accuracy_order: order,
        kind: OperatorKind::CentralFd,
    }))
}
