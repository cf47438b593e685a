use super::stencil::{central_d1, central_d2};
use super::{Grid, LinearOp, OperatorKind, OperatorSet, Parts};
use crate::error::{invalid, Result};
use crate::linalg::CsrMatrix;

/// Left boundary closure of a diagonal-norm SBP operator set. Rows beyond the
/// block use the central interior stencils; the right boundary is the mirror image.
struct Closure {
    /// Boundary norm weights (interior weight is 1).
    h: &'static [f64],
    /// Leading rows of `Q = H D1 dx` (unscaled).
    q: &'static [&'static [f64]],
    /// Leading rows of `A2 dx`.
    a2: &'static [&'static [f64]],
    /// `d_L dx`, a one-sided derivative at the left node.
    d_left: &'static [f64],
}

const R2: Closure = Closure { h: &[0.5], q: &[&[-0.5, 0.5]], a2: &[&[1.0, -1.0]], d_left: &[-1.5, 2.0, -0.5] };

const R4: Closure = Closure {
    h: &[17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0],
    q: &[
        &[-0.5, 59.0 / 96.0, -1.0 / 12.0, -1.0 / 32.0],
        &[-59.0 / 96.0, 0.0, 59.0 / 96.0, 0.0],
        &[1.0 / 12.0, -59.0 / 96.0, 0.0, 59.0 / 96.0, -1.0 / 12.0],
        &[1.0 / 32.0, 0.0, -59.0 / 96.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
    ],
    a2: &[
        &[54.0 / 48.0, -59.0 / 48.0, 4.0 / 48.0, 1.0 / 48.0],
        &[-59.0 / 48.0, 118.0 / 48.0, -59.0 / 48.0, 0.0],
        &[4.0 / 48.0, -59.0 / 48.0, 110.0 / 48.0, -59.0 / 48.0, 4.0 / 48.0],
        &[1.0 / 48.0, 0.0, -59.0 / 48.0, 118.0 / 48.0, -64.0 / 48.0, 4.0 / 48.0],
    ],
    d_left: &[-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0],
};

const R6: Closure = Closure {
    h: &[13649.0 / 43200.0, 12013.0 / 8640.0, 2711.0 / 4320.0, 5359.0 / 4320.0, 7877.0 / 8640.0, 43801.0 / 43200.0],
    q: &[
        &[-0.5, 104009.0 / 172800.0, 30443.0 / 259200.0, -33311.0 / 86400.0, 5621.0 / 28800.0, -601.0 / 20736.0],
        &[-104009.0 / 172800.0, 0.0, -311.0 / 51840.0, 6743.0 / 5760.0, -24337.0 / 34560.0, 36661.0 / 259200.0],
        &[-30443.0 / 259200.0, 311.0 / 51840.0, 0.0, -2231.0 / 5184.0, 41287.0 / 51840.0, -7333.0 / 28800.0],
        &[33311.0 / 86400.0, -6743.0 / 5760.0, 2231.0 / 5184.0, 0.0, 4147.0 / 17280.0, 25427.0 / 259200.0, 1.0 / 60.0],
        &[
            -5621.0 / 28800.0,
            24337.0 / 34560.0,
            -41287.0 / 51840.0,
            -4147.0 / 17280.0,
            0.0,
            342523.0 / 518400.0,
            -3.0 / 20.0,
            1.0 / 60.0,
        ],
        &[
            601.0 / 20736.0,
            -36661.0 / 259200.0,
            7333.0 / 28800.0,
            -25427.0 / 259200.0,
            -342523.0 / 518400.0,
            0.0,
            3.0 / 4.0,
            -3.0 / 20.0,
            1.0 / 60.0,
        ],
    ],
    a2: &[
        &[120457.0 / 103680.0, -81763.0 / 64800.0, -131.0 / 86400.0, 9143.0 / 64800.0, -20539.0 / 518400.0],
        &[
            -81763.0 / 64800.0,
            25961.0 / 11520.0,
            -7357.0 / 12960.0,
            -30637.0 / 51840.0,
            97.0 / 540.0,
            -6611.0 / 518400.0,
        ],
        &[-131.0 / 86400.0, -7357.0 / 12960.0, 26717.0 / 25920.0, -43.0 / 144.0, -11237.0 / 51840.0, 3487.0 / 64800.0],
        &[
            9143.0 / 64800.0,
            -30637.0 / 51840.0,
            -43.0 / 144.0,
            46693.0 / 25920.0,
            -13733.0 / 12960.0,
            1541.0 / 86400.0,
            -1.0 / 90.0,
        ],
        &[
            -20539.0 / 518400.0,
            97.0 / 540.0,
            -11237.0 / 51840.0,
            -13733.0 / 12960.0,
            82147.0 / 34560.0,
            -89387.0 / 64800.0,
            3.0 / 20.0,
            -1.0 / 90.0,
        ],
        &[
            0.0,
            -6611.0 / 518400.0,
            3487.0 / 64800.0,
            1541.0 / 86400.0,
            -89387.0 / 64800.0,
            278033.0 / 103680.0,
            -1.5,
            3.0 / 20.0,
            -1.0 / 90.0,
        ],
    ],
    d_left: &[-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
};

fn closure(order: usize) -> Option<&'static Closure> {
    match order {
        2 => Some(&R2),
        4 => Some(&R4),
        6 => Some(&R6),
        _ => None,
    }
}

/// Assembles an `n x n` matrix from a left boundary block, its mirror image
/// (with entries multiplied by `mirror_sign`), and a symmetric-offset interior stencil.
fn assemble_banded(
    n: usize,
    block: &[&[f64]],
    interior: &[(isize, f64)],
    mirror_sign: f64,
    scale: f64,
) -> CsrMatrix {
    let r = block.len();
    let mut t = Vec::new();
    for (i, row) in block.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c != 0.0 {
                t.push((i, j, scale * c));
                t.push((n - 1 - i, n - 1 - j, mirror_sign * scale * c));
            }
        }
    }
    for i in r..n - r {
        for &(o, c) in interior {
            if c != 0.0 {
                t.push((i, (i as isize + o) as usize, scale * c));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

pub fn make_bounded_fd_sbp(interior_order: usize, n: usize, x_left: f64, x_right: f64) -> Result<OperatorSet> {
    let Some(cl) = closure(interior_order) else {
        return invalid(format!("bounded FD SBP order must be one of 2, 4, 6, got {interior_order}"));
    };
    let r = cl.h.len();
    let min_n = 2 * r + interior_order;
    if n < min_n {
        return invalid(format!("bounded FD SBP of order {interior_order} needs n >= {min_n}, got {n}"));
    }
    let grid = Grid::bounded(n, x_left, x_right)?;
    let dx = grid.dx;

    let mut h = vec![1.0; n];
    for (i, &hi) in cl.h.iter().enumerate() {
        h[i] = hi;
        h[n - 1 - i] = hi;
    }
    let mass_diag: Vec<f64> = h.iter().map(|hi| hi * dx).collect();

    let s1 = central_d1(interior_order).expect("interior stencil exists");
    let s2 = central_d2(interior_order).expect("interior stencil exists");
    let q_int: Vec<(isize, f64)> = s1.offsets().collect();
    let a2_int: Vec<(isize, f64)> = s2.offsets().map(|(o, c)| (o, -c)).collect();

    let q = assemble_banded(n, cl.q, &q_int, -1.0, 1.0);
    let d1 = q.scale_rows(&h.iter().map(|hi| 1.0 / (hi * dx)).collect::<Vec<_>>());
    let a2 = assemble_banded(n, cl.a2, &a2_int, 1.0, 1.0 / dx);

    let mut t_left = vec![0.0; n];
    let mut t_right = vec![0.0; n];
    t_left[0] = 1.0;
    t_right[n - 1] = 1.0;
    let mut d_left = vec![0.0; n];
    let mut d_right = vec![0.0; n];
    for (j, &c) in cl.d_left.iter().enumerate() {
        d_left[j] = c / dx;
        d_right[n - 1 - j] = -c / dx;
    }

    // M D2 = t_R d_R^T - t_L d_L^T - A2
    let mut trip: Vec<(usize, usize, f64)> = a2.triplets().map(|(i, j, v)| (i, j, -v)).collect();
    for j in 0..n {
        trip.push((0, j, -d_left[j]));
        trip.push((n - 1, j, d_right[j]));
    }
    let d2 = CsrMatrix::from_triplets(n, n, &trip).scale_rows(&mass_diag.iter().map(|m| 1.0 / m).collect::<Vec<_>>());

    Ok(OperatorSet::assemble(Parts {
        grid,
        mass_diag,
        d1: LinearOp::Sparse(d1),
        d2: LinearOp::Sparse(d2),
        a2: LinearOp::Sparse(a2),
        t_left,
        t_right,
        d_left,
        d_right,
        d_plus: None,
        d_minus: None,
        accuracy_order: interior_order,
        kind: OperatorKind::BoundedFdSbp,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn order_two_matches_fem_matrices() {
        let ops = make_bounded_fd_sbp(2, 5, 0.0, 4.0).unwrap();
        assert_eq!(ops.grid.dx, 1.0);
        assert_eq!(ops.mass_diag, vec![0.5, 1.0, 1.0, 1.0, 0.5]);
        let expected = DMatrix::from_row_slice(
            5,
            5,
            &[
                1.0, -1.0, 0.0, 0.0, 0.0, //
                -1.0, 2.0, -1.0, 0.0, 0.0, //
                0.0, -1.0, 2.0, -1.0, 0.0, //
                0.0, 0.0, -1.0, 2.0, -1.0, //
                0.0, 0.0, 0.0, -1.0, 1.0,
            ],
        );
        assert_eq!(ops.a2.to_dense(), expected);
    }

    #[test]
    fn order_two_quadratic_form_is_sum_of_squared_differences() {
        let ops = make_bounded_fd_sbp(2, 30, -1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let v: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let form: f64 = v.iter().zip(ops.a2.apply(&v)).map(|(a, b)| a * b).sum();
            let direct: f64 = v.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum::<f64>() / ops.grid.dx;
            assert!(((form - direct) / direct).abs() <= 1e-13);
        }
    }

    #[test]
    fn boundary_derivatives_exact_for_polynomials() {
        for (order, degree) in [(2usize, 2i32), (4, 3), (6, 4)] {
            let ops = make_bounded_fd_sbp(order, 40, 0.0, 2.0).unwrap();
            let x = &ops.grid.nodes;
            for p in 0..=degree {
                let u: Vec<f64> = x.iter().map(|xi| xi.powi(p)).collect();
                let exact = |xi: f64| if p == 0 { 0.0 } else { p as f64 * xi.powi(p - 1) };
                let dl: f64 = ops.d_left.iter().zip(&u).map(|(a, b)| a * b).sum();
                let dr: f64 = ops.d_right.iter().zip(&u).map(|(a, b)| a * b).sum();
                assert!((dl - exact(0.0)).abs() < 1e-9, "order {order} degree {p}");
                assert!((dr - exact(2.0)).abs() < 1e-9, "order {order} degree {p}");
            }
        }
    }

    #[test]
    fn first_derivative_boundary_accuracy() {
        // boundary closures are exact to degree order/2, the interior to degree order
        for order in [2usize, 4, 6] {
            let ops = make_bounded_fd_sbp(order, 48, -1.0, 1.0).unwrap();
            let x = &ops.grid.nodes;
            for p in 0..=(order / 2) as i32 {
                let u: Vec<f64> = x.iter().map(|xi| xi.powi(p)).collect();
                let du = ops.d1.apply(&u);
                for (xi, d) in x.iter().zip(&du) {
                    let exact = if p == 0 { 0.0 } else { p as f64 * xi.powi(p - 1) };
                    assert!((d - exact).abs() < 1e-10, "order {order} degree {p}");
                }
            }
        }
    }

    #[test]
    fn a2_is_positive_semidefinite_with_constant_kernel() {
        for order in [2usize, 4, 6] {
            let ops = make_bounded_fd_sbp(order, 50, 0.0, 1.0).unwrap();
            let a = ops.a2.to_dense() * ops.grid.dx;
            assert!((&a - a.transpose()).amax() < 1e-14);
            let mut eig: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
            eig.sort_by(f64::total_cmp);
            assert!(eig[0].abs() < 1e-12, "order {order}: {}", eig[0]);
            assert!(eig[1] > 1e-4, "order {order}: second eigenvalue {}", eig[1]);
        }
    }

    #[test]
    fn too_small_grid() {
        assert!(make_bounded_fd_sbp(6, 17, 0.0, 1.0).is_err());
        assert!(make_bounded_fd_sbp(2, 4, 0.0, 1.0).is_ok());
        assert!(make_bounded_fd_sbp(8, 100, 0.0, 1.0).is_err());
    }
}
