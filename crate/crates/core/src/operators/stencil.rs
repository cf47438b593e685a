use crate::linalg::CsrMatrix;

/// Stencil coefficients at offsets `first, first + 1, ...`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    pub first: isize,
    pub coeffs: &'static [f64],
}

impl Stencil {
    pub const fn new(first: isize, coeffs: &'static [f64]) -> Self {
        Self { first, coeffs }
    }

    pub fn offsets(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(k, &c)| (self.first + k as isize, c))
    }
}

/// Periodic circulant `n x n` matrix with rows `scale * stencil`.
pub(crate) fn circulant(n: usize, stencil: Stencil, scale: f64) -> CsrMatrix {
    let mut t = Vec::with_capacity(n * stencil.coeffs.len());
    for i in 0..n {
        for (o, c) in stencil.offsets() {
            if c != 0.0 {
                let j = (i as isize + o).rem_euclid(n as isize) as usize;
                t.push((i, j, scale * c));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

/// Central first-derivative stencils (unscaled), orders 2 to 8.
pub(crate) fn central_d1(order: usize) -> Option<Stencil> {
    Some(match order {
        2 => Stencil::new(-1, &[-0.5, 0.0, 0.5]),
        4 => Stencil::new(-2, &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0]),
        6 => Stencil::new(-3, &[-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0]),
        8 => Stencil::new(
            -4,
            &[
                1.0 / 280.0,
                -4.0 / 105.0,
                1.0 / 5.0,
                -4.0 / 5.0,
                0.0,
                4.0 / 5.0,
                -1.0 / 5.0,
                4.0 / 105.0,
                -1.0 / 280.0,
            ],
        ),
        _ => return None,
    })
}

/// Central second-derivative stencils (unscaled), orders 2 to 8.
pub(crate) fn central_d2(order: usize) -> Option<Stencil> {
    Some(match order {
        2 => Stencil::new(-1, &[1.0, -2.0, 1.0]),
        4 => Stencil::new(-2, &[-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]),
        6 => Stencil::new(-3, &[1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0]),
        8 => Stencil::new(
            -4,
            &[
                -1.0 / 560.0,
                8.0 / 315.0,
                -1.0 / 5.0,
                8.0 / 5.0,
                -205.0 / 72.0,
                8.0 / 5.0,
                -1.0 / 5.0,
                8.0 / 315.0,
                -1.0 / 560.0,
            ],
        ),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sum of c_k * k^m, exact for the small integers involved.
    fn moment(s: Stencil, m: u32) -> f64 {
        s.offsets().map(|(o, c)| c * (o as f64).powi(m as i32)).sum()
    }

    fn factorial(m: u32) -> f64 {
        (1..=m).map(f64::from).product()
    }

    #[test]
    fn central_stencils_have_nominal_order() {
        for order in [2usize, 4, 6, 8] {
            let d1 = central_d1(order).unwrap();
            let d2 = central_d2(order).unwrap();
            // d1 reproduces x^m / m! derivatives for m <= order, d2 for m <= order + 1
            for m in 0..=order as u32 {
                let want = if m == 1 { 1.0 } else { 0.0 };
                assert!((moment(d1, m) / factorial(m) - want).abs() < 1e-13, "d1 order {order} m {m}");
            }
            assert!(moment(d1, order as u32 + 1).abs() > 1e-6);
            for m in 0..=order as u32 + 1 {
                let want = if m == 2 { 1.0 } else { 0.0 };
                assert!((moment(d2, m) / factorial(m) - want).abs() < 1e-13, "d2 order {order} m {m}");
            }
        }
        assert!(central_d1(3).is_none());
    }
}
