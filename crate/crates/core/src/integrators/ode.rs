use crate::error::Result;

/// An ODE `u' = L u + N(u)` on flat real state vectors, split into a linear
/// part treated implicitly by IMEX methods and a nonlinear explicit part.
pub trait SplitOde: Sync {
    fn dim(&self) -> usize;

    /// Writes `L u` and `N(u)`.
    fn rhs_split(&self, u: &[f64], linear: &mut [f64], nonlinear: &mut [f64]) -> Result<()>;

    fn rhs(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let mut nl = vec![0.0; self.dim()];
        self.rhs_split(u, out, &mut nl)?;
        for (o, b) in out.iter_mut().zip(&nl) {
            *o += b;
        }
        Ok(())
    }

    /// Solves `x - coeff L x = rhs`.
    fn implicit_solve(&self, coeff: f64, rhs: &[f64], out: &mut [f64]) -> Result<()>;

    /// Number of cached implicit-solve factorizations, for run statistics.
    fn cached_factorizations(&self) -> usize {
        0
    }
}

/// Plain closures as a [`SplitOde`], mainly for tests and small problems.
/// `implicit` solves `x - coeff L x = rhs`.
pub struct FnOde<L, N, S> {
    pub dim: usize,
    pub linear: L,
    pub nonlinear: N,
    pub implicit: S,
}

impl<L, N, S> SplitOde for FnOde<L, N, S>
where
    L: Fn(&[f64], &mut [f64]) + Sync,
    N: Fn(&[f64], &mut [f64]) + Sync,
    S: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs_split(&self, u: &[f64], linear: &mut [f64], nonlinear: &mut [f64]) -> Result<()> {
        (self.linear)(u, linear);
        (self.nonlinear)(u, nonlinear);
        Ok(())
    }

    fn implicit_solve(&self, coeff: f64, rhs: &[f64], out: &mut [f64]) -> Result<()> {
        (self.implicit)(coeff, rhs, out)
    }
}

/// Explicit-only ODE with no linear part.
pub fn explicit_ode<F>(dim: usize, f: F) -> impl SplitOde
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    FnOde {
        dim,
        linear: |_: &[f64], out: &mut [f64]| out.iter_mut().for_each(|o| *o = 0.0),
        nonlinear: f,
        implicit: |_: f64, rhs: &[f64], out: &mut [f64]| {
            out.copy_from_slice(rhs);
            Ok(())
        },
    }
}
