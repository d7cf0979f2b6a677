//! Minimal end-to-end use of the library API: build a count matrix,
//! initialize factors, and fit the generalized Poisson model.

use countfact::factor_core::{init_nndsvd, CountMatrix};
use countfact::models::{fit_gpmf, DispersionParams};
use countfact::ConvergenceSpec64;
use nalgebra::DMatrix;

fn main() -> Result<(), countfact::Error> {
    let y = CountMatrix::new(DMatrix::from_row_slice(2, 3, &[4, 0, 7, 1, 3, 2]))?;
    let init = init_nndsvd::<f64>(&y, 2)?;
    let d0 = DispersionParams::row_wise(vec![1.0; 2])?;
    let report = fit_gpmf(&y, init, d0, &ConvergenceSpec64::default())?;
    println!("converged={} nll={}", report.converged, report.final_nll());
    Ok(())
}
