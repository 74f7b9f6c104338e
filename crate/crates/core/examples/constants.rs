//! Closed-form constants checked against direct quadrature.

use zc_rate::{bounds, distortion};

fn main() -> zc_rate::error::Result<()> {
    println!("c0 = {:.12} quadrature {:.12}", distortion::c0_constant(), distortion::c0_quadrature()?);
    println!("c2 = {:.12} quadrature {:.12}", distortion::c2_constant(), distortion::c2_quadrature()?);
    for a in [1e-3, 1.0, 1e3] {
        println!(
            "a = {a}: integral {:.12} arcosh {:.12}",
            bounds::arcosh_integral_quadrature(a)?,
            (a + 1.0f64).acosh()
        );
    }
    Ok(())
}
