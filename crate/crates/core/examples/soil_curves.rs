//! Brooks–Corey retention and permeability curves with the Kirchhoff
//! variable and the transformed-equation coefficients.
//!
//! cargo run --example soil_curves -- [sandy-clay|loam]

use richards_rbf::constitutive::SoilParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sandy-clay".into());
    let soil = SoilParams::by_name(&name).ok_or("unknown soil")?;
    println!("# h_cap = {} cm, K_s = {} cm/min", soil.h_cap(), soil.k_s());
    println!(
        "{:>12} {:>10} {:>10} {:>12} {:>14} {:>12} {:>10}",
        "h", "S", "theta", "k_r", "u", "A", "B"
    );
    for k in 0..=24 {
        let h = soil.h_cap() * 10f64.powf(-0.5 + k as f64 * 0.375);
        let s = soil.saturation_from_suction(h);
        let u = soil.kirchhoff(h);
        let c = soil.coefficients(h);
        // the inverse transform recovers h from u
        let back = soil.kirchhoff_inverse(u)?;
        assert!(h <= soil.h_cap() || (back - h).abs() <= 1e-10 * h);
        println!(
            "{h:12.4e} {s:10.6} {:10.6} {:12.4e} {u:14.6e} {:12.4e} {:10.4e}",
            soil.moisture_content(s)?,
            soil.relative_permeability(h),
            c.a,
            c.b
        );
    }
    let h0 = soil.suction_from_saturation(soil.initial_saturation())?;
    println!(
        "# initial state: S0 = {:.6}, h0 = {h0:.6e} cm, u0 = {:.6e} cm",
        soil.initial_saturation(),
        soil.kirchhoff(h0)
    );
    Ok(())
}
