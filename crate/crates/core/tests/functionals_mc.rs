//! Monte Carlo normalization of the path densities.

mod common;

use common::mean_se;
use rklab_core::functionals::{rn_reversed, rn_vrjp};
use rklab_core::mjp::simulate_until_horizon;
use rklab_core::stream::stream;
use rklab_core::GraphDescription;

fn triangle() -> rklab_core::WeightedGraph {
    GraphDescription::new(["x0", "a", "b"], "x0")
        .edge("x0", "a", 1.0)
        .edge("x0", "b", 1.0)
        .edge("a", "b", 1.0)
        .build()
        .unwrap()
}

#[test]
fn vrjp_density_has_unit_mean() {
    let g = triangle();
    let t = 1.0;
    let xs: Vec<f64> = (0..100_000)
        .map(|r| {
            let p = simulate_until_horizon(&g, 0, t, &mut stream(2, 0, 0, r)).unwrap();
            rn_vrjp(&g, &[1.0; 3], &p, t).unwrap()
        })
        .collect();
    let (m, se) = mean_se(&xs);
    assert!((m - 1.0).abs() <= 4.0 * se, "{m} ± {se}");
}

#[test]
fn reversed_density_has_unit_mean() {
    let g = triangle();
    let t = 0.5;
    let xs: Vec<f64> = (0..100_000)
        .map(|r| {
            let p = simulate_until_horizon(&g, 0, t, &mut stream(2, 1, 0, r)).unwrap();
            rn_reversed(&g, &[2.0; 3], &p, t).unwrap()
        })
        .collect();
    let (m, se) = mean_se(&xs);
    assert!((m - 1.0).abs() <= 4.0 * se, "{m} ± {se}");
}
