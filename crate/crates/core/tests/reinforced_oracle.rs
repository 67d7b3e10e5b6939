//! Distributional cross-checks of the reinforced simulators against an
//! independent Euler discretization (dt = 1e-4).

mod common;

use common::{chi_square_two_sample, two_sample_z, Euler, Kind};
use rklab_core::reinforced::{simulate_magnetized_reversed, simulate_reversed_vrjp, simulate_vrjp_timechanged, ReversedStop};
use rklab_core::stream::stream;
use rklab_core::GraphDescription;

const DT: f64 = 1e-4;

fn single_edge() -> rklab_core::WeightedGraph {
    GraphDescription::new(["x0", "a"], "x0").edge("x0", "a", 2.0).build().unwrap()
}

fn triangle() -> rklab_core::WeightedGraph {
    GraphDescription::new(["x0", "a", "b"], "x0")
        .edge("x0", "a", 1.0)
        .edge("x0", "b", 1.0)
        .edge("a", "b", 1.0)
        .build()
        .unwrap()
}

fn jump_bins(n: usize) -> usize {
    n.min(4)
}

#[test]
fn reversed_vrjp_end_site_matches_euler() {
    let g = single_edge();
    let phi = [1.2, 0.9];
    let n = 10_000;
    let euler = Euler { dt: DT };
    let mut ends = ([0u64; 2], [0u64; 2]);
    let mut counts = ([0u64; 5], [0u64; 5]);
    for r in 0..n {
        let run = simulate_reversed_vrjp(&g, &phi, 0, &mut stream(1, 0, 0, r)).unwrap();
        ends.0[run.end_site] += 1;
        counts.0[jump_bins(run.z_path.jumps().len())] += 1;
        let e = euler.run(&g, Kind::Reversed, &phi, 0, 0.0, &mut stream(1, 0, 1, r));
        ends.1[e.end_site] += 1;
        counts.1[jump_bins(e.jumps.len())] += 1;
    }
    let p = chi_square_two_sample(&ends.0, &ends.1);
    assert!(p >= 0.001, "end site p = {p}, {ends:?}");
    let p = chi_square_two_sample(&counts.0, &counts.1);
    assert!(p >= 0.001, "jump count p = {p}, {counts:?}");
}

#[test]
fn magnetized_single_edge_matches_euler() {
    let g = single_edge();
    let phi = [1.2, 0.9];
    let n = 10_000;
    let euler = Euler { dt: DT };
    let mut la = (Vec::new(), Vec::new());
    let mut counts = ([0u64; 5], [0u64; 5]);
    for r in 0..n {
        let run = simulate_magnetized_reversed(&g, &phi, 0, ReversedStop::Depletion, &mut stream(1, 1, 0, r)).unwrap();
        assert_eq!(run.end_site, 0);
        la.0.push(run.l_end[1]);
        counts.0[jump_bins(run.z_path.jumps().len())] += 1;
        let e = euler.run(&g, Kind::Magnetized, &phi, 0, 0.0, &mut stream(1, 1, 1, r));
        la.1.push((phi[1] * phi[1] - 2.0 * e.ell[1]).max(0.0).sqrt());
        counts.1[jump_bins(e.jumps.len())] += 1;
    }
    let z = two_sample_z(&la.0, &la.1);
    assert!(z.abs() <= 4.0, "L_end[a] z = {z}");
    let p = chi_square_two_sample(&counts.0, &counts.1);
    assert!(p >= 0.001, "jump count p = {p}, {counts:?}");
}

#[test]
fn magnetized_triangle_matches_euler() {
    let g = triangle();
    let phi = [std::f64::consts::SQRT_2, 1.3, 0.7];
    let n = 3_000;
    let euler = Euler { dt: DT };
    let mut a = (Vec::new(), Vec::new());
    let mut b = (Vec::new(), Vec::new());
    for r in 0..n {
        let run = simulate_magnetized_reversed(&g, &phi, 0, ReversedStop::Depletion, &mut stream(1, 2, 0, r)).unwrap();
        a.0.push(run.l_end[1]);
        b.0.push(run.l_end[2]);
        let e = euler.run(&g, Kind::Magnetized, &phi, 0, 0.0, &mut stream(1, 2, 1, r));
        assert_eq!(e.end_site, 0);
        a.1.push((phi[1] * phi[1] - 2.0 * e.ell[1]).max(0.0).sqrt());
        b.1.push((phi[2] * phi[2] - 2.0 * e.ell[2]).max(0.0).sqrt());
    }
    for (name, pair) in [("a", &a), ("b", &b)] {
        let z = two_sample_z(&pair.0, &pair.1);
        assert!(z.abs() <= 4.0, "L_end[{name}] z = {z}");
    }
}

#[test]
fn vrjp_position_matches_euler() {
    let g = triangle();
    let phi = [1.0, 0.5, 2.0];
    let n = 10_000;
    let horizon = 1.0;
    let euler = Euler { dt: DT };
    let mut pos = ([0u64; 3], [0u64; 3]);
    let mut ell = (Vec::new(), Vec::new());
    for r in 0..n {
        let run = simulate_vrjp_timechanged(&g, &phi, 0, horizon, &mut stream(1, 3, 0, r)).unwrap();
        pos.0[run.path.end_position()] += 1;
        ell.0.push(run.path.local_times(horizon).unwrap()[1]);
        let e = euler.run(&g, Kind::Vrjp, &phi, 0, horizon, &mut stream(1, 3, 1, r));
        pos.1[e.end_site] += 1;
        ell.1.push(e.ell[1]);
    }
    let p = chi_square_two_sample(&pos.0, &pos.1);
    assert!(p >= 0.001, "position p = {p}, {pos:?}");
    let z = two_sample_z(&ell.0, &ell.1);
    assert!(z.abs() <= 4.0, "ℓ_a z = {z}");
}
