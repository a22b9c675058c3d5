//! Grid-refinement behaviour of the finite-volume solver.

use latgas_core::ensembles::EnsembleTable;
use latgas_core::pde::PdeState;

fn solve_step_ic(m: usize, t_end: f64) -> [Vec<f64>; 3] {
    let table = EnsembleTable::new(1.0, 2.0, 0.0).unwrap();
    let mut state =
        PdeState::new(table, m, &|region, _| if region == 0 { 0.8 } else { 0.2 }).unwrap();
    state.run_to(t_end, &[]).unwrap();
    state.state()
}

/// Averages pairs of fine cells down to the coarse grid.
fn restrict(fine: &[f64]) -> Vec<f64> {
    fine.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

fn l1_distance(a: &[Vec<f64>; 3], b: &[Vec<f64>; 3], du: f64) -> f64 {
    let mut acc = 0.0;
    for region in 0..3 {
        for (x, y) in a[region].iter().zip(&b[region]) {
            acc += (x - y).abs() * du;
        }
    }
    acc
}

#[test]
fn self_convergence_is_at_least_first_order() {
    let t = 0.3;
    let coarse = solve_step_ic(75, t);
    let medium = solve_step_ic(150, t);
    let fine = solve_step_ic(300, t);

    let medium_on_coarse = [
        restrict(&medium[0]),
        restrict(&medium[1]),
        restrict(&medium[2]),
    ];
    let fine_on_medium = [restrict(&fine[0]), restrict(&fine[1]), restrict(&fine[2])];

    let e1 = l1_distance(&coarse, &medium_on_coarse, 1.0 / 75.0);
    let e2 = l1_distance(&medium, &fine_on_medium, 1.0 / 150.0);
    assert!(
        e1 / e2 >= 1.8,
        "self-convergence ratio {} (errors {e1}, {e2})",
        e1 / e2
    );
}
