use pamlab::estimator::stats::{ks_two_sample, MeanEstimate};
use pamlab::kernel::{heat_kernel, relative_error};
use pamlab::noise::{GridSpec, NoiseStream};
use pamlab::solver::{DirectSolver, RayGrid, RaySolver};
use proptest::prelude::*;

fn direct_grid() -> GridSpec {
    GridSpec::new(0.05, 1e-3, 8.0, 1.0).unwrap()
}

#[test]
fn noisy_mean_of_u_is_the_heat_flow() {
    let grid = direct_grid();
    let solver = DirectSolver::new(&grid).unwrap();
    let (det, _) = solver.run(None).unwrap();
    let c = grid.center_cell();
    let target = det.values[c];
    assert!(relative_error(target, heat_kernel(1.0, 0.0).unwrap()) < 0.01);
    let u: Vec<f64> = (0..600)
        .map(|r| solver.run(Some(&NoiseStream::new(3, r))).unwrap().0.values[c])
        .collect();
    let e = MeanEstimate::of(&u).unwrap();
    assert!(e.z(target).abs() <= 3.0, "mean {} ± {} vs {target}", e.mean, e.standard_error);
}

#[test]
fn direct_and_ray_solvers_agree_in_law() {
    let n = 1_000;
    let direct = DirectSolver::new(&direct_grid()).unwrap();
    let a: Vec<f64> = (0..n)
        .map(|r| direct.run(Some(&NoiseStream::new(5, r))).unwrap().1.log_at(0.0).unwrap())
        .collect();
    let ray = RaySolver::new(&RayGrid::new(0.05, 1.0, 0.0, 0.0).unwrap()).unwrap();
    let b: Vec<f64> = (0..n)
        .map(|r| ray.run(Some(&NoiseStream::new(6, r))).unwrap().log_at(0.0).unwrap())
        .collect();
    let ks = ks_two_sample(&a, &b).unwrap();
    assert!(!ks.rejects(1e-3), "D = {}, p = {}", ks.statistic, ks.p_value);
}

#[test]
fn ray_field_has_mean_one_across_the_window() {
    let ray = RaySolver::new(&RayGrid::new(0.1, 1.0, 0.0, 3.0).unwrap()).unwrap();
    let fields: Vec<_> = (0..2_000).map(|r| ray.run(Some(&NoiseStream::new(8, r))).unwrap()).collect();
    for x in [-3.0, 0.0, 1.5, 3.0] {
        let u: Vec<f64> = fields.iter().map(|f| f.value_at(x).unwrap()).collect();
        let e = MeanEstimate::of(&u).unwrap();
        assert!(e.z(1.0).abs() <= 3.5, "x = {x}: {} ± {}", e.mean, e.standard_error);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noise_off_ray_flow_is_identically_one(
        spacing in 0.05f64..0.5,
        center in -10.0f64..10.0,
        half_width in 0.0f64..3.0,
        resolution in 0.2f64..0.9,
        margin in 1.0f64..6.0,
    ) {
        let mut g = RayGrid::new(spacing, 1.5, center, half_width).unwrap();
        g.resolution = resolution;
        g.margin = margin;
        let f = RaySolver::new(&g).unwrap().run(None).unwrap();
        prop_assert!(f.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        prop_assert_eq!(f.len(), 2 * g.window_half_cells() + 1);
    }

    #[test]
    fn direct_fields_stay_positive(seed in 0u64..1_000) {
        let grid = GridSpec::new(0.1, 5e-3, 6.0, 0.5).unwrap();
        let (f, _) = DirectSolver::new(&grid).unwrap().run(Some(&NoiseStream::new(seed, 0))).unwrap();
        prop_assert!(f.values.iter().all(|&v| v > 0.0 && v.is_finite()));
    }
}
