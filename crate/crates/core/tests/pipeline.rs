use hydrec::assembly::{assemble, compare, Region};
use hydrec::numerics::{PhysicalConstants, SpatialGrid, TimeNodes};
use hydrec::potentials::PotentialModel;
use hydrec::reconstruction::{build_pyramid, ReconstructionOptions};
use hydrec::simulator::{exact_density_matrix, make_gaussian_state, probability_density, sample_evolution, OffDiagonalGrid};
use proptest::prelude::*;

fn densities(
    sigma: f64,
    x0: f64,
    k0: f64,
    model: &PotentialModel,
    nodes: &TimeNodes,
) -> (Vec<hydrec::numerics::GridField>, Vec<hydrec::simulator::WaveFunction>) {
    let grid = SpatialGrid::new(-10.0, 10.0, 512).unwrap();
    let psi = make_gaussian_state(sigma, x0, k0, grid).unwrap();
    let states = sample_evolution(&psi, model, &PhysicalConstants::default(), nodes, 10).unwrap();
    (states.iter().map(probability_density).collect(), states)
}

#[test]
fn harmonic_gaussian_round_trip_near_the_diagonal() {
    let model = PotentialModel::Harmonic { omega: 1.0 };
    let nodes = TimeNodes::new(0.2, 0.02, 7).unwrap();
    let (records, states) = densities(0.8, 0.5, 1.0, &model, &nodes);
    let constants = PhysicalConstants::default();
    let pyramid = build_pyramid(&records, &nodes, &model, &constants, 6, &ReconstructionOptions::default()).unwrap();

    let y_grid = OffDiagonalGrid::from_extent(0.3, 31).unwrap();
    let rec = assemble(&pyramid.central_fields(), y_grid, constants.hbar()).unwrap();
    let exact = exact_density_matrix(&states[pyramid.central_node()], y_grid);
    let report = compare(rec.values(), &exact, Region { x_max: 3.0, y_max: 0.3 }, None).unwrap();
    assert!(report.sup_error < 5e-3, "{report:?}");
    assert_eq!(report.diagonal_mismatch, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // Free motion conserves ⟨p⟩ = ħk₀, and ∫f₁ dx is ⟨p⟩ times the norm.
    #[test]
    fn first_moment_integrates_to_mean_momentum(sigma in 0.5f64..0.9, x0 in -0.5f64..0.5, k0 in -1.5f64..1.5) {
        let nodes = TimeNodes::new(0.0, 0.01, 5).unwrap();
        let model = PotentialModel::Free;
        let (records, _) = densities(sigma, x0, k0, &model, &nodes);
        let pyramid = build_pyramid(
            &records, &nodes, &model, &PhysicalConstants::default(), 1, &ReconstructionOptions::default(),
        ).unwrap();
        let f = pyramid.central_fields();
        let mean_p = f[1].integral() / f[0].integral();
        prop_assert!((mean_p - k0).abs() < 1e-4, "⟨p⟩ = {} vs {}", mean_p, k0);
    }
}
