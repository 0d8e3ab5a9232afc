use shockstab::entropy_functionals::{
    compute_budget, compute_y, localized_functionals, partition_phi, truncate, ContractionMonitor, Snapshot,
};
use shockstab::gas_core::{GasModel, State};
use shockstab::ns_solver::Grid;
use shockstab::poincare_check::rdelta_margin;
use shockstab::riemann::WaveFan;
use shockstab::simulation::{perturbed_composite, Bump, CoupledRun};
use shockstab::wave_profiles::CompositeWave;
use shockstab::weights_shifts::{ShiftState, WeightPair};

fn setup() -> (WaveFan, CompositeWave, WeightPair) {
    let fan = WaveFan::build(State { v: 1.0, u: 0.0 }, 0.2, 0.2, &GasModel::shallow_water()).unwrap();
    let wave = CompositeWave::from_fan(&fan, 0.01).unwrap();
    let w = WeightPair::new(&fan, 0.2).unwrap();
    (fan, wave, w)
}

#[test]
fn unperturbed_wave_has_only_interaction_terms() {
    let (fan, wave, w) = setup();
    let grid = Grid::new(-150.0, 150.0, 1500).unwrap();
    let f = perturbed_composite(grid, &wave, &[]).unwrap();
    let sh = ShiftState::new(&fan);
    let r = compute_budget(&Snapshot::new(&f, &wave, &w, &sh), 0.05).unwrap();
    assert_eq!(r.entropy, 0.0);
    assert_eq!((r.y1, r.y2), (0.0, 0.0));
    for g in r.good_terms() {
        assert_eq!(g, 0.0);
    }
    assert_eq!(r.b1, [0.0, 0.0]);
}

#[test]
fn truncation_is_identity_for_small_perturbations() {
    let (fan, wave, w) = setup();
    let grid = Grid::new(-100.0, 100.0, 1000).unwrap();
    let f = perturbed_composite(grid, &wave, &[Bump { center: 0.0, width: 2.0, amp_v: 1e-3, amp_h: 0.0 }]).unwrap();
    let sh = ShiftState::new(&fan);
    let s = Snapshot::new(&f, &wave, &w, &sh);
    let t = truncate(&s, 0.05).unwrap();
    assert!(t.omega.iter().all(|&b| b));
    assert_eq!(t.bar_v, f.v);
}

#[test]
fn localized_good_terms_are_nonnegative() {
    let (fan, wave, w) = setup();
    let grid = Grid::new(-100.0, 100.0, 2000).unwrap();
    let f = perturbed_composite(grid, &wave, &[Bump { center: 0.0, width: 4.0, amp_v: 0.01, amp_h: 0.0 }]).unwrap();
    let mut sh = ShiftState::new(&fan);
    sh.t = 5.0;
    sh.z1 = -1.0;
    sh.z2 = 1.0;
    let s = Snapshot::new(&f, &wave, &w, &sh);
    let t = truncate(&s, 0.05).unwrap();
    let part = partition_phi(&sh).unwrap();
    let loc = localized_functionals(&s, &t, &part).unwrap();
    for (i, l) in loc.iter().enumerate() {
        assert!(l.g2 >= 0.0 && l.d >= 0.0, "family {}", i + 1);
        assert!(rdelta_margin(l, 0.2, 0.2, 0.01).unwrap().is_finite());
    }
}

#[test]
fn budget_identity_residual_is_small_along_a_run() {
    let (fan, wave, _) = setup();
    let grid = Grid::new(-150.0, 150.0, 1500).unwrap();
    let f = perturbed_composite(grid, &wave, &[Bump { center: 0.0, width: 3.0, amp_v: 0.05, amp_h: 0.05 }]).unwrap();
    let mut run = CoupledRun::new(fan, wave, f, 0.2, 0.05).unwrap();
    let mut mon = ContractionMonitor::new();
    run.run_fixed(0.5, 250, |rec, _| {
        mon.push(&rec.report, rec.rates.dx1, rec.rates.dx2);
        Ok(())
    })
    .unwrap();
    let s = Snapshot::new(&run.field, &run.wave, &run.weights, &run.shifts);
    let (y1, y2) = compute_y(&s).unwrap();
    assert!(y1.is_finite() && y2.is_finite());
    // Residual relative to the size of the entropy rate.
    assert!(mon.max_residual() < 1e-3 * mon.ledger_constant().max(1e-3), "{}", mon.max_residual());
}
