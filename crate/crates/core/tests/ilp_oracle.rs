//! ILP model, validator and exhaustive solver against independent checks.

mod common;

use common::{fixture, heuristic_solution, random_instance};
use migplace::cluster::HostSpec;
use migplace::ilp::{
    brute_force_solve, build_model, export_lp, single_pm_instance, validate, Family, IlpError, IlpInstance,
    ObjectiveMode, SearchCap, Solution, SolveMode,
};
use migplace::{PolicyKind, Profile, VmRequest};

fn load(name: &str) -> IlpInstance {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

#[test]
fn golden_lp_for_two_vm_instance() {
    let model = build_model(&load("ilp_two_vm.json")).unwrap();
    let lp = export_lp(&model, ObjectiveMode::Weighted { w1: 1.0, w2: 0.5, w3: 0.25 });
    assert_eq!(lp, std::fs::read_to_string(fixture("ilp_two_vm.lp")).unwrap());
}

#[test]
fn staged_exports_pin_earlier_objectives() {
    let model = build_model(&load("ilp_two_vm.json")).unwrap();
    let lp = export_lp(&model, ObjectiveMode::Hardware { acceptance: 3.0 });
    assert!(lp.starts_with("Minimize\n"));
    assert!(lp.contains(" fix_acceptance: x_0_0 + 2 x_1_0 = 3\n"), "{lp}");
    let lp = export_lp(&model, ObjectiveMode::Migration { acceptance: 3.0, hardware: 3.0 });
    assert!(lp.contains("fix_hardware: 1.5 phi_0 + 1.5 gamma_0_0 = 3\n"), "{lp}");
    assert!(lp.contains(" obj: m_1_0 + omega_1_0_0\n"), "{lp}");
}

#[test]
fn row_counts_follow_the_index_sets() {
    // n VMs, one PM with k GPUs: ordered VM pairs times GPUs for each
    // disjunction family.
    for (n, k) in [(1, 1), (2, 2), (3, 2), (4, 1)] {
        let profiles: Vec<Profile> = (0..n).map(|i| Profile::ALL[i % 6]).collect();
        let model = build_model(&single_pm_instance(&profiles, k)).unwrap();
        assert_eq!(model.constraint_count(Family::OrderBefore), n * (n - 1) * k);
        assert_eq!(model.constraint_count(Family::SingleHost), n);
        assert_eq!(model.constraint_count(Family::GpuOnHost), n * k);
        assert_eq!(model.constraint_count(Family::ActiveGpuUsed), k);
        assert_eq!(model.var_count("z"), n * k);
        assert_eq!(model.var_count("alpha"), n * (n - 1) * k);
    }
}

#[test]
fn oracle_solutions_validate_over_many_seeds() {
    for seed in 0..100 {
        let inst = random_instance(seed, 4, true);
        let sol = brute_force_solve(&inst, SolveMode::Lexicographic, SearchCap::default()).unwrap();
        assert_eq!(validate(&inst, &sol), vec![], "seed {seed}");
        assert_eq!(sol.objectives, sol.compute_objectives(&inst));
    }
}

#[test]
fn heuristics_never_beat_the_oracle() {
    for seed in 100..160 {
        let inst = random_instance(seed, 4, false);
        let best = brute_force_solve(&inst, SolveMode::Lexicographic, SearchCap::default()).unwrap();
        let gpus: usize = inst.pms.iter().map(|p| p.gpus.len()).sum();
        for kind in PolicyKind::ALL {
            if kind == PolicyKind::Grmu && gpus < 2 {
                continue;
            }
            let h = heuristic_solution(&inst, kind);
            assert_eq!(validate(&inst, &h), vec![], "seed {seed} {kind}");
            assert!(h.objectives.acceptance <= best.objectives.acceptance + 1e-9);
            if h.accepted_count() == inst.vms.len() {
                assert!(h.objectives.hardware >= best.objectives.hardware - 1e-9);
            }
        }
    }
}

#[test]
fn lexicographic_optimum_by_hand() {
    // Two 3g.20gb and one 4g.20gb on one PM with two GPUs: all three fit
    // (3g pair on one GPU, 4g on the other), using both GPUs.
    let inst = single_pm_instance(&[Profile::Mig3g20gb, Profile::Mig3g20gb, Profile::Mig4g20gb], 2);
    let sol = brute_force_solve(&inst, SolveMode::Lexicographic, SearchCap::default()).unwrap();
    assert_eq!(sol.accepted_count(), 3);
    assert_eq!(sol.objectives.hardware, 3.0);
    let g4 = sol.gpus.iter().find(|g| g.vm == 2).unwrap();
    assert_eq!(g4.start, 0);
    assert!(sol.gpus.iter().filter(|g| g.vm != 2).all(|g| g.gpu != g4.gpu));

    // Two 7g.40gb on one GPU: only one is accepted.
    let inst = single_pm_instance(&[Profile::Mig7g40gb, Profile::Mig7g40gb], 1);
    let sol = brute_force_solve(&inst, SolveMode::Lexicographic, SearchCap::default()).unwrap();
    assert_eq!(sol.accepted_count(), 1);
    assert_eq!(sol.objectives.hardware, 2.0);
}

#[test]
fn weighted_mode_can_trade_acceptance_for_hardware() {
    // Hardware weight above the acceptance gain: rejecting is better.
    let inst = single_pm_instance(&[Profile::Mig1g5gb], 1);
    let sol = brute_force_solve(&inst, SolveMode::Weighted { w1: 1.0, w2: 1.0, w3: 0.0 }, SearchCap::default()).unwrap();
    assert_eq!(sol.accepted_count(), 0);
    let sol = brute_force_solve(&inst, SolveMode::Weighted { w1: 3.0, w2: 1.0, w3: 0.0 }, SearchCap::default()).unwrap();
    assert_eq!(sol.accepted_count(), 1);
}

#[test]
fn migrations_only_break_hardware_ties() {
    // A costlier second PM: staying put is hardware-optimal and free.
    let mut inst = load("ilp_two_vm.json");
    let mut pm1 = HostSpec::a100("pm1", 1);
    pm1.weight = 5.0;
    inst.pms.push(pm1);
    let sol = brute_force_solve(&inst, SolveMode::Lexicographic, SearchCap::default()).unwrap();
    assert_eq!(sol.accepted_count(), 2);
    assert_eq!(sol.objectives.migration, 0.0);
    let vm1 = sol.gpus.iter().find(|g| g.vm == 1).unwrap();
    assert_eq!((vm1.pm, vm1.gpu), (0, 0));

    // A cheaper second PM wins on hardware (1 + 1 < 1.5 + 1.5), so VM 1
    // moves: one x pair and one y pair change, 4 units at weight 1.
    inst.pms[1].weight = 1.0;
    let sol = brute_force_solve(&inst, SolveMode::Lexicographic, SearchCap::default()).unwrap();
    assert_eq!(sol.objectives.hardware, 2.0);
    assert_eq!(sol.objectives.migration, 4.0);
    assert!(sol.gpus.iter().all(|g| g.pm == 1));
}

#[test]
fn oversize_instances_are_refused() {
    let profiles = [Profile::Mig1g5gb; 6];
    let err = brute_force_solve(&single_pm_instance(&profiles, 1), SolveMode::Lexicographic, SearchCap::default())
        .unwrap_err();
    assert!(matches!(err, IlpError::TooLarge { vms: 6, .. }), "{err}");
}

#[test]
fn small_big_m_is_rejected() {
    let mut inst = single_pm_instance(&[Profile::Mig1g5gb], 1);
    inst.big_m = 4;
    assert!(matches!(build_model(&inst), Err(IlpError::BigMTooSmall { big_m: 4, .. })));
}

#[test]
fn hand_broken_solutions_are_flagged() {
    let inst = IlpInstance::new(
        vec![VmRequest::new(0, Profile::Mig3g20gb, 0, 1), VmRequest::new(1, Profile::Mig1g10gb, 0, 1)],
        vec![HostSpec::a100("pm0", 1)],
    );
    let families = |s: &Solution| validate(&inst, s).into_iter().map(|v| v.family).collect::<Vec<_>>();
    assert!(families(&Solution::from_placements(&inst, &[Some((0, 0, 0)), Some((0, 0, 4))])).is_empty());
    // 1g.10gb at block 2 overlaps the 3g.20gb at 0..4.
    assert_eq!(families(&Solution::from_placements(&inst, &[Some((0, 0, 0)), Some((0, 0, 2))])), ["overlap"]);
    // Odd start for a two-block profile.
    assert_eq!(families(&Solution::from_placements(&inst, &[None, Some((0, 0, 3))])), ["alignment"]);
    // 3g.20gb may not start past block 4.
    assert!(families(&Solution::from_placements(&inst, &[Some((0, 0, 6)), None])).contains(&"start_limit"));
}
