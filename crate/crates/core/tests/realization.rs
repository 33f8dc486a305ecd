use pentalab::curve::CurveSpec;
use pentalab::realization::{check_34, mari_beffa_family, search_34, SearchState};

fn probes(offset: u64) -> Vec<CurveSpec> {
    (1..=3).map(|s| CurveSpec::random(3, s + offset)).collect()
}

#[test]
fn verdicts_agree_across_probe_sets() {
    let (good, _) = mari_beffa_family(-2.0, 3.0, -5.0);
    let mut bad = good.clone();
    bad.groups[1][2] += 0.05;
    for offset in [0, 10, 20] {
        assert!(check_34(&good, &probes(offset), 0.9).unwrap().passes(1e-4, 1e-3));
        let r = check_34(&bad, &probes(offset), 0.9).unwrap();
        assert!(!r.passes(1e-4, 1e-3));
        // unequal σ shows up as a nonzero low-order diagonal coefficient
        assert!(!r.sigma_equal && r.g1_norm.max(r.g2_norm) > 1e-3);
    }
}

#[test]
fn search_stays_at_a_solution() {
    let (seed, _) = mari_beffa_family(-2.0, 3.0, -5.0);
    let out = search_34(&seed, &probes(0), 0.4, 5, None).unwrap();
    assert!(out.converged && out.iterations == 0);
    assert_eq!(out.report.chi, check_34(&seed, &probes(0), 0.4).unwrap().chi);
}

#[test]
fn search_returns_from_a_perturbed_seed_and_checkpoints() {
    let (mut seed, _) = mari_beffa_family(-2.0, 3.0, -5.0);
    seed.groups[0][1] += 0.02;
    let path = std::env::temp_dir().join(format!("pentalab-search-{}.json", std::process::id()));
    let _ = std::fs::remove_file(&path);
    let out = search_34(&seed, &probes(0), 0.4, 60, Some(&path)).unwrap();
    assert!(out.report.objective() <= 1e-3 && out.report.g3_match <= 1e-3, "objective {}", out.report.objective());
    let state: SearchState = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(state.iteration, out.iterations);
    // resuming from the checkpoint does no further work
    let again = search_34(&seed, &probes(0), 0.4, 60, Some(&path)).unwrap();
    assert_eq!(again.iterations, out.iterations);
    std::fs::remove_file(&path).unwrap();
}
