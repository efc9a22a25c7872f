use convexred::rng;
use convexred::topology::{antipodal_search, phi_map, random_cover_witness, AntipodalOptions, Assignment};

#[test]
fn low_target_dimension_always_collides() {
    for i in 0..20u64 {
        let d = 2 + (i % 2) as usize;
        let k = 1 + (i as usize / 2) % d;
        let w = random_cover_witness(d, 0.5, Assignment::Gaussian { k }, 100 + i).unwrap();
        let opts = AntipodalOptions { seed: i, ..AntipodalOptions::default() };
        let res = antipodal_search(|x| Ok(phi_map(&w, x)?.1), d + 1, &opts).unwrap();
        assert!(res.found, "instance {i} (d = {d}, k = {k}): best g = {}", res.best.g);
    }
}

#[test]
fn identity_assignment_has_no_near_collision() {
    for i in 0..20u64 {
        let d = 2 + (i % 2) as usize;
        let w = random_cover_witness(d, 0.3, Assignment::Identity, 200 + i).unwrap();
        let opts = AntipodalOptions { seed: i, tol: 1.0, ..AntipodalOptions::default() };
        let res = antipodal_search(|x| Ok(phi_map(&w, x)?.1), d + 1, &opts).unwrap();
        assert!(!res.found, "instance {i}: g = {}", res.best.g);
        assert!(res.best.g >= 2.0 - 2.0 * w.delta());
        let mut r = rng::seeded(i);
        for _ in 0..1000 {
            let x = rng::unit_vector(&mut r, d + 1);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let g = convexred::vecops::dist(&phi_map(&w, &x).unwrap().1, &phi_map(&w, &neg).unwrap().1);
            assert!(g >= 1.0);
        }
    }
}
