use manhattan_core::formulas::{mean_coefficient, msd};
use manhattan_core::lattice::{Dimension, OrientationRule};
use manhattan_core::walk_engine::{simulate, SimConfig};

fn dim(d: usize) -> Dimension {
    Dimension::new(d).unwrap()
}

#[test]
fn estimates_within_five_standard_errors() {
    for (d, seed) in [(2usize, 101u64), (3, 202), (5, 303)] {
        let mut cfg = SimConfig::new(OrientationRule::manhattan(dim(d)), 24, 40_000, seed);
        cfg.record_stride = 4;
        let m = simulate(&cfg).unwrap();
        assert_eq!(m.records.len(), 7);
        for rec in &m.records {
            let z = m.msd_z(rec, &msd(dim(d), rec.n));
            assert!(z.abs() <= 5.0, "d={d} n={} msd z={z}", rec.n);
            for zc in m.mean_z(rec, &mean_coefficient(dim(d), rec.n)) {
                assert!(zc.abs() <= 5.0, "d={d} n={} mean z={zc}", rec.n);
            }
            assert!(m.mean_symmetry_z(rec) <= 5.0);
        }
    }
}

#[test]
fn invariants_checked_on_every_step() {
    let cfg = SimConfig::new(OrientationRule::manhattan(dim(4)), 50, 2_000, 5);
    assert!(cfg.check_invariants);
    let m = simulate(&cfg).unwrap();
    assert_eq!(m.steps_checked, 50 * 2_000);
    let iid = SimConfig::new(OrientationRule::iid_coin(dim(3), 9), 30, 500, 5);
    assert_eq!(simulate(&iid).unwrap().steps_checked, 30 * 500);
}

#[test]
fn same_seed_same_moments() {
    let mut cfg = SimConfig::new(OrientationRule::iid_coin(dim(3), 4), 40, 10_000, 8);
    cfg.record_stride = 10;
    cfg.check_invariants = false;
    assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
    cfg.seed = 9;
    let other = simulate(&cfg).unwrap();
    cfg.seed = 8;
    assert_ne!(simulate(&cfg).unwrap(), other);
}
