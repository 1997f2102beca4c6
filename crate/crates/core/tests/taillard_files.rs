use std::path::PathBuf;

use flowbal_core::taillard::{taillard_instance, taillard_lower_bound, TAILLARD_20X20};
use flowbal_core::{parse_taillard_named, solve_sequential, Permutation};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/taillard")
}

#[test]
fn shipped_files_match_the_generator() {
    for (name, seed, ub, lb) in TAILLARD_20X20 {
        let text = std::fs::read_to_string(data_dir().join(format!("{name}.txt"))).unwrap();
        let insts = parse_taillard_named(&text, name).unwrap();
        assert_eq!(insts.len(), 1);
        let inst = &insts[0];
        assert_eq!((inst.jobs(), inst.machines()), (20, 20));
        let p = inst.published();
        assert_eq!(p.seed, Some(seed));
        assert_eq!(p.upper_bound, Some(ub));
        assert_eq!(p.lower_bound, Some(lb));

        let regenerated = taillard_instance(name, 20, 20, seed);
        assert!(inst.rows().eq(regenerated.rows()), "{name} differs from its seed");
        // the header bound is reproducible from the matrix itself
        assert_eq!(taillard_lower_bound(inst), lb, "{name}");
    }
}

#[test]
fn budgeted_solves_stay_above_the_lower_bound() {
    for (name, ..) in TAILLARD_20X20.iter().take(3) {
        let text = std::fs::read_to_string(data_dir().join(format!("{name}.txt"))).unwrap();
        let inst = &parse_taillard_named(&text, name).unwrap()[0];
        let out = solve_sequential(inst, None, Some(20_000));
        assert!(!out.complete);
        let perm: Permutation = out.best.unwrap();
        perm.validate_complete(20).unwrap();
        assert!(out.makespan >= inst.published().lower_bound.unwrap());
    }
}
