use causal_rules::{classify_structure, CiConfig};
use numkit::derive_seed;
use semgen::{generate_structure_dataset, StructureKind};

fn main() {
    for kind in [
        StructureKind::CauseOnly,
        StructureKind::ChildOnly,
        StructureKind::CauseBothShifted,
        StructureKind::ChildBothShifted,
    ] {
        let mut hits = 0;
        let seeds = 15u64;
        for seed in 0..seeds {
            let s = generate_structure_dataset(kind, 3, 5000, derive_seed(9000, seed * 10 + 1));
            let cfg = CiConfig::default().with_seed(derive_seed(31, seed));
            let v = classify_structure(&s.xi, &s.y, &s.env, &cfg).unwrap();
            if v.structure() == Some(kind) {
                hits += 1;
            } else {
                let tail = v.evidence.last().unwrap();
                println!("  miss {kind} s{seed}: {:?} [{} => {:?}]", v.tag, tail.check, tail.outcome);
            }
        }
        println!("{kind}: {hits}/{seeds}");
    }
}
