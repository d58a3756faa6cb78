use dvlae_core::descriptors::{compute_structure_descriptors, DescriptorMatrix, SymmetryFunctionSet};
use dvlae_core::structures::{build_supercell, Structure};
use dvlae_testkit as tk;
use nalgebra::{Matrix3, Vector3};
use rand::Rng;

fn sfset() -> SymmetryFunctionSet {
    SymmetryFunctionSet::default_grid(&tk::ELEMENTS).unwrap()
}

fn max_abs_diff(a: &DescriptorMatrix, b: &DescriptorMatrix) -> f64 {
    let mut worst = 0.0f64;
    for (x, y) in a.blocks().iter().zip(b.blocks()) {
        assert_eq!(x.nrows(), y.nrows());
        for (u, v) in x.values().iter().zip(y.values()) {
            worst = worst.max((u - v).abs());
        }
    }
    worst
}

#[test]
fn rotation_and_translation_do_not_change_descriptors() {
    let set = sfset();
    let mut rng = tk::rng(21);
    for s in tk::random_structures(22, 20) {
        let rot = tk::random_rotation(&mut rng);
        let t = Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let a = compute_structure_descriptors(&s, &set).unwrap();
        let b = compute_structure_descriptors(&tk::rigidly_moved(&s, &rot, t), &set).unwrap();
        let diff = max_abs_diff(&a, &b);
        assert!(diff <= 1e-9, "{}: deviation {diff}", s.id());
    }
}

fn sorted_rows(m: &DescriptorMatrix) -> Vec<Vec<Vec<u64>>> {
    m.blocks()
        .iter()
        .map(|b| {
            let mut rows: Vec<Vec<u64>> = b.rows().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
            rows.sort();
            rows
        })
        .collect()
}

#[test]
fn atom_order_only_permutes_rows() {
    let set = sfset();
    let mut rng = tk::rng(23);
    for s in tk::random_structures(24, 20) {
        let shuffled = tk::shuffled(&s, &mut rng);
        let a = compute_structure_descriptors(&s, &set).unwrap();
        let b = compute_structure_descriptors(&shuffled, &set).unwrap();
        assert_eq!(sorted_rows(&a), sorted_rows(&b), "{}", s.id());
    }
}

#[test]
fn supercell_atoms_match_their_preimages() {
    let set = sfset();
    for s in tk::random_structures(25, 6) {
        let sc = build_supercell(&s, [2, 2, 2]).unwrap();
        let a = compute_structure_descriptors(&s, &set).unwrap();
        let b = compute_structure_descriptors(&sc, &set).unwrap();
        for (pb, sb) in a.blocks().iter().zip(b.blocks()) {
            assert_eq!(sb.nrows(), 8 * pb.nrows());
            for (r, &atom) in sb.atoms().iter().enumerate() {
                let pre = atom % s.len();
                let pr = pb.atoms().iter().position(|&x| x == pre).unwrap();
                for (u, v) in sb.row(r).iter().zip(pb.row(pr)) {
                    assert!((u - v).abs() <= 1e-9, "{} atom {atom}: {u} vs {v}", s.id());
                }
            }
        }
    }
}

#[test]
fn rows_follow_species_counts() {
    let set = sfset();
    for s in tk::random_structures(26, 10) {
        let m = compute_structure_descriptors(&s, &set).unwrap();
        for e in tk::ELEMENTS {
            assert_eq!(m.block(e).unwrap().nrows(), s.count_element(e));
            assert_eq!(m.block(e).unwrap().ncols(), 58);
        }
        assert!(m.blocks().iter().all(|b| b.values().iter().all(|v| v.is_finite())));
    }
}

#[test]
fn pure_iron_has_empty_hydrogen_block() {
    let s = Structure::new("bcc", Matrix3::identity() * 2.87, [true; 3], vec!["Fe".into(), "Fe".into()], vec![Vector3::zeros(), Vector3::repeat(1.435)]).unwrap();
    let m = compute_structure_descriptors(&s, &sfset()).unwrap();
    assert_eq!(m.block("H").unwrap().nrows(), 0);
    assert_eq!(m.block("Fe").unwrap().nrows(), 2);
    // both bcc sites are equivalent
    assert_eq!(m.block("Fe").unwrap().row(0), m.block("Fe").unwrap().row(1));
}
