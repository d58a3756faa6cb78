//! Synthetic corpora and brute-force oracles shared by the dvlae test suites.

use std::path::{Path, PathBuf};

use dvlae_core::descriptors::DescriptorMatrix;
use dvlae_core::fingerprint::HistogramSpec;
use dvlae_core::structures::{build_supercell, write_extxyz, Dataset, Structure};
use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const ELEMENTS: [&str; 2] = ["Fe", "H"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A randomly oriented triclinic cell with edges in [3, 6) Å and angles in
/// [65°, 115°), rejected until its volume is at least 40% of the box product.
pub fn random_cell(rng: &mut impl Rng) -> Matrix3<f64> {
    loop {
        let [a, b, c] = [0; 3].map(|_| rng.random_range(3.0..6.0));
        let [alpha, beta, gamma] = [0; 3].map(|_| rng.random_range(65f64..115.0).to_radians());
        let cx = c * beta.cos();
        let cy = c * (alpha.cos() - beta.cos() * gamma.cos()) / gamma.sin();
        let cz2 = c * c - cx * cx - cy * cy;
        if cz2 <= 0.0 {
            continue;
        }
        let cell = Matrix3::new(
            a, 0.0, 0.0,
            b * gamma.cos(), b * gamma.sin(), 0.0,
            cx, cy, cz2.sqrt(),
        );
        if cell.determinant() < 0.4 * a * b * c {
            continue;
        }
        let rot = random_rotation(rng);
        return cell * rot.matrix().transpose();
    }
}

pub fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    use std::f64::consts::PI;
    Rotation3::from_euler_angles(
        rng.random_range(-PI..PI),
        rng.random_range(-PI / 2.0..PI / 2.0),
        rng.random_range(-PI..PI),
    )
}

/// A periodic Fe/H structure with `natoms ≥ 2` atoms (at least one of each),
/// atoms at least 0.9 Å apart.
pub fn random_structure(rng: &mut impl Rng, id: &str, natoms: usize) -> Structure {
    assert!(natoms >= 2);
    let cell = random_cell(rng);
    let mut positions: Vec<Vector3<f64>> = Vec::with_capacity(natoms);
    while positions.len() < natoms {
        let f = Vector3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
        let p = cell.transpose() * f;
        let clash = positions.iter().any(|q| min_image_distance(&cell, &(p - q)) < 0.9);
        if !clash {
            positions.push(p);
        }
    }
    let species = (0..natoms)
        .map(|i| match i {
            0 => "Fe",
            1 => "H",
            _ => ELEMENTS[rng.random_range(0..2)],
        })
        .map(String::from)
        .collect();
    Structure::new(id, cell, [true; 3], species, positions).unwrap()
}

fn min_image_distance(cell: &Matrix3<f64>, d: &Vector3<f64>) -> f64 {
    let mut best = f64::INFINITY;
    for a in -1..=1 {
        for b in -1..=1 {
            for c in -1..=1 {
                let t = cell.transpose() * Vector3::new(a as f64, b as f64, c as f64);
                best = best.min((d + t).norm());
            }
        }
    }
    best
}

/// `n` random structures with 2–8 atoms, ids `rand#<i>`.
pub fn random_structures(seed: u64, n: usize) -> Vec<Structure> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let natoms = r.random_range(2..=8);
            random_structure(&mut r, &format!("rand#{i}"), natoms)
        })
        .collect()
}

/// Rotate cell and positions by `rot`, then translate the positions.
pub fn rigidly_moved(s: &Structure, rot: &Rotation3<f64>, translation: Vector3<f64>) -> Structure {
    let cell = s.cell() * rot.matrix().transpose();
    let positions = s.positions().iter().map(|p| rot * p + translation).collect();
    Structure::new(s.id(), cell, s.periodic(), s.species().to_vec(), positions)
        .unwrap()
        .with_tag(s.tag().map(String::from))
}

/// The same structure with its atoms listed in a random order.
pub fn shuffled(s: &Structure, rng: &mut impl Rng) -> Structure {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.shuffle(rng);
    let species = order.iter().map(|&i| s.species()[i].clone()).collect();
    let positions = order.iter().map(|&i| s.positions()[i]).collect();
    Structure::new(s.id(), *s.cell(), s.periodic(), species, positions)
        .unwrap()
        .with_tag(s.tag().map(String::from))
}

/// Two-atom CsCl-type FeH cell, edge 2.9 Å.
pub fn primitive_feh() -> Structure {
    Structure::new(
        "prim",
        Matrix3::from_diagonal_element(2.9),
        [true; 3],
        vec!["Fe".into(), "H".into()],
        vec![Vector3::zeros(), Vector3::new(1.45, 1.45, 1.45)],
    )
    .unwrap()
}

/// Every atom displaced by a uniform random vector with components in `±amplitude`.
pub fn rattled(s: &Structure, rng: &mut impl Rng, amplitude: f64, id: &str) -> Structure {
    let positions = s
        .positions()
        .iter()
        .map(|p| p + Vector3::from_fn(|_, _| rng.random_range(-amplitude..amplitude)))
        .collect();
    Structure::new(id, *s.cell(), s.periodic(), s.species().to_vec(), positions)
        .unwrap()
        .with_tag(s.tag().map(String::from))
}

/// Same structure under a new id.
pub fn renamed(s: &Structure, id: impl Into<String>) -> Structure {
    s.clone().with_id(id)
}

/// A deduplication corpus: `unique` random structures, each followed by
/// `copies` exact copies and one 2×1×1 supercell, all tagged with the family
/// index. Returns the dataset and the ids of the originals.
pub fn dedup_corpus(seed: u64, unique: usize, copies: usize) -> (Dataset, Vec<String>) {
    let mut out = Vec::new();
    let mut originals = Vec::new();
    for (u, s) in random_structures(seed, unique).into_iter().enumerate() {
        let s = s.with_id(format!("u{u}")).with_tag(Some(format!("family{u}")));
        originals.push(s.id().to_owned());
        let supercell = build_supercell(&s, [2, 1, 1]).unwrap();
        out.push(s.clone());
        for c in 0..copies {
            out.push(renamed(&s, format!("u{u}-copy{c}")));
        }
        out.push(supercell);
    }
    (Dataset::new(out).unwrap(), originals)
}

/// Isotropically rescale a structure (cell and positions) by `factor`.
pub fn scaled(s: &Structure, factor: f64, id: &str) -> Structure {
    let positions = s.positions().iter().map(|p| p * factor).collect();
    Structure::new(id, s.cell() * factor, s.periodic(), s.species().to_vec(), positions)
        .unwrap()
        .with_tag(s.tag().map(String::from))
}

/// Training set, prediction set, and the id of the one prediction that lies
/// far outside the training distribution (a compressed, rattled 2×2×2
/// supercell of the first training structure).
///
/// The prediction set holds `in_training` structures copied from the training
/// set, a few unseen random structures, and the outlier.
pub fn ood_corpus(seed: u64, training: usize, in_training: usize, unseen: usize) -> (Dataset, Dataset, String) {
    let train: Vec<Structure> = random_structures(seed, training)
        .into_iter()
        .map(|s| {
            let id = s.id().replace("rand", "train");
            s.with_id(id).with_tag(Some("train".into()))
        })
        .collect();
    let mut pred: Vec<Structure> = train[..in_training]
        .iter()
        .map(|s| s.clone().with_tag(Some("seen".into())))
        .collect();
    for (i, s) in random_structures(seed ^ 0x5eed, unseen).into_iter().enumerate() {
        pred.push(s.with_id(format!("new#{i}")).with_tag(Some("new".into())));
    }
    // compressed and rattled: many distinct environments outside the training ranges
    let big = build_supercell(&scaled(&train[0], 0.8, "outlier"), [2, 2, 2]).unwrap();
    let outlier = rattled(&big, &mut rng(seed ^ 0x0a7), 0.15, "outlier").with_tag(Some("outlier".into()));
    pred.push(outlier);
    (
        Dataset::new(train).unwrap(),
        Dataset::new(pred).unwrap(),
        "outlier".into(),
    )
}

/// `clusters` isotropic Gaussian blobs of `per_cluster` points in `dim`
/// dimensions with unit standard deviation; centers lie `separation` apart on
/// the coordinate axes. Returns `(vector, cluster label)` pairs.
pub fn gaussian_clusters(seed: u64, clusters: usize, per_cluster: usize, dim: usize, separation: f64) -> Vec<(Vec<f64>, usize)> {
    assert!(clusters <= dim);
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut out = Vec::with_capacity(clusters * per_cluster);
    for c in 0..clusters {
        for _ in 0..per_cluster {
            let v = (0..dim)
                .map(|k| normal.sample(&mut r) + if k == c { separation } else { 0.0 })
                .collect();
            out.push((v, c));
        }
    }
    out
}

/// One brute-force neighbor entry: `(j, shift, distance)`.
pub type OracleEntry = (usize, [i32; 3], f64);

/// Neighbors by direct replication of the unwrapped positions over a generous
/// block of images, with `shift` relative to the positions as given.
pub fn brute_force_neighbors(s: &Structure, cutoff: f64) -> Vec<Vec<OracleEntry>> {
    let cellt = s.cell().transpose();
    let inv = cellt.try_inverse().expect("invertible cell");
    // interplanar spacing of axis a is 1/|row a of the inverse|
    let max_frac = s
        .positions()
        .iter()
        .flat_map(|p| (inv * p).iter().map(|x| x.abs()).collect::<Vec<_>>())
        .fold(0.0f64, f64::max);
    let reach: Vec<i32> = (0..3)
        .map(|a| {
            if !s.periodic()[a] {
                return 0;
            }
            let spacing = 1.0 / inv.row(a).norm();
            (cutoff / spacing).ceil() as i32 + 2 * max_frac.ceil() as i32 + 1
        })
        .collect();

    let n = s.len();
    let mut out = vec![Vec::new(); n];
    for (i, list) in out.iter_mut().enumerate() {
        for j in 0..n {
            for a in -reach[0]..=reach[0] {
                for b in -reach[1]..=reach[1] {
                    for c in -reach[2]..=reach[2] {
                        let t = cellt * Vector3::new(a as f64, b as f64, c as f64);
                        let d = (s.positions()[j] + t - s.positions()[i]).norm();
                        if d > 0.0 && d < cutoff {
                            list.push((j, [a, b, c], d));
                        }
                    }
                }
            }
        }
        list.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    }
    out
}

/// Write structures as one extended-XYZ file plus a manifest listing it.
/// Returns the manifest path.
pub fn write_corpus<'a>(dir: &Path, name: &str, structures: impl IntoIterator<Item = &'a Structure>) -> PathBuf {
    let xyz = format!("{name}.xyz");
    std::fs::write(dir.join(&xyz), write_extxyz(structures)).unwrap();
    let manifest = dir.join(format!("{name}.txt"));
    std::fs::write(&manifest, format!("{xyz}\n")).unwrap();
    manifest
}

/// Smallest distance, as a fraction of the column range, between any descriptor
/// value and an interior bin edge of `spec`.
pub fn edge_margin<'a>(spec: &HistogramSpec, matrices: impl IntoIterator<Item = &'a DescriptorMatrix>) -> f64 {
    let k = spec.bins() as f64;
    let mut margin = f64::INFINITY;
    for m in matrices {
        let mut col = 0;
        for block in m.blocks() {
            for c in 0..block.ncols() {
                let edges = &spec.columns()[col + c];
                for v in block.column(c) {
                    let t = (v - edges.lo) / (edges.hi - edges.lo) * k;
                    let nearest = t.round().clamp(1.0, k - 1.0);
                    margin = margin.min((t - nearest).abs() / k);
                }
            }
            col += block.ncols();
        }
    }
    margin
}
