use jsplit::noise::sample_block;
use jsplit::sim::{forward_orbit, reverse_orbit};
use jsplit::transport::{wasserstein1, EmpiricalMeasure, Provenance};
use jsplit::{MapFamily, PointCloud};

/// Laws of `Z_n(x0)` and of the reverse composition at step `n`, each from
/// `replicas` independent noise streams.
fn step_laws(fam: &MapFamily, x0: &[f64], n: usize, replicas: usize) -> (EmpiricalMeasure, EmpiricalMeasure) {
    let mut fwd = PointCloud::with_capacity(fam.dim(), replicas);
    let mut rev = PointCloud::with_capacity(fam.dim(), replicas);
    for r in 0..replicas as u64 {
        let a = sample_block(fam.noise(), 21, r, n).unwrap();
        let b = sample_block(fam.noise(), 22, r, n).unwrap();
        fwd.push(forward_orbit(fam, &a, x0).unwrap().positions.get(n));
        rev.push(reverse_orbit(fam, &b, x0, None).unwrap().positions.get(n));
    }
    (
        EmpiricalMeasure::uniform(fwd, Provenance::User).unwrap(),
        EmpiricalMeasure::uniform(rev, Provenance::User).unwrap(),
    )
}

#[test]
fn forward_and_reverse_orbits_share_their_law() {
    let fam = MapFamily::builtin("cantor1d").unwrap();
    let replicas = 2000;
    let floor = 3.0 / (replicas as f64).sqrt();
    for x0 in [0.0, 0.5, 1.0] {
        for n in [1, 3, 6, 10] {
            let (f, r) = step_laws(&fam, &[x0], n, replicas);
            let d = wasserstein1(&f, &r).unwrap().distance;
            assert!(d <= floor, "x0={x0} n={n}: W1 {d} > {floor}");
        }
    }
}
