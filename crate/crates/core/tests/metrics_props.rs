use offsetopt::metrics::{chamfer, f_score, normal_metrics, MetricsReport, Order};
use offsetopt::sampling::SampledSurface;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type P = [f64; 3];

fn d2(a: P, b: P) -> f64 {
    (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
}

/// Index of the nearest point of `to`; first index on ties.
fn nn(p: P, to: &[P]) -> usize {
    let mut best = 0;
    for j in 1..to.len() {
        if d2(p, to[j]) < d2(p, to[best]) {
            best = j;
        }
    }
    best
}

struct Oracle {
    cd1: f64,
    cd2: f64,
    f1: f64,
    nc: f64,
    nr: f64,
}

fn oracle(a: &SampledSurface, b: &SampledSurface, tau: f64) -> Oracle {
    let dir = |x: &SampledSurface, y: &SampledSurface| {
        let (mut s1, mut s2, mut hit, mut cos, mut ang) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, p) in x.points.iter().enumerate() {
            let j = nn(*p, &y.points);
            let d = d2(*p, y.points[j]);
            s1 += d.sqrt();
            s2 += d;
            if d.sqrt() <= tau {
                hit += 1.0;
            }
            let n = x.normals[i];
            let m = y.normals[j];
            let dot = (n[0] * m[0] + n[1] * m[1] + n[2] * m[2]).abs();
            let cr = [n[1] * m[2] - n[2] * m[1], n[2] * m[0] - n[0] * m[2], n[0] * m[1] - n[1] * m[0]];
            let theta = d2(cr, [0.0; 3]).sqrt().atan2(dot);
            cos += if theta >= std::f64::consts::FRAC_PI_2 { 0.0 } else { theta.cos() };
            ang += theta.to_degrees();
        }
        let k = x.points.len() as f64;
        (s1 / k, s2 / k, hit / k, cos / k, ang / k)
    };
    let (a1, a2, ah, ac, aa) = dir(a, b);
    let (b1, b2, bh, bc, ba) = dir(b, a);
    Oracle {
        cd1: 0.5 * (a1 + b1),
        cd2: 0.5 * (a2 + b2),
        f1: if ah + bh == 0.0 { 0.0 } else { 2.0 * ah * bh / (ah + bh) },
        nc: 0.5 * (ac + bc),
        nr: 0.5 * (aa + ba),
    }
}

fn random_surface(n: usize, rng: &mut ChaCha8Rng) -> SampledSurface {
    let points: Vec<P> = (0..n).map(|_| [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0))).collect();
    let normals = (0..n)
        .map(|_| {
            let v: P = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
            let l = d2(v, [0.0; 3]).sqrt().max(1e-9);
            v.map(|c| c / l)
        })
        .collect();
    SampledSurface { points, normals, faces: vec![0; n] }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn accelerated_metrics_equal_quadratic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let (na, nb) = (rng.gen_range(1..=512), rng.gen_range(1..=512));
        let a = random_surface(na, &mut rng);
        let b = random_surface(nb, &mut rng);
        let tau = rng.gen_range(0.01..0.3);
        let o = oracle(&a, &b, tau);
        let (nc, nr) = normal_metrics(&a, &b).unwrap();
        assert!(close(chamfer(&a.points, &b.points, Order::L1).unwrap(), o.cd1, 1e-9), "case {case}");
        assert!(close(chamfer(&a.points, &b.points, Order::L2).unwrap(), o.cd2, 1e-9), "case {case}");
        assert!(close(f_score(&a.points, &b.points, tau).unwrap(), o.f1, 1e-9), "case {case}");
        assert!(close(nc, o.nc, 1e-9) && close(nr, o.nr, 1e-9), "case {case}");
    }
}

#[test]
fn identical_sets_score_perfectly() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_surface(300, &mut rng);
    assert_eq!(chamfer(&a.points, &a.points, Order::L1).unwrap(), 0.0);
    assert_eq!(chamfer(&a.points, &a.points, Order::L2).unwrap(), 0.0);
    assert_eq!(f_score(&a.points, &a.points, 1e-6).unwrap(), 1.0);
    let (nc, nr) = normal_metrics(&a, &a).unwrap();
    assert_eq!((nc, nr), (1.0, 0.0));
}

#[test]
fn report_columns_use_the_usual_scales() {
    let r = MetricsReport { cd1: 0.01, cd2: 1e-5, f1: 0.5, nc: 0.9, nr: 10.0, ecd1: 0.02, ef1: 0.25 };
    assert_eq!(r.scaled(), [1.0, 1.0, 0.5, 0.9, 10.0, 2.0, 0.25]);
    assert!(r.to_csv().starts_with("CD1(x1e2),CD2(x1e5),F1,NC,NR(deg),ECD1(x1e2),EF1\n"));
}

fn rotation(axis: P, angle: f64) -> [[f64; 3]; 3] {
    let l = d2(axis, [0.0; 3]).sqrt();
    let [x, y, z] = axis.map(|c| c / l);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn apply(r: &[[f64; 3]; 3], p: P) -> P {
    [0, 1, 2].map(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chamfer_and_f_score_are_symmetric(seed in 0u64..10_000, tau in 0.01f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_surface(80, &mut rng), random_surface(120, &mut rng));
        for o in [Order::L1, Order::L2] {
            prop_assert_eq!(chamfer(&a.points, &b.points, o).unwrap(), chamfer(&b.points, &a.points, o).unwrap());
        }
        prop_assert_eq!(f_score(&a.points, &b.points, tau).unwrap(), f_score(&b.points, &a.points, tau).unwrap());
    }

    #[test]
    fn shared_rigid_motion_changes_nothing(
        seed in 0u64..10_000,
        axis in prop::array::uniform3(0.1f64..1.0),
        angle in 0.0f64..6.28,
        t in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_surface(100, &mut rng), random_surface(90, &mut rng));
        let r = rotation(axis, angle);
        let mv = |s: &SampledSurface| SampledSurface {
            points: s.points.iter().map(|p| { let q = apply(&r, *p); [0, 1, 2].map(|i| q[i] + t[i]) }).collect(),
            normals: s.normals.iter().map(|n| apply(&r, *n)).collect(),
            faces: s.faces.clone(),
        };
        let (ma, mb) = (mv(&a), mv(&b));
        for o in [Order::L1, Order::L2] {
            prop_assert!(close(chamfer(&a.points, &b.points, o).unwrap(), chamfer(&ma.points, &mb.points, o).unwrap(), 1e-9));
        }
        prop_assert!(close(f_score(&a.points, &b.points, 0.2).unwrap(), f_score(&ma.points, &mb.points, 0.2).unwrap(), 1e-9));
        let (x, y) = (normal_metrics(&a, &b).unwrap(), normal_metrics(&ma, &mb).unwrap());
        prop_assert!(close(x.0, y.0, 1e-9));
        prop_assert!((x.1 - y.1).abs() <= 1e-6);
    }

    #[test]
    fn chamfer_scales_with_the_data(seed in 0u64..10_000, s in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_surface(70, &mut rng), random_surface(70, &mut rng));
        let sc = |v: &[P]| -> Vec<P> { v.iter().map(|p| p.map(|c| c * s)).collect() };
        let (sa, sb) = (sc(&a.points), sc(&b.points));
        prop_assert!(close(chamfer(&sa, &sb, Order::L1).unwrap(), s * chamfer(&a.points, &b.points, Order::L1).unwrap(), 1e-9));
        prop_assert!(close(chamfer(&sa, &sb, Order::L2).unwrap(), s * s * chamfer(&a.points, &b.points, Order::L2).unwrap(), 1e-9));
    }
}
