use intervaldyn::symbolic::kneading;
use intervaldyn::{make_family, FamilyId};

/// Left preimages of `1/2` under `a·x(1−x)` with the first time they hit it,
/// by explicit inverse branches.
fn left_precritical(a: f64, depth: usize) -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    let mut level = vec![0.5];
    for n in 1..=depth {
        let mut next = Vec::new();
        for y in level {
            if y > a / 4.0 {
                continue;
            }
            let r = (1.0 - 4.0 * y / a).max(0.0).sqrt();
            next.push((1.0 - r) / 2.0);
            next.push((1.0 + r) / 2.0);
        }
        out.extend(next.iter().filter(|&&x| x < 0.5).map(|&x| (x, n)));
        level = next;
    }
    out
}

/// Closest precritical points from the left: the records of first-hit time
/// when sweeping away from `c`.
fn oracle_z(a: f64, depth: usize) -> Vec<(f64, usize)> {
    let mut pts = left_precritical(a, depth);
    pts.sort_by(|p, q| q.0.total_cmp(&p.0));
    let mut best = usize::MAX;
    let mut z = Vec::new();
    for (x, n) in pts {
        if n < best {
            best = n;
            z.push((x, n));
        }
    }
    z.reverse();
    z
}

#[test]
fn tent2_closest_precritical_points_are_dyadic() {
    let map = make_family(FamilyId::Tent, Some(2.0)).unwrap();
    let kd = kneading(&map, 10).unwrap();
    for k in 0..=10 {
        assert_eq!(kd.s[k], k + 1);
        assert!((kd.z[k] - (0.5 - 0.5f64.powi(k as i32 + 2))).abs() < 1e-15);
        assert!((kd.zhat[k] - (0.5 + 0.5f64.powi(k as i32 + 2))).abs() < 1e-15);
    }
}

#[test]
fn logistic_cutting_times_match_inverse_branch_enumeration() {
    for a in [3.7, 3.83, 3.9, 4.0] {
        let map = make_family(FamilyId::Logistic, Some(a)).unwrap();
        let oracle = oracle_z(a, 14);
        let kd = kneading(&map, 6).unwrap();
        let mut compared = 0;
        for (k, &(z, s)) in oracle.iter().enumerate().take(kd.len()) {
            if s >= 14 {
                break;
            }
            assert_eq!(kd.s[k], s, "logistic({a}) S_{k}");
            assert!((kd.z[k] - z).abs() < 1e-9, "logistic({a}) z_{k}: {} vs {z}", kd.z[k]);
            assert!((kd.zhat[k] - (1.0 - z)).abs() < 1e-9, "logistic({a}) ẑ_{k}");
            compared += 1;
        }
        assert!(compared >= 3, "logistic({a}): only {compared} cutting times compared");
        assert!(kd.check(&map).is_empty());
    }
}
