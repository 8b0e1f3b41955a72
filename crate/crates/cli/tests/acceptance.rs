//! Acceptance criteria 1–10: one PASS/FAIL line each, non-zero exit on any
//! failure.

#[path = "../../core/tests/support/qsqrt2.rs"]
mod qsqrt2;

use std::f64::consts::LN_2;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use intervaldyn::conjugacy::{self, ConjugacyMode};
use intervaldyn::design::{self, ScheduleConfig};
use intervaldyn::hofbauer::{self, LiftStop};
use intervaldyn::induced::{self, Side};
use intervaldyn::lyapunov::{self, ScanConfig};
use intervaldyn::{make_family, FamilyId, Fidelity, Interval, IntervalMap};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn family(f: FamilyId, p: Option<f64>) -> IntervalMap {
    make_family(f, p).unwrap()
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("runtime {:.2?} over {:?}", elapsed, limit))
    }
}

fn c1_logistic_exponent() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_intervaldyn");
    let mut report = Vec::new();
    let mut ok = true;
    for seed in 0..10 {
        let t = Instant::now();
        let out = Command::new(bin)
            .args(["lyap", "--map", "logistic:4", "--n", "1e6", "--seed", &seed.to_string()])
            .output()
            .map_err(|e| e.to_string())?;
        let dt = t.elapsed();
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let last = text.trim_end().lines().last().unwrap_or_default();
        let v: f64 = last.split(',').nth(1).and_then(|s| s.parse().ok()).ok_or("bad CSV")?;
        let pass = (v - LN_2).abs() <= 0.01 && dt < Duration::from_secs(2);
        ok &= pass;
        report.push(format!("{seed}:{v:.5}/{:.2}s", dt.as_secs_f64()));
    }
    check(ok, format!("Λ_N per seed {}", report.join(" ")))
}

fn c2_tent_exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 10_000;
    let cps: Vec<usize> = (1..=n).collect();
    for s in [1.3, 1.7, 2.0] {
        let map = family(FamilyId::Tent, Some(s));
        for _ in 0..5 {
            let x: f64 = rng.gen_range(0.0..1.0);
            let p = lyapunov::profile(&map, x, n, &cps).map_err(|e| e.to_string())?;
            for &(_, l) in &p.checkpoints {
                worst = worst.max((l - s.ln()).abs());
            }
            worst = worst
                .max((p.lambda_minus_est - s.ln()).abs())
                .max((p.lambda_plus_est - s.ln()).abs());
        }
    }
    check(worst <= 1e-12, format!("max |Λ_n − log s| = {worst:.2e} over n ≤ {n}"))
}

fn c3_sign_invariance() -> Outcome {
    let f = family(FamilyId::Logistic, Some(4.0));
    let g = family(FamilyId::Sine, None);
    let t = Instant::now();
    let r = conjugacy::sign_invariance_experiment(&f, &g, 100_000, 48, 3).map_err(|e| e.to_string())?;
    let dt = t.elapsed();
    let msg = format!(
        "λ_f = {:.4}, λ_g = {:.4}, signs agree = {}, |λ_f − λ_g| = {:.4} (needs > 0.05), {:.2?}",
        r.lambda_f, r.lambda_g, r.signs_agree, r.difference, dt
    );
    let ok = (r.lambda_f - LN_2).abs() <= 0.02
        && r.lambda_g > 0.3
        && r.signs_agree
        && r.difference > 0.05
        && within(Duration::from_secs(30), dt).is_ok();
    check(ok, msg)
}

fn c4_tower_structure() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for map in [family(FamilyId::Tent, Some(2.0)), family(FamilyId::Logistic, Some(4.0))] {
        let n = hofbauer::build_tower(&map, 10).len();
        ok &= n == 1;
        parts.push(format!("{}: {n} node", map.spec()));
    }
    let sqrt2 = family(FamilyId::Tent, Some(std::f64::consts::SQRT_2));
    let tower = hofbauer::build_tower(&sqrt2, 5);
    let oracle = qsqrt2::tent_sqrt2_tower(5);
    let mut same = tower.len() == oracle.len();
    for (lo, hi, depth) in &oracle {
        same &= tower.nodes.iter().any(|n| {
            n.depth == *depth
                && (n.interval.lo - lo.to_f64()).abs() < 1e-12
                && (n.interval.hi - hi.to_f64()).abs() < 1e-12
        });
    }
    ok &= same;
    parts.push(format!(
        "tent(√2) depth 5: {} nodes vs oracle {}",
        tower.len(),
        oracle.len()
    ));
    let t18 = family(FamilyId::Tent, Some(1.8));
    let mut violations = 0;
    let mut residual = 0.0f64;
    for cap in 1..=8 {
        let tw = hofbauer::build_tower(&t18, cap);
        violations += tw.markov_violations(&t18, 1e-9).len();
        residual = residual.max(tw.provenance_residual(&t18));
    }
    ok &= violations == 0 && residual < 1e-9;
    parts.push(format!(
        "tent(1.8) caps 1..8: {violations} Markov violations, residual {residual:.1e}"
    ));
    let dt = t.elapsed();
    ok &= within(Duration::from_secs(5), dt).is_ok();
    check(ok, format!("{}; {:.2?}", parts.join("; "), dt))
}

fn c5_liftability() -> Outcome {
    let t = Instant::now();
    let map = family(FamilyId::Logistic, Some(2.5));
    let cap = 20;
    let tower = hofbauer::build_tower(&map, cap);
    let lift = hofbauer::lift_orbit(&tower, &map, 0.6 + 1e-6, 500).map_err(|e| e.to_string())?;
    let depths = lift.depths(&tower);
    let nodes: Vec<usize> = lift.points.iter().map(|p| p.node).collect();
    // Transient: up to the last revisit of an earlier node.
    let transient = (0..nodes.len())
        .rev()
        .find(|&i| nodes[..i].contains(&nodes[i]))
        .map_or(0, |i| i + 1);
    let max_depth = depths.iter().copied().max().unwrap_or(0);
    let escaped = matches!(lift.stop, Some(LiftStop::DepthCap { .. })) && max_depth == cap;
    let transient_ok = transient < nodes.len() / 2;

    let s = 1.9;
    let t19 = family(FamilyId::Tent, Some(s));
    let tower19 = hofbauer::build_tower(&t19, 8);
    let pl = hofbauer::periodic_lift(&tower19, &t19, &[s / (1.0 + s)], 200).map_err(|e| e.to_string())?;
    let k4 = tower19.compact_part(4);
    let cycle = pl.cycle();
    let periodic = !cycle.is_empty() && cycle.iter().all(|id| k4.contains(id));
    let dt = t.elapsed();
    let ok = escaped && transient_ok && periodic && within(Duration::from_secs(5), dt).is_ok();
    check(
        ok,
        format!(
            "logistic(2.5): depth {max_depth}/{cap}, stop {:?}, transient {transient} of {} steps; \
             tent(1.9) fixed point: node-cycle {:?} inside K_4 = {periodic}; {:.2?}",
            lift.stop,
            nodes.len(),
            cycle,
            dt
        ),
    )
}

fn c6_return_map() -> Outcome {
    let t = Instant::now();
    let s = 1.9;
    let map = family(FamilyId::Tent, Some(s));
    let tower = hofbauer::build_tower(&map, 30);
    let p = s / (1.0 + s);
    let j = Interval::new(p - 0.01, p + 0.01);
    let node = tower
        .recurrent_node_containing(&map, &j)
        .ok_or("no recurrent node contains J")?;
    let fr = hofbauer::first_return(&tower, &map, j, node, 20).map_err(|e| e.to_string())?;
    let n = fr.branches.len();
    let min_mult = fr
        .branches
        .iter()
        .map(|b| b.min_multiplier)
        .fold(f64::INFINITY, f64::min);
    let dt = t.elapsed();
    let ok = n >= 5 && min_mult > 1.0 && within(Duration::from_secs(10), dt).is_ok();
    check(
        ok,
        format!(
            "{n} branches ({} full) in node {node}, min multiplier {min_mult:.3}; {:.2?}",
            fr.full_branches().count(),
            dt
        ),
    )
}

fn c7_counterexample() -> Outcome {
    let f = family(FamilyId::Logistic, Some(4.0));
    let g = family(FamilyId::Sine, None);
    let t = Instant::now();
    let r = design::counterexample_experiment(&f, &g, &ScheduleConfig::new(200, 2), design::DEFAULT_MAX_BITS)
        .map_err(|e| e.to_string())?;
    let dt = t.elapsed();
    let mut ok = r.sign_f == -1 && r.sign_g == 1;
    let mut parts = Vec::new();
    for st in &r.stages {
        let dip = (st.lambda_dip + 0.1 * LN_2).abs() <= 0.02;
        let end = (st.lambda_end - LN_2).abs() <= 0.05;
        let conj = st.lambda_dip_conjugate >= 0.05;
        ok &= dip && end && conj;
        parts.push(format!(
            "n_k = {}: Λ_f(1+n_k) = {:.4}, Λ_f(end) = {:.4}, Λ_g(1+n_k) = {:.4}",
            st.n, st.lambda_dip, st.lambda_end, st.lambda_dip_conjugate
        ));
    }
    ok &= within(Duration::from_secs(60), dt).is_ok();
    check(
        ok,
        format!("{}; signs ({}, {}); {:.2?}", parts.join("; "), r.sign_f, r.sign_g, dt),
    )
}

fn c8_scan() -> Outcome {
    let t = Instant::now();
    let params = lyapunov::linspace(2.2, 4.0, 25);
    let cfg = ScanConfig {
        seed: 8,
        ..ScanConfig::default()
    };
    let r = lyapunov::attractor_scan(FamilyId::Logistic, &params, 4, &cfg).map_err(|e| e.to_string())?;
    let dt = t.elapsed();
    let negative = r.records.iter().filter(|x| x.lambda < cfg.threshold).count();
    let ok = r.records.len() == 100 && r.violations == 0 && within(Duration::from_secs(60), dt).is_ok();
    check(
        ok,
        format!(
            "{} pairs, {negative} negative with cycles, {} violations; {:.2?}",
            r.records.len(),
            r.violations,
            dt
        ),
    )
}

fn c9_induced() -> Outcome {
    let t = Instant::now();
    let tent = family(FamilyId::Tent, Some(2.0));
    let logistic = family(FamilyId::Logistic, Some(4.0));
    let mut worst_hit = 0.0f64;
    for map in [&tent, &logistic] {
        let im = induced::build_induced(map, 10).map_err(|e| e.to_string())?;
        let kd = &im.kneading;
        for k in 0..=10 {
            let s = kd.s[k];
            for z in [kd.z[k], kd.zhat[k]] {
                let y = map.orbit(z, s).map_err(|e| e.to_string())?[s];
                worst_hit = worst_hit.max((y - kd.c).abs());
            }
        }
    }
    let im = induced::build_induced(&logistic, 40).map_err(|e| e.to_string())?;
    let (l, r) = im.coverage();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_id = 0.0f64;
    let mut completed = 0;
    for _ in 0..100 {
        let side = if rng.gen_bool(0.5) { l } else { r };
        let x = rng.gen_range(side.lo..side.hi);
        let it = induced::induced_profile(&im, &logistic, x, 20, Fidelity::High).map_err(|e| e.to_string())?;
        completed += usize::from(it.stop.is_none() && it.steps() == 20);
        worst_id = worst_id.max((it.assembled - it.direct).abs());
    }
    let tim = induced::build_induced(&tent, 10).map_err(|e| e.to_string())?;
    let kd = &tim.kneading;
    let allowed = [(kd.z[0], kd.c), (kd.z[1], kd.c), (kd.c, kd.zhat[0]), (kd.c, kd.zhat[1])];
    let exact = tim
        .branches
        .iter()
        .all(|b| b.class.is_some() && allowed.iter().any(|&(lo, hi)| b.image.lo == lo && b.image.hi == hi))
        && tim.branch(0, Side::Left).is_some();
    let dt = t.elapsed();
    let ok = worst_hit <= 1e-9
        && completed == 100
        && worst_id <= 1e-8
        && exact
        && within(Duration::from_secs(10), dt).is_ok();
    check(
        ok,
        format!(
            "max |f^S_k(z_k) − c| = {worst_hit:.1e}; identity gap {worst_id:.1e} over {completed}/100 points; \
             tent(2) images exact = {exact}; {:.2?}",
            dt
        ),
    )
}

fn c10_conjugacy() -> Outcome {
    let t = Instant::now();
    let tent = family(FamilyId::Tent, Some(2.0));
    let logistic = family(FamilyId::Logistic, Some(4.0));
    let sine = family(FamilyId::Sine, None);
    let hx = conjugacy::make_conjugacy(&tent, &logistic, ConjugacyMode::Explicit, 48).map_err(|e| e.to_string())?;
    let unit = Interval::unit();
    let grid = unit.interior_grid(10_000);
    let explicit = hx.residual_on(grid).map_err(|e| e.to_string())?;
    let hi = conjugacy::make_conjugacy(&logistic, &sine, ConjugacyMode::Itinerary, 48).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pts: Vec<f64> = (0..1000).map(|_| rng.gen_range(0.0..1.0)).collect();
    let itinerary = hi.residual_on(pts).map_err(|e| e.to_string())?;
    let p = hi.value(0.75).map_err(|e| e.to_string())?;
    let alpha = sine.deriv(p).abs();
    let dt = t.elapsed();
    let ok = explicit < 1e-12
        && itinerary < 1e-6
        && (alpha - 2.12).abs() <= 0.01
        && within(Duration::from_secs(10), dt).is_ok();
    check(
        ok,
        format!(
            "explicit residual {explicit:.1e}; itinerary residual {itinerary:.1e}; |Dg(h(3/4))| = {alpha:.4}; {:.2?}",
            dt
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("logistic exponent", c1_logistic_exponent),
        ("tent exactness", c2_tent_exactness),
        ("sign invariance", c3_sign_invariance),
        ("tower structure", c4_tower_structure),
        ("liftability signatures", c5_liftability),
        ("return-map expansion", c6_return_map),
        ("sign-changing counterexample", c7_counterexample),
        ("attracting-cycle scan", c8_scan),
        ("induced-map suite", c9_induced),
        ("conjugacy fidelity", c10_conjugacy),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {:>2} [{tag}] {name}: {msg}", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
