//! Acceptance criteria, one line each. Every expected value is produced by an
//! oracle written here (closed forms, unrolling, root finding, finite
//! differences) rather than by the code under test.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use conegeo::brach::{build_scenario, solve_brachistochrone, transit_time, ScenarioConfig};
use conegeo::flows::{
    first_variation, flow_to_geodesic, tau_bounds, vertex_flow, vertex_flow_energy, vertex_flow_energy_rate,
    FlowOptions, FlowReport, StepEvent,
};
use conegeo::geometry::{induced_sphere_metric, stereographic_fwd, stereographic_inv, Metric, ScalarField};
use conegeo::oracle::{cone_geodesic_in_class, cone_unroll_geodesic, graph_shortest_path, Connectivity};
use conegeo::paths::{break_structure, energy, length, seed_path, Boundary, DiscretePath};
use conegeo::verify::{certify_geodesic, initial_velocity, shoot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Path = DiscretePath<f64>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Shortening iterations that were accepted must each lower the energy
/// below every earlier trace entry.
fn strictly_decreasing(start: f64, report: &FlowReport<f64>) -> bool {
    let mut prev = start;
    for t in &report.trace {
        if t.event == StepEvent::Accepted && !(t.energy < prev) {
            return false;
        }
        prev = prev.min(t.energy);
    }
    true
}

fn jagged_chord(rng: &mut ChaCha8Rng, p: &[f64], q: &[f64], n: usize, amp: f64) -> Path {
    let nodes = (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let mut x: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + s * (b - a)).collect();
            if i > 0 && i < n {
                for v in &mut x {
                    *v += rng.gen_range(-amp..amp);
                }
            }
            x
        })
        .collect();
    DiscretePath::fixed(nodes).unwrap()
}

/// Two radial legs through the cone vertex: `l1` in from angle `t1`, `l2`
/// out along angle `t2`, vertex at node `i`, each leg at constant speed.
fn radial_broken(n: usize, i: usize, l1: f64, l2: f64, t1: f64, t2: f64) -> Path {
    let nodes = (0..=n)
        .map(|k| {
            if k <= i {
                vec![l1 * (1.0 - k as f64 / i as f64), t1]
            } else {
                vec![l2 * (k - i) as f64 / (n - i) as f64, t2]
            }
        })
        .collect();
    DiscretePath::fixed(nodes).unwrap()
}

// 1. Energy of the vertex reparametrization against its closed form.
fn ac1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 256;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let alpha = rng.gen_range(1.0..1.5);
        let total = rng.gen_range(1.0..3.0);
        let j = rng.gen_range(32..224usize);
        let i = loop {
            let i = rng.gen_range(16..240usize);
            if i != j && (i as i64 - j as i64) % 4 == 0 {
                break i;
            }
        };
        let sigma = j as f64 / n as f64;
        let tau = i as f64 / n as f64;
        let (l1, l2) = (sigma * total, (1.0 - sigma) * total);
        let t1 = rng.gen_range(-PI..PI);
        let t2 = t1 + PI / alpha + rng.gen_range(0.05..0.5);
        let m = Metric::cone(alpha).unwrap();
        let path = radial_broken(n, i, l1, l2, t1, t2);
        for t in [0.0, 0.25, 0.5, 1.0] {
            let moved = vertex_flow(&path, &m, t).unwrap();
            let want = vertex_flow_energy(total * total, sigma, tau, t).unwrap();
            worst = worst.max((energy(&moved, &m).unwrap() - want).abs());
        }
    }
    outcome(worst <= 1e-8, format!("max |E - closed form| = {worst:.2e} over 400 cases"))
}

// 2. Monotone decrease of accepted iterations, and negative vertex-flow rate.
fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad_rate = 0;
    for a in 0..100 {
        for b in 0..100 {
            if a == b {
                continue;
            }
            let (tau, sigma) = ((a as f64 + 0.5) / 100.0, (b as f64 + 0.5) / 100.0);
            for t in [0.0, 0.5, 0.9] {
                if !(vertex_flow_energy_rate(1.0, sigma, tau, t).unwrap() < 0.0) {
                    bad_rate += 1;
                }
            }
        }
    }
    let conformal = Metric::conformal(ScalarField::parse("1 + 0.5*x1^2 + 0.25*x2^2", 2).unwrap(), Vec::new()).unwrap();
    let runs: Vec<(Metric<f64>, Path)> = vec![
        (Metric::flat(2), jagged_chord(&mut rng, &[0.0, 0.0], &[1.0, 1.0], 64, 0.3)),
        (conformal, jagged_chord(&mut rng, &[-1.0, 0.0], &[1.0, 0.5], 64, 0.2)),
        (Metric::cone(0.5).unwrap(), DiscretePath::chord(&[1.0, 0.0], &[1.0, PI], 64).unwrap()),
        (Metric::cone(1.5).unwrap(), DiscretePath::chord(&[1.0, 0.0], &[0.7, PI], 64).unwrap()),
    ];
    let mut bad_flow = 0;
    let mut accepted = 0;
    for (m, p) in &runs {
        let e0 = energy(p, m).unwrap();
        let (_, rep) = flow_to_geodesic(p, m, &FlowOptions::default()).unwrap();
        accepted += rep.accepted;
        if !strictly_decreasing(e0, &rep) {
            bad_flow += 1;
        }
    }
    outcome(
        bad_rate == 0 && bad_flow == 0,
        format!("{bad_rate} non-negative rates on the grid; {bad_flow} flows with a non-decreasing accepted step ({accepted} accepted)"),
    )
}

// 3. Break parameters stay strictly inside the tau bounds.
fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 64;
    let (mut checked, mut outside) = (0, 0);
    for _ in 0..1000 {
        let alpha = rng.gen_range(1.0..1.5);
        let m = Metric::cone(alpha).unwrap();
        let tau: f64 = rng.gen_range(0.1..0.9);
        let (l1, l2) = (rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0));
        let (c1, c2) = (rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
        let warp = |x: f64, c: f64| x + c * x * (1.0 - x);
        let t1 = rng.gen_range(-PI..PI);
        let t2 = t1 + PI / alpha + rng.gen_range(0.05..0.5);
        let nodes: Vec<Vec<f64>> = (0..=n)
            .map(|k| {
                let s = k as f64 / n as f64;
                if s < tau {
                    vec![l1 * (1.0 - warp(s / tau, c1)), t1]
                } else {
                    vec![l2 * warp((s - tau) / (1.0 - tau), c2), t2]
                }
            })
            .collect();
        let path = DiscretePath::fixed(nodes).unwrap();
        let before = break_structure(&path, &m);
        if before.breaks.len() != 1 {
            continue;
        }
        let moved = vertex_flow(&path, &m, rng.gen_range(0.01..1.0)).unwrap();
        let after = break_structure(&moved, &m);
        let (e0, e1) = (energy(&path, &m).unwrap(), energy(&moved, &m).unwrap());
        let b = e0.max(e1) * (1.0 + rng.gen_range(1e-3..1.0));
        let (lo, hi) = tau_bounds(before.legs[0], before.legs[1], b).unwrap();
        for t in [before.breaks[0].param, after.breaks[0].param] {
            checked += 1;
            if !(t > lo && t < hi) {
                outside += 1;
            }
        }
    }
    outcome(outside == 0 && checked >= 1900, format!("{outside} of {checked} break parameters outside their bounds"))
}

struct Geodesic {
    metric: Metric<f64>,
    path: Path,
}

// 4. Flat chart: jagged seeds flow to the chord.
fn ac4(keep: &mut Vec<Geodesic>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = Metric::flat(2);
    let opts = FlowOptions::default();
    let (mut worst, mut failed) = (0.0f64, 0);
    for _ in 0..20 {
        let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let q = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let seed = jagged_chord(&mut rng, &p, &q, 128, 0.3);
        let (out, rep) = flow_to_geodesic(&seed, &m, &opts).unwrap();
        let chord = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
        let err = (energy(&out, &m).unwrap() - chord).abs();
        worst = worst.max(err);
        if err > 1e-6 || !certify_geodesic(&out, &m, 1e-6).pass || !rep.converged {
            failed += 1;
        }
        keep.push(Geodesic { metric: m.clone(), path: out });
    }
    outcome(failed == 0, format!("{failed} of 20 seeds failed; max |E - |q-p|^2| = {worst:.2e}"))
}

// 5. Cone flows against unrolling.
fn ac5(keep: &mut Vec<Geodesic>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Vertex-free cases are also shot from in criterion 10, which needs a
    // residual near 1e-4 / N^2; the default 1e-6 only bounds the endpoint
    // to about 1e-3.
    let tight = FlowOptions { tol_residual: 1e-9, ..FlowOptions::default() };
    let (mut worst, mut failed, mut through) = (0.0f64, Vec::new(), 0);
    for case in 0..50 {
        // Every third case is drawn from the through-vertex regime.
        let (alpha, dtheta) = if case % 3 == 0 {
            let alpha = rng.gen_range(1.05..1.5);
            (alpha, rng.gen_range(PI / alpha + 0.05..PI) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        } else {
            (rng.gen_range(0.2..1.5), rng.gen_range(-PI..PI))
        };
        let p = [rng.gen_range(0.5..1.5), rng.gen_range(-PI..PI)];
        let q = [rng.gen_range(0.5..1.5), p[1] + dtheta];
        let m = Metric::cone(alpha).unwrap();
        let oracle = cone_unroll_geodesic(alpha, &p, &q).unwrap();
        let seed = seed_path(&Boundary::Fixed { p: p.to_vec(), q: q.to_vec() }, 0, &m, 256).unwrap();
        let opts = if oracle.through_vertex { FlowOptions::default() } else { tight };
        let (out, rep) = flow_to_geodesic(&seed, &m, &opts).unwrap();
        let rel = (length(&out, &m).unwrap() - oracle.length).abs() / oracle.length;
        worst = worst.max(rel);
        let cert = &rep.final_certificate;
        // Converged at the default tolerance means the certificate passes at it.
        let default_tol = FlowOptions::default().tol_residual;
        let mut ok = (rep.converged || certify_geodesic(&out, &m, default_tol).pass) && rel <= 1e-3;
        if oracle.through_vertex {
            through += 1;
            ok &= cert.breaks == 1 && cert.speed_residual <= opts.tol_residual;
        } else if ok && rep.converged && cert.breaks == 0 {
            keep.push(Geodesic { metric: m.clone(), path: out.clone() });
        }
        if !ok {
            failed.push(format!("#{case} alpha={alpha:.3} dtheta={dtheta:.3} rel={rel:.1e} conv={}", rep.converged));
        }
    }
    outcome(
        failed.is_empty() && through > 0,
        format!("{} of 50 failed ({through} through the vertex); max relative length error {worst:.2e} {}", failed.len(), failed.join("; ")),
    )
}

fn random_path(rng: &mut ChaCha8Rng, n: usize, lo: [f64; 2], hi: [f64; 2]) -> Path {
    let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
    let q = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
    let nodes = (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let wig = (s * PI).sin();
            vec![
                (p[0] + s * (q[0] - p[0]) + 0.1 * wig * rng.gen_range(-1.0..1.0)).clamp(lo[0], hi[0]),
                (p[1] + s * (q[1] - p[1]) + 0.1 * wig * rng.gen_range(-1.0..1.0)).clamp(lo[1], hi[1]),
            ]
        })
        .collect();
    DiscretePath::fixed(nodes).unwrap()
}

// 6. First variation against central differences.
fn ac6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-6;
    let factor = "1 + 0.5*x1^2 + 0.3*x2^3";
    let conformal = Metric::conformal(ScalarField::parse(factor, 2).unwrap(), vec![vec![5.0, 5.0]]).unwrap();
    let base = Metric::conformal(ScalarField::parse("1/(1 + |x|^4)", 2).unwrap(), Vec::new()).unwrap();
    let lifted = induced_sphere_metric(&base, Some(4.0)).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, kind) in [("flat", 0), ("cone", 1), ("conformal", 2), ("lifted", 3)] {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let n = 16;
            let (metric, path) = match kind {
                0 => (Metric::flat(2), random_path(&mut rng, n, [-1.0, -1.0], [1.0, 1.0])),
                1 => (Metric::cone(rng.gen_range(0.3..1.2)).unwrap(), random_path(&mut rng, n, [0.5, -1.0], [1.5, 1.0])),
                2 => (conformal.clone(), random_path(&mut rng, n, [-1.0, -1.0], [1.0, 1.0])),
                _ => {
                    let chart = random_path(&mut rng, n, [-3.0, -3.0], [3.0, 3.0]);
                    (lifted.clone(), chart.map_nodes(|x| Ok(stereographic_fwd(x))).unwrap())
                }
            };
            let dim = path.dim();
            let w: Vec<Vec<f64>> = (0..=n)
                .map(|i| {
                    if i == 0 || i == n {
                        return vec![0.0; dim];
                    }
                    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    metric.tangent_project(path.node(i), &mut v);
                    v
                })
                .collect();
            let shifted = |sign: f64| {
                let nodes = path
                    .nodes()
                    .iter()
                    .zip(&w)
                    .map(|(x, wi)| {
                        let mut y: Vec<f64> = x.iter().zip(wi).map(|(a, b)| a + sign * h * b).collect();
                        metric.retract(&mut y);
                        y
                    })
                    .collect();
                energy(&DiscretePath::fixed(nodes).unwrap(), &metric).unwrap()
            };
            let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * h);
            let an = first_variation(&path, &metric, &w).unwrap();
            worst = worst.max((fd - an).abs() / an.abs().max(1e-3));
        }
        pass &= worst <= 1e-5;
        lines.push(format!("{name} {worst:.1e}"));
    }
    outcome(pass, format!("max relative error per kind: {}", lines.join(", ")))
}

// 7. Stereographic roundtrip and lift isometry.
fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut round = 0.0f64;
    for _ in 0..1000 {
        let scale = 10f64.powf(rng.gen_range(-2.0..1.0));
        let x = [scale * rng.gen_range(-1.0..1.0), scale * rng.gen_range(-1.0..1.0)];
        let back = stereographic_inv(&stereographic_fwd(&x)).unwrap();
        round = round.max(x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        // And from the sphere side, away from the north pole.
        let mut y: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= l);
        if y[2] < 0.9 {
            let again = stereographic_fwd(&stereographic_inv(&y).unwrap());
            round = round.max(y.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    let base = Metric::conformal(ScalarField::parse("1/(1 + |x|^4)", 2).unwrap(), Vec::new()).unwrap();
    let lifted = induced_sphere_metric(&base, Some(4.0)).unwrap();
    let mut iso = 0.0f64;
    for _ in 0..50 {
        let chart = random_path(&mut rng, 32, [-1.2, -1.2], [1.2, 1.2]);
        let sphere = chart.map_nodes(|x| Ok(stereographic_fwd(x))).unwrap();
        iso = iso.max((energy(&chart, &base).unwrap() - energy(&sphere, &lifted).unwrap()).abs());
    }
    outcome(round <= 1e-12 && iso <= 1e-8, format!("roundtrip error {round:.1e}; chart vs lifted energy {iso:.1e}"))
}

// 8. Winding seeds around a conformal cone point give distinct geodesics.
fn cone_point_scenario(seed_windings: Vec<i64>) -> ScenarioConfig {
    ScenarioConfig {
        potential: "1 - |x|^1.8".into(),
        energy_level: 1.0,
        p: vec![-1.0, 0.2],
        q: vec![1.0, 0.1],
        singular_points: vec![vec![0.0, 0.0]],
        growth_exponent: None,
        seed_windings,
        lift: false,
        window: Some(vec![[-1.5, 1.5], [-1.5, 1.5]]),
    }
}

fn ac8() -> Outcome {
    // E - U = |x|^1.8, so the metric is |x|^-1.8 |dx|^2: a cone of angle
    // 2 pi * 0.1 at the origin, developed by rho = 10 |x|^0.1.
    let cfg = cone_point_scenario(vec![0, 1, 2]);
    let scenario = build_scenario::<f64>(&cfg).unwrap();
    let opts = FlowOptions { max_iters: 4000, ..FlowOptions::default() };
    let sols = solve_brachistochrone(&scenario, 256, &opts).unwrap();
    let rho = |x: &[f64]| 10.0 * x[0].hypot(x[1]).powf(0.1);
    let th = |x: &[f64]| x[1].atan2(x[0]);
    let (pp, qq) = ([rho(&cfg.p), th(&cfg.p)], [rho(&cfg.q), th(&cfg.q)]);
    let mut detail = Vec::new();
    let mut ok = sols.len() >= 3;
    for s in &sols {
        let k = s.winding.unwrap_or(i64::MIN);
        let oracle = cone_geodesic_in_class(0.1, &pp, &qq, k).map(|g| g.length).unwrap_or(f64::NAN);
        detail.push(format!(
            "k={k} E={:.4} (unrolled {:.4}) conv={} res={:.1e}",
            s.energy,
            oracle * oracle,
            s.converged,
            s.certificate.straightness_residual.max(s.certificate.speed_residual)
        ));
        ok &= s.converged && s.certificate.pass;
    }
    ok &= sols.windows(2).all(|w| w[0].energy < w[1].energy);
    let mut windings: Vec<_> = sols.iter().map(|s| s.winding).collect();
    windings.dedup();
    ok &= windings.len() == sols.len();
    outcome(ok, format!("{} solutions: {}", sols.len(), detail.join("; ")))
}

/// Exact brachistochrone from rest at height 0 through `p` and `q`:
/// `x = x0 + R (phi - sin phi)`, `y = R (1 - cos phi)`. Returns
/// `(R, phi_p, phi_q)`.
fn cycloid_through(p: [f64; 2], q: [f64; 2]) -> (f64, f64, f64) {
    let bisect = |f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64| {
        let fa = f(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (f(m) > 0.0) == (fa > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    // For a given phi_q, R follows from q's height and phi_p from p's.
    let gap = |phi_q: f64| {
        let r = q[1] / (1.0 - phi_q.cos());
        let phi_p = (1.0 - p[1] / r).acos();
        r * ((phi_q - phi_q.sin()) - (phi_p - phi_p.sin())) - (q[0] - p[0])
    };
    let phi_q = bisect(&gap, 1e-3, 2.0 * PI - 1e-3);
    let r = q[1] / (1.0 - phi_q.cos());
    (r, (1.0 - p[1] / r).acos(), phi_q)
}

// 9. Cycloid under gravity.
fn ac9() -> Outcome {
    let (p, q) = ([0.0, 1e-4], [PI, 2.0]);
    let cfg = ScenarioConfig {
        potential: "-x2".into(),
        energy_level: 0.0,
        p: p.to_vec(),
        q: q.to_vec(),
        singular_points: Vec::new(),
        growth_exponent: None,
        seed_windings: vec![0],
        lift: false,
        window: Some(vec![[0.0, PI], [1e-4, 2.0]]),
    };
    let scenario = build_scenario::<f64>(&cfg).unwrap();
    let opts = FlowOptions { max_iters: 4000, ..FlowOptions::default() };
    let sol = solve_brachistochrone(&scenario, 256, &opts).unwrap().remove(0);
    let (r, phi_p, phi_q) = cycloid_through(p, q);
    let exact = (2.0 * r).sqrt() * (phi_q - phi_p);
    let t = transit_time(&sol.path, &scenario).unwrap();
    let time_err = (t - exact).abs() / exact;
    // Distance from each node to the classical cycloid through the origin.
    let curve: Vec<[f64; 2]> =
        (0..=20000).map(|i| i as f64 * PI / 20000.0).map(|th| [th - th.sin(), 1.0 - th.cos()]).collect();
    let shape = sol
        .path
        .nodes()
        .iter()
        .map(|x| curve.iter().map(|c| (c[0] - x[0]).hypot(c[1] - x[1])).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let graph = graph_shortest_path(scenario.metric(), &p, &q, [[0.0, PI], [1e-4, 2.0]], 256, Connectivity::Sixteen).unwrap();
    let graph_err = (graph - exact).abs() / exact;
    outcome(
        time_err <= 5e-3 && shape <= 1e-2 && graph_err <= 1.1e-2,
        format!(
            "time {t:.6} vs {exact:.6} (rel {time_err:.1e}); sup distance to cycloid {shape:.1e}; graph {graph:.6} (rel {graph_err:.1e})"
        ),
    )
}

// 10. Shooting from converged geodesics re-reaches the far endpoint.
// The flat and cone geodesics of criteria 4 and 5 are exact at any N. The
// conformal ones carry an O(1/N^2) midpoint-rule error, so they are solved
// here at a resolution and tolerance where that error is below 1e-5; the
// tightly wound k = 2 class would need N > 1024.
fn ac10(earlier: &[Geodesic]) -> Outcome {
    let scenario = build_scenario::<f64>(&cone_point_scenario(vec![0, 1])).unwrap();
    let opts = FlowOptions { max_iters: 500, tol_residual: 1e-9, ..FlowOptions::default() };
    let conformal: Vec<Geodesic> = solve_brachistochrone(&scenario, 512, &opts)
        .unwrap()
        .into_iter()
        .filter(|s| s.converged)
        .map(|s| Geodesic { metric: scenario.metric().clone(), path: s.path })
        .collect();
    let n_conformal = conformal.len();
    let (mut worst_end, mut worst_speed, mut used) = (0.0f64, 0.0f64, 0);
    let mut worst_kind = String::new();
    for g in earlier.iter().chain(&conformal) {
        let p = g.path.first();
        let v = initial_velocity(&g.path);
        let Ok(shot) = shoot(&g.metric, p, &v, 2000, 1.0) else { continue };
        if shot.halted_at_vertex {
            continue;
        }
        used += 1;
        let end = shot.path.last();
        let err = end.iter().zip(g.path.last()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err > worst_end {
            worst_kind = g.metric.kind().to_string();
        }
        worst_end = worst_end.max(err);
        let s0 = g.metric.vector_norm(p, &v).unwrap();
        let s1 = g.metric.vector_norm(end, &shot.final_velocity).unwrap();
        worst_speed = worst_speed.max((s1 - s0).abs() / s0);
    }
    outcome(
        n_conformal == 2 && used > n_conformal && worst_end <= 1e-4 && worst_speed <= 1e-8,
        format!("{used} geodesics ({n_conformal} conformal); endpoint error {worst_end:.1e} ({worst_kind}); speed drift {worst_speed:.1e}"),
    )
}

fn main() -> ExitCode {
    let mut geodesics = Vec::new();
    let mut all = true;
    let mut run = |id: usize, name: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let pass = o.pass && took <= limit;
        all &= pass;
        println!(
            "AC{id:<2} {} {name}: {} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    };
    let secs = Duration::from_secs;
    run(1, "vertex-flow closed form", secs(5), &mut ac1);
    run(2, "monotone decrease", secs(1), &mut ac2);
    run(3, "tau bounds", secs(10), &mut ac3);
    run(4, "flat chart geodesics", secs(30), &mut || ac4(&mut geodesics));
    run(5, "cone unrolling equivalence", secs(120), &mut || ac5(&mut geodesics));
    run(6, "first variation", secs(10), &mut ac6);
    run(7, "stereographic lift isometry", secs(5), &mut ac7);
    run(8, "winding multiplicity", secs(120), &mut ac8);
    run(9, "cycloid", secs(60), &mut ac9);
    run(10, "shooting consistency", secs(30), &mut || ac10(&geodesics));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
