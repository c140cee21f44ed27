use std::f64::consts::PI;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use diffuse_poisson::charges::trilinear_weights;
use diffuse_poisson::dielectric::central_difference_gradient;
use diffuse_poisson::{BandProfile, ChargeSet, Grid, PointCharge, TanhSphericalDielectric};

fn shell(profile: BandProfile) -> TanhSphericalDielectric {
    TanhSphericalDielectric::default().with_profile(profile)
}

fn random_point(rng: &mut StdRng, r_min: f64, r_max: f64) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            let r = rng.gen_range(r_min..r_max);
            return v.map(|c| c / n * r);
        }
    }
}

fn radius(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

#[test]
fn dielectric_gradient_is_second_order_consistent() {
    for profile in [BandProfile::Published, BandProfile::Continuous] {
        let d = shell(profile);
        let mut rng = StdRng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..1000 {
            let p = random_point(&mut rng, 1e-3, 8.0);
            let r = radius(p);
            if (r - d.r_i).abs() < 2e-3 || (r - d.r_e).abs() < 2e-3 {
                continue;
            }
            let exact = d.epsilon_gradient(p);
            let err = |delta: f64| {
                let fd = central_difference_gradient(|x| d.epsilon(x), p, delta);
                (0..3).map(|a| (fd[a] - exact[a]).abs()).fold(0.0, f64::max)
            };
            let (coarse, fine) = (err(1e-3), err(1e-4));
            // |error| <= C delta^2 with C bounded by the third derivative of eps
            assert!(coarse <= 5e3 * 1e-6, "p={p:?} err={coarse:e}");
            if coarse > 1e-9 {
                let ratio = coarse / fine.max(1e-300);
                assert!(ratio > 50.0, "p={p:?} ratio={ratio}");
            }
            checked += 1;
        }
        assert!(checked > 950);
    }
}

#[test]
fn dielectric_is_monotone_and_bounded() {
    for profile in [BandProfile::Published, BandProfile::Continuous] {
        let d = shell(profile);
        let mut prev = d.epsilon_radial(0.0);
        for i in 0..=12_000 {
            let r = i as f64 * 1e-3;
            let e = d.epsilon_radial(r);
            assert!(e >= prev, "r={r}");
            assert!((d.eps_i..=d.eps_e).contains(&e));
            let s = d.level_set_radial(r);
            assert!((0.0..=1.0).contains(&s));
            prev = e;
        }
    }
}

#[test]
fn exact_gradient_support() {
    let d = shell(BandProfile::Published);
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..500 {
        let inside = random_point(&mut rng, 0.0, 2.0);
        let outside = random_point(&mut rng, 5.0, 12.0);
        assert_eq!(d.epsilon_gradient(inside), [0.0; 3]);
        assert_eq!(d.epsilon_gradient(outside), [0.0; 3]);
        assert_eq!(d.epsilon(inside), 1.0);
        assert_eq!(d.epsilon(outside), 80.0);
    }
}

#[test]
fn greens_function_is_discretely_harmonic_away_from_charges() {
    let c = ChargeSet::new(vec![
        PointCharge::new([0.1, -0.2, 0.05], 1.0),
        PointCharge::new([-0.3, 0.2, 0.1], 0.5),
    ])
    .unwrap();
    let lap_max = |h: f64| {
        let g = |p: [f64; 3]| c.greens_potential(1.0, p).unwrap();
        let mut worst = 0.0f64;
        for p in [[2.0, 0.5, -0.3], [-1.0, 1.5, 1.0], [0.0, 0.0, 3.0]] {
            let mut lap = -6.0 * g(p);
            for a in 0..3 {
                for s in [-1.0, 1.0] {
                    let mut q = p;
                    q[a] += s * h;
                    lap += g(q);
                }
            }
            worst = worst.max((lap / (h * h)).abs());
        }
        worst
    };
    let (e1, e2) = (lap_max(0.1), lap_max(0.05));
    assert!(e1 < 0.05);
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn greens_gradient_matches_finite_differences() {
    let c = ChargeSet::new(vec![
        PointCharge::new([0.4, 0.0, -0.3], 2.0),
        PointCharge::new([-0.6, 0.5, 0.2], -1.0),
    ])
    .unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..500 {
        let p = random_point(&mut rng, 0.0, 9.0);
        let far = c.charges().iter().all(|q| {
            radius([
                p[0] - q.position[0],
                p[1] - q.position[1],
                p[2] - q.position[2],
            ]) >= 0.5
        });
        if !far {
            continue;
        }
        let fd = central_difference_gradient(|x| c.greens_potential(2.0, x).unwrap(), p, 1e-5);
        let an = c.greens_gradient(2.0, p).unwrap();
        let scale = an.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for a in 0..3 {
            assert!((fd[a] - an[a]).abs() <= 1e-6 * scale, "p={p:?}");
        }
    }
}

#[test]
fn trilinear_weights_preserve_mass_and_first_moment() {
    let grid = Grid::benchmark(50).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..100 {
        let p = [
            rng.gen_range(-9.9..9.9),
            rng.gen_range(-9.9..9.9),
            rng.gen_range(-9.9..9.9),
        ];
        let w = trilinear_weights(&grid, p);
        let total: f64 = w.iter().map(|(_, x)| x).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let mut moment = [0.0; 3];
        for (idx, wt) in w {
            assert!(wt >= -1e-15);
            let x = grid.position_of(idx);
            for a in 0..3 {
                moment[a] += wt * x[a];
            }
        }
        for a in 0..3 {
            assert!((moment[a] - p[a]).abs() < 1e-12);
        }
        let c = ChargeSet::new(vec![PointCharge::new(p, 1.3)]).unwrap();
        let f = c.trilinear_source(&grid).unwrap();
        let h3 = grid.spacing().powi(3);
        let total = f.values().iter().sum::<f64>() * h3;
        assert!((total - 4.0 * PI * 1.3).abs() <= 1e-12 * 4.0 * PI * 1.3);
        assert!(f.values().iter().filter(|v| **v != 0.0).count() <= 8);
    }
}

#[test]
fn regularized_source_support_is_the_open_band() {
    let grid = Grid::benchmark(40).unwrap();
    for profile in [BandProfile::Published, BandProfile::Continuous] {
        let d = shell(profile);
        let src = ChargeSet::centered(1.0)
            .regularized_source(&d, &grid)
            .unwrap();
        assert!(src.is_finite());
        for (idx, v) in src.values().iter().enumerate() {
            let r = radius(grid.position_of(idx));
            if r <= 2.0 || r >= 5.0 {
                assert_eq!(*v, 0.0);
            } else {
                // grad eps points outward, grad G inward for q > 0
                assert!(*v < 0.0);
            }
        }
    }
}

proptest! {
    #[test]
    fn index_round_trip(n in 3usize..40, seed in any::<u64>()) {
        let g = Grid::new([0.0; 3], 1.0, n).unwrap();
        let idx = (seed % g.len() as u64) as usize;
        let (i, j, k) = g.coords(idx);
        prop_assert_eq!(g.index(i, j, k), idx);
        prop_assert_eq!(g.node_position(i, j, k).unwrap(), g.position_of(idx));
    }

    #[test]
    fn epsilon_is_rotation_invariant(
        r in 0.0f64..9.0,
        theta in 0.0f64..PI,
        phi in 0.0f64..(2.0 * PI),
        alpha in 0.0f64..(2.0 * PI),
    ) {
        let d = shell(BandProfile::Continuous);
        let p = [r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos()];
        // rotate about z then about x
        let (ca, sa) = (alpha.cos(), alpha.sin());
        let q = [ca * p[0] - sa * p[1], sa * p[0] + ca * p[1], p[2]];
        let q = [q[0], ca * q[1] - sa * q[2], sa * q[1] + ca * q[2]];
        let (a, b) = (d.epsilon(p), d.epsilon(q));
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn greens_superposition(
        a in prop::array::uniform3(-1.0f64..1.0),
        b in prop::array::uniform3(-1.0f64..1.0),
        qa in -3.0f64..3.0,
        qb in -3.0f64..3.0,
        p in prop::array::uniform3(2.0f64..8.0),
    ) {
        let pair = ChargeSet::new(vec![PointCharge::new(a, qa), PointCharge::new(b, qb)]).unwrap();
        let sa = ChargeSet::new(vec![PointCharge::new(a, qa)]).unwrap();
        let sb = ChargeSet::new(vec![PointCharge::new(b, qb)]).unwrap();
        let sum = sa.greens_potential(1.5, p).unwrap() + sb.greens_potential(1.5, p).unwrap();
        let both = pair.greens_potential(1.5, p).unwrap();
        prop_assert!((sum - both).abs() <= 1e-15 * (1.0 + sum.abs()));
    }

    #[test]
    fn charge_file_round_trip(
        charges in prop::collection::vec(
            (prop::array::uniform3(-5.0f64..5.0), -10.0f64..10.0), 1..6),
    ) {
        let text: String = charges
            .iter()
            .map(|(p, q)| format!("{:e} {:e} {:e} {:e}\n", p[0], p[1], p[2], q))
            .collect();
        let parsed = ChargeSet::parse(&format!("# header\n\n{text}")).unwrap();
        prop_assert_eq!(parsed.len(), charges.len());
        for (c, (p, q)) in parsed.charges().iter().zip(&charges) {
            prop_assert_eq!(c.position, *p);
            prop_assert_eq!(c.magnitude, *q);
        }
    }
}
