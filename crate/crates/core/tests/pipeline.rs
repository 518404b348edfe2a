//! Cross-module checks: direct solver data through the self-similar transform,
//! frame evolution and modulation.

use blowup_core::modulation::{count_and_seed, solve_modulation, ModulationControls};
use blowup_core::physical::{frame_grid, frame_run, Boundary, CauchyData, ShootControls, Verdict};
use blowup_core::profiles::{kappa, WeightedSpace};
use blowup_core::selfsimilar::selfsimilar_transform;
use blowup_core::Params;

fn exact(t_blow: f64, pr: &Params) -> CauchyData {
    let b = pr.b();
    let (u0, u1) = (pr.kappa0 * t_blow.powf(-b), b * pr.kappa0 * t_blow.powf(-b - 1.0));
    CauchyData::from_fn(-4.0, 4.0, 0.01, |_| u0, |_| u1, Boundary::Fixed).unwrap()
}

#[test]
fn exact_blowup_is_the_constant_soliton() {
    for p in [2.0, 3.0, 5.0] {
        let pr = Params::signed(p).unwrap();
        let data = exact(0.7, &pr);
        let g = frame_grid();
        let st = selfsimilar_transform(&data.snapshot(), 0.5, 0.7, &g, &pr).unwrap();
        assert!((st.s + 0.7f64.ln()).abs() < 1e-14);
        for (w, v) in st.w1.values.iter().zip(&st.w2.values) {
            assert!((w - pr.kappa0).abs() < 1e-12 && v.abs() < 1e-12, "p={p}: {w} {v}");
        }
        let seed = count_and_seed(&st, &pr);
        assert_eq!((seed.k, seed.signs.as_slice()), (1, &[1.0][..]));
        let space = WeightedSpace::new(&g, &pr);
        let dec = solve_modulation(&st, &space, &seed.signs, &seed.zeta, &ModulationControls::default()).unwrap();
        assert!(dec.zeta[0].abs() < 1e-8 && dec.q_norm < 1e-8, "p={p}: {:?} {}", dec.zeta, dec.q_norm);
    }
}

#[test]
fn boosted_soliton_transforms_to_its_profile() {
    // u(x, t) = (T - t)^{-b} kappa(d, (x - x0)/(T - t)) solves the equation inside the cone.
    let pr = Params::signed(3.0).unwrap();
    let (x0, t_blow, d) = (0.2, 1.0, 0.4);
    let b = pr.b();
    let u = |x: f64, t: f64| {
        let tau = t_blow - t;
        let y = ((x - x0) / tau).clamp(-1.0, 1.0);
        tau.powf(-b) * kappa(d, y, &pr).unwrap()
    };
    let h = 1e-5;
    let data = CauchyData::from_fn(-3.0, 3.0, 0.001, |x| u(x, 0.0), |x| (u(x, h) - u(x, -h)) / (2.0 * h), Boundary::Fixed)
        .unwrap();
    let g = frame_grid();
    let st = selfsimilar_transform(&data.snapshot(), x0, t_blow, &g, &pr).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &y) in g.y().iter().enumerate() {
        if y.abs() < 0.9 {
            worst = worst.max((st.w1.values[i] - kappa(d, y, &pr).unwrap()).abs());
            worst = worst.max(st.w2.values[i].abs());
        }
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn frame_verdict_brackets_the_blowup_time() {
    let pr = Params::signed(3.0).unwrap();
    let data = exact(0.8, &pr);
    let ctl = ShootControls { intervals: 128, ds: 8.0, ..ShootControls::default() };
    assert_eq!(frame_run(&data, &pr, 0.0, 0.79, &ctl, 1.0).unwrap().0, Verdict::Early);
    assert_eq!(frame_run(&data, &pr, 0.0, 0.81, &ctl, 1.0).unwrap().0, Verdict::Late);
}
