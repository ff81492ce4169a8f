use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use semiflow::catalogue;
use semiflow::decay::fit_decay;
use semiflow::spectral::{lasota_yorke_fit, ProbeBasket};
use semiflow::uni::{branch_pair_r, find_uni_witness};
use semiflow::{BNormContext, Complex64, Grid, GridFunction, MarkovMap, RoofFunction, System};

fn maps() -> Vec<MarkovMap> {
    vec![catalogue::doub2(), catalogue::tri3(), catalogue::nonlin()]
}

fn random_symbols(map: &MarkovMap, seeds: &[usize]) -> Vec<usize> {
    let mut out = vec![seeds[0] % map.len()];
    for s in &seeds[1..] {
        let last = *out.last().unwrap();
        let next: Vec<usize> = (0..map.len()).filter(|&j| map.admissible(last, j)).collect();
        out.push(next[s % next.len()]);
    }
    out
}

fn point_in(map: &MarkovMap, i: usize, frac: f64) -> f64 {
    let iv = map.interval(i);
    iv.lo + frac * iv.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn chain_rule_for_concatenated_words(
        which in 0usize..3,
        seeds in prop::collection::vec(0usize..1000, 3..10),
        cut in 1usize..8,
        frac in 0.0f64..=1.0,
    ) {
        let map = &maps()[which];
        let s = random_symbols(map, &seeds);
        let k = cut.min(s.len() - 2);
        let (u, v) = (map.word(&s[..=k]).unwrap(), map.word(&s[k..]).unwrap());
        let w = map.word(&s).unwrap();
        let x = point_in(map, w.domain_interval(), frac);
        let (yv, dv) = map.apply_word(&v, x).unwrap();
        let (yu, du) = map.apply_word(&u, yv).unwrap();
        let (yw, dw) = map.apply_word(&w, x).unwrap();
        prop_assert!((yw - yu).abs() <= 1e-12);
        prop_assert!((dw - du * dv).abs() <= 1e-12 * dw.abs().max(1e-300));
    }

    #[test]
    fn derivatives_contract_geometrically(
        which in 0usize..3,
        seeds in prop::collection::vec(0usize..1000, 2..14),
        frac in 0.0f64..=1.0,
    ) {
        let map = &maps()[which];
        let w = map.word(&random_symbols(map, &seeds)).unwrap();
        let x = point_in(map, w.domain_interval(), frac);
        let (y, d) = map.apply_word(&w, x).unwrap();
        let e = map.expansion();
        prop_assert!(d.abs() <= e.lambda.powi(w.len() as i32) * e.c_exp);
        prop_assert!(map.interval(w.first()).contains_closed(y));
    }

    #[test]
    fn forward_map_inverts_branches(which in 0usize..3, i in 0usize..3, j in 0usize..3, frac in 0.0f64..=1.0) {
        let map = &maps()[which];
        let (i, j) = (i % map.len(), j % map.len());
        let b = map.branch(i, j).unwrap();
        let x = point_in(map, j, 0.001 + 0.998 * frac);
        let (y, _) = b.eval(x);
        prop_assert!((map.forward(y).unwrap() - x).abs() <= 1e-10);
    }

    #[test]
    fn norms_obey_the_triangle_inequality(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        b in 3.0f64..300.0,
    ) {
        let grid = Arc::new(Grid::new(catalogue::doub2().intervals(), 129, 0.5).unwrap());
        let field = |offset: usize| {
            let c = coeffs.clone();
            GridFunction::from_fn(Arc::clone(&grid), move |x| {
                (0..8).map(|k| {
                    let (a, bb) = c[k + offset];
                    Complex64::new(a, bb) * (2.0 * PI * (k + 1) as f64 * x).cos() / (k + 1) as f64
                }).sum()
            })
        };
        let (f, g) = (field(0), field(8));
        let h = &f + &g;
        let ctx = BNormContext::new(b, 2.8, 0.5).unwrap();
        let eps = 1e-12;
        prop_assert!(h.sup_norm() <= f.sup_norm() + g.sup_norm() + eps);
        prop_assert!(h.holder_seminorm() <= f.holder_seminorm() + g.holder_seminorm() + eps);
        prop_assert!(h.b_norm(&ctx) <= f.b_norm(&ctx) + g.b_norm(&ctx) + eps);
        for v in [&f, &g, &h] {
            prop_assert!(v.b_norm(&ctx) >= v.sup_norm());
            if v.holder_seminorm() <= ctx.c3 * b.powf(0.5) * v.sup_norm() {
                prop_assert_eq!(v.b_norm(&ctx), v.sup_norm());
            }
        }
    }

    #[test]
    fn sup_norm_never_grows_under_twisted_operators(b in 3.0f64..60.0, n in 1usize..6) {
        let sys = System::preset("nonlin-quadratic", 257).unwrap();
        let op = sys.operator(Complex64::new(0.0, b));
        for p in ProbeBasket::standard(5, 0.5).probes {
            let h = p.sample(sys.grid());
            prop_assert!(op.apply_n(&h, n).sup_norm() <= h.sup_norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pair_differences_telescope(
        seeds in prop::collection::vec(prop::collection::vec(0usize..1000, 5), 3),
        last in 0usize..2,
        frac in 0.0f64..=1.0,
    ) {
        let (map, roof) = catalogue::build_preset("doub2-quadratic").unwrap();
        let words: Vec<_> = seeds
            .iter()
            .map(|s| {
                let mut sym = random_symbols(&map, s);
                *sym.last_mut().unwrap() = last;
                map.word(&sym).unwrap()
            })
            .collect();
        let x = point_in(&map, last, frac);
        let r = |a: usize, b: usize| branch_pair_r(&map, &roof, &words[a], &words[b], x).unwrap();
        prop_assert!((r(0, 1) + r(1, 2) - r(0, 2)).abs() <= 1e-12);
    }

    #[test]
    fn decay_fits_are_scale_equivariant(c in 1e-3f64..1e3, rate in 0.05f64..1.0) {
        let ts: Vec<f64> = (1..=120).map(|k| k as f64 * 0.25).collect();
        let rho: Vec<Complex64> = ts
            .iter()
            .map(|&t| Complex64::new((-rate * t.sqrt()).exp() * (1.0 + 0.3 * (3.0 * t).cos()), 0.0))
            .collect();
        let scaled: Vec<Complex64> = rho.iter().map(|r| r * c).collect();
        let a = fit_decay(&ts, &rho, 0.0).unwrap();
        let b = fit_decay(&ts, &scaled, 0.0).unwrap();
        prop_assert_eq!(a.best, b.best);
        for (fa, fb) in a.fits.iter().zip(&b.fits) {
            prop_assert!((fa.delta - fb.delta).abs() <= 1e-9 * (1.0 + fa.delta));
            prop_assert!((fb.prefactor / fa.prefactor / c - 1.0).abs() <= 1e-9);
            prop_assert!((fa.r_squared - fb.r_squared).abs() <= 1e-9);
        }
    }
}

#[test]
fn mixing_certificate_is_stable() {
    for name in ["doub2", "tri3", "nonlin"] {
        let spec = catalogue::map_spec(name).unwrap();
        let (a, b) = (MarkovMap::build(&spec).unwrap(), MarkovMap::build(&spec).unwrap());
        assert_eq!(a.mixing_exponent(), b.mixing_exponent());
        assert_eq!(a.mixing_exponent(), 1);
    }
}

#[test]
fn norms_are_stable_under_refinement() {
    let f = |x: f64| Complex64::new((2.0 * PI * x).sin(), (x * x).cos());
    let ctx = BNormContext::new(10.0, 2.8, 0.5).unwrap();
    let norms = |m: usize| {
        let grid = Arc::new(Grid::new(catalogue::doub2().intervals(), m, 0.5).unwrap());
        let g = GridFunction::from_fn(grid, f);
        [g.sup_norm(), g.holder_seminorm(), g.b_norm(&ctx)]
    };
    let (a, b) = (norms(1025), norms(2049));
    for k in 0..3 {
        assert!((a[k] - b[k]).abs() < 1e-3, "{a:?} vs {b:?}");
    }
}

#[test]
fn rough_functions_contract_in_the_b_norm() {
    let sys = System::preset("doub2-quadratic", 1025).unwrap();
    let fit = lasota_yorke_fit(&sys, &[3.0, 10.0], &(1..=12).collect::<Vec<_>>(), &ProbeBasket::standard(2024, 0.5)).unwrap();
    let c3 = fit.c3();
    for b in [3.0, 10.0] {
        let ctx = BNormContext::new(b, c3, 0.5).unwrap();
        let h = sys.function(|x| Complex64::new((2.0 * PI * 64.0 * x).cos(), 0.0));
        assert!(h.holder_seminorm() >= 2.0 * c3 * b.powf(0.5) * h.sup_norm());
        let g = sys.operator(Complex64::new(0.0, b)).apply_n(&h, fit.n1);
        assert!(g.b_norm(&ctx) <= 0.8 * h.b_norm(&ctx), "b={b}: {} vs {}", g.b_norm(&ctx), h.b_norm(&ctx));
    }
}

#[test]
fn pair_differences_have_bounded_lipschitz_constant() {
    for preset in ["doub2-quadratic", "tri3-kink", "nonlin-quadratic"] {
        let (map, roof) = catalogue::build_preset(preset).unwrap();
        let e = map.expansion();
        for n in 1..=5usize {
            let bound = 2.0 * roof.lipschitz() * (1..=n).map(|k| e.lambda.powi(k as i32)).sum::<f64>() * e.c_exp;
            let pairs = [(vec![0; n], vec![1; n]), ((0..n).map(|k| k % 2).collect(), vec![1; n])];
            for j in 0..map.len() {
                for (p1, p2) in &pairs {
                    let w1 = map.word_with_prefix(p1, j).unwrap();
                    let w2 = map.word_with_prefix(p2, j).unwrap();
                    let iv = map.interval(j);
                    let xs: Vec<f64> = (0..=200).map(|k| iv.lo + iv.len() * k as f64 / 200.0).collect();
                    let rs: Vec<f64> = xs.iter().map(|&x| branch_pair_r(&map, &roof, &w1, &w2, x).unwrap()).collect();
                    for k in 0..200 {
                        let q = (rs[k + 1] - rs[k]).abs() / (xs[k + 1] - xs[k]);
                        assert!(q <= bound * (1.0 + 1e-9), "{preset} n={n}: {q} > {bound}");
                    }
                }
            }
        }
    }
}

/// `R` of `r + g o T - g` differs from `R` of `r` by `g(y2 x) - g(y1 x)`, so the
/// oscillation moves by at most `2 |g|_Lip C_exp lambda^n |x1 - x2|`.
#[test]
fn coboundaries_move_witnesses_within_the_distortion_bound() {
    let (map, roof) = catalogue::build_preset("doub2-quadratic").unwrap();
    let g = |x: f64| 0.25 * x * (1.0 - x);
    let g_lip = 0.25;
    let shifted = roof.plus_coboundary(g, Arc::clone(&map)).unwrap();
    let e = map.expansion();
    for n in 1..=8 {
        let a = find_uni_witness(&map, &roof, n, 40_000).unwrap();
        let b = find_uni_witness(&map, &shifted, n, 40_000).unwrap();
        let bound = 2.0 * g_lip * e.c_exp * e.lambda.powi(n as i32) * map.total_length();
        assert!((a.d - b.d).abs() <= bound + 1e-6, "n={n}: {} vs {} (bound {bound})", a.d, b.d);
    }
}

#[test]
fn locally_constant_additions_cancel_on_matched_words() {
    let map = catalogue::doub2();
    let base = RoofFunction::from_spec(&catalogue::roof_spec("quadratic").unwrap(), &map).unwrap();
    let b2 = base.clone();
    let m2 = catalogue::doub2();
    let shifted = RoofFunction::custom(
        move |x| b2.eval(x) + if m2.interval_of(x) == Some(0) { 0.3 } else { 0.7 },
        None,
        &map,
    )
    .unwrap();
    let pairs: [(&[usize], &[usize]); 3] = [(&[0, 1], &[1, 0]), (&[0, 0, 1, 1], &[1, 0, 1, 0]), (&[1, 1, 0], &[0, 1, 1])];
    for (p1, p2) in pairs {
        for j in 0..2 {
            let w1 = map.word_with_prefix(p1, j).unwrap();
            let w2 = map.word_with_prefix(p2, j).unwrap();
            for k in 1..64 {
                let x = point_in(&map, j, k as f64 / 64.0);
                let a = branch_pair_r(&map, &base, &w1, &w2, x).unwrap();
                let b = branch_pair_r(&map, &shifted, &w1, &w2, x).unwrap();
                assert!((a - b).abs() <= 1e-10, "{p1:?}/{p2:?} at {x}: {a} vs {b}");
            }
        }
    }
}
