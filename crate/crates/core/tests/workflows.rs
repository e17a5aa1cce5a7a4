use swlattice::bounds::{cubic_bound, largest_positive_root, phi_bound_check};
use swlattice::fields::curvature;
use swlattice::functional::{sw_energy, FieldPair};
use swlattice::gauge::{coulomb_fix, uhlenbeck_estimate, Mode};
use swlattice::io::{read_form, write_form, FieldKind, RunConfig};
use swlattice::lattice::lp_norm;
use swlattice::solver::{
    manufacture, random_perturbation, residual, smooth_seed, solve, SolverConfig, SourcePair,
};
use swlattice::{Domain, Error, Form, KgSpec, Spinor};

fn dom4() -> Domain {
    Domain::new([4; 4], 0.5, KgSpec::Constant(1.0), 0.0).unwrap()
}

#[test]
fn manufactured_seed_is_its_own_solution() {
    let dom = dom4();
    let seed = smooth_seed(&dom);
    for mode in [Mode::Dirichlet, Mode::Neumann] {
        let (src, bd) = manufacture(&dom, &seed.a, &seed.phi, mode).unwrap();
        let bd = (mode == Mode::Dirichlet).then_some(bd);
        let r = residual(&dom, mode, &seed.a, &seed.phi, &src, bd.as_ref()).unwrap();
        assert!(r.l2 <= 1e-12, "{mode}: {}", r.l2);
    }
}

#[test]
fn solving_from_the_optimum_stops_at_once() {
    let dom = dom4();
    let seed = smooth_seed(&dom);
    let (src, bd) = manufacture(&dom, &seed.a, &seed.phi, Mode::Dirichlet).unwrap();
    let cfg = SolverConfig {
        mode: Mode::Dirichlet,
        ..Default::default()
    };
    let sol = solve(&dom, &src, Some(&bd), &seed, &cfg).unwrap();
    assert!(sol.converged);
    assert_eq!(sol.iterations, 0);
}

#[test]
fn solves_are_bitwise_reproducible() {
    let dom = Domain::new([3, 3, 4, 3], 0.5, KgSpec::Constant(1.0), 0.0).unwrap();
    let init = random_perturbation(&dom, Mode::Neumann, 0.2, 3).unwrap();
    let cfg = SolverConfig {
        max_iters: 200,
        monitor_cadence: 10,
        ..Default::default()
    };
    let run = || solve(&dom, &SourcePair::zeros(&dom), None, &init, &cfg).unwrap();
    let (s1, s2) = (run(), run());
    let csv = |s: &swlattice::Solution| {
        s.trace
            .iter()
            .map(|r| r.csv_row())
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(csv(&s1), csv(&s2));
    assert_eq!(s1.a, s2.a);
    assert_eq!(s1.phi, s2.phi);
}

#[test]
fn dirichlet_without_boundary_is_rejected() {
    let dom = dom4();
    let cfg = SolverConfig {
        mode: Mode::Dirichlet,
        ..Default::default()
    };
    let x = FieldPair::zeros(&dom);
    let e = solve(&dom, &SourcePair::zeros(&dom), None, &x, &cfg).unwrap_err();
    assert!(matches!(e, Error::MissingBoundary(_)));
}

#[test]
fn coulomb_fix_preserves_energy() {
    let dom = dom4();
    let seed = smooth_seed(&dom);
    for mode in [Mode::Dirichlet, Mode::Neumann] {
        let (a2, g, rep) = coulomb_fix(&dom, &seed.a, mode).unwrap();
        assert!(rep.div_residual <= 1e-8 * (1.0 + lp_norm(&dom, &seed.a, 2.0).unwrap()));
        let (_, p2) = swlattice::fields::apply_gauge(&dom, &g, &seed.a, &seed.phi).unwrap();
        let e1 = sw_energy(&dom, &seed.a, &seed.phi).unwrap().total;
        let e2 = sw_energy(&dom, &a2, &p2).unwrap().total;
        assert!((e1 - e2).abs() <= 1e-12 * (1.0 + e1));
        let f1 = curvature(&dom, &seed.a).unwrap();
        let f2 = curvature(&dom, &a2).unwrap();
        let diff = f1
            .values()
            .iter()
            .zip(f2.values())
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        assert!(diff <= 1e-13);
    }
}

#[test]
fn uhlenbeck_ensemble_is_stable() {
    let dom = Domain::new([4; 4], 0.5, KgSpec::Constant(0.0), 0.0).unwrap();
    let stats = uhlenbeck_estimate(&dom, 20, 2.0, 11).unwrap();
    assert_eq!(stats.samples, 20);
    assert!(stats.max.unwrap() < 2.0 * stats.median.unwrap());
}

#[test]
fn seed_respects_the_root_bound() {
    let dom = dom4();
    let seed = smooth_seed(&dom);
    let (src, _) = manufacture(&dom, &seed.a, &seed.phi, Mode::Dirichlet).unwrap();
    let rep = phi_bound_check(&dom, &seed.phi, &src.sigma, Mode::Dirichlet, 1e-9).unwrap();
    assert_eq!(rep.checked_sites, 16);
    assert_eq!(rep.violating_fraction, 0.0);
}

#[test]
fn root_bound_against_bisection() {
    for &(kg, s) in &[(-2.0, 0.3), (0.5, 1.0), (3.0, 0.01), (-0.1, 5.0)] {
        let w = largest_positive_root(kg, s).unwrap().unwrap();
        let q = |x: f64| (x * x + kg) * x - 4.0 * s;
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        while q(hi) <= 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        assert!(
            (w - hi).abs() <= 1e-10 * (1.0 + w),
            "kg={kg} s={s}: {w} vs {hi}"
        );
    }
    assert!(matches!(
        cubic_bound(1.0, -1.0),
        Err(Error::OutOfSector { .. })
    ));
}

#[test]
fn field_files_on_disk() {
    let dom = dom4();
    let dir = std::env::temp_dir().join(format!("swlattice-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let seed = smooth_seed(&dom);
    write_form(&dir.join("x.A"), &dom, FieldKind::OneForm, &seed.a).unwrap();
    write_form(&dir.join("x.phi"), &dom, FieldKind::Spinor, &seed.phi).unwrap();
    let a: Form<f64> = read_form(&dir.join("x.A"), &dom, FieldKind::OneForm).unwrap();
    let phi: Form<Spinor> = read_form(&dir.join("x.phi"), &dom, FieldKind::Spinor).unwrap();
    assert_eq!(a, seed.a);
    assert_eq!(phi, seed.phi);
    let wrong = read_form::<f64>(&dir.join("x.phi"), &dom, FieldKind::OneForm).unwrap_err();
    assert!(wrong.to_string().contains("x.phi"));

    let kg: Form<f64> = Form::from_fn(&dom, 0, |s, _| dom.position(s)[0] - 1.0);
    write_form(&dir.join("kg.field"), &dom, FieldKind::Scalar, &kg).unwrap();
    let cfg = RunConfig::parse("dims=4,4,4,4\nh=0.5\nkg=@kg.field\n").unwrap();
    let d2 = cfg.domain(Some(&dir)).unwrap();
    assert_eq!(d2.kg(), kg.values());
    std::fs::remove_dir_all(&dir).unwrap();
}
