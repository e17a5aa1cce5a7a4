use proptest::prelude::*;
use swlattice::fields::{
    apply_gauge, covariant_derivative, curvature, laplacian, phi_op, phi_star,
};
use swlattice::functional::{d1, d2, sw_energy, sw_gradient, FieldPair};
use swlattice::io::{write_field, FieldFile, FieldKind};
use swlattice::lattice::{boundary_defect, d, inner_product};
use swlattice::rng::SplitMix64;
use swlattice::{Domain, Form, GaugeTransform, KgSpec, Spinor};

fn domain(n0: usize, h: f64) -> Domain {
    Domain::new([n0, 3, 4, 3], h, KgSpec::Constant(-0.5), 0.2).unwrap()
}

fn spinors(dom: &Domain, r: &mut SplitMix64) -> Form<Spinor> {
    Form::from_fn(dom, 0, |_, _| {
        Spinor::from_parts(r.symmetric(), r.symmetric(), r.symmetric(), r.symmetric())
    })
}

fn reals(dom: &Domain, deg: usize, r: &mut SplitMix64) -> Form<f64> {
    Form::from_fn(dom, deg, |_, _| r.symmetric())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dd_is_zero(seed in any::<u64>(), n0 in 3usize..5, h in 0.2f64..1.5) {
        let dom = domain(n0, h);
        let mut r = SplitMix64::new(seed);
        for deg in 0..3 {
            let w = reals(&dom, deg, &mut r);
            let dd = d(&dom, &d(&dom, &w).unwrap()).unwrap();
            let scale = 1.0 / (h * h);
            prop_assert!(dd.values().iter().all(|v| v.abs() <= 1e-13 * scale));
        }
    }

    #[test]
    fn interior_forms_have_no_defect(seed in any::<u64>(), deg in 1usize..4) {
        let dom = domain(4, 0.7);
        let mut r = SplitMix64::new(seed);
        let eta = reals(&dom, deg, &mut r);
        let omega = reals(&dom, deg - 1, &mut r).masked(|s, c| dom.is_interior_cell(deg - 1, s, c));
        let lhs = inner_product(&dom, &d(&dom, &omega).unwrap(), &eta).unwrap();
        prop_assert!(boundary_defect(&dom, &omega, &eta).unwrap().abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn gauge_invariance(seed in any::<u64>(), amp in 0.1f64..5.0) {
        let dom = domain(3, 0.8);
        let mut r = SplitMix64::new(seed);
        let a = reals(&dom, 1, &mut r);
        let phi = spinors(&dom, &mut r);
        let g = GaugeTransform::new((0..dom.num_sites()).map(|_| amp * r.symmetric()).collect());
        let (a2, p2) = apply_gauge(&dom, &g, &a, &phi).unwrap();
        let e1 = sw_energy(&dom, &a, &phi).unwrap().total;
        let e2 = sw_energy(&dom, &a2, &p2).unwrap().total;
        prop_assert!(rel(e1, e2) <= 1e-12);
        let f1 = curvature(&dom, &a).unwrap();
        let f2 = curvature(&dom, &a2).unwrap();
        for (u, v) in f1.values().iter().zip(f2.values()) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + amp));
        }
        let n1 = covariant_derivative(&dom, &a, &phi).unwrap();
        let n2 = covariant_derivative(&dom, &a2, &p2).unwrap();
        for s in 0..dom.num_sites() {
            for k in 0..4 {
                let expect = n1.get(s, k).rotate(-g.theta[s]);
                prop_assert!((n2.get(s, k) - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn phi_star_is_adjoint(seed in any::<u64>()) {
        let dom = domain(4, 0.6);
        let mut r = SplitMix64::new(seed);
        let a = reals(&dom, 1, &mut r);
        let lam = reals(&dom, 1, &mut r);
        let phi = spinors(&dom, &mut r);
        let w: Form<Spinor> = Form::from_fn(&dom, 1, |_, _| Spinor::from_parts(r.symmetric(), r.symmetric(), r.symmetric(), r.symmetric()));
        let lhs = inner_product(&dom, &phi_op(&dom, &a, &lam, &phi).unwrap(), &w).unwrap();
        let rhs = inner_product(&dom, &lam, &phi_star(&dom, &a, &w, &phi).unwrap()).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-12);
    }

    #[test]
    fn laplacian_is_dirichlet_form_inside(seed in any::<u64>()) {
        let dom = domain(4, 0.9);
        let mut r = SplitMix64::new(seed);
        let a = reals(&dom, 1, &mut r);
        let phi = spinors(&dom, &mut r);
        let psi = spinors(&dom, &mut r).masked(|s, _| dom.is_interior_site(s));
        let lhs = inner_product(&dom, &laplacian(&dom, &a, &phi).unwrap(), &psi).unwrap();
        let g1 = covariant_derivative(&dom, &a, &phi).unwrap();
        let g2 = covariant_derivative(&dom, &a, &psi).unwrap();
        let rhs = inner_product(&dom, &g1, &g2).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-12);
    }

    #[test]
    fn directional_derivatives_split_the_gradient(seed in any::<u64>()) {
        let dom = domain(3, 1.0);
        let mut r = SplitMix64::new(seed);
        let a = reals(&dom, 1, &mut r);
        let phi = spinors(&dom, &mut r);
        let lam = reals(&dom, 1, &mut r);
        let v = spinors(&dom, &mut r);
        let g = sw_gradient(&dom, &a, &phi).unwrap();
        let zero_a: Form<f64> = Form::zeros(&dom, 1);
        let zero_phi: Form<Spinor> = Form::zeros(&dom, 0);
        let p1 = g.pairing(&dom, &FieldPair::new(lam.clone(), zero_phi)).unwrap();
        let p2 = g.pairing(&dom, &FieldPair::new(zero_a, v.clone())).unwrap();
        prop_assert!(rel(d1(&dom, &a, &phi, &lam).unwrap(), p1) <= 1e-11);
        prop_assert!(rel(d2(&dom, &a, &phi, &v).unwrap(), p2) <= 1e-11);
    }

    #[test]
    fn field_files_round_trip(seed in any::<u64>(), h in 1e-3f64..10.0) {
        let dom = Domain::new([3, 3, 4, 3], h, KgSpec::Constant(0.0), 0.0).unwrap();
        let mut r = SplitMix64::new(seed);
        let a = Form::from_fn(&dom, 1, |_, _| r.symmetric() * 10f64.powi((r.next_u64() % 20) as i32 - 10));
        let text = write_field(&dom, FieldKind::OneForm, &a).unwrap();
        let back: Form<f64> = FieldFile::parse(&text).unwrap().to_form(&dom, FieldKind::OneForm).unwrap();
        prop_assert_eq!(back, a);
        let phi = spinors(&dom, &mut r);
        let text = write_field(&dom, FieldKind::Spinor, &phi).unwrap();
        let back: Form<Spinor> = FieldFile::parse(&text).unwrap().to_form(&dom, FieldKind::Spinor).unwrap();
        prop_assert_eq!(back, phi);
    }
}
