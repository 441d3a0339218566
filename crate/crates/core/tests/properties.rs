use faer::Mat;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qcoupler::circuits::{DeviceParams, FluxPoint, FluxQubit, QubitId};
use qcoupler::config::Range;
use qcoupler::coupled::{CompositeModel, Retained};
use qcoupler::coupler::CouplerGroundState;
use qcoupler::noise::{
    coherence_from_responses, combine_t1, dephasing_rate, estimate_amplitude, eta,
    parse_rate_table, CoherenceOptions, NoiseModel, QubitResponse, Sequence,
};
use qcoupler::operators::{eigendecompose, embed_matrix, HermitianOperator};
use qcoupler::output::{read_table, Provenance, Table};
use qcoupler::semiclassical::{direct_coupling, galvanic_to_mutual, mediated_coupling};
use qcoupler::units;

fn hermitian(n: usize) -> impl Strategy<Value = Mat<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        let a = Mat::from_fn(n, n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1));
        Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()))
    })
}

fn sized_hermitian(max: usize) -> impl Strategy<Value = Mat<C64>> {
    (2..=max).prop_flat_map(hermitian)
}

proptest! {
    #[test]
    fn eigenpairs_meet_contract(h in sized_hermitian(16)) {
        let n = h.nrows();
        let sol = eigendecompose(&HermitianOperator::from_complex(h).unwrap(), n).unwrap();
        let range = sol.energies[n - 1] - sol.energies[0];
        prop_assert!(sol.residual < 1e-9 * range.max(1.0));
        prop_assert!(sol.energies.windows(2).all(|w| w[0] <= w[1]));
        let gram = sol.states.adjoint() * &sol.states;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, j)] - C64::new(target, 0.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn kronecker_sum_spectrum_is_pairwise_sums(a in sized_hermitian(5), b in sized_hermitian(5)) {
        let (na, nb) = (a.nrows(), b.nrows());
        let dims = [na, nb];
        let sum = embed_matrix(&dims, a.as_ref(), 0).unwrap() + embed_matrix(&dims, b.as_ref(), 1).unwrap();
        let full = eigendecompose(&HermitianOperator::from_complex(sum).unwrap(), na * nb).unwrap();
        let ea = eigendecompose(&HermitianOperator::from_complex(a).unwrap(), na).unwrap().energies;
        let eb = eigendecompose(&HermitianOperator::from_complex(b).unwrap(), nb).unwrap().energies;
        let mut sums: Vec<f64> = ea.iter().flat_map(|x| eb.iter().map(move |y| x + y)).collect();
        sums.sort_by(f64::total_cmp);
        for (x, y) in full.energies.iter().zip(&sums) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn global_phase_leaves_energies(h in hermitian(6), phases in prop::collection::vec(-3.2f64..3.2, 6)) {
        let op = HermitianOperator::from_complex(h).unwrap();
        let e = eigendecompose(&op, 6).unwrap().energies;
        let r = eigendecompose(&op.rephase(&phases).unwrap(), 6).unwrap().energies;
        for (x, y) in e.iter().zip(&r) {
            prop_assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn asymmetric_input_rejected(h in hermitian(4), d in 1e-6f64..1.0) {
        let mut m = h;
        m[(0, 1)] += C64::new(d, 0.0);
        prop_assert!(HermitianOperator::from_complex(m).is_err());
    }

    #[test]
    fn renormalization_shrinks_inductances(l_a in 50.0f64..800.0, l_b in 50.0f64..800.0, frac in 0.0f64..0.95) {
        let m = frac * (l_a * l_b).sqrt();
        let r = galvanic_to_mutual(l_a, l_b, m).unwrap();
        prop_assert!(r.m_tilde_ph <= m + 1e-12);
        prop_assert!(r.l_tilde_a_ph <= l_a && r.l_tilde_b_ph <= l_b);
        let zero = galvanic_to_mutual(l_a, l_b, 0.0).unwrap();
        prop_assert_eq!((zero.l_tilde_a_ph, zero.l_tilde_b_ph, zero.m_tilde_ph), (l_a, l_b, 0.0));
    }

    #[test]
    fn mediated_sign_and_linear_limit(
        m in 1.0f64..60.0, inv_l in -0.03f64..0.03, ip_a in 50.0f64..300.0, ip_b in 50.0f64..300.0,
    ) {
        let c = mediated_coupling(m, inv_l, ip_a, ip_b);
        prop_assert_eq!(c.j_rad_per_s.signum(), inv_l.signum());
        let direct = direct_coupling(m * m * inv_l, ip_a, ip_b);
        prop_assert!((c.j_rad_per_s - direct).abs() <= 1e-12 * direct.abs());
    }

    #[test]
    fn amplitude_inverts_dephasing(a in 1e-7f64..1e-4, gamma in 0.5f64..1.5, kappa in 1e8f64..1e11) {
        let model = NoiseModel::reference().with_amplitude(a).unwrap().with_gamma(gamma).unwrap();
        for seq in [Sequence::Ramsey, Sequence::Echo] {
            let phi = dephasing_rate(kappa, &model, seq).unwrap();
            let background = 1.4e5;
            let total = qcoupler::noise::total_rate(background, phi, gamma).unwrap();
            let e = eta(seq, gamma, model.window()).unwrap();
            let back = estimate_amplitude(total, background, kappa, gamma, e).unwrap();
            prop_assert!((back - a).abs() <= 1e-6 * a, "{seq:?}: {back} vs {a}");
        }
    }

    #[test]
    fn coherence_report_invariants(
        kappa in -5e10f64..5e10, element in 0.0f64..60.0, delta in 4.0f64..6.0,
    ) {
        let r = QubitResponse {
            f_c: 0.45,
            f_b: 0.5,
            delta_ghz: delta,
            kappa,
            element_na: element,
            qubit_element_na: 40.0,
            omega01: units::ghz_to_rad_per_s(delta),
        };
        let report = coherence_from_responses(&[r], &CoherenceOptions::new(NoiseModel::reference())).unwrap();
        let p = &report.points[0];
        prop_assert_eq!(p.t1_total, combine_t1(p.t1_coupler, p.t1_qubit_background));
        prop_assert!(p.gamma1 <= p.gamma0);
        prop_assert!(p.gamma0 >= p.ramsey_background);
    }

    #[test]
    fn range_points_stay_inside(start in -1.0f64..1.0, span in 0.0f64..2.0, step in 1e-3f64..0.5) {
        let r = Range { start, stop: start + span, step };
        r.validate("r").unwrap();
        let p = r.points();
        prop_assert_eq!(p.len(), r.len());
        prop_assert_eq!(p[0], start);
        prop_assert!(*p.last().unwrap() <= r.stop + 1e-9 * step);
        prop_assert!(p.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn table_round_trips(values in prop::collection::vec(-1e12f64..1e12, 1..40)) {
        let mut t = Table::new(&["i", "x"]);
        for (i, &v) in values.iter().enumerate() {
            t.push(vec![i.into(), v.into()]).unwrap();
        }
        let text = t.to_csv(&Provenance::new("test", "0")).unwrap();
        let back = read_table(&text).unwrap();
        for (x, y) in back.column("x").unwrap().iter().zip(&values) {
            prop_assert!((x - y).abs() <= 1e-8 * y.abs());
        }
    }

    #[test]
    fn rate_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_rate_table(&text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coupler_symmetries(f in -0.6f64..0.6) {
        let g = CouplerGroundState::new(&DeviceParams::table1_semiclassical()).unwrap();
        let i = g.slope_current(f).unwrap();
        let i_neg = g.slope_current(-f).unwrap();
        prop_assert!((i + i_neg).abs() <= 5e-3 * 700.0);
        let l = g.inverse_inductance(f).unwrap();
        let l_neg = g.inverse_inductance(-f).unwrap();
        prop_assert!((l - l_neg).abs() <= 5e-3 * l.abs().max(1e-4));
        prop_assert!((g.energy(f + 1.0).unwrap() - g.energy(f).unwrap()).abs() < 1e-9);
        prop_assert!((g.operator_current(f).unwrap() - i).abs() < 0.01 * 700.0);
    }

    #[test]
    fn qubit_reflection_and_period(d in -0.02f64..0.02) {
        let q = FluxQubit::new(&DeviceParams::table1_semiclassical(), QubitId::B, None)
            .unwrap()
            .with_levels([10, 6, 4])
            .unwrap();
        let a = q.energies(0.5 + d, 3).unwrap();
        let b = q.energies(0.5 - d, 3).unwrap();
        let c = q.energies(1.5 + d, 3).unwrap();
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() < 1e-6);
            prop_assert!((a[k] - c[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn composite_reflection(f_a in 0.49f64..0.52, f_b in 0.49f64..0.52, f_c in 0.0f64..0.5) {
        let model = CompositeModel::new(&DeviceParams::table1_semiclassical())
            .unwrap()
            .with_qubit_levels([10, 6, 4])
            .unwrap()
            .with_retained(Retained { a: 3, b: 3, c: 3 })
            .unwrap();
        let t = model.build(FluxPoint::new(f_a, f_b, f_c).unwrap()).unwrap().transitions(3).unwrap();
        let r = model
            .build(FluxPoint::new(1.0 - f_a, 1.0 - f_b, -f_c).unwrap())
            .unwrap()
            .transitions(3)
            .unwrap();
        for (x, y) in t.iter().zip(&r) {
            prop_assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn folding_preserves_spectrum(f in -2.0f64..2.0) {
        let p = FluxPoint::new(0.5, 0.5, f).unwrap();
        let g = CouplerGroundState::new(&DeviceParams::table1_semiclassical()).unwrap();
        let folded = p.folded();
        prop_assert!((0.0..1.0).contains(&folded.f_c));
        prop_assert!((g.energy(f).unwrap() - g.energy(folded.f_c).unwrap()).abs() < 1e-9);
    }
}
