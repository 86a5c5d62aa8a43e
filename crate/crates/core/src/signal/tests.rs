use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_paradigm(rng: &mut ChaCha8Rng, n_events: usize, n_conditions: usize) -> Paradigm {
    let mut onset = 0.0;
    let mut events: Vec<Event> = (0..n_events)
        .map(|i| {
            onset += rng.random_range(4.0..8.0);
            Event {
                // first P events cover every condition
                condition: if i < n_conditions { i } else { rng.random_range(0..n_conditions) },
                onset,
                modulation: rng.random_range(0.5..1.5),
            }
        })
        .collect();
    events.sort_by(|a, b| a.onset.total_cmp(&b.onset));
    Paradigm::new(events, n_conditions).unwrap()
}

fn canonical() -> GammaDiffHrf {
    GammaDiffHrf::new(GammaDiffParams::default(), 25.0).unwrap()
}

#[test]
fn paradigm_validation() {
    assert!(Paradigm::new(vec![Event::new(0, 1.0)], 2).is_err());
    assert!(Paradigm::new(vec![Event::new(2, 1.0)], 2).is_err());
    assert!(Paradigm::new(vec![Event::new(0, -1.0)], 1).is_err());
    assert!(Paradigm::new(vec![Event::new(0, 1.0), Event::new(1, 3.0)], 2).is_ok());
}

#[test]
fn grid_times_start_at_tr() {
    let g = SamplingGrid::new(2.0, 3).unwrap();
    assert_eq!(g.times(), vec![2.0, 4.0, 6.0]);
    assert!(SamplingGrid::new(0.0, 3).is_err());
}

#[test]
fn rho_single_event() {
    let p = Paradigm::new(vec![Event::new(0, 0.0)], 1).unwrap();
    let g = SamplingGrid::new(2.0, 3).unwrap();
    let rho = collect_rho(&p, &g, &HRFSupport::new(10.0).unwrap()).unwrap();
    assert_eq!(rho.points, vec![2.0, 4.0, 6.0]);
    for (n, t) in rho.terms.iter().enumerate() {
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].rho_index, n);
    }
}

#[test]
fn rho_outside_support_dropped() {
    let p = Paradigm::new(vec![Event::new(0, 5.0)], 1).unwrap();
    let g = SamplingGrid::new(2.0, 4).unwrap();
    let rho = collect_rho(&p, &g, &HRFSupport::new(10.0).unwrap()).unwrap();
    // t = 2, 4 precede the event
    assert!(rho.terms[0].is_empty());
    assert!(rho.terms[1].is_empty());
    assert_eq!(rho.points, vec![1.0, 3.0]);

    let late = Paradigm::new(vec![Event::new(0, 50.0)], 1).unwrap();
    assert!(matches!(
        collect_rho(&late, &g, &HRFSupport::default()),
        Err(Error::EmptySupport)
    ));
}

#[test]
fn rho_matches_exhaustive_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_paradigm(&mut rng, 200, 6);
    let support = HRFSupport::new(25.0).unwrap();
    let g = SamplingGrid::new(2.0, ((p.last_onset() + 25.0) / 2.0).ceil() as usize).unwrap();
    let rho = collect_rho(&p, &g, &support).unwrap();
    assert!(rho.points.iter().all(|r| (0.0..=25.0).contains(r)));
    assert!(rho.points.windows(2).all(|w| w[1] - w[0] > RHO_SNAP_TOLERANCE));

    let mut expected = 0;
    for n in 0..g.n_samples {
        for (m, e) in p.events().iter().enumerate() {
            let r = (n + 1) as f64 * 2.0 - e.onset;
            if (0.0..=25.0).contains(&r) {
                expected += 1;
                let hits: Vec<_> = rho.terms[n].iter().filter(|t| t.event_index == m).collect();
                assert_eq!(hits.len(), 1);
                assert!((rho.points[hits[0].rho_index] - r).abs() <= RHO_SNAP_TOLERANCE);
            }
        }
    }
    assert_eq!(rho.n_terms(), expected);
}

#[test]
fn rho_snaps_commensurate_lags() {
    // onsets on the TR grid produce exactly repeated lags
    let events = (0..10).map(|i| Event::new(0, 2.0 * i as f64)).collect();
    let p = Paradigm::new(events, 1).unwrap();
    let g = SamplingGrid::new(2.0, 30).unwrap();
    let rho = collect_rho(&p, &g, &HRFSupport::new(10.0).unwrap()).unwrap();
    assert_eq!(rho.points, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
}

#[test]
fn design_zero_hrf() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = random_paradigm(&mut rng, 20, 3);
    let g = SamplingGrid::new(2.0, 80).unwrap();
    let x = build_design_matrix(&p, &g, &ZeroFunction, &HRFSupport::default());
    assert_eq!(x.shape(), (80, 3));
    assert!(x.iter().all(|&v| v == 0.0));
}

#[test]
fn design_single_event_samples_hrf() {
    let p = Paradigm::new(vec![Event::new(0, 0.0)], 1).unwrap();
    let g = SamplingGrid::new(2.0, 15).unwrap();
    let h = canonical();
    let x = build_design_matrix(&p, &g, &h, &HRFSupport::default());
    for n in 0..15 {
        let t = 2.0 * (n + 1) as f64;
        let expected = if t <= 25.0 { h.eval(t) } else { 0.0 };
        assert_eq!(x[(n, 0)], expected);
    }
}

#[test]
fn design_matches_oversampled_convolution() {
    // onsets on the 1 ms grid so the discrete event train is exact
    let dt = 1e-3;
    let onsets = [3.217, 5.104];
    let events = onsets.iter().map(|&t| Event::new(0, t)).collect();
    let p = Paradigm::new(events, 1).unwrap();
    let g = SamplingGrid::new(2.0, 20).unwrap();
    let h = canonical();
    let support = HRFSupport::default();
    let x = build_design_matrix(&p, &g, &h, &support);

    let total = (g.time(g.n_samples - 1) / dt).round() as usize + 1;
    let mut train = vec![0.0; total];
    for &t in &onsets {
        train[(t / dt).round() as usize] += 1.0;
    }
    let kernel_len = (25.0 / dt).round() as usize;
    let h_samples: Vec<f64> = (0..=kernel_len).map(|k| h.eval(k as f64 * dt)).collect();
    for n in 0..g.n_samples {
        let idx = (g.time(n) / dt).round() as usize;
        let conv: f64 = (0..=kernel_len.min(idx))
            .map(|k| train[idx - k] * h_samples[k])
            .sum();
        assert!((x[(n, 0)] - conv).abs() < 1e-6, "n={n}: {} vs {conv}", x[(n, 0)]);
    }
}

#[test]
fn design_ignores_hrf_outside_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_paradigm(&mut rng, 30, 2);
    let g = SamplingGrid::new(2.0, 120).unwrap();
    let support = HRFSupport::new(20.0).unwrap();
    let h = canonical();
    let perturbed = move |t: f64| if support.contains(t) { h.eval(t) } else { 42.0 };
    let a = build_design_matrix(&p, &g, &h, &support);
    let b = build_design_matrix(&p, &g, &perturbed, &support);
    assert_eq!(a, b);
}

#[test]
fn design_is_linear_in_modulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = random_paradigm(&mut rng, 30, 3);
    let doubled_events = p
        .events()
        .iter()
        .map(|e| Event {
            modulation: if e.condition == 1 { 2.0 * e.modulation } else { e.modulation },
            ..*e
        })
        .collect();
    let q = Paradigm::new(doubled_events, 3).unwrap();
    let g = SamplingGrid::new(2.0, 120).unwrap();
    let h = canonical();
    let a = build_design_matrix(&p, &g, &h, &HRFSupport::default());
    let b = build_design_matrix(&q, &g, &h, &HRFSupport::default());
    for n in 0..120 {
        assert_eq!(b[(n, 0)], a[(n, 0)]);
        assert_eq!(b[(n, 1)], 2.0 * a[(n, 1)]);
        assert_eq!(b[(n, 2)], a[(n, 2)]);
    }
}

#[test]
fn measurements_zero_beta_drops_all() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = random_paradigm(&mut rng, 20, 2);
    let g = SamplingGrid::new(2.0, 70).unwrap();
    let hm = build_h_measurements(
        &p,
        &g,
        &HRFSupport::default(),
        &DVector::zeros(2),
        &DVector::zeros(70),
    )
    .unwrap();
    assert!(hm.measurements.is_empty());
    assert_eq!(hm.dropped.len(), 70);
}

#[test]
fn measurements_single_condition_coefficients() {
    let p = Paradigm::new(vec![Event::new(0, 0.0)], 1).unwrap();
    let g = SamplingGrid::new(2.0, 5).unwrap();
    let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    let hm = build_h_measurements(&p, &g, &HRFSupport::default(), &DVector::from_vec(vec![2.0]), &y)
        .unwrap();
    assert_eq!(hm.measurements.len(), 5);
    for (n, m) in hm.measurements.iter().enumerate() {
        assert_eq!(m.coefficients, vec![2.0]);
        assert_eq!(m.abscissae, vec![2.0 * (n + 1) as f64]);
        assert_eq!(m.value, y[n]);
    }
}

#[test]
fn measurements_dimension_checks() {
    let p = Paradigm::new(vec![Event::new(0, 0.0)], 1).unwrap();
    let g = SamplingGrid::new(2.0, 5).unwrap();
    let s = HRFSupport::default();
    assert!(matches!(
        build_h_measurements(&p, &g, &s, &DVector::zeros(2), &DVector::zeros(5)),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        build_h_measurements(&p, &g, &s, &DVector::zeros(1), &DVector::zeros(4)),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn measurements_reproduce_design_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let support = HRFSupport::default();
    for _ in 0..50 {
        let n_cond = rng.random_range(1..5);
        let n_events = rng.random_range(n_cond..40);
        let p = random_paradigm(&mut rng, n_events, n_cond);
        let g = SamplingGrid::new(rng.random_range(1.0..3.0), rng.random_range(10..150)).unwrap();
        let beta = DVector::from_fn(n_cond, |_, _| rng.random_range(-2.0..2.0));
        let peak = rng.random_range(3.0..8.0);
        let h = GammaDiffHrf::new(GammaDiffParams::with_peak(peak), 25.0).unwrap();
        let x = build_design_matrix(&p, &g, &h, &support);
        let xb = &x * &beta;
        let Ok(hm) = build_h_measurements(&p, &g, &support, &beta, &DVector::zeros(g.n_samples))
        else {
            continue;
        };
        for (m, &n) in hm.measurements.iter().zip(&hm.kept) {
            let v: f64 = m.abscissae.iter().zip(&m.coefficients).map(|(&r, &c)| c * h.eval(r)).sum();
            assert!((v - xb[n]).abs() < 1e-12, "{v} vs {}", xb[n]);
        }
        for &n in &hm.dropped {
            assert!(xb[n].abs() < 1e-12);
        }
        let from_rho = design_from_rho_values(
            &p,
            &hm.rho,
            &hm.rho.points.iter().map(|&r| h.eval(r)).collect::<Vec<_>>(),
        );
        assert!((from_rho - x).abs().max() < 1e-12);
    }
}
