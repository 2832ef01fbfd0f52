use qpt_core::analysis::{map_property_series, relaxation_table, trace_distance_series};
use qpt_core::nmr::{generate_dataset, log_time_grid, rescaled_equilibrium, NoiseSpec, RelaxationParams, SpinSystemParams};
use qpt_core::qmap::{build_mub_preparations, build_operator_basis};
use qpt_core::tomography::{run_full_reconstruction, ReconstructionConfig};

#[test]
fn noiseless_pipeline_recovers_transverse_times() {
    let params = SpinSystemParams::default();
    let relax = RelaxationParams::default();
    let times = log_time_grid(26, 0.01, 60.0);
    let ds = generate_dataset(&params, &relax, &NoiseSpec::none(), &times).unwrap();
    let basis = build_operator_basis(&build_mub_preparations()).unwrap();
    let rec = run_full_reconstruction(&ds, &basis, &ReconstructionConfig::default()).unwrap();
    let estimates = rec.successful().unwrap();
    let eq = rescaled_equilibrium(&params);

    let table = relaxation_table(&rec.times, &estimates, &rec.initial.states, &eq).unwrap();
    for (row, truth) in table.iter().zip([relax.t1_h, relax.t2_h, relax.t1_c, relax.t2_c, relax.t1_j, relax.t2_j]) {
        let fit = row.fit.as_ref().unwrap();
        assert!(fit.converged && fit.t_star > 0.0, "{}", row.label);
        if row.label.ends_with("T2") || row.label == "H-T1" {
            assert!((fit.t_star / truth - 1.0).abs() < 0.02, "{}: {} vs {truth}", row.label, fit.t_star);
        }
    }

    let (tp, un) = map_property_series(&rec.times, &estimates).unwrap();
    assert_eq!(tp.len(), 26);
    assert!(tp.values[0] < 1e-4 && un.values[0] < 1e-4);
    let late = un.times.iter().position(|&t| t >= 1.0).unwrap();
    assert!(un.values[late..].iter().all(|&v| v > 0.3));

    let curves = trace_distance_series(&rec.times, &estimates, &rec.initial.states, &eq).unwrap();
    assert_eq!(curves.len(), 20);
    for c in curves {
        assert!(c.values.last().unwrap() < &c.values[0]);
    }
}

#[test]
fn seeded_noise_reconstruction_is_repeatable() {
    let params = SpinSystemParams::default();
    let times = log_time_grid(3, 0.1, 10.0);
    let noise = NoiseSpec::gaussian(1e-3, 7);
    let basis = build_operator_basis(&build_mub_preparations()).unwrap();
    let run = || {
        let ds = generate_dataset(&params, &RelaxationParams::default(), &noise, &times).unwrap();
        run_full_reconstruction(&ds, &basis, &ReconstructionConfig { jobs: 3, ..Default::default() }).unwrap()
    };
    let (a, b) = (run(), run());
    for (x, y) in a.successful().unwrap().iter().zip(b.successful().unwrap()) {
        assert_eq!(x.choi, y.choi);
        assert_eq!(x.residuals, y.residuals);
    }
}
