use qvic::analytic::{vacuum_greens, Vec3};
use qvic::fdtd::{
    calibrate, greens_field, greens_field_in, rasterize, BlockIndex, CellBox, FdtdConfig,
    GreensOptions, Medium, Region, VoxelGeometry,
};
use qvic::units::{length, vacuum_im_g, OMEGA0};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn vacuum_centre_source_is_symmetric_under_x_y_swap() {
    let config = FdtdConfig::default();
    let medium = Medium::vacuum(&config);
    let cells = CellBox::new([30, 30, 33], [42, 42, 39]);
    let options = GreensOptions {
        axes: [false, false, true],
        cells: Some(cells),
        calibrated: false,
        ..GreensOptions::default()
    };
    let g = greens_field_in(&medium, [0.0; 3], &config, &options).unwrap();
    let scale = g.values.iter().map(|m| m.max_abs()).fold(0.0, f64::max);
    for c in cells.iter() {
        let a = g.at_cell(c).unwrap();
        let b = g.at_cell([c[1], c[0], c[2]]).unwrap();
        assert!((a[(0, 2)] - b[(1, 2)]).norm() <= 1e-12 * scale);
        assert!((a[(2, 2)] - b[(2, 2)]).norm() <= 1e-12 * scale);
    }
}

#[test]
fn reciprocity_in_random_block_geometry() {
    let config = FdtdConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut geometry = VoxelGeometry::new(Region::default(), true, 0.7627).unwrap();
    while geometry.len() < 25 {
        let b = BlockIndex::new(rng.gen_range(0..18), rng.gen_range(0..18), 0);
        if !geometry.is_occupied(b) {
            geometry.place(b).unwrap();
        }
    }
    let medium = rasterize(&geometry, &config).unwrap();
    let points: Vec<[f64; 3]> = (0..5)
        .map(|_| [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2), rng.gen_range(0.2..1.2)])
        .collect();
    let fields: Vec<_> = points
        .iter()
        .map(|&p| {
            let options = GreensOptions {
                probes: points.clone(),
                ..GreensOptions::default()
            };
            greens_field_in(&medium, p, &config, &options).unwrap()
        })
        .collect();
    let mut pairs = 0;
    for a in 0..points.len() {
        for b in 0..points.len() {
            if a == b {
                continue;
            }
            // G(r_b, r_a) against G(r_a, r_b)ᵀ.
            let gba = fields[a].probes[b];
            let gab = fields[b].probes[a];
            let scale = gba.max_abs();
            assert!(
                (gba - gab.transpose()).max_abs() < 1e-5 * scale,
                "pair {a},{b}: {:e} vs {scale:e}",
                (gba - gab.transpose()).max_abs()
            );
            pairs += 1;
        }
    }
    assert_eq!(pairs, 20);
}

#[test]
fn greens_field_is_bitwise_identical_across_thread_counts() {
    let config = FdtdConfig::with_resolution(8);
    let mut geometry = VoxelGeometry::new(Region::default(), true, 0.7627).unwrap();
    geometry.place(BlockIndex::new(8, 9, 0)).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| greens_field(&geometry, &config).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.at_atom, b.at_atom);
    assert_eq!(a.values, b.values);
    assert_eq!(a.steps, b.steps);
}

#[test]
fn calibrated_vacuum_trace_is_exact_and_stable() {
    let config = FdtdConfig::default();
    let f1 = calibrate(&config).unwrap();
    let medium = Medium::vacuum(&config);
    let g = greens_field_in(&medium, [0.0; 3], &config, &GreensOptions::default()).unwrap();
    assert_eq!(g.calibration, f1);
    assert!((g.at_atom.trace().im - 1.0).abs() < 1e-12);
    // A fresh uncached computation reproduces the factor bitwise.
    let raw = greens_field_in(
        &medium,
        [0.0; 3],
        &config,
        &GreensOptions {
            calibrated: false,
            ..GreensOptions::default()
        },
    )
    .unwrap();
    assert_eq!(3.0 * vacuum_im_g(OMEGA0) / raw.at_atom.trace().im, f1);
}

#[test]
fn calibration_is_resolution_stable() {
    let f12 = calibrate(&FdtdConfig::default()).unwrap();
    let f24 = calibrate(&FdtdConfig::with_resolution(24)).unwrap();
    assert!(((f24 - f12) / f12).abs() < 0.05, "{f12} vs {f24}");
}

#[test]
fn vacuum_field_matches_analytic_away_from_source() {
    let config = FdtdConfig::default();
    let medium = Medium::vacuum(&config);
    let atom = [0.0, 0.0, length(0.7627)];
    let cells = CellBox::new([20, 20, 30], [52, 52, 32]);
    let options = GreensOptions {
        cells: Some(cells),
        ..GreensOptions::default()
    };
    let g = greens_field_in(&medium, atom, &config, &options).unwrap();
    let r0 = Vec3::from(atom);
    let mut worst: f64 = 0.0;
    for c in cells.iter() {
        let p = Vec3::from(medium.lattice.cell_centre(c));
        let d = (p - r0).norm();
        if !(0.5..1.3).contains(&d) {
            continue;
        }
        let exact = vacuum_greens(&p, &r0, OMEGA0).unwrap();
        let err = (*g.at_cell(c).unwrap() - exact).max_abs() / exact.max_abs();
        worst = worst.max(err);
    }
    // Residual lattice dispersion off the compensated axes at 12 ppw.
    assert!(worst < 0.08, "worst relative error {worst}");
}
