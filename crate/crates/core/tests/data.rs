mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use repgame::data::{
    gaussian_samples, labels_from_placements, make_covariance, read_matrix_csv, shapes_dataset, stamp,
    write_matrix_csv, write_pgm, write_vector_csv, ShapesConfig, SpectrumSpec, SHAPE_NAMES,
};

/// `1 - (5/6)^4`: a shape appears unless all four draws miss it.
const MARGINAL: f64 = 1.0 - 625.0 / 1296.0;

#[test]
fn shape_marginals_match_independent_draws() {
    let ds = shapes_dataset(&ShapesConfig::new(10_000, 1)).unwrap();
    for j in 0..SHAPE_NAMES.len() {
        let rate = ds.labels.column(j).iter().filter(|&&y| y > 0.0).count() as f64 / 10_000.0;
        assert!((rate - MARGINAL).abs() < 0.02, "{}: {rate}", SHAPE_NAMES[j]);
    }
}

#[test]
fn every_image_has_one_to_four_shapes() {
    let ds = shapes_dataset(&ShapesConfig::new(2000, 2)).unwrap();
    for row in ds.labels.row_iter() {
        let positives = row.iter().filter(|&&y| y > 0.0).count();
        assert!((1..=4).contains(&positives));
        assert!(row.iter().all(|&y| y == 1.0 || y == -1.0));
    }
}

#[test]
fn labels_follow_the_placement_log() {
    let cfg = ShapesConfig::new(500, 3);
    let ds = shapes_dataset(&cfg).unwrap();
    assert_eq!(labels_from_placements(&ds.placements, cfg.dictionary_size()), ds.labels);
    // every logged stamp is visible in its rectangle
    let side = cfg.image_side;
    for (n, log) in ds.placements.iter().enumerate() {
        assert_eq!(log.len(), cfg.shapes_per_image);
        for p in log {
            let (h, w, mask) = stamp(p.shape);
            assert!(p.row + h <= side && p.col + w <= side);
            for i in 0..h {
                for j in 0..w {
                    if mask[i * w + j] {
                        assert_eq!(ds.images[(n, (p.row + i) * side + p.col + j)], 1.0);
                    }
                }
            }
        }
    }
    let functions = ds.label_functions();
    assert_eq!(functions.len(), 6);
    assert_eq!(functions[2][7], ds.labels[(7, 2)]);
}

#[test]
fn shapes_are_reproducible_per_seed() {
    let a = shapes_dataset(&ShapesConfig::new(50, 9)).unwrap();
    let b = shapes_dataset(&ShapesConfig::new(50, 9)).unwrap();
    let c = shapes_dataset(&ShapesConfig::new(50, 10)).unwrap();
    assert_eq!(a.images, b.images);
    assert_eq!(a.placements, b.placements);
    assert_ne!(a.images, c.images);
}

#[test]
fn pixels_are_binary() {
    let ds = shapes_dataset(&ShapesConfig::new(200, 4)).unwrap();
    assert_eq!(ds.images.ncols(), 625);
    assert!(ds.images.iter().all(|&v| v == 0.0 || v == 1.0));
    assert!(ds.images.row_iter().all(|r| r.sum() > 0.0));
}

#[test]
fn stamps_have_the_expected_footprints() {
    let sizes: Vec<(usize, usize, usize)> = (0..6)
        .map(|k| {
            let (h, w, m) = stamp(k);
            (h, w, m.iter().filter(|&&b| b).count())
        })
        .collect();
    assert_eq!(sizes, vec![(5, 5, 25), (7, 7, 24), (7, 7, 29), (7, 7, 13), (7, 7, 13), (3, 9, 27)]);
}

#[test]
fn invalid_shape_configs_are_rejected() {
    let mut cfg = ShapesConfig::new(10, 0);
    cfg.image_side = 8;
    assert!(shapes_dataset(&cfg).is_err());
    assert!(shapes_dataset(&ShapesConfig::new(0, 0)).is_err());
}

#[test]
fn spectra_follow_their_specs() {
    let mut g = common::rng(0);
    let pl = make_covariance(&SpectrumSpec::power_law(1.5, 5), &mut g).unwrap();
    for i in 0..5 {
        assert!((pl.matrix()[(i, i)] - ((i + 1) as f64).powf(-1.5)).abs() < 1e-15);
    }
    let ln = SpectrumSpec::log_normal(1.0, 200).diagonal(&mut g).unwrap();
    assert!(ln.windows(2).all(|w| w[0] >= w[1]));
    let mean_log = ln.iter().map(|v| v.ln()).sum::<f64>() / 200.0;
    assert!(mean_log.abs() < 0.25, "{mean_log}");
    assert!(SpectrumSpec::power_law(-1.0, 3).diagonal(&mut g).is_err());
    assert!(SpectrumSpec::power_law(1.0, 0).diagonal(&mut g).is_err());
}

#[test]
fn gaussian_samples_have_the_requested_covariance() {
    let mut g = common::rng(1);
    let sigma = common::random_spd(4, &mut g);
    let data = gaussian_samples(4, 40_000, &sigma, &mut g).unwrap();
    let err = (data.second_moment() - sigma.matrix()).norm() / sigma.matrix().norm();
    assert!(err < 0.05, "{err}");
    assert!(gaussian_samples(3, 10, &sigma, &mut g).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matrix_csv_round_trips(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
        let mut g = common::rng(seed);
        let m = common::gaussian_matrix(rows, cols, &mut g) * 1e3;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &m).unwrap();
        prop_assert_eq!(read_matrix_csv(&path).unwrap(), m);
    }
}

#[test]
fn csv_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1,2\n3\n").unwrap();
    assert!(read_matrix_csv(&ragged).unwrap_err().to_string().contains(":2"));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,x\n").unwrap();
    assert!(read_matrix_csv(&bad).is_err());
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert!(read_matrix_csv(&empty).is_err());

    let v = DVector::from_vec(vec![0.1, -2.5, 3.0]);
    let path = dir.path().join("v.csv");
    write_vector_csv(&path, &v).unwrap();
    assert_eq!(read_matrix_csv(&path).unwrap(), DMatrix::from_column_slice(3, 1, v.as_slice()));
}

#[test]
fn pgm_header_and_size() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img.pgm");
    let ds = shapes_dataset(&ShapesConfig::new(1, 5)).unwrap();
    write_pgm(&path, ds.images.row(0).transpose().as_slice(), 25).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"P5\n25 25\n255\n"));
    assert_eq!(bytes.len(), 13 + 625);
    assert!(write_pgm(&path, &[0.0; 10], 25).is_err());
}
