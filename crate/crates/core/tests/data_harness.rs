use ipad_core::data::dct::overcomplete_dct;
use ipad_core::data::image::{pgm_read, pgm_write, ImageError, PatchGrid, PATCH};
use ipad_core::data::{add_noise, extract_patches, gen_synthetic, psnr, reconstruct, GrayImage, SyntheticSpec};
use ipad_core::inner::project_unit_columns;
use proptest::prelude::*;

fn image_strategy() -> impl Strategy<Value = GrayImage> {
    (8usize..40, 8usize..40).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h).prop_map(move |px| GrayImage::new(w, h, px).unwrap())
    })
}

/// Pairs of equal-size images with pixels in `[0, 200]`, so shifts up to 55
/// stay inside the 8-bit range.
fn image_pair() -> impl Strategy<Value = (GrayImage, GrayImage)> {
    (1usize..30, 1usize..30).prop_flat_map(|(w, h)| {
        let px = proptest::collection::vec(0u8..=200, w * h);
        (px.clone(), px).prop_map(move |(a, b)| (GrayImage::new(w, h, a).unwrap(), GrayImage::new(w, h, b).unwrap()))
    })
}

fn shifted(img: &GrayImage, by: u8) -> GrayImage {
    GrayImage::new(img.width, img.height, img.pixels.iter().map(|p| p + by).collect()).unwrap()
}

proptest! {
    #[test]
    fn untouched_patches_reconstruct_the_image(img in image_strategy(), stride in 1usize..16) {
        let (patches, grid) = extract_patches(&img, stride).unwrap();
        prop_assert_eq!(reconstruct(&patches, &grid).unwrap(), img);
    }

    #[test]
    fn patches_are_row_major_windows(img in image_strategy(), stride in 1usize..10) {
        let (patches, grid) = extract_patches(&img, stride).unwrap();
        for (row, (r, c)) in patches.rows().into_iter().zip(grid.origins()) {
            for k in 0..PATCH * PATCH {
                prop_assert_eq!(row[k], img.get(r + k / PATCH, c + k % PATCH) as f64);
            }
        }
    }

    #[test]
    fn patch_count_follows_the_grid_formula(a in 0usize..12, b in 0usize..12, stride in 1usize..=8) {
        let (w, h) = (8 + a * stride, 8 + b * stride);
        prop_assert_eq!(PatchGrid::new(w, h, stride).unwrap().count(), (a + 1) * (b + 1));
    }

    #[test]
    fn psnr_is_symmetric((a, b) in image_pair()) {
        prop_assert_eq!(psnr(&a, &b).unwrap().to_bits(), psnr(&b, &a).unwrap().to_bits());
    }

    #[test]
    fn psnr_ignores_a_common_shift((a, b) in image_pair(), by in 0u8..=55) {
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&shifted(&a, by), &shifted(&b, by)).unwrap());
    }
}

#[test]
fn psnr_of_a_constant_offset() {
    let a = GrayImage::filled(10, 7, 100);
    for d in [1u8, 5, 16, 100, 155] {
        let b = GrayImage::filled(10, 7, 100 + d);
        let want = 20.0 * (255.0 / d as f64).log10();
        assert!((psnr(&a, &b).unwrap() - want).abs() < 1e-12, "offset {d}");
    }
    let black = GrayImage::filled(3, 3, 0);
    assert_eq!(psnr(&black, &GrayImage::filled(3, 3, 255)).unwrap(), 0.0);
    assert_eq!(psnr(&black, &black).unwrap(), 99.0);
}

#[test]
fn psnr_rejects_mismatched_sizes() {
    let err = psnr(&GrayImage::filled(8, 8, 0), &GrayImage::filled(8, 9, 0)).unwrap_err();
    assert!(matches!(err, ImageError::Dimensions(_)));
}

#[test]
fn sigma_twenty_on_mid_gray_gives_the_expected_psnr() {
    let gray = GrayImage::filled(256, 256, 128);
    let want = 10.0 * (255.0f64 * 255.0 / 400.0).log10();
    assert!((want - 22.11).abs() < 0.01);
    for seed in 0..8 {
        let noisy = add_noise(&gray, 20.0, seed);
        let got = psnr(&gray, &noisy).unwrap();
        assert!((got - want).abs() <= 0.3, "seed {seed}: {got} dB");
        let mean = noisy.pixels.iter().map(|p| *p as f64).sum::<f64>() / noisy.pixels.len() as f64;
        assert!((mean - 128.0).abs() < 0.5, "seed {seed}: mean {mean}");
    }
}

#[test]
fn noise_is_seeded() {
    let gray = GrayImage::filled(32, 32, 90);
    assert_eq!(add_noise(&gray, 15.0, 4), add_noise(&gray, 15.0, 4));
    assert_ne!(add_noise(&gray, 15.0, 4), add_noise(&gray, 15.0, 5));
    assert_eq!(add_noise(&gray, 0.0, 4), gray);
}

#[test]
fn published_patch_counts() {
    assert_eq!(PatchGrid::new(512, 512, 1).unwrap().count(), 255_025);
    assert_eq!(PatchGrid::new(128, 128, 4).unwrap().count(), 961);
    let (patches, _) = extract_patches(&GrayImage::filled(128, 128, 3), 4).unwrap();
    assert_eq!(patches.dim(), (961, 64));
}

#[test]
fn too_small_images_are_rejected() {
    for (w, h) in [(7, 8), (8, 7), (0, 0)] {
        let img = GrayImage::filled(w, h, 0);
        assert!(matches!(extract_patches(&img, 1), Err(ImageError::TooSmall { .. })), "{w}x{h}");
    }
}

#[test]
fn pgm_files_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ramp.pgm");
    let pixels = (0..37 * 11).map(|i| (i * 29 % 256) as u8).collect();
    let img = GrayImage::new(37, 11, pixels).unwrap();
    pgm_write(&img, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"P5\n37 11\n255\n"));
    assert_eq!(bytes.len(), b"P5\n37 11\n255\n".len() + 37 * 11);
    assert_eq!(pgm_read(&path).unwrap(), img);
}

#[test]
fn pgm_reader_signals_each_failure_distinctly() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, bytes: &[u8]| {
        let p = dir.path().join(name);
        std::fs::write(&p, bytes).unwrap();
        p
    };
    let ascii = write("ascii.pgm", b"P2\n2 1\n255\n0 0\n");
    assert!(matches!(pgm_read(ascii), Err(ImageError::UnsupportedFormat(m)) if m == "P2"));
    let deep = write("deep.pgm", b"P5\n1 1\n1023\n\0\0");
    assert!(matches!(pgm_read(deep), Err(ImageError::MaxVal(1023))));
    let short = write("short.pgm", b"P5\n3 3\n255\n\x01\x02\x03");
    assert!(matches!(pgm_read(short), Err(ImageError::Truncated { expected: 9, found: 3 })));
    assert!(matches!(pgm_read(dir.path().join("missing.pgm")), Err(ImageError::Io(_))));
}

#[test]
fn synthetic_instances_have_the_published_shapes() {
    let spec = SyntheticSpec { seed: 3, ..SyntheticSpec::default() };
    assert_eq!((spec.n, spec.m, spec.p), (64, 600, 4000));
    let s = gen_synthetic(&spec).unwrap();
    assert_eq!(s.instance.data().dim(), (64, 4000));
    assert_eq!(s.d_true.dim(), (64, 600));
    assert_eq!(s.w_true.dim(), (4000, 600));
    assert_eq!(project_unit_columns(&s.d_true), s.d_true);
    for row in s.w_true.rows() {
        assert_eq!(row.iter().filter(|v| **v != 0.0).count(), spec.k);
    }
}

#[test]
fn noiseless_synthetic_data_is_the_product_of_the_truth() {
    let spec = SyntheticSpec { n: 16, m: 40, p: 300, k: 5, noise_sigma: 0.0, seed: 8, ..SyntheticSpec::default() };
    let s = gen_synthetic(&spec).unwrap();
    let mut worst = 0.0f64;
    for i in 0..spec.n {
        for j in 0..spec.p {
            let model: f64 = (0..spec.m).map(|k| s.d_true[[i, k]] * s.w_true[[j, k]]).sum();
            worst = worst.max((s.instance.data()[[i, j]] - model).abs());
        }
    }
    assert!(worst < 1e-12, "{worst}");
    assert_eq!(s.w_true.iter().filter(|v| **v != 0.0).count(), 5 * spec.p);
}

#[test]
fn synthetic_generation_is_a_pure_function_of_the_spec() {
    let spec = SyntheticSpec { n: 12, m: 30, p: 80, seed: 21, ..SyntheticSpec::default() };
    let a = gen_synthetic(&spec).unwrap();
    let b = gen_synthetic(&spec).unwrap();
    assert!(a.instance.data().iter().zip(b.instance.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.d_true, b.d_true);
    assert_eq!(a.w_true, b.w_true);
    let c = gen_synthetic(&SyntheticSpec { seed: 22, ..spec }).unwrap();
    assert_ne!(a.d_true, c.d_true);
}

#[test]
fn invalid_synthetic_specs_are_rejected() {
    let base = SyntheticSpec { n: 4, m: 6, p: 10, k: 2, ..SyntheticSpec::default() };
    assert!(gen_synthetic(&SyntheticSpec { k: 7, ..base.clone() }).is_err());
    assert!(gen_synthetic(&SyntheticSpec { n: 0, ..base.clone() }).is_err());
    assert!(gen_synthetic(&SyntheticSpec { noise_sigma: -1.0, ..base }).is_err());
}

#[test]
fn dct_dictionary_has_unit_atoms() {
    let d = overcomplete_dct(8, 256).unwrap();
    assert_eq!(d.dim(), (64, 256));
    for c in d.columns() {
        assert!((c.dot(&c).sqrt() - 1.0).abs() < 1e-12);
    }
}
