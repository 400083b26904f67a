//! Synthetic instances and the image denoising pipeline.

pub mod dct;
pub mod denoise;
pub mod image;
pub mod synthetic;

pub use denoise::{build_denoise_problem, restore_image, table_lambda, test_scene, DenoiseProblem, DenoiseSpec};
pub use image::{
    add_noise, extract_patches, pgm_read, pgm_write, psnr, reconstruct, GrayImage, ImageError,
    PatchGrid,
};
pub use synthetic::{gen_synthetic, synthetic_init, SyntheticData, SyntheticSpec};
