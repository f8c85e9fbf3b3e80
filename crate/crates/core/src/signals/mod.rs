//! Training signals: images, analytic signed distance fields and their samplers.

mod image;
mod sampler;
mod sdf;

pub use image::{
    add_gaussian_noise, grid_coords, image_coords, load_image, nearest_pixel, save_png, ImageSignal,
};
pub use sampler::{
    sample_sdf_batch, sdf_split, ImageSampler, SampleBatch, SdfSampler, FULL_BATCH_PIXELS,
    IMAGE_MINIBATCH, NEAR_SURFACE_SIGMA,
};
pub use sdf::SdfShape;
