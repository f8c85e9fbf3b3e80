//! Level-of-detail evaluation, grid rendering, contour and surface
//! extraction, and quality metrics.

mod contour;
mod export;
mod level;
mod mc_table;
mod metrics;
mod report;
mod surface;

pub use contour::{marching_squares, sample_polylines, total_length, Polyline};
pub use export::{mesh_to_obj, polylines_to_obj, write_text};
pub use level::{
    cell_centre, eval_lod, grid_points, lod_from_outputs, render_grid, Field, LodLevel,
};
pub use metrics::{
    chamfer_and_normals, psnr, psnr_values, ssim, ssim_plane, OrientedPoints, PSNR_CAP, SSIM_WINDOW,
};
pub use report::{
    image_report, sdf_report, shape_samples, zero_set_samples, LevelMetrics, MetricReport,
    SdfEvalOptions,
};
pub use surface::{marching_cubes, Mesh};
