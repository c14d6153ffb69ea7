//! Dataset manifests, the synthetic turntable generator and model files.

mod container;
mod manifest;
mod synthetic;

pub use container::{load_model, save_model, ModelContainer, Provenance, CONTAINER_VERSION};
pub use manifest::{
    load_manifest, parse_manifest, DatasetManifest, Media, Record, Split, MANIFEST_VERSION,
};
pub use synthetic::{
    generate_synthetic, render_fourier_view, rotating_bar_image, synthetic_bases,
    write_rotating_bar_dataset, SyntheticSpec,
};
