//! File formats: OBJ meshes, PFM and 16-bit PNG depth, PNG masks, and the
//! JSON scene, candidate pool and label files.

mod obj;
mod raster;
mod scene;

pub use obj::{format_obj, parse_obj, read_obj, write_obj};
pub use raster::{
    read_mask_png, read_pfm_depth, read_pfm_prob, read_png16_depth, write_mask_png, write_pfm_depth, write_pfm_prob,
    write_png16_depth,
};
pub use scene::{
    load_json, load_labels, load_pool, load_scene, resolve, save_json, save_labels, save_pool, save_scene,
    CandidatePool, PoolEntry, SceneFile, SceneObject, SCHEMA_VERSION,
};
