use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::obj::{read_obj, write_obj};
use super::raster::{read_mask_png, write_mask_png};
use crate::composition::CandidateSpec;
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Mask, PoseTransform, TriangleMesh};
use crate::layout::{LayoutPlane, PixelLabelProbs};

pub const SCHEMA_VERSION: u32 = 1;

/// An object placed in a scene. Mesh and region are stored in side files
/// named by the `*_ref` paths, relative to the scene file.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneObject {
    pub id: u64,
    pub mesh_ref: String,
    pub mesh: TriangleMesh,
    pub pose: PoseTransform,
    pub class_id: usize,
    pub region_ref: Option<String>,
    pub region: Option<Mask>,
}

/// Camera, layout surfaces and posed objects, in meters and in the camera
/// frame, with optional references to per-pixel inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneFile {
    pub camera: CameraIntrinsics,
    pub layouts: Vec<LayoutPlane>,
    pub objects: Vec<SceneObject>,
    /// Observed depth (PFM).
    pub depth_ref: Option<String>,
    /// Object probability map (PFM).
    pub p_object_ref: Option<String>,
    /// Per-pixel layout label probabilities (JSON).
    pub labels_ref: Option<String>,
}

impl SceneFile {
    pub fn new(camera: CameraIntrinsics) -> Self {
        SceneFile {
            camera,
            layouts: Vec::new(),
            objects: Vec::new(),
            depth_ref: None,
            p_object_ref: None,
            labels_ref: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        for l in &self.layouts {
            l.validate()?;
        }
        for o in &self.objects {
            o.pose.validate()?;
            if let Some(r) = &o.region {
                r.check_same_size(self.camera.width, self.camera.height)?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneRecord {
    schema_version: u32,
    units: String,
    frame: String,
    camera: CameraIntrinsics,
    layouts: Vec<LayoutPlane>,
    objects: Vec<ObjectRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_object: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectRecord {
    id: u64,
    mesh: String,
    pose: PoseTransform,
    class_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    region: Option<String>,
}

/// A candidate pool entry with the side-file names of its mesh and region.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolEntry {
    pub spec: CandidateSpec,
    pub mesh_ref: String,
    pub region_ref: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidatePool {
    pub entries: Vec<PoolEntry>,
}

impl CandidatePool {
    pub fn specs(&self) -> Vec<CandidateSpec> {
        self.entries.iter().map(|e| e.spec.clone()).collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolRecord {
    schema_version: u32,
    candidates: Vec<CandidateRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateRecord {
    id: u64,
    mesh: String,
    pose: PoseTransform,
    region: String,
    class_id: usize,
    class_probs: Vec<f64>,
    non_object_prob: f64,
    fitting_energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support_height: Option<f64>,
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Resolves a side-file reference relative to the file that names it.
pub fn resolve(from: &Path, reference: &str) -> PathBuf {
    base_dir(from).join(reference)
}

fn parse_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn check_version(path: &Path, version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::parse(
            path,
            0,
            format!("unsupported schema version {version} (expected {SCHEMA_VERSION})"),
        ));
    }
    Ok(())
}

/// Loads each referenced side file once.
struct SideFiles<'a> {
    from: &'a Path,
    meshes: BTreeMap<String, TriangleMesh>,
    masks: BTreeMap<String, Mask>,
}

impl<'a> SideFiles<'a> {
    fn new(from: &'a Path) -> Self {
        SideFiles {
            from,
            meshes: BTreeMap::new(),
            masks: BTreeMap::new(),
        }
    }

    fn existing(&self, reference: &str) -> Result<PathBuf> {
        let p = resolve(self.from, reference);
        if !p.is_file() {
            return Err(Error::UnresolvedReference {
                reference: reference.to_string(),
                from: self.from.to_path_buf(),
            });
        }
        Ok(p)
    }

    fn mesh(&mut self, reference: &str) -> Result<TriangleMesh> {
        if let Some(m) = self.meshes.get(reference) {
            return Ok(m.clone());
        }
        let m = read_obj(&self.existing(reference)?)?;
        self.meshes.insert(reference.to_string(), m.clone());
        Ok(m)
    }

    fn mask(&mut self, reference: &str) -> Result<Mask> {
        if let Some(m) = self.masks.get(reference) {
            return Ok(m.clone());
        }
        let m = read_mask_png(&self.existing(reference)?)?;
        self.masks.insert(reference.to_string(), m.clone());
        Ok(m)
    }
}

/// Writes side files, refusing to write two different payloads to one name.
struct SideWriter<'a> {
    to: &'a Path,
    meshes: BTreeMap<String, &'a TriangleMesh>,
    masks: BTreeMap<String, &'a Mask>,
}

impl<'a> SideWriter<'a> {
    fn new(to: &'a Path) -> Self {
        SideWriter {
            to,
            meshes: BTreeMap::new(),
            masks: BTreeMap::new(),
        }
    }

    fn target(&self, reference: &str) -> Result<PathBuf> {
        let p = resolve(self.to, reference);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        Ok(p)
    }

    fn mesh(&mut self, reference: &str, mesh: &'a TriangleMesh) -> Result<()> {
        match self.meshes.get(reference) {
            Some(m) if *m == mesh => Ok(()),
            Some(_) => Err(Error::InvalidInput(format!(
                "mesh reference `{reference}` names two different meshes"
            ))),
            None => {
                write_obj(mesh, &self.target(reference)?)?;
                self.meshes.insert(reference.to_string(), mesh);
                Ok(())
            }
        }
    }

    fn mask(&mut self, reference: &str, mask: &'a Mask) -> Result<()> {
        match self.masks.get(reference) {
            Some(m) if *m == mask => Ok(()),
            Some(_) => Err(Error::InvalidInput(format!(
                "mask reference `{reference}` names two different masks"
            ))),
            None => {
                write_mask_png(mask, &self.target(reference)?)?;
                self.masks.insert(reference.to_string(), mask);
                Ok(())
            }
        }
    }
}

pub fn load_scene(path: &Path) -> Result<SceneFile> {
    let rec: SceneRecord = parse_json(path)?;
    check_version(path, rec.schema_version)?;
    if rec.units != "meters" || rec.frame != "camera" {
        return Err(Error::parse(
            path,
            0,
            format!(
                "expected units `meters` and frame `camera`, found `{}` / `{}`",
                rec.units, rec.frame
            ),
        ));
    }
    let mut side = SideFiles::new(path);
    let mut objects = Vec::with_capacity(rec.objects.len());
    for o in rec.objects {
        let region = o.region.as_deref().map(|r| side.mask(r)).transpose()?;
        objects.push(SceneObject {
            id: o.id,
            mesh: side.mesh(&o.mesh)?,
            mesh_ref: o.mesh,
            pose: o.pose,
            class_id: o.class_id,
            region_ref: o.region,
            region,
        });
    }
    let scene = SceneFile {
        camera: rec.camera,
        layouts: rec.layouts,
        objects,
        depth_ref: rec.depth,
        p_object_ref: rec.p_object,
        labels_ref: rec.labels,
    };
    scene.validate().map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(scene)
}

/// Writes the scene file and its mesh and mask side files. Files named by
/// `depth_ref`, `p_object_ref` and `labels_ref` are not written.
pub fn save_scene(scene: &SceneFile, path: &Path) -> Result<()> {
    scene.validate()?;
    let mut side = SideWriter::new(path);
    for o in &scene.objects {
        side.mesh(&o.mesh_ref, &o.mesh)?;
        match (&o.region_ref, &o.region) {
            (Some(r), Some(m)) => side.mask(r, m)?,
            (None, None) => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "object {}: region and region reference must be given together",
                    o.id
                )))
            }
        }
    }
    let rec = SceneRecord {
        schema_version: SCHEMA_VERSION,
        units: "meters".into(),
        frame: "camera".into(),
        camera: scene.camera,
        layouts: scene.layouts.clone(),
        objects: scene
            .objects
            .iter()
            .map(|o| ObjectRecord {
                id: o.id,
                mesh: o.mesh_ref.clone(),
                pose: o.pose,
                class_id: o.class_id,
                region: o.region_ref.clone(),
            })
            .collect(),
        depth: scene.depth_ref.clone(),
        p_object: scene.p_object_ref.clone(),
        labels: scene.labels_ref.clone(),
    };
    write_json(&rec, path)
}

pub fn load_pool(path: &Path) -> Result<CandidatePool> {
    let rec: PoolRecord = parse_json(path)?;
    check_version(path, rec.schema_version)?;
    let mut side = SideFiles::new(path);
    let mut entries = Vec::with_capacity(rec.candidates.len());
    for c in rec.candidates {
        let spec = CandidateSpec {
            id: c.id,
            mesh: side.mesh(&c.mesh)?,
            pose: c.pose,
            region: side.mask(&c.region)?,
            class_id: c.class_id,
            class_probs: c.class_probs,
            non_object_prob: c.non_object_prob,
            fitting_energy: c.fitting_energy,
            support_height: c.support_height,
        };
        spec.validate().map_err(|e| Error::parse(path, 0, e.to_string()))?;
        entries.push(PoolEntry {
            spec,
            mesh_ref: c.mesh,
            region_ref: c.region,
        });
    }
    Ok(CandidatePool { entries })
}

pub fn save_pool(pool: &CandidatePool, path: &Path) -> Result<()> {
    let mut side = SideWriter::new(path);
    for e in &pool.entries {
        e.spec.validate()?;
        side.mesh(&e.mesh_ref, &e.spec.mesh)?;
        side.mask(&e.region_ref, &e.spec.region)?;
    }
    let rec = PoolRecord {
        schema_version: SCHEMA_VERSION,
        candidates: pool
            .entries
            .iter()
            .map(|e| CandidateRecord {
                id: e.spec.id,
                mesh: e.mesh_ref.clone(),
                pose: e.spec.pose,
                region: e.region_ref.clone(),
                class_id: e.spec.class_id,
                class_probs: e.spec.class_probs.clone(),
                non_object_prob: e.spec.non_object_prob,
                fitting_energy: e.spec.fitting_energy,
                support_height: e.spec.support_height,
            })
            .collect(),
    };
    write_json(&rec, path)
}

pub fn load_labels(path: &Path) -> Result<PixelLabelProbs> {
    let labels: PixelLabelProbs = parse_json(path)?;
    labels.validate().map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(labels)
}

pub fn save_labels(labels: &PixelLabelProbs, path: &Path) -> Result<()> {
    labels.validate()?;
    write_json(labels, path)
}

/// Reads any JSON document with parse diagnostics.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(path)
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_json(value, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::Category;
    use nalgebra::Vector3;

    fn scene() -> SceneFile {
        let k = CameraIntrinsics::from_fov(16, 12, 60.0).unwrap();
        let mut s = SceneFile::new(k);
        s.layouts.push(LayoutPlane::unbounded(Category::Floor, 1.25));
        s.objects.push(SceneObject {
            id: 3,
            mesh_ref: "meshes/box.obj".into(),
            mesh: TriangleMesh::standing_box(0.4, 0.3, 0.7),
            pose: PoseTransform::new(0.3, 0.9, Vector3::new(0.1, 1.25, 3.0)).unwrap(),
            class_id: 2,
            region_ref: Some("masks/box.png".into()),
            region: Some(Mask::from_fn(16, 12, |u, v| u > v)),
        });
        s.depth_ref = Some("depth.pfm".into());
        s
    }

    #[test]
    fn scene_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scene.json");
        let s = scene();
        save_scene(&s, &p).unwrap();
        assert_eq!(load_scene(&p).unwrap(), s);
    }

    #[test]
    fn empty_scene_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scene.json");
        let s = SceneFile::new(CameraIntrinsics::from_fov(8, 8, 60.0).unwrap());
        save_scene(&s, &p).unwrap();
        assert!(load_scene(&p).unwrap().objects.is_empty());
    }

    #[test]
    fn truncated_scene_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scene.json");
        save_scene(&scene(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        std::fs::write(&p, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_scene(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_side_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scene.json");
        save_scene(&scene(), &p).unwrap();
        std::fs::remove_file(dir.path().join("meshes/box.obj")).unwrap();
        assert!(matches!(load_scene(&p), Err(Error::UnresolvedReference { .. })));
    }

    #[test]
    fn unknown_fields_are_rejected_with_a_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scene.json");
        save_scene(&scene(), &p).unwrap();
        let text = std::fs::read_to_string(&p)
            .unwrap()
            .replacen("\"units\"", "\"unit\"", 1);
        std::fs::write(&p, text).unwrap();
        match load_scene(&p) {
            Err(Error::Parse { line, msg, .. }) => {
                assert!(line > 0);
                assert!(msg.contains("unit"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
