//! Pinhole raycaster over the box world.
//!
//! Every solid is an axis-aligned box with a flat colour; target markers are
//! alpha-blended spheres that never occlude and never write depth. Depth is
//! the distance along the camera's viewing axis (z-depth), with
//! [`FAR`] written for rays that hit nothing.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3, TABLE_CENTRE};
use crate::sim::WorldState;

pub const NEAR: f64 = 0.01;
pub const FAR: f64 = 10.0;
pub const VERTICAL_FOV_DEG: f64 = 60.0;
pub const MARKER_RADIUS: f64 = 0.025;
/// Offset of the on-hand camera eye from the tip, world-aligned.
pub const ONHAND_OFFSET: Vec3 = Vec3::new(0.0, -0.05, 0.05);
pub const DEFAULT_SIZE: u32 = 128;

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [235, 235, 235];
pub const TABLE_COLOR: Rgb = [150, 110, 70];
pub const CHEST_COLOR: Rgb = [110, 80, 50];
pub const DOOR_COLOR: Rgb = [0, 0, 0];
pub const GRIPPER_COLOR: Rgb = [90, 90, 90];
pub const BLOCK_COLORS: [Rgb; 5] = [
    [220, 50, 50],
    [50, 160, 60],
    [50, 80, 220],
    [230, 200, 40],
    [160, 60, 200],
];
pub const TIP_MARKER_COLOR: Rgb = [255, 0, 0];

pub fn block_color(i: usize) -> Rgb {
    BLOCK_COLORS[i % BLOCK_COLORS.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    #[serde(rename = "cameraEyePosition")]
    pub eye: [f64; 3],
    #[serde(rename = "cameraTargetPosition")]
    pub target: [f64; 3],
    #[serde(default = "default_size")]
    pub render_width: u32,
    #[serde(default = "default_size")]
    pub render_height: u32,
}

fn default_size() -> u32 {
    DEFAULT_SIZE
}

impl CameraSpec {
    pub fn new(eye: Vec3, target: Vec3, width: u32, height: u32) -> Self {
        CameraSpec {
            eye: eye.to_array(),
            target: target.to_array(),
            render_width: width,
            render_height: height,
        }
    }

    pub fn eye(&self) -> Vec3 {
        Vec3::from_slice(&self.eye)
    }

    pub fn target(&self) -> Vec3 {
        Vec3::from_slice(&self.target)
    }

    pub fn validate(&self) -> Result<()> {
        let (e, t) = (self.eye(), self.target());
        if !e.is_finite() || !t.is_finite() || e.distance(t) == 0.0 {
            return Err(Error::DegenerateCamera);
        }
        if self.render_width == 0 || self.render_height == 0 {
            return Err(Error::InvalidConfig(
                "camera image size must be at least 1×1".into(),
            ));
        }
        Ok(())
    }
}

/// Camera riding on the gripper, looking at the tip.
pub fn onhand_camera(world: &WorldState, width: u32, height: u32) -> CameraSpec {
    let tip = world.tip();
    CameraSpec::new(tip + ONHAND_OFFSET, tip, width, height)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triples, top row first.
    pub rgb: Vec<u8>,
    /// Row-major z-depth in metres, present when requested.
    pub depth: Option<Vec<f64>>,
}

impl Image {
    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let k = 3 * (y * self.width + x) as usize;
        [self.rgb[k], self.rgb[k + 1], self.rgb[k + 2]]
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        let mut enc = png::Encoder::new(file, self.width, self.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header()?;
        w.write_image_data(&self.rgb)?;
        w.finish()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Object {
    Table,
    Block(usize),
    ChestWall,
    Door,
    Gripper,
}

#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub solids: Vec<(Aabb, Object, Rgb)>,
    pub markers: Vec<(Vec3, Rgb)>,
}

/// Table slab under the workspace.
pub fn table_box() -> Aabb {
    let c = TABLE_CENTRE;
    Aabb::new(
        Vec3::new(c.x - 0.5, c.y - 0.5, c.z - 0.05),
        Vec3::new(c.x + 0.5, c.y + 0.5, c.z),
    )
}

impl Scene {
    pub fn from_world(world: &WorldState) -> Scene {
        let mut solids = vec![(table_box(), Object::Table, TABLE_COLOR)];
        for (i, b) in world.blocks.iter().enumerate() {
            solids.push((b.aabb(), Object::Block(i), block_color(i)));
        }
        if let Some(c) = world.chest {
            for w in c.walls() {
                solids.push((w, Object::ChestWall, CHEST_COLOR));
            }
            solids.push((c.door_box(), Object::Door, DOOR_COLOR));
        }
        for g in world.gripper_boxes() {
            solids.push((g, Object::Gripper, GRIPPER_COLOR));
        }
        Scene {
            solids,
            markers: Vec::new(),
        }
    }

    pub fn with_markers(mut self, markers: Vec<(Vec3, Rgb)>) -> Scene {
        self.markers = markers;
        self
    }
}

/// Nearest non-negative parameter `t` at which `origin + t·dir` meets `b`.
///
/// An origin inside the box yields the exit point.
pub fn ray_aabb(origin: Vec3, dir: Vec3, b: &Aabb) -> Option<f64> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        let (o, d, lo, hi) = (origin[a], dir[a], b.min[a], b.max[a]);
        if d == 0.0 {
            if o < lo || o > hi {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let (mut ta, mut tb) = ((lo - o) * inv, (hi - o) * inv);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    if t1 < 0.0 {
        None
    } else if t0 >= 0.0 {
        Some(t0)
    } else {
        Some(t1)
    }
}

/// Nearest non-negative parameter at which the ray meets a sphere.
pub fn ray_sphere(origin: Vec3, dir: Vec3, center: Vec3, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let a = dir.dot(dir);
    let b = oc.dot(dir);
    let c = oc.dot(oc) - radius * radius;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let t0 = (-b - s) / a;
    let t1 = (-b + s) / a;
    if t0 >= 0.0 {
        Some(t0)
    } else if t1 >= 0.0 {
        Some(t1)
    } else {
        None
    }
}

/// Camera frame: forward, right, up (orthonormal).
fn basis(cam: &CameraSpec) -> (Vec3, Vec3, Vec3) {
    let f = (cam.target() - cam.eye()).normalized();
    let mut r = f.cross(Vec3::new(0.0, 0.0, 1.0));
    if r.norm() < 1e-9 {
        r = f.cross(Vec3::new(1.0, 0.0, 0.0));
    }
    let r = r.normalized();
    let u = r.cross(f);
    (f, r, u)
}

/// Unnormalized ray direction through the centre of pixel (x, y), scaled so
/// its component along the viewing axis is 1.
pub fn pixel_ray(cam: &CameraSpec, x: u32, y: u32) -> Vec3 {
    let (f, r, u) = basis(cam);
    let (w, h) = (cam.render_width as f64, cam.render_height as f64);
    let half = (VERTICAL_FOV_DEG.to_radians() / 2.0).tan();
    let sx = ((x as f64 + 0.5) / w * 2.0 - 1.0) * half * (w / h);
    let sy = (1.0 - (y as f64 + 0.5) / h * 2.0) * half;
    f + r * sx + u * sy
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub object: Object,
    pub color: Rgb,
}

/// Closest solid along the ray, ignoring anything nearer than [`NEAR`].
pub fn trace(scene: &Scene, origin: Vec3, dir: Vec3) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for &(b, object, color) in &scene.solids {
        if let Some(t) = ray_aabb(origin, dir, &b) {
            if (NEAR..=FAR).contains(&t) && best.is_none_or(|h| t < h.t) {
                best = Some(Hit { t, object, color });
            }
        }
    }
    best
}

fn blend(a: Rgb, b: Rgb) -> Rgb {
    std::array::from_fn(|k| (a[k] as u16 + b[k] as u16).div_ceil(2) as u8)
}

/// Per-pixel hits, row-major.
pub fn hits(scene: &Scene, cam: &CameraSpec) -> Result<Vec<Option<Hit>>> {
    cam.validate()?;
    let eye = cam.eye();
    let mut out = Vec::with_capacity((cam.render_width * cam.render_height) as usize);
    for y in 0..cam.render_height {
        for x in 0..cam.render_width {
            out.push(trace(scene, eye, pixel_ray(cam, x, y)));
        }
    }
    Ok(out)
}

pub fn render_scene(scene: &Scene, cam: &CameraSpec, with_depth: bool) -> Result<Image> {
    cam.validate()?;
    let eye = cam.eye();
    let n = (cam.render_width * cam.render_height) as usize;
    let mut rgb = Vec::with_capacity(3 * n);
    let mut depth = with_depth.then(|| Vec::with_capacity(n));
    for y in 0..cam.render_height {
        for x in 0..cam.render_width {
            let dir = pixel_ray(cam, x, y);
            let hit = trace(scene, eye, dir);
            let (mut color, t) = match hit {
                Some(h) => (h.color, h.t),
                None => (BACKGROUND, FAR),
            };
            let mut marks: Vec<(f64, Rgb)> = scene
                .markers
                .iter()
                .filter_map(|&(c, col)| {
                    ray_sphere(eye, dir, c, MARKER_RADIUS)
                        .filter(|&tm| tm >= NEAR && tm < t)
                        .map(|tm| (tm, col))
                })
                .collect();
            marks.sort_by(|a, b| b.0.total_cmp(&a.0));
            for (_, col) in marks {
                color = blend(color, col);
            }
            rgb.extend_from_slice(&color);
            if let Some(d) = depth.as_mut() {
                d.push(t);
            }
        }
    }
    Ok(Image {
        width: cam.render_width,
        height: cam.render_height,
        rgb,
        depth,
    })
}

/// Renders the world, optionally with depth and target markers.
pub fn render(
    world: &WorldState,
    cam: &CameraSpec,
    with_depth: bool,
    markers: &[(Vec3, Rgb)],
) -> Result<Image> {
    let scene = Scene::from_world(world).with_markers(markers.to_vec());
    render_scene(&scene, cam, with_depth)
}
