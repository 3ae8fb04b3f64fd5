//! Pinhole cameras, fundamental matrices, epipolar distances and linear
//! N-view triangulation.
//!
//! World coordinates are millimeters, image coordinates are undistorted
//! pixels. A camera maps a world point `X` to `K (R X + t)`.

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix3, Matrix3x4, Matrix4, Point2, Point3, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ORTHONORMAL_TOL: f64 = 1e-9;
const COINCIDENT_CENTER_MM: f64 = 1e-6;
const MIN_DEPTH: f64 = 1e-9;
/// Ratio of the two smallest singular values of the triangulation system
/// below which the nullspace is considered more than one dimensional.
const NULLSPACE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid camera {id}: {reason}")]
    InvalidCamera { id: usize, reason: String },
    #[error("cameras {0} and {1} share an optical center")]
    CoincidentCameras(usize, usize),
    #[error("point lies behind camera {0}")]
    BehindCamera(usize),
    #[error("epipolar line is degenerate (point coincides with the epipole)")]
    DegenerateLine,
    #[error("triangulation needs at least 2 views, got {0}")]
    InsufficientViews(usize),
    #[error("degenerate triangulation geometry")]
    DegenerateGeometry,
    #[error("unknown camera id {0}")]
    UnknownCamera(usize),
}

/// A calibrated pinhole camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    id: usize,
    intrinsics: Matrix3<f64>,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    image_size: (u32, u32),
    projection: Matrix3x4<f64>,
}

impl Camera {
    pub fn new(
        id: usize,
        intrinsics: Matrix3<f64>,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        image_size: (u32, u32),
    ) -> Result<Self, GeometryError> {
        let invalid = |reason: &str| GeometryError::InvalidCamera {
            id,
            reason: reason.to_string(),
        };
        if intrinsics.iter().chain(rotation.iter()).chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite calibration entry"));
        }
        if intrinsics[(0, 0)] <= 0.0 || intrinsics[(1, 1)] <= 0.0 || intrinsics[(2, 2)] <= 0.0 {
            return Err(invalid("focal entries must be strictly positive"));
        }
        if intrinsics[(1, 0)] != 0.0 || intrinsics[(2, 0)] != 0.0 || intrinsics[(2, 1)] != 0.0 {
            return Err(invalid("intrinsics must be upper triangular"));
        }
        let gram = rotation.transpose() * rotation;
        if (gram - Matrix3::identity()).amax() > ORTHONORMAL_TOL {
            return Err(invalid("rotation is not orthonormal"));
        }
        if (rotation.determinant() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(invalid("rotation determinant is not +1"));
        }
        let mut extrinsic = Matrix3x4::zeros();
        extrinsic.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        extrinsic.set_column(3, &translation);
        Ok(Self {
            id,
            intrinsics,
            rotation,
            translation,
            image_size,
            projection: intrinsics * extrinsic,
        })
    }

    /// Camera at `eye` looking at `target`, with `up` giving the world
    /// vertical. Image x points right and image y points down.
    pub fn look_at(
        id: usize,
        intrinsics: Matrix3<f64>,
        eye: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        image_size: (u32, u32),
    ) -> Result<Self, GeometryError> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::InvalidCamera {
                id,
                reason: "eye and target coincide".into(),
            })?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::InvalidCamera {
                id,
                reason: "up vector parallel to viewing direction".into(),
            })?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye.coords);
        Self::new(id, intrinsics, rotation, translation, image_size)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn image_size(&self) -> (u32, u32) {
        self.image_size
    }

    /// `K [R | t]`.
    pub fn projection_matrix(&self) -> &Matrix3x4<f64> {
        &self.projection
    }

    /// Optical center in world coordinates, `-Rᵀ t`.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    /// Depth of a world point along the optical axis.
    pub fn depth(&self, p: &Point3<f64>) -> f64 {
        (self.rotation * p.coords + self.translation).z
    }

    pub fn project(&self, p: &Point3<f64>) -> Result<Point2<f64>, GeometryError> {
        let h = self.projection * p.to_homogeneous();
        if self.depth(p) <= MIN_DEPTH || h.z.abs() <= MIN_DEPTH {
            return Err(GeometryError::BehindCamera(self.id));
        }
        Ok(Point2::new(h.x / h.z, h.y / h.z))
    }

    /// Whether `p` lies inside the image, enlarged by `margin` pixels on
    /// every side.
    pub fn contains(&self, p: &Point2<f64>, margin: f64) -> bool {
        let (w, h) = self.image_size;
        p.x >= -margin && p.y >= -margin && p.x <= w as f64 + margin && p.y <= h as f64 + margin
    }
}

/// Convenience wrapper so callers can write `project(&cam, &p)`.
pub fn project(cam: &Camera, p: &Point3<f64>) -> Result<Point2<f64>, GeometryError> {
    cam.project(p)
}

/// Fundamental matrix mapping points of `from_camera` to epipolar lines in
/// `to_camera`: `p_toᵀ F p_from = 0` for corresponding points.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    pub matrix: Matrix3<f64>,
    pub from_camera: usize,
    pub to_camera: usize,
}

impl FundamentalMatrix {
    /// Epipolar line in the `to` image of a pixel from the `from` image.
    pub fn line_of(&self, p: &Point2<f64>) -> Vector3<f64> {
        self.matrix * p.to_homogeneous()
    }

    /// Copy rescaled to unit Frobenius norm.
    pub fn normalized(&self) -> Self {
        Self {
            matrix: self.matrix / self.matrix.norm(),
            ..*self
        }
    }

    pub fn transposed(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
            from_camera: self.to_camera,
            to_camera: self.from_camera,
        }
    }

    /// Smallest over largest singular value.
    pub fn singular_ratio(&self) -> f64 {
        let sv = self.matrix.singular_values();
        let max = sv.max();
        if max == 0.0 {
            return f64::NAN;
        }
        sv.min() / max
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Builds the fundamental matrix of a camera pair, scaled to unit
/// Frobenius norm.
///
/// For finite cameras `[e']ₓ P' P⁺` equals `K'⁻ᵀ [t]ₓ R K⁻¹` up to scale,
/// where `R, t` is the relative pose of the second camera. The latter avoids
/// the pseudo-inverse, whose normal equations are badly conditioned when
/// translations are in millimetres.
pub fn fundamental_from_cameras(
    cam_i: &Camera,
    cam_j: &Camera,
) -> Result<FundamentalMatrix, GeometryError> {
    if (cam_i.center() - cam_j.center()).norm() < COINCIDENT_CENTER_MM {
        return Err(GeometryError::CoincidentCameras(cam_i.id, cam_j.id));
    }
    let invert = |cam: &Camera| {
        cam.intrinsics.try_inverse().ok_or_else(|| GeometryError::InvalidCamera {
            id: cam.id,
            reason: "intrinsics are singular".into(),
        })
    };
    let k_i_inv = invert(cam_i)?;
    let k_j_inv = invert(cam_j)?;
    let r = cam_j.rotation * cam_i.rotation.transpose();
    let t = cam_j.translation - r * cam_i.translation;
    let f = k_j_inv.transpose() * skew(&t) * r * k_i_inv;
    Ok(FundamentalMatrix {
        matrix: f / f.norm(),
        from_camera: cam_i.id,
        to_camera: cam_j.id,
    })
}

/// How the per-joint epipolar term is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpipolarMetric {
    /// Perpendicular point-to-line distance in pixels.
    #[default]
    Geometric,
    /// Raw bilinear residual `|p_jᵀ F p_i|`; depends on the scale of `F`.
    Algebraic,
}

/// Perpendicular distance from `p` to the homogeneous line `line`.
pub fn point_line_distance(p: &Point2<f64>, line: &Vector3<f64>) -> Result<f64, GeometryError> {
    let direction = line.x.hypot(line.y);
    if !(direction > f64::EPSILON * line.z.abs().max(1.0)) {
        return Err(GeometryError::DegenerateLine);
    }
    Ok(line.dot(&p.to_homogeneous()).abs() / direction)
}

/// Symmetric epipolar distance between a joint seen at `p_i` in camera i
/// and at `p_j` in camera j. `f_ij` maps camera i to camera j and `f_ji`
/// the other way.
///
/// Returns `f64::INFINITY` when either epipolar line is degenerate.
pub fn epipolar_joint_distance(
    p_i: &Point2<f64>,
    p_j: &Point2<f64>,
    f_ij: &FundamentalMatrix,
    f_ji: &FundamentalMatrix,
    metric: EpipolarMetric,
) -> f64 {
    let line_j = f_ij.line_of(p_i);
    let line_i = f_ji.line_of(p_j);
    match metric {
        EpipolarMetric::Algebraic => {
            line_j.dot(&p_j.to_homogeneous()).abs() + line_i.dot(&p_i.to_homogeneous()).abs()
        }
        EpipolarMetric::Geometric => {
            match (point_line_distance(p_j, &line_j), point_line_distance(p_i, &line_i)) {
                (Ok(a), Ok(b)) => a + b,
                _ => f64::INFINITY,
            }
        }
    }
}

/// Maps pixels of a camera to roughly [-1, 1]² based on its image size.
fn image_conditioner(cam: &Camera) -> Matrix3<f64> {
    let (w, h) = cam.image_size;
    let (w, h) = (w.max(1) as f64, h.max(1) as f64);
    Matrix3::new(2.0 / w, 0.0, -1.0, 0.0, 2.0 / h, -1.0, 0.0, 0.0, 1.0)
}

/// Linear (DLT) triangulation of one point from two or more views.
///
/// Pixels are conditioned per camera and world coordinates are centered
/// and scaled on the observing cameras' optical centers before solving.
pub fn triangulate_joint(observations: &[(&Camera, Point2<f64>)]) -> Result<Point3<f64>, GeometryError> {
    if observations.len() < 2 {
        return Err(GeometryError::InsufficientViews(observations.len()));
    }

    let centers: Vec<Point3<f64>> = observations.iter().map(|(c, _)| c.center()).collect();
    let centroid = centers.iter().fold(Vector3::zeros(), |acc, c| acc + c.coords) / centers.len() as f64;
    let spread = centers.iter().map(|c| (c.coords - centroid).norm()).sum::<f64>() / centers.len() as f64;
    if spread < COINCIDENT_CENTER_MM {
        return Err(GeometryError::DegenerateGeometry);
    }
    // world_normalized = scale * (world - centroid); this maps it back.
    let scale = 1.0 / spread;
    let mut denormalize = Matrix4::identity() / scale;
    denormalize[(3, 3)] = 1.0;
    denormalize.fixed_view_mut::<3, 1>(0, 3).copy_from(&centroid);

    let mut system = DMatrix::<f64>::zeros(2 * observations.len(), 4);
    for (n, (cam, pixel)) in observations.iter().enumerate() {
        let conditioner = image_conditioner(cam);
        let p = conditioner * cam.projection_matrix() * denormalize;
        let x = conditioner * pixel.to_homogeneous();
        let (u, v) = (x.x / x.z, x.y / x.z);
        let row_u = p.row(2) * u - p.row(0);
        let row_v = p.row(2) * v - p.row(1);
        for (offset, row) in [row_u, row_v].into_iter().enumerate() {
            let norm = row.norm();
            if norm > 0.0 {
                system.row_mut(2 * n + offset).copy_from(&(row / norm));
            }
        }
    }

    let svd = system.svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or(GeometryError::DegenerateGeometry)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    if order.len() < 4 {
        return Err(GeometryError::DegenerateGeometry);
    }
    let largest = svd.singular_values[order[0]];
    let second_smallest = svd.singular_values[order[2]];
    if !(second_smallest > NULLSPACE_TOL * largest) {
        return Err(GeometryError::DegenerateGeometry);
    }
    let null = v_t.row(order[3]);
    let homogeneous = denormalize * Vector4::new(null[0], null[1], null[2], null[3]);
    if homogeneous.w.abs() <= f64::EPSILON * homogeneous.xyz().norm() {
        return Err(GeometryError::DegenerateGeometry);
    }
    let point = Point3::from(homogeneous.xyz() / homogeneous.w);
    if !point.coords.iter().all(|v| v.is_finite()) {
        return Err(GeometryError::DegenerateGeometry);
    }
    Ok(point)
}

/// A set of cameras together with the directed fundamental matrices
/// between every ordered pair.
#[derive(Debug, Clone)]
pub struct CameraRig {
    cameras: Vec<Camera>,
    index: HashMap<usize, usize>,
    fundamentals: HashMap<(usize, usize), FundamentalMatrix>,
}

impl CameraRig {
    pub fn new(cameras: Vec<Camera>) -> Result<Self, GeometryError> {
        let mut index = HashMap::with_capacity(cameras.len());
        for (pos, cam) in cameras.iter().enumerate() {
            if index.insert(cam.id, pos).is_some() {
                return Err(GeometryError::InvalidCamera {
                    id: cam.id,
                    reason: "duplicate camera id".into(),
                });
            }
        }
        let mut fundamentals = HashMap::new();
        for a in &cameras {
            for b in &cameras {
                if a.id != b.id {
                    fundamentals.insert((a.id, b.id), fundamental_from_cameras(a, b)?);
                }
            }
        }
        Ok(Self {
            cameras,
            index,
            fundamentals,
        })
    }

    pub fn cameras(&self) -> &[Camera] {
        &self.cameras
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.cameras.iter().map(Camera::id).collect()
    }

    /// Position of a camera id in [`CameraRig::cameras`].
    pub fn position(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn camera(&self, id: usize) -> Result<&Camera, GeometryError> {
        self.position(id)
            .map(|pos| &self.cameras[pos])
            .ok_or(GeometryError::UnknownCamera(id))
    }

    /// Directed fundamental matrix from camera `from` to camera `to`.
    pub fn fundamental(&self, from: usize, to: usize) -> Result<&FundamentalMatrix, GeometryError> {
        self.fundamentals
            .get(&(from, to))
            .ok_or(GeometryError::UnknownCamera(if self.index.contains_key(&from) { to } else { from }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    fn vga() -> Matrix3<f64> {
        Matrix3::new(500.0, 0.0, 320.0, 0.0, 500.0, 240.0, 0.0, 0.0, 1.0)
    }

    fn cam(id: usize, eye: [f64; 3]) -> Camera {
        Camera::look_at(
            id,
            vga(),
            Point3::from(eye),
            Point3::new(0.0, 0.0, 1000.0),
            Vector3::z(),
            (640, 480),
        )
        .unwrap()
    }

    #[test]
    fn optical_axis_projects_to_principal_point() {
        let c = Camera::new(0, Matrix3::identity(), Matrix3::identity(), Vector3::zeros(), (1, 1)).unwrap();
        let p = c.project(&Point3::new(0.0, 0.0, 1000.0)).unwrap();
        assert_eq!((p.x, p.y), (0.0, 0.0));

        let c = cam(1, [4000.0, 1000.0, 2500.0]);
        for depth in [10.0, 1000.0, 1e5] {
            let dir = c.rotation().row(2).transpose();
            let p = c.center() + dir * depth;
            let px = c.project(&p).unwrap();
            assert!((px.x - 320.0).abs() < 1e-6 && (px.y - 240.0).abs() < 1e-6);
        }
    }

    #[test]
    fn behind_camera_is_rejected() {
        let c = Camera::new(3, Matrix3::identity(), Matrix3::identity(), Vector3::zeros(), (1, 1)).unwrap();
        assert_eq!(c.project(&Point3::new(0.0, 0.0, -1.0)), Err(GeometryError::BehindCamera(3)));
        assert_eq!(c.project(&Point3::new(1.0, 0.0, 0.0)), Err(GeometryError::BehindCamera(3)));
    }

    #[test]
    fn invalid_calibration_is_rejected() {
        let bad_rot = Matrix3::identity() * 1.01;
        assert!(Camera::new(0, vga(), bad_rot, Vector3::zeros(), (640, 480)).is_err());
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Camera::new(0, vga(), reflection, Vector3::zeros(), (640, 480)).is_err());
        let mut k = vga();
        k[(1, 0)] = 0.5;
        assert!(Camera::new(0, k, Matrix3::identity(), Vector3::zeros(), (640, 480)).is_err());
        let mut k = vga();
        k[(0, 0)] = 0.0;
        assert!(Camera::new(0, k, Matrix3::identity(), Vector3::zeros(), (640, 480)).is_err());
    }

    #[test]
    fn projection_matrix_is_k_times_extrinsics() {
        let c = cam(0, [5000.0, 0.0, 2500.0]);
        let x = Point3::new(120.0, -340.0, 900.0);
        let direct = c.intrinsics() * (c.rotation() * x.coords + c.translation());
        let via_p = c.projection_matrix() * x.to_homogeneous();
        assert!((direct - via_p).amax() < 1e-9 * direct.amax());
    }

    #[test]
    fn pure_translation_gives_skew_fundamental() {
        let a = Camera::new(0, Matrix3::identity(), Matrix3::identity(), Vector3::zeros(), (1, 1)).unwrap();
        let b = Camera::new(1, Matrix3::identity(), Matrix3::identity(), Vector3::new(100.0, 0.0, 0.0), (1, 1))
            .unwrap();
        let f = fundamental_from_cameras(&a, &b).unwrap();
        let expected = skew(&Vector3::new(1.0, 0.0, 0.0));
        let expected = expected / expected.norm();
        let sign = if (f.matrix - expected).norm() < (f.matrix + expected).norm() { 1.0 } else { -1.0 };
        assert!((f.matrix * sign - expected).amax() < 1e-12);
        assert!(f.singular_ratio() < 1e-9);
    }

    #[test]
    fn coincident_centers_are_rejected() {
        let a = cam(0, [5000.0, 0.0, 2500.0]);
        let rot = Rotation3::from_euler_angles(0.1, 0.2, 0.3).into_inner();
        let center = a.center().coords;
        let b = Camera::new(1, vga(), rot, -(rot * center), (640, 480)).unwrap();
        assert_eq!(fundamental_from_cameras(&a, &b), Err(GeometryError::CoincidentCameras(0, 1)));
    }

    #[test]
    fn point_displaced_off_epipolar_line() {
        let a = cam(0, [5000.0, 0.0, 2500.0]);
        let b = cam(1, [0.0, 5000.0, 2500.0]);
        let f_ab = fundamental_from_cameras(&a, &b).unwrap();
        let f_ba = fundamental_from_cameras(&b, &a).unwrap();
        let x = Point3::new(300.0, -200.0, 1200.0);
        let (pa, pb) = (a.project(&x).unwrap(), b.project(&x).unwrap());
        assert!(epipolar_joint_distance(&pa, &pb, &f_ab, &f_ba, EpipolarMetric::Geometric) < 1e-6);

        // Shift p_b 5 px along the normal of p_a's epipolar line. The
        // constraint is symmetric, so p_a also leaves the line of the
        // shifted point; the second term comes from the explicit line.
        let line = f_ab.line_of(&pa);
        let normal = Vector3::new(line.x, line.y, 0.0).normalize();
        let shifted = Point2::new(pb.x + 5.0 * normal.x, pb.y + 5.0 * normal.y);
        let oracle = line.dot(&shifted.to_homogeneous()).abs() / line.x.hypot(line.y);
        assert!((oracle - 5.0).abs() < 1e-9);
        let line_back = f_ba.line_of(&shifted);
        let back = line_back.dot(&pa.to_homogeneous()).abs() / line_back.x.hypot(line_back.y);
        let d = epipolar_joint_distance(&pa, &shifted, &f_ab, &f_ba, EpipolarMetric::Geometric);
        assert!((d - (5.0 + back)).abs() < 1e-6);
    }

    #[test]
    fn degenerate_line_is_infinite() {
        let line = Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(point_line_distance(&Point2::new(1.0, 2.0), &line), Err(GeometryError::DegenerateLine));
        let a = cam(0, [5000.0, 0.0, 2500.0]);
        let b = cam(1, [0.0, 5000.0, 2500.0]);
        let f_ab = fundamental_from_cameras(&a, &b).unwrap();
        let f_ba = fundamental_from_cameras(&b, &a).unwrap();
        // The epipole in image a: projection of b's center.
        let epipole = a.project(&b.center()).unwrap_or_else(|_| {
            let h = a.projection_matrix() * b.center().to_homogeneous();
            Point2::new(h.x / h.z, h.y / h.z)
        });
        let d = epipolar_joint_distance(&epipole, &Point2::new(100.0, 100.0), &f_ab, &f_ba, EpipolarMetric::Geometric);
        assert!(d.is_infinite() || d > 1e6);
    }

    #[test]
    fn triangulation_exact_three_views() {
        let cams = [cam(0, [5000.0, 0.0, 2500.0]), cam(1, [0.0, 5000.0, 2500.0]), cam(2, [-3500.0, -3500.0, 2500.0])];
        let x = Point3::new(-400.0, 250.0, 1400.0);
        let obs: Vec<_> = cams.iter().map(|c| (c, c.project(&x).unwrap())).collect();
        let y = triangulate_joint(&obs).unwrap();
        assert!((y - x).norm() < 1e-6);
    }

    #[test]
    fn triangulation_errors() {
        let a = cam(0, [5000.0, 0.0, 2500.0]);
        let x = Point3::new(0.0, 0.0, 1000.0);
        let p = a.project(&x).unwrap();
        assert_eq!(triangulate_joint(&[(&a, p)]), Err(GeometryError::InsufficientViews(1)));
        let twin = Camera::new(9, *a.intrinsics(), *a.rotation(), *a.translation(), (640, 480)).unwrap();
        assert_eq!(triangulate_joint(&[(&a, p), (&twin, p)]), Err(GeometryError::DegenerateGeometry));
    }

    #[test]
    fn rig_lookup() {
        let rig = CameraRig::new(vec![cam(4, [5000.0, 0.0, 2500.0]), cam(7, [0.0, 5000.0, 2500.0])]).unwrap();
        assert_eq!(rig.position(7), Some(1));
        assert!(rig.fundamental(4, 7).is_ok());
        assert_eq!(rig.fundamental(4, 5).unwrap_err(), GeometryError::UnknownCamera(5));
        assert!(CameraRig::new(vec![cam(1, [5000.0, 0.0, 2500.0]), cam(1, [0.0, 5000.0, 2500.0])]).is_err());
    }
}
