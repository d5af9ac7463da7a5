"""Camera projections and the trajectory evaluation metrics.

Six quantities compare control modes: per-frame top/sagittal view errors
against a calibrated ideal line, their accumulated sum, projected and 3D tip
path lengths, and motion efficiency (net displacement over path length).
Projections keep sub-pixel floats; an optional quantize flag emulates
pixel-grid tracking.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catheter import JointState, RigGeometry, forward_kinematics


@dataclass(frozen=True)
class CameraModel:
    position: np.ndarray      # world, mm
    rotation: np.ndarray      # (3,3), rows = right / down / forward axes
    focal_px: float
    principal_point: tuple[float, float]
    resolution: tuple[int, int]
    view: str = "top"

    def __post_init__(self):
        if self.focal_px <= 0:
            raise ValueError("focal length must be > 0")
        if min(self.resolution) <= 0:
            raise ValueError("resolution must be positive")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64).reshape(3))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))


@dataclass(frozen=True)
class ProjectionResult:
    pixels: np.ndarray        # (n_visible, 2) sub-pixel floats
    visible: np.ndarray       # (n,) bool per input point
    tip_pixel: np.ndarray | None


def look_at_camera(position, target, up=(0.0, 0.0, 1.0), focal_px: float = 800.0,
                   resolution=(640, 480), view: str = "top") -> CameraModel:
    pos = np.asarray(position, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - pos
    fwd = fwd / np.linalg.norm(fwd)
    upv = np.asarray(up, dtype=np.float64)
    right = np.cross(fwd, upv)
    if np.linalg.norm(right) < 1e-9:
        upv = np.array([0.0, 1.0, 0.0])
        right = np.cross(fwd, upv)
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    return CameraModel(
        position=pos,
        rotation=np.vstack([right, down, fwd]),
        focal_px=focal_px,
        principal_point=(resolution[0] / 2.0, resolution[1] / 2.0),
        resolution=resolution,
        view=view,
    )


def default_cameras(bounds: np.ndarray) -> dict[str, CameraModel]:
    """Top and sagittal orthogonal pinholes on the phantom bounding-box axes."""
    bounds = np.asarray(bounds, dtype=np.float64)
    center = bounds.mean(axis=0)
    extent = float(np.max(bounds[1] - bounds[0]))
    dist = 4.0 * extent
    focal = 0.8 * 480 * dist / extent
    top = look_at_camera(center + np.array([0.0, dist, 0.0]), center,
                         up=(0.0, 0.0, 1.0), focal_px=focal, view="top")
    sagittal = look_at_camera(center + np.array([dist, 0.0, 0.0]), center,
                              up=(0.0, 0.0, 1.0), focal_px=focal, view="sagittal")
    return {"top": top, "sagittal": sagittal}


def project_points(camera: CameraModel, points: np.ndarray,
                   quantize: bool = False) -> ProjectionResult:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    cam = (pts - camera.position) @ camera.rotation.T
    visible = cam[:, 2] > 1e-9
    if not visible.any():
        raise ValueError("entire input is behind the camera")
    cx, cy = camera.principal_point
    z = cam[visible, 2]
    u = cx + camera.focal_px * cam[visible, 0] / z
    v = cy + camera.focal_px * cam[visible, 1] / z
    px = np.column_stack([u, v])
    if quantize:
        px = np.round(px)
    return ProjectionResult(pixels=px, visible=visible, tip_pixel=None)


def project(camera: CameraModel, shape, quantize: bool = False) -> ProjectionResult:
    """Project a catheter shape; tip pixel is the projected tip position."""
    res = project_points(camera, shape.points, quantize=quantize)
    tip = None
    if ((shape.tip_position - camera.position) @ camera.rotation[2]) > 1e-9:
        tip = project_points(camera, shape.tip_position[None], quantize=quantize).pixels[0]
    return ProjectionResult(pixels=res.pixels, visible=res.visible, tip_pixel=tip)


# ---------------------------------------------------------------------------
# metric definitions

def view_error(real: np.ndarray, ideal: np.ndarray) -> float:
    """Mean pixel distance between matched sample points of one frame."""
    r = np.atleast_2d(np.asarray(real, dtype=np.float64))
    i = np.atleast_2d(np.asarray(ideal, dtype=np.float64))
    if r.shape != i.shape:
        raise ValueError(f"sample-point counts differ: {r.shape} vs {i.shape}")
    return float(np.linalg.norm(r - i, axis=1).mean())


def accumulated_error(tve_series, sve_series) -> float:
    """Total of top-view plus sagittal-view errors over all frames."""
    t = np.asarray(tve_series, dtype=np.float64)
    s = np.asarray(sve_series, dtype=np.float64)
    if t.shape != s.shape:
        raise ValueError("frame counts differ between views")
    return float(np.sum(t + s))


def projected_trajectory_length(tip_pixels) -> float:
    """Pixel distance travelled by the projected tip."""
    p = np.atleast_2d(np.asarray(tip_pixels, dtype=np.float64))
    if len(p) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())


def tip_positions(joints_series, rig: RigGeometry) -> np.ndarray:
    tips = [forward_kinematics(JointState.from_array(j), rig).tip_position
            for j in np.atleast_2d(joints_series)]
    return np.asarray(tips)


def tip_trajectory_length(joints_series, rig: RigGeometry) -> float:
    """3D path length of the tip through forward kinematics, mm."""
    tips = tip_positions(joints_series, rig)
    if len(tips) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(tips, axis=0), axis=1).sum())


def motion_efficiency(joints_series, rig: RigGeometry) -> float:
    """Net tip displacement over tip path length, in (0, 1] for moving paths."""
    tips = tip_positions(joints_series, rig)
    ttl = float(np.linalg.norm(np.diff(tips, axis=0), axis=1).sum()) if len(tips) > 1 else 0.0
    if ttl <= 0.0:
        raise ZeroDivisionError("motion efficiency undefined for a zero-length path")
    return float(np.linalg.norm(tips[-1] - tips[0]) / ttl)
