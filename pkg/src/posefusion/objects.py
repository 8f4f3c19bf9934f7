"""Object descriptions: primitive keypoint layouts, symmetry, surface samples.

Each object carries a 14-keypoint-per-axis primitive layout (9 white points
shared between axes, 5 colored points per axis), a symmetry specification,
a dominant axis (object-frame z by convention), and surface sample points
used by the distance metrics and by ICP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from .liegroups import Rotation, _readonly

__all__ = [
    "NonPositiveScale",
    "AXES",
    "PrimitiveLayout",
    "make_primitive_layout",
    "SymmetrySpec",
    "symmetry_transforms",
    "BoxShape",
    "CylinderShape",
    "LShape",
    "ObjectModel",
    "make_object_model",
    "object_spec_to_text",
    "object_spec_from_tokens",
]

AXES = ("x", "y", "z")
_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


class NonPositiveScale(ValueError):
    """Layout or shape dimension must be strictly positive."""


@dataclass(frozen=True)
class PrimitiveLayout:
    """Object-frame 3D keypoints backing the per-axis primitive images.

    ``white_keypoints[0]`` is the object center (origin). Colored keypoints
    of axis i lie on the +i face of the layout cube, so every colored set
    sits in the positive half-space of its axis.
    """

    white_keypoints: np.ndarray  # (9, 3)
    colored_keypoints: dict  # axis -> (5, 3)

    def __post_init__(self):
        object.__setattr__(self, "white_keypoints", _readonly(self.white_keypoints))
        object.__setattr__(
            self, "colored_keypoints", {a: _readonly(v) for a, v in self.colored_keypoints.items()}
        )

    def axis_keypoints(self, axis: str) -> np.ndarray:
        """All 14 reference points of one axis: 9 white then 5 colored."""
        return np.vstack([self.white_keypoints, self.colored_keypoints[axis]])


def make_primitive_layout(scale: float) -> PrimitiveLayout:
    """Cube layout: center + 8 corners (white), +face center + 4 face corners per axis."""
    if scale <= 0:
        raise NonPositiveScale(f"layout scale must be > 0, got {scale}")
    s = float(scale)
    corners = np.array(
        [[sx, sy, sz] for sx in (-s, s) for sy in (-s, s) for sz in (-s, s)]
    )
    white = np.vstack([np.zeros(3), corners])
    colored = {}
    for axis, i in _AXIS_INDEX.items():
        center = np.zeros(3)
        center[i] = s
        face = corners[corners[:, i] > 0]
        colored[axis] = np.vstack([center, face])
    return PrimitiveLayout(white, colored)


def _unit_axis(axis) -> np.ndarray:
    if isinstance(axis, str):
        v = np.zeros(3)
        v[_AXIS_INDEX[axis]] = 1.0
    else:
        v = np.asarray(axis, dtype=float).reshape(3)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("symmetry axis must be nonzero")
    return v / n


@dataclass(frozen=True)
class SymmetrySpec:
    """Either asymmetric, an n-fold discrete group, or a continuous axis."""

    kind: str  # "asymmetric" | "discrete" | "continuous"
    order: int = 1
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if self.kind not in ("asymmetric", "discrete", "continuous"):
            raise ValueError(f"unknown symmetry kind {self.kind!r}")
        if self.kind == "discrete" and self.order < 2:
            raise ValueError("discrete symmetry needs order >= 2")
        object.__setattr__(self, "axis", _readonly(_unit_axis(self.axis)))

    @staticmethod
    def asymmetric() -> "SymmetrySpec":
        return SymmetrySpec("asymmetric")

    @staticmethod
    def discrete(order: int, axis="z") -> "SymmetrySpec":
        return SymmetrySpec("discrete", order=order, axis=_unit_axis(axis))

    @staticmethod
    def continuous(axis="z") -> "SymmetrySpec":
        return SymmetrySpec("continuous", axis=_unit_axis(axis))

    @property
    def discrete_transforms(self) -> list:
        """Identity for asymmetric/continuous; the cyclic group for discrete."""
        if self.kind != "discrete":
            return [Rotation.identity()]
        step = 2.0 * math.pi / self.order
        return [Rotation.exp(self.axis * (k * step)) for k in range(self.order)]


def symmetry_transforms(spec: SymmetrySpec, continuous_discretization: int = 360) -> list:
    """Rotations the error metrics minimize over (continuous gets discretized)."""
    if continuous_discretization < 1:
        raise ValueError("continuous_discretization must be >= 1")
    if spec.kind == "asymmetric":
        return [Rotation.identity()]
    if spec.kind == "discrete":
        return spec.discrete_transforms
    step = 2.0 * math.pi / continuous_discretization
    return [Rotation.exp(spec.axis * (k * step)) for k in range(continuous_discretization)]


@dataclass(frozen=True)
class BoxShape:
    """Axis-aligned box, full extents in meters."""

    size: tuple  # (sx, sy, sz)

    def __post_init__(self):
        if any(s <= 0 for s in self.size):
            raise NonPositiveScale("box extents must be > 0")
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))

    def sample_surface(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return _sample_box_surface(np.asarray(self.size), np.zeros(3), n, rng)

    def params(self) -> list:
        return list(self.size)


@dataclass(frozen=True)
class CylinderShape:
    """Upright cylinder (axis = object z), radius and height in meters."""

    radius: float
    height: float

    def __post_init__(self):
        if self.radius <= 0 or self.height <= 0:
            raise NonPositiveScale("cylinder dimensions must be > 0")

    def sample_surface(self, n: int, rng: np.random.Generator) -> np.ndarray:
        r, h = self.radius, self.height
        lateral = 2.0 * math.pi * r * h
        cap = math.pi * r * r
        areas = np.array([lateral, cap, cap])
        choice = rng.choice(3, size=n, p=areas / areas.sum())
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        pts = np.empty((n, 3))
        for i in range(n):
            if choice[i] == 0:
                z = rng.uniform(-0.5 * h, 0.5 * h)
                pts[i] = (r * math.cos(theta[i]), r * math.sin(theta[i]), z)
            else:
                rr = r * math.sqrt(rng.uniform())
                z = 0.5 * h if choice[i] == 1 else -0.5 * h
                pts[i] = (rr * math.cos(theta[i]), rr * math.sin(theta[i]), z)
        return pts

    def params(self) -> list:
        return [self.radius, self.height]


@dataclass(frozen=True)
class LShape:
    """L-block: union of a foot box and an upright leg box, extruded along y.

    Outer extents (sx, sy, sz); the foot occupies the bottom tz of z, the
    leg the left tx of x.
    """

    size: tuple  # (sx, sy, sz)
    leg_thickness: float  # tx, along +x from the left face
    foot_thickness: float  # tz, along +z from the bottom face

    def __post_init__(self):
        sx, sy, sz = self.size
        ok = sx > 0 and sy > 0 and sz > 0
        ok = ok and 0 < self.leg_thickness < sx and 0 < self.foot_thickness < sz
        if not ok:
            raise NonPositiveScale("L-shape dimensions inconsistent")
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))

    def _boxes(self):
        sx, sy, sz = self.size
        foot_size = np.array([sx, sy, self.foot_thickness])
        foot_center = np.array([0.0, 0.0, -0.5 * sz + 0.5 * self.foot_thickness])
        leg_size = np.array([self.leg_thickness, sy, sz])
        leg_center = np.array([-0.5 * sx + 0.5 * self.leg_thickness, 0.0, 0.0])
        return (foot_size, foot_center), (leg_size, leg_center)

    def sample_surface(self, n: int, rng: np.random.Generator) -> np.ndarray:
        (fs, fc), (ls, lc) = self._boxes()
        area_f = 2.0 * (fs[0] * fs[1] + fs[1] * fs[2] + fs[0] * fs[2])
        area_l = 2.0 * (ls[0] * ls[1] + ls[1] * ls[2] + ls[0] * ls[2])
        out = []
        # Rejection keeps only union-surface points (drop points inside the
        # other box); oversample until n survive.
        while len(out) < n:
            m = max(64, n)
            pick_foot = rng.random(m) < area_f / (area_f + area_l)
            for i in range(m):
                if pick_foot[i]:
                    p = _sample_box_surface(fs, fc, 1, rng)[0]
                    other_size, other_center = ls, lc
                else:
                    p = _sample_box_surface(ls, lc, 1, rng)[0]
                    other_size, other_center = fs, fc
                if not _inside_box(p, other_size, other_center):
                    out.append(p)
                    if len(out) == n:
                        break
        return np.array(out)

    def params(self) -> list:
        return [*self.size, self.leg_thickness, self.foot_thickness]


def _sample_box_surface(size, center, n, rng) -> np.ndarray:
    sx, sy, sz = size
    areas = np.array([sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy])
    faces = rng.choice(6, size=n, p=areas / areas.sum())
    u = rng.uniform(-0.5, 0.5, size=(n, 2))
    pts = np.empty((n, 3))
    for i in range(n):
        f = faces[i]
        axis = f // 2
        sign = 1.0 if f % 2 == 0 else -1.0
        p = np.empty(3)
        p[axis] = sign * 0.5 * size[axis]
        others = [a for a in range(3) if a != axis]
        p[others[0]] = u[i, 0] * size[others[0]]
        p[others[1]] = u[i, 1] * size[others[1]]
        pts[i] = p + center
    return pts


def _inside_box(p, size, center, margin=1e-12) -> bool:
    d = np.abs(p - center) - 0.5 * size
    return bool(np.all(d < -margin))


@dataclass(frozen=True)
class ObjectModel:
    """Everything the optimizer and the metrics need to know about an object."""

    id: int
    layout: PrimitiveLayout
    symmetry: SymmetrySpec
    dominant_axis: np.ndarray  # (3,), unit, object frame
    surface_points: np.ndarray  # (N, 3), N >= 500 recommended
    diameter: float
    shape: Optional[object] = None  # BoxShape | CylinderShape | LShape, for serialization
    keypoint_scale: float = 0.0
    surface_seed: int = 0

    def __post_init__(self):
        axis = np.asarray(self.dominant_axis, dtype=float).reshape(3)
        n = float(np.linalg.norm(axis))
        if abs(n - 1.0) > 1e-9:
            axis = axis / n
        object.__setattr__(self, "dominant_axis", _readonly(axis))
        object.__setattr__(self, "surface_points", _readonly(self.surface_points))

    @property
    def is_symmetric(self) -> bool:
        return self.symmetry.kind != "asymmetric"


def make_object_model(
    object_id: int,
    shape,
    symmetry: SymmetrySpec,
    keypoint_scale: Optional[float] = None,
    surface_count: int = 600,
    surface_seed: int = 0,
) -> ObjectModel:
    """Sample the shape surface, derive the diameter, and build the layout.

    The layout scale defaults to half the object diameter.
    """
    rng = np.random.default_rng(surface_seed)
    points = shape.sample_surface(surface_count, rng)
    diameter = float(pdist(points).max())
    if keypoint_scale is None:
        keypoint_scale = 0.5 * diameter
    return ObjectModel(
        id=object_id,
        layout=make_primitive_layout(keypoint_scale),
        symmetry=symmetry,
        dominant_axis=np.array([0.0, 0.0, 1.0]),
        surface_points=points,
        diameter=diameter,
        shape=shape,
        keypoint_scale=float(keypoint_scale),
        surface_seed=surface_seed,
    )


_SHAPE_NAMES = {BoxShape: "box", CylinderShape: "cylinder", LShape: "lshape"}


def object_spec_to_text(model: ObjectModel) -> str:
    """One-record text form used by config and measurement files."""
    if model.shape is None:
        raise ValueError("object has no serializable shape")
    name = _SHAPE_NAMES[type(model.shape)]
    params = " ".join(repr(float(p)) for p in model.shape.params())
    sym = model.symmetry
    if sym.kind == "discrete":
        sym_text = f"discrete {sym.order} z"
    elif sym.kind == "continuous":
        sym_text = "continuous z"
    else:
        sym_text = "asymmetric"
    return (
        f"{model.id} {name} {params} SYM {sym_text} "
        f"SCALE {repr(float(model.keypoint_scale))} "
        f"SURFACE {model.surface_points.shape[0]} {model.surface_seed}"
    )


def object_spec_from_tokens(tokens: list) -> ObjectModel:
    """Inverse of object_spec_to_text."""
    object_id = int(tokens[0])
    name = tokens[1]
    i = 2
    params = []
    while tokens[i] != "SYM":
        params.append(float(tokens[i]))
        i += 1
    if name == "box":
        shape = BoxShape(tuple(params))
    elif name == "cylinder":
        shape = CylinderShape(*params)
    elif name == "lshape":
        shape = LShape(tuple(params[:3]), params[3], params[4])
    else:
        raise ValueError(f"unknown shape kind {name!r}")
    i += 1
    kind = tokens[i]
    i += 1
    if kind == "discrete":
        symmetry = SymmetrySpec.discrete(int(tokens[i]), tokens[i + 1])
        i += 2
    elif kind == "continuous":
        symmetry = SymmetrySpec.continuous(tokens[i])
        i += 1
    else:
        symmetry = SymmetrySpec.asymmetric()
    if tokens[i] != "SCALE":
        raise ValueError("expected SCALE in object record")
    scale = float(tokens[i + 1])
    if tokens[i + 2] != "SURFACE":
        raise ValueError("expected SURFACE in object record")
    count = int(tokens[i + 3])
    seed = int(tokens[i + 4])
    return make_object_model(object_id, shape, symmetry, scale, count, seed)
