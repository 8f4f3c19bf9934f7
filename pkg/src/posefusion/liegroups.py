"""Quaternion-backed SO(3) and SE(3) types with exp/log maps.

Conventions used throughout the package:

* quaternions are stored as ``(w, x, y, z)`` and renormalized after every
  composition, so long chains do not drift away from the unit sphere;
* a pose ``T_AB`` maps B-frame coordinates into the A frame via
  ``act(T_AB, p_B) = R_AB @ p_B + t_AB``;
* tangent vectors are ordered ``[rho, phi]`` (translation first), matching
  the residual layout used by the factor graph;
* manifold updates are right perturbations, ``T <- T * Exp(delta)``.

All values are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NearPiRotation",
    "Rotation",
    "Pose",
    "Twist",
    "exp_map",
    "log_map",
    "skew",
    "so3_log_matrix",
    "so3_right_jacobian_inverse",
    "pose_to_text",
    "pose_from_tokens",
]

_SMALL_ANGLE = 1e-8


class NearPiRotation(ValueError):
    """Rotation angle is within 1e-6 of pi, where the log map is unstable."""


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix such that skew(a) @ b == cross(a, b)."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion wrapper over SO(3)."""

    q: np.ndarray  # (4,) as (w, x, y, z), unit norm

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(4)
        n = math.sqrt(float(q @ q))
        if n == 0.0 or not math.isfinite(n):
            raise ValueError("quaternion norm must be positive and finite")
        object.__setattr__(self, "q", _readonly(q / n))

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def exp(phi: np.ndarray) -> "Rotation":
        """Exponential map of a rotation vector (axis * angle, radians)."""
        phi = np.asarray(phi, dtype=float).reshape(3)
        angle = math.sqrt(float(phi @ phi))
        if angle < _SMALL_ANGLE:
            # First-order branch; the quaternion constructor renormalizes.
            return Rotation(np.array([1.0, 0.5 * phi[0], 0.5 * phi[1], 0.5 * phi[2]]))
        half = 0.5 * angle
        s = math.sin(half) / angle
        return Rotation(np.array([math.cos(half), s * phi[0], s * phi[1], s * phi[2]]))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Rotation":
        """Quaternion extraction (Shepperd's method) from a rotation matrix."""
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("rotation matrix must be 3x3")
        t = m[0, 0] + m[1, 1] + m[2, 2]
        if t > 0.0:
            r = math.sqrt(1.0 + t)
            s = 0.5 / r
            q = np.array(
                [
                    0.5 * r,
                    (m[2, 1] - m[1, 2]) * s,
                    (m[0, 2] - m[2, 0]) * s,
                    (m[1, 0] - m[0, 1]) * s,
                ]
            )
        else:
            i = int(np.argmax([m[0, 0], m[1, 1], m[2, 2]]))
            j, k = (i + 1) % 3, (i + 2) % 3
            r = math.sqrt(max(0.0, 1.0 + m[i, i] - m[j, j] - m[k, k]))
            s = 0.5 / r
            q = np.empty(4)
            q[0] = (m[k, j] - m[j, k]) * s
            q[1 + i] = 0.5 * r
            q[1 + j] = (m[j, i] + m[i, j]) * s
            q[1 + k] = (m[k, i] + m[i, k]) * s
        return Rotation(q)

    def matrix(self) -> np.ndarray:
        w, x, y, z = self.q
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def compose(self, other: "Rotation") -> "Rotation":
        w1, x1, y1, z1 = self.q
        w2, x2, y2, z2 = other.q
        return Rotation(
            np.array(
                [
                    w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                    w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                    w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                    w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
                ]
            )
        )

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return self.compose(other)

    def inverse(self) -> "Rotation":
        w, x, y, z = self.q
        return Rotation(np.array([w, -x, -y, -z]))

    def apply(self, p: np.ndarray) -> np.ndarray:
        """Rotate one point (3,) or a stack of points (N, 3)."""
        p = np.asarray(p, dtype=float)
        m = self.matrix()
        if p.ndim == 1:
            return m @ p
        return p @ m.T

    def angle(self) -> float:
        w, x, y, z = self.q
        s = math.sqrt(x * x + y * y + z * z)
        return 2.0 * math.atan2(s, abs(w))

    def log(self) -> np.ndarray:
        """Rotation vector; raises NearPiRotation for angles >= pi - 1e-6."""
        w, x, y, z = self.q
        if w < 0.0:
            w, x, y, z = -w, -x, -y, -z
        v = np.array([x, y, z])
        s = math.sqrt(float(v @ v))
        angle = 2.0 * math.atan2(s, w)
        if angle >= math.pi - 1e-6:
            raise NearPiRotation(f"rotation angle {angle:.9f} too close to pi")
        if s < 1e-9:
            # atan2(s, w)/s expanded around s = 0.
            k = (2.0 / w) * (1.0 - s * s / (3.0 * w * w))
        else:
            k = angle / s
        return k * v


@dataclass(frozen=True)
class Pose:
    """Rigid transform on SE(3): rotation plus translation in meters."""

    rotation: Rotation
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "translation", _readonly(t))

    @staticmethod
    def identity() -> "Pose":
        return Pose(Rotation.identity(), np.zeros(3))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose":
        """Build from a 4x4 homogeneous or 3x4 matrix."""
        m = np.asarray(m, dtype=float)
        if m.shape == (4, 4):
            m = m[:3, :]
        if m.shape != (3, 4):
            raise ValueError("pose matrix must be 3x4 or 4x4")
        return Pose(Rotation.from_matrix(m[:, :3]), m[:, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation.matrix()
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "Pose") -> "Pose":
        return Pose(
            self.rotation.compose(other.rotation),
            self.rotation.apply(other.translation) + self.translation,
        )

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        rinv = self.rotation.inverse()
        return Pose(rinv, -rinv.apply(self.translation))

    def act(self, p: np.ndarray) -> np.ndarray:
        """Map one point (3,) or a stack (N, 3) into the parent frame."""
        return self.rotation.apply(p) + self.translation


@dataclass(frozen=True)
class Twist:
    """se(3) tangent element: rotational part phi (rad), translation rho (m)."""

    phi: np.ndarray  # (3,)
    rho: np.ndarray  # (3,)

    def __post_init__(self):
        object.__setattr__(self, "phi", _readonly(np.asarray(self.phi, dtype=float).reshape(3)))
        object.__setattr__(self, "rho", _readonly(np.asarray(self.rho, dtype=float).reshape(3)))

    @staticmethod
    def zero() -> "Twist":
        return Twist(np.zeros(3), np.zeros(3))

    @staticmethod
    def from_vector(v: np.ndarray) -> "Twist":
        """Vector layout [rho, phi], matching residual stacking."""
        v = np.asarray(v, dtype=float).reshape(6)
        return Twist(phi=v[3:], rho=v[:3])

    def vector(self) -> np.ndarray:
        return np.concatenate([self.rho, self.phi])


def _se3_v_matrix(phi: np.ndarray) -> np.ndarray:
    """Left Jacobian V with t = V @ rho in the SE(3) exponential."""
    angle2 = float(phi @ phi)
    angle = math.sqrt(angle2)
    s = skew(phi)
    s2 = s @ s
    if angle < _SMALL_ANGLE:
        return np.eye(3) + 0.5 * s + s2 / 6.0
    # 2*sin^2(a/2)/a^2 avoids the cancellation in (1 - cos a)/a^2.
    half_sin = math.sin(0.5 * angle)
    a = 2.0 * half_sin * half_sin / angle2
    if angle < 1e-4:
        b = 1.0 / 6.0 - angle2 / 120.0
    else:
        b = (angle - math.sin(angle)) / (angle2 * angle)
    return np.eye(3) + a * s + b * s2


def _se3_v_inverse(phi: np.ndarray) -> np.ndarray:
    angle2 = float(phi @ phi)
    angle = math.sqrt(angle2)
    s = skew(phi)
    s2 = s @ s
    if angle < 1e-2:
        c = 1.0 / 12.0 + angle2 / 720.0 + angle2 * angle2 / 30240.0
    else:
        c = 1.0 / angle2 - (1.0 + math.cos(angle)) / (2.0 * angle * math.sin(angle))
    return np.eye(3) - 0.5 * s + c * s2


def exp_map(xi: Twist) -> Pose:
    """SE(3) exponential; total function with a small-angle branch."""
    rotation = Rotation.exp(xi.phi)
    translation = _se3_v_matrix(xi.phi) @ xi.rho
    return Pose(rotation, translation)


def log_map(pose: Pose) -> Twist:
    """Inverse of exp_map; raises NearPiRotation near the pi singularity."""
    phi = pose.rotation.log()
    rho = _se3_v_inverse(phi) @ pose.translation
    return Twist(phi=phi, rho=rho)


def so3_log_matrix(m: np.ndarray) -> np.ndarray:
    """Rotation vector from a rotation matrix, used on residual rotations."""
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    cos_angle = min(1.0, max(-1.0, 0.5 * (tr - 1.0)))
    angle = math.acos(cos_angle)
    if angle >= math.pi - 1e-6:
        raise NearPiRotation(f"rotation angle {angle:.9f} too close to pi")
    v = 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    if angle < 1e-7:
        return v
    return (angle / math.sin(angle)) * v


def so3_right_jacobian_inverse(phi: np.ndarray) -> np.ndarray:
    """Inverse right Jacobian of SO(3), d Log(R Exp(d)) / dd at d = 0."""
    angle2 = float(phi @ phi)
    angle = math.sqrt(angle2)
    s = skew(phi)
    if angle < 1e-2:
        c = 1.0 / 12.0 + angle2 / 720.0 + angle2 * angle2 / 30240.0
    else:
        c = 1.0 / angle2 - (1.0 + math.cos(angle)) / (2.0 * angle * math.sin(angle))
    return np.eye(3) + 0.5 * s + c * (s @ s)


def pose_to_text(pose: Pose) -> str:
    """Seven-number text form: qw qx qy qz tx ty tz (round-trip exact)."""
    w, x, y, z = pose.rotation.q
    t = pose.translation
    return " ".join(repr(float(v)) for v in (w, x, y, z, t[0], t[1], t[2]))


def pose_from_tokens(tokens) -> Pose:
    """Parse 7 quaternion+translation numbers or a row-major 3x4 matrix."""
    values = [float(tok) for tok in tokens]
    if len(values) == 7:
        return Pose(Rotation(np.array(values[:4])), np.array(values[4:]))
    if len(values) == 12:
        return Pose.from_matrix(np.array(values).reshape(3, 4))
    raise ValueError(f"expected 7 or 12 numbers for a pose, got {len(values)}")
