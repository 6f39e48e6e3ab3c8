"""Vector, quaternion, and pose math.

Everything here operates on plain tuples of Python floats so results are
deterministic and identical regardless of which kernel backend is active.
Quaternions use (w, x, y, z) order throughout the codebase and on the wire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)
ZERO_VEC: Vec3 = (0.0, 0.0, 0.0)

DEG2RAD = math.pi / 180.0
RAD2DEG = 180.0 / math.pi


def vec_add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vec_sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vec_scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def vec_dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vec_cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def vec_norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def vec_dist(a: Vec3, b: Vec3) -> float:
    return vec_norm(vec_sub(a, b))


def vec_normalize(a: Vec3) -> Vec3:
    n = vec_norm(a)
    if n == 0.0:
        return (0.0, 0.0, 0.0)
    return (a[0] / n, a[1] / n, a[2] / n)


def vec_finite(a: Vec3) -> bool:
    return math.isfinite(a[0]) and math.isfinite(a[1]) and math.isfinite(a[2])


def quat_mul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conj(q: Quat) -> Quat:
    return (q[0], -q[1], -q[2], -q[3])


def quat_norm(q: Quat) -> float:
    return math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])


def quat_normalize(q: Quat) -> Quat:
    n = quat_norm(q)
    if n == 0.0:
        return IDENTITY_QUAT
    if n == 1.0:
        return q
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def quat_dot(a: Quat, b: Quat) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    """Rotate vector v by unit quaternion q (t = 2 qv x v form)."""
    qv = (q[1], q[2], q[3])
    t = vec_scale(vec_cross(qv, v), 2.0)
    return vec_add(vec_add(v, vec_scale(t, q[0])), vec_cross(qv, t))


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    half = 0.5 * angle
    s = math.sin(half)
    return (math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s)


def quat_from_rpy(roll: float, pitch: float, yaw: float) -> Quat:
    """Intrinsic roll (x), pitch (y), yaw (z) in radians; R = Rz Ry Rx."""
    cr = math.cos(0.5 * roll)
    sr = math.sin(0.5 * roll)
    cp = math.cos(0.5 * pitch)
    sp = math.sin(0.5 * pitch)
    cy = math.cos(0.5 * yaw)
    sy = math.sin(0.5 * yaw)
    return (
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    )


def quat_integrate(q: Quat, omega: Vec3, dt: float) -> Quat:
    """Advance orientation by angular velocity via the exponential map."""
    wx, wy, wz = omega
    angle = math.sqrt(wx * wx + wy * wy + wz * wz) * dt
    if angle < 1e-12:
        return q
    inv = 1.0 / math.sqrt(wx * wx + wy * wy + wz * wz)
    dq = quat_from_axis_angle((wx * inv, wy * inv, wz * inv), angle)
    return quat_normalize(quat_mul(dq, q))


def quat_slerp(a: Quat, b: Quat, t: float) -> Quat:
    """Spherical interpolation, shortest arc."""
    d = quat_dot(a, b)
    if d < 0.0:
        b = (-b[0], -b[1], -b[2], -b[3])
        d = -d
    if d > 0.9995:
        mixed = tuple(a[i] + t * (b[i] - a[i]) for i in range(4))
        return quat_normalize(mixed)  # type: ignore[arg-type]
    theta = math.acos(min(1.0, d))
    s = math.sin(theta)
    wa = math.sin((1.0 - t) * theta) / s
    wb = math.sin(t * theta) / s
    return (
        wa * a[0] + wb * b[0],
        wa * a[1] + wb * b[1],
        wa * a[2] + wb * b[2],
        wa * a[3] + wb * b[3],
    )


def rotation_matrix(q: Quat) -> tuple[Vec3, Vec3, Vec3]:
    """Rows of the rotation matrix for q."""
    w, x, y, z = q
    return (
        (1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)),
        (2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)),
        (2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)),
    )


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotate by orientation, then translate by position."""

    position: Vec3 = ZERO_VEC
    orientation: Quat = IDENTITY_QUAT

    def transform(self, point: Vec3) -> Vec3:
        return vec_add(self.position, quat_rotate(self.orientation, point))

    def rotate(self, v: Vec3) -> Vec3:
        return quat_rotate(self.orientation, v)

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply other first, then self."""
        return Pose(
            self.transform(other.position),
            quat_mul(self.orientation, other.orientation),
        )

    def inverse(self) -> "Pose":
        qi = quat_conj(self.orientation)
        return Pose(quat_rotate(qi, vec_scale(self.position, -1.0)), qi)

    def is_valid(self, tol: float = 1e-6) -> bool:
        if not vec_finite(self.position):
            return False
        if not all(math.isfinite(c) for c in self.orientation):
            return False
        return abs(quat_norm(self.orientation) - 1.0) <= tol


IDENTITY_POSE = Pose()


def pose_error(a: Pose, b: Pose) -> tuple[float, float]:
    """Positional and angular distance between two poses.

    The angular term uses |dot| so q and -q compare equal; result in [0, pi].
    """
    d_pos = vec_dist(a.position, b.position)
    d = abs(quat_dot(a.orientation, b.orientation))
    d_rot = 2.0 * math.acos(min(1.0, d))
    return d_pos, d_rot
