"""Vector/quaternion/matrix math and the SE(3)+scale transform component.

Conventions: right-handed, z-up world. Quaternions are stored (w, x, y, z)
and kept unit length. Cameras look down -z in their local frame with +y up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError


def normalize(v):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise GeometryError("cannot normalize zero-length vector")
    return v / n


# ---------------------------------------------------------------------------
# Quaternions (w, x, y, z)

def quat_identity():
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise GeometryError("zero quaternion")
    return q / n


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_from_axis_angle(axis, angle):
    axis = normalize(axis)
    h = 0.5 * angle
    s = np.sin(h)
    return np.array([np.cos(h), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_to_matrix(q):
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(m):
    """Rotation matrix (3x3, orthonormal) to unit quaternion, w >= 0."""
    m = np.asarray(m, dtype=np.float64)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    if q[0] < 0.0:
        q = -q
    return quat_normalize(q)


def quat_slerp(a, b, s):
    """Shortest-arc slerp; falls back to nlerp when the arc is tiny."""
    a = quat_normalize(a)
    b = quat_normalize(b)
    d = float(np.dot(a, b))
    if d < 0.0:
        b = -b
        d = -d
    if d > 0.9995:
        q = a + s * (b - a)
        return quat_normalize(q)
    theta = np.arccos(np.clip(d, -1.0, 1.0))
    sin_theta = np.sin(theta)
    wa = np.sin((1.0 - s) * theta) / sin_theta
    wb = np.sin(s * theta) / sin_theta
    return quat_normalize(wa * a + wb * b)


def quat_rotate(q, v):
    return quat_to_matrix(q) @ np.asarray(v, dtype=np.float64)


# ---------------------------------------------------------------------------
# Affine matrices

def trs_matrix(translation, rotation, scale):
    """Compose translation * rotation * scale into an affine 4x4."""
    m = np.eye(4)
    r = quat_to_matrix(rotation)
    m[:3, :3] = r * np.asarray(scale, dtype=np.float64)[None, :]
    m[:3, 3] = translation
    return m


def affine_inverse(m):
    m = np.asarray(m, dtype=np.float64)
    a = m[:3, :3]
    det = np.linalg.det(a)
    if abs(det) < 1e-300 or not np.isfinite(det):
        raise GeometryError("singular matrix has no inverse")
    inv = np.eye(4)
    ai = np.linalg.inv(a)
    inv[:3, :3] = ai
    inv[:3, 3] = -ai @ m[:3, 3]
    return inv


def transform_point(m, p):
    p = np.asarray(p, dtype=np.float64)
    return m[:3, :3] @ p + m[:3, 3]


def transform_direction(m, d):
    return m[:3, :3] @ np.asarray(d, dtype=np.float64)


def transform_normal(m, n):
    """Transform a normal with the inverse-transpose; result is normalized."""
    a = np.linalg.inv(m[:3, :3]).T
    return normalize(a @ np.asarray(n, dtype=np.float64))


def look_at_rotation(eye, at, up):
    """Rotation whose local -z points from eye toward at, roll fixed by up."""
    eye = np.asarray(eye, dtype=np.float64)
    at = np.asarray(at, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    fwd = at - eye
    if np.linalg.norm(fwd) < 1e-12:
        raise GeometryError("look_at: eye and at coincide")
    fwd = normalize(fwd)
    z_axis = -fwd
    x_axis = np.cross(up, z_axis)
    if np.linalg.norm(x_axis) < 1e-9:
        raise GeometryError("look_at: up is parallel to the view direction")
    x_axis = normalize(x_axis)
    y_axis = np.cross(z_axis, x_axis)
    r = np.stack([x_axis, y_axis, z_axis], axis=1)
    return quat_from_matrix(r)


# ---------------------------------------------------------------------------
# Transform component payload

@dataclass
class Transform:
    """Translation/rotation/scale with a second key from the previous snapshot.

    The prev_* fields drive motion blur and optical flow: interpolate(0)
    reproduces the pose at the previous snapshot, interpolate(1) the current.
    """

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=quat_identity)
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    prev_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_rotation: np.ndarray = field(default_factory=quat_identity)
    prev_scale: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=np.float64).copy()
        self.rotation = quat_normalize(self.rotation)
        self.scale = np.asarray(self.scale, dtype=np.float64).copy()
        if np.any(self.scale <= 0.0):
            raise GeometryError("transform scale components must be > 0")
        self.prev_translation = np.asarray(self.prev_translation, dtype=np.float64).copy()
        self.prev_rotation = quat_normalize(self.prev_rotation)
        self.prev_scale = np.asarray(self.prev_scale, dtype=np.float64).copy()

    def set_translation(self, t):
        self.translation = np.asarray(t, dtype=np.float64).copy()

    def set_rotation(self, q):
        self.rotation = quat_normalize(q)

    def set_scale(self, s):
        s = np.asarray(s, dtype=np.float64)
        if s.ndim == 0:
            s = np.full(3, float(s))
        if np.any(s <= 0.0):
            raise GeometryError("transform scale components must be > 0")
        self.scale = s.copy()

    def look_at(self, eye, at, up):
        self.rotation = look_at_rotation(eye, at, up)
        self.translation = np.asarray(eye, dtype=np.float64).copy()

    def to_matrix(self):
        return trs_matrix(self.translation, self.rotation, self.scale)

    def prev_matrix(self):
        return trs_matrix(self.prev_translation, self.prev_rotation, self.prev_scale)

    def interpolate(self, s):
        """Affine matrix at shutter parameter s; lerp T/S, slerp R, s clamped."""
        s = min(max(float(s), 0.0), 1.0)
        t = (1.0 - s) * self.prev_translation + s * self.translation
        sc = (1.0 - s) * self.prev_scale + s * self.scale
        q = quat_slerp(self.prev_rotation, self.rotation, s)
        return trs_matrix(t, q, sc)

    def commit_prev(self):
        """Copy the current keys into the previous-snapshot keys."""
        self.prev_translation = self.translation.copy()
        self.prev_rotation = self.rotation.copy()
        self.prev_scale = self.scale.copy()

    def is_static(self):
        return (np.array_equal(self.translation, self.prev_translation)
                and np.array_equal(self.rotation, self.prev_rotation)
                and np.array_equal(self.scale, self.prev_scale))


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    t_min: float = 1e-6
    t_max: float = np.inf
    time: float = 1.0

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.direction = np.asarray(self.direction, dtype=np.float64)
        n = np.linalg.norm(self.direction)
        if abs(n - 1.0) > 1e-6:
            if n == 0.0:
                raise GeometryError("ray direction is zero")
            self.direction = self.direction / n
        if not self.t_min < self.t_max:
            raise GeometryError("ray requires t_min < t_max")
        self.time = min(max(float(self.time), 0.0), 1.0)
