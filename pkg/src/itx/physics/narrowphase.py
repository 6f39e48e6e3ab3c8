"""Pairwise contact generation.

Dispatch: sphere-sphere and sphere-box analytically, box-box by separating
axes with reference-face clipping, everything involving a capsule or hull by
GJK over support functions (EPA for penetration). Contacts report a single
point at the midpoint of the closest features, a unit normal pointing from
the first body to the second, and the penetration depth along that normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._kernels import epa_penetration, gjk_closest
from ..geometry import (
    Pose,
    Vec3,
    rotation_matrix,
    vec_add,
    vec_cross,
    vec_dot,
    vec_norm,
    vec_scale,
    vec_sub,
)
from ..model import Box, Capsule, ColliderShape, ConvexHull, Sphere
from .shapes import core_vertices


@dataclass(frozen=True)
class GeomContact:
    """Geometric contact between shape A and shape B (normal points A->B)."""

    depth: float
    normal: Vec3
    point: Vec3
    degenerate: bool = False


def _pose7(p: Pose) -> np.ndarray:
    return np.array(
        [
            p.position[0],
            p.position[1],
            p.position[2],
            p.orientation[0],
            p.orientation[1],
            p.orientation[2],
            p.orientation[3],
        ],
        dtype=np.float64,
    )


def _midpoint(a: Vec3, b: Vec3) -> Vec3:
    return ((a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5, (a[2] + b[2]) * 0.5)


# --- analytic: spheres ---------------------------------------------------------


def _sphere_sphere(ra: float, ca: Vec3, rb: float, cb: Vec3) -> GeomContact | None:
    delta = vec_sub(cb, ca)
    d = vec_norm(delta)
    depth = (ra + rb) - d
    if depth < 0.0:
        return None
    if d > 1e-12:
        n = (delta[0] / d, delta[1] / d, delta[2] / d)
        pa = vec_add(ca, vec_scale(n, ra))
        pb = vec_sub(cb, vec_scale(n, rb))
        return GeomContact(depth, n, _midpoint(pa, pb))
    return GeomContact(ra + rb, (0.0, 0.0, 1.0), ca, degenerate=True)


def _sphere_box(r: float, center: Vec3, box: Box, pose_b: Pose) -> GeomContact | None:
    """Sphere is body A, box is body B."""
    inv = pose_b.inverse()
    c = inv.transform(center)
    h = box.half_extents
    q = (
        min(max(c[0], -h[0]), h[0]),
        min(max(c[1], -h[1]), h[1]),
        min(max(c[2], -h[2]), h[2]),
    )
    delta = vec_sub(c, q)
    d2 = vec_dot(delta, delta)
    if d2 > 0.0:
        d = math.sqrt(d2)
        depth = r - d
        if depth < 0.0:
            return None
        dir_ba = pose_b.rotate((delta[0] / d, delta[1] / d, delta[2] / d))
        n = (-dir_ba[0], -dir_ba[1], -dir_ba[2])
        box_pt = pose_b.transform(q)
        sphere_pt = vec_add(center, vec_scale(n, r))
        return GeomContact(depth, n, _midpoint(sphere_pt, box_pt))

    # center inside the box: exit through the nearest face
    best_k = 0
    best_sign = 1.0
    best_dist = math.inf
    for k in range(3):
        dpos = h[k] - c[k]
        dneg = c[k] + h[k]
        if dpos < best_dist:
            best_dist = dpos
            best_k, best_sign = k, 1.0
        if dneg < best_dist:
            best_dist = dneg
            best_k, best_sign = k, -1.0
    n_local = [0.0, 0.0, 0.0]
    n_local[best_k] = best_sign
    dir_ba = pose_b.rotate((n_local[0], n_local[1], n_local[2]))
    n = (-dir_ba[0], -dir_ba[1], -dir_ba[2])
    q_face = list(c)
    q_face[best_k] = best_sign * h[best_k]
    return GeomContact(r + best_dist, n, pose_b.transform((q_face[0], q_face[1], q_face[2])))


# --- SAT: box-box ---------------------------------------------------------------


def _columns(pose: Pose) -> tuple[Vec3, Vec3, Vec3]:
    rows = rotation_matrix(pose.orientation)
    return (
        (rows[0][0], rows[1][0], rows[2][0]),
        (rows[0][1], rows[1][1], rows[2][1]),
        (rows[0][2], rows[1][2], rows[2][2]),
    )


def _box_corners(box: Box, pose: Pose) -> list[Vec3]:
    h = box.half_extents
    out = []
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                out.append(pose.transform((sx * h[0], sy * h[1], sz * h[2])))
    return out


def _closest_segment_segment(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> tuple[Vec3, Vec3]:
    d1 = vec_sub(q1, p1)
    d2 = vec_sub(q2, p2)
    r = vec_sub(p1, p2)
    a = vec_dot(d1, d1)
    e = vec_dot(d2, d2)
    f = vec_dot(d2, r)
    if a <= 1e-18 and e <= 1e-18:
        return p1, p2
    if a <= 1e-18:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = vec_dot(d1, r)
        if e <= 1e-18:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = vec_dot(d1, d2)
            denom = a * e - b * b
            s = min(max((b * f - c * e) / denom, 0.0), 1.0) if denom > 1e-18 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
    return vec_add(p1, vec_scale(d1, s)), vec_add(p2, vec_scale(d2, t))


def _box_box(
    box_a: Box, pose_a: Pose, box_b: Box, pose_b: Pose, manifold: list[GeomContact] | None = None
) -> GeomContact | None:
    """SAT contact; when `manifold` is given it also receives one contact
    per clipped face point (the solver wants the full patch, the public
    contract is the single midpoint contact)."""
    axes_a = _columns(pose_a)
    axes_b = _columns(pose_b)
    ha = box_a.half_extents
    hb = box_b.half_extents
    d = vec_sub(pose_b.position, pose_a.position)

    def overlap_on(axis: Vec3) -> float:
        ra = sum(ha[k] * abs(vec_dot(axes_a[k], axis)) for k in range(3))
        rb = sum(hb[k] * abs(vec_dot(axes_b[k], axis)) for k in range(3))
        return ra + rb - abs(vec_dot(d, axis))

    best_face = None  # (overlap, axis, owner, index)
    for k in range(3):
        ov = overlap_on(axes_a[k])
        if ov < 0.0:
            return None
        if best_face is None or ov < best_face[0]:
            best_face = (ov, axes_a[k], "a", k)
    for k in range(3):
        ov = overlap_on(axes_b[k])
        if ov < 0.0:
            return None
        if best_face is None or ov < best_face[0]:
            best_face = (ov, axes_b[k], "b", k)

    best_edge = None  # (overlap, axis, i, j)
    for i in range(3):
        for j in range(3):
            axis = vec_cross(axes_a[i], axes_b[j])
            len2 = vec_dot(axis, axis)
            if len2 < 1e-10:
                continue
            inv = 1.0 / math.sqrt(len2)
            axis = (axis[0] * inv, axis[1] * inv, axis[2] * inv)
            ov = overlap_on(axis)
            if ov < 0.0:
                return None
            if best_edge is None or ov < best_edge[0]:
                best_edge = (ov, axis, i, j)

    use_edge = best_edge is not None and best_edge[0] < best_face[0] * 0.95 - 1e-9

    if use_edge:
        depth, axis, i, j = best_edge
        n = axis if vec_dot(axis, d) >= 0.0 else vec_scale(axis, -1.0)
        # supporting edge of A along +n
        ca = pose_a.position
        for k in range(3):
            if k == i:
                continue
            s = 1.0 if vec_dot(axes_a[k], n) >= 0.0 else -1.0
            ca = vec_add(ca, vec_scale(axes_a[k], s * ha[k]))
        pa1 = vec_add(ca, vec_scale(axes_a[i], ha[i]))
        pa2 = vec_sub(ca, vec_scale(axes_a[i], ha[i]))
        cb = pose_b.position
        for k in range(3):
            if k == j:
                continue
            s = -1.0 if vec_dot(axes_b[k], n) >= 0.0 else 1.0
            cb = vec_add(cb, vec_scale(axes_b[k], s * hb[k]))
        pb1 = vec_add(cb, vec_scale(axes_b[j], hb[j]))
        pb2 = vec_sub(cb, vec_scale(axes_b[j], hb[j]))
        wa, wb = _closest_segment_segment(pa1, pa2, pb1, pb2)
        contact = GeomContact(depth, n, _midpoint(wa, wb))
        if manifold is not None:
            manifold.append(contact)
        return contact

    depth, axis, owner, _ = best_face
    n = axis if vec_dot(axis, d) >= 0.0 else vec_scale(axis, -1.0)
    if owner == "a":
        ref_box, ref_pose, ref_axes, ref_h = box_a, pose_a, axes_a, ha
        inc_box, inc_pose, inc_axes, inc_h = box_b, pose_b, axes_b, hb
        ref_n = n
    else:
        ref_box, ref_pose, ref_axes, ref_h = box_b, pose_b, axes_b, hb
        inc_box, inc_pose, inc_axes, inc_h = box_a, pose_a, axes_a, ha
        ref_n = vec_scale(n, -1.0)

    # reference face data
    best_dot = -math.inf
    ref_k, ref_sign = 0, 1.0
    for k in range(3):
        dk = vec_dot(ref_axes[k], ref_n)
        if dk > best_dot:
            best_dot = dk
            ref_k, ref_sign = k, 1.0
        if -dk > best_dot:
            best_dot = -dk
            ref_k, ref_sign = k, -1.0
    face_center = vec_add(ref_pose.position, vec_scale(ref_axes[ref_k], ref_sign * ref_h[ref_k]))
    face_normal = vec_scale(ref_axes[ref_k], ref_sign)

    # incident face: most anti-parallel to the reference normal
    best_dot = math.inf
    inc_k, inc_sign = 0, 1.0
    for k in range(3):
        dk = vec_dot(inc_axes[k], face_normal)
        if dk < best_dot:
            best_dot = dk
            inc_k, inc_sign = k, 1.0
        if -dk < best_dot:
            best_dot = -dk
            inc_k, inc_sign = k, -1.0
    u, v = [k for k in range(3) if k != inc_k]
    inc_center = vec_add(inc_pose.position, vec_scale(inc_axes[inc_k], inc_sign * inc_h[inc_k]))
    poly = []
    for su in (-1.0, 1.0):
        for sv in (su, -su):  # corner order tracing the quad
            p = vec_add(inc_center, vec_scale(inc_axes[u], su * inc_h[u]))
            poly.append(vec_add(p, vec_scale(inc_axes[v], sv * inc_h[v])))

    # clip against the four reference side planes
    for k in range(3):
        if k == ref_k:
            continue
        for sign in (1.0, -1.0):
            plane_n = vec_scale(ref_axes[k], sign)
            offset = vec_dot(plane_n, ref_pose.position) + ref_h[k]
            clipped = []
            for idx in range(len(poly)):
                cur = poly[idx]
                nxt = poly[(idx + 1) % len(poly)]
                dc = vec_dot(plane_n, cur) - offset
                dn = vec_dot(plane_n, nxt) - offset
                if dc <= 0.0:
                    clipped.append(cur)
                if (dc < 0.0 < dn) or (dn < 0.0 < dc):
                    t = dc / (dc - dn)
                    clipped.append(vec_add(cur, vec_scale(vec_sub(nxt, cur), t)))
            poly = clipped
            if not poly:
                break
        if not poly:
            break

    kept = []
    for p in poly:
        pen = vec_dot(face_normal, vec_sub(face_center, p))
        if pen >= -1e-9:
            kept.append((p, max(pen, 0.0)))
    pool = kept if kept else [(p, 0.0) for p in poly]
    if not pool:
        point = _midpoint(pose_a.position, pose_b.position)
        contact = GeomContact(depth, n, point, degenerate=True)
        if manifold is not None:
            manifold.append(contact)
        return contact
    if manifold is not None:
        for p, pen in pool:
            manifold.append(GeomContact(pen, n, p))
    sx = sy = sz = 0.0
    for p, _ in pool:
        sx += p[0]
        sy += p[1]
        sz += p[2]
    count = float(len(pool))
    return GeomContact(depth, n, (sx / count, sy / count, sz / count))


# --- GJK / EPA ------------------------------------------------------------------


def collide_cores(
    core_a: np.ndarray,
    margin_a: float,
    pose_a: Pose,
    core_b: np.ndarray,
    margin_b: float,
    pose_b: Pose,
) -> GeomContact | None:
    pa7 = _pose7(pose_a)
    pb7 = _pose7(pose_b)
    dist, pa, pb, hit = gjk_closest(core_a, pa7, core_b, pb7)
    margins = margin_a + margin_b
    if not hit:
        depth = margins - dist
        if depth < 0.0:
            return None
        if dist > 1e-9:
            n = (
                (pb[0] - pa[0]) / dist,
                (pb[1] - pa[1]) / dist,
                (pb[2] - pa[2]) / dist,
            )
            sa = vec_add(pa, vec_scale(n, margin_a))
            sb = vec_sub(pb, vec_scale(n, margin_b))
            return GeomContact(depth, n, _midpoint(sa, sb))
        hit = 1  # cores touching: treat as intersecting

    depth_c, n, wa, wb, ok = epa_penetration(core_a, pa7, core_b, pb7)
    if depth_c < 0.0:
        # no usable polytope (flat or point cores); deterministic fallback
        delta = vec_sub(pose_b.position, pose_a.position)
        dn = vec_norm(delta)
        n = (delta[0] / dn, delta[1] / dn, delta[2] / dn) if dn > 1e-12 else (0.0, 0.0, 1.0)
        return GeomContact(margins, n, _midpoint(pose_a.position, pose_b.position), degenerate=True)
    sa = vec_add(wa, vec_scale(n, margin_a))
    sb = vec_sub(wb, vec_scale(n, margin_b))
    return GeomContact(depth_c + margins, n, _midpoint(sa, sb), degenerate=not ok)


def _flip(c: GeomContact | None) -> GeomContact | None:
    if c is None:
        return None
    return GeomContact(
        c.depth, (-c.normal[0], -c.normal[1], -c.normal[2]), c.point, c.degenerate
    )


_RANK = {Sphere: 0, Box: 1, Capsule: 2, ConvexHull: 3}


def collide_pair(
    shape_a: ColliderShape, pose_a: Pose, shape_b: ColliderShape, pose_b: Pose
) -> GeomContact | None:
    """Contact between two posed shapes, or None when separated."""
    if _RANK[type(shape_a)] > _RANK[type(shape_b)]:
        return _flip(collide_pair(shape_b, pose_b, shape_a, pose_a))

    if isinstance(shape_a, Sphere) and isinstance(shape_b, Sphere):
        return _sphere_sphere(shape_a.radius, pose_a.position, shape_b.radius, pose_b.position)
    if isinstance(shape_a, Sphere) and isinstance(shape_b, Box):
        return _sphere_box(shape_a.radius, pose_a.position, shape_b, pose_b)
    if isinstance(shape_a, Box) and isinstance(shape_b, Box):
        return _box_box(shape_a, pose_a, shape_b, pose_b)

    core_a, margin_a = core_vertices(shape_a)
    core_b, margin_b = core_vertices(shape_b)
    return collide_cores(core_a, margin_a, pose_a, core_b, margin_b, pose_b)


def collide_manifold(
    shape_a: ColliderShape, pose_a: Pose, shape_b: ColliderShape, pose_b: Pose
) -> list[GeomContact]:
    """Contact set for the solver: box-box face contacts yield the whole
    clipped patch (stable resting/sliding); every other pair one contact."""
    if isinstance(shape_a, Box) and isinstance(shape_b, Box):
        manifold: list[GeomContact] = []
        if _box_box(shape_a, pose_a, shape_b, pose_b, manifold) is None:
            return []
        return manifold
    c = collide_pair(shape_a, pose_a, shape_b, pose_b)
    return [] if c is None else [c]


def pair_distance(
    shape_a: ColliderShape, pose_a: Pose, shape_b: ColliderShape, pose_b: Pose
) -> float:
    """Separation distance between shape surfaces (0 when touching/overlapping)."""
    core_a, margin_a = core_vertices(shape_a)
    core_b, margin_b = core_vertices(shape_b)
    dist, _, _, hit = gjk_closest(core_a, _pose7(pose_a), core_b, _pose7(pose_b))
    if hit:
        return 0.0
    return max(0.0, dist - margin_a - margin_b)
