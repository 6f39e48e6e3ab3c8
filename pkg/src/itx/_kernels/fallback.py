"""Pure-Python kernels (reference backend).

Arguments mirror the compiled extension exactly; see the package docstring
for the surface. Convex shapes arrive as core-vertex arrays in local frame
plus a pose [px,py,pz,qw,qx,qy,qz]; rounded shapes (sphere, capsule) are
handled by the caller as cores with a margin radius.

The GJK distance loop uses the classic simplex case analysis (vertex /
segment / triangle / tetrahedron closest-point with barycentrics) and EPA
expands the terminal simplex into a face polytope. All arithmetic is scalar
double precision in a fixed order so the extension reproduces it bitwise.
"""

from __future__ import annotations

import math

GJK_MAX_ITERS = 128
EPA_MAX_ITERS = 64
_EPS_CONTAIN = 1e-24
_EPS_PROGRESS = 1e-12
_EPS_GROWTH = 1e-10


def _rotate(qw, qx, qy, qz, vx, vy, vz):
    # v + 2 w (q x v) + 2 q x (q x v)
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    return (
        vx + qw * tx + (qy * tz - qz * ty),
        vy + qw * ty + (qz * tx - qx * tz),
        vz + qw * tz + (qx * ty - qy * tx),
    )


def _rotate_inv(qw, qx, qy, qz, vx, vy, vz):
    return _rotate(qw, -qx, -qy, -qz, vx, vy, vz)


class _Shape:
    """World-space support function over a core vertex set."""

    __slots__ = ("verts", "px", "py", "pz", "qw", "qx", "qy", "qz")

    def __init__(self, verts, pose):
        self.verts = [(float(v[0]), float(v[1]), float(v[2])) for v in verts]
        self.px = float(pose[0])
        self.py = float(pose[1])
        self.pz = float(pose[2])
        self.qw = float(pose[3])
        self.qx = float(pose[4])
        self.qy = float(pose[5])
        self.qz = float(pose[6])

    def support(self, dx, dy, dz):
        lx, ly, lz = _rotate_inv(self.qw, self.qx, self.qy, self.qz, dx, dy, dz)
        best = -math.inf
        bx = by = bz = 0.0
        for (vx, vy, vz) in self.verts:
            d = vx * lx + vy * ly + vz * lz
            if d > best:
                best = d
                bx, by, bz = vx, vy, vz
        wx, wy, wz = _rotate(self.qw, self.qx, self.qy, self.qz, bx, by, bz)
        return (wx + self.px, wy + self.py, wz + self.pz)


def _support_mink(sa, sb, dx, dy, dz):
    pa = sa.support(dx, dy, dz)
    pb = sb.support(-dx, -dy, -dz)
    return (pa[0] - pb[0], pa[1] - pb[1], pa[2] - pb[2]), pa, pb


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _closest_segment(a, b):
    """Closest point to origin on segment ab -> (keep, lambdas)."""
    ab = _sub(b, a)
    denom = _dot(ab, ab)
    if denom <= 0.0:
        return [0], [1.0]
    t = -_dot(a, ab) / denom
    if t <= 0.0:
        return [0], [1.0]
    if t >= 1.0:
        return [1], [1.0]
    return [0, 1], [1.0 - t, t]


def _closest_triangle(a, b, c):
    """Closest point to origin on triangle abc -> (keep, lambdas)."""
    ab = _sub(b, a)
    ac = _sub(c, a)
    d1 = -_dot(ab, a)
    d2 = -_dot(ac, a)
    if d1 <= 0.0 and d2 <= 0.0:
        return [0], [1.0]
    d3 = -_dot(ab, b)
    d4 = -_dot(ac, b)
    if d3 >= 0.0 and d4 <= d3:
        return [1], [1.0]
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3)
        return [0, 1], [1.0 - t, t]
    d5 = -_dot(ab, c)
    d6 = -_dot(ac, c)
    if d6 >= 0.0 and d5 <= d6:
        return [2], [1.0]
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        t = d2 / (d2 - d6)
        return [0, 2], [1.0 - t, t]
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return [1, 2], [1.0 - t, t]
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return [0, 1, 2], [1.0 - v - w, v, w]


def _solve_simplex(pts):
    """Reduce simplex to the feature closest to origin.

    Returns (keep_indices, lambdas, inside) where inside means a tetrahedron
    contains the origin.
    """
    n = len(pts)
    if n == 1:
        return [0], [1.0], False
    if n == 2:
        keep, lam = _closest_segment(pts[0], pts[1])
        return keep, lam, False
    if n == 3:
        keep, lam = _closest_triangle(pts[0], pts[1], pts[2])
        return keep, lam, False

    a, b, c, d = pts
    faces = ((0, 1, 2, 3), (0, 2, 3, 1), (0, 3, 1, 2), (1, 3, 2, 0))
    best_dist = math.inf
    best_keep: list[int] | None = None
    best_lam: list[float] | None = None
    outside_any = False
    for (i, j, k, other) in faces:
        pi, pj, pk, po = pts[i], pts[j], pts[k], pts[other]
        normal = _cross(_sub(pj, pi), _sub(pk, pi))
        signp = -_dot(normal, pi)  # origin side
        signd = _dot(normal, _sub(po, pi))
        if abs(signd) < 1e-12 or signp * signd < 0.0:
            outside_any = True
            keep3, lam3 = _closest_triangle(pi, pj, pk)
            vx = vy = vz = 0.0
            idx = (i, j, k)
            for kk, ll in zip(keep3, lam3):
                p = pts[idx[kk]]
                vx += ll * p[0]
                vy += ll * p[1]
                vz += ll * p[2]
            dist = vx * vx + vy * vy + vz * vz
            if dist < best_dist:
                best_dist = dist
                best_keep = [idx[kk] for kk in keep3]
                best_lam = lam3
    if not outside_any:
        return [0, 1, 2, 3], [0.25, 0.25, 0.25, 0.25], True
    return best_keep, best_lam, False  # type: ignore[return-value]


def _gjk_core(sa, sb):
    """Shared GJK loop.

    Returns (dist, pa, pb, hit, simplex) where simplex is the terminal list
    of (w, support_a, support_b) triples.
    """
    dx = sb.px - sa.px
    dy = sb.py - sa.py
    dz = sb.pz - sa.pz
    if dx * dx + dy * dy + dz * dz < 1e-18:
        dx, dy, dz = 1.0, 0.0, 0.0
    w, pa, pb = _support_mink(sa, sb, dx, dy, dz)
    simplex = [(w, pa, pb)]

    vx, vy, vz = w
    lam = [1.0]
    for _ in range(GJK_MAX_ITERS):
        keep, lam, inside = _solve_simplex([s[0] for s in simplex])
        simplex = [simplex[i] for i in keep]
        vx = vy = vz = 0.0
        for ll, (pw, _, _) in zip(lam, simplex):
            vx += ll * pw[0]
            vy += ll * pw[1]
            vz += ll * pw[2]
        if inside:
            return 0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 1, simplex
        vv = vx * vx + vy * vy + vz * vz
        if vv < _EPS_CONTAIN:
            return 0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 1, simplex
        w, pa, pb = _support_mink(sa, sb, -vx, -vy, -vz)
        progress = vv - (vx * w[0] + vy * w[1] + vz * w[2])
        if progress <= _EPS_PROGRESS * vv:
            break
        dup = False
        for (ew, _, _) in simplex:
            if ew[0] == w[0] and ew[1] == w[1] and ew[2] == w[2]:
                dup = True
                break
        if dup:
            break
        simplex.append((w, pa, pb))

    ax = ay = az = bx = by = bz = 0.0
    for ll, (_, spa, spb) in zip(lam, simplex):
        ax += ll * spa[0]
        ay += ll * spa[1]
        az += ll * spa[2]
        bx += ll * spb[0]
        by += ll * spb[1]
        bz += ll * spb[2]
    dist = math.sqrt(vx * vx + vy * vy + vz * vz)
    return dist, (ax, ay, az), (bx, by, bz), 0, simplex


def gjk_closest(verts_a, pose_a, verts_b, pose_b):
    """Distance and witness points between two convex cores.

    Returns (dist, point_a, point_b, hit); hit=1 means the cores intersect
    and the points are meaningless.
    """
    sa = _Shape(verts_a, pose_a)
    sb = _Shape(verts_b, pose_b)
    dist, pa, pb, hit, _ = _gjk_core(sa, sb)
    return dist, pa, pb, hit


def _tetra_contains_origin(pts, tol=1e-10):
    cx = (pts[0][0] + pts[1][0] + pts[2][0] + pts[3][0]) / 4.0
    cy = (pts[0][1] + pts[1][1] + pts[2][1] + pts[3][1]) / 4.0
    cz = (pts[0][2] + pts[1][2] + pts[2][2] + pts[3][2]) / 4.0
    faces = ((0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2))
    for (i, j, k) in faces:
        pi, pj, pk = pts[i], pts[j], pts[k]
        n = _cross(_sub(pj, pi), _sub(pk, pi))
        # orient outward (away from centroid)
        if n[0] * (pi[0] - cx) + n[1] * (pi[1] - cy) + n[2] * (pi[2] - cz) < 0.0:
            n = (-n[0], -n[1], -n[2])
        if _dot(n, pi) < -tol * max(1.0, abs(n[0]) + abs(n[1]) + abs(n[2])):
            return False
    return True


_EXPAND_DIRS = (
    (1.0, 0.0, 0.0),
    (-1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, -1.0, 0.0),
    (0.0, 0.0, 1.0),
    (0.0, 0.0, -1.0),
    (1.0, 1.0, 1.0),
    (-1.0, 1.0, 1.0),
    (1.0, -1.0, 1.0),
    (1.0, 1.0, -1.0),
    (-1.0, -1.0, 1.0),
    (-1.0, 1.0, -1.0),
    (1.0, -1.0, -1.0),
    (-1.0, -1.0, -1.0),
)


def _expand_simplex(sa, sb, simplex):
    """Grow a degenerate terminal simplex into a tetrahedron around origin."""
    pool = list(simplex)
    for d in _EXPAND_DIRS:
        w, pa, pb = _support_mink(sa, sb, d[0], d[1], d[2])
        dup = False
        for (ew, _, _) in pool:
            if ew[0] == w[0] and ew[1] == w[1] and ew[2] == w[2]:
                dup = True
                break
        if not dup:
            pool.append((w, pa, pb))
    n = len(pool)
    if n < 4:
        return None
    for i in range(n - 3):
        for j in range(i + 1, n - 2):
            for k in range(j + 1, n - 1):
                for l in range(k + 1, n):
                    pts = (pool[i][0], pool[j][0], pool[k][0], pool[l][0])
                    e1 = _sub(pts[1], pts[0])
                    e2 = _sub(pts[2], pts[0])
                    e3 = _sub(pts[3], pts[0])
                    vol = _dot(e1, _cross(e2, e3))
                    if abs(vol) < 1e-14:
                        continue
                    if _tetra_contains_origin(pts):
                        return [pool[i], pool[j], pool[k], pool[l]]
    return None


def epa_penetration(verts_a, pose_a, verts_b, pose_b):
    """Penetration depth/normal/witness between intersecting convex cores.

    Returns (depth, normal, point_a, point_b, ok). The normal points from
    shape A toward shape B: translating B by depth*normal separates the
    cores. ok=0 flags a degenerate or non-converged result; depth < 0 means
    no usable data at all.
    """
    sa = _Shape(verts_a, pose_a)
    sb = _Shape(verts_b, pose_b)
    _, _, _, hit, simplex = _gjk_core(sa, sb)
    bad = (-1.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0)
    if not hit:
        return bad

    if len(simplex) < 4 or not _tetra_contains_origin([s[0] for s in simplex]):
        expanded = _expand_simplex(sa, sb, simplex)
        if expanded is None:
            return bad
        simplex = expanded

    verts = list(simplex)
    cx = (verts[0][0][0] + verts[1][0][0] + verts[2][0][0] + verts[3][0][0]) / 4.0
    cy = (verts[0][0][1] + verts[1][0][1] + verts[2][0][1] + verts[3][0][1]) / 4.0
    cz = (verts[0][0][2] + verts[1][0][2] + verts[2][0][2] + verts[3][0][2]) / 4.0

    def make_face(i, j, k):
        pi = verts[i][0]
        n = _cross(_sub(verts[j][0], pi), _sub(verts[k][0], pi))
        nn = math.sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
        if nn < 1e-18:
            return None
        n = (n[0] / nn, n[1] / nn, n[2] / nn)
        if n[0] * (pi[0] - cx) + n[1] * (pi[1] - cy) + n[2] * (pi[2] - cz) < 0.0:
            return (i, k, j, (-n[0], -n[1], -n[2]), -_dot(n, pi))
        return (i, j, k, n, _dot(n, pi))

    faces = []
    for (i, j, k) in ((0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)):
        f = make_face(i, j, k)
        if f is None:
            return bad
        faces.append(f)

    converged = 1
    for it in range(EPA_MAX_ITERS):
        best = 0
        best_d = faces[0][4]
        for fi in range(1, len(faces)):
            if faces[fi][4] < best_d:
                best_d = faces[fi][4]
                best = fi
        bi, bj, bk, bn, bd = faces[best]
        w, pa, pb = _support_mink(sa, sb, bn[0], bn[1], bn[2])
        growth = _dot(bn, w) - bd
        if growth <= _EPS_GROWTH or it == EPA_MAX_ITERS - 1:
            converged = 1 if growth <= _EPS_GROWTH else 0
            keep, lam = _closest_triangle(verts[bi][0], verts[bj][0], verts[bk][0])
            idx = (bi, bj, bk)
            ax = ay = az = bx = by = bz = 0.0
            for kk, ll in zip(keep, lam):
                _, spa, spb = verts[idx[kk]]
                ax += ll * spa[0]
                ay += ll * spa[1]
                az += ll * spa[2]
                bx += ll * spb[0]
                by += ll * spb[1]
                bz += ll * spb[2]
            depth = bd if bd > 0.0 else 0.0
            return depth, bn, (ax, ay, az), (bx, by, bz), converged

        verts.append((w, pa, pb))
        wi = len(verts) - 1
        visible = []
        kept = []
        for f in faces:
            vi = verts[f[0]][0]
            if f[3][0] * (w[0] - vi[0]) + f[3][1] * (w[1] - vi[1]) + f[3][2] * (w[2] - vi[2]) > 1e-12:
                visible.append(f)
            else:
                kept.append(f)
        if not visible:
            # w adds nothing; finish with current best face next round
            continue
        edges: list[tuple[int, int]] = []
        directed = set()
        for f in visible:
            for (a, b) in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                directed.add((a, b))
        for f in visible:
            for (a, b) in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                if (b, a) not in directed:
                    edges.append((a, b))
        faces = kept
        degenerate = False
        for (a, b) in edges:
            f = make_face(a, b, wi)
            if f is None:
                degenerate = True
                break
            faces.append(f)
        if degenerate or not faces:
            return bad

    return bad


# --- rigid-body integration ---------------------------------------------------


def integrate_bodies(pos, quat, vel, omega, dynamic, gravity, dt):
    """Semi-implicit Euler over packed body arrays (in place)."""
    n = pos.shape[0]
    gx = float(gravity[0])
    gy = float(gravity[1])
    gz = float(gravity[2])
    fdt = float(dt)
    for i in range(n):
        if dynamic[i] == 0:
            continue
        vx = float(vel[i, 0]) + gx * fdt
        vy = float(vel[i, 1]) + gy * fdt
        vz = float(vel[i, 2]) + gz * fdt
        vel[i, 0] = vx
        vel[i, 1] = vy
        vel[i, 2] = vz
        pos[i, 0] = float(pos[i, 0]) + vx * fdt
        pos[i, 1] = float(pos[i, 1]) + vy * fdt
        pos[i, 2] = float(pos[i, 2]) + vz * fdt

        wx = float(omega[i, 0])
        wy = float(omega[i, 1])
        wz = float(omega[i, 2])
        wn = math.sqrt(wx * wx + wy * wy + wz * wz)
        angle = wn * fdt
        qw = float(quat[i, 0])
        qx = float(quat[i, 1])
        qy = float(quat[i, 2])
        qz = float(quat[i, 3])
        if angle >= 1e-12:
            half = 0.5 * angle
            s = math.sin(half) / wn
            dw = math.cos(half)
            dx = wx * s
            dy = wy * s
            dz = wz * s
            nw = dw * qw - dx * qx - dy * qy - dz * qz
            nx = dw * qx + dx * qw + dy * qz - dz * qy
            ny = dw * qy - dx * qz + dy * qw + dz * qx
            nz = dw * qz + dx * qy - dy * qx + dz * qw
            qw, qx, qy, qz = nw, nx, ny, nz
        norm = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
        if norm > 0.0 and norm != 1.0:
            qw /= norm
            qx /= norm
            qy /= norm
            qz /= norm
        quat[i, 0] = qw
        quat[i, 1] = qx
        quat[i, 2] = qy
        quat[i, 3] = qz


# --- sequential-impulse contact solver ----------------------------------------


def solve_contacts(
    inv_mass,
    inv_inertia,
    pos,
    vel,
    omega,
    c_ia,
    c_ib,
    c_point,
    c_normal,
    c_depth,
    c_mu,
    iterations,
    dt,
    beta,
    slop,
    bias_enabled,
):
    """Sequential impulses with accumulated clamping and Coulomb friction.

    Mutates vel/omega, plus pos for the positional correction: penetration
    beyond the slop is relaxed by factor beta per pass in a separate
    position sweep (linear split by inverse mass), so the stored velocities
    carry no bias term. Contacts must arrive in canonical order; the solver
    visits them in array order for `iterations` rounds.
    """
    m = c_ia.shape[0]
    if m == 0:
        return
    fdt = float(dt)
    fbeta = float(beta)
    fslop = float(slop)

    # Per-contact cached frame and accumulated impulses.
    rax = [0.0] * m
    ray = [0.0] * m
    raz = [0.0] * m
    rbx = [0.0] * m
    rby = [0.0] * m
    rbz = [0.0] * m
    t1 = [(0.0, 0.0, 0.0)] * m
    t2 = [(0.0, 0.0, 0.0)] * m
    kn = [0.0] * m
    kt1 = [0.0] * m
    kt2 = [0.0] * m
    jn = [0.0] * m
    jt1 = [0.0] * m
    jt2 = [0.0] * m

    def eff_mass(i, j, rxn_a, rxn_b):
        k = float(inv_mass[i]) + float(inv_mass[j])
        iax = float(inv_inertia[i, 0, 0]) * rxn_a[0] + float(inv_inertia[i, 0, 1]) * rxn_a[1] + float(inv_inertia[i, 0, 2]) * rxn_a[2]
        iay = float(inv_inertia[i, 1, 0]) * rxn_a[0] + float(inv_inertia[i, 1, 1]) * rxn_a[1] + float(inv_inertia[i, 1, 2]) * rxn_a[2]
        iaz = float(inv_inertia[i, 2, 0]) * rxn_a[0] + float(inv_inertia[i, 2, 1]) * rxn_a[1] + float(inv_inertia[i, 2, 2]) * rxn_a[2]
        ibx = float(inv_inertia[j, 0, 0]) * rxn_b[0] + float(inv_inertia[j, 0, 1]) * rxn_b[1] + float(inv_inertia[j, 0, 2]) * rxn_b[2]
        iby = float(inv_inertia[j, 1, 0]) * rxn_b[0] + float(inv_inertia[j, 1, 1]) * rxn_b[1] + float(inv_inertia[j, 1, 2]) * rxn_b[2]
        ibz = float(inv_inertia[j, 2, 0]) * rxn_b[0] + float(inv_inertia[j, 2, 1]) * rxn_b[1] + float(inv_inertia[j, 2, 2]) * rxn_b[2]
        k += iax * rxn_a[0] + iay * rxn_a[1] + iaz * rxn_a[2]
        k += ibx * rxn_b[0] + iby * rxn_b[1] + ibz * rxn_b[2]
        return k

    for c in range(m):
        i = int(c_ia[c])
        j = int(c_ib[c])
        nx = float(c_normal[c, 0])
        ny = float(c_normal[c, 1])
        nz = float(c_normal[c, 2])
        rax[c] = float(c_point[c, 0]) - float(pos[i, 0])
        ray[c] = float(c_point[c, 1]) - float(pos[i, 1])
        raz[c] = float(c_point[c, 2]) - float(pos[i, 2])
        rbx[c] = float(c_point[c, 0]) - float(pos[j, 0])
        rby[c] = float(c_point[c, 1]) - float(pos[j, 1])
        rbz[c] = float(c_point[c, 2]) - float(pos[j, 2])

        # tangent basis: cross the normal with the axis of least alignment
        anx = abs(nx)
        any_ = abs(ny)
        anz = abs(nz)
        if anx <= any_ and anx <= anz:
            hx, hy, hz = 1.0, 0.0, 0.0
        elif any_ <= anz:
            hx, hy, hz = 0.0, 1.0, 0.0
        else:
            hx, hy, hz = 0.0, 0.0, 1.0
        ux = ny * hz - nz * hy
        uy = nz * hx - nx * hz
        uz = nx * hy - ny * hx
        un = math.sqrt(ux * ux + uy * uy + uz * uz)
        ux /= un
        uy /= un
        uz /= un
        wx = ny * uz - nz * uy
        wy = nz * ux - nx * uz
        wz = nx * uy - ny * ux
        t1[c] = (ux, uy, uz)
        t2[c] = (wx, wy, wz)

        ncross_a = (ray[c] * nz - raz[c] * ny, raz[c] * nx - rax[c] * nz, rax[c] * ny - ray[c] * nx)
        ncross_b = (rby[c] * nz - rbz[c] * ny, rbz[c] * nx - rbx[c] * nz, rbx[c] * ny - rby[c] * nx)
        kn[c] = eff_mass(i, j, ncross_a, ncross_b)
        ucross_a = (ray[c] * uz - raz[c] * uy, raz[c] * ux - rax[c] * uz, rax[c] * uy - ray[c] * ux)
        ucross_b = (rby[c] * uz - rbz[c] * uy, rbz[c] * ux - rbx[c] * uz, rbx[c] * uy - rby[c] * ux)
        kt1[c] = eff_mass(i, j, ucross_a, ucross_b)
        wcross_a = (ray[c] * wz - raz[c] * wy, raz[c] * wx - rax[c] * wz, rax[c] * wy - ray[c] * wx)
        wcross_b = (rby[c] * wz - rbz[c] * wy, rbz[c] * wx - rbx[c] * wz, rbx[c] * wy - rby[c] * wx)
        kt2[c] = eff_mass(i, j, wcross_a, wcross_b)

    def rel_vel(c, i, j):
        ux = float(vel[j, 0]) + float(omega[j, 1]) * rbz[c] - float(omega[j, 2]) * rby[c]
        uy = float(vel[j, 1]) + float(omega[j, 2]) * rbx[c] - float(omega[j, 0]) * rbz[c]
        uz = float(vel[j, 2]) + float(omega[j, 0]) * rby[c] - float(omega[j, 1]) * rbx[c]
        ux -= float(vel[i, 0]) + float(omega[i, 1]) * raz[c] - float(omega[i, 2]) * ray[c]
        uy -= float(vel[i, 1]) + float(omega[i, 2]) * rax[c] - float(omega[i, 0]) * raz[c]
        uz -= float(vel[i, 2]) + float(omega[i, 0]) * ray[c] - float(omega[i, 1]) * rax[c]
        return ux, uy, uz

    def apply(c, i, j, px, py, pz):
        vel[i, 0] = float(vel[i, 0]) - px * float(inv_mass[i])
        vel[i, 1] = float(vel[i, 1]) - py * float(inv_mass[i])
        vel[i, 2] = float(vel[i, 2]) - pz * float(inv_mass[i])
        lax = ray[c] * pz - raz[c] * py
        lay = raz[c] * px - rax[c] * pz
        laz = rax[c] * py - ray[c] * px
        omega[i, 0] = float(omega[i, 0]) - (
            float(inv_inertia[i, 0, 0]) * lax + float(inv_inertia[i, 0, 1]) * lay + float(inv_inertia[i, 0, 2]) * laz
        )
        omega[i, 1] = float(omega[i, 1]) - (
            float(inv_inertia[i, 1, 0]) * lax + float(inv_inertia[i, 1, 1]) * lay + float(inv_inertia[i, 1, 2]) * laz
        )
        omega[i, 2] = float(omega[i, 2]) - (
            float(inv_inertia[i, 2, 0]) * lax + float(inv_inertia[i, 2, 1]) * lay + float(inv_inertia[i, 2, 2]) * laz
        )
        vel[j, 0] = float(vel[j, 0]) + px * float(inv_mass[j])
        vel[j, 1] = float(vel[j, 1]) + py * float(inv_mass[j])
        vel[j, 2] = float(vel[j, 2]) + pz * float(inv_mass[j])
        lbx = rby[c] * pz - rbz[c] * py
        lby = rbz[c] * px - rbx[c] * pz
        lbz = rbx[c] * py - rby[c] * px
        omega[j, 0] = float(omega[j, 0]) + (
            float(inv_inertia[j, 0, 0]) * lbx + float(inv_inertia[j, 0, 1]) * lby + float(inv_inertia[j, 0, 2]) * lbz
        )
        omega[j, 1] = float(omega[j, 1]) + (
            float(inv_inertia[j, 1, 0]) * lbx + float(inv_inertia[j, 1, 1]) * lby + float(inv_inertia[j, 1, 2]) * lbz
        )
        omega[j, 2] = float(omega[j, 2]) + (
            float(inv_inertia[j, 2, 0]) * lbx + float(inv_inertia[j, 2, 1]) * lby + float(inv_inertia[j, 2, 2]) * lbz
        )

    for _ in range(int(iterations)):
        for c in range(m):
            i = int(c_ia[c])
            j = int(c_ib[c])
            if kn[c] <= 0.0:
                continue
            nx = float(c_normal[c, 0])
            ny = float(c_normal[c, 1])
            nz = float(c_normal[c, 2])

            ux, uy, uz = rel_vel(c, i, j)
            vn = ux * nx + uy * ny + uz * nz
            lam = -vn / kn[c]
            new_jn = jn[c] + lam
            if new_jn < 0.0:
                new_jn = 0.0
            dj = new_jn - jn[c]
            jn[c] = new_jn
            if dj != 0.0:
                apply(c, i, j, dj * nx, dj * ny, dj * nz)

            max_t = float(c_mu[c]) * jn[c]
            if max_t > 0.0:
                for (tx, ty, tz), kt, acc in ((t1[c], kt1[c], 1), (t2[c], kt2[c], 2)):
                    if kt <= 0.0:
                        continue
                    ux, uy, uz = rel_vel(c, i, j)
                    vt = ux * tx + uy * ty + uz * tz
                    lam_t = -vt / kt
                    store = jt1 if acc == 1 else jt2
                    new_jt = store[c] + lam_t
                    if new_jt > max_t:
                        new_jt = max_t
                    elif new_jt < -max_t:
                        new_jt = -max_t
                    djt = new_jt - store[c]
                    store[c] = new_jt
                    if djt != 0.0:
                        apply(c, i, j, djt * tx, djt * ty, djt * tz)

    # positional correction: relax penetration beyond the slop without
    # touching momentum (linear displacement split by inverse mass)
    if bias_enabled:
        base = [0.0] * m
        for c in range(m):
            i = int(c_ia[c])
            j = int(c_ib[c])
            base[c] = (
                (float(pos[j, 0]) - float(pos[i, 0])) * float(c_normal[c, 0])
                + (float(pos[j, 1]) - float(pos[i, 1])) * float(c_normal[c, 1])
                + (float(pos[j, 2]) - float(pos[i, 2])) * float(c_normal[c, 2])
            )
        for _ in range(int(iterations)):
            for c in range(m):
                i = int(c_ia[c])
                j = int(c_ib[c])
                wsum = float(inv_mass[i]) + float(inv_mass[j])
                if wsum <= 0.0:
                    continue
                nx = float(c_normal[c, 0])
                ny = float(c_normal[c, 1])
                nz = float(c_normal[c, 2])
                sep_gain = (
                    (float(pos[j, 0]) - float(pos[i, 0])) * nx
                    + (float(pos[j, 1]) - float(pos[i, 1])) * ny
                    + (float(pos[j, 2]) - float(pos[i, 2])) * nz
                ) - base[c]
                excess = float(c_depth[c]) - fslop - sep_gain
                if excess <= 0.0:
                    continue
                move = fbeta * excess
                if move > 0.2:
                    move = 0.2
                scale = move / wsum
                pos[i, 0] = float(pos[i, 0]) - nx * scale * float(inv_mass[i])
                pos[i, 1] = float(pos[i, 1]) - ny * scale * float(inv_mass[i])
                pos[i, 2] = float(pos[i, 2]) - nz * scale * float(inv_mass[i])
                pos[j, 0] = float(pos[j, 0]) + nx * scale * float(inv_mass[j])
                pos[j, 1] = float(pos[j, 1]) + ny * scale * float(inv_mass[j])
                pos[j, 2] = float(pos[j, 2]) + nz * scale * float(inv_mass[j])


# --- cable (position-based distance constraints) -------------------------------


def cable_tick(pos, vel, inv_mass, pinned, pin_pos, rest_len, compliance, damping, gravity, dt, iterations):
    """One XPBD tick over a node chain (in place).

    Prediction under gravity with velocity damping, `iterations` rounds of
    compliance-weighted distance projection sweeping left-to-right then
    right-to-left, then velocity update from position deltas.
    """
    n = pos.shape[0]
    fdt = float(dt)
    gx = float(gravity[0]) * fdt
    gy = float(gravity[1]) * fdt
    gz = float(gravity[2]) * fdt
    damp = 1.0 - float(damping) * fdt
    if damp < 0.0:
        damp = 0.0
    rest = float(rest_len)
    alpha = float(compliance) / (fdt * fdt)

    old = [(float(pos[i, 0]), float(pos[i, 1]), float(pos[i, 2])) for i in range(n)]

    for i in range(n):
        if pinned[i]:
            pos[i, 0] = float(pin_pos[i, 0])
            pos[i, 1] = float(pin_pos[i, 1])
            pos[i, 2] = float(pin_pos[i, 2])
        else:
            vx = (float(vel[i, 0]) + gx) * damp
            vy = (float(vel[i, 1]) + gy) * damp
            vz = (float(vel[i, 2]) + gz) * damp
            pos[i, 0] = old[i][0] + vx * fdt
            pos[i, 1] = old[i][1] + vy * fdt
            pos[i, 2] = old[i][2] + vz * fdt

    lambdas = [0.0] * (n - 1)

    def project(j):
        i2 = j + 1
        wi = float(inv_mass[j]) if not pinned[j] else 0.0
        wj = float(inv_mass[i2]) if not pinned[i2] else 0.0
        wsum = wi + wj
        if wsum <= 0.0:
            return
        dx = float(pos[i2, 0]) - float(pos[j, 0])
        dy = float(pos[i2, 1]) - float(pos[j, 1])
        dz = float(pos[i2, 2]) - float(pos[j, 2])
        length = math.sqrt(dx * dx + dy * dy + dz * dz)
        if length < 1e-12:
            return
        c = length - rest
        if c <= 0.0:
            return  # tension only: a cable folds freely, it never pushes
        dlam = (-c - alpha * lambdas[j]) / (wsum + alpha)
        lambdas[j] += dlam
        sx = dlam * dx / length
        sy = dlam * dy / length
        sz = dlam * dz / length
        if wi > 0.0:
            pos[j, 0] = float(pos[j, 0]) - wi * sx
            pos[j, 1] = float(pos[j, 1]) - wi * sy
            pos[j, 2] = float(pos[j, 2]) - wi * sz
        if wj > 0.0:
            pos[i2, 0] = float(pos[i2, 0]) + wj * sx
            pos[i2, 1] = float(pos[i2, 1]) + wj * sy
            pos[i2, 2] = float(pos[i2, 2]) + wj * sz

    for _ in range(int(iterations)):
        for j in range(n - 1):
            project(j)
        for j in range(n - 2, -1, -1):
            project(j)

    inv_dt = 1.0 / fdt
    for i in range(n):
        vel[i, 0] = (float(pos[i, 0]) - old[i][0]) * inv_dt
        vel[i, 1] = (float(pos[i, 1]) - old[i][1]) * inv_dt
        vel[i, 2] = (float(pos[i, 2]) - old[i][2]) * inv_dt
