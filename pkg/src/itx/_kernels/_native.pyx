# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: the twin of fallback.py.

Every function reproduces the fallback's arithmetic in the same operation
order (the extension is built with -ffp-contract=off), so both backends give
bit-identical results; only speed differs. Keep the two files in sync.
"""

from libc.math cimport INFINITY, atan2, ceil, cos, fabs, sin, sqrt

DEF GJK_MAX_ITERS = 128
DEF EPA_MAX_ITERS = 64
DEF MAX_VERTS = 160
DEF MAX_FACES = 512
DEF MAX_POOL = 20

cdef double EPS_CONTAIN = 1e-24
cdef double EPS_PROGRESS = 1e-12
cdef double EPS_GROWTH = 1e-10


cdef struct Shape:
    const double* verts
    int nverts
    double px, py, pz
    double qw, qx, qy, qz


cdef inline void _rotate(double qw, double qx, double qy, double qz,
                         double vx, double vy, double vz,
                         double* ox, double* oy, double* oz) nogil:
    cdef double tx = 2.0 * (qy * vz - qz * vy)
    cdef double ty = 2.0 * (qz * vx - qx * vz)
    cdef double tz = 2.0 * (qx * vy - qy * vx)
    ox[0] = vx + qw * tx + (qy * tz - qz * ty)
    oy[0] = vy + qw * ty + (qz * tx - qx * tz)
    oz[0] = vz + qw * tz + (qx * ty - qy * tx)


cdef void _support(Shape* s, double dx, double dy, double dz,
                   double* ox, double* oy, double* oz) nogil:
    cdef double lx, ly, lz
    _rotate(s.qw, -s.qx, -s.qy, -s.qz, dx, dy, dz, &lx, &ly, &lz)
    cdef double best = -INFINITY
    cdef double bx = 0.0, by = 0.0, bz = 0.0
    cdef double vx, vy, vz, d
    cdef int i
    for i in range(s.nverts):
        vx = s.verts[3 * i]
        vy = s.verts[3 * i + 1]
        vz = s.verts[3 * i + 2]
        d = vx * lx + vy * ly + vz * lz
        if d > best:
            best = d
            bx = vx
            by = vy
            bz = vz
    cdef double wx, wy, wz
    _rotate(s.qw, s.qx, s.qy, s.qz, bx, by, bz, &wx, &wy, &wz)
    ox[0] = wx + s.px
    oy[0] = wy + s.py
    oz[0] = wz + s.pz


cdef inline void _support_mink(Shape* sa, Shape* sb, double dx, double dy, double dz,
                               double* w, double* pa, double* pb) nogil:
    _support(sa, dx, dy, dz, &pa[0], &pa[1], &pa[2])
    _support(sb, -dx, -dy, -dz, &pb[0], &pb[1], &pb[2])
    w[0] = pa[0] - pb[0]
    w[1] = pa[1] - pb[1]
    w[2] = pa[2] - pb[2]


cdef inline double _dot3(const double* a, const double* b) nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline void _sub3(const double* a, const double* b, double* o) nogil:
    o[0] = a[0] - b[0]
    o[1] = a[1] - b[1]
    o[2] = a[2] - b[2]


cdef inline void _cross3(const double* a, const double* b, double* o) nogil:
    o[0] = a[1] * b[2] - a[2] * b[1]
    o[1] = a[2] * b[0] - a[0] * b[2]
    o[2] = a[0] * b[1] - a[1] * b[0]


cdef int _closest_segment(const double* a, const double* b, int* keep, double* lam) nogil:
    cdef double ab[3]
    _sub3(b, a, ab)
    cdef double denom = _dot3(ab, ab)
    if denom <= 0.0:
        keep[0] = 0
        lam[0] = 1.0
        return 1
    cdef double t = -_dot3(a, ab) / denom
    if t <= 0.0:
        keep[0] = 0
        lam[0] = 1.0
        return 1
    if t >= 1.0:
        keep[0] = 1
        lam[0] = 1.0
        return 1
    keep[0] = 0
    keep[1] = 1
    lam[0] = 1.0 - t
    lam[1] = t
    return 2


cdef int _closest_triangle(const double* a, const double* b, const double* c,
                           int* keep, double* lam) nogil:
    cdef double ab[3]
    cdef double ac[3]
    _sub3(b, a, ab)
    _sub3(c, a, ac)
    cdef double d1 = -_dot3(ab, a)
    cdef double d2 = -_dot3(ac, a)
    if d1 <= 0.0 and d2 <= 0.0:
        keep[0] = 0
        lam[0] = 1.0
        return 1
    cdef double d3 = -_dot3(ab, b)
    cdef double d4 = -_dot3(ac, b)
    if d3 >= 0.0 and d4 <= d3:
        keep[0] = 1
        lam[0] = 1.0
        return 1
    cdef double vc = d1 * d4 - d3 * d2
    cdef double t
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3)
        keep[0] = 0
        keep[1] = 1
        lam[0] = 1.0 - t
        lam[1] = t
        return 2
    cdef double d5 = -_dot3(ab, c)
    cdef double d6 = -_dot3(ac, c)
    if d6 >= 0.0 and d5 <= d6:
        keep[0] = 2
        lam[0] = 1.0
        return 1
    cdef double vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        t = d2 / (d2 - d6)
        keep[0] = 0
        keep[1] = 2
        lam[0] = 1.0 - t
        lam[1] = t
        return 2
    cdef double va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        keep[0] = 1
        keep[1] = 2
        lam[0] = 1.0 - t
        lam[1] = t
        return 2
    cdef double denom = 1.0 / (va + vb + vc)
    cdef double v = vb * denom
    cdef double w = vc * denom
    keep[0] = 0
    keep[1] = 1
    keep[2] = 2
    lam[0] = 1.0 - v - w
    lam[1] = v
    lam[2] = w
    return 3


cdef int _solve_simplex(double pts[4][3], int n, int* keep, double* lam, bint* inside) nogil:
    inside[0] = False
    if n == 1:
        keep[0] = 0
        lam[0] = 1.0
        return 1
    if n == 2:
        return _closest_segment(pts[0], pts[1], keep, lam)
    if n == 3:
        return _closest_triangle(pts[0], pts[1], pts[2], keep, lam)

    cdef int faces[4][4]
    faces[0][0] = 0; faces[0][1] = 1; faces[0][2] = 2; faces[0][3] = 3
    faces[1][0] = 0; faces[1][1] = 2; faces[1][2] = 3; faces[1][3] = 1
    faces[2][0] = 0; faces[2][1] = 3; faces[2][2] = 1; faces[2][3] = 2
    faces[3][0] = 1; faces[3][1] = 3; faces[3][2] = 2; faces[3][3] = 0
    cdef double best_dist = INFINITY
    cdef int best_keep[3]
    cdef double best_lam[3]
    cdef int best_n = 0
    cdef bint outside_any = False
    cdef int fi, i, j, k, other, kk
    cdef double e1[3]
    cdef double e2[3]
    cdef double po_pi[3]
    cdef double normal[3]
    cdef double signp, signd, vx, vy, vz, dist, ll
    cdef int keep3[3]
    cdef double lam3[3]
    cdef int n3
    cdef int idx[3]
    for fi in range(4):
        i = faces[fi][0]
        j = faces[fi][1]
        k = faces[fi][2]
        other = faces[fi][3]
        _sub3(pts[j], pts[i], e1)
        _sub3(pts[k], pts[i], e2)
        _cross3(e1, e2, normal)
        signp = -_dot3(normal, pts[i])
        _sub3(pts[other], pts[i], po_pi)
        signd = _dot3(normal, po_pi)
        if fabs(signd) < 1e-12 or signp * signd < 0.0:
            outside_any = True
            n3 = _closest_triangle(pts[i], pts[j], pts[k], keep3, lam3)
            idx[0] = i
            idx[1] = j
            idx[2] = k
            vx = 0.0
            vy = 0.0
            vz = 0.0
            for kk in range(n3):
                ll = lam3[kk]
                vx += ll * pts[idx[keep3[kk]]][0]
                vy += ll * pts[idx[keep3[kk]]][1]
                vz += ll * pts[idx[keep3[kk]]][2]
            dist = vx * vx + vy * vy + vz * vz
            if dist < best_dist:
                best_dist = dist
                best_n = n3
                for kk in range(n3):
                    best_keep[kk] = idx[keep3[kk]]
                    best_lam[kk] = lam3[kk]
    if not outside_any:
        keep[0] = 0
        keep[1] = 1
        keep[2] = 2
        keep[3] = 3
        lam[0] = 0.25
        lam[1] = 0.25
        lam[2] = 0.25
        lam[3] = 0.25
        inside[0] = True
        return 4
    for kk in range(best_n):
        keep[kk] = best_keep[kk]
        lam[kk] = best_lam[kk]
    return best_n


cdef struct GjkOut:
    double dist
    double pa[3]
    double pb[3]
    int hit
    int nsimplex
    double sw[4][3]
    double sa[4][3]
    double sb[4][3]


cdef void _gjk_core(Shape* shape_a, Shape* shape_b, GjkOut* out) nogil:
    cdef double dx = shape_b.px - shape_a.px
    cdef double dy = shape_b.py - shape_a.py
    cdef double dz = shape_b.pz - shape_a.pz
    if dx * dx + dy * dy + dz * dz < 1e-18:
        dx = 1.0
        dy = 0.0
        dz = 0.0
    cdef double w[3]
    cdef double pa[3]
    cdef double pb[3]
    _support_mink(shape_a, shape_b, dx, dy, dz, w, pa, pb)
    cdef double sw[4][3]
    cdef double sa[4][3]
    cdef double sb[4][3]
    cdef int nsim = 1
    cdef int i, kk
    for i in range(3):
        sw[0][i] = w[i]
        sa[0][i] = pa[i]
        sb[0][i] = pb[i]

    cdef double vx = w[0], vy = w[1], vz = w[2]
    cdef double lam[4]
    cdef int keep[4]
    cdef int nkeep = 1
    lam[0] = 1.0
    cdef bint inside = False
    cdef double pts[4][3]
    cdef double tw[4][3]
    cdef double ta[4][3]
    cdef double tb[4][3]
    cdef double vv, progress
    cdef bint dup
    cdef int it
    for it in range(GJK_MAX_ITERS):
        for i in range(nsim):
            for kk in range(3):
                pts[i][kk] = sw[i][kk]
        nkeep = _solve_simplex(pts, nsim, keep, lam, &inside)
        for i in range(nkeep):
            for kk in range(3):
                tw[i][kk] = sw[keep[i]][kk]
                ta[i][kk] = sa[keep[i]][kk]
                tb[i][kk] = sb[keep[i]][kk]
        for i in range(nkeep):
            for kk in range(3):
                sw[i][kk] = tw[i][kk]
                sa[i][kk] = ta[i][kk]
                sb[i][kk] = tb[i][kk]
        nsim = nkeep
        vx = 0.0
        vy = 0.0
        vz = 0.0
        for i in range(nsim):
            vx += lam[i] * sw[i][0]
            vy += lam[i] * sw[i][1]
            vz += lam[i] * sw[i][2]
        if inside:
            out.dist = 0.0
            out.hit = 1
            out.nsimplex = nsim
            for i in range(nsim):
                for kk in range(3):
                    out.sw[i][kk] = sw[i][kk]
                    out.sa[i][kk] = sa[i][kk]
                    out.sb[i][kk] = sb[i][kk]
            for kk in range(3):
                out.pa[kk] = 0.0
                out.pb[kk] = 0.0
            return
        vv = vx * vx + vy * vy + vz * vz
        if vv < EPS_CONTAIN:
            out.dist = 0.0
            out.hit = 1
            out.nsimplex = nsim
            for i in range(nsim):
                for kk in range(3):
                    out.sw[i][kk] = sw[i][kk]
                    out.sa[i][kk] = sa[i][kk]
                    out.sb[i][kk] = sb[i][kk]
            for kk in range(3):
                out.pa[kk] = 0.0
                out.pb[kk] = 0.0
            return
        _support_mink(shape_a, shape_b, -vx, -vy, -vz, w, pa, pb)
        progress = vv - (vx * w[0] + vy * w[1] + vz * w[2])
        if progress <= EPS_PROGRESS * vv:
            break
        dup = False
        for i in range(nsim):
            if sw[i][0] == w[0] and sw[i][1] == w[1] and sw[i][2] == w[2]:
                dup = True
                break
        if dup:
            break
        for kk in range(3):
            sw[nsim][kk] = w[kk]
            sa[nsim][kk] = pa[kk]
            sb[nsim][kk] = pb[kk]
        nsim += 1

    cdef double ax = 0.0, ay = 0.0, az = 0.0, bx = 0.0, by = 0.0, bz = 0.0
    for i in range(nsim):
        ax += lam[i] * sa[i][0]
        ay += lam[i] * sa[i][1]
        az += lam[i] * sa[i][2]
        bx += lam[i] * sb[i][0]
        by += lam[i] * sb[i][1]
        bz += lam[i] * sb[i][2]
    out.dist = sqrt(vx * vx + vy * vy + vz * vz)
    out.pa[0] = ax
    out.pa[1] = ay
    out.pa[2] = az
    out.pb[0] = bx
    out.pb[1] = by
    out.pb[2] = bz
    out.hit = 0
    out.nsimplex = nsim
    for i in range(nsim):
        for kk in range(3):
            out.sw[i][kk] = sw[i][kk]
            out.sa[i][kk] = sa[i][kk]
            out.sb[i][kk] = sb[i][kk]


cdef inline void _init_shape(Shape* s, const double[:, ::1] verts, const double[::1] pose) nogil:
    s.verts = &verts[0, 0]
    s.nverts = verts.shape[0]
    s.px = pose[0]
    s.py = pose[1]
    s.pz = pose[2]
    s.qw = pose[3]
    s.qx = pose[4]
    s.qy = pose[5]
    s.qz = pose[6]


def gjk_closest(const double[:, ::1] verts_a, const double[::1] pose_a,
                const double[:, ::1] verts_b, const double[::1] pose_b):
    """Distance and witness points between two convex cores.

    Returns (dist, point_a, point_b, hit); hit=1 means the cores intersect
    and the points are meaningless.
    """
    cdef Shape sa
    cdef Shape sb
    _init_shape(&sa, verts_a, pose_a)
    _init_shape(&sb, verts_b, pose_b)
    cdef GjkOut out
    _gjk_core(&sa, &sb, &out)
    return (
        out.dist,
        (out.pa[0], out.pa[1], out.pa[2]),
        (out.pb[0], out.pb[1], out.pb[2]),
        out.hit,
    )


cdef bint _tetra_contains_origin(double pts[4][3], double tol) nogil:
    cdef double cx = (pts[0][0] + pts[1][0] + pts[2][0] + pts[3][0]) / 4.0
    cdef double cy = (pts[0][1] + pts[1][1] + pts[2][1] + pts[3][1]) / 4.0
    cdef double cz = (pts[0][2] + pts[1][2] + pts[2][2] + pts[3][2]) / 4.0
    cdef int faces[4][3]
    faces[0][0] = 0; faces[0][1] = 1; faces[0][2] = 2
    faces[1][0] = 0; faces[1][1] = 2; faces[1][2] = 3
    faces[2][0] = 0; faces[2][1] = 3; faces[2][2] = 1
    faces[3][0] = 1; faces[3][1] = 3; faces[3][2] = 2
    cdef int fi, i, j, k
    cdef double e1[3]
    cdef double e2[3]
    cdef double n[3]
    cdef double l1
    for fi in range(4):
        i = faces[fi][0]
        j = faces[fi][1]
        k = faces[fi][2]
        _sub3(pts[j], pts[i], e1)
        _sub3(pts[k], pts[i], e2)
        _cross3(e1, e2, n)
        if n[0] * (pts[i][0] - cx) + n[1] * (pts[i][1] - cy) + n[2] * (pts[i][2] - cz) < 0.0:
            n[0] = -n[0]
            n[1] = -n[1]
            n[2] = -n[2]
        l1 = fabs(n[0]) + fabs(n[1]) + fabs(n[2])
        if l1 < 1.0:
            l1 = 1.0
        if _dot3(n, pts[i]) < -tol * l1:
            return False
    return True


cdef double EXPAND_DIRS[14][3]
EXPAND_DIRS[0][:] = [1.0, 0.0, 0.0]
EXPAND_DIRS[1][:] = [-1.0, 0.0, 0.0]
EXPAND_DIRS[2][:] = [0.0, 1.0, 0.0]
EXPAND_DIRS[3][:] = [0.0, -1.0, 0.0]
EXPAND_DIRS[4][:] = [0.0, 0.0, 1.0]
EXPAND_DIRS[5][:] = [0.0, 0.0, -1.0]
EXPAND_DIRS[6][:] = [1.0, 1.0, 1.0]
EXPAND_DIRS[7][:] = [-1.0, 1.0, 1.0]
EXPAND_DIRS[8][:] = [1.0, -1.0, 1.0]
EXPAND_DIRS[9][:] = [1.0, 1.0, -1.0]
EXPAND_DIRS[10][:] = [-1.0, -1.0, 1.0]
EXPAND_DIRS[11][:] = [-1.0, 1.0, -1.0]
EXPAND_DIRS[12][:] = [1.0, -1.0, -1.0]
EXPAND_DIRS[13][:] = [-1.0, -1.0, -1.0]


cdef struct Polytope:
    double vw[MAX_VERTS][3]
    double va[MAX_VERTS][3]
    double vb[MAX_VERTS][3]
    int nverts
    int fidx[MAX_FACES][3]
    double fnorm[MAX_FACES][3]
    double fdist[MAX_FACES]
    int nfaces
    double cx, cy, cz


cdef int _make_face(Polytope* p, int i, int j, int k, int slot) nogil:
    """Write an outward-oriented face into `slot`; 0 on degeneracy."""
    cdef double e1[3]
    cdef double e2[3]
    cdef double n[3]
    _sub3(p.vw[j], p.vw[i], e1)
    _sub3(p.vw[k], p.vw[i], e2)
    _cross3(e1, e2, n)
    cdef double nn = sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
    if nn < 1e-18:
        return 0
    n[0] /= nn
    n[1] /= nn
    n[2] /= nn
    cdef double d = _dot3(n, p.vw[i])
    if n[0] * (p.vw[i][0] - p.cx) + n[1] * (p.vw[i][1] - p.cy) + n[2] * (p.vw[i][2] - p.cz) < 0.0:
        p.fidx[slot][0] = i
        p.fidx[slot][1] = k
        p.fidx[slot][2] = j
        p.fnorm[slot][0] = -n[0]
        p.fnorm[slot][1] = -n[1]
        p.fnorm[slot][2] = -n[2]
        p.fdist[slot] = -d
    else:
        p.fidx[slot][0] = i
        p.fidx[slot][1] = j
        p.fidx[slot][2] = k
        p.fnorm[slot][0] = n[0]
        p.fnorm[slot][1] = n[1]
        p.fnorm[slot][2] = n[2]
        p.fdist[slot] = d
    return 1


def epa_penetration(const double[:, ::1] verts_a, const double[::1] pose_a,
                    const double[:, ::1] verts_b, const double[::1] pose_b):
    """Penetration depth/normal/witness between intersecting convex cores.

    Returns (depth, normal, point_a, point_b, ok); see the fallback twin.
    """
    cdef Shape sa
    cdef Shape sb
    _init_shape(&sa, verts_a, pose_a)
    _init_shape(&sb, verts_b, pose_b)
    cdef GjkOut g
    _gjk_core(&sa, &sb, &g)
    bad = (-1.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0)
    if not g.hit:
        return bad

    cdef Polytope p
    cdef int i, kk, n_pool
    cdef double pts4[4][3]
    cdef bint have_tetra = False
    if g.nsimplex == 4:
        for i in range(4):
            for kk in range(3):
                pts4[i][kk] = g.sw[i][kk]
        have_tetra = _tetra_contains_origin(pts4, 1e-10)
        if have_tetra:
            for i in range(4):
                for kk in range(3):
                    p.vw[i][kk] = g.sw[i][kk]
                    p.va[i][kk] = g.sa[i][kk]
                    p.vb[i][kk] = g.sb[i][kk]

    # expansion pool: terminal simplex plus canned support directions
    cdef double pool_w[MAX_POOL][3]
    cdef double pool_a[MAX_POOL][3]
    cdef double pool_b[MAX_POOL][3]
    cdef double w[3]
    cdef double wa[3]
    cdef double wb[3]
    cdef bint dup
    cdef int di, jj, kk2, ll2
    cdef double e1[3]
    cdef double e2[3]
    cdef double e3[3]
    cdef double cr[3]
    cdef double vol
    if not have_tetra:
        n_pool = g.nsimplex
        for i in range(n_pool):
            for kk in range(3):
                pool_w[i][kk] = g.sw[i][kk]
                pool_a[i][kk] = g.sa[i][kk]
                pool_b[i][kk] = g.sb[i][kk]
        for di in range(14):
            _support_mink(&sa, &sb, EXPAND_DIRS[di][0], EXPAND_DIRS[di][1], EXPAND_DIRS[di][2],
                          w, wa, wb)
            dup = False
            for i in range(n_pool):
                if pool_w[i][0] == w[0] and pool_w[i][1] == w[1] and pool_w[i][2] == w[2]:
                    dup = True
                    break
            if not dup and n_pool < MAX_POOL:
                for kk in range(3):
                    pool_w[n_pool][kk] = w[kk]
                    pool_a[n_pool][kk] = wa[kk]
                    pool_b[n_pool][kk] = wb[kk]
                n_pool += 1
        if n_pool < 4:
            return bad
        found = False
        for i in range(n_pool - 3):
            if found:
                break
            for jj in range(i + 1, n_pool - 2):
                if found:
                    break
                for kk2 in range(jj + 1, n_pool - 1):
                    if found:
                        break
                    for ll2 in range(kk2 + 1, n_pool):
                        for kk in range(3):
                            pts4[0][kk] = pool_w[i][kk]
                            pts4[1][kk] = pool_w[jj][kk]
                            pts4[2][kk] = pool_w[kk2][kk]
                            pts4[3][kk] = pool_w[ll2][kk]
                        _sub3(pts4[1], pts4[0], e1)
                        _sub3(pts4[2], pts4[0], e2)
                        _sub3(pts4[3], pts4[0], e3)
                        _cross3(e2, e3, cr)
                        vol = _dot3(e1, cr)
                        if fabs(vol) < 1e-14:
                            continue
                        if _tetra_contains_origin(pts4, 1e-10):
                            for kk in range(3):
                                p.vw[0][kk] = pool_w[i][kk]
                                p.va[0][kk] = pool_a[i][kk]
                                p.vb[0][kk] = pool_b[i][kk]
                                p.vw[1][kk] = pool_w[jj][kk]
                                p.va[1][kk] = pool_a[jj][kk]
                                p.vb[1][kk] = pool_b[jj][kk]
                                p.vw[2][kk] = pool_w[kk2][kk]
                                p.va[2][kk] = pool_a[kk2][kk]
                                p.vb[2][kk] = pool_b[kk2][kk]
                                p.vw[3][kk] = pool_w[ll2][kk]
                                p.va[3][kk] = pool_a[ll2][kk]
                                p.vb[3][kk] = pool_b[ll2][kk]
                            found = True
                            break
        if not found:
            return bad

    p.nverts = 4
    p.cx = (p.vw[0][0] + p.vw[1][0] + p.vw[2][0] + p.vw[3][0]) / 4.0
    p.cy = (p.vw[0][1] + p.vw[1][1] + p.vw[2][1] + p.vw[3][1]) / 4.0
    p.cz = (p.vw[0][2] + p.vw[1][2] + p.vw[2][2] + p.vw[3][2]) / 4.0
    p.nfaces = 0
    cdef int init_faces[4][3]
    init_faces[0][0] = 0; init_faces[0][1] = 1; init_faces[0][2] = 2
    init_faces[1][0] = 0; init_faces[1][1] = 2; init_faces[1][2] = 3
    init_faces[2][0] = 0; init_faces[2][1] = 3; init_faces[2][2] = 1
    init_faces[3][0] = 1; init_faces[3][1] = 3; init_faces[3][2] = 2
    for i in range(4):
        if not _make_face(&p, init_faces[i][0], init_faces[i][1], init_faces[i][2], p.nfaces):
            return bad
        p.nfaces += 1

    cdef int it, best, fi2, nvis, nkept, nedges, e_i, rev
    cdef double best_d, growth
    cdef int converged = 1
    cdef bint visible[MAX_FACES]
    cdef int tmp_idx[MAX_FACES][3]
    cdef double tmp_norm[MAX_FACES][3]
    cdef double tmp_dist[MAX_FACES]
    cdef int edges[MAX_FACES * 3][2]
    cdef int dir_edges[MAX_FACES * 3][2]
    cdef int ndir
    cdef int keep3[3]
    cdef double lam3[3]
    cdef int n3
    cdef int idx3[3]
    cdef double ax, ay, az, bx, by, bz, depth
    cdef int bi, bj, bk
    cdef int wi
    cdef bint degenerate

    for it in range(EPA_MAX_ITERS):
        best = 0
        best_d = p.fdist[0]
        for fi2 in range(1, p.nfaces):
            if p.fdist[fi2] < best_d:
                best_d = p.fdist[fi2]
                best = fi2
        bi = p.fidx[best][0]
        bj = p.fidx[best][1]
        bk = p.fidx[best][2]
        _support_mink(&sa, &sb, p.fnorm[best][0], p.fnorm[best][1], p.fnorm[best][2], w, wa, wb)
        growth = _dot3(p.fnorm[best], w) - best_d
        if growth <= EPS_GROWTH or it == EPA_MAX_ITERS - 1:
            converged = 1 if growth <= EPS_GROWTH else 0
            n3 = _closest_triangle(p.vw[bi], p.vw[bj], p.vw[bk], keep3, lam3)
            idx3[0] = bi
            idx3[1] = bj
            idx3[2] = bk
            ax = 0.0
            ay = 0.0
            az = 0.0
            bx = 0.0
            by = 0.0
            bz = 0.0
            for i in range(n3):
                ax += lam3[i] * p.va[idx3[keep3[i]]][0]
                ay += lam3[i] * p.va[idx3[keep3[i]]][1]
                az += lam3[i] * p.va[idx3[keep3[i]]][2]
                bx += lam3[i] * p.vb[idx3[keep3[i]]][0]
                by += lam3[i] * p.vb[idx3[keep3[i]]][1]
                bz += lam3[i] * p.vb[idx3[keep3[i]]][2]
            depth = best_d if best_d > 0.0 else 0.0
            return (
                depth,
                (p.fnorm[best][0], p.fnorm[best][1], p.fnorm[best][2]),
                (ax, ay, az),
                (bx, by, bz),
                converged,
            )

        if p.nverts >= MAX_VERTS:
            return bad
        wi = p.nverts
        for kk in range(3):
            p.vw[wi][kk] = w[kk]
            p.va[wi][kk] = wa[kk]
            p.vb[wi][kk] = wb[kk]
        p.nverts += 1

        nvis = 0
        for fi2 in range(p.nfaces):
            i = p.fidx[fi2][0]
            if (
                p.fnorm[fi2][0] * (w[0] - p.vw[i][0])
                + p.fnorm[fi2][1] * (w[1] - p.vw[i][1])
                + p.fnorm[fi2][2] * (w[2] - p.vw[i][2])
                > 1e-12
            ):
                visible[fi2] = True
                nvis += 1
            else:
                visible[fi2] = False
        if nvis == 0:
            continue

        # directed edges of the visible set, then the horizon
        ndir = 0
        for fi2 in range(p.nfaces):
            if not visible[fi2]:
                continue
            dir_edges[ndir][0] = p.fidx[fi2][0]
            dir_edges[ndir][1] = p.fidx[fi2][1]
            ndir += 1
            dir_edges[ndir][0] = p.fidx[fi2][1]
            dir_edges[ndir][1] = p.fidx[fi2][2]
            ndir += 1
            dir_edges[ndir][0] = p.fidx[fi2][2]
            dir_edges[ndir][1] = p.fidx[fi2][0]
            ndir += 1
        nedges = 0
        for e_i in range(ndir):
            rev = 0
            for i in range(ndir):
                if dir_edges[i][0] == dir_edges[e_i][1] and dir_edges[i][1] == dir_edges[e_i][0]:
                    rev = 1
                    break
            if not rev:
                edges[nedges][0] = dir_edges[e_i][0]
                edges[nedges][1] = dir_edges[e_i][1]
                nedges += 1

        nkept = 0
        for fi2 in range(p.nfaces):
            if not visible[fi2]:
                tmp_idx[nkept][0] = p.fidx[fi2][0]
                tmp_idx[nkept][1] = p.fidx[fi2][1]
                tmp_idx[nkept][2] = p.fidx[fi2][2]
                tmp_norm[nkept][0] = p.fnorm[fi2][0]
                tmp_norm[nkept][1] = p.fnorm[fi2][1]
                tmp_norm[nkept][2] = p.fnorm[fi2][2]
                tmp_dist[nkept] = p.fdist[fi2]
                nkept += 1
        for fi2 in range(nkept):
            p.fidx[fi2][0] = tmp_idx[fi2][0]
            p.fidx[fi2][1] = tmp_idx[fi2][1]
            p.fidx[fi2][2] = tmp_idx[fi2][2]
            p.fnorm[fi2][0] = tmp_norm[fi2][0]
            p.fnorm[fi2][1] = tmp_norm[fi2][1]
            p.fnorm[fi2][2] = tmp_norm[fi2][2]
            p.fdist[fi2] = tmp_dist[fi2]
        p.nfaces = nkept
        degenerate = False
        for e_i in range(nedges):
            if p.nfaces >= MAX_FACES:
                return bad
            if not _make_face(&p, edges[e_i][0], edges[e_i][1], wi, p.nfaces):
                degenerate = True
                break
            p.nfaces += 1
        if degenerate or p.nfaces == 0:
            return bad

    return bad


# --- rigid-body integration ---------------------------------------------------


def integrate_bodies(double[:, ::1] pos, double[:, ::1] quat, double[:, ::1] vel,
                     double[:, ::1] omega, const unsigned char[::1] dynamic,
                     const double[::1] gravity, double dt):
    """Semi-implicit Euler over packed body arrays (in place)."""
    cdef int n = pos.shape[0]
    cdef double gx = gravity[0]
    cdef double gy = gravity[1]
    cdef double gz = gravity[2]
    cdef double fdt = dt
    cdef int i
    cdef double vx, vy, vz, wx, wy, wz, wn, angle, half, s
    cdef double qw, qx, qy, qz, dw, dx, dy, dz, nw, nx, ny, nz, norm
    for i in range(n):
        if dynamic[i] == 0:
            continue
        vx = vel[i, 0] + gx * fdt
        vy = vel[i, 1] + gy * fdt
        vz = vel[i, 2] + gz * fdt
        vel[i, 0] = vx
        vel[i, 1] = vy
        vel[i, 2] = vz
        pos[i, 0] = pos[i, 0] + vx * fdt
        pos[i, 1] = pos[i, 1] + vy * fdt
        pos[i, 2] = pos[i, 2] + vz * fdt

        wx = omega[i, 0]
        wy = omega[i, 1]
        wz = omega[i, 2]
        wn = sqrt(wx * wx + wy * wy + wz * wz)
        angle = wn * fdt
        qw = quat[i, 0]
        qx = quat[i, 1]
        qy = quat[i, 2]
        qz = quat[i, 3]
        if angle >= 1e-12:
            half = 0.5 * angle
            s = sin(half) / wn
            dw = cos(half)
            dx = wx * s
            dy = wy * s
            dz = wz * s
            nw = dw * qw - dx * qx - dy * qy - dz * qz
            nx = dw * qx + dx * qw + dy * qz - dz * qy
            ny = dw * qy - dx * qz + dy * qw + dz * qx
            nz = dw * qz + dx * qy - dy * qx + dz * qw
            qw = nw
            qx = nx
            qy = ny
            qz = nz
        norm = sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
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


cdef inline double _eff_mass(const double[::1] inv_mass, const double[:, :, ::1] inv_inertia,
                             int i, int j, const double* rxn_a, const double* rxn_b) nogil:
    cdef double k = inv_mass[i] + inv_mass[j]
    cdef double iax = inv_inertia[i, 0, 0] * rxn_a[0] + inv_inertia[i, 0, 1] * rxn_a[1] + inv_inertia[i, 0, 2] * rxn_a[2]
    cdef double iay = inv_inertia[i, 1, 0] * rxn_a[0] + inv_inertia[i, 1, 1] * rxn_a[1] + inv_inertia[i, 1, 2] * rxn_a[2]
    cdef double iaz = inv_inertia[i, 2, 0] * rxn_a[0] + inv_inertia[i, 2, 1] * rxn_a[1] + inv_inertia[i, 2, 2] * rxn_a[2]
    cdef double ibx = inv_inertia[j, 0, 0] * rxn_b[0] + inv_inertia[j, 0, 1] * rxn_b[1] + inv_inertia[j, 0, 2] * rxn_b[2]
    cdef double iby = inv_inertia[j, 1, 0] * rxn_b[0] + inv_inertia[j, 1, 1] * rxn_b[1] + inv_inertia[j, 1, 2] * rxn_b[2]
    cdef double ibz = inv_inertia[j, 2, 0] * rxn_b[0] + inv_inertia[j, 2, 1] * rxn_b[1] + inv_inertia[j, 2, 2] * rxn_b[2]
    k += iax * rxn_a[0] + iay * rxn_a[1] + iaz * rxn_a[2]
    k += ibx * rxn_b[0] + iby * rxn_b[1] + ibz * rxn_b[2]
    return k


def solve_contacts(const double[::1] inv_mass, const double[:, :, ::1] inv_inertia,
                   double[:, ::1] pos, double[:, ::1] vel, double[:, ::1] omega,
                   const int[::1] c_ia, const int[::1] c_ib,
                   const double[:, ::1] c_point, const double[:, ::1] c_normal,
                   const double[::1] c_depth, const double[::1] c_mu,
                   int iterations, double dt, double beta, double slop, int bias_enabled):
    """Sequential impulses with accumulated clamping and Coulomb friction.

    Twin of the fallback: velocity pass plus linear positional correction.
    """
    cdef int m = c_ia.shape[0]
    if m == 0:
        return
    cdef double fdt = dt
    cdef double fbeta = beta
    cdef double fslop = slop

    cdef double[::1] rax = None
    # fixed-size stack buffers would overflow for many contacts; use Python-allocated
    import numpy as _np
    buf = _np.zeros((16, m), dtype=_np.float64)
    cdef double[:, ::1] B = buf
    # rows: 0-2 ra, 3-5 rb, 6-8 t1, 9-11 t2, 12 kn, 13 kt1, 14 kt2, 15 base
    jn_arr = _np.zeros(m, dtype=_np.float64)
    jt1_arr = _np.zeros(m, dtype=_np.float64)
    jt2_arr = _np.zeros(m, dtype=_np.float64)
    cdef double[::1] jn = jn_arr
    cdef double[::1] jt1 = jt1_arr
    cdef double[::1] jt2 = jt2_arr

    cdef int c, i, j, it
    cdef double nx, ny, nz, anx, any_, anz, hx, hy, hz
    cdef double ux, uy, uz, un, wx, wy, wz
    cdef double ncross_a[3]
    cdef double ncross_b[3]
    cdef double ucross_a[3]
    cdef double ucross_b[3]
    cdef double wcross_a[3]
    cdef double wcross_b[3]

    for c in range(m):
        i = c_ia[c]
        j = c_ib[c]
        nx = c_normal[c, 0]
        ny = c_normal[c, 1]
        nz = c_normal[c, 2]
        B[0, c] = c_point[c, 0] - pos[i, 0]
        B[1, c] = c_point[c, 1] - pos[i, 1]
        B[2, c] = c_point[c, 2] - pos[i, 2]
        B[3, c] = c_point[c, 0] - pos[j, 0]
        B[4, c] = c_point[c, 1] - pos[j, 1]
        B[5, c] = c_point[c, 2] - pos[j, 2]

        anx = fabs(nx)
        any_ = fabs(ny)
        anz = fabs(nz)
        if anx <= any_ and anx <= anz:
            hx = 1.0
            hy = 0.0
            hz = 0.0
        elif any_ <= anz:
            hx = 0.0
            hy = 1.0
            hz = 0.0
        else:
            hx = 0.0
            hy = 0.0
            hz = 1.0
        ux = ny * hz - nz * hy
        uy = nz * hx - nx * hz
        uz = nx * hy - ny * hx
        un = sqrt(ux * ux + uy * uy + uz * uz)
        ux /= un
        uy /= un
        uz /= un
        wx = ny * uz - nz * uy
        wy = nz * ux - nx * uz
        wz = nx * uy - ny * ux
        B[6, c] = ux
        B[7, c] = uy
        B[8, c] = uz
        B[9, c] = wx
        B[10, c] = wy
        B[11, c] = wz

        ncross_a[0] = B[1, c] * nz - B[2, c] * ny
        ncross_a[1] = B[2, c] * nx - B[0, c] * nz
        ncross_a[2] = B[0, c] * ny - B[1, c] * nx
        ncross_b[0] = B[4, c] * nz - B[5, c] * ny
        ncross_b[1] = B[5, c] * nx - B[3, c] * nz
        ncross_b[2] = B[3, c] * ny - B[4, c] * nx
        B[12, c] = _eff_mass(inv_mass, inv_inertia, i, j, ncross_a, ncross_b)
        ucross_a[0] = B[1, c] * uz - B[2, c] * uy
        ucross_a[1] = B[2, c] * ux - B[0, c] * uz
        ucross_a[2] = B[0, c] * uy - B[1, c] * ux
        ucross_b[0] = B[4, c] * uz - B[5, c] * uy
        ucross_b[1] = B[5, c] * ux - B[3, c] * uz
        ucross_b[2] = B[3, c] * uy - B[4, c] * ux
        B[13, c] = _eff_mass(inv_mass, inv_inertia, i, j, ucross_a, ucross_b)
        wcross_a[0] = B[1, c] * wz - B[2, c] * wy
        wcross_a[1] = B[2, c] * wx - B[0, c] * wz
        wcross_a[2] = B[0, c] * wy - B[1, c] * wx
        wcross_b[0] = B[4, c] * wz - B[5, c] * wy
        wcross_b[1] = B[5, c] * wx - B[3, c] * wz
        wcross_b[2] = B[3, c] * wy - B[4, c] * wx
        B[14, c] = _eff_mass(inv_mass, inv_inertia, i, j, wcross_a, wcross_b)

    cdef double vn, lam, new_jn, dj, max_t, vt, lam_t, new_jt, djt
    cdef double px, py, pz, lax, lay, laz, lbx, lby, lbz
    cdef double tx, ty, tz, kt
    cdef int pass_i

    for it in range(iterations):
        for c in range(m):
            i = c_ia[c]
            j = c_ib[c]
            if B[12, c] <= 0.0:
                continue
            nx = c_normal[c, 0]
            ny = c_normal[c, 1]
            nz = c_normal[c, 2]

            ux = vel[j, 0] + omega[j, 1] * B[5, c] - omega[j, 2] * B[4, c]
            uy = vel[j, 1] + omega[j, 2] * B[3, c] - omega[j, 0] * B[5, c]
            uz = vel[j, 2] + omega[j, 0] * B[4, c] - omega[j, 1] * B[3, c]
            ux -= vel[i, 0] + omega[i, 1] * B[2, c] - omega[i, 2] * B[1, c]
            uy -= vel[i, 1] + omega[i, 2] * B[0, c] - omega[i, 0] * B[2, c]
            uz -= vel[i, 2] + omega[i, 0] * B[1, c] - omega[i, 1] * B[0, c]
            vn = ux * nx + uy * ny + uz * nz
            lam = -vn / B[12, c]
            new_jn = jn[c] + lam
            if new_jn < 0.0:
                new_jn = 0.0
            dj = new_jn - jn[c]
            jn[c] = new_jn
            if dj != 0.0:
                px = dj * nx
                py = dj * ny
                pz = dj * nz
                vel[i, 0] = vel[i, 0] - px * inv_mass[i]
                vel[i, 1] = vel[i, 1] - py * inv_mass[i]
                vel[i, 2] = vel[i, 2] - pz * inv_mass[i]
                lax = B[1, c] * pz - B[2, c] * py
                lay = B[2, c] * px - B[0, c] * pz
                laz = B[0, c] * py - B[1, c] * px
                omega[i, 0] = omega[i, 0] - (inv_inertia[i, 0, 0] * lax + inv_inertia[i, 0, 1] * lay + inv_inertia[i, 0, 2] * laz)
                omega[i, 1] = omega[i, 1] - (inv_inertia[i, 1, 0] * lax + inv_inertia[i, 1, 1] * lay + inv_inertia[i, 1, 2] * laz)
                omega[i, 2] = omega[i, 2] - (inv_inertia[i, 2, 0] * lax + inv_inertia[i, 2, 1] * lay + inv_inertia[i, 2, 2] * laz)
                vel[j, 0] = vel[j, 0] + px * inv_mass[j]
                vel[j, 1] = vel[j, 1] + py * inv_mass[j]
                vel[j, 2] = vel[j, 2] + pz * inv_mass[j]
                lbx = B[4, c] * pz - B[5, c] * py
                lby = B[5, c] * px - B[3, c] * pz
                lbz = B[3, c] * py - B[4, c] * px
                omega[j, 0] = omega[j, 0] + (inv_inertia[j, 0, 0] * lbx + inv_inertia[j, 0, 1] * lby + inv_inertia[j, 0, 2] * lbz)
                omega[j, 1] = omega[j, 1] + (inv_inertia[j, 1, 0] * lbx + inv_inertia[j, 1, 1] * lby + inv_inertia[j, 1, 2] * lbz)
                omega[j, 2] = omega[j, 2] + (inv_inertia[j, 2, 0] * lbx + inv_inertia[j, 2, 1] * lby + inv_inertia[j, 2, 2] * lbz)

            max_t = c_mu[c] * jn[c]
            if max_t > 0.0:
                for pass_i in range(2):
                    if pass_i == 0:
                        tx = B[6, c]
                        ty = B[7, c]
                        tz = B[8, c]
                        kt = B[13, c]
                    else:
                        tx = B[9, c]
                        ty = B[10, c]
                        tz = B[11, c]
                        kt = B[14, c]
                    if kt <= 0.0:
                        continue
                    ux = vel[j, 0] + omega[j, 1] * B[5, c] - omega[j, 2] * B[4, c]
                    uy = vel[j, 1] + omega[j, 2] * B[3, c] - omega[j, 0] * B[5, c]
                    uz = vel[j, 2] + omega[j, 0] * B[4, c] - omega[j, 1] * B[3, c]
                    ux -= vel[i, 0] + omega[i, 1] * B[2, c] - omega[i, 2] * B[1, c]
                    uy -= vel[i, 1] + omega[i, 2] * B[0, c] - omega[i, 0] * B[2, c]
                    uz -= vel[i, 2] + omega[i, 0] * B[1, c] - omega[i, 1] * B[0, c]
                    vt = ux * tx + uy * ty + uz * tz
                    lam_t = -vt / kt
                    if pass_i == 0:
                        new_jt = jt1[c] + lam_t
                    else:
                        new_jt = jt2[c] + lam_t
                    if new_jt > max_t:
                        new_jt = max_t
                    elif new_jt < -max_t:
                        new_jt = -max_t
                    if pass_i == 0:
                        djt = new_jt - jt1[c]
                        jt1[c] = new_jt
                    else:
                        djt = new_jt - jt2[c]
                        jt2[c] = new_jt
                    if djt != 0.0:
                        px = djt * tx
                        py = djt * ty
                        pz = djt * tz
                        vel[i, 0] = vel[i, 0] - px * inv_mass[i]
                        vel[i, 1] = vel[i, 1] - py * inv_mass[i]
                        vel[i, 2] = vel[i, 2] - pz * inv_mass[i]
                        lax = B[1, c] * pz - B[2, c] * py
                        lay = B[2, c] * px - B[0, c] * pz
                        laz = B[0, c] * py - B[1, c] * px
                        omega[i, 0] = omega[i, 0] - (inv_inertia[i, 0, 0] * lax + inv_inertia[i, 0, 1] * lay + inv_inertia[i, 0, 2] * laz)
                        omega[i, 1] = omega[i, 1] - (inv_inertia[i, 1, 0] * lax + inv_inertia[i, 1, 1] * lay + inv_inertia[i, 1, 2] * laz)
                        omega[i, 2] = omega[i, 2] - (inv_inertia[i, 2, 0] * lax + inv_inertia[i, 2, 1] * lay + inv_inertia[i, 2, 2] * laz)
                        vel[j, 0] = vel[j, 0] + px * inv_mass[j]
                        vel[j, 1] = vel[j, 1] + py * inv_mass[j]
                        vel[j, 2] = vel[j, 2] + pz * inv_mass[j]
                        lbx = B[4, c] * pz - B[5, c] * py
                        lby = B[5, c] * px - B[3, c] * pz
                        lbz = B[3, c] * py - B[4, c] * px
                        omega[j, 0] = omega[j, 0] + (inv_inertia[j, 0, 0] * lbx + inv_inertia[j, 0, 1] * lby + inv_inertia[j, 0, 2] * lbz)
                        omega[j, 1] = omega[j, 1] + (inv_inertia[j, 1, 0] * lbx + inv_inertia[j, 1, 1] * lby + inv_inertia[j, 1, 2] * lbz)
                        omega[j, 2] = omega[j, 2] + (inv_inertia[j, 2, 0] * lbx + inv_inertia[j, 2, 1] * lby + inv_inertia[j, 2, 2] * lbz)

    cdef double sep_gain, excess, move, scale
    if bias_enabled:
        for c in range(m):
            i = c_ia[c]
            j = c_ib[c]
            B[15, c] = (
                (pos[j, 0] - pos[i, 0]) * c_normal[c, 0]
                + (pos[j, 1] - pos[i, 1]) * c_normal[c, 1]
                + (pos[j, 2] - pos[i, 2]) * c_normal[c, 2]
            )
        for it in range(iterations):
            for c in range(m):
                i = c_ia[c]
                j = c_ib[c]
                if inv_mass[i] + inv_mass[j] <= 0.0:
                    continue
                nx = c_normal[c, 0]
                ny = c_normal[c, 1]
                nz = c_normal[c, 2]
                sep_gain = (
                    (pos[j, 0] - pos[i, 0]) * nx
                    + (pos[j, 1] - pos[i, 1]) * ny
                    + (pos[j, 2] - pos[i, 2]) * nz
                ) - B[15, c]
                excess = c_depth[c] - fslop - sep_gain
                if excess <= 0.0:
                    continue
                move = fbeta * excess
                if move > 0.2:
                    move = 0.2
                scale = move / (inv_mass[i] + inv_mass[j])
                pos[i, 0] = pos[i, 0] - nx * scale * inv_mass[i]
                pos[i, 1] = pos[i, 1] - ny * scale * inv_mass[i]
                pos[i, 2] = pos[i, 2] - nz * scale * inv_mass[i]
                pos[j, 0] = pos[j, 0] + nx * scale * inv_mass[j]
                pos[j, 1] = pos[j, 1] + ny * scale * inv_mass[j]
                pos[j, 2] = pos[j, 2] + nz * scale * inv_mass[j]


# --- cable (position-based distance constraints) -------------------------------


def cable_tick(double[:, ::1] pos, double[:, ::1] vel, const double[::1] inv_mass,
               const unsigned char[::1] pinned, const double[:, ::1] pin_pos,
               double rest_len, double compliance, double damping,
               const double[::1] gravity, double dt, int iterations):
    """One XPBD tick over a node chain (in place); twin of the fallback."""
    cdef int n = pos.shape[0]
    cdef double fdt = dt
    cdef double gx = gravity[0] * fdt
    cdef double gy = gravity[1] * fdt
    cdef double gz = gravity[2] * fdt
    cdef double damp = 1.0 - damping * fdt
    if damp < 0.0:
        damp = 0.0
    cdef double rest = rest_len
    cdef double alpha = compliance / (fdt * fdt)

    import numpy as _np
    old_arr = _np.empty((n, 3), dtype=_np.float64)
    lam_arr = _np.zeros(n - 1, dtype=_np.float64)
    cdef double[:, ::1] old = old_arr
    cdef double[::1] lambdas = lam_arr

    cdef int i, it, j, i2
    cdef double vx, vy, vz
    for i in range(n):
        old[i, 0] = pos[i, 0]
        old[i, 1] = pos[i, 1]
        old[i, 2] = pos[i, 2]

    for i in range(n):
        if pinned[i]:
            pos[i, 0] = pin_pos[i, 0]
            pos[i, 1] = pin_pos[i, 1]
            pos[i, 2] = pin_pos[i, 2]
        else:
            vx = (vel[i, 0] + gx) * damp
            vy = (vel[i, 1] + gy) * damp
            vz = (vel[i, 2] + gz) * damp
            pos[i, 0] = old[i, 0] + vx * fdt
            pos[i, 1] = old[i, 1] + vy * fdt
            pos[i, 2] = old[i, 2] + vz * fdt

    cdef double wi, wj, wsum, dx, dy, dz, length, cc, dlam, sx, sy, sz
    for it in range(iterations):
        for j in range(n - 1):
            i2 = j + 1
            wi = inv_mass[j] if not pinned[j] else 0.0
            wj = inv_mass[i2] if not pinned[i2] else 0.0
            wsum = wi + wj
            if wsum <= 0.0:
                continue
            dx = pos[i2, 0] - pos[j, 0]
            dy = pos[i2, 1] - pos[j, 1]
            dz = pos[i2, 2] - pos[j, 2]
            length = sqrt(dx * dx + dy * dy + dz * dz)
            if length < 1e-12:
                continue
            cc = length - rest
            if cc <= 0.0:
                continue  # tension only: a cable folds freely, it never pushes
            dlam = (-cc - alpha * lambdas[j]) / (wsum + alpha)
            lambdas[j] += dlam
            sx = dlam * dx / length
            sy = dlam * dy / length
            sz = dlam * dz / length
            if wi > 0.0:
                pos[j, 0] = pos[j, 0] - wi * sx
                pos[j, 1] = pos[j, 1] - wi * sy
                pos[j, 2] = pos[j, 2] - wi * sz
            if wj > 0.0:
                pos[i2, 0] = pos[i2, 0] + wj * sx
                pos[i2, 1] = pos[i2, 1] + wj * sy
                pos[i2, 2] = pos[i2, 2] + wj * sz
        for j in range(n - 2, -1, -1):
            i2 = j + 1
            wi = inv_mass[j] if not pinned[j] else 0.0
            wj = inv_mass[i2] if not pinned[i2] else 0.0
            wsum = wi + wj
            if wsum <= 0.0:
                continue
            dx = pos[i2, 0] - pos[j, 0]
            dy = pos[i2, 1] - pos[j, 1]
            dz = pos[i2, 2] - pos[j, 2]
            length = sqrt(dx * dx + dy * dy + dz * dz)
            if length < 1e-12:
                continue
            cc = length - rest
            if cc <= 0.0:
                continue  # tension only: a cable folds freely, it never pushes
            dlam = (-cc - alpha * lambdas[j]) / (wsum + alpha)
            lambdas[j] += dlam
            sx = dlam * dx / length
            sy = dlam * dy / length
            sz = dlam * dz / length
            if wi > 0.0:
                pos[j, 0] = pos[j, 0] - wi * sx
                pos[j, 1] = pos[j, 1] - wi * sy
                pos[j, 2] = pos[j, 2] - wi * sz
            if wj > 0.0:
                pos[i2, 0] = pos[i2, 0] + wj * sx
                pos[i2, 1] = pos[i2, 1] + wj * sy
                pos[i2, 2] = pos[i2, 2] + wj * sz

    cdef double inv_dt = 1.0 / fdt
    for i in range(n):
        vel[i, 0] = (pos[i, 0] - old[i, 0]) * inv_dt
        vel[i, 1] = (pos[i, 1] - old[i, 1]) * inv_dt
        vel[i, 2] = (pos[i, 2] - old[i, 2]) * inv_dt
