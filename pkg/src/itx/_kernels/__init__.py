"""Hot numeric kernels with backend selection.

The compiled extension (`itx._kernels._native`, built from _native.pyx) and
the pure-Python fallback implement the same functions with the same operation
order, so results agree bit-for-bit; the extension is only faster. Set
ITX_FORCE_PY=1 to force the fallback.

Kernel surface:
  gjk_closest(verts_a, pose_a, verts_b, pose_b) -> (dist, pa, pb, hit)
  epa_penetration(verts_a, pose_a, verts_b, pose_b) -> (depth, normal, point_a, point_b, ok)
  integrate_bodies(...), solve_contacts(...), cable_tick(...)
"""

import os

if os.environ.get("ITX_FORCE_PY"):
    from . import fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        from . import fallback as _impl

        BACKEND = "python"

gjk_closest = _impl.gjk_closest
epa_penetration = _impl.epa_penetration
integrate_bodies = _impl.integrate_bodies
solve_contacts = _impl.solve_contacts
cable_tick = _impl.cable_tick

__all__ = [
    "BACKEND",
    "gjk_closest",
    "epa_penetration",
    "integrate_bodies",
    "solve_contacts",
    "cable_tick",
]
