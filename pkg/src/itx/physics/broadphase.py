"""Sweep-and-prune broadphase over x-axis sorted AABBs."""

from __future__ import annotations

AABB_MARGIN = 0.01  # meters of inflation on every side


def broadphase_pairs(boxes: dict[str, tuple], margin: float = AABB_MARGIN) -> list[tuple[str, str]]:
    """All id pairs whose inflated AABBs overlap on all three axes.

    `boxes` maps body id to (min3, max3). Pairs come out with the lower id
    first, list sorted lexicographically.
    """
    entries = []
    for bid, (lo, hi) in boxes.items():
        entries.append(
            (
                (lo[0] - margin, lo[1] - margin, lo[2] - margin),
                (hi[0] + margin, hi[1] + margin, hi[2] + margin),
                bid,
            )
        )
    # sort by min-x; id tiebreak keeps the sweep deterministic
    entries.sort(key=lambda e: (e[0][0], e[2]))

    pairs: list[tuple[str, str]] = []
    active: list[int] = []
    for idx, (lo, hi, bid) in enumerate(entries):
        still = []
        for j in active:
            jlo, jhi, jid = entries[j]
            if jhi[0] < lo[0]:
                continue
            still.append(j)
            if (
                lo[1] <= jhi[1]
                and jlo[1] <= hi[1]
                and lo[2] <= jhi[2]
                and jlo[2] <= hi[2]
            ):
                pairs.append((bid, jid) if bid < jid else (jid, bid))
        still.append(idx)
        active = still
    pairs.sort()
    return pairs
