"""
Disjointization of effective areas.

Rewrites overlapping areas so every key is covered by at most one area while
the per-key dominant area (largest seq_hi) is unchanged. Fragments keep the
seq bounds of the area they were cut from.
"""

import heapq
from typing import Iterable, Iterator, List, Optional, Tuple

from gloran.models.effective_area import EffectiveArea


def disjointize_pair(old: EffectiveArea, new: EffectiveArea) -> List[EffectiveArea]:
    """
    Resolve one overlap in favour of the newer area.

    Returns up to three key-disjoint areas sorted by key: the part of ``old``
    left of ``new``, ``new`` itself, and the part of ``old`` right of ``new``.
    A fully dominated ``old`` disappears; non-overlapping inputs come back
    unchanged.
    """
    if not old.overlaps_keys(new):
        return sorted([old, new], key=lambda a: a.key_lo)
    if new.seq_hi == old.seq_hi:
        raise ValueError(f"overlapping areas share seq_hi {new.seq_hi}")
    if new.seq_hi < old.seq_hi:
        raise ValueError("new must carry the larger seq_hi")

    pieces = []
    if old.key_lo < new.key_lo:
        pieces.append(old.with_keys(old.key_lo, new.key_lo))
    pieces.append(new)
    if old.key_hi > new.key_hi:
        pieces.append(old.with_keys(new.key_hi, old.key_hi))
    return pieces


def sweep_disjointize(areas: Iterable[EffectiveArea]) -> List[EffectiveArea]:
    """
    Plane sweep over key boundaries.

    Two min-heaps hold pending start and end keys; a max-heap keyed by
    seq_hi holds the areas active at the sweep position, with ended areas
    removed lazily. A fragment is emitted whenever the dominant area changes,
    so a displaced area resumes once its displacer ends.
    """
    areas = list(areas)
    if not areas:
        return []

    starts: List[Tuple[int, int]] = [(a.key_lo, i) for i, a in enumerate(areas)]
    ends: List[Tuple[int, int]] = [(a.key_hi, i) for i, a in enumerate(areas)]
    heapq.heapify(starts)
    heapq.heapify(ends)
    curr: List[Tuple[int, int]] = []
    ended = [False] * len(areas)

    output: List[EffectiveArea] = []
    dominant: Optional[int] = None
    segment_start = 0

    while starts or ends:
        # ends before starts at equal keys
        x = min(starts[0][0] if starts else ends[0][0], ends[0][0])
        while ends and ends[0][0] == x:
            ended[heapq.heappop(ends)[1]] = True
        while starts and starts[0][0] == x:
            _, index = heapq.heappop(starts)
            heapq.heappush(curr, (-areas[index].seq_hi, index))
        while curr and ended[curr[0][1]]:
            heapq.heappop(curr)

        top = curr[0][1] if curr else None
        if top != dominant:
            if dominant is not None and segment_start < x:
                output.append(areas[dominant].with_keys(segment_start, x))
            dominant = top
            segment_start = x

    return output


def is_disjoint(areas: List[EffectiveArea]) -> bool:
    """Sorted by key_lo and pairwise key-disjoint."""
    return all(a.key_hi <= b.key_lo for a, b in zip(areas, areas[1:]))


def merge_disjoint(
    upper: Iterable[EffectiveArea],
    lower: Iterable[EffectiveArea],
) -> Iterator[EffectiveArea]:
    """
    Two-way merge of key-sorted, key-disjoint streams.

    Overlaps are settled with ``disjointize_pair`` taking the area with the
    larger seq_hi as ``new``. The newer area stays at the head of its stream
    until it has been compared with every area of the other stream it
    overlaps; the left piece of the older area is emitted immediately and its
    right piece replaces it at the head of its stream.
    """
    streams = [iter(upper), iter(lower)]
    heads: List[Optional[EffectiveArea]] = [next(s, None) for s in streams]

    while heads[0] is not None and heads[1] is not None:
        a, b = heads
        if a.key_hi <= b.key_lo:
            yield a
            heads[0] = next(streams[0], None)
            continue
        if b.key_hi <= a.key_lo:
            yield b
            heads[1] = next(streams[1], None)
            continue

        new_side = 0 if a.seq_hi > b.seq_hi else 1
        old_side = 1 - new_side
        new, old = heads[new_side], heads[old_side]
        pieces = disjointize_pair(old, new)

        if pieces[0] is not new:
            yield pieces[0]
        if pieces[-1] is not new:
            # new ends inside old: new is settled, old continues to its right
            yield new
            heads[new_side] = next(streams[new_side], None)
            heads[old_side] = pieces[-1]
        else:
            heads[old_side] = next(streams[old_side], None)

    for side in (0, 1):
        if heads[side] is not None:
            yield heads[side]
            yield from streams[side]
