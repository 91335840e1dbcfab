"""
In-memory R-tree over effective areas, used as the global index write buffer.

Areas may overlap. Insertion descends into the child whose bounding rectangle
needs the least enlargement; overflowing nodes are split with the quadratic
split heuristic.
"""

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Union

from gloran.models.effective_area import EffectiveArea


@dataclass(frozen=True)
class BoundingRectangle:
    """Axis-aligned rectangle [key_lo, key_hi) x [seq_lo, seq_hi)."""
    key_lo: int
    key_hi: int
    seq_lo: int
    seq_hi: int

    @classmethod
    def of(cls, area: EffectiveArea) -> "BoundingRectangle":
        return cls(area.key_lo, area.key_hi, area.seq_lo, area.seq_hi)

    def area(self) -> int:
        return (self.key_hi - self.key_lo) * (self.seq_hi - self.seq_lo)

    def union(self, other: "BoundingRectangle") -> "BoundingRectangle":
        return BoundingRectangle(
            min(self.key_lo, other.key_lo),
            max(self.key_hi, other.key_hi),
            min(self.seq_lo, other.seq_lo),
            max(self.seq_hi, other.seq_hi),
        )

    def enlargement(self, other: "BoundingRectangle") -> int:
        """Growth in area needed to also enclose other."""
        return self.union(other).area() - self.area()

    def includes_point(self, key: int, seq: int) -> bool:
        return self.key_lo <= key < self.key_hi and self.seq_lo <= seq < self.seq_hi

    def encloses(self, other: "BoundingRectangle") -> bool:
        return (self.key_lo <= other.key_lo and other.key_hi <= self.key_hi
                and self.seq_lo <= other.seq_lo and other.seq_hi <= self.seq_hi)


Child = Union["Node", EffectiveArea]


def _rect(child: Child) -> BoundingRectangle:
    return child.mbr if isinstance(child, Node) else BoundingRectangle.of(child)


@dataclass(eq=False)
class Node:
    """Internal or leaf node; leaf children are EffectiveAreas."""
    leaf: bool
    children: List[Child] = field(default_factory=list)
    parent: Optional["Node"] = None
    mbr: Optional[BoundingRectangle] = None

    def update_mbr(self) -> None:
        rect = None
        for child in self.children:
            child_rect = _rect(child)
            rect = child_rect if rect is None else rect.union(child_rect)
        self.mbr = rect

    def all_areas(self) -> Iterator[EffectiveArea]:
        for child in self.children:
            if isinstance(child, Node):
                yield from child.all_areas()
            else:
                yield child


def _pick_seeds(children: List[Child]) -> tuple:
    """Pair wasting the most area if placed together."""
    best, seeds = None, (0, 1)
    rects = [_rect(c) for c in children]
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            waste = rects[i].union(rects[j]).area() - rects[i].area() - rects[j].area()
            if best is None or waste > best:
                best, seeds = waste, (i, j)
    return seeds


def quadratic_split(children: List[Child], min_fill: int) -> tuple:
    """Split an overflowing child list into two groups of at least min_fill each."""
    i, j = _pick_seeds(children)
    groups: List[List[Child]] = [[children[i]], [children[j]]]
    rects = [_rect(children[i]), _rect(children[j])]
    remaining = [c for k, c in enumerate(children) if k not in (i, j)]

    while remaining:
        for g in (0, 1):
            if len(groups[g]) + len(remaining) <= min_fill:
                groups[g].extend(remaining)
                for c in remaining:
                    rects[g] = rects[g].union(_rect(c))
                remaining = []
                break
        if not remaining:
            break

        # child with the strongest preference for one group
        best_k, best_diff = 0, -1
        for k, child in enumerate(remaining):
            r = _rect(child)
            diff = abs(rects[0].enlargement(r) - rects[1].enlargement(r))
            if diff > best_diff:
                best_k, best_diff = k, diff
        child = remaining.pop(best_k)
        r = _rect(child)
        e0, e1 = rects[0].enlargement(r), rects[1].enlargement(r)
        if e0 != e1:
            g = 0 if e0 < e1 else 1
        elif rects[0].area() != rects[1].area():
            g = 0 if rects[0].area() < rects[1].area() else 1
        else:
            g = 0 if len(groups[0]) <= len(groups[1]) else 1
        groups[g].append(child)
        rects[g] = rects[g].union(r)

    return groups[0], groups[1]


class RTreeBuffer:
    """
    Write buffer of at most ``capacity`` areas.

    Memory-resident: searches cost no block I/O.
    """

    def __init__(self, capacity: int, node_capacity: int = 8):
        if node_capacity < 2:
            raise ValueError("node_capacity must be >= 2")
        self.capacity = capacity
        self.node_capacity = node_capacity
        self.min_fill = max(1, -(-node_capacity // 2) - 1)
        self.root = Node(leaf=True)
        self.count = 0

    def __len__(self) -> int:
        return self.count

    def is_full(self) -> bool:
        return self.count >= self.capacity

    def insert(self, area: EffectiveArea) -> None:
        leaf = self._choose_leaf(BoundingRectangle.of(area))
        leaf.children.append(area)
        self.count += 1
        self._adjust_tree(leaf)

    def _choose_leaf(self, rect: BoundingRectangle) -> Node:
        """Follow the child needing least enlargement, ties to the smaller rectangle."""
        node = self.root
        while not node.leaf:
            node = min(
                node.children,
                key=lambda child: (child.mbr.enlargement(rect), child.mbr.area()),
            )
        return node

    def _adjust_tree(self, node: Node) -> None:
        while node is not None:
            if len(node.children) > self.node_capacity:
                self._split(node)
            node.update_mbr()
            node = node.parent

    def _split(self, node: Node) -> None:
        first, second = quadratic_split(node.children, self.min_fill)
        sibling = Node(leaf=node.leaf, children=second)
        node.children = first
        for child in second:
            if isinstance(child, Node):
                child.parent = sibling
        sibling.update_mbr()

        if node.parent is None:
            root = Node(leaf=False, children=[node, sibling])
            node.parent = root
            sibling.parent = root
            self.root = root
            node.update_mbr()
            root.update_mbr()
        else:
            sibling.parent = node.parent
            node.parent.children.append(sibling)

    def search(self, key: int, seq: int) -> Optional[EffectiveArea]:
        """An area covering (key, seq), or None."""
        if self.root.mbr is None:
            return None
        stack = [self.root]
        while stack:
            node = stack.pop()
            for child in node.children:
                if isinstance(child, Node):
                    if child.mbr is not None and child.mbr.includes_point(key, seq):
                        stack.append(child)
                elif child.covers(key, seq):
                    return child
        return None

    def areas(self) -> List[EffectiveArea]:
        return list(self.root.all_areas())

    def clear(self) -> None:
        self.root = Node(leaf=True)
        self.count = 0

    def nodes(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.leaf:
                stack.extend(node.children)

    @property
    def size_bytes(self) -> int:
        """Approximate footprint: 32 bytes per rectangle held."""
        return 32 * sum(len(node.children) for node in self.nodes())
