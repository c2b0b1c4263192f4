from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from util import InputError, NumericalError, ValidationError, createLogger

logger = createLogger("geometry.chains")


@dataclass(frozen=True)
class Box:
    """An open axis-aligned box prod_j ]lo_j, hi_j[."""

    name: str
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValidationError(f"box {self.name}: lo and hi differ in dimension")
        for lo, hi in zip(self.lo, self.hi):
            if not lo < hi:
                raise ValidationError(f"box {self.name}: empty side ]{lo}, {hi}[")

    def contains(self, x) -> bool:
        return all(lo < v < hi for lo, v, hi in zip(self.lo, x, self.hi))

    def intersects(self, other: "Box") -> bool:
        return all(max(a, c) < min(b, d) for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))


@dataclass(frozen=True, eq=False)
class Cover:
    boxes: tuple[Box, ...]

    def __post_init__(self):
        names = [b.name for b in self.boxes]
        if len(set(names)) != len(names):
            raise ValidationError("cover box names must be unique")
        if len({len(b.lo) for b in self.boxes}) > 1:
            raise ValidationError("cover boxes differ in dimension")

    @property
    def dim(self) -> int:
        return len(self.boxes[0].lo) if self.boxes else 0

    def containing(self, x) -> list[int]:
        return [i for i, box in enumerate(self.boxes) if box.contains(x)]

    def adjacency(self) -> np.ndarray:
        n = len(self.boxes)
        adjacency = np.zeros((n, n), dtype=bool)
        for i in range(n):
            for j in range(i + 1, n):
                if self.boxes[i].intersects(self.boxes[j]):
                    adjacency[i, j] = adjacency[j, i] = True
        return adjacency


@dataclass(frozen=True)
class Chain:
    indices: tuple[int, ...]
    names: tuple[str, ...]

    def __len__(self):
        return len(self.indices)

    def to_text(self) -> str:
        return "".join(f"{name}\n" for name in self.names)


def parse_cover(text: str) -> Cover:
    """
    One box per line: `<name> lo1:hi1 lo2:hi2 ...`. Blank lines and lines
    starting with # are skipped.
    """
    boxes = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if len(tokens) < 2:
            raise ValidationError(f"line {line_no}: box needs a name and at least one lo:hi side")
        sides = []
        for token in tokens[1:]:
            parts = token.split(":")
            try:
                if len(parts) != 2:
                    raise ValueError
                sides.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ValidationError(f"line {line_no}: cannot parse side '{token}' as lo:hi") from None
        boxes.append(Box(tokens[0], tuple(s[0] for s in sides), tuple(s[1] for s in sides)))
    if not boxes:
        raise ValidationError("cover has no boxes")
    return Cover(tuple(boxes))


def load_cover(path) -> Cover:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot open {path}: {e.strerror}") from e
    return parse_cover(text)


def verify_chain(cover: Cover, indices, a, b) -> list[str]:
    """Violations of the three chain conditions; empty when the chain is valid."""
    violations = []
    boxes = [cover.boxes[i] for i in indices]
    if not boxes:
        return ["chain is empty"]

    n = len(boxes)
    for i, box in enumerate(boxes):
        if box.contains(a) != (i == 0):
            violations.append(f"a {'outside' if i == 0 else 'inside'} {box.name} at position {i + 1}")
        if box.contains(b) != (i == n - 1):
            violations.append(f"b {'outside' if i == n - 1 else 'inside'} {box.name} at position {i + 1}")
    for i in range(n):
        for j in range(i + 1, n):
            if boxes[i].intersects(boxes[j]) != (j - i <= 1):
                state = "disjoint" if j - i <= 1 else "intersecting"
                violations.append(f"{boxes[i].name} and {boxes[j].name} {state} at positions {i + 1}, {j + 1}")
    return violations


def splice(adjacency: np.ndarray, first, second) -> list[int]:
    """
    Join the chain `first` with `second`: r is the first position of `first`
    meeting any box of `second`, s the last position of `second` meeting
    first[r]; the result is first[:r+1] + second[s:].
    """
    for r, u in enumerate(first):
        meets = [s for s, v in enumerate(second) if u == v or adjacency[u, v]]
        if meets:
            s = max(meets)
            if first[r] == second[s]:
                return list(first[:r]) + list(second[s:])
            return list(first[: r + 1]) + list(second[s:])
    raise ValidationError("the chains share no intersecting boxes")


def _tighten(cover: Cover, adjacency: np.ndarray, indices, a, b) -> list[int]:
    indices = list(indices)
    while True:
        # the chain starts at the last box holding a and ends at the first later box holding b
        start = max(i for i, k in enumerate(indices) if cover.boxes[k].contains(a))
        indices = indices[start:]
        end = min(i for i, k in enumerate(indices) if cover.boxes[k].contains(b))
        indices = indices[: end + 1]

        chord = _first_chord(adjacency, indices)
        if chord is None:
            return indices
        i, j = chord
        indices = splice(adjacency, indices[: i + 1], indices[j:])


def _first_chord(adjacency: np.ndarray, indices) -> tuple[int, int] | None:
    # smallest i, then largest j >= i + 2, with boxes i and j intersecting
    for i in range(len(indices)):
        for j in range(len(indices) - 1, i + 1, -1):
            if adjacency[indices[i], indices[j]]:
                return i, j
    return None


def open_chain(cover: Cover, a, b) -> Chain | None:
    """
    Chain of cover boxes connecting a and b, or None when the intersection
    graph separates them. Built from a shortest path in the intersection graph,
    then chords are removed by splicing until the chain conditions hold.
    """
    a = tuple(float(v) for v in a)
    b = tuple(float(v) for v in b)
    for name, x in (("a", a), ("b", b)):
        if len(x) != cover.dim:
            raise ValidationError(f"point {name} has dimension {len(x)}, cover has {cover.dim}")

    sources, targets = cover.containing(a), cover.containing(b)
    if not sources:
        raise ValidationError(f"point a={list(a)} is not covered")
    if not targets:
        raise ValidationError(f"point b={list(b)} is not covered")

    adjacency = cover.adjacency()
    distances, predecessors = shortest_path(
        csr_matrix(adjacency.astype(float)), directed=False, unweighted=True, indices=sources, return_predecessors=True
    )
    best = min(
        ((distances[s, t], s, t) for s in range(len(sources)) for t in targets if np.isfinite(distances[s, t])),
        default=None,
    )
    if best is None:
        logger.info("the intersection graph separates a from b: no chain")
        return None

    _, row, target = best
    path = [target]
    while path[-1] != sources[row]:
        path.append(int(predecessors[row, path[-1]]))
    path.reverse()

    indices = _tighten(cover, adjacency, path, a, b)
    violations = verify_chain(cover, indices, a, b)
    if violations:
        raise NumericalError(f"chain construction failed verification: {'; '.join(violations)}")
    return Chain(tuple(indices), tuple(cover.boxes[i].name for i in indices))


def join_chains(cover: Cover, first: Chain, second: Chain, a, c) -> Chain:
    """Chain from a to c out of a chain from a to b and a chain from b to c."""
    adjacency = cover.adjacency()
    indices = splice(adjacency, first.indices, second.indices)
    indices = _tighten(cover, adjacency, indices, a, c)
    violations = verify_chain(cover, indices, a, c)
    if violations:
        raise NumericalError(f"spliced chain failed verification: {'; '.join(violations)}")
    return Chain(tuple(indices), tuple(cover.boxes[i].name for i in indices))
