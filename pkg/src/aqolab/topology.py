"""Tiled bipartite-K44 hardware graphs.

The processor connectivity is an M x N grid of 8-variable unit cells.  Each
cell is a complete bipartite graph between a "left" partition (4 vertical
qubits) and a "right" partition (4 horizontal qubits).  Vertical qubits
connect slot-to-slot between vertically adjacent cells, horizontal qubits
slot-to-slot between horizontally adjacent cells, giving 4 inter-cell
couplers per adjacent cell pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

INTRA = "intra_cell"
INTER = "inter_cell"

LEFT = "left"    # vertical qubits, local offsets 0..3
RIGHT = "right"  # horizontal qubits, local offsets 4..7


@dataclass(frozen=True)
class CellCoord:
    """Location of one variable: grid cell, partition side, slot within side."""

    row: int
    col: int
    side: str   # LEFT or RIGHT
    slot: int   # 0..3


@dataclass(frozen=True)
class ChimeraGraph:
    """Immutable tiled-K44 graph with a lexicographically sorted edge list."""

    rows: int
    cols: int
    num_vars: int
    edges: tuple[tuple[int, int], ...]
    edge_tags: tuple[str, ...]          # INTRA / INTER, aligned with edges
    cell_of: tuple[CellCoord, ...] = field(repr=False)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def intra_edges(self) -> list[tuple[int, int]]:
        return [e for e, t in zip(self.edges, self.edge_tags) if t == INTRA]

    def inter_edges(self) -> list[tuple[int, int]]:
        return [e for e, t in zip(self.edges, self.edge_tags) if t == INTER]

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_vars)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj


def variable_index(rows: int, cols: int, row: int, col: int, offset: int) -> int:
    """Row-major cell order; offsets 0..3 left partition, 4..7 right."""
    return 8 * (row * cols + col) + offset


def build_chimera(rows: int, cols: int) -> ChimeraGraph:
    """Construct the allowed edge set for an M x N tiling of K44 unit cells.

    Deterministic: repeated calls return identical edge lists.  Intra-cell
    edges join the two partitions of one cell (16 per cell); inter-cell
    edges join identically slotted vertices of the matching partition in
    grid-adjacent cells (4 per adjacent pair).
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid must be at least 1x1, got {rows}x{cols}")

    tagged: list[tuple[tuple[int, int], str]] = []
    for r in range(rows):
        for c in range(cols):
            base = 8 * (r * cols + c)
            for a in range(4):
                for b in range(4):
                    tagged.append(((base + a, base + 4 + b), INTRA))
            if r + 1 < rows:  # vertical neighbor: left partition, same slot
                down = 8 * ((r + 1) * cols + c)
                for k in range(4):
                    tagged.append(((base + k, down + k), INTER))
            if c + 1 < cols:  # horizontal neighbor: right partition, same slot
                right = 8 * (r * cols + c + 1)
                for k in range(4):
                    tagged.append(((base + 4 + k, right + 4 + k), INTER))

    tagged.sort(key=lambda et: et[0])
    edges = tuple(e for e, _ in tagged)
    tags = tuple(t for _, t in tagged)

    cells = []
    for idx in range(8 * rows * cols):
        cell, offset = divmod(idx, 8)
        r, c = divmod(cell, cols)
        side = LEFT if offset < 4 else RIGHT
        cells.append(CellCoord(r, c, side, offset % 4))

    return ChimeraGraph(
        rows=rows,
        cols=cols,
        num_vars=8 * rows * cols,
        edges=edges,
        edge_tags=tags,
        cell_of=tuple(cells),
    )


@dataclass(frozen=True)
class CustomGraph:
    """Minimal edge-set graph for hand-built test systems (N = 1, 2, ...).

    Provides the same read surface as ChimeraGraph but has no grid
    structure; rows = cols = 0 marks it as non-serializable.
    """

    num_vars: int
    edges: tuple[tuple[int, int], ...]
    rows: int = 0
    cols: int = 0
    edge_tags: tuple[str, ...] = ()

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_vars)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj


def custom_graph(num_vars: int, edges) -> CustomGraph:
    canon = sorted((min(i, j), max(i, j)) for i, j in edges)
    if any(i == j or not (0 <= i < num_vars and 0 <= j < num_vars) for i, j in canon):
        raise ValueError("edges must join distinct in-range variables")
    if len(set(canon)) != len(canon):
        raise ValueError("duplicate edges")
    return CustomGraph(
        num_vars=num_vars,
        edges=tuple(canon),
        edge_tags=tuple(INTRA for _ in canon),
    )


def standard_tilings() -> list[tuple[int, int, int, int]]:
    """The seven (rows, cols, num_vars, default_s_count) benchmark tilings."""
    return [
        (1, 1, 8, 30),
        (2, 1, 16, 40),
        (2, 2, 32, 50),
        (3, 2, 48, 60),
        (3, 3, 72, 70),
        (4, 3, 96, 110),
        (4, 4, 128, 130),
    ]
