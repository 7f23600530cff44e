"""Spin-glass problem instances on tiled-K44 graphs.

An instance is the pair (h, J): per-variable fields and per-edge couplings
of the diagonal cost function  E(s) = sum_i h_i s_i + sum_(i,j) J_ij s_i s_j
over spins s_i = +-1.  The benchmark class draws h and intra-cell J uniformly
from {+1/3, -1/3} and fixes every inter-cell coupler to -1, so tripling all
coefficients makes every energy an exact integer.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .topology import INTRA, ChimeraGraph, build_chimera, custom_graph

logger = logging.getLogger(__name__)

_MAX_NICE_DENOMINATOR = 64


class InstanceFormatError(ValueError):
    """Malformed or inconsistent instance file."""


def _format_value(v: float) -> str:
    """Rational string when the value is a small exact rational, else repr."""
    frac = Fraction(v).limit_denominator(_MAX_NICE_DENOMINATOR)
    if float(frac) == v:
        return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"
    return repr(v)


def _parse_value(token: str) -> float:
    if "/" in token:
        num, den = token.split("/", 1)
        return float(Fraction(int(num), int(den)))
    return float(token)


@dataclass(eq=False)
class ProblemInstance:
    graph: ChimeraGraph
    h: np.ndarray                      # float64, one field per variable
    j: dict[tuple[int, int], float]    # couplings on allowed edges only
    seed: int | None = None
    id: str = ""
    _edge_arrays: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        if len(self.h) != self.graph.num_vars:
            raise ValueError("h length must equal the number of variables")
        allowed = self.graph.edge_set()
        for e, v in self.j.items():
            if e not in allowed:
                raise ValueError(f"coupling on non-edge {e}")
            if abs(v) > 1.0:
                raise ValueError(f"|J{e}| > 1")
        if np.any(np.abs(self.h) > 1.0):
            raise ValueError("|h_i| > 1")

    @property
    def n(self) -> int:
        return self.graph.num_vars

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(i, j, J_ij) arrays aligned with graph.edges; absent couplings are 0."""
        if self._edge_arrays is None:
            ei = np.array([e[0] for e in self.graph.edges], dtype=np.int64)
            ej = np.array([e[1] for e in self.graph.edges], dtype=np.int64)
            jv = np.array([self.j.get(e, 0.0) for e in self.graph.edges], dtype=float)
            self._edge_arrays = (ei, ej, jv)
        return self._edge_arrays

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        mine = {e: v for e, v in self.j.items() if v != 0.0}
        theirs = {e: v for e, v in other.j.items() if v != 0.0}
        return (
            self.graph.edges == other.graph.edges
            and np.array_equal(self.h, other.h)
            and mine == theirs
            and self.seed == other.seed
            and self.id == other.id
        )


def custom_instance(h, couplings=None, id: str = "") -> ProblemInstance:
    """Hand-built instance on an ad-hoc graph; for small exact checks."""
    h = np.asarray(h, dtype=float)
    couplings = dict(couplings or {})
    j = {(min(a, b), max(a, b)): float(v) for (a, b), v in couplings.items()}
    graph = custom_graph(len(h), list(j))
    return ProblemInstance(graph=graph, h=h, j=j, id=id)


def classical_energy(instance: ProblemInstance, spins) -> float:
    """Cost of one +-1 assignment under the diagonal Hamiltonian."""
    spins = np.asarray(spins)
    if spins.shape != (instance.n,):
        raise ValueError(f"spins must have length {instance.n}, got shape {spins.shape}")
    if not np.all(np.abs(spins) == 1):
        raise ValueError("spins must be +-1")
    ei, ej, jv = instance.edge_arrays()
    return float(instance.h @ spins + jv @ (spins[ei] * spins[ej]))


def integer_scaled_terms(instance: ProblemInstance, tol: float = 1e-12):
    """Return (h*3, J*3) as int64 arrays, or None if not multiples of 1/3.

    The benchmark class has h, intra J in {+-1/3} and inter J = -1, so the
    tripled coefficients are exact integers and ground-state ties can be
    detected with no floating-point ambiguity.
    """
    _, _, jv = instance.edge_arrays()
    h3 = 3.0 * instance.h
    j3 = 3.0 * jv
    if np.any(np.abs(h3 - np.round(h3)) > tol) or np.any(np.abs(j3 - np.round(j3)) > tol):
        return None
    return np.round(h3).astype(np.int64), np.round(j3).astype(np.int64)


def generate_instance(graph: ChimeraGraph, seed: int) -> ProblemInstance:
    """Draw one benchmark instance, reproducibly.

    Randomness comes from numpy's Philox 4x64 counter-based generator keyed
    by ``seed``; draws are consumed in a fixed order (all h by variable
    index, then intra-cell couplings in lexicographic edge order), so the
    same (graph, seed) always yields the same instance on any machine.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    h = (2 * rng.integers(0, 2, size=graph.num_vars) - 1) / 3.0
    j: dict[tuple[int, int], float] = {}
    intra = [e for e, t in zip(graph.edges, graph.edge_tags) if t == INTRA]
    signs = 2 * rng.integers(0, 2, size=len(intra)) - 1
    for e, sign in zip(intra, signs):
        j[e] = sign / 3.0
    for e, t in zip(graph.edges, graph.edge_tags):
        if t != INTRA:
            j[e] = -1.0
    label = f"chimera{graph.rows}x{graph.cols}-s{seed}"
    return ProblemInstance(graph=graph, h=h, j=j, seed=int(seed), id=label)


def generate_filtered_batch(
    graph: ChimeraGraph,
    count: int,
    seed_stream=0,
    reject_cap: float = 0.999,
) -> list[ProblemInstance]:
    """Generate ``count`` instances whose ground state is unique.

    Candidates are drawn from ``seed_stream`` (an iterable of seeds, or an
    integer meaning seed, seed+1, ...), checked with the exact degeneracy
    counter, and rejected when the minimum is attained more than once.
    Aborts once the observed rejection rate exceeds ``reject_cap``.
    """
    from .treesolver import degeneracy  # deferred: treesolver depends on this module

    if isinstance(seed_stream, (int, np.integer)):
        seeds = itertools.count(int(seed_stream))
    else:
        seeds = iter(seed_stream)

    kept: list[ProblemInstance] = []
    attempts = 0
    min_attempts_before_cap = max(200, 2 * count)
    while len(kept) < count:
        try:
            seed = next(seeds)
        except StopIteration:
            raise RuntimeError(
                f"seed stream exhausted after {attempts} attempts, {len(kept)}/{count} accepted"
            ) from None
        attempts += 1
        cand = generate_instance(graph, seed)
        ndeg = degeneracy(cand)
        if ndeg == 1:
            kept.append(cand)
        else:
            logger.info("rejected seed %d: ground-state degeneracy %d", seed, ndeg)
            rejected = attempts - len(kept)
            if attempts >= min_attempts_before_cap and rejected / attempts > reject_cap:
                raise RuntimeError(
                    f"rejection rate {rejected}/{attempts} exceeds cap {reject_cap}"
                )
    return kept


def save_instance(instance: ProblemInstance, path) -> None:
    """Write the line-oriented text format; byte-stable for equal instances.

    Layout: ``c`` comment/metadata lines, one ``p chimera M N num_vars
    num_terms`` header, then ``h i value`` and ``J i j value`` lines
    (0-indexed, whitespace separated, rational strings where exact).
    """
    if instance.graph.rows < 1 or instance.graph.cols < 1:
        raise ValueError("only tiled-K44 instances have a file representation")
    lines = ["c tiled-K44 spin-glass instance"]
    if instance.id:
        lines.append(f"c id: {instance.id}")
    if instance.seed is not None:
        lines.append(f"c seed: {instance.seed}")
    h_lines = [
        f"h {i} {_format_value(v)}" for i, v in enumerate(instance.h) if v != 0.0
    ]
    j_lines = [
        f"J {i} {j} {_format_value(v)}"
        for (i, j), v in sorted(instance.j.items())
        if v != 0.0
    ]
    g = instance.graph
    lines.append(f"p chimera {g.rows} {g.cols} {g.num_vars} {len(h_lines) + len(j_lines)}")
    lines.extend(h_lines)
    lines.extend(j_lines)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_instance(path) -> ProblemInstance:
    with open(path) as fh:
        raw = fh.readlines()

    graph = None
    num_terms = None
    h = None
    j: dict[tuple[int, int], float] = {}
    seen_h: set[int] = set()
    inst_id = ""
    seed = None
    terms_read = 0

    def fail(lineno, msg):
        raise InstanceFormatError(f"{path}:{lineno}: {msg}")

    for lineno, line in enumerate(raw, start=1):
        text = line.strip()
        if not text:
            continue
        parts = text.split()
        kind = parts[0]
        if kind == "c":
            if len(parts) >= 3 and parts[1] == "id:":
                inst_id = " ".join(parts[2:])
            elif len(parts) >= 3 and parts[1] == "seed:":
                seed = int(parts[2])
            continue
        if kind == "p":
            if graph is not None:
                fail(lineno, "duplicate 'p' header")
            if len(parts) != 6 or parts[1] != "chimera":
                fail(lineno, "expected 'p chimera M N num_vars num_terms'")
            try:
                rows, cols, nvars, num_terms = (int(x) for x in parts[2:])
            except ValueError:
                fail(lineno, "non-integer header field")
            graph = build_chimera(rows, cols)
            if graph.num_vars != nvars:
                fail(lineno, f"num_vars {nvars} != 8*{rows}*{cols}")
            h = np.zeros(nvars)
            continue
        if graph is None:
            fail(lineno, f"'{kind}' line before 'p' header")
        if kind == "h":
            if len(parts) != 3:
                fail(lineno, "expected 'h i value'")
            try:
                i = int(parts[1])
                v = _parse_value(parts[2])
            except (ValueError, ZeroDivisionError):
                fail(lineno, "malformed h line")
            if not 0 <= i < graph.num_vars:
                fail(lineno, f"variable index {i} out of range")
            if i in seen_h:
                fail(lineno, f"duplicate field for variable {i}")
            if abs(v) > 1.0:
                fail(lineno, f"|h_{i}| > 1")
            seen_h.add(i)
            h[i] = v
            terms_read += 1
        elif kind == "J":
            if len(parts) != 4:
                fail(lineno, "expected 'J i j value'")
            try:
                a, b = int(parts[1]), int(parts[2])
                v = _parse_value(parts[3])
            except (ValueError, ZeroDivisionError):
                fail(lineno, "malformed J line")
            e = (min(a, b), max(a, b))
            if e not in graph.edge_set():
                fail(lineno, f"({a},{b}) is not in the allowed edge set")
            if e in j:
                fail(lineno, f"duplicate coupling for edge {e}")
            if abs(v) > 1.0:
                fail(lineno, f"|J_{e}| > 1")
            j[e] = v
            terms_read += 1
        else:
            fail(lineno, f"unknown line type '{kind}'")

    if graph is None:
        raise InstanceFormatError(f"{path}: missing 'p' header")
    if num_terms is not None and terms_read != num_terms:
        raise InstanceFormatError(
            f"{path}: header promised {num_terms} terms, found {terms_read}"
        )
    return ProblemInstance(graph=graph, h=h, j=j, seed=seed, id=inst_id)
