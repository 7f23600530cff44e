"""Exact classical ground-state solvers.

Two independent routes to the same answer: exhaustive Gray-code enumeration
for small problems, and dynamic programming over a tree decomposition that
exploits the tiled-K44 structure (frontier sweep along the shorter grid
dimension, width at most min(4M, 4N) + 4).  Benchmark-class instances are
solved in integer arithmetic after tripling all coefficients, so minima,
ties, and degeneracy counts carry no floating-point ambiguity.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from .instance import ProblemInstance, integer_scaled_terms
from .topology import ChimeraGraph

BRUTE_FORCE_MAX_VARS = 28
BRUTE_FORCE_DEGENERACY_CUTOFF = 24  # degeneracy() switches to tree DP above this
FLOAT_TIE_TOL = 1e-9     # tie window when coefficients are not multiples of 1/3
MAX_DP_WIDTH = 25        # table-size guard, 2^25 entries

DEGENERACY_SATURATION = 2**64 - 1
_COUNT_EXACT_LIMIT = 2.0**53  # float64 counts are exact integers below this


class SolverError(RuntimeError):
    pass


@dataclass
class SolveResult:
    energy_scaled: int | None      # exact tripled energy (None in float fallback)
    energy: float
    assignment: np.ndarray         # one optimal +-1 vector
    degeneracy: int
    wall_time: float
    method: str
    exact_arithmetic: bool = True
    degeneracy_saturated: bool = False
    width: int | None = None
    repeat_times: list[float] | None = None

    @property
    def energy_rational(self) -> str:
        if self.energy_scaled is not None:
            f = Fraction(self.energy_scaled, 3)
            return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
        return repr(self.energy)


# ---------------------------------------------------------------------------
# brute force
# ---------------------------------------------------------------------------

@njit(cache=True)
def _gray_scan(h, nbr_ptr, nbr_var, nbr_j, n, tol):
    """Visit all 2^n spin vectors in Gray-code order with O(degree) updates.

    Returns (E_min, Gray index of the first minimizer, tie count).  With
    integer-valued inputs and tol = 0 every comparison is exact: sums of
    small integers never leave float64's exact range.
    """
    spins = np.ones(n, dtype=np.int8)
    energy = 0.0
    for i in range(n):
        energy += h[i]
    for p in range(len(nbr_j)):  # each edge appears twice in the CSR arrays
        energy += 0.5 * nbr_j[p]

    best = energy
    best_at = np.int64(0)
    count = np.int64(1)
    total = np.int64(1) << n
    for k in range(np.int64(1), total):
        i = 0
        kk = k
        while kk & 1 == 0:
            kk >>= 1
            i += 1
        local = h[i]
        for p in range(nbr_ptr[i], nbr_ptr[i + 1]):
            local += nbr_j[p] * spins[nbr_var[p]]
        energy -= 2.0 * spins[i] * local
        spins[i] = -spins[i]
        if energy < best - tol:
            best = energy
            best_at = k
            count = 1
        elif energy <= best + tol:
            count += 1
    return best, best_at, count


def _neighbor_csr(instance: ProblemInstance, jv: np.ndarray):
    n = instance.n
    ei, ej, _ = instance.edge_arrays()
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, ei, 1)
    np.add.at(deg, ej, 1)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=ptr[1:])
    var = np.empty(ptr[-1], dtype=np.int64)
    val = np.empty(ptr[-1], dtype=np.float64)
    pos = ptr[:-1].copy()
    for a, b, v in zip(ei, ej, jv):
        var[pos[a]], val[pos[a]] = b, v
        pos[a] += 1
        var[pos[b]], val[pos[b]] = a, v
        pos[b] += 1
    return ptr, var, val


def _spins_from_gray(index: int, n: int) -> np.ndarray:
    gray = index ^ (index >> 1)
    bits = (gray >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _scaled_or_float(instance: ProblemInstance):
    """(h, j, tie tol, exact?) with coefficients tripled when that is exact."""
    scaled = integer_scaled_terms(instance)
    if scaled is not None:
        h3, j3 = scaled
        return h3.astype(np.float64), j3.astype(np.float64), 0.0, True
    _, _, jraw = instance.edge_arrays()
    return instance.h.astype(np.float64), jraw.astype(np.float64), FLOAT_TIE_TOL, False


def brute_force(instance: ProblemInstance, max_vars: int = BRUTE_FORCE_MAX_VARS) -> SolveResult:
    """Exhaustive minimum, witness (lowest Gray index), and exact degeneracy."""
    n = instance.n
    if n > max_vars:
        raise SolverError(f"brute force guarded at {max_vars} variables, got {n}")
    hv, jv, tol, exact = _scaled_or_float(instance)
    ptr, var, val = _neighbor_csr(instance, jv)

    t0 = time.perf_counter()
    best, best_at, count = _gray_scan(hv, ptr, var, val, n, tol)
    wall = time.perf_counter() - t0

    return SolveResult(
        energy_scaled=int(round(best)) if exact else None,
        energy=best / 3.0 if exact else best,
        assignment=_spins_from_gray(int(best_at), n),
        degeneracy=int(count),
        wall_time=wall,
        method="brute",
        exact_arithmetic=exact,
    )


# ---------------------------------------------------------------------------
# tree decomposition
# ---------------------------------------------------------------------------

@dataclass
class TreeDecomposition:
    """Rooted decomposition: variable bags plus parent pointers."""

    bags: list[tuple[int, ...]]
    parent: list[int]  # parent[i] = bag index, -1 for the root
    width: int = field(init=False)

    def __post_init__(self):
        self.bags = [tuple(sorted(b)) for b in self.bags]
        self.width = max(len(b) for b in self.bags) - 1


def validate_decomposition(graph, td: TreeDecomposition) -> None:
    """Check the three decomposition axioms; raises SolverError on violation."""
    covered = set()
    for bag in td.bags:
        covered.update(bag)
    if covered != set(range(graph.num_vars)):
        raise SolverError("decomposition does not cover every variable")
    bag_sets = [set(b) for b in td.bags]
    for e in graph.edges:
        if not any(e[0] in b and e[1] in b for b in bag_sets):
            raise SolverError(f"edge {e} not contained in any bag")
    holders: dict[int, list[int]] = {}
    for t, b in enumerate(bag_sets):
        for v in b:
            holders.setdefault(v, []).append(t)
    for v, ids in holders.items():
        members = set(ids)
        links = sum(1 for t in ids if td.parent[t] in members)
        if links != len(ids) - 1:
            raise SolverError(f"bags containing variable {v} do not form a subtree")


def _side_vars(cols: int, r: int, c: int, side: str) -> list[int]:
    base = 8 * (r * cols + c)
    return [base + k for k in range(4)] if side == "left" else [base + 4 + k for k in range(4)]


def chimera_decomposition(graph: ChimeraGraph) -> TreeDecomposition:
    """Path decomposition sweeping cells along the shorter grid dimension.

    The frontier holds one 4-qubit coupler set per lane of the longer
    dimension; cells are processed with per-slot handoff bags so no bag
    exceeds 4*min(M, N) + 5 variables.  Validity is verified before return.
    """
    if graph.rows < 1 or graph.cols < 1:
        raise SolverError("decomposition requires a tiled-K44 graph")
    m, n = graph.rows, graph.cols

    # Sweep along rows when there are at least as many rows as columns:
    # the frontier then spans columns (vertical/left qubits).  Otherwise
    # sweep along columns with a row-spanning frontier of right qubits.
    sweep_rows = n <= m
    if sweep_rows:
        order = [(r, c) for r in range(m) for c in range(n)]
        lane = lambda rc: rc[1]
        frontier_side, sweep_side = "left", "right"
        has_next_in_line = lambda rc: rc[1] + 1 < n
    else:
        order = [(r, c) for c in range(n) for r in range(m)]
        lane = lambda rc: rc[0]
        frontier_side, sweep_side = "right", "left"
        has_next_in_line = lambda rc: rc[0] + 1 < m

    frontier: dict[int, list[int]] = {}
    carried: list[int] = []
    bags: list[tuple[int, ...]] = []

    for rc in order:
        r, c = rc
        key = lane(rc)
        new_f = _side_vars(n, r, c, frontier_side)
        new_s = _side_vars(n, r, c, sweep_side)
        old_f = frontier.get(key)
        base: list[int] = []
        for k2, vs in frontier.items():
            if k2 != key:
                base.extend(vs)

        if old_f is None:
            bags.append(tuple(sorted(base + carried + new_f)))
        else:
            for k in range(4):  # slot k of the old set meets slot k of the new
                bags.append(tuple(sorted(base + carried + old_f[k:] + new_f[: k + 1])))
        frontier[key] = new_f

        keep_sweep = has_next_in_line(rc)
        for k in range(4):  # carried slot k meets this cell's sweep slot k
            fresh = new_s[: k + 1] if keep_sweep else [new_s[k]]
            bags.append(tuple(sorted(base + new_f + carried[k:] + fresh)))
        carried = new_s if keep_sweep else []

    td = TreeDecomposition(bags=bags, parent=[-1] + list(range(len(bags) - 1)))
    validate_decomposition(graph, td)
    if td.width > 4 * min(m, n) + 4:
        raise SolverError(f"construction exceeded width bound: {td.width}")
    return td


# ---------------------------------------------------------------------------
# dynamic programming over the decomposition
# ---------------------------------------------------------------------------

def _lex_min_rows(rows: np.ndarray, groups: np.ndarray):
    """Per-group index of the lexicographically smallest row (-1 < +1)."""
    keys = [rows[:, col] for col in range(rows.shape[1] - 1, -1, -1)]
    keys.append(groups)
    order = np.lexsort(keys)
    sorted_groups = groups[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sorted_groups[1:] != sorted_groups[:-1]
    return sorted_groups[first], order[first]


def treedp_solve(
    instance: ProblemInstance,
    decomposition: TreeDecomposition | None = None,
) -> SolveResult:
    """Exact minimum, degeneracy, and witness by leaf-to-root DP.

    Each bag's table is indexed by assignments of the separator shared with
    its parent and stores (best subtree energy, minimizer count, one lex-
    smallest witness).  Witnesses propagate root-to-leaf implicitly: tables
    carry full partial assignments, so the root entry is a complete optimal
    vector.  Counts above 2^53 are reported as saturated.
    """
    g = instance.graph
    td = decomposition if decomposition is not None else chimera_decomposition(g)
    validate_decomposition(g, td)
    if td.width > MAX_DP_WIDTH:
        raise SolverError(f"decomposition width {td.width} over guard {MAX_DP_WIDTH}")
    hv, jv, tol, exact = _scaled_or_float(instance)
    nvars = g.num_vars
    nbags = len(td.bags)
    bag_sets = [set(b) for b in td.bags]

    children: list[list[int]] = [[] for _ in range(nbags)]
    root = -1
    for t, p in enumerate(td.parent):
        if p == -1:
            root = t
        else:
            children[p].append(t)

    depth = np.zeros(nbags, dtype=int)
    bfs = [root]
    for t in bfs:
        for ch in children[t]:
            depth[ch] = depth[t] + 1
            bfs.append(ch)
    if len(bfs) != nbags:
        raise SolverError("decomposition tree is not connected")

    intro_vars: list[list[int]] = []
    for t in range(nbags):
        p = td.parent[t]
        intro_vars.append([v for v in td.bags[t] if p == -1 or v not in bag_sets[p]])

    ei, ej, _ = instance.edge_arrays()
    intro_edges: list[list[int]] = [[] for _ in range(nbags)]
    for idx, (a, b) in enumerate(zip(ei, ej)):
        for t in bfs:  # first bag in root-to-leaf order containing both = topmost
            if a in bag_sets[t] and b in bag_sets[t]:
                intro_edges[t].append(idx)
                break

    tables: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    saturated = False

    for t in reversed(bfs):
        vs = td.bags[t]
        w = len(vs)
        pos = {v: k for k, v in enumerate(vs)}
        codes = np.arange(1 << w, dtype=np.int64)
        spins = (2 * ((codes[:, None] >> np.arange(w)) & 1) - 1).astype(np.int8)

        energy = np.zeros(1 << w)
        for v in intro_vars[t]:
            energy += hv[v] * spins[:, pos[v]]
        for eidx in intro_edges[t]:
            energy += jv[eidx] * spins[:, pos[ei[eidx]]] * spins[:, pos[ej[eidx]]]

        counts = np.ones(1 << w)
        child_sep_idx = []
        for ch in children[t]:
            sep = sorted(bag_sets[ch] & bag_sets[t])
            idx = np.zeros(1 << w, dtype=np.int64)
            for k, v in enumerate(sep):
                idx |= ((codes >> pos[v]) & 1) << k
            e_ch, c_ch, _ = tables[ch]
            energy += e_ch[idx]
            counts = counts * c_ch[idx]
            child_sep_idx.append(idx)
        if np.any(counts >= _COUNT_EXACT_LIMIT):
            saturated = True
            counts = np.minimum(counts, _COUNT_EXACT_LIMIT)

        p = td.parent[t]
        sep_t = sorted(bag_sets[t] & bag_sets[p]) if p != -1 else []
        gidx = np.zeros(1 << w, dtype=np.int64)
        for k, v in enumerate(sep_t):
            gidx |= ((codes >> pos[v]) & 1) << k
        nsep = 1 << len(sep_t)

        e_new = np.full(nsep, np.inf)
        np.minimum.at(e_new, gidx, energy)
        win = energy <= e_new[gidx] + tol
        widx = np.nonzero(win)[0]
        wg = gidx[widx]

        c_new = np.zeros(nsep)
        np.add.at(c_new, wg, counts[widx])
        if np.any(c_new >= _COUNT_EXACT_LIMIT):
            saturated = True
            c_new = np.minimum(c_new, _COUNT_EXACT_LIMIT)

        rows = np.zeros((len(widx), nvars), dtype=np.int8)
        for ch, idx in zip(children[t], child_sep_idx):
            w_ch = tables[ch][2][idx[widx]]
            np.copyto(rows, w_ch, where=w_ch != 0)
        rows[:, list(vs)] = spins[widx]

        w_new = np.zeros((nsep, nvars), dtype=np.int8)
        multi = np.bincount(wg, minlength=nsep)[wg] > 1
        singles = widx[~multi]
        w_new[wg[~multi]] = rows[~multi]
        if np.any(multi):
            gsel, rsel = _lex_min_rows(rows[multi], wg[multi])
            w_new[gsel] = rows[multi][rsel]

        for ch in children[t]:
            del tables[ch]
        tables[t] = (e_new, c_new, w_new)

    e_root, c_root, w_root = tables[root]
    best = float(e_root[0])
    count = float(c_root[0])
    assignment = w_root[0].copy()
    if np.any(assignment == 0):
        raise SolverError("internal error: witness left variables unassigned")

    return SolveResult(
        energy_scaled=int(round(best)) if exact else None,
        energy=best / 3.0 if exact else best,
        assignment=assignment,
        degeneracy=DEGENERACY_SATURATION if count >= _COUNT_EXACT_LIMIT else int(round(count)),
        wall_time=0.0,
        method="treedp",
        exact_arithmetic=exact,
        degeneracy_saturated=bool(count >= _COUNT_EXACT_LIMIT),
        width=td.width,
    )


# ---------------------------------------------------------------------------
# front door
# ---------------------------------------------------------------------------

def degeneracy(instance: ProblemInstance) -> int:
    """Exact count of global minimizers; brute force when small, DP otherwise."""
    if instance.n <= BRUTE_FORCE_DEGENERACY_CUTOFF:
        return brute_force(instance).degeneracy
    return treedp_solve(instance).degeneracy


def solve(instance: ProblemInstance, method: str = "auto") -> SolveResult:
    if method == "auto":
        method = "brute" if instance.n <= BRUTE_FORCE_DEGENERACY_CUTOFF else "treedp"
    if method == "brute":
        return brute_force(instance)
    if method == "treedp":
        t0 = time.perf_counter()
        result = treedp_solve(instance)
        result.wall_time = time.perf_counter() - t0
        return result
    raise ValueError(f"unknown method '{method}'")


def timed_solve(instance: ProblemInstance, repeats: int = 10, method: str = "auto") -> SolveResult:
    """Solve ``repeats`` times and keep the minimum wall time.

    All repeats must agree field-for-field; a mismatch is a hard error since
    both solvers are deterministic.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    solve(instance, method)  # warm-up: JIT compilation must not pollute timings
    results = [solve(instance, method) for _ in range(repeats)]
    first = results[0]
    for r in results[1:]:
        same = (
            r.energy_scaled == first.energy_scaled
            and r.energy == first.energy
            and r.degeneracy == first.degeneracy
            and np.array_equal(r.assignment, first.assignment)
        )
        if not same:
            raise SolverError("nondeterministic results across timing repeats")
    times = [r.wall_time for r in results]
    first.repeat_times = times
    first.wall_time = min(times)
    return first
