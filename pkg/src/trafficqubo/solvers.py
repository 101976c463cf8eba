"""Classical QUBO solvers: exhaustive scan, simulated annealing, tabu search.

All solvers share the same contract: deterministic output for a fixed seed,
energies reported by recomputing from the returned assignment, and for the
two heuristics a warm start at the fastest-route one-hot assignment, which
guarantees they never report anything worse than that baseline. Inner loops
run as compiled kernels over a symmetric adjacency (CSR) view of the
coefficient map with incremental single-flip energy deltas.
"""

import logging
import time
from dataclasses import dataclass
from math import inf

import numpy as np
from numba import njit

from .qubo import QuboInstance, energy, is_valid, repair

logger = logging.getLogger(__name__)

EXHAUSTIVE_MAX_VARS = 24
FEASIBLE_MAX_STATES = 1_000_000
_ENUM_CHUNK = 1 << 16


class InstanceTooLargeError(ValueError):
    """The requested enumeration exceeds the solver's hard budget."""


@dataclass
class SolverConfig:
    """Knobs for the heuristics; None means 'derive from instance size'.

    Derived defaults: sweeps and tabu iterations are 50 * n_var, the initial
    temperature is the largest single-flip |delta| sampled at a random state,
    the final temperature is 1e-3 of the initial, tabu tenure is
    max(8, n_var // 10) and the stagnation restart threshold is 2 * n_var.
    """
    seed: int = 0
    time_limit_s: float | None = None
    sweeps: int | None = None
    reads: int = 8
    t_initial: float | None = None
    t_final: float | None = None
    tenure: int | None = None
    max_stagnation: int | None = None
    iterations: int | None = None

    def validate(self) -> None:
        if self.reads < 1:
            raise ValueError("reads must be >= 1")
        for name in ("sweeps", "tenure", "max_stagnation", "iterations"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("t_initial", "t_final"):
            value = getattr(self, name)
            if value is not None and value <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.time_limit_s is not None and self.time_limit_s <= 0.0:
            raise ValueError("time_limit_s must be positive")


@dataclass
class SolveResult:
    solver: str
    seed: int
    assignment: list[int]
    energy: float
    valid: bool
    prep_time_s: float
    solve_time_s: float


def _csr(q: QuboInstance) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Symmetric adjacency arrays + diagonal from the upper-triangular map."""
    n = q.n_var
    diag = np.zeros(n, dtype=np.float64)
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (u, v), c in q.coeffs.items():
        if u == v:
            diag[u] += c
        else:
            nbrs[u].append((v, c))
            nbrs[v].append((u, c))
    indptr = np.zeros(n + 1, dtype=np.int64)
    for u in range(n):
        nbrs[u].sort()
        indptr[u + 1] = indptr[u] + len(nbrs[u])
    indices = np.zeros(indptr[-1], dtype=np.int64)
    data = np.zeros(indptr[-1], dtype=np.float64)
    pos = 0
    for u in range(n):
        for v, c in nbrs[u]:
            indices[pos] = v
            data[pos] = c
            pos += 1
    return indptr, indices, data, diag


def _dense_upper(q: QuboInstance) -> np.ndarray:
    m = np.zeros((q.n_var, q.n_var), dtype=np.float64)
    for (u, v), c in q.coeffs.items():
        m[u, v] += c
    return m


def warm_start(q: QuboInstance) -> np.ndarray:
    """Fastest-route one-hot assignment (the repaired all-zeros state)."""
    return np.array(repair(q, [0] * q.n_var), dtype=np.int8)


@njit(cache=True)
def _deltas(indptr, indices, data, diag, x):
    n = x.shape[0]
    d = np.empty(n, np.float64)
    for v in range(n):
        s = diag[v]
        for p in range(indptr[v], indptr[v + 1]):
            if x[indices[p]]:
                s += data[p]
        d[v] = (1.0 - 2.0 * x[v]) * s
    return d


@njit(cache=True)
def _flip(indptr, indices, data, x, d, u):
    """Apply a single-bit flip and keep the delta array consistent.

    Returns the energy change of the move.
    """
    du = d[u]
    sgn = 1.0 - 2.0 * x[u]
    x[u] = 1 - x[u]
    d[u] = -du
    for p in range(indptr[u], indptr[u + 1]):
        v = indices[p]
        d[v] += (1.0 - 2.0 * x[v]) * data[p] * sgn
    return du


@njit(cache=True)
def _sa_read(indptr, indices, data, diag, x0, sweeps, t0, cooling, seed):
    np.random.seed(seed)
    n = x0.shape[0]
    x = x0.copy()
    d = _deltas(indptr, indices, data, diag, x)
    e = 0.0
    best_e = 0.0
    best_x = x.copy()
    t = t0
    for _s in range(sweeps):
        for _i in range(n):
            u = np.random.randint(0, n)
            du = d[u]
            if du <= 0.0 or np.random.random() < np.exp(-du / t):
                e += _flip(indptr, indices, data, x, d, u)
                if e < best_e - 1e-12:
                    best_e = e
                    best_x[:] = x
        t *= cooling
    return best_x, best_e


@njit(cache=True)
def _tabu_chunk(indptr, indices, data, diag, x, d, tabu_until, best_x,
                it_start, it_end, e, best_e, stall, tenure, max_stall, perturb):
    n = x.shape[0]
    for it in range(it_start, it_end):
        best_u = -1
        best_du = 0.0
        for u in range(n):
            du = d[u]
            if tabu_until[u] < it or (e + du < best_e - 1e-12):
                if best_u == -1 or du < best_du - 1e-15:
                    best_u = u
                    best_du = du
        if best_u == -1:
            for u in range(n):
                if best_u == -1 or d[u] < best_du - 1e-15:
                    best_u = u
                    best_du = d[u]
        e += _flip(indptr, indices, data, x, d, best_u)
        tabu_until[best_u] = it + tenure
        if e < best_e - 1e-12:
            best_e = e
            best_x[:] = x
            stall = 0
        else:
            stall += 1
            if stall >= max_stall:
                x[:] = best_x
                d2 = _deltas(indptr, indices, data, diag, x)
                d[:] = d2
                e = best_e
                tabu_until[:] = 0
                for _p in range(perturb):
                    u = np.random.randint(0, n)
                    e += _flip(indptr, indices, data, x, d, u)
                    if e < best_e - 1e-12:
                        best_e = e
                        best_x[:] = x
                stall = 0
    return e, best_e, stall


def _resolved(cfg: SolverConfig | None) -> SolverConfig:
    cfg = cfg or SolverConfig()
    cfg.validate()
    return cfg


def solve_sa(q: QuboInstance, cfg: SolverConfig | None = None) -> SolveResult:
    """Simulated annealing with geometric cooling and single-bit flips.

    Each read restarts at the warm start with its own random stream; the
    reported assignment is the best state seen across reads. The optional
    wall-clock limit is checked between reads, never inside one.
    """
    cfg = _resolved(cfg)
    t_prep = time.perf_counter()
    indptr, indices, data, diag = _csr(q)
    x0 = warm_start(q)
    n = q.n_var
    sweeps = cfg.sweeps if cfg.sweeps is not None else 50 * n

    if cfg.t_initial is None:
        rng = np.random.default_rng(cfg.seed)
        x_probe = rng.integers(0, 2, size=n).astype(np.int8)
        t0 = float(np.max(np.abs(_deltas(indptr, indices, data, diag, x_probe))))
        if t0 <= 0.0:
            t0 = 1.0
    else:
        t0 = cfg.t_initial
    t1 = cfg.t_final if cfg.t_final is not None else 1e-3 * t0
    t1 = min(t1, t0)
    cooling = (t1 / t0) ** (1.0 / max(1, sweeps - 1)) if sweeps > 1 else 1.0
    prep_s = time.perf_counter() - t_prep

    t_solve = time.perf_counter()
    best_x = x0
    best_e = energy(q, [int(b) for b in x0])
    for read in range(cfg.reads):
        if cfg.time_limit_s is not None and read > 0:
            if time.perf_counter() - t_solve > cfg.time_limit_s:
                logger.warning("sa: time limit hit after %d/%d reads", read, cfg.reads)
                break
        read_seed = (cfg.seed * 1000003 + 7919 * read) & 0x7FFFFFFF
        if sweeps > 0:
            xr, _rel = _sa_read(indptr, indices, data, diag, x0,
                                sweeps, t0, cooling, read_seed)
        else:
            xr = x0
        er = energy(q, [int(b) for b in xr])
        if er < best_e - 1e-12:
            best_x, best_e = xr, er
    solve_s = time.perf_counter() - t_solve

    assignment = [int(b) for b in best_x]
    return SolveResult("sa", cfg.seed, assignment, energy(q, assignment),
                       is_valid(q, assignment), prep_s, solve_s)


def solve_tabu(q: QuboInstance, cfg: SolverConfig | None = None) -> SolveResult:
    """Steepest-descent tabu search with aspiration and stagnation restarts.

    A move is tabu for `tenure` iterations after its variable flips, unless
    it would improve on the incumbent (aspiration). After max_stagnation
    non-improving moves the search restarts from the incumbent with a small
    seeded perturbation. Tenure 0 degenerates to plain steepest descent.
    """
    cfg = _resolved(cfg)
    t_prep = time.perf_counter()
    indptr, indices, data, diag = _csr(q)
    x0 = warm_start(q)
    n = q.n_var
    iterations = cfg.iterations if cfg.iterations is not None else 50 * n
    tenure = cfg.tenure if cfg.tenure is not None else max(8, n // 10)
    max_stall = cfg.max_stagnation if cfg.max_stagnation is not None else 2 * n
    perturb = max(1, n // 10)
    prep_s = time.perf_counter() - t_prep

    t_solve = time.perf_counter()
    np.random.seed(cfg.seed & 0x7FFFFFFF)
    x = x0.copy()
    d = _deltas(indptr, indices, data, diag, x)
    tabu_until = np.zeros(n, dtype=np.int64)
    best_x = x0.copy()
    e = 0.0
    best_e = 0.0
    stall = 0
    chunk = max(1, iterations // 32)
    it = 1
    while it <= iterations:
        it_end = min(it + chunk, iterations + 1)
        e, best_e, stall = _tabu_chunk(indptr, indices, data, diag, x, d,
                                       tabu_until, best_x, it, it_end, e,
                                       best_e, stall, tenure, max_stall, perturb)
        it = it_end
        if cfg.time_limit_s is not None and it <= iterations:
            if time.perf_counter() - t_solve > cfg.time_limit_s:
                logger.warning("tabu: time limit hit after %d/%d iterations",
                               it - 1, iterations)
                break
    solve_s = time.perf_counter() - t_solve

    assignment = [int(b) for b in best_x]
    return SolveResult("tabu", cfg.seed, assignment, energy(q, assignment),
                       is_valid(q, assignment), prep_s, solve_s)


def _enum_energies(qu: np.ndarray, bits: np.ndarray) -> np.ndarray:
    return np.einsum("bi,ij,bj->b", bits, qu, bits, optimize=True)


def solve_exhaustive(q: QuboInstance, cfg: SolverConfig | None = None,
                     feasible_only: bool = False) -> SolveResult:
    """Optimal assignment by enumeration.

    Full mode scans all 2^n_var bitstrings (n_var capped at 24);
    feasible-only mode scans every one-hot-over-real-routes assignment (state
    count capped at 1e6). Ties go to the lexicographically smallest bit
    vector in both modes.
    """
    cfg = _resolved(cfg)
    t_prep = time.perf_counter()
    qu = _dense_upper(q)
    n = q.n_var
    prep_s = time.perf_counter() - t_prep

    t_solve = time.perf_counter()
    best_e = inf
    best_bits: np.ndarray | None = None

    if not feasible_only:
        if n > EXHAUSTIVE_MAX_VARS:
            raise InstanceTooLargeError(
                f"full enumeration of {n} variables exceeds the cap of "
                f"{EXHAUSTIVE_MAX_VARS}")
        shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
        total = 1 << n
        for start in range(0, total, _ENUM_CHUNK):
            s = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.int64)
            bits = ((s[:, None] >> shifts[None, :]) & 1).astype(np.float64)
            e = _enum_energies(qu, bits)
            i = int(np.argmin(e))
            if e[i] < best_e:
                best_e = float(e[i])
                best_bits = bits[i]
    else:
        n_vehicles = len(q.vehicles)
        radices = [q.n_real(pos) for pos in range(n_vehicles)]
        if any(r < 1 for r in radices):
            raise ValueError("feasible enumeration needs >= 1 real route per vehicle")
        total = 1
        for r in radices:
            total *= r
            if total > FEASIBLE_MAX_STATES:
                raise InstanceTooLargeError(
                    f"feasible enumeration exceeds {FEASIBLE_MAX_STATES} states")
        # digit d for a vehicle with r real routes means alternative r-1-d,
        # which makes ascending mixed-radix order the lexicographic order of
        # the resulting bit vectors (vehicle 0 owns the most significant block)
        radix_arr = np.array(radices, dtype=np.int64)
        strides = np.ones(n_vehicles, dtype=np.int64)
        for pos in range(n_vehicles - 2, -1, -1):
            strides[pos] = strides[pos + 1] * radix_arr[pos + 1]
        block = np.arange(n_vehicles, dtype=np.int64) * q.k
        for start in range(0, total, _ENUM_CHUNK):
            stop = min(start + _ENUM_CHUNK, total)
            s = np.arange(start, stop, dtype=np.int64)
            digits = (s[:, None] // strides[None, :]) % radix_arr[None, :]
            cols = block[None, :] + (radix_arr[None, :] - 1 - digits)
            rows = np.arange(stop - start)
            bits = np.zeros((stop - start, n), dtype=np.float64)
            bits[rows[:, None], cols] = 1.0
            e = _enum_energies(qu, bits)
            i = int(np.argmin(e))
            if e[i] < best_e:
                best_e = float(e[i])
                best_bits = bits[i]

    solve_s = time.perf_counter() - t_solve
    assignment = [int(b) for b in best_bits]
    name = "exhaustive-feasible" if feasible_only else "exhaustive"
    return SolveResult(name, cfg.seed, assignment, energy(q, assignment),
                       is_valid(q, assignment), prep_s, solve_s)


SOLVER_NAMES = ("exhaustive", "exhaustive-feasible", "sa", "tabu")


def solve(q: QuboInstance, solver: str, cfg: SolverConfig | None = None) -> SolveResult:
    """Dispatch by solver name; see SOLVER_NAMES."""
    if solver == "exhaustive":
        return solve_exhaustive(q, cfg)
    if solver == "exhaustive-feasible":
        return solve_exhaustive(q, cfg, feasible_only=True)
    if solver == "sa":
        return solve_sa(q, cfg)
    if solver == "tabu":
        return solve_tabu(q, cfg)
    raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVER_NAMES}")
