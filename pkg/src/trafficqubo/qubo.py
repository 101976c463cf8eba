"""Binary quadratic program for joint route choice.

One binary variable per (vehicle, alternative). Variable ``i * k + a`` set
means vehicle ``i`` drives alternative ``a``. The objective is the summed
pair congestion plus per-vehicle duration penalties; a one-hot constraint
per vehicle is folded in as a quadratic penalty whose strength ``lam`` comes
from row sums of the interaction tensor, floored at one plus the largest
duration penalty. Vehicles with fewer than ``k`` alternatives get padded
variables that carry +lam on the diagonal, so turning one on can never pay.

Storage is an upper-triangular coefficient map plus a constant offset of
``lam * n``; for any assignment that picks exactly one real alternative per
vehicle the penalty cancels against the offset and the energy equals the
plain congestion cost.
"""

import logging
import re
from dataclasses import dataclass
from math import isfinite
from pathlib import Path
from typing import Sequence

from .congestion import CongestionWeights

logger = logging.getLogger(__name__)

Assignment = Sequence[int]


@dataclass
class QuboInstance:
    n_var: int
    k: int
    vehicles: tuple[int, ...]
    coeffs: dict[tuple[int, int], float]
    lam: float
    offset: float
    not_real: frozenset[int]

    def __post_init__(self) -> None:
        if self.n_var != len(self.vehicles) * self.k:
            raise ValueError("n_var must equal n_vehicles * k")
        for (u, v), c in self.coeffs.items():
            if not (0 <= u <= v < self.n_var):
                raise ValueError(f"coefficient key ({u}, {v}) out of range or not upper-triangular")
            if not isfinite(c):
                raise ValueError(f"coefficient ({u}, {v}) is not finite: {c}")
        if not isfinite(self.lam) or not isfinite(self.offset):
            raise ValueError("lambda and offset must be finite")

    def var_index(self, vehicle_pos: int, alt: int) -> int:
        return vehicle_pos * self.k + alt

    def n_real(self, vehicle_pos: int) -> int:
        base = vehicle_pos * self.k
        return sum(1 for a in range(self.k) if base + a not in self.not_real)


def compute_lambda(cw: CongestionWeights, n: int, k: int) -> float:
    """Penalty strength: the largest per-(vehicle, alternative) row sum of
    the symmetric tensor, floored at 1 + max duration penalty.

    Each stored (i < j, a_i, a_j) weight counts toward both endpoints' rows.
    The floor keeps the one-hot penalty binding even on conflict-free
    instances where all row sums are zero.
    """
    rows: dict[tuple[int, int], float] = {}
    for key in sorted(cw.weights):
        i, j, a_i, a_j = key
        w = cw.weights[key]
        rows[(i, a_i)] = rows.get((i, a_i), 0.0) + w
        rows[(j, a_j)] = rows.get((j, a_j), 0.0) + w
    row_max = max(rows.values(), default=0.0)
    pi_max = max((p for values in cw.pi.values() for p in values), default=0.0)
    return max(row_max, 1.0 + pi_max)


def build_qubo(cw: CongestionWeights, n: int, k: int,
               vehicles: Sequence[int] | None = None) -> QuboInstance:
    """Assemble the upper-triangular coefficient map.

    ``cw`` must be indexed by dense vehicle positions 0..n-1 (callers working
    on a subproblem reindex first and pass the original ids via ``vehicles``).
    Exactly zero weights are dropped so the stored pattern is canonical
    regardless of the weight-map iteration order.
    """
    if n < 1 or k < 1:
        raise ValueError("build_qubo needs n >= 1 and k >= 1")
    if len(cw.pi) != n or sorted(cw.pi) != list(range(n)):
        raise ValueError("weights must cover dense vehicle positions 0..n-1")
    for vid, values in cw.pi.items():
        if not 1 <= len(values) <= k:
            raise ValueError(f"vehicle {vid} has {len(values)} alternatives, expected 1..{k}")
    if vehicles is None:
        vehicles = range(n)
    vehicles = tuple(vehicles)
    if len(vehicles) != n:
        raise ValueError("vehicle id list length must equal n")

    lam = compute_lambda(cw, n, k)
    coeffs: dict[tuple[int, int], float] = {}

    for key in sorted(cw.weights):
        i, j, a_i, a_j = key
        w = cw.weights[key]
        if not (0 <= i < j < n):
            raise ValueError(f"weight key {key} must satisfy 0 <= i < j < n")
        if a_i >= len(cw.pi[i]) or a_j >= len(cw.pi[j]):
            raise ValueError(f"weight key {key} references a missing alternative")
        if w < 0.0:
            raise ValueError(f"negative congestion weight at {key}: {w}")
        if w == 0.0:
            continue
        u, v = i * k + a_i, j * k + a_j
        coeffs[(u, v)] = coeffs.get((u, v), 0.0) + w

    for i in range(n):
        for a in range(k):
            for b in range(a + 1, k):
                key = (i * k + a, i * k + b)
                coeffs[key] = coeffs.get(key, 0.0) + 2.0 * lam

    not_real = set()
    for i in range(n):
        real = len(cw.pi[i])
        for a in range(k):
            u = i * k + a
            if a < real:
                diag = -lam + cw.pi[i][a]
            else:
                diag = lam
                not_real.add(u)
            coeffs[(u, u)] = coeffs.get((u, u), 0.0) + diag

    q = QuboInstance(n * k, k, vehicles, coeffs, lam, lam * n, frozenset(not_real))
    logger.debug("built qubo: n=%d k=%d n_var=%d nnz=%d lambda=%g",
                 n, k, q.n_var, len(coeffs), lam)
    return q


def energy(q: QuboInstance, x: Assignment) -> float:
    """Objective value x^T Q x plus the constant offset."""
    if len(x) != q.n_var:
        raise ValueError(f"assignment length {len(x)} != n_var {q.n_var}")
    total = q.offset
    for (u, v), c in q.coeffs.items():
        if x[u] and x[v]:
            total += c
    return total


def is_valid(q: QuboInstance, x: Assignment) -> bool:
    """True when every vehicle has exactly one bit set, on a real route."""
    if len(x) != q.n_var:
        raise ValueError(f"assignment length {len(x)} != n_var {q.n_var}")
    for pos in range(len(q.vehicles)):
        base = pos * q.k
        ones = [a for a in range(q.k) if x[base + a]]
        if len(ones) != 1 or (base + ones[0]) in q.not_real:
            return False
    return True


def repair(q: QuboInstance, x: Assignment) -> list[int]:
    """Reset every violating vehicle block to that vehicle's fastest real
    alternative (the zero-duration-penalty one, lowest index on ties).

    Valid blocks pass through untouched, so the operation is idempotent.
    """
    y = list(x)
    for pos in range(len(q.vehicles)):
        base = pos * q.k
        ones = [a for a in range(q.k) if y[base + a]]
        if len(ones) == 1 and (base + ones[0]) not in q.not_real:
            continue
        best_alt = None
        best_diag = None
        for a in range(q.k):
            u = base + a
            if u in q.not_real:
                continue
            diag = q.coeffs.get((u, u), 0.0)
            if best_diag is None or diag < best_diag - 1e-15:
                best_alt, best_diag = a, diag
        if best_alt is None:
            raise ValueError(f"vehicle position {pos} has no real alternative to repair to")
        for a in range(q.k):
            y[base + a] = 0
        y[base + best_alt] = 1
    return y


_HEADER_RE = re.compile(
    r"^# n_var=(\d+) k=(\d+) lambda=(\S+) offset=(\S+)$")


def export_qubo(q: QuboInstance, path: str | Path) -> None:
    """Plain-text COO export, one upper-triangular coefficient per line.

    The header carries everything needed to rebuild the instance losslessly:
    variable count, alternatives per vehicle, penalty strength, constant
    offset, the original vehicle ids and the padded variable indices.
    """
    lines = ["# trafficqubo coo v1",
             f"# n_var={q.n_var} k={q.k} lambda={q.lam!r} offset={q.offset!r}",
             f"# vehicles={','.join(str(v) for v in q.vehicles)}",
             f"# not_real={','.join(str(u) for u in sorted(q.not_real))}"]
    for (u, v) in sorted(q.coeffs):
        lines.append(f"{u} {v} {q.coeffs[(u, v)]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_qubo(path: str | Path) -> QuboInstance:
    text = Path(path).read_text().splitlines()
    header = None
    vehicles: tuple[int, ...] | None = None
    not_real: frozenset[int] = frozenset()
    coeffs: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(text, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _HEADER_RE.match(line)
            if m:
                header = (int(m.group(1)), int(m.group(2)),
                          float(m.group(3)), float(m.group(4)))
            elif line.startswith("# vehicles="):
                body = line.split("=", 1)[1]
                vehicles = tuple(int(tok) for tok in body.split(",") if tok)
            elif line.startswith("# not_real="):
                body = line.split("=", 1)[1]
                not_real = frozenset(int(tok) for tok in body.split(",") if tok)
            continue
        tok = line.split()
        if len(tok) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'u v value'")
        u, v = int(tok[0]), int(tok[1])
        coeffs[(u, v)] = float(tok[2])
    if header is None or vehicles is None:
        raise ValueError(f"{path}: missing header line")
    n_var, k, lam, offset = header
    return QuboInstance(n_var, k, vehicles, coeffs, lam, offset, not_real)


def export_milp_lp(q: QuboInstance, path: str | Path) -> None:
    """LP-format linearization of the QUBO.

    Each quadratic term c * x_u * x_v becomes c * y_u_v with the standard
    three constraints forcing y_u_v = x_u * x_v at binary points. The
    constant offset cannot be expressed in LP objectives, so it rides along
    as a comment.
    """
    diag_terms: list[tuple[int, float]] = []
    quad_terms: list[tuple[int, int, float]] = []
    for (u, v) in sorted(q.coeffs):
        c = q.coeffs[(u, v)]
        if u == v:
            diag_terms.append((u, c))
        else:
            quad_terms.append((u, v, c))

    def term(coef: float, name: str, first: bool) -> str:
        sign = "-" if coef < 0 else ("" if first else "+")
        return f"{sign} {abs(coef)!r} {name}".strip()

    parts: list[str] = []
    first = True
    for u, c in diag_terms:
        parts.append(term(c, f"x_{u}", first))
        first = False
    for u, v, c in quad_terms:
        parts.append(term(c, f"y_{u}_{v}", first))
        first = False
    if not parts:
        parts = ["0 x_0"]

    out = [f"\\ QUBO linearization; add constant offset {q.offset!r} to the objective value",
           "Minimize", " obj: " + " ".join(parts)]
    out.append("Subject To")
    for idx, (u, v, _c) in enumerate(quad_terms):
        out.append(f" l{idx}a: y_{u}_{v} - x_{u} <= 0")
        out.append(f" l{idx}b: y_{u}_{v} - x_{v} <= 0")
        out.append(f" l{idx}c: x_{u} + x_{v} - y_{u}_{v} <= 1")
    out.append("Binary")
    names = [f"x_{u}" for u in range(q.n_var)]
    names += [f"y_{u}_{v}" for u, v, _c in quad_terms]
    out.append(" " + " ".join(names))
    out.append("End")
    Path(path).write_text("\n".join(out) + "\n")
