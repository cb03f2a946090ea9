"""Fixed-step RK4 flows, composed-flow leaf charts and their numerical checks.

Exact polynomial data is converted to floats here and nowhere else.  Flows of
a batch of points are integrated together, each row for its own time, with
steps of size ``h`` and a shortened final step.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.linalg import subspace_angles

from . import linalg
from .distributions import CLOSED, Distribution
from .fields import PAVectorField, evaluate_field
from .numeric import CompiledField, CompiledSystem
from .poly import to_rational

OVERFLOW_GUARD = 1e12
RANK_RTOL = 1e-8


class BlowUpError(ArithmeticError):
    """Integration left the overflow guard."""


@dataclass
class FlowSpec:
    field: PAVectorField
    h: float = 1e-3
    method: str = "RK4"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if self.method != "RK4":
            raise ValueError("only RK4 is supported")
        self.compiled = CompiledField(self.field.components)


def _step_plan(times: np.ndarray, h: float):
    times = np.asarray(times, dtype=float)
    mag = np.abs(times)
    full = np.floor(mag / h + 1e-9).astype(np.int64)
    rem = mag - full * h
    rem[rem <= 1e-9 * h] = 0.0
    return np.sign(times), full, rem


def _guard(z: np.ndarray):
    if not np.all(np.isfinite(z)) or np.max(np.abs(z), initial=0.0) > OVERFLOW_GUARD:
        raise BlowUpError("integration exceeded the overflow guard")


def integrate(rhs: Callable[[np.ndarray], np.ndarray], z0: np.ndarray, times, h: float) -> np.ndarray:
    """Integrate ``z' = rhs(z)`` for each row of ``z0`` over its own time.

    ``rhs`` maps an ``(N, d)`` array to ``(N, d)``.  Negative times run backwards.
    """
    z = np.array(z0, dtype=float, copy=True)
    if z.ndim == 1:
        z = z[None, :]
    times = np.broadcast_to(np.asarray(times, dtype=float), (z.shape[0],)).copy()
    sign, full, rem = _step_plan(times, h)
    nsteps = int(max(full.max(initial=0) + (rem > 0).any(), 0))
    for k in range(nsteps):
        dt = np.where(k < full, sign * h, np.where((k == full) & (rem > 0), sign * rem, 0.0))
        active = dt != 0
        if not active.any():
            break
        za = z[active]
        d = dt[active][:, None]
        k1 = rhs(za)
        k2 = rhs(za + 0.5 * d * k1)
        k3 = rhs(za + 0.5 * d * k2)
        k4 = rhs(za + d * k3)
        za = za + d / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        _guard(za)
        z[active] = za
    return z


def flow(spec: FlowSpec, z0, t: float) -> np.ndarray:
    """Time-``t`` flow of ``spec.field`` from ``z0`` (RK4, fixed step)."""
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (spec.field.split.nvars,):
        raise ValueError(f"point must have length {spec.field.split.nvars}")
    if not (np.all(np.isfinite(z0)) and np.isfinite(t)):
        raise ValueError("non-finite input")
    return integrate(spec.compiled, z0, [t], spec.h)[0]


def compose_flows(fields: Sequence[PAVectorField], z0, params: np.ndarray, h: float) -> np.ndarray:
    """Points ``phi_1^{t_1} o ... o phi_r^{t_r}(z0)`` for each row ``t`` of ``params``."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if params.shape[1] != len(fields):
        raise ValueError("one parameter per field")
    z = np.repeat(np.asarray(z0, dtype=float)[None, :], params.shape[0], axis=0)
    for k in reversed(range(len(fields))):
        z = integrate(CompiledField(fields[k].components), z, params[:, k], h)
    return z


def _span_basis(rows: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the row span of ``rows``."""
    if rows.size == 0:
        return np.zeros((rows.shape[-1], 0))
    _, s, vt = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((rows.shape[-1], 0))
    r = int(np.sum(s >= rtol * s[0]))
    return vt[:r].T


def numerical_rank(matrix: np.ndarray, rtol: float = RANK_RTOL) -> tuple[int, float]:
    """Rank with threshold ``rtol * sigma_max`` and the gap ratio kept/discarded."""
    s = np.linalg.svd(np.atleast_2d(matrix), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0, float("inf")
    r = int(np.sum(s >= rtol * s[0]))
    if r == s.size or s[r] == 0:
        return r, float("inf")
    return r, float(s[r - 1] / s[r])


def _max_angle(tangent_basis: np.ndarray, span_basis: np.ndarray) -> float:
    if tangent_basis.shape[1] != span_basis.shape[1] or tangent_basis.shape[1] == 0:
        return float(np.pi / 2)
    return float(np.max(subspace_angles(tangent_basis, span_basis)))


class _GeneratorEvaluator:
    def __init__(self, D: Distribution):
        self.k = len(D.generators)
        self.dim = D.split.nvars
        self.system = CompiledSystem([c for g in D.generators for c in g.components], self.dim)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.system(z).reshape(z.shape[:-1] + (self.k, self.dim))


# ----------------------------------------------------------------- leaves


@dataclass
class LeafChart:
    center: np.ndarray
    fields: list
    field_indices: list[int]
    params: list[np.ndarray]
    resolution: int
    h: float
    points: np.ndarray  # shape (resolution,)*r + (dim,)
    rank_constant: bool = True

    @property
    def r(self) -> int:
        return len(self.fields)

    def parameter_grid(self) -> np.ndarray:
        mesh = np.meshgrid(*self.params, indexing="ij")
        return np.stack(mesh, axis=-1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        dim = self.points.shape[-1]
        writer.writerow([f"t{i + 1}" for i in range(self.r)] + [f"z{i + 1}" for i in range(dim)])
        grid = self.parameter_grid().reshape(-1, self.r)
        for t, z in zip(grid, self.points.reshape(-1, dim)):
            writer.writerow([repr(float(v)) for v in t] + [repr(float(v)) for v in z])
        return buf.getvalue()


def _normalize_box(box, r):
    box = list(box)
    if len(box) == 2 and not isinstance(box[0], (list, tuple)):
        box = [tuple(box)] * r
    if len(box) != r:
        raise ValueError(f"box needs {r} parameter ranges")
    return [(float(lo), float(hi)) for lo, hi in box]


def build_leaf(D: Distribution, z0, box=(-1.0, 1.0), resolution: int = 21, h: float = 1e-3,
               fields: Sequence[int] | None = None) -> LeafChart:
    """Chart of the leaf through ``z0`` by composing generator flows.

    The flows are the generators picked, in order, by exact pivoted elimination
    of the evaluated generators at ``z0``.  ``fields`` overrides that choice
    (used for negative controls).
    """
    if D.closure_state != CLOSED:
        raise ValueError("leaf construction needs a closed distribution")
    return _chart(D, z0, box, resolution, h, fields)


def _chart(D, z0, box, resolution, h, fields=None) -> LeafChart:
    z0 = np.asarray(z0, dtype=float)
    exact = [to_rational(float(v)) for v in z0]
    rows = [evaluate_field(g, exact) for g in D.generators]
    pivots = linalg.independent_rows(rows)
    r = len(pivots)
    if r == 0:
        raise ValueError("distribution vanishes at the center; no leaf chart")
    if fields is not None:
        fields = list(fields)
        if linalg.rank([rows[i] for i in fields]) != len(fields):
            raise ValueError("selected fields are dependent at the center")
        pivots = fields
        r = len(pivots)
    box = _normalize_box(box, r)
    params = [np.linspace(lo, hi, resolution) for lo, hi in box]
    grid = np.stack(np.meshgrid(*params, indexing="ij"), axis=-1).reshape(-1, r)
    selected = [D.generators[i] for i in pivots]
    points = compose_flows(selected, z0, grid, h)
    evaluator = _GeneratorEvaluator(D)
    ranks = [numerical_rank(m)[0] for m in evaluator(points)]
    return LeafChart(z0, selected, pivots, params, resolution, h,
                     points.reshape((resolution,) * r + (z0.size,)), rank_constant=all(k == r for k in ranks))


def chart_from_fields(D: Distribution, z0, fields: Sequence[int], box=(-1.0, 1.0), resolution: int = 21,
                      h: float = 1e-3) -> LeafChart:
    """Composed-flow chart from chosen generators of any distribution (no closure check)."""
    return _chart(D, z0, box, resolution, h, fields)


@dataclass
class TangencyReport:
    angles: np.ndarray
    max_angle: float
    mean_angle: float
    tolerance: float
    passed: bool
    one_sided: bool = False
    degenerate_points: int = 0

    def to_json(self) -> dict:
        return {"max_angle": self.max_angle, "mean_angle": self.mean_angle, "tolerance": self.tolerance,
                "passed": self.passed, "one_sided_differences": self.one_sided,
                "degenerate_points": self.degenerate_points, "grid_points": int(self.angles.size)}


def verify_tangency(chart: LeafChart, D: Distribution, tolerance: float = 1e-6,
                    fd_step: float | None = 1e-4) -> TangencyReport:
    """Principal angles between the chart's tangent planes and the span of ``D``.

    Tangent vectors are central differences of the composed-flow map with
    offset ``fd_step``.  With ``fd_step=None`` the grid spacing is used instead,
    with one-sided differences on the boundary (flagged in the report).
    """
    r, dim = chart.r, chart.points.shape[-1]
    grid = chart.parameter_grid().reshape(-1, r)
    pts = chart.points.reshape(-1, dim)
    one_sided = False
    if fd_step is None:
        spacing = [p[1] - p[0] for p in chart.params]
        tangents = np.stack(np.gradient(chart.points, *spacing, axis=tuple(range(r)), edge_order=1), axis=-2)
        tangents = tangents.reshape(-1, r, dim)
        one_sided = chart.resolution > 1
    else:
        tangents = np.empty((grid.shape[0], r, dim))
        for k in range(r):
            offset = np.zeros(r)
            offset[k] = fd_step
            plus = compose_flows(chart.fields, chart.center, grid + offset, chart.h)
            minus = compose_flows(chart.fields, chart.center, grid - offset, chart.h)
            tangents[:, k, :] = (plus - minus) / (2 * fd_step)
    evaluator = _GeneratorEvaluator(D)
    spans = evaluator(pts)
    angles = np.empty(grid.shape[0])
    degenerate = 0
    for i in range(grid.shape[0]):
        tb = _span_basis(tangents[i])
        if tb.shape[1] < r:
            degenerate += 1
        angles[i] = _max_angle(tb, _span_basis(spans[i]))
    max_angle = float(angles.max())
    return TangencyReport(angles.reshape((chart.resolution,) * r), max_angle, float(angles.mean()),
                          tolerance, max_angle <= tolerance, one_sided, degenerate)


@dataclass
class InvarianceReport:
    times: np.ndarray
    angles: np.ndarray
    max_angle: float
    trajectory: np.ndarray

    def to_json(self) -> dict:
        return {"times": self.times.tolist(), "angles": self.angles.tolist(), "max_angle": self.max_angle}


def flow_invariance_check(D: Distribution, index: int, z0, t_max: float, steps: int = 20,
                          h: float = 1e-3) -> InvarianceReport:
    """Transport the evaluation span of ``D`` at ``z0`` by the linearized flow of a generator.

    At each sampled time the transported span is compared with the evaluation
    span at the flowed point; for an involutive ``D`` the angles stay near 0.
    """
    if not 0 <= index < len(D.generators):
        raise IndexError("generator index out of range")
    dim = D.split.nvars
    field_ = CompiledField(D.generators[index].components)
    evaluator = _GeneratorEvaluator(D)
    z0 = np.asarray(z0, dtype=float)
    frame = _span_basis(evaluator(z0[None, :])[0])
    s = frame.shape[1]

    def rhs(state):
        z = state[:, :dim]
        f = state[:, dim:].reshape(-1, dim, s)
        dz = field_(z)
        df = field_.jacobian(z) @ f
        return np.concatenate([dz, df.reshape(-1, dim * s)], axis=1)

    state = np.concatenate([z0, frame.reshape(-1)])[None, :]
    times = np.linspace(0.0, t_max, steps + 1)
    angles = np.empty(steps + 1)
    traj = np.empty((steps + 1, dim))
    for j, t in enumerate(times):
        if j:
            state = integrate(rhs, state, [t - times[j - 1]], h)
        z = state[0, :dim]
        f = state[0, dim:].reshape(dim, s)
        traj[j] = z
        angles[j] = _max_angle(_span_basis(f.T), _span_basis(evaluator(z[None, :])[0]))
    return InvarianceReport(times, angles, float(angles.max()), traj)


# ------------------------------------------------------------ rank constancy


@dataclass
class ResolventReport:
    times: np.ndarray
    ranks: list[int]
    gap_ratios: list[float]
    singular_values: list[np.ndarray]
    passed: bool = field(init=False)
    min_gap_ratio: float = field(init=False)

    def __post_init__(self):
        self.passed = len(set(self.ranks)) == 1
        self.min_gap_ratio = float(min(self.gap_ratios))

    def to_json(self) -> dict:
        return {"times": self.times.tolist(), "ranks": self.ranks, "passed": self.passed,
                "min_gap_ratio": self.min_gap_ratio if np.isfinite(self.min_gap_ratio) else "inf"}


def _time_matrix(A):
    """Entries may be numbers or ascending coefficient sequences in ``t``."""
    coeffs = [[np.atleast_1d(np.asarray(e, dtype=float)) for e in row] for row in A]
    k = len(coeffs)
    if any(len(row) != k for row in coeffs):
        raise ValueError("A must be square")

    def at(t):
        return np.array([[npoly.polyval(t, c) for c in row] for row in coeffs])

    return k, at


def resolvent_rank_check(A, X0, t_max: float, h: float = 1e-3, samples: int = 11,
                         rtol: float = RANK_RTOL) -> ResolventReport:
    """Integrate ``X' = A(t) X`` and track the numerical rank of ``X(t)``."""
    k, at = _time_matrix(A)
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    if X0.shape[0] != k:
        raise ValueError(f"X0 needs {k} rows")
    ncols = X0.shape[1]
    times = np.linspace(0.0, t_max, samples)
    # time is carried as an extra state column so the system is autonomous
    state = np.concatenate([[0.0], X0.reshape(-1)])[None, :]

    def rhs(s):
        out = np.empty_like(s)
        for i, row in enumerate(s):
            x = row[1:].reshape(k, ncols)
            out[i, 0] = 1.0
            out[i, 1:] = (at(row[0]) @ x).reshape(-1)
        return out

    ranks, gaps, svals = [], [], []
    for j, t in enumerate(times):
        if j:
            state = integrate(rhs, state, [t - times[j - 1]], h)
        x = state[0, 1:].reshape(k, ncols)
        rank, gap = numerical_rank(x, rtol)
        ranks.append(rank)
        gaps.append(gap)
        svals.append(np.linalg.svd(x, compute_uv=False))
    return ResolventReport(times, ranks, gaps, svals)


__all__ = [
    "BlowUpError", "FlowSpec", "LeafChart", "TangencyReport", "InvarianceReport", "ResolventReport",
    "build_leaf", "chart_from_fields", "compose_flows", "flow", "flow_invariance_check", "integrate",
    "numerical_rank", "resolvent_rank_check", "verify_tangency",
]
