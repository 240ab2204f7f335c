"""Proximal descent with expansion-move denoising along a decaying penalty.

Starting from zero, each iteration forms the gradient-step surrogate
a = x - eta * A^T(Ax - y), denoises it by alpha-expansion with the current
penalty lam_k, and shrinks the penalty geometrically. The iterate sequence
doubles as a regularization path: iterate k is an approximate minimizer of
0.5*||y - Ax||^2 + (lam_k/eta) * sum_e c(x_i, x_j), which is what model
selection tunes over.
"""

import numpy as np

from .expansion import (
    LabelError,
    alpha_expansion,
    build_delta_grid,
    build_label_grid,
    denoise_objective,
)
from .graphs import gradient_support_size, induced_partition
from .tables import rows_to_csv

__all__ = [
    "SolverConfig",
    "PathEntry",
    "RegularizationPath",
    "surrogate",
    "solve_path",
    "objective_value",
    "path_to_csv",
]


class ConfigError(ValueError):
    pass


class NumericBlowupError(RuntimeError):
    def __init__(self, iteration):
        self.iteration = iteration
        super().__init__(
            "non-finite surrogate at iteration %d; check eta against the "
            "design scaling" % iteration)


class SolverConfig:
    """Knobs for the path solver.

    gamma: penalty decay factor in (0, 1).
    lambda_max: initial penalty; None resolves to ||eta * A^T y||^2 at run
        time (logged on the path).
    lambda_min: penalty floor; the loop stops before an iteration whose
        penalty would fall below it. 0 disables the floor.
    eta: gradient step size. 1 fits designs scaled so A^T A is near the
        identity; CV folds rescale by n/n_train.
    grid_count: labels per iteration, grid spanning the surrogate's range.
    delta: fixed label spacing; when set, each iteration uses the multiples
        of delta inside the surrogate's range instead of grid_count values.
        Exact multiples of delta are then representable bitwise.
    stop_fraction: stop once gradient support exceeds this fraction of the
        edge count.
    max_iters: hard cap on produced iterates.
    inner_iters: surrogate/denoise repetitions per penalty value.
    max_sweeps: sweep cap handed to each denoise call.
    compact_iterates: store (partition, block values) instead of dense
        signals; trades reconstruction time for memory on image-scale paths.
    """

    def __init__(self, gamma=0.9, lambda_max=None, lambda_min=0.0, eta=1.0,
                 grid_count=300, delta=None, stop_fraction=0.5,
                 max_iters=200, inner_iters=1, max_sweeps=10,
                 compact_iterates=False):
        if not (0 < gamma < 1):
            raise ConfigError("gamma must be in (0, 1)")
        if lambda_max is not None and not (lambda_max > 0):
            raise ConfigError("lambda_max must be positive")
        if lambda_min < 0:
            raise ConfigError("lambda_min must be nonnegative")
        if lambda_max is not None and not (lambda_max > lambda_min):
            raise ConfigError("lambda_max must exceed lambda_min")
        if not (eta > 0):
            raise ConfigError("eta must be positive")
        if grid_count < 2:
            raise ConfigError("grid_count must be at least 2")
        if delta is not None and not (delta > 0):
            raise ConfigError("delta must be positive")
        if not (0 < stop_fraction <= 1):
            raise ConfigError("stop_fraction must be in (0, 1]")
        if max_iters < 1 or inner_iters < 1:
            raise ConfigError("iteration counts must be positive")
        self.gamma = float(gamma)
        self.lambda_max = None if lambda_max is None else float(lambda_max)
        self.lambda_min = float(lambda_min)
        self.eta = float(eta)
        self.grid_count = int(grid_count)
        self.delta = None if delta is None else float(delta)
        self.stop_fraction = float(stop_fraction)
        self.max_iters = int(max_iters)
        self.inner_iters = int(inner_iters)
        self.max_sweeps = int(max_sweeps)
        self.compact_iterates = bool(compact_iterates)


class PathEntry:
    """One recorded iterate: index, penalty, signal, and its summaries."""

    def __init__(self, k, lambda_k, x, s, residual, objective, compact):
        self.k = int(k)
        self.lambda_k = float(lambda_k)
        self.s = int(s)
        self.residual = float(residual)
        self.objective = float(objective)
        if compact:
            self._labels = None
            self._store_compact(x, compact)
        else:
            self._x = x.copy()
            self._labels = None

    def _store_compact(self, x, part):
        self._x = None
        self._labels = part.labels.copy()
        vals = np.empty(part.n_blocks)
        vals[part.labels] = x
        self._values = vals

    @property
    def x(self):
        if self._x is not None:
            return self._x
        return self._values[self._labels]


class RegularizationPath:
    """All iterates of one solver run plus the stop reason and metadata."""

    def __init__(self, entries, terminated_reason, lambda_max, eta, notes=None):
        self.entries = entries
        self.terminated_reason = terminated_reason
        self.lambda_max = float(lambda_max)
        self.eta = float(eta)
        self.notes = notes or []

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    def signals(self):
        return [e.x for e in self.entries]

    def __repr__(self):
        return "RegularizationPath(%d entries, stop=%s)" % (
            len(self.entries), self.terminated_reason)


def surrogate(x, y, A, eta):
    """Gradient-step surrogate x - eta * A^T(Ax - y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return x - eta * A.adjoint(A.apply(x) - y)


def objective_value(x, y, A, lam, cost, topology):
    """0.5*||y - Ax||^2 + lam * sum over edges of c(x_i, x_j)."""
    y = np.asarray(y, dtype=np.float64)
    r = y - A.apply(x)
    data = 0.5 * float(r @ r)
    if topology.n_edges == 0:
        return data
    x = np.asarray(x, dtype=np.float64)
    ei, ej = topology.edges[:, 0], topology.edges[:, 1]
    return data + lam * float(cost.pairwise(x[ei], x[ej]).sum())


def _iteration_grid(a, config):
    if config.delta is not None:
        return build_delta_grid(a, config.delta)
    return build_label_grid(a, config.grid_count)


def solve_path(y, A, topology, cost, config):
    """Run the full descent path and record every iterate.

    Entry k holds x_k, lambda_k = lambda_max * gamma^k (recomputable
    bitwise), the gradient support s_k, the data residual ||y - A x_k||^2,
    and the objective at the effective penalty lambda_k / eta. Entry 0 is
    the zero initialization. The loop ends when the next penalty would fall
    below lambda_min (lambda_floor), when the support passes
    stop_fraction * |E| (sparsity_stop), or at max_iters.
    """
    y = np.asarray(y, dtype=np.float64)
    if A.p != topology.p:
        raise LabelError(
            "operator column count %d does not match vertex count %d"
            % (A.p, topology.p))
    notes = []
    lambda_max = config.lambda_max
    if lambda_max is None:
        a0 = config.eta * A.adjoint(y)
        lambda_max = float(a0 @ a0)
        if lambda_max <= 0:
            lambda_max = 1.0
        notes.append("lambda_max resolved to %r" % lambda_max)
        if config.lambda_min >= lambda_max:
            raise ConfigError("resolved lambda_max does not exceed lambda_min")

    n_edges = topology.n_edges
    x = np.zeros(topology.p)

    def make_entry(k, xk):
        s = gradient_support_size(topology, xk)
        r = y - A.apply(xk)
        lam_k = lambda_max * config.gamma ** k
        obj = objective_value(xk, y, A, lam_k / config.eta, cost, topology)
        compact = induced_partition(topology, xk) if config.compact_iterates else None
        return PathEntry(k, lam_k, xk, s, float(r @ r), obj, compact)

    entries = [make_entry(0, x)]
    reason = "max_iters"
    for k in range(config.max_iters):
        lam_k = lambda_max * config.gamma ** k
        if config.lambda_min > 0 and lam_k < config.lambda_min:
            reason = "lambda_floor"
            break
        for _ in range(config.inner_iters):
            a = surrogate(x, y, A, config.eta)
            if not np.all(np.isfinite(a)):
                raise NumericBlowupError(k + 1)
            grid = _iteration_grid(a, config)
            res = alpha_expansion(a, lam_k, grid, cost, topology,
                                  max_sweeps=config.max_sweeps)
            x = res.x
            if not res.converged:
                notes.append("denoise at iteration %d hit the sweep cap" % (k + 1))
        entry = make_entry(k + 1, x)
        entries.append(entry)
        if n_edges and entry.s > config.stop_fraction * n_edges:
            reason = "sparsity_stop"
            break
    return RegularizationPath(entries, reason, lambda_max, config.eta, notes)


def path_to_csv(path):
    """CSV of the per-iterate summaries: k, lambda_k, s_k, residual, objective."""
    header = ["k", "lambda_k", "s_k", "residual", "objective"]
    rows = [(e.k, e.lambda_k, e.s, e.residual, e.objective) for e in path.entries]
    return rows_to_csv(header, rows)
