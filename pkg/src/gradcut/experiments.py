"""Experiment harness: designs, noise, cross-validated selection, RMSE tables.

A run sweeps (undersampling ratio x sigma x seed) cells over one signal. Per
cell and method it produces the cross-validation-selected error and the
best-achieved error over the whole path. Every random draw is keyed by
(seed, ratio index, sigma index, purpose), so results are independent of
execution order and reproducible row by row.
"""

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .expansion import EdgeCost
from .graphs import gradient_support_size, lattice_graph, line_graph
from .operators import SamplingLaw, fourier_weighted_design, gaussian_design
from .signals import (
    BUILTIN_PHANTOMS,
    load_phantom,
    make_spike_signal,
    make_wave_signal,
)
from .solver import ConfigError, SolverConfig, path_to_csv, solve_path
from .tables import rows_to_csv
from .tv import TvConfig, solve_tv, tv_lambda_grid, tv_path_to_csv

OUTPUT_DIR_ENV = "GRADCUT_OUTPUT_DIR"

_LIST_KEYS = {"ratios", "sigmas", "seeds", "methods", "amplitudes"}
_INT_KEYS = {"p", "segments", "segment_len", "breaks", "folds", "grid_count",
             "max_iters", "inner_iters", "tv_lambdas", "workers", "law_c0"}
_FLOAT_KEYS = {"amplitude", "gamma", "eta", "floor_ratio"}
_STR_KEYS = {"signal", "design", "phantom", "image", "output_dir"}


def parse_kv_text(text):
    """Yield (lineno, key, value) from flat key = value text.

    Blank lines and # comments are skipped; anything else without an equals
    sign is an error that names the line.
    """
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected key = value" % lineno)
        key, _, value = line.partition("=")
        yield lineno, key.strip(), value.strip()


class ExperimentSpec:
    """Validated description of one experiment sweep."""

    def __init__(self, signal="spike", design="gaussian", ratios=(0.3,),
                 sigmas=(1.0,), seeds=(0,), methods=("l0", "tv"), folds=5,
                 output_dir="results", p=200, segments=5, segment_len=10,
                 amplitude=3.0, breaks=9, amplitudes=None, phantom="two-region",
                 image=None, gamma=0.9, eta=1.0, grid_count=120, max_iters=200,
                 floor_ratio=1e-4, tv_lambdas=30, workers=1, law_c0=10):
        self.signal = str(signal)
        self.design = "fourier" if design == "fourier_weighted" else str(design)
        self.ratios = [float(r) for r in ratios]
        self.sigmas = [float(s) for s in sigmas]
        self.seeds = [int(s) for s in seeds]
        self.methods = [str(m) for m in methods]
        self.folds = int(folds)
        self.output_dir = str(output_dir)
        self.p = int(p)
        self.segments = int(segments)
        self.segment_len = int(segment_len)
        self.amplitude = float(amplitude)
        self.breaks = int(breaks)
        self.amplitudes = None if amplitudes is None else [float(a) for a in amplitudes]
        self.phantom = str(phantom)
        self.image = None if image is None else str(image)
        self.gamma = float(gamma)
        self.eta = float(eta)
        self.grid_count = int(grid_count)
        self.max_iters = int(max_iters)
        self.floor_ratio = float(floor_ratio)
        self.tv_lambdas = int(tv_lambdas)
        self.workers = int(workers)
        self.law_c0 = int(law_c0)
        self._validate()

    def _validate(self):
        if self.signal not in ("spike", "wave", "phantom", "image"):
            raise ConfigError("unknown signal source: %s" % self.signal)
        if self.design not in ("gaussian", "fourier"):
            raise ConfigError("unknown design: %s" % self.design)
        if not self.ratios or any(not 0 < r <= 1 for r in self.ratios):
            raise ConfigError("ratios must lie in (0, 1]")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if not self.sigmas or any(s < 0 for s in self.sigmas):
            raise ConfigError("sigmas must be >= 0")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        bad = set(self.methods) - {"l0", "tv"}
        if bad or not self.methods:
            raise ConfigError("methods must be a nonempty subset of {l0, tv}")
        if self.design == "fourier" and self.signal in ("spike", "wave"):
            raise ConfigError("the frequency design requires a 2-D signal")
        if self.signal == "phantom" and self.phantom not in BUILTIN_PHANTOMS:
            raise ConfigError("unknown phantom: %s" % self.phantom)
        if self.signal == "image" and not self.image:
            raise ConfigError("signal=image requires an image path")
        if not 0 < self.floor_ratio < 1:
            raise ConfigError("floor_ratio must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_text(cls, text):
        """Parse the flat key = value format (# comments, blank lines ok)."""
        kwargs = {}
        for lineno, key, value in parse_kv_text(text):
            if key in _LIST_KEYS:
                parts = [v.strip() for v in value.split(",") if v.strip()]
                if key in ("seeds",):
                    kwargs[key] = [int(v) for v in parts]
                elif key in ("methods",):
                    kwargs[key] = parts
                else:
                    kwargs[key] = [float(v) for v in parts]
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key in _STR_KEYS:
                kwargs[key] = value
            else:
                raise ConfigError("line %d: unknown key %r" % (lineno, key))
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def echo(self):
        """Plain-dict snapshot for the metadata sidecar."""
        return {k: v for k, v in vars(self).items()}


class ResultRow:
    """One (signal, method, ratio, sigma, seed) outcome."""

    def __init__(self, signal, method, ratio, sigma, seed, selected, rmse,
                 best_rmse, runtime):
        if rmse < 0 or best_rmse < 0:
            raise ValueError("errors must be nonnegative")
        if best_rmse > rmse + 1e-12:
            raise ValueError("best-achieved error cannot exceed the selected one")
        self.signal = signal
        self.method = method
        self.ratio = float(ratio)
        self.sigma = float(sigma)
        self.seed = int(seed)
        self.selected = selected
        self.rmse = float(rmse)
        self.best_rmse = float(best_rmse)
        self.runtime = float(runtime)


def rmse(x_hat, x_star):
    d = np.asarray(x_hat) - np.asarray(x_star)
    return float(np.sqrt(float(d @ d) / len(d)))


def build_signal(spec):
    """Materialize (x_star, topology, dims) from the spec's signal source."""
    if spec.signal == "spike":
        x = make_spike_signal(spec.p, spec.segments, spec.segment_len,
                              spec.amplitude)
        return x, line_graph(spec.p), None
    if spec.signal == "wave":
        x = make_wave_signal(spec.p, spec.breaks, spec.amplitudes)
        return x, line_graph(spec.p), None
    if spec.signal == "phantom":
        img = BUILTIN_PHANTOMS[spec.phantom]()
        n1, n2 = img.shape
        return img.reshape(-1), lattice_graph(n1, n2), (n1, n2)
    x, (n1, n2) = load_phantom(spec.image)
    return x, lattice_graph(n1, n2), (n1, n2)


def _make_design(spec, dims, n, stream):
    if spec.design == "gaussian":
        p = spec.p if dims is None else dims[0] * dims[1]
        return gaussian_design(n, p, seed=stream)
    law = SamplingLaw(dims[0], dims[1], c0=spec.law_c0)
    return fourier_weighted_design(law, n, seed=stream)


def _add_noise(A, clean, sigma, stream):
    rng = np.random.default_rng(stream)
    if sigma == 0.0:
        return clean.copy()
    # sigma is stated in pre-normalization units: both designs fold 1/sqrt(n)
    # into their rows, so the matching per-row noise is sigma/sqrt(n); for
    # the fourier design output_len = 2n covers the real and imaginary rows
    g = rng.standard_normal(A.output_len)
    return clean + (sigma / np.sqrt(A.n)) * g


def _subset(A, y, unit_idx):
    """Restrict (A, y) to the given measurement units (complex rows pair up)."""
    sub = A.row_subset(unit_idx)
    if A.kind == "fourier":
        return sub, np.concatenate([y[unit_idx], y[A.n + unit_idx]])
    return sub, y[unit_idx]


def _fold_assignment(n_units, folds, stream):
    order = np.random.default_rng(stream).permutation(n_units)
    return [np.sort(order[f::folds]) for f in range(folds)]


def _held_out_curve(path_entries, A_test, y_test, length):
    return [float(np.sum((y_test - A_test.apply(e.x)) ** 2))
            for e in path_entries[:length]]


def _run_l0(spec, x_star, topology, A, y, stream):
    cost = EdgeCost()
    base = A.adjoint(y) * spec.eta
    lam_max = float(base @ base)
    if lam_max <= 0:
        raise ConfigError("degenerate data: zero backprojection")
    common = dict(gamma=spec.gamma, lambda_max=lam_max,
                  lambda_min=spec.floor_ratio * lam_max,
                  grid_count=spec.grid_count, max_iters=spec.max_iters)
    full = solve_path(y, A, topology, cost,
                      SolverConfig(eta=spec.eta, **common))
    n_units = A.n
    folds = _fold_assignment(n_units, spec.folds, stream)
    all_units = np.arange(n_units)
    curves = []
    for test_idx in folds:
        train_idx = np.setdiff1d(all_units, test_idx)
        A_tr, y_tr = _subset(A, y, train_idx)
        A_te, y_te = _subset(A, y, test_idx)
        eta_f = spec.eta * n_units / len(train_idx)
        fold_path = solve_path(y_tr, A_tr, topology, cost,
                               SolverConfig(eta=eta_f, **common))
        curves.append((_held_out_curve(fold_path.entries, A_te, y_te,
                                       len(fold_path.entries))))
    k_max = min(len(full.entries), min(len(c) for c in curves))
    mean_err = [float(np.mean([c[k] for c in curves])) for k in range(k_max)]
    k_sel = int(np.argmin(mean_err))
    errors = [rmse(e.x, x_star) for e in full.entries]
    extras = {"x_hat": full.entries[k_sel].x,
              "path_csv": path_to_csv(full)}
    return k_sel, errors[k_sel], min(errors), extras


def _run_tv(spec, x_star, topology, A, y, stream):
    grid = tv_lambda_grid(y, A, topology, count=spec.tv_lambdas)
    config = TvConfig(grid)
    full = solve_tv(y, A, topology, config)
    n_units = A.n
    folds = _fold_assignment(n_units, spec.folds, stream)
    all_units = np.arange(n_units)
    curves = []
    for test_idx in folds:
        train_idx = np.setdiff1d(all_units, test_idx)
        A_tr, y_tr = _subset(A, y, train_idx)
        A_te, y_te = _subset(A, y, test_idx)
        sols = solve_tv(y_tr, A_tr, topology, config)
        curves.append([float(np.sum((y_te - A_te.apply(s.x)) ** 2))
                       for s in sols])
    mean_err = [float(np.mean([c[i] for c in curves]))
                for i in range(len(grid))]
    i_sel = int(np.argmin(mean_err))
    errors = [rmse(s.x, x_star) for s in full]
    extras = {"x_hat": full[i_sel].x,
              "path_csv": tv_path_to_csv(full, y, A, topology)}
    return grid[i_sel], errors[i_sel], min(errors), extras


_METHOD_RUNNERS = {"l0": _run_l0, "tv": _run_tv}


class RecoveryResult:
    """One cell's full output: the path table and the CV-selected estimate."""

    def __init__(self, method, selected, x_hat, path_csv, rmse, best_rmse,
                 support, dims):
        self.method = method
        self.selected = selected
        self.x_hat = x_hat
        self.path_csv = path_csv
        self.rmse = float(rmse)
        self.best_rmse = float(best_rmse)
        self.support = int(support)
        self.dims = dims


def recover_cell(spec, method=None):
    """Run a single (ratio, sigma, seed) cell and keep the whole path.

    The spec must pin exactly one ratio, sigma, and seed. Returns a
    RecoveryResult for one method (default: the spec's first).
    """
    if len(spec.ratios) != 1 or len(spec.sigmas) != 1 or len(spec.seeds) != 1:
        raise ConfigError("recovery needs exactly one ratio, sigma, and seed")
    method = method or spec.methods[0]
    if method not in _METHOD_RUNNERS:
        raise ConfigError("unknown method: %r" % (method,))
    x_star, topology, dims = build_signal(spec)
    seed = spec.seeds[0]
    p = len(x_star)
    n = max(1, round(spec.ratios[0] * p))
    A = _make_design(spec, dims, n, stream=[seed, 0, 0, 0])
    y = _add_noise(A, A.apply(x_star), spec.sigmas[0], stream=[seed, 0, 0, 1])
    selected, cv_rmse, best_rmse, extras = _METHOD_RUNNERS[method](
        spec, x_star, topology, A, y, stream=[seed, 0, 0, 2])
    x_hat = extras["x_hat"]
    return RecoveryResult(method, selected, x_hat, extras["path_csv"],
                          cv_rmse, best_rmse,
                          gradient_support_size(topology, x_hat), dims)


def _run_cell(spec, x_star, topology, dims, ri, si, seed):
    """All methods for one (ratio, sigma, seed) cell."""
    ratio = spec.ratios[ri]
    sigma = spec.sigmas[si]
    p = len(x_star)
    n = max(1, round(ratio * p))
    A = _make_design(spec, dims, n, stream=[seed, ri, si, 0])
    y = _add_noise(A, A.apply(x_star), sigma, stream=[seed, ri, si, 1])
    rows, failures = [], []
    for method in spec.methods:
        started = time.perf_counter()
        try:
            selected, cv_rmse, best_rmse, _ = _METHOD_RUNNERS[method](
                spec, x_star, topology, A, y, stream=[seed, ri, si, 2])
            rows.append(ResultRow(spec.signal, method, ratio, sigma, seed,
                                  selected, cv_rmse, best_rmse,
                                  time.perf_counter() - started))
        except Exception as exc:  # noqa: BLE001 - record and keep sweeping
            failures.append({"signal": spec.signal, "method": method,
                             "ratio": ratio, "sigma": sigma, "seed": seed,
                             "error": "%s: %s" % (type(exc).__name__, exc)})
    return rows, failures


def results_to_csv(rows):
    header = ["signal", "method", "ratio", "sigma", "seed", "selected",
              "rmse", "best_rmse"]
    body = [(r.signal, r.method, r.ratio, r.sigma, r.seed, r.selected,
             r.rmse, r.best_rmse) for r in rows]
    return rows_to_csv(header, body)


def resolve_output_dir(spec):
    return os.environ.get(OUTPUT_DIR_ENV, spec.output_dir)


def run_experiment(spec, write_files=True):
    """Execute the sweep; returns (rows, metadata) and writes CSV + JSON.

    Timing lives only in the JSON sidecar so the CSV is byte-reproducible.
    """
    x_star, topology, dims = build_signal(spec)
    cells = [(ri, si, seed)
             for ri in range(len(spec.ratios))
             for si in range(len(spec.sigmas))
             for seed in spec.seeds]
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(
                lambda c: _run_cell(spec, x_star, topology, dims, *c), cells))
    else:
        outcomes = [_run_cell(spec, x_star, topology, dims, *c) for c in cells]
    rows, failures = [], []
    for cell_rows, cell_failures in outcomes:
        rows.extend(cell_rows)
        failures.extend(cell_failures)
    metadata = {
        "spec": spec.echo(),
        "signal_length": len(x_star),
        "dims": dims,
        "failures": failures,
        "runtimes": [
            {"method": r.method, "ratio": r.ratio, "sigma": r.sigma,
             "seed": r.seed, "seconds": r.runtime} for r in rows],
    }
    if write_files:
        out_dir = resolve_output_dir(spec)
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "results.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            fh.write(results_to_csv(rows))
        with open(os.path.join(out_dir, "metadata.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return rows, metadata
