"""Monte-Carlo probes of near-isometry on gradient-sparse signals.

Sampling cannot certify the isometry property (it quantifies over all
piecewise-constant signals); these probes produce falsification evidence and
empirical constants only, and the report says which of the two it found.
"""

import numpy as np

from .graphs import GraphError, gradient_support_size
from .tables import rows_to_csv


def _adjacency(topology):
    """CSR-style neighbor lists from the oriented edge set."""
    p = topology.p
    e0 = topology.edges[:, 0]
    e1 = topology.edges[:, 1]
    deg = np.zeros(p, dtype=np.int64)
    np.add.at(deg, e0, 1)
    np.add.at(deg, e1, 1)
    start = np.zeros(p + 1, dtype=np.int64)
    np.cumsum(deg, out=start[1:])
    nbr = np.empty(start[-1], dtype=np.int64)
    fill = start[:-1].copy()
    for u, v in topology.edges:
        nbr[fill[u]] = v
        fill[u] += 1
        nbr[fill[v]] = u
        fill[v] += 1
    return start, nbr


def _grow_piece(labels, region_label, v, target, start, nbr, rng):
    """BFS inside one region from v, stopping after `target` vertices."""
    piece = [v]
    seen = {v}
    head = 0
    while len(piece) < target and head < len(piece):
        u = piece[head]
        head += 1
        nbrs = nbr[start[u]:start[u + 1]]
        for w in nbrs[rng.permutation(len(nbrs))]:
            if w not in seen and labels[w] == region_label:
                seen.add(w)
                piece.append(w)
                if len(piece) >= target:
                    break
    return np.array(piece, dtype=np.int64)


def _boundary_count(labels, edges):
    return int(np.count_nonzero(labels[edges[:, 0]] != labels[edges[:, 1]]))


def sample_gradient_sparse(topology, s, seed=None, rng=None):
    """Random unit-norm signal with gradient support at most s.

    The partition is grown by repeated region splits: half the draws aim for
    balanced halves, half for thin slivers (extreme aspect partitions stress
    isometry hardest). A final top-up pass splits off single vertices whose
    same-region degree equals the remaining budget, so the support usually
    lands on s exactly; it never exceeds s. Block values are i.i.d. Gaussian.
    """
    if not 1 <= s <= topology.n_edges:
        raise GraphError("s must be in [1, %d], got %s" % (topology.n_edges, s))
    if rng is None:
        rng = np.random.default_rng(seed)
    edges = topology.edges
    start, nbr = _adjacency(topology)
    labels = np.zeros(topology.p, dtype=np.int64)
    boundary = 0
    next_label = 1
    sliver = bool(rng.random() < 0.5)
    while boundary < s:
        accepted = False
        for _ in range(20):
            v = int(rng.integers(topology.p))
            region = labels[v]
            size = int(np.count_nonzero(labels == region))
            if size < 2:
                continue
            if sliver:
                target = int(rng.integers(1, max(2, size // 8 + 1)))
            else:
                target = max(1, size // 2)
            piece = _grow_piece(labels, region, v, target, start, nbr, rng)
            if len(piece) >= size:
                continue
            trial = labels.copy()
            trial[piece] = next_label
            b = _boundary_count(trial, edges)
            if b <= s:
                labels = trial
                boundary = b
                next_label += 1
                accepted = True
                break
        if not accepted:
            break
    # top-up: detach single vertices, each paying its same-region degree of
    # new boundary edges, until the budget is met exactly or nothing fits
    while boundary < s:
        gap = s - boundary
        same = labels[edges[:, 0]] == labels[edges[:, 1]]
        cnt = np.zeros(topology.p, dtype=np.int64)
        np.add.at(cnt, edges[same, 0], 1)
        np.add.at(cnt, edges[same, 1], 1)
        exact = np.flatnonzero(cnt == gap)
        if exact.size:
            pick = exact
        else:
            elig = np.flatnonzero((cnt >= 1) & (cnt < gap))
            if elig.size == 0:
                break
            # smallest payment first keeps the residual gap reachable
            pick = elig[cnt[elig] == cnt[elig].min()]
        v = int(rng.choice(pick))
        labels = labels.copy()
        labels[v] = next_label
        next_label += 1
        boundary += int(cnt[v])
    values = rng.standard_normal(next_label)
    x = values[labels]
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        x = np.ones(topology.p)
        norm = float(np.linalg.norm(x))
    return x / norm


class CripRecord:
    """Sampling extremes of ||Ax|| over unit gradient-sparse x at one sparsity."""

    def __init__(self, s, n_samples, min_ratio, max_ratio):
        if min_ratio > max_ratio:
            raise ValueError("min_ratio must not exceed max_ratio")
        self.s = int(s)
        self.n_samples = int(n_samples)
        self.min_ratio = float(min_ratio)
        self.max_ratio = float(max_ratio)

    @property
    def rho_hat(self):
        """Implied squared deviation at kappa=0: rho >= (max |ratio-1|)^2."""
        dev = max(abs(self.min_ratio - 1.0), abs(self.max_ratio - 1.0))
        return dev * dev


class CripReport:
    """Monte-Carlo falsification evidence; never a certificate.

    Any sampled ratio outside [1-kappa-sqrt(rho), 1+kappa+sqrt(rho)] disproves
    that (kappa, rho) pair for this design.
    """

    def __init__(self, records, design_info, seed):
        s_vals = [r.s for r in records]
        if any(b <= a for a, b in zip(s_vals, s_vals[1:])):
            raise ValueError("s values must be strictly increasing")
        self.records = list(records)
        self.design_info = dict(design_info)
        self.seed = seed

    def falsifies(self, kappa, rho):
        """Per-record: True where a sampled ratio escapes the claimed band."""
        lo = 1.0 - kappa - np.sqrt(rho)
        hi = 1.0 + kappa + np.sqrt(rho)
        return [r.min_ratio < lo or r.max_ratio > hi for r in self.records]

    @property
    def total_failure(self):
        """True when some signal is annihilated outright (ratio ~ 0)."""
        return any(r.min_ratio <= 1e-12 for r in self.records)

    def fitted_constants(self, n, m):
        """rho_hat(s) * n / (s * log(1 + m/s)) per record.

        Exposes the leading constant of the sampling-complexity heuristic
        rho(s) = C s log(1 + |E|/s) / n.
        """
        out = []
        for r in self.records:
            out.append(r.rho_hat * n / (r.s * np.log(1.0 + m / r.s)))
        return out

    def to_csv(self):
        header = ["s", "n_samples", "min_ratio", "max_ratio", "rho_hat"]
        rows = [(r.s, r.n_samples, r.min_ratio, r.max_ratio, r.rho_hat)
                for r in self.records]
        return rows_to_csv(header, rows)


def probe_crip(A, topology, s_list, samples_per_s=200, seed=0):
    """Sample ||Ax||/||x|| extremes over gradient-sparse x, per sparsity level.

    Per-sample RNG streams are derived from (seed, s index, sample index), so
    the report is deterministic and independent of evaluation order.
    """
    s_list = [int(s) for s in s_list]
    records = []
    for si, s in enumerate(s_list):
        lo, hi = np.inf, -np.inf
        for i in range(samples_per_s):
            rng = np.random.default_rng([seed, si, i])
            x = sample_gradient_sparse(topology, s, rng=rng)
            ratio = float(np.linalg.norm(A.apply(x)))
            lo = min(lo, ratio)
            hi = max(hi, ratio)
        records.append(CripRecord(s, samples_per_s, lo, hi))
    info = {"kind": type(A).__name__, "n": A.n, "p": A.p}
    return CripReport(records, info, seed)


class NormBoundReport:
    """Violation tally for the degree-weighted l1/l2 norm bound."""

    def __init__(self, s, n_samples, n_violations, bound_factor):
        self.s = int(s)
        self.n_samples = int(n_samples)
        self.n_violations = int(n_violations)
        self.bound_factor = float(bound_factor)

    @property
    def violation_fraction(self):
        return self.n_violations / self.n_samples


def l1_l2_norm_bound_check(A, topology, s, rho_hat, samples=500, kappa=0.0,
                           seed=0):
    """Check ||Au|| <= (1+kappa+sqrt(D*rho))*(||u||_2 + ||u||_1/sqrt(s)) on
    random dense u, with D the max vertex degree and rho the probed estimate."""
    D = int(topology.degrees().max())
    factor = 1.0 + kappa + float(np.sqrt(D * rho_hat))
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(samples):
        u = rng.standard_normal(A.p)
        lhs = float(np.linalg.norm(A.apply(u)))
        rhs = factor * (float(np.linalg.norm(u))
                        + float(np.sum(np.abs(u))) / np.sqrt(s))
        violations += lhs > rhs
    return NormBoundReport(s, samples, violations, factor)
