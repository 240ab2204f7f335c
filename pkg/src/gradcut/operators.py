"""Measurement operators: dense Gaussian designs and reweighted 2-D Fourier.

Both designs present the same interface: apply(x) maps a length-p signal to
the measurement vector, adjoint(u) maps back. The Fourier design samples
frequency pairs from a variable-density law concentrated on low
frequencies, reweights rows by 1/sqrt(n*nu), and presents measurements
real-split (all real parts, then all imaginary parts), so its output length
is 2n while the dense design's is n. The real split is a re-layout: energies
match the complex measurements exactly.
"""

import struct
import warnings

import numpy as np

__all__ = [
    "MeasurementOperator",
    "DenseOperator",
    "FourierOperator",
    "SamplingLaw",
    "gaussian_design",
    "fourier_weighted_design",
    "save_design",
    "load_design",
]

_MAGIC = b"GCDESIG1"


class DimensionError(ValueError):
    pass


class MeasurementOperator:
    """Common interface: fields n, p, output_len; methods apply, adjoint."""

    kind = None

    def apply(self, x):
        raise NotImplementedError

    def adjoint(self, u):
        raise NotImplementedError

    def _check_signal(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.p,):
            raise DimensionError(
                "signal shape %s does not match p=%d" % (x.shape, self.p))
        return x

    def _check_measurement(self, u):
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.output_len,):
            raise DimensionError(
                "measurement shape %s does not match output length %d"
                % (u.shape, self.output_len))
        return u


class DenseOperator(MeasurementOperator):
    kind = "dense"

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.size == 0:
            raise DimensionError("design matrix must be 2-D and nonempty")
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.n, self.p = matrix.shape
        self.output_len = self.n

    def apply(self, x):
        return self.matrix @ self._check_signal(x)

    def adjoint(self, u):
        return self.matrix.T @ self._check_measurement(u)

    def row_subset(self, rows):
        """Sub-design keeping the given measurement rows (CV folds)."""
        return DenseOperator(self.matrix[np.asarray(rows, dtype=np.int64)])

    def __repr__(self):
        return "DenseOperator(n=%d, p=%d)" % (self.n, self.p)


def gaussian_design(n, p, seed):
    """Dense design with i.i.d. Normal(0, 1/n) entries; E[A^T A] = I."""
    if n < 1 or p < 1:
        raise DimensionError("n and p must be positive")
    rng = np.random.default_rng(seed)
    return DenseOperator(rng.standard_normal((n, p)) / np.sqrt(n))


class SamplingLaw:
    """Variable-density law on a n1 x n2 frequency lattice.

    Per-axis masses nu1(i) proportional to 1/(c0 + min(i-1, n1-i+1)) for
    i = 1..n1 (so mass piles up at the lowest frequencies, which wrap at
    both ends of the axis), normalized to sum 1; the 2-D law is the product.
    """

    def __init__(self, n1, n2, c0=10.0):
        if n1 < 1 or n2 < 1:
            raise DimensionError("lattice dims must be positive")
        if not (c0 >= 1):
            raise ValueError("c0 must be at least 1")
        self.n1, self.n2 = int(n1), int(n2)
        self.c0 = float(c0)
        self.nu1 = self._axis_masses(self.n1)
        self.nu2 = self._axis_masses(self.n2)

    def _axis_masses(self, n_axis):
        i = np.arange(1, n_axis + 1, dtype=np.float64)
        w = 1.0 / (self.c0 + np.minimum(i - 1, n_axis - i + 1))
        return w / w.sum()

    def nu(self, i, j):
        """Mass of the 1-based frequency pair (i, j)."""
        return self.nu1[np.asarray(i) - 1] * self.nu2[np.asarray(j) - 1]

    def sample_pairs(self, n, rng):
        """n i.i.d. 1-based pairs via inverse-CDF on each axis."""
        cdf1 = np.cumsum(self.nu1)
        cdf1 /= cdf1[-1]
        cdf2 = np.cumsum(self.nu2)
        cdf2 /= cdf2[-1]
        i = np.searchsorted(cdf1, rng.random(n), side="right") + 1
        j = np.searchsorted(cdf2, rng.random(n), side="right") + 1
        return np.stack([i, j], axis=1).astype(np.int64)


class FourierOperator(MeasurementOperator):
    """Reweighted sampled rows of the unitary 2-D transform, real-split.

    Row (i, j) of the transform (1-based, DC at (1,1)) has entries
    exp(+2*pi*1j*((i-1)(i'-1)/n1 + (j-1)(j'-1)/n2))/sqrt(n1*n2) against an
    image stored row-major. The operator computes all rows at once with an
    inverse FFT (which carries the e^{+} sign), selects the sampled pairs,
    scales each by 1/sqrt(n*nu(i,j)), and stacks real over imaginary parts.
    """

    kind = "fourier"

    def __init__(self, law, pairs, seed=None):
        self.law = law
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if len(pairs) < 1:
            raise DimensionError("need at least one sampled pair")
        if (pairs[:, 0].min() < 1 or pairs[:, 0].max() > law.n1
                or pairs[:, 1].min() < 1 or pairs[:, 1].max() > law.n2):
            raise DimensionError("sampled pair out of lattice range")
        self.pairs = pairs
        self.pairs.setflags(write=False)
        self.seed = seed
        self.n = len(pairs)
        self.p = law.n1 * law.n2
        self.output_len = 2 * self.n
        self.weights = 1.0 / np.sqrt(self.n * law.nu(pairs[:, 0], pairs[:, 1]))
        self.warnings = []
        for dim in (law.n1, law.n2):
            if dim & (dim - 1):
                msg = "lattice dim %d is not a power of 2" % dim
                self.warnings.append(msg)
                warnings.warn(msg)
        self._scale = np.sqrt(self.p)

    def _complex_forward(self, x):
        X = x.reshape(self.law.n1, self.law.n2)
        Y = np.fft.ifft2(X) * self._scale
        return Y[self.pairs[:, 0] - 1, self.pairs[:, 1] - 1] * self.weights

    def apply(self, x):
        vals = self._complex_forward(self._check_signal(x))
        return np.concatenate([vals.real, vals.imag])

    def adjoint(self, u):
        u = self._check_measurement(u)
        c = (u[:self.n] + 1j * u[self.n:]) * self.weights
        Z = np.zeros((self.law.n1, self.law.n2), dtype=np.complex128)
        np.add.at(Z, (self.pairs[:, 0] - 1, self.pairs[:, 1] - 1), c)
        return (np.fft.fft2(Z) / self._scale).real.ravel()

    def row_subset(self, rows):
        """Sub-design keeping the given complex measurement rows.

        Row weights keep the original design's n in their normalization so a
        subset is exactly a row-slice of the full real-split matrix.
        """
        rows = np.asarray(rows, dtype=np.int64)
        sub = FourierOperator(self.law, self.pairs[rows], seed=None)
        sub.weights = self.weights[rows]
        return sub

    def __repr__(self):
        return "FourierOperator(n=%d, lattice=%dx%d)" % (
            self.n, self.law.n1, self.law.n2)


def fourier_weighted_design(law, n, seed):
    """Sample n frequency pairs i.i.d. from the law; deterministic per seed."""
    if n < 1:
        raise DimensionError("n must be positive")
    rng = np.random.default_rng(seed)
    pairs = law.sample_pairs(n, rng)
    return FourierOperator(law, pairs, seed=seed)


def save_design(op, path):
    """Serialize a design: dense as raw float64, Fourier as its recipe."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        if op.kind == "dense":
            fh.write(struct.pack("<bqq", 0, op.n, op.p))
            fh.write(op.matrix.astype("<f8").tobytes())
        elif op.kind == "fourier":
            seed = -1 if op.seed is None else int(op.seed)
            fh.write(struct.pack(
                "<bqqdqq", 1, op.law.n1, op.law.n2, op.law.c0, seed, op.n))
            fh.write(op.pairs.astype("<i8").tobytes())
        else:
            raise ValueError("unknown design kind %r" % op.kind)


def load_design(path):
    """Exact reconstruction of a design saved by save_design."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError("not a design file (bad magic)")
        kind = struct.unpack("<b", fh.read(1))[0]
        if kind == 0:
            n, p = struct.unpack("<qq", fh.read(16))
            data = np.frombuffer(fh.read(8 * n * p), dtype="<f8")
            return DenseOperator(data.reshape(n, p).copy())
        if kind == 1:
            n1, n2, c0, seed, n = struct.unpack("<qqdqq", fh.read(40))
            pairs = np.frombuffer(fh.read(16 * n), dtype="<i8").reshape(n, 2)
            law = SamplingLaw(n1, n2, c0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return FourierOperator(law, pairs.copy(),
                                       seed=None if seed == -1 else seed)
        raise ValueError("unknown design kind byte %d" % kind)
