"""Signal generators and image ingestion.

1-D generators build piecewise-constant test signals on a line; 2-D images are
loaded from binary graymaps (P5) or CSV matrices and flattened row-major to
match the lattice vertex order.
"""

import numpy as np


class SignalError(Exception):
    pass


class FormatError(Exception):
    """Malformed input file; `offset` is the byte position of the defect."""

    def __init__(self, message, offset):
        super().__init__("%s (byte offset %d)" % (message, offset))
        self.offset = int(offset)


def signal_support(x):
    """Jump count of a 1-D signal (its gradient support on the line graph)."""
    x = np.asarray(x)
    return int(np.count_nonzero(x[1:] != x[:-1]))


def make_spike_signal(p=1000, n_segments=5, segment_len=10, amplitude=3.0):
    """Baseline-zero signal with evenly spread elevated segments.

    The last segment sits flush against the right boundary, so interior
    segments contribute two jumps each and the last only one: the default
    configuration has gradient support 9. Use signal_support on the result
    for the exact count.
    """
    if n_segments < 0 or segment_len < 1 or p < 1:
        raise SignalError("sizes must be positive")
    if n_segments * segment_len > p:
        raise SignalError("segments do not fit: %d * %d > %d"
                          % (n_segments, segment_len, p))
    x = np.zeros(p)
    if n_segments == 0:
        return x
    # equal gaps before each segment; rounding cannot push the last start
    # past p - segment_len, so the final segment is always flush
    slack = p - n_segments * segment_len
    for i in range(n_segments):
        start = ((i + 1) * slack) // n_segments + i * segment_len
        x[start:start + segment_len] = amplitude
    return x


def make_wave_signal(p=1000, n_breaks=9, amplitudes=None):
    """Piecewise-constant signal with equally spaced changepoints.

    Default plateau values alternate 0 and 3. Consecutive plateaus must
    differ so the gradient support equals n_breaks exactly.
    """
    if not 0 <= n_breaks < p:
        raise SignalError("need 0 <= n_breaks < p")
    if amplitudes is None:
        amplitudes = [0.0 if i % 2 == 0 else 3.0 for i in range(n_breaks + 1)]
    amplitudes = [float(v) for v in amplitudes]
    if len(amplitudes) != n_breaks + 1:
        raise SignalError("need %d plateau values, got %d"
                          % (n_breaks + 1, len(amplitudes)))
    if any(a == b for a, b in zip(amplitudes, amplitudes[1:])):
        raise SignalError("consecutive plateau values must differ")
    x = np.empty(p)
    bounds = [p * i // (n_breaks + 1) for i in range(n_breaks + 2)]
    for i in range(n_breaks + 1):
        x[bounds[i]:bounds[i + 1]] = amplitudes[i]
    return x


def _parse_graymap(data):
    """Binary P5 parser. Returns (image array, maxval)."""
    if data[:2] != b"P5":
        raise FormatError("not a binary graymap (P5 magic missing)", 0)
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token:
            raise FormatError("truncated header", start)
        try:
            fields.append(int(token))
        except ValueError:
            raise FormatError("invalid header token %r" % token, start)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError("bad dimensions %dx%d" % (width, height), 2)
    if not 0 < maxval < 65536:
        raise FormatError("maxval out of range: %d" % maxval, 2)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("missing whitespace before pixel data", pos)
    pos += 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    need = width * height * dtype.itemsize
    raw = data[pos:pos + need]
    if len(raw) < need:
        raise FormatError("pixel data truncated: need %d bytes, have %d"
                          % (need, len(raw)), pos + len(raw))
    img = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return img.astype(np.float64), maxval


def _parse_csv_matrix(data, path):
    text = data.decode("utf-8", errors="strict")
    rows = []
    offset = 0
    width = None
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        if stripped:
            try:
                row = [float(tok) for tok in stripped.split(",")]
            except ValueError:
                raise FormatError("unparsable CSV row in %s" % path, offset)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError("ragged CSV row in %s" % path, offset)
            rows.append(row)
        offset += len(line.encode("utf-8"))
    if not rows:
        raise FormatError("empty CSV matrix in %s" % path, 0)
    return np.array(rows, dtype=np.float64)


def load_phantom(path):
    """Read a P5 graymap or CSV matrix as a max-normalized image in [0,1].

    Returns (signal, (n1, n2)) with the signal flattened row-major.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"P5":
        img, maxval = _parse_graymap(data)
        img = img / maxval
    else:
        img = _parse_csv_matrix(data, path)
        if img.min() < 0:
            raise FormatError("negative pixel value in %s" % path, 0)
        top = img.max()
        if top > 0:
            img = img / top
    n1, n2 = img.shape
    return img.reshape(-1), (n1, n2)


def graymap_bytes(image, maxval=255):
    """Encode a 2-D array with values in [0,1] as binary P5 bytes."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise SignalError("image must be 2-D")
    if image.min() < 0 or image.max() > 1:
        raise SignalError("pixel values must lie in [0,1]")
    if not 0 < maxval < 65536:
        raise SignalError("maxval out of range")
    n1, n2 = image.shape
    quant = np.round(image * maxval)
    body = quant.astype(">u2" if maxval > 255 else np.uint8).tobytes()
    return b"P5\n%d %d\n%d\n" % (n2, n1, maxval) + body


def write_phantom(path, image, maxval=255):
    """Write a 2-D array with values in [0,1] as a binary P5 graymap."""
    with open(path, "wb") as fh:
        fh.write(graymap_bytes(image, maxval))


def two_region_phantom(n1=32, n2=32):
    """Left half 0.2, right half 0.8: the smallest nontrivial test image."""
    img = np.full((n1, n2), 0.2)
    img[:, n2 // 2:] = 0.8
    return img


# classic ellipse-table head phantom: (intensity, a, b, x0, y0, angle_deg)
_HEAD_ELLIPSES = [
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
]


def head_phantom(n1=64, n2=64):
    """Piecewise-constant head phantom from the classic ellipse table.

    Pixels inside the same set of ellipses share a bitwise-identical value, so
    the image is exactly piecewise constant; values are clipped to [0,1].
    """
    ys, xs = np.meshgrid(np.linspace(1, -1, n1), np.linspace(-1, 1, n2),
                         indexing="ij")
    img = np.zeros((n1, n2))
    for inten, a, b, x0, y0, phi in _HEAD_ELLIPSES:
        t = np.deg2rad(phi)
        xr = (xs - x0) * np.cos(t) + (ys - y0) * np.sin(t)
        yr = -(xs - x0) * np.sin(t) + (ys - y0) * np.cos(t)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += inten
    return np.clip(img, 0.0, 1.0)


BUILTIN_PHANTOMS = {
    "two-region": two_region_phantom,
    "head": head_phantom,
}
