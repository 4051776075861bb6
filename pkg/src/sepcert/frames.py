"""Parseval frames stored as dense analysis matrices.

A frame is an ``m x n`` real matrix ``A`` with orthonormal columns, so
``A.T @ A = I`` and ``||A x||_2 = ||x||_2``. Row ``i`` is the ``i``-th
frame vector; row order is the coefficient order everywhere in the
package (supports, reports, serialized coefficients).

Frames are described on the command line and in configs by spec strings::

    identity:n=64
    dct:n=64
    haar:n=64
    random:m=96,n=64,seed=7
    union:dct+identity:n=64
    file:path/to/frame.csv
"""

import math

import numpy as np

from .hilbert import DimensionError, as_signal
from .rng import XorShift64Star

PARSEVAL_TOL = 1e-8


class NotParsevalError(ValueError):
    """Matrix fails the Parseval check."""


class UnsupportedSizeError(ValueError):
    """Frame size not supported by the constructor."""


class FrameSpecError(ValueError):
    """Malformed frame spec string."""


def verify_parseval(frame):
    """Max-entrywise residual of ``A.T @ A - I``.

    Accepts a :class:`ParsevalFrame` or a raw matrix.
    """
    a = frame.analysis if isinstance(frame, ParsevalFrame) else np.asarray(frame, dtype=float)
    gram = a.T @ a
    return float(np.max(np.abs(gram - np.eye(a.shape[1]))))


class ParsevalFrame:
    """Immutable analysis operator of a Parseval frame.

    Parameters
    ----------
    analysis : array_like, shape (m, n)
        Analysis matrix; ``m >= n`` and columns orthonormal to within
        ``tol``.
    label : str
        Short name used in reports.
    tol : float
        Parseval tolerance enforced at construction.
    """

    __slots__ = ("analysis", "label")

    def __init__(self, analysis, label="frame", tol=PARSEVAL_TOL):
        a = np.array(analysis, dtype=float)
        if a.ndim != 2 or a.shape[0] < a.shape[1] or a.shape[1] < 1:
            raise NotParsevalError(f"analysis matrix must be m x n with m >= n >= 1, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NotParsevalError("analysis matrix has non-finite entries")
        residual = verify_parseval(a)
        if residual > tol:
            raise NotParsevalError(f"{label}: Parseval residual {residual:.3e} exceeds {tol:.0e}")
        a.setflags(write=False)
        object.__setattr__(self, "analysis", a)
        object.__setattr__(self, "label", label)

    def __setattr__(self, name, value):
        raise AttributeError("ParsevalFrame is immutable")

    @property
    def m(self):
        return self.analysis.shape[0]

    @property
    def n(self):
        return self.analysis.shape[1]

    def __repr__(self):
        return f"ParsevalFrame({self.label!r}, m={self.m}, n={self.n})"


def analyze(frame, x):
    """Frame coefficients ``A @ x``."""
    x = as_signal(x)
    if x.size != frame.n:
        raise DimensionError(f"{frame.label} expects length {frame.n}, got {x.size}")
    return frame.analysis @ x


def synthesize(frame, c):
    """Adjoint map ``A.T @ c``."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or c.size != frame.m:
        raise DimensionError(f"{frame.label} expects {frame.m} coefficients, got {c.size}")
    return frame.analysis.T @ c


# constructors

def identity_frame(n):
    return ParsevalFrame(np.eye(n), label=f"identity:n={n}")


def dct_matrix(n):
    """Orthonormal DCT-II matrix, rows indexed by frequency."""
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    c = np.full((n, 1), math.sqrt(2.0 / n))
    c[0, 0] = math.sqrt(1.0 / n)
    return c * np.cos(np.pi * (2 * j + 1) * k / (2 * n))


def dct_frame(n):
    return ParsevalFrame(dct_matrix(n), label=f"dct:n={n}")


def haar_matrix(n):
    """Orthonormal Haar basis: scaling row, then details coarse to fine."""
    if n < 1 or n & (n - 1):
        raise UnsupportedSizeError(f"Haar frame needs a power-of-2 size, got {n}")
    rows = [np.full(n, 1.0 / math.sqrt(n))]
    width = n
    while width > 1:
        half = width // 2
        for start in range(0, n, width):
            r = np.zeros(n)
            r[start:start + half] = 1.0
            r[start + half:start + width] = -1.0
            rows.append(r / math.sqrt(width))
        width = half
    return np.array(rows)


def haar_frame(n):
    return ParsevalFrame(haar_matrix(n), label=f"haar:n={n}")


def union_frame(f1, f2):
    """Stack two Parseval frames, each scaled by 1/sqrt(2)."""
    if f1.n != f2.n:
        raise DimensionError(f"cannot unite frames on R^{f1.n} and R^{f2.n}")
    a = np.vstack([f1.analysis, f2.analysis]) / math.sqrt(2.0)
    return ParsevalFrame(a, label=f"union({f1.label},{f2.label})")


def random_tight_frame(m, n, seed):
    """Orthonormalized Gaussian ``m x n`` matrix from the portable generator."""
    if n < 1 or m < n:
        raise UnsupportedSizeError(f"need m >= n >= 1, got m={m}, n={n}")
    g = XorShift64Star(seed).normals((m, n))
    q, r = np.linalg.qr(g)
    # fix the sign ambiguity of QR so the result depends only on g
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return ParsevalFrame(q * signs, label=f"random:m={m},n={n},seed={seed}")


def load_frame_csv(path, tol=PARSEVAL_TOL):
    """Read an ``m x n`` analysis matrix from CSV and check it is Parseval."""
    a = np.loadtxt(path, delimiter=",", ndmin=2)
    return ParsevalFrame(a, label=f"file:{path}", tol=tol)


def save_frame_csv(frame, path):
    np.savetxt(path, frame.analysis, delimiter=",", fmt="%.17g")


# spec strings

_BASIC = {"identity": identity_frame, "dct": dct_frame, "haar": haar_frame}


def _params(text, spec):
    out = {}
    for tok in text.split(","):
        key, sep, value = tok.partition("=")
        if not sep or not key.strip():
            raise FrameSpecError(f"bad token {tok!r} in frame spec {spec!r}")
        try:
            out[key.strip()] = int(value)
        except ValueError:
            raise FrameSpecError(f"bad token {tok!r} in frame spec {spec!r}") from None
    return out


def parse_frame_spec(spec):
    """Build a frame from a spec string such as ``dct:n=64``."""
    kind, sep, rest = spec.strip().partition(":")
    if not sep:
        raise FrameSpecError(f"bad token {spec!r}: expected KIND:PARAMS")
    if kind == "file":
        return load_frame_csv(rest)
    if kind in _BASIC:
        params = _params(rest, spec)
        if set(params) != {"n"}:
            raise FrameSpecError(f"bad token {rest!r} in frame spec {spec!r}: expected n=N")
        return _BASIC[kind](params["n"])
    if kind == "random":
        params = _params(rest, spec)
        if set(params) != {"m", "n", "seed"}:
            raise FrameSpecError(f"bad token {rest!r} in frame spec {spec!r}: expected m=,n=,seed=")
        return random_tight_frame(params["m"], params["n"], params["seed"])
    if kind == "union":
        names, sep, rest = rest.partition(":")
        parts = names.split("+")
        if not sep or len(parts) != 2:
            raise FrameSpecError(f"bad token {names!r} in frame spec {spec!r}: expected A+B:n=N")
        for name in parts:
            if name not in _BASIC:
                raise FrameSpecError(f"bad token {name!r} in frame spec {spec!r}")
        params = _params(rest, spec)
        if set(params) != {"n"}:
            raise FrameSpecError(f"bad token {rest!r} in frame spec {spec!r}: expected n=N")
        f = union_frame(_BASIC[parts[0]](params["n"]), _BASIC[parts[1]](params["n"]))
        return ParsevalFrame(f.analysis, label=spec.strip())
    raise FrameSpecError(f"bad token {kind!r}: unknown frame kind in {spec!r}")


FRAME_SPEC_HELP = (
    "frame spec: identity:n=N | dct:n=N | haar:n=N | random:m=M,n=N,seed=S | "
    "union:A+B:n=N (A, B in identity/dct/haar) | file:PATH.csv"
)
