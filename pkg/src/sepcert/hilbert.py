"""Coordinate-space primitives: signals, partitions and their projections.

Signals are plain 1-D float numpy arrays. A :class:`CoordinatePartition`
splits ``{0, ..., n-1}`` into known and missing coordinates, which makes
the projections onto the known and missing subspaces coordinate masks.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .rng import XorShift64Star


class DimensionError(ValueError):
    """Operands have incompatible lengths."""


class InvalidPartitionError(ValueError):
    """Known index set is out of range or has duplicates."""


def as_signal(values, n=None):
    """Return ``values`` as a finite 1-D float array, optionally of length ``n``."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("a signal must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal entries must be finite")
    if n is not None and x.size != n:
        raise DimensionError(f"signal has length {x.size}, expected {n}")
    return x


@dataclass(frozen=True)
class CoordinatePartition:
    """Known/missing split of the coordinates ``0..n-1``."""

    n: int
    known: tuple
    missing: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "known", tuple(sorted(self.known)))
        known = set(self.known)
        object.__setattr__(self, "missing", tuple(i for i in range(self.n) if i not in known))

    @property
    def known_mask(self):
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.known)] = True
        return mask

    def to_json(self):
        return {"n": self.n, "known": list(self.known)}

    @classmethod
    def from_json(cls, obj):
        return make_partition(obj["n"], obj["known"])


def make_partition(n, known):
    """Build the partition of ``range(n)`` with the given known indices."""
    n = int(n)
    if n < 1:
        raise InvalidPartitionError("dimension must be positive")
    known = [int(i) for i in known]
    if len(set(known)) != len(known):
        raise InvalidPartitionError("duplicate index in known set")
    bad = [i for i in known if not 0 <= i < n]
    if bad:
        raise InvalidPartitionError(f"known indices out of range for n={n}: {bad}")
    return CoordinatePartition(n, tuple(known))


def _check(x, p):
    x = as_signal(x)
    if x.size != p.n:
        raise DimensionError(f"signal has length {x.size}, partition has dimension {p.n}")
    return x


def project_known(x, p):
    """Zero the missing coordinates of ``x``."""
    x = _check(x, p)
    out = np.zeros_like(x)
    idx = list(p.known)
    out[idx] = x[idx]
    return out


def project_missing(x, p):
    """Zero the known coordinates of ``x``."""
    x = _check(x, p)
    out = np.zeros_like(x)
    idx = list(p.missing)
    out[idx] = x[idx]
    return out


def norm(x, p=2):
    """The l1 or l2 norm of ``x``."""
    x = np.asarray(x, dtype=float)
    if p == 1:
        return float(np.sum(np.abs(x)))
    if p == 2:
        return float(np.sqrt(np.dot(x, x)))
    raise ValueError("only p in {1, 2} is supported")


# serialization

def signal_to_json(x):
    return json.dumps([float(v) for v in x])


def signal_to_csv(x):
    return "".join(f"{float(v)!r}\n" for v in x)


def parse_signal(text):
    """Parse a JSON array or single-column CSV, chosen by the first byte."""
    stripped = text.lstrip()
    if not stripped:
        raise ValueError("empty signal file")
    if stripped[0] == "[":
        values = json.loads(stripped)
    else:
        values = []
        for row in csv.reader(io.StringIO(stripped)):
            if not row or not row[0].strip():
                continue
            if len(row) != 1:
                raise ValueError("signal CSV must have a single column")
            values.append(float(row[0]))
    return as_signal(values)


def read_signal(path):
    with open(path) as fh:
        return parse_signal(fh.read())


def write_signal(x, path, fmt="csv"):
    text = signal_to_csv(x) if fmt == "csv" else signal_to_json(x) + "\n"
    with open(path, "w") as fh:
        fh.write(text)


# mask grammar

KNOWN_SPEC_HELP = (
    "known-set spec: all | none | list:I,J,... (known indices) | "
    "block:A,B (coordinates A..B-1 missing) | random:P[,SEED] (each coordinate missing with probability P)"
)


def parse_known_spec(spec, n, rng=None):
    """Partition of ``range(n)`` from a known-set spec string.

    ``block`` names the missing block, ``list`` the known indices. A
    ``random`` spec without a seed draws from ``rng``.
    """
    spec = spec.strip()
    kind, _, rest = spec.partition(":")
    if kind == "all" and not rest:
        return make_partition(n, range(n))
    if kind == "none" and not rest:
        return make_partition(n, [])
    try:
        if kind == "list":
            known = [int(t) for t in rest.split(",") if t.strip()]
            return make_partition(n, known)
        if kind == "block":
            a, b = (int(t) for t in rest.split(","))
            if not 0 <= a <= b <= n:
                raise InvalidPartitionError(f"bad token {rest!r}: block must satisfy 0 <= a <= b <= {n}")
            return make_partition(n, [i for i in range(n) if not a <= i < b])
        if kind == "random":
            parts = rest.split(",")
            prob = float(parts[0])
            if not 0.0 <= prob <= 1.0 or len(parts) > 2:
                raise InvalidPartitionError(f"bad token {rest!r} in known-set spec {spec!r}")
            if len(parts) == 2:
                rng = XorShift64Star(int(parts[1]))
            elif rng is None:
                raise InvalidPartitionError(f"random known-set spec {spec!r} needs a seed")
            return make_partition(n, [i for i in range(n) if rng.uniform() >= prob])
    except ValueError as exc:
        if isinstance(exc, InvalidPartitionError):
            raise
        raise InvalidPartitionError(f"bad token {rest!r} in known-set spec {spec!r}") from None
    raise InvalidPartitionError(f"bad token {kind!r}: unknown known-set spec {spec!r}")
