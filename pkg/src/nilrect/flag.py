"""Bracket flag, growth vectors, weights and homogeneous dimension."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .errors import DimensionMismatch, NotBracketGenerating
from .linalg import EchelonBasis
from .symvec import Frame, PolyVectorField

__all__ = [
    "GrowthVector", "FlagBasis", "EquiregularityVerdict",
    "bracket_flag", "equiregular_check", "hausdorff_dimension", "weights",
    "word_field", "exact_point",
]


@dataclass(frozen=True)
class GrowthVector:
    dims: tuple
    ambient_dim: int

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims or dims[0] <= 0 or any(a >= b for a, b in zip(dims, dims[1:])):
            raise ValueError(f"growth vector must be strictly increasing and positive: {dims}")
        if dims[-1] != self.ambient_dim:
            raise ValueError(f"growth vector {dims} does not reach dimension {self.ambient_dim}")

    @property
    def step(self):
        return len(self.dims)

    @property
    def strata_dims(self):
        prev = (0,) + self.dims[:-1]
        return tuple(b - a for a, b in zip(prev, self.dims))


@dataclass(frozen=True)
class FlagBasis:
    """Adapted basis of iterated brackets at a point.

    ``words[j]`` is a tuple (a_1, ..., a_k) standing for the left-normed
    bracket [X_a1, [X_a2, ..., X_ak]]; its length is the weight.
    """

    words: tuple
    fields: tuple
    weights: tuple
    point: tuple = field(default=())

    def __len__(self):
        return len(self.words)


@dataclass(frozen=True)
class EquiregularityVerdict:
    equiregular: bool
    growth: GrowthVector | None
    witnesses: tuple = ()  # ((point, growth), (point, growth)) when not equiregular

    def to_json(self):
        out = {"equiregular": self.equiregular}
        if self.growth is not None:
            out["growth"] = list(self.growth.dims)
            out["weights"] = list(weights(self.growth))
            out["Q"] = hausdorff_dimension(self.growth)
        out["witnesses"] = [{"point": [str(x) for x in p], "growth": list(g.dims)}
                            for p, g in self.witnesses]
        return out


def exact_point(p):
    """Coerce a point to Fractions; floats are refused (rank is discontinuous)."""
    out = []
    for x in p:
        if isinstance(x, float):
            raise TypeError("flag computations need exact rational points, got a float")
        out.append(Fraction(x))
    return tuple(out)


def word_field(frame, word, cache=None):
    """Vector field of the left-normed bracket word over ``frame``."""
    if cache is not None and word in cache:
        return cache[word]
    if len(word) == 1:
        f = frame.fields[word[0]]
    else:
        f = frame.fields[word[0]].bracket(word_field(frame, word[1:], cache))
    if cache is not None:
        cache[word] = f
    return f


def bracket_flag(frame: Frame, p, max_depth: int = 6):
    """Greedy adapted basis of the flag at p.

    Returns (GrowthVector, FlagBasis).  Words of each length are scanned in
    lexicographic order and kept when their value at p is independent of
    everything kept so far.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    p = exact_point(p)
    n = frame.ambient_dim
    if len(p) != n:
        raise DimensionMismatch(f"point has {len(p)} coordinates, frame lives in R^{n}")
    d = frame.rank
    basis = EchelonBasis(n)
    cache = {}
    words, fields, wts, dims = [], [], [], []
    for depth in range(1, max_depth + 1):
        grew = False
        for word in product(range(d), repeat=depth):
            if depth >= 2 and word[-1] == word[-2]:
                continue
            vf = word_field(frame, word, cache)
            if vf.is_zero():
                continue
            if basis.add(vf.evaluate(p)):
                words.append(word)
                fields.append(vf)
                wts.append(depth)
                grew = True
                if len(basis) == n:
                    break
        if grew or dims:
            if not grew:
                dims.append(dims[-1])
            else:
                dims.append(len(basis))
        if len(basis) == n:
            break
    if len(basis) < n:
        raise NotBracketGenerating(max_depth, tuple(dims))
    # a layer may add nothing (e.g. Martinet at x=0); the growth vector then
    # repeats a dimension, which is kept as reported data
    growth = _growth(tuple(dims), n)
    return growth, FlagBasis(tuple(words), tuple(fields), tuple(wts), p)


class _LooseGrowth(GrowthVector):
    """Growth vector that may stall at a singular point (n_i == n_{i+1})."""

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims or dims[0] <= 0 or any(a > b for a, b in zip(dims, dims[1:])):
            raise ValueError(f"growth vector must be non-decreasing: {dims}")
        if dims[-1] != self.ambient_dim:
            raise ValueError(f"growth vector {dims} does not reach {self.ambient_dim}")


def _growth(dims, n):
    if any(a == b for a, b in zip(dims, dims[1:])):
        return _LooseGrowth(dims, n)
    return GrowthVector(dims, n)


def equiregular_check(frame: Frame, region_samples, max_depth: int = 6):
    """Compare growth vectors over the sample set (a sampling check, not a proof)."""
    samples = list(region_samples)
    if not samples:
        raise ValueError("need at least one sample point")
    first_pt, first = None, None
    for pt in samples:
        g, _ = bracket_flag(frame, pt, max_depth)
        if first is None:
            first_pt, first = exact_point(pt), g
        elif g.dims != first.dims:
            return EquiregularityVerdict(False, None,
                                         ((first_pt, first), (exact_point(pt), g)))
    return EquiregularityVerdict(True, first)


def hausdorff_dimension(g: GrowthVector) -> int:
    """Q = sum_i i * (n_i - n_{i-1}) with n_0 = 0."""
    prev, q = 0, 0
    for i, ni in enumerate(g.dims, start=1):
        q += i * (ni - prev)
        prev = ni
    return q


def weights(g: GrowthVector) -> tuple:
    out = []
    prev = 0
    for i, ni in enumerate(g.dims, start=1):
        out.extend([i] * (ni - prev))
        prev = ni
    return tuple(out)
