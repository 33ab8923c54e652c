"""Per-round entropy bounds and the min-tradeoff function built from them.

All bounds are functions of the winning probability ``p`` of Alice and Bob.
Affine bounds come from tangents of ``-log2(1 - p + w3(p))`` where ``w3`` is
an upper bound on the tripartite winning probability; tables of numerical
points are turned into continuous piecewise-linear curves.
"""

import csv
import hashlib
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

LN2 = math.log(2)
#: Slack allowed when checking monotonicity and convexity of ingested tables.
TABLE_SLACK = 1e-9

UPPER = "tripartite_win_upper"
LOWER = "vn_lower"
KINDS = (UPPER, LOWER)


def binary_entropy(p):
    """``h(p) = -p log2 p - (1-p) log2(1-p)`` with ``h(0) = h(1) = 0``.

    >>> round(binary_entropy(0.11), 6)
    0.499916
    """
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError("binary entropy needs p in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -arr * np.log2(arr) - (1 - arr) * np.log2(1 - arr)
    h = np.where((arr == 0) | (arr == 1), 0.0, h)
    return float(h) if np.ndim(h) == 0 else h


@dataclass(frozen=True)
class AffineBound:
    """``g(p) = slope * p + intercept`` on ``[0, 1]``, in bits."""

    slope: float
    intercept: float

    def __call__(self, p):
        if np.ndim(p):
            return self.slope * np.asarray(p, dtype=float) + self.intercept
        return self.slope * float(p) + self.intercept

    @property
    def g0(self):
        """Value on a lost round."""
        return self.intercept

    @property
    def g1(self):
        """Value on a won round."""
        return self.slope + self.intercept

    @classmethod
    def through(cls, p0, value, slope):
        return cls(float(slope), float(value - slope * p0))


def guessing_entropy(p, omega3):
    """``-log2(1 - p + omega3)``: min-entropy bound from a tripartite value."""
    arg = 1 - np.asarray(p, dtype=float) + omega3
    if np.any(arg <= 0):
        raise ValueError("1 - p + omega3 must be positive")
    out = -np.log2(arg)
    return float(out) if np.ndim(out) == 0 else out


def affine_moe_bound(beta, omega3):
    """Tangent at ``beta`` of ``p -> -log2(1 - p + omega3)``.

    >>> g = affine_moe_bound(1.0, 8.00077 / 9)
    >>> round(g(1.0), 5)
    0.16979
    """
    if not 0.0 <= omega3 <= 1.0:
        raise ValueError(f"omega3={omega3} not in [0, 1]")
    denom = 1 - beta + omega3
    if denom <= 0:
        raise ValueError("1 - beta + omega3 must be positive")
    return AffineBound.through(beta, -math.log2(denom), 1 / (LN2 * denom))


class CurveTableError(ValueError):
    """A point table failed validation; ``row`` is the offending 0-based data row."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True, eq=False)
class BoundCurve:
    """Continuous piecewise-linear bound built from a table of points.

    ``knots`` are the curve values at the table abscissae ``xs``; between
    knots the curve is linear. ``kind`` says whether it upper-bounds a
    tripartite winning probability or lower-bounds an entropy.
    """

    xs: np.ndarray
    ys: np.ndarray
    knots: np.ndarray
    kind: str
    construction: str = "shifted"
    provenance: str = ""

    def __post_init__(self):
        for attr in ("xs", "ys", "knots"):
            arr = np.array(getattr(self, attr), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)

    @property
    def domain(self):
        return float(self.xs[0]), float(self.xs[-1])

    @property
    def slopes(self):
        return np.diff(self.knots) / np.diff(self.xs)

    def _check_domain(self, p):
        lo, hi = self.domain
        arr = np.asarray(p, dtype=float)
        if np.any(arr < lo - 1e-12) or np.any(arr > hi + 1e-12):
            raise ValueError(f"point outside curve domain [{lo}, {hi}]")
        return arr

    def __call__(self, p):
        arr = self._check_domain(p)
        out = np.interp(arr, self.xs, self.knots)
        return float(out) if np.ndim(out) == 0 else out

    def segment_index(self, p):
        """Segment containing ``p``; at a breakpoint, the segment to its right."""
        self._check_domain(p)
        return int(min(np.searchsorted(self.xs, p, side="right") - 1, len(self.xs) - 2))

    def derivative(self, p):
        """Slope at ``p`` using the right-hand segment at breakpoints."""
        return float(self.slopes[self.segment_index(max(p, self.xs[0]))])


def _chord_slopes(xs, ys):
    return np.diff(ys) / np.diff(xs)


def _validate_table(points, kind):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise CurveTableError("points must be (x, y) pairs")
    if len(pts) < 2:
        raise CurveTableError("need at least two points")
    if not np.all(np.isfinite(pts)):
        bad = int(np.flatnonzero(~np.isfinite(pts).all(axis=1))[0])
        raise CurveTableError("non-finite value", bad)
    xs, ys = pts[:, 0], pts[:, 1]
    dx = np.diff(xs)
    if np.any(dx <= 0):
        raise CurveTableError("x values must be strictly increasing", int(np.flatnonzero(dx <= 0)[0]) + 1)
    sign = -1 if kind == UPPER else 1
    dy = sign * np.diff(ys)
    if np.any(dy < -TABLE_SLACK):
        what = "nonincreasing" if kind == UPPER else "nondecreasing"
        raise CurveTableError(f"y values must be {what}", int(np.flatnonzero(dy < -TABLE_SLACK)[0]) + 1)
    # Concave (upper) means chord slopes fall; convex (lower) means they rise.
    ds = sign * np.diff(_chord_slopes(xs, ys))
    if np.any(ds < -TABLE_SLACK):
        what = "concave" if kind == UPPER else "convex"
        raise CurveTableError(f"points are not {what}", int(np.flatnonzero(ds < -TABLE_SLACK)[0]) + 2)
    if kind == UPPER and (np.any(ys < -TABLE_SLACK) or np.any(ys > 1 + TABLE_SLACK)):
        raise CurveTableError("probabilities must lie in [0, 1]", int(np.flatnonzero((ys < 0) | (ys > 1))[0]))
    return xs, ys


def _digest(xs, ys):
    return hashlib.sha256(np.stack([xs, ys]).astype("<f8").tobytes()).hexdigest()[:16]


def _shifted_knots(xs, ys, plateau):
    """Knot values: flat on the first interval, then each interval follows the
    chord slope of the interval before it, joined continuously."""
    s = _chord_slopes(xs, ys)
    knots = np.empty_like(xs)
    knots[0] = knots[1] = plateau
    for j in range(1, len(xs) - 1):
        knots[j + 1] = knots[j] + s[j - 1] * (xs[j + 1] - xs[j])
    return knots


def _build(points, kind, plateau, construction, provenance):
    xs, ys = _validate_table(points, kind)
    if construction == "linear":
        knots = ys.copy()
    elif construction == "shifted":
        # The plateau must itself respect the bound at the first point.
        p = max(plateau, ys[0]) if kind == UPPER else min(plateau, ys[0])
        knots = _shifted_knots(xs, ys, p)
    else:
        raise ValueError(f"unknown construction {construction!r}")
    return BoundCurve(xs, ys, knots, kind, construction, provenance or _digest(xs, ys))


def build_tripartite_upper_curve(points, plateau=8 / 9, construction="shifted", provenance=""):
    """Concave, nonincreasing upper bound through or above every point.

    With the default ``"shifted"`` construction the curve is constant at
    ``plateau`` on ``[x0, x1]`` and on each later interval ``[x_j, x_{j+1}]``
    it rises or falls with the chord slope of ``[x_{j-1}, x_j]``. Because the
    table is concave these slopes are never steeper than the local chord, so
    the curve stays above the points. ``"linear"`` interpolates the points.
    """
    return _build(points, UPPER, plateau, construction, provenance)


def build_vn_lower_curve(points, plateau=0.0, construction="shifted", provenance=""):
    """Convex, nondecreasing lower bound through or below every point.

    Mirror image of :func:`build_tripartite_upper_curve`: constant
    ``plateau`` on the first interval, then shifted chord slopes.
    """
    return _build(points, LOWER, plateau, construction, provenance)


def build_curve(points, kind, **kw):
    if kind == UPPER:
        return build_tripartite_upper_curve(points, **kw)
    if kind == LOWER:
        return build_vn_lower_curve(points, **kw)
    raise ValueError(f"unknown curve kind {kind!r}")


def constrained_affine_bound(beta, curve):
    """Tangent at ``beta`` of ``p -> -log2(1 - p + h(p))`` for an upper curve ``h``.

    ``h'(beta)`` is the slope of the segment to the right of ``beta``.
    """
    if curve.kind != UPPER:
        raise ValueError("constrained bound needs a tripartite upper curve")
    lo, hi = curve.domain
    if not lo <= beta <= hi:
        raise ValueError(f"beta={beta} outside curve domain [{lo}, {hi}]")
    hb = curve(beta)
    denom = 1 - beta + hb
    if denom <= 0:
        raise ValueError("1 - beta + h(beta) must be positive")
    slope = (1 - curve.derivative(beta)) / (LN2 * denom)
    return AffineBound.through(beta, -math.log2(denom), slope)


def tangent_of_curve(curve, beta):
    """Line through ``(beta, h(beta))`` with the curve's right-hand slope."""
    lo, hi = curve.domain
    if not lo <= beta <= hi:
        raise ValueError(f"beta={beta} outside curve domain [{lo}, {hi}]")
    return AffineBound.through(beta, curve(beta), curve.derivative(beta))


@dataclass(frozen=True)
class MinTradeoff:
    """Min-tradeoff function on test outcomes {lost, won, not tested}.

    ``f0`` is the value on a lost test round, ``f1`` on a won one and
    ``fbot`` on a generation round. ``min_sigma_bound`` and ``var_bound`` are
    upper/lower bounds, not exact statistics.
    """

    f0: float
    f1: float
    fbot: float
    gamma: float
    g_max: float
    g_min: float

    @property
    def max_f(self):
        return self.g_max

    @property
    def min_f(self):
        # (1 - 1/gamma) g_max + g_min / gamma, arranged to avoid cancellation
        return self.g_max + (self.g_min - self.g_max) / self.gamma

    @property
    def min_sigma_bound(self):
        """Lower bound on the minimum over states compatible with the test."""
        return self.g_min

    @property
    def var_bound(self):
        """Upper bound on the variance of ``f``."""
        return (self.g_max - self.g_min) ** 2 / self.gamma


def min_tradeoff_from_g(g, gamma):
    """Min-tradeoff function induced by an affine bound ``g`` at testing rate ``gamma``."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"testing probability {gamma} not in (0, 1]")
    if g.slope < 0:
        raise ValueError("the affine bound must be nondecreasing in the winning probability")
    g0, g1 = g.g0, g.g1
    f0 = g1 + (g0 - g1) / gamma
    return MinTradeoff(f0=f0, f1=g1, fbot=g1, gamma=gamma, g_max=g1, g_min=g0)


# Tables on disk

HEADER = ("omega_ab", "value")


def parse_bound_table(text, kind=None):
    """Parse CSV text into ``(kind, points)``.

    The text has a ``# kind=...`` comment line and a header ``omega_ab,value``.
    An explicit ``kind`` argument overrides the comment.
    """
    found = None
    data = []
    header_seen = False
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if body.startswith("kind="):
                found = body.split("=", 1)[1].strip()
            continue
        if not header_seen:
            cols = tuple(c.strip() for c in next(csv.reader([s])))
            if cols != HEADER:
                raise CurveTableError(f"header must be {','.join(HEADER)}, got {s!r}")
            header_seen = True
            continue
        data.append(s)
    kind = kind or found
    if kind not in KINDS:
        raise CurveTableError(f"table kind must be one of {KINDS}, got {kind!r}")
    points = []
    for i, row in enumerate(csv.reader(data)):
        try:
            x, y = (float(v) for v in row)
        except ValueError:
            raise CurveTableError(f"cannot parse {row!r}", i) from None
        points.append((x, y))
    return kind, points


def format_bound_table(points, kind):
    buf = io.StringIO()
    buf.write(f"# kind={kind}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for x, y in points:
        w.writerow([repr(float(x)), repr(float(y))])
    return buf.getvalue()


def load_bound_curve(path, kind=None, **kw):
    """Read a bound table from ``path`` and build the matching curve."""
    text = Path(path).read_text()
    kind, points = parse_bound_table(text, kind)
    digest = hashlib.sha256(text.encode()).hexdigest()[:16]
    return build_curve(points, kind, provenance=kw.pop("provenance", digest), **kw)


EXAMPLE_TABLES = {
    UPPER: "example_tripartite_upper.csv",
    LOWER: "example_vn_lower.csv",
}


def example_table_path(kind):
    """Path of a shipped illustrative table (not real solver output)."""
    return resources.files("nlgqkd") / "data" / EXAMPLE_TABLES[kind]


def load_example_curve(kind, **kw):
    return load_bound_curve(example_table_path(kind), **kw)
