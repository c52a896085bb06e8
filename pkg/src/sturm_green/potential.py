"""Piecewise-analytic functions on the real line with exact integration.

A :class:`PiecewiseFunction` is an ordered tiling of the line by segments
``[lo, hi)``, each carrying one closed-form shape (constant, polynomial,
sinusoid).  Integrals are evaluated per segment from the shape's closed form,
re-centred on the midpoint of each piece so that long-range antiderivative
values never have to be subtracted from each other.

:class:`Potential` adds the admissibility audit ``q >= 1``.
"""

import json
import math
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .errors import AdmissibilityError, ArgumentOrderError, InvalidWindowError

#: absolute slack allowed in the ``q >= 1`` audit for roundoff at exact minima
AUDIT_SLACK = 1e-12
AUDIT_GRID = 10_000


class Constant:
    kind = "constant"

    def __init__(self, value):
        self.value = float(value)

    def params(self):
        return {"value": self.value}

    def __call__(self, x):
        return np.full(np.shape(x), self.value)

    def derivative(self, x):
        return np.zeros(np.shape(x))

    def antiderivative(self, x):
        return self.value * np.asarray(x, dtype=float)

    def integral(self, a, b):
        return self.value * (b - a)

    def centered_moment(self, a, b):
        return np.zeros(np.shape(a))

    def scalar(self):
        c = self.value
        return lambda x: c

    def minimum(self, lo, hi):
        return self.value


class Polynomial:
    """``sum(c[k] * x**k)`` with ascending coefficients."""

    kind = "polynomial"

    def __init__(self, coefficients):
        c = [float(v) for v in coefficients]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            raise AdmissibilityError("polynomial needs at least one coefficient")
        self.coef = np.array(c)
        self._poly = np.polynomial.Polynomial(self.coef)

    def params(self):
        return {"coefficients": self.coef.tolist()}

    @property
    def degree(self):
        return len(self.coef) - 1

    def __call__(self, x):
        return self._poly(np.asarray(x, dtype=float))

    def derivative(self, x):
        return self._poly.deriv()(np.asarray(x, dtype=float))

    def antiderivative(self, x):
        return self._poly.integ()(np.asarray(x, dtype=float))

    def _shifted(self, m):
        # Taylor coefficients of p(m + s) in powers of s, one row per entry of m.
        m = np.asarray(m, dtype=float)
        deg = self.degree
        out = np.zeros(m.shape + (deg + 1,))
        for k in range(deg + 1):
            acc = np.zeros(m.shape)
            for j in range(deg, k - 1, -1):
                acc = acc * m + self.coef[j] * comb(j, k)
            out[..., k] = acc
        return out

    def integral(self, a, b):
        m = 0.5 * (a + b)
        h = 0.5 * (b - a)
        c = self._shifted(m)
        total = np.zeros(np.shape(m))
        for k in range(0, self.degree + 1, 2):
            total = total + 2.0 * c[..., k] * h ** (k + 1) / (k + 1)
        return total

    def centered_moment(self, a, b):
        m = 0.5 * (a + b)
        h = 0.5 * (b - a)
        c = self._shifted(m)
        total = np.zeros(np.shape(m))
        for k in range(1, self.degree + 1, 2):
            total = total + 2.0 * c[..., k] * h ** (k + 2) / (k + 2)
        return total

    def scalar(self):
        coef = self.coef[::-1].tolist()

        def f(x):
            acc = 0.0
            for c in coef:
                acc = acc * x + c
            return acc

        return f

    def minimum(self, lo, hi):
        """Exact minimum over ``[lo, hi]`` from endpoints and critical points."""
        deg = self.degree
        lead = self.coef[-1]
        if math.isinf(hi) and deg > 0 and lead < 0:
            return -math.inf
        if math.isinf(lo) and deg > 0 and lead * (-1) ** deg < 0:
            return -math.inf
        cands = [v for v in (lo, hi) if math.isfinite(v)]
        if deg >= 2:
            for r in self._poly.deriv().roots():
                if abs(r.imag) <= 1e-12 * max(1.0, abs(r.real)) and lo <= r.real <= hi:
                    cands.append(float(r.real))
        if not cands:
            cands = [0.0]
        vals = [float(self._poly(c)) for c in cands]
        # dense audit grid over the finite part that holds every candidate
        g_lo = lo if math.isfinite(lo) else min(cands) - 1.0
        g_hi = hi if math.isfinite(hi) else max(cands) + 1.0
        grid = np.linspace(g_lo, g_hi, AUDIT_GRID)
        return min(min(vals), float(self._poly(grid).min()))


class Sinusoid:
    """``offset + amplitude * sin(frequency * x + phase)``."""

    kind = "sinusoid"

    def __init__(self, offset, amplitude, frequency, phase=0.0):
        self.offset = float(offset)
        self.amplitude = float(amplitude)
        self.frequency = float(frequency)
        self.phase = float(phase)
        if self.frequency == 0.0:
            raise AdmissibilityError("sinusoid frequency must be nonzero")

    def params(self):
        return {
            "offset": self.offset,
            "amplitude": self.amplitude,
            "frequency": self.frequency,
            "phase": self.phase,
        }

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.offset + self.amplitude * np.sin(self.frequency * x + self.phase)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        w = self.frequency
        return self.amplitude * w * np.cos(w * x + self.phase)

    def antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        w = self.frequency
        return self.offset * x - self.amplitude / w * np.cos(w * x + self.phase)

    def integral(self, a, b):
        w = self.frequency
        m = 0.5 * (a + b)
        h = 0.5 * (b - a)
        osc = 2.0 * self.amplitude / w * np.sin(w * m + self.phase) * np.sin(w * h)
        return self.offset * (b - a) + osc

    def centered_moment(self, a, b):
        w = self.frequency
        m = 0.5 * (a + b)
        h = 0.5 * (b - a)
        inner = np.sin(w * h) / w**2 - h * np.cos(w * h) / w
        return 2.0 * self.amplitude * np.cos(w * m + self.phase) * inner

    def scalar(self):
        o, a, w, p = self.offset, self.amplitude, self.frequency, self.phase
        sin = math.sin
        return lambda x: o + a * sin(w * x + p)

    def minimum(self, lo, hi):
        return self.offset - abs(self.amplitude)


SHAPES = {"constant": Constant, "polynomial": Polynomial, "sinusoid": Sinusoid}


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    shape: object


def _parse_bound(v):
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("-inf", "-infinity"):
            return -math.inf
        if s in ("+inf", "inf", "infinity", "+infinity"):
            return math.inf
        raise AdmissibilityError(f"unrecognised segment bound {v!r}")
    return float(v)


def _make_shape(kind, params):
    try:
        cls = SHAPES[kind]
    except KeyError:
        raise AdmissibilityError(f"unknown shape {kind!r}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise AdmissibilityError(f"bad params for {kind}: {exc}") from None


def _scalar_out(value, *args):
    if all(np.ndim(a) == 0 for a in args):
        return float(value)
    return value


class PiecewiseFunction:
    """A function tiling the real line with closed-form segments.

    Parameters
    ----------
    segments : sequence of Segment
        Ordered, gap-free, starting at ``-inf`` and ending at ``+inf``.
    """

    def __init__(self, segments):
        segments = list(segments)
        if not segments:
            raise AdmissibilityError("at least one segment is required")
        if segments[0].lo != -math.inf or segments[-1].hi != math.inf:
            raise AdmissibilityError("segments must cover the whole real line")
        for s in segments:
            if not s.lo < s.hi:
                raise AdmissibilityError(f"empty or reversed segment [{s.lo}, {s.hi})")
        for left, right in zip(segments, segments[1:]):
            if left.hi != right.lo:
                raise AdmissibilityError(
                    f"segments leave a gap or overlap at {left.hi} / {right.lo}"
                )
        self.segments = tuple(segments)
        self._bps = np.array([s.lo for s in segments[1:]], dtype=float)

    @property
    def breakpoints(self):
        """Interior segment boundaries, ascending."""
        return self._bps.copy()

    def segment_index(self, x, side="right"):
        """Index of the segment holding ``x`` (``side='left'`` picks the left limit)."""
        return np.searchsorted(self._bps, x, side=side)

    def _dispatch(self, method, x, side):
        x = np.asarray(x, dtype=float)
        idx = self.segment_index(x, side)
        out = np.empty(x.shape)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if np.any(mask):
                out[mask] = getattr(seg.shape, method)(x[mask])
        return _scalar_out(out, x)

    def eval(self, x):
        """Value at ``x``; right-limit at segment boundaries."""
        return self._dispatch("__call__", x, "right")

    __call__ = eval

    def eval_left(self, x):
        return self._dispatch("__call__", x, "left")

    def derivative(self, x, side="right"):
        return self._dispatch("derivative", x, side)

    def scalar_on(self, k):
        """Fast scalar callable for segment ``k``."""
        return self.segments[k].shape.scalar()

    def _accumulate(self, a, b, piece):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        a, b = np.broadcast_arrays(a, b)
        if np.any(a > b):
            raise ArgumentOrderError("integration bounds must satisfy a <= b")
        total = np.zeros(a.shape)
        for seg in self.segments:
            lo = np.clip(a, seg.lo, seg.hi)
            hi = np.clip(b, seg.lo, seg.hi)
            mask = hi > lo
            if np.any(mask):
                total[mask] += piece(seg.shape, lo[mask], hi[mask])
        return total

    def integrate(self, a, b):
        """Exact integral over ``[a, b]``, summed across segment boundaries."""
        total = self._accumulate(a, b, lambda s, lo, hi: s.integral(lo, hi))
        return _scalar_out(total, a, b)

    def first_moment(self, a, b, c):
        """Exact ``integral_a^b (xi - c) f(xi) dxi``."""
        c_arr = np.broadcast_to(np.asarray(c, dtype=float), np.broadcast(a, b).shape)
        a_arr, b_arr = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        if np.any(a_arr > b_arr):
            raise ArgumentOrderError("integration bounds must satisfy a <= b")
        total = np.zeros(a_arr.shape)
        for seg in self.segments:
            lo = np.clip(a_arr, seg.lo, seg.hi)
            hi = np.clip(b_arr, seg.lo, seg.hi)
            mask = hi > lo
            if np.any(mask):
                lo_m, hi_m = lo[mask], hi[mask]
                mid = 0.5 * (lo_m + hi_m)
                total[mask] += (mid - c_arr[mask]) * seg.shape.integral(
                    lo_m, hi_m
                ) + seg.shape.centered_moment(lo_m, hi_m)
        return _scalar_out(total, a, b, c)

    def window_mass(self, x, a):
        """``integral_{x-a}^{x+a} f``."""
        if np.any(np.asarray(a) <= 0):
            raise InvalidWindowError("window half-width must be positive")
        return self.integrate(np.asarray(x) - a, np.asarray(x) + a)

    def to_spec(self):
        def bound(v):
            if v == -math.inf:
                return "-inf"
            if v == math.inf:
                return "+inf"
            return v

        return {
            "segments": [
                {
                    "from": bound(s.lo),
                    "to": bound(s.hi),
                    "shape": s.shape.kind,
                    "params": s.shape.params(),
                }
                for s in self.segments
            ]
        }

    @classmethod
    def whole_line(cls, shape, **kwargs):
        return cls([Segment(-math.inf, math.inf, shape)], **kwargs)

    @classmethod
    def from_spec(cls, spec, **kwargs):
        segs = _segments_from_spec(spec, allow_indicator=False)
        if "domain_hint" in spec and cls is Potential:
            kwargs.setdefault("domain_hint", spec["domain_hint"])
        return cls(segs, **kwargs)

    @classmethod
    def from_json(cls, path, **kwargs):
        with open(path) as fh:
            spec = json.load(fh)
        return cls.from_spec(spec, **kwargs)

    def __repr__(self):
        parts = ", ".join(
            f"[{s.lo}, {s.hi}): {s.shape.kind}{s.shape.params()}" for s in self.segments
        )
        return f"{type(self).__name__}({parts})"


def _segments_from_spec(spec, allow_indicator):
    if not isinstance(spec, dict) or "segments" not in spec:
        raise AdmissibilityError("spec must be an object with a 'segments' list")
    segs = []
    for raw in spec["segments"]:
        try:
            lo = _parse_bound(raw["from"])
            hi = _parse_bound(raw["to"])
            kind = raw["shape"]
        except KeyError as exc:
            raise AdmissibilityError(f"segment missing field {exc}") from None
        params = dict(raw.get("params", {}))
        if kind == "indicator":
            if not allow_indicator:
                raise AdmissibilityError("indicator shape is only allowed in forcing specs")
            segs.extend(_indicator_pieces(lo, hi, params))
            continue
        segs.append(Segment(lo, hi, _make_shape(kind, params)))
    return segs


def _indicator_pieces(lo, hi, params):
    a = _parse_bound(params.get("lo", lo))
    b = _parse_bound(params.get("hi", hi))
    value = float(params.get("value", 1.0))
    a, b = max(a, lo), min(b, hi)
    if not a < b:
        return [Segment(lo, hi, Constant(0.0))]
    pieces = []
    if lo < a:
        pieces.append(Segment(lo, a, Constant(0.0)))
    pieces.append(Segment(a, b, Constant(value)))
    if b < hi:
        pieces.append(Segment(b, hi, Constant(0.0)))
    return pieces


class Forcing(PiecewiseFunction):
    """Right-hand side ``f``; no sign restriction, gaps are filled with zero.

    Specs accept the potential grammar plus an ``"indicator"`` shape whose
    params are ``lo``, ``hi`` and an optional ``value`` (default 1).
    """

    def __init__(self, segments):
        segs = sorted(segments, key=lambda s: s.lo)
        filled = []
        cursor = -math.inf
        for s in segs:
            if s.lo > cursor:
                filled.append(Segment(cursor, s.lo, Constant(0.0)))
            elif s.lo < cursor:
                raise AdmissibilityError(f"forcing segments overlap at {s.lo}")
            filled.append(s)
            cursor = s.hi
        if cursor < math.inf:
            filled.append(Segment(cursor, math.inf, Constant(0.0)))
        super().__init__(_merge_zero_runs(filled))

    @classmethod
    def from_spec(cls, spec):
        return cls(_segments_from_spec(spec, allow_indicator=True))

    @classmethod
    def indicator(cls, a, b, value=1.0):
        return cls([Segment(a, b, Constant(value))])

    @classmethod
    def constant(cls, value):
        return cls([Segment(-math.inf, math.inf, Constant(value))])

    def sup_norm(self, lo, hi):
        """Sup of ``|f|`` over ``[lo, hi]`` sampled on each overlapping segment."""
        best = 0.0
        for s in self.segments:
            a, b = max(s.lo, lo), min(s.hi, hi)
            if a > b:
                continue
            xs = np.linspace(a, b, 2001) if b > a else np.array([a])
            best = max(best, float(np.abs(s.shape(xs)).max()))
        return best


def _merge_zero_runs(segs):
    out = []
    for s in segs:
        if (
            out
            and isinstance(s.shape, Constant)
            and isinstance(out[-1].shape, Constant)
            and s.shape.value == out[-1].shape.value
        ):
            out[-1] = Segment(out[-1].lo, s.hi, out[-1].shape)
        else:
            out.append(s)
    return out


class Potential(PiecewiseFunction):
    """Admissible potential ``q >= 1``, audited on construction.

    Parameters
    ----------
    segments : sequence of Segment
    domain_hint : float, optional
        Suggested truncation radius.  Defaults to the smallest ``L`` at which
        the unit window mass at both ``+-L`` reaches ``1e3`` (when that happens
        before ``L = 50``), and to 50 otherwise.
    """

    DEFAULT_HINT = 50.0
    HINT_MASS = 1e3

    def __init__(self, segments, domain_hint=None):
        super().__init__(segments)
        for s in self.segments:
            lowest = s.shape.minimum(s.lo, s.hi)
            if not lowest >= 1.0 - AUDIT_SLACK:
                raise AdmissibilityError(
                    f"q drops to {lowest} < 1 on segment [{s.lo}, {s.hi})"
                )
        if domain_hint is not None and not domain_hint > 0:
            raise AdmissibilityError("domain_hint must be positive")
        self._hint = None if domain_hint is None else float(domain_hint)

    @cached_property
    def domain_hint(self):
        if self._hint is not None:
            return self._hint
        Ls = np.arange(0.5, self.DEFAULT_HINT + 0.25, 0.5)
        mass = np.minimum(self.window_mass(Ls, 1.0), self.window_mass(-Ls, 1.0))
        hit = np.nonzero(mass >= self.HINT_MASS)[0]
        if hit.size == 0:
            return self.DEFAULT_HINT
        i = hit[0]
        if i == 0:
            return float(Ls[0])
        lo, hi = float(Ls[i - 1]), float(Ls[i])
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            m = min(self.window_mass(mid, 1.0), self.window_mass(-mid, 1.0))
            lo, hi = (lo, mid) if m >= self.HINT_MASS else (mid, hi)
        return hi

    @classmethod
    def constant(cls, value, **kw):
        return cls.whole_line(Constant(value), **kw)

    @classmethod
    def polynomial(cls, coefficients, **kw):
        return cls.whole_line(Polynomial(coefficients), **kw)

    @classmethod
    def sinusoid(cls, offset, amplitude, frequency=1.0, phase=0.0, **kw):
        return cls.whole_line(Sinusoid(offset, amplitude, frequency, phase), **kw)


def eval(q, x):
    return q.eval(x)


def integrate(q, a, b):
    return q.integrate(a, b)


def window_mass(q, x, a):
    return q.window_mass(x, a)


def load_potential(path):
    return Potential.from_json(path)


def load_forcing(path):
    with open(path) as fh:
        return Forcing.from_spec(json.load(fh))


__all__ = [
    "Constant",
    "Polynomial",
    "Sinusoid",
    "Segment",
    "PiecewiseFunction",
    "Potential",
    "Forcing",
    "eval",
    "integrate",
    "window_mass",
    "load_potential",
    "load_forcing",
]
