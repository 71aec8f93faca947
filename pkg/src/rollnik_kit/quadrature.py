"""Shared quadrature machinery.

Three workhorses used throughout the library:

* ``tanh_sinh``          -- double-exponential rule on a finite interval,
                            robust to integrable endpoint singularities;
* ``wynn_epsilon``       -- sequence acceleration for the slowly convergent
                            partial sums produced by oscillatory integrals;
* ``oscillatory_radial_transform`` -- radial inverse Fourier transforms in
                            d = 1, 2, 3 (cosine / Hankel-J0 / sine), splitting
                            the half-line at the zeros of the oscillator and
                            accelerating the resulting alternating sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import AccuracyError


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs for the quadrature engines.

    * ``rtol`` / ``atol``   -- accuracy targets for composite rules
    * ``max_panels``        -- budget of oscillation panels before giving up
    * ``gauss_order``       -- Gauss-Legendre order per panel
    * ``de_levels``         -- tanh-sinh refinement levels
    * ``split_points``      -- extra singularity-splitting abscissae
    * ``osc_rtol``          -- truncation target for accelerated tails:
                               stop once the accelerated increment is below
                               osc_rtol * |accumulated|
    """

    rtol: float = 1e-8
    atol: float = 1e-14
    max_panels: int = 160
    gauss_order: int = 24
    de_levels: int = 10
    split_points: tuple = ()
    osc_rtol: float = 1e-12

    def used_budget(self) -> dict:
        return {
            "rtol": self.rtol,
            "max_panels": self.max_panels,
            "gauss_order": self.gauss_order,
            "de_levels": self.de_levels,
        }


DEFAULT_QUAD = QuadratureSpec()

_LEG_CACHE: dict = {}


def _leggauss(n):
    if n not in _LEG_CACHE:
        _LEG_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _LEG_CACHE[n]


def gauss_panel(f, a, b, order=24):
    """Fixed-order Gauss-Legendre integral of ``f`` over [a, b]."""
    x, w = _leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.sum(w * f(mid + half * x)))


def tanh_sinh(f, a, b, levels=10, rtol=1e-12, atol=1e-300):
    """Tanh-sinh (double-exponential) quadrature on the finite interval (a, b).

    ``f`` must be vectorized.  Handles integrable algebraic or logarithmic
    singularities at either endpoint.  Returns (value, error_estimate).
    """
    if a == b:
        return 0.0, 0.0
    lo, hi = (a, b) if a < b else (b, a)
    sign = 1.0 if a < b else -1.0
    half = 0.5 * (hi - lo)
    tmax = 3.8  # tanh(pi/2*sinh(3.8)) == 1 - ~1e-38: past double precision
    prev = None
    est = 0.0
    err = np.inf
    for level in range(2, levels + 1):
        h = 2.0 ** (1 - level)
        ts = np.arange(-tmax, tmax + 0.5 * h, h)
        u = 0.5 * np.pi * np.sinh(ts)
        w = 0.5 * np.pi * np.cosh(ts) / np.cosh(u) ** 2
        # distance to the nearer endpoint, computed without cancellation:
        # 1 - tanh|u| = 2 e^{-2|u|} / (1 + e^{-2|u|})
        em = np.exp(-2.0 * np.abs(u))
        dist = half * 2.0 * em / (1.0 + em)
        pts = np.where(ts >= 0, hi - dist, lo + dist)
        inside = (pts > lo) & (pts < hi)
        vals = np.zeros(int(inside.sum()))
        raw = np.asarray(f(pts[inside]), dtype=float)
        good = np.isfinite(raw)
        vals[good] = raw[good]
        est = h * float(np.sum(vals * w[inside]))
        if prev is not None:
            err = abs(est - prev)
            if err <= rtol * abs(est) + atol:
                return sign * half * est, half * err
        prev = est
    return sign * half * est, half * (err if np.isfinite(err) else abs(est))


def wynn_epsilon(partial_sums):
    """Wynn's epsilon algorithm; returns the best extrapolated limit."""
    s = [float(x) for x in partial_sums]
    n = len(s)
    if n == 0:
        return 0.0
    if n < 3:
        return s[-1]
    eps = [s, []]
    # eps[k] has length n-k;  eps_{-1} = 0
    prev2 = [0.0] * (n + 1)
    prev1 = s
    best = s[-1]
    for k in range(1, n):
        cur = []
        for j in range(len(prev1) - 1):
            diff = prev1[j + 1] - prev1[j]
            if diff == 0.0:
                cur.append(float("inf"))
                continue
            cur.append(prev2[j + 1] + 1.0 / diff)
        if not cur:
            break
        if k % 2 == 0:
            finite = [c for c in cur if np.isfinite(c)]
            if finite:
                best = cur[-1] if np.isfinite(cur[-1]) else finite[-1]
        prev2, prev1 = prev1, cur
    return best


def _accelerated_tail(panel_values, osc_rtol=1e-12):
    """Sum panel integrals of an (eventually) alternating series with
    epsilon acceleration.  Returns (sum, err_estimate, n_used)."""
    sums = np.cumsum(panel_values)
    if len(sums) < 6:
        return float(sums[-1]), abs(panel_values[-1]), len(panel_values)
    prev = wynn_epsilon(sums[:-1])
    cur = wynn_epsilon(sums)
    err = abs(cur - prev)
    return cur, err, len(panel_values)


def oscillatory_radial_transform(f, x, d, spec: QuadratureSpec = DEFAULT_QUAD,
                                 cutoff_hint=None):
    """Radial inverse Fourier transform of an isotropic symbol function.

    Computes (2*pi)^(-d) * int_{R^d} e^{i x.xi} f(|xi|) dxi for d in {1,2,3}:

        d=1 : (1/pi)      int_0^inf f(s) cos(x s) ds
        d=2 : (1/(2 pi))  int_0^inf f(s) s J0(x s) ds
        d=3 : (1/(2 pi^2 x)) int_0^inf f(s) s sin(x s) ds

    ``f`` must be vectorized and absolutely integrable against the relevant
    weight.  The half-line is split at the oscillator zeros and the partial
    sums are accelerated; truncation happens when the accelerated increment
    drops below ``spec.osc_rtol`` times the accumulated value.
    """
    if d not in (1, 2, 3):
        raise AccuracyError(f"radial transform implemented for d in {{1,2,3}}, got {d}")
    x = float(x)
    if d == 1:
        weight = lambda s: np.ones_like(s)
        pref = 1.0 / math.pi
    elif d == 2:
        weight = lambda s: s * special.j0(x * s)
        pref = 1.0 / (2.0 * math.pi)
    else:
        weight = lambda s: s
        pref = 1.0 / (2.0 * math.pi ** 2 * x) if x > 0 else 0.0

    if x == 0.0:
        if d == 3:
            # int s^2 f(s) ds / (2 pi^2), from sin(xs)/x -> s
            g = lambda s: f(s) * s ** 2
            pref0 = 1.0 / (2.0 * math.pi ** 2)
        elif d == 2:
            g = lambda s: f(s) * s
            pref0 = 1.0 / (2.0 * math.pi)
        else:
            g = f
            pref0 = 1.0 / math.pi
        val, err = _integrate_halfline(g, spec, cutoff_hint)
        return pref0 * val, pref0 * err

    # zeros of the oscillator
    if d == 1:
        zeros = lambda k: (k + 0.5) * math.pi / x
        osc = lambda s: np.cos(x * s)
    elif d == 3:
        zeros = lambda k: (k + 1.0) * math.pi / x
        osc = lambda s: np.sin(x * s)
    else:
        jz = special.jn_zeros(0, spec.max_panels + 2)
        zeros = lambda k: jz[k] / x
        osc = None  # folded into weight

    if d == 2:
        integrand = lambda s: f(s) * weight(s)
    elif d == 1:
        integrand = lambda s: f(s) * osc(s)
    else:
        integrand = lambda s: f(s) * s * osc(s)

    z0 = zeros(0)
    head = gauss_panel(integrand, 0.0, z0, spec.gauss_order)
    # adaptively refine the head if it is wide compared to f's variation
    head = _refined_panel(integrand, 0.0, z0, spec)

    panels = []
    total = head
    prev_accel = None
    for k in range(spec.max_panels):
        a, b = zeros(k), zeros(k + 1)
        panels.append(_refined_panel(integrand, a, b, spec))
        if len(panels) >= 8 and len(panels) % 4 == 0:
            accel, err, _ = _accelerated_tail(panels, spec.osc_rtol)
            val = head + accel
            if prev_accel is not None:
                inc = abs(val - prev_accel)
                if inc <= spec.osc_rtol * max(abs(val), 1e-300) + spec.atol:
                    return pref * val, pref * (err + inc)
            prev_accel = val
        # plain truncation when the panels themselves are negligible
        if abs(panels[-1]) <= spec.osc_rtol * max(abs(total + sum(panels)), spec.atol):
            accel, err, _ = _accelerated_tail(panels, spec.osc_rtol)
            return pref * (head + accel), pref * (err + abs(panels[-1]))
    accel, err, _ = _accelerated_tail(panels, spec.osc_rtol)
    val = head + accel
    if prev_accel is not None and abs(val - prev_accel) > 1e-6 * max(abs(val), 1e-300):
        raise AccuracyError(
            "oscillatory tail did not converge within the panel budget",
            residual=abs(val - prev_accel),
        )
    return pref * val, pref * err


def _refined_panel(f, a, b, spec, max_depth=8):
    """Gauss panel with one Richardson check, bisecting when needed."""
    coarse = gauss_panel(f, a, b, spec.gauss_order)
    mid = 0.5 * (a + b)
    fine = gauss_panel(f, a, mid, spec.gauss_order) + gauss_panel(f, mid, b, spec.gauss_order)
    if abs(fine - coarse) <= spec.rtol * max(abs(fine), spec.atol) or max_depth == 0:
        return fine
    return (_refined_panel(f, a, mid, spec, max_depth - 1)
            + _refined_panel(f, mid, b, spec, max_depth - 1))


def _integrate_halfline(g, spec, cutoff_hint=None):
    """Integrate a decaying non-oscillatory integrand over (0, inf)."""
    from scipy import integrate as _si

    upper = cutoff_hint or 1.0
    # expand until the tail is negligible
    val = 0.0
    total_err = 0.0
    a = 0.0
    while True:
        v, e = _si.quad(g, a, upper, limit=200)
        val += v
        total_err += abs(e)
        tail_probe = abs(g(np.asarray([upper * 1.5, upper * 4.0]))).max() * upper
        if tail_probe <= spec.osc_rtol * max(abs(val), spec.atol) or upper > 1e12:
            break
        a, upper = upper, upper * 8.0
    return val, total_err
