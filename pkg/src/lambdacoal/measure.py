"""Characteristic measures on (0, 1).

A characteristic measure ``nu`` is the law of ``1 - eta``; the collision
rates of the coalescent are its mixed moments.  Most computations are
phrased through ``V = -log(eta)``, because every limit regime is a statement
about the tail of ``V`` and because sampling ``V`` keeps both ``eta`` and
``1 - eta`` accurate to full relative precision.  (``Lambda(dx) = x**2 nu(dx)``
is the finite measure of the usual Lambda-coalescent parametrisation; it is
never stored.)

Families
--------
``Beta(theta, b)``
    ``nu(dx) ~ x**(theta-1) (1-x)**(b-1) dx``.
``Uniform``
    ``Beta(1, 1)``.
``LogPareto(alpha)``
    ``1 - exp(-V)`` with ``P(V > t) = t**-alpha`` on ``[1, inf)``,
    ``0 < alpha <= 2``.
``LogLogPareto``
    ``1 - exp(-V)`` with ``P(V > t) = 1 / (1 + log t)`` on ``[1, inf)``.
``Tabulated``
    piecewise-linear inverse CDF of ``V`` on a grid ``u -> v``.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import ConfigError, NumericalError

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8

_ONE_MINUS_EPS = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class AssumptionNote:
    """Verdict on one of the two standing assumptions on ``nu``.

    ``condition`` is ``"i"`` (support is not a geometric sequence accumulating
    at 1) or ``"ii"`` (``int |log x| nu(dx) < inf``).  ``status`` is one of
    ``"satisfied"``, ``"violated"`` or ``"unverified"``.
    """

    condition: str
    status: str
    detail: str
    value: float | None = None


def quad(func, a, b, *, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200, what="integral", **kwargs):
    """``scipy.integrate.quad`` that raises instead of warning on failure."""
    out = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1, **kwargs)
    value, abserr, info = out[:3]
    if len(out) > 3 or not np.isfinite(value):
        raise NumericalError(
            f"quadrature for {what} did not converge",
            value=value,
            abserr=abserr,
            interval=(a, b),
            evaluations=info.get("neval"),
            scipy_message=out[3] if len(out) > 3 else None,
        )
    return value


class CharacteristicMeasure:
    """Base class; subclasses are frozen dataclasses and therefore hashable."""

    #: lower end of the support of ``V``
    v_min = 0.0

    # -- sampling -----------------------------------------------------------
    def draw(self, rng):
        """Return one ``(x, eta)`` pair with ``x = 1 - eta`` distributed as ``nu``.

        Both coordinates carry full relative precision, which matters when
        either is tiny.
        """
        raise NotImplementedError

    def sample_one_minus_eta(self, rng):
        x, _ = self.draw(rng)
        # V beyond ~37 rounds 1 - eta to 1.0; keep the value inside (0, 1).
        return min(x, _ONE_MINUS_EPS)

    def sample(self, rng, size):
        """Vector of ``size`` draws of ``1 - eta`` (loop over :meth:`draw`)."""
        out = np.empty(size)
        for i in range(size):
            out[i] = self.sample_one_minus_eta(rng)
        return out

    # -- distribution functions ---------------------------------------------
    def tail_v(self, t):
        """``P(V > t)``."""
        raise NotImplementedError

    def cdf_v(self, t):
        """``P(V <= t)``, vectorised."""
        t = np.asarray(t, dtype=float)
        return 1.0 - self.tail_v(t)

    def tail_eta(self, x):
        """``P(eta <= x) = nu([1 - x, 1))`` for ``0 < x < 1``."""
        x = np.asarray(x, dtype=float)
        if np.any((x <= 0) | (x >= 1)):
            raise ValueError("tail_eta is defined for 0 < x < 1")
        out = self._tail_v_closed(-np.log(x))
        return float(out) if out.ndim == 0 else out

    def _tail_v_closed(self, t):
        # P(V >= t); all non-tabulated families are continuous
        return self.tail_v(t)

    def cdf_one_minus_eta(self, y):
        """``P(1 - eta <= y)``, vectorised; used for goodness-of-fit checks."""
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            t = -np.log1p(-y)
        return self.cdf_v(t)

    def log_density_v(self, v):
        """Log density of ``V``; ``None`` when no density is available."""
        return None

    def log_density_s(self, s):
        """Log density of ``log V`` at a scalar ``s``."""
        if s >= 709.0:
            return -math.inf
        v = math.exp(s)
        if v == 0.0:
            return -math.inf
        return float(self.log_density_v(v)) + s

    # -- moments ------------------------------------------------------------
    def log_moments(self):
        """``(m1, m2) = (E V, Var V)``, either may be ``inf``."""
        raise NotImplementedError

    def mean_x(self):
        """``p = E(1 - eta) = int x nu(dx)``."""
        raise NotImplementedError

    def validate(self):
        raise NotImplementedError

    def to_spec(self):
        raise NotImplementedError

    def __str__(self):
        return self.to_spec()


@dataclass(frozen=True)
class Beta(CharacteristicMeasure):
    theta: float
    b: float

    def __post_init__(self):
        for name in ("theta", "b"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"Beta parameter {name} must be a positive real, got {value!r}")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "b", float(self.b))

    def draw(self, rng):
        while True:
            g1 = rng.standard_gamma(self.theta)
            g2 = rng.standard_gamma(self.b)
            if g1 > 0.0 and g2 > 0.0:
                s = g1 + g2
                return g1 / s, g2 / s

    def tail_v(self, t):
        t = np.asarray(t, dtype=float)
        # P(V > t) = P(eta < e^-t), eta ~ Beta(b, theta)
        return special.betainc(self.b, self.theta, np.exp(-np.maximum(t, 0.0)))

    def cdf_one_minus_eta(self, y):
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        return special.betainc(self.theta, self.b, y)

    def log_density_v(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore"):
            log_x = np.log(-np.expm1(-v))
        return (self.theta - 1.0) * log_x - self.b * v - special.betaln(self.theta, self.b)

    def log_moments(self):
        th, b = self.theta, self.b
        m1 = special.digamma(th + b) - special.digamma(b)
        m2 = special.polygamma(1, b) - special.polygamma(1, th + b)
        return float(m1), float(m2)

    def mean_x(self):
        return self.theta / (self.theta + self.b)

    def validate(self):
        log_int = float(special.digamma(self.theta + self.b) - special.digamma(self.theta))
        return [
            AssumptionNote("i", "satisfied", "density is positive on all of (0, 1), so the support is an interval"),
            AssumptionNote(
                "ii", "satisfied", "int |log x| nu(dx) = digamma(theta + b) - digamma(theta) is finite", log_int
            ),
        ]

    def to_spec(self):
        return f"beta:{_num(self.theta)},{_num(self.b)}"


@dataclass(frozen=True)
class Uniform(Beta):
    theta: float = field(default=1.0, init=False)
    b: float = field(default=1.0, init=False)

    def __post_init__(self):
        pass

    def draw(self, rng):
        e1 = rng.standard_exponential()
        e2 = rng.standard_exponential()
        s = e1 + e2
        return e1 / s, e2 / s

    def tail_v(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-np.maximum(t, 0.0))

    def log_moments(self):
        return 1.0, 1.0

    def to_spec(self):
        return "uniform"


def _log_x_integral_v(log_density_v):
    """``E[-log(1 - exp(-V))]`` for the log-Pareto families (bounded integrand)."""

    def integrand(v):
        return -math.log(-math.expm1(-v)) * math.exp(log_density_v(v))

    return quad(integrand, 1.0, np.inf, what="int |log x| nu(dx)")


@dataclass(frozen=True)
class LogPareto(CharacteristicMeasure):
    alpha: float

    v_min = 1.0

    def __post_init__(self):
        a = self.alpha
        if not (isinstance(a, (int, float)) and math.isfinite(a) and 0 < a <= 2):
            raise ConfigError(f"LogPareto alpha must lie in (0, 2], got {a!r}")
        object.__setattr__(self, "alpha", float(a))
        object.__setattr__(self, "_inv_alpha", 1.0 / float(a))

    def draw(self, rng):
        u = 1.0 - rng.random()  # (0, 1]
        v = u ** -self._inv_alpha
        return -math.expm1(-v), math.exp(-v)

    def tail_v(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t < 1.0, 1.0, np.maximum(t, 1.0) ** -self.alpha)

    def log_density_v(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(v >= 1.0, math.log(self.alpha) - (self.alpha + 1.0) * np.log(v), -np.inf)

    def log_density_s(self, s):
        return math.log(self.alpha) - self.alpha * s if s >= 0.0 else -math.inf

    def log_moments(self):
        a = self.alpha
        m1 = a / (a - 1.0) if a > 1 else math.inf
        return m1, math.inf

    def mean_x(self):
        # E exp(-V) = alpha * E_{alpha+1}(1), generalised exponential integral
        return 1.0 - self.alpha * float(mpmath.expint(self.alpha + 1.0, 1.0))

    def validate(self):
        value = _log_x_integral_v(lambda v: math.log(self.alpha) - (self.alpha + 1.0) * math.log(v))
        bound = -math.log(-math.expm1(-1.0))
        return [
            AssumptionNote("i", "satisfied", "support is the interval [1 - 1/e, 1)"),
            AssumptionNote(
                "ii",
                "satisfied",
                f"1 - eta >= 1 - 1/e because V >= 1, so |log x| <= {bound:.6g} on the support",
                value,
            ),
        ]

    def to_spec(self):
        return f"logpareto:{_num(self.alpha)}"


@dataclass(frozen=True)
class LogLogPareto(CharacteristicMeasure):
    v_min = 1.0

    def draw(self, rng):
        u = 1.0 - rng.random()
        s = 1.0 / u - 1.0  # log V
        if s > 700.0:
            return 1.0, 0.0
        v = math.exp(s)
        return -math.expm1(-v), math.exp(-v)

    def tail_v(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t < 1.0, 1.0, 1.0 / (1.0 + np.log(np.maximum(t, 1.0))))

    def log_density_v(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lv = np.log(np.maximum(v, 1.0))
            return np.where(v >= 1.0, -lv - 2.0 * np.log1p(lv), -np.inf)

    def log_density_s(self, s):
        return -2.0 * math.log1p(s) if s >= 0.0 else -math.inf

    def log_moments(self):
        return math.inf, math.inf

    def mean_x(self):
        # S = log V has density (1 + s)^-2 on [0, inf)
        # the integrand is below exp(-e^40) beyond s = 40
        e_eta = quad(lambda s: math.exp(-math.exp(s)) / (1.0 + s) ** 2, 0.0, 40.0, what="E eta")
        return 1.0 - e_eta

    def validate(self):
        value = quad(
            lambda s: -math.log(-math.expm1(-math.exp(s))) / (1.0 + s) ** 2,
            0.0,
            40.0,
            what="int |log x| nu(dx)",
        )
        bound = -math.log(-math.expm1(-1.0))
        return [
            AssumptionNote("i", "satisfied", "support is the interval [1 - 1/e, 1)"),
            AssumptionNote(
                "ii",
                "satisfied",
                f"1 - eta >= 1 - 1/e because V >= 1, so |log x| <= {bound:.6g} on the support",
                value,
            ),
        ]

    def to_spec(self):
        return "loglogpareto"


@dataclass(frozen=True)
class Tabulated(CharacteristicMeasure):
    """Law of ``V`` given by its inverse CDF, linear between grid nodes.

    ``u`` must run from 0 to 1 strictly increasing and ``v`` must be finite
    and non-decreasing.  A flat segment ``v[i] == v[i+1]`` is an atom of
    mass ``u[i+1] - u[i]``.
    """

    u: tuple
    v: tuple
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.ndim != 1 or u.shape != v.shape or u.size < 2:
            raise ConfigError("tabulated grid needs at least two (u, v) pairs of equal length")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ConfigError("tabulated grid must be finite")
        if u[0] != 0.0 or u[-1] != 1.0:
            raise ConfigError("tabulated u grid must start at 0 and end at 1")
        if np.any(np.diff(u) <= 0):
            raise ConfigError("tabulated u grid must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise ConfigError("tabulated v grid must be non-decreasing")
        if v[0] < 0 or v[-1] <= 0 or (v[0] == 0 and v[1] == 0):
            raise ConfigError("tabulated v must be >= 0 with no atom at V = 0 (an atom of nu at 0)")
        object.__setattr__(self, "u", tuple(u.tolist()))
        object.__setattr__(self, "v", tuple(v.tolist()))
        object.__setattr__(self, "_u", u)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_ul", u.tolist())
        object.__setattr__(self, "_vl", v.tolist())

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        try:
            with path.open(newline="") as fh:
                reader = csv.DictReader(fh)
                if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["u", "v"]:
                    raise ConfigError(f"{path}: expected CSV header 'u,v'")
                rows = [(float(r["u"]), float(r["v"])) for r in reader]
        except OSError as exc:
            raise ConfigError(f"cannot read tabulated measure: {exc}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{path}: malformed row ({exc})") from exc
        if not rows:
            raise ConfigError(f"{path}: no rows")
        u, v = zip(*rows)
        return cls(u, v, source=str(path))

    # -- sampling -----------------------------------------------------------
    def _quantile(self, q):
        ul, vl = self._ul, self._vl
        i = bisect.bisect_right(ul, q) - 1
        if i >= len(ul) - 1:
            return vl[-1]
        u0, u1 = ul[i], ul[i + 1]
        return vl[i] + (q - u0) / (u1 - u0) * (vl[i + 1] - vl[i])

    def quantile_v(self, q):
        """Vectorised inverse CDF of ``V``."""
        q = np.asarray(q, dtype=float)
        return np.interp(q, self._u, self._v)

    def draw(self, rng):
        while True:
            v = self._quantile(rng.random())
            if v > 0.0:
                return -math.expm1(-v), math.exp(-v)

    # -- distribution functions ---------------------------------------------
    def _cdf(self, t, side):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u, v = self._u, self._v
        idx = np.searchsorted(v, t, side=side)
        out = np.empty_like(t)
        low = idx == 0
        high = idx == v.size
        mid = ~(low | high)
        out[low] = 0.0
        out[high] = 1.0
        i = idx[mid]
        out[mid] = u[i - 1] + (t[mid] - v[i - 1]) / (v[i] - v[i - 1]) * (u[i] - u[i - 1])
        return out

    def cdf_v(self, t):
        scalar = np.ndim(t) == 0
        out = self._cdf(t, "right")
        return float(out[0]) if scalar else out

    def tail_v(self, t):
        scalar = np.ndim(t) == 0
        out = 1.0 - self._cdf(t, "right")
        return float(out[0]) if scalar else out

    def _tail_v_closed(self, t):
        # P(V >= t) keeps the mass of an atom at t
        scalar = np.ndim(t) == 0
        out = 1.0 - self._cdf(t, "left")
        return np.asarray(out[0]) if scalar else out

    # -- exact segment integrals --------------------------------------------
    def _segments(self):
        u, v = self._u, self._v
        return np.diff(u), v[:-1], v[1:]

    def log_moments(self):
        du, a, b = self._segments()
        m1 = float(np.sum(du * (a + b) / 2.0))
        second = float(np.sum(du * (a * a + a * b + b * b) / 3.0))
        return m1, max(second - m1 * m1, 0.0)

    def mean_x(self):
        du, a, b = self._segments()
        dv = b - a
        flat = dv == 0
        mean_eta = np.empty_like(du)
        mean_eta[flat] = np.exp(-a[flat])
        d = dv[~flat]
        # average of exp(-v) over [a, b]
        mean_eta[~flat] = np.exp(-a[~flat]) * -np.expm1(-d) / d
        return float(1.0 - np.sum(du * mean_eta))

    def log_x_integral(self):
        """``int |log x| nu(dx) = E[-log(1 - exp(-V))]`` via the dilogarithm."""
        du, a, b = self._segments()
        dv = b - a
        flat = dv == 0
        terms = np.empty_like(du)
        with np.errstate(divide="ignore"):
            terms[flat] = -np.log(-np.expm1(-a[flat]))
        # int_a^b -log(1 - e^-v) dv = Li2(e^-a) - Li2(e^-b), Li2(w) = spence(1 - w)
        aa, bb = a[~flat], b[~flat]
        li_a = special.spence(-np.expm1(-aa))
        li_b = special.spence(-np.expm1(-bb))
        terms[~flat] = (li_a - li_b) / dv[~flat]
        value = float(np.sum(du * terms))
        if not math.isfinite(value):
            raise NumericalError("int |log x| nu(dx) is not finite for this grid", value=value)
        return value

    def validate(self):
        du, a, b = self._segments()
        flat = b == a
        notes = []
        if not np.all(flat):
            notes.append(AssumptionNote("i", "satisfied", "grid has a non-degenerate segment, so the support contains an interval"))
        else:
            atoms = np.unique(a)
            if atoms.size == 1:
                notes.append(
                    AssumptionNote(
                        "i",
                        "violated",
                        "a single atom 1 - eta = x0 lies on the sequence 1 - delta*gamma**k (delta = 1 - x0, k = 0)",
                    )
                )
            else:
                notes.append(
                    AssumptionNote(
                        "i",
                        "unverified",
                        "purely atomic grid: user must verify the atoms are not contained in a sequence 1 - delta*gamma**k",
                    )
                )
        value = self.log_x_integral()
        notes.append(AssumptionNote("ii", "satisfied", "int |log x| nu(dx) evaluated exactly on the grid", value))
        return notes

    def to_spec(self):
        if self.source is None:
            return "tabulated:<in-memory>"
        return f"tabulated:{self.source}"


def _num(x):
    """Shortest round-tripping text for a parameter, without a trailing ``.0``."""
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def parse_measure(text):
    """Build a measure from ``uniform``, ``beta:<theta>,<b>``, ``logpareto:<alpha>``,
    ``loglogpareto`` or ``tabulated:<path>``."""
    text = text.strip()
    name, _, arg = text.partition(":")
    name = name.lower()
    try:
        if name == "uniform" and not arg:
            return Uniform()
        if name == "loglogpareto" and not arg:
            return LogLogPareto()
        if name == "beta":
            theta, b = (float(s) for s in arg.split(","))
            return Beta(theta, b)
        if name == "logpareto":
            return LogPareto(float(arg))
        if name == "tabulated" and arg:
            return Tabulated.from_csv(arg)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse measure {text!r}: {exc}") from exc
    raise ConfigError(
        f"unknown measure {text!r}; expected uniform, beta:<theta>,<b>, logpareto:<alpha>, "
        "loglogpareto or tabulated:<path>"
    )


def sample_one_minus_eta(measure, rng):
    return measure.sample_one_minus_eta(rng)


def tail_eta(measure, x):
    return measure.tail_eta(x)


def log_moments(measure):
    return measure.log_moments()


def mean_x(measure):
    return measure.mean_x()


def validate(measure):
    return measure.validate()
