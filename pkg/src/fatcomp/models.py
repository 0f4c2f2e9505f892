"""Scalar comparison models for fat sub-Riemannian structures.

Two one-dimensional model functions govern the comparison machinery:

* ``eval_s_kc``: the single-frequency model ``sqrt(kc)*cot(sqrt(kc)*t)``,
  continued through ``kc <= 0`` (it becomes ``1/t`` and ``coth``).
* ``eval_s_kab``: the two-frequency model built from the pair of
  frequencies ``theta_plus, theta_minus`` derived from ``(kappa_a,
  kappa_b)``. Its first blow-up time is the quantity every bound in this
  package compares against.

Both models solve scalar Riccati equations with a ``+infinity`` initial
datum at ``t = 0``; blow-up times, the finiteness predicate, the upper
bound for the two-frequency blow-up, and a diameter-type certificate are
provided alongside.

All frequency arithmetic is done in complex numbers with principal square
roots; real outputs are checked for a negligible imaginary part before
truncation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

__all__ = [
    "DomainError",
    "ComparisonConstants",
    "ThetaPair",
    "BlowUpTime",
    "eval_s_kc",
    "blowup_time_kc",
    "theta_from_kappas",
    "eval_s_kab",
    "blowup_time_kab",
    "finiteness_predicate",
    "upper_bound_kab",
    "DiameterCertificate",
    "diameter_certificate",
    "DIAMETER_THRESHOLD",
]

# Imaginary parts above this are a bug, not roundoff.
_IM_TOL = 1e-10
# Relative frequency coincidence threshold routing to the analytic limit.
_THETA_COINCIDE = 1e-7


class DomainError(ValueError):
    """Argument outside the domain of definition of a model function."""


def _real(z: complex, what: str) -> float:
    if abs(z.imag) > _IM_TOL * max(1.0, abs(z.real)):
        raise FloatingPointError(f"{what}: unexpected imaginary part {z.imag:.3e}")
    return z.real


@dataclass(frozen=True)
class ComparisonConstants:
    """Curvature bound scalars entering the comparison statements.

    Units: kappa_a is 1/length**4, kappa_b and kappa_c are 1/length**2,
    kappa_omega is 1/length. Any real value is allowed; bounds may be
    negative.
    """

    kappa_a: float = 0.0
    kappa_b: float = 0.0
    kappa_c: float = 0.0
    kappa_omega: float = 0.0

    def __post_init__(self) -> None:
        for name in ("kappa_a", "kappa_b", "kappa_c", "kappa_omega"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be a finite real")


@dataclass(frozen=True)
class ThetaPair:
    """Frequency pair of the two-frequency model.

    x = kappa_b/2 and y = sqrt(kappa_b**2 + 4*kappa_a)/2 with the principal
    square root; theta_pm = (sqrt(x+y) +- sqrt(x-y))/2. The map is inverted
    by kappa_b = 2*(tp**2 + tm**2) and kappa_a = -(tp**2 - tm**2)**2.
    """

    x: complex
    y: complex
    theta_plus: complex
    theta_minus: complex

    @property
    def kappa_a(self) -> float:
        return _real(-((self.theta_plus**2 - self.theta_minus**2) ** 2), "kappa_a")

    @property
    def kappa_b(self) -> float:
        return _real(2 * (self.theta_plus**2 + self.theta_minus**2), "kappa_b")

    def coincident(self) -> bool:
        """True when the two frequencies agree to relative tolerance."""
        scale = max(abs(self.theta_plus), 1.0)
        return abs(self.theta_plus - self.theta_minus) < _THETA_COINCIDE * scale


@dataclass(frozen=True)
class BlowUpTime:
    """A finite positive blow-up time, or the infinite marker.

    ``time`` is ``math.inf`` for the infinite variant, so ordering
    comparisons against floats work directly.
    """

    time: float

    def __post_init__(self) -> None:
        if not (self.time > 0.0):
            raise ValueError(f"blow-up time must be positive, got {self.time}")

    @classmethod
    def finite(cls, t: float) -> "BlowUpTime":
        if not math.isfinite(t):
            raise ValueError("finite variant requires a finite time")
        return cls(float(t))

    @classmethod
    def infinite(cls) -> "BlowUpTime":
        return cls(math.inf)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.time)

    def __float__(self) -> float:
        return self.time


# ----------------------------------------------------------------------
# single-frequency model
# ----------------------------------------------------------------------

def blowup_time_kc(kappa_c: float) -> BlowUpTime:
    """First blow-up time of the single-frequency model.

    pi/sqrt(kappa_c) for positive curvature bound, infinite otherwise.
    """
    if kappa_c > 0.0:
        return BlowUpTime.finite(math.pi / math.sqrt(kappa_c))
    return BlowUpTime.infinite()


def eval_s_kc(kappa_c: float, t: float) -> float:
    """Evaluate the single-frequency model at time t.

    Equals sqrt(kc)*cot(sqrt(kc)*t) for kc > 0, 1/t at kc = 0 and the
    hyperbolic cotangent branch for kc < 0; the three branches glue
    analytically (the function is continuous in kc at 0).
    """
    if not 0.0 < t < blowup_time_kc(kappa_c).time:
        raise DomainError(f"t={t} outside (0, blow-up) for kappa_c={kappa_c}")
    z = cmath.sqrt(complex(kappa_c)) * t
    if abs(z) < 1e-6:
        # z*cot(z) = 1 - z^2/3 - z^4/45 + O(z^6)
        zz = z * z
        return _real((1.0 - zz / 3.0 - zz * zz / 45.0) / t, "s_kc")
    return _real(z * cmath.cos(z) / cmath.sin(z) / t, "s_kc")


# ----------------------------------------------------------------------
# two-frequency model
# ----------------------------------------------------------------------

def theta_from_kappas(kappa_a: float, kappa_b: float) -> ThetaPair:
    """Frequency pair for the two-frequency model, principal branches."""
    x = complex(kappa_b) / 2.0
    y = cmath.sqrt(complex(kappa_b * kappa_b + 4.0 * kappa_a)) / 2.0
    sp = cmath.sqrt(x + y)
    sm = cmath.sqrt(x - y)
    return ThetaPair(x=x, y=y, theta_plus=(sp + sm) / 2.0, theta_minus=(sp - sm) / 2.0)


def _csinc(z: complex) -> complex:
    if abs(z) < 1e-8:
        return 1.0 - z * z / 6.0
    return cmath.sin(z) / z


def _s_kab_limit(alpha: complex, t: float) -> complex:
    """Coincident-frequency limit of the two-frequency model.

    For theta_plus = theta_minus = alpha the generic quotient is 0/0; the
    analytic limit is alpha*(alpha*t/(1 - alpha*t*cot(alpha*t)) + cot(alpha*t)).
    """
    z = alpha * t
    if abs(z) < 1e-4:
        # expansion of the limit formula; first correction at O(z^2)
        return 4.0 / t - (8.0 / 15.0) * alpha * alpha * t
    cot = cmath.cos(z) / cmath.sin(z)
    return alpha * (alpha * t / (1.0 - z * cot) + cot)


def finiteness_predicate(kappa_a: float, kappa_b: float) -> bool:
    """Sign conditions equivalent to a finite two-frequency blow-up time."""
    disc = kappa_b * kappa_b + 4.0 * kappa_a
    return (kappa_b >= 0.0 and disc > 0.0) or (kappa_b < 0.0 and kappa_a > 0.0)


def eval_s_kab(kappa_a: float, kappa_b: float, t: float) -> float:
    """Evaluate the two-frequency model at time t.

    Generic form: (2/t) * (sinc(2*tm*t) - sinc(2*tp*t)) /
    (sinc(tm*t)**2 - sinc(tp*t)**2). Near frequency coincidence the
    expression is routed to the analytic limit.
    """
    tbar = blowup_time_kab(kappa_a, kappa_b)
    if not 0.0 < t < tbar.time:
        raise DomainError(
            f"t={t} outside (0, {tbar.time}) for (kappa_a, kappa_b)="
            f"({kappa_a}, {kappa_b})"
        )
    th = theta_from_kappas(kappa_a, kappa_b)
    tp, tm = th.theta_plus, th.theta_minus
    tp2, tm2 = tp * tp, tm * tm
    # The quotient depends on the frequencies only through their squares,
    # and degenerates to 0/0 in three situations: coincident frequencies,
    # coincident squares (kappa_a = 0 with kappa_b < 0, where tp = -tm),
    # and sinc arguments too small to resolve the difference. All three
    # are served by the analytic limit at the root-mean-square frequency.
    if (
        th.coincident()
        or abs(tp2 - tm2) < _THETA_COINCIDE * max(abs(tp2), 1.0)
        or max(abs(tp), abs(tm)) * t < 1e-4
    ):
        return _real(_s_kab_limit(cmath.sqrt((tp2 + tm2) / 2.0), t), "s_kab")
    num = _csinc(2.0 * tm * t) - _csinc(2.0 * tp * t)
    den = _csinc(tm * t) ** 2 - _csinc(tp * t) ** 2
    return _real((2.0 / t) * num / den, "s_kab")


def _scan_first_root(g, lo: float, hi: float, steps: int = 1024) -> float | None:
    """First root of g on [lo, hi]: sign-change scan, bisection refinement.

    Tangential (even-multiplicity) touches are caught by a local-minimum
    fallback on |g|, needed at frequency resonances where one factor grazes
    zero without crossing.
    """
    ts = np.linspace(lo, hi, steps + 1)
    vals = np.array([g(t) for t in ts])
    scale = np.abs(vals).max()
    crossing = None
    for i in range(steps):
        if vals[i] == 0.0:
            crossing = ts[i]
            break
        if vals[i] * vals[i + 1] < 0.0:
            crossing = brentq(g, ts[i], ts[i + 1], xtol=1e-12)
            break
    touch = None
    for i in range(1, steps):
        if crossing is not None and ts[i] >= crossing:
            break
        if abs(vals[i]) <= abs(vals[i - 1]) and abs(vals[i]) <= abs(vals[i + 1]):
            res = minimize_scalar(
                lambda t: abs(g(t)),
                bounds=(ts[i - 1], ts[i + 1]),
                method="bounded",
                options={"xatol": 1e-13},
            )
            if res.fun < 1e-12 * scale:
                touch = float(res.x)
                break
    candidates = [c for c in (crossing, touch) if c is not None]
    return min(candidates) if candidates else None


def blowup_time_kab(kappa_a: float, kappa_b: float) -> BlowUpTime:
    """First blow-up time of the two-frequency model.

    Infinite exactly when the finiteness predicate fails. kappa_a = 0
    gives exactly 2*pi/sqrt(kappa_b). For kappa_a < 0 both frequencies
    are real and the first root of sinc(tp*t)**2 = sinc(tm*t)**2 lies in
    (pi/tp, pi/tm]; the difference of squares is factored and each factor
    scanned, because the squared form has a tangential double zero at
    resonances tp/tm integer. For kappa_a > 0 the frequencies are a
    conjugate pair alpha +- i*beta and the blow-up is the unique root of
    alpha*tan(alpha*t) + beta*tanh(beta*t) on (pi/(2*alpha), pi/alpha),
    evaluated in the pole-free rescaled form
    alpha*sin(alpha*t) + beta*cos(alpha*t)*tanh(beta*t).
    """
    if not finiteness_predicate(kappa_a, kappa_b):
        return BlowUpTime.infinite()
    if kappa_a == 0.0:
        # predicate enforced kappa_b > 0 here (disc = kappa_b**2 > 0)
        return BlowUpTime.finite(2.0 * math.pi / math.sqrt(kappa_b))
    th = theta_from_kappas(kappa_a, kappa_b)
    tp, tm = th.theta_plus, th.theta_minus
    if kappa_a < 0.0:
        # both frequencies real, tp > tm > 0
        tpr, tmr = tp.real, tm.real
        lo, hi = math.pi / tpr, math.pi / tmr

        def g_minus(t: float) -> float:
            return math.sin(tpr * t) / tpr - math.sin(tmr * t) / tmr

        def g_plus(t: float) -> float:
            return math.sin(tpr * t) / tpr + math.sin(tmr * t) / tmr

        roots = []
        for g in (g_minus, g_plus):
            r = _scan_first_root(g, lo * (1.0 - 1e-12), hi * (1.0 + 1e-12))
            if r is not None:
                roots.append(r)
        if not roots:
            raise FloatingPointError(
                f"no root in the proven bracket ({lo}, {hi}] for "
                f"({kappa_a}, {kappa_b})"
            )
        return BlowUpTime.finite(min(roots))
    # kappa_a > 0: conjugate pair alpha +- i*beta with alpha, beta > 0
    # and (2*alpha)^2 * (2*beta)^2 = 4*kappa_a. One of the two squares
    # suffers cancellation when kappa_a << kappa_b**2; compute the safe
    # one directly and recover the other from the product.
    x = kappa_b / 2.0
    y = math.hypot(kappa_b, 2.0 * math.sqrt(kappa_a)) / 2.0
    if x >= 0.0:
        sp2 = x + y
        sm2 = kappa_a / sp2
    else:
        sm2 = y - x
        sp2 = kappa_a / sm2
    alpha, beta = math.sqrt(sp2) / 2.0, math.sqrt(sm2) / 2.0

    def g(t: float) -> float:
        return alpha * math.sin(alpha * t) + beta * math.cos(alpha * t) * math.tanh(
            beta * t
        )

    lo, hi = math.pi / (2.0 * alpha), math.pi / alpha
    # g decreases from g(lo) = alpha > 0 to g(hi) = -beta*tanh(beta*hi).
    # With alpha and beta many orders of magnitude apart, the smaller
    # endpoint value sinks below the trigonometric rounding noise of the
    # larger term and the root is numerically the bracket end itself
    # (the true offset is below one ulp of the endpoint).
    if g(lo) <= 0.0:
        return BlowUpTime.finite(lo)
    if g(hi) >= 0.0:
        return BlowUpTime.finite(hi)
    return BlowUpTime.finite(brentq(g, lo, hi, xtol=1e-12))


def upper_bound_kab(kappa_a: float, kappa_b: float) -> float:
    """Upper bound 2*pi / Re(sqrt(x+y) - sqrt(x-y)) for the blow-up time.

    Returns +inf when the denominator vanishes. The bound is attained
    exactly when kappa_a = 0.
    """
    th = theta_from_kappas(kappa_a, kappa_b)
    denom = 2.0 * th.theta_minus.real  # sqrt(x+y) - sqrt(x-y) = 2*theta_minus
    if denom <= 0.0:
        return math.inf
    return 2.0 * math.pi / denom


# ----------------------------------------------------------------------
# diameter-type certificate
# ----------------------------------------------------------------------

#: Vertical-momentum threshold above which Re(theta_minus) > 1 directly.
DIAMETER_THRESHOLD = math.sqrt(8.0 / 7.0)


@dataclass(frozen=True)
class DiameterCertificate:
    kappa_a: float
    kappa_b: float
    tbar: BlowUpTime
    chi_at_pi: float
    passes: bool


def diameter_certificate(v_norm: float, K: float) -> DiameterCertificate:
    """Certificate that the two-frequency blow-up is at most pi.

    For a unit covector with vertical momentum of norm ``v_norm`` over a
    base with sectional curvature at least ``K >= -1``, the effective
    constants are kappa_a = v^2*(3/2*K - 7/2 - 15/8*v^2) and
    kappa_b = 4 + 5*v^2. ``chi_at_pi`` is the factored blow-up function
    sinc(tm*pi)**2 - sinc(tp*pi)**2 whose sign at pi certifies the small
    ``v_norm`` regime; ``passes`` records tbar <= pi.
    """
    if v_norm < 0.0:
        raise DomainError("v_norm must be nonnegative")
    if K < -1.0:
        raise DomainError("sectional curvature bound K must be >= -1")
    s = v_norm * v_norm
    kappa_a = s * (1.5 * K - 3.5 - 1.875 * s)
    kappa_b = 4.0 + 5.0 * s
    tbar = blowup_time_kab(kappa_a, kappa_b)
    th = theta_from_kappas(kappa_a, kappa_b)
    chi = _csinc(th.theta_minus * math.pi) ** 2 - _csinc(th.theta_plus * math.pi) ** 2
    return DiameterCertificate(
        kappa_a=kappa_a,
        kappa_b=kappa_b,
        tbar=tbar,
        chi_at_pi=_real(chi, "chi_at_pi"),
        passes=bool(tbar.time <= math.pi * (1.0 + 1e-12)),
    )
