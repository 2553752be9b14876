"""Classical currents of the two models and their coherence functions.

The straight-line model couples through the on-shell combination
u^mu / (u.k) per leg; the dipole model through vtilde^mu / k0 with
vtilde = (1, p/m).  Coulomb-gauge objects are the transverse projections of
the spatial parts.  Out legs are regularized with denominators shifted by
+i eps, in legs by -i eps (the adiabatic switching acts on the opposite time
half-line).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CutoffWindow,
    FormFactor,
    FourVelocity,
    ScatteringKinematics,
    on_shell_dot,
    transverse_projector,
)
from .quadrature import RadialAngularRule, _gl, integrate_radial

__all__ = [
    "CurrentSpec",
    "CoherenceFunction",
    "current_fourier",
    "current_on_shell",
    "current_divergence",
    "polarization_frame",
    "coherence_asymptotic",
    "coherence_regularized",
    "phase_exponent_d",
]

_NORM = (2.0 * np.pi) ** 1.5


@dataclass(frozen=True)
class CurrentSpec:
    """Everything needed to evaluate one model current in one gauge."""

    kin: ScatteringKinematics
    gauge: str
    rho: FormFactor
    window: CutoffWindow
    eps: float = 0.0

    def __post_init__(self):
        if self.gauge not in ("FGB", "Coulomb"):
            raise ValueError("gauge must be 'FGB' or 'Coulomb'")
        if self.eps < 0.0:
            raise ValueError("eps must be >= 0")

    def replace_gauge(self, gauge: str) -> "CurrentSpec":
        if gauge == self.gauge:
            return self
        return CurrentSpec(self.kin, gauge, self.rho, self.window, self.eps)


def _leg_vector(spec: CurrentSpec, leg: str) -> np.ndarray:
    """Four-vector coupling of a leg: u for BN, vtilde for the dipole."""
    return spec.kin.velocity(leg).four()


def _leg_denominator(spec: CurrentSpec, leg: str, k: np.ndarray, k0: complex):
    if spec.kin.model == "BN":
        u = spec.kin.velocity(leg)
        return k0 - float(u.spatial @ k)
    return k0


def current_fourier(spec: CurrentSpec, k, k0: float):
    """Fourier transform of the current at (k0, k); k0 need not be on shell.

    FGB returns the complex four-vector
        i rho~(|k|) [ v_out / (d_out + i eps) - v_in / (d_in - i eps) ],
    d_leg = k0 - uvec_leg . k for straight legs and k0 for the dipole.
    Coulomb gauge returns the transversely projected spatial part.
    """
    k = np.asarray(k, dtype=float)
    kn = np.linalg.norm(k)
    if kn == 0.0:
        raise ValueError("current undefined at k = 0")
    rho = spec.rho(kn)
    terms = []
    for leg, sign, shift in (("out", +1.0, +1j * spec.eps),
                             ("in", -1.0, -1j * spec.eps)):
        d = _leg_denominator(spec, leg, k, k0) + shift
        if d == 0:
            raise ValueError(f"current hits the {leg}-leg pole at this (k, k0)")
        terms.append(sign * _leg_vector(spec, leg) / d)
    j4 = 1j * rho * (terms[0] + terms[1])
    if spec.gauge == "FGB":
        return j4
    return transverse_projector(k) @ j4[1:]


def current_on_shell(spec: CurrentSpec, k):
    """Current at the photon point k0 = |k|."""
    k = np.asarray(k, dtype=float)
    return current_fourier(spec, k, float(np.linalg.norm(k)))


def current_divergence(spec: CurrentSpec, k, t: float) -> complex:
    """Spatial Fourier transform of d_mu j^mu at time t (t = 0 excluded).

    Vanishes identically for straight-line legs; the dipole current leaks
    charge at rate i (k . p(t)/m) rho~(k), with p(t) the active leg momentum.
    """
    if t == 0.0:
        raise ValueError("divergence undefined at the kink t = 0")
    k = np.asarray(k, dtype=float)
    kn = np.linalg.norm(k)
    if spec.kin.model == "BN":
        return 0.0 + 0.0j
    leg = "out" if t > 0.0 else "in"
    p = np.asarray(spec.kin.p_out if leg == "out" else spec.kin.p_in)
    return 1j * float(k @ p) / spec.kin.mass * spec.rho(kn)


# ---------------------------------------------------------------------------
# polarization frame


def polarization_frame(k):
    """Deterministic transverse pair (e1, e2) with e1 x e2 = khat.

    Built by Gram-Schmidt from the coordinate axis least aligned with k, so
    the frame is reproducible across runs; nothing downstream depends on the
    choice because every Coulomb formula is also exposed projector-style.
    """
    k = np.asarray(k, dtype=float)
    kn = np.linalg.norm(k)
    if kn == 0.0:
        raise ValueError("no transverse frame at k = 0")
    khat = k / kn
    seed = np.zeros(3)
    seed[np.argmin(np.abs(khat))] = 1.0
    e1 = seed - khat * (khat @ seed)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(khat, e1)
    return e1, e2


# ---------------------------------------------------------------------------
# coherence functions


def _coherence_base(spec: CurrentSpec, leg: str, k: np.ndarray):
    """rho~ V / ((2 pi)^{3/2} sqrt(2|k|)) and the leg frequency u.k or |k|."""
    kn = float(np.linalg.norm(k))
    if not (spec.window.lam <= kn <= spec.window.Lam):
        raise ValueError("momentum outside the cutoff window")
    pref = spec.rho(kn) / (_NORM * np.sqrt(2.0 * kn))
    v = spec.kin.velocity(leg)
    if spec.kin.model == "BN":
        omega = on_shell_dot(v, k)
        vec = v.four()
    else:
        omega = kn
        vec = v.four()
    if spec.gauge == "Coulomb":
        vec = transverse_projector(k) @ vec[1:]
    return pref * vec, omega


def coherence_asymptotic(spec: CurrentSpec, leg: str, k):
    """Large-time limit of the leg coherence function at momentum k.

    i rho~ V / ((2 pi)^{3/2} sqrt(2|k|) omega) with V = u^mu (FGB straight
    leg), the transverse uvec (Coulomb), vtilde^mu or the transverse p/m for
    the dipole, and omega = u.k resp. |k|.  Both legs share the same limit.
    """
    k = np.asarray(k, dtype=float)
    base, omega = _coherence_base(spec, leg, k)
    return 1j * base / omega


def coherence_regularized(spec: CurrentSpec, leg: str, k, t: float, eps: float):
    """Finite-time coherence function with adiabatic switching eps > 0.

    base (exp((i omega - eps_eff) t) - 1) / (i omega - eps_eff), where
    eps_eff = +eps on the out leg and -eps on the in leg.  Vanishes at t = 0
    and reproduces ``coherence_asymptotic`` in the iterated limit t -> +-inf,
    eps -> 0.
    """
    if not eps > 0.0:
        raise ValueError("eps must be > 0")
    k = np.asarray(k, dtype=float)
    base, omega = _coherence_base(spec, leg, k)
    eff = eps if leg == "out" else -eps
    rate = 1j * omega - eff
    return base * (np.exp(rate * t) - 1.0) / rate


@dataclass(frozen=True)
class CoherenceFunction:
    """Leg coherence function as a callable with its metadata attached."""

    spec: CurrentSpec
    leg: str
    kind: str = "asymptotic"
    t: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        if self.leg not in ("in", "out"):
            raise ValueError("leg must be 'in' or 'out'")
        if self.kind not in ("asymptotic", "regularized"):
            raise ValueError("kind must be 'asymptotic' or 'regularized'")

    def __call__(self, k):
        if self.kind == "asymptotic":
            return coherence_asymptotic(self.spec, self.leg, k)
        return coherence_regularized(self.spec, self.leg, k, self.t, self.eps)

    def window_norm(self, n_radial: int = 64, n_angular: int = 32) -> float:
        """Plain component-square norm over the window; finite by construction."""
        x, wx = _gl(n_radial)
        win = self.spec.window
        ks = 0.5 * (win.lam + win.Lam) + 0.5 * (win.Lam - win.lam) * x
        wk = 0.5 * (win.Lam - win.lam) * wx
        c, wc = _gl(n_angular)
        s = np.sqrt(1.0 - c ** 2)
        total = 0.0
        for kmag, wkm in zip(ks, wk):
            for cc, ss, wcc in zip(c, s, wc):
                kvec = kmag * np.array([ss, 0.0, cc])
                val = self(kvec)
                total += wkm * wcc * 2.0 * np.pi * kmag ** 2 * float(
                    np.sum(np.abs(val) ** 2))
        return total


# ---------------------------------------------------------------------------
# accumulated phase of the dressing transformation


def phase_exponent_d(u: FourVelocity, t: float, eps: float, rho: FormFactor,
                     window: CutoffWindow,
                     rule: RadialAngularRule | None = None) -> float:
    """Accumulated phase integral d^(eps)(t) of a leg with velocity u.

        d = - Int_{k in window} d3k rho~^2 / ((2 pi)^3 k ((u.k)^2 + eps^2))
              * [ e^{-eps t} sin(u.k t) + (u.k / (2 eps)) (e^{-2 eps t} - 1) ]

    Defined for t >= 0, eps > 0; d(0) = 0 exactly.  The bracket is <= 0 for
    t >= 0, so d is non-negative, grows monotonically and saturates at a
    finite eps-dependent value.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if not eps > 0.0:
        raise ValueError("eps must be > 0")
    if t == 0.0:
        return 0.0
    beta = u.beta

    def bracket(omega):
        return (np.exp(-eps * t) * np.sin(omega * t)
                + omega / (2.0 * eps) * (np.expm1(-2.0 * eps * t)))

    def value(n_c: int) -> float:
        if beta == 0.0:
            def radial(k):
                return rho(k) ** 2 * k * bracket(k) / (k ** 2 + eps ** 2) * 2.0
        else:
            c, wc = _gl(n_c)

            def radial(k):
                omega = np.multiply.outer(k, 1.0 - beta * c)
                inner = np.sum(wc * bracket(omega) / (omega ** 2 + eps ** 2),
                               axis=1)
                return rho(k) ** 2 * k * inner
        val = integrate_radial(radial, window.lam, window.Lam, rule,
                               breaks=rho.knots())
        return float(np.real(val)) * (-1.0 / (4.0 * np.pi ** 2))

    if beta == 0.0:
        return value(1)
    rule = rule or RadialAngularRule()
    n_c = max(rule.angular_order, 32)
    prev = value(n_c)
    while True:
        n_c *= 2
        cur = value(n_c)
        if abs(cur - prev) <= max(rule.abs_tol, rule.rel_tol * abs(cur)):
            return cur
        if n_c > rule.max_angular_order:
            raise RuntimeError("angular part of the phase integral did not "
                               "converge")
        prev = cur
