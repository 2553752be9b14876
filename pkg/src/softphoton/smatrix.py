"""Observable assembly: vacuum amplitudes, emission factors, gauge reports.

The displacement profile F(k) = -j(k) / ((2 pi)^(3/2) sqrt(2|k|)) built from
the on-shell current drives everything: the vacuum amplitude is
exp(e^2 <F,F>_sigma / 2) = exp(m_exponent.total), and each emitted photon f
contributes the factor -i e <f, F>_sigma, evaluated either as an adaptive
continuum integral or as an exact sum on a mode grid.  Grid mode uses the
same nodes and weights as the truncated-Fock oracle so comparisons isolate
operator algebra rather than quadrature error.
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
from .currents import CurrentSpec, current_on_shell
from .fock import ModeGrid, TruncatedFockSpace, emission_matrix_element
from .gauge import PhotonSmearing, polarization_components
from .quadrature import (
    CorrectionExponent,
    RadialAngularRule,
    b_ir,
    counterterm_phase,
    integrate_radial,
    integrate_sphere,
    m_exponent,
    unren_halfline_exponent,
)

__all__ = [
    "displacement_profile",
    "displacement_profile_grid",
    "fock_channels",
    "m_exponent_grid",
    "vacuum_amplitude",
    "emission_factor",
    "AmplitudeReport",
    "full_amplitude",
    "GaugeComparison",
    "gauge_compare",
    "LedgerRow",
    "RenormalizationLedger",
    "renormalization_ledger",
]

_NORM = (2.0 * np.pi) ** 1.5


def displacement_profile(kin: ScatteringKinematics, gauge: str,
                         rho: FormFactor, window: CutoffWindow,
                         k) -> np.ndarray:
    """F(k) = -j_onshell(k) / ((2 pi)^(3/2) sqrt(2|k|)), zero off window."""
    k = np.asarray(k, dtype=float)
    kn = float(np.linalg.norm(k))
    width = 4 if gauge == "FGB" else 3
    if not (window.lam <= kn <= window.Lam):
        return np.zeros(width, dtype=complex)
    spec = CurrentSpec(kin, gauge, rho, window)
    return -current_on_shell(spec, k) / (_NORM * np.sqrt(2.0 * kn))


def displacement_profile_grid(kin: ScatteringKinematics, gauge: str,
                              rho: FormFactor, window: CutoffWindow,
                              grid: ModeGrid) -> np.ndarray:
    """Profile sampled on the grid nodes, as (n_nodes, 4 or 3) vectors."""
    return np.stack([displacement_profile(kin, gauge, rho, window, k)
                     for k in grid.nodes])


def fock_channels(grid: ModeGrid, values: np.ndarray) -> np.ndarray:
    """Vector values per node to the grid's channel layout.

    FGB channels are the plain (t, x, y, z) components; Coulomb channels are
    the two polarization coefficients of the transverse 3-vector.
    """
    values = np.asarray(values, dtype=complex)
    if grid.gauge == "FGB":
        if values.shape != (grid.n_nodes, 4):
            raise ValueError("FGB grid expects (n_nodes, 4) values")
        return values
    if values.shape != (grid.n_nodes, 3):
        raise ValueError("Coulomb grid expects (n_nodes, 3) values")
    return polarization_components(grid, values)


def m_exponent_grid(kin: ScatteringKinematics, gauge: str, rho: FormFactor,
                    window: CutoffWindow, grid: ModeGrid) -> complex:
    """Grid-discretized correction exponent e^2 <F, F>_sigma / 2."""
    F = fock_channels(grid, displacement_profile_grid(kin, gauge, rho,
                                                      window, grid))
    return 0.5 * kin.charge ** 2 * grid.signed_product(F, F)


def vacuum_amplitude(kin: ScatteringKinematics, gauge: str, rho: FormFactor,
                     window: CutoffWindow,
                     rule: RadialAngularRule | None = None) -> complex:
    """exp(m_exponent.total) at epsilon = 0; real, in (0, 1]."""
    return complex(np.exp(m_exponent(kin, gauge, rho, window, rule).total))


def _leg_terms(kin: ScatteringKinematics):
    """(eta_r, four-vector, bn flag) per leg for the emission kernel."""
    return ((kin.eta_out, kin.velocity("out")),
            (kin.eta_in, kin.velocity("in")))


def emission_factor(kin: ScatteringKinematics, gauge: str, photon,
                    rho: FormFactor, window: CutoffWindow,
                    rule: RadialAngularRule | None = None) -> complex:
    """Single-photon emission factor -i e <f, F>_sigma.

    ``photon`` is either a PhotonSmearing (exact weighted sum on its grid,
    the matched-oracle mode) or a callable k -> components (adaptive
    quadrature over the window).  The photon function enters antilinearly.
    Expanded, the factor reads
    -e Int d3k rho (2 pi)^(-3/2) (2k)^(-1/2) sum_r eta_r M(v_r, conj f)/d_r
    for FGB with M the Minkowski contraction, and the opposite sign with the
    transverse spatial dot for Coulomb.
    """
    if isinstance(photon, PhotonSmearing):
        grid = photon.grid
        if grid.gauge != gauge:
            raise ValueError("photon grid gauge does not match requested gauge")
        for node in grid.nodes:
            kn = float(np.linalg.norm(node))
            if not (window.lam <= kn <= window.Lam):
                raise ValueError("photon support extends outside the window")
        F = fock_channels(grid, displacement_profile_grid(
            kin, gauge, rho, window, grid))
        f = fock_channels(grid, photon.values)
        return -1j * kin.charge * grid.signed_product(f, F)

    legs = _leg_terms(kin)
    bn = kin.model == "BN"

    def sphere_part(kn: float) -> complex:
        def kernel(khat):
            vals = np.empty(khat.shape[0], dtype=complex)
            for m, direction in enumerate(khat):
                kvec = kn * direction
                fbar = np.conj(np.asarray(photon(kvec), dtype=complex))
                acc = 0.0 + 0.0j
                for eta, v in legs:
                    denom = on_shell_dot(v, kvec) if bn else kn
                    if gauge == "FGB":
                        num = v.u0 * fbar[0] - v.spatial @ fbar[1:]
                    else:
                        num = v.spatial @ (transverse_projector(kvec) @ fbar)
                    acc += eta * num / denom
                vals[m] = acc
            return vals

        va = legs[0][1].spatial
        vb = legs[1][1].spatial
        return integrate_sphere(kernel, va, vb, rule, force_full=True)

    def radial_fn(ks: np.ndarray) -> np.ndarray:
        pref = ks ** 2 * rho(ks) / (_NORM * np.sqrt(2.0 * ks))
        return pref * np.array([sphere_part(float(k)) for k in ks])

    sign = -1.0 if gauge == "FGB" else 1.0
    return sign * kin.charge * integrate_radial(
        radial_fn, window.lam, window.Lam, rule, breaks=rho.knots())


@dataclass(frozen=True)
class AmplitudeReport:
    """Vacuum amplitude, per-photon factors, and their exact product.

    ``total`` = vacuum_amplitude x prod(emission_factors) by construction;
    the nontrivial content is ``oracle_value`` agreement when a matched-grid
    truncated-Fock computation was requested (then ``oracle_grid_total`` is
    the same product with the vacuum part discretized on the oracle grid,
    the quantity the oracle actually measures).
    """

    model: str
    gauge: str
    window: CutoffWindow
    kinematics: ScatteringKinematics
    vacuum_amplitude: complex
    exponent: CorrectionExponent
    emission_factors: tuple
    total: complex
    oracle_value: complex | None = None
    oracle_grid_total: complex | None = None
    oracle_dim: int | None = None


def full_amplitude(kin: ScatteringKinematics, gauge: str, photons,
                   rho: FormFactor, window: CutoffWindow,
                   rule: RadialAngularRule | None = None,
                   oracle_cap: int | None = None) -> AmplitudeReport:
    """Assemble vacuum x product of emission factors, optionally with oracle.

    With ``oracle_cap`` every photon must be a PhotonSmearing on one shared
    grid; the truncated-Fock matrix element on that grid (displacement
    operator with its vacuum part) lands in ``oracle_value``.
    """
    exponent = m_exponent(kin, gauge, rho, window, rule)
    vacuum = complex(np.exp(exponent.total))
    factors = tuple(emission_factor(kin, gauge, p, rho, window, rule)
                    for p in photons)
    total = vacuum * np.prod(factors) if factors else vacuum
    oracle_value = None
    grid_total = None
    oracle_dim = None
    if oracle_cap is not None:
        if not photons or not all(isinstance(p, PhotonSmearing)
                                  for p in photons):
            raise ValueError("oracle mode needs grid photons")
        grid = photons[0].grid
        if any(p.grid != grid for p in photons[1:]):
            raise ValueError("oracle mode needs a single shared grid")
        space = TruncatedFockSpace(grid, oracle_cap)
        F = fock_channels(grid, displacement_profile_grid(
            kin, gauge, rho, window, grid))
        photon_ch = [fock_channels(grid, p.values) for p in photons]
        oracle_value = emission_matrix_element(
            photon_ch, F, kin.charge, space, include_vacuum_part=True)
        grid_vacuum = np.exp(m_exponent_grid(kin, gauge, rho, window, grid))
        grid_total = complex(grid_vacuum * np.prod(factors))
        oracle_dim = space.dim
    return AmplitudeReport(model=kin.model, gauge=gauge, window=window,
                           kinematics=kin, vacuum_amplitude=vacuum,
                           exponent=exponent, emission_factors=factors,
                           total=complex(total), oracle_value=oracle_value,
                           oracle_grid_total=grid_total,
                           oracle_dim=oracle_dim)


@dataclass(frozen=True)
class GaugeComparison:
    """Correction exponents in both gauges with the conservation diagnostic.

    log_ratio = m_fgb / m_coulomb (real parts; NaN when degenerate).  The
    conservation residual max |kbar.j| over sampled nodes is what drives any
    difference: zero for the BN current, positive for the dipole.
    """

    m_fgb: complex
    m_coulomb: complex
    log_ratio: float
    degenerate: bool
    conservation_residual: float


def gauge_compare(kin: ScatteringKinematics, rho: FormFactor,
                  window: CutoffWindow,
                  rule: RadialAngularRule | None = None,
                  n_residual_nodes: int = 8, seed: int = 0) -> GaugeComparison:
    m_fgb = m_exponent(kin, "FGB", rho, window, rule).total
    m_coul = m_exponent(kin, "Coulomb", rho, window, rule).total
    degenerate = abs(m_fgb) < 1e-13 and abs(m_coul) < 1e-13
    ratio = float("nan") if degenerate else m_fgb.real / m_coul.real
    rng = np.random.default_rng(seed)
    spec = CurrentSpec(kin, "FGB", rho, window)
    residual = 0.0
    for _ in range(n_residual_nodes):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        k = direction * rng.uniform(window.lam, window.Lam)
        j4 = current_on_shell(spec, k)
        kn = np.linalg.norm(k)
        residual = max(residual, abs(kn * j4[0] - k @ j4[1:]))
    return GaugeComparison(m_fgb=m_fgb, m_coulomb=m_coul, log_ratio=ratio,
                           degenerate=degenerate,
                           conservation_residual=float(residual))


@dataclass(frozen=True)
class LedgerRow:
    eps: float
    unrenormalized: complex
    counterterm: complex
    total: complex


def _parity_fit(eps: np.ndarray, vals: np.ndarray, odd: bool) -> np.ndarray:
    # coefficients of sum_j c_j eps^(2j [+1]); c_0 is the extrapolant
    powers = 2 * np.arange(len(eps)) + (1 if odd else 0)
    return np.linalg.solve(np.power.outer(eps, powers), vals)


@dataclass(frozen=True)
class RenormalizationLedger:
    """Unrenormalized exponent + counterterm phase down an epsilon ladder.

    The summed column has an even real part and an odd imaginary part in
    epsilon, so the ladder is extrapolated with parity-matched bases: the
    real part in {1, eps^2, eps^4, ...} and the imaginary part in
    {eps, eps^3, ...}, which vanishes at eps = 0 with leading slope
    ``imag_slope``.  The extrapolated value is compared against the
    adiabatic-limit target -e^2 b_ir / 2.
    """

    rows: tuple
    extrapolated: complex
    imag_slope: float
    target: float
    relative_error: float


def renormalization_ledger(u: FourVelocity, eps_ladder, rho: FormFactor,
                           window: CutoffWindow, *, charge: float,
                           rule: RadialAngularRule | None = None
                           ) -> RenormalizationLedger:
    eps_arr = np.asarray([float(e) for e in eps_ladder])
    if len(eps_arr) == 0 or np.any(eps_arr <= 0.0):
        raise ValueError("epsilon ladder must be positive")
    if np.any(np.diff(eps_arr) >= 0.0):
        raise ValueError("epsilon ladder must be strictly decreasing")
    rows = []
    for eps in eps_arr:
        unren = unren_halfline_exponent(u, float(eps), rho, window,
                                        charge=charge, rule=rule)
        phase = counterterm_phase(u, float(eps), rho, window,
                                  charge=charge, rule=rule)
        rows.append(LedgerRow(eps=float(eps), unrenormalized=unren,
                              counterterm=phase, total=unren + phase))
    totals = np.array([r.total for r in rows])
    extrapolated = complex(_parity_fit(eps_arr, totals.real, odd=False)[0])
    imag_slope = float(_parity_fit(eps_arr, totals.imag, odd=True)[0])
    target = -charge ** 2 * b_ir(u, rho, window, rule) / 2.0
    if target == 0.0:
        rel = 0.0 if abs(extrapolated) == 0.0 else float("inf")
    else:
        rel = abs(extrapolated - target) / abs(target)
    return RenormalizationLedger(rows=tuple(rows), extrapolated=extrapolated,
                                 imag_slope=imag_slope, target=float(target),
                                 relative_error=float(rel))
