"""Acceptance gate: ten numbered checks, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.  Each
check asserts both the numerical statement and its runtime budget.
"""

import json
import time

import numpy as np
import pytest

from softphoton.cli import main as cli_main
from softphoton.core import (
    CutoffWindow,
    FormFactor,
    FourVelocity,
    ScatteringKinematics,
    transverse_projector,
)
from softphoton.currents import CurrentSpec, current_on_shell
from softphoton.fock import (
    ModeGrid,
    TruncatedFockSpace,
    bch_check,
    displacement_truncation_deviation,
    displacement_vacuum_channelwise,
    weyl_operator,
)
from softphoton.gauge import (
    PhotonSmearing,
    coulomb_product,
    minus_product,
    product_inner,
    t_map,
)
from softphoton.quadrature import (
    b_ir,
    counterterm_z,
    counterterm_z1,
    counterterm_z2,
    counterterm_z_tilde,
    m_exponent,
)
from softphoton.smatrix import (
    displacement_profile_grid,
    emission_factor,
    fock_channels,
    full_amplitude,
    gauge_compare,
    m_exponent_grid,
    renormalization_ledger,
)

WINDOW = CutoffWindow(lam=0.1, Lam=1.0)
SHARP = FormFactor.sharp(0.1, 1.0)

FORM_FACTORS = (
    FormFactor.sharp(0.1, 1.0),
    FormFactor.gaussian(0.35),
    FormFactor.tabulated([0.1, 0.5, 1.0], [1.0, 0.8, 0.5]),
)
WINDOWS = (CutoffWindow(lam=0.1, Lam=1.0), CutoffWindow(lam=0.2, Lam=0.8))

DIPOLE = ScatteringKinematics.dipole(charge=0.3, mass=1.0,
                                     p_in=(0.0, 0.0, 0.0),
                                     p_out=(0.0, 0.0, 0.1))


def _report(n: int, ok: bool, detail: str, elapsed: float, limit: float):
    status = "PASS" if ok and elapsed < limit else "FAIL"
    print(f"acceptance {n:2d} [{status}] {detail} "
          f"({elapsed:.2f}s, budget {limit:.0f}s)")
    assert ok, f"acceptance {n}: {detail}"
    assert elapsed < limit, f"acceptance {n} over budget: {elapsed:.2f}s"


def test_01_counterterm_ratios():
    t0 = time.perf_counter()
    worst = 0.0
    velocities = (FourVelocity.rest(), FourVelocity((0.0, 0.0, 0.5)),
                  FourVelocity((0.3, -0.2, 0.4)))
    for rho in FORM_FACTORS:
        for window in WINDOWS:
            z = counterterm_z(rho, window)
            zt = counterterm_z_tilde(rho, window)
            worst = max(worst, abs(zt / z - 1.5))
            for u in velocities:
                z1 = counterterm_z1(u, rho, window)
                z2 = counterterm_z2(u, rho, window)
                worst = max(worst, abs(z2 / z1 - 1.5))
    _report(1, worst <= 1e-12, f"counterterm ratios 3/2, worst dev {worst:.2e}",
            time.perf_counter() - t0, 1.0)


def test_02_rest_frame_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for lam, Lam in ((0.1, 1.0), (0.05, 0.7), (0.2, 2.0)):
        window = CutoffWindow(lam=lam, Lam=Lam)
        rho = FormFactor.sharp(lam, Lam)
        val = b_ir(FourVelocity.rest(), rho, window)
        closed = -np.log(Lam / lam) / (4.0 * np.pi ** 2)
        worst = max(worst, abs(val - closed))
    _report(2, worst <= 1e-10, f"rest-frame self-energy, worst dev {worst:.2e}",
            time.perf_counter() - t0, 1.0)


def test_03_gauge_equality_conserved_current():
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst_m = 0.0
    for _ in range(100):
        u_in = rng.uniform(-1.0, 1.0, size=3)
        u_out = rng.uniform(-1.0, 1.0, size=3)
        for u in (u_in, u_out):
            n = np.linalg.norm(u)
            if n > 0.9:
                u *= 0.9 * rng.uniform(0.1, 1.0) / n
        kin = ScatteringKinematics.bn(charge=0.3, u_in=tuple(u_in),
                                      u_out=tuple(u_out))
        mf = m_exponent(kin, "FGB", SHARP, WINDOW).total
        mc = m_exponent(kin, "Coulomb", SHARP, WINDOW).total
        if abs(mc) > 1e-13:
            worst_m = max(worst_m, abs(mf - mc) / abs(mc))
    # pointwise: |j0|^2 - |jvec|^2 = -|P jvec|^2 for the conserved current
    kin = ScatteringKinematics.bn(charge=0.3, u_in=(0.5, -0.3, 0.2),
                                  u_out=(-0.1, 0.6, 0.55))
    spec = CurrentSpec(kin, "FGB", SHARP, WINDOW)
    worst_pt = 0.0
    for _ in range(10_000):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        k = direction * rng.uniform(WINDOW.lam, WINDOW.Lam)
        j = current_on_shell(spec, k)
        lhs = abs(j[0]) ** 2 - np.sum(np.abs(j[1:]) ** 2)
        trans = transverse_projector(k) @ j[1:]
        rhs = -np.sum(np.abs(trans) ** 2)
        scale = max(1.0, abs(j[0]) ** 2 + np.sum(np.abs(j[1:]) ** 2))
        worst_pt = max(worst_pt, abs(lhs - rhs) / scale)
    ok = worst_m <= 1e-8 and worst_pt <= 1e-12
    _report(3, ok, f"gauge equality, worst exponent dev {worst_m:.2e}, "
            f"worst pointwise dev {worst_pt:.2e}",
            time.perf_counter() - t0, 30.0)


def test_04_dipole_discrepancy():
    t0 = time.perf_counter()
    worst = 0.0
    min_residual = np.inf
    for rho in FORM_FACTORS:
        for window in WINDOWS:
            rep = gauge_compare(DIPOLE, rho, window)
            worst = max(worst, abs(rep.log_ratio - 1.5))
            min_residual = min(min_residual, rep.conservation_residual)
    ok = worst <= 1e-8 and min_residual > 0.0
    _report(4, ok, f"dipole ratio 3/2, worst dev {worst:.2e}, "
            f"min conservation residual {min_residual:.2e}",
            time.perf_counter() - t0, 5.0)


def test_05_degenerate_kinematics():
    t0 = time.perf_counter()
    worst = 0.0
    cases = (
        ScatteringKinematics.bn(charge=0.3, u_in=(0.0, 0.0, 0.4),
                                u_out=(0.0, 0.0, 0.4)),
        ScatteringKinematics.dipole(charge=0.3, mass=1.0,
                                    p_in=(0.0, 0.0, 0.05),
                                    p_out=(0.0, 0.0, 0.05)),
    )
    for kin in cases:
        for gauge in ("FGB", "Coulomb"):
            worst = max(worst, abs(m_exponent(kin, gauge, SHARP,
                                              WINDOW).total))
    _report(5, worst <= 1e-10, f"degenerate exponents, worst |M| {worst:.2e}",
            time.perf_counter() - t0, 1.0)


def test_06_exponentiation_oracle():
    t0 = time.perf_counter()
    grid = ModeGrid.radial(WINDOW, 3, "FGB")
    kin = ScatteringKinematics.bn(charge=0.45, u_in=(0.0, 0.0, 0.0),
                                  u_out=(0.0, 0.0, 0.8))
    F = fock_channels(grid, displacement_profile_grid(kin, "FGB", SHARP,
                                                      WINDOW, grid))
    intensity = kin.charge ** 2 * float(
        np.sum(grid.node_weights() * np.abs(F.ravel()) ** 2))
    assert intensity <= 0.5
    m_grid = m_exponent_grid(kin, "FGB", SHARP, WINDOW, grid)
    val = displacement_vacuum_channelwise(F, kin.charge, grid, 12)
    agree = abs(val - np.exp(m_grid))
    # worst case of the stated domain: all intensity in one channel
    f = np.zeros(grid.n_channels, dtype=complex)
    f[3] = np.sqrt(0.5 / grid.weights[0])
    dev8 = displacement_truncation_deviation(f, 1.0, grid, 8)
    dev16 = displacement_truncation_deviation(f, 1.0, grid, 16)
    shrink = dev8 / dev16
    ok = agree <= 1e-8 and shrink >= 1e3
    _report(6, ok, f"exponentiation, cap-12 agreement {agree:.2e}, "
            f"8->16 shrink x{shrink:.1e}", time.perf_counter() - t0, 60.0)


def test_07_renormalization_ledger():
    t0 = time.perf_counter()
    ledger = renormalization_ledger(FourVelocity.rest(), (1e-1, 1e-2, 1e-3),
                                    SHARP, WINDOW, charge=0.3)
    imags = [abs(r.total.imag) for r in ledger.rows]
    ok = (ledger.relative_error <= 1e-4
          and ledger.extrapolated.imag == 0.0
          and imags[0] > imags[1] > imags[2])
    _report(7, ok, f"ladder extrapolation, relative error "
            f"{ledger.relative_error:.2e}, imag slope {ledger.imag_slope:.2e}",
            time.perf_counter() - t0, 30.0)


def test_08_emission_factorization():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    kin_bn = ScatteringKinematics.bn(charge=0.3, u_in=(0.0, 0.0, 0.0),
                                     u_out=(0.0, 0.0, 0.5))
    cases = (
        ("FGB", ModeGrid.radial(WINDOW, 1, "FGB"), kin_bn, (1, 4)),
        ("Coulomb", ModeGrid.radial(WINDOW, 2, "Coulomb"), DIPOLE, (2, 3)),
    )
    for gauge, grid, kin, shape in cases:
        photons = [PhotonSmearing(grid, 0.5 * (rng.normal(size=shape)
                                               + 1j * rng.normal(size=shape)))
                   for _ in range(3)]
        for n in (1, 2, 3):
            rep = full_amplitude(kin, gauge, photons[:n], SHARP, WINDOW,
                                 oracle_cap=7)
            scale = max(1.0, abs(rep.oracle_grid_total))
            worst = max(worst, abs(rep.oracle_value
                                   - rep.oracle_grid_total) / scale)
    gauge_grid = ModeGrid.radial(WINDOW, 3, "FGB", direction=(0.2, -0.3, 0.9))
    null = PhotonSmearing.pure_gauge(gauge_grid,
                                     np.array([1.0 + 0.5j, -0.3, 0.8j]))
    bn_null = abs(emission_factor(kin_bn, "FGB", null, SHARP, WINDOW))
    dip_null = abs(emission_factor(DIPOLE, "FGB", null, SHARP, WINDOW))
    ok = worst <= 1e-6 and bn_null <= 1e-15 and dip_null > 1e-8
    _report(8, ok, f"factorization, worst oracle dev {worst:.2e}, "
            f"null factors bn {bn_null:.1e} dipole {dip_null:.1e}",
            time.perf_counter() - t0, 60.0)


def test_09_operator_algebra_suite():
    t0 = time.perf_counter()
    # signed commutation relations, exact up to roundoff
    fgb = ModeGrid([(0.0, 0.0, 0.5)], [0.8], "FGB")
    space = TruncatedFockSpace(fgb, 3)
    mask = space.below_cap_mask(margin=1)
    sub = np.ix_(mask, mask)
    ccr_dev = 0.0
    signs = fgb.channel_signs()
    for c in range(4):
        for d in range(4):
            unit_c = np.zeros(4, dtype=complex)
            unit_d = np.zeros(4, dtype=complex)
            unit_c[c] = 1.0 / np.sqrt(0.8)
            unit_d[d] = 1.0 / np.sqrt(0.8)
            comm = (space.annihilation_operator(unit_c)
                    @ space.creation_operator(unit_d)
                    - space.creation_operator(unit_d)
                    @ space.annihilation_operator(unit_c)).toarray()
            expected = (signs[c] if c == d else 0.0) * np.eye(space.dim)
            ccr_dev = max(ccr_dev, np.abs(comm[sub] - expected[sub]).max())

    # central-term exponential splitting at deep truncation
    coul = ModeGrid([(0.0, 0.0, 0.5)], [0.7], "Coulomb")
    deep = TruncatedFockSpace(coul, 14)
    bch_dev = bch_check(np.array([[0.6, -0.3 + 0.2j]]),
                        np.array([[0.4j, 0.5]]), 0.8, deep)

    # Weyl vacuum expectation against the closed form
    wgrid = ModeGrid([(0.0, 0.0, 0.5)], [0.9], "FGB")
    wspace = TruncatedFockSpace(wgrid, 5)
    g = np.array([[0.3, 0.1, -0.2, 0.25]])
    h = np.array([[-0.1, 0.2, 0.15, 0.0]])
    W = weyl_operator(g, h, wspace)
    vac = wspace.vacuum()
    closed = np.exp(0.25 * (wgrid.signed_product(g, g)
                            + wgrid.signed_product(h, h)))
    weyl_dev = abs(wspace.eta_product(vac, W @ vac) - closed) / abs(closed)

    # physical-subspace isometry, one- and two-photon
    rng = np.random.default_rng(9)
    pgrid = ModeGrid([(0.0, 0.2, 0.4), (0.3, -0.1, 0.2)], [0.5, 0.4], "FGB")
    nodes = np.asarray(pgrid.nodes)
    khat = nodes / np.linalg.norm(nodes, axis=1)[:, None]

    def physical():
        spatial = (rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3)))
        temporal = np.einsum("ij,ij->i", khat, spatial)[:, None]
        return PhotonSmearing(pgrid, np.concatenate([temporal, spatial],
                                                    axis=1))

    f1, f2 = physical(), physical()
    one = abs(minus_product(f1, f1)
              - coulomb_product(t_map(f1), t_map(f1), pgrid))
    one /= abs(minus_product(f1, f1))
    two_m = product_inner((f1, f2), (f1, f2), minus_product)
    two_c = product_inner((t_map(f1), t_map(f2)), (t_map(f1), t_map(f2)),
                          lambda a, b: coulomb_product(a, b, pgrid))
    two = abs(two_m - two_c) / abs(two_c)

    # null states quotient to zero bitwise on dyadic nodes
    dyadic = ModeGrid([(0.0, 0.0, 0.5), (0.25, 0.0, 0.0),
                       (0.0, 0.75, 0.0)], [0.4, 0.3, 0.2], "FGB")
    null = PhotonSmearing.pure_gauge(dyadic, np.array([1.0 + 2.0j,
                                                       -0.5, 0.125j]))
    null_exact = bool(np.all(t_map(null) == 0.0))

    ok = (ccr_dev <= 1e-14 and bch_dev < 1e-9 and weyl_dev <= 1e-8
          and one <= 1e-12 and two <= 1e-12 and null_exact)
    _report(9, ok, f"algebra suite, ccr {ccr_dev:.1e}, bch {bch_dev:.1e}, "
            f"weyl {weyl_dev:.1e}, isometry {max(one, two):.1e}, "
            f"null exact {null_exact}", time.perf_counter() - t0, 60.0)


def test_10_cli_contract(tmp_path):
    t0 = time.perf_counter()
    base = {
        "model": "BN",
        "gauge": ["FGB", "Coulomb"],
        "form_factor": {"kind": "sharp", "params": {"lam": 0.1, "Lam": 1.0}},
        "kinematics": {"charge": 0.3, "u_in": [0.0, 0.0, 0.0],
                       "u_out": [0.0, 0.0, 0.5]},
        "window": {"lambda": 0.1, "Lambda": 1.0},
        "lambda_sweep": [0.1, 0.3],
        "seed": 11,
        "output": {"format": "json", "path": str(tmp_path / "r.json")},
    }

    def write(name, **overrides):
        doc = json.loads(json.dumps(base))
        doc.update(overrides)
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path

    cfg = write("c.json")
    runs = []
    for tag in ("a", "b"):
        out = tmp_path / f"corr_{tag}.json"
        assert cli_main(["corrections", str(cfg), "--out", str(out)]) == 0
        runs.append(out.read_bytes())
    sweeps = []
    for tag in ("a", "b"):
        out = tmp_path / f"sweep_{tag}.csv"
        assert cli_main(["gauge-check", str(cfg), "--out", str(out),
                         ]) == 0
        sweeps.append(out.read_bytes())
    deterministic = runs[0] == runs[1] and sweeps[0] == sweeps[1]

    bad_kin = write("bad.json", kinematics={"charge": 0.3,
                                            "u_in": [0.0, 0.0, 0.0],
                                            "u_out": [0.0, 0.0, 1.2]})
    code_config = cli_main(["corrections", str(bad_kin)])
    low_cap = write("low.json", gauge="Coulomb", fock={"nodes": 1, "cap": 2})
    code_verify = cli_main(["fock-verify", str(low_cap)])
    blowup = write("blow.json", form_factor={
        "kind": "tabulated",
        "params": {"k": [0.1, 1.0], "values": [1e300, 1e300]}})
    with np.errstate(over="ignore", invalid="ignore"):
        code_numerical = cli_main(["corrections", str(blowup)])

    ok = (deterministic and code_config == 2 and code_verify == 1
          and code_numerical == 3)
    _report(10, ok, f"cli determinism {deterministic}, exit codes "
            f"config={code_config} verify={code_verify} "
            f"numeric={code_numerical}", time.perf_counter() - t0, 10.0)
