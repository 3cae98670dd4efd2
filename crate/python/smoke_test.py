"""Smoke test for the dnp_kinetics Python extension.

Build and install first, for example:
    pip install maturin && maturin build -m crates/py/Cargo.toml --release
    pip install target/wheels/dnp_kinetics-*.whl
"""

import math

import dnp_kinetics as dk

G = 2.00087006
FIELD = 8.57
MW = 240_000.0


def main():
    sys = dk.SpinSystem(1.5, 1.0, G, 3.074679, 15.76)
    levels = dk.EnergyLevels(sys, FIELD)
    assert len(levels) == 12

    lines = sorted(f for _, group in sys.endor_frequencies(FIELD) for f, _ in group)
    for got, want in zip(lines, [2.7, 18.5, 34.2, 50.0]):
        assert abs(got - want) < 0.15, lines

    target = sys.high_field_mi(MW)
    assert target == -1.0
    thermal = levels.thermal(4.0)
    m = dk.metrics(levels, thermal, 4.0)
    assert abs(dict(m.manifold_fractions)[target] - 0.3331) < 5e-4
    assert m.enhancement_eps == 1.0

    model = dk.RateModel(270.0, 4.0)
    traj = dk.ponsee_cw(levels, model, target, 2700.0)
    frac = [sum(p[k] for k in levels.manifold(target)) for p in traj.states]
    assert all(b < a for a, b in zip(frac, frac[1:]))
    assert frac[-1] < 0.08

    half = dk.SpinSystem(0.5, 0.5, G, 3.0, 0.0)
    lv = dk.EnergyLevels(half, FIELD)
    run = dk.ponsepe(lv, model, half.high_field_mi(half.nu_e(FIELD)), 1, inter_cycle_wait_s=0.0)
    x = half.nu_e(FIELD) * 4.799243073366221e-5 / 4.0
    assert abs(dk.metrics(lv, run.final_state, 4.0).nuclear_polarization - math.tanh(x / 2)) < 1e-9

    centers = [f for _, f in sys.epr_lines(MW)]
    spec = dk.simulate_epr(levels, thermal, MW, (centers[0] - 1.5, centers[-1] + 1.5))
    assert abs(spec.component_areas(centers)[2] - 0.3331) < 5e-4

    try:
        dk.SpinSystem(0.7, 1.0, G, 3.0, 15.0)
    except ValueError as e:
        assert "invalid_spin" in str(e)
    else:
        raise AssertionError("invalid spin accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
