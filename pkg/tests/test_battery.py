"""
Tests du modèle de batterie à trois constantes de temps
"""
import math

import numpy as np
import pytest

from app.core.exceptions import InfeasibleError
from app.core.models import BaseQuantities, BatteryState, TTCParams
from app.services.battery_service import battery_service

BASE = BaseQuantities()
PARAMS = TTCParams()
FLAT = TTCParams(c_max_table=((0.0, 800.0), (1.0, 800.0)))


def state(soc: float = 0.5, vc=(0.0, 0.0, 0.0), v_dc: float = 1.0, i_prev: float = 0.0) -> BatteryState:
    return BatteryState(soc=soc, vc=vc, v_dc=v_dc, i_prev=i_prev)


# --- Tension à vide et capacité ---

@pytest.mark.parametrize("soc, expected", [(0.0, 0.90), (0.5, 0.975), (1.0, 1.05)])
def test_ocv(soc, expected):
    assert battery_service.ocv(soc, PARAMS) == pytest.approx(expected)


@pytest.mark.parametrize("i, expected", [(0.75, 790.0), (0.5, 800.0), (1.4, 780.0), (-0.75, 790.0), (0.0, 800.0)])
def test_c_max_lookup(i, expected):
    params = TTCParams(c_max_table=((0.5, 800.0), (1.0, 780.0)))
    assert battery_service.c_max_lookup(i, params) == pytest.approx(expected)


def test_branch_gain_follows_sign():
    assert battery_service.p_dc_of_p_ac(0.5, 0.5, 0.95) == pytest.approx(0.5 / 0.95)
    assert battery_service.p_dc_of_p_ac(-0.5, -0.5, 0.95) == pytest.approx(-0.475)
    assert battery_service.p_dc_of_p_ac(0.0, 0.0, 0.95) == 0.0


# --- Condensateurs ---

def test_vc_decays_with_time_constant():
    # τ1 = R1·C1 = 0.1 s
    vc = battery_service.update_vc(state(vc=(0.1, 0.0, 0.0)), PARAMS, 0.1)
    assert vc[0] == pytest.approx(0.1 * math.exp(-1.0), abs=1e-12)
    assert vc[1:] == (0.0, 0.0)


def test_vc_step_response():
    vc = battery_service.update_vc(state(), PARAMS, 0.1, p_dc=1.0)
    assert vc[0] == pytest.approx(0.01 * (1.0 - math.exp(-1.0)), abs=1e-15)
    assert vc[1] == pytest.approx(0.01 * (1.0 - math.exp(-0.1)), abs=1e-15)


def test_vc_reaches_steady_state():
    vc = battery_service.update_vc(state(vc=(0.3, -0.2, 0.1)), PARAMS, 1e6, p_dc=0.5)
    # i = 0.5 pu -> R_k·i = 0.005
    assert vc == pytest.approx((0.005, 0.005, 0.005), abs=1e-12)


@pytest.mark.parametrize("p_dc", [0.0, 0.8, -0.6])
def test_two_half_steps_equal_one_step(p_dc):
    start = state(vc=(0.02, -0.01, 0.005))
    whole = battery_service.update_vc(start, PARAMS, 0.05, p_dc)
    half = battery_service.update_vc(start, PARAMS, 0.025, p_dc)
    halves = battery_service.update_vc(start.model_copy(update={"vc": half}), PARAMS, 0.025, p_dc)
    assert halves == pytest.approx(whole, abs=1e-12)


def test_vc_rejects_non_positive_step():
    with pytest.raises(ValueError):
        battery_service.update_vc(state(), PARAMS, 0.0)


# --- Tension du bus DC ---

def test_vdc_at_rest_is_open_circuit_voltage():
    assert battery_service.solve_vdc((0.0, 0.0, 0.0), 0.5, 0.0, PARAMS) == pytest.approx(0.975, abs=1e-15)


def test_vdc_example():
    params = TTCParams(a=1.0, b=0.0)
    v = battery_service.solve_vdc((0.02, 0.0, 0.0), 0.5, 0.5, params)
    assert v == pytest.approx((0.98 + math.sqrt(0.98 ** 2 - 0.08)) / 2.0, abs=1e-15)
    assert v == pytest.approx(0.95915, abs=1e-5)


def test_vdc_without_real_root():
    with pytest.raises(InfeasibleError) as excinfo:
        battery_service.solve_vdc((0.0, 0.0, 0.0), 0.5, 10.0, PARAMS)
    assert excinfo.value.reason == "discriminant"


def test_vdc_below_bound():
    with pytest.raises(InfeasibleError) as excinfo:
        battery_service.solve_vdc((0.0, 0.0, 0.0), 0.5, 3.0, PARAMS)
    assert excinfo.value.reason == "bounds"


@pytest.mark.parametrize("p_dc", np.linspace(-2.0, 2.0, 21))
def test_vdc_solves_bus_equation(p_dc):
    vc = (0.01, -0.004, 0.002)
    v = battery_service.solve_vdc(vc, 0.5, p_dc, PARAMS)
    c = battery_service.ocv(0.5, PARAMS) - sum(vc)
    assert v * v - c * v + PARAMS.r_s * p_dc == pytest.approx(0.0, abs=1e-12)
    # Chute de tension série au plus égale à la tension du bus
    assert v >= p_dc * PARAMS.r_s / v


def test_vdc_decreases_with_power():
    powers = np.linspace(-2.0, 2.0, 41)
    voltages = [battery_service.solve_vdc((0.0, 0.0, 0.0), 0.5, p, PARAMS) for p in powers]
    assert all(b <= a for a, b in zip(voltages, voltages[1:]))


def test_upper_root_is_vectorized():
    roots = battery_service.upper_root(0.975, 0.04, np.array([0.0, 0.5, 100.0]))
    assert roots[0] == pytest.approx(0.975)
    assert roots[1] == pytest.approx(battery_service.solve_vdc((0.0, 0.0, 0.0), 0.5, 0.5, PARAMS))
    assert math.isnan(roots[2])


# --- État de charge ---

def test_soc_step_example():
    soc, violated = battery_service.soc_step(state(), 1.0, 1.0, 0.05, PARAMS, BASE)
    assert soc == pytest.approx(0.4999821, abs=1e-7)
    assert not violated


def test_soc_unchanged_at_zero_power():
    soc, violated = battery_service.soc_step(state(soc=0.37), 0.0, 1.0, 0.05, PARAMS, BASE)
    assert soc == 0.37
    assert not violated


def test_charging_raises_soc():
    soc, _ = battery_service.soc_step(state(), -1.0, 1.0, 0.05, PARAMS, BASE)
    assert soc > 0.5


def test_soc_is_clamped_and_flagged():
    # Une heure à 1 pu : ΔSoC = -1028.6 A·h / 800 A·h
    soc, violated = battery_service.soc_step(state(), 1.0, 1.0, 3600.0, PARAMS, BASE)
    assert soc == 0.0
    assert violated


def test_power_bounds_at_soc_max():
    p_min, p_max = battery_service.soc_power_bounds(state(soc=0.9), PARAMS, 0.1, BASE)
    assert p_min == 0.0
    assert p_max > 0.0


def test_power_bounds_at_soc_min():
    p_min, p_max = battery_service.soc_power_bounds(state(soc=0.1), PARAMS, 0.1, BASE)
    assert p_max == 0.0
    assert p_min < 0.0


def test_power_bounds_are_wide_mid_range():
    p_min, p_max = battery_service.soc_power_bounds(state(soc=0.5), PARAMS, 0.1, BASE)
    assert p_max > 1.2
    assert p_min < -1.2


@pytest.mark.parametrize("soc", [0.3, 0.5, 0.88])
def test_power_bounds_reach_soc_limits_at_lowest_voltage(soc):
    start = state(soc=soc, v_dc=0.97)
    p_min, p_max = battery_service.soc_power_bounds(start, FLAT, 0.1, BASE)
    low, _ = battery_service.soc_step(start, p_max, FLAT.v_dc_min, 0.1, FLAT, BASE)
    high, _ = battery_service.soc_step(start, p_min, FLAT.v_dc_min, 0.1, FLAT, BASE)
    assert low == pytest.approx(FLAT.soc_min, abs=1e-12)
    assert high == pytest.approx(FLAT.soc_max, abs=1e-12)


def test_power_bounds_use_smallest_capacity():
    params = TTCParams(c_max_table=((0.5, 800.0), (1.0, 780.0)))
    _, p_max = battery_service.soc_power_bounds(state(soc=0.3, i_prev=0.0), params, 0.1, BASE)
    factor = 780.0 * params.v_dc_min / (BASE.i_base * 0.1 / 3600.0)
    assert p_max == pytest.approx((0.3 - params.soc_min) * factor, rel=1e-12)


@pytest.mark.parametrize("margin", [2e-5, 1e-4, 1e-3])
def test_discharge_at_bound_stays_above_soc_min(config, margin):
    # La tension s'effondre pendant la période : le SoC ne doit pas passer sous soc_min
    battery = config.battery
    start = battery_service.rest_state(battery, battery.soc_min + margin)
    _, p_max = battery_service.soc_power_bounds(start, battery, 0.1, BASE)
    p_ac = min(p_max * 0.95, 0.5)
    new, violated = battery_service.apply_power(start, p_ac, 0.95, battery, BASE, 0.1, 0.05)
    assert new.soc >= battery.soc_min
    assert not violated


@pytest.mark.parametrize("margin", [2e-5, 1e-4, 1e-3])
def test_charge_at_bound_stays_below_soc_max(config, margin):
    battery = config.battery
    start = battery_service.rest_state(battery, battery.soc_max - margin)
    p_min, _ = battery_service.soc_power_bounds(start, battery, 0.1, BASE)
    p_ac = max(p_min / 0.95, -0.5)
    new, _ = battery_service.apply_power(start, p_ac, 0.95, battery, BASE, 0.1, 0.05)
    assert new.soc <= battery.soc_max


def test_soc_change_equals_sum_of_increments(rest_state):
    # Pas internes rejoués à la main : chaque incrément de soc_step est comptabilisé
    current = rest_state
    increments = []
    for p_ac in [0.5, 0.5, -0.3, 0.0, 0.8, -1.0]:
        p_dc = battery_service.p_dc_of_p_ac(p_ac, p_ac, 0.95)
        stepped = current
        for _ in range(2):
            vc = battery_service.update_vc(stepped, PARAMS, 0.05, p_dc)
            v_dc = battery_service.solve_vdc(vc, stepped.soc, p_dc, PARAMS)
            soc, _ = battery_service.soc_step(stepped, p_dc, v_dc, 0.05, PARAMS, BASE)
            increments.append(soc - stepped.soc)
            stepped = BatteryState(soc=soc, vc=vc, v_dc=v_dc, i_prev=p_dc / v_dc)
        current, _ = battery_service.apply_power(current, p_ac, 0.95, PARAMS, BASE, 0.1, 0.05)
        assert current.soc == stepped.soc
    assert current.soc - rest_state.soc == pytest.approx(math.fsum(increments), abs=1e-14)


def test_within_soc_limits_tolerance():
    assert battery_service.within_soc_limits(0.9 + 1e-10, PARAMS)
    assert not battery_service.within_soc_limits(0.9 + 1e-6, PARAMS)


# --- Application d'une puissance sur une période ---

def test_rest_state(config):
    rest = battery_service.rest_state(config.battery, 0.5)
    assert rest.v_dc == pytest.approx(0.975, abs=1e-15)
    assert rest.i_prev == 0.0


def test_apply_zero_power_keeps_rest_state(rest_state):
    new, violated = battery_service.apply_power(rest_state, 0.0, 0.95, PARAMS, BASE, 0.1, 0.05)
    assert new.soc == rest_state.soc
    assert new.v_dc == rest_state.v_dc
    assert new.vc == (0.0, 0.0, 0.0)
    assert not violated


def test_apply_discharge(rest_state):
    new, violated = battery_service.apply_power(rest_state, 0.5, 0.95, PARAMS, BASE, 0.1, 0.05)
    assert new.soc < rest_state.soc
    assert new.v_dc < rest_state.v_dc
    assert new.i_prev == pytest.approx((0.5 / 0.95) / new.v_dc)
    assert not violated


def test_apply_charge_uses_efficiency(rest_state):
    new, _ = battery_service.apply_power(rest_state, -0.5, 0.95, PARAMS, BASE, 0.1, 0.05)
    assert new.soc > rest_state.soc
    assert new.i_prev == pytest.approx(-0.475 / new.v_dc)


def test_apply_power_outside_voltage_bounds(rest_state):
    with pytest.raises(InfeasibleError):
        battery_service.apply_power(rest_state, 3.0, 0.95, PARAMS, BASE, 0.1, 0.05)


def test_apply_power_without_bound_check(rest_state):
    new, _ = battery_service.apply_power(rest_state, 3.0, 0.95, PARAMS, BASE, 0.1, 0.05, check_bounds=False)
    assert new.v_dc < PARAMS.v_dc_min


def test_inner_steps_compose(rest_state):
    # 0.1 s en deux pas de 0.05 s puis en quatre pas de 0.025 s
    coarse, _ = battery_service.apply_power(rest_state, 0.5, 0.95, PARAMS, BASE, 0.1, 0.05)
    fine, _ = battery_service.apply_power(rest_state, 0.5, 0.95, PARAMS, BASE, 0.1, 0.025)
    assert fine.soc == pytest.approx(coarse.soc, abs=1e-7)
    assert fine.v_dc == pytest.approx(coarse.v_dc, abs=1e-4)
