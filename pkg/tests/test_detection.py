import pytest
from hypothesis import given, strategies as st

from dcsim.core import DataCenterState, VmState
from dcsim.detection import (MadConfig, find_underloaded, mad,
                             overload_threshold, select_vms_mmt)

CFG = MadConfig()


def test_threshold_constant_history_hits_ceiling():
    # zero dispersion: MAD = 0, threshold clamps at 1.0
    assert overload_threshold([0.5] * 12, CFG) == 1.0


def test_threshold_hand_computed_mad():
    history = [0.2, 0.4, 0.6, 0.8, 1.0]
    assert mad(history) == pytest.approx(0.2)
    cfg = MadConfig(history_window=5)
    assert overload_threshold(history, cfg) == pytest.approx(0.5)


def test_threshold_falls_back_on_short_history():
    assert overload_threshold([0.1, 0.2, 0.3], CFG) == CFG.fallback_threshold


def test_threshold_clamped_to_half():
    cfg = MadConfig(safety=10.0, history_window=5)
    assert overload_threshold([0.0, 0.25, 0.5, 0.75, 1.0], cfg) == 0.5


@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=12, max_size=12),
       st.floats(min_value=-0.2, max_value=0.2))
def test_threshold_depends_only_on_dispersion(history, shift):
    # MAD is location invariant, so shifting the series leaves it unchanged
    shifted = [u + shift for u in history]
    assert overload_threshold(shifted, CFG) == pytest.approx(
        overload_threshold(history, CFG), abs=1e-12)


def mmt_state():
    vms = {
        "A": VmState(id="A", cpu_demand=0.10, ram_used=4096.0),
        "B": VmState(id="B", cpu_demand=0.02, ram_used=1024.0),
        "C": VmState(id="C", cpu_demand=0.06, ram_used=2048.0),
        "rest": VmState(id="rest", cpu_demand=0.77, ram_used=8192.0),
    }
    state = DataCenterState.build(2, vms)
    for vid in vms:
        state.attach(state.vms[vid], 0)
    return state


def test_mmt_worked_selection():
    state = mmt_state()
    host = state.hosts[0]
    assert host.cpu_sum == pytest.approx(0.95)
    # smallest RAM first: B (0.95 -> 0.93), then C (0.93 -> 0.87 < 0.9)
    assert select_vms_mmt(host, 0.9, state) == ["B", "C"]


def test_mmt_empty_below_threshold():
    state = mmt_state()
    assert select_vms_mmt(state.hosts[0], 0.96, state) == []


def test_mmt_single_vm_host():
    vms = {"solo": VmState(id="solo", cpu_demand=0.95, ram_used=512.0)}
    state = DataCenterState.build(1, vms)
    state.attach(state.vms["solo"], 0)
    assert select_vms_mmt(state.hosts[0], 0.9, state) == ["solo"]


@given(st.lists(st.tuples(st.floats(min_value=0.01, max_value=0.4),
                          st.floats(min_value=64.0, max_value=4096.0)),
                min_size=1, max_size=8))
def test_mmt_projection_drops_below_threshold(vm_specs):
    vms = {f"v{i}": VmState(id=f"v{i}", cpu_demand=d, ram_used=r)
           for i, (d, r) in enumerate(vm_specs)}
    state = DataCenterState.build(1, vms)
    for vid in vms:
        state.attach(state.vms[vid], 0)
    threshold = 0.5
    picked = select_vms_mmt(state.hosts[0], threshold, state)
    remaining = sum(vm.cpu_demand for vid, vm in state.vms.items()
                    if vid not in picked)
    if state.hosts[0].cpu_sum >= threshold:
        assert remaining < threshold


def underload_state(utils, vms_per_host=2):
    vms = {}
    state = DataCenterState.build(len(utils), setpoint=291.0)
    for i, u in enumerate(utils):
        for j in range(vms_per_host):
            vm = VmState(id=f"h{i}v{j}", cpu_demand=u / vms_per_host,
                         ram_used=128.0)
            state.vms[vm.id] = vm
            state.attach(vm, i)
    return state


def test_no_spare_capacity_means_no_underload():
    state = underload_state([0.85, 0.85, 0.85])
    thresholds = {h.id: 0.9 for h in state.hosts}
    assert find_underloaded(state, thresholds=thresholds) == []


def test_lightly_loaded_host_is_drainable():
    state = underload_state([0.05, 0.3, 0.3])
    thresholds = {h.id: 0.9 for h in state.hosts}
    assert 0 in find_underloaded(state, thresholds=thresholds)


def test_empty_data_center():
    state = DataCenterState.build(0)
    assert find_underloaded(state) == []


def test_underloaded_sorted_ascending_and_respects_exclude():
    state = underload_state([0.3, 0.1, 0.2])
    thresholds = {h.id: 0.95 for h in state.hosts}
    found = find_underloaded(state, thresholds=thresholds)
    utils = [state.hosts[i].u_cpu for i in found]
    assert utils == sorted(utils)
    assert 1 not in find_underloaded(state, exclude={1}, thresholds=thresholds)


def test_mad_config_validation():
    with pytest.raises(ValueError):
        MadConfig(safety=0.0)
    with pytest.raises(ValueError):
        MadConfig(history_window=0)
