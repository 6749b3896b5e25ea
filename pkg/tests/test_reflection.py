import numpy as np
import pytest

from irsim import reflection
from irsim.reflection import (CircuitParams, FrequencyPlan, DEFAULT_CIRCUIT,
                              DEFAULT_FREQUENCIES, PartitionOverlapError,
                              ReflectionState, impedance,
                              partition_capacitance, practical_reflection,
                              random_state, reflection_coefficient,
                              reflection_matrix, wrap_phase)

# Frozen oracle values, computed with 50-digit arithmetic from the circuit
# definition (parallel L1 against the L2-C-R series branch).
Z_ORACLE = 293.738182078544194 - 521.976661937888139j       # C=1.5pF, f=2.345GHz
THETA_ORACLE = -0.417466022900261717 + 0.819250607123677593j  # C=1.0pF, f=2.605GHz


def test_impedance_oracle():
    z = impedance(DEFAULT_CIRCUIT, 1.5e-12, 2.345e9)
    assert abs(z - Z_ORACLE) / abs(Z_ORACLE) < 1e-12


def test_reflection_oracle():
    th = reflection_coefficient(DEFAULT_CIRCUIT, 1.0e-12, 2.605e9)
    assert abs(th - THETA_ORACLE) < 1e-12


def test_lossless_reflection_unit_modulus():
    lossless = CircuitParams(R=0.0)
    C = np.linspace(0.6e-12, 5e-12, 40)
    f = np.linspace(1.6e9, 2.8e9, 25)
    mags = np.abs(reflection_coefficient(lossless, C[:, None], f[None, :]))
    assert mags.size == 1000
    assert np.all(np.abs(mags - 1.0) <= 1e-9)


def test_impedance_rejects_nonpositive_inputs():
    with pytest.raises(ValueError):
        impedance(DEFAULT_CIRCUIT, -1e-12, 2e9)
    with pytest.raises(ValueError):
        impedance(DEFAULT_CIRCUIT, 1e-12, 0.0)


def test_wrap_phase_half_open_interval():
    assert wrap_phase(0.0) == 2 * np.pi
    assert wrap_phase(2 * np.pi) == 2 * np.pi
    assert abs(wrap_phase(-np.pi / 2) - 1.5 * np.pi) < 1e-12
    arr = wrap_phase(np.array([0.0, 4 * np.pi, np.pi]))
    assert arr[0] == 2 * np.pi and arr[1] == 2 * np.pi and arr[2] == np.pi


def test_frequency_plan_requires_descending():
    FrequencyPlan(DEFAULT_FREQUENCIES)
    with pytest.raises(ValueError):
        FrequencyPlan((1.885e9, 2.345e9))
    with pytest.raises(ValueError):
        FrequencyPlan(())


class TestPartition:
    def test_default_plan_structure(self):
        part = partition_capacitance(DEFAULT_CIRCUIT, FrequencyPlan(DEFAULT_FREQUENCIES))
        assert len(part.intervals) == 3
        lo_sweep, hi_sweep = part.sweep_range
        for lo, hi in part.intervals:
            assert lo_sweep <= lo < hi <= hi_sweep
        ordered = sorted(part.intervals)
        for (_, hi), (lo, _) in zip(ordered, ordered[1:]):
            assert hi <= lo + 1e-18
        # Higher carrier frequency tunes on smaller capacitances.
        lows = [iv[0] for iv in part.intervals]
        assert lows == sorted(lows)

    def test_gray_set_complements_intervals(self):
        part = partition_capacitance(DEFAULT_CIRCUIT, FrequencyPlan(DEFAULT_FREQUENCIES))
        pieces = sorted(list(part.intervals) + list(part.gray))
        assert abs(pieces[0][0] - part.sweep_range[0]) < 1e-18
        assert abs(pieces[-1][1] - part.sweep_range[1]) < 1e-18
        for (_, hi), (lo, _) in zip(pieces, pieces[1:]):
            assert abs(hi - lo) < 1e-18

    def test_excessive_overlap_raises(self):
        with pytest.raises(PartitionOverlapError):
            partition_capacitance(DEFAULT_CIRCUIT, FrequencyPlan(DEFAULT_FREQUENCIES),
                                  span_fraction=0.95)

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            partition_capacitance(DEFAULT_CIRCUIT, FrequencyPlan(DEFAULT_FREQUENCIES),
                                  points=100)


class TestReflectionState:
    def test_no_service_gives_all_ones(self):
        state = ReflectionState(np.full((2, 4), np.pi), np.zeros((2, 4), int))
        for s in range(2):
            assert np.allclose(practical_reflection(state, s), 1.0)

    def test_half_turn_phase(self):
        phi = np.full((1, 1), np.pi)
        a = np.ones((1, 1), int)
        state = ReflectionState(phi, a)
        assert abs(practical_reflection(state, 0)[0] + 1.0) < 1e-12

    def test_matches_elementwise_exponential(self):
        rng = np.random.default_rng(7)
        state = random_state(3, 4, rng)
        mat = reflection_matrix(state)
        for s in range(3):
            for m in range(4):
                expect = np.exp(1j * state.phi[s, m] * state.a[s, m])
                assert abs(mat[s, m] - expect) < 1e-14

    def test_unit_modulus(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            state = random_state(3, 8, rng)
            assert np.all(np.abs(np.abs(reflection_matrix(state)) - 1.0) <= 1e-12)

    def test_selection_exclusivity_enforced(self):
        phi = np.full((2, 2), np.pi)
        a = np.array([[1, 0], [1, 0]])
        with pytest.raises(ValueError):
            ReflectionState(phi, a)

    def test_phase_range_enforced(self):
        with pytest.raises(ValueError):
            ReflectionState(np.zeros((1, 1)), np.ones((1, 1), int))
        with pytest.raises(ValueError):
            ReflectionState(np.full((1, 1), 2 * np.pi + 0.1), np.ones((1, 1), int))

    def test_random_state_feasible(self):
        rng = np.random.default_rng(3)
        for allow in (True, False):
            st = random_state(4, 10, rng, allow_unserved=allow)
            sums = st.a.sum(axis=0)
            assert np.all(sums <= 1)
            if not allow:
                assert np.all(sums == 1)
