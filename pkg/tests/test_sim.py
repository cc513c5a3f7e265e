import numpy as np
import pytest

from surfacesim.lattice import build_lattice, standard_schedule
from surfacesim.noise import ErrorModel, I, PauliOp, X, Y, Z, preset, trial_rng
from surfacesim.sim import (
    PauliFrame, SyndromeHistory, compile_circuit, detection_events,
    events_to_text, inject_error, make_injection, simulate_window,
)


@pytest.fixture(scope="module")
def circuit_d3():
    lat = build_lattice(3)
    return compile_circuit(lat, standard_schedule(lat))


@pytest.fixture(scope="module")
def circuit_d5():
    lat = build_lattice(5)
    return compile_circuit(lat, standard_schedule(lat))


def test_noiseless_window_has_constant_signs(circuit_d3):
    model = ErrorModel(0, 0, 0)
    res = simulate_window(circuit_d3, model, trial_rng(0, 0), rounds=8)
    for graph in ("x", "z"):
        assert not res.history.signs[graph].any()
    assert detection_events(res.history) == []
    assert not res.frame.x.any() and not res.frame.z.any()


def test_noiseless_any_distance_and_rounds():
    for d, rounds in [(3, 3), (5, 6)]:
        lat = build_lattice(d)
        circ = compile_circuit(lat, standard_schedule(lat))
        res = simulate_window(circ, preset("standard", 0.0), trial_rng(1, 0), rounds)
        assert detection_events(res.history) == []


def test_single_data_x_flips_two_z_stabilizers(circuit_d3):
    lat = circuit_d3.lattice
    # Bulk data qubit (2, 2): Z-stabilizer neighbors east and west.
    cell = lat.index((2, 2))
    inj = make_injection([(2, "idle6", cell, X)])
    res = simulate_window(circuit_d3, ErrorModel(0, 0, 0), None, rounds=6,
                          injections=inj)
    events = detection_events(res.history)
    assert sorted((e.graph, e.i, e.j, e.t) for e in events) == [
        ("z", 2, 1, 3), ("z", 2, 3, 3)]
    # Signs stay flipped from round 3 onward.
    signs = res.history.signs["z"]
    a = lat.z_stabilizers.index((2, 1))
    assert list(signs[a]) == [0, 0, 0, 1, 1, 1, 1, 1]


def test_single_data_z_flips_two_x_stabilizers(circuit_d3):
    lat = circuit_d3.lattice
    # Bulk data qubit (2, 2): X-stabilizer neighbors north and south.
    cell = lat.index((2, 2))
    inj = make_injection([(2, "idle6", cell, Z)])
    res = simulate_window(circuit_d3, ErrorModel(0, 0, 0), None, rounds=6,
                          injections=inj)
    events = detection_events(res.history)
    assert sorted((e.graph, e.i, e.j, e.t) for e in events) == [
        ("x", 1, 2, 3), ("x", 3, 2, 3)]


def test_measurement_flip_gives_double_temporal_event(circuit_d3):
    lat = circuit_d3.lattice
    cell = lat.index((2, 1))
    inj = make_injection([(3, "meas", cell, None)])
    res = simulate_window(circuit_d3, ErrorModel(0, 0, 0), None, rounds=7,
                          injections=inj)
    events = detection_events(res.history)
    assert sorted((e.graph, e.i, e.j, e.t) for e in events) == [
        ("z", 2, 1, 3), ("z", 2, 1, 4)]


def test_inject_error_identity_and_involution(circuit_d3):
    frame = PauliFrame.zeros(circuit_d3.n_cells)
    inject_error(frame, 12, I)
    assert not frame.x.any() and not frame.z.any()
    inject_error(frame, 12, X)
    inject_error(frame, 12, X)
    assert not frame.x.any() and not frame.z.any()
    inject_error(frame, 12, Y)
    assert frame.x[12] == 1 and frame.z[12] == 1
    with pytest.raises(ValueError):
        inject_error(frame, 10**6, X)


def test_frame_linearity(circuit_d5):
    # Window with injected errors E1 | E2 equals XOR of separate windows.
    lat = circuit_d5.lattice
    rng = np.random.default_rng(11)
    cells = [lat.index(c) for c in lat.data_qubits]
    ops = [X, Y, Z]
    for _ in range(10):
        picks = rng.choice(len(cells), size=4, replace=False)
        paulis = [ops[int(k)] for k in rng.integers(0, 3, 4)]
        entries = [(int(rng.integers(1, 4)), "idle6", cells[p], op)
                   for p, op in zip(picks, paulis)]
        e1, e2 = entries[:2], entries[2:]
        model = ErrorModel(0, 0, 0)
        f_both = simulate_window(circuit_d5, model, None, 5,
                                 injections=make_injection(e1 + e2)).frame
        f1 = simulate_window(circuit_d5, model, None, 5,
                             injections=make_injection(e1)).frame
        f2 = simulate_window(circuit_d5, model, None, 5,
                             injections=make_injection(e2)).frame
        assert np.array_equal(f_both.x, f1.x ^ f2.x)
        assert np.array_equal(f_both.z, f1.z ^ f2.z)


def test_detection_events_from_constructed_history(circuit_d3):
    lat = circuit_d3.lattice
    nz, nx = circuit_d3.n_z, circuit_d3.n_x
    signs = {"z": np.zeros((nz, 5), dtype=np.uint8),
             "x": np.zeros((nx, 5), dtype=np.uint8)}
    hist = SyndromeHistory(lattice=lat, signs=signs, noisy_rounds=3)
    assert detection_events(hist) == []

    signs["z"][0, :] = [0, 0, 1, 1, 1]
    events = detection_events(hist)
    assert [(e.graph, e.t) for e in events] == [("z", 2)]

    signs["z"][0, :] = 0
    signs["x"][1, :3] = [0, 1, 0]
    events = detection_events(hist)
    assert sorted((e.graph, e.t) for e in events) == [("x", 1), ("x", 2)]


def test_windows_reproducible(circuit_d3):
    model = preset("standard", 0.05)
    r1 = simulate_window(circuit_d3, model, trial_rng(9, 3), rounds=10)
    r2 = simulate_window(circuit_d3, model, trial_rng(9, 3), rounds=10)
    assert np.array_equal(r1.history.signs["z"], r2.history.signs["z"])
    assert np.array_equal(r1.history.signs["x"], r2.history.signs["x"])
    assert np.array_equal(r1.frame.x, r2.frame.x)


def test_event_trace_format(circuit_d3):
    lat = circuit_d3.lattice
    inj = make_injection([(2, "meas", lat.index((2, 1)), None)])
    res = simulate_window(circuit_d3, ErrorModel(0, 0, 0), None, rounds=4,
                          injections=inj)
    text = events_to_text(detection_events(res.history))
    assert text.splitlines() == ["z 2 1 2", "z 2 1 3"]


@pytest.mark.parametrize("graph", ["x", "z"])
def test_every_single_fault_makes_at_most_two_events(circuit_d3, graph):
    # Exhaustive over single Pauli components on every location at d=3;
    # the d=5 sweep happens in the edge-analysis tests.
    from surfacesim.edge_analysis import enumerate_processes, propagate_process

    model = preset("standard", 0.01)
    for proc in enumerate_processes(circuit_d3, model):
        if proc.graph != graph:
            continue
        events = propagate_process(circuit_d3, proc)
        assert len(events) <= 2
