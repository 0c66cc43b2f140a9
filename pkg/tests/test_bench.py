import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskwfs.bench import (
    BenchRow,
    align_phase,
    backprop_diameter_check,
    curve_files,
    format_bench_table,
    measure_diameter,
    parse_bench_table,
    pinhole_grid,
    rmse_intensity,
    rmse_phase,
    run_snr_sweep,
    simulate_pinhole,
    time_retrieval,
)
from maskwfs.dataset import DEFAULT_NOISE_LEVELS, GenConfig, generate_object, object_seed
from maskwfs.optics import ComplexField, Grid, angular_spectrum_propagate, multislice_mask_transit


def _field(grid, rng):
    return ComplexField(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


# --- metrics -----------------------------------------------------------------------

def test_rmse_intensity_cases(small_grid, rng):
    a, b = _field(small_grid, rng), _field(small_grid, rng)
    region = rng.random(small_grid.shape) > 0.3
    assert rmse_intensity(a, a, region) == 0
    assert rmse_intensity(a, b, region) == rmse_intensity(b, a, region) > 0
    zero = ComplexField(small_grid, np.zeros(small_grid.shape))
    ia = np.abs(a.values[region]) ** 2
    assert rmse_intensity(a, zero, region) == pytest.approx(np.sqrt(np.mean((ia / ia.max()) ** 2)), rel=1e-12)
    # each side is normalized, so overall scale does not matter
    assert rmse_intensity(a.with_values(3 * a.values), b, region) == pytest.approx(rmse_intensity(a, b, region))


def test_rmse_rejects_bad_regions(small_grid, rng):
    a = _field(small_grid, rng)
    with pytest.raises(ValueError, match="empty"):
        rmse_intensity(a, a, np.zeros(small_grid.shape))
    with pytest.raises(ValueError):
        rmse_phase(a, a, np.ones((4, 4)))


def test_rmse_phase_constant_offset(small_grid, rng):
    a = _field(small_grid, rng)
    region = np.ones(small_grid.shape, bool)
    b = a.with_values(a.values * np.exp(1j * np.pi / 4))
    assert rmse_phase(a, a, region) == 0
    assert rmse_phase(b, a, region) == pytest.approx(np.pi / 4)
    ref = (3, 5)
    assert rmse_phase(align_phase(b, ref), align_phase(a, ref), region) < 1e-12


def test_rmse_phase_needs_bright_pixels(small_grid):
    v = np.zeros(small_grid.shape, complex)
    v[0, 0] = 1
    a = ComplexField(small_grid, v)
    region = np.zeros(small_grid.shape, bool)
    region[5:, 5:] = True
    with pytest.raises(ValueError):
        rmse_phase(a, a, region)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_rmse_phase_bounded_by_pi(seed):
    rng = np.random.default_rng(seed)
    g = Grid(8, 8, 1.0, 1.0, 1.0)
    r = rmse_phase(_field(g, rng), _field(g, rng), np.ones(g.shape))
    assert 0 <= r <= np.pi


def test_align_phase_skips_dark_pixel(small_grid, rng):
    a = _field(small_grid, rng)
    v = a.values.copy()
    v[2, 2] = 0
    d = a.with_values(v)
    assert align_phase(d, (2, 2)) is d
    out = align_phase(a, (1, 1))
    assert out.values[1, 1].imag == 0 and out.values[1, 1].real > 0


# --- rows and tables ----------------------------------------------------------------

def test_bench_row_invariants():
    BenchRow(10.0, np.sqrt(10.0), "neural", 0.1, 0.01, 0.2, 0.02, 5, 1.0)
    BenchRow(np.inf, np.inf, "iterative", 0.1, 0.01, 0.2, 0.02, 5, 1.0)
    with pytest.raises(ValueError, match="snr"):
        BenchRow(10.0, 3.0, "neural", 0.1, 0.01, 0.2, 0.02, 5, 1.0)
    with pytest.raises(ValueError, match="snr"):
        BenchRow(np.inf, 3.0, "neural", 0.1, 0.01, 0.2, 0.02, 5, 1.0)
    with pytest.raises(ValueError):
        BenchRow(10.0, np.sqrt(10.0), "neural", 0.1, -0.01, 0.2, 0.02, 5, 1.0)
    with pytest.raises(ValueError):
        BenchRow(10.0, np.sqrt(10.0), "lens", 0.1, 0.01, 0.2, 0.02, 5, 1.0)


@pytest.fixture(scope="module")
def held_out():
    from maskwfs.optics import default_mask

    mask = default_mask()
    cfg = GenConfig(1, mask=mask)
    return mask, [generate_object(cfg, object_seed(77, i)) for i in range(3)]


def _oracle_retrievers(mask, objects):
    """Stubs that look the ground truth up by pattern identity."""
    from maskwfs.dataset import forward_pattern

    lookup = {forward_pattern(o, mask).tobytes(): o for o in objects}

    def neural(p):
        return lookup[p.tobytes()], "object", 1e-3

    def iterative(p):
        return multislice_mask_transit(lookup[p.tobytes()], mask), "exit", 2e-3

    return {"neural": neural, "iterative": iterative}


def test_sweep_with_oracle_stubs_is_exact(held_out):
    mask, objects = held_out
    rows = run_snr_sweep(objects, mask, _oracle_retrievers(mask, objects), [np.inf])
    assert len(rows) == 2
    for r in rows:
        assert r.mean_intensity_rmse == 0 and r.mean_phase_rmse == 0 and r.n_samples == 3
        assert r.snr == np.inf
    assert rows[1].mean_wall_ms == pytest.approx(2.0)


def test_sweep_row_count_and_noise_determinism(held_out):
    mask, objects = held_out
    seen = []

    def record(p):
        seen.append(p.copy())
        return objects[0], "object", 0.0

    rows = run_snr_sweep(objects[:2], mask, {"neural": record}, DEFAULT_NOISE_LEVELS, bench_seed=5)
    assert len(rows) == len(DEFAULT_NOISE_LEVELS)
    first = list(seen)
    seen.clear()
    run_snr_sweep(objects[:2], mask, {"neural": record}, DEFAULT_NOISE_LEVELS, bench_seed=5)
    assert all(np.array_equal(a, b) for a, b in zip(first, seen))
    assert all(np.all(p == np.round(p)) for p in first[1:len(DEFAULT_NOISE_LEVELS)])


def test_table_round_trip_and_curves():
    rows = [BenchRow(np.inf, np.inf, "neural", 0.01, 0.001, 0.2, 0.02, 200, 10.5),
            BenchRow(10.0, float(np.sqrt(10.0)), "iterative", 0.3, 0.05, 1.1, 0.1, 200, 400.0)]
    text = format_bench_table(rows, {"seed": 3})
    assert text.splitlines()[0].startswith("# config_hash\t")
    assert parse_bench_table(text) == rows
    curves = curve_files(rows, {"seed": 3})
    assert set(curves) == {f"curve_{m}_{q}.tsv" for m in ("neural", "iterative") for q in ("intensity", "phase")}
    body = [ln for ln in curves["curve_iterative_phase.tsv"].splitlines() if not ln.startswith("#")]
    assert body == [f"{float(np.sqrt(10.0))!r}\t1.1"]


def test_time_retrieval():
    calls = []
    median, samples = time_retrieval(np.zeros(4), lambda p: calls.append(1), repetitions=3)
    assert len(samples) == 3 and len(calls) == 4 and median > 0 and all(s > 0 for s in samples)
    with pytest.raises(ValueError):
        time_retrieval(np.zeros(4), lambda p: None, repetitions=2)


# --- back-propagation check ---------------------------------------------------------

def test_pinhole_round_trip_diameter():
    grid = pinhole_grid()
    far = angular_spectrum_propagate(simulate_pinhole(2.7e-6), 500e-6)
    chk = backprop_diameter_check(far, 500e-6, 2.7e-6, 2 * grid.dx)
    assert chk.passed, chk.measured
    np.testing.assert_allclose(chk.field.values, simulate_pinhole(2.7e-6).values, atol=1e-10)


def test_zero_distance_measures_input():
    f = simulate_pinhole(2.7e-6)
    chk = backprop_diameter_check(f, 0.0, 2.7e-6, 1.0)
    assert chk.field is f and chk.measured == measure_diameter(f)


def test_exact_square_passes_with_zero_tolerance():
    g = Grid(64, 64, 0.5e-6, 0.5e-6, 13.5e-9)
    v = np.zeros(g.shape)
    v[20:40, 22:42] = 1.0
    f = ComplexField(g, v)
    # half-height crossings fall half a pixel outside the lit run on each side
    chk = backprop_diameter_check(f, 0.0, 20 * 0.5e-6, 0.0)
    assert chk.passed


def test_dark_field_rejected():
    with pytest.raises(ValueError, match="floor"):
        measure_diameter(ComplexField(pinhole_grid(32), np.zeros((32, 32))))
