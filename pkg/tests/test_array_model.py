"""Array behavior: cell matching, matchline voltage, sensing, energy."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chargecam import rng
from chargecam.array_model import (
    CURRENT_DOMAIN_SIGMA,
    ArrayConfig,
    ArrayImage,
    ImageFormatError,
    MatchMode,
    NoiseModel,
    cell_match,
    distinguishable_states,
    energy_joules,
    energy_per_search,
    matchline_voltage,
    mismatch_counts,
    ml_variance,
    reference_voltage,
    row_mismatch_count,
    search,
    sense,
)
from chargecam.genome import encode_bases, segment_reference, synthesize_genome

dna_pair = st.integers(min_value=1, max_value=64).flatmap(
    lambda n: st.tuples(
        st.text(alphabet="ACGT", min_size=n, max_size=n),
        st.text(alphabet="ACGT", min_size=n, max_size=n),
    )
)


def test_cell_match_shift_tolerant_neighbor():
    assert cell_match("A", "AGAA", 1, MatchMode.ED_STAR)       # 'A' in {A, G, A}
    assert not cell_match("A", "AGAA", 1, MatchMode.HD)        # 'A' != 'G'
    assert not cell_match("T", "AACGTACG", 7, MatchMode.ED_STAR)  # right neighbor absent
    assert cell_match("C", "CAAA", 0, MatchMode.ED_STAR)       # left neighbor absent
    with pytest.raises(IndexError):
        cell_match("A", "ACGT", 4, MatchMode.ED_STAR)


def test_row_mismatch_count_examples():
    assert row_mismatch_count("ACGT", "ACGT", MatchMode.ED_STAR) == 0
    assert row_mismatch_count("ACGT", "ACGT", MatchMode.HD) == 0
    assert row_mismatch_count("AAAA", "AGAA", MatchMode.ED_STAR) == 0
    assert row_mismatch_count("AAAA", "AGAA", MatchMode.HD) == 1
    assert row_mismatch_count("ACGTACGT", "AACGTACG", MatchMode.ED_STAR) == 1
    assert row_mismatch_count("ACGTACGT", "AACGTACG", MatchMode.HD) == 7
    with pytest.raises(ValueError):
        row_mismatch_count("ACG", "ACGT", MatchMode.HD)


@given(pair=dna_pair)
@settings(max_examples=300)
def test_shift_tolerant_count_never_exceeds_positionwise(pair):
    seg, read = pair
    ed_star = row_mismatch_count(seg, read, MatchMode.ED_STAR)
    hd = row_mismatch_count(seg, read, MatchMode.HD)
    assert ed_star <= hd


def test_bulk_mismatch_counts_match_scalar():
    gen = np.random.default_rng(12)
    segs = ["".join("ACGT"[i] for i in gen.integers(0, 4, 20)) for _ in range(9)]
    reads = ["".join("ACGT"[i] for i in gen.integers(0, 4, 20)) for _ in range(7)]
    seg_codes = np.stack([encode_bases(s) for s in segs])
    read_codes = np.stack([encode_bases(r) for r in reads])
    for mode in MatchMode:
        for chunk in (1, 3, 64):
            got = mismatch_counts(seg_codes, read_codes, mode, read_chunk=chunk)
            for i, r in enumerate(reads):
                for j, s in enumerate(segs):
                    assert got[i, j] == row_mismatch_count(s, r, mode)


def test_matchline_voltage_ideal_linear():
    config = ArrayConfig()
    noise = NoiseModel.ideal()
    assert matchline_voltage(0, config, noise) == 0.0
    assert matchline_voltage(128, config, noise) == pytest.approx(0.6)
    assert matchline_voltage(256, config, noise) == pytest.approx(1.2)
    slope = config.vdd / config.cells
    for n in range(0, 257, 16):
        assert matchline_voltage(n, config, noise) == pytest.approx(n * slope)
    with pytest.raises(ValueError):
        matchline_voltage(257, config, noise)
    with pytest.raises(ValueError):
        matchline_voltage(-1, config, noise)


def test_ml_variance_formula_values():
    config = ArrayConfig()
    noise = NoiseModel()  # 1.4% relative mismatch
    assert ml_variance(128, config, noise) == pytest.approx(2.75625e-7, rel=1e-12)
    assert ml_variance(64, config, noise) == pytest.approx(2.0671875e-7, rel=1e-12)
    assert ml_variance(0, config, noise) == 0.0
    assert ml_variance(256, config, noise) == 0.0
    assert ml_variance(100, config, NoiseModel.ideal()) == 0.0


def test_ml_variance_symmetry_and_peak():
    config = ArrayConfig()
    noise = NoiseModel()
    var = ml_variance(np.arange(257), config, noise)
    assert np.allclose(var, var[::-1])
    assert int(np.argmax(var)) == 128


def test_gaussian_formula_sampling_statistics():
    config = ArrayConfig()
    noise = NoiseModel()
    gen = rng.substream(3, rng.SEARCH, 0)
    samples = np.array([matchline_voltage(128, config, noise, gen) for _ in range(4000)])
    assert samples.mean() == pytest.approx(0.6, abs=1e-3)
    assert samples.var(ddof=1) == pytest.approx(2.75625e-7, rel=0.15)


def test_montecarlo_caps_mode_uses_divider():
    config = ArrayConfig(cells=8)
    noise = NoiseModel(mode="montecarlo_caps")
    caps = np.full(8, 2e-15)
    v = matchline_voltage(4, config, noise, caps=caps)
    assert v == pytest.approx(0.6)
    with pytest.raises(ValueError):
        matchline_voltage(4, config, noise, caps=np.ones(5))
    with pytest.raises(ValueError):
        matchline_voltage(4, config, noise)  # no caps, no generator


def test_reference_voltage_between_levels():
    config = ArrayConfig()
    slope = config.vdd / config.cells
    for t in (0, 1, 100, 255):
        v_ref = reference_voltage(t, config)
        assert t * slope < v_ref < (t + 1) * slope
    with pytest.raises(ValueError):
        reference_voltage(-1, config)


def test_sense_threshold_semantics():
    config = ArrayConfig()
    noise = NoiseModel.ideal()
    for t in (0, 3, 128, 255):
        assert sense(matchline_voltage(t, config, noise), t, config)
        assert not sense(matchline_voltage(t + 1, config, noise), t, config)


def test_energy_values_and_shape():
    config = ArrayConfig()
    noise = NoiseModel()
    assert energy_per_search(0, config, noise).joules_per_search == 0.0
    assert energy_per_search(256, config, noise).joules_per_search == 0.0
    e = energy_per_search(128, config, noise)
    assert e.joules_per_search == pytest.approx(1.8432e-13, rel=1e-12)
    assert e.scope == "per_row"
    per_array = energy_per_search(128, config, noise, scope="per_array")
    assert per_array.joules_per_search == pytest.approx(1.8432e-13 * 256, rel=1e-12)
    curve = energy_joules(np.arange(257), config.cells, noise.mu_c, config.vdd)
    assert int(np.argmax(curve)) == 128
    with pytest.raises(ValueError):
        energy_per_search(300, config, noise)
    with pytest.raises(ValueError):
        energy_per_search(10, config, noise, scope="per_die")


def test_distinguishable_states_closed_form():
    assert distinguishable_states(0.014) == 566
    assert distinguishable_states(0.028) == 141
    assert distinguishable_states(0.001) == 111111
    assert distinguishable_states(0.025) == 177
    assert distinguishable_states(0.0) == math.inf
    assert distinguishable_states(CURRENT_DOMAIN_SIGMA) == 44
    with pytest.raises(ValueError):
        distinguishable_states(-0.1)


def _tiny_image(noise=None, mode=MatchMode.ED_STAR, caps_seed=0):
    store = segment_reference(synthesize_genome(8 * 16, seed=31), 16)
    return ArrayImage.from_store(
        store,
        ArrayConfig(rows=4, cells=16, array_count=2),
        noise or NoiseModel.ideal(),
        mode=mode,
        caps_seed=caps_seed,
    ), store


def test_image_save_load_roundtrip(tmp_path):
    image, _ = _tiny_image(noise=NoiseModel(mode="montecarlo_caps"), caps_seed=77)
    path = tmp_path / "image.txt"
    image.save(path)
    loaded = ArrayImage.load(path)
    assert loaded.config == image.config
    assert loaded.noise == image.noise
    assert loaded.mode == image.mode
    assert loaded.caps_seed == 77
    assert np.array_equal(loaded.segment_codes, image.segment_codes)
    assert np.array_equal(loaded.offsets, image.offsets)
    # frozen capacitor mismatch must survive the round trip bit-exactly
    assert np.array_equal(loaded.caps(), image.caps())


def test_image_caps_partition_by_array():
    image, _ = _tiny_image(noise=NoiseModel(mode="montecarlo_caps"), caps_seed=5)
    caps = image.caps()
    assert caps.shape == (8, 16)
    assert image.array_of_row(3) == 0
    assert image.array_of_row(4) == 1
    # rows in different arrays come from different substreams
    assert not np.array_equal(caps[0], caps[4])


def test_image_load_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("not an image\n")
    with pytest.raises(ImageFormatError):
        ArrayImage.load(bad)
    image, _ = _tiny_image()
    path = tmp_path / "image.txt"
    image.save(path)
    text = path.read_text().replace("vdd = 1.2\n", "")
    path.write_text(text)
    with pytest.raises(ImageFormatError):
        ArrayImage.load(path)


def test_search_finds_stored_row():
    image, store = _tiny_image()
    read = store.segments[5].bases
    outcomes = search(image, read, threshold=0)
    matches = [o.row for o in outcomes if o.decision]
    assert 5 in matches
    for o in outcomes:
        if o.row not in matches:
            assert o.n_mis > 0
    assert all(o.v_ml == pytest.approx(o.n_mis / 16 * 1.2) for o in outcomes)


def test_search_deterministic_under_seed():
    image, store = _tiny_image(noise=NoiseModel())
    read = store.segments[2].bases
    a = search(image, read, threshold=1, seed=9, read_id=4)
    b = search(image, read, threshold=1, seed=9, read_id=4)
    assert [(o.v_ml, o.decision) for o in a] == [(o.v_ml, o.decision) for o in b]
    c = search(image, read, threshold=1, seed=10, read_id=4)
    assert [o.v_ml for o in a] != [o.v_ml for o in c]


def test_search_random_read_rarely_matches_at_zero():
    image, _ = _tiny_image()
    read = synthesize_genome(16, seed=999)
    outcomes = search(image, read, threshold=0)
    assert sum(o.decision for o in outcomes) == 0


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(sigma_over_mu=-0.1)
    with pytest.raises(ValueError):
        NoiseModel(mode="quantum")
    with pytest.raises(ValueError):
        NoiseModel(resample="sometimes")
    with pytest.raises(ValueError):
        ArrayConfig(rows=0)
    with pytest.raises(ValueError):
        ArrayConfig(vdd=0.0)


def test_current_domain_emulation_state_count():
    noise = NoiseModel.current_domain_emulated()
    assert distinguishable_states(noise.sigma_over_mu) == 44
    assert noise.resample == "per_trial"
