"""Sequence handling: FASTA IO, synthesis, segmentation, edit injection."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chargecam import rng
from chargecam.genome import (
    Edit,
    ErrorProfile,
    FastaError,
    TailExhaustedError,
    decode_bases,
    encode_bases,
    extract_reads,
    inject_edits,
    load_fasta,
    load_reads,
    segment_reference,
    synthesize_genome,
    write_fasta,
    write_reads,
)
from chargecam.oracles import edit_distance


def test_encode_decode_roundtrip():
    seq = "ACGTTGCA"
    assert decode_bases(encode_bases(seq)) == seq
    with pytest.raises(ValueError):
        encode_bases("ACGN")


def test_load_fasta_single_record(tmp_path):
    p = tmp_path / "a.fa"
    p.write_text(">x\nACGT\n")
    assert load_fasta(p).sequence == "ACGT"


def test_load_fasta_wrapped_lines(tmp_path):
    p = tmp_path / "a.fa"
    p.write_text(">x\nAC\nGT\n")
    assert load_fasta(p).sequence == "ACGT"


def test_load_fasta_drops_ambiguous_bases(tmp_path):
    p = tmp_path / "a.fa"
    p.write_text(">x\nACNGT\n")
    result = load_fasta(p)
    assert result.sequence == "ACGT"
    assert result.dropped == 1


def test_load_fasta_concatenates_records_and_uppercases(tmp_path):
    p = tmp_path / "a.fa"
    p.write_text(">x\nacgt\n>y\nTTAA\n")
    result = load_fasta(p)
    assert result.sequence == "ACGTTTAA"
    assert result.records == 2


def test_load_fasta_errors(tmp_path):
    empty = tmp_path / "empty.fa"
    empty.write_text("")
    with pytest.raises(FastaError):
        load_fasta(empty)
    headerless = tmp_path / "bad.fa"
    headerless.write_text("ACGT\n>x\nAC\n")
    with pytest.raises(FastaError, match="1"):
        load_fasta(headerless)


def test_write_fasta_roundtrip(tmp_path):
    seq = synthesize_genome(1000, seed=5)
    p = tmp_path / "ref.fa"
    write_fasta(p, seq)
    text = p.read_text()
    assert text.startswith(">")
    assert max(len(line) for line in text.splitlines()) <= 80
    assert load_fasta(p).sequence == seq


def test_synthesize_deterministic_and_valid():
    a = synthesize_genome(64, seed=42)
    b = synthesize_genome(64, seed=42)
    assert a == b
    assert set(a) <= set("ACGT")
    assert synthesize_genome(1, seed=9) in "ACGT"
    assert synthesize_genome(64, seed=43) != a
    with pytest.raises(ValueError):
        synthesize_genome(0, seed=1)


def test_synthesize_base_frequencies_uniform():
    seq = synthesize_genome(10**6, seed=1)
    counts = {b: seq.count(b) for b in "ACGT"}
    for b, c in counts.items():
        assert abs(c / 10**6 - 0.25) < 0.01, (b, c)


def test_segment_reference_exact_split():
    store = segment_reference("ACGTACGT", 4)
    assert [(s.offset, s.bases) for s in store.segments] == [(0, "ACGT"), (4, "ACGT")]


def test_segment_reference_drops_remainder():
    store = segment_reference("ACGTACGTA", 4)
    assert store.row_count == 2
    assert store.segments[-1].bases == "ACGT"


def test_segment_reference_desk_scale_count():
    store = segment_reference(synthesize_genome(65536, seed=2), 256)
    assert store.row_count == 256
    codes = store.segment_codes()
    assert codes.shape == (256, 256)
    assert decode_bases(codes[10]) == store.segments[10].bases


def test_segment_reference_errors():
    with pytest.raises(ValueError):
        segment_reference("ACGT", 0)
    with pytest.raises(ValueError):
        segment_reference("ACGT", 5)


def test_error_profile_conditions():
    a = ErrorProfile.condition_a()
    assert (a.e_s, a.e_i, a.e_d) == (0.01, 0.0005, 0.0005)
    assert a.e_id == pytest.approx(0.001)
    b = ErrorProfile.condition_b()
    assert (b.e_s, b.e_i, b.e_d) == (0.001, 0.005, 0.005)
    assert b.e_id == pytest.approx(0.01)
    assert ErrorProfile.for_condition("a") == a
    with pytest.raises(ValueError):
        ErrorProfile.for_condition("C")
    with pytest.raises(ValueError):
        ErrorProfile(e_s=0.6, e_i=0.3, e_d=0.2)
    with pytest.raises(ValueError):
        ErrorProfile(e_s=-0.1, e_i=0.0, e_d=0.0)


def test_edit_summary_roundtrip():
    for e in [Edit(3, "sub", "A", "G"), Edit(0, "ins", "-", "T"), Edit(9, "del", "C", "-")]:
        assert Edit.from_summary(e.summary()) == e


def test_inject_edits_zero_rates_is_identity():
    profile = ErrorProfile(0.0, 0.0, 0.0)
    gen = rng.substream(1, rng.READS, 0)
    read, ledger = inject_edits("ACGTACGT", "AAAA", 8, profile, gen)
    assert read == "ACGTACGT"
    assert ledger == []


def test_inject_edits_deterministic():
    profile = ErrorProfile.condition_b()
    origin = synthesize_genome(256, seed=3)
    tail = "ACGT" * 4
    r1, l1 = inject_edits(origin, tail, 256, profile, rng.substream(9, rng.READS, 5))
    r2, l2 = inject_edits(origin, tail, 256, profile, rng.substream(9, rng.READS, 5))
    assert r1 == r2 and l1 == l2


def test_inject_edits_tail_exhaustion():
    profile = ErrorProfile(0.0, 0.0, 0.9)  # nearly every base deleted
    gen = rng.substream(0, rng.READS, 0)
    with pytest.raises(TailExhaustedError):
        inject_edits("ACGTACGTACGTACGT", "AC", 16, profile, gen)


@given(seed=st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_inject_edits_length_and_distance_bound(seed):
    """Read length is exact; true ED is bounded by subs + 2 * indels."""
    profile = ErrorProfile(0.05, 0.02, 0.02)
    origin = synthesize_genome(48, seed=seed)
    tail = synthesize_genome(16, seed=seed + 1)
    read, ledger = inject_edits(origin, tail, 48, profile, rng.substream(seed, rng.READS, 0))
    assert len(read) == 48
    subs = sum(1 for e in ledger if e.kind == "sub")
    indels = sum(1 for e in ledger if e.kind in ("ins", "del"))
    assert edit_distance(origin, read) <= subs + 2 * indels


def test_extract_reads_aligned_origins():
    store = segment_reference(synthesize_genome(16 * 64 + 16, seed=11), 64)
    profile = ErrorProfile(0.0, 0.0, 0.0)
    records = extract_reads(store, 24, 64, profile, seed=11)
    assert len(records) == 24
    for rec in records:
        assert len(rec.read) == 64
        assert rec.read == store.segments[rec.origin_row].bases
        assert rec.true_ed_to_origin == 0
        assert rec.edit_ledger == []


def test_extract_reads_deterministic_per_read():
    store = segment_reference(synthesize_genome(8 * 32 + 16, seed=4), 32)
    profile = ErrorProfile.condition_a()
    a = extract_reads(store, 10, 32, profile, seed=21)
    b = extract_reads(store, 10, 32, profile, seed=21)
    assert [(r.read, r.origin_row) for r in a] == [(r.read, r.origin_row) for r in b]
    c = extract_reads(store, 10, 32, profile, seed=22)
    assert [r.read for r in a] != [r.read for r in c]


def test_extract_reads_unaligned_origin_row_contains_start():
    store = segment_reference(synthesize_genome(8 * 32 + 16, seed=4), 32)
    profile = ErrorProfile(0.0, 0.0, 0.0)
    records = extract_reads(store, 32, 32, profile, seed=5, aligned=False)
    for rec in records:
        assert 0 <= rec.origin_row < store.row_count


def test_reads_file_roundtrip(tmp_path):
    store = segment_reference(synthesize_genome(4 * 32 + 16, seed=8), 32)
    records = extract_reads(store, 6, 32, ErrorProfile.condition_b(), seed=8)
    path = tmp_path / "reads.tsv"
    write_reads(path, records, {"condition": "B", "e_s": "0.001"})
    loaded, meta = load_reads(path)
    assert meta["condition"] == "B"
    assert meta["e_s"] == "0.001"
    assert len(loaded) == len(records)
    for got, want in zip(loaded, records):
        assert got.read_id == want.read_id
        assert got.read == want.read
        assert got.origin_row == want.origin_row
        assert got.edit_ledger == want.edit_ledger
        assert got.true_ed_to_origin == -1  # recomputed on demand, not serialized
