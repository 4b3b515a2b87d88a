"""Reference sequences, segmentation into CAM rows, and read synthesis.

Sequences are plain Python strings over the ACGT alphabet.  A reference is
segmented into consecutive fixed-width rows (the CAM storage image), and
reads are cut from the reference with substitution/insertion/deletion errors
injected at configurable per-base rates.  Reads keep a ledger of injected
edits as ground-truth provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from . import rng

DNA_BASES = "ACGT"

_BASE_CODES = np.full(256, 255, dtype=np.uint8)
for _i, _b in enumerate(DNA_BASES):
    _BASE_CODES[ord(_b)] = _i
_CODE_BASES = np.frombuffer(DNA_BASES.encode("ascii"), dtype=np.uint8)


class FastaError(ValueError):
    """Raised on malformed FASTA input."""


class TailExhaustedError(ValueError):
    """Raised when edit injection runs out of downstream reference bases."""


def encode_bases(seq: str) -> np.ndarray:
    """Encode an ACGT string as a uint8 code array (A=0, C=1, G=2, T=3)."""
    raw = np.frombuffer(seq.encode("ascii"), dtype=np.uint8)
    codes = _BASE_CODES[raw]
    if codes.size and codes.max() > 3:
        bad = seq[int(np.argmax(codes > 3))]
        raise ValueError(f"invalid base {bad!r} in sequence")
    return codes


def decode_bases(codes: np.ndarray) -> str:
    return _CODE_BASES[np.asarray(codes, dtype=np.uint8)].tobytes().decode("ascii")


@dataclass
class FastaResult:
    """Concatenated sequence of all records, with the ambiguity-drop count."""

    sequence: str
    records: int
    dropped: int


def load_fasta(path: str | Path) -> FastaResult:
    """Read a FASTA file into one concatenated ACGT sequence.

    Lowercase is normalized to uppercase.  Non-ACGT symbols (N and friends)
    are dropped; the count of dropped symbols is reported in the result.
    Raises FastaError (with a line number) on malformed input.
    """
    path = Path(path)
    parts: list[str] = []
    records = 0
    dropped = 0
    keep = set(DNA_BASES)
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(">"):
                records += 1
                continue
            if records == 0:
                raise FastaError(
                    f"{path}:{lineno}: sequence data before any '>' header"
                )
            up = line.upper()
            kept = "".join(c for c in up if c in keep)
            dropped += len(up) - len(kept)
            parts.append(kept)
    if records == 0:
        raise FastaError(f"{path}: no FASTA records found")
    sequence = "".join(parts)
    if not sequence:
        raise FastaError(f"{path}: records contain no usable bases")
    return FastaResult(sequence=sequence, records=records, dropped=dropped)


def write_fasta(path: str | Path, sequence: str, name: str = "reference") -> None:
    with Path(path).open("w") as fh:
        fh.write(f">{name}\n")
        for i in range(0, len(sequence), 80):
            fh.write(sequence[i : i + 80] + "\n")


def synthesize_genome(length: int, seed: int) -> str:
    """Uniform i.i.d. ACGT sequence; identical (length, seed) -> identical output."""
    if length <= 0:
        raise ValueError(f"genome length must be positive, got {length}")
    codes = rng.substream(seed, rng.GENOME).integers(0, 4, size=length, dtype=np.uint8)
    return decode_bases(codes)


@dataclass
class Segment:
    row: int
    offset: int
    bases: str


@dataclass
class GenomeStore:
    """A reference segmented into consecutive non-overlapping fixed-width rows.

    Segment k covers reference[k*N : (k+1)*N]; a trailing remainder shorter
    than N is not stored.  Immutable after construction.
    """

    reference: str
    segment_length: int
    segments: list[Segment]
    _codes: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def row_count(self) -> int:
        return len(self.segments)

    def segment_codes(self) -> np.ndarray:
        """All segments as a (rows, N) uint8 code matrix (cached)."""
        if self._codes is None:
            mat = np.empty((self.row_count, self.segment_length), dtype=np.uint8)
            for seg in self.segments:
                mat[seg.row] = encode_bases(seg.bases)
            self._codes = mat
        return self._codes


def segment_reference(reference: str, segment_length: int) -> GenomeStore:
    n = len(reference)
    if segment_length <= 0:
        raise ValueError(f"segment length must be positive, got {segment_length}")
    if segment_length > n:
        raise ValueError(f"segment length {segment_length} exceeds reference length {n}")
    count = n // segment_length
    segments = [
        Segment(k, k * segment_length, reference[k * segment_length : (k + 1) * segment_length])
        for k in range(count)
    ]
    return GenomeStore(reference=reference, segment_length=segment_length, segments=segments)


@dataclass(frozen=True)
class ErrorProfile:
    """Per-base edit rates: substitution e_s, insertion e_i, deletion e_d."""

    e_s: float
    e_i: float
    e_d: float

    def __post_init__(self) -> None:
        for name, r in (("e_s", self.e_s), ("e_i", self.e_i), ("e_d", self.e_d)):
            if not 0.0 <= r < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {r}")
        if self.e_s + self.e_i + self.e_d >= 1.0:
            raise ValueError("e_s + e_i + e_d must be < 1")

    @property
    def e_id(self) -> float:
        """Combined indel rate, always recomputed from e_i + e_d."""
        return self.e_i + self.e_d

    @classmethod
    def condition_a(cls) -> "ErrorProfile":
        """Substitution-dominant mix: e_s = 1%, e_i = e_d = 0.05%."""
        return cls(e_s=0.01, e_i=0.0005, e_d=0.0005)

    @classmethod
    def condition_b(cls) -> "ErrorProfile":
        """Indel-dominant mix: e_s = 0.1%, e_i = e_d = 0.5%."""
        return cls(e_s=0.001, e_i=0.005, e_d=0.005)

    @classmethod
    def for_condition(cls, name: str) -> "ErrorProfile":
        try:
            return {"A": cls.condition_a, "B": cls.condition_b}[name.upper()]()
        except KeyError:
            raise ValueError(f"unknown condition {name!r}, expected A or B") from None


class Edit(NamedTuple):
    """One injected edit; '-' marks an absent original or replacement base."""

    pos: int
    kind: str  # "sub" | "ins" | "del"
    orig: str
    new: str

    def summary(self) -> str:
        return f"{self.pos}:{self.kind}:{self.orig}>{self.new}"

    @classmethod
    def from_summary(cls, text: str) -> "Edit":
        pos, kind, change = text.split(":")
        orig, new = change.split(">")
        if kind not in ("sub", "ins", "del"):
            raise ValueError(f"unknown edit kind {kind!r}")
        return cls(int(pos), kind, orig, new)


@dataclass
class ReadRecord:
    """A fixed-length read plus its ground-truth provenance."""

    read_id: int
    read: str
    origin_row: int
    edit_ledger: list[Edit]
    true_ed_to_origin: int

    def ledger_summary(self) -> str:
        if not self.edit_ledger:
            return "-"
        return ",".join(e.summary() for e in self.edit_ledger)


def inject_edits(
    origin: str,
    extended_tail: str,
    read_length: int,
    profile: ErrorProfile,
    gen: np.random.Generator,
) -> tuple[str, list[Edit]]:
    """Walk the origin window left to right injecting edits, keep length fixed.

    At each origin base one uniform draw selects among substitution (prob
    e_s, replacement uniform over the other three bases), insertion before
    the base (prob e_i, uniform base), deletion (prob e_d), or no edit.  The
    result is truncated (insertions) or back-filled from extended_tail
    (deletions) to exactly read_length bases.  The ledger records injected
    edits only; the implicit end-of-read truncation or back-fill is not an
    entry, so a net indel surplus contributes up to two units of true edit
    distance per ledger entry.
    """
    if len(origin) != read_length:
        raise ValueError(f"origin window must be {read_length} bases, got {len(origin)}")
    p_sub, p_ins, p_del = profile.e_s, profile.e_i, profile.e_d
    out: list[str] = []
    ledger: list[Edit] = []
    for pos, base in enumerate(origin):
        u = gen.random()
        if u < p_sub:
            repl = DNA_BASES[(DNA_BASES.index(base) + 1 + int(gen.integers(0, 3))) % 4]
            out.append(repl)
            ledger.append(Edit(pos, "sub", base, repl))
        elif u < p_sub + p_ins:
            ins = DNA_BASES[int(gen.integers(0, 4))]
            out.append(ins)
            out.append(base)
            ledger.append(Edit(pos, "ins", "-", ins))
        elif u < p_sub + p_ins + p_del:
            ledger.append(Edit(pos, "del", base, "-"))
        else:
            out.append(base)
    deficit = read_length - len(out)
    if deficit > 0:
        if deficit > len(extended_tail):
            raise TailExhaustedError(
                f"need {deficit} tail bases to back-fill deletions, have {len(extended_tail)}"
            )
        out.extend(extended_tail[:deficit])
    read = "".join(out[:read_length])
    return read, ledger


def extract_reads(
    store: GenomeStore,
    n_reads: int,
    read_length: int,
    profile: ErrorProfile,
    seed: int,
    aligned: bool = True,
    slack: int = 16,
) -> list[ReadRecord]:
    """Cut n_reads windows from the reference and inject edits.

    By default windows are segment-aligned so each read has exactly one
    ground-truth origin row.  With aligned=False, start offsets are uniform
    over the reference (origin_row then records the row containing the start
    offset, and per-row ground truth must come from the distance oracle).
    Each read uses its own RNG substream keyed by (seed, read index), so
    generation order does not matter.
    """
    from . import oracles  # local import: oracles has no genome dependency

    n = len(store.reference)
    N = store.segment_length
    if aligned and read_length != N:
        raise ValueError("aligned extraction requires read_length == segment_length")
    eligible = [
        seg.row for seg in store.segments if seg.offset + read_length + slack <= n
    ]
    if aligned and not eligible:
        raise ValueError("no segment leaves room for the edit-injection tail")
    records: list[ReadRecord] = []
    for idx in range(n_reads):
        gen = rng.substream(seed, rng.READS, idx)
        if aligned:
            row = eligible[int(gen.integers(0, len(eligible)))]
            start = row * N
        else:
            # keep the window start inside a stored row
            limit = min(n - read_length - slack, store.row_count * N - 1)
            start = int(gen.integers(0, limit + 1))
            row = start // N
        origin = store.reference[start : start + read_length]
        tail = store.reference[start + read_length : start + read_length + slack]
        read, ledger = inject_edits(origin, tail, read_length, profile, gen)
        true_ed = oracles.edit_distance_capped(
            store.segments[row].bases, read, cap=read_length
        )
        records.append(
            ReadRecord(
                read_id=idx,
                read=read,
                origin_row=row,
                edit_ledger=ledger,
                true_ed_to_origin=true_ed,
            )
        )
    return records


# --- dataset file format -------------------------------------------------
#
# Line-oriented, one read per line:
#   read_id TAB origin_row TAB read_bases TAB ledger_summary
# where ledger_summary is "-" or comma-separated pos:kind:orig>new entries.
# Lines starting with '#' carry metadata (key = value) and are skipped by
# readers.

READS_MAGIC = "# chargecam reads v1"


class DatasetFormatError(ValueError):
    """Raised when a dataset file does not match the expected schema."""


def write_reads(
    path: str | Path, records: Iterable[ReadRecord], metadata: dict[str, str] | None = None
) -> None:
    with Path(path).open("w") as fh:
        fh.write(READS_MAGIC + "\n")
        for key, value in (metadata or {}).items():
            fh.write(f"# {key} = {value}\n")
        for rec in records:
            fh.write(f"{rec.read_id}\t{rec.origin_row}\t{rec.read}\t{rec.ledger_summary()}\n")


def load_reads(path: str | Path) -> tuple[list[ReadRecord], dict[str, str]]:
    records: list[ReadRecord] = []
    metadata: dict[str, str] = {}
    path = Path(path)
    with path.open() as fh:
        first = fh.readline().rstrip("\n")
        if first != READS_MAGIC:
            raise DatasetFormatError(f"{path}: not a chargecam reads file")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, _, value = line[1:].partition("=")
                    metadata[key.strip()] = value.strip()
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DatasetFormatError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}"
                )
            read_id, origin_row, read, ledger_text = parts
            ledger = (
                []
                if ledger_text == "-"
                else [Edit.from_summary(t) for t in ledger_text.split(",")]
            )
            records.append(
                ReadRecord(
                    read_id=int(read_id),
                    read=read,
                    origin_row=int(origin_row),
                    edit_ledger=ledger,
                    true_ed_to_origin=-1,  # not serialized; oracle recomputes on demand
                )
            )
    for rec in records:
        encode_bases(rec.read)  # validate alphabet
    return records, metadata
