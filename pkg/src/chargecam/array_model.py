"""Behavioral model of the capacitive ML-CAM array.

Each row stores one reference segment; a search compares a read against all
rows at once.  A cell can match in two modes: shift-tolerant (the stored
base is compared against the co-located read base and its two neighbors) or
plain positionwise Hamming.  The count of mismatched cells in a row drives
a charge-redistribution matchline voltage

    V_ML = (n_mis / N) * VDD,

whose variance under i.i.d. capacitor mismatch ~N(mu_C, sigma_C^2) is

    Var(V_ML) = n_mis * (N - n_mis) / N^3 * (sigma_C / mu_C)^2 * VDD^2,

and a sense amplifier compares V_ML against a reference voltage derived
from the match threshold T.  Per-search charge energy for one row is

    E = n_mis * (N - n_mis) / N * mu_C * VDD^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import rng
from .genome import GenomeStore, decode_bases, encode_bases


class MatchMode(Enum):
    """Cell comparison mode: shift-tolerant or positionwise."""

    ED_STAR = "ed_star"
    HD = "hd"

    @classmethod
    def parse(cls, text: str) -> "MatchMode":
        for mode in cls:
            if mode.value == text:
                return mode
        raise ValueError(f"unknown match mode {text!r}")


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 256          # rows per array (M)
    cells: int = 256         # cells per row (N), one base per cell
    vdd: float = 1.2         # supply voltage, volts
    array_count: int = 512

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cells < 1 or self.array_count < 1:
            raise ValueError("rows, cells, and array_count must all be >= 1")
        if self.vdd <= 0:
            raise ValueError("vdd must be positive")


IDEAL = "ideal"
GAUSSIAN_FORMULA = "gaussian_formula"
MONTECARLO_CAPS = "montecarlo_caps"
PER_ARRAY_INSTANCE = "per_array_instance"
PER_TRIAL = "per_trial"

# The current-domain readout that this charge-domain design is measured
# against resolves at most 44 matchline states; inverting the 3-sigma state
# count below gives the equivalent relative noise used to emulate it.
CURRENT_DOMAIN_STATES = 44
CURRENT_DOMAIN_SIGMA = 1.0 / (3.0 * math.sqrt(CURRENT_DOMAIN_STATES))


@dataclass(frozen=True)
class NoiseModel:
    """Capacitor-mismatch noise on the matchline voltage.

    mode 'ideal' is the exact linear voltage; 'gaussian_formula' samples a
    normal with the closed-form variance above; 'montecarlo_caps' draws
    per-cell capacitances and computes the actual charge-divider ratio.
    resample 'per_array_instance' freezes capacitances per array (mismatch
    is a fabrication artifact); 'per_trial' redraws them on every search.
    """

    mu_c: float = 2e-15
    sigma_over_mu: float = 0.014
    mode: str = GAUSSIAN_FORMULA
    resample: str = PER_ARRAY_INSTANCE

    def __post_init__(self) -> None:
        if self.sigma_over_mu < 0:
            raise ValueError("sigma_over_mu must be >= 0")
        if self.mu_c <= 0:
            raise ValueError("mu_c must be positive")
        if self.mode not in (IDEAL, GAUSSIAN_FORMULA, MONTECARLO_CAPS):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.resample not in (PER_ARRAY_INSTANCE, PER_TRIAL):
            raise ValueError(f"unknown resample policy {self.resample!r}")

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls(mode=IDEAL)

    @classmethod
    def current_domain_emulated(cls) -> "NoiseModel":
        """Gaussian matchline noise sized so only 44 states are separable."""
        return cls(
            sigma_over_mu=CURRENT_DOMAIN_SIGMA, mode=GAUSSIAN_FORMULA, resample=PER_TRIAL
        )


@dataclass
class MatchOutcome:
    row: int
    n_mis: int
    v_ml: float
    decision: bool


@dataclass
class EnergyEstimate:
    joules_per_search: float
    scope: str  # "per_row" | "per_array"


def cell_match(stored: str, read: str, i: int, mode: MatchMode) -> bool:
    """One cell's comparison of its stored base against the read.

    ED_STAR: match iff the stored base equals the co-located read base or
    either immediate neighbor (edge cells only see the neighbors that
    exist).  HD: match iff the stored base equals the co-located base.
    """
    if not 0 <= i < len(read):
        raise IndexError(f"cell index {i} out of range for read of length {len(read)}")
    if mode is MatchMode.HD:
        return stored == read[i]
    lo = max(0, i - 1)
    return stored in read[lo : i + 2]


def row_mismatch_count(segment: str, read: str, mode: MatchMode) -> int:
    """Number of mismatched cells; in ED_STAR mode this is the row's ED*."""
    if len(segment) != len(read):
        raise ValueError(
            f"segment and read lengths differ: {len(segment)} vs {len(read)}"
        )
    return sum(
        not cell_match(segment[i], read, i, mode) for i in range(len(segment))
    )


def mismatch_counts(
    segment_codes: np.ndarray,
    read_codes: np.ndarray,
    mode: MatchMode,
    read_chunk: int = 64,
) -> np.ndarray:
    """(reads, rows) mismatch-count matrix, vectorized over row/read pairs.

    Decision-identical to row_mismatch_count on every pair; chunked over
    reads to bound the size of the broadcast intermediates.
    """
    segs = np.asarray(segment_codes, dtype=np.uint8)
    reads = np.asarray(read_codes, dtype=np.uint8)
    if segs.shape[1] != reads.shape[1]:
        raise ValueError("segment and read widths differ")
    n_cells = segs.shape[1]
    out = np.empty((reads.shape[0], segs.shape[0]), dtype=np.int16)
    for lo in range(0, reads.shape[0], read_chunk):
        rd = reads[lo : lo + read_chunk]
        match = rd[:, None, :] == segs[None, :, :]
        if mode is MatchMode.ED_STAR:
            left = rd[:, None, :-1] == segs[None, :, 1:]   # stored[j] vs read[j-1]
            right = rd[:, None, 1:] == segs[None, :, :-1]  # stored[j] vs read[j+1]
            match[:, :, 1:] |= left
            match[:, :, :-1] |= right
        out[lo : lo + read_chunk] = n_cells - match.sum(axis=2, dtype=np.int16)
    return out


def ml_variance(n_mis: int | np.ndarray, config: ArrayConfig, noise: NoiseModel):
    """Closed-form matchline-voltage variance under capacitor mismatch."""
    if noise.mode == IDEAL:
        return np.zeros_like(np.asarray(n_mis, dtype=float)) if np.ndim(n_mis) else 0.0
    n = np.asarray(n_mis, dtype=float)
    N = config.cells
    var = n * (N - n) / N**3 * noise.sigma_over_mu**2 * config.vdd**2
    return var if np.ndim(n_mis) else float(var)


def matchline_voltage(
    n_mis: int,
    config: ArrayConfig,
    noise: NoiseModel,
    gen: np.random.Generator | None = None,
    caps: np.ndarray | None = None,
) -> float:
    """Sample the matchline voltage for a row with n_mis mismatched cells.

    'montecarlo_caps' uses the provided per-cell capacitances (a frozen
    array instance) or draws fresh ones from gen; because capacitances are
    i.i.d., which specific cells mismatch does not affect the distribution.
    """
    N = config.cells
    if not 0 <= n_mis <= N:
        raise ValueError(f"n_mis must be in [0, {N}], got {n_mis}")
    ideal = n_mis / N * config.vdd
    if noise.mode == IDEAL:
        return ideal
    if noise.mode == GAUSSIAN_FORMULA:
        if gen is None:
            raise ValueError("gaussian_formula mode needs a random generator")
        return float(gen.normal(ideal, math.sqrt(ml_variance(n_mis, config, noise))))
    if caps is None:
        if gen is None:
            raise ValueError("montecarlo_caps mode needs caps or a random generator")
        caps = gen.normal(noise.mu_c, noise.sigma_over_mu * noise.mu_c, size=N)
    elif len(caps) != N:
        raise ValueError(f"caps must have one entry per cell ({N})")
    return float(config.vdd * caps[:n_mis].sum() / caps.sum())


def reference_voltage(threshold: int, config: ArrayConfig) -> float:
    """Sense reference, centered between the levels for T and T+1 mismatches.

    Placing it exactly on the T level would make the required 'count <= T
    matches' rule metastable under any noise.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return (threshold + 0.5) / config.cells * config.vdd


def sense(v_ml: float, threshold: int, config: ArrayConfig) -> bool:
    """Sense-amplifier decision: match iff V_ML <= V_ref."""
    return v_ml <= reference_voltage(threshold, config)


def energy_joules(n_mis, cells: int, mu_c: float, vdd: float):
    """Per-row charge energy of one search; ufunc-friendly."""
    n = np.asarray(n_mis, dtype=float)
    e = n * (cells - n) / cells * mu_c * vdd**2
    return e if np.ndim(n_mis) else float(e)


def energy_per_search(
    n_mis: int, config: ArrayConfig, noise: NoiseModel, scope: str = "per_row"
) -> EnergyEstimate:
    if not 0 <= n_mis <= config.cells:
        raise ValueError(f"n_mis must be in [0, {config.cells}], got {n_mis}")
    if scope not in ("per_row", "per_array"):
        raise ValueError(f"unknown energy scope {scope!r}")
    e = energy_joules(n_mis, config.cells, noise.mu_c, config.vdd)
    if scope == "per_array":
        e *= config.rows
    return EnergyEstimate(joules_per_search=e, scope=scope)


def distinguishable_states(sigma_over_mu: float) -> float:
    """Largest state count whose level spacing stays >= 6 sigma at midpoint.

    The worst-case matchline sigma for S levels is (sigma/mu)*VDD/(2*sqrt(S)),
    so the spacing constraint VDD/S >= 6*sigma_worst collapses to the closed
    form floor((mu / (3*sigma))^2).  Returns math.inf for zero mismatch.
    """
    if sigma_over_mu < 0:
        raise ValueError("sigma_over_mu must be >= 0")
    if sigma_over_mu == 0:
        return math.inf
    return float(math.floor((1.0 / (3.0 * sigma_over_mu)) ** 2))


def frozen_caps(
    noise: NoiseModel, config: ArrayConfig, row_count: int, caps_seed: int
) -> np.ndarray | None:
    """Per-cell capacitances frozen per array instance, or None.

    Derived deterministically from (caps_seed, array index) so a reloaded
    image reproduces its mismatch pattern bit-exactly.
    """
    if noise.mode != MONTECARLO_CAPS or noise.resample != PER_ARRAY_INSTANCE:
        return None
    mats = []
    M = config.rows
    for a in range((row_count + M - 1) // M):
        n_rows = min(M, row_count - a * M)
        gen = rng.substream(caps_seed, rng.CAPS, a)
        mats.append(
            gen.normal(
                noise.mu_c,
                noise.sigma_over_mu * noise.mu_c,
                size=(n_rows, config.cells),
            )
        )
    return np.vstack(mats)


# --- array image: a store loaded for searching ----------------------------

IMAGE_MAGIC = "# chargecam array image v1"


class ImageFormatError(ValueError):
    """Raised when an array-image file does not match the expected schema."""


@dataclass
class ArrayImage:
    """Encoded segments plus the physical configuration they are stored in.

    Rows are packed into arrays of config.rows each; row k lives in array
    k // rows.  When the noise model freezes capacitor mismatch per array
    instance, the per-cell capacitances are derived deterministically from
    caps_seed, so an image reloaded from disk reproduces them bit-exactly.
    """

    config: ArrayConfig
    noise: NoiseModel
    segment_codes: np.ndarray  # (rows_total, cells) uint8
    offsets: np.ndarray        # (rows_total,) int64 reference offsets
    mode: MatchMode = MatchMode.ED_STAR
    caps_seed: int = 0
    _caps: np.ndarray | None = field(default=None, repr=False)

    @property
    def row_count(self) -> int:
        return int(self.segment_codes.shape[0])

    def array_of_row(self, row: int) -> int:
        return row // self.config.rows

    def caps(self) -> np.ndarray | None:
        """Frozen per-cell capacitances, (rows_total, cells), or None."""
        if self._caps is None:
            self._caps = frozen_caps(self.noise, self.config, self.row_count, self.caps_seed)
        return self._caps

    @classmethod
    def from_store(
        cls,
        store: GenomeStore,
        config: ArrayConfig | None = None,
        noise: NoiseModel | None = None,
        mode: MatchMode = MatchMode.ED_STAR,
        caps_seed: int = 0,
    ) -> "ArrayImage":
        config = config or ArrayConfig()
        noise = noise or NoiseModel()
        if store.segment_length != config.cells:
            config = replace(config, cells=store.segment_length)
        return cls(
            config=config,
            noise=noise,
            segment_codes=store.segment_codes(),
            offsets=np.array([s.offset for s in store.segments], dtype=np.int64),
            mode=mode,
            caps_seed=caps_seed,
        )

    def save(self, path: str | Path) -> None:
        with Path(path).open("w") as fh:
            fh.write(IMAGE_MAGIC + "\n")
            fh.write(f"rows = {self.config.rows}\n")
            fh.write(f"cells = {self.config.cells}\n")
            fh.write(f"vdd = {self.config.vdd!r}\n")
            fh.write(f"array_count = {self.config.array_count}\n")
            fh.write(f"mode = {self.mode.value}\n")
            fh.write(f"noise.mode = {self.noise.mode}\n")
            fh.write(f"noise.mu_c = {self.noise.mu_c!r}\n")
            fh.write(f"noise.sigma_over_mu = {self.noise.sigma_over_mu!r}\n")
            fh.write(f"noise.resample = {self.noise.resample}\n")
            fh.write(f"caps_seed = {self.caps_seed}\n")
            fh.write("[rows]\n")
            for k in range(self.row_count):
                bases = decode_bases(self.segment_codes[k])
                fh.write(f"{k}\t{int(self.offsets[k])}\t{bases}\n")

    @classmethod
    def load(cls, path: str | Path) -> "ArrayImage":
        path = Path(path)
        header: dict[str, str] = {}
        rows: list[tuple[int, int, str]] = []
        with path.open() as fh:
            first = fh.readline().rstrip("\n")
            if first != IMAGE_MAGIC:
                raise ImageFormatError(f"{path}: not a chargecam array image")
            in_rows = False
            for lineno, line in enumerate(fh, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                if line == "[rows]":
                    in_rows = True
                    continue
                if not in_rows:
                    key, sep, value = line.partition("=")
                    if not sep:
                        raise ImageFormatError(f"{path}:{lineno}: bad header line")
                    header[key.strip()] = value.strip()
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ImageFormatError(f"{path}:{lineno}: bad row record")
                rows.append((int(parts[0]), int(parts[1]), parts[2]))
        try:
            config = ArrayConfig(
                rows=int(header["rows"]),
                cells=int(header["cells"]),
                vdd=float(header["vdd"]),
                array_count=int(header["array_count"]),
            )
            noise = NoiseModel(
                mu_c=float(header["noise.mu_c"]),
                sigma_over_mu=float(header["noise.sigma_over_mu"]),
                mode=header["noise.mode"],
                resample=header["noise.resample"],
            )
            mode = MatchMode.parse(header["mode"])
            caps_seed = int(header["caps_seed"])
        except KeyError as exc:
            raise ImageFormatError(f"{path}: missing header key {exc}") from None
        if not rows:
            raise ImageFormatError(f"{path}: image has no rows")
        codes = np.empty((len(rows), config.cells), dtype=np.uint8)
        offsets = np.empty(len(rows), dtype=np.int64)
        for k, offset, bases in rows:
            if len(bases) != config.cells:
                raise ImageFormatError(f"{path}: row {k} has {len(bases)} bases")
            codes[k] = encode_bases(bases)
            offsets[k] = offset
        return cls(
            config=config,
            noise=noise,
            segment_codes=codes,
            offsets=offsets,
            mode=mode,
            caps_seed=caps_seed,
        )


def search(
    image: ArrayImage,
    read: str,
    threshold: int,
    mode: MatchMode | None = None,
    noise: NoiseModel | None = None,
    seed: int = 0,
    read_id: int = 0,
) -> list[MatchOutcome]:
    """Search every stored row for the read at the given threshold.

    Rows are evaluated independently; each row's voltage sample comes from a
    substream keyed by (seed, array, row, read_id), so outcomes do not
    depend on evaluation order.
    """
    mode = mode or image.mode
    noise = noise or image.noise
    read_codes = encode_bases(read)[None, :]
    if read_codes.shape[1] != image.config.cells:
        raise ValueError(
            f"read length {read_codes.shape[1]} must equal row width {image.config.cells}"
        )
    counts = mismatch_counts(image.segment_codes, read_codes, mode)[0]
    caps = image.caps() if noise is image.noise else None
    outcomes = []
    for row in range(image.row_count):
        n_mis = int(counts[row])
        if noise.mode == IDEAL:
            v = matchline_voltage(n_mis, image.config, noise)
        else:
            gen = rng.substream(seed, rng.SEARCH, image.array_of_row(row), row, read_id)
            row_caps = caps[row] if caps is not None else None
            v = matchline_voltage(n_mis, image.config, noise, gen, caps=row_caps)
        outcomes.append(
            MatchOutcome(row=row, n_mis=n_mis, v_ml=v, decision=sense(v, threshold, image.config))
        )
    return outcomes
