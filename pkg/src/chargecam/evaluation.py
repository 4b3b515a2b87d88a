"""End-to-end accuracy, cycle, and energy evaluation.

Given a stored reference and a set of reads with known origins, every
(read, row) pair is labeled by the exact edit-distance oracle and then
classified by each requested strategy at each threshold.  Noise substreams
are keyed by (seed, search purpose, threshold, read), where the purpose
identifies the physical search being sampled (base shift-tolerant search,
k-th rotated search, HD search, or the hdac arbitration draw).  Two
consequences: any chunking or parallel schedule over reads yields
byte-identical reports, and strategies that share a physical search see
the same noise sample, so for example tasr below its trigger bound is
bit-identical to the plain search rather than merely statistically equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .array_model import (
    GAUSSIAN_FORMULA,
    IDEAL,
    MONTECARLO_CAPS,
    PER_ARRAY_INSTANCE,
    ArrayConfig,
    MatchMode,
    NoiseModel,
    energy_joules,
    mismatch_counts,
    reference_voltage,
)
from .array_model import frozen_caps as derive_frozen_caps
from .genome import (
    ErrorProfile,
    GenomeStore,
    ReadRecord,
    Segment,
    decode_bases,
    encode_bases,
    extract_reads,
    segment_reference,
    synthesize_genome,
)
from .oracles import distance_matrix
from .strategies import (
    HdacParams,
    TasrParams,
    hdac_active,
    hdac_probability,
    rotation_offsets,
    tasr_lower_bound,
)

PLAIN_ED_STAR = "plain_ed_star"
HD_ONLY = "hd_only"
HDAC = "hdac"
TASR = "tasr"
HDAC_TASR = "hdac+tasr"
EDAM_EMULATED = "edam_emulated"

STRATEGIES = (PLAIN_ED_STAR, HD_ONLY, HDAC, TASR, HDAC_TASR, EDAM_EMULATED)

# Noise-substream purpose tags: one per physical search a read can trigger.
_P_STAR = 0     # base shift-tolerant search
_P_HD = 1       # positionwise search (hd_only base, hdac second cycle)
_P_HDAC_U = 2   # hdac arbitration uniforms
_P_EDAM = 3     # emulated current-domain readout
_P_ROT = 4      # k-th rotated search uses tag _P_ROT + k

REPORT_HEADER = "condition,strategy,T,tp,fp,fn,tn,sensitivity,precision,f1,cycles,energy_joules,seed"
SWEEP_HEADER = "sigma_over_mu,n_mis,N,var_empirical,var_eq2,rel_err"

DESK_SEGMENTS = 2048
DESK_READS = 1024


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


def compute_f1(counts: ConfusionCounts) -> tuple[float, float, float]:
    """(sensitivity, precision, f1) with explicit degenerate conventions.

    tp = 0 with any fp or fn present scores 0; a class with no positives
    anywhere (tp = fp = fn = 0) is undefined and reported as NaN so that
    averages can exclude it.
    """
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    if tp == 0 and fp == 0 and fn == 0:
        return (math.nan, math.nan, math.nan)
    sens = tp / (tp + fn) if tp + fn else math.nan
    prec = tp / (tp + fp) if tp + fp else math.nan
    if tp == 0:
        return (0.0 if not math.isnan(sens) else sens, 0.0 if not math.isnan(prec) else prec, 0.0)
    f1 = 2 * sens * prec / (sens + prec)
    return (sens, prec, f1)


@dataclass
class EvalRow:
    condition: str
    strategy: str
    threshold: int
    counts: ConfusionCounts
    sensitivity: float
    precision: float
    f1: float
    cycles: int
    energy_joules: float
    seed: int
    fired_count: int = 0


@dataclass
class EvalReport:
    condition: str
    seed: int
    rows: list[EvalRow] = field(default_factory=list)
    config_hash: str = ""

    def row(self, strategy: str, threshold: int) -> EvalRow:
        for r in self.rows:
            if r.strategy == strategy and r.threshold == threshold:
                return r
        raise KeyError(f"no row for strategy={strategy!r} T={threshold}")

    def to_csv(self) -> str:
        lines = [REPORT_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.condition},{r.strategy},{r.threshold},"
                f"{r.counts.tp},{r.counts.fp},{r.counts.fn},{r.counts.tn},"
                f"{r.sensitivity!r},{r.precision!r},{r.f1!r},"
                f"{r.cycles},{r.energy_joules!r},{r.seed}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EnergyComponents:
    """Summed per-row search energies over the whole (read, row) grid."""

    ed_star: float
    hd: float
    rotations: tuple[float, ...] = ()


def cycles_per_read(
    strategy: str,
    threshold: int,
    profile: ErrorProfile,
    hdac_params: HdacParams,
    tasr_params: TasrParams,
    read_length: int,
) -> int:
    """Search cycles one read costs under a strategy at a threshold.

    Every strategy spends one base search; hdac adds one HD search when its
    selection probability clears the disable floor; tasr adds one search
    per rotation when the threshold reaches the trigger bound.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    cycles = 1
    if strategy in (HDAC, HDAC_TASR) and hdac_active(profile, threshold, hdac_params):
        cycles += 1
    if strategy in (TASR, HDAC_TASR):
        if threshold >= tasr_lower_bound(profile, read_length, tasr_params):
            cycles += tasr_params.n_rotations
    return cycles


def cycle_energy_account(
    strategy: str,
    threshold: int,
    n_reads: int,
    profile: ErrorProfile,
    hdac_params: HdacParams,
    tasr_params: TasrParams,
    read_length: int,
    energy: EnergyComponents,
) -> tuple[int, float]:
    """Total cycles and joules for one (strategy, threshold) report row."""
    per_read = cycles_per_read(
        strategy, threshold, profile, hdac_params, tasr_params, read_length
    )
    joules = energy.hd if strategy == HD_ONLY else energy.ed_star
    if strategy in (HDAC, HDAC_TASR) and hdac_active(profile, threshold, hdac_params):
        joules += energy.hd
    if strategy in (TASR, HDAC_TASR):
        if threshold >= tasr_lower_bound(profile, read_length, tasr_params):
            joules += sum(energy.rotations[: tasr_params.n_rotations])
    return (n_reads * per_read, joules)


class _VoltageSampler:
    """Vectorized matchline sampling for one noise model over S rows.

    decide() consumes a fixed number of draws per call for a given model
    (one standard normal per row for the gaussian formula, one capacitance
    per cell for per-trial Monte Carlo, none otherwise), independent of the
    data, which keeps read substreams schedule-independent.
    """

    def __init__(self, config: ArrayConfig, noise: NoiseModel, caps: np.ndarray | None = None):
        self.config = config
        self.noise = noise
        self._slope = config.vdd / config.cells
        self._cum = None
        self._tot = None
        if noise.mode == MONTECARLO_CAPS and noise.resample == PER_ARRAY_INSTANCE:
            if caps is None:
                raise ValueError("frozen Monte Carlo sampling needs per-row capacitances")
            self._cum = np.concatenate(
                [np.zeros((caps.shape[0], 1)), np.cumsum(caps, axis=1)], axis=1
            )
            self._tot = caps.sum(axis=1)

    def voltages(self, n_mis: np.ndarray, gen: np.random.Generator | None) -> np.ndarray:
        n = n_mis.astype(np.float64)
        if self.noise.mode == IDEAL:
            return n * self._slope
        if self.noise.mode == GAUSSIAN_FORMULA:
            N = self.config.cells
            sigma = (
                np.sqrt(n * (N - n)) / N**1.5 * self.noise.sigma_over_mu * self.config.vdd
            )
            return n * self._slope + gen.standard_normal(n.shape) * sigma
        if self._cum is not None:
            rows = np.arange(len(n))
            return self.config.vdd * self._cum[rows, n_mis] / self._tot
        caps = gen.normal(
            self.noise.mu_c,
            self.noise.sigma_over_mu * self.noise.mu_c,
            size=(len(n), self.config.cells),
        )
        cum = np.cumsum(caps, axis=1)
        picked = np.where(n_mis > 0, cum[np.arange(len(n)), n_mis - 1], 0.0)
        return self.config.vdd * picked / cum[:, -1]

    def decide(self, n_mis: np.ndarray, threshold: int, gen: np.random.Generator | None) -> np.ndarray:
        if self.noise.mode == IDEAL:
            return n_mis <= threshold
        v_ref = reference_voltage(threshold, self.config)
        return self.voltages(n_mis, gen) <= v_ref


@dataclass
class _Dataset:
    """Precomputed matrices shared by every (strategy, threshold) pass."""

    seg_codes: np.ndarray
    read_codes: np.ndarray
    truth_dist: np.ndarray       # (R, S) capped exact edit distance
    nmis_star: np.ndarray        # (R, S) shift-tolerant mismatch counts
    nmis_hd: np.ndarray          # (R, S) positionwise mismatch counts
    nmis_rot: list[np.ndarray]   # per rotation offset, (R, S)
    energy: EnergyComponents


def _prepare(
    store: GenomeStore,
    reads: list[ReadRecord],
    max_threshold: int,
    config: ArrayConfig,
    noise: NoiseModel,
    tasr_params: TasrParams,
    need_rotations: bool,
    read_chunk: int,
) -> _Dataset:
    seg_codes = store.segment_codes()
    read_codes = np.stack([encode_bases(r.read) for r in reads])
    truth = distance_matrix(seg_codes, read_codes, cap=max_threshold)
    nmis_star = mismatch_counts(seg_codes, read_codes, MatchMode.ED_STAR, read_chunk)
    nmis_hd = mismatch_counts(seg_codes, read_codes, MatchMode.HD, read_chunk)
    nmis_rot = []
    rot_energy = []
    if need_rotations:
        for offset in rotation_offsets(tasr_params):
            rot_codes = np.roll(read_codes, -offset, axis=1)
            m = mismatch_counts(seg_codes, rot_codes, MatchMode.ED_STAR, read_chunk)
            nmis_rot.append(m)
            rot_energy.append(
                float(energy_joules(m, config.cells, noise.mu_c, config.vdd).sum())
            )
    energy = EnergyComponents(
        ed_star=float(energy_joules(nmis_star, config.cells, noise.mu_c, config.vdd).sum()),
        hd=float(energy_joules(nmis_hd, config.cells, noise.mu_c, config.vdd).sum()),
        rotations=tuple(rot_energy),
    )
    return _Dataset(seg_codes, read_codes, truth, nmis_star, nmis_hd, nmis_rot, energy)


def _decide_strategy(
    ds: _Dataset,
    strategy: str,
    threshold: int,
    profile: ErrorProfile,
    hdac_params: HdacParams,
    tasr_params: TasrParams,
    sampler: _VoltageSampler,
    edam_sampler: _VoltageSampler,
    seed: int,
    read_length: int,
) -> tuple[np.ndarray, int]:
    """(R, S) boolean decisions plus count of correction firings.

    Each physical search draws from a substream keyed by its purpose, so a
    search shared by several strategies (the base search of plain, tasr,
    and hdac; the HD search of hd_only and hdac) gets the same voltage
    sample in each of them.
    """
    n_reads = ds.nmis_star.shape[0]
    decisions = np.empty(ds.nmis_star.shape, dtype=bool)
    fired = 0
    use_tasr = strategy in (TASR, HDAC_TASR) and threshold >= tasr_lower_bound(
        profile, read_length, tasr_params
    )
    use_hdac = strategy in (HDAC, HDAC_TASR) and hdac_active(profile, threshold, hdac_params)
    p = hdac_probability(profile, threshold, hdac_params) if use_hdac else 0.0

    def stream(purpose: int, r: int) -> np.random.Generator:
        return rng.substream(seed, rng.EVAL, purpose, threshold, r)

    for r in range(n_reads):
        if strategy == HD_ONLY:
            decisions[r] = sampler.decide(ds.nmis_hd[r], threshold, stream(_P_HD, r))
            continue
        if strategy == EDAM_EMULATED:
            decisions[r] = edam_sampler.decide(ds.nmis_star[r], threshold, stream(_P_EDAM, r))
            continue
        o_star = sampler.decide(ds.nmis_star[r], threshold, stream(_P_STAR, r))
        if use_tasr:
            o_plain = o_star
            for k, m in enumerate(ds.nmis_rot[: tasr_params.n_rotations]):
                o_star = o_star | sampler.decide(m[r], threshold, stream(_P_ROT + k, r))
            fired += int(np.count_nonzero(o_star & ~o_plain))
        if use_hdac:
            o_hd = sampler.decide(ds.nmis_hd[r], threshold, stream(_P_HD, r))
            u = stream(_P_HDAC_U, r).random(o_star.shape)
            pick = (o_hd != o_star) & (u < p)
            fired += int(np.count_nonzero(pick))
            o_star = np.where(pick, o_hd, o_star)
        decisions[r] = o_star
    return decisions, fired


def evaluate(
    store: GenomeStore,
    reads: list[ReadRecord],
    profile: ErrorProfile,
    condition: str,
    thresholds: list[int],
    strategies: list[str],
    noise: NoiseModel | None = None,
    seed: int = 0,
    config: ArrayConfig | None = None,
    hdac_params: HdacParams | None = None,
    tasr_params: TasrParams | None = None,
    config_hash: str = "",
    read_chunk: int = 64,
    frozen_caps: np.ndarray | None = None,
) -> EvalReport:
    """Score every requested strategy at every threshold on one dataset."""
    if not thresholds:
        raise ValueError("thresholds must be non-empty")
    unknown = [s for s in strategies if s not in STRATEGIES]
    if unknown:
        raise ValueError(f"unknown strategies: {unknown}; valid: {list(STRATEGIES)}")
    noise = noise or NoiseModel()
    config = config or ArrayConfig(cells=store.segment_length)
    hdac_params = hdac_params or HdacParams()
    tasr_params = tasr_params or TasrParams()
    read_length = store.segment_length
    if frozen_caps is None:
        frozen_caps = derive_frozen_caps(noise, config, store.row_count, seed)

    need_rot = any(s in (TASR, HDAC_TASR) for s in strategies) and any(
        t >= tasr_lower_bound(profile, read_length, tasr_params) for t in thresholds
    )
    ds = _prepare(
        store, reads, max(thresholds), config, noise, tasr_params, need_rot, read_chunk
    )
    sampler = _VoltageSampler(config, noise, caps=frozen_caps)
    edam_sampler = _VoltageSampler(config, NoiseModel.current_domain_emulated())

    report = EvalReport(condition=condition, seed=seed, config_hash=config_hash)
    for strategy in strategies:
        for t in sorted(thresholds):
            truth = ds.truth_dist <= t
            decisions, fired = _decide_strategy(
                ds, strategy, t, profile, hdac_params, tasr_params,
                sampler, edam_sampler, seed, read_length,
            )
            counts = ConfusionCounts(
                tp=int(np.count_nonzero(decisions & truth)),
                fp=int(np.count_nonzero(decisions & ~truth)),
                fn=int(np.count_nonzero(~decisions & truth)),
                tn=int(np.count_nonzero(~decisions & ~truth)),
            )
            sens, prec, f1 = compute_f1(counts)
            cycles, joules = cycle_energy_account(
                strategy, t, len(reads), profile, hdac_params, tasr_params,
                read_length, ds.energy,
            )
            report.rows.append(
                EvalRow(
                    condition=condition,
                    strategy=strategy,
                    threshold=t,
                    counts=counts,
                    sensitivity=sens,
                    precision=prec,
                    f1=f1,
                    cycles=cycles,
                    energy_joules=joules,
                    seed=seed,
                    fired_count=fired,
                )
            )
    return report


def store_from_image(image) -> GenomeStore:
    """Reconstruct a GenomeStore from a saved array image.

    Segments are consecutive non-overlapping windows by invariant, so their
    concatenation reproduces the stored prefix of the reference (the dropped
    trailing remainder is not recoverable and not needed for evaluation).
    """
    segments = []
    pieces = []
    for k in range(image.row_count):
        bases = decode_bases(image.segment_codes[k])
        segments.append(Segment(row=k, offset=int(image.offsets[k]), bases=bases))
        pieces.append(bases)
    return GenomeStore(
        reference="".join(pieces),
        segment_length=image.config.cells,
        segments=segments,
    )


def build_dataset(
    condition: str,
    seed: int,
    n_segments: int = DESK_SEGMENTS,
    n_reads: int = DESK_READS,
    read_length: int = 256,
    aligned: bool = True,
    profile: ErrorProfile | None = None,
) -> tuple[GenomeStore, list[ReadRecord], ErrorProfile]:
    """Synthesize a reference and extract reads under a named condition."""
    profile = profile or ErrorProfile.for_condition(condition)
    genome = synthesize_genome(n_segments * read_length + 16, seed)
    store = segment_reference(genome, read_length)
    reads = extract_reads(store, n_reads, read_length, profile, seed, aligned=aligned)
    return store, reads, profile


def run_condition(
    condition: str,
    thresholds: list[int],
    strategies: list[str],
    noise: NoiseModel | None = None,
    seed: int = 0,
    n_segments: int = DESK_SEGMENTS,
    n_reads: int = DESK_READS,
    read_length: int = 256,
    hdac_params: HdacParams | None = None,
    tasr_params: TasrParams | None = None,
    config_hash: str = "",
    read_chunk: int = 64,
    profile: ErrorProfile | None = None,
) -> EvalReport:
    """Dataset synthesis plus evaluation for one named error condition."""
    store, reads, profile = build_dataset(
        condition, seed, n_segments, n_reads, read_length, profile=profile
    )
    return evaluate(
        store, reads, profile, condition, thresholds, strategies,
        noise=noise, seed=seed, hdac_params=hdac_params, tasr_params=tasr_params,
        config_hash=config_hash, read_chunk=read_chunk,
    )


@dataclass
class SweepRow:
    sigma_over_mu: float
    n_mis: int
    cells: int
    var_empirical: float
    var_eq2: float
    rel_err: float


def sweep_noise(
    sigma_values: list[float],
    n_mis_points: list[int],
    trials: int,
    seed: int = 0,
    config: ArrayConfig | None = None,
) -> list[SweepRow]:
    """Monte Carlo check of the closed-form matchline variance.

    Each point draws per-trial capacitances, computes the exact charge
    divider, and compares the sample variance against the formula.
    """
    if trials < 1000:
        raise ValueError("trials must be >= 1000 for a stable sample variance")
    config = config or ArrayConfig()
    N = config.cells
    rows = []
    for si, sigma in enumerate(sigma_values):
        if sigma < 0:
            raise ValueError("sigma_over_mu must be >= 0")
        for ni, n_mis in enumerate(n_mis_points):
            if not 0 <= n_mis <= N:
                raise ValueError(f"n_mis must be in [0, {N}]")
            if sigma == 0:
                # Normal(mu, 0) is a point mass: every capacitance equals mu
                # exactly, the divider is constant, and the variance is
                # identically zero; np.var would only report summation error.
                var_emp = 0.0
            else:
                gen = rng.substream(seed, rng.SWEEP, si, ni)
                samples = np.empty(trials)
                chunk = 20000
                mu_c = NoiseModel().mu_c
                for lo in range(0, trials, chunk):
                    k = min(chunk, trials - lo)
                    caps = gen.normal(mu_c, sigma * mu_c, size=(k, N))
                    samples[lo : lo + k] = (
                        config.vdd * caps[:, :n_mis].sum(axis=1) / caps.sum(axis=1)
                    )
                # variance is shift invariant; centering on the ideal level
                # avoids cancellation around the large mean
                var_emp = float(np.var(samples - n_mis / N * config.vdd, ddof=1))
            var_eq2 = n_mis * (N - n_mis) / N**3 * sigma**2 * config.vdd**2
            rel = abs(var_emp - var_eq2) / var_eq2 if var_eq2 > 0 else abs(var_emp)
            rows.append(SweepRow(sigma, n_mis, N, var_emp, var_eq2, rel))
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    lines = [SWEEP_HEADER]
    for r in rows:
        lines.append(
            f"{r.sigma_over_mu!r},{r.n_mis},{r.cells},"
            f"{r.var_empirical!r},{r.var_eq2!r},{r.rel_err!r}"
        )
    return "\n".join(lines) + "\n"
