"""Opacity transfer functions: coarse 16-gene chromosomes, the 256-entry
list form used at render time, edge-replicating smoothing, JSON round trips,
and sliding-window population seeding."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

NUM_OPACITY = 256
NUM_GENES = 16
GENE_SPAN = NUM_OPACITY // NUM_GENES
OPACITY_MAX = 255

# Coarse opacity levels for the initial population; low values dominate
# because accumulated opacity saturates quickly along a ray.
DEFAULT_SEED_LEVELS = (0, 1, 16, 64, 128)


def _check_values(values, n: int, what: str) -> tuple[int, ...]:
    vals = tuple(int(x) for x in values)
    if len(vals) != n:
        raise ValueError(f"{what} must have length {n}, got {len(vals)}")
    for i, x in enumerate(vals):
        if not 0 <= x <= OPACITY_MAX:
            raise ValueError(f"{what}[{i}] = {x} outside [0, {OPACITY_MAX}]")
    return vals


@dataclass(frozen=True)
class Chromosome:
    """16 coarse opacity genes, one per equal-width range of the data axis."""

    genes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "genes", _check_values(self.genes, NUM_GENES, "genes"))


@dataclass(frozen=True)
class TransferFunction:
    """Opacity per data bin: 256 integers in [0, 255]."""

    opacity: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "opacity", _check_values(self.opacity, NUM_OPACITY, "opacity")
        )


@dataclass(frozen=True)
class SeedConfig:
    """Parameters for the seeded initial population."""

    pop_size: int
    levels: tuple[int, ...] = DEFAULT_SEED_LEVELS
    n_ranges: int = NUM_GENES

    def __post_init__(self) -> None:
        levels = tuple(dict.fromkeys(int(x) for x in self.levels))
        if not levels:
            raise ValueError("levels must be non-empty")
        for x in levels:
            if not 0 <= x <= OPACITY_MAX:
                raise ValueError(f"seed level {x} outside [0, {OPACITY_MAX}]")
        object.__setattr__(self, "levels", levels)
        if self.n_ranges < 1 or NUM_OPACITY % self.n_ranges != 0:
            raise ValueError(f"n_ranges must divide {NUM_OPACITY}, got {self.n_ranges}")
        if self.pop_size < 1:
            raise ValueError(f"pop_size must be >= 1, got {self.pop_size}")


def expand(c: Chromosome) -> TransferFunction:
    """Expand genes to the 256-entry list: opacity[j] = genes[j // 16]."""
    return TransferFunction(tuple(np.repeat(np.array(c.genes), GENE_SPAN).tolist()))


def smooth(tf: TransferFunction) -> TransferFunction:
    """Apply the 0.2/0.6/0.2 weighted-average kernel with replicated edges.

    The real-valued intermediate is rounded half-up, so constant functions
    are fixed points and total mass is preserved up to per-entry rounding.
    """
    v = np.asarray(tf.opacity, dtype=np.float64)
    padded = np.concatenate(([v[0]], v, [v[-1]]))
    out = 0.2 * padded[:-2] + 0.6 * padded[1:-1] + 0.2 * padded[2:]
    rounded = np.clip(np.floor(out + 0.5), 0, OPACITY_MAX).astype(int)
    return TransferFunction(tuple(rounded.tolist()))


def window_chromosomes(cfg: SeedConfig) -> list[Chromosome]:
    """All sliding-window step functions: genes[k] = level on [start, start+width).

    Enumerates every start in [0, 15], every width in [1, 16 - start], and
    every level in cfg.levels; 136 windows per level for 16 ranges.
    """
    if cfg.n_ranges != NUM_GENES:
        raise ValueError(
            f"chromosomes have exactly {NUM_GENES} genes; n_ranges={cfg.n_ranges} unsupported"
        )
    out = []
    for start in range(cfg.n_ranges):
        for width in range(1, cfg.n_ranges - start + 1):
            for level in cfg.levels:
                genes = [0] * cfg.n_ranges
                genes[start : start + width] = [level] * width
                out.append(Chromosome(tuple(genes)))
    return out


def seed_population(cfg: SeedConfig, rng: np.random.Generator) -> list[Chromosome]:
    """Fill a population with uniform draws (with replacement) from the
    sliding-window candidate set."""
    candidates = window_chromosomes(cfg)
    picks = rng.integers(0, len(candidates), size=cfg.pop_size)
    return [candidates[int(i)] for i in picks]


def tf_to_json(tf: TransferFunction) -> str:
    return json.dumps({"version": 1, "opacity": list(tf.opacity)})


def tf_from_json(text: str) -> TransferFunction:
    obj = _parse_versioned(text)
    opacity = obj.get("opacity")
    if not isinstance(opacity, list):
        raise ValueError("missing or non-list 'opacity'")
    return TransferFunction(_check_values(_require_ints(opacity), NUM_OPACITY, "opacity"))


def chromosome_to_json(c: Chromosome) -> str:
    return json.dumps({"version": 1, "genes": list(c.genes)})


def chromosome_from_json(text: str) -> Chromosome:
    obj = _parse_versioned(text)
    genes = obj.get("genes")
    if not isinstance(genes, list):
        raise ValueError("missing or non-list 'genes'")
    return Chromosome(_check_values(_require_ints(genes), NUM_GENES, "genes"))


def _parse_versioned(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed JSON: {e}") from None
    if not isinstance(obj, dict):
        raise ValueError("expected a JSON object")
    if obj.get("version") != 1:
        raise ValueError(f"unsupported version {obj.get('version')!r}")
    return obj


def _require_ints(values: list) -> list[int]:
    out = []
    for x in values:
        if isinstance(x, bool) or not isinstance(x, int):
            raise ValueError(f"expected integer entries, got {x!r}")
        out.append(x)
    return out
