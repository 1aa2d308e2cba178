"""Finite-count click data for a POM and a true state."""

from dataclasses import dataclass

import numpy as np

from .pom import probabilities

NEGATIVE_TOL = 1e-9


@dataclass(frozen=True)
class ClickRecord:
    n: int
    counts: tuple
    pom_kind: str
    seed: int = None

    def __post_init__(self):
        if sum(self.counts) != self.n:
            raise ValueError("counts do not add up to the total")
        if any(c < 0 for c in self.counts):
            raise ValueError("negative count")

    def csv_row(self):
        seed = "" if self.seed is None else self.seed
        return [self.pom_kind, seed, self.n, *self.counts]

    @classmethod
    def from_csv_row(cls, row):
        kind, seed, n, *counts = row
        seed = None if seed in ("", None) else int(seed)
        return cls(int(n), tuple(int(c) for c in counts), kind, seed)


CSV_HEADER = ["pom_kind", "seed", "N"] + [f"c{m}{n}" for m in range(4) for n in range(4)]


def as_generator(rng):
    """Accept a Generator, a seed, or None; return ``(generator, seed_or_None)``."""
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def clean_probabilities(p):
    """Clip rounding dust below zero and renormalise."""
    p = np.asarray(p, dtype=float)
    if np.any(p < -NEGATIVE_TOL):
        raise ValueError(f"negative outcome probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    return p / p.sum(axis=-1, keepdims=True)


def simulate_clicks(pom, rho, n, rng=None):
    """Multinomial click counts for ``n`` measured qubit pairs."""
    if n < 1:
        raise ValueError("need at least one click")
    gen, seed = as_generator(rng)
    p = clean_probabilities(probabilities(pom, rho))
    counts = gen.multinomial(int(n), p)
    return ClickRecord(int(n), tuple(int(c) for c in counts), pom.kind, seed)


def simulate_counts(p, n, runs, rng):
    """``runs`` independent count vectors of ``n`` clicks each, shape (runs, 16)."""
    p = clean_probabilities(p)
    return rng.multinomial(int(n), p, size=runs)


def frequencies(c):
    if c.n == 0:
        raise ValueError("no clicks recorded")
    return np.asarray(c.counts, dtype=float) / c.n
