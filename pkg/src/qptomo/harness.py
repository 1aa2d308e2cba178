"""Simulation campaigns: Bell-state distance curves and ensemble averages.

A campaign simulates ``runs_per_point`` experiments at every ``N`` of the
grid for each true state and POM, estimates the state with the RD and/or
ML estimator, averages the trace distances, fits ``D = a / N**c`` and
derives the number of pairs needed to reach ``d_thr`` together with the
performance factor eta.

Random streams are derived from the master seed with
``numpy.random.SeedSequence`` spawn keys, so every (state, POM, N) cell
has its own independent stream and results do not depend on the order in
which cells are processed.
"""

import csv
import hashlib
import json
import logging
import os
import platform
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .estimate import PHYSICAL_TOL, MlConfig, ml_estimate_batch, rd_estimate_batch
from .metrics import D_THRESHOLD, eta, fit_power_law, n_to_threshold, trace_distance_batch
from .pom import make_pom, pom_to_dict, probabilities
from .simulate import clean_probabilities
from .states import BELL_LABELS, EnsembleSpec, calibrate_biased_mean, random_state

log = logging.getLogger(__name__)

DEFAULT_GRID = tuple(range(250, 6001, 250))
CAMPAIGN_KINDS = ("bell", "ensemble_average", "single_state")
ESTIMATORS = ("rd", "ml")
POMS = ("product", "sic")
MAX_EXCLUDED_FRACTION = 0.01

# a looser ML threshold than the library default; see README
CAMPAIGN_ML = MlConfig(stop_threshold=1e-5)

BIASED_TARGET_PURITY = 0.8
BIASED_CONFIDENCE = 0.9

# spawn-key prefixes of the independent random streams
_STREAM_STATES = 0
_STREAM_CLICKS = 1
_STREAM_CALIBRATION = 2


class CampaignError(RuntimeError):
    pass


@dataclass
class CampaignConfig:
    kind: str = "bell"
    ensemble: EnsembleSpec = None
    n_grid: tuple = DEFAULT_GRID
    runs_per_point: int = 100
    n_states: int = 100
    estimators: tuple = ESTIMATORS
    poms: tuple = POMS
    d_thr: float = D_THRESHOLD
    master_seed: int = 0
    ml: MlConfig = CAMPAIGN_ML
    bell_states: tuple = BELL_LABELS
    keep_raw: bool = False
    skip_physical_rd: bool = True

    def __post_init__(self):
        if self.kind not in CAMPAIGN_KINDS:
            raise ValueError(f"unknown campaign kind {self.kind!r}")
        self.n_grid = tuple(int(n) for n in self.n_grid)
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if min(self.n_grid) < 16:
            raise ValueError("every N in the grid must be at least 16")
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be positive")
        self.estimators = tuple(self.estimators)
        self.poms = tuple(self.poms)
        for e in self.estimators:
            if e not in ESTIMATORS:
                raise ValueError(f"unknown estimator {e!r}")
        for p in self.poms:
            if p not in POMS:
                raise ValueError(f"unknown POM {p!r}")
        if self.kind == "ensemble_average" and self.ensemble is None:
            raise ValueError("ensemble campaigns need an ensemble spec")

    def to_dict(self):
        d = {
            "kind": self.kind,
            "n_grid": list(self.n_grid),
            "runs_per_point": self.runs_per_point,
            "n_states": self.n_states,
            "estimators": list(self.estimators),
            "poms": list(self.poms),
            "d_thr": self.d_thr,
            "master_seed": self.master_seed,
            "ml": self.ml.to_dict(),
            "bell_states": list(self.bell_states),
            "keep_raw": self.keep_raw,
            "skip_physical_rd": self.skip_physical_rd,
        }
        if self.ensemble is not None:
            d["ensemble"] = self.ensemble.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "ensemble" in d and d["ensemble"] is not None:
            d["ensemble"] = EnsembleSpec.from_dict(d["ensemble"])
        if "ml" in d:
            d["ml"] = MlConfig.from_dict(d["ml"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


def load_config(path):
    with open(path) as fh:
        return CampaignConfig.from_dict(json.load(fh))


@dataclass
class StateOutcome:
    """Per-state simulation output for one POM."""
    label: str
    pom: str
    distances: dict                # estimator -> (len(grid), runs) array, NaN where excluded
    rd_unphysical: np.ndarray      # (len(grid), runs) bool
    ml_iterations: np.ndarray = None
    ml_excluded: int = 0


@dataclass
class CampaignResult:
    config: CampaignConfig
    points: list = field(default_factory=list)
    fits: list = field(default_factory=list)
    etas: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    raw: list = field(default_factory=list)
    unphysical: list = field(default_factory=list)
    ml_runs: int = 0
    ml_excluded: int = 0
    states: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def eta_for(self, label, estimator):
        for row in self.etas:
            if row["state_label"] == label and row["estimator"] == estimator:
                return row["eta"]
        raise KeyError((label, estimator))

    def fit_for(self, label, pom, estimator):
        for row in self.fits:
            if (row["state_label"], row["pom"], row["estimator"]) == (label, pom, estimator):
                return row
        raise KeyError((label, pom, estimator))


def _click_rng(cfg, state_idx, pom_idx, n_idx):
    ss = np.random.SeedSequence(cfg.master_seed,
                                spawn_key=(_STREAM_CLICKS, state_idx, pom_idx, n_idx))
    return np.random.default_rng(ss)


def simulate_state(rho, label, pom, pom_idx, state_idx, cfg):
    """Simulate every (N, run) experiment for one state and POM and score the estimates."""
    p = clean_probabilities(probabilities(pom, rho))
    grid = cfg.n_grid
    runs = cfg.runs_per_point
    freqs = np.empty((len(grid), runs, 16))
    for k, n in enumerate(grid):
        rng = _click_rng(cfg, state_idx, pom_idx, k)
        freqs[k] = rng.multinomial(n, p, size=runs) / n
    flat = freqs.reshape(-1, 16)

    rd, min_eig = rd_estimate_batch(pom, flat)
    unphysical = min_eig < -PHYSICAL_TOL
    out = StateOutcome(label, pom.kind, {}, unphysical.reshape(len(grid), runs))
    if "rd" in cfg.estimators:
        out.distances["rd"] = trace_distance_batch(rd, rho).reshape(len(grid), runs)
    if "ml" in cfg.estimators:
        todo = unphysical if cfg.skip_physical_rd else np.ones(len(flat), dtype=bool)
        est = rd.copy()
        iters = np.zeros(len(flat), dtype=int)
        excluded = np.zeros(len(flat), dtype=bool)
        if np.any(todo):
            res = ml_estimate_batch(pom, flat[todo], cfg.ml)
            est[todo] = res["estimate"]
            iters[todo] = res["iterations"]
            excluded[todo] = res["status"] != 0
        d = trace_distance_batch(est, rho)
        d[excluded] = np.nan
        out.distances["ml"] = d.reshape(len(grid), runs)
        out.ml_iterations = iters.reshape(len(grid), runs)
        out.ml_excluded = int(excluded.sum())
    return out


def _fit_outcome(outcome, cfg):
    """Average distances per N and fit the power law; returns (point rows, fit rows)."""
    points, fits = [], []
    for est, dist in outcome.distances.items():
        means = []
        for n, row in zip(cfg.n_grid, dist):
            good = row[np.isfinite(row)]
            if good.size == 0:
                raise CampaignError(
                    f"no converged {est} runs for {outcome.label}/{outcome.pom} at N={n}")
            d_avg = float(np.mean(good))
            d_sd = float(np.std(good, ddof=1)) if good.size > 1 else 0.0
            means.append(d_avg)
            points.append({
                "state_label": outcome.label, "pom": outcome.pom, "estimator": est,
                "N": n, "D_avg": d_avg, "D_sd": d_sd, "runs": int(good.size),
            })
        fit = fit_power_law(list(zip(cfg.n_grid, means)))
        fits.append({
            "state_label": outcome.label, "pom": outcome.pom, "estimator": est,
            "a": fit.a, "c": fit.c, "residual_rms": fit.residual_rms,
            "n_thr": n_to_threshold(fit, cfg.d_thr), "fit": fit,
        })
    return points, fits


def _pom_digest(pom):
    """SHA-256 of the POM's JSON export, identifying the exact operators used."""
    blob = json.dumps(pom_to_dict(pom), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _run_states(cfg, states):
    """Core loop over (label, rho) pairs; fills a CampaignResult."""
    result = CampaignResult(cfg)
    poms = [make_pom(k) for k in cfg.poms]
    for s_idx, (label, rho) in enumerate(states):
        result.states[label] = rho
        fits_here = {}
        for p_idx, pom in enumerate(poms):
            outcome = simulate_state(rho, label, pom, p_idx, s_idx, cfg)
            points, fits = _fit_outcome(outcome, cfg)
            result.points.extend(points)
            result.fits.extend(fits)
            for fr in fits:
                fits_here[(fr["pom"], fr["estimator"])] = fr["fit"]
            for k, n in enumerate(cfg.n_grid):
                result.unphysical.append({
                    "state_label": label, "pom": pom.kind, "N": n,
                    "unphysical": int(outcome.rd_unphysical[k].sum()),
                    "runs": cfg.runs_per_point,
                })
            if "ml" in cfg.estimators:
                result.ml_runs += outcome.ml_iterations.size
                result.ml_excluded += outcome.ml_excluded
            if cfg.keep_raw:
                for est, dist in outcome.distances.items():
                    for k, n in enumerate(cfg.n_grid):
                        for r, dval in enumerate(dist[k]):
                            result.raw.append({
                                "state_label": label, "pom": pom.kind, "estimator": est,
                                "N": n, "run": r, "D": float(dval),
                                "rd_physical": int(not outcome.rd_unphysical[k, r]),
                            })
        if set(cfg.poms) == set(POMS):
            for est in cfg.estimators:
                rep = eta(fits_here[("product", est)], fits_here[("sic", est)], cfg.d_thr)
                result.etas.append({
                    "state_label": label, "estimator": est, "eta": rep.eta,
                    "n_prod_thr": rep.n_prod_thr, "n_sic_thr": rep.n_sic_thr,
                    "d_thr": rep.d_thr,
                })
        log.info("state %s done", label)

    if result.ml_runs and result.ml_excluded > MAX_EXCLUDED_FRACTION * result.ml_runs:
        raise CampaignError(
            f"{result.ml_excluded} of {result.ml_runs} ML runs did not converge")
    if result.ml_excluded:
        log.warning("%d ML runs excluded (non-converged)", result.ml_excluded)
    result.summary = summarize(result)
    result.provenance = {
        "config": cfg.to_dict(),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "ml_runs": result.ml_runs,
        "ml_excluded": result.ml_excluded,
        "poms": {p.kind: _pom_digest(p) for p in poms},
    }
    return result


def _mean_sd(values):
    v = np.asarray(values, dtype=float)
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return {"mean": float(np.mean(v)), "sd": sd, "n": int(v.size)}


def summarize(result):
    """Mean and standard deviation over states of n_thr per (POM, estimator) and of eta."""
    cells = {}
    for est in result.config.estimators:
        cell = {}
        for pom in result.config.poms:
            vals = [f["n_thr"] for f in result.fits if f["pom"] == pom and f["estimator"] == est]
            cell["prod" if pom == "product" else "sic"] = _mean_sd(vals)
        etas = [e["eta"] for e in result.etas if e["estimator"] == est]
        if etas:
            cell["eta"] = _mean_sd(etas)
        cells[est] = cell
    return cells


def run_bell_campaign(cfg):
    if cfg.kind != "bell":
        raise ValueError("run_bell_campaign needs kind='bell'")
    states = [(label, random_state(EnsembleSpec("bell", label=label), None))
              for label in cfg.bell_states]
    return _run_states(cfg, states)


def run_single_state_campaign(cfg):
    if cfg.kind != "single_state" or cfg.ensemble is None:
        raise ValueError("single-state campaigns need kind='single_state' and a bell/fixed ensemble")
    spec = cfg.ensemble
    rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed, spawn_key=(_STREAM_STATES, 0)))
    label = spec.label or spec.kind
    return _run_states(cfg, [(label, random_state(spec, rng))])


def resolve_ensemble(cfg):
    """Fill in the offset matrix of a biased ensemble by calibration when it is missing."""
    spec = cfg.ensemble
    if spec.kind == "biased_mixed" and spec.mean is None:
        rng = np.random.default_rng(
            np.random.SeedSequence(cfg.master_seed, spawn_key=(_STREAM_CALIBRATION, spec.seed)))
        mean = calibrate_biased_mean(BIASED_TARGET_PURITY, BIASED_CONFIDENCE, rng, rank=spec.rank)
        spec = replace(spec, mean=mean)
    return spec


def sample_ensemble(cfg):
    spec = resolve_ensemble(cfg)
    states = []
    for i in range(cfg.n_states):
        ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(_STREAM_STATES, spec.seed, i))
        states.append((f"{spec.kind}_{i:04d}", random_state(spec, np.random.default_rng(ss))))
    return spec, states


def run_ensemble_campaign(cfg):
    if cfg.kind != "ensemble_average":
        raise ValueError("run_ensemble_campaign needs kind='ensemble_average'")
    spec, states = sample_ensemble(cfg)
    result = _run_states(cfg, states)
    result.summary = {"ensemble": spec.kind, "n_states": cfg.n_states,
                      "d_thr": cfg.d_thr, "cells": result.summary}
    if spec.mean is not None:
        result.provenance["ensemble_mean_scale"] = float(abs(spec.mean[0, 0]))
    return result


def run_campaign(cfg):
    if cfg.kind == "bell":
        return run_bell_campaign(cfg)
    if cfg.kind == "ensemble_average":
        return run_ensemble_campaign(cfg)
    return run_single_state_campaign(cfg)


# --- output ----------------------------------------------------------------

POINT_COLUMNS = ["state_label", "pom", "estimator", "N", "D_avg", "D_sd", "runs"]
FIT_COLUMNS = ["state_label", "pom", "estimator", "a", "c", "residual_rms"]
ETA_COLUMNS = ["state_label", "estimator", "eta", "n_prod_thr", "n_sic_thr", "d_thr"]
RAW_COLUMNS = ["state_label", "pom", "estimator", "N", "run", "D", "rd_physical"]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def write_outputs(result, out_dir):
    """Write the campaign CSV/JSON files; returns the list of paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    write_csv(path("fig1_points.csv"), POINT_COLUMNS, result.points)
    write_csv(path("fig1_fits.csv"), FIT_COLUMNS, result.fits)
    if result.etas:
        write_csv(path("eta.csv"), ETA_COLUMNS, result.etas)
    if result.config.keep_raw:
        write_csv(path("raw_runs.csv"), RAW_COLUMNS, result.raw)
    if result.config.kind == "ensemble_average":
        with open(path("table_summary.json"), "w") as fh:
            json.dump(result.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    with open(path("provenance.json"), "w") as fh:
        json.dump(result.provenance, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written
