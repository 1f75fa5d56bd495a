"""Config-driven experiment runner with reproducible CSV/JSON outputs.

A run takes a JSON config, dispatches to the owning module, and writes a
CSV row file plus a JSON summary into the output directory.  Identical
configs byte-reproduce their row files: floats are formatted with a
fixed precision, trials execute in index order, and all randomness flows
through the (seed, stream) derivation.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, ensembles, pathgraphs
from .isotropic import AnnulusGrid, isotropic_deviation, least_singular_inf, resolvent_norm_sup
from .linalg import eigenvalues
from .linearization import BlockCycle, materialize, verify_linearization
from .outliers import PerturbationScenario, predict_outliers, realize, run_scenario
from .spectra import EmpiricalSpectrum, radial_ks

EXPERIMENTS = ("spectrum", "outliers", "isotropic", "lsv", "moments", "radial", "linearize")

THREADS_ENV_VAR = "RMT_LAB_THREADS"


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


# -- scenario / config serialization ----------------------------------------


def atom_from_config(spec) -> ensembles.AtomVariable:
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind == "Rademacher":
        return ensembles.rademacher()
    if kind == "RealGaussian":
        return ensembles.real_gaussian(spec.get("variance", 1.0))
    if kind == "ComplexGaussian":
        return ensembles.complex_gaussian(spec.get("variance", 1.0))
    if kind == "ScaledRademacher":
        return ensembles.scaled_rademacher(spec["sigma"])
    if kind == "DiscreteSymmetric":
        return ensembles.discrete_symmetric(spec["support"], spec["probs"])
    raise ConfigError(f"unknown atom kind {kind!r}")


def _complex_from_config(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    return complex(v[0], v[1])


def matrix_from_config(spec, n: int) -> np.ndarray:
    """Perturbation matrices: {"diag": [...]} or {"entries": [[...]]}."""
    out = np.zeros((n, n), dtype=complex)
    if "diag" in spec:
        vals = [_complex_from_config(v) for v in spec["diag"]]
        out[range(len(vals)), range(len(vals))] = vals
        return out
    if "entries" in spec:
        rows = spec["entries"]
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                out[i, j] = _complex_from_config(v)
        return out
    raise ConfigError("perturbation needs 'diag' or 'entries'")


def scenario_from_config(cfg) -> PerturbationScenario:
    n = cfg["n"]
    return PerturbationScenario(
        regime=cfg["regime"],
        m=cfg["m"],
        n=n,
        atoms=tuple(atom_from_config(a) for a in cfg.get("atoms", ["Rademacher"])),
        perturbations=tuple(matrix_from_config(p, n) for p in cfg.get("perturbations", [])),
        interleaving=tuple(cfg.get("interleaving", [])),
        epsilon=cfg.get("epsilon", 0.1),
        mu=_complex_from_config(cfg.get("mu", 0.0)),
        gamma=cfg.get("gamma", 0.0),
        zero_noise=cfg.get("zero_noise", False),
    )


def grid_from_config(cfg) -> AnnulusGrid:
    return AnnulusGrid(
        inner_radius=cfg.get("inner_radius", 1.5),
        outer_radius=cfg.get("outer_radius", 6.0),
        radial_points=cfg.get("radial_points", 12),
        angular_points=cfg.get("angular_points", 16),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    trials: int
    output_path: str
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        exp = data.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
        try:
            seed = int(data.get("seed", 0))
            trials = int(data.get("trials", 1))
        except (TypeError, ValueError) as exc:
            raise ConfigError("seed and trials must be integers") from exc
        if trials < 1:
            raise ConfigError("trials must be >= 1")
        return cls(
            experiment=exp,
            seed=seed,
            trials=trials,
            output_path=data.get("output_path", "."),
            raw=dict(data),
        )

    def resolved(self) -> dict:
        out = dict(self.raw)
        out.update(
            experiment=self.experiment,
            seed=self.seed,
            trials=self.trials,
            output_path=self.output_path,
        )
        return out

    def hash(self) -> str:
        canon = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass(frozen=True)
class RunRecord:
    config_hash: str
    started: float
    finished: float
    rows: str  # CSV payload, exactly as written
    summary: dict


# -- CSV helpers ------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_trials(fn, trials: int):
    """Run per-trial work, possibly in parallel, merging in trial order."""
    cap = _thread_cap()
    if cap == 1 or trials == 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, range(trials)))


# -- per-experiment runners -------------------------------------------------


def _figure_rows(spectrum_eigs, predicted, threshold, circle_points=256):
    """emit_figure_data schema: eig_re, eig_im, kind."""
    rows = []
    for lam in spectrum_eigs:
        kind = "outlier" if threshold is not None and abs(lam) >= threshold else "bulk"
        rows.append((float(lam.real), float(lam.imag), kind))
    for p in predicted:
        rows.append((float(p.real), float(p.imag), "cross"))
    for j in range(circle_points):
        theta = 2 * math.pi * j / circle_points
        rows.append((math.cos(theta), math.sin(theta), "circle"))
    return rows


def _run_spectrum(config: ExperimentConfig):
    sc = scenario_from_config(config.raw["scenario"])
    eigs = _map_trials(
        lambda t: eigenvalues(realize(sc, config.seed, t)).eigenvalues, config.trials
    )
    rows = []
    for trial, lam in enumerate(eigs):
        for z in lam:
            rows.append((trial, float(z.real), float(z.imag)))
    summary = {
        "n": sc.n,
        "m": sc.m,
        "sigma": sc.sigma,
        "eigenvalues_per_trial": sc.n,
        "spectral_radius_max": max(float(np.max(np.abs(lam))) for lam in eigs),
    }
    return ("trial", "eig_re", "eig_im"), rows, summary


def _run_outliers(config: ExperimentConfig):
    sc = scenario_from_config(config.raw["scenario"])
    reports, spectra = run_scenario(sc, config.seed, config.trials)
    rows = []
    for trial, spec in enumerate(spectra):
        for r in _figure_rows(
            spec.eigenvalues, reports[trial].predicted, sc.detection_threshold
        ):
            rows.append((trial,) + r)
    summary = {
        "threshold": sc.detection_threshold,
        "predicted": [[z.real, z.imag] for z in reports[0].predicted],
        "matched_pairs": len(reports[0].pairs)
        if all(len(r.pairs) == len(reports[0].pairs) for r in reports)
        else [len(r.pairs) for r in reports],
        "observed_per_trial": [len(r.observed) for r in reports],
        "max_distance_per_trial": [r.max_distance for r in reports],
    }
    return ("trial", "eig_re", "eig_im", "kind"), rows, summary


def _run_radial(config: ExperimentConfig):
    sc = scenario_from_config(config.raw["scenario"])
    def one(trial):
        p = realize(sc, config.seed, trial)
        spec = EmpiricalSpectrum(eigenvalues(p).eigenvalues, n=sc.n, m=sc.m, sigma=sc.sigma)
        return radial_ks(spec)
    ks = _map_trials(one, config.trials)
    rows = [(t, k) for t, k in enumerate(ks)]
    return ("trial", "radial_ks"), rows, {"radial_ks": ks, "max_ks": max(ks)}


def _linearized_noise(config: ExperimentConfig, trial: int):
    """Scaled block-cycle matrix Y/sqrt(n) for the configured ensemble."""
    cfg = config.raw.get("ensemble", {})
    m = cfg.get("m", 2)
    n = cfg.get("n", 200)
    atoms = [atom_from_config(a) for a in cfg.get("atoms", ["Rademacher"])]
    if len(atoms) == 1:
        atoms = atoms * m
    xs = [
        ensembles.sample_iid_matrix(atoms[k], n, config.seed, stream=trial * m + k)
        for k in range(m)
    ]
    return materialize(BlockCycle(tuple(xs))) / math.sqrt(n), m, n


def _unit_vectors(kind: str, dim: int, seed: int):
    if kind == "e1":
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        return v
    if kind == "uniform":
        return np.ones(dim, dtype=complex) / math.sqrt(dim)
    if kind == "random":
        rng = ensembles.stream_rng(seed, stream=2**32)
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return v / np.linalg.norm(v)
    raise ConfigError(f"unknown vector kind {kind!r}")


def _run_isotropic(config: ExperimentConfig):
    grid = grid_from_config(config.raw.get("grid", {}))
    pairs = config.raw.get("vector_pairs", [["e1", "e1"], ["random", "random"]])
    rows = []
    worst = 0.0
    for trial in range(config.trials):
        y, m, n = _linearized_noise(config, trial)
        for ukind, vkind in pairs:
            u = _unit_vectors(ukind, m * n, config.seed)
            v = _unit_vectors(vkind, m * n, config.seed + 1 if vkind == "random" else config.seed)
            dev = isotropic_deviation(y, u, v, grid)
            worst = max(worst, dev)
            rows.append((trial, ukind, vkind, dev))
    return (
        ("trial", "u", "v", "deviation"),
        rows,
        {"max_deviation": worst, "grid_nodes": grid.radial_points * grid.angular_points},
    )


def _run_lsv(config: ExperimentConfig):
    grid = grid_from_config(config.raw.get("grid", {}))
    rows = []
    infs, sups = [], []
    for trial in range(config.trials):
        y, _, _ = _linearized_noise(config, trial)
        lo = least_singular_inf(y, grid)
        hi = resolvent_norm_sup(y, grid)
        infs.append(lo)
        sups.append(hi)
        rows.append((trial, lo, hi))
    return (
        ("trial", "least_singular_inf", "resolvent_norm_sup"),
        rows,
        {"min_least_singular": min(infs), "max_resolvent_norm": max(sups)},
    )


def _run_moments(config: ExperimentConfig):
    cfg = config.raw.get("moments", {})
    m = cfg.get("m", 1)
    k = cfg.get("k", 2)
    atoms = [atom_from_config(a) for a in cfg.get("atoms", ["Rademacher"])]
    if len(atoms) == 1:
        atoms = atoms * m
    rows = []
    for cls in pathgraphs.enumerate_canonical(m, k):
        g = cls.representative
        contrib = pathgraphs.expectation_contribution(g, atoms)
        rows.append(
            (
                "".join(str(h) for h in g.heights),
                cls.h,
                ";".join(f"{s}-{t}" for s, t in pathgraphs.parallel_pairs(g)),
                float(contrib.real),
                float(contrib.imag),
            )
        )
    summary = {"m": m, "k": k, "classes": len(rows)}
    if "n" in cfg:
        n = cfg["n"]
        dim = m * n
        e1 = np.zeros(dim, dtype=complex)
        e1[0] = 1.0
        val = pathgraphs.exact_moment_by_classes(e1, e1, atoms, n, m, k)
        summary["exact_moment_e1"] = [val.real, val.imag]
    return ("representative", "height", "parallel_pairs", "contrib_re", "contrib_im"), rows, summary


def _run_linearize(config: ExperimentConfig):
    cfg = config.raw.get("linearize", {})
    m = cfg.get("m", 3)
    n = cfg.get("n", 3)
    tol = cfg.get("tol", 1e-7)
    atoms = [atom_from_config(a) for a in cfg.get("atoms", ["ComplexGaussian"])]
    if len(atoms) == 1:
        atoms = atoms * m
    rows = []
    for trial in range(config.trials):
        blocks = tuple(
            ensembles.sample_iid_matrix(atoms[k], n, config.seed, stream=trial * m + k)
            for k in range(m)
        )
        report = verify_linearization(BlockCycle(blocks), tol)
        rows.append((trial, report.max_distance, int(report.ok)))
    summary = {"tol": tol, "all_ok": all(bool(r[2]) for r in rows)}
    return ("trial", "max_distance", "ok"), rows, summary


_RUNNERS = {
    "spectrum": _run_spectrum,
    "outliers": _run_outliers,
    "radial": _run_radial,
    "isotropic": _run_isotropic,
    "lsv": _run_lsv,
    "moments": _run_moments,
    "linearize": _run_linearize,
}


def run(config: ExperimentConfig) -> RunRecord:
    """Dispatch, compute, and persist one experiment run."""
    started = time.time()
    header, rows, metrics = _RUNNERS[config.experiment](config)
    csv_text = _write_csv(header, rows)
    summary = {
        "version": __version__,
        "experiment": config.experiment,
        "config": config.resolved(),
        "config_hash": config.hash(),
        "metrics": metrics,
    }
    out_dir = Path(config.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{config.experiment}_rows.csv").write_bytes(csv_text.encode())
    (out_dir / f"{config.experiment}_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return RunRecord(
        config_hash=config.hash(),
        started=started,
        finished=time.time(),
        rows=csv_text,
        summary=summary,
    )


def emit_figure_data(config: ExperimentConfig) -> Path:
    """Write the figure CSV (bulk/outlier/cross/circle rows) for one trial."""
    if config.experiment not in ("spectrum", "outliers"):
        raise ConfigError("figure data exists only for spectrum/outliers experiments")
    sc = scenario_from_config(config.raw["scenario"])
    lam = eigenvalues(realize(sc, config.seed, 0)).eigenvalues
    if config.experiment == "outliers":
        predicted = predict_outliers(sc)
        threshold = sc.detection_threshold
    else:
        predicted = np.asarray([], dtype=complex)
        threshold = None
    rows = _figure_rows(lam, predicted, threshold)
    csv_text = _write_csv(("eig_re", "eig_im", "kind"), rows)
    out_dir = Path(config.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{config.experiment}_figure.csv"
    path.write_bytes(csv_text.encode())
    return path
