"""Experiment runners behind the command line: configs, sweeps and CSV rows."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .circuit import count_resources, lower_pair, lower_rotation, t_count_ratio
from .compiler import compile_pair
from .errors import ConfigError
from .estimators import (
    DEFAULT_DELTA,
    ObservableDecomposition,
    estimate,
    group_ldf,
    grouped_estimate,
    grouped_hoeffding_eps,
    hoeffding_eps,
    qdrift_total_error,
)
from .hamiltonian import SegmentPlan, TimeDependentHamiltonian, hamiltonian_from_dict, plan_segments
from .models import ADIABATIC_TOY_FINAL, ADIABATIC_TOY_INITIAL, adiabatic_toy, spin_model
from .montecarlo import QDRIFT_STREAM, URCC_STREAM, Problem, run_trials
from .oracle import algorithmic_error, exact_expectation, exact_propagator, observable_matrix
from .pauli import PauliString, weight
from .qdrift import qdrift_compile, qdrift_dump
from .statevector import initial_state

__all__ = [
    "ExperimentConfig",
    "load_config",
    "run_spin_experiment",
    "run_adiabatic_experiment",
    "run_compile_only",
    "run_estimate",
    "CSV_COLUMNS",
    "ADIABATIC_COLUMNS",
]

CSV_COLUMNS = [
    "method",
    "M",
    "N_seg",
    "O_est",
    "eps_tot",
    "C",
    "gates_1q",
    "gates_2q",
    "phase_gates",
    "t_ratio",
    "oracle_value",
    "abs_error",
]
ADIABATIC_COLUMNS = CSV_COLUMNS + ["G", "ground_energy", "nonadiabatic_error"]
METHODS = ("urcc", "cqdrift")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment settings.

    ``hamiltonian`` is ``"spin"``, ``"adiabatic-toy"`` or a path to a
    Hamiltonian JSON file.  ``observable`` is a Pauli label or a list of
    ``[label, weight]`` pairs; ``None`` means the final Hamiltonian for
    adiabatic runs.  ``qdrift_n_seg`` is a list of segment counts or
    ``"matched"`` (equal two-qubit gate budget to URCC).
    """

    seed: int
    hamiltonian: str = "spin"
    n: int = 3
    J: float = 0.1
    omega: float = 1.0
    tau: float = math.pi
    lambda_target: float = 0.2
    initial_state: Any = "101"
    observable: Any = "ZII"
    M: tuple[int, ...] = (1000, 10000, 100000)
    delta: float = DEFAULT_DELTA
    mode: str = "shot"
    methods: tuple[str, ...] = METHODS
    qdrift_n_seg: Any = "matched"
    grouping: bool = True
    pairs: int = 4
    eps_ph: float = 1e-3
    c_rs: float = 4.0
    base_dir: str = "."

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not self.M or any((not isinstance(m, int)) or m < 1 for m in self.M):
            raise ConfigError("M sweep must be a non-empty list of positive integers")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if self.mode not in ("exact", "shot"):
            raise ConfigError("mode must be 'exact' or 'shot'")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigError("tau must be positive and finite")
        if not self.lambda_target > 0:
            raise ConfigError("lambda_target must be positive")
        if self.qdrift_n_seg != "matched":
            if not self.qdrift_n_seg or any((not isinstance(k, int)) or k < 1 for k in self.qdrift_n_seg):
                raise ConfigError("qdrift_n_seg must be 'matched' or a non-empty list of positive integers")
        if not 0.0 < self.eps_ph < 1.0:
            raise ConfigError("eps_ph must lie in (0, 1)")
        if self.pairs < 1:
            raise ConfigError("pairs must be at least 1")


_LIST_FIELDS = {"M", "methods"}


def config_from_dict(doc: dict[str, Any], seed: int | None = None, base_dir: str = ".") -> ExperimentConfig:
    doc = dict(doc)
    if seed is not None:
        doc["seed"] = seed
    if "seed" not in doc:
        raise ConfigError("a seed is required (config 'seed' or --seed)")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in _LIST_FIELDS & set(doc):
        val = doc[key]
        doc[key] = tuple(val) if isinstance(val, list) else (val,)
    if isinstance(doc.get("qdrift_n_seg"), list):
        doc["qdrift_n_seg"] = tuple(doc["qdrift_n_seg"])
    doc.setdefault("base_dir", base_dir)
    try:
        return ExperimentConfig(**doc)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None, seed: int | None = None, defaults: dict | None = None) -> ExperimentConfig:
    doc: dict[str, Any] = dict(defaults or {})
    base = "."
    if path is not None:
        try:
            with open(path) as fh:
                doc.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        base = str(Path(path).resolve().parent)
    return config_from_dict(doc, seed, base)


# -- problem construction -----------------------------------------------------------------------


def _observable(spec, n: int) -> ObservableDecomposition:
    try:
        if isinstance(spec, str):
            obs = ObservableDecomposition.single(PauliString.parse(spec))
        else:
            obs = ObservableDecomposition.from_pairs([(str(s), float(c)) for s, c in spec])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid observable {spec!r}: {exc}") from exc
    if obs.n != n:
        raise ConfigError(f"observable acts on {obs.n} qubits, Hamiltonian on {n}")
    return obs


def _ground_state(H: TimeDependentHamiltonian, t: float) -> np.ndarray:
    w, V = np.linalg.eigh(H.matrix(t))
    if w.size > 1 and w[1] - w[0] < 1e-9:
        raise ConfigError("initial Hamiltonian has a degenerate ground state; set initial_state")
    return V[:, 0]


@dataclass
class Setup:
    H: TimeDependentHamiltonian
    tau: float
    psi: np.ndarray
    observable: ObservableDecomposition
    final: ObservableDecomposition | None = None


def _read_doc(cfg: ExperimentConfig) -> dict[str, Any]:
    path = Path(cfg.hamiltonian)
    if not path.is_absolute():
        path = Path(cfg.base_dir) / path
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read Hamiltonian {cfg.hamiltonian}: {exc}") from exc


def build_setup(cfg: ExperimentConfig, adiabatic: bool = False) -> Setup:
    final = None
    if cfg.hamiltonian == "spin":
        if adiabatic:
            raise ConfigError("the spin model has no adiabatic schedule")
        H = spin_model(cfg.n, cfg.J, cfg.omega, cfg.tau)
        tau = cfg.tau
    elif cfg.hamiltonian == "adiabatic-toy":
        H = adiabatic_toy(cfg.tau)
        tau = cfg.tau
        final = ObservableDecomposition.from_pairs(ADIABATIC_TOY_FINAL)
    else:
        doc = _read_doc(cfg)
        H = hamiltonian_from_dict(doc)
        schedule = doc.get("schedule")
        if schedule is not None:
            tau = float(schedule["tau"])
            pairs = [(t["pauli"], t["coeff"]["amplitude"] if isinstance(t["coeff"], dict) else t["coeff"])
                     for t in schedule.get("final_terms", [])]
            if pairs:
                final = ObservableDecomposition.from_pairs(pairs)
        else:
            tau = cfg.tau
    if adiabatic and final is None:
        raise ConfigError("adiabatic runs need a Hamiltonian with an 'adiabatic' schedule")
    if adiabatic and cfg.observable is None:
        observable = final
    elif cfg.observable is None:
        raise ConfigError("an observable is required")
    else:
        observable = _observable(cfg.observable, H.n)
    if cfg.initial_state is None:
        psi = _ground_state(H, H.window[0])
    else:
        try:
            psi = initial_state(cfg.initial_state, H.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return Setup(H, tau, psi, observable, final)


def matched_qdrift_segments(H: TimeDependentHamiltonian, plan: SegmentPlan) -> int:
    """c-qDRIFT segment count with the two-qubit budget of an all-rotation URCC pair.

    A controlled weight-``k`` rotation costs ``2k`` CNOTs and an uncontrolled
    one ``2(k - 1)``; weights are averaged with the ``lambda_p`` weights.
    Single-qubit Hamiltonians fall back to matching phase gates.
    """
    lam_p = plan.lambda_p_table.sum(axis=0)
    k = np.array([weight(c.pauli) for c in H.canonical], dtype=float)
    kbar = float((lam_p * k).sum() / lam_p.sum())
    if kbar <= 1.0:
        return 4 * plan.n_seg
    urcc = 2 * plan.n_seg * 2 * kbar
    return max(1, math.ceil(urcc / (2 * (kbar - 1)) - 1e-9))


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv(rows: Sequence[dict[str, Any]], columns: Sequence[str], out: str | Path | None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        vals = [r[c] for c in columns]
        for c, v in zip(columns, vals):
            if not isinstance(v, str) and not math.isfinite(float(v)):
                raise ConfigError(f"non-finite value in column {c}")
        w.writerow([_fmt(v) for v in vals])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


# -- experiment drivers ---------------------------------------------------------------------------


def _sweep(
    cfg: ExperimentConfig,
    setup: Setup,
    workers: int,
    grouped: bool,
) -> list[dict[str, Any]]:
    H, tau, psi, obs = setup.H, setup.tau, setup.psi, setup.observable
    plan = plan_segments(H, tau, cfg.lambda_target)
    U = exact_propagator(H, H.window[0], tau).matrix
    oracle_value = exact_expectation(psi, obs, U)
    norm_O = obs.norm_bound()
    qd_counts = [matched_qdrift_segments(H, plan)] if cfg.qdrift_n_seg == "matched" else list(cfg.qdrift_n_seg)
    rows = []
    urcc = Problem(H, plan, psi, obs)
    C = urcc.C
    for row_index, M in enumerate(cfg.M):
        mode = "grouped" if grouped else cfg.mode
        groups = group_ldf(obs, M) if grouped else None
        if grouped and any(g.shots == 0 for g in groups):
            raise ConfigError(f"M={M} is too small to give every measurement group a shot")
        if "urcc" in cfg.methods:
            res = run_trials(urcc, "urcc", M, cfg.seed, mode, groups, stream=2 * row_index + URCC_STREAM, workers=workers)
            if grouped:
                est = grouped_estimate([res.outcomes], C)
                eps = grouped_hoeffding_eps(groups, C, M, cfg.delta)
            else:
                est = estimate(res.outcomes, C)
                eps = hoeffding_eps(C, norm_O, M, cfg.delta)
            g1, g2, ph = res.tally.mean()
            rows.append(dict(
                method="urcc", M=M, N_seg=plan.n_seg, O_est=est, eps_tot=eps, C=C,
                gates_1q=g1, gates_2q=g2, phase_gates=ph,
                t_ratio=float(t_count_ratio(qd_counts[0], plan.n_seg)),
                oracle_value=oracle_value, abs_error=abs(est - oracle_value),
                G=len(groups) if groups else 1,
            ))
        if "cqdrift" in cfg.methods:
            for qi, nq in enumerate(qd_counts):
                qplan = plan_segments(H, tau, n_seg=nq)
                eps_alg = algorithmic_error(H, qplan, psi, obs, U)
                res = run_trials(
                    Problem(H, qplan, psi, obs), "cqdrift", M, cfg.seed, mode, groups,
                    stream=1000 * (qi + 1) + 2 * row_index + QDRIFT_STREAM, workers=workers,
                )
                est = grouped_estimate([res.outcomes], 1.0) if grouped else estimate(res.outcomes, 1.0)
                eps = qdrift_total_error(M, cfg.delta, eps_alg, norm_O)
                g1, g2, ph = res.tally.mean()
                rows.append(dict(
                    method="cqdrift", M=M, N_seg=nq, O_est=est, eps_tot=eps, C=1.0,
                    gates_1q=g1, gates_2q=g2, phase_gates=ph,
                    t_ratio=float(t_count_ratio(nq, plan.n_seg)),
                    oracle_value=oracle_value, abs_error=abs(est - oracle_value),
                    G=len(groups) if groups else 1,
                ))
    return rows


def run_spin_experiment(cfg: ExperimentConfig, out=None, workers: int = 1) -> str:
    """URCC and c-qDRIFT over the M sweep on the interaction-picture spin chain (or a file)."""
    setup = build_setup(cfg)
    rows = _sweep(cfg, setup, workers, grouped=False)
    return write_csv(rows, CSV_COLUMNS, out)


def run_adiabatic_experiment(cfg: ExperimentConfig, out=None, workers: int = 1) -> str:
    """Energy of an adiabatically prepared state, measured with grouped shots."""
    setup = build_setup(cfg, adiabatic=True)
    rows = _sweep(cfg, setup, workers, grouped=cfg.grouping)
    e0 = float(np.linalg.eigvalsh(observable_matrix(setup.final))[0])
    for r in rows:
        r["ground_energy"] = e0
        r["nonadiabatic_error"] = r["oracle_value"] - e0
    return write_csv(rows, ADIABATIC_COLUMNS, out)


RESOURCE_COLUMNS = ["method", "pair", "N_seg", "gates_1q", "gates_2q", "phase_gates", "t_count"]


def run_compile_only(cfg: ExperimentConfig, out=None) -> tuple[str, str]:
    """Sample circuit pairs (and c-qDRIFT sequences) without simulating them.

    Returns ``(csv_text, dump_text)``; with ``out`` set the dump goes to
    ``<out>.dump.txt`` next to the CSV.
    """
    setup = build_setup(cfg)
    H, tau = setup.H, setup.tau
    plan = plan_segments(H, tau, cfg.lambda_target)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed, spawn_key=(7,))))
    rows, dumps = [], []
    qd_counts = [matched_qdrift_segments(H, plan)] if cfg.qdrift_n_seg == "matched" else list(cfg.qdrift_n_seg)
    for i in range(cfg.pairs):
        if "urcc" in cfg.methods:
            pair = compile_pair(plan, H, rng)
            rc = count_resources(lower_pair(pair, H.n), cfg.eps_ph, cfg.c_rs)
            rows.append(dict(method="urcc", pair=i, N_seg=plan.n_seg, gates_1q=rc.single_qubit,
                             gates_2q=rc.two_qubit, phase_gates=rc.phase_gates, t_count=rc.t_count_estimate))
            dumps.append(f"# urcc pair {i}\n" + pair.dump())
        if "cqdrift" in cfg.methods:
            for nq in qd_counts:
                qplan = plan_segments(H, tau, n_seg=nq)
                samples = qdrift_compile(qplan, H, rng)
                circ = [g for s in samples for g in lower_rotation(s.signed_sigma, s.angle).gates]
                rc = count_resources(circ, cfg.eps_ph, cfg.c_rs)
                rows.append(dict(method="cqdrift", pair=i, N_seg=nq, gates_1q=rc.single_qubit,
                                 gates_2q=rc.two_qubit, phase_gates=rc.phase_gates, t_count=rc.t_count_estimate))
                dumps.append(f"# cqdrift sequence {i}\n" + qdrift_dump(samples))
    dump = "".join(dumps)
    text = write_csv(rows, RESOURCE_COLUMNS, out)
    if out is not None:
        Path(str(out) + ".dump.txt").write_text(dump)
    return text, dump


def run_estimate(cfg: ExperimentConfig, out=None, workers: int = 1) -> str:
    """Single estimate per method at the first M of the sweep."""
    return run_spin_experiment(replace(cfg, M=cfg.M[:1]), out, workers)
