"""Named, seeded experiments producing CSV tables and a JSON summary.

Each experiment is fully determined by its name, its parameters and the seed.
A run returns CSV texts keyed by file name plus an ordered dict of headline
metrics; :func:`run_experiment` writes them out together with
``summary.json``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .distribution import TimeSeries, _plain, rows_to_csv

__all__ = [
    "Param",
    "Experiment",
    "ExperimentSpec",
    "ExperimentResult",
    "InvalidParameters",
    "CATALOG",
    "list_experiments",
    "parse_params",
    "run_experiment",
    "execute",
]


class InvalidParameters(ValueError):
    """Unknown experiment, unknown parameter key, or a malformed value."""


def _float_list(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).split(",") if x.strip())


@dataclass(frozen=True)
class Param:
    name: str
    kind: Callable
    default: object
    help: str
    choices: tuple | None = None

    def parse(self, raw):
        try:
            value = self.kind(raw)
        except (TypeError, ValueError) as exc:
            raise InvalidParameters(f"parameter {self.name!r}: cannot parse {raw!r}") from exc
        if self.choices is not None and value not in self.choices:
            raise InvalidParameters(f"parameter {self.name!r} must be one of {self.choices}, got {value!r}")
        return value

    @property
    def type_name(self) -> str:
        return "float-list" if self.kind is _float_list else self.kind.__name__


@dataclass(frozen=True)
class ExperimentResult:
    files: dict[str, str]
    metrics: dict


@dataclass(frozen=True)
class Experiment:
    name: str
    topic: str
    params: tuple[Param, ...]
    runner: Callable[[dict, int], ExperimentResult]

    def defaults(self) -> dict:
        return {p.name: p.default for p in self.params}


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "results"


def _series_csv(t, columns: dict[str, np.ndarray]) -> str:
    header = ("t", *columns)
    rows = zip(t, *columns.values())
    return rows_to_csv(header, rows)


def _coin_start(name: str, d: int = 2) -> np.ndarray:
    s = 1 / math.sqrt(2)
    table = {"up": (1, 0), "down": (0, 1), "symmetric": (s, 1j * s)}
    if name == "uniform":
        return np.full(d, 1 / math.sqrt(d))
    return np.array(table[name], dtype=complex)


# --- runners ---------------------------------------------------------------


def _line_walk(p: dict, seed: int) -> ExperimentResult:
    from .analysis import growth_exponent, moments, variance_series
    from .coin import make_coin
    from .dtqw import QuantumWalk, evolve, line_walk, position_distribution

    T = p["T"]
    coin = make_coin(p["coin"]) if p["coin"] != "rotation" else make_coin("rotation", theta=p["theta"])
    start = line_walk(T + 1, 0, _coin_start(p["start"]))
    dist = position_distribution(evolve(start, coin, T))
    var = variance_series(QuantumWalk(start, coin), T)
    mean, variance = moments(dist)
    left = dist.support < 0
    metrics = {
        "mean": mean,
        "variance": variance,
        "left_peak": int(dist.support[left][np.argmax(dist.values[left])]),
        "right_peak": int(dist.support[~left][np.argmax(dist.values[~left])]),
        "variance_exponent": growth_exponent(var.window(max(1, T // 3), T)) if T >= 15 else None,
    }
    return ExperimentResult({"distribution.csv": dist.to_csv(), "variance.csv": var.to_csv()}, metrics)


def _circle_mix(p: dict, seed: int) -> ExperimentResult:
    from .analysis import cesaro_series, empirical_mixing_time, total_variation
    from .classical import ClassicalWalk, transition_matrix
    from .coin import make_coin
    from .distribution import point_mass, uniform
    from .dtqw import QuantumWalk, initial_state
    from .graph import build_family

    N, eps = p["N"], p["eps"]
    t_max = p["t_max"] or 4 * N * N
    g = build_family("circle", N=N)
    target = uniform(g.coordinates)
    qw = QuantumWalk(initial_state(g, 0, _coin_start(p["start"])), make_coin("hadamard"))
    cw = ClassicalWalk(transition_matrix(g), point_mass(g.coordinates, 0))
    tq = [total_variation(c, target) for c in cesaro_series(qw, t_max)]
    tc = [total_variation(d, target) for d in cw.distributions(t_max)][1:]
    metrics = {
        "quantum_mixing_time": empirical_mixing_time(qw, target, eps, t_max),
        "classical_mixing_time": empirical_mixing_time(cw, target, eps, t_max),
        "quantum_bound": N * math.log(N) / eps**3,
    }
    csv = _series_csv(range(1, t_max + 1), {"tv_quantum_cesaro": tq, "tv_classical": tc})
    return ExperimentResult({"tv.csv": csv}, metrics)


def _hypercube_hit(p: dict, seed: int) -> ExperimentResult:
    from .analysis import concurrent_hitting, one_shot_hitting
    from .classical import ClassicalWalk, chain_matrix, expected_hitting
    from .coin import make_coin
    from .distribution import point_mass
    from .dtqw import QuantumWalk, initial_state
    from .graph import build_family, reduce_hypercube_chain

    d, thr, t_max = p["d"], p["threshold"], p["t_max"]
    g = build_family("hypercube", d=d)
    target = 2**d - 1
    qw = QuantumWalk(initial_state(g, 0, _coin_start("uniform", d)), make_coin("grover", d))
    chain = chain_matrix(reduce_hypercube_chain(d))
    cw = ClassicalWalk(chain, point_mass(chain.support, 0))
    q_rec = qw.absorbing([g.index_of(target)], t_max)
    c_rec = cw.absorbing([d], t_max)
    q_inst = [float(dist[target]) for dist in qw.distributions(t_max)]
    t_star, p_star = one_shot_hitting(qw, target, min(t_max, 5 * d))
    metrics = {
        "one_shot_time": t_star,
        "one_shot_probability": p_star,
        "quantum_concurrent_time": concurrent_hitting(qw, target, thr, t_max),
        "classical_concurrent_time": concurrent_hitting(cw, d, thr, t_max),
        "classical_expected_hitting": expected_hitting(chain, 0, d),
    }
    csv = _series_csv(range(t_max + 1), {
        "quantum_instantaneous": q_inst,
        "quantum_cumulative": q_rec.cumulative,
        "classical_cumulative": c_rec.cumulative,
    })
    return ExperimentResult({"hitting.csv": csv}, metrics)


def _absorb(p: dict, seed: int) -> ExperimentResult:
    from .classical import line_absorbing
    from .coin import make_coin
    from .dtqw import line_walk, run_absorbing

    T, x = p["T"], p["start_position"]
    if x == 0:
        raise InvalidParameters("start_position must differ from the boundary at 0")
    W = abs(x) + T + 1
    q = run_absorbing(line_walk(W, x, _coin_start(p["start"])), make_coin("hadamard"), [W], T)
    c = line_absorbing(x, [0], T)
    metrics = {
        "quantum_cumulative": float(q.cumulative[-1]),
        "classical_cumulative": float(c.cumulative[-1]),
        "two_over_pi": 2 / math.pi,
        "quantum_monotone": bool(np.all(np.diff(q.cumulative) >= -1e-15)),
    }
    csv = _series_csv(range(T + 1), {
        "quantum_absorbed": q.per_step_absorbed,
        "quantum_cumulative": q.cumulative,
        "classical_cumulative": c.cumulative,
    })
    return ExperimentResult({"absorption.csv": csv}, metrics)


def _glued_trees(p: dict, seed: int) -> ExperimentResult:
    from scipy.linalg import expm

    from .ctqw import glued_trees_arrival, glued_trees_classical_columns

    n, gamma, points = p["n"], p["gamma"], p["points"]
    t = np.linspace(0.0, p["t_max"] or 10.0 * n, points)
    quantum = glued_trees_arrival(n, gamma, t)
    q = glued_trees_classical_columns(n, gamma)
    step = expm(q * (t[1] - t[0]))
    col = np.zeros(2 * n + 1)
    col[0] = 1.0
    classical = np.empty(t.size)
    for k in range(t.size):
        classical[k] = col[-1]
        col = step @ col
    k = int(np.argmax(quantum.values))
    metrics = {
        "quantum_max": float(quantum.values[k]),
        "quantum_argmax_time": float(t[k]),
        "quantum_reference": 1 / (2 * math.sqrt(n)),
        "classical_max": float(classical.max()),
        "classical_reference": 2.0**-n,
    }
    csv = _series_csv(t, {"p_quantum": quantum.values, "p_classical": classical})
    return ExperimentResult({"arrival.csv": csv}, metrics)


def _decohere(p: dict, seed: int) -> ExperimentResult:
    from .analysis import growth_exponent
    from .coin import make_coin
    from .decoherence import DecoherenceSpec, decohered_run
    from .dtqw import line_walk

    T = p["T"]
    spec = DecoherenceSpec(p["p_meas"], p["target"], p["mode"], p["trajectories"], seed)
    res = decohered_run(line_walk(T + 1, 0, _coin_start(p["start"])), make_coin("hadamard"), spec, T)
    metrics = {
        "variance": float(res.variance.values[-1]),
        "variance_exponent": growth_exponent(res.variance.window(max(1, T // 3), T)) if T >= 15 else None,
    }
    files = {"distribution.csv": res.distribution.to_csv(), "variance.csv": res.variance.to_csv()}
    return ExperimentResult(files, metrics)


def _decohere_sweep(p: dict, seed: int) -> ExperimentResult:
    from .coin import make_coin
    from .decoherence import sweep_csv, variance_sweep
    from .dtqw import line_walk

    T = p["T"]
    rows = variance_sweep(line_walk(T + 1, 0, _coin_start(p["start"])), make_coin("hadamard"),
                          p["p_values"], T, p["target"], p["fit_from"] or None)
    variances = [r[2] for r in rows]
    metrics = {
        "exponents": {str(r[0]): r[3] for r in rows},
        "variance_non_increasing": bool(all(b <= a + 1e-9 for a, b in zip(variances, variances[1:]))),
    }
    return ExperimentResult({"sweep.csv": sweep_csv(rows)}, metrics)


def _multicoin(p: dict, seed: int) -> ExperimentResult:
    from .analysis import growth_exponent
    from .decoherence import multicoin_run

    T, M = p["T"], p["M"] or p["T"]
    res = multicoin_run(0, M, T)
    metrics = {
        "coin_registers": M,
        "variance": float(res.variance.values[-1]),
        "variance_exponent": growth_exponent(res.variance.window(max(1, T // 4), T)) if T >= 20 else None,
    }
    files = {"distribution.csv": res.distribution.to_csv(), "variance.csv": res.variance.to_csv()}
    return ExperimentResult(files, metrics)


def _demo_adz(p: dict, seed: int) -> ExperimentResult:
    from .demos import analytic_postselection, postselection_sweep, setup_for_epsilon, wavepacket_simulation

    setup = setup_for_epsilon(p["eps"], p["delta_x"], p["l"])
    a = analytic_postselection(setup)
    rng = None if p["mode"] == "exact" else seed
    sim = wavepacket_simulation(setup, rng, p["shots"])
    metrics = {
        "p_up_analytic": a.p_up,
        "p_up_simulated": sim.p_up,
        "delta_up_analytic": a.delta_up,
        "delta_up_simulated": sim.delta_up,
        "delta_down_analytic": a.delta_down,
        "delta_down_simulated": sim.delta_down,
        "average_displacement": a.p_up * a.delta_up + a.p_down * a.delta_down,
    }
    sweep = postselection_sweep(p["sweep_eps"], p["sweep_delta_x"], p["l"], rng)
    return ExperimentResult({"sweep.csv": sweep}, metrics)


WORKED_2SAT = ((1, -2), (-1, 3), (2, 3), (-1, -3))


def _classical_2sat(p: dict, seed: int) -> ExperimentResult:
    from .classical import CnfFormula, random_planted_2sat, two_sat_walk

    rng = np.random.default_rng(seed)
    n, trials = p["n"], p["trials"]
    rows, assignment = [], None
    for k in range(trials):
        if n == 0:
            f = CnfFormula(3, WORKED_2SAT, true_value=0)
        else:
            f, _ = random_planted_2sat(n, p["clauses_per_var"] * n, rng)
        res = two_sat_walk(f, rng, p["max_steps"] or 100 * f.n**2)
        if k == 0 and res.satisfied:
            assignment = "".join(map(str, res.assignment))
        rows.append((k, f.n, res.flips, res.satisfied))
    flips = np.array([r[2] for r in rows])
    n_eff = rows[0][1]
    metrics = {
        "first_assignment": assignment,
        "solved_fraction": float(np.mean([r[3] for r in rows])),
        "median_flips": float(np.median(flips)),
        "median_flips_over_n2": float(np.median(flips)) / n_eff**2,
    }
    return ExperimentResult({"flips.csv": rows_to_csv(("trial", "n", "flips", "satisfied"), rows)}, metrics)


def _classical_stconn(p: dict, seed: int) -> ExperimentResult:
    from .classical import st_connectivity
    from .graph import from_edges

    rng = np.random.default_rng(seed)
    V, trials = p["V"], p["trials"]
    rows = []
    for k in range(trials):
        pairs = [(a, b) for a in range(V) for b in range(a + 1, V)]
        keep = rng.random(len(pairs)) < p["edge_prob"]
        edges = [e for e, kept in zip(pairs, keep) if kept]
        g = from_edges(edges, V)
        truth = _connected(g, 0, V - 1)
        answer = st_connectivity(g, 0, V - 1, rng)
        rows.append((k, len(edges), truth, answer))
    connected = [r for r in rows if r[2]]
    disconnected = [r for r in rows if not r[2]]
    metrics = {
        "connected_instances": len(connected),
        "disconnected_instances": len(disconnected),
        "false_positives": sum(r[3] for r in disconnected),
        "success_rate_connected": float(np.mean([r[3] for r in connected])) if connected else None,
    }
    return ExperimentResult(
        {"trials.csv": rows_to_csv(("trial", "edges", "connected", "answer"), rows)}, metrics
    )


def _connected(g, s: int, t: int) -> bool:
    seen, stack = {s}, [s]
    while stack:
        v = stack.pop()
        for w in g.neighbors(v):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return t in seen


def _classical_mixing(p: dict, seed: int) -> ExperimentResult:
    from .analysis import empirical_mixing_time
    from .classical import ClassicalWalk, mixing_bounds, stationary_and_gap, transition_matrix
    from .distribution import point_mass
    from .graph import build_family, pad_self_loops

    key = "N" if p["graph"] == "circle" else "d"
    g = build_family(p["graph"], **{key: p["size"]})
    if p["lazy"]:
        g = pad_self_loops(g)
    m = transition_matrix(g)
    spec = stationary_and_gap(m)
    walk = ClassicalWalk(m, point_mass(g.coordinates, g.coordinates[0]))
    t_max = p["t_max"]
    series = []
    from .analysis import total_variation
    for dist in walk.distributions(t_max):
        series.append(total_variation(dist, spec.stationary))
    metrics = {
        "bipartite": spec.bipartite,
        "lambda2": spec.lambda2,
        "lambda_star": spec.lambda_star,
        "mixing_time": None if spec.bipartite else empirical_mixing_time(walk, spec.stationary, p["eps"], t_max),
        "bounds": None if spec.bipartite else list(mixing_bounds(spec.lambda_star, spec.stationary, p["eps"])),
    }
    return ExperimentResult({"tv.csv": _series_csv(range(t_max + 1), {"tv": series})}, metrics)


def _p(name, kind, default, help, choices=None) -> Param:
    return Param(name, kind, default, help, choices)


_START = ("up", "down", "symmetric")

CATALOG: dict[str, Experiment] = {e.name: e for e in (
    Experiment("line-walk", "Hadamard walk on the line: bimodal distribution and ballistic variance", (
        _p("T", int, 100, "number of steps"),
        _p("start", str, "down", "initial coin state", _START),
        _p("coin", str, "hadamard", "coin kind", ("hadamard", "y", "rotation", "identity")),
        _p("theta", float, math.pi / 4, "rotation angle when coin=rotation"),
    ), _line_walk),
    Experiment("circle-mix", "Cesaro mixing on the circle versus the classical walk", (
        _p("N", int, 9, "circle size"),
        _p("eps", float, 0.25, "total variation threshold (unhalved)"),
        _p("start", str, "down", "initial coin state", _START),
        _p("t_max", int, 0, "steps to scan (0 means 4 N^2)"),
    ), _circle_mix),
    Experiment("hypercube-hit", "Corner-to-corner hitting on the hypercube with the Grover coin", (
        _p("d", int, 4, "dimension"),
        _p("threshold", float, 0.5, "absorbed probability defining the hitting time"),
        _p("t_max", int, 400, "steps to scan"),
    ), _hypercube_hit),
    Experiment("absorb", "Absorbing boundary on the line: quantum 2/pi versus classical 1", (
        _p("T", int, 10_000, "number of steps"),
        _p("start", str, "up", "initial coin state", _START),
        _p("start_position", int, 1, "start coordinate (boundary at 0)"),
    ), _absorb),
    Experiment("glued-trees", "Continuous-time traversal of glued binary trees", (
        _p("n", int, 4, "tree depth"),
        _p("gamma", float, 1.0, "hopping rate"),
        _p("t_max", float, 0.0, "time horizon (0 means 10 n)"),
        _p("points", int, 401, "time grid points"),
    ), _glued_trees),
    Experiment("decohere", "Walk with random projective measurements per step", (
        _p("p_meas", float, 0.1, "measurement probability per step"),
        _p("T", int, 100, "number of steps"),
        _p("target", str, "coin", "measured register", ("coin", "position", "both")),
        _p("mode", str, "exact", "evaluation", ("exact", "trajectories")),
        _p("trajectories", int, 1000, "trajectory count in trajectory mode"),
        _p("start", str, "symmetric", "initial coin state", _START),
    ), _decohere),
    Experiment("decohere-sweep", "Variance and growth exponent across measurement probabilities", (
        _p("p_values", _float_list, (0.0, 0.02, 0.05, 0.1, 0.5, 1.0), "comma-separated probabilities"),
        _p("T", int, 100, "number of steps"),
        _p("target", str, "coin", "measured register", ("coin", "position", "both")),
        _p("fit_from", int, 0, "first step of the exponent fit (0 means T/3)"),
        _p("start", str, "symmetric", "initial coin state", _START),
    ), _decohere_sweep),
    Experiment("multicoin", "Walk cycling through several coin registers", (
        _p("M", int, 2, "coin registers (0 means a fresh coin every step)"),
        _p("T", int, 100, "number of steps"),
    ), _multicoin),
    Experiment("demo-adz", "Post-selected displacement of a spin-1/2 wave packet", (
        _p("eps", float, 0.05, "rotation detuning"),
        _p("delta_x", float, 400.0, "packet width (grid units)"),
        _p("l", int, 1, "step length (grid units)"),
        _p("mode", str, "exact", "evaluation", ("exact", "sampled")),
        _p("shots", int, 100_000, "samples in sampled mode"),
        _p("sweep_eps", _float_list, (0.01, 0.02, 0.05), "sweep detunings"),
        _p("sweep_delta_x", _float_list, (100.0, 200.0, 400.0), "sweep widths"),
    ), _demo_adz),
    Experiment("classical-2sat", "Random-walk 2-SAT solver", (
        _p("n", int, 0, "variables (0 means the three-variable worked example)"),
        _p("clauses_per_var", int, 2, "clauses per variable for random instances"),
        _p("trials", int, 100, "independent runs"),
        _p("max_steps", int, 0, "flip budget (0 means 100 n^2)"),
    ), _classical_2sat),
    Experiment("classical-stconn", "Random-walk s-t connectivity on random graphs", (
        _p("V", int, 20, "vertices"),
        _p("edge_prob", float, 0.1, "edge probability"),
        _p("trials", int, 200, "random graphs"),
    ), _classical_stconn),
    Experiment("classical-mixing", "Classical mixing time against the eigenvalue bracket", (
        _p("graph", str, "circle", "graph family", ("circle", "hypercube")),
        _p("size", int, 9, "N for circle, d for hypercube"),
        _p("eps", float, 0.25, "total variation threshold (unhalved)"),
        _p("lazy", int, 0, "1 pads self-loops to remove periodicity"),
        _p("t_max", int, 2000, "steps to scan"),
    ), _classical_mixing),
)}


def list_experiments() -> str:
    lines = []
    for e in CATALOG.values():
        lines.append(f"{e.name}: {e.topic}")
        for p in e.params:
            extra = f" {{{', '.join(map(str, p.choices))}}}" if p.choices else ""
            default = ",".join(map(str, p.default)) if isinstance(p.default, tuple) else p.default
            lines.append(f"    {p.name} ({p.type_name}, default {default}){extra}: {p.help}")
    return "\n".join(lines) + "\n"


def parse_params(experiment: str, raw: dict) -> dict:
    """Validate ``raw`` against the experiment's schema and fill in defaults."""
    if experiment not in CATALOG:
        raise InvalidParameters(f"unknown experiment {experiment!r}; valid: {', '.join(CATALOG)}")
    exp = CATALOG[experiment]
    schema = {p.name: p for p in exp.params}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise InvalidParameters(f"unknown parameter(s) for {experiment}: {', '.join(unknown)}")
    values = exp.defaults()
    for key, value in raw.items():
        values[key] = schema[key].parse(value)
    return values


def execute(spec: ExperimentSpec) -> tuple[dict, ExperimentResult]:
    """Run without touching the filesystem; returns (parameters, result)."""
    params = parse_params(spec.experiment, spec.parameters)
    if not 0 <= spec.seed < 2**64:
        raise InvalidParameters("seed must be a 64-bit unsigned integer")
    try:
        return params, CATALOG[spec.experiment].runner(params, spec.seed)
    except InvalidParameters:
        raise
    except (ValueError, KeyError) as exc:
        raise InvalidParameters(str(exc)) from exc


def _json_ready(x):
    if isinstance(x, dict):
        return {k: _json_ready(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_ready(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return _plain(x)


def run_experiment(spec: ExperimentSpec) -> Path:
    """Run and write CSV files plus ``summary.json`` into ``spec.out``."""
    params, result = execute(spec)
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in result.files.items():
        (out / name).write_text(text)
    summary = {
        "experiment": spec.experiment,
        "tool_version": __version__,
        "seed": spec.seed,
        "parameters": params,
        "metrics": result.metrics,
        "files": sorted(result.files),
    }
    path = out / "summary.json"
    path.write_text(json.dumps(_json_ready(summary), indent=2) + "\n")
    return path
