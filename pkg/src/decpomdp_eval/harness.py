"""Experiment configuration, orchestration across algorithms and seeds, and the CLI.

Config schema (JSON, every key optional except where noted)::

    {
      "model": {"source": "grid", ...GridConfig fields}
             | {"source": "file", "path": "model.json"}
             | {"source": "inline", ...model document}
             | {"source": "random", "num_states": 4, "action_sizes": [2, 2],
                "num_observations": 3, "seed": 0, "policy": "mixture"},
      "algorithms": ["centralized", "diffusion", "baseline"],
      "learner": {"alpha": 0.1, "rho": 0.0001, "gamma": 0.9, "beta": 8},
      "network": {"recipe": "positions", "threshold": null}
               | {"recipe": "uniform"} | {"recipe": "path"}
               | {"recipe": "matrix", "weights": [[...]]},
      "num_iterations": 2000,
      "seeds": [0, 1, 2],
      "marginalization": {"mode": "monte-carlo", "samples": 1000, "cap": 1000000},
      "metrics": {"sbe_window": 20},
      "theory": {"tau": null, "tau_cap": 200000},
      "output_dir": "runs/default"
    }

The model document stores ``transition[a][s_next][s_prev]`` over mixed-radix
joint-action indices, ``likelihoods[k][xi][s]``, ``rewards[k][a][s][s_next]``
and one policy per agent as ``{"kind": "mixture", "table": [[...]]}``
(``table[s][a]``) or ``{"kind": "map", "actions": [...]}``.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import streams as st
from .analysis import (
    DEFAULT_SBE_WINDOW,
    DEFAULT_TAU_CAP,
    BoundError,
    bound_report,
    running_window_mean,
    theory_constants,
)
from .evaluation import (
    IdentityFeatures,
    LearnerConfig,
    Marginalization,
    init_centralized,
    init_network,
    step_baseline,
    step_centralized,
    step_diffusion,
)
from .filtering import DEFAULT_ENUMERATION_CAP, DEFAULT_MC_SAMPLES
from .gridworld import GridConfig, build_grid_model, resolve_positions
from .model import (
    DecPomdpModel,
    LikelihoodModel,
    MapPolicy,
    MixturePolicy,
    ModelError,
    TabularReward,
    TabularTransition,
    random_model,
    state_action_table,
    validate_model,
)
from .network import (
    CombinationMatrix,
    NetworkError,
    build_from_positions,
    build_path,
    build_uniform,
    validate_combination,
)

ALGORITHMS = ("centralized", "diffusion", "baseline")
CSV_HEADER = (
    "iter", "algorithm", "seed", "sbe", "sbe_window",
    "agreement_error", "centroid_norm", "mean_kl_to_central", "baseline_gap",
)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config


@dataclass
class ExperimentConfig:
    model: dict = field(default_factory=lambda: {"source": "grid"})
    algorithms: list = field(default_factory=lambda: ["diffusion", "baseline"])
    learner: dict = field(default_factory=lambda: {"alpha": 0.1, "rho": 0.0001, "gamma": 0.9, "beta": 1.0})
    network: dict = field(default_factory=lambda: {"recipe": "uniform"})
    num_iterations: int = 100
    seeds: list = field(default_factory=lambda: [0])
    marginalization: dict = field(default_factory=lambda: {"mode": "exact"})
    metrics: dict = field(default_factory=lambda: {"sbe_window": DEFAULT_SBE_WINDOW})
    theory: dict = field(default_factory=dict)
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**copy.deepcopy(doc))
        errs = cfg.validate()
        if errs:
            raise ConfigError("; ".join(errs))
        return cfg

    def to_dict(self) -> dict:
        return {name: copy.deepcopy(getattr(self, name)) for name in self.__dataclass_fields__}

    def validate(self) -> list[str]:
        errs = []
        if not self.algorithms:
            errs.append("at least one algorithm is required")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            errs.append(f"unknown algorithms {bad}; choose from {list(ALGORITHMS)}")
        if not self.seeds:
            errs.append("at least one seed is required")
        if any(not isinstance(s, int) or isinstance(s, bool) or s < 0 for s in self.seeds):
            errs.append("seeds must be non-negative integers")
        if len(set(self.seeds)) != len(self.seeds):
            errs.append("seeds must be distinct")
        if not isinstance(self.num_iterations, int) or self.num_iterations < 1:
            errs.append("num_iterations must be an integer >= 1")
        if self.model.get("source", "grid") not in ("grid", "file", "inline", "random"):
            errs.append(f"unknown model source {self.model.get('source')!r}")
        if self.network.get("recipe", "uniform") not in ("uniform", "positions", "path", "matrix"):
            errs.append(f"unknown network recipe {self.network.get('recipe')!r}")
        if self.marginalization.get("mode", "exact") not in ("exact", "monte-carlo"):
            errs.append("marginalization mode must be 'exact' or 'monte-carlo'")
        if int(self.metrics.get("sbe_window", DEFAULT_SBE_WINDOW)) < 1:
            errs.append("sbe_window must be at least 1")
        try:
            self.learner_config(gamma_default=0.5)
        except (TypeError, ValueError) as exc:
            errs.append(f"learner: {exc}")
        return errs

    def learner_config(self, gamma_default: float) -> LearnerConfig:
        d = dict(self.learner)
        d.setdefault("gamma", gamma_default)
        return LearnerConfig(**d)

    def marginalization_config(self) -> Marginalization:
        m = self.marginalization
        return Marginalization(
            mode=m.get("mode", "exact"),
            samples=int(m.get("samples", DEFAULT_MC_SAMPLES)),
            cap=int(m.get("cap", DEFAULT_ENUMERATION_CAP)),
        )

    @property
    def sbe_window(self) -> int:
        return int(self.metrics.get("sbe_window", DEFAULT_SBE_WINDOW))


def canonical_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode()


def config_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_bytes(doc)).hexdigest()


# ---------------------------------------------------------------------------
# model documents


def model_from_dict(doc: dict) -> DecPomdpModel:
    try:
        action_sizes = [int(a) for a in doc["action_sizes"]]
        S = int(doc["num_states"])
        pols = []
        for p in doc["policies"]:
            if p["kind"] == "mixture":
                pols.append(MixturePolicy(np.array(p["table"], dtype=float)))
            elif p["kind"] == "map":
                pols.append(MapPolicy(np.array(p["actions"], dtype=np.int64), int(p.get("num_actions", S))))
            else:
                raise ModelError(f"unknown policy kind {p['kind']!r}")
        return DecPomdpModel(
            num_states=S,
            action_sizes=tuple(action_sizes),
            transition=TabularTransition(np.array(doc["transition"], dtype=float), action_sizes),
            likelihoods=tuple(LikelihoodModel(np.array(t, dtype=float)) for t in doc["likelihoods"]),
            rewards=TabularReward(np.array(doc["rewards"], dtype=float), action_sizes),
            policies=tuple(pols),
            gamma=float(doc.get("gamma", 0.9)),
            r_max=float(doc.get("r_max", 1.0)),
        )
    except KeyError as exc:
        raise ModelError(f"model document is missing {exc}") from None


def model_to_dict(model: DecPomdpModel) -> dict:
    """Serialize a tabular model (reward and transition must be tabular)."""
    if not isinstance(model.transition, TabularTransition) or not isinstance(model.rewards, TabularReward):
        raise ModelError("only tabular models can be serialized")
    pols = []
    for p, a in zip(model.policies, model.action_sizes):
        if isinstance(p, MapPolicy):
            pols.append({"kind": "map", "actions": p.action_of_state.tolist(), "num_actions": a})
        else:
            pols.append({"kind": "mixture", "table": state_action_table(p, model.num_states).tolist()})
    return {
        "num_states": model.num_states,
        "action_sizes": list(model.action_sizes),
        "transition": model.transition.table.tolist(),
        "likelihoods": [lik.table.tolist() for lik in model.likelihoods],
        "rewards": model.rewards.table.tolist(),
        "policies": pols,
        "gamma": model.gamma,
        "r_max": model.r_max,
    }


def _grid_config(spec: dict) -> GridConfig:
    fields = {k: v for k, v in spec.items() if k != "source"}
    try:
        return GridConfig(**fields)
    except TypeError as exc:
        raise ConfigError(f"grid model: {exc}") from None


def build_model(spec: dict, base_dir: Path | None = None) -> DecPomdpModel:
    source = spec.get("source", "grid")
    if source == "grid":
        return build_grid_model(_grid_config(spec))
    if source == "file":
        path = Path(spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return model_from_dict(json.loads(path.read_text()))
    if source == "inline":
        return model_from_dict(spec)
    if source == "random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        return random_model(
            spec["num_states"],
            spec["action_sizes"],
            spec.get("num_observations", spec["num_states"]),
            rng,
            gamma=float(spec.get("gamma", 0.9)),
            concentration=float(spec.get("concentration", 1.0)),
            min_prob=float(spec.get("min_prob", 1e-3)),
            policy=spec.get("policy", "mixture"),
        )
    raise ConfigError(f"unknown model source {source!r}")


def build_network(spec: dict, model_spec: dict, K: int) -> CombinationMatrix:
    recipe = spec.get("recipe", "uniform")
    if recipe == "uniform":
        C = build_uniform(K)
    elif recipe == "path":
        C = build_path(K)
    elif recipe == "matrix":
        C = CombinationMatrix(spec["weights"])
    elif recipe == "positions":
        positions = spec.get("positions")
        if positions is None:
            if model_spec.get("source", "grid") != "grid":
                raise ConfigError("the positions recipe needs explicit positions for non-grid models")
            positions = resolve_positions(_grid_config(model_spec))
        C = build_from_positions(positions, spec.get("threshold"))
    else:
        raise ConfigError(f"unknown network recipe {recipe!r}")
    if C.K != K:
        raise ConfigError(f"network has {C.K} agents but the model has {K}")
    return C


@dataclass
class Setup:
    model: DecPomdpModel
    C: CombinationMatrix
    learner: LearnerConfig
    features: IdentityFeatures
    marginalization: Marginalization


def prepare(cfg: ExperimentConfig, base_dir: Path | None = None) -> Setup:
    model = build_model(cfg.model, base_dir)
    report = validate_model(model)
    if not report.ok:
        raise ModelError("model is invalid: " + "; ".join(v.message for v in report.violations))
    C = build_network(cfg.network, cfg.model, model.num_agents)
    return Setup(
        model=model,
        C=C,
        learner=cfg.learner_config(gamma_default=model.gamma),
        features=IdentityFeatures(model.num_states),
        marginalization=cfg.marginalization_config(),
    )


def compute_bounds(cfg: ExperimentConfig, setup: Setup):
    lc = setup.learner
    constants = theory_constants(
        setup.model,
        setup.C,
        beta=lc.beta,
        alpha=lc.alpha,
        rho=lc.rho,
        gamma=lc.gamma,
        B_phi=setup.features.b_phi,
        L_phi=setup.features.l_phi,
        tau=cfg.theory.get("tau"),
        tau_cap=int(cfg.theory.get("tau_cap", DEFAULT_TAU_CAP)),
    )
    return constants, bound_report(constants)


# ---------------------------------------------------------------------------
# running


@dataclass
class RunTrace:
    """Per-iteration metrics of one (algorithm, seed) run."""

    algorithm: str
    seed: int
    sbe: np.ndarray
    sbe_window: np.ndarray
    centroid_norm: np.ndarray
    param_norm: np.ndarray
    agreement_error: np.ndarray | None = None
    mean_distance: np.ndarray | None = None
    mean_kl: np.ndarray | None = None
    kl_per_agent: np.ndarray | None = None
    kl_infinite: int = 0
    baseline_gap: np.ndarray | None = None
    w_final: list | None = None

    def csv_rows(self):
        n = len(self.sbe)
        for i in range(n):
            yield [
                i,
                self.algorithm,
                self.seed,
                _fmt(self.sbe[i]),
                _fmt(self.sbe_window[i]),
                _fmt(self.agreement_error[i]) if self.agreement_error is not None else "",
                _fmt(self.centroid_norm[i]),
                _fmt(self.mean_kl[i]) if self.mean_kl is not None else "",
                _fmt(self.baseline_gap[i]) if self.baseline_gap is not None else "",
            ]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def simulate(
    setup: Setup,
    algorithm: str,
    seed: int,
    num_iterations: int,
    sbe_window: int = DEFAULT_SBE_WINDOW,
    shadow: bool = True,
    on_step=None,
) -> RunTrace:
    """Run one algorithm for ``num_iterations`` steps under master seed ``seed``.

    ``on_step(state, row)`` is called after every iteration when given.
    """
    model, C, lc, feats, marg = setup.model, setup.C, setup.learner, setup.features, setup.marginalization
    streams = st.Streams(seed)
    if algorithm == "centralized":
        state = init_centralized(model, feats, streams)
        step = lambda s: step_centralized(s, model, lc, streams, feats)  # noqa: E731
    elif algorithm == "diffusion":
        state = init_network(model, feats, streams, with_central=shadow)
        step = lambda s: step_diffusion(s, model, C, lc, streams, feats, marg)  # noqa: E731
    elif algorithm == "baseline":
        state = init_network(model, feats, streams, with_central=True)
        step = lambda s: step_baseline(s, model, C, lc, streams, feats, marg)  # noqa: E731
    else:
        raise ConfigError(f"unknown algorithm {algorithm!r}")

    n, K = num_iterations, model.num_agents
    sbe_v, cnorm, pnorm = np.empty(n), np.empty(n), np.empty(n)
    agree = np.empty(n) if algorithm == "diffusion" else None
    dist = np.empty(n) if algorithm == "diffusion" else None
    has_kl = algorithm == "baseline" or (algorithm == "diffusion" and shadow)
    kl = np.empty(n) if has_kl else None
    klk = np.empty((n, K)) if has_kl else None
    gap = np.empty(n) if algorithm == "diffusion" and shadow else None
    kl_inf = 0
    for i in range(n):
        state, row = step(state)
        sbe_v[i], cnorm[i], pnorm[i] = row.sbe, row.centroid_norm, row.param_norm
        if agree is not None:
            agree[i], dist[i] = row.agreement_error, row.mean_distance
        if kl is not None:
            kl[i], klk[i] = row.mean_kl_to_central, row.kl_per_agent
            kl_inf += row.kl_infinite
        if gap is not None:
            gap[i] = row.baseline_gap
        if on_step is not None:
            on_step(state, row)
    if state.agents is not None and algorithm == "diffusion":
        w_final = [a.w.tolist() for a in state.agents]
    else:
        w_final = [state.central.w.tolist()]
    return RunTrace(
        algorithm=algorithm,
        seed=seed,
        sbe=sbe_v,
        sbe_window=running_window_mean(sbe_v, sbe_window),
        centroid_norm=cnorm,
        param_norm=pnorm,
        agreement_error=agree,
        mean_distance=dist,
        mean_kl=kl,
        kl_per_agent=klk,
        kl_infinite=kl_inf,
        baseline_gap=gap,
        w_final=w_final,
    )


def trace_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(trace.csv_rows())
    return buf.getvalue()


def _run_job(args) -> tuple[str, int, str, dict]:
    doc, base_dir, algorithm, seed = args
    cfg = ExperimentConfig.from_dict(doc)
    setup = prepare(cfg, base_dir)
    trace = simulate(setup, algorithm, seed, cfg.num_iterations, cfg.sbe_window)
    return algorithm, seed, trace_csv(trace), _trace_summary(trace)


def _tail(x: np.ndarray | None, frac: float) -> float | None:
    if x is None:
        return None
    n = max(1, int(round(len(x) * frac)))
    v = x[-n:]
    v = v[np.isfinite(v)]
    return float(v.mean()) if len(v) else None


def _trace_summary(t: RunTrace) -> dict:
    n_tail = max(1, int(round(len(t.param_norm) * 0.8)))
    return {
        "final_sbe_window": float(t.sbe_window[-1]),
        "final_agreement_error": None if t.agreement_error is None else float(t.agreement_error[-1]),
        "agreement_plateau": _tail(t.agreement_error, 0.2),
        "mean_distance_plateau": _tail(t.mean_distance, 0.2),
        "mean_kl_last_half": _tail(t.mean_kl, 0.5),
        "kl_infinite_samples": t.kl_infinite,
        "baseline_gap_plateau": _tail(t.baseline_gap, 0.2),
        "max_param_norm_tail": float(np.max(t.param_norm[-n_tail:])),
        "mean_sbe_window": t.sbe_window.tolist(),
    }


@dataclass
class RunArtifacts:
    output_dir: Path
    csv_paths: dict
    summary: dict
    manifest: dict


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    jobs: int = 1,
    base_dir: Path | None = None,
    log=None,
) -> RunArtifacts:
    out = Path(out_dir or cfg.output_dir or "runs")
    out.mkdir(parents=True, exist_ok=True)
    doc = cfg.to_dict()
    setup = prepare(cfg, base_dir)  # fail fast on bad configs before spawning workers
    setup.learner.check_regime(setup.features)
    try:
        constants, report = compute_bounds(cfg, setup)
        bounds = {"constants": constants.to_dict(), "report": report.to_dict()}
    except BoundError as exc:
        constants, report = None, None
        bounds = {"error": str(exc)}

    tasks = [(doc, base_dir, a, s) for a in cfg.algorithms for s in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, tasks))
    else:
        results = []
        for t in tasks:
            results.append(_run_job(t))
            if log:
                log(f"finished {t[2]} seed {t[3]}")

    csv_paths, per_run = {}, {}
    for algorithm, seed, text, summ in results:
        path = out / f"trace_{algorithm}_seed{seed}.csv"
        path.write_text(text)
        csv_paths[(algorithm, seed)] = path
        per_run.setdefault(algorithm, {})[seed] = summ

    algorithms = {}
    for algorithm, runs in per_run.items():
        curves = np.array([r.pop("mean_sbe_window") for r in runs.values()])
        mean_curve = curves.mean(axis=0)
        (out / f"mean_{algorithm}.csv").write_text(
            "iter,sbe_window\n" + "".join(f"{i},{_fmt(v)}\n" for i, v in enumerate(mean_curve))
        )
        algorithms[algorithm] = {"seeds": runs, "mean": _mean_over_seeds(runs)}

    summary = {
        "num_iterations": cfg.num_iterations,
        "seeds": cfg.seeds,
        "sbe_window": cfg.sbe_window,
        "algorithms": algorithms,
        "bounds": bounds,
        "theory_vs_empirical": _comparison(report, algorithms),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    cfg_bytes = canonical_bytes(doc)
    (out / "config.json").write_bytes(cfg_bytes)
    manifest = {
        "config_sha256": hashlib.sha256(cfg_bytes).hexdigest(),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "files": sorted(p.name for p in out.iterdir() if p.name != "manifest.json"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return RunArtifacts(out, csv_paths, summary, manifest)


def _json_default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def _mean_over_seeds(runs: dict) -> dict:
    keys = next(iter(runs.values())).keys()
    out = {}
    for key in keys:
        vals = [r[key] for r in runs.values() if r[key] is not None]
        out[key] = float(np.mean(vals)) if vals else None
    return out


def _comparison(report, algorithms: dict) -> list[dict]:
    if report is None:
        return []
    d = algorithms.get("diffusion", {}).get("mean", {})
    rows = [
        ("J_bound", report.J_bound, "mean KL(mu || mu_k), last half", d.get("mean_kl_last_half")),
        ("network_agreement_bound", report.network_agreement_bound,
         "mean ||w_k - w_c||, last 20%", d.get("mean_distance_plateau")),
        ("baseline_gap_bound", report.baseline_gap_bound,
         "||w_c - w*||, last 20%", d.get("baseline_gap_plateau")),
        ("parameter_norm_bound", report.parameter_norm_bound,
         "max ||col{w_k}||, last 80%", d.get("max_param_norm_tail")),
    ]
    return [
        {
            "bound": name,
            "value": bound,
            "empirical": emp_name,
            "empirical_value": emp,
            "holds": None if bound is None or emp is None else bool(emp <= bound),
        }
        for name, bound, emp_name, emp in rows
    ]


# ---------------------------------------------------------------------------
# CLI


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        sys.exit(2)


def _load_config(path: str) -> tuple[ExperimentConfig, Path]:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(doc), p.resolve().parent


def _fail(exc: Exception) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return 1


def cli_main(argv=None) -> int:
    from .gridworld import default_experiment_config

    parser = _Parser(prog="decpomdp-eval", description=__doc__.splitlines()[0])
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run_p = sub.add_parser("run", help="run the experiment and write traces")
    run_p.add_argument("config")
    run_p.add_argument("--out", help="output directory (overrides output_dir)")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run_p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    for name, text in (("validate", "check the model and network only"), ("bounds", "print theory constants and bounds")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config")
        p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    sub.add_parser("paper-default", help="print the default tracking-experiment config")
    args = parser.parse_args(argv)

    if args.command == "paper-default":
        json.dump(default_experiment_config(), sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0
    try:
        cfg, base = _load_config(args.config)
        if args.command == "validate":
            setup = prepare(cfg, base)
            rep = validate_combination(setup.C)
            diag = rep.diagnostics
            out = {
                "ok": True,
                "num_states": setup.model.num_states,
                "num_agents": setup.model.num_agents,
                "lambda2": diag.lambda2,
                "d_min": diag.d_min,
            }
            print(json.dumps(out, indent=2))
            return 0
        if args.command == "bounds":
            setup = prepare(cfg, base)
            constants, report = compute_bounds(cfg, setup)
            print(json.dumps({"constants": constants.to_dict(), "report": report.to_dict()}, indent=2,
                             default=_json_default))
            return 0
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        log = None if args.quiet else (lambda m: print(m, file=sys.stderr))
        arts = run_experiment(cfg, args.out, jobs=args.jobs, base_dir=base, log=log)
        if not args.quiet:
            print(str(arts.output_dir))
        return 0
    except (ConfigError, ModelError, NetworkError, BoundError, OSError, ValueError, ArithmeticError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(cli_main())
