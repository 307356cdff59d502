"""Command-line interface: validate / run / sweep / analyze.

Every command reads a JSON config; run/sweep/analyze write their outputs
into a directory.  Numeric output is fixed at 12 significant digits and
row ordering is deterministic, so files are byte-stable across reruns and
worker counts.

Exit codes: 0 success, 1 validation failure, 2 runtime failure,
3 partially failed sweep.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import backend as backend_mod
from .config import LoadedConfig, load
from .core import bound_C, identifiability
from .dynamics import (
    ReferenceSystem,
    contraction_certificate,
    solve_fixed_point,
    theorem2_bound,
)
from .errors import ConfigError, DiffHMMError, UnsupportedModelError
from .network import validate as validate_network
from .sim import estimate_error_probability, run, sweep

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_PARTIAL = 3


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _prepare_out(out: str) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    probe = out_dir / ".write-probe"
    probe.write_text("")
    probe.unlink()
    return out_dir


def _load(args) -> LoadedConfig:
    loaded = load(args.config)
    if getattr(args, "seed", None) is not None:
        raw = dict(loaded.raw)
        raw["run"] = dict(raw["run"], seed=args.seed)
        loaded = replace(
            loaded, sim=replace(loaded.sim, seed=args.seed), raw=raw
        )
    return loaded


def _manifest(loaded: LoadedConfig, backend: str | None) -> dict:
    return {
        "toolkit_version": __version__,
        "backend": backend or backend_mod.default_backend_name(),
        "seed": loaded.sim.seed,
        "config": loaded.raw,
    }


def _identifiability_report(loaded: LoadedConfig, true_state: int) -> tuple[dict, object]:
    table = identifiability(loaded.sim.true_model, loaded.sim.models, true_state)
    return (
        {
            "true_state": table.true_state,
            "wrong_states": list(table.wrong_states),
            "d": [[float(v) for v in row] for row in table.d],
            "assumption2_ok": table.assumption2_ok,
            "assumption2_failures": list(table.assumption2_failures),
            "negative_entries": [list(p) for p in table.negative_entries],
        },
        table,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    loaded = _load(args)
    sim_cfg = loaded.sim
    diag = validate_network(sim_cfg.network)
    report = {"network": diag.as_dict()}
    ok = diag.all_ok

    # global identifiability is checked against every state the truth
    # process can occupy; for a constant truth that is just its state
    if sim_cfg.truth.kind == "constant":
        candidate_states = [sim_cfg.truth.state]
    else:
        candidate_states = list(range(sim_cfg.states.m_states))
    ident_reports = {}
    tables = {}
    for s in candidate_states:
        rep, table = _identifiability_report(loaded, s)
        ident_reports[str(s)] = rep
        tables[s] = table
        ok = ok and table.assumption2_ok
    report["identifiability"] = ident_reports

    if sim_cfg.models.kind == "finite-alphabet":
        cs = {}
        for s, table in tables.items():
            cs[str(s)] = bound_C(sim_cfg.true_model, sim_cfg.models, table)
        report["bounded_ratio"] = {"applicable": True, "C": cs}
    else:
        report["bounded_ratio"] = {
            "applicable": False,
            "reason": "Gaussian likelihood ratios are unbounded",
        }

    report["ok"] = ok
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_run(args) -> int:
    loaded = _load(args)
    out_dir = _prepare_out(args.out)
    result = run(loaded.sim, backend=args.backend)

    rows = []
    for s_idx, sres in enumerate(result.results):
        err = estimate_error_probability(result, strategy_index=s_idx)
        for agent in range(loaded.sim.network.n_agents):
            rows.append(
                (
                    sres.strategy.label(),
                    agent,
                    float(sres.accuracy[agent]),
                    err,
                    result.horizon,
                    result.replications,
                    result.seed,
                )
            )
    _write_csv(
        out_dir / "summary.csv",
        ["strategy", "agent", "accuracy", "error_prob", "horizon", "replications", "seed"],
        rows,
    )

    if loaded.sim.record_trajectories:
        traj_rows = []
        m = loaded.sim.states.m_states
        for sres in result.results:
            beliefs = sres.belief_trajectories()  # (R, T, N, M)
            for rep in range(result.replications):
                for step in range(result.horizon):
                    for agent in range(loaded.sim.network.n_agents):
                        traj_rows.append(
                            (sres.strategy.label(), rep, step, agent)
                            + tuple(float(b) for b in beliefs[rep, step, agent])
                        )
        _write_csv(
            out_dir / "trajectories.csv",
            ["strategy", "replication", "step", "agent"]
            + [f"belief_{j}" for j in range(m)],
            traj_rows,
        )

    _write_json(out_dir / "manifest.json", _manifest(loaded, args.backend))
    print(f"wrote {out_dir / 'summary.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    loaded = _load(args)
    if not loaded.has_sweep:
        raise ConfigError("config has no sweep section")
    out_dir = _prepare_out(args.out)
    result = sweep(
        loaded.sim,
        loaded.sweep_alpha_grid,
        loaded.sweep_sigma_list,
        [s.kind for s in loaded.sim.strategies],
        backend=args.backend,
        threads=args.threads,
    )
    _write_csv(
        out_dir / "sweep.csv",
        ["strategy", "alpha", "sigma", "agent", "accuracy", "error_prob", "horizon", "seed"],
        [
            (r.strategy, r.alpha, r.sigma, r.agent, r.accuracy, r.error_prob, r.horizon, r.seed)
            for r in result.rows
        ],
    )
    if result.failures:
        _write_csv(
            out_dir / "failures.csv",
            ["strategy", "alpha", "sigma", "message"],
            [(f.strategy, f.alpha, f.sigma, f.message.replace(",", ";")) for f in result.failures],
        )
    _write_json(out_dir / "manifest.json", _manifest(loaded, args.backend))
    print(f"wrote {out_dir / 'sweep.csv'} ({len(result.rows)} rows, {len(result.failures)} failed cells)")
    return EXIT_PARTIAL if result.failures else EXIT_OK


def cmd_analyze(args) -> int:
    loaded = _load(args)
    sim_cfg = loaded.sim
    if sim_cfg.truth.kind != "constant":
        raise DiffHMMError(
            "analysis assumes a fixed true state; use a constant truth process"
        )
    out_dir = _prepare_out(args.out)
    true_state = sim_cfg.truth.state

    ident_report, table = _identifiability_report(loaded, true_state)
    if not table.assumption2_ok:
        print(json.dumps({"identifiability": ident_report, "ok": False}, indent=2))
        print("global identifiability fails; analysis aborted", file=sys.stderr)
        return EXIT_VALIDATION

    alphas = [s.alpha for s in sim_cfg.strategies if s.kind == "alpha-hmm"]
    if not alphas:
        raise DiffHMMError("analysis needs an alpha-hmm strategy in the config")
    alpha = float(alphas[0])

    system = ReferenceSystem(network=sim_cfg.network, d=table.d, alpha=alpha)
    fp = solve_fixed_point(system)
    cert = contraction_certificate(system, samples=args.samples, seed=sim_cfg.seed)

    payload = {
        "alpha": alpha,
        "identifiability": ident_report,
        "fixed_point": {
            "x_inf": [[float(v) for v in row] for row in fp.x_inf],
            "x_bar_inf": fp.x_bar_inf,
            "iterations": fp.iterations,
            "residual": fp.residual,
            "lemma1_margins": [[float(v) for v in row] for row in fp.lemma1_margins],
        },
        "contraction": cert.as_dict(),
    }

    if sim_cfg.models.kind == "finite-alphabet":
        c = bound_C(sim_cfg.true_model, sim_cfg.models, table)
        report = theorem2_bound(system, c)
        payload["error_probability_bound"] = report.as_dict()
    else:
        payload["error_probability_bound"] = {
            "applicable": False,
            "reason": "Gaussian likelihood ratios admit no finite almost-sure bound",
        }

    payload["ok"] = cert.passed
    _write_json(out_dir / "analysis.json", payload)
    print(f"wrote {out_dir / 'analysis.json'}")
    return EXIT_OK if cert.passed else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffhmm",
        description="Decentralized social learning: simulation and analysis",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out=True):
        p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument(
                "--backend",
                choices=backend_mod.available_backends(),
                default=None,
                help="kernel backend (default: compiled if built)",
            )

    p_val = sub.add_parser("validate", help="check model assumptions and network structure")
    add_common(p_val, needs_out=False)
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="simulate all configured strategies once")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="accuracy over a (strategy, sigma, alpha) grid")
    add_common(p_sweep)
    p_sweep.add_argument("--threads", type=int, default=1, help="worker threads (wall time only)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_an = sub.add_parser("analyze", help="fixed point, contraction, and error bounds")
    add_common(p_an)
    p_an.add_argument("--samples", type=int, default=10**5, help="contraction sample pairs")
    p_an.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DiffHMMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
