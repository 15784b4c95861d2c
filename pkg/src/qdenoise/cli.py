"""Configuration-driven command line front end.

Subcommands: ``optimize``, ``evaluate``, ``sample``, ``analyze``, ``sweep``.
Each run is driven by a JSON config (unknown keys are rejected) plus a seed,
and persists self-describing artifacts: a denoiser parameter file, result
tables (CSV with JSON sidecars), and a run record echoing the config.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import channel_entropy, spectrum, unit_circle_metrics
from .artifacts import (
    load_denoiser,
    resize_denoiser,
    save_denoiser,
    trotter_fingerprint,
    write_run_artifact,
    write_table,
)
from .channels import NoiseModel, gamma_of
from .circuits import (
    DenoiserSpec,
    GateList,
    TrotterSpec,
    build_denoiser,
    build_trotter,
    compose,
    stack,
)
from .observables import domain_wall_magnetization, otoc, two_point_zz
from .optimizer import OptimizationError, OptimizerConfig, epsilon, optimize
from .pauli import embed_local, pauli_matrix, vec
from .sampler import hoeffding_samples, run_shots


class ConfigError(ValueError):
    """Invalid or incomplete run configuration; names the offending field."""


_TASK_KEYS = {
    "two_point_zz": {"kind", "i", "j", "times"},
    "otoc": {"kind", "i", "j", "backward_denoiser"},
    "domain_wall": {"kind", "n_stack"},
    "spectrum_triple": {"kind"},
    "entropy": {"kind"},
    "stack_correlator": {"kind", "i", "j", "n_max"},
    "gamma_report": {"kind"},
    "alpha_report": {"kind"},
}


def _section(cfg: dict, name: str, required: bool = True) -> dict:
    if name not in cfg:
        if required:
            raise ConfigError(f"missing config section '{name}'")
        return {}
    sec = cfg[name]
    if not isinstance(sec, dict):
        raise ConfigError(f"config section '{name}' must be an object")
    return sec


def _field(sec: dict, secname: str, key: str, required: bool = True, default=None):
    if key not in sec:
        if required:
            raise ConfigError(f"missing config field '{secname}.{key}'")
        return default
    return sec[key]


def _reject_unknown(sec: dict, secname: str, allowed: set[str]) -> None:
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown config field '{secname}.{sorted(unknown)[0]}'")


class RunConfig:
    """Validated run configuration shared by every subcommand."""

    def __init__(self, cfg: dict, seed_override: int | None = None):
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
        _reject_unknown(
            cfg,
            "config",
            {"system", "trotter", "noise", "denoiser", "optimizer", "tasks",
             "sampling", "sweep", "seed"},
        )
        system = _section(cfg, "system")
        _reject_unknown(system, "system", {"L", "couplings"})
        self.L = int(_field(system, "system", "L"))
        self.couplings = tuple(
            float(x) for x in _field(system, "system", "couplings", False, (1.0, 1.0, 1.0))
        )
        if len(self.couplings) != 3:
            raise ConfigError("system.couplings must have three entries")

        trotter = _section(cfg, "trotter")
        _reject_unknown(trotter, "trotter", {"t", "m_trot"})
        self.t = float(_field(trotter, "trotter", "t"))
        self.m_trot = int(_field(trotter, "trotter", "m_trot"))

        noise = _section(cfg, "noise")
        _reject_unknown(noise, "noise", {"p"})
        self.p = float(_field(noise, "noise", "p"))

        den = _section(cfg, "denoiser", required=False)
        _reject_unknown(den, "denoiser", {"depth", "allow_retarget"})
        self.depth = int(_field(den, "denoiser", "depth", False, 0) or 0)
        self.allow_retarget = bool(_field(den, "denoiser", "allow_retarget", False, False))

        opt = _section(cfg, "optimizer", required=False)
        allowed = {
            "max_iters", "learning_rate", "adam_betas", "grad_tolerance",
            "init_eta1", "init_angle_scale", "restarts", "gamma_weight",
            "batch_columns", "resample_every", "plateau_patience", "plateau_rtol",
        }
        _reject_unknown(opt, "optimizer", allowed)
        self.seed = int(cfg.get("seed", 0))
        if seed_override is not None:
            self.seed = int(seed_override)
        kwargs = {k: opt[k] for k in opt}
        if "adam_betas" in kwargs:
            kwargs["adam_betas"] = tuple(kwargs["adam_betas"])
        try:
            self.optimizer = OptimizerConfig(seed=self.seed, **kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid optimizer settings: {exc}") from exc

        self.tasks = []
        for idx, task in enumerate(cfg.get("tasks", [])):
            if not isinstance(task, dict) or "kind" not in task:
                raise ConfigError(f"tasks[{idx}] must be an object with a 'kind'")
            kind = task["kind"]
            if kind not in _TASK_KEYS:
                raise ConfigError(f"tasks[{idx}].kind '{kind}' is not supported")
            _reject_unknown(task, f"tasks[{idx}]", _TASK_KEYS[kind])
            self.tasks.append(dict(task))

        samp = _section(cfg, "sampling", required=False)
        _reject_unknown(samp, "sampling", {"delta", "omega", "observable"})
        self.delta = float(_field(samp, "sampling", "delta", False, 0.05))
        self.omega = float(_field(samp, "sampling", "omega", False, 0.1))
        self.sample_observable = _field(samp, "sampling", "observable", False, None)

        sweep = _section(cfg, "sweep", required=False)
        _reject_unknown(sweep, "sweep", {"p_values"})
        self.sweep_p = [float(x) for x in _field(sweep, "sweep", "p_values", False, [])]

        try:
            self.noise_model = NoiseModel(self.p)
            self.trotter_spec = TrotterSpec(
                L=self.L, t=self.t, m_trot=self.m_trot,
                noise=self.noise_model, couplings=self.couplings,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def circuits(self) -> tuple[GateList, GateList]:
        noiseless = build_trotter(self.trotter_spec, noisy=False)
        noisy = build_trotter(self.trotter_spec, noisy=True)
        return noiseless, noisy


def _load_config(path: str, seed: int | None) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return RunConfig(raw, seed_override=seed)


def _load_denoiser_checked(path: str, rc: RunConfig) -> DenoiserSpec:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"denoiser file not found: {path}")
    spec, doc = load_denoiser(p)
    fingerprint = trotter_fingerprint(rc.trotter_spec)
    if spec.L != rc.L:
        if not rc.allow_retarget:
            raise ConfigError(
                f"denoiser was optimized at L={spec.L}, config has L={rc.L} "
                "(set denoiser.allow_retarget to rebuild the channels)"
            )
        spec = resize_denoiser(spec, rc.L)
    elif doc.get("target_fingerprint") not in (None, fingerprint) and not rc.allow_retarget:
        raise ConfigError(
            "denoiser file fingerprint does not match the configured circuit "
            "(set denoiser.allow_retarget to reuse it anyway)"
        )
    if abs(spec.noise.p - rc.p) > 1e-12 and not rc.allow_retarget:
        raise ConfigError(
            f"denoiser was optimized at p={spec.noise.p}, config has p={rc.p}"
        )
    return spec


def _sigma_z(site: int, L: int) -> np.ndarray:
    return embed_local(pauli_matrix(3), site, L)


def cmd_optimize(rc: RunConfig, out_dir: Path) -> int:
    if rc.depth < 1:
        raise ConfigError("denoiser.depth must be >= 1 for optimize")
    noiseless, noisy = rc.circuits()
    started = time.perf_counter()
    report = optimize(noiseless, noisy, rc.depth, rc.noise_model, rc.optimizer)
    baseline = epsilon(
        noiseless,
        DenoiserSpec(L=rc.L, depth=0, layers=(), noise=rc.noise_model),
        noisy,
    )
    spec = report.best_params
    gamma = spec.gamma
    out_dir.mkdir(parents=True, exist_ok=True)
    denoiser_path = out_dir / "denoiser.json"
    save_denoiser(denoiser_path, spec, rc.trotter_spec)
    write_run_artifact(
        out_dir / "optimize.json",
        {
            "command": "optimize",
            "version": __version__,
            "seed": rc.seed,
            "config": _echo(rc),
            "final_epsilon": report.final_epsilon,
            "baseline_epsilon": baseline,
            "epsilon_trace": report.epsilon_trace,
            "grad_norm_trace": report.grad_norm_trace,
            "n_iters": report.n_iters,
            "stop_reason": report.stop_reason,
            "gamma": gamma,
            "hoeffding_budget": hoeffding_samples(gamma, rc.delta, rc.omega),
            "wall_time_s": time.perf_counter() - started,
        },
    )
    print(f"final epsilon {report.final_epsilon:.6e} (baseline {baseline:.6e})")
    print(f"denoiser written to {denoiser_path}")
    return 0


def _echo(rc: RunConfig) -> dict:
    return {
        "system": {"L": rc.L, "couplings": list(rc.couplings)},
        "trotter": {"t": rc.t, "m_trot": rc.m_trot},
        "noise": {"p": rc.p},
        "denoiser": {"depth": rc.depth},
        "seed": rc.seed,
    }


def _correlator_rows(rc: RunConfig, task: dict, spec: DenoiserSpec | None):
    i = int(task.get("i", rc.L // 2))
    j = int(task.get("j", rc.L // 2))
    times = [float(x) for x in task.get("times", [rc.t])]
    rows = []
    for t in times:
        tspec = TrotterSpec(rc.L, t, rc.m_trot, rc.noise_model, rc.couplings)
        noiseless = build_trotter(tspec, noisy=False)
        noisy = build_trotter(tspec, noisy=True)
        rows.append(["two_point_zz", rc.L, t, rc.m_trot, 0, 0.0, i, j, 1,
                     two_point_zz(noiseless, i, j, rc.L)])
        rows.append(["two_point_zz", rc.L, t, rc.m_trot, 0, rc.p, i, j, 1,
                     two_point_zz(noisy, i, j, rc.L)])
        if spec is not None:
            denoised = noisy + build_denoiser(spec)
            rows.append(["two_point_zz", rc.L, t, rc.m_trot, spec.depth, rc.p, i, j, 1,
                         two_point_zz(denoised, i, j, rc.L)])
    return rows


def _stack_rows(rc: RunConfig, task: dict, spec: DenoiserSpec | None):
    i = int(task.get("i", rc.L // 2))
    j = int(task.get("j", rc.L // 2))
    n_max = int(task.get("n_max", 5))
    noiseless, noisy = rc.circuits()
    denoised = noisy + build_denoiser(spec) if spec is not None else None
    rows = []
    for n in range(1, n_max + 1):
        rows.append(["stack_zz", rc.L, rc.t * n, rc.m_trot, 0, 0.0, i, j, n,
                     two_point_zz(stack(noiseless, n), i, j, rc.L)])
        rows.append(["stack_zz", rc.L, rc.t * n, rc.m_trot, 0, rc.p, i, j, n,
                     two_point_zz(stack(noisy, n), i, j, rc.L)])
        if denoised is not None:
            rows.append(["stack_zz", rc.L, rc.t * n, rc.m_trot, spec.depth, rc.p, i, j, n,
                         two_point_zz(stack(denoised, n), i, j, rc.L)])
    return rows


def cmd_evaluate(rc: RunConfig, denoiser_path: str | None, out_dir: Path) -> int:
    spec = _load_denoiser_checked(denoiser_path, rc) if denoiser_path else None
    if not rc.tasks:
        raise ConfigError("evaluate needs a non-empty 'tasks' list")
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = ["kind", "L", "t", "m_trot", "M", "p", "i", "j", "n", "value"]
    rows = []
    meta = {"config": _echo(rc), "version": __version__}
    for task in rc.tasks:
        kind = task["kind"]
        if kind == "two_point_zz":
            rows += _correlator_rows(rc, task, spec)
        elif kind == "stack_correlator":
            rows += _stack_rows(rc, task, spec)
        elif kind == "otoc":
            rows += _otoc_rows(rc, task, spec)
        elif kind == "domain_wall":
            rows += _domain_wall_rows(rc, task, spec)
        elif kind == "spectrum_triple":
            _write_spectra(rc, spec, out_dir, meta)
        elif kind == "entropy":
            rows += _entropy_rows(rc, spec)
        elif kind == "gamma_report":
            rows += _gamma_rows(rc, spec)
        elif kind == "alpha_report":
            rows += _alpha_rows(rc, spec)
    if rows:
        write_table(out_dir / "results.csv", columns, rows, meta)
        print(f"wrote {len(rows)} result rows to {out_dir / 'results.csv'}")
    return 0


def _otoc_rows(rc: RunConfig, task: dict, spec: DenoiserSpec | None):
    i = int(task.get("i", rc.L // 2))
    j_req = task.get("j", "all")
    sites = range(rc.L) if j_req == "all" else [int(j_req)]
    back_spec = None
    if task.get("backward_denoiser"):
        back_spec = _load_denoiser_checked(task["backward_denoiser"], rc)
    reversed_spec = TrotterSpec(rc.L, -rc.t, rc.m_trot, rc.noise_model, rc.couplings)
    rows = []
    for noisy_flag, m, p, fwd_spec in (
        (False, 0, 0.0, None),
        (True, spec.depth if spec else 0, rc.p, spec),
    ):
        fwd = build_trotter(rc.trotter_spec, noisy=noisy_flag)
        bwd = build_trotter(reversed_spec, noisy=noisy_flag)
        if fwd_spec is not None:
            fwd = fwd + build_denoiser(fwd_spec)
        if back_spec is not None and noisy_flag:
            bwd = bwd + build_denoiser(back_spec)
        for j in sites:
            rows.append(["otoc", rc.L, rc.t, rc.m_trot, m, p, i, j, 1,
                         otoc(fwd, bwd, i, j, rc.L)])
    return rows


def _domain_wall_rows(rc: RunConfig, task: dict, spec: DenoiserSpec | None):
    n_stack = int(task.get("n_stack", 1))
    noiseless, noisy = rc.circuits()
    rows = [
        ["domain_wall", rc.L, rc.t, rc.m_trot, 0, 0.0, 0, 0, n_stack,
         domain_wall_magnetization(noiseless, rc.L, n_stack)],
        ["domain_wall", rc.L, rc.t, rc.m_trot, 0, rc.p, 0, 0, n_stack,
         domain_wall_magnetization(noisy, rc.L, n_stack)],
    ]
    if spec is not None:
        denoised = noisy + build_denoiser(spec)
        rows.append(
            ["domain_wall", rc.L, rc.t, rc.m_trot, spec.depth, rc.p, 0, 0, n_stack,
             domain_wall_magnetization(denoised, rc.L, n_stack)]
        )
    return rows


def _entropy_rows(rc: RunConfig, spec: DenoiserSpec | None):
    noiseless, noisy = rc.circuits()
    rows = []
    for label, m, p, mat in _dense_triple(rc, spec, noiseless, noisy):
        report = channel_entropy(mat)
        rows.append(["entropy_full", rc.L, rc.t, rc.m_trot, m, p, 0, 0, 1,
                     report.full_choi_entropy])
        rows.append(["entropy_half", rc.L, rc.t, rc.m_trot, m, p, 0, 0, 1,
                     report.half_chain_entropy])
    return rows


def _dense_triple(rc, spec, noiseless, noisy):
    yield "noiseless", 0, 0.0, compose(noiseless)
    yield "noisy", 0, rc.p, compose(noisy)
    if spec is not None:
        denoiser_gates = build_denoiser(spec)
        yield "denoiser", spec.depth, rc.p, compose(denoiser_gates)
        yield "denoised", spec.depth, rc.p, compose(noisy + denoiser_gates)


def _write_spectra(rc: RunConfig, spec: DenoiserSpec | None, out_dir: Path, meta):
    noiseless, noisy = rc.circuits()
    for label, _m, _p, mat in _dense_triple(rc, spec, noiseless, noisy):
        report = spectrum(mat)
        rows = [[ev.real, ev.imag] for ev in report.eigenvalues]
        write_table(out_dir / f"spectrum_{label}.csv", ["re", "im"], rows, meta)
    print(f"wrote spectra to {out_dir}")


def _gamma_rows(rc: RunConfig, spec: DenoiserSpec | None):
    if spec is None:
        raise ConfigError("gamma_report needs a denoiser file")
    rows = [["gamma_total", rc.L, rc.t, rc.m_trot, spec.depth, rc.p, 0, 0, 1, spec.gamma]]
    for layer, ch in enumerate(spec.layers):
        rows.append(["gamma_layer", rc.L, rc.t, rc.m_trot, spec.depth, rc.p,
                     layer, 0, 1, gamma_of(ch)])
    return rows


def _alpha_rows(rc: RunConfig, spec: DenoiserSpec | None):
    if spec is None:
        raise ConfigError("alpha_report needs a denoiser file")
    return [
        ["zz_angle", rc.L, rc.t, rc.m_trot, spec.depth, rc.p, layer, 0, 1,
         ch.unitary.alpha]
        for layer, ch in enumerate(spec.layers)
    ]


def cmd_sample(rc: RunConfig, denoiser_path: str | None, shots: int, out_dir: Path) -> int:
    if shots < 1:
        raise ConfigError("empty budget: --shots must be >= 1")
    if denoiser_path is None:
        raise ConfigError("sample needs --denoiser")
    spec = _load_denoiser_checked(denoiser_path, rc)
    obs_cfg = rc.sample_observable or {"kind": "two_point_zz", "i": rc.L // 2, "j": rc.L // 2}
    kind = obs_cfg.get("kind")
    if kind != "two_point_zz":
        raise ConfigError(f"sampling.observable.kind '{kind}' is not supported")
    i, j = int(obs_cfg.get("i", rc.L // 2)), int(obs_cfg.get("j", rc.L // 2))
    _, noisy = rc.circuits()
    scale = 1.0 / 2**rc.L
    result = run_shots(
        noisy, spec,
        observable=_sigma_z(i, rc.L),
        initial_state=vec(_sigma_z(j, rc.L).astype(complex)),
        n_shots=shots, seed=rc.seed, delta=rc.delta, omega=rc.omega,
    )
    budget = result.hoeffding_bound
    mean, se = result.mean * scale, result.standard_error * scale
    out_dir.mkdir(parents=True, exist_ok=True)
    write_run_artifact(
        out_dir / "sample.json",
        {
            "command": "sample",
            "version": __version__,
            "seed": rc.seed,
            "config": _echo(rc),
            "observable": {"kind": kind, "i": i, "j": j},
            "mean": mean,
            "standard_error": se,
            "n_shots": shots,
            "gamma": result.gamma,
            "hoeffding_budget": budget,
            "delta": rc.delta,
            "omega": rc.omega,
        },
    )
    print(f"estimate {mean:.6f} +- {se:.6f} from {shots} shots "
          f"(gamma {result.gamma:.4f}, Hoeffding budget {budget})")
    return 0


def cmd_analyze(rc: RunConfig, denoiser_path: str | None, out_dir: Path) -> int:
    spec = _load_denoiser_checked(denoiser_path, rc) if denoiser_path else None
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {"config": _echo(rc), "version": __version__}
    noiseless, noisy = rc.circuits()
    reports = {}
    for label, _m, _p, mat in _dense_triple(rc, spec, noiseless, noisy):
        spec_report = spectrum(mat)
        ent = channel_entropy(mat)
        reports[label] = (spec_report, ent)
        rows = [[ev.real, ev.imag] for ev in spec_report.eigenvalues]
        write_table(out_dir / f"spectrum_{label}.csv", ["re", "im"], rows, meta)
    payload = {
        "command": "analyze",
        "version": __version__,
        "seed": rc.seed,
        "config": _echo(rc),
    }
    for label, (spec_report, ent) in reports.items():
        payload[label] = {
            "spectral_radius": spec_report.spectral_radius,
            "mean_unit_circle_deviation": spec_report.mean_unit_circle_deviation,
            "full_choi_entropy": ent.full_choi_entropy,
            "half_chain_entropy": ent.half_chain_entropy,
            "clipped_weight": ent.clipped_weight,
        }
    if spec is not None:
        cmp = unit_circle_metrics(
            reports["noisy"][0], reports["denoiser"][0], reports["denoised"][0]
        )
        payload["comparison"] = {
            "denoiser_outside_unit_circle": cmp.denoiser_outside_unit_circle,
            "denoised_improves": cmp.denoised_improves,
        }
    write_run_artifact(out_dir / "analyze.json", payload)
    print(f"wrote analysis to {out_dir / 'analyze.json'}")
    return 0


def cmd_sweep(rc: RunConfig, out_dir: Path) -> int:
    if not rc.sweep_p:
        raise ConfigError("sweep needs sweep.p_values")
    if rc.depth < 1:
        raise ConfigError("denoiser.depth must be >= 1 for sweep")
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = ["p", "M", "epsilon", "epsilon_baseline", "czz_noiseless",
               "czz_noisy", "czz_denoised", "gamma"]
    rows = []
    i = rc.L // 2
    for p in rc.sweep_p:
        noise = NoiseModel(p)
        tspec = TrotterSpec(rc.L, rc.t, rc.m_trot, noise, rc.couplings)
        noiseless = build_trotter(tspec, noisy=False)
        noisy = build_trotter(tspec, noisy=True)
        report = optimize(noiseless, noisy, rc.depth, noise, rc.optimizer)
        baseline = epsilon(
            noiseless, DenoiserSpec(rc.L, 0, (), noise), noisy
        )
        denoised = noisy + build_denoiser(report.best_params)
        rows.append([
            p, rc.depth, report.final_epsilon, baseline,
            two_point_zz(noiseless, i, i, rc.L),
            two_point_zz(noisy, i, i, rc.L),
            two_point_zz(denoised, i, i, rc.L),
            report.best_params.gamma,
        ])
    write_table(out_dir / "sweep.csv", columns, rows,
                {"config": _echo(rc), "version": __version__})
    print(f"wrote noise sweep to {out_dir / 'sweep.csv'}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdenoise",
        description="Optimize and evaluate quasiprobability denoisers for "
                    "noisy Trotter supercircuits.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_denoiser, needs_shots in (
        ("optimize", False, False),
        ("evaluate", True, False),
        ("sample", True, True),
        ("analyze", True, False),
        ("sweep", False, False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        if needs_denoiser:
            p.add_argument("--denoiser", default=None, help="denoiser parameter file")
        if needs_shots:
            p.add_argument("--shots", type=int, required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        rc = _load_config(args.config, args.seed)
        out_dir = Path(args.out)
        if args.command == "optimize":
            return cmd_optimize(rc, out_dir)
        if args.command == "evaluate":
            return cmd_evaluate(rc, args.denoiser, out_dir)
        if args.command == "sample":
            return cmd_sample(rc, args.denoiser, args.shots, out_dir)
        if args.command == "analyze":
            return cmd_analyze(rc, args.denoiser, out_dir)
        if args.command == "sweep":
            return cmd_sweep(rc, out_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OptimizationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
