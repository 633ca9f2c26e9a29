"""Batch front door: subcommands, config files, and scripted demos.

Every run is driven by one merged configuration: defaults, then the JSON
config file given with --config, then explicit command-line flags, with the
flags winning.  Unknown config keys are rejected.  All randomness flows from
the single --seed through a splittable seed sequence, so identical config and
seed produce byte-identical artifacts regardless of execution order.

Exit codes: 0 success, 1 invalid configuration or input, 2 numerical failure,
3 demo assertion failed.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import (
    ShadowlabError,
    ArgumentError,
    ConfigError,
    SpecificationError,
    SingularOperatorError,
    ConvergenceError,
    WindowError,
)
from . import operators as ops
from .operators import (
    Dense,
    Diagonal,
    JordanBlock,
    NilpotentPlusRotation,
    ProjectionToLine,
    Unitary,
    materialize,
    power_matrix,
    operator_norm,
)
from .trajectories import (
    Trajectory,
    positive_window,
    bilateral_window,
    measure_defect,
    gen_random,
    gen_adversarial,
    adversarial_operator,
    ADVERSARIAL_KINDS,
    interleave,
    subsample,
    chain_through_zero,
    traj_to_jsonable,
    load_trajectory,
    trajectory_csv,
)
from .spectral import (
    classify,
    eigen_split,
    UNIT_CIRCLE_TOL,
    NO_POSITIVE_SUPER,
)
from .solvers import (
    MODES,
    solve_shadowing_hyperbolic,
    search_super_witness,
    structured_delta,
    construct_witness_structured,
    witness_to_corrector,
    corrector_to_witness,
    residual_profile,
    optimal_lambdas,
    divergence_certificate,
    witness_to_jsonable,
    witness_csv,
    Witness,
)
from .density import (
    HittingQuery,
    hitting_set,
    build_report,
    upper_density_estimate,
    upper_banach_density_estimate,
    shift_set,
    rsc_transfer_check,
    corollary_check,
    hitting_csv,
    density_text,
    report_to_jsonable,
)

__all__ = ["main"]

FORMATS = ("csv", "structured-text")

DEMO_NAMES = (
    "dim-finita-diag",
    "dim-finita-jordan",
    "compact-1",
    "compact-2",
    "super-not-shadow",
    "iso-no-super",
    "weak-vs-super",
    "limit-weak-vs-limit",
    "powers",
    "rsc-equals-sc",
)

# every key a config file may carry; anything else is rejected
CONFIG_KEYS = frozenset(
    [
        "operator",
        "kind",
        "window",
        "windows",
        "eps",
        "delta",
        "seed",
        "out",
        "format",
        "budget",
        "tol",
        "params",
        "mode",
        "trajectory",
        "indices",
        "N",
        "x",
        "y",
        "target",
        "targets",
        "radius",
        "t",
        "n",
        "search_cap",
        "name",
    ]
)

_LADDER_WINDOW = {
    "RotationLinear": "bilateral",
    "JordanImpulse": "bilateral",
    "HarmonicPair": "positive",
    "JordanHarmonic": "positive",
    "IsometryWalk": "bilateral",
    "HarmonicBilateral": "bilateral",
    "CompactProbe": "positive",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; our contract says 1
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# parsing helpers


def _parse_complex(text):
    s = str(text).strip().replace(" ", "")
    s = s.replace("i", "j").replace("J", "j")
    try:
        return complex(s)
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number from {text!r}") from exc


def _parse_vector(val):
    """Vector from config: flat number list, [re, im] pair list, or a
    comma-separated string of complex literals."""
    if isinstance(val, str):
        return np.array([_parse_complex(tok) for tok in val.split(",")], dtype=complex)
    if isinstance(val, (list, tuple)):
        out = []
        for item in val:
            if isinstance(item, (list, tuple)):
                if len(item) != 2:
                    raise ConfigError(f"complex entries are [re, im] pairs, got {item!r}")
                out.append(complex(item[0], item[1]))
            elif isinstance(item, str):
                out.append(_parse_complex(item))
            else:
                out.append(complex(item))
        return np.array(out, dtype=complex)
    raise ConfigError(f"cannot interpret {val!r} as a vector")


def _resolve_operator(val):
    """Operator from a spec object, inline JSON dict, file path, or shorthand.

    Shorthands: swap | diag:z1,z2,... | jordan:beta,size | phases:t1,t2,...
    (unitary diagonal of e^{i t}) | projection-line:dim | npr:m,beta
    (m-step lower shift plus a rotation line).
    """
    if isinstance(val, ops.OperatorSpec):
        return val
    if isinstance(val, dict):
        return ops.from_jsonable(val)
    if not isinstance(val, str):
        raise ConfigError(f"cannot interpret {val!r} as an operator")
    text = val.strip()
    if text == "swap":
        return Dense([[0.0, 1.0], [1.0, 0.0]])
    if ":" in text:
        head, _, tail = text.partition(":")
        head = head.strip().lower()
        parts = [p for p in tail.split(",") if p.strip()]
        if head == "diag":
            return Diagonal([_parse_complex(p) for p in parts])
        if head == "jordan":
            if len(parts) != 2:
                raise ConfigError("jordan shorthand is jordan:beta,size")
            return JordanBlock(_parse_complex(parts[0]), int(parts[1]))
        if head == "phases":
            return Diagonal([np.exp(1j * float(p)) for p in parts])
        if head in ("projection-line", "projectionline"):
            return ProjectionToLine(int(parts[0]))
        if head == "npr":
            if len(parts) != 2:
                raise ConfigError("npr shorthand is npr:m,beta")
            m = int(parts[0])
            S = np.diag(np.ones(m - 1), -1) if m > 1 else np.zeros((1, 1))
            return NilpotentPlusRotation(S, m, _parse_complex(parts[1]))
    path = Path(text)
    if path.exists():
        return ops.load(path)
    raise ConfigError(f"operator {val!r} is neither a known shorthand nor an existing file")


def _parse_window(val):
    if val is None:
        raise ConfigError("a window is required (positive:N or bilateral:N)")
    if isinstance(val, int):
        return positive_window(val)
    text = str(val).strip().lower()
    if ":" in text:
        head, _, tail = text.partition(":")
        try:
            N = int(tail)
        except ValueError as exc:
            raise ConfigError(f"window size in {val!r} is not an integer") from exc
        if head == "positive":
            return positive_window(N)
        if head == "bilateral":
            return bilateral_window(N)
        raise ConfigError(f"window kind {head!r} is not positive|bilateral")
    try:
        return positive_window(int(text))
    except ValueError as exc:
        raise ConfigError(f"cannot parse window {val!r}") from exc


def _child_seeds(seed, n):
    ss = np.random.SeedSequence(int(seed))
    return [int(s) for s in ss.generate_state(n, dtype=np.uint64)]


def _seeded_vector(seed, dim, scale=1.0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return scale * v / math.sqrt(dim)


# ---------------------------------------------------------------------------
# configuration


def _add_common_flags(p):
    p.add_argument("--config", help="JSON config file; flags override its entries")
    p.add_argument("--operator", help="operator file or shorthand (see classify --help)")
    p.add_argument("--kind", help="generator kind, e.g. rotation-linear")
    p.add_argument("--window", help="positive:N or bilateral:N (bare integer = positive)")
    p.add_argument("--eps", type=float, help="tracking accuracy epsilon")
    p.add_argument("--delta", type=float, help="defect budget delta")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="write the artifact to this path instead of stdout")
    p.add_argument("--format", choices=FORMATS, help="artifact format (default structured-text)")
    p.add_argument("--budget", type=int, help="search restarts / case count, subcommand-specific")
    p.add_argument("--tol", type=float, help="tolerance knob, subcommand-specific")


def _build_parser():
    p = _Parser(
        prog="shadowlab",
        description="Desk-scale laboratory for tracking properties of linear dynamics.",
    )
    sub = p.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser(
        "classify",
        help="decide the tracking class of an operator",
        description="Classify an operator by its spectral picture. Operator shorthands: "
        "swap | diag:z1,z2,... | jordan:beta,size | phases:t1,t2,... | "
        "projection-line:dim | npr:m,beta. CSV columns: field,value.",
    )
    _add_common_flags(sp)

    sp = sub.add_parser(
        "pseudo",
        help="generate a pseudotrajectory (random or adversarial)",
        description="Write a trajectory artifact. --kind random needs --operator and "
        f"--delta; adversarial kinds are {', '.join(ADVERSARIAL_KINDS)} with their "
        "parameters under the config key 'params'. CSV columns: n,re0,im0,...",
    )
    _add_common_flags(sp)

    sp = sub.add_parser(
        "shadow",
        help="solve the exact-orbit tracking problem for a hyperbolic operator",
        description="Run the hyperbolic corrector solver on a trajectory (config key "
        "'trajectory' = file path, or generated via --delta/--window/--seed). "
        "CSV columns: n,lambda_re,lambda_im,residual.",
    )
    _add_common_flags(sp)

    sp = sub.add_parser(
        "supershadow",
        help="find a rescaled-orbit witness (search or structured construction)",
        description="Structured construction for nilpotent-plus-rotation and "
        "projection-to-line operators (needs --eps); randomized search otherwise "
        "(--budget restarts; config key 'mode' in "
        + "/".join(MODES[1:])
        + "). CSV columns: n,lambda_re,lambda_im,residual.",
    )
    _add_common_flags(sp)

    sp = sub.add_parser(
        "certify",
        help="certified lower bounds on the best sup-residual over a window ladder",
        description="Generate a ladder of adversarial trajectories (config key "
        "'windows', default [25, 50, 100, 200]) and certify divergence lower "
        "bounds per window. --tol is the relative gap target. CSV columns: "
        "window_kind,window_N,bound,upper,status,boxes,h_final.",
    )
    _add_common_flags(sp)

    sp = sub.add_parser(
        "density",
        help="density estimates for an explicit index set",
        description="Config keys: indices (list), N; optional estimator knobs under "
        "params: N_min, window_max, window_min. CSV columns: Nprime,best_m,count,value.",
    )
    _add_common_flags(sp)

    sp = sub.add_parser(
        "hitting",
        help="projective hitting set of an orbit against a ball",
        description="Config keys: x (start vector), y (ball center), radius (or "
        "--eps); horizon from --window. CSV columns: n,hit,dist.",
    )
    _add_common_flags(sp)

    sp = sub.add_parser(
        "corollary",
        help="per-target hitting-frequency test",
        description="Config keys: x, targets = [[center, radius], ...], t (threshold), "
        "mode (ud|ubd); horizon from --window. CSV columns: "
        "target,mode,t,hits,value,passes,witness_m,witness_N.",
    )
    _add_common_flags(sp)

    sp = sub.add_parser(
        "chain",
        help="finite chain through zero between two vectors under an isometry",
        description="Config keys: x, y (endpoint vectors); --delta is the link "
        "budget. CSV columns: n,re0,im0,...",
    )
    _add_common_flags(sp)

    sp = sub.add_parser(
        "demo",
        help="scripted phenomenon reproductions with pass/fail summaries",
        description="Each demo wires one construction end to end and checks it "
        "against the package acceptance bound; --budget scales case counts, "
        "never tolerances. CSV columns: check,passed,detail.",
    )
    sp.add_argument("name", choices=DEMO_NAMES, help="which phenomenon to reproduce")
    _add_common_flags(sp)

    return p


def _merge_config(args):
    cfg = {key: None for key in CONFIG_KEYS}
    cfg["params"] = {}
    cfg["seed"] = 0
    cfg["format"] = "structured-text"

    path = getattr(args, "config", None)
    if path:
        try:
            loaded = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} does not exist") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in loaded.items():
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = value

    for key in (
        "operator",
        "kind",
        "window",
        "eps",
        "delta",
        "seed",
        "out",
        "format",
        "budget",
        "tol",
    ):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "name", None) is not None:
        cfg["name"] = args.name
    if cfg["format"] not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {cfg['format']!r}")
    if not isinstance(cfg["params"], dict):
        raise ConfigError("config key 'params' must be an object")
    cfg["params"] = dict(cfg["params"])
    return cfg


def _require(cfg, key, why):
    if cfg.get(key) is None:
        raise ConfigError(f"missing required field {key!r}: {why}")
    return cfg[key]


def _emit(cfg, text):
    out = cfg.get("out")
    if not text.endswith("\n"):
        text += "\n"
    if out:
        Path(out).write_text(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _kv_csv(rows):
    lines = ["field,value"]
    lines += [f"{k},{v}" for k, v in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_classify(cfg):
    spec = _resolve_operator(_require(cfg, "operator", "an operator to classify"))
    tol = cfg["tol"] if cfg["tol"] is not None else UNIT_CIRCLE_TOL
    verdict = classify(spec, unit_circle_tol=tol)
    if cfg["format"] == "csv":
        rows = [("tag", verdict.tag), ("limit_flag", verdict.limit_flag),
                ("unit_circle_tol", repr(tol))]
        rows += sorted((f"certificate.{k}", v) for k, v in verdict.certificate.items()
                       if not isinstance(v, (list, dict)))
        _emit(cfg, _kv_csv(rows))
    else:
        _emit(cfg, json.dumps(verdict.to_jsonable(), indent=2, sort_keys=True))
    return 0


def _generator_params(cfg):
    params = dict(cfg["params"])
    if cfg["delta"] is not None:
        params["delta"] = cfg["delta"]
    for key in ("T", "S"):
        if isinstance(params.get(key), str):
            params[key] = _resolve_operator(params[key])
    for key in ("p", "x", "y", "x0"):
        if isinstance(params.get(key), (list, tuple, str)):
            params[key] = _parse_vector(params[key])
    for key in ("beta", "nu"):
        value = params.get(key)
        if isinstance(value, str):
            params[key] = _parse_complex(value)
        elif isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ConfigError(f"param {key!r} must be a number or an [re, im] pair")
            params[key] = complex(value[0], value[1])
    return params


def _make_trajectory(cfg, spec=None):
    """Trajectory from a file, an adversarial generator, or orbit noise."""
    if cfg["trajectory"]:
        return load_trajectory(cfg["trajectory"])
    kind = cfg["kind"] or "random"
    window = _parse_window(cfg["window"])
    if kind.replace("-", "").replace("_", "").lower() == "random":
        if spec is None:
            spec = _resolve_operator(_require(cfg, "operator", "random trajectories follow an operator"))
        delta = _require(cfg, "delta", "the defect budget for random generation")
        params = _generator_params(cfg)
        x0 = params.get("x0")
        if x0 is None:
            x0 = _seeded_vector(_child_seeds(cfg["seed"], 2)[0], spec.dim)
        return gen_random(spec, x0, float(delta), window, seed=_child_seeds(cfg["seed"], 2)[1])
    return gen_adversarial(kind, _generator_params(cfg), window)


def _cmd_pseudo(cfg):
    kind = _require(cfg, "kind", "which generator to run (or 'random')")
    spec = _resolve_operator(cfg["operator"]) if cfg["operator"] else None
    traj = _make_trajectory(cfg, spec=spec)
    if cfg["format"] == "csv":
        _emit(cfg, trajectory_csv(traj))
    else:
        _emit(cfg, json.dumps(traj_to_jsonable(traj), indent=2))
    if cfg["out"]:
        op = spec if spec is not None else _operator_for(cfg, traj)
        report = measure_defect(traj, op) if op is not None else None
        line = f"{traj.origin_note or kind}: {len(traj)} points on {traj.window.kind}:{traj.window.N}"
        if report is not None:
            line += f", defect {report.max_defect:.6g} (claimed {traj.delta_claimed:.6g})"
        print(line)
    return 0


def _operator_for(cfg, traj):
    if cfg["operator"]:
        return _resolve_operator(cfg["operator"])
    if cfg["kind"] and cfg["kind"].lower() != "random":
        try:
            return adversarial_operator(cfg["kind"], _generator_params(cfg))
        except ShadowlabError:
            return None
    return None


def _witness_artifact(cfg, witness):
    if cfg["format"] == "csv":
        _emit(cfg, witness_csv(witness))
    else:
        _emit(cfg, json.dumps(witness_to_jsonable(witness), indent=2))
    if cfg["out"]:
        print(
            f"{witness.mode} witness: sup residual {witness.sup_residual:.6g} "
            f"on {witness.window.kind}:{witness.window.N}"
        )


def _cmd_shadow(cfg):
    spec = _resolve_operator(_require(cfg, "operator", "the operator to shadow against"))
    traj = _make_trajectory(cfg, spec=spec)
    split = eigen_split(spec)
    witness = solve_shadowing_hyperbolic(split, spec, traj)
    _witness_artifact(cfg, witness)
    return 0


def _cmd_supershadow(cfg):
    spec = _resolve_operator(cfg["operator"]) if cfg["operator"] else None
    traj = _make_trajectory(cfg, spec=spec)
    if spec is None:
        spec = _operator_for(cfg, traj)
        if spec is None:
            raise ConfigError("supershadow needs --operator (or a generator kind that implies one)")
    if isinstance(spec, (NilpotentPlusRotation, ProjectionToLine)):
        eps = _require(cfg, "eps", "structured constructions take a target accuracy")
        limit_mode = cfg["mode"] == "limit-super"
        witness = construct_witness_structured(spec, traj, float(eps), limit_mode=limit_mode)
    else:
        mode = cfg["mode"] or "super"
        if mode not in MODES[1:]:
            raise ConfigError(f"mode must be one of {MODES[1:]}, got {mode!r}")
        budget = cfg["budget"] if cfg["budget"] is not None else 200
        witness = search_super_witness(traj, spec, mode=mode, budget=int(budget),
                                       seed=cfg["seed"])
    _witness_artifact(cfg, witness)
    return 0


def _ladder_trajs(cfg, kind, params, windows):
    wk = _LADDER_WINDOW.get(kind)
    if wk is None:
        raise ConfigError(f"{kind} does not define a window ladder")
    make = bilateral_window if wk == "bilateral" else positive_window
    return [gen_adversarial(kind, params, make(int(N))) for N in windows]


def _cmd_certify(cfg):
    kind = _require(cfg, "kind", "which adversarial family to certify against")
    from .trajectories import _resolve_kind

    kind = _resolve_kind(kind)
    params = _generator_params(cfg)
    windows = cfg["windows"] or [25, 50, 100, 200]
    trajs = _ladder_trajs(cfg, kind, params, windows)
    spec = adversarial_operator(kind, params)
    rel_tol = cfg["tol"] if cfg["tol"] is not None else 0.05
    budget = cfg["budget"] if cfg["budget"] is not None else 64
    max_boxes = int(cfg["params"].get("max_boxes", 60000))
    rungs = divergence_certificate(
        trajs, spec, rel_tol=float(rel_tol), max_boxes=max_boxes,
        budget=int(budget), seed=cfg["seed"],
    )
    if cfg["format"] == "csv":
        lines = ["window_kind,window_N,bound,upper,status,boxes,h_final"]
        for r in rungs:
            lines.append(
                f"{r.window.kind},{r.window.N},{repr(r.bound)},{repr(r.upper)},"
                f"{r.status},{r.boxes},{repr(r.h_final)}"
            )
        _emit(cfg, "\n".join(lines) + "\n")
    else:
        lines = [f"divergence ladder for {kind} ({len(rungs)} windows)"]
        for r in rungs:
            lines.append(
                f"  {r.window.kind}:{r.window.N:<5d} bound {r.bound:.6g}  "
                f"upper {r.upper:.6g}  [{r.status}, {r.boxes} boxes]"
            )
        _emit(cfg, "\n".join(lines) + "\n")
    return 0


def _estimator_knobs(cfg):
    params = cfg["params"]
    return (
        params.get("N_min"),
        params.get("window_max"),
        params.get("window_min"),
    )


def _cmd_density(cfg):
    indices = _require(cfg, "indices", "the index set to analyze")
    N = _require(cfg, "N", "the window end")
    n_min, w_max, w_min = _estimator_knobs(cfg)
    report = build_report(
        tuple(int(k) for k in indices), int(N),
        ud_N_min=n_min, ubd_window_max=w_max, ubd_window_min=w_min,
        origin_note="density",
    )
    if cfg["format"] == "csv":
        lines = ["Nprime,best_m,count,value"]
        lines += [f"{Np},{m},{cnt},{repr(v)}" for (Np, m, cnt, v) in report.per_N_profile]
        _emit(cfg, "\n".join(lines) + "\n")
    else:
        _emit(cfg, density_text(report))
    return 0


def _cmd_hitting(cfg):
    spec = _resolve_operator(_require(cfg, "operator", "the orbit's operator"))
    x = _parse_vector(_require(cfg, "x", "the orbit start vector"))
    y = _parse_vector(_require(cfg, "y", "the ball center"))
    radius = cfg["radius"] if cfg["radius"] is not None else cfg["eps"]
    if radius is None:
        raise ConfigError("missing required field 'radius' (or --eps): the ball radius")
    window = _parse_window(cfg["window"])
    if window.kind != "positive":
        raise ConfigError("hitting sets live on positive windows")
    n_min, w_max, w_min = _estimator_knobs(cfg)
    query = HittingQuery(x=x, spec=spec, y=y, r=float(radius), N=window.N)
    report = hitting_set(query, ud_N_min=n_min, ubd_window_max=w_max,
                         ubd_window_min=w_min)
    if cfg["format"] == "csv":
        _emit(cfg, hitting_csv(report))
    else:
        head = density_text(report)
        idx = ",".join(str(i) for i in report.indices[:40])
        more = " ..." if report.count > 40 else ""
        _emit(cfg, head + f"indices: {idx}{more}\n")
    return 0


def _cmd_corollary(cfg):
    spec = _resolve_operator(_require(cfg, "operator", "the orbit's operator"))
    x = _parse_vector(_require(cfg, "x", "the orbit start vector"))
    raw_targets = _require(cfg, "targets", "a list of [center, radius] pairs")
    targets = []
    for item in raw_targets:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ConfigError("each target is a [center, radius] pair")
        targets.append((_parse_vector(item[0]), float(item[1])))
    t = float(_require(cfg, "t", "the frequency threshold in (0, 1)"))
    mode = cfg["mode"] or "ud"
    window = _parse_window(cfg["window"])
    if window.kind != "positive":
        raise ConfigError("hitting frequencies live on positive windows")
    n_min, w_max, w_min = _estimator_knobs(cfg)
    rows = corollary_check(
        x, spec, targets, t, window.N, mode,
        ud_N_min=n_min, ubd_window_max=w_max, ubd_window_min=w_min,
    )
    if cfg["format"] == "csv":
        lines = ["target,mode,t,hits,value,passes,witness_m,witness_N"]
        for row in rows:
            lines.append(
                f"{row['target']},{row['mode']},{repr(row['t'])},{row['hits']},"
                f"{repr(row['value'])},{int(row['passes'])},"
                f"{row.get('witness_m', '')},{row['witness_N']}"
            )
        _emit(cfg, "\n".join(lines) + "\n")
    else:
        lines = []
        for row in rows:
            where = (
                f"m = {row['witness_m']}, N' = {row['witness_N']}"
                if "witness_m" in row
                else f"N' = {row['witness_N']}"
            )
            verdict = "pass" if row["passes"] else "fail"
            lines.append(
                f"target {row['target']}: {verdict} ({row['mode']} value "
                f"{row['value']:.6g} vs t = {row['t']:g}, {where}, {row['hits']} hits)"
            )
        _emit(cfg, "\n".join(lines) + "\n")
    return 0


def _cmd_chain(cfg):
    spec = _resolve_operator(_require(cfg, "operator", "the isometry to chain under"))
    x = _parse_vector(_require(cfg, "x", "the chain start"))
    y = _parse_vector(_require(cfg, "y", "the chain end"))
    delta = float(_require(cfg, "delta", "the link budget"))
    chain = chain_through_zero(spec, x, y, delta)
    pts = np.asarray(chain.points)
    A = materialize(spec)
    links = (
        np.linalg.norm(pts[1:] - pts[:-1] @ A.T, axis=1) if len(pts) > 1 else np.zeros(0)
    )
    if cfg["format"] == "csv":
        d = pts.shape[1]
        header = "n," + ",".join(f"re{i},im{i}" for i in range(d))
        lines = [header]
        for n, point in enumerate(pts):
            cells = []
            for z in point:
                cells += [repr(float(z.real)), repr(float(z.imag))]
            lines.append(f"{n}," + ",".join(cells))
        _emit(cfg, "\n".join(lines) + "\n")
    else:
        lines = [
            f"chain of {len(pts)} points, delta = {delta:g}",
            f"max link defect = {links.max() if links.size else 0.0:.6g} (strictly < delta)",
            f"endpoints exact: start {np.allclose(pts[0], x)}, end {np.allclose(pts[-1], y)}",
        ]
        _emit(cfg, "\n".join(lines) + "\n")
    if cfg["out"]:
        print(f"chain: {len(pts)} points, max link defect {links.max() if links.size else 0.0:.6g}")
    return 0


# ---------------------------------------------------------------------------
# demos: each wires one construction end to end and checks the package
# acceptance bound; --budget trims case counts, never bounds.


def _pf(ok, text):
    return ("PASS " if ok else "FAIL ") + text


def _demo_super_not_shadow(cfg):
    eps = float(cfg["eps"]) if cfg["eps"] is not None else 0.1
    dim = int(cfg["params"].get("dim", 2))
    spec = ProjectionToLine(dim)
    delta = structured_delta(spec, eps)
    s_x0, s_traj = _child_seeds(cfg["seed"], 2)
    x0 = _seeded_vector(s_x0, dim)
    traj = gen_random(spec, x0, delta, positive_window(200), seed=s_traj)
    witness = construct_witness_structured(spec, traj, eps)
    ok = witness.sup_residual < eps
    lines = [
        f"projection-to-line model, dim {dim}: delta(eps) = {delta:.6g} for eps = {eps:g}",
        f"input defect {measure_defect(traj, spec).max_defect:.6g}, "
        f"witness sup residual {witness.sup_residual:.6g}",
        _pf(ok, f"sup residual < eps: {witness.sup_residual:.4g} < {eps:g}"),
    ]
    return ok, lines


def _demo_compact_1(cfg):
    cases = int(cfg["budget"]) if cfg["budget"] is not None else 100
    seeds = _child_seeds(cfg["seed"], cases)
    worst = (-math.inf, None)
    failures = 0
    for i, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        m = int(rng.integers(1, 6))
        beta = np.exp(1j * rng.uniform(0, 2 * np.pi))
        eps = float(np.exp(rng.uniform(np.log(0.01), np.log(1.0))))
        S = np.zeros((m, m), dtype=complex)
        if m > 1:
            S[np.tril_indices(m, -1)] = rng.normal(size=m * (m - 1) // 2) + 1j * rng.normal(
                size=m * (m - 1) // 2
            )
        spec = NilpotentPlusRotation(S, m, beta)
        delta = structured_delta(spec, eps)
        x0 = _seeded_vector(s ^ 0xA5A5, m + 1)
        traj = gen_random(spec, x0, delta, positive_window(200), seed=s)
        witness = construct_witness_structured(spec, traj, eps)
        margin = witness.sup_residual / eps
        if margin > worst[0]:
            worst = (margin, i)
        if not witness.sup_residual < eps:
            failures += 1
    ok = failures == 0
    lines = [
        f"{cases} randomized nilpotent-plus-rotation cases (m <= 5, eps in [0.01, 1])",
        f"worst sup-residual/eps ratio = {worst[0]:.4f} (case {worst[1]})",
        _pf(ok, f"all witnesses meet sup residual < eps ({cases - failures}/{cases})"),
    ]
    return ok, lines


def _harmonic_drift_input(spec, p, N):
    """(S^n p, H_n beta^n) on [0, N]: drift defect exactly 1/(n+1) at step n."""
    S = np.asarray(spec.nilpotent, dtype=complex)
    beta = spec.rotation
    Xp = np.empty((N + 1, S.shape[0]), dtype=complex)
    v = np.asarray(p, dtype=complex)
    for n in range(N + 1):
        Xp[n] = v
        v = S @ v
    H = np.zeros(N + 1)
    if N:
        H[1:] = np.cumsum(1.0 / np.arange(1, N + 1))
    y = H * beta ** np.arange(N + 1, dtype=np.float64)
    pts = np.concatenate([Xp, y[:, None]], axis=1)
    return Trajectory(positive_window(N), pts, 1.0, origin_note="HarmonicDrift")


def _demo_compact_2(cfg):
    m = int(cfg["params"].get("m", 3))
    beta = complex(cfg["params"].get("beta", np.exp(1j * np.pi / 3)))
    N = 400
    S = np.diag(np.ones(m - 1), -1).astype(complex) if m > 1 else np.zeros((1, 1), dtype=complex)
    spec = NilpotentPlusRotation(S, m, beta)
    p = _seeded_vector(_child_seeds(cfg["seed"], 1)[0], m)
    traj = _harmonic_drift_input(spec, p, N)
    defect = measure_defect(traj, spec)
    witness = construct_witness_structured(spec, traj, eps=1.0, limit_mode=True)
    prof = witness.residual_profile
    q = N // 4
    first = float(np.max(prof[: q + 1]))
    last = float(np.max(prof[N - q :]))
    at_end = float(prof[-1])
    ok = last < 0.1 * first and at_end < 1e-2
    lines = [
        f"nilpotent(m={m}) + rotation, harmonic drift on [0, {N}]; "
        f"input defect starts at {defect.max_defect:.3g} and decays",
        f"residual tails: first quarter {first:.6g}, last quarter {last:.6g}, "
        f"endpoint {at_end:.3g}",
        f"lambda growth constant C = {witness.meta['lambda_growth_C']:.4g} (|lambda_n| <= C n)",
        _pf(last < 0.1 * first, f"last-quarter tail < 0.1 x first-quarter tail"),
        _pf(at_end < 1e-2, f"residual at the window end < 1e-2"),
    ]
    return ok, lines


def _ladder_demo(cfg, kind, params):
    windows = cfg["windows"] or [25, 50, 100, 200]
    trajs = _ladder_trajs(cfg, kind, params, windows)
    spec = adversarial_operator(kind, params)
    rel_tol = cfg["tol"] if cfg["tol"] is not None else 0.05
    budget = cfg["budget"] if cfg["budget"] is not None else 64
    max_boxes = int(cfg["params"].get("max_boxes", 60000))
    rungs = divergence_certificate(
        trajs, spec, rel_tol=float(rel_tol), max_boxes=max_boxes,
        budget=int(budget), seed=cfg["seed"],
    )
    certified = all(r.status == "certified" for r in rungs)
    bounds = [r.bound for r in rungs]
    increasing = all(b > a for a, b in zip(bounds, bounds[1:]))
    doubled = bounds[-1] >= 2.0 * bounds[0]
    ok = certified and increasing and doubled
    lines = [f"{kind} ladder over windows {list(windows)}"]
    for r in rungs:
        lines.append(
            f"  window {r.window.N:<4d} certified bound {r.bound:.6g} "
            f"(upper {r.upper:.6g}, {r.boxes} boxes, {r.status})"
        )
    lines += [
        _pf(certified, "every rung carries a certificate"),
        _pf(increasing, "bounds strictly increase along the ladder"),
        _pf(
            doubled,
            f"bound({windows[-1]}) >= 2 x bound({windows[0]}): "
            f"{bounds[-1]:.4g} vs 2 x {bounds[0]:.4g}",
        ),
    ]
    return ok, lines


def _demo_dim_finita_diag(cfg):
    params = {
        "beta": complex(cfg["params"].get("beta", np.exp(1j * np.pi / 4))),
        "delta": float(cfg["delta"]) if cfg["delta"] is not None else 1e-3,
    }
    return _ladder_demo(cfg, "RotationLinear", params)


def _demo_dim_finita_jordan(cfg):
    params = {
        "beta": complex(cfg["params"].get("beta", np.exp(1j * np.pi / 4))),
        "k": int(cfg["params"].get("k", 2)),
        "delta": float(cfg["delta"]) if cfg["delta"] is not None else 1e-3,
    }
    return _ladder_demo(cfg, "JordanImpulse", params)


def _demo_iso_no_super(cfg):
    cases = int(cfg["budget"]) if cfg["budget"] is not None else 50
    seeds = _child_seeds(cfg["seed"], cases)
    bad = []
    for i, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        d = int(rng.integers(2, 5))
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        Q, R = np.linalg.qr(G)
        Q = Q * (np.diag(R) / np.abs(np.diag(R)))  # Haar correction
        verdict = classify(Unitary(Q))
        if verdict.tag != NO_POSITIVE_SUPER:
            bad.append((i, verdict.tag))
    ok = not bad
    lines = [
        f"{cases} Haar-random unitaries, dims 2..4",
        _pf(ok, f"all classified {NO_POSITIVE_SUPER} "
                f"({cases - len(bad)}/{cases}, tol {UNIT_CIRCLE_TOL:g})"),
    ]
    if bad:
        lines.append(f"  misclassified: {bad[:5]}")
    return ok, lines


def _round_trip_case(spec, traj, rng, weak):
    d = spec.dim
    q = rng.normal(size=d) + 1j * rng.normal(size=d)
    lam = rng.normal(size=len(traj)) + 1j * rng.normal(size=len(traj))
    lam[np.abs(lam) < 1e-3] = 1.0
    p = rng.normal(size=d) + 1j * rng.normal(size=d) if weak else None
    prof = residual_profile(traj, spec, q, lam, p)
    witness = Witness(
        mode="weak-super" if weak else "super",
        window=traj.window,
        q=q,
        lambdas=lam,
        sup_residual=float(np.max(prof)),
        residual_profile=prof,
        p=p,
    )
    system = witness_to_corrector(traj, spec, witness)
    rec = system.recurrence_defect(traj, spec)
    back = corrector_to_witness(system, traj, spec)
    prof_err = float(np.max(np.abs(back.residual_profile - witness.residual_profile)))
    return rec, prof_err


def _demo_weak_vs_super(cfg):
    cases = int(cfg["budget"]) if cfg["budget"] is not None else 200
    seeds = _child_seeds(cfg["seed"], cases)
    worst_rec = worst_prof = 0.0
    for i, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        d = int(rng.integers(2, 5))
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        Q, _ = np.linalg.qr(G)
        spec = Dense(Q * rng.uniform(0.9, 1.02))  # near-isometric, powers stay tame
        window = bilateral_window(25) if i % 2 else positive_window(50)
        x0 = _seeded_vector(s ^ 0x5A5A, d)
        traj = gen_random(spec, x0, 1e-2, window, seed=s)
        rec, prof_err = _round_trip_case(spec, traj, rng, weak=bool(i % 3))
        worst_rec = max(worst_rec, rec)
        worst_prof = max(worst_prof, prof_err)
    ok = worst_rec <= 1e-9 and worst_prof <= 1e-9
    lines = [
        f"{cases} witness <-> corrector round trips (mixed windows and modes)",
        f"worst recurrence defect {worst_rec:.3g}, worst profile deviation {worst_prof:.3g}",
        _pf(worst_rec <= 1e-9, "recurrence holds within 1e-9 index-wise"),
        _pf(worst_prof <= 1e-9, "residual profiles reproduced within 1e-9"),
    ]
    return ok, lines


def _demo_limit_weak_vs_limit(cfg):
    cases = int(cfg["budget"]) if cfg["budget"] is not None else 100
    seeds = _child_seeds(cfg["seed"], cases)
    worst_rec = worst_prof = 0.0
    decay_ok = True
    for i, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        d = int(rng.integers(2, 4))
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        Q, _ = np.linalg.qr(G)
        spec = Dense(Q)
        A = spec.matrix()
        N = 80
        # orbit plus per-step noise shrinking like 1/(n+1)^2: a limit-type input
        pts = np.empty((N + 1, d), dtype=complex)
        pts[0] = _seeded_vector(s ^ 0x3C3C, d)
        for n in range(N):
            noise = rng.normal(size=d) + 1j * rng.normal(size=d)
            noise *= 1e-2 / ((n + 1.0) ** 2 * np.linalg.norm(noise))
            pts[n + 1] = A @ pts[n] + noise
        traj = Trajectory(positive_window(N), pts, 1e-2, origin_note="limit-drift")
        rec, prof_err = _round_trip_case(spec, traj, rng, weak=bool(i % 2))
        worst_rec = max(worst_rec, rec)
        worst_prof = max(worst_prof, prof_err)
        defect = measure_defect(traj, spec)
        if not defect.tail_sup(len(traj) // 2) < defect.max_defect / 10:
            decay_ok = False
    ok = worst_rec <= 1e-9 and worst_prof <= 1e-9
    lines = [
        f"{cases} round trips on decaying-defect inputs (defect ~ 1/(n+1)^2)",
        f"worst recurrence defect {worst_rec:.3g}, worst profile deviation {worst_prof:.3g}",
        f"input defect tails decay on every case: {decay_ok}",
        _pf(worst_rec <= 1e-9, "recurrence holds within 1e-9 index-wise"),
        _pf(worst_prof <= 1e-9, "residual profiles reproduced within 1e-9"),
    ]
    return ok, lines


def _demo_powers(cfg):
    cases = int(cfg["budget"]) if cfg["budget"] is not None else 500
    seeds = _child_seeds(cfg["seed"], cases)
    delta = float(cfg["delta"]) if cfg["delta"] is not None else 1e-3
    inter_fail = sub_fail = 0
    for s in seeds:
        rng = np.random.default_rng(s)
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, 5))
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        G /= max(1.0, np.linalg.norm(G, 2) / 1.2)  # keep ||A|| <= 1.2
        spec = Dense(G)
        spec_k = Dense(power_matrix(spec, k))
        x0 = _seeded_vector(s ^ 0x7777, d)
        traj_k = gen_random(spec_k, x0, delta, positive_window(12), seed=s)
        woven = interleave(traj_k, spec, k)
        if not measure_defect(woven, spec).max_defect <= delta:
            inter_fail += 1
        traj_a = gen_random(spec, x0, delta, positive_window(12 * k), seed=s ^ 1)
        thin = subsample(traj_a, spec, k)
        claim = sum(operator_norm(spec) ** j for j in range(k)) * delta
        if abs(thin.delta_claimed - claim) > 1e-12 * max(1.0, claim):
            sub_fail += 1
        elif not measure_defect(thin, spec_k).max_defect <= thin.delta_claimed:
            sub_fail += 1
    ok = inter_fail == 0 and sub_fail == 0
    lines = [
        f"{cases} random operator/power pairs, k <= 4, delta = {delta:g}",
        _pf(inter_fail == 0,
            f"interleaved trajectories keep measured defect <= delta ({cases - inter_fail}/{cases})"),
        _pf(sub_fail == 0,
            f"subsampled claims equal sum_j ||A||^j delta and hold ({cases - sub_fail}/{cases})"),
    ]
    return ok, lines


def _grid_line_distance(y, v, step=1e-3, R_cap=1e6):
    """Exact minimum of ||y - lambda v|| over the lambda grid step*(Z + iZ)
    clipped to [-R, R]^2; the quadratic is separable in Re/Im, so the grid
    argmin is the snapped-and-clamped vertex."""
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        return float(np.linalg.norm(y))
    R = min(2.0 * float(np.linalg.norm(y)) / nv, R_cap)
    c = complex(np.vdot(v, y) / (nv * nv))
    a = min(max(round(c.real / step) * step, -R), R)
    b = min(max(round(c.imag / step) * step, -R), R)
    return float(np.linalg.norm(y - complex(a, b) * np.asarray(v)))


def _demo_rsc_equals_sc(cfg):
    lines = []
    oks = []

    mult3 = tuple(range(0, 30, 3))
    v3 = upper_banach_density_estimate(mult3, 29, 29, 29)
    oks.append(v3 == 1.0 / 3.0)
    lines.append(_pf(oks[-1], f"multiples of 3 on [0,29], single 30-window: {v3!r} == 1/3"))

    evens = tuple(range(0, 10001, 2))
    vud = upper_density_estimate(evens, 10**4, 100)
    oks.append(0.5 <= vud <= 0.505)
    lines.append(_pf(oks[-1], f"evens prefix-density estimate {vud:.6f} in [0.5, 0.505]"))

    swap = Dense([[0.0, 1.0], [1.0, 0.0]])
    e1 = np.array([1.0, 0.0]); e2 = np.array([0.0, 1.0])
    res = rsc_transfer_check(e1, e2, swap, e1, 0.1, 10, 5)
    oks.append(res["verified"] and res["k"] == 1)
    lines.append(_pf(oks[-1], f"swap-operator transfer shift k = {res['k']} (verified {res['verified']})"))

    queries = int(cfg["budget"]) if cfg["budget"] is not None else 100
    seeds = _child_seeds(cfg["seed"], queries)
    mismatches = 0
    compared = 0
    for s in seeds:
        rng = np.random.default_rng(s)
        d = int(rng.integers(2, 4))
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        G /= np.linalg.norm(G, 2) * rng.uniform(0.8, 1.25)
        spec = Dense(G)
        x = rng.normal(size=d) + 1j * rng.normal(size=d)
        y = rng.normal(size=d) + 1j * rng.normal(size=d)
        r = rng.uniform(0.2, 1.2)
        query = HittingQuery(x=x, spec=spec, y=y, r=r, N=10)
        report = hitting_set(query)
        hits = set(report.indices)
        v = x.copy()
        A = spec.matrix()
        for n in range(11):
            dist = _grid_line_distance(y, v)
            if abs(dist - r) > max(1e-6, 2e-3 * np.linalg.norm(y)):
                compared += 1
                if (dist < r) != (n in hits):
                    mismatches += 1
            v = A @ v
    oks.append(mismatches == 0)
    lines.append(_pf(
        oks[-1],
        f"hitting set vs lambda-grid oracle: {compared} off-boundary comparisons, "
        f"{mismatches} mismatches",
    ))
    return all(oks), lines


_DEMOS = {
    "super-not-shadow": _demo_super_not_shadow,
    "compact-1": _demo_compact_1,
    "compact-2": _demo_compact_2,
    "dim-finita-diag": _demo_dim_finita_diag,
    "dim-finita-jordan": _demo_dim_finita_jordan,
    "iso-no-super": _demo_iso_no_super,
    "weak-vs-super": _demo_weak_vs_super,
    "limit-weak-vs-limit": _demo_limit_weak_vs_limit,
    "powers": _demo_powers,
    "rsc-equals-sc": _demo_rsc_equals_sc,
}


def _cmd_demo(cfg):
    name = _require(cfg, "name", "which demo to run")
    ok, lines = _DEMOS[name](cfg)
    summary = ("PASS" if ok else "FAIL") + f" demo {name}"
    if cfg["format"] == "csv":
        rows = ["check,passed,detail"]
        for line in lines:
            if line.startswith(("PASS ", "FAIL ")):
                rows.append(f"check,{int(line.startswith('PASS'))},\"{line[5:]}\"")
            else:
                rows.append(f"info,,\"{line}\"")
        rows.append(f"demo,{int(ok)},\"{name}\"")
        _emit(cfg, "\n".join(rows) + "\n")
    else:
        _emit(cfg, "\n".join(lines + [summary]) + "\n")
    if cfg["out"]:
        print(summary)
    return 0 if ok else 3


_DISPATCH = {
    "classify": _cmd_classify,
    "pseudo": _cmd_pseudo,
    "shadow": _cmd_shadow,
    "supershadow": _cmd_supershadow,
    "certify": _cmd_certify,
    "density": _cmd_density,
    "hitting": _cmd_hitting,
    "corollary": _cmd_corollary,
    "chain": _cmd_chain,
    "demo": _cmd_demo,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _merge_config(args)
        return _DISPATCH[args.subcommand](cfg)
    except (ConfigError, ArgumentError, SpecificationError, WindowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, SingularOperatorError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
