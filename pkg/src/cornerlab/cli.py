"""Command-line surface: ``cornerlab <group> <action> [flags]``.

Every run prints one JSON record {command, inputs, outputs, checks, seed,
version} on stdout (sorted keys, so identical runs give identical bytes) and,
with ``--out``, writes it to ``<out>/<group>_<action>.json`` next to a
``.meta.json`` sidecar holding the timestamp and wall time, plus any CSV/SVG
artifacts.

Exit codes: 0 success, 2 a verified inequality failed, 3 a search or step
budget ran out, 4 usage or precondition errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .bohr import (
    Check, attendant, bohr, dim_factor, find_regular, in_attendant_window, lemma27_profile,
    size_bound_check,
)
from .constants import RELAXED, ConstantsProfile
from .constructions import (
    behrend_set, corner_free_from_ap_free, expected_corner_report, product_corner_report,
    random_grid_set, three_ap,
)
from .errors import (
    BudgetExceeded, CornerLabError, InfeasibleProfile, NoIncrementFound, NotFound,
    PreconditionViolated, SearchBudgetExceeded, StepBudgetExceeded,
)
from .grid import (
    count_corners, full_grid_corner_count, is_corner_free, max_corner_free, max_corner_free_enumerate,
)
from .harmonic import balanced_grid_fn, box_norm4, rect_alpha_uniform, uniformity_report
from .increment import bourgain_increment, driver, green_increment, uniformize
from .plots import bars_svg, grid_svg, line_svg, to_csv
from .recurrence import (
    FiniteSystem, covering_number, random_translation_system, recurrence_constants,
    simultaneous_return_set, torus_system,
)
from .sets import GridSet, GridWindow, IntSet

EXIT_OK, EXIT_VIOLATION, EXIT_BUDGET, EXIT_USAGE = 0, 2, 3, 4

COMMANDS = {
    "corners": ("count", "max", "free"),
    "bohr": ("build", "regular", "attendant", "profile"),
    "uniformity": ("report", "box", "rect"),
    "increment": ("green", "bourgain", "uniformize", "drive"),
    "construct": ("behrend", "cornerfree", "random", "product"),
    "recur": ("simulate", "constants", "cover"),
}
STOCHASTIC = {("construct", "random"), ("construct", "product"), ("recur", "simulate"), ("recur", "cover")}
CONFIG_KEYS = {"n", "delta", "seed", "trials", "profile", "budget", "mode", "out", "eps", "theta",
               "kappa", "alpha", "t", "scale", "workers"}
DEFAULTS = {"profile": "relaxed", "mode": "posd", "trials": None, "eps": 1.0, "theta": "", "kappa": 0.1,
            "workers": 1}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# configuration


def read_config(path: str) -> dict:
    """key = value lines; '#' starts a comment; constants as const.<name>."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key.startswith("const."):
                if key[6:] not in RELAXED:
                    raise UsageError(f"{path}:{lineno}: unknown constant {key[6:]!r}")
            elif key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = val
    return out


def _coerce(key: str, val):
    if val is None:
        return None
    if key in ("n", "seed", "trials", "budget", "t", "workers"):
        return int(val)
    if key in ("delta", "eps", "kappa", "alpha", "scale"):
        return float(val)
    return val


def resolve(args) -> dict:
    """Flags > config file > defaults."""
    cfg = read_config(args.config) if args.config else {}
    opts = {}
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is None and key in cfg:
            v = cfg[key]
        if v is None:
            v = DEFAULTS.get(key)
        try:
            opts[key] = _coerce(key, v)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {v!r}") from exc
    consts = {k[6:]: v for k, v in cfg.items() if k.startswith("const.")}
    for item in args.const or []:
        if "=" not in item:
            raise UsageError(f"--const expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        if k not in RELAXED:
            raise UsageError(f"unknown constant {k!r}")
        consts[k] = v
    opts["const"] = dict(sorted(consts.items()))
    if opts["mode"] not in ("posd", "nzd"):
        raise UsageError("--mode must be posd or nzd")
    return opts


def make_profile(opts) -> ConstantsProfile:
    if opts["profile"] == "paper":
        if opts["const"]:
            raise UsageError("constant overrides apply to the relaxed profile only")
        return ConstantsProfile.paper()
    if opts["profile"] != "relaxed":
        raise UsageError(f"unknown profile {opts['profile']!r}")
    return ConstantsProfile.relaxed(**{k: float(v) for k, v in opts["const"].items()})


def parse_theta(text: str) -> tuple:
    if not text:
        return ()
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        out.append(Fraction(tok) if "/" in tok else float(tok))
    return tuple(out)


# ---------------------------------------------------------------------------
# set input


def _read_input(args) -> str:
    if args.stdin:
        return sys.stdin.read()
    if args.set:
        with open(args.set) as fh:
            return fh.read()
    raise UsageError("this command needs --set FILE or --stdin")


def _json_payload(text: str):
    s = text.lstrip()
    if not s.startswith("{"):
        return None
    obj = json.loads(s.splitlines()[0] if "\n" in s.strip() else s)
    return obj.get("outputs", obj)


def load_grid(text: str) -> GridSet:
    """Points "x y" per line, a GridSet JSON object, or a record whose outputs hold "set" or "induced"."""
    obj = _json_payload(text)
    if obj is None:
        return GridSet.from_text(text)
    for key in ("set", "induced"):
        if key in obj:
            return GridSet.from_json(obj[key])
    if "points" in obj:
        return GridSet.from_json(obj)
    raise UsageError("no grid set found in the input")


def load_intset(text: str) -> IntSet:
    obj = _json_payload(text)
    if obj is None:
        vals = [int(t) for t in text.split()]
        return IntSet.from_iter(vals)
    src = obj.get("intset", obj)
    if "values" in src:
        lo, hi = src.get("window", [None, None])
        return IntSet.from_iter(src["values"], lo, hi)
    raise UsageError("no integer set found in the input")


def _axes(A: GridSet) -> tuple[IntSet, IntSet]:
    w = A.window
    return IntSet.interval(w.x_lo, w.x_hi), IntSet.interval(w.y_lo, w.y_hi)


# ---------------------------------------------------------------------------
# handlers: each returns (outputs, checks, artifacts)


def _need(opts, *keys):
    for k in keys:
        if opts.get(k) is None:
            raise UsageError(f"--{k} is required")


def _corners(action, args, opts):
    mode = opts["mode"]
    arts = {}
    if action == "max":
        _need(opts, "n")
        kw = {"budget": opts["budget"]} if opts["budget"] else {}
        res = max_corner_free(opts["n"], mode, **kw)
        checks = []
        if opts["n"] <= 4:
            size, _ = max_corner_free_enumerate(opts["n"], mode)
            checks.append(Check("corners.enumeration_oracle", res.size, size, res.size == size))
        out = {"size": res.size, "L": str(res.L), "exact": res.exact, "nodes": res.nodes,
               "witness": [list(p) for p in res.witness.points]}
        arts["witness.svg"] = grid_svg(res.witness.points, res.witness.window.as_list(), "largest corner-free set")
        return out, checks, arts
    if action == "count" and args.full:
        _need(opts, "n")
        A = GridSet.full(GridWindow.square(1, opts["n"]))
    else:
        A = load_grid(_read_input(args))
    if action == "count":
        n = count_corners(A, mode)
        checks = []
        if args.full:
            want = full_grid_corner_count(opts["n"]) * (1 if mode == "posd" else 2)
            checks.append(Check("corners.full_grid_closed_form", n, want, n == want))
        return {"count": n, "size": len(A)}, checks, arts
    n, wit = count_corners(A, mode, enumerate_witnesses=True)
    out = {"corner_free": n == 0, "size": len(A), "corners": n}
    if wit:
        out["witness"] = [wit[0].k, wit[0].m, wit[0].d]
    return out, [], arts


def _host(opts):
    _need(opts, "n")
    return bohr(parse_theta(opts["theta"]), opts["eps"], opts["n"])


def _bohr(action, args, opts, prof):
    theta = parse_theta(opts["theta"])
    if action == "build":
        b = _host(opts)
        ok, size, bound = size_bound_check(b)
        out = {"spec": b.spec.to_json(), "size": len(b), "flagged": list(b.flagged)}
        if len(b) <= 2000:
            out["elements"] = b.elements.tolist()
        return out, [Check("bohr.size_lower_bound", size, bound, ok)], {}
    if action == "regular":
        _need(opts, "n")
        e1, n1, rep = find_regular(theta, opts["eps"], opts["n"], opts["kappa"])
        return ({"eps": e1, "N": n1, "report": rep.to_json()},
                [Check("bohr.regularity", float(rep.verdict), 1.0, rep.verdict)], {})
    lam = _host(opts)
    if action == "attendant":
        scale = opts["scale"] if opts["scale"] is not None else prof["eps_prime"]
        att = attendant(lam, scale, kappa=opts["kappa"])
        ok = in_attendant_window(lam.spec, att.spec, scale)
        return ({"spec": att.spec.to_json(), "size": len(att), "scale": scale},
                [Check("bohr.attendant_window", float(ok), 1.0, ok)], {})
    scale = opts["scale"] if opts["scale"] is not None else opts["kappa"] / dim_factor(lam.dim)
    att = attendant(lam, scale, kappa=opts["kappa"])
    p = lemma27_profile(lam, att, opts["kappa"], strict=opts["scale"] is None)
    out = {"count_pos": p.count_pos, "count_full": p.count_full, "l1_residual": p.l1_residual,
           "sumset_size": p.sumset_size, "attendant": att.spec.to_json()}
    return out, list(p.checks), {}


def _uniformity(action, args, opts, prof):
    if action == "report":
        lam = _host(opts)
        Q = load_intset(_read_input(args))
        Q = IntSet.from_iter([v for v in Q.values if v in lam], lam.lo, lam.hi)
        att = attendant(lam, opts["scale"] if opts["scale"] is not None else prof["eps_prime"],
                        kappa=opts["kappa"])
        alpha = opts["alpha"] if opts["alpha"] is not None else prof["sigma"]
        rep = uniformity_report(Q, lam, att, alpha)
        return {"uniform": rep.uniform, "report": rep.to_json(), "attendant": att.spec.to_json()}, list(rep.checks), {}
    A = load_grid(_read_input(args))
    E1, E2 = _axes(A)
    if action == "box":
        f, delta = balanced_grid_fn(A, E1, E2)
        v = box_norm4(f)
        return {"box_norm4": v, "normalized": v / (len(E1) ** 2 * len(E2) ** 2), "delta": delta}, [], {}
    _need(opts, "alpha")
    ok, measured = rect_alpha_uniform(A, E1, E2, opts["alpha"])
    return {"uniform": ok, "measured": measured, "alpha": opts["alpha"]}, [], {}


def _increment(action, args, opts, prof):
    arts = {}
    if action == "green":
        _need(opts, "alpha")
        A = load_grid(_read_input(args))
        E1, E2 = _axes(A)
        kw = {"budget": opts["budget"]} if opts["budget"] else {}
        res = green_increment(A, E1, E2, opts["alpha"], seed=opts["seed"] or 0, **kw)
        return res.to_json(), list(res.checks), arts
    if action == "bourgain":
        _need(opts, "alpha")
        lam = _host(opts)
        Q = load_intset(_read_input(args))
        Q = IntSet.from_iter([v for v in Q.values if v in lam], lam.lo, lam.hi)
        res = bourgain_increment(Q, lam, opts["alpha"], opts["kappa"], scale=opts["scale"],
                                 relax=prof["variance_relax"])
        return res.to_json(), list(res.checks), arts
    if action == "uniformize":
        lam = _host(opts)
        E1 = load_intset(_read_input(args))
        E1 = IntSet.from_iter([v for v in E1.values if v in lam], lam.lo, lam.hi)
        E2 = lam.intset()
        res = uniformize(E1, E2, lam, (0, 0), prof)
        arts["trace.jsonl"] = "\n".join(json.dumps(r.to_json(), sort_keys=True) for r in res.trace) + "\n"
        return res.to_json(), list(res.checks), arts
    _need(opts, "n")
    A = load_grid(_read_input(args))
    kw = {"counting_budget": float(opts["budget"])} if opts["budget"] else {}
    out = driver(A, opts["n"], prof, **kw)
    checks = []
    d = out.densities
    for i, (a, b) in enumerate(zip(d, d[1:])):
        checks.append(Check(f"driver.density_gain[{i}]", b - a, prof["gain"], b - a >= prof["gain"]))
    limit = math.ceil(1 / prof["gain"] - 1e-12)
    checks.append(Check("driver.iteration_count", len(d), limit + 1, len(d) <= limit + 1))
    if out.witness is not None:
        ok = not is_corner_free(A, "positive_d") and all(p in set(A.points) for p in out.witness.points())
        checks.append(Check("driver.corner_witness", float(ok), 1.0, ok))
    arts["trace.jsonl"] = out.trace_jsonl() + "\n"
    arts["densities.csv"] = to_csv(["iteration", "density"], list(enumerate(d)))
    arts["densities.svg"] = line_svg(list(range(len(d))), d, "density per accepted iteration")
    return out.to_json(), checks, arts


def _trial_report(kind, n, p, trials, seed, workers):
    if workers and workers > 1 and trials > 1:
        chunks = [(seed + i, 1) for i in range(trials)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_one_trial, [(kind, n, p, s) for s, _ in chunks]))
        parts.sort(key=lambda x: x[0])
        counts = [c for _, c in parts]
        return _aggregate(kind, n, p, counts, seed)
    if kind == "random":
        return expected_corner_report(n, p, trials, seed)
    return product_corner_report(n, p, p, trials, seed)


def _one_trial(job):
    kind, n, p, s = job
    rep = expected_corner_report(n, p, 1, s) if kind == "random" else product_corner_report(n, p, p, 1, s)
    if kind == "product" and not rep.details["identity_all"]:
        raise AssertionError(f"product identity failed at seed {s}")
    return s, rep.counts[0]


def _aggregate(kind, n, p, counts, seed):
    from .constructions import _report
    T = full_grid_corner_count(n)
    if kind == "random":
        return _report(n, counts, p ** 3 * T, {"delta": p, "T": T, "seed": seed})
    rep = _report(n, counts, p ** 4 * T, {"beta": [p, p], "T": T, "uniform_value": p ** 6 * T,
                                          "identity_all": True, "seed": seed})
    rep.details["z_uniform"] = (rep.mean - p ** 6 * T) / rep.stderr if rep.stderr > 0 else math.inf
    return rep


def _construct(action, args, opts):
    arts = {}
    if action == "behrend":
        _need(opts, "n")
        B = behrend_set(opts["n"])
        A = corner_free_from_ap_free(B, opts["n"])
        ok = three_ap(B.values) is None
        out = {"intset": B.to_json(), "size": len(B), "induced": A.to_json(), "induced_size": len(A)}
        return out, [Check("construct.progression_free", float(ok), 1.0, ok)], arts
    if action == "cornerfree":
        if args.set or args.stdin:
            B = load_intset(_read_input(args))
        else:
            _need(opts, "n")
            B = behrend_set(opts["n"])
        _need(opts, "n")
        A = corner_free_from_ap_free(B, opts["n"])
        ok = is_corner_free(A, "nonzero_d")
        arts["set.svg"] = grid_svg(A.points, A.window.as_list(), "induced corner-free set", cell=4)
        return ({"set": A.to_json(), "size": len(A)},
                [Check("construct.corner_free", float(ok), 1.0, ok)], arts)
    _need(opts, "n", "delta")
    p = opts["delta"]
    if action == "random" and not opts["trials"]:
        A = random_grid_set(opts["n"], p, opts["seed"])
        return {"set": A.to_json(), "size": len(A), "corners": count_corners(A)}, [], arts
    trials = opts["trials"] or 1
    rep = _trial_report(action, opts["n"], p, trials, opts["seed"], opts["workers"])
    checks = [Check("construct.mean_within_5_stderr", abs(rep.z), 5.0, rep.within)]
    if action == "product":
        checks.append(Check("construct.product_identity", float(rep.details["identity_all"]), 1.0,
                            rep.details["identity_all"]))
    arts["counts.csv"] = to_csv(["seed", "corners"], [(opts["seed"] + i, c) for i, c in enumerate(rep.counts)])
    arts["counts.svg"] = bars_svg(rep.counts, f"corner counts over {trials} trials")
    return rep.to_json(), checks, arts


def _system(args, opts):
    if args.set or args.stdin:
        return FiniteSystem.from_json(_read_input(args))
    _need(opts, "n")
    return torus_system(opts["n"], opts["n"])


def _recur(action, args, opts):
    if action == "simulate":
        t = opts["t"] or 2
        p = opts["delta"] if opts["delta"] is not None else 0.3
        trials = opts["trials"] or 1
        rows, checks = [], []
        for i in range(trials):
            s = opts["seed"] + i
            sys_ = torus_system(opts["n"], opts["n"]) if opts["n"] else random_translation_system(s)
            rng = np.random.default_rng(s)
            Y = np.flatnonzero(rng.random(sys_.size) < p).tolist()
            rep = simultaneous_return_set(sys_, Y, t)
            rows.append({"seed": s, "points": sys_.size, "mu_Yt": rep.mu_Yt, "bound": str(rep.bound),
                         "source": rep.bound_source})
            checks.append(Check(f"recur.return_bound[{s}]", rep.mu_Yt, float(rep.bound), rep.verdict))
        return {"t": t, "trials": rows}, checks, {}
    if action == "constants":
        sys_ = _system(args, opts)
        N = opts["t"] or 1
        rc = recurrence_constants(sys_, N)
        return {"N": N, **rc.to_json()}, [], {}
    _need(opts, "eps")
    if args.set or args.stdin:
        sys_ = FiniteSystem.from_json(_read_input(args))
    else:
        _need(opts, "n")
        P = np.random.default_rng(opts["seed"]).random((opts["n"], 2))
        D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(-1))
        sys_ = FiniteSystem(D, np.arange(opts["n"]), np.arange(opts["n"]))
    res = covering_number(range(sys_.size), sys_, opts["eps"])
    return res.to_json(), [], {}


# ---------------------------------------------------------------------------
# driver


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--delta", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--profile", choices=("paper", "relaxed"))
    common.add_argument("--set", help="input file (points, integers or JSON)")
    common.add_argument("--stdin", action="store_true", help="read the input set from stdin")
    common.add_argument("--out", help="output directory for the record and artifacts")
    common.add_argument("--budget", type=int, help="node or evaluation budget")
    common.add_argument("--mode", choices=("posd", "nzd"))
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--const", action="append", help="NAME=VALUE override of a relaxed constant")
    common.add_argument("--theta", help="comma-separated frequencies, fractions allowed")
    common.add_argument("--eps", type=float)
    common.add_argument("--kappa", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--scale", type=float, help="attendant scale")
    common.add_argument("--t", type=int)
    common.add_argument("--full", action="store_true", help="use the full grid [1, n]^2")
    common.add_argument("--workers", type=int)
    p = _Parser(prog="cornerlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    groups = p.add_subparsers(dest="group", required=True)
    for g, actions in COMMANDS.items():
        gp = groups.add_parser(g)
        sub = gp.add_subparsers(dest="action", required=True)
        for a in actions:
            sub.add_parser(a, parents=[common])
    return p


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, Fraction):
        return str(o)
    if hasattr(o, "to_json"):
        return o.to_json()
    if dataclasses.is_dataclass(o):
        return {f.name: getattr(o, f.name) for f in dataclasses.fields(o)}
    if isinstance(o, (tuple, set, frozenset)):
        return list(o)
    raise TypeError(f"not serializable: {type(o)}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=_jsonable, allow_nan=True)


def execute(argv) -> tuple[int, dict, str | None]:
    """Run one command; returns (exit code, record, output directory)."""
    args = build_parser().parse_args(argv)
    opts = resolve(args)
    command = f"{args.group} {args.action}"
    if (args.group, args.action) in STOCHASTIC and opts["seed"] is None:
        raise UsageError(f"{command} is stochastic and needs --seed")
    prof = make_profile(opts)
    inputs = {k: v for k, v in sorted(opts.items()) if v not in (None, {}, "") and k not in ("out", "workers")}
    if args.set:
        inputs["set"] = os.path.basename(args.set)
    if args.stdin:
        inputs["stdin"] = True
    if args.full:
        inputs["full"] = True
    record = {"command": command, "inputs": inputs, "seed": opts["seed"], "version": __version__}
    code = EXIT_OK
    arts = {}
    try:
        if args.group == "corners":
            out, checks, arts = _corners(args.action, args, opts)
        elif args.group == "bohr":
            out, checks, arts = _bohr(args.action, args, opts, prof)
        elif args.group == "uniformity":
            out, checks, arts = _uniformity(args.action, args, opts, prof)
        elif args.group == "increment":
            prof.require_executable(command)
            out, checks, arts = _increment(args.action, args, opts, prof)
        elif args.group == "construct":
            out, checks, arts = _construct(args.action, args, opts)
        else:
            out, checks, arts = _recur(args.action, args, opts)
        record["outputs"] = out
        record["checks"] = [c.to_json() for c in checks]
        if not all(c.ok for c in checks):
            code = EXIT_VIOLATION
    except (BudgetExceeded, SearchBudgetExceeded, StepBudgetExceeded, NoIncrementFound) as exc:
        best = getattr(exc, "best", None) or getattr(exc, "diagnostics", None)
        record["outputs"] = {"error": type(exc).__name__, "message": str(exc), "best": best}
        record["checks"] = []
        code = EXIT_BUDGET
    except (PreconditionViolated, InfeasibleProfile, NotFound) as exc:
        record["outputs"] = {"error": type(exc).__name__, "message": str(exc)}
        record["checks"] = []
        code = EXIT_USAGE
    if opts["out"]:
        os.makedirs(opts["out"], exist_ok=True)
        stem = os.path.join(opts["out"], f"{args.group}_{args.action}")
        with open(stem + ".json", "w") as fh:
            fh.write(dumps(record) + "\n")
        for name, text in arts.items():
            with open(f"{stem}.{name}", "w") as fh:
                fh.write(text)
    return code, record, opts["out"]


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    t0 = time.time()
    try:
        code, record, out = execute(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CornerLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(dumps(record))
    if out:
        stem = os.path.join(out, record["command"].replace(" ", "_"))
        meta = {"timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "wall_seconds": time.time() - t0}
        with open(stem + ".meta.json", "w") as fh:
            fh.write(json.dumps(meta, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
