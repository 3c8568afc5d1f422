"""Command-line interface: ``subgauss {find,verify,profile,sample,isotropize}``.

Exit codes: 0 success, 1 a check or certification failed, 2 usage or
configuration error, 3 budget exhausted (partial output written).

Every data file carries the run's config hash and seed. Wall-clock data goes
to ``run_meta.json`` only, so data payloads are byte-identical across reruns
and thread counts.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, rng
from ._accel import backend
from .bodies import body_from_dict, closed_form_marginal, make_body
from .construction import (
    DEFAULT_BETA,
    DEFAULT_BIG_C0,
    DEFAULT_C0,
    DEFAULT_EPS,
    certify,
    find_directions,
    make_grid,
)
from .errors import BudgetExhausted, SubgaussError
from .isotropy import isotropize
from .moments import moment_profile
from .sampling import sample_uniform, write_batch
from .verify import SELECTORS, exit_code, report_json, run_suite, summary_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    body: dict | None
    n: int | None
    seed: int
    samples: int
    c0: float
    C0: float
    eps: float
    beta: float
    evaluator: str
    format: str
    extra: dict = field(default_factory=dict)

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# config resolution


def _resolve_body(arg: str | None, n: int | None, default_kind: str = "cube"):
    if arg is None:
        if n is None:
            raise ConfigError("give --body or --n")
        return make_body(default_kind, n)
    if os.path.exists(arg):
        try:
            with open(arg) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read body file {arg}: {exc}") from exc
        if n is not None and isinstance(doc, dict) and int(doc.get("n", n)) != n:
            raise ConfigError(f"--n {n} disagrees with n={doc.get('n')} in {arg}")
        return body_from_dict(doc)
    # a bare kind name such as "cube" or "l1_ball"
    if n is None:
        raise ConfigError(f"{arg!r} is not a file; a kind name needs --n")
    return make_body(arg, n)


def _parse_floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _directions(args, n, seed):
    out = []
    for t in args.theta or []:
        t = t.strip()
        if t == "axis":
            v = np.zeros(n)
            v[-1] = 1.0
        elif t.startswith("e") and t[1:].isdigit():
            v = np.zeros(n)
            v[int(t[1:]) - 1] = 1.0
        else:
            v = np.array(_parse_floats(t))
        if v.shape != (n,):
            raise ConfigError(f"direction {t!r} has dimension {v.size}, body has {n}")
        out.append(v / np.linalg.norm(v))
    if args.random_directions:
        g = rng.stream(seed, rng.DIRECTIONS)
        z = g.standard_normal((args.random_directions, n))
        out.extend(z / np.linalg.norm(z, axis=1)[:, None])
    if not out:
        raise ConfigError("no directions given (use --theta or --random-directions)")
    return np.array(out)


# --------------------------------------------------------------------------
# output helpers


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_meta(out, cfg: RunConfig, started, threads, status):
    _write_json(os.path.join(out, "run_meta.json"), {
        "config": asdict(cfg),
        "config_hash": cfg.hash,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "elapsed_seconds": round(time.time() - started, 3),
        "threads": threads,
        "backend": backend(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "version": __version__,
        "exit_code": status,
    })


def _profiles_csv(profiles, cfg):
    lines = [f"# config_hash={cfg.hash} seed={cfg.seed}",
             "theta_id,p,value,ci_low,ci_high,method"]
    body = "".join(prof.to_csv(i).split("\n", 1)[1] for i, prof in enumerate(profiles))
    return "\n".join(lines) + "\n" + body


def _stamp(payload, cfg):
    return {"config_hash": cfg.hash, "seed": cfg.seed, **payload}


# --------------------------------------------------------------------------
# commands


def cmd_find(args, cfg, body, out, threads):
    grid = make_grid(body.n, cfg.c0, cfg.C0, cfg.eps)
    status = EXIT_OK
    try:
        ds = find_directions(body, grid, budget=args.budget, seed=cfg.seed, beta=cfg.beta,
                             samples=cfg.samples, evaluator=cfg.evaluator, workers=threads)
    except BudgetExhausted as exc:
        ds = exc.partial
        status = EXIT_BUDGET
        print(f"budget exhausted: {exc}", file=sys.stderr)
    cert = certify(ds, body, samples=cfg.samples, seed=cfg.seed + 1, workers=threads) \
        if ds is not None and ds.size else None
    payload = ds.to_dict() if ds is not None else {}
    payload["body"] = body.to_dict()
    payload["certification"] = cert.to_dict() if cert else None
    payload["profiles_file"] = "profiles.csv"
    _write_json(os.path.join(out, "directions.json"), _stamp(payload, cfg))
    with open(os.path.join(out, "profiles.csv"), "w") as fh:
        fh.write(_profiles_csv(ds.profiles if ds is not None else [], cfg))
    if status == EXIT_OK and not (ds.complete and cert is not None and cert.all_pass
                                  and all(ds.flags)):
        status = EXIT_FAIL
    count = ds.size if ds is not None else 0
    print(f"directions: {count} / {ds.target_m if ds is not None else '?'}")
    if cert:
        print(f"certified: {cert.all_pass}  sup ratio {cert.sup_ratio:.4f}  "
              f"inf ratio {cert.inf_ratio:.4f}")
    return status


def cmd_verify(args, cfg, body, out, threads):
    results = run_suite(args.selector, seed=cfg.seed, n=cfg.n, workers=threads, quick=args.quick)
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(json.dumps(_stamp({"results": json.loads(report_json(results))}, cfg),
                            indent=2, sort_keys=True))
        fh.write("\n")
    print(summary_table(results))
    for r in results:
        if r.check_id == "counterexample":
            for t, v in r.observed["mgf"].items():
                print(f"mgf t={t}: formula {v['formula']:.12g} quadrature {v['quadrature']:.12g}")
            for n, s in r.observed["slope_by_n"].items():
                print(f"cone axis slope n={n}: {s:.4f}")
    return exit_code(results)


def cmd_profile(args, cfg, body, out, threads):
    n = body.n
    thetas = _directions(args, n, cfg.seed)
    ps = _parse_floats(args.p) if args.p else [1.0, 2.0, 4.0]
    batch = None
    profiles = []
    for th in thetas:
        md = closed_form_marginal(body, th) if cfg.evaluator in ("quad", "auto") else None
        if md is None and cfg.evaluator == "quad":
            raise ConfigError("quadrature evaluator needs a closed-form marginal for every direction")
        if md is None:
            if batch is None:
                batch = sample_uniform(body, cfg.samples, cfg.seed, workers=threads)
            src = batch
        else:
            src = md
        profiles.append(moment_profile(src, th, ps, n=n, seed=cfg.seed))
    if cfg.format == "json":
        payload = _stamp({"body": body.to_dict(), "profiles": [
            {"theta": prof.theta.tolist(), "truncated": prof.truncated,
             "rows": [dict(zip(("p", "value", "ci_low", "ci_high", "method"),
                               (e.p, e.value, e.ci_low, e.ci_high, e.method)))
                      for e in prof.entries]} for prof in profiles]}, cfg)
        _write_json(os.path.join(out, "profile.json"), payload)
    else:
        with open(os.path.join(out, "profile.csv"), "w") as fh:
            fh.write(_profiles_csv(profiles, cfg))
    for i, prof in enumerate(profiles):
        vals = ", ".join(f"p={e.p:g}: {e.value:.6f}" for e in prof.entries)
        print(f"theta {i}: {vals}")
    return EXIT_OK


def cmd_sample(args, cfg, body, out, threads):
    batch = sample_uniform(body, cfg.samples, cfg.seed, method=args.method, workers=threads)
    fmt = "csv" if cfg.format == "csv" else "bin"
    path = os.path.join(out, f"samples.{fmt}")
    write_batch(batch, path, fmt)
    _write_json(os.path.join(out, "samples.json"), _stamp({
        "body": body.to_dict(), "N": batch.N, "n": batch.n, "method": batch.method.to_dict(),
        "file": os.path.basename(path), "format": fmt}, cfg))
    print(f"wrote {batch.N} points to {path}")
    return EXIT_OK


def cmd_isotropize(args, cfg, body, out, threads):
    batch = sample_uniform(body, cfg.samples, cfg.seed, workers=threads)
    tr, ci = isotropize(batch, seed=cfg.seed)
    _write_json(os.path.join(out, "transform.json"), _stamp({
        "body": body.to_dict(), **tr.to_dict(), "covariance": tr.sigma.tolist(),
        "covariance_ci_frobenius": ci}, cfg))
    print(f"L_K = {tr.L_K:.6f}  det T = {tr.det_check:.12f}  covariance CI {ci:.3g}")
    return EXIT_OK


COMMANDS = {
    "find": cmd_find,
    "verify": cmd_verify,
    "profile": cmd_profile,
    "sample": cmd_sample,
    "isotropize": cmd_isotropize,
}


# --------------------------------------------------------------------------
# argument parsing


def _common(p):
    p.add_argument("--body", help="body JSON file, or a kind name (cube, ball, l1_ball, ...)")
    p.add_argument("--n", type=int, help="dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=200_000, help="sample budget N")
    p.add_argument("--c0", type=float, default=DEFAULT_C0)
    p.add_argument("--C0", type=float, default=DEFAULT_BIG_C0)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--beta", type=float, default=DEFAULT_BETA)
    p.add_argument("--evaluator", choices=("mc", "quad", "auto"), default="auto")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--format", choices=("csv", "json", "bin"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subgauss", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    f = sub.add_parser("find", help="greedy direction search plus certification")
    _common(f)
    f.add_argument("--budget", type=int, default=None, help="max number of L^p evaluations")
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("selector", choices=SELECTORS)
    v.add_argument("--quick", action="store_true", help="smaller Monte Carlo budgets")
    _common(v)
    pr = sub.add_parser("profile", help="moment profiles along given directions")
    _common(pr)
    pr.add_argument("--theta", action="append",
                    help="comma-separated direction, 'eK' for a coordinate, or 'axis'")
    pr.add_argument("--random-directions", type=int, default=0)
    pr.add_argument("--p", help="comma-separated orders (default 1,2,4)")
    s = sub.add_parser("sample", help="uniform sample of a body")
    _common(s)
    s.add_argument("--method", choices=("auto", "direct", "hit_and_run"), default="auto")
    i = sub.add_parser("isotropize", help="covariance and the isotropic transform")
    _common(i)
    return ap


def _config(args) -> RunConfig:
    extra = {}
    for key in ("budget", "selector", "quick", "theta", "random_directions", "p", "method"):
        if hasattr(args, key):
            extra[key] = getattr(args, key)
    fmt = args.format or {"sample": "bin", "verify": "json", "find": "json",
                          "isotropize": "json"}.get(args.command, "csv")
    return RunConfig(args.command, None, args.n, args.seed, args.samples, args.c0, args.C0,
                     args.eps, args.beta, args.evaluator, fmt, extra)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    cfg = _config(args)
    try:
        if args.samples < 1 or not (0 < args.beta < 1) or args.C0 <= 0 or args.eps <= 0:
            raise ConfigError("invalid --samples/--beta/--C0/--eps")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        body = None
        if args.command != "verify":
            body = _resolve_body(args.body, args.n)
            cfg.body = body.to_dict()
            cfg.n = body.n
        if args.command == "verify" and args.body:
            raise ConfigError("verify runs fixed catalog instances; use --n to resize")
        if cfg.format == "bin" and args.command != "sample":
            raise ConfigError("--format bin applies to sample only")
    except (ConfigError, SubgaussError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    threads = args.threads or rng.default_workers()
    os.makedirs(args.out, exist_ok=True)
    try:
        status = COMMANDS[args.command](args, cfg, body, args.out, threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = EXIT_USAGE
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        status = EXIT_BUDGET
    except SubgaussError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = EXIT_USAGE
    _write_meta(args.out, cfg, started, threads, status)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
