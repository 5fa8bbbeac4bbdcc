"""Command-line driver: experiment configs in, reproducible CSV/JSON reports out.

Every output file embeds the fully-resolved config (including the seed) and
the library version, so re-running the same config reproduces the numeric
columns byte-for-byte.  Exit codes: 0 success, 1 validation error, 2 numerical
failure under --strict.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .domain import (
    Weight,
    build_potential,
    make_h3_counterexample,
    make_heisenberg,
    make_parabolic_tube,
    make_sharpness_tube,
    make_smoothed_polynomial,
    verify_uft,
    UftThresholds,
)
from .errors import SzegoLabError
from .geometry import (
    BoundaryPoint,
    MetricContext,
    ball_volume,
    cc_distance,
    rho_tilde,
    sigma_tau,
)
from .szego import (
    KernelQuery,
    bergman_kernel,
    growth_envelope,
    sharpness_scan,
    tube_szego_derivative,
    tube_szego_kernel,
)

_SUBCOMMANDS = ("verify-uft", "potential", "metric", "kernel", "sharpness",
                "bergman-check", "envelope")

_DOMAINS = ("heisenberg", "parabolic-tube", "sharpness-tube", "custom-weight")


class _Validation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Validation(message)


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("SZEGO_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    n = _max_workers()
    items = list(items)
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _write_csv(path, config, columns, rows, extra_header=()):
    lines = [f"# szegolab {__version__}",
             f"# config {json.dumps(config, sort_keys=True)}"]
    lines += [f"# {h}" for h in extra_header]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _load_config_file(path):
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise _Validation("config file must contain a JSON object")
    return data


def _merge_config(defaults, file_cfg, flag_cfg):
    """defaults < file < explicitly-set flags; unknown file keys rejected."""
    merged = dict(defaults)
    for key, val in file_cfg.items():
        if key not in defaults:
            raise _Validation(f"unknown config key: {key!r}")
        merged[key] = val
    merged.update(flag_cfg)
    return merged


def _domain_weight(name, weight_spec):
    if name == "heisenberg":
        w, _ = make_heisenberg()
        return w
    if name == "parabolic-tube":
        from .domain import weight_from_profile
        return weight_from_profile(make_parabolic_tube())
    if name == "sharpness-tube":
        from .domain import weight_from_profile
        return weight_from_profile(make_sharpness_tube())
    if name == "custom-weight":
        if not weight_spec:
            raise _Validation("--weight-spec FILE is required for --domain custom-weight")
        spec = _load_config_file(weight_spec)
        kind = spec.get("kind")
        if kind == "h3-counterexample":
            return make_h3_counterexample()
        if kind == "smoothed-polynomial":
            scale = float(spec.get("scale", 16.0))
            q = Weight(lambda z: scale * np.abs(np.asarray(z)) ** 2,
                       max_order=3, name="laplacian(|z|^4-like)", sup_norm=None)
            return make_smoothed_polynomial(q)
        if kind == "constant":
            c = float(spec.get("value", 1.0))
            return Weight(lambda z: c * np.ones_like(np.real(np.asarray(z))),
                          lambda a, b, z: complex(c) if a == b == 0 else 0j,
                          max_order=99, name=f"constant({c})", sup_norm=abs(c))
        raise _Validation(f"unknown weight kind: {kind!r}")
    raise _Validation(f"unknown domain: {name!r}")


def _domain_context(name):
    if name == "heisenberg":
        return MetricContext.heisenberg()
    if name == "parabolic-tube":
        return MetricContext.from_profile(make_parabolic_tube())
    if name == "sharpness-tube":
        return MetricContext.from_profile(make_sharpness_tube())
    raise _Validation(f"metric context needs a built-in domain, got {name!r}")


def _domain_profile(name):
    if name == "parabolic-tube":
        return make_parabolic_tube()
    if name == "sharpness-tube":
        return make_sharpness_tube()
    raise _Validation(f"kernel commands need a tube domain, got {name!r}")


def _parse_n_range(text):
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v]


def _parse_eps_list(text):
    return [float(v) for v in str(text).split(",") if v]


def _build_parser():
    p = _Parser(prog="szego-lab",
                description="Szego/Bergman kernel and CC-geometry experiments "
                            "on unbounded model domains")
    p.add_argument("--version", action="version", version=f"szegolab {__version__}")
    sub = p.add_subparsers(dest="command")

    def common(sp, domain_default="heisenberg"):
        sp.add_argument("--domain", default=domain_default, choices=_DOMAINS)
        sp.add_argument("--config", default=None, help="JSON config file (flags override)")
        sp.add_argument("--out", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True)

    sp = sub.add_parser("verify-uft", description="sampled (H1)-(H3) evidence")
    common(sp)
    sp.add_argument("--weight-spec", default=None)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--grid-n", type=int, default=None)
    sp.add_argument("--grid-extent", type=float, default=None)
    sp.add_argument("--rmax-log2", type=int, default=None)
    sp.add_argument("--angular", type=int, default=None)
    sp.add_argument("--c1-min", type=float, default=None)
    sp.add_argument("--c2-max", type=float, default=None)
    sp.add_argument("--growth-tol", type=float, default=None)

    sp = sub.add_parser("potential", description="potential construction + Laplacian check")
    common(sp)
    sp.add_argument("--weight-spec", default=None)
    sp.add_argument("--grid-n", type=int, default=None)
    sp.add_argument("--grid-extent", type=float, default=None)

    sp = sub.add_parser("metric", description="CC-geometry table on random boundary pairs")
    common(sp)
    sp.add_argument("--pairs", type=int, default=None)
    sp.add_argument("--tau", type=float, default=None)

    sp = sub.add_parser("kernel", description="tube Szego kernel at a boundary pair")
    common(sp, domain_default="parabolic-tube")
    for name in ("x", "y", "t", "x2", "y2", "t2"):
        sp.add_argument(f"--{name}", type=float, default=None)
    sp.add_argument("--eps", default=None, help="epsilon or comma list")
    sp.add_argument("--deriv-k", type=int, default=None,
                    help="evaluate the Zbar^k Z kernel instead")

    sp = sub.add_parser("sharpness", description="antipodal derivative-kernel scan")
    common(sp, domain_default="sharpness-tube")
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--n", default=None, help="range like 1..6 or comma list")
    sp.add_argument("--eps", type=float, default=None)

    sp = sub.add_parser("bergman-check", description="Bergman kernel vs Szego derivative relation")
    common(sp, domain_default="parabolic-tube")
    sp.add_argument("--eps", default=None, help="epsilon or comma list")
    sp.add_argument("--x", type=float, default=None)
    sp.add_argument("--fd-step", type=float, default=None)

    sp = sub.add_parser("envelope", description="kernel-size times ball-volume envelope")
    common(sp, domain_default="parabolic-tube")
    sp.add_argument("--pairs", type=int, default=None)
    sp.add_argument("--eps", type=float, default=None)
    return p


def _flag_config(args, keys):
    return {k.replace("-", "_"): getattr(args, k.replace("-", "_"))
            for k in keys if getattr(args, k.replace("-", "_"), None) is not None}


def _resolve(args, defaults, keys):
    file_cfg = _load_config_file(args.config) if args.config else {}
    return _merge_config(defaults, file_cfg, _flag_config(args, keys))


def run(argv) -> int:
    """Parse argv, run the experiment, write outputs; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _dispatch(args)
    except _Validation as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SzegoLabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    return {
        "verify-uft": _cmd_verify_uft,
        "potential": _cmd_potential,
        "metric": _cmd_metric,
        "kernel": _cmd_kernel,
        "sharpness": _cmd_sharpness,
        "bergman-check": _cmd_bergman,
        "envelope": _cmd_envelope,
    }[args.command](args)


def _cmd_verify_uft(args) -> int:
    defaults = {"domain": args.domain, "m": 2, "grid_n": 3, "grid_extent": 2.0,
                "rmax_log2": 10, "angular": 4096, "c1_min": 1e-6, "c2_max": 50.0,
                "growth_tol": 1e-3, "out": "uft.json", "seed": 0}
    cfg = _resolve(args, defaults, ["domain", "m", "grid-n", "grid-extent", "rmax-log2",
                                    "angular", "c1-min", "c2-max", "growth-tol", "out", "seed"])
    w = _domain_weight(cfg["domain"], getattr(args, "weight_spec", None))
    xs = np.linspace(-cfg["grid_extent"], cfg["grid_extent"], cfg["grid_n"])
    grid = [complex(x, y) for x in xs for y in xs]
    th = UftThresholds(c1_min=cfg["c1_min"], c2_max=cfg["c2_max"],
                       h3_growth_tol=cfg["growth_tol"])
    report = verify_uft(w, cfg["m"], grid, h3_rmax_log2=cfg["rmax_log2"],
                        h3_angular=cfg["angular"], thresholds=th)
    payload = json.loads(report.to_json())
    payload["version"] = __version__
    payload["config"] = cfg
    with open(cfg["out"], "w") as fh:
        json.dump(payload, fh, indent=2)
    v = report.verdicts
    print(f"verify-uft[{w.name}]: h1={report.h1_infimum:.6g} h3={report.h3_supremum:.6g} "
          f"verdicts h1={v['h1']} h2={v['h2']} h3={v['h3']} -> {cfg['out']}")
    return 0


def _cmd_potential(args) -> int:
    defaults = {"domain": args.domain, "grid_n": 21, "grid_extent": 3.0,
                "out": "potential.csv", "seed": 0}
    cfg = _resolve(args, defaults, ["domain", "grid-n", "grid-extent", "out", "seed"])
    w = _domain_weight(cfg["domain"], getattr(args, "weight_spec", None))
    pot = build_potential(w)
    n = cfg["grid_n"]
    ext = cfg["grid_extent"]
    step = 2.0 * ext / (n - 1)
    xs = np.linspace(-ext - step, ext + step, n + 2)
    vals = np.array([[pot.eval(complex(x, y)) for y in xs] for x in xs])
    rows = []
    worst = 0.0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            lap = (vals[i + 1, j] + vals[i - 1, j] + vals[i, j + 1] + vals[i, j - 1]
                   - 4.0 * vals[i, j]) / step**2
            hval = float(np.real(w.eval(complex(xs[i], xs[j]))))
            err = abs(lap - hval)
            worst = max(worst, err)
            rows.append((xs[i], xs[j], vals[i, j], lap, hval, err))
    _write_csv(cfg["out"], cfg,
               ["z_re", "z_im", "p_value", "fd_laplacian", "weight", "abs_err"], rows)
    print(f"potential[{w.name}]: {len(rows)} grid points, max |fd_laplacian - h| = {worst:.3e} "
          f"-> {cfg['out']}")
    return 0


def _cmd_metric(args) -> int:
    defaults = {"domain": args.domain, "pairs": 25, "tau": 1.0,
                "out": "metric.csv", "seed": 0}
    cfg = _resolve(args, defaults, ["domain", "pairs", "tau", "out", "seed"])
    ctx = _domain_context(cfg["domain"])
    rng = np.random.default_rng(cfg["seed"])
    tau = cfg["tau"]

    samples = []
    for _ in range(cfg["pairs"]):
        a = BoundaryPoint(complex(rng.uniform(-2, 2), rng.uniform(-2, 2)), rng.uniform(-5, 5))
        b = BoundaryPoint(complex(rng.uniform(-2, 2), rng.uniform(-2, 2)), rng.uniform(-5, 5))
        samples.append((a, b))

    def one(pair):
        a, b = pair
        d = cc_distance(ctx, a, b)
        vol = ball_volume(ctx, a, d) if d > 0 else 0.0
        return (a.z.real, a.z.imag, a.t, b.z.real, b.z.imag, b.t,
                d, vol, sigma_tau(ctx, a, tau), rho_tilde(ctx, a, b, tau))

    rows = _pmap(one, samples)
    _write_csv(cfg["out"], cfg,
               ["z_re", "z_im", "t", "w_re", "w_im", "s",
                "dist", "ball_volume", "sigma_tau", "rho_tilde"], rows)
    print(f"metric[{cfg['domain']}]: {len(rows)} pairs -> {cfg['out']}")
    return 0


def _cmd_kernel(args) -> int:
    defaults = {"domain": args.domain, "x": 0.0, "y": 0.0, "t": 0.0,
                "x2": 0.0, "y2": 0.0, "t2": 0.0, "eps": "1.0", "deriv_k": None,
                "out": "kernel.csv", "seed": 0}
    cfg = _resolve(args, defaults, ["domain", "x", "y", "t", "x2", "y2", "t2",
                                    "eps", "deriv-k", "out", "seed"])
    profile = _domain_profile(cfg["domain"])
    a = BoundaryPoint(complex(cfg["x"], cfg["y"]), cfg["t"])
    b = BoundaryPoint(complex(cfg["x2"], cfg["y2"]), cfg["t2"])
    rows = []
    nonconverged = False
    for eps in _parse_eps_list(cfg["eps"]):
        k = cfg["deriv_k"]
        q = KernelQuery(profile, a, b, eps, deriv_order_k=k or 0)
        kv = tube_szego_derivative(q) if k is not None else tube_szego_kernel(q)
        stats = kv.inner_integral_stats
        nonconverged |= not stats.get("converged", True)
        rows.append((a.z.real, a.z.imag, a.t, b.z.real, b.z.imag, b.t, eps,
                     -1 if k is None else k, kv.value.real, kv.value.imag,
                     kv.error_estimate, stats.get("tau_evaluations", 0)))
    _write_csv(cfg["out"], cfg,
               ["x_a", "y_a", "t_a", "x_b", "y_b", "t_b", "eps", "deriv_k",
                "value_re", "value_im", "error_estimate", "tau_evaluations"], rows)
    print(f"kernel[{cfg['domain']}]: {len(rows)} evaluation(s) -> {cfg['out']}")
    if nonconverged and args.strict:
        print("numerical failure: kernel quadrature did not converge", file=sys.stderr)
        return 2
    return 0


def _cmd_sharpness(args) -> int:
    defaults = {"domain": args.domain, "k": 1, "n": "1..6", "eps": 0.01,
                "out": "sharpness.csv", "seed": 0}
    cfg = _resolve(args, defaults, ["domain", "k", "n", "eps", "out", "seed"])
    profile = _domain_profile(cfg["domain"])
    ns = _parse_n_range(str(cfg["n"]))
    rows = sharpness_scan(profile, cfg["k"], ns, cfg["eps"])
    lv = np.log([r.value for r in rows])
    slope_gap = float(np.polyfit(np.log([r.gap for r in rows]), lv, 1)[0])
    slope_n = float(np.polyfit(np.log([float(r.n) for r in rows]), lv, 1)[0])
    _write_csv(cfg["out"], cfg, ["n", "value", "gap"],
               [(r.n, r.value, r.gap) for r in rows],
               extra_header=[f"fit slope_vs_gap {_fmt(slope_gap)}",
                             f"fit slope_vs_n {_fmt(slope_n)}"])
    print(f"sharpness[k={cfg['k']}]: {len(rows)} rows, slope(gap)={slope_gap:.3f}, "
          f"slope(n)={slope_n:.3f} -> {cfg['out']}")
    return 0


def _cmd_bergman(args) -> int:
    defaults = {"domain": args.domain, "eps": "1.0", "x": 0.0, "fd_step": 1e-3,
                "out": "bergman.csv", "seed": 0}
    cfg = _resolve(args, defaults, ["domain", "eps", "x", "fd-step", "out", "seed"])
    profile = _domain_profile(cfg["domain"])
    x = cfg["x"]
    a = BoundaryPoint(complex(x, 0.0), 0.0)
    rows = []
    for eps in _parse_eps_list(cfg["eps"]):
        bv = bergman_kernel(KernelQuery(profile, a, a, eps)).value
        h = cfg["fd_step"]
        s_hi = tube_szego_kernel(KernelQuery(profile, a, a, eps + h)).value
        s_lo = tube_szego_kernel(KernelQuery(profile, a, a, eps - h)).value
        rel = -2.0 * (s_hi - s_lo) / (2.0 * h)  # 2i d/d(conj w2) via the eps-shift
        rel_err = abs(bv - rel) / abs(bv)
        closed = 1.0 / (math.pi**2 * eps**3) if cfg["domain"] == "parabolic-tube" else float("nan")
        closed_err = abs(bv - closed) / closed if closed == closed else float("nan")
        rows.append((eps, bv.real, bv.imag, rel.real, rel.imag, rel_err, closed, closed_err))
    _write_csv(cfg["out"], cfg,
               ["eps", "bergman_re", "bergman_im", "szego_fd_re", "szego_fd_im",
                "rel_err", "diag_closed_form", "closed_rel_err"], rows)
    worst = max(r[5] for r in rows)
    print(f"bergman-check[{cfg['domain']}]: max relation error {worst:.3e} -> {cfg['out']}")
    return 0


def _cmd_envelope(args) -> int:
    defaults = {"domain": args.domain, "pairs": 50, "eps": 0.5,
                "out": "envelope.csv", "seed": 0}
    cfg = _resolve(args, defaults, ["domain", "pairs", "eps", "out", "seed"])
    profile = _domain_profile(cfg["domain"])
    report = growth_envelope(profile, n_pairs=cfg["pairs"], eps=cfg["eps"], seed=cfg["seed"])
    rows = [(r["x_a"], r["t_a"], r["x_b"], r["t_b"], r["abs_kernel"],
             r["d_eps"], r["ball_volume"], r["ratio"]) for r in report.rows]
    _write_csv(cfg["out"], cfg,
               ["x_a", "t_a", "x_b", "t_b", "abs_kernel", "d_eps", "ball_volume", "ratio"],
               rows, extra_header=[f"max_ratio {_fmt(report.max_ratio)}"])
    print(f"envelope[{cfg['domain']}]: {len(rows)} pairs, max ratio {report.max_ratio:.6g} "
          f"-> {cfg['out']}")
    return 0


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
