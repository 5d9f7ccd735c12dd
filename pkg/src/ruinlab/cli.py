"""Command-line front end.

Subcommands: limits, simulate, oracle, converge, identities,
audit-coupling.  CSV goes to --out (stdout otherwise), sidecar metadata to
<out>.meta, and --fig-dir renders PNG figures alongside the delimited
output.  Exit status: 0 success, 1 identity/audit failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import harness, laws, oracle, walk


def _add_common(sp, *, samples=True):
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--moment", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    if samples:
        sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--out", type=str, default=None)
    sp.add_argument("--config", type=str, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--tol-series", type=float, default=None,
                    help="absolute tolerance for series evaluation")
    sp.add_argument("--tol-quad", type=float, default=None,
                    help="relative tolerance for quadrature")
    sp.add_argument("--fig-dir", type=str, default=None,
                    help="render figures into this directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="ruinlab")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("limits", help="evaluate limit CDFs/moments/transforms on grids")
    _add_common(sp, samples=False)

    sp = sub.add_parser("simulate", help="raw batched moment estimate")
    _add_common(sp)
    sp.add_argument("--radius", type=int, action="append", default=None)
    sp.add_argument("--horizon", type=int, action="append", default=None)

    sp = sub.add_parser("oracle", help="exact absorbing-chain values")
    _add_common(sp, samples=False)
    sp.add_argument("--radius", type=int, action="append", default=None)

    sp = sub.add_parser("converge", help="finite-size sweep against the limit")
    _add_common(sp)
    sp.add_argument("--radius", type=int, action="append", default=None)
    sp.add_argument("--horizon", type=int, action="append", default=None)

    sp = sub.add_parser("identities", help="run the deterministic identity suite")
    _add_common(sp, samples=False)

    sp = sub.add_parser("audit-coupling", help="count coupling-inequality violations")
    _add_common(sp)
    sp.add_argument("--radius", type=int, action="append", default=None)
    sp.add_argument("--horizon", type=int, action="append", default=None)

    return parser


def _merged(args, section):
    """Config-file values with explicit flags winning."""
    merged = {}
    if args.config:
        cfg = harness.load_config(args.config)
        merged.update(cfg.get(section, {}))
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        merged[key.replace("_", "-")] = value
    return merged


def _get(merged, key, cast, default):
    if key in merged:
        raw = merged[key]
        if isinstance(raw, list):
            return [cast(v) for v in raw]
        if isinstance(raw, str) and cast is not str:
            if "," in raw:
                return [cast(v) for v in raw.split(",")]
            return cast(raw)
        return raw
    return default


def _as_list(value):
    if value is None:
        return None
    return value if isinstance(value, list) else [value]


def _configs(merged):
    series = laws.SeriesConfig(abs_tol=_get(merged, "tol-series", float, 1e-14))
    quad = laws.QuadratureConfig(rel_tol=_get(merged, "tol-quad", float, 1e-9))
    return series, quad


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_meta(out, meta_text):
    if out:
        Path(str(out) + ".meta").write_text(meta_text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    merged = _merged(args, args.command)
    series, quad = _configs(merged)
    dim = _get(merged, "dim", int, 1)
    seed = _get(merged, "seed", int, 0)
    out = _get(merged, "out", str, None)
    fig_dir = _get(merged, "fig-dir", str, None)
    if fig_dir:
        os.makedirs(fig_dir, exist_ok=True)

    if args.command == "limits":
        rows = harness.limits_table(dim, series, quad)
        text = "quantity,dim,arg,value\n" + "".join(
            f"{q},{d},{harness._fmt(a)},{harness._fmt(v)}\n" for q, d, a, v in rows)
        _emit(text, out)
        if fig_dir:
            from . import figures
            figures.save_limits_figure(dim, Path(fig_dir) / "limits.png", series)
        return 0

    if args.command == "simulate":
        radius = _as_list(_get(merged, "radius", int, None))
        horizon = _as_list(_get(merged, "horizon", int, None))
        if bool(radius) == bool(horizon):
            print("simulate needs exactly one of --radius/--horizon", file=sys.stderr)
            return 2
        kind = "exit_moment" if radius else "max_moment"
        params = radius or horizon
        p = _get(merged, "moment", int, 1)
        n = _get(merged, "samples", int, 100_000)
        workers = _get(merged, "workers", int, 1)
        lines = ["kind,dim,param,p,n_samples,seed,mean,std_error,scale"]
        for param in params:
            est = walk.batch_estimate(kind, dim, param, p, n, seed, workers=workers)
            lines.append(",".join([kind, str(dim), str(param), str(p), str(n), str(seed),
                                   harness._fmt(est.mean), harness._fmt(est.std_error),
                                   harness._fmt(est.scale)]))
        _emit("\n".join(lines) + "\n", out)
        return 0

    if args.command == "oracle":
        radius = _as_list(_get(merged, "radius", int, None))
        if not radius:
            print("oracle needs --radius", file=sys.stderr)
            return 2
        p = _get(merged, "moment", int, 1)
        lines = ["kind,dim,radius,p,value,error_bound"]
        for r in radius:
            if p == 1:
                val = oracle.expected_exit_exact(dim, r)
                lines.append(f"expected_exit,{dim},{r},1,{harness._fmt(val)},0")
            else:
                m = oracle.exit_moment_exact(dim, r, p)
                lines.append(f"exit_moment,{dim},{r},{p},{harness._fmt(m.value)},"
                             f"{harness._fmt(m.error_bound)}")
        _emit("\n".join(lines) + "\n", out)
        return 0

    if args.command == "converge":
        radius = _as_list(_get(merged, "radius", int, None))
        horizon = _as_list(_get(merged, "horizon", int, None))
        if bool(radius) == bool(horizon):
            print("converge needs exactly one of --radius/--horizon", file=sys.stderr)
            return 2
        kind = "exit_converge" if radius else "max_converge"
        p = _get(merged, "moment", int, 1)
        plan = harness.ExperimentPlan(
            kind=kind, dim=dim, p_list=(p,),
            param_list=tuple(radius or horizon),
            n_samples=_get(merged, "samples", int, 100_000),
            seed=seed, workers=_get(merged, "workers", int, 1),
            series=series, quad=quad)
        tables = (harness.run_exit_converge(plan) if kind == "exit_converge"
                  else harness.run_max_converge(plan))
        rows = tables[p]
        _emit(harness.converge_csv(rows), out)
        _write_meta(out, harness.meta_block(plan, p))
        if fig_dir:
            from . import figures
            figures.save_convergence_figure(rows, p, kind,
                                            Path(fig_dir) / f"converge_p{p}.png")
        return 0

    if args.command == "identities":
        checks = harness.run_identities(series, quad)
        lines = ["name,residual,tolerance,status"]
        for c in checks:
            lines.append(f"{c.name},{harness._fmt(c.residual)},{harness._fmt(c.tolerance)},"
                         f"{'pass' if c.passed else 'FAIL'}")
        _emit("\n".join(lines) + "\n", out)
        return 0 if all(c.passed for c in checks) else 1

    if args.command == "audit-coupling":
        radius = _get(merged, "radius", int, 3)
        radius = radius[0] if isinstance(radius, list) else radius
        horizon = _get(merged, "horizon", int, 100)
        horizon = horizon[0] if isinstance(horizon, list) else horizon
        n = _get(merged, "samples", int, 10_000)
        bad = harness.run_coupling_audit(dim, radius, horizon, n, seed)
        _emit(f"violations,{bad}\n", out)
        return 0 if bad == 0 else 1

    return 2


if __name__ == "__main__":
    sys.exit(main())
