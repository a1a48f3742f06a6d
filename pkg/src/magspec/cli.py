"""Command-line interface: model constants, eigensolves, certificates,
parameter scans, and decay post-processing."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from magspec import agmon, bounds, experiments
from magspec import degennes
from magspec.domains import build_grid, domain_from_json
from magspec.fields import field_from_json
from magspec.magop import assemble, lowest_eigenpair


def _parse_range(text: str):
    """lo:hi:n -> n evenly spaced values (n=1 gives lo)."""
    lo, hi, n = text.split(":")
    lo, hi, n = float(lo), float(hi), int(n)
    if n < 1:
        raise ValueError("range count must be >= 1")
    return [lo] if n == 1 else list(np.linspace(lo, hi, n))


def _load_json(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def _write_json(path: str | None, payload: dict):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _cmd_degennes(args) -> int:
    disc = degennes.HalfLineDiscretization(truncation=args.T, step=args.h)
    ref = degennes.minimize_mu(disc, tol_xi=args.tol)
    payload = {
        "xi0": ref.xi0,
        "theta0": ref.theta0,
        "bracket": list(ref.bracket),
        "discretization": {"truncation": ref.disc.truncation, "step": ref.disc.step},
        "tail_table": {
            f"{t:.1f}": ref.u0.tail_mass(t) for t in (2.0, 3.0, 5.0, 8.0)
        },
    }
    _write_json(args.out, payload)
    if args.curve:
        xs = _parse_range(args.curve)
        lines = ["xi,mu"]
        for xi in xs:
            lines.append(f"{xi:.12g},{degennes.mu_of_xi(xi, disc=ref.disc).mu:.12g}")
        text = "\n".join(lines) + "\n"
        if args.curve_out:
            with open(args.curve_out, "w") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
    return 0


def _cmd_eig(args) -> int:
    dom = domain_from_json(_load_json(args.domain))
    fs = field_from_json(_load_json(args.field))
    grid = build_grid(dom, args.h)
    op = assemble(dom, fs, args.q, bc=args.bc, grid=grid)
    res = lowest_eigenpair(op, tol=args.tol)
    payload = {
        "eigenvalue": res.value,
        "eigenvalue_next": res.value_next,
        "residual": res.residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "q": args.q, "bc": args.bc, "h": grid.h, "n_nodes": grid.n_nodes,
        "domain": _load_json(args.domain),
        "field": _load_json(args.field),
    }
    if args.vec_out:
        flat = np.empty(2 * grid.n_nodes)
        flat[0::2] = res.vector.real
        flat[1::2] = res.vector.imag
        flat.astype("<f8").tofile(args.vec_out)
        with open(args.vec_out + ".index.json", "w") as f:
            json.dump({"n_nodes": grid.n_nodes, "h": grid.h,
                       "coords": grid.coords.tolist()}, f)
        payload["vector_file"] = args.vec_out
    _write_json(args.out, payload)
    return 0 if res.converged else 1


def _cmd_quasimode(args) -> int:
    dom = domain_from_json(_load_json(args.domain))
    fs = field_from_json(_load_json(args.field))
    grid = build_grid(dom, args.h)
    op = assemble(dom, fs, args.q, grid=grid)
    rep = bounds.build_quasimode(op, field_spec=fs, mode=args.mode, delta=args.delta)
    _write_json(args.out, {
        "certificate": rep.certificate,
        "certificate_over_q": rep.certificate / args.q,
        "mode": rep.mode,
        "extras": rep.extras,
        "q": args.q, "h": grid.h,
    })
    return 0


def _scan_csv(rows, path):
    cols = ["q", "tau_or_R", "lambda", "certificate", "lower_rhs",
            "upper_rhs", "h", "residual"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(experiments._fmt(r[c]) for c in cols))
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _cmd_scan_helical(args) -> int:
    qts = _parse_range(args.qtau)
    cfg = experiments.ExperimentConfig(
        scenario="helical", qs=tuple(qts), x=args.x, c0=args.c0,
        rotations=args.rotations, out_csv=args.out or "helical.csv",
    )
    manifest = experiments.run(cfg)
    return 0 if manifest.all_converged else 1


def _cmd_scan_domain(args) -> int:
    rs = _parse_range(args.R)
    cfg = experiments.ExperimentConfig(
        scenario="large_domain", qs=(args.q,), Rs=tuple(rs), y=args.y,
        c0=args.c0, h=args.h, out_csv=args.out or "domain.csv",
    )
    manifest = experiments.run(cfg)
    return 0 if manifest.all_converged else 1


def _cmd_agmon(args) -> int:
    eig = _load_json(args.eig)
    if "vector_file" not in eig:
        raise SystemExit("eig.json has no vector_file; rerun eig with --vec-out")
    dom = domain_from_json(eig["domain"])
    fs = field_from_json(eig["field"])
    grid = build_grid(dom, eig["h"])
    flat = np.fromfile(eig["vector_file"], dtype="<f8")
    u = flat[0::2] + 1j * flat[1::2]
    if len(u) != grid.n_nodes:
        raise SystemExit("eigenvector length does not match the rebuilt grid")
    q = eig["q"]
    mu = eig["eigenvalue"]
    mu0 = lowest_eigenpair(assemble(dom, fs, q, bc="dirichlet", grid=grid)).value
    eps = 1.0
    alpha = args.alpha_frac * agmon.admissible_alpha(mu, mu0, eps)
    gamma = 4.0 / np.sqrt(q) if args.gamma == "auto" else float(args.gamma)
    w = agmon.make_weight(grid, gamma, alpha)
    lhs = agmon.weighted_h1_norm(u, w, grid)
    rhs = agmon.agmon_rhs(mu, mu0, eps, gamma, alpha)
    rate = np.sqrt((1.0 - degennes.THETA0) * q)
    window = None if args.window == "auto" else tuple(
        float(v) for v in args.window.split(":")
    )
    rep = agmon.fit_decay(u, grid, window=window, theoretical_rate=rate,
                          weighted_h1=lhs, rhs_bound=rhs)
    # shell table for the CSV
    d = grid.distances()
    edges = np.linspace(rep.fit_window[0], rep.fit_window[1], 25)
    lines = ["d_shell,max_abs_u,log_max,fitted_slope,theoretical_rate"]
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (d >= lo) & (d < hi)
        if not np.any(sel):
            continue
        mx = float(np.max(np.abs(u[sel])))
        lines.append(
            f"{0.5 * (lo + hi):.12g},{mx:.12g},{np.log(max(mx, 1e-300)):.12g},"
            f"{rep.fitted_slope:.12g},{rate:.12g}"
        )
    text = "\n".join(lines) + "\n"
    if args.out is None or args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)
    return 0 if lhs <= rhs else 1


def _cmd_run(args) -> int:
    cfg = experiments.ExperimentConfig.from_json(_load_json(args.config))
    if args.threads is not None:
        cfg = experiments.ExperimentConfig.from_json(
            {**cfg.to_json(), "threads": args.threads}
        )
    if args.dry_run:
        sys.stdout.write(json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n")
        return 0
    manifest = experiments.run(cfg)
    sys.stdout.write(json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n")
    return 0 if manifest.all_converged else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magspec")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("degennes", help="half-line model constants")
    d.add_argument("--tol", type=float, default=1e-6)
    d.add_argument("--h", type=float, default=1e-3)
    d.add_argument("--T", type=float, default=20.0)
    d.add_argument("--out", default=None)
    d.add_argument("--curve", default=None, metavar="lo:hi:n")
    d.add_argument("--curve-out", default=None)
    d.set_defaults(fn=_cmd_degennes)

    e = sub.add_parser("eig", help="lowest eigenpair on a domain")
    e.add_argument("--domain", required=True)
    e.add_argument("--field", required=True)
    e.add_argument("--q", type=float, required=True)
    e.add_argument("--bc", choices=("neumann", "dirichlet"), default="neumann")
    e.add_argument("--h", type=float, required=True)
    e.add_argument("--tol", type=float, default=1e-8)
    e.add_argument("--out", default=None)
    e.add_argument("--vec-out", default=None)
    e.set_defaults(fn=_cmd_eig)

    qm = sub.add_parser("quasimode", help="Rayleigh certificate from a trial state")
    qm.add_argument("--domain", required=True)
    qm.add_argument("--field", required=True)
    qm.add_argument("--q", type=float, required=True)
    qm.add_argument("--h", type=float, required=True)
    qm.add_argument("--mode", choices=("band", "patch"), default="band")
    qm.add_argument("--delta", type=float, default=1.0 / 3.0)
    qm.add_argument("--out", default=None)
    qm.set_defaults(fn=_cmd_quasimode)

    sh = sub.add_parser("scan-helical", help="mu* scan over twists")
    sh.add_argument("--qtau", required=True, metavar="lo:hi:n")
    sh.add_argument("--x", type=float, default=0.0)
    sh.add_argument("--c0", type=float, default=1.0)
    sh.add_argument("--rotations", type=int, default=16)
    sh.add_argument("--out", default=None)
    sh.set_defaults(fn=_cmd_scan_helical)

    sd = sub.add_parser("scan-domain", help="eigenvalue scan over dilations")
    sd.add_argument("--q", type=float, required=True)
    sd.add_argument("--R", required=True, metavar="lo:hi:n")
    sd.add_argument("--y", type=float, default=None)
    sd.add_argument("--c0", type=float, default=1.0)
    sd.add_argument("--h", type=float, default=None)
    sd.add_argument("--out", default=None)
    sd.set_defaults(fn=_cmd_scan_domain)

    ag = sub.add_parser("agmon", help="decay post-processing of an eigenvector")
    ag.add_argument("--eig", required=True)
    ag.add_argument("--gamma", default="auto")
    ag.add_argument("--alpha-frac", type=float, default=0.5)
    ag.add_argument("--window", default="auto", metavar="lo:hi")
    ag.add_argument("--out", default=None)
    ag.set_defaults(fn=_cmd_agmon)

    r = sub.add_parser("run", help="config-driven scan")
    r.add_argument("--config", required=True)
    r.add_argument("--threads", type=int, default=None)
    r.add_argument("--dry-run", action="store_true")
    r.set_defaults(fn=_cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
