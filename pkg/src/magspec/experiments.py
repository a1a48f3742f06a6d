"""Configuration-driven scans over field strengths, twists, and dilations.

A scan is described by a JSON-serializable config, executed job by job
(assemble, eigensolve, certificate, bound evaluation, decay post-
processing), and emitted as a deterministic CSV plus a JSON manifest and
an optional SVG line plot of lambda/q against q.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from magspec import __version__, agmon, bounds, degennes
from magspec.domains import build_grid, domain_from_json, scale_domain
from magspec.fields import field_from_json
from magspec.magop import assemble, lowest_eigenpair

_SCENARIOS = ("asymptotic", "helical", "large_domain", "agmon")

_COLUMNS = {
    "asymptotic": ["q", "tau_or_R", "lambda", "certificate", "lower_rhs",
                   "upper_rhs", "h", "residual"],
    "helical": ["q", "tau_or_R", "lambda", "certificate", "lower_rhs",
                "upper_rhs", "h", "residual"],
    "large_domain": ["q", "tau_or_R", "lambda", "certificate", "lower_rhs",
                     "upper_rhs", "h", "residual"],
    "agmon": ["q", "fitted_slope", "theoretical_rate", "weighted_h1",
              "rhs_bound", "mass_fraction", "h", "residual"],
}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    domain: dict = field(default_factory=lambda: {"type": "disk", "radius": 1.0})
    field_spec: dict = field(default_factory=lambda: {"type": "linear", "b0": [0, 0, 1.0]})
    qs: tuple = ()
    taus: tuple | None = None
    x: float | None = None
    Rs: tuple | None = None
    y: float | None = None
    c0: float = 1.0
    h: float | None = None  # None = auto policy 0.4/sqrt(max q)
    tol: float = 1e-8
    rotations: int = 16
    seed: int = 0
    threads: int = 1
    quasimode_mode: str = "band"
    out_csv: str = "scan.csv"
    out_svg: str | None = None
    out_manifest: str | None = None

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if len(self.qs) == 0:
            raise ValueError("empty parameter grid")
        if self.scenario == "helical":
            if self.taus is None and self.x is None:
                raise ValueError("helical scenario needs taus or a regime pair (x, c0)")
            for qtau, tau in zip(self.qs, self.tau_values()):
                if self.x is not None and tau > self.c0 * qtau**self.x * (1 + 1e-12):
                    raise ValueError(
                        f"regime violated: tau={tau} > c0*(q*tau)^x at q*tau={qtau}"
                    )
        if self.scenario == "large_domain":
            if self.Rs is None:
                raise ValueError("large_domain scenario needs Rs")
            if self.y is not None:
                q = self.qs[0]
                for R in self.Rs:
                    if R > self.c0 * q**self.y * (1 + 1e-12):
                        raise ValueError(f"regime violated: R={R} > c0*q^y at q={q}")

    def tau_values(self):
        if self.taus is not None:
            return tuple(self.taus)
        return tuple(self.c0 * qtau**self.x for qtau in self.qs)

    def grid_spacing(self) -> float:
        if self.h is not None:
            return self.h
        return 0.4 / np.sqrt(max(self.qs))

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario, "domain": self.domain,
            "field": self.field_spec, "qs": list(self.qs),
            "taus": None if self.taus is None else list(self.taus),
            "x": self.x, "Rs": None if self.Rs is None else list(self.Rs),
            "y": self.y, "c0": self.c0, "h": self.h, "tol": self.tol,
            "rotations": self.rotations, "seed": self.seed,
            "threads": self.threads, "quasimode_mode": self.quasimode_mode,
            "out_csv": self.out_csv, "out_svg": self.out_svg,
            "out_manifest": self.out_manifest,
        }

    @classmethod
    def from_json(cls, spec: dict) -> "ExperimentConfig":
        return cls(
            scenario=spec["scenario"],
            domain=spec.get("domain", {"type": "disk", "radius": 1.0}),
            field_spec=spec.get("field", {"type": "linear", "b0": [0, 0, 1.0]}),
            qs=tuple(spec.get("qs", ())),
            taus=tuple(spec["taus"]) if spec.get("taus") is not None else None,
            x=spec.get("x"),
            Rs=tuple(spec["Rs"]) if spec.get("Rs") is not None else None,
            y=spec.get("y"),
            c0=spec.get("c0", 1.0),
            h=spec.get("h"),
            tol=spec.get("tol", 1e-8),
            rotations=spec.get("rotations", 16),
            seed=spec.get("seed", 0),
            threads=spec.get("threads", 1),
            quasimode_mode=spec.get("quasimode_mode", "band"),
            out_csv=spec.get("out_csv", "scan.csv"),
            out_svg=spec.get("out_svg"),
            out_manifest=spec.get("out_manifest"),
        )

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    versions: dict
    theta0: float
    scenario: str
    jobs: list
    exponents: dict | None = None

    def to_json(self) -> dict:
        return {
            "config_hash": self.config_hash, "versions": self.versions,
            "theta0": self.theta0, "scenario": self.scenario,
            "jobs": self.jobs, "exponents": self.exponents,
        }

    @property
    def all_converged(self) -> bool:
        return all(j["status"] == "ok" for j in self.jobs)


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _box3(dom):
    """Domain bounding box padded to 3D for field-seminorm sampling."""
    lo, hi = dom.bounding_box()
    lo3, hi3 = np.zeros(3), np.zeros(3)
    lo3[: dom.dim] = lo
    hi3[: dom.dim] = hi
    return lo3, hi3


def _job_asymptotic(cfg: ExperimentConfig, q: float) -> dict:
    dom = domain_from_json(cfg.domain)
    fs = field_from_json(cfg.field_spec)
    grid = build_grid(dom, cfg.grid_spacing())
    op = assemble(dom, fs, q, grid=grid)
    res = lowest_eigenpair(op, tol=cfg.tol)
    rep = bounds.build_quasimode(op, field_spec=fs, mode=cfg.quasimode_mode)
    params = bounds.params_from_field(fs, _box3(dom))
    brep = bounds.bound_report(q, params)
    return {
        "q": q, "tau_or_R": 0.0, "lambda": res.value,
        "certificate": rep.certificate, "lower_rhs": brep.lower,
        "upper_rhs": brep.upper, "h": grid.h, "residual": res.residual,
        "_converged": res.converged,
    }


def _job_helical(cfg: ExperimentConfig, qtau: float, tau: float) -> dict:
    scan = bounds.helical_mu_star(
        q=qtau / tau, tau=tau, n_rotations=cfg.rotations, h=cfg.h
    )
    eps, delta = bounds.choose_exponents(Fraction(cfg.x).limit_denominator(1000)
                                         if cfg.x is not None else 0)
    params = bounds.BoundParams(C=1.0, sup_gradB=tau, c1_sq=1 + tau**2,
                                c2_sq=1 + tau**2 + tau**4)
    return {
        "q": qtau, "tau_or_R": tau, "lambda": scan.mu_star,
        "certificate": float("nan"),
        "lower_rhs": bounds.lower_bound_rhs(qtau, params, eps),
        "upper_rhs": bounds.upper_bound_rhs(qtau, params, delta),
        "h": 0.35 / np.sqrt(max(qtau, 1.0)) if cfg.h is None else cfg.h,
        "residual": 0.0, "_converged": True,
    }


def _job_large_domain(cfg: ExperimentConfig, q: float, R: float) -> dict:
    dom = domain_from_json(cfg.domain)
    fs = field_from_json(cfg.field_spec)
    big = scale_domain(dom, R)
    grid = build_grid(big, cfg.grid_spacing() * R)
    op = assemble(big, fs, q, grid=grid)
    res = lowest_eigenpair(op, tol=cfg.tol)
    params = bounds.params_from_field(fs, _box3(big))
    brep = bounds.bound_report(q, params)
    return {
        "q": q, "tau_or_R": R, "lambda": res.value,
        "certificate": float("nan"), "lower_rhs": brep.lower,
        "upper_rhs": brep.upper, "h": grid.h, "residual": res.residual,
        "_converged": res.converged,
    }


def _job_agmon(cfg: ExperimentConfig, q: float) -> dict:
    dom = domain_from_json(cfg.domain)
    fs = field_from_json(cfg.field_spec)
    grid = build_grid(dom, cfg.grid_spacing())
    res = lowest_eigenpair(assemble(dom, fs, q, grid=grid), tol=cfg.tol)
    resd = lowest_eigenpair(assemble(dom, fs, q, bc="dirichlet", grid=grid),
                            tol=cfg.tol)
    eps = 1.0
    alpha = 0.5 * agmon.admissible_alpha(res.value, resd.value, eps)
    gamma = 4.0 / np.sqrt(q)
    w = agmon.make_weight(grid, gamma, alpha)
    lhs = agmon.weighted_h1_norm(res.vector, w, grid)
    rhs = agmon.agmon_rhs(res.value, resd.value, eps, gamma, alpha)
    rate = np.sqrt((1.0 - degennes.THETA0) * q)
    rep = agmon.fit_decay(res.vector, grid, theoretical_rate=rate,
                          weighted_h1=lhs, rhs_bound=rhs)
    mass = agmon.boundary_mass_fraction(res.vector, grid, 5.0 / np.sqrt(q))
    return {
        "q": q, "fitted_slope": rep.fitted_slope,
        "theoretical_rate": rate, "weighted_h1": lhs, "rhs_bound": rhs,
        "mass_fraction": mass, "h": grid.h, "residual": res.residual,
        "_converged": res.converged and resd.converged,
    }


def run(config: ExperimentConfig) -> RunManifest:
    """Execute the scan, write the CSV (and optional SVG/manifest files)."""
    jobs = []
    rows = []
    if config.scenario == "asymptotic":
        tasks = [("q=" + _fmt(q), lambda q=q: _job_asymptotic(config, q))
                 for q in config.qs]
    elif config.scenario == "helical":
        tasks = [
            (f"qtau={_fmt(qt)}", lambda qt=qt, t=t: _job_helical(config, qt, t))
            for qt, t in zip(config.qs, config.tau_values())
        ]
    elif config.scenario == "large_domain":
        q = config.qs[0]
        tasks = [(f"R={_fmt(R)}", lambda R=R: _job_large_domain(config, q, R))
                 for R in config.Rs]
    else:
        tasks = [("q=" + _fmt(q), lambda q=q: _job_agmon(config, q))
                 for q in config.qs]

    for jid, fn in tasks:
        t0 = time.perf_counter()
        try:
            row = fn()
            status = "ok" if row.pop("_converged", True) else "not-converged"
            rows.append(row)
        except Exception as exc:  # record, do not abort the scan
            status = f"failed: {type(exc).__name__}: {exc}"
        jobs.append({"id": jid, "status": status,
                     "wall_time": time.perf_counter() - t0})

    cols = _COLUMNS[config.scenario]
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in cols])
    _atomic_write(config.out_csv, buf.getvalue())

    exponents = None
    if config.scenario == "helical":
        x = Fraction(config.x).limit_denominator(1000) if config.x is not None else Fraction(0)
        eps, delta = bounds.choose_exponents(x)
        exponents = {"x": str(x), "eps": str(eps), "delta": str(delta)}

    import scipy

    manifest = RunManifest(
        config_hash=config.config_hash(),
        versions={"magspec": __version__, "numpy": np.__version__,
                  "scipy": scipy.__version__},
        theta0=degennes.THETA0,
        scenario=config.scenario,
        jobs=jobs,
        exponents=exponents,
    )
    if config.out_manifest:
        _atomic_write(config.out_manifest,
                      json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n")
    if config.out_svg and len(rows) >= 2 and "lambda" in cols:
        emit_svg(rows, config.out_svg, theta0=manifest.theta0)
    return manifest


def emit_svg(rows, path: str, theta0: float = degennes.THETA0):
    """Deterministic SVG line plot of lambda/q against q, with the model
    constant drawn as a horizontal reference line."""
    if len(rows) < 2:
        raise ValueError("need at least 2 rows to plot")
    qs = [float(r["q"]) for r in rows]
    ys = [float(r["lambda"]) / float(r["q"]) for r in rows]
    w_px, h_px, margin = 480, 320, 50
    x_lo, x_hi = min(qs), max(qs)
    y_lo = min(min(ys), theta0) - 0.05
    y_hi = max(max(ys), theta0) + 0.05

    def sx(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * (w_px - 2 * margin)

    def sy(y):
        return h_px - margin - (y - y_lo) / (y_hi - y_lo) * (h_px - 2 * margin)

    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(qs, ys))
    ref = sy(theta0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px}" height="{h_px}">',
        f'<rect width="{w_px}" height="{h_px}" fill="white"/>',
        f'<line x1="{margin}" y1="{h_px - margin}" x2="{w_px - margin}" '
        f'y2="{h_px - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{h_px - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{ref:.2f}" x2="{w_px - margin}" y2="{ref:.2f}" '
        'stroke="gray" stroke-dasharray="4 3"/>',
        f'<text x="{w_px - margin + 4}" y="{ref + 4:.2f}" font-size="11">'
        f"theta0={theta0:.6f}</text>",
        f'<polyline points="{pts}" fill="none" stroke="blue" stroke-width="1.5"/>',
        f'<text x="{w_px / 2:.0f}" y="{h_px - 12}" font-size="12" '
        'text-anchor="middle">q</text>',
        f'<text x="14" y="{h_px / 2:.0f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {h_px / 2:.0f})">lambda/q</text>',
    ]
    for x, y in zip(qs, ys):
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="blue"/>')
    parts.append("</svg>")
    _atomic_write(path, "\n".join(parts) + "\n")
    return path
