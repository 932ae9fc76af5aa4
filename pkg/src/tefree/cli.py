"""Command-line front end.

    tefree solve            --config run.json --out results/
    tefree regions          --config run.json --out results/ [--eigs eigenvalues.csv]
    tefree dtn-check        --config run.json --out results/
    tefree parametrix-check --config run.json --out results/
    tefree count            --config run.json --out results/

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .diskmodel import DiskConfig, dtn_compare
from .errors import (BesselOverflow, ConditionViolated, ContourThroughZero, DegenerateRho, DirichletPole,
                     IncompleteSpectrum, InsufficientData, NewtonDivergence, NoConvergence,
                     PhaseJumpUnresolved, SentinelNonzeroWinding, ZoneMismatch, BranchFailure)
from .regions import RegionSpec, condition_flags, exponent_fit, in_region, weyl_compare
from .rootscan import EigRecord, ScanRegion, spectrum
from .symbolcore import BoundaryGeometry, SpectralPoint

log = logging.getLogger("tefree")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3

_NUMERIC_ERRORS = (SentinelNonzeroWinding, BesselOverflow, OverflowError, NoConvergence, PhaseJumpUnresolved,
                   ContourThroughZero, NewtonDivergence, DirichletPole, DegenerateRho, IncompleteSpectrum,
                   AssertionError, FloatingPointError)


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration


def _parse_complex(v):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    raise ConfigError(f"cannot read a complex number from {v!r}")


@dataclass
class ZoneSample:
    z: complex
    zone: str
    epsilon: float = 0.0


@dataclass
class RunConfig:
    """Validated experiment description (one JSON file)."""

    radius: float = 1.0
    media: tuple = (1.0, 1.0, 1.0, 4.0)
    rect: tuple = (1.0, 30.0, -2.0, 2.0)
    tol: float = 1e-10
    k_max: object = "auto"
    h_values: list = field(default_factory=lambda: [2.0**-j for j in range(4, 11)])
    z_samples: list = field(default_factory=lambda: [ZoneSample(-1 + 0j, "Z2")])
    jet_order: int = 4
    n_x: int = 16
    n_xi: int = 65
    xi_max: float = 3.0
    x1_exponents: tuple = (6, 7, 8, 9, 10)
    phase_delta: float = 0.05
    regions: list = field(default_factory=list)
    exponent_margin: float = 0.05
    r_values: list = field(default_factory=lambda: [10.0, 20.0, 40.0])
    eigs_file: str = ""
    prefix: str = ""
    formats: tuple = ("csv", "json", "svg")

    @property
    def disk(self):
        return DiskConfig.from_tuple(self.media, self.radius)

    @classmethod
    def from_dict(cls, d):
        cfg = cls()
        disk = d.get("disk", {})
        if "radius" in disk:
            cfg.radius = float(disk["radius"])
        if "media" in disk:
            m = disk["media"]
            if isinstance(m, dict):
                m = [m[k] for k in ("c1", "n1", "c2", "n2")]
            if len(m) != 4:
                raise ConfigError("media must hold four numbers (c1, n1, c2, n2)")
            cfg.media = tuple(float(v) for v in m)
        scan = d.get("scan", {})
        if "rect" in scan:
            cfg.rect = tuple(float(v) for v in scan["rect"])
        cfg.tol = float(scan.get("tol", cfg.tol))
        cfg.k_max = scan.get("k_max", cfg.k_max)
        semi = d.get("semiclassical", {})
        if "h" in semi:
            cfg.h_values = [float(v) for v in semi["h"]]
        if "z" in semi:
            cfg.z_samples = [ZoneSample(_parse_complex(e["z"]), str(e["zone"]), float(e.get("epsilon", 0.0)))
                             for e in semi["z"]]
        cfg.jet_order = int(semi.get("N", cfg.jet_order))
        cfg.n_x = int(semi.get("n_x", cfg.n_x))
        cfg.n_xi = int(semi.get("n_xi", cfg.n_xi))
        cfg.xi_max = float(semi.get("xi_max", cfg.xi_max))
        if "x1_exponents" in semi:
            cfg.x1_exponents = tuple(int(v) for v in semi["x1_exponents"])
        cfg.phase_delta = float(semi.get("phase_delta", cfg.phase_delta))
        cfg.regions = [RegionSpec.from_dict(r) for r in d.get("regions", [])]
        cfg.exponent_margin = float(d.get("exponent_margin", cfg.exponent_margin))
        count = d.get("count", {})
        if "r" in count:
            cfg.r_values = [float(v) for v in count["r"]]
        cfg.eigs_file = str(d.get("eigs_file", ""))
        out = d.get("outputs", {})
        cfg.prefix = str(out.get("prefix", ""))
        if "formats" in out:
            cfg.formats = tuple(out["formats"])
        cfg.validate()
        return cfg

    def validate(self):
        if not self.radius > 0:
            raise ConfigError("radius must be positive")
        if any(not v > 0 for v in self.media):
            raise ConfigError("media coefficients must be positive")
        c1, n1, c2, n2 = self.media
        if abs(c1 * n1 - c2 * n2) <= 1e-14 * max(c1 * n1, c2 * n2):
            raise ConditionViolated("(1.2)", f"c1*n1 = c2*n2 = {c1 * n1:g}")
        ScanRegion.coerce(self.rect)
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.k_max != "auto" and (int(self.k_max) != self.k_max or int(self.k_max) < 0):
            raise ConfigError("k_max must be a nonnegative integer or 'auto'")
        if any(not h > 0 for h in self.h_values):
            raise ConfigError("h values must be positive")
        if not 2 <= self.jet_order <= 8:
            raise ConfigError("jet order N must lie in [2, 8]")
        for s in self.z_samples:
            for h in self.h_values:
                SpectralPoint(h, s.z, s.zone, s.epsilon)
        bad = set(self.formats) - {"csv", "json", "svg"}
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")


def load_config(path):
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return RunConfig.from_dict(d)


# --------------------------------------------------------------------------
# writers


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path, header, rows):
    """UTF-8, comma separated, LF line ends, floats with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def write_json(path, header, rows, meta=None):
    doc = {"columns": list(header), "rows": [[_json_value(v) for v in row] for row in rows]}
    if meta:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _emit_table(cfg, out_dir, name, header, rows, meta=None):
    paths = []
    if "csv" in cfg.formats:
        p = os.path.join(out_dir, f"{cfg.prefix}{name}.csv")
        write_csv(p, header, rows)
        paths.append(p)
    if "json" in cfg.formats:
        p = os.path.join(out_dir, f"{cfg.prefix}{name}.json")
        write_json(p, header, rows, meta)
        paths.append(p)
    return paths


def svg_scatter(points, curves=(), width=640, height=480, title="", log_x=False):
    """A minimal SVG scatter plot of (x, y) points with optional polylines.

    ``curves`` is a sequence of (label, xs, ys).  The first line is a version
    comment; everything else depends only on the data.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    xs_all = [pts[:, 0]] + [np.asarray(c[1], dtype=float) for c in curves]
    ys_all = [pts[:, 1]] + [np.asarray(c[2], dtype=float) for c in curves]
    xs_all = np.concatenate(xs_all) if xs_all else np.zeros(1)
    ys_all = np.concatenate(ys_all) if ys_all else np.zeros(1)
    tx = (lambda v: np.log10(np.maximum(v, 1e-300))) if log_x else (lambda v: v)
    if xs_all.size == 0:
        xs_all, ys_all = np.zeros(1), np.zeros(1)
    x0, x1 = float(np.min(tx(xs_all))), float(np.max(tx(xs_all)))
    y0, y1 = float(np.min(ys_all)), float(np.max(ys_all))
    if x1 <= x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 <= y0:
        y0, y1 = y0 - 1, y1 + 1
    m = 50

    def px(v):
        return m + (tx(v) - x0) / (x1 - x0) * (width - 2 * m)

    def py(v):
        return height - m - (v - y0) / (y1 - y0) * (height - 2 * m)

    out = [f"<!-- tefree {__version__} -->",
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>',
           f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>',
           f'<text x="{m}" y="{m - 20}" font-size="14">{title}</text>',
           f'<text x="{m}" y="{height - m + 20}" font-size="11">{x0:.6g}</text>',
           f'<text x="{width - m}" y="{height - m + 20}" font-size="11" text-anchor="end">{x1:.6g}</text>',
           f'<text x="{m - 5}" y="{height - m}" font-size="11" text-anchor="end">{y0:.6g}</text>',
           f'<text x="{m - 5}" y="{m}" font-size="11" text-anchor="end">{y1:.6g}</text>']
    colors = ("#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    for i, (label, cx, cy) in enumerate(curves):
        cx, cy = np.asarray(cx, dtype=float), np.asarray(cy, dtype=float)
        ok = np.isfinite(cx) & np.isfinite(cy) & (cy >= y0) & (cy <= y1)
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(cx[ok], cy[ok]))
        col = colors[i % len(colors)]
        out.append(f'<polyline fill="none" stroke="{col}" points="{coords}"><title>{label}</title></polyline>')
    for a, b in pts:
        out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2" fill="#1f77b4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# commands

EIG_COLUMNS = ("re_lambda", "im_lambda", "mode", "multiplicity", "residual", "newton_iters")


def cmd_solve(cfg, out_dir, threads=1):
    spec = spectrum(cfg.disk, cfg.rect, cfg.k_max, cfg.tol, workers=threads)
    rows = [(r.lam.real, r.lam.imag, r.mode, r.multiplicity, r.residual, r.newton_iters) for r in spec]
    meta = {"k_max": spec.k_max, "sentinel_ok": spec.sentinel_ok, "media": list(cfg.media),
            "radius": cfg.radius, "rect": list(cfg.rect)}
    _emit_table(cfg, out_dir, "eigenvalues", EIG_COLUMNS, rows, meta)
    if "svg" in cfg.formats:
        with open(os.path.join(out_dir, f"{cfg.prefix}eigenvalues.svg"), "w", encoding="utf-8") as fh:
            fh.write(svg_scatter([(r.lam.real, r.lam.imag) for r in spec], title="transmission eigenvalues"))
    print(f"{len(rows)} eigenvalues (total multiplicity {spec.total_multiplicity()}), k_max = {spec.k_max}")
    return EXIT_OK


def read_eigs(path):
    """Read an eigenvalue CSV written by ``solve``."""
    recs = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return recs
        if tuple(header[:2]) != EIG_COLUMNS[:2]:
            raise ConfigError(f"{path}: unexpected header {header}")
        idx = {name: i for i, name in enumerate(header)}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                lam = complex(float(row[idx["re_lambda"]]), float(row[idx["im_lambda"]]))
                mode = int(row[idx["mode"]]) if "mode" in idx else 0
                mult = int(row[idx["multiplicity"]]) if "multiplicity" in idx else 1
                res = float(row[idx["residual"]]) if "residual" in idx else math.nan
                it = int(row[idx["newton_iters"]]) if "newton_iters" in idx else 0
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
            recs.append(EigRecord(lam, mode, mult, res, it))
    return recs


def cmd_regions(cfg, out_dir, eigs_path=None):
    path = eigs_path or cfg.eigs_file
    if not path:
        raise ConfigError("regions needs an eigenvalue file (--eigs or eigs_file)")
    if not os.path.exists(path):
        raise ConfigError(f"{path}: no such file")
    recs = read_eigs(path)
    specs = cfg.regions or [RegionSpec("LambdaPlus", C=1.0, eps=0.05)]
    lines = []
    if not recs:
        lines.append("no eigenvalues")
    header = ["re_lambda", "im_lambda"] + [f"in_{s.kind.value}" for s in specs]
    rows = [[r.lam.real, r.lam.imag] + [in_region(r.lam, s) for s in specs] for r in recs]
    _emit_table(cfg, out_dir, "regions", header, rows)
    fits = {}
    if recs:
        for branch in ("re_nonneg", "re_nonpos"):
            try:
                fits[branch] = exponent_fit(recs, branch)
            except InsufficientData as exc:
                lines.append(f"{branch}: {exc}")
        for s in specs:
            n_in = sum(1 for r in recs if in_region(r.lam, s))
            lines.append(f"{s.kind.value}: {n_in} of {len(recs)} eigenvalues inside")
        if "re_nonneg" in fits:
            f = fits["re_nonneg"]
            lines.append(f"exponent_fit re_nonneg: beta = {f.beta:.6g}, C = {f.C:.6g}")
            for p in sorted({s.exponent for s in specs if s.exponent >= 0} | {0.8}):
                verdict = "PASS" if f.accepts(p, cfg.exponent_margin) else "FAIL"
                lines.append(f"exponent_fit <= {p:g}+{cfg.exponent_margin:g}: {verdict}")
        if "re_nonpos" in fits:
            f = fits["re_nonpos"]
            lines.append(f"exponent_fit re_nonpos: beta = {f.beta:.6g}, C = {f.C:.6g}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out_dir, f"{cfg.prefix}regions_report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    if "svg" in cfg.formats:
        pos = [r for r in recs if r.lam.real >= 0]
        pts = [(r.lam.real + 1.0, abs(r.lam.imag)) for r in pos]
        xmax = max([p[0] for p in pts], default=10.0)
        xs = np.linspace(1.0, xmax, 200)
        curves = [(f"{s.kind.value} C={s.C:g}", xs, s.C * xs ** s.exponent) for s in specs
                  if s.kind.value in ("LambdaPlus", "T12_Front", "PV_Strip")]
        if "re_nonneg" in fits and math.isfinite(fits["re_nonneg"].beta):
            f = fits["re_nonneg"]
            curves.append((f"envelope fit beta={f.beta:.3g}", xs, f.C * xs ** f.beta))
        with open(os.path.join(out_dir, f"{cfg.prefix}regions.svg"), "w", encoding="utf-8") as fh:
            fh.write(svg_scatter(pts, curves, title="|Im lambda| vs Re lambda + 1"))
    return EXIT_OK


def _slope(hs, errs):
    hs, errs = np.asarray(hs, float), np.asarray(errs, float)
    ok = errs > 0
    if np.count_nonzero(ok) < 2:
        return math.nan
    return float(np.polyfit(np.log(hs[ok]), np.log(errs[ok]), 1)[0])


def _composition_rows(cfg, seed):
    """Defect of Op(1/a) Op(a) - 1 for the inversion symbol a = c1 rho1 - c2 rho2."""
    from .psido import composition_defect
    from .symbolcore import SymbolGrid, rho
    c1, n1, c2, n2 = cfg.media
    geom = BoundaryGeometry(cfg.radius)
    rows = []
    for s in cfg.z_samples:
        for h in cfg.h_values:
            M = int(min(256, math.ceil(2.0 * cfg.radius / h)))
            xi_max = 2.0 * math.pi * h * (M + 20) / geom.circumference + 1.0
            am = SymbolGrid.from_function(
                lambda X, XI: c1 * rho(XI**2, n1 / c1, s.z) - c2 * rho(XI**2, n2 / c2, s.z) + 0 * X,
                geom, 32, 2049, xi_max)
            ap = am.like(1.0 / am.values)
            rows.append((h, s.z.real, s.z.imag, M, composition_defect(ap, am, h, M, seed=seed)))
    return rows


def cmd_dtn_check(cfg, out_dir, seed=None):
    c1, n1, _, _ = cfg.media
    header = ("h", "re_z", "im_z", "err_rho", "err_rho_b", "err_transport")
    rows = []
    for s in cfg.z_samples:
        block = []
        for h in cfg.h_values:
            sp = SpectralPoint(h, s.z, s.zone, s.epsilon)
            e0 = dtn_compare(sp, c1, n1, cfg.radius, correction="none").max_error
            eb = dtn_compare(sp, c1, n1, cfg.radius, correction="lemma35").max_error
            et = dtn_compare(sp, c1, n1, cfg.radius, correction="transport").max_error
            block.append((h, s.z.real, s.z.imag, e0, eb, et))
        rows.extend(block)
        hs = [r[0] for r in block]
        rows.append(("slope", s.z.real, s.z.imag) + tuple(_slope(hs, [r[i] for r in block]) for i in (3, 4, 5)))
    _emit_table(cfg, out_dir, "dtn_check", header, rows)
    comp = _composition_rows(cfg, seed)
    _emit_table(cfg, out_dir, "composition_check", ("h", "re_z", "im_z", "M", "defect"), comp, {"seed": seed})
    for r in rows:
        if r[0] == "slope":
            print(f"z = {complex(r[1], r[2])}: slope rho {r[3]:.4f}, rho+hb {r[4]:.4f}, transport {r[5]:.4f}")
    return EXIT_OK


def cmd_parametrix_check(cfg, out_dir):
    from .parametrix import (disk_normal_jet, phase_lower_bound_check, residual_ratios, solve_eikonal,
                             solve_transport)
    c1, n1, _, _ = cfg.media
    geom = BoundaryGeometry(cfg.radius)
    x1 = 2.0 ** -np.asarray(cfg.x1_exponents, dtype=float)
    header = ("h", "re_z", "im_z", "x1", "eikonal_ratio", "transport_ratio")
    rows = []
    summary = []
    for s in cfg.z_samples:
        for h in cfg.h_values:
            sp = SpectralPoint(h, s.z, s.zone, s.epsilon)
            jet = disk_normal_jet(cfg.radius, c1, n1, cfg.jet_order)
            ph = solve_eikonal(jet, sp, geom, cfg.n_x, cfg.n_xi, cfg.xi_max)
            amp = solve_transport(jet, ph, 1.0, sp, geom)
            rr = residual_ratios(jet, ph, amp, h, x1)
            for a, e, t in zip(rr["x1"], rr["eikonal"], rr["transport"]):
                rows.append((h, s.z.real, s.z.imag, a, e, t))
            spread_e = float(np.max(rr["eikonal"]) / np.min(rr["eikonal"]))
            spread_t = float(np.max(rr["transport"]) / np.min(rr["transport"]))
            pb = phase_lower_bound_check(ph, sp, geom, cfg.phase_delta)
            rows.append(("summary", s.z.real, s.z.imag, pb.delta_star, spread_e, spread_t))
            summary.append(f"h = {h:g}, z = {s.z}: ratio spread eikonal {spread_e:.3f}, transport {spread_t:.3f}, "
                           f"phase bound at delta={pb.delta:g} {'passes' if pb.passed else 'fails'}, "
                           f"delta* = {pb.delta_star:.3f}")
    _emit_table(cfg, out_dir, "parametrix_check", header, rows)
    print("\n".join(summary))
    return EXIT_OK


def cmd_count(cfg, out_dir, threads=1):
    rmax = max(cfg.r_values)
    R2 = rmax * rmax
    spec = spectrum(cfg.disk, (-R2, R2, -R2, R2), "auto", cfg.tol, workers=threads)
    table = weyl_compare(spec, cfg.disk, cfg.r_values)
    header = ("r", "n_total", "n_total_pred", "ratio_total", "n_minus", "n_minus_pred", "ratio_minus", "complete")
    rows = [(t.r, t.n_total, t.n_total_pred, t.ratio_total, t.n_minus, t.n_minus_pred, t.ratio_minus, t.complete)
            for t in table]
    flags = condition_flags(cfg.disk.media)
    _emit_table(cfg, out_dir, "count", header, rows, {"conditions": flags.as_dict()})
    for t in table:
        print(f"r = {t.r:g}: N = {t.n_total} (ratio {t.ratio_total:.4f}), N- = {t.n_minus} (ratio {t.ratio_minus:.4f})")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser():
    p = argparse.ArgumentParser(prog="tefree", description="Transmission eigenvalues of the disk.")
    p.add_argument("command", choices=("solve", "regions", "dtn-check", "parametrix-check", "count"))
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--seed", type=int, default=None, help="seed for the power-iteration start vector (default: all ones)")
    p.add_argument("--eigs", default=None, help="eigenvalue CSV for the regions command")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    threads = args.threads if args.threads else (os.cpu_count() or 1)
    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "solve":
            return cmd_solve(cfg, args.out, threads)
        if args.command == "regions":
            return cmd_regions(cfg, args.out, args.eigs)
        if args.command == "dtn-check":
            return cmd_dtn_check(cfg, args.out, args.seed)
        if args.command == "parametrix-check":
            return cmd_parametrix_check(cfg, args.out)
        return cmd_count(cfg, args.out, threads)
    except (ConditionViolated, ConfigError, ZoneMismatch, BranchFailure, OSError, KeyError, TypeError,
            ValueError) as exc:
        if isinstance(exc, _NUMERIC_ERRORS):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
