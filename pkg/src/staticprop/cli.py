"""Command-line driver: `staticprop <command> --config <path> [--out <dir>]`.

Exit status 0 means every assertion passed, 1 that at least one failed and
2 a configuration or I/O problem.
"""

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import absorption, propagators, wick
from .block_system import assemble_blocks, charge_positivity, spectral_split
from .errors import NotPositive, ParseError, StaticPropError, ValidationError
from .model import PRESETS, assemble_L, build_model, check_assumptions, preset
from .numerics import QUADRATURE_TOL, STRUCTURAL_TOL, hermitian_eig_weighted
from .parallel import thread_count
from .timegrid import TimeGrid, random_bump

COMMANDS = ("check", "spectrum", "kernels", "identities", "lap", "wick", "report")
FIELD_KEYS = ("beta", "g_sigma", "A", "Y", "V")


@dataclass
class RunConfig:
    model: str = "M1"
    n: int | None = None
    dx: float | None = None
    boundary: str | None = None
    fields: dict = field(default_factory=dict)
    T: float = 4.0
    s: float = 1.0
    density: float = 16.0
    quad_density: float = 128.0
    epsilons: tuple = absorption.DEFAULT_EPSILONS
    thetas: tuple = wick.DEFAULT_THETAS
    lap_times: tuple = absorption.DEFAULT_LAP_TIMES
    wick_times: tuple = wick.DEFAULT_WICK_TIMES
    absorption_z: tuple = (0.0, 0.1, -0.1, 1.0, -1.0)  # imaginary parts
    fourier_z: float = 0.5  # imaginary part
    resolvent_z: float = -0.05  # imaginary part
    kernel_samples: int = 41
    seed: int = 0
    structural_tol: float = STRUCTURAL_TOL
    quadrature_tol: float = QUADRATURE_TOL
    out: str | None = None

    def build_model(self):
        overrides = dict(self.fields)
        for key in ("n", "dx", "boundary"):
            if getattr(self, key) is not None:
                overrides[key] = getattr(self, key)
        if self.model == "custom":
            if "n" not in overrides:
                raise ValidationError("a custom model needs n")
            return build_model(name="custom", **overrides)
        return preset(self.model, **overrides)

    def grid(self):
        return TimeGrid(T=self.T, density=self.density, s=self.s, quad_density=self.quad_density)


_SCALARS = {
    "model": str, "n": int, "dx": float, "boundary": str, "T": float, "s": float,
    "density": float, "quad_density": float, "fourier_z": float, "resolvent_z": float,
    "kernel_samples": int, "seed": int, "structural_tol": float, "quadrature_tol": float,
    "out": str,
}
_ARRAYS = ("epsilons", "thetas", "lap_times", "wick_times", "absorption_z")


def _floats(raw, lineno):
    try:
        return tuple(float(x) for x in raw.split(","))
    except ValueError:
        raise ParseError(f"expected comma-separated numbers, got {raw!r}", lineno) from None


def parse_config(text):
    """Parse `key = value` lines into a validated RunConfig."""
    values = {}
    model_fields = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if not raw:
            raise ParseError(f"missing value for {key!r}", lineno)
        if key in values or key in model_fields:
            raise ParseError(f"duplicate key {key!r}", lineno)
        if key in FIELD_KEYS:
            vals = _floats(raw, lineno)
            model_fields[key] = vals[0] if len(vals) == 1 else np.array(vals)
        elif key in _ARRAYS:
            values[key] = _floats(raw, lineno)
        elif key in _SCALARS:
            try:
                values[key] = _SCALARS[key](raw)
            except ValueError:
                raise ParseError(f"bad value {raw!r} for {key!r}", lineno) from None
        else:
            raise ParseError(f"unknown key {key!r}", lineno)
    cfg = RunConfig(fields=model_fields, **values)
    validate(cfg)
    return cfg


def _descending_positive(name, seq, upper=None):
    arr = np.asarray(seq, dtype=float)
    if arr.size == 0:
        raise ValidationError(f"{name} must not be empty")
    if np.any(arr <= 0):
        raise ValidationError(f"{name} must be strictly positive")
    if np.any(np.diff(arr) >= 0):
        raise ValidationError(f"{name} must be strictly descending")
    if upper is not None and np.any(arr > upper):
        raise ValidationError(f"{name} must not exceed {upper:g}")


def validate(cfg):
    """Check the RunConfig invariants; raises ValidationError."""
    if cfg.model not in PRESETS and cfg.model != "custom":
        raise ValidationError(f"model must be one of {sorted(PRESETS)} or 'custom'")
    if not cfg.s > 0.5:
        raise ValidationError("s must exceed 1/2")
    if not cfg.T > 0:
        raise ValidationError("T must be positive")
    if cfg.density < 1 or cfg.quad_density < 1:
        raise ValidationError("densities must be at least 1")
    _descending_positive("epsilons", cfg.epsilons)
    _descending_positive("thetas", cfg.thetas, upper=np.pi / 2)
    if len(cfg.epsilons) < 2 or len(cfg.thetas) < 2:
        raise ValidationError("slope fits need at least two epsilons and two thetas")
    if cfg.kernel_samples < 2:
        raise ValidationError("kernel_samples must be at least 2")
    if not (cfg.structural_tol > 0 and cfg.quadrature_tol > 0):
        raise ValidationError("tolerances must be positive")
    try:
        cfg.build_model()
    except (StaticPropError, KeyError) as exc:
        raise ValidationError(str(exc)) from exc
    return cfg


# --------------------------------------------------------------------------
# output helpers


def _fmt(x):
    """Shortest round-trip text for a float (at most 17 significant digits)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            values = [row[h] for h in header] if isinstance(row, dict) else row
            w.writerow([_fmt(v) for v in values])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


class Checks:
    """Ordered list of named assertions for one command."""

    def __init__(self, command):
        self.command = command
        self.items = []
        self.data = {}

    def add(self, name, value, ok, limit=None):
        self.items.append({"name": name, "value": value, "limit": limit, "ok": bool(ok)})

    def at_most(self, name, value, limit):
        self.add(name, value, value <= limit, f"<= {limit:g}")

    def at_least(self, name, value, limit):
        self.add(name, value, value >= limit, f">= {limit:g}")

    def within(self, name, value, target, tol):
        self.add(name, value, abs(value - target) <= tol, f"{target:g} +- {tol:g}")

    @property
    def passed(self):
        return all(c["ok"] for c in self.items)

    def summary(self):
        return {"command": self.command, "passed": self.passed, "checks": self.items, "data": self.data}

    def lines(self):
        for c in self.items:
            flag = "PASS" if c["ok"] else "FAIL"
            limit = f" ({c['limit']})" if c["limit"] else ""
            yield f"[{flag}] {self.command}: {c['name']} = {_fmt(c['value'])}{limit}"


# --------------------------------------------------------------------------
# commands


def cmd_check(cfg, out):
    ch = Checks("check")
    m = cfg.build_model()
    rep = check_assumptions(m, tol=cfg.structural_tol)
    ch.data["assumptions"] = rep.as_dict()
    ch.data["C"] = rep.min_eig_l_minus_v2
    ch.add("beta bounds", rep.beta_bound, rep.beta_bounds_ok, "> 0")
    ch.add("Y nonnegative", rep.y_min, rep.y_nonnegative, ">= 0")
    ch.at_most("L hermitian residual", rep.l_hermitian_residual, cfg.structural_tol)
    ch.add("C = min eig(L - V^2)", rep.min_eig_l_minus_v2, rep.h_positive, "> 0")
    ch.add("min eig H", rep.min_eig_h, rep.strong_h_positive, "> 0")
    return ch


def cmd_spectrum(cfg, out):
    ch = Checks("spectrum")
    m = cfg.build_model()
    op = assemble_L(m)
    spec_l = hermitian_eig_weighted(op.matrix, op.space).values
    try:
        bs = assemble_blocks(m, op, tol=cfg.structural_tol)
    except NotPositive as exc:
        ch.add("H positive", str(exc), False)
        return ch
    split = spectral_split(bs)
    diag = split.diagnostics()
    ch.data.update(diag)
    ch.data["spec_L"] = spec_l
    ch.data["spec_B"] = split.values
    ch.add("rank Pi+ = n", diag["rank_plus"], diag["rank_plus"] == bs.n)
    ch.add("rank Pi- = n", diag["rank_minus"], diag["rank_minus"] == bs.n)
    ch.at_least("min |spec B|", float(np.abs(split.values).min()), 0.0)
    if out is not None:
        rows = [("L", i, v) for i, v in enumerate(spec_l)] + [("B", i, v) for i, v in enumerate(split.values)]
        write_csv(out / "spectrum.csv", ("operator", "index", "value"), rows)
    return ch


def _system(cfg):
    return assemble_blocks(cfg.build_model(), tol=cfg.structural_tol)


def cmd_kernels(cfg, out):
    ch = Checks("kernels")
    bs = _system(cfg)
    split = spectral_split(bs)
    times = np.linspace(-cfg.T, cfg.T, cfg.kernel_samples)
    ch.at_most("support violation", propagators.support_violation(split), cfg.structural_tol)
    if out is not None:
        header = ("t", "row", "col", "re", "im")
        for kind in propagators.ALL_KINDS:
            k = propagators.build_kernel(split, kind)
            write_csv(out / f"E_{kind.value}.csv", header, propagators.kernel_csv_rows(k, times))
            g = propagators.scalar_reduce(k, bs)
            write_csv(out / f"G_{kind.value}.csv", header, propagators.kernel_csv_rows(g, times))
    ch.data["times"] = times
    return ch


def cmd_identities(cfg, out):
    ch = Checks("identities")
    bs = _system(cfg)
    split = spectral_split(bs)
    rng = np.random.default_rng(cfg.seed)
    suite = propagators.identity_suite(split, rng.uniform(-10, 10, 32))
    ch.data["identity_suite"] = suite
    ch.at_most("identity web max residual", suite["max_residual"], cfg.structural_tol)
    ch.at_most("jump at t = 0", suite["max_jump_error"], cfg.structural_tol)
    sign, res = propagators.calibrate_sign()
    ch.add("calibrated sign", sign, sign == propagators.SIGN, f"== {propagators.SIGN}")
    ch.at_least("positivity Q Pi", min(charge_positivity(split)["min_eig_plus"],
                                       charge_positivity(split)["min_eig_minus"]), -cfg.structural_tol)
    grid = cfg.grid()
    T = min(cfg.T, 3.0)
    rows = []
    for kind in propagators.ALL_KINDS:
        k = propagators.build_kernel(split, kind)
        f2 = random_bump(rng, 2 * bs.n, T=T)
        f1 = random_bump(rng, bs.n, T=T)
        e_res = propagators.inverse_residual(k, f2, grid, bs)
        g_res = propagators.inverse_residual(propagators.scalar_reduce(k, bs), f1, grid, bs)
        rows.append({"kind": kind.value, "E_residual": e_res, "G_residual": g_res})
        ch.at_most(f"{kind.value} contract (E)", e_res, cfg.quadrature_tol)
        ch.at_most(f"{kind.value} contract (G)", g_res, cfg.quadrature_tol)
    if out is not None:
        write_csv(out / "residuals.csv", ("kind", "E_residual", "G_residual"), rows)
    return ch


def cmd_lap(cfg, out):
    ch = Checks("lap")
    m = cfg.build_model()
    bs = assemble_blocks(m, tol=cfg.structural_tol)
    C, vnorm = absorption.gap_constants(m)
    diag_rows = []
    for c in (C / 4, C / 2):
        alpha = absorption.spectral_gap(C, c, vnorm)
        worst = min(absorption.shifted_generator(bs, 1j * y).min_abs_real() for y in cfg.absorption_z)
        ch.at_least(f"gap at c = {c:g} (alpha = {alpha:.6g})", worst, alpha)
    for y in cfg.absorption_z:
        sg = absorption.shifted_generator(bs, 1j * y)
        cs = absorption.contour_projections(sg)
        orc = absorption.oracle_projections(sg)
        for split in (cs, orc):
            d = split.diagnostics()
            diag_rows.append(d)
            limit = 1e-8 if split.method == "contour" else 1e-10
            worst = max(d["idempotency"], d["completeness"], d["commutator"])
            ch.at_most(f"projection algebra z = {y:g}i ({split.method})", worst, limit)
        ch.at_most(f"contour vs oracle z = {y:g}i", absorption.projection_distance(cs, orc), 1e-6)
        bis = orc.bisection()
        ch.add(f"spectral bisection z = {y:g}i", min(bis.values()), min(bis.values()) > 0, "> 0")
    diss = absorption.dissipativity_check(bs, 0.1j)
    ch.add("dissipativity", diss.min_eig_matrix, diss.ok, "block matrix PSD and sign condition")
    for y in (0.1, -0.1):
        cr = absorption.contraction_report(absorption.shifted_generator(bs, 1j * y),
                                           np.linspace(-cfg.T, cfg.T, 17))
        ch.at_most(f"contraction z = {y:g}i", cr["max_restricted"], 1 + 1e-10)
    lap = absorption.lap_sweep(bs, cfg.epsilons, cfg.lap_times, check=False)
    ch.at_most("LAP error / bound", lap["max_ratio"], 1 + 1e-6)
    ch.within("LAP slope in epsilon", lap["slope"], 1.0, 0.1)
    sg = absorption.shifted_generator(bs, 1j * cfg.fourier_z)
    ch.at_most("Fourier oracle agreement", absorption.fourier_agreement(sg, (-1.0, 0.5, 1.0)), 1e-3)
    rng = np.random.default_rng(cfg.seed)
    f = random_bump(rng, bs.n, T=min(cfg.T, 3.0))
    res = absorption.resolvent_residual(bs, 1j * cfg.resolvent_z, f, cfg.grid())
    ch.at_most("resolvent residual", res, cfg.quadrature_tol)
    if out is not None:
        write_csv(out / "lap.csv", ("epsilon", "t", "error", "bound", "ratio"), lap["rows"])
        write_csv(out / "projections.csv", ("z", "method", "idempotency", "completeness", "commutator"),
                  diag_rows)
    return ch


def cmd_wick(cfg, out):
    ch = Checks("wick")
    bs = _system(cfg)
    split = spectral_split(bs)
    times = np.linspace(-cfg.T, cfg.T, 17)
    for theta in wick.CHECK_THETAS:
        rep = wick.contraction_check(wick.rotated_generator(split, theta), times, tol=np.inf)
        ch.at_most(f"contraction theta = {theta:.6g}", rep["max_norm"], 1 + 1e-12)
    ch.at_most("Riemannian decay", wick.riemannian_decay(split, times), 1e-8)
    ob = wick.obstruction_norm(split)
    ch.add("obstruction (t = -1, theta = pi/4)", ob, ob > 1.0, "> 1")
    sweep = wick.wick_sweep(bs, cfg.thetas, cfg.wick_times)
    for t, slope in sweep["slopes"].items():
        ch.within(f"theta slope at t = {t:g}", slope, 1.0, 0.1)
    ch.data["fittedK"] = sweep["fittedK"]
    if out is not None:
        write_csv(out / "wick.csv", ("theta", "t", "error", "fittedK", "slope"), sweep["rows"])
    return ch


RUNNERS = {
    "check": cmd_check,
    "spectrum": cmd_spectrum,
    "kernels": cmd_kernels,
    "identities": cmd_identities,
    "lap": cmd_lap,
    "wick": cmd_wick,
}


def run(command, cfg, out=None):
    """Run one command (or all for `report`); returns (exit status, list of Checks)."""
    if command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}")
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
    names = [c for c in COMMANDS if c != "report"] if command == "report" else [command]
    results = []
    for name in names:
        try:
            results.append(RUNNERS[name](cfg, out))
        except (ParseError, ValidationError):
            raise
        except (StaticPropError, AssertionError) as exc:
            # a failed precondition or bound is a failed assertion, not a usage error
            ch = Checks(name)
            ch.add(type(exc).__name__, str(exc), False)
            results.append(ch)
    if out is not None:
        for ch in results:
            with open(out / f"{ch.command}.json", "w") as fh:
                json.dump(_jsonable(ch.summary()), fh, indent=2, sort_keys=True)
        if command == "report":
            with open(out / "summary.txt", "w") as fh:
                for ch in results:
                    fh.write("\n".join(ch.lines()) + "\n")
    status = 0 if all(ch.passed for ch in results) else 1
    return status, results


def main(argv=None):
    parser = argparse.ArgumentParser(prog="staticprop", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="key = value configuration file")
    parser.add_argument("--out", help="output directory for CSV and JSON artifacts")
    args = parser.parse_args(argv)
    try:
        thread_count()
        cfg = parse_config(Path(args.config).read_text())
        out = args.out if args.out is not None else cfg.out
        status, results = run(args.command, cfg, out)
    except (ParseError, ValidationError, OSError, ValueError) as exc:
        # ValueError here can only come from STATICPROP_THREADS
        print(f"staticprop: error: {exc}", file=sys.stderr)
        return 2
    for ch in results:
        for line in ch.lines():
            print(line)
    print("PASS" if status == 0 else "FAIL")
    return status


if __name__ == "__main__":
    sys.exit(main())
