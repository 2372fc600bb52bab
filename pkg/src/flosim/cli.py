"""Command-line front end (``flosim``).

Subcommands: ``estimate`` and ``exact`` read a circuit file, ``extent`` emits
the extent comparison grid as CSV and ``selftest`` runs quick invariant checks.
Exit codes: 0 success, 2 invalid input, 3 broken internal invariant.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import click
import numpy as np

from . import __version__
from . import circuit as circ
from . import dense_oracle as do
from . import estimator as est
from . import gaussian_state as gs
from . import magic
from .errors import FlosimError, InternalError, ValidationError
from .numerics import pfaffian


@dataclass
class RunConfig:
    command: str
    circuit_path: str | None = None
    epsilon: float = 0.05
    delta: float = 0.1
    seed: int | None = None
    mode: str | None = None
    output_format: str = "json"
    p_assumed: float | str = 1.0
    dense_cap: int = do.DEFAULT_CAP
    timing: bool = False


def _num(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return f"{x:.17g}"


def to_json(obj, indent=0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v, indent + 1) for v in obj) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _num(obj)


def _estimate_report(cfg: RunConfig) -> dict:
    c = circ.load_circuit(cfg.circuit_path)
    two_stage = cfg.p_assumed == "auto"
    p_assumed = 1.0 if two_stage else float(cfg.p_assumed)
    res = est.estimate(c, cfg.epsilon, cfg.delta, seed=cfg.seed, mode=cfg.mode, p_assumed=p_assumed, two_stage=two_stage)
    rep = {"tool": "flosim", "version": __version__, "command": "estimate", "circuit": cfg.circuit_path}
    rep["two_stage"] = two_stage
    rep.update(res.to_dict(timing=cfg.timing))
    return rep


def _exact_report(cfg: RunConfig) -> dict:
    c = circ.load_circuit(cfg.circuit_path)
    p = do.dense_born(c, cap=cfg.dense_cap)
    return {"tool": "flosim", "version": __version__, "command": "exact", "circuit": cfg.circuit_path, "probability": p}


def extent_csv(points: int = 256) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "xi", "w_squared", "ratio"])
    for row in magic.extent_table(points):
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


# ------------------------------------------------------------------ selftest


def _check_pfaffian(rng):
    for d in (2, 6, 12):
        a = rng.normal(size=(d, d))
        a = a - a.T
        if abs(pfaffian(a) ** 2 - np.linalg.det(a)) > 1e-8 * abs(np.linalg.det(a)):
            return False
    return True


def _check_engine(rng):
    m = 4
    g = gs.vacuum(m)
    psi = do.vacuum_state(m)
    for _ in range(6):
        a = rng.normal(size=(2 * m, 2 * m))
        a = a - a.T
        g = gs.apply_general_flo(g, a)
        psi = do.dense_apply_flo(psi, a)
    return np.abs(gs.dense_expand(g) - psi).max() < 1e-8


def _check_magic(rng):
    for t in np.linspace(-np.pi, np.pi, 9):
        c, s = magic.branch_weights(t)
        rec = c * magic.branch_state(t, "A") + 1j * s * magic.branch_state(t, "B")
        if np.abs(rec - magic.magic_state(t)).max() > 1e-12:
            return False
        desc = magic.branch_state_desc(t, "B")
        if np.abs(gs.dense_expand(desc) - magic.branch_state(t, "B")).max() > 1e-10:
            return False
    return True


def _check_gadget(rng):
    n = 4
    c = circ.Circuit(n, [circ.Matchgate(1, circ.HADAMARD, circ.HADAMARD), circ.ControlledPhase(np.pi, 1)], "0000", "0110")
    prog = circ.gadgetize(c)
    psi = do.dense_run(prog.flo_gates, prog.total_qubits, do.vacuum_state(prog.total_qubits))
    bra = do.vacuum_state(n)
    for t in prog.magic_angles:
        bra = np.kron(bra, magic.magic_state(t))
    return abs(16 * abs(np.vdot(bra, psi)) ** 2 - do.dense_born(c)) < 1e-8


def _check_extent(rng):
    row = magic.extent_table(256)[128]
    return abs(row[1] - 2) < 1e-12 and abs(row[2] - 9) < 1e-12 and abs(row[3] - 4.5) < 1e-12


SELFTESTS = {
    "pfaffian": _check_pfaffian,
    "engine_vs_dense": _check_engine,
    "magic_decomposition": _check_magic,
    "gadget_identity": _check_gadget,
    "extent_row": _check_extent,
}


def run_selftest(seed=0) -> dict:
    rng = np.random.default_rng(seed)
    out = {}
    for name, fn in SELFTESTS.items():
        try:
            out[name] = bool(fn(rng))
        except FlosimError:
            out[name] = False
    return out


# ---------------------------------------------------------------- front end


def run(cfg: RunConfig):
    """Execute a configuration; returns ``(exit_code, report_text)``."""
    try:
        if cfg.command == "estimate":
            return 0, to_json(_estimate_report(cfg)) + "\n"
        if cfg.command == "exact":
            return 0, to_json(_exact_report(cfg)) + "\n"
        if cfg.command == "extent":
            return 0, extent_csv()
        if cfg.command == "selftest":
            res = run_selftest()
            rep = {"tool": "flosim", "version": __version__, "command": "selftest", "checks": res}
            return (0 if all(res.values()) else 3), to_json(rep) + "\n"
        raise ValidationError(f"unknown command {cfg.command!r}")
    except ValidationError as exc:
        return 2, to_json({"error": type(exc).__name__, "code": exc.code, "message": str(exc)}) + "\n"
    except InternalError as exc:
        return 3, to_json({"error": type(exc).__name__, "code": exc.code, "message": str(exc)}) + "\n"
    except FlosimError as exc:
        return 3, to_json({"error": type(exc).__name__, "code": exc.code, "message": str(exc)}) + "\n"


def _emit(code, text, out, is_error_stream=False):
    if code == 0 and out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    elif code == 0:
        click.echo(text, nl=False)
    else:
        click.echo(text, nl=False, err=True)
    sys.exit(code)


def _p_assumed(ctx, param, value):
    if value == "auto":
        return value
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter("expected a number in (0, 1] or 'auto'") from None


@click.group()
@click.version_option(__version__, prog_name="flosim")
def main():
    """Estimate Born-rule probabilities of FLO circuits with controlled phases."""


@main.command()
@click.argument("circuit_path", type=click.Path(dir_okay=False))
@click.option("--eps", "epsilon", type=float, default=0.05, show_default=True, help="Additive accuracy.")
@click.option("--delta", type=float, default=0.1, show_default=True, help="Failure probability.")
@click.option("--seed", type=int, default=None, help="Master seed (drawn from entropy and echoed if omitted).")
@click.option("--mode", type=click.Choice(["all", "partial"]), default=None, help="Defaults from the output mask.")
@click.option("--format", "output_format", type=click.Choice(["json"]), default="json")
@click.option("--p-assumed", default="1", callback=_p_assumed, show_default=True, help="Upper bound on p, or 'auto' for a coarse first pass.")
@click.option("--timing", is_flag=True, help="Include wall time (breaks byte-identical reruns).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def estimate(circuit_path, epsilon, delta, seed, mode, output_format, p_assumed, timing, out):
    """Sample an estimate of the circuit's output probability."""
    cfg = RunConfig("estimate", circuit_path, epsilon, delta, seed, mode, output_format, p_assumed, timing=timing)
    _emit(*run(cfg), out)


@main.command()
@click.argument("circuit_path", type=click.Path(dir_okay=False))
@click.option("--dense-cap", type=int, default=do.DEFAULT_CAP, show_default=True)
@click.option("--format", "output_format", type=click.Choice(["json"]), default="json")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def exact(circuit_path, dense_cap, output_format, out):
    """Exact probability from the dense statevector oracle."""
    _emit(*run(RunConfig("exact", circuit_path, dense_cap=dense_cap)), out)


@main.command()
@click.option("--format", "output_format", type=click.Choice(["csv"]), default="csv")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def extent(output_format, out):
    """CSV of theta, xi, w_squared, ratio on a 256-point grid."""
    _emit(*run(RunConfig("extent", output_format="csv")), out)


@main.command()
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def selftest(out):
    """Quick invariant checks; exit 3 if any fails."""
    code, text = run(RunConfig("selftest"))
    if code == 3 and out is None:
        click.echo(text, nl=False)
        sys.exit(code)
    _emit(code, text, out)


if __name__ == "__main__":
    main()
