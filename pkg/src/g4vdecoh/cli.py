"""Command-line driver: ``g4vdecoh {single-spin,bell-pair,link-sweep,fit}``.

All outputs are CSV with a ``# config:`` comment line followed by a header
row. Floats are written with 17 significant digits so reruns are
byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from collections import OrderedDict
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .link import sweep_length
from .metrics import (
    DEFAULT_FLOOR,
    DecayCurve,
    FitError,
    bell_pair,
    equal_superposition,
    evolve_trajectory,
    fit_exponential,
    hashing_bound,
)
from .qstate import StateError

log = logging.getLogger("g4vdecoh")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comment: str) -> None:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), newline="\n")


def _config_comment(cfg: RunConfig, command: str) -> str:
    return "config: " + json.dumps({"command": command, **cfg.resolved()}, sort_keys=True)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}_{suffix}{path.suffix or '.csv'}")


def _fit_or_fail(times, values, amplitude, label):
    try:
        return fit_exponential(DecayCurve(times, values), amplitude, floor=DEFAULT_FLOOR)
    except FitError as exc:
        raise FitError(f"{label}: {exc}") from None


def cmd_single_spin(cfg: RunConfig, out: Path) -> list[Path]:
    psi0 = equal_superposition()
    ket = np.array([1, 1, 0, 0], dtype=complex) / np.sqrt(2)
    rows, summary = [], []
    for i, temp in enumerate(cfg.temperature_k):
        c = cfg.constants(temp)
        times = np.linspace(0.0, cfg.horizon(i), cfg.n_samples)
        traj = evolve_trajectory(c, psi0, times)
        rho12 = traj[:, 0, 1]
        fid = np.real(np.einsum("i,tij,j->t", ket.conj(), traj, ket))
        absv = np.abs(rho12)
        for t, z, a, f in zip(times, rho12, absv, fid):
            rows.append((temp, t, z.real, z.imag, a, f))
        # fit the values exactly as written so `fit` on the CSV reproduces them
        written = np.array([float(fmt(a)) for a in absv])
        fit = _fit_or_fail(times, written, 0.5, f"T={temp:g} K")
        summary.append((temp, fit.tau, fit.residual_rms))
    comment = _config_comment(cfg, "single-spin")
    write_csv(out, ["T", "t", "re_rho12", "im_rho12", "abs_rho12", "fidelity"], rows, comment)
    summ = _sibling(out, "summary")
    write_csv(summ, ["T", "tau_c1", "residual_rms"], summary, comment)
    return [out, summ]


def cmd_bell_pair(cfg: RunConfig, out: Path) -> list[Path]:
    rho0 = bell_pair()
    rows, summary = [], []
    for i, temp in enumerate(cfg.temperature_k):
        c = cfg.constants(temp)
        times = np.linspace(0.0, cfg.horizon(i), cfg.n_samples)
        traj = evolve_trajectory(c, rho0, times)
        vals = np.array([hashing_bound(r, 4, 4) for r in traj])
        rows.extend((temp, t, v) for t, v in zip(times, vals))
        written = np.array([float(fmt(v)) for v in vals])
        fit = _fit_or_fail(times, written, 1.0, f"T={temp:g} K")
        summary.append((temp, fit.tau, fit.residual_rms))
    comment = _config_comment(cfg, "bell-pair")
    write_csv(out, ["T", "t", "hashing_bound"], rows, comment)
    summ = _sibling(out, "summary")
    write_csv(summ, ["T", "tau_c2", "residual_rms"], summary, comment)
    return [out, summ]


def cmd_link_sweep(cfg: RunConfig, out: Path) -> list[Path]:
    if cfg.link is None:
        raise ConfigError("[link]: section required for link-sweep")
    block = cfg.link
    marked = set(block.marked())
    rows, mats = [], []
    for enc in block.encoding:
        template = block.link_config(enc)
        for temp in cfg.temperature_k:
            c = cfg.constants(temp)
            for r in sweep_length(template, c, block.length_km):
                rows.append((enc, temp, r.length_km, r.i_at_swap, r.i_at_herald, r.success_prob))
                if r.length_km not in marked:
                    continue
                for stage, rho in (("at_swap", r.rho_at_swap), ("at_herald", r.rho_at_herald)):
                    for k, z in enumerate(rho.matrix.reshape(-1)):
                        mats.append((enc, temp, r.length_km, stage, k, k // 16, k % 16, z.real, z.imag))
    comment = _config_comment(cfg, "link-sweep")
    write_csv(out, ["encoding", "T", "L_km", "I_at_swap", "I_at_herald", "success_prob"], rows, comment)
    mpath = _sibling(out, "matrices")
    write_csv(mpath, ["encoding", "T", "L_km", "stage", "index", "row", "col", "re", "im"], mats, comment)
    return [out, mpath]


def read_csv_table(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Header and ``(line_number, fields)`` rows, skipping ``#`` comment lines."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    header, rows = None, []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = next(csv.reader([line]))
        if header is None:
            header = fields
            continue
        if len(fields) != len(header):
            raise ConfigError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        rows.append((lineno, fields))
    if header is None:
        raise ConfigError(f"{path}: no header row")
    return header, rows


def cmd_fit(
    path,
    out: Path,
    time_column: str,
    value_column: str,
    group_column: Optional[str],
    amplitude: Optional[float],
    floor: float = DEFAULT_FLOOR,
) -> list[Path]:
    header, rows = read_csv_table(path)
    for col in filter(None, (time_column, value_column, group_column)):
        if col not in header:
            raise ConfigError(f"{path}: no column named {col!r} (have {', '.join(header)})")
    ti, vi = header.index(time_column), header.index(value_column)
    gi = header.index(group_column) if group_column else None
    groups: "OrderedDict[str, tuple[list, list]]" = OrderedDict()
    for lineno, fields in rows:
        try:
            t, v = float(fields[ti]), float(fields[vi])
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: non-numeric time/value field") from None
        key = fields[gi] if gi is not None else ""
        groups.setdefault(key, ([], []))
        groups[key][0].append(t)
        groups[key][1].append(v)
    out_rows = []
    for key, (ts, vs) in groups.items():
        label = f"{group_column}={key}" if group_column else "curve"
        try:
            curve = DecayCurve(np.array(ts), np.array(vs))
        except ValueError as exc:
            raise ConfigError(f"{path}: {label}: {exc}") from None
        try:
            fit = fit_exponential(curve, amplitude, floor=floor if floor > 0 else None)
        except FitError as exc:
            raise FitError(f"{label}: {exc}") from None
        out_rows.append((key, fit.tau, fit.amplitude, fit.residual_rms, fit.n_used))
    comment = "config: " + json.dumps(
        {
            "command": "fit",
            "input": str(path),
            "time_column": time_column,
            "value_column": value_column,
            "group_column": group_column,
            "amplitude": amplitude,
            "floor": floor,
        },
        sort_keys=True,
    )
    write_csv(out, [group_column or "group", "tau", "amplitude", "residual_rms", "n_used"], out_rows, comment)
    return [out]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="g4vdecoh", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("single-spin", "coherence decay of one spin and tau_C,1 fits"),
        ("bell-pair", "hashing-bound decay of a Bell pair and tau_C,2 fits"),
        ("link-sweep", "midpoint-swap link hashing bound versus length"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int, help="reserved; all computations are deterministic")
    fp = sub.add_parser("fit", help="fit A exp(-t/tau) to columns of a CSV")
    fp.add_argument("input")
    fp.add_argument("--out", required=True)
    fp.add_argument("--time-column", default="t")
    fp.add_argument("--value-column", required=True)
    fp.add_argument("--group-column")
    fp.add_argument("--amplitude", type=float, help="fix the amplitude (0.5 coherence, 1.0 hashing bound)")
    fp.add_argument("--floor", type=float, default=DEFAULT_FLOOR,
                    help="drop samples from the first one at or below floor * first value (0 disables)")
    fp.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    return p


COMMANDS = {
    "single-spin": cmd_single_spin,
    "bell-pair": cmd_bell_pair,
    "link-sweep": cmd_link_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "fit":
            written = cmd_fit(
                args.input, Path(args.out), args.time_column, args.value_column,
                args.group_column, args.amplitude, args.floor,
            )
        else:
            cfg = load_config(args.config)
            out = args.out or cfg.output_path
            if not out:
                raise ConfigError("output_path: give --out or output_path in the config")
            written = COMMANDS[args.command](cfg, Path(out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FitError, StateError, np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
