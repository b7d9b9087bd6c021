"""Command-line front end.

    tpst run --config cfg.json [--seed N] [--out results.csv] [--workers N]
    tpst calibrate --config cfg.json [--epsilon E]
    tpst dump --config cfg.json
    tpst encode --config cfg.json < info.hex
    tpst decode --config cfg.json [--soft] [--snr DB] < received

Failures print one JSON object on stderr and exit nonzero
(2: invalid config or input, 3: infeasible rate allocation).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import config as C
from . import sim
from .binlin import bits_to_hex, hex_to_bits
from .tpst import TpstSpec, build_generator, build_parity, encode_bits, scl_decode

log = logging.getLogger("tpstcodes")

FER_COLUMNS = ["snr_db", "trials", "frame_errors", "fer", "avg_list_size", "early_term_rate", "e2_count", "std_err"]
PROVENANCE_COLUMNS = ["config_hash", "master_seed", "snr_mode"]
CALIBRATE_COLUMNS = ["epsilon", "threshold", "samples"]
ALLOCATION_COLUMNS = ["k", "k0", "k1", "l_max", "layer1_snr", "layer0_snr", "margin_db", "target_fer"]


class CliError(Exception):
    def __init__(self, payload: dict, code: int = 2):
        super().__init__(payload.get("message", ""))
        self.payload = payload
        self.code = code


def _fmt(v) -> str:
    # repr keeps floats exact so reruns compare byte for byte
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _csv_text(columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _resolve_workers(flag: int | None, cfg: dict) -> int:
    if flag is not None:
        return flag
    if "workers" in cfg:
        return cfg["workers"]
    env = os.environ.get("TPST_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise CliError({"error": "validation", "field": "TPST_WORKERS", "message": f"not an integer: {env!r}"})
        if n < 1:
            raise CliError({"error": "validation", "field": "TPST_WORKERS", "message": "must be >= 1"})
        return n
    return 1


def _load(args) -> dict:
    cfg = C.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg["master_seed"] = args.seed
    if getattr(args, "workers", None) is not None or "workers" in cfg or os.environ.get("TPST_WORKERS"):
        cfg["workers"] = _resolve_workers(getattr(args, "workers", None), cfg)
    return cfg


def _spec(cfg: dict) -> TpstSpec:
    try:
        return C.resolve_spec(cfg)
    except C.ConfigError:
        raise
    except ValueError as exc:
        raise C.ConfigError("<spec>", str(exc)) from None


def _with_threshold(cfg: dict, exp: sim.ExperimentConfig, meta: dict) -> sim.ExperimentConfig:
    """Learn T off-line first when the config asks for a calibration epsilon."""
    eps = cfg.get("calibration_epsilon")
    if eps is None or cfg.get("threshold") is not None:
        return exp
    t = sim.calibrate_threshold(exp, eps)
    meta["calibrated_threshold"] = t
    log.info("calibrated threshold T=%.6f (epsilon=%g)", t, eps)
    return exp.replace(spec=exp.spec.with_options(threshold=t))


def _campaign(cfg: dict, meta: dict) -> tuple[list[str], list[list], bool]:
    """(columns, rows, plottable) for the configured campaign."""
    campaign = cfg.get("campaign", C.DEFAULTS["campaign"])
    prov = C.Provenance.of(cfg)
    tail = [prov.config_hash, prov.master_seed, prov.snr_mode]

    if campaign == "rate-allocate":
        columns, rows = _rate_allocate(cfg)
        return columns, rows, False

    exp = C.resolve_experiment(cfg, _spec(cfg))
    bound_cols = sim.BOUND_COLUMNS + PROVENANCE_COLUMNS

    def bound_rows(recs):
        return [[r.k, r.l_max, r.snr_db, r.trials, r.event_count, r.estimate, r.std_err, *tail] for r in recs]

    if campaign == "fer":
        exp = _with_threshold(cfg, exp, meta)
        recs = sim.simulate_fer(exp)
        rows = [[r.snr_db, r.trials, r.frame_errors, r.fer, r.avg_list_size, r.early_term_rate, r.e2_count,
                 r.std_err, *tail] for r in recs]
        return FER_COLUMNS + PROVENANCE_COLUMNS, rows, True
    if campaign == "genie0":
        sweep = sim.genie_bound_layer0_sweep(exp, cfg.get("l_values", [exp.spec.l_max]))
        return bound_cols, bound_rows([r for recs in sweep for r in recs]), True
    if campaign == "genie1":
        return bound_cols, bound_rows(sim.genie_bound_layer1(exp)), True
    if campaign == "e2":
        exp = _with_threshold(cfg, exp, meta)
        return bound_cols, bound_rows(sim.ml_lower_bound(exp)), True
    if campaign == "calibrate":
        eps = cfg.get("epsilon", cfg.get("calibration_epsilon"))
        if eps is None:
            raise C.ConfigError("epsilon", "calibrate needs 'epsilon' (or --epsilon)")
        samples = sim.edf_samples(exp)
        t = sim.threshold_from_samples(samples, eps)
        return CALIBRATE_COLUMNS + PROVENANCE_COLUMNS, [[float(eps), t, samples.size, *tail]], False
    raise C.ConfigError("campaign", f"unknown campaign {campaign!r}")


def _rate_allocate(cfg: dict) -> tuple[list[str], list[list]]:
    ra = cfg.get("rate_allocation")
    if ra is None:
        raise C.ConfigError("rate_allocation", "required for the rate-allocate campaign")
    try:
        l1 = sim.read_bound_csv(ra["layer1_table"])
        l0 = sim.read_bound_csv(ra["layer0_table"])
    except (OSError, KeyError, ValueError) as exc:
        raise C.ConfigError("rate_allocation", f"cannot read bound table: {exc}") from None
    layer1 = {k: curve for (k, _), curve in sim.bound_tables(l1).items()}
    layer0 = sim.bound_tables(l0)
    try:
        a = sim.rate_allocate(layer1, layer0, ra["k"], ra["target_fer"], ra.get("snr_budget"),
                              ra.get("margin_db", 0.1))
    except sim.InfeasibleAllocation as exc:
        gap = exc.best_gap_db
        raise CliError({"error": "infeasible", "message": str(exc),
                        "best_gap_db": gap if math.isfinite(gap) else None}, code=3) from None
    return ALLOCATION_COLUMNS, [[ra["k"], a.k0, a.k1, a.l_max, a.layer1_snr, a.layer0_snr, a.margin_db,
                                 float(ra["target_fer"])]]


def _emit(cfg: dict, columns: list[str], rows: list[list], plottable: bool, out: str | None, meta: dict) -> None:
    text = _csv_text(columns, rows)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    # the wall-clock time lives beside the CSV so reruns stay byte-identical
    meta = {
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config_hash": C.config_hash(cfg),
        "config": cfg,
        **meta,
    }
    if plottable and cfg.get("plot", True) and rows:
        from .report import plot_error_rates

        meta["figure"] = str(plot_error_rates(path, references=cfg.get("reference_curves", ()),
                                              title=cfg.get("campaign", "fer")))
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s", path)


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.campaign:
        cfg["campaign"] = args.campaign
        C.validate(cfg)
    meta: dict = {}
    columns, rows, plottable = _campaign(cfg, meta)
    _emit(cfg, columns, rows, plottable, args.out or cfg.get("output"), meta)
    return 0


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    cfg["campaign"] = "calibrate"
    if args.epsilon is not None:
        cfg["epsilon"] = args.epsilon
        C.validate(cfg)
    meta: dict = {}
    columns, rows, _ = _campaign(cfg, meta)
    _emit(cfg, columns, rows, False, args.out or cfg.get("output"), meta)
    return 0


def dump_text(spec: TpstSpec) -> str:
    blocks = [
        ("G_TPST", build_generator(spec)),
        ("H_TPST", build_parity(spec)),
        ("R", spec.R),
        ("S", spec.S.as_matrix()),
    ]
    out = []
    for name, m in blocks:
        out.append(f"{name} rows={m.rows} cols={m.cols}")
        if m.rows:
            out.append(m.to_hex_rows())
    return "\n".join(out) + "\n"


def cmd_dump(args) -> int:
    sys.stdout.write(dump_text(_spec(_load(args))))
    return 0


def _lines(stream):
    for no, line in enumerate(stream, 1):
        line = line.strip()
        if line and not line.startswith("#"):
            yield no, line


def _input_error(no: int, exc: Exception) -> CliError:
    return CliError({"error": "input", "line": no, "message": str(exc)})


def cmd_encode(args) -> int:
    spec = _spec(_load(args))
    for no, line in _lines(sys.stdin):
        try:
            u = hex_to_bits(line, spec.k)
        except ValueError as exc:
            raise _input_error(no, exc) from None
        print(bits_to_hex(encode_bits(u, spec)))
    return 0


def cmd_decode(args) -> int:
    cfg = _load(args)
    spec = _spec(cfg)
    snr = args.snr
    if snr is None:
        pts = cfg.get("snr_db", C.DEFAULTS["snr_db"])
        snr = pts if isinstance(pts, (int, float)) else pts[0]
    exp = C.resolve_experiment(cfg, spec)
    sigma = exp.sigma(snr)
    for no, line in _lines(sys.stdin):
        try:
            if args.soft:
                y = np.array([float(t) for t in line.replace(",", " ").split()])
                if y.size != spec.length:
                    raise ValueError(f"expected {spec.length} samples, got {y.size}")
            else:
                y = 1.0 - 2.0 * hex_to_bits(line, spec.length).astype(np.float64)
        except ValueError as exc:
            raise _input_error(no, exc) from None
        res = scl_decode(y, spec, sigma)
        print(res.codeword.to_hex() if args.codeword else res.info.to_hex())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tpst", description="TPST codes: simulation, encoding and decoding")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, runs=False):
        sp.add_argument("--config", required=True, help="JSON run configuration")
        if runs:
            sp.add_argument("--seed", type=int, help="override master_seed")
            sp.add_argument("--out", help="CSV output path (default: stdout)")
            sp.add_argument("--workers", type=int, help="worker processes (fallback: $TPST_WORKERS)")

    sp = sub.add_parser("run", help="run the configured campaign")
    common(sp, runs=True)
    sp.add_argument("--campaign", choices=["fer", "genie0", "genie1", "e2", "calibrate", "rate-allocate"])
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("calibrate", help="learn the EDF threshold")
    common(sp, runs=True)
    sp.add_argument("--epsilon", type=float)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("dump", help="print G_TPST, H_TPST, R and S as hex rows")
    common(sp)
    sp.set_defaults(func=cmd_dump)

    sp = sub.add_parser("encode", help="hex info words on stdin -> hex codewords")
    common(sp)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help="hex hard decisions (or --soft samples) on stdin -> hex info words")
    common(sp)
    sp.add_argument("--soft", action="store_true", help="lines hold 2n received samples instead of hex bits")
    sp.add_argument("--snr", type=float, help="SNR in dB for the LLR scaling (default: first snr_db)")
    sp.add_argument("--codeword", action="store_true", help="print the decoded codeword instead of the info word")
    sp.set_defaults(func=cmd_decode)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except C.ConfigError as exc:
        err = exc.as_dict()
    except CliError as exc:
        print(json.dumps(exc.payload), file=sys.stderr)
        return exc.code
    print(json.dumps(err), file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
