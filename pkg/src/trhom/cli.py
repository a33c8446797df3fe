"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .config import RunConfig, load_config
from .detection import accidentals, correlate_window, fringe_scan, generate_timetags, visibility
from .errors import ConfigError, DomainError, IoFailure
from .metrics import concurrence_bound, fidelity_bound, rate_metrics
from .pipeline import AD_THETA1, build_source, calibrate_dispersion, reproduce_paper, rng_for, run_experiment
from .source import sagnac_state

log = logging.getLogger("trhom")


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    return cfg.override(
        seed=getattr(args, "seed", None),
        duration_s=getattr(args, "duration_s", None),
        window_ns=getattr(args, "window_ns", None),
        bandwidth_nm=getattr(args, "bandwidth_nm", None),
        out=getattr(args, "out", None),
    )


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = io.ensure_dir(cfg.outputs)
    src, c2 = build_source(cfg, None)
    sag = sagnac_state(src)
    hv = fringe_scan(sag.state, 0.0, cfg.scan.steps)
    ad = fringe_scan(sag.state, AD_THETA1, cfg.scan.steps)
    io.write_fringe_csv(out / "fringe_hv.csv", hv)
    io.write_fringe_csv(out / "fringe_ad.csv", ad)
    summary = {"post_selection_weight": sag.weight, "v_hv": visibility(hv), "v_ad": visibility(ad)}
    if c2 is not None:
        summary["calibrated_c2"] = c2
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_timetags(args) -> int:
    cfg = _load(args)
    out = io.ensure_dir(cfg.outputs)
    stream = generate_timetags(cfg.detection, rng_for(cfg.seed, 1))
    path = io.write_ttag(out / "timetags.ttag", stream)
    ns, ni = stream.counts()
    print(f"wrote {len(stream)} tags ({ns} signal, {ni} idler) to {path}")
    return 0


def cmd_correlate(args) -> int:
    stream = io.read_ttag(args.file, args.duration_s)
    window = args.window_ns if args.window_ns is not None else 3.0
    corr = correlate_window(stream, window, bin_width_ps=args.bin_ps)
    ns, ni = stream.counts()
    T = stream.duration_s
    result = {"tags": len(stream), "coincidences": corr.count, "window_ns": window}
    if T > 0:
        result.update(
            duration_s=T,
            rate_coincidence=corr.count / T,
            rate_signal=ns / T,
            rate_idler=ni / T,
            rate_accidental=accidentals(ns / T, ni / T, window),
        )
    if args.out:
        out = io.ensure_dir(args.out)
        io.write_histogram_csv(out / "delay_histogram.csv", corr)
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_metrics(args) -> int:
    result = {}
    rc, rs, ri = args.rc, args.rs, args.ri
    if args.ttag:
        stream = io.read_ttag(args.ttag, args.duration_s)
        window = args.window_ns if args.window_ns is not None else 3.0
        T = stream.duration_s
        ns, ni = stream.counts()
        rc, rs, ri = correlate_window(stream, window).count / T, ns / T, ni / T
    if None not in (rc, rs, ri):
        bw = args.bandwidth_nm if args.bandwidth_nm is not None else 3.0
        rep = rate_metrics(rc, rs, ri, args.pump_mw, bw)
        result.update(
            pair_rate_norm_cps_per_mw=rep.pair_rate_norm,
            spectral_brightness_cps_per_mw_per_nm=rep.spectral_brightness,
            heralding=rep.heralding,
            heralding_symmetric=rep.heralding_symmetric,
        )
    if args.v_hv is not None and args.v_ad is not None:
        f = fidelity_bound(args.v_hv, args.v_ad)
        result.update(fidelity_bound=f, concurrence_bound=concurrence_bound(f))
    if not result:
        raise ConfigError("give rates (--rc/--rs/--ri or --ttag) and/or visibilities (--v-hv/--v-ad)")
    width = max(len(k) for k in result)
    for k, v in result.items():
        print(f"{k:<{width}}  {v:.6g}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    if cfg.source.envelope == "single" and not args.config:
        cfg = replace(cfg, source=replace(cfg.source, envelope="gaussian"))
    target = args.target if args.target is not None else (cfg.source.calibrate_v_ad or 0.78)
    c2 = calibrate_dispersion(target, replace(cfg, source=replace(cfg.source, filter_nm=None)))
    print(json.dumps({"target_v_ad": target, "c2_rad_per_nm2": c2}, sort_keys=True))
    return 0


def cmd_run(args) -> int:
    cfg = _load(args)
    rep = run_experiment(cfg)
    print(json.dumps(rep.summary, indent=2, sort_keys=True))
    return 0


def cmd_reproduce(args) -> int:
    out = args.out or "reproduction"
    reproduce_paper(out, seed=args.seed or 0, duration_s=args.duration_s, window_ns=args.window_ns, bandwidth_nm=args.bandwidth_nm)
    print(Path(out, "summary.txt").read_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trhom", description="Time-reversed HOM entangled-pair source simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--seed", type=int, metavar="N")
        sp.add_argument("--duration-s", type=float, metavar="X")
        sp.add_argument("--window-ns", type=float, metavar="X")
        sp.add_argument("--bandwidth-nm", type=float, metavar="X")

    sp = sub.add_parser("simulate", help="build the state and write exact fringe scans")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("timetags", help="synthesize a TTAG click stream")
    common(sp)
    sp.set_defaults(func=cmd_timetags)

    sp = sub.add_parser("correlate", help="count coincidences in a TTAG file")
    sp.add_argument("file")
    common(sp, config=False)
    sp.add_argument("--bin-ps", type=int, default=100)
    sp.set_defaults(func=cmd_correlate)

    sp = sub.add_parser("metrics", help="rates and entanglement bounds from numbers or a TTAG file")
    common(sp, config=False)
    sp.add_argument("--rc", type=float, help="coincidence rate (cps)")
    sp.add_argument("--rs", type=float, help="signal singles rate (cps)")
    sp.add_argument("--ri", type=float, help="idler singles rate (cps)")
    sp.add_argument("--ttag", metavar="FILE")
    sp.add_argument("--pump-mw", type=float, default=0.1)
    sp.add_argument("--v-hv", type=float)
    sp.add_argument("--v-ad", type=float)
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("run", help="full pipeline for one config file")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("reproduce-paper", help="calibrated narrowband + broadband runs")
    common(sp, config=False)
    sp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("calibrate", help="search the quadratic dispersion coefficient")
    common(sp)
    sp.add_argument("--target", type=float, help="target A/D visibility (default 0.78)")
    sp.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IoFailure as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except (DomainError, ValueError) as exc:
        print(f"error in {_origin(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def _origin(exc: BaseException) -> str:
    """Name of the innermost package module on the traceback."""
    tb, name = exc.__traceback__, "trhom"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("trhom."):
            name = mod
        tb = tb.tb_next
    return name


if __name__ == "__main__":
    sys.exit(main())
