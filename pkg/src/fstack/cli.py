"""Command-line front end.

Commands: plan | design | estimate | stack | run | sweep.  Every command
reads the same INI config (defaults are the reference narrowband MSS
scenario) and writes CSV/text artifacts into the output directory.
Outputs are deterministic for a fixed config and seed.

Exit codes: 0 success, 2 config error, 3 design failure, 4 runtime error.
"""

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import complexity, frontend
from .channelizer import (
    ChannelPlan,
    ChanneliserConfig,
    awgn_sweep,
    end_to_end,
    gmr_channel_plan,
)
from .config import load_config
from .errors import ConfigError, DesignFailureError, FstackError
from .filter_design import (
    PrototypeSpec,
    attenuation_to_ripple,
    design_fir_equiripple,
    design_iir_nthband_alp,
    export_coefficients,
    ripple_pp_db_to_linear,
    verify_allpass,
)
from .stacking import StackingInputs, plan_stacking, validate_plan

# Fine prototype targets.  Reconstruction error of a maximally decimated
# bank scales like N * stopband_ripple^2 (stopband leakage aggregates
# across the branch responses), so the two-stage transparency budget of
# 1e-5 forces roughly 70 dB at N_f = 64 regardless of how sparsely the
# user channels are occupied.
FINE_STOPBAND_DB = 70.0
FINE_PASSBAND_RIPPLE = 2e-4
# above this length the fine prototype goes straight to the windowed
# design; a Remez exchange on a 10^5-tap filter is not worth the wait
FINE_REMEZ_LIMIT = 8192


def _build_plan(cfg):
    inputs = StackingInputs(
        f_s=cfg.fs_hz,
        f_o=cfg.fo_hz,
        f_c=cfg.fc_hz,
        nyquist_zone=cfg.nyquist_zone,
        bandwidth=cfg.bandwidth_hz,
        num_channels=2 * cfg.num_coarse_channels,
    )
    return plan_stacking(inputs)


def _coarse_spec(cfg, plan, kind):
    pass_db = cfg.passband_ripple_db
    stop_db = cfg.stopband_db
    if kind == "fir":
        pass_db = cfg.fir_passband_ripple_db or pass_db
        stop_db = cfg.fir_stopband_db or stop_db
    return PrototypeSpec(
        sample_rate_hz=cfg.fs_hz,
        passband_edge_hz=plan.f_p,
        stopband_edge_hz=plan.f_a,
        passband_ripple=ripple_pp_db_to_linear(pass_db),
        stopband_ripple=attenuation_to_ripple(stop_db),
        num_branches=2 * cfg.num_coarse_channels,
        kind=kind,
    )


def build_coarse_prototype(cfg, plan, kind=None):
    kind = kind or cfg.coarse_kind
    spec = _coarse_spec(cfg, plan, kind)
    if kind == "fir":
        return design_fir_equiripple(spec, length_multiple=spec.num_branches)
    return design_iir_nthband_alp(spec, cfg.n_fos)


def _fine_granularity(cfg):
    if cfg.fine_standard == "gmr1":
        return 31.25e3 if cfg.full_scale_fine else 1e6
    if cfg.fine_standard == "gmr2":
        return 50e3 if cfg.full_scale_fine else 1e6
    return cfg.granularity_hz


def build_channel_plan(cfg):
    subband_rate = cfg.fs_hz / (2 * cfg.num_coarse_channels)
    if cfg.fine_standard in ("gmr1", "gmr2") and cfg.full_scale_fine:
        return gmr_channel_plan(cfg.fine_standard, subband_rate, cfg.guardband_fraction)
    return ChannelPlan("custom", _fine_granularity(cfg), subband_rate,
                       cfg.guardband_fraction)


def build_fine_prototype(cfg, channel_plan):
    """Equiripple fine-stage prototype: stopband at the channel edge."""
    n_f = channel_plan.channels_per_subband
    rate = channel_plan.subband_rate_hz
    guard = channel_plan.guardband_fraction
    spec = PrototypeSpec(
        sample_rate_hz=rate,
        passband_edge_hz=(1.0 - guard) * 0.5 * rate / n_f,
        stopband_edge_hz=0.5 * rate / n_f,
        passband_ripple=FINE_PASSBAND_RIPPLE,
        stopband_ripple=attenuation_to_ripple(FINE_STOPBAND_DB),
        num_branches=n_f,
        kind="fir",
    )
    from .filter_design import _kaiser_taps, estimate_fir_length, FirPrototype, measure_fir

    est = estimate_fir_length(spec.passband_ripple, spec.stopband_ripple, spec.delta_f)
    if est > FINE_REMEZ_LIMIT:
        length = n_f * math.ceil(est / n_f)
        for _ in range(64):
            taps = _kaiser_taps(length, spec)
            pass_dev, stop_max = measure_fir(taps, spec, grid_mult=4)
            if pass_dev <= spec.passband_ripple and stop_max <= spec.stopband_ripple:
                return FirPrototype(taps, spec)
            length += n_f
        raise DesignFailureError("windowed fine prototype did not meet spec")
    return design_fir_equiripple(spec, length_multiple=n_f)


def build_pipeline_config(cfg, kind=None, plan=None, channel_plan=None):
    plan = plan or _build_plan(cfg)
    channel_plan = channel_plan or build_channel_plan(cfg)
    coarse = build_coarse_prototype(cfg, plan, kind)
    fine = build_fine_prototype(cfg, channel_plan)
    return ChanneliserConfig(
        plan=plan,
        coarse_prototype=coarse,
        fine_prototype=fine,
        channel_plan=channel_plan,
        occupied_subbands=cfg.occupied_subbands,
    )


def build_stimulus(cfg, plan, channel_plan, occupied):
    elements = [
        frontend.generate_subband_signal(
            sub,
            plan,
            cfg.num_samples // (2 * cfg.num_coarse_channels),
            seed=cfg.seed + sub,
            profile="fdm",
            granularity_hz=channel_plan.granularity_hz,
            guardband_fraction=channel_plan.guardband_fraction,
        )
        for sub in occupied
    ]
    return frontend.stack_baseband_equivalent(elements, plan)


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")


def _write_spectrum_csv(path, buf, nfft=8192):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frequency_hz", "power_db"])
        if len(buf) == 0:
            return
        freqs, power_db = frontend.periodogram_db(buf, nfft)
        for f, p in zip(freqs, power_db):
            writer.writerow([repr(float(f)), f"{p:.6f}"])


# ---------------------------------------------------------------------------
# commands


def cmd_plan(cfg, out_dir):
    plan = _build_plan(cfg)
    check = validate_plan(plan)
    plan.to_csv(os.path.join(out_dir, "plan.csv"))
    text = plan.to_text() + "\n" + check.to_text()
    _write_text(os.path.join(out_dir, "plan_report.txt"), text)
    print(text)
    return 0


def cmd_design(cfg, out_dir):
    plan = _build_plan(cfg)
    lines = [f"prototype design for f_p={plan.f_p:.6g} Hz, f_a={plan.f_a:.6g} Hz"]
    fir = build_coarse_prototype(cfg, plan, "fir")
    export_coefficients(fir, os.path.join(out_dir, "coarse_fir.coef"))
    rep = fir.design_report
    lines += [
        "candidate 1 (equiripple FIR):",
        f"  length            : {fir.length} taps ({rep.method})",
        f"  passband deviation: {rep.passband_dev:.6g} "
        f"({20*math.log10(1+rep.passband_dev):.4f} dB) vs {fir.spec.passband_ripple:.6g}",
        f"  stopband peak     : {rep.stopband_max:.6g} "
        f"({-20*math.log10(rep.stopband_max):.2f} dB) vs {fir.spec.stopband_ripple:.6g}",
    ]
    iir = build_coarse_prototype(cfg, plan, "iir")
    export_coefficients(iir, os.path.join(out_dir, "coarse_iir.coef"))
    rep = iir.design_report or verify_allpass(iir)
    lines += [
        "candidate 2 (Nth-band all-pass recursive, almost linear phase):",
        f"  coefficients      : {iir.coefficient_count} "
        f"({iir.num_branches} branches x {iir.sections_per_branch} sections)",
        f"  passband deviation: {rep.passband_dev_db*1e6:.1f} microdB",
        f"  guarded stopband  : {rep.stopband_atten_db:.2f} dB "
        f"(spec {cfg.stopband_db} dB)",
        f"  phase deviation   : {rep.phase_dev_deg:.4f} deg from linear",
        f"  worst spike level : {rep.spike_max_db:.2f} dB (inside guardbands)",
    ]
    text = "\n".join(lines)
    _write_text(os.path.join(out_dir, "design_report.txt"), text)
    print(text)
    return 0


def cmd_estimate(cfg, out_dir):
    reports = complexity.sweep(
        passband_ripple=ripple_pp_db_to_linear(cfg.passband_ripple_db),
        stopband_ripple=attenuation_to_ripple(cfg.stopband_db),
    )
    path = os.path.join(out_dir, "complexity.csv")
    complexity.write_csv(reports, path)
    print(f"wrote {path} ({len(reports)} rows)")
    return 0


def cmd_stack(cfg, out_dir):
    plan = _build_plan(cfg)
    channel_plan = build_channel_plan(cfg)
    occupied = (
        plan.occupied_subbands if cfg.occupied_subbands is None
        else cfg.occupied_subbands
    )
    stacked = build_stimulus(cfg, plan, channel_plan, occupied)
    path = os.path.join(out_dir, "stacked.f64")
    frontend.write_signal(stacked, path)
    _write_spectrum_csv(os.path.join(out_dir, "stacked_spectrum.csv"), stacked)
    print(f"wrote {path} ({len(stacked)} samples at {stacked.rate_hz:.6g} Hz)")
    return 0


def cmd_run(cfg, out_dir):
    plan = _build_plan(cfg)
    channel_plan = build_channel_plan(cfg)
    pipeline = build_pipeline_config(cfg, plan=plan, channel_plan=channel_plan)
    stimulus = build_stimulus(cfg, plan, channel_plan, pipeline.occupied_subbands)
    _write_spectrum_csv(os.path.join(out_dir, "input_spectrum.csv"), stimulus)
    report = end_to_end(
        pipeline, stimulus, adc_bits=cfg.adc_bits, snr_db=cfg.snr_db, seed=cfg.seed,
        capture_spectra=True,
    )
    spectra = report.extras.pop("spectra", {})
    for key, buf in spectra.items():
        name = f"subband_{key}_spectrum.csv" if isinstance(key, int) else f"{key}_spectrum.csv"
        _write_spectrum_csv(os.path.join(out_dir, name), buf)
    text = report.to_text()
    _write_text(os.path.join(out_dir, "metrics.txt"), text)
    with open(os.path.join(out_dir, "metrics.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["aligned_delay_samples", "mse", "mse_over_signal"])
        writer.writerow([report.aligned_delay, repr(report.mse), repr(report.mse_over_signal)])
    print(text)
    return 0


def cmd_sweep(cfg, out_dir):
    plan = _build_plan(cfg)
    channel_plan = build_channel_plan(cfg)
    configs = {
        "iir": build_pipeline_config(cfg, "iir", plan, channel_plan),
        "fir": build_pipeline_config(cfg, "fir", plan, channel_plan),
    }
    stimulus = build_stimulus(cfg, plan, channel_plan,
                              configs["iir"].occupied_subbands)
    snr_list = (35.0, 45.0, 55.0, 65.0, 75.0)
    rows = awgn_sweep(configs, stimulus, snr_list, seed=cfg.seed)
    path = os.path.join(out_dir, "sweep.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "mse_rel_db_iir", "mse_rel_db_fir"])
        for snr_db, point in rows:
            writer.writerow([
                repr(float(snr_db)),
                f"{10*math.log10(max(point['iir'], 1e-300)):.4f}",
                f"{10*math.log10(max(point['fir'], 1e-300)):.4f}",
            ])
    for snr_db, point in rows:
        print(
            f"snr {snr_db:5.1f} dB: iir {point['iir']:.3e}, fir {point['fir']:.3e}"
        )
    print(f"wrote {path}")
    return 0


COMMANDS = {
    "plan": cmd_plan,
    "design": cmd_design,
    "estimate": cmd_estimate,
    "stack": cmd_stack,
    "run": cmd_run,
    "sweep": cmd_sweep,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fstack",
        description="frequency-stacking planner and two-stage channelizer tools",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="INI config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override sim.seed")
    parser.add_argument(
        "--full-scale",
        action="store_true",
        help="use the full GMR fine grids (N_f = 1280/2048) instead of desk scale",
    )
    args = parser.parse_args(argv)

    try:
        overrides = {}
        if args.seed is not None:
            overrides["sim.seed"] = args.seed
        if args.out is not None:
            overrides["io.output_dir"] = args.out
        cfg = load_config(args.config, overrides)
        cfg.full_scale_fine = args.full_scale
        out_dir = cfg.output_dir
        os.makedirs(out_dir, exist_ok=True)
        np.random.seed(cfg.seed)  # belt and braces; all generators are seeded
        return COMMANDS[args.command](cfg, out_dir)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except DesignFailureError as exc:
        print(f"error: design: {exc}", file=sys.stderr)
        return 3
    except (FstackError, OSError) as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
