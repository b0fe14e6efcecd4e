"""Command-line entry points: batch studies and service startup.

Subcommands
-----------
independence  Round-robin tournament recovery check; emits ratio table + report.
fit-sim       Repeated single-band fitting simulations; emits agreement summary.
process       Offline audio chain: gains -> FIR -> optional noise -> WAV out.
serve         Start the HTTP session service.

Exit codes: 0 ok, 1 the run's own validation failed, 2 usage/configuration
error. Data goes to files or stdout; progress notes go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import BandConfig
from .errors import HearfitError
from .independence import run_rrt, table_to_csv, validate_independence
from .orchestrator import FittingSession, build_schedule
from .preference import best_level

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# --- independence ------------------------------------------------------------


def cmd_independence(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.true_set is not None:
        true_set = [int(v) for v in args.true_set.split(",")]
        table = run_rrt(
            args.levels, args.bands, true_set, mode=args.mode,
            n_pairs=args.pairs, seed=args.seed, force=args.force,
        )
        recovered = table.argmax_levels()
        table_to_csv(table.ratio, out / "ratio.csv")
        table_to_csv(table.counts.preference, out / "preference.csv")
        table_to_csv(table.counts.occurrence, out / "occurrence.csv")
        report = {
            "true_levels": true_set,
            "recovered_levels": list(recovered),
            "match": list(recovered) == true_set,
            "mode": args.mode,
            "n_pairs": args.pairs,
            "seed": args.seed,
        }
        (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
        _note(f"recovered {list(recovered)} vs true {true_set}")
        return EXIT_OK if report["match"] else EXIT_VALIDATION
    report = validate_independence(
        args.trials, args.levels, args.bands, mode=args.mode,
        seed=args.seed, n_pairs=args.pairs, force=args.force,
    )
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    _note(f"{report.matches}/{report.trials} true gain sets recovered")
    return EXIT_OK if report.matches == report.trials else EXIT_VALIDATION


# --- fit-sim ------------------------------------------------------------------


def cmd_fit_sim(args) -> int:
    rng = np.random.default_rng(args.seed)
    agreements = 0
    runs_out = []
    for run in range(args.runs):
        truth = rng.uniform(0.0, 1.0, args.levels)
        config = BandConfig(
            band_edges_hz=(0.0, 1000.0), n_levels=args.levels,
            level_db=tuple(float(12 - 3 * i) for i in range(args.levels)),
        )
        schedule = build_schedule(
            args.levels, args.episodes, args.per_episode, 1,
            int(rng.integers(0, 2**31)),
        )
        session = FittingSession(config, schedule)
        while not session.complete:
            pres = session.next_comparison()
            u_a, u_b = truth[pres.gain_set_a[0] - 1], truth[pres.gain_set_b[0] - 1]
            margin = u_a - u_b
            if args.noise_sigma > 0:
                margin += float(rng.normal(0.0, args.noise_sigma))
            choice = "A" if margin > 0 else ("B" if margin < 0 else "Same")
            if session.record_feedback(pres.id, choice):
                session.finish_episode()
        estimated = session.bands[0].f
        agree = best_level(estimated) == int(np.argmax(truth)) + 1
        agreements += agree
        runs_out.append(
            {
                "run": run,
                "true": truth.tolist(),
                "estimated": estimated.tolist(),
                "true_best": int(np.argmax(truth)) + 1,
                "estimated_best": best_level(estimated),
                "agree": bool(agree),
            }
        )
    summary = {
        "runs": args.runs,
        "agreements": agreements,
        "agreement_rate": agreements / args.runs,
        "noise_sigma": args.noise_sigma,
        "seed": args.seed,
    }
    payload = {"summary": summary, "runs": runs_out}
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    _note(f"top-1 agreement {agreements}/{args.runs}")
    return EXIT_OK


# --- process ------------------------------------------------------------------


def cmd_process(args) -> int:
    from .dsp import AudioClip, apply_gain_set, design_fir, interpolate_response, mix_noise, wav_read, wav_write
    from scipy.signal import lfilter

    clip = wav_read(args.in_wav)
    config = BandConfig()
    if args.gains_db is not None:
        gains = [float(v) for v in args.gains_db.split(",")]
        response = interpolate_response(gains, clip.sample_rate_hz, config)
        fir = design_fir(response, sample_rate_hz=clip.sample_rate_hz)
        out = AudioClip(
            lfilter(fir.coefficients, [1.0], clip.samples),
            clip.sample_rate_hz, dict(clip.metadata),
        )
        peak = float(np.max(np.abs(out.samples)))
        if peak > 1.0:
            out.samples /= peak
            out.metadata["peak_guard_factor"] = 1.0 / peak
    else:
        levels = [int(v) for v in args.levels.split(",")]
        prescription = [float(v) for v in args.prescription.split(",")]
        out = apply_gain_set(clip, levels, prescription, config)
    if args.noise_wav:
        noise = wav_read(args.noise_wav)
        out = mix_noise(out, noise, args.snr, loop_offset_seed=args.seed)
    wav_write(out, args.out_wav)
    _note(f"wrote {args.out_wav} ({out.duration_s:.2f} s)")
    return EXIT_OK


# --- serve --------------------------------------------------------------------


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.sessions_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hearfit",
        description="Multi-band personalization of hearing-aid amplification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("independence", help="band-independence tournament check")
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--bands", type=int, default=5)
    p.add_argument("--true-set", default="3,4,5,2,3",
                   help="comma-separated true levels; use --trials instead for random sets")
    p.add_argument("--trials", type=int, default=None,
                   help="number of random true sets (overrides --true-set)")
    p.add_argument("--mode", choices=["full", "sampled"], default="sampled")
    p.add_argument("--pairs", type=int, default=10_000_000,
                   help="pair count in sampled mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true",
                   help="allow full enumerations above the pair budget")
    p.add_argument("--out", default="independence-out")
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser("fit-sim", help="single-band fitting simulations")
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--episodes", type=int, default=7)
    p.add_argument("--per-episode", type=int, default=4)
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_fit_sim)

    p = sub.add_parser("process", help="offline audio processing chain")
    p.add_argument("in_wav")
    p.add_argument("out_wav")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--gains-db", default=None,
                       help="comma-separated absolute band gains in dB")
    group.add_argument("--levels", default=None,
                       help="comma-separated 1-based levels (with --prescription)")
    p.add_argument("--prescription", default="0,0,0,0,0",
                   help="comma-separated prescription gains in dB")
    p.add_argument("--noise-wav", default=None)
    p.add_argument("--snr", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--sessions-dir", default="hearfit-sessions")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.command == "independence" and args.trials is not None:
        args.true_set = None
    try:
        return args.func(args)
    except HearfitError as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
