"""Command-line interface: ``hstrack track | synth | eval``.

Exit codes: 0 success, 1 bad configuration, 2 file problem (missing,
unreadable or malformed input), 3 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .bench import DEFAULT_THRESHOLDS, precision_curve, write_curve
from .errors import DegenerateError, HeaderParseError
from .hypercube import BoundingBox, HyperCube, band, load_sequence, read_boxes, write_boxes
from .kcf import KcfParams
from .synth import PRESETS, load_scene, scene_to_dict, write_scene
from .tracker import TrackerConfig, run

log = logging.getLogger("hstrack")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

_DEFAULT = TrackerConfig()

# Config-file key -> (CLI dest, default)
TRACK_OPTIONS = {
    "filters": ("filters", _DEFAULT.filter_count),
    "filter_size": ("filter_size", _DEFAULT.filter_w),
    "padding": ("padding", _DEFAULT.padding),
    "sigma": ("sigma", _DEFAULT.kcf.sigma),
    "lambda": ("lambda_", _DEFAULT.kcf.lambda_),
    "interp": ("interp", _DEFAULT.kcf.interp_factor),
    "seed": ("seed", _DEFAULT.seed),
    "band": ("band", None),
    "search_scale_min": ("search_scale_min", _DEFAULT.search_scale_min),
    "search_scale_max": ("search_scale_max", _DEFAULT.search_scale_max),
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parse_init(text: str) -> BoundingBox:
    parts = text.split(",")
    try:
        values = [int(p) for p in parts]
    except ValueError:
        values = []
    if len(values) != 4:
        raise argparse.ArgumentTypeError(f"expected four integers x,y,w,h, got {text!r}")
    return BoundingBox(*values)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hstrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("track", help="track a target through a hyperspectral sequence")
    t.add_argument("--seq", required=True, type=Path, help="sequence header file")
    start = t.add_mutually_exclusive_group(required=True)
    start.add_argument("--init", type=_parse_init, help="initial box as x,y,w,h (integers)")
    start.add_argument("--gt", type=Path, help="ground-truth CSV; its frame-0 box starts the track")
    t.add_argument("--out", required=True, type=Path, help="output CSV of per-frame boxes")
    t.add_argument("--config", type=Path, help="JSON file with tracker settings (flags override it)")
    t.add_argument("--filters", type=int, help=f"number of random filters (default: {_DEFAULT.filter_count})")
    t.add_argument("--filter-size", type=int, help=f"spatial filter size W (default: {_DEFAULT.filter_w})")
    t.add_argument("--padding", type=float, help=f"search window size relative to the target (default: {_DEFAULT.padding})")
    t.add_argument("--sigma", type=float, help=f"Gaussian kernel bandwidth (default: {_DEFAULT.kcf.sigma})")
    t.add_argument("--lambda", dest="lambda_", type=float, metavar="LAMBDA", help=f"ridge regularization (default: {_DEFAULT.kcf.lambda_})")
    t.add_argument("--interp", type=float, help=f"model update rate in [0, 1] (default: {_DEFAULT.kcf.interp_factor})")
    t.add_argument("--seed", type=int, help=f"filter sampling seed (default: {_DEFAULT.seed})")
    t.add_argument("--band", type=int, help="track on this single band only (default: all bands)")
    t.add_argument("--dump-responses", type=Path, metavar="DIR",
                   help="write each frame's response map as float32 little-endian (default: off)")
    t.set_defaults(func=cmd_track)

    s = sub.add_parser("synth", help="render a synthetic sequence with ground truth")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--scene", type=Path, help="scene description (JSON)")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scene")
    s.add_argument("--out", required=True, type=Path, help="output directory")
    s.add_argument("--name", default="scene", help="base name of the written files (default: scene)")
    s.add_argument("--seed", type=int, help="override the scene's noise seed (default: the scene's own)")
    s.add_argument("--dtype", default="f32le", choices=["u8", "u16le", "f32le"],
                   help="payload sample type (default: f32le)")
    s.add_argument("--write-scene", type=Path, metavar="PATH",
                   help="also save the effective scene as JSON (default: off)")
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", help="precision curve of predicted boxes against ground truth")
    e.add_argument("--pred", required=True, type=Path, help="predicted boxes CSV")
    e.add_argument("--gt", required=True, type=Path, help="ground-truth boxes CSV")
    e.add_argument("--out", type=Path, help="output CSV threshold,precision (default: none)")
    e.add_argument("--thresholds", type=int, default=int(DEFAULT_THRESHOLDS[-1]), metavar="MAX",
                   help=f"evaluate thresholds 1..MAX px (default: {int(DEFAULT_THRESHOLDS[-1])})")
    e.add_argument("--exclude-first", action="store_true",
                   help="leave frame 0 out of the count (default: included)")
    e.set_defaults(func=cmd_eval)
    return parser


def _require_file(path: Path, what: str) -> None:
    if not path.is_file():
        raise FileNotFoundError(f"{what} not found: {path}")


def resolve_track_config(args) -> tuple[TrackerConfig, int | None]:
    """Merge built-in defaults, the optional JSON file and CLI flags."""
    values = {key: default for key, (_, default) in TRACK_OPTIONS.items()}
    if args.config is not None:
        _require_file(args.config, "config file")
        try:
            loaded = json.loads(args.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from None
        unknown = sorted(set(loaded) - set(TRACK_OPTIONS))
        if unknown:
            raise ConfigError(f"{args.config}: unknown setting(s): {', '.join(unknown)}")
        values.update(loaded)
    for key, (dest, _) in TRACK_OPTIONS.items():
        flag = getattr(args, dest, None)
        if flag is not None:
            values[key] = flag

    kcf = KcfParams(lambda_=float(values["lambda"]), sigma=float(values["sigma"]),
                    interp_factor=float(values["interp"]))
    config = TrackerConfig(
        filter_w=int(values["filter_size"]),
        filter_count=int(values["filters"]),
        padding=float(values["padding"]),
        seed=int(values["seed"]),
        kcf=kcf,
        search_scale_min=float(values["search_scale_min"]),
        search_scale_max=float(values["search_scale_max"]),
    )
    log.info("effective config: %s", json.dumps(values, sort_keys=True))
    return config, (None if values["band"] is None else int(values["band"]))


def cmd_track(args) -> int:
    _require_file(args.seq, "sequence header")
    config, band_index = resolve_track_config(args)
    seq = load_sequence(args.seq)
    if band_index is not None and not 0 <= band_index < seq.header.bands:
        raise ConfigError(f"--band {band_index} out of range for {seq.header.bands} bands")

    if args.init is not None:
        init_box = args.init
    else:
        _require_file(args.gt, "ground-truth file")
        init_box = read_boxes(args.gt)[0]

    frames = iter(seq)
    if band_index is not None:
        frames = (HyperCube(band(cube, band_index)) for cube in frames)

    on_step = None
    if args.dump_responses is not None:
        dump_dir = args.dump_responses
        dump_dir.mkdir(parents=True, exist_ok=True)

        def on_step(state):
            if state.response is not None:
                h, w = state.response.shape
                out = dump_dir / f"frame{state.frame_index:05d}_{h}x{w}.f32"
                out.write_bytes(state.response.astype("<f4").tobytes())

    started = time.perf_counter()
    boxes = run(frames, init_box, config, on_step=on_step)
    elapsed = time.perf_counter() - started
    write_boxes(args.out, boxes)
    log.info("tracked %d frames in %.2f s (%.1f frames/s)", len(boxes), elapsed,
             len(boxes) / elapsed if elapsed > 0 else float("inf"))
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.scene is not None:
        _require_file(args.scene, "scene file")
        try:
            spec = load_scene(args.scene)
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{args.scene}: bad scene description: {exc}") from None
    else:
        spec = PRESETS[args.preset]()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.write_scene is not None:
        args.write_scene.write_text(json.dumps(scene_to_dict(spec), indent=2) + "\n", encoding="utf-8")
    header, gt = write_scene(spec, args.out, name=args.name, dtype=args.dtype)
    log.info("wrote %s (%d frames) and %s", header, spec.frames, gt)
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.thresholds < 1:
        raise ConfigError("--thresholds must be at least 1")
    _require_file(args.pred, "prediction file")
    _require_file(args.gt, "ground-truth file")
    preds = read_boxes(args.pred)
    truths = read_boxes(args.gt)
    if len(preds) != len(truths):
        raise ConfigError(f"{len(preds)} predicted boxes for {len(truths)} ground-truth boxes")
    include_first = not args.exclude_first
    curve = precision_curve(preds, truths, range(1, args.thresholds + 1), include_first=include_first)
    at20 = precision_curve(preds, truths, (20,), include_first=include_first).precision[0]
    if args.out is not None:
        write_curve(args.out, curve)
    print(f"precision@20={at20:.3f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.ERROR if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    for handler in list(log.handlers):
        log.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(level)
    try:
        return args.func(args)
    except DegenerateError as exc:
        log.error("numerical degeneracy: %s", exc)
        return EXIT_NUMERIC
    except HeaderParseError as exc:
        log.error("malformed input: %s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
