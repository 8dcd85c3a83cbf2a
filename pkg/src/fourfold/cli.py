"""Command-line interface.

Exit codes: 0 success, 1 comparison above threshold, 2 configuration or
invalid input, 3 I/O or file-format error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from fourfold import analysis, io
from fourfold.array import (
    crosstalk_report,
    default_grid_size,
    layer_kernels_from_flat,
    layout_array,
    optical_convolution,
    resolve_threads,
    run_layer,
)
from fourfold.backend import NetworkSpec, channel_specs, network_forward
from fourfold.correlator import CorrelatorSpec, detect, ideal_convolve, kernel_to_fourier_mask, run_4f
from fourfold.errors import ConfigError, FourfoldError, NumericError
from fourfold.field import GridSpec, embed, field_from_image
from fourfold.metrics import correlation, nrmse
from fourfold.propagation import propagate

log = logging.getLogger("fourfold")

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4

SPEC_DEFAULTS = {
    "focal_length": 3e-3,
    "lens_diameter": 0.57e-3,
    "pitch": 2.5e-6,
    "wavelength": 532e-9,
    "lens_model": "hyperbolic",
    "aperture": "square",
}

DEFAULTS = {
    "propagate": {
        "input": None, "output": None, "z": None, "pad_factor": 1, "band_limit": "auto",
        "encoding": "amplitude", "pitch": 2.5e-6, "wavelength": 532e-9,
    },
    "run4f": {
        **SPEC_DEFAULTS, "image": None, "kernels": None, "kernel_index": 0, "out_dir": None,
        "grid_size": None, "detector_scale": 1.0, "sensor_binning": 1, "threads": None,
    },
    "layer": {
        **SPEC_DEFAULTS, "image": None, "kernels": None, "out_dir": None, "grid_size": None,
        "detector_scale": 1.0, "wavelengths": None, "threads": None,
    },
    "crosstalk": {
        **SPEC_DEFAULTS, "image": None, "kernels": None, "tile_size": None, "output": None, "threads": None,
    },
    "analyze": {
        **{k: getattr(analysis.PerfParams(), k) for k in analysis.PerfParams.__dataclass_fields__},
        "lens_diameter": 0.57e-3, "wavelength": 532e-9, "n_channels": 3, "output": None,
    },
    "compare": {
        **SPEC_DEFAULTS, "image": None, "kernels": None, "grid_size": None, "threshold": 0.05,
        "mask_wavelength": None, "border": None, "output": None, "threads": None,
    },
    "forward": {
        **SPEC_DEFAULTS, "image": None, "network": None, "mode": None, "out_dir": None,
        "grid_size": None, "wavelengths": None, "threads": None,
    },
}


def _add_spec_args(p):
    p.add_argument("--focal-length", type=float, help="lens focal length, m")
    p.add_argument("--lens-diameter", type=float, help="lens aperture width, m")
    p.add_argument("--pitch", type=float, help="sample pitch, m")
    p.add_argument("--wavelength", type=float, help="design and source wavelength, m")
    p.add_argument("--lens-model", choices=["paraxial", "hyperbolic"])
    p.add_argument("--aperture", choices=["circle", "square"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourfold", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="JSON file with one section per command")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    # -v is also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagate", parents=[common], help="angular-spectrum propagation of a CFLD1 field or PGM image")
    p.add_argument("--input", type=Path)
    p.add_argument("--output", type=Path)
    p.add_argument("--z", type=float, help="distance in m (negative propagates backwards)")
    p.add_argument("--pad-factor", type=int)
    p.add_argument("--band-limit", choices=["auto", "on", "off"])
    p.add_argument("--encoding", choices=["amplitude", "intensity"])
    p.add_argument("--pitch", type=float)
    p.add_argument("--wavelength", type=float)

    p = sub.add_parser("run4f", parents=[common], help="run one correlator on an image")
    _add_spec_args(p)
    p.add_argument("--image", type=Path)
    p.add_argument("--kernels", type=Path, help="KRN1 or CSV kernel file")
    p.add_argument("--kernel-index", type=int)
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--grid-size", type=int)
    p.add_argument("--detector-scale", type=float)
    p.add_argument("--sensor-binning", type=int)
    p.add_argument("--threads", type=int)

    p = sub.add_parser("layer", parents=[common], help="run a full optical layer (all kernels x channels)")
    _add_spec_args(p)
    p.add_argument("--image", type=Path, action="append", help="one PGM per channel")
    p.add_argument("--kernels", type=Path, help="KRN1, ordered (kernel, channel)")
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--grid-size", type=int)
    p.add_argument("--detector-scale", type=float)
    p.add_argument("--wavelengths", type=float, nargs="+")
    p.add_argument("--threads", type=int)

    p = sub.add_parser("crosstalk", parents=[common], help="3x3-tile crosstalk experiment")
    _add_spec_args(p)
    p.add_argument("--image", type=Path)
    p.add_argument("--kernels", type=Path)
    p.add_argument("--tile-size", type=float)
    p.add_argument("--output", type=Path)
    p.add_argument("--threads", type=int)

    p = sub.add_parser("analyze", parents=[common], help="latency, power and space-bandwidth report")
    for name, value in DEFAULTS["analyze"].items():
        if name == "output":
            p.add_argument("--output", type=Path)
            continue
        kind = int if isinstance(value, int) and not isinstance(value, bool) else float
        p.add_argument("--" + name.replace("_", "-"), type=kind)

    p = sub.add_parser("compare", parents=[common], help="optical path versus digital convolution oracle")
    _add_spec_args(p)
    p.add_argument("--image", type=Path)
    p.add_argument("--kernels", type=Path)
    p.add_argument("--grid-size", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--mask-wavelength", type=float, help="synthesize masks at a different wavelength")
    p.add_argument("--border", type=int)
    p.add_argument("--output", type=Path)
    p.add_argument("--threads", type=int)

    p = sub.add_parser("forward", parents=[common], help="hybrid network forward pass")
    _add_spec_args(p)
    p.add_argument("--image", type=Path, action="append")
    p.add_argument("--network", type=Path)
    p.add_argument("--mode", choices=["optical-simulated", "electronic-oracle"])
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--grid-size", type=int)
    p.add_argument("--wavelengths", type=float, nargs="+")
    p.add_argument("--threads", type=int)
    return parser


def resolve_config(args) -> dict:
    """Merge defaults < config-file section < command-line flags."""
    defaults = DEFAULTS[args.command]
    section = {}
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        raw = doc.get(args.command, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: section {args.command!r} must be an object")
        for key, value in raw.items():
            k = key.replace("-", "_")
            if k not in defaults:
                raise ConfigError(f"{args.config}: unknown key {key!r} in section {args.command!r}")
            section[k] = value
    cfg = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
        elif key in section:
            cfg[key] = section[key]
        else:
            cfg[key] = default
    return cfg


def _require(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ConfigError(f"missing required parameter --{k.replace('_', '-')}")


def _path(value) -> Path:
    return value if isinstance(value, Path) else Path(value)


def _spec(cfg) -> CorrelatorSpec:
    return CorrelatorSpec(
        float(cfg["focal_length"]), float(cfg["lens_diameter"]), float(cfg["pitch"]),
        float(cfg["wavelength"]), cfg["lens_model"], cfg["aperture"],
    )


def _emit(report: dict, output) -> None:
    text = io.dumps_report(report)
    if output is None:
        sys.stdout.write(text)
    else:
        _path(output).write_text(text)


def _images(value) -> list:
    paths = value if isinstance(value, list) else [value]
    return [io.read_pgm(_path(p)) for p in paths]


def cmd_propagate(cfg) -> int:
    _require(cfg, "input", "output", "z")
    src = _path(cfg["input"])
    with open(src, "rb") as fh:
        head = fh.read(len(io.CFLD_MAGIC))
    if head == io.CFLD_MAGIC:
        fld = io.read_cfld(src)
    else:
        fld = field_from_image(io.read_pgm(src), float(cfg["pitch"]), float(cfg["wavelength"]), cfg["encoding"])
    band = {"auto": None, "on": True, "off": False}[cfg["band_limit"]]
    out = propagate(fld, float(cfg["z"]), band_limit=band, pad_factor=int(cfg["pad_factor"]))
    io.write_cfld(_path(cfg["output"]), out)
    log.info("wrote %s", cfg["output"])
    return EXIT_OK


def cmd_run4f(cfg) -> int:
    _require(cfg, "image", "kernels", "out_dir")
    spec = _spec(cfg)
    img = io.read_pgm(_path(cfg["image"]))
    kernels = io.read_kernels(_path(cfg["kernels"]))
    idx = int(cfg["kernel_index"])
    if not 0 <= idx < len(kernels):
        raise ConfigError(f"kernel index {idx} out of range for {len(kernels)} kernels")
    kernel = kernels[idx]
    n = int(cfg["grid_size"] or default_grid_size(img.shape, spec))
    grid = GridSpec(n, n, spec.pitch, spec.wavelength)
    padded, (oy, ox) = embed(img, grid.shape)
    fmask = kernel_to_fourier_mask(kernel, spec, grid)
    binning = int(cfg["sensor_binning"])
    out = run_4f(field_from_image(padded, spec.pitch, spec.wavelength), fmask, spec)
    det = detect(out, float(cfg["detector_scale"]) * fmask.scale**2, spec.pitch * binning)
    h, w = img.shape
    det = det[oy // binning:(oy + h) // binning, ox // binning:(ox + w) // binning]
    out_dir = _path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    peak = float(det.max())
    io.write_pgm(out_dir / "output.pgm", det / peak if peak > 0 else det)
    manifest = {
        "image": str(cfg["image"]),
        "kernel_index": idx,
        "kernel_shape": list(kernel.shape),
        "mask_scale": fmask.scale,
        "detector_scale": float(cfg["detector_scale"]),
        "peak": peak,
        "grid": {"size": n, "pitch_m": spec.pitch, "wavelength_m": spec.wavelength, "sensor_binning": binning},
    }
    (out_dir / "output.json").write_text(io.dumps_report(manifest))
    log.info("wrote %s", out_dir)
    return EXIT_OK


def cmd_layer(cfg) -> int:
    _require(cfg, "image", "kernels", "out_dir")
    chans = _images(cfg["image"])
    flat = io.read_kernels(_path(cfg["kernels"]))
    if not flat:
        raise ConfigError("layer needs at least one kernel")
    kernels = layer_kernels_from_flat(flat, len(chans))
    specs = channel_specs(_spec(cfg), len(chans), cfg["wavelengths"])
    layer = run_layer(chans, kernels, specs, float(cfg["detector_scale"]), cfg["grid_size"], cfg["threads"])
    io.write_layer_output(_path(cfg["out_dir"]), layer)
    log.info("wrote %d maps to %s", len(layer.maps), cfg["out_dir"])
    return EXIT_OK


def cmd_crosstalk(cfg) -> int:
    _require(cfg, "image", "kernels")
    spec = _spec(cfg)
    obj = io.read_pgm(_path(cfg["image"]))
    kernels = io.read_kernels(_path(cfg["kernels"]))
    tile = cfg["tile_size"]
    threads = cfg["threads"] or resolve_threads(None)
    log.info("crosstalk for %d kernels on %d threads", len(kernels), threads)
    if threads == 1 or len(kernels) == 1:
        reports = [crosstalk_report(spec, obj, k, tile) for k in kernels]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(lambda k: crosstalk_report(spec, obj, k, tile), kernels))
    fractions = [r.fraction for r in reports]
    report = {
        "fraction": float(np.mean(fractions)),
        "max_fraction": float(np.max(fractions)),
        "per_tile_powers": [float(np.mean(col)) for col in zip(*(r.per_tile for r in reports))],
        "per_kernel": [
            {"kernel_index": i, "fraction": r.fraction, "per_tile_powers": list(r.per_tile),
             "center_fraction": r.center_fraction}
            for i, r in enumerate(reports)
        ],
        "geometry": {"focal_length_m": spec.focal_length, "lens_diameter_m": spec.lens_diameter,
                     "pitch_m": spec.pitch, "wavelength_m": spec.wavelength, "aperture": spec.aperture,
                     "tile_size_m": tile if tile is not None else spec.lens_diameter},
    }
    _emit(report, cfg["output"])
    return EXIT_OK


def analyze_report(cfg) -> dict:
    fields = analysis.PerfParams.__dataclass_fields__
    params = analysis.PerfParams(**{k: cfg[k] for k in fields})
    lat = analysis.latency_model(params)
    per_side, total = analysis.space_bandwidth(float(cfg["lens_diameter"]), params.focal_length,
                                              float(cfg["wavelength"]))
    layout = layout_array(params.n_kernel, int(cfg["n_channels"]), float(cfg["lens_diameter"]))
    return {
        "latency": lat.as_dict(),
        "optical_power_w": analysis.optical_power(params),
        "electronic_energy_j": analysis.electronic_energy(params),
        "sbp": {"per_side": per_side, "total": total, "wavelength_m": float(cfg["wavelength"])},
        "mac_count": analysis.mac_count(params.n, params.k, params.n_kernel),
        "crossover_pixels": analysis.crossover_pixels(lat.total, params.electronic_s_per_pixel),
        "layout": {
            "n_tiles": layout.n_tiles, "rows": layout.rows, "cols": layout.cols,
            "tile_size_m": layout.tile_size,
            "area_m2": layout.occupied_area, "area_cm2": layout.occupied_area * 1e4,
            "grid_area_m2": layout.total_area,
        },
        "reference": {
            "cpu_layer_times_ms": list(analysis.REFERENCE_LAYER_TIMES_MS),
            "cpu_layer_share": list(analysis.REFERENCE_LAYER_SHARE),
            "classification_accuracy": analysis.REFERENCE_ACCURACY,
        },
    }


def cmd_analyze(cfg) -> int:
    _emit(analyze_report(cfg), cfg["output"])
    return EXIT_OK


def cmd_compare(cfg) -> int:
    _require(cfg, "image", "kernels")
    spec = _spec(cfg)
    img = io.read_pgm(_path(cfg["image"]))
    kernels = io.read_kernels(_path(cfg["kernels"]))
    mask_spec = spec if cfg["mask_wavelength"] is None else spec.with_wavelength(float(cfg["mask_wavelength"]))
    per_kernel = []
    for i, k in enumerate(kernels):
        border = int(cfg["border"]) if cfg["border"] is not None else max(k.shape)
        opt, fmask = optical_convolution(
            img, k, mask_spec, cfg["grid_size"], propagation_wavelength=spec.wavelength
        )
        ref = ideal_convolve(img, k) ** 2
        per_kernel.append({
            "kernel_index": i,
            "nrmse": nrmse(opt, ref, border),
            "correlation": correlation(opt, ref, border),
            "mask_scale": fmask.scale,
        })
    worst = max(p["nrmse"] for p in per_kernel)
    report = {
        "nrmse": worst,
        "correlation": min(p["correlation"] for p in per_kernel),
        "threshold": float(cfg["threshold"]),
        "passed": worst <= float(cfg["threshold"]),
        "per_kernel": per_kernel,
    }
    _emit(report, cfg["output"])
    return EXIT_OK if report["passed"] else EXIT_THRESHOLD


def cmd_forward(cfg) -> int:
    _require(cfg, "image", "network", "out_dir")
    chans = _images(cfg["image"])
    net = NetworkSpec.from_json(_path(cfg["network"]))
    if cfg["mode"] is not None:
        net.first_layer_mode = cfg["mode"]
    trace = []
    out = network_forward(np.stack(chans), net, _spec(cfg), cfg["wavelengths"], cfg["grid_size"],
                          cfg["threads"], trace)
    out_dir = _path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    np.save(out_dir / "features.npy", out)
    manifest = {
        "first_layer_mode": net.first_layer_mode,
        "channel_policy": net.channel_policy,
        "trace": [{"layer": name, "shape": list(shape)} for name, shape in trace],
        "output_shape": list(out.shape),
    }
    (out_dir / "manifest.json").write_text(io.dumps_report(manifest))
    return EXIT_OK


COMMANDS = {
    "propagate": cmd_propagate,
    "run4f": cmd_run4f,
    "layer": cmd_layer,
    "crosstalk": cmd_crosstalk,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
    "forward": cmd_forward,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(message)s",
    )
    try:
        cfg = resolve_config(args)
        if "threads" in cfg and cfg["threads"] is not None:
            cfg["threads"] = resolve_threads(int(cfg["threads"]))
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            return COMMANDS[args.command](cfg)
    except io.FormatError as exc:
        print(f"fourfold: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"fourfold: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericError, FloatingPointError) as exc:
        print(f"fourfold: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FourfoldError, ValueError, TypeError) as exc:
        print(f"fourfold: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
