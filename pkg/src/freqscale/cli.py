"""Command-line surface: decompose, scale, sample, analyze, mask.

Exit codes: 0 success, 2 input/config error, 3 data-contract error (a
required prediction branch is missing), 4 numeric failure (imaginary
residue). Configuration comes from a YAML file (--config) with flag
overrides; every value is validated before any output file is touched.
FQS_THREADS caps internal parallelism when rescaling trajectories.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Optional

from . import container, diagnostics
from .config import (
    ConfigError,
    build_guidance_config,
    build_sampler_settings,
    load_config_file,
    merge_config,
)
from .cutoff import energy_cutoff_radius, spatial_cutoff_radius
from .guidance import GuidanceStepError, process_trajectory
from .spectral import (
    ImaginaryResidueError,
    build_radial_mask,
    decompose,
    fft2_centered,
)
from .tensors import (
    LatentTensor,
    MissingBranchError,
    Trajectory,
    TrajectoryRecord,
    ValidationError,
    build_trajectory,
)
from .toy import ddim_sample, linear_beta_schedule, resolve_mixture

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONTRACT = 3
EXIT_NUMERIC = 4


def _load_tensor(path: str) -> LatentTensor:
    value = container.read_container(path)
    if not isinstance(value, LatentTensor):
        raise ConfigError(f"{path} holds a trajectory, expected a tensor")
    return value


def _load_trajectory(path: str) -> Trajectory:
    value = container.read_container(path)
    if not isinstance(value, Trajectory):
        raise ConfigError(f"{path} holds a tensor, expected a trajectory")
    return value


def _merged(args: argparse.Namespace, keys: tuple[str, ...]) -> dict[str, Any]:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {key: getattr(args, key, None) for key in keys}
    overrides["preset"] = getattr(args, "preset", None)
    return merge_config(file_values, overrides)


_GUIDANCE_KEYS = ("omega", "l", "h", "schedule", "r0", "strategy", "target")
_SAMPLER_KEYS = _GUIDANCE_KEYS + (
    "seed",
    "steps",
    "substeps",
    "beta_start",
    "beta_end",
    "mixture",
    "condition",
)


def cmd_decompose(args: argparse.Namespace) -> int:
    tensor = _load_tensor(args.input)
    h, w, _ = tensor.shape
    strategy = args.strategy or "spatial"
    if strategy == "spatial":
        radius = spatial_cutoff_radius(h, w, args.r0)
    else:
        radius = float(energy_cutoff_radius(fft2_centered(tensor), args.r0))
    mask = build_radial_mask(h, w, radius)
    low, high = decompose(tensor, mask)
    container.write_container(low, args.out_low)
    container.write_container(high, args.out_high)
    print(f"cutoff radius: {radius}")
    print(f"low bins: {mask.low_count}  high bins: {mask.high_count}")
    print(f"wrote {args.out_low} and {args.out_high}")
    return EXIT_OK


def cmd_scale(args: argparse.Namespace) -> int:
    merged = _merged(args, _GUIDANCE_KEYS)
    config = build_guidance_config(merged)
    trajectory = _load_trajectory(args.input)

    if config.target == "delta":
        if not (trajectory.has_branch("eps_cond") and trajectory.has_branch("eps_uncond")):
            raise MissingBranchError("delta target needs both prediction branches on every record")
    elif not trajectory.has_branch("eps_cond"):
        raise MissingBranchError("epsilon target needs the conditional prediction on every record")

    outputs = process_trajectory(trajectory, config)

    print(f"{'step':>6} {'timestep':>10} {'radius':>10} {'l':>8} {'h':>8}")
    for rec, out in zip(trajectory.records, outputs):
        print(
            f"{rec.step_index:>6} {rec.timestep:>10.3f} {out.radius_used:>10.4f}"
            f" {out.low_scale:>8.4f} {out.high_scale:>8.4f}"
        )

    records = []
    for rec, out in zip(trajectory.records, outputs):
        records.append(
            TrajectoryRecord(
                rec.step_index,
                rec.timestep,
                out.eps_hat,
                out.delta_scaled if args.emit_delta else None,
                None,
            )
        )
    metadata = {
        "command": "scale",
        "source": str(args.input),
        "content": "x_t holds eps_hat" + ("; eps_cond holds the rescaled target" if args.emit_delta else ""),
        "omega": config.guidance_scale,
        "l": config.schedule.low,
        "h": config.schedule.high,
        "schedule": config.schedule.kind,
        "r0": config.cutoff.ratio,
        "strategy": config.cutoff.strategy,
        "target": config.target,
    }
    written = container.write_container(build_trajectory(records, metadata), args.out)
    print(f"wrote {args.out} ({written} bytes)")
    return EXIT_OK


def _sample_once(settings, config, seed: int, out_path: Path, traj_path: Optional[Path]) -> None:
    mixture = resolve_mixture(settings.mixture_spec)
    schedule = linear_beta_schedule(settings.steps, settings.beta_start, settings.beta_end)
    extra = dict(settings.effective)
    extra["seed"] = seed
    x0, trajectory = ddim_sample(
        mixture, schedule, config, settings.condition, seed, settings.substeps, metadata=extra
    )
    container.write_container(x0, out_path)
    if traj_path is not None:
        container.write_container(trajectory, traj_path)


def cmd_sample(args: argparse.Namespace) -> int:
    merged = _merged(args, _SAMPLER_KEYS)
    settings = build_sampler_settings(merged)
    config = build_guidance_config(merged)
    # fail on unknown fixtures/labels before writing anything
    mixture = resolve_mixture(settings.mixture_spec)
    if settings.condition is not None:
        mixture.subset(settings.condition)

    out = Path(args.out)
    if args.batch is not None:
        if args.batch < 1:
            raise ConfigError("--batch must be >= 1")
        for k in range(args.batch):
            seed = settings.seed + k
            path = out.with_name(f"{out.stem}-seed{seed:04d}{out.suffix}")
            _sample_once(settings, config, seed, path, None)
            print(f"seed {seed}: wrote {path}")
        return EXIT_OK

    traj_path = Path(args.traj_out) if args.traj_out else out.with_suffix(".traj" + out.suffix)
    _sample_once(settings, config, settings.seed, out, traj_path)
    print(f"wrote {out} and {traj_path}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    trajectory = _load_trajectory(args.input)
    tensors = trajectory.select(args.representation)

    if args.which == "timeavg":
        average = diagnostics.time_average(tensors)
        diagnostics.write_map_csv(average, args.out)
    elif args.which == "spectra":
        profiles = [
            diagnostics.radial_profile(fft2_centered(t), step=i) for i, t in enumerate(tensors)
        ]
        diagnostics.write_profiles_csv(profiles, args.out)
    elif args.which == "energy":
        spectra = [fft2_centered(t) for t in tensors]
        if args.r0_sweep:
            ratios = [float(v) for v in args.r0_sweep.split(",") if v.strip()]
            for ratio in ratios:
                if not 0.0 <= ratio <= 1.0:
                    raise ConfigError(f"sweep ratio {ratio} outside [0, 1]")
            rows = []
            for step, spectrum in enumerate(spectra):
                for ratio in ratios:
                    rows.append((step, ratio, energy_cutoff_radius(spectrum, ratio)))
            out_path = Path(args.out)
            out_path.parent.mkdir(parents=True, exist_ok=True)
            with out_path.open("w", encoding="utf-8", newline="") as fh:
                fh.write("step,r0,radius\n")
                for step, ratio, radius in rows:
                    fh.write(f"{step},{repr(ratio)},{radius}\n")
        else:
            curves = [diagnostics.energy_curve(s, step=i) for i, s in enumerate(spectra)]
            diagnostics.write_curves_csv(curves, args.out)
    else:
        raise ConfigError(f"unknown analysis {args.which!r}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_mask(args: argparse.Namespace) -> int:
    if args.rc is not None:
        if args.rc < 0:
            raise ConfigError(f"cutoff radius must be >= 0, got {args.rc}")
        height, width = args.height, args.width
        if height is None or width is None:
            raise ConfigError("--height and --width are required with --rc")
        radius = args.rc
    else:
        if args.r0 is None:
            raise ConfigError("either --rc or --r0 is required")
        strategy = args.strategy or "spatial"
        if strategy == "spatial":
            height, width = args.height, args.width
            if height is None or width is None:
                raise ConfigError("--height and --width are required for the spatial strategy")
            radius = spatial_cutoff_radius(height, width, args.r0)
        else:
            if not args.input:
                raise ConfigError("the energy strategy needs --input with a tensor to measure")
            tensor = _load_tensor(args.input)
            height, width, _ = tensor.shape
            radius = float(energy_cutoff_radius(fft2_centered(tensor), args.r0))
    if height < 1 or width < 1:
        raise ConfigError("mask dims must be >= 1")

    mask = build_radial_mask(height, width, radius)
    container.write_container(LatentTensor(mask.low[None, :, :].astype(float)), args.out)
    print(f"cutoff radius: {radius}")
    print(f"low bins: {mask.low_count}  high bins: {mask.high_count}")
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fqs",
        description="Band-split rescaling of classifier-free guidance, with analysis tools.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_guidance_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="YAML run config; flags override file values")
        p.add_argument("--preset", help="named preset supplying default values")
        p.add_argument("--omega", type=float, help="guidance scale")
        p.add_argument("--l", type=float, help="low-band scale")
        p.add_argument("--h", type=float, help="high-band scale (peak for linear schedules)")
        p.add_argument("--schedule", choices=["constant", "linear-decay", "linear-growth"])
        p.add_argument("--r0", type=float, help="cutoff ratio in [0, 1]")
        p.add_argument("--strategy", choices=["spatial", "energy"])
        p.add_argument("--target", choices=["delta", "epsilon"])

    p = sub.add_parser("decompose", help="split a tensor into low/high band files")
    p.add_argument("--input", required=True)
    p.add_argument("--r0", type=float, required=True)
    p.add_argument("--strategy", choices=["spatial", "energy"], default="spatial")
    p.add_argument("--out-low", required=True)
    p.add_argument("--out-high", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("scale", help="rescale a recorded trajectory's guidance bands")
    p.add_argument("--input", required=True, help="trajectory container")
    p.add_argument("--out", required=True, help="output trajectory of guided predictions")
    p.add_argument("--emit-delta", action="store_true", help="also store the rescaled target")
    add_guidance_flags(p)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("sample", help="run the toy sampler end to end")
    p.add_argument("--out", required=True, help="output sample tensor")
    p.add_argument("--traj-out", help="output trajectory (default: <out>.traj)")
    p.add_argument("--batch", type=int, help="sample this many consecutive seeds")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="noise schedule length")
    p.add_argument("--substeps", type=int, help="sampler calls (<= steps)")
    p.add_argument("--beta-start", dest="beta_start", type=float)
    p.add_argument("--beta-end", dest="beta_end", type=float)
    p.add_argument("--mixture", help="fixture name (point, two-band, spectral-trend)")
    p.add_argument("--condition", help="component label to condition on")
    add_guidance_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("analyze", help="export trajectory diagnostics as CSV")
    p.add_argument("--input", required=True, help="trajectory container")
    p.add_argument("--which", choices=["spectra", "energy", "timeavg"], required=True)
    p.add_argument("--representation", choices=["x", "eps", "delta"], default="delta")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--r0-sweep", dest="r0_sweep", help="comma-separated ratios; emit per-step cutoff radii")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("mask", help="write a radial low mask as a 0/1 tensor")
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--rc", type=float, help="explicit cutoff radius")
    p.add_argument("--r0", type=float, help="cutoff ratio (with --strategy)")
    p.add_argument("--strategy", choices=["spatial", "energy"])
    p.add_argument("--input", help="tensor container (energy strategy)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GuidanceStepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, MissingBranchError):
            return EXIT_CONTRACT
        if isinstance(exc.cause, ImaginaryResidueError):
            return EXIT_NUMERIC
        return EXIT_INPUT
    except MissingBranchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except ImaginaryResidueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except (ConfigError, ValidationError, container.ContainerError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
