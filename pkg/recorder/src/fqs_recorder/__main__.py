"""Command-line capture: drive a pipeline and write an FQS1 trajectory."""

from __future__ import annotations

import argparse
import sys

from .capture import HookSpec, RecorderError, record_run


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fqs-record",
        description="Record per-step noise-prediction branches into an FQS1 trajectory.",
    )
    parser.add_argument("--model", required=True, help="pipeline id (built-ins: mock:cfg, mock:const)")
    parser.add_argument("--prompt", required=True)
    parser.add_argument("--steps", type=int, required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--guidance-scale", type=float, default=7.5)
    args = parser.parse_args(argv)

    spec = HookSpec(
        pipeline_id=args.model,
        steps=args.steps,
        prompt=args.prompt,
        output_path=args.out,
        seed=args.seed,
        guidance_scale=args.guidance_scale,
    )
    try:
        path = record_run(spec)
    except RecorderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
