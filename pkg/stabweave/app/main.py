"""Command-line entry point: synth, estimate, stitch and eval subcommands."""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from loguru import logger
from pydantic import ValidationError

from stabweave.app.composition import (
    PipelineDependencies,
    create_pipeline_dependencies,
    generate_synthetic_dataset,
)
from stabweave.app.config.settings import Settings
from stabweave.app.constants import ExitCode, StitchMode
from stabweave.app.core import SERVICE_NAME
from stabweave.app.core.logging import configure_logging
from stabweave.app.domain.errors import EstimationError, InputError
from stabweave.app.infrastructure.persistence.json_documents import write_json_document
from stabweave.app.schemas.report import VideoReport
from stabweave.app.schemas.synthetic import SyntheticSpec

REPORT_FILE = "report.json"


def _log(event: str, **kwargs: Any) -> None:
    logger.bind(service_name=SERVICE_NAME, event=event, **kwargs).info("")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabweave", description="Stabilized two-view video stitching.")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="generate a synthetic two-view dataset")
    synth.add_argument("--spec", type=Path, help="SyntheticSpec JSON; defaults when omitted")
    synth.add_argument("--out", type=Path, required=True)

    def add_inputs(p: argparse.ArgumentParser) -> None:
        p.add_argument("--ref", type=Path, required=True, help="reference view PNG directory")
        p.add_argument("--tgt", type=Path, required=True, help="target view PNG directory")
        p.add_argument("--config", type=Path, help="PipelineConfig JSON")

    estimate = commands.add_parser("estimate", help="estimate motions and export a mesh cache")
    add_inputs(estimate)
    estimate.add_argument("--out", type=Path, required=True, help="mesh cache JSON path")

    for name, help_text in (("stitch", "stitch and write frames plus report"), ("eval", "stitch and write the report only")):
        p = commands.add_parser(name, help=help_text)
        add_inputs(p)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--mode", choices=[m.value for m in StitchMode])
        p.add_argument("--meshes", type=Path, help="mesh cache JSON; skips estimation")
        p.add_argument("--beta", type=float)
        p.add_argument("--window", type=int)
    return parser


async def _stitch(deps: PipelineDependencies, args: argparse.Namespace, *, write_frames: bool) -> VideoReport:
    service = deps.stitching_service(
        args.ref,
        args.tgt,
        out_dir=args.out if write_frames else None,
        meshes_path=args.meshes,
    )
    result = await service.run()
    report_path = args.out / REPORT_FILE if write_frames else args.out
    write_json_document(report_path, result.report)
    _log("report_written", path=str(report_path))
    return result.report


async def run_command(args: argparse.Namespace, settings: Settings) -> None:
    if args.command == "synth":
        spec = SyntheticSpec()
        if args.spec is not None:
            spec = SyntheticSpec.model_validate_json(args.spec.read_text(encoding="utf-8"))
        generate_synthetic_dataset(spec, args.out)
        return

    deps = create_pipeline_dependencies(
        settings,
        config_path=args.config,
        beta=getattr(args, "beta", None),
        window=getattr(args, "window", None),
        mode=getattr(args, "mode", None),
    )
    deps.open()
    try:
        if args.command == "estimate":
            await deps.estimation_service(args.ref, args.tgt, args.out).run()
        else:
            await _stitch(deps, args, write_frames=args.command == "stitch")
    finally:
        deps.close()


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings()
        configure_logging(settings.log_level)
        _log("command_started", command=args.command)
        asyncio.run(run_command(args, settings))
    except (InputError, ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        logger.error("input error: {}", exc)
        return ExitCode.INPUT_ERROR
    except EstimationError as exc:
        logger.error("estimation failed: {}", exc)
        return ExitCode.ESTIMATION_FAILURE
    except KeyboardInterrupt:
        _log("command_interrupted", command=args.command)
        return ExitCode.INTERRUPTED
    _log("command_finished", command=args.command)
    return ExitCode.SUCCESS


if __name__ == "__main__":
    sys.exit(main())
