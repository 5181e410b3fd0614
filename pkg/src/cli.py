"""``cucvae`` command line: prepare, train, synthesize, edit, evaluate, diversity."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from rich.logging import RichHandler

from src.utils.config import LOG_FORMAT, LOG_LEVEL
from src.utils.errors import CucVaeError
from src.utils.run_config import RunConfig, resolve_config, save_config

logger = logging.getLogger(__name__)


def setup_logging(level: str = LOG_LEVEL) -> None:
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT if level == "DEBUG" else "%(message)s",
        handlers=[RichHandler(rich_tracebacks=False, show_path=False)],
        force=True,
    )


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="run config YAML")
    parser.add_argument("--preset", action="append", default=[], help="named config delta (repeatable)")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="dotted override, e.g. train.lambda_mask=2 (repeatable)",
    )
    parser.add_argument("--run-dir", help="output directory (defaults to paths.run_dir)")
    parser.add_argument("--log-level", default=LOG_LEVEL)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cucvae", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="extract mel / prosody caches from the manifest")
    _common(p)
    p.add_argument("--manifest", help="overrides paths.manifest")

    p = sub.add_parser("train", help="train the acoustic model")
    _common(p)
    p.add_argument("--mode", choices=("tts", "se"), default="tts")

    p = sub.add_parser("synthesize", help="synthesize a corpus utterance or raw text")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--utterance", help="utterance id from the prepared corpus")
    group.add_argument("--text", help="raw text")
    p.add_argument("--speaker", default="")
    p.add_argument("--before", action="append", default=[], help="preceding utterance text (repeatable)")
    p.add_argument("--after", action="append", default=[], help="following utterance text (repeatable)")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reconstruct", action="store_true", help="posterior path from the reference mel")
    p.add_argument("--vocoder", help="TorchScript vocoder (default: Griffin-Lim)")

    p = sub.add_parser("edit", help="apply edit scripts")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scripts", required=True, help="JSON-lines edit scripts")
    p.add_argument("--mode", choices=("entire", "mel_cut", "wave_cut"), default="entire")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vocoder")

    p = sub.add_parser("evaluate", help="score (ref, hyp) audio pairs")
    _common(p)
    p.add_argument("--pairs", required=True, help="JSON-lines {id, ref, hyp, text}")

    p = sub.add_parser("diversity", help="prosody spread of repeated samples")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--utterance", required=True)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    return parser


def run(args: argparse.Namespace) -> None:
    config: RunConfig = resolve_config(args.config, args.preset, args.overrides)
    run_dir = Path(args.run_dir or config.paths.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, run_dir / "config.yaml")

    if args.command == "prepare":
        from src.pipeline.features import prepare_features

        prepare_features(config, args.manifest)
    elif args.command == "train":
        from src.pipeline.trainer import cmd_train

        result = cmd_train(config, args.mode, run_dir)
        logger.info(f"Final checkpoint: {result.checkpoint_path}")
    elif args.command == "synthesize":
        from src.pipeline.synthesis import cmd_synthesize

        cmd_synthesize(
            config,
            args.checkpoint,
            run_dir,
            utterance_id=args.utterance,
            text=args.text,
            speaker_id=args.speaker,
            neighbors_before=args.before,
            neighbors_after=args.after,
            temperature=args.temperature,
            seed=args.seed,
            reconstruct=args.reconstruct,
            vocoder_path=args.vocoder,
        )
    elif args.command == "edit":
        from src.pipeline.editing import cmd_edit

        cmd_edit(config, args.checkpoint, args.scripts, run_dir, args.mode, args.seed, args.vocoder)
    elif args.command == "evaluate":
        from src.pipeline.evaluation import cmd_evaluate

        cmd_evaluate(config, args.pairs, run_dir)
    elif args.command == "diversity":
        from src.pipeline.evaluation import cmd_diversity

        cmd_diversity(
            config, args.checkpoint, args.utterance, run_dir, args.samples, args.temperature, args.seed
        )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        run(args)
    except CucVaeError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
