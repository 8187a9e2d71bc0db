"""Command-line entry point of the simulator.

Subcommands:
- gen-data: write a deterministic synthetic dataset as PPM files
- train: run one training strategy and write both stage checkpoints
- eval: PSNR over SNR points for one transmitted subset
- sweep: the Train1Trans1 / Train2Trans1 / Train2Trans2 matrix per channel
- gradcheck: finite-difference check of every differentiable op
- reconstruct: send one PPM image through the codec and channel

Logs go to stderr as JSON; results go to stdout and the requested files.
Every invocation gets a run id that correlates its log events.
"""

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from app.channel.channel import POWER_NORMALIZE_CASE
from app.channel.schemas import ChannelKind, ChannelSpec
from app.core.config import get_settings, load_config_file, validate_config
from app.core.exceptions import ConfigError, ShapeError, handle_cli_error
from app.core.logging import get_logger, set_run_id, setup_logging
from app.data.dataset import load_image_dir, save_image_dir, split
from app.data.ppm import load_ppm, save_ppm
from app.data.synthetic import SyntheticSpec, synth_dataset
from app.evaluation.csv_io import write_csv
from app.evaluation.metrics import baseline_psnr, psnr
from app.evaluation.sweep import EvalConfig, SweepRecord, check_compatible, evaluate, sweep_matrix
from app.safenet.bandwidth import select_subset
from app.safenet.checkpoint import Checkpoint, load_checkpoint
from app.safenet.pipeline import forward_pipeline
from app.tensor.gradcheck import TENSOR_CASES, run_suite
from app.tensor.rng import make_rng
from app.tensor.tensor import Tensor, no_grad
from app.trainer.schemas import TrainingFileConfig
from app.trainer.strategies import STAGE_A, run_strategy

logger = get_logger(__name__)

type Handler = Callable[[argparse.Namespace], int]

TEST_DIR = "test"


def _print_records(records: Sequence[SweepRecord]) -> None:
    for r in records:
        print(
            f"strategy={r.strategy} Train{r.train_x}Trans{r.trans_y} {r.channel} "
            f"snr={r.snr_db:g}dB psnr={r.mean_psnr_db:.4f}±{r.std_psnr_db:.4f} "
            f"trials={r.trials}"
        )


def _eval_config(args: argparse.Namespace, **values: Any) -> EvalConfig:
    raw: dict[str, object] = {
        "snrs": args.snrs,
        "trials": args.trials,
        "seed": args.seed,
        "noiseless": args.noiseless,
        "workers": args.workers,
    }
    raw.update({k: v for k, v in values.items() if v is not None})
    return validate_config(raw, EvalConfig, source="command line")


def _labels(checkpoint: Checkpoint) -> dict[str, Any]:
    """Strategy and TrainX labels recorded by the trainer in checkpoint metadata."""
    labels: dict[str, Any] = {"strategy": int(checkpoint.metadata.get("strategy", 0))}
    if checkpoint.metadata.get("stage") == STAGE_A:
        labels["train_x"] = 1
    return labels


def cmd_gen_data(args: argparse.Namespace) -> int:
    spec = load_config_file(args.spec, SyntheticSpec) if args.spec else SyntheticSpec()
    paths = save_image_dir(synth_dataset(spec), args.out)
    print(f"wrote {len(paths)} images to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    file_config = (
        load_config_file(args.config, TrainingFileConfig) if args.config else TrainingFileConfig()
    )
    data = split(load_image_dir(args.data), file_config.fractions, file_config.split_seed)
    _, reports = run_strategy(
        data,
        file_config.safe_config(),
        file_config.plan(args.strategy),
        out_dir=args.out,
        metadata={"split_seed": file_config.split_seed},
    )
    save_image_dir(data.test, args.out / TEST_DIR)
    for report in reports:
        print(
            f"{report.stage}: epochs={report.stop_epoch} ({report.stop_reason}) "
            f"best_val_loss={report.best_val_loss:.6f} checkpoint={report.checkpoint_path}"
        )
    print(f"test images: {args.out / TEST_DIR}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    net = checkpoint.net
    dataset = load_image_dir(args.data)
    expected = (
        load_config_file(args.config, TrainingFileConfig).safe_config() if args.config else None
    )
    check_compatible(net, expected, dataset)
    subset = select_subset(net.config, args.bandwidth) if args.bandwidth is not None else None
    config = _eval_config(
        args,
        channel=args.channel,
        trans=args.trans,
        subset=subset,
        level=args.level,
        **_labels(checkpoint),
    )
    records = evaluate(net, dataset, config)
    _print_records(records)
    if args.baseline is not None:
        baseline = baseline_psnr(load_image_dir(args.baseline), dataset)
        print(f"dataset-mean baseline psnr={baseline:.4f}")
    if args.csv is not None:
        write_csv(records, args.csv)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    dataset = load_image_dir(args.data)
    check_compatible(checkpoint.net, None, dataset)
    base = _eval_config(args, strategy=int(checkpoint.metadata.get("strategy", 0)))
    channels = [ChannelKind(c.strip()) for c in args.channels.split(",") if c.strip()]
    records = sweep_matrix(checkpoint.net, dataset, base, channels)
    _print_records(records)
    write_csv(records, args.csv)
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    reports = run_suite((*TENSOR_CASES, POWER_NORMALIZE_CASE), points=args.points, seed=args.seed)
    for r in reports:
        status = "ok" if r.passed else "FAILED"
        print(f"{r.op:<18} max_rel_err={r.max_relative_error:.3e} points={r.points} {status}")
    return 0 if all(r.passed for r in reports) else 1


def cmd_reconstruct(args: argparse.Namespace) -> int:
    net = load_checkpoint(args.checkpoint).net
    image = load_ppm(args.input)
    if image.shape != net.config.image_shape:
        raise ShapeError(f"image is {image.shape}, checkpoint expects {net.config.image_shape}")
    batch = Tensor(image.data[None])
    spec = ChannelSpec(kind=ChannelKind(args.channel), snr_db=args.snr, noiseless=args.noiseless)
    subset = (0,) if args.trans == 1 else (0, 1)
    streams = {i: make_rng(args.seed, "reconstruct", i) for i in subset}
    with no_grad():
        out = forward_pipeline(net, batch, spec, subset, streams, args.level, clamp_output=True)
    save_ppm(out.reconstruction.data[0], args.output)
    print(f"wrote {args.output} psnr={psnr(batch, out.reconstruction):.4f}")
    return 0


def _add_channel_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--snrs", default="0,5,10,15,20", help="comma-separated SNRs in dB")
    parser.add_argument("--trials", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--noiseless", action="store_true", help="infinite-SNR channel")
    parser.add_argument("--workers", type=int, default=None, help="default: SAFE_THREADS")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="safe-sim", description=get_settings().app_name)
    parser.add_argument("--log-level", default=None, help="override LOG_LEVEL")
    parser.add_argument("--run-id", default=None, help="correlation id for log events")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic PPM dataset")
    p.add_argument("--spec", type=Path, default=None, help="synthetic spec config file")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", help="train one strategy")
    p.add_argument("--strategy", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--config", type=Path, default=None, help="training config file")
    p.add_argument("--data", type=Path, required=True, help="directory of .ppm images")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="PSNR over SNR points")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--channel", choices=[k.value for k in ChannelKind], default="awgn")
    chosen = p.add_mutually_exclusive_group()
    chosen.add_argument("--trans", type=int, choices=(1, 2), default=None)
    chosen.add_argument("--bandwidth", default=None, help="bandwidth ratio, e.g. 1/12")
    p.add_argument("--level", type=int, choices=(1, 2), default=None, help="decoder level")
    p.add_argument("--config", type=Path, default=None, help="training config to check against")
    p.add_argument(
        "--baseline", type=Path, default=None, help="training images for the mean baseline"
    )
    p.add_argument("--csv", type=Path, default=None)
    _add_channel_args(p)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("sweep", help="TrainXTransY matrix for each channel")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--channels", default="awgn,rayleigh")
    p.add_argument("--csv", type=Path, required=True)
    _add_channel_args(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_gradcheck)

    p = sub.add_parser("reconstruct", help="reconstruct one image through the channel")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", dest="output", type=Path, required=True)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--channel", choices=[k.value for k in ChannelKind], default="awgn")
    p.add_argument("--trans", type=int, choices=(1, 2), default=2)
    p.add_argument("--level", type=int, choices=(1, 2), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noiseless", action="store_true")
    p.set_defaults(handler=cmd_reconstruct)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    args = build_parser().parse_args(argv)
    level = args.log_level or get_settings().log_level
    try:
        setup_logging(log_level=level)
    except ValueError as exc:
        setup_logging()
        return handle_cli_error(ConfigError(str(exc)), args.command)
    set_run_id(args.run_id)
    handler: Handler = args.handler
    logger.info("cli.command_started", command=args.command)
    try:
        code = handler(args)
    except Exception as exc:
        return handle_cli_error(exc, args.command)
    logger.info("cli.command_completed", command=args.command, exit_code=code)
    return code


if __name__ == "__main__":
    sys.exit(main())
