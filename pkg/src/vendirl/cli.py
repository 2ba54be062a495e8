"""
Command-line interface.

    vendirl train --config experiment.ini --out runs/vendirl
    vendirl eval runs/vendirl/policy.npz --config experiment.ini
    vendirl plot runs/vendirl/trajectories.csv skills.svg
    vendirl score some-trajectories.csv

Exit status is 0 on success, 1 if something failed while running, and
2 for problems with the command line, configuration or input files.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Union

from vendirl.config import ExperimentConfig, dump_config, load_config, with_overrides
from vendirl.exceptions import (
    ConfigError,
    ParameterError,
    ShapeError,
    TrajectoryFileError,
    VendiRLError,
)
from vendirl.misl import train_misl
from vendirl.plot import render
from vendirl.policy import PolicySkillSet, load_checkpoint, save_checkpoint
from vendirl.trainer import (
    EvalResult,
    evaluate,
    goal_effective_number,
    standalone_eval_rng,
    train,
)
from vendirl.trajectories import format_point, read_trajectories, write_trajectories
from vendirl.vendi import effective_unique_skills

LOGGER = logging.getLogger("vendirl")
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad input from the user (exit status 2)."""


def make_argparse() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Experiment configuration file")
    common.add_argument("--seed", type=int, help="Override the random seed")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument(
        "-v", "--verbose", action="store_true", help="Log debugging output"
    )
    verbosity.add_argument(
        "-q", "--quiet", action="store_true", help="Only log warnings and errors"
    )

    parser = argparse.ArgumentParser(
        prog="vendirl", description="Skill discovery with the Vendi Score"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    ptrain = commands.add_parser("train", parents=[common], help="Train skills")
    ptrain.add_argument("--out", type=Path, help="Output directory")
    ptrain.add_argument(
        "--method", choices=["vendirl", "misl", "random"], help="Training method"
    )
    peval = commands.add_parser(
        "eval", parents=[common], help="Evaluate a policy checkpoint"
    )
    peval.add_argument("checkpoint", type=Path, help="Checkpoint (.npz) to evaluate")
    peval.add_argument("--out", type=Path, help="Directory for trajectories.csv")
    pplot = commands.add_parser("plot", parents=[common], help="Plot trajectories")
    pplot.add_argument("trajectories", type=Path, help="Trajectory CSV file")
    pplot.add_argument("output", type=Path, help="Image (.svg or .png) to write")
    pscore = commands.add_parser(
        "score", parents=[common], help="Effective number of skills in a CSV file"
    )
    pscore.add_argument("trajectories", type=Path, help="Trajectory CSV file")
    return parser


def get_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig() if args.config is None else load_config(args.config)
    return with_overrides(
        cfg,
        seed=args.seed,
        method=getattr(args, "method", None),
        out=getattr(args, "out", None),
    )


def cmd_train(cfg: ExperimentConfig) -> int:
    """Train, writing metrics, checkpoints and the resolved configuration."""
    out = cfg.out
    checkpoints = out / "checkpoints"
    checkpoints.mkdir(parents=True, exist_ok=True)
    with open(out / "config.ini", "w", encoding="utf-8", newline="\n") as outfh:
        dump_config(cfg, outfh)

    def on_eval(epoch: int, policy: PolicySkillSet, result: EvalResult) -> None:
        path = checkpoints / f"epoch-{epoch:06d}.npz"
        save_checkpoint(policy, path)
        LOGGER.info("Saved checkpoint %s (eval VS %.3f)", path, result.vs)

    LOGGER.info(
        "Training %d skills with %s for %d epochs",
        cfg.train.n_skills,
        cfg.method,
        cfg.train.epochs,
    )
    if cfg.method == "misl":
        policy, log = train_misl(cfg.train, cfg.misl, on_eval=on_eval)
    else:
        policy, log = train(cfg.train, learn=cfg.method != "random", on_eval=on_eval)
    save_checkpoint(policy, out / "policy.npz")
    with open(out / "metrics.csv", "w", encoding="utf-8", newline="") as outfh:
        log.write_csv(outfh, record_wall_time=cfg.record_wall_time)
    counts = [log.goal_counts.get(g, 0) for g in range(cfg.train.n_skills)]
    if sum(counts):
        LOGGER.info(
            "Effective number of goals selected: %.3f of %d",
            goal_effective_number(counts),
            cfg.train.n_skills,
        )
    scores = log.eval_scores()
    if scores:
        epoch, vs = scores[-1]
        LOGGER.info("Final eval VS (epoch %d): %.3f", epoch, vs)
    return 0


def cmd_eval(checkpoint: Path, cfg: ExperimentConfig) -> int:
    """Roll out a checkpoint, print its score, write its trajectories."""
    if not checkpoint.exists():
        raise UsageError(f"No such checkpoint: {checkpoint}")
    policy = load_checkpoint(checkpoint)
    if policy.n != cfg.train.n_skills or policy.obs_dim != cfg.train.env.obs_dim:
        raise ShapeError(
            f"Checkpoint has {policy.n} skills and {policy.obs_dim}D observations,"
            f" configuration has {cfg.train.n_skills} and {cfg.train.env.obs_dim}D"
        )
    result = evaluate(policy, cfg.train, standalone_eval_rng(cfg.train.seed))
    print(f"eval_vs: {result.vs!r}")
    print(f"coverage: {result.coverage!r}")
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "trajectories.csv"
    with open(path, "w", encoding="utf-8", newline="") as outfh:
        write_trajectories(
            outfh,
            result.samples,
            {
                "eval_vs": repr(result.vs),
                "low": format_point(cfg.train.env.low),
                "high": format_point(cfg.train.env.high),
            },
        )
    LOGGER.info("Wrote trajectories to %s", path)
    return 0


def cmd_plot(trajectories: Path, output: Path, cfg: ExperimentConfig) -> int:
    """Draw a trajectory file."""
    if not trajectories.exists():
        raise UsageError(f"No such trajectory file: {trajectories}")
    with open(trajectories, encoding="utf-8", newline="") as infh:
        table = read_trajectories(infh)
    render(
        table,
        output,
        cfg.plot,
        low=cfg.train.env.low,
        high=cfg.train.env.high,
    )
    LOGGER.info("Drew %d trajectories to %s", len(table), output)
    return 0


def cmd_score(trajectories: Path, cfg: ExperimentConfig) -> int:
    """Print the effective number of skills in a trajectory file."""
    if not trajectories.exists():
        raise UsageError(f"No such trajectory file: {trajectories}")
    with open(trajectories, encoding="utf-8", newline="") as infh:
        table = read_trajectories(infh)
    if not table.skills:
        raise UsageError(f"No trajectories in {trajectories}")
    vs = effective_unique_skills(table.samples(), cfg.train.eval_spec)
    print(f"eval_vs: {vs!r}")
    return 0


def main(argv: Union[List[str], None] = None) -> int:
    parser = make_argparse()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=(
            logging.DEBUG
            if args.verbose
            else logging.WARNING if args.quiet else logging.INFO
        ),
        format="%(levelname)s:%(name)s:%(message)s",
    )
    try:
        cfg = get_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        elif args.command == "eval":
            return cmd_eval(args.checkpoint, cfg)
        elif args.command == "plot":
            return cmd_plot(args.trajectories, args.output, cfg)
        else:
            return cmd_score(args.trajectories, cfg)
    except (
        ConfigError,
        ParameterError,
        ShapeError,
        TrajectoryFileError,
        UsageError,
    ) as e:
        LOGGER.error("%s", e)
        return EXIT_USAGE
    except (VendiRLError, OSError) as e:
        LOGGER.error("%s", e)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
