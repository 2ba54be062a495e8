"""
Experiment configuration files.

Configuration is an INI file with one section per part of the
system.  Every key has a default, and unknown sections or keys are
errors, since a typo silently falling back to a default can waste a
day of training.  `dump_config` writes a fully resolved configuration
back in the same format.
"""

import configparser
import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from os import PathLike
from pathlib import Path
from typing import IO, Any, Callable, Dict, Tuple, Type, TypeVar, Union

from vendirl.env2d import EnvConfig
from vendirl.exceptions import ConfigError
from vendirl.kernels.spec import (
    MeanReference,
    format_terms,
    parse_terms,
)
from vendirl.misl import MislHyper
from vendirl.nn import OptimizerKind
from vendirl.plot import PlotOptions
from vendirl.policy import PolicyHyper
from vendirl.trainer import TrainConfig, default_eval_spec, default_train_spec
from vendirl.vendi import RewardTransform

LOGGER = logging.getLogger(__name__)
METHODS = ("vendirl", "misl", "random")
AUTO = "auto"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything about an experiment.

    Attributes:
        train: The training configuration (which includes the
            environment, policy and similarity settings).
        method: `vendirl`, `misl` or `random` (VendiRL bookkeeping
            without policy updates).
        out: Output directory.
        record_wall_time: Write wall-clock times to the metric log
            (which makes it differ between otherwise identical runs).
        misl: Discriminator settings for the `misl` method.
        plot: Plot settings.
    """

    train: TrainConfig = field(default_factory=TrainConfig)
    method: str = "vendirl"
    out: Path = Path("vendirl-run")
    record_wall_time: bool = False
    misl: MislHyper = field(default_factory=MislHyper)
    plot: PlotOptions = field(default_factory=PlotOptions)

    def __post_init__(self) -> None:
        object.__setattr__(self, "out", Path(self.out))
        if self.method not in METHODS:
            raise ConfigError(
                f"Unknown method {self.method!r}, expected one of {', '.join(METHODS)}",
                section="experiment",
                key="method",
            )


Parse = Callable[[str], Any]
Format = Callable[[Any], str]
E = TypeVar("E", bound=Enum)


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in configparser.ConfigParser.BOOLEAN_STATES:
        return configparser.ConfigParser.BOOLEAN_STATES[value]
    raise ValueError(f"Not a boolean: {text!r}")


def _format_bool(value: bool) -> str:
    return "true" if value else "false"


def _parse_floats(text: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _format_floats(values: Tuple[float, ...]) -> str:
    return ", ".join(repr(float(x)) for x in values)


def _parse_ints(text: str) -> Tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _format_ints(values: Tuple[int, ...]) -> str:
    return ", ".join(str(x) for x in values)


def _parse_words(text: str) -> Tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _format_words(values: Tuple[str, ...]) -> str:
    return ", ".join(values)


def _enum(cls: Type[E]) -> Tuple[Parse, Format]:
    def parse(text: str) -> E:
        try:
            return cls(text.strip().lower())
        except ValueError:
            choices = ", ".join(str(e.value) for e in cls)
            raise ValueError(f"Expected one of {choices}, got {text!r}") from None

    return parse, lambda value: str(value.value)


def _optional(conv: Tuple[Parse, Format]) -> Tuple[Parse, Format]:
    parse, fmt = conv

    def parse_optional(text: str) -> Any:
        return None if text.strip().lower() == AUTO else parse(text)

    return parse_optional, lambda value: AUTO if value is None else fmt(value)


FLOAT: Tuple[Parse, Format] = (float, repr)
INT: Tuple[Parse, Format] = (int, str)
BOOL: Tuple[Parse, Format] = (_parse_bool, _format_bool)
FLOATS: Tuple[Parse, Format] = (_parse_floats, _format_floats)
INTS: Tuple[Parse, Format] = (_parse_ints, _format_ints)
WORDS: Tuple[Parse, Format] = (_parse_words, _format_words)
TERMS: Tuple[Parse, Format] = (parse_terms, format_terms)
STR: Tuple[Parse, Format] = (str.strip, str)
PATH: Tuple[Parse, Format] = (lambda text: Path(text.strip()), str)

SIMILARITY_KEYS = {
    "terms": TERMS,
    "knn_k": INT,
    "rollouts_per_skill": INT,
    "mean_reference": _enum(MeanReference),
    "rescale_cosine": BOOL,
    "clamp_negative": BOOL,
}
SECTIONS: Dict[str, Dict[str, Tuple[Parse, Format]]] = {
    "experiment": {
        "method": STR,
        "out": PATH,
        "record_wall_time": BOOL,
    },
    "train": {
        "n_skills": INT,
        "epochs": INT,
        "steps_per_epoch": _optional(INT),
        "scenes": INT,
        "transform": _enum(RewardTransform),
        "seed": INT,
        "eval_every": INT,
        "threads": _optional(INT),
        "check_rewards": BOOL,
    },
    "env": {
        "low": FLOATS,
        "high": FLOATS,
        "start_state": FLOATS,
        "max_action_norm": FLOAT,
        "episode_len": INT,
        "action_noise_std": FLOAT,
    },
    "policy": {
        "hidden": INTS,
        "learning_rate": FLOAT,
        "discount": FLOAT,
        "max_grad_norm": FLOAT,
        "optimizer": _enum(OptimizerKind),
        "whiten": BOOL,
        "log_std_min": FLOAT,
        "log_std_max": FLOAT,
        "action_scale": _optional(FLOAT),
    },
    "similarity": SIMILARITY_KEYS,
    "eval": SIMILARITY_KEYS,
    "misl": {
        "hidden": INTS,
        "learning_rate": FLOAT,
        "optimizer": _enum(OptimizerKind),
        "max_grad_norm": FLOAT,
        "reward_floor": FLOAT,
        "updates_per_epoch": INT,
    },
    "plot": {
        "colors": WORDS,
        "rollouts_per_skill": INT,
        "width": INT,
        "height": INT,
        "margin": INT,
        "line_width": FLOAT,
    },
}


def _sections(cfg: ExperimentConfig) -> Dict[str, Any]:
    """The object holding the values of each section."""
    return {
        "experiment": cfg,
        "train": cfg.train,
        "env": cfg.train.env,
        "policy": cfg.train.hyper,
        "similarity": cfg.train.spec,
        "eval": cfg.train.eval_spec,
        "misl": cfg.misl,
        "plot": cfg.plot,
    }


def _override(base: Any, **kwargs: Any) -> Any:
    return dataclasses.replace(base, **kwargs)


def _build(section: str, cls: Callable[..., Any], kwargs: Dict[str, Any]) -> Any:
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e), section=section) from e


def parse_config(parser: configparser.ConfigParser) -> ExperimentConfig:
    """Build an experiment configuration from parsed INI sections.

    Raises:
        ConfigError: On unknown sections or keys, unparseable values,
            or values that fail validation.
    """
    values: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(
                f"Unknown section, expected one of {', '.join(SECTIONS)}",
                section=section,
            )
        keys = SECTIONS[section]
        for key, text in parser.items(section, raw=True):
            if key not in keys:
                raise ConfigError(
                    f"Unknown key, expected one of {', '.join(keys)}",
                    section=section,
                    key=key,
                )
            parse, _ = keys[key]
            try:
                values[section][key] = parse(text)
            except ValueError as e:
                raise ConfigError(
                    f"Bad value {text!r}: {e}", section=section, key=key
                ) from e
    train = dict(values["train"])
    train["env"] = _build("env", EnvConfig, values["env"])
    train["hyper"] = _build("policy", PolicyHyper, values["policy"])
    # Keys left out keep their default for that section
    train["spec"] = _build(
        "similarity", partial(_override, default_train_spec()), values["similarity"]
    )
    train["eval_spec"] = _build(
        "eval", partial(_override, default_eval_spec()), values["eval"]
    )
    experiment = dict(values["experiment"])
    experiment["train"] = _build("train", TrainConfig, train)
    experiment["misl"] = _build("misl", MislHyper, values["misl"])
    experiment["plot"] = _build("plot", PlotOptions, values["plot"])
    return _build("experiment", ExperimentConfig, experiment)


def read_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse a configuration from a string."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("Key outside of any section", lineno=e.lineno) from e
    except configparser.ParsingError as e:
        lineno, _ = e.errors[0]
        raise ConfigError(f"Syntax error in {source}", lineno=lineno) from e
    except (
        configparser.DuplicateOptionError,
        configparser.DuplicateSectionError,
    ) as e:
        raise ConfigError(
            e.message,
            section=e.section,
            key=getattr(e, "option", None),
            lineno=e.lineno,
        ) from e
    return parse_config(parser)


def load_config(path: Union[str, PathLike]) -> ExperimentConfig:
    """Read a configuration file.

    Raises:
        ConfigError: If the file cannot be read or is invalid.
    """
    try:
        with open(path, encoding="utf-8") as infh:
            text = infh.read()
    except OSError as e:
        raise ConfigError(f"Cannot read configuration {path}: {e.strerror}") from e
    LOGGER.debug("Read configuration from %s", path)
    return read_config(text, source=str(path))


def dump_config(cfg: ExperimentConfig, outfh: IO[str]) -> None:
    """Write every setting (defaults included) in INI format."""
    objects = _sections(cfg)
    for section, keys in SECTIONS.items():
        outfh.write(f"[{section}]\n")
        obj = objects[section]
        for key, (_, fmt) in keys.items():
            outfh.write(f"{key} = {fmt(getattr(obj, key))}\n")
        outfh.write("\n")


def with_overrides(cfg: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """Override `seed` (in the training configuration), `method` or
    `out`, ignoring those that are `None`."""
    seed = overrides.pop("seed", None)
    changes = {k: v for k, v in overrides.items() if v is not None}
    if seed is not None:
        changes["train"] = dataclasses.replace(cfg.train, seed=seed)
    return dataclasses.replace(cfg, **changes)
