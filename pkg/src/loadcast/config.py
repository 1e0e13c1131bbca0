"""Run configuration: JSON load/save, validation, and reduced-model switches.

A RunConfig bundles the network architecture, the training schedule, the
loss weights, the ensemble seeds, and an optional named reduction that
disables one model component at a time for controlled comparisons.
"""

import dataclasses
import json

from .errors import ValidationError
from .network import NetworkConfig
from .training import LossConfig, TrainSchedule

# named single-component reductions; each maps a full config to the reduced one
ABLATIONS = {
    "ab1": ("smoothing removed; inputs normalized only", {"use_es": False, "use_seasonal_input": False}),
    "ab2": ("no shortcut between blocks", {"use_shortcut": False}),
    "ab3": ("cell without the fusion gate", {"cell_variant": "no_fusion"}),
    "ab4": ("cell fed with recent states only", {"cell_variant": "no_dilation"}),
    "ab5": ("cell fed with delayed states only", {"cell_variant": "no_recent"}),
    "ab6": ("plain LSTM cell", {"cell_variant": "classic_lstm", "s_h": 50, "s_y": 50}),
    "ab7": ("level input removed", {"use_level_input": False}),
    "ab8": ("level and calendar inputs removed", {"use_level_input": False, "use_calendar_input": False}),
    "ab9": (
        "history window only: level, calendar and seasonal inputs removed",
        {"use_level_input": False, "use_calendar_input": False, "use_seasonal_input": False},
    ),
    "ab10": ("one-hot calendar instead of the embedding", {"use_embedding": False}),
}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    network: NetworkConfig = dataclasses.field(default_factory=NetworkConfig)
    schedule: TrainSchedule = dataclasses.field(default_factory=TrainSchedule)
    loss: LossConfig = dataclasses.field(default_factory=LossConfig)
    seeds: tuple = (1, 2, 3, 4, 5)
    ablation: str = None
    desk_scale: bool = False

    def validate(self) -> "RunConfig":
        try:
            self.network.validate()
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
        self.schedule.validate()
        self.loss.validate()
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValidationError("seeds must be distinct")
        if self.ablation is not None and self.ablation not in ABLATIONS:
            raise ValidationError(
                f"unknown ablation {self.ablation!r}; pick one of {', '.join(ABLATIONS)}"
            )
        return self

    def resolved(self) -> "RunConfig":
        """Apply the ablation switches and the small-budget scaling."""
        self.validate()
        out = self
        if self.ablation is not None:
            _, changes = ABLATIONS[self.ablation]
            out = dataclasses.replace(out, network=dataclasses.replace(out.network, **changes))
        if self.desk_scale:
            out = dataclasses.replace(out, schedule=out.schedule.desk_scale())
        out.network.validate()
        out.schedule.validate()
        return out


def _from_section(cls, data: dict, section: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown {section} keys: {', '.join(sorted(unknown))}")
    kwargs = dict(data)
    if "dilations" in kwargs:
        kwargs["dilations"] = tuple(tuple(block) for block in kwargs["dilations"])
    if "learning_rates" in kwargs:
        kwargs["learning_rates"] = tuple((int(e), float(r)) for e, r in kwargs["learning_rates"])
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kwargs = {}
    if "network" in data:
        kwargs["network"] = _from_section(NetworkConfig, data["network"], "network")
    if "schedule" in data:
        kwargs["schedule"] = _from_section(TrainSchedule, data["schedule"], "schedule")
    if "loss" in data:
        kwargs["loss"] = _from_section(LossConfig, data["loss"], "loss")
    if "seeds" in data:
        kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
    if "ablation" in data:
        kwargs["ablation"] = data["ablation"]
    if "desk_scale" in data:
        kwargs["desk_scale"] = bool(data["desk_scale"])
    return RunConfig(**kwargs).validate()


def config_to_dict(cfg: RunConfig) -> dict:
    return {
        "network": dataclasses.asdict(cfg.network),
        "schedule": dataclasses.asdict(cfg.schedule),
        "loss": dataclasses.asdict(cfg.loss),
        "seeds": list(cfg.seeds),
        "ablation": cfg.ablation,
        "desk_scale": cfg.desk_scale,
    }


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config root must be a JSON object")
    return config_from_dict(data)


def save_config(cfg: RunConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, sort_keys=True, indent=2)
        fh.write("\n")
