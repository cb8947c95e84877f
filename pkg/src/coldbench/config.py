"""Configuration for the testbed: thresholds, simulator physics, recognizer
behaviour, interaction timing, and the two experiment flavors.

Every calibration constant lives here (not in code) so a deployment against a
different signal profile only needs a new config file.  ``TestbedConfig``
round-trips through JSON; partial files deep-merge over the defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any

DEFAULT_EMPTY_LEVEL = 400.0
DEFAULT_REFLECTIVE_LEVEL = 150.0
DEFAULT_NONREFLECTIVE_LEVEL = 650.0

LED_COLORS = ("off", "red", "green")


class ConfigError(ValueError):
    """Raised when a configuration value violates its documented constraints."""


@dataclass
class ThresholdConfig:
    """Detection thresholds for the window-mean rule.

    ``it_min``/``it_max`` trigger additions (reflective items pull the window
    mean under ``it_min``, non-reflective items push it over ``it_max``).
    ``ot_min``..``ot_max`` is the removal band: a final window mean inside it
    at door close, on an occupied position, signals a removal.  The band must
    exclude the steady occupied levels so idle occupied positions stay quiet.
    """

    it_min: float = 250.0
    it_max: float = 550.0
    ot_min: float = 250.0
    ot_max: float = 520.0

    def validate(self) -> None:
        if not self.it_min < self.it_max:
            raise ConfigError(f"it_min must be < it_max ({self.it_min} >= {self.it_max})")
        if not self.ot_min < self.ot_max:
            raise ConfigError(f"ot_min must be < ot_max ({self.ot_min} >= {self.ot_max})")


@dataclass
class ItemProfile:
    """Physical profile of one experiment item.

    Reflective items read below the empty-shelf level, non-reflective ones
    above it.  ``steady_level`` defaults accordingly.
    """

    name: str
    reflective: bool = True
    steady_level: float | None = None
    barcode: str | None = None

    def __post_init__(self):
        if self.steady_level is None:
            self.steady_level = (
                DEFAULT_REFLECTIVE_LEVEL if self.reflective else DEFAULT_NONREFLECTIVE_LEVEL
            )

    def validate(self, empty_level: float) -> None:
        if self.reflective and not self.steady_level < empty_level:
            raise ConfigError(f"reflective item {self.name!r} must read below the empty level")
        if not self.reflective and not self.steady_level > empty_level:
            raise ConfigError(f"non-reflective item {self.name!r} must read above the empty level")


@dataclass
class SimConfig:
    """Physics of the virtual fridge.

    ``position_error_prob`` is the calibrated chance that a non-reflective
    placement registers on a neighbouring sensor instead of its own (the
    signal then stays on that sensor until the item is removed).
    ``occlusion_level`` is the reading produced by a hand blocking a sensor.
    """

    position_count: int = 4
    empty_level: float = DEFAULT_EMPTY_LEVEL
    noise_amplitude: float = 20.0
    reading_rate_hz: float = 1.0
    frame_rate_hz: float = 5.0
    settle_time_ms: int = 2000
    occlusion_level: float = 300.0
    position_error_prob: float = 0.0
    rng_seed: int = 0

    def validate(self, items: list[ItemProfile] | None = None) -> None:
        if self.position_count < 1:
            raise ConfigError("position_count must be >= 1")
        if self.reading_rate_hz <= 0 or self.frame_rate_hz <= 0:
            raise ConfigError("reading and frame rates must be > 0")
        if self.settle_time_ms < 0:
            raise ConfigError("settle_time_ms must be >= 0")
        if not 0.0 <= self.position_error_prob <= 1.0:
            raise ConfigError("position_error_prob must be in [0, 1]")
        if items:
            min_gap = min(abs(it.steady_level - self.empty_level) for it in items)
            if self.noise_amplitude >= min_gap / 2:
                raise ConfigError(
                    f"noise_amplitude {self.noise_amplitude} must stay below half the "
                    f"smallest empty-to-item level gap ({min_gap / 2})"
                )


@dataclass
class RecognizerConfig:
    """Bounded recognizer pool and the stochastic recognizer behind it.

    ``p_hit`` is the per-presentation probability that an item is recognized
    at all: frames showing the same item during one activity share a single
    success draw, since consecutive frames of one presentation are nearly
    identical.  ``confusion_prob`` mislabels a successful recognition.
    """

    pool_size: int = 9
    latency_ms_min: int = 2000
    latency_ms_max: int = 5000
    p_hit: float = 0.77
    confusion_prob: float = 0.0
    strict_canonical: bool = True
    cache_capacity: int = 1000
    cache_ttl_ms: int = 60_000

    def validate(self) -> None:
        if self.pool_size < 1:
            raise ConfigError("pool_size must be >= 1")
        if not (0 < self.latency_ms_min <= self.latency_ms_max):
            raise ConfigError("latency bounds must be positive and ordered")
        if not 0.0 <= self.p_hit <= 1.0:
            raise ConfigError("p_hit must be in [0, 1]")
        if not 0.0 <= self.confusion_prob <= 1.0:
            raise ConfigError("confusion_prob must be in [0, 1]")


@dataclass
class EngineConfig:
    window_size: int = 5
    dedup_timeout_ms: int = 10_000

    def validate(self) -> None:
        if self.window_size < 1:
            raise ConfigError("window_size must be >= 1")
        if self.dedup_timeout_ms < 0:
            raise ConfigError("dedup_timeout_ms must be >= 0")


@dataclass
class InteractionProfile:
    """Timing of the scripted user driving the fridge.

    Motion durations are the baseline door-open times per action; removals run
    longer than additions because the user first has to find the item.  During
    instrumented additions the user holds the item in view for ``show_time_s``
    after setting it down (camera plus filter warm-up), so the measured
    overhead on an add step is ``place_offset_s + show_time_s - motion``.
    ``step_gap_s`` is the pause between steps while the next script line is
    read; it also lets the recognizer pool drain.
    """

    place_offset_s: float = 1.0
    show_time_s: float = 4.6
    add_motion_s: tuple[float, float] = (2.8, 3.8)
    remove_motion_s: tuple[float, float] = (5.3, 6.3)
    none_motion_s: tuple[float, float] = (1.5, 2.5)
    step_gap_s: tuple[float, float] = (10.0, 14.0)
    barcode_overhead_s: float = 4.1

    def validate(self) -> None:
        for name in ("add_motion_s", "remove_motion_s", "none_motion_s", "step_gap_s"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ConfigError(f"{name} bounds must be positive and ordered")
        if self.place_offset_s <= 0:
            raise ConfigError("place_offset_s must be > 0")


@dataclass
class FlavorConfig:
    """One experiment flavor: which items run and how the recognizer performs."""

    items: list[str]
    p_hit: float
    position_error_prob: float = 0.0


def default_items() -> list[ItemProfile]:
    sodas = ["coke", "sprite", "fanta", "pepsi"]
    cartons = ["milk", "juice", "yogurt", "butter"]
    return [ItemProfile(name=n, reflective=True) for n in sodas] + [
        ItemProfile(name=n, reflective=False) for n in cartons
    ]


# Raw phrases the simulated recognizer emits, mimicking noisy search keywords.
DEFAULT_RAW_PHRASES: dict[str, str] = {
    "coke": "coca cola 330ml can",
    "sprite": "sprite lemon lime soda can",
    "fanta": "fanta orange soft drink can",
    "pepsi": "pepsi cola can 330 ml",
    "milk": "fresh milk 1l carton",
    "juice": "orange juice carton 1 litre",
    "yogurt": "plain yoghurt cup 500g",
    "butter": "butter block 200g wrapper",
}

# pattern -> canonical name; each canonical name matches its own rule so that
# canonicalization is idempotent.
DEFAULT_CANONICAL_RULES: list[tuple[str, str]] = [
    (r"coca.?cola|coke", "coke"),
    (r"sprite", "sprite"),
    (r"fanta", "fanta"),
    (r"pepsi", "pepsi"),
    (r"\bmilk\b", "milk"),
    (r"juice", "juice"),
    (r"yogh?urt", "yogurt"),
    (r"butter", "butter"),
]


@dataclass
class TestbedConfig:
    """Root configuration object. ``flavors`` carries the calibrated runs."""

    __test__ = False  # keep pytest from collecting this as a test class

    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    recognizer: RecognizerConfig = field(default_factory=RecognizerConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    interaction: InteractionProfile = field(default_factory=InteractionProfile)
    items: list[ItemProfile] = field(default_factory=default_items)
    raw_phrases: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_RAW_PHRASES))
    canonical_rules: list[tuple[str, str]] = field(
        default_factory=lambda: list(DEFAULT_CANONICAL_RULES)
    )
    flavors: dict[str, FlavorConfig] = field(
        default_factory=lambda: {
            "soda": FlavorConfig(
                items=["coke", "sprite", "fanta", "pepsi"], p_hit=0.77
            ),
            "mix": FlavorConfig(
                items=[
                    "coke", "sprite", "fanta", "pepsi",
                    "milk", "juice", "yogurt", "butter",
                ],
                p_hit=0.82,
                position_error_prob=0.20,
            ),
        }
    )

    def validate(self) -> None:
        self.thresholds.validate()
        self.sim.validate(self.items)
        self.recognizer.validate()
        self.engine.validate()
        self.interaction.validate()
        names = [it.name for it in self.items]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate item names in catalog")
        for it in self.items:
            it.validate(self.sim.empty_level)
        for flavor, fc in self.flavors.items():
            unknown = [n for n in fc.items if n not in names]
            if unknown:
                raise ConfigError(f"flavor {flavor!r} references unknown items {unknown}")

    def item(self, name: str) -> ItemProfile:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def flavor_items(self, flavor: str) -> list[ItemProfile]:
        return [self.item(n) for n in self.flavors[flavor].items]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TestbedConfig":
        base = cls()
        merged = _deep_merge(base.to_dict(), data)
        cfg = cls(
            thresholds=ThresholdConfig(**merged["thresholds"]),
            sim=SimConfig(**merged["sim"]),
            recognizer=RecognizerConfig(**merged["recognizer"]),
            engine=EngineConfig(**merged["engine"]),
            interaction=InteractionProfile(
                **{
                    k: tuple(v) if isinstance(v, list) else v
                    for k, v in merged["interaction"].items()
                }
            ),
            items=[ItemProfile(**it) for it in merged["items"]],
            raw_phrases=dict(merged["raw_phrases"]),
            canonical_rules=[tuple(r) for r in merged["canonical_rules"]],
            flavors={k: FlavorConfig(**v) for k, v in merged["flavors"].items()},
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "TestbedConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(data)


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out
