"""Generation run configuration with strict key validation.

Config files are JSON with explicit keys; unknown keys are hard errors so
a typo can never silently fall back to a default.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from ..errors import ConfigError
from .prompts import PROMPT_KINDS


@dataclass(frozen=True)
class DomainSpec:
    """One generation domain: C categories x K instances x N backgrounds."""

    name: str
    prompt_kind: str = "designed"
    categories: int = 1  # C
    instances_per_category: int = 1  # K
    backgrounds_per_instance: int = 4  # N

    def __post_init__(self):
        if not self.name:
            raise ConfigError("domain name must be non-empty")
        if self.prompt_kind not in PROMPT_KINDS:
            raise ConfigError(f"unknown prompt kind {self.prompt_kind!r}")
        for field_name in ("categories", "instances_per_category", "backgrounds_per_instance"):
            if getattr(self, field_name) < 1:
                raise ConfigError(f"{field_name} must be >= 1")

    @property
    def instance_count(self) -> int:
        return self.categories * self.instances_per_category


@dataclass(frozen=True)
class GenerationConfig:
    domains: tuple[DomainSpec, ...]
    master_seed: int = 0
    max_padding_fraction: float = 0.5
    inference_steps: int = 1

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        if not self.domains:
            raise ConfigError("at least one domain required")
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ConfigError("domain names must be unique")
        if not 0.0 <= self.max_padding_fraction <= 0.9:
            raise ConfigError("max_padding_fraction must be in [0, 0.9]")
        if self.inference_steps < 1:
            raise ConfigError("inference_steps must be >= 1")
        sizes = {d.backgrounds_per_instance for d in self.domains}
        if len(sizes) != 1:
            raise ConfigError("all domains must share backgrounds_per_instance")

    @property
    def backgrounds_per_instance(self) -> int:
        return self.domains[0].backgrounds_per_instance

    @property
    def total_instances(self) -> int:
        return sum(d.instance_count for d in self.domains)

    def to_dict(self) -> dict:
        return {
            "domains": [
                {
                    "name": d.name,
                    "prompt_kind": d.prompt_kind,
                    "categories": d.categories,
                    "instances_per_category": d.instances_per_category,
                    "backgrounds_per_instance": d.backgrounds_per_instance,
                }
                for d in self.domains
            ],
            "master_seed": self.master_seed,
            "max_padding_fraction": self.max_padding_fraction,
            "inference_steps": self.inference_steps,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_DOMAIN_KEYS = {
    "name",
    "prompt_kind",
    "categories",
    "instances_per_category",
    "backgrounds_per_instance",
}
_CONFIG_KEYS = {"domains", "master_seed", "max_padding_fraction", "inference_steps"}


def config_from_dict(data: dict) -> GenerationConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    raw_domains = data.get("domains")
    if not isinstance(raw_domains, list) or not raw_domains:
        raise ConfigError("config needs a non-empty 'domains' list")
    domains = []
    for entry in raw_domains:
        if not isinstance(entry, dict):
            raise ConfigError("each domain must be an object")
        unknown = set(entry) - _DOMAIN_KEYS
        if unknown:
            raise ConfigError(f"unknown domain keys: {sorted(unknown)}")
        if "name" not in entry:
            raise ConfigError("domain missing 'name'")
        domains.append(DomainSpec(**entry))
    kwargs = {k: v for k, v in data.items() if k != "domains"}
    return GenerationConfig(domains=tuple(domains), **kwargs)


def load_config(path) -> GenerationConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(data)
