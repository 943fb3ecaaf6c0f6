"""Synthetic instance-level dataset generation.

Orchestrates four stages over pluggable clients (in-process mocks or the
HTTP sidecar): object category names, object instance images, background
removal, and relit background synthesis — producing a resumable,
content-addressed dataset manifest.
"""

from .clients import StageClients
from .config import DomainSpec, GenerationConfig, config_from_dict, load_config
from .manifest import DatasetManifest, load_manifest, save_manifest
from .orchestrator import (
    PipelineResult,
    alpha_coverage,
    generate_categories,
    pad_and_resize,
    run_pipeline,
)
from .prompts import PromptTemplate, category_prompt, render_instance_prompt
from .store import ContentStore, content_hash

__all__ = [
    "StageClients",
    "DomainSpec",
    "GenerationConfig",
    "config_from_dict",
    "load_config",
    "DatasetManifest",
    "load_manifest",
    "save_manifest",
    "PipelineResult",
    "alpha_coverage",
    "generate_categories",
    "pad_and_resize",
    "run_pipeline",
    "PromptTemplate",
    "category_prompt",
    "render_instance_prompt",
    "ContentStore",
    "content_hash",
]
