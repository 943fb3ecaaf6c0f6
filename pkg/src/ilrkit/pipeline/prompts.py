"""Prompt construction for the category and instance generation stages."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ConfigError, IlrkitError


class EmptyCategoryError(IlrkitError):
    """Instance prompts need a non-empty category name."""


PROMPT_KINDS = ("designed", "template")

# Hand-written briefs per supported domain, used when prompt kind is
# "designed". Unknown domains fall back to the template form.
_DESIGNED = {
    "generic": (
        "Provide a raw list of {count} object names from the domain of everyday "
        "objects, such as household items, retail products, electronics, "
        "collectibles, vehicles, buildings, outdoor objects, etc. Here are some "
        "examples, which you can include in your list too but also get inspired "
        "by: sandal, mug, laptop, chair, bottle, temple, house, dress, teapot, "
        "toy, car, bowl, church, skyscraper, hotel."
    ),
    "art": (
        "Provide a raw list of {count} object names from the domain of museum "
        "items. Consider an encyclopedic art museum that is home to collections "
        "of classic art such as paintings, graphic work, jewelry, vases, "
        "sculptures, but also musical instruments, costumes, decorative arts "
        "and textiles, as well as antique weapons and armor from around the world."
    ),
    "landmark": (
        "Provide a raw list of {count} object names from the domain of "
        "buildings, landmarks, urban structures, and outdoor constructions, "
        "such as church, neoclassical building, train station, temple, "
        "cathedral, tower building, square. Fine-grained names are welcome, "
        "e.g. catholic church. Please name the most common things, such as a "
        "house in standard modern European architecture."
    ),
    "product": (
        "Provide a raw list of {count} object names from the domain of retail "
        "products, supermarket products, e-shop electronics, clothes, fashion "
        "items, shoes, anything that someone would sell in a second hand "
        "online market."
    ),
}

_TEMPLATE = (
    "Provide a raw list of {count} object names from the domain of {domain} "
    "objects. Here are some examples, which you can include in your list too "
    "but also get inspired by: {examples}."
)

_TEMPLATE_EXAMPLES = {
    "generic": "sandal, mug, laptop, chair, house, dress, teddy bear, car, toy, church",
    "art": (
        "Renaissance oil painting, Baroque tapestry, Egyptian faience amulet, "
        "Medieval longsword, Japanese samurai armor, Greek krater vase, "
        "Rococo gilded mirror, Ancient Roman cameo ring, Venetian glass "
        "chandelier, 19th-century concert grand piano"
    ),
    "landmark": (
        "catholic church, neoclassical building, train station, temple, "
        "cathedral, tower building, square, mosque, skyscraper, castle"
    ),
    "product": (
        "leather jacket, smartphone, gaming console, bluetooth headphones, "
        "smartwatch, designer handbag, running shoes, vintage dress, DSLR camera"
    ),
    "": "sandal, mug, laptop, chair, house, dress, teddy bear, car, toy, church",
}


@dataclass(frozen=True)
class PromptTemplate:
    """Rendered category-generation prompt for one domain."""

    domain: str
    kind: str
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ConfigError("rendered prompt is empty")


def category_prompt(domain: str, kind: str, count: int) -> PromptTemplate:
    """Build the category-list prompt for a domain.

    ``designed`` uses the per-domain brief when one exists (template
    fallback otherwise); ``template`` always uses the generic fill-in form.
    """
    if kind not in PROMPT_KINDS:
        raise ConfigError(f"unknown prompt kind {kind!r}; pick from {PROMPT_KINDS}")
    if kind == "designed" and domain in _DESIGNED:
        text = _DESIGNED[domain].format(count=count)
    else:
        examples = _TEMPLATE_EXAMPLES.get(domain, _TEMPLATE_EXAMPLES[""])
        text = _TEMPLATE.format(count=count, domain=domain or "everyday", examples=examples)
    return PromptTemplate(domain=domain, kind=kind, text=text)


def render_instance_prompt(category: str) -> str:
    """Instance-generation prompt: ``a {category} in a clean background``.

    Whitespace inside the category is collapsed; an empty category is an
    error.
    """
    name = re.sub(r"\s+", " ", category).strip()
    if not name:
        raise EmptyCategoryError("category name is empty")
    return f"a {name} in a clean background"
