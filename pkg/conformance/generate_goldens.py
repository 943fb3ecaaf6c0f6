"""Regenerates the golden request/response files from the in-process mocks.

The goldens pin the mock-generation contract shared by the Python clients
and the HTTP sidecar's mock mode; both test suites replay them. Run from
the repository root:

    python3 conformance/generate_goldens.py
"""

import base64
import json
from pathlib import Path

from ilrkit.pipeline.mockgen import (
    mock_categories,
    mock_generate,
    mock_relight,
    mock_remove_bg,
)
from ilrkit.pipeline.prompts import category_prompt, render_instance_prompt

GOLDEN_DIR = Path(__file__).parent / "golden"


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def main() -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    cases = []

    for domain, count in [("generic", 6), ("art", 3)]:
        prompt = category_prompt(domain, "designed", count)
        cases.append(
            {
                "name": f"categories-{domain}-{count}",
                "endpoint": "/v1/categories",
                "request": {"domain": domain, "prompt": prompt.text, "count": count},
                "response": {"names": mock_categories(domain, count)},
            }
        )

    gen_requests = [
        ("lantern", 1, 1),
        ("lantern", 2, 1),
        ("copper kettle", 260729021368907, 1),  # 48-bit pipeline-style seed
        ("copper kettle", 7, 5),
    ]
    generated = {}
    for category, seed, steps in gen_requests:
        prompt = render_instance_prompt(category)
        png = mock_generate(prompt, seed, steps)
        generated[(category, seed, steps)] = png
        cases.append(
            {
                "name": f"generate-{category.replace(' ', '-')}-s{seed}-t{steps}",
                "endpoint": "/v1/generate",
                "request": {"prompt": prompt, "seed": seed, "steps": steps},
                "response": {"png_base64": b64(png)},
            }
        )

    foregrounds = {}
    for key in [("lantern", 1, 1), ("copper kettle", 260729021368907, 1)]:
        png = generated[key]
        fg = mock_remove_bg(png)
        foregrounds[key] = fg
        cases.append(
            {
                "name": f"remove-bg-{key[0].replace(' ', '-')}-s{key[1]}",
                "endpoint": "/v1/remove-bg",
                "request": {"png_base64": b64(png)},
                "response": {"png_base64": b64(fg)},
            }
        )

    for key, prompt, seed in [
        (("lantern", 1, 1), "lantern", 0),
        (("lantern", 1, 1), "lantern", 1),
        (("copper kettle", 260729021368907, 1), "copper kettle", 193514046488575),
    ]:
        fg = foregrounds[key]
        relit = mock_relight(fg, prompt, seed)
        cases.append(
            {
                "name": f"relight-{prompt.replace(' ', '-')}-s{seed}",
                "endpoint": "/v1/relight",
                "request": {"png_base64": b64(fg), "prompt": prompt, "seed": seed},
                "response": {"png_base64": b64(relit)},
            }
        )

    for case in cases:
        path = GOLDEN_DIR / f"{case['name']}.json"
        path.write_text(
            json.dumps(case, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    print(f"wrote {len(cases)} golden cases to {GOLDEN_DIR}")


if __name__ == "__main__":
    main()
