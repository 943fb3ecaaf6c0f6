"""Stage clients: in-process mocks and HTTP implementations of the wire
protocol.

Wire protocol (shared with the generation sidecar):

* ``POST /v1/categories``  {domain, prompt, count} -> {names: [...]}
* ``POST /v1/generate``    {prompt, seed, steps} -> {png_base64}
* ``POST /v1/remove-bg``   {png_base64} -> {png_base64}  (RGBA)
* ``POST /v1/relight``     {png_base64, prompt, seed} -> {png_base64}

Errors arrive as non-2xx with a ``{"error": {"code", "message"}}`` body.
Every client counts its outgoing calls so resumability tests can assert a
warm rerun performs none.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

import requests

from ..errors import ClientError
from . import mockgen


class MockCategoryClient:
    client_id = "mock"

    def __init__(self):
        self.calls = 0

    def categories(self, domain: str, prompt: str, count: int) -> list[str]:
        self.calls += 1
        return mockgen.mock_categories(domain, count)


class MockInstanceClient:
    client_id = "mock"

    def __init__(self):
        self.calls = 0

    def generate(self, prompt: str, seed: int, steps: int) -> bytes:
        self.calls += 1
        return mockgen.mock_generate(prompt, seed, steps)


class MockRemoverClient:
    client_id = "mock"

    def __init__(self):
        self.calls = 0

    def remove_bg(self, png: bytes) -> bytes:
        self.calls += 1
        return mockgen.mock_remove_bg(png)


class MockRelightClient:
    client_id = "mock"

    def __init__(self):
        self.calls = 0

    def relight(self, png: bytes, prompt: str, seed: int) -> bytes:
        self.calls += 1
        return mockgen.mock_relight(png, prompt, seed)


class _HttpBase:
    def __init__(self, base_url: str, stage: str, timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.client_id = self.base_url
        self.stage = stage
        self.timeout = timeout
        self.calls = 0

    def _post(self, endpoint: str, payload: dict) -> dict:
        self.calls += 1
        url = f"{self.base_url}{endpoint}"
        try:
            response = requests.post(url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ClientError(self.stage, f"request to {url} failed: {exc}") from exc
        if response.status_code // 100 != 2:
            detail = ""
            try:
                err = response.json().get("error", {})
                detail = f"{err.get('code', '?')}: {err.get('message', '')}"
            except ValueError:
                detail = response.text[:200]
            raise ClientError(self.stage, f"{url} -> {response.status_code} ({detail})")
        try:
            return response.json()
        except ValueError as exc:
            raise ClientError(self.stage, f"{url} returned invalid JSON") from exc


class HttpCategoryClient(_HttpBase):
    def __init__(self, base_url: str):
        super().__init__(base_url, stage="categories")

    def categories(self, domain: str, prompt: str, count: int) -> list[str]:
        body = self._post(
            "/v1/categories", {"domain": domain, "prompt": prompt, "count": count}
        )
        names = body.get("names")
        if not isinstance(names, list):
            raise ClientError(self.stage, "response missing 'names' list")
        return [str(name) for name in names]


class HttpInstanceClient(_HttpBase):
    def __init__(self, base_url: str):
        super().__init__(base_url, stage="instance")

    def generate(self, prompt: str, seed: int, steps: int) -> bytes:
        body = self._post(
            "/v1/generate", {"prompt": prompt, "seed": seed, "steps": steps}
        )
        return _decode_png_field(body, self.stage)


class HttpRemoverClient(_HttpBase):
    def __init__(self, base_url: str):
        super().__init__(base_url, stage="remove_bg")

    def remove_bg(self, png: bytes) -> bytes:
        body = self._post(
            "/v1/remove-bg", {"png_base64": base64.b64encode(png).decode("ascii")}
        )
        return _decode_png_field(body, self.stage)


class HttpRelightClient(_HttpBase):
    def __init__(self, base_url: str):
        super().__init__(base_url, stage="relight")

    def relight(self, png: bytes, prompt: str, seed: int) -> bytes:
        body = self._post(
            "/v1/relight",
            {
                "png_base64": base64.b64encode(png).decode("ascii"),
                "prompt": prompt,
                "seed": seed,
            },
        )
        return _decode_png_field(body, self.stage)


def _decode_png_field(body: dict, stage: str) -> bytes:
    encoded = body.get("png_base64")
    if not isinstance(encoded, str):
        raise ClientError(stage, "response missing 'png_base64'")
    try:
        return base64.b64decode(encoded, validate=True)
    except (ValueError, TypeError) as exc:
        raise ClientError(stage, f"invalid base64 image payload: {exc}") from exc


@dataclass
class StageClients:
    """The four stage handles the pipeline drives."""

    category_source: object
    instance_source: object
    background_remover: object
    relighter: object
    label: str = field(default="mock")

    @classmethod
    def mock(cls) -> "StageClients":
        return cls(
            category_source=MockCategoryClient(),
            instance_source=MockInstanceClient(),
            background_remover=MockRemoverClient(),
            relighter=MockRelightClient(),
            label="mock",
        )

    @classmethod
    def http(cls, base_url: str) -> "StageClients":
        return cls(
            category_source=HttpCategoryClient(base_url),
            instance_source=HttpInstanceClient(base_url),
            background_remover=HttpRemoverClient(base_url),
            relighter=HttpRelightClient(base_url),
            label=base_url,
        )

    def total_calls(self) -> int:
        return (
            self.category_source.calls
            + self.instance_source.calls
            + self.background_remover.calls
            + self.relighter.calls
        )
