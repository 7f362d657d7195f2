"""HTTP client for the optional embedding/parsing sidecar service."""

import os

import httpx

from clarforge.errors import SidecarError
from clarforge.schema import ParsedText

ENDPOINT_ENV = "CLARFORGE_EMBED_ENDPOINT"
DEFAULT_ENDPOINT = "http://127.0.0.1:8040"


def resolve_endpoint(endpoint: str | None = None) -> str:
    # the env var outranks flags and config: it is the one sanctioned piece
    # of environment coupling, so deployments can redirect the sidecar
    # without touching run configuration
    return os.environ.get(ENDPOINT_ENV) or endpoint or DEFAULT_ENDPOINT


class SidecarClient:
    """Thin JSON client for /v1/embed, /v1/parse and /v1/health."""

    def __init__(self, endpoint: str | None = None, timeout: float = 30.0,
                 batch_size: int = 64):
        self.endpoint = resolve_endpoint(endpoint).rstrip("/")
        self.batch_size = batch_size
        self._client = httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.endpoint}{path}"
        try:
            resp = self._client.post(url, json=payload)
        except httpx.HTTPError as exc:
            raise SidecarError(f"request to {path} failed: {exc}", endpoint=self.endpoint) from exc
        if resp.status_code != 200:
            raise SidecarError(
                f"{path} returned HTTP {resp.status_code}: {resp.text[:200]}",
                endpoint=self.endpoint,
            )
        return resp.json()

    def health(self) -> dict:
        try:
            resp = self._client.get(f"{self.endpoint}/v1/health")
        except httpx.HTTPError as exc:
            raise SidecarError(f"health check failed: {exc}", endpoint=self.endpoint) from exc
        if resp.status_code != 200:
            raise SidecarError(f"service not ready (HTTP {resp.status_code})", endpoint=self.endpoint)
        return resp.json()

    def embed(self, texts: list[str], model: str | None = None) -> tuple[str, list[list[float]]]:
        """Embed texts in batches; returns (model id, unit vectors)."""
        vectors: list[list[float]] = []
        model_id = model or ""
        for i in range(0, len(texts), self.batch_size):
            payload: dict = {"texts": texts[i: i + self.batch_size]}
            if model:
                payload["model"] = model
            data = self._post("/v1/embed", payload)
            model_id = data["model"]
            vectors.extend(data["vectors"])
        return model_id, vectors

    def parse(self, texts: list[str]) -> list[ParsedText]:
        parses: list[ParsedText] = []
        for i in range(0, len(texts), self.batch_size):
            data = self._post("/v1/parse", {"texts": texts[i: i + self.batch_size]})
            for p in data["parses"]:
                parses.append(ParsedText(
                    tokens=p["tokens"],
                    lemmas=p["lemmas"],
                    pos=p["pos"],
                    heads=p["heads"],
                    deprels=p["deprels"],
                ))
        return parses

    def close(self) -> None:
        self._client.close()
