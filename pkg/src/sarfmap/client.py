"""Thin HTTP client for the pipeline service.

The CLI talks to the service through this client.  Without a base URL the
requests run against an in-process app over an ASGI transport, so no socket
or separate server is needed; with one they go over the network to a
running ``sarfmap serve`` instance.
"""

from __future__ import annotations

import asyncio

import httpx


class ServiceError(RuntimeError):
    pass


class MapServiceClient:
    def __init__(self, base_url: str | None = None):
        self.base_url = base_url
        self._app = None

    def _get_app(self):
        if self._app is None:
            from .service import create_app

            self._app = create_app()
        return self._app

    def _post(self, path: str, payload: dict) -> dict:
        async def go() -> httpx.Response:
            if self.base_url:
                async with httpx.AsyncClient(base_url=self.base_url, timeout=600.0) as client:
                    return await client.post(path, json=payload)
            transport = httpx.ASGITransport(app=self._get_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://sarfmap.local", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        response = asyncio.run(go())
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise ServiceError(f"{path} failed ({response.status_code}): {detail}")
        return response.json()

    def make_map(
        self,
        graph: str,
        params: dict | None = None,
        overlay_csv: str | None = None,
        bindings: list[str] | None = None,
    ) -> dict:
        payload: dict = {"graph": graph, "bindings": bindings or []}
        if params:
            payload["params"] = params
        if overlay_csv is not None:
            payload["overlay_csv"] = overlay_csv
        return self._post("/api/map", payload)

    def cluster(self, graph: str, params: dict | None = None) -> dict:
        payload: dict = {"graph": graph}
        if params:
            payload["params"] = params
        return self._post("/api/cluster", payload)

    def render(
        self,
        document: dict,
        px_per_cell: float = 12.0,
        fixed_height: bool = False,
        color_channel: str | None = None,
    ) -> str:
        payload: dict = {
            "document": document,
            "px_per_cell": px_per_cell,
            "fixed_height": fixed_height,
        }
        if color_channel is not None:
            payload["color_channel"] = color_channel
        return self._post("/api/render", payload)["svg"]
