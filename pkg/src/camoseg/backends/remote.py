"""HTTP clients for remotely served models.

Wire shapes (JSON over POST):

* chat:      {model, messages: [{role, content: [{type: "text", text} |
              {type: "image", image_base64}]}]} -> {text}
              (full history is re-sent on every request; the image rides on
              the first user message)
* heatmap:   {image_base64, text} -> {width, height, values}  with `values`
              a row-major float grid; coarse grids are bilinearly upsampled
              to image resolution
* segmenter: {image_base64, fg_points: [[x, y], ...], bg_points: [[x, y], ...],
              box: [x0, y0, x1, y1]} -> {width, height, mask}  with `mask`
              a row-major 0/1 grid at exactly image resolution

Transport failures are retried per the backend config and then surface as
BackendError; malformed or mismatched payloads surface as ProtocolError.
"""

from __future__ import annotations

import base64
import io
import os
import threading
from typing import List, Optional

import numpy as np
import requests
from PIL import Image

from ..geometry import Box, ImageRef, Point
from .base import (
    BackendConfig,
    BackendError,
    ChatSession,
    ProtocolError,
    TOKEN_ENV,
    check_points_in_box,
)


def encode_image_base64(image: ImageRef) -> str:
    buffer = io.BytesIO()
    Image.fromarray(image.pixels).save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


class _RemoteClient:
    role = ""

    def __init__(self, config: BackendConfig):
        if config.kind != "remote":
            raise ValueError("remote client requires a remote backend config")
        self.config = config
        self._lock = threading.Lock() if config.serialize_access else None

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(TOKEN_ENV, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, payload: dict, *, question: Optional[str] = None) -> dict:
        url = self.config.resolve_endpoint(self.role)
        attempts = self.config.retries + 1
        last_error: Optional[Exception] = None
        for _ in range(attempts):
            try:
                if self._lock is not None:
                    with self._lock:
                        response = requests.post(
                            url, json=payload, headers=self._headers(), timeout=self.config.timeout_s
                        )
                else:
                    response = requests.post(
                        url, json=payload, headers=self._headers(), timeout=self.config.timeout_s
                    )
                response.raise_for_status()
                return response.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
        raise BackendError(
            f"{self.role} backend unreachable after {attempts} attempts: {last_error}",
            question=question,
        )


class RemoteMllm(_RemoteClient):
    role = "mllm"

    def ask(self, session: ChatSession, question: str) -> str:
        session.add("user", question)
        messages = []
        image_pending = True
        for role, text in session.turns:
            content = [{"type": "text", "text": text}]
            if role == "user" and image_pending:
                content.append(
                    {"type": "image", "image_base64": encode_image_base64(session.image)}
                )
                image_pending = False
            messages.append({"role": role, "content": content})
        payload = {"model": self.config.model, "messages": messages}
        data = self._post(payload, question=question)
        try:
            answer = str(data["text"])
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"chat reply missing 'text': {data!r}") from exc
        session.add("assistant", answer)
        return answer


class RemoteVlm(_RemoteClient):
    role = "vlm"

    def heatmap(self, image: ImageRef, text: str) -> np.ndarray:
        if not text.strip():
            raise ValueError("text prompt must be nonempty")
        payload = {"image_base64": encode_image_base64(image), "text": text}
        data = self._post(payload, question=text)
        try:
            width, height = int(data["width"]), int(data["height"])
            values = np.asarray(data["values"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed heatmap reply: {exc}") from exc
        if values.size != width * height:
            raise ProtocolError(
                f"heatmap reply claims {width}x{height} but carries {values.size} values"
            )
        grid = values.reshape(height, width)
        if not np.isfinite(grid).all():
            raise ProtocolError("heatmap reply contains non-finite values")
        if (height, width) != (image.height, image.width):
            # the service grid is usually coarse; nearest-neighbor would give
            # blocky thresholds, so upsample bilinearly
            resized = Image.fromarray(grid.astype(np.float32), mode="F").resize(
                (image.width, image.height), Image.BILINEAR
            )
            grid = np.asarray(resized, dtype=np.float64)
        return grid


class RemoteVfm(_RemoteClient):
    role = "vfm"

    def segment(
        self,
        image: ImageRef,
        fg_points: List[Point],
        bg_points: List[Point],
        box: Box,
    ) -> np.ndarray:
        box.check_frame(image.width, image.height)
        check_points_in_box(fg_points, bg_points, box)
        payload = {
            "image_base64": encode_image_base64(image),
            "fg_points": [[int(x), int(y)] for x, y in fg_points],
            "bg_points": [[int(x), int(y)] for x, y in bg_points],
            "box": list(box.as_tuple()),
        }
        data = self._post(payload)
        try:
            width, height = int(data["width"]), int(data["height"])
            values = np.asarray(data["mask"], dtype=np.int64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed mask reply: {exc}") from exc
        if (height, width) != (image.height, image.width):
            raise ProtocolError(
                f"mask resolution {width}x{height} does not match image "
                f"{image.width}x{image.height}"
            )
        if values.size != width * height:
            raise ProtocolError("mask payload size does not match its dimensions")
        if not np.isin(values, (0, 1)).all():
            raise ProtocolError("mask payload must be 0/1")
        return values.reshape(height, width).astype(bool)
