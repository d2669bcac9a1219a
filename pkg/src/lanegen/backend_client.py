"""HTTP client for remote generation backends."""

import json
import urllib.error
import urllib.request

import numpy as np

from . import wire


class BackendError(RuntimeError):
    """Backend unreachable, rejected the request, or replied out of contract."""

    def __init__(self, message: str, code: str = "backend_error"):
        super().__init__(message)
        self.code = code


class BackendClient:
    """Thin blocking client; safe to share across worker threads."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _post_json(self, path: str, payload: dict) -> dict:
        url = self.base_url + path
        data = json.dumps(payload).encode("utf-8")
        req = urllib.request.Request(
            url, data=data, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = resp.read()
        except urllib.error.HTTPError as exc:
            body = exc.read()
            try:
                parsed = json.loads(body)
                err = parsed.get("error", {})
                raise BackendError(
                    f"backend {url} returned {exc.code}: {err.get('message', body[:200])}",
                    code=str(err.get("code", "http_error")),
                ) from exc
            except (ValueError, AttributeError):
                raise BackendError(f"backend {url} returned {exc.code}") from exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise BackendError(f"backend {url} unreachable: {exc}", code="unreachable") from exc
        try:
            return json.loads(body)
        except ValueError as exc:
            raise BackendError(f"backend {url} sent non-JSON response", code="malformed") from exc

    def health(self) -> dict:
        url = self.base_url + wire.HEALTH_PATH
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                return json.loads(resp.read())
        except (urllib.error.URLError, TimeoutError, OSError, ValueError) as exc:
            raise BackendError(f"backend {url} unreachable: {exc}", code="unreachable") from exc

    def generate(
        self,
        img: np.ndarray,
        control_map: np.ndarray,
        category: str,
        positive_prompt: str,
        negative_prompt: str,
        stage2_prompt: str | None,
        steps: int,
        cfg_scale: float,
        seed: int,
    ) -> np.ndarray:
        payload = wire.build_generate_request(
            img, control_map, category, positive_prompt, negative_prompt,
            stage2_prompt, steps, cfg_scale, seed,
        )
        reply = self._post_json(wire.GENERATE_PATH, payload)
        if "error" in reply:
            err = reply["error"]
            raise BackendError(
                f"backend error: {err.get('message', 'unknown')}",
                code=str(err.get("code", "backend_failure")),
            )
        if "image" not in reply or not isinstance(reply.get("image"), str):
            raise BackendError("malformed backend response: missing image", code="malformed")
        try:
            out = wire.base64_png_to_image(reply["image"])
        except Exception as exc:
            raise BackendError(f"malformed backend response: {exc}", code="malformed") from exc
        if out.shape != img.shape:
            raise BackendError(
                f"backend broke dimensions: sent {img.shape}, got {out.shape}",
                code="malformed",
            )
        return out
