"""Fake browser backend: fixture replay or deterministic capture synthesis.

CI has no browser, so `--no-browser` evaluation attaches this session type.
Two modes:

- replay: a project shipping `.opengame/fake_browser.json` gets exactly the
  recorded console stream, page errors, navigation outcome, and screenshots
  (solid fills, seeded noise, or inline base64 PNGs).
- synthesis: any other project gets noise frames derived from the content
  digest of its file tree plus the seed, so identical projects always
  produce identical CaptureSets while different projects differ.

The tree digest skips `.opengame/` and the asset-pack timestamp, the only
parts of a generated workspace that legitimately vary between reruns.
"""

from __future__ import annotations

import base64
import hashlib
import json
from pathlib import Path

import numpy as np

from . import imaging
from .bench import BrowserSession, ConsoleEvent, InputAction, PageError

BUNDLE_RELPATH = ".opengame/fake_browser.json"
FRAME_SIZE = (180, 320)  # rows, cols


def tree_digest(project_dir: str | Path) -> str:
    """Content digest of the project tree, excluding volatile parts."""
    root = Path(project_dir)
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        relative = str(path.relative_to(root)).replace("\\", "/")
        if relative.startswith(".opengame/"):
            continue
        h.update(relative.encode())
        if relative == "assets/asset-pack.json":
            try:
                pack = json.loads(path.read_text())
                pack.pop("generated_at", None)
                h.update(json.dumps(pack, sort_keys=True).encode())
                continue
            except (json.JSONDecodeError, OSError):
                pass
        h.update(path.read_bytes())
    return h.hexdigest()


def _noise_frame(material: str) -> bytes:
    seed_int = int.from_bytes(hashlib.sha256(material.encode()).digest()[:8], "big")
    rng = np.random.default_rng(seed_int)
    rows, cols = FRAME_SIZE
    arr = rng.integers(0, 256, size=(rows, cols, 3), dtype=np.uint8)
    return imaging.encode_png(arr)


def _render_bundle_screenshot(spec: dict) -> bytes:
    if "png_base64" in spec:
        return base64.b64decode(spec["png_base64"])
    if "fill" in spec:
        r, g, b = spec["fill"]
        w, h = spec.get("size", [320, 180])
        return imaging.solid_png(w, h, (r, g, b))
    if "noise_seed" in spec:
        return _noise_frame(f"bundle-noise:{spec['noise_seed']}")
    raise ValueError(f"unrenderable screenshot spec: {spec!r}")


class FakeBrowserSession(BrowserSession):
    """Replay/synthesis session; wall-clock free and fully deterministic."""

    def __init__(self, project_dir: str | Path, seed: int, target_url: str = ""):
        self.project_dir = Path(project_dir)
        self.seed = seed
        self.target_url = target_url or f"fake://{self.project_dir.name}"
        self.virtual_time = 0.0
        self.navigation_ok = True
        self.probe_attached = True
        self._inputs = 0
        self._frame_index = 0
        self._console: list[ConsoleEvent] = []
        self._errors: list[PageError] = []
        self._bundle = self._load_bundle()
        if self._bundle is not None:
            self.navigation_ok = bool(self._bundle.get("navigation_ok", True))
            self.probe_attached = bool(self._bundle.get("probe_attached", True))
            for level, text, t in self._bundle.get("console_events", []):
                self._console.append(ConsoleEvent(level=level, text=text, timestamp=float(t)))
            for t, text in self._bundle.get("page_errors", []):
                self._errors.append(PageError(timestamp=float(t), text=text))
        else:
            self._digest = tree_digest(self.project_dir)

    def _load_bundle(self) -> dict | None:
        bundle_path = self.project_dir / BUNDLE_RELPATH
        if bundle_path.is_file():
            return json.loads(bundle_path.read_text())
        return None

    def dispatch(self, action: InputAction) -> None:
        self._inputs += 1

    def capture_screenshot(self) -> bytes:
        index = self._frame_index
        self._frame_index += 1
        if self._bundle is not None:
            shots = self._bundle.get("screenshots", [])
            if not shots:
                return imaging.solid_png(320, 180, (0, 0, 0))
            spec = shots[min(index, len(shots) - 1)]
            return _render_bundle_screenshot(spec)
        return _noise_frame(f"{self._digest}:{self.seed}:{index}")

    def drain_events(self) -> tuple[list[ConsoleEvent], list[PageError]]:
        return list(self._console), list(self._errors)

    def probe_status(self) -> dict:
        if self._bundle is not None and "probe" in self._bundle:
            status = dict(self._bundle["probe"])
            status.setdefault("inputs_dispatched", self._inputs)
            return status
        return {
            "ready": self._frame_index > 0,
            "frames_observed": self._frame_index,
            "errors": [e.text for e in self._errors],
            "inputs_dispatched": self._inputs,
        }

    def advance(self, seconds: float) -> None:
        self.virtual_time += seconds

    def close(self) -> None:
        pass


def write_replay_bundle(project_dir: str | Path, bundle: dict) -> Path:
    """Helper for fixtures/tests: persist a replay bundle into the project."""
    path = Path(project_dir) / BUNDLE_RELPATH
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(bundle, indent=2) + "\n")
    return path
