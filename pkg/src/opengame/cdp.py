"""Real headless-browser session over the devtools wire protocol.

Launches the browser binary with an ephemeral debugging port, opens a fresh
target, injects the probe before navigation, subscribes to console and
exception streams, and exposes navigate/evaluate/screenshot/input — the small
protocol surface the harness needs. Requires a browser binary (env var
OPENGAME_BROWSER_PATH or a chromium on PATH); CI uses the fake backend
instead.
"""

from __future__ import annotations

import base64
import json
import os
import shutil
import subprocess
import tempfile
import time
import urllib.parse
from pathlib import Path

import requests

from .bench import (
    BROWSER_PATH_ENV,
    PROBE_ROUTE,
    BrowserSession,
    BrowserUnavailable,
    ConsoleEvent,
    InputAction,
    NavigationFailed,
    PageError,
    SessionLost,
)

LAUNCH_TIMEOUT_SECONDS = 20.0
_EVENT_METHODS = ("Runtime.consoleAPICalled", "Runtime.exceptionThrown", "Log.entryAdded")

PROBE_GLOBAL = "__OPENGAME_PROBE__"

_BOOTSTRAP = f"""
(() => {{
  if (window.{PROBE_GLOBAL}) return;
  const s = document.createElement('script');
  s.src = '{PROBE_ROUTE}';
  (document.head || document.documentElement).appendChild(s);
}})();
"""


def find_browser_binary(explicit: str | None = None) -> str:
    candidates = [
        explicit,
        os.environ.get(BROWSER_PATH_ENV),
        shutil.which("chromium"),
        shutil.which("chromium-browser"),
        shutil.which("google-chrome"),
        shutil.which("chrome"),
    ]
    for candidate in candidates:
        if candidate and Path(candidate).exists():
            return candidate
    raise BrowserUnavailable(
        f"no browser binary found; set {BROWSER_PATH_ENV} or install chromium"
    )


class CdpBrowserSession(BrowserSession):
    def __init__(self, ws, process, user_data_dir: str, url: str, seed: int):
        self._ws = ws
        self._process = process
        self._user_data_dir = user_data_dir
        self.target_url = url
        self.seed = seed
        self.navigation_ok = True
        self.probe_attached = False
        self._next_id = 1
        self._console: list[ConsoleEvent] = []
        self._errors: list[PageError] = []
        self._epoch = time.monotonic()

    # -- wire plumbing ---------------------------------------------------

    def _rpc(self, method: str, params: dict | None = None, timeout: float = 15.0) -> dict:
        message_id = self._next_id
        self._next_id += 1
        try:
            self._ws.send(json.dumps({"id": message_id, "method": method, "params": params or {}}))
            deadline = time.monotonic() + timeout
            while time.monotonic() < deadline:
                raw = self._ws.recv(timeout=max(0.05, deadline - time.monotonic()))
                data = json.loads(raw)
                if data.get("id") == message_id:
                    if "error" in data:
                        raise SessionLost(f"{method}: {data['error']}")
                    return data.get("result", {})
                self._handle_event(data)
        except (OSError, TimeoutError) as exc:
            raise SessionLost(f"devtools socket lost during {method}: {exc}") from exc
        raise SessionLost(f"no response to {method} within {timeout}s")

    def _pump_events(self) -> None:
        while True:
            try:
                raw = self._ws.recv(timeout=0.01)
            except TimeoutError:
                return
            except OSError:
                return
            self._handle_event(json.loads(raw))

    def _now(self) -> float:
        return time.monotonic() - self._epoch

    def _handle_event(self, data: dict) -> None:
        method = data.get("method")
        params = data.get("params", {})
        if method == "Runtime.consoleAPICalled":
            text = " ".join(
                str(arg.get("value", arg.get("description", ""))) for arg in params.get("args", [])
            )
            self._console.append(
                ConsoleEvent(level=params.get("type", "log"), text=text, timestamp=self._now())
            )
        elif method == "Runtime.exceptionThrown":
            details = params.get("exceptionDetails", {})
            exception = details.get("exception", {})
            text = exception.get("description") or details.get("text", "uncaught exception")
            self._errors.append(PageError(timestamp=self._now(), text=text))
        elif method == "Log.entryAdded":
            entry = params.get("entry", {})
            if entry.get("level") == "error":
                self._console.append(
                    ConsoleEvent(level="error", text=entry.get("text", ""), timestamp=self._now())
                )

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def launch(
        cls,
        url: str,
        seed: int,
        browser_path: str | None = None,
        window: tuple[int, int] = (800, 450),
    ) -> "CdpBrowserSession":
        import websockets.sync.client

        binary = find_browser_binary(browser_path)
        user_data_dir = tempfile.mkdtemp(prefix="opengame-browser-")
        process = subprocess.Popen(
            [
                binary,
                "--headless=new",
                "--remote-debugging-port=0",
                f"--user-data-dir={user_data_dir}",
                f"--window-size={window[0]},{window[1]}",
                "--no-sandbox",
                "--disable-gpu",
                "--no-first-run",
                "--disable-dev-shm-usage",
                "about:blank",
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        port_file = Path(user_data_dir) / "DevToolsActivePort"
        deadline = time.monotonic() + LAUNCH_TIMEOUT_SECONDS
        port = None
        while time.monotonic() < deadline:
            if port_file.is_file():
                content = port_file.read_text().splitlines()
                if content:
                    port = int(content[0])
                    break
            if process.poll() is not None:
                raise BrowserUnavailable(f"browser exited with {process.returncode}")
            time.sleep(0.1)
        if port is None:
            process.terminate()
            raise BrowserUnavailable("browser did not expose a devtools port in time")

        endpoint = f"http://127.0.0.1:{port}"
        response = requests.put(f"{endpoint}/json/new?{urllib.parse.quote('about:blank')}", timeout=10)
        if response.status_code >= 400:  # older browsers want GET
            response = requests.get(f"{endpoint}/json/new?{urllib.parse.quote('about:blank')}", timeout=10)
        ws_url = response.json()["webSocketDebuggerUrl"]
        ws = websockets.sync.client.connect(ws_url, max_size=64 * 1024 * 1024)

        session = cls(ws, process, user_data_dir, url=url, seed=seed)
        session._rpc("Page.enable")
        session._rpc("Runtime.enable")
        session._rpc("Log.enable")
        session._rpc("Page.addScriptToEvaluateOnNewDocument", {"source": _BOOTSTRAP})
        session._epoch = time.monotonic()
        result = session._rpc("Page.navigate", {"url": url}, timeout=30.0)
        if result.get("errorText"):
            session.close()
            raise NavigationFailed(f"{url}: {result['errorText']}")
        session._await_probe()
        return session

    def _await_probe(self, timeout: float = 3.0) -> None:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            status = self.probe_status()
            if status is not None:
                self.probe_attached = True
                return
            time.sleep(0.1)

    # -- session protocol ----------------------------------------------------

    def dispatch(self, action: InputAction) -> None:
        if action.kind in ("pointer_down", "pointer_up"):
            self._rpc(
                "Input.dispatchMouseEvent",
                {
                    "type": "mousePressed" if action.kind == "pointer_down" else "mouseReleased",
                    "x": action.detail["x"],
                    "y": action.detail["y"],
                    "button": "left",
                    "clickCount": 1,
                },
            )
        elif action.kind in ("key_down", "key_up"):
            key = action.detail["key"]
            params = {
                "type": "keyDown" if action.kind == "key_down" else "keyUp",
                "key": key,
            }
            if len(key) == 1:
                params["text"] = key
            self._rpc("Input.dispatchKeyEvent", params)
        else:
            raise ValueError(f"unknown input kind {action.kind!r}")
        self._pump_events()

    def capture_screenshot(self) -> bytes:
        result = self._rpc("Page.captureScreenshot", {"format": "png"}, timeout=30.0)
        self._pump_events()
        return base64.b64decode(result["data"])

    def evaluate(self, expression: str):
        result = self._rpc(
            "Runtime.evaluate", {"expression": expression, "returnByValue": True}
        )
        return result.get("result", {}).get("value")

    def probe_status(self) -> dict | None:
        try:
            raw = self.evaluate(
                f"window.{PROBE_GLOBAL} ? JSON.stringify(window.{PROBE_GLOBAL}.status()) : null"
            )
        except SessionLost:
            return None
        if raw is None:
            return None
        try:
            return json.loads(raw)
        except (TypeError, json.JSONDecodeError):
            return None

    def drain_events(self) -> tuple[list[ConsoleEvent], list[PageError]]:
        self._pump_events()
        return list(self._console), list(self._errors)

    def close(self) -> None:
        try:
            self._ws.close()
        except Exception:
            pass
        if self._process.poll() is None:
            self._process.terminate()
            try:
                self._process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._process.kill()
        shutil.rmtree(self._user_data_dir, ignore_errors=True)
