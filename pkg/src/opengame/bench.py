"""Execution harness: build, serve, drive seeded play, capture, validate.

A run builds the project (when it declares a build step), serves the
directory over local HTTP, attaches a browser session (real headless browser
over the devtools wire protocol, or the fake replay/synthesis backend for
CI), dispatches a seeded input schedule while capturing screenshots, and
finally checks the §-validity preconditions: build ok, no fatal runtime
error in the first seconds, and at least one non-empty frame.
"""

from __future__ import annotations

import functools
import http.server
import json
import logging
import random
import shlex
import shutil
import socketserver
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import imaging

logger = logging.getLogger(__name__)

BUILD_TIMEOUT_SECONDS = 600.0
FATAL_ERROR_WINDOW_SECONDS = 5.0
ENTROPY_FLOOR = 0.05
PROBE_ROUTE = "/__opengame_probe.js"
BROWSER_PATH_ENV = "OPENGAME_BROWSER_PATH"


class CommandNotFound(RuntimeError):
    pass


class MissingEntryPoint(RuntimeError):
    pass


class BrowserUnavailable(RuntimeError):
    pass


class NavigationFailed(RuntimeError):
    pass


class SessionLost(RuntimeError):
    pass


class TooFewFrames(ValueError):
    pass


# --- build -------------------------------------------------------------------

@dataclass
class BuildResult:
    required: bool
    status: str  # success | failure | skipped
    log: str = ""
    duration: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status in ("success", "skipped")


def declares_build_step(project_dir: str | Path) -> bool:
    package_json = Path(project_dir) / "package.json"
    if not package_json.is_file():
        return False
    try:
        scripts = json.loads(package_json.read_text()).get("scripts", {})
    except json.JSONDecodeError:
        return False
    return "build" in scripts


def run_build(
    project_dir: str | Path,
    command: str = "npm run build",
    timeout: float = BUILD_TIMEOUT_SECONDS,
) -> BuildResult:
    """Execute the configured build command when the project declares one."""
    project_dir = Path(project_dir)
    if not project_dir.is_dir():
        raise FileNotFoundError(project_dir)
    if not declares_build_step(project_dir):
        return BuildResult(required=False, status="skipped")

    executable = shlex.split(command)[0]
    if shutil.which(executable) is None:
        raise CommandNotFound(f"build executable {executable!r} not found on PATH")

    start = time.monotonic()
    try:
        completed = subprocess.run(
            command,
            shell=True,
            cwd=project_dir,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        duration = time.monotonic() - start
        log = (exc.stdout or "") + (exc.stderr or "")
        return BuildResult(
            required=True,
            status="failure",
            log=log + f"\n[build timed out after {timeout:.0f}s]",
            duration=duration,
        )
    duration = time.monotonic() - start
    status = "success" if completed.returncode == 0 else "failure"
    return BuildResult(
        required=True,
        status=status,
        log=completed.stdout + completed.stderr,
        duration=duration,
    )


# --- static file server ------------------------------------------------------

_EXTRA_CONTENT_TYPES = {
    ".js": "text/javascript",
    ".mjs": "text/javascript",
    ".json": "application/json",
    ".wav": "audio/wav",
    ".png": "image/png",
    ".html": "text/html",
}


class _ProjectRequestHandler(http.server.SimpleHTTPRequestHandler):
    probe_file: Path | None = None

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)

    extensions_map = {
        **http.server.SimpleHTTPRequestHandler.extensions_map,
        **_EXTRA_CONTENT_TYPES,
    }

    def do_GET(self):
        if self.path.split("?", 1)[0] == PROBE_ROUTE and self.probe_file is not None:
            try:
                blob = self.probe_file.read_bytes()
            except OSError:
                self.send_error(404)
                return
            self.send_response(200)
            self.send_header("Content-Type", "text/javascript")
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)
            return
        super().do_GET()

    def log_message(self, *args):
        logger.debug("http: " + args[0], *args[1:])


class _ThreadingServer(socketserver.ThreadingMixIn, http.server.HTTPServer):
    daemon_threads = True
    allow_reuse_address = True


@dataclass
class ServerHandle:
    base_url: str
    directory: Path
    _server: _ThreadingServer
    _thread: threading.Thread

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "ServerHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def default_probe_file() -> Path | None:
    """The committed probe build artifact, when the repo ships one."""
    for candidate in (Path.cwd(), *Path.cwd().parents):
        probe = candidate / "frontend" / "dist" / "opengame_probe.js"
        if probe.is_file():
            return probe
    return None


def serve_project(
    project_dir: str | Path,
    dist_subdir: str = "dist",
    probe_file: str | Path | None = None,
) -> ServerHandle:
    """Serve the project's entry point on an ephemeral local port."""
    project_dir = Path(project_dir)
    if (project_dir / "index.html").is_file():
        root = project_dir
    elif (project_dir / dist_subdir / "index.html").is_file():
        root = project_dir / dist_subdir
    else:
        raise MissingEntryPoint(f"no index.html under {project_dir} (or {dist_subdir}/)")

    probe = Path(probe_file) if probe_file else default_probe_file()
    handler_cls = type(
        "_Handler",
        (_ProjectRequestHandler,),
        {"probe_file": probe if probe and probe.is_file() else None},
    )
    handler = functools.partial(handler_cls, directory=str(root))
    server = _ThreadingServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    return ServerHandle(
        base_url=f"http://{host}:{port}",
        directory=root,
        _server=server,
        _thread=thread,
    )


# --- sessions and captures ------------------------------------------------------

@dataclass
class ConsoleEvent:
    level: str
    text: str
    timestamp: float


@dataclass
class PageError:
    timestamp: float
    text: str

    def __str__(self) -> str:
        return self.text


@dataclass
class InputAction:
    kind: str  # key_down | key_up | pointer
    detail: dict


@dataclass
class CaptureSet:
    screenshots: list[tuple[float, bytes]] = field(default_factory=list)
    console_events: list[ConsoleEvent] = field(default_factory=list)
    page_errors: list[PageError] = field(default_factory=list)
    input_log: list[InputAction] = field(default_factory=list)
    probe_status: dict | None = None
    navigation_ok: bool = True

    def screenshot_bytes(self) -> list[bytes]:
        return [blob for _, blob in self.screenshots]

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for t, blob in self.screenshots:
            h.update(f"{t:.3f}".encode())
            h.update(blob)
        for event in self.console_events:
            h.update(f"{event.level}|{event.text}|{event.timestamp:.3f}".encode())
        for error in self.page_errors:
            h.update(f"{error.timestamp:.3f}|{error.text}".encode())
        for action in self.input_log:
            h.update(json.dumps([action.kind, action.detail], sort_keys=True).encode())
        return h.hexdigest()


@dataclass
class PlaySchedule:
    captures: int = 8
    interval_seconds: float = 2.0
    inputs_per_interval: int = 4

    def total_seconds(self) -> float:
        return self.captures * self.interval_seconds


INPUT_VOCABULARY = (
    "ArrowLeft",
    "ArrowRight",
    "ArrowUp",
    "ArrowDown",
    "w",
    "a",
    "s",
    "d",
    " ",
    "Enter",
)


def seeded_inputs(seed: int, schedule: PlaySchedule, canvas=(800, 450)) -> list[InputAction]:
    """The deterministic input sequence for one seeded play session.

    Every gesture is a down/up pair, so the log length is a pure function of
    the schedule: captures * inputs_per_interval * 2 actions.
    """
    rng = random.Random(seed)
    actions: list[InputAction] = []
    for _ in range(schedule.captures):
        for _ in range(schedule.inputs_per_interval):
            if rng.random() < 0.25:
                point = {
                    "x": rng.randrange(0, canvas[0]),
                    "y": rng.randrange(0, canvas[1]),
                }
                actions.append(InputAction("pointer_down", dict(point)))
                actions.append(InputAction("pointer_up", dict(point)))
            else:
                key = rng.choice(INPUT_VOCABULARY)
                actions.append(InputAction("key_down", {"key": key}))
                actions.append(InputAction("key_up", {"key": key}))
    return actions


class BrowserSession:
    """Interface both session backends implement."""

    seed: int = 0
    target_url: str = ""
    probe_attached: bool = False

    def dispatch(self, action: InputAction) -> None:
        raise NotImplementedError

    def capture_screenshot(self) -> bytes:
        raise NotImplementedError

    def drain_events(self) -> tuple[list[ConsoleEvent], list[PageError]]:
        raise NotImplementedError

    def probe_status(self) -> dict | None:
        return None

    def advance(self, seconds: float) -> None:
        """Real sessions sleep; the fake session advances virtual time."""
        time.sleep(seconds)

    def close(self) -> None:
        pass


def launch_session(url: str, seed: int, browser_path: str | None = None):
    """Attach a real headless browser to the served page via the devtools
    wire protocol. Use the fake backend (`--no-browser`) when no browser is
    available."""
    from .cdp import CdpBrowserSession

    return CdpBrowserSession.launch(url, seed=seed, browser_path=browser_path)


def run_play_script(
    session: BrowserSession,
    seed: int,
    schedule: PlaySchedule | None = None,
) -> CaptureSet:
    """Dispatch the seeded input sequence, capturing screenshots on schedule."""
    schedule = schedule or PlaySchedule()
    actions = seeded_inputs(seed, schedule)
    per_interval = schedule.inputs_per_interval
    captures = CaptureSet()
    cursor = 0
    for index in range(schedule.captures):
        chunk = actions[cursor : cursor + per_interval * 2]  # key_down+key_up pairs
        cursor += len(chunk)
        for action in chunk:
            session.dispatch(action)
            captures.input_log.append(action)
        session.advance(schedule.interval_seconds)
        timestamp = (index + 1) * schedule.interval_seconds
        captures.screenshots.append((timestamp, session.capture_screenshot()))
    console, errors = session.drain_events()
    captures.console_events = console
    captures.page_errors = errors
    captures.probe_status = session.probe_status()
    captures.navigation_ok = getattr(session, "navigation_ok", True)
    return captures


# --- validity ---------------------------------------------------------------------

@dataclass
class RunValidity:
    verdict: str  # valid | pipeline_error
    reasons: list[str] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return self.verdict == "valid"


def has_fatal_error(captures: CaptureSet, window: float = FATAL_ERROR_WINDOW_SECONDS) -> bool:
    if not captures.navigation_ok:
        return True
    return any(error.timestamp <= window for error in captures.page_errors)


def check_run_validity(build: BuildResult, captures: CaptureSet) -> RunValidity:
    """valid iff the build succeeded (or was not required), no fatal runtime
    error occurred, and at least one screenshot is non-empty."""
    reasons = []
    if not build.ok:
        reasons.append("build failed")
    if has_fatal_error(captures):
        if not captures.navigation_ok:
            reasons.append("navigation failed")
        else:
            reasons.append(
                f"fatal runtime error within first {FATAL_ERROR_WINDOW_SECONDS:.0f}s"
            )
    non_empty = False
    for blob in captures.screenshot_bytes():
        try:
            if imaging.non_empty_frame(blob, ENTROPY_FLOOR):
                non_empty = True
                break
        except imaging.DecodeError:
            continue
    if not non_empty:
        reasons.append("no non-empty screenshot")
    if reasons:
        return RunValidity(verdict="pipeline_error", reasons=reasons)
    return RunValidity(verdict="valid")
