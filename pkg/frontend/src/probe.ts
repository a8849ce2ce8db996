// In-page instrumentation for evaluated games: error capture, a render
// heartbeat, and synthetic input dispatch, exposed at a fixed global name.
//
// The script is self-contained and self-installing (no imports, no build
// wiring); loading it twice is a no-op, so counters stay continuous. The
// harness reads the status snapshot through an evaluated expression. The
// probe never drives the page on its own: with no dispatched inputs it only
// observes, so game behavior is unchanged.

interface ProbeStatus {
  ready: boolean;
  frames_observed: number;
  inputs_dispatched: number;
  errors: string[];
}

interface ProbeApi {
  install(): ProbeApi;
  dispatch(kind: string, detail?: Record<string, unknown>): void;
  status(): ProbeStatus;
  version: string;
}

(() => {
  const g = globalThis as Record<string, any>;
  if (g.__OPENGAME_PROBE__) {
    return; // second install is a no-op
  }

  const state: ProbeStatus = {
    ready: false,
    frames_observed: 0,
    inputs_dispatched: 0,
    errors: [],
  };

  // Render heartbeat via animation-frame callbacks: engine-agnostic, counts
  // actual paints rather than hooking any game loop.
  const raf: ((cb: () => void) => unknown) | undefined =
    typeof g.requestAnimationFrame === "function"
      ? g.requestAnimationFrame.bind(g)
      : undefined;
  const heartbeat = () => {
    state.frames_observed += 1;
    state.ready = true;
    raf!(heartbeat);
  };
  if (raf) {
    raf(heartbeat);
  }

  if (typeof g.addEventListener === "function") {
    g.addEventListener("error", (event: any) => {
      const message =
        event && event.message
          ? String(event.message)
          : String((event && event.error) ?? event);
      state.errors.push(message);
    });
    g.addEventListener("unhandledrejection", (event: any) => {
      state.errors.push("unhandledrejection: " + String(event && event.reason));
    });
  }

  const eventTarget = () => g.document ?? g;

  const emit = (event: any) => {
    const target = eventTarget();
    if (typeof target.dispatchEvent === "function") {
      target.dispatchEvent(event);
    }
  };

  const keyEvent = (type: string, key: string) =>
    typeof g.KeyboardEvent === "function"
      ? new g.KeyboardEvent(type, { key, bubbles: true, cancelable: true })
      : { type, key, bubbles: true };

  const pointerEvent = (type: string, x: number, y: number) => {
    const init = { clientX: x, clientY: y, bubbles: true, cancelable: true };
    if (typeof g.PointerEvent === "function") {
      return new g.PointerEvent(type, init);
    }
    if (typeof g.MouseEvent === "function") {
      return new g.MouseEvent(type, init);
    }
    return { type, ...init };
  };

  const dispatch = (kind: string, detail: Record<string, unknown> = {}): void => {
    if (kind === "key_down" || kind === "key_up") {
      const key = String(detail.key ?? "");
      emit(keyEvent(kind === "key_down" ? "keydown" : "keyup", key));
    } else if (kind === "pointer") {
      const x = Number(detail.x ?? 0);
      const y = Number(detail.y ?? 0);
      emit(pointerEvent("pointerdown", x, y));
      emit(pointerEvent("pointerup", x, y));
      emit(pointerEvent("click", x, y));
    } else {
      throw new Error("UnknownKind: " + kind);
    }
    state.inputs_dispatched += 1;
  };

  const status = (): ProbeStatus => ({
    ready: state.ready,
    frames_observed: state.frames_observed,
    inputs_dispatched: state.inputs_dispatched,
    errors: state.errors.slice(),
  });

  const api: ProbeApi = {
    install: () => api, // idempotent by construction
    dispatch,
    status,
    version: "0.1.0",
  };

  g.__OPENGAME_PROBE__ = api;
})();
