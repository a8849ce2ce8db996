// The compiled probe driven inside a sandboxed context with stub globals:
// frame heartbeat, error capture, input dispatch, idempotent installs.

import { readFileSync } from "node:fs";
import vm from "node:vm";
import { beforeAll, describe, expect, it } from "vitest";

const PROBE_SOURCE = () =>
  readFileSync(new URL("../dist/opengame_probe.js", import.meta.url), "utf8");

interface Harness {
  sandbox: any;
  listeners: Record<string, Function[]>;
  rafQueue: Function[];
  dispatched: any[];
  run: () => void;
  pumpFrames: (n: number) => void;
  api: any;
}

function bootProbe(): Harness {
  const listeners: Record<string, Function[]> = {};
  const rafQueue: Function[] = [];
  const dispatched: any[] = [];
  const sandbox: any = {
    requestAnimationFrame: (cb: Function) => {
      rafQueue.push(cb);
      return rafQueue.length;
    },
    addEventListener: (type: string, cb: Function) => {
      (listeners[type] ??= []).push(cb);
    },
    document: {
      dispatchEvent: (event: any) => {
        dispatched.push(event);
        return true;
      },
    },
  };
  const context = vm.createContext(sandbox);
  const source = PROBE_SOURCE();
  const run = () => void vm.runInContext(source, context);
  run();
  const pumpFrames = (n: number) => {
    for (let i = 0; i < n; i++) {
      const cb = rafQueue.shift();
      expect(cb, "heartbeat must stay registered").toBeTypeOf("function");
      cb!();
    }
  };
  return { sandbox, listeners, rafQueue, dispatched, run, pumpFrames, api: sandbox.__OPENGAME_PROBE__ };
}

describe("probe installation", () => {
  it("exposes the status global with zeroed counters before any frame", () => {
    const probe = bootProbe();
    expect(probe.api).toBeTruthy();
    const status = probe.api.status();
    expect(status).toEqual({ ready: false, frames_observed: 0, inputs_dispatched: 0, errors: [] });
  });

  it("observes frames through the animation-frame heartbeat", () => {
    const probe = bootProbe();
    probe.pumpFrames(3);
    const status = probe.api.status();
    expect(status.frames_observed).toBe(3);
    expect(status.ready).toBe(true);
  });

  it("is idempotent: a second install keeps the same object and counters", () => {
    const probe = bootProbe();
    probe.pumpFrames(2);
    const before = probe.sandbox.__OPENGAME_PROBE__;
    probe.run(); // load the script a second time
    expect(probe.sandbox.__OPENGAME_PROBE__).toBe(before);
    expect(probe.api.install()).toBe(before);
    probe.pumpFrames(1);
    expect(probe.api.status().frames_observed).toBe(3); // continuous, not reset
  });
});

describe("error capture", () => {
  it("records page errors raised through the global error hook", () => {
    const probe = bootProbe();
    expect(probe.listeners["error"]).toHaveLength(1);
    probe.listeners["error"][0]({ message: "TypeError: boot is not defined" });
    expect(probe.api.status().errors).toEqual(["TypeError: boot is not defined"]);
  });

  it("records unhandled rejections", () => {
    const probe = bootProbe();
    probe.listeners["unhandledrejection"][0]({ reason: "fetch failed" });
    expect(probe.api.status().errors[0]).toContain("fetch failed");
  });
});

describe("input dispatch", () => {
  it("counts dispatched inputs", () => {
    const probe = bootProbe();
    for (let i = 0; i < 4; i++) probe.api.dispatch("key_down", { key: "ArrowRight" });
    for (let i = 0; i < 4; i++) probe.api.dispatch("pointer", { x: 100, y: 50 });
    expect(probe.api.status().inputs_dispatched).toBe(8);
  });

  it("synthesizes events a fixture listener can observe", () => {
    const probe = bootProbe();
    probe.api.dispatch("key_down", { key: "ArrowRight" });
    probe.api.dispatch("pointer", { x: 100, y: 50 });
    const types = probe.dispatched.map((event) => event.type);
    expect(types).toEqual(["keydown", "pointerdown", "pointerup", "click"]);
    const click = probe.dispatched.find((event) => event.type === "click");
    expect(click.clientX).toBe(100);
    expect(click.clientY).toBe(50);
  });

  it("rejects unknown input kinds", () => {
    const probe = bootProbe();
    expect(() => probe.api.dispatch("gamepad", {})).toThrow(/UnknownKind/);
    expect(probe.api.status().inputs_dispatched).toBe(0);
  });
});

describe("status snapshots", () => {
  it("is a pure read: consecutive snapshots are equal and detached", () => {
    const probe = bootProbe();
    probe.pumpFrames(2);
    probe.listeners["error"][0]({ message: "x" });
    const first = probe.api.status();
    const second = probe.api.status();
    expect(second).toEqual(first);
    first.errors.push("mutated copy");
    expect(probe.api.status().errors).toHaveLength(1);
  });

  it("is JSON-serializable for the devtools evaluate path", () => {
    const probe = bootProbe();
    probe.pumpFrames(1);
    const roundTrip = JSON.parse(JSON.stringify(probe.api.status()));
    expect(roundTrip.frames_observed).toBe(1);
  });
});
