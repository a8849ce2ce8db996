// Minimal 2D canvas engine: scene registry, fixed-step loop, input, and
// data-driven config/asset loading. No framework dependency, no build step.

export class Scene {
  constructor() { this.engine = null; }
  create() {}
  update(dt) {}
  draw(ctx) {}
}

export class Engine {
  constructor(canvas, config, assets) {
    this.canvas = canvas;
    this.ctx = canvas.getContext("2d");
    this.config = config;
    this.assets = assets;
    this.scenes = new Map();
    this.activeScene = null;
    this.keys = new Set();
    this.pointer = null;
    this.frameCount = 0;
    this._last = 0;
    this._bindInput();
  }

  registerScene(name, scene) {
    scene.engine = this;
    this.scenes.set(name, scene);
    return this;
  }

  goto(name) {
    const scene = this.scenes.get(name);
    if (!scene) throw new Error("unregistered scene: " + name);
    this.activeScene = scene;
    scene.create();
  }

  start(name) {
    this.goto(name);
    const step = (now) => {
      const dt = Math.min((now - this._last) / 1000 || 0.016, 0.1);
      this._last = now;
      if (this.activeScene) {
        this.activeScene.update(dt);
        this.ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
        this.activeScene.draw(this.ctx);
      }
      this.frameCount += 1;
      requestAnimationFrame(step);
    };
    requestAnimationFrame(step);
  }

  // Texture lookup by pack key; a labeled placeholder keeps scenes drawable
  // before asset synthesis has run.
  asset(key) {
    return (this.assets && this.assets.images[key]) || null;
  }

  sound(key) {
    return (this.assets && this.assets.audio[key]) || { play() {} };
  }

  value(key, fallback) {
    return this.config && key in this.config ? this.config[key] : fallback;
  }

  drawSprite(ctx, key, x, y, w, h, fallbackColor) {
    const img = this.asset(key);
    if (img) {
      ctx.drawImage(img, x, y, w, h);
    } else {
      ctx.fillStyle = fallbackColor || "#5a8";
      ctx.fillRect(x, y, w, h);
    }
  }

  _bindInput() {
    window.addEventListener("keydown", (e) => this.keys.add(e.key));
    window.addEventListener("keyup", (e) => this.keys.delete(e.key));
    this.canvas.addEventListener("pointerdown", (e) => {
      const rect = this.canvas.getBoundingClientRect();
      this.pointer = { x: e.clientX - rect.left, y: e.clientY - rect.top };
    });
    this.canvas.addEventListener("pointerup", () => { this.pointer = null; });
  }
}

// gameConfig.json stores every entry as { "value": X }; unwrap to a flat map.
export async function loadConfig(url = "gameConfig.json") {
  try {
    const raw = await (await fetch(url)).json();
    const config = {};
    for (const [key, wrapped] of Object.entries(raw)) {
      config[key] = wrapped && typeof wrapped === "object" && "value" in wrapped
        ? wrapped.value
        : wrapped;
    }
    return config;
  } catch (err) {
    console.warn("config load failed, using empty config", err);
    return {};
  }
}

// asset-pack.json binds keys to generated files; absence is tolerated so a
// freshly scaffolded project still renders placeholders.
export async function loadAssets(url = "assets/asset-pack.json") {
  const assets = { images: {}, audio: {} };
  let pack;
  try {
    pack = await (await fetch(url)).json();
  } catch (err) {
    return assets;
  }
  const loads = [];
  for (const [key, entry] of Object.entries(pack.entries || {})) {
    if (!entry.path) continue;
    if (entry.type === "audio_bgm" || entry.type === "audio_sfx") {
      const audio = new Audio(entry.path);
      assets.audio[key] = audio;
    } else {
      loads.push(new Promise((resolve) => {
        const img = new Image();
        img.onload = () => { assets.images[key] = img; resolve(); };
        img.onerror = () => resolve();
        img.src = entry.path;
      }));
    }
  }
  await Promise.all(loads);
  return assets;
}
