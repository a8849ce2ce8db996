import { Scene } from "../engine.js";

// Gravity-based side-view base scene: Y-axis gravity, ground/platform
// collision, left/right/jump controls. Game-specific logic goes in hooks.
export class GameScene extends Scene {
  create() {
    this.platforms = [];
    this.entities = [];
    this.player = {
      key: "player", x: 80, y: 80, w: 32, h: 40,
      vx: 0, vy: 0, grounded: false, color: "#fc6",
    };
    this.elapsed = 0;
    this.setupLevel();
    this.setupPlayer();
    this.setupCustomCollisions();
  }

  update(dt) {
    this.elapsed += dt;
    const gravity = this.engine.value("gravity", 900);
    const moveSpeed = this.engine.value("moveSpeed", 200);
    const jumpVelocity = this.engine.value("jumpVelocity", 350);
    const keys = this.engine.keys;
    const p = this.player;

    p.vx = 0;
    if (keys.has("ArrowLeft") || keys.has("a")) p.vx = -moveSpeed;
    if (keys.has("ArrowRight") || keys.has("d")) p.vx = moveSpeed;
    if ((keys.has(" ") || keys.has("ArrowUp") || keys.has("w")) && p.grounded) {
      p.vy = -jumpVelocity;
      p.grounded = false;
    }

    p.vy += gravity * dt;
    p.x += p.vx * dt;
    p.y += p.vy * dt;

    const wasAirborne = !p.grounded;
    p.grounded = false;
    for (const plat of this.platforms) {
      const overlapX = p.x + p.w > plat.x && p.x < plat.x + plat.w;
      const falling = p.vy >= 0;
      if (overlapX && falling && p.y + p.h >= plat.y && p.y + p.h - p.vy * dt <= plat.y + 1) {
        p.y = plat.y - p.h;
        p.vy = 0;
        p.grounded = true;
      }
    }
    if (wasAirborne && p.grounded) this.onPlayerLanded();
    const floor = this.engine.canvas.height - p.h;
    if (p.y > floor) { p.y = floor; p.vy = 0; p.grounded = true; }

    this.updateGameplay(dt);
  }

  draw(ctx) {
    const { width, height } = this.engine.canvas;
    ctx.fillStyle = this.engine.value("backgroundColor", "#9cf");
    ctx.fillRect(0, 0, width, height);
    for (const plat of this.platforms) {
      this.engine.drawSprite(ctx, plat.key, plat.x, plat.y, plat.w, plat.h, "#684");
    }
    for (const entity of this.entities) {
      this.engine.drawSprite(ctx, entity.key, entity.x, entity.y, entity.w, entity.h, entity.color);
    }
    const p = this.player;
    this.engine.drawSprite(ctx, p.key, p.x, p.y, p.w, p.h, p.color);
    this.drawHud(ctx);
  }

  // hook: push { x, y, w, h, key } platform records.
  setupLevel() {
    const h = this.engine.canvas.height;
    this.platforms.push({ x: 0, y: h - 40, w: this.engine.canvas.width, h: 40, key: "ground" });
    this.platforms.push({ x: 260, y: h - 150, w: 140, h: 20, key: "ground" });
  }

  // hook: configure the player record (sprite key, spawn, size).
  setupPlayer() {}

  // hook: extra collision pairs (enemies, pickups, hazards).
  setupCustomCollisions() {}

  // hook: per-frame game logic after physics.
  updateGameplay(dt) {}

  // hook: called on each landing after airborne frames.
  onPlayerLanded() {}

  // hook: HUD drawing.
  drawHud(ctx) {}
}
