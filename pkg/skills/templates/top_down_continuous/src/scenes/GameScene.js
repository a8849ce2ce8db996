import { Scene } from "../engine.js";

// Top-down continuous-motion base scene: no gravity, velocity steering on
// both axes, arena bounds, actor-vs-actor circle collision.
export class GameScene extends Scene {
  create() {
    this.actors = [];
    this.player = {
      key: "player", x: 400, y: 225, r: 16,
      vx: 0, vy: 0, color: "#fc6",
    };
    this.elapsed = 0;
    this.setupArena();
    this.setupActors();
  }

  update(dt) {
    this.elapsed += dt;
    const moveSpeed = this.engine.value("moveSpeed", 220);
    const keys = this.engine.keys;
    const p = this.player;

    p.vx = 0; p.vy = 0;
    if (keys.has("ArrowLeft") || keys.has("a")) p.vx = -moveSpeed;
    if (keys.has("ArrowRight") || keys.has("d")) p.vx = moveSpeed;
    if (keys.has("ArrowUp") || keys.has("w")) p.vy = -moveSpeed;
    if (keys.has("ArrowDown") || keys.has("s")) p.vy = moveSpeed;
    p.x += p.vx * dt;
    p.y += p.vy * dt;

    const { width, height } = this.engine.canvas;
    p.x = Math.max(p.r, Math.min(width - p.r, p.x));
    p.y = Math.max(p.r, Math.min(height - p.r, p.y));

    for (const actor of this.actors) {
      actor.x += (actor.vx || 0) * dt;
      actor.y += (actor.vy || 0) * dt;
      const dx = actor.x - p.x, dy = actor.y - p.y;
      if (Math.hypot(dx, dy) < (actor.r || 12) + p.r) this.onActorTouched(actor);
    }

    this.updateGameplay(dt);
  }

  draw(ctx) {
    const { width, height } = this.engine.canvas;
    ctx.fillStyle = this.engine.value("backgroundColor", "#242");
    ctx.fillRect(0, 0, width, height);
    for (const actor of this.actors) {
      const size = (actor.r || 12) * 2;
      this.engine.drawSprite(ctx, actor.key, actor.x - size / 2, actor.y - size / 2, size, size, actor.color);
    }
    const p = this.player;
    this.engine.drawSprite(ctx, p.key, p.x - p.r, p.y - p.r, p.r * 2, p.r * 2, p.color);
    this.drawHud(ctx);
  }

  // hook: arena decorations / obstacles.
  setupArena() {}

  // hook: spawn initial actors ({ key, x, y, r, vx, vy, color }).
  setupActors() {
    this.actors.push({ key: "drifter", x: 150, y: 120, r: 12, vx: 40, vy: 25, color: "#a6f" });
  }

  // hook: collision response when an actor touches the player.
  onActorTouched(actor) {}

  // hook: per-frame game logic after movement.
  updateGameplay(dt) {}

  // hook: HUD drawing.
  drawHud(ctx) {}
}
