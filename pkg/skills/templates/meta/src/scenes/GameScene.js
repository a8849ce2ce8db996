import { Scene } from "../engine.js";

// Game-agnostic base scene. All game-specific behavior goes into the three
// extension hooks; the lifecycle (create/update/draw) stays untouched.
export class GameScene extends Scene {
  create() {
    this.entities = [];
    this.elapsed = 0;
    this.setupGame();
  }

  update(dt) {
    this.elapsed += dt;
    this.updateGame(dt);
  }

  draw(ctx) {
    const { width, height } = this.engine.canvas;
    ctx.fillStyle = this.engine.value("backgroundColor", "#223");
    ctx.fillRect(0, 0, width, height);
    for (const entity of this.entities) {
      this.engine.drawSprite(ctx, entity.key, entity.x, entity.y, entity.w, entity.h, entity.color);
    }
    ctx.fillStyle = "#fff";
    ctx.font = "16px monospace";
    ctx.fillText(this.engine.value("title", "untitled"), 12, 24);
    this.drawOverlay(ctx);
  }

  // hook: populate this.entities and any game state.
  setupGame() {
    this.entities.push({ key: "placeholder", x: 60, y: 60, w: 40, h: 40, color: "#7ac" });
  }

  // hook: advance game state by dt seconds.
  updateGame(dt) {
    for (const entity of this.entities) {
      entity.x += Math.sin(this.elapsed) * 20 * dt;
    }
  }

  // hook: draw HUD elements above the scene.
  drawOverlay(ctx) {}
}
