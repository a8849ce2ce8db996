import { Scene } from "../engine.js";

// Path-and-wave base scene: enemies follow a waypoint path, waves spawn on a
// timer, pointer placement hook for defensive structures.
export class GameScene extends Scene {
  create() {
    this.waypoints = [];
    this.walkers = [];
    this.placements = [];
    this.waveNumber = 0;
    this.spawnTimer = 0;
    this.pendingSpawns = 0;
    this.elapsed = 0;
    this.setupWaypoints();
    this.setupWaves();
  }

  update(dt) {
    this.elapsed += dt;
    const walkerSpeed = this.engine.value("walkerSpeed", 60);
    const waveInterval = this.engine.value("waveIntervalSeconds", 8);
    const perWave = this.engine.value("walkersPerWave", 5);

    this.spawnTimer -= dt;
    if (this.spawnTimer <= 0) {
      this.waveNumber += 1;
      this.pendingSpawns += perWave;
      this.spawnTimer = waveInterval;
      this.onWaveStarted(this.waveNumber);
    }
    if (this.pendingSpawns > 0 && this.waypoints.length > 0 && this.elapsed % 1 < dt) {
      this.pendingSpawns -= 1;
      const [sx, sy] = this.waypoints[0];
      this.walkers.push({ key: "walker", x: sx, y: sy, leg: 0, color: "#d55" });
    }

    for (const walker of this.walkers) {
      const target = this.waypoints[walker.leg + 1];
      if (!target) continue;
      const dx = target[0] - walker.x, dy = target[1] - walker.y;
      const dist = Math.hypot(dx, dy);
      if (dist < 2) {
        walker.leg += 1;
        if (walker.leg >= this.waypoints.length - 1) this.onWalkerFinished(walker);
      } else {
        walker.x += (dx / dist) * walkerSpeed * dt;
        walker.y += (dy / dist) * walkerSpeed * dt;
      }
    }
    this.walkers = this.walkers.filter((w) => w.leg < this.waypoints.length - 1);

    const pointer = this.engine.pointer;
    if (pointer) {
      this.onPlacement(pointer.x, pointer.y);
      this.engine.pointer = null;
    }
    this.updateGameplay(dt);
  }

  draw(ctx) {
    const { width, height } = this.engine.canvas;
    ctx.fillStyle = this.engine.value("backgroundColor", "#363");
    ctx.fillRect(0, 0, width, height);
    ctx.strokeStyle = "#cb9";
    ctx.lineWidth = 18;
    ctx.beginPath();
    this.waypoints.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
    ctx.lineWidth = 1;
    for (const placement of this.placements) {
      this.engine.drawSprite(ctx, placement.key, placement.x - 14, placement.y - 14, 28, 28, "#89f");
    }
    for (const walker of this.walkers) {
      this.engine.drawSprite(ctx, walker.key, walker.x - 10, walker.y - 10, 20, 20, walker.color);
    }
    this.drawHud(ctx);
  }

  // hook: define the [x, y] waypoint list walkers follow.
  setupWaypoints() {
    const h = this.engine.canvas.height;
    this.waypoints = [[0, h / 2], [300, h / 2], [300, h / 4], [800, h / 4]];
  }

  // hook: tune wave pacing or pre-seed placements.
  setupWaves() {}

  // hook: a new wave began.
  onWaveStarted(waveNumber) {}

  // hook: a walker reached the final waypoint.
  onWalkerFinished(walker) {}

  // hook: pointer pressed at (x, y) — place structures here.
  onPlacement(x, y) {
    this.placements.push({ key: "placement", x, y });
  }

  // hook: per-frame game logic.
  updateGameplay(dt) {}

  // hook: HUD drawing.
  drawHud(ctx) {}
}
