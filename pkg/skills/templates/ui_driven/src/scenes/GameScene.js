import { Scene } from "../engine.js";

// UI-driven base scene: labeled panels and buttons, pointer hit-testing,
// no spatial physics. Gameplay is state transitions behind button presses.
export class GameScene extends Scene {
  create() {
    this.buttons = [];
    this.panels = [];
    this.state = {};
    this.elapsed = 0;
    this.setupUi();
  }

  update(dt) {
    this.elapsed += dt;
    const pointer = this.engine.pointer;
    if (pointer) {
      for (const button of this.buttons) {
        const inside =
          pointer.x >= button.x && pointer.x <= button.x + button.w &&
          pointer.y >= button.y && pointer.y <= button.y + button.h;
        if (inside) this.onButtonPressed(button.id);
      }
      this.engine.pointer = null;
    }
    this.updateGame(dt);
  }

  draw(ctx) {
    const { width, height } = this.engine.canvas;
    ctx.fillStyle = this.engine.value("backgroundColor", "#324");
    ctx.fillRect(0, 0, width, height);
    for (const panel of this.panels) {
      ctx.fillStyle = panel.color || this.engine.value("panelColor", "#445");
      ctx.fillRect(panel.x, panel.y, panel.w, panel.h);
      if (panel.key) {
        this.engine.drawSprite(ctx, panel.key, panel.x, panel.y, panel.w, panel.h, panel.color || "#445");
      }
      if (panel.text) {
        ctx.fillStyle = "#fff";
        ctx.font = `${this.engine.value("fontSize", 16)}px monospace`;
        ctx.fillText(panel.text, panel.x + 10, panel.y + 24);
      }
    }
    for (const button of this.buttons) {
      ctx.fillStyle = button.color || "#79d";
      ctx.fillRect(button.x, button.y, button.w, button.h);
      ctx.fillStyle = "#013";
      ctx.font = `${this.engine.value("fontSize", 16)}px monospace`;
      ctx.fillText(button.label, button.x + 10, button.y + button.h / 2 + 5);
    }
    this.drawStatus(ctx);
  }

  // hook: build this.panels and this.buttons ({ id, label, x, y, w, h }).
  setupUi() {
    this.panels.push({ x: 40, y: 40, w: 300, h: 80, text: "panel" });
    this.buttons.push({ id: "primary", label: "Press", x: 40, y: 150, w: 120, h: 44 });
  }

  // hook: a button with this id was pressed.
  onButtonPressed(id) {}

  // hook: timers / idle progression.
  updateGame(dt) {}

  // hook: status line / score readout.
  drawStatus(ctx) {}
}
