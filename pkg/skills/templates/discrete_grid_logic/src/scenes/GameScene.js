import { Scene } from "../engine.js";

// Discrete grid-logic base scene: a cols x rows board of cells, a logic tick
// timer, and pointer-to-cell mapping. No continuous physics at all.
export class GameScene extends Scene {
  create() {
    this.cols = this.engine.value("boardCols", 8);
    this.rows = this.engine.value("boardRows", 8);
    this.cellSize = this.engine.value("cellSize", 48);
    this.board = Array.from({ length: this.rows }, () => Array(this.cols).fill(null));
    this.tickAccumulator = 0;
    this.elapsed = 0;
    this.setupBoard();
  }

  update(dt) {
    this.elapsed += dt;
    const tickSeconds = this.engine.value("tickSeconds", 0.5);
    this.tickAccumulator += dt;
    while (this.tickAccumulator >= tickSeconds) {
      this.tickAccumulator -= tickSeconds;
      this.onTick();
    }
    const pointer = this.engine.pointer;
    if (pointer) {
      const col = Math.floor((pointer.x - this.originX()) / this.cellSize);
      const row = Math.floor((pointer.y - this.originY()) / this.cellSize);
      if (row >= 0 && row < this.rows && col >= 0 && col < this.cols) {
        this.onCellActivated(row, col);
      }
      this.engine.pointer = null;
    }
  }

  originX() {
    return (this.engine.canvas.width - this.cols * this.cellSize) / 2;
  }

  originY() {
    return (this.engine.canvas.height - this.rows * this.cellSize) / 2;
  }

  draw(ctx) {
    const { width, height } = this.engine.canvas;
    ctx.fillStyle = this.engine.value("backgroundColor", "#123");
    ctx.fillRect(0, 0, width, height);
    const ox = this.originX(), oy = this.originY(), s = this.cellSize;
    for (let row = 0; row < this.rows; row++) {
      for (let col = 0; col < this.cols; col++) {
        const x = ox + col * s, y = oy + row * s;
        ctx.strokeStyle = "#467";
        ctx.strokeRect(x, y, s, s);
        const cell = this.board[row][col];
        if (cell) {
          this.engine.drawSprite(ctx, cell.key, x + 2, y + 2, s - 4, s - 4, cell.color || "#f83");
        }
      }
    }
    this.drawHud(ctx);
  }

  // hook: seed this.board with cell records ({ key, color, ...state }).
  setupBoard() {
    this.board[0][0] = { key: "piece", color: "#8cf" };
  }

  // hook: one logic step per tickSeconds.
  onTick() {}

  // hook: pointer activated the cell at (row, col).
  onCellActivated(row, col) {}

  // hook: HUD drawing.
  drawHud(ctx) {}
}
