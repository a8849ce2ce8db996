import { Engine, loadConfig, loadAssets } from "./engine.js";
import { GameScene } from "./scenes/GameScene.js";

async function boot() {
  // Config must be loaded before any scene starts.
  const config = await loadConfig("gameConfig.json");
  const assets = await loadAssets("assets/asset-pack.json");
  const canvas = document.getElementById("game");
  canvas.width = config.canvasWidth || 800;
  canvas.height = config.canvasHeight || 450;

  const engine = new Engine(canvas, config, assets);
  engine.registerScene("Game", new GameScene());
  engine.start("Game");
  window.__engine = engine;
}

boot();
