// Build with: wasm-pack build crates/web --target web --out-dir www/pkg
import init, { attractor, XorDemo } from "./pkg/dopamine_web.js";

const $ = (id) => document.getElementById(id);

// Viridis-like ramp, t in [0, 1].
function ramp(t) {
  const stops = [[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]];
  const x = Math.min(Math.max(t, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(x), stops.length - 2);
  const f = x - i;
  return stops[i].map((c, k) => Math.round(c + f * (stops[i + 1][k] - c)));
}

function drawHeatmap(canvas, values, res, toUnit) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(res, res);
  values.forEach((v, i) => {
    const [r, g, b] = Number.isFinite(v) ? ramp(toUnit(v)) : [255, 255, 255];
    img.data.set([r, g, b, 255], 4 * i);
  });
  const tmp = new OffscreenCanvas(res, res);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function drawAttractor() {
  const canvas = $("att-canvas");
  const ctx = canvas.getContext("2d");
  const xyz = attractor($("att-system").value, Number($("att-length").value), Number($("att-dt").value),
    $("att-rk4").checked, true);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "rgba(40, 80, 160, 0.6)";
  ctx.beginPath();
  // x against z, both already scaled to [0, 1].
  for (let i = 0; i < xyz.length; i += 3) {
    const px = 10 + xyz[i] * (canvas.width - 20);
    const py = canvas.height - 10 - xyz[i + 2] * (canvas.height - 20);
    i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
  }
  ctx.stroke();
}

let demo = null;
let curve = [];
let running = false;

function resetXor() {
  demo?.free();
  demo = new XorDemo($("xor-preset").value, BigInt($("xor-seed").value));
  curve = [demo.loss()];
  renderXor();
}

function renderXor() {
  const res = 64;
  const lo = -0.5, hi = 1.5;
  const grid = $("xor-grid");
  drawHeatmap(grid, demo.decision_grid(res, lo, hi), res, (p) => p);
  const ctx = grid.getContext("2d");
  const pts = demo.points();
  for (let i = 0; i < pts.length; i += 3) {
    const px = ((pts[i] - lo) / (hi - lo)) * grid.width;
    const py = ((pts[i + 1] - lo) / (hi - lo)) * grid.height;
    ctx.fillStyle = pts[i + 2] > 0.5 ? "#fff" : "#000";
    ctx.fillRect(px - 2, py - 2, 4, 4);
  }

  const c = $("xor-curve");
  const cx = c.getContext("2d");
  cx.clearRect(0, 0, c.width, c.height);
  const logs = curve.map((v) => Math.log10(Math.max(v, 1e-6)));
  const top = Math.max(...logs), bottom = Math.min(...logs, top - 1);
  cx.strokeStyle = "#c33";
  cx.beginPath();
  logs.forEach((v, i) => {
    const px = (i / Math.max(curve.length - 1, 1)) * c.width;
    const py = ((top - v) / (top - bottom)) * (c.height - 10) + 5;
    i === 0 ? cx.moveTo(px, py) : cx.lineTo(px, py);
  });
  cx.stroke();

  $("xor-status").textContent =
    `step ${demo.steps()} / ${demo.epochs()}  loss ${curve[curve.length - 1].toFixed(5)}  accuracy ${demo.accuracy().toFixed(3)}`;
}

function trainLoop() {
  if (!running) return;
  try {
    curve.push(demo.train(250));
  } catch (e) {
    running = false;
    $("xor-toggle").textContent = "train";
    $("xor-status").textContent = `stopped: ${e}`;
    return;
  }
  renderXor();
  if (demo.steps() >= demo.epochs()) {
    running = false;
    $("xor-toggle").textContent = "train";
    return;
  }
  requestAnimationFrame(trainLoop);
}

function drawLandscape() {
  const steps = Number($("land-steps").value);
  const losses = demo.landscape(steps, Number($("land-range").value), $("land-filter").checked);
  const finite = Array.from(losses).filter(Number.isFinite).map((v) => Math.log10(Math.max(v, 1e-8)));
  const lo = Math.min(...finite), hi = Math.max(...finite);
  drawHeatmap($("land-canvas"), losses, steps, (v) => (Math.log10(Math.max(v, 1e-8)) - lo) / (hi - lo || 1));
  const centre = losses[(steps * steps - 1) / 2];
  $("land-status").textContent = `centre loss ${centre?.toFixed(5)}  log10 range [${lo.toFixed(2)}, ${hi.toFixed(2)}]`;
}

await init();
$("att-run").onclick = drawAttractor;
$("xor-reset").onclick = () => { running = false; $("xor-toggle").textContent = "train"; resetXor(); };
$("xor-toggle").onclick = () => {
  running = !running;
  $("xor-toggle").textContent = running ? "pause" : "train";
  trainLoop();
};
$("land-run").onclick = drawLandscape;
drawAttractor();
resetXor();
