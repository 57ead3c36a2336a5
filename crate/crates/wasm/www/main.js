// Build with `wasm-pack build --target web crates/wasm` and serve the crate
// directory; the page loads ../pkg/flatchain_wasm.js.
import init, { sheet_preview, chain_convergence, zk_profile } from "../pkg/flatchain_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

function frame(ctx, xs, ys, pad = 40) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const w = ctx.canvas.width - 2 * pad, h = ctx.canvas.height - 2 * pad;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * w;
  const sy = (y) => pad + h - ((y - y0) / (y1 - y0 || 1)) * h;
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toPrecision(3), pad, pad + h + 14);
  ctx.fillText(x1.toPrecision(3), pad + w - 30, pad + h + 14);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, pad + h);
  return [sx, sy];
}

function polyline(ctx, pts, sx, sy, color, width = 1) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
  ctx.stroke();
}

function guard(fn) {
  return () => {
    $("status").textContent = "";
    try {
      fn();
    } catch (e) {
      $("status").textContent = String(e);
    }
  };
}

function drawPreview() {
  const data = JSON.parse(sheet_preview(num("sp-h"), num("sp-n"), num("sp-seed")));
  const ctx = $("sp-canvas").getContext("2d");
  const all = data.raw.concat(...data.smoothed.map(([, p]) => p));
  const [sx, sy] = frame(ctx, all.map((p) => p[0]), all.map((p) => p[1]));
  polyline(ctx, data.raw, sx, sy, "#bbb");
  data.smoothed.forEach(([, pts], i) => polyline(ctx, pts, sx, sy, palette[i % palette.length], 1.5));
}

function drawConvergence() {
  const r = JSON.parse(chain_convergence(num("cc-h"), num("cc-n"), num("cc-seed"), $("cc-form").value));
  const ctx = $("cc-canvas").getContext("2d");
  const lx = r.alphas.map(Math.log10);
  const refs = [r.value].concat(r.young === null ? [] : [r.young]);
  const [sx, sy] = frame(ctx, lx, r.curve_integrals.concat(refs));
  polyline(ctx, lx.map((x, i) => [x, r.curve_integrals[i]]), sx, sy, palette[0], 2);
  polyline(ctx, [[lx[0], r.value], [lx[lx.length - 1], r.value]], sx, sy, palette[1]);
  if (r.young !== null) polyline(ctx, [[lx[0], r.young], [lx[lx.length - 1], r.young]], sx, sy, palette[2]);
  $("cc-out").textContent =
    `log10(alpha) on the horizontal axis\n` +
    `chain value   ${r.value.toFixed(6)} (${r.extrapolated ? "extrapolated" : "at the smallest scale"}, red)\n` +
    (r.young === null ? "" : `Young value   ${r.young.toFixed(6)} (green)\n`) +
    `Stokes residual ${r.stokes_residual.toExponential(2)}`;
}

function drawProfile() {
  const n = num("zk-n");
  const r = JSON.parse(zk_profile(n, num("zk-seed"), num("zk-k"), 2 * Math.round(num("zk-k")) + 1));
  const ctx = $("zk-canvas").getContext("2d");
  const [sx, sy] = frame(ctx, r.k, r.left.concat(r.midpoint));
  polyline(ctx, r.k.map((k, i) => [k, r.left[i]]), sx, sy, palette[0], 2);
  polyline(ctx, r.k.map((k, i) => [k, r.midpoint[i]]), sx, sy, palette[1], 2);
}

await init();
$("sp-run").addEventListener("click", guard(drawPreview));
$("cc-run").addEventListener("click", guard(drawConvergence));
$("zk-run").addEventListener("click", guard(drawProfile));
guard(drawPreview)();
