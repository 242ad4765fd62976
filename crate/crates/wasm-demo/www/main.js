import init, { max_law_curve, endpoint_curve, expansion_table, version } from "./pkg/critrange_wasm_demo.js";

const POINTS = 400;

function grid(from, to, n) {
  return Array.from({ length: n }, (_, i) => from + (to - from) * i / (n - 1));
}

function plot(canvas, xs, ys) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const ymax = Math.max(...ys) || 1;
  const px = x => pad + (x - xs[0]) / (xs[xs.length - 1] - xs[0]) * (w - 2 * pad);
  const py = y => h - pad - y / ymax * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, py(0)); ctx.lineTo(w - pad, py(0));
  if (xs[0] <= 0 && xs[xs.length - 1] >= 0) { ctx.moveTo(px(0), pad); ctx.lineTo(px(0), h - pad); }
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(xs[0].toFixed(2), pad, h - 10);
  ctx.fillText(xs[xs.length - 1].toFixed(2), w - pad - 20, h - 10);
  ctx.fillText(ymax.toPrecision(3), 2, pad);
  ctx.strokeStyle = "#1f5fa8";
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]))));
  ctx.stroke();
}

function guarded(errId, f) {
  const el = document.getElementById(errId);
  try { f(); el.textContent = ""; } catch (e) { el.textContent = String(e.message ?? e); }
}

function drawMax() {
  guarded("mx-err", () => {
    const from = Number(document.getElementById("mx-from").value);
    const to = Number(document.getElementById("mx-to").value);
    plot(document.getElementById("mx-plot"), grid(from, to, POINTS), max_law_curve(from, to, POINTS));
  });
}

function drawEndpoint() {
  const u = Number(document.getElementById("ep-u").value);
  const h = Number(document.getElementById("ep-h").value);
  document.getElementById("ep-u-val").textContent = u;
  document.getElementById("ep-h-val").textContent = h;
  guarded("ep-err", () => {
    const from = -6 / h, to = 4 * Math.sqrt(u) + 1;
    plot(document.getElementById("ep-plot"), grid(from, to, POINTS), endpoint_curve(u, h, from, to, POINTS));
  });
}

function fillExpansion() {
  const table = document.getElementById("ex-table");
  guarded("ex-err", () => {
    const t = Number(document.getElementById("ex-t").value);
    const h = Number(document.getElementById("ex-h").value);
    const n = Number(document.getElementById("ex-n").value);
    const rows = JSON.parse(expansion_table(t, h, n));
    const cols = ["l", "term", "partial", "quadrature", "abs_diff"];
    table.innerHTML = "<tr>" + cols.map(c => `<th>${c}</th>`).join("") + "</tr>" +
      rows.map(r => "<tr>" + cols.map(c => `<td>${c === "l" ? r[c] : r[c].toExponential(8)}</td>`).join("") + "</tr>").join("");
  });
}

await init();
document.getElementById("version").textContent = `library version ${version()}`;
document.getElementById("mx-from").addEventListener("change", drawMax);
document.getElementById("mx-to").addEventListener("change", drawMax);
document.getElementById("ep-u").addEventListener("input", drawEndpoint);
document.getElementById("ep-h").addEventListener("input", drawEndpoint);
document.getElementById("ex-go").addEventListener("click", fillExpansion);
drawMax();
drawEndpoint();
fillExpansion();
