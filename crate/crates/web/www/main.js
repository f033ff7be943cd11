import init, { cgTable, costCurves, convDemo } from "./pkg/cg_attention_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function report(el, text, ok) {
  el.textContent = text;
  el.className = "stats " + (ok ? "ok" : "bad");
}

function drawTable() {
  const canvas = $("table");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  let t;
  try {
    t = cgTable(num("tj"), num("tl1"), num("tl2"), $("treal").checked);
  } catch (e) {
    report($("tstats"), String(e), false);
    return;
  }
  const { rows, cols } = t;
  const values = t.values;
  const cell = Math.max(2, Math.min(40, Math.floor(canvas.width / cols), Math.floor(canvas.height / rows)));
  const peak = values.reduce((m, v) => Math.max(m, Math.abs(v)), 0) || 1;
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const v = values[r * cols + c] / peak;
      const a = Math.abs(v);
      ctx.fillStyle = v === 0 ? "#f3f4f6" : v > 0 ? `rgba(29,78,216,${0.15 + 0.85 * a})` : `rgba(185,28,28,${0.15 + 0.85 * a})`;
      ctx.fillRect(c * cell, r * cell, cell - (cell > 4 ? 1 : 0), cell - (cell > 4 ? 1 : 0));
    }
  }
  const empty = t.nnz === 0 ? " (empty: degrees violate the triangle rule)" : "";
  report($("tstats"), `${rows} x ${cols}, nnz ${t.nnz}, density ${t.density.toFixed(3)}${empty}`, true);
  t.free();
}

function drawCurves() {
  const maxL = num("cl");
  $("clv").textContent = maxL;
  const c = costCurves(maxL);
  const bytes = $("cbytes").checked;
  const xs = c.degrees;
  const dense = bytes ? c.dense_bytes : c.dense_flops;
  const sparse = bytes ? c.sparse_bytes : c.sparse_flops;
  c.free();

  const canvas = $("curves");
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 48;
  ctx.clearRect(0, 0, W, H);
  const lo = Math.log10(Math.min(...sparse.filter((v) => v > 0)));
  const hi = Math.log10(Math.max(...dense));
  const px = (x) => pad + ((x - xs[0]) / (xs[xs.length - 1] - xs[0] || 1)) * (W - 2 * pad);
  const py = (y) => H - pad - ((Math.log10(y) - lo) / (hi - lo || 1)) * (H - 2 * pad);

  ctx.strokeStyle = "#9ca3af";
  ctx.fillStyle = "#4b5563";
  ctx.font = "12px system-ui";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, H - pad);
  ctx.lineTo(W - pad / 2, H - pad);
  ctx.stroke();
  xs.forEach((x) => ctx.fillText(String(x), px(x) - 4, H - pad + 16));
  for (let e = Math.ceil(lo); e <= Math.floor(hi); e++) ctx.fillText(`1e${e}`, 6, py(10 ** e) + 4);
  ctx.fillText("L", W - pad / 2 - 8, H - pad + 32);

  for (const [series, color] of [[dense, "#c2410c"], [sparse, "#1d4ed8"]]) {
    ctx.strokeStyle = color;
    ctx.fillStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    series.forEach((v, i) => (i ? ctx.lineTo(px(xs[i]), py(v)) : ctx.moveTo(px(xs[i]), py(v))));
    ctx.stroke();
    series.forEach((v, i) => ctx.fillRect(px(xs[i]) - 3, py(v) - 3, 6, 6));
  }
  ctx.lineWidth = 1;
  const last = xs.length - 1;
  report(
    $("cstats"),
    `L=${maxL}: sparse/dense = ${(sparse[last] / dense[last]).toFixed(4)} (L=${xs[0]}: ${(sparse[0] / dense[0]).toFixed(4)})`,
    true,
  );
}

function arrow(ctx, x, y, dx, dy, color, width) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  ctx.moveTo(x, y);
  ctx.lineTo(x + dx, y + dy);
  ctx.stroke();
  const a = Math.atan2(dy, dx);
  ctx.beginPath();
  ctx.moveTo(x + dx, y + dy);
  ctx.lineTo(x + dx - 6 * Math.cos(a - 0.4), y + dy - 6 * Math.sin(a - 0.4));
  ctx.moveTo(x + dx, y + dy);
  ctx.lineTo(x + dx - 6 * Math.cos(a + 0.4), y + dy - 6 * Math.sin(a + 0.4));
  ctx.stroke();
}

function drawVectors() {
  $("vangv").textContent = $("vang").value;
  let d;
  try {
    d = convDemo(num("vn"), num("vs"), num("vax"), num("vay"), num("vaz"), num("vang"));
  } catch (e) {
    report($("vstats"), String(e), false);
    return;
  }
  const n = d.tokens;
  const after = d.output;
  const before = d.rotated_output;
  const eq = d.equivariance_error;
  const fd = d.fft_direct_error;
  d.free();

  const canvas = $("vectors");
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height;
  ctx.clearRect(0, 0, W, H);
  const shown = Math.min(n, 32);
  const step = W / shown;
  let peak = 0;
  for (let i = 0; i < 3 * shown; i++) peak = Math.max(peak, Math.abs(after[i]));
  const scale = (0.45 * Math.min(step * 1.6, H)) / (peak || 1);
  for (let t = 0; t < shown; t++) {
    const cx = step * (t + 0.5), cy = H / 2;
    // oblique projection of (x, y, z) onto the page
    const proj = (v, o) => [scale * (v[o] + 0.35 * v[o + 1]), -scale * (v[o + 2] + 0.35 * v[o + 1])];
    const [ax, ay] = proj(after, 3 * t);
    const [bx, by] = proj(before, 3 * t);
    arrow(ctx, cx, cy, ax, ay, "#9ca3af", 5);
    arrow(ctx, cx, cy, bx, by, "#15803d", 1.5);
  }
  const ok = eq < 1e-9 && fd < 1e-9;
  report(
    $("vstats"),
    `relative equivariance error ${eq.toExponential(2)}, FFT vs direct ${fd.toExponential(2)}` +
      (n > shown ? ` (first ${shown} of ${n} tokens drawn)` : ""),
    ok,
  );
}

await init();
for (const id of ["tj", "tl1", "tl2", "treal"]) $(id).addEventListener("input", drawTable);
for (const id of ["cl", "cbytes"]) $(id).addEventListener("input", drawCurves);
for (const id of ["vn", "vs", "vax", "vay", "vaz", "vang"]) $(id).addEventListener("input", drawVectors);
drawTable();
drawCurves();
drawVectors();
