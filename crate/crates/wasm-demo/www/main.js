import init, { extension_profile, path_energy_curve, maximizer_1d } from "./pkg/fracfield_wasm.js";

const $ = (id) => document.getElementById(id);

// xs, ys: plain arrays. marks: optional [x, y] points drawn as dots.
function plot(canvas, xs, ys, marks = []) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const all = ys.concat(marks.map((m) => m[1]));
  let lo = Math.min(0, ...all), hi = Math.max(...all);
  if (hi === lo) hi = lo + 1;
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const px = (x) => pad + (w - 2 * pad) * (x - x0) / (x1 - x0);
  const py = (y) => h - pad - (h - 2 * pad) * (y - lo) / (hi - lo);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, py(0)); ctx.lineTo(w - pad, py(0));
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(hi.toPrecision(3), 2, py(hi) + 4);
  ctx.fillText(lo.toPrecision(3), 2, py(lo));
  ctx.fillText(x0.toPrecision(3), pad, h - 8);
  ctx.fillText(x1.toPrecision(3), w - pad - 20, h - 8);
  ctx.strokeStyle = "#1f5fa8";
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]))));
  ctx.stroke();
  ctx.fillStyle = "#c0392b";
  for (const [x, y] of marks) {
    ctx.beginPath();
    ctx.arc(px(x), py(y), 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function pairs(flat, skip) {
  const xs = [], ys = [];
  for (let i = skip; i + 1 < flat.length; i += 2) {
    xs.push(flat[i]);
    ys.push(flat[i + 1]);
  }
  return [xs, ys];
}

function guard(out, f) {
  try {
    f();
  } catch (e) {
    $(out).textContent = "error: " + e;
  }
}

function drawExtension() {
  const s = Number($("ext-s").value);
  $("ext-s-val").textContent = s.toFixed(2);
  guard("ext-out", () => {
    const [z, phi] = pairs(extension_profile(s, 6, 200), 0);
    plot($("ext-plot"), z, phi);
    const half = z[phi.findIndex((v) => v < 0.5)];
    $("ext-out").textContent = `phi_s(z) on [0, 6]; phi drops below 1/2 at z = ${half.toFixed(3)}`;
  });
}

function drawPath() {
  guard("path-out", () => {
    const n = Number($("path-n").value), s = Number($("path-s").value);
    const norm = Number($("path-norm").value), phi = Number($("path-phi").value);
    const first = path_energy_curve(n, s, norm, phi, 1, 2);
    const tmax = 3 * first[0];
    const flat = path_energy_curve(n, s, norm, phi, tmax, 300);
    const [t, e] = pairs(flat, 2);
    plot($("path-plot"), t, e, [[flat[0], flat[1]]]);
    $("path-out").textContent = `t* = ${flat[0].toPrecision(6)}, max I = ${flat[1].toPrecision(6)}`;
  });
}

function runMaximizer() {
  $("max-out").textContent = "solving...";
  setTimeout(() => guard("max-out", () => {
    const t0 = performance.now();
    const flat = maximizer_1d(Number($("max-s").value), Number($("max-l").value),
      Number($("max-m").value), Number($("max-box").value));
    const ms = performance.now() - t0;
    const [x, u] = pairs(flat, 3);
    plot($("max-plot"), x, u);
    $("max-out").textContent =
      `S_l = ${flat[0].toPrecision(8)}, ${flat[1]} iterations, stationarity ${flat[2].toExponential(2)}, ${ms.toFixed(0)} ms`;
  }), 0);
}

await init();
$("ext-s").addEventListener("input", drawExtension);
for (const id of ["path-n", "path-s", "path-norm", "path-phi"]) $(id).addEventListener("input", drawPath);
$("max-run").addEventListener("click", runMaximizer);
drawExtension();
drawPath();
runMaximizer();
