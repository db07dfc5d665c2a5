// Vanilla-JS glue for the three demo panels. No framework, no build step
// beyond wasm-pack for the module in ./pkg.

import init, {
  corner_trajectory,
  corner_ratio,
  fixed_point_histogram,
  mixed_moment_curve,
} from "./pkg/ubm_wasm.js";

const COL = {
  axis: "#9aa3b2",
  grid: "#eceff4",
  text: "#4a5568",
  series: ["#2664c7", "#c73526", "#1f8a4c", "#9333ea"],
  band: "rgba(38,100,199,0.18)",
};

function frame(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  return ctx;
}

function mapper(canvas, x0, x1, y0, y1, pad = 34) {
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  return {
    x: (v) => pad + ((v - x0) / (x1 - x0)) * w,
    y: (v) => pad + h - ((v - y0) / (y1 - y0)) * h,
    pad,
  };
}

function axes(ctx, canvas, m, x0, x1, y0, y1, xticks = 5, yticks = 5) {
  ctx.strokeStyle = COL.grid;
  ctx.fillStyle = COL.text;
  ctx.font = "11px system-ui";
  ctx.lineWidth = 1;
  for (let i = 0; i <= xticks; i++) {
    const v = x0 + ((x1 - x0) * i) / xticks;
    const x = m.x(v);
    ctx.beginPath(); ctx.moveTo(x, m.y(y0)); ctx.lineTo(x, m.y(y1)); ctx.stroke();
    ctx.fillText(v.toFixed(Math.abs(x1 - x0) < 5 ? 1 : 0), x - 8, canvas.height - 10);
  }
  for (let i = 0; i <= yticks; i++) {
    const v = y0 + ((y1 - y0) * i) / yticks;
    const y = m.y(v);
    ctx.beginPath(); ctx.moveTo(m.x(x0), y); ctx.lineTo(m.x(x1), y); ctx.stroke();
    ctx.fillText(v.toFixed(2), 2, y + 3);
  }
  ctx.strokeStyle = COL.axis;
  ctx.strokeRect(m.x(x0), m.y(y1), m.x(x1) - m.x(x0), m.y(y0) - m.y(y1));
}

function polyline(ctx, m, pts, color, width = 1.6, dash = []) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dash);
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(m.x(x), m.y(y)) : ctx.moveTo(m.x(x), m.y(y))));
  ctx.stroke();
  ctx.setLineDash([]);
}

// ---------------------------------------------------------------- corner ---

let cornerSeed = 1n;

function drawCorner() {
  const n = +document.getElementById("c-n").value;
  const alpha = Math.pow(10, +document.getElementById("c-alpha").value);
  const tmax = +document.getElementById("c-tmax").value;
  document.getElementById("c-n-v").textContent = n;
  document.getElementById("c-alpha-v").textContent = alpha.toPrecision(3);
  document.getElementById("c-tmax-v").textContent = tmax;

  const points = 160;
  const data = corner_trajectory(n, alpha, tmax, points, cornerSeed);
  const stride = 11;
  const rows = data.length / stride;

  // Left: entry trajectories in the complex plane.
  const plane = document.getElementById("c-plane");
  const ctx = frame(plane);
  let lim = 0.3;
  for (let r = 0; r < rows; r++)
    for (let e = 0; e < 4; e++) {
      lim = Math.max(lim, Math.abs(data[r * stride + 1 + 2 * e]), Math.abs(data[r * stride + 2 + 2 * e]));
    }
  lim *= 1.1;
  const m1 = mapper(plane, -lim, lim, -lim, lim);
  axes(ctx, plane, m1, -lim, lim, -lim, lim, 4, 4);
  const names = ["M11", "M12", "M21", "M22"];
  for (let e = 0; e < 4; e++) {
    const pts = [];
    for (let r = 0; r < rows; r++) {
      pts.push([data[r * stride + 1 + 2 * e], data[r * stride + 2 + 2 * e]]);
    }
    polyline(ctx, m1, pts, COL.series[e], 1.25);
    const last = pts[pts.length - 1];
    ctx.fillStyle = COL.series[e];
    ctx.beginPath();
    ctx.arc(m1.x(last[0]), m1.y(last[1]), 3, 0, 7);
    ctx.fill();
    ctx.fillText(names[e], m1.x(last[0]) + 5, m1.y(last[1]) - 4);
  }

  // Right: Hermitian share along the path vs the limit curve.
  const split = document.getElementById("c-split");
  const ctx2 = frame(split);
  const m2 = mapper(split, 0, tmax, 0, 1);
  axes(ctx2, split, m2, 0, tmax, 0, 1);
  const theory = [];
  const runs = [];
  for (let r = 1; r < rows; r++) {
    const t = data[r * stride];
    const h2 = data[r * stride + 9];
    const s2 = data[r * stride + 10];
    runs.push([t, h2 / Math.max(h2 + s2, 1e-12)]);
  }
  for (let i = 0; i <= 100; i++) {
    const t = (tmax * i) / 100;
    const r = corner_ratio(alpha, t);
    theory.push([t, r / (1 + r)]); // Hermitian share h/(h+s) = r/(1+r)
  }
  polyline(ctx2, m2, theory, "#111827", 2.0, [6, 4]);
  polyline(ctx2, m2, runs, COL.series[0], 1.4);
  ctx2.fillStyle = COL.text;
  ctx2.fillText("dashed: limiting Hermitian share   solid: this path", m2.pad, 16);
}

// --------------------------------------------------------------- poisson ---

let poissonSeed = 7n;

function drawPoisson() {
  const n = +document.getElementById("p-n").value;
  const samples = +document.getElementById("p-samples").value;
  document.getElementById("p-n-v").textContent = n;
  const bins = 9;
  const data = fixed_point_histogram(n, samples, bins, poissonSeed);
  const emp = data.slice(0, bins + 1);
  const pmf = data.slice(bins + 1, 2 * (bins + 1));
  const tv = data[2 * (bins + 1)];
  document.getElementById("p-tv").textContent =
    `total-variation distance to Poisson(1): ${tv.toFixed(4)} over ${samples} permutations`;

  const canvas = document.getElementById("p-hist");
  const ctx = frame(canvas);
  const ymax = Math.max(...emp, ...pmf) * 1.15;
  const m = mapper(canvas, -0.5, bins + 0.5, 0, ymax);
  axes(ctx, canvas, m, -0.5, bins + 0.5, 0, ymax, bins + 1, 4);
  const bw = (m.x(1) - m.x(0)) * 0.34;
  for (let j = 0; j <= bins; j++) {
    ctx.fillStyle = COL.series[0];
    ctx.fillRect(m.x(j) - bw, m.y(emp[j]), bw, m.y(0) - m.y(emp[j]));
    ctx.fillStyle = COL.series[1];
    ctx.fillRect(m.x(j), m.y(pmf[j]), bw, m.y(0) - m.y(pmf[j]));
  }
  ctx.fillStyle = COL.text;
  ctx.fillText("blue: empirical fixed-point frequencies   red: Poisson(1) mass (last bin = tail)", m.pad, 16);
}

// ---------------------------------------------------------------- moment ---

let momentSeed = 3n;

function drawMoment() {
  const n = +document.getElementById("m-n").value;
  const paths = +document.getElementById("m-paths").value;
  document.getElementById("m-n-v").textContent = n;
  const tmax = 2.5;
  const points = 24;
  const data = mixed_moment_curve(n, tmax, points, paths, momentSeed);
  const rows = data.length / 4;
  const canvas = document.getElementById("m-curve");
  const ctx = frame(canvas);
  let lo = 0, hi = 1;
  for (let r = 0; r < rows; r++) {
    hi = Math.max(hi, data[r * 4 + 1], data[r * 4 + 2] + 2 * data[r * 4 + 3]);
    lo = Math.min(lo, data[r * 4 + 1], data[r * 4 + 2] - 2 * data[r * 4 + 3]);
  }
  const m = mapper(canvas, 0, tmax, lo, hi * 1.05);
  axes(ctx, canvas, m, 0, tmax, lo, hi * 1.05);

  // +-2 SE band around the Monte Carlo mean.
  ctx.fillStyle = COL.band;
  ctx.beginPath();
  for (let r = 0; r < rows; r++) {
    const x = m.x(data[r * 4]);
    const y = m.y(data[r * 4 + 2] + 2 * data[r * 4 + 3]);
    r ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
  }
  for (let r = rows - 1; r >= 0; r--) {
    ctx.lineTo(m.x(data[r * 4]), m.y(data[r * 4 + 2] - 2 * data[r * 4 + 3]));
  }
  ctx.closePath();
  ctx.fill();

  const exact = [], mc = [];
  for (let r = 0; r < rows; r++) {
    exact.push([data[r * 4], data[r * 4 + 1]]);
    mc.push([data[r * 4], data[r * 4 + 2]]);
  }
  polyline(ctx, m, exact, "#111827", 2.0, [6, 4]);
  polyline(ctx, m, mc, COL.series[0], 1.6);
  ctx.fillStyle = COL.text;
  ctx.fillText("dashed: closed form   solid: Monte Carlo mean with 2 SE band", m.pad, 16);
}

// ------------------------------------------------------------------ init ---

await init();
document.getElementById("loading").hidden = true;
for (const id of ["corner-section", "poisson-section", "moment-section"]) {
  document.getElementById(id).hidden = false;
}

for (const id of ["c-n", "c-alpha", "c-tmax"]) {
  document.getElementById(id).addEventListener("input", drawCorner);
}
document.getElementById("c-reroll").addEventListener("click", () => {
  cornerSeed += 1n;
  drawCorner();
});
for (const id of ["p-n", "p-samples"]) {
  document.getElementById(id).addEventListener("input", drawPoisson);
}
document.getElementById("p-reroll").addEventListener("click", () => {
  poissonSeed += 1n;
  drawPoisson();
});
for (const id of ["m-n", "m-paths"]) {
  document.getElementById(id).addEventListener("input", drawMoment);
}
document.getElementById("m-reroll").addEventListener("click", () => {
  momentSeed += 1n;
  drawMoment();
});

drawCorner();
drawPoisson();
drawMoment();
