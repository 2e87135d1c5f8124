import init, { fieldTrace, distribution, phase } from "./pkg/vacuum_pairs_web.js";

const canvas = document.getElementById("plot");
const ctx = canvas.getContext("2d");
const status = document.getElementById("status");
const config = () => document.getElementById("config").value;

function run(label, f) {
  status.textContent = label + "...";
  setTimeout(() => {
    const start = performance.now();
    try {
      const note = f();
      status.textContent = label + " done in " + ((performance.now() - start) / 1000).toFixed(1) + " s" + (note ? "\n" + note : "");
    } catch (e) {
      status.textContent = "error: " + (e.message || e);
    }
  }, 10);
}

function drawTrace(rows) {
  const n = rows.length / 4;
  const t = (k) => rows[4 * k];
  let emax = 1e-300;
  for (let k = 0; k < n; k++) emax = Math.max(emax, Math.abs(rows[4 * k + 1]), Math.abs(rows[4 * k + 2]));
  const w = canvas.width, h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath(); ctx.moveTo(0, h / 2); ctx.lineTo(w, h / 2); ctx.stroke();
  const x = (k) => (t(k) - t(0)) / (t(n - 1) - t(0)) * w;
  for (const [col, color] of [[1, "#c33"], [2, "#36c"]]) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    for (let k = 0; k < n; k++) {
      const y = h / 2 - 0.45 * h * rows[4 * k + col] / emax;
      k === 0 ? ctx.moveTo(x(k), y) : ctx.lineTo(x(k), y);
    }
    ctx.stroke();
  }
  return "E_x red, E_y blue; t in [" + t(0).toFixed(2) + ", " + t(n - 1).toFixed(2) + "], max |E| " + emax.toExponential(3);
}

function drawGrid(g, color) {
  const nx = g.nx, ny = g.ny, v = g.values;
  const img = ctx.createImageData(nx, ny);
  for (let j = 0; j < ny; j++) {
    for (let i = 0; i < nx; i++) {
      const [r, gr, b] = color(v[j * nx + i]);
      const o = 4 * ((ny - 1 - j) * nx + i);
      img.data[o] = r; img.data[o + 1] = gr; img.data[o + 2] = b; img.data[o + 3] = 255;
    }
  }
  const tmp = document.createElement("canvas");
  tmp.width = nx; tmp.height = ny;
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function hue(phi) {
  const tau = 2 * Math.PI;
  const h = (((phi % tau) + tau) % tau) / tau * 6;
  const x = 1 - Math.abs((h % 2) - 1);
  const rgb = [[1, x, 0], [x, 1, 0], [0, 1, x], [0, x, 1], [x, 0, 1], [1, 0, x]][Math.floor(h) % 6];
  return rgb.map((c) => Math.round(255 * c));
}

function markSingularities(g) {
  const [x0, x1, y0, y1] = g.extent;
  const s = g.singularities;
  const marks = ["+", "o", "?"];
  ctx.font = "14px monospace";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  let count = 0;
  for (let k = 0; k < s.length; k += 4) {
    const x = (s[k] - x0) / (x1 - x0) * canvas.width;
    const y = canvas.height - (s[k + 1] - y0) / (y1 - y0) * canvas.height;
    const label = s[k + 3] === 0 ? (s[k + 2] > 0 ? "+" : "-") : marks[s[k + 3]];
    ctx.fillStyle = "#000";
    ctx.fillText(label, x, y);
    if (s[k + 3] === 0) count += 1;
  }
  return count;
}

await init();

document.getElementById("field").onclick = () => run("field", () => {
  return drawTrace(fieldTrace(config(), 2000));
});

document.getElementById("distribution").onclick = () => run("distribution", () => {
  const g = distribution(config());
  const vmax = Math.max(...g.values, 1e-300);
  drawGrid(g, (v) => { const c = Math.round(255 * Math.sqrt(v / vmax)); return [c, c, c]; });
  return "max f " + vmax.toExponential(3) + " (brightness ~ sqrt f)";
});

document.getElementById("phase").onclick = () => run("phase", () => {
  const g = phase(config());
  drawGrid(g, hue);
  return markSingularities(g) + " vortex cells (+/- charge, o nodal, ? unresolved)";
});
