import init, { Demo, growth_curve, manufactured_check, presets } from "./pkg/tqg_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

let demo = null;
let running = false;

function resetDemo() {
  try {
    demo = new Demo(Math.round(num("sim-n")), num("sim-alpha"), num("sim-dt"), $("sim-preset").value);
    $("status").textContent = "";
    draw();
  } catch (e) {
    demo = null;
    $("status").textContent = `setup failed: ${e.message ?? e}`;
  }
}

function draw() {
  const canvas = $("sim-canvas");
  const w = canvas.width;
  const rgba = demo.render($("sim-field").value, w);
  canvas.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), w, w), 0, 0);
  $("sim-info").textContent = `t      = ${demo.time().toFixed(4)}\nenergy = ${demo.energy().toExponential(5)}`;
}

function tick() {
  if (!running || !demo) return;
  try {
    demo.step(2);
    draw();
    requestAnimationFrame(tick);
  } catch (e) {
    running = false;
    $("sim-toggle").textContent = "start";
    $("status").textContent = `step failed: ${e.message ?? e}`;
  }
}

const COLORS = ["#1b6ca8", "#d1495b", "#edae49", "#00798c", "#6b4e9b", "#333"];

function drawDispersion() {
  const canvas = $("d-canvas");
  const ctx = canvas.getContext("2d");
  const alphas = $("d-alphas").value.split(",").map((s) => parseFloat(s)).filter((a) => Number.isFinite(a));
  const [u, beta, b, h] = ["d-u", "d-beta", "d-b", "d-h"].map(num);
  const kMax = 10;
  let curves;
  try {
    curves = alphas.map((a) => growth_curve(a, u, beta, b, h, kMax, 400));
  } catch (e) {
    $("d-legend").textContent = `error: ${e.message ?? e}`;
    return;
  }
  let gMax = 0;
  for (const c of curves) for (let i = 1; i < c.length; i += 2) gMax = Math.max(gMax, c[i]);
  gMax = gMax > 0 ? gMax * 1.1 : 1;
  const pad = 36, W = canvas.width - 2 * pad, H = canvas.height - 2 * pad;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, W, H);
  ctx.fillStyle = "#444";
  ctx.fillText("|k|", pad + W - 12, pad + H + 24);
  ctx.fillText(`growth rate (max ${(gMax / 1.1).toFixed(3)})`, pad, pad - 10);
  for (let t = 0; t <= kMax; t += 2) ctx.fillText(String(t), pad + (t / kMax) * W - 3, pad + H + 14);
  const legend = [];
  curves.forEach((c, j) => {
    ctx.strokeStyle = COLORS[j % COLORS.length];
    ctx.beginPath();
    let best = [0, 0];
    for (let i = 0; i < c.length; i += 2) {
      const x = pad + (c[i] / kMax) * W, y = pad + H - (c[i + 1] / gMax) * H;
      i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
      if (c[i + 1] > best[1]) best = [c[i], c[i + 1]];
    }
    ctx.stroke();
    const peak = best[1] > 0 ? `|k|max ≈ ${best[0].toFixed(2)}` : "stable";
    legend.push(`<span style="color:${COLORS[j % COLORS.length]}">α = ${alphas[j]}: ${peak}</span>`);
  });
  $("d-legend").innerHTML = legend.join(" &nbsp; ");
}

function runCheck() {
  const table = $("m-table");
  try {
    const t = manufactured_check(parseInt($("m-degree").value, 10), num("m-alpha"));
    let html = "<tr><th>n</th><th>L² error</th><th>rate</th></tr>";
    for (let i = 0; i < t.length; i += 3) {
      const rate = Number.isNaN(t[i + 2]) ? "" : t[i + 2].toFixed(3);
      html += `<tr><td>${t[i]}</td><td>${t[i + 1].toExponential(3)}</td><td>${rate}</td></tr>`;
    }
    table.innerHTML = html;
  } catch (e) {
    table.innerHTML = `<tr><td>error: ${e.message ?? e}</td></tr>`;
  }
}

await init();
for (const p of presets().split(",")) $("sim-preset").add(new Option(p, p));
$("sim-reset").onclick = resetDemo;
$("sim-field").onchange = () => demo && draw();
$("sim-toggle").onclick = () => {
  running = !running;
  $("sim-toggle").textContent = running ? "pause" : "start";
  if (running) requestAnimationFrame(tick);
};
for (const id of ["d-u", "d-beta", "d-b", "d-h", "d-alphas"]) $(id).oninput = drawDispersion;
$("m-run").onclick = runCheck;
resetDemo();
drawDispersion();
