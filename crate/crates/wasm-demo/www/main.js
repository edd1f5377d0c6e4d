import init, { fringe, learner_trajectory, bb84_sweep } from "./pkg/qkd_wasm_demo.js";

const KINDS = ["none", "bit-flip", "phase-flip", "bit-phase-flip", "depolarizing", "amplitude-damping", "phase-damping"];
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const PAD = 36;

const $ = (id) => document.getElementById(id);

function fillKinds(id, skipNone) {
  for (const k of KINDS) {
    if (skipNone && k === "none") continue;
    const o = document.createElement("option");
    o.textContent = k;
    $(id).append(o);
  }
}

function plot(canvas, series, xRange, yRange, xLabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  const sx = (x) => PAD + (x - xRange[0]) / (xRange[1] - xRange[0]) * (w - 2 * PAD);
  const sy = (y) => h - PAD - (y - yRange[0]) / (yRange[1] - yRange[0]) * (h - 2 * PAD);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(PAD, PAD, w - 2 * PAD, h - 2 * PAD);
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.fillText(xRange[0].toFixed(2), PAD, h - PAD + 14);
  ctx.fillText(xRange[1].toFixed(2), w - PAD - 24, h - PAD + 14);
  ctx.fillText(yRange[1].toFixed(2), 2, PAD + 4);
  ctx.fillText(yRange[0].toFixed(2), 2, h - PAD);
  ctx.fillText(xLabel, w / 2 - 20, h - 6);
  series.forEach((s, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    s.xs.forEach((x, j) => {
      const y = s.ys[j];
      if (j === 0) ctx.moveTo(sx(x), sy(y)); else ctx.lineTo(sx(x), sy(y));
    });
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(s.name, w - PAD - 140, PAD + 16 + 14 * i);
  });
}

function drawFringe() {
  const kind = $("f-kind").value;
  const strength = Number($("f-strength").value);
  $("f-strength-v").textContent = strength.toFixed(2);
  const f = JSON.parse(fringe(kind, strength, 181));
  plot($("f-plot"), [
    { name: "P(0)", xs: f.delta, ys: f.p0 },
    { name: "P(1)", xs: f.delta, ys: f.p1 },
  ], [0, 2 * Math.PI], [0, 1], "gap");
}

function runLearner() {
  const theta1 = Number($("l-theta").value);
  const run = JSON.parse(learner_trajectory(
    $("l-version").value, Number($("l-bit").value), theta1,
    $("l-kind").value, Number($("l-strength").value), BigInt($("l-seed").value),
  ));
  const recs = run.episode_log.records;
  const ep = recs.map((r) => r.episode);
  const lo = Math.min(0, ...recs.map((r) => r.n1));
  const hi = Math.max(Math.PI, ...recs.map((r) => r.n3));
  plot($("l-plot"), [
    { name: "n1", xs: ep, ys: recs.map((r) => r.n1) },
    { name: "n3", xs: ep, ys: recs.map((r) => r.n3) },
    { name: "theta2", xs: ep, ys: recs.map((r) => r.theta2) },
    { name: "theta1", xs: [ep[0], ep[ep.length - 1]], ys: [theta1, theta1] },
  ], [ep[0], Math.max(ep[ep.length - 1], ep[0] + 1)], [lo, hi], "episode");
  $("l-summary").textContent =
    `theta2 = ${run.theta2_final.toFixed(4)}, decoded bit ${run.decoded_bit}, ` +
    `${run.converged ? "converged" : "not converged"} after ${recs.length} episodes`;
}

function runSweep() {
  const pts = JSON.parse(bb84_sweep($("s-kind").value, 20, Number($("s-bits").value), $("s-eve").checked, 7n));
  const xs = pts.map((p) => p.strength);
  plot($("s-plot"), [
    { name: "sifted key", xs, ys: pts.map((p) => p.accuracy_key ?? 0.5) },
    { name: "all positions", xs, ys: pts.map((p) => p.accuracy_raw) },
  ], [0, 1], [0, 1], "strength");
}

function guard(fn) {
  return () => {
    try { fn(); } catch (e) { alert(e.message ?? e); }
  };
}

await init();
fillKinds("f-kind", false);
fillKinds("l-kind", false);
fillKinds("s-kind", true);
$("f-kind").addEventListener("change", guard(drawFringe));
$("f-strength").addEventListener("input", guard(drawFringe));
$("l-run").addEventListener("click", guard(runLearner));
$("s-run").addEventListener("click", guard(runSweep));
drawFringe();
runLearner();
runSweep();
