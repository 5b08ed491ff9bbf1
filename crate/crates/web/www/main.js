import init, { describe_instance, simulate, perturbations } from "./pkg/colts_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function status(msg) {
  $("status").textContent = msg ?? "";
}

function guarded(f) {
  return () => {
    status();
    try {
      f();
    } catch (e) {
      status(String(e.message ?? e));
    }
  };
}

// maps [-h, h]^2 onto the canvas
function frame(canvas, h) {
  const s = canvas.width / (2 * h);
  return {
    x: (v) => (v + h) * s,
    y: (v) => canvas.height - (v + h) * s,
  };
}

// the line {a : row . a = level} clipped to the square [-h, h]^2
function clip(row, level, h) {
  const [p, q] = row;
  const pts = [];
  if (Math.abs(q) > 1e-12) {
    for (const x of [-h, h]) {
      const y = (level - p * x) / q;
      if (Math.abs(y) <= h) pts.push([x, y]);
    }
  }
  if (Math.abs(p) > 1e-12) {
    for (const y of [-h, h]) {
      const x = (level - q * y) / p;
      if (Math.abs(x) <= h) pts.push([x, y]);
    }
  }
  return pts.length >= 2 ? [pts[0], pts[1]] : null;
}

function drawLines(ctx, f, rows, levels, h, color, width) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  rows.forEach((row, i) => {
    const seg = clip(row, levels[i], h);
    if (!seg) return;
    ctx.beginPath();
    ctx.moveTo(f.x(seg[0][0]), f.y(seg[0][1]));
    ctx.lineTo(f.x(seg[1][0]), f.y(seg[1][1]));
    ctx.stroke();
  });
}

function dot(ctx, f, p, color, r = 4) {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(f.x(p[0]), f.y(p[1]), r, 0, 2 * Math.PI);
  ctx.fill();
}

function drawGeometry() {
  const m = num("m");
  const inst = JSON.parse(describe_instance("polygon", m, 0n));
  const view = JSON.parse(perturbations(m, num("gamma"), $("design").value, num("warmup"), num("draws"), BigInt(num("seed"))));
  const canvas = $("geometry");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const h = 0.3;
  const f = frame(canvas, h);
  ctx.globalAlpha = 0.35;
  for (const d of view.draws) drawLines(ctx, f, d.phi_tilde, view.alpha, h, "#58a", 1);
  ctx.globalAlpha = 1;
  drawLines(ctx, f, inst.phi, inst.alpha, h, "#222", 2);
  let local = 0;
  for (const d of view.draws) {
    if (d.local_optimism) local += 1;
    if (d.b) dot(ctx, f, d.b, d.local_optimism ? "#2a2" : "#d33", 3);
  }
  dot(ctx, f, inst.a_star, "#000", 5);
  $("geometry-note").textContent =
    `${view.instance} after ${view.warmup} rounds: omega = ${view.omega.toFixed(3)}, ` +
    `${local}/${view.draws.length} draws locally optimistic. Axes span [-${h}, ${h}]; black dot is a*.`;
}

function drawTrace() {
  const v = JSON.parse(
    simulate($("instance").value, num("m"), $("algorithm").value, num("gamma"), $("design").value,
      num("horizon"), BigInt(num("seed")), $("known").checked),
  );
  const canvas = $("trace");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pad = 40;
  const top = Math.max(1e-9, ...v.cum_regret, ...v.cum_risk);
  const sx = (t) => pad + ((canvas.width - 2 * pad) * t) / v.horizon;
  const sy = (y) => canvas.height - pad - ((canvas.height - 2 * pad) * y) / top;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.fillText(top.toFixed(1), 4, pad + 4);
  ctx.fillText("0", 4, canvas.height - pad);
  ctx.fillText(String(v.horizon), canvas.width - pad - 20, canvas.height - pad + 16);
  for (const [ys, color] of [[v.cum_regret, "#36c"], [v.cum_risk, "#c63"]]) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    v.t.forEach((t, i) => (i ? ctx.lineTo(sx(t), sy(ys[i])) : ctx.moveTo(sx(t), sy(ys[i]))));
    ctx.stroke();
  }
  const s = v.steps;
  $("trace-note").textContent =
    `${v.algorithm} on ${v.instance}: R_T = ${v.regret.toFixed(2)}, S_T = ${v.risk.toFixed(2)} ` +
    `(rounds: ${s.learn} learning, ${s.gamma0} margin estimation, ${s.explore} exploration, ` +
    `${s.fallback} fallback, ${s.repeat} repeated)`;
}

await init();
$("draw").addEventListener("click", guarded(drawGeometry));
$("run").addEventListener("click", guarded(drawTrace));
guarded(drawGeometry)();
guarded(drawTrace)();
