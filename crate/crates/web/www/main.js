import init, { scoreSentiment, garchVarianceCurve, arimaForecast } from "./pkg/oilcast_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, series) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.points.map((p) => p[1]));
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  if (all.length === 0) return;
  let lo = Math.min(...all), hi = Math.max(...all);
  if (hi === lo) { hi += 1; lo -= 1; }
  const x0 = Math.min(...xs), x1 = Math.max(...xs) || 1;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - lo) / (hi - lo)) * (h - 2 * pad);
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  ctx.fillText(hi.toFixed(3), 2, pad - 4);
  ctx.fillText(lo.toFixed(3), 2, h - pad + 12);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
  }
}

function showSentiment() {
  const [neg, neu, pos, compound] = scoreSentiment($("text").value);
  const row = (name, v, color) =>
    `<tr><td>${name}</td><td>${v.toFixed(4)}</td><td><span class="bar" style="width:${Math.abs(v) * 200}px;background:${color}"></span></td></tr>`;
  $("sent").innerHTML =
    row("neg", neg, "#c44") + row("neu", neu, "#999") + row("pos", pos, "#4a4") +
    row("compound", compound, compound < 0 ? "#c44" : "#4a4");
}

function showGarch() {
  try {
    const a0 = num("a0"), a1 = num("a1"), b1 = num("b1");
    const v = garchVarianceCurve(a0, new Float64Array([a1]), new Float64Array([b1]), num("res"), num("sig"), num("gh"));
    const pers = a1 + b1;
    $("gmsg").className = "";
    $("gmsg").textContent = pers < 1
      ? `persistence ${pers.toFixed(3)}, unconditional variance ${(a0 / (1 - pers)).toFixed(4)}`
      : `persistence ${pers.toFixed(3)}: not covariance stationary`;
    plot($("gplot"), [{ color: "#36c", points: Array.from(v, (y, i) => [i + 1, y]) }]);
  } catch (e) {
    $("gmsg").className = "err";
    $("gmsg").textContent = e.message;
  }
}

function sampleSeries(n = 250) {
  let x = 60, dx = 0;
  const out = [];
  for (let i = 0; i < n; i++) {
    const z = Math.sqrt(-2 * Math.log(Math.random() || 1e-12)) * Math.cos(2 * Math.PI * Math.random());
    dx = 0.4 * dx + 0.8 * z;
    x = Math.max(5, x + dx);
    out.push(x.toFixed(2));
  }
  return out.join(", ");
}

function showArima() {
  const msg = $("amsg");
  try {
    const text = $("series").value;
    const p = $("auto").checked ? -1 : num("p");
    const fc = JSON.parse(arimaForecast(text, p, num("d"), num("q"), num("ah")));
    const hist = text.split(/[\s,;]+/).filter(Boolean).map(Number);
    const n = hist.length;
    const fmt = (a) => "[" + a.map((c) => c.toFixed(3)).join(", ") + "]";
    msg.className = "";
    msg.textContent = `ARIMA(${fc.order.join(",")}) c=${fc.intercept.toFixed(4)} ar=${fmt(fc.ar)} ma=${fmt(fc.ma)} σ²=${fc.sigma2.toFixed(4)} AIC=${fc.aic.toFixed(1)}`;
    plot($("aplot"), [
      { color: "#333", points: hist.map((y, i) => [i, y]) },
      { color: "#d60", points: [[n - 1, hist[n - 1]], ...fc.forecast.map((y, i) => [n + i, y])] },
    ]);
  } catch (e) {
    msg.className = "err";
    msg.textContent = e.message;
  }
}

await init();
$("status").textContent = "";
$("text").addEventListener("input", showSentiment);
for (const id of ["a0", "a1", "b1", "res", "sig", "gh"]) $(id).addEventListener("input", showGarch);
$("fit").addEventListener("click", showArima);
$("sample").addEventListener("click", () => { $("series").value = sampleSeries(); showArima(); });
$("series").value = sampleSeries();
showSentiment();
showGarch();
showArima();
