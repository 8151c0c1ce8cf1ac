import init, { compare_models, rnn_curves, threshold_sweep } from "./pkg/heartrisk_wasm.js";

const $ = (id) => document.getElementById(id);
let csv = "";

const num = (id) => Number($(id).value);
const fmt = (v) => (v === null ? "undefined" : v.toFixed(4));

function guard(out, f) {
  try {
    f();
  } catch (e) {
    out.innerHTML = `<p class="error">${e.message ?? e}</p>`;
  }
}

$("file").addEventListener("change", async (ev) => {
  const file = ev.target.files[0];
  csv = file ? await file.text() : "";
  $("source").textContent = file ? file.name : "generated data";
});

$("run-compare").addEventListener("click", () => {
  const out = $("compare-out");
  guard(out, () => {
    const res = JSON.parse(compare_models(csv, num("synth-n"), num("synth-seed"), num("seed"), num("test-fraction"), $("smote").checked));
    const rows = res.rows
      .map((r) => `<tr><td>${r.model_id}</td><td>${fmt(r.accuracy)}</td><td>${fmt(r.precision)}</td><td>${fmt(r.recall)}</td><td>${fmt(r.f1)}</td></tr>`)
      .join("");
    out.innerHTML = `<table><tr><th>Algorithm</th><th>Accuracy</th><th>Precision</th><th>Recall</th><th>F1</th></tr>${rows}</table>
      <p class="note">${res.train_rows} training rows, ${res.test_rows} test rows. F1 is derived from precision and recall.</p>`;
  });
});

function plot(canvas, series, { xs, yLabel, yMax }) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.ys);
  const top = yMax ?? Math.max(...all) * 1.05;
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - (y / top) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(top.toFixed(2), 4, pad + 4);
  ctx.fillText("0", 4, h - pad);
  ctx.fillText(String(x0), pad, h - pad + 14);
  ctx.fillText(String(x1), w - pad - 20, h - pad + 14);
  ctx.fillText(yLabel, pad + 4, pad - 8);

  series.forEach((s, i) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.ys.forEach((y, j) => (j ? ctx.lineTo(px(xs[j]), py(y)) : ctx.moveTo(px(xs[j]), py(y))));
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.name, w - pad - 110, pad + 14 * i);
  });
}

$("run-curves").addEventListener("click", () => {
  const out = $("curves-out");
  guard(out, () => {
    const res = JSON.parse(rnn_curves(csv, num("synth-n"), num("synth-seed"), num("seed"), num("hidden"), num("lr"), num("epochs")));
    const xs = res.epochs.map((e) => e.epoch);
    plot($("curves"), [
      { name: "training loss", color: "#1f77b4", ys: res.epochs.map((e) => e.train_loss) },
      { name: "validation loss", color: "#d62728", ys: res.epochs.map((e) => e.val_loss) },
    ], { xs, yLabel: "loss per epoch" });
    out.innerHTML = `<p>stopped after ${res.stopped_epoch} epochs, best epoch ${res.best_epoch}, test accuracy ${fmt(res.test.accuracy)}</p>`;
  });
});

$("run-sweep").addEventListener("click", () => {
  const canvas = $("sweep");
  guard(canvas.parentElement.querySelector(".note"), () => {
    const res = JSON.parse(threshold_sweep(csv, num("synth-n"), num("synth-seed"), num("seed"), $("algo").value, 19));
    const xs = res.map((r) => r.threshold);
    const pick = (k) => res.map((r) => r[k] ?? 0);
    plot(canvas, [
      { name: "accuracy", color: "#2ca02c", ys: pick("accuracy") },
      { name: "precision", color: "#ff7f0e", ys: pick("precision") },
      { name: "recall", color: "#9467bd", ys: pick("recall") },
    ], { xs, yLabel: "metric vs threshold", yMax: 1 });
  });
});

await init();
$("run-compare").click();
