// Build the package first: wasm-pack build crates/web --target web --out-dir www/pkg
import init, { Demo } from "./pkg/stresslrp_web.js";

const $ = (id) => document.getElementById(id);
const REGIONS = ["stressed vowel", "stressed other", "unstressed vowel", "unstressed other", "stressed syllable", "unstressed syllable"];
let demo = null;

function status(msg) {
  $("status").textContent = msg;
}

// Row 0 of the image is the highest frequency bin.
function paint(canvas, values, bins, frames, color) {
  canvas.width = frames;
  canvas.height = bins;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(frames, bins);
  let lo = Infinity, hi = -Infinity;
  for (const v of values) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  for (let b = 0; b < bins; b++) {
    for (let f = 0; f < frames; f++) {
      const [r, g, bl] = color(values[b * frames + f], lo, hi);
      const i = 4 * ((bins - 1 - b) * frames + f);
      img.data.set([r, g, bl, 255], i);
    }
  }
  ctx.putImageData(img, 0, 0);
  return ctx;
}

const gray = (v, lo, hi) => {
  const t = hi > lo ? Math.round(255 * (v - lo) / (hi - lo)) : 0;
  return [t, t, t];
};

// Symmetric around zero: red positive, blue negative.
const diverging = (v, lo, hi) => {
  const m = Math.max(Math.abs(lo), Math.abs(hi)) || 1;
  const t = Math.round(255 * Math.min(1, Math.abs(v) / m));
  return v >= 0 ? [255, 255 - t, 255 - t] : [255 - t, 255 - t, 255];
};

function showSpectrogram() {
  if (!demo) return;
  const i = Number($("token").value);
  const bins = demo.n_bins(), frames = demo.n_frames();
  const ctx = paint($("spec"), demo.spectrogram(i, $("aug").value), bins, frames, gray);
  for (const [a, b, stressed] of JSON.parse(demo.vowels(i))) {
    ctx.strokeStyle = stressed ? "#e22" : "#2a2";
    ctx.strokeRect(Math.floor(a) + 0.5, 0.5, Math.max(1, Math.ceil(b) - Math.floor(a) - 1), bins - 1);
  }
}

function showRelevance() {
  const i = Number($("token").value);
  const bins = demo.n_bins(), frames = demo.n_frames();
  const out = demo.explain(i, $("rule").value);
  const n = bins * frames;
  paint($("rel"), out.subarray(0, n), bins, frames, diverging);
  const mu = out.subarray(n, n + 6);
  const predicted = out[n + 6] === 0 ? "initial" : "final";
  $("mu").innerHTML = "<tr><th>region</th><th>&mu;</th></tr>" +
    REGIONS.map((r, k) => `<tr><td>${r}</td><td>${mu[k].toFixed(3)}</td></tr>`).join("") +
    `<tr><td>predicted</td><td>${predicted}</td></tr>`;
}

function synth() {
  demo = new Demo(Number($("seed").value), Number($("pairs").value));
  $("token").innerHTML = "";
  for (let i = 0; i < demo.len(); i++) {
    $("token").add(new Option(demo.label(i), i));
  }
  $("trainlog").textContent = "";
  $("mu").innerHTML = "";
  $("rel").getContext("2d").clearRect(0, 0, $("rel").width, $("rel").height);
  showSpectrogram();
  status(`${demo.len()} tokens`);
}

function guarded(f) {
  return () => {
    try { f(); } catch (e) { status(`error: ${e.message ?? e}`); }
  };
}

await init();
$("synth").onclick = guarded(synth);
$("aug").onchange = guarded(showSpectrogram);
$("token").onchange = guarded(() => { showSpectrogram(); if ($("mu").innerHTML) showRelevance(); });
$("rule").onchange = guarded(() => { if ($("mu").innerHTML) showRelevance(); });
$("train").onclick = guarded(() => {
  status("training…");
  // Let the status paint before the blocking call.
  setTimeout(guarded(() => {
    const out = demo.train(Number($("epochs").value));
    const acc = out[out.length - 1];
    const losses = Array.from(out.subarray(0, out.length - 1), (l) => l.toFixed(3)).join(" → ");
    $("trainlog").textContent = `loss ${losses}; held-out accuracy ${(100 * acc).toFixed(0)}%`;
    showRelevance();
    status("trained");
  }), 20);
});
guarded(synth)();
