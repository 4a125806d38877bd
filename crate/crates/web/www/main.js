import init, { presets, gain_program, analyze } from "./pkg/fxsynth_web.js";

const $ = (id) => document.getElementById(id);

function facts(dl, rows) {
  dl.replaceChildren();
  for (const [k, v] of rows) {
    const dt = document.createElement("dt");
    const dd = document.createElement("dd");
    dt.textContent = k;
    dd.textContent = v;
    dl.append(dt, dd);
  }
}

function showError(dl, message) {
  const dd = document.createElement("dd");
  dd.className = "error";
  dd.textContent = message;
  dl.replaceChildren(dd);
}

const num = (x) => {
  if (x === null || x === undefined) return "-";
  return typeof x === "number" ? x.toPrecision(6) : String(x);
};

function runGain(form) {
  const f = new FormData(form);
  const out = JSON.parse(
    gain_program(
      Number(f.get("coeff")),
      Number(f.get("lo")),
      Number(f.get("hi")),
      Number(f.get("bits")),
      Number(f.get("coeffBits")),
    ),
  );
  if (out.error) {
    showError($("gain-result"), out.error);
    $("gain-code").textContent = "";
    return;
  }
  facts($("gain-result"), [
    ["operation", out.op],
    ["input format", out.input_format],
    ["output format", out.output_format],
    ["certified bound", `${num(out.bound)} (${out.method})`],
    ["exhaustive maximum", num(out.enumerated)],
  ]);
  $("gain-code").textContent = out.c_source;
}

function drawPlot(canvas, series, tau, stride) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.values);
  const peak = Math.max(1e-12, ...all.map(Math.abs));
  const n = Math.max(...series.map((s) => s.values.length));
  const pad = 30;
  const x = (i) => pad + ((w - 2 * pad) * i) / Math.max(1, n - 1);
  const y = (v) => h / 2 - ((h / 2 - pad / 2) * v) / peak;
  ctx.strokeStyle = "#d6d9de";
  ctx.beginPath();
  ctx.moveTo(pad, h / 2);
  ctx.lineTo(w - pad, h / 2);
  ctx.stroke();
  ctx.fillStyle = "#56606b";
  ctx.font = "11px system-ui";
  ctx.fillText(`±${peak.toPrecision(3)}`, 2, 12);
  ctx.fillText(`${(n * stride * tau).toPrecision(3)} s`, w - pad - 20, h - 4);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.values.forEach((v, i) => (i ? ctx.lineTo(x(i), y(v)) : ctx.moveTo(x(i), y(v))));
    ctx.stroke();
  }
}

function runPreset(form) {
  const f = new FormData(form);
  const out = JSON.parse(analyze(f.get("preset"), f.get("gains")));
  if (out.error) {
    showError($("preset-result"), out.error);
    return;
  }
  const r = out.report;
  const m = r.baseline.metrics;
  const rows = [["sampling time", `${r.tau} s, ${r.bits}-bit words`]];
  if (r.mode === "pid") {
    rows.push(
      ["stable", String(m.stable)],
      ["phase / gain margin", `${num(m.phase_margin)} deg / ${num(m.gain_margin)}`],
      ["quantization radius", num(m.radius)],
      ["settling time", `${num(m.settling_time)} s`],
      ["peak deviation", num(m.deviation)],
    );
  } else {
    const rc = m.radius_coeffs || [null, null];
    rows.push(
      ["stable", String(m.stable)],
      ["||S||, ||P||", `${num(m.s_norm)}, ${num(m.p_norm)}`],
      ["output radius", `${num(rc[0])} b(e1) + ${num(rc[1])}`],
      ["cost", num(m.cost)],
    );
  }
  if (out.fault) rows.push(["overflow", out.fault]);
  facts($("preset-result"), rows);
  drawPlot(
    $("plot"),
    [
      { values: out.ideal, color: "#2563eb" },
      { values: out.quantized, color: "#c2410c" },
    ],
    out.tau,
    out.stride,
  );
  $("preset-code").textContent = out.c_source;
}

async function main() {
  await init();
  const list = JSON.parse(presets());
  const select = $("preset-select");
  for (const p of list) {
    const opt = document.createElement("option");
    opt.value = p.name;
    opt.textContent = `${p.name.replaceAll("_", " ")} (${p.mode}, ${p.bits} bits)`;
    select.append(opt);
  }
  const fillGains = () => {
    const p = list.find((q) => q.name === select.value);
    $("gains-input").value = JSON.stringify(p.gains);
  };
  select.addEventListener("change", fillGains);
  fillGains();

  $("gain-form").addEventListener("submit", (e) => {
    e.preventDefault();
    runGain(e.target);
  });
  $("preset-form").addEventListener("submit", (e) => {
    e.preventDefault();
    runPreset(e.target);
  });
  runGain($("gain-form"));
  runPreset($("preset-form"));
}

main();
