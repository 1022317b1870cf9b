import init, { recover_spectrum, landscape, radar_image } from "./pkg/sparsebayes_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function lines(canvas, xs, series, yLo, yHi) {
  const g = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  g.clearRect(0, 0, w, h);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const px = (x) => ((x - x0) / (x1 - x0 || 1)) * (w - 20) + 10;
  const py = (y) => h - 10 - ((Math.min(Math.max(y, yLo), yHi) - yLo) / (yHi - yLo || 1)) * (h - 20);
  for (const { ys, color } of series) {
    g.strokeStyle = color;
    g.beginPath();
    ys.forEach((y, i) => (i ? g.lineTo(px(xs[i]), py(y)) : g.moveTo(px(xs[i]), py(y))));
    g.stroke();
  }
}

function show(infoId, fn) {
  try {
    fn();
  } catch (e) {
    $(infoId).textContent = "error: " + e;
  }
}

function runSpectrum() {
  show("sp-info", () => {
    const r = JSON.parse(recover_spectrum($("sp-array").value, num("sp-m"), num("sp-noise"), num("sp-seed"), $("sp-method").value));
    const bins = r.db.map((_, i) => i);
    lines($("sp-plot"), bins, [{ ys: r.truth_db, color: "#bbb" }, { ys: r.db, color: "#c22" }], -60, 0);
    $("sp-info").textContent =
      `${r.method}: ${r.iterations} iterations (${r.termination}), support ${JSON.stringify(r.support)}, ` +
      `final sigma ${r.sigma_n.at(-1)?.toFixed(4)}, ${r.elements.length} elements`;
  });
}

function runLandscape() {
  show("ls-info", () => {
    const r = JSON.parse(landscape($("ls-kind").value, num("ls-param")));
    lines($("ls-plot"), r.v, [{ ys: r.penalty, color: "#236" }], Math.min(...r.penalty), Math.max(...r.penalty));
    $("ls-info").textContent = `${r.label}: local minima at v = ${r.minima.map((v) => v.toFixed(3)).join(", ")}`;
  });
}

function runRadar() {
  show("rd-info", () => {
    const r = JSON.parse(radar_image($("rd-method").value, num("rd-p"), num("rd-q"), num("rd-noise"), num("rd-seed")));
    const c = $("rd-plot"), g = c.getContext("2d");
    const cols = r.angle_deg.length, rows = r.rows.length;
    const cw = c.width / cols, rh = c.height / Math.max(rows, 1);
    g.clearRect(0, 0, c.width, c.height);
    r.rows.forEach((row, i) =>
      row.forEach((v, j) => {
        const t = Math.round(255 * Math.max(0, 1 - v / r.floor_db));
        g.fillStyle = `rgb(${t},${t},${t})`;
        g.fillRect(j * cw, i * rh, Math.ceil(cw), Math.ceil(rh));
      }),
    );
    $("rd-info").textContent =
      `${r.method}: rows at ${r.range_m.map((x) => x.toFixed(1)).join(", ")} m; ` +
      `${r.detected}/21 targets found, ${r.spurious} spurious pixels above -30 dB`;
  });
}

await init();
$("sp-run").onclick = runSpectrum;
$("ls-run").onclick = runLandscape;
$("rd-run").onclick = runRadar;
runSpectrum();
runLandscape();
