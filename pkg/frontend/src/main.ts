/** DOM wiring for the plan designer. All math happens on the facade. */

import { FacadeError, health, requestEstimate, requestPlan, requestSample } from "./api.js";
import { estimateTable, planGrid, representativenessView } from "./render.js";
import * as S from "./state.js";
import { boundariesToConfig, specToDoc, type BoundaryRow } from "./validation.js";

const $ = <T extends HTMLElement = HTMLElement>(sel: string): T => {
  const el = document.querySelector(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el as T;
};

const API_BASE =
  typeof location === "undefined"
    ? "http://127.0.0.1:8787"
    : new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8787";

let state = S.initialState();

function populationRef() {
  return state.populationHash !== null
    ? { population_hash: state.populationHash }
    : { population_csv: state.populationCsv ?? "" };
}

// ---------------------------------------------------------------- boundaries
function readBoundaryRows(): BoundaryRow[] {
  return Array.from(document.querySelectorAll<HTMLTableRowElement>("#boundary-rows tr")).map(
    (tr) => ({
      lower: tr.querySelector<HTMLInputElement>(".lower")!.value,
      upper: tr.querySelector<HTMLInputElement>(".upper")!.value,
    }),
  );
}

function renderBoundaryEditor() {
  const tbody = $("#boundary-rows");
  tbody.innerHTML = "";
  state.boundaries.forEach((row, i) => {
    const tr = document.createElement("tr");
    tr.innerHTML = `
      <td>${i + 1}</td>
      <td><input class="lower" value="${row.lower}"></td>
      <td><input class="upper" value="${row.upper}"></td>
      <td><button class="remove" title="remove stratum">×</button></td>`;
    tr.querySelectorAll("input").forEach((input) =>
      input.addEventListener("change", onBoundariesEdited),
    );
    tr.querySelector(".remove")!.addEventListener("click", () => {
      const rows = readBoundaryRows();
      rows.splice(i, 1);
      state = S.editBoundaries(state, rows);
      renderBoundaryEditor();
      renderAll();
    });
    tbody.appendChild(tr);
  });
  const messages = state.boundaryErrors.map((e) => e.message).join("; ");
  $("#boundary-errors").textContent = messages;
}

function onBoundariesEdited() {
  state = S.editBoundaries(
    state,
    readBoundaryRows(),
    $<HTMLInputElement>("#threshold").value,
  );
  $("#boundary-errors").textContent = state.boundaryErrors.map((e) => e.message).join("; ");
  renderAll();
}

// ----------------------------------------------------------------- spec form
function readSpecForm() {
  return {
    mode: $<HTMLSelectElement>("#mode").value as S.PlanDesignerState["spec"]["mode"],
    gI: $<HTMLInputElement>("#g-i").value,
    C: $<HTMLInputElement>("#param-c").value,
    f: $<HTMLInputElement>("#param-f").value,
    gamma: $<HTMLInputElement>("#gamma").value,
    alpha: $<HTMLInputElement>("#alpha").value,
    g: $<HTMLInputElement>("#overall-g").value,
    useFpc: $<HTMLInputElement>("#use-fpc").checked,
  };
}

function onSpecEdited() {
  state = S.editSpec(state, readSpecForm());
  $("#spec-errors").textContent = state.specErrors.map((e) => e.message).join("; ");
  renderAll();
}

// -------------------------------------------------------------------- addons
async function onPopulationFile(file: File) {
  const text = await file.text();
  state = S.setPopulation(state, text, `${file.name}:${file.size}`);
  $("#population-label").textContent = `${file.name} (${text.split("\n").length - 1} rows)`;
  renderAll();
}

// --------------------------------------------------------------------- plan
async function onPlanClicked() {
  const begun = S.beginPlan(state);
  state = begun.state;
  renderAll();
  try {
    const response = await requestPlan(
      API_BASE,
      populationRef(),
      boundariesToConfig(state.boundaries, state.certaintyThreshold),
      specToDoc(state.spec),
    );
    state = S.completePlan(state, begun.seq, response);
  } catch (err) {
    state = S.failPlan(state, begun.seq, describe(err));
  }
  renderAll();
}

async function onRunClicked() {
  const begun = S.beginRun(state);
  state = begun.state;
  renderAll();
  try {
    const strata = boundariesToConfig(state.boundaries, state.certaintyThreshold);
    const spec = specToDoc(state.spec);
    const sample = await requestSample(
      API_BASE, populationRef(), strata, spec, parseInt(state.seed, 10));
    let estimate = null;
    if (state.auditedCsv !== null) {
      estimate = await requestEstimate(
        API_BASE, populationRef(), strata, state.auditedCsv,
        state.sampleStats === null ? null : JSON.parse(state.sampleStats), 0.05);
    }
    state = S.completeRun(state, begun.seq, sample, estimate);
  } catch (err) {
    state = S.failRun(state, begun.seq, describe(err));
  }
  renderAll();
}

function describe(err: unknown): string {
  if (err instanceof FacadeError) return `${err.errorType}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

// ------------------------------------------------------------------- render
function renderPlanPanel() {
  const panel = $("#plan-panel");
  panel.classList.toggle("stale", S.isDirty(state));
  $("#plan-error").textContent = state.planError ?? "";
  const grid = $("#plan-grid");
  if (state.plan === null) {
    grid.innerHTML = "<p class='hint'>no plan yet</p>";
    return;
  }
  const view = planGrid(state.plan);
  const rows = view.rows
    .map(
      (r) => `
      <tr class="${r.flags ? "flagged" : ""}">
        <td>${r.index}</td><td>${r.range}</td><td class="num">${r.count}</td>
        <td class="num">${r.mean}</td><td class="num">${r.variance}</td>
        <td class="num">${r.g_i}</td><td class="num">${r.n_raw}</td>
        <td class="num">${r.n}</td><td class="num">${r.w}</td><td>${r.flags}</td>
      </tr>`,
    )
    .join("");
  grid.innerHTML = `
    <table>
      <thead><tr>
        <th>stratum</th><th>range</th><th>claims</th><th>mean</th><th>variance</th>
        <th>g_i</th><th>n raw</th><th>n_i</th><th>w_i</th><th>notes</th>
      </tr></thead>
      <tbody>${rows}</tbody>
      <tfoot><tr><td>total</td><td></td><td class="num">${view.totalCount}</td>
        <td></td><td></td><td></td><td></td><td class="num">${view.totalN}</td>
        <td></td><td></td></tr></tfoot>
    </table>
    <p>
      predicted alpha <strong>${view.predictedAlpha}</strong> ·
      nominal alpha <strong>${view.nominalAlpha}</strong> ·
      overall precision check
      <span class="badge ${view.repBadge}">${view.repBadge}</span>
      (weighted ratio ${view.repValue})
    </p>
    ${view.warnings.map((w) => `<p class="warning">${w}</p>`).join("")}`;
}

function renderRunPanel() {
  const panel = $("#run-panel");
  panel.classList.toggle("stale", S.runIsStale(state));
  $("#run-error").textContent = state.runError ?? "";
  const repEl = $("#representativeness");
  const estEl = $("#estimates");
  if (state.sample === null) {
    repEl.innerHTML = "<p class='hint'>no sample yet</p>";
  } else {
    const view = representativenessView(state.sample);
    const strata = view.strata
      .map(
        (c) => `<tr><td>${c.index}</td><td class="num">${c.ybar}</td>
          <td class="num">${c.mean}</td><td class="num">${c.absDiff}</td>
          <td class="num">${c.g_i}</td>
          <td><span class="badge ${c.badge}">${c.badge}</span></td></tr>`,
      )
      .join("");
    repEl.innerHTML = `
      <p>
        sample mean <strong>${view.ybarSt}</strong> vs population mean
        <strong>${view.populationMean}</strong>, |difference| ${view.absDiff}
        ${view.zeroDifference ? '<span class="badge pass">zero difference</span>' : ""}
        · threshold ${view.threshold}
        <span class="badge ${view.overallBadge}">${view.overallBadge}</span>
      </p>
      <table>
        <thead><tr><th>stratum</th><th>sample mean</th><th>population mean</th>
          <th>|diff|</th><th>g_i</th><th>within</th></tr></thead>
        <tbody>${strata}</tbody>
      </table>`;
  }
  if (state.estimate === null) {
    estEl.innerHTML = "<p class='hint'>upload audit results to estimate</p>";
  } else {
    const rows = estimateTable(state.estimate)
      .map(
        (r) => `<tr><td>${r.estimator}</td><td class="num">${r.point}</td>
         <td class="num">${r.stderr}</td><td class="num">${r.lcb}</td>
         <td class="num">${r.r_c}</td></tr>`,
      )
      .join("");
    estEl.innerHTML = `
      <table>
        <thead><tr><th>estimator</th><th>total overpayment</th><th>std error</th>
          <th>lower bound</th><th>pooled rate</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>`;
  }
}

function renderAll() {
  $<HTMLButtonElement>("#plan-button").disabled =
    !S.canPlan(state) || state.planInFlightKey !== null;
  $<HTMLButtonElement>("#run-button").disabled = !S.canSample(state) || state.runInFlight;
  $("#run-hint").textContent = S.canSample(state)
    ? state.auditedCsv === null
      ? "sampling only; add audited results to estimate"
      : ""
    : "plan first (with current inputs), then set a seed";
  renderPlanPanel();
  renderRunPanel();
}

// -------------------------------------------------------------------- setup
export function setup(): void {
  state = S.editBoundaries(
    state,
    [
      { lower: "0.01", upper: "199" },
      { lower: "200", upper: "499" },
      { lower: "500", upper: "999" },
      { lower: "1000", upper: "1999" },
      { lower: "2000", upper: "3999" },
      { lower: "4000", upper: "6999" },
    ],
    "7000",
  );
  $<HTMLInputElement>("#threshold").value = state.certaintyThreshold;
  state = S.editSpec(state, readSpecForm());

  $("#population-file").addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    if (input.files?.[0]) void onPopulationFile(input.files[0]);
  });
  $("#audited-file").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const text = input.files?.[0] ? await input.files[0].text() : null;
    state = S.setAudited(state, text, state.sampleStats);
    renderAll();
  });
  $("#sample-stats-file").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const text = input.files?.[0] ? await input.files[0].text() : null;
    state = S.setAudited(state, state.auditedCsv, text);
    renderAll();
  });
  $("#add-boundary").addEventListener("click", () => {
    state = S.editBoundaries(state, [...readBoundaryRows(), { lower: "", upper: "" }]);
    renderBoundaryEditor();
    renderAll();
  });
  $("#threshold").addEventListener("change", onBoundariesEdited);
  for (const id of ["#mode", "#g-i", "#param-c", "#param-f", "#gamma", "#alpha", "#overall-g", "#use-fpc"]) {
    $(id).addEventListener("change", onSpecEdited);
  }
  $("#seed").addEventListener("input", () => {
    state = S.setSeed(state, $<HTMLInputElement>("#seed").value);
    renderAll();
  });
  $("#plan-button").addEventListener("click", () => void onPlanClicked());
  $("#run-button").addEventListener("click", () => void onRunClicked());

  renderBoundaryEditor();
  renderAll();
  void health(API_BASE)
    .then((h) => ($("#facade-status").textContent = `facade ${h.status} (v${h.version})`))
    .catch(() => ($("#facade-status").textContent = `facade unreachable at ${API_BASE}`));
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  setup();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", setup);
}
