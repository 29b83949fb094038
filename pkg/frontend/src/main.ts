/** DOM wiring for the single-page console. All probabilistic values are
 * rendered verbatim from service views via the pure builders in render.ts. */

import { ApiClient, ApiError, SessionView } from "./api";
import {
  answerOptions,
  clearWhatIf,
  commitAnswer,
  previewWhatIf,
  selectType,
  SessionViewModel,
  startModel,
} from "./viewModel";
import { Bar, coarseBars, fineBars, trajectoryStrips } from "./render";

const api = new ApiClient("");
let model: SessionViewModel | null = null;
let inFlight = false;

const el = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

function showError(message: string, retry?: () => void): void {
  el("error-text").textContent = message;
  el<HTMLDivElement>("error-banner").style.display = "block";
  const button = el<HTMLButtonElement>("error-retry");
  button.style.display = retry ? "inline" : "none";
  button.onclick = () => {
    hideError();
    retry?.();
  };
}

function hideError(): void {
  el<HTMLDivElement>("error-banner").style.display = "none";
}

function renderBars(container: HTMLElement, bars: Bar[], overlay: boolean): void {
  container.replaceChildren(
    ...bars.map((bar) => {
      const row = document.createElement("div");
      row.className = "bar-row";
      const label = document.createElement("span");
      label.className = "bar-label";
      label.textContent = bar.label;
      const track = document.createElement("div");
      track.className = "bar-track";
      const fill = document.createElement("div");
      fill.className = overlay ? "bar-fill overlay" : "bar-fill";
      fill.style.width = `${bar.widthPct}%`;
      track.append(fill);
      const value = document.createElement("span");
      value.className = "bar-value";
      value.textContent = String(bar.probability);
      const badge = document.createElement("span");
      badge.className = "badge";
      badge.textContent = bar.ratioBadge;
      row.append(label, track, value, badge);
      return row;
    }),
  );
}

function renderTrajectory(current: SessionViewModel): void {
  const container = el("trajectory");
  container.replaceChildren(
    ...trajectoryStrips(current).map((strip) => {
      const box = document.createElement("div");
      box.className = strip.current ? "strip current" : "strip";
      const title = document.createElement("div");
      title.className = "muted";
      title.textContent = strip.round === 0 ? "prior" : `round ${strip.round}`;
      const mini = document.createElement("div");
      mini.className = "mini";
      for (const bar of strip.bars) {
        const column = document.createElement("div");
        column.style.height = `${bar.widthPct}%`;
        column.title = `${bar.label}: ${bar.probability}`;
        mini.append(column);
      }
      box.append(title, mini);
      return box;
    }),
  );
}

function renderHistory(view: SessionView): void {
  el("history").replaceChildren(
    ...view.history.map((h) => {
      const item = document.createElement("li");
      item.textContent = `type ${h.type_id} → ${h.state}`;
      return item;
    }),
  );
}

function refreshAnswerControls(current: SessionViewModel): void {
  const scheme = current.view.scheme;
  const typeSelect = el<HTMLSelectElement>("type-select");
  if (typeSelect.options.length === 0) {
    for (let t = 1; t <= 6; t += 1) {
      const option = document.createElement("option");
      option.value = String(t);
      option.textContent = String(t);
      typeSelect.append(option);
    }
  }
  typeSelect.value = String(current.selectedType ?? current.view.recommendation);
  const stateSelect = el<HTMLSelectElement>("state-select");
  const options = answerOptions(scheme, Number(typeSelect.value));
  stateSelect.replaceChildren(
    ...options.map((state) => {
      const option = document.createElement("option");
      option.value = state;
      option.textContent = state;
      return option;
    }),
  );
}

function render(): void {
  if (!model) return;
  const displayed = model.whatIfPreview ?? model.view;
  renderBars(el("fine-bars"), fineBars(displayed), model.whatIfPreview !== null);
  renderBars(el("coarse-bars"), coarseBars(displayed), model.whatIfPreview !== null);
  renderTrajectory(model);
  renderHistory(model.view);
  el("recommendation").textContent = String(model.view.recommendation);
  el<HTMLDivElement>("overlay-note").style.display = model.whatIfPreview
    ? "block"
    : "none";
  el<HTMLButtonElement>("cancel-what-if").disabled = model.whatIfPreview === null;
  el<HTMLFieldSetElement>("answer-panel").disabled = false;
  refreshAnswerControls(model);
}

function validateConfig(): { ok: boolean; pcm: number } {
  const pcm = Number(el<HTMLInputElement>("pcm").value);
  const problem =
    Number.isNaN(pcm) || pcm < 0 || pcm > 1 ? "pcm must be in [0, 1]" : "";
  el("config-error").textContent = problem;
  return { ok: problem === "", pcm };
}

async function startSession(): Promise<void> {
  const { ok, pcm } = validateConfig();
  if (!ok) return; // inline validation; no request sent
  try {
    const view = await api.createSession({
      tactic: el<HTMLSelectElement>("tactic").value,
      scheme: el<HTMLSelectElement>("scheme").value,
      pcm,
      priors: el<HTMLSelectElement>("priors").value,
    });
    model = startModel(view);
    hideError();
    render();
  } catch (error) {
    showError(describe(error), startSession);
  }
}

async function submitAnswer(): Promise<void> {
  if (!model || inFlight) return; // at most one in-flight mutation
  const typeId = Number(el<HTMLSelectElement>("type-select").value);
  const state = el<HTMLSelectElement>("state-select").value;
  const whatIf = el<HTMLInputElement>("what-if").checked;
  inFlight = true;
  try {
    const view = await api.answer(model.view.session_id, typeId, state, whatIf);
    model = whatIf ? previewWhatIf(model, view) : commitAnswer(model, view);
    hideError();
    render();
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      showError(`That answer is impossible under the current model: ${error.detail}`);
    } else {
      showError(describe(error));
    }
  } finally {
    inFlight = false;
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return error.message;
  return `Service unreachable: ${String(error)}`;
}

el("start").addEventListener("click", () => void startSession());
el("submit").addEventListener("click", () => void submitAnswer());
el("cancel-what-if").addEventListener("click", () => {
  if (!model) return;
  model = clearWhatIf(model);
  render();
});
el("type-select").addEventListener("change", () => {
  if (!model) return;
  model = selectType(model, Number(el<HTMLSelectElement>("type-select").value));
  refreshAnswerControls(model);
});
