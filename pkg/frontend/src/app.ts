/** DOM wiring: start screen (fixture picker), comparison screen, result.
 *
 * Three screens driven by SessionViewModel; all data comes from the
 * service. Keyboard shortcuts on the comparison screen: 1 = Audio 1,
 * 2 = Audio 2, 0 = Same (active only once both clips have been played).
 */

import { ApiClient } from "./api.js";
import { BAND_LABELS, FIXTURE_SUBJECTS, parsePrescription } from "./fixtures.js";
import { SessionViewModel, choiceForKey } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

export function mountApp(root: HTMLElement, serviceUrl: string): void {
  const api = new ApiClient(serviceUrl);
  const vm = new SessionViewModel(api);

  root.innerHTML = `
    <section id="start-screen">
      <h1>Fitting session</h1>
      <label>Prescription
        <select id="fixture-picker">
          <option value="">Custom…</option>
          ${FIXTURE_SUBJECTS.map(
            (s) =>
              `<option value="${s.subject}">Subject ${s.subject}: [${s.standardGainsDb.join(", ")}] dB</option>`,
          ).join("")}
        </select>
      </label>
      <label>Gains (dB, ${BAND_LABELS.join(" / ")})
        <input id="prescription-input" placeholder="4, 2, 12, 30, 28" />
      </label>
      <button id="start-button">Start</button>
      <p id="start-error" role="alert"></p>
    </section>
    <section id="comparison-screen" hidden>
      <p id="episode-label"></p>
      <progress id="progress-bar" max="1" value="0"></progress>
      <div>
        <button id="play-a">Play Audio 1</button>
        <button id="play-b">Play Audio 2</button>
      </div>
      <audio id="audio-a"></audio>
      <audio id="audio-b"></audio>
      <div>
        <button id="choose-a" disabled>Audio 1 (1)</button>
        <button id="choose-b" disabled>Audio 2 (2)</button>
        <button id="choose-same" disabled>Same (0)</button>
      </div>
      <p id="comparison-error" role="alert"></p>
    </section>
    <section id="result-screen" hidden>
      <h1>Personalized gains</h1>
      <table id="result-table">
        <thead>
          <tr><th>Band</th><th>Prescription (dB)</th><th>Personalized (dB)</th><th>Offset (dB)</th></tr>
        </thead>
        <tbody></tbody>
      </table>
    </section>
  `;

  const screens = {
    start: el<HTMLElement>("start-screen"),
    comparison: el<HTMLElement>("comparison-screen"),
    result: el<HTMLElement>("result-screen"),
  };

  function showScreen(): void {
    screens.start.hidden = vm.screen !== "start";
    screens.comparison.hidden = vm.screen !== "comparison";
    screens.result.hidden = vm.screen !== "result";
  }

  function renderComparison(): void {
    const view = vm.view();
    el<HTMLParagraphElement>("episode-label").textContent =
      `Episode ${view.episode} / ${view.episodes}`;
    el<HTMLProgressElement>("progress-bar").value = view.progress;
    el<HTMLAudioElement>("audio-a").src = view.audioUrlA;
    el<HTMLAudioElement>("audio-b").src = view.audioUrlB;
    for (const id of ["choose-a", "choose-b", "choose-same"]) {
      el<HTMLButtonElement>(id).disabled = !view.choicesEnabled;
    }
  }

  function renderResult(): void {
    const body = el<HTMLTableElement>("result-table").tBodies[0];
    body.innerHTML = vm
      .resultRows()
      .map(
        (row) =>
          `<tr><td>${BAND_LABELS[row.band - 1]}</td>` +
          `<td>${row.prescriptionDb.toFixed(1)}</td>` +
          `<td>${row.personalizedDb.toFixed(1)}</td>` +
          `<td>${row.offsetDb >= 0 ? "+" : ""}${row.offsetDb.toFixed(1)}</td></tr>`,
      )
      .join("");
  }

  function render(): void {
    showScreen();
    if (vm.screen === "comparison") {
      renderComparison();
    } else if (vm.screen === "result") {
      renderResult();
    }
  }

  el<HTMLSelectElement>("fixture-picker").addEventListener("change", (event) => {
    const value = (event.target as HTMLSelectElement).value;
    const fixture = FIXTURE_SUBJECTS.find((s) => String(s.subject) === value);
    el<HTMLInputElement>("prescription-input").value = fixture
      ? fixture.standardGainsDb.join(", ")
      : "";
  });

  el<HTMLButtonElement>("start-button").addEventListener("click", async () => {
    const error = el<HTMLParagraphElement>("start-error");
    error.textContent = "";
    try {
      const prescription = parsePrescription(
        el<HTMLInputElement>("prescription-input").value,
      );
      await vm.start({ prescription_db: prescription });
      render();
    } catch (exc) {
      error.textContent = String(exc instanceof Error ? exc.message : exc);
    }
  });

  function playSide(side: "a" | "b"): void {
    const audio = el<HTMLAudioElement>(`audio-${side}`);
    void audio.play();
    vm.markPlayed(side);
    renderComparison();
  }

  el<HTMLButtonElement>("play-a").addEventListener("click", () => playSide("a"));
  el<HTMLButtonElement>("play-b").addEventListener("click", () => playSide("b"));

  async function choose(choice: "A" | "B" | "Same"): Promise<void> {
    const error = el<HTMLParagraphElement>("comparison-error");
    error.textContent = "";
    try {
      await vm.submit(choice);
      render();
    } catch (exc) {
      error.textContent = String(exc instanceof Error ? exc.message : exc);
    }
  }

  el<HTMLButtonElement>("choose-a").addEventListener("click", () => void choose("A"));
  el<HTMLButtonElement>("choose-b").addEventListener("click", () => void choose("B"));
  el<HTMLButtonElement>("choose-same").addEventListener("click", () => void choose("Same"));

  document.addEventListener("keydown", (event) => {
    if (vm.screen !== "comparison") {
      return;
    }
    const choice = choiceForKey(event.key);
    if (choice && vm.view().choicesEnabled) {
      void choose(choice);
    }
  });

  render();
}
