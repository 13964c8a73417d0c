// DOM rendering for the console. render() rebuilds the dynamic regions from
// a ConsoleState; buildShell() creates the static skeleton once.

import type { Channel, MemoryItem } from "./api.js";
import { ConsoleState, lightBrightness } from "./store.js";

export const SILENCE_TEXT = "… the object stays silent";

export interface ViewActions {
  onAwaken: (imageRef: string) => void;
  onSend: (text: string) => void;
  onGoodbye: () => void;
  onMemoryLookup: (mode: "history" | "search", query: string) => void;
}

const PHASES = ["idle", "request", "conversation", "transformation"];

export function buildShell(root: HTMLElement, channel: Channel, actions: ViewActions): void {
  root.innerHTML = `
    <header class="topbar">
      <span data-el="connection" class="connection"></span>
      <ol data-el="phases" class="phases">
        ${PHASES.map((p) => `<li data-phase="${p}">${p}</li>`).join("")}
      </ol>
      <span data-el="light" class="light" title="light state"></span>
    </header>
    <section data-el="object-card" class="object-card" hidden>
      <h2 data-el="object-name"></h2>
      <p data-el="object-description"></p>
    </section>
    <main data-el="transcript" class="transcript" aria-live="polite"></main>
    <aside data-el="inner-pane" class="inner-pane" hidden>
      <h3>Inner thoughts</h3>
      <ul data-el="inner-list"></ul>
    </aside>
    <footer class="controls">
      <form data-el="awaken-form">
        <input data-el="image-ref" placeholder="image reference" />
        <button data-el="awaken" type="submit">Awaken</button>
      </form>
      <form data-el="say-form">
        <input data-el="say-text" placeholder="say something" autocomplete="off" />
        <button data-el="send" type="submit">Send</button>
      </form>
      <button data-el="goodbye" type="button">Goodbye</button>
    </footer>
    <section class="memories">
      <form data-el="memory-form">
        <select data-el="memory-mode">
          <option value="history">History</option>
          <option value="search">Search</option>
        </select>
        <input data-el="memory-query" placeholder="search text" />
        <button data-el="memory-go" type="submit">Look up</button>
      </form>
      <ul data-el="memory-list"></ul>
    </section>
  `;
  if (channel !== "operator") {
    // participants never see the object's private reasoning
    (root.querySelector('[data-el="inner-pane"]') as HTMLElement).remove();
  }

  const awakenForm = root.querySelector('[data-el="awaken-form"]') as HTMLFormElement;
  awakenForm.addEventListener("submit", (e) => {
    e.preventDefault();
    const input = root.querySelector('[data-el="image-ref"]') as HTMLInputElement;
    actions.onAwaken(input.value.trim() || "console-object");
  });

  const sayForm = root.querySelector('[data-el="say-form"]') as HTMLFormElement;
  sayForm.addEventListener("submit", (e) => {
    e.preventDefault();
    const input = root.querySelector('[data-el="say-text"]') as HTMLInputElement;
    const text = input.value.trim();
    if (!text) return;
    input.value = "";
    actions.onSend(text);
  });

  (root.querySelector('[data-el="goodbye"]') as HTMLButtonElement).addEventListener("click", () =>
    actions.onGoodbye()
  );

  const memoryForm = root.querySelector('[data-el="memory-form"]') as HTMLFormElement;
  const memoryMode = root.querySelector('[data-el="memory-mode"]') as HTMLSelectElement;
  const memoryQuery = root.querySelector('[data-el="memory-query"]') as HTMLInputElement;
  memoryForm.addEventListener("submit", (e) => {
    e.preventDefault();
    const mode = memoryMode.value as "history" | "search";
    const query = memoryQuery.value.trim();
    if (mode === "search" && !query) return;
    actions.onMemoryLookup(mode, query);
  });
}

export function render(root: HTMLElement, state: ConsoleState): void {
  const connection = root.querySelector('[data-el="connection"]') as HTMLElement;
  connection.textContent = state.connection;
  connection.dataset.state = state.connection;

  for (const li of root.querySelectorAll<HTMLElement>('[data-el="phases"] li')) {
    li.classList.toggle("active", li.dataset.phase === state.phase);
  }

  const light = root.querySelector('[data-el="light"]') as HTMLElement;
  light.dataset.mode = state.light.mode;
  const brightness = lightBrightness(state.light, Date.now() / 1000);
  light.style.opacity = brightness.toFixed(3);

  const card = root.querySelector('[data-el="object-card"]') as HTMLElement;
  if (state.object) {
    card.hidden = false;
    (root.querySelector('[data-el="object-name"]') as HTMLElement).textContent = state.object.name;
    (root.querySelector('[data-el="object-description"]') as HTMLElement).textContent =
      state.object.description;
  } else {
    card.hidden = true;
  }

  const transcript = root.querySelector('[data-el="transcript"]') as HTMLElement;
  transcript.innerHTML = "";
  for (const entry of state.transcript) {
    const bubble = document.createElement("div");
    bubble.className = `bubble speaker-${entry.speaker}`;
    if (entry.silence) {
      bubble.classList.add("silence");
      bubble.textContent = SILENCE_TEXT;
    } else {
      bubble.textContent = entry.text ?? "";
    }
    transcript.appendChild(bubble);
  }
  if (state.awaitingTurn) {
    const pending = document.createElement("div");
    pending.className = "bubble pending";
    pending.textContent = "…";
    transcript.appendChild(pending);
  }

  const innerList = root.querySelector('[data-el="inner-list"]');
  if (innerList) {
    innerList.innerHTML = "";
    for (const entry of state.inner) {
      const li = document.createElement("li");
      li.textContent = `(${entry.intent.toFixed(2)}) ${entry.text}`;
      innerList.appendChild(li);
    }
  }

  const canTalk = state.phase === "conversation";
  (root.querySelector('[data-el="say-text"]') as HTMLInputElement).disabled = !canTalk;
  (root.querySelector('[data-el="send"]') as HTMLButtonElement).disabled = !canTalk;
  (root.querySelector('[data-el="goodbye"]') as HTMLButtonElement).disabled = !canTalk;
  (root.querySelector('[data-el="awaken"]') as HTMLButtonElement).disabled = state.phase !== "idle";
}

export function renderMemories(root: HTMLElement, items: MemoryItem[]): void {
  const list = root.querySelector('[data-el="memory-list"]') as HTMLElement;
  list.innerHTML = "";
  if (items.length === 0) {
    const li = document.createElement("li");
    li.className = "empty";
    li.textContent = "no memories";
    list.appendChild(li);
    return;
  }
  for (const item of items) {
    const li = document.createElement("li");
    const score = item.score != null ? ` [${item.score.toFixed(3)}]` : "";
    li.textContent = `${item.created_at} ${item.speaker}: ${item.text}${score}`;
    list.appendChild(li);
  }
}
