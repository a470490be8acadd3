// Three-pane client: Group Chat, Copilot tab, and the HUD bar at the
// bottom. All state comes from server frames; the DOM is re-rendered from
// the view, never the other way around.

import { ApiClient, ApiError } from "./api.js";
import { renderHud } from "./hud.js";
import {
  applyFrame,
  ClientView,
  initialView,
  isOnCooldown,
  setTab,
  Tab,
} from "./state.js";
import { GameStream, StreamOptions } from "./socket.js";
import type { CopilotAnswer, Frame } from "./types.js";

export interface AppHandle {
  view: ClientView;
  stream: GameStream;
  sessionId: string;
  refresh(): void;
  submitMove(procId: string): Promise<void>;
  sendChat(text: string): Promise<void>;
  askCopilot(text: string): Promise<void>;
  close(): void;
}

const LAYOUT = `
  <nav class="tabs">
    <button id="tab-game" class="tab active">Group Chat</button>
    <button id="tab-copilot" class="tab">Copilot</button>
  </nav>
  <section id="pane-game" class="pane">
    <ul id="game-messages" class="messages"></ul>
    <form id="game-form">
      <input id="game-input" placeholder="Talk to your team…" autocomplete="off" />
      <button type="submit">Send</button>
    </form>
  </section>
  <section id="pane-copilot" class="pane" hidden>
    <ul id="copilot-messages" class="messages"></ul>
    <form id="copilot-form">
      <input id="copilot-input" placeholder="Ask the copilot…" autocomplete="off" />
      <button type="submit">Ask</button>
    </form>
  </section>
  <div id="procedures" class="procedures"></div>
  <div id="notice" class="notice" hidden></div>
  <footer id="hud-bar" class="hud"></footer>
`;

function mustFind<T extends HTMLElement>(root: HTMLElement, selector: string): T {
  const el = root.querySelector<T>(selector);
  if (!el) throw new Error(`layout is missing ${selector}`);
  return el;
}

export async function mountApp(
  root: HTMLElement,
  api: ApiClient,
  options: { seed?: number; topology?: string; stream?: StreamOptions } = {},
): Promise<AppHandle> {
  root.innerHTML = LAYOUT;
  const gameList = mustFind<HTMLUListElement>(root, "#game-messages");
  const copilotList = mustFind<HTMLUListElement>(root, "#copilot-messages");
  const gamePane = mustFind<HTMLElement>(root, "#pane-game");
  const copilotPane = mustFind<HTMLElement>(root, "#pane-copilot");
  const tabGame = mustFind<HTMLButtonElement>(root, "#tab-game");
  const tabCopilot = mustFind<HTMLButtonElement>(root, "#tab-copilot");
  const procedures = mustFind<HTMLDivElement>(root, "#procedures");
  const hudBar = mustFind<HTMLElement>(root, "#hud-bar");
  const notice = mustFind<HTMLDivElement>(root, "#notice");

  const view = initialView();
  const session = await api.createSession({
    seed: options.seed,
    topology: options.topology,
  });
  const citations = new Map<number, string[]>(); // copilot message seq -> cited ids
  let lastCopilotAnswer: CopilotAnswer | null = null;

  function showNotice(text: string): void {
    notice.textContent = text;
    notice.hidden = false;
  }

  function renderMessages(): void {
    for (const [channel, list] of [
      ["Game", gameList],
      ["Copilot", copilotList],
    ] as const) {
      list.innerHTML = "";
      for (const msg of view.messages[channel]) {
        const li = document.createElement("li");
        li.className = `msg role-${msg.role_kind.toLowerCase()}`;
        const who = document.createElement("strong");
        who.textContent = msg.sender;
        const body = document.createElement("span");
        body.textContent = ` ${msg.content}`;
        li.append(who, body);
        if (channel === "Copilot") {
          const cited = citations.get(msg.seq);
          if (cited && cited.length) {
            const cite = document.createElement("div");
            cite.className = "citations";
            cite.textContent = `sources: ${cited.map((c) => `[${c}]`).join(" ")}`;
            li.append(cite);
          }
        }
        list.append(li);
      }
    }
  }

  function renderProcedures(): void {
    procedures.innerHTML = "";
    if (!view.hud) return;
    const playable = view.hud.status === "InProgress";
    for (const procId of Object.keys(view.hud.cooldowns)) {
      const button = document.createElement("button");
      button.className = "proc";
      button.dataset.procId = procId;
      const cooling = isOnCooldown(view, procId);
      button.disabled = cooling || !playable;
      const turns = view.hud.cooldowns[procId];
      button.textContent = cooling ? `${procId} (${turns})` : procId;
      if (cooling) button.title = `on cooldown for ${turns} more turn(s)`;
      button.addEventListener("click", () => void handle.submitMove(procId));
      procedures.append(button);
    }
  }

  function renderTabs(): void {
    const game = view.activeTab === "GameChat";
    gamePane.hidden = !game;
    copilotPane.hidden = game;
    tabGame.classList.toggle("active", game);
    tabCopilot.classList.toggle("active", !game);
  }

  function refresh(): void {
    hudBar.textContent = renderHud(view.hud);
    renderMessages();
    renderProcedures();
    renderTabs();
  }

  function onFrame(frame: Frame): void {
    applyFrame(view, frame);
    if (
      frame.kind === "chat" &&
      frame.payload.channel === "Copilot" &&
      frame.payload.role_kind === "Copilot" &&
      lastCopilotAnswer &&
      frame.payload.content === lastCopilotAnswer.answer_text
    ) {
      citations.set(frame.seq, lastCopilotAnswer.cited_snippet_ids);
    }
    refresh();
  }

  const stream = new GameStream(
    (lastSeq) => api.streamUrl(session.session_id, lastSeq),
    onFrame,
    options.stream ?? {},
  );
  stream.connect();

  const handle: AppHandle = {
    view,
    stream,
    sessionId: session.session_id,
    refresh,
    async submitMove(procId: string): Promise<void> {
      if (!view.hud || isOnCooldown(view, procId) || view.hud.status !== "InProgress") {
        return; // client-side guard: no request for unclickable procedures
      }
      view.pendingRequest = `turn:${procId}`;
      try {
        await api.submitTurn(session.session_id, procId);
        notice.hidden = true;
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          const detail = err.detail as { remaining?: number; error?: string };
          showNotice(
            detail?.error === "ProcedureOnCooldown"
              ? `${procId} is cooling down for ${detail.remaining} more turn(s)`
              : "the drill is already over",
          );
        } else {
          showNotice(String(err));
        }
      } finally {
        view.pendingRequest = null;
        refresh();
      }
    },
    async sendChat(text: string): Promise<void> {
      if (!text.trim()) return;
      await api.sendChat(session.session_id, text);
    },
    async askCopilot(text: string): Promise<void> {
      if (!text.trim()) return;
      lastCopilotAnswer = await api.askCopilot(session.session_id, text);
      refresh();
    },
    close(): void {
      stream.close();
    },
  };

  tabGame.addEventListener("click", () => {
    setTab(view, "GameChat" as Tab);
    renderTabs();
  });
  tabCopilot.addEventListener("click", () => {
    setTab(view, "CopilotChat" as Tab);
    renderTabs();
  });
  mustFind<HTMLFormElement>(root, "#game-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const input = mustFind<HTMLInputElement>(root, "#game-input");
    void handle.sendChat(input.value);
    input.value = "";
  });
  mustFind<HTMLFormElement>(root, "#copilot-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const input = mustFind<HTMLInputElement>(root, "#copilot-input");
    void handle.askCopilot(input.value);
    input.value = "";
  });

  refresh();
  return handle;
}
