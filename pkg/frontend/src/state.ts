// Client view state. The server's frame stream is the only source of
// truth: folding the same frames in any arrival order produces the same
// view, which is what makes reloads and reconnect replays safe.

import type { ChatMessage, Frame, HudSnapshot } from "./types.js";

export type Tab = "GameChat" | "CopilotChat";

export interface ViewMessage extends ChatMessage {
  seq: number;
}

export interface ClientView {
  activeTab: Tab;
  hud: HudSnapshot | null;
  hudSeq: number; // seq of the hud frame currently displayed
  lastSeq: number; // highest frame seq applied; reconnects resume from here
  messages: { Game: ViewMessage[]; Copilot: ViewMessage[] };
  pendingRequest: string | null;
  applied: Set<number>;
}

export function initialView(): ClientView {
  return {
    activeTab: "GameChat",
    hud: null,
    hudSeq: 0,
    lastSeq: 0,
    messages: { Game: [], Copilot: [] },
    pendingRequest: null,
    applied: new Set(),
  };
}

/** Fold one frame into the view. Duplicate seqs (replay overlap) are
 * dropped; hud frames apply last-writer-wins by seq; chat messages keep
 * strict seq order within their channel. */
export function applyFrame(view: ClientView, frame: Frame): ClientView {
  if (view.applied.has(frame.seq)) return view;
  view.applied.add(frame.seq);
  if (frame.seq > view.lastSeq) view.lastSeq = frame.seq;

  if (frame.kind === "hud") {
    if (frame.seq > view.hudSeq) {
      view.hud = frame.payload;
      view.hudSeq = frame.seq;
    }
    return view;
  }

  const list = view.messages[frame.payload.channel];
  const entry: ViewMessage = { ...frame.payload, seq: frame.seq };
  // frames usually arrive in order; insert-sort covers replays
  let i = list.length;
  while (i > 0 && list[i - 1].seq > frame.seq) i--;
  list.splice(i, 0, entry);
  return view;
}

export function applyFrames(view: ClientView, frames: Frame[]): ClientView {
  for (const frame of frames) applyFrame(view, frame);
  return view;
}

export function setTab(view: ClientView, tab: Tab): ClientView {
  view.activeTab = tab;
  return view;
}

/** Procedures that may be clicked right now. */
export function selectableProcedures(view: ClientView): string[] {
  if (!view.hud || view.hud.status !== "InProgress") return [];
  return view.hud.remaining_procedures;
}

export function isOnCooldown(view: ClientView, procId: string): boolean {
  if (!view.hud) return true;
  return (view.hud.cooldowns[procId] ?? 0) > 0;
}
