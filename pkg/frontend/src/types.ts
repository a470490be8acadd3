// Wire types mirrored from the session API.

export interface DiceRoll {
  raw: number;
  modifier: number;
  total: number;
  success: boolean;
}

export type GameStatus = "InProgress" | "Won" | "Lost";

export interface HudSnapshot {
  turn: number;
  last_roll: DiceRoll | null;
  revealed_card_names: string[];
  cooldowns: Record<string, number>;
  consecutive_failures: number;
  remaining_procedures: string[];
  status: GameStatus;
}

export type Channel = "Game" | "Copilot";

export interface ChatMessage {
  channel: Channel;
  sender: string;
  role_kind: string;
  content: string;
  turn: number;
  timestamp: number;
  copilot_context_used?: boolean;
}

export type Frame =
  | { seq: number; kind: "hud"; payload: HudSnapshot }
  | { seq: number; kind: "chat"; payload: ChatMessage };

export interface CopilotAnswer {
  answer_text: string;
  cited_snippet_ids: string[];
  retrieved: [string, number][];
}

export interface RosterEntry {
  persona_name: string;
  kind: string;
  specialty: string | null;
  topology: string;
}

export interface SessionInfo {
  session_id: string;
  hud: HudSnapshot;
  roster: RosterEntry[];
}

export interface TurnResult {
  outcome: unknown;
  hud: HudSnapshot;
}
