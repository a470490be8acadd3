// Compact HUD bar: a pure text projection of the latest HUD frame.

import type { HudSnapshot } from "./types.js";

export function renderHud(hud: HudSnapshot | null): string {
  if (!hud) return "Connecting…";
  const roll = hud.last_roll
    ? `${hud.last_roll.raw}+${hud.last_roll.modifier}=${hud.last_roll.total} ` +
      (hud.last_roll.success ? "(success)" : "(failure)")
    : "—";
  const revealed = hud.revealed_card_names.length
    ? hud.revealed_card_names.join(", ")
    : "none";
  const cooling = Object.entries(hud.cooldowns)
    .filter(([, turns]) => turns > 0)
    .map(([id, turns]) => `${id}:${turns}`)
    .join(" ");
  return [
    `Turn ${hud.turn}`,
    `Roll ${roll}`,
    `Revealed: ${revealed}`,
    `Cooldowns: ${cooling || "none"}`,
    `Failures: ${hud.consecutive_failures}`,
    `Ready: ${hud.remaining_procedures.join(", ") || "none"}`,
    hud.status,
  ].join("  |  ");
}
