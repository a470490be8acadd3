"""Eight-step support ladder for the teammate agents.

Support escalates one rung at a time when the learner struggles (a failed
turn or an explicit request for help) and fades one rung per success. The
top rung, revealing the full solution, is gated: it only opens once the
session's objectives are met or the session is ending.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class BloomProcess(str, Enum):
    REMEMBER = "Remember"
    UNDERSTAND = "Understand"
    APPLY = "Apply"
    ANALYZE = "Analyze"
    EVALUATE = "Evaluate"
    CREATE = "Create"


class ScaffoldName(str, Enum):
    WAIT_OBSERVE = "WaitObserve"
    PROMPT_SELF_EXPLANATION = "PromptSelfExplanation"
    TARGETED_QUESTIONS = "TargetedQuestions"
    ANALOGIES_CLUES = "AnalogiesClues"
    ELIMINATE_RED_HERRINGS = "EliminateRedHerrings"
    NARROW_SCOPE = "NarrowScope"
    PARTIAL_SOLUTION = "PartialSolution"
    FULL_SOLUTION = "FullSolution"


# level -> (name, Bloom cognitive process, display label). Rung 1 has no
# canonical process in the ladder; Remember is the floor it maps onto.
_LADDER: dict[int, tuple[ScaffoldName, BloomProcess, str]] = {
    1: (ScaffoldName.WAIT_OBSERVE, BloomProcess.REMEMBER, "Wait & Observe"),
    2: (ScaffoldName.PROMPT_SELF_EXPLANATION, BloomProcess.UNDERSTAND, "Prompt Self-Explanation"),
    3: (ScaffoldName.TARGETED_QUESTIONS, BloomProcess.ANALYZE, "Ask Targeted Questions"),
    4: (ScaffoldName.ANALOGIES_CLUES, BloomProcess.APPLY, "Offer Analogies or Clues"),
    5: (ScaffoldName.ELIMINATE_RED_HERRINGS, BloomProcess.EVALUATE, "Eliminate Red Herrings"),
    6: (ScaffoldName.NARROW_SCOPE, BloomProcess.EVALUATE, "Narrow the Scope"),
    7: (ScaffoldName.PARTIAL_SOLUTION, BloomProcess.APPLY, "Reveal Partial Solutions"),
    8: (ScaffoldName.FULL_SOLUTION, BloomProcess.CREATE, "Reveal Full Solution"),
}

MIN_LEVEL = 1
MAX_LEVEL = 8
MAX_UNGATED_LEVEL = 7


@dataclass(frozen=True)
class ScaffoldLevel:
    level: int

    def __post_init__(self) -> None:
        if self.level not in _LADDER:
            raise ValueError(f"scaffold level must be in [1, 8], got {self.level}")

    @property
    def name(self) -> ScaffoldName:
        return _LADDER[self.level][0]

    @property
    def bloom_process(self) -> BloomProcess:
        return _LADDER[self.level][1]

    @property
    def display_name(self) -> str:
        return _LADDER[self.level][2]

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "name": self.name.value,
            "bloom_process": self.bloom_process.value,
            "display_name": self.display_name,
        }


@dataclass(frozen=True)
class LearnerSignals:
    """What just happened, from the support policy's point of view.

    consecutive_failures > 0 means the most recent turn failed;
    successes_since_last_escalation > 0 (with no failure) means it
    succeeded; explicit_help_requests counts direct asks since the last
    adjustment.
    """

    consecutive_failures: int = 0
    successes_since_last_escalation: int = 0
    explicit_help_requests: int = 0
    objectives_met: bool = False
    session_ending: bool = False

    def __post_init__(self) -> None:
        if min(self.consecutive_failures, self.successes_since_last_escalation,
               self.explicit_help_requests) < 0:
            raise ValueError("learner signal counters must be non-negative")


def scaffold_policy(current: ScaffoldLevel, signals: LearnerSignals) -> ScaffoldLevel:
    """One adjustment step of the support ladder.

    Escalate one rung on a failed turn or an explicit help request; fade one
    rung on a success; otherwise hold. Escalation caps at rung 7 unless the
    full-solution gate (objectives met, or the session ending) is open.
    """
    level = current.level
    if signals.explicit_help_requests > 0 or signals.consecutive_failures > 0:
        level += 1
    elif signals.successes_since_last_escalation > 0:
        level -= 1

    gate_open = signals.objectives_met or signals.session_ending
    cap = MAX_LEVEL if gate_open else MAX_UNGATED_LEVEL
    level = max(MIN_LEVEL, min(cap, level))
    return ScaffoldLevel(level)
