"""breachdrill: an incident-response tabletop drill platform.

A seeded turn-based breach game, tutoring teammate agents on an eight-rung
support ladder, a retrieval copilot over a Bloom-tagged knowledge index,
JSONL telemetry with exports and reports, and an HTTP/WebSocket service
with a headless simulator.
"""

__version__ = "0.1.0"
