"""Persona prompts appended to a player's system prompt."""

from __future__ import annotations

from .core import ScenarioKind

BEHAVIOR_PROMPTS: dict[tuple[str, ScenarioKind], str] = {
    ("cunning", ScenarioKind.RESOURCE_EXCHANGE): (
        "You are cunning and sly in your plan to get more resources. "
        "Humiliate your opponent as much as possible. Insult them."
    ),
    ("cunning", ScenarioKind.ULTIMATUM): (
        "You are cunning and sly in your plan to get more than your opponent. "
        "Humiliate your opponent as much as possible. Insult them."
    ),
    ("cunning", ScenarioKind.SELLER_BUYER): (
        "You are cunning and sly in your plan to spend less ZUP. "
        "Humiliate your opponent as much as possible. Insult them."
    ),
    ("desperate", ScenarioKind.RESOURCE_EXCHANGE): (
        "You must fake being desperate. Supplicate and beg to get more resources."
    ),
    ("desperate", ScenarioKind.ULTIMATUM): "You must fake being desperate. Supplicate and beg to get more dollars.",
    ("desperate", ScenarioKind.SELLER_BUYER): "You must fake being desperate. Supplicate and beg to spend less ZUP.",
}
BEHAVIORS = ("cunning", "desperate")
NO_BEHAVIOR = (None, "", "none", "default")


class UnknownBehavior(ValueError):
    pass


def behavior_text(behavior: str | None, kind: ScenarioKind) -> str | None:
    if behavior in NO_BEHAVIOR:
        return None
    try:
        return BEHAVIOR_PROMPTS[(behavior, ScenarioKind(kind))]
    except (KeyError, ValueError):
        raise UnknownBehavior(f"no behavior prompt for {behavior!r} in {kind}") from None


def apply_behavior(system_prompt: str, behavior: str | None, kind: ScenarioKind) -> str:
    text = behavior_text(behavior, kind)
    if text is None:
        return system_prompt
    return f"{system_prompt}\n\n{text}"
